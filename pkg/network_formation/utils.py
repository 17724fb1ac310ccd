"""
Utility functions for Network Formation
"""
import logging
from typing import Any, Union

from . import settings

LOG_FORMAT = '%(asctime)s - %(levelname)s - %(name)s - %(message)s'


class NotSet:
    """Sentinel class for values that are not set"""

    def __repr__(self) -> str:
        return 'NotSet'

    def __bool__(self) -> bool:
        return False


NOT_SET = NotSet()


def is_set(value: Any) -> bool:
    """True unless the value is the NotSet sentinel"""
    return not isinstance(value, NotSet)


def configure_logging(level: Union[str, int, None] = None) -> None:
    """Configure the root logger once for command-line use"""
    if level is None:
        level = settings.get('LOG_LEVEL')
    if isinstance(level, str):
        level = getattr(logging, level.upper(), logging.WARNING)
    logging.basicConfig(level=level, format=LOG_FORMAT, datefmt='%Y-%m-%d %H:%M:%S')
    logging.getLogger().setLevel(level)
