"""
Command-line front end

Configuration is layered: built-in defaults, then preset defaults, then a
YAML/JSON config file, then command-line flags.
"""
import argparse
import logging
import sys
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import yaml

from .analysis import EnsembleSummary
from .core import DynamicsConfig, Rule
from .exceptions import ConfigurationError, NetworkFormationError
from .presets import MODELS, all_presets, execute, get_preset
from .reports import FORMATS, emit, render_summary
from .utils import configure_logging, is_set
from .version import VERSION

logger = logging.getLogger(__name__)

LOG_LEVELS = ('DEBUG', 'INFO', 'WARNING', 'ERROR', 'CRITICAL')


def integer(value: Any) -> int:
    """Accept 10000, '10000', '1e4' and 1e4 but not 2.5 or booleans"""
    if isinstance(value, bool):
        raise ValueError(f"expected an integer, got {value!r}")
    if isinstance(value, str):
        text = value.strip().replace('_', '')
        try:
            return int(text)
        except ValueError:
            value = float(text)
    if isinstance(value, float):
        if not value.is_integer():
            raise ValueError(f"expected an integer, got {value!r}")
        return int(value)
    return int(value)


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to reproduce one ensemble run"""
    model: str = 'friends1'
    agents: int = 3
    rounds: int = 1_000
    runs: int = 1
    seed: int = 0
    discount: float = 1.0
    noise: float = 0.0
    revision_prob: float = 0.0
    init_weight: float = 1.0
    graph_eps: Optional[float] = None
    fixation_tol: float = 0.01
    stride: int = 10
    out: str = 'results'
    format: str = 'json'
    stag_count: Optional[int] = None
    workers: int = 1
    log_level: str = 'WARNING'
    preset: Optional[str] = None

    def __post_init__(self):
        if self.model not in MODELS:
            raise ConfigurationError(
                f"unknown model '{self.model}', expected one of {', '.join(MODELS)}", key='model'
            )
        for key, minimum in (('agents', 2), ('rounds', 0), ('runs', 1), ('stride', 1),
                             ('workers', 1)):
            if getattr(self, key) < minimum:
                raise ConfigurationError(f"must be >= {minimum}, got {getattr(self, key)}", key=key)
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigurationError(f"must be a 64-bit unsigned integer, got {self.seed}", key='seed')
        if not 0.0 < self.fixation_tol < 1.0:
            raise ConfigurationError(f"must be in (0, 1), got {self.fixation_tol}", key='fixation_tol')
        if self.format not in FORMATS:
            raise ConfigurationError(
                f"must be one of {', '.join(FORMATS)}, got '{self.format}'", key='format'
            )
        if self.log_level.upper() not in LOG_LEVELS:
            raise ConfigurationError(f"unknown level '{self.log_level}'", key='log_level')
        if self.stag_count is not None and not 0 <= self.stag_count <= self.agents:
            raise ConfigurationError(
                f"must be between 0 and {self.agents}, got {self.stag_count}", key='stag_count'
            )
        dynamics = self.dynamics()
        dynamics.graph_threshold(self.agents)
        if dynamics.rule is Rule.TRANSFER:
            if self.agents != 3:
                raise ConfigurationError("the transfer model needs exactly 3 agents", key='agents')
            if not float(self.init_weight).is_integer():
                raise ConfigurationError("the transfer model needs integer weights",
                                         key='init_weight')

    def dynamics(self) -> DynamicsConfig:
        return DynamicsConfig(
            rule=MODELS[self.model][1],
            discount=self.discount,
            noise=self.noise,
            revision_prob=self.revision_prob,
            graph_eps=self.graph_eps,
            init_weight=self.init_weight,
        )

    def as_dict(self) -> Dict[str, Any]:
        return asdict(self)


_CASTS = {
    'model': str, 'agents': integer, 'rounds': integer, 'runs': integer, 'seed': integer,
    'discount': float, 'noise': float, 'revision_prob': float, 'init_weight': float,
    'graph_eps': float, 'fixation_tol': float, 'stride': integer, 'out': str, 'format': str,
    'stag_count': integer, 'workers': integer, 'log_level': str, 'preset': str,
}
_NULLABLE = ('graph_eps', 'stag_count', 'preset')


def _coerce(values: Dict[str, Any], source: str) -> Dict[str, Any]:
    coerced = {}
    for key, value in values.items():
        if key not in _CASTS:
            raise ConfigurationError(f"unknown configuration key in {source}", key=key)
        if value is None and key in _NULLABLE:
            coerced[key] = None
            continue
        try:
            coerced[key] = _CASTS[key](value)
        except (TypeError, ValueError):
            raise ConfigurationError(f"cannot interpret {value!r} from {source}", key=key) from None
    return coerced


def load_config_file(path) -> Dict[str, Any]:
    """Read a YAML (or JSON) mapping of configuration keys"""
    path = Path(path)
    try:
        with open(path, 'r', encoding='utf-8') as handle:
            data = yaml.safe_load(handle)
    except OSError as exc:
        raise ConfigurationError(f"cannot read {path}: {exc.strerror or exc}", key='config') from exc
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"cannot parse {path}: {exc}", key='config') from exc
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigurationError(f"{path} must contain a mapping of keys", key='config')
    return _coerce(data, str(path))


def build_config(preset: Optional[str] = None, file_values: Optional[Dict[str, Any]] = None,
                 overrides: Optional[Dict[str, Any]] = None) -> ExperimentConfig:
    """Layer preset defaults, file values and overrides over the built-in defaults"""
    file_values = dict(file_values or {})
    overrides = {k: v for k, v in (overrides or {}).items() if is_set(v)}
    preset = overrides.pop('preset', None) or preset or file_values.pop('preset', None)
    file_values.pop('preset', None)
    values: Dict[str, Any] = {}
    if preset:
        values.update(get_preset(preset).defaults)
        values['preset'] = preset
    values.update(file_values)
    values.update(_coerce(overrides, 'overrides'))
    return ExperimentConfig(**values)


class _Parser(argparse.ArgumentParser):
    """Raise instead of exiting so callers decide how to report"""

    def error(self, message: str):
        raise ConfigurationError(message)


def _add_experiment_flags(parser: argparse.ArgumentParser) -> None:
    suppress = argparse.SUPPRESS
    parser.add_argument('--model', choices=sorted(MODELS), default=suppress)
    parser.add_argument('--agents', type=integer, default=suppress, help='number of agents n')
    parser.add_argument('--rounds', type=integer, default=suppress)
    parser.add_argument('--runs', type=integer, default=suppress, help='number of replicas')
    parser.add_argument('--seed', type=integer, default=suppress)
    parser.add_argument('--discount', type=float, default=suppress, help='discount d in (0, 1]')
    parser.add_argument('--noise', type=float, default=suppress, help='noise level in [0, 1)')
    parser.add_argument('--revision-prob', dest='revision_prob', type=float, default=suppress,
                        help='strategy revision probability q')
    parser.add_argument('--init-weight', dest='init_weight', type=float, default=suppress)
    parser.add_argument('--graph-eps', dest='graph_eps', type=float, default=suppress,
                        help='edge threshold, default 1/(4n)')
    parser.add_argument('--fixation-tol', dest='fixation_tol', type=float, default=suppress)
    parser.add_argument('--stride', type=integer, default=suppress, help='snapshot stride')
    parser.add_argument('--out', default=suppress, help='output directory')
    parser.add_argument('--format', choices=FORMATS, default=suppress)
    parser.add_argument('--config', dest='config_file', default=suppress,
                        help='YAML or JSON file of configuration keys')
    parser.add_argument('--stag-count', dest='stag_count', type=integer, default=suppress)
    parser.add_argument('--workers', type=integer, default=suppress)
    parser.add_argument('--log-level', dest='log_level', choices=LOG_LEVELS, default=suppress)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog='network-formation',
                     description='Reinforcement-driven network formation experiments')
    parser.add_argument('--version', action='version', version=f'%(prog)s {VERSION}')
    _add_experiment_flags(parser)
    subparsers = parser.add_subparsers(dest='command', parser_class=_Parser)
    _add_experiment_flags(subparsers.add_parser('run', help='run an explicit configuration'))
    preset = subparsers.add_parser('preset', help='run a named experiment')
    preset.add_argument('preset', help='preset name (see list-presets)')
    _add_experiment_flags(preset)
    subparsers.add_parser('list-presets', help='list the named experiments')
    return parser


def _parse(argv: Sequence[str]) -> Tuple[str, Dict[str, Any]]:
    values = vars(build_parser().parse_args(list(argv)))
    command = values.pop('command', None) or 'run'
    return command, values


def _config_from(values: Dict[str, Any], config_file=None) -> ExperimentConfig:
    config_file = values.pop('config_file', None) or config_file
    file_values = load_config_file(config_file) if config_file else {}
    return build_config(values.pop('preset', None), file_values, values)


def parse_config(argv: Sequence[str], config_file=None) -> ExperimentConfig:
    """
    Build an ExperimentConfig from command-line arguments.

    ``["preset", "friends1-n3", "--seed", "7"]`` gives the friends1-n3
    defaults with seed 7. A ``--config`` flag takes precedence over the
    ``config_file`` argument.
    """
    command, values = _parse(argv)
    if command == 'list-presets':
        raise ConfigurationError("list-presets takes no configuration", key='command')
    return _config_from(values, config_file)


def run_experiment(config: ExperimentConfig,
                   emit_files: bool = True) -> Tuple[EnsembleSummary, List[Path]]:
    """Execute the ensemble and write its files"""
    logger.info("running %s", config.preset or config.model)
    summary, records = execute(config)
    paths = emit(summary, records, config.as_dict(), config.out, config.format) if emit_files else []
    return summary, paths


def run_preset(name: str, overrides: Optional[Dict[str, Any]] = None,
               emit_files: bool = True) -> Tuple[EnsembleSummary, List[Path]]:
    return run_experiment(build_config(preset=name, overrides=overrides), emit_files)


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        command, values = _parse(argv)
        if command == 'list-presets':
            for preset in all_presets():
                print(f"{preset.name:<28}{preset.claim}")
            return 0
        config = _config_from(values)
        configure_logging(config.log_level)
        summary, paths = run_experiment(config)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NetworkFormationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(render_summary(summary))
    for path in paths:
        print(f"wrote {path}")
    return 0
