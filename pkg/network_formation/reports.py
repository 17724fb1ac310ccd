"""
Result emission: matrix CSVs and the ensemble summary in CSV or JSON
"""
import csv
import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, List, Sequence

import numpy as np
from slugify import slugify

from . import settings
from .analysis import EnsembleSummary
from .engine import TrajectoryRecord
from .exceptions import ConfigurationError, EmissionError

logger = logging.getLogger(__name__)

FORMATS = ('csv', 'json')


class ReportConfig:
    """Configuration for emitted files"""
    FLOAT_FORMAT = settings.get('FLOAT_FORMAT', '{:.6f}')
    STATISTIC_FORMAT = settings.get('STATISTIC_FORMAT', '{:.6g}')
    SUMMARY_NAME = 'summary'
    MATRIX_DIR = 'matrices'


def format_value(value: float) -> str:
    return ReportConfig.FLOAT_FORMAT.format(float(value))


def format_statistic(value: float) -> str:
    """Significant digits, so small p-values survive; empty when undefined"""
    value = float(value)
    if not math.isfinite(value):
        return ''
    return ReportConfig.STATISTIC_FORMAT.format(value)


def matrix_rows(p: np.ndarray) -> List[List[str]]:
    """Row i holds the visit probabilities of agent i; the diagonal is written as 0"""
    p = np.asarray(p, dtype=float)
    n = p.shape[0]
    return [['0' if i == j else format_value(p[i, j]) for j in range(n)] for i in range(n)]


def output_stem(config: Dict[str, Any]) -> str:
    name = config.get('preset') or config.get('model') or 'experiment'
    return slugify(f"{name}-seed-{config.get('seed', 0)}")


def _rounded(value: Any) -> Any:
    # JSON has no NaN or infinity; undefined statistics become null
    if isinstance(value, float):
        return float(format_statistic(value)) if math.isfinite(value) else None
    if isinstance(value, (list, tuple)):
        return [_rounded(v) for v in value]
    if isinstance(value, dict):
        return {k: _rounded(v) for k, v in value.items()}
    return value


def summary_document(summary: EnsembleSummary, config: Dict[str, Any]) -> Dict[str, Any]:
    document = summary.to_dict()
    document['config'] = dict(config)
    document['statistics'] = _rounded(document['statistics'])
    return document


def summary_rows(summary: EnsembleSummary) -> List[List[str]]:
    """Flat (section, key, value) rows; list statistics become one row per element"""
    rows = [['section', 'key', 'value']]
    for key in sorted(summary.class_counts):
        rows.append(['class_counts', key, str(summary.class_counts[key])])
    for key in sorted(summary.absorption):
        rows.append(['absorption', key, str(summary.absorption[key])])
    for key in sorted(summary.statistics):
        value = summary.statistics[key]
        if isinstance(value, (list, tuple)):
            rows.extend(['statistics', f"{key}[{i}]", format_statistic(v)]
                        for i, v in enumerate(value))
        else:
            rows.append(['statistics', key, format_statistic(value)])
    return rows


def _write_csv(path: Path, rows: Sequence[Sequence[str]]) -> None:
    try:
        with open(path, 'w', newline='', encoding='utf-8') as handle:
            csv.writer(handle, lineterminator='\n').writerows(rows)
    except OSError as exc:
        raise EmissionError(path, exc) from exc


def _write_json(path: Path, document: Any) -> None:
    try:
        with open(path, 'w', encoding='utf-8') as handle:
            json.dump(document, handle, indent=2, sort_keys=True, allow_nan=False)
            handle.write('\n')
    except (OSError, ValueError) as exc:
        raise EmissionError(path, exc) from exc


def write_matrix_csv(path: Path, p: np.ndarray) -> Path:
    path = Path(path)
    _write_csv(path, matrix_rows(p))
    return path


def emit(summary: EnsembleSummary, records: Sequence[TrajectoryRecord],
         config: Dict[str, Any], out_dir, fmt: str = 'json') -> List[Path]:
    """
    Write final matrices and the summary under ``out_dir/<stem>/``.

    Output depends only on its inputs, so equal seeds give byte-identical
    files.
    """
    if fmt not in FORMATS:
        raise ConfigurationError(f"must be one of {', '.join(FORMATS)}, got '{fmt}'", key='format')
    target = Path(out_dir) / output_stem(config)
    try:
        target.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise EmissionError(target, exc) from exc

    written: List[Path] = []
    if records:
        if fmt == 'csv':
            matrix_dir = target / ReportConfig.MATRIX_DIR
            try:
                matrix_dir.mkdir(exist_ok=True)
            except OSError as exc:
                raise EmissionError(matrix_dir, exc) from exc
            width = len(str(len(records) - 1))
            for k, record in enumerate(records):
                path = matrix_dir / f"replica-{k:0{width}d}.csv"
                written.append(write_matrix_csv(path, record.final_probabilities))
        else:
            path = target / f"{ReportConfig.MATRIX_DIR}.json"
            matrices = [[[float(x) for x in row] for row in matrix_rows(r.final_probabilities)]
                        for r in records]
            _write_json(path, matrices)
            written.append(path)

    path = target / f"{ReportConfig.SUMMARY_NAME}.{fmt}"
    if fmt == 'csv':
        _write_csv(path, summary_rows(summary))
    else:
        _write_json(path, summary_document(summary, config))
    written.append(path)
    logger.info("wrote %d files under %s", len(written), target)
    return written


def render_summary(summary: EnsembleSummary) -> str:
    """Human-readable summary for the terminal"""
    lines = [f"replicas: {summary.replicas}"]
    if summary.class_counts:
        lines.append("classes:")
        lines.extend(f"  {key}: {count}" for key, count in summary.class_counts.items())
    if summary.absorption:
        lines.append("absorption:")
        lines.extend(f"  {key}: {count}" for key, count in summary.absorption.items())
    if summary.statistics:
        lines.append("statistics:")
        for key in sorted(summary.statistics):
            value = summary.statistics[key]
            if isinstance(value, (list, tuple)):
                shown = ', '.join(format_statistic(v) or 'undefined' for v in value)
                lines.append(f"  {key}: [{shown}]")
            else:
                lines.append(f"  {key}: {format_statistic(value) or 'undefined'}")
    return '\n'.join(lines)
