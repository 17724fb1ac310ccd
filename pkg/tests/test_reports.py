"""
Tests for CSV/JSON result emission
"""
import csv
import json

import numpy as np
import pytest

from network_formation.analysis import EnsembleSummary, summarize_ensemble
from network_formation.core import ProbabilityMatrix
from network_formation.engine import run_ensemble
from network_formation.exceptions import ConfigurationError, EmissionError
from network_formation.reports import (
    emit,
    matrix_rows,
    output_stem,
    render_summary,
    summary_rows,
    write_matrix_csv,
)


@pytest.fixture
def ensemble(friends2, dynamics_factory):
    records = run_ensemble(4, friends2, dynamics_factory(), 30, runs=3, seed=5)
    return summarize_ensemble(records), records


def test_matrix_rows_format():
    rows = matrix_rows(ProbabilityMatrix.uniform(3).p)
    assert rows[0] == ['0', '0.500000', '0.500000']
    assert rows[2][2] == '0'


def test_matrix_csv_shape(tmp_path):
    p = ProbabilityMatrix.uniform(5).p
    path = write_matrix_csv(tmp_path / 'm.csv', p)
    with open(path, newline='') as handle:
        rows = list(csv.reader(handle))
    assert len(rows) == 5
    assert all(len(row) == 5 for row in rows)
    assert [rows[i][i] for i in range(5)] == ['0'] * 5


def test_output_stem_is_slugified():
    assert output_stem({'preset': 'Friends1 N3', 'seed': 7}) == 'friends1-n3-seed-7'
    assert output_stem({'model': 'staghunt', 'seed': 0}) == 'staghunt-seed-0'


class TestEmit:
    def test_json(self, tmp_path, ensemble):
        summary, records = ensemble
        paths = emit(summary, records, {'model': 'friends2', 'seed': 5}, tmp_path, 'json')
        assert [p.name for p in paths] == ['matrices.json', 'summary.json']
        document = json.loads(paths[-1].read_text())
        assert set(document) == {'config', 'class_counts', 'absorption', 'statistics'}
        assert document['config']['seed'] == 5
        matrices = json.loads(paths[0].read_text())
        assert np.array(matrices).shape == (3, 4, 4)

    def test_csv(self, tmp_path, ensemble):
        summary, records = ensemble
        paths = emit(summary, records, {'model': 'friends2', 'seed': 5}, tmp_path, 'csv')
        assert [p.name for p in paths] == ['replica-0.csv', 'replica-1.csv', 'replica-2.csv',
                                           'summary.csv']
        assert paths[0].parent.name == 'matrices'
        rows = paths[-1].read_text().splitlines()
        assert rows[0] == 'section,key,value'

    def test_identical_inputs_give_identical_bytes(self, tmp_path, ensemble):
        summary, records = ensemble
        first = emit(summary, records, {'seed': 5}, tmp_path / 'a', 'json')
        second = emit(summary, records, {'seed': 5}, tmp_path / 'b', 'json')
        for a, b in zip(first, second):
            assert a.read_bytes() == b.read_bytes()

    def test_unknown_format(self, tmp_path, ensemble):
        summary, records = ensemble
        with pytest.raises(ConfigurationError, match="format"):
            emit(summary, records, {}, tmp_path, 'xml')

    def test_write_failure_names_path(self, tmp_path, ensemble, mocker):
        summary, records = ensemble
        mocker.patch('network_formation.reports.open', side_effect=PermissionError('denied'),
                     create=True)
        with pytest.raises(EmissionError) as excinfo:
            emit(summary, records, {'seed': 5}, tmp_path, 'json')
        assert excinfo.value.path.name == 'matrices.json'
        assert 'denied' in str(excinfo.value)

    def test_summary_without_records(self, tmp_path):
        summary = EnsembleSummary(10, statistics={'balls': 2.0})
        paths = emit(summary, [], {'preset': 'ehrenfest-mixing'}, tmp_path, 'csv')
        assert [p.name for p in paths] == ['summary.csv']


def test_summary_rows_expand_lists():
    summary = EnsembleSummary(1, statistics={'vector': [0.25, 0.5, 0.25], 'x': 1.0})
    rows = summary_rows(summary)
    assert ['statistics', 'vector[1]', '0.5'] in rows
    assert ['statistics', 'x', '1'] in rows


def test_render_summary():
    summary = EnsembleSummary(2, class_counts={'Pairing': 2}, statistics={'v': [0.5]})
    text = render_summary(summary)
    assert 'replicas: 2' in text
    assert 'Pairing: 2' in text
    assert 'v: [0.5]' in text


class TestStatisticValues:
    def test_undefined_statistic_is_null_in_json(self, tmp_path):
        summary = EnsembleSummary(4, statistics={'ratio': float('nan'), 'gap': float('inf'),
                                                 'pairs': [1.0, float('nan')]})
        paths = emit(summary, [], {'preset': 'friends2-n3'}, tmp_path, 'json')
        text = paths[-1].read_text()
        assert 'NaN' not in text
        assert 'Infinity' not in text
        document = json.loads(text)
        assert document['statistics']['ratio'] is None
        assert document['statistics']['gap'] is None
        assert document['statistics']['pairs'] == [1.0, None]

    def test_undefined_statistic_is_blank_in_csv(self, tmp_path):
        summary = EnsembleSummary(4, statistics={'ratio': float('nan')})
        assert ['statistics', 'ratio', ''] in summary_rows(summary)
        assert 'ratio: undefined' in render_summary(summary)

    def test_small_pvalues_keep_significant_digits(self, tmp_path):
        summary = EnsembleSummary(4, statistics={'ks_pvalue': 3.25e-9})
        paths = emit(summary, [], {'preset': 'friends1-n3'}, tmp_path, 'json')
        document = json.loads(paths[-1].read_text())
        assert document['statistics']['ks_pvalue'] == pytest.approx(3.25e-9)
        assert ['statistics', 'ks_pvalue', '3.25e-09'] in summary_rows(summary)
