import io

import pytest

from fase.bench import CSV_HEADER, make_case, median_seconds, run_bench, write_csv
from fase.errors import ParameterError
from fase.opcount import predict_op_counts


def test_median_seconds_runs_warmup_and_repeats():
    calls = []
    seconds = median_seconds(lambda: calls.append(1), warmup=2, repeat=5)
    assert len(calls) == 7
    assert seconds >= 0.0
    with pytest.raises(ParameterError):
        median_seconds(lambda: None, repeat=0)


def test_case_geometry():
    case = make_case('dct', 16, 40, None, seed=1)
    assert case.dictionary.size == 40
    assert case.mask.lost_count == 16
    assert case.signal.min() >= 0.0 and case.signal.max() <= 255.0


def test_measured_counts_equal_predictions():
    rows = run_bench([8], [1, 4], dict_sizes=(None, 32), warmup=0, repeat=1)
    assert [(r.algo, r.dict_size, r.iters) for r in rows] == [
        ('se', 64, 1), ('fase', 64, 1), ('se', 64, 4), ('fase', 64, 4),
        ('se', 32, 1), ('fase', 32, 1), ('se', 32, 4), ('fase', 32, 4),
    ]
    for row in rows:
        assert row.measured == row.predicted == predict_op_counts(row.algo, 8, 8, row.dict_size, row.iters)


def test_table_rows():
    rows = run_bench([8], [2], table_rows=True, algos=('fase',), warmup=0, repeat=1)
    table, fase = rows
    assert (table.algo, table.iters) == ('table_gen', 0)
    assert table.measured == table.predicted
    assert fase.algo == 'fase'


def test_fft_table_rows_have_no_measured_counts():
    rows = run_bench([8], [2], dict_spec='dft', table_rows=True, use_fft=True, algos=('fase',),
                     warmup=0, repeat=1, measure=False)
    assert rows[0].algo == 'table_gen' and rows[0].measured is None
    assert rows[1].measured is None


def test_unknown_algorithm():
    with pytest.raises(ParameterError):
        run_bench([8], [1], algos=('omp',), warmup=0, repeat=1)


def test_csv_layout():
    rows = run_bench([4], [1], warmup=0, repeat=1)
    stream = io.StringIO()
    write_csv(rows, stream)
    lines = stream.getvalue().splitlines()
    assert lines[0] == 'algo,M,N,dict,iters,seconds,mul_pred,add_pred,other_pred,mul_meas,add_meas,other_meas'
    assert len(lines) == 3
    fields = lines[1].split(',')
    assert len(fields) == len(CSV_HEADER)
    assert fields[:5] == ['se', '4', '4', '16', '1']
    assert fields[6:9] == fields[9:12]
