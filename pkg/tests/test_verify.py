import numpy as np
import pytest

from conftest import config
from fase.dictionary import generate_dictionary
from fase.errors import ParameterError, StaleTableError
from fase.fast import build_gram_tables, fase_extrapolate
from fase.grid import LossMask, build_weight_field
from fase.selective import se_extrapolate
from fase.verify import (
    check_area, check_caps, recursion_deviation, resolved_iterations, se_residual_deviation, verify_equivalence,
)


def test_dct_trials_all_pass(dct8, central_loss8):
    report = verify_equivalence(dct8, central_loss8, config(iterations=50), trials=20, dictionary_label='dct')
    assert report.passed
    assert len(report.trials) == 20
    assert all(t.resolved_iterations >= 10 for t in report.trials)
    assert report.dict_size == 64 and report.loss == (4, 4)


def test_zero_signal_is_trivially_equivalent(dct8, central_loss8):
    report = verify_equivalence(dct8, central_loss8, config(iterations=1), trials=3, signal='zero')
    assert report.passed
    assert all(t.selections_equal and t.max_coefficient_deviation == 0.0 for t in report.trials)


def test_trial_seeds_are_reproducible(dct8, central_loss8):
    cfg = config(iterations=5)
    first = verify_equivalence(dct8, central_loss8, cfg, trials=4, seed=7)
    second = verify_equivalence(dct8, central_loss8, cfg, trials=4, seed=7)
    assert [t.seed for t in first.trials] == [t.seed for t in second.trials]
    assert len({t.seed for t in first.trials}) == 4


def test_mismatched_tables_raise(dct8, central_loss8):
    tables = build_gram_tables(dct8, build_weight_field(central_loss8, 0.8))
    with pytest.raises(StaleTableError):
        verify_equivalence(dct8, central_loss8, config(iterations=5, rho_hat=0.7), trials=1, tables=tables)


def test_dft_conjugate_pairs_stay_in_step():
    dictionary = generate_dictionary('dft', 8, 8)
    report = verify_equivalence(dictionary, LossMask.central_block(8, 8, 4, 4), config(iterations=50, gamma=0.5),
                                trials=5, seed=3)
    assert report.passed


def test_recursion_deviation_is_tiny(rng, dct8, central_loss8):
    cfg = config(iterations=40)
    weight = build_weight_field(central_loss8, cfg.rho_hat)
    tables = build_gram_tables(dct8, weight)
    signal = rng.standard_normal((8, 8))
    _, trace = fase_extrapolate(signal, central_loss8, dct8, tables, cfg, record_products=True)
    assert recursion_deviation(signal, dct8, weight, trace) <= 1e-12


def test_resolved_prefix_stops_at_rounding_level(dct8):
    mask = LossMask.none_lost(8, 8)
    cfg = config(iterations=3, gamma=1.0)
    _, trace = se_extrapolate(dct8.atoms[5], mask, dct8, cfg)
    # after the exact one-step recovery only rounding noise is left
    assert resolved_iterations(trace, dct8, build_weight_field(mask, cfg.rho_hat)) == 1


def test_caps():
    dictionary = generate_dictionary('dct', 8, 8)
    check_caps(dictionary, 64, 64)
    with pytest.raises(ParameterError):
        check_caps(dictionary, 63, 64)
    with pytest.raises(ParameterError):
        check_caps(dictionary, 64, 32)


def test_report_serializes(dct8, central_loss8):
    report = verify_equivalence(dct8, central_loss8, config(iterations=3), trials=2)
    payload = report.model_dump()
    assert payload['schema_version'] == '1.0'
    assert len(payload['trials']) == 2
    assert np.isfinite(payload['trials'][0]['max_recursion_deviation'])


def test_recursive_products_follow_the_se_residual(rng, dct8, central_loss8):
    cfg = config(iterations=30)
    weight = build_weight_field(central_loss8, cfg.rho_hat)
    tables = build_gram_tables(dct8, weight)
    signal = rng.standard_normal((8, 8))
    _, se_trace = se_extrapolate(signal, central_loss8, dct8, cfg, record_residuals=True)
    _, fase_trace = fase_extrapolate(signal, central_loss8, dct8, tables, cfg, use_fft=False, record_products=True)
    resolved = resolved_iterations(se_trace, dct8, weight)
    assert resolved >= 10
    assert se_residual_deviation(dct8, weight, se_trace, fase_trace, resolved) <= 1e-9


def test_se_residual_deviation_detects_a_wrong_recursion(rng, dct8, central_loss8):
    cfg = config(iterations=5)
    weight = build_weight_field(central_loss8, cfg.rho_hat)
    tables = build_gram_tables(dct8, weight)
    signal = rng.standard_normal((8, 8))
    _, se_trace = se_extrapolate(signal, central_loss8, dct8, cfg, record_residuals=True)
    _, fase_trace = fase_extrapolate(signal, central_loss8, dct8, tables, cfg, use_fft=False, record_products=True)
    fase_trace.products[3] = fase_trace.products[3] * 1.01
    assert se_residual_deviation(dct8, weight, se_trace, fase_trace) > 1e-6


def test_se_residual_deviation_needs_snapshots(rng, dct8, central_loss8):
    cfg = config(iterations=2)
    weight = build_weight_field(central_loss8, cfg.rho_hat)
    signal = rng.standard_normal((8, 8))
    _, se_trace = se_extrapolate(signal, central_loss8, dct8, cfg)
    _, fase_trace = fase_extrapolate(signal, central_loss8, dct8, build_gram_tables(dct8, weight), cfg,
                                     record_products=True)
    with pytest.raises(ParameterError):
        se_residual_deviation(dct8, weight, se_trace, fase_trace)


def test_area_cap_is_checked_on_the_geometry():
    check_area(64, 64, 4096)
    with pytest.raises(ParameterError):
        check_area(256, 256, 4096)
