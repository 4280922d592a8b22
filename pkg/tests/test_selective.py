import numpy as np
import pytest

from conftest import config, custom_dictionary
from fase.dictionary import generate_dictionary
from fase.errors import DegenerateAtomError, NoSelectableAtomError, ShapeError
from fase.grid import LossMask, WeightField, build_weight_field
from fase.selective import (
    SparseModel,
    se_extrapolate,
    se_select,
    select_lowest_max,
    weighted_distance,
    weighted_projection,
)


def all_projections(residual, dictionary, weight):
    return np.array([weighted_projection(residual, a, weight, k) for k, a in enumerate(dictionary.atoms)])


def test_projection_of_zero_residual(dct8, unit_weight):
    w = unit_weight(8, 8)
    assert all(p == 0 for p in all_projections(np.zeros((8, 8)), dct8, w))


def test_projection_of_an_atom_onto_itself(dct8, central_loss8):
    w = build_weight_field(central_loss8, 0.8)
    for k in (0, 5, 63):
        assert weighted_projection(dct8.atoms[k], dct8.atom(k), w, k) == pytest.approx(1.0, abs=1e-12)


def test_projection_of_impulse_onto_constant(unit_weight):
    residual = np.zeros((2, 2))
    residual[0, 0] = 1.0
    assert weighted_projection(residual, np.ones((2, 2)), unit_weight(2, 2)) == pytest.approx(0.25)


def test_projection_of_atom_living_in_the_loss_area():
    mask = LossMask.central_block(4, 4, 2, 2)
    atom = np.zeros((4, 4))
    atom[1, 1] = 1.0
    with pytest.raises(DegenerateAtomError) as e:
        weighted_projection(np.ones((4, 4)), atom, build_weight_field(mask, 0.8), index=7)
    assert e.value.index == 7


def test_select_prefers_the_atom_equal_to_the_residual(dct8, central_loss8):
    w = build_weight_field(central_loss8, 0.8)
    for u in (3, 17, 42):
        p = all_projections(dct8.atoms[u], dct8, w)
        assert se_select(p, dct8, w) == u


def test_select_breaks_ties_by_lowest_index(unit_weight):
    atom = np.arange(1, 5, dtype=float).reshape(2, 2)
    dictionary = custom_dictionary([atom, atom, atom[::-1]])
    w = unit_weight(2, 2)
    p = all_projections(atom, dictionary, w)
    assert p[0] == p[1]
    assert se_select(p, dictionary, w) == 0


def test_select_never_picks_degenerate_atoms():
    mask = LossMask.central_block(4, 4, 2, 2)
    hidden = np.zeros((4, 4))
    hidden[1, 1] = 1.0
    dictionary = custom_dictionary([hidden, np.ones((4, 4))])
    w = build_weight_field(mask, 0.8)
    assert se_select(np.array([1e6, 0.0]), dictionary, w) == 1
    with pytest.raises(NoSelectableAtomError):
        select_lowest_max(np.ones(3), np.zeros(3, dtype=bool), 0.0)


def test_selection_matches_weighted_distance_minimum(rng):
    dictionary = generate_dictionary('dct', 4, 4)
    w = build_weight_field(LossMask.central_block(4, 4, 2, 2), 0.8)
    for _ in range(10):
        residual = rng.standard_normal((4, 4))
        p = all_projections(residual, dictionary, w)
        distances = [weighted_distance(residual, a, w, pk) for a, pk in zip(dictionary.atoms, p)]
        assert se_select(p, dictionary, w) == int(np.argmin(distances))


def test_selection_is_invariant_to_weight_rescaling(rng, dct8, central_loss8):
    w = build_weight_field(central_loss8, 0.8)
    scaled = WeightField(w.values * 3.7)
    residual = rng.standard_normal((8, 8))
    assert se_select(all_projections(residual, dct8, w), dct8, w) == \
        se_select(all_projections(residual, dct8, scaled), dct8, scaled)


def test_zero_signal_gives_zero_coefficients(dct8, central_loss8):
    model, trace = se_extrapolate(np.zeros((8, 8)), central_loss8, dct8, config(iterations=3))
    assert len(model.terms) == 3
    assert all(c == 0 for _, c in model.terms)
    assert trace.selections == [0, 0, 0]


def test_single_atom_is_recovered_in_one_step(dct8):
    mask = LossMask.none_lost(8, 8)
    model, trace = se_extrapolate(dct8.atoms[5], mask, dct8, config(iterations=1, gamma=1.0), track_energy=True)
    (index, coefficient), = model.terms
    assert index == 5
    assert coefficient == pytest.approx(1.0, abs=1e-12)
    assert trace.residual_energies[0] == pytest.approx(0.0, abs=1e-20)


def test_damped_steps_decay_geometrically(dct8):
    mask = LossMask.none_lost(8, 8)
    w = build_weight_field(mask, 0.8)
    initial = float(np.sum(np.abs(dct8.atoms[5]) ** 2 * w.values))
    model, trace = se_extrapolate(dct8.atoms[5], mask, dct8, config(iterations=2, gamma=0.5), track_energy=True)
    assert [k for k, _ in model.terms] == [5, 5]
    np.testing.assert_allclose([c for _, c in model.terms], [0.5, 0.25], atol=1e-12)
    np.testing.assert_allclose(trace.residual_energies, [0.25 * initial, 0.0625 * initial], rtol=1e-10)


def test_trace_records_iterations_in_order(rng, dct8, central_loss8):
    model, trace = se_extrapolate(rng.standard_normal((8, 8)), central_loss8, dct8, config(iterations=12))
    assert len(trace) == 12
    assert [r.iteration for r in trace.records] == list(range(1, 13))
    np.testing.assert_allclose(trace.coefficients, [c for _, c in model.terms])
    for record in trace.records:
        assert record.coefficient == pytest.approx(0.5 * record.projection)


def test_model_ignores_samples_in_the_loss_area(rng, dct8, central_loss8):
    signal = rng.standard_normal((8, 8))
    corrupted = signal.copy()
    corrupted[central_loss8.lost] = rng.uniform(-1e3, 1e3, central_loss8.lost_count)
    cfg = config(iterations=20)
    _, clean = se_extrapolate(signal, central_loss8, dct8, cfg)
    _, noisy = se_extrapolate(corrupted, central_loss8, dct8, cfg)
    assert clean.selections == noisy.selections
    np.testing.assert_allclose(clean.coefficients, noisy.coefficients, rtol=1e-12, atol=1e-14)


@pytest.mark.parametrize('gamma', [0.25, 0.5, 1.0])
def test_weighted_residual_energy_never_grows(rng, central_loss8, gamma):
    dictionary = generate_dictionary('dft', 8, 8)
    _, trace = se_extrapolate(rng.standard_normal((8, 8)), central_loss8, dictionary,
                              config(iterations=40, gamma=gamma), track_energy=True)
    energies = np.array(trace.residual_energies)
    assert np.all(np.diff(energies) <= 1e-12 * energies[0])


def test_real_inputs_give_real_models(rng, dct8, central_loss8):
    model, trace = se_extrapolate(rng.standard_normal((8, 8)), central_loss8, dct8, config(iterations=30))
    assert np.abs(trace.coefficients.imag).max() <= 1e-12
    assert np.abs(model.materialize().imag).max() <= 1e-12


def test_materialized_model_matches_the_running_sum(rng, dct8, central_loss8):
    model, _ = se_extrapolate(rng.standard_normal((8, 8)), central_loss8, dct8, config(iterations=15))
    rebuilt = SparseModel(dct8)
    for k, c in model.terms:
        rebuilt.add(k, c)
    np.testing.assert_allclose(rebuilt.materialize(), model.materialize(), atol=1e-12)


def test_residual_snapshots(rng, dct8, central_loss8):
    signal = rng.standard_normal((8, 8))
    model, trace = se_extrapolate(signal, central_loss8, dct8, config(iterations=4), record_residuals=True)
    assert len(trace.residuals) == 5
    np.testing.assert_allclose(trace.residuals[0], signal)
    np.testing.assert_allclose(trace.residuals[-1], signal - model.materialize(), atol=1e-12)


def test_model_rejects_foreign_indices(dct8):
    with pytest.raises(ShapeError):
        SparseModel(dct8).add(64, 1.0)


def test_shape_mismatch_is_rejected(dct8):
    with pytest.raises(ShapeError):
        se_extrapolate(np.zeros((4, 4)), LossMask.none_lost(4, 4), dct8, config(iterations=1))
