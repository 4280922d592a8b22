import numpy as np
import pytest

from fase.errors import MaskError, ParameterError, ShapeError
from fase.grid import ExtrapConfig, LossMask, WeightField, as_field, build_weight_field, psnr_over_region


def test_weight_is_one_at_the_centre():
    w = build_weight_field(LossMask.none_lost(5, 5), 0.8)
    assert w.values[2, 2] == 1.0


def test_weight_decays_with_euclidean_distance():
    w = build_weight_field(LossMask.none_lost(3, 3), 0.5)
    assert w.values[0, 0] == pytest.approx(0.5 ** np.sqrt(2))
    assert w.values[0, 0] == pytest.approx(0.37521, abs=1e-5)
    assert w.values[0, 1] == pytest.approx(0.5)


def test_weight_uses_a_fractional_centre_on_even_grids():
    w = build_weight_field(LossMask.none_lost(4, 4), 0.8)
    np.testing.assert_allclose(w.values[1:3, 1:3], 0.8 ** np.sqrt(0.5))
    np.testing.assert_array_equal(w.values, w.values[::-1, ::-1])


@pytest.mark.parametrize('rho_hat', [0.1, 0.5, 0.8, 1.0])
def test_weight_vanishes_exactly_on_the_loss_area(rng, rho_hat):
    lost = rng.random((9, 7)) < 0.3
    lost[0, 0] = False
    mask = LossMask(lost)
    w = build_weight_field(mask, rho_hat)
    assert np.all(w.values[mask.lost] == 0.0)
    assert np.all(w.values[mask.support] > 0.0)


@pytest.mark.parametrize('rho_hat', [0.0, -0.2, 1.5])
def test_weight_rejects_rho_outside_unit_interval(rho_hat):
    with pytest.raises(ParameterError):
        build_weight_field(LossMask.none_lost(4, 4), rho_hat)


def test_mask_without_support_is_rejected():
    with pytest.raises(MaskError):
        LossMask(np.ones((3, 3), dtype=bool))


def test_central_block_geometry():
    mask = LossMask.central_block(8, 8, 4, 4)
    assert mask.lost_count == 16
    assert mask.lost[2:6, 2:6].all()
    assert not mask.lost[:2].any() and not mask.lost[6:].any()


def test_central_block_must_fit():
    with pytest.raises(ParameterError):
        LossMask.central_block(4, 4, 5, 1)


def test_mask_and_weight_are_read_only():
    mask = LossMask.central_block(4, 4, 2, 2)
    with pytest.raises(ValueError):
        mask.lost[0, 0] = True
    with pytest.raises(ParameterError):
        WeightField(-np.ones((2, 2)))


def test_as_field_validates_shape():
    assert as_field(np.ones((2, 3))).dtype == np.complex128
    with pytest.raises(ShapeError):
        as_field(np.ones(4))
    with pytest.raises(ShapeError):
        as_field(np.ones((2, 2)), (3, 3))


def test_config_defaults_and_validation():
    cfg = ExtrapConfig()
    assert (cfg.iterations, cfg.gamma, cfg.rho_hat, cfg.tie_rule) == (250, 0.5, 0.8, 'lowest-index')
    for bad in ({'iterations': 0}, {'gamma': 0.0}, {'gamma': 1.5}, {'rho_hat': 0.0}, {'tie_rule': 'random'}):
        with pytest.raises(ParameterError):
            ExtrapConfig.build(**bad)


def test_psnr_of_identical_images_is_the_sentinel(rng):
    a = rng.uniform(0, 255, (6, 6))
    region = LossMask.central_block(6, 6, 2, 2)
    assert psnr_over_region(a, a, region) == 99.0


def test_psnr_with_unit_error():
    a = np.full((4, 4), 100.0)
    assert psnr_over_region(a, a + 1.0, np.ones((4, 4), dtype=bool)) == pytest.approx(20 * np.log10(255), abs=1e-9)
    assert psnr_over_region(a, a - 1.0, np.ones((4, 4), dtype=bool)) == pytest.approx(48.13, abs=5e-3)


def test_psnr_full_scale_error_on_single_sample():
    a = np.zeros((3, 3))
    b = a.copy()
    b[1, 1] = 255.0
    region = np.zeros((3, 3), dtype=bool)
    region[1, 1] = True
    assert psnr_over_region(a, b, region) == pytest.approx(0.0, abs=1e-12)


def test_psnr_only_looks_at_the_region():
    a = np.zeros((4, 4))
    b = np.full((4, 4), 50.0)
    mask = LossMask.central_block(4, 4, 2, 2)
    b[mask.lost] = 0.0
    assert psnr_over_region(a, b, mask) == 99.0


def test_psnr_errors():
    with pytest.raises(ShapeError):
        psnr_over_region(np.zeros((2, 2)), np.zeros((3, 3)), np.ones((2, 2), dtype=bool))
    with pytest.raises(ParameterError):
        psnr_over_region(np.zeros((2, 2)), np.zeros((2, 2)), np.zeros((2, 2), dtype=bool))
