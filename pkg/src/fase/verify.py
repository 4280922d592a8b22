"""SE/FaSE equivalence harness.

Runs both model generators on seeded random signals and compares selection
sequences, coefficients, and the recursively updated residual products
against a direct re-evaluation. Deviations are relative to the largest
coefficient magnitude (resp. the largest initial product) of the run, so
exact zeros do not inflate them.

Selections are compared over the resolved prefix of a run: the iterations
whose best selection score is still above ``RESOLUTION_FLOOR`` times the
first one. Below that floor the residual is rounding noise and both
generators pick among numerically indistinguishable atoms. The recursive
products are checked over the whole run against the residual rebuilt from
FaSE's own terms, and over the resolved prefix against the SE residual.
"""
import logging
from typing import Literal

import numpy as np

from fase.dictionary import Dictionary
from fase.errors import ParameterError
from fase.fast import GramTable, fase_extrapolate, tables_for
from fase.grid import ExtrapConfig, LossMask, WeightField, build_weight_field
from fase.report import TrialReport, VerifyReport
from fase.selective import SeIterationTrace, se_extrapolate, weighted_energies

logger = logging.getLogger(__name__)

DEFAULT_TOLERANCE = 1e-9
RESOLUTION_FLOOR = 1e-5


def _relative(deviation: float, scale: float) -> float:
    return deviation / scale if scale > 0 else deviation


def resolved_iterations(se_trace: SeIterationTrace, dictionary: Dictionary, weight: WeightField,
                        floor: float = RESOLUTION_FLOOR) -> int:
    """Length of the prefix whose selection score |p_u| sqrt(E_u) stays above the floor."""
    energies = weighted_energies(dictionary, weight)
    scores = [abs(r.projection) * np.sqrt(energies[r.index]) for r in se_trace.records]
    if not scores or scores[0] == 0.0:
        return len(scores)
    for nu, score in enumerate(scores):
        if score < floor * scores[0]:
            return nu
    return len(scores)


def coefficient_deviation(se_trace: SeIterationTrace, fase_trace: SeIterationTrace, count: int | None = None) -> float:
    se_c = se_trace.coefficients[:count]
    fase_c = fase_trace.coefficients[:count]
    if len(se_c) != len(fase_c):
        return float('inf')
    if not len(se_c):
        return 0.0
    return _relative(float(np.abs(se_c - fase_c).max()), float(np.abs(se_c).max()))


def recursion_deviation(
        signal: np.ndarray,
        dictionary: Dictionary,
        weight: WeightField,
        fase_trace: SeIterationTrace,
) -> float:
    """Largest gap between recursive R_k and a direct Σ r·conj(φ_k)·w.

    The residual r is rebuilt explicitly from the terms FaSE selected, so on
    the resolved prefix it coincides with the SE residual.
    """
    w = weight.values.ravel()
    phi = dictionary.matrix
    phi_conj = phi.conj()
    r = np.asarray(signal, dtype=np.complex128).ravel().copy()
    direct = phi_conj @ (r * w)
    scale = float(np.abs(direct).max())
    worst = float(np.abs(direct - fase_trace.products[0]).max())
    for record, R in zip(fase_trace.records, fase_trace.products[1:]):
        r -= record.coefficient * phi[record.index]
        worst = max(worst, float(np.abs(phi_conj @ (r * w) - R).max()))
    return _relative(worst, scale)


def se_residual_deviation(
        dictionary: Dictionary,
        weight: WeightField,
        se_trace: SeIterationTrace,
        fase_trace: SeIterationTrace,
        count: int | None = None,
) -> float:
    """Largest gap between recursive R_k and Σ r·conj(φ_k)·w over the SE residual snapshots.

    Covers R^(0) up to R^(count), the products before and after each of the
    first ``count`` iterations.
    """
    if se_trace.residuals is None or fase_trace.products is None:
        raise ParameterError('Both traces must carry snapshots: SE residuals and FaSE products')
    stop = len(se_trace.residuals) if count is None else count + 1
    w = weight.values.ravel()
    phi_conj = dictionary.matrix.conj()
    direct = [phi_conj @ (r.ravel() * w) for r in se_trace.residuals[:stop]]
    scale = float(np.abs(direct[0]).max())
    worst = max(float(np.abs(d - R).max()) for d, R in zip(direct, fase_trace.products))
    return _relative(worst, scale)


def check_area(rows: int, cols: int, max_area: int) -> None:
    """Reject an area before any dictionary is generated for it."""
    if rows * cols > max_area:
        raise ParameterError(f'Area {rows}x{cols} exceeds the cap of {max_area} samples')


def check_caps(dictionary: Dictionary, max_area: int, max_dict: int) -> None:
    check_area(*dictionary.shape, max_area)
    if dictionary.size > max_dict:
        raise ParameterError(f'Dictionary of {dictionary.size} atoms exceeds the cap of {max_dict}')


def verify_equivalence(
        dictionary: Dictionary,
        mask: LossMask,
        cfg: ExtrapConfig,
        *,
        trials: int = 20,
        seed: int = 0,
        signal: Literal['random', 'zero'] = 'random',
        tables: GramTable | None = None,
        tolerance: float = DEFAULT_TOLERANCE,
        dictionary_label: str = 'custom',
) -> VerifyReport:
    """Compare SE and FaSE on ``trials`` seeded signals over one dictionary and mask."""
    if trials < 1:
        raise ParameterError(f'At least one trial is required, got {trials}')
    weight = build_weight_field(mask, cfg.rho_hat)
    if tables is None:
        tables = tables_for(dictionary, weight)
    else:
        tables.check_provenance(dictionary, weight)

    rows, cols = dictionary.shape
    loss_rows = int(mask.lost.any(axis=1).sum())
    loss_cols = int(mask.lost.any(axis=0).sum())
    report = VerifyReport(
        rows=rows,
        cols=cols,
        dictionary=dictionary_label,
        dict_size=dictionary.size,
        loss=(loss_rows, loss_cols),
        iterations=cfg.iterations,
        gamma=cfg.gamma,
        rho_hat=cfg.rho_hat,
        tolerance=tolerance,
    )
    seeds = np.random.SeedSequence(seed).generate_state(trials)
    for trial, trial_seed in enumerate(seeds):
        rng = np.random.default_rng(int(trial_seed))
        s = rng.standard_normal((rows, cols)) if signal == 'random' else np.zeros((rows, cols))
        _, se_trace = se_extrapolate(s, mask, dictionary, cfg, record_residuals=True)
        _, fase_trace = fase_extrapolate(s, mask, dictionary, tables, cfg, use_fft=False, record_products=True)

        resolved = resolved_iterations(se_trace, dictionary, weight)
        equal = se_trace.selections[:resolved] == fase_trace.selections[:resolved]
        c_dev = coefficient_deviation(se_trace, fase_trace, resolved)
        r_dev = max(recursion_deviation(s, dictionary, weight, fase_trace),
                    se_residual_deviation(dictionary, weight, se_trace, fase_trace, resolved))
        passed = equal and c_dev <= tolerance and r_dev <= tolerance
        report.trials.append(TrialReport(
            trial=trial,
            seed=int(trial_seed),
            resolved_iterations=resolved,
            selections_equal=equal,
            max_coefficient_deviation=c_dev,
            max_recursion_deviation=r_dev,
            passed=passed,
        ))
        if passed:
            logger.info('Trial %d passed (coefficients %.2e, recursion %.2e)', trial, c_dev, r_dev)
        else:
            logger.warning('Trial %d failed: selections equal %s over %d iterations, coefficients %.2e, recursion %.2e',
                           trial, equal, resolved, c_dev, r_dev)
    return report
