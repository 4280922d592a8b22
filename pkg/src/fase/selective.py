"""Selective Extrapolation (SE), evaluated literally in the spatial domain.

Every iteration projects the current residual onto every atom, selects the
atom whose projection removes the most weighted residual energy, and
subtracts a fraction ``gamma`` of that projection from the residual. The
module is the reference against which the fast recursion in
:mod:`fase.fast` is checked.
"""
import logging
from dataclasses import dataclass, field

import numpy as np

from fase.dictionary import Atom, Dictionary
from fase.errors import DegenerateAtomError, NoSelectableAtomError, ShapeError
from fase.grid import ExtrapConfig, LossMask, WeightField, as_field, build_weight_field
from fase.opcount import NULL_COUNTER, OpCounter

logger = logging.getLogger(__name__)

# atoms whose weighted energy is below this fraction of the largest are never selected
DEGENERACY_RTOL = 1e-12


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    index: int
    projection: complex
    coefficient: complex


@dataclass
class SeIterationTrace:
    records: list[IterationRecord] = field(default_factory=list)
    residual_energies: list[float] | None = None
    # SE residual snapshots r^(nu) for nu = 0..I
    residuals: list[np.ndarray] | None = None
    # FaSE products R^(nu) for nu = 0..I
    products: list[np.ndarray] | None = None

    @property
    def selections(self) -> list[int]:
        return [r.index for r in self.records]

    @property
    def coefficients(self) -> np.ndarray:
        return np.array([r.coefficient for r in self.records], dtype=np.complex128)

    def __len__(self) -> int:
        return len(self.records)


@dataclass
class SparseModel:
    """Ordered list of ``(atom index, coefficient)`` terms over a dictionary."""

    dictionary: Dictionary
    terms: list[tuple[int, complex]] = field(default_factory=list)
    _field: np.ndarray | None = field(default=None, repr=False)

    @property
    def shape(self) -> tuple[int, int]:
        return self.dictionary.shape

    def add(self, index: int, coefficient: complex) -> None:
        if not 0 <= index < self.dictionary.size:
            raise ShapeError(f'Atom index {index} outside dictionary of size {self.dictionary.size}')
        self.terms.append((index, complex(coefficient)))
        self._field = None

    def materialize(self) -> np.ndarray:
        """The parametric model g[m, n] as the weighted superposition of its terms."""
        if self._field is not None:
            return self._field.copy()
        g = np.zeros(self.shape, dtype=np.complex128)
        for k, c in self.terms:
            g += c * self.dictionary.atoms[k]
        return g


def weighted_energies(dictionary: Dictionary, weight: WeightField) -> np.ndarray:
    """Weighted energies sum(conj(phi_k) w phi_k), real by construction."""
    return (np.abs(dictionary.matrix) ** 2) @ weight.values.ravel()


def selectable_atoms(energies: np.ndarray) -> np.ndarray:
    """Atoms with non-negligible weighted energy on the support area."""
    peak = energies.max(initial=0.0)
    return energies > DEGENERACY_RTOL * peak if peak > 0 else np.zeros_like(energies, dtype=bool)


def select_lowest_max(scores: np.ndarray, selectable: np.ndarray, rtol: float) -> int:
    """Index of the maximal score, the lowest index winning among near-ties."""
    if not selectable.any():
        raise NoSelectableAtomError('Every atom has zero weighted energy on the support area')
    masked = np.where(selectable, scores, -np.inf)
    best = masked.max()
    return int(np.argmax(masked >= best - rtol * abs(best)))


def weighted_projection(residual, atom: Atom | np.ndarray, weight: WeightField, index: int = -1) -> complex:
    """Weighted least-squares fit of one atom to the residual."""
    values = atom.values if isinstance(atom, Atom) else np.asarray(atom)
    r = as_field(residual, weight.shape)
    if values.shape != weight.shape:
        raise ShapeError(f'Atom shape {values.shape} does not match weight shape {weight.shape}')
    w = weight.values
    denominator = float(np.sum(np.abs(values) ** 2 * w))
    if denominator <= 0.0:
        raise DegenerateAtomError(index)
    return complex(np.sum(r * values.conj() * w) / denominator)


def weighted_distance(residual, atom: np.ndarray, weight: WeightField, projection: complex) -> float:
    """Weighted squared distance between the residual and ``projection * atom``."""
    return float(np.sum(np.abs(as_field(residual) - projection * atom) ** 2 * weight.values))


def se_select(
        projections: np.ndarray,
        dictionary: Dictionary,
        weight: WeightField,
        rtol: float = 0.0,
        counter: OpCounter = NULL_COUNTER,
) -> int:
    """Atom maximizing ``|p_k|^2 * sum(conj(phi_k) w phi_k)``.

    The weighted energies are re-evaluated here, as the literal selection
    rule prescribes; degenerate atoms are never selected.
    """
    size, area = dictionary.matrix.shape
    energies = weighted_energies(dictionary, weight)
    counter.tally(mul=2 * area * size, add=area * size)
    scores = np.abs(projections) ** 2 * energies
    counter.tally(mul=size, other=size)
    # one comparison per atom
    counter.tally(other=size)
    return select_lowest_max(scores, selectable_atoms(energies), rtol)


def se_extrapolate(
        signal,
        mask: LossMask,
        dictionary: Dictionary,
        cfg: ExtrapConfig,
        *,
        counter: OpCounter = NULL_COUNTER,
        track_energy: bool = False,
        record_residuals: bool = False,
) -> tuple[SparseModel, SeIterationTrace]:
    """Generate the sparse model by the original, spatial-domain iteration."""
    s = as_field(signal, dictionary.shape)
    if mask.shape != dictionary.shape:
        raise ShapeError(f'Mask shape {mask.shape} does not match dictionary shape {dictionary.shape}')
    weight = build_weight_field(mask, cfg.rho_hat)
    w = weight.values.ravel()
    phi = dictionary.matrix
    phi_conj = phi.conj()
    size, area = phi.shape

    r = s.ravel().copy()
    g = np.zeros(area, dtype=np.complex128)
    model = SparseModel(dictionary)
    trace = SeIterationTrace(
        residual_energies=[] if track_energy else None,
        residuals=[r.reshape(s.shape).copy()] if record_residuals else None,
    )
    # selection scores are squared magnitudes, so their ties are twice as wide
    rtol = 2.0 * cfg.tie_rtol

    with counter.iteration_loop():
        for nu in range(1, cfg.iterations + 1):
            numerators = phi_conj @ (r * w)
            counter.tally(mul=2 * area * size, add=area * size)
            energies = weighted_energies(dictionary, weight)
            counter.tally(mul=2 * area * size, add=area * size)
            selectable = selectable_atoms(energies)
            projections = np.zeros(size, dtype=np.complex128)
            np.divide(numerators, energies, out=projections, where=selectable)
            counter.tally(other=size, div=size)

            u = se_select(projections, dictionary, weight, rtol=rtol, counter=counter)
            c = cfg.gamma * projections[u]
            counter.tally(mul=1)

            g += c * phi[u]
            r -= c * phi[u]
            counter.tally(mul=2 * area, add=2 * area)

            model.add(u, c)
            trace.records.append(IterationRecord(nu, u, complex(projections[u]), complex(c)))
            if track_energy:
                trace.residual_energies.append(float(np.sum(np.abs(r) ** 2 * w)))
            if record_residuals:
                trace.residuals.append(r.reshape(s.shape).copy())
            logger.debug('SE iteration %d: atom %d, |c| = %.3e', nu, u, abs(c))

    model._field = g.reshape(s.shape)
    return model, trace
