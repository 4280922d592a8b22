"""Fast Selective Extrapolation (FaSE).

The weighted scalar products between the residual and every atom are
evaluated once, for the input signal, and afterwards updated recursively
from tabulated atom-pair products ``C`` and inverse root energies ``D``.
The iteration loop never materializes the residual and contains no
division.

FGRM table file layout (all little-endian):

    8 bytes   magic ``b'FGRM v1\\n'``
    u64       dictionary size K
    u64       provenance hash of (dictionary, weight field)
    K*K       complex entries of C as float64 (re, im) pairs, row-major
    K         float64 entries of D
"""
import hashlib
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from fase.dictionary import Dictionary
from fase.errors import FormatError, NoSelectableAtomError, ShapeError, StaleTableError
from fase.grid import ExtrapConfig, LossMask, WeightField, as_field, build_weight_field
from fase.opcount import NULL_COUNTER, OpCounter
from fase.selective import DEGENERACY_RTOL, IterationRecord, SeIterationTrace, SparseModel, select_lowest_max

logger = logging.getLogger(__name__)

FGRM_MAGIC = b'FGRM v1\n'
ROW_BLOCK = 256
# imaginary residue of the model on B above this is reported
IMAG_WARN_LEVEL = 1e-6


def provenance_hash(dictionary: Dictionary, weight: WeightField) -> int:
    """64-bit content hash binding a table to its dictionary and weighting."""
    h = hashlib.sha256()
    h.update(dictionary.digest)
    h.update(weight.digest())
    return int.from_bytes(h.digest()[:8], 'little')


def inverse_roots(diagonal: np.ndarray) -> np.ndarray:
    """D_k = 1/sqrt(C(k,k)), or 0 for atoms with negligible weighted energy."""
    peak = diagonal.max(initial=0.0)
    d = np.zeros_like(diagonal)
    live = diagonal > DEGENERACY_RTOL * peak if peak > 0 else np.zeros_like(diagonal, dtype=bool)
    d[live] = 1.0 / np.sqrt(diagonal[live])
    return d


@dataclass(frozen=True, eq=False)
class GramTable:
    """Weighted atom-pair scalar products C and inverse root energies D."""

    C: np.ndarray
    D: np.ndarray
    provenance: int

    def __post_init__(self):
        size = self.D.shape[0]
        if self.C.shape != (size, size):
            raise ShapeError(f'Gram matrix shape {self.C.shape} does not match {size} inverse roots')
        self.C.setflags(write=False)
        self.D.setflags(write=False)

    @property
    def size(self) -> int:
        return self.D.shape[0]

    @property
    def selectable(self) -> np.ndarray:
        return self.D > 0

    def check_provenance(self, dictionary: Dictionary, weight: WeightField) -> None:
        expected = provenance_hash(dictionary, weight)
        if expected != self.provenance:
            raise StaleTableError(expected, self.provenance)

    def save(self, path: str | Path) -> None:
        with open(path, 'wb') as fh:
            fh.write(FGRM_MAGIC)
            fh.write(np.array([self.size, self.provenance], dtype='<u8').tobytes())
            fh.write(np.ascontiguousarray(self.C, dtype='<c16').tobytes())
            fh.write(np.ascontiguousarray(self.D, dtype='<f8').tobytes())
        logger.info('Stored %dx%d Gram table %#018x in %s', self.size, self.size, self.provenance, path)

    @classmethod
    def load(cls, path: str | Path) -> 'GramTable':
        data = Path(path).read_bytes()
        if not data.startswith(FGRM_MAGIC) or len(data) < len(FGRM_MAGIC) + 16:
            raise FormatError(f'{path}: not an FGRM v1 table')
        size, provenance = (int(v) for v in np.frombuffer(data, dtype='<u8', count=2, offset=len(FGRM_MAGIC)))
        offset = len(FGRM_MAGIC) + 16
        expected = offset + size * size * 16 + size * 8
        if len(data) != expected:
            raise FormatError(f'{path}: FGRM payload holds {len(data)} bytes, expected {expected}')
        C = np.frombuffer(data, dtype='<c16', count=size * size, offset=offset).astype(np.complex128)
        D = np.frombuffer(data, dtype='<f8', count=size, offset=offset + size * size * 16).astype(np.float64)
        logger.info('Loaded %dx%d Gram table %#018x from %s', size, size, provenance, path)
        return cls(C=C.reshape(size, size), D=D, provenance=provenance)


@dataclass
class ResidualProducts:
    """Weighted scalar products R_k between the current residual and every atom."""

    R: np.ndarray

    def __len__(self) -> int:
        return self.R.shape[0]


def _check_shapes(dictionary: Dictionary, weight: WeightField) -> None:
    if weight.shape != dictionary.shape:
        raise ShapeError(f'Weight shape {weight.shape} does not match dictionary shape {dictionary.shape}')


def build_gram_tables(
        dictionary: Dictionary,
        weight: WeightField,
        *,
        counter: OpCounter = NULL_COUNTER,
        workers: int | None = None,
) -> GramTable:
    """Tabulate C(k,l) for l >= k and mirror the conjugates below the diagonal."""
    _check_shapes(dictionary, weight)
    phi = dictionary.matrix
    weighted_conj = phi.conj() * weight.values.ravel()
    size, area = phi.shape
    C = np.zeros((size, size), dtype=np.complex128)

    def upper_rows(start: int) -> None:
        stop = min(start + ROW_BLOCK, size)
        C[start:stop, start:] = weighted_conj[start:stop] @ phi[start:].T

    starts = range(0, size, ROW_BLOCK)
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            list(executor.map(upper_rows, starts))
    else:
        for start in starts:
            upper_rows(start)

    upper = np.triu(C, 1)
    C = upper + upper.conj().T + np.diag(C.diagonal().real)
    pairs = (size * size + size) // 2
    # per pair: conj(phi_k)*w*phi_l products, their sum and the conjugation
    counter.tally(mul=2 * area * pairs, add=area * pairs, other=area * pairs)
    D = inverse_roots(C.diagonal().real.copy())
    counter.tally(other=size, div=size)
    logger.debug('Built %dx%d Gram table directly', size, size)
    return GramTable(C=C, D=D, provenance=provenance_hash(dictionary, weight))


def initial_scalar_products(signal, weight: WeightField, dictionary: Dictionary) -> ResidualProducts:
    """R_k for the residual equal to the input signal."""
    _check_shapes(dictionary, weight)
    s = as_field(signal, dictionary.shape)
    return ResidualProducts(dictionary.matrix.conj() @ (s.ravel() * weight.values.ravel()))


def tables_for(
        dictionary: Dictionary,
        weight: WeightField,
        *,
        path: str | Path | None = None,
        use_fft: bool | None = None,
        fft_threshold: int = 64,
        workers: int | None = None,
) -> GramTable:
    """Load tables from ``path`` when they match, otherwise build (and store) them."""
    from fase.transform import fft_gram_table, prefer_fft

    expected = provenance_hash(dictionary, weight)
    if path is not None and Path(path).exists():
        tables = GramTable.load(path)
        if tables.provenance == expected:
            return tables
        logger.info('Cached table %s is stale, rebuilding', path)
    if use_fft is None:
        use_fft = prefer_fft(dictionary, fft_threshold) and bool(dictionary.tagged.all())
    tables = fft_gram_table(weight, dictionary) if use_fft else build_gram_tables(dictionary, weight, workers=workers)
    if path is not None:
        tables.save(path)
    return tables


def fase_extrapolate(
        signal,
        mask: LossMask,
        dictionary: Dictionary,
        tables: GramTable,
        cfg: ExtrapConfig,
        *,
        counter: OpCounter = NULL_COUNTER,
        use_fft: bool | None = None,
        fft_threshold: int = 64,
        record_products: bool = False,
) -> tuple[SparseModel, SeIterationTrace]:
    """Generate the sparse model from tabulated values by the recursive update."""
    from fase.transform import fft_initial_products, prefer_fft

    s = as_field(signal, dictionary.shape)
    if mask.shape != dictionary.shape:
        raise ShapeError(f'Mask shape {mask.shape} does not match dictionary shape {dictionary.shape}')
    weight = build_weight_field(mask, cfg.rho_hat)
    tables.check_provenance(dictionary, weight)
    if not tables.selectable.any():
        raise NoSelectableAtomError('Every atom has zero weighted energy on the support area')

    size, area = dictionary.matrix.shape
    if use_fft is None:
        use_fft = prefer_fft(dictionary, fft_threshold)
    if use_fft:
        R = fft_initial_products(s, weight, dictionary).R
    else:
        R = initial_scalar_products(s, weight, dictionary).R
        counter.tally(mul=2 * area * size, add=area * size)

    C, D = tables.C, tables.D
    D2 = D * D
    selectable = tables.selectable
    model = SparseModel(dictionary)
    trace = SeIterationTrace(products=[R.copy()] if record_products else None)

    with counter.iteration_loop():
        for nu in range(1, cfg.iterations + 1):
            u = select_lowest_max(np.abs(R) * D, selectable, cfg.tie_rtol)
            counter.tally(mul=size, other=2 * size)
            projection = R[u] * D2[u]
            c = cfg.gamma * projection
            counter.tally(mul=1)
            # model update, performed when the model is materialized
            model.add(u, c)
            counter.tally(mul=area, add=area)
            R -= c * C[:, u]
            counter.tally(mul=size, add=size)

            trace.records.append(IterationRecord(nu, u, complex(projection), complex(c)))
            if record_products:
                trace.products.append(R.copy())
            logger.debug('FaSE iteration %d: atom %d, |c| = %.3e', nu, u, abs(c))

    return model, trace


@dataclass(frozen=True, eq=False)
class Restoration:
    values: np.ndarray
    max_imag: float


def apply_model(signal, model: SparseModel, mask: LossMask) -> Restoration:
    """Replace the loss area by the real part of the materialized model."""
    s = as_field(signal, model.shape)
    if mask.shape != s.shape:
        raise ShapeError(f'Mask shape {mask.shape} does not match signal shape {s.shape}')
    out = s.copy()
    if not model.terms or not mask.lost.any():
        return Restoration(values=out, max_imag=0.0)
    g = model.materialize()
    out[mask.lost] = g.real[mask.lost]
    max_imag = float(np.abs(g.imag[mask.lost]).max())
    if max_imag > IMAG_WARN_LEVEL:
        logger.warning('Model has an imaginary residue of %.3e on the loss area', max_imag)
    return Restoration(values=out, max_imag=max_imag)
