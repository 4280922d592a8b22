"""Basis function dictionaries: generation, union and the FDIC file format.

FDIC layout: one ASCII header line ``FDIC v1 M N K complex|real`` terminated
by ``\\n``, followed by the atoms atom-major then row-major as little-endian
float64 values. ``complex`` payloads store ``(re, im)`` pairs, ``real``
payloads store the real part only.
"""
import hashlib
import logging
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Literal

import numpy as np
from scipy import fft, linalg

from fase.errors import FormatError, ParameterError, ShapeError, UnsupportedDictionaryError

logger = logging.getLogger(__name__)

Family = Literal['dft', 'dct', 'wht', 'bdft', 'custom']
GENERATED_FAMILIES = ('dft', 'dct', 'wht', 'bdft')

FDIC_MAGIC = 'FDIC'
FDIC_VERSION = 'v1'
NO_TAG = -1
# DFT samples closer to zero than this are binarized to exactly zero
BINARIZE_ATOL = 1e-9


@dataclass(frozen=True, eq=False)
class Atom:
    values: np.ndarray
    freq_tag: tuple[int, int] | None = None
    family: Family = 'custom'


@dataclass(frozen=True, eq=False)
class Dictionary:
    """Ordered, immutable collection of equally shaped atoms.

    ``atoms`` has shape ``(K, M, N)``. ``freq_tags`` has shape ``(K, 2)`` and
    holds ``(mu, eta)`` for DFT atoms and ``(-1, -1)`` otherwise.
    """

    atoms: np.ndarray
    families: tuple[str, ...]
    freq_tags: np.ndarray

    def __post_init__(self):
        atoms = np.array(self.atoms, dtype=np.complex128)
        if atoms.ndim != 3 or atoms.shape[0] < 1 or atoms.shape[1] < 1 or atoms.shape[2] < 1:
            raise ShapeError(f'Dictionary atoms must have shape (K, M, N) with K >= 1, got {atoms.shape}')
        size, rows, cols = atoms.shape
        if len(self.families) != size:
            raise ShapeError(f'{len(self.families)} family labels for {size} atoms')
        tags = np.array(self.freq_tags, dtype=np.int64).reshape(size, 2)
        tagged = tags[:, 0] != NO_TAG
        if np.any(tags[tagged, 0] >= rows) or np.any(tags[tagged, 1] >= cols) or np.any(tags[tagged] < 0):
            raise ShapeError('Frequency tags must satisfy 0 <= mu < M and 0 <= eta < N')
        zero = ~atoms.reshape(size, -1).any(axis=1)
        if zero.any():
            raise FormatError(f'Atom {int(np.argmax(zero))} is identically zero', atom_index=int(np.argmax(zero)))
        atoms.setflags(write=False)
        tags.setflags(write=False)
        object.__setattr__(self, 'atoms', atoms)
        object.__setattr__(self, 'freq_tags', tags)
        object.__setattr__(self, 'families', tuple(self.families))

    @property
    def size(self) -> int:
        return self.atoms.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.atoms.shape[1], self.atoms.shape[2]

    def __len__(self) -> int:
        return self.size

    @property
    def matrix(self) -> np.ndarray:
        """Atoms flattened to a ``(K, M*N)`` matrix (row k is atom k)."""
        return self.atoms.reshape(self.size, -1)

    @property
    def tagged(self) -> np.ndarray:
        return self.freq_tags[:, 0] != NO_TAG

    @property
    def is_real(self) -> bool:
        return not np.any(self.atoms.imag)

    def atom(self, k: int) -> Atom:
        tag = tuple(int(t) for t in self.freq_tags[k]) if self.tagged[k] else None
        return Atom(values=self.atoms[k], freq_tag=tag, family=self.families[k])

    def take(self, count: int) -> 'Dictionary':
        """The first ``count`` atoms, used to sweep dictionary size at fixed area."""
        if not 1 <= count <= self.size:
            raise ParameterError(f'Cannot take {count} atoms from a dictionary of {self.size}')
        return Dictionary(self.atoms[:count], self.families[:count], self.freq_tags[:count])

    @cached_property
    def digest(self) -> bytes:
        h = hashlib.sha256()
        h.update(np.asarray(self.atoms.shape, dtype='<u8').tobytes())
        h.update(self.atoms.astype('<c16').tobytes())
        return h.digest()


def _dft_atoms(rows: int, cols: int) -> tuple[np.ndarray, np.ndarray]:
    mu, eta = np.meshgrid(np.arange(rows), np.arange(cols), indexing='ij')
    mu, eta = mu.ravel(), eta.ravel()
    m = np.arange(rows)
    n = np.arange(cols)
    # reduce the phase modulo one period before exponentiation to keep samples exact
    vertical = np.exp(2j * np.pi * (np.outer(mu, m) % rows) / rows)
    horizontal = np.exp(2j * np.pi * (np.outer(eta, n) % cols) / cols)
    atoms = vertical[:, :, None] * horizontal[:, None, :]
    return atoms, np.stack([mu, eta], axis=1)


def _separable(vertical: np.ndarray, horizontal: np.ndarray) -> np.ndarray:
    """Atoms ``vertical[u, m] * horizontal[v, n]`` ordered k = u*N + v."""
    atoms = vertical[:, None, :, None] * horizontal[None, :, None, :]
    return atoms.reshape(-1, vertical.shape[1], horizontal.shape[1])


def _is_power_of_two(value: int) -> bool:
    return value >= 1 and value & (value - 1) == 0


def _binarize(values: np.ndarray) -> np.ndarray:
    re = np.where(np.abs(values.real) < BINARIZE_ATOL, 0.0, np.sign(values.real))
    im = np.where(np.abs(values.imag) < BINARIZE_ATOL, 0.0, np.sign(values.imag))
    return re + 1j * im


def generate_dictionary(kind: str, rows: int, cols: int) -> Dictionary:
    """Generate the complete M·N atom dictionary of one transform family."""
    if rows < 1 or cols < 1:
        raise ParameterError(f'Dictionary dimensions must be positive, got {rows}x{cols}')
    size = rows * cols
    no_tags = np.full((size, 2), NO_TAG)
    if kind == 'dft':
        atoms, tags = _dft_atoms(rows, cols)
    elif kind == 'dct':
        # rows of the orthonormal DCT-II matrix are the 1D basis vectors
        atoms = _separable(
            fft.dct(np.eye(rows), norm='ortho', axis=0),
            fft.dct(np.eye(cols), norm='ortho', axis=0),
        )
        tags = no_tags
    elif kind == 'wht':
        if not (_is_power_of_two(rows) and _is_power_of_two(cols)):
            raise ParameterError(f'Walsh-Hadamard atoms need power-of-two dimensions, got {rows}x{cols}')
        atoms = _separable(linalg.hadamard(rows).astype(np.float64), linalg.hadamard(cols).astype(np.float64))
        tags = no_tags
    elif kind == 'bdft':
        atoms = _binarize(_dft_atoms(rows, cols)[0])
        tags = no_tags
    else:
        raise UnsupportedDictionaryError(f'Unknown dictionary family {kind!r}')
    logger.debug('Generated %s dictionary with %d atoms of %dx%d', kind, size, rows, cols)
    return Dictionary(atoms=atoms, families=(kind,) * size, freq_tags=tags)


def union_dictionaries(parts: list[Dictionary]) -> Dictionary:
    """Concatenate dictionaries, preserving part order and atom order."""
    if not parts:
        raise ParameterError('Cannot build the union of an empty list of dictionaries')
    shape = parts[0].shape
    for part in parts[1:]:
        if part.shape != shape:
            raise ShapeError(f'Cannot unite dictionaries of shapes {shape} and {part.shape}')
    if len(parts) == 1:
        return parts[0]
    return Dictionary(
        atoms=np.concatenate([p.atoms for p in parts]),
        families=tuple(f for p in parts for f in p.families),
        freq_tags=np.concatenate([p.freq_tags for p in parts]),
    )


def save_dictionary(dictionary: Dictionary, path: str | Path, kind: Literal['complex', 'real'] | None = None) -> None:
    if kind is None:
        kind = 'real' if dictionary.is_real else 'complex'
    if kind == 'real' and not dictionary.is_real:
        raise ParameterError('A complex dictionary cannot be stored with a real payload')
    rows, cols = dictionary.shape
    header = f'{FDIC_MAGIC} {FDIC_VERSION} {rows} {cols} {dictionary.size} {kind}\n'
    payload = dictionary.atoms.real if kind == 'real' else dictionary.atoms
    with open(path, 'wb') as fh:
        fh.write(header.encode('ascii'))
        fh.write(np.ascontiguousarray(payload, dtype='<f8' if kind == 'real' else '<c16').tobytes())


def load_dictionary(path: str | Path) -> Dictionary:
    """Read an FDIC file; atoms are taken verbatim and labelled ``custom``."""
    data = Path(path).read_bytes()
    newline = data.find(b'\n')
    if newline < 0:
        raise FormatError(f'{path}: missing FDIC header line')
    fields = data[:newline].decode('ascii', errors='replace').split()
    if len(fields) != 6 or fields[0] != FDIC_MAGIC or fields[1] != FDIC_VERSION:
        raise FormatError(f'{path}: malformed FDIC header {data[:newline]!r}')
    try:
        rows, cols, size = (int(v) for v in fields[2:5])
    except ValueError as e:
        raise FormatError(f'{path}: non-integer dimensions in FDIC header') from e
    kind = fields[5]
    if kind not in ('complex', 'real') or rows < 1 or cols < 1 or size < 1:
        raise FormatError(f'{path}: invalid FDIC header values {fields[2:]}')

    dtype = np.dtype('<c16' if kind == 'complex' else '<f8')
    payload = data[newline + 1:]
    expected = rows * cols * size * dtype.itemsize
    if len(payload) != expected:
        complete = len(payload) // (rows * cols * dtype.itemsize)
        raise FormatError(
            f'{path}: payload holds {len(payload)} bytes, expected {expected}',
            atom_index=min(complete, size - 1),
        )
    atoms = np.frombuffer(payload, dtype=dtype).astype(np.complex128).reshape(size, rows, cols)
    zero = ~atoms.reshape(size, -1).any(axis=1)
    if zero.any():
        index = int(np.argmax(zero))
        raise FormatError(f'{path}: atom {index} is identically zero', atom_index=index)
    logger.info('Loaded %d custom atoms of %dx%d from %s', size, rows, cols, path)
    return Dictionary(atoms=atoms, families=('custom',) * size, freq_tags=np.full((size, 2), NO_TAG))


def parse_dictionary_spec(spec: str, rows: int, cols: int) -> Dictionary:
    """Resolve a ``--dict`` value: ``dft``, ``union:dct+wht`` or ``file:path``."""
    if spec.startswith('file:'):
        dictionary = load_dictionary(spec[len('file:'):])
        if dictionary.shape != (rows, cols):
            raise ShapeError(f'Dictionary file atoms are {dictionary.shape}, extrapolation area is {(rows, cols)}')
        return dictionary
    if spec.startswith('union:'):
        names = [name for name in spec[len('union:'):].split('+') if name]
        return union_dictionaries([parse_dictionary_spec(name, rows, cols) for name in names])
    if spec in GENERATED_FAMILIES:
        return generate_dictionary(spec, rows, cols)
    raise UnsupportedDictionaryError(f'Unknown dictionary spec {spec!r}')
