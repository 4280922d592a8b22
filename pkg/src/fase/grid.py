"""Grid, mask, weighting and quality primitives shared by every algorithm.

Index convention: ``m`` runs over rows ``0..M-1``, ``n`` over columns
``0..N-1``, storage is row-major. Fields are plain ``complex128`` ndarrays of
shape ``(M, N)``; masks and weights wrap boolean and float arrays of the same
shape.
"""
import hashlib
import logging
from dataclasses import dataclass
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from fase.errors import MaskError, ParameterError, ShapeError

logger = logging.getLogger(__name__)

PSNR_PEAK = 255.0
PSNR_IDENTICAL_DB = 99.0


def as_field(values, shape: tuple[int, int] | None = None) -> np.ndarray:
    """Validate ``values`` as an M×N sample grid and return it as complex128."""
    field = np.asarray(values, dtype=np.complex128)
    if field.ndim != 2 or field.shape[0] < 1 or field.shape[1] < 1:
        raise ShapeError(f'Expected a non-empty 2D grid, got shape {field.shape}')
    if shape is not None and field.shape != tuple(shape):
        raise ShapeError(f'Grid shape {field.shape} does not match expected {tuple(shape)}')
    return field


def _frozen(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class LossMask:
    """Partition of the extrapolation area into support A and loss B.

    ``lost[m, n]`` is True where the sample belongs to the loss area B.
    """

    lost: np.ndarray

    def __post_init__(self):
        lost = np.array(self.lost, dtype=bool)
        if lost.ndim != 2 or lost.size == 0:
            raise ShapeError(f'Loss mask must be a non-empty 2D grid, got shape {lost.shape}')
        if lost.all():
            raise MaskError('Support area is empty: every sample is flagged as lost')
        object.__setattr__(self, 'lost', _frozen(lost))

    @property
    def shape(self) -> tuple[int, int]:
        return self.lost.shape

    @property
    def support(self) -> np.ndarray:
        return ~self.lost

    @property
    def lost_count(self) -> int:
        return int(self.lost.sum())

    @classmethod
    def none_lost(cls, rows: int, cols: int) -> 'LossMask':
        return cls(np.zeros((rows, cols), dtype=bool))

    @classmethod
    def central_block(cls, rows: int, cols: int, block_rows: int, block_cols: int) -> 'LossMask':
        """Loss area as a centred ``block_rows × block_cols`` rectangle."""
        if not (0 <= block_rows <= rows and 0 <= block_cols <= cols):
            raise ParameterError(
                f'Loss block {block_rows}x{block_cols} does not fit into {rows}x{cols}'
            )
        lost = np.zeros((rows, cols), dtype=bool)
        top = (rows - block_rows) // 2
        left = (cols - block_cols) // 2
        lost[top:top + block_rows, left:left + block_cols] = True
        return cls(lost)


@dataclass(frozen=True, eq=False)
class WeightField:
    """Nonnegative weighting function w[m, n]; zero exactly on the loss area."""

    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        if values.ndim != 2 or values.size == 0:
            raise ShapeError(f'Weight field must be a non-empty 2D grid, got shape {values.shape}')
        if np.any(values < 0) or not np.all(np.isfinite(values)):
            raise ParameterError('Weights must be finite and nonnegative')
        object.__setattr__(self, 'values', _frozen(values))

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def digest(self) -> bytes:
        h = hashlib.sha256()
        h.update(np.asarray(self.shape, dtype='<u8').tobytes())
        h.update(self.values.astype('<f8').tobytes())
        return h.digest()


class ExtrapConfig(BaseModel):
    """Parameters shared by SE and FaSE model generation."""

    model_config = ConfigDict(frozen=True)

    iterations: int = Field(default=250, ge=1)
    gamma: float = Field(default=0.5, gt=0.0, le=1.0)
    rho_hat: float = Field(default=0.8, gt=0.0, le=1.0)
    tie_rule: Literal['lowest-index'] = 'lowest-index'
    # selection scores within this relative distance of the maximum count as ties
    tie_rtol: float = Field(default=1e-8, ge=0.0, lt=1e-3)

    @classmethod
    def build(cls, **kwargs) -> 'ExtrapConfig':
        """Construct a config, reporting validation failures as :class:`ParameterError`."""
        try:
            return cls(**kwargs)
        except ValidationError as e:
            raise ParameterError(f'Invalid extrapolation config: {e}') from e


def build_weight_field(mask: LossMask, rho_hat: float) -> WeightField:
    """Isotropic, exponentially decaying weight centred on the area; zero on B."""
    if not 0.0 < rho_hat <= 1.0:
        raise ParameterError(f'rho_hat must lie in (0, 1], got {rho_hat}')
    if not mask.support.any():
        raise MaskError('Support area is empty')
    rows, cols = mask.shape
    m = np.arange(rows, dtype=np.float64)[:, None] - (rows - 1) / 2.0
    n = np.arange(cols, dtype=np.float64)[None, :] - (cols - 1) / 2.0
    rho = rho_hat ** np.sqrt(m ** 2 + n ** 2)
    return WeightField(np.where(mask.lost, 0.0, rho))


def psnr_over_region(reference, candidate, region) -> float:
    """PSNR in dB between two 8-bit range images over a region.

    ``region`` is either a :class:`LossMask` (its loss area is used) or a
    boolean array of the grid's shape. Identical inputs yield 99 dB.
    """
    ref = np.real(np.asarray(reference, dtype=np.complex128))
    cand = np.real(np.asarray(candidate, dtype=np.complex128))
    if ref.shape != cand.shape:
        raise ShapeError(f'Reference shape {ref.shape} does not match candidate shape {cand.shape}')
    selected = region.lost if isinstance(region, LossMask) else np.asarray(region, dtype=bool)
    if selected.shape != ref.shape:
        raise ShapeError(f'Region shape {selected.shape} does not match image shape {ref.shape}')
    if not selected.any():
        raise ParameterError('PSNR region is empty')
    mse = float(np.mean((ref[selected] - cand[selected]) ** 2))
    if mse == 0.0:
        return PSNR_IDENTICAL_DB
    return float(10.0 * np.log10(PSNR_PEAK ** 2 / mse))
