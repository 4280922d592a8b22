"""Image error concealment on top of FaSE.

Either the whole image is extrapolated as one area, or every connected lost
region is covered by blocks centred on it and each block is extrapolated from
a fixed-size area around it (the block plus a support ring, shifted inwards
at the image borders). Areas sharing a loss pattern share one Gram table.
"""
import logging
import threading
import time
from concurrent.futures import Future, ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage

from fase.dictionary import Dictionary
from fase.errors import ParameterError, StaleTableError
from fase.fast import GramTable, apply_model, fase_extrapolate, provenance_hash, tables_for
from fase.grid import ExtrapConfig, LossMask, build_weight_field, psnr_over_region
from fase.report import AreaReport, trace_entries

logger = logging.getLogger(__name__)


def parse_block(value: str) -> tuple[int, int]:
    """``WxH`` flag value to ``(rows, cols)``."""
    try:
        width, height = (int(v) for v in value.lower().split('x'))
    except ValueError as e:
        raise ParameterError(f'Block size must look like WxH, got {value!r}') from e
    if width < 1 or height < 1:
        raise ParameterError(f'Block size must be positive, got {value!r}')
    return height, width


@dataclass(frozen=True)
class AreaPlan:
    block_top: int
    block_left: int
    block_rows: int
    block_cols: int
    area_top: int
    area_left: int
    area_rows: int
    area_cols: int
    # label of the lost region this block restores; 0 restores every lost sample in the block
    region: int = 0

    @property
    def block(self) -> tuple[slice, slice]:
        return (slice(self.block_top, self.block_top + self.block_rows),
                slice(self.block_left, self.block_left + self.block_cols))

    @property
    def area(self) -> tuple[slice, slice]:
        return (slice(self.area_top, self.area_top + self.area_rows),
                slice(self.area_left, self.area_left + self.area_cols))

    @property
    def block_in_area(self) -> tuple[slice, slice]:
        top = self.block_top - self.area_top
        left = self.block_left - self.area_left
        return slice(top, top + self.block_rows), slice(left, left + self.block_cols)

    def targets(self, lost: np.ndarray, regions: np.ndarray) -> np.ndarray:
        """Samples of the block that this plan writes back."""
        if self.region == 0:
            return lost[self.block]
        return regions[self.block] == self.region


def label_regions(lost: np.ndarray) -> np.ndarray:
    """Connected lost regions (4-neighbourhood) labelled 1, 2, ... in raster order."""
    regions, _ = ndimage.label(lost)
    return regions


def _block_starts(start: int, extent: int, size: int, limit: int) -> list[int]:
    """One block centred on ``[start, start + extent)``, or consecutive blocks when it is longer."""
    if extent <= size:
        starts = [start - (size - extent) // 2]
    else:
        starts = list(range(start, start + extent, size))
    return list(dict.fromkeys(min(max(s, 0), limit - size) for s in starts))


def area_shape(image_shape: tuple[int, int], block: tuple[int, int] | None, support: int) -> tuple[int, int]:
    """Extrapolation area for a block and support ring, or the whole image without a block."""
    rows, cols = image_shape
    if block is None:
        return rows, cols
    if support < 0:
        raise ParameterError(f'Support ring width must be nonnegative, got {support}')
    area_rows, area_cols = block[0] + 2 * support, block[1] + 2 * support
    if area_rows > rows or area_cols > cols:
        raise ParameterError(f'Extrapolation area {area_rows}x{area_cols} exceeds image {rows}x{cols}')
    return area_rows, area_cols


def plan_areas(lost: np.ndarray, block: tuple[int, int] | None, support: int) -> list[AreaPlan]:
    rows, cols = lost.shape
    if not lost.any():
        return []
    area_rows, area_cols = area_shape(lost.shape, block, support)
    if block is None:
        return [AreaPlan(0, 0, rows, cols, 0, 0, rows, cols)]
    block_rows, block_cols = block
    regions = label_regions(lost)
    plans = []
    for region, (row_span, col_span) in enumerate(ndimage.find_objects(regions), start=1):
        tops = _block_starts(row_span.start, row_span.stop - row_span.start, block_rows, rows)
        lefts = _block_starts(col_span.start, col_span.stop - col_span.start, block_cols, cols)
        for top in tops:
            for left in lefts:
                if not (regions[top:top + block_rows, left:left + block_cols] == region).any():
                    continue
                area_top = min(max(top - support, 0), rows - area_rows)
                area_left = min(max(left - support, 0), cols - area_cols)
                plans.append(AreaPlan(top, left, block_rows, block_cols,
                                      area_top, area_left, area_rows, area_cols, region))
    return plans


def make_grid_loss(rows: int, cols: int, block: int = 16, spacing: int = 48, margin: int = 24) -> np.ndarray:
    """Regular lattice of lost ``block × block`` squares kept ``margin`` away from the borders."""
    if block < 1 or spacing < block:
        raise ParameterError(f'Loss lattice needs 1 <= block <= spacing, got block={block} spacing={spacing}')
    lost = np.zeros((rows, cols), dtype=bool)
    for top in range(margin, rows - margin - block + 1, spacing):
        for left in range(margin, cols - margin - block + 1, spacing):
            lost[top:top + block, left:left + block] = True
    return lost


class TableCache:
    """Gram tables keyed by provenance, shared by concurrently concealed areas.

    Each table is built once by the first area that needs it; other areas with
    the same pattern wait for that build, while different patterns build in
    parallel. With a ``path``, an existing file must match every pattern, and a
    missing file receives the first table built.
    """

    def __init__(self, dictionary: Dictionary, path: str | Path | None = None,
                 use_fft: bool | None = None, fft_threshold: int = 64, workers: int | None = None):
        self.dictionary = dictionary
        self.use_fft = use_fft
        self.fft_threshold = fft_threshold
        self.workers = workers
        self._tables: dict[int, Future] = {}
        self._lock = threading.Lock()
        self._stored: GramTable | None = None
        self._path = Path(path) if path is not None else None
        self._path_claimed = False
        if self._path is not None and self._path.exists():
            self._stored = GramTable.load(self._path)
            loaded = Future()
            loaded.set_result(self._stored)
            self._tables[self._stored.provenance] = loaded

    def get(self, mask: LossMask, rho_hat: float) -> GramTable:
        weight = build_weight_field(mask, rho_hat)
        key = provenance_hash(self.dictionary, weight)
        with self._lock:
            pending = self._tables.get(key)
            owner = pending is None
            if owner:
                if self._stored is not None:
                    raise StaleTableError(key, self._stored.provenance)
                pending = self._tables[key] = Future()
                path = None
                if self._path is not None and not self._path_claimed:
                    path, self._path_claimed = self._path, True
        if owner:
            try:
                tables = tables_for(self.dictionary, weight, path=path, use_fft=self.use_fft,
                                    fft_threshold=self.fft_threshold, workers=self.workers)
            except BaseException as e:
                pending.set_exception(e)
                raise
            pending.set_result(tables)
            logger.info('Gram table %#018x ready', key)
        return pending.result()


def conceal_area(
        image: np.ndarray,
        lost: np.ndarray,
        regions: np.ndarray,
        plan: AreaPlan,
        dictionary: Dictionary,
        cfg: ExtrapConfig,
        cache: TableCache,
        reference: np.ndarray | None = None,
        fft_threshold: int = 64,
) -> tuple[np.ndarray, AreaReport]:
    """Extrapolate one area and return the restored target block with its report."""
    start = time.perf_counter()
    signal = image[plan.area].astype(np.float64)
    mask = LossMask(lost[plan.area])
    tables = cache.get(mask, cfg.rho_hat)
    model, trace = fase_extrapolate(signal, mask, dictionary, tables, cfg, fft_threshold=fft_threshold)
    restored = apply_model(signal, model, mask)
    block = restored.values.real[plan.block_in_area]
    targets = plan.targets(lost, regions)

    psnr = None
    if reference is not None:
        psnr = psnr_over_region(reference[plan.block], block, targets)
    report = AreaReport(
        block_top=plan.block_top,
        block_left=plan.block_left,
        area_top=plan.area_top,
        area_left=plan.area_left,
        rows=plan.area_rows,
        cols=plan.area_cols,
        lost=int(targets.sum()),
        iterations=len(trace),
        seconds=time.perf_counter() - start,
        max_imag=restored.max_imag,
        table=f'{tables.provenance:#018x}',
        psnr=psnr,
        trace=trace_entries(trace),
    )
    return block, report


def conceal_image(
        image: np.ndarray,
        lost: np.ndarray,
        dictionary: Dictionary,
        cfg: ExtrapConfig,
        *,
        block: tuple[int, int] | None = None,
        support: int = 24,
        reference: np.ndarray | None = None,
        tables_path: str | Path | None = None,
        use_fft: bool | None = None,
        fft_threshold: int = 64,
        workers: int | None = None,
        single_thread: bool = False,
) -> tuple[np.ndarray, list[AreaReport]]:
    """Conceal every lost sample; returns unclamped restored samples and area reports."""
    if image.shape != lost.shape:
        raise ParameterError(f'Image shape {image.shape} does not match mask shape {lost.shape}')
    if reference is not None and reference.shape != image.shape:
        raise ParameterError(f'Reference shape {reference.shape} does not match image shape {image.shape}')
    plans = plan_areas(lost, block, support)
    restored = image.astype(np.float64)
    if not plans:
        logger.info('No lost samples, image is passed through unchanged')
        return restored, []
    expected_shape = (plans[0].area_rows, plans[0].area_cols)
    if dictionary.shape != expected_shape:
        raise ParameterError(f'Dictionary atoms are {dictionary.shape}, extrapolation areas are {expected_shape}')

    regions = label_regions(lost)
    cache = TableCache(dictionary, tables_path, use_fft=use_fft, fft_threshold=fft_threshold,
                       workers=None if single_thread else workers)

    def run(plan: AreaPlan):
        return conceal_area(image, lost, regions, plan, dictionary, cfg, cache, reference, fft_threshold)

    if single_thread or len(plans) == 1:
        results = [run(plan) for plan in plans]
    else:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            results = list(executor.map(run, plans))

    reports = []
    for plan, (values, report) in zip(plans, results):
        targets = plan.targets(lost, regions)
        restored[plan.block][targets] = values[targets]
        reports.append(report)
    logger.info('Concealed %d area(s) covering %d lost region(s)', len(plans), int(regions.max()))
    return restored, reports
