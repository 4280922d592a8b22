"""Operation counting for SE, FaSE and the Gram-table generation.

Complex multiplications and additions each count as one event. ``other``
collects divisions, comparisons, square roots, absolute values and
conjugations without weighting.
"""
import logging
from contextlib import contextmanager
from typing import Literal

from pydantic import BaseModel, ConfigDict, NonNegativeInt

from fase.errors import OpCountRangeError, ParameterError

logger = logging.getLogger(__name__)

Algo = Literal['se', 'fase', 'table_gen']

# counts are exported as signed 64-bit integers
MAX_COUNT = 2 ** 63 - 1


class OpCounts(BaseModel):
    model_config = ConfigDict(frozen=True)

    mul: NonNegativeInt = 0
    add: NonNegativeInt = 0
    other: NonNegativeInt = 0

    def __add__(self, other: 'OpCounts') -> 'OpCounts':
        return OpCounts(mul=self.mul + other.mul, add=self.add + other.add, other=self.other + other.other)

    @property
    def total(self) -> int:
        return self.mul + self.add + self.other


class OpCounter:
    """Per-run accumulator, fed by the algorithms with the cost of each step."""

    enabled = True

    def __init__(self):
        self.mul = 0
        self.add = 0
        self.other = 0
        self.divisions = 0
        self.loop_divisions = 0
        self._in_loop = False

    def tally(self, mul: int = 0, add: int = 0, other: int = 0, div: int = 0) -> None:
        """Record one step. ``div`` divisions are included in ``other``."""
        self.mul += mul
        self.add += add
        self.other += other
        self.divisions += div
        if self._in_loop:
            self.loop_divisions += div

    @contextmanager
    def iteration_loop(self):
        self._in_loop = True
        try:
            yield self
        finally:
            self._in_loop = False

    @property
    def counts(self) -> OpCounts:
        return OpCounts(mul=self.mul, add=self.add, other=self.other)


class NullCounter(OpCounter):
    """Counter for uninstrumented runs; every hook is a no-op."""

    enabled = False

    def tally(self, mul: int = 0, add: int = 0, other: int = 0, div: int = 0) -> None:
        pass

    @contextmanager
    def iteration_loop(self):
        yield self


NULL_COUNTER = NullCounter()


def _checked(value: int, what: str) -> int:
    if value > MAX_COUNT:
        raise OpCountRangeError(f'{what} count {value} exceeds the 64-bit range')
    return value


def predict_op_counts(algo: Algo, rows: int, cols: int, dict_size: int, iters: int = 1) -> OpCounts:
    """Closed-form operation counts for model or table generation.

    ``iters`` is ignored for ``table_gen``.
    """
    if min(rows, cols, dict_size) < 1 or (algo != 'table_gen' and iters < 1):
        raise ParameterError(
            f'Operation count parameters must be >= 1, got M={rows} N={cols} D={dict_size} I={iters}'
        )
    area = rows * cols
    d = dict_size
    if algo == 'se':
        mul = iters * (6 * area * d + d + 2 * area + 1)
        add = iters * (3 * area * d + 2 * area)
        other = 3 * iters * d
    elif algo == 'fase':
        mul = 2 * area * d + iters * (2 * d + area + 1)
        add = area * d + iters * (d + area)
        other = 2 * iters * d
    elif algo == 'table_gen':
        pairs = d * d + d
        mul = pairs * area
        add = pairs * area // 2
        other = pairs * area // 2 + d
    else:
        raise ParameterError(f'Unknown algorithm {algo!r}')
    return OpCounts(mul=_checked(mul, 'MUL'), add=_checked(add, 'ADD'), other=_checked(other, 'OTHER'))


def counted_run(
        algo: Literal['se', 'fase'],
        signal,
        mask,
        dictionary,
        cfg,
        tables=None,
        counter: OpCounter | None = None,
):
    """Run SE or FaSE with an active counter and return ``(model, counts)``.

    FaSE always evaluates the initial products by direct summation here so
    the tally follows the same grouping as :func:`predict_op_counts`. Pass
    your own ``counter`` to inspect division events afterwards.
    """
    from fase.fast import build_gram_tables, fase_extrapolate
    from fase.grid import build_weight_field
    from fase.selective import se_extrapolate

    counter = counter if counter is not None else OpCounter()
    if algo == 'se':
        model, _ = se_extrapolate(signal, mask, dictionary, cfg, counter=counter)
    elif algo == 'fase':
        if tables is None:
            tables = build_gram_tables(dictionary, build_weight_field(mask, cfg.rho_hat))
        model, _ = fase_extrapolate(signal, mask, dictionary, tables, cfg, counter=counter, use_fft=False)
    else:
        raise ParameterError(f'Unknown algorithm {algo!r}')
    logger.debug('Counted %s run: %s (loop divisions %d)', algo, counter.counts, counter.loop_divisions)
    return model, counter.counts
