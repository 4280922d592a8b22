"""Runtime and operation-count benchmark over a parameter grid.

Wall time is the median over repetitions after warm-up runs. FaSE timings
exclude the Gram-table build, which is timed in separate ``table_gen`` rows.
"""
import csv
import logging
import statistics
import time
from collections.abc import Callable, Iterable
from dataclasses import dataclass
from typing import TextIO

import numpy as np

from fase.dictionary import Dictionary, parse_dictionary_spec
from fase.errors import ParameterError
from fase.fast import build_gram_tables, fase_extrapolate
from fase.grid import ExtrapConfig, LossMask, build_weight_field
from fase.opcount import OpCounter, OpCounts, counted_run, predict_op_counts
from fase.selective import se_extrapolate
from fase.transform import fft_gram_table

logger = logging.getLogger(__name__)

CSV_HEADER = [
    'algo', 'M', 'N', 'dict', 'iters', 'seconds',
    'mul_pred', 'add_pred', 'other_pred', 'mul_meas', 'add_meas', 'other_meas',
]


@dataclass(frozen=True)
class BenchRow:
    algo: str
    rows: int
    cols: int
    dict_size: int
    iters: int
    seconds: float
    predicted: OpCounts
    measured: OpCounts | None

    def as_csv(self) -> list:
        measured = [self.measured.mul, self.measured.add, self.measured.other] if self.measured else ['', '', '']
        return [
            self.algo, self.rows, self.cols, self.dict_size, self.iters, f'{self.seconds:.6f}',
            self.predicted.mul, self.predicted.add, self.predicted.other, *measured,
        ]


def median_seconds(fn: Callable[[], object], warmup: int = 1, repeat: int = 3) -> float:
    if repeat < 1 or warmup < 0:
        raise ParameterError(f'Need repeat >= 1 and warmup >= 0, got repeat={repeat} warmup={warmup}')
    for _ in range(warmup):
        fn()
    samples = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - start)
    return statistics.median(samples)


@dataclass(frozen=True)
class BenchCase:
    dictionary: Dictionary
    mask: LossMask
    signal: np.ndarray


def make_case(dict_spec: str, size: int, dict_size: int | None, loss: int | None, seed: int) -> BenchCase:
    """Square ``size × size`` area with a central ``loss × loss`` hole (default size/4)."""
    dictionary = parse_dictionary_spec(dict_spec, size, size)
    if dict_size is not None:
        dictionary = dictionary.take(dict_size)
    loss = size // 4 if loss is None else loss
    mask = LossMask.central_block(size, size, loss, loss)
    signal = np.random.default_rng(seed).uniform(0.0, 255.0, (size, size))
    return BenchCase(dictionary, mask, signal)


def run_bench(
        sizes: Iterable[int],
        iters_list: Iterable[int],
        *,
        dict_spec: str = 'dct',
        dict_sizes: Iterable[int | None] = (None,),
        algos: Iterable[str] = ('se', 'fase'),
        gamma: float = 0.5,
        rho_hat: float = 0.8,
        loss: int | None = None,
        warmup: int = 1,
        repeat: int = 3,
        seed: int = 0,
        measure: bool = True,
        table_rows: bool = False,
        use_fft: bool = False,
) -> list[BenchRow]:
    rows_out = []
    iters_list = list(iters_list)
    for size in sizes:
        for dict_size in dict_sizes:
            case = make_case(dict_spec, size, dict_size, loss, seed)
            weight = build_weight_field(case.mask, rho_hat)
            d = case.dictionary.size
            tables = fft_gram_table(weight, case.dictionary) if use_fft else build_gram_tables(case.dictionary, weight)

            if table_rows:
                if use_fft:
                    seconds = median_seconds(lambda: fft_gram_table(weight, case.dictionary), warmup, repeat)
                    measured = None
                else:
                    seconds = median_seconds(lambda: build_gram_tables(case.dictionary, weight), warmup, repeat)
                    counter = OpCounter()
                    build_gram_tables(case.dictionary, weight, counter=counter)
                    measured = counter.counts
                rows_out.append(BenchRow('table_gen', size, size, d, 0, seconds,
                                         predict_op_counts('table_gen', size, size, d), measured))

            for iters in iters_list:
                cfg = ExtrapConfig.build(iterations=iters, gamma=gamma, rho_hat=rho_hat)
                for algo in algos:
                    if algo == 'se':
                        def fn():
                            return se_extrapolate(case.signal, case.mask, case.dictionary, cfg)
                    elif algo == 'fase':
                        def fn():
                            return fase_extrapolate(case.signal, case.mask, case.dictionary, tables, cfg)
                    else:
                        raise ParameterError(f'Unknown algorithm {algo!r}')
                    seconds = median_seconds(fn, warmup, repeat)
                    measured = None
                    if measure:
                        _, measured = counted_run(algo, case.signal, case.mask, case.dictionary, cfg, tables)
                    row = BenchRow(algo, size, size, d, iters, seconds,
                                   predict_op_counts(algo, size, size, d, iters), measured)
                    logger.info('%s M=N=%d D=%d I=%d: %.4fs', algo, size, d, iters, seconds)
                    rows_out.append(row)
    return rows_out


def write_csv(rows: Iterable[BenchRow], stream: TextIO) -> None:
    writer = csv.writer(stream)
    writer.writerow(CSV_HEADER)
    for row in rows:
        writer.writerow(row.as_csv())
