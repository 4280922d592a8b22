"""Versioned JSON report schemas for the command line surface."""
from pydantic import BaseModel

from fase.selective import SeIterationTrace

REPORT_SCHEMA_VERSION = '1.0'


class TraceEntry(BaseModel):
    iteration: int
    index: int
    coefficient_re: float
    coefficient_im: float


def trace_entries(trace: SeIterationTrace) -> list[TraceEntry]:
    return [
        TraceEntry(
            iteration=r.iteration,
            index=r.index,
            coefficient_re=r.coefficient.real,
            coefficient_im=r.coefficient.imag,
        )
        for r in trace.records
    ]


class AreaReport(BaseModel):
    block_top: int
    block_left: int
    area_top: int
    area_left: int
    rows: int
    cols: int
    lost: int
    iterations: int
    seconds: float
    max_imag: float
    table: str
    psnr: float | None = None
    trace: list[TraceEntry] = []


class ConcealReport(BaseModel):
    schema_version: str = REPORT_SCHEMA_VERSION
    image: str
    mask: str
    reference: str | None = None
    rows: int
    cols: int
    dictionary: str
    dict_size: int
    iterations: int
    gamma: float
    rho_hat: float
    block: tuple[int, int] | None = None
    support: int | None = None
    lost: int
    psnr: float | None = None
    seconds: float
    areas: list[AreaReport] = []


class TrialReport(BaseModel):
    trial: int
    seed: int
    resolved_iterations: int
    selections_equal: bool
    max_coefficient_deviation: float
    max_recursion_deviation: float
    passed: bool


class VerifyReport(BaseModel):
    schema_version: str = REPORT_SCHEMA_VERSION
    rows: int
    cols: int
    dictionary: str
    dict_size: int
    loss: tuple[int, int]
    iterations: int
    gamma: float
    rho_hat: float
    tolerance: float
    trials: list[TrialReport] = []

    @property
    def passed(self) -> bool:
        return all(t.passed for t in self.trials)
