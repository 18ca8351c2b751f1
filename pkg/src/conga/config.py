"""Run configuration shared by the command line and the scripts."""

from __future__ import annotations

from dataclasses import dataclass

from .graph import InputError
from .partitioner import BuildParams

SUITES = ("quality", "property3", "mixing-sampled", "fairness-audit", "laminarity")


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    c_t: float = 1.0
    c_phi: float = 1.0
    c_kappa: float = 1.0
    dense_cap: int = 512
    threads: int = 1
    samples: int = 100
    tol: float = 1e-6
    dense: bool = False
    suites: tuple[str, ...] = SUITES
    graph_path: str | None = None
    output_prefix: str | None = None

    def __post_init__(self):
        if not 0 <= self.seed < 2**64:
            raise InputError("seed must fit in 64 bits")
        if min(self.c_t, self.c_phi, self.c_kappa) <= 0:
            raise InputError("constants must be positive")
        if self.dense_cap < 1 or self.threads < 1 or self.samples < 1:
            raise InputError("dense cap, threads and samples must be positive")
        if not 0 < self.tol < 1:
            raise InputError("tol must lie in (0, 1)")
        bad = [s for s in self.suites if s not in SUITES]
        if bad:
            raise InputError(f"unknown suite(s) {bad}; choose from {list(SUITES)}")

    def build_params(self) -> BuildParams:
        return BuildParams(self.seed, self.c_t, self.c_phi, self.c_kappa, self.dense_cap, self.threads, dense=self.dense)
