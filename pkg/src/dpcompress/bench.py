"""Timing and operation-count report for the exact and fused routes."""

from __future__ import annotations

import time
from dataclasses import dataclass

from .evaluate import compute_energy_forces_virial
from .fused import flop_report
from .md.domain import ParallelEvaluator
from .neighbor import build_neighbor_list


@dataclass(frozen=True)
class BenchReport:
    n_atoms: int
    nmax: int
    d1: int
    repeats: int
    n_workers: int
    tts_exact: float
    tts_fused: float
    fused_table_evals: int
    dense_table_evals: int
    flops: dict

    @property
    def speedup(self) -> float:
        return self.tts_exact / self.tts_fused

    def lines(self) -> list:
        f = self.flops
        return [
            f"atoms {self.n_atoms}  N_m {self.nmax}  d1 {self.d1}  workers {self.n_workers}"
            f"  repeats {self.repeats}",
            f"TtS exact  {self.tts_exact:.3e} s/step/atom",
            f"TtS fused  {self.tts_fused:.3e} s/step/atom  (speedup {self.speedup:.2f}x)",
            f"table evaluations per step: fused {self.fused_table_evals}, "
            f"dense {self.dense_table_evals} (N_m x N_a)",
            f"embedding FLOPs: network {f['original']:.4g}, table {f['tabulated']:.4g}, "
            f"ratio {f['ratio']:.3f}, savings {100 * f['savings']:.2f}%",
        ]


def _time_per_step(fn, repeats):
    fn()  # warm-up
    t0 = time.perf_counter()
    for _ in range(repeats):
        fn()
    return (time.perf_counter() - t0) / repeats


def bench(model, tables, config, n_workers: int = 1, repeats: int = 3) -> BenchReport:
    """Wall time per force evaluation per atom (s/step/atom) for the exact
    network and the fused tabulated route, with evaluation counters."""
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    nl = build_neighbor_list(config, model.rcut)
    timings = {}
    evals = 0
    for name, tabs in (("exact", None), ("fused", tables)):
        with ParallelEvaluator(model, tabs, n_workers=n_workers) as ev:
            ev.rebuild(config, nl)
            timings[name] = _time_per_step(lambda: ev(config), repeats) / config.n_atoms
            if tabs is not None:
                evals = ev.n_table_evals // ev.n_evaluations
    dense = compute_energy_forces_virial(config, model, nl, tables=tables,
                                         fused=False).n_table_evals
    return BenchReport(config.n_atoms, model.nmax, model.d1, repeats, n_workers,
                       timings["exact"], timings["fused"], evals, dense,
                       flop_report(config.n_atoms, model.nmax, model.d1))
