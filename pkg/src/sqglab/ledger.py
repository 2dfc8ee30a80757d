from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid, trapezoid

from .dyadic import BesovSpec, sequence_norm
from .errors import IncompleteLedgerError

LEDGER_PS: tuple[float, ...] = (1.0, 2.0, math.inf)


@dataclass
class TimeSeriesLedger:
    """Per-step records of a run.

    Single writer (the time loop) through `record`; every sequence has the
    length of `times`.
    """

    times: list[float] = field(default_factory=list)
    lp: dict[float, list[float]] = field(default_factory=dict)
    per_block_lp: dict[tuple[int, float], list[float]] = field(default_factory=dict)
    grad_v_inf: list[float] = field(default_factory=list)
    # ||theta||_2^2 and ||kappa^{1/2} |D|^{alpha/2} theta||_2^2 for the energy balance
    energy: list[float] = field(default_factory=list)
    dissipation: list[float] = field(default_factory=list)
    forcing_lp: dict[float, list[float]] = field(default_factory=dict)
    forcing_besov: dict[BesovSpec, list[float]] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.times)

    def record(
        self,
        t: float,
        lp: dict[float, float],
        blocks: dict[tuple[int, float], float],
        grad_v_inf: float,
        energy: float = 0.0,
        dissipation: float = 0.0,
        forcing_lp: dict[float, float] | None = None,
        forcing_besov: dict[BesovSpec, float] | None = None,
    ) -> None:
        if self.times and t <= self.times[-1]:
            raise ValueError(f"ledger times must increase: {t} after {self.times[-1]}")
        first = not self.times
        if first:
            self.lp = {p: [] for p in lp}
            self.per_block_lp = {key: [] for key in sorted(blocks)}
            self.forcing_lp = {p: [] for p in (forcing_lp or {})}
            self.forcing_besov = {spec: [] for spec in (forcing_besov or {})}
        self.times.append(float(t))
        for p, seq in self.lp.items():
            seq.append(float(lp[p]))
        for key, seq in self.per_block_lp.items():
            seq.append(float(blocks[key]))
        for p, seq in self.forcing_lp.items():
            seq.append(float((forcing_lp or {}).get(p, 0.0)))
        for spec, seq in self.forcing_besov.items():
            seq.append(float((forcing_besov or {}).get(spec, 0.0)))
        self.grad_v_inf.append(float(grad_v_inf))
        self.energy.append(float(energy))
        self.dissipation.append(float(dissipation))

    @property
    def block_indices(self) -> list[int]:
        return sorted({q for q, _ in self.per_block_lp})

    @property
    def ps(self) -> list[float]:
        return sorted({p for _, p in self.per_block_lp})

    def accumulated_v(self) -> np.ndarray:
        """V(t_i) = int_0^{t_i} ||grad v||_inf, trapezoid rule."""
        if not self.times:
            return np.zeros(0)
        return cumulative_trapezoid(np.asarray(self.grad_v_inf), np.asarray(self.times), initial=0.0)

    def accumulated_forcing(self, p: float) -> np.ndarray:
        if p not in self.forcing_lp:
            return np.zeros(len(self.times))
        return cumulative_trapezoid(np.asarray(self.forcing_lp[p]), np.asarray(self.times), initial=0.0)

    def block_norms_at(self, i: int, p: float) -> dict[int, float]:
        if not any(pp == p for _, pp in self.per_block_lp):
            raise IncompleteLedgerError(f"ledger has no per-block L^{p} data")
        return {q: seq[i] for (q, pp), seq in self.per_block_lp.items() if pp == p}


def _time_norm(values: np.ndarray, times: np.ndarray, r: float) -> np.ndarray:
    """L^r in time along axis -1 (trapezoid); r = inf is the max."""
    if math.isinf(r):
        return values.max(axis=-1)
    if len(times) < 2:
        return np.zeros(values.shape[:-1])
    return trapezoid(values ** r, times, axis=-1) ** (1.0 / r)


def mixed_time_norm(ledger: TimeSeriesLedger, spec: BesovSpec, r: float, T: float, tilde: bool) -> float:
    """L~^r_T B^s_{p,m} (tilde, block-first) or L^r_T B^s_{p,m} from recorded block norms."""
    if not ledger.times:
        raise IncompleteLedgerError("empty ledger")
    times = np.asarray(ledger.times)
    if times[0] > 1e-12 or times[-1] < T - 1e-9 * max(1.0, abs(T)):
        raise IncompleteLedgerError(f"ledger covers [{times[0]}, {times[-1]}], not [0, {T}]")
    keys = sorted(q for q, p in ledger.per_block_lp if p == spec.p)
    if not keys:
        raise IncompleteLedgerError(f"ledger has no per-block L^{spec.p} data")
    sel = times <= T + 1e-12
    t_sel = times[sel]
    weights = np.array([2.0 ** (q * spec.s) for q in keys])
    table = np.array([np.asarray(ledger.per_block_lp[(q, spec.p)])[sel] for q in keys]) * weights[:, None]
    if tilde:
        return sequence_norm(_time_norm(table, t_sel, r), spec.m)
    inst = np.array([sequence_norm(table[:, i], spec.m) for i in range(table.shape[1])])
    return float(_time_norm(inst, t_sel, r))
