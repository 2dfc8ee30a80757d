"""
Named verification suites.

Each suite builds its seeded corpus, measures one family of estimates and
fills a SuiteReport: hard checks decide the exit status, monitored checks and
fitted constants are only recorded. Defaults reproduce the acceptance runs;
plan params override any of them (smaller grids, fewer trials).
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np
from loguru import logger

from . import corpus
from .diagnostics import (
    contraction_ratios,
    critical_index,
    energy_balance_residuals,
    fitted_decay_rate,
    ledger_besov_series,
    local_existence_time,
    maximum_principle_violations,
    scaling_ratio,
    smallness_report,
    theorem2_probe,
    v_tail_increment,
)
from .dyadic import (
    RING_INNER,
    RING_OUTER,
    BesovSpec,
    bernstein_ratio,
    besov_norm,
    besov_norm_finite_difference,
    bony_decompose,
    build_family,
    decompose,
    dealiased_product,
    product_law_ratio,
    riesz_besov_ratio,
    transport_commutator_sum,
)
from .errors import BlowupError, ConfigurationError
from .exporter import export_report_json, export_table_csv, fmt_exponent
from .fractional import (
    SemigroupSpec,
    calibrate_c_alpha,
    commutator_frac_composition,
    semigroup_decay_fit,
    semigroup_kernel_l1,
    semigroup_spectral,
    vishik_block_transfer,
    vishik_reference,
)
from .ledger import mixed_time_norm
from .maps import MeasurePreservingMap, compose_with_map, jacobian_determinant
from .solver import (
    SolverConfig,
    constant_forcing,
    run_iterative_scheme,
    run_td,
    simulate,
    steady_velocity,
)
from .spectral import Grid, PhysicalField, SpectralField, forward, inverse, lp_norm, riesz_velocity, to_physical

INF = math.inf


@dataclass
class Check:
    name: str
    passed: bool
    hard: bool
    value: float | None = None
    limit: float | None = None


@dataclass
class SuiteReport:
    experiment: str
    anchor: str
    seed: int
    measures: str = ""
    params: dict[str, Any] = field(default_factory=dict)
    checks: list[Check] = field(default_factory=list)
    constants: dict[str, Any] = field(default_factory=dict)
    tables: dict[str, tuple[list[str], list[dict[str, Any]]]] = field(default_factory=dict)

    def check(
        self, name: str, passed: bool, hard: bool = True, value: float | None = None, limit: float | None = None
    ) -> bool:
        passed = bool(passed)
        self.checks.append(Check(name, passed, hard, None if value is None else float(value), limit))
        if not passed:
            msg = f"[{self.experiment}] {name}: value={value} limit={limit}"
            if hard:
                logger.error(msg)
            else:
                logger.warning(f"{msg} (monitored)")
        return passed

    def record(self, key: str, value: Any) -> None:
        self.constants[key] = value

    def table(self, name: str, fieldnames: list[str], rows: list[dict[str, Any]]) -> None:
        self.tables[name] = (fieldnames, rows)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks if c.hard)

    @property
    def max_ratio(self) -> float | None:
        return self.constants.get("max_ratio")

    def to_dict(self) -> dict[str, Any]:
        return {
            "experiment": self.experiment,
            "anchor": self.anchor,
            "measures": self.measures,
            "seed": self.seed,
            "params": self.params,
            "passed": self.passed,
            "checks": [
                {"name": c.name, "passed": c.passed, "hard": c.hard, "value": c.value, "limit": c.limit}
                for c in self.checks
            ],
            "max_ratio": self.max_ratio,
            "fitted_constants": self.constants,
            "tables": sorted(self.tables),
        }


@dataclass(frozen=True)
class SuiteContext:
    seed: int
    params: dict[str, Any] = field(default_factory=dict)
    eta: float = 0.05
    rate_c: float = 1.0

    def get(self, key: str, default: Any = None) -> Any:
        return self.params.get(key, default)

    def rng(self, stream: int) -> np.random.Generator:
        return corpus.make_rng(self.seed, stream)


# --- littlewood-paley ---------------------------------------------------------


def suite_partition(ctx: SuiteContext, rep: SuiteReport) -> None:
    rows = []
    for n in ctx.get("ns", [32, 64, 128]):
        grid = Grid(int(n))
        fam = build_family(grid)
        km = grid.kmag
        inhom_sum = fam.low_symbol + sum(fam.block_symbol(q) for q in range(0, fam.q_max + 1))
        inhom = float(np.abs(1.0 - inhom_sum).max())
        hom_sum = sum(fam.block_symbol(q) for q in fam.homogeneous_range)
        hom = float(np.abs(1.0 - hom_sum[km > 0]).max())
        leak = 0.0
        for q in fam.homogeneous_range:
            outside = (km < RING_INNER * 2.0 ** q) | (km > RING_OUTER * 2.0 ** q)
            leak = max(leak, float(np.abs(fam.block_symbol(q)[outside]).max(initial=0.0)))
        rng = ctx.rng(int(n))
        worst = 0.0
        for _ in range(int(ctx.get("trials", 100))):
            u = corpus.random_field(grid, rng, k_max=grid.k_max, slope=1.0)
            rec = decompose(u, fam).reconstruct()
            worst = max(worst, (rec - u).l2_norm() / u.l2_norm())
        rows.append({"n": n, "residual_inhom": inhom, "residual_hom": hom, "support_leak": leak, "reconstruction": worst})
        rep.check(f"partition_inhomogeneous_n{n}", inhom <= 1e-12, value=inhom, limit=1e-12)
        rep.check(f"partition_homogeneous_n{n}", hom <= 1e-12, value=hom, limit=1e-12)
        rep.check(f"block_support_n{n}", leak == 0.0, value=leak, limit=0.0)
        rep.check(f"reconstruction_n{n}", worst <= 1e-10, value=worst, limit=1e-10)
    rep.table("residuals", ["n", "residual_inhom", "residual_hom", "support_leak", "reconstruction"], rows)


def suite_bernstein(ctx: SuiteContext, rep: SuiteReport) -> None:
    grid = Grid(int(ctx.get("n", 128)))
    fam = build_family(grid)
    rng = ctx.rng(1)
    frac = float(ctx.get("fractional_order", 0.5))
    rows = []
    upper_all: list[float] = []
    lower_all: list[float] = []
    for q in ctx.get("qs", [1, 2, 3, 4, 5]):
        q = int(q)
        mono = forward(corpus.single_mode(grid, (2 ** q, 0), 1.0, "cos"))
        r_mono = bernstein_ratio(mono, q, 1, INF, INF)
        rep.check(f"monochromatic_q{q}", abs(r_mono - 1.0) <= 1e-10, value=r_mono, limit=1.0)
        upper, lower, fractional = [], [], []
        for _ in range(int(ctx.get("trials", 200))):
            b = corpus.block_field(grid, fam, rng, q)
            upper.append(bernstein_ratio(b, q, 1, 2.0, INF))
            lower.append(bernstein_ratio(b, q, 1, 2.0, 2.0))
            fractional.append(bernstein_ratio(b, q, frac, 2.0, 2.0, fractional=True))
        upper_all += upper
        lower_all += lower
        rows.append(
            {
                "q": q,
                "max_ratio_2_inf": max(upper),
                "min_ratio_2_2": min(lower),
                "max_ratio_2_2": max(lower),
                "min_fractional": min(fractional),
                "max_fractional": max(fractional),
            }
        )
    rep.record("max_ratio", max(upper_all))
    rep.record("min_two_sided", min(lower_all))
    rep.check("upper_constant_le_8", max(upper_all) <= 8.0, hard=False, value=max(upper_all), limit=8.0)
    rep.check("two_sided_lower_positive", min(lower_all) > 0.0, value=min(lower_all), limit=0.0)
    rep.table(
        "ratios",
        ["q", "max_ratio_2_inf", "min_ratio_2_2", "max_ratio_2_2", "min_fractional", "max_fractional"],
        rows,
    )


def _minkowski_checks(rep: SuiteReport, ledger, label: str, s: float, p: float, T: float) -> None:
    for r, m in ((1.0, 1.0), (2.0, 1.0), (INF, 1.0), (1.0, 2.0), (2.0, 2.0), (1.0, INF), (INF, 2.0)):
        spec = BesovSpec(s, p, m)
        tilde = mixed_time_norm(ledger, spec, r, T, tilde=True)
        plain = mixed_time_norm(ledger, spec, r, T, tilde=False)
        tol = 1e-12 * max(tilde, plain, 1e-300)
        name = f"minkowski_{label}_r{fmt_exponent(r)}_m{fmt_exponent(m)}"
        if r >= m:
            rep.check(name, tilde >= plain - tol, value=tilde - plain, limit=0.0)
        if r <= m:
            rep.check(name + "_reverse", tilde <= plain + tol, value=plain - tilde, limit=0.0)


def suite_equivalence(ctx: SuiteContext, rep: SuiteReport) -> None:
    s, p, m = float(ctx.get("s", 0.5)), float(ctx.get("p", 2.0)), float(ctx.get("m", 2.0))
    rows = []
    ratios = []
    for n in ctx.get("ns", [32, 64, 128]):
        grid = Grid(int(n))
        fam = build_family(grid)
        rng = ctx.rng(100 + int(n))
        fields = [("sin_y", corpus.single_mode(grid, (0, 1)))]
        for i in range(int(ctx.get("trials", 3))):
            fields.append((f"random_{i}", inverse(corpus.random_field(grid, rng, k_max=6.0 * grid.k_min))))
        for label, u in fields:
            fd = besov_norm_finite_difference(u, s, p, m)
            uh = forward(u).without_mean()
            dy = besov_norm(uh, BesovSpec(s, p, m), fam)
            ratio = fd / dy
            ratios.append(ratio)
            shifted = PhysicalField(grid, np.roll(u.values, (3, 5), axis=(0, 1)))
            fd_shift = besov_norm_finite_difference(shifted, s, p, m)
            row = {"n": n, "field": label, "fd_norm": fd, "dyadic_norm": dy, "ratio": ratio}
            for mm in (1.0, 2.0, INF):
                row[f"ratio_m{fmt_exponent(mm)}"] = besov_norm_finite_difference(u, s, p, mm) / besov_norm(
                    uh, BesovSpec(s, p, mm), fam
                )
            rows.append(row)
            rep.check(f"equivalence_{label}_n{n}", 0.1 <= ratio <= 10.0, value=ratio, limit=10.0)
            rep.check(
                f"translation_invariance_{label}_n{n}", abs(fd_shift - fd) <= 1e-10 * fd, value=abs(fd_shift - fd)
            )
            # l^inf <= l^1 and the B^0_{inf,1} -> L^inf embedding hold exactly for the discrete blocks
            b_inf = besov_norm(uh, BesovSpec(s, p, INF), fam)
            b_one = besov_norm(uh, BesovSpec(s, p, 1.0), fam)
            rep.check(f"linf_le_l1_{label}_n{n}", b_inf <= b_one * (1 + 1e-12), value=b_inf, limit=b_one)
            sup = lp_norm(to_physical(uh.coeffs, grid), INF, grid)
            b0 = besov_norm(uh, BesovSpec(0.0, INF, 1.0), fam)
            rep.check(f"b0_embeds_linf_{label}_n{n}", sup <= b0 * (1 + 1e-12) + 1e-14, value=sup, limit=b0)
    rep.record("equivalence_min", min(ratios))
    rep.record("equivalence_max", max(ratios))
    rep.record("max_ratio", max(max(ratios), 1.0 / min(ratios)))
    rep.table(
        "equivalence",
        ["n", "field", "fd_norm", "dyadic_norm", "ratio", "ratio_m1", "ratio_m2", "ratio_minf"],
        rows,
    )

    # monitored embeddings, Riesz boundedness, product law and the transport commutator
    grid = Grid(int(ctx.get("probe_n", 64)))
    fam = build_family(grid)
    rng = ctx.rng(7)
    emb_rows = []
    for i in range(int(ctx.get("probe_trials", 5))):
        u = corpus.random_field(grid, rng, k_max=grid.n / 4 * grid.k_min, slope=1.5)
        v = corpus.random_field(grid, rng, k_max=grid.n / 4 * grid.k_min, slope=1.5)
        left = besov_norm(u, BesovSpec(0.5, 2.0, 1.0), fam)
        right = besov_norm(u, BesovSpec(0.5 - 1.0, INF, 2.0), fam)
        riesz = riesz_besov_ratio(u, BesovSpec(0.5, 2.0, 1.0), fam)
        vel = riesz_velocity(u)
        prod_lhs, prod_rhs = product_law_ratio(vel, v, fam)
        comm_lhs, comm_ref = transport_commutator_sum(vel, v, 0.5, 2.0, fam)
        t_uv, t_vu, rem = bony_decompose(u, v, fam)
        ref = dealiased_product(u, v)
        bony_err = (t_uv + t_vu + rem - ref).l2_norm() / ref.l2_norm()
        rep.check(f"bony_reconstruction_{i}", bony_err <= 1e-9, value=bony_err, limit=1e-9)
        emb_rows.append(
            {
                "trial": i,
                "embedding_ratio": right / left,
                "riesz_ratio": riesz,
                "product_ratio": prod_lhs / prod_rhs,
                "commutator_ratio": comm_lhs / comm_ref,
                "bony_error": bony_err,
            }
        )
    for key in ("embedding_ratio", "riesz_ratio", "product_ratio", "commutator_ratio"):
        rep.record(f"max_{key}", max(r[key] for r in emb_rows))
    rep.table(
        "monitored", ["trial", "embedding_ratio", "riesz_ratio", "product_ratio", "commutator_ratio", "bony_error"], emb_rows
    )

    theta0 = corpus.random_field(grid, rng, k_max=8.0 * grid.k_min)
    state = run_td(theta0, SolverConfig(alpha=0.5, dt=0.01, t_end=0.5), fam=fam)
    _minkowski_checks(rep, state.ledger, "heat", 0.5, 2.0, state.t)


# --- fractional operators -----------------------------------------------------


def suite_semigroup(ctx: SuiteContext, rep: SuiteReport) -> None:
    grid = Grid(int(ctx.get("n", 128)))
    fam = build_family(grid)
    rng = ctx.rng(2)
    qs = [int(q) for q in ctx.get("qs", [1, 2, 3, 4, 5])]
    npts = int(ctx.get("points", 20))
    span = float(ctx.get("span", 4.0))
    rows: list[dict[str, Any]] = []
    kernel_rows: list[dict[str, Any]] = []
    for alpha in ctx.get("alphas", [0.5, 0.8]):
        alpha = float(alpha)
        fits = []
        for q in qs:
            block = corpus.block_field(grid, fam, rng, q)
            times = np.linspace(0.0, span / 2.0 ** (q * alpha), npts)
            fit = semigroup_decay_fit(block, alpha, q, times)
            fits.append(fit)
            rep.check(f"decay_positive_a{alpha:g}_q{q}", fit.c > 0, value=fit.c, limit=0.0)
        c_ref = float(np.exp(np.mean(np.log([max(f.c, 1e-300) for f in fits]))))
        rep.record(f"c_alpha{alpha:g}", c_ref)
        for f in fits:
            rel = abs(f.c - c_ref) / c_ref
            rows.append({"alpha": alpha, "q": f.q, "C": f.C, "c": f.c, "rate": f.rate, "rel_to_c": rel})
            rep.check(f"decay_exponent_a{alpha:g}_q{f.q}", rel <= 0.25, value=rel, limit=0.25)

        kernel_rows += _kernel_sweep(ctx, rep, fam, alpha, c_ref)
    rep.table("decay", ["alpha", "q", "C", "c", "rate", "rel_to_c"], rows)
    rep.table("kernel_l1", ["alpha", "q", "t", "l1"], kernel_rows)

    u = corpus.random_field(grid, rng)
    s1, s2 = SemigroupSpec(0.5, 0.3), SemigroupSpec(0.5, 0.45)
    twice = semigroup_spectral(semigroup_spectral(u, s1), s2)
    once = semigroup_spectral(u, SemigroupSpec(0.5, 0.75))
    err = float(np.abs(twice.coeffs - once.coeffs).max() / np.abs(u.coeffs).max())
    rep.check("semigroup_law", err <= 1e-12, value=err, limit=1e-12)

    mode = corpus.single_mode(grid, (2, 0))
    decayed = inverse(semigroup_spectral(forward(mode), SemigroupSpec(0.5, 1.0)))
    expected = math.exp(-(2.0 ** 0.5))
    for p in (1.0, 2.0, INF):
        ratio = lp_norm(decayed, p) / lp_norm(mode, p)
        rep.check(f"single_mode_decay_p{fmt_exponent(p)}", abs(ratio - expected) <= 1e-12, value=ratio, limit=expected)


def _kernel_sweep(ctx: SuiteContext, rep: SuiteReport, fam, alpha: float, c_ref: float) -> list[dict[str, Any]]:
    rows = []
    for q in ctx.get("kernel_qs", [1, 2, 3]):
        q = int(q)
        ts = np.linspace(0.0, 3.0 / 2.0 ** (q * alpha), int(ctx.get("kernel_points", 8)))
        vals = [semigroup_kernel_l1(SemigroupSpec(alpha, float(t)), q, fam) for t in ts]
        for t, v in zip(ts, vals):
            rows.append({"alpha": alpha, "q": q, "t": float(t), "l1": v})
        worst = max((vals[i + 1] - vals[i] for i in range(len(vals) - 1)), default=0.0)
        rep.check(f"kernel_monotone_a{alpha:g}_q{q}", worst <= 1e-9, value=worst, limit=1e-9)
        tail = slice(len(ts) // 2, None)
        slope = float(np.polyfit(ts[tail], np.log(vals[tail]), 1)[0])
        target = -c_ref * 2.0 ** (q * alpha)
        rel = abs(slope - target) / abs(target)
        rep.record(f"kernel_slope_a{alpha:g}_q{q}", slope)
        rep.check(f"kernel_slope_a{alpha:g}_q{q}", rel <= 0.25, hard=False, value=rel, limit=0.25)
    return rows


def suite_e1calibration(ctx: SuiteContext, rep: SuiteReport) -> None:
    grid = Grid(int(ctx.get("n", 128)))
    rng = ctx.rng(3)
    k_lo, k_hi = ctx.get("band", [12.0, 16.0])
    rows = []
    for alpha in ctx.get("alphas", [0.3, 0.5, 0.7]):
        alpha = float(alpha)
        fields = [corpus.band_limited_field(grid, rng, k_lo, k_hi) for _ in range(int(ctx.get("fields", 10)))]
        cal = calibrate_c_alpha(fields, alpha)
        held = corpus.band_limited_field(grid, rng, k_lo, k_hi)
        disc = cal.discrepancy(held)
        rows.append(
            {
                "alpha": alpha,
                "c_alpha": cal.c_alpha,
                "analytic": cal.analytic,
                "fit_residual": cal.fit_residual,
                "held_out": disc,
            }
        )
        rep.record(f"c_alpha{alpha:g}", cal.c_alpha)
        rep.record(f"analytic_alpha{alpha:g}", cal.analytic)
        rep.check(f"held_out_alpha{alpha:g}", disc <= 0.05, value=disc, limit=0.05)
    rep.record("max_ratio", max(r["held_out"] for r in rows))
    rep.table("calibration", ["alpha", "c_alpha", "analytic", "fit_residual", "held_out"], rows)


def _isometries(grid: Grid) -> dict[str, MeasurePreservingMap]:
    h = grid.spacing
    return {
        "identity": MeasurePreservingMap.identity(),
        "translation_lattice": MeasurePreservingMap.translation((3 * h, 5 * h)),
        "translation_offgrid": MeasurePreservingMap.translation((0.3, 0.7)),
        "rotation_quarter": MeasurePreservingMap.rotation(0.5 * math.pi),
        "rotation_half": MeasurePreservingMap.rotation(math.pi),
    }


def suite_commutator(ctx: SuiteContext, rep: SuiteReport) -> None:
    grid = Grid(int(ctx.get("n", 128)))
    fam = build_family(grid)
    rng = ctx.rng(4)
    p = float(ctx.get("p", 2.0))
    u = inverse(corpus.random_field(grid, rng, k_max=6.0 * grid.k_min))
    rows = []
    for alpha in ctx.get("alphas", [0.3, 0.5, 0.7]):
        alpha = float(alpha)
        scale = besov_norm(forward(u).without_mean(), BesovSpec(alpha, p, 1.0), fam)
        for name, psi in _isometries(grid).items():
            lhs, _ = commutator_frac_composition(u, psi, alpha, p, fam)
            rep.check(f"isometry_{name}_a{alpha:g}", lhs <= 1e-9 * scale, value=lhs / scale, limit=1e-9)
        for axis in (0, 1):
            for amp in ctx.get("amplitudes", [0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4]):
                psi = MeasurePreservingMap.shear(axis, float(amp), length=grid.length)
                lhs, bound = commutator_frac_composition(u, psi, alpha, p, fam)
                rows.append(
                    {
                        "alpha": alpha,
                        "axis": axis,
                        "amplitude": float(amp),
                        "lip": psi.lip_forward,
                        "lhs": lhs,
                        "bound": bound,
                        "ratio": lhs / bound,
                    }
                )
    ratios = [r["ratio"] for r in rows]
    rep.record("max_ratio", max(ratios))
    rep.check("shear_ratios_finite", all(math.isfinite(r) for r in ratios), value=max(ratios))
    envelope = ctx.get("shear_envelope")
    if envelope is not None:
        rep.check("shear_ratio_envelope", max(ratios) <= 1.5 * float(envelope), value=max(ratios), limit=1.5 * float(envelope))
    rep.table("shear_sweep", ["alpha", "axis", "amplitude", "lip", "lhs", "bound", "ratio"], rows)

    w = PhysicalField.from_function(grid, lambda x, y: np.sin(x) + 0.5 * np.sin(y))
    maps = {
        "shear_x": MeasurePreservingMap.shear(0, 0.3, length=grid.length),
        "shear_y": MeasurePreservingMap.shear(1, 0.3, length=grid.length),
        "composed": MeasurePreservingMap.composed(
            MeasurePreservingMap.shear(0, 0.2, length=grid.length), MeasurePreservingMap.translation((0.4, 0.1))
        ),
        "rotation": MeasurePreservingMap.rotation(0.5 * math.pi),
    }
    for name, psi in maps.items():
        moved = compose_with_map(w, psi)
        for q in (1.0, 2.0, INF):
            base = lp_norm(w, q)
            rel = abs(lp_norm(moved, q) - base) / base
            rep.check(f"measure_preserved_{name}_p{fmt_exponent(q)}", rel <= 1e-3, value=rel, limit=1e-3)
        if psi.kind != "rotation":
            det = float(np.abs(jacobian_determinant(psi, grid) - 1.0).max())
            rep.check(f"unit_jacobian_{name}", det <= 1e-10, value=det, limit=1e-10)


def suite_vishik(ctx: SuiteContext, rep: SuiteReport) -> None:
    grid = Grid(int(ctx.get("n", 128)))
    fam = build_family(grid)
    rng = ctx.rng(5)
    f = corpus.random_field(grid, rng, k_max=grid.n / 3 * grid.k_min, slope=0.5)
    dmax = int(ctx.get("max_offset", 4))
    floor = float(ctx.get("floor", 1e-13))
    shear = MeasurePreservingMap.shear(0, float(ctx.get("amplitude", 0.15)), length=grid.length)
    identity = MeasurePreservingMap.identity()
    rows = []
    rates = []
    for q in ctx.get("qs", [2, 3, 4]):
        q = int(q)
        block_norm = lp_norm(to_physical(fam.block_symbol(q) * f.coeffs, grid), 2.0, grid)
        by_offset: dict[int, float] = {}
        for j in range(q - dmax, q + dmax + 1):
            if j not in fam.homogeneous_range:
                continue
            val = vishik_block_transfer(f, shear, j, q, fam)
            ref = vishik_reference(f, shear, j, q, fam)
            ratio = val / ref if ref > 0 else 0.0
            by_offset[abs(j - q)] = max(by_offset.get(abs(j - q), 0.0), ratio)
            rows.append({"q": q, "j": j, "transfer": val, "reference": ref, "ratio": ratio})
            ident = vishik_block_transfer(f, identity, j, q, fam)
            if abs(j - q) >= 2:
                rep.check(f"identity_disjoint_q{q}_j{j}", ident == 0.0, value=ident, limit=0.0)
            elif j == q:
                rep.check(f"identity_diagonal_q{q}", ident <= block_norm * (1 + 1e-12), value=ident, limit=block_norm)
        r0 = by_offset.get(0, 0.0)
        far = [d for d in sorted(by_offset) if d > 0 and by_offset[d] > floor * r0]
        rate = (r0 / by_offset[far[-1]]) ** (1.0 / far[-1]) if far and r0 > 0 else INF
        rates.append(rate)
        # fitted on transfer / reference, which already carries 2^{-|j-q|}
        rep.record(f"ratio_decay_rate_q{q}", rate)
        rep.check(f"ratio_geometric_decay_q{q}", rate >= 1.7, value=rate, limit=1.7)
    rep.record("max_ratio", max(r["ratio"] for r in rows))
    rep.table("transfer", ["q", "j", "transfer", "reference", "ratio"], rows)


# --- evolution ----------------------------------------------------------------


def _scaled_random(grid: Grid, rng: np.random.Generator, k_max: float, amplitude: float) -> SpectralField:
    u = corpus.random_field(grid, rng, k_max=k_max * grid.k_min)
    sup = lp_norm(to_physical(u.coeffs, grid), INF, grid)
    return u * (amplitude / sup) if sup > 0 else u


def suite_maxprinciple(ctx: SuiteContext, rep: SuiteReport) -> None:
    grid = Grid(int(ctx.get("n", 128)))
    fam = build_family(grid)
    rng = ctx.rng(6)
    cfg = SolverConfig(
        alpha=float(ctx.get("alpha", 0.5)), dt=float(ctx.get("dt", 0.01)), t_end=float(ctx.get("t_end", 1.0))
    )
    amplitude = float(ctx.get("amplitude", 0.1))
    runs = int(ctx.get("runs", 5))
    rows = []
    worst_drift = 0.0
    worst_energy = 0.0
    for i in range(runs):
        theta0 = _scaled_random(grid, rng, 3.0, amplitude)
        state = simulate(theta0, cfg, fam)
        worst_drift = max(worst_drift, state.mean_drift)
        bad = maximum_principle_violations(state.ledger)
        energy = float(energy_balance_residuals(state.ledger).max(initial=0.0))
        worst_energy = max(worst_energy, energy)
        rows.append({"run": i, "forced": False, "steps": state.steps, "violations": len(bad), "energy_residual": energy})
        rep.check(f"unforced_run{i}", not bad, value=len(bad), limit=0)
    for i in range(runs):
        theta0 = _scaled_random(grid, rng, 3.0, amplitude)
        f = _scaled_random(grid, rng, 2.0, amplitude)
        v = corpus.shear_flow(grid, float(ctx.get("shear", 0.5)))
        state = run_td(theta0, cfg, steady_velocity(v), constant_forcing(f), fam=fam)
        worst_drift = max(worst_drift, state.mean_drift)
        bad = maximum_principle_violations(state.ledger, forced=True)
        rows.append({"run": runs + i, "forced": True, "steps": state.steps, "violations": len(bad), "energy_residual": ""})
        rep.check(f"forced_run{i}", not bad, value=len(bad), limit=0)
    # zero mode measured before the solver projects it out
    drift = worst_drift / amplitude
    rep.check("mean_conserved", drift <= 1e-10, value=drift, limit=1e-10)
    rep.record("max_energy_residual", worst_energy)
    rep.table("runs", ["run", "forced", "steps", "violations", "energy_residual"], rows)


def suite_smalldata(ctx: SuiteContext, rep: SuiteReport) -> None:
    grid = Grid(int(ctx.get("n", 128)))
    fam = build_family(grid)
    rng = ctx.rng(8)
    alpha = float(ctx.get("alpha", 0.5))
    cfg = SolverConfig(alpha=alpha, dt=float(ctx.get("dt", 0.1)), t_end=float(ctx.get("t_end", 50.0)))
    target = float(ctx.get("target", 0.04))
    rows = []
    blowups = 0
    amps: list[float] = []
    rates: list[float] = []
    for i in range(int(ctx.get("runs", 10))):
        theta0 = corpus.small_data_field(grid, fam, rng, alpha, target, k_max=float(ctx.get("k_max", 4.0)))
        report = smallness_report(theta0, alpha, fam)
        rate_c = fitted_decay_rate(theta0, alpha, fam, fallback=ctx.rate_c)
        rates.append(rate_c)
        t0 = local_existence_time(theta0, alpha, rate_c, ctx.eta, fam)
        try:
            state = simulate(theta0, cfg, fam)
        except BlowupError as exc:
            blowups += 1
            logger.error(f"smalldata run {i}: {exc}")
            continue
        tail = v_tail_increment(state.ledger)
        row = {
            "run": i,
            "b_inf": report.b_inf,
            "c": rate_c,
            "T0": t0,
            "V_final": float(state.ledger.accumulated_v()[-1]),
            "V_tail": tail,
        }
        rep.check(f"v_converges_run{i}", tail < 1e-4, value=tail, limit=1e-4)
        for p in (1.0, 2.0, INF):
            series = ledger_besov_series(state.ledger, BesovSpec(critical_index(p, alpha), p, 1.0))
            amp = float(series.max() / series[0]) if series[0] > 0 else 0.0
            amps.append(amp)
            row[f"amp_p{fmt_exponent(p)}"] = amp
            rep.check(f"critical_bound_run{i}_p{fmt_exponent(p)}", amp <= 3.0, value=amp, limit=3.0)
        row["x_inhom"] = report.x_inhomogeneous
        row["x_b0"] = report.x_zero
        rows.append(row)
    rep.check("no_blowup", blowups == 0, value=blowups, limit=0)
    if rates:
        rep.record("decay_rate_c", [min(rates), max(rates)])
    rep.record("max_ratio", max(amps) if amps else None)
    rep.table(
        "runs", ["run", "b_inf", "c", "T0", "V_final", "V_tail", "amp_p1", "amp_p2", "amp_pinf", "x_inhom", "x_b0"], rows
    )


def _band_limit(theta: SpectralField, bound: int) -> SpectralField:
    keep = np.ones(theta.grid.shape, dtype=bool)
    for idx in theta.grid.indices:
        keep &= np.abs(idx) < bound
    return SpectralField(theta.grid, np.where(keep, theta.coeffs, 0.0))


def suite_scaling(ctx: SuiteContext, rep: SuiteReport) -> None:
    grid = Grid(int(ctx.get("n", 128)))
    fam = build_family(grid)
    rng = ctx.rng(9)
    alpha = float(ctx.get("alpha", 0.5))
    lam = float(ctx.get("lam", 2.0))
    cfg = SolverConfig(alpha=alpha, dt=float(ctx.get("dt", 0.05)), t_end=float(ctx.get("t_end", 1.0)))
    every = int(ctx.get("snapshot_every", 5))
    pairs = [(_exp(p), _exp(r)) for p, r in ctx.get("pairs", [[2, 1], ["inf", 1]])]
    rows = []
    for i in range(int(ctx.get("runs", 5))):
        theta0 = corpus.small_data_field(grid, fam, rng, alpha, 0.05)
        snaps: list[tuple[float, SpectralField]] = []

        def keep(state) -> None:
            if state.steps % every == 0:
                snaps.append((state.t, state.theta))

        simulate(theta0, cfg, fam, on_step=keep)
        for t, theta in snaps:
            field_ = inverse(_band_limit(theta, grid.n // 4))
            for p, r in pairs:
                spec = BesovSpec(critical_index(p, alpha), p, r)
                ratio = scaling_ratio(field_, lam, alpha, spec, fam)
                rows.append({"run": i, "time": t, "p": fmt_exponent(p), "r": fmt_exponent(r), "ratio": ratio})
    for p, r in pairs:
        vals = np.array([row["ratio"] for row in rows if row["p"] == fmt_exponent(p) and row["r"] == fmt_exponent(r)])
        med = float(np.median(vals))
        key = f"p{fmt_exponent(p)}_r{fmt_exponent(r)}"
        rep.record(f"median_{key}", med)
        rep.record(f"envelope_{key}", [float(vals.min()), float(vals.max())])
        rep.check(
            f"envelope_{key}",
            bool(np.all((vals >= 0.5 * med) & (vals <= 1.5 * med))),
            value=float(vals.max() / vals.min()),
            limit=3.0,
        )
    rep.record("max_ratio", max(row["ratio"] for row in rows))
    rep.table("ratios", ["run", "time", "p", "r", "ratio"], rows)


def _exp(p: Any) -> float:
    return INF if isinstance(p, str) and p.lower().startswith("inf") else float(p)


def suite_scheme(ctx: SuiteContext, rep: SuiteReport) -> None:
    grid = Grid(int(ctx.get("n", 64)))
    fam = build_family(grid)
    rng = ctx.rng(10)
    alpha = float(ctx.get("alpha", 0.5))
    T = float(ctx.get("T", 1.0))
    n_max = int(ctx.get("n_max", 8))
    cfg = SolverConfig(alpha=alpha, dt=float(ctx.get("dt", 0.01)), t_end=T)
    zero = run_iterative_scheme(SpectralField.zeros(grid), cfg, 2, T, fam)
    rep.check("zero_data", max(zero.diffs) == 0.0, value=max(zero.diffs), limit=0.0)
    rows = []
    worst_all = 0.0
    for i in range(int(ctx.get("runs", 3))):
        theta0 = corpus.small_data_field(grid, fam, rng, alpha, float(ctx.get("target", 0.01)), k_max=float(ctx.get("k_max", 2.0)))
        scheme = run_iterative_scheme(theta0, cfg, n_max, T, fam)
        summary = contraction_ratios(scheme)
        for n, d in enumerate(scheme.diffs, start=1):
            rows.append({"run": i, "n": n, "diff": d, "ratio": summary.ratios.get(n - 1, "")})
        worst = summary.worst(2)
        worst_all = max(worst_all, worst)
        rep.check(f"contraction_run{i}", worst <= 0.9, value=worst, limit=0.9)
    rep.record("max_ratio", worst_all)
    rep.table("diffs", ["run", "n", "diff", "ratio"], rows)


def suite_theorem2(ctx: SuiteContext, rep: SuiteReport) -> None:
    grid = Grid(int(ctx.get("n", 64)))
    fam = build_family(grid)
    rng = ctx.rng(11)
    alpha = float(ctx.get("alpha", 0.5))
    cfg = SolverConfig(alpha=alpha, dt=float(ctx.get("dt", 0.01)), t_end=float(ctx.get("t_end", 1.0)))
    s_list = [float(s) for s in ctx.get("s", [-0.5, 0.0, 0.5])]
    p_list = [_exp(p) for p in ctx.get("p", [2, "inf"])]
    r_list = [_exp(r) for r in ctx.get("r", [1, 2, "inf"])]
    specs = [BesovSpec(s, p, 1.0) for s in s_list for p in p_list]
    theta0 = _scaled_random(grid, rng, 6.0, 0.5)
    f = _scaled_random(grid, rng, 3.0, 0.2)
    rows = []
    for amp in ctx.get("amplitudes", [0.0, 0.5, 1.0, 1.5, 2.0]):
        v = corpus.shear_flow(grid, float(amp))
        state = run_td(theta0, cfg, steady_velocity(v), constant_forcing(f), specs, fam)
        v_total = float(state.ledger.accumulated_v()[-1])
        for spec in specs:
            for r in r_list:
                probe = theorem2_probe(state, alpha, spec.s, spec.p, r)
                rows.append(
                    {
                        "velocity": "shear",
                        "amplitude": float(amp),
                        "V": v_total,
                        "s": spec.s,
                        "p": fmt_exponent(spec.p),
                        "r": fmt_exponent(r),
                        "lhs": probe.lhs,
                        "data": probe.data,
                        "ratio": probe.ratio,
                    }
                )
        _minkowski_checks(rep, state.ledger, f"A{float(amp):g}", 0.0, 2.0, state.t)
    # QG velocity: the estimate extends past s = 1
    qg = simulate(_scaled_random(grid, rng, 4.0, float(ctx.get("qg_amplitude", 0.2))), cfg, fam)
    qg_v = float(qg.ledger.accumulated_v()[-1])
    for s in ctx.get("qg_s", [0.5, 1.0, 1.5]):
        for p in p_list:
            for r in r_list:
                probe = theorem2_probe(qg, alpha, float(s), p, r, qg_velocity=True)
                rows.append(
                    {
                        "velocity": "qg",
                        "amplitude": "",
                        "V": qg_v,
                        "s": float(s),
                        "p": fmt_exponent(p),
                        "r": fmt_exponent(r),
                        "lhs": probe.lhs,
                        "data": probe.data,
                        "ratio": probe.ratio,
                    }
                )
    ratios = [row["ratio"] for row in rows]
    rep.record("max_ratio", max(ratios))
    rep.record("max_ratio_qg", max((row["ratio"] for row in rows if row["velocity"] == "qg"), default=None))
    rep.check("ratios_finite", all(math.isfinite(r) for r in ratios), value=max(ratios))
    guard = ctx.get("ratio_guard")
    if guard is not None:
        rep.check("ratio_regression_guard", max(ratios) <= 2.0 * float(guard), value=max(ratios), limit=2.0 * float(guard))
    rep.table("sweep", ["velocity", "amplitude", "V", "s", "p", "r", "lhs", "data", "ratio"], rows)

    # pure fractional heat flow of one mode: each block decays like the mode itself
    mode = forward(corpus.single_mode(grid, (0, 1)))
    heat = run_td(mode, cfg, fam=fam)
    probe = theorem2_probe(heat, alpha, 0.0, 2.0, 1.0)
    blocks = heat.ledger.block_norms_at(0, 2.0)
    closed = sum(2.0 ** (q * alpha) * b for q, b in blocks.items()) * (1.0 - math.exp(-heat.t))
    rel = abs(probe.lhs - closed) / closed
    rep.check("single_mode_closed_form", rel <= 1e-3, value=rel, limit=1e-3)
    zero = run_td(SpectralField.zeros(grid), cfg, fam=fam)
    rep.check("zero_data", theorem2_probe(zero, alpha, 0.0, 2.0, 1.0).lhs == 0.0)


@dataclass(frozen=True)
class Suite:
    # verbatim phrase the measured estimate is stated with
    anchor: str
    measures: str
    run: Callable[[SuiteContext, SuiteReport], None]


SUITES: dict[str, Suite] = {
    "partition": Suite(
        "supported in the ring",
        "chi + sum_q phi(2^-q xi) = 1, and sum_q phi(2^-q xi) = 1 for xi != 0",
        suite_partition,
    ),
    "bernstein": Suite(
        "the so-called Bernstein inequalities",
        "||d^k Delta_q u||_b <~ 2^{q(k + d(1/a - 1/b))} ||Delta_q u||_a",
        suite_bernstein,
    ),
    "equivalence": Suite(
        "with the usual modification if m=∞",
        "finite-difference and dyadic Besov norms are equivalent for 0 < s < 1",
        suite_equivalence,
    ),
    "semigroup": Suite(
        "Let 𝒞 be a ring and α∈ℝ₊",
        "||e^{-t|D|^a} Delta_q u||_p <= C e^{-c t 2^{qa}} ||Delta_q u||_p",
        suite_semigroup,
    ),
    "commutator": Suite(
        "Lipshitz measure-preserving homeomorphism",
        "|| |D|^a (u o psi) - (|D|^a u) o psi ||_p bounded by Lip(psi) factors times ||u||_{B^a_{p,1}}",
        suite_commutator,
    ),
    "vishik": Suite(
        "preserving Lebesgue measure, then we have",
        "||Delta_j((Delta_q f) o psi)||_p <~ 2^{-|j-q|} ||grad psi^{+-1}||_inf ||Delta_q f||_p",
        suite_vishik,
    ),
    "maxprinciple": Suite(
        "a maximum principle estimate for the equation",
        "||theta(t)||_p <= ||theta0||_p + int_0^t ||f||_p",
        suite_maxprinciple,
    ),
    "smalldata": Suite(
        "then one can take T=+∞",
        "small ||theta0||_{B^{1-a}_{inf,1}} gives a global solution with bounded V",
        suite_smalldata,
    ),
    "scaling": Suite(
        "is also a solution of",
        "lam^{a-1} theta(lam^a t, lam x) solves the same equation",
        suite_scaling,
    ),
    "scheme": Suite(
        "such as the following iterative scheme",
        "iterates with velocity of theta_n and data S_n theta0 contract in B^0_{inf,1}",
        suite_scheme,
    ),
    "theorem2": Suite(
        "a constant C depending only on s and α",
        "||theta||_{L~^r_t B^{s+a/r}_{p,1}} <= C e^{CV(t)} (||theta0||_{B^s_{p,1}} + ||f||_{L^1_t B^s_{p,1}})",
        suite_theorem2,
    ),
    "e1calibration": Suite(
        "holds as an L^p equality",
        "|D|^a f = C_a p.v. int (f(x) - f(y)) / |x - y|^{d+a} dy",
        suite_e1calibration,
    ),
}


def run_suite(name: str, ctx: SuiteContext) -> SuiteReport:
    if name not in SUITES:
        raise ConfigurationError(f"unknown plan {name!r}; known plans: {', '.join(SUITES)}")
    suite = SUITES[name]
    rep = SuiteReport(
        experiment=name, anchor=suite.anchor, seed=ctx.seed, measures=suite.measures, params=dict(ctx.params)
    )
    logger.info(f"suite {name}: seed={ctx.seed} params={ctx.params}")
    suite.run(ctx, rep)
    hard = [c for c in rep.checks if c.hard]
    failed = [c.name for c in hard if not c.passed]
    logger.info(f"suite {name}: {len(hard) - len(failed)}/{len(hard)} hard checks passed")
    return rep


def write_report(rep: SuiteReport, out_dir: str) -> list[str]:
    paths = []
    for table, (fieldnames, rows) in sorted(rep.tables.items()):
        paths.append(export_table_csv(rows, fieldnames, os.path.join(out_dir, f"{rep.experiment}_{table}.csv")))
    paths.append(export_report_json(rep.to_dict(), os.path.join(out_dir, f"{rep.experiment}_report.json")))
    return paths
