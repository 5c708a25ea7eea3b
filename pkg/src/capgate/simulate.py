"""Seeded Monte Carlo harness for approval-rule operating characteristics.

Every cell of the experiment grid draws its own reproducible stream,
keyed by (base_seed, capability level, sample size), so results are
identical whether cells run serially or in a thread pool, and all rules
inside a cell see the same simulated samples (common random numbers).
Boundary state convention: a process sitting exactly at the approval
threshold is charged as incapable, i.e. acceptance there counts toward
the false-accept rate.
"""

from __future__ import annotations

import concurrent.futures
import csv
import datetime
import json
import math
import os
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import __version__ as _pkg_version
from . import _kernels
from .capability import SpecLimits, normal_quantile, sigma_for_target
from .errors import CalibrationFailure, CapgateError, DomainError
from .rules import (
    CostSensitive,
    LossSpec,
    Rule,
    alpha_from_lambda,
    boundary_acceptance,
    expected_loss_point,
    k_from_alpha,
    k_of_rule,
    rule_label,
)

__all__ = [
    "SimGrid",
    "CellResult",
    "CellRecord",
    "LognormalDGM",
    "run_cell",
    "run_grid",
    "acceptance_surface",
    "error_tradeoff",
    "expected_loss_curve",
    "one_sided_estimates",
    "boundary_calibration",
    "table1_rows",
    "table2_rows",
    "calibrate_lognormal",
    "cnpk_of",
    "nonnormal_comparison",
    "write_cells_csv",
    "write_manifest",
    "thread_count",
]

_CHUNK_ELEMENTS = 4_000_000


def _default_cpk_grid() -> tuple[float, ...]:
    # 0.80, 0.82, ..., 2.00
    return tuple(round(0.80 + 0.02 * i, 2) for i in range(61))


@dataclass(frozen=True)
class SimGrid:
    """Experiment grid plus the shared simulation constants."""

    cpk_true_values: tuple[float, ...] = field(default_factory=_default_cpk_grid)
    n_values: tuple[int, ...] = (20, 32, 50, 80, 120, 200)
    lambda_values: tuple[float, ...] = (1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0)
    c0: float = 1.33
    half_width_t: float = 4.0
    replications_b: int = 10_000
    base_seed: int = 0

    def __post_init__(self):
        if not (self.cpk_true_values and self.n_values and self.lambda_values):
            raise DomainError("grid lists must be non-empty")
        if any(c <= 0 for c in self.cpk_true_values):
            raise DomainError("cpk_true grid values must be > 0")
        if self.replications_b < 100:
            raise DomainError("replications_B must be >= 100")
        if not self.c0 > 0:
            raise DomainError("c0 must be > 0")
        if not self.half_width_t > 0:
            raise DomainError("half width T must be > 0")


@dataclass(frozen=True)
class CellResult:
    """Operating characteristics of one rule in one grid cell.

    Exactly one of p_fa / p_fr is set, by the true state: p_fa = p_acc
    below (or at) the threshold, p_fr = 1 - p_acc above it.
    """

    p_acc: float
    p_fa: Optional[float]
    p_fr: Optional[float]
    el: float
    mc_se: float


@dataclass(frozen=True)
class CellRecord:
    """Flat row: cell identity plus its CellResult, ready for CSV."""

    cpk_true: float
    n: int
    rule: str
    k: float
    lam: float
    p_acc: float
    p_fa: Optional[float]
    p_fr: Optional[float]
    el: float
    mc_se: float


@dataclass(frozen=True)
class LognormalDGM:
    """Shifted lognormal generator: X = exp(N(m, s^2)) - c."""

    log_mean_m: float
    log_sd_s: float
    shift_c: float
    limits: SpecLimits

    def __post_init__(self):
        if not self.log_sd_s > 0:
            raise DomainError(f"log-scale sd must be > 0, got {self.log_sd_s}")

    def draw(self, rng: np.random.Generator, size) -> np.ndarray:
        return rng.lognormal(self.log_mean_m, self.log_sd_s, size) - self.shift_c


def thread_count(threads: Optional[int] = None) -> int:
    """Resolve a worker count; None reads CAPGATE_THREADS (0 or unset = auto)."""
    if threads is None:
        raw = os.environ.get("CAPGATE_THREADS", "0").strip() or "0"
        try:
            threads = int(raw)
        except ValueError:
            raise DomainError(f"CAPGATE_THREADS must be an integer, got {raw!r}")
    if threads < 0:
        raise DomainError(f"thread count must be >= 0, got {threads}")
    return threads if threads > 0 else (os.cpu_count() or 1)


def _cell_seed(base_seed: int, cpk_true: float, n: int) -> np.random.SeedSequence:
    bits = int(np.float64(cpk_true).view(np.uint64))
    return np.random.SeedSequence([int(base_seed), bits, int(n)])


def _cell_estimates(
    cpk_true: float, n: int, grid: SimGrid
) -> tuple[np.ndarray, np.ndarray]:
    """Plug-in estimates and standard errors for one cell's B samples.

    Samples are N(0, sigma^2) with symmetric limits (-T, T) and sigma
    chosen so the true capability equals cpk_true. The stream depends
    only on (base_seed, cpk_true, n): rules share samples.
    """
    t = grid.half_width_t
    sigma = sigma_for_target(t, cpk_true)
    rng = np.random.Generator(np.random.Philox(_cell_seed(grid.base_seed, cpk_true, n)))
    b_total = grid.replications_b
    cpk = np.empty(b_total, dtype=np.float64)
    chunk = max(1, _CHUNK_ELEMENTS // n)
    done = 0
    while done < b_total:
        b = min(chunk, b_total - done)
        x = rng.standard_normal((b, n)) * sigma
        _, _, c = _kernels.row_capability(x, -t, t)
        cpk[done : done + b] = c
        done += b
    if not np.isfinite(cpk).all():
        raise CapgateError(
            f"cell cpk_true={cpk_true} n={n}: non-finite capability estimates"
        )
    se = np.sqrt(1.0 / 9.0 + 0.5 * cpk * cpk) / math.sqrt(n)
    return cpk, se


def _acceptance_rate(
    cpk: np.ndarray, se: np.ndarray, c0: float, k: float
) -> float:
    return float(np.count_nonzero(cpk >= c0 + k * se)) / cpk.shape[0]


def _mc_se(p: float, b: int) -> float:
    return math.sqrt(p * (1.0 - p) / b)


def _cell_result(
    p_acc: float, b: int, state_below: bool, loss_lambda: float
) -> CellResult:
    p_fa = p_acc if state_below else None
    p_fr = None if state_below else 1.0 - p_acc
    el = expected_loss_point(
        p_fa if p_fa is not None else 0.0,
        p_fr if p_fr is not None else 0.0,
        LossSpec(c_fa=loss_lambda, c_fr=1.0),
        state_below,
    )
    return CellResult(p_acc=p_acc, p_fa=p_fa, p_fr=p_fr, el=el, mc_se=_mc_se(p_acc, b))


def _loss_lambda_for(rule: Rule, loss_lambda: Optional[float]) -> float:
    if loss_lambda is not None:
        return loss_lambda
    if isinstance(rule, CostSensitive):
        return rule.lam
    return 1.0


def run_cell(
    cpk_true: float,
    n: int,
    rule: Rule,
    grid: SimGrid,
    loss_lambda: Optional[float] = None,
) -> CellResult:
    """Operating characteristics of one rule at one (cpk_true, n) cell.

    loss_lambda sets the false-accept cost (c_fr is normalized to 1); it
    defaults to the rule's own cost ratio for cost-sensitive rules and
    to 1 otherwise.
    """
    cpk, se = _cell_estimates(cpk_true, n, grid)
    p_acc = _acceptance_rate(cpk, se, grid.c0, k_of_rule(rule))
    lam = _loss_lambda_for(rule, loss_lambda)
    return _cell_result(p_acc, grid.replications_b, cpk_true <= grid.c0, lam)


def _record(
    cpk_true: float, n: int, rule: Rule, res: CellResult, lam: float
) -> CellRecord:
    return CellRecord(
        cpk_true=cpk_true,
        n=n,
        rule=rule_label(rule),
        k=k_of_rule(rule),
        lam=lam,
        p_acc=res.p_acc,
        p_fa=res.p_fa,
        p_fr=res.p_fr,
        el=res.el,
        mc_se=res.mc_se,
    )


def _run_one_cell(
    cpk_true: float, n: int, rules: Sequence[Rule], grid: SimGrid
) -> list[CellRecord]:
    cpk, se = _cell_estimates(cpk_true, n, grid)
    below = cpk_true <= grid.c0
    out = []
    for rule in rules:
        p_acc = _acceptance_rate(cpk, se, grid.c0, k_of_rule(rule))
        lam = _loss_lambda_for(rule, None)
        res = _cell_result(p_acc, grid.replications_b, below, lam)
        out.append(_record(cpk_true, n, rule, res, lam))
    return out


def run_grid(
    grid: SimGrid, rules: Sequence[Rule], threads: Optional[int] = None
) -> list[CellRecord]:
    """Evaluate every rule on every (cpk_true, n) cell of the grid.

    Cells are independent; with more than one worker they run in a
    thread pool. Output order and content are identical at any worker
    count because each cell's stream is derived from its own identity.
    """
    cells = [(c, n) for c in grid.cpk_true_values for n in grid.n_values]
    workers = thread_count(threads)
    if workers <= 1 or len(cells) == 1:
        results = [_run_one_cell(c, n, rules, grid) for c, n in cells]
    else:
        with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(
                pool.map(lambda cn: _run_one_cell(cn[0], cn[1], rules, grid), cells)
            )
    return [rec for cell in results for rec in cell]


def _contour_cross(
    cpks: Sequence[float], p_accs: Sequence[float], level: float = 0.5
) -> Optional[float]:
    """First upward crossing of the acceptance level, linearly interpolated."""
    for i in range(1, len(cpks)):
        lo, hi = p_accs[i - 1], p_accs[i]
        if lo < level <= hi:
            if hi == lo:
                return cpks[i]
            t = (level - lo) / (hi - lo)
            return cpks[i - 1] + t * (cpks[i] - cpks[i - 1])
    return None


@dataclass(frozen=True)
class SurfaceResult:
    records: list[CellRecord]
    contours: dict  # (n, rule label) -> cpk_true at P(accept) = 0.5, or None


def acceptance_surface(
    grid: SimGrid, rules: Sequence[Rule], threads: Optional[int] = None
) -> SurfaceResult:
    """Acceptance probability over the full grid plus 0.5-contours.

    The contour per (n, rule) is the capability level where acceptance
    crosses one half, interpolated linearly between grid points.
    """
    records = run_grid(grid, rules, threads)
    contours = {}
    for rule in rules:
        label = rule_label(rule)
        for n in grid.n_values:
            rows = sorted(
                (r for r in records if r.n == n and r.rule == label),
                key=lambda r: r.cpk_true,
            )
            contours[(n, label)] = _contour_cross(
                [r.cpk_true for r in rows], [r.p_acc for r in rows]
            )
    return SurfaceResult(records=records, contours=contours)


def error_tradeoff(
    lambdas: Sequence[float],
    cpk_levels: Sequence[float],
    n: int,
    grid: SimGrid,
) -> list[CellRecord]:
    """Cost-sensitive error rates across cost ratios.

    Samples are shared across lambdas at each capability level, so the
    accept sets are nested exactly and the PFA/PFR monotonicity in
    lambda holds replicate by replicate.
    """
    out = []
    for cpk_true in cpk_levels:
        cpk, se = _cell_estimates(cpk_true, n, grid)
        below = cpk_true <= grid.c0
        for lam in lambdas:
            rule = CostSensitive(lam)
            p_acc = _acceptance_rate(cpk, se, grid.c0, k_of_rule(rule))
            res = _cell_result(p_acc, grid.replications_b, below, lam)
            out.append(_record(cpk_true, n, rule, res, lam))
    return out


@dataclass(frozen=True)
class ELCurveRow:
    cpk_true: float
    el_det: float
    el_cal: float


def expected_loss_curve(
    grid: SimGrid, alpha: float, lambda_for_cost: float, n: int
) -> list[ELCurveRow]:
    """Expected loss of deterministic vs probability-rule approval.

    Both rules are charged under the same cost regime (c_fa =
    lambda_for_cost, c_fr = 1) and evaluated on the same samples.
    """
    k_cal = k_from_alpha(alpha)
    rows = []
    for cpk_true in grid.cpk_true_values:
        cpk, se = _cell_estimates(cpk_true, n, grid)
        below = cpk_true <= grid.c0
        el = []
        for k in (0.0, k_cal):
            p_acc = _acceptance_rate(cpk, se, grid.c0, k)
            el.append(
                _cell_result(p_acc, grid.replications_b, below, lambda_for_cost).el
            )
        rows.append(ELCurveRow(cpk_true=cpk_true, el_det=el[0], el_cal=el[1]))
    return rows


def one_sided_estimates(
    cpk_true: float,
    n: int,
    replications_b: int,
    *,
    sigma: float = 0.5,
    limits: SpecLimits = SpecLimits(-4.0, 4.0),
    base_seed: int = 0,
) -> np.ndarray:
    """Plug-in estimates from a process whose capability binds through
    the upper limit alone.

    This is the regular regime of the closed-form dispersion constant:
    the mean is shifted so the lower limit stays far out of play. A
    centered process has both sides active and a strictly smaller (and
    skewed) estimator dispersion, so it cannot be used to validate the
    delta-method variance or the boundary calibration targets.
    """
    mu = limits.usl - 3.0 * sigma * cpk_true
    lower_side = (mu - limits.lsl) / (3.0 * sigma)
    if lower_side < cpk_true + 1.0:
        raise DomainError(
            "one-sided regime violated: lower-side capability "
            f"{lower_side:.3f} is too close to the target {cpk_true}"
        )
    seed = np.random.SeedSequence(
        [
            int(base_seed),
            int(np.float64(cpk_true).view(np.uint64)),
            int(np.float64(sigma).view(np.uint64)),
            int(n),
            0xB0,
        ]
    )
    rng = np.random.Generator(np.random.Philox(seed))
    cpk = np.empty(replications_b, dtype=np.float64)
    chunk = max(1, _CHUNK_ELEMENTS // n)
    done = 0
    while done < replications_b:
        b = min(chunk, replications_b - done)
        x = mu + sigma * rng.standard_normal((b, n))
        _, _, c = _kernels.row_capability(x, limits.lsl, limits.usl)
        cpk[done : done + b] = c
        done += b
    if not np.isfinite(cpk).all():
        raise CapgateError(
            f"one-sided cell cpk_true={cpk_true} n={n}: non-finite estimates"
        )
    return cpk


@dataclass(frozen=True)
class BoundaryRow:
    k: float
    p_acc: float
    mc_se: float
    target: float  # Phi(-k)


def boundary_calibration(
    ks: Sequence[float] = (0.0, 0.842, 1.645, 2.326),
    *,
    n: int = 500,
    replications_b: int = 20_000,
    c0: float = 1.33,
    sigma: float = 0.5,
    limits: SpecLimits = SpecLimits(-4.0, 4.0),
    base_seed: int = 0,
) -> list[BoundaryRow]:
    """Acceptance of the k-rule family at the approval boundary.

    The process sits exactly at capability c0 in the one-sided regime,
    where acceptance of the k-rule converges to Phi(-k). All k values
    share the same samples.
    """
    cpk = one_sided_estimates(
        c0, n, replications_b, sigma=sigma, limits=limits, base_seed=base_seed
    )
    se = np.sqrt(1.0 / 9.0 + 0.5 * cpk * cpk) / math.sqrt(n)
    rows = []
    for k in ks:
        p_acc = _acceptance_rate(cpk, se, c0, k)
        rows.append(
            BoundaryRow(
                k=k,
                p_acc=p_acc,
                mc_se=_mc_se(p_acc, replications_b),
                target=boundary_acceptance(k),
            )
        )
    return rows


def table1_rows(
    lambdas: Sequence[float] = (1.0, 4.0, 9.0, 19.0, 99.0),
) -> list[tuple[float, float, float]]:
    """(lambda, alpha, k) triples for the canonical cost ratios."""
    return [
        (lam, alpha_from_lambda(lam), k_from_alpha(alpha_from_lambda(lam)))
        for lam in lambdas
    ]


@dataclass(frozen=True)
class Table2Row:
    lam: float
    el_det: float
    el_cal: float
    reduction_pct: float


def table2_rows(
    lambdas: Sequence[float] = (2.0, 5.0, 10.0, 20.0, 50.0, 100.0),
    *,
    n: int = 32,
    replications_b: int = 12_000,
    c0: float = 1.33,
    half_width_t: float = 4.0,
    base_seed: int = 0,
) -> list[Table2Row]:
    """Expected loss at the boundary: deterministic vs lambda-calibrated.

    The process is centered with true capability exactly c0 and charged
    as incapable, so each rule's expected loss is lambda times its
    acceptance rate. All rules and lambdas share the same samples.
    """
    grid = SimGrid(
        cpk_true_values=(c0,),
        n_values=(n,),
        lambda_values=tuple(lambdas),
        c0=c0,
        half_width_t=half_width_t,
        replications_b=replications_b,
        base_seed=base_seed,
    )
    cpk, se = _cell_estimates(c0, n, grid)
    p_det = _acceptance_rate(cpk, se, c0, 0.0)
    rows = []
    for lam in lambdas:
        k = k_from_alpha(alpha_from_lambda(lam))
        p_cal = _acceptance_rate(cpk, se, c0, k)
        el_det = lam * p_det
        el_cal = lam * p_cal
        red = 100.0 * (1.0 - el_cal / el_det) if el_det > 0 else 0.0
        rows.append(Table2Row(lam=lam, el_det=el_det, el_cal=el_cal, reduction_pct=red))
    return rows


def calibrate_lognormal(
    target_cnpk: float, log_sd_s: float, limits: SpecLimits
) -> LognormalDGM:
    """Shifted lognormal whose percentile capability index hits a target.

    The median is anchored at the specification midpoint; with symmetric
    numerators the upper tail is always the binding side, which gives a
    closed-form solution for (m, c). The percentile index C_Npk uses the
    0.135% / 50% / 99.865% quantiles.
    """
    if not target_cnpk > 0:
        raise DomainError(f"target index must be > 0, got {target_cnpk}")
    if not log_sd_s > 0:
        raise DomainError(f"log-scale sd must be > 0, got {log_sd_s}")
    z3 = normal_quantile(0.99865)
    spread = math.expm1(log_sd_s * z3)  # e^(s z) - 1
    exp_m = limits.half_width / (target_cnpk * spread)
    dgm = LognormalDGM(
        log_mean_m=math.log(exp_m),
        log_sd_s=log_sd_s,
        shift_c=exp_m - limits.midpoint,
        limits=limits,
    )
    achieved = cnpk_of(dgm)
    if abs(achieved - target_cnpk) > 1e-6:
        raise CalibrationFailure(
            f"calibration missed target {target_cnpk} (achieved {achieved})"
        )
    return dgm


def cnpk_of(dgm: LognormalDGM) -> float:
    """Percentile capability index of a shifted lognormal, closed form."""
    z3 = normal_quantile(0.99865)
    m, s, c = dgm.log_mean_m, dgm.log_sd_s, dgm.shift_c
    p50 = math.exp(m) - c
    p_hi = math.exp(m + s * z3) - c
    p_lo = math.exp(m - s * z3) - c
    return min(
        (dgm.limits.usl - p50) / (p_hi - p50),
        (p50 - dgm.limits.lsl) / (p50 - p_lo),
    )


@dataclass(frozen=True)
class MethodRow:
    method: str
    p_acc: float
    p_rej: float
    el: float


def nonnormal_comparison(
    dgm: LognormalDGM,
    n: int,
    lam: float,
    replications_b: int,
    cfg,
    c0: float = 1.33,
    base_seed: int = 0,
) -> list[MethodRow]:
    """Deterministic vs analytic vs bootstrap approval on skewed data.

    All three rules see the same B simulated samples. The true state is
    judged by the generator's percentile capability index against c0;
    expected loss uses c_fa = lam, c_fr = 1.
    """
    from .resampling import BootstrapConfig, bootstrap_p_fail

    alpha = alpha_from_lambda(lam)
    k_cal = k_from_alpha(alpha)
    state_below = cnpk_of(dgm) <= c0
    loss = LossSpec(c_fa=lam, c_fr=1.0)

    seed = np.random.SeedSequence([int(base_seed), int(n), 0x10])
    rng = np.random.Generator(np.random.Philox(seed))
    x = dgm.draw(rng, (replications_b, n))
    _, _, cpk = _kernels.row_capability(x, dgm.limits.lsl, dgm.limits.usl)
    if not np.isfinite(cpk).all():
        raise CapgateError("non-finite capability estimates in lognormal cell")
    se = np.sqrt(1.0 / 9.0 + 0.5 * cpk * cpk) / math.sqrt(n)

    acc_det = cpk >= c0
    acc_ana = cpk >= c0 + k_cal * se

    boot_seeds = np.random.SeedSequence([int(cfg.seed), 0xB007]).generate_state(
        replications_b, dtype=np.uint64
    )
    acc_boot = np.empty(replications_b, dtype=bool)
    for i in range(replications_b):
        sub = BootstrapConfig(b_boot=cfg.b_boot, seed=int(boot_seeds[i]))
        res = bootstrap_p_fail(x[i], dgm.limits, c0, sub)
        acc_boot[i] = res.p_fail <= alpha

    rows = []
    for name, acc in (
        ("deterministic", acc_det),
        ("analytic", acc_ana),
        ("bootstrap", acc_boot),
    ):
        p_acc = float(np.count_nonzero(acc)) / replications_b
        el = expected_loss_point(
            p_acc if state_below else 0.0,
            0.0 if state_below else 1.0 - p_acc,
            loss,
            state_below,
        )
        rows.append(MethodRow(method=name, p_acc=p_acc, p_rej=1.0 - p_acc, el=el))
    return rows


def write_cells_csv(records: Sequence[CellRecord], path) -> None:
    """Flat CSV, one row per (cell, rule); floats keep full precision."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(
            ["cpk_true", "n", "rule", "k", "lambda", "p_acc", "p_fa", "p_fr", "el", "mc_se"]
        )
        for r in records:
            w.writerow(
                [
                    repr(r.cpk_true),
                    r.n,
                    r.rule,
                    repr(r.k),
                    repr(r.lam),
                    repr(r.p_acc),
                    "" if r.p_fa is None else repr(r.p_fa),
                    "" if r.p_fr is None else repr(r.p_fr),
                    repr(r.el),
                    repr(r.mc_se),
                ]
            )


def write_manifest(path, config: dict) -> None:
    """JSON run manifest: config, seeds, package version, timestamp."""
    payload = dict(config)
    payload["package_version"] = _pkg_version
    payload["timestamp"] = datetime.datetime.now(datetime.timezone.utc).isoformat()
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def grid_manifest(grid: SimGrid, rules: Sequence[Rule]) -> dict:
    cfg = asdict(grid)
    cfg["rules"] = [rule_label(r) for r in rules]
    return cfg
