"""Batch approval engine for multi-dimension capability datasets.

Ingests long-form measurement CSVs, routes each dimension to the
analytic or bootstrap failure-probability path based on a normality
screen, renders accept/reject decisions across a cost-ratio grid, and
produces reclassification and aggregate empirical-risk reports against
the deterministic baseline.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import warnings
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence, TextIO, Union

from .capability import (
    SpecLimits,
    estimate_cpk,
    failure_probability_analytic,
    se_plugin,
    summarize,
)
from .errors import (
    ConsistencyError,
    DegenerateSample,
    DomainError,
    InsufficientData,
    ParseError,
)
from .normality import classify_normality
from .resampling import BootstrapConfig, bootstrap_p_fail
from .rules import alpha_from_lambda

__all__ = [
    "DimensionRecord",
    "DimensionAssessment",
    "ReclassRow",
    "ReclassificationReport",
    "RiskRow",
    "EmpiricalRiskReport",
    "ExceptionRecord",
    "BatchReport",
    "ingest",
    "decisions_from_p_fail",
    "assess_dimension",
    "assess_all",
    "reclassification",
    "empirical_risk",
    "run_batch",
    "report_to_dict",
    "write_report_json",
    "write_assessments_csv",
]

_HEADER = ["dimension_id", "lsl", "usl", "value"]


@dataclass(frozen=True)
class DimensionRecord:
    """All measurements of one dimension plus its specification limits."""

    id: str
    limits: SpecLimits
    measurements: tuple[float, ...]

    def __post_init__(self):
        if not self.id:
            raise ConsistencyError("dimension id must be non-empty")
        if len(self.measurements) < 2:
            raise InsufficientData(
                f"dimension {self.id!r}: need at least 2 measurements"
            )


@dataclass(frozen=True)
class DimensionAssessment:
    """Per-dimension result: estimate, failure probability, decisions.

    method is 'analytic' exactly when the normality screen passed;
    baseline_accept is the deterministic decision cpk_hat >= c0, kept
    here so reports never re-derive it.
    """

    id: str
    n: int
    cpk_hat: float
    se: float
    p_fail: float
    method: str
    normal: bool
    baseline_accept: bool
    decisions: dict[float, bool] = field(compare=False)


@dataclass(frozen=True)
class ReclassRow:
    lam: float
    accepted: int
    rejected: int
    a_to_r: int
    r_to_a: int


@dataclass(frozen=True)
class ReclassificationReport:
    baseline_accepted: int
    baseline_rejected: int
    rows: list[ReclassRow]


@dataclass(frozen=True)
class RiskRow:
    lam: float
    el_det: float
    el_cal: float
    delta: float
    delta_pct: Optional[float]


@dataclass(frozen=True)
class EmpiricalRiskReport:
    rows: list[RiskRow]


@dataclass(frozen=True)
class ExceptionRecord:
    id: str
    error: str
    message: str


@dataclass(frozen=True)
class BatchReport:
    run_config: dict
    assessments: list[DimensionAssessment]
    reclassification: ReclassificationReport
    empirical_risk: EmpiricalRiskReport
    exceptions: list[ExceptionRecord]


def ingest(source: Union[str, TextIO]) -> list[DimensionRecord]:
    """Parse a long-form measurement CSV into dimension records.

    Expected header: dimension_id,lsl,usl,value - one row per
    measurement, limits repeated on every row and identical within a
    dimension. Dimensions come back in first-appearance order. An empty
    file is valid (warned) and yields an empty list.
    """
    if isinstance(source, str):
        # utf-8-sig: tolerate the BOM that spreadsheet exports prepend
        with open(source, "r", newline="", encoding="utf-8-sig") as fh:
            return ingest(fh)

    reader = csv.reader(source)
    try:
        header = next(reader)
    except StopIteration:
        warnings.warn("empty input: no measurement rows", stacklevel=2)
        return []
    if [h.strip().lower() for h in header] != _HEADER:
        raise ParseError(
            f"expected header {','.join(_HEADER)!r}, got {','.join(header)!r}", line=1
        )

    order: list[str] = []
    limits_by_id: dict[str, tuple[float, float]] = {}
    values_by_id: dict[str, list[float]] = {}
    for row in reader:
        line = reader.line_num
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) != 4:
            raise ParseError(f"expected 4 fields, got {len(row)}", line=line)
        dim_id = row[0].strip()
        if not dim_id:
            raise ParseError("empty dimension_id", line=line)
        try:
            lsl, usl, value = (float(row[i]) for i in (1, 2, 3))
        except ValueError as exc:
            raise ParseError(f"unparseable number: {exc}", line=line) from None
        if not lsl < usl:
            raise ConsistencyError(
                f"line {line}: dimension {dim_id!r} has lsl >= usl ({lsl}, {usl})"
            )
        if dim_id not in limits_by_id:
            order.append(dim_id)
            limits_by_id[dim_id] = (lsl, usl)
            values_by_id[dim_id] = []
        elif limits_by_id[dim_id] != (lsl, usl):
            raise ConsistencyError(
                f"line {line}: dimension {dim_id!r} changes limits from "
                f"{limits_by_id[dim_id]} to {(lsl, usl)}"
            )
        values_by_id[dim_id].append(value)

    if not order:
        warnings.warn("empty input: no measurement rows", stacklevel=2)
        return []

    records = []
    for dim_id in order:
        vals = values_by_id[dim_id]
        if len(vals) < 2:
            raise InsufficientData(
                f"dimension {dim_id!r} has only {len(vals)} measurement(s)"
            )
        lsl, usl = limits_by_id[dim_id]
        records.append(
            DimensionRecord(
                id=dim_id, limits=SpecLimits(lsl, usl), measurements=tuple(vals)
            )
        )
    return records


def decisions_from_p_fail(
    p_fail: float, lambda_grid: Sequence[float], baseline_accept: bool = True
) -> dict[float, bool]:
    """Accept at cost ratio lam when p_fail <= 1 / (1 + lam).

    Ties accept: at lam = 1 a failure probability of exactly 0.5 passes.
    The calibrated rule is a guard band on top of the deterministic
    baseline (k >= 0 for lam >= 1), so it can only tighten that
    baseline: a dimension the deterministic rule rejects stays rejected.
    On the analytic path the conjunction is a no-op; on the bootstrap
    path it suppresses the rare skew-driven upgrade.
    """
    return {
        lam: baseline_accept and p_fail <= alpha_from_lambda(lam)
        for lam in _check_lambda_grid(lambda_grid)
    }


def _dimension_seed(run_seed: int, dim_id: str) -> int:
    """Stable per-dimension bootstrap seed, independent of dataset order."""
    digest = hashlib.blake2b(
        dim_id.encode("utf-8"),
        digest_size=8,
        key=int(run_seed).to_bytes(8, "little"),
    ).digest()
    return int.from_bytes(digest, "little")


def _check_lambda_grid(lambda_grid: Sequence[float]) -> list[float]:
    lams = [float(lam) for lam in lambda_grid]
    if not lams:
        raise DomainError("lambda grid must be non-empty")
    if any(lam < 1.0 for lam in lams):
        raise DomainError("lambda grid values must be >= 1")
    return lams


def assess_dimension(
    record: DimensionRecord,
    c0: float,
    lambda_grid: Sequence[float],
    cfg: BootstrapConfig,
    level: float = 0.05,
) -> DimensionAssessment:
    """Estimate capability and failure probability for one dimension.

    Normal dimensions take the analytic path; non-normal (or too small
    to classify) dimensions take the bootstrap path with a seed derived
    from (run seed, dimension id). Raises DegenerateSample for sd == 0.
    """
    lams = _check_lambda_grid(lambda_grid)
    summary = summarize(record.measurements)
    cpk_hat = estimate_cpk(summary, record.limits)
    se = se_plugin(cpk_hat, summary.n)
    try:
        normal = classify_normality(record.measurements, level)
    except InsufficientData:
        warnings.warn(
            f"dimension {record.id!r}: n={summary.n} too small for the normality "
            "test; forcing the bootstrap path",
            stacklevel=2,
        )
        normal = False
    if normal:
        method = "analytic"
        p_fail = failure_probability_analytic(cpk_hat, se, c0)
    else:
        method = "bootstrap"
        sub = BootstrapConfig(b_boot=cfg.b_boot, seed=_dimension_seed(cfg.seed, record.id))
        p_fail = bootstrap_p_fail(record.measurements, record.limits, c0, sub).p_fail
    baseline_accept = cpk_hat >= c0
    return DimensionAssessment(
        id=record.id,
        n=summary.n,
        cpk_hat=cpk_hat,
        se=se,
        p_fail=p_fail,
        method=method,
        normal=normal,
        baseline_accept=baseline_accept,
        decisions=decisions_from_p_fail(p_fail, lams, baseline_accept),
    )


def assess_all(
    records: Sequence[DimensionRecord],
    c0: float,
    lambda_grid: Sequence[float],
    cfg: BootstrapConfig,
    level: float = 0.05,
) -> tuple[list[DimensionAssessment], list[ExceptionRecord]]:
    """Assess every dimension; unresolvable ones land in the exceptions
    list instead of aborting the batch."""
    assessments: list[DimensionAssessment] = []
    exceptions: list[ExceptionRecord] = []
    for record in records:
        try:
            assessments.append(assess_dimension(record, c0, lambda_grid, cfg, level))
        except (DegenerateSample, InsufficientData) as exc:
            exceptions.append(
                ExceptionRecord(id=record.id, error=type(exc).__name__, message=str(exc))
            )
    return assessments, exceptions


def reclassification(
    assessments: Sequence[DimensionAssessment], lambda_grid: Sequence[float]
) -> ReclassificationReport:
    """Status changes of the calibrated rule against the deterministic
    baseline, per cost ratio."""
    if not assessments:
        raise DomainError("no assessments to report on")
    lams = _check_lambda_grid(lambda_grid)
    base = sum(a.baseline_accept for a in assessments)
    rows = []
    for lam in lams:
        acc = sum(a.decisions[lam] for a in assessments)
        a_to_r = sum(a.baseline_accept and not a.decisions[lam] for a in assessments)
        r_to_a = sum(a.decisions[lam] and not a.baseline_accept for a in assessments)
        rows.append(
            ReclassRow(
                lam=lam,
                accepted=acc,
                rejected=len(assessments) - acc,
                a_to_r=a_to_r,
                r_to_a=r_to_a,
            )
        )
    return ReclassificationReport(
        baseline_accepted=base,
        baseline_rejected=len(assessments) - base,
        rows=rows,
    )


def _risk_score(p_fail: float, accepted: bool, lam: float) -> float:
    # accepted: expected cost lam * p_fail; rejected: cost 1 - p_fail
    if accepted:
        return lam * p_fail
    return 1.0 - p_fail


def empirical_risk(
    assessments: Sequence[DimensionAssessment], lambda_grid: Sequence[float]
) -> EmpiricalRiskReport:
    """Aggregate empirical risk of deterministic vs calibrated decisions.

    Each dimension contributes lam * p_fail when accepted and
    1 - p_fail when rejected; totals are summed over dimensions.
    """
    if not assessments:
        raise DomainError("no assessments to report on")
    lams = _check_lambda_grid(lambda_grid)
    rows = []
    for lam in lams:
        el_det = sum(_risk_score(a.p_fail, a.baseline_accept, lam) for a in assessments)
        el_cal = sum(_risk_score(a.p_fail, a.decisions[lam], lam) for a in assessments)
        delta = el_det - el_cal
        delta_pct = 100.0 * delta / el_det if el_det > 0 else None
        rows.append(
            RiskRow(lam=lam, el_det=el_det, el_cal=el_cal, delta=delta, delta_pct=delta_pct)
        )
    return EmpiricalRiskReport(rows=rows)


def run_batch(
    records: Sequence[DimensionRecord],
    c0: float,
    lambda_grid: Sequence[float],
    cfg: BootstrapConfig,
    level: float = 0.05,
) -> BatchReport:
    """Full pipeline: assess, reclassify, and score a dataset."""
    lams = _check_lambda_grid(lambda_grid)
    assessments, exceptions = assess_all(records, c0, lams, cfg, level)
    if not assessments:
        raise InsufficientData("no assessable dimensions in the dataset")
    return BatchReport(
        run_config={
            "c0": c0,
            "lambda_grid": lams,
            "normality_level": level,
            "b_boot": cfg.b_boot,
            "seed": cfg.seed,
            "n_dimensions": len(records),
            "n_assessed": len(assessments),
            "n_exceptions": len(exceptions),
        },
        assessments=assessments,
        reclassification=reclassification(assessments, lams),
        empirical_risk=empirical_risk(assessments, lams),
        exceptions=exceptions,
    )


def _assessment_dict(a: DimensionAssessment) -> dict:
    return {
        "id": a.id,
        "n": a.n,
        "cpk_hat": a.cpk_hat,
        "se": a.se,
        "p_fail": a.p_fail,
        "method": a.method,
        "normal": a.normal,
        "baseline_accept": a.baseline_accept,
        "decisions": {f"{lam:g}": dec for lam, dec in a.decisions.items()},
    }


def report_to_dict(report: BatchReport) -> dict:
    return {
        "run_config": report.run_config,
        "assessments": [_assessment_dict(a) for a in report.assessments],
        "reclassification": {
            "baseline_accepted": report.reclassification.baseline_accepted,
            "baseline_rejected": report.reclassification.baseline_rejected,
            "rows": [asdict(r) for r in report.reclassification.rows],
        },
        "empirical_risk": {"rows": [asdict(r) for r in report.empirical_risk.rows]},
        "exceptions": [asdict(e) for e in report.exceptions],
    }


def write_report_json(report: BatchReport, path_or_stream, extra_config: dict | None = None) -> None:
    """Write the batch report as JSON; floats keep full repr precision."""
    payload = report_to_dict(report)
    if extra_config:
        payload["run_config"] = {**payload["run_config"], **extra_config}
    if isinstance(path_or_stream, (str,)):
        with open(path_or_stream, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")
    else:
        json.dump(payload, path_or_stream, indent=2)
        path_or_stream.write("\n")


def write_assessments_csv(
    assessments: Sequence[DimensionAssessment], path_or_stream
) -> None:
    """Optional flat CSV view of the per-dimension assessments."""
    if isinstance(path_or_stream, str):
        with open(path_or_stream, "w", newline="", encoding="utf-8") as fh:
            write_assessments_csv(assessments, fh)
            return
    fh = path_or_stream
    lams = sorted(assessments[0].decisions) if assessments else []
    w = csv.writer(fh)
    w.writerow(
        ["id", "n", "cpk_hat", "se", "p_fail", "method", "normal", "baseline_accept"]
        + [f"accept_lambda_{lam:g}" for lam in lams]
    )
    for a in assessments:
        w.writerow(
            [
                a.id,
                a.n,
                repr(a.cpk_hat),
                repr(a.se),
                repr(a.p_fail),
                a.method,
                int(a.normal),
                int(a.baseline_accept),
            ]
            + [int(a.decisions[lam]) for lam in lams]
        )


def records_to_csv_text(records: Sequence[DimensionRecord]) -> str:
    """Render dimension records back to the long-form CSV format."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(_HEADER)
    for rec in records:
        for v in rec.measurements:
            w.writerow([rec.id, repr(rec.limits.lsl), repr(rec.limits.usl), repr(v)])
    return buf.getvalue()
