"""
Evaluation records, run manifests and the merged report tables.
"""
import csv
import json
import logging
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Union

from pydantic import BaseModel, ValidationError

from app.core.config import settings
from app.core.exceptions import ReportValidationError
from app.core.settings import AppConstants
from app.schemas.manifest import RunManifest
from app.schemas.metrics import (
    BinnedReport,
    BoundaryReport,
    ErrorStats,
    EvaluationRecord,
    ProfileReport,
)
from app.services.numeric_eval_service import relative_improvement

logger = logging.getLogger(__name__)

REPORT_MODELS = {
    AppConstants.REPORT_NUMERIC: ErrorStats,
    AppConstants.REPORT_SLOPE: BinnedReport,
    AppConstants.REPORT_LANDCOVER: BinnedReport,
    AppConstants.REPORT_ROADS: ProfileReport,
    AppConstants.REPORT_BUILDINGS: BoundaryReport,
}

NUMERIC_HEADER = ["method", "mae", "rmse", "std", "bias", "n", "mae_improvement_pct", "rmse_improvement_pct"]
BINNED_HEADER = ["kind", "method", "bin", "frequency", "count", "mae", "rmse", "std"]
BINNED_MEAN_HEADER = ["kind", "method", "mean_mae", "mean_rmse", "overall_mae", "overall_rmse", "averaging"]
PROFILE_HEADER = ["method", "mean_pcc", "std_pcc", "roads", "skipped", "sampling"]
BOUNDARY_HEADER = ["method", "buffer", "selected", "reference_count", "extracted_count", "ratio", "thinning"]


def utcnow() -> datetime:
    return datetime.now(timezone.utc)


def make_record(kind: str, method: str, recon: str, ref: str, result: BaseModel) -> EvaluationRecord:
    return EvaluationRecord(kind=kind, method=method, recon=recon, ref=ref, result=result.model_dump(mode="json"))


def write_json(model: BaseModel, path: Union[str, Path]) -> None:
    Path(path).write_text(model.model_dump_json(indent=2) + "\n", encoding="utf-8")


def write_run_manifest(
    out_dir: Union[str, Path],
    command: str,
    config: Dict[str, Any],
    inputs: Dict[str, str],
    outputs: Dict[str, str],
    started_at: datetime,
    seed: Optional[int] = None,
) -> Path:
    manifest = RunManifest(
        command=command,
        config=config,
        inputs=inputs,
        outputs=outputs,
        seed=seed,
        tool_version=settings.VERSION,
        started_at=started_at,
        finished_at=utcnow(),
    )
    path = Path(out_dir) / AppConstants.FILE_RUN_MANIFEST
    path.parent.mkdir(parents=True, exist_ok=True)
    write_json(manifest, path)
    return path


def load_record(path: Union[str, Path]) -> EvaluationRecord:
    try:
        record = EvaluationRecord.model_validate_json(Path(path).read_text(encoding="utf-8"))
    except ValidationError as e:
        raise ReportValidationError(f"{path}: not an evaluation record ({e.errors()[0]['msg']})") from e
    model = REPORT_MODELS.get(record.kind)
    if model is None:
        raise ReportValidationError(f"{path}: unknown report kind {record.kind!r}")
    try:
        model.model_validate(record.result)
    except ValidationError as e:
        raise ReportValidationError(f"{path}: malformed {record.kind} result ({e.errors()[0]['msg']})") from e
    return record


def _fmt(value: Optional[float]) -> str:
    return "" if value is None else repr(float(value))


def _write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def numeric_rows(records: Sequence[EvaluationRecord], baseline: Optional[str]) -> List[List[str]]:
    stats = {r.method: ErrorStats.model_validate(r.result) for r in records}
    base = stats.get(baseline) if baseline else None
    rows = []
    for method, s in stats.items():
        mae_gain = relative_improvement(s.mae, base.mae) if base else None
        rmse_gain = relative_improvement(s.rmse, base.rmse) if base else None
        rows.append([method, _fmt(s.mae), _fmt(s.rmse), _fmt(s.std), _fmt(s.bias), s.n, _fmt(mae_gain), _fmt(rmse_gain)])
    return rows


def merge_reports(
    paths: Sequence[Union[str, Path]],
    out_dir: Union[str, Path],
    baseline: Optional[str] = "bi",
) -> Dict[str, str]:
    """
    Combine evaluation records into plot-ready tables: overall accuracy
    per method, per-bin accuracy, road-profile correlation and boundary
    recovery per buffer. Returns written paths by role.
    """
    if not paths:
        raise ReportValidationError("No evaluation records given")
    # Validate every record before writing anything
    records = [load_record(p) for p in paths]
    by_kind: Dict[str, List[EvaluationRecord]] = {}
    for record in records:
        by_kind.setdefault(record.kind, []).append(record)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: Dict[str, str] = {}

    # Overall accuracy per method
    numeric = by_kind.get(AppConstants.REPORT_NUMERIC, [])
    if numeric:
        if baseline and baseline not in {r.method for r in numeric}:
            logger.warning("Baseline method %r has no numeric record; improvement columns left empty", baseline)
        path = out / "table1_numeric.csv"
        _write_csv(path, NUMERIC_HEADER, numeric_rows(numeric, baseline))
        written["table1"] = str(path)

    # Per-bin accuracy and the bin means
    binned = by_kind.get(AppConstants.REPORT_SLOPE, []) + by_kind.get(AppConstants.REPORT_LANDCOVER, [])
    if binned:
        rows, means = [], []
        for r in binned:
            report = BinnedReport.model_validate(r.result)
            for b in report.bins:
                s = b.stats
                rows.append([
                    report.kind, r.method, b.label, _fmt(b.frequency), b.count,
                    _fmt(s.mae if s else None), _fmt(s.rmse if s else None), _fmt(s.std if s else None),
                ])
            means.append([
                report.kind, r.method, _fmt(report.mean_mae), _fmt(report.mean_rmse),
                _fmt(report.overall.mae), _fmt(report.overall.rmse), report.averaging,
            ])
        path = out / "table2_binned.csv"
        _write_csv(path, BINNED_HEADER, rows)
        written["table2"] = str(path)
        path = out / "table2_means.csv"
        _write_csv(path, BINNED_MEAN_HEADER, means)
        written["table2_means"] = str(path)

    # Road-profile correlation, one column per threshold
    roads = by_kind.get(AppConstants.REPORT_ROADS, [])
    if roads:
        reports = [(r.method, ProfileReport.model_validate(r.result)) for r in roads]
        thresholds = sorted({t for _, rep in reports for t in rep.above})
        header = PROFILE_HEADER + [f"share_pcc_gt_{t}" for t in thresholds]
        rows = [
            [method, _fmt(rep.mean_pcc), _fmt(rep.std_pcc), len(rep.roads), rep.skipped_count, rep.sampling]
            + [_fmt(rep.above.get(t)) for t in thresholds]
            for method, rep in reports
        ]
        path = out / "table3_profiles.csv"
        _write_csv(path, header, rows)
        written["table3"] = str(path)

    # Boundary recovery per buffer
    buildings = by_kind.get(AppConstants.REPORT_BUILDINGS, [])
    if buildings:
        rows = []
        for r in buildings:
            rep = BoundaryReport.model_validate(r.result)
            for ratio in rep.ratios:
                rows.append([
                    r.method, ratio.buffer, ratio.selected, rep.reference_count,
                    rep.extracted_count, _fmt(ratio.ratio), rep.thinning,
                ])
        path = out / "boundaries.csv"
        _write_csv(path, BOUNDARY_HEADER, rows)
        written["boundaries"] = str(path)

    # Every record in one file
    combined = out / "report.json"
    combined.write_text(
        json.dumps([r.model_dump(mode="json") for r in records], indent=2) + "\n", encoding="utf-8"
    )
    written["report"] = str(combined)
    logger.info("Merged %d evaluation record(s) into %d file(s)", len(records), len(written))
    return written
