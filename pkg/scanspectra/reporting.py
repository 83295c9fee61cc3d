"""JSON reports, CSV tables and model loading for the command line."""
from __future__ import annotations

import csv
import json
import logging
import os
from typing import Iterable, Sequence, Union

from scanspectra.common.constants import DEFAULT_STATE_CAP
from scanspectra.common.exceptions import Chain, SchemaVersionError
from scanspectra.common.version import SCHEMA_VERSION, tool_version
from scanspectra.markov.mixing import MixingCurve
from scanspectra.markov.models import FAMILIES, build_model, parse_model_spec
from scanspectra.markov.statespace import Distribution
from scanspectra.odm.base import Model
from scanspectra.odm.models.config import RunConfig
from scanspectra.odm.models.report import NamedResult, Report

logger = logging.getLogger('scanspectra.reporting')

CURVE_COLUMNS = ["t", "unit", "d_t"]
SWEEP_COLUMNS = ["n", "delta", "closed_form", "direct_norm", "bound", "ratio"]
SEPARATION_COLUMNS = ["n", "t_gd_steps", "t_ss_sweeps", "ratio", "bound_check"]


def named_result(name: str, kind: str, record: Union[Model, Sequence[Model], dict], verdict: str = None) -> NamedResult:
    if isinstance(record, Model):
        payload = record.as_primitives()
        if verdict is None:
            verdict = payload.get("verdict")
        if verdict is None and isinstance(getattr(type(record), "passed", None), property):
            verdict = "pass" if record.passed else "fail"
    elif isinstance(record, dict):
        payload = record
    else:
        payload = [row.as_primitives() for row in record]
    return NamedResult({"name": name, "kind": kind, "verdict": verdict or "info", "payload": payload})


def build_report(run_config: RunConfig, results: Iterable[NamedResult]) -> Report:
    results = list(results)
    return Report({
        "tool_version": tool_version(),
        "schema_version": SCHEMA_VERSION,
        "config": run_config,
        "results": results,
        "passed": all(result.verdict != "fail" for result in results),
    })


def _atomic_write(path: str, text: str):
    tmp_path = f"{path}.tmp"
    with open(tmp_path, 'w', newline='') as out_fh:
        out_fh.write(text)
    os.replace(tmp_path, path)


def report_text(report: Report) -> str:
    return json.dumps(report.as_primitives(), sort_keys=True, indent=2) + "\n"


def write_report(report: Report, path: str):
    _atomic_write(path, report_text(report))
    logger.info(f"Report written to {path}")


@Chain(SchemaVersionError, passthrough=(SchemaVersionError, OSError))
def _load_json(path: str) -> dict:
    with open(path) as report_fh:
        return json.load(report_fh)


def read_report(path: str) -> Report:
    data = _load_json(path)
    if not isinstance(data, dict):
        raise SchemaVersionError(f"{path} does not hold a report object")
    if "schema_version" not in data:
        raise SchemaVersionError("Report is missing the field 'schema_version'")
    if data["schema_version"] != SCHEMA_VERSION:
        raise SchemaVersionError(f"Report schema version {data['schema_version']} is not the supported "
                                 f"version {SCHEMA_VERSION}")
    for name in Report.fields():
        if name not in data:
            raise SchemaVersionError(f"Report is missing the field '{name}'")
    try:
        return Report(data)
    except (ValueError, KeyError, TypeError) as e:
        raise SchemaVersionError(f"Report does not match schema version {SCHEMA_VERSION}: {e}")


def read_model(text: str, state_cap: int = DEFAULT_STATE_CAP) -> Distribution:
    """A builtin model string ('hardcore:complete:n=4,lambda=1') or the path of a model file."""
    family = text.split(':', 1)[0]
    if family in FAMILIES and ':' in text:
        return build_model(parse_model_spec(text), state_cap=state_cap)
    return build_model(parse_model_spec(f"explicit:{text}"), state_cap=state_cap)


def _write_rows(path: str, columns: Sequence[str], rows: Iterable[Sequence]):
    tmp_path = f"{path}.tmp"
    with open(tmp_path, 'w', newline='') as csv_fh:
        writer = csv.writer(csv_fh, lineterminator='\n')
        writer.writerow(columns)
        for row in rows:
            writer.writerow(["" if value is None else value for value in row])
    os.replace(tmp_path, path)


def write_curve_csv(curves: Iterable[MixingCurve], path: str):
    rows = ((t, curve.unit, repr(d)) for curve in curves for t, d in enumerate(curve.d_values))
    _write_rows(path, CURVE_COLUMNS, rows)


def write_table_csv(records: Iterable[Model], columns: Sequence[str], path: str):
    _write_rows(path, columns, ([record[column] for column in columns] for record in records))
