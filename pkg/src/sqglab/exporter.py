from __future__ import annotations

import csv
import io
import json
import math
import os
from typing import Any, Iterable, Sequence

import numpy as np

from .dyadic import BesovSpec
from .ledger import TimeSeriesLedger
from .storage import atomic_write_text, ensure_dirs

LEDGER_COLUMNS = ("time", "p", "theta_lp", "q", "block_lp", "grad_v_inf")


def _ensure_out_dir(out_dir: str | None = None) -> str:
    return ensure_dirs(out_dir)


def fmt_exponent(p: float) -> str:
    return "inf" if math.isinf(p) else f"{p:g}"


def _cell(value: Any) -> str:
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    return str(value)


def jsonable(obj: Any) -> Any:
    """Plain JSON types; non-finite floats become strings, float keys are formatted."""
    if isinstance(obj, dict):
        return {_key(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else _cell(v)
    if isinstance(obj, BesovSpec):
        return obj.label()
    return obj


def _key(k: Any) -> str:
    if isinstance(k, BesovSpec):
        return k.label()
    if isinstance(k, (float, np.floating)):
        return fmt_exponent(float(k))
    if isinstance(k, tuple):
        return ",".join(_key(x) for x in k)
    return str(k)


def export_table_csv(rows: Iterable[dict[str, Any]], fieldnames: Sequence[str], outfile: str) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(fieldnames), lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: _cell(r.get(k, "")) for k in fieldnames})
    return atomic_write_text(outfile, buf.getvalue())


def ledger_rows(ledger: TimeSeriesLedger) -> list[dict[str, Any]]:
    """One row per (time, q, p)."""
    rows = []
    qs, ps = ledger.block_indices, ledger.ps
    for i, t in enumerate(ledger.times):
        for q in qs:
            for p in ps:
                rows.append(
                    {
                        "time": t,
                        "p": fmt_exponent(p),
                        "theta_lp": ledger.lp[p][i],
                        "q": q,
                        "block_lp": ledger.per_block_lp[(q, p)][i],
                        "grad_v_inf": ledger.grad_v_inf[i],
                    }
                )
    return rows


def export_ledger_csv(ledger: TimeSeriesLedger, outfile: str | None = None, name: str = "run", out_dir: str | None = None) -> str:
    if not outfile:
        outfile = os.path.join(_ensure_out_dir(out_dir), f"{name}_ledger.csv")
    return export_table_csv(ledger_rows(ledger), LEDGER_COLUMNS, outfile)


def export_report_json(report: dict[str, Any], outfile: str) -> str:
    text = json.dumps(jsonable(report), sort_keys=True, indent=2, ensure_ascii=False)
    return atomic_write_text(outfile, text + "\n")


def norm_report(spec: BesovSpec, value: float, n: int, length: float) -> dict[str, Any]:
    return {"spec": spec.label(), "value": value, "grid": {"n": n, "length": length}, "mode": spec.mode}
