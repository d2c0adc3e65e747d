"""Machine-readable run reports and their JSON, CSV and text renderings.

A report is a header (command, artifact version, config digest, seed) plus
an ordered list of typed result blocks. Serialization is canonical: sorted
keys, fixed indentation, and ``null`` for undefined numbers, so a fixed
config and seed always produce the same bytes.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

from .errors import FormatError

BLOCK_TYPES = ("histogram", "matrix", "car_table", "estimate", "distance", "series", "diagnostics")


def _plain(x):
    """Convert numpy values to JSON-ready Python values, with ``None`` for non-finite floats."""
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    return x


@dataclass
class Report:
    command: str
    version: str
    config_digest: Optional[str] = None
    seed: Optional[int] = None
    blocks: list = field(default_factory=list)

    def add(self, type_: str, name: str, **content) -> dict:
        if type_ not in BLOCK_TYPES:
            raise FormatError(f"unknown block type {type_!r}")
        block = _plain({"type": type_, "name": name, **content})
        self.blocks.append(block)
        return block

    def block(self, name: str) -> dict:
        for b in self.blocks:
            if b["name"] == name:
                return b
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "version": self.version,
            "config_digest": self.config_digest,
            "seed": self.seed,
            "blocks": self.blocks,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2, allow_nan=False) + "\n"

    @classmethod
    def from_dict(cls, data: dict) -> Report:
        if not isinstance(data, dict) or "command" not in data or "blocks" not in data:
            raise FormatError("not a report: missing 'command' or 'blocks'")
        blocks = data["blocks"]
        if not isinstance(blocks, list):
            raise FormatError("report 'blocks' must be a list")
        for i, b in enumerate(blocks):
            if not isinstance(b, dict) or b.get("type") not in BLOCK_TYPES:
                kind = b.get("type") if isinstance(b, dict) else type(b).__name__
                raise FormatError(f"block {i}: unknown block type {kind!r}")
        return cls(data["command"], data.get("version", ""), data.get("config_digest"), data.get("seed"), blocks)

    @classmethod
    def from_json(cls, text: str) -> Report:
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise FormatError(f"report is not valid JSON: {exc}") from None
        return cls.from_dict(data)


# ---------------------------------------------------------------- block builders


def histogram_block(report: Report, name: str, hist, *, model: dict | None = None):
    n = hist.total_slots
    return report.add(
        "histogram",
        name,
        units="slots",
        total_slots=n,
        counts=hist.counts,
        frequencies=hist.counts / n,
        frequency_errors=np.sqrt(hist.counts) / n,
        **({"model": model} if model else {}),
    )


def matrix_block(report: Report, name: str, values, *, units: str, total_slots=None, **extra):
    return report.add("matrix", name, units=units, rows="signal", columns="idler",
                      values=np.asarray(values), total_slots=total_slots, **extra)


def car_block(report: Report, name: str, table):
    return report.add(
        "car_table",
        name,
        units="slots",
        total_slots=table.coincidence.total_slots,
        offset_slots=table.accidental.offset_slots,
        coincidence=table.coincidence.counts,
        accidental=table.accidental.counts,
        ratio=table.ratio,
    )


def estimate_block(report: Report, name: str, value, std_error=None, units: str = "1", note: str | None = None):
    extra = {"note": note} if note else {}
    return report.add("estimate", name, value=value, std_error=std_error, units=units, **extra)


def series_block(report: Report, name: str, columns: list[str], rows: list[list[Any]], units: list[str]):
    return report.add("series", name, columns=columns, units=units, rows=rows)


# ---------------------------------------------------------------- rendering


def render_json(report: Report) -> str:
    return report.to_json()


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def render_csv(report: Report) -> str:
    """One CSV section per block, each introduced by a ``# type: name`` line."""
    out = io.StringIO()
    out.write(f"# command: {report.command}\n# version: {report.version}\n# config_digest: {report.config_digest}\n")
    w = csv.writer(out, lineterminator="\n")
    for b in report.blocks:
        out.write(f"# {b['type']}: {b['name']}\n")
        kind = b["type"]
        if kind == "histogram":
            w.writerow(["clicks", "count", "frequency", "frequency_error"])
            for k, (c, f, e) in enumerate(zip(b["counts"], b["frequencies"], b["frequency_errors"])):
                w.writerow([k, c, _fmt(f), _fmt(e)])
        elif kind in ("matrix", "car_table"):
            keys = ["values"] if kind == "matrix" else ["coincidence", "accidental", "ratio"]
            w.writerow(["quantity", "signal", "idler", "value"])
            for key in keys:
                for r, row in enumerate(b[key]):
                    for c, v in enumerate(row):
                        w.writerow([key, r, c, _fmt(v)])
        elif kind == "estimate":
            w.writerow(["value", "std_error", "units"])
            w.writerow([_fmt(b["value"]), _fmt(b["std_error"]), b["units"]])
        elif kind == "series":
            w.writerow(b["columns"])
            for row in b["rows"]:
                w.writerow([_fmt(v) for v in row])
        else:
            w.writerow(["key", "value"])
            for k in sorted(k for k in b if k not in ("type", "name")):
                w.writerow([k, _fmt(b[k]) if not isinstance(b[k], (dict, list)) else json.dumps(b[k], sort_keys=True)])
    return out.getvalue()


def _grid(rows: list[list[str]]) -> str:
    widths = [max(len(r[c]) for r in rows) for c in range(len(rows[0]))]
    return "\n".join("  ".join(cell.rjust(w) for cell, w in zip(r, widths)).rstrip() for r in rows) + "\n"


def _num(x) -> str:
    if x is None:
        return "undefined"
    if isinstance(x, float):
        return f"{x:.6g}"
    return str(x)


def render_table(report: Report) -> str:
    """Human-readable text; CAR blocks become "coincidence:accidental" grids."""
    out = [f"command: {report.command}", f"version: {report.version}", f"config_digest: {report.config_digest}"]
    text = "\n".join(out) + "\n"
    for b in report.blocks:
        kind = b["type"]
        text += f"\n[{b['name']}]\n"
        if kind == "car_table":
            coinc, acc = b["coincidence"], b["accidental"]
            size = len(coinc)
            rows = [["signal\\idler"] + [str(m) for m in range(size)]]
            for n in range(size):
                rows.append([str(n)] + [f"{coinc[n][m]}:{acc[n][m]}" for m in range(size)])
            text += _grid(rows)
        elif kind == "matrix":
            vals = b["values"]
            rows = [["signal\\idler"] + [str(m) for m in range(len(vals[0]))]]
            rows += [[str(n)] + [_num(v) for v in row] for n, row in enumerate(vals)]
            text += _grid(rows)
        elif kind == "histogram":
            rows = [["clicks", "count", "frequency", "error"]]
            rows += [[str(k), str(c), _num(f), _num(e)]
                     for k, (c, f, e) in enumerate(zip(b["counts"], b["frequencies"], b["frequency_errors"]))]
            text += _grid(rows)
        elif kind == "estimate":
            err = "" if b["std_error"] is None else f" +/- {_num(b['std_error'])}"
            text += f"{_num(b['value'])}{err} {b['units']}\n"
            if b.get("note"):
                text += f"note: {b['note']}\n"
        elif kind == "series":
            rows = [[f"{c} [{u}]" for c, u in zip(b["columns"], b["units"])]]
            rows += [[_num(v) for v in row] for row in b["rows"]]
            text += _grid(rows)
        else:
            for k in sorted(k for k in b if k not in ("type", "name")):
                text += f"{k}: {_num(b[k]) if not isinstance(b[k], (dict, list)) else json.dumps(b[k], sort_keys=True)}\n"
    return text


RENDERERS = {"json": render_json, "csv": render_csv, "table": render_table}
