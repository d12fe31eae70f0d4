"""Delimited output and the run manifest.

Formatting is pinned so identical experiments produce byte-identical
files: fixed column orders, ``%.10g`` floats, LF newlines.  Wall-clock
numbers go to the manifest only, never into the CSVs.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from .harness import ExperimentReport


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if value is None:
        return ""
    return f"{float(value):.10g}"


def _write_rows(path: Path, header, rows) -> None:
    lines = [",".join(header)]
    lines += [",".join(_fmt(v) for v in row) for row in rows]
    path.write_text("\n".join(lines) + "\n", encoding="ascii")


def write_tradeoff_csv(report: ExperimentReport, path) -> None:
    rows = [
        (p.method, p.gamma_db, p.mean_sinr_db, p.stderr_db, p.n_ok)
        for p in report.tradeoff
        if p.n_ok > 0
    ]
    _write_rows(Path(path), ("method", "gamma_db", "mean_sinr_db", "stderr", "n_ok"),
                [(m,) + tuple(r) for (m, *r) in rows])


def write_runs_csv(report: ExperimentReport, path) -> None:
    header = ("method", "gamma_db", "channel_draw", "symbol_draw",
              "sinr_linear", "sinr_db", "status", "iterations")
    rows = [
        (r.method, r.gamma_db, r.channel_draw, r.symbol_draw,
         r.sinr_linear, r.sinr_db, r.status, r.iterations)
        for r in report.runs
    ]
    _write_rows(Path(path), header, rows)


def write_beampattern_csv(report: ExperimentReport, path) -> None:
    rows = []
    for method in sorted(report.beampattern_db):
        gains = report.beampattern_db[method]
        for ang, gdb in zip(report.angles_deg, gains):
            rows.append((ang, method, gdb))
    _write_rows(Path(path), ("angle_deg", "method", "gain_db"), rows)


def write_security_csv(report: ExperimentReport, path) -> None:
    rows = [(p.gamma_db, p.cu_ser, p.eve_ser) for p in report.security]
    _write_rows(Path(path), ("gamma_db", "cu_ser", "eve_ser"), rows)


def write_solution_csv(x, w, path) -> None:
    """Waveform and receive filter, one antenna index per row."""
    n = max(len(x), len(w) if w is not None else 0)
    rows = []
    for i in range(n):
        xv = x[i] if i < len(x) else None
        wv = w[i] if w is not None and i < len(w) else None
        rows.append((
            i,
            None if xv is None else xv.real, None if xv is None else xv.imag,
            None if wv is None else wv.real, None if wv is None else wv.imag,
        ))
    _write_rows(Path(path), ("index", "x_re", "x_im", "w_re", "w_im"), rows)


def config_hash(config: dict) -> str:
    canon = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def write_manifest(path, command: str, seed: int, config: dict, extras: dict | None = None):
    import ciwave

    payload = {
        "command": command,
        "seed": seed,
        "config_hash": config_hash(config),
        "versions": {
            "ciwave": ciwave.__version__,
            "numpy": np.__version__,
        },
    }
    if extras:
        payload.update(extras)
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                          encoding="ascii")
