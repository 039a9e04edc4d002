"""Persistence: binary checkpoints, CSV time series, JSON summaries.

Checkpoint layout (little-endian throughout):

  bytes 0-3   magic "RNLS"
  u32         format version (1)
  u32         dimension n
  u32 * n     points per axis
  f64 * n     half-extents per axis
  f64         t
  f64         dt
  u32         header-blob byte length
  bytes       UTF-8 JSON blob: physics params, step count, status, the
              step-control state, and the trailing diagnostics rows needed
              to continue the causal residual stencil across a resume
  f64 * 2*prod(N)  field samples, re/im interleaved, axis 1 fastest

Round trips are bit-exact; resumed runs reproduce the uninterrupted run's
diagnostics.  CSV values are printed with 17 significant digits so doubles
re-parse exactly.
"""

from __future__ import annotations

import hashlib
import json
import struct
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .diagnostics import CSV_COLUMNS, DiagnosticsRecord
from .grid import WaveField, make_grid
from .integrator import EvolutionState, Status
from .operators import ConstantPower, InhomogeneousPower, PhysicsParams

MAGIC = b"RNLS"
VERSION = 1
RESIDUAL_STENCIL = 11


class CheckpointError(IOError):
    pass


# --------------------------------------------------------------------------
# physics (de)serialization
# --------------------------------------------------------------------------


def params_to_dict(params: PhysicsParams) -> dict:
    nl = params.nonlinearity
    if isinstance(nl, ConstantPower):
        nl_d = {"kind": "constant", "lambda": nl.lam}
    elif isinstance(nl, InhomogeneousPower):
        if nl.profile is not None:
            raise CheckpointError("custom coupling profiles are not serializable")
        nl_d = {"kind": "inhomogeneous", "lambda0": nl.lam0, "decay_m": nl.m}
    else:
        raise CheckpointError("general-G models are not serializable")
    return {
        "n": params.n,
        "omega": params.omega,
        "gamma": params.gamma,
        "p": params.p,
        "kappa": params.kappa,
        "nonlinearity": nl_d,
    }


def params_from_dict(d: dict) -> PhysicsParams:
    nl_d = d["nonlinearity"]
    if nl_d["kind"] == "constant":
        nl = ConstantPower(nl_d["lambda"])
    elif nl_d["kind"] == "inhomogeneous":
        nl = InhomogeneousPower(nl_d["lambda0"], nl_d["decay_m"])
    else:
        raise CheckpointError(f"unknown nonlinearity kind {nl_d['kind']!r}")
    return PhysicsParams(n=d["n"], omega=d["omega"], gamma=d["gamma"], p=d["p"],
                         kappa=d["kappa"], nonlinearity=nl)


def _record_to_list(rec: DiagnosticsRecord) -> list[float]:
    return list(rec.as_row()) + [rec.x_grad_lambda_term]


def _record_from_list(row: Sequence[float]) -> DiagnosticsRecord:
    kwargs = dict(zip(CSV_COLUMNS, row[: len(CSV_COLUMNS)]))
    rec = DiagnosticsRecord(**kwargs)
    if len(row) > len(CSV_COLUMNS):
        rec.x_grad_lambda_term = row[len(CSV_COLUMNS)]
    return rec


# --------------------------------------------------------------------------
# checkpoints
# --------------------------------------------------------------------------


def save_checkpoint(state: EvolutionState, path,
                    history: Optional[Sequence[DiagnosticsRecord]] = None) -> None:
    """Write state (and the trailing diagnostics rows) bit-exactly."""
    grid = state.field.grid
    blob = {
        "params": params_to_dict(state.params),
        "step_count": state.step_count,
        "status": state.status.value,
        "initial_grad_norm": state.initial_grad_norm,
        "grad_ref": state.grad_ref,
        "refine_active": state.refine_active,
        "detect_time": state.detect_time,
        "verdict_fired": state.verdict_fired,
        "grad_peak": state.grad_peak,
        "grad_peak_time": state.grad_peak_time,
        "history": [_record_to_list(r) for r in (history or [])[-RESIDUAL_STENCIL:]],
    }
    blob_bytes = json.dumps(blob, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", VERSION, grid.n))
        fh.write(struct.pack(f"<{grid.n}I", *grid.points))
        fh.write(struct.pack(f"<{grid.n}d", *grid.extents))
        fh.write(struct.pack("<dd", state.t, state.dt))
        fh.write(struct.pack("<I", len(blob_bytes)))
        fh.write(blob_bytes)
        flat = state.field.values.flatten(order="F")
        inter = np.empty(2 * flat.size, dtype="<f8")
        inter[0::2] = flat.real
        inter[1::2] = flat.imag
        fh.write(inter.tobytes())


def load_checkpoint(path) -> tuple[EvolutionState, list[DiagnosticsRecord]]:
    """Read a checkpoint; raises on corrupt magic, version skew, truncation."""
    raw = Path(path).read_bytes()
    if raw[:4] != MAGIC:
        raise CheckpointError("corrupt magic: not a checkpoint file")
    off = 4
    version, n = struct.unpack_from("<II", raw, off)
    off += 8
    if version != VERSION:
        raise CheckpointError(f"version mismatch: file {version}, supported {VERSION}")
    points = struct.unpack_from(f"<{n}I", raw, off)
    off += 4 * n
    extents = struct.unpack_from(f"<{n}d", raw, off)
    off += 8 * n
    t, dt = struct.unpack_from("<dd", raw, off)
    off += 16
    (blob_len,) = struct.unpack_from("<I", raw, off)
    off += 4
    if off + blob_len > len(raw):
        raise CheckpointError("truncated payload: header blob incomplete")
    blob = json.loads(raw[off : off + blob_len].decode("utf-8"))
    off += blob_len

    count = int(np.prod(points))
    need = 16 * count
    if len(raw) - off < need:
        raise CheckpointError(
            f"truncated payload: expected {need} field bytes, found {len(raw) - off}"
        )
    inter = np.frombuffer(raw[off : off + need], dtype="<f8")
    flat = inter[0::2] + 1j * inter[1::2]
    values = flat.reshape(points, order="F")

    grid = make_grid(n, extents, points)
    params = params_from_dict(blob["params"])
    state = EvolutionState(
        field=WaveField(grid, values),
        t=t,
        params=params,
        dt=dt,
        step_count=blob["step_count"],
        status=Status(blob["status"]),
        initial_grad_norm=blob["initial_grad_norm"],
        grad_ref=blob["grad_ref"],
        refine_active=blob["refine_active"],
        detect_time=blob["detect_time"],
        verdict_fired=blob.get("verdict_fired"),
        grad_peak=blob.get("grad_peak"),
        grad_peak_time=blob.get("grad_peak_time"),
    )
    history = [_record_from_list(row) for row in blob.get("history", [])]
    return state, history


# --------------------------------------------------------------------------
# CSV series
# --------------------------------------------------------------------------


def format_double(x: float) -> str:
    return f"{x:.17g}"


def write_series(records: Sequence[DiagnosticsRecord], path) -> None:
    """Fixed 15-column CSV; 17 significant digits round-trip doubles exactly."""
    if not records:
        raise ValueError("refusing to write an empty series")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(CSV_COLUMNS) + "\n")
        for rec in records:
            fh.write(",".join(format_double(v) for v in rec.as_row()) + "\n")


def read_series(path) -> list[DiagnosticsRecord]:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header.split(",") != list(CSV_COLUMNS):
            raise ValueError(f"unexpected series header: {header!r}")
        out = []
        for line in fh:
            if not line.strip():
                continue
            out.append(_record_from_list([float(x) for x in line.split(",")]))
    return out


# --------------------------------------------------------------------------
# JSON summaries
# --------------------------------------------------------------------------


def config_hash(cfg_text: str) -> str:
    return hashlib.sha256(cfg_text.encode("utf-8")).hexdigest()


def write_summary(summary: dict, path, cfg_text: Optional[str] = None) -> None:
    """Deterministic JSON: provenance carries the config hash and code
    version; wall-clock data stays out (see the run_meta sidecar)."""
    payload = dict(summary)
    payload["provenance"] = {
        "code_version": __version__,
        "config_sha256": config_hash(cfg_text) if cfg_text is not None else None,
    }
    text = json.dumps(payload, sort_keys=True, indent=2)
    Path(path).write_text(text + "\n", encoding="utf-8")


def write_run_meta(path, wall_seconds: float) -> None:
    """Non-deterministic sidecar (wall time), kept out of summary.json."""
    Path(path).write_text(f"wall_seconds = {wall_seconds:.3f}\n", encoding="utf-8")
