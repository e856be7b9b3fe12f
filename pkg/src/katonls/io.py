"""Artifact formats: JSON reports, CSV tables and binary field slices.

A field file holds three little-endian float64 header values ``(n, L, t)``
followed by ``n^3`` little-endian complex128 values in C order.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .grid import Field, make_grid
from .potentials import Potential, PotentialSpec, sample_potential
from .spectral import SpectralData
from .trace import EvolutionTrace

HEADER = np.dtype("<f8")
PAYLOAD = np.dtype("<c16")


def _clean(obj):
    """JSON-safe copy: non-finite floats become strings, numpy scalars and tuples are unwrapped."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dumps(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n"


def write_json(path, obj) -> Path:
    path = Path(path)
    path.write_text(dumps(obj))
    return path


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_csv(path, header, rows, config=None) -> Path:
    """CSV with an optional leading ``# config: {...}`` line; floats use their shortest round-trip form."""
    lines = []
    if config is not None:
        lines.append("# config: " + json.dumps(_clean(config), sort_keys=True, separators=(",", ":")))
    lines.append(",".join(header))
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    path = Path(path)
    path.write_text("\n".join(lines) + "\n")
    return path


def read_csv(path):
    """``(config, header, rows)`` with numeric cells parsed as floats."""
    config, rows, header = None, [], None
    for line in Path(path).read_text().splitlines():
        if line.startswith("# config: "):
            config = json.loads(line[len("# config: ") :])
        elif header is None:
            header = line.split(",")
        else:
            rows.append([float(c) for c in line.split(",")])
    return config, header, rows


def write_field(path, f: Field, t: float = 0.0) -> Path:
    path = Path(path)
    g = f.grid
    with path.open("wb") as fh:
        fh.write(np.array([g.n, g.box_length, t], dtype=HEADER).tobytes())
        fh.write(np.ascontiguousarray(f.values, dtype=PAYLOAD).tobytes())
    return path


def read_field(path) -> tuple[Field, float]:
    """Inverse of :func:`write_field`; returns ``(field, t)``."""
    raw = Path(path).read_bytes()
    n, L, t = np.frombuffer(raw[:24], dtype=HEADER)
    n = int(n)
    vals = np.frombuffer(raw[24:], dtype=PAYLOAD)
    if vals.size != n**3:
        raise ValueError(f"{path}: expected {n**3} values, found {vals.size}")
    g = make_grid(n, float(L))
    return Field(g, vals.reshape(g.shape)), float(t)


def save_trace(trace: EvolutionTrace, outdir, config=None, stem: str = "trace") -> Path:
    """Manifest ``<stem>.json`` plus one ``<stem>_NNNN.bin`` per slice."""
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    slices = []
    for k, (t, f) in enumerate(zip(trace.times, trace.fields)):
        name = f"{stem}_{k:04d}.bin"
        write_field(out / name, f, float(t))
        slices.append({"t": float(t), "file": name})
    g = trace.grid
    spec = trace.potential.spec
    manifest = {
        "grid": {"n": g.n, "L": g.box_length},
        "potential": spec.to_dict() if spec is not None else None,
        "sign": trace.sign,
        "dt": trace.dt,
        "slices": slices,
        "config": config,
    }
    return write_json(out / f"{stem}.json", manifest)


def load_trace(manifest_path) -> EvolutionTrace:
    """Rebuild a trace; the potential is resampled from its stored spec (zero if absent)."""
    manifest_path = Path(manifest_path)
    m = json.loads(manifest_path.read_text())
    g = make_grid(m["grid"]["n"], m["grid"]["L"])
    V = sample_potential(PotentialSpec.from_dict(m["potential"]), g) if m["potential"] else Potential.zero(g)
    times, fields = [], []
    for s in m["slices"]:
        f, t = read_field(manifest_path.parent / s["file"])
        times.append(t)
        fields.append(f)
    return EvolutionTrace.from_fields(V, m["sign"], times, fields, m["dt"])


def save_spectral(spec: SpectralData, outdir, config=None, stem: str = "spectrum") -> Path:
    """``<stem>.json`` with the diagnostics and one ``<stem>_psi_j.bin`` per eigenvector."""
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    files = []
    for j, (_, psi) in enumerate(spec.eigenpairs, start=1):
        name = f"{stem}_psi_{j}.bin"
        write_field(out / name, psi)
        files.append(name)
    return write_json(out / f"{stem}.json", {**spec.to_dict(), "eigenvectors": files, "config": config})
