"""Command-line front end.

``katonls <task> --config run.json --out results/`` reads one JSON config,
runs the task and writes JSON/CSV artifacts (plus optional plots). Every
artifact embeds the resolved config. Exit status is 0 on success, 2 for an
invalid config and 3 for a numerical failure; failures also write
``error.json``.
"""

from __future__ import annotations

import argparse
import copy
import json
import logging
import sys
from pathlib import Path

import numpy as np
import scipy.fft as sfft

from . import io
from .dispersive import (
    WrapAroundError,
    admissible_pairs,
    dispersive_decay_fit,
    linear_trace,
    strichartz_norm,
)
from .funcalc import QuadratureError, gaussian_bound_fit, norm_equivalence_scan
from .grid import Field, make_grid, random_field
from .nls import BlowUpError, NonContractionError, PicardConfig, conservation_report, evolve, h1_bound_check, picard_solve
from .potentials import Potential, PotentialAdmissibilityError, PotentialSpec, kato_report, sample_potential
from .spectral import (
    ConvergenceError,
    ResonanceMemoryError,
    SpectralData,
    continuous_projection,
    find_form_constant,
    resonance_indicator,
    spectral_data,
)

log = logging.getLogger("katonls")

TASKS = ("kato", "spectrum", "resonance", "heat-fit", "norm-equiv", "decay", "strichartz", "picard", "evolve")
SEEDED = ("norm-equiv",)
EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3
NUMERIC_ERRORS = (ConvergenceError, ResonanceMemoryError, QuadratureError, NonContractionError, BlowUpError)

DEFAULTS = {
    "kato": {"radii": None},
    "spectrum": {"k_max": 4, "coarse_n": 24, "resonance": True},
    "resonance": {"coarse_n": 24, "scales": None},
    "heat-fit": {"t_ladder": [0.25, 0.5, 1.0, 2.0], "a": None},
    "norm-equiv": {"s": 1.0, "r": 2.0, "ensemble_size": 50, "homogeneous": False},
    "decay": {
        "times": {"start": 0.5, "stop": 4.0, "count": 15},
        "dt": 1e-3,
        "project": True,
        "data": {"kind": "gaussian", "amplitude": 1.0, "width": 0.85},
    },
    "strichartz": {
        "s": 0.0,
        "pair_count": 4,
        "T": 1.0,
        "n_slices": 21,
        "dt": 1e-3,
        "distorted": False,
        "project": True,
        "data": {"kind": "gaussian", "amplitude": 1.0, "width": 1.0},
    },
    "picard": {
        "T": 0.1,
        "n_t": 11,
        "tol": 1e-10,
        "max_iter": 50,
        "s": 1.0,
        "sign": -1,
        "dt": None,
        "ball_radius": None,
        "data": {"kind": "gaussian", "amplitude": 0.1, "width": 1.0},
    },
    "evolve": {
        "T": 1.0,
        "dt": 1e-3,
        "sign": -1,
        "n_slices": 11,
        "data": {"kind": "gaussian", "amplitude": 1.0, "width": 1.0},
    },
}


class ConfigError(ValueError):
    """Invalid run configuration; ``field`` names the offending entry."""

    def __init__(self, field: str, reason: str):
        super().__init__(f"{field}: {reason}")
        self.field = field
        self.reason = reason


def resolve_config(raw: dict, task: str | None = None, refine: bool = False) -> dict:
    """Fill defaults, check the task, and apply the ``--refine`` doubling."""
    if not isinstance(raw, dict):
        raise ConfigError("config", "top level must be a JSON object")
    cfg = copy.deepcopy(raw)
    name = task or cfg.get("task")
    if name is None:
        raise ConfigError("task", "no task given on the command line or in the config")
    if cfg.get("task") not in (None, name):
        raise ConfigError("task", f"config says {cfg['task']!r} but {name!r} was requested")
    if name not in TASKS:
        raise ConfigError("task", f"unknown task {name!r}; choose from {', '.join(TASKS)}")
    cfg["task"] = name
    grid = cfg.get("grid")
    if not isinstance(grid, dict) or "n" not in grid or "L" not in grid:
        raise ConfigError("grid", "expected an object with n and L")
    params = {**DEFAULTS[name], **cfg.get("params", {})}
    unknown = set(params) - set(DEFAULTS[name])
    if unknown:
        raise ConfigError("params", f"unknown parameters {sorted(unknown)} for {name}")
    if name in SEEDED and "seed" not in cfg:
        raise ConfigError("seed", f"{name} needs an explicit seed")
    cfg.setdefault("seed", 0)
    cfg.setdefault("potential", None)
    if refine:
        grid = {**grid, "n": 2 * int(grid["n"])}
        if params.get("dt") is not None:
            params["dt"] = params["dt"] / 2
        if "n_t" in params:
            params["n_t"] = 2 * params["n_t"] - 1
        if "n_slices" in params:
            params["n_slices"] = 2 * params["n_slices"] - 1
    cfg["grid"] = grid
    cfg["params"] = params
    cfg["refine"] = bool(refine)
    return cfg


def _build_grid(cfg):
    try:
        return make_grid(cfg["grid"]["n"], cfg["grid"]["L"])
    except (TypeError, ValueError) as exc:
        raise ConfigError("grid", str(exc)) from exc


def _build_potential(cfg, g) -> Potential:
    if cfg["potential"] is None:
        return Potential.zero(g)
    try:
        spec = PotentialSpec.from_dict(cfg["potential"])
        return sample_potential(spec, g)
    except PotentialAdmissibilityError as exc:
        raise ConfigError("potential", str(exc)) from exc
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigError("potential", f"invalid potential spec ({exc})") from exc


def _build_data(d: dict, g, seed: int, spec: SpectralData | None = None) -> Field:
    kind = d.get("kind", "gaussian")
    if kind == "gaussian":
        amp, w = float(d.get("amplitude", 1.0)), float(d.get("width", 1.0))
        c = d.get("center", (0.0, 0.0, 0.0))
        return Field.from_function(g, lambda x, y, z: amp * np.exp(-(x * x + y * y + z * z) / w**2), c)
    if kind == "random":
        f = random_field(g, np.random.default_rng(d.get("seed", seed)), k_cut=float(d.get("k_cut", 3.0)))
        return f * float(d.get("amplitude", 1.0))
    if kind == "bound_state":
        if spec is None or not spec.eigenpairs:
            raise ConfigError("params.data", "bound_state data needs a potential with a bound state")
        return spec.eigenpairs[int(d.get("index", 0))][1] * float(d.get("amplitude", 1.0))
    raise ConfigError("params.data", f"unknown data kind {kind!r}")


def _times(spec):
    if isinstance(spec, dict):
        return np.linspace(float(spec["start"]), float(spec["stop"]), int(spec["count"]))
    return np.asarray(spec, float)


def _spectrum(V: Potential) -> SpectralData:
    if V.is_zero:
        return SpectralData.empty()
    return spectral_data(V, resonance=False)


def _plot(path, draw):
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        log.warning("matplotlib not installed; skipping %s", path)
        return
    fig, ax = plt.subplots(figsize=(5, 4))
    draw(ax)
    fig.tight_layout()
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)


def task_kato(cfg, g, V, out, plot):
    p = cfg["params"]
    rep = kato_report(V, p["radii"])
    io.write_json(out / "kato.json", {**rep.to_dict(), "config": cfg})


def task_spectrum(cfg, g, V, out, plot):
    p = cfg["params"]
    spec = spectral_data(V, p["k_max"], p["resonance"], p["coarse_n"]) if not V.is_zero else SpectralData.empty()
    io.save_spectral(spec, out, cfg)


def task_resonance(cfg, g, V, out, plot):
    p = cfg["params"]
    scales = p["scales"] or [1.0]
    rows = [(c, resonance_indicator(V * c, p["coarse_n"]), resonance_indicator(V * c, p["coarse_n"], "l1")) for c in scales]
    io.write_csv(out / "resonance.csv", ["scale", "sigma_l2", "sigma_l1"], rows, cfg)
    if plot and len(rows) > 1:
        _plot(out / "resonance.png", lambda ax: (ax.plot([r[0] for r in rows], [r[1] for r in rows], "o-"), ax.set_xlabel("scale"), ax.set_ylabel("sigma_min")))


def task_heat_fit(cfg, g, V, out, plot):
    p = cfg["params"]
    a = find_form_constant(V) if p["a"] is None else float(p["a"])
    fit = gaussian_bound_fit(V, p["t_ladder"], a)
    io.write_json(out / "heat_fit.json", {**fit.to_dict(), "a": a, "config": cfg})


def task_norm_equiv(cfg, g, V, out, plot):
    p = cfg["params"]
    a = find_form_constant(V)
    spec = _spectrum(V) if p["homogeneous"] else None
    rep = norm_equivalence_scan(V, a, p["s"], p["r"], p["ensemble_size"], spec, cfg["seed"], p["homogeneous"])
    io.write_json(out / "norm_equiv.json", {**rep.to_dict(), "spread": rep.spread, "a": a, "config": cfg})
    if plot:
        _plot(out / "norm_equiv.png", lambda ax: (ax.hist(rep.ratios, bins=20), ax.set_xlabel("norm ratio")))


def task_decay(cfg, g, V, out, plot):
    p = cfg["params"]
    times = _times(p["times"])
    spec = _spectrum(V)
    f = _build_data(p["data"], g, cfg["seed"], spec)
    try:
        fit = dispersive_decay_fit(V, spec, f, times, p["dt"], p["project"])
    except WrapAroundError as exc:
        raise ConfigError("params.times", str(exc)) from exc
    io.write_csv(out / "decay.csv", ["t", "sup_norm"], fit.rows(), cfg)
    io.write_json(
        out / "decay.json",
        {"exponent": fit.exponent, "amplitude": fit.amplitude, "T_wrap": fit.horizon, "J": spec.count, "config": cfg},
    )
    if plot:
        _plot(out / "decay.png", lambda ax: (ax.loglog(fit.times, fit.sup_norms, "o-"), ax.set_xlabel("t"), ax.set_ylabel("sup |u|")))


def task_strichartz(cfg, g, V, out, plot):
    p = cfg["params"]
    spec = _spectrum(V)
    f = _build_data(p["data"], g, cfg["seed"], spec)
    if p["project"]:
        f = continuous_projection(spec, f)
    times = np.linspace(0.0, p["T"], p["n_slices"])
    trace = linear_trace(V, f, times, p["dt"])
    a = find_form_constant(V) if p["distorted"] else 0.0
    rep = strichartz_norm(trace, p["s"], admissible_pairs(p["s"], p["pair_count"]), p["distorted"], V, a, spec)
    io.write_csv(out / "strichartz.csv", ["s", "q", "r", "norm"], rep.rows(), cfg)


def _save_trace_summary(trace, out, cfg, stem):
    io.save_trace(trace, out, cfg, stem)
    io.write_csv(out / f"{stem}_summary.csv", ["t", "mass", "energy", "h1"], trace.summary_rows(), cfg)


def task_picard(cfg, g, V, out, plot):
    p = cfg["params"]
    spec = _spectrum(V)
    u0 = _build_data(p["data"], g, cfg["seed"], spec)
    pc = PicardConfig(p["T"], p["n_t"], p["tol"], p["max_iter"], p["ball_radius"], p["s"], p["dt"])
    try:
        trace, ratios = picard_solve(V, spec, u0, pc, p["sign"])
    except NonContractionError as exc:
        io.write_csv(out / "picard_ratios.csv", ["iteration", "ratio"], list(enumerate(exc.ratios, 1)), cfg)
        raise
    io.write_csv(out / "picard_ratios.csv", ["iteration", "ratio"], list(enumerate(ratios, 1)), cfg)
    _save_trace_summary(trace, out, cfg, "picard")


def task_evolve(cfg, g, V, out, plot):
    p = cfg["params"]
    u0 = _build_data(p["data"], g, cfg["seed"])
    trace = evolve(V, u0, p["T"], p["dt"], p["sign"], p["n_slices"])
    _save_trace_summary(trace, out, cfg, "evolve")
    dm, de = conservation_report(trace)
    report = {"mass_drift": dm, "energy_drift": de, "config": cfg}
    if p["sign"] == -1:
        a = find_form_constant(V)
        report.update(a=a, h1_bound=h1_bound_check(trace, V, a))
    io.write_json(out / "evolve_drift.json", report)
    if plot:
        _plot(
            out / "evolve_drift.png",
            lambda ax: (
                ax.semilogy(trace.times[1:], np.abs(trace.energy[1:] - trace.energy[0]) / abs(trace.energy[0]), label="energy"),
                ax.set_xlabel("t"),
                ax.legend(),
            ),
        )


HANDLERS = {
    "kato": task_kato,
    "spectrum": task_spectrum,
    "resonance": task_resonance,
    "heat-fit": task_heat_fit,
    "norm-equiv": task_norm_equiv,
    "decay": task_decay,
    "strichartz": task_strichartz,
    "picard": task_picard,
    "evolve": task_evolve,
}


def _error_record(out: Path, code: int, label: str, message: str, cfg, field=None):
    rec = {"status": "error", "exit_code": code, "label": label, "reason": message, "field": field, "config": cfg}
    try:
        out.mkdir(parents=True, exist_ok=True)
        io.write_json(out / "error.json", rec)
    except OSError:
        pass
    print(f"error [{label}]: {message}", file=sys.stderr)
    return code


def run(raw_config: dict, out, task: str | None = None, refine: bool = False, threads: int = 1, plot: bool = False) -> int:
    """Run one task; returns the exit status."""
    out = Path(out)
    cfg = raw_config
    try:
        cfg = resolve_config(raw_config, task, refine)
        g = _build_grid(cfg)
        V = _build_potential(cfg, g)
        out.mkdir(parents=True, exist_ok=True)
        with sfft.set_workers(threads):
            HANDLERS[cfg["task"]](cfg, g, V, out, plot)
    except ConfigError as exc:
        return _error_record(out, EXIT_CONFIG, "ConfigError", exc.reason, cfg, exc.field)
    except NUMERIC_ERRORS as exc:
        return _error_record(out, EXIT_NUMERIC, type(exc).__name__, str(exc), cfg)
    except (ValueError, TypeError, KeyError) as exc:
        return _error_record(out, EXIT_CONFIG, "ConfigError", f"{type(exc).__name__}: {exc}", cfg)
    return EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="katonls", description=__doc__.splitlines()[0])
    parser.add_argument("task", choices=TASKS)
    parser.add_argument("--config", required=True, help="JSON run configuration")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--threads", type=int, default=1, help="FFT worker threads")
    parser.add_argument("--refine", action="store_true", help="double n, halve dt and double time slices")
    parser.add_argument("--plot", action="store_true", help="also write PNG plots (needs matplotlib)")
    parser.add_argument("-v", "--verbose", action="store_true")
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        raw = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        return _error_record(Path(args.out), EXIT_CONFIG, "ConfigError", f"cannot read config: {exc}", None, "config")
    return run(raw, args.out, args.task, args.refine, args.threads, args.plot)


if __name__ == "__main__":
    sys.exit(main())
