"""Command-line entry point: regenerate figure data as CSV plus a JSON manifest.

    acsense <experiment> [--config cfg.json] [--seed N] [--out DIR] [--set key=value ...]

Exit status is 0 on success, 2 for configuration errors and 3 when a
numerical contract fails.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import sys
from importlib import metadata
from pathlib import Path

import numpy as np

from . import qla
from .dynamics import m_curve_effective, m_curve_full, simulate_pulsed_noisy
from .errors import ConfigurationError, SensorError
from .estimation import cfi_closed, single_qubit_cfi
from .measurement import MeasurementRecord, delay_error_order, sequential_joint_prob_closed, \
    sequential_joint_prob_exact
from .model import PulseSequence, SensorParams, effective_hamiltonian, effective_model, field_amplitude_factor
from .noise import LindbladParams, OUParams, PhenomNoise, cfi_noisy_closed, decay_model, fit_decay_times, \
    lindblad_solve
from .series import TimeGrid, TimeSeries

EXPERIMENTS = ("dynamics", "dynamics-phase", "fisher", "fisher-noisy", "lindblad",
               "lindblad-fit", "ou-pulses", "measure-delay")
STOCHASTIC = {"ou-pulses"}

_SENSOR = {"g": 1.0, "b": 1.0, "omega": 10.0, "phi": 0.0}
DEFAULTS = {
    "dynamics": {**_SENSOR, "t0": 0.0, "t1": 20.0, "n_samples": 2001},
    "dynamics-phase": {**_SENSOR, "phi": math.pi / 6, "t0": 0.0, "t1": 20.0, "n_samples": 2001},
    "fisher": {**_SENSOR, "t0": 0.0, "t1": 20.0, "n_samples": 2001},
    "fisher-noisy": {**_SENSOR, "T1": 300.0, "T2": 200.0, "t0": 0.0, "t1": 300.0, "n_samples": 3001},
    "lindblad": {**_SENSOR, "gamma1": 0.01, "gamma2": 0.05, "t0": 0.0, "t1": 150.0, "n_samples": 1501},
    "lindblad-fit": {**_SENSOR, "gamma1": 0.01, "gamma2": 0.05, "t0": 0.0, "t1": 150.0, "n_samples": 1501},
    "ou-pulses": {**_SENSOR, "mu": 0.0, "sigma": 0.2, "t_c": 50.0, "pulse_spacing": None,
                  "z_pulses": True, "n_traj": 50, "workers": 1, "t0": 0.0, "t1": 20.0, "n_samples": 201},
    "measure-delay": {**_SENSOR, "gamma1": 0.01, "gamma2": 0.05, "measure_time": 5.0,
                      "delta_t": [0.1, 0.05, 0.025, 0.0125], "t0": 0.0},
}
COMMON = {"h": None, "seed": None}


def version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0.0.0+local"


# -- configuration --------------------------------------------------------------

def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def resolve_config(experiment: str, raw: dict) -> dict:
    """Merge ``raw`` over the experiment defaults and validate it."""
    if experiment not in EXPERIMENTS:
        raise ConfigurationError(f"unknown experiment {experiment!r}; choose from {', '.join(EXPERIMENTS)}")
    raw = {k: v for k, v in raw.items() if k != "experiment"}
    allowed = {**DEFAULTS[experiment], **COMMON}
    unknown = sorted(set(raw) - set(allowed))
    if unknown:
        raise ConfigurationError(f"unknown key(s) for {experiment}: {', '.join(unknown)}")
    cfg = {"experiment": experiment, **allowed, **raw}
    for key, value in cfg.items():
        default = allowed.get(key)
        if key in ("experiment", "delta_t") or value is None:
            continue
        if isinstance(default, bool):
            if not isinstance(value, bool):
                raise ConfigurationError(f"{key} must be true or false")
        elif isinstance(default, int) or key == "seed":
            if isinstance(value, bool) or not float(value).is_integer():
                raise ConfigurationError(f"{key} must be an integer")
            cfg[key] = int(value)
        elif isinstance(value, (int, float)) and not isinstance(value, bool):
            cfg[key] = float(value)
        else:
            raise ConfigurationError(f"{key} must be a number, got {value!r}")
    if experiment == "measure-delay":
        dts = cfg["delta_t"]
        if not isinstance(dts, list) or not dts or not all(isinstance(x, (int, float)) for x in dts):
            raise ConfigurationError("delta_t must be a non-empty list of numbers")
        cfg["delta_t"] = [float(x) for x in dts]
    if experiment in STOCHASTIC and cfg["seed"] is None:
        raise ConfigurationError(f"{experiment} is stochastic: a seed is required")
    return cfg


def _params(cfg) -> SensorParams:
    return SensorParams(cfg["g"], cfg["b"], cfg["omega"], cfg["phi"])


def _grid(cfg, h_default) -> TimeGrid:
    h = cfg["h"] if cfg["h"] is not None else h_default
    return TimeGrid(cfg["t0"], cfg["t1"], cfg["n_samples"], h)


def _lindblad_h(cfg) -> float:
    return 0.01 / max(abs(cfg["g"]), cfg["gamma1"], cfg["gamma2"], 1.0)


# -- experiments ------------------------------------------------------------------

def _exp_dynamics(cfg):
    p = _params(cfg)
    grid = _grid(cfg, p.period / 40)
    full = m_curve_full(p, grid)
    eff = m_curve_effective(p.replace(phi=0.0), grid)
    nofield = m_curve_effective(p.replace(b=0.0, phi=0.0), grid)
    cols = {"t": grid.times, "m_full": full.values, "m_effective": eff.values, "m_nofield": nofield.values}
    return cols, {"max_abs_deviation": float(np.max(np.abs(full.values - eff.values))),
                  "A": field_amplitude_factor(p)}


def _exp_fisher(cfg):
    p = _params(cfg)
    grid = _grid(cfg, p.period / 40)
    t = grid.times
    return {"t": t, "cfi_two_qubit": cfi_closed(p, t), "cfi_single_qubit": single_qubit_cfi(p, t)}, {}


def _exp_fisher_noisy(cfg):
    p = _params(cfg)
    grid = _grid(cfg, p.period / 40)
    t = grid.times
    noisy = cfi_noisy_closed(p, PhenomNoise(cfg["T1"], cfg["T2"]), t)
    k = int(np.argmax(noisy))
    return ({"t": t, "cfi_noiseless": cfi_closed(p, t), "cfi_noisy": noisy},
            {"max_cfi_noisy": float(noisy[k]), "t_at_max": float(t[k])})


def _lindblad_run(cfg):
    p = _params(cfg)
    grid = _grid(cfg, _lindblad_h(cfg))
    model = effective_model(p)
    rho0 = np.outer(qla.ket("00"), qla.ket("00").conj())
    rhos = lindblad_solve(effective_hamiltonian(model), LindbladParams(cfg["gamma1"], cfg["gamma2"]), rho0, grid)
    return p, grid, model, rhos


def _exp_lindblad(cfg):
    _, grid, _, rhos = _lindblad_run(cfg)
    diag = np.real(np.diagonal(rhos, axis1=1, axis2=2))
    trace = np.real(np.trace(rhos, axis1=1, axis2=2))
    cols = {"t": grid.times, "p_plus": diag[:, 0], "p_minus": diag[:, 3],
            "p_zero": diag[:, 1] + diag[:, 2], "trace": trace}
    return cols, {"max_trace_drift": float(np.max(np.abs(trace - 1)))}


def _exp_lindblad_fit(cfg):
    p, grid, model, rhos = _lindblad_run(cfg)
    t = grid.times
    plus, minus = np.real(rhos[:, 0, 0]), np.real(rhos[:, 3, 3])
    fit = fit_decay_times(TimeSeries(t, plus), TimeSeries(t, minus), model, p.g)
    cols = {"t": t, "p_plus": plus, "p_minus": minus,
            "p_plus_fit": decay_model(t, fit.T1, fit.T2, model.A, p.g, +1),
            "p_minus_fit": decay_model(t, fit.T1, fit.T2, model.A, p.g, -1)}
    trace = np.real(np.trace(rhos, axis1=1, axis2=2))
    return cols, {"T1": fit.T1, "T2": fit.T2, "fit_rms_residual": fit.residual,
                  "unbounded": fit.unbounded, "max_trace_drift": float(np.max(np.abs(trace - 1)))}


def _exp_ou_pulses(cfg):
    p = _params(cfg)
    ou = OUParams(cfg["mu"], cfg["sigma"], cfg["t_c"])
    grid = _grid(cfg, min(p.period / 40, ou.t_c / 10))
    spacing = cfg["pulse_spacing"] if cfg["pulse_spacing"] is not None else 2 * math.pi / p.omega
    seq = PulseSequence.periodic(spacing, grid.t1, z_pulses=cfg["z_pulses"])
    seed, n, workers = cfg["seed"], cfg["n_traj"], cfg["workers"]
    bare = simulate_pulsed_noisy(p, PulseSequence(), ou, grid, n, seed, workers)
    pulsed = simulate_pulsed_noisy(p, seq, ou, grid, n, seed, workers)
    ideal = m_curve_effective(p, grid).values

    def rms(r):
        return float(np.sqrt(np.mean((r.mean.values - ideal) ** 2)))

    cols = {"t": grid.times, "m_noiseless": ideal,
            "m_noisy": bare.mean.values, "m_noisy_sem": bare.std_error.values,
            "m_pulsed": pulsed.mean.values, "m_pulsed_sem": pulsed.std_error.values}
    return cols, {"rms_unpulsed": rms(bare), "rms_pulsed": rms(pulsed),
                  "rms_ratio": rms(pulsed) / rms(bare), "pulse_spacing": spacing,
                  "n_x_pulses": len(seq.x_times), "n_z_pulses": len(seq.z_times)}


def _exp_measure_delay(cfg):
    p = _params(cfg)
    model = effective_model(p)
    h_eff = effective_hamiltonian(model)
    tm = cfg["measure_time"]
    if tm > 0:
        lcfg = {**cfg, "t1": tm, "n_samples": max(2, int(round(tm / 0.1)) + 1)}
        _, _, _, rhos = _lindblad_run(lcfg)
        rho = rhos[-1]
    else:
        rho = np.outer(qla.ket("00"), qla.ket("00").conj())
    rows = {k: [] for k in ("delta_t", "joint_exact", "joint_closed", "err", "ratio")}
    for dt in cfg["delta_t"]:
        d = delay_error_order(rho, h_eff, dt)
        rows["delta_t"].append(dt)
        rows["joint_exact"].append(sequential_joint_prob_exact(rho, h_eff, dt))
        rows["joint_closed"].append(sequential_joint_prob_closed(MeasurementRecord.from_density(rho, dt), model.A, p.g))
        rows["err"].append(d.err)
        rows["ratio"].append(d.ratio)
    return {k: np.asarray(v) for k, v in rows.items()}, {"alpha": float(np.real(rho[0, 0])),
                                                          "beta2": float(np.real(rho[1, 1]))}


RUNNERS = {
    "dynamics": _exp_dynamics,
    "dynamics-phase": _exp_dynamics,
    "fisher": _exp_fisher,
    "fisher-noisy": _exp_fisher_noisy,
    "lindblad": _exp_lindblad,
    "lindblad-fit": _exp_lindblad_fit,
    "ou-pulses": _exp_ou_pulses,
    "measure-delay": _exp_measure_delay,
}


# -- output -----------------------------------------------------------------------

def format_csv(columns: dict) -> bytes:
    """Header row plus rows at 17 significant digits, LF line endings."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    names = list(columns)
    writer.writerow(names)
    for row in zip(*(np.asarray(columns[n], dtype=float) for n in names)):
        writer.writerow([format(float(v), ".17g") for v in row])
    return buf.getvalue().encode()


def _jsonable(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    return x


def run(config: dict, out_dir: str | Path = ".") -> dict:
    """Run one resolved experiment, write ``<experiment>.csv`` and its manifest; return the manifest."""
    experiment = config["experiment"]
    columns, results = RUNNERS[experiment](config)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    data = format_csv(columns)
    csv_path = out_dir / f"{experiment}.csv"
    csv_path.write_bytes(data)
    manifest = {
        "experiment": experiment,
        "version": version(),
        "seed": config.get("seed"),
        "config": config,
        "results": {k: _jsonable(v) for k, v in results.items()},
        "outputs": {csv_path.name: {"sha256": hashlib.sha256(data).hexdigest(),
                                    "columns": list(columns), "rows": len(next(iter(columns.values())))}},
    }
    (out_dir / f"{experiment}.manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="acsense", description="Two-qubit AC-field sensing experiments")
    ap.add_argument("experiment", choices=EXPERIMENTS)
    ap.add_argument("--config", help="JSON file with flat configuration keys")
    ap.add_argument("--seed", type=int, help="base seed for stochastic experiments")
    ap.add_argument("--out", default=".", help="output directory (default: current directory)")
    ap.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                    help="override a configuration key; may be repeated")
    return ap


def _fail(kind: str, message: str, code: int) -> int:
    print(f"acsense: {kind}: {' '.join(str(message).split())}", file=sys.stderr)
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        raw = {}
        if args.config:
            try:
                raw = json.loads(Path(args.config).read_text())
            except (OSError, json.JSONDecodeError) as exc:
                raise ConfigurationError(f"cannot read config {args.config}: {exc}") from exc
            if not isinstance(raw, dict):
                raise ConfigurationError("config file must hold a JSON object")
            if raw.get("experiment", args.experiment) != args.experiment:
                raise ConfigurationError(f"config is for {raw['experiment']!r}, not {args.experiment!r}")
        for item in args.overrides:
            key, sep, value = item.partition("=")
            if not sep:
                raise ConfigurationError(f"--set expects KEY=VALUE, got {item!r}")
            raw[key.strip()] = _parse_value(value)
        if args.seed is not None:
            raw["seed"] = args.seed
        cfg = resolve_config(args.experiment, raw)
    except (ConfigurationError, ValueError, TypeError) as exc:
        return _fail("config-error", exc, 2)
    try:
        run(cfg, args.out)
    except ConfigurationError as exc:
        return _fail("config-error", exc, 2)
    except SensorError as exc:
        return _fail("numerical-error", exc, 3)
    return 0


if __name__ == "__main__":
    sys.exit(main())
