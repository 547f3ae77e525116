"""Command-line entry point: ``wqed <subcommand> --config <file.json> --out <dir>``.

The config holds a ``params`` record, an optional ``seed`` and exactly one
command block named after the subcommand (``scan``, ``extrema``, ``packet``,
``switch``, ``bath`` or ``fit``).  Everything is validated before any
computation, and outputs are written atomically only after it succeeds.

Exit codes: 0 success, 2 config error, 3 numerical failure, 4 fit did not
converge (partial result written).
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import fitting, reservoir, spectrum, timedomain
from .core import SystemParams
from .errors import ConfigError, DidNotConverge, NumericalError

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_NOT_CONVERGED = 0, 2, 3, 4

BLOCKS = {
    "spectrum": "scan",
    "extrema": "extrema",
    "evolve": "packet",
    "switch": "switch",
    "reservoir-check": "bath",
    "fit": "fit",
}


@dataclass
class RunConfig:
    command: str
    params: SystemParams
    block: dict
    out_dir: Path
    seed: int
    base_dir: Path = field(default_factory=Path.cwd)


class _Block:
    """Typed access to a config block that rejects unknown keys."""

    def __init__(self, name: str, raw):
        if not isinstance(raw, dict):
            raise ConfigError(f"block {name!r} must be an object")
        self.name, self.raw, self.used = name, raw, set()

    def get(self, key, kind=float, default=..., allow_none=False):
        self.used.add(key)
        if key not in self.raw:
            if default is ...:
                raise ConfigError(f"{self.name}.{key} is required")
            return default
        val = self.raw[key]
        if val is None and allow_none:
            return None
        try:
            if kind is float:
                if isinstance(val, bool):
                    raise TypeError
                out = float(val)
                if not math.isfinite(out):
                    raise ValueError
                return out
            if kind is int:
                if isinstance(val, bool) or int(val) != val:
                    raise TypeError
                return int(val)
            if kind is bool:
                if not isinstance(val, bool):
                    raise TypeError
                return val
            if kind is str:
                if not isinstance(val, str):
                    raise TypeError
                return val
            return kind(val)
        except (TypeError, ValueError):
            raise ConfigError(f"{self.name}.{key}: invalid value {val!r}") from None

    def done(self):
        extra = set(self.raw) - self.used
        if extra:
            raise ConfigError(f"unknown keys in {self.name!r}: {sorted(extra)}")


def load_config(command: str, path, out_dir, seed_override=None) -> RunConfig:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    present = [b for b in BLOCKS.values() if b in raw]
    if len(present) != 1:
        raise ConfigError(f"config must contain exactly one command block, found {present}")
    want = BLOCKS[command]
    if present[0] != want:
        raise ConfigError(f"subcommand {command!r} needs a {want!r} block, found {present[0]!r}")
    extra = set(raw) - {"params", "seed", "out", want}
    if extra:
        raise ConfigError(f"unknown top-level keys {sorted(extra)}")
    if "params" not in raw:
        raise ConfigError("config is missing 'params'")
    params = SystemParams.from_record(raw["params"])
    seed = raw.get("seed", 0) if seed_override is None else seed_override
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2 ** 64:
        raise ConfigError(f"seed must be an unsigned 64-bit integer, got {seed!r}")
    out = out_dir if out_dir is not None else raw.get("out")
    if out is None:
        raise ConfigError("no output directory given (--out or config 'out')")
    return RunConfig(command, params, raw[want], Path(out), seed, Path(path).resolve().parent)


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def _write_all(out_dir: Path, files: dict) -> None:
    for name, text in files.items():
        _atomic_write(out_dir / name, text)


# each plan_* validates its block and returns a zero-argument job producing {filename: text}

def plan_spectrum(cfg: RunConfig):
    b = _Block("scan", cfg.block)
    lo, hi = b.get("omega_min"), b.get("omega_max")
    n = b.get("n_points", int)
    b.done()
    if not lo < hi or n < 2:
        raise ConfigError(f"empty scan range [{lo}, {hi}] with {n} points")
    return lambda: {"spectrum.csv": spectrum.scan(cfg.params, lo, hi, n).to_csv()}


def plan_extrema(cfg: RunConfig):
    b = _Block("extrema", cfg.block)
    bracket = b.get("bracket", list)
    tol = b.get("tol", float, 1e-9)
    with_fwhm = b.get("fwhm", bool, False)
    b.done()
    if len(bracket) != 2 or not float(bracket[0]) < float(bracket[1]):
        raise ConfigError(f"extrema.bracket must be [lo, hi] with lo < hi, got {bracket}")
    bracket = (float(bracket[0]), float(bracket[1]))

    def job():
        found = spectrum.find_extrema(cfg.params, bracket, tol)
        records = []
        for e in found:
            rec = e.to_record()
            if with_fwhm and e.kind == "minimum":
                rec["fwhm"] = spectrum.dip_fwhm(cfg.params, e, found)
            records.append(rec)
        return {"extrema.json": _json(records)}
    return job


def plan_evolve(cfg: RunConfig):
    b = _Block("packet", cfg.block)
    carrier = b.get("omega_carrier")
    pc = timedomain.PacketConfig(
        sigma_x=b.get("sigma_x", float, 100.0), dx=b.get("dx", float, 0.1),
        x0=b.get("x0", float, None, allow_none=True),
        t_final=b.get("t_final", float, None, allow_none=True),
        tail=b.get("tail", float, 9.0), backend=b.get("backend", str, None, allow_none=True))
    series = b.get("time_series", bool, True)
    every = b.get("record_every", int, 1)
    snapshot = b.get("snapshot", bool, False)
    b.done()
    if pc.sigma_x <= 0 or pc.dx <= 0 or every < 1:
        raise ConfigError("sigma_x, dx and record_every must be positive")
    if pc.backend not in (None, "python", "cython"):
        raise ConfigError(f"unknown backend {pc.backend!r}")
    grid, x0, t_final = timedomain.plan_packet_run(cfg.params, pc)
    state = timedomain.init_gaussian_packet(grid, x0, pc.sigma_x, carrier, cfg.params)

    def job():
        final, ts = timedomain.evolve(state, cfg.params, t_final, record=series, backend=pc.backend)
        files = {"transport.json": _json(timedomain.measure_transport(final).to_record())}
        if series:
            keep = slice(None, None, every)
            files["timeseries.csv"] = timedomain.TimeSeries(
                ts.time[keep], ts.N[keep], ts.Pc[keep], ts.Pa[keep],
                ts.Pc_mid[keep], ts.Pa_mid[keep], ts.dt).to_csv()
        if snapshot:
            files["snapshot.csv"] = final.snapshot_csv()
        return files
    return job


def plan_switch(cfg: RunConfig):
    b = _Block("switch", cfg.block)
    probe = b.get("omega_probe", float, None, allow_none=True)
    off = b.get("off", dict)
    b.done()
    rec = cfg.params.to_record()
    unknown = set(off) - set(rec)
    if unknown:
        raise ConfigError(f"switch.off has unknown fields {sorted(unknown)}")
    params_off = SystemParams.from_record({**rec, **off})

    def job():
        t_on, t_off = spectrum.switch_contrast(cfg.params, params_off, probe)
        contrast = t_on / t_off if t_off > 0 else None
        return {"switch.json": _json({"T_on": t_on, "T_off": t_off, "contrast": contrast})}
    return job


def plan_reservoir(cfg: RunConfig):
    p = cfg.params
    b = _Block("bath", cfg.block)
    gamma = b.get("gamma_target", float, p.gamma_a)
    n = b.get("n_oscillators", int, 4000)
    span = b.get("span_halfwidth", float, 2.0)
    t_final = b.get("t_final", float, 80.0)
    dt = b.get("dt", float, 0.05)
    n_scatter = b.get("n_scatter_oscillators", int, n)
    n_omega = b.get("n_omega", int, 21)
    eps_bins = b.get("eps_bins", float, 8.0)
    b.done()
    if p.gamma_c != 0:
        raise ConfigError("reservoir check needs a lossless cavity (gamma_c = 0)")
    if n_omega < 1:
        raise ConfigError("bath.n_omega must be positive")
    bath = reservoir.build_flat_bath(gamma, n, span, p.omega_a)
    scatter_bath = reservoir.build_flat_bath(gamma, n_scatter, span, p.omega_a)
    if t_final > 0.5 * bath.heisenberg_time:
        raise reservoir.RecurrenceHorizonExceeded(
            f"t_final={t_final} exceeds half the recurrence time {0.5 * bath.heisenberg_time:.4g}")
    if dt <= 0 or dt > 0.1 / span:
        raise ConfigError(f"bath.dt must lie in (0, {0.1 / span}]")
    omegas = np.linspace(p.omega_a - 2 * p.g, p.omega_a + 2 * p.g, n_omega)
    eff = p.replace(gamma_a=gamma)

    def job():
        series = reservoir.evolve_closed_composite(bath, p.omega_a, t_final, dt)
        g_est, fit_err = reservoir.effective_decay_rate(series.time, series.e_a)
        dev = reservoir.compare_scattering_with_bath(eff, scatter_bath, omegas, eps_bins)
        return {
            "reservoir.json": _json({"gamma_target": gamma, "gamma_est": g_est, "fit_error": fit_err,
                                     "max_scatter_deviation": dev}),
            "decay.csv": series.to_csv(),
        }
    return job


def plan_fit(cfg: RunConfig):
    p = cfg.params
    b = _Block("fit", cfg.block)
    data = b.get("data", str, None, allow_none=True)
    synth = b.get("synthesize", dict, None, allow_none=True)
    initial_over = b.get("initial", dict, {})
    free = b.get("free", list, ["omega_c", "omega_a", "g", "gamma_wg", "gamma_a"])
    model = b.get("model", str, "direct_coupled_T")
    scale = b.get("amplitude_scale", float, 1.0)
    tie = b.get("tie_atom_to_cavity", bool, False)
    compare = b.get("compare_in_tune", bool, False)
    max_iter = b.get("max_iter", int, 20000)
    b.done()
    if max_iter < 1:
        raise ConfigError("fit.max_iter must be positive")
    if (data is None) == (synth is None):
        raise ConfigError("fit needs exactly one of 'data' or 'synthesize'")
    if model not in fitting.MODELS:
        raise ConfigError(f"unknown model {model!r}")
    unknown = set(free) - set(fitting.FIT_FIELDS)
    if unknown:
        raise ConfigError(f"unknown free parameters {sorted(unknown)}")
    rec = p.to_record()
    if set(initial_over) - set(rec):
        raise ConfigError(f"fit.initial has unknown fields {sorted(set(initial_over) - set(rec))}")
    initial = SystemParams.from_record({**rec, **initial_over})
    if data is not None:
        path = Path(data)
        if not path.is_absolute():
            path = cfg.base_dir / path
        if not path.is_file():
            raise ConfigError(f"data file {path} does not exist")
        measured = fitting.load_spectrum_csv(path, p.unit)
    else:
        s = _Block("fit.synthesize", synth)
        noise = s.get("noise_sigma", float, 0.0)
        n_points = s.get("n_points", int, 200)
        half = s.get("half_width_in_g", float, 4.0)
        true_scale = s.get("amplitude_scale", float, 1.0)
        s.done()
        if noise < 0 or n_points < fitting.MIN_POINTS or half <= 0:
            raise ConfigError("invalid synthesize block")
        grid = fitting.fit_window(p, n_points, half)
        measured = fitting.synthesize_measurement(p, grid, noise, cfg.seed, true_scale, model)

    def job():
        status = EXIT_OK
        try:
            res = fitting.fit_parameters(measured, initial, free, model, scale,
                                         tie_atom_to_cavity=tie, max_iter=max_iter)
        except DidNotConverge as exc:
            res, status = exc.result, EXIT_NOT_CONVERGED
        record = res.to_record()
        if compare and not tie:
            try:
                tied = fitting.fit_parameters(measured, initial, free, model, scale,
                                              tie_atom_to_cavity=True, max_iter=max_iter)
            except DidNotConverge as exc:
                tied, status = exc.result, EXIT_NOT_CONVERGED
            if tied.residual_rms < res.residual_rms:
                # reseed the free fit from the tied optimum so it cannot end worse
                try:
                    res = fitting.fit_parameters(measured, tied.params, free, model,
                                                 tied.amplitude_scale, grid_search=False,
                                                 max_iter=max_iter)
                except DidNotConverge as exc:
                    res, status = exc.result, EXIT_NOT_CONVERGED
                record = res.to_record()
            record["in_tune_fit"] = tied.to_record()
        return {"fit.json": _json(record)}, status
    return job


PLANS = {
    "spectrum": plan_spectrum,
    "extrema": plan_extrema,
    "evolve": plan_evolve,
    "switch": plan_switch,
    "reservoir-check": plan_reservoir,
    "fit": plan_fit,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wqed", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in PLANS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, help="JSON run configuration")
        sp.add_argument("--out", help="output directory (overrides config 'out')")
        sp.add_argument("--seed", type=int, help="overrides the config seed")
    return parser


def run(command: str, config_path, out_dir=None, seed=None) -> int:
    try:
        cfg = load_config(command, config_path, out_dir, seed)
        job = PLANS[command](cfg)
    except ConfigError as exc:
        print(f"wqed {command}: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"wqed {command}: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    try:
        out = job()
    except ConfigError as exc:
        print(f"wqed {command}: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"wqed {command}: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    files, status = out if isinstance(out, tuple) else (out, EXIT_OK)
    _write_all(cfg.out_dir, files)
    if status == EXIT_NOT_CONVERGED:
        print(f"wqed {command}: fit did not converge; best result written", file=sys.stderr)
    return status


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return run(args.command, args.config, args.out, args.seed)


if __name__ == "__main__":
    sys.exit(main())
