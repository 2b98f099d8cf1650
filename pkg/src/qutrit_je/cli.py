"""Command-line front end: ``qutrit-je <command> [--config file.json] [flags]``.

Every run is configured by one JSON document whose fields are all optional;
flags override file values, and a named preset supplies defaults underneath
both. Outputs are CSV/JSON files in ``output_dir`` whose first line echoes the
seed and the resolved configuration.

Exit status: 0 on success, 2 on configuration errors, 3 when a numerical
guard (step density, RWA carrier separation) is violated.
"""
import argparse
import csv
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import analysis, evolution, protocol, pulses, readout, thermo
from .core import LEVELS, NumericalGuardError

SEED_ENV = "QUTRIT_JE_SEED"
DEFAULT_SEED = 20240607

SWEEP_TAUS_US = [5.0, 50.0, 125.0, 200.0, 2500.0]

PRESETS = {
    "default": {},
    "paper-fig4": {"beta_abs_lambda": [0.0, 0.5, 0.7], "tau_us": SWEEP_TAUS_US},
    "paper-s7": {"beta_abs_lambda": [0.7], "tau_us": SWEEP_TAUS_US, "readout_fidelity": 0.90},
    "calibrated-traces": {"trace_model": "calibrated"},
    "ideal-traces": {"trace_model": "ideal"},
    "rwa-scaled": {"tau_us": [200.0], "carrier_ratios": [100.0, 50.0, 25.0]},
}

# literal probability sets quoted for the two readout fidelities
FIDELITY_PRESETS = {0.90: "F90", 0.98: "F98"}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    preset: str = "default"
    beta_abs_lambda: list = field(default_factory=lambda: [0.5])
    tau_us: list = field(default_factory=lambda: [200.0])
    n_steps: int = evolution.DEFAULT_STEPS
    seed: int = DEFAULT_SEED
    readout_fidelity: float = None
    renormalize_excluded: bool = True
    output_dir: str = "out"
    workers: int = 1
    initial_label: int = 1
    trace_model: str = "calibrated"
    n_traces: int = 4
    n_bundles: int = 100_000
    bundle_sizes: list = field(default_factory=lambda: list(range(1, 16)))
    histogram_b: int = 9
    K: int = 10_000
    negative: str = "clip"
    carrier_ratios: list = field(default_factory=lambda: [100.0, 50.0, 25.0])
    rwa_steps: int = None
    include_b_off: bool = True

    def validate(self):
        if self.preset not in PRESETS:
            raise ConfigError(f"unknown preset {self.preset!r}; known: {sorted(PRESETS)}")
        if not self.tau_us or any(not t > 0 for t in self.tau_us):
            raise ConfigError("tau_us values must be positive")
        if any(b < 0 for b in self.beta_abs_lambda):
            raise ConfigError("beta_abs_lambda values must be non-negative")
        if self.n_steps < 2:
            raise ConfigError("n_steps must be >= 2")
        if self.readout_fidelity is not None and not 0.5 < self.readout_fidelity <= 1.0:
            raise ConfigError("readout_fidelity must lie in (0.5, 1]")
        if self.initial_label not in LEVELS:
            raise ConfigError("initial_label must be +1, 0 or -1")
        if self.trace_model not in ("calibrated", "ideal"):
            raise ConfigError("trace_model must be 'calibrated' or 'ideal'")
        if self.workers < 1 or self.n_traces < 1 or self.n_bundles < 1 or self.K < 1:
            raise ConfigError("workers, n_traces, n_bundles and K must be positive")
        if not self.bundle_sizes or any(b < 1 for b in self.bundle_sizes):
            raise ConfigError("bundle_sizes must be positive integers")
        if self.negative not in ("clip", "resample"):
            raise ConfigError("negative must be 'clip' or 'resample'")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        return self


_LIST_FIELDS = {"beta_abs_lambda": float, "tau_us": float, "bundle_sizes": int, "carrier_ratios": float}
_SCALAR_FIELDS = {
    "n_steps": int,
    "seed": int,
    "readout_fidelity": float,
    "output_dir": str,
    "workers": int,
    "initial_label": int,
    "trace_model": str,
    "n_traces": int,
    "n_bundles": int,
    "histogram_b": int,
    "K": int,
    "negative": str,
    "rwa_steps": int,
    "preset": str,
}
_BOOL_FIELDS = ("renormalize_excluded", "include_b_off")


def _coerce(name, value):
    try:
        if name in _LIST_FIELDS:
            if not isinstance(value, list):
                value = [value]
            return [_LIST_FIELDS[name](v) for v in value]
        if name in _BOOL_FIELDS:
            if not isinstance(value, bool):
                raise TypeError("expected true/false")
            return value
        if value is None:
            return None
        return _SCALAR_FIELDS[name](value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"config field {name!r}: {exc}") from None


def load_config(path=None, overrides=None, env=None):
    """Resolve preset defaults, then the JSON file, then flag overrides."""
    env = os.environ if env is None else env
    data = {}
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: top level must be a JSON object")
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
    known = {f.name for f in fields(RunConfig)}
    for source in (data, overrides):
        unknown = set(source) - known
        if unknown:
            raise ConfigError(f"unknown config field(s): {sorted(unknown)}")
    preset = overrides.get("preset", data.get("preset", "default"))
    if preset not in PRESETS:
        raise ConfigError(f"unknown preset {preset!r}; known: {sorted(PRESETS)}")
    merged = dict(PRESETS[preset])
    if env.get(SEED_ENV):
        try:
            merged["seed"] = int(env[SEED_ENV])
        except ValueError:
            raise ConfigError(f"{SEED_ENV} must be an integer, got {env[SEED_ENV]!r}") from None
    merged.update(data)
    merged.update(overrides)
    merged["preset"] = preset
    cfg = RunConfig(**{k: _coerce(k, v) for k, v in merged.items()})
    return cfg.validate()


# ----------------------------------------------------------------------------
# output helpers


def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.12g}"
    return str(x)


def _header(cfg, command):
    return f"# qutrit-je {command} seed={cfg.seed} config={json.dumps(asdict(cfg), sort_keys=True)}"


def write_csv(path, cfg, command, columns, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        fh.write(_header(cfg, command) + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    return path


def write_json(path, cfg, command, payload):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    doc = {"command": command, "seed": cfg.seed, "config": asdict(cfg), **payload}
    path.write_text(json.dumps(doc, indent=2, sort_keys=True, default=_json_default) + "\n")
    return path


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _join(labels):
    return ";".join(f"{x:+d}" if x else "0" for x in labels)


def _pool_map(fn, items, workers):
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def _schedule(tau_us, **kw):
    return protocol.Schedule.from_microseconds(tau_us, **kw)


def _beta(beta_abs_lambda):
    return beta_abs_lambda / abs(protocol.DEFAULT_LAMBDA)


def readout_channel(fidelity):
    """Measurement channel for a quoted readout fidelity (``None`` means ideal)."""
    if fidelity is None:
        return None
    name = FIDELITY_PRESETS.get(round(float(fidelity), 6))
    jm = readout.PRESETS[name] if name else readout.jump_model_from_fidelity(fidelity)
    return readout.measurement_channel(jm)


# ----------------------------------------------------------------------------
# commands


def cmd_je_run(cfg):
    channel = readout_channel(cfg.readout_fidelity)
    points = sorted((b, t) for b in cfg.beta_abs_lambda for t in cfg.tau_us)

    def run(point):
        b, t = point
        sched = _schedule(t)
        beta = _beta(b)
        p0, cond, h0, htau = thermo.ideal_tpm(sched, beta, cfg.n_steps)
        dist = thermo.work_distribution(p0, cond, h0, htau, protocol.spin_labels(sched))
        rhs = thermo.free_energy_ratio(h0, htau, beta)
        if channel is None:
            lhs = thermo.jarzynski_lhs(dist, beta)
        else:
            lhs = rhs + readout.deviation(sched, beta, channel, cfg.n_steps, cfg.renormalize_excluded)
        fa = protocol.adiabaticity_factor(sched)
        return (b, t, lhs, rhs, lhs - rhs, fa), dist

    results = _pool_map(run, points, cfg.workers)
    out = Path(cfg.output_dir)
    rows = [r for r, _ in results]
    write_csv(out / "je_run.csv", cfg, "je-run", ["beta_abs_lambda", "tau_us", "lhs", "rhs", "diff", "adiabaticity"], rows)
    for (b, t), (_, dist) in zip(points, results):
        write_csv(
            out / "work" / f"work_b{b:g}_tau{t:g}us.csv",
            cfg,
            "je-run",
            ["w_rad_per_s", "probability", "n_label", "m_label"],
            # merged atoms list every contributing label pair, ';'-separated
            [(a.w, a.probability, _join(n for n, _ in a.labels), _join(m for _, m in a.labels)) for a in dist.atoms],
        )
    return rows


def cmd_adiabaticity(cfg):
    taus = sorted(cfg.tau_us)
    rows = [(t, protocol.adiabaticity_factor(_schedule(t))) for t in taus]
    write_csv(Path(cfg.output_dir) / "adiabaticity.csv", cfg, "adiabaticity", ["tau_us", "adiabaticity"], rows)
    return rows


def cmd_overlap(cfg):
    paths = []
    for t in sorted(cfg.tau_us):
        tr = evolution.overlap_trace(_schedule(t), cfg.initial_label, cfg.n_steps)
        rows = np.column_stack([tr.times, tr.overlaps])
        paths.append(
            write_csv(
                Path(cfg.output_dir) / f"overlap_tau{t:g}us_init{cfg.initial_label:+d}.csv",
                cfg,
                "overlap",
                ["time_s", "p_plus1", "p_0", "p_minus1"],
                rows.tolist(),
            )
        )
    return paths


def trace_model(name):
    if name == "calibrated":
        return readout.calibrated_trace_model()
    base = readout.calibrated_trace_model()
    return readout.TraceModel(base.rate_bright, base.rate_dark, base.unit_duration, base.repeats_per_bundle)


def _simulate(cfg):
    model = trace_model(cfg.trace_model)
    seeds = readout.trace_seeds(cfg.seed, cfg.n_traces)
    # alternate the starting level so the ideal model still shows both platforms
    starts = [(+1, 0)[k % 2] for k in range(cfg.n_traces)]
    jobs = list(zip(seeds, starts))
    return _pool_map(lambda j: readout.simulate_trace(model, cfg.n_bundles, +1, j[1], j[0]), jobs, cfg.workers)


def _write_histogram(cfg, traces, b, command):
    pts = np.concatenate([readout.aggregate(tr.counts, b) for tr in traces])
    x, freq = readout.histogram(pts)
    return write_csv(
        Path(cfg.output_dir) / f"histogram_b{b}.csv", cfg, command, ["photon_count", "frequency"], zip(x, freq)
    )


def cmd_traces(cfg):
    traces = _simulate(cfg)
    out = Path(cfg.output_dir)
    rows = [(k, i, c, s) for k, tr in enumerate(traces) for i, (c, s) in enumerate(zip(tr.counts, tr.states))]
    write_csv(out / "traces.csv", cfg, "traces", ["trace", "bundle", "counts", "state"], rows)
    _write_histogram(cfg, traces, cfg.histogram_b, "traces")
    return traces


def cmd_readout_calibrate(cfg):
    traces = _simulate(cfg)
    results = readout.calibrate(traces, sorted(set(cfg.bundle_sizes)))
    best = max(results, key=lambda b: results[b].fidelity)
    per_b = {str(b): {"threshold": r.threshold, "fidelity": r.fidelity, "fidelity_below": r.fidelity_below,
                      "fidelity_above": r.fidelity_above} for b, r in results.items()}
    payload = {"per_b": per_b, "best": {"b": best, "threshold": results[best].threshold, "fidelity": results[best].fidelity}}
    write_json(Path(cfg.output_dir) / "calibration.json", cfg, "readout-calibrate", payload)
    _write_histogram(cfg, traces, best, "readout-calibrate")
    return payload


def cmd_channel(cfg):
    fid = 0.90 if cfg.readout_fidelity is None else cfg.readout_fidelity
    ch = readout_channel(fid)
    rows = [
        (LEVELS[i], LEVELS[j], LEVELS[k], ch.table[i, j, k]) for i in range(3) for j in range(3) for k in range(3)
    ]
    write_csv(Path(cfg.output_dir) / "channel.csv", cfg, "channel", ["pre", "outcome", "post", "probability"], rows)
    write_csv(
        Path(cfg.output_dir) / "channel_excluded.csv",
        cfg,
        "channel",
        ["pre", "excluded_mass"],
        [(LEVELS[i], ch.excluded_mass[i]) for i in range(3)],
    )
    return ch


def _load_measured(path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read input {path}: {exc}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")

    def table(name):
        try:
            arr = np.asarray(doc[name], dtype=float)
        except (TypeError, ValueError):
            raise ConfigError(f"{path}: field {name!r} must be a 3x3 array of numbers") from None
        if arr.shape != (3, 3):
            raise ConfigError(f"{path}: field {name!r} must be 3x3, got shape {arr.shape}")
        if np.any(arr < 0) or not np.all(np.isfinite(arr)):
            raise ConfigError(f"{path}: field {name!r} must be finite and non-negative")
        return arr

    if "counts" in doc:
        counts = analysis.JointCounts(table("counts"))
        if counts.total == 0:
            raise ConfigError(f"{path}: field 'counts' sums to zero")
        return counts.probabilities, analysis.binomial_sigma(counts)
    if "probabilities" not in doc:
        raise ConfigError(f"{path}: need field 'probabilities' (with 'sigmas') or 'counts'")
    probs = table("probabilities")
    if "sigmas" not in doc:
        raise ConfigError(f"{path}: field 'sigmas' is required alongside 'probabilities'")
    return probs, table("sigmas")


def cmd_mc(cfg, input_path):
    probs, sigmas = _load_measured(input_path)
    if cfg.K < 100:
        raise ConfigError("K must be >= 100 for the Monte Carlo pipeline")
    sched = _schedule(cfg.tau_us[0])
    h0 = protocol.h_of_t(0.0, sched)
    htau = protocol.h_of_t(sched.tau, sched)
    summary = analysis.mc_pipeline(probs, sigmas, h0, htau, cfg.K, cfg.seed, cfg.negative, cfg.workers)
    doc = summary.to_dict()
    write_json(Path(cfg.output_dir) / "mc_summary.json", cfg, "mc", {"summary": doc})
    return summary


def cmd_rwa_check(cfg):
    points = sorted(((r, t, "triangle") for r in cfg.carrier_ratios for t in cfg.tau_us), key=lambda p: (-p[0], p[1]))
    if cfg.include_b_off:
        points += [(max(cfg.carrier_ratios), t, "off") for t in sorted(cfg.tau_us)]
    # validate every guard before spending time integrating
    params = [pulses.params_for_ratio(_schedule(t, b_ramp=b), r) for r, t, b in points]
    fids = _pool_map(lambda p: pulses.rwa_fidelity(p, cfg.rwa_steps).fidelity, params, cfg.workers)
    rows = [(r, t, f, b) for (r, t, b), f in zip(points, fids)]
    write_csv(Path(cfg.output_dir) / "rwa_check.csv", cfg, "rwa-check", ["carrier_over_lambda", "tau_us", "fidelity", "b_ramp"], rows)
    return rows


# ----------------------------------------------------------------------------
# argument parsing

COMMANDS = ("je-run", "adiabaticity", "overlap", "traces", "readout-calibrate", "channel", "mc", "rwa-check")


def build_parser():
    parser = argparse.ArgumentParser(prog="qutrit-je", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON configuration file")
        p.add_argument("--preset", choices=sorted(PRESETS))
        p.add_argument("--beta-abs-lambda", type=float, nargs="+", dest="beta_abs_lambda")
        p.add_argument("--tau-us", type=float, nargs="+", dest="tau_us")
        p.add_argument("--n-steps", type=int, dest="n_steps")
        p.add_argument("--seed", type=int)
        p.add_argument("--readout-fidelity", type=float, dest="readout_fidelity")
        p.add_argument("--no-renormalize", action="store_false", dest="renormalize_excluded", default=None)
        p.add_argument("--output-dir", dest="output_dir")
        p.add_argument("--workers", type=int)
        if name == "overlap":
            p.add_argument("--initial-label", type=int, choices=LEVELS, dest="initial_label")
        if name in ("traces", "readout-calibrate"):
            p.add_argument("--trace-model", choices=("calibrated", "ideal"), dest="trace_model")
            p.add_argument("--n-traces", type=int, dest="n_traces")
            p.add_argument("--n-bundles", type=int, dest="n_bundles")
            p.add_argument("--bundle-sizes", type=int, nargs="+", dest="bundle_sizes")
            p.add_argument("--histogram-b", type=int, dest="histogram_b")
        if name == "mc":
            p.add_argument("input", help="joint-probability JSON (probabilities+sigmas or counts)")
            p.add_argument("-K", type=int, dest="K")
            p.add_argument("--negative", choices=("clip", "resample"))
        if name == "rwa-check":
            p.add_argument("--carrier-ratios", type=float, nargs="+", dest="carrier_ratios")
            p.add_argument("--rwa-steps", type=int, dest="rwa_steps")
    return parser


_NON_CONFIG = {"command", "config", "input"}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    overrides = {k: v for k, v in vars(args).items() if k not in _NON_CONFIG}
    try:
        cfg = load_config(args.config, overrides)
        if args.command == "mc":
            summary = cmd_mc(cfg, args.input)
            print(json.dumps(summary.to_dict(), sort_keys=True))
        else:
            handler = {
                "je-run": cmd_je_run,
                "adiabaticity": cmd_adiabaticity,
                "overlap": cmd_overlap,
                "traces": cmd_traces,
                "readout-calibrate": cmd_readout_calibrate,
                "channel": cmd_channel,
                "rwa-check": cmd_rwa_check,
            }[args.command]
            result = handler(cfg)
            if args.command == "readout-calibrate":
                print(json.dumps(result["best"], sort_keys=True, default=_json_default))
            elif isinstance(result, list) and result and isinstance(result[0], tuple):
                for row in result:
                    print(",".join(_fmt(v) for v in row))
    except NumericalGuardError as exc:
        print(f"qutrit-je: numerical guard: {exc}", file=sys.stderr)
        return 3
    except (ConfigError, ValueError) as exc:
        print(f"qutrit-je: error: {exc}", file=sys.stderr)
        print(parser.format_usage().rstrip(), file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
