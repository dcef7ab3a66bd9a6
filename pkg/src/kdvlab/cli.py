"""Command-line front end.

Exit codes: 0 success or all checks pass, 1 some check failed, 2 bad
configuration, 3 numerical failure (partial outputs are kept).
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import experiments, flows, invariants, io, profiles
from .errors import ConfigurationError, IntegrationFailure, KdvLabError, NumericalError, UsageError
from .spectral import CIRCLE, GEOMETRIES, LINE, Profile, h_minus1_norm

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3
OUT_ENV = "KDVLAB_OUT"
DEFAULT_OUT = "kdvlab-out"

GENERATOR_DEFAULTS = {
    "seed": None,
    "n": 256,
    "geometry": CIRCLE,
    "target_norm": profiles.DEFAULT_TARGET,
    "decay_exponent": profiles.DEFAULT_DECAY,
    "band": profiles.DEFAULT_BAND,
    "half_width": 20.0,
}

COMMAND_DEFAULTS = {
    "gen": {"name": "profile.json"},
    "alpha": {"kappa": None, "kappas": "1,2,4,8", "delta": 0.1},
    "identities": {"kappas": "2,4", "delta": 0.1},
    "flow": {
        "hamiltonian": "kdv",
        "T": 1.0,
        "dt": 1e-4,
        "kappa": None,
        "stepper": None,
        "snapshot_interval": None,
        "diag_kappas": "1,2",
        "name": "flow",
    },
    "converge": {"kappas": "4,8,16,32", "T": 0.25, "dt": 1e-4, "snapshots": 64},
    "symbols": {"kappas": "4,8,16,32"},
    "smoothing": {"center": 0.0, "width": 1.0, "T": 1.0, "dt": 1e-3, "snapshots": 64},
    "scaling": {"lam": 2.0, "kappa": 4.0, "T": None, "dt": 1e-4},
}

HELP = {
    "gen": "write a seeded random profile as JSON",
    "alpha": "alpha by every route for one kappa or a kappa grid",
    "identities": "static identity suite for g, rho and alpha",
    "flow": "evolve a profile and write trajectory and diagnostics files",
    "converge": "kappa -> infinity convergence of the H_kappa flows to KdV",
    "symbols": "kappa -> infinity limits of the g symbols with log-log slopes",
    "smoothing": "local smoothing budget along KdV on a line box",
    "scaling": "scaling identities on a line box",
}


def _float_list(text):
    items = text if isinstance(text, (list, tuple)) else str(text).split(",")
    try:
        values = [float(v) for v in items if str(v).strip()]
    except ValueError as exc:
        raise ConfigurationError(f"expected a comma-separated list of numbers, got {text!r}") from exc
    if not values:
        raise ConfigurationError("empty list")
    return values


def _add_generator_options(p, with_seed_required=False):
    g = p.add_argument_group("profile generator (used when --profile is absent)")
    g.add_argument("--seed", type=int, required=False, help="64-bit seed" + (" (required)" if with_seed_required else ""))
    g.add_argument("--n", type=int, help=f"grid size (default {GENERATOR_DEFAULTS['n']})")
    g.add_argument("--geometry", choices=GEOMETRIES, help="circle or line (default circle)")
    g.add_argument("--target-norm", dest="target_norm", type=float, help="H^-1 norm of the profile (default 0.05)")
    g.add_argument("--decay-exponent", dest="decay_exponent", type=float, help="spectral decay exponent (default 4)")
    g.add_argument("--band", type=int, help="highest mode index (default 16)")
    g.add_argument("--half-width", dest="half_width", type=float, help="line box half-width L (default 20)")


def build_parser():
    parser = argparse.ArgumentParser(prog="kdvlab", description="Numerics for the KdV hierarchy via the diagonal Green's function.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./{DEFAULT_OUT})")
    common.add_argument("--config", help="JSON file of option values; explicit flags take precedence")
    common.add_argument("--jobs", type=int, help="worker processes (default: available cores)")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name):
        return sub.add_parser(name, parents=[common], help=HELP[name], description=HELP[name])

    p = add("gen")
    _add_generator_options(p, with_seed_required=True)
    p.add_argument("--name", help="output file name (default profile.json)")

    for name in ("alpha", "identities", "converge", "symbols", "smoothing", "scaling", "flow"):
        p = add(name)
        p.add_argument("--profile", help="profile JSON file")
        _add_generator_options(p)
        if name in ("alpha", "identities", "converge", "symbols"):
            p.add_argument("--kappas", help=f"comma-separated kappa grid (default {COMMAND_DEFAULTS[name]['kappas']})")
        if name in ("alpha", "identities"):
            p.add_argument("--delta", type=float, help="admissibility threshold (default 0.1)")
        if name == "alpha":
            p.add_argument("--kappa", type=float, help="single kappa (overrides --kappas)")
        if name in ("converge", "smoothing", "scaling", "flow"):
            defaults = COMMAND_DEFAULTS[name]
            horizon = "0.25 / lambda^3" if defaults["T"] is None else f"{defaults['T']:g}"
            p.add_argument("--T", dest="T", type=float, help=f"time horizon (default {horizon})")
            p.add_argument("--dt", type=float, help=f"time step (default {defaults['dt']:g})")
        if name in ("converge", "smoothing"):
            p.add_argument("--snapshots", type=int, help="snapshots over [0, T] (default 64)")
        if name == "smoothing":
            p.add_argument("--center", type=float, help="cutoff center (default 0)")
            p.add_argument("--width", type=float, help="cutoff width (default 1)")
        if name == "scaling":
            p.add_argument("--lambda", dest="lam", type=float, help="scaling factor (default 2)")
            p.add_argument("--kappa", type=float, help="kappa for the alpha identity (default 4)")
        if name == "flow":
            p.add_argument("--hamiltonian", choices=flows.HAMILTONIANS, help="flow to run (default kdv)")
            p.add_argument("--kappa", type=float, help="kappa for hk, diff, fifth_hk, fifth_diff")
            p.add_argument("--stepper", choices=flows.STEPPERS, help="time stepper (default by flow)")
            p.add_argument("--snapshot-interval", dest="snapshot_interval", type=float, help="time between snapshots (default T / 64)")
            p.add_argument("--diag-kappas", dest="diag_kappas", help="kappa grid for alpha diagnostics (default 1,2)")
            p.add_argument("--name", help="output file stem (default flow)")
    return parser


def _resolve_options(args, parser):
    """Merge command defaults, then --config, then explicit flags."""
    explicit = {k: v for k, v in vars(args).items() if v is not None}
    command = explicit.pop("command")
    known = set(GENERATOR_DEFAULTS) | set(COMMAND_DEFAULTS[command]) | {"profile", "out", "jobs"}
    known &= set(vars(args))
    merged = dict(GENERATOR_DEFAULTS)
    merged.update(COMMAND_DEFAULTS[command])
    config_path = explicit.pop("config", None)
    if config_path:
        data = io.read_json(config_path)
        if not isinstance(data, dict):
            raise ConfigurationError("config must be a JSON object")
        data = {k.replace("-", "_"): v for k, v in data.items()}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigurationError(f"unknown config keys for {command}: {unknown}")
        merged.update(data)
    merged.update(explicit)
    merged["command"] = command
    merged.setdefault("out", None)
    merged["out"] = Path(merged["out"] or os.environ.get(OUT_ENV) or DEFAULT_OUT)
    merged["jobs"] = merged.get("jobs") or os.cpu_count() or 1
    return merged


def _generate(opts):
    return profiles.random_profile(
        opts["seed"],
        n=int(opts["n"]),
        geometry=opts["geometry"],
        target_norm=float(opts["target_norm"]),
        decay_exponent=float(opts["decay_exponent"]),
        band=int(opts["band"]),
        half_width=float(opts["half_width"]),
    )


def _default_profile(command):
    if command == "converge":
        return profiles.two_mode(128)
    if command == "symbols":
        return Profile.from_function(lambda x: 0.05 * np.cos(2 * np.pi * x), 64)
    if command == "smoothing":
        return profiles.gaussian(0.05, 2.0, n=1024, half_width=80.0)
    if command == "scaling":
        return profiles.soliton(4.0, n=512, half_width=20.0)
    return profiles.random_profile(0)


def _load_profile(opts):
    if opts.get("profile"):
        return io.load_profile(opts["profile"])
    if opts.get("seed") is not None:
        return _generate(opts)
    return _default_profile(opts["command"])


def _finish(report, out):
    report.write(out)
    print(report.summary())
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_gen(opts):
    if opts.get("seed") is None:
        raise ConfigurationError("gen needs --seed")
    q = _generate(opts)
    path = io.save_profile(Path(opts["out"]) / opts["name"], q)
    print(f"wrote {path} (H^-1 norm {h_minus1_norm(q):.17g})")
    return EXIT_OK


def cmd_alpha(opts):
    q = _load_profile(opts)
    kappas = [float(opts["kappa"])] if opts.get("kappa") is not None else _float_list(opts["kappas"])
    rows, records = [], []
    for k in kappas:
        b = invariants.breakdown(q, k, delta=float(opts["delta"]))
        comp = invariants.quadratic_comparison(q, k)
        nan = float("nan")
        rows.append([
            k,
            b.alpha_density,
            nan if b.alpha_floquet is None else b.alpha_floquet,
            nan if b.alpha_det2 is None else b.alpha_det2,
            k * b.alpha_density,
            comp,
        ])
        record = b.to_json_dict()
        record.pop("rho")
        records.append(record)
        print(f"kappa={k:g} alpha={b.alpha_density:.17g} cross_discrepancy={b.cross_discrepancy:.3g}")
    out = Path(opts["out"])
    io.write_json(out / "alpha.report.json", {"profile": experiments._profile_inputs(q), "breakdowns": records})
    io.write_csv(out / "alpha.csv", ["kappa", "alpha_density", "alpha_floquet", "alpha_det2", "kappa_alpha", "comparison"], rows)
    return EXIT_OK


def cmd_identities(opts):
    q = _load_profile(opts)
    report = experiments.identity_suite(q, _float_list(opts["kappas"]), delta=float(opts["delta"]), jobs=opts["jobs"])
    return _finish(report, opts["out"])


def cmd_flow(opts):
    q = _load_profile(opts)
    spec = flows.FlowSpec(
        opts["hamiltonian"],
        T=float(opts["T"]),
        dt=float(opts["dt"]),
        kappa=None if opts.get("kappa") is None else float(opts["kappa"]),
        stepper=opts.get("stepper"),
        snapshot_interval=opts.get("snapshot_interval"),
        diag_kappas=tuple(_float_list(opts["diag_kappas"])),
    )
    out, name = Path(opts["out"]), opts["name"]
    try:
        traj = flows.evolve(q, spec)
    except IntegrationFailure as exc:
        if exc.trajectory is not None and exc.trajectory.snapshots:
            io.write_trajectory(out, name, exc.trajectory)
        raise
    for path in io.write_trajectory(out, name, traj):
        print(f"wrote {path}")
    return EXIT_OK


def cmd_converge(opts):
    q = _load_profile(opts)
    report = experiments.kappa_convergence(
        q, float(opts["T"]), _float_list(opts["kappas"]), dt=float(opts["dt"]), snapshots=int(opts["snapshots"]), jobs=opts["jobs"]
    )
    code = _finish(report, opts["out"])
    return EXIT_NUMERIC if report.flags else code


def cmd_symbols(opts):
    q = _load_profile(opts)
    return _finish(experiments.symbol_convergence(q, _float_list(opts["kappas"])), opts["out"])


def cmd_smoothing(opts):
    q = _load_profile(opts)
    if q.geometry != LINE:
        raise ConfigurationError("smoothing needs a line profile")
    cutoff = experiments.Cutoff(float(opts["center"]), float(opts["width"]))
    report = experiments.local_smoothing_budget(
        q, cutoff, T=float(opts["T"]), dt=float(opts["dt"]), snapshots=int(opts["snapshots"])
    )
    code = _finish(report, opts["out"])
    return EXIT_NUMERIC if any(f.startswith("integration failed") for f in report.flags) else code


def cmd_scaling(opts):
    q = _load_profile(opts)
    T = None if opts.get("T") is None else float(opts["T"])
    report = experiments.scaling_check(q, float(opts["lam"]), T=T, dt=float(opts["dt"]), kappa=float(opts["kappa"]))
    return _finish(report, opts["out"])


COMMANDS = {
    "gen": cmd_gen,
    "alpha": cmd_alpha,
    "identities": cmd_identities,
    "flow": cmd_flow,
    "converge": cmd_converge,
    "symbols": cmd_symbols,
    "smoothing": cmd_smoothing,
    "scaling": cmd_scaling,
}


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        opts = _resolve_options(args, parser)
        return COMMANDS[opts["command"]](opts)
    except (ConfigurationError, UsageError) as exc:
        print(f"kdvlab: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, IntegrationFailure) as exc:
        print(f"kdvlab: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except KdvLabError as exc:
        print(f"kdvlab: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
