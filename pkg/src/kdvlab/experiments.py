"""Scripted numerical experiments producing pass/fail reports."""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import flows, invariants, io, schrodinger
from .errors import ConfigurationError, IntegrationFailure, NumericalError
from .spectral import (
    CIRCLE,
    LINE,
    Profile,
    SobolevIndex,
    apply_symbol,
    h_minus1_norm,
    padded,
    product,
    sobolev_norm,
    spectral_diff,
)

ZERO_FLOOR = 1e-14
RELATIONS = ("<", "<=", ">", "within")


@dataclass(frozen=True)
class Check:
    """One numeric entry with its tolerance; ``passed`` is derived."""

    case: str
    quantity: str
    value: float
    tolerance: object
    relation: str = "<"

    def __post_init__(self):
        if self.relation not in RELATIONS:
            raise ConfigurationError(f"unknown relation {self.relation!r}")

    @property
    def passed(self) -> bool:
        v = self.value
        if isinstance(v, float) and math.isnan(v):
            return False
        if self.relation == "<":
            return v < self.tolerance
        if self.relation == "<=":
            return v <= self.tolerance
        if self.relation == ">":
            return v > self.tolerance
        lo, hi = self.tolerance
        return lo <= v <= hi

    def to_json_dict(self):
        tol = list(self.tolerance) if isinstance(self.tolerance, (tuple, list)) else self.tolerance
        return {
            "case": self.case,
            "quantity": self.quantity,
            "value": float(self.value),
            "tolerance": tol,
            "relation": self.relation,
            "passed": self.passed,
        }


@dataclass(eq=False)
class ExperimentReport:
    name: str
    inputs: dict
    checks: list = field(default_factory=list)
    series: dict = field(default_factory=dict)
    flags: list = field(default_factory=list)
    runtime: float = 0.0

    def add(self, case, quantity, value, tolerance, relation="<"):
        self.checks.append(Check(case, quantity, float(value), tolerance, relation))

    @property
    def passed(self) -> bool:
        return not self.flags and all(c.passed for c in self.checks)

    def failures(self):
        return [c for c in self.checks if not c.passed]

    def to_json_dict(self):
        return {
            "name": self.name,
            "inputs": self.inputs,
            "passed": self.passed,
            "flags": list(self.flags),
            "checks": [c.to_json_dict() for c in self.checks],
            "series": self.series,
            "runtime": self.runtime,
        }

    def csv_rows(self):
        header = ["case", "quantity", "value", "tolerance", "relation", "passed"]
        rows = []
        for c in self.checks:
            tol = c.tolerance
            tol_text = ";".join(io.format_float(t) for t in tol) if isinstance(tol, (tuple, list)) else io.format_float(tol)
            rows.append([c.case, c.quantity, c.value, tol_text, c.relation, "true" if c.passed else "false"])
        return header, rows

    def write(self, directory):
        directory = Path(directory)
        header, rows = self.csv_rows()
        return [
            io.write_json(directory / f"{self.name}.report.json", self.to_json_dict()),
            io.write_csv(directory / f"{self.name}.csv", header, rows),
        ]

    def summary(self):
        status = "PASS" if self.passed else "FAIL"
        lines = [f"{self.name}: {status} ({len(self.checks) - len(self.failures())}/{len(self.checks)} checks)"]
        lines += [f"  flagged: {f}" for f in self.flags]
        for c in self.failures():
            lines.append(f"  failed {c.case} {c.quantity}: {c.value:.6g} {c.relation} {c.tolerance}")
        return "\n".join(lines)


def _parallel_map(func, items, jobs=1):
    items = list(items)
    jobs = min(jobs or os.cpu_count() or 1, len(items))
    if jobs <= 1:
        return [func(item) for item in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(func, items))


def _profile_inputs(q: Profile):
    return {"geometry": q.geometry, "n": q.n, "length": q.length, "h_minus1_norm": h_minus1_norm(q)}


def _relative(err, scale, floor=ZERO_FLOOR):
    return err / scale if scale > floor else err


# ---------------------------------------------------------------------------
# identity suite


def default_direction(q: Profile) -> Profile:
    """A smooth test direction for gradient checks on the grid of q."""
    if q.geometry == CIRCLE:
        return q.with_samples(np.cos(2 * np.pi * q.x) + np.cos(4 * np.pi * q.x))
    width = q.half_width / 8
    return q.with_samples(np.exp(-((q.x / width) ** 2)) * (1 + q.x / width))


def _identity_case(args):
    q, kappa, delta, direction = args
    rows = []
    case = f"kappa={kappa:g}"
    b = invariants.breakdown(q, kappa, delta=delta)
    rows.append((case, "alpha_cross_route", b.cross_discrepancy, 1e-7, "<"))
    rows.append((case, "alpha_nonnegative", -b.alpha_density, 1e-10, "<"))
    rows.append((case, "rho_min", -float(np.min(b.rho.samples)), 1e-9, "<"))
    sol = schrodinger.elliptic_solve(q, kappa)
    rows.append((case, "elliptic_residual", schrodinger.elliptic_residual(sol, q), 1e-6, "<"))
    rows.append((case, "g_band", float(np.max(np.abs(2 * kappa * sol.g.samples - 1))), 0.5, "<="))
    grad_scale = max(1.0, float(np.max(np.abs(direction.samples))))
    rows.append(
        (case, "alpha_gradient", invariants.alpha_gradient_check(q, kappa, direction, delta=max(delta, 1.0)) / grad_scale, 1e-8, "<")
    )
    rows.append((case, "kappa_derivative", invariants.kappa_derivative_check(q, kappa), 1e-6, "<"))
    h = b.hamiltonians
    consistency = abs(h["h_5th_kappa"] - 4 * kappa**2 * (h["h_kdv"] - h["h_kappa"]))
    scale = max(abs(h["h_5th_kappa"]), 4 * kappa**2 * (abs(h["h_kdv"]) + abs(h["h_kappa"])))
    rows.append((case, "hamiltonian_consistency", _relative(consistency, scale), 1e-10, "<"))
    if q.geometry == CIRCLE:
        d = b.determinant_identity
        mismatch = abs(d["matrix_logdet"] - d["floquet_logdet"])
        scale = max(abs(d["floquet_logdet"]), invariants.ROUTE_SCALE_FLOOR)
        rows.append((case, "periodic_determinant", mismatch / scale, 1e-7, "<"))
    else:
        rows.append((case, "greens_kernel_identity", schrodinger.greens_kernel_identity_check(q, kappa, stride=8), 1e-6, "<"))
    return rows, {"kappa": float(kappa), **b.routes()}


def identity_suite(q: Profile, kappas, delta=schrodinger.DELTA_ADMISS, direction=None, jobs=1) -> ExperimentReport:
    """Every static identity of g, rho and alpha at each kappa."""
    start = time.perf_counter()
    kappas = [float(k) for k in kappas]
    report = ExperimentReport("identity_suite", {"profile": _profile_inputs(q), "kappas": kappas, "delta": delta})
    direction = direction if direction is not None else default_direction(q)
    results = _parallel_map(_identity_case, [(q, k, delta, direction) for k in kappas], jobs)
    report.series["alpha"] = []
    for rows, alphas in results:
        for row in rows:
            report.add(*row)
        report.series["alpha"].append(alphas)
    report.runtime = time.perf_counter() - start
    return report


# ---------------------------------------------------------------------------
# kappa -> infinity


def kappa_ceiling(q: Profile):
    """Largest kappa whose length scale 1/kappa the grid resolves: Nyquist / 8."""
    return math.pi * q.n / q.length / 8


def _convergence_case(args):
    q0, T, kappa, dt, interval, kdv_profiles = args
    hk = flows.evolve(q0, flows.FlowSpec("hk", T=T, dt=dt, kappa=kappa, snapshot_interval=interval, diagnostics=False))
    diff = flows.evolve(q0, flows.FlowSpec("diff", T=T, dt=dt, kappa=kappa, snapshot_interval=interval, diagnostics=False))
    e = max(h_minus1_norm(a - b) for a, b in zip(kdv_profiles, hk.profiles()))
    d = max(h_minus1_norm(a - q0) for a in diff.profiles())
    return e, d


def kappa_convergence(q0: Profile, T, kappas, dt=1e-4, snapshots=64, jobs=1) -> ExperimentReport:
    """sup_t ||kdv(t) q0 - hk(t) q0|| and sup_t ||diff(t) q0 - q0|| in H^-1 per kappa."""
    start = time.perf_counter()
    kappas = [float(k) for k in kappas]
    if any(b <= a for a, b in zip(kappas, kappas[1:])):
        raise ConfigurationError("kappas must be strictly increasing")
    ceiling = kappa_ceiling(q0)
    if kappas[-1] > ceiling:
        raise ConfigurationError(f"kappa {kappas[-1]:g} exceeds the grid ceiling {ceiling:.4g} (Nyquist/8)")
    report = ExperimentReport(
        "kappa_convergence",
        {"profile": _profile_inputs(q0), "T": T, "kappas": kappas, "dt": dt, "snapshots": snapshots},
    )
    interval = abs(T) / snapshots
    try:
        kdv = flows.evolve(q0, flows.FlowSpec("kdv", T=T, dt=dt, snapshot_interval=interval, diagnostics=False))
        results = _parallel_map(
            _convergence_case, [(q0, T, k, dt, interval, kdv.profiles()) for k in kappas], jobs
        )
    except (IntegrationFailure, NumericalError) as exc:
        report.flags.append(f"integration failed: {exc}")
        report.runtime = time.perf_counter() - start
        return report
    e_vals = [r[0] for r in results]
    d_vals = [r[1] for r in results]
    report.series["convergence"] = [{"kappa": k, "E": e, "D": d} for k, e, d in zip(kappas, e_vals, d_vals)]
    for name, vals in (("E", e_vals), ("D", d_vals)):
        for k0, k1, v0, v1 in zip(kappas, kappas[1:], vals, vals[1:]):
            step = 0.0 if v0 <= ZERO_FLOOR else v1 / v0
            report.add(f"kappa={k0:g}->{k1:g}", f"{name}_ratio", step, 1.0, "<")
    doublings = math.log2(kappas[-1] / kappas[0])
    if doublings >= 3 - 1e-9:
        gain = 0.0 if e_vals[0] <= ZERO_FLOOR else e_vals[-1] / e_vals[0]
        report.add(f"kappa={kappas[0]:g}->{kappas[-1]:g}", "E_final_over_first", gain, 1 / 8, "<")
    for k, e, d in zip(kappas, e_vals, d_vals):
        ratio = 1.0 if max(e, d) <= ZERO_FLOOR else e / d if d > 0 else math.inf
        report.add(f"kappa={k:g}", "E_over_D", ratio, (0.5, 2.0), "within")
    report.runtime = time.perf_counter() - start
    return report


def _loglog_slope(kappas, errors):
    errors = np.asarray(errors, dtype=float)
    if np.any(errors <= 0):
        return math.nan
    return float(np.polyfit(np.log(kappas), np.log(errors), 1)[0])


def symbol_errors(q: Profile, kappa):
    """Errors of 4k^3 (1/(2k) - g) -> q in H^-1 and 16k^5 (g - 1/(2k)) + 4k^2 q -> -q'' + 3q^2 in H^-2."""
    u = schrodinger.elliptic_solve(q, kappa).g_offset
    first = q.with_samples(-4 * kappa**3 * u - q.samples)
    limit = -spectral_diff(q.samples, q.length, 2) + 3 * product(q.samples, q.samples)
    second = q.with_samples(16 * kappa**5 * u + 4 * kappa**2 * q.samples - limit)
    return h_minus1_norm(first), sobolev_norm(second, SobolevIndex(-2.0), squared=False)


def refine(q: Profile, factor=2) -> Profile:
    """Trigonometric interpolation of q onto a grid ``factor`` times finer."""
    return Profile(padded(q.samples, factor), q.geometry, q.length, warn_decay=False)


def symbol_convergence(q: Profile, kappas, check_refinement=True) -> ExperimentReport:
    """Log-log slopes of both symbol limits, plus their stability under n -> 2n."""
    start = time.perf_counter()
    kappas = [float(k) for k in kappas]
    if len(kappas) < 2:
        raise ConfigurationError("a slope needs at least two kappas")
    report = ExperimentReport("symbol_convergence", {"profile": _profile_inputs(q), "kappas": kappas})
    errs = [symbol_errors(q, k) for k in kappas]
    e1 = [e[0] for e in errs]
    e2 = [e[1] for e in errs]
    report.series["errors"] = [{"kappa": k, "uniform_to_q": a, "fifth_order_limit": b} for k, a, b in zip(kappas, e1, e2)]
    fine = None
    if check_refinement:
        fine_q = refine(q)
        fine = [symbol_errors(fine_q, k) for k in kappas]
    for idx, (name, vals) in enumerate((("uniform_to_q", e1), ("fifth_order_limit", e2))):
        if max(vals) <= ZERO_FLOOR:
            report.add("all", f"{name}_max_error", max(vals), 1e-10, "<")
            continue
        slope = _loglog_slope(kappas, vals)
        report.add("all", f"{name}_slope", slope, (-2.3, -1.7), "within")
        if fine is not None:
            slope_fine = _loglog_slope(kappas, [f[idx] for f in fine])
            report.add("all", f"{name}_slope_refinement_shift", abs(slope_fine - slope), 0.05, "<=")
    report.runtime = time.perf_counter() - start
    return report


# ---------------------------------------------------------------------------
# local smoothing


@dataclass(frozen=True)
class Cutoff:
    """Smooth step phi = (1 + tanh((x - center) / width)) / 2."""

    center: float = 0.0
    width: float = 1.0

    def phi(self, x):
        return 0.5 * (1 + np.tanh((x - self.center) / self.width))

    def dphi(self, x):
        return 0.5 / self.width / np.cosh((x - self.center) / self.width) ** 2


WINDOW_CONSTANT = 4.0


def _trapezoid(values, h):
    values = np.asarray(values)
    return h * (np.sum(values, axis=0) - 0.5 * (values[0] + values[-1]))


def smoothing_sides(traj: flows.Trajectory, cutoff: Cutoff, kappa=1.0):
    """Both sides of the local smoothing budget by trapezoid in time."""
    profiles = traj.profiles()
    times = traj.times
    h = float(times[1] - times[0])
    q0 = profiles[0]
    x = q0.x
    phi, dphi = cutoff.phi(x), cutoff.dphi(x)
    psi = 1.5 * apply_symbol(dphi, q0.length, lambda xi: 4 * kappa / (xi**2 + 4 * kappa**2))
    lhs_t, flux_t, rho_t, rhos = [], [], [], []
    for p in profiles:
        sol = schrodinger.elliptic_solve(p, kappa)
        r = invariants.rho(p, kappa, sol).samples
        u = sol.g_offset
        kappa_minus = 2 * kappa**2 * u / (1 + 2 * kappa * u)  # kappa - 1/(2g)
        lhs_t.append(np.sum(p.samples**2 * psi) * p.dx)
        flux_t.append(np.sum(p.samples * kappa_minus * dphi) * p.dx)
        rho_t.append(np.sum(r * dphi) * p.dx)
        rhos.append(r)
    lhs = _trapezoid(lhs_t, h)
    rhs = np.sum((rhos[0] - rhos[-1]) * phi) * q0.dx - 2 * _trapezoid(flux_t, h) + 4 * kappa**2 * _trapezoid(rho_t, h)
    return float(lhs), float(rhs)


def window_norm(traj: flows.Trajectory, span=1.0):
    """max over x0 of the space-time integral of q^2 over [0, T] x [x0, x0 + span]."""
    profiles = traj.profiles()
    h = float(traj.times[1] - traj.times[0])
    density = _trapezoid([p.samples**2 for p in profiles], h)
    q0 = profiles[0]
    width = int(round(span / q0.dx))
    csum = np.concatenate([[0.0], np.cumsum(np.concatenate([density, density[:width]]))])
    windows = (csum[width : width + q0.n] - csum[:q0.n]) * q0.dx
    return float(np.max(windows))


def local_smoothing_budget(
    q0: Profile, cutoff: Cutoff = Cutoff(), T=1.0, dt=1e-3, snapshots=64, check_cadence=True
) -> ExperimentReport:
    """Space-time budget identity of the local smoothing estimate along KdV, at kappa = 1."""
    if q0.geometry != LINE:
        raise ConfigurationError("local smoothing needs a line profile")
    start = time.perf_counter()
    report = ExperimentReport(
        "local_smoothing_budget",
        {"profile": _profile_inputs(q0), "cutoff": {"center": cutoff.center, "width": cutoff.width}, "T": T,
         "dt": dt, "snapshots": snapshots},
    )
    spec = flows.FlowSpec("kdv", T=T, dt=dt, snapshot_interval=T / snapshots, diagnostics=False)
    try:
        traj = flows.evolve(q0, spec)
    except IntegrationFailure as exc:
        report.flags.append(f"integration failed: {exc}")
        return report
    if not all(p.decays for p in traj.profiles()):
        report.flags.append("profile reached the box edges during evolution")
    lhs, rhs = smoothing_sides(traj, cutoff)
    scale = max(abs(lhs), abs(rhs))
    mismatch = _relative(abs(lhs - rhs), scale)
    report.series["budget"] = {"lhs": lhs, "rhs": rhs}
    report.add("budget", "relative_mismatch", mismatch, 1e-4, "<")
    if check_cadence and scale > ZERO_FLOOR:
        coarse = flows.Trajectory(spec, traj.snapshots[::2])
        lhs_c, rhs_c = smoothing_sides(coarse, cutoff)
        coarse_mismatch = abs(lhs_c - rhs_c) / scale
        contraction = coarse_mismatch / max(abs(lhs - rhs) / scale, 1e-300)
        report.series["budget"]["coarse_mismatch"] = coarse_mismatch
        report.add("cadence_halving", "mismatch_contraction", contraction, (3.0, 5.0), "within")
    delta = h_minus1_norm(q0)
    window = window_norm(traj)
    report.series["window"] = {"window_norm": window, "delta": delta}
    report.add("window", "window_over_delta_squared", window / delta**2 if delta > 0 else 0.0, WINDOW_CONSTANT, "<=")
    report.runtime = time.perf_counter() - start
    return report


# ---------------------------------------------------------------------------
# scaling


def evaluate_series(q: Profile, points):
    """Trigonometric interpolant of q at arbitrary points; zero outside a line box."""
    points = np.asarray(points, dtype=float)
    n = q.n
    k = np.fft.fftfreq(n, d=1.0 / n)
    coeffs = q.coefficients.copy()
    coeffs[n // 2] = coeffs[n // 2].real  # symmetric Nyquist split keeps the interpolant real
    phase = np.exp(2j * np.pi * np.outer(points - q.left, k) / q.length)
    values = (phase @ coeffs).real
    if q.geometry == LINE:
        values[np.abs(points) >= q.half_width] = 0.0
    return values


def rescale(q: Profile, lam) -> Profile:
    """q_lambda(x) = lambda^2 q(lambda x) on the same line box."""
    if q.geometry != LINE:
        raise ConfigurationError("scaling is defined for line profiles")
    return q.with_samples(lam**2 * evaluate_series(q, lam * q.x), warn_decay=True)


def scaling_check(q: Profile, lam, T=None, dt=1e-4, kappa=4.0) -> ExperimentReport:
    """Flow, H^-1 and alpha scaling identities on a line box.

    The unscaled profile runs for ``lam^3 T``; the default ``T = 0.25 / lam^3``
    keeps that horizon short enough that nothing wraps around the box.
    """
    if T is None:
        T = 0.25 / lam**3
    if q.geometry != LINE:
        raise ConfigurationError("scaling_check needs a line profile")
    if kappa / lam < 1:
        raise ConfigurationError("kappa / lambda must be at least 1")
    start = time.perf_counter()
    report = ExperimentReport(
        "scaling_check", {"profile": _profile_inputs(q), "lambda": lam, "T": T, "dt": dt, "kappa": kappa}
    )
    q_lam = rescale(q, lam)
    # H^-1 identity: ||q_lam||^2 = lam int |q^|^2 / (xi^2 + 4 lam^-2)
    lhs = h_minus1_norm(q_lam) ** 2
    rhs = lam * float(np.sum(np.abs(q.spectrum) ** 2 / (q.xi**2 + 4 / lam**2)) * q.dxi)
    report.add("h_minus1", "relative_error", _relative(abs(lhs - rhs), max(lhs, rhs)), 1e-10, "<")
    # alpha identity
    a_lam = invariants.alpha(q_lam, kappa, check=False)
    a_ref = invariants.alpha(q, kappa / lam, check=False)
    report.add("alpha", "relative_error", invariants.relative_discrepancy(a_lam, a_ref), 1e-7, "<")
    # g identity: g(x; kappa, q_lam) = g(lam x; kappa/lam, q) / lam
    u_lam = schrodinger.elliptic_solve(q_lam, kappa).g_offset
    u_ref = schrodinger.elliptic_solve(q, kappa / lam).g_offset
    u_ref_scaled = evaluate_series(q.with_samples(u_ref), lam * q.x) / lam
    inside = np.abs(lam * q.x) < q.half_width
    g_err = float(np.max(np.abs(u_lam - u_ref_scaled)[inside])) * 2 * kappa
    report.add("g", "relative_error", g_err, 1e-7, "<")
    # flow identity: q_lam(t, x) = lam^2 q(lam^3 t, lam x)
    try:
        fast = flows.evolve(q, flows.FlowSpec("kdv", T=lam**3 * T, dt=dt, snapshot_interval=lam**3 * T, diagnostics=False))
        slow = flows.evolve(q_lam, flows.FlowSpec("kdv", T=T, dt=dt / lam**3, snapshot_interval=T, diagnostics=False))
    except IntegrationFailure as exc:
        report.flags.append(f"integration failed: {exc}")
        return report
    predicted = lam**2 * evaluate_series(fast.final, lam * q.x)
    scale = float(np.max(np.abs(slow.final.samples)))
    flow_err = float(np.max(np.abs(slow.final.samples - predicted)))
    report.add("flow", "relative_error", _relative(flow_err, scale), 1e-6, "<")
    report.runtime = time.perf_counter() - start
    return report


# ---------------------------------------------------------------------------
# conservation


CONSERVATION_TOL = 1e-7
_EXTRA_INVARIANTS = {
    "kdv": (),
    "hk": ("h_kappa",),
    "diff": ("h_kappa",),
    "fifth": ("h_5th",),
    "fifth_hk": ("h_kappa", "h_5th_kappa"),
    "fifth_diff": ("h_5th", "h_kappa"),
}


def _invariant_values(q: Profile, spec: flows.FlowSpec):
    out = {"mass": invariants.mass(q), "momentum": invariants.momentum(q), "h_kdv": invariants.h_kdv(q)}
    for k in spec.diag_kappas:
        out[f"alpha_{k:g}"] = invariants.alpha(q, k, check=False)
    extras = _EXTRA_INVARIANTS[spec.hamiltonian]
    if "h_5th" in extras:
        out["h_5th"] = invariants.h_5th(q)
    if "h_kappa" in extras:
        out["h_kappa"] = invariants.h_kappa(q, spec.kappa)
    if "h_5th_kappa" in extras:
        out["h_5th_kappa"] = invariants.h_5th_kappa(q, spec.kappa)
    return out


def _drifts(traj, spec):
    values = [_invariant_values(p, spec) for p in traj.profiles()]
    first = values[0]
    out = {}
    for key, v0 in first.items():
        worst = max(abs(v[key] - v0) for v in values)
        out[key] = _relative(worst, abs(v0), 1e-12)
    return out


def conservation_drift(spec: flows.FlowSpec, q0: Profile, T=None, halvings=2, tol=CONSERVATION_TOL) -> ExperimentReport:
    """Worst relative drift of each applicable invariant along the flow.

    When some drift exceeds ``tol`` the step is halved, up to ``halvings``
    times; the report keeps the last run.
    """
    start = time.perf_counter()
    if T is not None:
        spec = flows.with_horizon(spec, T)
    report = ExperimentReport("conservation_drift", {"spec": spec.to_json_dict(), "profile": _profile_inputs(q0)})
    drift = None
    for attempt in range(halvings + 1):
        run_spec = flows.with_horizon(spec, spec.T, dt=spec.dt / 2**attempt, diagnostics=False)
        try:
            traj = flows.evolve(q0, run_spec)
        except IntegrationFailure as exc:
            report.flags.append(f"integration failed at dt={run_spec.dt:g}: {exc}")
            report.runtime = time.perf_counter() - start
            return report
        drift = _drifts(traj, run_spec)
        report.series.setdefault("attempts", []).append({"dt": run_spec.dt, "drift": drift})
        if max(drift.values()) < tol:
            break
    for key, value in drift.items():
        report.add(spec.hamiltonian, f"{key}_drift", value, tol, "<")
    report.runtime = time.perf_counter() - start
    return report


# ---------------------------------------------------------------------------
# linear dispersion


def measured_frequency(hamiltonian, mode, kappa=None, eps=1e-4, n=32, turns=4.0, samples=32):
    """Angular frequency of a single circle mode eps cos(2 pi mode x), by phase unwrapping."""
    xi = 2 * np.pi * mode
    w = xi**2 + 4 * (kappa or 1.0) ** 2
    guess = {
        "kdv": xi**3,
        "fifth": xi**5,
        "hk": 4 * (kappa or 1) ** 2 * xi**3 / w,
        "diff": xi**5 / w,
        "fifth_hk": 4 * (kappa or 1) ** 2 * xi**5 / w,
        "fifth_diff": xi**7 / w,
    }[hamiltonian]
    T = 2 * np.pi * turns / abs(guess)
    interval = T / samples
    q0 = Profile.circle(eps * np.cos(xi * np.arange(n) / n))
    spec = flows.FlowSpec(hamiltonian, T=T, dt=interval / 16, kappa=kappa, snapshot_interval=interval, diagnostics=False)
    traj = flows.evolve(q0, spec)
    phases = np.unwrap([np.angle(p.coefficients[mode]) for p in traj.profiles()])
    return float(np.polyfit(traj.times, phases, 1)[0]), float(guess)


def dispersion_check(hamiltonian, modes, kappa=None, eps=1e-4, tol=1e-3) -> ExperimentReport:
    start = time.perf_counter()
    report = ExperimentReport("dispersion_check", {"hamiltonian": hamiltonian, "modes": list(modes), "kappa": kappa, "eps": eps})
    for m in modes:
        omega, predicted = measured_frequency(hamiltonian, m, kappa, eps)
        report.add(f"mode={m}", "relative_frequency_error", abs(omega - predicted) / abs(predicted), tol, "<")
        report.series.setdefault("frequencies", []).append({"mode": m, "measured": omega, "predicted": predicted})
    report.runtime = time.perf_counter() - start
    return report
