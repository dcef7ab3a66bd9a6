"""Hamiltonian flows and their time integrators.

All flows are written as ``q_t = L q + N(q)`` in Fourier space, where L is
the exact linearization at q = 0 (a purely dispersive symbol) and N is the
remainder.  Linear symbols, with ``xi`` the angular frequency:

==========  ==================================
kdv         i xi^3
hk          i xi 4 k^2 xi^2 / (xi^2 + 4 k^2)
diff        i xi^5 / (xi^2 + 4 k^2)
fifth       i xi^5
fifth_hk    i xi 4 k^2 xi^4 / (xi^2 + 4 k^2)
fifth_diff  i xi^7 / (xi^2 + 4 k^2)
==========  ==================================

The nonlinear parts of the kappa-flows are assembled from ``g - 1/(2k)``
recomputed at every stage, so the large prefactors 16 k^5 and 64 k^7 act
only on quantities computed without cancellation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import invariants, schrodinger
from .errors import ConfigurationError, InadmissibleError, IntegrationFailure, UsageError
from .spectral import Profile, apply_symbol, product, spectral_diff, smoothing_symbol

HAMILTONIANS = ("kdv", "hk", "diff", "fifth", "fifth_hk", "fifth_diff")
NEEDS_KAPPA = ("hk", "diff", "fifth_hk", "fifth_diff")
STEPPERS = ("etd4", "rk4_if")
DEFAULT_DIAG_KAPPAS = (1.0, 2.0)
BLOWUP_FACTOR = 1e3


@dataclass(frozen=True)
class FlowSpec:
    """Which flow to run and how.

    ``T`` may be negative to run backwards in time.  ``snapshot_interval``
    defaults to ``|T| / 64``.
    """

    hamiltonian: str
    T: float
    dt: float
    kappa: float | None = None
    stepper: str | None = None
    snapshot_interval: float | None = None
    diag_kappas: tuple = DEFAULT_DIAG_KAPPAS
    diagnostics: bool = True
    delta: float = schrodinger.DELTA_ADMISS
    check_admissibility: bool = True

    def __post_init__(self):
        if self.hamiltonian not in HAMILTONIANS:
            raise ConfigurationError(f"unknown hamiltonian {self.hamiltonian!r}; expected one of {HAMILTONIANS}")
        if self.hamiltonian in NEEDS_KAPPA:
            if self.kappa is None or not self.kappa >= 1:
                raise ConfigurationError(f"flow {self.hamiltonian} needs kappa >= 1")
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ConfigurationError("dt must be positive")
        if not math.isfinite(self.T):
            raise ConfigurationError("T must be finite")
        stepper = self.stepper or ("etd4" if self.hamiltonian in ("kdv", "fifth") else "rk4_if")
        if stepper not in STEPPERS:
            raise ConfigurationError(f"unknown stepper {stepper!r}")
        object.__setattr__(self, "stepper", stepper)
        interval = self.snapshot_interval if self.snapshot_interval else abs(self.T) / 64 or self.dt
        if not interval > 0:
            raise ConfigurationError("snapshot interval must be positive")
        object.__setattr__(self, "snapshot_interval", float(interval))
        object.__setattr__(self, "diag_kappas", tuple(float(k) for k in self.diag_kappas))

    @property
    def uses_g(self):
        return self.hamiltonian in NEEDS_KAPPA

    def to_json_dict(self):
        return {
            "hamiltonian": self.hamiltonian,
            "kappa": self.kappa,
            "dt": self.dt,
            "T": self.T,
            "stepper": self.stepper,
            "snapshot_interval": self.snapshot_interval,
            "diag_kappas": list(self.diag_kappas),
        }


@dataclass(eq=False)
class Trajectory:
    spec: FlowSpec
    snapshots: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)

    @property
    def times(self):
        return np.array([t for t, _ in self.snapshots])

    @property
    def final(self) -> Profile:
        return self.snapshots[-1][1]

    def profiles(self):
        return [p for _, p in self.snapshots]


# ---------------------------------------------------------------------------
# symbols and nonlinear terms


class _Field:
    """Linear symbol and nonlinear remainder of one flow on one grid."""

    def __init__(self, spec: FlowSpec, n, length, geometry):
        self.spec = spec
        self.geometry = geometry
        self.n = n
        self.length = length
        self.xi = 2 * np.pi * np.fft.rfftfreq(n, d=length / n)
        self.ik = 1j * self.xi
        self.ik[-1] = 0.0  # odd operators vanish at Nyquist
        self.kappa = spec.kappa
        self.linear = self._linear_symbol(spec.hamiltonian)
        self.linear[-1] = 0.0

    def _linear_symbol(self, name):
        xi, k = self.xi, self.kappa
        if name == "kdv":
            return 1j * xi**3
        if name == "fifth":
            return 1j * xi**5
        w = xi**2 + 4 * k**2
        return {
            "hk": 1j * xi * 4 * k**2 * xi**2 / w,
            "diff": 1j * xi**5 / w,
            "fifth_hk": 1j * xi * 4 * k**2 * xi**4 / w,
            "fifth_diff": 1j * xi**7 / w,
        }[name]

    # pieces, all in unnormalized rfft coefficients
    def _samples(self, v):
        return np.fft.irfft(v, self.n)

    def _coeffs(self, s):
        out = np.fft.rfft(s)
        out[-1] = 0.0
        return out

    def n_kdv(self, v, s):
        return 3 * self.ik * self._coeffs(product(s, s))

    def n_fifth(self, v, s):
        d1 = spectral_diff(s, self.length, 1)
        d2 = spectral_diff(s, self.length, 2)
        flux = -10 * product(s, d2) - 5 * product(d1, d1) + 10 * product(s, s, s)
        return self.ik * self._coeffs(flux)

    def n_hk(self, v, s):
        """16 k^5 g' + 4 k^2 q' minus its linearization."""
        k = self.kappa
        if self.spec.check_admissibility:
            profile = Profile(s, self.geometry, self.length, warn_decay=False)
            verdict = schrodinger.admissibility_check(profile, k, self.spec.delta)
            if not verdict.ok:
                raise InadmissibleError(verdict)
        _, modes = schrodinger.elliptic_offset(s, self.length, k)
        half = self.n // 2
        u_hat = modes[half:] * self.n  # unnormalized, k = 0..n/2
        u_hat[-1] = 0.0
        inner = k * u_hat + v / (self.xi**2 + 4 * k**2)
        return self.ik * 16 * k**4 * inner

    def nonlinear(self, v):
        s = self._samples(v)
        name = self.spec.hamiltonian
        k = self.kappa
        if name == "kdv":
            return self.n_kdv(v, s)
        if name == "fifth":
            return self.n_fifth(v, s)
        if name == "hk":
            return self.n_hk(v, s)
        if name == "diff":
            return self.n_kdv(v, s) - self.n_hk(v, s)
        five_k = 4 * k**2 * (self.n_kdv(v, s) - self.n_hk(v, s))
        if name == "fifth_hk":
            return five_k
        return self.n_fifth(v, s) - five_k


def _make_field(spec, q: Profile):
    return _Field(spec, q.n, q.length, q.geometry)


def vector_field(q: Profile, spec: FlowSpec) -> Profile:
    """dq/dt of the flow at q."""
    f = _make_field(spec, q)
    v = f._coeffs(q.samples)
    return q.with_samples(f._samples(f.linear * v + f.nonlinear(v)))


# ---------------------------------------------------------------------------
# steppers


def _etd_coefficients(lin, h, points=64):
    """ETDRK4 coefficients by contour averages around each L h."""
    z0 = lin * h
    roots = np.exp(2j * np.pi * (np.arange(points) + 0.5) / points)
    z = z0[:, None] + roots[None, :]
    ez = np.exp(z)
    q = h * np.mean((np.exp(z / 2) - 1) / z, axis=1)
    f1 = h * np.mean((-4 - z + ez * (4 - 3 * z + z**2)) / z**3, axis=1)
    f2 = h * np.mean((2 + z + ez * (z - 2)) / z**3, axis=1)
    f3 = h * np.mean((-4 - 3 * z - z**2 + ez * (4 - z)) / z**3, axis=1)
    return np.exp(z0), np.exp(z0 / 2), q, f1, f2, f3


class _ETD4:
    def __init__(self, field_, h):
        self.f = field_
        self.e, self.e2, self.q, self.f1, self.f2, self.f3 = _etd_coefficients(field_.linear, h)

    def step(self, v):
        nl = self.f.nonlinear
        nv = nl(v)
        a = self.e2 * v + self.q * nv
        na = nl(a)
        b = self.e2 * v + self.q * na
        nb = nl(b)
        c = self.e2 * a + self.q * (2 * nb - nv)
        nc = nl(c)
        return self.e * v + nv * self.f1 + 2 * (na + nb) * self.f2 + nc * self.f3


class _RK4IF:
    def __init__(self, field_, h):
        self.f = field_
        self.h = h
        self.e = np.exp(field_.linear * h)
        self.e2 = np.exp(field_.linear * h / 2)

    def step(self, v):
        nl, h, e, e2 = self.f.nonlinear, self.h, self.e, self.e2
        k1 = nl(v)
        k2 = nl(e2 * (v + 0.5 * h * k1))
        k3 = nl(e2 * v + 0.5 * h * k2)
        k4 = nl(e * v + h * e2 * k3)
        return e * v + (h / 6) * (e * k1 + 2 * e2 * (k2 + k3) + k4)


def _diagnostics(q: Profile, spec: FlowSpec):
    rec = {
        "mass": invariants.mass(q),
        "momentum": invariants.momentum(q),
        "h_kdv": invariants.h_kdv(q),
    }
    for k in spec.diag_kappas:
        try:
            rec[f"alpha_{k:g}"] = invariants.alpha(q, k, delta=spec.delta)
        except (InadmissibleError, schrodinger.SpectrumIntersection):
            rec[f"alpha_{k:g}"] = math.nan
    return rec


STABILITY_BOUND = 2 * math.sqrt(2)  # RK4-type stages on the imaginary axis


def stiffness(q: Profile, spec: FlowSpec) -> float:
    """Rough Lipschitz bound of the explicit (nonlinear) part of the flow at q."""
    top = float(np.max(np.abs(q.xi)))
    amp = float(np.max(np.abs(q.samples)))
    transport = 6 * amp * top
    if spec.hamiltonian in ("fifth", "fifth_diff"):
        slope = float(np.max(np.abs(spectral_diff(q.samples, q.length, 1))))
        return 10 * amp * top**3 + 20 * slope * top**2 + 30 * amp**2 * top
    if spec.hamiltonian == "fifth_hk":
        return 4 * spec.kappa**2 * transport
    return transport


def evolve(q0: Profile, spec: FlowSpec) -> Trajectory:
    """Integrate the flow from q0, recording snapshots and diagnostics.

    Raises ``IntegrationFailure`` (carrying the partial trajectory) on
    blow-up or when a g-dependent flow leaves the admissible set.
    """
    f = _make_field(spec, q0)
    interval = spec.snapshot_interval
    total = abs(spec.T)
    n_snap = int(round(total / interval)) if total > 0 else 0
    if n_snap > 0:
        interval = total / n_snap
    sub = max(1, int(math.ceil(interval / spec.dt - 1e-9))) if n_snap else 0
    sign = 1.0 if spec.T >= 0 else -1.0
    h = sign * interval / sub if n_snap else 0.0
    if abs(h) * stiffness(q0, spec) > STABILITY_BOUND:
        raise ConfigurationError(
            f"dt={abs(h):.3g} is beyond the stability limit {STABILITY_BOUND / stiffness(q0, spec):.3g} "
            f"of the {spec.stepper} stepper for this profile"
        )
    stepper = None
    if n_snap:
        stepper = (_ETD4 if spec.stepper == "etd4" else _RK4IF)(f, h)
    v = f._coeffs(q0.samples)
    traj = Trajectory(spec)
    start = q0.with_samples(f._samples(v))
    norm0 = max(float(np.sum(start.samples**2)), 1e-300)
    traj.snapshots.append((0.0, start))
    if spec.diagnostics:
        traj.diagnostics.append(_diagnostics(start, spec))
    for j in range(1, n_snap + 1):
        try:
            for _ in range(sub):
                v = stepper.step(v)
        except InadmissibleError as exc:
            raise IntegrationFailure(f"flow left the admissible set: {exc}", traj) from exc
        except schrodinger.SpectrumIntersection as exc:
            raise IntegrationFailure(f"spectrum intersection during flow: {exc}", traj) from exc
        samples = f._samples(v)
        if not np.all(np.isfinite(samples)) or np.sum(samples**2) > BLOWUP_FACTOR * norm0:
            raise IntegrationFailure(f"blow-up detected at t={sign * j * interval:.6g}", traj)
        snap = q0.with_samples(samples)
        t = sign * j * interval
        if spec.uses_g and spec.check_admissibility:
            verdict = schrodinger.admissibility_check(snap, spec.kappa, spec.delta)
            if not verdict.ok:
                raise IntegrationFailure(f"inadmissible at t={t:.6g}: {verdict.message}", traj)
        traj.snapshots.append((t, snap))
        if spec.diagnostics:
            traj.diagnostics.append(_diagnostics(snap, spec))
    return traj


# ---------------------------------------------------------------------------
# g-evolution identities


IDENTITIES = {
    "kdv": ("g", "inv_2g", "rho", "g_flux"),
    "hk": ("inv_2g_hk",),
    "diff": ("inv_2g_diff",),
    "fifth": ("inv_2g_fifth",),
    "fifth_hk": ("inv_2g_fifth_hk",),
    "fifth_diff": ("inv_2g_fifth_diff",),
}


def _inv_2g_minus(u, k):
    """1/(2g) - k from u = g - 1/(2k), without cancellation."""
    return -2 * k**2 * u / (1 + 2 * k * u)


def _rhs(name, q: Profile, varkappa, flow_kappa):
    """Right-hand side of an identity at a single time."""
    s, length = q.samples, q.length
    k = varkappa
    d = lambda a, order=1: spectral_diff(a, length, order)  # noqa: E731
    sol = schrodinger.elliptic_solve(q, k)
    u = sol.g_offset
    g = 1 / (2 * k) + u
    if name == "g":
        return -2 * product(d(s), g) + 2 * product(s, d(u)) - 4 * k**2 * d(u)
    if name == "inv_2g":
        return d((s - 2 * k**2) / g)
    if name == "rho":
        r = invariants.rho(q, k, sol).samples
        conv = apply_symbol(product(s, s), length, lambda xi: 4 * k / (xi**2 + 4 * k**2))
        flux = 1.5 * conv - 2 * product(s, _inv_2g_minus(u, k)) - 4 * k**2 * r
        return d(flux)
    if name == "g_flux":
        return d(2 * d(u, 2) - 6 * product(s, g) - 12 * k**2 * u)

    def hk_part():
        kk = flow_kappa
        gk = 1 / (2 * kk) + schrodinger.elliptic_solve(q, kk).g_offset
        flux = -(4 * kk**5 / (kk**2 - k**2)) * (gk / g - k / kk) + 4 * kk**2 * _inv_2g_minus(u, k)
        return d(flux)

    def kdv_part():
        return d((s - 2 * k**2) / g)

    def fifth_part():
        flux = (-d(s, 2) + 3 * product(s, s) - 4 * k**2 * s + 8 * k**4) / g
        return d(flux)

    if name == "inv_2g_hk":
        return hk_part()
    if name == "inv_2g_diff":
        return kdv_part() - hk_part()
    if name == "inv_2g_fifth":
        return fifth_part()
    kk = flow_kappa
    gk = 1 / (2 * kk) + schrodinger.elliptic_solve(q, kk).g_offset
    flux = (16 * kk**7 / (kk**2 - k**2)) * (gk / g) - 16 * kk**4 * (_inv_2g_minus(u, k) + k) + 4 * kk**2 * (
        s - 2 * k**2
    ) / g
    five_k = d(flux)
    if name == "inv_2g_fifth_hk":
        return five_k
    if name == "inv_2g_fifth_diff":
        return fifth_part() - five_k
    raise UsageError(f"unknown identity {name!r}")


def _tracked(name, q: Profile, varkappa):
    """The quantity whose time derivative the identity describes."""
    if name == "rho":
        return invariants.rho(q, varkappa).samples
    u = schrodinger.elliptic_solve(q, varkappa).g_offset
    if name in ("g", "g_flux"):
        return u
    return _inv_2g_minus(u, varkappa)


_STENCILS = {2: (np.array([-1, 0, 1]) / 2.0, 1), 4: (np.array([1, -8, 0, 8, -1]) / 12.0, 2)}


def g_evolution_residual(traj: Trajectory, varkappa, identities=None, center=None, order=2):
    """Relative L^2 mismatch of each applicable g-evolution identity.

    The time derivative is a centered finite difference over snapshots
    around ``center`` (default: the middle snapshot), of order 2 or 4.
    """
    spec = traj.spec
    names = IDENTITIES[spec.hamiltonian]
    if identities is None:
        identities = names
    for name in identities:
        if name not in names:
            raise UsageError(f"identity {name!r} does not apply to the {spec.hamiltonian} flow")
    if spec.hamiltonian in NEEDS_KAPPA and abs(varkappa - spec.kappa) < 1e-12:
        raise UsageError("these identities need varkappa != kappa")
    if order not in _STENCILS:
        raise ConfigurationError("finite-difference order must be 2 or 4")
    weights, reach = _STENCILS[order]
    times = traj.times
    if len(times) < 2 * reach + 1:
        raise UsageError(f"need at least {2 * reach + 1} snapshots")
    c = len(times) // 2 if center is None else int(center)
    if c - reach < 0 or c + reach >= len(times):
        raise UsageError("not enough snapshots around the requested center")
    steps = np.diff(times[c - reach : c + reach + 1])
    h = float(steps[0])
    if not np.allclose(steps, h, rtol=1e-9, atol=0):
        raise UsageError("snapshots around the center must be equally spaced")
    profiles = traj.profiles()
    mid = profiles[c]
    out = {}
    for name in identities:
        series = [_tracked(name, profiles[j], varkappa) for j in range(c - reach, c + reach + 1)]
        fd = sum(w * s for w, s in zip(weights, series)) / h
        rhs = _rhs(name, mid, varkappa, spec.kappa)
        scale = math.sqrt(float(np.mean(rhs**2)))
        err = math.sqrt(float(np.mean((fd - rhs) ** 2)))
        out[name] = err / scale if scale > 1e-14 else err
    return out


def with_horizon(spec: FlowSpec, T, **changes) -> FlowSpec:
    """Copy of ``spec`` with a new horizon (and optional other changes)."""
    return replace(spec, T=T, **changes)
