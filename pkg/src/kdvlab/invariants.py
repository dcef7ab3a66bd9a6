"""The conserved density rho, the invariant alpha(kappa; q) and Hamiltonians.

Routes for alpha:

``density``
    ``int rho`` with ``rho = kappa - 1/(2g) + (1/2) exp(-2 kappa|.|) * q``
    and g from the elliptic solve.  Works on both geometries.
``floquet`` (circle)
    ``kappa - gamma + q^(0)/(2 kappa)`` with gamma from the RK4 monodromy.
``det2`` (circle)
    Renormalized perturbation determinant of the whole-line operator with
    periodic q, evaluated fiber by fiber: the Bloch fibers with
    quasi-momentum theta give truncated Fourier matrices
    ``K_theta = D^{-1/2} Q D^{-1/2}``, ``D = (xi + theta)^2 + kappa^2``, and
    ``alpha`` is the theta-average of ``-log det_2(1 + K_theta)``.  The
    second-order term beyond the truncation window is added explicitly.
``log_a`` (line)
    ``-log a(i kappa) + (1/(2 kappa)) int q`` with ``log a`` read off the
    shooting solution psi_+ at the left end of the box.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import schrodinger
from .errors import ConfigurationError, InadmissibleError, UsageError
from .spectral import CIRCLE, LINE, Profile, apply_symbol, padded, smoothing_symbol, spectral_diff

ALPHA_ROUTES = ("density", "floquet", "det2", "log_a")
ALPHA_ABS_FLOOR = 1e-12
ROUTE_SCALE_FLOOR = 1e-5  # route agreement is relative to max(alpha, 1e-5)
EQUICONTINUITY_BAND = 4.0
HS_BAND = 8.0


def _offset(g, kappa):
    if isinstance(g, schrodinger.SchrodingerSolve):
        return np.asarray(g.g_offset)
    samples = g.samples if isinstance(g, Profile) else np.asarray(g, dtype=float)
    return samples - 1 / (2 * kappa)


def rho(q: Profile, kappa, g=None) -> Profile:
    """Density kappa - 1/(2g) + (1/2) int exp(-2 kappa |x-y|) q(y) dy.

    ``g`` may be a Profile, a SchrodingerSolve (whose cancellation-free
    offset is then used) or ``None`` to solve by the elliptic route.
    """
    if g is None:
        g = schrodinger.elliptic_solve(q, kappa)
    u = _offset(g, kappa)
    if np.any(1 + 2 * kappa * u <= 0):
        raise schrodinger.SpectrumIntersection("g is not positive; invalid solve")
    # kappa - 1/(2g) = 2 kappa^2 u / (1 + 2 kappa u) with u = g - 1/(2 kappa)
    local = 2 * kappa**2 * u / (1 + 2 * kappa * u)
    smooth = apply_symbol(q.samples, q.length, smoothing_symbol(kappa))
    return q.with_samples(local + smooth)


def _admissible_or_raise(q, kappa, delta):
    verdict = schrodinger.admissibility_check(q, kappa, delta)
    if not verdict.ok:
        raise InadmissibleError(verdict)
    return verdict


def _alpha_density(q, kappa):
    return rho(q, kappa).integral()


def _alpha_floquet(q, kappa):
    if q.geometry != CIRCLE:
        raise UsageError("the floquet route needs circle geometry")
    _, gamma = schrodinger.monodromy(q, kappa)
    return (kappa - gamma) + q.mean() / (2 * kappa)


def _alpha_log_a(q, kappa):
    if q.geometry != LINE:
        raise UsageError("the log a route needs line geometry")
    s = schrodinger.weyl_solve(q, kappa)
    return -s.log_a + q.integral() / (2 * kappa)


def _second_order_tail(qsym_support, kappa, m, theta, extend=16):
    """Half the part of tr K^2 coming from index pairs outside the window."""
    zetas, weights = qsym_support
    if zetas.size == 0:
        return 0.0
    me = extend * m
    k = np.arange(-me, me + 1)
    d = (2 * np.pi * k + theta) ** 2 + kappa**2
    inside = np.abs(k) <= m
    total = 0.0
    for zeta, w in zip(zetas, weights):
        shifted = k - zeta
        valid = np.abs(shifted) <= me
        dk = d[valid]
        ds = d[shifted[valid] + me]
        outside = ~(inside[valid] & (np.abs(shifted[valid]) <= m))
        total += w * float(np.sum(1.0 / (dk[outside] * ds[outside])))
    # both ends beyond the extended window, asymptotically (2 pi k)^-4 per index
    total += float(np.sum(weights)) * 2.0 / (3 * (2 * np.pi) ** 4 * me**3)
    return 0.5 * total


def det2_alpha(q: Profile, kappa, m=None, n_theta=None):
    """alpha as the Bloch average of -log det_2(1 + K_theta)."""
    if q.geometry != CIRCLE:
        raise UsageError("the det2 route needs circle geometry")
    m = q.n if m is None else int(m)
    if n_theta is None:
        n_theta = max(8, int(math.ceil(40.0 / kappa)))
    qsym = schrodinger._symmetric_coefficients(q.coefficients)
    half = q.n // 2
    modes = np.arange(-half, half + 1)
    w = np.abs(qsym) ** 2
    keep = w > 1e-32 * max(float(w.max()), 1e-300)
    support = (modes[keep], w[keep])
    values = []
    for j in range(n_theta):
        theta = 2 * np.pi * j / n_theta
        qmat, d, _ = schrodinger._periodic_matrix(q, kappa, m, theta)
        sq = np.sqrt(d)
        kmat = qmat / sq[:, None] / sq[None, :]
        try:
            chol = np.linalg.cholesky(np.eye(d.size) + kmat)
        except np.linalg.LinAlgError as exc:
            raise schrodinger.SpectrumIntersection(f"1 + K_theta not positive at kappa={kappa}") from exc
        logdet = 2 * float(np.sum(np.log(np.diag(chol).real)))
        trace = float(np.sum(np.diag(kmat).real))
        values.append(trace - logdet + _second_order_tail(support, kappa, m, theta))
    return float(np.mean(values))


def periodic_determinant_identity(q: Profile, kappa, m=None):
    """Both sides of log det(1 + K_0) = log(e^g - 2 + e^-g) - log(e^k - 2 + e^-k).

    The left side is the truncated periodic matrix (theta = 0) with its
    first-order tail; the right side uses gamma from the RK4 monodromy.
    """
    matrix = schrodinger.truncated_logdet(q, kappa, m)
    _, gamma = schrodinger.monodromy(q, kappa)
    closed = schrodinger.floquet_logdet(gamma, kappa)
    return matrix, closed


def alpha(q: Profile, kappa, route="density", delta=schrodinger.DELTA_ADMISS, check=True) -> float:
    """The invariant alpha(kappa; q) by the requested route."""
    if route not in ALPHA_ROUTES:
        raise ConfigurationError(f"unknown alpha route {route!r}; expected one of {ALPHA_ROUTES}")
    if check:
        _admissible_or_raise(q, kappa, delta)
    else:
        schrodinger._check_kappa(kappa)
    if route == "density":
        return _alpha_density(q, kappa)
    if route == "floquet":
        return _alpha_floquet(q, kappa)
    if route == "det2":
        return det2_alpha(q, kappa)
    return _alpha_log_a(q, kappa)


def relative_discrepancy(a, b, floor=ALPHA_ABS_FLOOR):
    return abs(a - b) / max(abs(a), abs(b), floor)


@dataclass(frozen=True, eq=False)
class InvariantBreakdown:
    kappa: float
    rho: Profile
    alpha_density: float
    alpha_floquet: float | None
    alpha_det2: float | None
    alpha_log_a: float | None
    cross_discrepancy: float
    hamiltonians: dict
    determinant_identity: dict | None = None
    verdict: schrodinger.AdmissibilityVerdict | None = field(default=None, repr=False)

    def routes(self):
        out = {"density": self.alpha_density}
        for name in ("floquet", "det2", "log_a"):
            val = getattr(self, f"alpha_{name}")
            if val is not None:
                out[name] = val
        return out

    def to_json_dict(self):
        return {
            "kappa": self.kappa,
            "alpha_density": self.alpha_density,
            "alpha_floquet": self.alpha_floquet,
            "alpha_det2": self.alpha_det2,
            "alpha_log_a": self.alpha_log_a,
            "cross_discrepancy": self.cross_discrepancy,
            "hamiltonians": self.hamiltonians,
            "determinant_identity": self.determinant_identity,
            "rho": self.rho.samples.tolist(),
            "admissibility": None
            if self.verdict is None
            else {
                "ok": self.verdict.ok,
                "kappa_scaled_norm": self.verdict.kappa_scaled_norm,
                "g_range_ok": self.verdict.g_range_ok,
                "message": self.verdict.message,
            },
        }


def breakdown(q: Profile, kappa, delta=schrodinger.DELTA_ADMISS, check=True) -> InvariantBreakdown:
    """rho plus alpha by every route available for the geometry."""
    verdict = _admissible_or_raise(q, kappa, delta) if check else None
    sol = schrodinger.elliptic_solve(q, kappa)
    if check:
        verdict = schrodinger.admissibility_check(q, kappa, delta, sol)
        if not verdict.ok:
            raise InadmissibleError(verdict)
    density = rho(q, kappa, sol)
    a_density = density.integral()
    floquet = det2 = log_a = None
    det_identity = None
    if q.geometry == CIRCLE:
        floquet = _alpha_floquet(q, kappa)
        det2 = det2_alpha(q, kappa)
        matrix, closed = periodic_determinant_identity(q, kappa)
        det_identity = {"matrix_logdet": matrix, "floquet_logdet": closed}
    else:
        log_a = _alpha_log_a(q, kappa)
    values = [v for v in (a_density, floquet, det2, log_a) if v is not None]
    worst = max(
        (relative_discrepancy(values[i], values[j], ROUTE_SCALE_FLOOR) for i in range(len(values)) for j in range(i + 1, len(values))),
        default=0.0,
    )
    return InvariantBreakdown(
        kappa=float(kappa),
        rho=density,
        alpha_density=a_density,
        alpha_floquet=floquet,
        alpha_det2=det2,
        alpha_log_a=log_a,
        cross_discrepancy=worst,
        hamiltonians=hamiltonians(q, kappa, alpha_value=a_density),
        determinant_identity=det_identity,
        verdict=verdict,
    )


# ---------------------------------------------------------------------------
# Hamiltonians


def _integral_of_power(q: Profile, *arrays):
    """Exact integral of a product of band-limited sample arrays (2n padding)."""
    fine = np.ones(2 * q.n)
    for arr in arrays:
        fine = fine * padded(np.asarray(arr, dtype=float))
    return float(np.mean(fine)) * q.length


def momentum(q: Profile):
    return 0.5 * _integral_of_power(q, q.samples, q.samples)


def mass(q: Profile):
    return q.integral()


def h_kdv(q: Profile):
    dq = spectral_diff(q.samples, q.length, 1)
    return 0.5 * _integral_of_power(q, dq, dq) + _integral_of_power(q, q.samples, q.samples, q.samples)


def h_5th(q: Profile):
    s = q.samples
    d1 = spectral_diff(s, q.length, 1)
    d2 = spectral_diff(s, q.length, 2)
    return (
        0.5 * _integral_of_power(q, d2, d2)
        + 5 * _integral_of_power(q, s, d1, d1)
        + 2.5 * _integral_of_power(q, s, s, s, s)
    )


def h_kappa(q: Profile, kappa, alpha_value=None):
    a = _alpha_density(q, kappa) if alpha_value is None else alpha_value
    return -16 * kappa**5 * a + 2 * kappa**2 * 2 * momentum(q)


def h_5th_kappa(q: Profile, kappa, alpha_value=None):
    a = _alpha_density(q, kappa) if alpha_value is None else alpha_value
    return 64 * kappa**7 * a - 16 * kappa**4 * momentum(q) + 4 * kappa**2 * h_kdv(q)


def hamiltonians(q: Profile, kappa, alpha_value=None) -> dict:
    """mass, P, H_KdV, H_kappa, H_5th and H^5th_kappa."""
    a = _alpha_density(q, kappa) if alpha_value is None else alpha_value
    return {
        "mass": mass(q),
        "momentum": momentum(q),
        "h_kdv": h_kdv(q),
        "h_kappa": h_kappa(q, kappa, a),
        "h_5th": h_5th(q),
        "h_5th_kappa": h_5th_kappa(q, kappa, a),
    }


# ---------------------------------------------------------------------------
# derivative checks


def alpha_gradient_check(q: Profile, kappa, f: Profile, eps=1e-5, delta=schrodinger.DELTA_ADMISS):
    """|central difference of alpha along f - int (1/(2 kappa) - g) f|."""
    plus, minus = q + f * eps, q - f * eps
    for p in (plus, minus):
        _admissible_or_raise(p, kappa, delta)
    diff = (_alpha_density(plus, kappa) - _alpha_density(minus, kappa)) / (2 * eps)
    u = schrodinger.elliptic_solve(q, kappa).g_offset
    pairing = -float(np.sum(u * f.samples)) * q.dx
    return abs(diff - pairing)


def kappa_derivative_check(q: Profile, kappa, dkappa=1e-4):
    """|d alpha / d kappa (finite difference) + 2 kappa int (g - 1/(2 kappa) + q/(4 kappa^3))|."""
    schrodinger._check_kappa(kappa)
    if kappa - dkappa >= 1:
        diff = (_alpha_density(q, kappa + dkappa) - _alpha_density(q, kappa - dkappa)) / (2 * dkappa)
    else:
        # one-sided second-order stencil keeps every evaluation at kappa >= 1
        a0, a1, a2 = (_alpha_density(q, kappa + j * dkappa) for j in range(3))
        diff = (-3 * a0 + 4 * a1 - a2) / (2 * dkappa)
    u = schrodinger.elliptic_solve(q, kappa).g_offset
    rhs = -2 * kappa * (float(np.sum(u)) * q.dx + q.integral() / (4 * kappa**3))
    return abs(diff - rhs)


# ---------------------------------------------------------------------------
# equicontinuity diagnostics


def quadratic_comparison(q: Profile, kappa):
    """(1/kappa) sum |q^|^2 / (xi^2 + 4 kappa^2), the squared H^-1_kappa norm over kappa."""
    return float(np.sum(np.abs(q.spectrum) ** 2 / (q.xi**2 + 4 * kappa**2)) * q.dxi) / kappa


def equicontinuity_profile(q: Profile, kappas, band=EQUICONTINUITY_BAND, delta=schrodinger.DELTA_ADMISS):
    """Rows of (kappa, kappa alpha, comparison, ratio alpha/comparison, in_band)."""
    rows = []
    for kappa in kappas:
        a = alpha(q, kappa, delta=delta)
        comp = quadratic_comparison(q, kappa)
        ratio = a / comp if comp > 0 else math.nan
        rows.append(
            {
                "kappa": float(kappa),
                "alpha": a,
                "kappa_alpha": kappa * a,
                "comparison": comp,
                "ratio": ratio,
                "in_band": bool(comp == 0 or (1 / band <= ratio <= band)),
            }
        )
    return rows


def hs_alpha_integral(q: Profile, s, kappa0, nodes=48, span=64.0):
    """Both sides of int_{kappa0}^inf alpha kappa^(2+2s) d kappa ~ sum |q^|^2 (xi^2 + 4 kappa0^2)^s.

    Gauss-Legendre in log kappa over [kappa0, span kappa0] plus the tail of
    alpha ~ C kappa^-3 beyond.
    """
    if not -1 < s < 0:
        raise ConfigurationError("s must lie in (-1, 0)")
    schrodinger._check_kappa(kappa0)
    rhs = float(np.sum(np.abs(q.spectrum) ** 2 * (q.xi**2 + 4 * kappa0**2) ** s) * q.dxi)
    if not np.any(q.samples):
        return 0.0, rhs
    x, w = np.polynomial.legendre.leggauss(nodes)
    lo, hi = math.log(kappa0), math.log(span * kappa0)
    logk = 0.5 * (hi - lo) * x + 0.5 * (hi + lo)
    ks = np.exp(logk)
    vals = np.array([_alpha_density(q, k) for k in ks])
    lhs = 0.5 * (hi - lo) * float(np.sum(w * vals * ks ** (3 + 2 * s)))
    kmax = span * kappa0
    a_max = _alpha_density(q, kmax)
    lhs += a_max * kmax ** (3 + 2 * s) / (-2 * s)
    return lhs, rhs
