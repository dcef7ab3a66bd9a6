"""The operator -d^2 + q at energy -kappa^2.

Three independent routes produce the diagonal Green's function g(x; kappa, q):

``elliptic``
    Spectral Galerkin solve of the linear third-order equation
    ``g''' = 2 (q g)' + 2 q g' + 4 kappa^2 g'``.  Its periodic solutions are
    spanned by g itself, so g is the normalized null vector; the scale is
    fixed by the first integral ``-2 g g'' + g'^2 + 4 (q + kappa^2) g^2 = 1``.
    This is spectrally accurate, cheap, and returns ``g - 1/(2 kappa)``
    without cancellation, which the flows need.
``weyl``
    Shooting with classical RK4 and Richardson step halving.  On the circle
    the Weyl solutions are the Floquet eigen-solutions of the monodromy; on
    a line box they are shot inwards from the free asymptotics at +-L.
    Then ``g = psi_+ psi_- / W``.
``resolvent`` (circle only)
    Truncated Fourier matrix of the periodic operator, ``g = tanh(gamma/2)
    G_per(x, x)`` with gamma read off the truncated determinant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    AccuracyError,
    ConfigurationError,
    InconsistencyError,
    SpectrumIntersection,
    UsageError,
)
from .spectral import CIRCLE, LINE, Profile, h_minus1_norm, padded, product, spectral_diff, l2_norm

ROUTES = ("elliptic", "weyl", "resolvent")
DELTA_ADMISS = 0.1
GAMMA_TOL = 1e-11
ROUTE_CONSISTENCY_TOL = 1e-5


@dataclass(frozen=True, eq=False)
class SchrodingerSolve:
    """Result of one solve at energy -kappa^2.

    ``g_offset`` holds ``g - 1/(2 kappa)`` computed without cancellation
    when the route allows it.  Route-specific fields are ``None`` when the
    route does not produce them.
    """

    kappa: float
    route: str
    g: Profile
    g_offset: np.ndarray
    gamma: float | None = None
    monodromy: np.ndarray | None = None
    psi_plus: np.ndarray | None = None
    psi_minus: np.ndarray | None = None
    wronskian_drift: float | None = None
    log_a: float | None = None
    extras: dict = field(default_factory=dict, repr=False)

    def in_band(self, slack=1e-12):
        k = self.kappa
        s = self.g.samples
        return bool(np.all(s >= 1 / (4 * k) - slack) and np.all(s <= 3 / (4 * k) + slack))

    def to_json_dict(self):
        out = {"kappa": self.kappa, "gamma": self.gamma, "g": self.g.samples.tolist(), "route": self.route}
        if self.monodromy is not None:
            out["monodromy"] = np.asarray(self.monodromy).tolist()
        if self.log_a is not None:
            out["log_a"] = self.log_a
        return out


@dataclass(frozen=True)
class AdmissibilityVerdict:
    ok: bool
    kappa_scaled_norm: float
    g_range_ok: bool
    message: str


def _check_kappa(kappa):
    if not (np.isfinite(kappa) and kappa >= 1):
        raise ConfigurationError(f"kappa must be >= 1, got {kappa}")


# ---------------------------------------------------------------------------
# elliptic route


def _symmetric_coefficients(coeffs):
    """Coefficients of a real grid function on k = -n/2..n/2, Nyquist split."""
    n = coeffs.size
    half = n // 2
    out = np.zeros(n + 1, dtype=complex)
    out[half:] = np.concatenate([coeffs[:half], [coeffs[half] / 2]])
    out[:half] = coeffs[half:]
    out[0] = coeffs[half] / 2
    return out


def _fold_to_grid(modes, n):
    """Samples on an n-grid of the trigonometric sum over k = -M..M."""
    m = (modes.size - 1) // 2
    ks = np.arange(-m, m + 1) % n
    bins = np.zeros(n, dtype=complex)
    np.add.at(bins, ks, modes)
    return np.fft.ifft(bins).real * n


_INDEX_CACHE: dict = {}


def _difference_index(n):
    if n not in _INDEX_CACHE:
        k = np.arange(-(n // 2), n // 2 + 1)
        _INDEX_CACHE[n] = (k, k[:, None] - k[None, :])
    return _INDEX_CACHE[n]


DENSE_ELLIPTIC_MAX = 64
ITERATIVE_MAX_SWEEPS = 200


def _elliptic_dense(qsym, xi, kappa):
    n = qsym.size - 1
    half = n // 2
    _, diff = _difference_index(n)
    lookup = np.zeros(2 * n + 1, dtype=complex)
    lookup[n - half : n + half + 1] = qsym
    qmat = lookup[diff + n]
    nz = xi != 0
    xi_nz = xi[nz]
    denom = xi_nz * (xi_nz**2 + 4 * kappa**2)
    sub = qmat[np.ix_(nz, nz)]
    mat = np.eye(n) + 2 * sub * (xi_nz[:, None] + xi_nz[None, :]) / denom[:, None]
    rhs = -2 * qmat[nz, half] / (xi_nz**2 + 4 * kappa**2)
    try:
        w_nz = np.linalg.solve(mat, rhs)
    except np.linalg.LinAlgError as exc:
        raise SpectrumIntersection(f"elliptic system singular at kappa={kappa}") from exc
    w = np.zeros(n + 1, dtype=complex)
    w[nz] = w_nz
    return w


def _elliptic_iterative(qsym, xi, kappa):
    """Fixed-point sweeps with FFT convolutions; None if they stall."""
    n = qsym.size - 1
    half = n // 2
    size = 2 * n + 2
    q_ft = np.fft.fft(qsym, size)

    def conv(a):
        return np.fft.ifft(q_ft * np.fft.fft(a, size))[half : half + n + 1]

    nz = xi != 0
    scale = np.zeros_like(xi)
    scale[nz] = 2 / (xi[nz] * (xi[nz] ** 2 + 4 * kappa**2))
    rhs = np.zeros(n + 1, dtype=complex)
    rhs[nz] = -2 * qsym[nz] / (xi[nz] ** 2 + 4 * kappa**2)
    w = rhs.copy()
    for _ in range(ITERATIVE_MAX_SWEEPS):
        new = rhs - scale * (conv(xi * w) + xi * conv(w))
        change = np.max(np.abs(new - w))
        w = new
        if not np.isfinite(change):
            return None
        if change <= 1e-16 * max(np.max(np.abs(w)), 1e-300):
            return w
    return None


def elliptic_offset(samples, length, kappa):
    """``g - 1/(2 kappa)`` on the grid by the spectral elliptic route.

    ``samples`` are the potential values on a periodic grid of the given
    period.  Returns ``(offset, modes)`` where ``modes`` are the Fourier
    modes of the offset on k = -n/2..n/2.
    """
    samples = np.asarray(samples, dtype=float)
    n = samples.size
    half = n // 2
    qsym = _symmetric_coefficients(np.fft.fft(samples) / n)
    k = np.arange(-half, half + 1)
    xi = 2 * np.pi * k / length
    w = None
    if n > DENSE_ELLIPTIC_MAX:
        w = _elliptic_iterative(qsym, xi, kappa)
    if w is None:
        w = _elliptic_dense(qsym, xi, kappa)
    v = w.copy()
    v[half] = 1.0
    # first integral, split so that its deviation from 4 kappa^2 is computed directly
    vv = np.convolve(v, v)  # modes -n..n
    qv2 = np.sum(qsym * vv[n - half : n + half + 1][::-1]).real
    small = np.sum(np.abs(w) ** 2) + (3 * np.sum(xi**2 * np.abs(w) ** 2) + 4 * qv2) / (4 * kappa**2)
    if not 1 + small > 0:
        raise SpectrumIntersection(f"first integral is not positive at kappa={kappa}")
    shrink = math.expm1(-0.5 * math.log1p(small))  # (1 + small)^(-1/2) - 1
    base = 1 / (2 * kappa)
    modes = base * (1 + shrink) * w
    modes[half] = base * shrink
    return _fold_to_grid(modes, n), modes


# ---------------------------------------------------------------------------
# RK4 shooting


def _rk4_propagators(qfine, h, kappa):
    """One-step RK4 propagators of (psi, psi')' = [[0,1],[q+k^2,0]] (psi, psi')."""
    a0 = qfine[0:-1:2] + kappa**2
    ah = qfine[1::2] + kappa**2
    a1 = qfine[2::2] + kappa**2
    nstep = a0.size
    eye = np.broadcast_to(np.eye(2), (nstep, 2, 2))

    def times_a(a, y):
        out = np.empty_like(y)
        out[:, 0, :] = y[:, 1, :]
        out[:, 1, :] = a[:, None] * y[:, 0, :]
        return out

    k1 = times_a(a0, eye)
    k2 = times_a(ah, eye + 0.5 * h * k1)
    k3 = times_a(ah, eye + 0.5 * h * k2)
    k4 = times_a(a1, eye + h * k3)
    return eye + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)


def _ordered_product(props):
    """P_{N-1} ... P_1 P_0 by pairwise reduction."""
    mats = props
    while mats.shape[0] > 1:
        if mats.shape[0] % 2:
            tail = mats[-1:]
            mats = mats[:-1]
        else:
            tail = None
        mats = np.matmul(mats[1::2], mats[0::2])
        if tail is not None:
            mats = np.concatenate([mats, tail])
    return mats[0]


def _sweep(props, start, forward):
    """Propagate a 2-vector through all steps with renormalization.

    Returns normalized vectors at every node and the accumulated log scale.
    """
    p = props.reshape(-1, 4).tolist()
    nstep = len(p)
    ys = np.empty((nstep + 1, 2))
    logs = np.empty(nstep + 1)
    a, b = float(start[0]), float(start[1])
    s = abs(a) + abs(b)
    a, b = a / s, b / s
    acc = math.log(s)
    order = range(nstep) if forward else range(nstep - 1, -1, -1)
    idx = 0 if forward else nstep
    ys[idx] = (a, b)
    logs[idx] = acc
    for k in order:
        p00, p01, p10, p11 = p[k]
        if forward:
            a, b = p00 * a + p01 * b, p10 * a + p11 * b
            idx = k + 1
        else:
            det = p00 * p11 - p01 * p10
            a, b = (p11 * a - p01 * b) / det, (p00 * b - p10 * a) / det
            idx = k
        s = abs(a) + abs(b)
        a, b = a / s, b / s
        acc += math.log(s)
        ys[idx] = (a, b)
        logs[idx] = acc
    return ys, logs


def _fine_potential(q: Profile, refine):
    """Potential at half-steps of a grid refined ``refine`` times, endpoint included."""
    fine = padded(q.samples, 2 * refine)
    return np.concatenate([fine, fine[:1]])


def _initial_refinement(q, kappa):
    h_target = 0.1 / max(kappa, 1.0)
    r = 1
    while q.dx / r > h_target:
        r *= 2
    return r


def _shoot_level(q: Profile, kappa, refine):
    """One RK4 shooting pass at a fixed refinement."""
    h = q.dx / refine
    props = _rk4_propagators(_fine_potential(q, refine), h, kappa)
    out = {"props": props, "refine": refine, "h": h}
    if q.geometry == CIRCLE:
        mono = _ordered_product(props)
        tr = mono[0, 0] + mono[1, 1]
        if not tr > 2 + 1e-12:
            raise SpectrumIntersection(f"tr M = {tr:.15g} <= 2 at kappa={kappa}")
        gamma = math.acosh(tr / 2)
        out.update(monodromy=mono, gamma=gamma, key=gamma)
        lam_minus, lam_plus = math.exp(gamma), math.exp(-gamma)
        v_minus = _eigvec(mono, lam_minus)
        v_plus = _eigvec(mono, lam_plus)
        ym, lm = _sweep(props, v_minus, forward=True)
        yp, lp = _sweep(props, v_plus, forward=False)
    else:
        half = q.length / 2
        ym, lm = _sweep(props, (1.0, kappa), forward=True)
        lm = lm - kappa * half
        yp, lp = _sweep(props, (1.0, -kappa), forward=False)
        lp = lp - kappa * half
        y0, y1 = yp[0]
        log_a = math.log((kappa * y0 - y1) / (2 * kappa)) + lp[0] - kappa * half
        out.update(log_a=log_a, key=log_a)
    out.update(yp=yp, lp=lp, ym=ym, lm=lm)
    cross = yp[:, 0] * ym[:, 1] - yp[:, 1] * ym[:, 0]
    out["g_fine"] = yp[:, 0] * ym[:, 0] / cross
    out["cross"] = cross
    return out


def _eigvec(mono, lam):
    m00, m01, m10, m11 = mono.ravel()
    c1 = np.array([m01, lam - m00])
    c2 = np.array([lam - m11, m10])
    v = c1 if np.abs(c1).sum() >= np.abs(c2).sum() else c2
    if v[0] < 0:
        v = -v
    return v / np.abs(v).sum()


def _shoot(q: Profile, kappa, tol=GAMMA_TOL, max_steps=2**21):
    """RK4 shooting with step halving until the key quantity stabilizes."""
    refine = _initial_refinement(q, kappa)
    coarse = _shoot_level(q, kappa, refine)
    while True:
        refine *= 2
        if q.n * refine > max_steps:
            raise AccuracyError(f"shooting did not converge to {tol:g} at kappa={kappa}")
        fine = _shoot_level(q, kappa, refine)
        if abs(fine["key"] - coarse["key"]) < tol:
            return coarse, fine
        coarse = fine


def _extrapolate(fine_val, coarse_val):
    return (16 * fine_val - coarse_val) / 15


def weyl_solve(q: Profile, kappa, tol=GAMMA_TOL) -> SchrodingerSolve:
    """Weyl-route solve (RK4 shooting with Richardson extrapolation)."""
    _check_kappa(kappa)
    coarse, fine = _shoot(q, kappa, tol)
    rc, rf = coarse["refine"], fine["refine"]
    g_coarse = coarse["g_fine"][: q.n * rc : rc]
    g_fine = fine["g_fine"][: q.n * rf : rf]
    g = _extrapolate(g_fine, g_coarse)
    if np.any(g <= 0) or np.any(fine["g_fine"] <= 0):
        raise SpectrumIntersection(f"Weyl product changes sign at kappa={kappa}")
    # pointwise Wronskian with the accumulated scales, relative to x = left
    yp, ym, lp, lm = fine["yp"], fine["ym"], fine["lp"], fine["lm"]
    if np.any(yp[:, 0] <= 0) or np.any(ym[:, 0] <= 0):
        raise SpectrumIntersection(f"Weyl solution changes sign at kappa={kappa}")
    log_w = np.log(np.abs(fine["cross"])) + lp + lm
    drift = float(np.max(np.abs(np.expm1(log_w - log_w[0]))))
    if drift > 1e-6:
        raise AccuracyError(f"Wronskian drift {drift:.3g} exceeds 1e-6")
    nodes = slice(0, q.n * rf, rf)
    psi_scale = -0.5 * log_w[0]
    with np.errstate(over="ignore"):
        psi_plus = yp[nodes, 0] * np.exp(lp[nodes] + psi_scale)
        psi_minus = ym[nodes, 0] * np.exp(lm[nodes] + psi_scale)
    kwargs = {}
    if q.geometry == CIRCLE:
        kwargs["gamma"] = _extrapolate(fine["gamma"], coarse["gamma"])
        kwargs["monodromy"] = fine["monodromy"]
    else:
        kwargs["log_a"] = _extrapolate(fine["log_a"], coarse["log_a"])
    return SchrodingerSolve(
        kappa=float(kappa),
        route="weyl",
        g=q.with_samples(g),
        g_offset=g - 1 / (2 * kappa),
        psi_plus=psi_plus,
        psi_minus=psi_minus,
        wronskian_drift=drift,
        extras={"shooting": fine},
        **kwargs,
    )


def monodromy(q: Profile, kappa, tol=GAMMA_TOL):
    """Period map M over [0, 1] and the Floquet exponent gamma = arccosh(tr M / 2)."""
    if q.geometry != CIRCLE:
        raise UsageError("monodromy is defined for circle profiles")
    _check_kappa(kappa)
    coarse, fine = _shoot(q, kappa, tol)
    return fine["monodromy"], _extrapolate(fine["gamma"], coarse["gamma"])


def weyl_solutions(q: Profile, kappa):
    """Weyl solutions psi_+ and psi_- on the grid, normalized to unit Wronskian."""
    s = weyl_solve(q, kappa)
    return s.psi_plus, s.psi_minus


# ---------------------------------------------------------------------------
# resolvent route


def _free_diag_sum(kappa, m):
    k = np.arange(-m, m + 1)
    return float(np.sum(1.0 / ((2 * np.pi * k) ** 2 + kappa**2)))


def _free_diag_exact(kappa, theta=0.0):
    """Sum over xi in 2 pi Z of 1/((xi + theta)^2 + kappa^2).

    Equals sinh(kappa) / (2 kappa (cosh(kappa) - cos(theta))); at theta = 0
    this is coth(kappa/2) / (2 kappa).
    """
    e1, e2 = math.exp(-kappa), math.exp(-2 * kappa)
    return (1 - e2) / (2 * kappa * (1 + e2 - 2 * math.cos(theta) * e1))


def _periodic_matrix(q: Profile, kappa, m, theta=0.0):
    """(xi+theta)^2 + kappa^2 on the diagonal plus the convolution by q^."""
    n = q.n
    half = n // 2
    qsym = _symmetric_coefficients(q.coefficients)
    k = np.arange(-m, m + 1)
    diff = k[:, None] - k[None, :]
    lookup = np.zeros(4 * m + 1, dtype=complex)
    span = min(half, 2 * m)
    lookup[2 * m - span : 2 * m + span + 1] = qsym[half - span : half + span + 1]
    qmat = lookup[diff + 2 * m]
    d = (2 * np.pi * k + theta) ** 2 + kappa**2
    return qmat, d, k


def _default_m(q):
    return q.n


def periodic_resolvent_diag(q: Profile, kappa, m=None, tail_correction=True) -> Profile:
    """Diagonal of the periodic resolvent (-d^2 + q + kappa^2)^{-1} on [0, 1].

    Built from the (2m+1)x(2m+1) Fourier matrix.  With ``tail_correction``
    the free part of the frequencies beyond m is added in closed form.
    """
    if q.geometry != CIRCLE:
        raise UsageError("the periodic resolvent is defined for circle profiles")
    _check_kappa(kappa)
    m = _default_m(q) if m is None else int(m)
    if m < 1:
        raise ConfigurationError("truncation dimension m must be >= 1")
    qmat, d, k = _periodic_matrix(q, kappa, m)
    a = qmat + np.diag(d)
    try:
        np.linalg.cholesky(a)
        inv = np.linalg.inv(a)
    except np.linalg.LinAlgError as exc:
        raise SpectrumIntersection(f"periodic resolvent matrix not positive at kappa={kappa}") from exc
    diff = (k[:, None] - k[None, :]).ravel() + 2 * m
    diag_sums = np.bincount(diff, weights=inv.real.ravel(), minlength=4 * m + 1) + 1j * np.bincount(
        diff, weights=inv.imag.ravel(), minlength=4 * m + 1
    )
    values = _fold_to_grid(diag_sums, q.n)
    if tail_correction:
        values = values + (_free_diag_exact(kappa) - _free_diag_sum(kappa, m))
    return q.with_samples(values)


def truncated_logdet(q: Profile, kappa, m=None, theta=0.0, tail_correction=True):
    """log det(1 + K) for K = D^{-1/2} Q D^{-1/2} on the Bloch fiber ``theta``.

    With ``tail_correction`` the trace of the frequencies beyond the window
    is added in closed form (exact at first order) when ``theta == 0``.
    """
    m = _default_m(q) if m is None else int(m)
    qmat, d, _ = _periodic_matrix(q, kappa, m, theta)
    sq = np.sqrt(d)
    mat = np.eye(d.size) + qmat / sq[:, None] / sq[None, :]
    try:
        chol = np.linalg.cholesky(mat)
    except np.linalg.LinAlgError as exc:
        raise SpectrumIntersection(f"1 + K not positive at kappa={kappa}") from exc
    logdet = 2 * float(np.sum(np.log(np.diag(chol).real)))
    if tail_correction and theta == 0.0:
        logdet += q.coefficients[0].real * (_free_diag_exact(kappa) - _free_diag_sum(kappa, m))
    return logdet


def floquet_logdet(gamma, kappa):
    """log(e^g - 2 + e^-g) - log(e^k - 2 + e^-k), written to avoid overflow."""

    def log_term(t):
        return t + 2 * math.log1p(-math.exp(-t))

    return log_term(gamma) - log_term(kappa)


def resolvent_gamma(q: Profile, kappa, m=None):
    """Floquet exponent from the truncated periodic determinant.

    Solves cosh(gamma) - 1 = (cosh(kappa) - 1) det(1 + K).
    """
    ld = truncated_logdet(q, kappa, m)
    if kappa < 30:
        return math.acosh(1 + (math.cosh(kappa) - 1) * math.exp(ld))
    # large kappa: gamma + 2 log(1 - e^-gamma) = target, a contraction here
    target = kappa + 2 * math.log1p(-math.exp(-kappa)) + ld
    gamma = target
    for _ in range(100):
        new = target - 2 * math.log1p(-math.exp(-gamma))
        if abs(new - gamma) <= 1e-16 * abs(new):
            return new
        gamma = new
    return gamma


def resolvent_solve(q: Profile, kappa, m=None) -> SchrodingerSolve:
    """Resolvent-route solve on the circle: g = tanh(gamma/2) G_per(x, x)."""
    if q.geometry != CIRCLE:
        raise UsageError("the resolvent route is available on the circle only")
    _check_kappa(kappa)
    gamma = resolvent_gamma(q, kappa, m)
    g = math.tanh(gamma / 2) * periodic_resolvent_diag(q, kappa, m).samples
    if np.any(g <= 0):
        raise SpectrumIntersection(f"resolvent diagonal not positive at kappa={kappa}")
    return SchrodingerSolve(
        kappa=float(kappa), route="resolvent", g=q.with_samples(g), g_offset=g - 1 / (2 * kappa), gamma=gamma
    )


# ---------------------------------------------------------------------------
# public entry points


def elliptic_solve(q: Profile, kappa) -> SchrodingerSolve:
    """Elliptic-route solve; works on the circle and on line boxes."""
    _check_kappa(kappa)
    offset, modes = elliptic_offset(q.samples, q.length, kappa)
    base = 1 / (2 * kappa)
    g = base + offset
    if np.any(g <= 0):
        raise SpectrumIntersection(f"diagonal Green's function not positive at kappa={kappa}")
    gamma = None
    if q.geometry == CIRCLE:
        # gamma = int 1/(2g) = kappa - int (kappa - 1/(2g))
        gamma = kappa - float(np.mean(2 * kappa**2 * offset / (1 + 2 * kappa * offset)))
    return SchrodingerSolve(
        kappa=float(kappa),
        route="elliptic",
        g=q.with_samples(g),
        g_offset=offset,
        gamma=gamma,
        extras={"modes": modes},
    )


def solve(q: Profile, kappa, route="elliptic") -> SchrodingerSolve:
    """Solve at energy -kappa^2 by the requested route."""
    if route == "elliptic":
        return elliptic_solve(q, kappa)
    if route == "weyl":
        return weyl_solve(q, kappa)
    if route == "resolvent":
        return resolvent_solve(q, kappa)
    raise ConfigurationError(f"unknown route {route!r}; expected one of {ROUTES}")


def greens_diag(q: Profile, kappa, route="elliptic") -> Profile:
    """Diagonal Green's function g(x; kappa, q)."""
    return solve(q, kappa, route).g


def check_routes(q: Profile, kappa, routes=("elliptic", "weyl", "resolvent"), tol=ROUTE_CONSISTENCY_TOL):
    """Solve by several routes and return the max pairwise relative discrepancy.

    Raises ``InconsistencyError`` when it exceeds ``tol``.
    """
    if q.geometry != CIRCLE:
        routes = tuple(r for r in routes if r != "resolvent")
    gs = [solve(q, kappa, r).g.samples for r in routes]
    worst = 0.0
    for i in range(len(gs)):
        for j in range(i + 1, len(gs)):
            worst = max(worst, float(np.max(np.abs(gs[i] - gs[j]) / np.abs(gs[j]))))
    if worst > tol:
        raise InconsistencyError(f"routes {routes} disagree by {worst:.3g} at kappa={kappa}")
    return worst


def admissibility_check(q: Profile, kappa, delta=DELTA_ADMISS, solve_result: SchrodingerSolve | None = None):
    """Smallness guard; never raises."""
    try:
        norm = h_minus1_norm(q)
        scaled = norm / math.sqrt(kappa) if kappa > 0 else math.inf
    except Exception as exc:  # noqa: BLE001 - the guard must not throw
        return AdmissibilityVerdict(False, math.nan, False, f"norm evaluation failed: {exc}")
    messages = []
    norm_ok = bool(kappa >= 1)
    if not norm_ok:
        messages.append(f"kappa={kappa} < 1")
    if q.geometry == CIRCLE:
        if not scaled <= delta:
            norm_ok = False
            messages.append(f"kappa^-1/2 ||q||_H-1 = {scaled:.6g} > delta = {delta:g}")
    elif not norm <= delta:
        norm_ok = False
        messages.append(f"||q||_H-1 = {norm:.6g} > delta = {delta:g}")
    g_ok = True
    if solve_result is not None:
        g_ok = solve_result.in_band()
        if not g_ok:
            messages.append("g leaves the band [1/(4 kappa), 3/(4 kappa)]")
    ok = norm_ok and g_ok
    return AdmissibilityVerdict(ok, scaled, g_ok, "; ".join(messages) if messages else "admissible")


# ---------------------------------------------------------------------------
# residual checks


def elliptic_residual(solve_result: SchrodingerSolve, q: Profile) -> float:
    """Relative L^2 residual of g''' - 2(qg)' - 2 q g' - 4 kappa^2 g'."""
    k = solve_result.kappa
    length = q.length
    u = solve_result.g_offset
    qs = q.samples
    g3 = spectral_diff(u, length, 3)
    g1 = spectral_diff(u, length, 1)
    qg = qs / (2 * k) + product(qs, u)
    res = g3 - 2 * spectral_diff(qg, length, 1) - 2 * product(qs, g1) - 4 * k**2 * g1
    scale = l2_norm(g3, length)
    absolute = l2_norm(res, length)
    return absolute / scale if scale > 1e-14 else absolute


def _simpson(values, h):
    """Composite Simpson rule; a 3/8 panel absorbs an odd interval count."""
    m = values.size - 1
    if m <= 0:
        return 0.0
    if m == 1:
        return 0.5 * h * (values[0] + values[1])
    if m % 2 == 0:
        return h / 3 * (values[0] + values[-1] + 4 * values[1:-1:2].sum() + 2 * values[2:-1:2].sum())
    head = _simpson(values[: m - 2], h) if m > 3 else 0.0
    tail = values[m - 3 :]
    return head + 3 * h / 8 * (tail[0] + 3 * tail[1] + 3 * tail[2] + tail[3])


def greens_kernel_identity_check(q: Profile, kappa, stride=1) -> float:
    """Max relative residual of int G(x,y) G(y,x) / (2 g(y)^2) dy = g(x) on a line box.

    Uses the elementary form
    (1/2) int_{y<x} (psi_+(x)/psi_+(y))^2 + (1/2) int_{y>x} (psi_-(x)/psi_-(y))^2,
    integrated by Simpson on the shooting nodes, with the free tails beyond
    the box added in closed form.
    """
    if q.geometry != LINE:
        raise UsageError("the kernel identity check is defined on line boxes")
    s = weyl_solve(q, kappa)
    sh = s.extras["shooting"]
    r, h = sh["refine"], sh["h"]
    yp, lp, ym, lm = sh["yp"], sh["lp"], sh["ym"], sh["lm"]
    log_p = np.log(yp[:, 0]) + lp
    log_m = np.log(ym[:, 0]) + lm
    g_nodes = sh["g_fine"]
    worst = 0.0
    for j in range(0, q.n, stride):
        i = j * r
        left = np.exp(2 * (log_p[i] - log_p[: i + 1]))
        right = np.exp(2 * (log_m[i] - log_m[i:]))
        total = 0.5 * (_simpson(left, h) + _simpson(right, h))
        total += 0.5 * (left[0] + right[-1]) / (2 * kappa)
        worst = max(worst, abs(total - g_nodes[i]) / g_nodes[i])
    return worst
