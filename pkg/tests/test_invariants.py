import math

import numpy as np
import pytest

from conftest import cosine
from kdvlab import ConfigurationError, InadmissibleError, UsageError, invariants, profiles
from kdvlab.experiments import rescale
from kdvlab.spectral import Profile

ALPHA_CONST = 1 - math.sqrt(1.25) + 0.125  # kappa - sqrt(kappa^2 + c) + c / (2 kappa)
CIRCLE_ROUTES = ["density", "floquet", "det2"]


def constant(c, n=64):
    return Profile.circle(np.full(n, c))


def test_rho_vanishes_at_zero():
    assert np.max(np.abs(invariants.rho(constant(0.0), 1.0).samples)) == 0.0


def test_rho_constant_potential():
    assert np.allclose(invariants.rho(constant(0.25), 1.0).samples, ALPHA_CONST, rtol=1e-12)


@pytest.mark.parametrize("kappa", [1.0, 3.0])
def test_rho_single_mode_mean(kappa):
    eps = 0.01
    r = invariants.rho(cosine(64, eps), kappa)
    assert np.min(r.samples) >= -1e-9
    assert r.mean() == pytest.approx(eps**2 / (16 * kappa * (math.pi**2 + kappa**2)), rel=10 * eps)


def test_rho_rejects_nonpositive_g():
    with pytest.raises(invariants.schrodinger.SpectrumIntersection):
        invariants.rho(constant(0.0), 1.0, g=np.full(64, -1.0))


@pytest.mark.parametrize("route", CIRCLE_ROUTES)
def test_alpha_zero(route):
    assert invariants.alpha(constant(0.0), 1.0, route) == pytest.approx(0.0, abs=1e-13)


@pytest.mark.parametrize("route", CIRCLE_ROUTES)
def test_alpha_constant_potential(route):
    assert invariants.alpha(constant(0.25), 1.0, route, delta=1.0) == pytest.approx(ALPHA_CONST, rel=1e-9)


@pytest.mark.parametrize("route", CIRCLE_ROUTES)
def test_alpha_small_single_mode(route):
    leading = 1e-4 / (16 * (math.pi**2 + 1))
    assert invariants.alpha(cosine(64, 0.01), 1.0, route) == pytest.approx(leading, rel=0.02)


def test_alpha_line_routes_agree():
    q = profiles.gaussian(0.05, 2.0, n=128, half_width=20.0)
    a = invariants.alpha(q, 2.0, "density")
    b = invariants.alpha(q, 2.0, "log_a")
    assert invariants.relative_discrepancy(a, b) < 1e-7


@pytest.mark.parametrize("route, geometry_q", [("floquet", "line"), ("det2", "line"), ("log_a", "circle")])
def test_route_geometry_mismatch(route, geometry_q):
    q = profiles.gaussian(0.05, 2.0, n=64, half_width=20.0) if geometry_q == "line" else constant(0.0)
    with pytest.raises(UsageError):
        invariants.alpha(q, 1.0, route)


def test_unknown_alpha_route():
    with pytest.raises(ConfigurationError):
        invariants.alpha(constant(0.0), 1.0, "magic")


def test_inadmissible_alpha_refused():
    with pytest.raises(InadmissibleError) as info:
        invariants.alpha(profiles.random_profile(0, target_norm=1.0), 1.0)
    assert not info.value.verdict.ok


@pytest.mark.parametrize("seed", range(3))
def test_breakdown_routes_agree(seed):
    q = profiles.random_profile(seed, n=128)
    b = invariants.breakdown(q, 2.0)
    assert b.cross_discrepancy < 1e-7
    assert b.alpha_density >= -1e-10
    assert np.min(b.rho.samples) >= -1e-9
    d = b.determinant_identity
    assert abs(d["matrix_logdet"] - d["floquet_logdet"]) < 1e-7 * max(abs(d["floquet_logdet"]), 1e-5)
    assert set(b.routes()) == {"density", "floquet", "det2"}
    assert "rho" in b.to_json_dict()


def test_breakdown_line_has_log_a():
    b = invariants.breakdown(profiles.gaussian(0.05, 2.0, n=128, half_width=20.0), 1.0)
    assert b.alpha_log_a is not None and b.alpha_floquet is None
    assert b.cross_discrepancy < 1e-7


def test_breakdown_zero_profile():
    b = invariants.breakdown(constant(0.0), 1.0)
    assert b.cross_discrepancy < 1e-7
    assert all(v == pytest.approx(0.0, abs=1e-12) for v in b.hamiltonians.values())


@pytest.mark.parametrize(
    "q, f, kappa, tol",
    [
        (constant(0.0), cosine(64), 1.0, 1e-10),
        (cosine(64, 0.05), cosine(64), 2.0, 1e-8),
        (constant(0.1), constant(1.0), 1.0, 1e-8),
    ],
)
def test_alpha_gradient(q, f, kappa, tol):
    assert invariants.alpha_gradient_check(q, kappa, f, delta=1.0) < tol


def test_alpha_gradient_constant_closed_form():
    c, kappa = 0.1, 1.0
    u = invariants.schrodinger.elliptic_solve(constant(c), kappa).g_offset
    pairing = -float(np.mean(u))
    assert pairing == pytest.approx(-1 / (2 * math.sqrt(kappa**2 + c)) + 1 / (2 * kappa), rel=1e-12)


def test_alpha_gradient_second_order():
    q = Profile.from_function(lambda x: 0.05 * np.cos(2 * np.pi * x) + 0.02 * np.sin(4 * np.pi * x), 128)
    f = q.with_samples(10 * (np.cos(2 * np.pi * q.x) + np.cos(4 * np.pi * q.x)))
    r1 = invariants.alpha_gradient_check(q, 1.0, f, eps=1e-5, delta=10.0)
    r2 = invariants.alpha_gradient_check(q, 1.0, f, eps=5e-6, delta=10.0)
    assert r1 < 1e-8
    assert 3.5 <= r1 / r2 <= 4.5


@pytest.mark.parametrize("q, kappa, tol", [(constant(0.0), 1.5, 1e-12), (constant(0.25), 1.0, 1e-8)])
def test_kappa_derivative_closed_forms(q, kappa, tol):
    assert invariants.kappa_derivative_check(q, kappa) < tol


def test_kappa_derivative_random():
    assert invariants.kappa_derivative_check(profiles.random_profile(1, n=128), 2.0) < 1e-6


def test_hamiltonians_single_mode():
    h = invariants.hamiltonians(cosine(64), 1.0, alpha_value=0.0)
    assert h["mass"] == pytest.approx(0.0, abs=1e-15)
    assert h["momentum"] == pytest.approx(0.25, rel=1e-14)
    assert h["h_kdv"] == pytest.approx(math.pi**2, rel=1e-13)


def test_h_kappa_constant_potential():
    h = invariants.hamiltonians(constant(0.25), 1.0)
    assert h["h_kappa"] == pytest.approx(-16 * ALPHA_CONST + 2 * 0.0625, rel=1e-9)
    assert h["h_kappa"] == pytest.approx(0.0135439, rel=1e-5)


@pytest.mark.parametrize("kappa", [1.0, 2.0, 4.0])
def test_fifth_order_hamiltonian_consistency(kappa):
    h = invariants.hamiltonians(profiles.random_profile(2, n=128), kappa)
    lhs, rhs = h["h_5th_kappa"], 4 * kappa**2 * (h["h_kdv"] - h["h_kappa"])
    assert abs(lhs - rhs) < 1e-10 * max(abs(lhs), 4 * kappa**2 * (abs(h["h_kdv"]) + abs(h["h_kappa"])))


def test_equicontinuity_single_mode():
    rows = invariants.equicontinuity_profile(cosine(64, 0.05), [2, 4, 8, 16])
    ka = [r["kappa_alpha"] for r in rows]
    assert all(b < a for a, b in zip(ka, ka[1:]))
    assert all(r["in_band"] and 0.25 <= r["ratio"] <= 4 for r in rows)


def test_equicontinuity_zero():
    rows = invariants.equicontinuity_profile(constant(0.0), [2, 4])
    assert all(r["kappa_alpha"] == pytest.approx(0.0, abs=1e-14) and r["in_band"] for r in rows)


def test_equicontinuity_decay_slope():
    rows = invariants.equicontinuity_profile(cosine(128, 0.05), [32, 64, 128, 256])
    slope = np.polyfit(np.log([r["kappa"] for r in rows]), np.log([r["kappa_alpha"] for r in rows]), 1)[0]
    assert -2.3 <= slope <= -1.7


def test_hs_integral_zero():
    assert invariants.hs_alpha_integral(constant(0.0), -0.5, 2.0) == (0.0, 0.0)


def test_hs_integral_single_mode():
    lhs, rhs = invariants.hs_alpha_integral(cosine(64, 0.05), -0.5, 2.0)
    assert 1 / 8 <= lhs / rhs <= 8


@pytest.mark.parametrize("s", [-0.75, -0.5, -0.25])
def test_hs_integral_family(family, s):
    for q in family[:4]:
        lhs, rhs = invariants.hs_alpha_integral(q, s, 2.0, nodes=24)
        assert 1 / 8 <= lhs / rhs <= 8


def test_hs_integral_rejects_bad_exponent():
    with pytest.raises(ConfigurationError):
        invariants.hs_alpha_integral(constant(0.0), -1.5, 2.0)


def test_hs_integral_line_scaling():
    q = profiles.gaussian(0.05, 2.0, n=256, half_width=40.0)
    s, lam, k0 = -0.5, 2.0, 2.0
    lhs_lam, rhs_lam = invariants.hs_alpha_integral(rescale(q, lam), s, k0, nodes=24)
    lhs, rhs = invariants.hs_alpha_integral(q, s, k0 / lam, nodes=24)
    factor = lam ** (3 + 2 * s)
    assert rhs_lam == pytest.approx(factor * rhs, rel=1e-8)
    assert lhs_lam == pytest.approx(factor * lhs, rel=1e-4)


def test_line_alpha_scaling():
    q = profiles.gaussian(0.02, 2.0, n=512, half_width=40.0)
    a_lam = invariants.alpha(rescale(q, 2.0), 4.0)
    assert invariants.relative_discrepancy(a_lam, invariants.alpha(q, 2.0)) < 1e-6
