import math

import numpy as np
import pytest

from conftest import cosine
from kdvlab import ConfigurationError, IntegrationFailure, UsageError, flows, invariants, profiles
from kdvlab.flows import FlowSpec, evolve, g_evolution_residual, vector_field
from kdvlab.spectral import Profile, h_minus1_norm

KAPPA_OF = {"kdv": None, "fifth": None, "hk": 2.0, "diff": 2.0, "fifth_hk": 2.0, "fifth_diff": 2.0}


def spec_for(name, T=0.1, dt=1e-3, **kw):
    return FlowSpec(name, T=T, dt=dt, kappa=KAPPA_OF[name], **kw)


def final(q, name, T, dt, **kw):
    kw.setdefault("snapshot_interval", abs(T))
    kw.setdefault("diagnostics", False)
    kw.setdefault("check_admissibility", False)
    return evolve(q, spec_for(name, T=T, dt=dt, **kw)).final


# ---------------------------------------------------------------------------
# FlowSpec validation


@pytest.mark.parametrize(
    "kwargs",
    [
        {"hamiltonian": "burgers", "T": 1, "dt": 1e-3},
        {"hamiltonian": "hk", "T": 1, "dt": 1e-3},
        {"hamiltonian": "hk", "T": 1, "dt": 1e-3, "kappa": 0.5},
        {"hamiltonian": "kdv", "T": 1, "dt": 0.0},
        {"hamiltonian": "kdv", "T": 1, "dt": -1e-3},
        {"hamiltonian": "kdv", "T": math.inf, "dt": 1e-3},
        {"hamiltonian": "kdv", "T": 1, "dt": 1e-3, "stepper": "euler"},
    ],
)
def test_bad_specs_rejected(kwargs):
    with pytest.raises(ConfigurationError):
        FlowSpec(**kwargs)


@pytest.mark.parametrize("name, stepper", [("kdv", "etd4"), ("fifth", "etd4"), ("hk", "rk4_if"), ("fifth_diff", "rk4_if")])
def test_default_stepper(name, stepper):
    assert spec_for(name).stepper == stepper


def test_default_snapshot_interval():
    assert FlowSpec("kdv", T=-2.0, dt=1e-3).snapshot_interval == pytest.approx(2.0 / 64)


# ---------------------------------------------------------------------------
# vector fields


@pytest.mark.parametrize("name", flows.HAMILTONIANS)
def test_zero_is_fixed(name):
    assert np.max(np.abs(vector_field(Profile.circle(np.zeros(32)), spec_for(name)).samples)) == 0.0


@pytest.mark.parametrize("name", flows.HAMILTONIANS)
def test_constants_are_fixed(name):
    q = Profile.circle(np.full(32, 0.01))
    assert np.max(np.abs(vector_field(q, spec_for(name)).samples)) < 1e-13


@pytest.mark.parametrize("kappa", [2.0, 4.0])
def test_hk_linear_symbol(kappa):
    eps = 1e-6
    q = cosine(32, eps)
    v = vector_field(q, FlowSpec("hk", T=1, dt=1e-3, kappa=kappa))
    xi = 2 * math.pi
    predicted = 1j * xi * 4 * kappa**2 * xi**2 / (xi**2 + 4 * kappa**2) * q.coefficients[1]
    assert abs(v.coefficients[1] - predicted) < 1e-4 * abs(predicted)


def test_kdv_vector_field_formula():
    a, w = 0.1, 2 * math.pi
    q = cosine(64, a)
    c, s = np.cos(w * q.x), np.sin(w * q.x)
    expected = -(a * w**3 * s) + 6 * (a * c) * (-a * w * s)  # minus q_xxx plus 6 q q_x
    assert np.allclose(vector_field(q, spec_for("kdv")).samples, expected, atol=1e-10)


def test_fifth_vector_field_formula():
    a, w = 0.1, 2 * math.pi
    q = cosine(64, a)
    x = q.x
    c, s = np.cos(w * x), np.sin(w * x)
    q1, q2, q3, q5 = -a * w * s, -a * w**2 * c, a * w**3 * s, -a * w**5 * s
    qq = a * c
    expected = q5 - 20 * q1 * q2 - 10 * qq * q3 + 30 * qq**2 * q1
    assert np.allclose(vector_field(q, spec_for("fifth")).samples, expected, atol=1e-8 * np.max(np.abs(expected)))


def test_difference_fields_are_differences(small_line_bump):
    q = small_line_bump
    v = {name: vector_field(q, FlowSpec(name, T=1, dt=1e-3, kappa=KAPPA_OF[name])).samples for name in flows.HAMILTONIANS}
    assert np.allclose(v["diff"], v["kdv"] - v["hk"], atol=1e-13)
    assert np.allclose(v["fifth_diff"], v["fifth"] - v["fifth_hk"], atol=1e-12)
    assert np.allclose(v["fifth_hk"], 4 * 2.0**2 * v["diff"], atol=1e-12)


# ---------------------------------------------------------------------------
# evolution


def test_soliton_translates():
    c = 4.0
    q0 = profiles.soliton(c, n=512, half_width=20.0, x0=-5.0)
    traj = evolve(q0, FlowSpec("kdv", T=1.0, dt=1e-3, snapshot_interval=0.25, diagnostics=False))
    exact = profiles.soliton(c, n=512, half_width=20.0, x0=-5.0, t=1.0)
    assert np.max(np.abs(traj.final.samples - exact.samples)) < 1e-6
    assert np.all(np.diff(traj.times) > 0)


@pytest.mark.parametrize("name", flows.HAMILTONIANS)
def test_constant_unchanged(name):
    q = Profile.circle(np.full(32, 0.01))
    # a constant background adds a stiff 10 c xi^3 term to the fifth-order flows
    dt = 1e-6 if name.startswith("fifth") and name != "fifth_hk" else 1e-4
    out = final(q, name, 100 * dt, dt)
    assert np.max(np.abs(out.samples - 0.01)) < 1e-14


def test_tiny_mode_rotates_with_cubic_phase():
    eps, T = 1e-6, 1e-3
    q = cosine(32, eps)
    out = final(q, "kdv", T, 1e-5)
    xi = 2 * math.pi
    predicted = np.exp(1j * xi**3 * T) * q.coefficients[1]
    assert abs(out.coefficients[1] - predicted) < 1e-4 * eps


def test_diagnostics_recorded():
    q = profiles.gaussian(0.05, 4.0, n=128, half_width=32.0)
    traj = evolve(q, FlowSpec("kdv", T=0.1, dt=1e-3, snapshot_interval=0.05))
    assert len(traj.diagnostics) == len(traj.snapshots) == 3
    assert set(traj.diagnostics[0]) == {"mass", "momentum", "h_kdv", "alpha_1", "alpha_2"}


def test_backward_time_has_decreasing_times():
    q = profiles.gaussian(0.05, 4.0, n=128, half_width=32.0)
    traj = evolve(q, FlowSpec("kdv", T=-0.1, dt=1e-3, snapshot_interval=0.05, diagnostics=False))
    assert list(traj.times) == pytest.approx([0.0, -0.05, -0.1])


def test_stability_guard():
    with pytest.raises(ConfigurationError):
        q = profiles.gaussian(0.3, 1.0, n=256, half_width=20.0)
        evolve(q, FlowSpec("kdv", T=1.0, dt=0.5, snapshot_interval=1.0, diagnostics=False))


def test_inadmissible_start_aborts_with_partial_trajectory():
    q = profiles.random_profile(0, n=64, target_norm=1.0)
    with pytest.raises(IntegrationFailure) as info:
        evolve(q, FlowSpec("hk", T=0.01, dt=1e-3, kappa=1.0, diagnostics=False))
    traj = info.value.trajectory
    assert len(traj.snapshots) == 1 and traj.snapshots[0][0] == 0.0


def test_blowup_guard(monkeypatch):
    monkeypatch.setattr(flows, "BLOWUP_FACTOR", 0.0)
    q = profiles.gaussian(0.05, 4.0, n=128, half_width=32.0)
    with pytest.raises(IntegrationFailure, match="blow-up") as info:
        evolve(q, FlowSpec("kdv", T=0.1, dt=1e-3, snapshot_interval=0.05, diagnostics=False))
    assert len(info.value.trajectory.snapshots) == 1


# ---------------------------------------------------------------------------
# integrator accuracy

BUMP = dict(amplitude=0.3, width=1.0, n=256, half_width=20.0)


@pytest.mark.parametrize("name, dts", [("kdv", (0.01, 0.005, 0.0025)), ("hk", (0.01, 0.005, 0.0025)), ("fifth", (2e-4, 1e-4, 5e-5))])
def test_step_halving_fourth_order(name, dts):
    q = profiles.gaussian(**{**BUMP, "n": 128 if name == "fifth" else 256})
    runs = [final(q, name, 0.1, dt) for dt in dts]
    e1 = np.max(np.abs(runs[0].samples - runs[1].samples))
    e2 = np.max(np.abs(runs[1].samples - runs[2].samples))
    assert 8 <= e1 / e2 <= 24


@pytest.mark.parametrize("name, dt", [("kdv", 0.01), ("hk", 0.01), ("diff", 0.01), ("fifth", 1e-4)])
def test_time_reversal(name, dt):
    q = profiles.gaussian(**{**BUMP, "n": 128 if name == "fifth" else 256})
    forward = final(q, name, 0.1, dt)
    one_way = np.max(np.abs(forward.samples - final(q, name, 0.1, dt / 2).samples))
    back = final(forward, name, -0.1, dt)
    assert np.max(np.abs(back.samples - q.samples)) < 10 * one_way


def test_kdv_and_hk_commute():
    q = profiles.gaussian(**BUMP)
    dt = 0.01

    def compose(first, second, step):
        return final(final(q, first, 0.1, step), second, 0.1, step)

    a, b = compose("kdv", "hk", dt), compose("hk", "kdv", dt)
    self_error = h_minus1_norm(a - compose("kdv", "hk", dt / 2))
    assert h_minus1_norm(a - b) < 5 * self_error


# ---------------------------------------------------------------------------
# g-evolution identities

SNAP = 1e-4


@pytest.fixture(scope="module")
def kdv_traj():
    q = profiles.gaussian(0.05, 4.0, n=128, half_width=32.0)
    return evolve(q, FlowSpec("kdv", T=4 * SNAP, dt=SNAP, snapshot_interval=SNAP, diagnostics=False))


@pytest.mark.parametrize("varkappa", [1.0, 2.0])
def test_kdv_identities(kdv_traj, varkappa):
    res = g_evolution_residual(kdv_traj, varkappa)
    assert set(res) == set(flows.IDENTITIES["kdv"])
    assert all(v < 1e-5 for v in res.values())


def test_kdv_identities_fourth_order(kdv_traj):
    res = g_evolution_residual(kdv_traj, 2.0, order=4)
    assert all(v < 1e-6 for v in res.values())


def test_alpha_conserved_along_identity_trajectory(kdv_traj):
    a = [invariants.alpha(p, 2.0) for p in kdv_traj.profiles()]
    assert max(abs(v - a[0]) for v in a) < 1e-8


@pytest.mark.parametrize("name", ["hk", "diff", "fifth", "fifth_hk", "fifth_diff"])
def test_flow_identities(name):
    q = profiles.gaussian(0.05, 4.0, n=128, half_width=32.0)
    traj = evolve(q, FlowSpec(name, T=2 * SNAP, dt=SNAP, kappa=KAPPA_OF[name], snapshot_interval=SNAP, diagnostics=False))
    res = g_evolution_residual(traj, 1.0 if KAPPA_OF[name] else 2.0)
    assert set(res) == set(flows.IDENTITIES[name])
    assert all(v < 1e-5 for v in res.values())


def test_zero_trajectory_identities():
    q = profiles.zero(64, "line", half_width=10.0)
    traj = evolve(q, FlowSpec("kdv", T=2 * SNAP, dt=SNAP, snapshot_interval=SNAP, diagnostics=False))
    assert all(v == 0.0 for v in g_evolution_residual(traj, 2.0).values())


def test_identity_misuse(kdv_traj):
    with pytest.raises(UsageError):
        g_evolution_residual(kdv_traj, 2.0, identities=["inv_2g_hk"])
    q = profiles.gaussian(0.05, 4.0, n=128, half_width=32.0)
    traj = evolve(q, FlowSpec("hk", T=2 * SNAP, dt=SNAP, kappa=2.0, snapshot_interval=SNAP, diagnostics=False))
    with pytest.raises(UsageError):
        g_evolution_residual(traj, 2.0)
    short = flows.Trajectory(kdv_traj.spec, kdv_traj.snapshots[:2])
    with pytest.raises(UsageError):
        g_evolution_residual(short, 2.0)
    uneven = flows.Trajectory(kdv_traj.spec, [kdv_traj.snapshots[i] for i in (0, 1, 3)])
    with pytest.raises(UsageError):
        g_evolution_residual(uneven, 2.0)
