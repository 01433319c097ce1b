import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from jspec.errors import BoundedSemigroupError, StructuralError, ValidationError
from jspec.fixtures import control_tuple, f1, f2, f3, f5, random_commuting_tuple
from jspec.linalg_core import CommutingTuple, make_rng, semigroup_value
from jspec.stability import (
    GRID_NODES,
    Cone,
    cascade_solve,
    check_bounded_semigroup,
    fit_decay_rate,
    partial_semigroup_norms,
    rolewicz_check,
    shilov_spectral_bound,
    spectral_radius_at,
    stability_report,
    strong_stability_conditions,
)

SECTOR = Cone([[1.0, 1.0], [1.0, 2.0]])
DIAG2 = Cone.diagonal(2)
PAIR = CommutingTuple([np.diag([0.0, -1.0]), np.diag([-1.0, 0.0])])
CONTROL_CONE = Cone([[1.0]])


def f1_rate(u):
    u = np.asarray(u, dtype=float)
    return max(-u[0] - 3 * u[1], -2 * u[0] - 4 * u[1])


# -- cones ----------------------------------------------------------------------

def test_cone_validation():
    with pytest.raises(ValidationError):
        Cone([[1.0, 0.0]])
    with pytest.raises(ValidationError):
        Cone([[1.0, -1.0]])
    with pytest.raises(ValidationError):
        Cone([[np.nan, 1.0]])
    with pytest.raises(StructuralError):
        Cone(np.zeros((0, 2)))


def test_cone_geometry():
    assert np.allclose(np.linalg.norm(SECTOR.rays, axis=1), 1.0)
    assert SECTOR.is_solid() and not DIAG2.is_solid()
    assert SECTOR.contains([2.0, 3.0]) and not SECTOR.contains([3.0, 1.0])
    assert DIAG2.contains([0.0, 0.0]) and DIAG2.contains([4.0, 4.0]) and not DIAG2.contains([1.0, 2.0])
    rays = SECTOR.sample_rays(make_rng(0))
    assert rays.shape == (18, 2)
    assert np.allclose(rays.max(axis=1), 1.0)
    assert all(SECTOR.contains(r) for r in rays)
    pts = SECTOR.sample_points(make_rng(1), 100, 3.0)
    assert np.all(pts.max(axis=1) <= 3.0) and all(SECTOR.contains(p) for p in pts)


def test_cone_json_round_trip():
    back = Cone.from_json(SECTOR.to_json())
    assert np.array_equal(back.rays, SECTOR.rays) and back.sample_count == SECTOR.sample_count
    with pytest.raises(ValidationError):
        Cone.from_json({"nope": 1})


# -- precondition, bound and radii ------------------------------------------------

def test_bounded_semigroup_precondition():
    check_bounded_semigroup(f1())
    check_bounded_semigroup(f5())
    check_bounded_semigroup(CommutingTuple([np.diag([1j, -1.0])]))
    for bad in (f2(), f3(), CommutingTuple([np.array([[0.0, 1.0], [0.0, 0.0]])])):
        with pytest.raises(BoundedSemigroupError):
            check_bounded_semigroup(bad)
    with pytest.raises(BoundedSemigroupError):
        stability_report(f3(), SECTOR)


def test_shilov_spectral_bound_examples():
    assert shilov_spectral_bound(f1()) == pytest.approx(-4.0)
    assert shilov_spectral_bound(f5()) == pytest.approx(-1.0)
    assert shilov_spectral_bound(control_tuple()) == pytest.approx(0.0, abs=1e-12)


def test_spectral_radius_examples():
    r = spectral_radius_at(f1(), [1.0, 1.0])
    assert r.radius == pytest.approx(math.exp(-4)) and r.holds
    r = spectral_radius_at(f5(), [1.0, 1.0])
    assert r.radius == pytest.approx(math.exp(-1)) and r.holds
    for tup in (f1(), f2(), f3(), f5()):
        r = spectral_radius_at(tup, np.zeros(tup.n))
        assert r.radius == pytest.approx(1.0) and r.holds


@given(st.integers(0, 10_000), st.integers(1, 3), st.integers(2, 6))
def test_log_law_random_tuples(seed, n, d):
    tup = random_commuting_tuple(seed, n, d)
    rng = make_rng(seed)
    for u in rng.uniform(0.0, 2.0, (5, n)):
        assert spectral_radius_at(tup, u).holds


# -- decay fitting ----------------------------------------------------------------

def test_fit_decay_rate_exact_exponential():
    t = np.geomspace(0.05, 50.0, GRID_NODES)
    assert fit_decay_rate(t, 3.0 * np.exp(-0.7 * t)) == pytest.approx(-0.7, rel=1e-10)
    assert fit_decay_rate(t, np.zeros_like(t)) == -math.inf


def test_partial_norms_of_f5_stay_one():
    t = np.geomspace(0.05, 50.0, 20)
    for j in range(2):
        assert np.allclose(partial_semigroup_norms(f5(), j, t), 1.0, atol=1e-12)


# -- stability battery ------------------------------------------------------------

def test_f1_sector_all_true():
    rep = stability_report(f1(), SECTOR)
    assert rep.consistent and all(rep.verdicts.values()) and rep.counterexample is None
    # sup over the sampled rays of the closed-form rate, attained at (1/2, 1)
    expected = max(f1_rate(u) for u, _ in rep.fitted_rates)
    assert rep.omega_K == pytest.approx(expected, rel=1e-6)
    for u, w in rep.fitted_rates:
        assert w == pytest.approx(f1_rate(u), rel=1e-6)
    assert rep.s_bound == pytest.approx(-4.0)
    assert rep.epsilon == pytest.approx(abs(rep.omega_K) / 2)
    assert math.isfinite(rep.M_K) and rep.M_K >= 1.0


def test_f1_diagonal_ray_rate():
    rep = stability_report(f1(), DIAG2)
    assert rep.omega_K == pytest.approx(-4.0, rel=0.05)
    assert all(rep.verdicts.values())


def test_f5_interior_cone_stable_despite_partials():
    rep = stability_report(f5(), SECTOR)
    assert all(rep.verdicts.values()) and rep.consistent
    rep = stability_report(f5(), DIAG2)
    assert rep.omega_K == pytest.approx(-1.0, rel=0.05)


def test_control_all_false():
    rep = stability_report(control_tuple(), CONTROL_CONE)
    assert not any(rep.verdicts.values())
    assert rep.consistent and rep.M_K == math.inf


def test_pair_with_zero_partial_bounds_is_stable_on_diagonal():
    rep = stability_report(PAIR, DIAG2)
    assert spectral_radius_at(PAIR, [1.0, 1.0]).radius == pytest.approx(math.exp(-1))
    assert all(rep.verdicts.values())


def test_report_checks_dimensions_and_horizon():
    with pytest.raises(StructuralError):
        stability_report(f1(), CONTROL_CONE)
    with pytest.raises(ValidationError):
        stability_report(f1(), SECTOR, t_max=0.0)


def test_rates_scale_with_the_generators():
    base = stability_report(f1(), SECTOR, t_max=20.0)
    scaled = stability_report(CommutingTuple([2 * a for a in f1().matrices]), SECTOR, t_max=10.0)
    for (_, w1), (_, w2) in zip(base.fitted_rates, scaled.fitted_rates):
        assert w2 == pytest.approx(2 * w1, rel=1e-8)


def test_decay_envelope_bounded():
    for tup, cone in ((f1(), SECTOR), (f5(), SECTOR), (PAIR, DIAG2)):
        rep = stability_report(tup, cone)
        assert rep.omega_K < 0
        assert math.isfinite(rep.details["decay_envelope"])
        assert rep.details["decay_envelope"] <= rep.M_K * (1 + 1e-12)


@settings(max_examples=8)
@given(st.integers(0, 10_000), st.integers(2, 3), st.integers(2, 4))
def test_stable_random_tuples_are_consistent(seed, n, d):
    tup = random_commuting_tuple(seed, n, d, stable=True)
    rep = stability_report(tup, Cone.diagonal(n, 0), t_max=60.0)
    assert rep.s_bound < 0
    assert rep.consistent or rep.counterexample is not None
    assert rep.verdicts["1"] and rep.verdicts["2"] and rep.verdicts["3"]


def test_report_json_is_plain():
    payload = stability_report(f1(), SECTOR).to_json()
    assert set(payload["verdicts"]) == {str(k) for k in range(1, 11)}
    assert len(payload["radii"]) == 17 + 18


def test_report_deterministic():
    a = stability_report(f5(), SECTOR, seed=3).to_json()
    b = stability_report(f5(), SECTOR, seed=3).to_json()
    assert a == b


# -- integral criterion ---------------------------------------------------------------

def test_rolewicz_f1_matches_closed_form():
    res = rolewicz_check(f1(), SECTOR, power=1.0, vectors=[[1.0, 0.0]], seed=0)
    rays = SECTOR.sample_rays(make_rng(0))
    exact = float(np.mean([1.0 / (u[0] + 3 * u[1]) for u in rays]))
    assert res.all_finite and res.consistent and res.stability_verdict
    assert res.estimates[0] == pytest.approx(exact, rel=1e-8)
    assert res.max_tail_ratio < 1e-6


def test_rolewicz_f5_square_finite():
    res = rolewicz_check(f5(), SECTOR, power=2.0)
    assert res.all_finite and res.consistent
    assert res.max_tail_ratio < 1e-6


def test_rolewicz_control_diverges():
    res = rolewicz_check(control_tuple(), CONTROL_CONE, power=1.0, vectors=[[1.0, 0.0]])
    assert not res.all_finite
    assert "no decay" in res.diagnostics[0]
    assert res.consistent and not res.stability_verdict


def test_rolewicz_rejects_sublinear_power():
    with pytest.raises(ValidationError):
        rolewicz_check(f1(), SECTOR, power=0.5)


# -- strong stability -------------------------------------------------------------------

def test_strong_stability_f1():
    rep = strong_stability_conditions(f1(), SECTOR)
    assert rep.hypotheses_hold and rep.strongly_stable and rep.sequence_decay_verified
    assert all(len(p) == 0 for p in rep.axis_points)


def test_strong_stability_fails_with_imaginary_eigenvalue():
    tup = CommutingTuple([np.diag([1j, -1.0])])
    rep = strong_stability_conditions(tup, CONTROL_CONE)
    assert not rep.strongly_stable
    assert rep.ray_decay[0] == (False, True)
    assert any(abs(z - 1j) < 1e-9 for z in rep.axis_points[0])
    assert rep.sequence_decay_verified


def test_strong_stability_refuses_unbounded():
    with pytest.raises(BoundedSemigroupError):
        strong_stability_conditions(f3(), SECTOR)


# -- cascade ------------------------------------------------------------------------

@pytest.mark.parametrize("make", [f1, f5])
def test_cascade_matches_semigroup(make):
    tup = make()
    v0 = np.ones(tup.d)
    sol = cascade_solve(tup, v0, DIAG2, 7, 6, 3.0, 2.0)
    for i, a in enumerate(sol.t1):
        for k, b in enumerate(sol.t2):
            assert np.linalg.norm(sol.values[i, k] - semigroup_value(tup, [a, b]) @ v0) <= 1e-10
    assert sol.boundary_error <= 1e-12


def test_cascade_examples():
    sol = cascade_solve(f1(), [1.0, 1.0], DIAG2)
    assert sol.omega_K <= -4.0 + 1e-3
    assert sol.omega_K == pytest.approx(-4.0, rel=0.05)
    sol = cascade_solve(f5(), np.ones(5), DIAG2)
    assert sol.omega_K == pytest.approx(-1.0, rel=0.05)
    assert sol.M_K >= 1.0 - 1e-12
    rows = list(sol.rows())
    assert len(rows) == 400 and rows[0] == (0.0, 0.0, pytest.approx(math.sqrt(5)))


def test_cascade_zero_data():
    sol = cascade_solve(f1(), [0.0, 0.0], DIAG2)
    assert np.all(sol.values == 0) and sol.omega_K == -math.inf


def test_cascade_structural_errors():
    with pytest.raises(StructuralError):
        cascade_solve(CommutingTuple([np.eye(2)]), [1.0, 1.0], DIAG2)
    with pytest.raises(StructuralError):
        cascade_solve(f1(), [1.0, 1.0, 1.0], DIAG2)
