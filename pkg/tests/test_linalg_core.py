import json

import numpy as np
import pytest
import scipy.linalg as spla
from hypothesis import given, strategies as st

from conftest import point_set, same_points
from jspec.errors import ConvergenceError, DomainError, StructuralError, ValidationError
from jspec.fixtures import f1, f2, f3, pauli_pair, random_commuting_tuple
from jspec.linalg_core import (
    CommutingTuple,
    SpectrumPointSet,
    ToleranceConfig,
    as_complex_matrix,
    candidate_points,
    commutation_residual,
    joint_eigenvalues,
    make_rng,
    numerical_rank,
    semigroup_value,
    simultaneous_schur,
)


def test_tolerances_must_be_positive():
    with pytest.raises(DomainError):
        ToleranceConfig(tau_rank=0.0)
    with pytest.raises(DomainError):
        ToleranceConfig(tau_feas=-1.0)
    assert ToleranceConfig().as_dict()["tau_dedup"] == 1e-7


def test_square_matrices_required():
    with pytest.raises(StructuralError):
        as_complex_matrix(np.zeros((2, 3)))
    with pytest.raises(StructuralError):
        CommutingTuple([np.eye(2), np.eye(3)])
    m = as_complex_matrix([[1, 2], [3, 4]])
    assert m.dtype == complex and not m.flags.writeable


def test_pauli_pair_rejected():
    # ||[sx, sz]||_F = 2 sqrt(2)
    assert commutation_residual(pauli_pair()) == pytest.approx(2 * np.sqrt(2))
    with pytest.raises(ValidationError, match="commutation residual exceeded"):
        CommutingTuple(pauli_pair())


def test_commuting_fixtures_accepted():
    for tup in (f1(), f2(), f3()):
        assert commutation_residual(tup) <= 1e-12
        assert tup.n == 2 and tup.d == 2


def test_joint_eigenvalues_of_fixtures():
    assert same_points(joint_eigenvalues(f1()), point_set([[-1, -3], [-2, -4]], 2))
    j = joint_eigenvalues(f2())
    assert same_points(j, point_set([[-1, 1]], 2))
    assert j.multiplicities == (2,)
    assert same_points(joint_eigenvalues(f3()), point_set([[1, 3], [-1, -1]], 2))


def test_candidate_points():
    assert same_points(candidate_points(f1()), point_set([[-1, -3], [-1, -4], [-2, -3], [-2, -4]], 2))
    assert same_points(candidate_points(f2()), point_set([[-1, 1]], 2))
    assert same_points(candidate_points(f3()), point_set([[1, 3], [1, -1], [-1, 3], [-1, -1]], 2))


@given(st.integers(0, 10_000), st.integers(1, 3), st.integers(1, 6), st.booleans())
def test_joint_eigenvalues_within_candidates_and_transpose_symmetric(seed, n, d, conj):
    tup = random_commuting_tuple(make_rng(seed), n=n, d=d, conjugate=conj)
    joint = joint_eigenvalues(tup)
    assert joint.is_subset(candidate_points(tup), 1e-6)
    assert joint.hausdorff(joint_eigenvalues(tup.transpose())) <= 1e-6
    assert joint.total_multiplicity() == d


def test_joint_eigenvalues_need_not_be_product():
    # product of individual spectra has four points, only two are joint
    assert len(candidate_points(f1())) == 4
    assert len(joint_eigenvalues(f1())) == 2


def test_simultaneous_schur_is_upper_triangular():
    tup = random_commuting_tuple(make_rng(3), n=3, d=5, conjugate=True)
    q, ts = simultaneous_schur(tup, make_rng(1))
    assert np.allclose(q.conj().T @ q, np.eye(5), atol=1e-12)
    for a, t in zip(tup.matrices, ts):
        assert np.allclose(q @ t @ q.conj().T, a, atol=1e-10)
        assert np.linalg.norm(np.tril(t, -1)) <= 1e-8 * max(1.0, np.linalg.norm(a))


def test_semigroup_value():
    tup = f1()
    assert np.allclose(semigroup_value(tup, [0, 0]), np.eye(2))
    assert np.allclose(semigroup_value(tup, [1, 1]), np.diag(np.exp([-4.0, -6.0])))
    with pytest.raises(DomainError):
        semigroup_value(tup, [-1, 0])
    with pytest.raises(StructuralError):
        semigroup_value(tup, [1, 1, 1])


def test_jordan_exponential():
    expected = np.exp(-1.0) * np.array([[1.0, 1.0], [0.0, 1.0]])
    assert np.allclose(semigroup_value(f2(), [1, 0]), expected, atol=1e-14)


@pytest.mark.parametrize("make", [f1, f2, f3])
@given(u=st.lists(st.floats(0, 5), min_size=2, max_size=2), v=st.lists(st.floats(0, 5), min_size=2, max_size=2))
def test_semigroup_law(make, u, v):
    tup = make()
    tu, tv = semigroup_value(tup, u), semigroup_value(tup, v)
    lhs = semigroup_value(tup, np.add(u, v))
    assert np.linalg.norm(lhs - tu @ tv) <= 1e-10 * np.linalg.norm(tu) * np.linalg.norm(tv)


def test_semigroup_value_equals_exp_of_combination():
    tup = random_commuting_tuple(make_rng(9), n=3, d=4)
    u = np.array([0.3, 1.1, 0.7])
    assert np.allclose(semigroup_value(tup, u), spla.expm(tup.combination(u)), atol=1e-10)


def test_numerical_rank():
    assert numerical_rank(np.eye(3)) == 3
    assert numerical_rank(np.ones((2, 2))) == 1
    assert numerical_rank(np.zeros((3, 3))) == 0
    assert numerical_rank(np.zeros((0, 2))) == 0
    assert numerical_rank(np.diag([1.0, 1e-3, 1e-14])) == 2
    assert numerical_rank(np.diag([1.0, 1e-3, 1e-14]), ToleranceConfig(tau_rank=1e-2)) == 1


def test_point_set_dedup_keeps_first():
    s = SpectrumPointSet.from_points([[0.0], [1e-9], [1.0]], dedup_tol=1e-7)
    assert len(s) == 2
    assert s.points[0, 0] == 0.0
    assert s.multiplicities == (2, 1)


def test_point_set_relations():
    a = point_set([[0, 0], [1, 1]], 2)
    b = point_set([[0, 0], [1, 1], [2, 2]], 2)
    assert a.is_subset(b, 0.0)
    assert not b.is_subset(a, 0.5)
    assert a.hausdorff(b) == pytest.approx(1.0)
    assert a.union(b).total_multiplicity() == 5
    assert len(a.union(b)) == 3
    assert same_points(b.project(1), point_set([0, 1, 2], 1))
    assert SpectrumPointSet.empty(2).subset_gap(a) == 0.0
    assert a.subset_gap(SpectrumPointSet.empty(2)) == np.inf


def test_point_set_json_round_trip_is_exact():
    s = joint_eigenvalues(random_commuting_tuple(make_rng(5), n=2, d=4))
    back = SpectrumPointSet.from_json(json.loads(json.dumps(s.to_json("sigma_a"))))
    assert np.array_equal(back.points, s.points)
    assert back.multiplicities == s.multiplicities


@given(st.integers(0, 10_000), st.integers(2, 3), st.integers(2, 5))
def test_joint_eigenvalues_similarity_invariant(seed, n, d):
    rng = make_rng(seed)
    tup = random_commuting_tuple(rng, n=n, d=d)
    p = np.eye(d) + 0.2 * rng.standard_normal((d, d))
    other = tup.similar(p)
    assert joint_eigenvalues(tup).hausdorff(joint_eigenvalues(other)) <= 1e-7


@given(st.integers(0, 10_000))
def test_joint_eigenvalues_project_to_individual_spectra(seed):
    tup = random_commuting_tuple(make_rng(seed), n=2, d=4)
    joint = joint_eigenvalues(tup)
    for j, a in enumerate(tup.matrices):
        assert same_points(joint.project(j), point_set(np.linalg.eigvals(a), 1), 1e-6)


def test_triangularization_failure_raises():
    # admit a non-commuting pair, then demand a strict triangularization
    tup = CommutingTuple(pauli_pair(), ToleranceConfig(tau_comm=10.0))
    object.__setattr__(tup, "tolerances", ToleranceConfig())
    with pytest.raises(ConvergenceError):
        joint_eigenvalues(tup)
