"""Deterministic test tuples shared by the test suite, the CLI and the docs.

``F1``-``F3`` and ``F5`` are fixed; ``random_commuting_tuple`` produces the
seeded generic family ``F4`` as polynomials in one random matrix.
"""
from __future__ import annotations

import numpy as np

from .joint_spectra import DiagonalModel
from .linalg_core import DEFAULT_TOLERANCES, CommutingTuple, ToleranceConfig, make_rng

JORDAN = np.array([[-1.0, 1.0], [0.0, -1.0]])
SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]])
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]])


def f1(cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> CommutingTuple:
    return CommutingTuple([np.diag([-1.0, -2.0]), np.diag([-3.0, -4.0])], cfg)


def f2(cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> CommutingTuple:
    return CommutingTuple([JORDAN, JORDAN @ JORDAN], cfg)


def f3(cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> CommutingTuple:
    return CommutingTuple([SIGMA_X, 2 * SIGMA_X + np.eye(2)], cfg)


def f5_model(d: int = 5) -> DiagonalModel:
    """Grid ``s_k = k/(d-1)`` with ``a_1 = -s`` and ``a_2 = s - 1``."""
    s = np.linspace(0.0, 1.0, d)
    return DiagonalModel(np.vstack([-s, s - 1.0]), np.ones(d))


def f5(cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> CommutingTuple:
    return f5_model().to_tuple(cfg)


def control_tuple(cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> CommutingTuple:
    """Single matrix ``diag(0, -1)``: bounded but not stable."""
    return CommutingTuple([np.diag([0.0, -1.0])], cfg)


def pauli_pair():
    """A non-commuting pair, returned as raw matrices."""
    return [SIGMA_X.copy(), SIGMA_Z.copy()]


def named_fixtures(cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> dict:
    return {"F1": f1(cfg), "F2": f2(cfg), "F3": f3(cfg), "F5": f5(cfg)}


def _random_polynomial_tuple(m, n, rng, real_coefficients, max_degree=3):
    d = m.shape[0]
    powers = [np.eye(d, dtype=complex)]
    for _ in range(max_degree):
        powers.append(powers[-1] @ m)
    mats = []
    for _ in range(n):
        degree = int(rng.integers(1, max_degree + 1))
        if real_coefficients:
            coef = rng.standard_normal(degree + 1)
        else:
            coef = rng.standard_normal(degree + 1) + 1j * rng.standard_normal(degree + 1)
        mats.append(sum(c * powers[k] for k, c in enumerate(coef)))
    return mats


def random_commuting_tuple(
    rng=0,
    n: int = 2,
    d: int = 3,
    conjugate: bool = False,
    stable: bool = False,
    cfg: ToleranceConfig = DEFAULT_TOLERANCES,
) -> CommutingTuple:
    """``(p_1(M), ..., p_n(M))`` for a random complex ``M`` and random ``p_j``.

    ``conjugate`` applies a random well-conditioned similarity; ``stable``
    shifts each ``A_j`` so its spectral abscissa is ``-0.5``.
    """
    rng = make_rng(rng)
    m = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2 * d)
    mats = _random_polynomial_tuple(m, n, rng, real_coefficients=False)
    if stable:
        mats = [a - (np.linalg.eigvals(a).real.max() + 0.5) * np.eye(d) for a in mats]
    if conjugate:
        p = np.eye(d) + 0.3 * (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(d)
        pinv = np.linalg.inv(p)
        mats = [pinv @ a @ p for a in mats]
    return CommutingTuple(mats, cfg)


def random_hermitian_tuple(rng=0, n: int = 2, d: int = 3, cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> CommutingTuple:
    """Real polynomials in a random Hermitian matrix, so every member is Hermitian."""
    rng = make_rng(rng)
    g = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2 * d)
    h = 0.5 * (g + g.conj().T)
    mats = _random_polynomial_tuple(h, n, rng, real_coefficients=True)
    mats = [0.5 * (a + a.conj().T) for a in mats]
    return CommutingTuple(mats, cfg)


def random_diagonal_model(rng=0, n: int = 2, index_count: int = 16, levels: int = 4) -> DiagonalModel:
    """Functions taking values in a small pool, so value tuples repeat."""
    rng = make_rng(rng)
    pools = [np.sort(rng.uniform(-3.0, 0.0, levels)) for _ in range(n)]
    values = np.vstack([pool[rng.integers(0, levels, index_count)] for pool in pools])
    weights = rng.uniform(0.1, 1.0, index_count)
    return DiagonalModel(values, weights)
