"""Joint spectra of commuting matrix tuples.

Every spectrum is computed by scanning the finite candidate set (products
of the individual spectra), which contains all of them; membership tests
also accept arbitrary points so they can be used on grids.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from ._parallel import ordered_map
from .errors import StructuralError, ValidationError
from .linalg_core import (
    DEFAULT_TOLERANCES,
    CommutingTuple,
    SpectrumPointSet,
    ToleranceConfig,
    as_complex_matrix,
    candidate_points,
    joint_eigenvalues,
)

__all__ = [
    "MembershipVerdict",
    "CommutantBasis",
    "DiagonalModel",
    "approximate_membership",
    "approximate_spectrum",
    "point_spectrum",
    "residual_membership",
    "residual_spectrum",
    "joint_spectrum_J",
    "commutant_basis",
    "bicommutant_basis",
    "commutant_spectrum_membership",
    "commutant_spectrum",
    "bicommutant_spectrum",
    "shilov_spectrum",
    "shilov_characters",
    "hermitian_witness",
    "essential_range",
    "in_essential_range",
]


@dataclass(frozen=True)
class MembershipVerdict:
    """Outcome of a membership test.

    ``rule`` says how ``witness_value`` decides membership: ``"below"``
    means member iff ``witness_value <= threshold`` (singular-value tests),
    ``"above"`` means member iff ``witness_value > threshold`` (solvability
    tests, where a small residual certifies a non-member).
    """

    member: bool
    witness_value: float
    threshold: float
    rule: str = "below"
    witness_vector: Optional[np.ndarray] = field(default=None, repr=False)
    marginal: bool = False


@dataclass(frozen=True, eq=False)
class CommutantBasis:
    """Frobenius-orthonormal basis of ``{B : B A_j = A_j B for all j}``."""

    generators: tuple
    d: int

    def __len__(self):
        return len(self.generators)

    @property
    def dimension(self) -> int:
        return len(self.generators)

    def gram(self) -> np.ndarray:
        vecs = self.as_columns()
        return vecs.conj().T @ vecs

    def as_columns(self) -> np.ndarray:
        if not self.generators:
            return np.zeros((self.d * self.d, 0), dtype=complex)
        return np.stack([g.reshape(-1) for g in self.generators], axis=1)

    def contains(self, matrix, tol: float = 1e-8) -> bool:
        """Whether ``matrix`` lies in the span, relative to its norm."""
        v = np.asarray(matrix, dtype=complex).reshape(-1)
        cols = self.as_columns()
        resid = v - cols @ (cols.conj().T @ v)
        return float(np.linalg.norm(resid)) <= tol * max(1.0, float(np.linalg.norm(v)))


@dataclass(frozen=True, eq=False)
class DiagonalModel:
    """Multiplication operators by ``n`` real functions on ``N`` weighted points.

    ``values`` has shape ``(n, N)``: ``values[j, k]`` is the value of the
    ``j``-th function at index ``k``; ``weights[k] > 0`` is the measure of
    index ``k``.
    """

    values: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.ndim == 1:
            vals = vals.reshape(1, -1)
        w = np.array(self.weights, dtype=float).reshape(-1)
        if vals.shape[1] != w.shape[0] or w.shape[0] < 1:
            raise StructuralError("values and weights disagree on the index count")
        if not (np.all(np.isfinite(vals)) and np.all(np.isfinite(w))):
            raise ValidationError("diagonal model has non-finite entries")
        if np.any(w <= 0):
            raise ValidationError("weights must be strictly positive")
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "weights", w)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def index_count(self) -> int:
        return self.values.shape[1]

    def to_tuple(self, cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> CommutingTuple:
        return CommutingTuple([np.diag(row).astype(complex) for row in self.values], cfg)


def _stack(tup: CommutingTuple, lam) -> np.ndarray:
    eye = np.eye(tup.d)
    return np.vstack([l * eye - a for l, a in zip(lam, tup.matrices)])


def _check_point(tup: CommutingTuple, lam) -> np.ndarray:
    lam = np.asarray(lam, dtype=complex).reshape(-1)
    if lam.shape != (tup.n,):
        raise StructuralError(f"point has {lam.shape[0]} coordinates, tuple has {tup.n}")
    return lam


def approximate_membership(tup: CommutingTuple, lam, cfg: ToleranceConfig | None = None) -> MembershipVerdict:
    """Decide ``lam`` in the joint approximate spectrum.

    The witness is the smallest singular value of the vertical stack of
    ``lam_j I - A_j`` and the corresponding right singular vector.
    """
    cfg = cfg or tup.tolerances
    lam = _check_point(tup, lam)
    _, s, vh = np.linalg.svd(_stack(tup, lam))
    sigma_min = float(s[-1])
    x = vh[-1].conj()
    threshold = tup.n * cfg.tau_rank * tup.scale()
    return MembershipVerdict(bool(sigma_min <= threshold), sigma_min, threshold, "below", x)


def residual_membership(tup: CommutingTuple, lam, cfg: ToleranceConfig | None = None) -> MembershipVerdict:
    """Decide whether ``sum_j Im(lam_j I - A_j)`` is a proper subspace.

    A common left null vector ``y`` with ``y^H (lam_j I - A_j) = 0`` exists
    iff ``conj(lam)`` is a joint eigenvalue of the adjoint tuple.
    """
    cfg = cfg or tup.tolerances
    lam = _check_point(tup, lam)
    adj = tup.conjugate_transpose()
    return approximate_membership(adj, lam.conj(), cfg)


def _scan(tup, test, cfg, candidates=None) -> SpectrumPointSet:
    cands = candidate_points(tup) if candidates is None else candidates
    verdicts = ordered_map(lambda p: test(tup, p, cfg), list(cands.points))
    keep = [p for p, v in zip(cands.points, verdicts) if v.member]
    return SpectrumPointSet.from_points(np.array(keep).reshape(-1, tup.n), None, cfg.tau_dedup, tup.n)


def approximate_spectrum(tup: CommutingTuple, cfg: ToleranceConfig | None = None) -> SpectrumPointSet:
    return _scan(tup, approximate_membership, cfg or tup.tolerances)


def point_spectrum(tup: CommutingTuple, cfg: ToleranceConfig | None = None) -> SpectrumPointSet:
    """Points with a common eigenvector, with geometric multiplicities."""
    cfg = cfg or tup.tolerances
    threshold = tup.n * cfg.tau_rank * tup.scale()
    pts, mult = [], []
    for p in candidate_points(tup).points:
        s = np.linalg.svd(_stack(tup, p), compute_uv=False)
        nullity = int(np.count_nonzero(s <= threshold))
        if nullity:
            pts.append(p)
            mult.append(nullity)
    return SpectrumPointSet.from_points(np.array(pts).reshape(-1, tup.n), mult, cfg.tau_dedup, tup.n)


def residual_spectrum(tup: CommutingTuple, cfg: ToleranceConfig | None = None) -> SpectrumPointSet:
    return _scan(tup, residual_membership, cfg or tup.tolerances)


def joint_spectrum_J(tup: CommutingTuple, cfg: ToleranceConfig | None = None) -> SpectrumPointSet:
    """Union of the approximate and residual spectra."""
    cfg = cfg or tup.tolerances
    return approximate_spectrum(tup, cfg).union(residual_spectrum(tup, cfg))


# -- commutants ------------------------------------------------------------

def _sylvester_stack(mats) -> sp.csr_matrix:
    # row-major vec: vec(B A) = (I kron A^T) vec(B), vec(A B) = (A kron I) vec(B)
    d = mats[0].shape[0]
    eye = sp.identity(d, dtype=complex, format="csr")
    blocks = []
    for a in mats:
        a_sp = sp.csr_matrix(a)
        blocks.append(sp.kron(eye, a_sp.T) - sp.kron(a_sp, eye))
    stacked = sp.vstack(blocks, format="csr")
    stacked.eliminate_zeros()
    return stacked


def _as_family(family):
    if isinstance(family, CommutingTuple):
        mats = list(family.matrices)
    else:
        mats = [as_complex_matrix(m) for m in family]
    if not mats:
        raise StructuralError("commutant of an empty family")
    d = mats[0].shape[0]
    if any(m.shape != (d, d) for m in mats):
        raise StructuralError("family members do not share a dimension")
    return mats, d


def _unit_generator(d, flat_index, value=1.0):
    g = np.zeros(d * d, dtype=complex)
    g[flat_index] = value
    g = g.reshape(d, d)
    g.setflags(write=False)
    return g


def commutant_basis(family, cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> CommutantBasis:
    """Orthonormal basis of the joint null space of ``B -> B A_j - A_j B``.

    The stacked ``(n d^2) x d^2`` linearization is split into the connected
    blocks of its sparsity pattern, which have disjoint rows and columns, so
    the block SVDs together are an SVD of the whole stack.  Null vectors are
    the right singular vectors with singular value at most
    ``tau_rank * sigma_max``.
    """
    mats, d = _as_family(family)
    dd = d * d
    stack = _sylvester_stack(mats).tocsc()
    pattern = abs(stack)
    gram = (pattern.T @ pattern).tocsr()
    ncomp, labels = connected_components(gram, directed=False)
    sizes = np.bincount(labels, minlength=ncomp)
    col_norms = np.sqrt(np.asarray(pattern.multiply(pattern).sum(axis=0)).ravel())

    # one-column blocks need only their column norm; larger blocks are
    # pulled out of a copy permuted into block-diagonal order
    order = np.argsort(labels, kind="stable")
    col_start = np.concatenate([[0], np.cumsum(sizes)])
    multi = np.flatnonzero(sizes > 1)
    block_svd = {}
    sigma_max = float(col_norms[sizes[labels] == 1].max(initial=0.0))
    if multi.size:
        permuted = stack[:, order].tocoo()
        row_label = np.full(stack.shape[0], -1)
        row_label[permuted.row] = labels[order][permuted.col]
        row_order = np.argsort(row_label, kind="stable")
        n_empty = int(np.count_nonzero(row_label < 0))
        row_sizes = np.bincount(row_label[row_label >= 0], minlength=ncomp)
        row_start = n_empty + np.concatenate([[0], np.cumsum(row_sizes)])
        blocked = permuted.tocsr()[row_order].tocsc()
        for c in multi:
            c0, c1 = col_start[c], col_start[c + 1]
            r0, r1 = row_start[c], row_start[c + 1]
            if r1 == r0:
                block_svd[c] = (np.zeros(c1 - c0), np.eye(c1 - c0, dtype=complex))
                continue
            dense = blocked[:, c0:c1].tocsr()[r0:r1].toarray()
            _, s, vh = np.linalg.svd(dense, full_matrices=True)
            sigma_max = max(sigma_max, float(s[0]))
            s_full = np.zeros(c1 - c0)
            s_full[: s.size] = s
            block_svd[c] = (s_full, vh)

    cutoff = cfg.tau_rank * sigma_max
    generators = []
    for c in range(ncomp):
        cols = order[col_start[c] : col_start[c + 1]]
        if sizes[c] == 1:
            if col_norms[cols[0]] <= cutoff:
                generators.append(_unit_generator(d, cols[0]))
            continue
        s, vh = block_svd[c]
        for i in np.flatnonzero(s <= cutoff):
            vec = np.zeros(dd, dtype=complex)
            vec[cols] = vh[i].conj()
            g = vec.reshape(d, d)
            g.setflags(write=False)
            generators.append(g)
    return CommutantBasis(tuple(generators), d)


def _diagonal_classes(mats, cfg):
    """Index classes of equal value tuples for a diagonal family.

    Returns ``None`` unless every matrix is exactly diagonal and the
    closeness relation used by :func:`commutant_basis` is transitive, in
    which case the commutant is block-diagonal over these classes.
    """
    d = mats[0].shape[0]
    if any(np.count_nonzero(m - np.diag(np.diag(m))) for m in mats):
        return None
    vals = np.array([np.diag(m) for m in mats])
    dist = np.sqrt((np.abs(vals[:, :, None] - vals[:, None, :]) ** 2).sum(axis=0))
    close = dist <= cfg.tau_rank * dist.max()
    ncls, cls = connected_components(sp.csr_matrix(close), directed=False)
    sizes = np.bincount(cls, minlength=ncls)
    if int(np.count_nonzero(close)) != int((sizes**2).sum()):
        return None
    return [np.flatnonzero(cls == c) for c in range(ncls)]


def bicommutant_basis(family, cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> CommutantBasis:
    mats, d = _as_family(family)
    classes = _diagonal_classes(mats, cfg)
    if classes is not None:
        # commutant = block matrices over the classes, so its commutant is
        # spanned by the normalized class projectors
        gens = []
        for idx in classes:
            g = np.zeros((d, d), dtype=complex)
            g[idx, idx] = 1.0 / np.sqrt(idx.size)
            g.setflags(write=False)
            gens.append(g)
        return CommutantBasis(tuple(gens), d)
    return commutant_basis(commutant_basis(mats, cfg).generators, cfg)


class _FeasibilityScan:
    """Least-squares solver for ``sum_j (lam_j I - A_j) B_j = I`` over a span.

    When the span is an orthonormal algebra basis closed under left
    multiplication by every ``A_j`` and containing ``I`` (true for the
    commutant and bicommutant), the system lives inside the span and is
    solved in its ``k`` coordinates; otherwise each point costs a full
    ``d^2 x (n k)`` least-squares solve.
    """

    def __init__(self, tup: CommutingTuple, basis: CommutantBasis, cfg: ToleranceConfig | None = None):
        if basis.d != tup.d:
            raise StructuralError(f"basis acts on dimension {basis.d}, tuple on {tup.d}")
        self.tup = tup
        self.tau = (cfg or tup.tolerances).tau_rank
        self.scale = max(1.0, max(float(np.linalg.norm(a, 2)) for a in tup.matrices))
        k = basis.dimension
        self.p0 = basis.as_columns()
        if k:
            gens = np.stack(basis.generators)
            self.pj = [(a @ gens).reshape(k, -1).T for a in tup.matrices]
        else:
            self.pj = [np.zeros((tup.d * tup.d, 0), dtype=complex) for _ in tup.matrices]
        self.rhs = np.eye(tup.d, dtype=complex).reshape(-1)
        self.reduced = None
        if k:
            q = self.p0
            qh = q.conj().T
            coords = [qh @ p for p in self.pj]
            b = qh @ self.rhs
            tol = 1e-11 * max(1.0, float(max(np.linalg.norm(p) for p in self.pj)))
            closed = (
                np.allclose(qh @ q, np.eye(k), atol=1e-11)
                and all(np.linalg.norm(p - q @ c) <= tol for p, c in zip(self.pj, coords))
                and np.linalg.norm(self.rhs - q @ b) <= 1e-11 * np.sqrt(tup.d)
            )
            if closed:
                self.reduced = (coords, b, np.eye(k, dtype=complex))

    def residual(self, lam):
        lam = _check_point(self.tup, lam)
        if self.p0.shape[1] == 0:
            return 1.0, np.zeros(0, dtype=complex)
        if self.reduced is not None:
            coords, b, eye = self.reduced
            phi = np.hstack([l * eye - m for l, m in zip(lam, coords)])
            rhs = b
        else:
            phi = np.hstack([l * self.p0 - p for l, p in zip(lam, self.pj)])
            rhs = self.rhs
        # directions below the rank cutoff count as unsolvable; otherwise a
        # rounding-level singular value buys a huge, spurious solution.  The
        # cutoff is absolute in the tuple's scale so an all-tiny system is
        # still rank deficient.
        u, sv, vh = np.linalg.svd(phi, full_matrices=False)
        cutoff = self.tau * max(self.scale, float(sv[0]) if sv.size else 0.0)
        keep = sv > cutoff
        coef = vh[keep].conj().T @ ((u[:, keep].conj().T @ rhs) / sv[keep])
        resid = float(np.linalg.norm(phi @ coef - rhs)) / np.sqrt(self.tup.d)
        return resid, coef


def _feasibility_verdict(resid, coef, cfg) -> MembershipVerdict:
    member = bool(resid > cfg.tau_feas)
    marginal = bool(cfg.tau_feas <= resid <= 10 * cfg.tau_feas)
    return MembershipVerdict(member, resid, cfg.tau_feas, "above", coef, marginal)


def commutant_spectrum_membership(
    tup: CommutingTuple, lam, basis: CommutantBasis, cfg: ToleranceConfig | None = None
) -> MembershipVerdict:
    """Decide ``lam`` in the spectrum relative to the span of ``basis``.

    ``lam`` is a non-member iff ``sum_j (lam_j I - A_j) B_j = I`` is solvable
    with every ``B_j`` in the span, i.e. the relative least-squares residual
    is at most ``tau_feas``.  The witness vector holds the coefficients.
    """
    cfg = cfg or tup.tolerances
    resid, coef = _FeasibilityScan(tup, basis, cfg).residual(lam)
    return _feasibility_verdict(resid, coef, cfg)


def commutant_spectrum(
    tup: CommutingTuple, basis: CommutantBasis | None = None, cfg: ToleranceConfig | None = None
) -> SpectrumPointSet:
    """Commutant spectrum, or the spectrum relative to ``basis`` if given."""
    cfg = cfg or tup.tolerances
    basis = commutant_basis(tup, cfg) if basis is None else basis
    scan = _FeasibilityScan(tup, basis, cfg)

    def test(t, p, c):
        return _feasibility_verdict(*scan.residual(p), c)

    return _scan(tup, test, cfg)


def bicommutant_spectrum(tup: CommutingTuple, cfg: ToleranceConfig | None = None) -> SpectrumPointSet:
    cfg = cfg or tup.tolerances
    return commutant_spectrum(tup, bicommutant_basis(tup, cfg), cfg)


def shilov_spectrum(tup: CommutingTuple, cfg: ToleranceConfig | None = None) -> SpectrumPointSet:
    """Shilov joint spectrum of a bounded tuple.

    For bounded operators it is the spectrum relative to the bicommutant
    algebra, so this is the bicommutant scan; :func:`shilov_characters`
    gives the independent character construction.
    """
    return bicommutant_spectrum(tup, cfg)


def shilov_characters(tup: CommutingTuple, cfg: ToleranceConfig | None = None, rng=None) -> SpectrumPointSet:
    """Character values ``(phi(A_1), ..., phi(A_n))`` of the bicommutant.

    The tuple and the bicommutant generators are triangularized together;
    each diagonal position is a character of the (commutative) bicommutant
    algebra, evaluated on the ``A_j``.
    """
    cfg = cfg or tup.tolerances
    gens = bicommutant_basis(tup, cfg).generators
    joint = CommutingTuple(list(tup.matrices) + list(gens), cfg)
    eig = joint_eigenvalues(joint, rng)
    return SpectrumPointSet.from_points(eig.points[:, : tup.n], eig.multiplicities, cfg.tau_dedup, tup.n)


def hermitian_witness(tup: CommutingTuple, lam, cfg: ToleranceConfig | None = None):
    """``S = sum_j (lam_j I - A_j)^2`` and whether ``0`` is in its spectrum.

    Requires a Hermitian tuple and a real point.
    """
    cfg = cfg or tup.tolerances
    if not tup.is_hermitian(1e-10):
        raise ValidationError("hermitian_witness needs Hermitian matrices")
    lam = _check_point(tup, lam)
    if np.any(np.abs(lam.imag) > 0):
        raise ValidationError("hermitian_witness needs a real point")
    eye = np.eye(tup.d)
    s = sum((l.real * eye - a) @ (l.real * eye - a) for l, a in zip(lam, tup.matrices))
    s = 0.5 * (s + s.conj().T)
    eig = np.linalg.eigvalsh(s)
    norm = float(np.abs(eig).max())
    return s, bool(eig[0] <= cfg.tau_rank * norm)


def in_essential_range(model: DiagonalModel, beta, eps_grid=None) -> bool:
    """Whether every ``eps``-neighbourhood (l1) of ``beta`` has positive weight."""
    beta = np.asarray(beta, dtype=float).reshape(-1, 1)
    eps_grid = eps_grid if eps_grid is not None else np.logspace(0, -12, 13)
    dist = np.abs(model.values - beta).sum(axis=0)
    return all(model.weights[dist < eps].sum() > 0 for eps in eps_grid)


def essential_range(model: DiagonalModel, eps_grid=None, dedup_tol=DEFAULT_TOLERANCES.tau_dedup) -> SpectrumPointSet:
    """Joint essential range of a finite diagonal model.

    For finitely many weighted indices this is the set of attained value
    tuples; each is confirmed against the ``eps`` grid.
    """
    tuples = SpectrumPointSet.from_points(model.values.T.astype(complex), None, dedup_tol, model.n)
    keep = [p for p in tuples.points if in_essential_range(model, p.real, eps_grid)]
    return SpectrumPointSet.from_points(np.array(keep).reshape(-1, model.n), None, dedup_tol, model.n)
