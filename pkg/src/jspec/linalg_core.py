"""Dense complex linear algebra shared by every other module.

Commuting tuples, spectrum point sets, the semigroup ``T(u)``, the
simultaneous-triangularization oracle and tolerance-controlled ranks.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as spla

from .errors import ConvergenceError, DomainError, StructuralError, ValidationError

__all__ = [
    "ToleranceConfig",
    "DEFAULT_TOLERANCES",
    "CommutingTuple",
    "SpectrumPointSet",
    "as_complex_matrix",
    "commutation_residual",
    "joint_eigenvalues",
    "numerical_rank",
    "semigroup_value",
    "candidate_points",
    "make_rng",
]


@dataclass(frozen=True)
class ToleranceConfig:
    """Numerical tolerances.

    Parameters
    ----------
    tau_comm
        Relative commutation residual accepted for a tuple.
    tau_rank
        Relative singular-value cutoff for rank decisions.
    tau_dedup
        Absolute max-norm distance below which points are merged.
    tau_feas
        Relative least-squares residual below which a linear system is
        considered solvable.
    """

    tau_comm: float = 1e-10
    tau_rank: float = 1e-10
    tau_dedup: float = 1e-7
    tau_feas: float = 1e-7

    def __post_init__(self):
        for name in ("tau_comm", "tau_rank", "tau_dedup", "tau_feas"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise DomainError(f"{name} must be strictly positive, got {value!r}")

    def as_dict(self):
        return {
            "tau_comm": self.tau_comm,
            "tau_rank": self.tau_rank,
            "tau_dedup": self.tau_dedup,
            "tau_feas": self.tau_feas,
        }


DEFAULT_TOLERANCES = ToleranceConfig()


def make_rng(seed=0):
    """Counter-based generator used for every random draw in the package."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.Philox(key=int(seed)))


def as_complex_matrix(matrix) -> np.ndarray:
    """Return a read-only complex square copy of ``matrix``."""
    arr = np.array(matrix, dtype=complex)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] < 1:
        raise StructuralError(f"expected a nonempty square matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError("matrix has non-finite entries")
    arr.setflags(write=False)
    return arr


def _matrix_list(matrices) -> list[np.ndarray]:
    if isinstance(matrices, CommutingTuple):
        return list(matrices.matrices)
    mats = [as_complex_matrix(m) for m in matrices]
    if not mats:
        raise StructuralError("empty family of matrices")
    dims = {m.shape[0] for m in mats}
    if len(dims) != 1:
        raise StructuralError(f"matrices do not share a dimension: {sorted(dims)}")
    return mats


def commutation_residual(matrices) -> float:
    """Largest pairwise Frobenius commutator ``max ||A_j A_k - A_k A_j||_F``."""
    mats = _matrix_list(matrices)
    worst = 0.0
    for a, b in itertools.combinations(mats, 2):
        worst = max(worst, float(np.linalg.norm(a @ b - b @ a)))
    return worst


@dataclass(frozen=True, eq=False)
class CommutingTuple:
    """``n`` pairwise commuting ``d x d`` complex matrices.

    Construction fails with :class:`ValidationError` when the commutation
    residual exceeds ``tau_comm * max_j ||A_j||_F**2``.
    """

    matrices: tuple
    tolerances: ToleranceConfig = field(default=DEFAULT_TOLERANCES, repr=False)

    def __init__(self, matrices, tolerances: ToleranceConfig = DEFAULT_TOLERANCES):
        mats = _matrix_list(matrices)
        object.__setattr__(self, "matrices", tuple(mats))
        object.__setattr__(self, "tolerances", tolerances)
        residual = commutation_residual(mats)
        bound = tolerances.tau_comm * max(float(np.linalg.norm(m)) ** 2 for m in mats)
        if residual > bound:
            raise ValidationError(
                f"commutation residual exceeded: {residual:.3e} > {bound:.3e}"
            )

    @property
    def n(self) -> int:
        return len(self.matrices)

    @property
    def d(self) -> int:
        return self.matrices[0].shape[0]

    def __len__(self):
        return self.n

    def __getitem__(self, j):
        return self.matrices[j]

    def __iter__(self):
        return iter(self.matrices)

    def scale(self) -> float:
        """``max(1, max_j ||A_j||_2)``, the reference size for relative tests."""
        return max(1.0, max(float(np.linalg.norm(m, 2)) for m in self.matrices))

    def frobenius_scale(self) -> float:
        return max(float(np.linalg.norm(m)) for m in self.matrices)

    def conjugate_transpose(self) -> "CommutingTuple":
        return CommutingTuple([m.conj().T for m in self.matrices], self.tolerances)

    def transpose(self) -> "CommutingTuple":
        return CommutingTuple([m.T for m in self.matrices], self.tolerances)

    def similar(self, p) -> "CommutingTuple":
        """The tuple ``(P^{-1} A_j P)_j``."""
        p = np.asarray(p, dtype=complex)
        pinv = np.linalg.inv(p)
        return CommutingTuple([pinv @ m @ p for m in self.matrices], self.tolerances)

    def combination(self, coefficients) -> np.ndarray:
        """``sum_j c_j A_j``."""
        coefficients = np.asarray(coefficients)
        if coefficients.shape != (self.n,):
            raise StructuralError(f"expected {self.n} coefficients, got {coefficients.shape}")
        return sum(c * m for c, m in zip(coefficients, self.matrices))

    def is_hermitian(self, tol: float = 1e-10) -> bool:
        return all(
            np.linalg.norm(m - m.conj().T) <= tol * max(1.0, np.linalg.norm(m))
            for m in self.matrices
        )


def _max_dist(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Max-norm distances between rows of ``a`` (k x n) and ``b`` (m x n)."""
    if a.shape[0] == 0 or b.shape[0] == 0:
        return np.zeros((a.shape[0], b.shape[0]))
    return np.abs(a[:, None, :] - b[None, :, :]).max(axis=2)


@dataclass(frozen=True, eq=False)
class SpectrumPointSet:
    """Finite multiset of points of ``C^n`` with pairwise distinct points.

    Use :meth:`from_points` to build one from raw points; it merges points
    closer than ``dedup_tol`` (max norm), keeping the first representative
    seen and summing multiplicities.
    """

    points: np.ndarray
    multiplicities: tuple
    dedup_tol: float
    n: int

    @classmethod
    def from_points(cls, points, multiplicities=None, dedup_tol=DEFAULT_TOLERANCES.tau_dedup, n=None):
        pts = np.array(points, dtype=complex)
        if pts.size == 0:
            if n is None:
                n = pts.shape[1] if pts.ndim == 2 else 0
            pts = np.zeros((0, n), dtype=complex)
        elif pts.ndim == 1:
            pts = pts.reshape(-1, 1) if n in (None, 1) else pts.reshape(1, -1)
        n = pts.shape[1]
        if multiplicities is None:
            multiplicities = [1] * pts.shape[0]
        mult = [int(m) for m in multiplicities]
        if len(mult) != pts.shape[0]:
            raise StructuralError("multiplicities and points differ in length")
        if any(m < 1 for m in mult):
            raise ValidationError("multiplicities must be positive")
        kept: list[np.ndarray] = []
        kept_mult: list[int] = []
        for p, m in zip(pts, mult):
            for i, q in enumerate(kept):
                if np.max(np.abs(p - q)) <= dedup_tol:
                    kept_mult[i] += m
                    break
            else:
                kept.append(p)
                kept_mult.append(m)
        arr = np.array(kept, dtype=complex).reshape(len(kept), n)
        arr.setflags(write=False)
        return cls(arr, tuple(kept_mult), float(dedup_tol), n)

    @classmethod
    def empty(cls, n, dedup_tol=DEFAULT_TOLERANCES.tau_dedup):
        return cls.from_points(np.zeros((0, n)), [], dedup_tol, n)

    def __len__(self):
        return self.points.shape[0]

    def __iter__(self):
        return iter(self.points)

    def total_multiplicity(self) -> int:
        return sum(self.multiplicities)

    def contains(self, point, tol=None) -> bool:
        tol = self.dedup_tol if tol is None else tol
        point = np.asarray(point, dtype=complex).reshape(1, -1)
        return bool(len(self) and _max_dist(point, self.points).min() <= tol)

    def subset_gap(self, other: "SpectrumPointSet") -> float:
        """``max_{p in self} dist(p, other)``; zero when ``self`` is empty."""
        if len(self) == 0:
            return 0.0
        if len(other) == 0:
            return float("inf")
        return float(_max_dist(self.points, other.points).min(axis=1).max())

    def is_subset(self, other: "SpectrumPointSet", tol: float) -> bool:
        return self.subset_gap(other) <= tol

    def hausdorff(self, other: "SpectrumPointSet") -> float:
        if len(self) == 0 and len(other) == 0:
            return 0.0
        return max(self.subset_gap(other), other.subset_gap(self))

    def union(self, other: "SpectrumPointSet") -> "SpectrumPointSet":
        pts = np.vstack([self.points, other.points])
        return SpectrumPointSet.from_points(
            pts, self.multiplicities + other.multiplicities, self.dedup_tol, self.n
        )

    def project(self, j: int) -> "SpectrumPointSet":
        return SpectrumPointSet.from_points(
            self.points[:, j : j + 1], self.multiplicities, self.dedup_tol, 1
        )

    def map(self, func) -> "SpectrumPointSet":
        """Image under ``func: C^n -> C`` as a one-dimensional point set."""
        values = [func(p) for p in self.points]
        return SpectrumPointSet.from_points(
            np.array(values, dtype=complex).reshape(-1, 1), self.multiplicities, self.dedup_tol, 1
        )

    def sorted(self) -> "SpectrumPointSet":
        """Same set in lexicographic order of (Re, Im) per coordinate."""
        if len(self) == 0:
            return self
        keys = []
        for j in reversed(range(self.n)):
            keys.extend([self.points[:, j].imag, self.points[:, j].real])
        order = np.lexsort(keys)
        pts = self.points[order]
        pts.setflags(write=False)
        return SpectrumPointSet(pts, tuple(self.multiplicities[i] for i in order), self.dedup_tol, self.n)

    def to_json(self, kind: str) -> dict:
        return {
            "kind": kind,
            "points": [[[float(z.real), float(z.imag)] for z in p] for p in self.points],
            "multiplicities": list(self.multiplicities),
        }

    @classmethod
    def from_json(cls, payload: dict, n=None, dedup_tol=DEFAULT_TOLERANCES.tau_dedup):
        pts = [[complex(re, im) for re, im in p] for p in payload["points"]]
        if not pts:
            return cls.empty(n or 0, dedup_tol)
        arr = np.array(pts, dtype=complex)
        arr.setflags(write=False)
        # stored sets are already deduplicated; keep them bit-exact
        return cls(arr, tuple(int(m) for m in payload["multiplicities"]), float(dedup_tol), arr.shape[1])


def numerical_rank(matrix, cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> int:
    """Number of singular values above ``tau_rank * sigma_max``."""
    m = np.asarray(matrix, dtype=complex)
    if m.size == 0:
        return 0
    s = np.linalg.svd(m, compute_uv=False)
    if s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > cfg.tau_rank * s[0]))


def semigroup_value(tup: CommutingTuple, u) -> np.ndarray:
    """``T(u) = exp(u_1 A_1) ... exp(u_n A_n)`` for ``u >= 0``."""
    u = np.asarray(u, dtype=float).reshape(-1)
    if u.shape != (tup.n,):
        raise StructuralError(f"expected a vector of length {tup.n}, got {u.shape}")
    if np.any(u < 0) or not np.all(np.isfinite(u)):
        raise DomainError(f"semigroup parameter must be componentwise >= 0, got {u}")
    result = np.eye(tup.d, dtype=complex)
    for uj, a in zip(u, tup.matrices):
        if uj != 0.0:
            result = result @ spla.expm(uj * a)
    return result


def _triangularize(tup: CommutingTuple, rng, attempts: int = 5):
    scale = tup.frobenius_scale()
    bound = tup.tolerances.tau_comm * max(scale, 1e-300)
    worst = None
    for _ in range(attempts):
        r = rng.standard_normal(tup.n)
        _, q = spla.schur(tup.combination(r), output="complex")
        tri = [q.conj().T @ a @ q for a in tup.matrices]
        lower = max(float(np.linalg.norm(np.tril(t, -1))) for t in tri)
        if lower <= bound:
            return q, tri
        worst = lower if worst is None else min(worst, lower)
    raise ConvergenceError(
        f"simultaneous triangularization failed after {attempts} draws "
        f"(off-triangular residual {worst:.3e} > {bound:.3e})"
    )


def simultaneous_schur(tup: CommutingTuple, rng=None):
    """Unitary ``Q`` and upper triangular ``Q^H A_j Q`` for every ``j``."""
    rng = make_rng(0) if rng is None else make_rng(rng)
    return _triangularize(tup, rng)


def joint_eigenvalues(tup: CommutingTuple, rng=None) -> SpectrumPointSet:
    """Joint eigenvalues read off a simultaneous Schur form.

    A random real combination ``sum r_j A_j`` is Schur-decomposed and the
    resulting unitary is applied to every matrix; draws are repeated (five
    attempts) while any transformed matrix keeps a lower-triangular part
    above ``tau_comm`` relative to the tuple scale.
    """
    _, tri = simultaneous_schur(tup, rng)
    diag = np.stack([np.diag(t) for t in tri], axis=1)
    return SpectrumPointSet.from_points(diag, None, tup.tolerances.tau_dedup, tup.n)


def candidate_points(tup: CommutingTuple) -> SpectrumPointSet:
    """Cartesian product of the individual spectra, deduplicated."""
    tol = tup.tolerances.tau_dedup
    per_matrix = [
        SpectrumPointSet.from_points(np.linalg.eigvals(a).reshape(-1, 1), None, tol, 1).points[:, 0]
        for a in tup.matrices
    ]
    pts = np.array(list(itertools.product(*per_matrix)), dtype=complex).reshape(-1, tup.n)
    return SpectrumPointSet.from_points(pts, None, tol, tup.n)
