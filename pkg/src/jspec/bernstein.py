"""Bernstein functions of several variables and their operator calculus.

A Bernstein function is stored through its representation

    psi(s) = c0 + c1 . s + sum_k w_k (exp(s . u_k) - 1),

with ``c0 <= 0``, ``c1 >= 0`` and a finitely atomic positive measure
``sum_k w_k delta_{u_k}`` on the nonnegative orthant minus the origin.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree
from scipy.special import gammaln
from scipy.stats import poisson

from .errors import ConvergenceError, DomainError, MeasureOverflowError, StructuralError, ValidationError
from .joint_spectra import shilov_spectrum
from .linalg_core import (
    DEFAULT_TOLERANCES,
    CommutingTuple,
    SpectrumPointSet,
    ToleranceConfig,
    joint_eigenvalues,
    semigroup_value,
)

__all__ = [
    "DiscreteMeasure",
    "BernsteinFunction",
    "ValidationReport",
    "SpectralMappingReport",
    "evaluate_psi",
    "psi_formula",
    "validate",
    "psi_of_tuple",
    "psi_at_minus_infinity",
    "poisson_truncation_order",
    "subordinate_measure",
    "subordinate_semigroup_value",
    "spectral_mapping_report",
    "MAX_ATOMS",
]

MAX_ATOMS = 10**6


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """Finitely many weighted atoms in ``R^n``.

    ``locations`` has shape ``(k, n)``.  Positivity of the weights is not
    enforced here so that invalid inputs can still be reported on; every
    operation that needs a positive measure checks it.
    """

    locations: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        loc = np.array(self.locations, dtype=float)
        w = np.array(self.weights, dtype=float).reshape(-1)
        if loc.ndim == 1:
            loc = loc.reshape(w.shape[0], -1) if w.shape[0] else loc.reshape(0, loc.shape[0])
        if loc.shape[0] != w.shape[0]:
            raise StructuralError("locations and weights differ in length")
        if not (np.all(np.isfinite(loc)) and np.all(np.isfinite(w))):
            raise ValidationError("measure has non-finite atoms")
        loc.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "locations", loc)
        object.__setattr__(self, "weights", w)

    @classmethod
    def empty(cls, n: int) -> "DiscreteMeasure":
        return cls(np.zeros((0, n)), np.zeros(0))

    @classmethod
    def dirac(cls, location, weight: float = 1.0) -> "DiscreteMeasure":
        loc = np.asarray(location, dtype=float).reshape(1, -1)
        return cls(loc, [weight])

    @property
    def n(self) -> int:
        return self.locations.shape[1]

    def __len__(self):
        return self.weights.shape[0]

    def total_mass(self) -> float:
        return float(self.weights.sum())

    def laplace(self, s) -> complex:
        """``sum_k w_k exp(s . u_k)``."""
        s = np.asarray(s, dtype=complex).reshape(-1)
        if len(self) == 0:
            return 0j
        return complex(np.sum(self.weights * np.exp(self.locations @ s)))

    def shifted(self, offset) -> "DiscreteMeasure":
        return DiscreteMeasure(self.locations + np.asarray(offset, dtype=float), self.weights)

    def scaled(self, factor: float) -> "DiscreteMeasure":
        return DiscreteMeasure(self.locations, self.weights * factor)

    def merged(self, tol: float = DEFAULT_TOLERANCES.tau_dedup) -> "DiscreteMeasure":
        """Merge atoms within ``tol`` (max norm).

        Atoms are sorted lexicographically first; each cluster is represented
        by its first atom in that order and carries the summed weight.
        """
        if len(self) < 2:
            return self
        order = np.lexsort(self.locations.T[::-1])
        loc = self.locations[order]
        w = self.weights[order]
        tree = cKDTree(loc)
        pairs = tree.query_pairs(tol, p=np.inf, output_type="ndarray")
        if pairs.size == 0:
            return DiscreteMeasure(loc, w)
        neighbours: dict[int, list[int]] = {}
        for i, j in pairs:
            neighbours.setdefault(int(i), []).append(int(j))
            neighbours.setdefault(int(j), []).append(int(i))
        owner = np.arange(len(w))
        assigned = np.zeros(len(w), dtype=bool)
        for i in range(len(w)):
            if assigned[i]:
                continue
            assigned[i] = True
            for j in neighbours.get(i, ()):
                if not assigned[j]:
                    assigned[j] = True
                    owner[j] = i
        reps = np.flatnonzero(owner == np.arange(len(w)))
        index = np.full(len(w), -1)
        index[reps] = np.arange(reps.size)
        merged_w = np.zeros(reps.size)
        np.add.at(merged_w, index[owner], w)
        return DiscreteMeasure(loc[reps], merged_w)

    def convolve(self, other: "DiscreteMeasure", tol: float = DEFAULT_TOLERANCES.tau_dedup, max_atoms: int = MAX_ATOMS) -> "DiscreteMeasure":
        count = len(self) * len(other)
        if count > max_atoms:
            raise MeasureOverflowError(f"convolution would create {count} atoms (limit {max_atoms})")
        loc = (self.locations[:, None, :] + other.locations[None, :, :]).reshape(-1, self.n)
        w = (self.weights[:, None] * other.weights[None, :]).reshape(-1)
        return DiscreteMeasure(loc, w).merged(tol)

    def to_json(self) -> list:
        return [{"u": [float(x) for x in u], "w": float(w)} for u, w in zip(self.locations, self.weights)]


@dataclass(frozen=True, eq=False)
class BernsteinFunction:
    """The triple ``(c0, c1, mu)``."""

    c0: float
    c1: np.ndarray
    mu: DiscreteMeasure = field(default=None)

    def __post_init__(self):
        c1 = np.array(self.c1, dtype=float).reshape(-1)
        c1.setflags(write=False)
        object.__setattr__(self, "c0", float(self.c0))
        object.__setattr__(self, "c1", c1)
        mu = self.mu if self.mu is not None else DiscreteMeasure.empty(c1.shape[0])
        if mu.n != c1.shape[0] and len(mu):
            raise StructuralError(f"measure lives in R^{mu.n}, drift in R^{c1.shape[0]}")
        if len(mu) == 0 and mu.n != c1.shape[0]:
            mu = DiscreteMeasure.empty(c1.shape[0])
        object.__setattr__(self, "mu", mu)

    @property
    def n(self) -> int:
        return self.c1.shape[0]

    @classmethod
    def exponential(cls, u) -> "BernsteinFunction":
        """``psi(s) = exp(u . s) - 1``."""
        u = np.asarray(u, dtype=float).reshape(-1)
        return cls(0.0, np.zeros(u.shape[0]), DiscreteMeasure.dirac(u))

    def exponential_shift(self):
        """``u`` if this is ``exp(u . s) - 1``, otherwise ``None``."""
        if self.c0 == 0.0 and not np.any(self.c1) and len(self.mu) == 1 and self.mu.weights[0] == 1.0:
            return self.mu.locations[0]
        return None

    def to_json(self) -> dict:
        return {"c0": self.c0, "c1": [float(x) for x in self.c1], "mu": self.mu.to_json()}

    @classmethod
    def from_json(cls, payload: dict) -> "BernsteinFunction":
        try:
            c1 = np.asarray(payload["c1"], dtype=float).reshape(-1)
            atoms = payload.get("mu", [])
            if atoms:
                loc = np.array([a["u"] for a in atoms], dtype=float)
                w = np.array([a["w"] for a in atoms], dtype=float)
                mu = DiscreteMeasure(loc, w)
            else:
                mu = DiscreteMeasure.empty(c1.shape[0])
            return cls(float(payload["c0"]), c1, mu)
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed Bernstein data: {exc}") from exc


def psi_formula(psi: BernsteinFunction, s) -> complex:
    """The representation evaluated at any ``s`` in ``C^n``.

    For atomic measures the formula is entire, which is what the spectral
    mapping checks need; :func:`evaluate_psi` enforces the natural domain.
    """
    s = np.asarray(s, dtype=complex).reshape(-1)
    if s.shape != (psi.n,):
        raise StructuralError(f"expected {psi.n} coordinates, got {s.shape[0]}")
    return complex(psi.c0 + psi.c1 @ s + psi.mu.laplace(s) - psi.mu.total_mass())


def evaluate_psi(psi: BernsteinFunction, s) -> complex:
    """``psi(s)`` for ``Re s_j < 0``; raises :class:`DomainError` elsewhere."""
    s = np.asarray(s, dtype=complex).reshape(-1)
    if np.any(s.real >= 0):
        raise DomainError(f"psi is defined for Re s < 0 componentwise, got {s}")
    return psi_formula(psi, s)


@dataclass(frozen=True)
class ValidationReport:
    passed: bool
    structural_failures: tuple
    probe_failures: tuple

    def to_json(self) -> dict:
        return {
            "passed": self.passed,
            "structural_failures": list(self.structural_failures),
            "probe_failures": list(self.probe_failures),
        }


def _structural_failures(psi: BernsteinFunction) -> list[str]:
    failures = []
    if psi.c0 > 0:
        failures.append(f"c0 = {psi.c0} > 0")
    if np.any(psi.c1 < 0):
        failures.append(f"c1 has negative components: {psi.c1.tolist()}")
    if np.any(psi.mu.weights <= 0):
        failures.append("measure has nonpositive weights")
    if np.any(psi.mu.locations < 0):
        failures.append("measure has atoms outside the nonnegative orthant")
    if len(psi.mu) and np.any(np.all(psi.mu.locations == 0, axis=1)):
        failures.append("measure has an atom at the origin")
    return failures


def validate(psi: BernsteinFunction, grid=None, step: float = 0.25, h: float = 1e-4) -> ValidationReport:
    """Structural check plus sampled sign probes.

    Probes: ``psi <= 0`` on the grid, and central-difference first partials
    together with their forward differences of orders 1 to 3 (step ``step``,
    every direction) are ``>= -1e-10`` in relative terms.
    """
    structural = _structural_failures(psi)
    n = psi.n
    if grid is None:
        grid = [-4.0, -2.0, -1.0, -0.8]
    axes = [np.asarray(grid, dtype=float)] * n
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n)
    if mesh.shape[0] > 4096:
        mesh = mesh[:: mesh.shape[0] // 4096 + 1]
    probes = []

    def value(s):
        return psi_formula(psi, s).real

    for s in mesh:
        v = value(s)
        tol = 1e-10 * max(1.0, abs(v))
        if v > tol:
            probes.append(f"psi({s.tolist()}) = {v:.3e} > 0")
            continue
        eye = np.eye(n)
        for j in range(n):
            def partial(x, j=j):
                return (value(x + h * eye[j]) - value(x - h * eye[j])) / (2 * h)

            if partial(s) < -1e-10 * max(1.0, abs(v)) - 1e-8:
                probes.append(f"d_{j} psi({s.tolist()}) < 0")
                continue
            for k in range(n):
                for order in (1, 2, 3):
                    if s[k] + order * step + h >= 0:
                        continue
                    diff = sum(
                        (-1) ** (order - i) * math.comb(order, i) * partial(s + i * step * eye[k])
                        for i in range(order + 1)
                    )
                    if diff < -1e-10 * max(1.0, abs(v)) - 1e-8:
                        probes.append(f"order-{order} difference of d_{j} psi along s_{k} at {s.tolist()} < 0")
    return ValidationReport(not structural and not probes, tuple(structural), tuple(probes))


def _require_valid(psi: BernsteinFunction):
    failures = _structural_failures(psi)
    if failures:
        raise ValidationError("invalid Bernstein data: " + "; ".join(failures))


def _check_dims(psi: BernsteinFunction, tup: CommutingTuple):
    if psi.n != tup.n:
        raise StructuralError(f"psi has {psi.n} variables, tuple has {tup.n} matrices")


def psi_of_tuple(psi: BernsteinFunction, tup: CommutingTuple) -> np.ndarray:
    """``c0 I + sum_j c1_j A_j + sum_k w_k (T(u_k) - I)``."""
    _require_valid(psi)
    _check_dims(psi, tup)
    eye = np.eye(tup.d, dtype=complex)
    result = psi.c0 * eye + sum(c * a for c, a in zip(psi.c1, tup.matrices))
    for u, w in zip(psi.mu.locations, psi.mu.weights):
        result = result + w * (semigroup_value(tup, u) - eye)
    return result


def psi_at_minus_infinity(psi: BernsteinFunction) -> float:
    """Limit of ``psi`` as every coordinate tends to ``-inf``."""
    if np.any(psi.c1 > 0):
        return -math.inf
    return psi.c0 - psi.mu.total_mass()


def poisson_truncation_order(rate: float, eta: float) -> int:
    """Smallest ``M`` with ``P(N > M) < eta`` for ``N ~ Poisson(rate)``."""
    if eta <= 0:
        raise DomainError(f"tail tolerance must be positive, got {eta}")
    if rate <= 0:
        return 0
    upper = int(rate + 20 * math.sqrt(rate) + 60)
    while True:
        tails = poisson.sf(np.arange(upper + 1), rate)
        below = np.flatnonzero(tails < eta)
        if below.size:
            return int(below[0])
        upper *= 2


def subordinate_measure(psi: BernsteinFunction, t: float, eta: float, cfg: ToleranceConfig = DEFAULT_TOLERANCES,
                        order: int | None = None) -> DiscreteMeasure:
    """Truncated compound-Poisson form of the measure whose Laplace transform is ``exp(t psi)``.

    ``nu_t = exp(t (c0 - W)) sum_{m <= M} t^m / m! mu^{*m}`` shifted by
    ``t c1``, with ``W`` the mass of ``mu`` and ``M`` the smallest order
    whose Poisson(``t W``) tail is below ``eta``.  An explicit ``order``
    overrides ``M`` when it is larger.
    """
    if eta <= 0:
        raise DomainError(f"tail tolerance must be positive, got {eta}")
    if t < 0:
        raise DomainError(f"time must be nonnegative, got {t}")
    _require_valid(psi)
    n = psi.n
    if t == 0:
        return DiscreteMeasure.dirac(np.zeros(n))
    mass = psi.mu.total_mass()
    drift = t * psi.c1
    if mass == 0:
        return DiscreteMeasure.dirac(drift, math.exp(t * psi.c0))
    order = max(poisson_truncation_order(t * mass, eta), order or 0)
    level = DiscreteMeasure.dirac(np.zeros(n))
    locs, weights = [], []
    for m in range(order + 1):
        if m:
            level = level.convolve(psi.mu, cfg.tau_dedup)
        log_factor = t * (psi.c0 - mass) + m * math.log(t) - gammaln(m + 1)
        locs.append(level.locations)
        weights.append(level.weights * math.exp(log_factor))
    total = len(np.concatenate(weights))
    if total > MAX_ATOMS:
        raise MeasureOverflowError(f"subordination measure has {total} atoms (limit {MAX_ATOMS})")
    nu = DiscreteMeasure(np.vstack(locs), np.concatenate(weights))
    return nu.merged(cfg.tau_dedup).shifted(drift)


def subordinate_semigroup_value(psi: BernsteinFunction, tup: CommutingTuple, t: float, eta: float,
                                cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> np.ndarray:
    """``g_t(A) = sum_atoms w T(u)`` over the truncated subordination measure.

    The truncation order is raised until the operator-norm tail
    ``||T(t c1)|| exp(t (c0 - W + V)) P(Poisson(t V) > M)`` with
    ``V = sum_k w_k ||T(u_k)||`` is below ``eta``, so the error stays below
    ``eta`` even when ``T`` grows along the atoms.  Raises
    :class:`ConvergenceError` when that bound cannot be met in floating
    point or the sum overflows.
    """
    _check_dims(psi, tup)
    _require_valid(psi)
    order = None
    if t > 0 and len(psi.mu):
        growth = sum(w * np.linalg.norm(semigroup_value(tup, u), 2)
                     for u, w in zip(psi.mu.locations, psi.mu.weights))
        log_prefactor = (math.log(np.linalg.norm(semigroup_value(tup, t * psi.c1), 2))
                         + t * (psi.c0 - psi.mu.total_mass() + growth))
        log_target = math.log(eta) - log_prefactor
        if log_target < math.log(1e-300):
            raise ConvergenceError(
                f"semigroup growth along the atoms (log factor {log_prefactor:.1f}) is too large "
                f"to certify a truncation error of {eta:g}"
            )
        order = poisson_truncation_order(t * growth, math.exp(log_target))
    nu = subordinate_measure(psi, t, eta, cfg, order)
    result = np.zeros((tup.d, tup.d), dtype=complex)
    with np.errstate(over="ignore", invalid="ignore"):
        for u, w in zip(nu.locations, nu.weights):
            result += w * semigroup_value(tup, u)
    if not np.all(np.isfinite(result)):
        raise ConvergenceError("subordinated semigroup value overflowed")
    return result


@dataclass(frozen=True, eq=False)
class SpectralMappingReport:
    eig_psi: SpectrumPointSet
    image_joint: SpectrumPointSet
    image_biprime: SpectrumPointSet
    image_shilov: SpectrumPointSet
    distances: dict
    verdicts: dict
    psi_minus_infinity: float
    minus_infinity_distance: float

    @property
    def passed(self) -> bool:
        return all(v for v in self.verdicts.values() if v is not None)

    def to_json(self) -> dict:
        return {
            "eig_psi": self.eig_psi.sorted().to_json("eig_psi"),
            "image_joint": self.image_joint.sorted().to_json("psi_joint"),
            "image_biprime": self.image_biprime.sorted().to_json("psi_sigma_biprime"),
            "image_shilov": self.image_shilov.sorted().to_json("psi_shilov"),
            "distances": dict(self.distances),
            "verdicts": dict(self.verdicts),
            "psi_minus_infinity": self.psi_minus_infinity,
            "minus_infinity_distance": self.minus_infinity_distance,
        }


def spectral_mapping_report(psi: BernsteinFunction, tup: CommutingTuple, cfg: ToleranceConfig | None = None,
                            tol: float = 1e-7) -> SpectralMappingReport:
    """Compare ``eig(psi(A))`` with the images of the joint spectra under ``psi``.

    Verdicts: inclusion of ``psi(sigma'')`` and ``psi(Shilov)`` in
    ``eig(psi(A))``; equality of ``eig(psi(A))`` with ``psi`` of the joint
    eigenvalues; projections of the Shilov spectrum onto each coordinate
    equal the individual spectra; and, when ``psi = exp(u . s) - 1``,
    ``eig(T(u)) = exp(u . joint eigenvalues)``.  The distance from
    ``psi(-inf)`` to ``eig(psi(A))`` is recorded without a verdict.
    """
    cfg = cfg or tup.tolerances
    _check_dims(psi, tup)
    tol_dedup = cfg.tau_dedup
    mat = psi_of_tuple(psi, tup)
    eig = SpectrumPointSet.from_points(np.linalg.eigvals(mat).reshape(-1, 1), None, tol_dedup, 1)
    joint = joint_eigenvalues(tup)
    shilov = shilov_spectrum(tup, cfg)
    image_joint = joint.map(lambda p: psi_formula(psi, p))
    image_shilov = shilov.map(lambda p: psi_formula(psi, p))
    # the bicommutant scan is the Shilov spectrum for bounded tuples
    image_biprime = image_shilov

    distances = {
        "matrix_equality": eig.hausdorff(image_joint),
        "biprime_inclusion_gap": image_biprime.subset_gap(eig),
        "shilov_inclusion_gap": image_shilov.subset_gap(eig),
    }
    verdicts = {
        "biprime_inclusion": distances["biprime_inclusion_gap"] <= tol,
        "shilov_inclusion": distances["shilov_inclusion_gap"] <= tol,
        "matrix_equality": distances["matrix_equality"] <= tol,
    }
    proj = 0.0
    for j, a in enumerate(tup.matrices):
        spec_j = SpectrumPointSet.from_points(np.linalg.eigvals(a).reshape(-1, 1), None, tol_dedup, 1)
        proj = max(proj, shilov.project(j).hausdorff(spec_j))
    distances["projection"] = proj
    verdicts["projection_property"] = proj <= tol

    u = psi.exponential_shift()
    if u is not None:
        eig_t = SpectrumPointSet.from_points(
            np.linalg.eigvals(semigroup_value(tup, u)).reshape(-1, 1), None, tol_dedup, 1
        )
        dist = eig_t.hausdorff(joint.map(lambda p: np.exp(u @ p)))
        distances["exponential_mapping"] = dist
        verdicts["exponential_mapping"] = dist <= tol
    else:
        distances["exponential_mapping"] = None
        verdicts["exponential_mapping"] = None

    minf = psi_at_minus_infinity(psi)
    if math.isfinite(minf):
        minf_dist = float(np.abs(eig.points[:, 0] - minf).min())
    else:
        minf_dist = math.inf
    return SpectralMappingReport(eig, image_joint, image_biprime, image_shilov, distances,
                                 {k: (None if v is None else bool(v)) for k, v in verdicts.items()},
                                 minf, minf_dist)
