"""Stability of multiparameter matrix semigroups on cones.

``T(v) = exp(v_1 A_1) ... exp(v_n A_n)``.  Lengths ``|v|`` of cone vectors
are measured in the max norm, so a ray direction ``u`` is normalized to
``max_j u_j = 1`` and ``T(t u)`` is sampled at ``|t u| = t``.  Operator
norms are spectral norms, vector norms Euclidean.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as spla
from numpy.polynomial import legendre
from scipy.optimize import nnls

from ._parallel import ordered_map
from .errors import BoundedSemigroupError, StructuralError, ValidationError
from .joint_spectra import residual_spectrum, shilov_spectrum
from .linalg_core import (
    DEFAULT_TOLERANCES,
    CommutingTuple,
    SpectrumPointSet,
    ToleranceConfig,
    joint_eigenvalues,
    make_rng,
    numerical_rank,
    semigroup_value,
)

__all__ = [
    "Cone",
    "RadiusResult",
    "StabilityReport",
    "RolewiczResult",
    "StrongStabilityReport",
    "CascadeSolution",
    "check_bounded_semigroup",
    "shilov_spectral_bound",
    "spectral_radius_at",
    "partial_semigroup_norms",
    "fit_decay_rate",
    "stability_report",
    "rolewicz_check",
    "strong_stability_conditions",
    "cascade_solve",
    "RATE_TOL",
    "GRID_NODES",
]

RATE_TOL = 1e-9
GRID_NODES = 64
_TINY = 1e-300


def _sup_normalize(v: np.ndarray) -> np.ndarray:
    return v / np.max(np.abs(v), axis=-1, keepdims=True)


@dataclass(frozen=True, eq=False)
class Cone:
    """Closed cone spanned by finitely many strictly positive rays.

    Rays are stored with unit Euclidean length; ``sample_count`` is the number
    of extra directions drawn as random convex combinations of the rays.
    """

    rays: np.ndarray
    sample_count: int = 16

    def __post_init__(self):
        rays = np.array(self.rays, dtype=float)
        if rays.ndim == 1:
            rays = rays.reshape(1, -1)
        if rays.ndim != 2 or rays.shape[0] == 0 or rays.shape[1] == 0:
            raise StructuralError("a cone needs at least one ray in R^n, n >= 1")
        if not np.all(np.isfinite(rays)):
            raise ValidationError("cone rays must be finite")
        if np.any(rays <= 0):
            raise ValidationError("cone rays must be strictly positive componentwise (degenerate cone)")
        if int(self.sample_count) < 0:
            raise ValidationError("sample_count must be nonnegative")
        norms = np.linalg.norm(rays, axis=1, keepdims=True)
        # leave already-unit rays untouched so serialization round-trips exactly
        rays = np.where(np.abs(norms - 1.0) <= 4 * np.finfo(float).eps, rays, rays / norms)
        rays.setflags(write=False)
        object.__setattr__(self, "rays", rays)
        object.__setattr__(self, "sample_count", int(self.sample_count))

    @property
    def n(self) -> int:
        return self.rays.shape[1]

    @classmethod
    def diagonal(cls, n: int, sample_count: int = 0) -> "Cone":
        return cls(np.ones((1, n)), sample_count)

    def is_solid(self) -> bool:
        """Nonempty interior in ``R^n``."""
        return int(np.linalg.matrix_rank(self.rays)) == self.n

    def sample_rays(self, rng=None, count: int | None = None) -> np.ndarray:
        """Generating rays followed by Dirichlet combinations, max-norm normalized."""
        rng = make_rng(rng)
        count = self.sample_count if count is None else count
        out = [self.rays]
        if count and self.rays.shape[0] > 1:
            weights = rng.dirichlet(np.ones(self.rays.shape[0]), size=count)
            out.append(weights @ self.rays)
        return _sup_normalize(np.vstack(out))

    def sample_points(self, rng, count: int, radius: float) -> np.ndarray:
        """``count`` random cone vectors with ``|v|`` uniform in ``[0, radius]``."""
        rng = make_rng(rng)
        if self.rays.shape[0] > 1:
            dirs = rng.dirichlet(np.ones(self.rays.shape[0]), size=count) @ self.rays
        else:
            dirs = np.repeat(self.rays, count, axis=0)
        return _sup_normalize(dirs) * rng.uniform(0.0, radius, size=(count, 1))

    def contains(self, v, tol: float = 1e-9) -> bool:
        v = np.asarray(v, dtype=float).reshape(-1)
        size = float(np.linalg.norm(v))
        if size == 0.0:
            return True
        _, resid = nnls(self.rays.T, v)
        return bool(resid <= tol * size)

    def to_json(self) -> dict:
        return {"rays": self.rays.tolist(), "sample_count": self.sample_count}

    @classmethod
    def from_json(cls, payload: dict) -> "Cone":
        try:
            return cls(np.asarray(payload["rays"], dtype=float), int(payload.get("sample_count", 16)))
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed cone data: {exc}") from exc


def check_bounded_semigroup(tup: CommutingTuple, tol: float = 1e-9) -> None:
    """Reject tuples whose partial semigroups are not bounded.

    Requires ``Re eig(A_j) <= tol`` and, for eigenvalues on the imaginary
    axis, equal algebraic and geometric multiplicity.
    """
    problems = []
    for j, a in enumerate(tup.matrices):
        eig = np.linalg.eigvals(a)
        scale = max(1.0, float(np.abs(eig).max()))
        worst = float(eig.real.max())
        if worst > tol * scale:
            problems.append(f"A_{j + 1} has an eigenvalue with real part {worst:.6g} > 0")
            continue
        axis = eig[np.abs(eig.real) <= tol * scale]
        seen = []
        for mu in axis:
            if any(abs(mu - s) <= 1e-6 * scale for s in seen):
                continue
            seen.append(mu)
            algebraic = int(np.sum(np.abs(eig - mu) <= 1e-6 * scale))
            geometric = tup.d - numerical_rank(a - mu * np.eye(tup.d), tup.tolerances)
            if geometric < algebraic:
                problems.append(f"A_{j + 1} has a defective eigenvalue {mu:.6g} on the imaginary axis")
    if problems:
        raise BoundedSemigroupError("bounded-semigroup precondition violated: " + "; ".join(problems))


def shilov_spectral_bound(tup: CommutingTuple, cfg: ToleranceConfig | None = None) -> float:
    """``s(A) = max sum_j Re lam_j`` over the Shilov spectrum."""
    spec = shilov_spectrum(tup, cfg)
    return float(spec.points.real.sum(axis=1).max())


@dataclass(frozen=True)
class RadiusResult:
    u: tuple
    radius: float
    log_radius: float
    predicted: float
    deviation: float
    holds: bool


def spectral_radius_at(tup: CommutingTuple, u, spectrum: SpectrumPointSet | None = None) -> RadiusResult:
    """``r(T(u))`` with the check ``log r(T(u)) = max_{lam} u . Re lam``."""
    u = np.asarray(u, dtype=float).reshape(-1)
    spectrum = joint_eigenvalues(tup) if spectrum is None else spectrum
    radius = float(np.abs(np.linalg.eigvals(semigroup_value(tup, u))).max())
    log_radius = math.log(radius) if radius > 0 else -math.inf
    predicted = float((spectrum.points.real @ u).max())
    deviation = abs(log_radius - predicted)
    holds = deviation <= 1e-8 * (1.0 + float(np.linalg.norm(u)))
    return RadiusResult(tuple(float(x) for x in u), radius, log_radius, predicted, deviation, bool(holds))


def partial_semigroup_norms(tup: CommutingTuple, j: int, times) -> np.ndarray:
    """``||T_j(t)||`` for each ``t``."""
    e = np.zeros(tup.n)
    e[j] = 1.0
    return np.array([np.linalg.norm(semigroup_value(tup, t * e), 2) for t in np.asarray(times, dtype=float)])


def fit_decay_rate(times, norms) -> float:
    """Least-squares slope of ``log norm`` against ``t`` over the last half of the samples.

    Norms below 1e-300 are dropped; ``-inf`` is returned when fewer than two
    usable samples remain in that half.
    """
    times = np.asarray(times, dtype=float)
    norms = np.asarray(norms, dtype=float)
    half = slice(len(times) // 2, None)
    t, v = times[half], norms[half]
    ok = v > _TINY
    if ok.sum() < 2:
        return -math.inf
    slope, _ = np.polyfit(t[ok], np.log(v[ok]), 1)
    return float(slope)


def _time_grid(t_max: float) -> np.ndarray:
    return np.geomspace(t_max / 1000.0, t_max, GRID_NODES)


def _ray_profile(tup: CommutingTuple, u: np.ndarray, times: np.ndarray):
    """Operator norms and basis-vector norms of ``T(t u)`` along the grid."""
    op, cols = [], []
    for t in times:
        m = semigroup_value(tup, t * u)
        op.append(np.linalg.norm(m, 2))
        cols.append(np.linalg.norm(m, axis=0))
    return np.array(op), np.array(cols)


def _orthant_sample(rng, n: int, count: int = 16) -> np.ndarray:
    w = rng.dirichlet(np.ones(n), size=count) + 0.02
    return _sup_normalize(np.vstack([np.ones((1, n)), w]))


@dataclass(frozen=True, eq=False)
class StabilityReport:
    s_bound: float
    radii: tuple
    fitted_rates: tuple
    verdicts: dict
    omega_K: float
    M_K: float
    epsilon: float
    consistent: bool
    details: dict = field(default_factory=dict)
    curves: tuple = ()
    counterexample: dict | None = None

    def to_json(self) -> dict:
        return {
            "s_bound": self.s_bound,
            "radii": [{"u": list(r.u), "radius": r.radius, "log_radius": r.log_radius,
                       "predicted": r.predicted, "log_law_holds": r.holds} for r in self.radii],
            "fitted_rates": [{"ray": list(u), "rate": w} for u, w in self.fitted_rates],
            "verdicts": dict(self.verdicts),
            "omega_K": self.omega_K,
            "M_K": self.M_K,
            "epsilon": self.epsilon,
            "consistent": self.consistent,
            "details": dict(self.details),
            "counterexample": self.counterexample,
        }


def stability_report(tup: CommutingTuple, cone: Cone, t_max: float = 50.0,
                     cfg: ToleranceConfig | None = None, seed=0) -> StabilityReport:
    """Evaluate the ten equivalent stability statements on sampled data.

    (1)/(2): ``r(T(u)) < 1`` for all/some sampled ``u`` in the open orthant.
    (3): ``s(A) < 0``.
    (4)/(5): uniform decay along all/some sampled orthant rays.
    (6)/(7): uniform decay on every sampled ray of the orthant and cone /
    on the given cone.
    (8)/(9): ``exp(eps |v|) ||T(v)||`` and ``exp(eps |v|) ||T(v) e_i||`` decay
    on the cone, ``eps = |omega_K| / 2``.
    (10): ``||T(v)|| <= M_K exp(omega_K |v|)`` on the cone with ``omega_K < 0``.
    Negativity is tested against ``RATE_TOL``.
    """
    cfg = cfg or tup.tolerances
    if cone.n != tup.n:
        raise StructuralError(f"cone lives in R^{cone.n}, tuple has {tup.n} matrices")
    if not t_max > 0:
        raise ValidationError("T_max must be positive")
    check_bounded_semigroup(tup)
    rng = make_rng(seed)
    orthant = _orthant_sample(rng, tup.n)
    cone_rays = cone.sample_rays(rng)
    spectrum = joint_eigenvalues(tup)
    s_bound = shilov_spectral_bound(tup, cfg)
    times = _time_grid(t_max)

    radii = tuple(spectral_radius_at(tup, u, spectrum) for u in np.vstack([orthant, cone_rays]))
    below_one = [r.log_radius < -RATE_TOL * max(r.u) for r in radii[: len(orthant)]]

    all_rays = np.vstack([orthant, cone_rays])
    profiles = ordered_map(lambda u: _ray_profile(tup, u, times), list(all_rays))
    rates = [fit_decay_rate(times, op) for op, _ in profiles]
    orth_rates, cone_rates = rates[: len(orthant)], rates[len(orthant):]
    cone_profiles = profiles[len(orthant):]

    omega = max(cone_rates)
    epsilon = abs(omega) / 2 if math.isfinite(omega) else math.inf
    # M_K over the grid and a 10^3-point random sample of the cone
    sample = cone.sample_points(rng, 1000, t_max)
    norms_sample = np.array([np.linalg.norm(semigroup_value(tup, v), 2) for v in sample])
    sample_len = sample.max(axis=1)
    if omega < 0:
        finite_omega = omega if math.isfinite(omega) else -1e300
        grid_m = max(float(np.max(op * np.exp(-finite_omega * times))) for op, _ in cone_profiles)
        with np.errstate(over="ignore"):
            samp_m = float(np.max(norms_sample * np.exp(-finite_omega * sample_len)))
        m_k = max(grid_m, samp_m, 1.0)
        with np.errstate(over="ignore"):
            envelope = float(np.max(norms_sample * np.exp(-finite_omega * sample_len / 2)))
    else:
        m_k = math.inf
        envelope = math.inf

    def tail_decays(values):
        with np.errstate(over="ignore", invalid="ignore"):
            scaled = values * np.exp(epsilon * times) if math.isfinite(epsilon) else values
        return fit_decay_rate(times, scaled) < -RATE_TOL or bool(np.all(values[len(times) // 2:] <= _TINY))

    negative = [w < -RATE_TOL for w in rates]
    uniform_exp = omega < -RATE_TOL and all(tail_decays(op) for op, _ in cone_profiles)
    strong_exp = omega < -RATE_TOL and all(
        tail_decays(cols[:, i]) for _, cols in cone_profiles for i in range(tup.d)
    )
    verdicts = {
        "1": all(below_one),
        "2": any(below_one),
        "3": s_bound < -RATE_TOL,
        "4": all(w < -RATE_TOL for w in orth_rates),
        "5": any(w < -RATE_TOL for w in orth_rates),
        "6": all(negative),
        "7": all(w < -RATE_TOL for w in cone_rates),
        "8": bool(uniform_exp),
        "9": bool(strong_exp),
        "10": bool(omega < -RATE_TOL and math.isfinite(m_k)),
    }
    verdicts = {k: bool(v) for k, v in verdicts.items()}
    consistent = len(set(verdicts.values())) == 1
    details = {
        "t_grid": [float(times[0]), float(times[-1]), GRID_NODES],
        "orthant_rates": [float(w) for w in orth_rates],
        "cone_rates": [float(w) for w in cone_rates],
        "log_law_max_deviation": float(max(r.deviation for r in radii)),
        "decay_envelope": envelope,
        "sample_max_norm": float(norms_sample.max()),
    }
    counterexample = None
    if not consistent:
        counterexample = {
            "verdicts": dict(verdicts),
            "s_bound": s_bound,
            "radii": [[list(r.u), r.log_radius] for r in radii],
            "rates": [[u.tolist(), float(w)] for u, w in zip(all_rays, rates)],
        }
    curves = tuple(
        (ray_id, float(t), float(v))
        for ray_id, (op, _) in enumerate(cone_profiles)
        for t, v in zip(times, op)
    )
    fitted = tuple((tuple(float(x) for x in u), float(w)) for u, w in zip(cone_rays, cone_rates))
    return StabilityReport(s_bound, radii, fitted, verdicts, float(omega), float(m_k), float(epsilon),
                           consistent, details, curves, counterexample)


@dataclass(frozen=True, eq=False)
class RolewiczResult:
    """Per unit vector: integral estimate, tail bound and finite verdict."""

    power: float
    estimates: tuple
    tail_bounds: tuple
    radii: tuple
    finite: tuple
    diagnostics: tuple
    solid: bool
    stability_verdict: bool
    consistent: bool

    @property
    def all_finite(self) -> bool:
        return all(self.finite)

    @property
    def max_tail_ratio(self) -> float:
        ratios = [t / e if e > 0 else (0.0 if t == 0 else math.inf)
                  for t, e, f in zip(self.tail_bounds, self.estimates, self.finite) if f]
        return max(ratios) if ratios else math.inf

    def to_json(self) -> dict:
        return {
            "phi": {"kind": "power", "p": self.power},
            "estimates": list(self.estimates),
            "tail_bounds": list(self.tail_bounds),
            "radii": list(self.radii),
            "finite": list(self.finite),
            "diagnostics": list(self.diagnostics),
            "max_tail_ratio": self.max_tail_ratio,
            "solid": self.solid,
            "stability_verdict": self.stability_verdict,
            "consistent": self.consistent,
        }


def _radial_nodes(radius: float, panels: int, order: int):
    x, w = legendre.leggauss(order)
    edges = np.concatenate([[0.0], np.geomspace(radius * 2.0 ** (1 - panels), radius, panels)])
    a, b = edges[:-1, None], edges[1:, None]
    nodes = (0.5 * (b - a) * x + 0.5 * (b + a)).reshape(-1)
    weights = (0.5 * (b - a) * w).reshape(-1)
    return nodes, weights


def rolewicz_check(tup: CommutingTuple, cone: Cone, power: float = 1.0, vectors=None, seed=0,
                   start_radius: float = 8.0, max_radius: float = 2.0**14, panels: int = 32,
                   order: int = 8, rel_tail: float = 1e-7) -> RolewiczResult:
    """Estimate ``int_K ||T(v) x||^p dv`` for unit vectors ``x``.

    The cone integral is factorized into a ray average over sampled
    directions (normalized ray measure) times radial integrals
    ``int_0^R ||T(s u) x||^p ds`` computed with composite Gauss-Legendre on
    geometric panels.  The tail beyond ``R`` is bounded by
    ``||T(R u) x||^p / (p |omega|)`` with ``omega`` the fitted radial rate;
    ``R`` doubles until the tail is below ``rel_tail`` times the estimate.
    No decay before ``max_radius`` gives a divergent verdict.
    """
    if power < 1:
        raise ValidationError("only phi(t) = t^p with p >= 1 is supported")
    if cone.n != tup.n:
        raise StructuralError(f"cone lives in R^{cone.n}, tuple has {tup.n} matrices")
    check_bounded_semigroup(tup)
    xs = np.eye(tup.d, dtype=complex) if vectors is None else np.array(vectors, dtype=complex).reshape(-1, tup.d).T
    xs = xs / np.linalg.norm(xs, axis=0, keepdims=True)
    rays = cone.sample_rays(make_rng(seed))

    def radial(u, radius):
        nodes, weights = _radial_nodes(radius, panels, order)
        vals = np.array([np.linalg.norm(semigroup_value(tup, s * u) @ xs, axis=0) for s in nodes])
        integral = weights @ vals**power
        tail_nodes = nodes[nodes >= radius / 2]
        tail_vals = vals[nodes >= radius / 2]
        end = np.linalg.norm(semigroup_value(tup, radius * u) @ xs, axis=0)
        rates = np.array([fit_decay_rate(np.concatenate([tail_nodes, [radius]]),
                                         np.concatenate([tail_vals[:, i], [end[i]]])) for i in range(xs.shape[1])])
        return integral, end, rates

    k = xs.shape[1]
    estimates = np.zeros(k)
    tails = np.full(k, math.inf)
    used = np.zeros(k)
    finite = np.zeros(k, dtype=bool)
    diagnostics = [""] * k
    pending = np.ones(k, dtype=bool)
    radius = start_radius
    while pending.any() and radius <= max_radius:
        results = ordered_map(lambda u: radial(u, radius), list(rays))
        integral = np.mean([r[0] for r in results], axis=0)
        tail = np.zeros(k)
        for _, end, rates in results:
            with np.errstate(divide="ignore"):
                contrib = np.where(end ** power <= _TINY, 0.0,
                                   np.where(rates < -RATE_TOL, end ** power / (power * np.abs(rates)), math.inf))
            tail += contrib / len(results)
        for i in np.flatnonzero(pending):
            estimates[i], tails[i], used[i] = integral[i], tail[i], radius
            if tail[i] < rel_tail * integral[i] or tail[i] == 0.0:
                finite[i] = True
                pending[i] = False
        radius *= 2
    for i in np.flatnonzero(pending):
        diagnostics[i] = f"no decay detected up to radius {used[i]:g}; integral estimate grows with R"
    solid = cone.is_solid()
    report = stability_report(tup, cone, seed=seed)
    stable = all(report.verdicts.values())
    consistent = (not (finite.all() and solid)) or stable
    return RolewiczResult(float(power), tuple(float(e) for e in estimates), tuple(float(t) for t in tails),
                          tuple(float(r) for r in used), tuple(bool(f) for f in finite), tuple(diagnostics),
                          solid, bool(stable), bool(consistent))


@dataclass(frozen=True, eq=False)
class StrongStabilityReport:
    rays: tuple
    axis_points: tuple
    residual_axis_points: tuple
    hypotheses_hold: bool
    ray_decay: tuple
    sequence_rates: tuple
    sequence_decay_verified: bool

    @property
    def strongly_stable(self) -> bool:
        return all(all(r) for r in self.ray_decay)

    def to_json(self) -> dict:
        def pts(items):
            return [[[float(z.real), float(z.imag)] for z in row] for row in items]

        return {
            "rays": [list(u) for u in self.rays],
            "axis_points": pts(self.axis_points),
            "residual_axis_points": pts(self.residual_axis_points),
            "hypotheses_hold": self.hypotheses_hold,
            "ray_decay": [list(r) for r in self.ray_decay],
            "sequence_rates": list(self.sequence_rates),
            "sequence_decay_verified": self.sequence_decay_verified,
            "strongly_stable": self.strongly_stable,
        }


def strong_stability_conditions(tup: CommutingTuple, cone: Cone, seed=0, t_max: float = 50.0,
                                axis_tol: float = 1e-9) -> StrongStabilityReport:
    """Spectral hypotheses for strong stability along sampled rays, plus decay checks.

    For each ray ``u``: the points of ``u . sigma(A)`` on the imaginary axis
    and those of the residual spectrum of ``sum_j u_j A_j``.  Decay of
    ``||T(t u) e_i||`` is fitted per basis vector; if every ray decays for
    ``e_i`` then decay along a random cone sequence is confirmed as well.
    """
    if cone.n != tup.n:
        raise StructuralError(f"cone lives in R^{cone.n}, tuple has {tup.n} matrices")
    check_bounded_semigroup(tup)
    rng = make_rng(seed)
    rays = cone.sample_rays(rng)
    spectrum = joint_eigenvalues(tup)
    times = _time_grid(t_max)
    axis_points, residual_points, decay = [], [], []
    for u in rays:
        values = spectrum.points @ u
        axis_points.append(tuple(complex(z) for z in values if abs(z.real) <= axis_tol))
        gen = CommutingTuple([tup.combination(u)], tup.tolerances)
        res = residual_spectrum(gen).points[:, 0]
        residual_points.append(tuple(complex(z) for z in res if abs(z.real) <= axis_tol))
        _, cols = _ray_profile(tup, u, times)
        decay.append(tuple(
            bool(fit_decay_rate(times, cols[:, i]) < -RATE_TOL or np.all(cols[len(times) // 2:, i] <= _TINY))
            for i in range(tup.d)
        ))
    hypotheses = all(len(r) == 0 for r in residual_points)

    # a cone sequence v_m -> infinity with wandering directions
    lengths = np.geomspace(t_max / 100.0, t_max, 48)
    points = cone.sample_points(rng, lengths.size, 1.0)
    dirs = _sup_normalize(np.where(points.max(axis=1, keepdims=True) > 0, points, 1.0))
    seq = np.array([np.linalg.norm(semigroup_value(tup, t * u), axis=0) for t, u in zip(lengths, dirs)])
    seq_rates = tuple(
        float(fit_decay_rate(lengths, seq[:, i])) if np.any(seq[len(lengths) // 2:, i] > _TINY) else -math.inf
        for i in range(tup.d)
    )
    sequence_decay = all(
        (not all(row[i] for row in decay)) or seq_rates[i] < -RATE_TOL for i in range(tup.d)
    )
    return StrongStabilityReport(tuple(tuple(float(x) for x in u) for u in rays), tuple(axis_points),
                                 tuple(residual_points), bool(hypotheses), tuple(decay), seq_rates, bool(sequence_decay))


@dataclass(frozen=True, eq=False)
class CascadeSolution:
    """``u(t1, t2) = T_1(t1) T_2(t2) v0`` on a rectangular grid."""

    t1: np.ndarray
    t2: np.ndarray
    values: np.ndarray
    norms: np.ndarray
    in_cone: np.ndarray
    omega_K: float
    M_K: float
    boundary_error: float

    def rows(self):
        for i, a in enumerate(self.t1):
            for k, b in enumerate(self.t2):
                yield float(a), float(b), float(self.norms[i, k])


def cascade_solve(tup: CommutingTuple, v0, cone: Cone, n1: int = 20, n2: int = 20,
                  t1_max: float = 5.0, t2_max: float = 5.0) -> CascadeSolution:
    """Solve ``du/dt1 = A_1 u`` with ``u(0, t2) = v(t2)``, ``dv/dt2 = A_2 v``, ``v(0) = v0``.

    ``omega_K`` is the largest per-direction decay rate over grid points in
    the cone with ``|v|`` at least half the largest such length;
    ``M_K = max ||u|| / (||v0|| exp(omega_K |v|))`` over grid points in the
    cone.
    """
    if tup.n != 2:
        raise StructuralError(f"the cascade needs exactly two matrices, got {tup.n}")
    if cone.n != 2:
        raise StructuralError("the cascade cone must live in R^2")
    v0 = np.asarray(v0, dtype=complex).reshape(-1)
    if v0.shape != (tup.d,):
        raise StructuralError(f"v0 must have length {tup.d}")
    t1 = np.linspace(0.0, t1_max, n1)
    t2 = np.linspace(0.0, t2_max, n2)
    e1 = [spla.expm(a * tup.matrices[0]) for a in t1]
    v = [spla.expm(b * tup.matrices[1]) @ v0 for b in t2]
    values = np.array([[m @ w for w in v] for m in e1])
    norms = np.linalg.norm(values, axis=2)
    grid = np.stack(np.meshgrid(t1, t2, indexing="ij"), axis=-1)
    inside = np.array([[cone.contains(p) for p in row] for row in grid])
    boundary = float(np.max(np.linalg.norm(values[0] - np.array(v), axis=1))) if n1 else 0.0

    v0_norm = float(np.linalg.norm(v0))
    if v0_norm == 0.0:
        return CascadeSolution(t1, t2, values, norms, inside, -math.inf, 0.0, boundary)
    lengths = grid.max(axis=2)
    far = inside & (lengths >= 0.5 * lengths[inside].max()) & (lengths > 0)
    groups: dict[tuple, list] = {}
    for idx in zip(*np.nonzero(far)):
        key = tuple(np.round(grid[idx] / lengths[idx], 9))
        groups.setdefault(key, []).append(idx)
    rates = []
    for idx in groups.values():
        if len(idx) >= 2:
            ls = np.array([lengths[i] for i in idx])
            ns = np.array([norms[i] for i in idx]) / v0_norm
            ok = ns > _TINY
            if ok.sum() >= 2:
                rates.append(float(np.polyfit(ls[ok], np.log(ns[ok]), 1)[0]))
    if not rates:
        ls, ns = lengths[far], norms[far] / v0_norm
        ok = ns > _TINY
        rates.append(float(np.polyfit(ls[ok], np.log(ns[ok]), 1)[0]) if ok.sum() >= 2 else -math.inf)
    omega = max(rates)
    finite_omega = omega if math.isfinite(omega) else 0.0
    m_k = float(np.max(norms[inside] / (v0_norm * np.exp(finite_omega * lengths[inside]))))
    return CascadeSolution(t1, t2, values, norms, inside, float(omega), m_k, boundary)
