"""Koszul complex of a shifted tuple and the Taylor spectrum.

Basis of ``X (x) Lambda^m C^n``: blocks indexed by strictly increasing index
tuples of length ``m`` in lexicographic order, each block a copy of ``C^d``.
"""
from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from math import comb

import numpy as np

from ._parallel import ordered_map
from .errors import ValidationError
from .joint_spectra import MembershipVerdict, _check_point
from .linalg_core import CommutingTuple, SpectrumPointSet, ToleranceConfig, candidate_points, numerical_rank

__all__ = [
    "KoszulComplex",
    "LastDifferentialVerdict",
    "build_complex",
    "complex_defect",
    "is_exact",
    "exactness_profile",
    "taylor_membership",
    "taylor_spectrum",
    "last_differential_classify",
    "euler_characteristic",
]


@dataclass(frozen=True, eq=False)
class KoszulComplex:
    """``0 <- X_0 <-d_0- X_1 <- ... <-d_{n-1}- X_n <- 0``.

    ``differentials[m]`` maps ``X_{m+1}`` to ``X_m`` and has shape
    ``(d*C(n,m), d*C(n,m+1))``.
    """

    n: int
    d: int
    differentials: tuple
    lam: np.ndarray
    scale: float

    def space_dim(self, m: int) -> int:
        if m < 0 or m > self.n:
            return 0
        return self.d * comb(self.n, m)


def _index_sets(n, m):
    return list(itertools.combinations(range(n), m))


def build_complex(tup: CommutingTuple, lam) -> KoszulComplex:
    """Assemble the differentials of the Koszul complex of ``lam I - A``.

    The column block of ``e_{i_1} ^ ... ^ e_{i_{m+1}}`` receives
    ``(-1)^k (lam_{i_k} I - A_{i_k})`` in the row block of the index set
    with ``i_k`` removed (``k`` counted from 1).
    """
    lam = _check_point(tup, lam)
    n, d = tup.n, tup.d
    eye = np.eye(d)
    shifted = [l * eye - a for l, a in zip(lam, tup.matrices)]
    diffs = []
    for m in range(n):
        rows = {s: i for i, s in enumerate(_index_sets(n, m))}
        cols = _index_sets(n, m + 1)
        dm = np.zeros((d * len(rows), d * len(cols)), dtype=complex)
        for c, idx in enumerate(cols):
            for k, ik in enumerate(idx, start=1):
                r = rows[idx[: k - 1] + idx[k:]]
                dm[r * d : (r + 1) * d, c * d : (c + 1) * d] += (-1) ** k * shifted[ik]
        dm.setflags(write=False)
        diffs.append(dm)
    scale = max(1.0, max(float(np.linalg.norm(s)) for s in shifted)) ** 2
    return KoszulComplex(n, d, tuple(diffs), lam, scale)


def complex_defect(cx: KoszulComplex) -> float:
    """``max_m ||d_{m-1} d_m||_F``."""
    worst = 0.0
    for m in range(1, cx.n):
        worst = max(worst, float(np.linalg.norm(cx.differentials[m - 1] @ cx.differentials[m])))
    return worst


def _require_complex(cx: KoszulComplex):
    defect = complex_defect(cx)
    if defect > 1e-10 * cx.scale:
        raise ValidationError(f"not a complex: ||d_(m-1) d_m|| = {defect:.3e}")


def exactness_profile(cx: KoszulComplex, cfg: ToleranceConfig) -> list[dict]:
    """Per-position ranks and kernel dimensions.

    Position ``m`` is exact when ``dim ker d_{m-1} == rank d_m``, with
    ``d_{-1}`` and ``d_n`` the zero maps.
    """
    _require_complex(cx)
    ranks = [numerical_rank(dm, cfg) for dm in cx.differentials]
    profile = []
    for m in range(cx.n + 1):
        rank_in = ranks[m] if m < cx.n else 0          # image of d_m in X_m
        rank_out = ranks[m - 1] if m >= 1 else 0       # rank of d_{m-1} on X_m
        kernel = cx.space_dim(m) - rank_out
        profile.append(
            {
                "position": m,
                "dim": cx.space_dim(m),
                "rank_incoming": rank_in,
                "kernel_dim": kernel,
                "exact": kernel == rank_in,
            }
        )
    return profile


def is_exact(cx: KoszulComplex, cfg: ToleranceConfig) -> bool:
    return all(p["exact"] for p in exactness_profile(cx, cfg))


def _hodge_gap(cx: KoszulComplex) -> float:
    # smallest singular value of d_m d_m^H + d_{m-1}^H d_{m-1} over all m,
    # zero exactly when some position fails to be exact
    gaps = []
    for m in range(cx.n + 1):
        dim = cx.space_dim(m)
        lap = np.zeros((dim, dim), dtype=complex)
        if m < cx.n:
            dm = cx.differentials[m]
            lap += dm @ dm.conj().T
        if m >= 1:
            prev = cx.differentials[m - 1]
            lap += prev.conj().T @ prev
        gaps.append(float(np.linalg.eigvalsh(0.5 * (lap + lap.conj().T))[0]))
    return max(0.0, min(gaps)) / cx.scale


def taylor_membership(tup: CommutingTuple, lam, cfg: ToleranceConfig | None = None) -> MembershipVerdict:
    """Member iff the Koszul complex at ``lam`` is not exact.

    The witness value is the smallest eigenvalue of the Koszul Laplacians,
    relative to the squared scale; it vanishes exactly at non-exact points.
    """
    cfg = cfg or tup.tolerances
    cx = build_complex(tup, lam)
    member = not is_exact(cx, cfg)
    return MembershipVerdict(member, _hodge_gap(cx), cfg.tau_rank, "below")


def taylor_spectrum(tup: CommutingTuple, cfg: ToleranceConfig | None = None) -> SpectrumPointSet:
    cfg = cfg or tup.tolerances
    cands = list(candidate_points(tup).points)
    flags = ordered_map(lambda p: not is_exact(build_complex(tup, p), cfg), cands)
    keep = [p for p, f in zip(cands, flags) if f]
    return SpectrumPointSet.from_points(np.array(keep).reshape(-1, tup.n), None, cfg.tau_dedup, tup.n)


class LastDifferentialVerdict(enum.Enum):
    INJECTIVE_CLOSED_RANGE = "injective_closed_range"
    NOT_INJECTIVE = "not_injective"
    # ranges of matrices are closed; kept so the verdict mirrors the
    # three-way alternative for closed operators
    RANGE_NOT_CLOSED = "range_not_closed"


def last_differential_classify(tup: CommutingTuple, lam, cfg: ToleranceConfig | None = None) -> LastDifferentialVerdict:
    """Classify ``d_{n-1}`` at ``lam``; not injective iff ``lam`` is a joint approximate eigenvalue."""
    cfg = cfg or tup.tolerances
    cx = build_complex(tup, lam)
    last = cx.differentials[cx.n - 1]
    if numerical_rank(last, cfg) < cx.d:
        return LastDifferentialVerdict.NOT_INJECTIVE
    return LastDifferentialVerdict.INJECTIVE_CLOSED_RANGE


def euler_characteristic(cx: KoszulComplex) -> int:
    return sum((-1) ** m * cx.space_dim(m) for m in range(cx.n + 1))
