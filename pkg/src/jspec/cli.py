"""Command-line front end.

Every artifact starts with a provenance block (tool, version, seed,
tolerances, command options) and is written atomically.  Exit codes: 0 on
success, 2 on invalid input, 3 on numerical non-convergence.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile

import numpy as np
import scipy.linalg as spla

from . import __version__
from .bernstein import (
    BernsteinFunction,
    poisson_truncation_order,
    psi_at_minus_infinity,
    psi_of_tuple,
    spectral_mapping_report,
    subordinate_measure,
    subordinate_semigroup_value,
    validate as validate_psi,
)
from .errors import ConvergenceError, JSpecError
from .fixtures import named_fixtures, random_commuting_tuple, random_hermitian_tuple
from .joint_spectra import (
    approximate_spectrum,
    bicommutant_spectrum,
    commutant_spectrum,
    joint_spectrum_J,
    point_spectrum,
    residual_spectrum,
    shilov_spectrum,
)
from .koszul import build_complex, exactness_profile, taylor_spectrum
from .linalg_core import CommutingTuple, ToleranceConfig, candidate_points, commutation_residual, make_rng
from .stability import Cone, cascade_solve, rolewicz_check, stability_report

TOOL = "jspec"

SPECTRUM_KINDS = {
    "sigma_a": approximate_spectrum,
    "sigma_R": residual_spectrum,
    "sigma_J": joint_spectrum_J,
    "sigma_prime": lambda tup, cfg: commutant_spectrum(tup, None, cfg),
    "sigma_biprime": bicommutant_spectrum,
    "shilov": shilov_spectrum,
    "taylor": taylor_spectrum,
    "point": point_spectrum,
}
DEFAULT_KINDS = ("sigma_a", "sigma_R", "sigma_J", "sigma_prime", "sigma_biprime", "shilov")
OUTPUT_OPTIONS = {"out", "curves", "func"}


class InputError(ValueError):
    """Malformed input file or option."""


# ---------------------------------------------------------------- I/O helpers

def _load_json(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise InputError(f"malformed JSON in {path}: {exc}") from exc
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc


def _entry(value) -> complex:
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise InputError(f"complex entries are [re, im] pairs, got {value!r}")
        return complex(float(value[0]), float(value[1]))
    return complex(float(value))


def matrices_from_json(payload) -> list[np.ndarray]:
    """Parse ``{"n", "d", "matrices"}``; each matrix is flat row-major or nested rows."""
    try:
        n, d, raw = int(payload["n"]), int(payload["d"]), payload["matrices"]
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"tuple JSON needs integer n, d and a matrices list: {exc}") from exc
    if len(raw) != n:
        raise InputError(f"expected {n} matrices, found {len(raw)}")
    mats = []
    for k, m in enumerate(raw):
        try:
            if len(m) == d and all(isinstance(r, list) and len(r) == d for r in m):
                flat = [e for row in m for e in row]
            else:
                flat = list(m)
            if len(flat) != d * d:
                raise InputError(f"matrix {k} has {len(flat)} entries, expected {d * d}")
            mats.append(np.array([_entry(e) for e in flat], dtype=complex).reshape(d, d))
        except (TypeError, ValueError) as exc:
            raise InputError(f"matrix {k}: {exc}") from exc
    return mats


def tuple_to_json(tup: CommutingTuple) -> dict:
    return {
        "n": tup.n,
        "d": tup.d,
        "matrices": [[[float(z.real), float(z.imag)] for z in m.reshape(-1)] for m in tup.matrices],
    }


def _clean(obj):
    """Make an object strict-JSON: non-finite floats become strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isfinite(x):
            return x
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    if isinstance(obj, complex):
        return [_clean(obj.real), _clean(obj.imag)]
    return obj


def _atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".jspec-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _provenance(args, cfg: ToleranceConfig) -> dict:
    options = {k: v for k, v in sorted(vars(args).items()) if k not in OUTPUT_OPTIONS and not k.startswith("tau_")}
    return {"tool": TOOL, "version": __version__, "seed": args.seed, "tolerances": cfg.as_dict(), "command": options}


def _emit_json(args, cfg, body: dict, path: str | None) -> None:
    doc = {"provenance": _provenance(args, cfg)}
    doc.update(body)
    text = json.dumps(_clean(doc), indent=2) + "\n"
    if path:
        _atomic_write(path, text)
    else:
        sys.stdout.write(text)


def _emit_csv(args, cfg, header: list[str], columns: list[str], rows, path: str) -> None:
    lines = [f"# {line}" for line in json.dumps(_clean(_provenance(args, cfg)), sort_keys=True).splitlines()]
    lines += [f"# {h}" for h in header]
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(v if isinstance(v, str) else f"{v:.17e}" for v in row))
    _atomic_write(path, "\n".join(lines) + "\n")


def _tolerances(args) -> ToleranceConfig:
    return ToleranceConfig(args.tau_comm, args.tau_rank, args.tau_dedup, args.tau_feas)


def _load_tuple(path: str, cfg: ToleranceConfig) -> CommutingTuple:
    return CommutingTuple(matrices_from_json(_load_json(path)), cfg)


def _parse_point(text: str, n: int) -> np.ndarray:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"point must be a JSON list: {exc}") from exc
    point = np.array([_entry(e) for e in raw], dtype=complex)
    if point.shape != (n,):
        raise InputError(f"point needs {n} coordinates")
    return point


def _parse_pair(text: str, cast, name: str):
    parts = text.lower().split("x")
    if len(parts) != 2:
        raise InputError(f"{name} must look like AxB, got {text!r}")
    try:
        return cast(parts[0]), cast(parts[1])
    except ValueError as exc:
        raise InputError(f"{name}: {exc}") from exc


# ---------------------------------------------------------------- commands

def cmd_spectra(args, cfg):
    tup = _load_tuple(args.input, cfg)
    kinds = DEFAULT_KINDS if args.kinds == "all" else tuple(k.strip() for k in args.kinds.split(","))
    unknown = [k for k in kinds if k not in SPECTRUM_KINDS]
    if unknown:
        raise InputError(f"unknown spectrum kinds: {unknown}; choose from {sorted(SPECTRUM_KINDS)}")
    spectra = {k: SPECTRUM_KINDS[k](tup, cfg).to_json(k) for k in kinds}
    _emit_json(args, cfg, {"n": tup.n, "d": tup.d, "spectra": spectra}, args.out)


def cmd_taylor(args, cfg):
    tup = _load_tuple(args.input, cfg)
    points = [_parse_point(args.point, tup.n)] if args.point else list(candidate_points(tup).points)
    audits = []
    for p in points:
        profile = exactness_profile(build_complex(tup, p), cfg)
        audits.append({
            "point": [[float(z.real), float(z.imag)] for z in p],
            "member": not all(e["exact"] for e in profile),
            "positions": profile,
        })
    _emit_json(args, cfg, {"n": tup.n, "d": tup.d, "points": audits}, args.out)


def cmd_bernstein(args, cfg):
    tup = _load_tuple(args.input, cfg)
    psi = BernsteinFunction.from_json(_load_json(args.psi))
    report = validate_psi(psi)
    if not report.passed:
        raise InputError("invalid Bernstein data: " + "; ".join(report.structural_failures + report.probe_failures))
    mapping = spectral_mapping_report(psi, tup, cfg)
    matrix = psi_of_tuple(psi, tup)
    g = subordinate_semigroup_value(psi, tup, args.t, args.eta, cfg)
    nu = subordinate_measure(psi, args.t, args.eta, cfg)
    body = {
        "psi": psi.to_json(),
        "validation": report.to_json(),
        "psi_of_tuple": [[float(z.real), float(z.imag)] for z in matrix.reshape(-1)],
        "psi_minus_infinity": psi_at_minus_infinity(psi),
        "spectral_mapping": mapping.to_json(),
        "subordination": {
            "t": args.t,
            "eta": args.eta,
            "truncation_order": poisson_truncation_order(args.t * psi.mu.total_mass(), args.eta)
            if psi.mu.total_mass() > 0 and args.t > 0 else 0,
            "atoms": len(nu),
            "total_mass": nu.total_mass(),
            "exp_deviation": float(np.linalg.norm(g - spla.expm(args.t * matrix))),
        },
    }
    _emit_json(args, cfg, body, args.out)


def cmd_stability(args, cfg):
    tup = _load_tuple(args.input, cfg)
    cone = Cone.from_json(_load_json(args.cone))
    report = stability_report(tup, cone, args.tmax, cfg, seed=args.seed)
    _emit_json(args, cfg, report.to_json(), args.out)
    if args.curves:
        _emit_csv(args, cfg, [f"omega_K: {report.omega_K:.17e}"], ["ray_id", "t", "norm"],
                  ((str(r), t, v) for r, t, v in report.curves), args.curves)


def cmd_rolewicz(args, cfg):
    tup = _load_tuple(args.input, cfg)
    cone = Cone.from_json(_load_json(args.cone))
    result = rolewicz_check(tup, cone, args.p, seed=args.seed)
    _emit_json(args, cfg, result.to_json(), args.out)


def cmd_cascade(args, cfg):
    tup = _load_tuple(args.input, cfg)
    cone = Cone.from_json(_load_json(args.cone))
    if args.v0 == "ones":
        v0 = np.ones(tup.d)
    elif args.v0 == "zeros":
        v0 = np.zeros(tup.d)
    else:
        v0 = _parse_point(args.v0, tup.d)
    n1, n2 = _parse_pair(args.grid, int, "--grid")
    t1, t2 = _parse_pair(args.extent, float, "--extent")
    sol = cascade_solve(tup, v0, cone, n1, n2, t1, t2)
    header = [f"omega_K: {sol.omega_K:.17e}", f"M_K: {sol.M_K:.17e}", f"boundary_error: {sol.boundary_error:.17e}"]
    _emit_csv(args, cfg, header, ["t1", "t2", "norm"], sol.rows(), args.out)


def cmd_validate(args, cfg):
    raw = matrices_from_json(_load_json(args.input))
    residual = commutation_residual(raw)
    tup = CommutingTuple(raw, cfg)
    body = {"valid": True, "n": tup.n, "d": tup.d, "commutation_residual": residual}
    if args.psi:
        report = validate_psi(BernsteinFunction.from_json(_load_json(args.psi)))
        body["bernstein"] = report.to_json()
        if not report.passed:
            raise InputError("invalid Bernstein data: " + "; ".join(report.structural_failures + report.probe_failures))
    if args.cone:
        body["cone"] = Cone.from_json(_load_json(args.cone)).to_json()
    _emit_json(args, cfg, body, args.out)


def cmd_fixture(args, cfg):
    if args.name in ("F4", "hermitian"):
        rng = make_rng(args.seed)
        if args.name == "F4":
            tup = random_commuting_tuple(rng, args.n, args.d, conjugate=args.conjugate, stable=args.stable, cfg=cfg)
        else:
            tup = random_hermitian_tuple(rng, args.n, args.d, cfg)
    else:
        fixtures = named_fixtures(cfg)
        if args.name not in fixtures:
            raise InputError(f"unknown fixture {args.name!r}")
        tup = fixtures[args.name]
    text = json.dumps(tuple_to_json(tup), indent=2) + "\n"
    if args.out:
        _atomic_write(args.out, text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog=TOOL, description="Joint spectra and multiparameter semigroup tools.")
    parser.add_argument("--version", action="version", version=f"{TOOL} {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    defaults = ToleranceConfig()
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--tau-comm", type=float, default=defaults.tau_comm)
    common.add_argument("--tau-rank", type=float, default=defaults.tau_rank)
    common.add_argument("--tau-dedup", type=float, default=defaults.tau_dedup)
    common.add_argument("--tau-feas", type=float, default=defaults.tau_feas)
    common.add_argument("--out", default=None, help="output path (stdout when omitted)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectra", parents=[common], help="joint spectra of a tuple")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--kinds", default="all", help="'all' or a comma list of " + ",".join(SPECTRUM_KINDS))
    p.set_defaults(func=cmd_spectra)

    p = sub.add_parser("taylor", parents=[common], help="Koszul ranks and kernel dimensions")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--point", default=None, help='JSON list, e.g. "[[-1,0],[-3,0]]"; default: all candidates')
    p.set_defaults(func=cmd_taylor)

    p = sub.add_parser("bernstein", parents=[common], help="Bernstein calculus and spectral mapping report")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--psi", required=True)
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--eta", type=float, default=1e-12)
    p.set_defaults(func=cmd_bernstein)

    p = sub.add_parser("stability", parents=[common], help="cone stability report")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--cone", required=True)
    p.add_argument("--tmax", type=float, default=50.0)
    p.add_argument("--curves", default=None, help="CSV of decay curves (ray_id, t, norm)")
    p.set_defaults(func=cmd_stability)

    p = sub.add_parser("rolewicz", parents=[common], help="integral criterion on a cone")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--cone", required=True)
    p.add_argument("--p", type=float, default=1.0)
    p.set_defaults(func=cmd_rolewicz)

    p = sub.add_parser("cascade", parents=[common], help="two-parameter cascade Cauchy problem")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--cone", required=True)
    p.add_argument("--v0", default="ones", help="'ones', 'zeros' or a JSON list")
    p.add_argument("--grid", default="20x20")
    p.add_argument("--extent", default="5x5")
    p.set_defaults(func=cmd_cascade)

    p = sub.add_parser("validate", parents=[common], help="check a tuple (and optional psi / cone)")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--psi", default=None)
    p.add_argument("--cone", default=None)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("fixture", parents=[common], help="write a built-in or seeded tuple")
    p.add_argument("--name", required=True, help="F1, F2, F3, F5, F4 or hermitian")
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--d", type=int, default=3)
    p.add_argument("--conjugate", action="store_true")
    p.add_argument("--stable", action="store_true")
    p.set_defaults(func=cmd_fixture)
    return parser


def _fail(code: int, kind: str, message: str) -> int:
    sys.stderr.write(json.dumps({"error": {"type": kind, "message": message}}) + "\n")
    return code


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command not in ("fixture",) and not args.input:
        parser.error("--in must be a nonempty path")
    try:
        cfg = _tolerances(args)
        args.func(args, cfg)
    except ConvergenceError as exc:
        return _fail(3, type(exc).__name__, str(exc))
    except (JSpecError, InputError) as exc:
        return _fail(2, type(exc).__name__, str(exc))
    return 0


if __name__ == "__main__":
    sys.exit(main())
