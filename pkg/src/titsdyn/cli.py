"""Command-line entry point.

Every subcommand reads JSON (or flags), writes a JSON report and prints a
short summary.  Exit codes: 0 certified or passed, 2 refused, 3 search or
budget failure, 4 bad input.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import replace
from fractions import Fraction
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from .config import DEFAULT, Config, DynamicsConstants
from .errors import InputError, TitsDynError
from .field import FieldDescriptor, Padic, encode_scalar

SCHEMA_VERSION = 1

_SCALAR = {"oneOf": [
    {"type": "number"},
    {"type": "string"},
    {"type": "object", "required": ["num", "den"]},
    {"type": "object", "required": ["re"]},
    {"type": "object", "required": ["padic"]},
]}
_FIELD = {"type": "object", "required": ["kind"],
          "properties": {"kind": {"enum": ["real", "complex", "padic"]},
                         "p": {"type": "integer", "minimum": 2},
                         "precision": {"type": "integer", "minimum": 1}}}
_ROWS = {"type": "array", "minItems": 1, "items": {"type": "array", "minItems": 1, "items": _SCALAR}}
_MATRIX = {"oneOf": [_ROWS, {"type": "object", "required": ["rows"], "properties": {"rows": _ROWS}}]}

SCHEMAS = {
    "ensemble": {"type": "object", "required": ["matrices"],
                 "properties": {"schema_version": {"type": "integer"}, "field": _FIELD,
                                "matrices": {"type": "array", "minItems": 1, "items": _MATRIX},
                                "seed": {"type": "integer"}}},
    "matrix": {"type": "object", "required": ["rows"],
               "properties": {"schema_version": {"type": "integer"}, "field": _FIELD, "rows": _ROWS}},
    "affine": {"oneOf": [
        {"type": "array", "minItems": 1,
         "items": {"type": "object", "required": ["a", "b"], "properties": {"a": _SCALAR, "b": _SCALAR}}},
        {"type": "object", "required": ["elements"],
         "properties": {"field": _FIELD, "elements": {"type": "array", "minItems": 1, "items": {
             "type": "object", "required": ["a", "b"], "properties": {"a": _SCALAR, "b": _SCALAR}}}}}]},
    "group": {"type": "object", "required": ["ambient", "generators"],
              "properties": {"ambient": {"type": "object", "required": ["kind"],
                                         "properties": {"kind": {"enum": ["translations", "affine", "matrix"]}}},
                             "generators": {"type": "array", "minItems": 1},
                             "R": {"type": "number", "exclusiveMinimum": 0},
                             "N": {"type": "integer", "minimum": 0}}},
    "polynomial": {"type": "object", "required": ["coeffs"],
                   "properties": {"field": _FIELD, "coeffs": {"type": "array", "minItems": 2, "items": _SCALAR}}},
    "place": {"type": "object", "required": ["minpoly"],
              "properties": {"minpoly": {"type": "string"}, "index": {"type": "integer", "minimum": 0}}},
}


def _validate(obj, schema_name: str):
    try:
        jsonschema.validate(obj, SCHEMAS[schema_name])
    except jsonschema.ValidationError as exc:
        path = "/".join(str(x) for x in exc.absolute_path) or "<root>"
        raise InputError(f"schema violation at {path}: {exc.message}") from exc


def _load_json(path: str):
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read JSON from {path}: {exc}") from exc


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (Fraction, Padic)):
        return encode_scalar(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, complex):
        return {"re": x.real, "im": x.imag}
    if isinstance(x, float) and not np.isfinite(x):
        return str(x)
    return x


def _field(obj, default: FieldDescriptor | None = None) -> FieldDescriptor:
    if obj is None:
        return default or FieldDescriptor.real()
    try:
        return FieldDescriptor.from_json(obj)
    except (ValueError, KeyError) as exc:
        raise InputError(f"bad field descriptor: {exc}") from exc


def _matrix(entry, field: FieldDescriptor):
    from .field import decode_scalar
    from .linalg import Matrix
    rows = entry["rows"] if isinstance(entry, dict) else entry
    f = _field(entry.get("field"), field) if isinstance(entry, dict) else field
    n = len(rows)
    if any(len(r) != n for r in rows):
        raise InputError("matrix must be square")
    decoded = [[decode_scalar(x) for x in r] for r in rows]
    return Matrix.from_rows(decoded, f)


def _config(args) -> Config:
    cfg = Config.load(args.config) if getattr(args, "config", None) else DEFAULT
    return cfg


class Report:
    def __init__(self, command: str, args, config: Config):
        self.data = {"schema_version": SCHEMA_VERSION, "tool": "titsdyn", "version": __version__,
                     "command": command, "seed": getattr(args, "seed", 0), "config": config.to_dict()}
        self.summary: list[str] = []

    def set(self, **kw):
        self.data.update(kw)

    def emit(self, args) -> None:
        text = json.dumps(_jsonable(self.data), indent=2, sort_keys=True)
        if args.output:
            Path(args.output).write_text(text + "\n")
            print("\n".join(self.summary))
        else:
            print(text)
            print("\n".join(self.summary), file=sys.stderr)


# subcommands

def cmd_certify_free(args) -> int:
    from .pingpong import check_pingpong, freeness_oracle, recheck_pingpong
    cfg = _config(args)
    rep = Report("certify-free", args, cfg)
    if args.recheck:
        obj = _load_json(args.recheck)
        if obj.get("kind") != "pingpong":
            raise InputError("recheck expects a ping-pong certificate")
        res = recheck_pingpong(obj, cfg)
        rep.set(verdict="recheck-passed" if res.passed else "recheck-failed", recheck=res.to_json())
        rep.summary.append(f"recheck: {'passed' if res.passed else 'FAILED'}")
        rep.emit(args)
        return 0 if res.passed else 2
    obj = _load_json(args.input)
    _validate(obj, "ensemble")
    field = _field(obj.get("field"))
    mats = [_matrix(m, field) for m in obj["matrices"]]
    if "constants" in obj:
        c = DynamicsConstants(**obj["constants"])
        cfg = replace(cfg, padic=c) if field.kind == "padic" else cfg.with_constants(c.c1, c.c2, c.C)
        rep.set(config=cfg.to_dict())
    try:
        cert = check_pingpong(mats, cfg)
    except TitsDynError as exc:
        rep.set(verdict="refused", error={"type": type(exc).__name__, "message": str(exc)})
        rep.summary.append(f"refused: {type(exc).__name__}: {exc}")
        rep.emit(args)
        return exc.exit_code
    rep.set(verdict="certified", certificate=cert.to_json())
    rep.summary.append(f"certified free of rank {cert.m}: r = {cert.r:.6g}, epsilon = {cert.epsilon:.6g}")
    L = args.max_oracle_len or args.oracle_len
    if L and all(m.exact is not None for m in mats):
        res = freeness_oracle(mats, L, budget=cfg.oracle_budget)
        rep.set(oracle={"max_len": L, "free": res.free, "words_checked": res.words_checked,
                        "relation": None if res.free else res.describe()})
        rep.summary.append(f"word oracle to length {L}: {res.describe()}")
    if args.certificate:
        Path(args.certificate).write_text(json.dumps(_jsonable(cert.to_json()), indent=2, sort_keys=True) + "\n")
    rep.emit(args)
    return 0


def _affine_elements(obj):
    from .affine import AffineElement
    _validate(obj, "affine")
    if isinstance(obj, list):
        field, elems = FieldDescriptor.real(), obj
    else:
        field, elems = _field(obj.get("field")), obj["elements"]
    return [AffineElement.from_json(e, field) for e in elems]


def cmd_certify_semigroup(args) -> int:
    from .affine import certify_free_semigroup, semigroup_oracle
    cfg = _config(args)
    rep = Report("certify-semigroup", args, cfg)
    src = args.recheck or args.input
    obj = _load_json(src)
    if args.recheck:
        if obj.get("kind") != "semigroup":
            raise InputError("recheck expects a semigroup certificate")
        obj = {"field": obj["field"], "elements": obj["elements"]}
    elems = _affine_elements(obj)
    try:
        cert = certify_free_semigroup(elems)
    except TitsDynError as exc:
        rep.set(verdict="refused", error={"type": type(exc).__name__, "message": str(exc)})
        rep.summary.append(f"refused: {type(exc).__name__}: {exc}")
        rep.emit(args)
        return exc.exit_code
    rep.set(verdict="certified", certificate=cert.to_json())
    rep.summary.append(f"certified free semigroup on {len(elems)} generators; disc radius {float(cert.radius):.6g}")
    L = args.oracle_len
    if L and all(g.is_exact for g in elems):
        res = semigroup_oracle(elems, L)
        rep.set(oracle={"max_len": L, "free": res.free, "words_checked": res.words_checked,
                        "coincidence": None if res.free else [list(w) for w in res.pair]})
        rep.summary.append(f"semigroup oracle to length {L}: {'no coincidence' if res.free else res.pair}")
    rep.emit(args)
    return 0


def _ambient(spec: dict, R: float):
    import sympy
    from .growth import AffineLine, MatrixGroup, Translations
    kind = spec["kind"]
    if kind == "translations":
        basis = [float(sympy.sympify(str(b))) for b in spec.get("basis", [1])]
        return Translations(basis, R)
    if kind == "affine":
        return AffineLine(R)
    return MatrixGroup(int(spec["n"]), R, float(spec.get("tolerance", 1e-9)))


def _generator(amb, g):
    from .field import decode_scalar
    if amb.kind == "translations":
        g = g if isinstance(g, list) else [g]
        return amb.element(*[decode_scalar(x) for x in g])
    if amb.kind == "affine":
        if isinstance(g, dict):
            return amb.element(decode_scalar(g["a"]), decode_scalar(g["b"]))
        return amb.element(*[decode_scalar(x) for x in g])
    return amb.element([[float(decode_scalar(x)) for x in r] for r in g])


def cmd_growth(args) -> int:
    from .growth import classify, growth_table
    cfg = _config(args)
    rep = Report("growth", args, cfg)
    obj = _load_json(args.input)
    _validate(obj, "group")
    R = args.R if args.R is not None else obj.get("R")
    N = args.N if args.N is not None else obj.get("N")
    if R is None or N is None:
        raise InputError("R and N are required (flags or input)")
    amb = _ambient(obj["ambient"], R)
    try:
        S = [_generator(amb, g) for g in obj["generators"]]
    except (TypeError, ValueError, KeyError) as exc:
        raise InputError(f"bad generator: {exc}") from exc
    table = growth_table(S, amb, int(N), cfg)
    rep.set(table=table.to_json(), metric=amb.describe())
    rep.summary.append(f"f(0..{table.N}) = {table.values}")
    verdict = "computed"
    if args.classify:
        cls = classify(table, cfg)
        rep.set(classification=cls.to_json())
        verdict = cls.verdict
        rep.summary.append(f"verdict: {cls.verdict}")
    rep.set(verdict=verdict)
    rep.emit(args)
    return 0


def _single_matrix(args):
    obj = _load_json(args.input)
    if isinstance(obj, dict) and "matrix" in obj:
        obj = obj["matrix"]
    _validate(obj, "matrix")
    return _matrix(obj, _field(obj.get("field")))


def cmd_cartan(args) -> int:
    from .linalg import cartan, singular_ratio
    cfg = _config(args)
    rep = Report("cartan", args, cfg)
    g = _single_matrix(args)
    cd = cartan(g)
    rep.set(verdict="computed", k1=cd.k1.to_json(), k2=cd.k2.to_json(),
            a=[encode_scalar(x) if isinstance(x, Padic) else float(x) for x in cd.a],
            abs_a=[float(x) for x in cd.abs_a()], residual=cd.residual,
            singular_ratio=float(singular_ratio(g, cd)))
    rep.summary.append(f"|a| = {[float(x) for x in cd.abs_a()]}, residual {cd.residual:.3g}")
    rep.emit(args)
    return 0


def cmd_contraction(args) -> int:
    from .dynamics import contraction_data, verify_contraction
    cfg = _config(args)
    rep = Report("contraction", args, cfg)
    g = _single_matrix(args)
    data = contraction_data(g)
    vr = verify_contraction(g, data, samples=args.samples, seed=args.seed, raise_on_failure=False)
    rep.set(verdict="passed" if vr.passed and vr.lipschitz_ok() else "refused",
            epsilon=data.epsilon, ratio=float(data.ratio), v_g=data.v_g.to_json(), H_g=data.H_g.to_json(),
            verification={"samples": vr.samples, "outside": vr.outside, "max_image_distance": vr.max_image_distance,
                          "lipschitz": {str(k): v for k, v in vr.lipschitz.items()}})
    rep.summary.append(f"epsilon = {data.epsilon:.6g}; sampled check {'passed' if vr.passed else 'FAILED'}")
    rep.emit(args)
    return 0 if rep.data["verdict"] == "passed" else 2


def cmd_proximal(args) -> int:
    from .dynamics import ProximalityCertificate, proximality, very_proximal
    cfg = _config(args)
    rep = Report("proximal", args, cfg)
    if args.recheck:
        obj = _load_json(args.recheck)
        cert = ProximalityCertificate.from_json(obj)
        fresh = proximality(cert.matrix, replace(cfg, archimedean=cert.constants)
                            if cert.field.archimedean else replace(cfg, padic=cert.constants))
        ok = abs(fresh.r - cert.r) <= 1e-9 and abs(fresh.epsilon - cert.epsilon) <= 1e-9
        rep.set(verdict="recheck-passed" if ok else "recheck-failed",
                recomputed={"r": fresh.r, "epsilon": fresh.epsilon})
        rep.summary.append(f"recheck: {'passed' if ok else 'FAILED'} (r = {fresh.r:.6g}, epsilon = {fresh.epsilon:.6g})")
        rep.emit(args)
        return 0 if ok else 2
    g = _single_matrix(args)
    try:
        if args.very:
            vp = very_proximal(g, cfg)
            rep.set(verdict="certified", certificate=vp.to_json())
            rep.summary.append(f"very proximal: r = {vp.r:.6g}, epsilon = {vp.epsilon:.6g}")
        else:
            cert = proximality(g, cfg)
            rep.set(verdict="certified", certificate=cert.to_json())
            rep.summary.append(f"proximal: r = {cert.r:.6g}, epsilon = {cert.epsilon:.6g}")
    except TitsDynError as exc:
        rep.set(verdict="refused", error={"type": type(exc).__name__, "message": str(exc)})
        rep.summary.append(f"refused: {type(exc).__name__}: {exc}")
        rep.emit(args)
        return exc.exit_code
    rep.emit(args)
    return 0


def cmd_polya(args) -> int:
    from .errors import BoundViolated
    from .polya import MonicPolynomial, c1_constant, chebyshev, check_bound, polya_constant, random_monic
    cfg = _config(args)
    rep = Report("polya", args, cfg)
    if args.field == "padic":
        field = FieldDescriptor.padic(args.p)
    else:
        field = FieldDescriptor(args.field)
    if args.input:
        obj = _load_json(args.input)
        _validate(obj, "polynomial")
        from .field import decode_scalar
        field = _field(obj.get("field"), field)
        polys = [MonicPolynomial.from_coeffs([decode_scalar(c) for c in obj["coeffs"]], field)]
    elif args.family == "chebyshev":
        if field.kind != "real":
            raise InputError("the Chebyshev family is real")
        polys = [chebyshev(args.degree)]
    else:
        rng = np.random.default_rng(args.seed)
        polys = [random_monic(field, int(rng.integers(1, args.degree + 1)), rng) for _ in range(args.count)]
    results = []
    violations = 0
    for i, P in enumerate(polys):
        try:
            r = check_bound(P, budget=args.budget, seed=args.seed + i).to_json()
        except BoundViolated as exc:
            violations += 1
            r = {"passed": False, "violation": str(exc), "measure": {"interval": [math.inf, math.inf]},
                 "constant": polya_constant(field)}
        results.append({"degree": P.degree, "coeffs": [str(c) for c in P.coeffs], **r})
    rep.set(verdict="passed" if violations == 0 else "violated", field=field.to_json(), results=results,
            c1=c1_constant(field), violations=violations)
    worst = max(r["measure"]["interval"][1] for r in results)
    rep.summary.append(f"{len(results)} polynomials, largest measure bound {worst:.6g}, "
                       f"constant {results[0]['constant']:.6g}, violations {violations}")
    rep.emit(args)
    return 0 if violations == 0 else 2


def cmd_place(args) -> int:
    from .places import AlgebraicNumber, expanding_place
    cfg = _config(args)
    rep = Report("place", args, cfg)
    if args.minpoly:
        text, index = args.minpoly, args.index
    else:
        obj = _load_json(args.input)
        _validate(obj, "place")
        text, index = obj["minpoly"], obj.get("index", 0)
    alpha = AlgebraicNumber.parse(text, index)
    place = expanding_place(alpha)
    rep.set(verdict=place.kind, number=alpha.to_json(), place=place.to_json())
    rep.summary.append(f"{text}: {place.kind}" + (f" (p = {place.p})" if place.p else "")
                       + (f" order {place.order}" if place.order else f" |alpha| = {place.absolute_value}"))
    rep.emit(args)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="titsdyn", description="Certificates for projective dynamics, free subgroups and local growth.", epilog="exit codes: 0 certified or passed, 2 refused, 3 search or budget failure, 4 bad input")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, needs_input=True):
        p.add_argument("--input", required=False)
        p.add_argument("--output")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--config")
        p.set_defaults(needs_input=needs_input)
        return p

    p = common(sub.add_parser("certify-free", help="ping-pong certificate for a matrix tuple"))
    p.add_argument("--recheck")
    p.add_argument("--oracle-len", type=int)
    p.add_argument("--max-oracle-len", type=int)
    p.add_argument("--certificate", help="also write the bare certificate here")
    p.set_defaults(func=cmd_certify_free)

    p = common(sub.add_parser("certify-semigroup", help="disc ping-pong for affine contractions"))
    p.add_argument("--recheck")
    p.add_argument("--oracle-len", type=int)
    p.set_defaults(func=cmd_certify_semigroup)

    p = common(sub.add_parser("growth", help="local growth table and classification"))
    p.add_argument("--R", type=float)
    p.add_argument("--N", type=int)
    p.add_argument("--classify", action="store_true")
    p.set_defaults(func=cmd_growth)

    for name, fn, hlp in (("cartan", cmd_cartan, "Cartan decomposition"),
                          ("contraction", cmd_contraction, "contraction data with a sampled check")):
        p = common(sub.add_parser(name, help=hlp))
        if name == "contraction":
            p.add_argument("--samples", type=int, default=10_000)
        p.set_defaults(func=fn)

    p = common(sub.add_parser("proximal", help="proximality certificate"))
    p.add_argument("--very", action="store_true")
    p.add_argument("--recheck")
    p.set_defaults(func=cmd_proximal)

    p = common(sub.add_parser("polya", help="sublevel-set measure bound"), needs_input=False)
    p.add_argument("--field", choices=["real", "complex", "padic"], default="real")
    p.add_argument("--p", type=int, default=5)
    p.add_argument("--degree", type=int, default=8)
    p.add_argument("--family", choices=["chebyshev", "random"], default="random")
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--budget", type=int)
    p.set_defaults(func=cmd_polya)

    p = common(sub.add_parser("place", help="expanding place of an algebraic number"), needs_input=False)
    p.add_argument("--minpoly")
    p.add_argument("--index", type=int, default=0)
    p.set_defaults(func=cmd_place)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        if args.needs_input and not args.input and not getattr(args, "recheck", None):
            raise InputError("--input is required")
        if args.command == "place" and not (args.minpoly or args.input):
            raise InputError("--minpoly or --input is required")
        return args.func(args)
    except TitsDynError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except (ValueError, KeyError, TypeError) as exc:
        print(f"InputError: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
