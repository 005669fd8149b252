"""Command-line front end.

Every invocation is turned into a job config, validated against
``JOB_SCHEMA`` and executed by :func:`run`.  Exit codes: 0 success,
2 validation failure, 3 numerical failure or tolerance violation, 4 I/O.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

import jsonschema
import numpy as np

from . import algebra as alg
from . import io
from .errors import SkewNetError, ValidationError

log = logging.getLogger("skewnet")

_NUM_LIST = {"type": "array", "items": {"type": "number"}}
_QUAT = {"type": "array", "items": {"type": "number"}, "minItems": 3, "maxItems": 4}

JOB_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["command"],
    "properties": {
        "command": {"enum": ["verify", "evolve", "factor", "curve", "surface", "moutard", "export"]},
        "sub": {"type": ["string", "null"]},
        "inputs": {"type": "object", "additionalProperties": {"type": "string"}},
        "algebra": {"enum": ["quat", "mat2", "clifford", None]},
        "options": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "tol": {"type": "number", "exclusiveMinimum": 0},
                "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
                "t_samples": _NUM_LIST,
                "path": {"enum": ["linear", "exp", "trig", "circle"]},
                "pairing": {"enum": ["conjugate", "explicit"]},
                "pairs": {
                    "type": "array",
                    "items": {"type": "array", "minItems": 2, "maxItems": 2, "items": _NUM_LIST},
                },
                "extents": {"type": "array", "items": {"type": "integer", "minimum": 1}},
                "mode": {"enum": ["cplus", "cminus"]},
                "steps": {"type": "integer", "minimum": 0},
                "E": _QUAT,
                "vs": {"type": "array", "items": _QUAT, "minItems": 1},
                "branch": {"enum": [1, -1]},
                "bhat0": _QUAT,
                "u0": _QUAT,
                "v0": _QUAT,
                "k0": {"type": "integer", "minimum": 0},
                "kappa": {"type": "number"},
                "signature": {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 2, "maxItems": 2},
                "f": _NUM_LIST,
                "fi": _NUM_LIST,
                "fj": _NUM_LIST,
            },
        },
        "outputs": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"emit": {"type": ["string", "null"]}, "report": {"type": ["string", "null"]}},
        },
    },
}


def validate_config(cfg: dict) -> None:
    try:
        jsonschema.validate(cfg, JOB_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "$" + "".join(f"[{p}]" if isinstance(p, int) else f".{p}" for p in exc.absolute_path)
        raise ValidationError(f"invalid job config: {exc.message}", where=where) from None


# --------------------------------------------------------------------------
# Report
# --------------------------------------------------------------------------


class Report:
    def __init__(self, command: str, tol: float):
        self.data: dict = {"command": command, "tol": tol, "checks": {}, "info": {}, "artifacts": []}
        self.tol = tol

    def check(self, name: str, value: float, limit: float | None = None) -> None:
        limit = self.tol if limit is None else limit
        ok = bool(value <= limit)
        self.data["checks"][name] = {"value": float(value), "limit": float(limit), "ok": ok}
        log.info("%s = %.3g (limit %.1g) %s", name, value, limit, "ok" if ok else "VIOLATED")

    def info(self, name: str, value) -> None:
        self.data["info"][name] = value

    @property
    def ok(self) -> bool:
        return all(c["ok"] for c in self.data["checks"].values())


def _quat(v) -> alg.Quaternion:
    v = [float(t) for t in v]
    return alg.Quaternion.from_vector(v) if len(v) == 3 else alg.Quaternion(*v)


def _input(cfg: dict, name: str):
    try:
        return io.read_json(cfg.get("inputs", {})[name])
    except KeyError:
        raise ValidationError(f"missing input --{name}") from None


def _curve_doc(doc):
    """Curve documents may be wrapped as ``{"curve": ..., "bhat": ...}``."""
    if isinstance(doc, dict) and "curve" in doc:
        return doc["curve"]
    return doc


def _emit(cfg: dict, report: Report, json_obj=None, geometry=None) -> None:
    target = cfg.get("outputs", {}).get("emit")
    if not target:
        return
    if target.endswith(".obj"):
        if geometry is None:
            raise ValidationError(f"command {cfg['command']} produces no OBJ geometry")
        io.export_obj(geometry, target)
    else:
        io.write_json(json_obj, target)
    report.data["artifacts"].append(target)


# --------------------------------------------------------------------------
# Commands
# --------------------------------------------------------------------------


def _cmd_verify(cfg, opts, report):
    from .curves import DiscreteCurve, elastic_verify
    from .lattice import EdgeNet
    from .moutard import QuadricNet
    from .surfaces import CrossRatioLattice

    doc = _input(cfg, "net")
    if not isinstance(doc, dict):
        raise ValidationError("expected a JSON object", where="$")
    if "signature" in doc:
        net = QuadricNet.from_json(doc)
        report.check("quadric", net.quadric_residual())
        report.check("parallel_diagonals", net.moutard_residual())
    elif "alpha" in doc:
        lat = CrossRatioLattice.from_json(doc)
        worst, skipped = lat.cr_residual()
        report.check("cross_ratio", worst)
        report.info("degenerate_quads", skipped)
    elif isinstance(doc.get("edges"), list):
        curve = DiscreteCurve.from_json(doc)
        report.check("unit_imaginary", curve.unit_error())
        if len(curve) >= 4:
            report.info("elastic_residual", elastic_verify(curve).residual)
    else:
        net = EdgeNet.from_json(doc)
        add, mult, where = net.max_residuals()
        report.check("additive", add)
        report.check("multiplicative", mult)
        report.info("worst_quad", None if where is None else [list(where[0]), where[1] + 1, where[2] + 1])
    return None, None


def _cmd_evolve(cfg, opts, report):
    from .lattice import EdgeNet, LatticeBox, fill_box
    from .lax import SpectralPath, associated_family

    axes = EdgeNet.from_json(_input(cfg, "net"))
    box = LatticeBox(tuple(opts["extents"])) if "extents" in opts else axes.box
    if box.dim != axes.dim:
        raise ValidationError("extents do not match the net dimension", where="$.options.extents")
    net = fill_box(axes, box, opts["tol"])
    add, mult, _ = net.max_residuals()
    report.check("additive", add)
    report.check("multiplicative", mult)
    if net.dim >= 3:
        report.check("consistency", net.meta["consistency"])
    out = {"net": net.to_json()}
    if opts.get("t_samples"):
        path = SpectralPath.named(opts.get("path", "linear"))
        fam = []
        for t in opts["t_samples"]:
            m = associated_family(net, path, t, tol=opts["tol"])
            a, b, _ = m.p.max_residuals()
            report.check(f"family[t={t}]", max(a, b))
            fam.append({"t": t, "net": m.p.to_json()})
        out["family"] = fam
    return out, None


def _cmd_factor(cfg, opts, report):
    from .factor import MatrixPolynomial, conjugate_pairing, factorize_cube, factorize_quaternionic

    poly = MatrixPolynomial.from_json(_input(cfg, "input"))
    out: dict = {"degree": poly.degree}
    if opts.get("pairing", "conjugate") == "conjugate":
        pairing = conjugate_pairing(poly)
        if poly.is_quaternionic(1e-8):
            fq = factorize_quaternionic(poly, tol=opts["tol"])
            out["quaternionic"] = {
                "leading": alg.to_json(fq.leading),
                "factors": [alg.to_json(u) for u in fq.factors],
                "real_factors": [list(map(float, g)) for g in fq.real_factors],
            }
            report.check("quaternionic_reconstruction", fq.residual, 1e-8)
            rev = factorize_quaternionic(poly.reversed(), tol=opts["tol"])
            out["one_plus_factors"] = [alg.to_json(u) for u in rev.factors]
    else:
        if "pairs" not in opts:
            raise ValidationError("explicit pairing needs --pairs", where="$.options.pairs")
        pairing = [(complex(*a), complex(*b)) for a, b in opts["pairs"]]
    out["pairing"] = [[[z.real, z.imag] for z in pr] for pr in pairing]
    cube = factorize_cube(poly, pairing, opts["tol"])
    add, mult, _ = cube.net.max_residuals()
    report.check("cube_quads", max(add, mult))
    report.check("path_products", cube.max_path_error(poly), 1e-8)
    out["cube"] = cube.net.to_json()
    out["leading"] = alg.to_json(cube.leading)
    return out, None


def _cmd_curve(cfg, opts, report):
    from .curves import (
        DiscreteCurve,
        backlund_curve,
        elastic_construct,
        elastic_verify,
        ninvariant_construct,
    )

    sub = cfg.get("sub")
    if sub == "backlund":
        curve = DiscreteCurve.from_json(_curve_doc(_input(cfg, "curve")))
        res = backlund_curve(curve, _quat(opts["v0"]), opts.get("k0", 0))
        report.check("unit_imaginary", res.curve.unit_error())
        return res.curve.to_json(), [curve.points(), res.curve.points()]
    if sub == "ninvariant":
        curve, chain = ninvariant_construct(
            _quat(opts["E"]), [_quat(v) for v in opts["vs"]], opts.get("branch", 1), opts.get("steps", 10)
        )
        report.check("invariant_drift", chain.invariant_drift(), 1e-8)
        report.check("rotation", chain.rotation_error(), 1e-8)
        report.check("unit_imaginary", curve.unit_error(), 1e-12)
        stages = []
        for level in range(len(chain.vs[0]) + 1):
            edges = [col[level] for col in chain.layers]
            stages.append(DiscreteCurve(alg.Quaternion(), edges).points())
        return curve.to_json(), stages
    if sub == "elastic":
        rod = elastic_construct(_quat(opts["E"]), _quat(opts["bhat0"]), _quat(opts["u0"]), opts.get("steps", 10))
        fit = elastic_verify(rod.curve) if len(rod.curve) >= 4 else None
        if fit is not None:
            report.check("elastic_residual", fit.residual, 1e-8)
        report.check("unit_imaginary", rod.curve.unit_error(), 1e-12)
        bhat = [[b.w, b.x, b.y, b.z] for b in rod.bhat]
        return {"curve": rod.curve.to_json(), "bhat": bhat}, rod.curve
    if sub == "elastic-verify":
        curve = DiscreteCurve.from_json(_curve_doc(_input(cfg, "curve")))
        fit = elastic_verify(curve)
        report.check("elastic_residual", fit.residual, 1e-8)
        report.info("alpha", float(fit.alpha))
        report.info("beta", float(fit.beta))
        return None, curve
    raise ValidationError(f"unknown curve subcommand {sub!r}", where="$.sub")


def _cmd_surface(cfg, opts, report):
    from .lattice import EdgeNet
    from .surfaces import (
        CrossRatioLattice,
        cmc_cube_gauge,
        cmc_entry_arrays,
        extend_to_4d,
        knet_family,
        lax_pattern_residual,
        surface_extract,
    )

    sub = cfg.get("sub")
    if sub == "knet":
        p = EdgeNet.from_json(_input(cfg, "net"))
        ts = opts.get("t_samples") or [0.0]
        fam = []
        last = None
        for t in ts:
            m = knet_family(p, t, opts["tol"])
            a, b, _ = m.p.max_residuals()
            report.check(f"family[t={t}]", max(a, b))
            fam.append({"t": t, "net": m.p.to_json()})
            last = m.f
        return {"family": fam}, last
    if sub in ("dpw", "cmc-cube"):
        seed = CrossRatioLattice.from_json(_input(cfg, "seed"))
        mode = opts.get("mode", "cplus") if sub == "dpw" else "cplus"
        lat = extend_to_4d(seed, mode, tuple(opts["extents"]) if "extents" in opts else None)
        report.check("dpw", lat.dpw_residual(), 1e-9)
        report.check("s_mode", lat.s_mode_residual(), 1e-9)
        if sub == "cmc-cube":
            a, b, d, e = cmc_entry_arrays(lat)
            ts = tuple(opts.get("t_samples") or (0.0, 0.25, -0.25, 0.5, -0.5, 1.0))
            cube = cmc_cube_gauge(a, b, d, e, ts)
            report.check("form", cube.form_residual, 1e-8)
            report.check("w_norm", cube.w_norm_residual, 1e-8)
            report.check("quads", cube.quad_residual, 1e-8)
            return {"net": cube.net.to_json(), "ts": list(ts)}, None
        ts = opts.get("t_samples") or [0.0]
        surfaces = []
        for t in ts:
            lam = np.exp(1j * t) if mode == "cplus" else np.exp(t)
            report.check(f"pattern[t={t}]", lax_pattern_residual(lat, lam), 1e-9)
            surf = surface_extract(lat, t, opts["tol"])
            surfaces.append({"t": t, "points": surf.points, "normals": surf.normals})
        out = {"lattice": lat.to_json(), "surfaces": surfaces}
        return out, surf
    raise ValidationError(f"unknown surface subcommand {sub!r}", where="$.sub")


def _cmd_moutard(cfg, opts, report):
    from .lax import SpectralPath
    from .moutard import QuadricNet, moutard_complete, moutard_family, random_moutard_net

    sub = cfg.get("sub")
    if sub == "complete":
        p, q = opts.get("signature", [3, 0])
        fij = moutard_complete(opts["f"], opts["fi"], opts["fj"], opts.get("kappa", 1.0), p, q)
        report.info("f_ij", fij.tolist())
        return {"f_ij": fij}, None
    if sub == "random":
        p, q = opts.get("signature", [3, 0])
        net = random_moutard_net(p, q, opts.get("kappa", 1.0), tuple(opts.get("extents", [8, 8])), opts["seed"])
        report.check("quadric", net.quadric_residual())
        report.check("parallel_diagonals", net.moutard_residual())
        return net.to_json(), net
    if sub == "family":
        net = QuadricNet.from_json(_input(cfg, "net"))
        path = SpectralPath.named(opts.get("path", "trig"))
        members = []
        last = net
        for t in opts.get("t_samples") or [0.0]:
            m = moutard_family(net, path, t, tol=opts["tol"])
            report.check(f"quadric[t={t}]", m.net.quadric_residual())
            report.check(f"parallel_diagonals[t={t}]", m.net.moutard_residual())
            report.check(f"rs_identity[t={t}]", m.identity_residual)
            members.append({"t": t, "r": m.r, "s": m.s, "net": m.net.to_json()})
            last = m.net
        return {"family": members}, last
    raise ValidationError(f"unknown moutard subcommand {sub!r}", where="$.sub")


def _cmd_export(cfg, opts, report):
    from .curves import DiscreteCurve
    from .moutard import QuadricNet

    doc = _input(cfg, "input")
    if not isinstance(doc, dict):
        raise ValidationError("expected a JSON object", where="$")
    if "signature" in doc:
        return None, QuadricNet.from_json(doc)
    if "points" in doc:
        return None, np.asarray(doc["points"], dtype=float)
    if "surfaces" in doc:
        return None, np.asarray(doc["surfaces"][-1]["points"], dtype=float)
    if "curve" in doc:
        doc = doc["curve"]
    if isinstance(doc.get("edges"), list):
        return None, DiscreteCurve.from_json(doc)
    raise ValidationError("input has no exportable geometry", where="$")


COMMANDS = {
    "verify": _cmd_verify,
    "evolve": _cmd_evolve,
    "factor": _cmd_factor,
    "curve": _cmd_curve,
    "surface": _cmd_surface,
    "moutard": _cmd_moutard,
    "export": _cmd_export,
}


def run(cfg: dict) -> tuple[int, dict]:
    """Execute a job config; returns the exit code and the report."""
    validate_config(cfg)
    opts = dict(cfg.get("options", {}))
    opts.setdefault("tol", alg.DEFAULT_TOL)
    opts.setdefault("seed", 0)
    report = Report(cfg["command"] + (f" {cfg['sub']}" if cfg.get("sub") else ""), opts["tol"])
    code = 0
    try:
        json_obj, geometry = COMMANDS[cfg["command"]](cfg, opts, report)
        if cfg["command"] == "export" and not cfg.get("outputs", {}).get("emit", "").endswith(".obj"):
            raise ValidationError("export needs an .obj target", where="$.outputs.emit")
        _emit(cfg, report, json_obj, geometry)
        if not report.ok:
            code = 3
    except SkewNetError as exc:
        code = exc.exit_code
        report.data["error"] = {"type": type(exc).__name__, "message": str(exc), "where": _where(exc.where)}
        log.debug("%s: %s", type(exc).__name__, exc)
    report.data["exit_code"] = code
    return code, report.data


def _where(w):
    if w is None:
        return None
    if isinstance(w, (tuple, list)):
        return [_where(v) for v in w]
    return w if isinstance(w, (int, float, str)) else str(w)


# --------------------------------------------------------------------------
# Argument parsing
# --------------------------------------------------------------------------


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.replace(" ", "").split(",") if t]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _quat_list(text: str) -> list[list[float]]:
    return [_floats(part) for part in text.split(";") if part.strip()]


def _pairs(text: str) -> list:
    """``re,im,re,im;...`` -> ``[[[re, im], [re, im]], ...]``."""
    out = []
    for part in text.split(";"):
        v = _floats(part)
        if len(v) != 4:
            raise argparse.ArgumentTypeError("each pair needs four numbers re1,im1,re2,im2")
        out.append([[v[0], v[1]], [v[2], v[3]]])
    return out


def build_parser() -> argparse.ArgumentParser:
    sup = argparse.SUPPRESS
    # Surface commands read a seed lattice through --seed, so they get no numeric --seed.
    noseed = argparse.ArgumentParser(add_help=False)
    noseed.add_argument("--tol", type=float, default=sup, help="residual tolerance (default 1e-9)")
    noseed.add_argument("--emit", default=sup, help="output artifact (.json or .obj)")
    noseed.add_argument("--report", default=sup, help="sidecar JSON report (default: <emit>.report.json)")
    common = argparse.ArgumentParser(add_help=False, parents=[noseed])
    common.add_argument("--seed", type=int, default=sup, help="64-bit seed for generated data")

    ap = argparse.ArgumentParser(prog="skewnet", description="Skew parallelogram nets.", parents=[common])
    ap.set_defaults(command=None, config=None)
    ap.add_argument("--config", help="run a JSON job config instead of a subcommand")
    sp = ap.add_subparsers(dest="command")

    p = sp.add_parser("verify", parents=[common], help="residuals of a net, curve or lattice")
    p.add_argument("--net", required=True)

    p = sp.add_parser("evolve", parents=[common], help="fill a box from axis data")
    p.add_argument("--net", required=True)
    p.add_argument("--extents", type=_ints)
    p.add_argument("--t-samples", type=_floats)
    p.add_argument("--path", choices=["linear", "exp", "trig", "circle"])

    p = sp.add_parser("factor", parents=[common], help="factorize a 2x2 matrix polynomial")
    p.add_argument("--input", required=True)
    p.add_argument("--pairing", choices=["conjugate", "explicit"], default="conjugate")
    p.add_argument("--pairs", type=_pairs, help="re1,im1,re2,im2;... for explicit pairing")

    p = sp.add_parser("curve", help="curve algorithms")
    cs = p.add_subparsers(dest="sub", required=True)
    c = cs.add_parser("backlund", parents=[common])
    c.add_argument("--curve", required=True)
    c.add_argument("--v0", type=_floats, required=True)
    c.add_argument("--k0", type=int)
    c = cs.add_parser("ninvariant", parents=[common])
    c.add_argument("--E", type=_floats, required=True)
    c.add_argument("--vs", type=_quat_list, required=True, help="quaternions separated by ';'")
    c.add_argument("--branch", type=int, choices=[1, -1])
    c.add_argument("--steps", type=int)
    c = cs.add_parser("elastic", parents=[common])
    c.add_argument("--E", type=_floats, required=True)
    c.add_argument("--bhat0", type=_floats, required=True)
    c.add_argument("--u0", type=_floats, required=True)
    c.add_argument("--steps", type=int)
    c = cs.add_parser("elastic-verify", parents=[common])
    c.add_argument("--curve", required=True)

    p = sp.add_parser("surface", help="surface constructions")
    ss = p.add_subparsers(dest="sub", required=True)
    c = ss.add_parser("knet", parents=[common])
    c.add_argument("--net", required=True)
    c.add_argument("--t-samples", type=_floats)
    c = ss.add_parser("dpw", parents=[noseed])
    c.add_argument("--seed", dest="seed_lattice", required=True, help="2D cross-ratio seed lattice JSON")
    c.add_argument("--mode", choices=["cplus", "cminus"], default="cplus")
    c.add_argument("--extents", type=_ints)
    c.add_argument("--t", dest="t_samples", type=_floats)
    c = ss.add_parser("cmc-cube", parents=[noseed])
    c.add_argument("--seed", dest="seed_lattice", required=True)
    c.add_argument("--extents", type=_ints)
    c.add_argument("--t-samples", type=_floats)

    p = sp.add_parser("moutard", help="Moutard nets in quadrics")
    ms = p.add_subparsers(dest="sub", required=True)
    c = ms.add_parser("complete", parents=[common])
    for name in ("--f", "--fi", "--fj"):
        c.add_argument(name, type=_floats, required=True)
    c.add_argument("--kappa", type=float)
    c.add_argument("--signature", type=_ints)
    c = ms.add_parser("random", parents=[common])
    c.add_argument("--signature", type=_ints)
    c.add_argument("--kappa", type=float)
    c.add_argument("--extents", type=_ints)
    c = ms.add_parser("family", parents=[common])
    c.add_argument("--net", required=True)
    c.add_argument("--t", dest="t_samples", type=_floats)
    c.add_argument("--path", choices=["linear", "exp", "trig", "circle"])

    p = sp.add_parser("export", parents=[common], help="OBJ export of stored geometry")
    p.add_argument("--input", required=True)
    return ap


_INPUTS = ("net", "input", "curve", "seed_lattice")
_OPTIONS = (
    "tol", "seed", "t_samples", "path", "pairing", "pairs", "extents", "mode", "steps", "E", "vs",
    "branch", "bhat0", "u0", "v0", "k0", "kappa", "signature", "f", "fi", "fj",
)


def config_from_args(ns: argparse.Namespace) -> dict:
    args = vars(ns)
    inputs = {("seed" if k == "seed_lattice" else k): args[k] for k in _INPUTS if args.get(k) is not None}
    options = {k: args[k] for k in _OPTIONS if args.get(k) is not None}
    cfg = {"command": args["command"], "inputs": inputs, "options": options, "outputs": {}}
    if args.get("sub"):
        cfg["sub"] = args["sub"]
    if args.get("emit"):
        cfg["outputs"]["emit"] = args["emit"]
    if args.get("report"):
        cfg["outputs"]["report"] = args["report"]
    return cfg


def _setup_logging() -> None:
    level = os.environ.get("SKEWNET_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        if ns.config:
            cfg = io.read_json(ns.config)
            if not isinstance(cfg, dict):
                raise ValidationError("job config must be an object", where="$")
        elif ns.command:
            cfg = config_from_args(ns)
        else:
            parser.print_usage(sys.stderr)
            return 2
        code, report = run(cfg)
    except SkewNetError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    outputs = cfg.get("outputs", {}) if isinstance(cfg.get("outputs"), dict) else {}
    sidecar = outputs.get("report") or (outputs["emit"] + ".report.json" if outputs.get("emit") else None)
    if sidecar:
        try:
            io.write_json(report, sidecar)
        except SkewNetError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return exc.exit_code
    print(io.dumps({k: report[k] for k in ("command", "checks", "exit_code") if k in report}), end="")
    if "error" in report:
        err = report["error"]
        print(f"error: {err['type']}: {err['message']}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
