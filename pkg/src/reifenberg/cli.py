"""Command-line entry point.

Exit codes: 0 success, 1 verification violations or a failed internal
check, 2 bad input.
"""

from __future__ import annotations

import argparse
import hashlib
import io
import json
import os
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .beta import beta_profile, dyadic_scales
from .covering import hausdorff_content, loglog_slope, minkowski_content, packing_content
from .errors import InputError, ReifError
from .generators import dirac_pair, dust_measure, mixed_measure, plane_measure, snowflake
from .geometry import Ball
from .measure import DiscreteMeasure, read_measure, write_measure
from .neck import Decomposition, NeckContext, NeckParams, NeckRegion, neck_decompose, verify_neck
from .reifmap import ReifmapConfig, build_reifenberg_map, holder_exponent

EXIT_OK, EXIT_VIOLATION, EXIT_INPUT = 0, 1, 2


@dataclass
class RunConfig:
    command: str
    inputs: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)
    k: Optional[int] = None
    scales: Optional[list] = None
    gamma: Optional[float] = None
    seed: Optional[int] = None
    threads: Optional[int] = None
    verbosity: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _floats(text: str) -> list:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _file_hash(path) -> str:
    p = Path(path)
    if not p.exists():
        raise InputError(f"no such file: {p}")
    return hashlib.sha256(p.read_bytes()).hexdigest()


def _threads() -> Optional[int]:
    v = os.environ.get("REIF_THREADS")
    if v is None or v == "":
        return None
    try:
        t = int(v)
    except ValueError:
        raise InputError(f"REIF_THREADS must be a positive integer, got {v!r}")
    if t < 1:
        raise InputError("REIF_THREADS must be a positive integer")
    return t


def _emit(report: dict, path: Optional[str]) -> None:
    text = json.dumps(report, indent=1, sort_keys=True)
    if path:
        Path(path).write_text(text + "\n")
    else:
        sys.stdout.write(text + "\n")


def _wrap(cfg: RunConfig, result: dict, t0: float, hashes: dict) -> dict:
    return {
        "config": cfg.to_dict(),
        "input_hash": hashes,
        "result": result,
        "timing": {"seconds": time.perf_counter() - t0},
        "version": __version__,
    }


# ------------------------------------------------------------------ commands


def cmd_gen(a) -> int:
    t0 = time.perf_counter()
    cfg = RunConfig("gen " + a.kind, outputs={"out": a.out}, params={k: v for k, v in vars(a).items() if k not in ("func", "out", "report", "kind")})
    if a.kind == "snowflake":
        obj = snowflake(a.delta, a.iters)
        obj.write_csv(a.out)
        result = {"vertices": len(obj.vertices), "edges": obj.n_edges, "length": obj.length}
    else:
        if a.kind == "plane":
            m = plane_measure(a.n, a.k, a.density, a.spacing, a.radius)
        elif a.kind == "dust":
            m = dust_measure(a.n, a.density, a.spacing, a.radius)
        elif a.kind == "mixed":
            m = mixed_measure(a.n, a.k, a.delta, a.plane_spacing, a.dust_spacing, a.density, a.radius)
        else:
            m = dirac_pair(a.distance, a.n)
        write_measure(m, a.out)
        result = {"points": len(m), "total_mass": m.total_mass, "hash": m.content_hash}
    if a.report:
        _emit(_wrap(cfg, result, t0, {}), a.report)
    return EXIT_OK


def _measure(a) -> tuple:
    h = _file_hash(a.input)
    return read_measure(a.input), {"in": h}


def cmd_beta(a) -> int:
    t0 = time.perf_counter()
    m, hashes = _measure(a)
    x = np.asarray(a.center if a.center is not None else [0.0] * m.n, dtype=float)
    if x.shape != (m.n,):
        raise InputError(f"--center needs {m.n} coordinates")
    prof = beta_profile(m, x, a.k, a.rmax, a.rmin)
    cfg = RunConfig("beta", {"in": a.input}, {"out": a.out, "report": a.report}, {"center": x.tolist(), "rmax": a.rmax, "rmin": a.rmin}, k=a.k, scales=prof.scales.tolist())
    if a.out:
        prof.write_csv(a.out)
    else:
        buf = io.StringIO()
        buf.write("scale,beta,distortion\n")
        for s, b, d in zip(prof.scales, prof.betas, prof.distortion):
            buf.write(f"{s:.17g},{b:.17g},{d:.17g}\n")
        if not a.report:
            sys.stdout.write(buf.getvalue())
            return EXIT_OK
    if a.report:
        _emit(_wrap(cfg, prof.to_dict(), t0, hashes), a.report)
    return EXIT_OK


_CONTENT = {"hausdorff": hausdorff_content, "minkowski": minkowski_content, "packing": packing_content}


def cmd_content(a) -> int:
    t0 = time.perf_counter()
    m, hashes = _measure(a)
    scales = a.scales if a.scales else dyadic_scales(a.rmax, a.rmin).tolist()
    fn = _CONTENT[a.kind]
    reps = [fn(m.points, a.k, s) for s in scales]
    vals = [r.value for r in reps]
    result = {
        "kind": a.kind,
        "k": a.k,
        "scales": scales,
        "values": vals,
        "centers_used": [len(r.certificate) for r in reps],
        "slope": loglog_slope(scales, vals) if len(scales) > 1 and min(vals) > 0 else None,
    }
    cfg = RunConfig("content", {"in": a.input}, {"report": a.report}, {"kind": a.kind}, k=a.k, scales=list(scales))
    _emit(_wrap(cfg, result, t0, hashes), a.report)
    return EXIT_OK


def _params(a) -> NeckParams:
    return NeckParams(k=a.k, delta=a.delta, epsilon=a.epsilon, nu=a.nu, tau=a.tau, r_min=a.rmin)


def cmd_decompose(a) -> int:
    t0 = time.perf_counter()
    m, hashes = _measure(a)
    p = _params(a)
    root = None
    if a.root_center is not None or a.root_radius is not None:
        c = np.asarray(a.root_center if a.root_center is not None else [0.0] * m.n, dtype=float)
        if c.shape != (m.n,):
            raise InputError(f"--root-center needs {m.n} coordinates")
        root = Ball(c, a.root_radius if a.root_radius is not None else 1.0)
    D = neck_decompose(m, p, a.gamma, root=root, verify=not a.no_verify)
    doc = D.to_dict()
    if a.out:
        Path(a.out).write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")
    cfg = RunConfig("decompose", {"in": a.input}, {"out": a.out, "report": a.report}, p.to_dict(), k=a.k, gamma=a.gamma)
    summary = {
        "necks": len(D.necks),
        "b_balls": len(D.b_balls),
        "residual": len(D.residual),
        "tallies": D.tallies(),
        "stats": D.stats,
        "violations": sum(len(e.report.violations) for e in D.necks),
    }
    _emit(_wrap(cfg, summary if a.out else doc, t0, hashes), a.report)
    return EXIT_VIOLATION if summary["violations"] else EXIT_OK


def cmd_reifmap(a) -> int:
    t0 = time.perf_counter()
    m, hashes = _measure(a)
    conf = ReifmapConfig(far_field=a.far_field)
    M = build_reifenberg_map(m.points, a.k, a.depth, conf, delta=a.delta)
    lo, hi = holder_exponent(M)
    if a.out:
        M.write_csv(a.out)
    result = {**M.diagnostics(), "holder": {"lower": lo, "upper": hi}}
    cfg = RunConfig("reifmap", {"in": a.input}, {"out": a.out, "report": a.report}, {"depth": a.depth, "delta": a.delta, **conf.to_dict()}, k=a.k)
    _emit(_wrap(cfg, result, t0, hashes), a.report)
    return EXIT_OK


def _load_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise InputError(f"no such file: {path}")
    except json.JSONDecodeError as exc:
        raise InputError(f"malformed JSON in {path}: {exc}")


def cmd_verify(a) -> int:
    t0 = time.perf_counter()
    m, hashes = _measure(a)
    hashes["neck"] = _file_hash(a.neck)
    doc = _load_json(a.neck)
    try:
        if "necks" in doc:
            D = Decomposition.from_dict(doc)
            p, regions = D.params, [e.region for e in D.necks]
        else:
            p = NeckParams.from_dict(doc["params"])
            regions = [NeckRegion.from_dict(doc, p)]
            D = None
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{a.neck} is not a neck or decomposition file: {exc}")
    ctx = NeckContext.of(m, p)
    reports = [verify_neck(m, N, ctx) for N in regions]
    result = {"necks": [r.to_dict() for r in reports]}
    bad = sum(len(r.violations) for r in reports)
    if D is not None:
        failed = D.recheck_b_balls(m)
        missed = D.uncovered(m)
        result["b_ball_failures"] = failed
        result["uncovered"] = [int(i) for i in missed]
        bad += len(failed) + len(missed)
    result["violations"] = bad
    cfg = RunConfig("verify", {"in": a.input, "neck": a.neck}, {"report": a.report}, p.to_dict(), k=p.k)
    _emit(_wrap(cfg, result, t0, hashes), a.report)
    return EXIT_VIOLATION if bad else EXIT_OK


# ------------------------------------------------------------------ parser


def _neck_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--nu", type=float, required=True)
    p.add_argument("--tau", type=float, default=0.05)
    p.add_argument("--rmin", type=float, required=True)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="reif", description="Multiscale flatness, coverings, neck decompositions and Reifenberg maps.")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="write a synthetic set or measure")
    gs = g.add_subparsers(dest="kind", required=True, parser_class=_Parser)
    s = gs.add_parser("snowflake", help="snowflake polyline")
    s.add_argument("--delta", type=float, required=True)
    s.add_argument("--iters", type=int, required=True)
    pl = gs.add_parser("plane", help="density * H^k on a coordinate k-plane")
    pl.add_argument("--n", type=int, required=True)
    pl.add_argument("--k", type=int, required=True)
    pl.add_argument("--density", type=float, default=1.0)
    pl.add_argument("--spacing", type=float, default=0.05)
    pl.add_argument("--radius", type=float, default=2.0)
    du = gs.add_parser("dust", help="density * H^n on a ball")
    du.add_argument("--n", type=int, required=True)
    du.add_argument("--density", type=float, default=0.1)
    du.add_argument("--spacing", type=float, default=0.05)
    du.add_argument("--radius", type=float, default=2.0)
    mx = gs.add_parser("mixed", help="plane plus delta-weighted dust")
    mx.add_argument("--n", type=int, required=True)
    mx.add_argument("--k", type=int, required=True)
    mx.add_argument("--delta", type=float, required=True)
    mx.add_argument("--plane-spacing", type=float, default=0.02)
    mx.add_argument("--dust-spacing", type=float, default=0.05)
    mx.add_argument("--density", type=float, default=1.0)
    mx.add_argument("--radius", type=float, default=2.0)
    di = gs.add_parser("dirac", help="two unit masses")
    di.add_argument("--distance", type=float, required=True)
    di.add_argument("--n", type=int, default=2)
    for q in (s, pl, du, mx, di):
        q.add_argument("--out", required=True)
        q.add_argument("--report")
        q.set_defaults(func=cmd_gen)

    b = sub.add_parser("beta", help="beta profile at one center")
    b.add_argument("--in", dest="input", required=True)
    b.add_argument("--k", type=int, required=True)
    b.add_argument("--center", type=_floats)
    b.add_argument("--rmax", type=float, required=True)
    b.add_argument("--rmin", type=float, required=True)
    b.add_argument("--out")
    b.add_argument("--report")
    b.set_defaults(func=cmd_beta)

    c = sub.add_parser("content", help="Hausdorff, Minkowski or packing content")
    c.add_argument("--in", dest="input", required=True)
    c.add_argument("--k", type=int, required=True)
    c.add_argument("--kind", choices=sorted(_CONTENT), default="hausdorff")
    c.add_argument("--scales", type=_floats)
    c.add_argument("--rmax", type=float, default=0.25)
    c.add_argument("--rmin", type=float, default=0.03125)
    c.add_argument("--report")
    c.set_defaults(func=cmd_content)

    d = sub.add_parser("decompose", help="neck decomposition of B_1")
    d.add_argument("--in", dest="input", required=True)
    _neck_flags(d)
    d.add_argument("--root-center", type=_floats)
    d.add_argument("--root-radius", type=float)
    d.add_argument("--no-verify", action="store_true")
    d.add_argument("--out")
    d.add_argument("--report")
    d.set_defaults(func=cmd_decompose)

    r = sub.add_parser("reifmap", help="numerical Reifenberg map and Holder envelopes")
    r.add_argument("--in", dest="input", required=True)
    r.add_argument("--k", type=int, required=True)
    r.add_argument("--depth", type=int, required=True)
    r.add_argument("--delta", type=float)
    r.add_argument("--far-field", action="store_true")
    r.add_argument("--out")
    r.add_argument("--report")
    r.set_defaults(func=cmd_reifmap)

    v = sub.add_parser("verify", help="re-verify a neck or decomposition file")
    v.add_argument("--neck", required=True)
    v.add_argument("--in", dest="input", required=True)
    v.add_argument("--report")
    v.set_defaults(func=cmd_verify)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    a = ap.parse_args(argv)
    try:
        _threads()
        return a.func(a)
    except InputError as exc:
        sys.stderr.write(f"reif: input error: {exc}\n")
        return EXIT_INPUT
    except ReifError as exc:
        sys.stderr.write(f"reif: {type(exc).__name__}: {exc}\n")
        return EXIT_VIOLATION


if __name__ == "__main__":
    sys.exit(main())
