"""Command line driver.

Every subcommand builds one JSON-able report; ``--format text`` renders the
same report as aligned lines, so the two outputs carry the same numbers.
Exit codes: 0 pass, 1 check failure, 2 usage error.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import pickle
import sys
import warnings

from . import expr, gmod, hopf
from . import localize as lc
from . import margolis as mg
from . import picard as pc
from . import spectrum as sp
from . import stable as st

PASS, FAIL, USAGE = 0, 1, 2


class UsageError(Exception):
    pass


# -- config -------------------------------------------------------------------

def _pair(text: str, what: str) -> tuple[int, int]:
    try:
        lo, hi = (int(v) for v in text.split(":"))
    except ValueError:
        raise UsageError(f"{what} must look like LO:HI, got {text!r}") from None
    if lo > hi:
        raise UsageError(f"{what} {text}: LO must not exceed HI")
    return lo, hi


def parse_cover(text: str) -> list[tuple[int, int]]:
    return [_pair(part, "cover segment") for part in text.split(",") if part.strip()]


def load_algebra(args) -> hopf.HopfAlgebra:
    if args.algebra:
        with open(args.algebra) as fh:
            return hopf.HopfAlgebra.from_json(json.load(fh))
    try:
        return hopf.preset(args.preset or "A1")
    except hopf.UnknownPresetError as e:
        raise UsageError(str(e)) from None


def load_modules(args, a: hopf.HopfAlgebra, need: int = 1, default: str | None = None) -> list[gmod.GradedModule]:
    texts = list(args.module or [])
    if not texts and default is not None:
        texts = [default]
    if len(texts) < need:
        raise UsageError(f"{args.command} needs {need} --module argument(s)")
    out = []
    for t in texts:
        try:
            out.append(expr.parse_module(t, a, seed=args.seed))
        except expr.ExpressionError as e:
            raise UsageError(str(e)) from None
    return out


def _cache_path(kind: str, key: dict) -> str | None:
    root = os.environ.get("STABMOD_CACHE")
    if not root:
        return None
    h = hashlib.sha256(json.dumps([kind, key], sort_keys=True).encode()).hexdigest()[:24]
    os.makedirs(root, exist_ok=True)
    return os.path.join(root, f"{kind}-{h}.pkl")


def cached(kind: str, key: dict, build):
    """Memoize ``build()`` on disk under $STABMOD_CACHE, keyed by a content hash."""
    path = _cache_path(kind, key)
    if path and os.path.exists(path):
        with open(path, "rb") as fh:
            return pickle.load(fh)
    value = build()
    if path:
        with open(path, "wb") as fh:
            pickle.dump(value, fh)
    return value


def _key(*mods: gmod.GradedModule, **extra) -> dict:
    return {"modules": [m.to_json() for m in mods], **extra}


def _dims(m: gmod.GradedModule) -> dict[str, int]:
    return {str(d): v for d, v in m.dims.items() if v}


# -- subcommands ----------------------------------------------------------------

def cmd_validate(args, a):
    rep = hopf.validate(a)
    return rep.ok, rep.to_json()


def cmd_margolis(args, a):
    out = []
    for m in load_modules(args, a):
        hom = {}
        for k in range(1, a.N + 1):
            H = mg.margolis_homology(m, k)
            hom[f"p{k}"] = {str(d): v for d, v in H.dims.items() if v}
        out.append({"module": m.name, "homology": hom})
    return True, {"algebra": a.name, "modules": out}


def cmd_free_check(args, a):
    out, ok = [], True
    for m in load_modules(args, a):
        free = mg.is_free(m)
        stripped = st.strip_free(m).reduced.dim == 0
        ok &= free == stripped
        out.append({"module": m.name, "free": free, "strip_leaves_nothing": stripped, "agree": free == stripped})
    return ok, {"modules": out}


def cmd_strip(args, a):
    out = []
    for m in load_modules(args, a):
        s = st.strip_free(m)
        out.append({"module": m.name, "reduced": _dims(s.reduced),
                    "free_ranks": {str(d): r for d, r in s.free_ranks.items()}})
    return True, {"modules": out}


def cmd_omega(args, a):
    out = []
    for m in load_modules(args, a):
        out.append({"module": m.name, "power": args.power, "result": _dims(st.omega_power(m, args.power))})
    return True, {"modules": out}


def cmd_ext(args, a):
    mods = load_modules(args, a, default="1")
    m, n = (mods + [gmod.unit(a)])[:2] if len(mods) == 1 else mods[:2]
    s_range = _pair(args.s, "--s")
    t_range = _pair(args.t, "--t")
    chart = st.stable_ext(m, n, s_range, t_range)
    js = {"source": m.name, "target": n.name, **chart.to_json(),
          "s_axis": list(range(s_range[0], s_range[1] + 1)), "t_axis": list(range(t_range[0], t_range[1] + 1))}
    if args.format == "text":
        js["chart"] = chart.grid()
    return True, js


def _write(args, m):
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(m.to_json(), fh)


def cmd_tensor(args, a):
    mods = load_modules(args, a, need=2)
    t = mods[0]
    for m in mods[1:]:
        t = gmod.tensor(t, m)
    _write(args, t)
    return True, {"dims": _dims(t), "reduced": _dims(st.reduced(t))}


def cmd_dual(args, a):
    m = gmod.dual(load_modules(args, a)[0])
    _write(args, m)
    return True, {"dims": _dims(m)}


def cmd_support(args, a):
    out = []
    for m in load_modules(args, a):
        row = {"module": m.name, "profile": sorted(sp.support_profile(m))}
        if a.name == "A1":
            row.update(sp.a1_support(m).to_json())
        out.append(row)
    return True, {"modules": out}


def _cover(args, a):
    if not args.cover:
        raise UsageError(f"{args.command} needs --cover a:b,c:d")
    return parse_cover(args.cover)


def cmd_cover_check(args, a):
    cov = _cover(args, a)
    ok = sp.is_cover(cov, a.N)
    return ok, {"cover": ok, "segments": [list(s) for s in cov], "N": a.N}


def _window(args, default=(0, 24)):
    return _pair(args.window, "--window") if args.window else default


def _unit(a, seg, side, window):
    key = {"algebra": a.to_json(), "segment": list(seg), "side": side, "window": list(window)}
    return cached("unit", key, lambda: lc.build_local_unit(a, seg, side, window))


def cmd_localize(args, a):
    seg = _pair(args.segment, "--segment")
    window = _window(args)
    mods = load_modules(args, a, default="1")
    out = []
    for m in mods:
        uw = lc.unit_window_for(m, window) if args.side == "below" else (window[0] - m.hi, window[1] - m.lo)
        U = _unit(a, seg, args.side, uw)
        L = lc.localize(m, U)
        c0, c1 = L.window.certified
        hom = {f"p{k}": {str(d): v for d, v in mg.margolis_homology(L.module, k).dims.items() if v and c0 <= d <= c1}
               for k in range(1, a.N + 1)}
        out.append({"module": m.name, "dims": _dims(L.module), "window": L.window.to_json(),
                    "certified": [c0, c1], "homology_in_window": hom, "cells": len(U.cells)})
    return True, {"segment": list(seg), "side": args.side, "modules": out}


def cmd_postnikov(args, a):
    m = load_modules(args, a, default="1")[0]
    P = lc.postnikov(m, args.cut, _window(args))
    rep = P.check()
    return rep.passed, {"input": m.name, **P.to_json(), "certified": list(P.window.certified),
                        "check": rep.to_json()}


def cmd_mv_check(args, a):
    mods = load_modules(args, a, need=2)
    cov = _cover(args, a)
    if len(cov) != 2:
        raise UsageError("mv-check needs a two-segment cover")
    rep = lc.mv_check(mods[0], mods[1], cov, _window(args, (-12, 12)))
    return rep.passed, {"source": mods[0].name, "target": mods[1].name, **rep.to_json(),
                        "certified": rep.details.get("band")}


def cmd_glue(args, a):
    m = load_modules(args, a, default="1")[0]
    cov = _cover(args, a)
    if len(cov) not in (2, 3):
        raise UsageError("glue supports two- and three-open covers")
    datum = lc.datum_from_module(m, cov, _window(args))
    g = lc.glue(datum)
    ok = st.is_stably_iso(g.module, m)
    return ok, {"module": m.name, "cover": [list(s) for s in cov], "glued": _dims(g.module),
                "window": g.window.to_json(), "certified": list(g.window.certified),
                "stably_isomorphic": ok}


def cmd_pic_check(args, a):
    out, ok = [], True
    for m in load_modules(args, a):
        x = pc.is_invertible(m)
        row = {"module": m.name, "invertible": x is not None}
        if x is not None:
            row.update(x.summary())
        ok &= x is not None
        out.append(row)
    return ok, {"modules": out}


def cmd_resolve(args, a):
    m = load_modules(args, a, default="1")[0]
    res = cached("resolution", _key(m, length=args.length), lambda: st.resolution(m, args.length))
    gens = {str(s): res.gen_degrees(s) for s in range(args.length + 1)}
    return res.check(), {"module": m.name, "length": args.length, "generators": gens}


COMMANDS = {
    "validate": cmd_validate, "margolis": cmd_margolis, "free-check": cmd_free_check,
    "strip": cmd_strip, "omega": cmd_omega, "ext": cmd_ext, "tensor": cmd_tensor,
    "dual": cmd_dual, "support": cmd_support, "cover-check": cmd_cover_check,
    "localize": cmd_localize, "postnikov": cmd_postnikov, "mv-check": cmd_mv_check,
    "glue": cmd_glue, "pic-check": cmd_pic_check, "resolve": cmd_resolve,
}


# -- output -----------------------------------------------------------------------

def _simple(v, depth: int = 0) -> bool:
    if isinstance(v, dict):
        return depth < 1 and all(_simple(x, depth + 1) for x in v.values())
    if isinstance(v, list):
        return depth < 2 and all(_simple(x, depth + 1) for x in v)
    return True


def render_text(obj, indent: int = 0) -> str:
    pad = "  " * indent
    lines = []
    if isinstance(obj, dict):
        for k, v in obj.items():
            if isinstance(v, str) and "\n" in v:
                lines.append(f"{pad}{k}:")
                lines.extend(pad + "  " + ln for ln in v.splitlines())
            elif _simple(v):
                lines.append(f"{pad}{k}: {_flat(v)}")
            else:
                lines.append(f"{pad}{k}:")
                lines.append(render_text(v, indent + 1))
    elif isinstance(obj, list):
        for item in obj:
            if _simple(item):
                lines.append(f"{pad}- {_flat(item)}")
            else:
                body = render_text(item, indent + 1).splitlines()
                lines.append(f"{pad}- {body[0].strip()}")
                lines.extend(body[1:])
    else:
        lines.append(pad + _flat(obj))
    return "\n".join(lines)


def _flat(v) -> str:
    if isinstance(v, bool):
        return "yes" if v else "no"
    if isinstance(v, dict):
        return "{" + ", ".join(f"{k}: {_flat(x)}" for k, x in v.items()) + "}"
    if isinstance(v, list):
        return "[" + ", ".join(_flat(x) for x in v) + "]"
    return "-" if v is None else str(v)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="stabmod", description="Stable module computations over finite Hopf algebras.")
    sub = p.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--preset", help="shipped algebra: lambda(k), E1, E2, A1 (default A1)")
    common.add_argument("--algebra", metavar="FILE", help="algebra JSON file")
    common.add_argument("--module", action="append", metavar="EXPR",
                        help="module expression or JSON file (repeatable)")
    common.add_argument("--window", metavar="LO:HI")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--format", choices=["text", "json"], default="text")
    common.add_argument("--cover", metavar="a:b,c:d")
    common.add_argument("--threads", type=int, default=1)
    for name in COMMANDS:
        sp_ = sub.add_parser(name, parents=[common])
        if name == "omega":
            sp_.add_argument("--power", type=int, default=1)
        elif name == "ext":
            sp_.add_argument("--s", default="0:4", metavar="LO:HI")
            sp_.add_argument("--t", default="0:12", metavar="LO:HI")
        elif name in ("tensor", "dual"):
            sp_.add_argument("--out", metavar="FILE")
        elif name == "localize":
            sp_.add_argument("--segment", required=True, metavar="a:b")
            sp_.add_argument("--side", choices=["below", "above"], default="below")
        elif name == "postnikov":
            sp_.add_argument("--cut", type=int, default=1, help="b in the cut [1,b] | [b+1,N]")
        elif name == "resolve":
            sp_.add_argument("--length", type=int, default=5)
    return p


def _set_threads(n: int) -> None:
    if n < 1:
        raise UsageError("--threads must be positive")
    if n == 1:
        return
    try:
        import numba
    except ImportError:  # pragma: no cover
        return
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return USAGE if e.code else PASS
    try:
        _set_threads(args.threads)
        if args.window:
            _pair(args.window, "--window")
        a = load_algebra(args)
        ok, report = COMMANDS[args.command](args, a)
    except (UsageError, FileNotFoundError) as e:
        print(f"stabmod {args.command}: {e}", file=sys.stderr)
        return USAGE
    except (ValueError, AssertionError, KeyError) as e:
        print(f"stabmod {args.command}: {type(e).__name__}: {e}", file=sys.stderr)
        return FAIL
    report = {"command": args.command, "algebra": a.name, "seed": args.seed, "pass": bool(ok), **report}
    if args.format == "json":
        report.pop("chart", None)
        print(json.dumps(report, sort_keys=True))
    else:
        print(render_text(report))
    return PASS if ok else FAIL


if __name__ == "__main__":
    sys.exit(main())
