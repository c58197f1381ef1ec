"""Command-line front end: classification, Axiom-A gaps, linking
certificates, rendering, parameter sweeps, and the built-in example gallery.

Exit codes.  classify / axiom-a: 0 = connected / plausibly-axiom-a,
10 = disconnected / fails, 20 = undecided, 1 = error.  link: 0 = certificate
issued, 10 = hypothesis unmet, 20 = insufficient depth, 1 = error.
All outputs are deterministic given the flags (including --seed).
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import gallery
from .classify import ClassifyConfig, axiom_a_check, fatou_dichotomy, report_to_dict
from .current_link import homology_certificate, witness_cycles
from .errors import (
    HypothesisUnmet,
    InsufficientDepth,
    MalformedSpec,
    PieceNotSeparable,
    SkewfatouError,
)
from .poly_core import Poly1, _dk_batch, parse_map
from .potential import make_evaluator
from .render import Viewport, render, write_ppm

EXIT_OK = 0
EXIT_NEGATIVE = 10
EXIT_UNDECIDED = 20
EXIT_ERROR = 1


def _parse_complex(text: str) -> complex:
    try:
        return complex(text.replace("i", "j").replace(" ", ""))
    except ValueError as exc:
        raise MalformedSpec(f"cannot parse complex number {text!r}") from exc


def _parse_params(items) -> dict:
    out = {}
    for item in items or []:
        if "=" not in item:
            raise MalformedSpec(f"--param expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = _parse_complex(v)
    return out


def _substitute(doc: dict, params: dict) -> dict:
    """Resolve parameter slots: a q record with a_re/a_im contributes
    coefficient (re + i im) + a * (a_re + i a_im)."""
    doc = json.loads(json.dumps(doc))  # deep copy
    a = params.get("a", 0)
    for rec in doc.get("q", []):
        if "a_re" in rec or "a_im" in rec:
            mult = complex(rec.pop("a_re", 0.0), rec.pop("a_im", 0.0))
            c = complex(rec.get("re", 0.0), rec.get("im", 0.0)) + a * mult
            rec["re"], rec["im"] = c.real, c.imag
    return doc


def _load_map(path: str, params: dict):
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if params:
        doc = _substitute(doc, params)
    return parse_map(json.dumps(doc))


def _write_text(path: str, text: str) -> None:
    dirname = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=dirname, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _dump(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _stem(path: str) -> str:
    return os.path.splitext(os.path.basename(path))[0]


def _config(args, n_samples_default: int = 512) -> ClassifyConfig:
    return ClassifyConfig(
        n_base_samples=args.samples or n_samples_default,
        seed=args.seed,
        n_max=args.nmax,
        bailout=args.bailout,
    )


# ---------------------------------------------------------------------------
# Subcommands.
# ---------------------------------------------------------------------------


def cmd_classify(args) -> int:
    sp = _load_map(args.map, _parse_params(args.param))
    cfg = _config(args)
    report = fatou_dichotomy(sp, cfg)
    doc = report_to_dict(report)
    doc["sampling"]["threads"] = args.threads
    out = args.out or _stem(args.map) + ".report.json"
    _write_text(out, _dump(doc))
    print(f"{doc['verdict']}: {doc['conclusion']}")
    print(f"report written to {out}")
    return {"connected": EXIT_OK, "disconnected": EXIT_NEGATIVE,
            "undecided": EXIT_UNDECIDED}[report.connectivity.verdict]


def cmd_axiom_a(args) -> int:
    sp = _load_map(args.map, _parse_params(args.param))
    cfg = _config(args)
    rep = axiom_a_check(sp, args.eps, cfg)
    doc = {
        "verdict": rep.verdict if not rep.failed
        else f"fails({', '.join(rep.failed)})",
        "gaps": {k: (v if math.isfinite(v) else "inf")
                 for k, v in rep.gaps.items()},
        "threshold": rep.threshold,
        "failed": list(rep.failed),
        "sampling": dict(rep.sampling, threads=args.threads),
        "notes": list(rep.notes),
        "citations": ["axiom-a-postcritical-characterization"],
    }
    out = args.out or _stem(args.map) + ".axiom-a.json"
    _write_text(out, _dump(doc))
    print(f"{doc['verdict']}")
    print(f"report written to {out}")
    return {"plausibly-axiom-a": EXIT_OK, "fails": EXIT_NEGATIVE,
            "undecided": EXIT_UNDECIDED}[rep.verdict]


def cmd_link(args) -> int:
    sp = _load_map(args.map, _parse_params(args.param))
    out = args.out or _stem(args.map) + ".certificate.json"
    n = args.samples or 65536
    try:
        results = witness_cycles(sp, max_depth=args.depth, n=n,
                                 seed=args.seed)
        cert = homology_certificate(sp, results, tol=args.tol)
    except HypothesisUnmet as exc:
        print(f"hypothesis unmet: {exc}", file=sys.stderr)
        return EXIT_NEGATIVE
    except (InsufficientDepth, PieceNotSeparable) as exc:
        print(f"insufficient depth: {exc}", file=sys.stderr)
        return EXIT_UNDECIDED
    _write_text(out, _dump(cert))
    print(f"certificate issued to depth {cert['depth']}")
    print(f"certificate written to {out}")
    return EXIT_OK


def cmd_render(args) -> int:
    sp = _load_map(args.map, _parse_params(args.param))
    ev = make_evaluator(sp, n_max=args.nmax, bailout=args.bailout)
    nx, ny = (int(x) for x in args.pixels.replace("x", ",").split(","))
    vp = Viewport(center=_parse_complex(args.center), width=args.width,
                  pixels=(nx, ny))
    z = _parse_complex(args.z) if args.z is not None else None
    frame = render(ev, args.what, vp, z=z)
    out = args.out or f"{_stem(args.map)}.{args.what}.ppm"
    write_ppm(out, frame)
    print(f"image written to {out}")
    return EXIT_OK


def cmd_examples(args) -> int:
    if not args.name:
        for name in gallery.names():
            print(name)
        return EXIT_OK
    params = _parse_params(args.param)
    params = {k: v for k, v in params.items()}
    text = gallery.document(args.name, **params)
    out = args.out or args.name + ".map"
    _write_text(out, text)
    print(f"map written to {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parameter sweep (vectorized, reduced budgets).
# ---------------------------------------------------------------------------


def _family_grid(grid: dict) -> np.ndarray:
    center = complex(grid["center"][0], grid["center"][1])
    vp = Viewport(center=center, width=float(grid["width"]),
                  pixels=tuple(grid["pixels"]))
    return vp.grid()


def _coeff_terms(template: dict):
    """(j, k, base, mult) tuples for the q coefficients of a family."""
    terms = []
    for rec in template["q"]:
        base = complex(rec.get("re", 0.0), rec.get("im", 0.0))
        mult = complex(rec.get("a_re", 0.0), rec.get("a_im", 0.0))
        terms.append((int(rec["j"]), int(rec["k"]), base, mult))
    return terms


def _wk_coeff(terms, k: int, z, a):
    """Coefficient of w^k at base point z, per-pixel parameter array a."""
    out = np.zeros_like(a, dtype=complex)
    hit = False
    for j, kk, base, mult in terms:
        if kk != k:
            continue
        out = out + (base + a * mult) * (z**j)
        hit = True
    return out if hit else out


def _sweep_field(template: dict, a_flat: np.ndarray, nmax: int,
                 seed: int) -> np.ndarray:
    """Per-parameter connectivity verdicts: 0 connected, 1 disconnected,
    2 undecided.  The base polynomial is shared across the family, so the
    base check runs once; fiber and infinity checks run batched per pixel."""
    from .classify import check_base_critical, periodic_chains
    from .sets import sample_J_base

    d = int(template["d"])
    p = Poly1(tuple(complex(c[0], c[1]) for c in template["p"]))
    terms = _coeff_terms(template)
    for j, k, base, mult in terms:
        if (j, k) == (0, d) and mult != 0:
            raise MalformedSpec("the parameter may not multiply the monic "
                                "w^d term")
    sp0 = parse_map(json.dumps(_substitute(template, {"a": 0})))
    ev0 = make_evaluator(sp0)
    cfg = ClassifyConfig(n_max=max(nmax, 256), seed=seed)
    base_out, _ = check_base_critical(ev0, cfg)

    B = a_flat.size
    out = np.zeros(B, dtype=np.int8)  # start optimistic: connected
    und = np.zeros(B, dtype=bool)
    dis = np.zeros(B, dtype=bool)

    s_p_tot = 1.0 + p.abs_coeff_sum_below_leading()
    rb = max(2.0, s_p_tot + 1.0, 2.0 * (s_p_tot - 1.0))
    s_q1 = np.full(B, 1.0)
    for j, k, base, mult in terms:
        if k < d:
            s_q1 = s_q1 + np.abs(base + a_flat * mult) * max(1.0, rb + 1.0) ** 0
    # coefficient sums for fiber escape radii, bounded on |z| <= rb + 1
    s_fib = np.zeros(B)
    for j, k, base, mult in terms:
        if (j, k) != (0, d):
            s_fib = s_fib + np.abs(base + a_flat * mult) * (rb + 1.0) ** j
    rf = np.maximum(2.0, np.maximum(s_fib + 2.0, 2.0 * s_fib))
    c_w = np.maximum(8.0, np.maximum(4.0 * s_q1,
                                     (4.0 / 3.0 * s_p_tot) ** (1.0 / (d - 1))))

    def fiber_orbits(chain, horizon, cyclic):
        """Run every per-pixel vertical critical orbit along a base chain."""
        # vertical derivative coefficients at z = chain[0]
        z0 = chain[0]
        dcoef = np.zeros((B, d), dtype=complex)
        for j, k, base, mult in terms:
            if k >= 1:
                dcoef[:, k - 1] += k * (base + a_flat * mult) * z0**j
        crit = _dk_batch(dcoef)  # (B, d-1)
        nc = d - 1
        W = crit.reshape(-1)
        A = np.repeat(a_flat, nc)
        RF = np.repeat(rf, nc)
        CW = np.repeat(c_w, nc)
        alive = np.ones(W.size, dtype=bool)
        exceeded = np.zeros(W.size, dtype=bool)
        escaped = np.zeros(W.size, dtype=bool)
        klen = len(chain)
        for n in range(horizon + 1):
            z = chain[n % klen] if cyclic else chain[min(n, klen - 1)]
            aw = np.abs(W)
            wesc = np.maximum(RF, CW * max(1.0, abs(z)))
            esc = alive & (aw > wesc)
            escaped |= esc
            alive &= ~esc
            exceeded |= alive & (aw > RF)
            if n == horizon or not alive.any():
                break
            idx = np.flatnonzero(alive)
            acc = np.zeros(idx.size, dtype=complex)
            wi = W[idx]
            for k in range(d, -1, -1):
                ck = np.zeros(idx.size, dtype=complex)
                for j, kk, base, mult in terms:
                    if kk == k:
                        ck += (base + A[idx] * mult) * z**j
                acc = acc * wi + ck
            W[idx] = acc
            bad = ~np.isfinite(W)
            if bad.any():
                escaped |= bad & alive
                alive &= ~bad
        esc_px = escaped.reshape(B, nc).any(axis=1)
        und_px = (alive & exceeded).reshape(B, nc).any(axis=1)
        return esc_px, und_px

    chains = periodic_chains(p, 2, ev0, n_seeds=64, seed=seed)
    for chain in chains[:4]:
        e, u = fiber_orbits(list(chain), nmax, cyclic=True)
        dis |= e
        und |= u
    # a few pinned sample chains off the periodic skeleton
    samp = sample_J_base(ev0, 8, depth=60, seed=seed).points
    for z0 in samp:
        chain = [complex(z0)]
        for _ in range(36):
            chain.append(p(chain[-1]))
        e, u = fiber_orbits(chain, 36, cyclic=False)
        dis |= e
        und |= u

    # induced map at infinity, per pixel
    fcoef = np.zeros((B, d + 1), dtype=complex)
    for j, k, base, mult in terms:
        if j + k == d:
            fcoef[:, k] += base + a_flat * mult
    s_inf = np.sum(np.abs(fcoef[:, :d]), axis=1)
    r_inf = np.maximum(2.0, np.maximum(s_inf + 2.0, 2.0 * s_inf))
    dinf = fcoef[:, 1:] * np.arange(1, d + 1)
    lead_ok = np.abs(dinf[:, -1]) > 0
    crit = np.zeros((B, d - 1), dtype=complex)
    if lead_ok.all():
        crit = _dk_batch(dinf)
    else:
        und |= ~lead_ok
        if lead_ok.any():
            crit[lead_ok] = _dk_batch(dinf[lead_ok])
    U = crit.reshape(-1)
    RI = np.repeat(r_inf, d - 1)
    FC = np.repeat(fcoef, d - 1, axis=0)
    alive = np.ones(U.size, dtype=bool)
    escaped = np.zeros(U.size, dtype=bool)
    for n in range(nmax + 1):
        au = np.abs(U)
        esc = alive & (au > RI)
        escaped |= esc
        alive &= ~esc
        if n == nmax or not alive.any():
            break
        idx = np.flatnonzero(alive)
        acc = np.zeros(idx.size, dtype=complex)
        ui = U[idx]
        for k in range(d, -1, -1):
            acc = acc * ui + FC[idx, k]
        U[idx] = acc
        bad = ~np.isfinite(U)
        if bad.any():
            escaped |= bad & alive
            alive &= ~bad
    dis |= escaped.reshape(B, d - 1).any(axis=1)

    if base_out == "fail":
        dis[:] = True
    elif base_out == "undecided":
        und[:] = True
    out[und] = 2
    out[dis] = 1
    return out


def cmd_sweep(args) -> int:
    with open(args.family, "r", encoding="utf-8") as fh:
        fam = json.load(fh)
    if "template" not in fam or "grid" not in fam:
        raise MalformedSpec("family file needs 'template' and 'grid' keys")
    grid_pts = _family_grid(fam["grid"])
    ny, nx = grid_pts.shape
    a_flat = grid_pts.ravel()
    nmax = min(args.nmax, 256) if args.nmax else 256

    threads = max(1, args.threads)
    if threads == 1 or a_flat.size < 4096:
        field = _sweep_field(fam["template"], a_flat, nmax, args.seed)
    else:
        chunks = np.array_split(np.arange(a_flat.size), threads)
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(
                lambda ix: _sweep_field(fam["template"], a_flat[ix], nmax,
                                        args.seed),
                chunks))
        field = np.concatenate(parts)
    field = field.reshape(ny, nx)

    shade_map = np.array([0, 255, 128], dtype=np.uint8)
    prefix = args.out or _stem(args.family) + ".sweep"
    write_ppm(prefix + ".ppm", shade_map[field])
    lines = ["a_re,a_im,verdict"]
    labels = {0: "connected", 1: "disconnected", 2: "undecided"}
    for a, v in zip(a_flat, field.ravel()):
        lines.append(f"{float(a.real)!r},{float(a.imag)!r},{labels[int(v)]}")
    _write_text(prefix + ".csv", "\n".join(lines) + "\n")
    print(f"sweep written to {prefix}.ppm and {prefix}.csv")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Argument parsing.
# ---------------------------------------------------------------------------


def _add_global_flags(sub):
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--nmax", type=int, default=1000)
    sub.add_argument("--bailout", type=float, default=1e8)
    sub.add_argument("--samples", type=int, default=None)
    sub.add_argument("--threads", type=int, default=1)
    sub.add_argument("--out", type=str, default=None)
    sub.add_argument("--param", action="append", default=[],
                     help="parameter substitution, e.g. --param a=0.5+0.1i")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="skewfatou",
        description="numerical connectivity, Axiom-A, and homology-witness "
                    "analysis of polynomial skew products",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    s = subs.add_parser("classify", help="connectivity + dichotomy report")
    s.add_argument("map")
    _add_global_flags(s)
    s.set_defaults(func=cmd_classify)

    s = subs.add_parser("axiom-a", help="postcritical gap report")
    s.add_argument("map")
    s.add_argument("--eps", type=float, default=0.02)
    _add_global_flags(s)
    s.set_defaults(func=cmd_axiom_a)

    s = subs.add_parser("link", help="linking-number homology certificate")
    s.add_argument("map")
    s.add_argument("--depth", type=int, default=6)
    s.add_argument("--tol", type=float, default=0.02)
    _add_global_flags(s)
    s.set_defaults(func=cmd_link)

    s = subs.add_parser("render", help="PPM raster of a Julia-type set")
    s.add_argument("map")
    s.add_argument("--what", choices=["base", "fiber", "infinity", "j2-slice"],
                   default="base")
    s.add_argument("--z", type=str, default=None,
                   help="base point for fiber / j2-slice renders")
    s.add_argument("--center", type=str, default="0")
    s.add_argument("--width", type=float, default=6.0)
    s.add_argument("--pixels", type=str, default="512,384")
    _add_global_flags(s)
    s.set_defaults(func=cmd_render)

    s = subs.add_parser("sweep", help="parameter-plane connectivity sweep")
    s.add_argument("family")
    _add_global_flags(s)
    s.set_defaults(func=cmd_sweep)

    s = subs.add_parser("examples", help="list or materialize example maps")
    s.add_argument("name", nargs="?", default=None)
    _add_global_flags(s)
    s.set_defaults(func=cmd_examples)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (SkewfatouError, OSError, json.JSONDecodeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
