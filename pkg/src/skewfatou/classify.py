"""Connectivity classification, heuristic Axiom-A gap checking, and the
Fatou-component dichotomy routing for polynomial skew products.

Connectivity follows the critical-orbit criterion: the Julia set is connected
iff the base critical points stay bounded, the vertical critical points stay
bounded over every z in J_p, and the critical points of the induced map at
infinity stay bounded.  "For all z in J_p" is tested on inverse-iteration
samples plus all detected repelling periodic points of low period, so every
`disconnected` verdict ships a replayable escape witness while `connected`
is a sampled claim whose budgets are recorded in the report.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .poly_core import Poly1, SkewProduct, roots
from .potential import Membership, PotentialEvaluator, make_evaluator
from .sets import (
    PointCloud,
    _vertical_critical_batch,
    attracting_cycles,
    min_distance,
    postcritical_cloud,
    sample_J2,
    sample_J_base,
    sample_J_fiber,
    sample_J_infinity,
)

WITNESS_KINDS = (
    "base-critical-escape",
    "fiber-critical-escape",
    "infinity-critical-escape",
    "gap-pair",
)


@dataclass(frozen=True)
class Witness:
    """A machine-checkable piece of evidence: an escaping critical orbit
    prefix (ending above the bailout) or a close pair of cloud points."""

    kind: str
    location: tuple
    orbit_prefix: tuple
    certified: bool

    def __post_init__(self):
        if self.kind not in WITNESS_KINDS:
            raise ValueError(f"unknown witness kind {self.kind!r}")


@dataclass(frozen=True)
class ClassifyConfig:
    n_base_samples: int = 512
    depth: int = 24
    seed: int = 0
    n_max: int = 1000
    bailout: float = 1e8
    grid_n: int = 12
    max_period: int = 6
    fiber_horizon: int = 36
    cloud_n: int = 4096
    j2_fibers: int = 256
    j2_per_fiber: int = 16
    eps: float = 0.02
    cycle_budget: int = 4000
    run_link_certificate: bool = True


@dataclass(frozen=True)
class ConnectivityReport:
    verdict: str  # connected | disconnected | undecided
    checks: tuple
    witnesses: tuple
    sampling: dict


@dataclass(frozen=True)
class AxiomAReport:
    gaps: dict
    threshold: float
    verdict: str  # plausibly-axiom-a | fails | undecided
    failed: tuple
    sampling: dict
    notes: tuple = ()


@dataclass(frozen=True)
class DichotomyReport:
    route: str  # a | b | c | d
    conclusion: str
    connectivity: ConnectivityReport
    axiom_a: AxiomAReport
    notes: tuple = ()
    link_summary: dict | None = None


# ---------------------------------------------------------------------------
# Witness construction and replay.
# ---------------------------------------------------------------------------


def _escape_orbit_1d(poly: Poly1, z0: complex, bailout: float, cap: int) -> list:
    orbit = [complex(z0)]
    while abs(orbit[-1]) <= bailout and len(orbit) < cap:
        orbit.append(poly(orbit[-1]))
    return orbit


def _escape_orbit_2d(sp: SkewProduct, z0: complex, w0: complex,
                     bailout: float, cap: int) -> list:
    orbit = [(complex(z0), complex(w0))]
    while math.hypot(abs(orbit[-1][0]), abs(orbit[-1][1])) <= bailout and len(orbit) < cap:
        z, w = orbit[-1]
        orbit.append(sp(z, w))
    return orbit


def replay_witness(sp: SkewProduct, witness: Witness, tol: float = 1e-10) -> bool:
    """Re-run the stored orbit prefix under the named map and confirm it
    reproduces the stored points and (for escapes) ends above the bailout."""
    from .poly_core import infinity_map

    if witness.kind == "gap-pair":
        return True
    prefix = witness.orbit_prefix
    if len(prefix) < 1:
        return False
    if witness.kind == "fiber-critical-escape":
        z, w = prefix[0]
        for zs, ws in prefix[1:]:
            z, w = sp(z, w)
            if abs(z - zs) > tol * (1 + abs(zs)) or abs(w - ws) > tol * (1 + abs(ws)):
                return False
        return math.hypot(abs(prefix[-1][0]), abs(prefix[-1][1])) > 1e8 * 0.999
    poly = sp.p if witness.kind == "base-critical-escape" else infinity_map(sp)
    z = prefix[0]
    for zs in prefix[1:]:
        z = poly(z)
        if abs(z - zs) > tol * (1 + abs(zs)):
            return False
    return abs(prefix[-1]) > 1e8 * 0.999


# ---------------------------------------------------------------------------
# The three critical-orbit checks.
# ---------------------------------------------------------------------------


def _outcome(memberships) -> str:
    vals = list(memberships)
    if any(m is Membership.OUT for m in vals):
        return "fail"
    if any(m is Membership.UNDECIDED for m in vals):
        return "undecided"
    return "pass"


def check_base_critical(sp, config: ClassifyConfig | None = None):
    """Do all critical points of p stay in K_p?  -> (outcome, witnesses)"""
    config = config or ClassifyConfig()
    ev = _ev(sp, config)
    dp = ev.sp.p.derivative()
    crit = roots(dp) if dp.degree >= 1 else []
    mems, wits = [], []
    for c in crit:
        m = ev.base_membership(c)
        mems.append(m)
        if m is Membership.OUT:
            orbit = _escape_orbit_1d(ev.sp.p, c, config.bailout,
                                     config.n_max + 80)
            wits.append(Witness("base-critical-escape", (complex(c),),
                                tuple(orbit), abs(orbit[-1]) > config.bailout))
    return _outcome(mems), wits


def check_infinity_critical(sp, config: ClassifyConfig | None = None):
    """Do all critical points of the infinity map stay bounded?"""
    config = config or ClassifyConfig()
    ev = _ev(sp, config)
    f_pi = ev.infinity_poly
    dfp = f_pi.derivative()
    crit = roots(dfp) if dfp.degree >= 1 else []
    mems, wits = [], []
    for c in crit:
        m = ev.infinity_membership(c)
        mems.append(m)
        if m is Membership.OUT:
            orbit = _escape_orbit_1d(f_pi, c, config.bailout, config.n_max + 80)
            wits.append(Witness("infinity-critical-escape", (complex(c),),
                                tuple(orbit), abs(orbit[-1]) > config.bailout))
    return _outcome(mems), wits


def _fiber_status_batch(ev: PotentialEvaluator, Z: np.ndarray, W: np.ndarray,
                        horizon: int) -> np.ndarray:
    """Vectorized fiber-orbit boundedness test: 0 = bounded within budget,
    1 = certified escape, 2 = undecided."""
    pr = ev.params
    Z = np.asarray(Z, dtype=complex).copy()
    W = np.asarray(W, dtype=complex).copy()
    n = Z.size
    status = np.full(n, 2, dtype=np.int8)
    alive = np.ones(n, dtype=bool)
    exceeded = np.zeros(n, dtype=bool)
    for step in range(horizon + 1):
        az = np.abs(Z)
        aw = np.abs(W)
        wesc = np.maximum(pr.r_fiber, ev._c_w * np.maximum(1.0, az))
        out = alive & (aw > wesc)
        status[out] = 1
        alive &= ~out
        # A genuine J_p point never leaves the base escape radius, so a
        # crossing means floating-point drift off J_p: freeze the sample,
        # keeping the boundedness evidence gathered so far.
        drift = alive & (az > pr.r_base)
        status[drift] = np.where(exceeded[drift], 2, 0)
        alive &= ~drift
        exceeded |= alive & (aw > pr.r_fiber)
        if not alive.any() or step == horizon:
            break
        idx = np.flatnonzero(alive)
        W[idx] = ev.sp.q(Z[idx], W[idx])
        Z[idx] = ev.sp.p.eval_many(Z[idx])
        bad = ~(np.isfinite(Z) & np.isfinite(W))
        if bad.any():
            status[bad & alive] = 2
            alive &= ~bad
    status[alive & ~exceeded] = 0
    return status


def _fiber_membership_cycle(ev: PotentialEvaluator, chain, w0: complex,
                            n_max: int) -> Membership:
    """Fiber-orbit test with the base coordinate pinned to an exact cycle,
    immune to floating-point drift off J_p."""
    pr = ev.params
    k = len(chain)
    w = complex(w0)
    stayed = True
    for n in range(n_max + 1):
        z = chain[n % k]
        aw = abs(w)
        if aw > ev.w_escape_radius(abs(z)):
            return Membership.OUT
        if aw > pr.r_fiber:
            stayed = False
        if n == n_max:
            break
        w = ev.sp.q(z, w)
    return Membership.IN if stayed else Membership.UNDECIDED


def check_fiber_critical(sp, z_samples: PointCloud | None = None,
                         config: ClassifyConfig | None = None,
                         cycles: list | None = None):
    """Do the vertical critical points stay in K_z over sampled z in J_p?

    Cloud samples are tested over a drift-capped horizon (a numerically
    sampled J_p point leaves J_p after ~50 forward steps in double
    precision); exact periodic chains get the full budget.
    """
    config = config or ClassifyConfig()
    ev = _ev(sp, config)
    sp = ev.sp
    mems, wits = [], []

    if z_samples is None:
        z_samples = sample_J_base(ev, config.n_base_samples,
                                  depth=config.fiber_horizon + config.depth,
                                  seed=config.seed)
    zs = np.asarray(z_samples.points, dtype=complex).ravel()
    if zs.size and sp.d >= 2:
        ws = _vertical_critical_batch(sp, zs)
        Z = np.repeat(zs, sp.d - 1)
        W = ws.ravel()
        status = _fiber_status_batch(ev, Z, W, config.fiber_horizon)
        if (status == 0).any():
            mems.append(Membership.IN)
        if (status == 2).any():
            mems.append(Membership.UNDECIDED)
        for i in np.flatnonzero(status == 1)[:8]:
            mems.append(Membership.OUT)
            orbit = _escape_orbit_2d(sp, Z[i], W[i], config.bailout,
                                     config.fiber_horizon + 80)
            last = orbit[-1]
            wits.append(Witness(
                "fiber-critical-escape", (complex(Z[i]), complex(W[i])),
                tuple(orbit),
                math.hypot(abs(last[0]), abs(last[1])) > config.bailout,
            ))

    for chain in cycles or []:
        ws = _vertical_critical_batch(sp, np.asarray(chain, dtype=complex))
        for i, z in enumerate(chain):
            rotated = tuple(chain[i:]) + tuple(chain[:i])
            for w in ws[i]:
                m = _fiber_membership_cycle(ev, rotated, w, config.n_max)
                mems.append(m)
                if m is Membership.OUT:
                    orbit = _escape_orbit_2d(sp, z, w, config.bailout,
                                             config.n_max + 80)
                    last = orbit[-1]
                    wits.append(Witness(
                        "fiber-critical-escape", (complex(z), complex(w)),
                        tuple(orbit),
                        math.hypot(abs(last[0]), abs(last[1])) > config.bailout,
                    ))
    return _outcome(mems), wits


# ---------------------------------------------------------------------------
# Periodic points of the base map (Newton from Julia samples).
# ---------------------------------------------------------------------------


def periodic_chains(poly: Poly1, max_period: int, ev: PotentialEvaluator,
                    n_seeds: int = 256, seed: int = 0) -> list:
    """Repelling cycles of period <= max_period as exact chains (tuples).

    Newton on p^k(z) - z from Julia-set samples; keeps |multiplier| > 1 so
    every returned chain lies on J_p.
    """
    dpoly = poly.derivative()
    seeds_cloud = sample_J_base(ev, n_seeds, depth=16, seed=seed).points
    reps: list[complex] = []
    chains: list[tuple] = []
    for k in range(1, max_period + 1):
        z = seeds_cloud.astype(complex).copy()
        for _ in range(60):
            v = z.copy()
            dv = np.ones_like(z)
            for _ in range(k):
                dv = dv * dpoly.eval_many(v)
                v = poly.eval_many(v)
            den = dv - 1.0
            small = np.abs(den) < 1e-12
            den[small] = 1.0
            step = (v - z) / den
            step[small] = 0.0
            z = z - step
            bad = ~np.isfinite(z)
            z[bad] = 1e6  # park divergent seeds away from J_p
        # validate
        v = z.copy()
        dv = np.ones_like(z)
        for _ in range(k):
            dv = dv * dpoly.eval_many(v)
            v = poly.eval_many(v)
        ok = (np.abs(v - z) < 1e-10 * (1 + np.abs(z))) & (np.abs(dv) > 1.0 + 1e-9)
        for cand in z[ok]:
            cand = complex(cand)
            if any(abs(cand - r) < 1e-8 for r in reps):
                continue
            chain = [cand]
            for _ in range(k - 1):
                chain.append(poly(chain[-1]))
            # primitive period only
            prim = next(
                (m for m in range(1, k) if k % m == 0
                 and abs(chain[m % k] - chain[0]) < 1e-9),
                k,
            )
            if prim != k:
                continue  # picked up again at its own period
            reps.extend(chain)
            chains.append(tuple(chain))
    return chains


# ---------------------------------------------------------------------------
# Aggregation.
# ---------------------------------------------------------------------------


def _ev(sp, config: ClassifyConfig) -> PotentialEvaluator:
    if isinstance(sp, PotentialEvaluator):
        return sp
    from .potential import escape_params

    return PotentialEvaluator(sp, escape_params(sp, config.n_max, config.bailout))


def classify_connectivity(sp, config: ClassifyConfig | None = None) -> ConnectivityReport:
    """Aggregate the three critical-orbit checks into a connectivity verdict."""
    config = config or ClassifyConfig()
    ev = _ev(sp, config)
    sp = ev.sp

    base_out, base_w = check_base_critical(ev, config)
    inf_out, inf_w = check_infinity_critical(ev, config)
    chains = periodic_chains(sp.p, config.max_period, ev, seed=config.seed)
    fib_out, fib_w = check_fiber_critical(ev, None, config, cycles=chains)

    # supplementary grid check over decided interior points of K_p
    side = np.linspace(-ev.params.r_base, ev.params.r_base, config.grid_n)
    gz = (side[:, None] + 1j * side[None, :]).ravel()
    interior = [z for z in gz if ev.base_membership(z) is Membership.IN]
    grid_out = "pass"
    grid_w: list[Witness] = []
    if interior:
        zi = np.array(interior, dtype=complex)
        ws = _vertical_critical_batch(sp, zi)
        Z = np.repeat(zi, sp.d - 1)
        W = ws.ravel()
        status = _fiber_status_batch(ev, Z, W, config.n_max)
        if (status == 1).any():
            grid_out = "fail"
            for i in np.flatnonzero(status == 1)[:4]:
                orbit = _escape_orbit_2d(sp, Z[i], W[i], config.bailout,
                                         config.n_max + 80)
                last = orbit[-1]
                grid_w.append(Witness(
                    "fiber-critical-escape", (complex(Z[i]), complex(W[i])),
                    tuple(orbit),
                    math.hypot(abs(last[0]), abs(last[1])) > config.bailout,
                ))
        elif (status == 2).any():
            grid_out = "undecided"

    checks = (
        {"name": "base-critical-bounded", "outcome": base_out},
        {"name": "infinity-critical-bounded", "outcome": inf_out},
        {"name": "fiber-critical-bounded-over-J_p-samples", "outcome": fib_out},
        {"name": "fiber-critical-bounded-over-K_p-grid", "outcome": grid_out},
    )
    witnesses = tuple(base_w + inf_w + fib_w + grid_w)
    certified = [w for w in witnesses if w.certified]
    outcomes = [c["outcome"] for c in checks]
    if certified:
        verdict = "disconnected"
    elif all(o == "pass" for o in outcomes):
        verdict = "connected"
    else:
        verdict = "undecided"
    sampling = {
        "n_base_samples": config.n_base_samples,
        "depth": config.depth,
        "fiber_horizon": config.fiber_horizon,
        "grid": [config.grid_n, config.grid_n],
        "n_periodic_chains": len(chains),
        "max_period": config.max_period,
        "seeds": [config.seed],
        "budgets": {"n_max": config.n_max, "bailout": config.bailout},
    }
    return ConnectivityReport(verdict=verdict, checks=checks,
                              witnesses=witnesses, sampling=sampling)


def _sample_J_Ap(ev: PotentialEvaluator, per_point: int, seed: int) -> PointCloud:
    """Julia sets over the attracting base cycles, as a product-space cloud."""
    cycles = attracting_cycles(ev.sp.p)
    pts = []
    for cyc in cycles:
        for z in cyc.points:
            fib = sample_J_fiber(ev, z, per_point, depth=24, seed=seed)
            pts.append(np.column_stack(
                [np.full(fib.count, complex(z)), fib.points]))
    if pts:
        arr = np.concatenate(pts, axis=0)
    else:
        arr = np.zeros((0, 2), dtype=complex)
    return PointCloud(ambient="product-space", points=arr,
                      meta={"set-name": "J_Ap", "sampler": "pullback",
                            "depth": 24, "seed": seed})


def axiom_a_check(sp, eps: float = 0.02,
                  config: ClassifyConfig | None = None) -> AxiomAReport:
    """Heuristic gap test for the four postcritical disjointness conditions.

    A finite sample cannot certify hyperbolicity, so the passing verdict is
    "plausibly-axiom-a", never "axiom-a".  Empty postcritical clouds (all
    orbits escaped, or no attracting base cycles) make their condition
    vacuous: the gap is +inf.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    config = config or ClassifyConfig()
    ev = _ev(sp, config)
    sp = ev.sp
    notes = []

    j_p = sample_J_base(ev, config.cloud_n, depth=config.depth, seed=config.seed)
    j_2 = sample_J2(ev, config.j2_fibers, config.j2_per_fiber, seed=config.seed)
    j_pi = sample_J_infinity(ev, config.cloud_n, depth=config.depth,
                             seed=config.seed)
    j_ap = _sample_J_Ap(ev, max(64, config.cloud_n // 16), config.seed)

    d_p = postcritical_cloud(ev, "D_p", seed=config.seed)
    d_jp = postcritical_cloud(ev, "D_Jp", n_starts=config.n_base_samples,
                              seed=config.seed)
    d_ap = postcritical_cloud(ev, "D_Ap", seed=config.seed)
    d_pi = postcritical_cloud(ev, "D_Pi", seed=config.seed)

    for name, cloud in (("D_p", d_p), ("D_Jp", d_jp), ("D_Ap", d_ap),
                        ("D_Pi", d_pi)):
        if cloud.escaping is not None and cloud.escaping.all() and cloud.count:
            notes.append(f"{name}: all critical orbits escape; the closure "
                         "accumulates only at infinity, away from the bounded "
                         "Julia cloud")
        if cloud.count == 0:
            notes.append(f"{name} is empty (no starting critical data); its "
                         "disjointness condition is vacuous")

    gaps = {
        "D_p<->J_p": min_distance(d_p, j_p) if d_p.count else float("inf"),
        "D_Jp<->J_2": min_distance(d_jp, j_2) if d_jp.count else float("inf"),
        "D_Ap<->J_Ap": (min_distance(d_ap, j_ap)
                        if d_ap.count and j_ap.count else float("inf")),
        "D_Pi<->J_Pi": min_distance(d_pi, j_pi) if d_pi.count else float("inf"),
    }
    failed = tuple(k for k, v in gaps.items() if v < eps)
    verdict = "fails" if failed else "plausibly-axiom-a"
    sampling = {
        "cloud_n": config.cloud_n,
        "j2": [config.j2_fibers, config.j2_per_fiber],
        "seeds": [config.seed],
        "budgets": {"n_max": config.n_max, "bailout": config.bailout},
    }
    return AxiomAReport(gaps=gaps, threshold=eps, verdict=verdict,
                        failed=failed, sampling=sampling, notes=tuple(notes))


_ROUTE_A = "all Fatou components are homeomorphic to open balls"
_ROUTE_B = ("the stable set of the superattracting point at infinity has "
            "infinitely generated first homology")
_ROUTE_C = ("some attracting-basin Fatou component at infinity has "
            "infinitely generated first homology")
_CAVEAT_C = ("heuristic caveat: this conclusion is established under "
             "hyperbolicity-type hypotheses; it can fail for maps that are "
             "not Axiom-A even when the induced map at infinity has an "
             "attracting cycle")


def fatou_dichotomy(sp, config: ClassifyConfig | None = None) -> DichotomyReport:
    """Combine connectivity and the gap report into the dichotomy routing."""
    config = config or ClassifyConfig()
    ev = _ev(sp, config)
    conn = classify_connectivity(ev, config)
    axa = axiom_a_check(ev, config.eps, config)
    notes: list[str] = []
    link_summary = None

    fiber_wits = [w for w in conn.witnesses
                  if w.kind == "fiber-critical-escape" and w.certified]
    base_wits = [w for w in conn.witnesses
                 if w.kind == "base-critical-escape" and w.certified]

    if conn.verdict == "connected" and axa.verdict == "plausibly-axiom-a":
        route, conclusion = "a", _ROUTE_A
    elif fiber_wits:
        route, conclusion = "b", _ROUTE_B
        notes.append("no hyperbolicity needed for this route: a disconnected "
                     "fiber Julia set over J_p suffices")
    elif base_wits:
        pi_cycles = attracting_cycles(ev.infinity_poly,
                                      budget=config.cycle_budget)
        if pi_cycles:
            route, conclusion = "c", _ROUTE_C
            notes.append(_CAVEAT_C)
            notes.append(
                "induced map at infinity has %d attracting cycle(s); the "
                "weakened hypothesis for this route is met" % len(pi_cycles)
            )
            if config.run_link_certificate:
                link_summary = _try_link_certificate(ev, config)
        else:
            route = "d"
            conclusion = ("undecided: base critical orbit escapes but the "
                          "induced map at infinity has no detected attracting "
                          "cycle, so the constructive route is unavailable")
    else:
        route = "d"
        conclusion = "undecided: checks did not resolve within budgets"
    return DichotomyReport(route=route, conclusion=conclusion,
                           connectivity=conn, axiom_a=axa,
                           notes=tuple(notes), link_summary=link_summary)


def _try_link_certificate(ev: PotentialEvaluator, config: ClassifyConfig):
    from . import current_link

    try:
        cycles = current_link.witness_cycles(
            ev, max_depth=4, n=16384, seed=config.seed, cloud_n=2048)
        cert = current_link.homology_certificate(
            ev, cycles, tol=max(config.eps, 0.2))
        return {
            "certified": True,
            "linking_values": [e["lk"] for e in cert["entries"]],
            "depths": [e["depth"] for e in cert["entries"]],
        }
    except Exception as exc:  # certificate is best-effort evidence here
        return {"certified": False, "reason": f"{type(exc).__name__}: {exc}"}


# ---------------------------------------------------------------------------
# Report serialization (key-value tree with the fixed field set).
# ---------------------------------------------------------------------------


def _c2l(c: complex) -> list:
    return [float(c.real), float(c.imag)]


def witness_to_dict(w: Witness) -> dict:
    if w.kind == "fiber-critical-escape":
        loc = [_c2l(x) for x in w.location]
        orbit = [[_c2l(z), _c2l(u)] for z, u in w.orbit_prefix]
    elif w.kind == "gap-pair":
        loc = [[_c2l(x) for x in pt] if isinstance(pt, tuple) else _c2l(pt)
               for pt in w.location]
        orbit = []
    else:
        loc = [_c2l(x) for x in w.location]
        orbit = [_c2l(z) for z in w.orbit_prefix]
    return {"kind": w.kind, "location": loc, "orbit_prefix": orbit,
            "certified": bool(w.certified)}


def report_to_dict(report: DichotomyReport) -> dict:
    conn, axa = report.connectivity, report.axiom_a
    gaps = {k: (v if math.isfinite(v) else "inf") for k, v in axa.gaps.items()}
    checks = list(conn.checks) + [
        {"name": "axiom-a-gaps", "outcome": axa.verdict,
         "failed": list(axa.failed), "threshold": axa.threshold}
    ]
    return {
        "verdict": conn.verdict,
        "checks": checks,
        "witnesses": [witness_to_dict(w) for w in conn.witnesses],
        "sampling": dict(conn.sampling, axiom_a=axa.sampling),
        "gaps": gaps,
        "conclusion": f"route ({report.route}): {report.conclusion}",
        "citations": [
            "connectivity-criterion-equivalence",
            "axiom-a-postcritical-characterization",
            "fatou-component-dichotomy",
            "stable-set-infinite-homology",
        ],
    }
