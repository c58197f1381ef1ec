"""Green's functions for the base, the full map, the fibers, and the line at
infinity, plus membership queries for the associated filled Julia sets.

Every escape decision is backed by an algebraic radius bound (no sampling):
|z| > R_base implies |p(z)| >= 2|z|, and |w| > W_esc(z) implies
|q_z(w)| >= 2|w| with the threshold self-propagating along the orbit.  Green
values carry a certified error interval where the tail estimate applies; the
`decided` flag is False when the budget ran out in the ambiguous band.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple

import mpmath as mp
import numpy as np

from .poly_core import Poly1, SkewProduct, infinity_map


class Membership(enum.Enum):
    IN = "in"
    OUT = "out"
    UNDECIDED = "undecided"


class GreenValue(NamedTuple):
    value: float
    error: float
    decided: bool


_MP_LOG2 = math.log(2.0)


def _safe_log(x) -> float:
    # x may be a float or an mpmath magnitude with a huge exponent
    if isinstance(x, (float, int)):
        return math.log(x)
    return float(mp.log(x))


@dataclass(frozen=True)
class EscapeParams:
    """Escape radii and iteration budgets.

    r_base: |z| > r_base certifies |p(z)| >= 2|z|.
    r_fiber: |w| > r_fiber with |z| <= r_base + 1 certifies |q_z(w)| >= 2|w|.
    bailout: magnitude at which the potential tail estimate kicks in.
    """

    r_base: float
    r_fiber: float
    n_max: int = 1000
    bailout: float = 1e8

    def __post_init__(self):
        if self.r_base < 2 or self.r_fiber < 2:
            raise ValueError("escape radii must be >= 2")
        if self.n_max < 1:
            raise ValueError("n_max must be >= 1")
        if self.bailout < self.r_fiber:
            raise ValueError("bailout must be >= r_fiber")


def _base_radius(poly: Poly1) -> float:
    s = poly.abs_coeff_sum_below_leading()
    return max(2.0, s + 2.0, 2.0 * s)


def escape_params(sp: SkewProduct, n_max: int = 1000, bailout: float = 1e8) -> EscapeParams:
    """Radii from coefficient triangle-inequality bounds (never sampled).

    r_base = max(2, S+2, 2S) with S the coefficient sum of p below leading;
    then |z| > r_base gives |p(z)| >= |z|^{d-1}(|z|-S) >= 2|z|.  r_fiber uses
    the same rule with the z-coefficients of q bounded on |z| <= r_base + 1.
    """
    r_base = _base_radius(sp.p)
    s_fib = sp.q.abs_coeff_sum(r_base + 1.0)
    r_fiber = max(2.0, s_fib + 2.0, 2.0 * s_fib)
    return EscapeParams(r_base=r_base, r_fiber=r_fiber, n_max=n_max,
                        bailout=max(bailout, r_fiber))


class _Green1D:
    """Escape-time Green's function of a single monic polynomial."""

    def __init__(self, poly: Poly1, n_max: int, bailout: float, r: float | None = None):
        self.poly = poly
        self.d = poly.degree
        self.r = _base_radius(poly) if r is None else r
        self.n_max = n_max
        self.bailout = max(bailout, self.r)
        self.s_below = poly.abs_coeff_sum_below_leading()
        # per-step log correction once past bailout; decays like 1/|z|
        self.err_const = 4.0 * self.s_below / self.bailout + 1e-14

    def green(self, z: complex) -> GreenValue:
        z = complex(z)
        stayed = True
        for n in range(self.n_max + 1):
            az = abs(z)
            if az > self.bailout:
                scale = self.d ** (-n)
                return GreenValue(scale * math.log(az), scale * self.err_const, True)
            if az > self.r:
                stayed = False
            if n == self.n_max:
                break
            z = self.poly(z)
        if stayed:
            return GreenValue(0.0, 0.0, True)
        n = self.n_max
        scale = self.d ** (-n)
        az = abs(z)
        val = scale * math.log(az) if az > 1 else 0.0
        return GreenValue(val, scale * math.log(self.bailout), False)

    def membership(self, z: complex) -> Membership:
        z = complex(z)
        stayed = True
        for n in range(self.n_max + 1):
            az = abs(z)
            if az > self.r:
                return Membership.OUT  # certified: |poly| >= 2|z| beyond r
            if n == self.n_max:
                break
            z = self.poly(z)
        return Membership.IN if stayed else Membership.UNDECIDED

    def green_grid(self, zs: np.ndarray) -> np.ndarray:
        """Vectorized fast-mode Green values (tail estimate at first bailout
        crossing; error ~ d^-n * err_const, plenty for shading and sampling
        tolerance checks)."""
        cur = np.array(zs, dtype=complex).ravel()
        out = np.zeros(cur.shape, dtype=float)
        idx = np.arange(cur.size)
        a = np.abs(cur)
        esc = a > self.bailout
        out[idx[esc]] = np.log(a[esc])
        keep = ~esc
        cur, idx = cur[keep], idx[keep]
        for n in range(1, self.n_max + 1):
            if cur.size == 0:
                break
            cur = self.poly.eval_many(cur)
            bad = ~np.isfinite(cur)
            if bad.any():
                cur[bad] = 1e300
            a = np.abs(cur)
            esc = a > self.bailout
            if esc.any():
                out[idx[esc]] = np.log(a[esc]) / self.d**n
            keep = ~esc
            cur, idx = cur[keep], idx[keep]
        return out.reshape(np.shape(zs))


@dataclass(frozen=True)
class PotentialEvaluator:
    """Immutable bundle of a skew product with escape radii and budgets.

    All queries are pure; one evaluator can serve any number of concurrent
    callers.
    """

    sp: SkewProduct
    params: EscapeParams

    def __post_init__(self):
        sp, pr = self.sp, self.params
        s_p = sp.p.abs_coeff_sum_below_leading()
        s_fib = sp.q.abs_coeff_sum(pr.r_base + 1.0)
        if pr.r_base < max(2.0, s_p + 2.0) - 1e-12:
            raise ValueError(
                f"r_base = {pr.r_base} does not certify base escape (needs >= {s_p + 2.0})"
            )
        if pr.r_fiber < max(2.0, s_fib + 2.0) - 1e-12:
            raise ValueError(
                f"r_fiber = {pr.r_fiber} does not certify fiber escape (needs >= {s_fib + 2.0})"
            )
        s_q1 = sum(abs(c) for (j, k), c in sp.q.coeffs.items() if k < sp.d) + 1.0
        s_p_tot = 1.0 + s_p
        c_w = max(8.0, 4.0 * s_q1, (4.0 / 3.0 * s_p_tot) ** (1.0 / (sp.d - 1)))
        s_all = s_p + sum(abs(c) for c in sp.q.coeffs.values())
        object.__setattr__(self, "_s_p", s_p)
        object.__setattr__(self, "_s_q1", s_q1)
        object.__setattr__(self, "_c_w", c_w)
        object.__setattr__(self, "_corr_full", 2.0 * math.log(2.0 + s_all))
        object.__setattr__(self, "_base1d", _Green1D(sp.p, pr.n_max, pr.bailout, pr.r_base))
        f_pi = infinity_map(sp)
        object.__setattr__(self, "_fpi", f_pi)
        object.__setattr__(self, "_inf1d", _Green1D(f_pi, pr.n_max, pr.bailout))
        # promote to arbitrary-exponent arithmetic before |.|^d can overflow
        object.__setattr__(self, "_promote_at", 10.0 ** (250.0 / sp.d))

    # -- scalar queries -----------------------------------------------------

    @property
    def infinity_poly(self) -> Poly1:
        return self._fpi

    def green_base_detail(self, z: complex) -> GreenValue:
        return self._base1d.green(z)

    def green_base(self, z: complex) -> float:
        return self.green_base_detail(z).value

    def green_infinity_detail(self, u: complex) -> GreenValue:
        return self._inf1d.green(u)

    def _step(self, z, w):
        pz = 0
        for c in reversed(self.sp.p.coeffs):
            pz = pz * z + c
        qw = 0
        for (j, k), c in self.sp.q.coeffs.items():
            qw = qw + c * z**j * w**k
        return pz, qw

    def green_pair(self, z: complex, w: complex, tol: float = 1e-6):
        """Compute (green_full, green_fiber) along one orbit.

        green_full is the 2-norm escape rate lim d^-n log_+ ||f^n||;
        green_fiber is the second-coordinate rate lim d^-n log_+ |w_n|.
        After the orbit crosses the bailout the iteration continues (in
        arbitrary-exponent arithmetic when magnitudes demand it) until the
        certified tail error drops below tol.  If the fiber coordinate never
        enters its certified multiplicative regime while the base escapes,
        the fiber value is an uncertified estimate clamped below green_full
        (`decided=False`).
        """
        sp, pr = self.sp, self.params
        d, bail, nmax = sp.d, pr.bailout, pr.n_max
        rb, rf, cw = pr.r_base, pr.r_fiber, self._c_w
        log_bail = math.log(bail)
        log_cw = math.log(cw)
        log_sq1 = math.log(self._s_q1)
        hard_cap = nmax + 120

        z = complex(z)
        w = complex(w)
        use_mp = False
        z_stayed = True
        w_stayed = True
        full_cross = None
        fiber_cross = None
        fiber_track = 0.0  # running lim-sup estimate of the fiber rate
        full_gv = None
        fiber_gv = None
        base_escaped = False
        n = 0
        laz = law = None
        while True:
            az = abs(z)
            aw = abs(w)
            laz = _safe_log(az) if az > 0 else -math.inf
            law = _safe_log(aw) if aw > 0 else -math.inf
            scale = float(mp.power(d, -n)) if n > 512 else d ** (-n)
            lnorm = 0.5 * _log_norm2(laz, law)
            if laz > math.log(rb):
                z_stayed = False
            if laz > log_bail:
                base_escaped = True
            if law > math.log(rf):
                w_stayed = False
            if full_cross is None and lnorm > log_bail:
                full_cross = n
            if full_gv is None and full_cross is not None:
                err = scale * self._corr_full
                if err <= tol or n - full_cross >= 80:
                    full_gv = GreenValue(scale * lnorm, err, True)
            if full_cross is not None and law > 0:
                fiber_track = max(fiber_track, scale * law)
            if fiber_cross is None and law > max(log_bail, log_cw + max(0.0, laz)):
                fiber_cross = n
            if fiber_gv is None and fiber_cross is not None:
                # per-step correction ratio <= S_q1 * max(1,|z|)^d / |w|
                log_ratio = log_sq1 + d * max(0.0, laz) - law
                err = scale * (2.0 * math.exp(min(0.0, log_ratio)) + 1e-15)
                if err <= tol or n - fiber_cross >= 60:
                    fiber_gv = GreenValue(scale * law, err, True)
            if full_gv is not None and fiber_gv is not None:
                break
            if n >= nmax and full_cross is None and fiber_cross is None:
                break
            if (full_gv is not None and fiber_cross is None
                    and n - full_cross >= 40):
                # base-dominated escape with the fiber coordinate subordinate:
                # no certified fiber rate is coming, stop and estimate
                break
            if n >= hard_cap:
                break
            if not use_mp and max(az, aw) > self._promote_at:
                z, w = mp.mpc(z), mp.mpc(w)
                use_mp = True
            z, w = self._step(z, w)
            n += 1

        scale = float(mp.power(d, -n)) if n > 512 else d ** (-n)
        if full_gv is None:
            if z_stayed and w_stayed:
                full_gv = GreenValue(0.0, 0.0, True)
            else:
                lnorm = 0.5 * _log_norm2(laz, law)
                full_gv = GreenValue(max(0.0, scale * lnorm),
                                     scale * log_bail, False)
        if fiber_gv is None:
            if z_stayed and w_stayed:
                fiber_gv = GreenValue(0.0, 0.0, True)
            elif base_escaped:
                # base escaped, fiber stayed subordinate: the orbit never
                # certifies a fiber rate above the base rate, so clamp
                est = min(fiber_track, full_gv.value)
                fiber_gv = GreenValue(est, max(est, scale * log_bail), False)
            else:
                est = max(0.0, scale * law) if law > 0 else 0.0
                fiber_gv = GreenValue(est, scale * log_bail, False)
        return full_gv, fiber_gv

    def green_full_detail(self, z: complex, w: complex, tol: float = 1e-6) -> GreenValue:
        return self.green_pair(z, w, tol)[0]

    def green_full(self, z: complex, w: complex) -> float:
        return self.green_full_detail(z, w).value

    def green_fiber_detail(self, z: complex, w: complex, tol: float = 1e-6) -> GreenValue:
        return self.green_pair(z, w, tol)[1]

    def green_fiber(self, z: complex, w: complex) -> float:
        return self.green_fiber_detail(z, w).value

    def green_relative_detail(self, z: complex, w: complex, tol: float = 1e-6) -> GreenValue:
        full = self.green_full_detail(z, w, tol)
        base = self.green_base_detail(z)
        diff = full.value - base.value
        err = full.error + base.error
        if diff <= err:
            diff = 0.0
        return GreenValue(diff, err, full.decided and base.decided)

    def green_relative(self, z: complex, w: complex) -> float:
        return self.green_relative_detail(z, w).value

    def w_escape_radius(self, z_abs: float) -> float:
        """|w| beyond this certifies |q_z(w)| >= 2|w| and a self-propagating
        escape; linear in |z|."""
        return max(self.params.r_fiber, self._c_w * max(1.0, z_abs))

    def base_membership(self, z: complex) -> Membership:
        return self._base1d.membership(z)

    def infinity_membership(self, u: complex) -> Membership:
        return self._inf1d.membership(u)

    def fiber_membership(self, z0: complex, w: complex) -> Membership:
        """Is w in the fiber-composition filled set over z0 (budgeted)?

        IN: the w-orbit stays within the (re-derived as the base bound grows)
        fiber escape radius for n_max steps.  OUT: certified escape.  The
        budget-exhausted ambiguous band yields UNDECIDED.
        """
        pr = self.params
        rb, rf, bail = pr.r_base, pr.r_fiber, pr.bailout
        z, w = complex(z0), complex(w)
        stayed = True
        b_bound = rb  # current base-orbit bound; doubled when exceeded
        rf_cur = rf
        base_cross = None
        for n in range(pr.n_max + 1):
            az, aw = abs(z), abs(w)
            if aw > self.w_escape_radius(az):
                return Membership.OUT
            while az > b_bound:
                b_bound *= 2.0
                s_fib = self.sp.q.abs_coeff_sum(b_bound + 1.0)
                rf_cur = max(2.0, s_fib + 2.0, 2.0 * s_fib)
            if aw > rf_cur:
                stayed = False
            if az > bail and base_cross is None:
                base_cross = n
            if base_cross is not None and n - base_cross > 120:
                # base long escaped, fiber subordinate; no flip possible in
                # float range, stop burning budget
                return Membership.UNDECIDED if not stayed else Membership.IN
            if n == pr.n_max:
                break
            if max(az, aw) > self._promote_at:
                return Membership.UNDECIDED if not stayed else Membership.IN
            z, w = self.sp(z, w)
        return Membership.IN if stayed else Membership.UNDECIDED

    # -- vectorized fast-mode grids (rendering / sampling checks) -----------

    def green_base_grid(self, zs: np.ndarray) -> np.ndarray:
        return self._base1d.green_grid(zs)

    def green_infinity_grid(self, us: np.ndarray) -> np.ndarray:
        return self._inf1d.green_grid(us)

    def green_fiber_grid(self, z0: complex, ws: np.ndarray) -> np.ndarray:
        """Fast fiber Green values along the base orbit of z0 (tail estimate
        at first certified crossing)."""
        sp, pr = self.sp, self.params
        d = sp.d
        cur = np.array(ws, dtype=complex).ravel()
        out = np.zeros(cur.shape, dtype=float)
        idx = np.arange(cur.size)
        z = complex(z0)
        for n in range(pr.n_max + 1):
            az = abs(z)
            thresh = max(pr.bailout, self.w_escape_radius(az))
            a = np.abs(cur)
            esc = a > thresh
            if esc.any():
                out[idx[esc]] = np.log(a[esc]) / d**n
            keep = ~esc
            cur, idx = cur[keep], idx[keep]
            if cur.size == 0 or n == pr.n_max or az > self._promote_at:
                break
            cur = sp.q(z, cur)
            bad = ~np.isfinite(cur)
            if bad.any():
                cur[bad] = 1e300
            z = sp.p(z)
        return out.reshape(np.shape(ws))

    def green_full_grid(self, z0: complex, ws: np.ndarray) -> np.ndarray:
        """Fast full Green values over the fiber {z0} x C (for slice views)."""
        sp, pr = self.sp, self.params
        d = sp.d
        cur = np.array(ws, dtype=complex).ravel()
        out = np.zeros(cur.shape, dtype=float)
        idx = np.arange(cur.size)
        z = complex(z0)
        for n in range(pr.n_max + 1):
            az = abs(z)
            a = np.hypot(np.abs(cur), az)
            esc = a > pr.bailout
            if esc.any():
                out[idx[esc]] = np.log(a[esc]) / d**n
            keep = ~esc
            cur, idx = cur[keep], idx[keep]
            if cur.size == 0 or n == pr.n_max or az > self._promote_at:
                break
            cur = sp.q(z, cur)
            bad = ~np.isfinite(cur)
            if bad.any():
                cur[bad] = 1e300
            z = sp.p(z)
        return out.reshape(np.shape(ws))


def _log_norm2(laz: float, law: float) -> float:
    """log(az^2 + aw^2) from the coordinate logs, overflow-free."""
    if laz == -math.inf and law == -math.inf:
        return -math.inf
    hi, lo = (laz, law) if laz >= law else (law, laz)
    if lo == -math.inf:
        return 2.0 * hi
    return 2.0 * hi + math.log1p(math.exp(2.0 * (lo - hi)))


def make_evaluator(sp: SkewProduct, n_max: int = 1000, bailout: float = 1e8) -> PotentialEvaluator:
    return PotentialEvaluator(sp, escape_params(sp, n_max, bailout))


# -- spec-shaped module-level operations ------------------------------------

def green_base(ev: PotentialEvaluator, z: complex) -> float:
    return ev.green_base(z)


def green_full(ev: PotentialEvaluator, z: complex, w: complex) -> float:
    return ev.green_full(z, w)


def green_fiber(ev: PotentialEvaluator, z: complex, w: complex) -> float:
    return ev.green_fiber(z, w)


def green_relative(ev: PotentialEvaluator, z: complex, w: complex) -> float:
    return ev.green_relative(z, w)


def in_K(ev: PotentialEvaluator, which: str, point: complex, z: complex | None = None) -> Membership:
    """Three-valued membership in K_p ("base"), K_z ("fiber", needs z), or
    K_Pi ("infinity").  Callers must propagate UNDECIDED, never coerce it."""
    if which == "base":
        return ev.base_membership(point)
    if which == "fiber":
        if z is None:
            raise ValueError("fiber membership requires the base point z")
        return ev.fiber_membership(z, point)
    if which == "infinity":
        return ev.infinity_membership(point)
    raise ValueError(f"unknown set selector {which!r}")
