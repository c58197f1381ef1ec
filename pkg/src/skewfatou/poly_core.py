"""Complex polynomials, skew-product representation, critical loci, and the
restriction to the line at infinity.

Conventions: one-variable polynomials are dense, ascending-degree coefficient
arrays; the fiber polynomial q(z, w) is a sparse map (j, k) -> coefficient of
z^j w^k.  All public types are immutable and all operations are pure.
"""
from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .errors import (
    DegreeMismatch,
    DegreeTooLow,
    MalformedSpec,
    NoConvergence,
    NotMonic,
)

_FINITE_LIMIT = 1e308


def _check_finite(x: complex, what: str = "value") -> complex:
    x = complex(x)
    if not (math.isfinite(x.real) and math.isfinite(x.imag)):
        raise OverflowError(f"non-finite {what}: {x!r}")
    return x


@dataclass(frozen=True)
class Poly1:
    """Dense one-variable polynomial; coeffs[k] multiplies z^k."""

    coeffs: tuple

    def __post_init__(self):
        cs = tuple(_check_finite(c, "coefficient") for c in self.coeffs)
        if not cs:
            raise ValueError("empty coefficient list")
        if len(cs) > 1 and cs[-1] == 0:
            raise ValueError("leading coefficient must be nonzero")
        object.__setattr__(self, "coeffs", cs)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, z):
        acc = 0j
        for c in reversed(self.coeffs):
            acc = acc * z + c
        if np.isscalar(acc) or isinstance(acc, complex):
            return _check_finite(acc, "polynomial value")
        return acc

    def eval_many(self, zs: np.ndarray) -> np.ndarray:
        acc = np.zeros_like(zs, dtype=complex)
        for c in reversed(self.coeffs):
            acc = acc * zs + c
        return acc

    def derivative(self) -> "Poly1":
        if self.degree == 0:
            return Poly1((0j,))
        return Poly1(tuple(k * c for k, c in enumerate(self.coeffs) if k > 0))

    def compose(self, inner: "Poly1") -> "Poly1":
        # Horner over polynomial coefficients: result = sum c_k * inner^k.
        acc = np.array([self.coeffs[-1]], dtype=complex)
        inner_c = np.array(inner.coeffs, dtype=complex)
        for c in reversed(self.coeffs[:-1]):
            acc = np.polymul(acc[::-1], inner_c[::-1])[::-1]
            acc[0] += c
        return Poly1(tuple(acc))

    def iterate(self, k: int) -> "Poly1":
        out = Poly1((0j, 1 + 0j))
        for _ in range(k):
            out = self.compose(out)
        return out

    def abs_coeff_sum_below_leading(self) -> float:
        return float(sum(abs(c) for c in self.coeffs[:-1]))

    def is_monic(self) -> bool:
        return self.coeffs[-1] == 1


@dataclass(frozen=True)
class FiberPoly:
    """Sparse polynomial q(z, w); coeffs maps (j, k) -> coefficient of z^j w^k.

    Invariants: total degree j + k <= d, the (0, d) coefficient is exactly 1,
    and no explicit zero entries are stored.
    """

    d: int
    coeffs: Mapping

    def __post_init__(self):
        if self.d < 1:
            raise DegreeTooLow(f"fiber degree {self.d} < 1")
        clean = {}
        for (j, k), c in dict(self.coeffs).items():
            j, k = int(j), int(k)
            c = _check_finite(c, f"q coefficient ({j},{k})")
            if j < 0 or k < 0:
                raise MalformedSpec(f"negative exponent in q monomial ({j},{k})")
            if j + k > self.d:
                raise DegreeMismatch(
                    f"q monomial z^{j} w^{k} has total degree {j + k} > d = {self.d}"
                )
            if c != 0:
                clean[(j, k)] = c
        if clean.get((0, self.d)) != 1:
            raise NotMonic("coefficient of w^d in q must be exactly 1")
        object.__setattr__(self, "coeffs", dict(sorted(clean.items())))

    def w_coeffs(self, z) -> np.ndarray:
        """Coefficients a_k(z) of q_z(w) = sum a_k(z) w^k, ascending in k."""
        scalar = np.isscalar(z) or isinstance(z, complex)
        z = np.asarray(z, dtype=complex)
        out = np.zeros((self.d + 1,) + z.shape, dtype=complex)
        for (j, k), c in self.coeffs.items():
            out[k] += c * z**j
        return out if not scalar else out.reshape(self.d + 1)

    def __call__(self, z, w):
        a = self.w_coeffs(z)
        acc = np.zeros_like(np.asarray(w, dtype=complex))
        for k in range(self.d, -1, -1):
            acc = acc * w + a[k]
        if np.isscalar(w) or isinstance(w, complex):
            return _check_finite(complex(acc), "fiber value")
        return acc

    def dw(self) -> dict:
        """Coefficient map of the vertical derivative dq/dw (w-degree d-1)."""
        return {(j, k - 1): k * c for (j, k), c in self.coeffs.items() if k >= 1}

    def fiber_poly1(self, z: complex) -> Poly1:
        """q_z as a dense polynomial in w for a fixed z."""
        return Poly1(tuple(self.w_coeffs(complex(z))))

    def abs_coeff_sum(self, radius: float, skip_leading: bool = True) -> float:
        """Bound sum_k sup_{|z| <= radius} |a_k(z)| by the coefficient triangle
        inequality, optionally omitting the monic w^d term."""
        total = 0.0
        for (j, k), c in self.coeffs.items():
            if skip_leading and (j, k) == (0, self.d):
                continue
            total += abs(c) * radius**j
        return total


@dataclass(frozen=True)
class SkewProduct:
    """f(z, w) = (p(z), q(z, w)) with p monic of degree d and q monic of
    degree d in w; these normal forms guarantee the extension to CP^2."""

    d: int
    p: Poly1
    q: FiberPoly

    def __post_init__(self):
        if self.d < 2:
            raise DegreeTooLow(f"d = {self.d} < 2")
        if self.p.degree != self.d:
            raise DegreeMismatch(f"deg p = {self.p.degree} != d = {self.d}")
        if not self.p.is_monic():
            raise NotMonic("p must be monic")
        if self.q.d != self.d:
            raise DegreeMismatch(f"fiber degree {self.q.d} != d = {self.d}")

    def __call__(self, z, w):
        return self.p(z), self.q(z, w)


def eval_f(sp: SkewProduct, z: complex, w: complex):
    """One application of the skew product, Horner-evaluated per coordinate."""
    return sp(z, w)


def vertical_derivative(sp: SkewProduct) -> dict:
    """Coefficient map (j, k) -> c of dq/dw; w-degree is d - 1 with leading
    term d * w^(d-1)."""
    return sp.q.dw()


def vertical_critical_w(sp: SkewProduct, z, tol: float = 1e-10) -> list:
    """Roots w of dq/dw(z, w) = 0 in the fiber over z."""
    dq = vertical_derivative(sp)
    coeffs = np.zeros(sp.d, dtype=complex)
    for (j, k), c in dq.items():
        coeffs[k] += c * complex(z) ** j
    # trim actual degree (leading coeff d is constant and nonzero)
    return roots(Poly1(tuple(coeffs)), tol)


def infinity_map(sp: SkewProduct) -> Poly1:
    """The induced map on the line at infinity: u -> q_d(1, u), where q_d is
    the top-degree homogeneous part of q."""
    coeffs = np.zeros(sp.d + 1, dtype=complex)
    for (j, k), c in sp.q.coeffs.items():
        if j + k == sp.d:
            coeffs[k] += c
    return Poly1(tuple(coeffs))


# ---------------------------------------------------------------------------
# Root finding: Durand-Kerner simultaneous iteration, scalar and batched.
# ---------------------------------------------------------------------------

_DK_MAX_ITER = 600
_DK_OFFSET = 0.437  # fixed fractional turn so the start avoids axis symmetry


def _dk_batch(coeffs: np.ndarray, max_iter: int = _DK_MAX_ITER) -> np.ndarray:
    """Durand-Kerner on a batch of monic-normalizable polynomials.

    coeffs: shape (B, n+1), ascending degree, leading column nonzero.
    Returns roots of shape (B, n).  Deterministic start on a circle of radius
    1 + max |coeff| (after monic normalization), equally spaced.
    """
    coeffs = np.asarray(coeffs, dtype=complex)
    lead = coeffs[:, -1:]
    c = coeffs / lead
    B, m = c.shape
    n = m - 1
    radius = 1.0 + np.max(np.abs(c), axis=1, keepdims=True)
    angles = 2j * np.pi * (np.arange(n) + _DK_OFFSET) / n
    r = radius * np.exp(angles)[None, :]

    def evaluate(x):
        acc = np.zeros_like(x)
        for k in range(n, -1, -1):
            acc = acc * x + c[:, k][:, None]
        return acc

    for it in range(max_iter):
        diff = r[:, :, None] - r[:, None, :]
        np.einsum("bii->bi", diff)[:] = 1.0
        denom = diff.prod(axis=2)
        bad = denom == 0
        if bad.any():
            denom = np.where(bad, 1e-300, denom)
        step = evaluate(r) / denom
        r = r - step
        if it % 8 == 7 and np.max(np.abs(step)) < 1e-14 * (1.0 + np.max(np.abs(r))):
            break
    return r


def roots(poly: Poly1, tol: float = 1e-10, max_iter: int = _DK_MAX_ITER) -> list:
    """All degree-many roots with multiplicity via Durand-Kerner iteration.

    Each returned root r satisfies |poly(r)| <= tol * (1+|r|)^deg * max|coeff|;
    otherwise NoConvergence is raised with the best residuals found.
    """
    if poly.degree < 1:
        raise ValueError("roots() requires degree >= 1")
    c = np.array(poly.coeffs, dtype=complex)
    r = _dk_batch(c[None, :], max_iter)[0]
    maxc = float(np.max(np.abs(c)))
    resid = np.abs(poly.eval_many(r))
    bound = tol * (1.0 + np.abs(r)) ** poly.degree * maxc
    if np.any(resid > bound):
        raise NoConvergence(
            f"root iteration did not reach tolerance {tol}",
            roots=[complex(x) for x in r],
            residuals=[float(x) for x in resid],
        )
    return sorted((complex(x) for x in r), key=lambda t: (t.real, t.imag))


def solve_p_equals(poly: Poly1, targets: np.ndarray) -> np.ndarray:
    """Batched solve of poly(z) = t for every t in targets.

    Returns array of shape (len(targets), degree), roots sorted per row by
    (re, im) so branch indices are reproducible.
    """
    targets = np.asarray(targets, dtype=complex).ravel()
    c = np.tile(np.array(poly.coeffs, dtype=complex), (targets.size, 1))
    c[:, 0] -= targets
    r = _dk_batch(c)
    order = np.lexsort((r.imag, r.real), axis=1)
    return np.take_along_axis(r, order, axis=1)


def solve_fiber_equals(
    sp: SkewProduct, zs: np.ndarray, targets: np.ndarray
) -> np.ndarray:
    """Batched solve of q(z_i, w) = t_i.  Shape (B, d), rows sorted by (re, im)."""
    zs = np.asarray(zs, dtype=complex).ravel()
    targets = np.asarray(targets, dtype=complex).ravel()
    a = sp.q.w_coeffs(zs).T.copy()  # (B, d+1)
    a[:, 0] -= targets
    r = _dk_batch(a)
    order = np.lexsort((r.imag, r.real), axis=1)
    return np.take_along_axis(r, order, axis=1)


def vertical_preimages(
    sp: SkewProduct, z: complex, c: complex, tol: float = 1e-10
) -> list:
    """The d solutions w of q(z, w) = c."""
    a = sp.q.w_coeffs(complex(z))
    a = a.copy()
    a[0] -= complex(c)
    return roots(Poly1(tuple(a)), tol)


# ---------------------------------------------------------------------------
# Map-spec documents.
# ---------------------------------------------------------------------------


def _pair_to_complex(v, where: str) -> complex:
    if (
        not isinstance(v, (list, tuple))
        or len(v) != 2
        or not all(isinstance(x, (int, float)) for x in v)
    ):
        raise MalformedSpec(f"{where}: expected [re, im] pair, got {v!r}")
    return complex(v[0], v[1])


def parse_map(text: str) -> SkewProduct:
    """Parse a map-spec document (UTF-8 JSON key-value text).

    Keys: `d` (int), `p` (list of [re, im], length d+1, ascending degree),
    `q` (list of {j, k, re, im} records).  Unlisted q monomials are zero and
    the (0, d) entry must be [1, 0].  Unknown keys (e.g. `meta`) are ignored.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedSpec(f"invalid map-spec syntax: {exc}") from exc
    if not isinstance(doc, dict):
        raise MalformedSpec("map-spec must be a key-value object")
    try:
        d = doc["d"]
        p_raw = doc["p"]
        q_raw = doc["q"]
    except KeyError as exc:
        raise MalformedSpec(f"missing key {exc}") from exc
    if not isinstance(d, int):
        raise MalformedSpec(f"d must be an integer, got {d!r}")
    if d < 2:
        raise DegreeTooLow(f"d = {d} < 2")
    if not isinstance(p_raw, list) or len(p_raw) != d + 1:
        raise DegreeMismatch(
            f"p must list exactly d+1 = {d + 1} coefficients, got {len(p_raw) if isinstance(p_raw, list) else p_raw!r}"
        )
    p_coeffs = [_pair_to_complex(v, f"p[{i}]") for i, v in enumerate(p_raw)]
    if p_coeffs[-1] != 1:
        raise NotMonic("leading coefficient of p must be exactly [1, 0]")
    if not isinstance(q_raw, list):
        raise MalformedSpec("q must be a list of {j, k, re, im} records")
    q_coeffs = {}
    for rec in q_raw:
        if not isinstance(rec, dict) or "j" not in rec or "k" not in rec:
            raise MalformedSpec(f"bad q record: {rec!r}")
        j, k = rec["j"], rec["k"]
        if not isinstance(j, int) or not isinstance(k, int):
            raise MalformedSpec(f"q record exponents must be integers: {rec!r}")
        c = complex(rec.get("re", 0.0), rec.get("im", 0.0))
        if (j, k) in q_coeffs:
            raise MalformedSpec(f"duplicate q monomial ({j},{k})")
        q_coeffs[(j, k)] = c
    if q_coeffs.get((0, d)) != 1:
        raise NotMonic("the (0, d) entry of q must be [1, 0]")
    try:
        q = FiberPoly(d, q_coeffs)
        return SkewProduct(d, Poly1(tuple(p_coeffs)), q)
    except (DegreeMismatch, NotMonic, DegreeTooLow):
        raise
    except ValueError as exc:
        raise MalformedSpec(str(exc)) from exc


def map_to_document(sp: SkewProduct, meta: dict | None = None) -> str:
    """Serialize a SkewProduct back to map-spec text (inverse of parse_map)."""
    doc = {
        "d": sp.d,
        "p": [[c.real, c.imag] for c in sp.p.coeffs],
        "q": [
            {"j": j, "k": k, "re": c.real, "im": c.imag}
            for (j, k), c in sorted(sp.q.coeffs.items())
        ],
    }
    if meta:
        doc["meta"] = meta
    return json.dumps(doc, indent=2, sort_keys=True)
