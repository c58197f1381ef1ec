"""Built-in example maps with expected-verdict metadata.

Six entries: two quadratic skew products with disconnected base behavior,
the parametric a-family (z^2, w^2 + a z), the dendrite product map, a
parametric high-degree example, and the plain product of squarings.
Parametric entries ship as templates; `build(name, **params)` substitutes
concrete parameter values.
"""
from __future__ import annotations

import json
import math

from .errors import UnknownExample
from .poly_core import FiberPoly, Poly1, SkewProduct

NAMES = (
    "jonsson_9_6",
    "jonsson_9_7",
    "demarco_hruska",
    "product_dendrite",
    "sumi",
    "product_squares",
)


def _quad(p_c0: complex, q_extra: dict) -> SkewProduct:
    q = {(0, 2): 1}
    q.update(q_extra)
    return SkewProduct(2, Poly1((p_c0, 0, 1)), FiberPoly(2, q))


def build_demarco_hruska(a: complex = 0) -> SkewProduct:
    """(z^2, w^2 + a z): connected exactly when a is in the Mandelbrot set."""
    q = {(0, 2): 1}
    if a != 0:
        q[(1, 0)] = complex(a)
    return SkewProduct(2, Poly1((0, 0, 1)), FiberPoly(2, q))


def build_sumi(R: float = 10.0, eps: float = 0.1, n: int = 2) -> SkewProduct:
    """Degree-2^n example: base is the n-fold iterate of z^2 - R and the
    fiber map is w^{2^n} + (z + sqrt(R)) / (2 sqrt(R)) * t(w), with
    t = h^n - w^{2^n} for h(w) = (w - eps)^2 - 1 + eps.  Over the base fixed
    region near -sqrt(R) the fiber map is ~ w^{2^n}; near +sqrt(R) it is the
    n-fold iterate of h."""
    if n < 1:
        raise ValueError("n must be >= 1")
    d = 2**n
    base = Poly1((-R, 0, 1)).iterate(n)
    h = Poly1((eps * eps - 1 + eps, -2 * eps, 1))
    hn = h.iterate(n)
    t = list(hn.coeffs)
    t[d] -= 1  # subtract w^{2^n}
    s = math.sqrt(R)
    q = {(0, d): 1}
    for k, c in enumerate(t[:d]):
        if c == 0:
            continue
        q[(0, k)] = q.get((0, k), 0) + c / 2.0
        q[(1, k)] = q.get((1, k), 0) + c / (2.0 * s)
    return SkewProduct(d, base, FiberPoly(d, q))


_FIXED = {
    "jonsson_9_6": lambda: _quad(-6, {(0, 0): 3, (1, 0): -1}),
    "jonsson_9_7": lambda: _quad(-2, {(0, 0): 4, (1, 0): -2}),
    "product_dendrite": lambda: _quad(-6, {(0, 0): 1j}),
    "product_squares": lambda: _quad(0, {}),
}

_META = {
    "jonsson_9_6": {
        "description": "(z^2-6, w^2+3-z)",
        "expected": {
            "connected": False,
            "axiom_a": "plausibly-axiom-a",
            "disconnected_reasons": ["base-critical-escape",
                                     "fiber-critical-escape"],
        },
        "anchors": ["gallery-axiom-a-disconnected"],
    },
    "jonsson_9_7": {
        "description": "(z^2-2, w^2+2(2-z))",
        "expected": {
            "connected": False,
            "J2_connected": True,
            "axiom_a": "fails",
            "failing_condition": "D_p<->J_p",
        },
        "anchors": ["gallery-J2-connected-but-not-skew-connected"],
    },
    "demarco_hruska": {
        "description": "(z^2, w^2+a*z), parametric in a",
        "expected": {
            "connected": "iff a in the Mandelbrot set",
        },
        "anchors": ["gallery-parameter-family"],
        "params": {"a": 0.0},
    },
    "product_dendrite": {
        "description": "(z^2-6, w^2+i)",
        "expected": {
            "connected": False,
            "fibers_connected": True,
            "axiom_a": "fails",
            "failing_condition": "D_Jp<->J_2",
        },
        "anchors": ["gallery-dendrite-counterexample"],
    },
    "sumi": {
        "description": "degree-2^n example, parametric in (R, eps, n)",
        "expected": {
            "note": "behavior depends on (R, eps, n); not asserted by tests",
        },
        "anchors": ["gallery-high-degree-example"],
        "params": {"R": 10.0, "eps": 0.1, "n": 2},
    },
    "product_squares": {
        "description": "(z^2, w^2)",
        "expected": {"connected": True, "axiom_a": "plausibly-axiom-a"},
        "anchors": ["gallery-trivial-product"],
    },
}


def names() -> tuple:
    return NAMES


def metadata(name: str) -> dict:
    if name not in NAMES:
        raise UnknownExample(f"no example named {name!r}; known: {', '.join(NAMES)}")
    return dict(_META[name])


def build(name: str, **params) -> SkewProduct:
    """Materialize an example, substituting parameters where applicable."""
    if name in _FIXED:
        if params:
            raise ValueError(f"{name} takes no parameters")
        return _FIXED[name]()
    if name == "demarco_hruska":
        return build_demarco_hruska(params.get("a", 0))
    if name == "sumi":
        return build_sumi(params.get("R", 10.0), params.get("eps", 0.1),
                          int(params.get("n", 2)))
    raise UnknownExample(f"no example named {name!r}; known: {', '.join(NAMES)}")


def document(name: str, **params) -> str:
    """Map-spec text for an example, with metadata attached.

    Parametric examples serialize at their default (or given) parameters and
    record the template in the metadata; the a-family additionally records
    the multiplier structure so sweep tooling can re-substitute."""
    sp = build(name, **params)
    meta = metadata(name)
    doc = {
        "d": sp.d,
        "p": [[c.real, c.imag] for c in sp.p.coeffs],
        "q": [{"j": j, "k": k, "re": c.real, "im": c.imag}
              for (j, k), c in sorted(sp.q.coeffs.items())],
        "meta": dict(meta, name=name),
    }
    if name == "demarco_hruska":
        # the (1,0) coefficient is a itself: mark the parameter slot
        a = complex(params.get("a", 0))
        recs = [r for r in doc["q"] if not (r["j"] == 1 and r["k"] == 0)]
        recs.append({"j": 1, "k": 0, "re": a.real, "im": a.imag,
                     "a_re": 1.0, "a_im": 0.0})
        doc["q"] = sorted(recs, key=lambda r: (r["j"], r["k"]))
    return json.dumps(doc, indent=2, sort_keys=True)


def family_document(name: str = "demarco_hruska",
                    center: complex = -0.5, width: float = 4.0,
                    pixels: tuple = (256, 192)) -> str:
    """A FamilySpec document: template with an `a` slot plus a parameter
    grid."""
    if name != "demarco_hruska":
        raise UnknownExample("only the a-family ships as a built-in family")
    template = json.loads(document(name))
    template.pop("meta", None)
    doc = {
        "template": template,
        "grid": {
            "center": [center.real, center.imag],
            "width": width,
            "pixels": [int(pixels[0]), int(pixels[1])],
        },
    }
    return json.dumps(doc, indent=2, sort_keys=True)
