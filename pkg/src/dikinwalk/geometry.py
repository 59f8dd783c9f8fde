"""Local norms, chords, the Hilbert metric, the symmetric gauge, and path lengths."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .barriers import BarrierOracle, as_oracle
from .body import BodySpec
from .errors import InfeasiblePointError, InputError, UnboundedBodyError
from .linalg import HessianFactor, local_norm

__all__ = [
    "Chord",
    "HessianFactor",
    "GaugeSandwich",
    "chord_endpoints",
    "cross_ratio",
    "dikin_ellipsoid_points",
    "gauge_sandwich_check",
    "hilbert_distance",
    "local_norm",
    "ray_interval",
    "riemannian_distance_approx",
    "symmetric_gauge",
]

HORIZON = 1e12
CHORD_TOL = 1e-12


def _bisect_limit(contains, x, u, sign):
    """Largest ``t`` with ``x + sign t u`` inside, by doubling then bisection."""
    lo, hi = 0.0, 1.0
    while contains(x + sign * hi * u):
        lo, hi = hi, 2 * hi
        if hi > HORIZON:
            return np.inf
    while hi - lo > CHORD_TOL * max(1.0, lo):
        mid = 0.5 * (lo + hi)
        if contains(x + sign * mid * u):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def ray_interval(body, x, d) -> tuple[float, float]:
    """``(t_lo, t_hi)`` bounding the open chord ``x + t d`` inside ``body``.

    Uses the body's exact ``ray_interval`` when available, otherwise bisection
    on ``contains``.  Ends beyond the horizon are reported as infinite.
    """
    x = np.asarray(x, dtype=float)
    d = np.asarray(d, dtype=float)
    if hasattr(body, "ray_interval"):
        lo, hi = body.ray_interval(x, d)
    else:
        hi = _bisect_limit(body.contains, x, d, 1.0)
        lo = -_bisect_limit(body.contains, x, d, -1.0)
    if hi > HORIZON:
        hi = np.inf
    if lo < -HORIZON:
        lo = -np.inf
    return lo, hi


@dataclass(eq=False)
class Chord:
    """Chord of a body through an interior base point.

    ``p = x + t_lo * direction`` and ``q = x + t_hi * direction``.
    """

    p: np.ndarray
    q: np.ndarray
    x: np.ndarray
    direction: np.ndarray
    t_lo: float
    t_hi: float

    @property
    def length(self) -> float:
        return self.t_hi - self.t_lo


def chord_endpoints(body, x, direction) -> Chord:
    """Both boundary points of the line through ``x`` along ``direction``.

    Raises:
        InputError: zero direction.
        UnboundedBodyError: the line does not leave the body within the horizon.
    """
    x = np.asarray(x, dtype=float)
    d = np.asarray(direction, dtype=float)
    norm = np.linalg.norm(d)
    if norm == 0:
        raise InputError("chord direction must be nonzero")
    u = d / norm
    lo, hi = ray_interval(body, x, u)
    if not (np.isfinite(lo) and np.isfinite(hi)):
        raise UnboundedBodyError("chord is unbounded")
    return Chord(x + lo * u, x + hi * u, x, u, lo, hi)


def hilbert_distance(body, x, y) -> float:
    """Hilbert (projective) distance ``ln(1 + |x-y||p-q| / (|p-x||q-y|))``.

    ``p, x, y, q`` lie in that order on the chord through ``x`` and ``y``.  An
    unbounded end is handled by the limiting value of the formula.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    L = float(np.linalg.norm(y - x))
    if L == 0:
        return 0.0
    u = (y - x) / L
    lo, hi = ray_interval(body, x, u)
    px = -lo
    qy = hi - L
    if np.isinf(px) and np.isinf(qy):
        return 0.0
    if np.isinf(px):
        ratio = L / qy
    elif np.isinf(qy):
        ratio = L / px
    else:
        ratio = L * (hi - lo) / (px * qy)
    return float(np.log1p(ratio))


def cross_ratio(a, b, c, d) -> float:
    """Cross ratio ``(a - c)(b - d) / ((a - d)(b - c))`` of four collinear points.

    Points may be vectors or scalars; ``np.inf`` (or ``None``) denotes the
    point at infinity of the line.
    """
    pts = [None if (p is None or np.all(np.isinf(p))) else np.atleast_1d(np.asarray(p, float))
           for p in (a, b, c, d)]
    finite = [p for p in pts if p is not None]
    if len(finite) < 3:
        raise InputError("at most one point may be at infinity")
    base = finite[0]
    far = max(finite, key=lambda p: np.linalg.norm(p - base))
    u = (far - base) / np.linalg.norm(far - base)
    s = [np.inf if p is None else float((p - base) @ u) for p in pts]
    sa, sb, sc, sd = s
    if np.isinf(sa):
        return (sb - sd) / (sb - sc)
    if np.isinf(sb):
        return (sa - sc) / (sa - sd)
    if np.isinf(sc):
        return (sb - sd) / (sa - sd)
    if np.isinf(sd):
        return (sa - sc) / (sb - sc)
    return (sa - sc) * (sb - sd) / ((sa - sd) * (sb - sc))


def symmetric_gauge(body, x, v) -> float:
    """Minkowski gauge of the body symmetrized about ``x``: ``1 / sup{a : x +- a v inside}``.

    Returns 0 when ``x +- a v`` stays inside for every ``a``.
    """
    v = np.asarray(v, dtype=float)
    if not np.any(v):
        return 0.0
    lo, hi = ray_interval(body, x, v)
    alpha = min(hi, -lo)
    if np.isinf(alpha):
        return 0.0
    return float(1.0 / alpha)


def riemannian_distance_approx(body, x, y, segments: int = 64, weights=None) -> float:
    """Length of the straight segment ``[x, y]`` in the barrier's Hessian metric.

    Trapezoidal rule over ``segments`` equal pieces.  This is an upper bound on
    the geodesic distance.

    Raises:
        InfeasiblePointError: if a node of the segment is outside the body.
    """
    if segments < 1:
        raise InputError("segments must be >= 1")
    oracle = as_oracle(body, weights)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    v = y - x
    if not np.any(v):
        return 0.0
    norms = np.empty(segments + 1)
    for k in range(segments + 1):
        z = x + (k / segments) * v
        if not oracle.contains(z):
            raise InfeasiblePointError("segment leaves the body")
        norms[k] = local_norm(oracle.evaluate(z).hessian, v)
    return float((norms.sum() - 0.5 * (norms[0] + norms[-1])) / segments)


def dikin_ellipsoid_points(ev, x, count: int, rng, radius: float = 1.0) -> np.ndarray:
    """``count`` uniformly-directed points on the boundary of the Dikin ellipsoid at ``x``."""
    n = len(x)
    g = rng.standard_normal((count, n))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    steps = np.array([ev.factor.inv_sqrt_apply(row) for row in g])
    return np.asarray(x) + radius * steps


@dataclass
class GaugeSandwich:
    """Measured ``gauge <= norm <= factor * gauge`` for one unweighted part barrier."""

    part: str
    gauge: float
    norm: float
    factor: float

    def ok(self, rtol: float = 1e-9) -> bool:
        slack = rtol * max(self.norm, self.gauge, 1e-300)
        return self.gauge <= self.norm + slack and self.norm <= self.factor * self.gauge + slack


def _part_body(spec: BodySpec, part: str) -> BodySpec:
    if part == "linear":
        return BodySpec(spec.n, A=spec.A, b=spec.b)
    if part == "psd":
        return BodySpec(spec.n, psd_mats=spec.psd_mats, psd_B=spec.psd_B)
    return BodySpec(spec.n, ellipsoids=spec.ellipsoids)


def gauge_sandwich_check(spec: BodySpec, x, v) -> list[GaugeSandwich]:
    """Compare the symmetric gauge with each part barrier's local norm.

    Factors: ``sqrt(m)`` for the linear part and ``sqrt(nu_h)`` for each
    hyperbolic part (psd size, or 2 per ellipsoid); each gauge is taken in the
    body cut out by that part alone.
    """
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    out = []
    factors = {
        "linear": np.sqrt(spec.m),
        "psd": np.sqrt(spec.psd_size),
        "ellipsoid": np.sqrt(2.0 * len(spec.ellipsoids)),
    }
    present = {"linear": spec.has_linear, "psd": spec.has_psd, "ellipsoid": spec.has_ellipsoids}
    for part, here in present.items():
        if not here:
            continue
        sub = _part_body(spec, part)
        ev = BarrierOracle(sub, part=part).evaluate(x)
        out.append(GaugeSandwich(part, symmetric_gauge(sub, x, v), local_norm(ev.hessian, v),
                                 float(factors[part])))
    return out
