"""Barrier functions, their derivatives, and the weighted aggregate.

Every evaluator returns a :class:`BarrierEval`.  Evaluators of the three
concrete families also return a *root* ``J`` with ``J^T J = hessian``, built
constraint by constraint.  Under an affine change of variables ``y = M x + t``
the root transforms as ``J -> J M^{-1}``; the walk uses this to draw proposals
that commute with affine maps.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .body import BarrierWeights, BodySpec
from .errors import InfeasiblePointError, InputError, StepTooLargeError
from .linalg import HessianFactor


@dataclass(eq=False)
class BarrierEval:
    """Value, gradient and Hessian of a barrier at one point.

    ``root`` (optional, k x n) satisfies ``root.T @ root == hessian``.
    """

    value: float
    gradient: np.ndarray
    hessian: np.ndarray
    root: np.ndarray | None = None
    x: np.ndarray | None = None

    @cached_property
    def factor(self) -> HessianFactor:
        return HessianFactor(self.hessian, x=self.x)

    @property
    def vterm(self) -> float:
        """``0.5 * ln det hessian``."""
        return self.factor.half_logdet

    def quad(self, v) -> float:
        """``v^T hessian v``."""
        return float(v @ self.hessian @ v)

    def scaled(self, w: float) -> "BarrierEval":
        root = None if self.root is None else np.sqrt(w) * self.root
        return BarrierEval(w * self.value, w * self.gradient, w * self.hessian, root, self.x)


def log_barrier_eval(A, b, x) -> BarrierEval:
    """``-sum ln(b_i - a_i^T x)`` with Hessian ``A^T D^2 A``, ``D = diag(1/slack)``."""
    A = np.asarray(A, dtype=float)
    x = np.asarray(x, dtype=float)
    slack = np.asarray(b, dtype=float) - A @ x
    if np.any(slack <= 0):
        raise InfeasiblePointError(f"linear slack {slack.min():.3g} <= 0")
    d = 1.0 / slack
    J = d[:, None] * A
    return BarrierEval(float(-np.sum(np.log(slack))), A.T @ d, J.T @ J, J, x)


def logdet_barrier_eval(mats, B, x) -> BarrierEval:
    """``-ln det S(x)`` for ``S(x) = B - sum_i x_i A_i``.

    With ``W_i = L^{-1} A_i L^{-T}`` (``S = L L^T``): gradient ``Tr W_i``,
    Hessian ``Tr(W_i W_j)``; the root stacks ``vec(W_i)`` as columns.
    """
    x = np.asarray(x, dtype=float)
    stack = mats if isinstance(mats, np.ndarray) else np.stack(mats)
    S = np.asarray(B, dtype=float) - np.tensordot(x, stack, axes=1)
    try:
        L = np.linalg.cholesky(S)
    except np.linalg.LinAlgError:
        raise InfeasiblePointError("psd slack is not positive definite") from None
    diag = np.diag(L)
    if not np.all(diag > 0):
        raise InfeasiblePointError("psd slack is singular")
    Linv = np.linalg.inv(L)
    W = Linv @ stack @ Linv.T  # (n, k, k)
    n = stack.shape[0]
    J = W.reshape(n, -1).T
    grad = np.trace(W, axis1=1, axis2=2)
    return BarrierEval(float(-2.0 * np.sum(np.log(diag))), grad, J.T @ J, J, x)


def ellipsoid_barrier_eval(ellipsoids, x) -> BarrierEval:
    """``-sum_j ln(1 - ||u_j||^2)`` with ``u_j = E_j^{-1}(x - c_j)``."""
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    value = 0.0
    grad = np.zeros(n)
    roots = []
    for e in ellipsoids:
        u = e.inverse @ (x - e.center)
        uu = float(u @ u)
        q = 1.0 - uu
        if q <= 0:
            raise InfeasiblePointError(f"outside ellipsoid (||u||^2 = {uu:.6g})")
        value -= np.log(q)
        grad += e.inverse.T @ (2.0 * u / q)
        # Hessian in u is a I + b u u^T; its symmetric root is sqrt(a) I + g u u^T
        a = 2.0 / q
        bq = 4.0 / (q * q)
        sa = np.sqrt(a)
        g = (np.sqrt(a + bq * uu) - sa) / uu if uu > 0 else 0.0
        R = sa * np.eye(n) + g * np.outer(u, u)
        roots.append(R @ e.inverse)
    J = np.vstack(roots) if roots else np.zeros((0, n))
    return BarrierEval(float(value), grad, J.T @ J, J, x)


def part_evals(spec: BodySpec, x) -> dict[str, BarrierEval]:
    """Unweighted evaluations of each present part, keyed by part name."""
    out = {}
    if spec.has_linear:
        out["linear"] = log_barrier_eval(spec.A, spec.b, x)
    if spec.has_psd:
        out["psd"] = logdet_barrier_eval(spec._psd_stack, spec.psd_B, x)
    if spec.has_ellipsoids:
        out["ellipsoid"] = ellipsoid_barrier_eval(spec.ellipsoids, x)
    return out


_PART_WEIGHT = {"linear": "linear", "psd": "hyperbolic", "ellipsoid": "hyperbolic"}


def combine(evals, weights, x) -> BarrierEval:
    """Weighted sum of evaluations; roots are stacked with ``sqrt(w)`` scaling."""
    evals, weights = list(evals), list(weights)
    if len(evals) == 1 and weights[0] == 1:
        ev = evals[0]
        return BarrierEval(ev.value, ev.gradient, ev.hessian, ev.root, x)
    n = len(x)
    value, grad, hess, roots = 0.0, np.zeros(n), np.zeros((n, n)), []
    has_root = True
    for ev, w in zip(evals, weights):
        if w == 0:
            continue
        value += w * ev.value
        grad = grad + w * ev.gradient
        hess = hess + w * ev.hessian
        if ev.root is None:
            has_root = False
        else:
            roots.append(np.sqrt(w) * ev.root)
    root = np.vstack(roots) if has_root and roots else None
    return BarrierEval(float(value), grad, hess, root, x)


def aggregate_barrier_eval(spec: BodySpec, weights: BarrierWeights | None, x) -> BarrierEval:
    """``w_l F_l + w_h F_h`` over the parts present in ``spec``.

    Raises:
        InfeasiblePointError: if ``x`` is not strictly inside.
    """
    w = spec.weights if weights is None else weights
    x = spec._check_point(x)
    parts = part_evals(spec, x)
    return combine(parts.values(), [getattr(w, _PART_WEIGHT[k]) for k in parts], x)


def complexity_parameter(m: int, n: int, nu_h: float = 0.0, nu_s: float = 0.0) -> float:
    """``m + n nu_h + (n nu_s)^2``."""
    return float(m + n * nu_h + (n * nu_s) ** 2)


def body_complexity(spec: BodySpec, nu_s: float = 0.0) -> float:
    return complexity_parameter(spec.m, spec.n, spec.nu_h, nu_s)


def self_concordance_bound(m: int, n: int, nu_h: float = 0.0, nu_s: float = 0.0) -> float:
    """Upper bound ``m + n nu_h + n^2 nu_s`` on the aggregate's self-concordance parameter."""
    return float(m + n * nu_h + n * n * nu_s)


class BarrierOracle:
    """Membership plus aggregate barrier evaluation for one body.

    This is the object walks run against; anything exposing ``n``,
    ``contains``, ``evaluate`` and ``ray_interval`` can stand in for it.
    """

    def __init__(self, spec: BodySpec, weights: BarrierWeights | None = None, part: str = "aggregate"):
        if part not in ("aggregate", "linear", "psd", "ellipsoid"):
            raise InputError(f"unknown barrier part {part!r}")
        present = {"linear": spec.has_linear, "psd": spec.has_psd, "ellipsoid": spec.has_ellipsoids}
        if part != "aggregate" and not present[part]:
            raise InputError(f"body has no {part} part")
        if weights is not None:
            spec.check_weights(weights)
        self.spec = spec
        self.weights = spec.weights if weights is None else weights
        self.part = part

    @property
    def n(self) -> int:
        return self.spec.n

    def contains(self, x) -> bool:
        return self.spec.contains(x)

    def ray_interval(self, x, d):
        return self.spec.ray_interval(x, d)

    def evaluate(self, x) -> BarrierEval:
        if self.part == "aggregate":
            return aggregate_barrier_eval(self.spec, self.weights, x)
        x = self.spec._check_point(x)
        if self.part == "linear":
            return log_barrier_eval(self.spec.A, self.spec.b, x)
        if self.part == "psd":
            return logdet_barrier_eval(self.spec._psd_stack, self.spec.psd_B, x)
        return ellipsoid_barrier_eval(self.spec.ellipsoids, x)

    @property
    def self_concordance_parameter(self) -> float:
        s = self.spec
        if self.part == "linear":
            return float(s.m)
        if self.part == "psd":
            return float(s.psd_size)
        if self.part == "ellipsoid":
            return 2.0 * len(s.ellipsoids)
        w = self.weights
        return float(w.linear * s.m + w.hyperbolic * s.nu_h)

    @property
    def complexity_parameter(self) -> float:
        return body_complexity(self.spec)


def as_oracle(body, weights=None):
    if isinstance(body, BodySpec):
        return BarrierOracle(body, weights)
    return body


@dataclass
class SelfConcordanceReport:
    d1: float
    d2: float
    d3: float
    nu: float
    d3_ratio: float
    lipschitz_ratio: float

    def ok(self, tol: float = 0.01) -> bool:
        return self.d3_ratio <= 1 + tol and self.lipschitz_ratio <= 1 + tol


def self_concordance_check(body, x, h, fd_step: float = 1e-4, part: str = "aggregate",
                           weights=None) -> SelfConcordanceReport:
    """Measure the two self-concordance inequalities at ``x`` along ``h``.

    ``D^3 F[h,h,h]`` is a central difference of ``h^T D^2F(x + t h) h`` with
    ``t = fd_step / ||h||_x``.  ``body`` is a :class:`BodySpec` (``part`` picks
    a single unweighted barrier) or any oracle with ``evaluate``, ``contains``
    and ``self_concordance_parameter``.

    Raises:
        StepTooLargeError: if ``x +- t h`` leaves the interior.
    """
    oracle = BarrierOracle(body, weights, part) if isinstance(body, BodySpec) else body
    x = np.asarray(x, dtype=float)
    h = np.asarray(h, dtype=float)
    if not np.any(h):
        raise InputError("direction h must be nonzero")
    ev = oracle.evaluate(x)
    d2 = ev.quad(h)
    t = fd_step / np.sqrt(d2)
    xp, xm = x + t * h, x - t * h
    if not (oracle.contains(xp) and oracle.contains(xm)):
        raise StepTooLargeError(f"fd_step {fd_step} leaves the body at x")
    d3 = (oracle.evaluate(xp).quad(h) - oracle.evaluate(xm).quad(h)) / (2 * t)
    d1 = float(ev.gradient @ h)
    nu = float(oracle.self_concordance_parameter)
    return SelfConcordanceReport(
        d1=d1,
        d2=d2,
        d3=float(d3),
        nu=nu,
        d3_ratio=float(abs(d3) / (2 * d2 ** 1.5)),
        lipschitz_ratio=float(d1 * d1 / (nu * d2)),
    )
