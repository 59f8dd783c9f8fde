"""Las Vegas linear optimization by a Dikin walk on a projectively transformed body.

Given a body ``K`` containing the origin and an objective ``c`` normalized so
the target level is ``c^T x = 1``, let ``Q = K n {c^T x <= 1}`` and
``T(x) = x / (1 - c^T x)``.  The walk runs on ``K_hat = T(Q)``, whose barrier
is assembled from the barrier of ``K`` through ``x(y) = y / (1 + c^T y)``.  The
projective map stretches the region near ``c^T x = 1`` toward infinity, so
the uniform-seeking walk drifts there.  The run stops the first time
``c^T x >= 1 - eps``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .barriers import (
    BarrierEval,
    body_complexity,
    combine,
    ellipsoid_barrier_eval,
    log_barrier_eval,
    logdet_barrier_eval,
)
from .body import BarrierWeights, BodySpec
from .chain import MAX_RADIUS, ChainState, metropolis_step
from .errors import InfeasiblePointError, InputError
from .rng import make_rng

DEFAULT_CAP = 1e6
SUCCESS = "success"
EXHAUSTED = "budget_exhausted"


def projective_map(c, x) -> np.ndarray:
    """``T(x) = x / (1 - c^T x)``; requires ``c^T x < 1``."""
    x = np.asarray(x, dtype=float)
    t = 1.0 - float(np.dot(c, x))
    if t <= 0:
        raise InputError(f"projective map undefined: c^T x = {1 - t} >= 1")
    return x / t


def projective_inverse(c, y) -> np.ndarray:
    """``T^{-1}(y) = y / (1 + c^T y)``; requires ``1 + c^T y > 0``."""
    y = np.asarray(y, dtype=float)
    t = 1.0 + float(np.dot(c, y))
    if t <= 0:
        raise InputError(f"inverse projective map undefined: 1 + c^T y = {t} <= 0")
    return y / t


def kappa_s(nu_s: float) -> float:
    """Multiplier of the transformed generic barrier:
    ``(8 / (3 sqrt 3) + (7/3)^{3/2} / (2 sqrt(nu_s)))^2``."""
    return (8.0 / (3.0 * math.sqrt(3.0)) + (7.0 / 3.0) ** 1.5 / (2.0 * math.sqrt(nu_s))) ** 2


def generic_parameter_bound(nu: float) -> float:
    """Reported bound ``(3.08 sqrt(nu) + 3.57)^2`` on the transformed generic parameter."""
    return (3.08 * math.sqrt(nu) + 3.57) ** 2


def pull_back(ev: BarrierEval, x, y, c, log_coef: float) -> BarrierEval:
    """Derivatives in ``y`` of ``F(x(y)) + log_coef * ln(1 + c^T y)``.

    ``ev`` holds ``F`` and its derivatives at ``x = y / (1 + c^T y)``.  With
    ``t = 1 + c^T y`` and ``g = DF(x)``::

        d x / d y         = (I - x c^T) / t
        sum_k g_k D^2 x_k = (2 (g.x) c c^T - g c^T - c g^T) / t^2
    """
    t = 1.0 + float(c @ y)
    J = (np.eye(len(y)) - np.outer(x, c)) / t
    g = ev.gradient
    gx = float(g @ x)
    grad = J.T @ g + log_coef * c / t
    curv = (2.0 * gx * np.outer(c, c) - np.outer(g, c) - np.outer(c, g)) / t ** 2
    hess = J.T @ ev.hessian @ J + curv - log_coef * np.outer(c, c) / t ** 2
    hess = 0.5 * (hess + hess.T)
    return BarrierEval(ev.value + log_coef * math.log(t), grad, hess, None, np.asarray(y))


@dataclass(eq=False)
class GenericPart:
    """A user-supplied self-concordant barrier ``x -> BarrierEval`` with parameter ``nu``.

    ``contains`` decides membership in its domain.
    """

    evaluate: object
    contains: object
    nu: float


class HatBody:
    """The transformed body ``K_hat = T(K n {c^T x < 1})`` with its barrier.

    Parts and their transformed barriers (``t = 1 + c^T y``):

    * linear, ``m`` rows:     ``F_l(x(y)) - m ln t``           weight ``w_l``
    * psd of size ``k``:      ``F_psd(x(y)) - k ln t``         weight ``w_h``
    * each ellipsoid:         ``F_e(x(y)) - 2 ln t``           weight ``w_h``
    * generic (``nu_s``):     ``kappa_s (F_s(x(y)) - 2 nu_s ln t)``   weight ``w_s``
    * cap:                    ``-ln(J - c^T y)``               weight 1

    The first three equal the exact log barriers of the transformed
    constraints, e.g. ``-sum ln(b_i - (a_i - b_i c)^T y)`` for the linear part.
    """

    def __init__(self, spec: BodySpec, c, weights: BarrierWeights | None = None,
                 generic_parts=(), cap: float | None = DEFAULT_CAP):
        c = np.asarray(c, dtype=float)
        if c.shape != (spec.n,):
            raise InputError(f"objective has length {len(c)}, expected {spec.n}")
        if cap is not None and cap <= 0:
            raise InputError("cap must be positive")
        self.spec = spec
        self.c = c
        self.weights = spec.weights if weights is None else weights
        self.generic_parts = tuple(generic_parts)
        self.cap = cap

    @property
    def n(self) -> int:
        return self.spec.n

    def to_x(self, y) -> np.ndarray:
        return projective_inverse(self.c, y)

    def to_y(self, x) -> np.ndarray:
        return projective_map(self.c, x)

    def contains(self, y) -> bool:
        y = np.asarray(y, dtype=float)
        cy = float(self.c @ y)
        if not cy > -1.0:
            return False
        if self.cap is not None and not cy < self.cap:
            return False
        x = y / (1.0 + cy)
        if not self.spec.contains(x):
            return False
        return all(p.contains(x) for p in self.generic_parts)

    def part_evals(self, y) -> list[tuple[str, float, BarrierEval]]:
        """``(name, weight, unweighted transformed barrier)`` for each part at ``y``."""
        y = np.asarray(y, dtype=float)
        if not self.contains(y):
            raise InfeasiblePointError("point is outside the transformed body")
        spec, c, w = self.spec, self.c, self.weights
        x = self.to_x(y)
        out = []
        if spec.has_linear:
            out.append(("linear", w.linear,
                        pull_back(log_barrier_eval(spec.A, spec.b, x), x, y, c, -spec.m)))
        if spec.has_psd:
            ev = logdet_barrier_eval(spec._psd_stack, spec.psd_B, x)
            out.append(("psd", w.hyperbolic, pull_back(ev, x, y, c, -spec.psd_size)))
        if spec.has_ellipsoids:
            ev = ellipsoid_barrier_eval(spec.ellipsoids, x)
            out.append(("ellipsoid", w.hyperbolic,
                        pull_back(ev, x, y, c, -2.0 * len(spec.ellipsoids))))
        for i, part in enumerate(self.generic_parts):
            ev = pull_back(part.evaluate(x), x, y, c, -2.0 * part.nu)
            out.append((f"generic[{i}]", w.generic, ev.scaled(kappa_s(part.nu))))
        if self.cap is not None:
            out.append(("cap", 1.0, log_barrier_eval(c[None, :], np.array([self.cap]), y)))
        return out

    def evaluate(self, y) -> BarrierEval:
        parts = self.part_evals(y)
        out = combine([ev for _, _, ev in parts], [wt for _, wt, _ in parts], np.asarray(y, float))
        out.root = None
        return out


@dataclass(frozen=True)
class OptimizerConfig:
    """Objective ``c`` (target level ``c^T x = 1``), tolerance and budget settings.

    ``hard_cap`` of None means ``cap_factor * tau_budget``.
    """

    c: tuple
    eps: float = 0.05
    delta: float = 0.1
    s: float = 1.0
    c1: float = 1.0
    c2: float = 1.0
    radius: float = MAX_RADIUS
    laziness: float = 0.5
    hard_cap: int | None = None
    cap_factor: float = 10.0
    J_cap: float = DEFAULT_CAP

    def __post_init__(self):
        object.__setattr__(self, "c", tuple(float(v) for v in self.c))
        if not (0 < self.eps < 1):
            raise InputError(f"eps must lie in (0, 1), got {self.eps}")
        if not (0 < self.delta < 1):
            raise InputError(f"delta must lie in (0, 1), got {self.delta}")
        if self.s < 1:
            raise InputError(f"s must be >= 1, got {self.s}")
        if self.c1 <= 0 or self.c2 <= 0:
            raise InputError("budget constants must be positive")
        if not (0 < self.radius <= MAX_RADIUS):
            raise InputError(f"radius must lie in (0, 1/sqrt(2)], got {self.radius}")
        if self.hard_cap is not None and self.hard_cap < 0:
            raise InputError("hard_cap must be >= 0")


def tau_budget(n: int, nu: float, s: float, eps: float, delta: float,
               c1: float = 1.0, c2: float = 1.0) -> int:
    """``ceil(c1 n nu (ln(1/delta) + c2 n ln(s nu / eps)))``."""
    if n <= 0 or nu <= 0 or s <= 0:
        raise InputError("n, nu and s must be positive")
    if not (0 < eps < 1 and 0 < delta < 1):
        raise InputError("eps and delta must lie in (0, 1)")
    return int(math.ceil(c1 * n * nu * (math.log(1 / delta) + c2 * n * math.log(s * nu / eps))))


@dataclass(eq=False)
class OptimizeResult:
    status: str
    x: np.ndarray
    objective_value: float
    steps_used: int
    tau_budget: int
    hard_cap: int
    seed: int | None
    J_cap: float
    trace: list = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "x": self.x.tolist(),
            "objective_value": self.objective_value,
            "steps_used": self.steps_used,
            "tau_budget": self.tau_budget,
            "hard_cap": self.hard_cap,
            "seed": self.seed,
            "J_cap": self.J_cap,
        }


def las_vegas_optimize(spec: BodySpec, config: OptimizerConfig, seed: int | None = 0, rng=None,
                       generic_parts=(), keep_trace: bool = True, start=None) -> OptimizeResult:
    """Walk on ``K_hat`` from ``T(start)`` until ``c^T x >= 1 - eps`` or the step cap.

    ``start`` defaults to the origin.  Hitting the cap is reported as
    ``budget_exhausted`` with the best point seen.

    Raises:
        InputError: if ``start`` has ``c^T x >= 1`` or lies outside ``K``.
    """
    c = np.asarray(config.c, dtype=float)
    if c.shape != (spec.n,):
        raise InputError(f"objective has length {len(c)}, expected {spec.n}")
    hat = HatBody(spec, c, generic_parts=generic_parts, cap=config.J_cap)
    x = np.zeros(spec.n) if start is None else np.array(start, dtype=float)
    if x.shape != (spec.n,):
        raise InputError(f"start has shape {x.shape}, expected ({spec.n},)")
    if not float(c @ x) < 1 or not spec.contains(x):
        raise InputError("start must be strictly inside Q")
    nu = body_complexity(spec, sum(p.nu for p in generic_parts))
    tau = tau_budget(spec.n, nu, config.s, config.eps, config.delta, config.c1, config.c2)
    cap = config.hard_cap if config.hard_cap is not None else int(math.ceil(config.cap_factor * tau))
    if rng is None:
        rng = make_rng(0 if seed is None else seed)
    target = 1.0 - config.eps

    y0 = hat.to_y(x)
    if not hat.contains(y0):
        raise InputError("start must be strictly inside Q")
    state = ChainState(y0, hat.evaluate(y0), 0, rng)
    best_x, best_val = x, float(c @ x)
    trace = [x] if keep_trace else []
    steps = 0
    while best_val < target and steps < cap:
        state, _ = metropolis_step(hat, state, config.radius, config.laziness)
        steps += 1
        x = hat.to_x(state.x)
        val = float(c @ x)
        if keep_trace:
            trace.append(x)
        if val > best_val:
            best_x, best_val = x, val
        if val >= target:
            break
    status = SUCCESS if best_val >= target else EXHAUSTED
    if status == SUCCESS:
        assert spec.contains(best_x)
    return OptimizeResult(status, best_x, best_val, steps, tau, cap, seed, config.J_cap, trace)


def hat_chord_ratio(spec: BodySpec, c, eps: float, direction) -> float:
    """``|p'| / |q'|`` for the chord of ``T(K n {c^T x <= 1 - eps})`` through 0.

    ``p'`` is the end along ``direction`` and ``q'`` the opposite end.
    """
    c = np.asarray(c, dtype=float)
    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)
    lo, hi = spec.ray_interval(np.zeros(spec.n), d)
    # clip by the level set c^T x <= 1 - eps on both sides of the origin
    cd = float(c @ d)
    if cd > 0:
        hi = min(hi, (1 - eps) / cd)
    elif cd < 0:
        lo = max(lo, (1 - eps) / cd)
    p = hi * d
    q = lo * d
    return float(np.linalg.norm(projective_map(c, p)) / np.linalg.norm(projective_map(c, q)))
