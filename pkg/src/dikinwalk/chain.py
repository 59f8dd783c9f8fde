"""The Dikin walk: a lazy, Metropolis-filtered Gaussian walk with covariance
``(r^2 / 2n) * H(x)^{-1}``, where ``H`` is the barrier Hessian.

One step::

    with probability `laziness`: stay
    else: z ~ G_x
          z outside     -> stay                   (outcome "outside")
          accept w.p. min(1, G_z(x) / G_x(z))     (outcome "accepted" / "filtered")
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace
from typing import Iterator

import numpy as np

from .barriers import BarrierEval, as_oracle
from .errors import InputError
from .rng import make_rng

MAX_RADIUS = 1.0 / math.sqrt(2.0)

LAZY = "lazy"
OUTSIDE = "outside"
FILTERED = "filtered"
ACCEPTED = "accepted"


@dataclass(frozen=True)
class ChainConfig:
    radius: float = 0.05
    laziness: float = 0.5
    seed: int = 0
    steps: int = 10_000
    burn_in: int = 0
    thin: int = 1

    def __post_init__(self):
        if not (0 < self.radius <= MAX_RADIUS):
            raise InputError(f"radius must lie in (0, 1/sqrt(2)], got {self.radius}")
        if not (0 <= self.laziness <= 1):
            raise InputError(f"laziness must lie in [0, 1], got {self.laziness}")
        if self.steps < 0 or self.burn_in < 0:
            raise InputError("steps and burn_in must be >= 0")
        if self.thin < 1:
            raise InputError("thin must be >= 1")


@dataclass(eq=False)
class ChainState:
    x: np.ndarray
    ev: BarrierEval
    step: int
    rng: np.random.Generator


@dataclass(eq=False)
class StepRecord:
    outcome: str
    z: np.ndarray | None = None
    log_forward: float = math.nan   # log G_x(z)
    log_backward: float = math.nan  # log G_z(x)
    step_norm: float = math.nan     # ||x - z||_x


def log_proposal_density(ev: BarrierEval, x, z, radius: float) -> float:
    """``log G_x(z) = (n/2) ln(n / (pi r^2)) - n ||x - z||_x^2 / r^2 + V(x)``.

    Defined for any ``z``, inside the body or not.
    """
    n = len(x)
    d = np.asarray(z) - np.asarray(x)
    r2 = radius * radius
    return 0.5 * n * math.log(n / (math.pi * r2)) - n * ev.quad(d) / r2 + ev.vterm


def proposal_noise(ev: BarrierEval, rng: np.random.Generator) -> np.ndarray:
    """A draw from ``N(0, H^{-1})``.

    With a Hessian root ``J`` (``J^T J = H``) this is ``H^{-1} J^T g``, which
    commutes with affine changes of variables; otherwise ``L^{-T} g``.
    """
    if ev.root is not None:
        g = rng.standard_normal(ev.root.shape[0])
        return ev.factor.solve(ev.root.T @ g)
    return ev.factor.inv_sqrt_apply(rng.standard_normal(len(ev.gradient)))


def propose(state: ChainState, radius: float) -> np.ndarray:
    """``z = x + (r / sqrt(2n)) W g`` with ``W W^T = H(x)^{-1}``."""
    n = len(state.x)
    return state.x + (radius / math.sqrt(2 * n)) * proposal_noise(state.ev, state.rng)


def proposal_step_norms(ev: BarrierEval, radius: float, count: int, rng) -> np.ndarray:
    """Local norms ``||z - x||_x`` of ``count`` independent proposals from ``x``."""
    n = len(ev.gradient)
    scale = radius / math.sqrt(2 * n)
    if ev.root is not None:
        G = rng.standard_normal((count, ev.root.shape[0]))
        D = ev.factor.solve((G @ ev.root).T).T
    else:
        G = rng.standard_normal((count, n))
        D = np.array([ev.factor.inv_sqrt_apply(g) for g in G])
    D *= scale
    return np.sqrt(np.einsum("ij,jk,ik->i", D, ev.hessian, D))


def init_state(body, start, seed: int | None = None, rng=None, weights=None) -> ChainState:
    oracle = as_oracle(body, weights)
    x = np.array(start, dtype=float)
    if x.shape != (oracle.n,):
        raise InputError(f"start has shape {x.shape}, expected ({oracle.n},)")
    if not oracle.contains(x):
        raise InputError("start point is not strictly inside the body")
    if rng is None:
        rng = make_rng(0 if seed is None else seed)
    return ChainState(x, oracle.evaluate(x), 0, rng)


def metropolis_step(oracle, state: ChainState, radius: float, laziness: float = 0.5):
    """One lazy Metropolis-filtered Dikin step.  Returns ``(new_state, record)``."""
    rng = state.rng
    step = state.step + 1
    if rng.random() < laziness:
        return replace(state, step=step), StepRecord(LAZY)
    x, ev = state.x, state.ev
    z = propose(state, radius)
    step_norm = math.sqrt(ev.quad(z - x))
    if not oracle.contains(z):
        return replace(state, step=step), StepRecord(OUTSIDE, z, step_norm=step_norm)
    ev_z = oracle.evaluate(z)
    fwd = log_proposal_density(ev, x, z, radius)
    bwd = log_proposal_density(ev_z, z, x, radius)
    u = rng.random()
    rec = StepRecord(FILTERED, z, fwd, bwd, step_norm)
    if bwd >= fwd or u < math.exp(bwd - fwd):
        rec.outcome = ACCEPTED
        assert oracle.contains(z)
        return ChainState(z, ev_z, step, rng), rec
    return replace(state, step=step), rec


def log_acceptance_ratio(ev_x: BarrierEval, ev_z: BarrierEval, x, z, radius: float) -> float:
    """``log G_z(x) - log G_x(z)`` in the form ``V(z) - V(x) + (n/r^2)(||x-z||_x^2 - ||x-z||_z^2)``."""
    n = len(x)
    d = np.asarray(z) - np.asarray(x)
    return ev_z.vterm - ev_x.vterm + n / radius ** 2 * (ev_x.quad(d) - ev_z.quad(d))


def transition_log_density(body, x, z, radius: float, laziness: float = 0.5, weights=None) -> float:
    """Log density of the continuous part of the kernel, ``x -> z`` with ``z != x``.

    Equals ``log(1 - laziness) + min(log G_x(z), log G_z(x))`` inside the body
    and ``-inf`` outside.
    """
    oracle = as_oracle(body, weights)
    if not oracle.contains(z):
        return -math.inf
    ev_x, ev_z = oracle.evaluate(x), oracle.evaluate(z)
    fwd = log_proposal_density(ev_x, x, z, radius)
    bwd = log_proposal_density(ev_z, z, x, radius)
    return math.log1p(-laziness) + min(fwd, bwd)


@dataclass
class ChainSummary:
    steps: int = 0
    accepted: int = 0
    outside: int = 0
    lazy: int = 0
    filtered: int = 0
    step_norm_total: float = field(default=0.0, repr=False)

    def add(self, rec: StepRecord):
        self.steps += 1
        if rec.outcome == LAZY:
            self.lazy += 1
            return
        self.step_norm_total += rec.step_norm
        if rec.outcome == ACCEPTED:
            self.accepted += 1
        elif rec.outcome == OUTSIDE:
            self.outside += 1
        else:
            self.filtered += 1

    @property
    def proposals(self) -> int:
        return self.steps - self.lazy

    @property
    def acceptance_rate(self) -> float:
        """Accepted moves among non-lazy steps."""
        return self.accepted / self.proposals if self.proposals else math.nan

    @property
    def mean_step_local_norm(self) -> float:
        return self.step_norm_total / self.proposals if self.proposals else math.nan

    def rates(self) -> dict:
        s = max(self.steps, 1)
        return {k: getattr(self, k) / s for k in (LAZY, OUTSIDE, FILTERED, ACCEPTED)}

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("step_norm_total")
        d["acceptance_rate"] = self.acceptance_rate
        d["mean_step_local_norm"] = self.mean_step_local_norm
        return d


@dataclass(eq=False)
class ChainRun:
    samples: np.ndarray
    summary: ChainSummary
    final: ChainState
    records: list | None = None


def iter_chain(oracle, state: ChainState, config: ChainConfig) -> Iterator:
    """Advance ``state`` by ``config.steps`` steps, yielding ``(state, record)`` each time."""
    for _ in range(config.steps):
        state, rec = metropolis_step(oracle, state, config.radius, config.laziness)
        yield state, rec


def run_chain(body, config: ChainConfig, start=None, weights=None, rng=None,
              keep_records: bool = False) -> ChainRun:
    """Run the walk and collect every ``thin``-th point after ``burn_in`` steps.

    The chain starts at ``start`` (default: the origin) and is driven by
    ``rng`` if given, else by a generator seeded from ``config.seed``.
    """
    oracle = as_oracle(body, weights)
    if start is None:
        start = np.zeros(oracle.n)
    summary = ChainSummary()
    samples = []
    records = [] if keep_records else None
    state = init_state(oracle, start, seed=config.seed, rng=rng)
    for state, rec in iter_chain(oracle, state, config):
        summary.add(rec)
        if keep_records:
            records.append(rec)
        i = state.step - config.burn_in
        if i > 0 and i % config.thin == 0:
            samples.append(state.x)
    arr = np.array(samples) if samples else np.zeros((0, oracle.n))
    return ChainRun(arr, summary, state, records)
