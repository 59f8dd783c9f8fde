"""Statistical checks on walk output.

* uniformity against a rejection-sampling oracle (moments, chi-square, gridded TV)
* integrated autocorrelation time (Geyer's initial positive sequence)
* the product-body mixing experiment
* startup checks: proposal tail and self-concordance sweep
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import optimize, stats

from .barriers import BarrierOracle, self_concordance_check
from .baselines import hit_and_run_step
from .body import BodySpec, product_body
from .chain import ChainConfig, init_state, proposal_step_norms, run_chain
from .errors import InputError, UnboundedBodyError
from .rng import make_rng

MIN_SAMPLES = 1000


# ---------------------------------------------------------------------------
# autocorrelation


def autocorrelation(x) -> np.ndarray:
    """Normalized autocorrelation function of a scalar series (FFT based)."""
    x = np.asarray(x, dtype=float)
    n = len(x)
    x = x - x.mean()
    f = np.fft.rfft(x, 2 * n)
    acf = np.fft.irfft(f * np.conj(f))[:n]
    if acf[0] == 0:
        return np.full(n, np.nan)
    return acf / acf[0]


def integrated_autocorr_time(x) -> float:
    """``1 + 2 sum_k rho_k`` truncated at the first non-positive pair sum.

    Returns ``inf`` for a constant series.
    """
    rho = autocorrelation(x)
    if np.isnan(rho[0]):
        return math.inf
    m = len(rho) // 2
    pairs = rho[0:2 * m:2] + rho[1:2 * m:2]
    bad = np.flatnonzero(pairs <= 0)
    k = bad[0] if bad.size else len(pairs)
    return float(-1.0 + 2.0 * pairs[:k].sum())


def effective_sample_size(x) -> float:
    n = len(x)
    tau = integrated_autocorr_time(x)
    if not math.isfinite(tau):
        return 0.0
    return float(min(n, n / tau))


@dataclass
class MixingProxy:
    """Integrated autocorrelation time with a batch-means error bar."""

    tau: float
    stderr: float
    tau_batch_means: float
    n_samples: int


def mixing_proxy(x, batches: int = 10) -> MixingProxy:
    x = np.asarray(x, dtype=float)
    n = len(x)
    tau = integrated_autocorr_time(x)
    size = n // batches
    per_batch = [integrated_autocorr_time(x[i * size:(i + 1) * size]) for i in range(batches)]
    finite = [t for t in per_batch if math.isfinite(t)]
    stderr = float(np.std(finite, ddof=1) / math.sqrt(len(finite))) if len(finite) > 1 else math.nan
    var = np.var(x)
    means = x[: size * batches].reshape(batches, size).mean(axis=1)
    tau_bm = float(size * np.var(means, ddof=1) / var) if var > 0 else math.inf
    return MixingProxy(tau, stderr, tau_bm, n)


# ---------------------------------------------------------------------------
# rejection oracle


def bounding_box(spec: BodySpec, max_iter: int = 500, tol: float = 1e-9):
    """An axis-aligned box containing the body, as ``(lo, hi)`` arrays.

    Linear constraints enter exactly; ellipsoids through their own boxes; the
    psd constraint through valid cuts ``v^T S(x) v >= 0`` added at the most
    negative eigenvector until the LP optimum is psd-feasible.  Every
    intermediate LP is a relaxation, so the result is always an outer box.

    Raises:
        UnboundedBodyError: if some coordinate is unbounded.
    """
    n = spec.n
    lo = np.full(n, -np.inf)
    hi = np.full(n, np.inf)
    for e in spec.ellipsoids:
        half = np.sqrt(np.sum(e.matrix ** 2, axis=1))
        lo = np.maximum(lo, e.center - half)
        hi = np.minimum(hi, e.center + half)
    if not (spec.has_linear or spec.has_psd):
        return lo, hi

    rows, rhs = [], []
    if spec.has_linear:
        rows.extend(spec.A)
        rhs.extend(spec.b)
    big = 1e8

    def psd_cut(v):
        # v^T (B - sum x_i A_i) v >= 0  <=>  sum x_i v^T A_i v <= v^T B v
        return np.einsum("j,ijk,k->i", v, spec._psd_stack, v), float(v @ spec.psd_B @ v)

    if spec.has_psd:
        k = spec.psd_size
        for v in np.vstack([np.eye(k), np.linalg.eigh(spec.psd_B)[1].T]):
            a, r = psd_cut(v)
            rows.append(a)
            rhs.append(r)

    bounds = [(max(l, -big), min(h, big)) for l, h in zip(lo, hi)]
    out_lo, out_hi = lo.copy(), hi.copy()
    for i in range(n):
        for sign in (1.0, -1.0):
            cost = np.zeros(n)
            cost[i] = -sign
            val = None
            for _ in range(max_iter):
                res = optimize.linprog(cost, A_ub=np.array(rows), b_ub=np.array(rhs),
                                       bounds=bounds, method="highs")
                if res.status != 0:
                    raise UnboundedBodyError(f"bounding LP failed: {res.message}")
                val = float(res.x[i])
                if not spec.has_psd:
                    break
                S = spec.psd_slack(res.x)
                w, V = np.linalg.eigh(S)
                if w[0] >= -tol * max(1.0, abs(w[-1])):
                    break
                a, r = psd_cut(V[:, 0])
                rows.append(a)
                rhs.append(r)
            if abs(val) >= big * (1 - 1e-9):
                raise UnboundedBodyError(f"coordinate {i} is unbounded")
            if sign > 0:
                out_hi[i] = min(out_hi[i], val)
            else:
                out_lo[i] = max(out_lo[i], val)
    if not (np.all(np.isfinite(out_lo)) and np.all(np.isfinite(out_hi))):
        raise UnboundedBodyError("body is unbounded")
    return out_lo, out_hi


def rejection_sample(spec: BodySpec, count: int, rng, box=None, batch: int = 65536) -> np.ndarray:
    """``count`` exact uniform samples from the body by rejection from its bounding box."""
    lo, hi = bounding_box(spec) if box is None else box
    out = []
    have = 0
    while have < count:
        X = lo + (hi - lo) * rng.random((batch, spec.n))
        keep = X[spec.contains_many(X)]
        out.append(keep)
        have += len(keep)
    return np.vstack(out)[:count]


# ---------------------------------------------------------------------------
# histograms


def grid_histogram(samples, box, grid: int) -> np.ndarray:
    """Cell frequencies (flattened, sums to 1) on a ``grid^n`` partition of ``box``."""
    lo, hi = box
    n = samples.shape[1]
    idx = np.floor((samples - lo) / (hi - lo) * grid).astype(int)
    idx = np.clip(idx, 0, grid - 1)
    flat = np.ravel_multi_index(idx.T, (grid,) * n)
    return np.bincount(flat, minlength=grid ** n) / len(samples)


def tv_distance(p, q) -> float:
    return float(0.5 * np.sum(np.abs(np.asarray(p) - np.asarray(q))))


def tv_noise_floor(probs, n1: float, n2: float = math.inf) -> float:
    """Expected histogram TV between two independent samples of one distribution."""
    probs = np.asarray(probs)
    inv = 1.0 / n1 + (0.0 if math.isinf(n2) else 1.0 / n2)
    return float(0.5 * np.sum(np.sqrt(2 / math.pi * probs * (1 - probs) * inv)))


@dataclass
class UniformityReport:
    n_samples: int
    means: list
    second_moments: list
    mean_stderr: list
    second_moment_stderr: list
    ess: list
    grid: int
    dof: int
    chi2: float
    chi2_raw: float
    p_value: float
    tv: float | None
    tv_noise_floor: float | None
    oracle_count: int
    oracle_means: list
    oracle_second_moments: list
    box: list
    histogram: list = field(repr=False, default_factory=list)
    oracle_histogram: list = field(repr=False, default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def uniformity_report(samples, spec: BodySpec, grid: int = 4, oracle_count: int = 100_000,
                      rng=None, seed: int = 0) -> UniformityReport:
    """Compare a sample (in chain order) against exact uniform samples of the body.

    Moments carry standard errors from the per-coordinate effective sample
    size.  The chi-square statistic over the ``grid^n`` cells (expected
    frequencies from the oracle) is scaled by ``min ESS / N`` to account for
    autocorrelation; ``chi2_raw`` is the unscaled value.  Gridded TV is only
    computed for ``n <= 3``.

    Raises:
        InputError: fewer than 1000 samples.
    """
    samples = np.asarray(samples, dtype=float)
    N, n = samples.shape
    if N < MIN_SAMPLES:
        raise InputError(f"uniformity report needs at least {MIN_SAMPLES} samples, got {N}")
    if rng is None:
        rng = make_rng(seed, 1)
    box = bounding_box(spec)
    oracle = rejection_sample(spec, oracle_count, rng, box)

    ess = np.array([effective_sample_size(samples[:, i]) for i in range(n)])
    ess_safe = np.maximum(ess, 1.0)
    means = samples.mean(axis=0)
    m2 = (samples ** 2).mean(axis=0)
    mean_se = samples.std(axis=0) / np.sqrt(ess_safe)
    m2_se = np.array([
        (samples[:, i] ** 2).std() / math.sqrt(max(effective_sample_size(samples[:, i] ** 2), 1.0))
        for i in range(n)
    ])

    tv = floor = None
    hist = ohist = np.zeros(0)
    chi2 = chi2_raw = math.nan
    p_value = math.nan
    dof = 0
    if n <= 3:
        hist = grid_histogram(samples, box, grid)
        ohist = grid_histogram(oracle, box, grid)
        live = (ohist > 0) | (hist > 0)
        dof = int(live.sum()) - 1
        # cells the oracle never hit get half a count of expected mass
        expected = N * np.maximum(ohist[live], 0.5 / oracle_count)
        chi2_raw = float(np.sum((N * hist[live] - expected) ** 2 / expected))
        scale = float(ess.min()) / N
        chi2 = chi2_raw * scale
        p_value = float(stats.chi2.sf(chi2, dof)) if dof > 0 else math.nan
        tv = tv_distance(hist, ohist)
        floor = tv_noise_floor(ohist, float(ess.min()), oracle_count)

    return UniformityReport(
        n_samples=N,
        means=means.tolist(),
        second_moments=m2.tolist(),
        mean_stderr=mean_se.tolist(),
        second_moment_stderr=m2_se.tolist(),
        ess=ess.tolist(),
        grid=grid,
        dof=dof,
        chi2=chi2,
        chi2_raw=chi2_raw,
        p_value=p_value,
        tv=tv,
        tv_noise_floor=floor,
        oracle_count=oracle_count,
        oracle_means=oracle.mean(axis=0).tolist(),
        oracle_second_moments=(oracle ** 2).mean(axis=0).tolist(),
        box=[box[0].tolist(), box[1].tolist()],
        histogram=hist.tolist(),
        oracle_histogram=ohist.tolist(),
    )


# ---------------------------------------------------------------------------
# product experiment


@dataclass
class ProductRow:
    copies: int
    dimension: int
    tau: float
    stderr: float
    tau_batch_means: float
    acceptance_rate: float


def product_mixing_experiment(factor: BodySpec, copies=(1, 2, 4, 8), steps: int = 100_000,
                              radius: float = 0.05, seed: int = 0, burn_in: int = 0):
    """Autocorrelation time of coordinate 1 of the walk on ``factor^h`` for each ``h``.

    Every ``h`` uses the same seed, so ``h = 1`` reproduces the plain chain.
    Returns ``(rows, samples_by_h)``.
    """
    rows = []
    samples_by_h = {}
    for h in copies:
        body = product_body(factor, h)
        cfg = ChainConfig(radius=radius, seed=seed, steps=steps + burn_in, burn_in=burn_in)
        run = run_chain(body, cfg)
        proxy = mixing_proxy(run.samples[:, 0])
        rows.append(ProductRow(h, body.n, proxy.tau, proxy.stderr, proxy.tau_batch_means,
                               run.summary.acceptance_rate))
        samples_by_h[h] = run.samples
    return rows, samples_by_h


# ---------------------------------------------------------------------------
# startup checks

FACT3_TAIL = 0.998
SC_TOL = 0.01


@dataclass
class CheckItem:
    name: str
    passed: bool
    value: float
    threshold: float
    detail: str = ""


@dataclass
class StartupReport:
    passed: bool
    items: list

    def failures(self) -> list:
        return [it for it in self.items if not it.passed]

    def to_dict(self) -> dict:
        return {"passed": self.passed, "items": [asdict(it) for it in self.items]}


def startup_checks(spec: BodySpec, config: ChainConfig | None = None, weights=None, seed: int = 0,
                   proposals: int = 100_000, sweep_points: int = 20, start=None) -> StartupReport:
    """Proposal-tail Monte Carlo at the start point plus a self-concordance sweep.

    The tail check draws ``proposals`` proposals and requires the fraction with
    ``||z - x||_x <= 1/2`` to be at least 0.998.  The sweep visits
    ``sweep_points`` interior points (reached by Hit-and-Run from the start)
    with random directions and requires both self-concordance ratios to be
    at most 1.01.
    """
    config = ChainConfig(seed=seed) if config is None else config
    oracle = BarrierOracle(spec, weights)
    x0 = np.zeros(spec.n) if start is None else np.asarray(start, dtype=float)
    state = init_state(oracle, x0)
    items = []

    norms = proposal_step_norms(state.ev, config.radius, proposals, make_rng(seed, 0))
    tail = float(np.mean(norms <= 0.5))
    items.append(CheckItem("proposal_tail", tail >= FACT3_TAIL, tail, FACT3_TAIL,
                           f"{proposals} proposals at radius {config.radius}"))

    rng = make_rng(seed, 1)
    x = x0
    worst_d3 = worst_lip = 0.0
    bad = []
    for k in range(sweep_points):
        for _ in range(5):
            x = hit_and_run_step(spec, x, rng)
        h = rng.standard_normal(spec.n)
        rep = self_concordance_check(oracle, x, h)
        worst_d3 = max(worst_d3, rep.d3_ratio)
        worst_lip = max(worst_lip, rep.lipschitz_ratio)
        if not rep.ok(SC_TOL):
            bad.append(k)
    items.append(CheckItem("third_derivative", worst_d3 <= 1 + SC_TOL, worst_d3, 1 + SC_TOL,
                           f"worst of {sweep_points} points"))
    items.append(CheckItem("gradient_bound", worst_lip <= 1 + SC_TOL, worst_lip, 1 + SC_TOL,
                           f"worst of {sweep_points} points; failing points {bad}"))
    return StartupReport(all(it.passed for it in items), items)
