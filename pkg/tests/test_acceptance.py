"""Acceptance criteria, one test each.

Every test reports through ``record`` so the session summary lists one
PASS/FAIL line per criterion.  Seeds and sample sizes are fixed up front.
"""

import math
import time

import numpy as np
import pytest

from dikinwalk.barriers import BarrierOracle, log_barrier_eval, self_concordance_check
from dikinwalk.baselines import BALL, HIT_AND_RUN, BaselineConfig, run_baseline
from dikinwalk.body import cube, example_path, load_example
from dikinwalk.chain import (
    MAX_RADIUS,
    ChainConfig,
    init_state,
    log_acceptance_ratio,
    log_proposal_density,
    propose,
    proposal_step_norms,
    run_chain,
    transition_log_density,
)
from dikinwalk.cli import main as cli_main
from dikinwalk.diagnostics import grid_histogram, product_mixing_experiment, tv_distance, uniformity_report
from dikinwalk.geometry import (
    cross_ratio,
    dikin_ellipsoid_points,
    gauge_sandwich_check,
    hilbert_distance,
)
from dikinwalk.optimizer import (
    SUCCESS,
    GenericPart,
    HatBody,
    OptimizerConfig,
    kappa_s,
    las_vegas_optimize,
    projective_map,
)
from dikinwalk.rng import make_rng

from .conftest import interior_points, random_polytope, record
from .test_barriers import fd_gradient, fd_hessian

pytestmark = pytest.mark.acceptance

SQUARE_BOX = (np.full(2, -1.0), np.ones(2))
STAT_RADIUS = MAX_RADIUS


def rel_err(a, b):
    return float(np.linalg.norm(np.asarray(a) - np.asarray(b)) / max(np.linalg.norm(b), 1e-300))


def test_01_proposal_tail():
    t0 = time.perf_counter()
    fracs = {}
    for n in (2, 5, 10):
        ev = BarrierOracle(cube(n)).evaluate(np.zeros(n))
        norms = proposal_step_norms(ev, 0.05, 100_000, make_rng(0, n))
        fracs[n] = float(np.mean(norms <= 0.5))
    elapsed = time.perf_counter() - t0
    ok = min(fracs.values()) >= 0.998 and elapsed < 10
    record(1, "proposal tail", ok, f"fractions {fracs}, {elapsed:.1f}s")


def test_02_self_concordance_sweep():
    t0 = time.perf_counter()
    rng = make_rng(2)
    worst_d3 = worst_lip = 0.0
    for _ in range(20):
        n = int(rng.integers(1, 6))
        m = int(rng.integers(2 * n, 21))
        spec = random_polytope(rng, n, m)
        for x in interior_points(spec, 20, rng):
            rep = self_concordance_check(spec, x, rng.standard_normal(n), part="linear")
            worst_d3 = max(worst_d3, rep.d3_ratio)
            worst_lip = max(worst_lip, rep.lipschitz_ratio)
    elapsed = time.perf_counter() - t0
    ok = worst_d3 <= 1.01 and worst_lip <= 1.01 and elapsed < 30
    record(2, "self-concordance sweep", ok,
           f"worst D3 ratio {worst_d3:.4f}, worst gradient ratio {worst_lip:.4f}, {elapsed:.1f}s")


def test_03_sandwich_and_dikin_containment():
    rng = make_rng(3)
    violations = 0
    checked = 0
    for name in ("square", "disk_spectrahedron", "two_ellipsoids"):
        body = load_example(name)
        oracle = BarrierOracle(body)
        for x in interior_points(body, 10, rng):
            for _ in range(100):
                for r in gauge_sandwich_check(body, x, rng.standard_normal(body.n)):
                    violations += not r.ok(1e-8)
            ev = oracle.evaluate(x)
            for z in dikin_ellipsoid_points(ev, x, 100, rng):
                violations += not body.contains(x + (1 - 1e-8) * (z - x))
            checked += 100
    record(3, "sandwich and Dikin containment", violations == 0,
           f"{violations} violations over {checked} directions per check")


def test_04_uniformity_square():
    t0 = time.perf_counter()
    square = load_example("square")
    run = run_chain(square, ChainConfig(radius=STAT_RADIUS, steps=110_000, burn_in=10_000, thin=10, seed=0))
    rep = uniformity_report(run.samples, square, grid=4, oracle_count=100_000, seed=0)
    elapsed = time.perf_counter() - t0
    means_ok = max(abs(v) for v in rep.means) <= 0.02
    m2_ok = max(abs(v - 1 / 3) for v in rep.second_moments) <= 0.02
    ok = means_ok and m2_ok and rep.p_value > 0.001 and rep.tv <= 0.05 and elapsed < 60
    record(4, "uniformity on the square", ok,
           f"means {np.round(rep.means, 4).tolist()}, second moments {np.round(rep.second_moments, 4).tolist()}, "
           f"p {rep.p_value:.3g}, TV {rep.tv:.4f} (noise floor {rep.tv_noise_floor:.4f}), "
           f"min ESS {min(rep.ess):.0f}, {elapsed:.1f}s")


def test_05_three_way_consistency():
    square = load_example("square")
    steps, burn = 100_000, 10_000
    dikin = run_chain(square, ChainConfig(radius=STAT_RADIUS, steps=steps + burn, burn_in=burn, seed=0)).samples
    hr = run_baseline(square, BaselineConfig(HIT_AND_RUN, steps=steps + burn, burn_in=burn),
                      rng=make_rng(0, 10)).samples
    bw = run_baseline(square, BaselineConfig(BALL, ball_radius=0.5, steps=steps + burn, burn_in=burn),
                      rng=make_rng(0, 11)).samples
    hists = {k: grid_histogram(v, SQUARE_BOX, 4) for k, v in (("dikin", dikin), ("hitrun", hr), ("ball", bw))}
    pairs = {f"{a}-{b}": tv_distance(hists[a], hists[b])
             for a, b in (("dikin", "hitrun"), ("dikin", "ball"), ("hitrun", "ball"))}
    record(5, "three-way walker consistency", max(pairs.values()) <= 0.05,
           ", ".join(f"{k} {v:.4f}" for k, v in pairs.items()))


def test_06_detailed_balance():
    rng = make_rng(6)
    r = 0.5
    worst_swap = worst_ratio = 0.0
    pairs = 0
    for name in ("square", "disk_spectrahedron", "two_ellipsoids"):
        body = load_example(name)
        oracle = BarrierOracle(body)
        got = 0
        while got < 334:
            for x in interior_points(body, 50, rng):
                state = init_state(oracle, x, rng=rng)
                z = propose(state, r)
                if not body.contains(z) or got >= 334:
                    continue
                fwd = transition_log_density(body, x, z, r)
                bwd = transition_log_density(body, z, x, r)
                worst_swap = max(worst_swap, abs(fwd - bwd))
                ev_z = oracle.evaluate(z)
                direct = log_proposal_density(ev_z, z, x, r) - log_proposal_density(state.ev, x, z, r)
                worst_ratio = max(worst_ratio, abs(log_acceptance_ratio(state.ev, ev_z, x, z, r) - direct))
                got += 1
        pairs += got
    ok = worst_swap <= 1e-10 and worst_ratio <= 1e-10
    record(6, "detailed balance", ok,
           f"{pairs} pairs, swap gap {worst_swap:.2e}, acceptance identity gap {worst_ratio:.2e}")


def test_07_affine_invariance():
    rng = make_rng(7)
    body = load_example("mixed3")
    # random rotation times a random stretch keeps the conditioning moderate
    Q, _ = np.linalg.qr(rng.standard_normal((3, 3)))
    M = Q @ np.diag(rng.uniform(0.5, 2.0, 3)) @ Q.T @ np.linalg.qr(rng.standard_normal((3, 3)))[0]
    t = rng.uniform(-0.05, 0.05, 3)
    image = body.affine_image(M, t)
    cfg = ChainConfig(steps=10_000, seed=77)
    a = run_chain(body, cfg).samples
    b = run_chain(image, cfg, start=t).samples
    gap = float(np.max(np.abs(a @ M.T + t - b)))
    record(7, "affine invariance", gap <= 1e-8, f"max pointwise gap {gap:.2e} over {len(a)} steps")


def test_08_hilbert_metric():
    interval = load_example("interval")
    d = hilbert_distance(interval, [0.0], [0.5])
    rng = make_rng(8)
    worst_add = 0.0
    bodies = [load_example(n) for n in ("square", "disk_spectrahedron", "mixed3", "two_ellipsoids")]
    for k in range(100):
        body = bodies[k % len(bodies)]
        x, y = interior_points(body, 2, rng)
        z = x + rng.uniform() * (y - x)
        gap = hilbert_distance(body, x, z) + hilbert_distance(body, z, y) - hilbert_distance(body, x, y)
        worst_add = max(worst_add, abs(gap))

    spec = cube(3)
    c = np.array([0.6, 0.3, -0.2])
    worst_cr = 0.0
    for x, y in rng.uniform(-0.8, 0.8, (100, 2, 3)):
        if c @ x >= 0.9 or c @ y >= 0.9:
            continue
        dvec = y - x
        lo, hi = spec.ray_interval(x, dvec)
        cd = float(c @ dvec)
        if cd > 0:
            hi = min(hi, (1 - c @ x) / cd)
        elif cd < 0:
            lo = max(lo, (1 - c @ x) / cd)
        p, q = x + lo * dvec, x + hi * dvec
        before = cross_ratio(p, x, y, q)
        after = cross_ratio(*(np.inf if c @ v >= 1 - 1e-12 else projective_map(c, v) for v in (p, x, y, q)))
        worst_cr = max(worst_cr, abs(after - before) / abs(before))
    ok = abs(d - math.log(3)) <= 1e-9 and worst_add <= 1e-9 and worst_cr <= 1e-6
    record(8, "Hilbert metric", ok,
           f"d(0, 1/2) - ln 3 = {d - math.log(3):.1e}, additivity gap {worst_add:.1e}, "
           f"cross-ratio gap {worst_cr:.1e}")


def test_09_optimizer_end_to_end():
    t0 = time.perf_counter()
    counts = {}
    bad_success = 0
    for n in (1, 2, 5):
        spec = cube(n)
        c = np.eye(n)[0]
        cfg = OptimizerConfig(c=tuple(c), eps=0.05, delta=0.1)
        ok = 0
        for seed in range(100):
            res = las_vegas_optimize(spec, cfg, seed=seed, keep_trace=False)
            if res.status == SUCCESS:
                ok += 1
                good = c @ res.x >= 0.95 and spec.contains(res.x) and res.steps_used <= res.hard_cap
                bad_success += not good
        counts[n] = (ok, res.tau_budget, res.hard_cap)
    elapsed = time.perf_counter() - t0
    passed = all(v[0] >= 99 for v in counts.values()) and bad_success == 0 and elapsed < 300
    detail = ", ".join(f"n={n}: {v[0]}/100 (tau {v[1]}, cap {v[2]})" for n, v in counts.items())
    record(9, "optimizer end to end", passed, f"{detail}; invalid successes {bad_success}; {elapsed:.0f}s")


def halfspace_part():
    """``-ln(1 - x_1)``, a barrier with parameter 1."""
    return GenericPart(
        lambda x: log_barrier_eval(np.array([[1.0] + [0.0] * (len(x) - 1)]), np.ones(1), x),
        lambda x: x[0] < 1,
        nu=1.0,
    )


def test_10_hat_barrier():
    rng = make_rng(10)
    worst = {}
    worst_rt = 0.0
    mixed = load_example("mixed3")
    cases = [
        (HatBody(mixed, np.array([1.2, 0.4, -0.3]), cap=None), ("linear", "psd", "ellipsoid")),
        (HatBody(load_example("square"), np.array([0.8, 0.5]), generic_parts=[halfspace_part()], cap=None),
         ("generic[0]",)),
    ]
    for hat, names in cases:
        pts = [x for x in interior_points(hat.spec, 200, rng) if hat.c @ x < 0.95][:50]
        assert len(pts) == 50
        for x in pts:
            y = hat.to_y(x)
            worst_rt = max(worst_rt, float(np.max(np.abs(hat.to_x(y) - x))))
            for name in names:
                def part(z, name=name):
                    return dict((k, e) for k, _, e in hat.part_evals(z))[name]

                ev = part(y)
                g = fd_gradient(lambda z: part(z).value, y)
                H = fd_hessian(lambda z: part(z).gradient, y)
                worst[name] = max(worst.get(name, 0.0), rel_err(ev.gradient, g), rel_err(ev.hessian, H))
    kappa = kappa_s(1.0)
    ok = max(worst.values()) <= 1e-4 and worst_rt <= 1e-10 and abs(kappa - 11.03) < 0.01
    record(10, "hat barrier", ok,
           f"kappa_s(1) = {kappa:.4f}, worst relative FD error "
           + ", ".join(f"{k} {v:.1e}" for k, v in worst.items()) + f", roundtrip {worst_rt:.1e}")


def test_11_product_experiment():
    interval = load_example("interval")
    rows, samples = product_mixing_experiment(interval, copies=(1, 2, 4), steps=100_000,
                                              radius=STAT_RADIUS, seed=0, burn_in=10_000)
    tau = {r.copies: r.tau for r in rows}
    ratio = tau[4] / tau[1]
    cube_run = run_chain(cube(2), ChainConfig(radius=STAT_RADIUS, steps=110_000, burn_in=10_000),
                         rng=make_rng(0, 20)).samples
    tv = tv_distance(grid_histogram(samples[2], SQUARE_BOX, 4), grid_histogram(cube_run, SQUARE_BOX, 4))
    ok = 2 <= ratio <= 8 and tv <= 0.05
    record(11, "product experiment", ok,
           f"tau(h=1) {tau[1]:.1f}, tau(h=4) {tau[4]:.1f}, ratio {ratio:.2f}, cube TV {tv:.4f}")


CLI_CASES = {
    "sample": ["sample", "--body", "square", "--steps", "400", "--seed", "3", "--out", "{d}/s.csv"],
    "optimize": ["optimize", "--body", "interval", "--objective", "1", "--seed", "1", "--out", "{d}/o.json"],
    "check": ["check", "--body", "disk_spectrahedron", "--out", "{d}/c.json"],
    "diagnose": ["diagnose", "--body", "square", "--steps", "2000", "--oracle", "5000", "--out", "{d}/d.json"],
    "benchmark": ["benchmark", "--body", "square", "--walks", "dikin,hitrun,ball", "--ball-radius", "0.5",
                  "--steps", "2000", "--out", "{d}/b.json"],
    "product-experiment": ["product-experiment", "--factor", "interval", "--copies", "1,2", "--steps", "2000",
                           "--out", "{d}/p.json"],
    "replay": ["replay", "--manifest", "{d}/s.manifest.json", "--out", "{d}/r.csv"],
}


def _materialize(argv, d):
    out = []
    for i, a in enumerate(argv):
        if i > 0 and argv[i - 1] in ("--body", "--factor"):
            a = str(example_path(a))
        out.append(a.replace("{d}", str(d)))
    return out


def test_12_reproducibility(tmp_path, monkeypatch):
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "1700000000")
    differing = []
    for name, argv in CLI_CASES.items():
        d = tmp_path / name
        d.mkdir()
        if name == "replay":
            cli_main(_materialize(CLI_CASES["sample"], d))
        snaps = []
        for _ in range(2):
            code = cli_main(_materialize(argv, d))
            snaps.append((code, {p.name: p.read_bytes() for p in sorted(d.iterdir())}))
        if snaps[0] != snaps[1] or snaps[0][0] != 0:
            differing.append(name)
    record(12, "reproducibility", not differing,
           f"{len(CLI_CASES)} subcommands, differing or failing: {differing or 'none'}")
