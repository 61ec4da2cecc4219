"""Acceptance criteria 1-8, each checked at its stated tolerance.

Every test records one PASS/FAIL line; the lines are printed in the pytest
terminal summary (and immediately with ``-s``).
"""

import math
import time

import numpy as np
import pytest

from cornercert.certifier import (
    Grid,
    certified_frontier,
    certify_global_batch,
    certify_local,
    certify_region,
    corner_frontiers,
    corner_oracle,
    frontier_gap,
    region_masks,
    robust_oracle,
    ROBUST,
)
from cornercert.construction import build, certify_distance_field, verify_pairwise_lipschitz
from cornercert.datagen import generate
from cornercert.geometry import corner_ratio
from cornercert.lipschitz import pair_bounds
from cornercert.network import forward, make_minimal_corner_net
from cornercert.certifier import vra

from conftest import ACCEPTANCE_LINES, random_net, relu_corner_net, scaled_corner_net, trained
from test_geometry import mc_ball_fraction
from test_network import _fd_check


def report(n, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {n}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def test_criterion_1_minimal_net_exactness():
    t0 = time.perf_counter()
    net = make_minimal_corner_net()
    x = np.random.default_rng(0).uniform(-10, 10, size=(1_000_000, 2))
    out = forward(net, x)
    exact = np.array_equal(out[:, 0], np.zeros(len(x))) and np.array_equal(out[:, 1], x.max(axis=1))
    k10 = pair_bounds(net).K(1, 0)
    dt = time.perf_counter() - t0
    ok = exact and abs(k10 - 1.0) <= 1e-9 and dt < 5.0
    report(1, ok, f"forward exact on 1e6 points={exact}, K10={k10:.12f}, {dt:.2f}s (<5s)")


def test_criterion_2_corner_area_and_ratio():
    t0 = time.perf_counter()
    net = make_minimal_corner_net()
    mask = region_masks(net, pair_bounds(net), corner_oracle(), 0.5, (0.0, 1.5, 0.0, 1.5), 512)
    area = mask.area(ROBUST)
    exact_area = (1 - math.pi / 4) * 0.25
    r2 = corner_ratio(2)
    n = 10_000_000
    mc = mc_ball_fraction(2, n=n, seed=2)
    sigma = math.sqrt(r2 * (1 - r2) / n)
    dt = time.perf_counter() - t0
    ok = (abs(area - 0.05365) <= 0.002 and abs(r2 - 0.785398) <= 1e-6
          and abs(mc - r2) <= 5 * sigma and dt < 30)
    report(2, ok, f"robust-uncertified area={area:.6f} (exact {exact_area:.6f}, +-0.002); "
                  f"corner_ratio(2)={r2:.7f} (+-1e-6), MC(1e7)={mc:.6f} within {abs(mc - r2) / sigma:.1f} sigma; "
                  f"{dt:.1f}s (<30s)")


def test_criterion_3_ratio_trend():
    ratios = [corner_ratio(d) for d in range(2, 21)]
    decreasing = all(a > b for a, b in zip(ratios, ratios[1:]))
    r10 = corner_ratio(10)
    n = 10_000_000
    mc = mc_ball_fraction(10, n=n, seed=10)
    sigma = math.sqrt(r10 * (1 - r10) / n)
    ok = decreasing and abs(r10 - 0.0024904) <= 1e-6 and abs(mc - r10) <= 5 * sigma
    report(3, ok, f"strictly decreasing d=2..20={decreasing}; corner_ratio(10)={r10:.7f} (+-1e-6), "
                  f"MC(1e7)={mc:.7f} within {abs(mc - r10) / sigma:.1f} sigma")


def test_criterion_4_distance_field_construction():
    t0 = time.perf_counter()
    fc = build(corner_oracle(), 2)
    ratio = verify_pairwise_lipschitz(fc, 100_000, seed=0)
    box = (-2.0, 2.0, -2.0, 2.0)
    grid = Grid(box, 512)
    pts = grid.centers().reshape(-1, 2)
    cert = certify_distance_field(fc, pts, 0.5)
    robust, dist = robust_oracle("corner", pts, 0.5)
    band = np.abs(dist - 0.5) <= grid.cell_diagonal
    disagree = int(((cert != robust) & ~band).sum())
    dt = time.perf_counter() - t0
    ok = ratio <= 1 + 1e-9 and disagree == 0 and dt < 60
    report(4, ok, f"max pairwise ratio={ratio:.12f} (<=1+1e-9); disagreements outside band={disagree} "
                  f"of {len(pts)} cells; {dt:.1f}s (<60s)")


def test_criterion_5_pll_witness():
    net = make_minimal_corner_net()
    box = (-2.0, 2.0, -2.0, 2.0)
    tol = Grid(box, 512).cell_diagonal
    cf = certified_frontier(net, pair_bounds(net), 0.5, box, 512)
    rf = corner_frontiers(0.5, box, 512)
    cv = np.concatenate([p.vertices for p in cf])
    rv = np.concatenate([p.vertices for p in rf])
    cq = cv[(cv > 0).all(axis=1)]
    rq = rv[(rv > 0).all(axis=1)]
    c_err = float(np.abs(cq.max(axis=1) - 0.5).max())
    r_err = float(np.abs(np.hypot(rq[:, 0], rq[:, 1]) - 0.5).max())
    gap = frontier_gap(cf, rf)
    want = (math.sqrt(2) - 1) * 0.5
    ok = len(cq) > 0 and len(rq) > 0 and c_err <= tol and r_err <= tol and abs(gap - want) <= 0.02
    report(5, ok, f"certified |max-0.5|<={c_err:.2e}, robust |norm-0.5|<={r_err:.2e} (cell diag {tol:.2e}); "
                  f"diagonal gap={gap:.6f} vs {want:.6f} (+-0.02)")


def test_criterion_6_local_lipschitz_witness():
    net = make_minimal_corner_net()
    x = np.array([0.4, 0.4])
    local = certify_local(net, x, 0.5)
    robust, d = robust_oracle("corner", x, 0.5)
    ok = (not local.certified) and robust
    report(6, ok, f"certify_local certified={local.certified} (K_eps={local.constant_used:.3f}); "
                  f"oracle robust={robust} (distance {d:.5f})")


@pytest.mark.slow
def test_criterion_7_capacity_trend():
    t0 = time.perf_counter()
    seeds = (0, 1, 2)
    means, acc_ok = {}, True
    for hidden in (2, 20, 200):
        vals = []
        for s in seeds:
            ds, net, rep = trained(hidden, s)
            acc, v = rep.rows[-1]["accuracy"], rep.rows[-1]["vra"]
            acc_ok &= acc >= v
            vals.append(v)
        means[hidden] = float(np.mean(vals))
    dt = time.perf_counter() - t0
    ok = means[2] < means[20] < means[200] and means[200] >= 0.95 and acc_ok and dt < 600
    report(7, ok, "mean VRA over seeds 0-2: " + ", ".join(f"{h} units={v:.4f}" for h, v in means.items())
           + f"; accuracy>=VRA for every run={acc_ok}; {dt:.0f}s (<600s)")


def test_criterion_8_soundness_suite():
    nets = {"minimal": make_minimal_corner_net(), "relu-corner": relu_corner_net(),
            "redundant-minmax": scaled_corner_net()}
    grids = [((-2.0, 2.0, -2.0, 2.0), 512), ((0.0, 1.5, 0.0, 1.5), 256), ((-0.7, 0.9, -1.1, 0.6), 300)]
    unsound, checked = 0, 0
    for net in nets.values():
        bound = pair_bounds(net)
        for eps in (0.1, 0.25, 0.5, 1.0):
            for box, res in grids:
                mask = region_masks(net, bound, corner_oracle(), eps, box, res)
                unsound += int((mask.certified & ~mask.robust).sum())
                checked += mask.certified.size
            for seed in range(3):
                ds = generate(0.5, 1000, seed, 2.0)
                cert = certify_global_batch(net, bound, ds.points, eps)["certified"]
                robust, _ = robust_oracle("corner", ds.points, eps)
                unsound += int((cert & ~robust).sum())
                checked += len(cert)
        pts = np.random.default_rng(0).uniform(-2, 2, size=(500, 2))
        for p in pts:
            for eps in (0.1, 0.5):
                if certify_region(net, p, eps).certified and not robust_oracle("corner", p, eps)[0]:
                    unsound += 1
                checked += 1
    archs = {"minmax 2-20-2": random_net([2, 20, 2], "minmax", 11),
             "relu 2-16-2": random_net([2, 16, 2], "relu", 11),
             "minmax 2-8-8-3": random_net([2, 8, 8, 3], "minmax", 11),
             "relu corner 2-3-2": relu_corner_net(),
             "minimal 2-2-2": make_minimal_corner_net()}
    worst = {name: _fd_check(net, 100) for name, net in archs.items()}
    grad_ok = all(w <= 1e-4 for w in worst.values())
    ok = unsound == 0 and grad_ok
    report(8, ok, f"certified-but-non-robust={unsound} of {checked} checks; worst gradient rel. error "
                  f"{max(worst.values()):.1e} over {len(archs)} architectures x 100 points (<=1e-4)")
