"""One test per acceptance criterion; each prints a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s``; the lines are also
collected in the terminal summary.
"""
import itertools
import math
import time

import numpy as np
import pytest

from permsphere.assignment import assignment_cost, assign
from permsphere.directional import (
    VonMisesFisher,
    bessel_ratio,
    inv_bessel_ratio,
    log_density,
)
from permsphere.embedding import (
    build_basis,
    from_sphere,
    lift,
    project,
    to_sphere,
)
from permsphere.filter import (
    FilterState,
    PartialObservation,
    update_full,
    update_partial,
)
from permsphere.harness.cli import main
from permsphere.harness.experiments import SyntheticConfig, run_synthetic, run_tracking
from permsphere.harness.trajectories import SwapModelParams, generate_trajectories

from conftest import all_perm_matrices, brute_force_lap, random_unit

pytestmark = pytest.mark.acceptance


def test_criterion_1_geometry(acceptance_log):
    start = time.perf_counter()
    worst_radius = worst_ortho = 0.0
    failures = 0
    for n in range(2, 7):
        basis = build_basis(n)
        worst_ortho = max(worst_ortho, np.abs(basis.Q.T @ basis.Q - np.eye(basis.dim)).max())
        mats = all_perm_matrices(n)
        radius = np.linalg.norm(mats.reshape(len(mats), -1) - 1.0 / n, axis=1)
        worst_radius = max(worst_radius, np.abs(radius - math.sqrt(n - 1)).max())
        failures += sum(not np.array_equal(from_sphere(to_sphere(P, basis), basis), P) for P in mats)
    elapsed = time.perf_counter() - start
    ok = worst_radius <= 1e-12 and worst_ortho <= 1e-10 and failures == 0 and elapsed < 30
    acceptance_log(1, ok, f"radius dev {worst_radius:.1e}, |Q^TQ-I| {worst_ortho:.1e}, "
                          f"round-trip failures {failures}, {elapsed:.1f}s")
    assert ok


def test_criterion_2_nearest_permutation(acceptance_log, rng):
    start = time.perf_counter()
    mismatches = 0
    for n in range(2, 8):
        basis = build_basis(n)
        mats = all_perm_matrices(n)
        for y in random_unit(rng, basis.dim, size=100):
            T = lift(y, basis)
            dist = np.linalg.norm((mats - T).reshape(len(mats), -1), axis=1)
            mismatches += not np.array_equal(from_sphere(y, basis), mats[int(np.argmin(dist))])
    elapsed = time.perf_counter() - start
    ok = mismatches == 0 and elapsed < 120
    acceptance_log(2, ok, f"{mismatches} mismatches over 600 points (n=2..7), {elapsed:.1f}s")
    assert ok


def test_criterion_3_assignment(acceptance_log, rng):
    mismatches = 0
    for _ in range(500):
        C = rng.standard_normal((7, 7))
        best, _ = brute_force_lap(C)
        mismatches += assignment_cost(C, assign(C)) != best
    acceptance_log(3, mismatches == 0, f"{mismatches}/500 objectives differ from brute force")
    assert mismatches == 0


def _sphere_integral(kappa):
    # Gauss-Legendre in cos(theta) times the trapezoid rule in phi (exact for
    # the band-limited azimuthal part); mu is tilted off the pole
    t, w = np.polynomial.legendre.leggauss(400)
    phi = np.linspace(0, 2 * np.pi, 256, endpoint=False)
    ct, ph = np.meshgrid(t, phi, indexing="ij")
    st = np.sqrt(1 - ct**2)
    pts = np.stack([st * np.cos(ph), st * np.sin(ph), ct], axis=-1).reshape(-1, 3)
    mu = np.array([0.48, -0.6, 0.64])
    vals = np.exp(log_density(VonMisesFisher(mu, kappa), pts)).reshape(ct.shape)
    return float((vals.sum(axis=1) * (2 * np.pi / len(phi)) * w).sum())


def test_criterion_4_special_functions(acceptance_log):
    closed = max(
        abs(bessel_ratio(3, k) - (1 / math.tanh(k) - 1 / k)) / (1 / math.tanh(k) - 1 / k)
        for k in (0.1, 1, 10, 100)
    )
    roundtrip = max(
        abs(inv_bessel_ratio(d, bessel_ratio(d, k)) - k) / k
        for d in (3, 16, 576)
        for k in (0.1, 1, 10, 100, 1000)
    )
    mass = max(abs(_sphere_integral(k) - 1) for k in (0.5, 2, 20))
    ok = closed <= 1e-10 and roundtrip <= 1e-8 and mass <= 1e-6
    acceptance_log(4, ok, f"A_3 rel err {closed:.1e}, inverse rel err {roundtrip:.1e}, "
                          f"S^2 mass err {mass:.1e}")
    assert ok


def test_criterion_5_filter_algebra(acceptance_log, rng):
    n = 4
    basis = build_basis(n)
    spread = 0.0
    for _ in range(10):
        mu, y = random_unit(rng, basis.dim, size=2)
        k_pos, k_obs = rng.uniform(0.5, 20, size=2)
        post = update_full(FilterState(n, VonMisesFisher(mu, k_pos)), y, k_obs)
        xs = random_unit(rng, basis.dim, size=100)
        resid = (log_density(post.posterior, xs)
                 - log_density(VonMisesFisher(y, k_obs), xs)
                 - log_density(VonMisesFisher(mu, k_pos), xs))
        spread = max(spread, float(resid.max() - resid.min()))

    n = 6
    basis = build_basis(n)
    gap = 0.0
    for _ in range(20):
        state = FilterState(n, VonMisesFisher(random_unit(rng, basis.dim), rng.uniform(0, 30)))
        P = np.eye(n)[rng.permutation(n)]
        a = update_partial(state, PartialObservation.from_permutation(P), 3.0, basis)
        b = update_full(state, to_sphere(P, basis), 3.0)
        gap = max(gap, float(np.abs(a.mu - b.mu).max()), abs(a.kappa - b.kappa))
    ok = spread <= 1e-9 and gap <= 1e-12
    acceptance_log(5, ok, f"log-density residual spread {spread:.1e}, partial vs full gap {gap:.1e}")
    assert ok


def test_criterion_6_synthetic_trends(acceptance_log):
    start = time.perf_counter()
    final = {}
    cells = [(nu, 0.0) for nu in (0.1, 0.5, 0.9)] + [(0.3, m) for m in (0.0, 0.2, 0.4, 0.6)]
    for nu, m in cells:
        row = run_synthetic(SyntheticConfig(n=25, steps=100, nu=nu, missing_frac=m, repeats=10)).final()
        final[nu, m] = (row.mean_error, row.std_error / math.sqrt(row.repeats))
    elapsed = time.perf_counter() - start

    def non_decreasing(keys):
        return all(final[a][0] <= final[b][0] + max(final[a][1], final[b][1])
                   for a, b in zip(keys, keys[1:]))

    low = final[0.1, 0.0][0]
    ok = (low <= 0.05 and non_decreasing([(nu, 0.0) for nu in (0.1, 0.5, 0.9)])
          and non_decreasing([(0.3, m) for m in (0.0, 0.2, 0.4, 0.6)]) and elapsed < 600)
    table = ", ".join(f"nu={nu} m={m}: {final[nu, m][0]:.3f}" for nu, m in cells)
    acceptance_log(6, ok, f"{table}; {elapsed:.0f}s")
    assert ok


@pytest.mark.parametrize("objects,bound", [(6, 0.17), (10, 0.32)])
def test_criterion_7_tracking(acceptance_log, objects, bound):
    data = generate_trajectories(objects, 200, np.random.default_rng([0, 7]))
    row = run_tracking(data, SwapModelParams(p_swap=0.1, s=0.1), 0.3, 0.2, repeats=10).final()
    ok = row.mean_error <= bound
    acceptance_log(7, ok, f"{objects} objects: mean error {row.mean_error:.3f} (bound {bound})")
    assert ok


def test_criterion_8_scale(acceptance_log):
    start = time.perf_counter()
    row = run_synthetic(SyntheticConfig(n=50, steps=100, nu=0.3, missing_frac=0.2, repeats=1)).final()
    elapsed = time.perf_counter() - start
    ok = elapsed < 300
    acceptance_log(8, ok, f"n=50, 100 steps in {elapsed:.1f}s (final error {row.mean_error:.3f})")
    assert ok


def test_criterion_9_determinism(acceptance_log, tmp_path):
    commands = {
        "calibrate": ["calibrate", "--n", "8", "--nu", "0.3", "--seed", "11"],
        "synthetic": ["synthetic", "--n", "8", "--steps", "10", "--nu", "0.1,0.5",
                      "--missing", "0,0.4", "--repeats", "3", "--seed", "11"],
        "track": ["track", "--generate", "5,60", "--nu", "0.3", "--missing", "0.2",
                  "--repeats", "3", "--seed", "11"],
        "roundtrip-check": ["roundtrip-check", "--n", "8", "--seed", "11"],
    }
    differing = []
    for name, argv in commands.items():
        outputs = []
        for k in range(2):
            out = tmp_path / f"{name}-{k}.csv"
            assert main(argv + ["--out", str(out)]) == 0
            outputs.append(out.read_bytes())
        if outputs[0] != outputs[1] or not outputs[0]:
            differing.append(name)
    ok = not differing
    acceptance_log(9, ok, "all subcommands byte-identical" if ok else f"differ: {differing}")
    assert ok
