"""Acceptance criteria 1-10, each at its stated tolerance and time budget."""
import json
import math
import os
import re
import subprocess
import sys
import time

import numpy as np
import pytest

from hlab.counterexample import LacunarySeries, evaluate, quotient_statistics
from hlab.dyadic import CubeFamily, DyadicCube, frostman_measure, regularize
from hlab.experiments import (
    ExperimentConfig,
    adams_trials,
    diam_trials,
    holder_split,
    phi_identity_check,
    run_distortion_experiment,
    run_nstar_slice_check,
    stability_report,
)
from hlab.exponents import DistortionParams, beta_bar, mu_q, sigma, tau_star
from hlab.fractal import cantor_set, lorentz_norm_p1
from hlab.grid import GridFunction
from hlab.kernels import bessel_table, full_table
from hlab.operators import maximal, riesz_potential_at

LOG3_2 = math.log(2) / math.log(3)
ROOT_LEVEL = 4


class Timer:
    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.start


# ---------------------------------------------------------------------------
# 1. exponents


@pytest.mark.acceptance(1)
def test_exponent_suite():
    rng = np.random.default_rng(1)
    with Timer() as t:
        checked = 0
        while checked < 50:
            n = int(rng.integers(1, 7))
            alpha = float(rng.uniform(0.2, 4.0))
            p = float(rng.uniform(1.05, 8.0))
            if not alpha * p > n:
                continue
            checked += 1
            params = DistortionParams(n, alpha, p)
            ts = n - (alpha - 1) * p
            taus = np.linspace(n / 10_000, n, 10_000)
            expected = np.where(taus >= ts, taus, p * taus / (alpha * p - n + taus))
            assert np.array_equal(sigma(params, taus), expected)
            assert tau_star(params) == ts
            if 0 < ts <= n:
                lower = p * ts / (alpha * p - n + ts)
                assert abs(lower - ts) <= 1e-12 * max(1.0, ts)
                assert sigma(params, ts) == ts
        for _ in range(200):
            n = int(rng.integers(1, 8))
            m = int(rng.integers(1, n + 1))
            k = int(rng.integers(1, 5))
            a = float(rng.uniform(0, 1))
            assert abs(mu_q(n, m, k, a, beta_bar(n, m, k, a))) <= 1e-12
        n, m, k = 4, 1, 2
        assert mu_q(n, m, k, 0.0, m - 1) == n - m + 1
        assert mu_q(n, m, k, 0.0, m) == n - m - k + 1
        assert mu_q(n, m, k, 0.0, beta_bar(n, m, k, 0.0)) == 0
    assert t.elapsed < 1.0


# ---------------------------------------------------------------------------
# 2. regularization


def _random_family(rng, n, max_level=12):
    count = int(rng.integers(1, 21))
    cubes = []
    for _ in range(count):
        lv = int(rng.integers(0, max_level + 1))
        cubes.append(DyadicCube(lv, tuple(int(k) for k in rng.integers(0, 2 ** lv, n))))
    return cubes


def _packing_brute_force(cubes, tau):
    """Sum member weights into every ancestor down to the root level."""
    sums = {}
    for c in cubes:
        w = c.side ** tau
        for lv in range(c.level, -ROOT_LEVEL - 1, -1):
            key = c.ancestor(lv)
            sums.setdefault(key, []).append(w)
    return all(math.fsum(ws) <= q.side ** tau * (1 + 1e-12) for q, ws in sums.items())


@pytest.mark.acceptance(2)
def test_regularization_suite():
    rng = np.random.default_rng(2)
    with Timer() as t:
        for _ in range(1000):
            n = int(rng.choice([1, 2]))
            tau = float(rng.uniform(0.1, n))
            fam = CubeFamily(_random_family(rng, n), tau)
            reg = regularize(fam)
            for c in fam.cubes:
                assert any(q.contains(c) for q in reg.cubes)
            assert reg.tau_weight <= fam.tau_weight * (1 + 1e-12)
            for i, a in enumerate(reg.cubes):
                for b in reg.cubes[i + 1:]:
                    assert not a.overlaps(b)
            assert _packing_brute_force(reg.cubes, tau)
            assert regularize(reg).cubes == reg.cubes
    assert t.elapsed < 10.0


# ---------------------------------------------------------------------------
# 3. Frostman measures


@pytest.mark.acceptance(3)
def test_frostman_suite():
    rng = np.random.default_rng(3)
    with Timer() as t:
        for _ in range(200):
            n = int(rng.choice([1, 2]))
            tau = float(rng.uniform(0.1, n))
            reg = regularize(CubeFamily(_random_family(rng, n, 10), tau))
            mu = frostman_measure(reg)
            for c in reg.cubes:
                assert mu.mass(c) == pytest.approx(c.side ** tau, rel=1e-12)
            anc = {c.ancestor(lv) for c in reg.cubes for lv in range(c.level, -ROOT_LEVEL - 1, -1)}
            anc = sorted(anc)
            m = mu.masses([q.level for q in anc], [q.coords for q in anc])
            caps = np.array([q.side ** tau for q in anc])
            assert np.all(m <= caps * (1 + 1e-12))
            levels = rng.integers(0, 15, 10_000)
            coords = (rng.random((10_000, n)) * (2.0 ** levels)[:, None]).astype(np.int64)
            m = mu.masses(levels, coords)
            assert np.all(m <= np.exp2(-levels * tau) * (1 + 1e-12))
            assert mu.total_mass == pytest.approx(reg.tau_weight, rel=1e-12)
    assert t.elapsed < 10.0


# ---------------------------------------------------------------------------
# 4. operator closed forms


@pytest.mark.acceptance(4)
def test_operator_closed_forms():
    with Timer() as t:
        f = GridFunction.from_function(lambda c: (np.abs(c[..., 0]) <= 1).astype(float), 1, (-2.0,), 4.0, 1024)
        assert riesz_potential_at(f, 0.5, [0.0])[0] == pytest.approx(4.0, abs=0.01)

        h = 1 / 256
        g = GridFunction.from_function(
            lambda c: ((c[..., 0] >= 0) & (c[..., 0] <= 1)).astype(float), 1, (-4 - h / 2,), 8.0, 2048
        )
        i = g.index_of([[2.0]])[0, 0]
        assert g.centers()[i, 0] == 2.0
        assert maximal(g).values[i] == pytest.approx(0.25, abs=0.02)

        for alpha in (0.5, 1.5):
            mass = full_table(bessel_table(alpha, 1, 1 / 64, 64 * 30)).sum()
            assert mass == pytest.approx(1.0, abs=1e-3)

        rng = np.random.default_rng(4)
        for _ in range(20):
            vals = (rng.random(256) < 0.3).astype(float)
            e = GridFunction(1, (0.0,), 4.0, 256, vals)
            meas = vals.sum() * e.cell_volume
            p = float(rng.uniform(1.1, 6))
            assert lorentz_norm_p1(e, p) == meas ** (1 / p)
        for _ in range(100):
            vals = rng.standard_normal(256) * rng.random(256) ** 3
            fgrid = GridFunction(1, (0.0,), 1.0, 256, vals)
            p = float(rng.uniform(1.1, 6))
            assert fgrid.lp_norm(p) <= lorentz_norm_p1(fgrid, p) + 1e-6
    assert t.elapsed < 30.0


# ---------------------------------------------------------------------------
# 5. Adams ratio stability


@pytest.mark.acceptance(5)
@pytest.mark.parametrize("mode", ["riesz", "maximal", "lorentz"])
def test_adams_stability(mode):
    with Timer() as t:
        rep = stability_report(adams_trials, mode, 1024, 100, seed=5)
    assert math.isfinite(rep["max_ratio"]) and rep["max_ratio"] > 0
    assert rep["refinement_factor"] < 2
    assert rep["trials_factor"] < 2
    assert t.elapsed < 300 / 3


# ---------------------------------------------------------------------------
# 6. diameter bound stability


@pytest.mark.acceptance(6)
@pytest.mark.parametrize("mode", ["riesz", "maximal"])
def test_diameter_stability(mode):
    with Timer() as t:
        rep = stability_report(diam_trials, mode, 1024, 200, seed=6, alpha=2.0, p=3.0)
        zero = diam_trials(mode, 1024, 10, seed=6, alpha=2.0, p=3.0, zero=True)
    assert math.isfinite(rep["max_ratio"]) and rep["max_ratio"] > 0
    assert rep["refinement_factor"] < 2
    assert all(r == 0 for r in zero["ratios"])
    assert t.elapsed < 300 / 2


# ---------------------------------------------------------------------------
# 7. dimension distortion


@pytest.mark.acceptance(7)
def test_dimension_distortion():
    with Timer() as t:
        ident = run_distortion_experiment(ExperimentConfig(scenario="cantor_identity"))
        assert abs(ident["dim_E"]["slope"] - LOG3_2) <= 0.05
        assert abs(ident["dim_vE"]["slope"] - LOG3_2) <= 0.05
        assert ident["co_decay_ok"]

        hold = run_distortion_experiment(ExperimentConfig(scenario="cantor_holder", gamma=0.5))
        assert hold["dim_vE"]["slope"] <= 2 * hold["dim_E"]["slope"] + 0.05

        bes = run_distortion_experiment(
            ExperimentConfig(scenario="cantor_bessel", params=DistortionParams(1, 1.5, 2.0), seed=7)
        )
        assert bes["tau"] == pytest.approx(bes["dim_E"]["slope"])
        for row in bes["levels"]:
            assert row["sigma_sum"] <= 4 * row["predicted_sigma_sum"]
        assert bes["dim_vE"]["slope"] <= bes["sigma"] + 0.1
    assert t.elapsed < 600


# ---------------------------------------------------------------------------
# 8. Phi and the slice Hoelder split


@pytest.mark.acceptance(8)
def test_phi_and_nstar():
    with Timer() as t:
        for E in (cantor_set(1 / 3, 12), cantor_set(0.25, 10, mode="uniform-sample", seed=8)):
            for s in (0.3, LOG3_2, 0.9):
                for phi, content in phi_identity_check(E, s, range(0, 12)).values():
                    assert phi == content
        for scenario in ("cantor_identity", "cantor_holder", "cantor_bessel"):
            cfg = ExperimentConfig(scenario=scenario, seed=8)
            sig = run_distortion_experiment(cfg)["sigma"]
            for frac in (0.1, 0.5, 0.9, 1.0):
                rep = run_nstar_slice_check(cfg, frac * sig)
                assert rep["all_hold"]
                for row in rep["rows"]:
                    assert row["lhs"] <= row["rhs"] * (1 + 1e-12)
        # random covers too: the split is Hoelder's inequality on finite sums
        rng = np.random.default_rng(8)
        for _ in range(200):
            k = int(rng.integers(1, 200))
            sides = 2.0 ** -rng.integers(0, 14, k)
            diams = rng.random(k) * rng.random() * 3
            tau, sig = float(rng.uniform(0.1, 1)), float(rng.uniform(0.1, 2))
            q = float(rng.uniform(0, 1)) * sig
            if q == 0:
                continue
            assert holder_split(sides, diams, tau, sig, q)["holds"]
    assert t.elapsed < 60


# ---------------------------------------------------------------------------
# 9. counterexample regression


@pytest.mark.acceptance(9)
def test_counterexample_regression():
    with Timer() as t:
        series = LacunarySeries(sigma=0.4)
        rng = np.random.default_rng(9)
        xs = rng.uniform(-3, 3, 1000)
        m = series.truncation
        assert np.all(np.abs(evaluate(series, xs, m + 5) - evaluate(series, xs, m)) <= series.tail_bound())
        assert np.array_equal(evaluate(series, xs), evaluate(series, -xs))
        scales = [5.0 ** -j for j in range(6, 11)]
        rough = quotient_statistics(series, n_points=200, scales=scales, seed=0)
        smooth = quotient_statistics(np.sin, n_points=200, scales=scales, seed=0)
        for rec in rough["points"]:
            pts = np.array([rec["x"]] + [rec["x"] + h for h in rec["scales"]])
            assert np.all(np.abs(evaluate(series, pts, m + 5) - evaluate(series, pts, m)) <= series.tail_bound())
        assert rough["median_oscillation"] >= 10 * smooth["median_oscillation"]
    assert t.elapsed < 60


# ---------------------------------------------------------------------------
# 10. determinism

_TIMESTAMP = re.compile(r'^\s*"generated_at": .*\n', re.MULTILINE)

DETERMINISM_COMMANDS = [
    ["exponents", "--n", "4", "--alpha", "2", "--p", "3", "--tau", "0.5", "--k", "2", "--m", "1", "--q", "1"],
    ["estimate-dim", "--levels", "4..10"],
    ["distortion", "--scenario", "cantor_identity", "--seed", "10"],
    ["distortion", "--scenario", "cantor_holder", "--seed", "10"],
    ["distortion", "--scenario", "cantor_bessel", "--seed", "10"],
    ["phi", "--mu", "0.2", "--q", "0.5", "--levels", "4..9"],
    ["adams-check", "--mode", "riesz", "--trials", "20", "--seed", "10"],
    ["adams-check", "--mode", "lorentz", "--trials", "20", "--seed", "10", "--workers", "4"],
    ["diam-check", "--mode", "maximal", "--trials", "20", "--seed", "10", "--workers", "4"],
    ["counterexample", "--points", "50", "--seed", "10"],
]


def _run_all(cache_dir, tmp_path):
    env = dict(os.environ, HLAB_CACHE_DIR=str(cache_dir))
    fam = tmp_path / "family.json"
    fam.write_text(json.dumps({"tau": 0.5, "cubes": [{"level": 1, "coords": [0]}, {"level": 1, "coords": [1]}]}))
    outputs = []
    commands = DETERMINISM_COMMANDS + [["regularize", "--input", str(fam)]]
    for argv in commands:
        proc = subprocess.run(
            [sys.executable, "-m", "hlab.cli", *argv], capture_output=True, text=True, env=env, check=False
        )
        assert proc.returncode == 0, proc.stderr
        outputs.append(proc.stdout)
    return outputs


@pytest.mark.acceptance(10)
def test_determinism(tmp_path):
    cache = tmp_path / "cache"
    first = _run_all(cache, tmp_path)  # builds kernel tables
    second = _run_all(cache, tmp_path)  # reads them back from disk
    for a, b in zip(first, second):
        assert "generated_at" in a
        assert _TIMESTAMP.sub("", a) == _TIMESTAMP.sub("", b)
        rep = json.loads(a)
        assert rep["version"]
