"""Layer-by-layer exploration: kernel mass, invariants, marginal agreement."""

import numpy as np
import pytest
from scipy.stats import ks_2samp

from peelmap import model as M
from peelmap.layers import (
    LayerState,
    height_growth_check,
    kernel_mass_check,
    layer_step,
    run_layers,
)
from peelmap.peel import PeelState, peel_step
from peelmap.sampler import make_rng


@pytest.fixture(scope="module", params=[1.75, 2.25])
def model(request):
    return M.make_special_model(request.param)


def test_kernel_mass_sums_to_one(model):
    for p, ell in [(1, 1), (1, 2), (2, 4), (5, 3), (8, 16), (7, 1), (12, 5),
                   (30, 30), (30, 60)]:
        lines, total = kernel_mass_check(model, p, ell)
        assert total == pytest.approx(1.0, abs=1e-10), (p, ell)
        assert all(x >= 0.0 for x in lines)


def test_kernel_mass_rejects_bad_state(model):
    with pytest.raises(ValueError):
        kernel_mass_check(model, 3, 0)
    with pytest.raises(ValueError):
        kernel_mass_check(model, 3, 7)


def test_layer_invariants(model):
    rng = make_rng(14, 0)
    s = LayerState()
    for _ in range(4000):
        s2 = layer_step(s, rng, model, shortcut_threshold=4096)
        assert 1 <= s2.D <= 2 * s2.P
        assert s2.H >= s.H
        assert s2.H <= s.H + 1
        assert s2.V >= s.V
        assert s2.i == s.i + 1
        s = s2


def test_perimeter_marginal_matches_plain_peel(model):
    # both chains peel the same map, so P after n events agrees in law
    n, runs = 128, 900
    peel_P, layer_P = [], []
    for r in range(runs):
        rng = make_rng(400, r)
        s = PeelState(0, 1, 0)
        for _ in range(n):
            s = peel_step(s, rng, model, shortcut_threshold=64)
        peel_P.append(s.P)
        rng = make_rng(900, r)
        t = LayerState()
        for _ in range(n):
            t = layer_step(t, rng, model, shortcut_threshold=64)
        layer_P.append(t.P)
    stat, p = ks_2samp(peel_P, layer_P)
    assert p > 0.001, f"KS={stat:.3f} p={p:.2g}"


def test_run_layers_records(model):
    records, exhausted = run_layers(model, 9, 6, 4, max_steps=1 << 18,
                                    shortcut_threshold=4096)
    by_rep = {}
    for rec in records:
        by_rep.setdefault(rec.replica, []).append(rec)
    for rep, rows in by_rep.items():
        rows.sort(key=lambda r: r.r)
        assert [r.r for r in rows] == list(range(1, len(rows) + 1))
        theta = [r.theta_r for r in rows]
        assert all(b > a for a, b in zip(theta, theta[1:]))
        vols = [r.V_theta for r in rows]
        assert all(b >= a for a, b in zip(vols, vols[1:]))


def test_run_layers_deterministic(model):
    a = run_layers(model, 12, 4, 3, max_steps=1 << 17, shortcut_threshold=4096)
    b = run_layers(model, 12, 4, 3, max_steps=1 << 17, shortcut_threshold=4096)
    assert a == b
    c = run_layers(model, 12, 4, 3, max_steps=1 << 17, shortcut_threshold=4096,
                   threads=3)
    assert a == c


def test_height_growth_dilute_only():
    dense = M.make_special_model(1.75)
    with pytest.raises(ValueError):
        height_growth_check(dense, 1, 100, 2)
