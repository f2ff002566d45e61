"""Peeling by layers: the (P, D, H) chain.

H is the smallest dual-graph height among faces on the hole boundary and D
counts hole-boundary edges still at height H.  A layer completes exactly
when D resets to 2P with H incremented; the step index of that reset gives
hull perimeter/volume as a function of the radius.
"""

from dataclasses import dataclass

import numpy as np

from . import _chains as _ch
from .model import Phase
from .peel import EXACT, MAX_DISK_WORK, _check_status, _run_replicas, boltzmann_volume
from .sampler import get_tables, make_rng, peel_step_infinite


@dataclass
class LayerState:
    i: int = 0
    P: int = 1
    D: int = 2
    H: int = 0
    V: int = 0


@dataclass
class LayerRecord:
    replica: int
    r: int
    theta_r: int
    P_theta: float
    V_theta: float


def layer_step(state: LayerState, rng, model,
               shortcut_threshold: int | None = None) -> LayerState:
    """One step of the layer chain, routed through the peeling event.

    Face of half-degree k: (P+k-1, D-1, H).  Gluing a bubble of
    half-perimeter j removes j+1 boundary edges on one side of the peel
    edge; on the near side that eats min(D, 2(j+1)) of the current
    layer's edges, on the far side one.  Whenever the current layer runs
    out (or D was 1 before the step), D resets to twice the new
    half-perimeter and H increments.
    """
    P, D, H, V = state.P, state.D, state.H, state.V
    if not (1 <= D <= 2 * P):
        raise ValueError(f"invalid layer state D={D}, P={P}")
    ev = peel_step_infinite(rng, model, P)
    if ev.kind == "face":
        P += ev.value - 1
        if D == 1:
            D, H = 2 * P, H + 1
        else:
            D -= 1
    else:
        j = ev.value
        V += boltzmann_volume(rng, model, j, shortcut_threshold)
        k = j + 1  # boundary edges swallowed on the glued side
        P -= k
        if D == 1:
            D, H = 2 * P, H + 1
        elif ev.kind == "glue_left":
            if 2 * k < D:
                D -= 2 * k
            else:
                D, H = 2 * P, H + 1
        else:
            if 2 * P <= D - 1:
                D = 2 * P
            else:
                D -= 1
    return LayerState(state.i + 1, P, D, H, V)


def kernel_mass_check(model, p: int, ell: int):
    """Total probability routed through the five kernel lines at (p, ell).

    Faces are summed over a window with the analytic tail of the
    conditioned walk; the glue ranges of the four remaining lines must
    tile {1, ..., p-1} on each side exactly.  Returns (per_line, total).
    """
    from . import model as _model

    if not (1 <= ell <= 2 * p):
        raise ValueError("need 1 <= ell <= 2 p")
    K = 1 << 14
    ks = np.arange(1, K + 1)
    hp = _model.h_up(p)
    face = float(np.sum(
        np.asarray(_model.nu_pmf(model, ks), float) * _model.h_up(p + ks)
    )) / hp
    face += _model.hup_nu_tail(model, p, K + 1) / hp
    if ell == 1:
        lines = [face, 0.0, 0.0, 0.0, 0.0]
        gl = np.arange(1, p)
        if gl.size:
            w = np.asarray(_model.nu_pmf(model, -gl), float) * _model.h_up(p - gl)
            lines[1] = float(w.sum()) / hp  # the doubled-weight glue block
        return lines, lines[0] + lines[1]
    lines = [face, 0.0, 0.0, 0.0, 0.0]
    for k in range(1, p):
        w = float(_model.nu_pmf(model, -k)) * _model.h_up(p - k) / (2.0 * hp)
        lines[1 if 2 * k < ell else 2] += w  # near side: shrink vs complete
        lines[3 if k < p - (ell - 1) / 2 else 4] += w  # far side
    return lines, sum(lines)


def run_layers(model, seed: int, r_max: int, replicas: int,
               max_steps: int = 1 << 33,
               shortcut_threshold: int | None = None,
               threads: int = 1):
    """Layer chain from (P, D, H, V) = (1, 2, 0, 0) until height r_max.

    Returns (records, exhausted): one LayerRecord per completed layer per
    replica, and the list of replica indices whose step budget ran out
    before r_max (their partial records are kept).
    """
    if r_max < 1 or replicas < 1:
        raise ValueError("r_max and replicas must be >= 1")
    t = get_tables(model)
    sc = EXACT if shortcut_threshold is None else np.int64(shortcut_threshold)

    def one(rep: int):
        gen = make_rng(seed, rep)
        theta, P_rec, V_rec, n_done, status = _ch._run_layers(
            gen, r_max, max_steps, model.a, model.c, model.cos_pi_a,
            model.kappa, t.cub, t.zeta_s, t.neg_tail, t.pos_tail,
            sc, t.bq, t.beta, t.xi_scale, MAX_DISK_WORK,
        )
        if status != -3:
            _check_status(status)
        rows = [LayerRecord(rep, r + 1, int(theta[r]), P_rec[r], V_rec[r])
                for r in range(int(n_done))]
        return rows, status == -3

    out = _run_replicas(one, replicas, threads)
    records = []
    exhausted = []
    for rep, (rows, ran_out) in enumerate(out):
        records.extend(rows)
        if ran_out:
            exhausted.append(rep)
    return records, exhausted


def height_growth_check(model, seed: int, n_max: int, replicas: int,
                        shortcut_threshold: int | None = None,
                        threads: int = 1):
    """Mean height at dyadic step counts against the n^((a-2)/(a-1)) scale.

    Dilute phase only; returns rows (n, mean_H, reference, ratio).
    """
    if model.phase is not Phase.DILUTE:
        raise ValueError("height growth scale n^((a-2)/(a-1)) needs a > 2")
    if n_max < 2 or replicas < 1:
        raise ValueError("n_max and replicas must be >= 2, 1")
    t = get_tables(model)
    sc = EXACT if shortcut_threshold is None else np.int64(shortcut_threshold)
    ns = 2 ** np.arange(0, int(np.log2(n_max)) + 1, dtype=np.int64)
    # generous height cap; H_n grows well below n^(1/2) in the dilute phase
    r_cap = int(8 * n_max ** ((model.a - 2.0) / (model.a - 1.0)) + 64)

    def one(rep: int):
        gen = make_rng(seed, rep)
        theta, P_rec, V_rec, n_done, status = _ch._run_layers(
            gen, r_cap, int(n_max), model.a, model.c, model.cos_pi_a,
            model.kappa, t.cub, t.zeta_s, t.neg_tail, t.pos_tail,
            sc, t.bq, t.beta, t.xi_scale, MAX_DISK_WORK,
        )
        if status != -3:
            _check_status(status)
        done = int(n_done)
        if done == r_cap:
            raise RuntimeError("height cap reached; increase r_cap")
        # H at step n = number of completed layers with theta_r <= n
        return np.searchsorted(theta[:done], ns, side="right")

    heights = _run_replicas(one, replicas, threads)
    mean_h = np.mean(np.asarray(heights, dtype=float), axis=0)
    expo = (model.a - 2.0) / (model.a - 1.0)
    rows = []
    for n, h in zip(ns, mean_h):
        ref = float(n) ** expo
        rows.append((int(n), float(h), ref, float(h) / ref))
    return rows
