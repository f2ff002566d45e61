"""Perimeter/volume chain of the infinite map and the finite-disk volume
sampler used to fill swallowed bubbles."""

import math
from dataclasses import dataclass

import numpy as np

from . import _chains as _ch
from . import model as _model
from .sampler import get_tables, make_rng, peel_step_infinite

# exact mode: threshold no chain can reach
EXACT = np.int64(1) << 60
DEFAULT_SHORTCUT = 4096
MAX_DISK_WORK = np.int64(1) << 40


@dataclass
class PeelState:
    i: int = 0
    P: int = 1
    V: int = 0


@dataclass
class RunRecord:
    replica: int
    n: int
    P: float
    V: float


class BudgetError(RuntimeError):
    """A guarded loop ran out of its configured budget (never silent)."""


def _check_status(status: int):
    if status == -1:
        raise BudgetError("disk volume sampler exceeded its work budget")
    if status == -2:
        raise BudgetError("disk volume recursion stack overflow")
    if status == -4:
        raise AssertionError("layer chain invariant 1 <= D <= 2P violated")


def boltzmann_volume(rng, model, ell: int, shortcut_threshold: int | None = None) -> int:
    """Sample the total vertex count of a Boltzmann disk of half-perimeter ell.

    Exact by default; shortcut_threshold switches pending holes above the
    threshold to the scaling limit law (documented approximation).
    """
    if ell < 0:
        raise ValueError("ell must be >= 0")
    t = get_tables(model)
    sc = EXACT if shortcut_threshold is None else np.int64(shortcut_threshold)
    v, status = _ch._disk_volume(
        rng, ell, *t.volume_args, sc, t.bq, t.beta, t.xi_scale, MAX_DISK_WORK
    )
    _check_status(status)
    return int(v)


def boltzmann_volumes(rng, model, ell: int, n: int,
                      shortcut_threshold: int | None = None) -> np.ndarray:
    """n independent disk volume samples as a float array (batched loop)."""
    if ell < 0 or n < 1:
        raise ValueError("need ell >= 0 and n >= 1")
    t = get_tables(model)
    sc = EXACT if shortcut_threshold is None else np.int64(shortcut_threshold)
    vals, status = _ch._disk_volume_batch(
        rng, ell, n, *t.volume_args, sc, t.bq, t.beta, t.xi_scale, MAX_DISK_WORK
    )
    _check_status(status)
    return vals


def exact_mean_volume(model, ell: int) -> float:
    """E of the disk vertex count: kappa^-ell h_down(ell) / W^(ell).

    Evaluated in log space as h_down(ell) / (kappa^ell W^(ell)), stable out
    to huge ell.
    """
    if ell < 0:
        raise ValueError("ell must be >= 0")
    a = model.a
    log_wh = (
        math.log(model.c / model.cos_pi_a)
        + math.lgamma(ell + 0.5)
        - math.lgamma(ell + a + 0.5)
        - math.log(2.0 * model.kappa)
    )
    log_hd = math.lgamma(ell + 0.5) - math.lgamma(ell + 1.0) - 0.5 * math.log(math.pi)
    return math.exp(log_hd - log_wh)


def peel_step(state: PeelState, rng, model,
              shortcut_threshold: int | None = None) -> PeelState:
    """One step of the (P, V) chain: face k gives P += k-1; glue j gives
    P -= j+1 and V += boltzmann_volume(j)."""
    ev = peel_step_infinite(rng, model, state.P)
    if ev.kind == "face":
        return PeelState(state.i + 1, state.P + ev.value - 1, state.V)
    j = ev.value
    dv = boltzmann_volume(rng, model, j, shortcut_threshold)
    return PeelState(state.i + 1, state.P - j - 1, state.V + dv)


def dyadic_checkpoints(steps: int) -> np.ndarray:
    ck = 2 ** np.arange(0, int(math.log2(steps)) + 1, dtype=np.int64)
    ck = ck[ck <= steps]
    if ck[-1] != steps:
        ck = np.append(ck, steps)
    return ck


def run_peel(model, seed: int, steps: int, replicas: int,
             track_volume: bool = True,
             shortcut_threshold: int | None = None,
             checkpoints: np.ndarray | None = None,
             threads: int = 1):
    """Run the chain from (P, V) = (1, 0); returns records at dyadic
    checkpoints (or the given sorted checkpoint array) per replica."""
    if steps < 1 or replicas < 1:
        raise ValueError("steps and replicas must be >= 1")
    ck = dyadic_checkpoints(steps) if checkpoints is None else np.asarray(checkpoints, dtype=np.int64)
    t = get_tables(model)
    sc = EXACT if shortcut_threshold is None else np.int64(shortcut_threshold)

    def one(rep: int):
        gen = make_rng(seed, rep)
        P_arr, V_arr, status = _ch._run_peel(
            gen, steps, ck, model.a, model.c, model.cos_pi_a, model.kappa,
            t.cub, t.zeta_s, t.neg_tail, t.pos_tail,
            track_volume, sc, t.bq, t.beta, t.xi_scale, MAX_DISK_WORK,
        )
        _check_status(status)
        return [RunRecord(rep, int(n), float(p), float(v))
                for n, p, v in zip(ck, P_arr, V_arr)]

    records = []
    for rows in _run_replicas(one, replicas, threads):
        records.extend(rows)
    return records


def _run_replicas(one, replicas: int, threads: int):
    """Per-replica results, in replica order regardless of thread count."""
    if threads <= 1:
        return [one(r) for r in range(replicas)]
    from concurrent.futures import ThreadPoolExecutor
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(one, range(replicas)))
