"""Uniform peeling with exponential clocks.

Each step waits an Exp(2P) time and then peels a uniform hole-boundary
edge; perimeter and volume evolve exactly as in the lazy peeling, so only
(P, V, tau) is tracked.  In the dense phase the total time to infinity has
finite mean, estimated here with an analytic truncation bound; in the
dilute phase the clock diverges and growth exponents are read off a dyadic
time grid.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import _chains as _ch
from . import oracle as _oracle
from .model import Phase
from .peel import (EXACT, MAX_DISK_WORK, _check_status, _run_replicas,
                   boltzmann_volume)
from .sampler import get_tables, make_rng, peel_step_infinite

_EMPTY_GRID = np.zeros(0)


@dataclass
class EdenState:
    i: int = 0
    P: int = 1
    V: int = 0
    tau: float = 0.0


@dataclass
class EdenRecord:
    replica: int
    t: float
    tau: float
    P: float
    V: float


def eden_step(state: EdenState, rng, model,
              shortcut_threshold: int | None = None) -> EdenState:
    """Advance the clock by Exp(2P), then peel once."""
    tau = state.tau + rng.standard_exponential() / (2.0 * state.P)
    ev = peel_step_infinite(rng, model, state.P)
    if ev.kind == "face":
        return EdenState(state.i + 1, state.P + ev.value - 1, state.V, tau)
    j = ev.value
    dv = boltzmann_volume(rng, model, j, shortcut_threshold)
    return EdenState(state.i + 1, state.P - j - 1, state.V + dv, tau)


def standardized_increments(model, seed: int, n: int) -> np.ndarray:
    """The first n variates 2 P_i (tau_{i+1} - tau_i); i.i.d. Exp(1)."""
    t = get_tables(model)
    gen = make_rng(seed, 0)
    out = _ch._run_eden(
        gen, n, _EMPTY_GRID, model.a, model.c, model.cos_pi_a, model.kappa,
        t.cub, t.zeta_s, t.neg_tail, t.pos_tail,
        False, EXACT, t.bq, t.beta, t.xi_scale, MAX_DISK_WORK, n,
    )
    _check_status(out[-1])
    return out[3]


@dataclass
class DfppEstimate:
    value: float
    se: float
    tail_bound: float
    reference: float
    n_trunc: int
    replicas: int

    @property
    def error(self) -> float:
        return self.se + self.tail_bound


def estimate_dfpp(model, seed: int, replicas: int, n_trunc: int,
                  threads: int = 1) -> DfppEstimate:
    """Expected fpp distance from the root face to infinity, dense phase.

    Averages tau at step n_trunc and adds sum_{k>n} P_1(W_k=0), which
    dominates the expected remainder sum_{i>=n} E[1/(2 P_i)]; that bound
    is also the reported truncation error term.
    """
    if model.phase is not Phase.DENSE:
        raise ValueError("the fpp distance to infinity is finite only for a < 2")
    if replicas < 2 or n_trunc < 1:
        raise ValueError("need replicas >= 2 and n_trunc >= 1")
    t = get_tables(model)

    def one(rep: int):
        gen = make_rng(seed, rep)
        out = _ch._run_eden(
            gen, n_trunc, _EMPTY_GRID, model.a, model.c, model.cos_pi_a,
            model.kappa, t.cub, t.zeta_s, t.neg_tail, t.pos_tail,
            False, EXACT, t.bq, t.beta, t.xi_scale, MAX_DISK_WORK, 0,
        )
        _check_status(out[-1])
        return out[4]  # tau at n_trunc

    taus = np.array(_run_replicas(one, replicas, threads))
    tail = _oracle.return_prob_sum_tail(model, n_trunc)
    return DfppEstimate(
        value=float(taus.mean()) + tail,
        se=float(taus.std(ddof=1) / math.sqrt(replicas)),
        tail_bound=tail,
        reference=_oracle.e_dfpp_closed(model),
        n_trunc=n_trunc,
        replicas=replicas,
    )


def dyadic_time_grid(t_max: float, per_octave: int = 1) -> np.ndarray:
    """Crossing times 2^(j/per_octave) up to t_max, starting at 1/4."""
    if not t_max > 0.25:
        raise ValueError("t_max must exceed the grid origin 1/4")
    n = int(math.floor(per_octave * math.log2(4.0 * t_max)))
    return 0.25 * 2.0 ** (np.arange(n + 1) / per_octave)


def run_eden_dilute(model, seed: int, replicas: int, t_max: float,
                    max_steps: int = 1 << 27,
                    shortcut_threshold: int | None = None,
                    threads: int = 1, per_octave: int = 4):
    """Growth records on a dyadic fpp-time grid, dilute phase.

    Returns (records, exhausted): EdenRecords at each crossed grid time per
    replica, and the replicas whose step budget ran out before t_max.
    """
    if model.phase is not Phase.DILUTE:
        raise ValueError("unbounded fpp growth records require a > 2")
    if replicas < 1:
        raise ValueError("replicas must be >= 1")
    grid = dyadic_time_grid(t_max, per_octave)
    t = get_tables(model)
    sc = EXACT if shortcut_threshold is None else np.int64(shortcut_threshold)

    def one(rep: int):
        gen = make_rng(seed, rep)
        P_arr, V_arr, tau_arr, _, _, _, _, status = _ch._run_eden(
            gen, max_steps, grid, model.a, model.c, model.cos_pi_a,
            model.kappa, t.cub, t.zeta_s, t.neg_tail, t.pos_tail,
            True, sc, t.bq, t.beta, t.xi_scale, MAX_DISK_WORK, 0,
        )
        _check_status(status)
        rows = []
        for tg, tau, p, v in zip(grid, tau_arr, P_arr, V_arr):
            if tau > 0.0:
                rows.append(EdenRecord(rep, float(tg), float(tau), p, v))
        return rows, len(rows) < grid.shape[0]

    records = []
    exhausted = []
    for rep, (rows, ran_out) in enumerate(_run_replicas(one, replicas, threads)):
        records.extend(rows)
        if ran_out:
            exhausted.append(rep)
    return records, exhausted
