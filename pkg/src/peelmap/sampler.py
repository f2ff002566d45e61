"""Random variate generation: the step law, the conditioned peeling kernels,
exponential clocks and the reference stable laws.

The heavy lifting lives in _chains (numba); this module owns the cached
tail tables and the user-facing event types.
"""

import math
from functools import lru_cache
from typing import NamedTuple

import numpy as np
from scipy.special import gammaln, zeta as hurwitz_zeta

from . import model as _model
from . import _chains as _ch

TAIL_TABLE_SIZE = 1 << 15


class PeelEvent(NamedTuple):
    """kind: 'face' (value = k, new face degree 2k), 'glue_left'/'glue_right'
    (value = j, swallowed bubble half-perimeter), or 'absorbed' (finite
    disk exploration finished)."""

    kind: str
    value: int


ABSORBED = PeelEvent("absorbed", 0)


def make_rng(master_seed: int, replica_index: int = 0) -> np.random.Generator:
    """Independent replica stream: identical inputs give identical streams."""
    return np.random.Generator(
        np.random.PCG64(np.random.SeedSequence((master_seed, replica_index)))
    )


class ModelTables:
    """Read-only sampling tables for one model, safe to share across threads.

    neg_tail[i] = P(step <= -(i+1)), pos_tail[i] = P(step >= i+1),
    cub dominates nu(m) m^a on m >= 1 (envelope constant of the positive
    jump rejection sampler), zeta_s = zeta(a - 1/2).
    """

    def __init__(self, model: _model.ModelParams):
        self.model = model
        a = model.a
        idx = np.arange(1, TAIL_TABLE_SIZE + 1)
        self.neg_tail = _model.nu_tail_neg(model, idx)
        self.pos_tail = _model.nu_tail_pos(model, idx)
        ms = np.arange(1, 1 << 20, dtype=float)
        ratios = _model.nu_pmf(model, np.arange(1, 1 << 20)) * ms**a
        self.cub = max(float(ratios.max()), model.c) * (1.0 + 1e-9)
        self.zeta_s = float(hurwitz_zeta(a - 0.5, 1.0))
        self.beta = 1.0 / (a - 0.5)
        self.xi_scale = math.exp(gammaln(a + 0.5))
        self.bq = math.exp(-gammaln(a + 0.5))

    @property
    def kernel_args(self):
        m = self.model
        return (m.a, m.c, m.cos_pi_a, self.cub, self.zeta_s,
                self.neg_tail, self.pos_tail)

    @property
    def nu_args(self):
        m = self.model
        return (m.a, m.c, m.cos_pi_a, self.neg_tail, self.pos_tail)

    @property
    def volume_args(self):
        """(a, c, cpa, kap, pos_tail) prefix used by the disk volume kernel."""
        m = self.model
        return (m.a, m.c, m.cos_pi_a, m.kappa, self.pos_tail)


@lru_cache(maxsize=16)
def get_tables(model: _model.ModelParams) -> ModelTables:
    return ModelTables(model)


def sample_nu(rng, model) -> int:
    """One step of the unconditioned walk, law nu."""
    k = _ch._sample_nu(rng, *get_tables(model).nu_args)
    if abs(k) >= 1 << 62:
        raise OverflowError("nu jump beyond 2^62; astronomically unlikely seed")
    return int(k)


def _event_from_jump(rng, m: int) -> PeelEvent:
    if m >= 1:
        return PeelEvent("face", m + 1)
    side = "glue_left" if rng.random() < 0.5 else "glue_right"
    return PeelEvent(side, -m - 1)


def peel_step_infinite(rng, model, ell: int) -> PeelEvent:
    """Peeling kernel of the infinite map at half-perimeter ell.

    face k with prob nu(k-1) h_up(ell+k-1)/h_up(ell); glue_left(j) and
    glue_right(j) each with prob nu(-j-1) h_up(ell-j-1)/(2 h_up(ell)),
    0 <= j <= ell-2.
    """
    if ell < 1:
        raise ValueError("ell must be >= 1")
    m = _ch._sample_kernel_up(rng, ell, *get_tables(model).kernel_args)
    return _event_from_jump(rng, int(m))


def peel_step_finite(rng, model, ell: int) -> PeelEvent:
    """One step of the walk conditioned to hit 0 before going negative:
    jump k with prob nu(k) h_down(ell+k)/h_down(ell), k >= -ell.
    k = -ell is absorption."""
    if ell < 1:
        raise ValueError("ell must be >= 1")
    t = get_tables(model)
    while True:
        k = _ch._sample_nu(rng, *t.nu_args)
        if k < -ell or abs(k) >= 1 << 62:
            continue
        if rng.random() <= _ch._h_down(float(ell + k)):
            break
    k = int(k)
    if k == -ell:
        return ABSORBED
    return _event_from_jump(rng, k)


def sample_exponential(rng, rate: float) -> float:
    if not rate > 0.0:
        raise ValueError(f"rate must be positive, got {rate}")
    return rng.standard_exponential() / rate


def sample_positive_stable(rng, index: float, scale: float) -> float:
    """X > 0 with E[exp(-t X)] = exp(-(scale*t)^index), index in (0,1)."""
    if not 0.0 < index < 1.0:
        raise ValueError(f"stable index must be in (0,1), got {index}")
    if not scale > 0.0:
        raise ValueError("scale must be positive")
    return float(_ch._sample_pos_stable(rng, index, scale))


def sample_biased_stable(rng, index: float, scale: float) -> float:
    """The positive stable law reweighted by 1/x (unit mean); the limit law
    of disk volume over bq ell^(a-1/2)."""
    if not 0.0 < index < 1.0:
        raise ValueError(f"stable index must be in (0,1), got {index}")
    if not scale > 0.0:
        raise ValueError("scale must be positive")
    return float(_ch._sample_xi_biased(rng, index, scale))
