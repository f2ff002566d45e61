"""Critical weight sequence, step law and harmonic functions.

Everything here is a closed-form function of the tuple (a, c, kappa).  All
Gamma ratios are evaluated in log space; negative-argument Gammas are
rewritten through the reflection formula so only positive arguments reach
gammaln.
"""

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.special import gammaln, zeta as hurwitz_zeta

SQRT_PI = math.sqrt(math.pi)


class Phase(Enum):
    DILUTE = "dilute"
    DENSE = "dense"


@dataclass(frozen=True)
class ModelParams:
    """The tuple (a, c, kappa) fixing one critical weight sequence."""

    a: float
    c: float
    kappa: float

    @property
    def phase(self) -> Phase:
        return Phase.DILUTE if self.a > 2.0 else Phase.DENSE

    @property
    def cos_pi_a(self) -> float:
        return math.cos(math.pi * self.a)


def make_special_model(a: float) -> ModelParams:
    """Build the model for the explicit critical weight sequence.

    kappa = 1/(4a-2) and c = -sqrt(pi)/(2 Gamma(3/2-a)); both are positive
    for a in (3/2, 5/2) \\ {2}.
    """
    if not (1.5 < a < 2.5):
        raise ValueError(f"exponent a must lie in (1.5, 2.5), got {a}")
    if a == 2.0:
        raise ValueError("a = 2 is the excluded critical case")
    kappa = 1.0 / (4.0 * a - 2.0)
    # Gamma(3/2 - a) with 3/2 - a in (-1, 0): reflection keeps the argument
    # positive: Gamma(z) = pi / (sin(pi z) Gamma(1 - z)).
    z = 1.5 - a
    g = math.pi / (math.sin(math.pi * z) * math.exp(gammaln(1.0 - z)))
    c = -SQRT_PI / (2.0 * g)
    assert c > 0.0 and kappa > 0.0
    return ModelParams(a=a, c=c, kappa=kappa)


# ---------------------------------------------------------------------------
# weight sequence and step law


def weight(model: ModelParams, k: int) -> float:
    """Face weight q_k = c kappa^(k-1) Gamma(1/2-a+k)/Gamma(1/2+k) for k >= 2."""
    if k < 1:
        raise ValueError("face half-degree k must be >= 1")
    if k == 1:
        return 0.0
    a = model.a
    lg = gammaln(k + 0.5 - a) - gammaln(k + 0.5)
    return model.c * model.kappa ** (k - 1) * math.exp(lg)


def nu_pmf(model, k):
    """Step law nu(k) = c Gamma(3/2-a+k)/Gamma(3/2+k), nu(0) = 0.

    Accepts an int or an integer array.
    """
    a, c = model.a, model.c
    k = np.asarray(k)
    out = np.zeros(k.shape, dtype=float)
    pos = k >= 1
    neg = k <= -1
    if np.any(pos):
        kp = k[pos].astype(float)
        out[pos] = c * np.exp(gammaln(kp + 1.5 - a) - gammaln(kp + 1.5))
    if np.any(neg):
        # nu(-m) = (c / cos(pi a)) Gamma(m-1/2)/Gamma(m-1/2+a), m >= 1,
        # obtained from the reflection formula; cos(pi a) > 0 on (3/2,5/2).
        m = (-k[neg]).astype(float)
        out[neg] = (c / model.cos_pi_a) * np.exp(
            gammaln(m - 0.5) - gammaln(m - 0.5 + a)
        )
    if out.ndim == 0:
        return float(out)
    return out


def nu_tail_pos(model, k):
    """Sum of nu over j >= k for k >= 1 (telescoping Gamma-ratio identity)."""
    a, c = model.a, model.c
    k = np.asarray(k, dtype=float)
    out = (c / (a - 1.0)) * np.exp(gammaln(k + 1.5 - a) - gammaln(k + 0.5))
    return float(out) if out.ndim == 0 else out


def nu_tail_neg(model, k):
    """Sum of nu over j <= -k for k >= 1."""
    a, c = model.a, model.c
    k = np.asarray(k, dtype=float)
    out = (c / (model.cos_pi_a * (a - 1.0))) * np.exp(
        gammaln(k - 0.5) - gammaln(k + a - 1.5)
    )
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# harmonic functions


def h_up(ell):
    """h_up(ell) = 2 ell 4^-ell binom(2 ell, ell); 0 on the nonpositive integers."""
    ell = np.asarray(ell)
    out = np.zeros(ell.shape, dtype=float)
    pos = ell >= 1
    if np.any(pos):
        lp = ell[pos].astype(float)
        out[pos] = (2.0 / SQRT_PI) * np.exp(gammaln(lp + 0.5) - gammaln(lp))
    return float(out) if out.ndim == 0 else out


def log_h_up(ell: int) -> float:
    if ell < 1:
        return -math.inf
    return math.log(2.0 / SQRT_PI) + gammaln(ell + 0.5) - gammaln(ell)


def h_down(ell):
    """h_down(ell) = 4^-ell binom(2 ell, ell) = h_up(ell+1) - h_up(ell); 0 for ell < 0."""
    ell = np.asarray(ell)
    out = np.zeros(ell.shape, dtype=float)
    ok = ell >= 0
    if np.any(ok):
        lp = ell[ok].astype(float)
        out[ok] = np.exp(gammaln(lp + 0.5) - gammaln(lp + 1.0)) / SQRT_PI
    return float(out) if out.ndim == 0 else out


def disk_partition(model: ModelParams, ell: int) -> float:
    """Disk partition function W^(ell) = nu(-1-ell) kappa^(-1-ell) / 2."""
    if ell < 0:
        raise ValueError("ell must be >= 0")
    return nu_pmf(model, -1 - ell) * model.kappa ** (-1 - ell) / 2.0


def w_hat(model, ell):
    """kappa^ell W^(ell) = nu(-1-ell)/(2 kappa); strictly decreasing in ell.

    This is the h-function of the peeling of an (unpointed) Boltzmann disk.
    """
    ell = np.asarray(ell)
    out = nu_pmf(model, -1 - ell) / (2.0 * model.kappa)
    return out


def char_fn(model: ModelParams, theta: float) -> complex:
    """Characteristic function of nu, principal branches."""
    a = model.a
    th = np.asarray(theta, dtype=float)
    z = 1.0 - np.exp(1j * th)
    zb = 1.0 - np.exp(-1j * th)
    pref = (SQRT_PI / 2.0) * math.exp(gammaln(a - 0.5) - gammaln(a))
    with np.errstate(divide="ignore", invalid="ignore"):
        term = np.exp((a - 1.5) * np.log(z) + 0.5 * np.log(zb))
    term = np.where(np.abs(z) == 0.0, 0.0, term)
    out = 1.0 - pref * term
    if out.ndim == 0:
        return complex(out)
    return out


# ---------------------------------------------------------------------------
# derived constants


@dataclass(frozen=True)
class DerivedConstants:
    phase: Phase
    p_q: float
    b_q: float
    v_q: float
    dim_a: float | None = None
    perim_exponent: float | None = None
    a_q: float | None = None
    h_q: float | None = None
    c_a_exists: bool = False
    e_dfpp: float | None = None


def e_dfpp_formula(a: float) -> float:
    """Closed form cot(pi a)/pi * (a-1)/((a-5/2)(a-3/2)), dense phase only."""
    if not a < 2.0:
        raise ValueError("finite fpp distance to infinity requires a < 2")
    return (1.0 / (math.tan(math.pi * a) * math.pi)) * (a - 1.0) / (
        (a - 2.5) * (a - 1.5)
    )


def derived_constants(model: ModelParams) -> DerivedConstants:
    a = model.a
    p_q = model.c ** (1.0 / (a - 1.0))
    b_q = math.exp(-gammaln(a + 0.5))
    v_q = b_q * p_q ** (a - 0.5)
    if model.phase is Phase.DILUTE:
        a_q = 1.0 + 1.0 / (4.0 * (a - 2.0))
        return DerivedConstants(
            phase=model.phase,
            p_q=p_q,
            b_q=b_q,
            v_q=v_q,
            dim_a=(a - 0.5) / (a - 2.0),
            perim_exponent=1.0 / (a - 2.0),
            a_q=a_q,
            h_q=a_q / (2.0 * p_q),
        )
    return DerivedConstants(
        phase=model.phase,
        p_q=p_q,
        b_q=b_q,
        v_q=v_q,
        c_a_exists=True,
        e_dfpp=e_dfpp_formula(a),
    )


# ---------------------------------------------------------------------------
# harmonicity check with analytic tail


def _tail_series_coeffs(a: float, ell: float):
    """Coefficients of the 1/k expansion of
    Gamma(k+ell+1/2)Gamma(k+3/2-a) / (Gamma(k+ell)Gamma(k+3/2)) * k^(a-1/2).

    Derived once from the Bernoulli-polynomial expansion of log Gamma.
    """
    d1 = (4 * a**2 - 8 * a + 4 * ell - 1) / 8
    d2 = (
        48 * a**4 - 128 * a**3 + 96 * a**2 * ell - 24 * a**2
        - 192 * a * ell + 224 * a - 48 * ell**2 + 24 * ell + 3
    ) / 384
    d3 = (
        64 * a**6 - 128 * a**5 + 192 * a**4 * ell - 304 * a**4
        - 512 * a**3 * ell + 832 * a**3 - 192 * a**2 * ell**2
        + 96 * a**2 * ell + 12 * a**2 + 384 * a * ell**2 + 512 * a * ell
        - 968 * a + 192 * ell**3 - 144 * ell**2 - 36 * ell + 15
    ) / 3072
    d4 = (
        3840 * a**8 + 15360 * a**6 * ell - 44800 * a**6
        - 30720 * a**5 * ell + 43008 * a**5 - 23040 * a**4 * ell**2
        - 49920 * a**4 * ell + 129440 * a**4 + 61440 * a**3 * ell**2
        + 138240 * a**3 * ell - 230400 * a**3 + 46080 * a**2 * ell**3
        - 34560 * a**2 * ell**2 - 8640 * a**2 * ell - 25840 * a**2
        - 92160 * a * ell**3 - 15360 * a * ell**2 - 124800 * a * ell
        + 239232 * a - 57600 * ell**4 + 57600 * ell**3 + 21600 * ell**2
        - 18000 * ell - 945
    ) / 1474560
    return (1.0, d1, d2, d3, d4)


def hup_nu_tail(model: ModelParams, ell: int, k_from: int) -> float:
    """Sum over k >= k_from of h_up(ell+k) nu(k), by asymptotic series.

    Valid for k_from much larger than ell; term-wise Hurwitz-zeta sums of the
    1/k expansion.  Truncation error ~ (ell/k_from)^5 relative.
    """
    a, c = model.a, model.c
    coeffs = _tail_series_coeffs(a, float(ell))
    s = 0.0
    for n, d in enumerate(coeffs):
        s += d * hurwitz_zeta(a - 0.5 + n, k_from)
    return (2.0 * c / SQRT_PI) * s


def check_criticality(model: ModelParams, ell_max: int, window: int = 1 << 15):
    """Relative residuals |sum_k h_up(ell+k) nu(k) - h_up(ell)| / h_up(ell).

    The positive-side sum converges like K^(3/2-a), hopelessly slowly near
    a = 3/2, so the window is completed by the analytic tail above.
    """
    if ell_max < 1:
        raise ValueError("ell_max must be >= 1")
    res = np.empty(ell_max)
    for ell in range(1, ell_max + 1):
        K = max(window, 200 * ell)
        ks = np.arange(-ell + 1, K + 1)
        ks = ks[ks != 0]
        s = float(np.sum(h_up(ell + ks) * nu_pmf(model, ks)))
        s += hup_nu_tail(model, ell, K + 1)
        res[ell - 1] = abs(s - h_up(ell)) / h_up(ell)
    return res
