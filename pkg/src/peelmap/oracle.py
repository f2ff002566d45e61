"""Ground truth, computed independently of the samplers.

Return probabilities of the step walk come from contour quadrature of the
characteristic function (cross-checked by direct convolution), the expected
inverse half-perimeter from the cycle-lemma series, and small-disk volume
distributions from the Tutte recursion.  Everything here is deterministic.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

from . import model as _model


class QuadratureError(RuntimeError):
    """Grid refinement stopped improving before reaching tolerance."""


# ---------------------------------------------------------------------------
# tanh-sinh quadrature over the circle
#
# Every integral below has the form (1/2pi) Int_0^{2pi} f(theta) dtheta with
# f built from the characteristic function phi.  phi(-theta) = conj(phi),
# so the integral equals (1/pi) Re Int_0^pi.  The only non-smooth point is
# theta = 0, where 1 - phi vanishes like theta^(a-1); tanh-sinh nodes
# cluster doubly exponentially there and handle any integrable power.

_DE_T = 6.0


def _de_nodes(h):
    """Nodes/weights for Int_0^pi dtheta under theta = (pi/2)(1+tanh y),
    y = (pi/2) sinh t.  theta near 0 is computed through exp(-2y) so the
    smallest nodes stay far above underflow."""
    t = np.arange(-_DE_T, _DE_T + 0.5 * h, h)
    y = 0.5 * math.pi * np.sinh(t)
    e2 = np.exp(-2.0 * np.abs(y))
    near = math.pi * e2 / (1.0 + e2)  # distance to the nearer endpoint
    theta = np.where(t < 0, near, math.pi - near)
    sech2 = 4.0 * e2 / (1.0 + e2) ** 2
    w = h * (0.5 * math.pi) * (0.5 * math.pi) * np.cosh(t) * sech2
    keep = (theta > 0.0) & (theta < math.pi)
    return theta[keep], w[keep]


def _log_one_minus_phi(model, theta):
    """Principal log of 1 - phi(theta), with no cancellation at small theta.

    1 - e^{i theta} = -2i sin(theta/2) e^{i theta/2} gives exact logs of
    both branch factors.
    """
    a = model.a
    log_z = np.log(2.0 * np.sin(0.5 * theta)) + 1j * (0.5 * theta - 0.5 * math.pi)
    log_pref = math.log(0.5 * _model.SQRT_PI) + (
        math.lgamma(a - 0.5) - math.lgamma(a)
    )
    return log_pref + (a - 1.5) * log_z + 0.5 * np.conj(log_z)


def _circle_quad(model, fn, tol, h0=0.25, max_halvings=8):
    """(1/2pi) Int_0^{2pi} fn dtheta by refinement; fn(theta, omp, w) gets
    the nodes, 1 - phi there, and w = e^{i theta}.  Returns (value,
    imag_defect, err)."""
    prev = None
    h = h0
    for _ in range(max_halvings + 1):
        theta, wq = _de_nodes(h)
        omp = np.exp(_log_one_minus_phi(model, theta))
        w = np.exp(1j * theta)
        vals = fn(theta, omp, w)
        # the theta and 2pi - theta halves are conjugate
        total = np.sum(wq * vals) + np.conj(np.sum(wq * vals))
        cur = total / (2.0 * math.pi)
        if prev is not None and abs(cur - prev) < tol:
            return cur.real, cur.imag, abs(cur - prev)
        prev = cur
        h *= 0.5
    raise QuadratureError(
        f"no convergence to {tol:g} after {max_halvings} refinements "
        f"(last delta {abs(cur - prev):g})"
    )


# ---------------------------------------------------------------------------
# return probabilities


@dataclass
class ReturnProbTable:
    """P(walk from 1 sits at 0 after k steps), for the listed k."""

    probs: dict
    method: str
    error: float


def return_prob_quadrature(model, k: int, tol: float = 1e-10) -> float:
    """P_1(W_k = 0) = (1/2pi) Int phi^k e^{i theta} dtheta."""
    if k < 1:
        raise ValueError("k must be >= 1")

    def fn(theta, omp, w):
        return np.exp(k * np.log(1.0 - omp)) * w

    val, imag, err = _circle_quad(model, fn, tol)
    if abs(imag) > 1e-10:
        raise QuadratureError(f"imaginary part {imag:g} did not vanish")
    return val


def return_prob_convolution(model, k: int, half_width: int = 1 << 18):
    """Same probability by k-fold convolution of nu on a finite window.

    Returns (value, error_bound); the bound covers mass that left the
    window, weighted by the largest single-jump probability of returning.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > 12:
        raise ValueError("convolution oracle is for small k only")
    L = half_width
    grid = np.arange(-L, L + 1)
    nu = np.asarray(_model.nu_pmf(model, grid), float)
    dist = nu.copy()
    lost = 1.0 - dist.sum()
    for _ in range(k - 1):
        dist = fftconvolve(dist, nu)[L : L + 2 * L + 1]
        lost += 1.0 - dist.sum()
    # a path outside the window needs one jump of size >= L/2 to reach -1
    far = max(
        float(_model.nu_pmf(model, -(L // 2))), float(_model.nu_pmf(model, L // 2))
    )
    err = lost * far + abs(min(lost, 0.0))
    return float(dist[L - 1]), err


def build_return_table(model, ks, method: str = "quadrature") -> ReturnProbTable:
    if method == "quadrature":
        probs = {int(k): return_prob_quadrature(model, int(k)) for k in ks}
        return ReturnProbTable(probs, "quadrature", 1e-10)
    if method == "convolution":
        probs = {}
        err = 0.0
        for k in ks:
            v, e = return_prob_convolution(model, int(k))
            probs[int(k)] = v
            err = max(err, e)
        return ReturnProbTable(probs, "convolution", err)
    raise ValueError(f"unknown method {method!r}")


# ---------------------------------------------------------------------------
# series built on the return probabilities


def exp_inv_P(model, n: int, tol: float = 1e-9) -> float:
    """E[1/P_n] = 2 sum_{k>n} P_1(W_k = 0)/k.

    The sum over k is done in closed form under the integral:
    sum_{k>n} phi^k/k = -Log(1-phi) - sum_{k<=n} phi^k/k.
    """
    if n < 0:
        raise ValueError("n must be >= 0")

    def fn(theta, omp, w):
        log_omp = _log_one_minus_phi(model, theta)
        phi = 1.0 - omp
        partial = np.zeros_like(phi)
        for k in range(n, 0, -1):
            partial = phi * (1.0 / k + partial)
        return 2.0 * w * (-log_omp - partial)

    val, imag, err = _circle_quad(model, fn, tol)
    if abs(imag) > 1e-10:
        raise QuadratureError(f"imaginary part {imag:g} did not vanish")
    return val


def return_prob_sum_tail(model, n: int, tol: float = 1e-9) -> float:
    """sum_{k>n} P_1(W_k = 0), finite in the dense phase only.

    Dominates the truncation error sum_{i>=n} E[1/(2 P_i)] of the fpp
    clock, since E[1/P_i] = 2 sum_{k>i} P_1(W_k=0)/k.
    """
    if not model.a < 2.0:
        raise ValueError("the return-probability sum diverges for a >= 2")
    if n < 0:
        raise ValueError("n must be >= 0")

    def fn(theta, omp, w):
        phi = 1.0 - omp
        return w * np.exp((n + 1) * np.log(phi)) / omp

    val, imag, err = _circle_quad(model, fn, tol)
    if abs(imag) > 1e-10:
        raise QuadratureError(f"imaginary part {imag:g} did not vanish")
    return val


def e_dfpp_closed(model) -> float:
    """Expected fpp distance from the root face to infinity (dense phase).

    Returns the closed form and asserts agreement with the independent
    contour integral (1/2pi) Int e^{i theta}/(1 - phi) dtheta.  The
    integrand's theta^(1-a) singularity is subtracted analytically so the
    quadrature stays accurate up to a = 2.
    """
    a = model.a
    if not a < 2.0:
        raise ValueError("finite fpp distance to infinity requires a < 2")
    closed = _model.e_dfpp_formula(a)

    log_pref = math.log(0.5 * _model.SQRT_PI) + (
        math.lgamma(a - 0.5) - math.lgamma(a)
    )
    # 1 - phi ~ pref e^{-i pi (a-2)/2} theta^(a-1) as theta -> 0+
    c_lead = math.exp(log_pref) * np.exp(-0.5j * math.pi * (a - 2.0))

    def fn(theta, omp, w):
        sing = c_lead * theta ** (a - 1.0)
        return w / omp - 1.0 / sing

    val, imag, err = _circle_quad(model, fn, tol=1e-9)
    # the subtracted part, integrated exactly over (0, pi) and mirrored
    stub = (math.pi ** (2.0 - a) / (2.0 - a)) / c_lead
    quad = val + (stub + np.conj(stub)).real / (2.0 * math.pi)
    if abs(imag) > 1e-10:
        raise QuadratureError(f"imaginary part {imag:g} did not vanish")
    if abs(quad - closed) > 1e-6 * max(1.0, abs(closed)):
        raise QuadratureError(
            f"closed form {closed:.12g} vs quadrature {quad:.12g} disagree"
        )
    return closed


# ---------------------------------------------------------------------------
# Tutte enumeration of tiny disks


def tutte_enumerate(model, ell_max: int = 8, n_max: int = 12) -> np.ndarray:
    """Vertex-count-resolved disk weights W[ell, n], ell <= ell_max, n <= n_max.

    One-edge decomposition: w(ell) = sum_k q_k w(ell+k-1)
    + sum_{l1+l2 = ell-1} w(l1) w(l2), with w(0) = g marking the vertex
    map.  A disk of half-perimeter ell has at least ell+1 vertices, so
    g-degree n_max closes the system at ell <= n_max - 1.
    """
    if ell_max > 8 or n_max > 12:
        raise ValueError("enumeration bounds are ell_max <= 8, n_max <= 12")
    if ell_max < 0 or n_max < 1:
        raise ValueError("need ell_max >= 0 and n_max >= 1")
    L = max(ell_max, n_max - 1)
    W = np.zeros((L + 1, n_max + 1))
    W[0, 1] = 1.0
    q = np.array([0.0, 0.0] + [_model.weight(model, k) for k in range(2, L + 3)])
    for _ in range((n_max + 2) * (L + 2)):
        prev = W.copy()
        for ell in range(1, L + 1):
            face = np.zeros(n_max + 1)
            for k in range(2, L + 2 - ell):
                face += q[k] * prev[ell + k - 1]
            split = np.zeros(n_max + 1)
            for l1 in range(ell):
                l2 = ell - 1 - l1
                split += np.convolve(prev[l1], prev[l2])[: n_max + 1]
            W[ell] = face + split
        if np.array_equal(W, prev):
            break
    else:
        raise RuntimeError("tutte recursion failed to stabilize")
    # sanity: the truncated mass never exceeds the full partition function
    for ell in range(ell_max + 1):
        total = W[ell].sum()
        full = _model.disk_partition(model, ell)
        if total > full * (1.0 + 1e-9):
            raise RuntimeError(
                f"enumerated mass {total:g} exceeds partition function {full:g}"
            )
    return W[: ell_max + 1]
