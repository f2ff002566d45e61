"""Numba kernels for the peeling chains.

All functions take the model as unpacked scalars (a, c, cpa=cos(pi a), ...)
plus two tail tables:
  neg_tail[i] = sum of nu over j <= -(i+1)
  pos_tail[i] = sum of nu over j >= i+1
so that sampling needs no python objects.  Volumes are carried as float64:
increments are exact integers well below 2^53 whenever exactness matters.

Error convention: chain runners return a status int (0 ok, negative on
guard violation); python wrappers raise.
"""

import math

import numpy as np
from numba import njit

LOG_2_SQRTPI = math.log(2.0 / math.sqrt(math.pi))
HUGE_JUMP = float(1 << 62)


@njit(cache=True)
def _log_hup(ell):
    # h_up(ell) = 2/sqrt(pi) * Gamma(ell+1/2)/Gamma(ell); -inf for ell <= 0.
    # Large ell switches to the expansion log(ratio) = log(ell)/2 - 1/(8 ell)
    # + O(ell^-2): the direct lgamma difference cancels catastrophically
    # there (the summands reach ell log ell while the result stays ~log ell)
    if ell <= 0:
        return -math.inf
    x = float(ell)
    if x > 1.0e6:
        return LOG_2_SQRTPI + 0.5 * math.log(x) - 0.125 / x
    return LOG_2_SQRTPI + math.lgamma(x + 0.5) - math.lgamma(x)


@njit(cache=True)
def _h_down(ell):
    if ell < 0:
        return 0.0
    return math.exp(math.lgamma(ell + 0.5) - math.lgamma(ell + 1.0)) / math.sqrt(math.pi)


@njit(cache=True)
def _nu_pos(k, a, c):
    return c * math.exp(math.lgamma(k + 1.5 - a) - math.lgamma(k + 1.5))


@njit(cache=True)
def _nu_neg(m, a, c, cpa):
    # nu(-m) for m >= 1
    return (c / cpa) * math.exp(math.lgamma(m - 0.5) - math.lgamma(m + a - 0.5))


@njit(cache=True)
def _tail_pos(k, a, c):
    return (c / (a - 1.0)) * math.exp(math.lgamma(k + 1.5 - a) - math.lgamma(k + 0.5))


@njit(cache=True)
def _tail_neg(m, a, c, cpa):
    return (c / (cpa * (a - 1.0))) * math.exp(
        math.lgamma(m - 0.5) - math.lgamma(m + a - 1.5)
    )


@njit(cache=True)
def _find_decreasing(tab, w):
    """Number of entries of a strictly decreasing table that exceed w."""
    lo, hi = 0, tab.shape[0]
    while lo < hi:
        mid = (lo + hi) // 2
        if tab[mid] > w:
            lo = mid + 1
        else:
            hi = mid
    return lo


@njit(cache=True)
def _sample_nu_neg(gen, a, c, cpa, neg_tail):
    """Magnitude m >= 1 of a jump drawn from nu conditioned on being negative."""
    w = gen.random() * neg_tail[0]
    K0 = neg_tail.shape[0]
    if w > neg_tail[K0 - 1]:
        # table range: m with tail(m) > w >= tail(m+1)
        return _find_decreasing(neg_tail, w)
    # analytic tail inversion: tail(m) ~ (c/(cpa (a-1))) m^(1-a)
    guess = (w * (a - 1.0) * cpa / c) ** (1.0 / (1.0 - a))
    if guess > HUGE_JUMP:
        return np.int64(1) << 62
    m = np.int64(guess)
    if m < K0:
        m = np.int64(K0)
    t = _tail_neg(float(m), a, c, cpa)
    while t <= w:
        m -= 1
        t = t * (m + a - 1.5) / (m - 0.5)
    while True:
        t1 = t * (m - 0.5) / (m + a - 1.5)  # tail(m+1)
        if t1 <= w:
            return m
        m += 1
        t = t1


@njit(cache=True)
def _sample_nu_pos(gen, a, c, pos_tail):
    """Positive jump k >= 1 drawn from nu conditioned on being positive."""
    w = gen.random() * pos_tail[0]
    K0 = pos_tail.shape[0]
    if w > pos_tail[K0 - 1]:
        return _find_decreasing(pos_tail, w)
    guess = (w * (a - 1.0) / c) ** (1.0 / (1.0 - a))
    if guess > HUGE_JUMP:
        return np.int64(1) << 62
    k = np.int64(guess)
    if k < K0:
        k = np.int64(K0)
    t = _tail_pos(float(k), a, c)
    while t <= w:
        k -= 1
        t = t * (k + 0.5) / (k + 1.5 - a)
    while True:
        t1 = t * (k + 1.5 - a) / (k + 0.5)  # tail(k+1)
        if t1 <= w:
            return k
        k += 1
        t = t1


@njit(cache=True)
def _sample_nu(gen, a, c, cpa, neg_tail, pos_tail):
    if gen.random() * (neg_tail[0] + pos_tail[0]) < neg_tail[0]:
        return -_sample_nu_neg(gen, a, c, cpa, neg_tail)
    return _sample_nu_pos(gen, a, c, pos_tail)


@njit(cache=True)
def _sample_powlaw(gen, s):
    """Exact sample of p(m) proportional to m^-s on m >= 1 (s > 1).

    Continuous proposal x^-s on [1/2, inf) rounded to the nearest integer;
    Jensen gives m^-s <= integral of x^-s over [m-1/2, m+1/2], so the
    rejection is exact with unit envelope constant.
    """
    while True:
        x = 0.5 * gen.random() ** (-1.0 / (s - 1.0))
        if x > HUGE_JUMP:
            return np.int64(1) << 62
        m = np.int64(x + 0.5)
        cell = ((m - 0.5) ** (1.0 - s) - (m + 0.5) ** (1.0 - s)) / (s - 1.0)
        if gen.random() * cell <= float(m) ** (-s):
            return m


@njit(cache=True)
def _sample_kernel_up(gen, ell, a, c, cpa, cub, zeta_s, neg_tail, pos_tail):
    """One jump m of the half-perimeter chain conditioned to stay positive.

    P(m) = nu(m) h_up(ell+m)/h_up(ell), m >= 1 (new face of degree 2(m+1))
    or -(ell-1) <= m <= -1 (glue; bubble half-perimeter -m-1).

    Composition-rejection: negative proposals straight from nu (ratio of
    h_up <= 1 there); positive proposals from nu plus a power-law component
    covering the sqrt growth h_up(ell+m)/h_up(ell) <= 1 + sqrt(m/ell) after
    normalizing by rho = h_up(ell) sqrt(pi)/(2 sqrt(ell)) >= 1.
    """
    s = a - 0.5
    lhup = _log_hup(ell)
    rho = math.exp(lhup) * math.sqrt(math.pi) / (2.0 * math.sqrt(ell))
    sql = math.sqrt(ell)
    w_neg = neg_tail[0]
    w_pos = pos_tail[0] / rho
    w_pow = cub * zeta_s / (sql * rho)
    tot = w_neg + w_pos + w_pow
    while True:
        u = gen.random() * tot
        if u < w_neg:
            m = -_sample_nu_neg(gen, a, c, cpa, neg_tail)
        elif u < w_neg + w_pos:
            m = _sample_nu_pos(gen, a, c, pos_tail)
        else:
            m = _sample_powlaw(gen, s)
        if m <= -ell or m >= (np.int64(1) << 62):
            continue  # target mass 0 (or astronomically improbable overflow)
        mf = float(m)
        if m < 0:
            envelope = _nu_neg(-mf, a, c, cpa)
            nu_m = envelope
        else:
            nu_m = _nu_pos(mf, a, c)
            envelope = nu_m / rho + cub * mf ** (-s) / (sql * rho)
        target = nu_m * math.exp(_log_hup(ell + m) - lhup)
        if gen.random() * envelope <= target:
            return m


# ---------------------------------------------------------------------------
# stable laws


@njit(cache=True)
def _kanter_a(u, beta):
    return (
        math.sin((1.0 - beta) * u)
        * math.sin(beta * u) ** (beta / (1.0 - beta))
        * math.sin(u) ** (-1.0 / (1.0 - beta))
    )


@njit(cache=True)
def _sample_pos_stable(gen, beta, scale):
    """X >= 0 with E[exp(-t X)] = exp(-(scale*t)^beta)."""
    u = math.pi * gen.random()
    while u <= 0.0:
        u = math.pi * gen.random()
    e = gen.standard_exponential()
    g = (1.0 - beta) / beta
    return scale * (_kanter_a(u, beta) / e) ** g


@njit(cache=True)
def _sample_xi_biased(gen, beta, scale):
    """The stable law above biased by 1/x and normalized (unit mean).

    Writing X = scale*(A(U)/E)^g with g=(1-beta)/beta, biasing by 1/x turns
    E into Gamma(1+g) and tilts U by A(u)^-g, handled by rejection from the
    uniform using inf A = (1-beta) beta^(beta/(1-beta)) at u=0+.
    """
    g = (1.0 - beta) / beta
    amin = (1.0 - beta) * beta ** (beta / (1.0 - beta))
    while True:
        u = math.pi * gen.random()
        if u <= 0.0:
            continue
        au = _kanter_a(u, beta)
        if gen.random() <= (amin / au) ** g:
            gam = gen.standard_gamma(1.0 + g)
            return scale * (au / gam) ** g


# ---------------------------------------------------------------------------
# finite-disk volume


@njit(cache=True)
def _log_wh(ell, a, c, cpa, kap):
    # log of kappa^ell W^(ell) = nu(-1-ell)/(2 kappa); 0 at ell = 0
    if ell == 0:
        return 0.0
    return (
        math.log(c / cpa)
        + math.lgamma(ell + 0.5)
        - math.lgamma(ell + a + 0.5)
        - math.log(2.0 * kap)
    )


@njit(cache=True)
def _limit_volume(gen, ell, a, bq, beta, xi_scale):
    v = bq * float(ell) ** (a - 0.5) * _sample_xi_biased(gen, beta, xi_scale)
    if v < ell + 1.0:
        v = ell + 1.0
    return v


@njit(cache=True)
def _invert_tail_neg(w, a, c, cpa, lo, hi):
    """m in [lo, hi] with tail_neg(m) > w >= tail_neg(m+1), clamped."""
    guess = (w * (a - 1.0) * cpa / c) ** (1.0 / (1.0 - a))
    m = np.int64(guess)
    if m < lo:
        m = np.int64(lo)
    if m > hi:
        m = np.int64(hi)
    t = _tail_neg(float(m), a, c, cpa)
    while t <= w and m > lo:
        m -= 1
        t = t * (m + a - 1.5) / (m - 0.5)
    while m < hi:
        t1 = t * (m - 0.5) / (m + a - 1.5)  # tail(m+1)
        if t1 <= w:
            break
        m += 1
        t = t1
    return m


@njit(cache=True)
def _disk_volume_batch(
    gen, ell0, n, a, c, cpa, kap, pos_tail,
    shortcut, bq, beta, xi_scale, max_work,
):
    """n independent disk volumes at half-perimeter ell0; (values, status)."""
    out = np.empty(n)
    for i in range(n):
        v, st = _disk_volume(
            gen, ell0, a, c, cpa, kap, pos_tail,
            shortcut, bq, beta, xi_scale, max_work,
        )
        if st != 0:
            return out, st
        out[i] = v
    return out, 0


@njit(cache=True)
def _disk_volume(
    gen, ell0, a, c, cpa, kap, pos_tail,
    shortcut, bq, beta, xi_scale, max_work,
):
    """Total vertex count of a Boltzmann disk of half-perimeter ell0.

    Peeling with the Tutte-recursion chain: from ell, either a new face of
    degree 2(m+1) appears, weight nu(m) wh(ell+m)/wh(ell), or the hole
    splits into an ordered pair (b, ell-1-b), weight
    kappa wh(b) wh(ell-1-b)/wh(ell); the second part is pushed, b
    continued.  Normalization is exactly Tutte's equation.

    Sampling is O(1) composition-rejection.  Faces: propose nu|+, accept
    the decreasing ratio wh(ell+m)/wh(ell) <= 1.  Splits: the prefix sum
    whsum = sum_{b<ell} wh(b) = 1 + (tail_neg(2)-tail_neg(ell+1))/(2 kap)
    is closed-form, and wh(b) wh(ell-1-b) <= wh_mid (wh(b)+wh(ell-1-b))
    with wh_mid = wh(ceil((ell-1)/2)) gives a symmetric envelope sampled
    by drawing b from wh on [0, ell-1] (tail inversion) then mirroring
    with a fair coin.

    Vertices: 2*ell0 boundary ones up front, 2m per new face, -2 per
    split (two vertex pairs merge when boundary edges glue), +1 per hole
    that closes at half-perimeter zero.  Calibrated against the exact
    pointed/unpointed partition ratio.

    shortcut >= 1: any pending hole with half-perimeter >= shortcut is
    resolved by the limit law bq ell^(a-1/2) xi, minus its 2*ell boundary
    vertices already counted.  Pass a giant shortcut for exact mode.

    Returns (volume, status); status -1 on work-budget overrun, -2 on
    stack overflow.
    """
    if ell0 == 0:
        return 1.0, 0
    V = 2.0 * float(ell0)
    stack = np.empty(1 << 10, dtype=np.int64)
    depth = 0
    stack[depth] = ell0
    depth += 1
    work = 0
    t2 = _tail_neg(2.0, a, c, cpa)
    while depth > 0:
        depth -= 1
        ell = stack[depth]
        while ell > 0:
            if ell >= shortcut:
                V += _limit_volume(gen, ell, a, bq, beta, xi_scale) - 2.0 * float(ell)
                break
            work += 1
            if work > max_work:
                return V, -1
            lwh = _log_wh(ell, a, c, cpa, kap)
            tl = _tail_neg(float(ell + 1), a, c, cpa)
            whsum = 1.0 + (t2 - tl) / (2.0 * kap)
            wh_mid = math.exp(_log_wh(ell // 2, a, c, cpa, kap))
            c_face = pos_tail[0]
            c_split = 2.0 * kap * wh_mid * whsum * math.exp(-lwh)
            b = np.int64(-1)
            while True:
                u = gen.random() * (c_face + c_split)
                if u < c_face:
                    m = _sample_nu_pos(gen, a, c, pos_tail)
                    if m >= (np.int64(1) << 62):
                        continue
                    if gen.random() <= math.exp(_log_wh(ell + m, a, c, cpa, kap) - lwh):
                        V += 2.0 * float(m)
                        ell = ell + m
                        break
                else:
                    # propose b from wh on [0, ell-1], then mirror
                    if gen.random() * whsum < 1.0:
                        b = np.int64(0)
                    else:
                        w = tl + gen.random() * (t2 - tl)
                        b = _invert_tail_neg(w, a, c, cpa, np.int64(2), ell) - 1
                    if gen.random() < 0.5:
                        b = ell - 1 - b
                    lwb = _log_wh(b, a, c, cpa, kap)
                    lwc = _log_wh(ell - 1 - b, a, c, cpa, kap)
                    wb = math.exp(lwb)
                    wc = math.exp(lwc)
                    if gen.random() * wh_mid * (wb + wc) <= wb * wc:
                        l2 = ell - 1 - b
                        V -= 2.0
                        if l2 == 0:
                            V += 1.0
                        else:
                            if depth >= stack.shape[0]:
                                if stack.shape[0] >= (1 << 28):
                                    return V, -2
                                bigger = np.empty(2 * stack.shape[0], dtype=np.int64)
                                bigger[:depth] = stack[:depth]
                                stack = bigger
                            stack[depth] = l2
                            depth += 1
                        ell = b
                        break
        if ell == 0:
            V += 1.0
    return V, 0


# ---------------------------------------------------------------------------
# chain runners


@njit(cache=True)
def _run_peel(
    gen, steps, ckpts, a, c, cpa, kap, cub, zeta_s, neg_tail, pos_tail,
    track_volume, shortcut, bq, beta, xi_scale, max_work,
):
    """Infinite-map chain from (P, V) = (1, 0).

    Records (P, V) at the step counts in ckpts (sorted).  Returns
    (P_arr float64, V_arr, status).
    """
    ncp = ckpts.shape[0]
    P_arr = np.zeros(ncp)
    V_arr = np.zeros(ncp)
    P = np.int64(1)
    V = 0.0
    j = 0
    for i in range(steps):
        m = _sample_kernel_up(gen, P, a, c, cpa, cub, zeta_s, neg_tail, pos_tail)
        if m >= 1:
            P += m
        else:
            bubble = -m - 1
            P += m
            if track_volume:
                dv, st = _disk_volume(
                    gen, bubble, a, c, cpa, kap, pos_tail,
                    shortcut, bq, beta, xi_scale, max_work,
                )
                if st != 0:
                    return P_arr, V_arr, st
                V += dv
        while j < ncp and i + 1 == ckpts[j]:
            P_arr[j] = float(P)
            V_arr[j] = V
            j += 1
    return P_arr, V_arr, 0


@njit(cache=True)
def _run_layers(
    gen, r_max, max_steps, a, c, cpa, kap, cub, zeta_s, neg_tail, pos_tail,
    shortcut, bq, beta, xi_scale, max_work,
):
    """Layer chain from (P, D, H, V) = (1, 2, 0, 0).

    Emits one record per completed radius r = 1..r_max: (theta_r, P, V).
    Returns (theta, P_rec, V_rec, n_done, status); status -3 when the step
    budget ran out first (records up to n_done remain valid).
    """
    theta = np.zeros(r_max, dtype=np.int64)
    P_rec = np.zeros(r_max)
    V_rec = np.zeros(r_max)
    P = np.int64(1)
    D = np.int64(2)
    H = np.int64(0)
    V = 0.0
    i = np.int64(0)
    while H < r_max:
        if i >= max_steps:
            return theta, P_rec, V_rec, H, -3
        m = _sample_kernel_up(gen, P, a, c, cpa, cub, zeta_s, neg_tail, pos_tail)
        i += 1
        if m >= 1:
            P += m
            if D == 1:
                D = 2 * P
                H += 1
            else:
                D -= 1
        else:
            k = -m
            bubble = k - 1
            dv, st = _disk_volume(
                gen, bubble, a, c, cpa, kap, pos_tail,
                shortcut, bq, beta, xi_scale, max_work,
            )
            if st != 0:
                return theta, P_rec, V_rec, H, st
            V += dv
            P -= k
            if D == 1:
                D = 2 * P
                H += 1
            elif gen.random() < 0.5:
                # glue on the side eating the current layer's edges
                if 2 * k < D:
                    D -= 2 * k
                else:
                    D = 2 * P
                    H += 1
            else:
                # glue on the far side
                if 2 * P <= D - 1:
                    D = 2 * P
                else:
                    D -= 1
        if D > 2 * P or D < 1 or P < 1:
            return theta, P_rec, V_rec, H, -4
        if H > 0 and theta[H - 1] == 0:
            theta[H - 1] = i
            P_rec[H - 1] = float(P)
            V_rec[H - 1] = V
    return theta, P_rec, V_rec, H, 0


@njit(cache=True)
def _run_eden(
    gen, steps, t_grid, a, c, cpa, kap, cub, zeta_s, neg_tail, pos_tail,
    track_volume, shortcut, bq, beta, xi_scale, max_work, n_incr,
):
    """Uniform peeling with exponential clocks from (P, V, tau) = (1, 0, 0).

    Records (P, V, tau-at-crossing) at the first step whose clock passes
    each entry of t_grid (0 if never reached within the step budget), the
    final (P, V, tau), and the first n_incr standardized clock increments
    2 P (tau' - tau).
    """
    ng = t_grid.shape[0]
    P_arr = np.zeros(ng)
    V_arr = np.zeros(ng)
    tau_arr = np.zeros(ng)
    incr = np.zeros(n_incr)
    P = np.int64(1)
    V = 0.0
    tau = 0.0
    j = 0
    for i in range(steps):
        e = gen.standard_exponential()
        dt = e / (2.0 * float(P))
        if i < n_incr:
            incr[i] = e
        tau += dt
        m = _sample_kernel_up(gen, P, a, c, cpa, cub, zeta_s, neg_tail, pos_tail)
        if m >= 1:
            P += m
        else:
            bubble = -m - 1
            P += m
            if track_volume:
                dv, st = _disk_volume(
                    gen, bubble, a, c, cpa, kap, pos_tail,
                    shortcut, bq, beta, xi_scale, max_work,
                )
                if st != 0:
                    return P_arr, V_arr, tau_arr, incr, tau, float(P), V, st
                V += dv
        while j < ng and tau >= t_grid[j]:
            P_arr[j] = float(P)
            V_arr[j] = V
            tau_arr[j] = tau
            j += 1
        if ng > 0 and j == ng and i + 1 >= n_incr:
            break
    return P_arr, V_arr, tau_arr, incr, tau, float(P), V, 0


@njit(cache=True)
def _disk_walk_absorb(gen, ell0, max_steps, a, c, cpa, neg_tail, pos_tail):
    """Steps until the h_down walk started at ell0 hits 0; -1 if over budget."""
    ell = np.int64(ell0)
    for i in range(max_steps):
        if ell == 0:
            return i
        while True:
            # propose from nu, accept with h_down(ell+k) <= h_down(0) = 1
            k = _sample_nu(gen, a, c, cpa, neg_tail, pos_tail)
            if k < -ell or k >= (np.int64(1) << 62):
                continue
            if gen.random() <= _h_down(float(ell + k)):
                ell += k
                break
    return -1 if ell != 0 else max_steps
