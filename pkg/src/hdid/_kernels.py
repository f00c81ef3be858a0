"""Scalar RNG and linear-algebra primitives used by the Gibbs kernels.

Everything here is numba-compatible and compiled (or not) via
:mod:`hdid.backend`. The generator is Philox4x32-10, a counter-based RNG:
a draw sequence is a pure function of ``(seed, stream, counter)``, so
distinct stream ids give independent streams and replications can run on
any worker layout without changing results.

Stream state is carried as a uint64 array of length 3:
``s = [seed, stream_id, block_counter]``. Every variate consumes whole
128-bit blocks; the counter only ever increases.

All arithmetic is written so the interpreted numpy fallback and the numba
build produce bit-identical values (32-bit lane math in uint64, libm calls
only through ``math``).
"""

from __future__ import annotations

import math

import numpy as np

from .backend import njit

# Philox4x32 round and Weyl constants (Salmon et al., Random123).
_M0 = 0xD2511F53
_M1 = 0xCD9E8D57
_W0 = 0x9E3779B9
_W1 = 0xBB67AE85
_MASK32 = 0xFFFFFFFF

_INV53 = 1.0 / 9007199254740992.0  # 2^-53
_TWO_PI = 6.283185307179586476925287
_LOG_BF_CLAMP = 690.775527898213705205  # ln(1e300)


@njit
def philox_block(seed, stream, counter):
    """One Philox4x32-10 block: four 32-bit outputs held in uint64s."""
    k0 = seed & _MASK32
    k1 = (seed >> 32) & _MASK32
    c0 = counter & _MASK32
    c1 = (counter >> 32) & _MASK32
    c2 = stream & _MASK32
    c3 = (stream >> 32) & _MASK32
    for _ in range(10):
        p0 = _M0 * c0
        p1 = _M1 * c2
        hi0 = p0 >> 32
        lo0 = p0 & _MASK32
        hi1 = p1 >> 32
        lo1 = p1 & _MASK32
        c0 = hi1 ^ c1 ^ k0
        c1 = lo1
        c2 = hi0 ^ c3 ^ k1
        c3 = lo0
        k0 = (k0 + _W0) & _MASK32
        k1 = (k1 + _W1) & _MASK32
    return c0, c1, c2, c3


@njit
def next_uniform(s):
    """Uniform draw strictly inside (0, 1) with 53 random bits."""
    x0, x1, _x2, _x3 = philox_block(s[0], s[1], s[2])
    s[2] += 1
    return ((x0 >> 5) * 67108864.0 + (x1 >> 6) + 0.5) * _INV53


@njit
def next_normal(s):
    """Standard normal via Box-Muller; one block per draw."""
    x0, x1, x2, x3 = philox_block(s[0], s[1], s[2])
    s[2] += 1
    u1 = ((x0 >> 5) * 67108864.0 + (x1 >> 6) + 0.5) * _INV53
    u2 = ((x2 >> 5) * 67108864.0 + (x3 >> 6) + 0.5) * _INV53
    return math.sqrt(-2.0 * math.log(u1)) * math.cos(_TWO_PI * u2)


@njit
def next_std_gamma(s, shape):
    """Gamma(shape, 1) via Marsaglia-Tsang; shape < 1 handled by boosting."""
    boost = 1.0
    a = shape
    if a < 1.0:
        u = next_uniform(s)
        boost = u ** (1.0 / a)
        a = a + 1.0
    d = a - 1.0 / 3.0
    c = 1.0 / math.sqrt(9.0 * d)
    while True:
        x = next_normal(s)
        t = 1.0 + c * x
        if t <= 0.0:
            continue
        v = t * t * t
        u = next_uniform(s)
        x2 = x * x
        if u < 1.0 - 0.0331 * x2 * x2:
            return boost * d * v
        if math.log(u) < 0.5 * x2 + d * (1.0 - v + math.log(v)):
            return boost * d * v


@njit
def next_gamma(s, shape, rate):
    return next_std_gamma(s, shape) / rate


@njit
def next_invgamma(s, shape, rate):
    """Inverse-gamma draw: V with 1/V ~ Gamma(shape, rate)."""
    return rate / next_std_gamma(s, shape)


@njit
def fill_uniforms(s, out):
    for i in range(out.shape[0]):
        out[i] = next_uniform(s)


@njit
def fill_normals(s, out):
    for i in range(out.shape[0]):
        out[i] = next_normal(s)


@njit
def fill_gammas(s, shape, rate, out):
    for i in range(out.shape[0]):
        out[i] = next_gamma(s, shape, rate)


@njit
def log_normal_pdf(x, mean, variance):
    d = x - mean
    return -0.5 * math.log(_TWO_PI * variance) - d * d / (2.0 * variance)


@njit
def inclusion_probability(coef, spike_var, slab_var, p):
    """P(indicator = 1) for a spike/slab mixture at the current coefficient.

    The Bayes factor spike/slab is formed in log space and clamped to
    [1e-300, 1e300] before mixing with the prior odds (1-p)/p.
    """
    log_bf = log_normal_pdf(coef, 0.0, spike_var) - log_normal_pdf(coef, 0.0, slab_var)
    if log_bf > _LOG_BF_CLAMP:
        log_bf = _LOG_BF_CLAMP
    elif log_bf < -_LOG_BF_CLAMP:
        log_bf = -_LOG_BF_CLAMP
    return 1.0 / (1.0 + math.exp(log_bf) * (1.0 - p) / p)


@njit
def paired_inclusion_probability(coef_a, coef_b, spike_var, slab_var, p):
    """Inclusion probability for one indicator shared by two coefficients."""
    log_bf = (
        log_normal_pdf(coef_a, 0.0, spike_var)
        + log_normal_pdf(coef_b, 0.0, spike_var)
        - log_normal_pdf(coef_a, 0.0, slab_var)
        - log_normal_pdf(coef_b, 0.0, slab_var)
    )
    if log_bf > _LOG_BF_CLAMP:
        log_bf = _LOG_BF_CLAMP
    elif log_bf < -_LOG_BF_CLAMP:
        log_bf = -_LOG_BF_CLAMP
    return 1.0 / (1.0 + math.exp(log_bf) * (1.0 - p) / p)


@njit
def draw_group_mean(s, n0, ybar0, n1, ybar1, mu_diff, var_pre, var_post, var_base, prior_mean):
    """One draw of a group's pre-treatment mean given everything else.

    Conjugate normal combination of the pre-period likelihood, the
    post-period likelihood shifted by the current mean change, and the
    baseline regression prior.
    """
    denom = var_base * (n0 * var_post + n1 * var_pre) + var_pre * var_post
    mean = (
        var_base * (var_post * n0 * ybar0 + var_pre * n1 * (ybar1 - mu_diff))
        + var_pre * var_post * prior_mean
    ) / denom
    var = var_pre * var_post * var_base / denom
    return mean + math.sqrt(var) * next_normal(s)


@njit
def draw_group_change(s, n1, ybar1, mu, var_post, var_change, prior_mean):
    """One draw of a group's mean outcome change given everything else."""
    denom = n1 * var_change + var_post
    mean = (n1 * var_change * (ybar1 - mu) + var_post * prior_mean) / denom
    var = var_post * var_change / denom
    return mean + math.sqrt(var) * next_normal(s)


@njit
def cholesky_lower(a):
    """In-place lower Cholesky of a small symmetric matrix; 0 on success."""
    n = a.shape[0]
    for i in range(n):
        for j in range(i + 1):
            acc = a[i, j]
            for k in range(j):
                acc -= a[i, k] * a[j, k]
            if i == j:
                if acc <= 0.0:
                    return 1
                a[i, i] = math.sqrt(acc)
            else:
                a[i, j] = acc / a[j, j]
    return 0


@njit
def draw_coefficient_block(s, design, gram, targets, resvar, prior_prec, out):
    """Draw a full coefficient block from its Gaussian conditional.

    Posterior precision is gram/resvar + diag(prior_prec); the draw is
    mean + solve(L^T, z) with L the lower Cholesky factor of the precision.
    Returns 0 on success, 1 if the precision is numerically singular.
    """
    nobs = design.shape[0]
    d = design.shape[1]
    q = np.empty((d, d))
    rhs = np.empty(d)
    for a in range(d):
        acc = 0.0
        for j in range(nobs):
            acc += design[j, a] * targets[j]
        rhs[a] = acc / resvar
        for b in range(d):
            q[a, b] = gram[a, b] / resvar
        q[a, a] += prior_prec[a]
    if cholesky_lower(q):
        return 1
    # mean: forward then back substitution on the factored precision
    for i in range(d):
        acc = rhs[i]
        for k in range(i):
            acc -= q[i, k] * rhs[k]
        rhs[i] = acc / q[i, i]
    for i in range(d - 1, -1, -1):
        acc = rhs[i]
        for k in range(i + 1, d):
            acc -= q[k, i] * rhs[k]
        rhs[i] = acc / q[i, i]
    # noise: back substitution of iid normals against L^T
    for i in range(d):
        out[i] = next_normal(s)
    for i in range(d - 1, -1, -1):
        acc = out[i]
        for k in range(i + 1, d):
            acc -= q[k, i] * out[k]
        out[i] = acc / q[i, i]
    for i in range(d):
        out[i] += rhs[i]
    return 0
