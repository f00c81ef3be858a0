"""Gibbs sweep and chain kernels for the hierarchical DiD samplers.

One sweep updates, in order: per-group pre-treatment means and mean
changes, per-group outcome variances, the two mean-level variances, the
baseline and change coefficient blocks, the exposure block (sufficient
method only), and finally the method-specific inclusion indicators and
slab precisions. The ordering and conditional forms implement the four
selection samplers plus fixed-mask fits.

Method codes: 0 fixed masks, 1 separate, 2 shared, 3 sufficient,
4 efficient. Indicator chains are drawn exposure -> change -> baseline so
no earlier block ever conditions on a later one (feedback cutting).

Hyperparameter vector ``hyp`` layout (float64[12]):
  0 slab shape (df/2)          6 change-intercept precision
  1 change inclusion prior p   7 exposure-intercept precision
  2 baseline inclusion prior   8 group-variance prior shape
  3 exposure inclusion prior   9 group-variance prior rate
  4 base-intercept precision  10 mean-variance prior shape
  5 treatment precision       11 mean-variance prior rate

Scalar state ``scalars`` layout (float64[3]): baseline mean variance,
change mean variance, exposure residual variance.
"""

from __future__ import annotations

import math

import numpy as np

from .backend import njit
from ._kernels import (
    draw_coefficient_block,
    draw_group_change,
    draw_group_mean,
    inclusion_probability,
    next_gamma,
    next_invgamma,
    next_normal,
    next_uniform,
    paired_inclusion_probability,
)

METHOD_FIXED = 0
METHOD_SEPARATE = 1
METHOD_SHARED = 2
METHOD_SUFFICIENT = 3
METHOD_EFFICIENT = 4

_RATE_FLOOR = 1e-12


@njit
def _linear_predictor(design, coef, out):
    for j in range(design.shape[0]):
        acc = 0.0
        for a in range(design.shape[1]):
            acc += design[j, a] * coef[a]
        out[j] = acc


@njit
def sweep(
    s,
    method,
    adjust_t,
    shared_conjugate,
    n0f,
    n1f,
    ybar0,
    ybar1,
    ss0,
    ss1,
    xb,
    xc,
    xe,
    gramb,
    gramc,
    grame,
    tvec,
    spike_var,
    slab_rate0,
    hyp,
    mu,
    mudiff,
    s2pre,
    s2post,
    cb,
    cc,
    ce,
    w_base,
    w_change,
    w_exp,
    gb,
    gc,
    ge,
    scalars,
):
    """One full Gibbs iteration; returns 0 on success, 1 on numerical failure."""
    njg = mu.shape[0]
    k = spike_var.shape[0]
    db = xb.shape[1]
    dc = xc.shape[1]
    offb = 2 if adjust_t else 1
    shape0 = hyp[0]
    a_group = hyp[8]
    b_group = hyp[9]
    a_mean = hyp[10]
    b_mean = hyp[11]

    tau2b = scalars[0]
    tau2c = scalars[1]

    mb = np.empty(njg)
    mc = np.empty(njg)
    _linear_predictor(xb, cb, mb)
    _linear_predictor(xc, cc, mc)

    for j in range(njg):
        mu[j] = draw_group_mean(
            s, n0f[j], ybar0[j], n1f[j], ybar1[j], mudiff[j], s2pre[j], s2post[j], tau2b, mb[j]
        )
        mudiff[j] = draw_group_change(s, n1f[j], ybar1[j], mu[j], s2post[j], tau2c, mc[j])
        if n0f[j] >= 1.0:
            d = ybar0[j] - mu[j]
            rss = ss0[j] + n0f[j] * d * d
            rate = 0.5 * rss
            if rate < _RATE_FLOOR:
                rate = _RATE_FLOOR
            s2pre[j] = next_invgamma(s, a_group + 0.5 * n0f[j], b_group + rate)
        if n1f[j] >= 1.0:
            d = ybar1[j] - mu[j] - mudiff[j]
            rss = ss1[j] + n1f[j] * d * d
            rate = 0.5 * rss
            if rate < _RATE_FLOOR:
                rate = _RATE_FLOOR
            s2post[j] = next_invgamma(s, a_group + 0.5 * n1f[j], b_group + rate)

    rssb = 0.0
    rssc = 0.0
    for j in range(njg):
        d = mu[j] - mb[j]
        rssb += d * d
        d = mudiff[j] - mc[j]
        rssc += d * d
    rate = 0.5 * rssb
    if rate < _RATE_FLOOR:
        rate = _RATE_FLOOR
    scalars[0] = next_invgamma(s, a_mean + 0.5 * njg, b_mean + rate)
    rate = 0.5 * rssc
    if rate < _RATE_FLOOR:
        rate = _RATE_FLOOR
    scalars[1] = next_invgamma(s, a_mean + 0.5 * njg, b_mean + rate)

    # coefficient blocks; the shared method uses one indicator/precision set
    pb = np.empty(db)
    pb[0] = hyp[4]
    if adjust_t:
        pb[1] = hyp[5]
    for i in range(k):
        if method == METHOD_SHARED:
            pb[offb + i] = gc[i] if w_change[i] == 1 else 1.0 / spike_var[i]
        else:
            pb[offb + i] = gb[i] if w_base[i] == 1 else 1.0 / spike_var[i]
    if draw_coefficient_block(s, xb, gramb, mu, scalars[0], pb, cb):
        return 1

    pc = np.empty(dc)
    pc[0] = hyp[6]
    pc[1] = hyp[5]
    for i in range(k):
        pc[2 + i] = gc[i] if w_change[i] == 1 else 1.0 / spike_var[i]
    if draw_coefficient_block(s, xc, gramc, mudiff, scalars[1], pc, cc):
        return 1

    if method == METHOD_SUFFICIENT:
        de = xe.shape[1]
        pe = np.empty(de)
        pe[0] = hyp[7]
        for i in range(k):
            pe[1 + i] = ge[i] if w_exp[i] == 1 else 1.0 / spike_var[i]
        if draw_coefficient_block(s, xe, grame, tvec, scalars[2], pe, ce):
            return 1
        rsse = 0.0
        for j in range(njg):
            acc = 0.0
            for a in range(de):
                acc += xe[j, a] * ce[a]
            d = tvec[j] - acc
            rsse += d * d
        rate = 0.5 * rsse
        if rate < _RATE_FLOOR:
            rate = _RATE_FLOOR
        scalars[2] = next_invgamma(s, 0.5 * njg, rate)

    for i in range(k):
        beta_b = cb[offb + i]
        beta_c = cc[2 + i]
        if method == METHOD_SEPARATE:
            pr = inclusion_probability(beta_b, spike_var[i], 1.0 / gb[i], hyp[2])
            w_base[i] = 1 if next_uniform(s) < pr else 0
            pr = inclusion_probability(beta_c, spike_var[i], 1.0 / gc[i], hyp[1])
            w_change[i] = 1 if next_uniform(s) < pr else 0
        elif method == METHOD_SHARED:
            pr = paired_inclusion_probability(beta_b, beta_c, spike_var[i], 1.0 / gc[i], hyp[1])
            w = 1 if next_uniform(s) < pr else 0
            w_change[i] = w
            w_base[i] = w
        elif method == METHOD_SUFFICIENT:
            pr = inclusion_probability(ce[1 + i], spike_var[i], 1.0 / ge[i], hyp[3])
            w_exp[i] = 1 if next_uniform(s) < pr else 0
            pr = inclusion_probability(beta_c, spike_var[i], 1.0 / gc[i], hyp[1])
            w_change[i] = w_exp[i] if next_uniform(s) < pr else 0
            pr = inclusion_probability(beta_b, spike_var[i], 1.0 / gb[i], hyp[2])
            w_base[i] = w_change[i] if next_uniform(s) < pr else 0
        elif method == METHOD_EFFICIENT:
            pr = inclusion_probability(beta_c, spike_var[i], 1.0 / gc[i], hyp[1])
            w_change[i] = 1 if next_uniform(s) < pr else 0
            pr = inclusion_probability(beta_b, spike_var[i], 1.0 / gb[i], hyp[2])
            w_base[i] = w_change[i] if next_uniform(s) < pr else 0

        if method == METHOD_SHARED:
            ssq = beta_b * beta_b + beta_c * beta_c
            inc = 1.0 if shared_conjugate else 0.5
            g = next_gamma(s, shape0 + inc * w_change[i], slab_rate0[i] + 0.5 * w_change[i] * ssq)
            gc[i] = g
            gb[i] = g
        else:
            if method == METHOD_SUFFICIENT:
                ge[i] = next_gamma(
                    s,
                    shape0 + 0.5 * w_exp[i],
                    slab_rate0[i] + 0.5 * w_exp[i] * ce[1 + i] * ce[1 + i],
                )
            gb[i] = next_gamma(
                s, shape0 + 0.5 * w_base[i], slab_rate0[i] + 0.5 * w_base[i] * beta_b * beta_b
            )
            gc[i] = next_gamma(
                s, shape0 + 0.5 * w_change[i], slab_rate0[i] + 0.5 * w_change[i] * beta_c * beta_c
            )

    ok = (
        math.isfinite(scalars[0])
        and math.isfinite(scalars[1])
        and scalars[0] > 0.0
        and scalars[1] > 0.0
    )
    acc = 0.0
    for a in range(db):
        acc += cb[a]
    for a in range(dc):
        acc += cc[a]
    if not (ok and math.isfinite(acc)):
        return 1
    return 0


@njit
def run_chain(
    s,
    method,
    adjust_t,
    shared_conjugate,
    n0f,
    n1f,
    ybar0,
    ybar1,
    ss0,
    ss1,
    xb,
    xc,
    xe,
    gramb,
    gramc,
    grame,
    tvec,
    spike_var,
    slab_rate0,
    hyp,
    mask_base,
    mask_change,
    iterations,
    burnin,
    thin,
    out_icept_base,
    out_treat_base,
    out_icept_change,
    out_treat_effect,
    out_coef_base,
    out_coef_change,
    out_w_base,
    out_w_change,
    out_w_exp,
    out_tau2_base,
    out_tau2_change,
):
    """Run a full chain, retaining floor((iterations-burnin)/thin) draws.

    Returns 0 on success; on numerical failure returns the 1-based
    iteration index at which the sweep failed.
    """
    njg = n0f.shape[0]
    k = spike_var.shape[0]
    db = xb.shape[1]
    dc = xc.shape[1]
    de = xe.shape[1]
    offb = 2 if adjust_t else 1

    mu = np.empty(njg)
    mudiff = np.empty(njg)
    s2pre = np.empty(njg)
    s2post = np.empty(njg)
    for j in range(njg):
        mu[j] = ybar0[j] if n0f[j] >= 1.0 else 0.0
        mudiff[j] = (ybar1[j] - mu[j]) if n1f[j] >= 1.0 else 0.0
        v = ss0[j] / (n0f[j] - 1.0) if n0f[j] >= 2.0 else 0.0
        s2pre[j] = v if v > 1e-6 else 1e-6
        v = ss1[j] / (n1f[j] - 1.0) if n1f[j] >= 2.0 else 0.0
        s2post[j] = v if v > 1e-6 else 1e-6

    cb = np.zeros(db)
    cc = np.zeros(dc)
    ce = np.zeros(de)
    w_base = mask_base.copy()
    w_change = mask_change.copy()
    w_exp = np.ones(k, dtype=np.int64)
    gb = np.empty(k)
    gc = np.empty(k)
    ge = np.empty(k)
    for i in range(k):
        prior_mean = hyp[0] / slab_rate0[i]
        gb[i] = prior_mean
        gc[i] = prior_mean
        ge[i] = prior_mean
    scalars = np.empty(3)
    scalars[0] = 1.0
    scalars[1] = 1.0
    scalars[2] = 1.0

    for t in range(iterations):
        status = sweep(
            s, method, adjust_t, shared_conjugate,
            n0f, n1f, ybar0, ybar1, ss0, ss1,
            xb, xc, xe, gramb, gramc, grame, tvec,
            spike_var, slab_rate0, hyp,
            mu, mudiff, s2pre, s2post,
            cb, cc, ce, w_base, w_change, w_exp, gb, gc, ge, scalars,
        )
        if status != 0:
            return t + 1
        if t >= burnin and (t - burnin + 1) % thin == 0:
            r = (t - burnin + 1) // thin - 1
            if r < out_treat_effect.shape[0]:
                out_icept_base[r] = cb[0]
                out_treat_base[r] = cb[1] if adjust_t else 0.0
                out_icept_change[r] = cc[0]
                out_treat_effect[r] = cc[1]
                for i in range(k):
                    out_coef_base[r, i] = cb[offb + i]
                    out_coef_change[r, i] = cc[2 + i]
                    out_w_base[r, i] = float(w_base[i])
                    out_w_change[r, i] = float(w_change[i])
                    out_w_exp[r, i] = float(w_exp[i])
                out_tau2_base[r] = scalars[0]
                out_tau2_change[r] = scalars[1]
    return 0


@njit
def _regenerate_stats(s, n0f, n1f, mu, mudiff, s2pre, s2post, ybar0, ybar1, ss0, ss1):
    """Replace the group sufficient statistics with fresh data given the state."""
    for j in range(n0f.shape[0]):
        n0 = int(n0f[j])
        sd = math.sqrt(s2pre[j])
        tot = 0.0
        totsq = 0.0
        for _ in range(n0):
            y = mu[j] + sd * next_normal(s)
            tot += y
            totsq += y * y
        if n0 > 0:
            ybar0[j] = tot / n0
            ss0[j] = totsq - n0 * ybar0[j] * ybar0[j]
        n1 = int(n1f[j])
        sd = math.sqrt(s2post[j])
        loc = mu[j] + mudiff[j]
        tot = 0.0
        totsq = 0.0
        for _ in range(n1):
            y = loc + sd * next_normal(s)
            tot += y
            totsq += y * y
        if n1 > 0:
            ybar1[j] = tot / n1
            ss1[j] = totsq - n1 * ybar1[j] * ybar1[j]


@njit
def geweke_successive(
    s,
    method,
    adjust_t,
    n0f,
    n1f,
    xb,
    xc,
    xe,
    gramb,
    gramc,
    grame,
    tvec,
    spike_var,
    slab_rate0,
    hyp,
    var_icept_base,
    var_treat,
    var_icept_change,
    n_records,
    spacing,
    out_tau2_change,
    out_treat_effect,
    out_w1_change,
):
    """Successive-conditional simulator: alternate Gibbs sweeps with data
    regeneration so the chain targets the joint prior-times-likelihood.

    Requires proper variance hyperpriors (hyp[8..11] > 0). Records the
    change-model mean variance, the treatment effect, and the first
    change-model indicator after every ``spacing`` cycles.
    """
    njg = n0f.shape[0]
    k = spike_var.shape[0]
    db = xb.shape[1]
    dc = xc.shape[1]
    offb = 2 if adjust_t else 1
    shape0 = hyp[0]

    # parameter draw from the prior
    scalars = np.empty(3)
    scalars[0] = next_invgamma(s, hyp[10], hyp[11])
    scalars[1] = next_invgamma(s, hyp[10], hyp[11])
    scalars[2] = 1.0
    s2pre = np.empty(njg)
    s2post = np.empty(njg)
    for j in range(njg):
        s2pre[j] = next_invgamma(s, hyp[8], hyp[9])
        s2post[j] = next_invgamma(s, hyp[8], hyp[9])
    gb = np.empty(k)
    gc = np.empty(k)
    ge = np.empty(k)
    w_base = np.zeros(k, dtype=np.int64)
    w_change = np.zeros(k, dtype=np.int64)
    w_exp = np.ones(k, dtype=np.int64)
    for i in range(k):
        gb[i] = next_gamma(s, shape0, slab_rate0[i])
        gc[i] = next_gamma(s, shape0, slab_rate0[i])
        ge[i] = gc[i]
        w_change[i] = 1 if next_uniform(s) < hyp[1] else 0
        if method == METHOD_SEPARATE:
            w_base[i] = 1 if next_uniform(s) < hyp[2] else 0
        else:
            w_base[i] = w_change[i] if next_uniform(s) < hyp[2] else 0
    cb = np.empty(db)
    cc = np.empty(dc)
    ce = np.zeros(xe.shape[1])
    cb[0] = math.sqrt(var_icept_base) * next_normal(s)
    if adjust_t:
        cb[1] = math.sqrt(var_treat) * next_normal(s)
    cc[0] = math.sqrt(var_icept_change) * next_normal(s)
    cc[1] = math.sqrt(var_treat) * next_normal(s)
    for i in range(k):
        v = 1.0 / gb[i] if w_base[i] == 1 else spike_var[i]
        cb[offb + i] = math.sqrt(v) * next_normal(s)
        v = 1.0 / gc[i] if w_change[i] == 1 else spike_var[i]
        cc[2 + i] = math.sqrt(v) * next_normal(s)

    mu = np.empty(njg)
    mudiff = np.empty(njg)
    for j in range(njg):
        accb = 0.0
        for a in range(db):
            accb += xb[j, a] * cb[a]
        mu[j] = accb + math.sqrt(scalars[0]) * next_normal(s)
        accc = 0.0
        for a in range(dc):
            accc += xc[j, a] * cc[a]
        mudiff[j] = accc + math.sqrt(scalars[1]) * next_normal(s)

    ybar0 = np.zeros(njg)
    ybar1 = np.zeros(njg)
    ss0 = np.zeros(njg)
    ss1 = np.zeros(njg)
    _regenerate_stats(s, n0f, n1f, mu, mudiff, s2pre, s2post, ybar0, ybar1, ss0, ss1)

    for r in range(n_records):
        for _ in range(spacing):
            status = sweep(
                s, method, adjust_t, 0,
                n0f, n1f, ybar0, ybar1, ss0, ss1,
                xb, xc, xe, gramb, gramc, grame, tvec,
                spike_var, slab_rate0, hyp,
                mu, mudiff, s2pre, s2post,
                cb, cc, ce, w_base, w_change, w_exp, gb, gc, ge, scalars,
            )
            if status != 0:
                return r + 1
            _regenerate_stats(s, n0f, n1f, mu, mudiff, s2pre, s2post, ybar0, ybar1, ss0, ss1)
        out_tau2_change[r] = scalars[1]
        out_treat_effect[r] = cc[1]
        out_w1_change[r] = float(w_change[0])
    return 0
