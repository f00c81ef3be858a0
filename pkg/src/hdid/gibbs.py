"""Full-conditional parameters and the assembled variable-selection samplers.

The ``*_conditional`` functions return the exact parameters of each
conjugate full conditional; they are the reference against which the
compiled sweep's draws are moment-tested. ``run_sampler`` executes the
whole update cycle (group means/changes, group variances, mean-level
variances, coefficient blocks, then the method's indicator and slab
updates) through the compiled chain kernel.

Conventions shared with the kernels: a coefficient block is drawn jointly
over [intercept, treatment (where adjusted), all K covariates]; excluded
covariates stay in the block under their spike prior, so fixed-mask fits
("full", "null", choice grids) and the selection methods share one code
path. Treatment coefficients always ride with a diffuse prior and are
never indicator-gated.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import _chain, _kernels
from .errors import InvalidParameterError, NumericalError
from .model import (
    ChainState,
    HdidDataset,
    ModelSpec,
    ParamSummary,
    PosteriorSummary,
    PriorConfig,
)
from .rng import RngStream, sample_inverse_gamma, sample_mvn


class GaussianCond(NamedTuple):
    mean: float
    variance: float


class InverseGammaCond(NamedTuple):
    """Shape/rate pair: the variance is IG(shape, rate), equivalently the
    precision is Gamma(shape, rate)."""

    shape: float
    rate: float


def mu_conditional(
    n_pre: float,
    ybar_pre: float,
    n_post: float,
    ybar_post: float,
    mu_diff: float,
    var_pre: float,
    var_post: float,
    var_base: float,
    prior_mean: float,
) -> GaussianCond:
    """Conditional of a group's pre-treatment mean.

    ``prior_mean`` is the baseline regression value for the group
    (intercept + treatment term where adjusted + covariate term).
    """
    denom = var_base * (n_pre * var_post + n_post * var_pre) + var_pre * var_post
    mean = (
        var_base * (var_post * n_pre * ybar_pre + var_pre * n_post * (ybar_post - mu_diff))
        + var_pre * var_post * prior_mean
    ) / denom
    return GaussianCond(mean, var_pre * var_post * var_base / denom)


def mudiff_conditional(
    n_post: float,
    ybar_post: float,
    mu: float,
    var_post: float,
    var_change: float,
    prior_mean: float,
) -> GaussianCond:
    """Conditional of a group's mean outcome change."""
    denom = n_post * var_change + var_post
    mean = (n_post * var_change * (ybar_post - mu) + var_post * prior_mean) / denom
    return GaussianCond(mean, var_post * var_change / denom)


def sigma_conditionals(
    n_pre: float,
    ss_pre: float,
    ybar_pre: float,
    n_post: float,
    ss_post: float,
    ybar_post: float,
    mu: float,
    mu_diff: float,
    prior_shape: float = 0.0,
    prior_rate: float = 0.0,
) -> tuple[InverseGammaCond, InverseGammaCond]:
    """Conditionals of the pre- and post-period group variances.

    Residual sums around the current group means; a zero residual rate is
    floored at 1e-12. Periods with no observations keep their value (the
    returned params are only meaningful for n >= 1).
    """
    d0 = ybar_pre - mu
    rate0 = max(0.5 * (ss_pre + n_pre * d0 * d0), 1e-12)
    d1 = ybar_post - mu - mu_diff
    rate1 = max(0.5 * (ss_post + n_post * d1 * d1), 1e-12)
    return (
        InverseGammaCond(prior_shape + 0.5 * n_pre, prior_rate + rate0),
        InverseGammaCond(prior_shape + 0.5 * n_post, prior_rate + rate1),
    )


def tau_conditionals(
    resid_ss_base: float,
    resid_ss_change: float,
    n_groups: int,
    prior_shape: float = 0.0,
    prior_rate: float = 0.0,
) -> tuple[InverseGammaCond, InverseGammaCond]:
    """Conditionals of the baseline and change mean-level variances.

    Rates use half the squared Euclidean norm of the mean residuals (the
    only conjugate reading of the update), floored at 1e-12.
    """
    return (
        InverseGammaCond(prior_shape + 0.5 * n_groups, prior_rate + max(0.5 * resid_ss_base, 1e-12)),
        InverseGammaCond(prior_shape + 0.5 * n_groups, prior_rate + max(0.5 * resid_ss_change, 1e-12)),
    )


def coefficient_block_params(
    targets: np.ndarray, design: np.ndarray, resvar: float, prior_prec: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Mean and covariance of a coefficient block's Gaussian conditional."""
    design = np.asarray(design, dtype=float)
    targets = np.asarray(targets, dtype=float)
    prior_prec = np.asarray(prior_prec, dtype=float)
    q = design.T @ design / resvar + np.diag(prior_prec)
    try:
        cov = np.linalg.inv(q)
    except np.linalg.LinAlgError as exc:
        raise NumericalError("coefficient block precision is singular") from exc
    mean = cov @ (design.T @ targets / resvar)
    return mean, (cov + cov.T) / 2.0


def coefficient_block_draw(
    targets: np.ndarray,
    design: np.ndarray,
    resvar: float,
    prior_prec: np.ndarray,
    rng: RngStream,
) -> np.ndarray:
    mean, cov = coefficient_block_params(targets, design, resvar, prior_prec)
    return sample_mvn(mean, cov, rng)


def inclusion_prob(coef: float, spike_var: float, slab_var: float, p: float) -> float:
    """P(slab) for one coefficient: 1 / (1 + BF (1-p)/p), BF in log space."""
    if spike_var <= 0 or slab_var <= 0:
        raise InvalidParameterError("spike and slab variances must be positive")
    return float(_kernels.inclusion_probability(coef, spike_var, slab_var, p))


def shared_inclusion_prob(coef_pair, spike_var: float, slab_var: float, p: float) -> float:
    """P(slab) for one indicator governing a baseline/change coefficient pair."""
    if spike_var <= 0 or slab_var <= 0:
        raise InvalidParameterError("spike and slab variances must be positive")
    a, b = coef_pair
    return float(_kernels.paired_inclusion_probability(a, b, spike_var, slab_var, p))


def gamma_conditional(
    indicator: int, coefs, df: float, scale: float, conjugate_multi: bool = False
) -> InverseGammaCond:
    """Conditional of a slab precision given its indicator and coefficient(s).

    The precision is Gamma(shape, rate). For a shared indicator over two
    coefficients the default shape increment stays 0.5 per draw; the
    conjugate variant (0.5 per coefficient) is behind ``conjugate_multi``.
    """
    if df <= 0 or scale <= 0:
        raise InvalidParameterError("slab df and scale must be positive")
    coefs = np.atleast_1d(np.asarray(coefs, dtype=float))
    inc = 0.5 * len(coefs) if conjugate_multi else 0.5
    shape = 0.5 * df + inc * indicator
    rate = 0.5 * df * scale * scale + 0.5 * indicator * float(np.sum(coefs**2))
    return InverseGammaCond(shape, rate)


def exposure_block_draw(
    t: np.ndarray, x: np.ndarray, state: ChainState, priors: PriorConfig, rng: RngStream
) -> tuple[float, np.ndarray, float, np.ndarray, np.ndarray]:
    """One update of the exposure model (treatment regressed on covariates).

    Conditions only on (T, X) and its own state, never on outcome-model
    quantities. Returns and stores the updated
    (intercept, coefficients, residual variance, indicators, slab precisions).
    """
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    j, k = x.shape
    if j < 2:
        warnings.warn("J < 2: exposure residual variance weakly identified", stacklevel=2)
    design = np.column_stack([np.ones(j), x])
    spike_var = priors.spike_var_vector(k)
    prior_prec = np.empty(k + 1)
    prior_prec[0] = 1.0 / priors.exposure_intercept_var
    prior_prec[1:] = np.where(state.incl_exp == 1, state.slab_prec_exp, 1.0 / spike_var)
    coefs = coefficient_block_draw(t, design, state.var_exp, prior_prec, rng)
    state.icept_exp = float(coefs[0])
    state.coef_exp = coefs[1:].copy()
    rss = float(np.sum((t - design @ coefs) ** 2))
    state.var_exp = sample_inverse_gamma(0.5 * j, max(0.5 * rss, 1e-12), rng)
    lam = np.broadcast_to(np.asarray(priors.slab_scale, dtype=float), (k,))
    for i in range(k):
        pr = inclusion_prob(
            state.coef_exp[i], spike_var[i], 1.0 / state.slab_prec_exp[i], priors.p_exposure
        )
        state.incl_exp[i] = 1 if rng.uniform() < pr else 0
        cond = gamma_conditional(
            state.incl_exp[i], state.coef_exp[i], priors.slab_df, float(lam[i])
        )
        state.slab_prec_exp[i] = float(_kernels.next_gamma(rng.state(), cond.shape, cond.rate))
    return state.icept_exp, state.coef_exp, state.var_exp, state.incl_exp, state.slab_prec_exp


@dataclass
class SamplerOutput:
    """Retained draws (post burn-in, thinned) of the reported quantities."""

    method: str
    draws: dict
    draw_count: int
    wall_seconds: float
    covariate_names: tuple
    anchor: float

    def summary(self) -> PosteriorSummary:
        params = {}

        def add(name, series):
            series = np.asarray(series, dtype=float)
            lo, hi = np.quantile(series, [0.025, 0.975])
            params[name] = ParamSummary(
                float(series.mean()), float(series.std(ddof=1)) if series.size > 1 else 0.0,
                float(lo), float(hi),
            )

        add("treatment_effect", self.draws["treat_effect"])
        add("treatment_baseline", self.draws["treat_base"])
        add("intercept_baseline", self.draws["icept_base"])
        add("intercept_change", self.draws["icept_change"])
        add("tau2_baseline", self.draws["tau2_base"])
        add("tau2_change", self.draws["tau2_change"])
        for i, name in enumerate(self.covariate_names):
            add(f"change:{name}", self.draws["coef_change"][:, i])
            add(f"baseline:{name}", self.draws["coef_base"][:, i])
        incl_change = {
            name: float(self.draws["w_change"][:, i].mean())
            for i, name in enumerate(self.covariate_names)
        }
        incl_base = {
            name: float(self.draws["w_base"][:, i].mean())
            for i, name in enumerate(self.covariate_names)
        }
        incl_exp = None
        if self.method == "sufficient":
            incl_exp = {
                name: float(self.draws["w_exp"][:, i].mean())
                for i, name in enumerate(self.covariate_names)
            }
        return PosteriorSummary(params, incl_change, incl_base, incl_exp)


def build_designs(x: np.ndarray, t: np.ndarray, adjust_t: bool):
    """Design matrices and grams for the baseline, change, exposure blocks."""
    j = x.shape[0]
    ones = np.ones(j)
    if adjust_t:
        xb = np.column_stack([ones, t, x])
    else:
        xb = np.column_stack([ones, x])
    xc = np.column_stack([ones, t, x])
    xe = np.column_stack([ones, x])
    return xb, xc, xe, xb.T @ xb, xc.T @ xc, xe.T @ xe


def build_hyperparams(priors: PriorConfig) -> np.ndarray:
    hyp = np.empty(12)
    hyp[0] = 0.5 * priors.slab_df
    hyp[1] = priors.p_change
    hyp[2] = priors.p_baseline
    hyp[3] = priors.p_exposure
    hyp[4] = 1.0 / priors.intercept_var_baseline
    hyp[5] = 1.0 / priors.treatment_var
    hyp[6] = 1.0 / priors.intercept_var_change
    hyp[7] = 1.0 / priors.exposure_intercept_var
    hyp[8] = priors.group_var_shape
    hyp[9] = priors.group_var_rate
    hyp[10] = priors.mean_var_shape
    hyp[11] = priors.mean_var_rate
    return hyp


def location_anchor(dataset: HdidDataset, spec: ModelSpec) -> float:
    """Lower-median group pre-period mean (an actual group mean, so fits
    are exactly translation-equivariant); 0 when centering is disabled."""
    if spec.center != "median":
        return 0.0
    stats = dataset.group_stats()
    means = stats.ybar_pre[stats.n_pre >= 1]
    if means.size == 0:
        return 0.0
    ordered = np.sort(means)
    return float(ordered[(ordered.size - 1) // 2])


def run_sampler(
    dataset: HdidDataset, spec: ModelSpec, priors: PriorConfig, rng: RngStream
) -> SamplerOutput:
    """Run one chain of the configured method and return its retained draws.

    Raises NumericalError with the failing iteration if the chain state
    becomes non-finite.
    """
    spec.check()
    priors.check()
    j = dataset.n_groups
    k = dataset.n_covariates
    stats = dataset.group_stats()
    anchor = location_anchor(dataset, spec)

    if spec.method == "sufficient" and j < 2:
        warnings.warn("J < 2: exposure residual variance weakly identified", stacklevel=2)

    xb, xc, xe, gramb, gramc, grame = build_designs(dataset.x, dataset.t, spec.adjust_baseline_for_t)
    base_mask, change_mask = spec.resolved_masks(k)
    hyp = build_hyperparams(priors)
    spike_var = priors.spike_var_vector(k)
    slab_rate0 = priors.slab_rate_vector(k)

    r = spec.retained_draws()
    draws = {
        "icept_base": np.zeros(r),
        "treat_base": np.zeros(r),
        "icept_change": np.zeros(r),
        "treat_effect": np.zeros(r),
        "coef_base": np.zeros((r, k)),
        "coef_change": np.zeros((r, k)),
        "w_base": np.zeros((r, k)),
        "w_change": np.zeros((r, k)),
        "w_exp": np.zeros((r, k)),
        "tau2_base": np.zeros(r),
        "tau2_change": np.zeros(r),
    }

    tic = time.perf_counter()
    status = _chain.run_chain(
        rng.state(),
        spec.method_code,
        spec.adjust_baseline_for_t,
        1 if spec.shared_conjugate_gamma else 0,
        stats.n_pre,
        stats.n_post,
        stats.ybar_pre - anchor,
        stats.ybar_post - anchor,
        stats.ss_pre,
        stats.ss_post,
        xb, xc, xe, gramb, gramc, grame,
        dataset.t,
        spike_var,
        slab_rate0,
        hyp,
        base_mask,
        change_mask,
        spec.iterations,
        spec.burnin,
        spec.thinning,
        draws["icept_base"],
        draws["treat_base"],
        draws["icept_change"],
        draws["treat_effect"],
        draws["coef_base"],
        draws["coef_change"],
        draws["w_base"],
        draws["w_change"],
        draws["w_exp"],
        draws["tau2_base"],
        draws["tau2_change"],
    )
    wall = time.perf_counter() - tic
    if status != 0:
        raise NumericalError(
            f"chain produced non-finite state at iteration {int(status) - 1} "
            f"(method '{spec.method}', seed {rng.seed}, stream {rng.stream_id})"
        )
    draws["icept_base"] += anchor
    return SamplerOutput(
        method=spec.method,
        draws=draws,
        draw_count=r,
        wall_seconds=wall,
        covariate_names=dataset.covariate_names,
        anchor=anchor,
    )


def geweke_successive(
    n_pre: np.ndarray,
    n_post: np.ndarray,
    x: np.ndarray,
    t: np.ndarray,
    spec: ModelSpec,
    priors: PriorConfig,
    n_records: int,
    spacing: int,
    rng: RngStream,
):
    """Successive-conditional simulator for joint-distribution testing.

    Alternates one Gibbs sweep with regeneration of the outcomes given the
    current latent state; under a correct sampler the recorded
    (tau2_change, treatment_effect, w1) match their prior laws. Requires
    proper variance hyperpriors and disables location anchoring.
    """
    if priors.group_var_shape <= 0 or priors.mean_var_shape <= 0:
        raise InvalidParameterError("geweke test requires proper variance hyperpriors")
    xb, xc, xe, gramb, gramc, grame = build_designs(x, t, spec.adjust_baseline_for_t)
    k = x.shape[1]
    out_tau2 = np.zeros(n_records)
    out_delta = np.zeros(n_records)
    out_w1 = np.zeros(n_records)
    status = _chain.geweke_successive(
        rng.state(),
        spec.method_code,
        spec.adjust_baseline_for_t,
        np.asarray(n_pre, dtype=float),
        np.asarray(n_post, dtype=float),
        xb, xc, xe, gramb, gramc, grame,
        np.asarray(t, dtype=float),
        priors.spike_var_vector(k),
        priors.slab_rate_vector(k),
        build_hyperparams(priors),
        priors.intercept_var_baseline,
        priors.treatment_var,
        priors.intercept_var_change,
        n_records,
        spacing,
        out_tau2,
        out_delta,
        out_w1,
    )
    if status != 0:
        raise NumericalError(f"geweke chain failed at record {int(status) - 1}")
    return out_tau2, out_delta, out_w1
