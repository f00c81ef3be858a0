"""Domain types shared by every sampler: datasets, priors, specs, state.

The hierarchical model has individual outcomes nested in groups. Each
group j carries pre- and post-period observation vectors; group-level
covariates and a treatment exposure drive the latent pre-treatment mean
(the "baseline model") and the latent mean change (the "change model").
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import DataError, InvalidParameterError

METHODS = ("full", "null", "fixed", "separate", "shared", "sufficient", "efficient")
SELECTION_METHODS = ("separate", "shared", "sufficient", "efficient")

_METHOD_CODES = {
    "full": 0,
    "null": 0,
    "fixed": 0,
    "separate": 1,
    "shared": 2,
    "sufficient": 3,
    "efficient": 4,
}


@dataclass
class GroupStats:
    """Per-group sufficient statistics: sizes, means, centered sums of squares."""

    n_pre: np.ndarray
    n_post: np.ndarray
    ybar_pre: np.ndarray
    ybar_post: np.ndarray
    ss_pre: np.ndarray
    ss_post: np.ndarray


class HdidDataset:
    """Group-indexed pre/post outcomes plus group-level covariates and treatment."""

    def __init__(
        self,
        y_pre: Sequence[np.ndarray],
        y_post: Sequence[np.ndarray],
        x: np.ndarray,
        t: np.ndarray,
        covariate_names: Sequence[str] | None = None,
        group_ids: Sequence[str] | None = None,
    ):
        self.y_pre = [np.asarray(y, dtype=float).ravel() for y in y_pre]
        self.y_post = [np.asarray(y, dtype=float).ravel() for y in y_post]
        self.x = np.asarray(x, dtype=float)
        if self.x.ndim == 1:
            self.x = self.x.reshape(len(self.y_pre), -1)
        self.t = np.asarray(t, dtype=float).ravel()
        j = len(self.y_pre)
        if len(self.y_post) != j or self.x.shape[0] != j or self.t.shape[0] != j:
            raise DataError("group counts of y_pre, y_post, X, T do not match")
        k = self.x.shape[1]
        if covariate_names is None:
            covariate_names = [f"X{i + 1}" for i in range(k)]
        if len(covariate_names) != k:
            raise DataError("covariate_names length does not match X columns")
        self.covariate_names = tuple(str(c) for c in covariate_names)
        if group_ids is None:
            group_ids = [f"g{i}" for i in range(j)]
        if len(group_ids) != j:
            raise DataError("group_ids length does not match group count")
        self.group_ids = tuple(str(g) for g in group_ids)

    @property
    def n_groups(self) -> int:
        return len(self.y_pre)

    @property
    def n_covariates(self) -> int:
        return self.x.shape[1]

    def group_stats(self) -> GroupStats:
        j = self.n_groups
        n0 = np.zeros(j)
        n1 = np.zeros(j)
        b0 = np.zeros(j)
        b1 = np.zeros(j)
        s0 = np.zeros(j)
        s1 = np.zeros(j)
        for i, (pre, post) in enumerate(zip(self.y_pre, self.y_post)):
            n0[i] = pre.size
            n1[i] = post.size
            if pre.size:
                b0[i] = pre.mean()
                s0[i] = float(np.sum((pre - b0[i]) ** 2))
            if post.size:
                b1[i] = post.mean()
                s1[i] = float(np.sum((post - b1[i]) ** 2))
        return GroupStats(n0, n1, b0, b1, s0, s1)

    def shifted(self, constant: float) -> "HdidDataset":
        """Copy with the constant added to every outcome (pre and post)."""
        return HdidDataset(
            [y + constant for y in self.y_pre],
            [y + constant for y in self.y_post],
            self.x.copy(),
            self.t.copy(),
            self.covariate_names,
            self.group_ids,
        )


@dataclass(frozen=True)
class PriorConfig:
    """Spike/slab/intercept/inclusion hyperparameters.

    ``spike_sd`` and ``slab_scale`` accept a scalar or a per-covariate
    vector. The slab is a scale-mixture t: precisions carry a
    Gamma(slab_df/2, (slab_df/2) * slab_scale^2) prior. The group- and
    mean-variance (shape, rate) pairs default to zero, i.e. the flat
    1/variance prior; positive values give proper inverse-gamma priors.
    """

    spike_sd: float | tuple = 0.01
    slab_df: float = 5.0
    slab_scale: float | tuple = 5.0
    p_change: float = 0.5
    p_baseline: float = 0.5
    p_exposure: float = 0.5
    intercept_var_baseline: float = 10000.0
    intercept_var_change: float = 10000.0
    treatment_var: float = 10000.0
    exposure_intercept_var: float = 10000.0
    group_var_shape: float = 0.0
    group_var_rate: float = 0.0
    mean_var_shape: float = 0.0
    mean_var_rate: float = 0.0

    def check(self) -> None:
        z = np.atleast_1d(np.asarray(self.spike_sd, dtype=float))
        lam = np.atleast_1d(np.asarray(self.slab_scale, dtype=float))
        if np.any(z <= 0) or np.any(lam <= 0) or self.slab_df <= 0:
            raise InvalidParameterError("spike_sd, slab_scale and slab_df must be positive")
        for name in ("p_change", "p_baseline", "p_exposure"):
            p = getattr(self, name)
            if not 0.0 < p < 1.0:
                raise InvalidParameterError(f"{name} must lie strictly in (0, 1)")
        for name in (
            "intercept_var_baseline",
            "intercept_var_change",
            "treatment_var",
            "exposure_intercept_var",
        ):
            if getattr(self, name) <= 0:
                raise InvalidParameterError(f"{name} must be positive")
        for name in ("group_var_shape", "group_var_rate", "mean_var_shape", "mean_var_rate"):
            if getattr(self, name) < 0:
                raise InvalidParameterError(f"{name} must be nonnegative")

    def spike_var_vector(self, k: int) -> np.ndarray:
        z = np.broadcast_to(np.asarray(self.spike_sd, dtype=float), (k,)).copy()
        return z * z

    def slab_rate_vector(self, k: int) -> np.ndarray:
        lam = np.broadcast_to(np.asarray(self.slab_scale, dtype=float), (k,)).copy()
        return 0.5 * self.slab_df * lam * lam


@dataclass(frozen=True)
class ModelSpec:
    """Which sampler to run and with what chain settings.

    ``full``/``null``/``fixed`` run with frozen inclusion masks (all ones,
    all zeros, or the given masks); the four selection methods draw the
    indicators. ``center`` controls the location anchor subtracted from
    outcomes before sampling ("median" anchors at the lower-median group
    pre-period mean so fits are translation-equivariant; "none" disables).
    """

    method: str = "separate"
    adjust_baseline_for_t: bool = True
    base_mask: tuple = None
    change_mask: tuple = None
    iterations: int = 2000
    burnin: int = 1000
    thinning: int = 1
    shared_conjugate_gamma: bool = False
    center: str = "median"

    def check(self) -> None:
        if self.method not in METHODS:
            raise InvalidParameterError(f"unknown method '{self.method}'")
        if self.iterations <= 0 or self.thinning <= 0 or self.burnin < 0:
            raise InvalidParameterError("iterations and thinning must be positive")
        if self.burnin >= self.iterations:
            raise InvalidParameterError("burn-in must be smaller than iterations")
        if self.center not in ("median", "none"):
            raise InvalidParameterError("center must be 'median' or 'none'")
        if self.method == "fixed" and (self.base_mask is None or self.change_mask is None):
            raise InvalidParameterError("fixed method requires base_mask and change_mask")

    @property
    def method_code(self) -> int:
        return _METHOD_CODES[self.method]

    def resolved_masks(self, k: int) -> tuple[np.ndarray, np.ndarray]:
        if self.method == "full" or self.method in SELECTION_METHODS:
            return np.ones(k, dtype=np.int64), np.ones(k, dtype=np.int64)
        if self.method == "null":
            return np.zeros(k, dtype=np.int64), np.zeros(k, dtype=np.int64)
        base = np.asarray(self.base_mask, dtype=np.int64)
        change = np.asarray(self.change_mask, dtype=np.int64)
        if base.shape != (k,) or change.shape != (k,):
            raise InvalidParameterError("fixed masks must have one entry per covariate")
        return base, change

    def retained_draws(self) -> int:
        return (self.iterations - self.burnin) // self.thinning

    def with_chain(self, iterations: int, burnin: int, thinning: int = 1) -> "ModelSpec":
        return replace(self, iterations=iterations, burnin=burnin, thinning=thinning)


@dataclass
class ChainState:
    """One Gibbs iteration's values of every latent quantity."""

    mu: np.ndarray
    mu_diff: np.ndarray
    var_pre: np.ndarray
    var_post: np.ndarray
    var_base: float
    var_change: float
    icept_base: float
    icept_change: float
    treat_base: float
    treat_effect: float
    coef_base: np.ndarray
    coef_change: np.ndarray
    incl_base: np.ndarray
    incl_change: np.ndarray
    slab_prec_base: np.ndarray
    slab_prec_change: np.ndarray
    icept_exp: float
    coef_exp: np.ndarray
    var_exp: float
    incl_exp: np.ndarray
    slab_prec_exp: np.ndarray


@dataclass
class ParamSummary:
    mean: float
    sd: float
    q025: float
    q975: float


@dataclass
class PosteriorSummary:
    """Posterior moments/quantiles plus per-covariate inclusion probabilities."""

    params: dict
    incl_change: dict
    incl_base: dict
    incl_exp: dict | None = None

    def to_dict(self) -> dict:
        out = {
            "params": {
                name: {"mean": p.mean, "sd": p.sd, "q025": p.q025, "q975": p.q975}
                for name, p in self.params.items()
            },
            "inclusion_change": self.incl_change,
            "inclusion_baseline": self.incl_base,
        }
        if self.incl_exp is not None:
            out["inclusion_exposure"] = self.incl_exp
        return out


@dataclass
class ValidationReport:
    violations: list = field(default_factory=list)
    warnings: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def validate(dataset: HdidDataset, spec: ModelSpec, priors: PriorConfig) -> ValidationReport:
    """Report-only check of type invariants plus variance-stability warnings."""
    report = ValidationReport()
    try:
        spec.check()
        spec.resolved_masks(dataset.n_covariates)
    except InvalidParameterError as exc:
        report.violations.append(f"model spec: {exc}")
    try:
        priors.check()
    except InvalidParameterError as exc:
        report.violations.append(f"priors: {exc}")

    if not np.all(np.isfinite(dataset.t)):
        for j in np.flatnonzero(~np.isfinite(dataset.t)):
            report.violations.append(f"T[j={j}] (group '{dataset.group_ids[j]}') is not finite")
    bad = ~np.isfinite(dataset.x)
    for j, k in zip(*np.nonzero(bad)):
        report.violations.append(
            f"X[j={j},k={k}] (group '{dataset.group_ids[j]}', "
            f"covariate '{dataset.covariate_names[k]}') is not finite"
        )
    any_pre = False
    any_post = False
    for j, (pre, post) in enumerate(zip(dataset.y_pre, dataset.y_post)):
        gid = dataset.group_ids[j]
        if pre.size and not np.all(np.isfinite(pre)):
            report.violations.append(f"y_pre of group '{gid}' contains non-finite values")
        if post.size and not np.all(np.isfinite(post)):
            report.violations.append(f"y_post of group '{gid}' contains non-finite values")
        any_pre = any_pre or pre.size >= 1
        any_post = any_post or post.size >= 1
        if pre.size == 1:
            report.warnings.append(
                f"group '{gid}': single observation in period 0, "
                "pre-period variance weakly identified"
            )
        if post.size == 1:
            report.warnings.append(
                f"group '{gid}': single observation in period 1, "
                "post-period variance weakly identified"
            )
    if not any_pre:
        report.violations.append("no group has a pre-period observation")
    if not any_post:
        report.violations.append("no group has a post-period observation")
    if spec.method == "sufficient" and dataset.n_groups < 2:
        report.warnings.append("J < 2: exposure residual variance weakly identified")
    return report


def initial_state(
    dataset: HdidDataset, spec: ModelSpec, rng=None, priors: PriorConfig | None = None
) -> ChainState:
    """Deterministic starting point; the default policy consumes no draws.

    Group means start at sample means (0 where a period is empty), group
    variances at sample variances floored at 1e-6, mean-level variances at
    1, coefficients at 0, indicators at their resolved masks, slab
    precisions at their prior mean.
    """
    del rng  # default policy is deterministic
    if priors is None:
        priors = PriorConfig()
    stats = dataset.group_stats()
    k = dataset.n_covariates
    mu = np.where(stats.n_pre >= 1, stats.ybar_pre, 0.0)
    mu_diff = np.where(stats.n_post >= 1, stats.ybar_post - mu, 0.0)
    v_pre = np.where(stats.n_pre >= 2, stats.ss_pre / np.maximum(stats.n_pre - 1, 1), 0.0)
    v_post = np.where(stats.n_post >= 2, stats.ss_post / np.maximum(stats.n_post - 1, 1), 0.0)
    base_mask, change_mask = spec.resolved_masks(k)
    lam = np.broadcast_to(np.asarray(priors.slab_scale, dtype=float), (k,))
    prior_prec = 1.0 / (lam * lam)
    return ChainState(
        mu=mu,
        mu_diff=mu_diff,
        var_pre=np.maximum(v_pre, 1e-6),
        var_post=np.maximum(v_post, 1e-6),
        var_base=1.0,
        var_change=1.0,
        icept_base=0.0,
        icept_change=0.0,
        treat_base=0.0,
        treat_effect=0.0,
        coef_base=np.zeros(k),
        coef_change=np.zeros(k),
        incl_base=base_mask,
        incl_change=change_mask,
        slab_prec_base=prior_prec.copy(),
        slab_prec_change=prior_prec.copy(),
        icept_exp=0.0,
        coef_exp=np.zeros(k),
        var_exp=1.0,
        incl_exp=np.ones(k, dtype=np.int64),
        slab_prec_exp=prior_prec.copy(),
    )
