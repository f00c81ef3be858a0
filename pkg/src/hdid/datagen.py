"""Synthetic data generation for the simulation studies.

Generation proceeds in four steps: group covariates (iid standard
normal), treatment exposure as a linear function of covariates plus unit
noise, latent group means and mean changes from the baseline/change
regressions, then individual outcomes around the latent means. All
structural standard deviations default to 1 but can be overridden.

Each covariate is classified by which of (treatment, baseline mean, mean
change) it drives; the eight on/off combinations enumerate the canonical
covariate roles used throughout the studies.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import InvalidParameterError
from .model import HdidDataset
from .rng import RngStream


@dataclass(frozen=True)
class CovariateRole:
    affects_treatment: bool
    affects_baseline: bool
    affects_change: bool


# Roles X1..X8: every on/off combination of
# (affects treatment, affects baseline mean, affects mean change).
ROLE_TABLE = {
    "X1": CovariateRole(True, True, True),
    "X2": CovariateRole(True, True, False),
    "X3": CovariateRole(True, False, True),
    "X4": CovariateRole(True, False, False),
    "X5": CovariateRole(False, True, True),
    "X6": CovariateRole(False, True, False),
    "X7": CovariateRole(False, False, True),
    "X8": CovariateRole(False, False, False),
}

# Study coefficient vectors implied by the role table for K=8.
STUDY_COEF_EXPOSURE = (1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0)
STUDY_COEF_BASE = (1.0, 1.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0)
STUDY_COEF_CHANGE = (1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0)


@dataclass(frozen=True)
class GenerativeConfig:
    """Structural parameters of the generator.

    ``coef_exposure`` drives treatment, ``coef_base`` the baseline means,
    ``coef_change`` the mean changes; ``treat_base``/``treat_effect`` are
    the treatment terms of the two latent regressions.
    """

    n_groups: int = 50
    n_per_group: int = 10
    n_covariates: int = 8
    coef_exposure: tuple = STUDY_COEF_EXPOSURE
    coef_base: tuple = STUDY_COEF_BASE
    coef_change: tuple = STUDY_COEF_CHANGE
    treat_base: float = 0.0
    treat_effect: float = 1.0
    sd_treatment: float = 1.0
    sd_base: float = 1.0
    sd_change: float = 1.0
    sd_y_pre: float = 1.0
    sd_y_post: float = 1.0

    def check(self) -> None:
        if self.n_groups < 1 or self.n_per_group < 0 or self.n_covariates < 0:
            raise InvalidParameterError("n_groups >= 1, n_per_group >= 0, n_covariates >= 0")
        for name in ("coef_exposure", "coef_base", "coef_change"):
            if len(getattr(self, name)) != self.n_covariates:
                raise InvalidParameterError(f"{name} must have {self.n_covariates} entries")

    def with_groups(self, n_groups: int) -> "GenerativeConfig":
        return replace(self, n_groups=n_groups)


@dataclass
class LatentTruth:
    """Generated latents kept alongside the data for oracle checks."""

    mu: np.ndarray
    mu_diff: np.ndarray
    t: np.ndarray
    x: np.ndarray
    treat_effect: float


def study_config(n_groups: int = 50) -> GenerativeConfig:
    """The eight-covariate study configuration (all roles represented)."""
    return GenerativeConfig(n_groups=n_groups)


def single_covariate_config(role: CovariateRole, n_groups: int = 50) -> GenerativeConfig:
    """K=1 configuration with the one covariate playing the given role."""
    return GenerativeConfig(
        n_groups=n_groups,
        n_covariates=1,
        coef_exposure=(1.0 if role.affects_treatment else 0.0,),
        coef_base=(1.0 if role.affects_baseline else 0.0,),
        coef_change=(1.0 if role.affects_change else 0.0,),
        treat_base=0.0,
        treat_effect=1.0,
    )


def generate(config: GenerativeConfig, rng: RngStream) -> tuple[HdidDataset, LatentTruth]:
    """Generate one dataset plus its latent truth record."""
    config.check()
    j, n, k = config.n_groups, config.n_per_group, config.n_covariates
    x = rng.normals(j * k).reshape(j, k) if k else np.zeros((j, 0))
    alpha = np.asarray(config.coef_exposure, dtype=float)
    bbase = np.asarray(config.coef_base, dtype=float)
    bchange = np.asarray(config.coef_change, dtype=float)
    t = x @ alpha + config.sd_treatment * rng.normals(j)
    mu = config.treat_base * t + x @ bbase + config.sd_base * rng.normals(j)
    mu_diff = config.treat_effect * t + x @ bchange + config.sd_change * rng.normals(j)
    y_pre = mu[:, None] + config.sd_y_pre * rng.normals(j * n).reshape(j, n)
    y_post = (mu + mu_diff)[:, None] + config.sd_y_post * rng.normals(j * n).reshape(j, n)
    dataset = HdidDataset(
        [y_pre[i] for i in range(j)],
        [y_post[i] for i in range(j)],
        x,
        t,
        covariate_names=[f"X{i + 1}" for i in range(k)],
    )
    truth = LatentTruth(mu=mu, mu_diff=mu_diff, t=t.copy(), x=x.copy(),
                        treat_effect=config.treat_effect)
    return dataset, truth
