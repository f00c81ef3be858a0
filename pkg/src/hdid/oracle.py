"""Closed-form omitted-variable bias for misspecified hierarchical fits.

After integrating out the latent group means, the stacked outcomes are
Gaussian with mean ``A B theta`` and covariance ``Sigma``: ``A`` assigns
group-level values to individuals, ``B = [B1 B0]`` splits included and
excluded columns, and ``Sigma`` has an exchangeable within-group block
structure. Fitting only ``B1`` under a flat prior biases the included
coefficients by::

    (B1' A' Sigma^-1 A B1)^-1 B1' A' Sigma^-1 A B0 theta0

``build_problem``/``theorem1_bias`` construct and evaluate this exactly on
dense matrices. The Monte-Carlo sweep over nested inclusion sets uses an
algebraically identical group-level collapse: within a group the model
matrix is constant per period, so ``A' Sigma^-1 A`` reduces to per-group
2x2 blocks and no individual-level matrix is ever formed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve, cholesky, qr, solve_triangular

from .datagen import GenerativeConfig
from .errors import InvalidParameterError, NumericalError
from .rng import RngStream

# Table-style nested inclusion order over the eight covariate roles:
# start empty, then add X1, X3, X2, X5, X7, X6, X4, then all eight.
A1_SET_LABELS = ("null", "+X1", "+X3", "+X2", "+X5", "+X7", "+X6", "+X4", "full")
_A1_ADD_ORDER = (0, 2, 1, 4, 6, 5, 3)


def a1_inclusion_sets(k: int = 8) -> list[tuple[int, ...]]:
    sets: list[tuple[int, ...]] = [()]
    current: list[int] = []
    for idx in _A1_ADD_ORDER:
        current.append(idx)
        sets.append(tuple(current))
    sets.append(tuple(range(k)))
    return sets


@dataclass
class BiasProblem:
    """Dense pieces of the bias formula plus the treatment-effect index."""

    a: np.ndarray
    b1: np.ndarray
    b0: np.ndarray
    theta0: np.ndarray
    sigma: np.ndarray
    delta_index: int
    labels_included: tuple
    labels_excluded: tuple


def _as_group_vector(value, j: int) -> np.ndarray:
    arr = np.broadcast_to(np.asarray(value, dtype=float), (j,)).copy()
    if np.any(arr <= 0):
        raise InvalidParameterError("variances must be positive")
    return arr


def build_problem(
    x: np.ndarray,
    t: np.ndarray,
    base_mask,
    change_mask,
    adjust_t: bool,
    coef_base,
    treat_base: float,
    coef_change,
    n_pre,
    n_post,
    var_pre=1.0,
    var_post=1.0,
    var_base: float = 1.0,
    var_change: float = 1.0,
) -> BiasProblem:
    """Assemble A, B1, B0, theta0, Sigma for given inclusion masks.

    The excluded block carries the true coefficients of everything the
    fitted model leaves out; the treatment column moves into it when the
    baseline is not treatment-adjusted.
    """
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    j, k = x.shape
    base_mask = np.asarray(base_mask, dtype=bool)
    change_mask = np.asarray(change_mask, dtype=bool)
    coef_base = np.asarray(coef_base, dtype=float)
    coef_change = np.asarray(coef_change, dtype=float)
    if t.shape != (j,) or base_mask.shape != (k,) or change_mask.shape != (k,):
        raise InvalidParameterError("mask/treatment dimensions do not match X")
    if coef_base.shape != (k,) or coef_change.shape != (k,):
        raise InvalidParameterError("true coefficient dimensions do not match X")
    n_pre = np.asarray(n_pre, dtype=int)
    n_post = np.asarray(n_post, dtype=int)
    if n_pre.shape != (j,) or n_post.shape != (j,):
        raise InvalidParameterError("group size vectors must have one entry per group")
    var_pre = _as_group_vector(var_pre, j)
    var_post = _as_group_vector(var_post, j)

    # group-level row blocks: pre rows carry baseline columns only
    zeros = np.zeros(j)
    b1_cols = []
    labels1 = []
    for i in np.flatnonzero(base_mask):
        b1_cols.append((x[:, i], x[:, i]))
        labels1.append(f"base:X{i + 1}")
    if adjust_t:
        b1_cols.append((t, t))
        labels1.append("base:T")
    for i in np.flatnonzero(change_mask):
        b1_cols.append((zeros, x[:, i]))
        labels1.append(f"change:X{i + 1}")
    b1_cols.append((zeros, t))
    labels1.append("change:T")
    delta_index = len(b1_cols) - 1

    b0_cols = []
    theta0 = []
    labels0 = []
    for i in np.flatnonzero(~base_mask):
        b0_cols.append((x[:, i], x[:, i]))
        theta0.append(coef_base[i])
        labels0.append(f"base:X{i + 1}")
    if not adjust_t:
        b0_cols.append((t, t))
        theta0.append(treat_base)
        labels0.append("base:T")
    for i in np.flatnonzero(~change_mask):
        b0_cols.append((zeros, x[:, i]))
        theta0.append(coef_change[i])
        labels0.append(f"change:X{i + 1}")

    b1 = np.zeros((2 * j, len(b1_cols)))
    for c, (top, bottom) in enumerate(b1_cols):
        b1[:j, c] = top
        b1[j:, c] = bottom
    b0 = np.zeros((2 * j, len(b0_cols)))
    for c, (top, bottom) in enumerate(b0_cols):
        b0[:j, c] = top
        b0[j:, c] = bottom

    n0_tot = int(n_pre.sum())
    n1_tot = int(n_post.sum())
    a = np.zeros((n0_tot + n1_tot, 2 * j))
    row = 0
    for g in range(j):
        a[row : row + n_pre[g], g] = 1.0
        row += n_pre[g]
    for g in range(j):
        a[row : row + n_post[g], j + g] = 1.0
        row += n_post[g]

    sigma = np.zeros((n0_tot + n1_tot, n0_tot + n1_tot))
    pre_off = np.concatenate([[0], np.cumsum(n_pre)])
    post_off = n0_tot + np.concatenate([[0], np.cumsum(n_post)])
    for g in range(j):
        p0, p1 = pre_off[g], pre_off[g + 1]
        q0, q1 = post_off[g], post_off[g + 1]
        sigma[p0:p1, p0:p1] = var_base
        sigma[p0:p1, p0:p1] += np.eye(n_pre[g]) * var_pre[g]
        sigma[q0:q1, q0:q1] = var_base + var_change
        sigma[q0:q1, q0:q1] += np.eye(n_post[g]) * var_post[g]
        sigma[p0:p1, q0:q1] = var_base
        sigma[q0:q1, p0:p1] = var_base

    return BiasProblem(
        a=a,
        b1=b1,
        b0=b0,
        theta0=np.asarray(theta0, dtype=float),
        sigma=sigma,
        delta_index=delta_index,
        labels_included=tuple(labels1),
        labels_excluded=tuple(labels0),
    )


def theorem1_bias(problem: BiasProblem) -> np.ndarray:
    """Exact bias of the included coefficients; treatment-effect bias sits
    at ``problem.delta_index``."""
    ab1 = problem.a @ problem.b1
    if problem.b0.shape[1] == 0:
        return np.zeros(problem.b1.shape[1])
    ab0 = problem.a @ problem.b0
    try:
        factor = cho_factor(problem.sigma, lower=True)
    except np.linalg.LinAlgError as exc:
        raise NumericalError("marginal covariance is not positive definite") from exc
    z1 = cho_solve(factor, ab1)
    z0 = cho_solve(factor, ab0 @ problem.theta0)
    n11 = ab1.T @ z1
    rhs = ab1.T @ z0
    if np.linalg.matrix_rank(n11) < n11.shape[0]:
        _, _, piv = qr(ab1, mode="economic", pivoting=True)
        rank = np.linalg.matrix_rank(ab1)
        collinear = sorted(problem.labels_included[i] for i in piv[rank:])
        raise NumericalError(f"normal matrix singular; collinear columns: {collinear}")
    return np.linalg.solve(n11, rhs)


def delta_bias(problem: BiasProblem) -> float:
    return float(theorem1_bias(problem)[problem.delta_index])


def gls_bias_oracle(problem: BiasProblem) -> np.ndarray:
    """Brute-force check: whitened least squares on noiseless expected data.

    Generates E[Y] under the true model with included coefficients zeroed
    (bias is invariant to them) and fits the misspecified design by QR on
    whitened matrices; under a correct formula this equals theorem1_bias.
    """
    if problem.b0.shape[1] == 0:
        return np.zeros(problem.b1.shape[1])
    low = cholesky(problem.sigma, lower=True)
    y = problem.a @ (problem.b0 @ problem.theta0)
    yw = solve_triangular(low, y, lower=True)
    xw = solve_triangular(low, problem.a @ problem.b1, lower=True)
    coef, *_ = np.linalg.lstsq(xw, yw, rcond=None)
    return coef


def group_level_bias(
    x: np.ndarray,
    t: np.ndarray,
    base_mask,
    change_mask,
    adjust_t: bool,
    coef_base,
    treat_base: float,
    coef_change,
    n_pre,
    n_post,
    var_pre=1.0,
    var_post=1.0,
    var_base: float = 1.0,
    var_change: float = 1.0,
) -> float:
    """Treatment-effect bias via the per-group 2x2 collapse (no individual
    matrices). Algebraically identical to ``theorem1_bias`` on the dense
    problem; used by the Monte-Carlo sweep."""
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    j, k = x.shape
    n0 = np.broadcast_to(np.asarray(n_pre, dtype=float), (j,))
    n1 = np.broadcast_to(np.asarray(n_post, dtype=float), (j,))
    v0 = np.broadcast_to(np.asarray(var_pre, dtype=float), (j,))
    v1 = np.broadcast_to(np.asarray(var_post, dtype=float), (j,))

    # restriction of Sigma_j to the span of the period indicators
    ga = v0 + n0 * var_base
    gb = n1 * var_base
    gc = n0 * var_base
    gd = v1 + n1 * (var_base + var_change)
    det = ga * gd - gb * gc
    m00 = n0 * gd / det
    m01 = -n0 * gb / det
    m11 = n1 * ga / det
    w_bb = m00 + 2.0 * m01 + m11
    w_bc = m01 + m11
    w_cc = m11

    u = np.column_stack([x, t])
    p_bb = (u * w_bb[:, None]).T @ u
    p_bc = (u * w_bc[:, None]).T @ u
    p_cc = (u * w_cc[:, None]).T @ u
    pool = np.block([[p_bb, p_bc], [p_bc.T, p_cc]])

    base_mask = np.asarray(base_mask, dtype=bool)
    change_mask = np.asarray(change_mask, dtype=bool)
    idx1 = list(np.flatnonzero(base_mask))
    if adjust_t:
        idx1.append(k)
    idx1 += [k + 1 + i for i in np.flatnonzero(change_mask)]
    idx1.append(2 * k + 1)
    idx0 = list(np.flatnonzero(~base_mask))
    if not adjust_t:
        idx0.append(k)
    idx0 += [k + 1 + i for i in np.flatnonzero(~change_mask)]
    if not idx0:
        return 0.0
    theta_pool = np.concatenate(
        [np.asarray(coef_base, dtype=float), [treat_base], np.asarray(coef_change, dtype=float), [0.0]]
    )
    n11 = pool[np.ix_(idx1, idx1)]
    n10 = pool[np.ix_(idx1, idx0)]
    bias = np.linalg.solve(n11, n10 @ theta_pool[idx0])
    return float(bias[-1])


def table_a1_sweep(
    config: GenerativeConfig,
    adjust_t: bool,
    replications: int,
    rng: RngStream,
    sets=None,
) -> np.ndarray:
    """Monte-Carlo mean treatment-effect bias over nested inclusion sets.

    Per replication a fresh (X, T) pair is generated from the configured
    exposure structure; the closed-form bias is evaluated for each set
    (the same covariates adjust both the baseline and change models) and
    averaged across replications.
    """
    if replications < 1:
        raise InvalidParameterError("replications must be >= 1")
    k = config.n_covariates
    if sets is None:
        sets = a1_inclusion_sets(k)
    alpha = np.asarray(config.coef_exposure, dtype=float)
    totals = np.zeros(len(sets))
    n0 = np.full(config.n_groups, float(config.n_per_group))
    masks = []
    for included in sets:
        mask = np.zeros(k, dtype=bool)
        mask[list(included)] = True
        masks.append(mask)
    for _ in range(replications):
        x = rng.normals(config.n_groups * k).reshape(config.n_groups, k)
        t = x @ alpha + config.sd_treatment * rng.normals(config.n_groups)
        for s_i, mask in enumerate(masks):
            totals[s_i] += group_level_bias(
                x,
                t,
                mask,
                mask,
                adjust_t,
                config.coef_base,
                config.treat_base,
                config.coef_change,
                n0,
                n0,
                config.sd_y_pre**2,
                config.sd_y_post**2,
                config.sd_base**2,
                config.sd_change**2,
            )
    return totals / replications
