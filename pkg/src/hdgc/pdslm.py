"""Lag-augmented post-double-selection LM test for Granger causality.

The test asks whether the lags of a causing block J improve the best
linear prediction of a caused block I beyond I's own lags and a
high-dimensional conditioning set, with the VAR estimated in levels.
Double selection (outcome and each tested column regressed on the
conditioning set) controls omitted-variable bias from the lasso; d extra
lags of the causing block keep the statistic standard under unit roots
and cointegration up to order d.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .errors import (
    InfeasibleTestError,
    NumericError,
    QueryError,
    SampleSizeError,
    ValidationError,
)
from .panel import LagSpec, TimeSeriesPanel, build_design
from .regress import adaptive_weights, lasso_bic, ols

__all__ = [
    "GcQuery",
    "SelectionRecord",
    "ErrorCovariance",
    "PdsLmResult",
    "select_lag_length",
    "pds_lm_test",
    "stationary_pds_lm",
    "chi2_quantile",
    "chi2_pvalue",
    "f_quantile",
    "f_pvalue",
]

STATISTICS = ("chi2", "f")
SELECTION_MODES = ("adaptive", "plain", "none")


@dataclass(frozen=True)
class GcQuery:
    """One block Granger-causality question: does J help predict I?"""

    caused: tuple[str, ...]
    causing: tuple[str, ...]
    spec: LagSpec
    alpha: float = 0.1
    statistic: str = "chi2"

    def __post_init__(self):
        object.__setattr__(self, "caused", tuple(self.caused))
        object.__setattr__(self, "causing", tuple(self.causing))
        if not self.caused or not self.causing:
            raise QueryError("caused and causing sets must both be nonempty")
        if set(self.caused) & set(self.causing):
            raise QueryError("caused and causing sets must be disjoint")
        if not 0.0 < self.alpha < 1.0:
            raise ValidationError(f"alpha must be in (0, 1), got {self.alpha}")
        if self.statistic not in STATISTICS:
            raise ValidationError(
                f"statistic must be one of {STATISTICS}, got {self.statistic!r}"
            )


@dataclass(frozen=True)
class SelectionRecord:
    """Variables kept by the double-selection steps.

    ``s0`` indexes the stacked conditioning design (outcome regression),
    ``sx`` indexes the per-equation conditioning block (union over the
    tested-column regressions), and ``union_set`` is their union mapped to
    the stacked design.
    """

    s0: tuple[int, ...]
    sx: tuple[int, ...]
    union_set: tuple[int, ...]
    size: int


@dataclass(frozen=True)
class ErrorCovariance:
    """Residual covariance of the caused block and its inverse square root."""

    sigma: np.ndarray
    whitener: np.ndarray
    regularized: bool = False


@dataclass(frozen=True)
class PdsLmResult:
    """Outcome of one PDS-LM test."""

    lm_stat: float
    df: int
    p_chi2: float
    p_f: float
    selection: SelectionRecord
    long_run_effect: float
    reject: bool
    query: GcQuery
    f_stat: float = float("nan")
    df2: int = 0
    long_run_by_equation: tuple[float, ...] = field(default=())
    covariance: ErrorCovariance | None = None

    @property
    def p_value(self) -> float:
        """P-value under the calibration requested by the query."""
        return self.p_chi2 if self.query.statistic == "chi2" else self.p_f


def chi2_quantile(prob: float, df: float) -> float:
    """Inverse chi-square CDF via the regularized incomplete gamma."""
    if not 0.0 < prob < 1.0:
        raise ValidationError(f"prob must be in (0, 1), got {prob}")
    if df <= 0:
        raise ValidationError(f"df must be positive, got {df}")
    return float(2.0 * special.gammaincinv(df / 2.0, prob))


def chi2_pvalue(x: float, df: float) -> float:
    """Upper-tail chi-square probability P(X >= x)."""
    if df <= 0:
        raise ValidationError(f"df must be positive, got {df}")
    if x <= 0.0:
        return 1.0
    return float(special.gammaincc(df / 2.0, x / 2.0))


def f_quantile(prob: float, df1: float, df2: float) -> float:
    """Inverse F CDF via the regularized incomplete beta."""
    if not 0.0 < prob < 1.0:
        raise ValidationError(f"prob must be in (0, 1), got {prob}")
    if df1 <= 0 or df2 <= 0:
        raise ValidationError(f"degrees of freedom must be positive, got {df1}, {df2}")
    b = special.betaincinv(df1 / 2.0, df2 / 2.0, prob)
    return float(df2 * b / (df1 * (1.0 - b)))


def f_pvalue(x: float, df1: float, df2: float) -> float:
    """Upper-tail F probability P(X >= x)."""
    if df1 <= 0 or df2 <= 0:
        raise ValidationError(f"degrees of freedom must be positive, got {df1}, {df2}")
    if x <= 0.0:
        return 1.0
    if not np.isfinite(x):
        return 0.0
    return float(special.betainc(df2 / 2.0, df1 / 2.0, df2 / (df2 + df1 * x)))


def select_lag_length(panel: TimeSeriesPanel, p_max: int) -> int:
    """Pick the VAR lag length by a diagonal-AR information criterion.

    Every series gets a univariate AR(j) OLS fit over the common sample
    t = p_max+1..T for each candidate j; the criterion sums the log
    residual variances and penalizes j*K*ln(T_eff)/T_eff.  The estimate is
    an upper bound on the true order: it may overshoot but tends not to
    undershoot.
    """
    if p_max < 1:
        raise ValidationError(f"p_max must be >= 1, got {p_max}")
    T, K = panel.n_obs, panel.n_series
    t_eff = T - p_max
    if t_eff < 10:
        raise SampleSizeError(
            f"T={T} leaves only {t_eff} common observations for p_max={p_max}"
        )
    vals = panel.values
    best_j, best_bic = 1, np.inf
    for j in range(1, p_max + 1):
        log_var_sum = 0.0
        for k in range(K):
            yk = vals[p_max:, k]
            Xk = np.column_stack(
                [vals[p_max - lag : T - lag, k] for lag in range(1, j + 1)]
            )
            sigma2 = ols(Xk, yk).rss / t_eff
            log_var_sum += np.log(max(sigma2, 1e-300))
        bic = log_var_sum + j * K * np.log(t_eff) / t_eff
        if bic < best_bic:
            best_bic, best_j = bic, j
    return best_j


def _residuals(X: np.ndarray, y: np.ndarray) -> np.ndarray:
    if X.shape[1] == 0:
        return y.copy()
    return ols(X, y).residuals


def _select(X: np.ndarray, y: np.ndarray, mode: str, n_lambda: int, ratio: float):
    weights = adaptive_weights(X, y) if mode == "adaptive" else None
    return lasso_bic(X, y, weights, n_lambda=n_lambda, ratio=ratio)


def _error_covariance(resid: np.ndarray) -> ErrorCovariance:
    t_eff, n_i = resid.shape
    sigma = resid.T @ resid / t_eff
    sigma = (sigma + sigma.T) / 2.0
    trace = float(np.trace(sigma))
    if trace <= 0.0:
        raise InfeasibleTestError(
            "restricted model fits perfectly; error covariance is zero"
        )
    eigvals = np.linalg.eigvalsh(sigma)
    if eigvals.min() < -1e-10 * trace:
        raise NumericError("residual covariance is not positive semidefinite")
    regularized = False
    cond = eigvals.max() / max(eigvals.min(), 0.0) if eigvals.min() > 0 else np.inf
    if cond > 1e12:
        sigma = sigma + (1e-8 * trace / n_i) * np.eye(n_i)
        regularized = True
    lam, vecs = np.linalg.eigh(sigma)
    whitener = vecs @ np.diag(1.0 / np.sqrt(lam)) @ vecs.T
    return ErrorCovariance(sigma=sigma, whitener=whitener, regularized=regularized)


def pds_lm_test(
    panel: TimeSeriesPanel,
    query: GcQuery,
    *,
    selection: str = "adaptive",
    n_lambda: int = 100,
    lambda_ratio: float = 1e-3,
    df_augment_per_equation: bool = False,
) -> PdsLmResult:
    """Run the full post-double-selection LM test for one query.

    Pipeline: (1) BIC-tuned lasso of the stacked outcome and of every
    tested column on the standardized conditioning set; (2) OLS refit of
    the outcome on the selection union plus the d augmentation lags,
    giving the residual covariance of the caused block; (3) whitening by
    the covariance's inverse square root, refit of the maintained model
    (selected set plus augmentation lags), and an auxiliary regression of
    those residuals on the maintained model plus the tested block; the LM
    statistic is the drop in whitened residual sum of squares.

    The augmentation lags stay in the maintained model and are never part
    of the tested block: that is what keeps the p tested coefficients
    rewritable in differences and the statistic chi-square with
    N_GC = N_I*p*N_J degrees of freedom under integration up to order d.
    They still cost residual degrees of freedom, so the F denominator df
    is T*N_I - s_hat - N_GC - d*N_J.

    ``selection='none'`` keeps every conditioning column (the classical
    full-model LM when the dimensions permit).
    """
    if selection not in SELECTION_MODES:
        raise ValidationError(
            f"selection must be one of {SELECTION_MODES}, got {selection!r}"
        )
    design = build_design(panel, query.caused, query.causing, query.spec)
    p, d = query.spec.p, query.spec.d
    n_i, n_j = len(query.caused), len(query.causing)
    t_eff = design.effective_T

    cond_cols = design.conditioning_columns
    W = design.lagged[:, cond_cols]                    # conditioning block
    G = design.lagged[:, design.gc_columns]            # tested block, p*N_J cols
    G_aug = design.augmented                           # d*N_J augmentation lags
    Y = design.response
    n_cond = W.shape[1]
    n_x = G.shape[1]

    # --- Step 1: double selection on standardized conditioning columns
    W_std = W / np.where(W.std(axis=0) > 1e-12, W.std(axis=0), 1.0)
    y_stacked = Y.flatten(order="F")
    if selection == "none":
        s0 = tuple(range(n_cond * n_i))
        sx = tuple(range(n_cond))
    else:
        stacked = np.kron(np.eye(n_i), W_std) if n_i > 1 else W_std
        fit0 = _select(stacked, y_stacked, selection, n_lambda, lambda_ratio)
        s0 = fit0.active_set
        sx_set: set[int] = set()
        for j in range(n_x):
            fit_j = _select(W_std, G[:, j], selection, n_lambda, lambda_ratio)
            sx_set.update(fit_j.active_set)
        sx = tuple(sorted(sx_set))

    union = sorted(set(s0) | {i * n_cond + m for i in range(n_i) for m in sx})
    s_hat = len(union)
    record = SelectionRecord(
        s0=tuple(s0), sx=tuple(sx), union_set=tuple(union), size=s_hat
    )

    n_gc = n_i * p * n_j
    aug_df = (n_i if df_augment_per_equation else 1) * d * n_j
    n_stacked = t_eff * n_i
    if s_hat + n_gc + aug_df >= n_stacked:
        raise InfeasibleTestError(
            f"selected set ({s_hat}) plus tested block ({n_gc}) and augmentation "
            f"({aug_df}) do not fit in {n_stacked} stacked observations"
        )

    # --- Step 2: OLS refit on the union plus augmentation lags, per equation
    per_eq_cols = [
        sorted(m - i * n_cond for m in union if i * n_cond <= m < (i + 1) * n_cond)
        for i in range(n_i)
    ]
    resid = np.empty((t_eff, n_i))
    for i in range(n_i):
        Xi = np.column_stack([W[:, per_eq_cols[i]], G_aug]) if d else W[:, per_eq_cols[i]]
        resid[:, i] = _residuals(Xi, Y[:, i])
    cov = _error_covariance(resid)

    # --- Step 3: whiten, refit the maintained model, auxiliary regression
    Wh = cov.whitener
    y_star = (Y @ Wh).flatten(order="F")
    selected_wh = _stacked_whitened(W, union, n_cond, Wh)
    aug_block = np.kron(Wh, G_aug) if n_i > 1 else G_aug * Wh[0, 0]
    maintained = np.column_stack([selected_wh, aug_block])
    xi_star = _residuals(maintained, y_star)

    gc_block = np.kron(Wh, G) if n_i > 1 else G * Wh[0, 0]
    full = np.column_stack([maintained, gc_block])
    nu_star = _residuals(full, xi_star)

    rss_r = float(xi_star @ xi_star)
    rss_u = float(nu_star @ nu_star)
    lm = rss_r - rss_u
    if lm < -1e-10 * max(1.0, rss_r):
        raise NumericError(f"LM statistic came out negative ({lm:.3e})")
    lm = max(lm, 0.0)

    df = n_gc
    df2 = n_stacked - s_hat - n_gc - aug_df
    p_chi2 = chi2_pvalue(lm, df)
    denom = n_stacked - lm
    f_stat = np.inf if denom <= 0 else (df2 / n_gc) * (lm / denom)
    p_f = f_pvalue(f_stat, n_gc, df2)

    # long-run effect: sum of the p tested-lag coefficients, post selection
    full_fit = ols(full, y_star)
    gc_coef = full_fit.coefficients[maintained.shape[1] :]
    by_eq = tuple(float(gc_coef[i * n_x : (i + 1) * n_x].sum()) for i in range(n_i))

    p_value = p_chi2 if query.statistic == "chi2" else p_f
    return PdsLmResult(
        lm_stat=lm,
        df=df,
        p_chi2=p_chi2,
        p_f=p_f,
        selection=record,
        long_run_effect=float(sum(by_eq)),
        reject=bool(p_value < query.alpha),
        query=query,
        f_stat=float(f_stat),
        df2=df2,
        long_run_by_equation=by_eq,
        covariance=cov,
    )


def _stacked_whitened(
    W: np.ndarray, union: list[int], n_cond: int, whitener: np.ndarray
) -> np.ndarray:
    """Columns of the stacked conditioning design, whitened, restricted."""
    n_i = whitener.shape[0]
    t_eff = W.shape[0]
    if n_i == 1:
        return W[:, list(union)] * whitener[0, 0]
    out = np.empty((t_eff * n_i, len(union)))
    for pos, idx in enumerate(union):
        i, m = divmod(idx, n_cond)
        out[:, pos] = np.kron(whitener[:, i], W[:, m])
    return out


def stationary_pds_lm(panel: TimeSeriesPanel, query: GcQuery, **kwargs) -> PdsLmResult:
    """The comparison mode without lag augmentation (d must be 0).

    Intended for data already differenced to stationarity; the pipeline is
    otherwise identical to :func:`pds_lm_test`.
    """
    if query.spec.d != 0:
        raise ValidationError(
            f"stationary mode requires d = 0, got d = {query.spec.d}"
        )
    return pds_lm_test(panel, query, **kwargs)
