"""VAR process simulation with known Granger structure.

Used by the test suite for size/power studies and exposed through the
``simulate`` CLI subcommand.  Processes are generated recursively with
Gaussian innovations; a spec plus seed determines the panel bit for bit.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .panel import LagSpec, TimeSeriesPanel, demean
from .pdslm import GcQuery, pds_lm_test

__all__ = [
    "VarProcessSpec",
    "companion_matrix",
    "simulate_var",
    "make_gc_pair_spec",
    "rejection_rate",
]

INTEGRATION_KINDS = ("stationary", "unit_root_diagonal", "cointegrated")


def companion_matrix(coefficients: np.ndarray) -> np.ndarray:
    """Companion form of the lag-coefficient tensor, shape (K*p, K*p)."""
    coefficients = np.asarray(coefficients, dtype=float)
    p, k, _ = coefficients.shape
    comp = np.zeros((k * p, k * p))
    comp[:k, :] = np.concatenate(list(coefficients), axis=1)
    if p > 1:
        comp[k:, : k * (p - 1)] = np.eye(k * (p - 1))
    return comp


@dataclass(frozen=True)
class VarProcessSpec:
    """A VAR(p) data-generating process.

    ``coefficients`` has shape (p, K, K) with entry [l, i, j] the effect of
    series j at lag l+1 on series i.  ``integration`` declares the intended
    persistence and is validated against the companion eigenvalues.
    """

    k: int
    p: int
    coefficients: np.ndarray
    error_covariance: np.ndarray
    integration: str = "stationary"
    coint_rank: int | None = None
    seed: int = 0

    def __post_init__(self):
        coef = np.asarray(self.coefficients, dtype=float)
        if coef.shape != (self.p, self.k, self.k):
            raise ValidationError(
                f"coefficients must have shape {(self.p, self.k, self.k)}, "
                f"got {coef.shape}"
            )
        cov = np.asarray(self.error_covariance, dtype=float)
        if cov.shape != (self.k, self.k):
            raise ValidationError("error covariance shape must be (K, K)")
        if not np.allclose(cov, cov.T) or np.linalg.eigvalsh(cov).min() <= 0:
            raise ValidationError("error covariance must be symmetric positive definite")
        if self.integration not in INTEGRATION_KINDS:
            raise ValidationError(
                f"integration must be one of {INTEGRATION_KINDS}, got {self.integration!r}"
            )
        object.__setattr__(self, "coefficients", coef)
        object.__setattr__(self, "error_covariance", cov)

        eigvals = np.abs(np.linalg.eigvals(companion_matrix(coef)))
        if self.integration == "stationary":
            if eigvals.max() >= 1.0:
                raise ValidationError(
                    f"stationary spec has companion spectral radius {eigvals.max():.4f} >= 1"
                )
        elif self.integration == "cointegrated":
            if self.coint_rank is None or not 0 < self.coint_rank < self.k:
                raise ValidationError("cointegrated spec needs 0 < rank < K")
            n_unit = int(np.sum(np.abs(eigvals - 1.0) <= 1e-8))
            if n_unit != self.k - self.coint_rank:
                raise ValidationError(
                    f"cointegrated(rank {self.coint_rank}) needs {self.k - self.coint_rank} "
                    f"unit eigenvalues, found {n_unit}"
                )
            if eigvals.max() > 1.0 + 1e-8:
                raise ValidationError("cointegrated spec has an explosive eigenvalue")
        else:  # unit_root_diagonal
            if eigvals.max() > 1.0 + 1e-8:
                raise ValidationError("unit-root spec has an explosive eigenvalue")


def simulate_var(spec: VarProcessSpec, T: int, burn_in: int = 200) -> TimeSeriesPanel:
    """Generate T observations from the process, discarding the burn-in."""
    if T < 2:
        raise ValidationError(f"T must be >= 2, got {T}")
    if burn_in < 0:
        raise ValidationError(f"burn_in must be >= 0, got {burn_in}")
    rng = np.random.default_rng(spec.seed)
    k, p = spec.k, spec.p
    total = T + burn_in + p
    chol = np.linalg.cholesky(spec.error_covariance)
    shocks = rng.standard_normal((total, k)) @ chol.T
    y = np.zeros((total, k))
    for t in range(p, total):
        acc = shocks[t].copy()
        for lag in range(1, p + 1):
            acc += spec.coefficients[lag - 1] @ y[t - lag]
        y[t] = acc
    values = y[-T:]
    names = tuple(f"y{i + 1}" for i in range(k))
    return TimeSeriesPanel(values, names, tuple(range(1, T + 1)))


def make_gc_pair_spec(
    strength: float,
    integration: str = "stationary",
    seed: int = 0,
) -> VarProcessSpec:
    """Bivariate VAR(1) where y1 Granger-causes y2 with the given strength.

    The link is the lag-1 coefficient of y1 in the y2 equation; there is
    no reverse link, so strength 0 is an exact null.  The diagonal fixes
    the persistence: 0.5 for the stationary case, unit roots for the
    unit-root case, and one unit root plus an AR(0.5) caused series for
    the cointegrated(rank 1) case.
    """
    if integration == "stationary":
        diag = (0.5, 0.5)
    elif integration == "unit_root_diagonal":
        diag = (1.0, 1.0)
    elif integration == "cointegrated":
        diag = (1.0, 0.5)
    else:
        raise ValidationError(
            f"integration must be one of {INTEGRATION_KINDS}, got {integration!r}"
        )
    a1 = np.array([[diag[0], 0.0], [strength, diag[1]]])
    return VarProcessSpec(
        k=2,
        p=1,
        coefficients=a1[None, :, :],
        error_covariance=np.eye(2),
        integration=integration,
        coint_rank=1 if integration == "cointegrated" else None,
        seed=seed,
    )


def _one_rejection(args) -> bool:
    base_spec, rep, T, query, test_kwargs = args
    spec = VarProcessSpec(
        k=base_spec.k,
        p=base_spec.p,
        coefficients=base_spec.coefficients,
        error_covariance=base_spec.error_covariance,
        integration=base_spec.integration,
        coint_rank=base_spec.coint_rank,
        seed=base_spec.seed + rep,
    )
    panel = demean(simulate_var(spec, T))
    return pds_lm_test(panel, query, **test_kwargs).reject


def rejection_rate(
    dgp: str,
    reps: int,
    T: int,
    alpha: float = 0.05,
    d: int = 1,
    p: int = 1,
    strength: float = 0.4,
    statistic: str = "chi2",
    seed: int = 0,
    threads: int = 1,
    **test_kwargs,
) -> dict:
    """Monte Carlo rejection frequency of the test of y1 -> y2.

    ``dgp`` is one of h0 (stationary, no link), power (stationary with the
    given strength), unitroot (independent random walks), or cointegrated.
    Replication r uses seed ``seed + r``.
    """
    if reps < 1:
        raise ValidationError(f"reps must be >= 1, got {reps}")
    dgp_map = {
        "h0": ("stationary", 0.0),
        "power": ("stationary", strength),
        "unitroot": ("unit_root_diagonal", 0.0),
        "cointegrated": ("cointegrated", strength),
    }
    if dgp not in dgp_map:
        raise ValidationError(f"dgp must be one of {sorted(dgp_map)}, got {dgp!r}")
    integration, link = dgp_map[dgp]
    base_spec = make_gc_pair_spec(link, integration, seed=seed)
    query = GcQuery(
        caused=("y2",),
        causing=("y1",),
        spec=LagSpec(p=p, d=d),
        alpha=alpha,
        statistic=statistic,
    )
    jobs = [(base_spec, r, T, query, test_kwargs) for r in range(reps)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rejects = list(pool.map(_one_rejection, jobs))
    else:
        rejects = [_one_rejection(job) for job in jobs]
    return {
        "rejection_rate": float(np.mean(rejects)),
        "reps": reps,
        "settings": {
            "dgp": dgp,
            "T": T,
            "alpha": alpha,
            "p": p,
            "d": d,
            "strength": link,
            "statistic": statistic,
            "seed": seed,
        },
    }
