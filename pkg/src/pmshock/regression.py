"""Shared regression machinery: OLS, cluster-robust and HAC covariances."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from scipy import stats

from .errors import CollinearityError, NumericalError


@dataclass
class RegressionFit:
    """Coefficients with a robust covariance and fit diagnostics."""

    params: pd.Series
    cov: pd.DataFrame
    nobs: int
    n_clusters: int
    r2: dict[str, float] = field(default_factory=dict)
    loglik: float | None = None
    method: str = "ols"

    @property
    def se(self) -> pd.Series:
        return pd.Series(np.sqrt(np.diag(self.cov)), index=self.params.index)

    @property
    def tstats(self) -> pd.Series:
        return self.params / self.se

    @property
    def pvalues(self) -> pd.Series:
        return pd.Series(
            2 * stats.norm.sf(np.abs(self.tstats)), index=self.params.index
        )

    def conf_int(self, z: float = 1.96) -> pd.DataFrame:
        return pd.DataFrame(
            {"lo95": self.params - z * self.se, "hi95": self.params + z * self.se}
        )

    def summary_frame(self) -> pd.DataFrame:
        p = self.pvalues
        return pd.DataFrame(
            {
                "estimate": self.params,
                "se": self.se,
                "t": self.tstats,
                "p": p,
                "stars": [stars(v) for v in p],
            }
        )

    def render_text(self, title: str = "") -> str:
        lines = []
        if title:
            lines += [title, "=" * len(title)]
        sf = self.summary_frame()
        width = max([len(str(i)) for i in sf.index] + [12])
        lines.append(f"{'term'.ljust(width)}  {'estimate':>12} {'se':>12}")
        for term, row in sf.iterrows():
            lines.append(
                f"{str(term).ljust(width)}  {row['estimate']:>12.4f}{row['stars']:<3}"
                f"{row['se']:>10.4f}"
            )
        lines.append(f"Observations: {self.nobs}   Clusters: {self.n_clusters}")
        for k, v in self.r2.items():
            lines.append(f"R-squared ({k}): {v:.4f}")
        if self.loglik is not None:
            lines.append(f"Log-likelihood: {self.loglik:.2f}")
        return "\n".join(lines)


def stars(p: float) -> str:
    if p < 0.01:
        return "***"
    if p < 0.05:
        return "**"
    if p < 0.1:
        return "*"
    return ""


def check_full_rank(X: np.ndarray, names: list[str]) -> None:
    """Raise CollinearityError naming a dependent (or zero) column."""
    norms = np.linalg.norm(X, axis=0)
    scale = max(norms.max(), 1.0)
    for j, nm in enumerate(names):
        if norms[j] <= 1e-12 * scale:
            raise CollinearityError(nm)
    # QR with pivoting exposes the first dependent column
    from scipy.linalg import qr

    _, r, piv = qr(X, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    bad = diag <= max(X.shape) * np.finfo(float).eps * diag[0] if diag[0] > 0 else diag >= 0
    if np.any(bad):
        j = int(piv[np.argmax(bad)])
        raise CollinearityError(names[j])


def ols_beta(X: np.ndarray, y: np.ndarray) -> np.ndarray:
    beta, *_ = np.linalg.lstsq(X, y, rcond=None)
    return beta


def cluster_cov(
    X: np.ndarray,
    resid: np.ndarray,
    groups: np.ndarray,
    dof_factor: bool = True,
) -> tuple[np.ndarray, int]:
    """Cluster-robust sandwich covariance for OLS.

    Finite-sample factor G/(G-1) * (N-1)/(N-K); with singleton clusters this
    reduces to HC0 times that factor.
    """
    n, k = X.shape
    codes, uniques = pd.factorize(groups)
    g = len(uniques)
    if g < 2:
        raise NumericalError("clustered covariance requires >=2 clusters")
    xe = X * resid[:, None]
    scores = np.zeros((g, k))
    np.add.at(scores, codes, xe)
    meat = scores.T @ scores
    bread = np.linalg.pinv(X.T @ X)
    cov = bread @ meat @ bread
    if dof_factor:
        cov = cov * (g / (g - 1)) * ((n - 1) / (n - k))
    return cov, g


def hc0_cov(X: np.ndarray, resid: np.ndarray) -> np.ndarray:
    bread = np.linalg.pinv(X.T @ X)
    meat = (X * resid[:, None] ** 2).T @ X
    return bread @ meat @ bread


def newey_west_lag(T: int) -> int:
    """Standard plug-in truncation lag floor(4 * (T/100)^(2/9))."""
    return int(np.floor(4.0 * (T / 100.0) ** (2.0 / 9.0)))


def hac_cov(X: np.ndarray, resid: np.ndarray, lag: int) -> np.ndarray:
    """Newey-West (Bartlett kernel) covariance; lag 0 equals HC0 exactly."""
    T, k = X.shape
    xe = X * resid[:, None]
    S = xe.T @ xe
    for j in range(1, lag + 1):
        w = 1.0 - j / (lag + 1.0)
        gamma = xe[j:].T @ xe[:-j]
        S = S + w * (gamma + gamma.T)
    bread = np.linalg.pinv(X.T @ X)
    return bread @ S @ bread
