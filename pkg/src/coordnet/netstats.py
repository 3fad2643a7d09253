"""Per-window structural metrics of developer networks."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields

import numpy as np
import scipy.sparse as sp
from scipy.stats import norm

from .powerlaw import DEFAULT_REPS, MIN_BOOTSTRAP_SAMPLES, PowerLawFit, fit_power_law

CORE_QUANTILE = 0.8
CI_LEVEL = 0.995
HUBER_T = 1.345


def _adjacency(network) -> sp.csr_array:
    if hasattr(network, "adjacency"):
        return network.adjacency
    a = network.toarray() if sp.issparse(network) else np.asarray(network)
    a = (a > 0).astype(np.int8)
    np.fill_diagonal(a, 0)
    return sp.csr_array(a)


def degrees_of(network) -> np.ndarray:
    a = _adjacency(network)
    return np.asarray(a.sum(axis=1)).ravel().astype(np.int64)


def clustering_coefficients(network) -> np.ndarray:
    """Local clustering 2 n_i / (k_i (k_i - 1)); NaN where k_i < 2."""
    a = sp.csr_array(_adjacency(network), dtype=np.int64)
    if a.shape[0] == 0:
        return np.zeros(0)
    k = np.asarray(a.sum(axis=1)).ravel()
    links = np.asarray((a @ a).multiply(a).sum(axis=1)).ravel() / 2.0
    with np.errstate(divide="ignore", invalid="ignore"):
        c = 2.0 * links / (k * (k - 1.0))
    c[k < 2] = np.nan
    return c


def clustering_coefficient(network, node: int) -> float | None:
    a = _adjacency(network)
    if not 0 <= node < a.shape[0]:
        raise IndexError(f"node {node} not in network")
    nbrs = a[[node], :].nonzero()[1]
    k = len(nbrs)
    if k < 2:
        return None
    sub = a[nbrs, :][:, nbrs]
    n_links = sub.sum() / 2
    return float(2.0 * n_links / (k * (k - 1)))


def gini(degrees) -> float:
    """Mean-absolute-difference Gini: sum_ij |k_i - k_j| / (2 n^2 mean(k))."""
    k = np.sort(np.asarray(degrees, dtype=np.float64))
    n = k.size
    if n == 0 or k.sum() == 0:
        return 0.0
    idx = np.arange(1, n + 1)
    # sum_ij |k_i - k_j| = 2 sum_i (2i - n - 1) k_(i) for ascending k
    diff_sum = 2.0 * np.sum((2 * idx - n - 1) * k)
    return float(diff_sum / (2.0 * n * n * k.mean()))


def percentile_threshold(degrees, q: float = CORE_QUANTILE, nonzero_only: bool = True) -> float | None:
    """Linear-interpolation (type 7) quantile of the degrees."""
    d = np.asarray(degrees, dtype=np.float64)
    if nonzero_only:
        d = d[d > 0]
    if d.size == 0:
        return None
    return float(np.quantile(d, q, method="linear"))


class HierarchyWithheld(ValueError):
    """Too few usable nodes for a degree/clustering regression."""


@dataclass
class HierarchyFit:
    beta0: float
    beta1: float
    p_beta1: float
    stderr_beta1: float
    r_squared: float
    n_points: int
    subset: str = "global"
    method: str = "loglink"
    n_zero_excluded: int = 0
    scale: float | None = None  # residual scale of the log-log fits

    @property
    def is_hierarchical(self) -> bool:
        return self.beta1 < 0 and self.p_beta1 < 0.05


def robust_line(x, y, method: str = "huber"):
    """Fit y = b0 + b1 x. Returns (b0, b1, se_b1, p_b1, scale).

    ``huber`` is iteratively reweighted least squares with Huber weights
    (tuning constant 1.345) and MAD scale; ``ols`` is ordinary least squares.
    """
    import statsmodels.api as sm

    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    design = sm.add_constant(x, has_constant="add")
    if method == "ols":
        res = sm.OLS(y, design).fit()
    elif method == "huber":
        res = sm.RLM(y, design, M=sm.robust.norms.HuberT(t=HUBER_T)).fit()
    else:
        raise ValueError(f"unknown regression method {method!r}")
    return (*_coef(res), float(np.sqrt(res.scale)) if method == "ols" else float(res.scale))


def _coef(res):
    b0, b1 = (float(v) for v in res.params)
    se = float(res.bse[1])
    p = float(res.pvalues[1])
    if not math.isfinite(p) or not math.isfinite(se):
        # exact fit: zero residual scale
        p = 0.0 if b1 != 0 else 1.0
        se = 0.0
    return b0, b1, se, p


def loglink_fit(k, c):
    """Quasi-Poisson regression E[c] = exp(b0) * k**b1 over per-node values.

    Nodes with zero clustering stay in the fit. Standard errors are the
    heteroscedasticity-robust sandwich (HC0). Returns (b0, b1, se_b1, p_b1).
    """
    import warnings

    import statsmodels.api as sm

    x = np.log(np.asarray(k, dtype=np.float64))
    y = np.asarray(c, dtype=np.float64)
    design = sm.add_constant(x, has_constant="add")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        res = sm.GLM(y, design, family=sm.families.Poisson()).fit(cov_type="HC0")
    return _coef(res)


def hierarchy_nodes(network, subset: str = "global"):
    """Degrees and clustering of nodes with a defined coefficient (k >= 2)."""
    k = degrees_of(network).astype(np.float64)
    c = clustering_coefficients(network)
    mask = k >= 2
    if subset == "core_only":
        thr = percentile_threshold(k)
        mask &= (k >= thr) if thr is not None else False
    elif subset != "global":
        raise ValueError(f"unknown subset {subset!r}")
    return k[mask], c[mask]


HIERARCHY_METHODS = ("loglink", "huber", "ols")


def fit_hierarchy(network, subset: str = "global", method: str = "loglink") -> HierarchyFit:
    """Regress clustering on degree to test C(k) ~ k**beta1.

    ``loglink`` (default) fits the mean clustering per node as a power of
    degree and keeps zero-clustering nodes. ``huber`` and ``ols`` fit a
    straight line to (log k, log c) over nodes with c > 0. Hierarchy is present
    when the slope is negative with p < 0.05.
    """
    k, c = hierarchy_nodes(network, subset)
    if method == "loglink":
        if k.size < 3:
            raise HierarchyWithheld(f"{k.size} nodes with degree >= 2 (need 3)")
        if np.ptp(k) == 0:
            raise HierarchyWithheld("all eligible nodes share one degree")
        if not np.any(c > 0):
            raise HierarchyWithheld("no node has positive clustering")
        b0, b1, se, p = loglink_fit(k, c)
        fitted = np.exp(b0) * k ** b1
        sst = float(np.sum((c - c.mean()) ** 2))
        r2 = 1.0 - float(np.sum((c - fitted) ** 2)) / sst if sst > 0 else 1.0
        return HierarchyFit(b0, b1, p, se, r2, int(k.size), subset, method, 0)
    if method not in HIERARCHY_METHODS:
        raise ValueError(f"unknown hierarchy method {method!r}")
    pos = c > 0
    return fit_loglog(np.log(k[pos]), np.log(c[pos]), subset=subset, method=method,
                      n_zero_excluded=int(np.sum(~pos)))


def fit_loglog(x, y, subset="global", method="huber", n_zero_excluded=0) -> HierarchyFit:
    """Straight-line fit of log clustering (y) on log degree (x)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.size < 3:
        raise HierarchyWithheld(f"{x.size} eligible nodes (need 3 with degree >= 2 and clustering > 0)")
    if np.ptp(x) == 0:
        raise HierarchyWithheld("all eligible nodes share one degree")
    b0, b1, se, p, scale = robust_line(x, y, method)
    resid = y - (b0 + b1 * x)
    sst = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / sst if sst > 0 else 1.0
    return HierarchyFit(b0, b1, p, se, r2, int(x.size), subset, method, n_zero_excluded, scale)


@dataclass(frozen=True)
class MetricsConfig:
    bootstrap_reps: int = DEFAULT_REPS
    seed: int = 0
    skip_bootstrap: bool = False
    hierarchy_method: str = "loglink"
    min_bootstrap_samples: int = MIN_BOOTSTRAP_SAMPLES


@dataclass
class WindowMetrics:
    window_id: int
    n_developers: int
    n_edges: int = 0
    t_start: int | None = None
    t_end: int | None = None
    partial: bool = False
    gini: float | None = None
    mean_cc: float | None = None
    var_cc: float | None = None
    cc_ci_halfwidth: float | None = None
    n_cc: int = 0
    powerlaw: PowerLawFit | None = None
    hierarchy_global: HierarchyFit | None = None
    hierarchy_core: HierarchyFit | None = None
    notes: list = field(default_factory=list)
    error: str | None = None

    @property
    def pct_dev_scale_free(self) -> float | None:
        if self.powerlaw is None or self.n_developers == 0:
            return None
        return self.powerlaw.n_tail / self.n_developers


def summarize_window(network, config: MetricsConfig = MetricsConfig()) -> WindowMetrics:
    """Collect every per-window metric for one network."""
    m = WindowMetrics(
        getattr(network, "window_id", 0), getattr(network, "n_nodes", 0),
        t_start=getattr(network, "t_start", None), t_end=getattr(network, "t_end", None),
        partial=getattr(network, "partial", False), error=getattr(network, "error", None),
    )
    if m.n_developers == 0:
        return m
    deg = network.degrees()
    m.n_edges = int(deg.sum() // 2)
    m.gini = gini(deg)
    cc = clustering_coefficients(network)
    cc = cc[~np.isnan(cc)]
    m.n_cc = int(cc.size)
    if cc.size:
        m.mean_cc = float(cc.mean())
        m.var_cc = float(cc.var(ddof=1)) if cc.size > 1 else 0.0
        if cc.size > 1:
            z = norm.ppf(0.5 + CI_LEVEL / 2)
            m.cc_ci_halfwidth = float(z * math.sqrt(m.var_cc / cc.size))
    if np.any(deg > 0):
        reps = 0 if config.skip_bootstrap else config.bootstrap_reps
        m.powerlaw = fit_power_law(deg, reps, seed=config.seed, window_id=m.window_id,
                                   min_samples=config.min_bootstrap_samples)
        if m.powerlaw.warning:
            m.notes.append(f"powerlaw: {m.powerlaw.warning}")
    for subset in ("global", "core_only"):
        try:
            fit = fit_hierarchy(network, subset, config.hierarchy_method)
        except HierarchyWithheld as e:
            m.notes.append(f"hierarchy {subset}: {e}")
            continue
        if subset == "global":
            m.hierarchy_global = fit
        else:
            m.hierarchy_core = fit
    return m
