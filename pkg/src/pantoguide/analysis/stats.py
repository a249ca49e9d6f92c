"""Study statistics: OLS with dummy coding, blocked ANOVA with Bonferroni
pairwise tests, responder clustering, delay mixture and confusion tables."""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy import stats
from sklearn.cluster import KMeans
from sklearn.exceptions import ConvergenceWarning
from sklearn.mixture import GaussianMixture

from ..cues import DIRECTIONS, Direction


class RankDeficient(ValueError):
    pass


class InsufficientData(ValueError):
    pass


class DegenerateFeatures(ValueError):
    pass


class UnknownLabel(ValueError):
    pass


# ---------------------------------------------------------------- OLS


@dataclass
class Design:
    X: np.ndarray
    names: list[str]
    # factor name -> column indices, used for F-tests of whole factors
    terms: dict[str, list[int]] = field(default_factory=dict)


def build_design(
    numeric: dict[str, np.ndarray] | None = None,
    categorical: dict[str, tuple[np.ndarray, list]] | None = None,
    *,
    intercept: bool = True,
) -> Design:
    """Assemble a design matrix with reference-level dummy coding.

    ``categorical`` maps a factor name to ``(values, levels)``; the first
    level is the reference and gets no column.
    """
    numeric = numeric or {}
    categorical = categorical or {}
    n = None
    for vals in list(numeric.values()) + [v for v, _ in categorical.values()]:
        n = len(vals) if n is None else n
        if len(vals) != n:
            raise ValueError("design columns differ in length")
    if n is None:
        raise ValueError("empty design")
    cols, names, terms = [], [], {}
    if intercept:
        cols.append(np.ones(n))
        names.append("Intercept")
    for name, vals in numeric.items():
        terms[name] = [len(cols)]
        cols.append(np.asarray(vals, dtype=float))
        names.append(name)
    for name, (vals, levels) in categorical.items():
        vals = np.asarray(vals, dtype=object)
        unknown = set(vals) - set(levels)
        if unknown:
            raise ValueError(f"{name}: values {sorted(map(str, unknown))} not in levels")
        terms[name] = []
        for level in levels[1:]:
            terms[name].append(len(cols))
            cols.append((vals == level).astype(float))
            names.append(f"{name}[{level}]")
    return Design(np.column_stack(cols), names, terms)


@dataclass
class OLSResult:
    names: list[str]
    coef: np.ndarray
    se: np.ndarray
    t: np.ndarray
    p: np.ndarray
    r2: float
    rss: float
    df_resid: int
    residuals: np.ndarray

    def __getitem__(self, name: str) -> dict:
        i = self.names.index(name)
        return {"coef": self.coef[i], "se": self.se[i], "t": self.t[i], "p": self.p[i]}

    def table(self) -> list[dict]:
        return [
            {"term": n, "coef": float(c), "se": float(s), "t": float(tt), "p": float(pp)}
            for n, c, s, tt, pp in zip(self.names, self.coef, self.se, self.t, self.p)
        ]


def ols_fit(design: Design | np.ndarray, y, names: list[str] | None = None) -> OLSResult:
    """Least squares via pivoted QR; t-based p-values with n - p dof."""
    if isinstance(design, Design):
        X, names = design.X, design.names
    else:
        X = np.asarray(design, dtype=float)
        names = names or [f"x{i}" for i in range(X.shape[1])]
    y = np.asarray(y, dtype=float)
    n, k = X.shape
    q, r, piv = scipy.linalg.qr(X, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    tol = max(n, k) * np.finfo(float).eps * (diag[0] if diag.size else 0.0)
    rank = int((diag > tol).sum())
    if rank < k:
        bad = sorted(names[j] for j in piv[rank:])
        raise RankDeficient(f"design is rank deficient; collinear columns: {', '.join(bad)}")
    if n <= k:
        raise InsufficientData(f"{n} observations for {k} parameters")
    beta_p = scipy.linalg.solve_triangular(r, q.T @ y)
    coef = np.empty(k)
    coef[piv] = beta_p
    resid = y - X @ coef
    rss = float(resid @ resid)
    dof = n - k
    sigma2 = rss / dof
    rinv = scipy.linalg.solve_triangular(r, np.eye(k))
    cov_p = sigma2 * (rinv @ rinv.T)
    se = np.empty(k)
    se[piv] = np.sqrt(np.diag(cov_p))
    with np.errstate(divide="ignore", invalid="ignore"):
        t = coef / se
    p = 2 * stats.t.sf(np.abs(t), dof)
    tss = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - rss / tss if tss > 0 else (1.0 if rss == 0 else 0.0)
    return OLSResult(list(names), coef, se, t, p, r2, rss, dof, resid)


def drop_terms(design: Design, term: str) -> Design:
    keep = [i for i in range(design.X.shape[1]) if i not in set(design.terms[term])]
    remap = {old: new for new, old in enumerate(keep)}
    terms = {
        name: [remap[i] for i in idx] for name, idx in design.terms.items() if name != term
    }
    return Design(design.X[:, keep], [design.names[i] for i in keep], terms)


def factor_f_tests(design: Design, y) -> dict[str, dict]:
    """Partial F-test for each factor (drop the factor's columns, compare RSS)."""
    y = np.asarray(y, dtype=float)
    full = ols_fit(design, y)
    # residuals at round-off level mean the data have no residual variance
    noise_free = full.rss <= (y.size * np.finfo(float).eps) ** 2 * float(y @ y)
    out = {}
    for term, idx in design.terms.items():
        if not idx:
            continue
        reduced = ols_fit(drop_terms(design, term), y)
        df_num = len(idx)
        num = (reduced.rss - full.rss) / df_num
        den = full.rss / full.df_resid
        if not noise_free and den > 0:
            f = max(num, 0.0) / den
            p = float(stats.f.sf(f, df_num, full.df_resid))
        else:
            f, p = math.nan, math.nan
        out[term] = {"F": float(f), "df_num": df_num, "df_den": full.df_resid, "p": p}
    return out


# ---------------------------------------------------------------- ANOVA


@dataclass
class AnovaResult:
    dof: str
    f_tests: dict[str, dict]
    group_means: dict[str, float]
    pairwise: list[dict]
    alpha: float
    n_comparisons: int
    flagged: bool  # F undefined (no residual variance)

    def significant(self, a: str, b: str) -> bool:
        for row in self.pairwise:
            if {row["a"], row["b"]} == {a, b}:
                return row["significant"]
        raise KeyError((a, b))

    def opposed_pair(self, a: str, b: str) -> dict:
        """Do cues ``a`` and ``b`` differ from every other cue, oppose each
        other in sign and carry the two largest absolute means?"""
        others = [g for g in self.group_means if g not in (a, b)]
        vs_all = all(self.significant(x, o) for x in (a, b) for o in others)
        opposed = self.group_means[a] * self.group_means[b] < 0 and self.significant(a, b)
        ranked = sorted(self.group_means, key=lambda g: -abs(self.group_means[g]))
        return {
            "dof": self.dof,
            "cues": [a, b],
            "different_from_all_others": bool(vs_all),
            "opposed": bool(opposed),
            "largest_effects": set(ranked[:2]) == {a, b},
            "holds": bool(vs_all and opposed and set(ranked[:2]) == {a, b}),
        }

    def as_dict(self) -> dict:
        return {
            "dof": self.dof,
            "f_tests": self.f_tests,
            "group_means": self.group_means,
            "alpha": self.alpha,
            "n_comparisons": self.n_comparisons,
            "f_undefined": self.flagged,
            "pairwise": self.pairwise,
        }


def _group_levels(labels):
    """Cue labels in direction order; arbitrary labels sorted."""
    raw = [c.value if isinstance(c, Direction) else str(c) for c in labels]
    try:
        vals = np.asarray([Direction.parse(c).value for c in raw], dtype=object)
        order = [d.value for d in DIRECTIONS]
    except ValueError:
        vals = np.asarray(raw, dtype=object)
        order = sorted(set(raw))
    present = set(vals)
    return vals, [g for g in order if g in present]


def _pooled_t(groups, pairs):
    """Equal-variance two-sample t-tests for all ``pairs`` at once."""
    n = np.array([[groups[a].size, groups[b].size] for a, b in pairs], dtype=float)
    mean = {g: v.mean() for g, v in groups.items()}
    ss = {g: float(((v - mean[g]) ** 2).sum()) for g, v in groups.items()}
    diff = np.array([mean[a] - mean[b] for a, b in pairs])
    dof = n.sum(axis=1) - 2
    pooled = np.array([ss[a] + ss[b] for a, b in pairs]) / dof
    with np.errstate(divide="ignore", invalid="ignore"):
        t = diff / np.sqrt(pooled * (1 / n[:, 0] + 1 / n[:, 1]))
    p = 2 * stats.t.sf(np.abs(t), dof)
    return t, p, diff


def anova_with_bonferroni(
    values,
    cues,
    *,
    blocks: dict[str, tuple[np.ndarray, list]] | None = None,
    dof: str = "",
    alpha: float = 0.01,
) -> AnovaResult:
    """Cue factor F-test (plus additive fixed blocking factors) and all
    pairwise two-sample t-tests at ``alpha / n_pairs``."""
    y = np.asarray(values, dtype=float)
    cues, levels = _group_levels(cues)
    if len(levels) < 2:
        raise InsufficientData("need at least two cue groups")
    groups = {g: y[cues == g] for g in levels}
    if any(v.size < 2 for v in groups.values()):
        raise InsufficientData("need at least two observations per group")

    categorical = {"cue": (cues, levels)}
    for name, (vals, lv) in (blocks or {}).items():
        if len(lv) > 1:
            categorical[name] = (vals, lv)
    design = build_design(categorical=categorical)
    try:
        f_tests = factor_f_tests(design, y)
    except RankDeficient:
        f_tests = factor_f_tests(build_design(categorical={"cue": (cues, levels)}), y)
    flagged = any(math.isnan(v["F"]) for v in f_tests.values())

    pairs = list(itertools.combinations(levels, 2))
    m = len(pairs)
    t, p, diff = _pooled_t(groups, pairs)
    pairwise = []
    for (a, b), tt, pp, dd in zip(pairs, t, p, diff):
        finite = bool(np.isfinite(pp))
        pairwise.append(
            {
                "a": a,
                "b": b,
                "mean_diff": float(dd),
                "t": float(tt),
                "p": float(pp),
                "p_bonferroni": float(min(1.0, pp * m)) if finite else math.nan,
                "significant": bool(finite and pp < alpha / m),
            }
        )
    means = {g: float(v.mean()) for g, v in groups.items()}
    return AnovaResult(dof, f_tests, means, pairwise, alpha, m, flagged)


# ---------------------------------------------------------------- clustering


@dataclass
class ClusterResult:
    labels: np.ndarray  # 0 = Fast, 1 = Slow
    centroids: np.ndarray  # (2, n_features) in original units
    inertia: float

    @property
    def sizes(self) -> tuple[int, int]:
        return int((self.labels == 0).sum()), int((self.labels == 1).sum())


def cluster_responders(features, *, n_init: int = 20, seed: int = 0) -> ClusterResult:
    """Two-group k-means on standardised features.

    Column 0 must be the mean delay; the group with the lower delay centroid
    is labelled 0 (Fast).
    """
    f = np.asarray(features, dtype=float)
    if f.ndim != 2 or f.shape[0] < 2:
        raise InsufficientData("need at least two subjects")
    mu = f.mean(axis=0)
    sd = f.std(axis=0)
    if not (sd > 0).any():
        raise DegenerateFeatures("all feature vectors are identical")
    sd = np.where(sd > 0, sd, 1.0)
    z = (f - mu) / sd
    km = KMeans(n_clusters=2, n_init=n_init, random_state=seed).fit(z)
    centroids = km.cluster_centers_ * sd + mu
    labels = km.labels_.copy()
    if centroids[0, 0] > centroids[1, 0]:
        labels = 1 - labels
        centroids = centroids[::-1]
    return ClusterResult(labels, centroids, float(km.inertia_))


# ---------------------------------------------------------------- mixture


@dataclass
class MixtureResult:
    means: tuple[float, float]
    sds: tuple[float, float]
    weights: tuple[float, float]
    converged: bool
    n_iter: int
    degenerate: bool

    def as_dict(self) -> dict:
        return {
            "means_s": list(self.means),
            "sds_s": list(self.sds),
            "weights": list(self.weights),
            "converged": self.converged,
            "n_iter": self.n_iter,
            "degenerate": self.degenerate,
        }


def delay_mixture(delays, *, max_iter: int = 500, tol: float = 1e-8) -> MixtureResult:
    """Two-component 1-D Gaussian mixture by EM, started at the quartiles."""
    x = np.sort(np.asarray(delays, dtype=float))
    if x.size < 4:
        raise InsufficientData("need at least 4 delays")
    q1, q3 = np.percentile(x, [25, 75])
    spread = float(x.std())
    init_sd = max(spread / 2, 1e-3)
    gm = GaussianMixture(
        n_components=2,
        covariance_type="spherical",
        means_init=[[q1], [q3]],
        weights_init=[0.5, 0.5],
        precisions_init=[1 / init_sd**2] * 2,
        max_iter=max_iter,
        tol=tol,
        reg_covar=1e-9,
    )
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        gm.fit(x[:, None])
    means = gm.means_[:, 0]
    order = np.argsort(means)
    sds = np.sqrt(gm.covariances_)[order]
    weights = gm.weights_[order]
    means = means[order]
    # components closer than their own spread are not two modes
    degenerate = bool(means[1] - means[0] < max(sds.max(), 1e-12))
    return MixtureResult(
        (float(means[0]), float(means[1])),
        (float(sds[0]), float(sds[1])),
        (float(weights[0]), float(weights[1])),
        bool(gm.converged_),
        int(gm.n_iter_),
        degenerate,
    )


# ---------------------------------------------------------------- confusion


@dataclass
class ConfusionBlock:
    counts: np.ndarray  # (8, 8) rows = cue, cols = response, canonical direction order
    percent: np.ndarray
    overall_percent_correct: float
    row_totals: np.ndarray

    def as_dict(self) -> dict:
        labels = [d.value for d in DIRECTIONS]
        return {
            "order": labels,
            "counts": self.counts.astype(int).tolist(),
            "percent": np.round(self.percent, 6).tolist(),
            "overall_percent_correct": self.overall_percent_correct,
            "row_totals": self.row_totals.astype(int).tolist(),
        }


def confusion_stats(choices) -> ConfusionBlock:
    index = {d: i for i, d in enumerate(DIRECTIONS)}
    counts = np.zeros((8, 8))
    for c in choices:
        try:
            counts[index[Direction(c.cue)], index[Direction(c.response)]] += 1
        except ValueError as exc:
            raise UnknownLabel(str(exc)) from None
    totals = counts.sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        pct = np.where(totals[:, None] > 0, 100.0 * counts / totals[:, None], 0.0)
    total = totals.sum()
    overall = 100.0 * np.trace(counts) / total if total else math.nan
    return ConfusionBlock(counts, pct, float(overall), totals)


# ---------------------------------------------------------------- misc


def mean_ci(values, level: float = 0.95) -> tuple[float, float, float]:
    """Mean with a Student-t confidence interval (n - 1 dof)."""
    v = np.asarray(values, dtype=float)
    m = float(v.mean())
    if v.size < 2:
        return m, math.nan, math.nan
    half = float(stats.t.ppf(0.5 + level / 2, v.size - 1) * v.std(ddof=1) / math.sqrt(v.size))
    return m, m - half, m + half
