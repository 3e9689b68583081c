"""Threshold search for one feature column against the target.

Each heuristic looks at a single column ``x`` and the target ``y`` of the
rows reaching a node and proposes at most one threshold ``c`` so that rows
with ``x <= c`` go left. Four heuristics are provided:

* :func:`best_split_variance` -- sorted sweep maximising the weighted
  reduction of y-variance, using running sums of ``y`` and ``y**2``.
* :func:`best_split_ttest` -- same sweep, maximising Welch's ``|t|``.
* :func:`best_split_segmented` -- breakpoint of an iteratively fitted
  piecewise-linear regression of ``y`` on ``x``.
* :func:`best_split_gmm` -- equal-posterior point of a two-component
  bivariate Gaussian mixture fitted to ``(x, y)`` by EM.

Every candidate carries the weighted variance reduction it achieves so the
tree grower can compare candidates from different features on one scale.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigError, DataError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SplitCandidate:
    """A proposed split ``x[feature_index] <= threshold``.

    ``score`` is the heuristic's own figure of merit (reduction, ``|t|``,
    ...); ``reduction`` is always the weighted y-variance reduction.
    """

    feature_index: int
    threshold: float
    score: float
    left_count: int
    right_count: int
    reduction: float


@dataclass(frozen=True)
class PrefixMoments:
    """Running count, sum and sum of squares of ``y - shift`` in sorted order.

    Entry ``k - 1`` holds the moments of the first ``k`` sorted rows.
    Shifting by the mean before accumulating keeps the squared sums well
    conditioned, and the sums are carried in extended precision so that
    thresholds where the two group means nearly coincide are still scored
    to full double accuracy.
    """

    count: np.ndarray
    sum_y: np.ndarray
    sum_y2: np.ndarray
    shift: float = 0.0

    @property
    def n(self) -> int:
        return len(self.count)

    def left(self, k):
        """Count, mean and population variance of the first ``k`` rows."""
        k = np.asarray(k)
        s, q = self.sum_y[k - 1], self.sum_y2[k - 1]
        mean = s / k
        return k, np.float64(mean + self.shift), np.float64(np.maximum(q / k - mean * mean, 0.0))

    def right(self, k):
        """Count, mean and population variance of the rows after the first ``k``."""
        k = np.asarray(k)
        r = self.n - k
        s = self.sum_y[-1] - self.sum_y[k - 1]
        q = self.sum_y2[-1] - self.sum_y2[k - 1]
        mean = s / r
        return r, np.float64(mean + self.shift), np.float64(np.maximum(q / r - mean * mean, 0.0))


def prefix_moments(y_sorted, shift: float | None = None) -> PrefixMoments:
    y = np.asarray(y_sorted, dtype=np.float64)
    if shift is None:
        shift = float(y.mean()) if y.size else 0.0
    d = (y - shift).astype(np.longdouble)
    return PrefixMoments(np.arange(1, y.size + 1), np.cumsum(d), np.cumsum(d * d), shift)


def _check_xy(x, y):
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.shape != y.shape:
        raise DataError(f"x and y differ in length ({x.size} vs {y.size})")
    if np.isnan(x).any() or np.isnan(y).any():
        raise DataError("NaN in split search input")
    return x, y


@dataclass(frozen=True)
class _Sweep:
    xs: np.ndarray  # sorted x
    moments: PrefixMoments
    k: np.ndarray  # admissible left-group sizes

    def thresholds(self, k=None):
        k = self.k if k is None else np.asarray(k)
        lo, hi = self.xs[k - 1], self.xs[k]
        mid = lo + (hi - lo) / 2.0
        return np.where(mid < hi, mid, lo)


def _sweep(x, y, m: int) -> _Sweep:
    """Sort once and list left-group sizes ``k`` with ``m <= k <= N - m``
    that fall between two distinct x-values."""
    m = max(int(m), 1)
    order = np.argsort(x, kind="stable")
    xs = x[order]
    pm = prefix_moments(y[order])
    n = x.size
    if n < 2 * m:
        return _Sweep(xs, pm, np.empty(0, dtype=np.int64))
    k = np.arange(m, n - m + 1)
    k = k[xs[k - 1] < xs[k]]
    return _Sweep(xs, pm, k)


def reduction_at(moments: PrefixMoments, k) -> np.ndarray:
    """Weighted variance reduction when the first ``k`` sorted rows go left.

    Equal to ``Var(s) - (N_l/N Var(s_l) + N_r/N Var(s_r))`` with population
    variances, evaluated in the between-groups form
    ``N_l N_r / N**2 * (mean_l - mean_r)**2`` which needs only the running
    sums and never subtracts two large variances.
    """
    k = np.asarray(k)
    n = moments.n
    s_l = moments.sum_y[k - 1]
    s_r = moments.sum_y[-1] - s_l
    diff = s_l / k - s_r / (n - k)
    return ((k / n) * ((n - k) / n) * diff * diff).astype(np.float64)


def welch_t_at(moments: PrefixMoments, k, var_floor: float = 0.0) -> np.ndarray:
    """Welch's t statistic ``(mean_l - mean_r) / sqrt(v_l/N_l + v_r/N_r)``.

    ``v`` are sample variances (denominator ``n - 1``), floored at
    ``var_floor``. A zero standard error gives ``t = 0``.
    """
    k = np.asarray(k)
    n = moments.n
    r = n - k
    s_l = moments.sum_y[k - 1]
    s_r = moments.sum_y[-1] - s_l
    q_l = moments.sum_y2[k - 1]
    q_r = moments.sum_y2[-1] - q_l
    with np.errstate(divide="ignore", invalid="ignore"):
        v_l = np.where(k > 1, np.maximum(q_l - s_l * s_l / k, 0.0) / (k - 1), 0.0)
        v_r = np.where(r > 1, np.maximum(q_r - s_r * s_r / r, 0.0) / (r - 1), 0.0)
        v_l = np.maximum(v_l, var_floor)
        v_r = np.maximum(v_r, var_floor)
        se = np.sqrt(v_l / k + v_r / r)
        t = (s_l / k - s_r / r) / se
    return np.where(se > 0, t, 0.0).astype(np.float64)


def split_scores(x, y, m: int, method: str = "variance"):
    """Score every admissible midpoint threshold of ``x``.

    Returns ``(thresholds, scores, left_counts)`` where scores are the
    variance reductions (``method="variance"``) or signed Welch t values
    (``method="ttest"``).
    """
    x, y = _check_xy(x, y)
    sw = _sweep(x, y, m)
    if method == "variance":
        scores = reduction_at(sw.moments, sw.k)
    elif method == "ttest":
        scores = welch_t_at(sw.moments, sw.k, _welch_floor(y))
    else:
        raise ConfigError(f"unknown scoring method {method!r}")
    return sw.thresholds(), scores, sw.k.copy()


def _welch_floor(y) -> float:
    return 1e-12 * float(np.var(y)) if y.size else 0.0


def _pick(scores: np.ndarray, thresholds: np.ndarray, median: float) -> int:
    """Index of the best score; ties go to the threshold nearest ``median``."""
    best = np.flatnonzero(scores == scores.max())
    if best.size == 1:
        return int(best[0])
    return int(best[np.argmin(np.abs(thresholds[best] - median))])


def _candidate(sw: _Sweep, k: int, threshold: float, score: float, feature_index: int):
    red = float(reduction_at(sw.moments, k))
    if not red > 0.0:
        return None
    return SplitCandidate(feature_index, float(threshold), float(score), int(k), int(sw.moments.n - k), red)


def best_split_variance(x, y, m: int, feature_index: int = -1) -> SplitCandidate | None:
    """Threshold with the largest weighted y-variance reduction.

    Sorts by ``x`` once and evaluates every midpoint between distinct
    x-values whose left group holds between ``m`` and ``N - m`` rows.
    Returns ``None`` when no threshold reduces the variance.
    """
    x, y = _check_xy(x, y)
    if y.size == 0 or np.ptp(y) == 0:
        return None
    sw = _sweep(x, y, m)
    if sw.k.size == 0:
        return None
    red = reduction_at(sw.moments, sw.k)
    thr = sw.thresholds()
    i = _pick(red, thr, float(np.median(x)))
    return _candidate(sw, sw.k[i], thr[i], red[i], feature_index)


def best_split_ttest(x, y, m: int, feature_index: int = -1) -> SplitCandidate | None:
    """Threshold with the largest Welch ``|t|`` between the two groups.

    Group variances are floored at ``1e-12 * Var(y)`` so that constant
    groups with different means get a large but finite score.
    """
    x, y = _check_xy(x, y)
    if y.size == 0 or np.ptp(y) == 0:
        return None
    sw = _sweep(x, y, m)
    if sw.k.size == 0:
        return None
    t = np.abs(welch_t_at(sw.moments, sw.k, _welch_floor(y)))
    thr = sw.thresholds()
    i = _pick(t, thr, float(np.median(x)))
    return _candidate(sw, sw.k[i], thr[i], t[i], feature_index)


@dataclass(frozen=True)
class SegmentedFit:
    """Result of the iterative breakpoint fit.

    The fitted curve is ``intercept + alpha*x + beta*max(x - c, 0)
    - gamma*[x > c]`` evaluated at the breakpoint of the last iteration;
    ``trajectory`` lists ``c`` from the start value onward.
    """

    breakpoint: float
    intercept: float
    alpha: float
    beta: float
    gamma: float
    trajectory: tuple[float, ...]
    converged: bool
    n_iter: int
    jittered: bool = False
    aborted: bool = False


def fit_segmented(x, y, c0: float, tol: float, max_iters: int = 30) -> SegmentedFit:
    """Estimate a single breakpoint of a piecewise-linear fit of ``y`` on ``x``.

    Each step builds ``U = max(x - c, 0)`` and ``V = -[x > c]``, solves the
    least squares fit ``y ~ a + alpha*x + beta*U + gamma*V`` and moves the
    breakpoint to ``c + gamma/beta`` (clamped to the range of ``x``). The
    loop stops once the step is at most ``tol``.

    A near-singular normal matrix gets a ridge of ``1e-8`` times its mean
    diagonal (``jittered`` is set). ``|beta| < 1e-12`` (no change of slope,
    on standardised data) ends the fit early as not converged and
    ``aborted``.
    """
    x, y = _check_xy(x, y)
    if x.size < 3:
        raise DataError("segmented fit needs at least 3 points")
    lo, hi = float(x.min()), float(x.max())
    if lo == hi:
        raise DataError("segmented fit needs at least 2 distinct x values")
    if max_iters < 1:
        raise ConfigError("max_iters must be >= 1")
    # work on standardised data; gamma/beta is then in units of x_sd
    x_mu, x_sd = float(x.mean()), float(x.std())
    y_mu, y_sd = float(y.mean()), float(y.std())
    y_sd = y_sd if y_sd > 0 else 1.0
    z = (x - x_mu) / x_sd
    t = (y - y_mu) / y_sd
    c = min(max(float(c0), lo), hi)
    traj = [c]
    coef = np.zeros(4)
    converged = jittered = aborted = False
    A = np.empty((x.size, 4))
    A[:, 0] = 1.0
    A[:, 1] = z
    n_iter = 0
    for n_iter in range(1, max_iters + 1):
        cz = (c - x_mu) / x_sd
        above = z > cz
        np.maximum(z - cz, 0.0, out=A[:, 2])
        A[:, 3] = np.where(above, -1.0, 0.0)
        G = A.T @ A
        rhs = A.T @ t
        if np.linalg.cond(G) > 1e12:
            G = G + 1e-8 * np.trace(G) / 4.0 * np.eye(4)
            jittered = True
        coef = np.linalg.solve(G, rhs)
        beta, gamma = coef[2], coef[3]
        if abs(beta) < 1e-12:
            aborted = True
            break
        step = gamma / beta * x_sd
        if abs(step) <= tol:
            c_new = min(max(c + step, lo), hi)
            traj.append(c_new)
            c = c_new
            converged = True
            break
        c_new = min(max(c + step, lo), hi)
        traj.append(c_new)
        if c_new == c:
            break  # pinned at the boundary
        c = c_new
    a0, a1, b, g = coef
    alpha = a1 * y_sd / x_sd
    beta = b * y_sd / x_sd
    intercept = y_mu + y_sd * a0 - alpha * x_mu
    return SegmentedFit(float(c), float(intercept), float(alpha), float(beta), float(g * y_sd),
                        tuple(float(v) for v in traj), converged, n_iter, jittered, aborted)


@dataclass(frozen=True)
class SegmentedConfig:
    """Settings for :func:`best_split_segmented`.

    ``rel_tol`` is multiplied by the range of ``x``. ``scoring`` is
    ``"reduction"`` (weighted variance reduction) or ``"variance_difference"``
    (``|Var(left) - Var(right)|``).
    """

    max_iters: int = 30
    rel_tol: float = 1e-4
    scoring: str = "reduction"

    def __post_init__(self):
        if self.scoring not in ("reduction", "variance_difference"):
            raise ConfigError(f"unknown segmented scoring {self.scoring!r}")


def _snap(sw: _Sweep, c: float) -> tuple[int, float] | None:
    """Turn a free threshold into an admissible one.

    ``c`` is kept when it lies strictly inside the x-range and its left
    group size is admissible; otherwise the nearest admissible midpoint is
    used.
    """
    if sw.k.size == 0:
        return None
    xs = sw.xs
    k = int(np.searchsorted(xs, c, side="right"))
    if xs[0] < c < xs[-1]:
        pos = np.searchsorted(sw.k, k)
        if pos < sw.k.size and sw.k[pos] == k:
            return k, float(c)
    i = np.searchsorted(sw.k, k)
    near = [j for j in (i - 1, i) if 0 <= j < sw.k.size]
    j = min(near, key=lambda j: (abs(int(sw.k[j]) - k), j))
    kk = int(sw.k[j])
    return kk, float(sw.thresholds(np.array([kk]))[0])


def best_split_segmented(x, y, m: int, cfg: SegmentedConfig | None = None,
                         feature_index: int = -1) -> SplitCandidate | None:
    """Breakpoint of the iterative segmented regression, as a split.

    Starts from ``median(x)``; the resulting breakpoint is moved to the
    nearest admissible position if a child would get fewer than ``m`` rows.
    A fit that finds no change of slope at all yields no candidate; one
    that runs out of iterations still proposes its last breakpoint.
    """
    cfg = cfg or SegmentedConfig()
    x, y = _check_xy(x, y)
    if y.size < 3 or np.ptp(y) == 0 or np.ptp(x) == 0:
        return None
    sw = _sweep(x, y, m)
    if sw.k.size == 0:
        return None
    fit = fit_segmented(x, y, float(np.median(x)), cfg.rel_tol * float(np.ptp(x)), cfg.max_iters)
    if fit.aborted:
        return None
    snapped = _snap(sw, fit.breakpoint)
    if snapped is None:
        return None
    k, thr = snapped
    if cfg.scoring == "variance_difference":
        _, _, v_l = sw.moments.left(k)
        _, _, v_r = sw.moments.right(k)
        score = abs(float(v_l) - float(v_r))
    else:
        score = float(reduction_at(sw.moments, k))
    return _candidate(sw, k, thr, score, feature_index)


@dataclass(frozen=True)
class GaussianMixtureFit:
    """Two-component bivariate Gaussian mixture over ``(x, y)``.

    ``boundary`` is the x-value where the two components' weighted
    x-marginal densities are equal, or ``None`` if there is none.
    """

    weights: np.ndarray
    means: np.ndarray
    covariances: np.ndarray
    boundary: float | None
    log_likelihood: float
    n_iter: int
    converged: bool
    degenerate: bool = False
    diagnostic: str = ""


@dataclass(frozen=True)
class GMMConfig:
    max_em_iters: int = 100
    tol: float = 1e-6
    seed: int = 0
    cov_floor: float = 1e-6
    init_iters: int = 10
    init_sample: int = 10_000
    collapse_patience: int = 5
    normalize: bool = True


def _floor_cov(S: np.ndarray, floor: float) -> tuple[np.ndarray, int]:
    """Clip the eigenvalues of each 2x2 covariance at ``floor``.

    Returns the clipped matrices and, per component, how many eigenvalues
    were clipped.
    """
    w, v = np.linalg.eigh(S)
    hits = (w < floor).sum(axis=1)
    w = np.maximum(w, floor)
    return np.einsum("kij,kj,klj->kil", v, w, v), hits


def _log_gauss2(x: np.ndarray, y: np.ndarray, mu: np.ndarray, S: np.ndarray) -> np.ndarray:
    """Log density of each point ``(x, y)`` under one 2-D Gaussian."""
    a, b, d = S[0, 0], S[0, 1], S[1, 1]
    det = a * d - b * b
    dx = x - mu[0]
    dy = y - mu[1]
    maha = (d * dx * dx - 2.0 * b * dx * dy + a * dy * dy) / det
    return -0.5 * maha - (0.5 * np.log(det) + np.log(2.0 * np.pi))


def _kmeans_init(P: np.ndarray, rng: np.random.Generator, iters: int, sample: int):
    """Two-centre k-means++ seeding followed by a few Lloyd steps.

    Returns the hard assignment to the first centre as a 0/1 vector.
    """
    S = P if P.shape[0] <= sample else P[rng.choice(P.shape[0], sample, replace=False)]
    first = S[rng.integers(S.shape[0])]
    d2 = ((S - first) ** 2).sum(axis=1)
    if d2.sum() == 0:
        return None
    second = S[rng.choice(S.shape[0], p=d2 / d2.sum())]
    centers = np.vstack([first, second])
    for _ in range(iters):
        dist = ((S[:, None, :] - centers[None]) ** 2).sum(axis=2)
        lab = dist.argmin(axis=1)
        if np.bincount(lab, minlength=2).min() == 0:
            return None
        new = np.vstack([S[lab == j].mean(axis=0) for j in range(2)])
        if np.array_equal(new, centers):
            break
        centers = new
    dist = ((P[:, None, :] - centers[None]) ** 2).sum(axis=2)
    return (dist[:, 0] <= dist[:, 1]).astype(np.float64)


class _Moments2:
    """Raw moments of ``(x, y)`` for responsibility-weighted M-steps.

    With two components the second responsibility is ``1 - r``, so its
    weighted sums are the totals minus those of the first component.
    """

    def __init__(self, x, y):
        self.cols = (x, y, x * x, x * y, y * y)
        self.totals = np.array([float(x.size)] + [float(c.sum()) for c in self.cols])

    def m_step(self, r: np.ndarray, floor: float):
        s0 = np.array([r.sum()] + [r @ c for c in self.cols])
        sums = (s0, self.totals - s0)
        nk = np.array([sums[0][0], sums[1][0]])
        weights = nk / self.totals[0]
        means = np.empty((2, 2))
        covs = np.empty((2, 2, 2))
        for k, (n, sx, sy, sxx, sxy, syy) in enumerate(sums):
            n = max(n, 1e-300)
            mx, my = sx / n, sy / n
            means[k] = mx, my
            cxy = sxy / n - mx * my
            covs[k] = [[sxx / n - mx * mx, cxy], [cxy, syy / n - my * my]]
        covs, hits = _floor_cov(covs, floor)
        return weights, means, covs, hits, nk


def marginal_boundary(weights, means, covs, median: float) -> float | None:
    """Equal-posterior x-value of the two components' x-marginals.

    Solves ``pi_1 N(x; m_1, s_1) = pi_2 N(x; m_2, s_2)``, a quadratic in
    ``x``. Of the real roots the one between the two means is preferred;
    remaining ties go to the root closest to ``median``.
    """
    p1, p2 = float(weights[0]), float(weights[1])
    m1, m2 = float(means[0][0]), float(means[1][0])
    v1, v2 = float(covs[0][0][0]), float(covs[1][0][0])
    const = np.log(p1 / p2) - 0.5 * np.log(v1 / v2)
    a = 1.0 / (2.0 * v2) - 1.0 / (2.0 * v1)
    b = m1 / v1 - m2 / v2
    c = -m1 * m1 / (2.0 * v1) + m2 * m2 / (2.0 * v2) + const
    scale = max(abs(b), abs(c), 1e-300)
    if abs(a) <= 1e-12 * scale:
        if b == 0.0:
            return None
        roots = [-c / b]
    else:
        disc = b * b - 4.0 * a * c
        if disc < 0.0:
            return None
        sq = np.sqrt(disc)
        # numerically stable pair of roots
        qq = -0.5 * (b + np.copysign(sq, b))
        roots = [qq / a] + ([c / qq] if qq != 0.0 else [])
    lo, hi = min(m1, m2), max(m1, m2)
    inside = [r for r in roots if lo <= r <= hi]
    pool = inside or roots
    return float(min(pool, key=lambda r: abs(r - median)))


def fit_gmm(x, y, cfg: GMMConfig | None = None) -> GaussianMixtureFit:
    """Fit a two-component Gaussian mixture to ``(x, y)`` by EM.

    Initialisation is k-means with k-means++ seeding drawn from
    ``cfg.seed``. Eigenvalues of each covariance are floored at
    ``cfg.cov_floor``; a component whose covariance stays fully floored
    (a point mass) for ``cfg.collapse_patience`` iterations, or whose
    weight vanishes, marks the fit degenerate.
    """
    cfg = cfg or GMMConfig()
    x, y = _check_xy(x, y)
    P = np.column_stack([x, y])
    rng = np.random.default_rng(cfg.seed)
    empty = np.zeros(2), np.zeros((2, 2)), np.zeros((2, 2, 2))

    def degenerate(msg, n_iter=0, ll=float("nan"), params=empty):
        logger.debug("gmm degenerate: %s", msg)
        return GaussianMixtureFit(*params, None, ll, n_iter, False, True, msg)

    if P.shape[0] < 4:
        return degenerate("fewer than 4 points")
    resp = _kmeans_init(P, rng, cfg.init_iters, cfg.init_sample)
    if resp is None:
        return degenerate("k-means initialisation left a cluster empty")
    moments = _Moments2(x, y)
    ll_old = -np.inf
    collapsed = np.zeros(2, dtype=int)
    converged = False
    ll = ll_old
    n_iter = 0
    for n_iter in range(1, cfg.max_em_iters + 1):
        weights, means, covs, hits, nk = moments.m_step(resp, cfg.cov_floor)
        if nk.min() < 1.0:
            return degenerate("a component lost all its mass", n_iter)
        collapsed = np.where(hits == 2, collapsed + 1, 0)
        if collapsed.max() >= cfg.collapse_patience:
            return degenerate("a component collapsed below the covariance floor",
                              n_iter, params=(weights, means, covs))
        lp0 = _log_gauss2(x, y, means[0], covs[0]) + np.log(weights[0])
        lp1 = _log_gauss2(x, y, means[1], covs[1]) + np.log(weights[1])
        norm = np.logaddexp(lp0, lp1)
        resp = np.exp(lp0 - norm)
        ll = float(norm.sum())
        if abs(ll - ll_old) <= cfg.tol * max(abs(ll), 1.0):
            converged = True
            break
        ll_old = ll
    weights, means, covs, _, _ = moments.m_step(resp, cfg.cov_floor)
    boundary = marginal_boundary(weights, means, covs, float(np.median(x)))
    return GaussianMixtureFit(weights, means, covs, boundary, ll, n_iter, converged)


def best_split_gmm(x, y, m: int, cfg: GMMConfig | None = None,
                   feature_index: int = -1) -> SplitCandidate | None:
    """Split at the boundary between two Gaussian clusters of ``(x, y)``.

    Both coordinates are standardised before EM (``cfg.normalize``). The
    boundary is moved to the nearest admissible position if a child would
    get fewer than ``m`` rows, then scored by variance reduction.
    """
    cfg = cfg or GMMConfig()
    x, y = _check_xy(x, y)
    if y.size < 4 or np.ptp(y) == 0 or np.ptp(x) == 0:
        return None
    sw = _sweep(x, y, m)
    if sw.k.size == 0:
        return None
    if cfg.normalize:
        x_mu, x_sd = float(x.mean()), float(x.std())
        zx, zy = (x - x_mu) / x_sd, (y - y.mean()) / y.std()
    else:
        x_mu, x_sd, zx, zy = 0.0, 1.0, x, y
    fit = fit_gmm(zx, zy, cfg)
    if fit.degenerate or fit.boundary is None:
        logger.debug("gmm split on feature %d: no boundary (%s)", feature_index, fit.diagnostic)
        return None
    snapped = _snap(sw, x_mu + fit.boundary * x_sd)
    if snapped is None:
        return None
    k, thr = snapped
    red = float(reduction_at(sw.moments, k))
    return _candidate(sw, k, thr, red, feature_index)


HEURISTICS = {
    "variance": best_split_variance,
    "ttest": best_split_ttest,
    "segmented": best_split_segmented,
    "gmm": best_split_gmm,
}
