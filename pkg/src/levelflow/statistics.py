"""Curvature distributions, histograms, and fitting.

The universal curvature law for the orthogonal symmetry class is

    P(k) = 1 / (2 (1 + k^2)^(3/2)),

whose mean absolute value is exactly 1 and whose tail falls off as
k^-3.  Its one-parameter family

    P(K; gamma) = 1 / (2 gamma [1 + (K/gamma)^2]^(3/2))

has <|K|> = gamma and reduces to the universal law at gamma = 1; the
closed-form CDF (1 + (K/gamma)/sqrt(1 + (K/gamma)^2)) / 2 drives both
the exact sampler and the Kolmogorov-Smirnov distance.  gamma is fitted
to binned densities by golden-section least squares against bin-averaged
model values.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, ValidationError

#: Default search bracket for the gamma fit.
FIT_BRACKET = (0.1, 10.0)

_INVPHI = (np.sqrt(5.0) - 1.0) / 2.0


def universal_pdf(k) -> np.ndarray | float:
    """Universal curvature density 1 / (2 (1 + k^2)^(3/2))."""
    k = np.asarray(k, dtype=float)
    out = 0.5 / (1.0 + k**2) ** 1.5
    return out if out.ndim else float(out)


def gamma_pdf(k, gamma: float) -> np.ndarray | float:
    """One-parameter curvature density with mean absolute value gamma."""
    if not gamma > 0:
        raise ValidationError(f"gamma must be positive, got {gamma}")
    k = np.asarray(k, dtype=float)
    out = 0.5 / (gamma * (1.0 + (k / gamma) ** 2) ** 1.5)
    return out if out.ndim else float(out)


def gamma_cdf(k, gamma: float = 1.0) -> np.ndarray | float:
    """Closed-form CDF of :func:`gamma_pdf`."""
    if not gamma > 0:
        raise ValidationError(f"gamma must be positive, got {gamma}")
    z = np.asarray(k, dtype=float) / gamma
    out = 0.5 * (1.0 + z / np.sqrt(1.0 + z**2))
    return out if out.ndim else float(out)


def sample_gamma_dist(gamma: float, n: int, rng: np.random.Generator) -> np.ndarray:
    """Exact inverse-CDF sampler: K = gamma * u / sqrt(1 - u^2), u uniform(-1, 1)."""
    if not gamma > 0:
        raise ValidationError(f"gamma must be positive, got {gamma}")
    if n < 1:
        raise ValidationError(f"sample count must be >= 1, got {n}")
    u = rng.uniform(-1.0, 1.0, n)
    return gamma * u / np.sqrt(1.0 - u**2)


@dataclass
class Histogram:
    """Binned samples with half-open bins [e_i, e_{i+1}).

    total counts only the in-range samples; underflow/overflow are kept
    separately.  With truncated normalization (the default) the density
    integrates to 1 over the binned range; with truncated=False the
    denominator includes the out-of-range tallies, making the density an
    unbiased estimate of the underlying density on the range, which is
    what distribution fitting needs.
    """

    edges: np.ndarray
    counts: np.ndarray
    total: int
    underflow: int
    overflow: int
    density: np.ndarray
    truncated: bool = True

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.edges)

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[:-1] + self.edges[1:])


def build_histogram(samples, edges, truncated: bool = True) -> Histogram:
    """Histogram samples over ascending edges.

    Raises on fewer than 2 edges, non-ascending edges, or (for the
    truncated default) an empty in-range sample set, for which the
    density would be undefined.
    """
    edges = np.asarray(edges, dtype=float)
    if edges.ndim != 1 or len(edges) < 2:
        raise ValidationError("need at least two ascending bin edges")
    if np.any(np.diff(edges) <= 0):
        raise ValidationError("bin edges must be strictly ascending")
    samples = np.asarray(samples, dtype=float)
    counts = np.zeros(len(edges) - 1, dtype=int)
    if samples.size:
        # np.histogram closes the last bin; recover half-open semantics by
        # counting edge-equal samples as overflow.
        at_top = samples == edges[-1]
        counts, _ = np.histogram(samples[~at_top], bins=edges)
    underflow = int(np.sum(samples < edges[0]))
    overflow = int(np.sum(samples >= edges[-1]))
    total = int(counts.sum())
    denominator = total if truncated else total + underflow + overflow
    if denominator == 0:
        raise ValidationError("no samples to normalize the histogram density")
    density = counts / (denominator * np.diff(edges))
    return Histogram(
        edges=edges,
        counts=counts,
        total=total,
        underflow=underflow,
        overflow=overflow,
        density=density,
        truncated=truncated,
    )


@dataclass
class DistributionFit:
    """Result of the one-parameter curvature fit."""

    gamma: float
    objective: float
    gamma_uncertainty: float
    bins_used: int

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValidationError(f"fitted gamma must be positive, got {self.gamma}")


def model_bin_density(edges: np.ndarray, gamma: float) -> np.ndarray:
    """Bin-averaged model density: integral of gamma_pdf over each bin / width."""
    cdf = gamma_cdf(edges, gamma)
    return np.diff(cdf) / np.diff(edges)


def _golden_minimize(objective, lo: float, hi: float, rel_tol: float = 1e-6):
    a, b = lo, hi
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = objective(c), objective(d)
    while (b - a) > rel_tol * max(abs(a), abs(b)):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = objective(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = objective(d)
    x = 0.5 * (a + b)
    return x, objective(x)


def fit_gamma(
    hist: Histogram,
    bracket: tuple = FIT_BRACKET,
    rel_tol: float = 1e-6,
) -> DistributionFit:
    """Least-squares fit of gamma against the binned density.

    Minimizes the mean squared residual between the histogram density
    and the bin-averaged model over the bracket by golden-section
    search.  The one-sigma uncertainty comes from the curvature of the
    objective at the minimum (quadratic approximation of the residual
    surface, residual variance estimated from the minimum itself).
    Requires at least 5 non-empty bins; refuses a minimum pinned to a
    bracket edge.
    """
    nonempty = int(np.sum(hist.density > 0))
    if nonempty < 5:
        raise ValidationError(f"need at least 5 non-empty bins to fit, got {nonempty}")
    edges = hist.edges
    density = hist.density

    def objective(g: float) -> float:
        return float(np.mean((density - model_bin_density(edges, g)) ** 2))

    lo, hi = bracket
    gamma, best = _golden_minimize(objective, lo, hi, rel_tol)
    span = hi - lo
    if gamma - lo < 2 * rel_tol * span or hi - gamma < 2 * rel_tol * span:
        raise NumericalError(
            f"no interior minimum: fit ran into the bracket edge at gamma={gamma:.6g}"
        )
    # Quadratic approximation: sigma^2 = 2 s^2 / SSR''(gamma*), with the
    # residual variance s^2 estimated as SSR_min / (nbins - 1).
    nbins = len(density)
    step = max(1e-4 * gamma, 1e-8)
    second = (objective(gamma + step) - 2.0 * best + objective(gamma - step)) / step**2
    if second > 0:
        s2 = nbins * best / max(nbins - 1, 1)
        uncertainty = float(np.sqrt(2.0 * s2 / (nbins * second)))
    else:
        uncertainty = float("nan")
    return DistributionFit(
        gamma=float(gamma),
        objective=best,
        gamma_uncertainty=uncertainty,
        bins_used=nbins,
    )


def reduced_chi_square(hist: Histogram, gamma: float) -> float:
    """Conventional goodness-of-fit companion to the least-squares objective.

    Per-bin Poisson chi-square against expected counts from the
    bin-averaged model, divided by (bins - 1); bins with expected count
    below 1 are skipped.
    """
    denominator = hist.total if hist.truncated else hist.total + hist.underflow + hist.overflow
    expected = model_bin_density(hist.edges, gamma) * hist.widths * denominator
    keep = expected >= 1.0
    if not np.any(keep):
        raise ValidationError("no bins with usable expected counts")
    chi2 = float(np.sum((hist.counts[keep] - expected[keep]) ** 2 / expected[keep]))
    dof = max(int(np.sum(keep)) - 1, 1)
    return chi2 / dof


def ks_statistic(samples, gamma: float = 1.0) -> float:
    """Kolmogorov-Smirnov distance between the samples and the model CDF."""
    samples = np.sort(np.asarray(samples, dtype=float))
    n = len(samples)
    if n == 0:
        raise ValidationError("cannot compute a KS distance of an empty sample set")
    cdf = gamma_cdf(samples, gamma)
    above = np.max(np.arange(1, n + 1) / n - cdf)
    below = np.max(cdf - np.arange(0, n) / n)
    return float(max(above, below))


def loglog_slope(edges: np.ndarray, density: np.ndarray):
    """OLS slope of log density against log bin position.

    The abscissa is the geometric bin midpoint (for geometric bins any
    fixed within-bin position shifts log x by a constant, leaving the
    slope unchanged).  Zero-density bins are dropped.  Returns
    (slope, standard_error).
    """
    edges = np.asarray(edges, dtype=float)
    density = np.asarray(density, dtype=float)
    mids = np.sqrt(edges[1:] * edges[:-1])
    keep = density > 0
    if int(np.sum(keep)) < 3:
        raise ValidationError("need at least 3 non-empty bins for a slope")
    x = np.log(mids[keep])
    y = np.log(density[keep])
    nb = len(x)
    sxx = float(np.sum((x - x.mean()) ** 2))
    slope = float(np.sum((x - x.mean()) * (y - y.mean())) / sxx)
    intercept = y.mean() - slope * x.mean()
    residuals = y - (intercept + slope * x)
    s2 = float(np.sum(residuals**2)) / max(nb - 2, 1)
    return slope, float(np.sqrt(s2 / sxx))


def tail_exponent(samples, k_min: float, k_max: float, n_bins: int = 10):
    """Power-law exponent of the |sample| density over [k_min, k_max].

    Log density regressed on log |k| over geometric bins; for data from
    the universal law the expected exponent is -3.  Requires at least
    100 samples inside the window and a window ratio of at least 5.
    Returns (exponent, standard_error).
    """
    if not 0 < k_min < k_max:
        raise ValidationError(f"need 0 < k_min < k_max, got [{k_min}, {k_max}]")
    if k_max / k_min < 5.0:
        raise ValidationError(
            f"window ratio must be at least 5, got {k_max / k_min:.3g}"
        )
    magnitudes = np.abs(np.asarray(samples, dtype=float))
    inside = magnitudes[(magnitudes >= k_min) & (magnitudes <= k_max)]
    if len(inside) < 100:
        raise ValidationError(
            f"only {len(inside)} samples inside [{k_min}, {k_max}]; need at least 100"
        )
    edges = np.geomspace(k_min, k_max, n_bins + 1)
    counts, _ = np.histogram(inside, bins=edges)
    density = counts / (len(inside) * np.diff(edges))
    return loglog_slope(edges, density)
