"""Discrete score models on the 1..5 scale and parameter grids over them.

Two families are provided.  ``gsd_pmf`` builds a mean/dispersion
parameterised distribution as a two-piece mixture that hits a target
variance exactly: between the minimal-variance two-point distribution
concentrated on the integers adjacent to the mean, a shifted binomial,
and the maximal-variance distribution on the scale endpoints.
``qnormal_pmf`` bins a latent normal into the five response categories,
lumping both tails into categories 1 and 5.

``build_grid`` evaluates either family over a rectangular lattice of
parameter values and returns the rows in lexicographic order, which is
the layout every fitting routine in this package assumes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr

SCORES = (1, 2, 3, 4, 5)

PMF_SUM_TOL = 1e-9

GSD_PSI_RANGE = (1.0, 5.0)
GSD_RHO_RANGE = (0.0, 1.0)
QNORMAL_SIGMA_MIN = 1e-6

MODEL_IDS = ("gsd", "qnormal")


def validate_pmf(p, tol: float = PMF_SUM_TOL) -> np.ndarray:
    """Check that ``p`` is a proper pmf over the five categories."""
    arr = np.asarray(p, dtype=float)
    if arr.shape != (5,):
        raise ValueError(f"pmf must have 5 entries, got shape {arr.shape}")
    if np.any(arr < 0.0) or np.any(arr > 1.0):
        raise ValueError("pmf entries must lie in [0, 1]")
    s = float(arr.sum())
    if abs(s - 1.0) > tol:
        raise ValueError(f"pmf sums to {s!r}, expected 1 within {tol}")
    return arr


def gsd_variance_bounds(psi: float) -> tuple[float, float]:
    """Smallest and largest variance achievable at mean ``psi``.

    The minimum comes from splitting mass between the two integers
    adjacent to psi, the maximum from splitting between 1 and 5.
    """
    if not GSD_PSI_RANGE[0] <= psi <= GSD_PSI_RANGE[1]:
        raise ValueError(f"psi={psi} outside [1, 5]")
    vmax = (psi - 1.0) * (5.0 - psi)
    vmin = (math.ceil(psi) - psi) * (psi - math.floor(psi))
    return vmin, vmax


def _two_point(lo: int, hi: int, mean: float) -> list[float]:
    # mass on {lo, hi} with the requested mean
    p = [0.0] * 5
    w_hi = (mean - lo) / (hi - lo)
    p[lo - 1] = 1.0 - w_hi
    p[hi - 1] = w_hi
    return p


def _shifted_binomial(mean: float) -> list[float]:
    # 1 + Binomial(4, q) with q chosen so the mean matches
    q = (mean - 1.0) / 4.0
    return [math.comb(4, k) * q**k * (1.0 - q) ** (4 - k) for k in range(5)]


def gsd_pmf(psi: float, rho: float) -> np.ndarray:
    """Probability mass function with mean psi and dispersion rho.

    rho=1 gives the least-variance distribution for that mean, rho=0 the
    most-variance one; the variance interpolates linearly in between.
    Exact at both moments: E[X] = psi and
    Var[X] = rho*vmin + (1-rho)*vmax.
    """
    if not GSD_PSI_RANGE[0] <= psi <= GSD_PSI_RANGE[1]:
        raise ValueError(f"psi={psi} outside [1, 5]")
    if not GSD_RHO_RANGE[0] <= rho <= GSD_RHO_RANGE[1]:
        raise ValueError(f"rho={rho} outside [0, 1]")

    if psi == 1.0 or psi == 5.0:
        p = [0.0] * 5
        p[int(psi) - 1] = 1.0
        return np.array(p)

    vmin, vmax = gsd_variance_bounds(psi)
    target = rho * vmin + (1.0 - rho) * vmax

    lo, hi = math.floor(psi), math.ceil(psi)
    if lo == hi:  # integer mean: the least-variance law is the point mass
        p_min = [0.0] * 5
        p_min[lo - 1] = 1.0
    else:
        p_min = _two_point(lo, hi, psi)
    p_bin = _shifted_binomial(psi)
    v_bin = vmax / 4.0  # binomial variance 4q(1-q) at this mean

    # mixtures of equal-mean components keep the mean and interpolate
    # the variance linearly in the weight
    if target <= v_bin:
        w = (v_bin - target) / (v_bin - vmin) if v_bin > vmin else 0.0
        mix = [w * a + (1.0 - w) * b for a, b in zip(p_min, p_bin)]
    else:
        p_max = _two_point(1, 5, psi)
        w = (vmax - target) / (vmax - v_bin)
        mix = [w * a + (1.0 - w) * b for a, b in zip(p_bin, p_max)]
    return np.array(mix)


def qnormal_pmf(mu: float, sigma: float) -> np.ndarray:
    """Latent Normal(mu, sigma) binned at half-integer cut points.

    Category k gets the normal mass between k-0.5 and k+0.5, with the
    open tails folded into categories 1 and 5.  Bins on the upper side
    of mu are evaluated through the survival function so tiny tail
    probabilities survive in float arithmetic.
    """
    if sigma < QNORMAL_SIGMA_MIN:
        raise ValueError(f"sigma={sigma} too small (min {QNORMAL_SIGMA_MIN})")
    cuts = (1.5, 2.5, 3.5, 4.5)
    z = [(c - mu) / sigma for c in cuts]
    cdf_lo = [-math.inf] + z  # lower cut of each bin, z-scale
    cdf_hi = z + [math.inf]
    p = []
    for zlo, zhi in zip(cdf_lo, cdf_hi):
        if zlo >= 0.0:  # bin above the mean: difference of survivals
            mass = ndtr(-zlo) - ndtr(-zhi)
        else:
            mass = ndtr(zhi) - ndtr(zlo)
        p.append(float(mass))
    return np.array(p)


@dataclass
class ProbabilityGrid:
    """Pre-evaluated pmfs over a lattice of model parameters.

    ``params`` has one (param1, param2) row per lattice point in
    lexicographic order; ``pmfs`` holds the matching pmf rows.  ``axis1``
    and ``axis2`` are the sorted distinct values of each parameter.
    """

    model_id: str
    axis1: np.ndarray
    axis2: np.ndarray
    params: np.ndarray  # (n_rows, 2)
    pmfs: np.ndarray  # (n_rows, 5)
    _logp_t: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.model_id not in MODEL_IDS:
            raise ValueError(f"unknown model_id {self.model_id!r}")
        self.params = np.asarray(self.params, dtype=float)
        self.pmfs = np.asarray(self.pmfs, dtype=float)
        if self.params.shape != (len(self.pmfs), 2) or self.pmfs.shape[1] != 5:
            raise ValueError("params must be (n, 2) and pmfs (n, 5)")
        if len(self.params) == 0:
            raise ValueError("grid has no rows")

    def __len__(self) -> int:
        return len(self.params)

    def log_pmfs_t(self) -> np.ndarray:
        """(5, n_rows) log-pmf matrix, cached, with log(0) replaced by a
        large negative sentinel so 0 * log(0) products stay finite."""
        if self._logp_t is None:
            with np.errstate(divide="ignore"):
                logp = np.log(self.pmfs)
            logp[np.isneginf(logp)] = LOG_ZERO
            self._logp_t = np.ascontiguousarray(logp.T)
        return self._logp_t

    def validate(self, tol: float = PMF_SUM_TOL) -> None:
        """Full integrity check: row count, strict lexicographic order,
        pmf validity.  Used when a grid arrives from disk."""
        if len(self.params) != len(self.axis1) * len(self.axis2):
            raise ValueError("row count does not match axis1 x axis2")
        keys = list(map(tuple, self.params))
        if sorted(set(keys)) != keys:
            raise ValueError("grid rows must be unique and lexicographically sorted")
        for row in self.pmfs:
            validate_pmf(row, tol)


# sentinel for log(0); any count hitting it drives the row's score far
# below every feasible row without producing nan through 0 * -inf
LOG_ZERO = -1e300


def build_grid(model_id: str, axis1, axis2) -> ProbabilityGrid:
    """Evaluate ``model_id`` at every (a1, a2) lattice point."""
    if model_id not in MODEL_IDS:
        raise ValueError(f"unknown model_id {model_id!r}")
    ax1 = np.asarray(sorted(set(float(a) for a in axis1)))
    ax2 = np.asarray(sorted(set(float(a) for a in axis2)))
    if len(ax1) == 0 or len(ax2) == 0:
        raise ValueError("grid axes must be non-empty")
    pmf = gsd_pmf if model_id == "gsd" else qnormal_pmf
    params = np.empty((len(ax1) * len(ax2), 2))
    pmfs = np.empty((len(ax1) * len(ax2), 5))
    i = 0
    for a1 in ax1:
        for a2 in ax2:
            params[i] = (a1, a2)
            pmfs[i] = pmf(a1, a2)
            i += 1
    return ProbabilityGrid(model_id, ax1, ax2, params, pmfs)


def step_axis(start: float, stop: float, step: float) -> np.ndarray:
    """Inclusive lattice from start to stop, rounded so values like 0.15 are exact."""
    n = round((stop - start) / step)
    return np.round(start + step * np.arange(n + 1), 10)


def default_gsd_grid() -> ProbabilityGrid:
    """psi 1.00..5.00 and rho 0.00..1.00, both in steps of 0.01."""
    return build_grid("gsd", step_axis(1.0, 5.0, 0.01), step_axis(0.0, 1.0, 0.01))


def default_qnormal_grid() -> ProbabilityGrid:
    """mu 1.00..5.00 step 0.01, sigma 0.10..2.00 step 0.01."""
    return build_grid("qnormal", step_axis(1.0, 5.0, 0.01), step_axis(0.1, 2.0, 0.01))
