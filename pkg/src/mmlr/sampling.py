"""Sample-size and hypercube-edge planning plus the sampling-based estimators.

The planner converts a coefficient error bound (epsilon), a failure
probability (delta), and the ambient noise level into the number of rows a
local fit needs; the edge planner converts the same inputs into the
hypercube edge length that makes the bound hold for rows restricted to the
cube.  Two estimators consume a plan: a grouped average of many tiny fits
and a single direct fit on one sample, the latter being what the driver
uses.  `select_subset` picks a hypercube-restricted row subset for one
driver iteration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dataset import Dataset, RowIndexSet, subset_view
from .errors import EmptyLive, NoInteriorSeed, SingularDesign
from .linalg import LinearModel, _f_pvalue_from_sums, normal_quantile, ols_fit
from .rng import make_rng, sample_without_replacement

# Below this failure probability the closed-form constant (5.33 sigma
# two-sided, i.e. 28.4089 = 5.33^2 groups per epsilon^2) replaces the
# normal-quantile formula.
_TINY_DELTA = 1e-6
_TINY_DELTA_FACTOR = 28.4089


def size_floor(k: int, override: int | None = None) -> int:
    """Minimum subset size for a trustworthy local fit: max(65, 3k)."""
    if override is not None:
        return int(override)
    return max(65, 3 * k)


@dataclass(frozen=True)
class SampleSizePlan:
    """How many rows a local fit needs for the (epsilon, delta) bound."""

    epsilon: float
    delta: float
    sigma: float
    group_size: int      # rows per group, k + 2
    group_count: int     # number of groups
    sample_size: int     # total rows for the direct fit
    coeff_std_bound: float = 1.0

    @property
    def k(self) -> int:
        return self.group_size - 2


@dataclass(frozen=True)
class Hypercube:
    """Axis-aligned box given by per-dimension closed intervals."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lo, dtype=np.float64)
        hi = np.asarray(self.hi, dtype=np.float64)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError("lo and hi must be 1-D arrays of equal length")
        if np.any(lo > hi):
            raise ValueError("every lo must be <= the matching hi")
        lo.flags.writeable = False
        hi.flags.writeable = False
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def k(self) -> int:
        return int(self.lo.shape[0])

    @property
    def edges(self) -> np.ndarray:
        return self.hi - self.lo

    def contains(self, points: np.ndarray) -> np.ndarray:
        """Boolean mask of rows lying inside the box (closed bounds)."""
        pts = np.asarray(points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts.reshape(1, -1)
        return np.all((pts >= self.lo) & (pts <= self.hi), axis=1)


def plan_sample_size(epsilon: float, delta: float, sigma: float, k: int,
                     coeff_std_bound: float = 1.0,
                     floor_override: int | None = None) -> SampleSizePlan:
    """Compute the sample size for the (epsilon, delta) coefficient bound.

    group_count = ceil((quantile((2-delta)/2) * sigma * coeff_std_bound
    / epsilon)^(2/3)); the total is floored at max(65, 3k), below which
    small-sample effects would erase the guarantee.  For delta <= 1e-6 the
    closed-form constant path is used instead.
    """
    if epsilon <= 0.0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must be in (0, 1), got {delta}")
    if sigma < 0.0:
        raise ValueError(f"sigma must be nonnegative, got {sigma}")
    if k < 1:
        raise ValueError(f"k must be at least 1, got {k}")
    if coeff_std_bound <= 0.0:
        raise ValueError("coeff_std_bound must be positive")

    p = k + 2
    if delta <= _TINY_DELTA:
        t = math.ceil(_TINY_DELTA_FACTOR * coeff_std_bound ** 2 / epsilon ** 2)
    else:
        q = normal_quantile((2.0 - delta) / 2.0)
        t = math.ceil((q * sigma * coeff_std_bound / epsilon) ** (2.0 / 3.0))
    t = max(t, 1)
    n_s = max(p * t, size_floor(k, floor_override))
    return SampleSizePlan(
        epsilon=float(epsilon),
        delta=float(delta),
        sigma=float(sigma),
        group_size=p,
        group_count=t,
        sample_size=n_s,
        coeff_std_bound=float(coeff_std_bound),
    )


def plan_edge_length(epsilon: float, delta: float, sigma: float, sample_size: int) -> float:
    """Hypercube edge length 4*sqrt(3)*sigma / (epsilon*sqrt(sample_size*delta)).

    Zero noise gives edge 0; the caller must clamp.
    """
    if epsilon <= 0.0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must be in (0, 1), got {delta}")
    if sigma < 0.0:
        raise ValueError(f"sigma must be nonnegative, got {sigma}")
    if sample_size < 1:
        raise ValueError(f"sample_size must be positive, got {sample_size}")
    return 4.0 * math.sqrt(3.0) * sigma / (epsilon * math.sqrt(sample_size * delta))


# ---------------------------------------------------------------------------
# Estimators driven by a plan
# ---------------------------------------------------------------------------

_MAX_GROUP_REDRAWS = 10


def fit_direct_sample(ds: Dataset, plan: SampleSizePlan, rng_seed: int,
                      with_intercept: bool = True) -> LinearModel:
    """Fit one least-squares model on `plan.sample_size` rows drawn without replacement."""
    if ds.n < plan.sample_size:
        raise ValueError(f"dataset has {ds.n} rows, plan needs {plan.sample_size}")
    rng = make_rng(rng_seed, 1)
    rows = sample_without_replacement(rng, np.arange(ds.n, dtype=np.int64), plan.sample_size)
    return ols_fit(subset_view(ds, RowIndexSet.from_any(rows)), with_intercept=with_intercept)


def fit_grouped_average(ds: Dataset, plan: SampleSizePlan, rng_seed: int,
                        with_intercept: bool = True) -> LinearModel:
    """Average per-group fits over `group_count` disjoint groups of `group_size` rows.

    A singular group design is redrawn from the unused pool, at most
    10 times per group.  The returned model carries the coefficient-wise
    mean; its residual statistics are evaluated on the union of the groups.
    """
    t, p = plan.group_count, plan.group_size
    if ds.n < plan.sample_size:
        raise ValueError(f"dataset has {ds.n} rows, plan needs {plan.sample_size}")
    if ds.n < t * p:
        raise ValueError(f"dataset has {ds.n} rows, {t} groups of {p} need {t * p}")
    rng = make_rng(rng_seed, 2)
    pool = sample_without_replacement(rng, np.arange(ds.n, dtype=np.int64), ds.n)
    used = 0
    coeff_sum = np.zeros(ds.k)
    intercept_sum = 0.0
    group_rows = []
    for _ in range(t):
        model = None
        for _ in range(_MAX_GROUP_REDRAWS):
            if used + p > ds.n:
                raise SingularDesign("ran out of rows while redrawing singular groups")
            rows = pool[used:used + p]
            used += p
            try:
                model = ols_fit(subset_view(ds, RowIndexSet.from_any(rows)),
                                with_intercept=with_intercept)
                break
            except SingularDesign:
                model = None
        if model is None:
            raise SingularDesign(f"group design still singular after {_MAX_GROUP_REDRAWS} redraws")
        coeff_sum += model.coeffs
        intercept_sum += model.intercept
        group_rows.append(rows)
    coeffs = coeff_sum / t
    intercept = intercept_sum / t
    union = subset_view(ds, RowIndexSet.from_any(np.concatenate(group_rows)))
    resid = union.response - (union.features @ coeffs + intercept)
    sse = float(resid @ resid)
    dy = union.response - union.response_mean
    p_f = _f_pvalue_from_sums(sst=float(dy @ dy), sse=sse, n=union.n, k=union.k)
    return LinearModel.from_stats(coeffs, intercept, sse, union.n, p_f=p_f)


# ---------------------------------------------------------------------------
# Hypercube subset selection
# ---------------------------------------------------------------------------


def select_subset(ds: Dataset, live_rows: RowIndexSet, sample_size: int, edge: float,
                  rng_seed: int, floor_override: int | None = None,
                  allow_boundary_seed: bool = False) -> tuple[RowIndexSet, Hypercube]:
    """Pick a hypercube-restricted row subset around a random interior seed.

    Seeds are live rows at least edge/2 from every per-dimension extreme of
    the live data.  The cube of the given edge is centered on the seed; if
    it holds at least `sample_size` live rows a uniform subsample of that
    size is returned, if it holds at least max(65, 3k) the whole content is
    returned, otherwise one uniformly chosen dimension at a time is grown
    toward the side that stays inside the data range until the content
    reaches max(65, 3k) or the cube covers the full range.

    Raises NoInteriorSeed when no live row passes the margin test (unless
    `allow_boundary_seed`, which seeds anywhere and clips the cube to the
    data range) and EmptyLive when there are no live rows.
    """
    live = live_rows.indices
    if live.size == 0:
        raise EmptyLive("no live rows to select from")
    if edge < 0.0:
        raise ValueError(f"edge must be nonnegative, got {edge}")
    k = ds.k
    floor = size_floor(k, floor_override)
    rng = make_rng(rng_seed, 3)

    feats = ds.features[live]
    lo_all = feats.min(axis=0)
    hi_all = feats.max(axis=0)
    half = edge / 2.0

    interior = np.all((feats >= lo_all + half) & (feats <= hi_all - half), axis=1)
    candidates = np.flatnonzero(interior)
    if candidates.size == 0:
        if not allow_boundary_seed:
            raise NoInteriorSeed(
                f"no live row is at least {half:g} from every data-range boundary"
            )
        candidates = np.arange(live.size)
    seed_pos = int(candidates[rng.integers(0, candidates.size)])
    seed = feats[seed_pos]

    cube_lo = np.maximum(seed - half, lo_all)
    cube_hi = np.minimum(seed + half, hi_all)
    inside = np.all((feats >= cube_lo) & (feats <= cube_hi), axis=1)
    count = int(inside.sum())

    if count < floor:
        cube_lo, cube_hi, inside, count = _grow_cube(
            rng, feats, seed, cube_lo, cube_hi, lo_all, hi_all, edge, floor)

    members = live[inside]
    if count >= sample_size:
        members = np.sort(sample_without_replacement(rng, members, sample_size))
    cube = Hypercube(lo=cube_lo, hi=cube_hi)
    return RowIndexSet(np.sort(members)), cube


def _grow_cube(rng, feats, seed, cube_lo, cube_hi, lo_all, hi_all, edge, floor):
    """Grow one random dimension at a time until the cube holds `floor` rows."""
    k = feats.shape[1]
    base = edge if edge > 0.0 else 1.0
    while True:
        inside = np.all((feats >= cube_lo) & (feats <= cube_hi), axis=1)
        count = int(inside.sum())
        if count >= floor:
            return cube_lo, cube_hi, inside, count
        if np.all(cube_lo <= lo_all) and np.all(cube_hi >= hi_all):
            return cube_lo, cube_hi, inside, count  # full range reached
        j = int(rng.integers(0, k))
        current = cube_hi[j] - cube_lo[j]
        desired = (floor / count) * base if count > 0 else 2.0 * base
        if desired <= current:
            desired = 2.0 * current  # guarantee progress when the formula stalls
        extra = desired - current
        new_lo, new_hi = cube_lo.copy(), cube_hi.copy()
        # Grow toward the side that stays inside the data range.
        if seed[j] + desired / 2.0 > hi_all[j]:
            new_lo[j] = max(cube_lo[j] - extra, lo_all[j])
        else:
            new_hi[j] = min(cube_hi[j] + extra, hi_all[j])
        if new_lo[j] == cube_lo[j] and new_hi[j] == cube_hi[j]:
            # This side is pinned; push the other one.
            new_lo[j] = max(cube_lo[j] - extra, lo_all[j])
            new_hi[j] = min(cube_hi[j] + extra, hi_all[j])
        cube_lo, cube_hi = new_lo, new_hi
