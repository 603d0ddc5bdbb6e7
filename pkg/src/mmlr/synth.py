"""Synthetic piecewise-linear dataset generation and brute-force oracles.

Generated datasets split the first feature axis into contiguous regimes,
each with its own linear model, which keeps the ground truth unambiguous
and the exhaustive partition oracle tractable.  Regime structure depends
only on (seed, k, regimes), so a size sweep with one seed reuses identical
regimes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dataset import Dataset, RowIndexSet
from .rng import make_rng
from .sampling import Hypercube, size_floor

COEFF_RANGE = (-5.0, 5.0)
INTERCEPT_RANGE = (-10.0, 10.0)


@dataclass(frozen=True)
class RegimeSpec:
    """One regime: an axis-aligned region and the linear model that holds on it."""

    region: Hypercube
    coeffs: np.ndarray
    intercept: float

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=np.float64)
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)


@dataclass(frozen=True)
class SynthSpec:
    """Recipe for a piecewise-linear dataset."""

    n_rows: int
    n_features: int
    n_regimes: int
    noise_std: float
    domain: Hypercube | None = None
    seed: int = 0

    def resolved_domain(self) -> Hypercube:
        if self.domain is not None:
            if self.domain.k != self.n_features:
                raise ValueError("domain dimension must match n_features")
            return self.domain
        return Hypercube(lo=np.zeros(self.n_features), hi=np.full(self.n_features, 10.0))

    def validate(self) -> None:
        if self.n_rows < 1:
            raise ValueError("n_rows must be positive")
        if self.n_features < 1:
            raise ValueError("n_features must be positive")
        if self.n_regimes < 1:
            raise ValueError("n_regimes must be positive")
        if self.noise_std < 0.0:
            raise ValueError("noise_std must be nonnegative")
        need = self.n_regimes * size_floor(self.n_features)
        if self.n_rows < need:
            raise ValueError(
                f"n_rows={self.n_rows} too small: {self.n_regimes} regimes need "
                f"at least {need} rows"
            )
        dom = self.resolved_domain()
        if np.any(dom.edges <= 0.0):
            raise ValueError("domain must have positive width in every dimension")


def generate(spec: SynthSpec) -> tuple[Dataset, np.ndarray, list[RegimeSpec]]:
    """Draw a piecewise-linear dataset with ground-truth labels.

    Features are uniform over the domain box.  The first axis is cut into
    `n_regimes` contiguous intervals of random widths, each at least a
    third of the even share, so no regime degenerates into a sliver.  Each
    regime gets independent coefficients in [-5, 5] and an intercept in
    [-10, 10]; the response adds centered Gaussian noise.

    Returns (dataset, per-row regime labels, regime specs).  Deterministic
    under `spec.seed`; row labels always agree with the regime intervals.
    """
    spec.validate()
    dom = spec.resolved_domain()
    k, m = spec.n_features, spec.n_regimes

    struct_rng = make_rng(spec.seed, 10)  # regime geometry: independent of n_rows
    width = float(dom.edges[0])
    min_w = width / (3.0 * m)
    raw = struct_rng.uniform(0.0, 1.0, size=m)
    widths = min_w + raw / raw.sum() * (width - m * min_w)
    boundaries = float(dom.lo[0]) + np.cumsum(widths)[:-1]
    coeffs = struct_rng.uniform(*COEFF_RANGE, size=(m, k))
    intercepts = struct_rng.uniform(*INTERCEPT_RANGE, size=m)

    data_rng = make_rng(spec.seed, 11)
    feats = data_rng.uniform(dom.lo, dom.hi, size=(spec.n_rows, k))
    labels = np.searchsorted(boundaries, feats[:, 0], side="right")
    response = np.einsum("ij,ij->i", feats, coeffs[labels]) + intercepts[labels]
    if spec.noise_std > 0.0:
        response = response + data_rng.normal(0.0, spec.noise_std, size=spec.n_rows)

    edges_axis0 = np.concatenate([[dom.lo[0]], boundaries, [dom.hi[0]]])
    truth = []
    for i in range(m):
        lo = dom.lo.copy()
        hi = dom.hi.copy()
        lo[0], hi[0] = edges_axis0[i], edges_axis0[i + 1]
        truth.append(RegimeSpec(region=Hypercube(lo=lo, hi=hi),
                                coeffs=coeffs[i], intercept=float(intercepts[i])))
    return Dataset.from_arrays(feats, response), labels.astype(np.int64), truth


def truth_to_dict(truth: list[RegimeSpec]) -> list[dict]:
    """JSON-ready form of a regime list (sidecar for generated CSV files)."""
    return [
        {
            "region_lo": [float(v) for v in r.region.lo],
            "region_hi": [float(v) for v in r.region.hi],
            "coeffs": [float(c) for c in r.coeffs],
            "intercept": r.intercept,
        }
        for r in truth
    ]


# ---------------------------------------------------------------------------
# Brute-force oracles
# ---------------------------------------------------------------------------


def oracle_ols_1d(xs, ys) -> tuple[float, float]:
    """Closed-form simple regression (slope, intercept) with compensated sums."""
    xs = [float(v) for v in xs]
    ys = [float(v) for v in ys]
    if len(xs) != len(ys) or len(xs) < 2:
        raise ValueError("need two equal-length sequences of at least 2 points")
    n = len(xs)
    mean_x = math.fsum(xs) / n
    mean_y = math.fsum(ys) / n
    sxx = math.fsum((x - mean_x) ** 2 for x in xs)
    if sxx == 0.0:
        raise ValueError("x values have zero variance")
    sxy = math.fsum((x - mean_x) * (y - mean_y) for x, y in zip(xs, ys))
    slope = sxy / sxx
    return slope, mean_y - slope * mean_x


def _block_sse(ds: Dataset, rows: np.ndarray) -> float:
    """Exact SSE of the best linear fit on `rows`, via numpy lstsq."""
    x = np.column_stack([np.ones(rows.size), ds.features[rows]])
    y = ds.response[rows]
    beta, *_ = np.linalg.lstsq(x, y, rcond=None)
    r = y - x @ beta
    return float(r @ r)


def oracle_best_partition(ds: Dataset, m: int, min_size: int) -> tuple[list[RowIndexSet], float]:
    """Exhaustively find the minimum-SSE partition into at most m blocks.

    Every partition of the row set into at most `m` blocks of at least
    `min_size` rows is considered through a subset-DP over bitmasks, with
    per-subset fits precomputed.  Exponential in n: intended for n <= 14.
    """
    n = ds.n
    if n > 14:
        raise ValueError(f"oracle limited to n <= 14 rows, got {n}")
    if m < 1 or m > 3:
        raise ValueError(f"oracle supports 1 <= m <= 3 blocks, got {m}")
    if min_size < ds.k + 2:
        raise ValueError(f"min_size must be at least k+2={ds.k + 2}")
    if n < min_size:
        raise ValueError("dataset smaller than one block")

    full = (1 << n) - 1
    sse = {}
    for mask in range(1, full + 1):
        if mask.bit_count() >= min_size:
            rows = np.flatnonzero([(mask >> i) & 1 for i in range(n)])
            sse[mask] = _block_sse(ds, rows)

    best: dict[tuple[int, int], float] = {}
    choice: dict[tuple[int, int], int] = {}

    def solve(mask: int, blocks: int) -> float:
        if mask == 0:
            return 0.0
        if blocks == 0:
            return math.inf
        key = (mask, blocks)
        if key in best:
            return best[key]
        low = mask & (-mask)
        value = math.inf
        pick = 0
        # Iterate submasks of `mask` that contain its lowest set bit.
        sub = mask
        while sub:
            if (sub & low) and sub in sse:
                rest = solve(mask ^ sub, blocks - 1)
                total = sse[sub] + rest
                if total < value:
                    value, pick = total, sub
            sub = (sub - 1) & mask
        best[key] = value
        choice[key] = pick
        return value

    top = min(range(1, m + 1), key=lambda b: solve(full, b))
    total = solve(full, top)
    if math.isinf(total):
        raise ValueError("no feasible partition under the size constraints")

    partition = []
    mask, blocks = full, top
    while mask:
        sub = choice[(mask, blocks)]
        partition.append(RowIndexSet.from_any(np.flatnonzero(
            [(sub >> i) & 1 for i in range(n)])))
        mask ^= sub
        blocks -= 1
    return partition, total
