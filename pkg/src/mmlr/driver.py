"""The end-to-end multiple-model regression driver.

One run fits a global model first; when that model is both statistically
significant and adequate against the ambient noise level, it is the whole
answer.  Otherwise the driver iterates: select a hypercube-seeded subset,
fit it, re-select until the fit certifies, then sweep every remaining row
and absorb the ones the model explains within its fit bound.  Remaining
rows at the end become one final residual model.  Each iteration costs
O(N) plus the fixed-size local fit, so the whole run is linear in the
dataset size for a bounded model budget.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .dataset import Dataset, RowIndexSet, subset_view
from .errors import EmptyLive, NoInteriorSeed, SingularDesign, TooFewRows
from .linalg import LinearModel, estimate_noise_variance, ols_fit
from .rng import child_seed
from .sampling import plan_edge_length, plan_sample_size, select_subset, size_floor

# Interior-seed failures retry with a halved edge this many times before
# falling back to an unconstrained seed with a range-clipped cube.
_EDGE_SHRINK_RETRIES = 3


@dataclass(frozen=True)
class MmlrConfig:
    """Knobs for one driver run.

    epsilon/delta are the coefficient error bound and its allowed failure
    probability; max_models caps the number of fitted models and
    min_remaining stops iteration once too few rows are left (default
    2*max(65,3k), so the residual model stays fittable).  p_gate is the
    F-test certification threshold.  adequacy_ratio bounds how far a
    model's residual variance may exceed the ambient noise variance and
    still count as a single adequate model.  sigma_override supplies a
    known noise standard deviation, bypassing estimation.  size_floor
    overrides the max(65,3k) minimum subset size (testing hook only).
    """

    epsilon: float = 0.1
    delta: float = 0.05
    max_models: int = 10
    min_remaining: int | None = None
    p_gate: float = 0.05
    seed: int = 0
    max_resample: int = 50
    sigma_override: float | None = None
    coeff_std_bound: float = 1.0
    adequacy_ratio: float = 3.0
    size_floor: int | None = None

    def validate(self) -> None:
        if self.epsilon <= 0.0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if not 0.0 < self.delta < 1.0:
            raise ValueError(f"delta must be in (0, 1), got {self.delta}")
        if self.max_models < 1:
            raise ValueError("max_models must be at least 1")
        if not 0.0 < self.p_gate < 1.0:
            raise ValueError("p_gate must be in (0, 1)")
        if self.max_resample < 1:
            raise ValueError("max_resample must be at least 1")
        if self.sigma_override is not None and self.sigma_override < 0.0:
            raise ValueError("sigma_override must be nonnegative")
        if self.coeff_std_bound <= 0.0:
            raise ValueError("coeff_std_bound must be positive")
        if self.adequacy_ratio <= 0.0:
            raise ValueError("adequacy_ratio must be positive")
        if self.min_remaining is not None and self.min_remaining < 0:
            raise ValueError("min_remaining must be nonnegative")

    def resolved_min_remaining(self, k: int) -> int:
        if self.min_remaining is not None:
            return self.min_remaining
        return max(2 * size_floor(k, self.size_floor), k + 2)

    def to_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "delta": self.delta,
            "max_models": self.max_models,
            "min_remaining": self.min_remaining,
            "p_gate": self.p_gate,
            "seed": self.seed,
            "max_resample": self.max_resample,
            "sigma_override": self.sigma_override,
            "coeff_std_bound": self.coeff_std_bound,
            "adequacy_ratio": self.adequacy_ratio,
        }


@dataclass(frozen=True)
class ModelEntry:
    """One fitted model with the rows it owns.

    `absorbed` is the subset of `rows` collected during the examine sweep
    (as opposed to the seed sample the model was fitted on); every absorbed
    row satisfies |f(x) - y| <= fit_bound exactly.
    """

    model: LinearModel
    rows: RowIndexSet
    absorbed: RowIndexSet


@dataclass(frozen=True)
class ModelSet:
    """Disjoint row groups covering the dataset, each with its own model."""

    entries: tuple[ModelEntry, ...]
    n_total: int
    config: MmlrConfig | None = None

    @property
    def m(self) -> int:
        return len(self.entries)

    def to_dict(self, include_rows: bool = True, mse: float | None = None) -> dict:
        models = []
        for e in self.entries:
            item = e.model.to_dict()
            if include_rows:
                item["rows"] = [int(i) for i in e.rows.indices]
            models.append(item)
        out = {
            "models": models,
            "config": self.config.to_dict() if self.config is not None else {},
            "stats": {"m": self.m},
        }
        if mse is not None:
            out["stats"]["mse"] = mse
        return out

    def to_json(self, include_rows: bool = True, mse: float | None = None) -> str:
        return json.dumps(self.to_dict(include_rows=include_rows, mse=mse), indent=2)


def validate_partition(ms: ModelSet, ds: Dataset, max_models: int | None = None) -> None:
    """Assert the partition invariants; raises AssertionError on violation."""
    seen = np.zeros(ds.n, dtype=bool)
    for e in ms.entries:
        idx = e.rows.indices
        assert idx.size > 0, "entry owns no rows"
        assert not seen[idx].any(), "row sets are not disjoint"
        seen[idx] = True
    assert seen.all(), "row sets do not cover the dataset"
    assert ms.n_total == ds.n
    if max_models is not None:
        assert ms.m <= max_models, f"m={ms.m} exceeds budget {max_models}"
    for e in ms.entries:
        if len(e.absorbed) == 0:
            continue
        feats = ds.features[e.absorbed.indices]
        resp = ds.response[e.absorbed.indices]
        err = np.abs(e.model.predict(feats) - resp)
        assert np.all(err <= e.model.fit_bound), "absorbed row outside the fit bound"


def _constant_model(ds: Dataset, rows: RowIndexSet) -> LinearModel:
    """Fallback when a residual group is too small or degenerate to fit."""
    y = ds.response[rows.indices]
    mean = float(y.mean())
    sse = float(((y - mean) ** 2).sum())
    return LinearModel.from_stats(np.zeros(ds.k), mean, sse, len(rows), p_f=1.0)


def _fit_rows(ds: Dataset, rows: RowIndexSet) -> LinearModel:
    try:
        return ols_fit(subset_view(ds, rows))
    except (TooFewRows, SingularDesign):
        return _constant_model(ds, rows)


def _select_with_shrink(ds, live_set, sample_size, edge, seed_key):
    """select_subset with the edge-shrink retry chain and boundary fallback."""
    attempt_edge = edge
    for shrink in range(_EDGE_SHRINK_RETRIES):
        try:
            return select_subset(ds, live_set, sample_size, attempt_edge,
                                 rng_seed=child_seed(*seed_key, shrink))
        except NoInteriorSeed:
            attempt_edge /= 2.0
    return select_subset(ds, live_set, sample_size, attempt_edge,
                         rng_seed=child_seed(*seed_key, _EDGE_SHRINK_RETRIES),
                         allow_boundary_seed=True)


def run_mmlr(ds: Dataset, cfg: MmlrConfig) -> ModelSet:
    """Partition `ds` into at most `cfg.max_models` linear models.

    Deterministic: identical (dataset, config) give a bit-identical result.
    """
    cfg.validate()
    floor = size_floor(ds.k, cfg.size_floor)
    if ds.n < max(floor, ds.k + 2):
        raise TooFewRows(
            f"driver needs at least max(floor={floor}, k+2={ds.k + 2}) rows, got {ds.n}"
        )

    all_rows = RowIndexSet(np.arange(ds.n, dtype=np.int64))
    global_model = ols_fit(ds)

    if cfg.sigma_override is not None:
        noise_var = cfg.sigma_override ** 2
    else:
        noise_var = estimate_noise_variance(ds, cfg.seed, size_floor=cfg.size_floor)

    # Gate: one model suffices when it is statistically significant and its
    # residual variance is commensurate with the ambient noise.  The second
    # condition is what distinguishes "one good model" from "a significant
    # trend across several regimes".
    scale = max(float(np.var(ds.response)), 1.0)
    adequate = global_model.sigma_f_sq <= cfg.adequacy_ratio * noise_var + 1e-18 * scale
    if cfg.max_models == 1 or (global_model.p_f < cfg.p_gate and adequate):
        return ModelSet(
            entries=(ModelEntry(global_model, all_rows, RowIndexSet.from_any([])),),
            n_total=ds.n,
            config=cfg,
        )

    sigma = math.sqrt(noise_var)
    sigma_planning = max(sigma, 1e-12 * math.sqrt(scale))  # planner needs sigma > 0
    plan = plan_sample_size(cfg.epsilon, cfg.delta, sigma_planning, ds.k,
                            coeff_std_bound=cfg.coeff_std_bound,
                            floor_override=cfg.size_floor)
    edge = plan_edge_length(cfg.epsilon, cfg.delta, sigma_planning, plan.sample_size)
    edge = min(edge, float(np.min(ds.col_max - ds.col_min)))

    min_remaining = cfg.resolved_min_remaining(ds.k)
    alive = np.ones(ds.n, dtype=bool)
    entries: list[ModelEntry] = []

    while int(alive.sum()) > min_remaining and len(entries) < cfg.max_models - 1:
        live = np.flatnonzero(alive).astype(np.int64)
        live_set = RowIndexSet(live)
        iteration = len(entries)

        chosen_model = None
        chosen_rows = None
        best_model = None
        best_rows = None
        for attempt in range(cfg.max_resample):
            try:
                rows, _cube = _select_with_shrink(
                    ds, live_set, plan.sample_size, edge,
                    (cfg.seed, 1, iteration, attempt))
            except EmptyLive:  # pragma: no cover - loop condition prevents this
                break
            try:
                model = ols_fit(subset_view(ds, rows))
            except (SingularDesign, TooFewRows):
                continue
            certified = (model.p_f < cfg.p_gate and
                         model.sigma_f_sq <= (cfg.adequacy_ratio * noise_var
                                              + 1e-18 * scale))
            if certified:
                chosen_model, chosen_rows = model, rows
                break
            if best_model is None or model.p_f < best_model.p_f:
                best_model, best_rows = model, rows
        if chosen_model is None:
            if best_model is None:
                break  # nothing fittable remains
            chosen_model, chosen_rows = best_model, best_rows  # degrade gracefully

        # Examine sweep: absorb every live row the model explains within its
        # fit bound.  Seed rows stay in the group regardless.
        preds = chosen_model.predict(ds.features[live])
        within = np.abs(preds - ds.response[live]) <= chosen_model.fit_bound
        absorbed = live[within]
        group = np.union1d(absorbed, chosen_rows.indices)
        absorbed_only = np.setdiff1d(absorbed, chosen_rows.indices, assume_unique=True)
        entries.append(ModelEntry(
            model=chosen_model,
            rows=RowIndexSet(group),
            absorbed=RowIndexSet(absorbed_only),
        ))
        alive[group] = False

    leftovers = np.flatnonzero(alive).astype(np.int64)
    if leftovers.size:
        rows = RowIndexSet(leftovers)
        entries.append(ModelEntry(
            model=_fit_rows(ds, rows),
            rows=rows,
            absorbed=RowIndexSet.from_any([]),
        ))

    return ModelSet(entries=tuple(entries), n_total=ds.n, config=cfg)


# ---------------------------------------------------------------------------
# Prediction and training error
# ---------------------------------------------------------------------------


def predict_batch(ms: ModelSet, ds: Dataset, queries: np.ndarray) -> np.ndarray:
    """Predict responses for query rows.

    Each query is routed to the model whose training rows contain its
    nearest neighbor (Euclidean in feature space); distance ties go to the
    lowest model index.
    """
    if ms.m == 0:
        raise ValueError("empty model set")
    q = np.asarray(queries, dtype=np.float64)
    if q.ndim == 1:
        q = q.reshape(1, -1)
    if q.shape[1] != ds.k:
        raise ValueError(f"expected {ds.k} features, got {q.shape[1]}")
    if ms.m == 1:
        return ms.entries[0].model.predict(q)
    dists = np.empty((ms.m, q.shape[0]))
    for i, e in enumerate(ms.entries):
        tree = cKDTree(ds.features[e.rows.indices])
        dists[i], _ = tree.query(q, k=1)
    owner = np.argmin(dists, axis=0)  # argmin takes the first minimum: lowest index wins
    out = np.empty(q.shape[0])
    for i, e in enumerate(ms.entries):
        mask = owner == i
        if mask.any():
            out[mask] = e.model.predict(q[mask])
    return out


def predict(ms: ModelSet, ds: Dataset, x) -> float:
    """Predict the response at a single feature vector."""
    return float(predict_batch(ms, ds, np.asarray(x, dtype=np.float64).reshape(1, -1))[0])


def training_mse(ms: ModelSet, ds: Dataset) -> float:
    """Total squared error of each model on its own rows (un-normalized)."""
    validate_partition(ms, ds)
    total = 0.0
    for e in ms.entries:
        idx = e.rows.indices
        r = ds.response[idx] - e.model.predict(ds.features[idx])
        total += float(r @ r)
    return total
