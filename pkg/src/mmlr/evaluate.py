"""Metrics, baseline comparison, scaling benchmark, and report emission.

Reports compare the multi-model fit against the single ordinary
least-squares baseline on a held-out split by default; a train-error mode
exists for reproducing in-sample numbers.  The scaling benchmark times
whole driver runs over a size sweep with identical regime structure and
fits the log-log slope.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, replace as dc_replace

import numpy as np

from .dataset import Dataset, RowIndexSet, subset_view
from .driver import MmlrConfig, predict_batch, run_mmlr
from .linalg import ols_fit
from .rng import make_rng, sample_without_replacement
from .synth import SynthSpec, generate, oracle_ols_1d


def rmse_mae(predictions, truths) -> tuple[float, float]:
    """Root mean squared error and mean absolute error of paired vectors."""
    p = np.asarray(predictions, dtype=np.float64).ravel()
    t = np.asarray(truths, dtype=np.float64).ravel()
    if p.size == 0:
        raise ValueError("empty input")
    if p.size != t.size:
        raise ValueError(f"length mismatch: {p.size} predictions vs {t.size} truths")
    err = p - t
    return float(np.sqrt(np.mean(err * err))), float(np.mean(np.abs(err)))


@dataclass(frozen=True)
class EvalReport:
    """One method's scores on one dataset."""

    method: str
    dataset: str
    rmse: float
    mae: float
    wall_time_s: float
    m_models: int
    seed: int

    def stable_fields(self) -> tuple:
        """Everything except the timing, for byte-stability comparisons."""
        return (self.method, self.dataset, self.rmse, self.mae, self.m_models, self.seed)

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "dataset": self.dataset,
            "rmse": self.rmse,
            "mae": self.mae,
            "wall_time_s": self.wall_time_s,
            "m_models": self.m_models,
            "seed": self.seed,
        }


REPORT_CSV_HEADER = "method,dataset,rmse,mae,wall_time_s,m_models,seed"


def reports_to_csv(reports: list[EvalReport]) -> str:
    lines = [REPORT_CSV_HEADER]
    for r in reports:
        lines.append(f"{r.method},{r.dataset},{r.rmse:.17g},{r.mae:.17g},"
                     f"{r.wall_time_s:.6f},{r.m_models},{r.seed}")
    return "\n".join(lines) + "\n"


def plot_data_csv(reports: list[EvalReport]) -> str:
    """Long-format plot-ready CSV: one (method, dataset, metric, value) row each."""
    lines = ["method,dataset,metric,value"]
    for r in reports:
        lines.append(f"{r.method},{r.dataset},rmse,{r.rmse:.17g}")
        lines.append(f"{r.method},{r.dataset},mae,{r.mae:.17g}")
        lines.append(f"{r.method},{r.dataset},time_s,{r.wall_time_s:.6f}")
    return "\n".join(lines) + "\n"


def train_test_split(n: int, holdout_fraction: float, seed: int) -> tuple[RowIndexSet, RowIndexSet]:
    """Seeded shuffle split into (train, test) index sets."""
    if not 0.0 < holdout_fraction <= 0.5:
        raise ValueError(f"holdout_fraction must be in (0, 0.5], got {holdout_fraction}")
    n_test = max(int(round(n * holdout_fraction)), 1)
    rng = make_rng(seed, 30)
    order = sample_without_replacement(rng, np.arange(n, dtype=np.int64), n)
    return (RowIndexSet.from_any(order[n_test:]),
            RowIndexSet.from_any(order[:n_test]))


def compare_methods(ds: Dataset, cfg: MmlrConfig, holdout_fraction: float = 0.2,
                    seed: int = 0, dataset_name: str = "dataset",
                    train_rmse: bool = False) -> list[EvalReport]:
    """Fit the multi-model driver and the single-model baseline, score both.

    Rows are split by a seeded shuffle; both methods fit the train split
    and are scored on the test split (or on the train split itself when
    `train_rmse` is set).  Wall time covers model construction only.
    """
    train_rows, test_rows = train_test_split(ds.n, holdout_fraction, seed)
    train = subset_view(ds, train_rows)
    if train.n < ds.k + 2:
        raise ValueError("train split too small to fit")
    eval_ds = train if train_rmse else subset_view(ds, test_rows)

    start = time.perf_counter()
    model_set = run_mmlr(train, cfg)
    mmlr_time = time.perf_counter() - start
    mmlr_pred = predict_batch(model_set, train, eval_ds.features)
    mmlr_rmse, mmlr_mae = rmse_mae(mmlr_pred, eval_ds.response)

    start = time.perf_counter()
    baseline = ols_fit(train)
    lr_time = time.perf_counter() - start
    lr_pred = baseline.predict(eval_ds.features)
    lr_rmse, lr_mae = rmse_mae(lr_pred, eval_ds.response)

    return [
        EvalReport("mmlr", dataset_name, mmlr_rmse, mmlr_mae, mmlr_time,
                   model_set.m, seed),
        EvalReport("lr", dataset_name, lr_rmse, lr_mae, lr_time, 1, seed),
    ]


@dataclass(frozen=True)
class ScalingResult:
    """Timing sweep over dataset sizes plus the fitted log-log slope."""

    sizes: tuple[int, ...]
    times_s: tuple[float, ...]
    slope: float | None

    def rows(self) -> list[tuple[int, float]]:
        return list(zip(self.sizes, self.times_s))

    def to_csv(self) -> str:
        lines = ["n,wall_time_s"]
        for n, t in self.rows():
            lines.append(f"{n},{t:.6f}")
        return "\n".join(lines) + "\n"


def scaling_benchmark(spec_base: SynthSpec, sizes: list[int], cfg: MmlrConfig) -> ScalingResult:
    """Time whole driver runs over a size sweep with identical regimes.

    Sizes must be ascending.  Generation is excluded from the timings; the
    slope of log(time) against log(n) is fitted by simple regression and
    reported as None for a single size.
    """
    if not sizes:
        raise ValueError("need at least one size")
    if any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise ValueError("sizes must be strictly ascending")
    times = []
    for n in sizes:
        spec = dc_replace(spec_base, n_rows=int(n))
        ds, _labels, _truth = generate(spec)
        start = time.perf_counter()
        run_mmlr(ds, cfg)
        times.append(time.perf_counter() - start)
    slope = None
    if len(sizes) > 1:
        slope, _ = oracle_ols_1d(np.log(np.asarray(sizes, dtype=float)),
                                 np.log(np.asarray(times)))
    return ScalingResult(sizes=tuple(int(n) for n in sizes),
                         times_s=tuple(times), slope=slope)
