"""Historical decomposition of each variable into per-shock contributions.

Each observation after the pre-sample window is split as

    observed[t] = baseline[t] + sum_j contribution[t, j]

where the contribution of shock ``j`` is the truncated moving-average
convolution ``sum_{h<=t} theta_h[i, j] * shock_j[t - h]`` and the baseline
absorbs the rest (intercept plus initial-condition decay). The identity is
exact by construction; the interesting content is how the shocks divide up
the movements around the baseline.

Contributions use non-cumulated response matrices so the identity holds in
the model's own units; cumulate for display only.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .exceptions import UnstableModelError
from .identification import RecursiveSVAR, structural_irf
from .timeseries import Month, MonthlySeries
from .var import ma_coefficients

__all__ = ["HistoricalDecomposition", "historical_decomposition"]


@dataclass(frozen=True)
class HistoricalDecomposition:
    """Per-shock contribution paths plus the additive baseline.

    ``contributions[t, i, j]`` is the cumulative effect of all past
    realizations of shock ``j`` on variable ``i`` at sample position ``t``
    (t = 0 is the first post-lag month). ``baseline + contributions.sum``
    reproduces ``observed`` exactly.
    """

    contributions: np.ndarray               # (n, K, K)
    baseline: np.ndarray                    # (n, K)
    observed: np.ndarray                    # (n, K)
    variables: tuple[str, ...]
    shocks: tuple[str, ...]
    start: Month | None = None

    def __post_init__(self) -> None:
        for name in ("contributions", "baseline", "observed"):
            arr = np.asarray(getattr(self, name), dtype=float).copy()
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.contributions.shape != (
            self.observed.shape[0], len(self.variables), len(self.shocks)
        ):
            raise ValueError("contribution array shape mismatch")
        if self.baseline.shape != self.observed.shape:
            raise ValueError("baseline shape mismatch")

    def reconstruction_error(self) -> float:
        total = self.baseline + self.contributions.sum(axis=2)
        return float(np.abs(total - self.observed).max())

    def contribution_series(self, variable: str, shock: str) -> MonthlySeries:
        if self.start is None:
            raise ValueError("no calendar: model was fitted on a bare array")
        i = self.variables.index(variable)
        j = self.shocks.index(shock)
        return MonthlySeries(f"{variable}<-{shock}", self.start,
                             self.contributions[:, i, j])

    def months(self) -> list[Month]:
        if self.start is None:
            raise ValueError("no calendar: model was fitted on a bare array")
        return [self.start + t for t in range(self.observed.shape[0])]

    def to_csv(self, contributions_path, baseline_path) -> None:
        """Write ``date,variable,shock,contribution`` and
        ``date,variable,baseline`` files."""
        months = [str(m) for m in self.months()]
        with open(contributions_path, "w", encoding="utf-8", newline="\n") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["date", "variable", "shock", "contribution"])
            for t, stamp in enumerate(months):
                for i, variable in enumerate(self.variables):
                    for j, shock in enumerate(self.shocks):
                        writer.writerow([
                            stamp, variable, shock,
                            repr(float(self.contributions[t, i, j])),
                        ])
        with open(baseline_path, "w", encoding="utf-8", newline="\n") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["date", "variable", "baseline"])
            for t, stamp in enumerate(months):
                for i, variable in enumerate(self.variables):
                    writer.writerow([
                        stamp, variable,
                        repr(float(self.baseline[t, i])),
                    ])


def historical_decomposition(model: RecursiveSVAR) -> HistoricalDecomposition:
    """Decompose the fitted sample into per-shock contribution paths.

    Raises
    ------
    UnstableModelError
        If the companion matrix has a root at or outside the unit circle;
        the moving-average weights would not decay and the attribution
        would be meaningless.
    """
    model._check_fitted()
    if not model.is_stable():
        raise UnstableModelError(
            f"companion spectral radius {model.var_.spectral_radius():.6f} "
            f"is not inside the unit circle"
        )
    var = model.var_
    shocks = model.shocks_
    n, k = shocks.shape
    theta = structural_irf(ma_coefficients(var.coef_, n - 1), model.b0inv_)
    contributions = np.empty((n, k, k))
    for i in range(k):
        for j in range(k):
            contributions[:, i, j] = np.convolve(
                shocks[:, j], theta[:, i, j]
            )[:n]
    observed = model.sample_[int(var.lags):]
    baseline = observed - contributions.sum(axis=2)
    return HistoricalDecomposition(
        contributions, baseline, observed,
        model.var_names_, model.shock_names_,
        start=model.shock_start_,
    )
