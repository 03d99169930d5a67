"""Structural VAR toolkit for the global crude-oil market.

Decomposes oil-price movements into supply, aggregate-demand, and
oil-specific-demand shocks via a recursively identified VAR, with
bootstrap response bands, historical decompositions, and second-stage
distributed-lag regressions of outside series on the estimated shocks.
"""

from .bootstrap import (
    BandSet,
    BootConfig,
    bands,
    bootstrap_draws,
    mbb_bootstrap,
    wild_bootstrap,
)
from .decomposition import HistoricalDecomposition, historical_decomposition
from .exceptions import OilSvarError
from .identification import (
    OIL_SHOCK_NAMES,
    IrfResult,
    RecursiveSVAR,
    cholesky_lower,
    normalize,
    structural_irf,
    structural_shocks,
)
from .ingest import PanelConfig, SourceSpec, build_panel, build_real_price, fetch
from .stage2 import (
    DistributedLagRegression,
    Stage2Bands,
    Stage2Spec,
    block_bootstrap_bands,
    fit_distributed_lag,
    shocks_to_quarterly,
)
from .timeseries import (
    Month,
    MonthlySeries,
    Panel,
    Quarter,
    QuarterlySeries,
    align,
    demean,
    log_diff,
    quarterly_average,
    seasonal_adjust,
)
from .var import VAR

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "Month",
    "Quarter",
    "MonthlySeries",
    "QuarterlySeries",
    "Panel",
    "log_diff",
    "demean",
    "align",
    "quarterly_average",
    "seasonal_adjust",
    "VAR",
    "RecursiveSVAR",
    "IrfResult",
    "OIL_SHOCK_NAMES",
    "cholesky_lower",
    "normalize",
    "structural_shocks",
    "structural_irf",
    "BootConfig",
    "BandSet",
    "wild_bootstrap",
    "mbb_bootstrap",
    "bootstrap_draws",
    "bands",
    "HistoricalDecomposition",
    "historical_decomposition",
    "Stage2Spec",
    "Stage2Bands",
    "DistributedLagRegression",
    "fit_distributed_lag",
    "block_bootstrap_bands",
    "shocks_to_quarterly",
    "SourceSpec",
    "PanelConfig",
    "fetch",
    "build_real_price",
    "build_panel",
    "OilSvarError",
]
