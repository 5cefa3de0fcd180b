"""Prior-free competitive auctions: benchmarks, truthful mechanisms, online
sampling, closed-form ratios and the suites that check them."""

from .core import (
    AuctionOutcome,
    BidProfile,
    DownwardClosed,
    EstimateWithCI,
    MultiUnit,
    RandomSource,
    UnlimitedSupply,
    dominates,
    rng_for,
    sorted_view,
    validate_environment,
)

__version__ = "0.1.0"

__all__ = [
    "AuctionOutcome",
    "BidProfile",
    "DownwardClosed",
    "EstimateWithCI",
    "MultiUnit",
    "RandomSource",
    "UnlimitedSupply",
    "dominates",
    "rng_for",
    "sorted_view",
    "validate_environment",
]
