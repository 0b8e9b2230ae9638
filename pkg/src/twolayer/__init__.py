"""Two-layer common/unicast power allocation over parallel OFDMA channels."""
from .allocator import (BuConstraint, PowerAllocation, RateReport, bu_allocate, greedy_channel,
                        optimize_mu0, rates, waterfill)
from .channel_model import (CellScenario, ChannelRealization, NoiseField, OfdmLayout,
                            effective_noise, sample_cell, sample_fading)
from .utility import LagrangeState, RateWeights

__all__ = [
    "BuConstraint", "CellScenario", "ChannelRealization", "LagrangeState", "NoiseField",
    "OfdmLayout", "PowerAllocation", "RateReport", "RateWeights", "bu_allocate",
    "effective_noise", "greedy_channel", "optimize_mu0", "rates", "sample_cell",
    "sample_fading", "waterfill",
]
__version__ = "0.1.0"
