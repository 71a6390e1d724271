"""Finite-dimensional and large-antenna performance of MIMO linear receivers.

Subpackages:
  channel      reproducible i.i.d. Rayleigh channel sampling
  receivers    exact per-realization ZF/MMSE/optimal SINRs and rates
  montecarlo   reproducible parallel outage / moment estimation
  asymptotics  closed-form large-N means, variances and Gaussian outage
  dmt          diversity-multiplexing tradeoff and finite-rate predictions
  cli          experiment runner (``linmimo`` console script)
"""

__version__ = "0.1.0"

from .channel import ChannelSample, RngStream, SystemDims, sample_channel
from .receivers import SinrVector, SnrPoint

__all__ = [
    "ChannelSample",
    "RngStream",
    "SinrVector",
    "SnrPoint",
    "SystemDims",
    "sample_channel",
    "__version__",
]
