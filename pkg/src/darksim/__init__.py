"""Two-spin singlet / dark-state dynamics simulator.

Simulates a coupled pair of spin-1/2 nuclei under shaped two-tone RF
irradiation with Lindblad relaxation and Ornstein-Uhlenbeck field noise,
and designs RF-inhomogeneity-robust two-tone pulses by derivative-free
search.  See the ``harness`` module and the ``darksim`` CLI for the
ready-made experiment scenarios.
"""

__version__ = "0.1.0"

from .spinsys import SpinParams  # noqa: F401
from .kernels import BACKEND  # noqa: F401
