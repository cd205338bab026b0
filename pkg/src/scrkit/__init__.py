"""Modelling toolkit for symmetrically coupled resonators (SCRs) and trapped electrons.

Submodules
----------
circuit     two-node lumped circuit and its normal modes
electrons   electrons in the dot, coupled spectrum, dispersive shift
materials   film sheet inductance and meander scaling
resonance   hanger S21 model and fitting
verify      capacitance-discount fit against reference frequencies
io, cli     file formats, run records, command line
"""

__version__ = "0.1.0"

from .circuit import CircuitDesign, build_matrices, eigenmodes  # noqa: E402
from .errors import ScrError  # noqa: E402

__all__ = ["CircuitDesign", "ScrError", "__version__", "build_matrices", "eigenmodes"]
