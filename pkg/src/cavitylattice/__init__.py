"""Cavity-mediated extended Bose-Hubbard models: assembly, Zeno projection and simulation."""

__version__ = "0.1.0"

from .errors import CavityLatticeError  # noqa: E402,F401
from .fock import FockBasis, build_basis  # noqa: E402,F401
from .ops import SparseOperator  # noqa: E402,F401
