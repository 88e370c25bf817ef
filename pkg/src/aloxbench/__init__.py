"""Desk-scale active-learning workbench for Al/O interatomic potentials."""

from aloxbench.structure import Frame, LabeledFrame, Species, Structure
from aloxbench.units import UNITS

__version__ = "0.1.0"

__all__ = ["Frame", "LabeledFrame", "Species", "Structure", "UNITS", "__version__"]
