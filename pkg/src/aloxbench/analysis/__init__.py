from aloxbench.analysis.census import CensusCriteria, SpeciesCensus, species_census
from aloxbench.analysis.density import DensitySlice, density_slice
from aloxbench.analysis.kinetics import KineticsTable, kinetics_series
from aloxbench.analysis.msd import DiffusionResult, MsdCurve, diffusion_fit, msd_compute
from aloxbench.analysis.radial import RadialProfile, radial_profile

__all__ = [
    "CensusCriteria", "DensitySlice", "DiffusionResult", "KineticsTable", "MsdCurve",
    "RadialProfile", "SpeciesCensus", "density_slice", "diffusion_fit", "kinetics_series",
    "msd_compute", "radial_profile", "species_census",
]
