from aloxbench.dynamics.explore import ExploreProtocol, ExploreResult, explore
from aloxbench.dynamics.md import MdConfig, maxwell_boltzmann, md_run
from aloxbench.dynamics.replenish import ReplenishPolicy, oxidation_run, replenish_oxygen
from aloxbench.dynamics.scene import SceneSpec, build_scene
from aloxbench.dynamics.tfmc import TfmcConfig, sample_xi, tfmc_run
from aloxbench.dynamics.trajectory import Trajectory

__all__ = [
    "ExploreProtocol", "ExploreResult", "MdConfig", "ReplenishPolicy", "SceneSpec", "TfmcConfig",
    "Trajectory", "build_scene", "explore", "maxwell_boltzmann", "md_run", "oxidation_run",
    "replenish_oxygen", "sample_xi", "tfmc_run",
]
