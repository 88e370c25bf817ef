from aloxbench.loop.config import LoopConfig, RunConfig, SeedProtocol, SeedSpec
from aloxbench.loop.controller import LoopController, gate_decision, run_iteration
from aloxbench.loop.report import IterationReport, loads_document, strip_wall_times
from aloxbench.loop.seed import seed_dataset, seed_structure
from aloxbench.loop.setup import benchmark_dataset, init_workspace, toy_run_config
from aloxbench.loop.state import LoopState, classify_frames, replay_phases
from aloxbench.loop.workspace import Workspace

__all__ = [
    "IterationReport", "LoopConfig", "LoopController", "LoopState", "RunConfig", "SeedProtocol",
    "SeedSpec", "Workspace", "benchmark_dataset", "init_workspace", "toy_run_config", "classify_frames", "gate_decision", "loads_document", "replay_phases",
    "run_iteration", "seed_dataset", "seed_structure", "strip_wall_times",
]
