"""Loop phases, persistent loop state and the frame classifier."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from aloxbench.errors import ConfigError, MigrationError, StateError

STATE_VERSION = 1

IDLE = "Idle"
TRAINING = "Training"
EXPLORING = "Exploring"
SELECTING = "Selecting"
LABELING = "Labeling"
CURATING = "Curating"
AWAITING = "AwaitingDecision"
DEPLOYED = "Deployed"
ABORTED = "Aborted"

WORK_PHASES = (TRAINING, EXPLORING, SELECTING, LABELING, CURATING)
PHASES = (IDLE, *WORK_PHASES, AWAITING, DEPLOYED, ABORTED)
ACTIONS = ("approve", "refine", "abort")

# legal successor phases
TRANSITIONS = {
    IDLE: {TRAINING},
    TRAINING: {EXPLORING},
    EXPLORING: {SELECTING},
    SELECTING: {LABELING},
    LABELING: {CURATING},
    CURATING: {AWAITING},
    AWAITING: {IDLE, DEPLOYED, ABORTED},
    DEPLOYED: set(),
    ABORTED: set(),
}

ACCURATE, CANDIDATE, FAILED = "accurate", "candidate", "failed"


def classify_frames(epsilon_f, eps_lo: float, eps_hi: float) -> list[str]:
    """``< eps_lo`` accurate, ``[eps_lo, eps_hi]`` candidate, ``> eps_hi`` failed."""
    if not 0 < eps_lo < eps_hi:
        raise ConfigError("need 0 < eps_lo < eps_hi")
    eps = np.asarray(epsilon_f, dtype=float).reshape(-1)
    out = np.where(eps < eps_lo, ACCURATE, np.where(eps <= eps_hi, CANDIDATE, FAILED))
    return out.tolist()


@dataclass
class LoopState:
    phase: str = IDLE
    iteration: int = 0  # last iteration started; 0 before the first
    completed: list[str] = field(default_factory=list)  # work phases finished in this iteration
    converged: bool = False
    decisions: list[dict] = field(default_factory=list)
    phase_log: list[dict] = field(default_factory=list)
    last_error: str | None = None

    def transition(self, phase: str) -> None:
        if phase not in TRANSITIONS[self.phase]:
            raise StateError(f"illegal transition {self.phase} -> {phase}")
        self.phase = phase
        self.phase_log.append({"iteration": self.iteration, "phase": phase})

    def decision_for(self, iteration: int) -> dict | None:
        for d in self.decisions:
            if d["iteration"] == iteration and d["effective"]:
                return d
        return None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["version"] = STATE_VERSION
        d["format"] = "aloxbench-loop-state"
        return d

    @classmethod
    def from_dict(cls, d: dict) -> LoopState:
        if d.get("format") != "aloxbench-loop-state":
            raise MigrationError("not a loop state document")
        if d.get("version") != STATE_VERSION:
            raise MigrationError(
                f"loop state version {d.get('version')} cannot be read by version {STATE_VERSION}; "
                "migrate the workspace"
            )
        d = {k: v for k, v in d.items() if k not in ("version", "format")}
        if d.get("phase") not in PHASES:
            raise MigrationError(f"unknown phase {d.get('phase')!r}")
        return cls(**d)


def replay_phases(phase_log: list[dict]) -> list[str]:
    """Phase sequence reconstructed from the log, checking every step is legal."""
    phase = IDLE
    seq = [phase]
    for entry in phase_log:
        if entry["phase"] not in TRANSITIONS[phase]:
            raise StateError(f"log holds illegal transition {phase} -> {entry['phase']}")
        phase = entry["phase"]
        seq.append(phase)
    return seq
