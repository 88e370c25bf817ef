"""Workspace layout and checkpoint I/O.

::

    config/run.json  config/oracle.json  config/scenes.json
    dataset/         models/iter-K/committee.json
    reports/iter-K.report   state   decisions.log
    benchmark/       (optional fixed labeled test set)
    work/iter-K/     (phase outputs used for crash recovery)
    cache/           (fingerprints and normal-equation blocks; safe to delete)
"""

from __future__ import annotations

import json
import threading
from pathlib import Path

import numpy as np
from filelock import FileLock

from aloxbench.dataset import Dataset, atomic_write_text, frame_from_dict, frame_to_dict
from aloxbench.errors import DataError, MigrationError, NotFoundError, StateError
from aloxbench.loop.config import RunConfig
from aloxbench.loop.report import IterationReport, dumps_document, loads_document, report_document
from aloxbench.loop.state import LoopState
from aloxbench.oracle import PairPotential, PairPotentialParams, default_params

_LOCKS: dict[str, threading.RLock] = {}
_LOCKS_GUARD = threading.Lock()


def _thread_lock(path: Path) -> threading.RLock:
    with _LOCKS_GUARD:
        return _LOCKS.setdefault(str(path.resolve()), threading.RLock())


class _Lock:
    """Thread lock plus file lock, so decisions serialize across threads and processes."""

    def __init__(self, root: Path):
        self._t = _thread_lock(root)
        self._f = FileLock(str(root / ".lock"))

    def __enter__(self):
        self._t.acquire()
        self._f.acquire()
        return self

    def __exit__(self, *exc):
        self._f.release()
        self._t.release()


class Workspace:
    def __init__(self, root):
        self.root = Path(root)
        if not (self.root / "state").exists():
            raise NotFoundError(f"no loop workspace at {self.root} (missing state file)")
        self.lock = _Lock(self.root)

    # creation ---------------------------------------------------------------

    @classmethod
    def create(cls, root, config: RunConfig, oracle_params: PairPotentialParams | None = None,
               dataset: Dataset | None = None, benchmark: Dataset | None = None,
               scenes=None) -> Workspace:
        root = Path(root)
        if (root / "state").exists():
            raise StateError(f"workspace {root} already initialised")
        for sub in ("config", "dataset", "models", "reports", "work", "cache"):
            (root / sub).mkdir(parents=True, exist_ok=True)
        config.save(root / "config" / "run.json")
        params = oracle_params or (PairPotentialParams.load(config.oracle_params) if config.oracle_params
                                   else default_params())
        params.save(root / "config" / "oracle.json")
        (dataset or Dataset()).save(root / "dataset")
        if benchmark is not None:
            benchmark.save(root / "benchmark")
        if scenes is not None:
            save_frames(root / "config" / "scenes.json", scenes)
        atomic_write_text(root / "decisions.log", "")
        atomic_write_text(root / "state", json.dumps(LoopState().to_dict(), indent=1, sort_keys=True) + "\n")
        return cls(root)

    # paths ------------------------------------------------------------------

    def model_path(self, k: int) -> Path:
        return self.root / "models" / f"iter-{k}" / "committee.json"

    def report_path(self, k: int) -> Path:
        return self.root / "reports" / f"iter-{k}.report"

    def work_dir(self, k: int) -> Path:
        return self.root / "work" / f"iter-{k}"

    # configs ----------------------------------------------------------------

    def config(self) -> RunConfig:
        return RunConfig.load(self.root / "config" / "run.json")

    def oracle(self) -> PairPotential:
        return PairPotential(PairPotentialParams.load(self.root / "config" / "oracle.json"))

    def scenes(self):
        path = self.root / "config" / "scenes.json"
        return load_frames(path) if path.exists() else None

    def save_scenes(self, frames) -> None:
        save_frames(self.root / "config" / "scenes.json", frames)

    # state ------------------------------------------------------------------

    def load_state(self) -> LoopState:
        try:
            d = json.loads((self.root / "state").read_text())
        except json.JSONDecodeError as exc:
            raise MigrationError(f"unreadable state file: {exc}") from None
        state = LoopState.from_dict(d)
        self.verify(state)
        return state

    def save_state(self, state: LoopState) -> None:
        atomic_write_text(self.root / "state", json.dumps(state.to_dict(), indent=1, sort_keys=True) + "\n")

    def verify(self, state: LoopState) -> None:
        """Every artifact the state refers to must exist."""
        for k in range(1, state.iteration + 1):
            trained = k < state.iteration or "Training" in state.completed
            if trained and not self.model_path(k).exists():
                raise DataError(f"missing model checkpoint {self.model_path(k)}")
            reported = k < state.iteration or state.phase in ("AwaitingDecision", "Deployed", "Aborted")
            if reported and not self.report_path(k).exists():
                raise DataError(f"missing report {self.report_path(k)}")

    def append_decision(self, entry: dict) -> None:
        with open(self.root / "decisions.log", "a") as fh:
            fh.write(json.dumps(entry, sort_keys=True) + "\n")

    # data -------------------------------------------------------------------

    def dataset(self) -> Dataset:
        return Dataset.load(self.root / "dataset")

    def benchmark(self) -> Dataset | None:
        path = self.root / "benchmark"
        return Dataset.load(path) if (path / "manifest.json").exists() else None

    # reports ----------------------------------------------------------------

    def iterations(self) -> list[int]:
        ks = []
        for p in (self.root / "reports").glob("iter-*.report"):
            try:
                ks.append(int(p.stem.split("-", 1)[1]))
            except ValueError:
                continue
        return sorted(ks)

    def write_report(self, report: IterationReport, status: dict) -> None:
        atomic_write_text(self.report_path(report.iteration), dumps_document(report_document(report, status)))

    def read_report(self, k: int) -> tuple[IterationReport, dict]:
        path = self.report_path(k)
        if not path.exists():
            raise NotFoundError(f"no report for iteration {k}")
        return loads_document(path.read_text())

    # cache ------------------------------------------------------------------

    def cached_array(self, name: str, key: str) -> np.ndarray | None:
        path = self.root / "cache" / f"{name}.npy"
        kpath = self.root / "cache" / f"{name}.key"
        if path.exists() and kpath.exists() and kpath.read_text() == key:
            try:
                return np.load(path)
            except (OSError, ValueError):
                return None
        return None

    def store_array(self, name: str, key: str, arr: np.ndarray) -> None:
        path = self.root / "cache" / f"{name}.npy"
        tmp = path.with_suffix(".tmp.npy")
        np.save(tmp, arr)
        tmp.replace(path)
        atomic_write_text(self.root / "cache" / f"{name}.key", key)



def save_frames(path, frames) -> None:
    atomic_write_text(Path(path), json.dumps([frame_to_dict(f) for f in frames], sort_keys=True) + "\n")


def load_frames(path):
    try:
        return [frame_from_dict(d) for d in json.loads(Path(path).read_text())]
    except (json.JSONDecodeError, KeyError, ValueError) as exc:
        raise DataError(f"corrupt frame file {path}: {exc}") from None
