"""Trajectory container and its on-disk form (dataset layout minus labels)."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from aloxbench.dataset import FORMAT_VERSION, atomic_write_text, frame_from_dict, frame_to_dict
from aloxbench.errors import DataError
from aloxbench.structure import Frame
from aloxbench.units import UNITS


@dataclass(eq=False)
class Trajectory:
    frames: list[Frame] = field(default_factory=list)
    temperatures: list[float] = field(default_factory=list)
    energies: list[float] = field(default_factory=list)
    provenance: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.frames)

    def __iter__(self):
        return iter(self.frames)

    def __getitem__(self, k):
        return self.frames[k]

    @property
    def times(self) -> np.ndarray:
        return np.array([f.time for f in self.frames])

    def check(self) -> None:
        t = self.times
        if len(t) > 1 and not np.all(np.diff(t) > 0):
            raise DataError("trajectory time stamps must be strictly increasing")

    def save(self, path, shard_size: int = 1000) -> None:
        path = Path(path)
        path.mkdir(parents=True, exist_ok=True)
        shards = []
        for k, lo in enumerate(range(0, len(self.frames), shard_size)):
            chunk = self.frames[lo:lo + shard_size]
            name = f"shard-{k:05d}.jsonl"
            lines = [json.dumps({"format": "aloxbench-trajectory-shard", "version": FORMAT_VERSION,
                                 "count": len(chunk)})]
            lines += [json.dumps(frame_to_dict(f), sort_keys=True) for f in chunk]
            atomic_write_text(path / name, "\n".join(lines) + "\n")
            shards.append({"file": name, "count": len(chunk)})
        manifest = {
            "format": "aloxbench-trajectory",
            "version": FORMAT_VERSION,
            "units": UNITS.header(),
            "n_frames": len(self.frames),
            "temperatures": self.temperatures,
            "energies": self.energies,
            "provenance": self.provenance,
            "shards": shards,
        }
        atomic_write_text(path / "manifest.json", json.dumps(manifest, indent=1, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path) -> Trajectory:
        path = Path(path)
        manifest = json.loads((path / "manifest.json").read_text())
        frames = []
        for entry in manifest["shards"]:
            lines = (path / entry["file"]).read_text().splitlines()
            for k, line in enumerate(lines[1:]):
                try:
                    frames.append(frame_from_dict(json.loads(line)))
                except (json.JSONDecodeError, KeyError, ValueError) as exc:
                    raise DataError(f"corrupt shard {entry['file']}: record {k}: {exc}") from None
        return cls(frames, manifest.get("temperatures", []), manifest.get("energies", []),
                   manifest.get("provenance", {}))
