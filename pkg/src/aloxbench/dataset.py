"""Append-only sharded dataset of labeled frames, plus a plain xyz exchange format.

On disk a dataset is a directory holding ``manifest.json`` and numbered
``shard-NNNNN.jsonl`` files. Each shard starts with a header line and then holds
one labeled frame per line. Floats go through ``repr`` so reads are bit-exact.
Files are written to a temporary name and renamed into place.
"""

from __future__ import annotations

import hashlib
import json
import os
from collections import Counter
from pathlib import Path

import numpy as np

from aloxbench.errors import DataError
from aloxbench.structure import SPECIES, SYMBOL_TO_ID, Frame, LabeledFrame, Structure
from aloxbench.units import UNITS

FORMAT_VERSION = 1
DEFAULT_SHARD_SIZE = 1000


def atomic_write_text(path: Path, text: str) -> None:
    path = Path(path)
    tmp = path.with_name(f".{path.name}.tmp")
    with open(tmp, "w") as fh:
        fh.write(text)
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(tmp, path)


def structure_to_dict(s: Structure) -> dict:
    return {
        "cell": s.cell.tolist(),
        "pbc": list(s.pbc),
        "species": [SPECIES[k].symbol for k in s.species_ids],
        "positions": s.positions.tolist(),
    }


def structure_from_dict(d: dict) -> Structure:
    ids = [SYMBOL_TO_ID[x] for x in d["species"]]
    return Structure(np.array(d["cell"]), ids, np.array(d["positions"]).reshape(-1, 3), tuple(d["pbc"]))


def frame_to_dict(f: Frame) -> dict:
    out = structure_to_dict(f.structure)
    out["time"] = float(f.time)
    out["tag"] = f.tag
    if f.velocities is not None:
        out["velocities"] = f.velocities.tolist()
    if f.annotations:
        out["annotations"] = f.annotations
    return out


def frame_from_dict(d: dict) -> Frame:
    vel = d.get("velocities")
    return Frame(
        structure_from_dict(d),
        None if vel is None else np.array(vel).reshape(-1, 3),
        float(d.get("time", 0.0)),
        d.get("tag", ""),
        dict(d.get("annotations", {})),
    )


def labeled_to_dict(lf: LabeledFrame) -> dict:
    out = frame_to_dict(lf.frame)
    out["energy"] = lf.energy
    out["forces"] = lf.forces.tolist()
    return out


def labeled_from_dict(d: dict) -> LabeledFrame:
    return LabeledFrame(frame_from_dict(d), d["energy"], np.array(d["forces"]).reshape(-1, 3))


def tag_group(tag: str) -> str:
    return tag.split("/", 1)[0] if tag else ""


class Dataset:
    """Ordered, append-only collection of labeled frames.

    ``log`` records every append as ``{"count", "note"}``; the manifest tag
    counts are keyed by the first ``/``-separated component of each tag.
    """

    def __init__(self, frames=(), log=None, shard_size: int = DEFAULT_SHARD_SIZE):
        if shard_size < 1:
            raise DataError("shard_size must be >= 1")
        self._frames: list[LabeledFrame] = list(frames)
        self.log: list[dict] = list(log) if log is not None else []
        self.shard_size = int(shard_size)

    def __len__(self) -> int:
        return len(self._frames)

    def __iter__(self):
        return iter(self._frames)

    def __getitem__(self, k):
        return self._frames[k]

    @property
    def frames(self) -> tuple[LabeledFrame, ...]:
        return tuple(self._frames)

    def append(self, frames, note: str = "") -> int:
        frames = list(frames)
        self._frames.extend(frames)
        self.log.append({"count": len(frames), "note": note})
        return len(frames)

    def tag_counts(self) -> dict[str, int]:
        return dict(sorted(Counter(tag_group(f.tag) for f in self._frames).items()))

    def manifest(self) -> dict:
        shards = []
        for k, chunk in enumerate(self._chunks()):
            shards.append({"file": f"shard-{k:05d}.jsonl", "count": len(chunk)})
        return {
            "format": "aloxbench-dataset",
            "version": FORMAT_VERSION,
            "units": UNITS.header(),
            "n_frames": len(self._frames),
            "shard_size": self.shard_size,
            "tag_counts": self.tag_counts(),
            "shards": shards,
            "log": self.log,
        }

    def _chunks(self):
        for lo in range(0, len(self._frames), self.shard_size):
            yield self._frames[lo:lo + self.shard_size]

    def digest(self) -> str:
        h = hashlib.sha256()
        for lf in self._frames:
            h.update(json.dumps(labeled_to_dict(lf), sort_keys=True).encode())
        return h.hexdigest()

    # persistence --------------------------------------------------------

    def save(self, path) -> None:
        path = Path(path)
        path.mkdir(parents=True, exist_ok=True)
        manifest = self.manifest()
        for entry, chunk in zip(manifest["shards"], self._chunks()):
            lines = [json.dumps({"format": "aloxbench-shard", "version": FORMAT_VERSION,
                                 "units": UNITS.header(), "count": len(chunk)})]
            lines += [json.dumps(labeled_to_dict(lf), sort_keys=True) for lf in chunk]
            text = "\n".join(lines) + "\n"
            entry["sha256"] = hashlib.sha256(text.encode()).hexdigest()
            target = path / entry["file"]
            if target.exists() and hashlib.sha256(target.read_bytes()).hexdigest() == entry["sha256"]:
                continue
            atomic_write_text(target, text)
        atomic_write_text(path / "manifest.json", json.dumps(manifest, indent=1, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path) -> Dataset:
        path = Path(path)
        mpath = path / "manifest.json"
        try:
            manifest = json.loads(mpath.read_text())
        except FileNotFoundError:
            raise DataError(f"no dataset manifest at {mpath}") from None
        except json.JSONDecodeError as exc:
            raise DataError(f"corrupt manifest {mpath}: {exc}") from None
        if manifest.get("version") != FORMAT_VERSION:
            raise DataError(f"unsupported dataset version {manifest.get('version')}")
        frames: list[LabeledFrame] = []
        for entry in manifest["shards"]:
            frames.extend(_read_shard(path / entry["file"], entry))
        if len(frames) != manifest["n_frames"]:
            raise DataError(f"manifest lists {manifest['n_frames']} frames, shards hold {len(frames)}")
        return cls(frames, manifest.get("log", []), manifest.get("shard_size", DEFAULT_SHARD_SIZE))


def _read_shard(path: Path, entry: dict) -> list[LabeledFrame]:
    name = path.name
    try:
        raw = path.read_bytes()
    except FileNotFoundError:
        raise DataError(f"missing shard {name}") from None
    lines = raw.decode().split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    try:
        header = json.loads(lines[0])
    except (IndexError, json.JSONDecodeError):
        raise DataError(f"corrupt shard {name}: unreadable header") from None
    out = []
    for k, line in enumerate(lines[1:]):
        try:
            out.append(labeled_from_dict(json.loads(line)))
        except (json.JSONDecodeError, KeyError, ValueError, DataError) as exc:
            raise DataError(f"corrupt shard {name}: record {k}: {exc}") from None
    expected = entry.get("count", header.get("count"))
    if len(out) != expected or header.get("count") != expected:
        raise DataError(f"corrupt shard {name}: record {len(out)}: expected {expected} records, found {len(out)}")
    digest = entry.get("sha256")
    if digest and hashlib.sha256(raw).hexdigest() != digest:
        raise DataError(f"corrupt shard {name}: checksum mismatch")
    return out


# single-frame xyz exchange ------------------------------------------------


def write_xyz(path, frame: Frame | LabeledFrame) -> None:
    """Element + xyz per line; cell, pbc and labels in the comment header."""
    labeled = isinstance(frame, LabeledFrame)
    fr = frame.frame if labeled else frame
    s = fr.structure
    head = [
        'Lattice="' + " ".join(repr(float(x)) for x in s.cell.ravel()) + '"',
        'pbc="' + " ".join("T" if p else "F" for p in s.pbc) + '"',
        f"time={fr.time!r}",
        'tag="' + fr.tag.replace('"', "'") + '"',
        "units=angstrom,fs,eV",
    ]
    if labeled:
        head.append(f"energy={frame.energy!r}")
    lines = [str(len(s)), " ".join(head)]
    for k in range(len(s)):
        vals = list(s.positions[k])
        if labeled:
            vals += list(frame.forces[k])
        lines.append(SPECIES[s.species_ids[k]].symbol + " " + " ".join(repr(float(v)) for v in vals))
    atomic_write_text(Path(path), "\n".join(lines) + "\n")


def _parse_header(line: str) -> dict:
    out = {}
    i = 0
    while i < len(line):
        if line[i] == " ":
            i += 1
            continue
        eq = line.index("=", i)
        key = line[i:eq]
        if line[eq + 1] == '"':
            end = line.index('"', eq + 2)
            out[key] = line[eq + 2:end]
            i = end + 1
        else:
            end = line.find(" ", eq)
            end = len(line) if end < 0 else end
            out[key] = line[eq + 1:end]
            i = end
    return out


def read_xyz(path) -> Frame | LabeledFrame:
    lines = Path(path).read_text().splitlines()
    n = int(lines[0])
    head = _parse_header(lines[1])
    cell = np.array([float(x) for x in head["Lattice"].split()]).reshape(3, 3)
    pbc = tuple(x == "T" for x in head.get("pbc", "T T T").split())
    rows = [ln.split() for ln in lines[2:2 + n]]
    if len(rows) != n:
        raise DataError(f"{path}: expected {n} atoms, found {len(rows)}")
    ids = [SYMBOL_TO_ID[r[0]] for r in rows]
    vals = np.array([[float(x) for x in r[1:]] for r in rows]).reshape(n, -1)
    tag = head.get("tag", "")
    fr = Frame(Structure(cell, ids, vals[:, :3], pbc), None, float(head.get("time", 0.0)), tag)
    if "energy" in head:
        return LabeledFrame(fr, float(head["energy"]), vals[:, 3:6])
    return fr
