import json

import numpy as np
import pytest

from aloxbench.dataset import Dataset, read_xyz, tag_group, write_xyz
from aloxbench.errors import DataError
from aloxbench.structure import Frame, LabeledFrame, Structure


def make_frames(n, rng):
    out = []
    for k in range(n):
        s = Structure(np.eye(3) * 6, [0, 1, 1], rng.random((3, 3)) * 6)
        fr = Frame(s, rng.normal(size=(3, 3)), time=0.5 * k, tag=f"seed/T300/step{k}", annotations={"k": k})
        out.append(LabeledFrame(fr, float(rng.normal()), rng.normal(size=(3, 3))))
    return out


def test_round_trip_across_shards(tmp_path, rng):
    ds = Dataset(shard_size=4)
    ds.append(make_frames(10, rng), note="seed")
    ds.save(tmp_path / "d")
    man = json.loads((tmp_path / "d" / "manifest.json").read_text())
    assert [s["count"] for s in man["shards"]] == [4, 4, 2]
    assert man["tag_counts"] == {"seed": 10}
    back = Dataset.load(tmp_path / "d")
    assert back.digest() == ds.digest()
    assert back.log == ds.log
    a, b = ds[3], back[3]
    assert a.structure.equals(b.structure)
    assert np.array_equal(a.forces, b.forces) and a.energy == b.energy
    assert np.array_equal(a.frame.velocities, b.frame.velocities)
    assert b.frame.annotations == {"k": 3}


def test_empty_dataset_has_valid_manifest(tmp_path):
    Dataset().save(tmp_path)
    back = Dataset.load(tmp_path)
    assert len(back) == 0
    assert json.loads((tmp_path / "manifest.json").read_text())["n_frames"] == 0


def test_corrupt_record_names_shard_and_record(tmp_path, rng):
    ds = Dataset(shard_size=5)
    ds.append(make_frames(8, rng))
    ds.save(tmp_path)
    shard = tmp_path / "shard-00001.jsonl"
    lines = shard.read_text().splitlines()
    lines[2] = lines[2][:40]
    shard.write_text("\n".join(lines) + "\n")
    with pytest.raises(DataError, match=r"shard-00001.*record 1"):
        Dataset.load(tmp_path)


def test_missing_manifest(tmp_path):
    with pytest.raises(DataError, match="manifest"):
        Dataset.load(tmp_path)


def test_tag_group():
    assert tag_group("iter3/s0/T300/md/step10") == "iter3"
    assert tag_group("plain") == "plain"


def test_xyz_round_trip(tmp_path, rng):
    lf = make_frames(1, rng)[0]
    write_xyz(tmp_path / "a.xyz", lf)
    back = read_xyz(tmp_path / "a.xyz")
    assert isinstance(back, LabeledFrame)
    assert np.allclose(back.structure.positions, lf.structure.positions)
    assert np.allclose(back.forces, lf.forces)
    assert back.energy == pytest.approx(lf.energy)
    assert back.tag == lf.tag
    write_xyz(tmp_path / "b.xyz", lf.frame)
    assert isinstance(read_xyz(tmp_path / "b.xyz"), Frame)
