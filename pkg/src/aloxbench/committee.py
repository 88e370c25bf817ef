"""Query-by-committee potential built from linear ridge models over ACSF features.

A member predicts ``E = sum_i w[s_i] . G_i + b[s_i]`` and forces as the negative
gradient. Members share hyperparameters and differ by their bootstrap resample
of training frames. Fitting solves weighted ridge normal equations assembled
per frame, so a bootstrap is a weighted sum of cached per-frame blocks.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from aloxbench.descriptors.acsf import AcsfParams, AtomFeatures, acsf_compute
from aloxbench.errors import ConfigError, DataError, FitError, ModelError
from aloxbench.structure import LabeledFrame, Structure

CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class CommitteeConfig:
    K: int = 4
    ridge_lambda: float = 1e-6
    energy_weight: float = 1.0
    force_weight: float = 1.0
    bootstrap_fraction: float = 0.9
    seeds: tuple[int, ...] | None = None
    deviation: str = "max"  # max | mean over atoms

    def __post_init__(self):
        if self.K < 2:
            raise ConfigError("committee needs K >= 2")
        if self.energy_weight < 0 or self.force_weight < 0 or (self.energy_weight == 0 and self.force_weight == 0):
            raise ConfigError("weights must be >= 0 and not both zero")
        if not 0 < self.bootstrap_fraction <= 1:
            raise ConfigError("bootstrap_fraction must lie in (0, 1]")
        if self.ridge_lambda < 0:
            raise ConfigError("ridge_lambda must be >= 0")
        if self.deviation not in ("max", "mean"):
            raise ConfigError("deviation must be 'max' or 'mean'")
        seeds = tuple(range(self.K)) if self.seeds is None else tuple(int(s) for s in self.seeds)
        if len(seeds) != self.K:
            raise ConfigError("need one seed per member")
        object.__setattr__(self, "seeds", seeds)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["seeds"] = list(self.seeds)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> CommitteeConfig:
        return cls(**d)


def n_params(acsf: AcsfParams) -> int:
    return len(acsf.species) * (acsf.dim + 1)


def _species_slot(acsf: AcsfParams, species_ids: np.ndarray) -> np.ndarray:
    lookup = {s: k for k, s in enumerate(acsf.species)}
    try:
        return np.array([lookup[s] for s in species_ids], dtype=np.int64)
    except KeyError as exc:
        raise ModelError(f"species {exc} not covered by the descriptor parameters") from None


def design_rows(features: AtomFeatures, acsf: AcsfParams):
    """Energy row (P,) and force block (N*3, P) of the linear model."""
    n = features.n_atoms
    F = acsf.dim
    S = len(acsf.species)
    P = S * (F + 1)
    slot = _species_slot(acsf, features.species_ids)
    e_row = np.zeros(P)
    for k in range(S):
        mask = slot == k
        e_row[k * (F + 1):k * (F + 1) + F] = features.values[mask].sum(axis=0)
        e_row[k * (F + 1) + F] = mask.sum()
    K = acsf.n_radial
    size = n * 3 * P
    acc = np.zeros(size)
    if len(features.pair_i):
        col = (slot[features.pair_i] * (F + 1) + features.channel * K)[:, None] + np.arange(K)[None, :]
        for ax in range(3):
            val = features.dg * features.unit[:, ax][:, None]  # d G_i / d r_j along ax
            # force on j gets -val, force on i gets +val
            idx_j = (features.pair_j * 3 + ax)[:, None] * P + col
            idx_i = (features.pair_i * 3 + ax)[:, None] * P + col
            acc += np.bincount(idx_j.ravel(), weights=-val.ravel(), minlength=size)
            acc += np.bincount(idx_i.ravel(), weights=val.ravel(), minlength=size)
    if features.ang_grad is not None and len(features.ang_center):
        base = slot[features.ang_center] * (F + 1)
        for ax in range(3):
            idx = (features.ang_atom * 3 + ax)[:, None] * P + base[:, None] + np.arange(F)[None, :]
            acc += np.bincount(idx.ravel(), weights=-features.ang_grad[:, :, ax].ravel(), minlength=size)
    return e_row, acc.reshape(n * 3, P)


@dataclass(frozen=True, eq=False)
class FrameSystem:
    """One frame's contribution to the weighted normal equations."""

    ata: np.ndarray
    atb: np.ndarray


def frame_system(lf: LabeledFrame, acsf: AcsfParams, config: CommitteeConfig) -> FrameSystem:
    feats = acsf_compute(lf.structure, acsf)
    e_row, f_rows = design_rows(feats, acsf)
    f_true = lf.forces.reshape(-1)
    ata = config.energy_weight * np.outer(e_row, e_row) + config.force_weight * (f_rows.T @ f_rows)
    atb = config.energy_weight * e_row * lf.energy + config.force_weight * (f_rows.T @ f_true)
    return FrameSystem(ata, atb)


@dataclass(frozen=True, eq=False)
class MemberModel:
    weights: np.ndarray  # (S, F)
    bias: np.ndarray  # (S,)
    seed: int
    digest: str

    def flat(self) -> np.ndarray:
        return np.concatenate([np.concatenate([w, [b]]) for w, b in zip(self.weights, self.bias)])

    @classmethod
    def from_flat(cls, theta: np.ndarray, acsf: AcsfParams, seed: int, digest: str) -> MemberModel:
        blocks = theta.reshape(len(acsf.species), acsf.dim + 1)
        return cls(blocks[:, :-1].copy(), blocks[:, -1].copy(), seed, digest)

    def energy_forces(self, feats: AtomFeatures, slot: np.ndarray):
        e = float(np.sum(feats.values * self.weights[slot]) + self.bias[slot].sum())
        return e, feats.forces(self.weights[slot])


@dataclass(frozen=True, eq=False)
class CommitteePrediction:
    mean_energy: float
    mean_forces: np.ndarray
    member_energies: np.ndarray
    member_forces: np.ndarray  # (K, N, 3)
    epsilon_f: float


def force_deviation(member_forces: np.ndarray, mode: str = "max") -> float:
    """Committee force spread: per-atom sqrt(mean_k |F_k - F_mean|^2), reduced over atoms."""
    mf = np.asarray(member_forces, dtype=float)
    if mf.shape[1] == 0 or np.all(mf == mf[:1]):
        return 0.0
    dev = mf - mf.mean(axis=0, keepdims=True)
    per_atom = np.sqrt(np.mean(np.sum(dev * dev, axis=2), axis=0))
    return float(per_atom.max() if mode == "max" else per_atom.mean())


@dataclass(eq=False)
class Committee:
    acsf: AcsfParams
    config: CommitteeConfig
    members: list[MemberModel]
    dataset_digest: str = ""
    meta: dict = field(default_factory=dict)

    def _check(self, structure: Structure):
        for m in self.members:
            if m.weights.shape != (len(self.acsf.species), self.acsf.dim):
                raise ModelError(
                    f"member weight shape {m.weights.shape} does not match descriptor dimension "
                    f"{(len(self.acsf.species), self.acsf.dim)}"
                )

    def predict(self, structure: Structure, features: AtomFeatures | None = None) -> CommitteePrediction:
        self._check(structure)
        feats = features if features is not None else acsf_compute(structure, self.acsf)
        if feats.values.shape[1] != self.acsf.dim:
            raise ModelError("descriptor dimension mismatch")
        slot = _species_slot(self.acsf, structure.species_ids)
        es, fs = [], []
        for m in self.members:
            e, f = m.energy_forces(feats, slot)
            es.append(e)
            fs.append(f)
        fs = np.array(fs)
        return CommitteePrediction(
            float(np.mean(es)), fs.mean(axis=0), np.array(es), fs,
            force_deviation(fs, self.config.deviation),
        )

    def mean_member(self) -> MemberModel:
        first = self.members[0]
        if all(np.array_equal(m.flat(), first.flat()) for m in self.members[1:]):
            return first
        w = np.mean([m.weights for m in self.members], axis=0)
        b = np.mean([m.bias for m in self.members], axis=0)
        return MemberModel(w, b, -1, "mean")

    def mean_potential(self) -> CommitteeMeanPotential:
        return CommitteeMeanPotential(self)

    # persistence ------------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "format": "aloxbench-committee",
            "version": CHECKPOINT_VERSION,
            "acsf": self.acsf.to_dict(),
            "config": self.config.to_dict(),
            "dataset_digest": self.dataset_digest,
            "meta": self.meta,
            "members": [
                {"seed": m.seed, "digest": m.digest, "weights": m.weights.tolist(), "bias": m.bias.tolist()}
                for m in self.members
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> Committee:
        if d.get("format") != "aloxbench-committee":
            raise ModelError("not a committee checkpoint")
        if d.get("version") != CHECKPOINT_VERSION:
            raise ModelError(f"unsupported checkpoint version {d.get('version')}")
        members = [
            MemberModel(np.array(m["weights"], dtype=float), np.array(m["bias"], dtype=float), m["seed"], m["digest"])
            for m in d["members"]
        ]
        return cls(AcsfParams.from_dict(d["acsf"]), CommitteeConfig.from_dict(d["config"]),
                   members, d.get("dataset_digest", ""), d.get("meta", {}))

    def save(self, path) -> None:
        from aloxbench.dataset import atomic_write_text

        atomic_write_text(Path(path), json.dumps(self.to_dict(), sort_keys=True) + "\n")

    @classmethod
    def load(cls, path) -> Committee:
        return cls.from_dict(json.loads(Path(path).read_text()))


class CommitteeMeanPotential:
    """Energy and forces of the committee mean (a linear model with averaged weights)."""

    def __init__(self, committee: Committee):
        self.committee = committee
        self.model = committee.mean_member()
        self.cutoff = committee.acsf.r_cut

    def compute(self, structure: Structure):
        feats = acsf_compute(structure, self.committee.acsf)
        slot = _species_slot(self.committee.acsf, structure.species_ids)
        return self.model.energy_forces(feats, slot)


def _solve(ata: np.ndarray, atb: np.ndarray, lam: float) -> np.ndarray:
    P = len(atb)
    if lam == 0:
        if np.linalg.matrix_rank(ata) < P:
            raise FitError("singular normal matrix at ridge_lambda = 0; raise ridge_lambda")
    A = ata + lam * np.eye(P)
    try:
        return np.linalg.solve(A, atb)
    except np.linalg.LinAlgError:
        raise FitError("singular normal matrix; raise ridge_lambda") from None


def train_committee(frames, acsf: AcsfParams | None = None, config: CommitteeConfig | None = None,
                    systems: list[FrameSystem] | None = None, dataset_digest: str = "") -> Committee:
    """Fit K members, each on its own bootstrap resample of ``frames``.

    ``systems`` may carry precomputed per-frame normal-equation blocks (same
    order as ``frames``) to skip descriptor evaluation.
    """
    acsf = acsf or AcsfParams()
    config = config or CommitteeConfig()
    frames = list(frames)
    if not frames:
        raise DataError("cannot train on an empty dataset")
    if systems is None:
        systems = [frame_system(lf, acsf, config) for lf in frames]
    if len(systems) != len(frames):
        raise DataError("systems and frames differ in length")
    n = len(frames)
    size = int(round(config.bootstrap_fraction * n))
    if size < 1:
        raise ConfigError("bootstrap resample is empty; raise bootstrap_fraction or add frames")
    ata_all = np.stack([s.ata for s in systems])
    atb_all = np.stack([s.atb for s in systems])
    members = []
    for seed in config.seeds:
        rng = np.random.default_rng(seed)
        idx = rng.integers(0, n, size=size)
        counts = np.bincount(idx, minlength=n).astype(float)
        theta = _solve(np.tensordot(counts, ata_all, axes=1), counts @ atb_all, config.ridge_lambda)
        digest = hashlib.sha256((dataset_digest + counts.astype(np.int64).tobytes().hex()).encode()).hexdigest()[:16]
        members.append(MemberModel.from_flat(theta, acsf, seed, digest))
    return Committee(acsf, config, members, dataset_digest)


# evaluation -------------------------------------------------------------------


@dataclass
class EvalReport:
    energy_rmse_per_atom: float
    force_rmse: float
    n_frames: int
    n_force_components: int
    parity_energy: list  # [(true, predicted)] per-atom energies
    parity_force: list  # [(true, predicted)] force components
    histogram_edges: list
    histogram_counts: list  # last entry is the overflow bin
    fraction_force_error_below: dict

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> EvalReport:
        d = dict(d)
        d["parity_energy"] = [tuple(p) for p in d["parity_energy"]]
        d["parity_force"] = [tuple(p) for p in d["parity_force"]]
        d["fraction_force_error_below"] = {str(k): v for k, v in d["fraction_force_error_below"].items()}
        return cls(**d)


def evaluate(committee: Committee, heldout, parity_cap: int = 5000, seed: int = 0,
             hist_edges=None, thresholds=(0.05, 0.1, 0.2)) -> EvalReport:
    """Held-out metrics for the committee-mean prediction."""
    preds = [committee.predict(lf.structure) for lf in heldout]
    return evaluate_predictions(heldout, [p.mean_energy for p in preds], [p.mean_forces for p in preds],
                                parity_cap, seed, hist_edges, thresholds)


def evaluate_predictions(heldout, energies, forces, parity_cap: int = 5000, seed: int = 0,
                         hist_edges=None, thresholds=(0.05, 0.1, 0.2)) -> EvalReport:
    heldout = list(heldout)
    edges = np.linspace(0.0, 0.5, 51) if hist_edges is None else np.asarray(hist_edges, dtype=float)
    if not heldout:
        raise DataError("held-out set is empty")
    e_true = np.array([lf.energy / len(lf) for lf in heldout])
    e_pred = np.array([e / len(lf) for e, lf in zip(energies, heldout)])
    f_true = np.concatenate([lf.forces.reshape(-1) for lf in heldout])
    f_pred = np.concatenate([np.asarray(f).reshape(-1) for f in forces])
    atom_err = np.linalg.norm((f_pred - f_true).reshape(-1, 3), axis=1)
    rng = np.random.default_rng(seed)
    pick = np.arange(len(f_true))
    if len(pick) > parity_cap:
        pick = np.sort(rng.choice(len(f_true), size=parity_cap, replace=False))
    epick = np.arange(len(e_true))
    if len(epick) > parity_cap:
        epick = np.sort(rng.choice(len(e_true), size=parity_cap, replace=False))
    counts, _ = np.histogram(np.clip(atom_err, edges[0], edges[-1]), bins=edges)
    # np.histogram closes the last bin on the right; move the exact edge hits to overflow
    over = int(np.sum(atom_err >= edges[-1]))
    counts[-1] -= int(np.sum(np.clip(atom_err, edges[0], edges[-1]) == edges[-1]))
    counts = counts.tolist() + [over]
    return EvalReport(
        float(np.sqrt(np.mean((e_pred - e_true) ** 2))),
        float(np.sqrt(np.mean((f_pred - f_true) ** 2))),
        len(heldout),
        len(f_true),
        [(float(e_true[k]), float(e_pred[k])) for k in epick],
        [(float(f_true[k]), float(f_pred[k])) for k in pick],
        edges.tolist(),
        [int(c) for c in counts],
        {repr(float(t)): float(np.mean(atom_err < t)) for t in thresholds},
    )


def max_atom_force_error(pred_forces: np.ndarray, true_forces: np.ndarray) -> float:
    return float(np.max(np.linalg.norm(np.asarray(pred_forces) - np.asarray(true_forces), axis=1)))
