"""The active-learning state machine with its human decision gate.

Each work phase writes its outputs under ``work/iter-K/`` and is marked complete
in the state file only afterwards, so a crashed iteration resumes at the first
phase that did not finish.
"""

from __future__ import annotations

import hashlib
import json
import logging
import time
from dataclasses import replace
from datetime import datetime, timezone

import numpy as np

from aloxbench.committee import Committee, evaluate, frame_system, train_committee
from aloxbench.curation import dedup_candidates, fps_select, pca_fit_project
from aloxbench.dataset import Dataset, atomic_write_text, labeled_to_dict
from aloxbench.descriptors.soap import soap_compute
from aloxbench.dynamics.explore import explore
from aloxbench.dynamics.scene import build_scene
from aloxbench.dynamics.trajectory import Trajectory
from aloxbench.errors import AloxError, ConfigError, ConflictError, DataError, NotFoundError, StateError
from aloxbench.loop import state as st
from aloxbench.loop.report import IterationReport
from aloxbench.loop.state import LoopState, classify_frames
from aloxbench.loop.workspace import Workspace
from aloxbench.oracle import label_frames

log = logging.getLogger(__name__)

EPS_HIST_BINS = 40


def _sub_seed(*parts: int) -> int:
    return int(np.random.SeedSequence([int(p) for p in parts]).generate_state(1, dtype=np.uint32)[0])


def _digest(obj) -> str:
    return hashlib.sha256(json.dumps(obj, sort_keys=True).encode()).hexdigest()


def _prefix_digest(frames) -> str:
    h = hashlib.sha256()
    for lf in frames:
        h.update(json.dumps(labeled_to_dict(lf), sort_keys=True).encode())
    return h.hexdigest()


def _t_label(T: float) -> str:
    return f"{T:g}"


def _write_json(path, obj) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    atomic_write_text(path, json.dumps(obj, sort_keys=True, indent=1) + "\n")


def _read_json(path):
    return json.loads(path.read_text())


class LoopController:
    """Drives one workspace. ``phase_hook(phase)`` runs before each work phase (fault injection)."""

    def __init__(self, workspace, phase_hook=None):
        self.ws = workspace if isinstance(workspace, Workspace) else Workspace(workspace)
        self.config = self.ws.config()
        self.oracle = self.ws.oracle()
        self.phase_hook = phase_hook

    # status -----------------------------------------------------------------

    def state(self) -> LoopState:
        return self.ws.load_state()

    def status(self) -> dict:
        s = self.state()
        return {"phase": s.phase, "iteration": s.iteration, "converged": s.converged,
                "completed_phases": list(s.completed), "last_error": s.last_error,
                "decisions": list(s.decisions), "iterations": self.ws.iterations()}

    # iteration --------------------------------------------------------------

    def run_iteration(self) -> IterationReport:
        """Run (or resume) one iteration up to the decision gate."""
        with self.ws.lock:
            state = self.ws.load_state()
            if state.phase in (st.AWAITING, st.DEPLOYED, st.ABORTED):
                raise StateError(f"cannot run an iteration in phase {state.phase}")
            if state.phase == st.IDLE:
                if state.iteration >= self.config.loop.max_iterations:
                    raise StateError(f"max_iterations ({self.config.loop.max_iterations}) reached")
                state.iteration += 1
                state.completed = []
                state.last_error = None
                state.transition(st.TRAINING)
                self.ws.save_state(state)
        k = state.iteration
        work = self.ws.work_dir(k)
        work.mkdir(parents=True, exist_ok=True)
        times_path = work / "wall_times.json"
        wall = _read_json(times_path) if times_path.exists() else {}
        steps = ((st.TRAINING, self._train), (st.EXPLORING, self._explore), (st.SELECTING, self._select),
                 (st.LABELING, self._label), (st.CURATING, self._curate))
        for phase, fn in steps:
            if phase in state.completed:
                continue
            if state.phase != phase:
                state.transition(phase)
                self.ws.save_state(state)
            t0 = time.perf_counter()
            try:
                if self.phase_hook is not None:
                    self.phase_hook(phase)
                fn(k)
            except Exception as exc:
                category = exc.category if isinstance(exc, AloxError) else type(exc).__name__
                state.last_error = f"{category}: {exc}"
                self.ws.save_state(state)
                _write_json(work / "report-draft.json", {"iteration": k, "phase": phase, "error": state.last_error,
                                                         "completed_phases": list(state.completed)})
                raise
            wall[phase] = time.perf_counter() - t0
            _write_json(times_path, wall)
            state.completed.append(phase)
            self.ws.save_state(state)
        report = self._report(k, wall)
        with self.ws.lock:
            state.converged = report.converged
            state.last_error = None
            state.transition(st.AWAITING)
            self.ws.write_report(report, {"phase": st.AWAITING, "iteration": k, "converged": report.converged})
            self.ws.save_state(state)
        return report

    # phases -----------------------------------------------------------------

    def _split(self, n: int, k: int):
        rng = np.random.default_rng(_sub_seed(self.config.loop.seed, k, 0))
        perm = rng.permutation(n)
        n_held = max(1, int(round(self.config.loop.heldout_fraction * n)))
        return sorted(perm[n_held:].tolist()), sorted(perm[:n_held].tolist())

    def _systems(self, ds: Dataset):
        cfg = self.config
        key_cfg = {"acsf": cfg.acsf.to_dict(), "ew": cfg.committee.energy_weight, "fw": cfg.committee.force_weight}
        ata = atb = None
        meta_path = self.ws.root / "cache" / "systems.json"
        if meta_path.exists():
            meta = _read_json(meta_path)
            m = meta.get("count", 0)
            if meta.get("config") == _digest(key_cfg) and m <= len(ds) and meta.get("prefix") == _prefix_digest(ds[:m]):
                ata = self.ws.cached_array("systems-ata", meta["prefix"])
                atb = self.ws.cached_array("systems-atb", meta["prefix"])
        if ata is None or atb is None or len(ata) != len(atb):
            ata = atb = None
        have = 0 if ata is None else len(ata)
        new = [frame_system(lf, cfg.acsf, cfg.committee) for lf in ds[have:]]
        if new:
            na = np.stack([s.ata for s in new])
            nb = np.stack([s.atb for s in new])
            ata = na if ata is None else np.concatenate([ata, na])
            atb = nb if atb is None else np.concatenate([atb, nb])
            prefix = _prefix_digest(ds)
            self.ws.store_array("systems-ata", prefix, ata)
            self.ws.store_array("systems-atb", prefix, atb)
            _write_json(meta_path, {"config": _digest(key_cfg), "count": len(ds), "prefix": prefix})
        from aloxbench.committee import FrameSystem
        return [FrameSystem(a, b) for a, b in zip(ata, atb)]

    def _fingerprints(self, ds: Dataset) -> np.ndarray:
        soap = self.config.soap
        meta_path = self.ws.root / "cache" / "fingerprints.json"
        fp = None
        if meta_path.exists():
            meta = _read_json(meta_path)
            m = meta.get("count", 0)
            if meta.get("config") == _digest(soap.to_dict()) and m <= len(ds) and meta.get("prefix") == _prefix_digest(ds[:m]):
                fp = self.ws.cached_array("fingerprints", meta["prefix"])
        have = 0 if fp is None else len(fp)
        if have < len(ds):
            new = np.array([soap_compute(lf.structure, soap).structure_vector for lf in ds[have:]])
            fp = new if fp is None else np.concatenate([fp, new])
            prefix = _prefix_digest(ds)
            self.ws.store_array("fingerprints", prefix, fp)
            _write_json(meta_path, {"config": _digest(soap.to_dict()), "count": len(ds), "prefix": prefix})
        if fp is None:
            fp = np.zeros((0, soap.structure_dim))
        return fp

    def _train(self, k: int) -> None:
        cfg = self.config
        ds = self.ws.dataset()
        if len(ds) < 2:
            raise DataError(f"dataset holds {len(ds)} frames; need at least 2 to train")
        train_idx, held_idx = self._split(len(ds), k)
        systems = self._systems(ds)
        ccfg = replace(cfg.committee, seeds=tuple(_sub_seed(cfg.loop.seed, k, 1, m) for m in range(cfg.committee.K)))
        committee = train_committee([ds[i] for i in train_idx], cfg.acsf, ccfg,
                                    systems=[systems[i] for i in train_idx], dataset_digest=ds.digest())
        committee.meta = {"iteration": k, "n_train": len(train_idx), "n_heldout": len(held_idx)}
        path = self.ws.model_path(k)
        path.parent.mkdir(parents=True, exist_ok=True)
        committee.save(path)
        _write_json(self.ws.work_dir(k) / "split.json", {"train": train_idx, "heldout": held_idx,
                                                         "dataset_size": len(ds)})

    def _scenes(self):
        scenes = self.ws.scenes()
        if scenes is None:
            scenes = [build_scene(spec, self.oracle) for spec in self.config.scenes]
            self.ws.save_scenes(scenes)
        return scenes

    def _explore(self, k: int) -> None:
        cfg = self.config
        committee = Committee.load(self.ws.model_path(k))
        protocol = replace(cfg.explore, seed=_sub_seed(cfg.loop.seed, k, 2))
        result = explore(committee, self._scenes(), cfg.loop.temperature_ladder, protocol, tag_prefix=f"iter{k}")
        out = self.ws.work_dir(k) / "explore"
        legs = []
        for n, leg in enumerate(result.legs):
            entry = {"scene": leg.scene, "temperature": leg.temperature, "engine": leg.engine,
                     "error": leg.error, "n_frames": 0, "dir": None}
            if leg.ok:
                entry["dir"] = f"leg-{n:03d}"
                entry["n_frames"] = len(leg.trajectory)
                leg.trajectory.save(out / entry["dir"])
            legs.append(entry)
        _write_json(out / "legs.json", legs)

    def _explored(self, k: int):
        out = self.ws.work_dir(k) / "explore"
        legs = _read_json(out / "legs.json")
        frames, owner = [], []
        for n, leg in enumerate(legs):
            if leg["dir"] is None:
                continue
            traj = Trajectory.load(out / leg["dir"])
            if len(traj) != leg["n_frames"]:
                raise DataError(f"exploration leg {leg['dir']} holds {len(traj)} frames, expected {leg['n_frames']}")
            frames.extend(traj.frames)
            owner.extend([n] * len(traj))
        return legs, frames, owner

    def _select(self, k: int) -> None:
        lc = self.config.loop
        legs, frames, owner = self._explored(k)
        eps = [float(f.annotations["epsilon_f"]) for f in frames]
        classes = classify_frames(eps, lc.eps_lo, lc.eps_hi) if frames else []
        cand = [i for i, c in enumerate(classes) if c == st.CANDIDATE]
        picks: list[int] = []
        fp = np.zeros((0, self.config.soap.structure_dim))
        if cand and lc.max_candidates_per_iter > 0:
            cfp = np.array([soap_compute(frames[i].structure, self.config.soap).structure_vector for i in cand])
            res = fps_select(cfp, lc.max_candidates_per_iter, start="max-norm-from-centroid")
            picks = [cand[i] for i in res.indices]
            fp = cfp[res.indices]
        _write_json(self.ws.work_dir(k) / "selection.json", {
            "epsilon_f": eps, "classes": classes,
            "temperature": [legs[o]["temperature"] for o in owner],
            "selected": picks,
        })
        np.save(self.ws.work_dir(k) / "selected-fp.npy", fp)

    def _label(self, k: int) -> None:
        work = self.ws.work_dir(k)
        sel = _read_json(work / "selection.json")
        _, frames, _ = self._explored(k)
        chosen = [frames[i] for i in sel["selected"]]
        labeled, rejected = label_frames(chosen, potential=self.oracle)
        rej_idx = {r[0] for r in rejected}
        kept = [i for i in range(len(chosen)) if i not in rej_idx]
        ds = Dataset()
        ds.append(labeled, note=f"iter-{k} labeled")
        ds.save(work / "labeled")
        _write_json(work / "labeling.json", {"kept": kept,
                                             "rejected": [{"index": r[0], "reason": r[2]} for r in rejected]})

    def _curate(self, k: int) -> None:
        work = self.ws.work_dir(k)
        note = f"iter-{k}"
        ds = self.ws.dataset()
        curated_path = work / "curated.json"
        if ds.log and ds.log[-1]["note"] == note and curated_path.exists():
            return  # appended before a crash; nothing left to do
        labeled = Dataset.load(work / "labeled")
        kept = _read_json(work / "labeling.json")["kept"]
        fp = np.load(work / "selected-fp.npy")[kept] if kept else np.zeros((0, self.config.soap.structure_dim))
        existing = self._fingerprints(ds)
        keep = dedup_candidates(existing, fp, self.config.loop.d_min).tolist() if len(fp) else []
        _write_json(curated_path, {"dataset_size_before": len(ds), "kept": keep,
                                   "dropped": [i for i in range(len(fp)) if i not in set(keep)]})
        ds.append([labeled[i] for i in keep], note=note)
        ds.save(self.ws.root / "dataset")

    # report -----------------------------------------------------------------

    def _report(self, k: int, wall: dict) -> IterationReport:
        cfg = self.config
        lc = cfg.loop
        work = self.ws.work_dir(k)
        sel = _read_json(work / "selection.json")
        legs = _read_json(work / "explore" / "legs.json")
        labeling = _read_json(work / "labeling.json")
        curated = _read_json(work / "curated.json")
        split = _read_json(work / "split.json")
        ds = self.ws.dataset()
        committee = Committee.load(self.ws.model_path(k))

        eps = np.array(sel["epsilon_f"], dtype=float)
        temps = np.array(sel["temperature"], dtype=float)
        classes = np.array(sel["classes"], dtype=object)
        edges = np.linspace(0.0, 2.0 * lc.eps_hi, EPS_HIST_BINS + 1)
        classification, hist = {}, {}
        for T in lc.temperature_ladder:
            mask = temps == T
            n = int(mask.sum())
            counts = {c: int(np.sum(classes[mask] == c)) for c in (st.ACCURATE, st.CANDIDATE, st.FAILED)}
            fractions = {c: (v / n if n else None) for c, v in counts.items()}
            classification[_t_label(T)] = {"n_frames": n, "counts": counts, "fractions": fractions}
            e = eps[mask]
            h, _ = np.histogram(e[e < edges[-1]], bins=edges)
            hist[_t_label(T)] = [int(x) for x in h] + [int(np.sum(e >= edges[-1]))]
        n_all = len(eps)
        cand_frac = float(np.sum(classes == st.CANDIDATE) / n_all) if n_all else 0.0
        fail_frac = float(np.sum(classes == st.FAILED) / n_all) if n_all else 1.0

        held = [ds[i] for i in split["heldout"]]
        heldout = evaluate(committee, held, parity_cap=lc.parity_cap, seed=_sub_seed(lc.seed, k, 3))
        bench = self.ws.benchmark()
        bench_eval = None
        if bench is not None and len(bench):
            bench_eval = evaluate(committee, bench, parity_cap=lc.parity_cap, seed=_sub_seed(lc.seed, k, 4))

        pca = None
        if len(ds) >= 3:
            fp = self._fingerprints(ds)
            idx = np.arange(len(ds))
            if len(ds) > lc.pca_max_points:
                rng = np.random.default_rng(_sub_seed(lc.seed, k, 5))
                idx = np.sort(rng.choice(len(ds), size=lc.pca_max_points, replace=False))
            pmap = pca_fit_project(fp[idx], 2, color=[ds[i].energy / len(ds[i]) for i in idx],
                                   tags=[ds[i].tag for i in idx])
            pca = pmap.to_dict()

        added = len(curated["kept"])
        # a run whose frames all fail has no candidates either; that is not convergence
        converged = cand_frac < lc.convergence_target and fail_frac < lc.convergence_target
        stop = "converged" if converged else ("max_iterations" if k >= lc.max_iterations else None)
        return IterationReport(
            iteration=k,
            dataset_size_before=curated["dataset_size_before"],
            dataset_size=len(ds),
            classification=classification,
            candidate_fraction=cand_frac,
            failed_fraction=fail_frac,
            heldout=heldout,
            benchmark=bench_eval,
            epsilon_histogram={"edges": edges.tolist(), "counts": hist},
            pca=pca,
            selected_before_dedup=len(sel["selected"]),
            selected_after_dedup=added,
            label_rejected=len(labeling["rejected"]),
            added=added,
            failed_legs=[{"scene": g["scene"], "temperature": g["temperature"], "error": g["error"]}
                         for g in legs if g["error"] is not None],
            converged=converged,
            stop_reason=stop,
            wall_times={p: float(t) for p, t in wall.items()},
        )

    # gate -------------------------------------------------------------------

    def decide(self, action: str, note: str = "", iteration: int | None = None) -> dict:
        """Apply a gate decision. Returns the logged entry.

        A repeat of the decision already in effect is a no-op; a different one is a conflict.
        """
        if action not in st.ACTIONS:
            raise ConfigError(f"action must be one of {', '.join(st.ACTIONS)}")
        with self.ws.lock:
            state = self.ws.load_state()
            k = state.iteration if iteration is None else int(iteration)
            if iteration is not None and not 1 <= k <= state.iteration:
                raise NotFoundError(f"no iteration {k}")
            prior = state.decision_for(k)
            if prior is not None:
                if prior["action"] == action:
                    return prior
                raise ConflictError(f"iteration {k} already decided: {prior['action']}", prior)
            if state.phase != st.AWAITING or k != state.iteration:
                raise StateError(f"decision not allowed in phase {state.phase} for iteration {k}")
            entry = {"iteration": k, "action": action, "note": note, "effective": True,
                     "timestamp": datetime.now(timezone.utc).isoformat()}
            if action == "approve":
                state.transition(st.DEPLOYED)
                atomic_write_text(self.ws.model_path(k).parent / "DEPLOYABLE", f"iteration {k}\n")
            elif action == "abort":
                state.transition(st.ABORTED)
            else:
                report, _ = self.ws.read_report(k)
                if report.stop_reason is not None:
                    entry["effective"] = False
                    entry["declined"] = report.stop_reason
                    self.ws.write_report(report, {"phase": st.AWAITING, "iteration": k,
                                                  "converged": report.converged})
                else:
                    state.transition(st.IDLE)
            state.decisions.append(entry)
            self.ws.append_decision(entry)
            self.ws.save_state(state)
            return entry


def gate_decision(workspace, action: str, note: str = "", iteration: int | None = None) -> dict:
    return LoopController(workspace).decide(action, note, iteration)


def run_iteration(workspace) -> IterationReport:
    return LoopController(workspace).run_iteration()
