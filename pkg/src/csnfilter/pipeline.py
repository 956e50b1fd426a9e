"""Run directories, manifests, similarity caching and the full experiment driver.

A run directory holds one split::

    social.tsv  train.tsv  test.tsv  manifest.json  cache/

Every stage checks the manifest hashes of its inputs before running and
records the hashes of what it writes.
"""

from __future__ import annotations

import hashlib
import json
import logging
import platform
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np
import scipy
import scipy.sparse as sp

from . import __version__
from .analysis import (
    extract_ego,
    influence_preference_curve,
    influence_preference_spearman,
    recommended_degree_histogram,
)
from .evaluation import DEFAULT_AUC_SAMPLES, GridResult, evaluate, grid_sweep
from .network import (
    PurifyThresholds,
    SplitPair,
    load_network,
    network_from_raw,
    purify,
    read_edge_file,
    save_network,
    split,
    stats,
    write_edge_file,
)
from .recommender import hybrid_similarity, recommend
from .similarity import (
    DEFAULT_C,
    InfluenceKind,
    InfluenceMatrix,
    PreferenceMatrix,
    cosine_preference,
    influence,
)
from .synthgen import SynthConfig, generate

log = logging.getLogger(__name__)

MANIFEST = "manifest.json"
SPLIT_FILES = ("social.tsv", "train.tsv", "test.tsv")


class StageError(RuntimeError):
    """A stage input is missing or does not match the manifest."""


def file_hash(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def dump_json(path, obj):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def versions():
    return {"csnfilter": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version()}


# --------------------------------------------------------------------------
# run directory


class RunDir:
    def __init__(self, path):
        self.path = Path(path)

    def __truediv__(self, name):
        return self.path / name

    @property
    def manifest_path(self):
        return self.path / MANIFEST

    def manifest(self):
        if not self.manifest_path.exists():
            raise StageError(f"{self.path} has no {MANIFEST}; run `split` first")
        with open(self.manifest_path, encoding="utf-8") as fh:
            return json.load(fh)

    def _save_manifest(self, man):
        dump_json(self.manifest_path, man)

    def verify_inputs(self):
        man = self.manifest()
        for name, digest in man["inputs"].items():
            p = self.path / name
            if not p.exists():
                raise StageError(f"stage input {p} is missing")
            if file_hash(p) != digest:
                raise StageError(f"stage input {p} changed since it was recorded (hash mismatch)")
        return man

    def record_outputs(self, *paths, stage):
        man = self.manifest()
        for p in paths:
            p = Path(p)
            man.setdefault("outputs", {})[str(p.relative_to(self.path))] = {
                "sha256": file_hash(p), "stage": stage}
        self._save_manifest(man)

    @classmethod
    def create(cls, path, net, sp_, extra=None):
        rd = cls(path)
        rd.path.mkdir(parents=True, exist_ok=True)
        uid, iid = net.user_ids, net.item_ids
        write_edge_file(rd / "social.tsv", uid[net.social], "source\ttarget")
        tb = sp_.train.behavior
        write_edge_file(rd / "train.tsv", np.column_stack([uid[tb[:, 0]], iid[tb[:, 1]]]), "user\titem")
        write_edge_file(rd / "test.tsv", np.column_stack([uid[sp_.test[:, 0]], iid[sp_.test[:, 1]]]),
                        "user\titem")
        man = {
            "split": {"seed": sp_.seed, "ratio": sp_.ratio},
            "inputs": {name: file_hash(rd / name) for name in SPLIT_FILES},
            "outputs": {},
            "versions": versions(),
        }
        if extra:
            man.update(extra)
        rd._save_manifest(man)
        return rd

    def load_split(self):
        man = self.verify_inputs()
        social = read_edge_file(self / "social.tsv")
        train_raw = read_edge_file(self / "train.tsv")
        test_raw = read_edge_file(self / "test.tsv")
        net = network_from_raw(social, np.concatenate([train_raw, test_raw]))
        uid, iid = net.user_ids, net.item_ids

        def index(raw):
            return np.column_stack([np.searchsorted(uid, raw[:, 0]), np.searchsorted(iid, raw[:, 1])])

        test = index(test_raw)
        test = test[np.lexsort((test[:, 1], test[:, 0]))]
        train = net.with_behavior(index(train_raw))
        sp_ = SplitPair(train, test, int(man["split"]["seed"]), float(man["split"]["ratio"]))
        return net, sp_

    # -- similarity cache

    def cache_key(self, what, c=None, classic=False):
        man = self.manifest()
        parts = [man["inputs"]["social.tsv"], man["inputs"]["train.tsv"],
                 str(man["split"]["seed"]), what]
        if what == "rwr":
            parts.append(repr(float(c)))
        if what in ("lin", "lout"):
            parts.append(f"classic={bool(classic)}")
        return hashlib.sha256("|".join(parts).encode()).hexdigest()[:16]

    def cached_matrix(self, what, compute, c=None, classic=False):
        cache = self.path / "cache"
        cache.mkdir(exist_ok=True)
        p = cache / f"{what}-{self.cache_key(what, c, classic)}.npz"
        if p.exists():
            log.info("cache hit: %s", p.name)
            return sp.load_npz(p).tocsr(), True
        M = compute()
        sp.save_npz(p, M)
        log.info("cached %s", p.name)
        return M, False

    def similarities(self, sp_, kind, c=DEFAULT_C, classic=False):
        """Preference and influence for this split, reusing the cache."""
        kind = InfluenceKind(kind)
        P, _ = self.cached_matrix("preference", lambda: cosine_preference(sp_.train).scores)
        S, hit = self.cached_matrix(
            kind.value, lambda: influence(sp_.train, kind, c=c, classic_tanimoto=classic).scores,
            c=c, classic=classic)
        return (PreferenceMatrix(P),
                InfluenceMatrix(kind, S, float(c) if kind is InfluenceKind.RWR else None), hit)


# --------------------------------------------------------------------------
# stage helpers shared by the CLI and the experiment driver


def run_analysis(rd, net, sp_, pref, infl, kind, alpha=0.0, beta=1.0, L=10, bins=20,
                 mode="received", curve=True, ego=True, hist=True):
    written = {}
    if curve:
        cv = influence_preference_curve(infl, pref, bins)
        p = rd / f"curve_{kind}.csv"
        cv.write_csv(p)
        written["curve"] = p
        written["spearman"] = influence_preference_spearman(infl, pref)
    if ego:
        eg = extract_ego(sp_.train, infl, pref, mode)
        p1, p2 = rd / f"ego_{kind}.csv", rd / f"ego_{kind}.txt"
        eg.write_csv(p1, net.user_ids)
        eg.write_graph(p2, net.user_ids)
        written["ego"] = p1
        written["ego_graph"] = p2
    if hist:
        lists = recommend(sp_.train, hybrid_similarity(pref, infl, alpha, beta), L)
        h = recommended_degree_histogram(lists, sp_.test_matrix, sp_.train, L)
        p = rd / f"degree_hist_{kind}.csv"
        h.write_csv(p)
        written["hist"] = p
        written["low_degree_share"] = h.low_degree_share
    return written


# --------------------------------------------------------------------------
# experiment config and driver


@dataclass
class ExperimentConfig:
    out: str = "run"
    social: str | None = None
    behavior: str | None = None
    synth: dict | None = field(default_factory=lambda: SynthConfig().to_dict())
    thresholds: str | None = None
    ratio: float = 0.9
    seeds: list = field(default_factory=lambda: [0])
    kinds: list = field(default_factory=lambda: ["rwr", "lin", "lout"])
    c: float = DEFAULT_C
    grid: list = field(default_factory=lambda: [0.0, 4.0])
    step: float = 0.2
    L: list = field(default_factory=lambda: [10, 20, 50])
    auc_samples: int = DEFAULT_AUC_SAMPLES
    analysis: dict = field(default_factory=lambda: {
        "bins": 20, "alpha": 0.0, "beta": 1.0, "L": 10, "influence_value": "received"})
    workers: int = 1

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(**d)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def validate(self):
        if (self.social is None) != (self.behavior is None):
            raise ValueError("give both `social` and `behavior`, or neither")
        if self.social is None and self.synth is None:
            raise ValueError("config needs input files or a `synth` section")
        if not self.seeds:
            raise ValueError("config needs at least one split seed")
        for k in self.kinds:
            InfluenceKind(k)
        if self.thresholds is not None:
            PurifyThresholds.parse(self.thresholds)

    def to_dict(self):
        return asdict(self)

    def digest(self):
        d = self.to_dict()
        d.pop("out")
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()


def _load_input(cfg):
    if cfg.social is not None:
        return load_network(cfg.social, cfg.behavior)
    return generate(SynthConfig(**cfg.synth))


def _mean_grid(grids):
    """Seed-averaged grid plus per-entry standard errors."""
    first = grids[0]
    mean = GridResult(first.kind, first.alphas, first.betas, first.L_values, first.seed)
    stderr = {}
    for key, rep in first.reports.items():
        vals = {}
        for metric in ("precision", "recall", "fmeasure", "auc"):
            xs = np.array([getattr(g.reports[key], metric) for g in grids])
            vals[metric] = float(xs.mean())
            stderr[(key, metric)] = float(xs.std(ddof=1) / np.sqrt(len(xs))) if len(xs) > 1 else 0.0
        mean.reports[key] = type(rep)(**{**asdict(rep), **vals, "seed": -1})
    return mean, stderr


def run_experiment(cfg):
    """Full pipeline; returns the output directory."""
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    dump_json(out / "config.json", cfg.to_dict())
    net = _load_input(cfg)
    if cfg.synth is not None and cfg.social is None:
        save_network(net, out / "input_social.tsv", out / "input_behavior.tsv")
    if cfg.thresholds is not None:
        net = purify(net, PurifyThresholds.parse(cfg.thresholds))
    dump_json(out / "stats.json", asdict(stats(net)))

    a = cfg.analysis
    lo, hi = cfg.grid
    grids = {k: [] for k in cfg.kinds}
    per_seed = {}
    for seed in cfg.seeds:
        sp_ = split(net, cfg.ratio, seed)
        rd = RunDir.create(out / f"seed{seed}", net, sp_, {"config_hash": cfg.digest()})
        written = []
        per_seed[str(seed)] = {}
        for kind in cfg.kinds:
            pref, infl, _ = rd.similarities(sp_, kind, cfg.c)
            g = grid_sweep(sp_, kind, (lo, hi), (lo, hi), cfg.step, cfg.L, cfg.c, cfg.auc_samples,
                           preference=pref, influence_matrix=infl, workers=cfg.workers)
            g.write_csv(rd / f"grid_{kind}.csv")
            g.write_summary(rd / f"summary_{kind}.json")
            written += [rd / f"grid_{kind}.csv", rd / f"summary_{kind}.json"]
            res = run_analysis(rd, net, sp_, pref, infl, kind, a.get("alpha", 0.0), a.get("beta", 1.0),
                               a.get("L", 10), a.get("bins", 20), a.get("influence_value", "received"))
            written += [res[k] for k in ("curve", "ego", "ego_graph", "hist")]
            per_seed[str(seed)][kind] = {"spearman": res["spearman"],
                                         "low_degree_share": res["low_degree_share"]}
            grids[kind].append(g)
        rd.record_outputs(*written, stage="run")

    summary = {"config_hash": cfg.digest(), "seeds": list(cfg.seeds), "methods": {},
               "analysis": per_seed}
    for kind, gs in grids.items():
        mean, stderr = _mean_grid(gs)
        mean.write_csv(out / f"grid_{kind}.csv")
        s = mean.summary()
        for metric in ("precision", "recall", "fmeasure"):
            for L, entry in s[metric].items():
                entry["stderr"] = stderr[((entry["alpha"], entry["beta"], int(L)), metric)]
        if s["auc"] is not None:
            e = s["auc"]
            e["stderr"] = stderr[((e["alpha"], e["beta"], mean.L_values[0]), "auc")]
        summary["methods"][kind] = s
    dump_json(out / "summary.json", summary)

    outputs = sorted(p for p in out.rglob("*") if p.is_file() and p.name != MANIFEST
                     and "cache" not in p.relative_to(out).parts)
    dump_json(out / MANIFEST, {
        "config_hash": cfg.digest(),
        "seeds": list(cfg.seeds),
        "versions": versions(),
        "files": {str(p.relative_to(out)): file_hash(p) for p in outputs},
    })
    return out
