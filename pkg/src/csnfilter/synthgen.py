"""Synthetic coupled networks with a tunable social -> behavior copying rate."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .network import network_from_raw


class InfeasibleConfig(ValueError):
    pass


@dataclass(frozen=True)
class SynthConfig:
    """``rho`` is the chance an item draw copies from a random followee."""

    n_users: int = 500
    n_items: int = 1000
    mean_out_degree: float = 8.0
    mean_items: float = 12.0
    rho: float = 0.8
    reciprocity: float = 0.3
    seed: int = 0

    def __post_init__(self):
        if self.n_users < 2 or self.n_items < 1:
            raise InfeasibleConfig("need at least 2 users and 1 item")
        if self.mean_out_degree < 1 or self.mean_items < 1:
            raise InfeasibleConfig("mean degrees must be >= 1")
        if self.mean_items > self.n_items:
            raise InfeasibleConfig(
                f"mean_items={self.mean_items} exceeds the {self.n_items} available items")
        if not 0.0 <= self.rho <= 1.0 or not 0.0 <= self.reciprocity <= 1.0:
            raise InfeasibleConfig("rho and reciprocity must lie in [0, 1]")

    def to_dict(self):
        return asdict(self)


def _social_layer(cfg, rng):
    m = cfg.n_users
    core = min(m, max(2, int(round(cfg.mean_out_degree)) + 1))
    out = [set() for _ in range(m)]
    in_deg = np.zeros(m)
    for i in range(core):
        for j in range(core):
            if i != j:
                out[i].add(j)
                in_deg[j] += 1
    for t in range(core, m):
        k = min(t, 1 + rng.poisson(cfg.mean_out_degree - 1))
        w = in_deg[:t] + 1.0
        targets = rng.choice(t, size=k, replace=False, p=w / w.sum())
        for j in targets.tolist():
            out[t].add(j)
            in_deg[j] += 1
            if t not in out[j] and rng.random() < cfg.reciprocity:
                out[j].add(t)
                in_deg[t] += 1
    return [(i, j) for i in range(m) for j in sorted(out[i])]


def _behavior_layer(cfg, followees, rng):
    m, n = cfg.n_users, cfg.n_items
    want = np.minimum(1 + rng.poisson(cfg.mean_items - 1, size=m), n)
    held = [set() for _ in range(m)]
    lists = [[] for _ in range(m)]
    for r in range(int(want.max())):
        for u in rng.permutation(m).tolist():
            if len(held[u]) >= want[u]:
                continue
            pick = None
            if followees[u] and rng.random() < cfg.rho:
                f = followees[u][rng.integers(len(followees[u]))]
                options = [j for j in lists[f] if j not in held[u]]
                if options:
                    pick = options[rng.integers(len(options))]
            while pick is None:
                j = int(rng.integers(n))
                if j not in held[u]:
                    pick = j
            held[u].add(pick)
            lists[u].append(pick)
    return [(u, j) for u in range(m) for j in sorted(held[u])]


def generate(cfg):
    """Directed preferential-attachment social layer plus copied/uniform items.

    Every user gets at least one out-link. Items nobody collected are not part
    of the returned network; ``item_ids`` keeps the generator's item labels.
    """
    rng = np.random.default_rng(cfg.seed)
    social = _social_layer(cfg, rng)
    followees = [[] for _ in range(cfg.n_users)]
    for i, j in social:
        followees[i].append(j)
    behavior = _behavior_layer(cfg, followees, rng)
    return network_from_raw(np.array(social), np.array(behavior),
                            extra_users=np.arange(cfg.n_users))
