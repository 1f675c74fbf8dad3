"""Small latent-confounder models whose projection contains bidirected edges.

Every variable has three ordered levels. A child's CPT is a thresholded
linear-Gaussian response: with parent levels mapped to -1, 0, 1 and
``mu = sum_p w_p * level(p)``, level k has probability
``Phi(t_{k+1} - mu) - Phi(t_k - mu)`` with unit noise and thresholds at
``-THRESHOLD`` and ``+THRESHOLD``. Roots are uniform.

model1: X1 -> X2, X3 -> X4, L -> X2, L -> X4          (projection X2 <-> X4)
model2: model1 plus a shared parent S -> X2, S -> X4   (projection X2 <-> X4)
model3: X1 -> X2, X3 -> X4, X5 -> X6,
        L1 -> X2, L1 -> X4, L2 -> X4, L2 -> X6         (X2 <-> X4 <-> X6)
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .graph import MixedGraph, latent_project
from .network import DiscreteNetwork

LEVELS = ("lo", "mid", "hi")
THRESHOLD = 0.5
OBSERVED_WEIGHT = 1.0
LATENT_WEIGHT = 0.9


def graded_cpt(weights: list[float], threshold: float = THRESHOLD) -> np.ndarray:
    """Rows over parent configurations (first parent slowest), three columns."""
    cuts = np.array([-np.inf, -threshold, threshold, np.inf])
    rows = []
    for cfg in itertools.product((-1.0, 0.0, 1.0), repeat=len(weights)):
        mu = float(np.dot(weights, cfg)) if weights else 0.0
        cdf = norm.cdf(cuts - mu)
        rows.append(np.diff(cdf))
    return np.array(rows)


def build(names: list[str], parents: dict[str, list[str]], weights: dict[tuple[str, str], float]) -> DiscreteNetwork:
    idx = {n: i for i, n in enumerate(names)}
    pa, cpts = [], []
    for n in names:
        ps = parents.get(n, [])
        pa.append(tuple(idx[p] for p in ps))
        if ps:
            cpts.append(graded_cpt([weights[(p, n)] for p in ps]))
        else:
            cpts.append(np.full((1, 3), 1 / 3))
    return DiscreteNetwork(tuple(names), tuple(LEVELS for _ in names), tuple(pa), tuple(cpts))


@dataclass(frozen=True)
class ToyModel:
    name: str
    network: DiscreteNetwork
    hidden: tuple[str, ...]
    targets: tuple[tuple[str, str], ...]  # pairs expected to be bidirected

    @property
    def observed(self) -> list[int]:
        return [i for i, n in enumerate(self.network.names) if n not in self.hidden]

    def projection(self) -> MixedGraph:
        return latent_project(self.network.dag(), self.observed)


def _weights(parents: dict[str, list[str]], latent_weight: float, observed_weight: float) -> dict:
    return {(p, c): (latent_weight if p.startswith("L") else observed_weight)
            for c, ps in parents.items() for p in ps}


def model1(latent_weight: float = LATENT_WEIGHT, observed_weight: float = OBSERVED_WEIGHT) -> ToyModel:
    names = ["X1", "X2", "X3", "X4", "L"]
    parents = {"X2": ["X1", "L"], "X4": ["X3", "L"]}
    net = build(names, parents, _weights(parents, latent_weight, observed_weight))
    return ToyModel("model1", net, ("L",), (("X2", "X4"),))


def model2(latent_weight: float = LATENT_WEIGHT, observed_weight: float = OBSERVED_WEIGHT) -> ToyModel:
    names = ["X1", "X2", "X3", "X4", "S", "L"]
    parents = {"X2": ["X1", "S", "L"], "X4": ["X3", "S", "L"]}
    net = build(names, parents, _weights(parents, latent_weight, observed_weight))
    return ToyModel("model2", net, ("L",), (("X2", "X4"),))


def model3(latent_weight: float = LATENT_WEIGHT, observed_weight: float = OBSERVED_WEIGHT) -> ToyModel:
    names = ["X1", "X2", "X3", "X4", "X5", "X6", "L1", "L2"]
    parents = {"X2": ["X1", "L1"], "X4": ["X3", "L1", "L2"], "X6": ["X5", "L2"]}
    net = build(names, parents, _weights(parents, latent_weight, observed_weight))
    return ToyModel("model3", net, ("L1", "L2"), (("X2", "X4"), ("X4", "X6")))


MODELS = {"model1": model1, "model2": model2, "model3": model3}


def target_orientations(model: ToyModel, table, regularizer: str = "fnml") -> dict[tuple[str, str], str]:
    """Best-scoring orientation of each target edge with parents and spouses taken from the projection."""
    from .nml import ORIENTATIONS, ScoreContext, edge_orientation_score

    mag = model.projection()
    if mag.names != table.names:
        raise ValueError("table columns must be the observed variables of the model")
    ctx = ScoreContext(table, regularizer)
    out = {}
    for a, b in model.targets:
        x, y = mag.index(a), mag.index(b)
        px = (mag.parents(x) | mag.spouses(x)) - {y}
        py = (mag.parents(y) | mag.spouses(y)) - {x}
        scores = {o: edge_orientation_score(ctx, x, y, px, py, o) for o in ORIENTATIONS}
        out[(a, b)] = min(ORIENTATIONS, key=lambda o: (scores[o], ORIENTATIONS.index(o)))
    return out
