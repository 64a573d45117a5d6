"""Prediction engine: sparse text features and a linear max-margin classifier.

``train`` fits a feature space (token-norm unigrams and bigrams plus POS
bigrams, minimum document frequency 2) and minimizes L2-regularized hinge
loss with a deterministic, seeded stochastic subgradient descent
(step size 1/(lambda*t)).  ``distant_train`` is the same thing with labels
produced by a pattern group instead of human annotation.

Class imbalance is handled by scaling positive-class updates; the default
weight is the negative/positive count ratio.

Feature vectors are sublinear-tf * idf, L2-normalized, so every non-empty
document has unit norm.  Models are immutable after training and safe for
concurrent prediction.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from random import Random
from typing import Mapping, Sequence

import numpy as np

from .linguistics import Document
from .pattern import PatternGroup, group_label

MIN_DOCUMENT_FREQUENCY = 2


@dataclass(frozen=True)
class SvmParams:
    regularization: float = 1e-4
    epochs: int = 20
    class_weight_positive: float | None = None  # None = negative/positive ratio
    seed: int = 0


def _doc_features(doc: Document) -> list[str]:
    norms = [t.norm for t in doc.tokens]
    tags = [t.pos for t in doc.tokens]
    feats = [f"u:{n}" for n in norms]
    feats += [f"b:{a} {b}" for a, b in zip(norms, norms[1:])]
    feats += [f"p:{a} {b}" for a, b in zip(tags, tags[1:])]
    return feats


class FeatureSpace:
    """Fitted vocabulary with smoothed inverse document frequencies."""

    def __init__(self, vocabulary: dict[str, int], idf: np.ndarray,
                 document_frequency: np.ndarray | None = None, fitted_on: int = 0):
        self.vocabulary = vocabulary
        self.idf = idf
        self.document_frequency = document_frequency
        self.fitted_on = fitted_on

    @staticmethod
    def fit(docs: Sequence[Document], min_df: int = MIN_DOCUMENT_FREQUENCY) -> "FeatureSpace":
        df: Counter = Counter()
        for doc in docs:
            df.update(set(_doc_features(doc)))
        kept = sorted(f for f, c in df.items() if c >= min_df)
        vocabulary = {f: i for i, f in enumerate(kept)}
        counts = np.array([df[f] for f in kept], dtype=np.float64)
        n = len(docs)
        idf = np.log((1.0 + n) / (1.0 + counts)) + 1.0
        return FeatureSpace(vocabulary, idf, counts, n)

    def __len__(self) -> int:
        return len(self.vocabulary)

    def vectorize(self, doc: Document) -> tuple[np.ndarray, np.ndarray]:
        """Sparse (indices, values) of the sublinear-tf*idf, L2-normalized vector."""
        counts = Counter(_doc_features(doc))
        idx = []
        val = []
        for feat, tf in counts.items():
            j = self.vocabulary.get(feat)
            if j is not None:
                idx.append(j)
                val.append((1.0 + math.log(tf)) * self.idf[j])
        if not idx:
            return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.float64)
        order = np.argsort(np.array(idx))
        indices = np.array(idx, dtype=np.int64)[order]
        values = np.array(val, dtype=np.float64)[order]
        values /= np.linalg.norm(values)
        return indices, values


def featurize(doc: Document, space: FeatureSpace) -> dict[int, float]:
    """Sparse feature vector as {column index: value}; unseen features drop out."""
    idx, val = space.vectorize(doc)
    return {int(j): float(v) for j, v in zip(idx, val)}


@dataclass(frozen=True)
class LinearModel:
    weights: np.ndarray
    bias: float
    space: FeatureSpace
    params: SvmParams
    class_weight_positive: float

    def decision(self, doc: Document) -> float:
        idx, val = self.space.vectorize(doc)
        if idx.size == 0:
            return self.bias
        return float(self.weights[idx] @ val + self.bias)


def train(examples: Sequence[tuple[Document, bool]], params: SvmParams = SvmParams()) -> LinearModel:
    """Fit the feature space on the training documents, then run seeded
    stochastic subgradient descent on the weighted hinge objective."""
    n_pos = sum(1 for _, y in examples if y)
    n_neg = len(examples) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("training requires at least one positive and one negative example")
    space = FeatureSpace.fit([d for d, _ in examples])
    xs = [space.vectorize(d) for d, _ in examples]
    ys = np.array([1.0 if y else -1.0 for _, y in examples])
    c_pos = params.class_weight_positive if params.class_weight_positive is not None else n_neg / n_pos
    cs = np.where(ys > 0, c_pos, 1.0)

    lam = params.regularization
    w = np.zeros(len(space))
    scale = 1.0
    bias = 0.0
    t = 1
    rng = Random(params.seed)
    order = list(range(len(examples)))
    for _ in range(params.epochs):
        rng.shuffle(order)
        for i in order:
            t += 1
            eta = 1.0 / (lam * t)
            idx, val = xs[i]
            margin = ys[i] * (scale * (w[idx] @ val) + bias) if idx.size else ys[i] * bias
            scale *= 1.0 - eta * lam
            if margin < 1.0:
                coef = eta * cs[i] * ys[i]
                if idx.size:
                    w[idx] += (coef / scale) * val
                bias += coef
            if scale < 1e-9:
                w *= scale
                scale = 1.0
    return LinearModel(weights=w * scale, bias=bias, space=space, params=params, class_weight_positive=c_pos)


def predict(model: LinearModel, doc: Document) -> bool:
    return model.decision(doc) > 0.0


def hinge_objective(
    weights: np.ndarray,
    bias: float,
    examples: Sequence[tuple[Document, bool]],
    space: FeatureSpace,
    lam: float,
    class_weight_positive: float,
) -> float:
    """Full-dataset value of the weighted, L2-regularized hinge objective."""
    total = 0.0
    for doc, y in examples:
        idx, val = space.vectorize(doc)
        margin = (weights[idx] @ val + bias if idx.size else bias) * (1.0 if y else -1.0)
        weight = class_weight_positive if y else 1.0
        total += weight * max(0.0, 1.0 - margin)
    return 0.5 * lam * float(weights @ weights) + total / len(examples)


def distant_train(
    unlabeled: Sequence[Document],
    group: PatternGroup,
    params: SvmParams = SvmParams(),
) -> LinearModel:
    """Label every document with the pattern group, then train on the noisy
    labels.  Definitionally equivalent to ``train(zip(docs, group_label))``."""
    if not unlabeled:
        raise ValueError("distant_train requires a non-empty document list")
    if not group.patterns:
        raise ValueError("distant_train requires a non-empty pattern group")
    labels = [group_label(group, d) for d in unlabeled]
    if all(labels) or not any(labels):
        raise ValueError(
            "the pattern group labeled every document the same way; "
            "distant training needs a group with both matching and non-matching reviews"
        )
    return train(list(zip(unlabeled, labels)), params)


# ---------------------------------------------------------------------------
# persistence


def save_model(model: LinearModel, path: str | Path) -> None:
    payload = {
        "vocabulary": model.space.vocabulary,
        "idf": model.space.idf.tolist(),
        "weights": model.weights.tolist(),
        "bias": model.bias,
        "hyperparameters": {
            "lambda": model.params.regularization,
            "epochs": model.params.epochs,
            "class_weight_positive": model.class_weight_positive,
            "seed": model.params.seed,
        },
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True)
        fh.write("\n")


def load_model(path: str | Path) -> LinearModel:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    space = FeatureSpace(
        vocabulary={k: int(v) for k, v in payload["vocabulary"].items()},
        idf=np.array(payload["idf"], dtype=np.float64),
    )
    hp = payload["hyperparameters"]
    params = SvmParams(
        regularization=hp["lambda"],
        epochs=hp["epochs"],
        class_weight_positive=hp["class_weight_positive"],
        seed=hp["seed"],
    )
    return LinearModel(
        weights=np.array(payload["weights"], dtype=np.float64),
        bias=payload["bias"],
        space=space,
        params=params,
        class_weight_positive=hp["class_weight_positive"],
    )
