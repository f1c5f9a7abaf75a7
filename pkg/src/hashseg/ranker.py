"""Pairwise neural ranking models and their training loop.

Three ranking variants share a small feedforward network (three hidden layers
of eight tanh units, one linear output):

* concatenated-pair regression trained with mean squared error against the
  gold comparison score;
* a shared-parameter pointwise scorer trained with a margin ranking loss on
  score differences;
* an adaptive multi-task variant of either, where a sigmoid classifier on
  hashtag features predicts the probability the hashtag is multi-word and
  that probability gates a blend of the GL and KN feature subsets before the
  ranking network.

Everything is plain numpy with hand-written backpropagation so analytic
gradients can be verified against finite differences.  Training is fully
deterministic given the seed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .candidates import CandidateSet
from .features import CandidateFeatures, FeatureBundle, FeatureLayout
from .gold import GoldEntry, gold_pair_score

MODE_MSE = "mse"
MODE_MR = "mr"
MODE_MSE_MT = "mse-mt"
MODE_MR_MT = "mr-mt"
MODES = (MODE_MSE, MODE_MR, MODE_MSE_MT, MODE_MR_MT)

HIDDEN_SIZES = (8, 8, 8)
GATE_HIDDEN_SIZES = (8,)
_BCE_EPS = 1e-7


class LayoutMismatchError(ValueError):
    pass


def _check_layout(model: "RankerModel", layout: FeatureLayout | None):
    if layout is not None and layout.hash != model.layout.hash:
        raise LayoutMismatchError("feature layout hash mismatch")


# ---------------------------------------------------------------------------
# network


class MLP:
    """Feedforward net: tanh hidden layers, linear or sigmoid output."""

    def __init__(self, sizes: Sequence[int], rng=None, out: str = "linear"):
        self.sizes = tuple(sizes)
        self.out = out
        self.weights: list[np.ndarray] = []
        self.biases: list[np.ndarray] = []
        if rng is not None:
            for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
                bound = 1.0 / np.sqrt(fan_in)
                self.weights.append(rng.uniform(-bound, bound, (fan_out, fan_in)))
                self.biases.append(rng.uniform(-bound, bound, fan_out))

    def params(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out.append(w)
            out.append(b)
        return out

    def forward(self, x: np.ndarray, dropout: float = 0.0, rng=None):
        """Returns (outputs (B,), cache).  Dropout applies to hidden layers only."""
        a = x
        acts = [x]
        tanhs = []
        masks = []
        n_hidden = len(self.weights) - 1
        for i in range(n_hidden):
            z = a @ self.weights[i].T + self.biases[i]
            t = np.tanh(z)
            tanhs.append(t)
            if dropout > 0.0 and rng is not None:
                mask = (rng.random(t.shape) >= dropout) / (1.0 - dropout)
                masks.append(mask)
                a = t * mask
            else:
                masks.append(None)
                a = t
            acts.append(a)
        z = a @ self.weights[-1].T + self.biases[-1]
        if self.out == "sigmoid":
            y = 1.0 / (1.0 + np.exp(-z))
        else:
            y = z
        cache = (acts, tanhs, masks, y)
        return y[:, 0], cache

    def backward(self, cache, dy: np.ndarray):
        """Gradient of a scalar loss given d(loss)/d(outputs); returns (grads, dx)."""
        acts, tanhs, masks, y = cache
        g = dy[:, None]
        if self.out == "sigmoid":
            g = g * y * (1.0 - y)
        grads: list[np.ndarray] = [None] * (2 * len(self.weights))
        grads[-2] = g.T @ acts[-1]
        grads[-1] = g.sum(axis=0)
        da = g @ self.weights[-1]
        for i in range(len(self.weights) - 2, -1, -1):
            if masks[i] is not None:
                da = da * masks[i]
            dz = da * (1.0 - tanhs[i] ** 2)
            grads[2 * i] = dz.T @ acts[i]
            grads[2 * i + 1] = dz.sum(axis=0)
            da = dz @ self.weights[i]
        return grads, da

    def to_dict(self) -> dict:
        return {
            "sizes": list(self.sizes),
            "out": self.out,
            "weights": [w.tolist() for w in self.weights],
            "biases": [b.tolist() for b in self.biases],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MLP":
        net = cls(d["sizes"], rng=None, out=d["out"])
        net.weights = [np.array(w) for w in d["weights"]]
        net.biases = [np.array(b) for b in d["biases"]]
        return net


class Adam:
    """Adaptive per-parameter-learning-rate gradient descent."""

    def __init__(self, params: list[np.ndarray], lr: float,
                 betas=(0.9, 0.999), eps: float = 1e-8):
        self.lr = lr
        self.b1, self.b2 = betas
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]):
        self.t += 1
        b1t = 1.0 - self.b1 ** self.t
        b2t = 1.0 - self.b2 ** self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.b1
            m += (1.0 - self.b1) * g
            v *= self.b2
            v += (1.0 - self.b2) * g * g
            p -= self.lr * (m / b1t) / (np.sqrt(v / b2t) + self.eps)


@dataclass
class Scaler:
    """Z-score standardization; boolean features pass through unchanged."""

    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, x: np.ndarray, bool_mask: np.ndarray) -> "Scaler":
        mean = x.mean(axis=0)
        std = x.std(axis=0)
        mean[bool_mask] = 0.0
        std[bool_mask] = 1.0
        std[std < 1e-12] = 1.0
        return cls(mean=mean, std=std)

    @classmethod
    def identity(cls, dim: int) -> "Scaler":
        return cls(mean=np.zeros(dim), std=np.ones(dim))

    def transform(self, x: np.ndarray) -> np.ndarray:
        return (x - self.mean) / self.std


# ---------------------------------------------------------------------------
# losses


def loss_mse(predictions, targets) -> float:
    predictions = np.asarray(predictions, dtype=float)
    targets = np.asarray(targets, dtype=float)
    if predictions.size == 0:
        raise ValueError("empty input to loss_mse")
    if predictions.shape != targets.shape:
        raise ValueError("predictions and targets differ in length")
    return float(np.mean((predictions - targets) ** 2))


def loss_margin(scores_a, scores_b, labels) -> float:
    scores_a = np.asarray(scores_a, dtype=float)
    scores_b = np.asarray(scores_b, dtype=float)
    labels = np.asarray(labels, dtype=float)
    if scores_a.size == 0:
        raise ValueError("empty input to loss_margin")
    terms = np.maximum(0.0, 1.0 - labels * (scores_a - scores_b))
    return float(np.mean(terms))


def loss_bce(values, labels) -> float:
    values = np.asarray(values, dtype=float)
    labels = np.asarray(labels, dtype=float)
    if values.size == 0:
        raise ValueError("empty input to loss_bce")
    if np.any(values < 0.0) or np.any(values > 1.0):
        raise ValueError("gating values outside (0,1)")
    w = np.clip(values, _BCE_EPS, 1.0 - _BCE_EPS)
    return float(-np.mean(labels * np.log(w) + (1.0 - labels) * np.log(1.0 - w)))


def loss_multitask(loss_rank: float, loss_aux: float,
                   lambda_rank: float = 1.0, lambda_aux: float = 1.0) -> float:
    if lambda_rank <= 0 or lambda_aux <= 0:
        raise ValueError("loss weights must be positive")
    return lambda_rank * loss_rank + lambda_aux * loss_aux


# ---------------------------------------------------------------------------
# training data


@dataclass
class TrainConfig:
    mode: str = MODE_MSE_MT
    epochs: int = 100
    lr_ranker: float = 0.01
    lr_classifier: float = 0.05
    dropout: float = 0.5
    lambda_rank: float = 1.0
    lambda_aux: float = 1.0
    k: int = 10
    seed: int = 0
    ordered_pairs: bool = True

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode: {self.mode!r}")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must be in [0, 1)")
        if self.lambda_rank <= 0 or self.lambda_aux <= 0:
            raise ValueError("loss weights must be positive")


@dataclass
class PairExample:
    """One ordered candidate pair of a hashtag with its gold target."""

    hashtag: str
    h: np.ndarray
    fa: CandidateFeatures
    fb: CandidateFeatures
    target: float
    label: int


def build_training_pairs(
    cand_set: CandidateSet,
    entry: GoldEntry,
    bundle: FeatureBundle,
    ordered: bool = True,
) -> list[PairExample]:
    """All ordered (or unordered) candidate pairs with gold targets.

    Hashtags with fewer than two candidates yield no pairs.
    """
    segs = cand_set.segmentations
    feats = bundle.candidates
    if len(segs) < 2:
        return []
    label = int(entry.is_multiword)
    out = []
    for i in range(len(segs)):
        start = i + 1 if not ordered else 0
        for j in range(start, len(segs)):
            if i == j:
                continue
            out.append(
                PairExample(
                    hashtag=cand_set.hashtag.raw,
                    h=bundle.hashtag_vec,
                    fa=feats[i],
                    fb=feats[j],
                    target=gold_pair_score(segs[i], segs[j], entry),
                    label=label,
                )
            )
    return out


@dataclass
class TrainingBlock:
    """One hashtag's standardized candidate features and pair indices."""

    feats: np.ndarray  # (k, S) standardized full candidate vectors
    h: np.ndarray  # (H,) standardized hashtag vector
    ia: np.ndarray
    ib: np.ndarray
    target: np.ndarray
    label: float


def _group_pairs(pairs: Iterable[PairExample]):
    groups: dict[str, dict] = {}
    for p in pairs:
        g = groups.setdefault(p.hashtag, {"h": p.h, "label": p.label,
                                          "feats": [], "index": {}, "pairs": []})
        for f in (p.fa, p.fb):
            if id(f) not in g["index"]:
                g["index"][id(f)] = len(g["feats"])
                g["feats"].append(f)
        g["pairs"].append((g["index"][id(p.fa)], g["index"][id(p.fb)], p.target))
    return groups


def build_blocks(
    pairs: Iterable[PairExample],
    layout: FeatureLayout,
    scaler_s: Scaler,
    scaler_h: Scaler,
) -> list[TrainingBlock]:
    blocks = []
    for g in _group_pairs(pairs).values():
        fulls = np.stack([f.full for f in g["feats"]])
        ia, ib, targets = zip(*g["pairs"])
        blocks.append(
            TrainingBlock(
                feats=scaler_s.transform(fulls),
                h=scaler_h.transform(np.asarray(g["h"], dtype=float)),
                ia=np.array(ia),
                ib=np.array(ib),
                target=np.array(targets, dtype=float),
                label=float(g["label"]),
            )
        )
    return blocks


# ---------------------------------------------------------------------------
# model


@dataclass
class RankerModel:
    """Trained ranking network(s), gating classifier and feature plumbing."""

    mode: str
    layout: FeatureLayout
    scaler_s: Scaler
    scaler_h: Scaler
    ranker: MLP
    gate: MLP | None = None

    @property
    def layout_hash(self) -> str:
        return self.layout.hash

    @property
    def is_multitask(self) -> bool:
        return self.mode in (MODE_MSE_MT, MODE_MR_MT)

    @property
    def is_pointwise(self) -> bool:
        return self.mode in (MODE_MR, MODE_MR_MT)

    @property
    def pad_dim(self) -> int:
        return max(self.layout.kn_dim, self.layout.gl_dim)

    def standardize(self, feats: CandidateFeatures) -> np.ndarray:
        full = feats.full
        if full.shape[0] != len(self.layout.candidate_names):
            raise LayoutMismatchError("feature layout hash mismatch")
        return self.scaler_s.transform(full)

    def standardize_h(self, h: np.ndarray) -> np.ndarray:
        h = np.asarray(h, dtype=float)
        if h.shape[0] != self.layout.hashtag_dim:
            raise LayoutMismatchError("feature layout hash mismatch")
        return self.scaler_h.transform(h)

    def gate_value(self, h: np.ndarray) -> float:
        y, _ = self.gate.forward(self.standardize_h(h)[None, :])
        return float(y[0])

    def _split_pad(self, feats_std: np.ndarray):
        """Zero-pad the KN and GL slices of standardized rows to a common width."""
        kn_dim = self.layout.kn_dim
        pad = self.pad_dim
        rows = feats_std.shape[0]
        kn = np.zeros((rows, pad))
        gl = np.zeros((rows, pad))
        kn[:, : kn_dim] = feats_std[:, :kn_dim]
        gl[:, : feats_std.shape[1] - kn_dim] = feats_std[:, kn_dim:]
        return kn, gl

    def _pair_inputs(self, feats_std: np.ndarray, ia, ib, w: float | None):
        if self.mode == MODE_MSE:
            return np.hstack([feats_std[ia], feats_std[ib]])
        kn, gl = self._split_pad(feats_std)
        kn_pair = np.hstack([kn[ia], kn[ib]])
        gl_pair = np.hstack([gl[ia], gl[ib]])
        return w * gl_pair + (1.0 - w) * kn_pair

    def _point_inputs(self, feats_std: np.ndarray, w: float | None):
        if self.mode == MODE_MR:
            return feats_std
        kn, gl = self._split_pad(feats_std)
        return w * gl + (1.0 - w) * kn


def _new_model(layout: FeatureLayout, mode: str,
               scaler_s: Scaler, scaler_h: Scaler, rng) -> RankerModel:
    s_dim = len(layout.candidate_names)
    pad = max(layout.kn_dim, layout.gl_dim)
    in_dim = {
        MODE_MSE: 2 * s_dim,
        MODE_MR: s_dim,
        MODE_MSE_MT: 2 * pad,
        MODE_MR_MT: pad,
    }[mode]
    ranker = MLP((in_dim, *HIDDEN_SIZES, 1), rng=rng, out="linear")
    gate = None
    if mode in (MODE_MSE_MT, MODE_MR_MT):
        gate = MLP((layout.hashtag_dim, *GATE_HIDDEN_SIZES, 1), rng=rng, out="sigmoid")
    return RankerModel(mode=mode, layout=layout, scaler_s=scaler_s,
                       scaler_h=scaler_h, ranker=ranker, gate=gate)


# ---------------------------------------------------------------------------
# scoring (inference; dropout off)


def _check_mode(model: "RankerModel", *allowed: str):
    if model.mode not in allowed:
        raise ValueError(f"model mode is {model.mode!r}, expected one of {allowed}")


def score_pair_mse(model: RankerModel, fa: CandidateFeatures, fb: CandidateFeatures,
                   layout: FeatureLayout | None = None) -> float:
    _check_mode(model, MODE_MSE)
    _check_layout(model, layout)
    x = np.concatenate([model.standardize(fa), model.standardize(fb)])[None, :]
    y, _ = model.ranker.forward(x)
    return float(y[0])


def score_pointwise_mr(model: RankerModel, f: CandidateFeatures,
                       layout: FeatureLayout | None = None) -> float:
    _check_mode(model, MODE_MR)
    _check_layout(model, layout)
    y, _ = model.ranker.forward(model.standardize(f)[None, :])
    return float(y[0])


def score_pair_multitask(
    model: RankerModel,
    h: np.ndarray,
    fa: CandidateFeatures,
    fb: CandidateFeatures,
    layout: FeatureLayout | None = None,
    gate_override: float | None = None,
) -> tuple[float, float]:
    """Gated pair score and the gating value w_h.

    ``gate_override`` bypasses the classifier (used to probe the gating
    extremes: 1.0 scores from the GL subset alone, 0.0 from the KN subset).
    """
    _check_mode(model, MODE_MSE_MT)
    _check_layout(model, layout)
    w = model.gate_value(h) if gate_override is None else float(gate_override)
    feats = np.stack([model.standardize(fa), model.standardize(fb)])
    x = model._pair_inputs(feats, np.array([0]), np.array([1]), w)
    y, _ = model.ranker.forward(x)
    return float(y[0]), w


def score_pointwise_multitask(
    model: RankerModel,
    h: np.ndarray,
    f: CandidateFeatures,
    layout: FeatureLayout | None = None,
    gate_override: float | None = None,
) -> tuple[float, float]:
    _check_mode(model, MODE_MR_MT)
    _check_layout(model, layout)
    w = model.gate_value(h) if gate_override is None else float(gate_override)
    x = model._point_inputs(model.standardize(f)[None, :], w)
    y, _ = model.ranker.forward(x)
    return float(y[0]), w


# ---------------------------------------------------------------------------
# loss + gradients (shared by training and the finite-difference checks)


def _bce_scalar_grad(w: float, label: float) -> float:
    if w <= _BCE_EPS or w >= 1.0 - _BCE_EPS:
        return 0.0  # inside the clamp region the loss is flat
    return -label / w + (1.0 - label) / (1.0 - w)


def loss_and_grads(model: RankerModel, block: TrainingBlock, config: TrainConfig,
                   rng=None):
    """Loss and analytic gradients for one hashtag's pair set.

    Returns (loss, ranker_grads, gate_grads); gradient lists align with
    ``MLP.params()``.  Passing ``rng`` enables dropout (training mode).
    Returns None when the block contributes nothing under the mode (margin
    ranking with only tied pairs and no classifier).
    """
    dropout = config.dropout if rng is not None else 0.0
    mode = model.mode
    feats = block.feats
    ia, ib, target = block.ia, block.ib, block.target

    if mode == MODE_MSE:
        x = model._pair_inputs(feats, ia, ib, None)
        y, cache = model.ranker.forward(x, dropout, rng)
        loss = loss_mse(y, target)
        dy = 2.0 * (y - target) / y.size
        grads_r, _ = model.ranker.backward(cache, dy)
        return loss, grads_r, None

    if mode == MODE_MR:
        valid = target != 0.0  # tie pairs carry a constant loss term; excluded
        if not np.any(valid):
            return None
        labels = np.sign(target[valid])
        scores, cache = model.ranker.forward(feats, dropout, rng)
        ia_v, ib_v = ia[valid], ib[valid]
        terms = 1.0 - labels * (scores[ia_v] - scores[ib_v])
        active = terms > 0.0
        m = labels.size
        loss = float(np.sum(np.maximum(0.0, terms)) / m)
        dp = -(labels * active) / m
        ds = np.zeros(scores.size)
        np.add.at(ds, ia_v, dp)
        np.add.at(ds, ib_v, -dp)
        grads_r, _ = model.ranker.backward(cache, ds)
        return loss, grads_r, None

    # multitask modes
    w_arr, gcache = model.gate.forward(block.h[None, :])
    w = float(w_arr[0])
    l_bce = loss_bce([w], [block.label])
    dw_bce = config.lambda_aux * _bce_scalar_grad(w, block.label)

    if mode == MODE_MSE_MT:
        kn, gl = model._split_pad(feats)
        kn_pair = np.hstack([kn[ia], kn[ib]])
        gl_pair = np.hstack([gl[ia], gl[ib]])
        x = w * gl_pair + (1.0 - w) * kn_pair
        y, cache = model.ranker.forward(x, dropout, rng)
        l_rank = loss_mse(y, target)
        dy = config.lambda_rank * 2.0 * (y - target) / y.size
        grads_r, dx = model.ranker.backward(cache, dy)
        dw = float(np.sum(dx * (gl_pair - kn_pair))) + dw_bce
    else:  # MODE_MR_MT
        kn, gl = model._split_pad(feats)
        z = w * gl + (1.0 - w) * kn
        scores, cache = model.ranker.forward(z, dropout, rng)
        valid = target != 0.0
        if np.any(valid):
            labels = np.sign(target[valid])
            ia_v, ib_v = ia[valid], ib[valid]
            terms = 1.0 - labels * (scores[ia_v] - scores[ib_v])
            active = terms > 0.0
            m = labels.size
            l_rank = float(np.sum(np.maximum(0.0, terms)) / m)
            dp = -config.lambda_rank * (labels * active) / m
            ds = np.zeros(scores.size)
            np.add.at(ds, ia_v, dp)
            np.add.at(ds, ib_v, -dp)
        else:
            l_rank = 0.0
            ds = np.zeros(scores.size)
        grads_r, dz = model.ranker.backward(cache, ds)
        dw = float(np.sum(dz * (gl - kn))) + dw_bce

    loss = loss_multitask(l_rank, l_bce, config.lambda_rank, config.lambda_aux)
    grads_g, _ = model.gate.backward(gcache, np.array([dw]))
    return loss, grads_r, grads_g


# ---------------------------------------------------------------------------
# training


def fit_scalers(pairs: Sequence[PairExample], layout: FeatureLayout):
    groups = _group_pairs(pairs)
    cand_rows = np.vstack([f.full for g in groups.values() for f in g["feats"]])
    h_rows = np.stack([np.asarray(g["h"], dtype=float) for g in groups.values()])
    scaler_s = Scaler.fit(cand_rows, layout.candidate_bool_mask())
    scaler_h = Scaler.fit(h_rows, layout.hashtag_bool_mask())
    return scaler_s, scaler_h


def train(pairs: Sequence[PairExample], config: TrainConfig,
          layout: FeatureLayout | None = None) -> RankerModel:
    """Train a ranking model on hashtag pair sets.

    One hashtag's pair set per update step; hashtags are reshuffled each
    epoch with the seeded generator.  Fully deterministic given the seed.
    """
    pairs = list(pairs)
    if not pairs:
        raise ValueError("empty training set")
    if layout is None:
        layout = FeatureLayout()
    scaler_s, scaler_h = fit_scalers(pairs, layout)
    blocks = build_blocks(pairs, layout, scaler_s, scaler_h)

    rng = np.random.default_rng(config.seed)
    model = _new_model(layout, config.mode, scaler_s, scaler_h, rng)
    opt_r = Adam(model.ranker.params(), lr=config.lr_ranker)
    opt_g = Adam(model.gate.params(), lr=config.lr_classifier) if model.gate else None

    for epoch in range(config.epochs):
        for i in rng.permutation(len(blocks)):
            result = loss_and_grads(model, blocks[i], config, rng=rng)
            if result is None:
                continue
            loss, grads_r, grads_g = result
            if not np.isfinite(loss):
                raise RuntimeError(
                    f"non-finite loss at epoch {epoch} on block {i}: {loss}"
                )
            opt_r.step(model.ranker.params(), grads_r)
            if grads_g is not None:
                opt_g.step(model.gate.params(), grads_g)
    return model


# ---------------------------------------------------------------------------
# checkpoints


def save_model(model: RankerModel, path) -> None:
    doc = {
        "format": 1,
        "mode": model.mode,
        "layout": model.layout.to_dict(),
        "layout_hash": model.layout_hash,
        "scaler_s": {"mean": model.scaler_s.mean.tolist(), "std": model.scaler_s.std.tolist()},
        "scaler_h": {"mean": model.scaler_h.mean.tolist(), "std": model.scaler_h.std.tolist()},
        "ranker": model.ranker.to_dict(),
        "gate": model.gate.to_dict() if model.gate else None,
    }
    with open(path, "w", encoding="utf-8") as f:
        json.dump(doc, f, sort_keys=True, separators=(",", ":"))
        f.write("\n")


def load_model(path) -> RankerModel:
    with open(path, encoding="utf-8") as f:
        doc = json.load(f)
    if doc.get("format") != 1:
        raise ValueError(f"unsupported model format in {path}")
    layout = FeatureLayout.from_dict(doc["layout"])
    if layout.hash != doc["layout_hash"]:
        raise LayoutMismatchError("feature layout hash mismatch")
    model = RankerModel(
        mode=doc["mode"],
        layout=layout,
        scaler_s=Scaler(np.array(doc["scaler_s"]["mean"]), np.array(doc["scaler_s"]["std"])),
        scaler_h=Scaler(np.array(doc["scaler_h"]["mean"]), np.array(doc["scaler_h"]["std"])),
        ranker=MLP.from_dict(doc["ranker"]),
        gate=MLP.from_dict(doc["gate"]) if doc["gate"] else None,
    )
    return model
