"""Classification heads, losses, adaptive task weighting, and training loops.

The interaction head reads the fused feature (7d, or 5d when feature
transfer is off); the trajectory head (2 x 4d) is shared between both
trajectory branches. Joint training combines the two binary
cross-entropies either with fixed unit weights or with the adaptive
scheme L_inter/(2*c1^2) + L_tra/(2*c2^2) + log(1+c1^2) + log(1+c2^2),
where c1 and c2 are learnable scalars initialized to 1.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, fields as dataclass_fields, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .backbone import get_backbone
from .dataset import LabeledExample, LabeledTriple, decompose_candidate
from .encoder import ArBertEncoder, ContextOverflowError
from .fusion import (
    FrozenTrajectoryExtractor,
    cross_attention_backward,
    cross_attention_forward,
    fuse,
    gate_backward,
    gate_forward,
)
from .ingest import CandidateQuadruple

PROB_EPS = 1e-7
C_MIN = 1e-3


class TrainingDiverged(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# Config

@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 5e-5
    optimizer: str = "adamw"
    batch_size: int = 16
    max_epochs: int = 10
    patience: int = 3
    seed: int = 0
    ft: bool = True
    mt: bool = True
    aw: bool = True
    fusion_mode: str = "gated"
    attention_norm: str = "softmax"
    cross_attention: str = "joint"
    backbone: str = "deterministic-stub"
    hidden_size: int = 4
    max_tokens: int = 512
    weights_path: str | None = None
    weight_decay: float = 0.01
    mlp_hidden: int | None = None
    threshold: float = 0.5
    frozen_checkpoint: str | None = None

    def __post_init__(self):
        for name in ("learning_rate", "batch_size", "max_epochs", "hidden_size",
                     "max_tokens"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.fusion_mode not in ("gated", "concat", "off"):
            raise ValueError(f"unknown fusion_mode {self.fusion_mode!r}")
        if self.optimizer != "adamw":
            raise ValueError(f"unknown optimizer {self.optimizer!r}")

    def resolved(self) -> "TrainConfig":
        """Normalize the ft flag against fusion_mode (off <=> no feature transfer)."""
        if not self.ft and self.fusion_mode != "off":
            return replace(self, fusion_mode="off")
        if self.fusion_mode == "off" and self.ft:
            return replace(self, ft=False)
        return self

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in dataclass_fields(self)}

    def config_hash(self) -> str:
        return hashlib.sha256(
            json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()[:12]


def _coerce(value: str, target_type):
    text = value.strip()
    if text.lower() in {"none", "null"}:
        return None
    if target_type is bool:
        if text.lower() in {"true", "1", "yes", "on"}:
            return True
        if text.lower() in {"false", "0", "no", "off"}:
            return False
        raise ValueError(f"cannot parse boolean from {text!r}")
    if target_type is int:
        return int(text)
    if target_type is float:
        return float(text)
    return text


def load_config(path: str | Path, **overrides) -> TrainConfig:
    """Parse a ``key = value`` config file into a TrainConfig."""
    types = {"learning_rate": float, "batch_size": int, "max_epochs": int,
             "patience": int, "seed": int, "ft": bool, "mt": bool, "aw": bool,
             "hidden_size": int, "max_tokens": int, "weight_decay": float,
             "mlp_hidden": int, "threshold": float}
    values: dict = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.split("#", 1)[0].strip()
            if not stripped:
                continue
            if "=" not in stripped:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            key, _, value = stripped.partition("=")
            key = key.strip()
            values[key] = _coerce(value, types.get(key, str))
    values.update(overrides)
    return TrainConfig(**values)


# ---------------------------------------------------------------------------
# Losses

def _check_labels(labels: np.ndarray) -> None:
    bad = set(np.unique(labels)) - {0, 1}
    if bad:
        raise ValueError(f"labels outside {{0,1}}: {sorted(bad)}")


def binary_cross_entropy(probs: np.ndarray, labels: np.ndarray) -> float:
    probs = np.asarray(probs, dtype=float)
    labels = np.asarray(labels)
    _check_labels(labels)
    p = np.clip(probs, PROB_EPS, 1.0 - PROB_EPS)
    return float(-np.mean(labels * np.log(p) + (1 - labels) * np.log(1 - p)))


def interaction_loss(probs: np.ndarray, labels: np.ndarray) -> float:
    """Mean binary cross-entropy of the positive-class probabilities."""
    return binary_cross_entropy(probs, labels)


def trajectory_loss(probs1, labels1, probs2, labels2) -> float:
    """Average of the two trajectory-branch cross-entropies."""
    return 0.5 * (binary_cross_entropy(probs1, labels1)
                  + binary_cross_entropy(probs2, labels2))


def multitask_loss(l_inter: float, l_tra: float, c1: float, c2: float) -> float:
    return (l_inter / (2.0 * c1 ** 2) + l_tra / (2.0 * c2 ** 2)
            + math.log1p(c1 ** 2) + math.log1p(c2 ** 2))


def multitask_loss_grad_c(l_inter: float, l_tra: float, c1: float, c2: float):
    """Analytic (dL/dc1, dL/dc2) of the adaptive weighting objective."""
    g1 = -l_inter / c1 ** 3 + 2.0 * c1 / (1.0 + c1 ** 2)
    g2 = -l_tra / c2 ** 3 + 2.0 * c2 / (1.0 + c2 ** 2)
    return g1, g2


def softmax2(logits: np.ndarray) -> np.ndarray:
    shifted = np.exp(logits - logits.max())
    return shifted / shifted.sum()


# ---------------------------------------------------------------------------
# Optimizer

class AdamW:
    """Decoupled-weight-decay adaptive-moment optimizer.

    Biases and the adaptive-weight scalars are exempt from decay; the
    adaptive scalars are clamped to |c| >= 1e-3 after each step.
    """

    def __init__(self, params: dict[str, np.ndarray], lr: float,
                 weight_decay: float = 0.01, betas=(0.9, 0.999), eps: float = 1e-8):
        self.lr = lr
        self.weight_decay = weight_decay
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.t = 0
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}

    @staticmethod
    def _decay_exempt(name: str) -> bool:
        return name.endswith(".b") or name == "c"

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        bc1 = 1.0 - self.beta1 ** self.t
        bc2 = 1.0 - self.beta2 ** self.t
        for name, p in params.items():
            g = grads[name]
            self.m[name] = self.beta1 * self.m[name] + (1 - self.beta1) * g
            self.v[name] = self.beta2 * self.v[name] + (1 - self.beta2) * g * g
            m_hat = self.m[name] / bc1
            v_hat = self.v[name] / bc2
            update = m_hat / (np.sqrt(v_hat) + self.eps)
            if not self._decay_exempt(name):
                update = update + self.weight_decay * p
            p -= self.lr * update
        if "c" in params:
            c = params["c"]
            np.copyto(c, np.sign(c) * np.maximum(np.abs(c), C_MIN))


# ---------------------------------------------------------------------------
# Interaction model

@dataclass
class Prediction:
    candidate: CandidateQuadruple
    score: float | None
    label: int | None
    skipped: bool = False
    reason: str | None = None


class InteractionModel:
    """Trainable encoder + feature transfer + classification heads."""

    def __init__(self, config: TrainConfig,
                 frozen: FrozenTrajectoryExtractor | None = None):
        config = config.resolved()
        self.config = config
        backbone = get_backbone(config.backbone, hidden_size=config.hidden_size,
                                max_tokens=config.max_tokens,
                                weights_path=config.weights_path)
        self.encoder = ArBertEncoder(backbone, seed=config.seed,
                                     attention_norm=config.attention_norm)
        self.frozen = frozen
        if config.fusion_mode != "off":
            if frozen is None:
                raise ValueError("feature transfer requires a frozen trajectory extractor")
            if frozen.encoder.hidden_size != config.hidden_size:
                raise ValueError(
                    f"frozen extractor d={frozen.encoder.hidden_size} does not match "
                    f"model d={config.hidden_size}")
            if not frozen.frozen:
                raise ValueError("trajectory extractor must be frozen before fusion")

        d = config.hidden_size
        head_in = 7 * d if config.fusion_mode in ("gated", "concat") else 5 * d
        rng = np.random.default_rng(config.seed + 2)
        self.params: dict[str, np.ndarray] = {}
        if config.fusion_mode == "gated":
            self.params["fusion.W_gate"] = rng.normal(0.0, 1.0 / np.sqrt(d), size=(d, d))
            self.params["fusion.W_Q"] = rng.normal(0.0, 1.0 / np.sqrt(5 * d),
                                                   size=(d, 5 * d))
        self.params["head.inter.W"] = rng.normal(0.0, 1.0 / np.sqrt(head_in),
                                                 size=(2, head_in))
        if config.mt:
            self.params["head.tra.W"] = rng.normal(0.0, 1.0 / np.sqrt(4 * d),
                                                   size=(2, 4 * d))
            if config.aw:
                self.params["c"] = np.array([1.0, 1.0])
        self._frozen_feature_cache: dict[tuple, np.ndarray] = {}

    # -- parameters ----------------------------------------------------------
    def all_params(self) -> dict[str, np.ndarray]:
        out = {f"enc.{k}": v for k, v in self.encoder.params.items()}
        out.update(self.params)
        return out

    def set_params(self, arrays: dict[str, np.ndarray]) -> None:
        for k, v in arrays.items():
            if k.startswith("enc."):
                self.encoder.params[k[4:]] = v.copy()
            else:
                self.params[k] = v.copy()

    def snapshot(self) -> dict[str, np.ndarray]:
        return {k: v.copy() for k, v in self.all_params().items()}

    def zero_grads(self) -> dict[str, np.ndarray]:
        return {k: np.zeros_like(v) for k, v in self.all_params().items()}

    # -- forward -------------------------------------------------------------
    def _frozen_features(self, triple) -> np.ndarray:
        key = (triple.segment.segment_id, triple.person.surface,
               triple.person.occurrences, triple.time.occurrences,
               triple.location.occurrences)
        cached = self._frozen_feature_cache.get(key)
        if cached is None:
            cached = self.frozen.features_for(triple)
            self._frozen_feature_cache[key] = cached
        return cached

    def forward_candidate(self, cand: CandidateQuadruple, with_tra: bool = False):
        """Full forward pass; returns (p_inter, p_tra1, p_tra2, cache)."""
        cfg = self.config
        h_inter, cache_inter = self.encoder.forward(cand.segment, cand.entities())
        t1, t2 = decompose_candidate(cand)
        cache: dict = {"inter": cache_inter, "h_inter": h_inter}

        if cfg.fusion_mode == "gated":
            f1 = self._frozen_features(t1)
            f2 = self._frozen_features(t2)
            g1, gc1 = gate_forward(f1, self.params["fusion.W_gate"])
            g2, gc2 = gate_forward(f2, self.params["fusion.W_gate"])
            (a1, a2), xc = cross_attention_forward(
                h_inter, g1, g2, self.params["fusion.W_Q"], mode=cfg.cross_attention)
            h_fused = fuse(h_inter, a1, a2)
            cache.update(gc1=gc1, gc2=gc2, xc=xc)
        elif cfg.fusion_mode == "concat":
            f1 = self._frozen_features(t1)
            f2 = self._frozen_features(t2)
            h_fused = np.concatenate([h_inter, f1, f2])
        else:
            h_fused = h_inter
        cache["h_fused"] = h_fused

        logits = self.params["head.inter.W"] @ h_fused
        p_inter = softmax2(logits)
        cache["p_inter"] = p_inter

        p_tra1 = p_tra2 = None
        if with_tra and cfg.mt:
            for name, triple in (("tra1", t1), ("tra2", t2)):
                entities = (triple.person, triple.time, triple.location)
                h_tra, cache_tra = self.encoder.forward(triple.segment, entities)
                p = softmax2(self.params["head.tra.W"] @ h_tra)
                cache[name] = (h_tra, cache_tra, p)
                if name == "tra1":
                    p_tra1 = p
                else:
                    p_tra2 = p
        return p_inter, p_tra1, p_tra2, cache

    # -- backward ------------------------------------------------------------
    def backward_candidate(self, cache: dict, d_logits_inter: np.ndarray,
                           d_logits_tra: tuple | None,
                           grads: dict[str, np.ndarray]) -> None:
        cfg = self.config
        d = cfg.hidden_size
        h_fused = cache["h_fused"]
        grads["head.inter.W"] += np.outer(d_logits_inter, h_fused)
        d_fused = self.params["head.inter.W"].T @ d_logits_inter

        if cfg.fusion_mode == "gated":
            d_h_inter = d_fused[:5 * d].copy()
            d_a1 = d_fused[5 * d:6 * d]
            d_a2 = d_fused[6 * d:7 * d]
            d_wq, d_h_inter_x, d_g1, d_g2 = cross_attention_backward(
                d_a1, d_a2, cache["xc"], self.params["fusion.W_Q"])
            grads["fusion.W_Q"] += d_wq
            d_h_inter += d_h_inter_x
            d_wg1, _ = gate_backward(d_g1, cache["gc1"], self.params["fusion.W_gate"])
            d_wg2, _ = gate_backward(d_g2, cache["gc2"], self.params["fusion.W_gate"])
            grads["fusion.W_gate"] += d_wg1 + d_wg2
        elif cfg.fusion_mode == "concat":
            d_h_inter = d_fused[:5 * d]
        else:
            d_h_inter = d_fused

        enc_grads = {k[4:]: grads[f"enc.{k[4:]}"] for k in grads if k.startswith("enc.")}
        self.encoder.backward(d_h_inter, cache["inter"], enc_grads)

        if d_logits_tra is not None:
            for name, d_logits in zip(("tra1", "tra2"), d_logits_tra):
                h_tra, cache_tra, _ = cache[name]
                grads["head.tra.W"] += np.outer(d_logits, h_tra)
                d_h_tra = self.params["head.tra.W"].T @ d_logits
                self.encoder.backward(d_h_tra, cache_tra, enc_grads)

    # -- persistence ----------------------------------------------------------
    def save(self, path: str | Path, history: list | None = None) -> None:
        arrays = self.all_params()
        meta = {"kind": "interaction-model", "config": self.config.to_dict(),
                "history": history or []}
        if self.frozen is not None:
            arrays = dict(arrays)
            for k, v in self.frozen.all_params().items():
                arrays[f"frozen.{k}"] = v
            meta["frozen_config"] = self.frozen.config
        save_archive(path, arrays, meta)

    @classmethod
    def load(cls, path: str | Path) -> "InteractionModel":
        arrays, meta = load_archive(path)
        if meta.get("kind") != "interaction-model":
            raise ValueError(f"{path} is not an interaction model checkpoint")
        config = TrainConfig(**meta["config"])
        frozen = None
        if "frozen_config" in meta:
            fc = meta["frozen_config"]
            frozen = FrozenTrajectoryExtractor(
                backbone_name=fc["backbone"], hidden_size=fc["hidden_size"],
                max_tokens=fc["max_tokens"], mlp_hidden=fc["mlp_hidden"],
                seed=fc["seed"], attention_norm=fc["attention_norm"],
                weights_path=fc.get("weights_path"))
            frozen.set_params({k[len("frozen."):]: v for k, v in arrays.items()
                               if k.startswith("frozen.")})
            frozen.freeze()
        model = cls(config, frozen=frozen)
        model.set_params({k: v for k, v in arrays.items()
                          if not k.startswith("frozen.")})
        return model


# ---------------------------------------------------------------------------
# Batched objective

def _batch_pass(model: InteractionModel, batch: Sequence[LabeledExample],
                grads: dict[str, np.ndarray] | None):
    """Forward (and optionally backward) one batch; returns loss components."""
    cfg = model.config
    n = len(batch)
    caches = []
    p_inter = np.empty(n)
    y_inter = np.array([ex.y_inter for ex in batch])
    p_tra = np.empty((2, n))
    y_tra = np.array([[ex.y_tra1 for ex in batch], [ex.y_tra2 for ex in batch]])
    for i, ex in enumerate(batch):
        pi, pt1, pt2, cache = model.forward_candidate(ex.candidate, with_tra=cfg.mt)
        p_inter[i] = pi[1]
        if cfg.mt:
            p_tra[0, i] = pt1[1]
            p_tra[1, i] = pt2[1]
        caches.append(cache)

    l_inter = interaction_loss(p_inter, y_inter)
    l_tra = trajectory_loss(p_tra[0], y_tra[0], p_tra[1], y_tra[1]) if cfg.mt else None

    if cfg.mt and cfg.aw:
        c1, c2 = float(model.params["c"][0]), float(model.params["c"][1])
        total = multitask_loss(l_inter, l_tra, c1, c2)
        w_inter, w_tra = 1.0 / (2 * c1 ** 2), 1.0 / (2 * c2 ** 2)
    elif cfg.mt:
        total = l_inter + l_tra
        w_inter, w_tra = 1.0, 1.0
    else:
        total = l_inter
        w_inter, w_tra = 1.0, 0.0

    if grads is not None:
        for i, ex in enumerate(batch):
            cache = caches[i]
            d_logits_inter = (cache["p_inter"] - np.array(
                [1 - ex.y_inter, ex.y_inter])) * (w_inter / n)
            d_logits_tra = None
            if cfg.mt:
                d_logits_tra = tuple(
                    (cache[name][2] - np.array([1 - y, y])) * (w_tra * 0.5 / n)
                    for name, y in (("tra1", ex.y_tra1), ("tra2", ex.y_tra2)))
            model.backward_candidate(cache, d_logits_inter, d_logits_tra, grads)
        if cfg.mt and cfg.aw:
            g1, g2 = multitask_loss_grad_c(l_inter, l_tra, c1, c2)
            grads["c"] += np.array([g1, g2])

    return total, l_inter, l_tra


# ---------------------------------------------------------------------------
# Training loops

@dataclass
class TrainResult:
    history: list[dict] = field(default_factory=list)
    best_epoch: int = -1
    best_val_f1: float | None = None


def _val_f1(model: InteractionModel, examples: Sequence[LabeledExample],
            threshold: float):
    tp = fp = fn = tn = 0
    for ex in examples:
        p, _, _, _ = model.forward_candidate(ex.candidate)
        pred = 1 if p[1] >= threshold else 0
        if pred == 1 and ex.y_inter == 1:
            tp += 1
        elif pred == 1:
            fp += 1
        elif ex.y_inter == 1:
            fn += 1
        else:
            tn += 1
    acc = (tp + tn) / max(1, tp + fp + fn + tn)
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return acc, precision, recall, f1


def train(model: InteractionModel, examples: Sequence[LabeledExample],
          config: TrainConfig | None = None, quiet: bool = True) -> TrainResult:
    """Train on split=='train', early-stop on validation F1, restore the best.

    Deterministic under the config seed and single-worker batch order.
    Aborts with a diagnostic when the objective stops being finite.
    """
    config = (config or model.config).resolved()
    train_set = [ex for ex in examples if ex.split == "train"]
    val_set = [ex for ex in examples if ex.split == "val"]
    if not train_set:
        raise ValueError("no examples with split='train'")

    params = model.all_params()
    optimizer = AdamW(params, lr=config.learning_rate,
                      weight_decay=config.weight_decay)
    rng = np.random.default_rng(config.seed)
    result = TrainResult()
    best_params = model.snapshot()
    best_f1 = -1.0
    stale = 0

    for epoch in range(config.max_epochs):
        order = rng.permutation(len(train_set))
        epoch_loss = epoch_inter = epoch_tra = 0.0
        seen = 0
        for start in range(0, len(order), config.batch_size):
            batch = [train_set[i] for i in order[start:start + config.batch_size]]
            grads = model.zero_grads()
            total, l_inter, l_tra = _batch_pass(model, batch, grads)
            if not math.isfinite(total):
                raise TrainingDiverged(
                    f"non-finite loss {total} at epoch {epoch}, batch offset {start}")
            optimizer.step(params, grads)
            epoch_loss += total * len(batch)
            epoch_inter += l_inter * len(batch)
            epoch_tra += (l_tra or 0.0) * len(batch)
            seen += len(batch)

        entry = {
            "epoch": epoch,
            "loss": epoch_loss / seen,
            "loss_inter": epoch_inter / seen,
            "loss_tra": (epoch_tra / seen) if config.mt else None,
            "c1": float(model.params["c"][0]) if "c" in model.params else None,
            "c2": float(model.params["c"][1]) if "c" in model.params else None,
        }
        if val_set:
            acc, precision, recall, f1 = _val_f1(model, val_set, config.threshold)
            entry.update(val_acc=acc, val_precision=precision, val_recall=recall,
                         val_f1=f1)
            if f1 > best_f1:
                best_f1 = f1
                best_params = model.snapshot()
                result.best_epoch = epoch
                stale = 0
            else:
                stale += 1
        else:
            best_params = model.snapshot()
            result.best_epoch = epoch
        result.history.append(entry)
        if not quiet:
            print(json.dumps(entry))
        if val_set and stale >= config.patience:
            break

    model.set_params(best_params)
    result.best_val_f1 = best_f1 if val_set else None
    return result


def pretrain_trajectory_extractor(corpus: Sequence[LabeledTriple],
                                  config: TrainConfig) -> tuple[FrozenTrajectoryExtractor, list[dict]]:
    """Train the trajectory extractor on labeled triples, then freeze it."""
    if not corpus:
        raise ValueError("empty trajectory corpus")
    extractor = FrozenTrajectoryExtractor(
        backbone_name=config.backbone, hidden_size=config.hidden_size,
        max_tokens=config.max_tokens, mlp_hidden=config.mlp_hidden,
        seed=config.seed, attention_norm=config.attention_norm,
        weights_path=config.weights_path)
    params = extractor.all_params()
    optimizer = AdamW(params, lr=config.learning_rate,
                      weight_decay=config.weight_decay)
    rng = np.random.default_rng(config.seed)
    history: list[dict] = []

    for epoch in range(config.max_epochs):
        order = rng.permutation(len(corpus))
        epoch_loss = 0.0
        for start in range(0, len(order), config.batch_size):
            batch = [corpus[i] for i in order[start:start + config.batch_size]]
            grads = extractor.zero_grads()
            probs = np.empty(len(batch))
            labels = np.array([item.y_tra for item in batch])
            caches = []
            for i, item in enumerate(batch):
                t = item.triple
                p, cache = extractor.forward_train(
                    t.segment, (t.person, t.time, t.location))
                probs[i] = p[1]
                caches.append((p, cache))
            loss = binary_cross_entropy(probs, labels)
            if not math.isfinite(loss):
                raise TrainingDiverged(f"non-finite pretraining loss at epoch {epoch}")
            for (p, cache), y in zip(caches, labels):
                d_logits = (p - np.array([1 - y, y])) / len(batch)
                extractor.backward_train(d_logits, cache, grads)
            optimizer.step(params, grads)
            epoch_loss += loss * len(batch)
        history.append({"epoch": epoch, "loss": epoch_loss / len(corpus)})

    extractor.freeze()
    return extractor, history


# ---------------------------------------------------------------------------
# Prediction

def predict(model: InteractionModel, candidates: Sequence[CandidateQuadruple],
            threshold: float = 0.5) -> list[Prediction]:
    """Score candidates; context overflows are marked skipped, never dropped."""
    out: list[Prediction] = []
    for cand in candidates:
        try:
            p, _, _, _ = model.forward_candidate(cand)
        except ContextOverflowError as exc:
            out.append(Prediction(candidate=cand, score=None, label=None,
                                  skipped=True, reason=str(exc)))
            continue
        score = float(p[1])
        out.append(Prediction(candidate=cand, score=score,
                              label=int(score >= threshold)))
    return out


# ---------------------------------------------------------------------------
# Checkpoint archive: npz with an embedded JSON meta blob

def save_archive(path: str | Path, arrays: dict[str, np.ndarray], meta: dict) -> None:
    payload = dict(arrays)
    meta_bytes = json.dumps(meta, sort_keys=True).encode("utf-8")
    payload["__meta__"] = np.frombuffer(meta_bytes, dtype=np.uint8)
    with open(path, "wb") as fh:
        np.savez(fh, **payload)


def load_archive(path: str | Path) -> tuple[dict[str, np.ndarray], dict]:
    with np.load(path, allow_pickle=False) as npz:
        meta = json.loads(bytes(npz["__meta__"].tobytes()).decode("utf-8"))
        arrays = {k: npz[k] for k in npz.files if k != "__meta__"}
    return arrays, meta
