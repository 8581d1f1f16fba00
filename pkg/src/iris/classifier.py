"""Trainable classification stage.

Two independent ReLU projection heads encode the implicit and explicit
rationale embeddings; their concatenation feeds a linear softmax layer
that predicts a stance per rationale.  Training minimizes a stance
cross-entropy on the soft-vote mean over relevant rationales plus the
rationale-usefulness reward/punish term, whose only gradient path into
the (frozen) ranking stage is the per-class score calibration.  All
gradients are derived by hand and applied with Adam; inference uses a
hard majority vote with a neutral fallback.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .core import StanceLabel
from .errors import IrisError
from .ranking import Calibration, softmax3
from .selection import RelevanceGroup, RelevanceVerdict

__all__ = [
    "VoteMode",
    "ClassifierParams",
    "RationaleInput",
    "EncodedSample",
    "RationalePrediction",
    "TrainConfig",
    "LossBreakdown",
    "AdamState",
    "forward_rationale",
    "stance_loss",
    "reward_multiplier",
    "reward_punish_loss",
    "batch_loss",
    "batch_gradients",
    "backward_and_step",
    "majority_vote",
    "predict_stance",
    "train",
]

PROB_FLOOR = 1e-12

_CHECKPOINT_MAGIC = b"IRISPRM1"


class VoteMode(Enum):
    """Which rationale predictions enter the majority vote."""

    RELEVANT_EXPLICIT = "relevant-explicit"
    ALL_EXPLICIT = "all-explicit"


@dataclass
class ClassifierParams:
    """All trainable parameters, including the shared ranking calibration."""

    w_imp: np.ndarray
    b_imp: np.ndarray
    w_exp: np.ndarray
    b_exp: np.ndarray
    w_out: np.ndarray
    b_out: np.ndarray
    calibration: Calibration
    seed: int = 0

    @property
    def d_e(self) -> int:
        return self.w_imp.shape[0]

    @property
    def d_d(self) -> int:
        return self.w_imp.shape[1]

    @classmethod
    def init(
        cls,
        d_e: int,
        d_d: int = 128,
        seed: int = 0,
        calibration_trainable: bool = True,
    ) -> "ClassifierParams":
        """He-initialized projections, Glorot output layer, zero biases."""
        rng = np.random.default_rng(seed)
        he = np.sqrt(2.0 / d_e)
        glorot = np.sqrt(6.0 / (2 * d_d + 3))
        return cls(
            w_imp=rng.normal(0.0, he, size=(d_e, d_d)),
            b_imp=np.zeros(d_d),
            w_exp=rng.normal(0.0, he, size=(d_e, d_d)),
            b_exp=np.zeros(d_d),
            w_out=rng.uniform(-glorot, glorot, size=(2 * d_d, 3)),
            b_out=np.zeros(3),
            calibration=Calibration.identity(trainable=calibration_trainable),
            seed=seed,
        )

    @classmethod
    def zeros(cls, d_e: int, d_d: int) -> "ClassifierParams":
        return cls(
            w_imp=np.zeros((d_e, d_d)), b_imp=np.zeros(d_d),
            w_exp=np.zeros((d_e, d_d)), b_exp=np.zeros(d_d),
            w_out=np.zeros((2 * d_d, 3)), b_out=np.zeros(3),
            calibration=Calibration.identity(),
        )

    def blocks(self) -> dict[str, np.ndarray]:
        """Named views of every parameter array, in a fixed order."""
        out = {
            "w_imp": self.w_imp, "b_imp": self.b_imp,
            "w_exp": self.w_exp, "b_exp": self.b_exp,
            "w_out": self.w_out, "b_out": self.b_out,
        }
        if self.calibration.trainable:
            out["cal_scale"] = self.calibration.scale
            out["cal_bias"] = self.calibration.bias
        return out

    def copy(self) -> "ClassifierParams":
        return ClassifierParams(
            w_imp=self.w_imp.copy(), b_imp=self.b_imp.copy(),
            w_exp=self.w_exp.copy(), b_exp=self.b_exp.copy(),
            w_out=self.w_out.copy(), b_out=self.b_out.copy(),
            calibration=self.calibration.copy(),
            seed=self.seed,
        )

    def save(self, path: str | Path) -> None:
        """Versioned binary checkpoint: JSON header + raw float64 blocks."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        arrays = {
            "w_imp": self.w_imp, "b_imp": self.b_imp,
            "w_exp": self.w_exp, "b_exp": self.b_exp,
            "w_out": self.w_out, "b_out": self.b_out,
            "cal_scale": self.calibration.scale,
            "cal_bias": self.calibration.bias,
        }
        header = {
            "version": 1,
            "d_e": self.d_e,
            "d_d": self.d_d,
            "seed": self.seed,
            "calibration_trainable": self.calibration.trainable,
            "blocks": [{"name": k, "shape": list(v.shape)}
                       for k, v in arrays.items()],
        }
        header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
        with path.open("wb") as fh:
            fh.write(_CHECKPOINT_MAGIC)
            fh.write(struct.pack("<I", len(header_bytes)))
            fh.write(header_bytes)
            for k in arrays:
                fh.write(np.ascontiguousarray(arrays[k], dtype="<f8").tobytes())

    @classmethod
    def load(cls, path: str | Path) -> "ClassifierParams":
        path = Path(path)
        blob = path.read_bytes()
        if blob[:8] != _CHECKPOINT_MAGIC:
            raise IrisError(f"{path}: not a parameter checkpoint")
        (header_len,) = struct.unpack("<I", blob[8:12])
        header = json.loads(blob[12:12 + header_len].decode("utf-8"))
        offset = 12 + header_len
        arrays = {}
        for block in header["blocks"]:
            shape = tuple(block["shape"])
            count = int(np.prod(shape)) if shape else 1
            arrays[block["name"]] = np.frombuffer(
                blob, dtype="<f8", count=count, offset=offset
            ).reshape(shape).astype(np.float64)
            offset += count * 8
        return cls(
            w_imp=arrays["w_imp"], b_imp=arrays["b_imp"],
            w_exp=arrays["w_exp"], b_exp=arrays["b_exp"],
            w_out=arrays["w_out"], b_out=arrays["b_out"],
            calibration=Calibration(
                scale=arrays["cal_scale"], bias=arrays["cal_bias"],
                trainable=header["calibration_trainable"],
            ),
            seed=header["seed"],
        )


@dataclass(frozen=True)
class RationaleInput:
    """One selected rationale, ready for the classifier: its embedding,
    its raw ranker scores and its relevance verdict."""

    rationale_id: str
    imp_emb: np.ndarray
    raw_scores: np.ndarray
    verdict: RelevanceVerdict


@dataclass(frozen=True)
class EncodedSample:
    """Everything the classifier needs for one sample."""

    sample_id: str
    relevant: tuple[RationaleInput, ...]
    irrelevant: tuple[RationaleInput, ...]
    exp_emb: np.ndarray
    gold: StanceLabel | None = None

    def vote_inputs(self, mode: VoteMode) -> tuple[RationaleInput, ...]:
        if mode is VoteMode.ALL_EXPLICIT:
            return self.relevant + self.irrelevant
        return self.relevant


@dataclass(frozen=True)
class RationalePrediction:
    rationale_id: str
    probs: tuple[float, float, float]
    group: RelevanceGroup


@dataclass
class TrainConfig:
    lr: float = 1e-4
    batch_size: int = 32
    beta: float = 0.1
    q: float = 0.5
    epochs: int = 30
    seed: int = 0
    vote_mode: VoteMode = VoteMode.RELEVANT_EXPLICIT
    dense_dim: int = 128
    calibration_trainable: bool = True

    def __post_init__(self):
        if not 0 < self.beta < 1:
            raise ValueError(f"beta must lie in (0, 1), got {self.beta}")
        if self.q < 0:
            raise ValueError(f"q must be non-negative, got {self.q}")
        if isinstance(self.vote_mode, str):
            self.vote_mode = VoteMode(self.vote_mode)


def _softmax_rows(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _forward_arrays(
    imp: np.ndarray, exp: np.ndarray, params: ClassifierParams
) -> tuple[np.ndarray, dict]:
    """Batched forward pass; returns probabilities and the activation
    cache needed by the backward pass."""
    pre_imp = imp @ params.w_imp + params.b_imp
    pre_exp = exp @ params.w_exp + params.b_exp
    h_imp = np.maximum(pre_imp, 0.0)
    h_exp = np.maximum(pre_exp, 0.0)
    h = np.concatenate([h_imp, h_exp], axis=1)
    logits = h @ params.w_out + params.b_out
    probs = _softmax_rows(logits)
    cache = {
        "imp": imp, "exp": exp,
        "mask_imp": pre_imp > 0.0, "mask_exp": pre_exp > 0.0,
        "h": h, "probs": probs,
    }
    return probs, cache


def forward_rationale(
    imp_emb: np.ndarray, exp_emb: np.ndarray, params: ClassifierParams
) -> np.ndarray:
    """Stance probabilities for a single rationale/assessment pair."""
    imp = np.asarray(imp_emb, dtype=np.float64).reshape(1, -1)
    exp = np.asarray(exp_emb, dtype=np.float64).reshape(1, -1)
    if imp.shape[1] != params.d_e or exp.shape[1] != params.d_e:
        raise ValueError(
            f"embedding dimension mismatch: got {imp.shape[1]}/{exp.shape[1]}, "
            f"parameters expect {params.d_e}")
    probs, _ = _forward_arrays(imp, exp, params)
    return probs[0]


def stance_loss(relevant_probs: list[np.ndarray], gold: StanceLabel) -> float:
    """Cross-entropy of the soft-vote mean over relevant rationales.

    An empty relevant set falls back to the uniform distribution, i.e. a
    constant loss of log(3).
    """
    if relevant_probs:
        vote = np.mean(np.stack(relevant_probs), axis=0)
    else:
        vote = np.full(3, 1.0 / 3.0)
    return float(-np.log(np.clip(vote[int(gold)], PROB_FLOOR, 1.0)))


def reward_multiplier(
    verdict: RelevanceVerdict,
    predicted: StanceLabel,
    gold: StanceLabel,
    beta: float,
) -> float:
    """The (1 - R) factor of the reward/punish loss.

    Reward (R = +beta) when relevance agreed with the outcome: a relevant
    rationale predicting the gold stance, or an irrelevant one missing
    it.  Punish (R = -beta) otherwise.
    """
    correct = predicted == gold
    relevant = verdict.group is RelevanceGroup.RELEVANT
    aligned = (relevant and correct) or (not relevant and not correct)
    r = beta if aligned else -beta
    return 1.0 - r


def reward_punish_loss(
    profile_probs: np.ndarray,
    verdict: RelevanceVerdict,
    pred_probs: np.ndarray,
    gold: StanceLabel,
    beta: float,
) -> float:
    """Per-rationale reward/punish loss: relevance cross-entropy times
    the alignment multiplier."""
    predicted = StanceLabel(int(np.argmax(pred_probs)))
    multiplier = reward_multiplier(verdict, predicted, gold, beta)
    ce = -np.log(np.clip(profile_probs[int(gold)], PROB_FLOOR, 1.0))
    return float(ce * multiplier)


@dataclass(frozen=True)
class LossBreakdown:
    total: float
    stance: float
    reward_punish: float


@dataclass
class _FlatBatch:
    """Batch tensors plus the indexing needed to route gradients."""

    imp: np.ndarray            # (n_rat, d_e)
    exp: np.ndarray            # (n_rat, d_e)
    raw: np.ndarray            # (n_rat, 3)
    gold: np.ndarray           # (n_rat,) gold label of the owning sample
    sample_idx: np.ndarray     # (n_rat,)
    is_relevant: np.ndarray    # (n_rat,) bool
    verdicts: list[RelevanceVerdict]
    sample_golds: np.ndarray   # (n_samples,)
    n_relevant: np.ndarray     # (n_samples,)
    n_samples: int


def _flatten(batch: list[EncodedSample]) -> _FlatBatch:
    imp, exp, raw, gold, sample_idx, is_rel, verdicts = [], [], [], [], [], [], []
    n_relevant = []
    sample_golds = []
    for i, sample in enumerate(batch):
        if sample.gold is None:
            raise ValueError(f"sample {sample.sample_id!r} has no gold label")
        sample_golds.append(int(sample.gold))
        n_relevant.append(len(sample.relevant))
        for rat in sample.relevant + sample.irrelevant:
            imp.append(rat.imp_emb)
            exp.append(sample.exp_emb)
            raw.append(rat.raw_scores)
            gold.append(int(sample.gold))
            sample_idx.append(i)
            is_rel.append(rat.verdict.group is RelevanceGroup.RELEVANT)
            verdicts.append(rat.verdict)
    n_rat = len(imp)
    d_e = batch[0].exp_emb.shape[0]
    return _FlatBatch(
        imp=np.stack(imp) if n_rat else np.zeros((0, d_e)),
        exp=np.stack(exp) if n_rat else np.zeros((0, d_e)),
        raw=np.stack(raw) if n_rat else np.zeros((0, 3)),
        gold=np.asarray(gold, dtype=np.int64),
        sample_idx=np.asarray(sample_idx, dtype=np.int64),
        is_relevant=np.asarray(is_rel, dtype=bool),
        verdicts=verdicts,
        sample_golds=np.asarray(sample_golds, dtype=np.int64),
        n_relevant=np.asarray(n_relevant, dtype=np.int64),
        n_samples=len(batch),
    )


def _calibrated_profile_probs(params: ClassifierParams, raw: np.ndarray
                              ) -> np.ndarray:
    z = raw * params.calibration.scale + params.calibration.bias
    return _softmax_rows(z)


def _soft_votes(flat: _FlatBatch, probs: np.ndarray) -> np.ndarray:
    """Per-sample soft-vote distributions (uniform where no relevant
    rationale exists)."""
    votes = np.full((flat.n_samples, 3), 1.0 / 3.0)
    sums = np.zeros((flat.n_samples, 3))
    rel = flat.is_relevant
    np.add.at(sums, flat.sample_idx[rel], probs[rel])
    has_rel = flat.n_relevant > 0
    votes[has_rel] = sums[has_rel] / flat.n_relevant[has_rel, None]
    return votes


def batch_loss(
    params: ClassifierParams,
    batch: list[EncodedSample],
    q: float,
    beta: float,
    multipliers: np.ndarray | None = None,
) -> LossBreakdown:
    """Total loss over a batch: mean stance loss over samples plus q
    times the mean reward/punish loss over all selected rationales.

    ``multipliers`` fixes the (1 - R) factors; when omitted they are
    derived from the current predictions.  Passing them explicitly makes
    the loss a smooth function of the parameters, which is how the
    gradient treats R (constant within a step).
    """
    flat = _flatten(batch)
    if flat.imp.shape[0] > 0:
        probs, _ = _forward_arrays(flat.imp, flat.exp, params)
    else:
        probs = np.zeros((0, 3))
    votes = _soft_votes(flat, probs)
    picked = np.clip(votes[np.arange(flat.n_samples), flat.sample_golds],
                     PROB_FLOOR, 1.0)
    loss_s = float(-np.log(picked).mean())

    loss_rp = 0.0
    if flat.imp.shape[0] > 0:
        if multipliers is None:
            multipliers = _current_multipliers(flat, probs, beta)
        prof = _calibrated_profile_probs(params, flat.raw)
        ce = -np.log(np.clip(prof[np.arange(len(flat.gold)), flat.gold],
                             PROB_FLOOR, 1.0))
        loss_rp = float((ce * multipliers).mean())
    return LossBreakdown(total=loss_s + q * loss_rp, stance=loss_s,
                         reward_punish=loss_rp)


def _current_multipliers(flat: _FlatBatch, probs: np.ndarray, beta: float
                         ) -> np.ndarray:
    predicted = probs.argmax(axis=1)
    correct = predicted == flat.gold
    aligned = np.where(flat.is_relevant, correct, ~correct)
    return np.where(aligned, 1.0 - beta, 1.0 + beta)


def batch_gradients(
    params: ClassifierParams,
    batch: list[EncodedSample],
    q: float,
    beta: float,
) -> tuple[LossBreakdown, dict[str, np.ndarray], np.ndarray]:
    """Loss, analytic gradients per parameter block, and the frozen
    reward multipliers used for this step."""
    flat = _flatten(batch)
    n_rat = flat.imp.shape[0]
    grads = {name: np.zeros_like(arr) for name, arr in params.blocks().items()}

    if n_rat == 0:
        votes = _soft_votes(flat, np.zeros((0, 3)))
        picked = np.clip(votes[np.arange(flat.n_samples), flat.sample_golds],
                         PROB_FLOOR, 1.0)
        loss = LossBreakdown(total=float(-np.log(picked).mean()),
                             stance=float(-np.log(picked).mean()),
                             reward_punish=0.0)
        return loss, grads, np.zeros(0)

    probs, cache = _forward_arrays(flat.imp, flat.exp, params)
    votes = _soft_votes(flat, probs)
    picked = np.clip(votes[np.arange(flat.n_samples), flat.sample_golds],
                     PROB_FLOOR, 1.0)
    loss_s = float(-np.log(picked).mean())

    multipliers = _current_multipliers(flat, probs, beta)
    prof = _calibrated_profile_probs(params, flat.raw)
    ce = -np.log(np.clip(prof[np.arange(n_rat), flat.gold], PROB_FLOOR, 1.0))
    loss_rp = float((ce * multipliers).mean())

    # Stance loss: dL/d logits for relevant rationales only.  For sample i
    # with soft vote s over n_i relevant rationales and gold g:
    # dL/dp_r[g] = -1 / (B * n_i * s_i), then through the softmax Jacobian
    # dp[g]/dz[c] = p[g] (1{g=c} - p[c]).
    dlogits = np.zeros_like(probs)
    rel = flat.is_relevant
    if rel.any():
        r_idx = np.nonzero(rel)[0]
        s_idx = flat.sample_idx[r_idx]
        g = flat.sample_golds[s_idx]
        coeff = -1.0 / (flat.n_samples
                        * flat.n_relevant[s_idx]
                        * picked[s_idx])                      # (n_rel,)
        p = probs[r_idx]                                      # (n_rel, 3)
        p_g = p[np.arange(len(r_idx)), g]                     # (n_rel,)
        jac = -p_g[:, None] * p
        jac[np.arange(len(r_idx)), g] += p_g
        dlogits[r_idx] = coeff[:, None] * jac

    h = cache["h"]
    grads["w_out"] += h.T @ dlogits
    grads["b_out"] += dlogits.sum(axis=0)
    dh = dlogits @ params.w_out.T
    d_d = params.d_d
    dh_imp = dh[:, :d_d] * cache["mask_imp"]
    dh_exp = dh[:, d_d:] * cache["mask_exp"]
    grads["w_imp"] += flat.imp.T @ dh_imp
    grads["b_imp"] += dh_imp.sum(axis=0)
    grads["w_exp"] += flat.exp.T @ dh_exp
    grads["b_exp"] += dh_exp.sum(axis=0)

    # Reward/punish loss: only the calibration is reached.  For rationale
    # r with calibrated profile q and gold g:
    # d(-log q[g])/dz_j = q_j - 1{j=g}; z_j = w_j * raw_j + b_j.
    if q > 0.0 and params.calibration.trainable:
        dz = prof.copy()
        dz[np.arange(n_rat), flat.gold] -= 1.0
        dz *= (q * multipliers / n_rat)[:, None]
        grads["cal_scale"] += (dz * flat.raw).sum(axis=0)
        grads["cal_bias"] += dz.sum(axis=0)

    for name, g_arr in grads.items():
        if not np.all(np.isfinite(g_arr)):
            raise IrisError(f"non-finite gradient in parameter block {name!r}")

    loss = LossBreakdown(total=loss_s + q * loss_rp, stance=loss_s,
                         reward_punish=loss_rp)
    return loss, grads, multipliers


class AdamState:
    """Standard Adam moment estimates over the named parameter blocks."""

    def __init__(self, params: ClassifierParams, lr: float,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        blocks = params.blocks()
        self.m = {k: np.zeros_like(v) for k, v in blocks.items()}
        self.v = {k: np.zeros_like(v) for k, v in blocks.items()}

    def step(self, params: ClassifierParams, grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        blocks = params.blocks()
        for name, block in blocks.items():
            g = grads[name]
            m = self.m[name] = self.beta1 * self.m[name] + (1 - self.beta1) * g
            v = self.v[name] = self.beta2 * self.v[name] + (1 - self.beta2) * g * g
            m_hat = m / (1 - self.beta1**self.t)
            v_hat = v / (1 - self.beta2**self.t)
            block -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def backward_and_step(
    params: ClassifierParams,
    batch: list[EncodedSample],
    cfg: TrainConfig,
    state: AdamState,
) -> LossBreakdown:
    """One optimization step on a batch; mutates params and state."""
    loss, grads, _ = batch_gradients(params, batch, cfg.q, cfg.beta)
    state.step(params, grads)
    return loss


def majority_vote(votes: list[StanceLabel]) -> StanceLabel:
    """Majority vote with the no-decision rule: the unique most frequent
    label wins; an empty vote set or any tie for first place is neutral."""
    if not votes:
        return StanceLabel.NEUTRAL
    counts = [0, 0, 0]
    for vote in votes:
        counts[int(vote)] += 1
    best = max(counts)
    winners = [i for i, c in enumerate(counts) if c == best]
    if len(winners) != 1:
        return StanceLabel.NEUTRAL
    return StanceLabel(winners[0])


def predict_stance(
    sample: EncodedSample,
    params: ClassifierParams,
    vote_mode: VoteMode = VoteMode.RELEVANT_EXPLICIT,
) -> tuple[StanceLabel, list[RationalePrediction]]:
    """Hard per-rationale predictions for the configured vote set,
    aggregated by majority vote."""
    inputs = sample.vote_inputs(vote_mode)
    if not inputs:
        return StanceLabel.NEUTRAL, []
    imp = np.stack([r.imp_emb for r in inputs])
    exp = np.tile(sample.exp_emb, (len(inputs), 1))
    probs, _ = _forward_arrays(imp, exp, params)
    predictions = [
        RationalePrediction(
            rationale_id=r.rationale_id,
            probs=tuple(float(x) for x in probs[i]),
            group=r.verdict.group,
        )
        for i, r in enumerate(inputs)
    ]
    votes = [StanceLabel(int(np.argmax(probs[i]))) for i in range(len(inputs))]
    return majority_vote(votes), predictions


@dataclass(frozen=True)
class EpochLog:
    epoch: int
    loss_stance: float
    loss_reward_punish: float
    loss_total: float
    dev_macro_f1: float

    def to_record(self) -> dict:
        return {
            "epoch": self.epoch,
            "loss_stance": self.loss_stance,
            "loss_reward_punish": self.loss_reward_punish,
            "loss_total": self.loss_total,
            "dev_macro_f1": self.dev_macro_f1,
        }


def train(
    train_samples: list[EncodedSample],
    dev_samples: list[EncodedSample],
    cfg: TrainConfig,
) -> tuple[ClassifierParams, list[EpochLog]]:
    """Seeded mini-batch training with best-dev checkpointing.

    Every epoch shuffles the training samples, runs Adam steps per batch,
    evaluates dev macro-F1 with the configured vote mode and keeps the
    parameters of the best dev epoch.
    """
    from .evalkit import macro_f1

    if not train_samples:
        raise ValueError("no training samples")
    d_e = train_samples[0].exp_emb.shape[0]
    rng = np.random.default_rng(cfg.seed)
    params = ClassifierParams.init(
        d_e, cfg.dense_dim, seed=cfg.seed,
        calibration_trainable=cfg.calibration_trainable,
    )
    state = AdamState(params, lr=cfg.lr)
    best_params = params.copy()
    best_f1 = -1.0
    logs: list[EpochLog] = []

    for epoch in range(cfg.epochs):
        order = rng.permutation(len(train_samples))
        totals = np.zeros(3)
        n_batches = 0
        for start in range(0, len(order), cfg.batch_size):
            batch = [train_samples[i] for i in order[start:start + cfg.batch_size]]
            loss = backward_and_step(params, batch, cfg, state)
            totals += (loss.stance, loss.reward_punish, loss.total)
            n_batches += 1
        totals /= max(n_batches, 1)

        if dev_samples:
            preds = [predict_stance(s, params, cfg.vote_mode)[0]
                     for s in dev_samples]
            golds = [s.gold for s in dev_samples]
            dev_f1 = macro_f1(preds, golds, run_seed=cfg.seed).macro_f1
        else:
            dev_f1 = 0.0
        logs.append(EpochLog(
            epoch=epoch,
            loss_stance=float(totals[0]),
            loss_reward_punish=float(totals[1]),
            loss_total=float(totals[2]),
            dev_macro_f1=dev_f1,
        ))
        if dev_f1 > best_f1:
            best_f1 = dev_f1
            best_params = params.copy()
    return best_params, logs
