"""
Minimal trainable transducer with hand-written backpropagation.

Encoder: one tanh recurrent layer over the features.
Prediction network: embedding table plus one tanh recurrent layer; the
start symbol reuses the blank's embedding row.
Joint: project both sides to J, add, tanh, project to K logits.
"""

from collections.abc import Sequence
from dataclasses import dataclass, fields, replace

import numpy as np

from rnnt_mwer.core.errors import InvalidInputError
from rnnt_mwer.providers.base import TransducerScorer
from rnnt_mwer.services.lattice import LogitLattice


@dataclass(frozen=True)
class ModelDims:
    """Mutually consistent tensor dimensions."""

    feature_dim: int
    vocab_size: int
    blank_id: int = 0
    embed_dim: int = 8
    encoder_hidden: int = 16
    predictor_hidden: int = 16
    joint_dim: int = 16

    def __post_init__(self) -> None:
        for f in fields(self):
            if f.name != "blank_id" and getattr(self, f.name) <= 0:
                raise InvalidInputError(f"{f.name} must be positive")
        if self.vocab_size < 2:
            raise InvalidInputError("vocab_size must include blank and one label")
        if not 0 <= self.blank_id < self.vocab_size:
            raise InvalidInputError(f"blank_id {self.blank_id} outside vocabulary")

    def shapes(self) -> dict[str, tuple[int, ...]]:
        """Expected shape of every parameter tensor, keyed by name."""
        He, Hp, J = self.encoder_hidden, self.predictor_hidden, self.joint_dim
        return {
            "enc_W": (He, self.feature_dim),
            "enc_R": (He, He),
            "enc_b": (He,),
            "embedding": (self.vocab_size, self.embed_dim),
            "pred_W": (Hp, self.embed_dim),
            "pred_R": (Hp, Hp),
            "pred_b": (Hp,),
            "joint_enc": (J, He),
            "joint_pred": (J, Hp),
            "joint_b": (J,),
            "out_W": (self.vocab_size, J),
            "out_b": (self.vocab_size,),
        }


PARAM_NAMES: tuple[str, ...] = tuple(ModelDims(feature_dim=1, vocab_size=2).shapes())


@dataclass(frozen=True, eq=False)
class ModelParams:
    """All trainable tensors plus their dims. Arrays are float64."""

    dims: ModelDims
    enc_W: np.ndarray
    enc_R: np.ndarray
    enc_b: np.ndarray
    embedding: np.ndarray
    pred_W: np.ndarray
    pred_R: np.ndarray
    pred_b: np.ndarray
    joint_enc: np.ndarray
    joint_pred: np.ndarray
    joint_b: np.ndarray
    out_W: np.ndarray
    out_b: np.ndarray

    def __post_init__(self) -> None:
        for name, shape in self.dims.shapes().items():
            value = np.asarray(getattr(self, name), dtype=np.float64)
            object.__setattr__(self, name, value)
            if value.shape != shape:
                raise InvalidInputError(f"{name} has shape {value.shape}, expected {shape}")
            if not np.all(np.isfinite(value)):
                raise InvalidInputError(f"{name} contains NaN or inf")

    def tensors(self) -> dict[str, np.ndarray]:
        """Name -> array in a fixed order."""
        return {name: getattr(self, name) for name in PARAM_NAMES}

    @classmethod
    def from_tensors(cls, dims: ModelDims, tensors: dict[str, np.ndarray]) -> "ModelParams":
        missing = set(PARAM_NAMES) - set(tensors)
        if missing:
            raise InvalidInputError(f"missing parameter tensors: {sorted(missing)}")
        return cls(dims=dims, **{name: tensors[name] for name in PARAM_NAMES})

    def with_tensors(self, tensors: dict[str, np.ndarray]) -> "ModelParams":
        return replace(self, **tensors)

    def zeros_like(self) -> "ModelParams":
        return self.with_tensors({k: np.zeros_like(v) for k, v in self.tensors().items()})


def init_params(seed: int, dims: ModelDims) -> ModelParams:
    """Uniform in [-s, s] with s = 1/sqrt(fan-in); deterministic per seed."""
    rng = np.random.default_rng(seed)
    fan_in = {
        "enc_W": dims.feature_dim,
        "enc_R": dims.encoder_hidden,
        "enc_b": dims.encoder_hidden,
        "embedding": dims.embed_dim,
        "pred_W": dims.embed_dim,
        "pred_R": dims.predictor_hidden,
        "pred_b": dims.predictor_hidden,
        "joint_enc": dims.encoder_hidden,
        "joint_pred": dims.predictor_hidden,
        "joint_b": dims.joint_dim,
        "out_W": dims.joint_dim,
        "out_b": dims.joint_dim,
    }
    tensors = {}
    for name, shape in dims.shapes().items():
        scale = 1.0 / np.sqrt(fan_in[name])
        tensors[name] = rng.uniform(-scale, scale, size=shape)
    return ModelParams.from_tensors(dims, tensors)


@dataclass(frozen=True, eq=False)
class _Activations:
    features: np.ndarray
    enc_h: np.ndarray  # (T, He)
    pred_ids: np.ndarray  # (U+1,) start symbol then labels
    pred_h: np.ndarray  # (U+1, Hp)
    joint_z: np.ndarray  # (T, U+1, J)
    logits: np.ndarray  # (T, U+1, K)


def _check_inputs(params: ModelParams, features: np.ndarray, y: Sequence[int]) -> np.ndarray:
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[0] < 1:
        raise InvalidInputError(f"features must be (T, F) with T>=1, got {features.shape}")
    if features.shape[1] != params.dims.feature_dim:
        raise InvalidInputError(
            f"feature width {features.shape[1]} does not match model ({params.dims.feature_dim})"
        )
    for k in y:
        if k == params.dims.blank_id or not 0 <= k < params.dims.vocab_size:
            raise InvalidInputError(f"invalid label {k} in target sequence")
    return features


def _recurrent(W: np.ndarray, R: np.ndarray, b: np.ndarray, inputs: np.ndarray) -> np.ndarray:
    h = np.zeros((inputs.shape[0], R.shape[0]))
    prev = np.zeros(R.shape[0])
    for i, x in enumerate(inputs):
        prev = np.tanh(W @ x + R @ prev + b)
        h[i] = prev
    return h


def _recurrent_backward(
    W: np.ndarray, R: np.ndarray, inputs: np.ndarray, h: np.ndarray, grad_h: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """BPTT for h_i = tanh(W x_i + R h_{i-1} + b). Returns dW, dR, db, dinputs."""
    dW, dR = np.zeros_like(W), np.zeros_like(R)
    db = np.zeros(R.shape[0])
    dinputs = np.zeros_like(inputs)
    carry = np.zeros(R.shape[0])
    for i in range(len(inputs) - 1, -1, -1):
        da = (grad_h[i] + carry) * (1.0 - h[i] ** 2)
        prev = h[i - 1] if i > 0 else np.zeros(R.shape[0])
        dW += np.outer(da, inputs[i])
        dR += np.outer(da, prev)
        db += da
        dinputs[i] = W.T @ da
        carry = R.T @ da
    return dW, dR, db, dinputs


def _forward(params: ModelParams, features: np.ndarray, y: Sequence[int]) -> _Activations:
    features = _check_inputs(params, features, y)
    enc_h = _recurrent(params.enc_W, params.enc_R, params.enc_b, features)
    pred_ids = np.array([params.dims.blank_id, *y], dtype=np.int64)
    pred_h = _recurrent(params.pred_W, params.pred_R, params.pred_b, params.embedding[pred_ids])
    enc_proj = enc_h @ params.joint_enc.T
    pred_proj = pred_h @ params.joint_pred.T
    joint_z = np.tanh(enc_proj[:, None, :] + pred_proj[None, :, :] + params.joint_b)
    logits = joint_z @ params.out_W.T + params.out_b
    return _Activations(features, enc_h, pred_ids, pred_h, joint_z, logits)


def forward_lattice(params: ModelParams, features: np.ndarray, y: Sequence[int]) -> LogitLattice:
    """Joint logits for every (frame, label-position) pair, shape (T, U+1, K)."""
    acts = _forward(params, features, y)
    return LogitLattice(values=acts.logits, blank_id=params.dims.blank_id)


def backward_lattice(
    params: ModelParams, features: np.ndarray, y: Sequence[int], grad_logits: np.ndarray
) -> ModelParams:
    """Reverse-mode gradients of every parameter given d(loss)/d(logits)."""
    acts = _forward(params, features, y)
    grad_logits = np.asarray(grad_logits, dtype=np.float64)
    if grad_logits.shape != acts.logits.shape:
        raise InvalidInputError(
            f"grad_logits shape {grad_logits.shape} does not match lattice {acts.logits.shape}"
        )

    d_out_W = np.einsum("tuk,tuj->kj", grad_logits, acts.joint_z)
    d_out_b = grad_logits.sum(axis=(0, 1))
    d_pre = (grad_logits @ params.out_W) * (1.0 - acts.joint_z**2)
    d_joint_b = d_pre.sum(axis=(0, 1))
    d_enc_proj = d_pre.sum(axis=1)
    d_pred_proj = d_pre.sum(axis=0)
    d_joint_enc = d_enc_proj.T @ acts.enc_h
    d_joint_pred = d_pred_proj.T @ acts.pred_h

    d_enc_W, d_enc_R, d_enc_b, _ = _recurrent_backward(
        params.enc_W, params.enc_R, acts.features, acts.enc_h, d_enc_proj @ params.joint_enc
    )
    d_pred_W, d_pred_R, d_pred_b, d_emb_rows = _recurrent_backward(
        params.pred_W,
        params.pred_R,
        params.embedding[acts.pred_ids],
        acts.pred_h,
        d_pred_proj @ params.joint_pred,
    )
    d_embedding = np.zeros_like(params.embedding)
    np.add.at(d_embedding, acts.pred_ids, d_emb_rows)

    return ModelParams(
        dims=params.dims,
        enc_W=d_enc_W,
        enc_R=d_enc_R,
        enc_b=d_enc_b,
        embedding=d_embedding,
        pred_W=d_pred_W,
        pred_R=d_pred_R,
        pred_b=d_pred_b,
        joint_enc=d_joint_enc,
        joint_pred=d_joint_pred,
        joint_b=d_joint_b,
        out_W=d_out_W,
        out_b=d_out_b,
    )


class TransducerModel(TransducerScorer):
    """Read-only scorer over a parameter snapshot."""

    def __init__(self, params: ModelParams):
        self._params = params

    @property
    def params(self) -> ModelParams:
        return self._params

    @property
    def vocab_size(self) -> int:
        return self._params.dims.vocab_size

    @property
    def blank_id(self) -> int:
        return self._params.dims.blank_id

    @property
    def name(self) -> str:
        d = self._params.dims
        return f"transducer:K{d.vocab_size}-He{d.encoder_hidden}-Hp{d.predictor_hidden}-J{d.joint_dim}"

    def encode(self, features: np.ndarray) -> np.ndarray:
        features = _check_inputs(self._params, features, ())
        p = self._params
        return _recurrent(p.enc_W, p.enc_R, p.enc_b, features) @ p.joint_enc.T

    def initial_state(self) -> np.ndarray:
        return self.advance(np.zeros(self._params.dims.predictor_hidden), self.blank_id)

    def advance(self, state: np.ndarray, token: int) -> np.ndarray:
        p = self._params
        return np.tanh(p.pred_W @ p.embedding[token] + p.pred_R @ state + p.pred_b)

    def joint_logits(self, encoded_frame: np.ndarray, state: np.ndarray) -> np.ndarray:
        p = self._params
        z = np.tanh(encoded_frame + p.joint_pred @ state + p.joint_b)
        return p.out_W @ z + p.out_b

    def lattice(self, features: np.ndarray, tokens: Sequence[int]) -> LogitLattice:
        return forward_lattice(self._params, features, tokens)
