"""NN input preprocessing, the epoch sampler, training and prediction.

Complex values become reals by interleaving, ``[a+jb, c+jd] -> [a, b, c, d]``.
The channel fed to the network is the propagation channel, stacked per UE
antenna-major (length ``L*Nr``); the spread matrix is appended only when
``include_spread_matrix`` is set.
"""

import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from .detectors import DetectionResult
from .errors import ConfigError, DimensionError, DivergenceError
from .labels import canonical_mode, decode, encode, hard_decide
from .nn import (backward, build_cnn_spec, build_fcnn_spec, forward, init_parameters,
                 loss_for_head, optimizer_step)
from .nn.optim import OptimizerState
from .numerics import RandomStream, sample_complex_gaussian, strict_mode

log = logging.getLogger(__name__)

ARCHITECTURES = ("fcnn", "cnn2d")
DEFAULT_TRAIN_NOISE_VARIANCE = 10 ** (-18 / 10)


@dataclass
class TrainConfig:
    n_epoch: int = 1000
    batch_size: int = None  # None -> M**K, one batch per epoch
    train_noise_variance: float = DEFAULT_TRAIN_NOISE_VARIANCE
    learning_rate: float = 1e-3
    seed: int = 0
    include_spread_matrix: bool = False
    label_mode: str = "multiclass_softmax"
    architecture: str = "fcnn"
    # optional: draw each epoch's noise variance uniformly from this list
    train_noise_variances: tuple = field(default=())
    log_every: int = 0

    def __post_init__(self):
        self.label_mode = canonical_mode(self.label_mode)
        if self.architecture not in ARCHITECTURES:
            raise ConfigError(f"architecture must be one of {ARCHITECTURES}", ["architecture"])
        if self.n_epoch < 0:
            raise ConfigError("n_epoch must be non-negative", ["n_epoch"])
        self.train_noise_variances = tuple(float(v) for v in self.train_noise_variances)

    def to_dict(self):
        d = asdict(self)
        d["train_noise_variances"] = list(self.train_noise_variances)
        return d


def complex_to_real(z):
    """Interleave real and imaginary parts along the last axis."""
    z = np.asarray(z, dtype=complex)
    return np.stack([z.real, z.imag], axis=-1).reshape(z.shape[:-1] + (2 * z.shape[-1],))


def fc_input_length(K, L, Nr, include_spread_matrix=False):
    return 2 * (L * Nr + K * L * Nr + (K * L if include_spread_matrix else 0))


def cnn_input_shape(K, L, Nr, include_spread_matrix=False):
    return (2 * L * Nr, K + 1 + (K if include_spread_matrix else 0), 1)


def preprocess_fc(y, ch, S=None):
    """Flat real input ``[y, h_1, ..., h_K, (s_1, ..., s_K)]``.

    Works on single frames or stacks with matching leading axes.
    """
    y = np.asarray(y)
    h = ch.stacked()  # (..., K, Nr*L)
    if y.shape[-1] != h.shape[-1] or y.shape[:-1] != h.shape[:-2]:
        raise DimensionError(f"y {y.shape} incompatible with channels {ch.h.shape}")
    parts = [y, h.reshape(h.shape[:-2] + (-1,))]
    if S is not None:
        s = np.broadcast_to(S.columns.T.reshape(-1), y.shape[:-1] + (S.K * S.L,))
        parts.append(s)
    return complex_to_real(np.concatenate(parts, axis=-1))


def preprocess_cnn(y, ch, S=None):
    """2-D real input of shape ``(2*L*Nr, K+1[+K], 1)`` per frame.

    Column 0 is ``y``, columns 1..K the per-UE channel stacks and, with ``S``,
    K more columns holding each sequence zero-padded to length ``L*Nr``.
    """
    y = np.asarray(y)
    h = ch.stacked()
    if y.shape[-1] != h.shape[-1] or y.shape[:-1] != h.shape[:-2]:
        raise DimensionError(f"y {y.shape} incompatible with channels {ch.h.shape}")
    cols = [y[..., None, :], h]
    if S is not None:
        padded = np.zeros((S.K, h.shape[-1]), dtype=complex)
        padded[:, :S.L] = S.columns.T
        cols.append(np.broadcast_to(padded, y.shape[:-1] + padded.shape))
    stacked = np.concatenate(cols, axis=-2)  # (..., columns, N)
    real = complex_to_real(stacked)  # (..., columns, 2N)
    return np.swapaxes(real, -1, -2)[..., None]


def preprocess(architecture, y, ch, S=None):
    return (preprocess_fc if architecture == "fcnn" else preprocess_cnn)(y, ch, S)


def build_network_spec(config, link, codebook):
    head = codebook.head
    S = config.include_spread_matrix
    if config.architecture == "fcnn":
        return build_fcnn_spec(link.K, codebook.n_label, fc_input_length(link.K, link.L, link.Nr, S),
                               head=head)
    return build_cnn_spec(link.K, codebook.n_label, cnn_input_shape(link.K, link.L, link.Nr, S),
                          head=head)


@dataclass
class EpochBatch:
    inputs: np.ndarray
    labels: np.ndarray
    grid_indices: np.ndarray
    noise: np.ndarray
    y: np.ndarray


def sample_epoch(link, codebook, sigma2_train, stream, architecture="fcnn",
                 include_spread_matrix=False):
    """One pass over the joint symbol set.

    The set is shuffled, one noise vector is drawn and shared by all samples
    of the epoch, and every sample gets its own channel realization.
    """
    G = len(link.grid)
    order = stream.rng.permutation(G)
    z = sample_complex_gaussian(stream, link.N, sigma2_train)
    ch, heff = link.sample(stream, G)
    x = link.grid.entries[order]
    y = np.einsum("tnk,tk->tn", heff.H, x) + z
    S = link.sequences if include_spread_matrix else None
    return EpochBatch(inputs=preprocess(architecture, y, ch, S), labels=encode(codebook, order),
                      grid_indices=order, noise=z, y=y)


def check_compatible(spec, codebook):
    if spec.head != codebook.head or spec.output_size != codebook.n_label:
        raise ConfigError(
            f"network head {spec.head}/{spec.output_size} does not match label mode "
            f"{codebook.mode}/{codebook.n_label}", ["label_mode"])


def train(config, link, codebook, spec=None, params=None, strict=True):
    """Train a detector network; returns ``(params, spec, loss_trace)``.

    Each epoch draws a fresh :func:`sample_epoch` from the child stream
    ``(1, epoch)`` of the config seed, so runs are reproducible from the seed
    alone. The loss trace holds the mean batch loss of every epoch.
    """
    if spec is None:
        spec = build_network_spec(config, link, codebook)
    check_compatible(spec, codebook)
    root = RandomStream(config.seed)
    if params is None:
        params = init_parameters(spec, root.child(0))
    G = len(link.grid)
    batch_size = config.batch_size or G
    if G % batch_size:
        raise ConfigError(f"batch_size {batch_size} must divide {G}", ["batch_size"])
    lossf = loss_for_head(spec.head)
    state = OptimizerState(learning_rate=config.learning_rate)
    trace = np.empty(config.n_epoch)
    grads = params.zeros_like()
    variances = config.train_noise_variances
    with strict_mode(strict):
        for epoch in range(config.n_epoch):
            stream = root.child(1, epoch)
            sigma2 = config.train_noise_variance
            if variances:
                sigma2 = variances[stream.rng.integers(len(variances))]
            batch = sample_epoch(link, codebook, sigma2, stream, config.architecture,
                                 config.include_spread_matrix)
            total = 0.0
            for start in range(0, G, batch_size):
                sl = slice(start, start + batch_size)
                out, cache = forward(spec, params, batch.inputs[sl], "train")
                total += lossf(batch.labels[sl], out)
                optimizer_step(params, backward(spec, params, cache, batch.labels[sl], grads), state)
            loss = total / (G // batch_size)
            if not np.isfinite(loss):
                raise DivergenceError(f"non-finite loss at epoch {epoch}", epoch)
            trace[epoch] = loss
            if config.log_every and (epoch + 1) % config.log_every == 0:
                log.info("epoch %d loss %.5f", epoch + 1, trace[epoch + 1 - config.log_every:epoch + 1].mean())
    return params, spec, trace


def predict(params, spec, inputs, codebook):
    """Detect joint symbols from preprocessed inputs (single frame or batch)."""
    inputs = np.asarray(inputs, dtype=float)
    single = inputs.shape == spec.input_shape
    batch = inputs[None] if single else inputs
    out, _ = forward(spec, params, batch, "infer")
    n = np.asarray(decode(codebook, hard_decide(codebook, out)))
    M, K = codebook.M, codebook.K
    idx = (n[:, None] // M ** np.arange(K - 1, -1, -1)) % M
    metric = out.max(axis=-1)
    if single:
        return DetectionResult(symbol_indices=idx[0], joint_index=int(n[0]), metric=float(metric[0]))
    return DetectionResult(symbol_indices=idx, joint_index=n, metric=metric)
