"""Weight-clipping Wasserstein GAN trained with RMSProp.

The critic is updated ``n_critic`` times per generator update and its
parameters are clamped to ``[-clip_c, clip_c]`` after every update.  An
exponential moving average of the generator weights is kept alongside the
trained generator and is what ``sample`` draws from.  Training is fully
deterministic given the data, the config and the seed, and can be resumed from
a checkpoint without changing the outcome.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import struct
from dataclasses import asdict, dataclass

import numpy as np

from ._io import atomic_write
from .codec import Codec, decode_matrix
from .errors import (
    BadMagic,
    ChecksumMismatch,
    CodecMismatch,
    ConfigError,
    EmptyBatch,
    InsufficientData,
    NonFiniteGradient,
    VersionMismatch,
)
from .neuralnet import ACTIVATIONS, DenseNet, Layer, RMSPropState, backward, forward, init_net, rmsprop_step

log = logging.getLogger(__name__)

MAGIC = b"LGS1"
VERSION = 1


@dataclass(frozen=True)
class GanConfig:
    latent_dim: int = 32
    generator_hidden: tuple = (128, 128)
    critic_hidden: tuple = (128, 128)
    generator_activation: str = "tanh"
    critic_activation: str = "relu"
    n_critic: int = 5
    clip_c: float = 0.01
    batch_size: int = 64
    lr: float = 2e-4
    rho: float = 0.9
    eps: float = 1e-8
    generator_ema: float = 0.99  # 0 samples from the raw generator
    iterations: int = 3000
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "generator_hidden", tuple(int(w) for w in self.generator_hidden))
        object.__setattr__(self, "critic_hidden", tuple(int(w) for w in self.critic_hidden))
        positive = dict(latent_dim=self.latent_dim, n_critic=self.n_critic, clip_c=self.clip_c,
                        batch_size=self.batch_size, lr=self.lr, rho=self.rho, eps=self.eps)
        for name, value in positive.items():
            if not value > 0:
                raise ConfigError(f"{name} must be positive, got {value}")
        if self.rho >= 1:
            raise ConfigError("rho must be < 1")
        if not 0 <= self.generator_ema < 1:
            raise ConfigError("generator_ema must lie in [0, 1)")
        if self.iterations < 0 or self.seed < 0:
            raise ConfigError("iterations and seed must be non-negative")
        if any(w < 1 for w in self.generator_hidden + self.critic_hidden):
            raise ConfigError("hidden widths must be positive")
        for act in (self.generator_activation, self.critic_activation):
            if act not in ACTIVATIONS:
                raise ConfigError(f"unknown hidden activation {act!r}")

    def generator_widths(self, data_width):
        return [self.latent_dim, *self.generator_hidden, data_width]

    def critic_widths(self, data_width):
        return [data_width, *self.critic_hidden, 1]

    def to_dict(self):
        d = asdict(self)
        d["generator_hidden"] = list(self.generator_hidden)
        d["critic_hidden"] = list(self.critic_hidden)
        return d

    @classmethod
    def from_dict(cls, d):
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown GAN config keys: {sorted(unknown)}")
        return cls(**d)


@dataclass
class ModelCheckpoint:
    config: GanConfig
    codec_hash: str
    generator: DenseNet
    critic: DenseNet
    generator_avg: DenseNet
    generator_opt: RMSPropState
    critic_opt: RMSPropState
    iteration: int
    rng_state: dict
    codec: dict | None = None

    @property
    def data_width(self):
        return self.critic.layers[0].n_in

    def to_bytes(self) -> bytes:
        return _serialize(self)

    def __eq__(self, other):
        if not isinstance(other, ModelCheckpoint):
            return NotImplemented
        return self.to_bytes() == other.to_bytes()

    def copy(self):
        return _deserialize(self.to_bytes())


def _layer_acts(n_hidden, hidden, last):
    return [hidden] * n_hidden + [last]


def init_checkpoint(config: GanConfig, data_width: int, codec: Codec | None = None):
    """Fresh generator/critic pair and optimizer state for ``config``."""
    rng = np.random.default_rng(config.seed)
    gen = init_net(config.generator_widths(data_width),
                   _layer_acts(len(config.generator_hidden), config.generator_activation, "tanh"), rng)
    critic = init_net(config.critic_widths(data_width),
                      _layer_acts(len(config.critic_hidden), config.critic_activation, "identity"), rng)
    opt = dict(lr=config.lr, rho=config.rho, eps=config.eps)
    return ModelCheckpoint(
        config=config,
        codec_hash=codec.digest() if codec is not None else "",
        generator=gen,
        critic=critic,
        generator_avg=gen.copy(),
        generator_opt=RMSPropState.zeros_like(gen.params(), **opt),
        critic_opt=RMSPropState.zeros_like(critic.params(), **opt),
        iteration=0,
        rng_state=rng.bit_generator.state,
        codec=codec.to_dict() if codec is not None else None,
    )


def wasserstein_estimate(critic_real, critic_fake) -> float:
    """mean(critic_real) - mean(critic_fake)."""
    real = np.asarray(critic_real, dtype=np.float64).reshape(-1)
    fake = np.asarray(critic_fake, dtype=np.float64).reshape(-1)
    if real.size == 0 or fake.size == 0:
        raise EmptyBatch("critic score vectors must be non-empty")
    return float(real.mean() - fake.mean())


def clip_weights(critic: DenseNet, c: float) -> DenseNet:
    """Clamp every critic weight and bias to [-c, c], in place."""
    if not c > 0:
        raise ConfigError("clip bound must be positive")
    for p in critic.params():
        np.clip(p, -c, c, out=p)
    return critic


def max_abs_param(net: DenseNet) -> float:
    return max(float(np.abs(p).max()) for p in net.params())


class _BatchStream:
    """Real-data minibatches: each epoch is a fresh seeded shuffle, drawn
    without replacement; the ragged tail of an epoch is skipped.

    Batch ``k`` depends only on (seed, k), so resuming needs just the count.
    """

    def __init__(self, data, batch_size, seed, start=0):
        self.data = data
        self.batch_size = batch_size
        self.seed = seed
        self.per_epoch = data.shape[0] // batch_size
        self.k = start
        self._epoch = None
        self._perm = None

    def next(self):
        epoch, slot = divmod(self.k, self.per_epoch)
        if epoch != self._epoch:
            self._perm = np.random.default_rng([self.seed, 1, epoch]).permutation(self.data.shape[0])
            self._epoch = epoch
        self.k += 1
        idx = self._perm[slot * self.batch_size:(slot + 1) * self.batch_size]
        return self.data[idx]


def _check_finite(arrays, what, iteration):
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise NonFiniteGradient(f"non-finite {what}", iteration)


def train(encoded, config: GanConfig, codec: Codec | None = None,
          resume: ModelCheckpoint | None = None, on_critic_step=None):
    """Train a WGAN on an encoded matrix.

    Runs generator iterations until ``config.iterations`` is reached, starting
    from ``resume`` when given.  ``on_critic_step(critic, iteration)`` is called
    after every clipped critic update.

    Returns ``(checkpoint, loss_log)`` where ``loss_log`` is a list of
    ``(iteration, wasserstein_estimate)`` pairs, one per generator iteration.
    """
    data = np.ascontiguousarray(encoded, dtype=np.float64)
    if data.ndim != 2:
        raise InsufficientData("encoded matrix must be two-dimensional")
    if data.shape[0] < config.batch_size:
        raise InsufficientData(f"{data.shape[0]} rows < batch size {config.batch_size}")
    if not np.all(np.isfinite(data)):
        raise InsufficientData("encoded matrix contains non-finite values")

    if resume is None:
        cp = init_checkpoint(config, data.shape[1], codec)
    else:
        cp = resume.copy()
        if cp.data_width != data.shape[1]:
            raise CodecMismatch("checkpoint width does not match the data")
        if codec is not None and cp.codec_hash != codec.digest():
            raise CodecMismatch("codec differs from the one the checkpoint was trained with")
        cp.config = config

    rng = np.random.default_rng()
    rng.bit_generator.state = cp.rng_state
    gen, critic, avg = cp.generator, cp.critic, cp.generator_avg
    decay = config.generator_ema
    bs, c = config.batch_size, config.clip_c
    stream = _BatchStream(data, bs, config.seed, start=cp.iteration * config.n_critic)
    real_up = np.full((bs, 1), -1.0 / bs)
    fake_up = np.full((bs, 1), 1.0 / bs)
    loss_log = []

    for it in range(cp.iteration + 1, config.iterations + 1):
        for _ in range(config.n_critic):
            real = stream.next()
            fake = forward(gen, rng.standard_normal((bs, config.latent_dim)))[0]
            d_real, cache_real = forward(critic, real)
            d_fake, cache_fake = forward(critic, fake)
            w = wasserstein_estimate(d_real, d_fake)
            # critic loss = -(mean real - mean fake)
            g_real = backward(critic, cache_real, real_up)[0]
            g_fake = backward(critic, cache_fake, fake_up)[0]
            grads = [a + b for a, b in zip(g_real, g_fake)]
            _check_finite(grads, "critic gradient", it)
            rmsprop_step(critic.params(), grads, cp.critic_opt)
            clip_weights(critic, c)
            if on_critic_step is not None:
                on_critic_step(critic, it)

        fake, cache_gen = forward(gen, rng.standard_normal((bs, config.latent_dim)))
        d_fake, cache_crit = forward(critic, fake)
        # generator loss = -mean critic(fake)
        dx = backward(critic, cache_crit, -fake_up)[1]
        g_grads = backward(gen, cache_gen, dx)[0]
        _check_finite(g_grads, "generator gradient", it)
        rmsprop_step(gen.params(), g_grads, cp.generator_opt)
        _check_finite(gen.params(), "generator parameter", it)
        for a, p in zip(avg.params(), gen.params()):
            a *= decay
            a += (1.0 - decay) * p

        if not np.isfinite(w):
            raise NonFiniteGradient("non-finite Wasserstein estimate", it)
        loss_log.append((it, w))
        cp.iteration = it
        if it % 500 == 0:
            log.info("iteration %d  wasserstein %.6g", it, w)

    cp.rng_state = rng.bit_generator.state
    return cp, loss_log


def sample(checkpoint: ModelCheckpoint, codec: Codec, n: int, seed: int):
    """Draw ``n`` synthetic rows and decode them into a FeatureMatrix."""
    if n < 1:
        raise ConfigError("n must be >= 1")
    if codec.digest() != checkpoint.codec_hash:
        raise CodecMismatch("codec does not match the checkpoint")
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((n, checkpoint.config.latent_dim))
    return decode_matrix(codec, forward(checkpoint.generator_avg, z)[0])


def checkpoint_codec(checkpoint: ModelCheckpoint) -> Codec:
    if checkpoint.codec is None:
        raise CodecMismatch("checkpoint carries no codec")
    codec = Codec.from_dict(checkpoint.codec)
    if codec.digest() != checkpoint.codec_hash:
        raise CodecMismatch("embedded codec does not match its recorded hash")
    return codec


def write_loss_log(loss_log) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("iteration", "wasserstein_estimate"))
    for it, w in loss_log:
        writer.writerow((it, repr(float(w))))
    return buf.getvalue()


# -- checkpoint file format ---------------------------------------------------
#
#   b"LGS1" | u32 version | u32 header length | JSON header
#   | float64 LE parameters (generator, critic, averaged generator,
#     generator opt, critic opt)
#   | u64 checksum over header + parameters (blake2b, 8-byte digest)

def _checksum(data: bytes) -> int:
    return int.from_bytes(hashlib.blake2b(data, digest_size=8).digest(), "little")


def _net_arrays(cp):
    return (cp.generator.params() + cp.critic.params() + cp.generator_avg.params()
            + cp.generator_opt.square_avg + cp.critic_opt.square_avg)


def _serialize(cp: ModelCheckpoint) -> bytes:
    header = {
        "config": cp.config.to_dict(),
        "codec_hash": cp.codec_hash,
        "codec": cp.codec,
        "generator": [[l.n_out, l.n_in, l.activation] for l in cp.generator.layers],
        "critic": [[l.n_out, l.n_in, l.activation] for l in cp.critic.layers],
        "optimizer": {
            "generator": [cp.generator_opt.lr, cp.generator_opt.rho, cp.generator_opt.eps],
            "critic": [cp.critic_opt.lr, cp.critic_opt.rho, cp.critic_opt.eps],
        },
        "iteration": cp.iteration,
        "rng_state": cp.rng_state,
    }
    head = json.dumps(header, sort_keys=True, separators=(",", ":")).encode()
    params = b"".join(np.ascontiguousarray(a, dtype="<f8").tobytes() for a in _net_arrays(cp))
    body = head + params
    return (MAGIC + struct.pack("<II", VERSION, len(head)) + body
            + struct.pack("<Q", _checksum(body)))


def _read_net(spec, flat, pos):
    layers = []
    for n_out, n_in, act in spec:
        w = flat[pos:pos + n_out * n_in].reshape(n_out, n_in)
        pos += n_out * n_in
        b = flat[pos:pos + n_out]
        pos += n_out
        layers.append(Layer(w.copy(), b.copy(), act))
    return DenseNet(layers), pos


def _deserialize(raw: bytes) -> ModelCheckpoint:
    if len(raw) < 4 or raw[:4] != MAGIC:
        raise BadMagic("not a checkpoint file (bad magic)")
    if len(raw) < 12 + 8:
        raise ChecksumMismatch("checkpoint truncated")
    version, head_len = struct.unpack_from("<II", raw, 4)
    if version != VERSION:
        raise VersionMismatch(f"checkpoint version {version}, expected {VERSION}")
    body, tail = raw[12:-8], raw[-8:]
    if struct.unpack("<Q", tail)[0] != _checksum(body) or head_len > len(body):
        raise ChecksumMismatch("checkpoint checksum mismatch (corrupt or truncated)")
    header = json.loads(body[:head_len])
    flat = np.frombuffer(body[head_len:], dtype="<f8").astype(np.float64)

    gen, pos = _read_net(header["generator"], flat, 0)
    critic, pos = _read_net(header["critic"], flat, pos)
    avg, pos = _read_net(header["generator"], flat, pos)
    states = []
    for net, (lr, rho, eps) in ((gen, header["optimizer"]["generator"]),
                                (critic, header["optimizer"]["critic"])):
        acc = []
        for p in net.params():
            acc.append(flat[pos:pos + p.size].reshape(p.shape).copy())
            pos += p.size
        states.append(RMSPropState(acc, lr, rho, eps))
    if pos != flat.size:
        raise ChecksumMismatch("checkpoint payload length does not match its header")
    return ModelCheckpoint(
        config=GanConfig.from_dict(header["config"]),
        codec_hash=header["codec_hash"],
        generator=gen,
        critic=critic,
        generator_avg=avg,
        generator_opt=states[0],
        critic_opt=states[1],
        iteration=header["iteration"],
        rng_state=header["rng_state"],
        codec=header["codec"],
    )


def save_checkpoint(cp: ModelCheckpoint, path):
    atomic_write(path, cp.to_bytes())


def load_checkpoint(path) -> ModelCheckpoint:
    with open(path, "rb") as fh:
        return _deserialize(fh.read())
