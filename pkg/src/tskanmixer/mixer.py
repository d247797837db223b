"""TSMixer blocks and the three forecasting architectures.

``tsmixer``        mixer blocks -> dense temporal projection
``tskanmixer_v01`` mixer blocks -> two-depth KAN temporal projection
``tskanmixer_v02`` mixer blocks -> residual KAN time mixing -> dense temporal projection

All inputs are ``[B, L, C]`` arrays; forecasts are ``[B, H, C]``. Each
component exposes ``forward(...) -> (out, cache)`` and
``backward(cache, grad) -> (grad_in, grads)``; the model chains these in a
fixed order, so there is no autodiff tape.
"""

from __future__ import annotations

from dataclasses import dataclass, asdict, field

import numpy as np

from .kan import TwoDepthKan
from .spline import DEFAULT_DOMAIN
from .tensor import DTYPE, ShapeError, check_finite, relu, transpose_time_feature

VARIANTS = ("tsmixer", "tskanmixer_v01", "tskanmixer_v02")
LOSSES = ("mse", "mae")
KAN_FIELDS = ("kan_dim", "kan_grid", "kan_k")


class ConfigError(ValueError):
    pass


@dataclass
class ModelConfig:
    variant: str
    L: int
    H: int
    C: int
    batch: int = 32
    blocks: int = 2
    dropout: float = 0.1
    hidden_size: int = 64
    learning_rate: float = 1e-3
    kan_dim: int | None = None
    kan_grid: int | None = None
    kan_k: int | None = None
    loss: str = "mse"
    seed: int = 0
    kan_domain: tuple[float, float] = DEFAULT_DOMAIN

    def __post_init__(self):
        self.kan_domain = tuple(float(v) for v in self.kan_domain)
        self.validate()

    def validate(self):
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown variant {self.variant!r}; expected one of {VARIANTS}")
        for name in ("L", "H", "C", "batch", "blocks", "hidden_size"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or isinstance(v, bool) or v < 1:
                raise ConfigError(f"{name} must be a positive integer, got {v!r}")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError(f"dropout must be in [0, 1), got {self.dropout}")
        if not self.learning_rate > 0:
            raise ConfigError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.loss not in LOSSES:
            raise ConfigError(f"loss must be one of {LOSSES}, got {self.loss!r}")
        if self.variant == "tsmixer":
            extra = [f for f in KAN_FIELDS if getattr(self, f) is not None]
            if extra:
                raise ConfigError(f"tsmixer takes no KAN settings, got {extra}")
        else:
            missing = [f for f in KAN_FIELDS if getattr(self, f) is None]
            if missing:
                raise ConfigError(f"variant {self.variant} requires {missing}")
            if self.kan_dim < 1 or self.kan_grid < 1:
                raise ConfigError("kan_dim and kan_grid must be positive")
            if self.kan_k < 1:
                raise ConfigError("kan_k must be >= 1 (degree-0 splines have no usable gradient)")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["kan_domain"] = list(self.kan_domain)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        d = dict(d)
        if "kan_domain" in d:
            d["kan_domain"] = tuple(d["kan_domain"])
        return cls(**d)


def _uniform(rng, fan_in, shape):
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


def _dropout_mask(rng, shape, p):
    if p == 0.0 or rng is None:
        return None
    return (rng.random(shape) >= p) / (1.0 - p)


class BatchNorm:
    """Batch normalisation with separate statistics per (time, feature) slot.

    Training mode normalises with the batch's own mean and (biased) variance
    and folds them into running estimates with momentum 0.1; eval mode uses
    the running estimates.
    """

    eps = 1e-5
    momentum = 0.1

    def __init__(self, L: int, C: int):
        self.gamma = np.ones((L, C))
        self.beta = np.zeros((L, C))
        self.running_mean = np.zeros((L, C))
        self.running_var = np.ones((L, C))

    def parameters(self):
        return {"gamma": self.gamma, "beta": self.beta}

    def buffers(self):
        return {"running_mean": self.running_mean, "running_var": self.running_var}

    def forward(self, x, training: bool, update_stats: bool = True):
        if training:
            mean = x.mean(axis=0)
            var = x.var(axis=0)
            if update_stats:
                B = x.shape[0]
                unbiased = var * B / (B - 1) if B > 1 else var
                self.running_mean[...] = (1 - self.momentum) * self.running_mean + self.momentum * mean
                self.running_var[...] = (1 - self.momentum) * self.running_var + self.momentum * unbiased
        else:
            mean, var = self.running_mean, self.running_var
        inv_std = 1.0 / np.sqrt(var + self.eps)
        xhat = (x - mean) * inv_std
        return self.gamma * xhat + self.beta, (xhat, inv_std, training)

    def backward(self, cache, grad):
        xhat, inv_std, training = cache
        grads = {"gamma": (grad * xhat).sum(axis=0), "beta": grad.sum(axis=0)}
        dxhat = grad * self.gamma
        if not training:
            return dxhat * inv_std, grads
        B = grad.shape[0]
        dx = inv_std / B * (B * dxhat - dxhat.sum(axis=0) - xhat * (dxhat * xhat).sum(axis=0))
        return dx, grads


class MixerBlock:
    """One time-mixing MLP followed by one feature-mixing MLP, each residual."""

    def __init__(self, L: int, C: int, hidden: int, dropout: float, rng, use_norm: bool = True):
        self.L, self.C, self.hidden = L, C, hidden
        self.dropout = dropout
        self.use_norm = use_norm
        self.time_norm = BatchNorm(L, C)
        self.feat_norm = BatchNorm(L, C)
        self.time_w = _uniform(rng, L, (L, L))
        self.time_b = _uniform(rng, L, (L,))
        self.feat_w1 = _uniform(rng, C, (C, hidden))
        self.feat_b1 = _uniform(rng, C, (hidden,))
        self.feat_w2 = _uniform(rng, hidden, (hidden, C))
        self.feat_b2 = _uniform(rng, hidden, (C,))

    def parameters(self):
        p = {
            "time_w": self.time_w, "time_b": self.time_b,
            "feat_w1": self.feat_w1, "feat_b1": self.feat_b1,
            "feat_w2": self.feat_w2, "feat_b2": self.feat_b2,
        }
        if self.use_norm:
            p.update({f"time_norm.{k}": v for k, v in self.time_norm.parameters().items()})
            p.update({f"feat_norm.{k}": v for k, v in self.feat_norm.parameters().items()})
        return p

    def buffers(self):
        if not self.use_norm:
            return {}
        b = {f"time_norm.{k}": v for k, v in self.time_norm.buffers().items()}
        b.update({f"feat_norm.{k}": v for k, v in self.feat_norm.buffers().items()})
        return b

    def _norm(self, norm, x, training, update_stats):
        if not self.use_norm:
            return x, None
        return norm.forward(x, training, update_stats)

    def time_mixing_forward(self, x, training=False, rng=None, update_stats=True):
        if x.ndim != 3 or x.shape[1:] != (self.L, self.C):
            raise ShapeError(f"time mixing expects [B, {self.L}, {self.C}], got {x.shape}")
        xn, ncache = self._norm(self.time_norm, x, training, update_stats)
        t = transpose_time_feature(xn)  # [B, C, L]
        z = t @ self.time_w + self.time_b
        a = relu.f(z)
        mask = _dropout_mask(rng, a.shape, self.dropout) if training else None
        if mask is not None:
            a = a * mask
        out = x + transpose_time_feature(a)
        return out, (ncache, t, z, mask)

    def time_mixing_backward(self, cache, grad):
        ncache, t, z, mask = cache
        ga = transpose_time_feature(grad)
        if mask is not None:
            ga = ga * mask
        gz = ga * relu.df(z)
        grads = {
            "time_w": np.einsum("bcl,bcm->lm", t, gz),
            "time_b": gz.sum(axis=(0, 1)),
        }
        gxn = transpose_time_feature(gz @ self.time_w.T)
        gx = grad + self._norm_backward(self.time_norm, "time_norm", ncache, gxn, grads)
        return gx, grads

    def feature_mixing_forward(self, x, training=False, rng=None, update_stats=True):
        if x.ndim != 3 or x.shape[1:] != (self.L, self.C):
            raise ShapeError(f"feature mixing expects [B, {self.L}, {self.C}], got {x.shape}")
        xn, ncache = self._norm(self.feat_norm, x, training, update_stats)
        z1 = xn @ self.feat_w1 + self.feat_b1
        a1 = relu.f(z1)
        m1 = _dropout_mask(rng, a1.shape, self.dropout) if training else None
        if m1 is not None:
            a1 = a1 * m1
        z2 = a1 @ self.feat_w2 + self.feat_b2
        m2 = _dropout_mask(rng, z2.shape, self.dropout) if training else None
        out = x + (z2 * m2 if m2 is not None else z2)
        return out, (ncache, xn, z1, a1, m1, m2)

    def feature_mixing_backward(self, cache, grad):
        ncache, xn, z1, a1, m1, m2 = cache
        gz2 = grad * m2 if m2 is not None else grad
        grads = {
            "feat_w2": np.einsum("blh,blc->hc", a1, gz2),
            "feat_b2": gz2.sum(axis=(0, 1)),
        }
        ga1 = gz2 @ self.feat_w2.T
        if m1 is not None:
            ga1 = ga1 * m1
        gz1 = ga1 * relu.df(z1)
        grads["feat_w1"] = np.einsum("blc,blh->ch", xn, gz1)
        grads["feat_b1"] = gz1.sum(axis=(0, 1))
        gxn = gz1 @ self.feat_w1.T
        gx = grad + self._norm_backward(self.feat_norm, "feat_norm", ncache, gxn, grads)
        return gx, grads

    def _norm_backward(self, norm, prefix, ncache, g, grads):
        if not self.use_norm:
            return g
        gx, ng = norm.backward(ncache, g)
        grads.update({f"{prefix}.{k}": v for k, v in ng.items()})
        return gx

    def forward(self, x, training=False, rng=None, update_stats=True):
        h, c1 = self.time_mixing_forward(x, training, rng, update_stats)
        y, c2 = self.feature_mixing_forward(h, training, rng, update_stats)
        return y, (c1, c2)

    def backward(self, cache, grad):
        c1, c2 = cache
        gh, grads = self.feature_mixing_backward(c2, grad)
        gx, g1 = self.time_mixing_backward(c1, gh)
        grads.update(g1)
        return gx, grads


def time_mixing_forward(block: MixerBlock, x, training: bool, rng=None):
    return block.time_mixing_forward(np.asarray(x, dtype=DTYPE), training, rng)[0]


def feature_mixing_forward(block: MixerBlock, x, training: bool, rng=None):
    return block.feature_mixing_forward(np.asarray(x, dtype=DTYPE), training, rng)[0]


class DenseProjection:
    """Linear map from L to H along time, shared by every feature."""

    def __init__(self, L: int, H: int, rng):
        self.L, self.H = L, H
        self.weight = _uniform(rng, L, (L, H))
        self.bias = _uniform(rng, L, (H,))

    def parameters(self):
        return {"weight": self.weight, "bias": self.bias}

    def buffers(self):
        return {}

    def forward(self, x):
        if x.ndim != 3 or x.shape[1] != self.L:
            raise ShapeError(f"projection expects [B, {self.L}, C], got {x.shape}")
        t = transpose_time_feature(x)  # [B, C, L]
        return transpose_time_feature(t @ self.weight + self.bias), t

    def backward(self, t, grad):
        gy = transpose_time_feature(grad)  # [B, C, H]
        grads = {"weight": np.einsum("bcl,bch->lh", t, gy), "bias": gy.sum(axis=(0, 1))}
        return transpose_time_feature(gy @ self.weight.T), grads


def temporal_projection_fc(weights, x, bias=None):
    """Apply an ``[L, H]`` weight matrix along the time axis of ``[B, L, C]``."""
    x = np.asarray(x, dtype=DTYPE)
    weights = np.asarray(weights, dtype=DTYPE)
    if x.ndim != 3 or weights.ndim != 2 or x.shape[1] != weights.shape[0]:
        raise ShapeError(f"cannot project {x.shape} with weights {weights.shape}")
    y = transpose_time_feature(x) @ weights
    if bias is not None:
        y = y + bias
    return check_finite(transpose_time_feature(y), "temporal projection")


def _columns(x):
    B, L, C = x.shape
    return transpose_time_feature(x).reshape(B * C, L)


def _uncolumns(cols, B, C):
    return transpose_time_feature(cols.reshape(B, C, -1))


class KanProjection:
    """Two-depth KAN applied to each feature's time column: ``L -> kan_dim -> H``."""

    def __init__(self, kan: TwoDepthKan):
        self.kan = kan

    def parameters(self):
        return self.kan.parameters()

    def buffers(self):
        return {}

    def forward(self, x):
        if x.ndim != 3 or x.shape[1] != self.kan.n_in:
            raise ShapeError(f"KAN projection expects [B, {self.kan.n_in}, C], got {x.shape}")
        B, _, C = x.shape
        y, cache = self.kan.forward(_columns(x))
        return _uncolumns(y, B, C), (cache, B, C)

    def backward(self, cache, grad):
        kcache, B, C = cache
        gcols, grads = self.kan.backward(kcache, _columns(grad))
        return _uncolumns(gcols, B, C), grads


class KanTimeMixing(KanProjection):
    """Residual KAN along time: ``x + KAN(x)`` with KAN ``L -> kan_dim -> L``."""

    def __init__(self, kan: TwoDepthKan):
        if kan.n_in != kan.n_out:
            raise ShapeError(f"KAN time mixing must preserve length, got {kan.n_in} -> {kan.n_out}")
        super().__init__(kan)

    def forward(self, x):
        y, cache = super().forward(x)
        return x + y, cache

    def backward(self, cache, grad):
        gx, grads = super().backward(cache, grad)
        return grad + gx, grads


def temporal_projection_kan(kan: TwoDepthKan, x):
    x = np.asarray(x, dtype=DTYPE)
    if x.ndim != 3:
        raise ShapeError(f"expected [B, L, C], got {x.shape}")
    return KanProjection(kan).forward(x)[0]


def kan_time_mixing_forward(kan: TwoDepthKan, x):
    x = np.asarray(x, dtype=DTYPE)
    if x.ndim != 3:
        raise ShapeError(f"expected [B, L, C], got {x.shape}")
    return KanTimeMixing(kan).forward(x)[0]


class ForecastModel:
    """A configured TSMixer / TSKANMixer network with flat named parameters."""

    def __init__(self, config: ModelConfig, use_norm: bool = True):
        config.validate()
        self.config = config
        rng = np.random.default_rng(config.seed)
        self.blocks = [
            MixerBlock(config.L, config.C, config.hidden_size, config.dropout, rng, use_norm)
            for _ in range(config.blocks)
        ]
        self.kan_mixing = None
        if config.variant == "tskanmixer_v01":
            self.projection = KanProjection(self._kan(config.L, config.H, rng))
        else:
            if config.variant == "tskanmixer_v02":
                self.kan_mixing = KanTimeMixing(self._kan(config.L, config.L, rng))
            self.projection = DenseProjection(config.L, config.H, rng)

    def _kan(self, n_in, n_out, rng):
        c = self.config
        return TwoDepthKan.init(n_in, n_out, hidden=c.kan_dim, G=c.kan_grid, k=c.kan_k,
                                domain=c.kan_domain, rng_seed=rng)

    def _components(self):
        for i, block in enumerate(self.blocks):
            yield f"blocks.{i}", block
        if self.kan_mixing is not None:
            yield "kan_mixing", self.kan_mixing
        yield "projection", self.projection

    def parameters(self) -> dict[str, np.ndarray]:
        """Live references to every trainable array, in a fixed order."""
        return {f"{prefix}.{k}": v for prefix, comp in self._components() for k, v in comp.parameters().items()}

    def buffers(self) -> dict[str, np.ndarray]:
        return {f"{prefix}.{k}": v for prefix, comp in self._components() for k, v in comp.buffers().items()}

    def state(self) -> dict[str, np.ndarray]:
        s = self.parameters()
        s.update(self.buffers())
        return s

    def load_state(self, state: dict[str, np.ndarray]):
        own = self.state()
        if set(own) != set(state):
            missing, extra = sorted(set(own) - set(state)), sorted(set(state) - set(own))
            raise ShapeError(f"state mismatch: missing {missing}, unexpected {extra}")
        for name, arr in own.items():
            if arr.shape != np.shape(state[name]):
                raise ShapeError(f"{name}: expected shape {arr.shape}, got {np.shape(state[name])}")
            arr[...] = state[name]

    def snapshot(self) -> dict[str, np.ndarray]:
        return {k: v.copy() for k, v in self.state().items()}

    def num_parameters(self) -> int:
        return sum(p.size for p in self.parameters().values())

    def forward(self, x, training=False, rng=None, update_stats=True):
        x = np.asarray(x, dtype=DTYPE)
        c = self.config
        if x.ndim != 3 or x.shape[1:] != (c.L, c.C):
            raise ShapeError(f"model expects input [B, {c.L}, {c.C}], got {x.shape}")
        caches = []
        h = x
        for block in self.blocks:
            h, cache = block.forward(h, training, rng, update_stats)
            caches.append(cache)
        if self.kan_mixing is not None:
            h, cache = self.kan_mixing.forward(h)
            caches.append(cache)
        y, cache = self.projection.forward(h)
        caches.append(cache)
        return check_finite(y, "model forward"), caches

    def backward(self, caches, grad) -> dict[str, np.ndarray]:
        grads = {}
        comps = list(self._components())
        g = grad
        for (prefix, comp), cache in zip(reversed(comps), reversed(caches)):
            g, cg = comp.backward(cache, g)
            grads.update({f"{prefix}.{k}": v for k, v in cg.items()})
        return {name: grads[name] for name in self.parameters()}

    def predict(self, x, batch_size: int = 1024) -> np.ndarray:
        x = np.asarray(x, dtype=DTYPE)
        parts = [self.forward(x[i:i + batch_size], training=False)[0] for i in range(0, len(x), batch_size)]
        return np.concatenate(parts, axis=0) if parts else np.zeros((0, self.config.H, self.config.C))


def model_forward(model: ForecastModel, x, training: bool, rng=None):
    return model.forward(x, training, rng)[0]
