"""Kolmogorov-Arnold layers with B-spline edge functions.

Every edge ``(j, i)`` of a layer carries its own univariate function

    phi_ji(t) = base_weight[j, i] * silu(t) + spline_weight[j, i] * sum_m coeffs[j, i, m] * B_m(t)

and output ``j`` is the plain sum of its incoming edges. All edges of a layer
share one knot grid.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .spline import KnotGrid, GridError, basis_derivatives, basis_values, make_grid, DEFAULT_DOMAIN
from .tensor import DTYPE, ShapeError, check_finite, silu


@dataclass
class KanLayerParams:
    grid: KnotGrid
    coeffs: np.ndarray  # [n_out, n_in, G + k]
    base_weight: np.ndarray  # [n_out, n_in]
    spline_weight: np.ndarray  # [n_out, n_in]

    def __post_init__(self):
        n_out, n_in = self.base_weight.shape
        if self.coeffs.shape != (n_out, n_in, self.grid.n_basis):
            raise ShapeError(
                f"coeffs shape {self.coeffs.shape} does not match (n_out, n_in, G+k) = "
                f"{(n_out, n_in, self.grid.n_basis)}"
            )
        if self.spline_weight.shape != (n_out, n_in):
            raise ShapeError(f"spline_weight shape {self.spline_weight.shape} != {(n_out, n_in)}")

    @property
    def n_in(self) -> int:
        return self.base_weight.shape[1]

    @property
    def n_out(self) -> int:
        return self.base_weight.shape[0]

    def parameters(self) -> dict[str, np.ndarray]:
        return {"coeffs": self.coeffs, "base_weight": self.base_weight, "spline_weight": self.spline_weight}

    def num_parameters(self) -> int:
        return sum(p.size for p in self.parameters().values())


def kan_init(n_in: int, n_out: int, grid: KnotGrid, rng_seed) -> KanLayerParams:
    """Seeded initialisation: small Gaussian spline coefficients, silu base
    scaled by ``1/sqrt(n_in)`` and unit spline weights.

    ``rng_seed`` may be an int or a ``numpy.random.Generator``.
    """
    if n_in < 1 or n_out < 1:
        raise ShapeError(f"KAN layer dims must be positive, got n_in={n_in}, n_out={n_out}")
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
    std = 0.1 / np.sqrt(grid.n_basis)
    coeffs = rng.normal(0.0, std, size=(n_out, n_in, grid.n_basis))
    return KanLayerParams(
        grid=grid,
        coeffs=coeffs,
        base_weight=np.full((n_out, n_in), 1.0 / np.sqrt(n_in)),
        spline_weight=np.ones((n_out, n_in)),
    )


def _check_input(params: KanLayerParams, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=DTYPE)
    if x.ndim != 2 or x.shape[1] != params.n_in:
        raise ShapeError(f"KAN layer expects input [B, {params.n_in}], got shape {x.shape}")
    return x


def _effective_coeffs(params: KanLayerParams) -> np.ndarray:
    return (params.spline_weight[:, :, None] * params.coeffs).reshape(params.n_out, -1)


def kan_layer_forward(params: KanLayerParams, x: np.ndarray) -> np.ndarray:
    y, _ = kan_layer_forward_cached(params, x)
    return y


def kan_layer_forward_cached(params: KanLayerParams, x: np.ndarray):
    x = _check_input(params, x)
    B = x.shape[0]
    basis = basis_values(params.grid, x)  # [B, n_in, nb]
    y = silu.f(x) @ params.base_weight.T + basis.reshape(B, -1) @ _effective_coeffs(params).T
    return check_finite(y, "kan layer"), (x, basis)


def kan_layer_backward(params: KanLayerParams, x: np.ndarray, upstream_grad: np.ndarray, cache=None):
    """Analytic gradients of the layer output contracted with ``upstream_grad``.

    Returns ``(grad_x, grads)`` where ``grads`` maps parameter names to arrays
    shaped like the parameters. The spline term has zero slope for inputs
    outside the grid domain, since the clamp there makes it constant.
    """
    if cache is None:
        x = _check_input(params, x)
        basis = basis_values(params.grid, x)
    else:
        x, basis = cache
    g = np.asarray(upstream_grad, dtype=DTYPE)
    if g.shape != (x.shape[0], params.n_out):
        raise ShapeError(f"upstream grad shape {g.shape} != {(x.shape[0], params.n_out)}")
    B = x.shape[0]
    n_out, n_in, nb = params.coeffs.shape

    g_eff = (g.T @ basis.reshape(B, -1)).reshape(n_out, n_in, nb)
    grads = {
        "coeffs": g_eff * params.spline_weight[:, :, None],
        "spline_weight": np.einsum("jim,jim->ji", g_eff, params.coeffs),
        "base_weight": g.T @ silu.f(x),
    }

    dbasis = basis_derivatives(params.grid, x)
    grid = params.grid
    inside = (x > grid.domain_min) & (x < grid.domain_max)
    dbasis *= inside[..., None]
    back = (g @ _effective_coeffs(params)).reshape(B, n_in, nb)
    grad_x = silu.df(x) * (g @ params.base_weight) + np.einsum("bim,bim->bi", back, dbasis)
    return grad_x, grads


@dataclass
class TwoDepthKan:
    """Two stacked KAN layers ``n_in -> hidden -> n_out``."""

    inner: KanLayerParams
    outer: KanLayerParams

    def __post_init__(self):
        if self.inner.n_out != self.outer.n_in:
            raise ShapeError(
                f"two-depth KAN width mismatch: inner n_out={self.inner.n_out}, outer n_in={self.outer.n_in}"
            )

    @classmethod
    def init(cls, n_in: int, n_out: int, hidden: int | None = None, G: int = 5, k: int = 3,
             domain=DEFAULT_DOMAIN, rng_seed=0) -> "TwoDepthKan":
        """``hidden`` defaults to ``2 * n_in + 1``."""
        if k < 1:
            raise GridError("KAN layers need spline degree k >= 1 for backpropagation")
        if hidden is None:
            hidden = 2 * n_in + 1
        rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
        grid = make_grid(domain[0], domain[1], G, k)
        return cls(kan_init(n_in, hidden, grid, rng), kan_init(hidden, n_out, grid, rng))

    @property
    def n_in(self) -> int:
        return self.inner.n_in

    @property
    def n_out(self) -> int:
        return self.outer.n_out

    @property
    def hidden(self) -> int:
        return self.inner.n_out

    def parameters(self) -> dict[str, np.ndarray]:
        out = {}
        for prefix, layer in (("inner", self.inner), ("outer", self.outer)):
            for name, p in layer.parameters().items():
                out[f"{prefix}.{name}"] = p
        return out

    def forward(self, x):
        h, c1 = kan_layer_forward_cached(self.inner, x)
        y, c2 = kan_layer_forward_cached(self.outer, h)
        return y, (c1, c2)

    def backward(self, cache, grad):
        c1, c2 = cache
        gh, g_outer = kan_layer_backward(self.outer, c2[0], grad, cache=c2)
        gx, g_inner = kan_layer_backward(self.inner, c1[0], gh, cache=c1)
        grads = {f"inner.{n}": v for n, v in g_inner.items()}
        grads.update({f"outer.{n}": v for n, v in g_outer.items()})
        return gx, grads


def two_depth_forward(kan: TwoDepthKan, x: np.ndarray) -> np.ndarray:
    return kan.forward(x)[0]


def two_depth_backward(kan: TwoDepthKan, x: np.ndarray, upstream_grad: np.ndarray):
    _, cache = kan.forward(x)
    return kan.backward(cache, upstream_grad)
