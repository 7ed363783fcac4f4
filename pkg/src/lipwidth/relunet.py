"""Constant-width feed-forward ReLU nets as parameter-to-function maps.

The parameter vector concatenates the affine layers in order (layer 0
first), each layer as row-major matrix entries followed by its bias.  On
the unit sup-norm parameter ball the map into C([0,1]^d) is Lipschitz with
the exact recursion constant

    C_0 = d + 1,    C_j = W * C_{j-1} + (d + 2) * W**j + 1,

computed in exact integer arithmetic, and C_n < (2d+4) * n * W**n.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .spaces import PreconditionError

# Default sup-norm grid resolution per axis, by input dimension.
DEFAULT_GRID = {1: 256, 2: 16, 3: 8}


@dataclass(frozen=True)
class ReLUNetConfig:
    d: int          # input dimension
    width: int      # constant hidden width W >= 2
    depth: int      # number of hidden activations n >= 1
    grid: Optional[int] = None  # points per axis for the C(Omega) sup

    def __post_init__(self):
        if self.d < 1 or self.depth < 1:
            raise PreconditionError("d and depth must be >= 1")
        if self.width < 2:
            raise PreconditionError("width must be >= 2")

    @property
    def grid_points(self) -> int:
        return self.grid if self.grid is not None else DEFAULT_GRID.get(self.d, 4)


def param_count(d: int, width: int, depth: int) -> int:
    """W(d+1) + (n-1) W(W+1) + (W+1): all matrix entries plus biases."""
    if d < 1 or width < 1 or depth < 1:
        raise PreconditionError("d, width, depth must be >= 1")
    return width * (d + 1) + (depth - 1) * width * (width + 1) + (width + 1)


def layer_slices(cfg: ReLUNetConfig) -> list:
    """(matrix_slice, bias_slice, rows, cols) per affine layer, in order."""
    W, d, n = cfg.width, cfg.d, cfg.depth
    shapes = [(W, d)] + [(W, W)] * (n - 1) + [(1, W)]
    out = []
    pos = 0
    for rows, cols in shapes:
        a = slice(pos, pos + rows * cols)
        pos += rows * cols
        b = slice(pos, pos + rows)
        pos += rows
        out.append((a, b, rows, cols))
    return out


def split_params(cfg: ReLUNetConfig, y: np.ndarray) -> list:
    """[(A_0, b_0), ..., (A_n, b_n)] from the flat parameter vector."""
    y = np.asarray(y, dtype=float)
    want = param_count(cfg.d, cfg.width, cfg.depth)
    if y.shape != (want,):
        raise PreconditionError(f"expected {want} parameters, got {y.shape}")
    layers = []
    for a, b, rows, cols in layer_slices(cfg):
        layers.append((y[a].reshape(rows, cols), y[b]))
    return layers


def layer_output_bound(d: int, width: int, j: int) -> int:
    """(d+2) * W**j, valid for the post-activation output of layer j."""
    return (d + 2) * width ** j


def forward(cfg: ReLUNetConfig, y: np.ndarray, x, check_bounds: bool = True) -> float:
    """Evaluate the net at one input point; asserts the layer output bounds."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape != (cfg.d,):
        raise PreconditionError(f"input must have dimension {cfg.d}")
    if np.any(x < -1e-12) or np.any(x > 1.0 + 1e-12):
        raise PreconditionError("input outside [0,1]^d")
    if float(np.abs(np.asarray(y)).max()) > 1.0 + 1e-12:
        raise PreconditionError("parameter vector outside the unit sup ball")
    layers = split_params(cfg, y)
    h = x
    for j, (A, b) in enumerate(layers[:-1]):
        h = np.maximum(A @ h + b, 0.0)
        if check_bounds:
            cap = layer_output_bound(cfg.d, cfg.width, j)
            if float(np.abs(h).max()) > cap + 1e-9:
                raise AssertionError(f"layer {j} output exceeded (d+2) W^{j} = {cap}")
    A, b = layers[-1]
    return float((A @ h + b)[0])


@dataclass(frozen=True)
class LipBoundTrace:
    output_bounds: tuple      # (d+2) W^j per layer j = 0..n-1, exact ints
    constants: tuple          # C_0..C_n, exact ints
    final: int                # C_n
    coarse: int               # (2d+4) * n * W^n
    coarse_coeff: int         # 2d+4


def lip_bound(cfg: ReLUNetConfig) -> LipBoundTrace:
    """Exact recursion constants (Python integers never overflow)."""
    d, W, n = cfg.d, cfg.width, cfg.depth
    consts = [d + 1]
    for j in range(1, n + 1):
        consts.append(W * consts[-1] + (d + 2) * W ** j + 1)
    coeff = 2 * d + 4
    coarse = coeff * n * W ** n
    if consts[-1] >= coarse:
        raise AssertionError("recursion constant not below the coarse bound")
    return LipBoundTrace(
        output_bounds=tuple(layer_output_bound(d, W, j) for j in range(n)),
        constants=tuple(consts),
        final=consts[-1],
        coarse=coarse,
        coarse_coeff=coeff,
    )


def closed_form_constant(cfg: ReLUNetConfig, j: int) -> int:
    """Unrolled form W^j (d+1) + j (d+2) W^j + sum_{k<j} W^k of the recursion."""
    d, W = cfg.d, cfg.width
    return W ** j * (d + 1) + j * (d + 2) * W ** j + sum(W ** k for k in range(j))


def input_grid(cfg: ReLUNetConfig) -> np.ndarray:
    """Tensor sampling grid of [0,1]^d, (G^d, d)."""
    g = cfg.grid_points
    axis = np.linspace(0.0, 1.0, g)
    mesh = np.meshgrid(*([axis] * cfg.d), indexing="ij")
    return np.stack([m.reshape(-1) for m in mesh], axis=1)


def _batched_forward(cfg: ReLUNetConfig, ys: np.ndarray, X: np.ndarray,
                     track_layers: bool = False):
    """Outputs (T, P) for T parameter vectors over P grid points."""
    T = ys.shape[0]
    h = np.broadcast_to(X.T, (T,) + X.T.shape)  # (T, d, P)
    layer_max = []
    slices = layer_slices(cfg)
    for j, (a, b, rows, cols) in enumerate(slices[:-1]):
        A = ys[:, a].reshape(T, rows, cols)
        bias = ys[:, b]
        h = np.maximum(np.matmul(A, h) + bias[:, :, None], 0.0)
        if track_layers:
            layer_max.append(float(np.abs(h).max()))
    a, b, rows, cols = slices[-1]
    A = ys[:, a].reshape(T, rows, cols)
    out = np.matmul(A, h) + ys[:, b][:, :, None]
    return (out[:, 0, :], layer_max) if track_layers else out[:, 0, :]


@dataclass(frozen=True)
class VerifyResult:
    config: ReLUNetConfig
    trials: int
    max_ratio: float
    bound: int               # C_n
    coarse: int
    passed: bool
    layer_bound_ok: bool
    layer_max_observed: tuple = field(default=(), compare=False)


def verify_lipschitz(cfg: ReLUNetConfig, seed: int, trials: int,
                     chunk: int = 512) -> VerifyResult:
    """Falsification test of the recursion constant on sampled parameter pairs.

    Per pair: sup over the input grid of |Phi(y) - Phi(y')| divided by
    ||y - y'||_inf.  The grid under-approximates the true sup, which only
    makes the test direction (ratio <= bound) conservative.
    """
    if trials < 1:
        raise PreconditionError("trials must be >= 1")
    trace = lip_bound(cfg)
    X = input_grid(cfg)
    npar = param_count(cfg.d, cfg.width, cfg.depth)
    best = 0.0
    layer_seen = [0.0] * cfg.depth
    layer_ok = True
    done = 0
    widx = 0
    while done < trials:
        take = min(chunk, trials - done)
        rng = np.random.default_rng((int(seed) ^ widx) & 0xFFFFFFFFFFFFFFFF)
        ya = rng.uniform(-1.0, 1.0, size=(take, npar))
        yb = rng.uniform(-1.0, 1.0, size=(take, npar))
        sep = np.abs(ya - yb).max(axis=1)
        oa, lm_a = _batched_forward(cfg, ya, X, track_layers=True)
        ob, lm_b = _batched_forward(cfg, yb, X, track_layers=True)
        for j in range(cfg.depth - 1):
            seen = max(lm_a[j], lm_b[j])
            layer_seen[j] = max(layer_seen[j], seen)
            if seen > trace.output_bounds[j] + 1e-9:
                layer_ok = False
        diff = np.abs(oa - ob).max(axis=1)
        ok = sep > 0
        if np.any(ok):
            best = max(best, float((diff[ok] / sep[ok]).max()))
        done += take
        widx += 1
    return VerifyResult(
        config=cfg,
        trials=trials,
        max_ratio=best,
        bound=trace.final,
        coarse=trace.coarse,
        passed=best <= trace.final and layer_ok,
        layer_bound_ok=layer_ok,
        layer_max_observed=tuple(layer_seen),
    )
