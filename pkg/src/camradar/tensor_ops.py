"""Dense tensor primitives shared by every stage of the pipeline.

Feature maps are plain float64 ndarrays, channel axis first, row-major:
2D maps are (C, H, W), volumes are (C, H, W, Z). Sampling coordinates are
given in grid units where integer coordinates land exactly on stored
cells; x indexes the W axis, y the H axis, z the Z axis. Out-of-bounds
samples contribute zeros (zero padding). All operations are pure and
deterministic.
"""

from __future__ import annotations

import struct

import numpy as np

__all__ = [
    "bilinear_sample",
    "trilinear_sample",
    "resize_bilinear",
    "softmax",
    "sigmoid",
    "relu",
    "conv2d",
    "conv3d",
    "conv_transpose3d",
    "dump_text",
    "load_text",
    "dump_binary",
    "load_binary",
]

_MAGIC = b"DTNS"


def _as_points(points, dim: int) -> np.ndarray:
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts.reshape(1, dim)
    if pts.ndim != 2 or pts.shape[1] != dim:
        raise ValueError(f"expected points of shape (N, {dim}), got {pts.shape}")
    if not np.all(np.isfinite(pts)):
        raise ValueError("sample points must be finite")
    return pts


def bilinear_sample(feature_map: np.ndarray, points) -> np.ndarray:
    """Sample a (C, H, W) map at (x, y) grid-unit points -> (C, N).

    4-neighbour bilinear interpolation; neighbours outside
    [0, W-1] x [0, H-1] contribute zero.
    """
    fmap = np.asarray(feature_map, dtype=np.float64)
    if fmap.ndim != 3:
        raise ValueError(f"expected a (C, H, W) map, got shape {fmap.shape}")
    _, h, w = fmap.shape
    pts = _as_points(points, 2)
    x, y = pts[:, 0], pts[:, 1]

    x0 = np.floor(x).astype(np.int64)
    y0 = np.floor(y).astype(np.int64)
    fx = x - x0
    fy = y - y0

    out = None
    for dy, dx, wgt in (
        (0, 0, (1 - fy) * (1 - fx)),
        (0, 1, (1 - fy) * fx),
        (1, 0, fy * (1 - fx)),
        (1, 1, fy * fx),
    ):
        xi = x0 + dx
        yi = y0 + dy
        inside = (xi >= 0) & (xi < w) & (yi >= 0) & (yi < h)
        vals = fmap[:, yi.clip(0, h - 1), xi.clip(0, w - 1)] * (wgt * inside)
        out = vals if out is None else out + vals
    return out


def trilinear_sample(volume: np.ndarray, points) -> np.ndarray:
    """Sample a (C, H, W, Z) volume at (x, y, z) grid-unit points -> (C, N).

    8-neighbour trilinear interpolation with zero padding outside bounds.
    """
    vol = np.asarray(volume, dtype=np.float64)
    if vol.ndim != 4:
        raise ValueError(f"expected a (C, H, W, Z) volume, got shape {vol.shape}")
    _, h, w, d = vol.shape
    pts = _as_points(points, 3)
    x, y, z = pts[:, 0], pts[:, 1], pts[:, 2]

    x0 = np.floor(x).astype(np.int64)
    y0 = np.floor(y).astype(np.int64)
    z0 = np.floor(z).astype(np.int64)
    fx, fy, fz = x - x0, y - y0, z - z0

    out = None
    for dz in (0, 1):
        wz = fz if dz else 1 - fz
        for dy in (0, 1):
            wy = fy if dy else 1 - fy
            for dx in (0, 1):
                wx = fx if dx else 1 - fx
                xi, yi, zi = x0 + dx, y0 + dy, z0 + dz
                inside = (
                    (xi >= 0) & (xi < w) & (yi >= 0) & (yi < h) & (zi >= 0) & (zi < d)
                )
                vals = vol[:, yi.clip(0, h - 1), xi.clip(0, w - 1), zi.clip(0, d - 1)]
                out_term = vals * (wx * wy * wz * inside)
                out = out_term if out is None else out + out_term
    return out


def _resize_coords(n_in: int, n_out: int) -> np.ndarray:
    # align-corners: first/last output cells coincide with first/last input
    # cells; a single output cell sits at the input centre.
    if n_out == 1:
        return np.full(1, (n_in - 1) / 2.0)
    return np.arange(n_out) * ((n_in - 1) / (n_out - 1))


def resize_bilinear(feature_map: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Resize a (C, H, W) map to (C, out_h, out_w), align-corners."""
    fmap = np.asarray(feature_map, dtype=np.float64)
    if fmap.ndim != 3:
        raise ValueError(f"expected a (C, H, W) map, got shape {fmap.shape}")
    if out_h < 1 or out_w < 1:
        raise ValueError("output extents must be >= 1")
    c = fmap.shape[0]
    ys = _resize_coords(fmap.shape[1], out_h)
    xs = _resize_coords(fmap.shape[2], out_w)
    gx, gy = np.meshgrid(xs, ys)
    pts = np.stack([gx.ravel(), gy.ravel()], axis=1)
    return bilinear_sample(fmap, pts).reshape(c, out_h, out_w)


def softmax(values: np.ndarray, axis: int = -1) -> np.ndarray:
    """Numerically stable softmax along ``axis``."""
    v = np.asarray(values, dtype=np.float64)
    shifted = v - np.max(v, axis=axis, keepdims=True)
    e = np.exp(shifted)
    return e / np.sum(e, axis=axis, keepdims=True)


def sigmoid(values: np.ndarray) -> np.ndarray:
    v = np.asarray(values, dtype=np.float64)
    out = np.empty_like(v)
    pos = v >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-v[pos]))
    ev = np.exp(v[~pos])
    out[~pos] = ev / (1.0 + ev)
    return out


def relu(values: np.ndarray) -> np.ndarray:
    return np.maximum(np.asarray(values, dtype=np.float64), 0.0)


def _conv_nd(x: np.ndarray, kernel: np.ndarray, stride: int, padding: int, nd: int):
    if x.ndim != nd + 1 or kernel.ndim != nd + 2:
        raise ValueError(
            f"conv{nd}d expects input with {nd + 1} dims and kernel with {nd + 2}"
        )
    if kernel.shape[1] != x.shape[0]:
        raise ValueError(
            f"kernel input channels {kernel.shape[1]} != input channels {x.shape[0]}"
        )
    kdims = kernel.shape[2:]
    if any(k % 2 == 0 for k in kdims):
        raise ValueError(f"kernel spatial dims must be odd, got {kdims}")
    pad = [(0, 0)] + [(padding, padding)] * nd
    xp = np.pad(x, pad)
    windows = np.lib.stride_tricks.sliding_window_view(xp, kdims, axis=tuple(range(1, nd + 1)))
    # windows: (C_in, *out_full, *k); stride by slicing the output axes
    slicer = (slice(None),) + (slice(None, None, stride),) * nd
    windows = windows[slicer]
    if nd == 2:
        return np.einsum("cijhw,ochw->oij", windows, kernel, optimize=True)
    return np.einsum("cijkhwd,ochwd->oijk", windows, kernel, optimize=True)


def conv2d(x: np.ndarray, kernel: np.ndarray, stride: int = 1, padding: int = 0) -> np.ndarray:
    """Cross-correlate (C_in, H, W) with (C_out, C_in, kh, kw), zero padding.

    Output extent per axis: floor((in + 2*padding - k) / stride) + 1.
    """
    return _conv_nd(np.asarray(x, dtype=np.float64), np.asarray(kernel, dtype=np.float64), stride, padding, 2)


def conv3d(x: np.ndarray, kernel: np.ndarray, stride: int = 1, padding: int = 0) -> np.ndarray:
    """Cross-correlate (C_in, H, W, Z) with (C_out, C_in, kh, kw, kz)."""
    return _conv_nd(np.asarray(x, dtype=np.float64), np.asarray(kernel, dtype=np.float64), stride, padding, 3)


def conv_transpose3d(x: np.ndarray, kernel: np.ndarray, stride: int = 2) -> np.ndarray:
    """Transposed 3D convolution (scatter-add), no padding.

    ``x`` is (C_in, H, W, Z), ``kernel`` is (C_in, C_out, kh, kw, kz);
    output extent per axis is (in - 1) * stride + k.
    """
    x = np.asarray(x, dtype=np.float64)
    kernel = np.asarray(kernel, dtype=np.float64)
    if x.ndim != 4 or kernel.ndim != 5:
        raise ValueError("conv_transpose3d expects (C_in,H,W,Z) input and (C_in,C_out,kh,kw,kz) kernel")
    if kernel.shape[0] != x.shape[0]:
        raise ValueError(f"kernel input channels {kernel.shape[0]} != input channels {x.shape[0]}")
    _, h, w, d = x.shape
    co = kernel.shape[1]
    kh, kw, kd = kernel.shape[2:]
    out = np.zeros((co, (h - 1) * stride + kh, (w - 1) * stride + kw, (d - 1) * stride + kd))
    # per-tap scatter: every input cell contributes kernel[:, :, a, b, c] at
    # output offset (i*stride + a, j*stride + b, k*stride + c)
    for a in range(kh):
        for b in range(kw):
            for c in range(kd):
                tap = np.einsum("ihwz,io->ohwz", x, kernel[:, :, a, b, c], optimize=True)
                out[:, a : a + (h - 1) * stride + 1 : stride,
                       b : b + (w - 1) * stride + 1 : stride,
                       c : c + (d - 1) * stride + 1 : stride] += tap
    return out


def dump_text(x: np.ndarray) -> str:
    """Serialize to the text dump format: header line then row-major values."""
    x = np.asarray(x, dtype=np.float64)
    header = "shape: " + " ".join(str(d) for d in x.shape)
    body = " ".join(repr(float(v)) for v in x.ravel())
    return header + "\n" + body + "\n"


def load_text(text: str) -> np.ndarray:
    lines = text.strip().splitlines()
    if not lines or not lines[0].startswith("shape:"):
        raise ValueError("text dump must start with a 'shape:' header line")
    shape = tuple(int(t) for t in lines[0].split()[1:])
    vals = np.array([float(t) for t in " ".join(lines[1:]).split()], dtype=np.float64)
    expected = int(np.prod(shape)) if shape else 1
    if vals.size != expected:
        raise ValueError(f"expected {expected} values for shape {shape}, got {vals.size}")
    return vals.reshape(shape)


def dump_binary(x: np.ndarray) -> bytes:
    """Serialize to the binary dump: magic, u32 rank, u32 extents, f32 payload (LE)."""
    x = np.asarray(x)
    head = _MAGIC + struct.pack("<I", x.ndim) + struct.pack(f"<{x.ndim}I", *x.shape)
    return head + x.astype("<f4").tobytes(order="C")


def load_binary(blob: bytes) -> np.ndarray:
    if blob[:4] != _MAGIC:
        raise ValueError("bad magic; not a tensor binary dump")
    rank = struct.unpack_from("<I", blob, 4)[0]
    shape = struct.unpack_from(f"<{rank}I", blob, 8)
    payload = np.frombuffer(blob, dtype="<f4", offset=8 + 4 * rank)
    expected = int(np.prod(shape)) if rank else 1
    if payload.size != expected:
        raise ValueError(f"payload holds {payload.size} floats, shape needs {expected}")
    return payload.reshape(shape).astype(np.float64)
