"""Shared brute-force oracles, kept independent of the package internals."""

import numpy as np
import pytest


def bilinear_oracle(fmap, x, y):
    """Scalar-at-a-time 4-neighbour interpolation with zero padding."""
    _, h, w = fmap.shape
    x0, y0 = int(np.floor(x)), int(np.floor(y))
    fx, fy = x - x0, y - y0
    out = np.zeros(fmap.shape[0])
    for dy, wy in ((0, 1 - fy), (1, fy)):
        for dx, wx in ((0, 1 - fx), (1, fx)):
            xi, yi = x0 + dx, y0 + dy
            if 0 <= xi < w and 0 <= yi < h:
                out += wy * wx * fmap[:, yi, xi]
    return out


def trilinear_oracle(vol, x, y, z):
    _, h, w, d = vol.shape
    x0, y0, z0 = int(np.floor(x)), int(np.floor(y)), int(np.floor(z))
    fx, fy, fz = x - x0, y - y0, z - z0
    out = np.zeros(vol.shape[0])
    for dz, wz in ((0, 1 - fz), (1, fz)):
        for dy, wy in ((0, 1 - fy), (1, fy)):
            for dx, wx in ((0, 1 - fx), (1, fx)):
                xi, yi, zi = x0 + dx, y0 + dy, z0 + dz
                if 0 <= xi < w and 0 <= yi < h and 0 <= zi < d:
                    out += wz * wy * wx * vol[:, yi, xi, zi]
    return out


def conv2d_oracle(x, kernel, stride=1, padding=0):
    c_out, c_in, kh, kw = kernel.shape
    xp = np.pad(x, ((0, 0), (padding, padding), (padding, padding)))
    oh = (xp.shape[1] - kh) // stride + 1
    ow = (xp.shape[2] - kw) // stride + 1
    out = np.zeros((c_out, oh, ow))
    for o in range(c_out):
        for i in range(oh):
            for j in range(ow):
                acc = 0.0
                for c in range(c_in):
                    for a in range(kh):
                        for b in range(kw):
                            acc += xp[c, i * stride + a, j * stride + b] * kernel[o, c, a, b]
                out[o, i, j] = acc
    return out


def conv3d_oracle(x, kernel, stride=1, padding=0):
    c_out, c_in, kh, kw, kd = kernel.shape
    xp = np.pad(x, ((0, 0),) + ((padding, padding),) * 3)
    oh = (xp.shape[1] - kh) // stride + 1
    ow = (xp.shape[2] - kw) // stride + 1
    od = (xp.shape[3] - kd) // stride + 1
    out = np.zeros((c_out, oh, ow, od))
    for o in range(c_out):
        for i in range(oh):
            for j in range(ow):
                for k in range(od):
                    acc = 0.0
                    for c in range(c_in):
                        for a in range(kh):
                            for b in range(kw):
                                for d in range(kd):
                                    acc += xp[c, i * stride + a, j * stride + b,
                                              k * stride + d] * kernel[o, c, a, b, d]
                    out[o, i, j, k] = acc
    return out


def conv_transpose3d_oracle(x, kernel, stride=2):
    c_in, c_out, kh, kw, kd = kernel.shape
    _, h, w, d = x.shape
    out = np.zeros((c_out, (h - 1) * stride + kh, (w - 1) * stride + kw,
                    (d - 1) * stride + kd))
    for i in range(h):
        for j in range(w):
            for k in range(d):
                for ci in range(c_in):
                    v = x[ci, i, j, k]
                    for co in range(c_out):
                        for a in range(kh):
                            for b in range(kw):
                                for c in range(kd):
                                    out[co, i * stride + a, j * stride + b,
                                        k * stride + c] += v * kernel[ci, co, a, b, c]
    return out


def finite_difference(fn, x, step=1e-5):
    """Central finite differences of a scalar function over an array."""
    g = np.zeros_like(x, dtype=np.float64)
    flat = x.reshape(-1)
    gf = g.reshape(-1)
    for i in range(flat.size):
        keep = flat[i]
        flat[i] = keep + step
        hi = fn(x)
        flat[i] = keep - step
        lo = fn(x)
        flat[i] = keep
        gf[i] = (hi - lo) / (2 * step)
    return g


@pytest.fixture
def rng():
    return np.random.Generator(np.random.Philox(12345))
