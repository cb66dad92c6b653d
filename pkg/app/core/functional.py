"""
Differentiable operations on N x C x H x W tensors.

Convolutions are evaluated as one matrix product per kernel tap, which
keeps memory at the size of the output rather than an unrolled input.
"""
from typing import Optional, Tuple, Union

import numpy as np

from app.core.exceptions import ShapeError
from app.core.tensor import Tensor, as_tensor, check_same_shape, make_result


def _check_4d(t: Tensor, op: str) -> None:
    if t.data.ndim != 4:
        raise ShapeError(f"{op}: expected an N x C x H x W tensor, got shape {t.shape}")


def conv2d(input: Tensor, weight: Tensor, bias: Optional[Tensor] = None) -> Tensor:
    """
    Stride-1, shape-preserving convolution with zero padding (k - 1) / 2.

    out[n, o, y, x] = bias[o] + sum_{c, dy, dx} weight[o, c, dy, dx] * padded[n, c, y + dy, x + dx]
    """
    _check_4d(input, "conv2d")
    x, w = input.data, weight.data
    if w.ndim != 4:
        raise ShapeError(f"conv2d: weight must be 4-D, got shape {w.shape}")
    n, cin, h, wd = x.shape
    cout, wcin, kh, kw = w.shape
    if wcin != cin:
        raise ShapeError(f"conv2d: input has {cin} channels, weight expects {wcin}")
    if kh % 2 == 0 or kw % 2 == 0:
        raise ShapeError(f"conv2d: kernel must be odd-sized, got {kh}x{kw}")
    if bias is not None and bias.shape != (cout,):
        raise ShapeError(f"conv2d: bias must have shape ({cout},), got {bias.shape}")

    ph, pw = (kh - 1) // 2, (kw - 1) // 2
    xp = np.pad(x, ((0, 0), (0, 0), (ph, ph), (pw, pw)))
    out = np.zeros((n, h, wd, cout))
    for i in range(kh):
        for j in range(kw):
            out += np.tensordot(xp[:, :, i:i + h, j:j + wd], w[:, :, i, j], axes=([1], [1]))
    out = out.transpose(0, 3, 1, 2)
    if bias is not None:
        out = out + bias.data[None, :, None, None]

    parents = (input, weight) if bias is None else (input, weight, bias)

    def backward(g: np.ndarray) -> None:
        if input.requires_grad:
            gxp = np.zeros_like(xp)
            for i in range(kh):
                for j in range(kw):
                    contrib = np.tensordot(g, w[:, :, i, j], axes=([1], [0]))
                    gxp[:, :, i:i + h, j:j + wd] += contrib.transpose(0, 3, 1, 2)
            input.accumulate(gxp[:, :, ph:ph + h, pw:pw + wd])
        if weight.requires_grad:
            gw = np.empty_like(w)
            for i in range(kh):
                for j in range(kw):
                    gw[:, :, i, j] = np.tensordot(
                        g, xp[:, :, i:i + h, j:j + wd], axes=([0, 2, 3], [0, 2, 3])
                    )
            weight.accumulate(gw)
        if bias is not None and bias.requires_grad:
            bias.accumulate(g.sum(axis=(0, 2, 3)))

    return make_result(np.ascontiguousarray(out), parents, backward)


def _tconv_geometry(h: int, w: int, k: int, stride: int, padding: int) -> Tuple[int, int]:
    return (h - 1) * stride - 2 * padding + k, (w - 1) * stride - 2 * padding + k


def _gather_taps(full: np.ndarray, weight: np.ndarray, h: int, w: int, stride: int) -> np.ndarray:
    """
    Strided convolution of an unpadded full-size map; the adjoint of the
    scatter performed by the transposed convolution.
    """
    cin, _, kh, kw = weight.shape
    out = np.zeros((full.shape[0], h, w, cin))
    for i in range(kh):
        for j in range(kw):
            taps = full[:, :, i:i + stride * h:stride, j:j + stride * w:stride]
            out += np.tensordot(taps, weight[:, :, i, j], axes=([1], [1]))
    return out.transpose(0, 3, 1, 2)


def transposed_conv2d(
    input: Tensor,
    weight: Tensor,
    bias: Optional[Tensor] = None,
    stride: int = 2,
    padding: int = 1,
) -> Tensor:
    """
    Fractionally-strided convolution. ``weight`` is Cin x Cout x k x k; with
    the default 4 x 4 / stride 2 / padding 1 geometry the output is exactly
    twice the input in each spatial dimension.
    """
    _check_4d(input, "transposed_conv2d")
    x, w = input.data, weight.data
    if w.ndim != 4:
        raise ShapeError(f"transposed_conv2d: weight must be 4-D, got shape {w.shape}")
    n, cin, h, wd = x.shape
    wcin, cout, kh, kw = w.shape
    if wcin != cin:
        raise ShapeError(f"transposed_conv2d: input has {cin} channels, weight expects {wcin}")
    if kh != kw:
        raise ShapeError(f"transposed_conv2d: kernel must be square, got {kh}x{kw}")
    if bias is not None and bias.shape != (cout,):
        raise ShapeError(f"transposed_conv2d: bias must have shape ({cout},), got {bias.shape}")
    oh, ow = _tconv_geometry(h, wd, kh, stride, padding)
    if oh < 1 or ow < 1:
        raise ShapeError("transposed_conv2d: padding leaves an empty output")

    full = np.zeros((n, cout, oh + 2 * padding, ow + 2 * padding))
    for i in range(kh):
        for j in range(kw):
            stamp = np.tensordot(x, w[:, :, i, j], axes=([1], [0])).transpose(0, 3, 1, 2)
            full[:, :, i:i + stride * h:stride, j:j + stride * wd:stride] += stamp
    out = full[:, :, padding:padding + oh, padding:padding + ow]
    if bias is not None:
        out = out + bias.data[None, :, None, None]

    parents = (input, weight) if bias is None else (input, weight, bias)

    def backward(g: np.ndarray) -> None:
        gfull = np.zeros((n, cout, oh + 2 * padding, ow + 2 * padding))
        gfull[:, :, padding:padding + oh, padding:padding + ow] = g
        if input.requires_grad:
            input.accumulate(_gather_taps(gfull, w, h, wd, stride))
        if weight.requires_grad:
            gw = np.empty_like(w)
            for i in range(kh):
                for j in range(kw):
                    taps = gfull[:, :, i:i + stride * h:stride, j:j + stride * wd:stride]
                    gw[:, :, i, j] = np.tensordot(x, taps, axes=([0, 2, 3], [0, 2, 3]))
            weight.accumulate(gw)
        if bias is not None and bias.requires_grad:
            bias.accumulate(g.sum(axis=(0, 2, 3)))

    return make_result(np.ascontiguousarray(out), parents, backward)


def strided_conv2d(input: np.ndarray, weight: np.ndarray, stride: int = 2, padding: int = 1) -> np.ndarray:
    """
    Stride-2 convolution sharing ``transposed_conv2d``'s weight layout:
    maps N x Cout x 2H x 2W to N x Cin x H x W. Not recorded for autodiff.
    """
    z = np.asarray(input, dtype=np.float64)
    w = np.asarray(weight, dtype=np.float64)
    k = w.shape[2]
    n, cout, zh, zw = z.shape
    if w.shape[1] != cout:
        raise ShapeError(f"strided_conv2d: input has {cout} channels, weight expects {w.shape[1]}")
    h = (zh + 2 * padding - k) // stride + 1
    wd = (zw + 2 * padding - k) // stride + 1
    full = np.pad(z, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
    return _gather_taps(full, w, h, wd, stride)


def relu(t: Tensor) -> Tensor:
    """Elementwise max(0, x); the subgradient at 0 is 0."""
    x = t.data
    mask = x > 0

    def backward(g: np.ndarray) -> None:
        t.accumulate(g * mask)

    return make_result(np.where(mask, x, 0.0), (t,), backward)


def concat_channels(a: Tensor, b: Tensor) -> Tensor:
    _check_4d(a, "concat_channels")
    _check_4d(b, "concat_channels")
    na, ca, ha, wa = a.shape
    nb, cb, hb, wb = b.shape
    if (na, ha, wa) != (nb, hb, wb):
        raise ShapeError(f"concat_channels: {a.shape} and {b.shape} differ outside the channel axis")

    def backward(g: np.ndarray) -> None:
        if a.requires_grad:
            a.accumulate(g[:, :ca])
        if b.requires_grad:
            b.accumulate(g[:, ca:])

    return make_result(np.concatenate([a.data, b.data], axis=1), (a, b), backward)


def split_channels(t: Tensor, s: int) -> Tuple[Tensor, Tensor]:
    """
    Split into the first C/s channels (kept) and the remaining channels (passed on)
    """
    _check_4d(t, "split_channels")
    c = t.shape[1]
    if s < 1 or c % s:
        raise ShapeError(f"split_channels: divisor {s} does not divide {c} channels")
    cut = c // s

    def keep_backward(g: np.ndarray) -> None:
        grad = np.zeros_like(t.data)
        grad[:, :cut] = g
        t.accumulate(grad)

    def pass_backward(g: np.ndarray) -> None:
        grad = np.zeros_like(t.data)
        grad[:, cut:] = g
        t.accumulate(grad)

    keep = make_result(t.data[:, :cut].copy(), (t,), keep_backward)
    rest = make_result(t.data[:, cut:].copy(), (t,), pass_backward)
    return keep, rest


def add(a: Tensor, b: Tensor) -> Tensor:
    check_same_shape(a, b, "add")

    def backward(g: np.ndarray) -> None:
        if a.requires_grad:
            a.accumulate(g)
        if b.requires_grad:
            b.accumulate(g)

    return make_result(a.data + b.data, (a, b), backward)


def scale_shift(t: Tensor, scale: float, shift: float) -> Tensor:
    """t * scale + shift"""

    def backward(g: np.ndarray) -> None:
        t.accumulate(g * scale)

    return make_result(t.data * scale + shift, (t,), backward)


def upsample_nn(t: Tensor, factor: int) -> Tensor:
    """Replicate each cell into a factor x factor block."""
    _check_4d(t, "upsample_nn")
    n, c, h, w = t.shape
    out = np.repeat(np.repeat(t.data, factor, axis=2), factor, axis=3)

    def backward(g: np.ndarray) -> None:
        t.accumulate(g.reshape(n, c, h, factor, w, factor).sum(axis=(3, 5)))

    return make_result(out, (t,), backward)


def l1_loss(recon: Tensor, target: Union[Tensor, np.ndarray]) -> Tensor:
    """
    Mean absolute difference; the target is treated as a constant
    """
    target = as_tensor(target)
    check_same_shape(recon, target, "l1_loss")
    diff = recon.data - target.data
    count = diff.size

    def backward(g: np.ndarray) -> None:
        recon.accumulate(np.sign(diff) * (g / count))

    return make_result(np.abs(diff).sum() / count, (recon,), backward)


def total(t: Tensor) -> Tensor:
    """Sum of all elements."""

    def backward(g: np.ndarray) -> None:
        t.accumulate(np.broadcast_to(g, t.shape))

    return make_result(t.data.sum(), (t,), backward)


def weighted_sum(t: Tensor, weights: np.ndarray) -> Tensor:
    weights = np.asarray(weights, dtype=np.float64)
    if weights.shape != t.shape:
        raise ShapeError(f"weighted_sum: weights {weights.shape} vs tensor {t.shape}")

    def backward(g: np.ndarray) -> None:
        t.accumulate(g * weights)

    return make_result((t.data * weights).sum(), (t,), backward)
