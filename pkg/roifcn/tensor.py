# -*- coding: utf-8 -*-
# Copyright (C) 2026 The ROIFCN developers
#
# This file is part of ROIFCN.
#
# ROIFCN is free software: you can redistribute it and/or modify
# it under the terms of the GNU Lesser General Public License as published by
# the Free Software Foundation, either version 3 of the License, or
# (at your option) any later version.
#
# ROIFCN is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE. See the
# GNU Lesser General Public License for more details.
#
# You should have received a copy of the GNU Lesser General Public License
# along with ROIFCN. If not, see <http://www.gnu.org/licenses/>.

"""Differentiable primitive layers with hand-written backward functions.

Tensors are plain numpy arrays. Feature maps are laid out as
channels x height x width (a single image, no batch axis).
Convolution kernels are outC x inC x k x k, except for transposed
convolutions whose kernels are stored inC x outC x k x k, i.e. with
the shape of the strided convolution they are the adjoint of.

All functions are pure and preserve the floating point dtype of
their inputs.
"""

import numpy
from numpy.lib.stride_tricks import as_strided

from roifcn.log import error


class ConvParams(object):
    "Kernel, bias, stride and zero-padding of a (transposed) convolution."

    __slots__ = ("kernel", "bias", "stride", "padding", "transposed")

    def __init__(self, kernel, bias=None, stride=1, padding=0, transposed=False):
        kernel = numpy.asarray(kernel)
        if kernel.ndim != 4 or kernel.shape[2] != kernel.shape[3]:
            error("Expecting a square 4D kernel, got shape %s." % (kernel.shape,))
        if stride < 1 or padding < 0:
            error("Invalid stride %d or padding %d." % (stride, padding))
        out_channels = kernel.shape[1] if transposed else kernel.shape[0]
        if bias is None:
            bias = numpy.zeros((out_channels,), dtype=kernel.dtype)
        bias = numpy.asarray(bias)
        if bias.shape != (out_channels,):
            error("Bias shape %s does not match %d output channels of kernel %s."
                  % (bias.shape, out_channels, kernel.shape))
        self.kernel = kernel
        self.bias = bias
        self.stride = int(stride)
        self.padding = int(padding)
        self.transposed = transposed

    @property
    def size(self):
        return self.kernel.shape[2]

    @property
    def in_channels(self):
        return self.kernel.shape[0] if self.transposed else self.kernel.shape[1]

    @property
    def out_channels(self):
        return self.kernel.shape[1] if self.transposed else self.kernel.shape[0]


def conv_output_extent(n, k, stride, pad):
    return (n + 2 * pad - k) // stride + 1


def _check_input(x, p):
    if x.ndim != 3:
        error("Expecting a CxHxW tensor, got shape %s." % (x.shape,))
    if x.shape[0] != p.in_channels:
        error("Input shape %s does not match kernel shape %s."
              % (x.shape, p.kernel.shape))


def _pad(x, pad):
    if pad == 0:
        return x
    return numpy.pad(x, ((0, 0), (pad, pad), (pad, pad)), mode="constant")


def _patches(xp, k, stride, ho, wo):
    "Read-only C x k x k x Ho x Wo view of the sliding windows of a padded input."
    xp = numpy.ascontiguousarray(xp)
    sc, sh, sw = xp.strides
    return as_strided(xp, shape=(xp.shape[0], k, k, ho, wo),
                      strides=(sc, sh, sw, sh * stride, sw * stride),
                      writeable=False)


def im2col(x, k, stride, pad, positions=None):
    """Unfold x into a (C*k*k) x P column matrix.

    P covers every output position in row-major order, or only the
    flat output indices listed in positions.
    """
    c, h, w = x.shape
    ho = conv_output_extent(h, k, stride, pad)
    wo = conv_output_extent(w, k, stride, pad)
    view = _patches(_pad(x, pad), k, stride, ho, wo)
    if positions is None:
        return view.reshape(c * k * k, ho * wo)
    rows, cols = numpy.divmod(positions, wo)
    return view[:, :, :, rows, cols].reshape(c * k * k, len(positions))


def col2im(cols, shape, k, stride, pad):
    """Adjoint of im2col: scatter-add a (C*k*k) x (Ho*Wo) matrix into a CxHxW tensor."""
    c, h, w = shape
    ho = conv_output_extent(h, k, stride, pad)
    wo = conv_output_extent(w, k, stride, pad)
    cols = cols.reshape(c, k, k, ho, wo)
    xp = numpy.zeros((c, h + 2 * pad, w + 2 * pad), dtype=cols.dtype)
    for a in range(k):
        for b in range(k):
            xp[:, a:a + stride * ho:stride, b:b + stride * wo:stride] += cols[:, a, b]
    return xp[:, pad:pad + h, pad:pad + w]


def conv2d_forward(x, p):
    "Cross-correlation of x with p.kernel plus per-channel bias."
    _check_input(x, p)
    k = p.size
    c, h, w = x.shape
    if h + 2 * p.padding < k or w + 2 * p.padding < k:
        error("Input shape %s with padding %d is smaller than kernel shape %s."
              % (x.shape, p.padding, p.kernel.shape))
    ho = conv_output_extent(h, k, p.stride, p.padding)
    wo = conv_output_extent(w, k, p.stride, p.padding)
    cols = im2col(x, k, p.stride, p.padding)
    y = p.kernel.reshape(p.out_channels, -1) @ cols
    return y.reshape(p.out_channels, ho, wo) + p.bias[:, None, None]


def conv2d_backward(x, p, dy):
    """Gradients of sum(dy * conv2d_forward(x, p)).

    Returns (dx, dkernel, dbias).
    """
    _check_input(x, p)
    k = p.size
    c, h, w = x.shape
    ho = conv_output_extent(h, k, p.stride, p.padding)
    wo = conv_output_extent(w, k, p.stride, p.padding)
    if dy.shape != (p.out_channels, ho, wo):
        error("Upstream gradient shape %s does not match output shape %s."
              % (dy.shape, (p.out_channels, ho, wo)))
    cols = im2col(x, k, p.stride, p.padding)
    dy2 = dy.reshape(p.out_channels, -1)
    kernel2 = p.kernel.reshape(p.out_channels, -1)
    dkernel = (dy2 @ cols.T).reshape(p.kernel.shape)
    dbias = dy2.sum(axis=1)
    dx = col2im(kernel2.T @ dy2, x.shape, k, p.stride, p.padding)
    return dx, dkernel, dbias


def transposed_output_extent(n, k, stride, pad):
    return (n - 1) * stride - 2 * pad + k


def conv_transpose2d_forward(x, p):
    """Transposed convolution: the adjoint of conv2d with the same kernel,
    stride and padding, plus per-channel bias.
    """
    if not p.transposed:
        error("Expecting transposed convolution parameters.")
    _check_input(x, p)
    k = p.size
    cin, h, w = x.shape
    ho = transposed_output_extent(h, k, p.stride, p.padding)
    wo = transposed_output_extent(w, k, p.stride, p.padding)
    if ho < 1 or wo < 1:
        error("Transposed convolution of shape %s with kernel %s is empty."
              % (x.shape, p.kernel.shape))
    kernel2 = p.kernel.reshape(cin, -1)
    cols = kernel2.T @ x.reshape(cin, -1)
    y = col2im(cols, (p.out_channels, ho, wo), k, p.stride, p.padding)
    return y + p.bias[:, None, None]


def conv_transpose2d_backward(x, p, dy):
    """Gradients of sum(dy * conv_transpose2d_forward(x, p)).

    Returns (dx, dkernel, dbias).
    """
    if not p.transposed:
        error("Expecting transposed convolution parameters.")
    _check_input(x, p)
    k = p.size
    cin, h, w = x.shape
    ho = transposed_output_extent(h, k, p.stride, p.padding)
    wo = transposed_output_extent(w, k, p.stride, p.padding)
    if dy.shape != (p.out_channels, ho, wo):
        error("Upstream gradient shape %s does not match output shape %s."
              % (dy.shape, (p.out_channels, ho, wo)))
    cols = im2col(dy, k, p.stride, p.padding)
    kernel2 = p.kernel.reshape(cin, -1)
    x2 = x.reshape(cin, -1)
    dx = (kernel2 @ cols).reshape(x.shape)
    dkernel = (x2 @ cols.T).reshape(p.kernel.shape)
    dbias = dy.sum(axis=(1, 2))
    return dx, dkernel, dbias


def bilinear_kernel(in_channels, out_channels, factor, dtype=numpy.float64):
    """Transposed convolution kernel performing bilinear upsampling by factor.

    Input channel i feeds output channel i mod out_channels.
    """
    k = 2 * factor
    center = factor - 0.5
    og = numpy.arange(k, dtype=numpy.float64)
    filt1d = 1.0 - numpy.abs(og - center) / factor
    filt = numpy.outer(filt1d, filt1d)
    kernel = numpy.zeros((in_channels, out_channels, k, k), dtype=dtype)
    for i in range(in_channels):
        kernel[i, i % out_channels] = filt
    return kernel


def relu(x):
    return numpy.maximum(x, 0)


def relu_backward(x, dy):
    return numpy.where(x > 0, dy, numpy.zeros_like(dy))


def maxpool2(x):
    """2x2 max pooling with stride 2.

    Returns (y, indices) where indices holds the row-major offset
    (0..3) of the maximum inside each window; ties go to the smallest
    offset.
    """
    c, h, w = x.shape
    if h % 2 or w % 2:
        error("Max pooling needs even extents, got shape %s." % (x.shape,))
    windows = x.reshape(c, h // 2, 2, w // 2, 2).transpose(0, 1, 3, 2, 4)
    windows = windows.reshape(c, h // 2, w // 2, 4)
    indices = numpy.argmax(windows, axis=3)
    y = numpy.take_along_axis(windows, indices[..., None], axis=3)[..., 0]
    return y, indices


def maxpool2_backward(indices, dy):
    "Route dy to the recorded argmax positions."
    if indices.shape != dy.shape:
        error("Pooling indices shape %s does not match gradient shape %s."
              % (indices.shape, dy.shape))
    c, ho, wo = dy.shape
    windows = numpy.zeros((c, ho, wo, 4), dtype=dy.dtype)
    numpy.put_along_axis(windows, indices[..., None], dy[..., None], axis=3)
    windows = windows.reshape(c, ho, wo, 2, 2).transpose(0, 1, 3, 2, 4)
    return windows.reshape(c, 2 * ho, 2 * wo)


def glorot_uniform(rng, shape, fan_in, fan_out, dtype=numpy.float32):
    "Uniform initialization in +-sqrt(6/(fan_in+fan_out))."
    limit = numpy.sqrt(6.0 / (fan_in + fan_out))
    return (rng.random(shape) * (2.0 * limit) - limit).astype(dtype)
