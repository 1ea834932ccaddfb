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

"""ROI convolution: convolution whose pre-activation output is zeroed
outside the union of a set of regions of interest.

The union is represented by a binary RoiMask on the output grid. All
regions are handled image-wise in one pass: only the columns of the
unfolded input that fall inside the union are multiplied with the
kernel, and positions outside the union are never computed, so they
are exactly zero and contribute nothing to any gradient.

ROI convolutions use stride 1 and "same" zero padding, so input,
output and mask share the feature grid.
"""

from collections import namedtuple

import numpy

from roifcn.log import error
from roifcn.tensor import ConvParams, im2col, col2im, conv_output_extent
from roifcn.tensor import conv2d_forward, conv2d_backward


class Box(namedtuple("Box", ("x0", "y0", "x1", "y1"))):
    """Axis-aligned rectangle with inclusive integer corners.

    x is the column and y the row; (x0, y0) is the top-left cell.
    """
    __slots__ = ()

    @property
    def width(self):
        return self.x1 - self.x0 + 1

    @property
    def height(self):
        return self.y1 - self.y0 + 1

    @property
    def area(self):
        return self.width * self.height


def same_padding(k):
    return k // 2


def roi_conv_params(kernel, bias=None):
    "ConvParams for a stride 1, same-padded ROI convolution."
    kernel = numpy.asarray(kernel)
    return ConvParams(kernel, bias, stride=1, padding=same_padding(kernel.shape[2]))


def rasterize_rois(boxes, height, width, dtype=numpy.float64):
    """Return the RoiMask of the union of boxes on a height x width grid.

    Overlapping boxes set each cell once.
    """
    mask = numpy.zeros((height, width), dtype=dtype)
    for box in boxes:
        box = Box(*box)
        if not (0 <= box.x0 <= box.x1 < width and 0 <= box.y0 <= box.y1 < height):
            error("Box %s lies outside the %dx%d grid." % (tuple(box), height, width))
        mask[box.y0:box.y1 + 1, box.x0:box.x1 + 1] = 1
    return mask


def _check_mask(x, p, mask):
    k = p.size
    ho = conv_output_extent(x.shape[1], k, p.stride, p.padding)
    wo = conv_output_extent(x.shape[2], k, p.stride, p.padding)
    if mask.shape != (ho, wo):
        error("RoiMask shape %s does not match convolution output extents %s."
              % (mask.shape, (ho, wo)))
    return ho, wo


def roi_conv_forward(x, p, mask):
    """Masked convolution: mask * conv2d_forward(x, p), bias included.

    Only in-mask output positions are computed.
    """
    ho, wo = _check_mask(x, p, mask)
    if x.shape[0] != p.in_channels:
        error("Input shape %s does not match kernel shape %s."
              % (x.shape, p.kernel.shape))
    inside = mask.ravel() != 0
    if inside.all():
        return conv2d_forward(x, p)
    y = numpy.zeros((p.out_channels, ho * wo), dtype=numpy.result_type(x, p.kernel))
    if inside.any():
        positions = numpy.flatnonzero(inside)
        cols = im2col(x, p.size, p.stride, p.padding, positions)
        y[:, positions] = (p.kernel.reshape(p.out_channels, -1) @ cols
                           + p.bias[:, None])
    return y.reshape(p.out_channels, ho, wo)


def roi_conv_backward(x, p, mask, dy):
    """Gradients of sum(dy * roi_conv_forward(x, p, mask)).

    Equal to conv2d_backward(x, p, dy * mask): only output positions
    inside the union contribute to dkernel, dbias and dx.

    Returns (dx, dkernel, dbias).
    """
    ho, wo = _check_mask(x, p, mask)
    if dy.shape != (p.out_channels, ho, wo):
        error("Upstream gradient shape %s does not match output shape %s."
              % (dy.shape, (p.out_channels, ho, wo)))
    inside = mask.ravel() != 0
    if inside.all():
        return conv2d_backward(x, p, dy)
    dtype = numpy.result_type(x, p.kernel, dy)
    if not inside.any():
        return (numpy.zeros(x.shape, dtype=dtype),
                numpy.zeros(p.kernel.shape, dtype=dtype),
                numpy.zeros(p.bias.shape, dtype=dtype))
    positions = numpy.flatnonzero(inside)
    cols = im2col(x, p.size, p.stride, p.padding, positions)
    dy2 = dy.reshape(p.out_channels, -1)[:, positions]
    kernel2 = p.kernel.reshape(p.out_channels, -1)
    dkernel = (dy2 @ cols.T).reshape(p.kernel.shape)
    dbias = dy2.sum(axis=1)
    dcols = numpy.zeros((kernel2.shape[1], ho * wo), dtype=dtype)
    dcols[:, positions] = kernel2.T @ dy2
    dx = col2im(dcols, x.shape, p.size, p.stride, p.padding)
    return dx, dkernel, dbias
