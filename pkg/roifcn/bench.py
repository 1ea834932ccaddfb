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

"""Image-wise versus region-wise ROI convolution.

The region-wise path crops every ROI together with the kernel halo and
convolves each crop on its own, repeating work where ROIs overlap.
Both paths are checked for agreement before they are timed.
"""

from collections import namedtuple
import timeit

import numpy
from numpy.random import Generator, PCG64

from roifcn.log import info, numerical_error
from roifcn.tensor import ConvParams, conv2d_forward
from roifcn.roiconv import Box, rasterize_rois, roi_conv_forward, roi_conv_params
from roifcn.system import store_textfile

# Agreement tolerance relative to max(1, largest reference magnitude)
AGREEMENT = {numpy.dtype(numpy.float32): 1e-6, numpy.dtype(numpy.float64): 1e-12}

BenchRow = namedtuple("BenchRow", ("h", "w", "n_rois", "coverage",
                                   "t_imagewise_us", "t_regionwise_us"))


def region_wise_conv(x, p, boxes):
    "Same result as roi_conv_forward, computed one ROI at a time."
    c, h, w = x.shape
    pad = p.padding
    xp = numpy.pad(x, ((0, 0), (pad, pad), (pad, pad)), mode="constant")
    y = numpy.zeros((p.out_channels, h, w), dtype=numpy.result_type(x, p.kernel))
    crop_params = ConvParams(p.kernel, p.bias, stride=1, padding=0)
    for box in boxes:
        x0, y0, x1, y1 = box
        crop = xp[:, y0:y1 + 2 * pad + 1, x0:x1 + 2 * pad + 1]
        y[:, y0:y1 + 1, x0:x1 + 1] = conv2d_forward(crop, crop_params)
    return y


def random_boxes(rng, n, h, w):
    "n random boxes on an h x w grid, each side at most a third of the grid plus one."
    boxes = []
    for _ in range(n):
        bw = 1 + int(rng.random() * max(1, w // 3))
        bh = 1 + int(rng.random() * max(1, h // 3))
        x0 = int(rng.random() * (w - bw + 1))
        y0 = int(rng.random() * (h - bh + 1))
        boxes.append(Box(x0, y0, x0 + bw - 1, y0 + bh - 1))
    return boxes


def check_agreement(x, p, boxes):
    "Raise NumericalError unless both paths agree on the whole grid."
    mask = rasterize_rois(boxes, x.shape[1], x.shape[2])
    ref = roi_conv_forward(x, p, mask)
    other = region_wise_conv(x, p, boxes)
    tol = AGREEMENT[numpy.dtype(ref.dtype)] * max(1.0, float(numpy.abs(ref).max(initial=0.0)))
    err = float(numpy.abs(ref - other).max(initial=0.0))
    if err > tol:
        numerical_error("Image-wise and region-wise ROI convolution differ by %g "
                        "(tolerance %g) for %d ROIs on a %dx%d grid."
                        % (err, tol, len(boxes), x.shape[1], x.shape[2]))
    return mask


def _mean_us(fn, reps):
    times = timeit.repeat(fn, number=1, repeat=reps)
    return 1e6 * sum(times) / len(times)


def run_bench(sizes, roi_counts, reps=10, seed=0, channels=8, dtype=numpy.float32):
    """Time both paths over every (size, roi count) pair.

    sizes is a list of (h, w) feature grid extents. Returns a list of BenchRow.
    """
    rng = Generator(PCG64(seed))
    rows = []
    for h, w in sizes:
        x = rng.standard_normal((channels, h, w)).astype(dtype)
        kernel = (rng.standard_normal((channels, channels, 3, 3)) / 3).astype(dtype)
        p = roi_conv_params(kernel, rng.standard_normal(channels).astype(dtype))
        for n in roi_counts:
            boxes = random_boxes(rng, n, h, w)
            mask = check_agreement(x, p, boxes)
            row = BenchRow(h, w, n, float(mask.mean()),
                           _mean_us(lambda: roi_conv_forward(x, p, mask), reps),
                           _mean_us(lambda: region_wise_conv(x, p, boxes), reps))
            info("%dx%d, %d ROIs, coverage %.3f: image-wise %.1f us, region-wise %.1f us"
                 % row)
            rows.append(row)
    return rows


def format_bench(rows):
    lines = ["h,w,n_rois,coverage,t_imagewise_us,t_regionwise_us"]
    lines.extend("%d,%d,%d,%.6f,%.3f,%.3f" % row for row in rows)
    return "\n".join(lines) + "\n"


def write_bench(filename, rows):
    return store_textfile(filename, format_bench(rows))
