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

"""Synthetic arc-on-background slices, PGM image files and dataset
manifests.

A sample is a noisy single-channel image with a few thin bright arcs,
the pixelwise arc mask and the bounding boxes of its 8-connected
components.
"""

from collections import namedtuple
import os
import re

import numpy
from numpy.random import Generator, PCG64
import scipy.ndimage

from roifcn.log import error, info, debug
from roifcn.roiconv import Box
from roifcn.system import make_dirs, store_binaryfile, store_textfile
from roifcn.system import read_binaryfile, read_textfile

Sample = namedtuple("Sample", ("image", "gt_mask", "gt_boxes"))
Sample.__doc__ = """image is 1 x H x W in [0, 1], gt_mask a binary H x W
grid and gt_boxes a list of Box on the image grid."""

DatasetManifest = namedtuple("DatasetManifest", ("entries", "split"))
DatasetManifest.__doc__ = """entries is a list of (slice_id, image path,
mask path) with absolute paths; split is the manifest name."""

MIN_EXTENT = 32


def mask_to_boxes(mask):
    "Bounding boxes of the 8-connected components of a binary mask, in label order."
    labels, count = scipy.ndimage.label(numpy.asarray(mask) != 0,
                                        structure=numpy.ones((3, 3), dtype=int))
    boxes = []
    for rows, cols in scipy.ndimage.find_objects(labels):
        boxes.append(Box(cols.start, rows.start, cols.stop - 1, rows.stop - 1))
    return boxes


def _arc_mask(rng, height, width, data_params):
    p = data_params
    yy, xx = numpy.mgrid[0:height, 0:width]
    mask = numpy.zeros((height, width), dtype=bool)
    n_arcs = 1 + int(rng.random() * p["max_arcs"])
    for _ in range(n_arcs):
        radius = p["min_radius"] + rng.random() * (p["max_radius"] - p["min_radius"])
        cx = width * (0.15 + 0.7 * rng.random())
        cy = height * (0.15 + 0.7 * rng.random())
        start = 2 * numpy.pi * rng.random()
        span = numpy.pi * (1.0 / 6.0 + 0.5 * rng.random())
        thickness = 1 + int(rng.random() * 3)
        dist = numpy.hypot(xx - cx, yy - cy)
        angle = numpy.mod(numpy.arctan2(yy - cy, xx - cx) - start, 2 * numpy.pi)
        mask |= (numpy.abs(dist - radius) <= 0.5 * thickness) & (angle <= span)
    return mask


def _render(rng, mask, data_params):
    p = data_params
    height, width = mask.shape
    yy, xx = numpy.mgrid[0:height, 0:width]
    image = numpy.full((height, width), p["background"], dtype=numpy.float64)
    for _ in range(p["blob_count"]):
        cx = width * rng.random()
        cy = height * rng.random()
        sigma = 3.0 + 5.0 * rng.random()
        amplitude = p["blob_amplitude"] * (0.5 + 0.5 * rng.random())
        image += amplitude * numpy.exp(-((xx - cx) ** 2 + (yy - cy) ** 2) / (2 * sigma ** 2))
    arc = p["arc_intensity"] * (0.8 + 0.2 * rng.random(numpy.count_nonzero(mask)))
    image[mask] = numpy.maximum(image[mask], arc)
    if p["noise_sigma"] > 0:
        image *= 1 + p["noise_sigma"] * rng.standard_normal((height, width))
    return numpy.clip(image, 0.0, 1.0)


def generate_sample(rng, height, width, data_params):
    """Draw one synthetic slice.

    Arc masks are redrawn until the foreground fraction lies within
    [min_fraction, max_fraction]; gives up after max_draws attempts.
    """
    if height < MIN_EXTENT or width < MIN_EXTENT:
        error("Synthetic slices need extents of at least %d, got %dx%d."
              % (MIN_EXTENT, height, width))
    p = data_params
    for draw in range(p["max_draws"]):
        mask = _arc_mask(rng, height, width, p)
        fraction = numpy.count_nonzero(mask) / float(mask.size)
        if p["min_fraction"] <= fraction <= p["max_fraction"]:
            debug("Accepted arc mask after %d draws." % (draw + 1))
            image = _render(rng, mask, p)
            return Sample(image[None], mask.astype(numpy.uint8), mask_to_boxes(mask))
    error("No arc mask with foreground fraction in [%g, %g] after %d draws."
          % (p["min_fraction"], p["max_fraction"], p["max_draws"]))


def sample_rng(seed, index):
    return Generator(PCG64(seed ^ index))


def quantize(image, maxval=255):
    "Round values in [0, 1] half up to integers in [0, maxval]."
    return numpy.floor(numpy.clip(image, 0.0, 1.0) * maxval + 0.5).astype(numpy.int64)


def write_pgm(filename, image, maxval=255):
    "Store a 2D array of values in [0, 1] as a binary PGM file."
    image = numpy.asarray(image)
    if image.ndim != 2:
        error("Expecting a 2D image, got shape %s." % (image.shape,))
    if not 0 < maxval < 65536:
        error("Invalid PGM maxval %d." % (maxval,))
    height, width = image.shape
    header = ("P5\n%d %d\n%d\n" % (width, height, maxval)).encode("ascii")
    dtype = numpy.dtype("u1") if maxval < 256 else numpy.dtype(">u2")
    return store_binaryfile(filename, header + quantize(image, maxval).astype(dtype).tobytes())


_PGM_TOKEN = re.compile(rb"(?:\s|#[^\n]*\n)*(\S+)")


def read_pgm(filename):
    "Read a binary PGM file as a float64 H x W array of values in [0, 1]."
    data = read_binaryfile(filename)
    if data is None:
        error("PGM file '%s' not found." % (filename,))
    tokens = []
    offset = 0
    for _ in range(4):
        m = _PGM_TOKEN.match(data, offset)
        if m is None:
            error("Truncated PGM header in '%s'." % (filename,))
        tokens.append(m.group(1))
        offset = m.end()
    if tokens[0] != b"P5":
        error("'%s' is not a binary PGM file." % (filename,))
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError:
        error("Malformed PGM header in '%s'." % (filename,))
    if width < 1 or height < 1 or not 0 < maxval < 65536:
        error("Invalid PGM extents %dx%d or maxval %d in '%s'."
              % (width, height, maxval, filename))
    # Exactly one whitespace byte separates the header from the raster
    offset += 1
    dtype = numpy.dtype("u1") if maxval < 256 else numpy.dtype(">u2")
    size = width * height * dtype.itemsize
    if len(data) - offset < size:
        error("PGM file '%s' holds %d raster bytes, expecting %d for %dx%d."
              % (filename, max(len(data) - offset, 0), size, width, height))
    raster = numpy.frombuffer(data[offset:offset + size], dtype=dtype)
    return raster.reshape(height, width).astype(numpy.float64) / maxval


def write_manifest(filename, pairs):
    """Store (image path, mask path) pairs, one tab separated pair per
    line, relative to the manifest directory."""
    root = os.path.dirname(os.path.abspath(filename))
    lines = ["%s\t%s" % (os.path.relpath(os.path.abspath(img), root),
                         os.path.relpath(os.path.abspath(mask), root))
             for img, mask in pairs]
    return store_textfile(filename, "\n".join(lines) + "\n")


def read_manifest(filename):
    content = read_textfile(filename)
    if content is None:
        error("Manifest '%s' not found." % (filename,))
    root = os.path.dirname(os.path.abspath(filename))
    entries = []
    for lineno, line in enumerate(content.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) != 2:
            error("Expecting 'image<TAB>mask' on line %d of manifest '%s'." % (lineno, filename))
        img, mask = (os.path.join(root, f) for f in fields)
        for path in (img, mask):
            if not os.path.exists(path):
                error("File '%s' listed in manifest '%s' not found." % (path, filename))
        slice_id = os.path.splitext(os.path.basename(fields[0]))[0]
        entries.append((slice_id, img, mask))
    split = os.path.splitext(os.path.basename(filename))[0]
    return DatasetManifest(entries, split)


def load_samples(manifest, height=None, width=None):
    """Read the samples of a manifest, returns a list of (slice_id, Sample).

    Images whose extents differ from height x width, when given, are an error.
    """
    samples = []
    for slice_id, img, mask in manifest.entries:
        image = read_pgm(img)
        gt = read_pgm(mask) > 0.5
        if image.shape != gt.shape:
            error("Image '%s' and mask '%s' differ in shape." % (img, mask))
        if height is not None and image.shape != (height, width):
            error("Image '%s' has extents %s, the network expects %s."
                  % (img, image.shape, (height, width)))
        samples.append((slice_id, Sample(image[None], gt.astype(numpy.uint8),
                                         mask_to_boxes(gt))))
    return samples


def generate_dataset(out_dir, n_train, n_test, height, width, seed, data_params):
    """Write train/ and test/ PGM pairs and the manifests train.txt and test.txt.

    Sample i (test samples numbered after the training samples) is drawn
    from a generator seeded with seed ^ i. Returns the manifest paths.
    """
    manifests = []
    index = 0
    for split, count in (("train", n_train), ("test", n_test)):
        split_dir = os.path.join(out_dir, split)
        make_dirs(split_dir)
        pairs = []
        for i in range(count):
            sample = generate_sample(sample_rng(seed, index), height, width, data_params)
            img = os.path.join(split_dir, "%s-%04d.pgm" % (split, i))
            mask = os.path.join(split_dir, "%s-%04d-mask.pgm" % (split, i))
            write_pgm(img, sample.image[0])
            write_pgm(mask, sample.gt_mask)
            pairs.append((img, mask))
            index += 1
        manifest = os.path.join(out_dir, split + ".txt")
        write_manifest(manifest, pairs)
        info("Wrote %d %s samples to '%s'." % (count, split, split_dir))
        manifests.append(manifest)
    return manifests
