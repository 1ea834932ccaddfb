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

"""Multi-task training objective: box regression, objectness and
ROI-gated segmentation losses, each returned together with its
gradient with respect to the network output it scores.
"""

from collections import namedtuple

import numpy

from roifcn.log import error, warning
from roifcn.rpn import POSITIVE, NEGATIVE


class LossReport(namedtuple("LossReport", ("l_reg", "l_cls", "l_seg", "total",
                                           "n_pos_anchors", "n_sampled_anchors",
                                           "n_inroi_pixels"))):
    """Loss components of one training sample.

    l_reg and l_cls are None when detection is disabled.
    """
    __slots__ = ()


def smooth_l1(x):
    "0.5 x^2 for |x| < 1, |x| - 0.5 otherwise (elementwise)."
    x = numpy.asarray(x)
    ax = numpy.abs(x)
    return numpy.where(ax < 1, 0.5 * x * x, ax - 0.5)


def smooth_l1_grad(x):
    return numpy.clip(x, -1, 1)


def regression_loss(deltas, targets):
    """Smooth L1 over the four delta components, summed per anchor and
    averaged over positive anchors.

    Returns (loss, d_deltas); zero when there are no positives.
    """
    deltas = numpy.asarray(deltas)
    ddeltas = numpy.zeros_like(deltas)
    pos = targets.labels == POSITIVE
    n_pos = int(numpy.count_nonzero(pos))
    if n_pos == 0:
        return 0.0, ddeltas
    diff = deltas[pos] - targets.deltas[pos].astype(deltas.dtype)
    loss = smooth_l1(diff).sum() / n_pos
    ddeltas[pos] = smooth_l1_grad(diff) / n_pos
    return loss, ddeltas


def objectness_loss(logits, targets):
    """Mean binary cross-entropy of sampled (positive and negative) anchors.

    Returns (loss, d_logits). Anchors labeled IGNORE contribute nothing.
    """
    logits = numpy.asarray(logits)
    dlogits = numpy.zeros_like(logits)
    sampled = (targets.labels == POSITIVE) | (targets.labels == NEGATIVE)
    n = int(numpy.count_nonzero(sampled))
    if n == 0:
        warning("No sampled anchors, objectness loss is zero.")
        return 0.0, dlogits
    z = logits[sampled]
    y = (targets.labels[sampled] == POSITIVE).astype(logits.dtype)
    # max(z, 0) - z y + log(1 + exp(-|z|))
    losses = numpy.maximum(z, 0) - z * y + numpy.log1p(numpy.exp(-numpy.abs(z)))
    sigmoid = numpy.where(z >= 0,
                          1 / (1 + numpy.exp(-numpy.abs(z))),
                          numpy.exp(-numpy.abs(z)) / (1 + numpy.exp(-numpy.abs(z))))
    dlogits[sampled] = (sigmoid - y) / n
    return losses.sum() / n, dlogits


def log_softmax(scores, axis=0):
    shifted = scores - scores.max(axis=axis, keepdims=True)
    return shifted - numpy.log(numpy.exp(shifted).sum(axis=axis, keepdims=True))


def masked_seg_loss(scores, gt_mask, roi_mask_img):
    """Pixelwise softmax cross-entropy averaged over the pixels of the ROI union.

    scores is a 2 x H x W map of class scores, gt_mask and
    roi_mask_img are H x W binary grids on the image. Each pixel of
    the union counts once. Returns (loss, d_scores); zero when the
    union is empty.
    """
    scores = numpy.asarray(scores)
    if scores.ndim != 3 or scores.shape[0] != 2:
        error("Expecting a 2xHxW score map, got shape %s." % (scores.shape,))
    if gt_mask.shape != scores.shape[1:] or roi_mask_img.shape != scores.shape[1:]:
        error("Score map shape %s, ground truth shape %s and ROI mask shape %s differ."
              % (scores.shape, gt_mask.shape, roi_mask_img.shape))
    dscores = numpy.zeros_like(scores)
    inside = roi_mask_img != 0
    n = int(numpy.count_nonzero(inside))
    if n == 0:
        return 0.0, dscores
    labels = (gt_mask != 0).astype(numpy.int64)
    logp = log_softmax(scores, axis=0)
    picked = numpy.where(labels == 1, logp[1], logp[0])
    loss = -picked[inside].sum() / n
    prob = numpy.exp(logp)
    onehot = numpy.stack((1 - labels, labels)).astype(scores.dtype)
    dscores[:, inside] = (prob - onehot)[:, inside] / n
    return loss, dscores


def total_loss(l_reg, l_cls, l_seg, n_pos_anchors=0, n_sampled_anchors=0, n_inroi_pixels=0):
    """Unweighted sum of the components; detection terms given as None
    are left out of the total.
    """
    total = sum(c for c in (l_reg, l_cls, l_seg) if c is not None)
    return LossReport(l_reg, l_cls, l_seg, total,
                      n_pos_anchors, n_sampled_anchors, n_inroi_pixels)
