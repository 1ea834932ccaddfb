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

"""Localization unit: anchors, box regression coding, anchor targets
and proposal selection.

Boxes are (x0, y0, x1, y1) with inclusive integer corners. Arrays of
boxes have shape (n, 4). Anchors are ordered by feature row, feature
column and scale, with the scale varying fastest.
"""

from collections import namedtuple

import numpy

from roifcn.log import error, debug
from roifcn.roiconv import Box

POSITIVE = 1
NEGATIVE = 0
IGNORE = -1

# Upper bound on predicted log size ratios when decoding proposals
MAX_LOG_RATIO = numpy.log(1000.0 / 16.0)


BoxDelta = namedtuple("BoxDelta", ("tx", "ty", "tw", "th"))

AnchorTargets = namedtuple("AnchorTargets", ("labels", "deltas"))
AnchorTargets.__doc__ = """Per-anchor training labels (POSITIVE, NEGATIVE or IGNORE)
and (n, 4) regression targets, meaningful for positive anchors only."""


def as_box_array(boxes):
    boxes = numpy.asarray(boxes, dtype=numpy.float64)
    return boxes.reshape(-1, 4)


def round_half_up(v):
    return numpy.floor(numpy.asarray(v) + 0.5)


def generate_anchors(feat_h, feat_w, stride, scales):
    """Square anchors of side s centered on every feature cell.

    Returns an int64 array of shape (feat_h * feat_w * len(scales), 4)
    on the image grid, not clipped.
    """
    if stride < 1 or len(scales) == 0:
        error("Invalid anchor stride %s or scales %s." % (stride, scales))
    scales = numpy.asarray(scales, dtype=numpy.float64)
    cy = (numpy.arange(feat_h) + 0.5) * stride
    cx = (numpy.arange(feat_w) + 0.5) * stride
    cy, cx, s = numpy.meshgrid(cy, cx, scales, indexing="ij")
    x0 = round_half_up(cx - s / 2)
    y0 = round_half_up(cy - s / 2)
    anchors = numpy.stack((x0, y0, x0 + s - 1, y0 + s - 1), axis=-1)
    return anchors.reshape(-1, 4).astype(numpy.int64)


def box_areas(boxes):
    boxes = as_box_array(boxes)
    return (boxes[:, 2] - boxes[:, 0] + 1) * (boxes[:, 3] - boxes[:, 1] + 1)


def iou_matrix(a, b):
    "Pairwise intersection over union of inclusive-pixel boxes, shape (len(a), len(b))."
    a = as_box_array(a)
    b = as_box_array(b)
    x0 = numpy.maximum(a[:, None, 0], b[None, :, 0])
    y0 = numpy.maximum(a[:, None, 1], b[None, :, 1])
    x1 = numpy.minimum(a[:, None, 2], b[None, :, 2])
    y1 = numpy.minimum(a[:, None, 3], b[None, :, 3])
    inter = numpy.clip(x1 - x0 + 1, 0, None) * numpy.clip(y1 - y0 + 1, 0, None)
    union = box_areas(a)[:, None] + box_areas(b)[None, :] - inter
    return inter / union


def iou(a, b):
    return float(iou_matrix(a, b)[0, 0])


def _center_size(boxes):
    w = boxes[:, 2] - boxes[:, 0] + 1
    h = boxes[:, 3] - boxes[:, 1] + 1
    if numpy.any(w <= 0) or numpy.any(h <= 0):
        error("Box coding needs positive sizes, got %s." % (boxes[(w <= 0) | (h <= 0)],))
    return boxes[:, 0] + 0.5 * w, boxes[:, 1] + 0.5 * h, w, h


def encode_boxes(gt, anchors):
    "Regression targets (tx, ty, tw, th) of gt boxes relative to anchors, shape (n, 4)."
    gx, gy, gw, gh = _center_size(as_box_array(gt))
    ax, ay, aw, ah = _center_size(as_box_array(anchors))
    return numpy.stack(((gx - ax) / aw, (gy - ay) / ah,
                        numpy.log(gw / aw), numpy.log(gh / ah)), axis=1)


def decode_boxes(deltas, anchors):
    "Inverse of encode_boxes; returns real-valued (n, 4) boxes, not rounded."
    deltas = numpy.asarray(deltas, dtype=numpy.float64).reshape(-1, 4)
    ax, ay, aw, ah = _center_size(as_box_array(anchors))
    cx = ax + deltas[:, 0] * aw
    cy = ay + deltas[:, 1] * ah
    w = aw * numpy.exp(deltas[:, 2])
    h = ah * numpy.exp(deltas[:, 3])
    return numpy.stack((cx - 0.5 * w, cy - 0.5 * h,
                        cx + 0.5 * w - 1, cy + 0.5 * h - 1), axis=1)


def encode_box(gt, anchor):
    return BoxDelta(*encode_boxes(gt, anchor)[0])


def decode_box(delta, anchor):
    return tuple(decode_boxes(delta, anchor)[0])


def assign_anchor_targets(anchors, gt_boxes, iou_hi, iou_lo, max_samples, rng):
    """Label anchors for objectness training and compute regression targets.

    An anchor is positive if its IoU with some gt box reaches iou_hi,
    or if it is the best anchor of some gt box (lowest index on ties).
    It is negative if its best IoU is below iou_lo and it is not
    positive. When more than max_samples anchors are labeled, all
    positives are kept and negatives are subsampled with rng.
    """
    if not iou_lo < iou_hi:
        error("Expecting iou_lo < iou_hi, got %s and %s." % (iou_lo, iou_hi))
    anchors = as_box_array(anchors)
    gt = as_box_array(gt_boxes)
    n = anchors.shape[0]
    labels = numpy.full((n,), IGNORE, dtype=numpy.int8)
    deltas = numpy.zeros((n, 4), dtype=numpy.float64)

    if gt.shape[0] == 0:
        labels[:] = NEGATIVE
    else:
        ious = iou_matrix(anchors, gt)
        max_iou = ious.max(axis=1)
        assigned = ious.argmax(axis=1)
        gt_argmax = ious.argmax(axis=0)
        positive = max_iou >= iou_hi
        positive[gt_argmax] = True
        for g, a in enumerate(gt_argmax):
            assigned[a] = g
        labels[(max_iou < iou_lo) & ~positive] = NEGATIVE
        labels[positive] = POSITIVE
        pos = numpy.flatnonzero(positive)
        deltas[pos] = encode_boxes(gt[assigned[pos]], anchors[pos])

    n_pos = int(numpy.count_nonzero(labels == POSITIVE))
    neg = numpy.flatnonzero(labels == NEGATIVE)
    if n_pos + len(neg) > max_samples:
        keep = max(max_samples - n_pos, min(n_pos, len(neg)))
        order = numpy.argsort(rng.random(len(neg)), kind="stable")
        labels[neg[order[keep:]]] = IGNORE
    return AnchorTargets(labels, deltas)


def nms(boxes, scores, thresh):
    """Greedy non-maximum suppression.

    Returns indices of kept boxes ordered by descending score (lowest
    index first on ties); kept boxes overlap pairwise by at most thresh.
    """
    boxes = as_box_array(boxes)
    order = numpy.argsort(-numpy.asarray(scores), kind="stable")
    keep = []
    while order.size > 0:
        i = order[0]
        keep.append(i)
        overlaps = iou_matrix(boxes[i], boxes[order[1:]])[0]
        order = order[1:][overlaps <= thresh]
    return numpy.array(keep, dtype=numpy.int64)


def image_to_feature_box(box, stride, feat_h, feat_w):
    "Smallest feature-grid box covering an image-grid box, clipped to the grid."
    x0, y0, x1, y1 = (int(v) for v in box)
    fx0 = min(max(x0 // stride, 0), feat_w - 1)
    fy0 = min(max(y0 // stride, 0), feat_h - 1)
    fx1 = min(max(-(-(x1 + 1) // stride) - 1, 0), feat_w - 1)
    fy1 = min(max(-(-(y1 + 1) // stride) - 1, 0), feat_h - 1)
    return Box(fx0, fy0, fx1, fy1)


def select_proposals(objectness, deltas, anchors, pre_nms_k, nms_thresh, post_nms_k,
                     img_h, img_w, stride):
    """Turn per-anchor scores and deltas into ROIs on the feature grid.

    Never returns an empty list: when no proposal survives, the full
    feature grid is returned as a single ROI.
    """
    scores = numpy.asarray(objectness).ravel()
    anchors = as_box_array(anchors)
    if scores.shape[0] != anchors.shape[0]:
        error("Got %d objectness scores for %d anchors." % (scores.shape[0], anchors.shape[0]))
    deltas = numpy.asarray(deltas, dtype=numpy.float64).reshape(-1, 4).copy()
    feat_h = img_h // stride
    feat_w = img_w // stride

    order = numpy.argsort(-scores, kind="stable")[:pre_nms_k]
    d = deltas[order]
    d[:, 2:] = numpy.clip(d[:, 2:], -MAX_LOG_RATIO, MAX_LOG_RATIO)
    boxes = round_half_up(decode_boxes(d, anchors[order]))

    valid = ((boxes[:, 2] >= boxes[:, 0]) & (boxes[:, 3] >= boxes[:, 1]) &
             (boxes[:, 2] >= 0) & (boxes[:, 3] >= 0) &
             (boxes[:, 0] <= img_w - 1) & (boxes[:, 1] <= img_h - 1) &
             numpy.isfinite(boxes).all(axis=1))
    boxes = boxes[valid]
    kept_scores = scores[order][valid]
    boxes[:, 0::2] = numpy.clip(boxes[:, 0::2], 0, img_w - 1)
    boxes[:, 1::2] = numpy.clip(boxes[:, 1::2], 0, img_h - 1)

    keep = nms(boxes, kept_scores, nms_thresh)[:post_nms_k]
    proposals = [image_to_feature_box(boxes[i], stride, feat_h, feat_w) for i in keep]
    if not proposals:
        debug("No proposal survived, using the full feature grid.")
        proposals = [Box(0, 0, feat_w - 1, feat_h - 1)]
    return proposals
