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

"""Per-slice precision, recall and dice, their dataset means and the
ascending dice curve over slices with foreground."""

from collections import namedtuple

import numpy

from roifcn.log import error, info
from roifcn.model import predict
from roifcn.system import store_textfile

ConfusionCounts = namedtuple("ConfusionCounts", ("tp", "fp", "fn", "tn"))

SliceResult = namedtuple("SliceResult", ("slice_id", "precision", "recall", "dice",
                                         "has_foreground"))

Summary = namedtuple("Summary", ("precision", "recall", "dice", "n_slices"))

CONVENTION = ("# 0/0 scores 0, except a slice with empty prediction and empty "
              "ground truth which scores dice 1; means cover all slices")


def confusion_counts(pred, gt):
    pred = numpy.asarray(pred) != 0
    gt = numpy.asarray(gt) != 0
    if pred.shape != gt.shape:
        error("Prediction shape %s and ground truth shape %s differ." % (pred.shape, gt.shape))
    tp = int(numpy.count_nonzero(pred & gt))
    fp = int(numpy.count_nonzero(pred & ~gt))
    fn = int(numpy.count_nonzero(~pred & gt))
    tn = int(pred.size - tp - fp - fn)
    return ConfusionCounts(tp, fp, fn, tn)


def _ratio(a, b):
    return a / float(b) if b else 0.0


def prf_dice(c):
    """precision = tp/(tp+fp), recall = tp/(tp+fn), dice = 2tp/(2tp+fp+fn).

    Undefined ratios are 0, except that dice is 1 when tp, fp and fn
    are all zero.
    """
    precision = _ratio(c.tp, c.tp + c.fp)
    recall = _ratio(c.tp, c.tp + c.fn)
    if c.tp == c.fp == c.fn == 0:
        dice = 1.0
    else:
        dice = _ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn)
    return precision, recall, dice


def slice_result(slice_id, pred, gt):
    c = confusion_counts(pred, gt)
    return SliceResult(slice_id, *prf_dice(c), has_foreground=c.tp + c.fn > 0)


def aggregate_report(results):
    """Unweighted means over all slices and the dice curve.

    The curve lists (rank, slice_id, dice) of the slices with
    foreground, sorted by ascending dice (input order on ties), ranks
    starting at 1.
    """
    results = list(results)
    if not results:
        error("No slices to aggregate.")
    summary = Summary(float(numpy.mean([r.precision for r in results])),
                      float(numpy.mean([r.recall for r in results])),
                      float(numpy.mean([r.dice for r in results])),
                      len(results))
    positive = [r for r in results if r.has_foreground]
    order = numpy.argsort([r.dice for r in positive], kind="stable")
    curve = [(rank + 1, positive[i].slice_id, positive[i].dice)
             for rank, i in enumerate(order)]
    return summary, curve


def format_report(results, summary):
    lines = [CONVENTION, "slice_id,precision,recall,dice"]
    lines.extend("%s,%.6f,%.6f,%.6f" % (r.slice_id, r.precision, r.recall, r.dice)
                 for r in results)
    lines.append("#mean,%.6f,%.6f,%.6f" % (summary.precision, summary.recall, summary.dice))
    return "\n".join(lines) + "\n"


def format_curve(curve):
    lines = ["rank,slice_id,dice"]
    lines.extend("%d,%s,%.6f" % row for row in curve)
    return "\n".join(lines) + "\n"


def write_report(report_path, curve_path, results):
    summary, curve = aggregate_report(results)
    store_textfile(report_path, format_report(results, summary))
    store_textfile(curve_path, format_curve(curve))
    info("Mean precision %.4f, recall %.4f, dice %.4f over %d slices."
         % (summary.precision, summary.recall, summary.dice, summary.n_slices))
    return summary, curve


def evaluate(samples, state, params):
    "Score the ROI-gated prediction of every (slice_id, Sample), in order."
    results = []
    for slice_id, sample in samples:
        pred, _ = predict(sample.image, state, params)
        results.append(slice_result(slice_id, pred, sample.gt_mask))
    return results
