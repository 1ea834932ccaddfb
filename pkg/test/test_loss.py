#!/usr/bin/env py.test
# -*- coding: utf-8 -*-

from __future__ import print_function
import pytest
import numpy

from roifcn.rpn import AnchorTargets, POSITIVE, NEGATIVE, IGNORE
from roifcn.loss import smooth_l1, smooth_l1_grad, regression_loss, objectness_loss
from roifcn.loss import masked_seg_loss, total_loss
from roifcn.roiconv import Box, rasterize_rois
from roifcn.model import upsample_mask

from conftest import numeric_gradient, max_rel_error

LOG2 = numpy.log(2.0)


def targets(labels, deltas=None):
    labels = numpy.asarray(labels, dtype=numpy.int8)
    if deltas is None:
        deltas = numpy.zeros((len(labels), 4))
    return AnchorTargets(labels, numpy.asarray(deltas, dtype=numpy.float64))


def test_smooth_l1_examples():
    assert smooth_l1(0.0) == 0.0
    assert smooth_l1(0.5) == 0.125
    assert smooth_l1(2.0) == 1.5
    assert smooth_l1(-2.0) == 1.5


def test_smooth_l1_continuous_at_one():
    eps = 1e-9
    for s in (1.0, -1.0):
        assert abs(smooth_l1(s - eps) - smooth_l1(s + eps)) < 1e-8
        assert abs(smooth_l1_grad(s - eps) - smooth_l1_grad(s + eps)) < 1e-8


def test_regression_loss_averages_over_positives():
    t = targets([POSITIVE, NEGATIVE, POSITIVE, IGNORE],
                [[0, 0, 0, 0], [9, 9, 9, 9], [1, 0, 0, 0], [9, 9, 9, 9]])
    deltas = numpy.array([[0.5, 0, 0, 0], [0, 0, 0, 0], [3.0, 0, 0, 0], [0, 0, 0, 0]])
    loss, ddeltas = regression_loss(deltas, t)
    assert abs(loss - (0.125 + 1.5) / 2) < 1e-12
    assert numpy.array_equal(ddeltas[1], [0, 0, 0, 0])
    assert numpy.array_equal(ddeltas[3], [0, 0, 0, 0])
    assert ddeltas[0, 0] == 0.25 and ddeltas[2, 0] == 0.5


def test_regression_loss_without_positives():
    loss, ddeltas = regression_loss(numpy.ones((3, 4)), targets([NEGATIVE, IGNORE, NEGATIVE]))
    assert loss == 0.0
    assert not ddeltas.any()


def test_objectness_loss_examples():
    loss, _ = objectness_loss(numpy.array([0.0]), targets([POSITIVE]))
    assert abs(loss - LOG2) < 1e-12
    loss, _ = objectness_loss(numpy.array([20.0]), targets([POSITIVE]))
    assert loss < 1e-8
    loss, _ = objectness_loss(numpy.array([0.0, 0.0, 5.0]), targets([POSITIVE, NEGATIVE, IGNORE]))
    assert abs(loss - LOG2) < 1e-12


def test_objectness_loss_is_stable_for_large_logits():
    loss, dlogits = objectness_loss(numpy.array([-800.0, 800.0]), targets([NEGATIVE, POSITIVE]))
    assert numpy.isfinite(loss) and loss < 1e-12
    assert numpy.all(numpy.isfinite(dlogits))


def test_objectness_loss_without_samples():
    loss, dlogits = objectness_loss(numpy.array([1.0, 2.0]), targets([IGNORE, IGNORE]))
    assert loss == 0.0
    assert not dlogits.any()


def test_objectness_loss_gradient(rng):
    logits = rng.standard_normal(6) * 3
    t = targets([POSITIVE, NEGATIVE, IGNORE, POSITIVE, NEGATIVE, NEGATIVE])
    _, dlogits = objectness_loss(logits, t)
    numeric = numeric_gradient(lambda: objectness_loss(logits, t)[0], logits)
    assert max_rel_error(dlogits, numeric) < 1e-6


def test_masked_seg_loss_examples():
    scores = numpy.zeros((2, 2, 3))
    gt = numpy.array([[1, 0, 0], [0, 0, 1]])
    loss, dscores = masked_seg_loss(scores, gt, numpy.zeros((2, 3)))
    assert loss == 0.0 and not dscores.any()
    one = numpy.zeros((2, 3))
    one[0, 0] = 1
    loss, _ = masked_seg_loss(scores, gt, one)
    assert abs(loss - LOG2) < 1e-12
    two = one.copy()
    two[1, 1] = 1
    loss, _ = masked_seg_loss(scores, gt, two)
    assert abs(loss - LOG2) < 1e-12


def test_masked_seg_loss_ignores_scores_outside_union(rng):
    scores = rng.standard_normal((2, 4, 4))
    gt = (rng.random((4, 4)) > 0.7).astype(numpy.uint8)
    roi = numpy.zeros((4, 4))
    roi[1:3, 1:4] = 1
    loss, dscores = masked_seg_loss(scores, gt, roi)
    assert not dscores[:, roi == 0].any()
    changed = scores.copy()
    changed[:, 0, :] += 100
    assert masked_seg_loss(changed, gt, roi)[0] == loss


def test_masked_seg_loss_gradient(rng):
    scores = rng.standard_normal((2, 4, 5))
    gt = (rng.random((4, 5)) > 0.5).astype(numpy.uint8)
    roi = (rng.random((4, 5)) > 0.3).astype(numpy.float64)
    _, dscores = masked_seg_loss(scores, gt, roi)
    numeric = numeric_gradient(lambda: masked_seg_loss(scores, gt, roi)[0], scores)
    assert max_rel_error(dscores, numeric) < 1e-6


def test_masked_seg_loss_rejects_extent_mismatch():
    with pytest.raises(RuntimeError):
        masked_seg_loss(numpy.zeros((2, 3, 3)), numpy.zeros((3, 4)), numpy.zeros((3, 3)))


def test_total_loss():
    assert total_loss(0.0, 0.0, 0.0).total == 0.0
    assert abs(total_loss(0.1, 0.2, 0.3).total - 0.6) < 1e-12
    report = total_loss(None, None, 0.4, n_inroi_pixels=7)
    assert report.total == 0.4
    assert report.l_reg is None and report.l_cls is None
    assert report.n_inroi_pixels == 7


def test_masked_seg_loss_is_shift_invariant(rng):
    scores = rng.standard_normal((2, 6, 6))
    gt = (rng.random((6, 6)) < 0.3).astype(numpy.uint8)
    roi = numpy.zeros((6, 6))
    roi[1:5, 2:6] = 1
    shift = 10 * rng.standard_normal((6, 6))
    loss, dscores = masked_seg_loss(scores, gt, roi)
    shifted_loss, shifted_dscores = masked_seg_loss(scores + shift, gt, roi)
    assert abs(loss - shifted_loss) < 1e-12
    assert numpy.allclose(dscores, shifted_dscores, rtol=0, atol=1e-12)


def test_duplicate_roi_leaves_seg_loss_unchanged(rng):
    boxes = [Box(0, 0, 1, 2), Box(2, 1, 3, 3)]
    once = upsample_mask(rasterize_rois(boxes, 4, 4))
    twice = upsample_mask(rasterize_rois(boxes + [boxes[1]], 4, 4))
    scores = rng.standard_normal((2, 16, 16))
    gt = (rng.random((16, 16)) < 0.2).astype(numpy.uint8)
    loss, dscores = masked_seg_loss(scores, gt, once)
    loss_twice, dscores_twice = masked_seg_loss(scores, gt, twice)
    assert loss == loss_twice
    assert numpy.array_equal(dscores, dscores_twice)
