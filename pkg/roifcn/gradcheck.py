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

"""Finite-difference check of every parameter gradient of the training loss.

Analytic gradients are computed in float64. The finite-difference
oracle evaluates the loss in numpy.longdouble with central differences,
so its roundoff stays well below the tolerance. Proposals, the ROI
mask and the anchor targets are computed once and held fixed.

Where a perturbation flips a ReLU or changes a max pooling winner the
loss is not differentiable along it; the step is then shrunk until the
activation pattern on both sides matches the unperturbed one.
"""

from collections import OrderedDict

import numpy
from numpy.random import Generator, PCG64

from roifcn.log import debug
from roifcn.params import validate_params, default_data_params
from roifcn.data import Sample, generate_sample, mask_to_boxes
from roifcn.model import init_state, forward, compute_loss, anchors_for, TrainState
from roifcn.rpn import assign_anchor_targets

TOLERANCE = 1e-5
STEP = 1e-6

# Relative errors are taken against at least this gradient magnitude
GRAD_FLOOR = 1e-8

_MAX_STEP_REFINEMENTS = 3


def tiny_params(seed=0):
    "A small float64 network on 16 x 16 inputs."
    return validate_params(dict(
        network=dict(height=16, width=16, channels=(2, 3, 4), upscore_channels=3,
                     dtype="float64"),
        rpn=dict(anchor_scales=(6, 10), rpn_channels=4, max_samples=16,
                 pre_nms_k=6, post_nms_k=2),
        solver=dict(seed=seed),
    ))


def tiny_sample(seed=0, height=16, width=16):
    """A synthetic slice generated at twice the resolution and downsampled,
    image by 2 x 2 averaging and mask by 2 x 2 maximum."""
    data = default_data_params()
    data.update(min_radius=3.0, max_radius=6.0, max_fraction=0.05)
    big = generate_sample(Generator(PCG64(seed)), 2 * height, 2 * width, data)
    image = big.image[0].reshape(height, 2, width, 2).mean(axis=(1, 3))
    mask = big.gt_mask.reshape(height, 2, width, 2).max(axis=(1, 3))
    return Sample(image[None], mask, mask_to_boxes(mask))


def activation_pattern(result):
    c = result.cache
    pattern = [c["h1"] > 0, c["h2"] > 0, c["i2"], c["h3"] > 0, c["i3"]]
    if "hr" in c:
        pattern.append(c["hr"] > 0)
    pattern.extend(h > 0 for h in c["roi_pre"])
    return pattern


def same_pattern(a, b):
    return all(numpy.array_equal(x, y) for x, y in zip(a, b))


def relative_error(a, b):
    "|a - b| / max(|a|, |b|, GRAD_FLOOR)"
    return float(abs(a - b) / max(abs(a), abs(b), GRAD_FLOOR))


def gradcheck_all(seed=0, roi_mask=None, analytic_hook=None, params=None, sample=None,
                  step=STEP):
    """Compare analytic and finite-difference gradients of the total loss.

    roi_mask replaces the proposals of the unperturbed forward pass.
    analytic_hook(grads) may modify the analytic gradients before the
    comparison. Returns OrderedDict {parameter name: max relative error}.
    """
    if params is None:
        params = tiny_params(seed)
    if sample is None:
        sample = tiny_sample(seed, params["network"]["height"], params["network"]["width"])
    rng = Generator(PCG64(seed))
    state = init_state(params, seed)
    # Nonzero biases so the bias gradients see varied activations
    for name, value in state.params.items():
        if name.endswith(".bias"):
            value[...] = rng.random(value.shape) * 0.1 - 0.05

    if roi_mask is None:
        roi_mask = forward(sample.image, state, params).roi_mask
    targets = None
    if params["network"]["detection_enabled"]:
        rpn = params["rpn"]
        targets = assign_anchor_targets(anchors_for(params), sample.gt_boxes, rpn["iou_hi"],
                                        rpn["iou_lo"], rpn["max_samples"], rng)

    _, grads, _, _ = compute_loss(sample, state, params, roi_mask=roi_mask, targets=targets)
    if analytic_hook is not None:
        analytic_hook(grads)

    ld = numpy.longdouble
    state_ld = TrainState(OrderedDict((k, v.astype(ld)) for k, v in state.params.items()),
                          None, 0, None)
    sample_ld = Sample(sample.image.astype(ld), sample.gt_mask, sample.gt_boxes)

    def loss():
        report, _, result, _ = compute_loss(sample_ld, state_ld, params, roi_mask=roi_mask,
                                            targets=targets, with_grads=False)
        return report.total, activation_pattern(result)

    _, base = loss()
    errors = OrderedDict()
    for name, w in state_ld.params.items():
        analytic = grads[name]
        worst = 0.0
        for index in numpy.ndindex(w.shape):
            orig = w[index]
            h = ld(step)
            for _ in range(_MAX_STEP_REFINEMENTS + 1):
                w[index] = orig + h
                plus, pattern_plus = loss()
                w[index] = orig - h
                minus, pattern_minus = loss()
                if same_pattern(pattern_plus, base) and same_pattern(pattern_minus, base):
                    break
                debug("Activation pattern changes at %s%s, shrinking step." % (name, index))
                h = h / 100
            w[index] = orig
            numeric = (plus - minus) / (2 * h)
            worst = max(worst, relative_error(analytic[index], numeric))
        errors[name] = worst
    return errors


def passed(errors, tolerance=TOLERANCE):
    return all(e < tolerance for e in errors.values())
