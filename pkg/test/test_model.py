#!/usr/bin/env py.test
# -*- coding: utf-8 -*-

from __future__ import print_function
import pytest
import numpy
from collections import OrderedDict

import roifcn.gradcheck
from roifcn.log import NumericalError
from roifcn.params import params_with
from roifcn.model import TrainState, init_state, forward, compute_loss, train_step, train
from roifcn.model import sgd_update, lr_at, upsample_mask, predict, predict_mask, RPN_LAYERS
from roifcn.model import feature_extents


@pytest.fixture()
def small_sample():
    return roifcn.gradcheck.tiny_sample(1, 32, 32)


def scalar_state(w=1.0):
    return TrainState(OrderedDict(w=numpy.array([w])), OrderedDict(w=numpy.zeros(1)), 0, None)


def test_init_state(small_params):
    state = init_state(small_params)
    assert list(state.params) == list(state.momentum)
    assert state.iteration == 0
    assert state.params["conv1.weight"].shape == (3, 1, 3, 3)
    assert state.params["rpn_cls.weight"].shape == (2, 6, 1, 1)
    assert state.params["rpn_bbox.weight"].shape == (8, 6, 1, 1)
    assert state.params["upscore.weight"].shape == (6, 4, 8, 8)
    assert state.params["score.weight"].shape == (2, 4, 1, 1)
    for name, value in state.params.items():
        assert value.dtype == numpy.float64
        if name.endswith(".bias"):
            assert not value.any()
    for value in state.momentum.values():
        assert not value.any()


def test_init_state_is_seeded(small_params):
    a = init_state(small_params)
    b = init_state(small_params)
    c = init_state(small_params, seed=5)
    assert all(numpy.array_equal(a.params[k], b.params[k]) for k in a.params)
    assert not numpy.array_equal(a.params["conv1.weight"], c.params["conv1.weight"])


def test_forward_shapes(small_params, small_sample):
    state = init_state(small_params)
    result = forward(small_sample.image, state, small_params)
    fh, fw = feature_extents(small_params)
    assert (fh, fw) == (8, 8)
    assert result.objectness.shape == (fh * fw * 2,)
    assert result.deltas.shape == (fh * fw * 2, 4)
    assert result.seg_scores.shape == (2, 32, 32)
    assert result.roi_mask.shape == (fh, fw)
    assert 1 <= len(result.proposals) <= small_params["rpn"]["post_nms_k"]
    assert result.roi_mask.any()


def test_forward_rejects_wrong_extents(small_params):
    state = init_state(small_params)
    with pytest.raises(RuntimeError):
        forward(numpy.zeros((1, 16, 32)), state, small_params)


def test_forward_without_detection(small_params, small_sample):
    params = params_with(small_params, detection_enabled=False)
    result = forward(small_sample.image, init_state(params), params)
    assert result.objectness is None and result.deltas is None
    assert result.proposals == []
    assert numpy.all(result.roi_mask == 1)


def test_zero_network_gives_uniform_segmentation(small_params, small_sample):
    state = init_state(small_params)
    for value in state.params.values():
        value[...] = 0
    report, _, result, _ = compute_loss(small_sample, state, small_params,
                                        rng=numpy.random.Generator(numpy.random.PCG64(0)))
    assert not result.seg_scores.any()
    assert abs(report.l_seg - numpy.log(2.0)) < 1e-12
    assert report.n_inroi_pixels == 16 * int(numpy.count_nonzero(result.roi_mask))


def test_detection_off_leaves_rpn_untouched(small_params, small_sample):
    params = params_with(small_params, detection_enabled=False)
    state = init_state(params)
    report, grads, _, _ = compute_loss(small_sample, state, params)
    assert report.l_reg is None and report.l_cls is None
    assert report.total == report.l_seg
    for layer in RPN_LAYERS:
        assert not grads[layer + ".weight"].any()
        assert not grads[layer + ".bias"].any()
    before = {k: v.copy() for k, v in state.params.items()}
    train_step(small_sample, state, params)
    for layer in RPN_LAYERS:
        # Only weight decay moves them
        decay = 1 - lr_at(0, params) * params["solver"]["weight_decay"]
        w = layer + ".weight"
        assert numpy.allclose(state.params[w], before[w] * decay, rtol=1e-12, atol=0)


def test_sgd_fixed_point():
    state = scalar_state()
    sgd_update(state, {"w": numpy.zeros(1)}, 0.1, 0.9, 0.0)
    assert state.params["w"][0] == 1.0


def test_sgd_plain_step():
    state = scalar_state()
    sgd_update(state, {"w": numpy.ones(1)}, 0.1, 0.0, 0.0)
    assert abs(state.params["w"][0] - 0.9) < 1e-15


def test_sgd_momentum_steps():
    state = scalar_state()
    sgd_update(state, {"w": numpy.ones(1)}, 0.1, 0.9, 0.0)
    assert abs(state.momentum["w"][0] + 0.1) < 1e-15
    assert abs(state.params["w"][0] - 0.9) < 1e-15
    sgd_update(state, {"w": numpy.ones(1)}, 0.1, 0.9, 0.0)
    assert abs(state.momentum["w"][0] + 0.19) < 1e-15
    assert abs(state.params["w"][0] - 0.71) < 1e-15


def test_weight_decay_shrinks_parameters(small_params):
    state = init_state(small_params)
    before = {k: v.copy() for k, v in state.params.items()}
    zero = {k: numpy.zeros_like(v) for k, v in state.params.items()}
    sgd_update(state, zero, 0.01, 0.0, 5e-4)
    for k, v in state.params.items():
        assert numpy.allclose(v, before[k] * (1 - 0.01 * 5e-4), rtol=1e-14, atol=0)


def test_lr_schedule(small_params):
    params = params_with(small_params, lr=0.5, lr_step_iters=10, lr_gamma=0.1)
    assert lr_at(0, params) == 0.5
    assert lr_at(9, params) == 0.5
    assert abs(lr_at(10, params) - 0.05) < 1e-15
    assert abs(lr_at(25, params) - 0.005) < 1e-15
    rates = [lr_at(i, params) for i in range(40)]
    assert all(a >= b for a, b in zip(rates, rates[1:]))


def test_train_step_is_deterministic(small_params, small_sample):
    a = init_state(small_params)
    b = init_state(small_params)
    reports = []
    for state in (a, b):
        for _ in range(3):
            state, report = train_step(small_sample, state, small_params)
        reports.append(report)
    assert a.iteration == b.iteration == 3
    for k in a.params:
        assert numpy.array_equal(a.params[k], b.params[k])
        assert numpy.array_equal(a.momentum[k], b.momentum[k])
    assert a.rng.bit_generator.state == b.rng.bit_generator.state
    assert reports[0] == reports[1]


def test_train_step_reduces_loss_on_one_sample(small_params, small_sample):
    params = params_with(small_params, lr=0.01)
    state = init_state(params)
    report, _, result, frozen = compute_loss(small_sample, state, params,
                                             rng=numpy.random.Generator(numpy.random.PCG64(7)))
    for _ in range(20):
        state, _ = train_step(small_sample, state, params)
    last = compute_loss(small_sample, state, params, roi_mask=result.roi_mask,
                        targets=frozen)[0].total
    assert last < report.total


def test_train_step_rejects_non_finite(small_params, small_sample):
    state = init_state(small_params)
    state.params["score.bias"][0] = numpy.nan
    with pytest.raises(NumericalError) as e:
        train_step(small_sample, state, small_params)
    assert "segmentation scores" in str(e.value)


def test_train_runs_configured_iterations(small_params, small_sample):
    seen = []
    state = train([small_sample, small_sample], init_state(small_params), small_params,
                  callback=lambda it, report, lr: seen.append(it))
    assert state.iteration == small_params["solver"]["iterations"]
    assert seen == list(range(small_params["solver"]["iterations"]))


def test_train_without_samples(small_params):
    state = train([], init_state(small_params), small_params, iterations=0)
    assert state.iteration == 0
    with pytest.raises(RuntimeError):
        train([], init_state(small_params), small_params)


def test_upsample_mask():
    mask = numpy.array([[1.0, 0.0], [0.0, 1.0]])
    up = upsample_mask(mask, 2)
    assert up.shape == (4, 4)
    assert numpy.array_equal(up, [[1, 1, 0, 0], [1, 1, 0, 0], [0, 0, 1, 1], [0, 0, 1, 1]])


def test_predict_is_gated_by_rois(small_params, small_sample):
    state = init_state(small_params)
    state.params["score.weight"][...] = 0
    state.params["score.bias"][...] = [0.0, 1.0]
    mask, result = predict(small_sample.image, state, small_params)
    assert mask.shape == (32, 32)
    assert numpy.array_equal(mask != 0, upsample_mask(result.roi_mask))
    scores = numpy.zeros((2, 2, 2))
    assert not predict_mask(scores, numpy.ones((2, 2))).any()
