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

"""The detection-guided segmentation network.

Layers, in order::

    conv1    3x3 conv, relu
    conv2    3x3 conv, relu, 2x2 max pool
    conv3    3x3 conv, relu, 2x2 max pool       (feature grid, stride 4)
    rpn_conv 3x3 conv, relu                     (detection head)
    rpn_cls  1x1 conv, one objectness logit per anchor scale
    rpn_bbox 1x1 conv, four box deltas per anchor scale
    roi_convN 3x3 ROI conv, relu, one or more   (segmentation head)
    upscore  transposed conv, upsamples by the backbone stride
    score    1x1 conv, background/foreground scores

With detection disabled the detection head is not evaluated, the ROI
mask covers the whole feature grid and the ROI convolutions reduce to
dense convolutions.
"""

from collections import OrderedDict, namedtuple

import numpy
from numpy.random import Generator, PCG64

from roifcn.log import error, info, debug, numerical_error
from roifcn.params import BACKBONE_STRIDE
from roifcn.tensor import ConvParams, bilinear_kernel, glorot_uniform
from roifcn.tensor import conv2d_forward, conv2d_backward
from roifcn.tensor import conv_transpose2d_forward, conv_transpose2d_backward
from roifcn.tensor import relu, relu_backward, maxpool2, maxpool2_backward
from roifcn.roiconv import rasterize_rois, roi_conv_forward, roi_conv_backward
from roifcn.roiconv import same_padding
from roifcn.rpn import generate_anchors, assign_anchor_targets, select_proposals
from roifcn.rpn import POSITIVE, IGNORE
from roifcn.loss import regression_loss, objectness_loss, masked_seg_loss, total_loss

RPN_LAYERS = ("rpn_conv", "rpn_cls", "rpn_bbox")


ForwardResult = namedtuple("ForwardResult", ("objectness", "deltas", "proposals",
                                             "seg_scores", "roi_mask", "cache"))
ForwardResult.__doc__ = """Network outputs for one image.

objectness has one logit per anchor and deltas one (tx, ty, tw, th)
row per anchor, both None with detection disabled. proposals are the
ROIs on the feature grid and roi_mask their union. cache holds the
intermediate activations needed by backward."""


class TrainState(object):
    """Everything that changes while training: parameters, momentum
    buffers, the iteration counter and the random number generator.

    params and momentum are OrderedDicts keyed by "<layer>.weight" and
    "<layer>.bias" in layer order.
    """

    def __init__(self, params, momentum, iteration, rng):
        self.params = params
        self.momentum = momentum
        self.iteration = iteration
        self.rng = rng

    def copy(self):
        rng = Generator(PCG64())
        rng.bit_generator.state = self.rng.bit_generator.state
        return TrainState(OrderedDict((k, v.copy()) for k, v in self.params.items()),
                          OrderedDict((k, v.copy()) for k, v in self.momentum.items()),
                          self.iteration, rng)


def roi_layer_names(params):
    return ["roi_conv%d" % (i + 1) for i in range(params["network"]["roi_conv_layers"])]


def layer_shapes(params):
    """Return OrderedDict {layer: (kernel shape, stride, padding, transposed)}."""
    net = params["network"]
    c1, c2, c3 = net["channels"]
    n_scales = len(params["rpn"]["anchor_scales"])
    rc = params["rpn"]["rpn_channels"]
    s = BACKBONE_STRIDE
    layers = OrderedDict()
    layers["conv1"] = ((c1, 1, 3, 3), 1, 1, False)
    layers["conv2"] = ((c2, c1, 3, 3), 1, 1, False)
    layers["conv3"] = ((c3, c2, 3, 3), 1, 1, False)
    layers["rpn_conv"] = ((rc, c3, 3, 3), 1, 1, False)
    layers["rpn_cls"] = ((n_scales, rc, 1, 1), 1, 0, False)
    layers["rpn_bbox"] = ((4 * n_scales, rc, 1, 1), 1, 0, False)
    for name in roi_layer_names(params):
        layers[name] = ((c3, c3, 3, 3), 1, same_padding(3), False)
    layers["upscore"] = ((c3, net["upscore_channels"], 2 * s, 2 * s), s, s // 2, True)
    layers["score"] = ((2, net["upscore_channels"], 1, 1), 1, 0, False)
    return layers


def init_state(params, seed=None):
    """Fresh TrainState: Glorot-uniform kernels, zero biases, bilinear
    upsampling kernel, zero momentum."""
    if seed is None:
        seed = params["solver"]["seed"]
    dtype = numpy.dtype(params["network"]["dtype"])
    rng = Generator(PCG64(seed))
    weights = OrderedDict()
    for name, (shape, stride, padding, transposed) in layer_shapes(params).items():
        if name == "upscore":
            kernel = bilinear_kernel(shape[0], shape[1], stride, dtype=dtype)
            out_channels = shape[1]
        else:
            fan_in = shape[1] * shape[2] * shape[3]
            fan_out = shape[0] * shape[2] * shape[3]
            kernel = glorot_uniform(rng, shape, fan_in, fan_out, dtype=dtype)
            out_channels = shape[0]
        weights[name + ".weight"] = kernel
        weights[name + ".bias"] = numpy.zeros((out_channels,), dtype=dtype)
    momentum = OrderedDict((k, numpy.zeros_like(v)) for k, v in weights.items())
    return TrainState(weights, momentum, 0, rng)


def conv_params(state, params, name):
    _, stride, padding, transposed = layer_shapes(params)[name]
    return ConvParams(state.params[name + ".weight"], state.params[name + ".bias"],
                      stride=stride, padding=padding, transposed=transposed)


def feature_extents(params):
    net = params["network"]
    return net["height"] // BACKBONE_STRIDE, net["width"] // BACKBONE_STRIDE


def anchors_for(params):
    fh, fw = feature_extents(params)
    return generate_anchors(fh, fw, BACKBONE_STRIDE, params["rpn"]["anchor_scales"])


def upsample_mask(roi_mask, stride=BACKBONE_STRIDE):
    "Map a feature-grid RoiMask to the image grid by repeating each cell stride x stride times."
    return numpy.kron(roi_mask != 0, numpy.ones((stride, stride), dtype=bool))


def forward(image, state, params, roi_mask=None):
    """Run the network on a 1 x H x W image.

    With detection enabled and roi_mask None the ROIs are the selected
    proposals; a given roi_mask (on the feature grid) is used as is.
    """
    net = params["network"]
    rpn = params["rpn"]
    dtype = state.params["conv1.weight"].dtype
    x = numpy.asarray(image).astype(dtype)
    if x.shape != (1, net["height"], net["width"]):
        error("Expecting an image of shape %s, got %s."
              % ((1, net["height"], net["width"]), x.shape))
    cache = {"x": x}

    def p(name):
        return conv_params(state, params, name)

    h1 = conv2d_forward(x, p("conv1"))
    a1 = relu(h1)
    h2 = conv2d_forward(a1, p("conv2"))
    a2, i2 = maxpool2(relu(h2))
    h3 = conv2d_forward(a2, p("conv3"))
    feat, i3 = maxpool2(relu(h3))
    cache.update(h1=h1, a1=a1, h2=h2, i2=i2, a2=a2, h3=h3, i3=i3, feat=feat)
    fh, fw = feat.shape[1:]

    objectness = deltas = None
    proposals = []
    if net["detection_enabled"]:
        hr = conv2d_forward(feat, p("rpn_conv"))
        ar = relu(hr)
        n_scales = len(rpn["anchor_scales"])
        obj = conv2d_forward(ar, p("rpn_cls"))
        dlt = conv2d_forward(ar, p("rpn_bbox"))
        objectness = obj.transpose(1, 2, 0).reshape(-1)
        deltas = dlt.reshape(n_scales, 4, fh, fw).transpose(2, 3, 0, 1).reshape(-1, 4)
        cache.update(hr=hr, ar=ar)
        if roi_mask is None:
            proposals = select_proposals(objectness, deltas, anchors_for(params),
                                         rpn["pre_nms_k"], rpn["nms_thresh"],
                                         rpn["post_nms_k"], net["height"], net["width"],
                                         BACKBONE_STRIDE)
            roi_mask = rasterize_rois(proposals, fh, fw)
    elif roi_mask is None:
        roi_mask = numpy.ones((fh, fw))
    if roi_mask.shape != (fh, fw):
        error("RoiMask shape %s does not match the feature grid %s." % (roi_mask.shape, (fh, fw)))

    z = feat
    roi_in, roi_pre = [], []
    for name in roi_layer_names(params):
        roi_in.append(z)
        h = roi_conv_forward(z, p(name), roi_mask)
        roi_pre.append(h)
        z = relu(h)
    up = conv_transpose2d_forward(z, p("upscore"))
    scores = conv2d_forward(up, p("score"))
    cache.update(roi_in=roi_in, roi_pre=roi_pre, z=z, up=up)
    return ForwardResult(objectness, deltas, proposals, scores, roi_mask, cache)


def backward(result, d_scores, d_objectness, d_deltas, state, params):
    """Gradients of the loss with respect to every parameter, given the
    gradients with respect to the network outputs.

    Returns an OrderedDict keyed like state.params. Detection head
    gradients are zero when d_objectness and d_deltas are None.
    """
    c = result.cache
    grads = OrderedDict((k, None) for k in state.params)

    def p(name):
        return conv_params(state, params, name)

    def store(name, dkernel, dbias):
        grads[name + ".weight"] = dkernel
        grads[name + ".bias"] = dbias

    dup, dk, db = conv2d_backward(c["up"], p("score"), d_scores)
    store("score", dk, db)
    dz, dk, db = conv_transpose2d_backward(c["z"], p("upscore"), dup)
    store("upscore", dk, db)
    names = roi_layer_names(params)
    for name, z_in, h in reversed(list(zip(names, c["roi_in"], c["roi_pre"]))):
        dz, dk, db = roi_conv_backward(z_in, p(name), result.roi_mask, relu_backward(h, dz))
        store(name, dk, db)
    dfeat = dz

    if d_objectness is not None and d_deltas is not None:
        fh, fw = c["feat"].shape[1:]
        n_scales = len(params["rpn"]["anchor_scales"])
        dobj = d_objectness.reshape(fh, fw, n_scales).transpose(2, 0, 1)
        ddlt = d_deltas.reshape(fh, fw, n_scales, 4).transpose(2, 3, 0, 1)
        ddlt = ddlt.reshape(4 * n_scales, fh, fw)
        dar_cls, dk, db = conv2d_backward(c["ar"], p("rpn_cls"), numpy.ascontiguousarray(dobj))
        store("rpn_cls", dk, db)
        dar_box, dk, db = conv2d_backward(c["ar"], p("rpn_bbox"), numpy.ascontiguousarray(ddlt))
        store("rpn_bbox", dk, db)
        dhr = relu_backward(c["hr"], dar_cls + dar_box)
        dfeat_rpn, dk, db = conv2d_backward(c["feat"], p("rpn_conv"), dhr)
        store("rpn_conv", dk, db)
        dfeat = dfeat + dfeat_rpn
    else:
        for name in RPN_LAYERS:
            store(name, numpy.zeros_like(state.params[name + ".weight"]),
                  numpy.zeros_like(state.params[name + ".bias"]))

    dh3 = relu_backward(c["h3"], maxpool2_backward(c["i3"], dfeat))
    da2, dk, db = conv2d_backward(c["a2"], p("conv3"), dh3)
    store("conv3", dk, db)
    dh2 = relu_backward(c["h2"], maxpool2_backward(c["i2"], da2))
    da1, dk, db = conv2d_backward(c["a1"], p("conv2"), dh2)
    store("conv2", dk, db)
    _, dk, db = conv2d_backward(c["x"], p("conv1"), relu_backward(c["h1"], da1))
    store("conv1", dk, db)
    return grads


def compute_loss(sample, state, params, rng=None, roi_mask=None, targets=None,
                 with_grads=True):
    """Forward pass, loss and (optionally) backward pass for one sample.

    Anchor targets are sampled with rng unless given. Returns
    (LossReport, grads or None, ForwardResult, AnchorTargets or None).
    """
    net = params["network"]
    rpn = params["rpn"]
    result = forward(sample.image, state, params, roi_mask=roi_mask)

    l_reg = l_cls = None
    d_obj = d_dlt = None
    n_pos = n_sampled = 0
    if net["detection_enabled"]:
        if targets is None:
            if rng is None:
                error("Need a random number generator to sample anchor targets.")
            targets = assign_anchor_targets(anchors_for(params), sample.gt_boxes,
                                            rpn["iou_hi"], rpn["iou_lo"],
                                            rpn["max_samples"], rng)
        l_reg, d_dlt = regression_loss(result.deltas, targets)
        l_cls, d_obj = objectness_loss(result.objectness, targets)
        n_pos = int(numpy.count_nonzero(targets.labels == POSITIVE))
        n_sampled = int(numpy.count_nonzero(targets.labels != IGNORE))
    else:
        targets = None

    roi_img = upsample_mask(result.roi_mask)
    l_seg, d_scores = masked_seg_loss(result.seg_scores, sample.gt_mask, roi_img)
    report = total_loss(l_reg, l_cls, l_seg, n_pos, n_sampled,
                        int(numpy.count_nonzero(roi_img)))

    grads = None
    if with_grads:
        grads = backward(result, d_scores, d_obj, d_dlt, state, params)
    return report, grads, result, targets


def lr_at(iteration, params):
    "Step-decayed learning rate: lr * lr_gamma ** (iteration // lr_step_iters)."
    solver = params["solver"]
    return solver["lr"] * solver["lr_gamma"] ** (iteration // solver["lr_step_iters"])


def sgd_update(state, grads, lr, momentum, weight_decay):
    """Momentum SGD with L2 weight decay, in place:
    v <- momentum * v - lr * (g + weight_decay * w); w <- w + v."""
    for name, w in state.params.items():
        v = state.momentum[name]
        g = grads[name]
        v *= momentum
        v -= lr * (g + weight_decay * w)
        w += v


def check_finite(tensors):
    "Raise NumericalError naming the first tensor with a NaN or infinite entry."
    for name, t in tensors:
        if t is not None and not numpy.all(numpy.isfinite(t)):
            numerical_error("Non-finite values in %s." % (name,))


def train_step(sample, state, params):
    """One SGD step on one sample. Mutates and returns state, together
    with the LossReport of the sample before the update."""
    solver = params["solver"]
    report, grads, result, _ = compute_loss(sample, state, params, rng=state.rng)
    check_finite([("objectness", result.objectness), ("box deltas", result.deltas),
                  ("segmentation scores", result.seg_scores), ("loss", report.total)] +
                 [("gradient of " + k, g) for k, g in grads.items()])
    lr = lr_at(state.iteration, params)
    sgd_update(state, grads, lr, solver["momentum"], solver["weight_decay"])
    state.iteration += 1
    return state, report


def train(samples, state, params, iterations=None, callback=None):
    """Run train_step over samples, reshuffled every epoch with state.rng.

    callback(iteration, report, lr) is called after every step.
    Returns state.
    """
    solver = params["solver"]
    if iterations is None:
        iterations = solver["iterations"]
    if state.iteration < iterations and not samples:
        error("No training samples.")
    order = []
    while state.iteration < iterations:
        if not order:
            order = list(numpy.argsort(state.rng.random(len(samples)), kind="stable"))
            debug("New epoch at iteration %d." % state.iteration)
        it = state.iteration
        lr = lr_at(it, params)
        state, report = train_step(samples[order.pop(0)], state, params)
        if callback is not None:
            callback(it, report, lr)
        if solver["log_every"] and it % solver["log_every"] == 0:
            info("iter %d  loss %.5g  lr %.3g" % (it, float(report.total), lr))
    return state


def predict(image, state, params):
    """Binary segmentation of one image: foreground where the foreground
    score wins inside the ROI union, background elsewhere.

    Returns (mask, ForwardResult)."""
    result = forward(image, state, params)
    return predict_mask(result.seg_scores, upsample_mask(result.roi_mask)), result


def predict_mask(scores, roi_mask_img):
    return ((scores[1] > scores[0]) & (roi_mask_img != 0)).astype(numpy.uint8)
