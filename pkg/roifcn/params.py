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

"""Utilities for roifcn parameters.

Parameters are a two-level dict {category: {name: value}}. Names are
unique across categories, so config files list plain ``name = value``
lines.
"""

from six import string_types
from six.moves import configparser

import copy
import numbers

from roifcn.log import info, error, roifcn_assert
from roifcn.signatures import hash_params
from roifcn.system import read_textfile

# Product of the two 2x2 pooling strides of the backbone
BACKBONE_STRIDE = 4

_SECTION = "roifcn"


def default_network_params():
    p = dict(
        height=64,
        width=64,
        channels=(8, 16, 32),
        upscore_channels=16,
        roi_conv_layers=1,
        detection_enabled=True,
        dtype="float32",
    )
    return p


def default_rpn_params():
    # Box coding, thresholds and NMS follow the Faster R-CNN convention
    p = dict(
        anchor_scales=(6, 10, 16),
        rpn_channels=32,
        iou_hi=0.7,
        iou_lo=0.3,
        max_samples=32,
        pre_nms_k=12,
        post_nms_k=4,
        nms_thresh=0.7,
    )
    return p


def default_solver_params():
    p = dict(
        lr=1e-2,
        momentum=0.9,
        weight_decay=5e-4,
        lr_step_iters=1500,
        lr_gamma=0.1,
        iterations=3000,
        seed=0,
        log_every=100,
    )
    return p


def default_data_params():
    p = dict(
        background=0.12,
        noise_sigma=0.35,
        blob_count=3,
        blob_amplitude=0.35,
        arc_intensity=0.9,
        max_arcs=2,
        min_radius=4.0,
        max_radius=12.0,
        min_fraction=0.001,
        max_fraction=0.01,
        max_draws=100,
    )
    return p


def default_params():
    p = dict(
        network=default_network_params(),
        rpn=default_rpn_params(),
        solver=default_solver_params(),
        data=default_data_params(),
    )
    return p


def name_categories(default):
    "Map each parameter name to its category."
    categories = {}
    for category in default:
        for name in default[category]:
            roifcn_assert(name not in categories, "Duplicate parameter name '%s'.", name)
            categories[name] = category
    return categories


def read_config_file(filename):
    """Read a ``key = value`` config file into a two-level params dict.

    Unknown keys are an error.
    """
    content = read_textfile(filename)
    if content is None:
        error("Config file '%s' not found." % (filename,))
    info("Using config file '%s'." % (filename,))
    parser = configparser.ConfigParser(interpolation=None, delimiters=("=",),
                                       comment_prefixes=("#",))
    try:
        parser.read_string("[%s]\n%s" % (_SECTION, content), source=filename)
    except configparser.Error as e:
        error("Malformed config file '%s': %s" % (filename, e))
    categories = name_categories(default_params())
    p = {}
    for name, value in parser.items(_SECTION):
        if name not in categories:
            error("Invalid parameter name '%s' in config file '%s'." % (name, filename))
        p.setdefault(categories[name], {})[name] = value
    return p


def as_bool(value):
    if isinstance(value, bool):
        return value
    elif value in ("True", "true", "1", 1):
        return True
    elif value in ("False", "false", "0", 0):
        return False
    else:
        error("Invalid boolean value %s" % (value,))


def as_int_tuple(p):
    """Convert p to a tuple of ints, allowing a list or tuple of
ints or a comma separated string as input."""
    if isinstance(p, string_types):
        p = [s for s in p.replace(" ", "").split(",") if s]
    if isinstance(p, (tuple, list)):
        try:
            return tuple(int(item) for item in p)
        except ValueError:
            pass
    error("Expecting a list of integers, not %s." % (p,))


def check_params_keys(default, params):
    "Check that keys in params exist in defaults."
    for category in params:
        if category not in default:
            error("Invalid parameter category '%s'." % category)
        if params[category] is not None:
            invalid = set(params[category]) - set(default[category])
            if invalid:
                error("Invalid parameter names %s in category '%s'." % (sorted(invalid), category))


def merge_params(default, params):
    "Merge two-level param dicts."
    p = {}
    for category in default:
        d = default[category].copy()
        p[category] = d
        v = params.get(category)
        if v is not None:
            p[category].update(v)
    return p


def check_network_config(p):
    "Check the invariants of a fully typed parameter set."
    net = p["network"]
    if net["height"] % BACKBONE_STRIDE or net["width"] % BACKBONE_STRIDE:
        error("Input extents %dx%d are not divisible by the backbone stride %d."
              % (net["height"], net["width"], BACKBONE_STRIDE))
    if len(net["channels"]) != 3:
        error("Expecting three backbone channel counts, got %s." % (net["channels"],))
    if net["roi_conv_layers"] < 1:
        error("Need at least one ROI convolution layer.")
    if net["dtype"] not in ("float32", "float64"):
        error("Invalid dtype '%s', expecting float32 or float64." % (net["dtype"],))
    solver = p["solver"]
    if not solver["lr"] > 0:
        error("Learning rate must be positive, got %s." % (solver["lr"],))
    if not 0 <= solver["momentum"] < 1:
        error("Momentum must lie in [0, 1), got %s." % (solver["momentum"],))
    if solver["lr_step_iters"] < 1:
        error("lr_step_iters must be positive, got %s." % (solver["lr_step_iters"],))
    rpn = p["rpn"]
    if not rpn["iou_lo"] < rpn["iou_hi"]:
        error("Expecting iou_lo < iou_hi, got %s and %s." % (rpn["iou_lo"], rpn["iou_hi"]))
    if len(rpn["anchor_scales"]) == 0:
        error("Need at least one anchor scale.")


def validate_params(params=None, filename=None):
    """Validate parameters to roifcn and fill in with defaults where missing.

    Precedence is defaults < config file < params.
    """

    # Start with defaults
    p0 = default_params()
    p = p0

    # Override with config file if any
    if filename is not None:
        c = read_config_file(filename)
        check_params_keys(p, c)
        p = merge_params(p, c)

    # Override with runtime params if any
    if params:
        check_params_keys(p, params)
        p = merge_params(p, params)

    # Convert parameter types
    for category in p:
        for name, value in p[category].items():
            v0 = p0[category][name]
            try:
                if isinstance(v0, string_types):
                    value = str(value)
                elif isinstance(v0, bool):
                    value = as_bool(value)
                elif isinstance(v0, numbers.Number):
                    value = type(v0)(value)
                elif isinstance(v0, tuple):
                    value = as_int_tuple(value)
            except ValueError:
                error("Invalid value %r for parameter '%s'." % (value, name))
            p[category][name] = value

    check_network_config(p)
    return p


def format_value(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    elif isinstance(value, tuple):
        return ",".join(str(v) for v in value)
    elif isinstance(value, float):
        return repr(value)
    return str(value)


def format_params(params):
    """Render fully resolved params as a config file that validate_params
    reads back to the same values."""
    lines = ["# signature = %s" % hash_params(params)]
    for category in sorted(params):
        lines.append("# [%s]" % category)
        for name in sorted(params[category]):
            lines.append("%s = %s" % (name, format_value(params[category][name])))
    return "\n".join(lines) + "\n"


def params_with(params, **overrides):
    "Deep copy of params with single values replaced, looked up by name."
    p = copy.deepcopy(params)
    categories = name_categories(p)
    for name, value in overrides.items():
        if name not in categories:
            error("Invalid parameter name '%s'." % (name,))
        p[categories[name]][name] = value
    return p
