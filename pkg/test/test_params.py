#!/usr/bin/env py.test
# -*- coding: utf-8 -*-

from __future__ import print_function
import os
import pytest

from roifcn.params import default_params, validate_params, read_config_file
from roifcn.params import format_params, params_with, as_bool, as_int_tuple
from roifcn.system import store_textfile


def write_config(tmpdir, content):
    filename = os.path.join(str(tmpdir), "test.conf")
    store_textfile(filename, content)
    return filename


def test_defaults_validate():
    p = validate_params()
    assert p == default_params()
    assert p["network"]["channels"] == (8, 16, 32)
    assert p["rpn"]["anchor_scales"] == (6, 10, 16)
    assert p["solver"]["lr_step_iters"] == 1500
    assert p["solver"]["lr"] == 1e-2


def test_config_file_overrides(tmpdir):
    filename = write_config(tmpdir, "# comment\nheight = 32\nwidth=48\n"
                            "channels = 4, 8, 8\ndetection_enabled = false\nlr = 0.05\n")
    p = validate_params(filename=filename)
    assert p["network"]["height"] == 32
    assert p["network"]["width"] == 48
    assert p["network"]["channels"] == (4, 8, 8)
    assert p["network"]["detection_enabled"] is False
    assert p["solver"]["lr"] == 0.05
    assert p["solver"]["momentum"] == 0.9


def test_runtime_params_win_over_config(tmpdir):
    filename = write_config(tmpdir, "seed = 3\niterations = 7\n")
    p = validate_params({"solver": {"seed": 5}}, filename=filename)
    assert p["solver"]["seed"] == 5
    assert p["solver"]["iterations"] == 7


def test_unknown_key_is_an_error(tmpdir):
    filename = write_config(tmpdir, "learning_rate = 0.1\n")
    with pytest.raises(RuntimeError):
        read_config_file(filename)
    with pytest.raises(RuntimeError):
        validate_params({"solver": {"learning_rate": 0.1}})
    with pytest.raises(RuntimeError):
        validate_params({"optimizer": {}})


def test_missing_config_file(tmpdir):
    with pytest.raises(RuntimeError):
        validate_params(filename=os.path.join(str(tmpdir), "nope.conf"))


def test_bad_values(tmpdir):
    with pytest.raises(RuntimeError):
        validate_params(filename=write_config(tmpdir, "height = tall\n"))
    with pytest.raises(RuntimeError):
        validate_params(filename=write_config(tmpdir, "detection_enabled = maybe\n"))
    with pytest.raises(RuntimeError):
        validate_params(filename=write_config(tmpdir, "anchor_scales = 6,x\n"))


@pytest.mark.parametrize("overrides", [
    {"network": {"height": 30}},
    {"network": {"channels": (8, 16)}},
    {"network": {"roi_conv_layers": 0}},
    {"network": {"dtype": "float16"}},
    {"solver": {"lr": 0.0}},
    {"solver": {"momentum": 1.0}},
    {"solver": {"lr_step_iters": 0}},
    {"rpn": {"iou_lo": 0.7, "iou_hi": 0.7}},
    {"rpn": {"anchor_scales": ()}},
])
def test_invalid_configurations(overrides):
    with pytest.raises(RuntimeError):
        validate_params(overrides)


def test_type_conversion():
    assert as_bool("true") is True
    assert as_bool("0") is False
    assert as_int_tuple("6, 10,16") == (6, 10, 16)
    assert as_int_tuple([1, 2]) == (1, 2)
    with pytest.raises(RuntimeError):
        as_int_tuple(3)


def test_format_params_reads_back(tmpdir):
    p = params_with(validate_params(), height=32, lr=0.0125, detection_enabled=False,
                    anchor_scales=(4, 8))
    content = format_params(p)
    assert content.startswith("# signature = ")
    assert "anchor_scales = 4,8\n" in content
    assert validate_params(filename=write_config(tmpdir, content)) == p


def test_params_with_copies():
    p = validate_params()
    q = params_with(p, seed=9)
    assert q["solver"]["seed"] == 9
    assert p["solver"]["seed"] == 0
    with pytest.raises(RuntimeError):
        params_with(p, nonsense=1)
