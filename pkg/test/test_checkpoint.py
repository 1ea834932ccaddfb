#!/usr/bin/env py.test
# -*- coding: utf-8 -*-

from __future__ import print_function
import io
import os
import struct
import pytest
import numpy

import roifcn.gradcheck
from roifcn.params import params_with
from roifcn.model import init_state, forward, train_step
from roifcn.checkpoint import save_checkpoint, load_checkpoint, checkpoint_bytes
from roifcn.checkpoint import state_from_bytes, check_compatible, MAGIC


@pytest.fixture()
def trained(small_params):
    sample = roifcn.gradcheck.tiny_sample(2, 32, 32)
    state = init_state(small_params)
    for _ in range(2):
        state, _ = train_step(sample, state, small_params)
    return state, sample


def test_roundtrip_restores_state(tmpdir, small_params, trained):
    state, sample = trained
    filename = os.path.join(str(tmpdir), "model.ckpt")
    save_checkpoint(state, filename)
    loaded = load_checkpoint(filename)
    assert loaded.iteration == 2
    assert list(loaded.params) == list(state.params)
    for k in state.params:
        assert loaded.params[k].dtype == state.params[k].dtype
        assert numpy.array_equal(loaded.params[k], state.params[k])
        assert numpy.array_equal(loaded.momentum[k], state.momentum[k])
    assert loaded.rng.bit_generator.state == state.rng.bit_generator.state
    assert numpy.array_equal(loaded.rng.random(5), state.copy().rng.random(5))

    a = forward(sample.image, state, small_params)
    b = forward(sample.image, loaded, small_params)
    assert numpy.array_equal(a.seg_scores, b.seg_scores)
    assert numpy.array_equal(a.objectness, b.objectness)


def test_training_resumes_identically(small_params, trained):
    state, sample = trained
    resumed = state_from_bytes(checkpoint_bytes(state))
    state, _ = train_step(sample, state, small_params)
    resumed, _ = train_step(sample, resumed, small_params)
    for k in state.params:
        assert numpy.array_equal(state.params[k], resumed.params[k])


def test_float32_roundtrip(small_params):
    params = params_with(small_params, dtype="float32")
    state = init_state(params)
    loaded = state_from_bytes(checkpoint_bytes(state))
    for k in state.params:
        assert loaded.params[k].dtype == numpy.float32
        assert numpy.array_equal(loaded.params[k], state.params[k])


def test_layout(small_params):
    state = init_state(small_params)
    data = checkpoint_bytes(state)
    assert data[:4] == MAGIC
    version, count = struct.unpack("<II", data[4:12])
    assert version == 1
    assert count == 2 * len(state.params)
    name_length, = struct.unpack("<H", data[12:14])
    assert data[14:14 + name_length] == b"param/conv1.weight"
    iteration, = struct.unpack("<Q", data[-40:-32])
    assert iteration == 0


def test_rejects_bad_magic(small_params):
    data = bytearray(checkpoint_bytes(init_state(small_params)))
    data[0:4] = b"XXXX"
    with pytest.raises(RuntimeError) as e:
        state_from_bytes(bytes(data))
    assert "offset 0" in str(e.value)


def test_rejects_unsupported_version(small_params):
    data = bytearray(checkpoint_bytes(init_state(small_params)))
    data[4:8] = struct.pack("<I", 2)
    with pytest.raises(RuntimeError) as e:
        state_from_bytes(bytes(data))
    assert "Unsupported checkpoint version" in str(e.value)


def test_rejects_truncation(small_params):
    data = checkpoint_bytes(init_state(small_params))
    for cut in (6, 100, len(data) - 1):
        with pytest.raises(RuntimeError) as e:
            state_from_bytes(data[:cut])
        assert "offset" in str(e.value)


def test_missing_file(tmpdir):
    with pytest.raises(RuntimeError):
        load_checkpoint(os.path.join(str(tmpdir), "missing.ckpt"))


def test_written_file_matches_bytes(tmpdir, small_params):
    state = init_state(small_params)
    filename = os.path.join(str(tmpdir), "init.ckpt")
    save_checkpoint(state, filename)
    with io.open(filename, "rb") as f:
        assert f.read() == checkpoint_bytes(state)


def test_check_compatible(small_params):
    state = init_state(small_params)
    check_compatible(state, init_state(small_params))
    with pytest.raises(RuntimeError):
        check_compatible(state, init_state(params_with(small_params, roi_conv_layers=2)))
    with pytest.raises(RuntimeError):
        check_compatible(state, init_state(params_with(small_params, channels=(3, 4, 8))))
