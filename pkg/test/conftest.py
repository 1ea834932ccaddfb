#!/usr/bin/env py.test
# -*- coding: utf-8 -*-

from __future__ import print_function
import pytest
import numpy
from numpy.random import Generator, PCG64

import roifcn.gradcheck
from roifcn.params import validate_params


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False,
                     help="run the slow end-to-end training experiments")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="need --runslow option to run")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture()
def rng():
    return Generator(PCG64(20261017))


@pytest.fixture()
def tiny_params():
    return roifcn.gradcheck.tiny_params(0)


@pytest.fixture()
def tiny_sample():
    return roifcn.gradcheck.tiny_sample(0)


@pytest.fixture()
def small_params():
    "A 32 x 32 float64 network small enough for a few training steps per test."
    return validate_params(dict(
        network=dict(height=32, width=32, channels=(3, 4, 6), upscore_channels=4,
                     dtype="float64"),
        rpn=dict(anchor_scales=(6, 10), rpn_channels=6, max_samples=16),
        solver=dict(iterations=4, log_every=0),
    ))


def numeric_gradient(f, x, h=1e-6):
    "Central finite differences of the scalar function f() with respect to x, in place."
    g = numpy.zeros_like(x)
    for index in numpy.ndindex(x.shape):
        orig = x[index]
        x[index] = orig + h
        fp = f()
        x[index] = orig - h
        fm = f()
        x[index] = orig
        g[index] = (fp - fm) / (2 * h)
    return g


def max_rel_error(a, b, floor=1e-8):
    a = numpy.asarray(a, dtype=numpy.float64)
    b = numpy.asarray(b, dtype=numpy.float64)
    denom = numpy.maximum(numpy.maximum(numpy.abs(a), numpy.abs(b)), floor)
    return float((numpy.abs(a - b) / denom).max())
