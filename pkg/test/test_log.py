#!/usr/bin/env py.test
# -*- coding: utf-8 -*-

from __future__ import print_function
import logging
import pytest

from roifcn.log import get_logger, get_log_handler, set_log_handler, set_log_level
from roifcn.log import error, numerical_error, roifcn_assert, NumericalError


def test_error_raises_with_formatted_message():
    with pytest.raises(RuntimeError) as e:
        error("Bad shape %s.", (2, 3))
    assert str(e.value) == "Bad shape (2, 3)."
    with pytest.raises(NumericalError):
        numerical_error("Non-finite values in %s.", "loss")
    roifcn_assert(True, "never shown")
    with pytest.raises(AssertionError):
        roifcn_assert(False, "Duplicate %s.", "name")


def test_numerical_error_is_a_runtime_error():
    assert issubclass(NumericalError, RuntimeError)


def test_levels_and_handlers():
    old = get_log_handler()
    handler = logging.NullHandler()
    try:
        set_log_handler(handler)
        assert get_log_handler() is handler
        set_log_level("debug")
        assert get_logger().level == logging.DEBUG
        set_log_level(logging.WARNING)
        assert get_logger().level == logging.WARNING
    finally:
        set_log_handler(old)
        set_log_level("INFO")
