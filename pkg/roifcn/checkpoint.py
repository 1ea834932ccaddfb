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

"""Binary checkpoint of a TrainState.

Layout, all integers little-endian::

    magic      4 bytes, "RFCN"
    version    u32
    count      u32, number of tensors
    count times:
        name length u16, name (utf-8)
        rank u8, extents u32 each
        dtype u8 (0 float32, 1 float64), raw little-endian values
    iteration  u64
    rng state  32 bytes, PCG64 state and increment as 128-bit integers

Parameters are stored as "param/<name>" followed by the momentum
buffers as "momentum/<name>", both in layer order.
"""

from collections import OrderedDict
import struct

import numpy
from numpy.random import Generator, PCG64

from roifcn.log import error, info
from roifcn.system import store_binaryfile, read_binaryfile
from roifcn.model import TrainState

MAGIC = b"RFCN"
VERSION = 1

_DTYPE_CODES = {numpy.dtype(numpy.float32): 0, numpy.dtype(numpy.float64): 1}
_CODE_DTYPES = {0: numpy.dtype("<f4"), 1: numpy.dtype("<f8")}

_PARAM_PREFIX = "param/"
_MOMENTUM_PREFIX = "momentum/"


def rng_state_bytes(rng):
    state = rng.bit_generator.state
    if state["bit_generator"] != "PCG64":
        error("Only PCG64 generators can be checkpointed, got %s." % state["bit_generator"])
    if state["has_uint32"]:
        error("Generator holds a buffered 32-bit draw and cannot be checkpointed.")
    s = state["state"]
    return s["state"].to_bytes(16, "little") + s["inc"].to_bytes(16, "little")


def rng_from_bytes(blob):
    rng = Generator(PCG64())
    rng.bit_generator.state = {
        "bit_generator": "PCG64",
        "state": {"state": int.from_bytes(blob[:16], "little"),
                  "inc": int.from_bytes(blob[16:32], "little")},
        "has_uint32": 0,
        "uinteger": 0,
    }
    return rng


def _encode_tensor(name, array):
    dtype = numpy.dtype(array.dtype)
    if dtype not in _DTYPE_CODES:
        error("Cannot checkpoint tensor '%s' of dtype %s." % (name, dtype))
    name = name.encode("utf-8")
    parts = [struct.pack("<H", len(name)), name,
             struct.pack("<B", array.ndim),
             struct.pack("<%dI" % array.ndim, *array.shape),
             struct.pack("<B", _DTYPE_CODES[dtype]),
             numpy.ascontiguousarray(array, dtype=_CODE_DTYPES[_DTYPE_CODES[dtype]]).tobytes()]
    return b"".join(parts)


def checkpoint_bytes(state):
    tensors = ([(_PARAM_PREFIX + k, v) for k, v in state.params.items()] +
               [(_MOMENTUM_PREFIX + k, v) for k, v in state.momentum.items()])
    parts = [MAGIC, struct.pack("<II", VERSION, len(tensors))]
    parts.extend(_encode_tensor(name, array) for name, array in tensors)
    parts.append(struct.pack("<Q", state.iteration))
    parts.append(rng_state_bytes(state.rng))
    return b"".join(parts)


class _Reader(object):
    "Bounds-checked sequential reads from a checkpoint buffer."

    def __init__(self, data, filename):
        self.data = data
        self.filename = filename
        self.offset = 0

    def take(self, n):
        if self.offset + n > len(self.data):
            error("Truncated checkpoint '%s': need %d bytes at offset %d, file has %d."
                  % (self.filename, n, self.offset, len(self.data)))
        chunk = self.data[self.offset:self.offset + n]
        self.offset += n
        return chunk

    def unpack(self, fmt):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def state_from_bytes(data, filename="<bytes>"):
    r = _Reader(data, filename)
    magic = r.take(4)
    if magic != MAGIC:
        error("'%s' is not a checkpoint file: bad magic %r at offset 0." % (filename, magic))
    version, count = r.unpack("<II")
    if version != VERSION:
        error("Unsupported checkpoint version %d in '%s'." % (version, filename))
    weights = OrderedDict()
    momentum = OrderedDict()
    for _ in range(count):
        name_length, = r.unpack("<H")
        name = r.take(name_length).decode("utf-8")
        rank, = r.unpack("<B")
        shape = r.unpack("<%dI" % rank)
        code, = r.unpack("<B")
        if code not in _CODE_DTYPES:
            error("Unknown dtype code %d for tensor '%s' in '%s'." % (code, name, filename))
        dtype = _CODE_DTYPES[code]
        size = int(numpy.prod(shape, dtype=numpy.int64))
        array = numpy.frombuffer(r.take(size * dtype.itemsize), dtype=dtype)
        array = array.reshape(shape).astype(dtype.newbyteorder("="))
        if name.startswith(_PARAM_PREFIX):
            weights[name[len(_PARAM_PREFIX):]] = array
        elif name.startswith(_MOMENTUM_PREFIX):
            momentum[name[len(_MOMENTUM_PREFIX):]] = array
        else:
            error("Unexpected tensor '%s' in checkpoint '%s'." % (name, filename))
    iteration, = r.unpack("<Q")
    rng = rng_from_bytes(r.take(32))
    if r.offset != len(data):
        error("Trailing bytes after checkpoint data in '%s'." % (filename,))
    if list(weights) != list(momentum):
        error("Parameter and momentum tensors differ in checkpoint '%s'." % (filename,))
    return TrainState(weights, momentum, iteration, rng)


def save_checkpoint(state, filename):
    store_binaryfile(filename, checkpoint_bytes(state))
    info("Stored checkpoint of iteration %d in '%s'." % (state.iteration, filename))
    return filename


def load_checkpoint(filename):
    data = read_binaryfile(filename)
    if data is None:
        error("Checkpoint file '%s' not found." % (filename,))
    return state_from_bytes(data, filename)


def check_compatible(state, expected):
    "Check that a loaded state has the tensor names and shapes of a freshly initialized one."
    if list(state.params) != list(expected.params):
        error("Checkpoint layers %s do not match the configured network %s."
              % (list(state.params), list(expected.params)))
    for name, value in expected.params.items():
        if state.params[name].shape != value.shape:
            error("Checkpoint tensor '%s' has shape %s, expecting %s."
                  % (name, state.params[name].shape, value.shape))
