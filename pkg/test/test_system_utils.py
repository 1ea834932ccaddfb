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

from __future__ import unicode_literals
from __future__ import print_function

import os
from roifcn.system import make_dirs, try_delete_file, read_textfile, read_binaryfile
from roifcn.system import store_textfile, store_binaryfile


def test_make_dirs_twice(tmpdir):
    path = os.path.join(str(tmpdir), "a", "b")
    make_dirs(path)
    make_dirs(path)
    assert os.path.isdir(path)


def test_store_and_read(tmpdir):
    filename = os.path.join(str(tmpdir), "note.txt")
    assert read_textfile(filename) is None
    assert store_textfile(filename, "dummy æ") == filename
    assert read_textfile(filename) == "dummy æ"
    store_textfile(filename, "again")
    assert read_textfile(filename) == "again"
    # No temporary files left behind
    assert os.listdir(str(tmpdir)) == ["note.txt"]


def test_store_binary(tmpdir):
    filename = os.path.join(str(tmpdir), "blob.bin")
    assert read_binaryfile(filename) is None
    store_binaryfile(filename, b"\x00\x01\xff")
    assert read_binaryfile(filename) == b"\x00\x01\xff"
    store_binaryfile(filename, bytearray(b"\x02"))
    assert read_binaryfile(filename) == b"\x02"


def test_try_delete_file(tmpdir):
    filename = os.path.join(str(tmpdir), "gone.txt")
    try_delete_file(filename)
    store_textfile(filename, "x")
    try_delete_file(filename)
    assert not os.path.exists(filename)
