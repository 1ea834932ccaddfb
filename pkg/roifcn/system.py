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

"""Utilities for interfacing with the file system."""

import io
import os
import errno
import uuid

from roifcn.log import warning


def make_dirs(path):
    """Creates a directory (tree).

    Ignores error if the directory already exists.
    """
    try:
        os.makedirs(path)
    except os.error as e:
        if e.errno != errno.EEXIST:
            raise


def try_delete_file(filename):
    """Try to remove a file.

    Ignores error if filename doesn't exist.
    """
    try:
        os.remove(filename)
    except os.error as e:
        if e.errno != errno.ENOENT:
            raise


def read_textfile(filename):
    "Read file content, return None if not found."
    if not os.path.exists(filename):
        return None
    with io.open(filename, "r", encoding="utf-8") as f:
        return f.read()


def read_binaryfile(filename):
    "Read raw file content, return None if not found."
    if not os.path.exists(filename):
        return None
    with io.open(filename, "rb") as f:
        return f.read()


def _store(filename, content, mode, **kwargs):
    # Generate a unique temporary filename in same directory as the target file
    tmp_filename = "%s.%s" % (filename, uuid.uuid4().hex)
    try:
        with io.open(tmp_filename, mode, **kwargs) as f:
            f.write(content)
        # Atomic on posix, readers never see a partial file
        os.replace(tmp_filename, filename)
    except BaseException:
        try_delete_file(tmp_filename)
        raise
    return filename


def store_textfile(filename, content):
    """Store content to filename without exposing partial files.

    Works by first writing to a unique temp file and then
    moving to final destination. Handles both bytes and unicode.
    """
    if isinstance(content, bytes):
        return _store(filename, content, "wb")
    return _store(filename, content, "w", encoding="utf-8")


def store_binaryfile(filename, content):
    "Store bytes to filename without exposing partial files."
    if os.path.exists(filename):
        warning("Overwriting existing file '%s'." % (filename,))
    return _store(filename, bytes(content), "wb")
