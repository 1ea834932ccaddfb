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

"""This is roifcn -- detection-guided segmentation of small structures
with convolutions restricted to regions of interest."""

try:
    from importlib.metadata import version, PackageNotFoundError
except ImportError:
    version = None

__author__ = "The ROIFCN developers"

__version__ = "2026.1.0.dev0"
if version is not None:
    try:
        __version__ = version("roifcn")
    except PackageNotFoundError:
        pass

__all__ = ["validate_params", "init_state", "forward", "train_step",
           "save_checkpoint", "load_checkpoint", "set_log_level"]

from roifcn.params import validate_params
from roifcn.model import init_state, forward, train_step
from roifcn.checkpoint import save_checkpoint, load_checkpoint
from roifcn.log import set_log_level

# Import main function, entry point to script
from roifcn.__main__ import main
