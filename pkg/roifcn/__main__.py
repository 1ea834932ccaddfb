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

"""This is the commandline interface to roifcn. For usage help, run 'roifcn --help'."""

from __future__ import print_function

import sys
import argparse

from roifcn.log import NumericalError, set_log_level, get_logger
from roifcn.params import validate_params
import roifcn.cmdline as cmd_namespace

EXIT_INPUT = 1
EXIT_NUMERICAL = 2


class ArgumentParser(argparse.ArgumentParser):
    "Argument parser reporting usage errors with the input error exit code."

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, "%s: error: %s\n" % (self.prog, message))


def build_commands(cmd_namespace):
    """Collects functions called cmd_<basename> from given namespace.

    Returns dict {basename: function}, with dashes for underscores in basename.
    """
    commands = {}
    cmd_args = {}
    for name in list(cmd_namespace.keys()):
        if name.startswith("cmd_"):
            basename = name[len("cmd_"):]
            cmd_name = basename.replace("_", "-")
            commands[cmd_name] = cmd_namespace[name]
            args_name = "args_" + basename
            if args_name in cmd_namespace:
                cmd_args[cmd_name] = cmd_namespace.get(args_name)
    return commands, cmd_args


def add_top_arguments(parser):
    "Add arguments to top level parser."
    parser.add_argument("--verbose", "-v", action="store_true", default=False,
                        help="show debug messages")


def extract_params_from_args(args):
    "Runtime parameter overrides given as command line flags."
    p = {"network": {}, "solver": {}}
    if getattr(args, "no_detection", False):
        p["network"]["detection_enabled"] = False
    if getattr(args, "seed", None) is not None:
        p["solver"]["seed"] = args.seed
    if getattr(args, "iterations", None) is not None:
        p["solver"]["iterations"] = args.iterations
    return p


def build_parsers(commands, args):
    """Builds a top parser with subparsers for each command."""
    top_parser = ArgumentParser(prog="roifcn")
    add_top_arguments(top_parser)

    subparsers = top_parser.add_subparsers(help="command description", dest="cmd_name")
    subparsers.required = True
    cmd_parsers = {}
    for cmd_name in sorted(commands):
        cmd = commands[cmd_name]
        parser = subparsers.add_parser(cmd_name, help=cmd.__doc__)
        if cmd_name in args:
            args[cmd_name](parser)
        cmd_parsers[cmd_name] = parser

    return top_parser, subparsers, cmd_parsers


def main(args=None):
    """This is the commandline tool for the python module roifcn."""

    if args is None:
        args = sys.argv[1:]

    # Build subparsers for each command
    commands, cmd_args = build_commands(vars(cmd_namespace))
    top_parser, subparsers, cmd_parsers = build_parsers(commands, cmd_args)

    # Populate args namespace
    args_ns = argparse.Namespace()
    top_parser.parse_args(args, namespace=args_ns)
    if args_ns.verbose:
        set_log_level("DEBUG")

    # Run the chosen command (argparse doesn't allow
    # getting to this point with an invalid cmd_name)
    assert args_ns.cmd_name in commands
    cmd = commands[args_ns.cmd_name]
    try:
        params = validate_params(extract_params_from_args(args_ns),
                                 filename=getattr(args_ns, "config", None))
        return cmd(args_ns, params)
    except NumericalError:
        return EXIT_NUMERICAL
    except RuntimeError:
        return EXIT_INPUT
    except (ValueError, IOError, OSError) as e:
        get_logger().error("%s" % (e,))
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
