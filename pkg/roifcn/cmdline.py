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

"""This file contains the commands available through the command-line tool roifcn.

Each function cmd_<cmdname> becomes a subcommand invoked by::

    roifcn cmd-name ...args

with underscores in cmdname turned into dashes. The docstrings in the
cmd_<cmdname> are shown when running::

    roifcn --help

The 'args' argument to cmd_* is a Namespace object with the
commandline arguments, 'params' the validated parameters.
"""

from __future__ import print_function

import os

from roifcn import __version__
from roifcn.log import error, info, warning
from roifcn.params import validate_params, format_params, format_value, name_categories
from roifcn.system import make_dirs, store_textfile
from roifcn.data import generate_dataset, read_manifest, load_samples, write_pgm
from roifcn.model import init_state, train, predict
from roifcn.checkpoint import save_checkpoint, load_checkpoint, check_compatible
from roifcn.metrics import evaluate, write_report
from roifcn.gradcheck import gradcheck_all, passed, TOLERANCE
from roifcn.bench import run_bench, write_bench

LOSS_LOG_HEADER = "iter,l_reg,l_cls,l_seg,total,lr"

GEN_DATA_CONF = "gen-data.conf"


def parse_size(size):
    "Parse 'HxW' into (H, W)."
    try:
        h, w = (int(v) for v in size.lower().split("x"))
    except ValueError:
        error("Expecting a size like 64x64, got '%s'." % (size,))
    return h, w


def parse_list(value, parse=int):
    return [parse(v) for v in value.split(",") if v.strip()]


def manifest_path(data_dir, split):
    return os.path.join(data_dir, split + ".txt")


def model_params(ckpt):
    "Parameters a checkpoint was trained with, read from <ckpt>.conf."
    conf = ckpt + ".conf"
    if os.path.exists(conf):
        return validate_params(filename=conf)
    warning("No config '%s' next to the checkpoint, using defaults." % (conf,))
    return validate_params()


def load_model(ckpt):
    params = model_params(ckpt)
    state = load_checkpoint(ckpt)
    check_compatible(state, init_state(params))
    return state, params


def load_split(data_dir, split, params):
    manifest = read_manifest(manifest_path(data_dir, split))
    return load_samples(manifest, params["network"]["height"], params["network"]["width"])


def args_version(parser):
    pass


def cmd_version(args, params):
    "print roifcn version"
    print(__version__)
    return 0


def args_config(parser):
    parser.add_argument("--config", default=None, help="config file to resolve")
    parser.add_argument("--key", default="", help="specific parameter to show (e.g. lr)")


def cmd_config(args, params):
    "show resolved configuration"
    if args.key:
        categories = name_categories(params)
        if args.key not in categories:
            error("Invalid parameter name '%s'." % (args.key,))
        print("%s = %s" % (args.key, format_value(params[categories[args.key]][args.key])))
        return 0
    print(format_params(params), end="")
    return 0


def args_gen_data(parser):
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--train", type=int, default=200, help="number of training samples")
    parser.add_argument("--test", type=int, default=50, help="number of test samples")
    parser.add_argument("--size", default="64x64", help="slice extents HxW")
    parser.add_argument("--seed", type=int, default=None, help="base random seed")
    parser.add_argument("--config", default=None, help="config file with data parameters")


def cmd_gen_data(args, params):
    "generate a synthetic dataset of PGM slices and manifests"
    if args.train < 0 or args.test < 0:
        error("Sample counts must be nonnegative.")
    height, width = parse_size(args.size)
    make_dirs(args.out)
    generate_dataset(args.out, args.train, args.test, height, width,
                     params["solver"]["seed"], params["data"])
    # The seed is part of params, the remaining flags are recorded as a comment
    header = "# gen-data --train %d --test %d --size %dx%d\n" % (args.train, args.test,
                                                               height, width)
    store_textfile(os.path.join(args.out, GEN_DATA_CONF), header + format_params(params))
    return 0


def args_train(parser):
    parser.add_argument("--data", required=True, help="dataset directory")
    parser.add_argument("--config", default=None, help="config file")
    parser.add_argument("--out", required=True, help="checkpoint file to write")
    parser.add_argument("--no-detection", action="store_true",
                        help="train without the detection head and ROI masking")
    parser.add_argument("--seed", type=int, default=None, help="random seed")
    parser.add_argument("--iterations", type=int, default=None,
                        help="number of training iterations")


def _log_value(v):
    return "" if v is None else "%.9g" % float(v)


def cmd_train(args, params):
    "train a network and write a checkpoint, its config and a loss log"
    samples = [s for _, s in load_split(args.data, "train", params)]
    state = init_state(params)
    lines = [LOSS_LOG_HEADER]

    def record(iteration, report, lr):
        lines.append("%d,%s,%s,%s,%s,%s" % (iteration, _log_value(report.l_reg),
                                             _log_value(report.l_cls),
                                             _log_value(report.l_seg),
                                             _log_value(report.total), _log_value(lr)))

    state = train(samples, state, params, callback=record)
    out_dir = os.path.dirname(os.path.abspath(args.out))
    make_dirs(out_dir)
    save_checkpoint(state, args.out)
    store_textfile(args.out + ".conf", format_params(params))
    store_textfile(args.out + ".log.csv", "\n".join(lines) + "\n")
    info("Wrote loss log '%s'." % (args.out + ".log.csv",))
    return 0


def args_eval(parser):
    parser.add_argument("--data", required=True, help="dataset directory")
    parser.add_argument("--model", required=True, help="checkpoint file")
    parser.add_argument("--report", required=True, help="per-slice metrics CSV to write")
    parser.add_argument("--curve", required=True, help="sorted dice curve CSV to write")


def cmd_eval(args, params):
    "evaluate a checkpoint on the test slices"
    state, params = load_model(args.model)
    samples = load_split(args.data, "test", params)
    write_report(args.report, args.curve, evaluate(samples, state, params))
    return 0


def args_predict(parser):
    parser.add_argument("--data", required=True, help="dataset directory")
    parser.add_argument("--model", required=True, help="checkpoint file")
    parser.add_argument("--out", required=True, help="directory for predicted masks")


def cmd_predict(args, params):
    "write predicted masks of the test slices as PGM files"
    state, params = load_model(args.model)
    make_dirs(args.out)
    for slice_id, sample in load_split(args.data, "test", params):
        mask, _ = predict(sample.image, state, params)
        write_pgm(os.path.join(args.out, slice_id + "-pred.pgm"), mask)
    return 0


def args_gradcheck(parser):
    parser.add_argument("--seed", type=int, default=0, help="random seed")


def cmd_gradcheck(args, params):
    "compare analytic gradients with finite differences in 64-bit precision"
    errors = gradcheck_all(args.seed)
    for name, err in errors.items():
        print("%-16s max_rel_err=%.3e  %s" % (name, err, "ok" if err < TOLERANCE else "FAIL"))
    return 0 if passed(errors) else 1


def args_bench(parser):
    parser.add_argument("--sizes", default="16x16,32x32,64x64",
                        help="comma separated feature grid extents HxW")
    parser.add_argument("--rois", default="0,1,4,8", help="comma separated ROI counts")
    parser.add_argument("--reps", type=int, default=10, help="timed repetitions")
    parser.add_argument("--out", required=True, help="timing CSV to write")
    parser.add_argument("--seed", type=int, default=0, help="random seed")


def cmd_bench(args, params):
    "time image-wise against region-wise ROI convolution"
    if args.reps < 1:
        error("Need at least one repetition.")
    sizes = parse_list(args.sizes, parse_size)
    rows = run_bench(sizes, parse_list(args.rois), reps=args.reps, seed=args.seed)
    write_bench(args.out, rows)
    return 0
