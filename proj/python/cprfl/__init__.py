# Copyright 2026 The cprfl Authors
# SPDX-License-Identifier: Apache-2.0
"""Category-prompt refined feature learning for long-tailed multi-label classification."""

import json as _json
import os as _os

try:
    from . import _cprfl
except ImportError:  # in-tree build: the extension sits on the path, outside the package
    import _cprfl

Error = _cprfl.Error
DimensionError = _cprfl.DimensionError
ArgumentError = _cprfl.ArgumentError
NonFiniteError = _cprfl.NonFiniteError
FormatError = _cprfl.FormatError

average_precision = _cprfl.average_precision
split_groups = _cprfl.split_groups
loss = _cprfl.loss

__all__ = [
    "ArgumentError",
    "DimensionError",
    "Error",
    "FormatError",
    "NonFiniteError",
    "average_precision",
    "evaluate",
    "generate",
    "gradcheck",
    "loss",
    "split_groups",
    "train",
]


def generate(out_prefix, **generator):
    """Writes <prefix>.train.cprf, <prefix>.test.cprf and <prefix>.emb.cpre.

    Keyword arguments override generator settings (c, v, d0, n_max,
    pareto_exponent, rank_offset, co_occurrence_strength, noise_sigma,
    test_per_class, seed). Returns class counts and groups.
    """
    return _json.loads(_cprfl._generate(_os.fspath(out_prefix), _json.dumps(generator)))


def train(config, data_prefix, out_dir):
    """Trains from a config dict and returns the per-epoch history."""
    return _json.loads(_cprfl._train(_json.dumps(config), _os.fspath(data_prefix), _os.fspath(out_dir)))


def evaluate(checkpoint, data_prefix):
    """Evaluates a checkpoint on <prefix>.test.cprf and returns the mAP report."""
    return _json.loads(_cprfl._evaluate(_os.fspath(checkpoint), _os.fspath(data_prefix)))


def gradcheck(config, eps=1e-5, tolerance=1e-4):
    """Finite-difference check of every learnable tensor for a tiny config."""
    return _json.loads(_cprfl._gradcheck(_json.dumps(config), eps, tolerance))
