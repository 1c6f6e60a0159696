"""Pose lifting with higher-order implicit fairing graph networks.

Thin wrappers over the C++ core. Arrays are float64 numpy arrays; configs are
plain dicts with the same keys as the JSON configs of the command line tool.
"""

import json

from ._hoifnet import (
    CheckpointError,
    ConvergenceError,
    DimensionError,
    Model,
    default_skeleton_json,
    load_model,
    mpjpe,
    operators,
    pa_mpjpe,
    pck_auc,
    random_graph_json,
    run_cli,
    s_from_alpha,
    synth,
)
from . import _hoifnet

__all__ = [
    "CheckpointError",
    "ConvergenceError",
    "DimensionError",
    "Model",
    "default_skeleton_json",
    "fair",
    "load_model",
    "mpjpe",
    "operators",
    "pa_mpjpe",
    "pck_auc",
    "random_graph_json",
    "run_cli",
    "s_from_alpha",
    "synth",
    "train",
]


def fair(signal, s=None, alpha=None, method="direct", skeleton_json="", tol=1e-10, max_iter=10000):
    """Implicit fairing (I + sL)^-1 X; give exactly one of s and alpha."""
    if (s is None) == (alpha is None):
        raise ValueError("give exactly one of s and alpha")
    if s is None:
        s = s_from_alpha(alpha)
    return _hoifnet.fair(signal, s, method, skeleton_json, tol, max_iter)


def train(joints2d, joints3d, model=None, train=None, skeleton_json=""):
    """Train on (B, N, 2) inputs and (B, N, 3) camera-frame targets in mm.

    Returns a dict with history, initial_mpjpe, best_epoch and the final Model.
    """
    return _hoifnet.train(
        joints2d,
        joints3d,
        json.dumps(model) if model else "",
        json.dumps(train) if train else "",
        skeleton_json,
    )
