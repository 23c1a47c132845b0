"""Text-prompted segmentation by score distillation through alpha compositing.

Thin wrapper over the C++ core. Images are float arrays of shape (H, W, 3)
in [0, 1]; masks are (H, W) or (k, H, W).
"""

import json

from . import _core
from ._core import (
    ConfigError,
    ManifestError,
    ModelLoadError,
    OptimizationAborted,
    UnknownCaption,
    binarize,
    composite,
    cross_bilateral,
    gravity_loss,
    intersection_loss,
    iou,
    precision_at,
)

__all__ = [
    "ConfigError",
    "ManifestError",
    "ModelLoadError",
    "OptimizationAborted",
    "UnknownCaption",
    "binarize",
    "composite",
    "cross_bilateral",
    "default_config",
    "gravity_loss",
    "intersection_loss",
    "iou",
    "make_oracle_scene",
    "precision_at",
    "segment",
    "whole_image_baseline",
]


def default_config(backend="oracle", kind="segment"):
    """Preset for a backend as a flat dict with dotted keys."""
    return json.loads(_core.default_config(backend, kind))


def segment(image, prompts, oracle_targets=None, config=None, **overrides):
    """Optimize one mask per prompt.

    `config` is a flat dict like the CLI's config.json; keyword overrides use
    underscores for the dots of nested keys only where unambiguous, so pass
    nested keys through `config` (e.g. {"bilateral.iterations": 0}).

    Returns (masks, trace): masks is (k, H, W), trace a list of per-iteration
    dicts.
    """
    if isinstance(prompts, str):
        prompts = [prompts]
    merged = dict(config or {})
    merged.update(overrides)
    masks, trace = _core.segment(image, list(prompts), list(oracle_targets or []), json.dumps(merged))
    return masks, [json.loads(line) for line in trace.splitlines() if line]


def make_oracle_scene(size=64, seed=0, caption="a bright object"):
    """Synthetic scene with a known mask; returns a dict of arrays."""
    image, target, mask, caption = _core.make_oracle_scene(size, seed, caption)
    return {"image": image, "target": target, "mask": mask, "caption": caption}


def whole_image_baseline(manifest):
    """Report dict of the predict-everything baseline over a manifest."""
    return json.loads(_core.whole_image_baseline(str(manifest)))
