"""Python face of the mdml toolchain.

Everything heavy lives in the native module; this package just re-exports
it so `import mdml` works both from an installed wheel and from a build
tree on PYTHONPATH.
"""

from ._core import (
    carray,
    check_model,
    deployability,
    estimate,
    fnv1a64,
    format_model,
    generate,
    link_model,
    list_targets,
    model_info,
    predict_file,
    quantize_file,
    simulate,
    synth_dataset,
    train,
)

__all__ = [
    "carray",
    "check_model",
    "deployability",
    "estimate",
    "fnv1a64",
    "format_model",
    "generate",
    "link_model",
    "list_targets",
    "model_info",
    "predict_file",
    "quantize_file",
    "simulate",
    "synth_dataset",
    "train",
]

__version__ = "0.1.0"
