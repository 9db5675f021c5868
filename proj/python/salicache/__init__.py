"""Python bindings for the salicache KV-cache pipeline."""

import json

from ._core import (
    ConfigError,
    InvariantError,
    IoError,
    QuantBlockInt4,
    QuantBlockInt8,
    attend,
    canny_edges,
    compute_saliency,
    frame_redundancy,
    from_half_bits,
    h2o_step,
    patch_deltas,
    patch_tiers,
    quantize_int4,
    quantize_int8,
    run_report,
    sliding_window_step,
    srgb_to_lab,
    synth_sequence,
    to_half_bits,
)


def run(**options):
    """Run the method comparison and return the report as a dict.

    Options mirror the CLI flags with underscores, e.g. synthetic="composite",
    frames_count=100, methods="baseline,salicache", tau_t=0.02.
    """
    return json.loads(run_report("json", **options))


__all__ = [
    "ConfigError",
    "InvariantError",
    "IoError",
    "QuantBlockInt4",
    "QuantBlockInt8",
    "attend",
    "canny_edges",
    "compute_saliency",
    "frame_redundancy",
    "from_half_bits",
    "h2o_step",
    "patch_deltas",
    "patch_tiers",
    "quantize_int4",
    "quantize_int8",
    "run",
    "run_report",
    "sliding_window_step",
    "srgb_to_lab",
    "synth_sequence",
    "to_half_bits",
]
