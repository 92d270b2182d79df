"""Wideband spectrum sensing: warped spectrograms, energy proposals,
heterodyne low-pass purification and detection metrics."""

from ._core import (
    BwTier,
    Detection,
    EmitterTruth,
    InvariantError,
    IoError,
    ModClass,
    Proposal,
    ValidationError,
    cutoff_frequency,
    decode_bandwidth,
    decode_time,
    default_config,
    design_lowpass,
    detect,
    evaluate,
    fig2_scene,
    propose,
    purify,
    safe_decim_factor,
    segment_indices,
    spectrogram,
    synth_scene,
    tf_iou,
    warp_grid,
)

__version__ = "0.1.0"
