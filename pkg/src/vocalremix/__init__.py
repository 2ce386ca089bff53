"""Vocal-gain remixing with a sliding-window mask network.

A mixture is transformed to a magnitude spectrogram, a small fully
connected network estimates which cells belong to the vocals, the averaged
estimate is thresholded at a confidence ``alpha`` and the selected cells are
scaled by a gain before resynthesis. Remixes are scored by their
signal-to-artefact ratio against the ideal stem-level remix.
"""

from .audio import AudioClip, AudioError, MixBundle, StemSet, mix_stems, read_wav, write_wav
from .dataset import Corpus, Song, SongSpec, load_corpus, make_corpus, synth_song, write_corpus
from .harness import (
    ExperimentConfig,
    SweepRecord,
    default_config,
    load_config,
    run_sweep,
    summarize,
    train_model,
)
from .masking import db_to_gain, ideal_binary_mask, scaling_matrix, threshold_mask
from .metrics import ProjectionConfig, SarResult, sar
from .network import MlpModel, load_model, predict_field, save_model
from .remix import RemixRequest, apply_remix, reference_remix
from .spectral import StftConfig, istft, magnitude, stft

__version__ = "0.1.0"

__all__ = [
    "AudioClip", "AudioError", "MixBundle", "StemSet", "mix_stems", "read_wav", "write_wav",
    "Corpus", "Song", "SongSpec", "load_corpus", "make_corpus", "synth_song", "write_corpus",
    "ExperimentConfig", "SweepRecord", "default_config", "load_config", "run_sweep",
    "summarize", "train_model",
    "db_to_gain", "ideal_binary_mask", "scaling_matrix", "threshold_mask",
    "ProjectionConfig", "SarResult", "sar",
    "MlpModel", "load_model", "predict_field", "save_model",
    "RemixRequest", "apply_remix", "reference_remix",
    "StftConfig", "istft", "magnitude", "stft",
]
