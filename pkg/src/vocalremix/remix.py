"""Gain remixing in the STFT domain and the reference remixes it is judged against."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .audio import AudioClip, AudioError, MixBundle
from .spectral import ComplexSpectrogram, StftConfig, istft, stft


@dataclass(frozen=True, eq=False)
class RemixRequest:
    mixture: AudioClip
    scaling: np.ndarray
    stft_config: StftConfig


def apply_remix(req: RemixRequest, spec: ComplexSpectrogram | None = None) -> AudioClip:
    """Multiply the mixture spectrogram by ``req.scaling`` and resynthesise.

    ``spec`` may carry a precomputed ``stft(req.mixture, req.stft_config)``
    so that many remixes of one song share a single forward transform.
    """
    if spec is None:
        spec = stft(req.mixture, req.stft_config)
    scaling = np.asarray(req.scaling, dtype=np.float64)
    if scaling.shape != spec.data.shape:
        raise ValueError(f"scaling shape {scaling.shape} != spectrogram shape {spec.data.shape}")
    out = istft(ComplexSpectrogram(spec.data * scaling, spec.config, spec.original_len, spec.rate))
    return out


def reference_remix(vocal_mix: AudioClip, accomp_mix: AudioClip, g: float) -> AudioClip:
    """``g * vocal_mix + accomp_mix``, sample by sample."""
    if len(vocal_mix) != len(accomp_mix):
        raise AudioError(f"length mismatch: {len(vocal_mix)} vs {len(accomp_mix)}")
    if vocal_mix.rate != accomp_mix.rate:
        raise AudioError(f"rate mismatch: {vocal_mix.rate} vs {accomp_mix.rate}")
    return AudioClip(g * vocal_mix.samples + accomp_mix.samples, vocal_mix.rate)


def baseline_pair(bundle: MixBundle, g: float) -> tuple[AudioClip, AudioClip]:
    """The untouched mixture paired with the reference remix at gain ``g``."""
    return bundle.mixture, reference_remix(bundle.vocal_mix, bundle.accompaniment_mix, g)
