"""Hann-windowed STFT and weighted overlap-add inverse.

Spectrograms are stored as ``(frames, bins)`` arrays. Frame ``t`` covers
samples ``[t * hop, t * hop + window_len)``; there is no centring or
padding, so the first and last ``window_len`` samples are reconstructed
less accurately than the interior.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .audio import AudioClip

WINDOW_SUM_FLOOR = 1e-12


class SpectralError(ValueError):
    pass


@dataclass(frozen=True)
class StftConfig:
    window_len: int = 256
    hop: int = 64

    def __post_init__(self):
        if self.window_len < 2 or self.window_len % 2:
            raise SpectralError(f"window_len must be an even integer >= 2, got {self.window_len}")
        if not 1 <= self.hop <= self.window_len:
            raise SpectralError(f"hop must lie in [1, window_len], got {self.hop}")

    @property
    def bins(self) -> int:
        return self.window_len // 2 + 1

    def n_frames(self, n_samples: int) -> int:
        return (n_samples - self.window_len) // self.hop + 1


#: The full-scale analysis settings: 2048-sample frames every 512 samples.
FULL_SCALE_STFT = StftConfig(window_len=2048, hop=512)


@dataclass(frozen=True, eq=False)
class ComplexSpectrogram:
    data: np.ndarray
    config: StftConfig
    original_len: int
    rate: int

    def __post_init__(self):
        if self.data.ndim != 2 or self.data.shape[1] != self.config.bins:
            raise SpectralError(
                f"spectrogram shape {self.data.shape} inconsistent with {self.config.bins} bins"
            )

    @property
    def frames(self) -> int:
        return self.data.shape[0]

    @property
    def bins(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True, eq=False)
class MagnitudeSpectrogram:
    data: np.ndarray
    config: StftConfig

    @property
    def frames(self) -> int:
        return self.data.shape[0]

    @property
    def bins(self) -> int:
        return self.data.shape[1]


def hann_window(n: int) -> np.ndarray:
    """Periodic Hann window, ``0.5 - 0.5 cos(2 pi k / n)`` for ``k < n``."""
    if n < 2:
        raise SpectralError(f"window length must be >= 2, got {n}")
    k = np.arange(n)
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * k / n)


def _frame_view(x: np.ndarray, cfg: StftConfig) -> np.ndarray:
    frames = cfg.n_frames(len(x))
    idx = np.arange(frames)[:, None] * cfg.hop + np.arange(cfg.window_len)[None, :]
    return x[idx]


def stft(clip: AudioClip, cfg: StftConfig) -> ComplexSpectrogram:
    if len(clip) < cfg.window_len:
        raise SpectralError(
            f"clip of {len(clip)} samples is shorter than one window ({cfg.window_len})"
        )
    frames = _frame_view(clip.samples, cfg) * hann_window(cfg.window_len)
    data = np.fft.rfft(frames, axis=1)
    return ComplexSpectrogram(data, cfg, len(clip), clip.rate)


def istft(spec: ComplexSpectrogram) -> AudioClip:
    """Invert ``spec`` by windowed overlap-add.

    Each frame is inverse transformed, multiplied by the synthesis window
    and accumulated; the sum is divided by the accumulated squared window
    (floored at 1e-12) and cut to ``original_len``.
    """
    cfg = spec.config
    if spec.data.ndim != 2 or spec.bins != cfg.bins:
        raise SpectralError(f"spectrogram shape {spec.data.shape} inconsistent with config")
    win = hann_window(cfg.window_len)
    frames = np.fft.irfft(spec.data, n=cfg.window_len, axis=1) * win
    n_out = (spec.frames - 1) * cfg.hop + cfg.window_len
    out = np.zeros(max(n_out, spec.original_len))
    wsum = np.zeros_like(out)
    win_sq = win * win
    for t in range(spec.frames):
        start = t * cfg.hop
        out[start:start + cfg.window_len] += frames[t]
        wsum[start:start + cfg.window_len] += win_sq
    out /= np.maximum(wsum, WINDOW_SUM_FLOOR)
    return AudioClip(out[:spec.original_len], spec.rate)


def magnitude(spec: ComplexSpectrogram) -> MagnitudeSpectrogram:
    return MagnitudeSpectrogram(np.abs(spec.data), spec.config)


def interior_slice(n_samples: int, cfg: StftConfig) -> slice:
    """Samples away from the under-determined first and last windows."""
    return slice(cfg.window_len, n_samples - cfg.window_len)
