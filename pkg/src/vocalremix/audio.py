"""Mono audio clips, WAV I/O and the stem mixing protocol."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Literal

import numpy as np
from scipy.io import wavfile


class AudioError(ValueError):
    """Raised for invalid clips, degenerate signals and unreadable WAV files."""


@dataclass(frozen=True, eq=False)
class AudioClip:
    """A monaural float64 signal and its sample rate in Hz.

    The sample buffer is copied on construction and made read-only.
    """

    samples: np.ndarray
    rate: int

    def __post_init__(self):
        s = np.array(self.samples, dtype=np.float64, copy=True).reshape(-1)
        if not np.all(np.isfinite(s)):
            raise AudioError("samples must be finite")
        if int(self.rate) != self.rate or self.rate <= 0:
            raise AudioError(f"sample rate must be a positive integer, got {self.rate}")
        s.flags.writeable = False
        object.__setattr__(self, "samples", s)
        object.__setattr__(self, "rate", int(self.rate))

    def __len__(self) -> int:
        return self.samples.shape[0]

    @property
    def duration(self) -> float:
        return len(self) / self.rate

    def peak(self) -> float:
        return float(np.max(np.abs(self.samples))) if len(self) else 0.0


@dataclass(frozen=True)
class StemSet:
    """Vocal and accompaniment stems of one song, all of equal length and rate."""

    vocal_stems: list[AudioClip]
    accompaniment_stems: list[AudioClip]

    def __post_init__(self):
        if not self.vocal_stems or not self.accompaniment_stems:
            raise AudioError("a stem set needs at least one vocal and one accompaniment stem")
        stems = self.all_stems()
        n, rate = len(stems[0]), stems[0].rate
        for s in stems:
            if len(s) != n:
                raise AudioError(f"stems differ in length ({len(s)} vs {n})")
            if s.rate != rate:
                raise AudioError(f"stems differ in sample rate ({s.rate} vs {rate})")

    def all_stems(self) -> list[AudioClip]:
        return list(self.vocal_stems) + list(self.accompaniment_stems)

    @property
    def rate(self) -> int:
        return self.vocal_stems[0].rate


@dataclass(frozen=True)
class MixBundle:
    vocal_mix: AudioClip
    accompaniment_mix: AudioClip
    mixture: AudioClip


def read_wav(path) -> AudioClip:
    """Read a mono PCM16 or float32 WAV file.

    PCM16 samples are divided by 32768. Any other encoding, or more than one
    channel, raises :class:`AudioError`.
    """
    path = Path(path)
    if not path.is_file():
        raise AudioError(f"no such file: {path}")
    try:
        rate, data = wavfile.read(path)
    except (ValueError, EOFError) as exc:
        raise AudioError(f"malformed WAV file {path}: {exc}") from exc
    if data.ndim != 1:
        raise AudioError(f"unsupported channel count: {data.shape[1]} in {path}")
    if data.dtype == np.int16:
        samples = data.astype(np.float64) / 32768.0
    elif data.dtype == np.float32:
        samples = data.astype(np.float64)
    else:
        raise AudioError(f"unsupported encoding {data.dtype} in {path}")
    return AudioClip(samples, rate)


def write_wav(path, clip: AudioClip, encoding: Literal["pcm16", "float32"] = "float32") -> None:
    """Write ``clip`` as a mono WAV file.

    ``pcm16`` clamps to [-1, 1] and rounds to the nearest step of 1/32768
    (positive full scale saturates at 32767).
    """
    if encoding == "pcm16":
        scaled = np.rint(np.clip(clip.samples, -1.0, 1.0) * 32768.0)
        data = np.clip(scaled, -32768, 32767).astype(np.int16)
    elif encoding == "float32":
        data = clip.samples.astype(np.float32)
    else:
        raise AudioError(f"unknown encoding {encoding!r}")
    try:
        wavfile.write(Path(path), clip.rate, data)
    except OSError as exc:
        raise AudioError(f"cannot write {path}: {exc}") from exc


def peak_normalize(clip: AudioClip) -> AudioClip:
    peak = clip.peak()
    if peak == 0.0:
        raise AudioError("degenerate silent signal: cannot peak-normalize an all-zero clip")
    return AudioClip(clip.samples / peak, clip.rate)


def _sum(clips: list[AudioClip]) -> AudioClip:
    total = np.zeros(len(clips[0]))
    for c in clips:
        total = total + c.samples
    return AudioClip(total, clips[0].rate)


def mix_stems(stems: StemSet) -> MixBundle:
    """Build the vocal, accompaniment and full mixes of a song.

    Every stem is peak-normalised, each group is summed and normalised
    again, and the two group mixes are added without a final normalisation,
    so ``mixture == vocal_mix + accompaniment_mix`` holds exactly.
    """
    vocal = peak_normalize(_sum([peak_normalize(s) for s in stems.vocal_stems]))
    accomp = peak_normalize(_sum([peak_normalize(s) for s in stems.accompaniment_stems]))
    mixture = AudioClip(vocal.samples + accomp.samples, vocal.rate)
    return MixBundle(vocal, accomp, mixture)
