"""Deterministic synthetic multitrack songs.

Vocal stems are harmonic tone complexes with vibrato, sung in phrases on a
semitone grid of fundamentals between 150 and 400 Hz. Accompaniment stems
cycle through three kinds of part: a bass line below 150 Hz, drum-like
noise bursts with sharp attacks (kicks below the vocal range, snares and
hats above most of it), and sustained pad tones in 150-900 Hz set a quarter
tone off the vocal grid. Each accompaniment stem also carries a faint hiss
floor, so near-silent cells belong to the accompaniment. Every random choice is drawn from a :class:`~vocalremix.rng.SplitMix64` stream
seeded by the song seed, so a seed always yields the same stems.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy import signal

from .audio import AudioClip, StemSet, read_wav, write_wav
from .rng import SplitMix64

MANIFEST_NAME = "manifest.json"
MANIFEST_VERSION = 1

#: Vocal fundamentals are semitones above this pitch, up to 400 Hz.
GRID_BASE_HZ = 150.0
VOCAL_SEMITONES = 16
PAD_BAND_HZ = (150.0, 900.0)
PAD_TONES = (1, 2)
#: Broadband hiss added to each accompaniment stem, relative to its peak.
HISS_LEVEL = 0.003


@dataclass(frozen=True)
class SongSpec:
    seed: int = 0
    duration_s: float = 6.0
    rate: int = 8000
    n_vocal: int = 2
    n_accomp: int = 3

    def __post_init__(self):
        if self.duration_s <= 0 or self.rate <= 0:
            raise ValueError("duration and rate must be positive")
        if self.n_vocal < 1 or self.n_accomp < 1:
            raise ValueError("a song needs at least one vocal and one accompaniment stem")

    @property
    def n_samples(self) -> int:
        return int(round(self.duration_s * self.rate))

    def check_window(self, window_len: int) -> None:
        if self.n_samples < 4 * window_len:
            raise ValueError(
                f"{self.n_samples} samples is shorter than four analysis windows ({window_len})"
            )


@dataclass(frozen=True)
class Song:
    song_id: str
    spec: SongSpec
    stems: StemSet


@dataclass(frozen=True)
class Corpus:
    train_songs: list[Song] = field(default_factory=list)
    test_songs: list[Song] = field(default_factory=list)

    def __post_init__(self):
        train = {s.spec.seed for s in self.train_songs}
        test = {s.spec.seed for s in self.test_songs}
        if train & test:
            raise ValueError(f"seeds shared between train and test: {sorted(train & test)}")


def _envelope(n: int, rate: int, attack_s: float, release_s: float) -> np.ndarray:
    env = np.ones(n)
    a = min(n // 2, max(1, int(attack_s * rate)))
    r = min(n - a, max(1, int(release_s * rate)))
    env[:a] = 0.5 - 0.5 * np.cos(np.pi * np.arange(a) / a)
    env[n - r:] = 0.5 + 0.5 * np.cos(np.pi * np.arange(1, r + 1) / r)
    return env


def _vocal_stem(rng: SplitMix64, n: int, rate: int) -> np.ndarray:
    out = np.zeros(n)
    nyq = 0.45 * rate
    t0 = int(rng.scalar(0.0, 0.5) * rate)
    while True:
        length = int(rng.scalar(0.6, 1.8) * rate)
        if t0 + length > n:
            if out.any():
                break
            # the song is too short for a full phrase: sing what fits
            t0, length = 0, n
        f0 = GRID_BASE_HZ * 2.0 ** (rng.integer(0, VOCAL_SEMITONES) / 12.0)
        n_harm = rng.integer(4, 8)
        vib_rate = rng.scalar(4.0, 7.0)
        vib_phase = rng.scalar(0.0, 2 * np.pi)
        tilt = rng.scalar(0.3, 0.8)
        t = np.arange(length) / rate
        inst_f = f0 * (1.0 + 0.02 * np.sin(2 * np.pi * vib_rate * t + vib_phase))
        phase = 2 * np.pi * np.cumsum(inst_f) / rate
        phrase = np.zeros(length)
        for k in range(1, n_harm + 1):
            amp = k ** -tilt
            ph = rng.scalar(0.0, 2 * np.pi)
            if k * f0 * 1.02 < nyq:
                phrase += amp * np.sin(k * phase + ph)
        swell = 0.75 + 0.25 * np.sin(2 * np.pi * rng.scalar(0.3, 1.0) * t + rng.scalar(0, 2 * np.pi))
        out[t0:t0 + length] += phrase * swell * _envelope(length, rate, 0.06, 0.12)
        t0 += length + int(rng.scalar(0.1, 0.5) * rate)
        if t0 >= n:
            break
    return out


def _bass_stem(rng: SplitMix64, n: int, rate: int) -> np.ndarray:
    out = np.zeros(n)
    t0 = 0
    while t0 < n:
        length = min(n - t0, int(rng.scalar(0.25, 1.0) * rate))
        f = rng.scalar(40.0, 140.0)
        t = np.arange(length) / rate
        decay = np.exp(-t / rng.scalar(0.3, 1.5))
        note = np.sin(2 * np.pi * f * t + rng.scalar(0, 2 * np.pi)) * decay
        out[t0:t0 + length] += note * _envelope(length, rate, 0.01, 0.03)
        t0 += length
    return out


def _drum_stem(rng: SplitMix64, n: int, rate: int) -> np.ndarray:
    if rng.scalar() < 0.5:
        # kick: below the vocal range
        lo = rng.scalar(40.0, 70.0)
        hi = rng.scalar(110.0, 150.0)
    else:
        # snare/hat: above most of the vocal energy
        lo = rng.scalar(1500.0, 2500.0)
        hi = min(0.45 * rate, lo * rng.scalar(1.3, 1.8))
    sos = signal.butter(2, [lo, hi], btype="bandpass", fs=rate, output="sos")
    noise = signal.sosfilt(sos, rng.normal(n))
    beat = int(rng.scalar(0.2, 0.5) * rate)
    tau = rng.scalar(0.03, 0.15)
    env = np.zeros(n)
    hit = np.exp(-np.arange(min(n, 8 * int(tau * rate) + 1)) / (tau * rate))
    starts = range(int(rng.scalar(0.0, 0.3) * rate), n, beat)
    accents = rng.uniform(len(starts))
    for s, u in zip(starts, accents):
        if u < 0.75:
            seg = hit[: n - s]
            env[s:s + len(seg)] += (0.5 + u) * seg
    if not env.any():
        env[: len(hit)] = hit[:n]
    return noise * env


def _pad_stem(rng: SplitMix64, n: int, rate: int) -> np.ndarray:
    # quarter-tone offsets from the vocal pitch grid
    lo = int(np.ceil(12 * np.log2(PAD_BAND_HZ[0] / GRID_BASE_HZ) - 0.5))
    hi = int(np.floor(12 * np.log2(PAD_BAND_HZ[1] / GRID_BASE_HZ) - 0.5))
    out = np.zeros(n)
    t0 = 0
    while t0 < n:
        length = min(n - t0, int(rng.scalar(1.5, 3.0) * rate))
        t = np.arange(length) / rate
        chord = np.zeros(length)
        for _ in range(rng.integer(*PAD_TONES)):
            f = GRID_BASE_HZ * 2.0 ** ((rng.integer(lo, hi) + 0.5) / 12.0)
            chord += np.sin(2 * np.pi * f * t + rng.scalar(0, 2 * np.pi))
        out[t0:t0 + length] += chord * _envelope(length, rate, 0.2, 0.2)
        t0 += length
    return out


def synth_song(spec: SongSpec) -> StemSet:
    """Render the stems of one song; a pure function of ``spec``."""
    rng = SplitMix64(spec.seed)
    n, rate = spec.n_samples, spec.rate
    vocals = [_vocal_stem(rng, n, rate) for _ in range(spec.n_vocal)]
    kinds = (_bass_stem, _drum_stem, _pad_stem)
    first = rng.integer(0, 2)
    accomp = []
    for j in range(spec.n_accomp):
        kind = kinds[(first + j) % 3]
        part = kind(rng, n, rate)
        accomp.append(part + HISS_LEVEL * np.max(np.abs(part)) * rng.normal(n))
    return StemSet(
        [AudioClip(v, rate) for v in vocals],
        [AudioClip(a, rate) for a in accomp],
    )


def make_corpus(n_train: int, n_test: int, base_seed: int, template: SongSpec) -> Corpus:
    """Generate ``n_train + n_test`` songs with consecutive seeds.

    Stem counts are jittered by -1, 0 or +1 per song (never below one),
    using a stream keyed by the song seed.
    """
    if n_train < 1 or n_test < 1:
        raise ValueError("need at least one training and one test song")
    songs = []
    for i in range(n_train + n_test):
        seed = base_seed + i
        jitter = SplitMix64(seed ^ 0x5EED)
        spec = replace(
            template,
            seed=seed,
            n_vocal=max(1, template.n_vocal + jitter.integer(-1, 1)),
            n_accomp=max(1, template.n_accomp + jitter.integer(-1, 1)),
        )
        songs.append(Song(f"song_{seed:05d}", spec, synth_song(spec)))
    return Corpus(songs[:n_train], songs[n_train:])


def write_corpus(corpus: Corpus, root) -> Path:
    """Write stems as float32 WAVs under ``root/<split>/<song_id>/`` plus a manifest."""
    root = Path(root)
    entries = []
    for split, songs in (("train", corpus.train_songs), ("test", corpus.test_songs)):
        for song in songs:
            d = root / split / song.song_id
            d.mkdir(parents=True, exist_ok=True)
            vocal_files, accomp_files = [], []
            for i, clip in enumerate(song.stems.vocal_stems):
                name = f"vocal_{i:02d}.wav"
                write_wav(d / name, clip, "float32")
                vocal_files.append(name)
            for i, clip in enumerate(song.stems.accompaniment_stems):
                name = f"accomp_{i:02d}.wav"
                write_wav(d / name, clip, "float32")
                accomp_files.append(name)
            entries.append({
                "song_id": song.song_id,
                "split": split,
                "seed": song.spec.seed,
                "rate": song.spec.rate,
                "spec": asdict(song.spec),
                "vocal": vocal_files,
                "accompaniment": accomp_files,
            })
    manifest = {"version": MANIFEST_VERSION, "songs": entries}
    path = root / MANIFEST_NAME
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def load_corpus(root) -> Corpus:
    """Read a corpus directory written by :func:`write_corpus`.

    Externally supplied stems work too, as long as the manifest lists them.
    Songs without a ``spec`` entry get one built from their seed and rate.
    """
    root = Path(root)
    manifest = json.loads((root / MANIFEST_NAME).read_text())
    if manifest.get("version") != MANIFEST_VERSION:
        raise ValueError(f"unsupported manifest version {manifest.get('version')!r}")
    train, test = [], []
    for entry in manifest["songs"]:
        d = root / entry["split"] / entry["song_id"]
        vocals = [read_wav(d / f) for f in entry["vocal"]]
        accomp = [read_wav(d / f) for f in entry["accompaniment"]]
        stems = StemSet(vocals, accomp)
        if "spec" in entry:
            spec = SongSpec(**entry["spec"])
        else:
            spec = SongSpec(seed=entry["seed"], rate=entry["rate"],
                            duration_s=len(vocals[0]) / entry["rate"],
                            n_vocal=len(vocals), n_accomp=len(accomp))
        song = Song(entry["song_id"], spec, stems)
        if entry["split"] == "train":
            train.append(song)
        elif entry["split"] == "test":
            test.append(song)
        else:
            raise ValueError(f"unknown split {entry['split']!r} for {entry['song_id']}")
    return Corpus(train, test)


def spectral_overlap(vocal_mag: np.ndarray, accomp_mag: np.ndarray, rel: float = 0.01) -> float:
    """Share of total magnitude in cells where both parts exceed ``rel`` of their own peak."""
    both = (vocal_mag > rel * vocal_mag.max()) & (accomp_mag > rel * accomp_mag.max())
    total = vocal_mag.sum() + accomp_mag.sum()
    return float((vocal_mag[both].sum() + accomp_mag[both].sum()) / total)
