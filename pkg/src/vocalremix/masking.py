"""Mask arithmetic: ideal binary masks, prediction averaging, confidence
thresholding, the gain scaling matrix and the dB convention.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .spectral import MagnitudeSpectrogram


class MaskError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class PredictionField:
    """Per-cell mean of the sliding-window predictions.

    ``values`` and ``coverage`` are ``(frames, bins)``; ``coverage`` counts
    the windows that contributed to each cell.
    """

    values: np.ndarray
    coverage: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


def ideal_binary_mask(vocal: MagnitudeSpectrogram, accomp: MagnitudeSpectrogram) -> np.ndarray:
    """1 where the vocal magnitude strictly exceeds the accompaniment; ties go to 0."""
    if vocal.data.shape != accomp.data.shape:
        raise MaskError(f"dimension mismatch: {vocal.data.shape} vs {accomp.data.shape}")
    return (vocal.data > accomp.data).astype(np.uint8)


def aggregate_predictions(
    windows: Sequence[tuple[int, np.ndarray]] | Iterable[tuple[int, np.ndarray]],
    total_frames: int,
) -> PredictionField:
    """Average overlapping window predictions onto the frame grid.

    Parameters
    ----------
    windows : sequence of (offset, array of shape (T, bins))
        Predictions of consecutive windows, offsets advancing by one frame.
    total_frames : int
        Frame count of the spectrogram the windows were cut from.

    Each cell is divided by the number of windows that actually covered it,
    so edge frames (fewer than ``T`` windows) still average into [0, 1].
    """
    windows = list(windows)
    if not windows:
        raise MaskError("no prediction windows to aggregate")
    T, bins = np.shape(windows[0][1])
    offsets = [off for off, _ in windows]
    if any(b - a != 1 for a, b in zip(offsets, offsets[1:])):
        raise MaskError("window offsets must be contiguous at stride 1")
    total = np.zeros((total_frames, bins))
    coverage = np.zeros((total_frames, bins), dtype=np.int64)
    for off, pred in windows:
        pred = np.asarray(pred, dtype=np.float64)
        if pred.shape != (T, bins):
            raise MaskError(f"window at offset {off} has shape {pred.shape}, expected {(T, bins)}")
        if off < 0 or off + T > total_frames:
            raise MaskError(f"window at offset {off} overruns {total_frames} frames")
        total[off:off + T] += np.clip(pred, 0.0, 1.0)
        coverage[off:off + T] += 1
    if np.any(coverage == 0):
        raise MaskError("some frames are not covered by any window")
    return PredictionField(total / coverage, coverage)


def threshold_mask(field: PredictionField | np.ndarray, alpha: float) -> np.ndarray:
    """Binary mask of the cells whose mean prediction is strictly above ``alpha``."""
    if not 0.0 <= alpha <= 1.0:
        raise MaskError(f"alpha must lie in [0, 1], got {alpha}")
    values = field.values if isinstance(field, PredictionField) else np.asarray(field)
    return (values > alpha).astype(np.uint8)


def scaling_matrix(mask: np.ndarray, g: float) -> np.ndarray:
    """Per-cell gains: ``g`` on masked cells, 1 elsewhere."""
    if not g > 0:
        raise MaskError(f"gain must be positive, got {g}")
    return np.where(np.asarray(mask) == 1, float(g), 1.0)


def db_to_gain(db: float) -> float:
    """``10 ** (db / 10)``: decibels on a power-style 10 log10 scale.

    The gain still multiplies amplitudes, so +10 dB here means a tenfold
    amplitude change.
    """
    if not np.isfinite(db):
        raise MaskError(f"gain in dB must be finite, got {db}")
    return float(10.0 ** (db / 10.0))


def gain_to_db(g: float) -> float:
    return float(10.0 * np.log10(g))
