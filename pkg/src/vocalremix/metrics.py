"""Signal-to-artefact ratio of a remix against its reference.

The estimate is split into ``s_target``, its least-squares projection onto
the reference passed through any causal FIR filter of ``filter_len`` taps,
and the residual ``e_artif``. With a single reference there is no
interference term, so the ratio of their energies is both the SDR and the
SAR of the remix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

from .audio import AudioClip


class MetricError(ValueError):
    pass


@dataclass(frozen=True)
class ProjectionConfig:
    filter_len: int = 512
    exclude_edge: int = 256
    sar_cap_db: float = 200.0

    def __post_init__(self):
        if self.filter_len < 1:
            raise MetricError("filter_len must be >= 1")
        if self.exclude_edge < 0:
            raise MetricError("exclude_edge must be >= 0")


@dataclass(frozen=True)
class SarResult:
    sar_db: float
    capped: bool


def _samples(x) -> np.ndarray:
    return x.samples if isinstance(x, AudioClip) else np.asarray(x, dtype=np.float64)


def delay_gram(reference: np.ndarray, start: int, n: int, filter_len: int) -> np.ndarray:
    """Gram matrix of the delayed copies ``reference[start + i - k]``, ``i < n``.

    Samples before index 0 count as zero. The matrix is Toeplitz apart from
    boundary terms at either end of the evaluation window, which are added
    back with one cumulative sum per lag.
    """
    F = filter_len
    r = reference
    seg = r[start:start + n]
    # first row: lag-d correlation of the window with itself shifted back by d
    lead = np.concatenate([np.zeros(max(0, F - 1 - start)), r[max(0, start - F + 1):start + n]])
    first = np.array([seg @ lead[F - 1 - d:F - 1 - d + n] for d in range(F)])
    # before[i] = r[start - 1 - i], tail[i] = r[start + n - 1 - i]
    before = np.zeros(2 * F)
    avail = min(2 * F, start)
    before[:avail] = r[start - 1 - np.arange(avail)]
    tail = np.zeros(2 * F)
    tail_avail = min(2 * F, start + n)
    tail[:tail_avail] = r[start + n - 1 - np.arange(tail_avail)]
    i = np.arange(F)[:, None]
    d = np.arange(F)[None, :]
    corr = before[i] * before[i + d] - tail[i] * tail[i + d]
    # G[j, j + d] = first[d] + sum_{i < j} corr[i, d]
    cum = np.vstack([np.zeros((1, F)), np.cumsum(corr, axis=0)[:-1]])
    G = np.empty((F, F))
    rows = np.arange(F)
    for lag in range(F):
        j = rows[:F - lag]
        vals = first[lag] + cum[j, lag]
        G[j, j + lag] = vals
        G[j + lag, j] = vals
    return G


def project_target(estimate, reference, cfg: ProjectionConfig = ProjectionConfig()):
    """Split the trimmed estimate into its filtered-reference part and the rest.

    Returns ``(s_target, e_artif)`` over samples
    ``[exclude_edge, len - exclude_edge)``; the delayed copies may reach back
    into the trimmed edge, so a delayed reference lies exactly in the span.
    """
    est = _samples(estimate)
    ref = _samples(reference)
    if est.shape != ref.shape:
        raise MetricError(f"length mismatch: {est.shape[0]} vs {ref.shape[0]}")
    F, E = cfg.filter_len, cfg.exclude_edge
    n = est.shape[0] - 2 * E
    if n < F:
        raise MetricError(f"signal of {est.shape[0]} samples too short for filter_len={F} "
                          f"and exclude_edge={E}")
    ref_win = ref[E:E + n]
    if not np.any(ref_win):
        raise MetricError("degenerate reference: all zero inside the evaluation window")
    est_win = est[E:E + n]
    G = delay_gram(ref, E, n, F)
    # basis padded with F-1 earlier samples (zeros before the signal start)
    lead = np.concatenate([np.zeros(max(0, F - 1 - E)), ref[max(0, E - F + 1):E + n]])
    # b[k] = sum_i est[i] * ref[E + i - k]
    b = fftconvolve(lead, est_win[::-1], mode="valid")[::-1]
    ridge = 1e-12 * np.trace(G) / F
    coeffs = np.linalg.solve(G + ridge * np.eye(F), b)
    s_target = fftconvolve(lead, coeffs, mode="valid")
    return s_target, est_win - s_target


def sar(estimate, reference, cfg: ProjectionConfig = ProjectionConfig()) -> SarResult:
    """SAR in dB, capped at ``cfg.sar_cap_db`` when the artefact vanishes."""
    s_target, e_artif = project_target(estimate, reference, cfg)
    target_energy = float(s_target @ s_target)
    if target_energy == 0.0:
        raise MetricError("estimate orthogonal to reference")
    artif_energy = float(e_artif @ e_artif)
    if artif_energy / target_energy < 10.0 ** (-cfg.sar_cap_db / 10.0):
        return SarResult(float(cfg.sar_cap_db), True)
    return SarResult(10.0 * np.log10(target_energy / artif_energy), False)
