"""Empirical mode decomposition and IMF-derived noise measures.

Standard sifting: cubic-spline envelopes through mirrored extrema, Cauchy
stop criterion SD < 0.2 or 10 sift iterations per mode, decomposition ends
when the residual has fewer than 4 extrema or max_imfs modes exist. The
reconstruction Sum(IMFs) + residual == input holds algebraically.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from ..errors import InsufficientSignalError

SIFT_SD = 0.2
SIFT_MAX_ITER = 10
MAX_IMFS_DEFAULT = 10
MIRROR = 2


@dataclass
class ImfSet:
    imfs: list[np.ndarray]
    residual: np.ndarray

    def reconstruct(self) -> np.ndarray:
        out = self.residual.copy()
        for imf in self.imfs:
            out += imf
        return out

    def __len__(self) -> int:
        return len(self.imfs)


def _extrema(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Indices of local maxima and minima (plateau edges count once)."""
    d = np.diff(x)
    # collapse zero slopes so flat tops register as single extrema
    nz = np.flatnonzero(d != 0)
    if len(nz) < 2:
        return np.array([], dtype=int), np.array([], dtype=int)
    s = np.sign(d[nz])
    turn = np.flatnonzero(s[1:] != s[:-1])
    idx = nz[turn] + 1
    maxima = idx[s[turn] > 0]
    minima = idx[s[turn] < 0]
    return maxima, minima


def _envelope(x: np.ndarray, idx: np.ndarray, kind: str) -> np.ndarray | None:
    """Cubic envelope through extrema with mirrored boundary extension."""
    if len(idx) < 2:
        return None
    n = len(x)
    k = min(MIRROR, len(idx))
    left_t = -idx[:k][::-1]
    right_t = 2 * (n - 1) - idx[-k:][::-1]
    t = np.concatenate([left_t, idx, right_t])
    v = np.concatenate([x[idx[:k]][::-1], x[idx], x[idx[-k:]][::-1]])
    order = np.argsort(t)
    t, v = t[order], v[order]
    t, keep = np.unique(t, return_index=True)
    v = v[keep]
    if len(t) < 2:
        return None
    return CubicSpline(t, v)(np.arange(n))


def _count_balance(h: np.ndarray) -> int:
    """|extrema count - zero crossing count| of a candidate mode."""
    sign = h >= 0
    zc = int(np.sum(sign[1:] != sign[:-1]))
    d = np.diff(h)
    nz = d[d != 0]
    if len(nz) < 2:
        return zc
    ext = int(np.sum(np.sign(nz[1:]) != np.sign(nz[:-1])))
    return abs(ext - zc)


def _sift(x: np.ndarray) -> np.ndarray | None:
    """Extract one IMF from x, or None if x has too little oscillation.

    Stops when the Cauchy criterion is met and the extrema / zero-crossing
    counts differ by at most one, or after the iteration cap.
    """
    h = x.copy()
    for _ in range(SIFT_MAX_ITER):
        maxima, minima = _extrema(h)
        if len(maxima) + len(minima) < 4 or len(maxima) < 2 or len(minima) < 2:
            return None
        upper = _envelope(h, maxima, "max")
        lower = _envelope(h, minima, "min")
        if upper is None or lower is None:
            return None
        mean_env = 0.5 * (upper + lower)
        h_new = h - mean_env
        denom = np.sum(h**2)
        sd = np.sum((h - h_new) ** 2) / denom if denom > 0 else 0.0
        h = h_new
        if sd < SIFT_SD and _count_balance(h) <= 1:
            break
    return h


def emd(samples: np.ndarray, max_imfs: int = MAX_IMFS_DEFAULT) -> ImfSet:
    """Decompose a signal into intrinsic mode functions plus a residual."""
    x = np.asarray(samples, dtype=np.float64)
    maxima, minima = _extrema(x)
    if len(maxima) + len(minima) < 4:
        raise InsufficientSignalError("signal has fewer than 4 extrema")
    imfs: list[np.ndarray] = []
    residual = x.copy()
    while len(imfs) < max_imfs:
        maxima, minima = _extrema(residual)
        if len(maxima) + len(minima) < 4:
            break
        imf = _sift(residual)
        if imf is None:
            break
        imfs.append(imf)
        residual = residual - imf
    return ImfSet(imfs=imfs, residual=residual)


def _hist_entropy(x: np.ndarray, bins: int = 64, order: int = 1) -> float:
    hist, _ = np.histogram(x, bins=bins)
    total = hist.sum()
    if total == 0:
        return 0.0
    p = hist[hist > 0] / total
    if order == 1:
        return float(-(p * np.log(p)).sum())
    return float(-np.log(np.sum(p**2)))


def _zcr_rate(x: np.ndarray) -> float:
    pos = x >= 0
    return float(np.mean(pos[1:] != pos[:-1]))


def _mean_abs_tkeo(x: np.ndarray) -> float:
    return float(np.mean(np.abs(x[1:-1] ** 2 - x[:-2] * x[2:])))


def imf_features(imf_set: ImfSet, fs: int) -> dict[str, float]:
    """SNR/NSR functional ratios between the IMF groups plus IMF1 measures.

    IMF1 (highest-frequency mode) is the noise proxy; the sum of the
    remaining modes is the signal proxy. SNR variants divide a functional of
    the signal group by the same functional of IMF1; NSR variants are exact
    reciprocals. Fractal dimension, cepstral peak prominence, and
    glottal-to-noise excitation are computed on IMF1 by delegating to the
    respective feature modules.
    """
    if len(imf_set) < 2:
        raise InsufficientSignalError("need >= 2 IMFs for IMF features")
    noise = imf_set.imfs[0]
    signal = np.sum(imf_set.imfs[1:], axis=0)

    def ratio(f) -> float:
        lo = f(noise)
        hi = f(signal)
        if lo <= 0:
            return float("inf") if hi > 0 else 1.0
        return float(hi / lo)

    snr_tkeo = ratio(_mean_abs_tkeo)
    snr_seo = ratio(lambda v: float(np.mean(v**2)))
    snr_se = ratio(lambda v: max(_hist_entropy(v, order=1), 1e-12))
    snr_re = ratio(lambda v: max(_hist_entropy(v, order=2), 1e-12))
    snr_zcr = ratio(lambda v: max(_zcr_rate(v), 1e-12))

    from .nonlinear import katz_fd
    out = {
        "imf_snr_tkeo": snr_tkeo,
        "imf_snr_seo": snr_seo,
        "imf_snr_se": snr_se,
        "imf_snr_re": snr_re,
        "imf_snr_zcr": snr_zcr,
        "imf_nsr_tkeo": 1.0 / snr_tkeo if snr_tkeo > 0 else float("inf"),
        "imf_nsr_seo": 1.0 / snr_seo if snr_seo > 0 else float("inf"),
        "imf_nsr_se": 1.0 / snr_se if snr_se > 0 else float("inf"),
        "imf_nsr_re": 1.0 / snr_re if snr_re > 0 else float("inf"),
        "imf_fd": katz_fd(noise),
        "imf_cpp": imf1_cpp(noise, fs),
        "imf_gne": _safe_gne(noise, fs),
    }
    return out


def _safe_gne(x: np.ndarray, fs: int) -> float:
    from .quality import glottal_noise_excitation
    try:
        return glottal_noise_excitation(x, fs)
    except Exception:
        return float("nan")


def imf1_cpp(imf1: np.ndarray, fs: int) -> float:
    """Cepstral peak prominence of IMF1 via the quality module's routine."""
    from ..audio import Recording, frame_array
    from ..pitch import estimate_f0
    from .quality import cepstral_quality
    try:
        rec = Recording(imf1, fs)
        contour = estimate_f0(rec)
        if not np.any(contour.voicing):
            return float("nan")
        frames = frame_array(imf1, fs, int(0.025 * fs), int(0.010 * fs), "hann")
        cpp, _, _ = cepstral_quality(frames, contour)
        return cpp
    except Exception:
        return float("nan")
