"""Audio decoding, resampling, and short-time framing.

All downstream analysis runs at ANALYSIS_RATE (16 kHz). Decoding is
bit-deterministic: the same file always yields the same float buffer.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np
from scipy.io import wavfile
from scipy.signal import resample_poly

from .errors import AudioError, InsufficientSignalError

VOWELS = ("a", "e", "i", "o", "u")
TASKS = ("s", "l", "ll", "ls")
ANALYSIS_RATE = 16_000

# Integer PCM is scaled by the full-scale divisor of its width (asymmetric
# full scale accepted), so golden files are stable across platforms.
_PCM_SCALE = {
    np.dtype(np.int16): 32768.0,
    np.dtype(np.int32): 2147483648.0,
}


@dataclass
class Recording:
    """Mono sample buffer with its sampling rate and cohort labels."""

    samples: np.ndarray
    fs: int
    subject_id: str = "anon"
    vowel: str = "a"
    task: str = "s"

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.fs <= 0:
            raise ValueError(f"sampling rate must be positive, got {self.fs}")
        if self.samples.size == 0:
            raise AudioError("empty sample buffer")
        if self.vowel not in VOWELS:
            raise ValueError(f"vowel must be one of {VOWELS}, got {self.vowel!r}")
        if self.task not in TASKS:
            raise ValueError(f"task must be one of {TASKS}, got {self.task!r}")

    @property
    def duration(self) -> float:
        return self.samples.size / self.fs


@dataclass
class FrameSequence:
    """Short-time frames of a signal.

    ``frames`` holds the tapered frames, ``raw`` the same slices before the
    taper (some measures, e.g. energy and TKEO, are defined on the plain
    waveform). Frame count is floor((N - frame_length) / hop) + 1.
    """

    frames: np.ndarray
    raw: np.ndarray
    frame_length: int
    hop: int
    window: str
    fs: int
    times: np.ndarray = field(default=None)  # frame centers in seconds

    def __post_init__(self):
        if self.times is None:
            starts = np.arange(self.frames.shape[0]) * self.hop
            self.times = (starts + self.frame_length / 2) / self.fs

    def __len__(self) -> int:
        return self.frames.shape[0]


def window_taper(name: str, length: int) -> np.ndarray:
    """Return the named symmetric taper of the given length."""
    if name == "rectangular":
        return np.ones(length)
    if name == "hann":
        return np.hanning(length)
    if name == "hamming":
        return np.hamming(length)
    raise ValueError(f"unknown window {name!r}")


def load_recording(
    path,
    subject_id: str = "anon",
    vowel: str = "a",
    task: str = "s",
    peak_normalize: bool = False,
) -> Recording:
    """Decode a PCM/float WAV file into a mono Recording in [-1, 1].

    Stereo input is averaged to mono. ``peak_normalize`` rescales the result
    to unit peak; it is off by default since the effect of normalization on
    level-dependent measures is deliberately left to the caller.
    """
    path = Path(path)
    if not path.exists():
        raise AudioError(f"no such audio file: {path}")
    try:
        fs, data = wavfile.read(path)
    except Exception as exc:  # noqa: BLE001 - scipy raises bare ValueError/OSError
        raise AudioError(f"cannot decode {path}: {exc}") from exc
    if data.size == 0:
        raise AudioError(f"zero-length audio: {path}")

    if data.dtype in _PCM_SCALE:
        x = data.astype(np.float64) / _PCM_SCALE[data.dtype]
    elif data.dtype == np.uint8:
        x = (data.astype(np.float64) - 128.0) / 128.0
    elif data.dtype in (np.float32, np.float64):
        x = data.astype(np.float64)
    else:
        raise AudioError(f"unsupported sample encoding {data.dtype} in {path}")

    if x.ndim == 2:  # average channels
        x = x.mean(axis=1)

    if peak_normalize:
        peak = np.max(np.abs(x))
        if peak > 0:
            x = x / peak

    return Recording(samples=x, fs=int(fs), subject_id=subject_id, vowel=vowel, task=task)


def write_wav(path, samples: np.ndarray, fs: int) -> None:
    """Write float samples in [-1, 1] as 16-bit PCM."""
    x = np.clip(np.asarray(samples, dtype=np.float64), -1.0, 1.0)
    pcm = np.round(x * 32767.0).astype(np.int16)
    wavfile.write(str(path), fs, pcm)


def resample(rec: Recording, target_fs: int) -> Recording:
    """Rate-convert with a windowed-sinc polyphase filter (kaiser, ~90 dB).

    Idempotent at the target rate: a recording already at ``target_fs`` is
    returned sample-identical.
    """
    if target_fs <= 0:
        raise ValueError(f"target_fs must be positive, got {target_fs}")
    if rec.fs == target_fs:
        return Recording(rec.samples.copy(), rec.fs, rec.subject_id, rec.vowel, rec.task)
    ratio = Fraction(int(target_fs), int(rec.fs))
    y = resample_poly(rec.samples, ratio.numerator, ratio.denominator, window=("kaiser", 9.0))
    return Recording(y, target_fs, rec.subject_id, rec.vowel, rec.task)


def frame_signal(rec: Recording, frame_ms: float, hop_ms: float, window: str = "hann") -> FrameSequence:
    """Slice a recording into tapered frames of frame_ms every hop_ms."""
    if hop_ms <= 0 or frame_ms < hop_ms:
        raise ValueError("require frame_ms >= hop_ms > 0")
    frame_length = int(round(frame_ms * rec.fs / 1000.0))
    hop = int(round(hop_ms * rec.fs / 1000.0))
    return frame_array(rec.samples, rec.fs, frame_length, hop, window)


def frame_array(x: np.ndarray, fs: int, frame_length: int, hop: int, window: str = "hann") -> FrameSequence:
    """frame_signal on a bare sample array (internal plumbing)."""
    x = np.asarray(x, dtype=np.float64)
    n = x.size
    if n < frame_length:
        raise InsufficientSignalError(f"signal shorter than one frame ({n} < {frame_length} samples)")
    count = (n - frame_length) // hop + 1
    idx = np.arange(frame_length)[None, :] + hop * np.arange(count)[:, None]
    raw = x[idx]
    taper = window_taper(window, frame_length)
    return FrameSequence(
        frames=raw * taper,
        raw=raw,
        frame_length=frame_length,
        hop=hop,
        window=window,
        fs=fs,
    )
