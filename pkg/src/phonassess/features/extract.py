"""Per-recording extraction: one value or contour per registry entry.

Frame-based contours (f0, energies, spectral flux, formants) run over 25 ms
frames with a 10 ms hop. Block-based contours run the heavier measures over
500 ms analysis blocks hopped by 250 ms, giving per-block values whose
spread the summary statistics capture. Failures are per-feature: a failed
measure yields NaN for that feature (or that block) and a log entry, never
an aborted recording.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..audio import ANALYSIS_RATE, FrameSequence, Recording, frame_array, frame_signal, resample
from ..errors import InsufficientSignalError, PhonassessError
from ..pitch import CycleMarks, F0Contour, detect_cycles, estimate_f0
from . import articulation, emd, highorder, nonlinear, phonation, quality
from .registry import REGISTRY

BLOCK_LEN_S = 0.5
BLOCK_HOP_S = 0.25


@dataclass
class ExtractionParams:
    f0_min: float = 60.0
    f0_max: float = 400.0
    frame_ms: float = 25.0
    hop_ms: float = 10.0
    block_len_s: float = BLOCK_LEN_S
    block_hop_s: float = BLOCK_HOP_S
    max_imfs: int = 10
    peak_normalize: bool = False


@dataclass
class ExtractionResult:
    features: dict[str, float | np.ndarray]
    failures: dict[str, str] = field(default_factory=dict)


def _block_bounds(n: int, fs: int, params: ExtractionParams) -> list[tuple[int, int]]:
    blen = int(params.block_len_s * fs)
    bhop = int(params.block_hop_s * fs)
    if n < blen:
        return []
    count = (n - blen) // bhop + 1
    return [(i * bhop, i * bhop + blen) for i in range(count)]


def _slice_contour(contour: F0Contour, t0: float, t1: float) -> F0Contour:
    m = (contour.times >= t0) & (contour.times < t1)
    peaks = contour.acf_peak[m] if contour.acf_peak is not None else None
    return F0Contour(times=contour.times[m] - t0, f0=contour.f0[m],
                     voicing=contour.voicing[m], acf_peak=peaks)


JITTER_KEYS = ("jitter_local", "jitter_abs", "jitter_rap", "jitter_ppq5", "jitter_ddp")
SHIMMER_KEYS = ("shimmer_local", "shimmer_db", "shimmer_apq3", "shimmer_apq5",
                "shimmer_apq11", "shimmer_dda")
BIS_KEYS = ("bii", "hfeb", "lfeb", "bmii", "bpii", "lsber", "hsber")
BIC_KEYS = ("bcii", "hfebc", "lfebc", "cmii", "bcpii", "lcbcer", "hcbcer", "bcmd", "bcpd")
ENTROPY_KEYS = ("she", "re", "ce", "rbe1", "rbe2", "ae",
                "se_k1", "se_k2", "se_k3", "se_k4", "se_k5", "se_k6", "se_k7", "se_k8", "pe")


def extract_recording(rec: Recording, params: ExtractionParams | None = None) -> ExtractionResult:
    """Run the full measure battery on one recording.

    The recording is resampled to the 16 kHz analysis rate first. Returns
    per-registry-name scalars and contours plus a failure log mapping feature
    names to the reason they are missing.
    """
    params = params or ExtractionParams()
    if rec.fs != ANALYSIS_RATE:
        rec = resample(rec, ANALYSIS_RATE)
    if params.peak_normalize:
        peak = np.max(np.abs(rec.samples))
        if peak > 0:
            rec = Recording(rec.samples / peak, rec.fs, rec.subject_id, rec.vowel, rec.task)
    x = rec.samples
    fs = rec.fs
    feats: dict[str, float | np.ndarray] = {}
    failures: dict[str, str] = {}

    def fail(names, exc):
        for name in ([names] if isinstance(names, str) else names):
            failures[name] = str(exc)
            feats.setdefault(name, float("nan"))

    contour = estimate_f0(rec, params.f0_min, params.f0_max)
    frames = frame_signal(rec, params.frame_ms, params.hop_ms, "hann")

    # ---- frame-based contours -------------------------------------------
    feats["f0"] = contour.voiced_f0 if np.any(contour.voicing) else np.array([np.nan])

    try:
        energy, tkeo, me4, mpsd, lster = phonation.energy_features(frames, rec)
        feats.update(energy=energy, tkeo=tkeo, me_4hz=me4, mpsd=mpsd, lster=lster)
    except PhonassessError as exc:
        fail(["energy", "tkeo", "me_4hz", "mpsd", "lster"], exc)

    try:
        zcr, hzcrr, fluf = quality.temporal_quality(frames, contour)
        feats.update(zcr=zcr, hzcrr=hzcrr, fluf=fluf)
    except PhonassessError as exc:
        fail(["zcr", "hzcrr", "fluf"], exc)

    try:
        sf, sdbm, sdbp = quality.spectral_quality(frames)
        feats.update(sf=sf, sdbm=sdbm, sdbp=sdbp)
    except PhonassessError as exc:
        fail(["sf", "sdbm", "sdbp"], exc)

    try:
        track = articulation.estimate_formants(frames, fs)
        voiced_mask, _ = quality.frame_voicing(frames, contour)
        sel = voiced_mask & track.valid()
        if not np.any(sel):
            sel = track.valid()
        for key in ("f1", "f2", "f3", "bw1", "bw2", "bw3"):
            feats[key] = getattr(track, key)[sel]
    except PhonassessError as exc:
        fail(["f1", "f2", "f3", "bw1", "bw2", "bw3"], exc)

    # ---- whole-signal scalars -------------------------------------------
    try:
        feats["ppe"] = phonation.ppe(contour)
    except PhonassessError as exc:
        fail("ppe", exc)

    try:
        mser, mfp, rphm, icer, rphic = quality.modulation_measures(rec)
        feats.update(mser=mser, mfp=mfp, rphm=rphm, icer=icer, rphic=rphic)
    except PhonassessError as exc:
        fail(["mser", "mfp", "rphm", "icer", "rphic"], exc)

    imf_names = [e.name for e in REGISTRY if e.group == 5]
    try:
        modes = emd.emd(x, params.max_imfs)
        feats.update(emd.imf_features(modes, fs))
    except PhonassessError as exc:
        fail(imf_names, exc)

    tau = nonlinear.fmmi(x)
    feats["fmmi"] = float(tau)
    try:
        embedding = nonlinear.embed(x, nonlinear.EMBED_DIM, tau)
        cfeats = nonlinear.complexity_features(embedding, x)
        feats.update(cd=cfeats["cd"], he=cfeats["he"], lle=cfeats["lle"])
    except PhonassessError as exc:
        fail(["cd", "he", "lle"], exc)

    # ---- cycles and per-block contours ----------------------------------
    try:
        cycles = detect_cycles(rec, contour)
    except PhonassessError as exc:
        cycles = None
        fail(list(JITTER_KEYS) + list(SHIMMER_KEYS) + ["gq_open_std", "gq_closed_std"], exc)

    bounds = _block_bounds(len(x), fs, params)
    if not bounds:
        bounds = [(0, len(x))]
    block_vals: dict[str, list[float]] = {}

    def push(key: str, value: float) -> None:
        block_vals.setdefault(key, []).append(float(value))

    prev_bispec = None
    for s0, s1 in bounds:
        seg = x[s0:s1]
        t0, t1 = s0 / fs, s1 / fs
        sub_contour = _slice_contour(contour, t0, t1)
        block_rec = Recording(seg, fs, rec.subject_id, rec.vowel, rec.task)

        if cycles is not None:
            sub_cycles = cycles.slice_range(s0, s1)
        else:
            sub_cycles = None

        if sub_cycles is not None:
            try:
                for k, v in phonation.jitter_features(sub_cycles).items():
                    push(k, v)
            except PhonassessError:
                pass
            try:
                for k, v in phonation.shimmer_features(sub_cycles).items():
                    push(k, v)
            except PhonassessError:
                pass
            try:
                gqo, gqc = phonation.glottal_quotient_stds(sub_cycles)
                push("gq_open_std", gqo)
                push("gq_closed_std", gqc)
            except PhonassessError:
                pass

        try:
            block_frames = frame_array(seg, fs, int(params.frame_ms * fs / 1000),
                                       int(params.hop_ms * fs / 1000), "hann")
            cpp, pecm, vr = quality.cepstral_quality(block_frames, sub_contour)
            push("cpp", cpp)
            push("pecm", pecm)
            push("vr", vr)
        except PhonassessError:
            pass

        try:
            hnr, nhr, nne, gne, spi, vti, ssd = quality.noise_measures(block_rec, sub_contour)
            for k, v in zip(("hnr", "nhr", "nne", "gne", "spi", "vti", "ssd"),
                            (hnr, nhr, nne, gne, spi, vti, ssd)):
                push(k, v)
        except PhonassessError:
            pass

        try:
            bframes = frame_array(seg, fs, highorder.NFFT, highorder.NFFT // 2, "hann")
            est = highorder.estimate_bispectrum(bframes)
            for k, v in highorder.bispectral_features(est).items():
                push(f"bis_{k}", v)
            for k, v in highorder.bicepstral_features(est, prev_bispec).items():
                if not np.isnan(v):
                    push(f"bic_{k}", v)
            prev_bispec = est
        except PhonassessError:
            prev_bispec = None

        try:
            block_emb = nonlinear.embed(seg, nonlinear.EMBED_DIM, tau)
            for k, v in nonlinear.entropy_features(seg, block_emb).items():
                push(k, v)
            push("fd", nonlinear.katz_fd(seg))
            push("zl", nonlinear.normalized_lempel_ziv(seg))
        except PhonassessError:
            pass

    for entry in REGISTRY:
        if entry.kind != "contour" or entry.name in feats:
            continue
        vals = block_vals.get(entry.name)
        if vals:
            feats[entry.name] = np.asarray(vals)
        else:
            feats[entry.name] = np.array([np.nan])
            failures.setdefault(entry.name, "no block produced a value")

    # cross-vowel features are assembled at the table level from the corner
    # vowels of the same task; placeholders keep the registry contract whole
    for entry in REGISTRY:
        if entry.cross_vowel:
            feats.setdefault(entry.name, float("nan"))

    return ExtractionResult(features=feats, failures=failures)
