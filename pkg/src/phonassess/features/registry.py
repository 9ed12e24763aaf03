"""Canonical feature registry: every extractor output, registered once.

Vector-valued entries (kind='contour') come either from short-time frames
(f0, energies, formants) or from 500 ms analysis blocks (perturbation,
noise, high-order and entropy measures evaluated per block), and are later
reduced to five summary statistics each; scalars pass through. This
reconstruction yields ~370 columns per vowel.

Flags: scale_invariant marks features unchanged under global amplitude
scaling (property-tested); cross_vowel marks per-task features computed from
the [a], [i], [u] corner vowels; approximated marks acoustic proxies for
measures that would need instrumentation; provisional marks definitions
taken from the specialist literature whose exact parameters are configurable
(see definition_version and docs/features.md).
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass

SUMMARY_STATS = ("median", "std", "p1", "p99", "ir")


@dataclass(frozen=True)
class FeatureEntry:
    name: str
    group: int
    kind: str  # "scalar" | "contour"
    scale_invariant: bool = True
    cross_vowel: bool = False
    approximated: bool = False
    provisional: bool = False
    configurable: bool = False
    definition_version: int = 1


def _e(name, group, kind, **kw) -> FeatureEntry:
    return FeatureEntry(name=name, group=group, kind=kind, **kw)


REGISTRY: list[FeatureEntry] = [
    # group 1: phonation
    _e("f0", 1, "contour"),
    _e("jitter_local", 1, "contour"),
    _e("jitter_abs", 1, "contour"),
    _e("jitter_rap", 1, "contour"),
    _e("jitter_ppq5", 1, "contour"),
    _e("jitter_ddp", 1, "contour"),
    _e("shimmer_local", 1, "contour"),
    _e("shimmer_db", 1, "contour"),
    _e("shimmer_apq3", 1, "contour"),
    _e("shimmer_apq5", 1, "contour"),
    _e("shimmer_apq11", 1, "contour"),
    _e("shimmer_dda", 1, "contour"),
    _e("gq_open_std", 1, "contour", approximated=True),
    _e("gq_closed_std", 1, "contour", approximated=True),
    _e("energy", 1, "contour", scale_invariant=False),
    _e("tkeo", 1, "contour", scale_invariant=False),
    _e("ppe", 1, "scalar"),
    _e("me_4hz", 1, "scalar"),
    _e("mpsd", 1, "scalar", scale_invariant=False),
    _e("lster", 1, "scalar"),
    # group 2: articulation
    _e("f1", 2, "contour"),
    _e("f2", 2, "contour"),
    _e("f3", 2, "contour"),
    _e("bw1", 2, "contour"),
    _e("bw2", 2, "contour"),
    _e("bw3", 2, "contour"),
    _e("vsa", 2, "scalar", cross_vowel=True),
    _e("ln_vsa", 2, "scalar", cross_vowel=True),
    _e("fcr", 2, "scalar", cross_vowel=True),
    _e("vai", 2, "scalar", cross_vowel=True),
    _e("f2i_f2u", 2, "scalar", cross_vowel=True),
    # group 3: voice quality
    _e("zcr", 3, "contour"),
    _e("sf", 3, "contour"),
    _e("cpp", 3, "contour"),
    _e("pecm", 3, "contour", provisional=True),
    _e("vr", 3, "contour", provisional=True),
    _e("hnr", 3, "contour"),
    _e("nhr", 3, "contour"),
    _e("nne", 3, "contour", provisional=True),
    _e("gne", 3, "contour"),
    _e("spi", 3, "contour", provisional=True),
    _e("vti", 3, "contour", provisional=True),
    _e("ssd", 3, "contour", provisional=True),
    _e("hzcrr", 3, "scalar"),
    _e("fluf", 3, "scalar"),
    _e("sdbm", 3, "scalar", provisional=True),
    _e("sdbp", 3, "scalar", provisional=True),
    _e("mser", 3, "scalar", provisional=True),
    _e("mfp", 3, "scalar"),
    _e("rphm", 3, "scalar", provisional=True),
    _e("icer", 3, "scalar", provisional=True),
    _e("rphic", 3, "scalar", provisional=True),
    # group 4: bispectrum / bicepstrum (per analysis block)
    _e("bis_bii", 4, "contour", configurable=True),
    _e("bis_hfeb", 4, "contour", configurable=True),
    _e("bis_lfeb", 4, "contour", configurable=True),
    _e("bis_bmii", 4, "contour", configurable=True, provisional=True),
    _e("bis_bpii", 4, "contour", configurable=True, provisional=True),
    _e("bis_lsber", 4, "contour", configurable=True, scale_invariant=False),
    _e("bis_hsber", 4, "contour", configurable=True, scale_invariant=False),
    _e("bic_bcii", 4, "contour", configurable=True, provisional=True),
    _e("bic_hfebc", 4, "contour", configurable=True, provisional=True),
    _e("bic_lfebc", 4, "contour", configurable=True, provisional=True),
    _e("bic_cmii", 4, "contour", configurable=True, provisional=True),
    _e("bic_bcpii", 4, "contour", configurable=True, provisional=True),
    _e("bic_lcbcer", 4, "contour", configurable=True, provisional=True),
    _e("bic_hcbcer", 4, "contour", configurable=True, provisional=True),
    _e("bic_bcmd", 4, "contour", configurable=True, provisional=True),
    _e("bic_bcpd", 4, "contour", configurable=True, provisional=True),
    # group 5: empirical mode decomposition
    _e("imf_snr_tkeo", 5, "scalar", configurable=True),
    _e("imf_snr_seo", 5, "scalar", configurable=True),
    _e("imf_snr_se", 5, "scalar", configurable=True),
    _e("imf_snr_re", 5, "scalar", configurable=True),
    _e("imf_snr_zcr", 5, "scalar", configurable=True),
    _e("imf_nsr_tkeo", 5, "scalar", configurable=True),
    _e("imf_nsr_seo", 5, "scalar", configurable=True),
    _e("imf_nsr_se", 5, "scalar", configurable=True),
    _e("imf_nsr_re", 5, "scalar", configurable=True),
    _e("imf_fd", 5, "scalar", scale_invariant=False),
    _e("imf_cpp", 5, "scalar"),
    _e("imf_gne", 5, "scalar"),
    # group 6: nonlinear dynamics (entropies per analysis block)
    _e("she", 6, "contour"),
    _e("re", 6, "contour"),
    _e("ce", 6, "contour", provisional=True),
    _e("rbe1", 6, "contour", provisional=True),
    _e("rbe2", 6, "contour", provisional=True),
    _e("ae", 6, "contour"),
    _e("se_k1", 6, "contour", provisional=True),
    _e("se_k2", 6, "contour", provisional=True),
    _e("se_k3", 6, "contour", provisional=True),
    _e("se_k4", 6, "contour", provisional=True),
    _e("se_k5", 6, "contour", provisional=True),
    _e("se_k6", 6, "contour", provisional=True),
    _e("se_k7", 6, "contour", provisional=True),
    _e("se_k8", 6, "contour", provisional=True),
    _e("pe", 6, "contour"),
    _e("fd", 6, "contour"),
    _e("zl", 6, "contour"),
    _e("cd", 6, "scalar"),
    _e("he", 6, "scalar"),
    _e("lle", 6, "scalar"),
    _e("fmmi", 6, "scalar"),
]

_BY_NAME = {e.name: e for e in REGISTRY}
if len(_BY_NAME) != len(REGISTRY):
    raise RuntimeError("duplicate feature names in registry")


def entry(name: str) -> FeatureEntry:
    return _BY_NAME[name]


def registry_names() -> list[str]:
    return [e.name for e in REGISTRY]


def column_names(include_cross_vowel: bool = True) -> list[str]:
    """Matrix column names after contour summarization, in registry order."""
    cols: list[str] = []
    for e in REGISTRY:
        if e.cross_vowel and not include_cross_vowel:
            continue
        if e.kind == "contour":
            cols.extend(f"{e.name}_{stat}" for stat in SUMMARY_STATS)
        else:
            cols.append(e.name)
    return cols


def per_vowel_width() -> int:
    return len(column_names())


def to_json(path) -> None:
    with open(path, "w") as fh:
        json.dump([asdict(e) for e in REGISTRY], fh, indent=1)
