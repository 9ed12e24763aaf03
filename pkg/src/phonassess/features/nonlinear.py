"""Nonlinear-dynamics features over delay-embedded phase space.

The pairwise estimators (correlation dimension, correlation entropy,
Lyapunov, approximate/sample entropy) are O(N^2); inputs are capped to a
centered contiguous window and all of them share one |x_i - x_j| base
matrix, from which the Chebyshev distance of m-dimensional delay vectors is
a running maximum over shifted submatrices. Caps are deterministic, so every
estimator is bit-reproducible for fixed parameters.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InsufficientSignalError

HIST_BINS = 64
MI_BINS = 16
MI_FLAT = 0.1  # nats; below this at lag 1 the samples are already independent
EMBED_DIM = 3
PAIR_CAP = 1200
ENTROPY_CAP = 1000


@dataclass
class Embedding:
    dimension: int
    delay: int
    trajectory: np.ndarray  # (points, dimension)

    def __post_init__(self):
        if self.trajectory.shape[0] <= 0:
            raise InsufficientSignalError("empty delay embedding")


def embed(x: np.ndarray, m: int = EMBED_DIM, tau: int = 1) -> Embedding:
    x = np.asarray(x, dtype=np.float64)
    n = len(x) - (m - 1) * tau
    if n <= 0:
        raise InsufficientSignalError("signal too short for this embedding")
    traj = np.column_stack([x[i * tau : i * tau + n] for i in range(m)])
    return Embedding(dimension=m, delay=tau, trajectory=traj)


def _cap_window(x: np.ndarray, cap: int) -> np.ndarray:
    if len(x) <= cap:
        return x
    start = (len(x) - cap) // 2
    return x[start : start + cap]


def _abs_diff(x: np.ndarray) -> np.ndarray:
    return np.abs(x[:, None] - x[None, :])


def _embed_cheb(base: np.ndarray, n_points: int, m: int, tau: int) -> np.ndarray:
    """Chebyshev distances of m-dim delay vectors from the scalar base matrix."""
    d = base[:n_points, :n_points].copy()
    for k in range(1, m):
        off = k * tau
        np.maximum(d, base[off : off + n_points, off : off + n_points], out=d)
    return d


# ---------------------------------------------------------------------------
# delay selection

def _mi_bin_indices(x: np.ndarray, bins: int) -> np.ndarray:
    """Equiprobable-bin index of every sample (marginal quantile bins)."""
    edges = np.quantile(x, np.linspace(0.0, 1.0, bins + 1)[1:-1])
    return np.searchsorted(edges, x, side="right")


def _mutual_information(x: np.ndarray, lag: int, bins: int = MI_BINS,
                        idx: np.ndarray | None = None) -> float:
    """Histogram MI of (x[n], x[n+lag]) with equiprobable marginal bins."""
    if idx is None:
        idx = _mi_bin_indices(x, bins)
    ia = idx[:-lag]
    ib = idx[lag:]
    joint = np.bincount(ia * bins + ib, minlength=bins * bins).reshape(bins, bins)
    total = joint.sum()
    if total == 0:
        return 0.0
    p = joint / total
    px = p.sum(axis=1, keepdims=True)
    py = p.sum(axis=0, keepdims=True)
    mask = p > 0
    return float(np.sum(p[mask] * np.log(p[mask] / (px @ py)[mask])))


MI_VALLEY_TOL = 0.02   # fraction of MI range counted as "at the minimum"
MI_VALLEY_SPAN = 6     # lags; wider near-minimal regions are ambiguous


def first_acf_zero(x: np.ndarray, max_lag: int) -> int:
    """Lag of the first non-positive autocorrelation value, or 1."""
    xm = x - x.mean()
    denom = np.sum(xm**2)
    if denom > 0:
        for lag in range(1, max_lag + 1):
            if np.dot(xm[:-lag], xm[lag:]) / denom <= 0:
                return lag
    return 1


def fmmi(x: np.ndarray, max_lag: int | None = None) -> int:
    """First minimum of the lagged mutual information.

    Rule, in order: (1) if MI(1) < 0.1 nats the dependence is already gone
    and the delay is 1 (white noise, constants). (2) Otherwise the MI curve's
    minimum, provided the near-minimal lags (within 2 % of the curve's range)
    form one tight cluster; the earliest lag of that cluster is returned.
    (3) A wide or scattered near-minimal region means the histogram estimator
    has no well-defined minimum (pure tones oscillate around a flat valley),
    and the lag of the first autocorrelation zero crossing is used instead,
    which is the quarter period for narrowband signals; failing that, 1.
    """
    x = np.asarray(x, dtype=np.float64)
    if max_lag is None:
        max_lag = min(len(x) // 4, 400)
    max_lag = min(max_lag, len(x) // 2 - 1)
    if max_lag < 3 or np.all(x == x[0]):
        return 1
    idx = _mi_bin_indices(x, MI_BINS)
    mi = np.array([_mutual_information(x, lag, idx=idx) for lag in range(1, max_lag + 1)])
    if mi[0] < MI_FLAT:
        return 1
    rng_mi = mi.max() - mi.min()
    if rng_mi > 0:
        near = np.flatnonzero(mi <= mi.min() + MI_VALLEY_TOL * rng_mi)
        if len(near) and near[-1] - near[0] <= MI_VALLEY_SPAN:
            return int(near[0]) + 1
    return first_acf_zero(x, max_lag)


# ---------------------------------------------------------------------------
# complexity measures

def katz_fd(x: np.ndarray) -> float:
    """Katz fractal dimension of the z-scored waveform (1.0 for a line)."""
    x = np.asarray(x, dtype=np.float64)
    if len(x) < 3:
        return 1.0
    sd = np.std(x)
    if sd == 0:
        return 1.0
    z = (x - np.mean(x)) / sd
    steps = np.sqrt(1.0 + np.diff(z) ** 2)
    L = steps.sum()
    n = len(z) - 1
    idx = np.arange(len(z))
    d = np.sqrt(idx**2 + (z - z[0]) ** 2).max()
    if d <= 0 or L <= 0:
        return 1.0
    return float(np.log10(n) / (np.log10(n) + np.log10(d / L)))


def lz76_count(bits: np.ndarray) -> int:
    """Number of distinct phrases in the LZ76 exhaustive parse."""
    s = bits.tolist()
    n = len(s)
    i = 0
    c = 1
    u = 1
    v = 1
    vmax = 1
    while u + v <= n:
        if s[i + v - 1] == s[u + v - 1]:
            v += 1
        else:
            vmax = max(v, vmax)
            i += 1
            if i == u:
                c += 1
                u += vmax
                i = 0
                v = 1
                vmax = 1
            else:
                v = 1
    if v != 1:
        c += 1
    return c


ZL_CAP = 4000  # bits; the normalized complexity stabilizes well before this


def normalized_lempel_ziv(x: np.ndarray) -> float:
    """LZ76 phrase count of the median-binarized signal, scaled by log2(n)/n
    so random sequences tend to 1 and periodic ones to ~0. Long signals are
    capped to a centered 4000-sample window (the parse is quadratic)."""
    x = _cap_window(np.asarray(x, dtype=np.float64), ZL_CAP)
    bits = (x > np.median(x)).astype(np.uint8)
    n = len(bits)
    if n < 2:
        return 0.0
    return float(lz76_count(bits) * np.log2(n) / n)


def hurst_exponent(x: np.ndarray) -> float:
    """Rescaled-range slope over log-spaced segment sizes."""
    x = np.asarray(x, dtype=np.float64)
    n = len(x)
    if n < 64 or np.std(x) == 0:
        return 0.5
    sizes = np.unique(np.geomspace(16, n // 4, 8).astype(int))
    log_rs, log_sz = [], []
    for size in sizes:
        m = n // size
        if m < 1:
            continue
        seg = x[: m * size].reshape(m, size)
        means = seg.mean(axis=1, keepdims=True)
        z = np.cumsum(seg - means, axis=1)
        r = z.max(axis=1) - z.min(axis=1)
        s = seg.std(axis=1)
        ok = s > 0
        if not np.any(ok):
            continue
        log_rs.append(np.log(np.mean(r[ok] / s[ok])))
        log_sz.append(np.log(size))
    if len(log_rs) < 3:
        return 0.5
    slope, _ = np.polyfit(log_sz, log_rs, 1)
    return float(slope)


def _theiler_mask_triu(n: int, theiler: int) -> tuple[np.ndarray, np.ndarray]:
    return np.triu_indices(n, k=theiler + 1)


def correlation_dimension(d_m: np.ndarray, theiler: int) -> float:
    """Grassberger-Procaccia slope of log C(r) over log r from a distance matrix."""
    i, j = _theiler_mask_triu(d_m.shape[0], theiler)
    d = d_m[i, j]
    d = d[d > 0]
    if len(d) < 10:
        return 0.0
    lo, hi = np.percentile(d, [5, 50])
    if not 0 < lo < hi:
        return 0.0
    rs = np.exp(np.linspace(np.log(lo), np.log(hi), 10))
    c = np.array([np.mean(d < r) for r in rs])
    good = c > 0
    if good.sum() < 3:
        return 0.0
    slope, _ = np.polyfit(np.log(rs[good]), np.log(c[good]), 1)
    return float(slope)


def _correlation_entropy(d_m: np.ndarray, d_m1: np.ndarray, theiler: int) -> float:
    """K2 estimate: mean ln C_m(r)/C_{m+1}(r) over the scaling region."""
    n1 = d_m1.shape[0]
    i, j = _theiler_mask_triu(n1, theiler)
    dm = d_m[:n1, :n1][i, j]
    dm1 = d_m1[i, j]
    pos = dm[dm > 0]
    if len(pos) < 10:
        return 0.0
    lo, hi = np.percentile(pos, [10, 60])
    if not 0 < lo < hi:
        return 0.0
    rs = np.exp(np.linspace(np.log(lo), np.log(hi), 6))
    vals = []
    for r in rs:
        cm = np.mean(dm < r)
        cm1 = np.mean(dm1 < r)
        if cm > 0 and cm1 > 0:
            vals.append(np.log(cm / cm1))
    return float(np.mean(vals)) if vals else 0.0


def _largest_lyapunov(d_m: np.ndarray, theiler: int, fit_len: int = 40) -> float:
    """Divergence-rate fit (nearest-neighbor method), nats per sample."""
    n = d_m.shape[0]
    if n < 100:
        raise InsufficientSignalError("trajectory too short for Lyapunov fit")
    d = d_m.copy()
    idx = np.arange(n)
    d[np.abs(idx[:, None] - idx[None, :]) <= theiler] = np.inf
    nn = np.argmin(d, axis=1)
    finite = np.isfinite(d[idx, nn])
    horizon = min(fit_len, n // 4)
    curve = []
    for k in range(horizon):
        valid = finite & (idx + k < n) & (nn + k < n)
        if valid.sum() < 10:
            break
        sep = d_m[idx[valid] + k, nn[valid] + k]
        sep = sep[sep > 0]
        if len(sep) < 10:
            break
        curve.append(np.mean(np.log(sep)))
    if len(curve) < 5:
        return 0.0
    slope, _ = np.polyfit(np.arange(len(curve)), curve, 1)
    return float(slope)


def complexity_features(emb: Embedding, x: np.ndarray) -> dict[str, float]:
    """(cd, fd, zl, he, lle) for one signal and its embedding parameters."""
    x = np.asarray(x, dtype=np.float64)
    m, tau = emb.dimension, emb.delay
    if emb.trajectory.shape[0] < 100:
        raise InsufficientSignalError("trajectory too short for complexity features")

    w = _cap_window(x, PAIR_CAP + (m - 1) * tau)
    n_pts = len(w) - (m - 1) * tau
    if n_pts < 100:
        raise InsufficientSignalError("capped trajectory too short")
    sd = np.std(w)
    base = _abs_diff(w / sd if sd > 0 else w)  # scale-free distances
    d_m = _embed_cheb(base, n_pts, m, tau)

    # mean period (samples) sets the temporal exclusion for the Lyapunov fit
    pos = x >= 0
    crossings = np.count_nonzero(pos[1:] != pos[:-1])
    theiler = max(tau, int(2 * len(x) / max(crossings, 2)))

    return {
        "cd": correlation_dimension(d_m, theiler=tau),
        "fd": katz_fd(x),
        "zl": normalized_lempel_ziv(x),
        "he": hurst_exponent(x),
        "lle": _largest_lyapunov(d_m, theiler),
    }


# ---------------------------------------------------------------------------
# entropies

SE_KERNELS = {
    "k1": lambda u: (u < 1.0).astype(float),            # Heaviside (classic)
    "k2": lambda u: np.exp(-0.5 * u**2),                # Gaussian
    "k3": lambda u: np.exp(-u),                         # exponential
    "k4": lambda u: np.maximum(0.0, 1.0 - u),           # triangular
    "k5": lambda u: np.maximum(0.0, 1.0 - u**2),        # Epanechnikov
    "k6": lambda u: np.maximum(0.0, 1.0 - u**2) ** 2,   # quartic
    "k7": lambda u: 1.0 / (1.0 + u**2),                 # Cauchy
    "k8": lambda u: np.where(u < 1.0, np.cos(0.5 * np.pi * u), 0.0),  # cosine
}


def permutation_entropy(x: np.ndarray, order: int = 3) -> float:
    """Shannon entropy (nats) of ordinal patterns; ties broken by position."""
    x = np.asarray(x, dtype=np.float64)
    n = len(x) - order + 1
    if n < 1:
        raise InsufficientSignalError("signal shorter than pattern order")
    windows = np.lib.stride_tricks.sliding_window_view(x, order)
    patterns = np.argsort(windows, axis=1, kind="stable")
    radix = order ** np.arange(order)
    codes = patterns @ radix
    _, counts = np.unique(codes, return_counts=True)
    p = counts / counts.sum()
    return float(-(p * np.log(p)).sum())


def histogram_entropies(x: np.ndarray, bins: int = HIST_BINS) -> tuple[float, float]:
    """(Shannon, order-2 Renyi) of the amplitude histogram, in nats."""
    hist, _ = np.histogram(x, bins=bins)
    total = hist.sum()
    if total == 0:
        return 0.0, 0.0
    p = hist[hist > 0] / total
    she = float(-(p * np.log(p)).sum())
    re = float(-np.log(np.sum(p**2)))
    return she, re


def renyi_block_entropies(x: np.ndarray, block: int = 3) -> tuple[float, float]:
    """Block entropies of the median-binarized sequence (orders 1 and 2)."""
    bits = (np.asarray(x, dtype=np.float64) > np.median(x)).astype(int)
    n = len(bits) - block + 1
    if n < 1:
        return 0.0, 0.0
    windows = np.lib.stride_tricks.sliding_window_view(bits, block)
    codes = windows @ (2 ** np.arange(block))
    _, counts = np.unique(codes, return_counts=True)
    p = counts / counts.sum()
    rbe1 = float(-(p * np.log(p)).sum())
    rbe2 = float(-np.log(np.sum(p**2)))
    return rbe1, rbe2


def approximate_entropy(x: np.ndarray, m: int = 2, r_factor: float = 0.2) -> float:
    """Pincus ApEn(m, 0.2 std) with self-matches, 0 for constant input."""
    x = _cap_window(np.asarray(x, dtype=np.float64), ENTROPY_CAP)
    if len(x) < 500:
        raise InsufficientSignalError("need >= 500 samples for approximate entropy")
    sd = np.std(x)
    if sd == 0:
        return 0.0
    base = _abs_diff(x)
    return _apen_from_base(base, len(x), m, r_factor * sd)


def _apen_from_base(base: np.ndarray, n: int, m: int, r: float) -> float:
    def phi(mm: int) -> float:
        cnt = n - mm + 1
        d = _embed_cheb(base, cnt, mm, 1)
        c = np.mean(d <= r, axis=1)
        return float(np.mean(np.log(c)))

    return phi(m) - phi(m + 1)


def sample_entropies(x: np.ndarray, m: int = 2, r_factor: float = 0.2) -> dict[str, float]:
    """Sample entropy under the eight kernel variants.

    se = -ln(sum K(d_{m+1}/r) / sum K(d_m/r)) over distinct template pairs;
    the Heaviside kernel recovers classic SampEn. A constant signal returns 0
    for every kernel; an empty match count falls back to the ln of the pair
    count (the conventional ceiling).
    """
    x = _cap_window(np.asarray(x, dtype=np.float64), ENTROPY_CAP)
    if len(x) < 500:
        raise InsufficientSignalError("need >= 500 samples for sample entropy")
    sd = np.std(x)
    if sd == 0:
        return {f"se_{k}": 0.0 for k in SE_KERNELS}
    base = _abs_diff(x)
    return _sampen_from_base(base, len(x), m, r_factor * sd)


def _sampen_from_base(base: np.ndarray, n: int, m: int, r: float) -> dict[str, float]:
    cnt = n - m
    d_m = _embed_cheb(base, cnt, m, 1)
    d_m1 = _embed_cheb(base, cnt, m + 1, 1)
    iu = np.triu_indices(cnt, k=1)
    um = d_m[iu] / r
    um1 = d_m1[iu] / r
    out = {}
    for name, kernel in SE_KERNELS.items():
        b = float(kernel(um).sum())
        a = float(kernel(um1).sum())
        if a <= 0 or b <= 0:
            out[f"se_{name}"] = float(np.log(max(len(um), 2)))
        else:
            out[f"se_{name}"] = float(-np.log(a / b))
    return out


def entropy_features(x: np.ndarray, emb: Embedding) -> dict[str, float]:
    """All group-6 entropy measures for one signal."""
    x = np.asarray(x, dtype=np.float64)
    if len(x) < 500:
        raise InsufficientSignalError("need >= 500 samples for entropy features")
    she, re = histogram_entropies(x)
    rbe1, rbe2 = renyi_block_entropies(x)
    out = {"she": she, "re": re, "rbe1": rbe1, "rbe2": rbe2,
           "pe": permutation_entropy(x)}

    w = _cap_window(x, ENTROPY_CAP)
    sd = np.std(w)
    if sd == 0:
        out.update({"ae": 0.0, "ce": 0.0})
        out.update({f"se_{k}": 0.0 for k in SE_KERNELS})
        return out
    base = _abs_diff(w)
    out["ae"] = _apen_from_base(base, len(w), 2, 0.2 * sd)
    out.update(_sampen_from_base(base, len(w), 2, 0.2 * sd))

    # correlation entropy on the delay embedding (shares the same window when
    # the delay permits, otherwise its own capped window)
    m, tau = emb.dimension, emb.delay
    n_m1 = len(w) - m * tau
    if n_m1 >= 100:
        d_m = _embed_cheb(base, len(w) - (m - 1) * tau, m, tau)
        d_m1 = _embed_cheb(base, n_m1, m + 1, tau)
        out["ce"] = _correlation_entropy(d_m, d_m1, theiler=tau)
    else:
        out["ce"] = 0.0
    return out
