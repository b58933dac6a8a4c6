"""Multilevel orthogonal discrete wavelet transform (periodized).

Implements the classic pyramid algorithm with compactly supported
Daubechies filters and periodic boundary handling, which keeps the
transform orthonormal: coefficient energy equals signal energy and
reconstruction is exact to machine precision.  Inputs whose length is not
a multiple of ``2**levels`` are zero-padded internally; the original
length is stored and restored on reconstruction.

Band numbering is 1-based and frequency-ascending: band 1 is the level-L
approximation (0 .. fs/2**(L+1)), band k >= 2 is the detail at level
L + 2 - k, so the last band is the finest detail (fs/4 .. fs/2).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgumentError

# Daubechies scaling filters (orthonormal, sum = sqrt(2)), computed by
# spectral factorization at 60-digit precision and rounded to float64.
SCALING_FILTERS: dict[str, tuple[float, ...]] = {
    "db2": (
        -0.12940952255126038,
        0.22414386804201338,
        0.8365163037378079,
        0.48296291314453414,
    ),
    "db4": (
        -0.010597401785069032,
        0.0328830116668852,
        0.030841381835560764,
        -0.18703481171909308,
        -0.027983769416859854,
        0.6308807679298589,
        0.7148465705529156,
        0.2303778133088965,
    ),
    "db6": (
        -0.0010773010853084796,
        0.0047772575109455106,
        0.0005538422011614961,
        -0.03158203931748603,
        0.027522865530305727,
        0.09750160558732304,
        -0.12976686756726194,
        -0.22626469396543982,
        0.3152503517091976,
        0.7511339080210954,
        0.4946238903984531,
        0.11154074335010946,
    ),
    "db8": (
        -0.00011747678412476953,
        0.0006754494064505694,
        -0.00039174037337694705,
        -0.004870352993451574,
        0.008746094047405777,
        0.013981027917398282,
        -0.04408825393079475,
        -0.017369301001807546,
        0.12874742662047846,
        0.0004724845739132828,
        -0.28401554296154693,
        -0.015829105256349306,
        0.5853546836542067,
        0.6756307362972898,
        0.31287159091429997,
        0.05441584224310401,
    ),
}


def filter_pair(family: str) -> tuple[np.ndarray, np.ndarray]:
    """Scaling (lowpass) and wavelet (highpass) analysis filters."""
    try:
        lo = np.asarray(SCALING_FILTERS[family], dtype=np.float64)
    except KeyError:
        raise InvalidArgumentError(
            f"unknown wavelet family {family!r}; choose one of {sorted(SCALING_FILTERS)}"
        ) from None
    # quadrature mirror: g[n] = (-1)^n h[L-1-n]
    hi = lo[::-1].copy()
    hi[1::2] *= -1.0
    return lo, hi


@dataclass(frozen=True)
class WaveletConfig:
    """Decomposition settings.

    ``selected_bands`` (1-based, ascending frequency; see module docstring)
    names the bands kept by default when a band-limited reconstruction is
    requested.  The defaults place the 5 MHz receiver passband inside bands
    2-3 for a 100 MHz sample rate and 4 levels (3.1-12.5 MHz).
    """

    family: str = "db4"
    levels: int = 4
    selected_bands: tuple[int, ...] = (2, 3)

    def __post_init__(self):
        if self.family not in SCALING_FILTERS:
            raise InvalidArgumentError(f"unknown wavelet family {self.family!r}")
        if self.levels < 1:
            raise InvalidArgumentError(f"levels must be >= 1, got {self.levels}")
        bands = tuple(sorted(set(int(b) for b in self.selected_bands)))
        if not bands:
            raise InvalidArgumentError("selected_bands must be nonempty")
        if bands[0] < 1 or bands[-1] > self.levels + 1:
            raise InvalidArgumentError(
                f"selected_bands must lie in [1, {self.levels + 1}], got {bands}"
            )
        object.__setattr__(self, "selected_bands", bands)

    @property
    def num_bands(self) -> int:
        return self.levels + 1

    def band_edges_hz(self, sample_rate: float) -> list[tuple[float, float]]:
        """Nominal (flat ideal) frequency span of each band, ascending."""
        nyq = sample_rate / 2.0
        edges = [(0.0, nyq / 2**self.levels)]
        for level in range(self.levels, 0, -1):
            lo = nyq / 2**level
            edges.append((lo, 2 * lo))
        return edges


@dataclass(frozen=True)
class WaveletBands:
    """Coefficient pyramid: ``coeffs[0]`` is the approximation at the
    deepest level, then details from coarsest to finest (band order)."""

    coeffs: tuple[np.ndarray, ...]
    family: str
    levels: int
    length: int  # original signal length
    padded_length: int = field(default=0)

    @property
    def num_bands(self) -> int:
        return len(self.coeffs)

    def energy(self) -> float:
        return float(sum(np.sum(c * c) for c in self.coeffs))


def _analysis_step(x: np.ndarray, filt: np.ndarray) -> np.ndarray:
    """One periodized filter-and-decimate pass; len(x) must be even."""
    # np.resize tiles cyclically, handling signals shorter than the filter
    wrapped = np.resize(x, len(x) + len(filt) - 1)
    # correlation: y[k] = sum_n filt[n] x[(2k + n) mod N]
    return np.convolve(wrapped, filt[::-1], mode="valid")[::2]


def _fold_periodic(full: np.ndarray, n: int) -> np.ndarray:
    """Wrap a linear convolution onto period ``n``: out[i % n] += full[i]."""
    pad = -len(full) % n
    if pad:
        full = np.concatenate([full, np.zeros(pad)])
    return full.reshape(-1, n).sum(axis=0)


def _synthesis_step(approx: np.ndarray, detail: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Inverse of :func:`_analysis_step` for an orthonormal pair."""
    n = 2 * len(approx)
    out = np.zeros(n)
    for coeffs, filt in ((approx, lo), (detail, hi)):
        up = np.zeros(n)
        up[::2] = coeffs
        out += _fold_periodic(np.convolve(up, filt), n)
    return out


def dwt_decompose(signal: np.ndarray, cfg: WaveletConfig) -> WaveletBands:
    """Decompose a 1-D signal into ``levels`` detail bands + 1 approximation.

    Requires ``len(signal) >= 2**levels``; shorter inputs are rejected.
    """
    x = np.asarray(signal, dtype=np.float64)
    if x.ndim != 1:
        raise InvalidArgumentError(f"signal must be 1-D, got shape {x.shape}")
    n = len(x)
    block = 2**cfg.levels
    if n < block:
        raise InvalidArgumentError(
            f"signal of length {n} too short for {cfg.levels} levels (need >= {block})"
        )
    padded = -(-n // block) * block
    if padded != n:
        x = np.concatenate([x, np.zeros(padded - n)])

    lo, hi = filter_pair(cfg.family)
    details: list[np.ndarray] = []
    approx = x
    for _ in range(cfg.levels):
        details.append(_analysis_step(approx, hi))
        approx = _analysis_step(approx, lo)
    coeffs = (approx, *reversed(details))  # ascending frequency
    return WaveletBands(coeffs=coeffs, family=cfg.family, levels=cfg.levels,
                        length=n, padded_length=padded)


def reconstruct_bands(bands: WaveletBands, selected: tuple[int, ...] | set[int] | None = None) -> np.ndarray:
    """Inverse transform keeping only ``selected`` bands (1-based).

    ``None`` keeps every band (identity reconstruction).  The operation is
    linear in the coefficients, so summing single-band reconstructions over
    all bands recovers the full inverse.
    """
    if selected is None:
        keep = set(range(1, bands.num_bands + 1))
    else:
        keep = {int(b) for b in selected}
        if not keep:
            raise InvalidArgumentError("selected bands must be nonempty")
        bad = [b for b in keep if b < 1 or b > bands.num_bands]
        if bad:
            raise InvalidArgumentError(
                f"band indices {sorted(bad)} outside [1, {bands.num_bands}]"
            )

    lo, hi = filter_pair(bands.family)
    approx = bands.coeffs[0] if 1 in keep else np.zeros_like(bands.coeffs[0])
    # coeffs[1] is the coarsest detail (level L), coeffs[-1] the finest (level 1)
    for i in range(1, bands.num_bands):
        detail = bands.coeffs[i]
        if (i + 1) not in keep:
            detail = np.zeros_like(detail)
        approx = _synthesis_step(approx, detail, lo, hi)
    return approx[: bands.length]
