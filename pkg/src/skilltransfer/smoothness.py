"""Spectral arc length (SPARC) smoothness of a speed profile.

SPARC is the negative arc length of the DC-normalized Fourier magnitude
spectrum, traced over frequency normalized by an adaptively chosen cutoff.
Values are negative; closer to zero means smoother.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .trajectory import SpeedProfile


@dataclass(frozen=True)
class SparcConfig:
    max_cutoff_hz: float = 20.0
    amplitude_threshold: float = 0.05
    zero_pad_factor: int = 4

    def __post_init__(self):
        if not self.max_cutoff_hz > 0:
            raise ValueError("max_cutoff_hz must be > 0")
        if not 0 < self.amplitude_threshold < 1:
            raise ValueError("amplitude_threshold must be in (0, 1)")
        if int(self.zero_pad_factor) != self.zero_pad_factor or self.zero_pad_factor < 1:
            raise ValueError("zero_pad_factor must be an integer >= 1")


@dataclass(frozen=True, eq=False)
class Spectrum:
    """DC-normalized magnitude spectrum from 0 Hz to Nyquist."""

    freqs: np.ndarray
    magnitude: np.ndarray

    def __len__(self):
        return self.freqs.size

    def pairs(self) -> list[tuple[float, float]]:
        return list(zip(self.freqs.tolist(), self.magnitude.tolist()))


@dataclass(frozen=True, eq=False)
class SparcResult:
    sparc: float
    cutoff_hz: float
    spectrum: Spectrum


def fft_length(n: int, zero_pad_factor: int) -> int:
    """``zero_pad_factor`` times the next power of two >= ``n``."""
    return int(zero_pad_factor) * (1 << max(0, int(n - 1).bit_length()))


def magnitude_spectrum(profile: SpeedProfile, cfg: SparcConfig = SparcConfig()) -> Spectrum:
    nfft = fft_length(len(profile), cfg.zero_pad_factor)
    mag = np.abs(np.fft.rfft(profile.speed, nfft))
    if mag[0] == 0.0:
        raise ValueError("zero DC magnitude: spectrum normalization undefined")
    freqs = np.fft.rfftfreq(nfft, profile.dt)
    return Spectrum(freqs, mag / mag[0])


def select_cutoff(spectrum: Spectrum, cfg: SparcConfig = SparcConfig()) -> float:
    """Frequency of the last bin <= ``max_cutoff_hz`` whose magnitude reaches the threshold.

    Falls back to the first bin after DC when nothing beyond DC qualifies.
    """
    in_band = spectrum.freqs <= cfg.max_cutoff_hz
    candidates = np.flatnonzero(in_band & (spectrum.magnitude >= cfg.amplitude_threshold))
    candidates = candidates[candidates > 0]
    if candidates.size == 0:
        return float(spectrum.freqs[1])
    return float(spectrum.freqs[candidates[-1]])


def arc_length(freqs: np.ndarray, magnitude: np.ndarray, cutoff_hz: float) -> float:
    """Chord-sum length of the curve ``(f / cutoff, magnitude)`` over ``f <= cutoff``."""
    sel = freqs <= cutoff_hz
    df = np.diff(freqs[sel]) / cutoff_hz
    dm = np.diff(magnitude[sel])
    return float(np.sum(np.sqrt(df * df + dm * dm)))


def sparc(profile: SpeedProfile, cfg: SparcConfig = SparcConfig()) -> SparcResult:
    spectrum = magnitude_spectrum(profile, cfg)
    cutoff = select_cutoff(spectrum, cfg)
    return SparcResult(-arc_length(spectrum.freqs, spectrum.magnitude, cutoff), cutoff, spectrum)
