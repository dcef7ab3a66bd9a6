"""Uniform-grid profiles, Fourier transforms, multipliers and Sobolev norms.

Two geometries are supported.

circle
    The circle of period 1 with samples at ``x_j = j/n``.  The Fourier
    coefficients are ``q^(xi) = int_0^1 exp(-i xi x) q(x) dx`` for
    ``xi in 2 pi Z``, so on the grid ``q^ = fft(q) / n``.
line
    A truncated line, realized as the periodic box ``[-L, L)`` with samples
    at ``x_j = -L + 2 L j / n``.  The transform carries the factor
    ``1/sqrt(2 pi)`` and lives on ``xi in (pi/L) Z``; norms are integrals,
    approximated by sums times ``d xi = pi / L``.

Spectra are stored in numpy FFT order (``xi = 0`` first).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np

from .errors import ConfigurationError, UsageError

CIRCLE = "circle"
LINE = "line"
GEOMETRIES = (CIRCLE, LINE)

BOUNDARY_TOL = 1e-10
BOUNDARY_FRACTION = 0.05


class DecayWarning(UserWarning):
    """A line profile does not decay at the edges of its box."""


def _check_n(n):
    if n < 2 or n & (n - 1):
        raise ConfigurationError(f"grid size must be a power of two, got {n}")


def frequencies(n, geometry=CIRCLE, length=1.0):
    """Angular frequencies of an ``n``-point grid in FFT order."""
    _check_n(n)
    return 2 * np.pi * np.fft.fftfreq(n, d=length / n)


@dataclass(frozen=True)
class SobolevIndex:
    """Exponent ``s`` and weight ``kappa`` of the norm with symbol (4 kappa^2 + xi^2)^s."""

    s: float
    kappa: float = 1.0

    def __post_init__(self):
        if not self.kappa >= 1:
            raise ConfigurationError(f"Sobolev weight kappa must be >= 1, got {self.kappa}")

    def weight(self, xi):
        return (4 * self.kappa**2 + np.asarray(xi) ** 2) ** self.s


@dataclass(frozen=True, eq=False)
class Profile:
    """Real samples of a wave profile on a uniform periodic grid.

    ``length`` is the full period: 1 on the circle and ``2 L`` for a line
    box ``[-L, L)``.  Samples are authoritative; the spectrum is a cached
    view computed on first access.
    """

    samples: np.ndarray
    geometry: str = CIRCLE
    length: float = 1.0
    boundary_tol: float = field(default=BOUNDARY_TOL, repr=False)
    warn_decay: bool = field(default=True, repr=False)

    def __post_init__(self):
        if self.geometry not in GEOMETRIES:
            raise ConfigurationError(f"unknown geometry {self.geometry!r}")
        arr = np.array(self.samples, dtype=float)
        if arr.ndim != 1:
            raise ConfigurationError("samples must be one-dimensional")
        _check_n(arr.size)
        if not np.all(np.isfinite(arr)):
            raise ConfigurationError("samples must be finite")
        if self.geometry == CIRCLE and self.length != 1.0:
            raise ConfigurationError("circle profiles have period 1")
        if not self.length > 0:
            raise ConfigurationError("box length must be positive")
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)
        object.__setattr__(self, "length", float(self.length))
        if self.warn_decay and self.geometry == LINE and not self.decays:
            warnings.warn(
                f"line profile exceeds {self.boundary_tol:g} near the box edges; "
                "box truncation may degrade accuracy",
                DecayWarning,
                stacklevel=3,
            )

    # constructors -------------------------------------------------------
    @classmethod
    def circle(cls, samples):
        return cls(samples, CIRCLE, 1.0)

    @classmethod
    def line(cls, samples, half_width):
        return cls(samples, LINE, 2.0 * half_width)

    @classmethod
    def from_function(cls, func, n, geometry=CIRCLE, half_width=None):
        """Sample ``func`` on the grid of the requested geometry."""
        if geometry == CIRCLE:
            length = 1.0
        else:
            if half_width is None:
                raise ConfigurationError("line geometry needs half_width")
            length = 2.0 * half_width
        x = grid(n, geometry, length)
        return cls(np.asarray(func(x), dtype=float) * np.ones(n), geometry, length)

    def with_samples(self, samples, warn_decay=False):
        """A profile on the same grid with new samples.

        Derived quantities such as g do not decay, so the edge guard is off
        unless requested.
        """
        return Profile(samples, self.geometry, self.length, self.boundary_tol, warn_decay)

    # grid ---------------------------------------------------------------
    @property
    def n(self):
        return self.samples.size

    @property
    def half_width(self):
        return self.length / 2

    @property
    def left(self):
        return 0.0 if self.geometry == CIRCLE else -self.length / 2

    @property
    def dx(self):
        return self.length / self.n

    @property
    def x(self):
        return grid(self.n, self.geometry, self.length)

    @cached_property
    def xi(self):
        return frequencies(self.n, self.geometry, self.length)

    @property
    def dxi(self):
        """Frequency spacing; 1 on the circle where norms are plain sums."""
        return 1.0 if self.geometry == CIRCLE else 2 * np.pi / self.length

    @cached_property
    def coefficients(self):
        """Box Fourier coefficients ``fft(samples)/n`` (no geometry factors)."""
        return np.fft.fft(self.samples) / self.n

    @cached_property
    def spectrum(self):
        return transform(self)

    @cached_property
    def decays(self):
        if self.geometry == CIRCLE:
            return True
        edge = max(1, int(math.ceil(BOUNDARY_FRACTION * self.n)))
        rim = np.concatenate([self.samples[:edge], self.samples[-edge:]])
        return bool(np.max(np.abs(rim)) < self.boundary_tol)

    # quadrature ---------------------------------------------------------
    def integral(self):
        """Integral over one period (trapezoid rule, spectrally exact)."""
        return float(np.sum(self.samples) * self.dx)

    def mean(self):
        return float(np.mean(self.samples))

    def __add__(self, other):
        return self.with_samples(self.samples + _samples(other))

    def __sub__(self, other):
        return self.with_samples(self.samples - _samples(other))

    def __mul__(self, scalar):
        return self.with_samples(self.samples * float(scalar))

    __rmul__ = __mul__

    def __neg__(self):
        return self.with_samples(-self.samples)

    # serialization -----------------------------------------------------
    def to_json_dict(self):
        return {
            "geometry": self.geometry,
            "n": self.n,
            "length": self.length,
            "samples": self.samples.tolist(),
        }

    @classmethod
    def from_json_dict(cls, data):
        unknown = set(data) - {"geometry", "n", "length", "samples"}
        if unknown:
            raise ConfigurationError(f"unknown profile keys: {sorted(unknown)}")
        try:
            samples = data["samples"]
            geometry = data.get("geometry", CIRCLE)
            length = data.get("length", 1.0)
        except (KeyError, TypeError) as exc:
            raise ConfigurationError(f"malformed profile: {exc}") from exc
        if "n" in data and int(data["n"]) != len(samples):
            raise ConfigurationError("profile n does not match the number of samples")
        return cls(samples, geometry, length)


def _samples(obj):
    return obj.samples if isinstance(obj, Profile) else obj


def grid(n, geometry=CIRCLE, length=1.0):
    """Grid points of an ``n``-point profile."""
    _check_n(n)
    left = 0.0 if geometry == CIRCLE else -length / 2
    return left + length * np.arange(n) / n


def _geometry_factor(n, geometry, length):
    if geometry == CIRCLE:
        return np.full(n, 1.0 + 0j)
    xi = frequencies(n, geometry, length)
    # (dx / sqrt(2 pi)) * exp(i xi L) with x_0 = -L
    return (length / np.sqrt(2 * np.pi)) * np.exp(1j * xi * length / 2)


def transform(p: Profile) -> np.ndarray:
    """Fourier amplitudes of ``p`` in the convention of its geometry."""
    return p.coefficients * _geometry_factor(p.n, p.geometry, p.length)


def inverse(spectrum, geometry=CIRCLE, length=1.0, realness_tol=1e-12) -> Profile:
    """Profile whose transform is ``spectrum``; the spectrum must be Hermitian."""
    spectrum = np.asarray(spectrum, dtype=complex)
    n = spectrum.size
    _check_n(n)
    coeffs = spectrum / _geometry_factor(n, geometry, length)
    values = np.fft.ifft(coeffs * n)
    scale = max(float(np.max(np.abs(values))), 1e-300)
    if np.max(np.abs(values.imag)) > realness_tol * max(scale, 1.0):
        raise UsageError("spectrum is not Hermitian-symmetric; inverse is not real")
    return Profile(values.real, geometry, length)


def is_hermitian(spectrum, geometry=CIRCLE, length=1.0, tol=1e-12):
    """Whether a spectrum corresponds to real samples."""
    coeffs = np.asarray(spectrum) / _geometry_factor(len(spectrum), geometry, length)
    mirrored = np.conj(np.roll(coeffs[::-1], 1))
    return bool(np.max(np.abs(coeffs - mirrored)) <= tol * max(np.max(np.abs(coeffs)), 1.0))


def sobolev_norm(p: Profile, idx: SobolevIndex, squared=True) -> float:
    """The H^s_kappa norm over the represented frequencies.

    Returns the squared norm by default, which is the quantity the closed
    forms are usually stated for.
    """
    total = float(np.sum(np.abs(p.spectrum) ** 2 * idx.weight(p.xi)) * p.dxi)
    return total if squared else math.sqrt(total)


def h_minus1_norm(p: Profile, kappa=1.0) -> float:
    """The (unsquared) H^{-1}_kappa norm."""
    return sobolev_norm(p, SobolevIndex(-1.0, kappa), squared=False)


def tail_mass(p: Profile, s: float, cutoff: float) -> float:
    """Sum of |q^|^2 (xi^2 + 4)^s over |xi| >= cutoff."""
    xi = p.xi
    mask = np.abs(xi) >= cutoff
    return float(np.sum(np.abs(p.spectrum[mask]) ** 2 * (xi[mask] ** 2 + 4.0) ** s) * p.dxi)


def symbol_values(m: Callable, xi: np.ndarray) -> np.ndarray:
    """Evaluate a symbol on an FFT-ordered grid, made Hermitian at Nyquist.

    The Nyquist bin represents both +xi_N and -xi_N, so it receives the
    real part of the symbol; this kills odd symbols there, as usual.
    """
    vals = np.asarray(m(xi), dtype=complex) * np.ones(xi.shape)
    n = xi.size
    if n % 2 == 0:
        vals[n // 2] = vals[n // 2].real
    return vals


def multiplier_apply(p: Profile, m: Callable) -> Profile:
    """Apply the Fourier multiplier with symbol ``m``."""
    coeffs = p.coefficients * symbol_values(m, p.xi)
    values = np.fft.ifft(coeffs) * p.n
    scale = max(float(np.max(np.abs(values))), 1.0)
    if np.max(np.abs(values.imag)) > 1e-10 * scale:
        raise UsageError("symbol is not Hermitian; multiplier output is not real")
    return p.with_samples(values.real)


def derivative(p: Profile, order=1) -> Profile:
    """Spectral derivative of ``p``."""
    return multiplier_apply(p, lambda xi: (1j * xi) ** order)


def smoothing_symbol(kappa):
    """Symbol of f -> (1/2) int exp(-2 kappa |x - y|) f(y) dy."""
    return lambda xi: 2 * kappa / (xi**2 + 4 * kappa**2)


# ---------------------------------------------------------------------------
# Dealiased pseudo-spectral helpers on raw sample arrays.  These are used by
# the residual checks and the flows; all of them work in box coordinates,
# where only the period matters.


def padded(values: np.ndarray, factor=2) -> np.ndarray:
    """Trigonometric interpolation of ``values`` onto a grid ``factor`` times finer."""
    n = values.size
    coeffs = np.fft.rfft(values)
    coeffs[-1] *= 0.5 if n % 2 == 0 else 1.0
    return np.fft.irfft(coeffs, n * factor) * factor


def truncated(values: np.ndarray, n: int) -> np.ndarray:
    """Project fine-grid samples onto the modes |k| < n/2 of an ``n``-point grid."""
    m = values.size
    coeffs = np.fft.rfft(values)[: n // 2 + 1] * (n / m)
    coeffs[-1] = 0.0
    return np.fft.irfft(coeffs, n)


def product(*arrays: np.ndarray) -> np.ndarray:
    """Dealiased pointwise product of sample arrays, by zero-padding to 2n."""
    n = arrays[0].size
    fine = np.ones(2 * n)
    for arr in arrays:
        fine = fine * padded(np.asarray(arr, dtype=float))
    return truncated(fine, n)


def spectral_diff(values: np.ndarray, length: float, order=1) -> np.ndarray:
    """Spectral derivative of a real sample array of the given period."""
    n = values.size
    k = 2 * np.pi * np.fft.rfftfreq(n, d=length / n)
    sym = (1j * k) ** order
    if n % 2 == 0:
        sym[-1] = sym[-1].real
    return np.fft.irfft(np.fft.rfft(values) * sym, n)


def apply_symbol(values: np.ndarray, length: float, m: Callable) -> np.ndarray:
    """Apply a real-even or Hermitian symbol to a real sample array."""
    n = values.size
    k = 2 * np.pi * np.fft.rfftfreq(n, d=length / n)
    sym = np.asarray(m(k), dtype=complex) * np.ones(k.shape)
    if n % 2 == 0:
        sym[-1] = sym[-1].real
    return np.fft.irfft(np.fft.rfft(values) * sym, n)


def l2_norm(values: np.ndarray, length: float) -> float:
    """L^2 norm of a sample array over one period."""
    return math.sqrt(float(np.sum(values**2)) * length / values.size)


def box_sobolev_norm(values: np.ndarray, length: float, s: float, geometry=CIRCLE) -> float:
    """Unsquared H^s norm (kappa = 1) of a raw sample array."""
    p = Profile(values, geometry, length, warn_decay=False)
    return sobolev_norm(p, SobolevIndex(s, 1.0), squared=False)
