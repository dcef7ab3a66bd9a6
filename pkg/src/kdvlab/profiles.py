"""Seeded and closed-form profile generators."""

from __future__ import annotations

import math

import numpy as np

from .errors import ConfigurationError
from .spectral import CIRCLE, LINE, Profile, grid, h_minus1_norm

DEFAULT_DECAY = 4.0
DEFAULT_BAND = 16
DEFAULT_TARGET = 0.05


def zero(n=64, geometry=CIRCLE, half_width=None) -> Profile:
    return Profile.from_function(np.zeros_like, n, geometry, half_width)


def constant(value, n=64) -> Profile:
    return Profile.circle(np.full(n, float(value)))


def soliton(c, n=512, half_width=20.0, x0=0.0, t=0.0) -> Profile:
    """KdV soliton ``-(c/2) sech^2(sqrt(c)/2 (x - x0 - c t))`` on a line box."""
    if not c > 0:
        raise ConfigurationError("soliton speed must be positive")

    def shape(x):
        return -(c / 2) / np.cosh(0.5 * math.sqrt(c) * (x - x0 - c * t)) ** 2

    return Profile.from_function(shape, n, LINE, half_width)


def gaussian(amplitude, width, n=256, half_width=20.0, center=0.0) -> Profile:
    """Gaussian bump on a line box."""
    return Profile.from_function(
        lambda x: amplitude * np.exp(-((x - center) ** 2) / (2 * width**2)), n, LINE, half_width
    )


def two_mode(n=128, amplitude=0.1) -> Profile:
    """``amplitude (cos 2 pi x + 0.5 cos 4 pi x)`` on the circle."""
    return Profile.from_function(
        lambda x: amplitude * (np.cos(2 * np.pi * x) + 0.5 * np.cos(4 * np.pi * x)), n, CIRCLE
    )


def convergence_bump() -> Profile:
    """Smooth line bump whose kappa sweep 4..32 is in the asymptotic regime.

    Its spectrum sits at |xi| of order 1, so the H_kappa and KdV flows stay in
    phase over short horizons already at kappa = 4; circle data cannot do this
    because its lowest mode is 2 pi.  n = 2048 on [-8, 8] resolves kappa = 32.
    """
    return gaussian(0.05, 1.0, n=2048, half_width=8.0)


def random_profile(
    seed,
    n=256,
    geometry=CIRCLE,
    target_norm=DEFAULT_TARGET,
    decay_exponent=DEFAULT_DECAY,
    band=DEFAULT_BAND,
    half_width=20.0,
) -> Profile:
    """Seeded smooth profile rescaled to an exact H^-1 norm.

    Circle: modes ``0 < k <= band`` with ``|q^(2 pi k)| = (1 + 2 pi k)^-p``
    and uniformly random phases.  Line: the same series on ``[-L/4, L/4]``
    times a smooth window, so it decays well inside the box.
    """
    if not target_norm >= 0 or not math.isfinite(target_norm):
        raise ConfigurationError("target norm must be a nonnegative finite number")
    rng = np.random.default_rng(np.uint64(seed))
    band = int(min(band, n // 4))
    if band < 1:
        raise ConfigurationError(f"grid n={n} cannot host a mode below the band limit")
    k = np.arange(1, band + 1)
    phases = rng.uniform(0, 2 * np.pi, band)
    if geometry == CIRCLE:
        x = grid(n, CIRCLE)
        amp = (1 + 2 * np.pi * k) ** -float(decay_exponent)
        raw = 2 * np.sum(amp[:, None] * np.cos(2 * np.pi * k[:, None] * x[None, :] + phases[:, None]), axis=0)
        q = Profile.circle(raw)
    elif geometry == LINE:
        x = grid(n, LINE, 2 * half_width)
        period = half_width / 2
        amp = (1 + 2 * np.pi * k / period) ** -float(decay_exponent)
        series = 2 * np.sum(
            amp[:, None] * np.cos(2 * np.pi * k[:, None] * x[None, :] / period + phases[:, None]), axis=0
        )
        window = np.exp(-((x / (0.15 * half_width)) ** 2))
        q = Profile.line(series * window, half_width)
    else:
        raise ConfigurationError(f"unknown geometry {geometry!r}")
    if target_norm == 0:
        return q.with_samples(np.zeros(n), warn_decay=True)
    norm = h_minus1_norm(q)
    if not norm > 0:
        raise ConfigurationError("target norm unreachable: generated profile vanishes on this grid")
    return q.with_samples(q.samples * (target_norm / norm), warn_decay=True)


def default_family(count=8, n=256, target_norm=DEFAULT_TARGET):
    """The seeded family used for route-agreement and identity checks."""
    return [random_profile(seed, n=n, target_norm=target_norm) for seed in range(count)]
