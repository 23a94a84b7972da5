"""Power spectral density of sampled observables."""

from __future__ import annotations

import numpy as np

MIN_SAMPLES = 4096
FLOOR_BAND = 5.0


class TooShort(ValueError):
    pass


def _series(source, observable, t_start, dt):
    from ..integrator import Trajectory

    if isinstance(source, Trajectory):
        if source.diverged:
            raise ValueError("power spectrum needs a completed trajectory")
        if t_start is None:
            t_start = 0.5 * source.times[-1]
        tr = source.after(t_start)
        return tr[observable], tr.sample_dt
    if dt is None:
        raise ValueError("dt is required for raw series")
    return np.asarray(source, dtype=float), float(dt)


def power_spectrum(source, observable: str = "n", *, t_start=None, dt=None,
                   min_samples: int = MIN_SAMPLES):
    """Hann-windowed periodogram of a mean-subtracted series.

    Parameters
    ----------
    source : Trajectory or array_like
        A trajectory (the post-transient window starts at ``t_start``, default
        half the span) or a raw uniformly sampled series with spacing ``dt``.
    observable : str
        Trajectory column to analyse.

    Returns
    -------
    omega : ndarray
        Angular frequencies, in the same units as the inverse sample spacing.
    psd : ndarray
        One-sided power spectral density.
    """
    y, dt = _series(source, observable, t_start, dt)
    if y.size < min_samples:
        raise TooShort(f"{y.size} samples, at least {min_samples} required")
    w = np.hanning(y.size)
    F = np.fft.rfft((y - y.mean()) * w)
    psd = np.abs(F) ** 2 * dt / np.sum(w**2)
    psd[1:] *= 2.0
    omega = 2 * np.pi * np.fft.rfftfreq(y.size, dt)
    return omega, psd


def dominant_frequency(omega, psd) -> float:
    """Frequency of the largest non-DC bin."""
    return float(omega[1 + np.argmax(psd[1:])])


def peak_to_floor_db(omega, psd, floor_band: float = FLOOR_BAND) -> float:
    """Dominant peak over the median of the spectrum up to ``floor_band`` times
    the peak frequency, in dB. The DC bin is ignored."""
    k = 1 + int(np.argmax(psd[1:]))
    band = psd[1 : max(k + 1, int(np.searchsorted(omega, floor_band * omega[k], side="right")))]
    return float(10 * np.log10(psd[k] / np.median(band)))
