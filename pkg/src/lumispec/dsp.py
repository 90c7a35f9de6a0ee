"""Spectral estimation from sampled records.

Estimates use the same two-sided convention as :mod:`lumispec.spectra`: a
process with correlator ``c * delta(t - t')`` estimates to ``c`` at every
frequency, i.e. the per-sample variance of such white noise is ``c / dt``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import signal

from . import io
from .errors import BudgetError

__all__ = ["PsdEstimate", "welch_psd", "ensemble_spectrum", "MIN_TRAJECTORIES"]

MIN_TRAJECTORIES = 8


@dataclass
class PsdEstimate:
    """Estimated spectrum with per-point standard errors.

    ``imag`` and ``imag_stderr`` are only set for complex-mode ensembles,
    where the mean imaginary part is a diagnostic that should vanish.
    """

    omega: np.ndarray
    values: np.ndarray
    stderr: np.ndarray
    channel_labels: tuple[str, ...]
    meta: dict = field(default_factory=dict)
    imag: np.ndarray | None = None
    imag_stderr: np.ndarray | None = None

    def __getitem__(self, label: str) -> np.ndarray:
        return self.values[self.channel_labels.index(label)]

    def err(self, label: str) -> np.ndarray:
        return self.stderr[self.channel_labels.index(label)]

    def one_sided(self) -> PsdEstimate:
        """Fold onto ``omega >= 0`` by doubling the positive-frequency values."""
        keep = self.omega >= 0
        factor = np.where(self.omega[keep] > 0, 2.0, 1.0)

        def fold(a):
            return None if a is None else a[:, keep] * factor

        meta = dict(self.meta, sided="one")
        return PsdEstimate(self.omega[keep], fold(self.values), fold(self.stderr), self.channel_labels, meta,
                           fold(self.imag), fold(self.imag_stderr))

    def columns(self) -> dict[str, np.ndarray]:
        cols = {"omega": self.omega}
        cols.update(zip(self.channel_labels, self.values))
        cols.update((f"{lab}_stderr", e) for lab, e in zip(self.channel_labels, self.stderr))
        if self.imag is not None:
            cols.update((f"{lab}_imag", v) for lab, v in zip(self.channel_labels, self.imag))
            cols.update((f"{lab}_imag_stderr", v) for lab, v in zip(self.channel_labels, self.imag_stderr))
        return cols

    def to_csv(self, path, comment: str | None = None) -> Path:
        return io.write_csv(path, self.columns(), comment)

    def to_json(self, path) -> Path:
        doc = {"omega": self.omega, "channels": {}, "meta": self.meta}
        for i, lab in enumerate(self.channel_labels):
            entry = {"values": self.values[i], "stderr": self.stderr[i]}
            if self.imag is not None:
                entry.update(imag=self.imag[i], imag_stderr=self.imag_stderr[i])
            doc["channels"][lab] = entry
        return io.write_json(path, doc)


def welch_psd(samples, dt: float, segment_length: int | None = None, overlap: float = 0.5,
              window: str = "hann", labels=None) -> PsdEstimate:
    """Two-sided Welch estimate of real sampled records.

    Parameters
    ----------
    samples : array_like, shape (n,) or (n, c)
        Equally spaced samples, time along axis 0.
    dt : float
        Sampling interval.
    segment_length : int, optional
        Samples per segment, default ``n // 8``.
    overlap : float
        Fractional segment overlap in ``[0, 0.9]``.
    window : str
        Any :func:`scipy.signal.get_window` name; ``"boxcar"`` for calibration.

    Standard errors are the spread of the per-segment periodograms divided
    by the square root of the segment count, which slightly understates the
    error when overlapping segments are correlated.
    """
    x = np.asarray(samples)
    if x.ndim == 1:
        x = x[:, None]
    n, c = x.shape
    nperseg = n // 8 if segment_length is None else int(segment_length)
    if nperseg > n:
        raise ValueError(f"segment_length {nperseg} exceeds the record length {n}")
    if nperseg < 2:
        raise ValueError("segment_length must be at least 2 samples")
    if not 0.0 <= overlap <= 0.9:
        raise ValueError("overlap must lie in [0, 0.9]")
    noverlap = int(round(overlap * nperseg))
    values, errs = [], []
    for i in range(c):
        f, _, sxx = signal.spectrogram(x[:, i], fs=1.0 / dt, window=window, nperseg=nperseg, noverlap=noverlap,
                                       detrend=False, return_onesided=False, scaling="density", mode="psd")
        k = sxx.shape[1]
        values.append(np.fft.fftshift(sxx.mean(axis=1)))
        spread = sxx.std(axis=1, ddof=1) / np.sqrt(k) if k > 1 else np.full(sxx.shape[0], np.nan)
        errs.append(np.fft.fftshift(spread))
    omega = 2 * np.pi * np.fft.fftshift(f)
    labels = tuple(labels) if labels is not None else tuple(f"ch{i}" for i in range(c))
    meta = {"estimator": "welch", "segment_length": nperseg, "overlap": overlap, "window": window,
            "n_segments": k, "dt": dt, "sided": "two"}
    return PsdEstimate(omega, np.array(values), np.array(errs), labels, meta)


def ensemble_spectrum(ensemble, grid, *, segment_length: float | None = None, overlap: float = 0.0,
                      window: str = "boxcar", normalize: bool = True, source: str = "currents") -> PsdEstimate:
    """Ensemble spectrum from ``+omega`` / ``-omega`` products of finite-window transforms.

    Each trajectory is cut into segments of ``segment_length`` time units
    (the whole record by default).  For every segment and grid frequency
    ``Y(+-omega) = dt_s * sum(w_k y_k exp(+-i omega t_k))`` and the estimate
    is ``Y(+omega) Y(-omega) / (dt_s * sum w_k**2)``, averaged over segments
    and then over trajectories.  For real records this is the usual
    periodogram; for complex-mode records it is the unbiased pair product.

    Standard errors are computed across trajectories.  The imaginary part of
    the mean is returned as a diagnostic for complex ensembles.

    Raises
    ------
    BudgetError
        Fewer than 8 trajectories.
    """
    if ensemble.n_traj < MIN_TRAJECTORIES:
        raise BudgetError(f"need at least {MIN_TRAJECTORIES} trajectories for error bars, got {ensemble.n_traj}")
    if source == "currents":
        data, labels, shot = ensemble.currents, ensemble.channel_labels, ensemble.shot_levels
    elif source == "states":
        data, labels, shot = ensemble.states, ensemble.state_labels, None
        if data.shape[1] == 0:
            raise ValueError("ensemble was simulated without recording states")
    else:
        raise ValueError(f"unknown source {source!r}")
    omega = np.atleast_1d(np.asarray(grid, dtype=float))
    step = ensemble.sample_interval
    n_total = data.shape[1]
    nseg = n_total if segment_length is None else int(round(segment_length / step))
    if not 2 <= nseg <= n_total:
        raise ValueError(f"segment of {nseg} samples does not fit a record of {n_total}")
    if not 0.0 <= overlap <= 0.9:
        raise ValueError("overlap must lie in [0, 0.9]")
    hop = max(1, int(round((1.0 - overlap) * nseg)))
    starts = np.arange(0, n_total - nseg + 1, hop)
    w = signal.get_window(window, nseg)
    norm = step * np.sum(w**2)
    t = np.arange(nseg) * step
    kern_plus = w * np.exp(1j * np.outer(omega, t)) * step
    kern_minus = w * np.exp(-1j * np.outer(omega, t)) * step
    index = starts[:, None] + np.arange(nseg)

    per_traj = np.empty((ensemble.n_traj, omega.size, data.shape[2]), dtype=complex)
    for j in range(ensemble.n_traj):
        segs = data[j][index]  # (K, nseg, c)
        plus = np.einsum("gn,knc->kgc", kern_plus, segs)
        minus = np.einsum("gn,knc->kgc", kern_minus, segs)
        per_traj[j] = (plus * minus).mean(axis=0) / norm
    if normalize and shot is not None:
        per_traj /= shot
    root_n = np.sqrt(ensemble.n_traj)
    mean = per_traj.mean(axis=0).T
    stderr = per_traj.real.std(axis=0, ddof=1).T / root_n
    complex_mode = np.iscomplexobj(data)
    meta = {
        "estimator": "ensemble",
        "segment_length": nseg * step,
        "n_segments": int(starts.size),
        "overlap": overlap,
        "window": window,
        "normalized": bool(normalize and shot is not None),
        "source": source,
        "sided": "two",
        **ensemble.metadata(),
    }
    return PsdEstimate(
        omega,
        mean.real.copy(),
        stderr,
        tuple(labels),
        meta,
        imag=mean.imag.copy() if complex_mode else None,
        imag_stderr=(per_traj.imag.std(axis=0, ddof=1).T / root_n) if complex_mode else None,
    )
