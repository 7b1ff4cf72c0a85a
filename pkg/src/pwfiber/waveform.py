"""Dual-polarization baseband waveform container and circular DSP primitives.

All processing treats the sample block as one period of a periodic signal
(circular boundary conditions), which keeps FFT-based propagation, filtering
and resampling free of edge artifacts. Symbol k of a shaped frame sits at
sample ``k * samples_per_symbol``.
"""

from dataclasses import dataclass, field, replace

import numpy as np
import scipy.fft as fft

FFT_WORKERS = 2


@dataclass(frozen=True, eq=False)
class SignalBlock:
    """Two complex field sequences (X, Y polarization) with rate metadata.

    The field is normalized so mean(|x|^2 + |y|^2) is the optical power in
    watts.
    """

    field: np.ndarray = field(repr=False)   # (2, L) complex128
    symbol_rate: float                       # baud
    samples_per_symbol: int
    center_wavelength: float = 1550e-9       # m

    def __post_init__(self):
        if self.field.ndim != 2 or self.field.shape[0] != 2:
            raise ValueError(f"field must have shape (2, L), got {self.field.shape}")
        if self.samples_per_symbol < 1:
            raise ValueError("samples_per_symbol must be >= 1")
        if self.field.shape[1] % self.samples_per_symbol:
            raise ValueError("block length must hold an integer number of symbols")

    @property
    def length(self) -> int:
        return self.field.shape[1]

    @property
    def sample_rate(self) -> float:
        return self.symbol_rate * self.samples_per_symbol

    @property
    def n_symbols(self) -> int:
        return self.length // self.samples_per_symbol

    def mean_power(self) -> float:
        """Total mean power over both polarizations, watts."""
        return float(np.mean(np.abs(self.field[0]) ** 2 + np.abs(self.field[1]) ** 2))

    def with_field(self, new_field: np.ndarray, samples_per_symbol=None) -> "SignalBlock":
        sps = self.samples_per_symbol if samples_per_symbol is None else samples_per_symbol
        return replace(self, field=new_field, samples_per_symbol=sps)


def dbm_to_watts(power_dbm: float) -> float:
    return 10.0 ** (power_dbm / 10.0) * 1e-3


def watts_to_dbm(power_w: float) -> float:
    return 10.0 * np.log10(power_w / 1e-3)


def angular_freqs(n: int, sample_rate: float) -> np.ndarray:
    """FFT-ordered angular frequency grid for an n-point block."""
    return 2.0 * np.pi * fft.fftfreq(n, d=1.0 / sample_rate)


def apply_transfer(field: np.ndarray, transfer: np.ndarray) -> np.ndarray:
    """Apply a frequency-domain transfer function circularly (rows = pols)."""
    spec = fft.fft(field, axis=-1, workers=FFT_WORKERS)
    spec *= transfer
    return fft.ifft(spec, axis=-1, workers=FFT_WORKERS)


def circular_filter(field: np.ndarray, taps: np.ndarray) -> np.ndarray:
    """Zero-phase circular FIR filtering: center tap aligned to lag zero.

    Removes the filter group delay exactly, so a symmetric filter leaves
    symbol positions on the sample grid untouched.
    """
    n = field.shape[-1]
    if taps.ndim != 1:
        raise ValueError("taps must be 1-D")
    kernel = np.zeros(n, dtype=np.complex128 if np.iscomplexobj(taps) else np.float64)
    center = len(taps) // 2
    idx = (np.arange(len(taps)) - center) % n
    np.add.at(kernel, idx, taps)
    transfer = fft.fft(kernel)
    return apply_transfer(np.atleast_2d(field), transfer)


def fft_resample(field: np.ndarray, n_out: int) -> np.ndarray:
    """Ideal (brick-wall) circular resampling of each row to n_out samples.

    Acts as a perfect anti-alias low-pass for decimation of band-limited
    periodic blocks.
    """
    field = np.atleast_2d(field)
    n_in = field.shape[-1]
    if n_out == n_in:
        return field.copy()
    spec = fft.fft(field, axis=-1, workers=FFT_WORKERS)
    out = np.zeros((field.shape[0], n_out), dtype=np.complex128)
    n_keep = min(n_in, n_out)
    k = n_keep // 2
    out[:, :k] = spec[:, :k]
    if k:
        out[:, -k:] = spec[:, -k:]
    if n_keep % 2 == 0:
        if n_out < n_in:
            # the two input bins +-k alias onto the single new Nyquist bin
            out[:, k] = spec[:, k] + spec[:, n_in - k]
        else:
            # split the input Nyquist bin over the two new +-k bins
            out[:, k] = 0.5 * spec[:, k]
            out[:, n_out - k] += 0.5 * spec[:, k]
    else:
        out[:, k] = spec[:, k]
    return fft.ifft(out, axis=-1, workers=FFT_WORKERS) * (n_out / n_in)
