"""Receiver DSP chain: ADC resampling, CD compensation, DBP, matched filter.

Frame timing is genie-aided: the simulation controls all delays, and every
filter in the chain is zero-phase, so symbol k always sits at sample
``k * samples_per_symbol``.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .constellation import SymbolFrame
from .fiberlink import (AmplifierSpec, FiberSegment, IdealDispersionElement,
                        LinkSpec, ideal_dispersion_element, ssfm_propagate)
from .txdsp import RrcSpec, rrc_taps
from .waveform import SignalBlock, circular_filter, fft_resample


@dataclass(frozen=True)
class RxChainConfig:
    """Receiver stage selection. DBP supersedes plain CD compensation."""

    cd_compensation: bool = True
    dbp_steps_per_span: int = 0          # 0 disables DBP
    matched_filter: RrcSpec = field(default_factory=lambda: RrcSpec(samples_per_symbol=2))
    adc_samples_per_symbol: int = 2
    phase_alignment: bool = True

    def __post_init__(self):
        if self.adc_samples_per_symbol != 2:
            raise ValueError("the ADC runs at exactly 2 samples/symbol")
        if self.dbp_steps_per_span < 0:
            raise ValueError("dbp_steps_per_span must be >= 0")
        if self.cd_compensation and self.dbp_steps_per_span:
            raise ValueError("cd_compensation and dbp are mutually exclusive: "
                             "DBP already inverts the link dispersion")


def adc(sig: SignalBlock) -> SignalBlock:
    """Resample to 2 samples/symbol with an ideal anti-alias low-pass."""
    sps = sig.samples_per_symbol
    if sps < 2 or sps % 2:
        raise ValueError(f"input oversampling must be an integer multiple of 2, got {sps}")
    if sps == 2:
        return sig.with_field(sig.field.copy())
    out = fft_resample(sig.field, sig.n_symbols * 2)
    return sig.with_field(out, samples_per_symbol=2)


def cd_compensate(sig: SignalBlock, total_dispersion_ps_nm: float) -> SignalBlock:
    """Invert an accumulated link dispersion (exact all-pass conjugate)."""
    return ideal_dispersion_element(sig, -total_dispersion_ps_nm)


def dbp(sig: SignalBlock, link: LinkSpec, steps_per_span: int = 2,
        gamma_scale: float = 1.0) -> SignalBlock:
    """Digital back propagation: run the virtual inverse link.

    Elements are traversed in reverse; fibers invert with negated loss,
    dispersion and (scaled) nonlinearity, amplifiers invert their gain
    noiselessly, and ideal dispersive elements flip sign. ``gamma_scale=0``
    reduces DBP to pure CD compensation of the whole link.
    """
    if steps_per_span < 1:
        raise ValueError("steps_per_span must be >= 1")
    current = sig
    for el in reversed(link.elements):
        if isinstance(el, FiberSegment):
            virtual = replace(el, steps=steps_per_span, max_phase_rad=None,
                              gamma_per_w_km=el.gamma_per_w_km * gamma_scale)
            current = ssfm_propagate(current, virtual, direction=-1.0)
        elif isinstance(el, AmplifierSpec):
            current = current.with_field(
                current.field / 10.0 ** (el.gain_db / 20.0))
        elif isinstance(el, IdealDispersionElement):
            current = ideal_dispersion_element(current, -el.dispersion_ps_nm)
        else:
            raise ValueError(f"cannot invert link element {type(el).__name__}")
    return current


def matched_filter_and_decimate(sig: SignalBlock, rrc: RrcSpec,
                                n_symbols: int) -> np.ndarray:
    """Matched RRC filter, symbol-rate decimation, unit-power normalization.

    Returns a (2, n_symbols) complex array, each polarization normalized to
    unit mean power.
    """
    if n_symbols > sig.n_symbols:
        raise ValueError(f"requested {n_symbols} symbols but the block holds "
                         f"only {sig.n_symbols}")
    taps = rrc_taps(rrc.at_rate(sig.samples_per_symbol))
    filtered = circular_filter(sig.field, taps)
    symbols = filtered[:, ::sig.samples_per_symbol][:, :n_symbols]
    power = np.mean(np.abs(symbols) ** 2, axis=1, keepdims=True)
    if np.any(power <= 0.0):
        raise ValueError("cannot normalize a zero-power symbol sequence")
    return symbols / np.sqrt(power)


def phase_align(received: np.ndarray, frame: SymbolFrame) -> np.ndarray:
    """Remove a bulk phase offset per polarization using the training symbols.

    The estimate is the argument of the correlation between received and
    transmitted training symbols; only a single static rotation is corrected
    (laser phase noise is outside the model).
    """
    received = np.atleast_2d(received)
    t = frame.training_len
    if received.shape[1] < t:
        raise ValueError(f"received sequence shorter than training length {t}")
    out = np.empty_like(received)
    for pol in range(received.shape[0]):
        corr = np.sum(received[pol, :t] * np.conj(frame.symbols[pol, :t]))
        if abs(corr) == 0.0:
            raise ValueError("degenerate training correlation (zero magnitude)")
        out[pol] = received[pol] * np.exp(-1j * np.angle(corr))
    return out
