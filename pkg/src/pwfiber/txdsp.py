"""Transmit DSP: RRC pulse shaping, launch power scaling, rate bookkeeping."""

import math
from dataclasses import dataclass, replace

import numpy as np

from .constellation import Constellation, SymbolFrame
from .validation import check_positive
from .waveform import SignalBlock, circular_filter, dbm_to_watts


@dataclass(frozen=True)
class RrcSpec:
    """Root-raised-cosine filter: roll-off, span in symbols, rate."""

    roll_off: float = 0.1
    filter_span: int = 64            # total span, symbols; must be even
    samples_per_symbol: int = 16

    def __post_init__(self):
        if not 0.0 <= self.roll_off <= 1.0:
            raise ValueError(f"roll_off must be in [0, 1], got {self.roll_off}")
        if self.filter_span <= 0 or self.filter_span % 2:
            raise ValueError(f"filter_span must be a positive even symbol count, "
                             f"got {self.filter_span}")
        if self.samples_per_symbol < 1:
            raise ValueError("samples_per_symbol must be >= 1")

    def at_rate(self, samples_per_symbol: int) -> "RrcSpec":
        return replace(self, samples_per_symbol=samples_per_symbol)


def _rrc_impulse(roll_off: float, filter_span: int, sps: int) -> np.ndarray:
    n = filter_span * sps
    t = (np.arange(n + 1) - n / 2) / sps
    h = np.zeros(n + 1)
    h[t == 0] = 1.0 - roll_off + 4.0 * roll_off / np.pi
    if roll_off > 0:
        singular = np.isclose(np.abs(t), 1.0 / (4.0 * roll_off))
        h[singular] = (roll_off / math.sqrt(2.0)) * (
            (1 + 2 / np.pi) * math.sin(np.pi / (4 * roll_off))
            + (1 - 2 / np.pi) * math.cos(np.pi / (4 * roll_off)))
    else:
        singular = np.zeros_like(t, dtype=bool)
    rest = ~(singular | (t == 0))
    tr = t[rest]
    h[rest] = (np.sin(np.pi * tr * (1 - roll_off))
               + 4 * roll_off * tr * np.cos(np.pi * tr * (1 + roll_off))) \
        / (np.pi * tr * (1 - (4 * roll_off * tr) ** 2))
    return h


def rrc_taps(spec: RrcSpec) -> np.ndarray:
    """Unit-energy RRC taps (odd length, symmetric, peak at center).

    Rejects spans that truncate more than 0.1% of the pulse energy, which
    happens for small roll-offs with short spans.
    """
    h = _rrc_impulse(spec.roll_off, spec.filter_span, spec.samples_per_symbol)
    ref_span = max(4 * spec.filter_span, 512)
    href = _rrc_impulse(spec.roll_off, ref_span, spec.samples_per_symbol)
    capture = np.sum(h ** 2) / np.sum(href ** 2)
    if capture < 0.999:
        raise ValueError(
            f"filter_span={spec.filter_span} captures only {capture:.4%} of the "
            f"pulse energy at roll_off={spec.roll_off}; use a longer span")
    return h / math.sqrt(np.sum(h ** 2))


def shape(frame: SymbolFrame, rrc: RrcSpec, oversampling: int | None = None, *,
          symbol_rate: float, center_wavelength: float = 1550e-9) -> SignalBlock:
    """Upsample a symbol frame and apply RRC pulse shaping, circularly.

    The impulse train is scaled by sqrt(oversampling) so the shaped waveform
    keeps the frame's mean symbol energy as its mean power (dimensionless
    until :func:`set_launch_power` fixes the absolute scale). Symbol k of
    the frame lands exactly on sample ``k * oversampling``.
    """
    sps = rrc.samples_per_symbol if oversampling is None else int(oversampling)
    if sps < 2:
        raise ValueError(f"oversampling must be >= 2, got {sps}")
    taps = rrc_taps(rrc.at_rate(sps))
    n = frame.total_len
    train = np.zeros((2, n * sps), dtype=np.complex128)
    train[:, ::sps] = frame.symbols * math.sqrt(sps)
    shaped = circular_filter(train, taps)
    return SignalBlock(field=shaped, symbol_rate=symbol_rate,
                       samples_per_symbol=sps, center_wavelength=center_wavelength)


def set_launch_power(sig: SignalBlock, power_dbm: float) -> SignalBlock:
    """Scale the waveform so total dual-pol mean power equals power_dbm."""
    if not np.isfinite(power_dbm):
        raise ValueError(f"power_dbm must be finite, got {power_dbm}")
    current = sig.mean_power()
    if current <= 0.0:
        raise ValueError("cannot set launch power of a zero-energy signal")
    scale = math.sqrt(dbm_to_watts(power_dbm) / current)
    return sig.with_field(sig.field * scale)


def symbol_rate_for(bit_rate_total: float, c: Constellation,
                    polarizations: int = 2) -> float:
    """Symbol rate carrying bit_rate_total over the given format and pol count."""
    check_positive(bit_rate_total, "bit_rate_total")
    if polarizations < 1:
        raise ValueError("polarizations must be >= 1")
    return bit_rate_total / (polarizations * c.bits_per_symbol)
