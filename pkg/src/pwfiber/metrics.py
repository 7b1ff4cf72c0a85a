"""Error counting, Q-factor conversion, and the analytic AWGN reference."""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc, erfcinv

from .constellation import Constellation, SymbolFrame


@dataclass(frozen=True)
class QReport:
    """Error counts and quality figures for one experimental point."""

    bit_errors: int
    bits_total: int
    symbol_errors: int
    symbols_total: int
    ber: float
    q_db: float
    fallback_count: int = 0
    config_fingerprint: str = ""

    @classmethod
    def from_counts(cls, bit_errors: int, bits_total: int, symbol_errors: int,
                    symbols_total: int, fallback_count: int = 0,
                    config_fingerprint: str = "") -> "QReport":
        ber = bit_errors / bits_total if bits_total else math.nan
        return cls(bit_errors=bit_errors, bits_total=bits_total,
                   symbol_errors=symbol_errors, symbols_total=symbols_total,
                   ber=ber, q_db=q_from_ber(ber),
                   fallback_count=fallback_count,
                   config_fingerprint=config_fingerprint)


def q_from_ber(ber: float) -> float:
    """Gaussian-equivalent Q factor in dB: 20 log10(sqrt(2) erfcinv(2 ber)).

    Returns NaN outside the meaningful domain 0 < ber < 0.5 (never clamps).
    """
    if not 0.0 < ber < 0.5:
        return math.nan
    return 20.0 * math.log10(math.sqrt(2.0) * float(erfcinv(2.0 * ber)))


def ber_from_q(q_db: float) -> float:
    """Inverse of :func:`q_from_ber`."""
    return 0.5 * float(erfc(10.0 ** (q_db / 20.0) / math.sqrt(2.0)))


def count_errors(estimated_labels: np.ndarray, truth: SymbolFrame,
                 c: Constellation, fallback_count: int = 0,
                 config_fingerprint: str = "") -> QReport:
    """Count symbol and bit errors of a detection against the testing region.

    ``estimated_labels`` has shape (2, N - T), aligned with the frame's
    testing symbols; both polarizations are aggregated.
    """
    est = np.atleast_2d(np.asarray(estimated_labels))
    ref = truth.labels[:, truth.training_len:]
    if est.shape != ref.shape:
        raise ValueError(f"estimated labels shape {est.shape} does not match "
                         f"testing region {ref.shape}")
    symbol_errors = int(np.count_nonzero(est != ref))
    xor = c.bit_codes[est - 1] ^ c.bit_codes[ref - 1]
    bit_errors = int(np.bitwise_count(xor.astype(np.uint64)).sum())
    symbols_total = ref.size
    return QReport.from_counts(
        bit_errors=bit_errors, bits_total=symbols_total * c.bits_per_symbol,
        symbol_errors=symbol_errors, symbols_total=symbols_total,
        fallback_count=fallback_count, config_fingerprint=config_fingerprint)


def awgn_gray_qam_ber(order: int, esn0_db: float) -> float:
    """Exact BER of Gray-coded square QAM over AWGN at Es/N0 (dB).

    Works per PAM rail: enumerates the probability of each transmitted level
    being received in each decision interval and weights by the Hamming
    distance of the Gray codes.
    """
    side = int(round(math.sqrt(order)))
    if side * side != order:
        raise ValueError(f"order {order} is not square")
    bits_per_rail = side.bit_length() - 1
    esn0 = 10.0 ** (esn0_db / 10.0)
    # unit-energy QAM: per-rail levels and real-noise std
    amps = (2 * np.arange(side) - (side - 1)) * math.sqrt(3.0 / (2.0 * (order - 1)))
    sigma = math.sqrt(1.0 / (2.0 * esn0))
    gray = np.arange(side) ^ (np.arange(side) >> 1)
    hamming = np.bitwise_count((gray[:, None] ^ gray[None, :]).astype(np.uint64))
    edges = np.concatenate([[-np.inf], (amps[:-1] + amps[1:]) / 2.0, [np.inf]])
    up = (edges[None, 1:] - amps[:, None]) / (sigma * math.sqrt(2.0))
    lo = (edges[None, :-1] - amps[:, None]) / (sigma * math.sqrt(2.0))
    prob = 0.5 * (erfc(lo) - erfc(up))      # P(decide level j | sent level i)
    errs_per_rail = float(np.sum(prob * hamming)) / side
    return 2.0 * errs_per_rail / (2.0 * bits_per_rail)
