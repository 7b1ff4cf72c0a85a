"""Square QAM constellations, bit mappings, and labeled symbol frames.

Cluster labels are 1-based: label m corresponds to ``points[m - 1]``.
Bit codes use Gray coding independently on the I and Q rails, so nearest
neighbors along either rail differ in exactly one bit.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .validation import as_labels

SUPPORTED_ORDERS = (4, 16, 64, 256)


def _gray(n: np.ndarray) -> np.ndarray:
    return n ^ (n >> 1)


@dataclass(frozen=True)
class Constellation:
    """M-QAM constellation with unit average energy and per-rail Gray bit map."""

    order: int
    points: np.ndarray = field(repr=False)      # (M,) complex128
    bit_codes: np.ndarray = field(repr=False)   # (M,) int64, Gray code of label m at index m-1
    bits_per_symbol: int

    def __post_init__(self):
        m = self.order
        if self.points.shape != (m,) or self.bit_codes.shape != (m,):
            raise ValueError("points/bit_codes must have shape (order,)")
        mean_energy = float(np.mean(np.abs(self.points) ** 2))
        if abs(mean_energy - 1.0) > 1e-12:
            raise ValueError(f"constellation mean energy {mean_energy} != 1")
        if len(np.unique(self.bit_codes)) != m:
            raise ValueError("bit map is not a bijection")

    @property
    def labels(self) -> np.ndarray:
        return np.arange(1, self.order + 1)

    def bits_for_label(self, label: int) -> np.ndarray:
        """Bit pattern (MSB first) for one cluster label."""
        code = int(self.bit_codes[label - 1])
        return np.array([(code >> k) & 1 for k in range(self.bits_per_symbol - 1, -1, -1)],
                        dtype=np.uint8)


def build_qam(order: int) -> Constellation:
    """Build a unit-energy square QAM constellation with Gray-coded rails.

    Points are ordered row-major over the I coordinate, then Q, both
    ascending, so label 1 sits at the most negative corner.

    Parameters
    ----------
    order : int
        Constellation size; one of 4, 16, 64, 256.
    """
    if order not in SUPPORTED_ORDERS:
        raise ValueError(
            f"unsupported QAM order {order}: need a square power of two "
            f"from {SUPPORTED_ORDERS}")
    side = int(round(math.sqrt(order)))
    bits_per_rail = side.bit_length() - 1
    amps = 2 * np.arange(side) - (side - 1)               # ascending odd levels
    i_idx, q_idx = np.meshgrid(np.arange(side), np.arange(side), indexing="ij")
    points = (amps[i_idx] + 1j * amps[q_idx]).ravel()
    points = points / math.sqrt(2.0 * (order - 1) / 3.0)  # unit mean energy
    codes = (_gray(i_idx.ravel()) << bits_per_rail) | _gray(q_idx.ravel())
    return Constellation(order=order,
                         points=points.astype(np.complex128),
                         bit_codes=codes.astype(np.int64),
                         bits_per_symbol=2 * bits_per_rail)


@dataclass(frozen=True, eq=False)
class SymbolFrame:
    """Dual-polarization labeled symbol sequence: T training then N-T payload."""

    constellation: Constellation
    labels: np.ndarray = field(repr=False)    # (2, N) int64 in 1..M
    symbols: np.ndarray = field(repr=False)   # (2, N) complex128
    training_len: int
    seed: int

    def __post_init__(self):
        n = self.total_len
        if not 0 < self.training_len < n:
            raise ValueError(f"training_len must satisfy 0 < T < N, got T={self.training_len} N={n}")
        if self.labels.shape != self.symbols.shape or self.labels.shape[0] != 2:
            raise ValueError("labels and symbols must both have shape (2, N)")

    @property
    def total_len(self) -> int:
        return self.labels.shape[1]

    @property
    def testing_len(self) -> int:
        return self.total_len - self.training_len

    def training_labels(self, pol: int) -> np.ndarray:
        return self.labels[pol, :self.training_len]

    def testing_labels(self, pol: int) -> np.ndarray:
        return self.labels[pol, self.training_len:]


def generate_frame(c: Constellation, training_len: int, total_len: int,
                   seed: int) -> SymbolFrame:
    """Draw a reproducible dual-polarization frame of uniform i.i.d. labels.

    The two polarizations use independent child streams of ``seed``, so the
    same (seed, T, N, M) always reproduces the identical frame.
    """
    if not 0 < training_len < total_len:
        raise ValueError(f"need 0 < training_len < total_len, "
                         f"got {training_len} >= {total_len}")
    streams = np.random.SeedSequence(seed).spawn(2)
    labels = np.stack([
        np.random.default_rng(s).integers(1, c.order + 1, size=total_len)
        for s in streams
    ])
    symbols = c.points[labels - 1]
    return SymbolFrame(constellation=c, labels=labels, symbols=symbols,
                       training_len=training_len, seed=seed)


def labels_to_bits(c: Constellation, labels) -> np.ndarray:
    """Map labels to the concatenated Gray bit stream (uint8 array of 0/1)."""
    labels = as_labels(np.asarray(labels).ravel(), n_clusters=c.order, name="labels")
    codes = c.bit_codes[labels - 1]
    shifts = np.arange(c.bits_per_symbol - 1, -1, -1)
    return ((codes[:, None] >> shifts[None, :]) & 1).astype(np.uint8).ravel()


def bits_to_labels(c: Constellation, bits) -> np.ndarray:
    """Inverse of :func:`labels_to_bits`."""
    bits = np.asarray(bits, dtype=np.int64).ravel()
    k = c.bits_per_symbol
    if bits.size % k:
        raise ValueError(f"bit stream length {bits.size} not a multiple of {k}")
    if bits.size and not np.all((bits == 0) | (bits == 1)):
        raise ValueError("bit stream must contain only 0/1")
    shifts = np.arange(k - 1, -1, -1)
    codes = (bits.reshape(-1, k) << shifts[None, :]).sum(axis=1)
    decode = np.full(1 << k, -1, dtype=np.int64)
    decode[c.bit_codes] = np.arange(1, c.order + 1)
    return decode[codes]
