"""Multi-span fiber propagation: split-step Fourier method, EDFAs, ideal CD elements.

The dual-polarization field follows the averaged (Manakov) propagation
equation with the 8/9-scaled Kerr coefficient:

    dA/dz = -(alpha/2) A - j (beta2/2) d^2A/dt^2 + j (8/9) gamma (|Ax|^2+|Ay|^2) A

solved with a symmetric split-step scheme: half-step linear (frequency
domain), full nonlinear phase rotation (time domain), half-step linear.
Adjacent half steps are merged, so each step costs one FFT round trip.
"""

import math
from dataclasses import dataclass

import numpy as np
import scipy.constants as const
import scipy.fft as fft

from .waveform import FFT_WORKERS, SignalBlock, angular_freqs, apply_transfer, watts_to_dbm

C_LIGHT = const.c
H_PLANCK = const.h

# field-amplitude attenuation per meter from a power attenuation in dB/km
_DB_KM_TO_NEPER_M = math.log(10.0) / 10.0 / 1e3


def beta2_from_dispersion(dispersion_ps_nm_km: float, wavelength_m: float) -> float:
    """Convert dispersion D [ps/nm/km] to beta2 [s^2/m]."""
    d_si = dispersion_ps_nm_km * 1e-6          # s/m^2
    return -d_si * wavelength_m ** 2 / (2.0 * np.pi * C_LIGHT)


def dispersion_from_beta2(beta2_s2_m: float, wavelength_m: float) -> float:
    """Convert beta2 [s^2/m] back to D [ps/nm/km]."""
    return -beta2_s2_m * 2.0 * np.pi * C_LIGHT / wavelength_m ** 2 / 1e-6


def accumulated_beta2(dispersion_ps_nm: float, wavelength_m: float) -> float:
    """Convert accumulated dispersion D*L [ps/nm] to beta2*L [s^2]."""
    return -(dispersion_ps_nm * 1e-3) * wavelength_m ** 2 / (2.0 * np.pi * C_LIGHT)


@dataclass(frozen=True)
class FiberSegment:
    """One fiber piece with uniform parameters and its step-sizing policy.

    Either a fixed step count (``steps``) or a nonlinear-phase budget per
    step (``max_phase_rad``, sized from the peak input power) controls the
    discretization; ``max_steps`` bounds both.
    """

    length_m: float
    attenuation_db_km: float = 0.2
    dispersion_ps_nm_km: float = 16.0
    gamma_per_w_km: float = 1.4
    steps: int = 50
    max_phase_rad: float | None = None
    max_steps: int = 100_000

    def __post_init__(self):
        if self.length_m <= 0:
            raise ValueError(f"fiber length must be positive, got {self.length_m}")
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        if self.max_phase_rad is not None and self.max_phase_rad <= 0:
            raise ValueError("max_phase_rad must be positive")

    @property
    def alpha_per_m(self) -> float:
        """Power attenuation coefficient, 1/m."""
        return self.attenuation_db_km * _DB_KM_TO_NEPER_M

    @property
    def gamma_per_w_m(self) -> float:
        return self.gamma_per_w_km * 1e-3

    def beta2(self, wavelength_m: float) -> float:
        return beta2_from_dispersion(self.dispersion_ps_nm_km, wavelength_m)

    def accumulated_dispersion_ps_nm(self) -> float:
        return self.dispersion_ps_nm_km * self.length_m / 1e3

    def step_count(self, peak_power_w: float) -> int:
        if self.max_phase_rad is not None:
            phi_total = (8.0 / 9.0) * self.gamma_per_w_m * peak_power_w * self.length_m
            n = max(1, math.ceil(phi_total / self.max_phase_rad))
        else:
            n = self.steps
        if n > self.max_steps:
            raise ValueError(
                f"fiber segment needs {n} steps, exceeding max_steps={self.max_steps}")
        return n


@dataclass(frozen=True)
class AmplifierSpec:
    """Flat-gain EDFA with ASE described by a noise figure."""

    gain_db: float = 16.0
    noise_figure_db: float = 5.5

    def __post_init__(self):
        if not (np.isfinite(self.gain_db) and np.isfinite(self.noise_figure_db)):
            raise ValueError("gain and noise figure must be finite")


@dataclass(frozen=True)
class IdealDispersionElement:
    """Lossless, noiseless, purely dispersive element (idealized DCF)."""

    dispersion_ps_nm: float

    def __post_init__(self):
        if not np.isfinite(self.dispersion_ps_nm):
            raise ValueError("dispersion must be finite")


LinkElement = FiberSegment | AmplifierSpec | IdealDispersionElement


@dataclass(frozen=True)
class LinkSpec:
    """Ordered element chain forming a DM or DUM multi-span link."""

    elements: tuple
    span_count: int
    style: str  # "DM" | "DUM"

    def __post_init__(self):
        if not self.elements:
            raise ValueError("link has no elements")
        if self.style not in ("DM", "DUM"):
            raise ValueError(f"style must be 'DM' or 'DUM', got {self.style!r}")

    @classmethod
    def dum(cls, span_count: int, span_length_km: float = 80.0,
            fiber: FiberSegment | None = None,
            amplifier: AmplifierSpec | None = None) -> "LinkSpec":
        """[SSMF, EDFA] x span_count."""
        fiber = fiber or FiberSegment(length_m=span_length_km * 1e3)
        amplifier = amplifier or AmplifierSpec(
            gain_db=fiber.attenuation_db_km * span_length_km)
        elems = (fiber, amplifier) * span_count
        return cls(elements=elems, span_count=span_count, style="DUM")

    @classmethod
    def dm(cls, span_count: int, span_length_km: float = 80.0,
           fiber: FiberSegment | None = None,
           amplifier: AmplifierSpec | None = None,
           compensation_ratio: float = 1.0,
           second_amplifier_gain_db: float = 0.0) -> "LinkSpec":
        """[SSMF, EDFA, ideal -D*L element, EDFA] x span_count.

        The in-line compensator cancels ``compensation_ratio`` of each span's
        dispersion. The second EDFA models the DCF-stage amplifier; it
        defaults to 0 dB (no gain, no noise) because the ideal element is
        lossless.
        """
        fiber = fiber or FiberSegment(length_m=span_length_km * 1e3)
        amplifier = amplifier or AmplifierSpec(
            gain_db=fiber.attenuation_db_km * span_length_km)
        dcf = IdealDispersionElement(
            -compensation_ratio * fiber.accumulated_dispersion_ps_nm())
        post_amp = AmplifierSpec(gain_db=second_amplifier_gain_db,
                                 noise_figure_db=amplifier.noise_figure_db)
        elems = (fiber, amplifier, dcf, post_amp) * span_count
        return cls(elements=elems, span_count=span_count, style="DM")

    def total_dispersion_ps_nm(self) -> float:
        total = 0.0
        for el in self.elements:
            if isinstance(el, FiberSegment):
                total += el.accumulated_dispersion_ps_nm()
            elif isinstance(el, IdealDispersionElement):
                total += el.dispersion_ps_nm
        return total

    def amplifier_count(self) -> int:
        return sum(isinstance(el, AmplifierSpec) for el in self.elements)


def ssfm_propagate(sig: SignalBlock, seg: FiberSegment,
                   direction: float = 1.0) -> SignalBlock:
    """Propagate through one fiber segment with the symmetric split-step method.

    Deterministic (no in-fiber noise). ``direction=-1`` runs the virtual
    inverse fiber (negated attenuation, dispersion and nonlinearity) used by
    digital back propagation.

    Raises
    ------
    ValueError
        If the required step count exceeds the segment's limit, or if the
        field turns non-finite mid-propagation (reported with step index).
    """
    field = sig.field.astype(np.complex128, copy=True)
    peak = float(np.max(np.abs(field[0]) ** 2 + np.abs(field[1]) ** 2))
    n_steps = seg.step_count(peak)
    h = seg.length_m / n_steps

    alpha = direction * seg.alpha_per_m
    beta2 = direction * seg.beta2(sig.center_wavelength)
    gamma = direction * seg.gamma_per_w_m

    w = angular_freqs(sig.length, sig.sample_rate)
    lin_arg = (-alpha / 2.0) + 0.5j * beta2 * w ** 2
    half = np.exp(lin_arg * (h / 2.0))
    full = half * half
    kerr = (8.0 / 9.0) * gamma * h

    spec = fft.fft(field, axis=-1, workers=FFT_WORKERS)
    spec *= half
    for step in range(n_steps):
        field = fft.ifft(spec, axis=-1, workers=FFT_WORKERS)
        power = np.abs(field[0]) ** 2 + np.abs(field[1]) ** 2
        with np.errstate(invalid="ignore", over="ignore"):
            field *= np.exp(1j * kerr * power)
        if not np.all(np.isfinite(field)):
            raise ValueError(
                f"non-finite field at split-step {step + 1}/{n_steps} "
                f"(length {seg.length_m / 1e3:g} km)")
        spec = fft.fft(field, axis=-1, workers=FFT_WORKERS)
        spec *= full if step < n_steps - 1 else half
    field = fft.ifft(spec, axis=-1, workers=FFT_WORKERS)
    return sig.with_field(field)


def ase_variance_per_sample(amp: AmplifierSpec, center_frequency_hz: float,
                            sample_rate_hz: float) -> float:
    """Per-polarization complex ASE variance added per sample.

    sigma^2 = n_sp (G - 1) h nu f_s with n_sp = F G / (2 (G - 1)); the
    G -> 1 limit carries no inversion, hence zero noise.
    """
    g_lin = 10.0 ** (amp.gain_db / 10.0)
    f_lin = 10.0 ** (amp.noise_figure_db / 10.0)
    if g_lin == 1.0:
        return 0.0
    n_sp = f_lin * g_lin / (2.0 * (g_lin - 1.0))
    return n_sp * (g_lin - 1.0) * H_PLANCK * center_frequency_hz * sample_rate_hz


def amplify(sig: SignalBlock, amp: AmplifierSpec,
            noise_seed) -> SignalBlock:
    """Apply flat gain and add seeded circular-Gaussian ASE per polarization."""
    g_lin = 10.0 ** (amp.gain_db / 10.0)
    if g_lin < 1.0:
        raise ValueError(f"amplifier gain must be >= 0 dB, got {amp.gain_db} dB")
    nu = C_LIGHT / sig.center_wavelength
    sigma2 = ase_variance_per_sample(amp, nu, sig.sample_rate)
    field = sig.field * math.sqrt(g_lin)
    if sigma2 > 0.0:
        rng = np.random.default_rng(noise_seed)
        scale = math.sqrt(sigma2 / 2.0)
        noise = rng.normal(0.0, scale, sig.field.shape) \
            + 1j * rng.normal(0.0, scale, sig.field.shape)
        field = field + noise
    return sig.with_field(field)


def ideal_dispersion_element(sig: SignalBlock,
                             dispersion_ps_nm: float) -> SignalBlock:
    """All-pass phase exp(+j beta2_acc w^2 / 2) for an accumulated D*L."""
    if not np.isfinite(dispersion_ps_nm):
        raise ValueError("dispersion must be finite")
    b2l = accumulated_beta2(dispersion_ps_nm, sig.center_wavelength)
    w = angular_freqs(sig.length, sig.sample_rate)
    return sig.with_field(apply_transfer(sig.field, np.exp(0.5j * b2l * w ** 2)))


@dataclass(frozen=True)
class PropagationResult:
    signal: SignalBlock
    power_trace: tuple  # ((span_index, mean_power_dbm), ...)


def propagate_link(sig: SignalBlock, link: LinkSpec, seed) -> PropagationResult:
    """Run the signal through every link element in order.

    Each amplifier draws its ASE from an independent child stream of
    ``seed``. The power trace records total mean power (dBm) at the end of
    each span, where spans are delimited by fiber segments.
    """
    amp_seeds = iter(np.random.SeedSequence(seed).spawn(max(1, link.amplifier_count())))
    trace = []
    span_index = 0
    current = sig
    elements = link.elements
    for i, el in enumerate(elements):
        if isinstance(el, FiberSegment):
            current = ssfm_propagate(current, el)
            span_index += 1
        elif isinstance(el, AmplifierSpec):
            current = amplify(current, el, next(amp_seeds))
        elif isinstance(el, IdealDispersionElement):
            current = ideal_dispersion_element(current, el.dispersion_ps_nm)
        else:
            raise ValueError(f"unknown link element type {type(el).__name__}")
        span_done = i + 1 == len(elements) or isinstance(elements[i + 1], FiberSegment)
        if span_done and span_index > 0:
            trace.append((span_index, watts_to_dbm(current.mean_power())))
    return PropagationResult(signal=current, power_trace=tuple(trace))


def power_trace_csv(trace) -> str:
    lines = ["span_index,mean_power_dbm"]
    lines += [f"{idx},{p:.6f}" for idx, p in trace]
    return "\n".join(lines) + "\n"
