"""Coherent fiber transmission simulator and detection benchmark.

Simulates dual-polarization QAM over multi-span dispersion-managed or
unmanaged amplified fiber links (split-step Fourier method), applies a
standard coherent receiver chain, and benchmarks minimum-distance detection
against a Parzen-window classifier trained on received symbols, optionally
behind digital back propagation.
"""

__version__ = "0.1.0"

from .constellation import (Constellation, SymbolFrame, bits_to_labels,
                            build_qam, generate_frame, labels_to_bits)
from .detect import (DetectionResult, MinimumDistanceDetector,
                     ParzenWindowDetector, TrainingSet, decision_regions,
                     optimize_window, window_weight)
from .fiberlink import (AmplifierSpec, FiberSegment, IdealDispersionElement,
                        LinkSpec, PropagationResult, amplify,
                        beta2_from_dispersion, dispersion_from_beta2,
                        ideal_dispersion_element, propagate_link, ssfm_propagate)
from .harness import (ExperimentConfig, ResultRow, load_config, parse_config,
                      recipe, run_point, run_sweep)
from .metrics import QReport, awgn_gray_qam_ber, ber_from_q, count_errors, q_from_ber
from .rxdsp import (RxChainConfig, adc, cd_compensate, dbp,
                    matched_filter_and_decimate, phase_align)
from .txdsp import RrcSpec, rrc_taps, set_launch_power, shape, symbol_rate_for
from .waveform import SignalBlock

__all__ = [
    "__version__",
    "Constellation", "SymbolFrame", "build_qam", "generate_frame",
    "labels_to_bits", "bits_to_labels",
    "SignalBlock", "RrcSpec", "rrc_taps", "shape", "set_launch_power",
    "symbol_rate_for",
    "FiberSegment", "AmplifierSpec", "IdealDispersionElement", "LinkSpec",
    "PropagationResult", "ssfm_propagate", "amplify", "ideal_dispersion_element",
    "propagate_link", "beta2_from_dispersion", "dispersion_from_beta2",
    "RxChainConfig", "adc", "cd_compensate", "dbp",
    "matched_filter_and_decimate", "phase_align",
    "TrainingSet", "DetectionResult", "MinimumDistanceDetector",
    "ParzenWindowDetector", "window_weight", "optimize_window", "decision_regions",
    "QReport", "count_errors", "q_from_ber", "ber_from_q", "awgn_gray_qam_ber",
    "ExperimentConfig", "ResultRow", "run_point", "run_sweep", "recipe",
    "parse_config", "load_config",
]
