"""Experiment orchestration: configs, single points, sweeps, figure recipes.

A sweep point is one propagation through the link at a given (span count,
launch power, seed); every configured detector/radius is then evaluated on
the same received symbols, yielding one result row each. Rows stream to the
output file as points finish and the file is rewritten in canonical order at
the end, so interrupted sweeps keep their partial results.
"""

import csv
import hashlib
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import asdict, dataclass, fields, replace

import numpy as np

from . import __version__
from .constellation import build_qam, generate_frame
from .detect import ParzenWindowDetector, MinimumDistanceDetector, TrainingSet, \
    _pw_classify, ZERO_DISTANCE_WEIGHT, decision_regions
from .fiberlink import AmplifierSpec, FiberSegment, LinkSpec, propagate_link
from .metrics import QReport, count_errors
from .rxdsp import adc, cd_compensate, dbp, matched_filter_and_decimate, phase_align
from .txdsp import RrcSpec, set_launch_power, shape, symbol_rate_for

log = logging.getLogger(__name__)

CSV_COLUMNS = ("style", "modulation", "spans", "distance_km", "power_dbm",
               "detector", "R", "dbp_steps", "seed", "bit_errors", "bits_total",
               "ber", "q_db", "fallbacks", "walltime_s")

RECIPE_NAMES = ("fig3", "fig4", "fig5", "fig6", "fig7", "fig8")


def _int_list(text):
    return tuple(int(v) for v in str(text).split(","))


def _float_list(text):
    return tuple(float(v) for v in str(text).split(","))


def _optional_float(text):
    return None if str(text).strip().lower() == "none" else float(text)


def _optional_int(text):
    return None if str(text).strip().lower() == "none" else int(text)


# flat key/value config schema: field name -> parser
CONFIG_SCHEMA = {
    "modulation": int,
    "bit_rate": float,
    "style": str,
    "span_counts": _int_list,
    "span_length_km": float,
    "attenuation_db_km": float,
    "dispersion_ps_nm_km": float,
    "gamma_per_w_km": float,
    "amp_gain_db": _optional_float,
    "amp_noise_figure_db": float,
    "dm_second_amp_gain_db": float,
    "wavelength_m": float,
    "oversampling": int,
    "rrc_roll_off": float,
    "rrc_span_symbols": int,
    "ssfm_steps_per_span": int,
    "detector": str,
    "pw_radius": _float_list,
    "dbp_steps_per_span": int,
    "training_len": _optional_int,
    "payload_len": int,
    "power_dbm": _float_list,
    "seeds": _int_list,
    "launch_power_convention": str,
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Full experiment description; defaults follow the benchmark link.

    Sweep axes are ``span_counts``, ``power_dbm`` and ``seeds``; every
    combination is simulated once and evaluated by the selected detectors
    (for PW, once per radius in ``pw_radius``).
    """

    modulation: int = 16
    bit_rate: float = 224e9
    style: str = "DM"
    span_counts: tuple = (10,)
    span_length_km: float = 80.0
    attenuation_db_km: float = 0.2
    dispersion_ps_nm_km: float = 16.0
    gamma_per_w_km: float = 1.4
    amp_gain_db: float | None = None        # None: exactly offsets the span loss
    amp_noise_figure_db: float = 5.5
    dm_second_amp_gain_db: float = 0.0
    wavelength_m: float = 1550e-9
    oversampling: int = 16
    rrc_roll_off: float = 0.1
    rrc_span_symbols: int = 64
    ssfm_steps_per_span: int = 50
    detector: str = "both"                  # "md" | "pw" | "both"
    pw_radius: tuple = (0.3,)
    dbp_steps_per_span: int = 0             # 0: plain CD compensation
    training_len: int | None = None         # None: 1000 (16-QAM) / 2000 (64-QAM)
    payload_len: int = 2 ** 14
    power_dbm: tuple = (-1.0,)
    seeds: tuple = (1, 2, 3)
    launch_power_convention: str = "total"  # "total" | "per_pol"

    def __post_init__(self):
        if self.style not in ("DM", "DUM"):
            raise ValueError(f"style must be DM or DUM, got {self.style!r}")
        if self.detector not in ("md", "pw", "both"):
            raise ValueError(f"detector must be md, pw or both, got {self.detector!r}")
        if self.detector != "md" and not self.pw_radius:
            raise ValueError("pw_radius must list at least one radius when the "
                             "Parzen-window detector is enabled")
        if self.launch_power_convention not in ("total", "per_pol"):
            raise ValueError("launch_power_convention must be 'total' or 'per_pol'")
        if self.oversampling < 2 or self.oversampling % 2:
            raise ValueError("oversampling must be an even count >= 2")
        if not self.span_counts or min(self.span_counts) < 1:
            raise ValueError("span_counts must list positive span counts")
        if not self.seeds:
            raise ValueError("seeds must not be empty")
        if self.dbp_steps_per_span < 0:
            raise ValueError("dbp_steps_per_span must be >= 0")
        if self.payload_len < 1:
            raise ValueError("payload_len must be positive")

    @property
    def resolved_training_len(self) -> int:
        if self.training_len is not None:
            return self.training_len
        return 2000 if self.modulation == 64 else 1000

    @property
    def total_len(self) -> int:
        return self.resolved_training_len + self.payload_len

    def fiber(self, steps: int | None = None) -> FiberSegment:
        return FiberSegment(length_m=self.span_length_km * 1e3,
                            attenuation_db_km=self.attenuation_db_km,
                            dispersion_ps_nm_km=self.dispersion_ps_nm_km,
                            gamma_per_w_km=self.gamma_per_w_km,
                            steps=steps or self.ssfm_steps_per_span)

    def amplifier(self) -> AmplifierSpec:
        gain = self.amp_gain_db
        if gain is None:
            gain = self.attenuation_db_km * self.span_length_km
        return AmplifierSpec(gain_db=gain, noise_figure_db=self.amp_noise_figure_db)

    def link(self, span_count: int) -> LinkSpec:
        if self.style == "DUM":
            return LinkSpec.dum(span_count, self.span_length_km,
                                fiber=self.fiber(), amplifier=self.amplifier())
        return LinkSpec.dm(span_count, self.span_length_km,
                           fiber=self.fiber(), amplifier=self.amplifier(),
                           second_amplifier_gain_db=self.dm_second_amp_gain_db)

    def fingerprint(self, spans: int, power_dbm: float, seed: int) -> str:
        payload = json.dumps([asdict(self), spans, power_dbm, seed],
                             sort_keys=True, default=str)
        return hashlib.sha256(payload.encode()).hexdigest()[:12]

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, tuple):
                value = ",".join(repr(v) for v in value)
            lines.append(f"{f.name} = {value}")
        return "\n".join(lines) + "\n"


def parse_config(text: str) -> ExperimentConfig:
    """Parse the flat ``key = value`` config format (strict: unknown keys fail)."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        if key not in CONFIG_SCHEMA:
            raise ValueError(f"config line {lineno}: unknown key {key!r} "
                             f"(valid keys: {', '.join(sorted(CONFIG_SCHEMA))})")
        if key in values:
            raise ValueError(f"config line {lineno}: duplicate key {key!r}")
        try:
            values[key] = CONFIG_SCHEMA[key](value.strip())
        except ValueError as exc:
            raise ValueError(f"config line {lineno}: bad value for {key!r}: {exc}") from exc
    return ExperimentConfig(**values)


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        return parse_config(fh.read())


@dataclass(frozen=True)
class ResultRow:
    """One detector evaluation at one sweep point."""

    style: str
    modulation: int
    spans: int
    distance_km: float
    power_dbm: float
    detector: str           # "md" | "pw" | "error"
    radius: float | None
    dbp_steps: int
    seed: int
    report: QReport | None
    walltime_s: float
    version: str = __version__
    error: str | None = None

    def sort_key(self):
        return (self.style, self.modulation, self.spans, self.power_dbm,
                self.detector, self.radius if self.radius is not None else -1.0,
                self.seed)

    def to_csv_values(self):
        r = self.report
        return [self.style, self.modulation, self.spans,
                f"{self.distance_km:g}", f"{self.power_dbm:g}", self.detector,
                "" if self.radius is None else f"{self.radius:g}",
                self.dbp_steps, self.seed,
                "" if r is None else r.bit_errors,
                "" if r is None else r.bits_total,
                "" if r is None else f"{r.ber:.8g}",
                "" if r is None or math.isnan(r.q_db) else f"{r.q_db:.6f}",
                "" if r is None else r.fallback_count,
                f"{self.walltime_s:.3f}"]

    def to_json_dict(self):
        d = {k: v for k, v in zip(CSV_COLUMNS, self.to_csv_values())}
        d["version"] = self.version
        if self.report is not None:
            d["fingerprint"] = self.report.config_fingerprint
        if self.error is not None:
            d["error"] = self.error
        return d


@dataclass(frozen=True, eq=False)
class PointData:
    """Detection-ready received symbols for one sweep point."""

    frame: object
    received: np.ndarray          # (2, N) normalized, not phase aligned
    walltime_s: float


def simulate_point(cfg: ExperimentConfig, spans: int, power_dbm: float,
                   seed: int) -> PointData:
    """Run the waveform pipeline up to detection-ready symbols."""
    t0 = time.perf_counter()
    c = build_qam(cfg.modulation)
    frame_seed, link_seed = (int(s) for s in
                             np.random.SeedSequence(seed).generate_state(2))
    frame = generate_frame(c, cfg.resolved_training_len, cfg.total_len, frame_seed)
    rs = symbol_rate_for(cfg.bit_rate, c, polarizations=2)
    rrc = RrcSpec(roll_off=cfg.rrc_roll_off, filter_span=cfg.rrc_span_symbols,
                  samples_per_symbol=cfg.oversampling)
    sig = shape(frame, rrc, symbol_rate=rs, center_wavelength=cfg.wavelength_m)
    total_dbm = power_dbm
    if cfg.launch_power_convention == "per_pol":
        total_dbm = power_dbm + 10.0 * math.log10(2.0)
    sig = set_launch_power(sig, total_dbm)
    link = cfg.link(spans)
    prop = propagate_link(sig, link, link_seed)
    rx = adc(prop.signal)
    if cfg.dbp_steps_per_span:
        rx = dbp(rx, link, steps_per_span=cfg.dbp_steps_per_span)
    else:
        rx = cd_compensate(rx, link.total_dispersion_ps_nm())
    received = matched_filter_and_decimate(rx, rrc.at_rate(2), frame.total_len)
    return PointData(frame=frame, received=received,
                     walltime_s=time.perf_counter() - t0)


def evaluate_point(cfg: ExperimentConfig, spans: int, power_dbm: float,
                   seed: int, data: PointData) -> list:
    """Run the configured detectors on simulated symbols, one row each."""
    frame, received = data.frame, data.received
    c = frame.constellation
    t = frame.training_len
    fp = cfg.fingerprint(spans, power_dbm, seed)
    distance_km = spans * cfg.span_length_km
    common = dict(style=cfg.style, modulation=cfg.modulation, spans=spans,
                  distance_km=distance_km, power_dbm=power_dbm, seed=seed,
                  dbp_steps=cfg.dbp_steps_per_span, walltime_s=data.walltime_s)
    rows = []
    if cfg.detector in ("md", "both"):
        aligned = phase_align(received, frame)
        detector = MinimumDistanceDetector(c)
        est = np.stack([detector.predict(aligned[pol, t:]) for pol in range(2)])
        report = count_errors(est, frame, c, config_fingerprint=fp)
        rows.append(ResultRow(detector="md", radius=None, report=report, **common))
    if cfg.detector in ("pw", "both"):
        radii = list(cfg.pw_radius)
        est = np.empty((len(radii), 2, frame.testing_len), dtype=np.int64)
        fallbacks = np.zeros(len(radii), dtype=np.int64)
        for pol in range(2):
            train = TrainingSet(symbols=received[pol, :t],
                                labels=frame.training_labels(pol))
            labels, _, fb = _pw_classify(received[pol, t:], train, radii,
                                         ZERO_DISTANCE_WEIGHT, 4096)
            est[:, pol, :] = labels
            fallbacks += fb.sum(axis=1)
        for i, radius in enumerate(radii):
            report = count_errors(est[i], frame, c, fallback_count=int(fallbacks[i]),
                                  config_fingerprint=fp)
            rows.append(ResultRow(detector="pw", radius=radius, report=report,
                                  **common))
    return rows


def run_point(cfg: ExperimentConfig, spans: int, power_dbm: float,
              seed: int) -> list:
    """Full pipeline for one sweep point; returns one row per detector/radius."""
    return evaluate_point(cfg, spans, power_dbm, seed,
                          simulate_point(cfg, spans, power_dbm, seed))


class ResultWriter:
    """Streams rows to disk as they arrive; rewrites sorted on close."""

    def __init__(self, path=None, fmt: str = "csv"):
        if fmt not in ("csv", "json"):
            raise ValueError(f"format must be csv or json, got {fmt!r}")
        self.path = path
        self.fmt = fmt
        self._fh = open(path, "w", newline="") if path else None
        if self._fh and fmt == "csv":
            csv.writer(self._fh).writerow(CSV_COLUMNS)
            self._fh.flush()

    def append(self, row: ResultRow):
        if not self._fh:
            return
        if self.fmt == "csv":
            csv.writer(self._fh).writerow(row.to_csv_values())
        else:
            self._fh.write(json.dumps(row.to_json_dict()) + "\n")
        self._fh.flush()

    def finalize(self, rows):
        """Rewrite the complete, canonically sorted table."""
        if not self._fh:
            return
        self._fh.close()
        with open(self.path, "w", newline="") as fh:
            if self.fmt == "csv":
                writer = csv.writer(fh)
                writer.writerow(CSV_COLUMNS)
                for row in rows:
                    writer.writerow(row.to_csv_values())
            else:
                for row in rows:
                    fh.write(json.dumps(row.to_json_dict()) + "\n")


def run_sweep(cfg: ExperimentConfig, out_path=None, fmt: str = "csv",
              jobs: int = 1) -> list:
    """Execute the full sweep; returns the canonically sorted row list.

    Per-point failures become ``detector="error"`` rows and never abort the
    sweep. With ``jobs > 1`` points run in parallel processes; the final
    table is identical to a sequential run.
    """
    if not cfg.power_dbm:
        raise ValueError("power_dbm sweep axis is empty")
    points = [(spans, power, seed)
              for spans in cfg.span_counts
              for power in cfg.power_dbm
              for seed in cfg.seeds]
    writer = ResultWriter(out_path, fmt)
    rows = []

    def on_done(point, result, exc):
        spans, power, seed = point
        if exc is not None:
            log.warning("point spans=%d power=%.2f seed=%d failed: %s",
                        spans, power, seed, exc)
            result = [ResultRow(style=cfg.style, modulation=cfg.modulation,
                                spans=spans, distance_km=spans * cfg.span_length_km,
                                power_dbm=power, detector="error", radius=None,
                                dbp_steps=cfg.dbp_steps_per_span, seed=seed,
                                report=None, walltime_s=0.0, error=str(exc))]
        for row in result:
            rows.append(row)
            writer.append(row)
        log.info("finished point spans=%d power=%.2f dBm seed=%d (%d/%d)",
                 spans, power, seed, len({
                     (r.spans, r.power_dbm, r.seed) for r in rows}), len(points))

    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = {pool.submit(run_point, cfg, *pt): pt for pt in points}
            for fut in as_completed(futures):
                pt = futures[fut]
                try:
                    on_done(pt, fut.result(), None)
                except Exception as exc:  # noqa: BLE001 - recorded as error row
                    on_done(pt, None, exc)
    else:
        for pt in points:
            try:
                on_done(pt, run_point(cfg, *pt), None)
            except Exception as exc:  # noqa: BLE001
                on_done(pt, None, exc)

    rows.sort(key=ResultRow.sort_key)
    writer.finalize(rows)
    return rows


def recipe(name: str) -> ExperimentConfig:
    """Named experiment presets matching the benchmark scenarios."""
    power_grid = tuple(float(p) for p in range(-6, 5))
    presets = {
        # Q vs window radius at (near-)optimal power, 16-QAM DM 800 km
        "fig3": ExperimentConfig(
            modulation=16, style="DM", span_counts=(10,),
            power_dbm=(1.0,), detector="both",
            pw_radius=tuple(round(0.05 * k, 2) for k in range(1, 13))),
        # Q vs power, DM 16-QAM, 800 and 1600 km
        "fig4": ExperimentConfig(
            modulation=16, style="DM", span_counts=(10, 20),
            power_dbm=power_grid, detector="both",
            pw_radius=(0.2, 0.25, 0.3, 0.35, 0.4)),
        # Q vs power, DM 64-QAM, 240 and 480 km
        "fig5": ExperimentConfig(
            modulation=64, style="DM", span_counts=(3, 6),
            power_dbm=power_grid, detector="both",
            pw_radius=(0.1, 0.125, 0.15, 0.175, 0.2)),
        # Q vs power, DUM 16-QAM, 800 and 1600 km
        "fig6": ExperimentConfig(
            modulation=16, style="DUM", span_counts=(10, 20),
            power_dbm=power_grid, detector="both",
            pw_radius=(0.2, 0.25, 0.3, 0.35)),
        # Q vs power, DUM 64-QAM, 240 and 480 km
        "fig7": ExperimentConfig(
            modulation=64, style="DUM", span_counts=(3, 6),
            power_dbm=power_grid, detector="both",
            pw_radius=(0.1, 0.125, 0.15, 0.175)),
        # Q vs power, DUM 16-QAM 1600 km with two-stage DBP + detector
        "fig8": ExperimentConfig(
            modulation=16, style="DUM", span_counts=(20,),
            power_dbm=tuple(float(p) for p in range(-2, 7)),
            detector="both", dbp_steps_per_span=2,
            pw_radius=(0.2, 0.25, 0.3, 0.35, 0.4)),
    }
    if name not in presets:
        raise ValueError(f"unknown recipe {name!r}; valid names: "
                         f"{', '.join(RECIPE_NAMES)}")
    return presets[name]


def dump_decision_regions(cfg: ExperimentConfig, path, spans=None,
                          power_dbm=None, seed=None, resolution: int = 201):
    """Fit the PW detector on one point and rasterize its decision regions.

    Uses the first configured span count, power, seed and radius; writes
    (re, im, label) CSV rows for the X polarization.
    """
    if cfg.detector == "md" or not cfg.pw_radius:
        raise ValueError("decision regions need the Parzen-window detector enabled")
    spans = cfg.span_counts[0] if spans is None else spans
    power_dbm = cfg.power_dbm[0] if power_dbm is None else power_dbm
    seed = cfg.seeds[0] if seed is None else seed
    data = simulate_point(cfg, spans, power_dbm, seed)
    t = data.frame.training_len
    det = ParzenWindowDetector(radius=cfg.pw_radius[0]).fit(
        data.received[0, :t], data.frame.training_labels(0))
    grid = decision_regions(det, resolution=resolution)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("re", "im", "label"))
        for re_val, im_val, label in grid:
            writer.writerow((f"{re_val:.6f}", f"{im_val:.6f}", int(label)))
