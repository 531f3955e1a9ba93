"""Run configuration and experiment drivers (single estimate, sample-size sweep)."""

from __future__ import annotations

import csv
import dataclasses
import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

from .dynamics import NOISE_KINDS, NoiseModel, simulate
from .errors import ConfigError, GridWienerError
from .estimation import estimate_bank
from .spectral import FrequencyGrid, block_response_stderr, fir_frequency_response
from .topology import learn_topology, score

log = logging.getLogger(__name__)


@dataclass
class RunConfig:
    ts: float = 0.01
    samples: int = 500_000
    burn_in: int = 10_000
    seed: int = 0
    psd: float = 10.0
    fir_order: int = 20
    rho: float = 1e-3
    tau: float = 0.2 * math.pi
    omega_points: int = 65
    omega_full: bool = False
    noise_kind: str = "white_gaussian"
    ar_coefficient: float = 0.0
    # estimation and noise-floor settings
    difference: int = 1
    noise_blocks: int = 32
    snr: float = 4.0
    smoothing: int = 5
    workers: int = 1

    def noise(self, seed=None):
        return NoiseModel(self.noise_kind, self.psd, self.ar_coefficient, self.seed if seed is None else seed)

    def grid(self):
        return FrequencyGrid.uniform(self.omega_points, self.omega_full)

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)


_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}


def _coerce(name, raw):
    kind = type(RunConfig.__dataclass_fields__[name].default)
    text = str(raw).strip()
    try:
        if kind is bool:
            if text.lower() in ("1", "true", "yes", "on"):
                return True
            if text.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if kind is int:
            return int(float(text)) if float(text).is_integer() else int(text)
        if kind is float:
            low = text.lower().replace("*", "")
            if low.endswith("pi"):
                head = low[:-2].strip()
                return (float(head) if head else 1.0) * math.pi
            return float(text)
        return text
    except ValueError:
        raise ConfigError(f"bad value for {name}: {raw!r}") from None


def parse_config_text(text):
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line {lineno}: expected key = value")
        key, raw = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _FIELDS:
            raise ConfigError(f"config line {lineno}: unknown key {key!r}")
        values[key] = _coerce(key, raw)
    return values


def load_config(path=None, overrides=None) -> RunConfig:
    """Defaults, then the file at ``path``, then non-None ``overrides``."""
    values = {}
    if path is not None:
        try:
            values.update(parse_config_text(Path(path).read_text()))
        except OSError as exc:
            raise ConfigError(f"{path}: {exc.strerror}") from exc
    for key, v in (overrides or {}).items():
        if v is not None:
            values[key] = _coerce(key, v) if isinstance(v, str) else v
    return validate_config(RunConfig(**values))


def validate_config(cfg: RunConfig) -> RunConfig:
    checks = [
        (cfg.ts > 0, "ts must be positive"),
        (cfg.samples > 0, "samples must be positive"),
        (cfg.burn_in >= 0, "burn_in must be non-negative"),
        (cfg.psd >= 0, "psd must be non-negative"),
        (cfg.fir_order >= 0, "fir_order must be non-negative"),
        (cfg.rho >= 0, "rho must be non-negative"),
        (cfg.tau > 0, "tau must be positive"),
        (cfg.omega_points >= 2, "omega_points must be at least 2"),
        (cfg.difference >= 0, "difference must be non-negative"),
        (cfg.snr >= 0, "snr must be non-negative"),
        (cfg.smoothing >= 1, "smoothing must be at least 1"),
        (cfg.workers >= 1, "workers must be at least 1"),
        (cfg.noise_kind in NOISE_KINDS, f"noise_kind must be one of {NOISE_KINDS}"),
        (-1 < cfg.ar_coefficient < 1, "ar_coefficient must lie in (-1, 1)"),
    ]
    for ok, msg in checks:
        if not ok:
            raise ConfigError(msg)
    return cfg


def noise_blocks_for(cfg: RunConfig, n_samples):
    """Largest usable block count not above ``cfg.noise_blocks``."""
    per_block = 8 * cfg.fir_order + 2 + cfg.difference
    return min(cfg.noise_blocks, n_samples // per_block)


def estimate_topology(panel, cfg: RunConfig, prune_edges=True):
    """Bank, responses (with noise floor) and topology estimate for a panel.

    Returns ``(estimate, bank, responses)``.
    """
    bank = estimate_bank(panel, cfg.fir_order, difference=cfg.difference, workers=cfg.workers)
    grid = cfg.grid()
    blocks = noise_blocks_for(cfg, panel.n_samples)
    stderr = None
    if cfg.noise_blocks >= 2 and blocks >= 2:
        stderr = block_response_stderr(
            panel, cfg.fir_order, grid, blocks, cfg.smoothing, cfg.difference, cfg.workers
        )
    elif cfg.noise_blocks >= 2:
        log.warning("panel too short for a noise floor; phase test uses magnitude flags only")
    responses = fir_frequency_response(bank, grid, stderr)
    snr = cfg.snr if stderr is not None else None
    est = learn_topology(bank, responses, cfg.rho, cfg.tau, snr, prune_edges)
    return est, bank, responses


@dataclass(frozen=True)
class SweepRow:
    samples_per_node: int
    relative_error: float
    fp: int
    fn: int
    wall_time_s: float
    seed: int
    error: str = ""


@dataclass
class SweepResult:
    rows: list = field(default_factory=list)

    def write_csv(self, path, timing=True):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("samples_per_node", "relative_error", "fp", "fn", "wall_time_s", "seed", "error"))
            for r in self.rows:
                w.writerow(
                    (
                        r.samples_per_node,
                        repr(r.relative_error),
                        r.fp,
                        r.fn,
                        f"{r.wall_time_s:.3f}" if timing else "",
                        r.seed,
                        r.error,
                    )
                )


def run_once(g, cfg: RunConfig, samples=None, seed=None, prune_edges=True):
    """Simulate, estimate and score one panel. Returns ``(report, estimate)``."""
    panel = simulate(g, cfg.noise(seed), cfg.ts, samples or cfg.samples, cfg.burn_in)
    est, _, _ = estimate_topology(panel, cfg, prune_edges)
    return score(g, est), est


def run_sweep(g, sample_list, cfg: RunConfig, prune_edges=True, on_row=None) -> SweepResult:
    """One independent simulate-estimate-score cycle per sample count.

    Row ``k`` uses seed ``cfg.seed + k``. Failures are recorded in the row's
    ``error`` field and the sweep carries on.
    """
    counts = [int(s) for s in sample_list]
    if not counts or any(c <= 0 for c in counts) or counts != sorted(counts):
        raise ConfigError("sample list must be ascending positive integers")
    result = SweepResult()
    for k, count in enumerate(counts):
        seed = cfg.seed + k
        start = time.perf_counter()
        try:
            report, est = run_once(g, cfg, count, seed, prune_edges)
            row = SweepRow(
                count, report.relative_error, report.false_positives, report.false_negatives,
                time.perf_counter() - start, seed,
            )
        except GridWienerError as exc:
            row = SweepRow(count, math.nan, -1, -1, time.perf_counter() - start, seed, f"{exc.category}: {exc}")
            est = None
        result.rows.append(row)
        if on_row is not None:
            on_row(row, est)
    return result
