"""Ambient swing dynamics in discrete time.

The simulator iterates the first-order-difference form of the linearised
swing equation::

    theta_j(n+2) = 2 theta_j(n+1) - theta_j(n)
                   - (D_j t_s / M_j) (theta_j(n+1) - theta_j(n))
                   + (t_s^2 / M_j) [sum_i b_ij theta_i(n) - B_j theta_j(n) + p_j(n)]

from rest, driven by zero-mean disturbances that are independent across
nodes.

Random streams: node ``k`` draws from
``numpy.random.SeedSequence(seed).spawn(k + 1)[k]`` wrapped in a PCG64
generator. A node's stream therefore depends only on ``(seed, k)``, never on
how many nodes there are or on the order in which streams are consumed.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import signal

from .errors import InstabilityError, PanelFormatError, SimulationOverflowError
from .grid import GridGraph

NOISE_KINDS = ("white_gaussian", "ar1_gaussian")
DEFAULT_BURN_IN = 10_000
MAGNITUDE_CAP = 1e9
STABILITY_MARGIN = 1e-9

_MAGIC = b"GRIDTS01"
_HEADER = struct.Struct("<IQd")


@dataclass(frozen=True)
class NoiseModel:
    kind: str = "white_gaussian"
    psd_level: float = 10.0
    ar_coefficient: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if not self.psd_level >= 0:
            raise ValueError("psd_level must be non-negative")
        if self.kind == "ar1_gaussian" and not -1 < self.ar_coefficient < 1:
            raise ValueError("ar_coefficient must lie in (-1, 1)")

    def scaled(self, factor):
        return NoiseModel(self.kind, self.psd_level * factor, self.ar_coefficient, self.seed)


def node_generator(seed, node):
    child = np.random.SeedSequence(seed).spawn(node + 1)[node]
    return np.random.Generator(np.random.PCG64(child))


class NoiseStreams:
    """Chunked access to the per-node disturbance streams of a noise model.

    Consuming ``k`` samples and then ``m`` more yields exactly the first
    ``k + m`` samples of each stream.
    """

    def __init__(self, noise: NoiseModel, n_nodes: int):
        self.noise = noise
        self.n_nodes = n_nodes
        self._gens = [node_generator(noise.seed, k) for k in range(n_nodes)]
        self._ar_state = None

    def take(self, count):
        """Return the next ``count`` samples of every stream as an (N, count) array."""
        noise = self.noise
        w = np.empty((self.n_nodes, count))
        for k, gen in enumerate(self._gens):
            w[k] = gen.standard_normal(count)
        if noise.psd_level == 0:
            return np.zeros_like(w)
        sd = np.sqrt(noise.psd_level)
        if noise.kind == "white_gaussian":
            return sd * w
        a = noise.ar_coefficient
        innov = sd * np.sqrt(1 - a * a) * w
        if self._ar_state is None:
            # stationary start: x(0) ~ N(0, psd_level)
            innov[:, 0] = sd * w[:, 0]
            out = signal.lfilter([1.0], [1.0, -a], innov, axis=1)
        else:
            zi = (a * self._ar_state)[:, None]
            out, _ = signal.lfilter([1.0], [1.0, -a], innov, axis=1, zi=zi)
        self._ar_state = out[:, -1].copy()
        return out


def draw_noise(noise: NoiseModel, node: int, n: int):
    """First ``n`` disturbance samples of ``node``'s stream."""
    if node < 0:
        raise ValueError("node index must be non-negative")
    streams = NoiseStreams(noise, node + 1)
    return streams.take(n)[node]


@dataclass(frozen=True, eq=False)
class TimeSeriesPanel:
    """N x T matrix of sampled phase-angle deviations (radians)."""

    data: np.ndarray
    ts: float

    def __post_init__(self):
        data = np.array(self.data, dtype=float)
        if data.ndim != 2 or data.shape[1] == 0 or data.shape[0] == 0:
            raise ValueError("panel data must be a non-empty N x T array")
        if not np.isfinite(data).all():
            raise ValueError("panel contains non-finite values")
        if not self.ts > 0:
            raise ValueError("sampling interval must be positive")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "ts", float(self.ts))

    @property
    def n_nodes(self):
        return self.data.shape[0]

    @property
    def n_samples(self):
        return self.data.shape[1]

    def __eq__(self, other):
        if not isinstance(other, TimeSeriesPanel):
            return NotImplemented
        return self.ts == other.ts and np.array_equal(self.data, other.data)

    __hash__ = None


# -- stability ----------------------------------------------------------------


def companion_matrix(g: GridGraph, t_s: float):
    """One-step matrix of the joint recursion on the state [theta(n+1); theta(n)]."""
    n = g.node_count
    a = g.damping * t_s / g.inertia
    c = t_s**2 / g.inertia
    A = np.zeros((2 * n, 2 * n))
    A[:n, :n] = np.diag(2.0 - a)
    A[:n, n:] = -np.diag(1.0 - a) - c[:, None] * g.laplacian()
    A[n:, :n] = np.eye(n)
    return A


@dataclass(frozen=True)
class StabilityReport:
    stable: bool
    spectral_radius: float
    full_spectral_radius: float

    def __bool__(self):
        return self.stable


def stability_check(g: GridGraph, t_s: float) -> StabilityReport:
    """Spectral radius of the companion matrix, rigid-rotation mode removed.

    Shifting every angle by the same constant is an equilibrium of the swing
    equations, so the companion matrix always has one eigenvalue at exactly
    1. That single eigenvalue is set aside; any other eigenvalue within
    ``STABILITY_MARGIN`` of the unit circle makes the model unstable.
    ``full_spectral_radius`` keeps the raw value.
    """
    ev = np.linalg.eigvals(companion_matrix(g, t_s))
    mags = np.abs(ev)
    full = float(mags.max())
    k = int(np.argmin(np.abs(ev - 1.0)))
    rest = np.delete(mags, k) if abs(ev[k] - 1.0) < 1e-6 else mags
    radius = float(rest.max()) if rest.size else 0.0
    return StabilityReport(radius < 1.0 - STABILITY_MARGIN, radius, full)


# -- simulation -----------------------------------------------------------------


def simulate_recursion(g: GridGraph, t_s: float, disturbance, magnitude_cap=MAGNITUDE_CAP, state=None):
    """Run the recursion for a given (N, K) disturbance array.

    Returns ``(theta, state)`` where ``theta[:, n]`` is theta(n) and ``state``
    is the pair (theta(K+1), theta(K)) needed to continue. Starts from rest
    unless ``state`` is given.
    """
    n = g.node_count
    p = np.asarray(disturbance, dtype=float)
    steps = p.shape[1]
    A = companion_matrix(g, t_s).T.copy()
    u = np.zeros((steps, 2 * n))
    u[:, :n] = (p * (t_s**2 / g.inertia)[:, None]).T
    x = np.zeros(2 * n) if state is None else np.asarray(state, dtype=float).copy()
    buf = np.empty((steps, 2 * n))
    for k in range(steps):
        buf[k] = x
        x = x @ A + u[k]
    theta = buf[:, n:].T
    if not np.isfinite(x).all() or np.abs(theta).max(initial=0.0) > magnitude_cap:
        raise SimulationOverflowError(
            f"phase angle magnitude exceeded {magnitude_cap:g}; parameters are numerically unstable"
        )
    return np.ascontiguousarray(theta), x


def simulate(
    g: GridGraph,
    noise: NoiseModel,
    t_s: float,
    n_samples: int,
    burn_in: int = DEFAULT_BURN_IN,
    magnitude_cap: float = MAGNITUDE_CAP,
    chunk: int = 1 << 16,
) -> TimeSeriesPanel:
    """Simulate ``n_samples`` post-burn-in samples of every node's phase angle."""
    if n_samples <= 0:
        raise ValueError("n_samples must be positive")
    if burn_in < 0:
        raise ValueError("burn_in must be non-negative")
    report = stability_check(g, t_s)
    if not report.stable:
        raise InstabilityError(report.spectral_radius)
    streams = NoiseStreams(noise, g.node_count)
    total = burn_in + n_samples
    out = np.empty((g.node_count, n_samples))
    state = None
    done = 0
    while done < total:
        k = min(chunk, total - done)
        theta, state = simulate_recursion(g, t_s, streams.take(k), magnitude_cap, state)
        lo, hi = max(done, burn_in), done + k
        if hi > lo:
            out[:, lo - burn_in : hi - burn_in] = theta[:, lo - done :]
        done += k
    return TimeSeriesPanel(out, t_s)


# -- panel files ----------------------------------------------------------------


def write_panel(path, panel: TimeSeriesPanel):
    """Write the binary GRIDTS01 format (little-endian, node-major)."""
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(_HEADER.pack(panel.n_nodes, panel.n_samples, panel.ts))
        fh.write(np.ascontiguousarray(panel.data, dtype="<f8").tobytes())
    return Path(path)


def read_panel(path) -> TimeSeriesPanel:
    with open(path, "rb") as fh:
        magic = fh.read(len(_MAGIC))
        if magic != _MAGIC:
            raise PanelFormatError(f"{path}: not a GRIDTS01 panel")
        head = fh.read(_HEADER.size)
        if len(head) != _HEADER.size:
            raise PanelFormatError(f"{path}: truncated header")
        n, t, ts = _HEADER.unpack(head)
        raw = fh.read()
    if len(raw) != 8 * n * t:
        raise PanelFormatError(f"{path}: expected {n * t} samples, found {len(raw) // 8}")
    data = np.frombuffer(raw, dtype="<f8").reshape(n, t).astype(float)
    return TimeSeriesPanel(data, ts)


def write_panel_csv(path, panel: TimeSeriesPanel):
    """CSV alternative: ``n,theta_1,...,theta_N``; the sampling interval is not stored."""
    cols = ",".join(f"theta_{k + 1}" for k in range(panel.n_nodes))
    with open(path, "w") as fh:
        fh.write(f"n,{cols}\n")
        for k in range(panel.n_samples):
            fh.write(str(k) + "," + ",".join(repr(float(v)) for v in panel.data[:, k]) + "\n")
    return Path(path)


def read_panel_csv(path, ts) -> TimeSeriesPanel:
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        if not header or header[0] != "n" or any(
            h != f"theta_{k + 1}" for k, h in enumerate(header[1:])
        ):
            raise PanelFormatError(f"{path}: expected header n,theta_1,...,theta_N")
        try:
            rows = np.loadtxt(fh, delimiter=",", ndmin=2)
        except ValueError as exc:
            raise PanelFormatError(f"{path}: {exc}") from None
    return TimeSeriesPanel(rows[:, 1:].T, ts)
