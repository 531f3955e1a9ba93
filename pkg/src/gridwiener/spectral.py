"""Frequency responses of FIR Wiener banks and the model-based oracle.

The swing model in the z-domain is ``L(z) Theta(z) = P(z)`` with

    L(z)_{jj} = S_j(z) = M_j/t_s^2 (z-1)^2 + D_j/t_s (z-1) + B_j
    L(z)_{ji} = -b_ji   for every line (i, j)

so the angle spectrum is ``Phi_Theta = L^{-1} Phi_P L^{-H}`` on the unit
circle. Its inverse ``K = L^H Phi_P^{-1} L`` is a trigonometric polynomial
that stays finite at ``omega = 0`` where ``Phi_Theta`` itself blows up (the
rigid-rotation mode). The non-causal Wiener filter of node ``j`` from all
other nodes is read off the precision matrix::

    W_ji = -K_ji / K_jj

which equals ``Phi_{j jbar} Phi_{jbar}^{-1}`` wherever ``Phi_Theta`` exists.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .dynamics import NoiseModel, TimeSeriesPanel, stability_check
from .errors import InstabilityError, SingularSystemError
from .estimation import FirWienerBank, estimate_bank
from .grid import GridGraph

INDETERMINATE_RELATIVE = 1e-6


@dataclass(frozen=True, eq=False)
class FrequencyGrid:
    """Increasing frequencies in radians/sample within [-pi, pi]."""

    points: np.ndarray

    def __post_init__(self):
        w = np.array(self.points, dtype=float).reshape(-1)
        if w.size == 0:
            raise ValueError("frequency grid is empty")
        if np.any(np.diff(w) <= 0):
            raise ValueError("frequency grid must be strictly increasing")
        if w[0] < -np.pi or w[-1] > np.pi:
            raise ValueError("frequencies must lie in [-pi, pi]")
        w.setflags(write=False)
        object.__setattr__(self, "points", w)

    @classmethod
    def uniform(cls, count=65, full=False):
        """``count`` points on [0, pi] (default), or on [-pi, pi) with ``full``."""
        if full:
            return cls(-np.pi + 2 * np.pi * np.arange(count) / count)
        if count < 2:
            raise ValueError("need at least two grid points")
        return cls(np.pi * np.arange(count) / (count - 1))

    def __len__(self):
        return self.points.size

    @property
    def z(self):
        return np.exp(1j * self.points)

    @property
    def label(self):
        w = self.points
        return f"{w.size}pt[{w[0]:.6g},{w[-1]:.6g}]"


def principal_phase(values):
    """Argument in (-pi, pi]; the negative real axis maps to +pi."""
    ph = np.angle(values)
    # + 0.0 turns a signed zero into +0.0
    return np.where(ph <= -np.pi, ph + 2 * np.pi, ph) + 0.0


@dataclass(frozen=True, eq=False)
class FrequencyResponseSet:
    """Complex responses ``values[j, i, k] = W_ji(exp(i omega_k))``.

    The diagonal ``j == i`` is unused and set to zero. ``stderr``, when
    present, holds a standard error per response value (same shape).
    """

    values: np.ndarray
    grid: FrequencyGrid
    stderr: np.ndarray | None = None

    @property
    def n_nodes(self):
        return self.values.shape[0]

    def response(self, target, source):
        return self.values[target, source]

    def magnitude(self, target=None, source=None):
        v = self.values if target is None else self.values[target, source]
        return np.abs(v)

    def phase(self, target=None, source=None):
        v = self.values if target is None else self.values[target, source]
        return principal_phase(v)

    def noise(self, target, source):
        return None if self.stderr is None else self.stderr[target, source]

    def indeterminate(self, target, source, snr=None):
        return indeterminate_mask(self.response(target, source), self.noise(target, source), snr)


def indeterminate_mask(response, stderr=None, snr=None):
    """Grid points whose phase carries no information.

    A point is flagged when its magnitude is below ``1e-6`` of the largest
    magnitude of the same response, or, when a standard error is available,
    below ``snr`` standard errors.
    """
    mag = np.abs(np.asarray(response))
    peak = mag.max(initial=0.0)
    flags = mag < INDETERMINATE_RELATIVE * peak
    if peak == 0:
        flags = np.ones_like(mag, dtype=bool)
    if stderr is not None and snr is not None:
        flags |= mag < snr * np.asarray(stderr)
    return flags


def eval_S(g: GridGraph, node: int, t_s: float, z):
    """Diagonal entry ``S_j(z)`` of the swing operator."""
    dz = np.asarray(z) - 1.0
    return g.inertia[node] / t_s**2 * dz**2 + g.damping[node] / t_s * dz + g.total_susceptance[node]


def _noise_psd(noise_psd, n, count):
    """Noise PSD as a (count, N) positive array."""
    if isinstance(noise_psd, NoiseModel):
        raise TypeError("pass ar1_noise_psd(...) or per-node values, not a NoiseModel")
    p = np.asarray(noise_psd, dtype=float)
    if p.ndim == 0:
        p = np.full(n, float(p))
    if p.ndim == 1:
        if p.shape != (n,):
            raise ValueError(f"need {n} noise PSD values, got {p.shape[0]}")
        p = np.broadcast_to(p, (count, n))
    if p.shape != (count, n):
        raise ValueError("noise PSD must be scalar, per node, or per (frequency, node)")
    if not (np.isfinite(p).all() and (p > 0).all()):
        raise ValueError("noise PSD values must be positive")
    return p


def ar1_noise_psd(noise: NoiseModel, n_nodes: int, grid: FrequencyGrid):
    """Disturbance PSD of a :class:`NoiseModel` on the grid, shape (count, N)."""
    if noise.kind == "white_gaussian":
        return np.full((len(grid), n_nodes), noise.psd_level)
    a = noise.ar_coefficient
    s = noise.psd_level * (1 - a * a) / np.abs(1 - a * np.exp(-1j * grid.points)) ** 2
    return np.repeat(s[:, None], n_nodes, axis=1)


@dataclass(frozen=True, eq=False)
class ModelSpectra:
    """Swing operator ``L`` and precision ``K = Phi_Theta^{-1}`` on a grid.

    Arrays are indexed ``[k, row, col]`` over grid point ``k``.
    """

    operator: np.ndarray
    precision: np.ndarray
    noise_psd: np.ndarray
    grid: FrequencyGrid

    def psd(self, k):
        """Angle spectrum ``L^{-1} Phi_P L^{-H}`` at grid point ``k``.

        Raises ``SingularSystemError`` at ``omega = 0``, where the
        rigid-rotation mode makes ``L`` singular.
        """
        L = self.operator[k]
        try:
            Linv = np.linalg.inv(L)
        except np.linalg.LinAlgError:
            raise SingularSystemError(f"swing operator singular at omega={self.grid.points[k]:g}") from None
        if np.linalg.cond(L) > 1e13:
            raise SingularSystemError(f"swing operator singular at omega={self.grid.points[k]:g}")
        return Linv @ np.diag(self.noise_psd[k]) @ Linv.conj().T


def model_spectra(g: GridGraph, noise_psd, t_s: float, grid: FrequencyGrid) -> ModelSpectra:
    n = g.node_count
    z = grid.z
    psd = _noise_psd(noise_psd, n, len(grid))
    w = g.weight_matrix()
    dz = z - 1.0
    diag = (
        g.inertia[None, :] / t_s**2 * dz[:, None] ** 2
        + g.damping[None, :] / t_s * dz[:, None]
        + g.total_susceptance[None, :]
    )
    L = np.repeat(-w[None, :, :].astype(complex), len(grid), axis=0)
    idx = np.arange(n)
    L[:, idx, idx] = diag
    K = np.conj(np.transpose(L, (0, 2, 1))) @ (L / psd[:, :, None])
    return ModelSpectra(L, K, psd, grid)


def wiener_from_precision(K):
    """Wiener responses ``-K_ji / K_jj`` for a stack of precision matrices."""
    d = np.real(np.diagonal(K, axis1=-2, axis2=-1))
    if not (np.isfinite(d).all() and (d > 0).all()):
        raise SingularSystemError("precision matrix has a non-positive diagonal")
    W = -K / d[..., :, None]
    n = K.shape[-1]
    W[..., np.arange(n), np.arange(n)] = 0.0
    return W


def wiener_from_psd(phi, target):
    """Row ``Phi_{j jbar} Phi_{jbar}^{-1}`` by direct partitioning, for one spectrum.

    Returns a length-N vector with a zero at ``target``.
    """
    n = phi.shape[0]
    others = [k for k in range(n) if k != target]
    row = phi[target, others]
    sub = phi[np.ix_(others, others)]
    try:
        w = np.linalg.solve(sub.T, row)
    except np.linalg.LinAlgError:
        raise SingularSystemError("partition of the angle spectrum is singular") from None
    out = np.zeros(n, dtype=complex)
    out[others] = w
    return out


def oracle_wiener_response(g: GridGraph, noise_psd, t_s: float, grid: FrequencyGrid) -> FrequencyResponseSet:
    """Exact non-causal Wiener responses implied by the swing model."""
    report = stability_check(g, t_s)
    if not report.stable:
        raise InstabilityError(report.spectral_radius)
    spectra = model_spectra(g, noise_psd, t_s, grid)
    W = wiener_from_precision(spectra.precision)  # [k, j, i]
    return FrequencyResponseSet(np.ascontiguousarray(np.transpose(W, (1, 2, 0))), grid)


def fir_frequency_response(bank: FirWienerBank, grid: FrequencyGrid, stderr=None) -> FrequencyResponseSet:
    """``W_ji(exp(i w)) = sum_p h_{j<-i, p} exp(i w p)`` for every ordered pair."""
    n = bank.n_nodes
    basis = np.exp(1j * np.outer(bank.lags, grid.points))  # [p, k]
    compact = bank.taps @ basis  # [j, slot, k]
    values = np.zeros((n, n, len(grid)), dtype=complex)
    for j in range(n):
        others = [k for k in range(n) if k != j]
        values[j, others] = compact[j]
    return FrequencyResponseSet(values, grid, stderr)


def block_response_stderr(panel, fir_order, grid: FrequencyGrid, blocks=32, smoothing=5, difference=1, workers=1):
    """Standard error of FIR Wiener responses from contiguous-block re-estimates.

    The panel is cut into ``blocks`` pieces, a bank is fitted on each, and the
    spread of the block responses gives the standard error of their mean.
    The variance is then averaged over ``smoothing`` neighbouring grid points
    to steady the estimate. Returns an (N, N, count) array.
    """
    x = panel.data if isinstance(panel, TimeSeriesPanel) else np.asarray(panel, dtype=float)
    t = x.shape[1]
    if blocks < 2:
        raise ValueError("need at least two blocks")
    size = t // blocks
    resp = []
    for b in range(blocks):
        bank = estimate_bank(x[:, b * size : (b + 1) * size], fir_order, difference=difference, workers=workers)
        resp.append(fir_frequency_response(bank, grid).values)
    resp = np.stack(resp)
    var = (np.abs(resp - resp.mean(axis=0)) ** 2).sum(axis=0) / (blocks * (blocks - 1))
    if smoothing > 1:
        half = smoothing // 2
        padded = np.pad(var, [(0, 0), (0, 0), (half, smoothing - 1 - half)], mode="edge")
        kernel = np.ones(smoothing) / smoothing
        var = np.apply_along_axis(lambda v: np.convolve(v, kernel, mode="valid"), -1, padded)
    return np.sqrt(var)


def write_response_csv(path, responses: FrequencyResponseSet, pairs=None):
    """Rows ``target,source,omega,re,im,magnitude,phase`` (1-based node ids)."""
    n = responses.n_nodes
    if pairs is None:
        pairs = [(j, i) for j in range(n) for i in range(n) if i != j]
    w = responses.grid.points
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(("target", "source", "omega", "re", "im", "magnitude", "phase"))
        for j, i in pairs:
            v = responses.response(j, i)
            ph = principal_phase(v)
            for k in range(len(w)):
                out.writerow(
                    (
                        j + 1,
                        i + 1,
                        repr(float(w[k])),
                        repr(float(v[k].real)),
                        repr(float(v[k].imag)),
                        repr(float(abs(v[k]))),
                        repr(float(ph[k])),
                    )
                )


def read_response_csv(path):
    """Parse a response CSV into ``{(target, source): (omega, complex values)}`` (0-based)."""
    out = {}
    with open(path, newline="") as fh:
        for r in csv.DictReader(fh):
            key = (int(r["target"]) - 1, int(r["source"]) - 1)
            out.setdefault(key, ([], []))
            out[key][0].append(float(r["omega"]))
            out[key][1].append(complex(float(r["re"]), float(r["im"])))
    return {k: (np.array(w), np.array(v)) for k, (w, v) in out.items()}
