"""Empirical correlations and FIR Wiener filter banks.

For target node ``j`` the FIR Wiener estimate is

    theta_hat_j(n) = sum_{k != j} sum_{p=-F}^{F} h_{k,p} theta_k(n + p)

and the taps solve the normal equations obtained by making the residual
orthogonal to every ``theta_i(n + l)``, ``i != j``, ``|l| <= F``::

    sum_{k,p} R_{k i}(p - l) h_{k,p} = R_{j i}(-l)

with ``R_{xy}(m) = E[x(n + m) y(n)]``.

Series are de-meaned and, by default, first-differenced before correlation.
Applying one common filter to every series leaves the Wiener filter
unchanged, and differencing removes the random-walk drift of the common
rotation mode that otherwise swamps the sample correlations.
"""

from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.linalg import lapack

from .dynamics import TimeSeriesPanel
from .errors import DimensionError, LagTooLargeError, SingularSystemError

CONDITION_LIMIT = 1e12
RIDGE_SCALE = 1e-8


def _series(panel):
    if isinstance(panel, TimeSeriesPanel):
        return panel.data
    x = np.asarray(panel, dtype=float)
    return x[None, :] if x.ndim == 1 else x


def prepare_series(panel, difference=0):
    """De-meaned (optionally differenced) copy of the panel's series."""
    x = _series(panel)
    if difference:
        x = np.diff(x, n=difference, axis=1)
    return x - x.mean(axis=1, keepdims=True)


@dataclass(frozen=True, eq=False)
class CorrelationTable:
    """Biased cross-correlation estimates ``R[i, j](l)`` for ``|l| <= max_lag``.

    ``values[l + max_lag, i, j] = (1/T) sum_n x_i(n + l) x_j(n)``.
    """

    values: np.ndarray
    max_lag: int
    n_samples: int
    difference: int = 0
    estimator: str = "biased"

    @property
    def n_nodes(self):
        return self.values.shape[1]

    def __call__(self, i, j, lag):
        return self.values[lag + self.max_lag, i, j]


def estimate_correlations(panel, max_lag, difference=0) -> CorrelationTable:
    """Biased correlation table of a panel.

    Only non-negative lags are computed; negative lags are filled by the
    mirror ``R_ij(-l) = R_ji(l)`` so the symmetry holds bit-for-bit.
    """
    x = prepare_series(panel, difference)
    n, t = x.shape
    max_lag = int(max_lag)
    if max_lag < 0:
        raise ValueError("max_lag must be non-negative")
    if not max_lag < t / 4:
        raise LagTooLargeError(f"max_lag {max_lag} needs more than {4 * max_lag} samples, have {t}")
    if not np.isfinite(x).all():
        raise ValueError("panel contains non-finite values")
    vals = np.empty((2 * max_lag + 1, n, n))
    for lag in range(max_lag + 1):
        r = (x[:, lag:] @ x[:, : t - lag].T) / t
        vals[max_lag + lag] = r
        vals[max_lag - lag] = r.T
    # lag 0 is computed from a symmetric product; force exact symmetry
    r0 = vals[max_lag]
    vals[max_lag] = np.triu(r0) + np.triu(r0, 1).T
    vals.setflags(write=False)
    return CorrelationTable(vals, max_lag, t, difference)


def normal_matrix(table: CorrelationTable, fir_order: int):
    """Normal-equation matrix over all N nodes, indexed by (node, lag) pairs.

    Entry ``[(i, l), (k, p)]`` is ``R_{k i}(p - l)``. The system for target
    ``j`` is this matrix with node ``j``'s rows and columns removed.
    """
    F = int(fir_order)
    if table.max_lag < 2 * F:
        raise DimensionError(f"table max_lag {table.max_lag} < 2F = {2 * F}")
    lags = np.arange(-F, F + 1)
    idx = lags[None, :] - lags[:, None] + table.max_lag  # [l, p] -> p - l
    block = table.values[idx]  # [l, p, k, i]
    n, w = table.n_nodes, 2 * F + 1
    return block.transpose(3, 0, 2, 1).reshape(n * w, n * w)


def normal_rhs(table: CorrelationTable, target: int, fir_order: int):
    """Right-hand side ``R_{j i}(-l)`` for every node ``i`` (including ``j``)."""
    F = int(fir_order)
    lags = np.arange(-F, F + 1)
    return table.values[table.max_lag - lags, target, :].T  # [i, l]


@dataclass(frozen=True)
class SolveReport:
    condition: float
    ridge: float = 0.0

    @property
    def ridged(self):
        return self.ridge > 0


def _cholesky_solve(a, b):
    c, info = lapack.dpotrf(a, lower=0, clean=1, overwrite_a=0)
    if info != 0:
        return None, np.inf
    anorm = np.abs(a).sum(axis=0).max()
    rcond, info = lapack.dpocon(c, anorm)
    cond = np.inf if rcond == 0 else 1.0 / rcond
    x, info = lapack.dpotrs(c, b)
    if info != 0 or not np.isfinite(x).all():
        return None, np.inf
    return x, cond


def solve_system(a, b):
    """Solve the symmetric positive (semi)definite system ``a x = b``.

    Falls back once to a ridge of ``1e-8 * trace(a) / dim`` when the
    Cholesky factorisation fails or the condition estimate exceeds 1e12.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or b.shape[0] != a.shape[0]:
        raise DimensionError(f"incompatible system shapes {a.shape} and {b.shape}")
    x, cond = _cholesky_solve(a, b)
    if x is not None and cond <= CONDITION_LIMIT:
        return x, SolveReport(cond)
    ridge = RIDGE_SCALE * np.trace(a) / a.shape[0]
    if not ridge > 0:
        raise SingularSystemError("normal equations are identically zero")
    x, cond = _cholesky_solve(a + ridge * np.eye(a.shape[0]), b)
    if x is None:
        raise SingularSystemError("normal equations singular even after ridge regularisation")
    return x, SolveReport(cond, ridge)


def _solve_from_full(full, table, target, fir_order):
    n = table.n_nodes
    w = 2 * fir_order + 1
    keep = np.ones(n * w, dtype=bool)
    keep[target * w : (target + 1) * w] = False
    a = full[np.ix_(keep, keep)]
    rhs = np.delete(normal_rhs(table, target, fir_order), target, axis=0).reshape(-1)
    return solve_system(a, rhs)


def solve_wiener(table: CorrelationTable, target: int, fir_order: int):
    """Taps of target ``j``'s FIR Wiener filter.

    Returns ``(h, report)``; ``h`` has length ``(2F+1)(N-1)`` laid out as
    ``[h_1, ..., h_{j-1}, h_{j+1}, ..., h_N]`` with each ``h_i`` ordered by lag
    ``-F..F``.
    """
    if table.n_nodes < 2:
        raise DimensionError("need at least two nodes")
    if not 0 <= target < table.n_nodes:
        raise DimensionError(f"target {target} out of range")
    full = normal_matrix(table, fir_order)
    return _solve_from_full(full, table, target, int(fir_order))


@dataclass(frozen=True, eq=False)
class FirWienerBank:
    """One FIR Wiener filter per target node.

    ``taps[j, a]`` holds the 2F+1 taps applied to the ``a``-th other node of
    ``j`` (nodes in increasing order, ``j`` skipped).
    """

    taps: np.ndarray
    fir_order: int
    reports: tuple = ()

    @property
    def n_nodes(self):
        return self.taps.shape[0]

    @property
    def lags(self):
        return np.arange(-self.fir_order, self.fir_order + 1)

    @staticmethod
    def slot(target, source):
        if source == target:
            raise ValueError("a node has no filter onto itself")
        return source if source < target else source - 1

    def filter(self, target, source):
        """Taps of the filter from ``source`` into ``target`` (``h_{target <- source}``)."""
        return self.taps[target, self.slot(target, source)]

    def vector(self, target):
        return self.taps[target].reshape(-1)

    def norm(self, target, source):
        return float(np.linalg.norm(self.filter(target, source)))

    def norms(self):
        """N x N matrix of l2 tap norms, ``[target, source]``; zero diagonal."""
        n = self.n_nodes
        out = np.zeros((n, n))
        for j in range(n):
            others = [k for k in range(n) if k != j]
            out[j, others] = np.linalg.norm(self.taps[j], axis=1)
        return out

    def relabel(self, perm):
        """Bank for the graph with node ``k`` renamed to ``perm[k]``."""
        n = self.n_nodes
        perm = np.asarray(perm)
        taps = np.zeros_like(self.taps)
        for j in range(n):
            for i in range(n):
                if i != j:
                    taps[perm[j], self.slot(perm[j], perm[i])] = self.filter(j, i)
        reports = tuple(self.reports[k] for k in np.argsort(perm)) if self.reports else ()
        return FirWienerBank(taps, self.fir_order, reports)


def bank_from_table(table: CorrelationTable, fir_order: int, workers: int = 1) -> FirWienerBank:
    n = table.n_nodes
    F = int(fir_order)
    if n < 2:
        raise DimensionError("need at least two nodes")
    full = normal_matrix(table, F)

    def one(j):
        try:
            return _solve_from_full(full, table, j, F)
        except (SingularSystemError, DimensionError) as exc:
            raise type(exc)(f"node {j + 1}: {exc}") from exc

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, range(n)))
    else:
        results = [one(j) for j in range(n)]
    taps = np.stack([h.reshape(n - 1, 2 * F + 1) for h, _ in results])
    taps.setflags(write=False)
    return FirWienerBank(taps, F, tuple(r for _, r in results))


def estimate_bank(panel, fir_order: int, max_lag=None, difference=1, workers=1) -> FirWienerBank:
    """Estimate every node's FIR Wiener filter from a panel."""
    F = int(fir_order)
    max_lag = 2 * F if max_lag is None else int(max_lag)
    x = _series(panel)
    try:
        table = estimate_correlations(x, max_lag, difference)
    except LagTooLargeError as exc:
        nodes = ", ".join(str(k + 1) for k in range(x.shape[0]))
        raise LagTooLargeError(f"nodes {nodes}: {exc}") from exc
    return bank_from_table(table, F, workers)


def residuals(panel, bank: FirWienerBank, target: int, difference=None):
    """Residual series ``x_j(n) - x_hat_j(n)`` over the samples where all taps apply.

    Returns ``(residual, x)`` where ``x`` is the prepared series matrix the
    residual is aligned with (column ``n`` of ``x`` corresponds to
    ``residual[n - F]``).
    """
    F = bank.fir_order
    x = prepare_series(panel, difference if difference is not None else 0)
    n, t = x.shape
    est = np.zeros(t - 2 * F)
    for i in range(n):
        if i == target:
            continue
        h = bank.filter(target, i)
        for p, c in zip(range(-F, F + 1), h):
            est += c * x[i, F + p : t - F + p]
    return x[target, F : t - F] - est, x


def write_bank_csv(path, bank: FirWienerBank):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("target", "source", "lag", "coefficient"))
        for j in range(bank.n_nodes):
            for i in range(bank.n_nodes):
                if i == j:
                    continue
                for lag, c in zip(bank.lags, bank.filter(j, i)):
                    w.writerow((j + 1, i + 1, int(lag), repr(float(c))))


def read_bank_csv(path) -> FirWienerBank:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    n = max(max(int(r["target"]), int(r["source"])) for r in rows)
    F = max(abs(int(r["lag"])) for r in rows)
    taps = np.zeros((n, n - 1, 2 * F + 1))
    for r in rows:
        j, i = int(r["target"]) - 1, int(r["source"]) - 1
        taps[j, FirWienerBank.slot(j, i), int(r["lag"]) + F] = float(r["coefficient"])
    return FirWienerBank(taps, F)
