"""Edge detection by filter norm and pruning of two-hop edges by phase.

A pair enters the Wiener edge set when the tap norm of either directed
filter exceeds ``rho``. Filters between strict two-hop neighbours have
phase -pi at every frequency, so a detected pair is pruned when the
responses in *both* directions stay within ``tau`` of +-pi at every grid
point that carries phase information.
"""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import MissingResponseError, NodeSetMismatchError
from .spectral import FrequencyResponseSet, indeterminate_mask, principal_phase

SPURIOUS = "spurious"
GENUINE = "genuine"
INDETERMINATE = "indeterminate"


def _norm_matrix(bank_or_norms):
    if hasattr(bank_or_norms, "norms"):
        return bank_or_norms.norms()
    return np.asarray(bank_or_norms, dtype=float)


def detect_edges(bank, rho, responses: FrequencyResponseSet | None = None, snr=None):
    """Undirected Wiener edge set.

    ``(i, j)`` is detected iff ``||h_{j<-i}|| > rho`` or ``||h_{i<-j}|| > rho``.
    When ``responses`` carries standard errors and ``snr`` is given, a pair
    whose responses in both directions are nowhere distinguishable from zero
    is not detected either.
    """
    norms = _norm_matrix(bank)
    n = norms.shape[0]
    edges = set()
    for i, j in itertools.combinations(range(n), 2):
        if not (norms[j, i] > rho or norms[i, j] > rho):
            continue
        if responses is not None and responses.stderr is not None and snr is not None:
            if responses.indeterminate(j, i, snr).all() and responses.indeterminate(i, j, snr).all():
                continue
        edges.add((i, j))
    return frozenset(edges)


def phase_distance_to_pi(phase):
    """Angular distance of each phase to the negative real axis."""
    phase = np.asarray(phase)
    return np.minimum(np.abs(phase - np.pi), np.abs(phase + np.pi))


def classify_direction(response, tau, stderr=None, snr=None):
    """Verdict for one directed response on a grid.

    ``spurious`` when every informative grid point lies within ``tau`` of
    +-pi; ``indeterminate`` when no grid point is informative.
    """
    response = np.asarray(response)
    flags = indeterminate_mask(response, stderr, snr)
    if flags.all():
        return INDETERMINATE
    dist = phase_distance_to_pi(principal_phase(response[~flags]))
    return SPURIOUS if bool((dist < tau).all()) else GENUINE


@dataclass(frozen=True)
class PairDiagnostics:
    norm_fwd: float
    norm_rev: float
    verdict_fwd: str
    verdict_rev: str


@dataclass(frozen=True)
class TopologyEstimate:
    n_nodes: int
    wiener_edges: frozenset
    pruned_edges: frozenset
    diagnostics: dict = field(default_factory=dict)
    rho: float | None = None
    tau: float | None = None
    grid: str = ""

    @property
    def final_edges(self):
        return self.wiener_edges - self.pruned_edges


def prune(wiener_edges, responses: FrequencyResponseSet, tau, norms=None, snr=None, enabled=True) -> TopologyEstimate:
    """Remove pairs whose responses look spurious in both directions.

    For a pair ``(i, j)``, ``i < j``, the forward direction is the filter
    into ``j`` from ``i``. With ``enabled=False`` every verdict is still
    recorded but nothing is removed.
    """
    n = responses.n_nodes
    norm_mat = None if norms is None else _norm_matrix(norms)
    pruned, diag = set(), {}
    for i, j in sorted(wiener_edges):
        if not (0 <= i < n and 0 <= j < n) or i == j:
            raise MissingResponseError(f"no response for pair ({i + 1}, {j + 1})")
        verdicts = []
        for target, source in ((j, i), (i, j)):
            v = responses.response(target, source)
            if not np.isfinite(v).all():
                raise MissingResponseError(f"response {source + 1}->{target + 1} is missing")
            verdicts.append(classify_direction(v, tau, responses.noise(target, source), snr))
        fwd = float(norm_mat[j, i]) if norm_mat is not None else float("nan")
        rev = float(norm_mat[i, j]) if norm_mat is not None else float("nan")
        diag[(i, j)] = PairDiagnostics(fwd, rev, verdicts[0], verdicts[1])
        if enabled and verdicts[0] == SPURIOUS and verdicts[1] == SPURIOUS:
            pruned.add((i, j))
    return TopologyEstimate(n, frozenset(wiener_edges), frozenset(pruned), diag, None, tau, responses.grid.label)


def learn_topology(bank, responses: FrequencyResponseSet, rho, tau, snr=None, prune_edges=True) -> TopologyEstimate:
    """Detection followed by pruning, with thresholds recorded on the estimate."""
    edges = detect_edges(bank, rho, responses, snr)
    est = prune(edges, responses, tau, norms=bank, snr=snr, enabled=prune_edges)
    return TopologyEstimate(est.n_nodes, est.wiener_edges, est.pruned_edges, est.diagnostics, rho, tau, est.grid)


@dataclass(frozen=True)
class ErrorReport:
    false_positives: int
    false_negatives: int
    true_edge_count: int

    @property
    def relative_error(self):
        return (self.false_positives + self.false_negatives) / self.true_edge_count

    def line(self):
        return (
            f"fp={self.false_positives} fn={self.false_negatives} "
            f"true={self.true_edge_count} rel_err={self.relative_error!r}"
        )


def score(truth, estimate: TopologyEstimate) -> ErrorReport:
    if truth.node_count != estimate.n_nodes:
        raise NodeSetMismatchError(
            f"truth has {truth.node_count} nodes, estimate has {estimate.n_nodes}"
        )
    true_edges = truth.edge_set
    final = estimate.final_edges
    return ErrorReport(len(final - true_edges), len(true_edges - final), len(true_edges))


def parse_report(line):
    fields = dict(part.split("=", 1) for part in line.split())
    return ErrorReport(int(fields["fp"]), int(fields["fn"]), int(fields["true"]))


def write_edges_csv(path, estimate: TopologyEstimate):
    """Rows ``from,to,norm_fwd,norm_rev,pruned`` for every detected pair."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("from", "to", "norm_fwd", "norm_rev", "pruned"))
        for i, j in sorted(estimate.wiener_edges):
            d = estimate.diagnostics.get((i, j))
            fwd = repr(d.norm_fwd) if d else "nan"
            rev = repr(d.norm_rev) if d else "nan"
            w.writerow((i + 1, j + 1, fwd, rev, int((i, j) in estimate.pruned_edges)))


def read_edges_csv(path, n_nodes):
    detected, pruned, diag = set(), set(), {}
    with open(path, newline="") as fh:
        for r in csv.DictReader(fh):
            i, j = int(r["from"]) - 1, int(r["to"]) - 1
            key = (min(i, j), max(i, j))
            detected.add(key)
            if int(r["pruned"]):
                pruned.add(key)
            diag[key] = PairDiagnostics(float(r["norm_fwd"]), float(r["norm_rev"]), "", "")
    return TopologyEstimate(n_nodes, frozenset(detected), frozenset(pruned), diag)
