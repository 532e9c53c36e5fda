"""Weighted signed interaction networks and polarization statistics.

Typed interaction records become a party-attributed signed graph
(Adversarial -2, Cooperative +2, Neutral +1, summed per pair). Polarization
is the z-score of the party-partition modularity against a null ensemble of
degree-preserving edge rewirings with the original weight multiset permuted
onto the rewired edges. Trend ratios, great-circle interaction distances,
and basic graph statistics (clustering, power-law exponent, PageRank)
support the time-series analyses.
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import accel
from .extract import InteractionRecord
from .ingest import normalize_surface

TYPE_WEIGHTS = {"Adversarial": -2.0, "Cooperative": 2.0, "Neutral": 1.0}
PARTIES = ("Republican", "Democrat")


class DegenerateGraphError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Graph construction

@dataclass
class SignedGraph:
    nodes: list[str]
    node_attrs: dict[str, dict]
    edges: dict[tuple[int, int], float] = field(default_factory=dict)
    provenance: dict[tuple[int, int], list[str]] = field(default_factory=dict)

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def edge_arrays(self):
        keys = sorted(self.edges)
        u = np.array([k[0] for k in keys], dtype=np.int64)
        v = np.array([k[1] for k in keys], dtype=np.int64)
        w = np.array([self.edges[k] for k in keys], dtype=np.float64)
        return u, v, w

    def degree_sequence(self) -> np.ndarray:
        deg = np.zeros(self.n_nodes, dtype=np.int64)
        for (i, j) in self.edges:
            deg[i] += 1
            deg[j] += 1
        return deg

    def weight_multiset(self) -> np.ndarray:
        return np.sort(np.array(list(self.edges.values()), dtype=np.float64))

    def total_weight(self) -> float:
        return float(sum(self.edges.values()))

    def party_partition(self) -> dict[str, str]:
        return {node: self.node_attrs[node].get("party", "?") for node in self.nodes}


@dataclass
class BuildReport:
    included: int = 0
    excluded_no_party: int = 0
    excluded_untyped: int = 0
    excluded_out_of_window: int = 0
    dropped_zero_edges: int = 0


def load_node_attrs(path) -> dict[str, dict]:
    import json

    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    return {normalize_surface(k): dict(v, name=k) for k, v in raw.items()}


def build_graph(records: Sequence[InteractionRecord], node_attrs: dict[str, dict],
                time_window: tuple[int, int] | None = None,
                drop_zero_edges: bool = False) -> tuple[SignedGraph, BuildReport]:
    """Aggregate typed records into a signed graph over attributed people.

    Per-pair weights are the sum of the mapped type weights across all
    records in the window. Zero-sum pairs keep their edge (they still carry
    a structural tie) unless ``drop_zero_edges`` is set.
    """
    report = BuildReport()
    pair_weights: dict[tuple[str, str], float] = {}
    pair_records: dict[tuple[str, str], list[str]] = {}
    present: set[str] = set()

    for rec in records:
        if rec.interaction_type not in TYPE_WEIGHTS:
            report.excluded_untyped += 1
            continue
        if time_window is not None:
            if rec.time_year is None or not (
                    time_window[0] <= rec.time_year <= time_window[1]):
                report.excluded_out_of_window += 1
                continue
        k1, k2 = normalize_surface(rec.person1), normalize_surface(rec.person2)
        if k1 not in node_attrs or k2 not in node_attrs:
            report.excluded_no_party += 1
            continue
        if "party" not in node_attrs[k1] or "party" not in node_attrs[k2]:
            report.excluded_no_party += 1
            continue
        pair = (k1, k2) if k1 <= k2 else (k2, k1)
        pair_weights[pair] = pair_weights.get(pair, 0.0) + TYPE_WEIGHTS[rec.interaction_type]
        pair_records.setdefault(pair, []).append(rec.record_id)
        present.update(pair)
        report.included += 1

    nodes = sorted(present)
    index = {node: i for i, node in enumerate(nodes)}
    graph = SignedGraph(nodes=nodes,
                        node_attrs={n: node_attrs[n] for n in nodes})
    for (k1, k2), weight in pair_weights.items():
        if drop_zero_edges and weight == 0.0:
            report.dropped_zero_edges += 1
            continue
        key = (index[k1], index[k2])
        graph.edges[key] = weight
        graph.provenance[key] = sorted(pair_records[(k1, k2)])
    return graph, report


# ---------------------------------------------------------------------------
# Modularity

def _partition_array(graph: SignedGraph, partition: dict[str, str]):
    missing = [n for n in graph.nodes if n not in partition]
    if missing:
        raise ValueError(f"partition missing {len(missing)} nodes, e.g. {missing[0]!r}")
    labels = sorted(set(partition[n] for n in graph.nodes))
    label_index = {lab: i for i, lab in enumerate(labels)}
    comm = np.array([label_index[partition[n]] for n in graph.nodes], dtype=np.int64)
    return comm, len(labels)


def modularity(graph: SignedGraph, partition: dict[str, str],
               signed_mode: str = "verbatim") -> float:
    """Weighted Newman modularity for the given node partition.

    ``verbatim`` (default) applies the formula directly to the signed
    weights; ``gomez`` evaluates positive and negative parts separately and
    combines them weighted by their strength shares.
    """
    if graph.n_edges == 0:
        raise DegenerateGraphError("degenerate graph: no edges")
    comm, n_comms = _partition_array(graph, partition)
    u, v, w = graph.edge_arrays()
    if signed_mode == "verbatim":
        if graph.total_weight() == 0.0:
            raise DegenerateGraphError("degenerate graph: total weight is zero")
        return float(accel.modularity_edges(u, v, w, comm, graph.n_nodes, n_comms))
    if signed_mode != "gomez":
        raise ValueError(f"unknown signed_mode {signed_mode!r}")
    pos = w > 0
    neg = w < 0
    w_pos = float(w[pos].sum())
    w_neg = float(-w[neg].sum())
    if w_pos + w_neg == 0.0:
        raise DegenerateGraphError("degenerate graph: no weighted edges")
    q_pos = float(accel.modularity_edges(u[pos], v[pos], w[pos], comm,
                                         graph.n_nodes, n_comms)) if w_pos else 0.0
    q_neg = float(accel.modularity_edges(u[neg], v[neg], -w[neg], comm,
                                         graph.n_nodes, n_comms)) if w_neg else 0.0
    return (w_pos * q_pos - w_neg * q_neg) / (w_pos + w_neg)


def modularity_dense(adjacency: np.ndarray, comm: Sequence[int]) -> float:
    """Direct double-sum evaluation of the modularity formula on a dense
    adjacency matrix. Quadratic; meant for small graphs and cross-checks.
    """
    a = np.asarray(adjacency, dtype=float)
    comm = np.asarray(comm)
    k = a.sum(axis=1)
    m2 = k.sum()
    if m2 == 0.0:
        raise DegenerateGraphError("degenerate graph: total weight is zero")
    q = 0.0
    n = a.shape[0]
    for i in range(n):
        for j in range(n):
            if comm[i] == comm[j]:
                q += a[i, j] - k[i] * k[j] / m2
    return q / m2


# ---------------------------------------------------------------------------
# Null model

def randomize_null(graph: SignedGraph, seed: int, swap_factor: int = 10,
                   max_attempt_factor: int = 100) -> SignedGraph:
    """Degree-preserving double-edge swaps plus a uniform permutation of the
    original weight multiset onto the rewired edge set; deterministic under
    ``seed``. Graphs where no swap is possible come back weight-permuted
    with a warning.
    """
    m = graph.n_edges
    u, v, w = graph.edge_arrays()
    if m < 2:
        warnings.warn("graph has fewer than 2 edges; returning weight-permuted copy")
        u2, v2, w2, accepted = accel.rewire_edges(u, v, w, graph.n_nodes, 0, 0, seed)
    else:
        u2, v2, w2, accepted = accel.rewire_edges(
            u, v, w, graph.n_nodes, swap_factor * m, max_attempt_factor * m, seed)
        if accepted == 0:
            warnings.warn("no degree-preserving swap was possible; "
                          "returning weight-permuted copy")
    null = SignedGraph(nodes=list(graph.nodes), node_attrs=graph.node_attrs)
    for i in range(m):
        a, b = int(u2[i]), int(v2[i])
        key = (a, b) if a < b else (b, a)
        null.edges[key] = float(w2[i])
    return null


@dataclass
class ModularityReport:
    q_original: float
    n_samples: int
    mu: float
    sigma: float
    z: float
    master_seed: int

    def to_json(self) -> dict:
        return {"q_original": self.q_original, "n_samples": self.n_samples,
                "mu": self.mu, "sigma": self.sigma, "z": self.z,
                "master_seed": self.master_seed}


def sample_seeds(master_seed: int, n: int) -> np.ndarray:
    return np.random.SeedSequence(master_seed).generate_state(n, dtype=np.uint64)


def standardized_modularity(graph: SignedGraph, partition: dict[str, str],
                            n_samples: int = 1000, master_seed: int = 0,
                            swap_factor: int = 10,
                            signed_mode: str = "verbatim") -> ModularityReport:
    """Z-score of the observed modularity against the rewired null ensemble."""
    if n_samples < 2:
        raise ValueError("standardized modularity needs at least 2 null samples")
    q_original = modularity(graph, partition, signed_mode=signed_mode)
    comm, n_comms = _partition_array(graph, partition)
    u, v, w = graph.edge_arrays()
    m = graph.n_edges
    seeds = sample_seeds(master_seed, n_samples)
    qs = np.empty(n_samples)
    for i, seed in enumerate(seeds):
        u2, v2, w2, _ = accel.rewire_edges(
            u, v, w, graph.n_nodes, swap_factor * m, 100 * m, int(seed))
        qs[i] = accel.modularity_edges(u2, v2, w2, comm, graph.n_nodes, n_comms)
    mu = float(np.mean(qs))
    sigma = float(np.std(qs, ddof=1))
    if sigma == 0.0 or bool(np.all(qs == qs[0])):
        raise DegenerateGraphError("degenerate null distribution: sigma is zero")
    return ModularityReport(q_original=q_original, n_samples=n_samples, mu=mu,
                            sigma=sigma, z=(q_original - mu) / sigma,
                            master_seed=master_seed)


# ---------------------------------------------------------------------------
# Trend ratios

@dataclass
class TrendBin:
    bin_start: int
    total: int
    inter_party: int
    inter_share: float | None
    type_shares: dict


@dataclass
class TrendSeries:
    bin_size: int
    bins: list[TrendBin] = field(default_factory=list)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["bin", "total", "inter_party", "inter_share",
                         "adversarial_share", "cooperative_share", "neutral_share"])
        for row in self.bins:
            shares = row.type_shares
            writer.writerow([
                row.bin_start, row.total, row.inter_party,
                "" if row.inter_share is None else f"{row.inter_share:.6f}",
                *("" if shares.get(t) is None else f"{shares[t]:.6f}"
                  for t in ("Adversarial", "Cooperative", "Neutral")),
            ])
        return buf.getvalue()


def _record_parties(rec: InteractionRecord, node_attrs: dict[str, dict]):
    a1 = node_attrs.get(normalize_surface(rec.person1))
    a2 = node_attrs.get(normalize_surface(rec.person2))
    if not a1 or not a2 or "party" not in a1 or "party" not in a2:
        return None
    return a1["party"], a2["party"]


def trend_ratios(records: Sequence[InteractionRecord], node_attrs: dict[str, dict],
                 bin_size: str = "decade") -> TrendSeries:
    """Per-bin inter-party share plus type shares among inter-party records.

    Bins span the observed year range; bins without interactions report
    null ratios rather than zero.
    """
    if bin_size not in ("decade", "year"):
        raise ValueError(f"unknown bin size {bin_size!r}")
    step = 10 if bin_size == "decade" else 1
    usable = []
    for rec in records:
        parties = _record_parties(rec, node_attrs)
        if parties is None or rec.time_year is None:
            continue
        if rec.interaction_type not in TYPE_WEIGHTS:
            continue
        usable.append((rec.time_year // step * step, parties[0] != parties[1],
                       rec.interaction_type))

    series = TrendSeries(bin_size=step)
    if not usable:
        return series
    lo = min(b for b, _, _ in usable)
    hi = max(b for b, _, _ in usable)
    for bin_start in range(lo, hi + 1, step):
        rows = [r for r in usable if r[0] == bin_start]
        total = len(rows)
        inter = [r for r in rows if r[1]]
        shares: dict = {}
        for t in TYPE_WEIGHTS:
            shares[t] = (sum(1 for r in inter if r[2] == t) / len(inter)
                         if inter else None)
        series.bins.append(TrendBin(
            bin_start=bin_start, total=total, inter_party=len(inter),
            inter_share=(len(inter) / total) if total else None,
            type_shares=shares))
    return series


def type_party_totals(records: Sequence[InteractionRecord],
                      node_attrs: dict[str, dict]) -> dict:
    """Intra-/inter-party record counts per interaction type."""
    totals = {t: {"intra": 0, "inter": 0} for t in TYPE_WEIGHTS}
    for rec in records:
        parties = _record_parties(rec, node_attrs)
        if parties is None or rec.interaction_type not in TYPE_WEIGHTS:
            continue
        kind = "inter" if parties[0] != parties[1] else "intra"
        totals[rec.interaction_type][kind] += 1
    return totals


# ---------------------------------------------------------------------------
# Distances

EARTH_RADIUS_KM = 6371.0


def haversine_km(lat1: float, lon1: float, lat2: float, lon2: float) -> float:
    """Great-circle distance on a 6371 km sphere."""
    phi1, phi2 = math.radians(lat1), math.radians(lat2)
    dphi = phi2 - phi1
    dlam = math.radians(lon2 - lon1)
    h = math.sin(dphi / 2) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(dlam / 2) ** 2
    return 2 * EARTH_RADIUS_KM * math.asin(min(1.0, math.sqrt(h)))


def interaction_distance(location: tuple[float, float] | None,
                         birthplace1: tuple[float, float] | None,
                         birthplace2: tuple[float, float] | None) -> float | None:
    """Sum of great-circle legs from the interaction location to both
    participants' birthplaces; None when any point is ungeocoded."""
    if location is None or birthplace1 is None or birthplace2 is None:
        return None
    return (haversine_km(location[0], location[1], birthplace1[0], birthplace1[1])
            + haversine_km(location[0], location[1], birthplace2[0], birthplace2[1]))


def record_distance(rec: InteractionRecord, node_attrs: dict[str, dict]) -> float | None:
    if rec.lat is None or rec.lon is None:
        return None
    a1 = node_attrs.get(normalize_surface(rec.person1), {})
    a2 = node_attrs.get(normalize_surface(rec.person2), {})
    bp1 = a1.get("birthplace")
    bp2 = a2.get("birthplace")
    return interaction_distance(
        (rec.lat, rec.lon),
        tuple(bp1) if bp1 else None,
        tuple(bp2) if bp2 else None)


# ---------------------------------------------------------------------------
# Graph statistics

@dataclass
class GraphStats:
    degree_histogram: dict
    clustering: float
    alpha: float | None
    alpha_k_min: int
    alpha_tail_size: int
    pagerank: dict

    def to_json(self) -> dict:
        return {"degree_histogram": {str(k): v for k, v in
                                     sorted(self.degree_histogram.items())},
                "clustering": self.clustering,
                "alpha": self.alpha, "alpha_k_min": self.alpha_k_min,
                "alpha_tail_size": self.alpha_tail_size,
                "pagerank": self.pagerank}


def fit_power_law(degrees: Sequence[int], k_min: int = 2) -> tuple[float | None, int]:
    """Discrete maximum-likelihood exponent over degrees >= k_min:
    alpha = 1 + n / sum(ln(k_i / (k_min - 0.5))).
    """
    tail = [k for k in degrees if k >= k_min]
    if not tail:
        return None, 0
    denom = sum(math.log(k / (k_min - 0.5)) for k in tail)
    if denom == 0.0:
        return None, len(tail)
    return 1.0 + len(tail) / denom, len(tail)


def pagerank(graph: SignedGraph, damping: float = 0.85,
             tol: float = 1e-10, max_iter: int = 10000) -> dict[str, float]:
    """Power iteration on absolute edge weights; dangling mass spread uniformly."""
    n = graph.n_nodes
    if n == 0:
        return {}
    strength = np.zeros(n)
    u, v, w = graph.edge_arrays()
    aw = np.abs(w)
    for a, b, x in zip(u, v, aw):
        strength[a] += x
        strength[b] += x
    rank = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        spread = np.zeros(n)
        share = np.divide(rank, strength, out=np.zeros_like(rank),
                          where=strength > 0)
        for a, b, x in zip(u, v, aw):
            spread[b] += share[a] * x
            spread[a] += share[b] * x
        dangling = rank[strength == 0].sum()
        new_rank = (1 - damping) / n + damping * (spread + dangling / n)
        if np.abs(new_rank - rank).sum() < tol:
            rank = new_rank
            break
        rank = new_rank
    return {graph.nodes[i]: float(rank[i]) for i in range(n)}


def graph_stats(graph: SignedGraph, k_min: int = 2, damping: float = 0.85) -> GraphStats:
    """Degree histogram, global clustering, power-law exponent, PageRank."""
    if graph.n_nodes == 0:
        raise ValueError("graph_stats needs a non-empty graph")
    degrees = graph.degree_sequence()
    histogram: dict[int, int] = {}
    for k in degrees:
        histogram[int(k)] = histogram.get(int(k), 0) + 1

    n = graph.n_nodes
    a = np.zeros((n, n))
    for (i, j) in graph.edges:
        a[i, j] = a[j, i] = 1.0
    triangles = float(np.trace(a @ a @ a)) / 6.0
    triads = float(sum(k * (k - 1) / 2 for k in degrees))
    clustering = 3.0 * triangles / triads if triads else 0.0

    alpha, tail = fit_power_law([int(k) for k in degrees], k_min=k_min)
    return GraphStats(degree_histogram=histogram, clustering=clustering,
                      alpha=alpha, alpha_k_min=k_min, alpha_tail_size=tail,
                      pagerank=pagerank(graph, damping=damping))


# ---------------------------------------------------------------------------
# Time series and exports

def polarization_series(records: Sequence[InteractionRecord],
                        node_attrs: dict[str, dict],
                        n_samples: int = 1000, master_seed: int = 0,
                        cumulative: bool = False,
                        signed_mode: str = "verbatim",
                        min_edges: int = 2) -> list[dict]:
    """Per-year (or cumulative-to-year) standardized modularity rows.

    Years whose graph is too small or whose null distribution degenerates
    produce a row with ``z`` null and a reason, never a silent gap.
    """
    years = sorted({rec.time_year for rec in records if rec.time_year is not None})
    rows: list[dict] = []
    for year in years:
        window = (years[0], year) if cumulative else (year, year)
        graph, _ = build_graph(records, node_attrs, time_window=window)
        row = {"year": year, "window_start": window[0], "n_nodes": graph.n_nodes,
               "n_edges": graph.n_edges, "q": None, "z": None, "reason": None}
        if graph.n_edges < min_edges:
            row["reason"] = "too few edges"
            rows.append(row)
            continue
        try:
            report = standardized_modularity(
                graph, graph.party_partition(), n_samples=n_samples,
                master_seed=master_seed, signed_mode=signed_mode)
            row["q"] = report.q_original
            row["z"] = report.z
        except DegenerateGraphError as exc:
            row["reason"] = str(exc)
        rows.append(row)
    return rows


def series_to_csv(rows: Iterable[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["year", "window_start", "n_nodes", "n_edges", "q", "z", "reason"])
    for row in rows:
        writer.writerow([
            row["year"], row["window_start"], row["n_nodes"], row["n_edges"],
            "" if row["q"] is None else f"{row['q']:.9f}",
            "" if row["z"] is None else f"{row['z']:.6f}",
            row["reason"] or "",
        ])
    return buf.getvalue()


def edges_csv(graph: SignedGraph) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["person1", "person2", "weight"])
    for (i, j) in sorted(graph.edges):
        writer.writerow([graph.nodes[i], graph.nodes[j], graph.edges[(i, j)]])
    return buf.getvalue()


def to_gexf(graph: SignedGraph) -> str:
    """Minimal GEXF 1.2 document with party attributes and signed weights,
    consumable by external layout tools."""
    from xml.sax.saxutils import quoteattr

    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        '<gexf xmlns="http://www.gexf.net/1.2draft" version="1.2">',
        '  <graph defaultedgetype="undirected">',
        '    <attributes class="node">',
        '      <attribute id="0" title="party" type="string"/>',
        '    </attributes>',
        '    <nodes>',
    ]
    for i, node in enumerate(graph.nodes):
        party = graph.node_attrs.get(node, {}).get("party", "")
        lines.append(f'      <node id="{i}" label={quoteattr(node)}>')
        lines.append(f'        <attvalues><attvalue for="0" value={quoteattr(party)}/>'
                     f'</attvalues>')
        lines.append('      </node>')
    lines.append('    </nodes>')
    lines.append('    <edges>')
    for eid, (i, j) in enumerate(sorted(graph.edges)):
        weight = graph.edges[(i, j)]
        lines.append(f'      <edge id="{eid}" source="{i}" target="{j}" '
                     f'weight="{weight}"/>')
    lines.append('    </edges>')
    lines.append('  </graph>')
    lines.append('</gexf>')
    return "\n".join(lines) + "\n"
