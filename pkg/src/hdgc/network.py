"""Causal-network construction and graph analytics.

``build_network`` runs the pairwise test for every ordered pair of series
(conditioning on all the others) and collects edges, p-value and long-run
coefficient matrices.  On the resulting digraph we enumerate simple paths
and cycles and detect communities by greedy modularity agglomeration on
the undirected projection.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import PathOverflowError, QueryError, ValidationError
from .panel import LagSpec, TimeSeriesPanel
from .pdslm import GcQuery, PdsLmResult, pds_lm_test

__all__ = [
    "EdgeSummary",
    "CausalNetwork",
    "CommunityPartition",
    "build_network",
    "block_test",
    "simple_paths",
    "cycles_through",
    "greedy_modularity_clusters",
]

DEFAULT_ENUM_CAP = 1_000_000


@dataclass(frozen=True)
class EdgeSummary:
    """Per-edge test summary kept when a network is (de)serialized."""

    p_chi2: float
    p_f: float
    long_run_effect: float


@dataclass(frozen=True)
class CausalNetwork:
    """Directed graph of significant Granger-causal links.

    Edge (i, j) means series i was found to Granger-cause series j at the
    stored alpha.  The matrices are indexed [from, to] with NaN on the
    diagonal; cells whose test failed are NaN and listed in ``failures``.
    """

    nodes: tuple[str, ...]
    edges: dict
    alpha: float
    statistic: str
    pvalue_matrix: np.ndarray
    magnitude_matrix: np.ndarray
    failures: tuple[tuple[str, str, str], ...] = field(default=())

    def edge_list(self) -> list[tuple[str, str]]:
        return sorted(self.edges)

    def successors(self, node: str) -> list[str]:
        return sorted(t for (f, t) in self.edges if f == node)

    def predecessors(self, node: str) -> list[str]:
        return sorted(f for (f, t) in self.edges if t == node)

    def has_node(self, node: str) -> bool:
        return node in self.nodes

    def to_dict(self) -> dict:
        """JSON-ready representation (edge summaries plus matrices)."""
        return {
            "nodes": list(self.nodes),
            "alpha": self.alpha,
            "statistic": self.statistic,
            "edges": [
                {
                    "from": f,
                    "to": t,
                    "p_chi2": _edge_attr(res, "p_chi2"),
                    "p_f": _edge_attr(res, "p_f"),
                    "long_run": _edge_attr(res, "long_run_effect"),
                }
                for (f, t), res in sorted(self.edges.items())
            ],
            "pvalue_matrix": self.pvalue_matrix.tolist(),
            "magnitude_matrix": self.magnitude_matrix.tolist(),
            "failures": [list(f) for f in self.failures],
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "CausalNetwork":
        nodes = tuple(payload["nodes"])
        edges = {
            (e["from"], e["to"]): EdgeSummary(
                p_chi2=e["p_chi2"], p_f=e["p_f"], long_run_effect=e["long_run"]
            )
            for e in payload["edges"]
        }
        return cls(
            nodes=nodes,
            edges=edges,
            alpha=float(payload["alpha"]),
            statistic=str(payload["statistic"]),
            pvalue_matrix=np.asarray(payload["pvalue_matrix"], dtype=float),
            magnitude_matrix=np.asarray(payload["magnitude_matrix"], dtype=float),
            failures=tuple(tuple(f) for f in payload.get("failures", [])),
        )

    def to_dot(self) -> str:
        """DOT export with edges labeled by their p-value (3 sig. digits)."""
        lines = ["digraph causal_network {"]
        for node in self.nodes:
            lines.append(f'    "{node}";')
        for (f, t), res in sorted(self.edges.items()):
            p = _edge_attr(res, "p_chi2" if self.statistic == "chi2" else "p_f")
            lines.append(f'    "{f}" -> "{t}" [label="{p:.3g}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"


def _edge_attr(res, name: str) -> float:
    return float(getattr(res, name))


@dataclass(frozen=True)
class CommunityPartition:
    """Node -> community assignment with its modularity score."""

    assignment: dict
    modularity: float

    def communities(self) -> list[tuple[str, ...]]:
        groups: dict[int, list[str]] = {}
        for node, cid in self.assignment.items():
            groups.setdefault(cid, []).append(node)
        return [tuple(sorted(g)) for _, g in sorted(groups.items())]


def build_network(
    panel: TimeSeriesPanel,
    spec: LagSpec,
    alpha: float = 0.1,
    statistic: str = "chi2",
    threads: int = 1,
    **test_kwargs,
) -> CausalNetwork:
    """Test every ordered pair of series, conditioning on all the rest.

    A failed single test does not abort the run: its cells stay NaN and
    the pair is recorded in the warning roster.
    """
    if panel.n_series < 2:
        raise ValidationError("network construction needs at least 2 series")
    names = panel.names
    k = len(names)
    pairs = [(f, t) for f in names for t in names if f != t]

    def run_pair(pair):
        f, t = pair
        query = GcQuery(
            caused=(t,), causing=(f,), spec=spec, alpha=alpha, statistic=statistic
        )
        return pds_lm_test(panel, query, **test_kwargs)

    results: dict[tuple[str, str], PdsLmResult | None] = {}
    failures: list[tuple[str, str, str]] = []
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = {pair: pool.submit(run_pair, pair) for pair in pairs}
        outcomes = {pair: fut for pair, fut in futures.items()}
    else:
        outcomes = None

    for pair in pairs:
        try:
            results[pair] = outcomes[pair].result() if outcomes else run_pair(pair)
        except Exception as exc:  # noqa: BLE001 - recorded per-cell by contract
            results[pair] = None
            failures.append((pair[0], pair[1], f"{type(exc).__name__}: {exc}"))

    pvals = np.full((k, k), np.nan)
    mags = np.full((k, k), np.nan)
    edges: dict[tuple[str, str], PdsLmResult] = {}
    for (f, t), res in results.items():
        if res is None:
            continue
        fi, ti = names.index(f), names.index(t)
        p = res.p_chi2 if statistic == "chi2" else res.p_f
        pvals[fi, ti] = p
        mags[fi, ti] = res.long_run_effect
        if p < alpha:
            edges[(f, t)] = res

    return CausalNetwork(
        nodes=names,
        edges=edges,
        alpha=alpha,
        statistic=statistic,
        pvalue_matrix=pvals,
        magnitude_matrix=mags,
        failures=tuple(failures),
    )


def block_test(
    panel: TimeSeriesPanel,
    caused,
    causing,
    spec: LagSpec,
    alpha: float = 0.1,
    statistic: str = "chi2",
    **test_kwargs,
) -> PdsLmResult:
    """Single test of whether the causing block Granger-causes the caused block."""
    query = GcQuery(
        caused=tuple(caused),
        causing=tuple(causing),
        spec=spec,
        alpha=alpha,
        statistic=statistic,
    )
    return pds_lm_test(panel, query, **test_kwargs)


def _check_node(network: CausalNetwork, node: str):
    if not network.has_node(node):
        raise QueryError(f"unknown node {node!r}")


def simple_paths(
    network: CausalNetwork,
    source: str,
    target: str,
    max_len: int | None = None,
    cap: int = DEFAULT_ENUM_CAP,
) -> list[tuple[str, ...]]:
    """All directed simple paths from source to target, lexicographic order.

    ``max_len`` caps the number of edges in a path.  Enumeration aborts
    with PathOverflowError beyond ``cap`` paths.
    """
    _check_node(network, source)
    _check_node(network, target)
    if source == target:
        raise QueryError("source and target must differ")

    found: list[tuple[str, ...]] = []
    path = [source]
    on_path = {source}

    def walk(node: str):
        if max_len is not None and len(path) - 1 >= max_len:
            return
        for nxt in network.successors(node):
            if nxt == target:
                found.append(tuple(path) + (target,))
                if len(found) > cap:
                    raise PathOverflowError(
                        f"more than {cap} paths from {source!r} to {target!r}"
                    )
                continue
            if nxt in on_path:
                continue
            path.append(nxt)
            on_path.add(nxt)
            walk(nxt)
            path.pop()
            on_path.remove(nxt)

    walk(source)
    return sorted(found)


def cycles_through(
    network: CausalNetwork,
    node: str,
    cap: int = DEFAULT_ENUM_CAP,
) -> list[tuple[str, ...]]:
    """All simple directed cycles containing the node.

    Each cycle appears once, rotated so the lexicographically smallest
    member comes first, and the list is sorted.
    """
    _check_node(network, node)
    found: list[tuple[str, ...]] = []
    path = [node]
    on_path = {node}

    def walk(current: str):
        for nxt in network.successors(current):
            if nxt == node:
                found.append(_canonical_rotation(tuple(path)))
                if len(found) > cap:
                    raise PathOverflowError(f"more than {cap} cycles through {node!r}")
                continue
            if nxt in on_path:
                continue
            path.append(nxt)
            on_path.add(nxt)
            walk(nxt)
            path.pop()
            on_path.remove(nxt)

    walk(node)
    return sorted(found)


def _canonical_rotation(cycle: tuple[str, ...]) -> tuple[str, ...]:
    pivot = cycle.index(min(cycle))
    return cycle[pivot:] + cycle[:pivot]


def greedy_modularity_clusters(network: CausalNetwork) -> CommunityPartition:
    """Agglomerative modularity clustering on the undirected projection.

    Starting from singletons, the pair of communities whose merge gives
    the largest modularity increase is joined (ties broken by the
    lexicographically smallest pair of community representatives); the
    partition with maximal modularity along the way is returned.
    """
    nodes = network.nodes
    if not nodes:
        raise ValidationError("network has no nodes")
    undirected = {frozenset(e) for e in network.edges if e[0] != e[1]}
    m = len(undirected)
    if m == 0:
        return CommunityPartition(
            assignment={n: i for i, n in enumerate(nodes)}, modularity=0.0
        )

    adj = {n: set() for n in nodes}
    for e in undirected:
        a, b = tuple(e)
        adj[a].add(b)
        adj[b].add(a)
    degree = {n: len(adj[n]) for n in nodes}

    communities: list[set[str]] = [{n} for n in nodes]

    def partition_modularity(parts: list[set[str]]) -> float:
        total = 0.0
        for part in parts:
            for v in part:
                for w in part:
                    a_vw = 1.0 if w in adj[v] else 0.0
                    total += a_vw - degree[v] * degree[w] / (2.0 * m)
        return total / (2.0 * m)

    def rep(part: set[str]) -> tuple[str, ...]:
        return tuple(sorted(part))

    best_parts = [set(c) for c in communities]
    best_m = partition_modularity(communities)
    current_m = best_m
    while len(communities) > 1:
        best_gain = -np.inf
        best_pair = None
        for a in range(len(communities)):
            for b in range(a + 1, len(communities)):
                gain = _merge_gain(communities[a], communities[b], adj, degree, m)
                key = tuple(sorted((rep(communities[a]), rep(communities[b]))))
                if gain > best_gain + 1e-15 or (
                    abs(gain - best_gain) <= 1e-15
                    and (best_pair is None or key < best_pair[2])
                ):
                    best_gain = gain
                    best_pair = (a, b, key)
        a, b, _ = best_pair
        merged = communities[a] | communities[b]
        communities = [c for i, c in enumerate(communities) if i not in (a, b)]
        communities.append(merged)
        current_m += best_gain
        if current_m > best_m + 1e-15:
            best_m = current_m
            best_parts = [set(c) for c in communities]

    ordered = sorted(best_parts, key=rep)
    assignment = {n: cid for cid, part in enumerate(ordered) for n in sorted(part)}
    return CommunityPartition(
        assignment=assignment, modularity=partition_modularity(ordered)
    )


def _merge_gain(ca, cb, adj, degree, m) -> float:
    """Modularity change from merging two communities.

    Only the cross terms change: delta = (1/m) * sum over pairs (v in a,
    w in b) of [A_vw - k_v k_w / 2m] (counting both orientations).
    """
    links = 0.0
    for v in ca:
        links += len(adj[v] & cb)
    deg_a = sum(degree[v] for v in ca)
    deg_b = sum(degree[w] for w in cb)
    return (links - deg_a * deg_b / (2.0 * m)) / m
