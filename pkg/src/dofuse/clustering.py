"""Transit clusters: verification, brute-force enumeration and the cluster operation.

A transit cluster is a vertex set where outside information enters only
through receivers and leaves only through emitters, subject to the five
structural conditions (equal external parents of receivers, equal external
children of emitters, internal connectivity to a receiver or emitter after
sealing the boundary, and directed receiver-to-emitter reachability both
ways). Directed reachability here counts the trivial path, so a vertex that
is both a receiver and an emitter satisfies the last two conditions by itself.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

from .graph import CausalGraph, GraphError, _iter_bits

ENUMERATION_GUARD = 1 << 22


@dataclass(frozen=True)
class TransitCluster:
    members: frozenset
    receivers: frozenset
    emitters: frozenset
    verified: bool


@dataclass(frozen=True)
class ClusterVerdict:
    ok: bool
    failed_condition: str = ""
    witness: tuple = ()


def receivers_emitters(g: CausalGraph, t_members) -> tuple:
    """Receivers have a parent outside the set, emitters a child outside it."""
    t = g.mask_of(t_members)
    rec = 0
    em = 0
    for v in _iter_bits(t):
        if g.parent_masks[v] & ~t:
            rec |= 1 << v
        if g.child_masks[v] & ~t:
            em |= 1 << v
    return g.names_of(rec), g.names_of(em)


def is_transit_cluster(g: CausalGraph, t_members, *, require_connected: bool = True) -> ClusterVerdict:
    """Check the five transit-cluster conditions, reporting the first failure.

    Connectivity of the ambient graph is part of the definition; checks on
    edge-cut graphs (where clusters provably persist) may opt out of it.
    """
    if require_connected and not g.is_connected():
        raise GraphError("transit clusters are defined on connected graphs")
    t = g.mask_of(t_members)
    if not t:
        raise GraphError("cluster must be nonempty")
    all_mask = (1 << len(g.names)) - 1
    if t == all_mask:
        raise GraphError("cluster must be a proper subset of the vertices")
    rec = 0
    em = 0
    for v in _iter_bits(t):
        if g.parent_masks[v] & ~t:
            rec |= 1 << v
        if g.child_masks[v] & ~t:
            em |= 1 << v

    rec_list = list(_iter_bits(rec))
    for r1, r2 in zip(rec_list, rec_list[1:]):
        if g.parent_masks[r1] & ~t != g.parent_masks[r2] & ~t:
            return ClusterVerdict(False, "a", (g.names[r1], g.names[r2]))
    em_list = list(_iter_bits(em))
    for e1, e2 in zip(em_list, em_list[1:]):
        if g.child_masks[e1] & ~t != g.child_masks[e2] & ~t:
            return ClusterVerdict(False, "b", (g.names[e1], g.names[e2]))

    # condition (c): undirected connectivity to a receiver or emitter once
    # incoming edges of receivers and outgoing edges of emitters are removed;
    # vacuous when a cut sealed the whole boundary, and a member left with no
    # edges at all has no paths and cannot leak - neither case arises in a
    # connected ambient graph
    if not rec | em:
        return ClusterVerdict(True)
    seen = rec | em
    frontier = seen
    while frontier:
        step = 0
        for v in _iter_bits(frontier):
            vbit = 1 << v
            for p in _iter_bits(g.parent_masks[v]):
                if vbit & rec or (1 << p) & em:
                    continue
                step |= 1 << p
            for c in _iter_bits(g.child_masks[v]):
                if vbit & em or (1 << c) & rec:
                    continue
                step |= 1 << c
        frontier = step & ~seen
        seen |= frontier
    isolated = 0
    for v in _iter_bits(t):
        if not g.parent_masks[v] and not g.child_masks[v]:
            isolated |= 1 << v
    stranded = t & ~seen & ~isolated
    if stranded:
        v = next(_iter_bits(stranded))
        return ClusterVerdict(False, "c", (g.names[v],))

    # conditions (d)/(e): directed paths between receivers and emitters,
    # allowing the length-zero path
    if em:
        for r in rec_list:
            if not g.descendants_mask(1 << r, reflexive=True) & em:
                return ClusterVerdict(False, "d", (g.names[r],))
    if rec:
        for e in em_list:
            if not g.ancestors_mask(1 << e, reflexive=True) & rec:
                return ClusterVerdict(False, "e", (g.names[e],))
    return ClusterVerdict(True)


def verify_cluster(g: CausalGraph, t_members) -> TransitCluster:
    rec, em = receivers_emitters(g, t_members)
    return TransitCluster(frozenset(t_members), rec, em, is_transit_cluster(g, t_members).ok)


def enumerate_transit_clusters(g: CausalGraph, max_size: int | None = None, *, force=False):
    """All verified transit clusters of size 2..max_size, lexicographic order.

    Brute-force subset enumeration; refuses above 2^22 candidate subsets
    unless forced.
    """
    if not g.is_connected():
        raise GraphError("transit clusters are defined on connected graphs")
    names = sorted(g.names)
    n = len(names)
    top = min(max_size if max_size is not None else n - 1, n - 1)
    total = 0
    for k in range(2, top + 1):
        total += _ncr(n, k)
    if total > ENUMERATION_GUARD and not force:
        raise GraphError(
            f"{total} candidate subsets exceed the enumeration budget; pass force=True"
        )
    out = []
    for k in range(2, top + 1):
        for combo in combinations(names, k):
            if is_transit_cluster(g, combo).ok:
                out.append(verify_cluster(g, combo))
    out.sort(key=lambda c: tuple(sorted(c.members)))
    return out


def _ncr(n, k):
    num = 1
    for i in range(k):
        num = num * (n - i) // (i + 1)
    return num


def apply_cluster(g: CausalGraph, t_members, t_name: str) -> CausalGraph:
    """Replace a verified cluster by a single observed vertex.

    The new vertex inherits the external parents and children of the cluster.
    Latents left with fewer than two children are dropped.
    """
    verdict = is_transit_cluster(g, t_members)
    if not verdict.ok:
        raise GraphError(
            f"{sorted(t_members)} is not a transit cluster (condition {verdict.failed_condition})"
        )
    if g.has_vertex(t_name):
        raise GraphError(f"cluster name {t_name} collides with an existing vertex")
    t = g.mask_of(t_members)
    ext_parents = 0
    ext_children = 0
    for v in _iter_bits(t):
        ext_parents |= g.parent_masks[v] & ~t
        ext_children |= g.child_masks[v] & ~t

    observed = [v for v in g.observed if not 1 << g._index[v] & t] + [t_name]
    edges = [
        (p, c)
        for p, c in g.edge_list()
        if not (1 << g._index[p] | 1 << g._index[c]) & t
    ]
    for p in _iter_bits(ext_parents & g.observed_mask):
        edges.append((g.names[p], t_name))
    for c in _iter_bits(ext_children):
        edges.append((t_name, g.names[c]))
    latent_children = {}
    for u, kids in g.latent_children_map().items():
        ui = 1 << g._index[u]
        if ui & t:
            continue
        # a latent whose children collapse into the cluster keeps a single
        # child edge; it carries no confounding but stays a vertex
        latent_children[u] = sorted({t_name if 1 << g._index[k] & t else k for k in kids})
    clustered = CausalGraph(observed, edges, latent_children, check_latents=False)
    assert len(clustered.names) == len(g.names) - bin(t).count("1") + 1
    return clustered


def check_single_layer(g: CausalGraph, t_members) -> bool:
    """True iff some vertex is both a receiver and an emitter of the cluster."""
    verdict = is_transit_cluster(g, t_members)
    if not verdict.ok:
        raise GraphError(f"{sorted(t_members)} is not a transit cluster")
    rec, em = receivers_emitters(g, t_members)
    return bool(rec & em)
