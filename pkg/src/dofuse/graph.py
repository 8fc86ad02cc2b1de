"""Causal graphs over observed vertices and latent confounders.

A graph holds the observed vertices V, the latent confounders (exogenous
vertices with no parents and at least two children) and the directed edges.
Dedicated error terms are never materialized; they travel implicitly with
their child. All vertex sets passed around the package are plain frozensets
of vertex ids; internally everything runs on integer bitmasks so that
d-separation and reachability stay cheap inside the derivation search.
"""

from __future__ import annotations

from dataclasses import dataclass

OBSERVED = "observed"
LATENT = "latent"


class GraphError(ValueError):
    """Malformed graph input: cycles, bad latents, unknown or duplicate ids."""


@dataclass(frozen=True)
class Vertex:
    id: str
    kind: str  # OBSERVED or LATENT


def _iter_bits(mask: int):
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


class CausalGraph:
    """Immutable DAG over V (observed) and latent confounders.

    Observed vertices occupy bit indices ``0..n_observed-1`` in lexicographic
    id order, latents follow, also sorted. All queries are pure; instances are
    safe to share across threads.
    """

    __slots__ = (
        "names",
        "n_observed",
        "parent_masks",
        "child_masks",
        "observed_mask",
        "latent_mask",
        "_index",
        "_canon",
    )

    def __init__(self, observed, edges, latent_children=None, *, check_latents=True):
        obs = sorted(set(observed))
        latent_children = dict(latent_children or {})
        lats = sorted(latent_children)
        dup = set(obs) & set(lats)
        if dup:
            raise GraphError(f"duplicate vertex id: {sorted(dup)[0]}")
        names = tuple(obs) + tuple(lats)
        index = {name: i for i, name in enumerate(names)}
        if len(index) != len(names):
            raise GraphError("duplicate vertex id")
        n = len(names)
        m = len(obs)
        par = [0] * n
        ch = [0] * n
        seen_edges = set()
        for p, c in edges:
            if p not in index or c not in index:
                raise GraphError(f"unknown vertex in edge {p} -> {c}")
            if index[p] >= m or index[c] >= m:
                raise GraphError(f"latent vertex in explicit edge {p} -> {c}")
            if p == c:
                raise GraphError(f"self-loop on {p}")
            if (p, c) in seen_edges:
                continue
            seen_edges.add((p, c))
            par[index[c]] |= 1 << index[p]
            ch[index[p]] |= 1 << index[c]
        for u, children in latent_children.items():
            kids = sorted(set(children))
            if check_latents and len(kids) < 2:
                raise GraphError(f"latent {u} has fewer than two children")
            ui = index[u]
            for k in kids:
                ki = index.get(k)
                if ki is None or ki >= m:
                    raise GraphError(f"latent {u} has non-observed child {k}")
                par[ki] |= 1 << ui
                ch[ui] |= 1 << ki
        self.names = names
        self.n_observed = m
        self.parent_masks = tuple(par)
        self.child_masks = tuple(ch)
        self.observed_mask = (1 << m) - 1
        self.latent_mask = ((1 << n) - 1) ^ self.observed_mask
        self._index = index
        self._check_acyclic()
        canon_latents = tuple(sorted(tuple(sorted(set(c))) for c in latent_children.values()))
        self._canon = (names[:m], tuple(sorted(seen_edges)), canon_latents)

    def _check_acyclic(self):
        n = len(self.names)
        indeg = [bin(self.parent_masks[i]).count("1") for i in range(n)]
        stack = [i for i in range(n) if indeg[i] == 0]
        seen = 0
        while stack:
            v = stack.pop()
            seen += 1
            for c in _iter_bits(self.child_masks[v]):
                indeg[c] -= 1
                if indeg[c] == 0:
                    stack.append(c)
        if seen != n:
            raise GraphError("cycle detected")

    # -- basic queries ------------------------------------------------------

    @property
    def observed(self) -> frozenset:
        return frozenset(self.names[: self.n_observed])

    @property
    def latents(self) -> frozenset:
        return frozenset(self.names[self.n_observed:])

    def vertex(self, name: str) -> Vertex:
        i = self._require(name)
        return Vertex(name, OBSERVED if i < self.n_observed else LATENT)

    def has_vertex(self, name: str) -> bool:
        return name in self._index

    def latent_children_map(self) -> dict:
        return {
            self.names[i]: self.names_of(self.child_masks[i])
            for i in range(self.n_observed, len(self.names))
        }

    def edge_list(self):
        """Observed-to-observed directed edges, sorted."""
        out = []
        for i in range(self.n_observed):
            for c in _iter_bits(self.child_masks[i] & self.observed_mask):
                out.append((self.names[i], self.names[c]))
        return sorted(out)

    def _require(self, name: str) -> int:
        i = self._index.get(name)
        if i is None:
            raise GraphError(f"unknown vertex {name}")
        return i

    def mask_of(self, names) -> int:
        m = 0
        for name in names:
            m |= 1 << self._require(name)
        return m

    def names_of(self, mask: int) -> frozenset:
        return frozenset(self.names[i] for i in _iter_bits(mask))

    def ancestors_mask(self, mask: int, *, reflexive=False) -> int:
        out = mask if reflexive else 0
        frontier = mask
        while frontier:
            step = 0
            for v in _iter_bits(frontier):
                step |= self.parent_masks[v]
            new = step & ~out
            frontier = new
            out |= new
        return out

    def descendants_mask(self, mask: int, *, reflexive=False) -> int:
        out = mask if reflexive else 0
        frontier = mask
        while frontier:
            step = 0
            for v in _iter_bits(frontier):
                step |= self.child_masks[v]
            new = step & ~out
            frontier = new
            out |= new
        return out

    def is_connected(self) -> bool:
        """Connectivity of the undirected skeleton over V and latents."""
        n = len(self.names)
        if n <= 1:
            return True
        seen = 1
        frontier = 1
        while frontier:
            step = 0
            for v in _iter_bits(frontier):
                step |= self.parent_masks[v] | self.child_masks[v]
            frontier = step & ~seen
            seen |= frontier
        return seen == (1 << n) - 1

    def topological_order(self):
        n = len(self.names)
        indeg = [bin(self.parent_masks[i]).count("1") for i in range(n)]
        ready = sorted((i for i in range(n) if indeg[i] == 0), reverse=True)
        order = []
        while ready:
            v = ready.pop()
            order.append(self.names[v])
            added = False
            for c in _iter_bits(self.child_masks[v]):
                indeg[c] -= 1
                if indeg[c] == 0:
                    ready.append(c)
                    added = True
            if added:
                ready.sort(reverse=True)
        return order

    def __eq__(self, other):
        return isinstance(other, CausalGraph) and self._canon == other._canon

    def __hash__(self):
        return hash(self._canon)

    def __repr__(self):
        return (
            f"CausalGraph({self.n_observed} observed, "
            f"{len(self.names) - self.n_observed} latent, "
            f"{len(self._canon[1])} edges)"
        )


# -- reachability core -------------------------------------------------------


def _reachable_mask(parent_masks, child_masks, src: int, cond: int) -> int:
    """Vertices reachable from ``src`` along paths left active by ``cond``.

    Ball-passing formulation: a vertex is visited in the "up" state when the
    ball may continue to its parents and children, and in the "down" state
    when it arrived from a parent (so it may continue down, or up if it is a
    collider opened by conditioning).
    """
    an_cond = cond
    frontier = cond
    while frontier:
        step = 0
        for v in _iter_bits(frontier):
            step |= parent_masks[v]
        frontier = step & ~an_cond
        an_cond |= frontier

    vis_up = src
    vis_down = 0
    stack = [(v, True) for v in _iter_bits(src)]
    while stack:
        v, up = stack.pop()
        bit = 1 << v
        if up:
            if not bit & cond:
                for p in _iter_bits(parent_masks[v] & ~vis_up):
                    vis_up |= 1 << p
                    stack.append((p, True))
                for c in _iter_bits(child_masks[v] & ~vis_down):
                    vis_down |= 1 << c
                    stack.append((c, False))
        else:
            if not bit & cond:
                for c in _iter_bits(child_masks[v] & ~vis_down):
                    vis_down |= 1 << c
                    stack.append((c, False))
            if bit & an_cond:
                for p in _iter_bits(parent_masks[v] & ~vis_up):
                    vis_up |= 1 << p
                    stack.append((p, True))
    return vis_up | vis_down


def _dsep_masks(parent_masks, child_masks, x: int, y: int, z: int) -> bool:
    if x & y or x & z or y & z:
        raise GraphError("d-separation sets must be pairwise disjoint")
    if not x or not y:
        return True
    if bin(x).count("1") > bin(y).count("1"):
        x, y = y, x
    return not _reachable_mask(parent_masks, child_masks, x, z) & y


# -- parsing and the public graph operations -----------------------------------


def parse_graph(text: str) -> CausalGraph:
    """Parse the line-oriented graph format.

    ``A -> B`` adds a directed edge, ``A <-> B`` is sugar for a fresh latent
    with children A and B, ``latent U : A B C`` declares an explicit latent,
    ``#`` starts a comment. Blank lines are skipped.
    """
    observed = set()
    edges = []
    latent_children = {}
    bidirected = []
    used_names = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("latent"):
            body = line[len("latent"):].strip()
            if ":" not in body:
                raise GraphError(f"line {lineno}: expected 'latent NAME : children'")
            name, _, kids = body.partition(":")
            name = name.strip()
            children = kids.replace(",", " ").split()
            if not name:
                raise GraphError(f"line {lineno}: latent needs a name")
            if name in latent_children:
                raise GraphError(f"duplicate vertex id: {name}")
            if len(set(children)) < 2:
                raise GraphError(f"line {lineno}: latent {name} has fewer than two children")
            latent_children[name] = children
            observed.update(children)
            used_names.add(name)
            used_names.update(children)
        elif "<->" in line:
            lhs, _, rhs = line.partition("<->")
            a, b = lhs.strip(), rhs.strip()
            if not a or not b or " " in a or " " in b:
                raise GraphError(f"line {lineno}: malformed bidirected edge")
            bidirected.append((a, b))
            observed.update((a, b))
            used_names.update((a, b))
        elif "->" in line:
            lhs, _, rhs = line.partition("->")
            a, b = lhs.strip(), rhs.strip()
            if not a or not b or " " in a or " " in b:
                raise GraphError(f"line {lineno}: malformed edge")
            edges.append((a, b))
            observed.update((a, b))
            used_names.update((a, b))
        else:
            raise GraphError(f"line {lineno}: cannot parse {line!r}")
    k = 0
    for a, b in bidirected:
        k += 1
        while f"U{k}" in used_names:
            k += 1
        latent_children[f"U{k}"] = [a, b]
        used_names.add(f"U{k}")
    return CausalGraph(observed, edges, latent_children)


def relations(g: CausalGraph, s, which: str, include_latents: bool = False) -> frozenset:
    """Union of parents/children/ancestors/descendants over the members of s.

    Ancestors and descendants are strict: a member of s appears in the result
    only when some other member reaches it.
    """
    mask = g.mask_of(s)
    if which == "parents":
        out = 0
        for v in _iter_bits(mask):
            out |= g.parent_masks[v]
    elif which == "children":
        out = 0
        for v in _iter_bits(mask):
            out |= g.child_masks[v]
    elif which == "ancestors":
        out = 0
        for v in _iter_bits(mask):
            out |= g.ancestors_mask(1 << v)
    elif which == "descendants":
        out = 0
        for v in _iter_bits(mask):
            out |= g.descendants_mask(1 << v)
    else:
        raise ValueError(f"unknown relation {which!r}")
    if not include_latents:
        out &= g.observed_mask
    return g.names_of(out)


def edge_cut(g: CausalGraph, cut_in, cut_out) -> CausalGraph:
    """The graph with incoming edges of cut_in and outgoing edges of cut_out removed.

    The vertex set is unchanged, so latents may be left with fewer than two
    children; such graphs only appear as intermediates of do-calculus checks.
    """
    in_mask = g.mask_of(cut_in)
    out_mask = g.mask_of(cut_out)
    if (in_mask | out_mask) & g.latent_mask:
        raise GraphError("cut sets must contain observed vertices only")
    edges = [
        (p, c)
        for p, c in g.edge_list()
        if not (1 << g._index[c]) & in_mask and not (1 << g._index[p]) & out_mask
    ]
    latent_children = {
        u: [c for c in kids if not (1 << g._index[c]) & in_mask]
        for u, kids in g.latent_children_map().items()
    }
    return CausalGraph(g.observed, edges, latent_children, check_latents=False)


def induced_subgraph(g: CausalGraph, w) -> CausalGraph:
    """Subgraph on the vertices in w, keeping edges between members of w.

    Latent vertices that end up with fewer than two children carry no
    confounding any more and are dropped.
    """
    keep = g.mask_of(w)
    obs = [name for name in g.names[: g.n_observed] if 1 << g._index[name] & keep]
    obs_mask = keep & g.observed_mask
    edges = [
        (p, c)
        for p, c in g.edge_list()
        if 1 << g._index[p] & keep and 1 << g._index[c] & keep
    ]
    latent_children = {}
    for u, kids in g.latent_children_map().items():
        if not 1 << g._index[u] & keep:
            continue
        remaining = [c for c in kids if 1 << g._index[c] & obs_mask]
        if len(remaining) >= 2:
            latent_children[u] = remaining
    return CausalGraph(obs, edges, latent_children)


def d_separated(g: CausalGraph, x, y, z, *, allow_latents: bool = False) -> bool:
    """True iff every path between x and y is blocked by z (Bayes-ball)."""
    xm = g.mask_of(x)
    ym = g.mask_of(y)
    zm = g.mask_of(z)
    if not allow_latents and (xm | ym | zm) & g.latent_mask:
        raise GraphError("latent vertices in d-separation sets need allow_latents=True")
    return _dsep_masks(g.parent_masks, g.child_masks, xm, ym, zm)
