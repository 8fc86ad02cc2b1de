"""Shared fixture graphs and problems used across the test suite.

These are small benchmark models exercised repeatedly: a pruning showcase
with seven removable covariates, a clustering showcase with two stacked
clusters, two applied case studies (tobacco pricing / infant health, and
socioeconomic position / atherosclerosis), and the small regression graphs
for the verification algorithm.
"""

from __future__ import annotations

from dofuse import parse_distribution, parse_graph, parse_query

# Pruning showcase: effect of X1, X2 on Y; Z4, Z5 are non-ancestors, Z1-Z3
# separate from Y under intervention, Z6, Z7 hang off W2.
PRUNE_GRAPH = parse_graph(
    """
    X1 -> W1
    X2 -> W1
    W1 -> Y
    W2 -> Y
    W2 -> X1
    W2 -> W1
    W1 -> Z5
    X1 -> Z4
    Z7 -> Z6
    Z6 -> W2
    Z5 -> Z4
    Z3 -> Z4
    Z2 -> Z3
    Z2 -> Z1
    Z1 -> X1
    Z1 -> X2
    Z3 -> X1
    X1 <-> Y
    X1 <-> W1
    X1 <-> X2
    """
)
PRUNE_INPUTS = (
    parse_distribution("p(Y,Z3,Z4,Z5 | do(W1), W2)"),
    parse_distribution("p(W1,Z1,Z2,Z5,Z7 | do(X1,X2), W2)"),
    parse_distribution("p(W2,Z6,Z7)"),
)
PRUNE_QUERY = parse_query("p(Y | do(X1,X2))")

PRUNED_GRAPH_EXPECTED = parse_graph(
    """
    X1 -> W1
    X2 -> W1
    W1 -> Y
    W2 -> Y
    W2 -> X1
    W2 -> W1
    X1 <-> Y
    X1 <-> W1
    X1 <-> X2
    """
)

# Size-reduction illustration: Z5 and Z6 are irrelevant for p(y | do(x)),
# and Z1-Z3 form a transit cluster of the pruned graph.
ILLUSTRATION_GRAPH = parse_graph(
    """
    Z4 -> Z3
    Z5 -> Z3
    Z4 -> Y
    Z3 -> Z1
    Z3 -> Z2
    Z1 -> X
    Z2 -> X
    X -> Y
    Y -> Z6
    """
)
ILLUSTRATION_PRUNED = parse_graph(
    """
    Z4 -> Z3
    Z4 -> Y
    Z3 -> Z1
    Z3 -> Z2
    Z1 -> X
    Z2 -> X
    X -> Y
    """
)
ILLUSTRATION_QUERY = parse_query("p(Y | do(X))")

# Non-ancestor necessity example: Z is a non-ancestor of Y yet conditioning
# on it carries information.
COLLIDER_Z_GRAPH = parse_graph("X -> Y\nX -> Z\nY -> Z")

# Clustering showcase: clusters {R,S1,S2,E1,E2} and {T1,T2}.
CLUSTER_GRAPH = parse_graph(
    """
    E1 -> W2
    E2 -> W2
    E1 -> W1
    E2 -> W1
    W1 -> W2
    W2 -> Y
    S2 -> E2
    S2 -> E1
    S1 -> E1
    S1 -> S2
    R -> S2
    R -> S1
    X -> R
    T1 -> X
    T2 -> X
    T1 -> W1
    T2 -> W1
    """
)
CLUSTER_S = frozenset({"R", "S1", "S2", "E1", "E2"})
CLUSTER_T = frozenset({"T1", "T2"})
CLUSTER_QUERY = parse_query("p(Y | do(X))")

CLUSTERED_GRAPH_EXPECTED = parse_graph(
    """
    S -> W1
    S -> W2
    W1 -> W2
    W2 -> Y
    X -> S
    T -> W1
    T -> X
    """
)

# input sets for the four clustering scenarios
CLUSTER_CASES = {
    "i": ("p(X,E1,E2,S1,R)", "p(Y,E1,E2,T1,T2)"),
    "ii": ("p(X,E1,E2,R,W1)", "p(Y,W2 | do(W1))"),
    "iii": ("p(Y | do(T1,T2), E1,E2,S2)", "p(X,T1,T2)"),
    "iv": ("p(Y,T1,T2,R,E1,E2)", "p(X,W1 | do(E1,E2))", "p(X,W1)"),
}

# latent-emitter hazard: clustering {Z, U} would hide the confounding
LATENT_EMITTER_GRAPH = parse_graph("X -> Y\nZ -> Y\nZ -> X\nlatent U : X Y")

# single-layer cluster where T1 is both receiver and emitter
FLAT_GRAPH = parse_graph(
    """
    X -> T1
    X -> T2
    T1 -> T3
    T2 -> T3
    T1 -> Y
    T3 -> Y
    X <-> Y
    """
)
FLAT_CLUSTER = frozenset({"T1", "T2", "T3"})

# verification-algorithm regressions: clustering {Z1, Z2} loses the effect
COUNTER_GRAPH = parse_graph(
    """
    W -> X
    W -> Y
    X -> Z1
    Z1 -> Z2
    Z2 -> Y
    """
)
COUNTER_CLUSTER = frozenset({"Z1", "Z2"})
COUNTER_QUERY = parse_query("p(Y | do(X))")

# tobacco pricing and infant mortality; 17 observed vertices
TOBACCO_GRAPH = parse_graph(
    """
    O -> R
    O -> C
    O -> S
    R -> C
    C -> S
    S -> B
    B -> I
    W -> R
    W -> H
    E -> C
    M -> C
    C -> J
    O -> J
    J -> I
    D -> N
    M -> B
    Q -> F
    Q -> M
    F -> M
    F -> E
    H -> A
    A -> I
    C -> D
    D -> B
    D -> G
    E -> A
    N -> I
    G -> I
    D -> I
    Q -> E
    S -> G
    M -> G
    M -> N
    F -> R
    """
)
TOBACCO_INPUTS = (
    parse_distribution("p(C,O,R,E,M)"),
    parse_distribution("p(C,S,G,D,B | do(O))"),
)

# atherosclerosis study; B, H, M stand for variable groups
ATHERO_GRAPH = parse_graph(
    """
    L -> H
    H -> M
    M -> Y
    B -> S
    B -> L
    B -> M
    L -> S
    S -> H
    S -> M
    L -> Y
    """
)

# the same model with each group opened into a two-vertex chain
ATHERO_EXPANDED = parse_graph(
    """
    L -> H1
    H1 -> H2
    H2 -> M1
    M1 -> M2
    M2 -> Y
    B1 -> B2
    B2 -> S
    B2 -> L
    B2 -> M1
    L -> S
    S -> H1
    S -> M1
    L -> Y
    """
)
ATHERO_B = frozenset({"B1", "B2"})
ATHERO_H = frozenset({"H1", "H2"})
ATHERO_M = frozenset({"M1", "M2"})

# refined-M variant: M kept as two vertices, B and H clustered
ATHERO_REFINED_M = parse_graph(
    """
    L -> H
    H -> M1
    M1 -> M2
    M2 -> Y
    B -> S
    B -> L
    B -> M1
    L -> S
    S -> H
    S -> M1
    L -> Y
    """
)
