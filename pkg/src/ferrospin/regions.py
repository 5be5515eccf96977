"""Good-neighbourhood regions and aggregate influence at the centre vertex.

A region S_v around a centre v is grown by a depth-first search over the
self-avoiding-walk tree of the graph (with cycle-closing copies removed).
The walk stops early once the accumulated branching along the path reaches
d1, flushing all children of the stopping node when there are fewer than d2
of them.  The resulting boundary admits two per-leaf path conditions that
this module can re-check independently, a notion of "good" boundary
configuration, and an exact aggregate-influence computation over all good
configurations at desk scale.

Pinnings on walk-tree leaves below are *ratio* pinnings: value inf stands
for spin 0 and value 0.0 for spin 1.
"""

from __future__ import annotations

import json
import math
from collections.abc import Mapping
from dataclasses import dataclass

from . import constants
from .errors import CapacityError, FerrospinError, InputError
from .exact import conditional_marginal
from .model import Pinning, TwoSpinSystem, ParamClass, induced_subsystem, lambda0
from .sawtree import SawTree, evaluate_ratios

__all__ = [
    "RegionParams",
    "Region",
    "RegionVerification",
    "GoodBoundarySpec",
    "adjacency_map",
    "construct_region",
    "verify_region",
    "is_good_boundary",
    "is_good_tree_boundary",
    "unsatisfiable_vertices",
    "good_boundary_configs",
    "boundary_pinning",
    "influence_a_u",
    "assm_sum",
    "assm_report_csv",
    "region_json",
    "shortest_path_closure_check",
    "universal_pinning",
    "level_mixture_pinning",
    "ratio_dominance_slack",
    "monotone_potential_slack",
    "verify_monotone_potential",
    "one_step_ratio_factor",
    "check_one_step_relation",
]


@dataclass(frozen=True)
class RegionParams:
    """Growth thresholds: stop the walk DFS at accumulated branching d1,
    flush children only when fewer than d2 of them."""

    d1: int
    d2: int
    c_d: float = constants.DEFAULT_C_D

    def __post_init__(self) -> None:
        if not (isinstance(self.d1, int) and isinstance(self.d2, int)):
            raise InputError("d1 and d2 must be integers")
        if self.d1 < 1 or self.d2 < self.d1:
            raise InputError("need 1 <= d1 <= d2")
        if not self.c_d > 0:
            raise InputError("c_d must be positive")

    @classmethod
    def from_n(cls, n: int, c_d: float = constants.DEFAULT_C_D) -> "RegionParams":
        """d1 = ceil(c_d * ln ln n), d2 = ceil((ln n)^3), natural logs,
        clamped so that 1 <= d1 <= d2 for tiny n."""
        if n < 2:
            raise InputError("need at least two vertices to derive parameters")
        d1 = max(1, math.ceil(c_d * math.log(math.log(n))))
        d2 = max(d1, math.ceil(math.log(n) ** 3))
        return cls(d1=d1, d2=d2, c_d=c_d)


@dataclass(frozen=True)
class Region:
    center: int
    members: frozenset[int]
    boundary: frozenset[int]
    d1: int
    d2: int

    def __post_init__(self) -> None:
        if self.center not in self.members:
            raise InputError("centre must belong to the region")
        if self.members & self.boundary:
            raise InputError("region and boundary overlap")
        if self.d1 < 1 or self.d2 < self.d1:
            raise InputError("need 1 <= d1 <= d2")


def adjacency_map(graph) -> dict[int, tuple[int, ...]]:
    """Normalize a graph argument to {vertex: sorted neighbor tuple}.

    Accepts a TwoSpinSystem or a mapping vertex -> iterable of neighbors.
    """
    if isinstance(graph, TwoSpinSystem):
        return {v: tuple(w for w, _ in graph.neighbors(v))
                for v in range(graph.n)}
    if isinstance(graph, Mapping):
        adj = {v: tuple(sorted(set(ws))) for v, ws in graph.items()}
        for v, ws in adj.items():
            for w in ws:
                if w == v:
                    raise InputError(f"self-loop at {v}")
                if w not in adj or v not in adj[w]:
                    raise InputError(f"edge ({v},{w}) is not symmetric")
        return adj
    raise InputError("graph must be a TwoSpinSystem or an adjacency mapping")


def construct_region(graph, center: int, params: RegionParams,
                     node_cap: int = constants.REGION_NODE_CAP) -> Region:
    """Grow S_v by DFS over the walk tree without cycle-closing copies.

    At each tree node u (a self-avoiding walk ending at u), the children are
    the neighbors not yet on the walk.  Stop once the branching accumulated
    along the walk reaches d1; when stopping with fewer than d2 children,
    flush them all into the region.
    """
    adj = adjacency_map(graph)
    if center not in adj:
        raise InputError(f"vertex {center} is not in the graph")
    members: set[int] = {center}
    work = 0
    # (endpoint, vertices on the walk, branching sum strictly above endpoint)
    stack: list[tuple[int, frozenset[int], int]] = [
        (center, frozenset((center,)), 0)]
    while stack:
        u, walk, prefix = stack.pop()
        work += 1
        if work > node_cap:
            raise CapacityError(
                f"region growth exceeded {node_cap} walk-tree nodes")
        members.add(u)
        cld = [x for x in adj[u] if x not in walk]
        if not cld:
            continue
        degsum = prefix + len(cld)
        if degsum >= params.d1:
            if len(cld) < params.d2:
                members.update(cld)
                work += len(cld)
            continue
        for x in cld:
            stack.append((x, walk | {x}, degsum))
    boundary = {w for u in members for w in adj[u] if w not in members}
    return Region(center=center, members=frozenset(members),
                  boundary=frozenset(boundary), d1=params.d1, d2=params.d2)


@dataclass(frozen=True)
class RegionVerification:
    ok: bool                 # every checked boundary leaf satisfied a condition
    size_ok: bool            # |S_v| <= exp(d1) * d2
    boundary_ok: bool        # stored boundary equals the recomputation
    partial: bool            # a cap stopped the walk-tree sweep early
    nodes_visited: int
    leaves_checked: int
    witness: tuple[int, ...] | None  # root-to-leaf walk violating both conditions

    def __bool__(self) -> bool:
        return self.ok and self.size_ok and self.boundary_ok


def verify_region(graph, center: int, region: Region, params: RegionParams,
                  depth_cap: int = constants.SAW_DEPTH_CAP,
                  node_cap: int = constants.REGION_NODE_CAP) -> RegionVerification:
    """Re-check the region's promises on the walk tree with the boundary cut.

    Every leaf that is a copy of a boundary vertex must satisfy at least one
    of: (1) the branching into region copies summed over its strict ancestors,
    parent excluded, reaches d1; (2) some ancestor has at least d2
    non-cycle-closing children.  Caps yield a partial report, not a failure.
    """
    adj = adjacency_map(graph)
    S, B = region.members, region.boundary
    recomputed = {w for u in S for w in adj[u] if w not in S}
    boundary_ok = recomputed == B
    size_ok = len(S) <= math.exp(params.d1) * params.d2
    if not boundary_ok:
        return RegionVerification(ok=False, size_ok=size_ok, boundary_ok=False,
                                  partial=False, nodes_visited=0,
                                  leaves_checked=0, witness=None)
    nodes = 0
    leaves = 0
    partial = False
    witness: tuple[int, ...] | None = None
    # (endpoint, walk tuple, walk set, F-sum over strict ancestors,
    #  max non-cycle-closing child count over strict ancestors)
    stack: list[tuple[int, tuple[int, ...], frozenset[int], int, int]] = [
        (center, (center,), frozenset((center,)), 0, 0)]
    while stack:
        u, walk, walkset, fsum, maxcc = stack.pop()
        nodes += 1
        if nodes > node_cap:
            partial = True
            break
        cld = [x for x in adj[u] if x not in walkset]
        f_u = sum(1 for x in cld if x in S)
        cc = len(cld)
        for x in cld:
            if x in B:
                leaves += 1
                cond1 = fsum >= params.d1
                cond2 = max(maxcc, cc) >= params.d2
                if not (cond1 or cond2):
                    witness = walk + (x,)
                    break
            else:
                if len(walk) > depth_cap:
                    partial = True
                    continue
                stack.append((x, walk + (x,), walkset | {x},
                              fsum + f_u, max(maxcc, cc)))
        if witness is not None:
            break
    return RegionVerification(ok=witness is None, size_ok=size_ok,
                              boundary_ok=True, partial=partial,
                              nodes_visited=nodes, leaves_checked=leaves,
                              witness=witness)


# ---------------------------------------------------------------------------
# good boundary configurations

@dataclass(frozen=True)
class GoodBoundarySpec:
    """Frozen view of a region inside a host graph of n vertices, with the
    boundary neighbourhood of every region vertex precomputed."""

    region: Region
    n: int
    boundary_neighbors: tuple[tuple[int, tuple[int, ...]], ...]

    def __post_init__(self) -> None:
        if self.n < 2:
            raise InputError("global vertex count must be at least 2")

    @classmethod
    def build(cls, graph, region: Region, n: int) -> "GoodBoundarySpec":
        adj = adjacency_map(graph)
        rows = []
        for u in sorted(region.members):
            nbrs = tuple(w for w in adj[u] if w in region.boundary)
            if nbrs:
                rows.append((u, nbrs))
        return cls(region=region, n=n, boundary_neighbors=tuple(rows))


def is_good_boundary(spec: GoodBoundarySpec, sigma: Pinning) -> bool:
    """True iff every region vertex with more than d2/3 boundary neighbors
    sees at least (count / ln n) + 2 of them carrying spin 1."""
    if set(sigma.domain) != set(spec.region.boundary):
        raise InputError("configuration must cover exactly the boundary")
    log_n = math.log(spec.n)
    for u, nbrs in spec.boundary_neighbors:
        if len(nbrs) > spec.region.d2 / 3:
            ones = sum(sigma[w] for w in nbrs)
            if ones < len(nbrs) / log_n + 2:
                return False
    return True


def unsatisfiable_vertices(spec: GoodBoundarySpec) -> list[int]:
    """Region vertices whose one-count threshold exceeds their boundary
    degree, making the goodness predicate unsatisfiable; reported, never
    silently dropped."""
    log_n = math.log(spec.n)
    return [u for u, nbrs in spec.boundary_neighbors
            if len(nbrs) > spec.region.d2 / 3
            and len(nbrs) / log_n + 2 > len(nbrs)]


def good_boundary_configs(spec: GoodBoundarySpec):
    """Yield every good boundary configuration, in lexicographic order."""
    bset = sorted(spec.region.boundary)
    if len(bset) > constants.BLOCK_ENUM_LIMIT:
        raise CapacityError(
            f"boundary of size {len(bset)} is too large to enumerate")
    for mask in range(2 ** len(bset)):
        sigma = Pinning({v: (mask >> i) & 1 for i, v in enumerate(bset)})
        if is_good_boundary(spec, sigma):
            yield sigma


def boundary_pinning(region: Region, config) -> Pinning:
    """Restriction of a full spin configuration to the region boundary."""
    return Pinning({v: config[v] for v in region.boundary})


def is_good_tree_boundary(tree: SawTree, spins: Mapping[int, int], d2: int,
                          n: int) -> bool:
    """Walk-tree analogue: every non-leaf node with more than d2/3 children
    among the boundary copies needs at least (count / ln n) + 1 of them at
    spin 1."""
    if n < 2:
        raise InputError("global vertex count must be at least 2")
    lam_nodes = {u for u in range(len(tree))
                 if tree.boundary_copy[u] and tree.is_leaf(u)}
    if set(spins) != lam_nodes:
        raise InputError("spins must cover exactly the boundary copies")
    log_n = math.log(n)
    for u in range(len(tree)):
        if tree.is_leaf(u):
            continue
        kids = [c for c in tree.children[u] if c in lam_nodes]
        if len(kids) > d2 / 3:
            ones = sum(spins[c] for c in kids)
            if ones < len(kids) / log_n + 1:
                return False
    return True


# ---------------------------------------------------------------------------
# influence of boundary vertices on the centre

def influence_a_u(system: TwoSpinSystem, region: Region, u: int,
                  spec: GoodBoundarySpec) -> float:
    """max over good boundary configurations sigma of
    |P(center = 1 | sigma with u forced 0) - P(center = 1 | u forced 1)|.

    Conditioning on the full boundary screens off the rest of the graph, so
    the computation runs on the induced subsystem of region + boundary.
    """
    if u not in region.boundary:
        raise InputError(f"vertex {u} is not on the region boundary")
    keep = sorted(region.members | region.boundary)
    sub, relabel = induced_subsystem(system, keep)
    v_new = relabel[region.center]
    best = 0.0
    for sigma in good_boundary_configs(spec):
        p1 = []
        for c in (0, 1):
            pin = Pinning({relabel[w]: (c if w == u else sigma[w])
                           for w in region.boundary})
            p1.append(conditional_marginal(sub, pin, v_new)[1])
        best = max(best, abs(p1[0] - p1[1]))
    return best


def assm_sum(system: TwoSpinSystem, region: Region,
             spec: GoodBoundarySpec) -> float:
    """Aggregate influence of the boundary on the centre; the asymptotic
    target for this sum is 1/20, reported rather than asserted at desk
    scale."""
    return sum(influence_a_u(system, region, u, spec)
               for u in sorted(region.boundary))


def assm_report_csv(system: TwoSpinSystem, region: Region,
                    spec: GoodBoundarySpec) -> str:
    lines = ["center,boundary_vertex,a_u"]
    total = 0.0
    for u in sorted(region.boundary):
        a = influence_a_u(system, region, u, spec)
        total += a
        lines.append(f"{region.center},{u},{a!r}")
    lines.append(f"{region.center},sum,{total!r}")
    return "\n".join(lines) + "\n"


def region_json(region: Region) -> str:
    return json.dumps({
        "center": region.center,
        "members": sorted(region.members),
        "boundary": sorted(region.boundary),
        "d1": region.d1,
        "d2": region.d2,
    }, sort_keys=True)


def shortest_path_closure_check(spec: GoodBoundarySpec, sigma: Pinning,
                                tau: Pinning) -> list[Pinning]:
    """Hamming-geodesic interpolation that never leaves the good set:
    raise all 0->1 differences first, then lower the 1->0 ones.

    Returns the full path sigma = eta_0, ..., eta_t = tau.
    """
    for end in (sigma, tau):
        if not is_good_boundary(spec, end):
            raise InputError("both endpoints must be good boundary configurations")
    up = sorted(v for v in spec.region.boundary if sigma[v] == 0 and tau[v] == 1)
    down = sorted(v for v in spec.region.boundary if sigma[v] == 1 and tau[v] == 0)
    path = [sigma]
    current = dict(sigma.items())
    for v in up + down:
        current[v] = tau[v]
        eta = Pinning(current)
        if not is_good_boundary(spec, eta):
            raise FerrospinError(
                "interpolation left the good set; this contradicts the "
                "one-count minimum along the path")
        path.append(eta)
    return path


# ---------------------------------------------------------------------------
# universal worst-case pinning on the walk tree

def universal_pinning(tree: SawTree, system: TwoSpinSystem,
                      params: RegionParams, n: int) -> dict[int, float]:
    """Ratio pinning on the boundary copies that maximizes the root ratio
    among good configurations.

    Children-of-u rule: with at most d2/3 boundary children, all get ratio
    inf; otherwise sort by increasing edge beta*gamma (ties by node id) and
    pin the first floor(count / ln n) to ratio 0, the rest to inf.
    """
    if n < 2:
        raise InputError("global vertex count must be at least 2")
    log_n = math.log(n)
    sigma: dict[int, float] = {}
    for u in range(len(tree)):
        if tree.is_leaf(u):
            continue
        kids = [c for c in tree.children[u]
                if tree.boundary_copy[c] and tree.is_leaf(c)]
        if not kids:
            continue
        if len(kids) <= params.d2 / 3:
            for c in kids:
                sigma[c] = math.inf
        else:
            def edge_strength(c: int) -> tuple[float, int]:
                e = tree.edge_to_parent[c]
                return (system.beta(e) * system.gamma(e), c)
            ordered = sorted(kids, key=edge_strength)
            cut = math.floor(len(kids) / log_n)
            for c in ordered[:cut]:
                sigma[c] = 0.0
            for c in ordered[cut:]:
                sigma[c] = math.inf
    return sigma


def level_mixture_pinning(tree: SawTree, sigma_ratio: Mapping[int, float],
                          sigma_star: Mapping[int, float], k: int,
                          w: int) -> dict[int, float]:
    """The dominating pinning: sigma_star strictly above level k, the given
    configuration at level k and below, with node w left out."""
    tau: dict[int, float] = {}
    for u, val in sigma_ratio.items():
        if u == w:
            continue
        tau[u] = sigma_star[u] if tree.depth[u] < k else val
    return tau


def ratio_dominance_slack(tree: SawTree, system: TwoSpinSystem,
                          sigma_ratio: Mapping[int, float], k: int, w: int,
                          c: float, params: RegionParams, n: int) -> float:
    """min over non-leaf nodes u of R^{tau, w<-c}_u - R^{sigma, w<-c}_u,
    where tau mixes the universal pinning above level k into sigma.
    Nonnegative when the universal pinning dominates."""
    sigma_star = universal_pinning(tree, system, params, n)
    tau = level_mixture_pinning(tree, sigma_ratio, sigma_star, k, w)
    pin_s = dict(sigma_ratio)
    pin_s[w] = c
    pin_t = dict(tau)
    pin_t[w] = c
    r_s = evaluate_ratios(tree, system, ratio_pin=pin_s)
    r_t = evaluate_ratios(tree, system, ratio_pin=pin_t)
    slack = math.inf
    for u in range(len(tree)):
        if tree.is_leaf(u):
            continue
        slack = min(slack, r_t[u] - r_s[u])
    return slack


def monotone_potential_slack(tree: SawTree, system: TwoSpinSystem,
                             pc: ParamClass, w: int,
                             rho_w: Mapping[int, float], params: RegionParams,
                             n: int) -> float:
    """Slack of the worst-pinning inequality at the root:
    |R^{sigma_w, w<-inf} - R^{sigma_w, w<-0}| - |R^{rho_w, w<-inf} - R^{rho_w, w<-0}|,
    where sigma_w replaces rho_w by the universal pinning strictly above
    w's level.  Requires lambda strictly below sqrt(gamma/beta)."""
    if not pc.lambda_bound < lambda0(pc):
        raise InputError(
            "worst-pinning dominance needs lambda below sqrt(gamma/beta)")
    if not (tree.boundary_copy[w] and tree.is_leaf(w)):
        raise InputError(f"node {w} is not a boundary copy leaf")
    k = tree.depth[w]
    sigma_star = universal_pinning(tree, system, params, n)
    sigma_w = level_mixture_pinning(tree, rho_w, sigma_star, k, w)
    rho = {u: val for u, val in rho_w.items() if u != w}
    sides = {}
    for name, pin in (("rho", rho), ("sigma", sigma_w)):
        lo = dict(pin)
        lo[w] = 0.0
        hi = dict(pin)
        hi[w] = math.inf
        r_lo = evaluate_ratios(tree, system, ratio_pin=lo)[0]
        r_hi = evaluate_ratios(tree, system, ratio_pin=hi)[0]
        sides[name] = abs(r_hi - r_lo)
    return sides["sigma"] - sides["rho"]


def verify_monotone_potential(tree: SawTree, system: TwoSpinSystem,
                              pc: ParamClass, w: int,
                              rho_w: Mapping[int, float], params: RegionParams,
                              n: int,
                              tol: float = constants.POTENTIAL_SLACK) -> bool:
    return monotone_potential_slack(tree, system, pc, w, rho_w, params,
                                    n) >= -tol


# ---------------------------------------------------------------------------
# scalar one-step comparison

def one_step_ratio_factor(beta: float, gamma: float, x: float,
                          y: float) -> float:
    """(beta*x + 1)(y + gamma) / ((x + gamma)(beta*y + 1)): the one-step
    multiplier of the ratio x/y through an edge of parameters (beta, gamma)."""
    return (beta * x + 1.0) * (y + gamma) / ((x + gamma) * (beta * y + 1.0))


def check_one_step_relation(pc: ParamClass, x: float, y: float, xp: float,
                            yp: float) -> float:
    """Slack of the ordered-pair comparison: factor(x, y) - factor(x', y').

    Hypotheses enforced: lambda >= x > y > 0, lambda >= x' > y' > 0,
    x >= x', y >= y', x/y >= x'/y', and lambda < sqrt(gamma/beta).
    Nonnegative slack is the claimed conclusion.
    """
    if not pc.lambda_bound < lambda0(pc):
        raise InputError(
            "one-step comparison needs lambda below sqrt(gamma/beta)")
    lam = pc.lambda_bound
    if not (lam >= x > y > 0 and lam >= xp > yp > 0):
        raise InputError("need lambda >= x > y > 0 and lambda >= x' > y' > 0")
    if not (x >= xp and y >= yp and x / y >= xp / yp):
        raise InputError("need x >= x', y >= y', and x/y >= x'/y'")
    return (one_step_ratio_factor(pc.beta, pc.gamma, x, y)
            - one_step_ratio_factor(pc.beta, pc.gamma, xp, yp))
