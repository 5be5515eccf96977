"""Self-avoiding-walk computation trees and the potential-function apparatus.

A node of the walk tree is a self-avoiding walk from the root vertex; its
preimage is the walk's endpoint.  Walks stop at boundary vertices (boundary
copies), at revisits of an earlier walk vertex (cycle-closing copies), or at
dead ends.  Marginals of the root are computed by the ratio recursion

    R_u = lambda_u * prod_i (beta_i x_i + 1) / (x_i + gamma_i)

over the children, with an explicit infinity: x = inf contributes the exact
factor beta_i, x = 0 contributes 1/gamma_i.

The second half of the module builds the contraction potential for a
parameter class: the edge functions g, the threshold x0, the exponent alpha,
the scale t, phi = min{1/t, 1/(x log(lambda/x))} and its primitive Phi, the
per-node decay factor, and the geometric single-term bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

from scipy.optimize import minimize_scalar

from . import constants
from .errors import CapacityError, InputError, NumericError
from .model import ParamClass, Pinning, TwoSpinSystem, lambda_c


@dataclass
class SawTree:
    """Walk tree rooted at `root_vertex`, nodes in creation order (root = 0).

    Children of every node are ordered by increasing preimage vertex, and a
    node's id is always smaller than its descendants', so a reverse-id sweep
    is a valid post-order.
    """

    root_vertex: int
    boundary: frozenset[int]
    preimage: list[int]
    parent: list[int]            # -1 at the root
    children: list[list[int]]
    depth: list[int]
    boundary_copy: list[bool]
    cycle_closing: list[bool]
    cycle_spin: list[int | None]  # spin forced on a cycle-closing copy
    edge_to_parent: list[int | None]  # edge index in G
    pinned_spin: dict[int, int] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.preimage)

    def is_leaf(self, node: int) -> bool:
        return not self.children[node]


def build_saw_tree(system: TwoSpinSystem, root: int,
                   boundary: Sequence[int] | frozenset[int] = (),
                   depth_cap: int | None = None,
                   node_cap: int = constants.REGION_NODE_CAP) -> SawTree:
    """Enumerate all self-avoiding walks from `root`.

    Walks stop on reaching a boundary vertex or revisiting a walk vertex.
    `depth_cap`/`node_cap` are guards: exceeding either raises CapacityError
    rather than silently truncating.
    """
    bset = frozenset(boundary)
    for b in bset:
        if not (0 <= b < system.n):
            raise InputError(f"boundary vertex {b} out of range")
    if not (0 <= root < system.n):
        raise InputError(f"root vertex {root} out of range")
    if root in bset:
        raise InputError(f"root vertex {root} lies on the boundary")

    tree = SawTree(root_vertex=root, boundary=bset, preimage=[root],
                   parent=[-1], children=[[]], depth=[0],
                   boundary_copy=[False], cycle_closing=[False],
                   cycle_spin=[None], edge_to_parent=[None])

    def new_node(pre, par, dep, bc, cc, spin, eidx):
        nid = len(tree.preimage)
        if nid >= node_cap:
            raise CapacityError(f"saw tree exceeds node cap {node_cap}")
        tree.preimage.append(pre)
        tree.parent.append(par)
        tree.children.append([])
        tree.depth.append(dep)
        tree.boundary_copy.append(bc)
        tree.cycle_closing.append(cc)
        tree.cycle_spin.append(spin)
        tree.edge_to_parent.append(eidx)
        tree.children[par].append(nid)
        return nid

    # iterative DFS; walk[i] = preimage at depth i along the current path
    ENTER, EXIT = 0, 1
    walk: list[int] = []
    walk_pos: dict[int, int] = {}
    stack: list[tuple[int, int]] = [(EXIT, 0), (ENTER, 0)]
    while stack:
        action, node = stack.pop()
        if action == EXIT:
            walk_pos.pop(walk.pop())
            continue
        p = tree.preimage[node]
        d = tree.depth[node]
        walk_pos[p] = d
        walk.append(p)
        parent_pre = walk[d - 1] if d > 0 else None
        descend = []
        for (w, eidx) in system.neighbors(p):  # increasing vertex order
            if w == parent_pre:
                continue
            if w in bset:
                new_node(w, node, d + 1, True, False, None, eidx)
            elif w in walk_pos:
                # closing a cycle at w: compare the neighbour the walk used
                # to leave w on its first visit with the neighbour it now
                # returns through (the current endpoint p)
                exit_nbr = walk[walk_pos[w] + 1]
                spin = 0 if exit_nbr > p else 1
                new_node(w, node, d + 1, False, True, spin, eidx)
            else:
                if depth_cap is not None and d + 1 > depth_cap:
                    raise CapacityError(
                        f"saw tree exceeds depth cap {depth_cap}")
                descend.append(new_node(w, node, d + 1, False, False, None, eidx))
        for child in reversed(descend):
            stack.append((EXIT, child))
            stack.append((ENTER, child))
    return tree


def verify_tree_invariants(tree: SawTree, system: TwoSpinSystem) -> None:
    """Structural checks: non-leaf tree degree equals preimage degree in G,
    and every leaf is exactly one of boundary copy / cycle-closing copy /
    dead-end (degree-1 preimage, or isolated root)."""
    for u in range(len(tree)):
        tree_deg = len(tree.children[u]) + (1 if tree.parent[u] >= 0 else 0)
        g_deg = system.degree(tree.preimage[u])
        if tree.boundary_copy[u] and tree.cycle_closing[u]:
            raise NumericError(f"node {u}: both boundary and cycle-closing")
        if not tree.is_leaf(u):
            if tree.boundary_copy[u] or tree.cycle_closing[u]:
                raise NumericError(f"node {u}: flagged copy is not a leaf")
            if tree_deg != g_deg:
                raise NumericError(
                    f"node {u}: tree degree {tree_deg} != graph degree {g_deg}")
        elif not (tree.boundary_copy[u] or tree.cycle_closing[u]):
            # residual kind: a dead end, i.e. degree-1 preimage (or lone root)
            if not ((g_deg == 1 and tree.parent[u] >= 0) or g_deg == 0):
                raise NumericError(f"node {u}: unexplained leaf (degree {g_deg})")


def pin_saw_tree(tree: SawTree, sigma: Pinning) -> SawTree:
    """Attach spins: boundary copies take sigma at their preimage; a
    cycle-closing copy takes the spin forced by the walk successor of its
    first visit (0 if the successor is larger in the vertex order, else 1)."""
    spins: dict[int, int] = {}
    for u in range(len(tree)):
        if tree.boundary_copy[u]:
            pre = tree.preimage[u]
            if pre not in sigma:
                raise InputError(f"boundary vertex {pre} missing from pinning")
            spins[u] = sigma.value(pre)
        elif tree.cycle_closing[u]:
            spins[u] = tree.cycle_spin[u]
    return replace(tree, pinned_spin=spins)


def prune_pinned_leaves(tree: SawTree,
                        system: TwoSpinSystem) -> tuple[SawTree, dict[int, float]]:
    """Fold every pinned leaf into its parent's field and drop it.

    A pinned-0 leaf multiplies the parent field by beta_e, a pinned-1 leaf by
    1/gamma_e.  Returns the reduced tree (same node ids, pinned leaves
    detached) and the map node -> effective lambda for nodes that changed.
    """
    log_fields: dict[int, float] = {}
    dropped = set()
    for u, s in tree.pinned_spin.items():
        if not tree.is_leaf(u):
            raise InputError(f"pinned node {u} is not a leaf")
        par = tree.parent[u]
        e = tree.edge_to_parent[u]
        base = log_fields.get(par, system.log_lambda[tree.preimage[par]])
        if s == 0:
            log_fields[par] = base + system.log_beta[e]
        else:
            log_fields[par] = base - system.log_gamma[e]
        dropped.add(u)
    reduced = replace(
        tree,
        children=[[c for c in cs if c not in dropped] for cs in tree.children],
        pinned_spin={})
    fields = {u: math.exp(lw) for u, lw in log_fields.items()}
    return reduced, fields


def tree_recursion_step(lambda_u: float,
                        edge_params: Sequence[tuple[float, float]],
                        child_ratios: Sequence[float]) -> float:
    """lambda_u * prod (beta x + 1)/(x + gamma), with the limit conventions
    x = inf -> beta and x = 0 -> 1/gamma taken exactly."""
    if len(edge_params) != len(child_ratios):
        raise InputError("edge params and child ratios disagree in length")
    out = lambda_u
    for (beta, gamma), x in zip(edge_params, child_ratios):
        if math.isinf(x):
            out *= beta
        elif x == 0.0:
            out *= 1.0 / gamma
        else:
            out *= (beta * x + 1.0) / (x + gamma)
    return out


def evaluate_ratios(tree: SawTree, system: TwoSpinSystem,
                    ratio_pin: dict[int, float] | None = None,
                    fields: dict[int, float] | None = None) -> dict[int, float]:
    """Bottom-up ratio at every evaluated node.

    `ratio_pin` pins nodes to ratio values in [0, inf] (their subtrees are
    skipped); spin pinnings on the tree give ratio inf for spin 0 and 0 for
    spin 1; `fields` overrides per-node lambda.
    """
    ratio_pin = ratio_pin or {}
    fields = fields or {}
    # forward pass: nodes strictly below a pinned node are never evaluated
    active = [False] * len(tree)
    active[0] = True
    for u in range(1, len(tree)):
        par = tree.parent[u]
        active[u] = (active[par] and par not in ratio_pin
                     and par not in tree.pinned_spin)
    R: dict[int, float] = {}
    for u in range(len(tree) - 1, -1, -1):
        if not active[u]:
            continue
        if u in ratio_pin:
            val = ratio_pin[u]
            if not (val >= 0.0):  # rejects nan and negatives
                raise InputError(f"pinned ratio at node {u} must be in [0, inf]")
            R[u] = val
            continue
        if u in tree.pinned_spin:
            R[u] = math.inf if tree.pinned_spin[u] == 0 else 0.0
            continue
        lam_u = fields.get(u, system.lam(tree.preimage[u]))
        if tree.is_leaf(u):
            R[u] = lam_u
            continue
        params = []
        ratios = []
        for c in tree.children[u]:
            e = tree.edge_to_parent[c]
            params.append((system.beta(e), system.gamma(e)))
            ratios.append(R[c])
        R[u] = tree_recursion_step(lam_u, params, ratios)
    return R


def root_ratio(tree: SawTree, system: TwoSpinSystem,
               ratio_pin: dict[int, float] | None = None,
               fields: dict[int, float] | None = None) -> float:
    return evaluate_ratios(tree, system, ratio_pin, fields)[0]


def ratio_to_marginal(ratio: float) -> tuple[float, float]:
    """(p0, p1) from R = p0/p1."""
    if math.isinf(ratio):
        return 1.0, 0.0
    return ratio / (1.0 + ratio), 1.0 / (1.0 + ratio)


def saw_marginal(system: TwoSpinSystem, v: int,
                 spin_pin: Pinning = Pinning(),
                 node_cap: int = constants.REGION_NODE_CAP) -> tuple[float, float]:
    """Exact (p0, p1) of vertex v given the pinning, via the walk tree with
    boundary = pin domain."""
    if v in spin_pin:
        raise InputError(f"vertex {v} is pinned")
    tree = build_saw_tree(system, v, spin_pin.domain, node_cap=node_cap)
    pinned = pin_saw_tree(tree, spin_pin)
    reduced, fields = prune_pinned_leaves(pinned, system)
    return ratio_to_marginal(root_ratio(reduced, system, fields=fields))


# ---------------------------------------------------------------------------
# contraction potential

@dataclass(frozen=True)
class PotentialParams:
    """Derived potential constants for one parameter class."""

    t: float
    alpha: float
    x0: float
    c_min: float
    c_max: float

    def __post_init__(self):
        if not (self.t > 0.0):
            raise InputError(f"t must be positive, got {self.t}")
        if not (0.0 < self.alpha < 1.0):
            raise InputError(f"alpha must lie in (0,1), got {self.alpha}")
        if not (0.0 < self.c_min <= self.c_max):
            raise InputError("need 0 < c_min <= c_max")


def g_value(x: float, pc: ParamClass, beta_e: float, gamma_e: float) -> float:
    """Per-edge contraction function at x in (0, lambda)."""
    lam = pc.lambda_bound
    if not (0.0 < x < lam):
        raise InputError(f"g needs x in (0, lambda), got {x}")
    num = (beta_e * gamma_e - 1.0) * x * math.log(lam / x)
    # (x+gamma)/(beta x+1) = 1 + ((1-beta)x + gamma - 1)/(beta x + 1); the
    # log1p form survives x so large that x+gamma rounds to x+1
    log_ratio = math.log1p(((1.0 - beta_e) * x + gamma_e - 1.0)
                           / (beta_e * x + 1.0))
    den = (beta_e * x + 1.0) * (x + gamma_e) * log_ratio
    return num / den


def _bisect(f: Callable[[float], float], lo: float, hi: float,
            iters: int = 200) -> float:
    flo = f(lo)
    if flo > 0.0:
        raise NumericError("bisection bracket does not straddle the root")
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if f(mid) <= 0.0:
            lo = mid
        else:
            hi = mid
    return lo


def derive_potential(pc: ParamClass) -> PotentialParams:
    """Build the potential constants for a class with lambda < lambda_c.

    x0 is the largest point such that (beta gamma - 1) x log(lambda/x),
    normalized by log((lambda+gamma)/(lambda+1)), stays <= 1/2 on (0, x0];
    since x log(lambda/x) increases up to lambda/e, this is a bisection on
    the rising branch (or essentially all of (0, lambda) when even the peak
    satisfies the bound).  Then

        alpha = 1 - max{1/2, (log lambda - log x0)/(log lambda_c - log x0)}
        t = (1-alpha) gamma/(beta gamma - 1) * log((lambda+gamma)/(beta lambda+1))

    and c_min/c_max bracket phi over [0, lambda) by 1-D optimization.
    """
    lam = pc.lambda_bound
    lc = lambda_c(pc)
    if lam >= lc:
        raise InputError(
            f"potential needs lambda < lambda_c ({lc!r}), got {lam!r}")
    beta, gamma = pc.beta, pc.gamma
    norm = math.log1p((gamma - 1.0) / (lam + 1.0))

    def h(x):
        return (beta * gamma - 1.0) * x * math.log(lam / x) / norm - 0.5

    peak = lam / math.e
    if h(peak) <= 0.0:
        x0 = lam * (1.0 - 1e-9)
    else:
        # x log(lam/x) rises on (0, lam/e]; bracket from far below the peak
        x0 = _bisect(h, max(lam * 1e-300, 5e-324), peak)
    ratio = (math.log(lam) - math.log(x0)) / (math.log(lc) - math.log(x0))
    alpha = 1.0 - max(0.5, ratio)
    t = ((1.0 - alpha) * gamma / (beta * gamma - 1.0)
         * math.log1p(((1.0 - beta) * lam + gamma - 1.0) / (beta * lam + 1.0)))

    def phi_t(x):
        if x <= 0.0:
            return 1.0 / t
        s = x * math.log(lam / x)
        return 1.0 / t if s <= t else 1.0 / s

    lo_res = minimize_scalar(phi_t, bounds=(lam * 1e-12, lam * (1 - 1e-12)),
                             method="bounded")
    hi_res = minimize_scalar(lambda x: -phi_t(x),
                             bounds=(lam * 1e-12, lam * (1 - 1e-12)),
                             method="bounded")
    c_min = min(float(lo_res.fun), 1.0 / t)
    c_max = max(float(-hi_res.fun), 1.0 / t)
    return PotentialParams(t=t, alpha=alpha, x0=x0, c_min=c_min, c_max=c_max)


def phi(x: float, pp: PotentialParams, lam: float) -> float:
    """min{1/t, 1/(x log(lambda/x))} on [0, lambda), with phi(0) = 1/t."""
    if not (0.0 <= x < lam):
        raise InputError(f"phi needs x in [0, lambda), got {x}")
    if x == 0.0:
        return 1.0 / pp.t
    s = x * math.log(lam / x)
    return 1.0 / pp.t if s <= pp.t else 1.0 / s


def _adaptive_simpson(f: Callable[[float], float], a: float, b: float,
                      tol: float) -> float:
    def rec(a, b, fa, fm, fb, whole, tol, depth):
        m = 0.5 * (a + b)
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = f(lm), f(rm)
        left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
        right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
        if abs(left + right - whole) <= 15.0 * tol:
            return left + right + (left + right - whole) / 15.0
        if depth <= 0:
            raise NumericError("adaptive quadrature failed to converge")
        return (rec(a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + rec(m, b, fm, frm, fb, right, 0.5 * tol, depth - 1))

    if a == b:
        return 0.0
    fa, fb = f(a), f(b)
    m = 0.5 * (a + b)
    fm = f(m)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    return rec(a, b, fa, fm, fb, whole, tol, 60)


def Phi(x: float, pp: PotentialParams, lam: float,
        tol: float = constants.QUADRATURE_ABS_TOL) -> float:
    """Integral of phi from 0 to x, split at the kinks where the min switches."""
    if not (0.0 <= x < lam):
        raise InputError(f"Phi needs x in [0, lambda), got {x}")
    f = lambda s: phi(s, pp, lam)
    peak = lam / math.e
    cuts = [0.0]
    if peak * math.log(lam / peak) > pp.t:  # two kink points straddle lam/e
        k = lambda s: s * math.log(lam / s) - pp.t
        k1 = _bisect(k, lam * 1e-30, peak)                   # rising branch
        k2 = _bisect(lambda s: -k(s), peak, lam * (1.0 - 1e-15))  # falling
        cuts += [k1, k2]
    cuts = sorted(c for c in cuts if c < x) + [x]
    total = 0.0
    for a, b in zip(cuts, cuts[1:]):
        total += _adaptive_simpson(f, a, b, tol * (b - a) / max(x, 1e-300))
    return total


def decay_factor(x: Sequence[float], lambda_u: float,
                 edge_params: Sequence[tuple[float, float]],
                 pp: PotentialParams, lam: float) -> float:
    """phi(F_u(x)) * sum_i |dF_u/dx_i| / phi(x_i) at a strictly interior x.

    The partial derivative is evaluated in closed form:
    lambda_u (beta_i gamma_i - 1)/(x_i+gamma_i)^2 * prod_{j != i}
    (beta_j x_j + 1)/(x_j + gamma_j).
    """
    if len(x) != len(edge_params):
        raise InputError("x and edge params disagree in length")
    for xi in x:
        if not (0.0 < xi < lam):
            raise InputError(f"decay factor needs interior x, got {xi}")
    if not x:
        return 0.0
    value = tree_recursion_step(lambda_u, edge_params, x)
    if not (0.0 <= value < lam):
        raise InputError(f"recursion value {value} escapes [0, lambda)")
    factors = [(b * xi + 1.0) / (xi + g) for (b, g), xi in zip(edge_params, x)]
    total = 0.0
    for i, ((b, g), xi) in enumerate(zip(edge_params, x)):
        partial = lambda_u * (b * g - 1.0) / (xi + g) ** 2
        for j, fj in enumerate(factors):
            if j != i:
                partial *= fj
        total += abs(partial) / phi(xi, pp, lam)
    return phi(value, pp, lam) * total


def trivial_term_bound(lambda_u: float, d: int, pp: PotentialParams,
                       pc: ParamClass) -> float:
    """Uniform bound on any single term of the decay-factor sum at arity d:
    (c_max/c_min) (beta gamma - 1)/gamma^2 * lambda_u *
    ((beta lambda + 1)/(lambda + gamma))^(d-1)."""
    if d < 1:
        raise InputError("term bound needs arity d >= 1")
    beta, gamma, lam = pc.beta, pc.gamma, pc.lambda_bound
    c_trl = (pp.c_max / pp.c_min) * (beta * gamma - 1.0) / gamma ** 2
    return c_trl * lambda_u * ((beta * lam + 1.0) / (lam + gamma)) ** (d - 1)


def tree_dump(tree: SawTree) -> str:
    """Indented debug rendering (no stability guarantee)."""
    lines = []
    stack = [0]
    while stack:
        u = stack.pop()
        flags = []
        if tree.boundary_copy[u]:
            flags.append("boundary")
        if tree.cycle_closing[u]:
            flags.append(f"cycle->spin {tree.cycle_spin[u]}")
        if u in tree.pinned_spin:
            flags.append(f"pinned {tree.pinned_spin[u]}")
        tag = f" [{', '.join(flags)}]" if flags else ""
        lines.append(f"{'  ' * tree.depth[u]}{u}: v{tree.preimage[u]}{tag}")
        stack.extend(reversed(tree.children[u]))
    return "\n".join(lines)
