"""Exact enumeration and Markov-chain Monte Carlo for the discrete models:
bond clusters with two wired sides at the self-dual point (crossing
probability 1/(1+sqrt(q))) and tile-based loop models with two wired boundary
arcs (hook-up probability 1/(1+N)).

Loop-model geometry.  The tile domain is the staircase square: the n x n array
of unit cells drawn on the 45-degree-rotated lattice, i.e. the diamond
{(u,v): |u|+|v| <= n-1}, with n tiles along each staircase side.  Its
90-degree rotation fixes the centre cell and therefore preserves the
checkerboard colouring for every n, which is what makes the
rotate-by-90-degrees bijection (and with it the exact 1/(1+N) identity) work
at every size; the axis-aligned n x n square admits the identity only for odd
n, which an exhaustive search over all non-crossing boundary wirings confirms.
The four marked strand ends sit one step past the four extremal cells'
outermost stubs - a rotation orbit - and the remaining boundary stubs close in
adjacent pairs; the two wired arcs join adjacent marked ends and span the
north-east and south-west staircase sides.  Both self-validation checks
(exact hook-up and the rotation bijection) gate this convention in the tests.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, ResourceError, StatisticsError
from .mc import McEstimate

FK_EDGE_CAP = 24
FK_MC_SIZE_CAP = 32
FPL_CELL_CAP = 16          # enumeration cap: at most 2^16 tile assignments
MC_MIN_BATCHES = 50


class UnionFind:
    """Union-find with path halving and union by size."""

    def __init__(self):
        self.parent: dict = {}
        self.size: dict = {}

    def add(self, x):
        if x not in self.parent:
            self.parent[x] = x
            self.size[x] = 1

    def find(self, x):
        p = self.parent
        while p[x] != x:
            p[x] = p[p[x]]
            x = p[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        return True

    def component_count(self) -> int:
        return sum(1 for x, p in self.parent.items() if x == p)


@dataclass(frozen=True)
class ExactResult:
    numerator_weight: float
    denominator_weight: float
    probability: float


# ---------------------------------------------------------------------------
# bond model with wired sides
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FkInstance:
    """Rectangle [0, n+1] x [0, n] with the left and right columns each
    contracted to a single vertex; p defaults to the self-dual point."""

    n: int
    q: float
    p: float | None = None

    def __post_init__(self):
        if self.n < 1:
            raise DomainError("n must be at least 1")
        if self.q <= 0.0:
            raise DomainError("q must be positive")
        if self.p is not None and not 0.0 < self.p < 1.0:
            raise DomainError("p must lie in (0,1)")

    @property
    def bond_probability(self) -> float:
        if self.p is not None:
            return self.p
        r = math.sqrt(self.q)
        return r / (1.0 + r)

    def graph(self) -> tuple[list, list[tuple]]:
        """(vertices, edges) of the contracted graph; self-loops dropped."""
        n = self.n

        def vid(x, y):
            if x == 0:
                return "L"
            if x == n + 1:
                return "R"
            return (x, y)

        edges = []
        for x in range(n + 1):
            for y in range(n + 1):
                a, b = vid(x, y), vid(x + 1, y)
                if a != b:
                    edges.append((a, b))
        for x in range(n + 2):
            for y in range(n):
                a, b = vid(x, y), vid(x, y + 1)
                if a != b:
                    edges.append((a, b))
        verts = sorted({v for e in edges for v in e}, key=str)
        return verts, edges


def fk_exact_crossing(inst: FkInstance) -> ExactResult:
    """Exact left-right crossing probability by exhaustive summation of
    p^open (1-p)^closed q^clusters over the contracted graph."""
    verts, edges = inst.graph()
    if len(edges) > FK_EDGE_CAP:
        raise ResourceError(f"{len(edges)} edges exceeds the enumeration cap {FK_EDGE_CAP}")
    p = inst.bond_probability
    q = inst.q
    num_terms: list[float] = []
    den_terms: list[float] = []
    m = len(edges)
    for mask in range(1 << m):
        uf = UnionFind()
        for vtx in verts:
            uf.add(vtx)
        o = 0
        mm = mask
        i = 0
        while mm:
            if mm & 1:
                o += 1
                uf.union(*edges[i])
            mm >>= 1
            i += 1
        k = uf.component_count()
        w = p**o * (1.0 - p) ** (m - o) * q**k
        den_terms.append(w)
        if uf.find("L") == uf.find("R"):
            num_terms.append(w)
    num = math.fsum(num_terms)
    den = math.fsum(den_terms)
    return ExactResult(numerator_weight=num, denominator_weight=den, probability=num / den)


def fk_duality_identity(pi: float, q: float) -> float:
    """Residual of (1 - pi) - pi / (pi + (1 - pi)/q); zero at pi = 1/(1+sqrt q)."""
    if not 0.0 < pi < 1.0:
        raise DomainError("pi must lie in (0,1)")
    if q <= 0.0:
        raise DomainError("q must be positive")
    return (1.0 - pi) - pi / (pi + (1.0 - pi) / q)


def fk_mc_crossing(inst: FkInstance, sweeps: int, burn_in: int, seed: int) -> McEstimate:
    """Single-bond heat-bath chain for the cluster measure (q >= 1).

    A bond opens with probability p when its endpoints are connected without
    it, else p / (p + q (1-p)).  The crossing indicator is measured once per
    sweep; the standard error comes from batch means over 50 batches.
    """
    if inst.q < 1.0:
        raise DomainError("the heat-bath chain requires q >= 1")
    if inst.n > FK_MC_SIZE_CAP:
        raise ResourceError(f"n={inst.n} exceeds the chain size cap {FK_MC_SIZE_CAP}")
    if sweeps < MC_MIN_BATCHES:
        raise StatisticsError(f"need at least {MC_MIN_BATCHES} measurement sweeps")
    verts, edges = inst.graph()
    p = inst.bond_probability
    q = inst.q
    vindex = {v: i for i, v in enumerate(verts)}
    nv = len(verts)
    m = len(edges)
    eidx = np.array([[vindex[a], vindex[b]] for a, b in edges], dtype=np.int64)
    # adjacency: per vertex, the (edge, other-vertex) pairs
    adj: list[list[tuple[int, int]]] = [[] for _ in range(nv)]
    for i, (a, b) in enumerate(eidx):
        adj[a].append((i, b))
        adj[b].append((i, a))
    open_ = np.zeros(m, dtype=bool)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed & (2**63 - 1)])))
    p_free = p
    p_bound = p / (p + q * (1.0 - p))
    li, ri = vindex["L"], vindex["R"]

    seen = np.zeros(nv, dtype=np.int64)
    stamp = 0
    stack = np.empty(nv, dtype=np.int64)

    def connected(src: int, dst: int, skip_edge: int) -> bool:
        nonlocal stamp
        stamp += 1
        top = 0
        stack[top] = src
        top += 1
        seen[src] = stamp
        while top:
            top -= 1
            u = stack[top]
            if u == dst:
                return True
            for ei, other in adj[u]:
                if ei != skip_edge and open_[ei] and seen[other] != stamp:
                    seen[other] = stamp
                    stack[top] = other
                    top += 1
        return False

    def sweep(uniforms):
        for i in range(m):
            a, b = eidx[i]
            prob = p_free if connected(a, b, i) else p_bound
            open_[i] = uniforms[i] < prob

    for _ in range(burn_in):
        sweep(rng.random(m))
    vals = np.empty(sweeps)
    for s in range(sweeps):
        sweep(rng.random(m))
        vals[s] = 1.0 if connected(li, ri, -1) else 0.0
    nb = MC_MIN_BATCHES
    bs = sweeps // nb
    if bs == 0:
        raise StatisticsError("not enough sweeps for 50 batch means")
    batches = vals[: nb * bs].reshape(nb, bs).mean(axis=1)
    mean = float(vals.mean())
    se = float(batches.std(ddof=1) / math.sqrt(nb))
    return McEstimate(mean=mean, std_error=se, n=sweeps, seed=seed)


# ---------------------------------------------------------------------------
# loop models on the staircase square
# ---------------------------------------------------------------------------

class Tileset(enum.Enum):
    FULLY_PACKED = "fully_packed"
    DILUTE = "dilute"


BOUNDARY_CONVENTION = (
    "staircase-square diamond |u|+|v|<=n-1; marked strand ends at the rotation "
    "orbit one stub past the four extremal cells (clockwise); free stubs "
    "adjacent-paired; wired arcs join adjacent marked ends across the NE and "
    "SW staircase sides"
)

# dilute tileset: stub sets and internal connections per tile
_TILES = {
    "empty": (),
    "NE": (("N", "E"),),
    "NW": (("N", "W"),),
    "SW": (("S", "W"),),
    "SE": (("S", "E"),),
    "D0": (("N", "E"), ("S", "W")),
    "D1": (("N", "W"), ("S", "E")),
}
_STUBS = {k: frozenset(x for pair in v for x in pair) for k, v in _TILES.items()}
_ARCS = {k: len(v) for k, v in _TILES.items()}
_FP_TILES = ("D0", "D1")
_STEP = {"N": (0, 1), "E": (1, 0), "S": (0, -1), "W": (-1, 0)}
_DIRS = ("N", "E", "S", "W")


@dataclass(frozen=True)
class FplInstance:
    """Loop-model instance on the staircase square of side n."""

    n: int
    tileset: Tileset
    loop_weight: float
    length_weight: float = 1.0

    def __post_init__(self):
        if self.n < 1:
            raise DomainError("n must be at least 1")
        if self.loop_weight <= 0.0:
            raise DomainError("the loop weight must be positive")
        if self.length_weight <= 0.0:
            raise DomainError("the length weight must be positive")
        if len(cells_of(self.n)) > FPL_CELL_CAP:
            raise ResourceError(
                f"side {self.n} has {len(cells_of(self.n))} cells; enumeration cap is "
                f"{FPL_CELL_CAP}")


def cells_of(n: int) -> list[tuple[int, int]]:
    r = n - 1
    return [(u, v) for v in range(r, -r - 1, -1) for u in range(-r, r + 1)
            if abs(u) + abs(v) <= r]


def _slot(u: int, v: int, d: str):
    if d == "N":
        return ("H", u, v)
    if d == "S":
        return ("H", u, v - 1)
    if d == "W":
        return ("V", u, v)
    return ("V", u + 1, v)


def boundary_cycle(n: int) -> list[tuple]:
    """Clockwise cycle of the boundary stubs, starting at the top cell's N."""
    cset = set(cells_of(n))
    out: list[tuple] = []
    seen = set()
    cur = (0, n - 1)
    d_i = 0
    while True:
        u, v = cur
        d = _DIRS[d_i % 4]
        du, dv = _STEP[d]
        if (u + du, v + dv) in cset:
            cur = (u + du, v + dv)
            d_i -= 1
        else:
            s = _slot(u, v, d)
            if s in seen:
                break
            out.append(s)
            seen.add(s)
            d_i += 1
    return out


def wiring_of(n: int) -> tuple[list[tuple], tuple, tuple, list[tuple]]:
    """(closure pairs, wired arc 1, wired arc 2, marked end slots)."""
    cyc = boundary_cycle(n)
    per = len(cyc)
    if per % 4:
        raise DomainError("staircase perimeter must be divisible by 4")
    quarter = per // 4
    dpos = [(1 + t * quarter) % per for t in range(4)]
    dset = set(dpos)
    closures: list[tuple] = []
    run: list[int] = []
    order = [(dpos[0] + t) % per for t in range(per)]
    for pos in order:
        if pos in dset:
            closures += [(cyc[run[2 * i]], cyc[run[2 * i + 1]]) for i in range(len(run) // 2)]
            run = []
        else:
            run.append(pos)
    closures += [(cyc[run[2 * i]], cyc[run[2 * i + 1]]) for i in range(len(run) // 2)]
    wired1 = (cyc[dpos[0]], cyc[dpos[1]])
    wired2 = (cyc[dpos[2]], cyc[dpos[3]])
    marked = [cyc[p] for p in dpos]
    return closures, wired1, wired2, marked


def _trace(n: int, assignment: dict, closures, wired1, wired2,
           fully_packed: bool) -> tuple[int, bool]:
    """(loop count, hooked) for one admissible tile assignment."""
    uf = UnionFind()
    occupied = set()
    for (u, v), t in assignment.items():
        for a, b in _TILES[t]:
            sa, sb = _slot(u, v, a), _slot(u, v, b)
            uf.add(sa)
            uf.add(sb)
            uf.union(sa, sb)
            occupied.add(sa)
            occupied.add(sb)
    pairs = list(closures) if fully_packed else []
    pairs += [wired1, wired2]
    for a, b in pairs:
        uf.add(a)
        uf.add(b)
        uf.union(a, b)
        occupied.add(a)
        occupied.add(b)
    roots = {uf.find(s) for s in occupied}
    hooked = uf.find(wired1[0]) == uf.find(wired2[0])
    return len(roots), hooked


def _enumerate(inst: FplInstance):
    """Yield (assignment, loops, hooked, arc_count) over admissible configs."""
    n = inst.n
    cells = cells_of(n)
    cset = set(cells)
    closures, wired1, wired2, marked = wiring_of(n)
    fully = inst.tileset is Tileset.FULLY_PACKED
    mset = set(marked)
    tiles = _FP_TILES if fully else tuple(_TILES)

    def boundary_required(u, v, d):
        if fully:
            return True
        return _slot(u, v, d) in mset

    assignment: dict = {}

    def rec(idx: int):
        if idx == len(cells):
            loops, hooked = _trace(n, assignment, closures, wired1, wired2, fully)
            arcs = sum(_ARCS[t] for t in assignment.values())
            yield dict(assignment), loops, hooked, arcs
            return
        u, v = cells[idx]
        need = {}
        for d in _DIRS:
            du, dv = _STEP[d]
            nb = (u + du, v + dv)
            if nb not in cset:
                need[d] = boundary_required(u, v, d)
            elif nb in assignment:
                opp = {"N": "S", "S": "N", "E": "W", "W": "E"}[d]
                need[d] = opp in _STUBS[assignment[nb]]
        for t in tiles:
            st = _STUBS[t]
            if any((d in st) != want for d, want in need.items()):
                continue
            assignment[(u, v)] = t
            yield from rec(idx + 1)
            del assignment[(u, v)]

    yield from rec(0)


def fpl_enumerate_hookup(inst: FplInstance) -> ExactResult:
    """Exact probability that the two wired arcs lie on one loop, by exhaustive
    enumeration with weight N^loops (times mu^length for the dilute tileset)."""
    N = inst.loop_weight
    mu = inst.length_weight
    num_terms: list[float] = []
    den_terms: list[float] = []
    found = False
    for _, loops, hooked, arcs in _enumerate(inst):
        found = True
        w = N**loops * (mu**arcs if inst.tileset is Tileset.DILUTE else 1.0)
        den_terms.append(w)
        if hooked:
            num_terms.append(w)
    if not found:
        raise DomainError("no admissible configurations under the boundary convention")
    num = math.fsum(num_terms)
    den = math.fsum(den_terms)
    return ExactResult(numerator_weight=num, denominator_weight=den, probability=num / den)


def _rotate_assignment(n: int, assignment: dict) -> dict:
    """Rotate the picture clockwise: cells (u,v) -> (v,-u), tiles follow."""
    rot_tile = {"empty": "empty", "NE": "SE", "SE": "SW", "SW": "NW", "NW": "NE",
                "D0": "D1", "D1": "D0"}
    return {(v, -u): rot_tile[t] for (u, v), t in assignment.items()}


def fpl_rotation_check(inst: FplInstance) -> bool:
    """True iff rotating every configuration by 90 degrees (boundary fixed)
    maps hooked onto unhooked configurations with exactly one more loop, and
    unhooked onto hooked with one fewer."""
    if inst.tileset is not Tileset.FULLY_PACKED:
        raise DomainError("the rotation check applies to the fully packed tileset")
    n = inst.n
    closures, wired1, wired2, _ = wiring_of(n)
    table: dict[tuple, tuple[int, bool]] = {}
    configs = []
    for assignment, loops, hooked, _arcs in _enumerate(inst):
        key = tuple(sorted(assignment.items()))
        table[key] = (loops, hooked)
        configs.append((assignment, loops, hooked))
    for assignment, loops, hooked in configs:
        rot = _rotate_assignment(n, assignment)
        rkey = tuple(sorted(rot.items()))
        if rkey not in table:
            return False
        rl, rh = table[rkey]
        if hooked and not (not rh and rl == loops + 1):
            return False
        if not hooked and not (rh and rl == loops - 1):
            return False
    return True
