"""Domain descriptions and structured meshes.

Every mesh is a masked tensor grid with spacing ``h`` per axis. Integrals use
nodal weights (trapezoid on boxes, lumped P1 on the triangle's cut cells), and
the Dirichlet energy is assembled over grid edges, which equals the P1 finite
element energy on the right-angled triangulation of the grid.
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp
import shapely
from shapely.geometry import LinearRing, Point, Polygon

KINDS = ("rectangle", "hypercube", "right_isosceles_triangle", "polygon", "ball")
MAX_NODES = 4_000_000


@dataclass(frozen=True)
class DomainSpec:
    kind: str
    dim: int = 2
    b: float | None = None
    vertices: tuple[tuple[float, float], ...] | None = None
    radius: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown domain kind {self.kind!r}; expected one of {KINDS}")
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if self.kind == "rectangle":
            if self.b is None or not self.b > 0:
                raise ValueError("rectangle needs aspect b > 0")
            if self.dim != 2:
                raise ValueError("rectangle is planar")
        elif self.kind == "right_isosceles_triangle" and self.dim != 2:
            raise ValueError("triangle is planar")
        elif self.kind == "polygon":
            _check_polygon(self)
        elif self.kind == "ball" and (self.radius is None or not self.radius > 0):
            raise ValueError("ball needs radius > 0")

    @property
    def lengths(self) -> tuple[float, ...]:
        """Side lengths of the bounding box (the domain itself for boxes)."""
        if self.kind == "rectangle":
            return (1.0 / self.b, self.b)
        if self.kind in ("hypercube", "right_isosceles_triangle"):
            return (1.0,) * self.dim
        if self.kind == "ball":
            return (2.0 * self.radius,) * self.dim
        xs, ys = zip(*self.vertices)
        return (max(xs) - min(xs), max(ys) - min(ys))

    @property
    def origin(self) -> tuple[float, ...]:
        if self.kind == "polygon":
            xs, ys = zip(*self.vertices)
            return (min(xs), min(ys))
        if self.kind == "ball":
            return (-self.radius,) * self.dim
        return (0.0,) * self.dim

    def volume(self) -> float:
        if self.kind == "rectangle":
            return 1.0
        if self.kind == "hypercube":
            return 1.0
        if self.kind == "right_isosceles_triangle":
            return 0.5
        if self.kind == "ball":
            d = self.dim
            return math.pi ** (d / 2) / math.gamma(d / 2 + 1) * self.radius**d
        return Polygon(self.vertices).area

    def polygon_vertices(self) -> tuple[tuple[float, float], ...]:
        """Counterclockwise vertices of a planar polygonal domain."""
        if self.kind == "polygon":
            return self.vertices
        if self.kind == "rectangle":
            a, c = self.lengths
            return ((0.0, 0.0), (a, 0.0), (a, c), (0.0, c))
        if self.kind == "hypercube" and self.dim == 2:
            return ((0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0))
        if self.kind == "right_isosceles_triangle":
            return ((0.0, 0.0), (1.0, 0.0), (0.0, 1.0))
        raise ValueError(f"{self.kind} (dim={self.dim}) is not a planar polygon")


def _check_polygon(spec: DomainSpec) -> None:
    if spec.dim != 2:
        raise ValueError("polygon is planar")
    v = spec.vertices
    if v is None or len(v) < 3:
        raise ValueError("polygon needs at least 3 vertices")
    if not LinearRing(v).is_simple:
        raise ValueError("polygon boundary self-intersects")


def rectangle(b: float) -> DomainSpec:
    """[0, 1/b] x [0, b], area 1."""
    return DomainSpec("rectangle", 2, b=float(b))


def hypercube(dim: int) -> DomainSpec:
    return DomainSpec("hypercube", dim)


def right_isosceles_triangle() -> DomainSpec:
    """Legs of length 1 along the axes, right angle at the origin.

    The symmetry axis is the diagonal x1 = x2, so the reflection is a plain
    coordinate swap.
    """
    return DomainSpec("right_isosceles_triangle", 2)


def polygon(vertices: Sequence[Sequence[float]]) -> DomainSpec:
    pts = tuple((float(x), float(y)) for x, y in vertices)
    if len(pts) >= 3 and Polygon(pts).exterior.is_ccw is False:
        pts = tuple(reversed(pts))
    return DomainSpec("polygon", 2, vertices=pts)


def regular_polygon(k: int, radius: float = 1.0) -> DomainSpec:
    t = 2 * math.pi * np.arange(k) / k
    return polygon(np.column_stack([radius * np.cos(t), radius * np.sin(t)]))


def ball(dim: int, radius: float = 1.0) -> DomainSpec:
    return DomainSpec("ball", dim, radius=float(radius))


def parse_domain(text: str) -> tuple[DomainSpec, dict]:
    """Parse ``key = value`` lines into a DomainSpec and the leftover keys.

    Polygon vertices are written ``vertices = x0 y0; x1 y1; ...``.
    """
    kv = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"expected key=value, got {raw!r}")
        k, v = (s.strip() for s in line.split("=", 1))
        kv[k] = v
    return domain_from_mapping(kv), {k: v for k, v in kv.items()
                                     if k not in ("kind", "b", "dim", "vertices", "radius")}


def domain_from_mapping(kv: dict) -> DomainSpec:
    kind = kv.get("kind")
    if kind is None:
        raise ValueError("missing kind")
    kind = {"triangle": "right_isosceles_triangle", "square": "hypercube",
            "cube": "hypercube"}.get(kind, kind)
    if kind == "rectangle":
        return rectangle(float(kv["b"]))
    if kind == "hypercube":
        return hypercube(int(kv.get("dim", 2)))
    if kind == "right_isosceles_triangle":
        return right_isosceles_triangle()
    if kind == "polygon":
        verts = [tuple(float(t) for t in pt.split()) for pt in str(kv["vertices"]).split(";")
                 if pt.strip()]
        return polygon(verts)
    if kind == "ball":
        return ball(int(kv.get("dim", 2)), float(kv.get("radius", 1.0)))
    raise ValueError(f"unknown domain kind {kind!r}")


def corner_angles(spec: DomainSpec) -> list[float]:
    """Interior angles at the corners of a planar domain; [] for a disk."""
    if spec.dim != 2:
        raise ValueError("corner angles are defined for planar domains only")
    if spec.kind == "ball":
        return []
    v = np.asarray(spec.polygon_vertices(), dtype=float)
    prev = np.roll(v, 1, axis=0) - v
    nxt = np.roll(v, -1, axis=0) - v
    # angle swept counterclockwise from the outgoing to the incoming edge
    ang = np.arctan2(prev[:, 1], prev[:, 0]) - np.arctan2(nxt[:, 1], nxt[:, 0])
    ang = np.mod(ang, 2 * math.pi)
    ang[ang == 0] = 2 * math.pi
    return [float(a) for a in ang]


# -- meshes ---------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Mesh:
    """Piecewise-linear finite element space on a structured simplicial grid.

    Grid cells are cut into simplices (Kuhn's subdivision with the first axis
    reversed, i.e. squares split along their anti-diagonal), clipped to the
    domain where needed. Every integral is taken of the piecewise-linear
    interpolant: ``qp_matrix`` maps nodal values to quadrature-point values and
    ``qp_weights`` are the matching weights, so ∫F(u) ≈ Σ_g W_g F((B u)_g) is
    exact for polynomial F up to the rule's degree. ``weights`` are the exact
    integrals of the nodal basis functions and ``stiffness`` is the exact
    Dirichlet form, ∫|∇u|² = uᵀ S u.
    """

    spec: DomainSpec
    h: tuple[float, ...]
    shape: tuple[int, ...]
    index: np.ndarray  # grid multi-index of each node, (N, d) ints
    nodes: np.ndarray
    weights: np.ndarray
    interior_mask: np.ndarray
    stiffness: sp.csr_matrix = field(repr=False)
    qp_matrix: sp.csr_matrix = field(repr=False)
    qp_weights: np.ndarray = field(repr=False)

    @property
    def size(self) -> int:
        return self.nodes.shape[0]

    @property
    def dim(self) -> int:
        return self.nodes.shape[1]

    @functools.cached_property
    def mass(self) -> sp.csr_matrix:
        """Consistent mass matrix, ∫u² = uᵀ M u."""
        B = self.qp_matrix
        return (B.T @ sp.diags(self.qp_weights) @ B).tocsr()

    def integrate(self, values: np.ndarray) -> float:
        """∫ of the interpolant of nodal ``values`` (exact)."""
        return float(np.dot(self.weights, values))

    def integrate_fn(self, fn, values: np.ndarray) -> float:
        """∫ fn(u) with u the interpolant of nodal ``values``."""
        return float(np.dot(self.qp_weights, fn(self.qp_matrix @ values)))

    def reflection(self) -> np.ndarray:
        """Permutation realising the swap (x1, x2) -> (x2, x1) on the triangle mesh."""
        if self.spec.kind != "right_isosceles_triangle":
            raise ValueError("diagonal reflection is only defined on the triangle mesh")
        lookup = {tuple(ix): k for k, ix in enumerate(self.index.tolist())}
        perm = np.array([lookup.get((j, i), -1) for i, j in self.index.tolist()])
        if np.any(perm < 0) or not np.array_equal(self.nodes[perm], self.nodes[:, ::-1]):
            raise ValueError("mesh is not closed under the diagonal reflection")
        return perm


def _cells_for(length: float, n: int) -> int:
    return max(int(math.ceil(length * n - 1e-9)), 3)


def build_mesh(spec: DomainSpec, n: int, max_nodes: int = MAX_NODES) -> Mesh:
    """Structured mesh with about ``n`` cells per unit length on every axis."""
    if n < 4:
        raise ValueError(f"need n >= 4 nodes per unit length, got {n}")
    if spec.kind == "ball":
        raise ValueError("curved domains are not meshed; use a polygonal approximation")
    lengths = spec.lengths
    if spec.kind == "right_isosceles_triangle":
        cells = (n, n)
    else:
        cells = tuple(_cells_for(L, n) for L in lengths)
    shape = tuple(c + 1 for c in cells)
    if math.prod(shape) > max_nodes:
        raise MemoryError(f"mesh with {math.prod(shape)} grid nodes exceeds cap {max_nodes}")
    h = tuple(L / c for L, c in zip(lengths, cells))
    d = len(shape)

    full_idx = np.indices(shape).reshape(d, -1).T
    if spec.kind == "right_isosceles_triangle":
        # from integers so the reflected node compares bitwise
        coords = full_idx / float(n)
    else:
        org = spec.origin
        coords = np.column_stack([org[a] + full_idx[:, a] * (lengths[a] / cells[a])
                                  for a in range(d)])

    simp = _kuhn_simplices(shape)
    lam, omega = reference_rule(d)
    if spec.kind == "right_isosceles_triangle":
        simp = simp[np.all(full_idx[simp].sum(axis=2) <= n, axis=1)]
    pieces = None
    if spec.kind == "polygon":
        simp, pieces = _clip_to_polygon(spec, simp, coords)

    verts = coords[simp]  # (T, d+1, d)
    edges = verts[:, 1:, :] - verts[:, :1, :]
    vol = np.abs(np.linalg.det(edges)) / math.factorial(d)
    grads = np.linalg.inv(edges)  # rows of inv(E)ᵀ are ∇λ_1..∇λ_d, stored transposed
    grads = np.transpose(grads, (0, 2, 1))
    grads = np.concatenate([-grads.sum(axis=1, keepdims=True), grads], axis=1)

    used, local = np.unique(simp, return_inverse=True)
    local = local.reshape(simp.shape)
    N = used.size

    T, k = simp.shape
    nq = lam.shape[0]
    rows = [np.repeat(np.arange(T * nq), k)]
    cols = [np.repeat(local, nq, axis=0).ravel()]
    data = [np.tile(lam, (T, 1)).ravel()]
    qw = [np.repeat(vol, nq) * np.tile(omega, T)]
    area = vol
    if pieces is not None:
        keep_full, part = pieces
        area = vol.copy()
        # partially covered simplices: drop their standard points, add clipped ones
        qmask = np.repeat(keep_full, nq)
        rows = [np.repeat(np.arange(int(qmask.sum())), k)]
        cols = [np.repeat(local[keep_full], nq, axis=0).ravel()]
        data = [np.tile(lam, (int(keep_full.sum()), 1)).ravel()]
        qw = [qw[0][qmask]]
        start = int(qmask.sum())
        for t, (bary, wts) in part.items():
            area[t] = wts.sum()
            m = bary.shape[0]
            rows.append(np.repeat(np.arange(start, start + m), k))
            cols.append(np.tile(local[t], m))
            data.append(bary.ravel())
            qw.append(wts)
            start += m
    nrows = sum(int(w.size) for w in qw)
    B = sp.csr_matrix((np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(nrows, N))
    Wq = np.concatenate(qw)

    K = area[:, None, None] * np.einsum("tid,tjd->tij", grads, grads)
    S = sp.coo_matrix((K.ravel(), (np.repeat(local, k, axis=1).ravel(),
                                   np.tile(local, (1, k)).ravel())), shape=(N, N)).tocsr()
    S.sum_duplicates()
    weights = np.asarray(B.T @ Wq).ravel()

    idx = full_idx[used]
    present = np.zeros(shape, dtype=bool)
    present[tuple(idx.T)] = True
    interior = _interior_grid(present)[tuple(idx.T)]
    return Mesh(spec, h, shape, idx, coords[used], weights, interior, S, B, Wq)


def _kuhn_simplices(shape: tuple[int, ...]) -> np.ndarray:
    """d! simplices per cell as flat grid indices, first axis walked backwards."""
    d = len(shape)
    cells = np.indices([m - 1 for m in shape]).reshape(d, -1).T
    out = []
    for perm in itertools.permutations(range(d)):
        v = cells.copy()
        v[:, 0] += 1
        chain = [v.copy()]
        for a in perm:
            v[:, a] += -1 if a == 0 else 1
            chain.append(v.copy())
        out.append(np.stack([np.ravel_multi_index(tuple(c.T), shape) for c in chain], axis=1))
    return np.concatenate(out, axis=0)


_A1 = (6.0 - math.sqrt(15.0)) / 21.0
_A2 = (6.0 + math.sqrt(15.0)) / 21.0
_W1 = (155.0 - math.sqrt(15.0)) / 1200.0
_W2 = (155.0 + math.sqrt(15.0)) / 1200.0


def reference_rule(dim: int) -> tuple[np.ndarray, np.ndarray]:
    """Barycentric points and weights (summing to 1) on the reference simplex.

    dim 1: 5-point Gauss (degree 9); dim 2: symmetric 7-point rule (degree 5);
    higher: conical Gauss product, exact to degree 5.
    """
    if dim == 1:
        x, w = np.polynomial.legendre.leggauss(5)
        t = 0.5 * (x + 1.0)
        return np.column_stack([1.0 - t, t]), 0.5 * w
    if dim == 2:
        pts = [(1 / 3, 1 / 3, 1 / 3)]
        wts = [9.0 / 40.0]
        for a, w in ((_A1, _W1), (_A2, _W2)):
            c = 1.0 - 2.0 * a
            pts += [(c, a, a), (a, c, a), (a, a, c)]
            wts += [w] * 3
        return np.array(pts), np.array(wts)
    m = (dim + 6) // 2  # 2m - 1 >= 5 + (dim - 1): the first direction carries the Jacobian
    x, w = np.polynomial.legendre.leggauss(m)
    t, wt = 0.5 * (x + 1.0), 0.5 * w
    grid = np.array(list(itertools.product(range(m), repeat=dim)))
    pts = np.zeros((grid.shape[0], dim))
    rest = np.ones(grid.shape[0])
    jac = np.ones(grid.shape[0])
    for a in range(dim):
        ta = t[grid[:, a]]
        pts[:, a] = rest * ta
        # collapsed-coordinate Jacobian picks up (1 - t_a)^(d-1-a)
        jac *= (1.0 - ta) ** (dim - 1 - a)
        rest = rest * (1.0 - ta)
    wts = np.prod(wt[grid], axis=1) * jac
    wts /= wts.sum()
    bary = np.column_stack([1.0 - pts.sum(axis=1), pts])
    return bary, wts


def _clip_to_polygon(spec: DomainSpec, simp: np.ndarray, coords: np.ndarray):
    """Keep triangles meeting the polygon; re-quadrature the partially covered ones."""
    poly = Polygon(spec.vertices)
    tris = shapely.polygons(coords[simp])
    inter = shapely.intersection(tris, poly)
    a_in = shapely.area(inter)
    a_tri = shapely.area(tris)
    hit = a_in > 1e-14 * a_tri
    simp, inter, a_in, a_tri = simp[hit], inter[hit], a_in[hit], a_tri[hit]
    full = np.abs(a_in - a_tri) <= 1e-12 * a_tri
    lam, omega = reference_rule(2)
    part = {}
    for t in np.nonzero(~full)[0]:
        P = coords[simp[t]]
        E = (P[1:] - P[0]).T
        Einv = np.linalg.inv(E)
        bary, wts = [], []
        for sub in shapely.get_parts(shapely.constrained_delaunay_triangles(inter[t])):
            Q = np.asarray(sub.exterior.coords)[:3]
            area = abs(np.linalg.det(np.array([Q[1] - Q[0], Q[2] - Q[0]]))) / 2
            x = lam @ Q
            l12 = (Einv @ (x - P[0]).T).T
            bary.append(np.column_stack([1.0 - l12.sum(axis=1), l12]))
            wts.append(area * omega)
        part[t] = (np.concatenate(bary), np.concatenate(wts))
    return simp, (full, part)


def _interior_grid(mask: np.ndarray) -> np.ndarray:
    inner = mask.copy()
    for a in range(mask.ndim):
        pad = np.pad(mask, [(1, 1) if b == a else (0, 0) for b in range(mask.ndim)])
        inner &= np.take(pad, range(0, mask.shape[a]), axis=a)
        inner &= np.take(pad, range(2, mask.shape[a] + 2), axis=a)
    return inner


def distance_to_boundary(spec: DomainSpec, points: np.ndarray) -> np.ndarray:
    """Euclidean distance from each point (assumed inside) to ∂Ω."""
    pts = np.atleast_2d(points)
    if spec.kind in ("rectangle", "hypercube"):
        L = np.asarray(spec.lengths)
        return np.min(np.minimum(pts, L - pts), axis=1)
    if spec.kind == "ball":
        return spec.radius - np.linalg.norm(pts, axis=1)
    if spec.kind == "right_isosceles_triangle":
        return np.min(np.column_stack([pts[:, 0], pts[:, 1],
                                       (1.0 - pts[:, 0] - pts[:, 1]) / math.sqrt(2)]), axis=1)
    ring = Polygon(spec.vertices).exterior
    return np.array([ring.distance(Point(p)) for p in pts])


def diameter(spec: DomainSpec) -> float:
    if spec.kind == "ball":
        return 2 * spec.radius
    if spec.kind in ("rectangle", "hypercube"):
        return float(np.linalg.norm(spec.lengths))
    v = np.asarray(spec.polygon_vertices())
    return float(max(np.linalg.norm(p - q) for p in v for q in v))
