"""Points, signed volumes and oriented triangulations.

A :class:`Triangulation` stores every simplex as an *ordered* tuple of vertex
indices.  The order is meaningful: slot 0 is the base point handed to a
cochain, and the parity of the order fixes the simplex orientation.

Periodic (torus) charts keep vertices inside the fundamental box and carry an
integer lattice offset per simplex vertex, so that the unwrapped coordinates
``vertices[s] + offsets[s] * periods`` describe a genuine affine simplex even
on coarse grids where minimal-image displacements are ambiguous.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

__all__ = [
    "MeshError",
    "TangentVector",
    "as_point",
    "minimal_image",
    "signed_parallelepiped_volume",
    "simplex_volume",
    "Triangulation",
    "AuditReport",
    "SubdivisionScheme",
    "orientation_audit",
    "subdivide",
    "interval_partition",
    "unit_square_grid",
    "unit_cube_grid",
    "flat_torus_grid",
    "icosphere",
    "save_mesh",
    "load_mesh",
    "permutation_parity",
]

AUDIT_TOL = 1e-9


class MeshError(ValueError):
    """Invalid mesh input or a failed structural precondition."""


def as_point(x, dim: int | None = None) -> np.ndarray:
    """Return ``x`` as a finite 1-D float array, optionally checking its length."""
    p = np.asarray(x, dtype=float)
    if p.ndim == 0:
        p = p.reshape(1)
    if p.ndim != 1 or p.size == 0:
        raise MeshError(f"a point must be a non-empty coordinate vector, got shape {p.shape}")
    if not np.all(np.isfinite(p)):
        raise MeshError("point coordinates must be finite")
    if dim is not None and p.size != dim:
        raise MeshError(f"expected a point of dimension {dim}, got {p.size}")
    return p


@dataclass(frozen=True)
class TangentVector:
    """A tangent vector ``components`` attached at ``base``."""

    base: np.ndarray
    components: np.ndarray

    def __post_init__(self):
        base = as_point(self.base)
        comps = np.asarray(self.components, dtype=float).reshape(-1)
        if comps.size != base.size:
            raise MeshError("tangent vector dimension does not match its base point")
        if not np.all(np.isfinite(comps)):
            raise MeshError("tangent vector components must be finite")
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "components", comps)

    @property
    def dim(self) -> int:
        return self.base.size


def minimal_image(d, periods) -> np.ndarray:
    """Reduce displacements ``d`` (last axis = coordinates) to ``[-P/2, P/2)``.

    Axes whose period is ``None`` or non-positive are left untouched.  Exact
    half-period ties resolve to ``-P/2``.
    """
    d = np.array(d, dtype=float, copy=True)
    if periods is None:
        return d
    for axis, per in enumerate(periods):
        if per is None or per <= 0:
            continue
        d[..., axis] -= per * np.floor(d[..., axis] / per + 0.5)
    return d


def _volume_inputs(base, targets, axes):
    base = as_point(base)
    targets = [as_point(t) for t in targets]
    for t in targets:
        if t.size != base.size:
            raise MeshError("all points must share the same dimension")
    axes = list(range(len(targets))) if axes is None else [int(a) for a in axes]
    if len(axes) != len(targets):
        raise MeshError(f"need one axis per target: {len(targets)} targets, {len(axes)} axes")
    if len(set(axes)) != len(axes):
        raise MeshError(f"repeated axis in {axes}")
    for a in axes:
        if not 0 <= a < base.size:
            raise MeshError(f"axis {a} out of range for dimension {base.size}")
    return base, targets, axes


def signed_parallelepiped_volume(base, targets, axes=None, periods=None) -> float:
    """Determinant of the displacement vectors ``targets[k] - base`` on ``axes``.

    The k-th column of the matrix is ``(targets[k] - base)[axes]``.  With
    ``periods`` the displacements are first reduced by :func:`minimal_image`.
    """
    base, targets, axes = _volume_inputs(base, targets, axes)
    if not targets:
        return 1.0
    disp = minimal_image(np.stack(targets) - base, periods)
    mat = disp[:, axes].T
    return float(np.linalg.det(mat))


def simplex_volume(base, targets, axes=None, periods=None) -> float:
    """Signed volume of the simplex ``(base, *targets)``: the determinant over ``n!``."""
    n = len(targets)
    return signed_parallelepiped_volume(base, targets, axes, periods) / math.factorial(n)


def permutation_parity(perm) -> int:
    """Return +1 for even and -1 for odd permutations of ``0..len(perm)-1``."""
    perm = list(perm)
    sign = 1
    seen = [False] * len(perm)
    for start in range(len(perm)):
        if seen[start]:
            continue
        length = 0
        j = start
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


def _row_parity(order: np.ndarray) -> np.ndarray:
    """Parity of each row of an ``(S, r)`` array of permutations (small r)."""
    r = order.shape[1]
    inv = np.zeros(order.shape[0], dtype=np.int64)
    for i in range(r):
        for j in range(i + 1, r):
            inv += order[:, i] > order[:, j]
    return np.where(inv % 2 == 0, 1, -1)


@dataclass(frozen=True, eq=False)
class Triangulation:
    """Ordered-vertex simplicial mesh.

    Parameters
    ----------
    vertices : array_like, shape (V, m)
        Chart coordinates of the vertices.
    simplices : array_like, shape (S, n + 1)
        Vertex indices of each simplex, in the chosen order.
    periods : sequence of float or None, optional
        Per-axis period for torus charts; ``None`` entries mark open axes.
    offsets : array_like, shape (S, n + 1, m), optional
        Integer lattice offsets for periodic meshes.  Derived from
        minimal-image displacements relative to slot 0 when omitted.
    name : str
        Human readable label.
    """

    vertices: np.ndarray
    simplices: np.ndarray
    periods: tuple | None = None
    offsets: np.ndarray | None = None
    name: str = ""
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        verts = np.array(self.vertices, dtype=float)
        if verts.ndim == 1:
            verts = verts.reshape(-1, 1)
        simp = np.array(self.simplices, dtype=np.int64)
        if verts.ndim != 2 or verts.shape[0] == 0:
            raise MeshError("vertices must be a non-empty (V, m) array")
        if simp.ndim != 2 or simp.shape[0] == 0:
            raise MeshError("simplices must be a non-empty (S, n+1) array")
        if not np.all(np.isfinite(verts)):
            raise MeshError("vertex coordinates must be finite")
        n = simp.shape[1] - 1
        m = verts.shape[1]
        if n < 1:
            raise MeshError("simplices must have at least two vertices")
        if n > m:
            raise MeshError(f"simplex dimension {n} exceeds ambient dimension {m}")
        if simp.min() < 0 or simp.max() >= verts.shape[0]:
            raise MeshError("simplex vertex index out of range")
        srt = np.sort(simp, axis=1)
        if np.any(srt[:, 1:] == srt[:, :-1]):
            raise MeshError("a simplex repeats a vertex index")

        periods = self.periods
        if periods is not None:
            periods = tuple(None if p is None else float(p) for p in periods)
            if len(periods) != m:
                raise MeshError("periods must have one entry per ambient axis")
            if all(p is None for p in periods):
                periods = None
            elif any(p is not None and not p > 0 for p in periods):
                raise MeshError("periods must be positive")
        offsets = self.offsets
        if offsets is not None:
            offsets = np.array(offsets, dtype=np.int64)
            if offsets.shape != simp.shape + (m,):
                raise MeshError(f"offsets must have shape {simp.shape + (m,)}")
            if periods is None:
                raise MeshError("offsets require periods")
        elif periods is not None:
            per = np.array([0.0 if p is None else p for p in periods])
            pts = verts[simp]
            disp = minimal_image(pts - pts[:, :1, :], periods)
            unwrapped = pts[:, :1, :] + disp
            with np.errstate(divide="ignore", invalid="ignore"):
                off = np.where(per > 0, np.rint((unwrapped - pts) / np.where(per > 0, per, 1.0)), 0)
            offsets = off.astype(np.int64)

        verts.setflags(write=False)
        simp.setflags(write=False)
        if offsets is not None:
            offsets.setflags(write=False)
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "simplices", simp)
        object.__setattr__(self, "periods", periods)
        object.__setattr__(self, "offsets", offsets)

    @property
    def dim(self) -> int:
        return self.simplices.shape[1] - 1

    @property
    def ambient_dim(self) -> int:
        return self.vertices.shape[1]

    @property
    def n_simplices(self) -> int:
        return self.simplices.shape[0]

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    def _period_vector(self) -> np.ndarray:
        return np.array([0.0 if p is None else p for p in self.periods])

    def simplex_coords(self, index=None) -> np.ndarray:
        """Unwrapped vertex coordinates, shape ``(S, n + 1, m)`` (or a slice of it)."""
        simp = self.simplices if index is None else self.simplices[index]
        pts = self.vertices[simp]
        if self.offsets is not None:
            off = self.offsets if index is None else self.offsets[index]
            pts = pts + off * self._period_vector()
        return pts

    def signed_volumes(self) -> np.ndarray:
        """Signed simplex volumes (det / n!) for full-dimensional meshes."""
        if "volumes" not in self._cache:
            if self.dim != self.ambient_dim:
                raise MeshError("signed volumes need dim == ambient_dim")
            pts = self.simplex_coords()
            edges = pts[:, 1:, :] - pts[:, :1, :]
            vol = np.linalg.det(np.transpose(edges, (0, 2, 1))) / math.factorial(self.dim)
            self._cache["volumes"] = vol
        return self._cache["volumes"]

    def unsigned_volumes(self) -> np.ndarray:
        pts = self.simplex_coords()
        edges = pts[:, 1:, :] - pts[:, :1, :]
        gram = edges @ np.transpose(edges, (0, 2, 1))
        return np.sqrt(np.clip(np.linalg.det(gram), 0.0, None)) / math.factorial(self.dim)

    def diameters(self) -> np.ndarray:
        pts = self.simplex_coords()
        best = np.zeros(self.n_simplices)
        for i, j in itertools.combinations(range(self.dim + 1), 2):
            best = np.maximum(best, np.linalg.norm(pts[:, i] - pts[:, j], axis=1))
        return best

    @property
    def max_diameter(self) -> float:
        if "max_diameter" not in self._cache:
            self._cache["max_diameter"] = float(self.diameters().max())
        return self._cache["max_diameter"]

    @property
    def boundary_faces(self) -> list[tuple[int, ...]]:
        """Oriented boundary faces as vertex-index tuples (derived)."""
        return orientation_audit(self).boundary_faces

    def reorder(self, perm) -> "Triangulation":
        """Apply the slot permutation ``perm`` to every simplex."""
        perm = list(perm)
        if sorted(perm) != list(range(self.dim + 1)):
            raise MeshError(f"{perm} is not a permutation of the simplex slots")
        off = None if self.offsets is None else self.offsets[:, perm, :]
        return Triangulation(self.vertices, self.simplices[:, perm], self.periods, off, self.name)

    def subset(self, index) -> "Triangulation":
        off = None if self.offsets is None else self.offsets[index]
        return Triangulation(self.vertices, self.simplices[index], self.periods, off, self.name)


def _face_keys(T: Triangulation, cols) -> tuple[np.ndarray, np.ndarray]:
    """Canonical integer keys and orientation parities for the sub-face ``cols``.

    Keys are translation invariant on periodic meshes: offsets are taken
    relative to the lowest-index vertex of the face.
    """
    ids = T.simplices[:, cols]
    order = np.argsort(ids, axis=1, kind="stable")
    parity = _row_parity(order)
    sorted_ids = np.take_along_axis(ids, order, axis=1)
    parts = [sorted_ids]
    if T.offsets is not None:
        off = T.offsets[:, cols, :]
        off = np.take_along_axis(off, order[:, :, None], axis=1)
        off = off - off[:, :1, :]
        parts.append(off.reshape(off.shape[0], -1))
    return np.concatenate(parts, axis=1), parity


@dataclass
class AuditReport:
    """Outcome of :func:`orientation_audit`."""

    passed: bool
    interior_violations: list[tuple[int, ...]]
    boundary_faces: list[tuple[int, ...]]
    bad_simplices: list[int]
    messages: list[str]

    def __bool__(self) -> bool:
        return self.passed


def orientation_audit(T: Triangulation, tol: float = AUDIT_TOL) -> AuditReport:
    """Check that the ordered simplices form a relative cycle.

    Every codimension-one face is collected with its induced sign
    ``(-1)**i``.  Faces met once are boundary faces; faces met twice must
    cancel; anything else is reported.  Full-dimensional meshes must also have
    all simplex volumes positive (nondegenerate, relative to ``tol * diam**n``).
    """
    n = T.dim
    keys, signs, origin = [], [], []
    for i in range(n + 1):
        cols = [c for c in range(n + 1) if c != i]
        k, par = _face_keys(T, cols)
        keys.append(k)
        signs.append(par * (-1) ** i)
        origin.append(np.stack([np.arange(T.n_simplices), np.full(T.n_simplices, i)], axis=1))
    keys = np.concatenate(keys)
    signs = np.concatenate(signs)
    origin = np.concatenate(origin)
    uniq, first, inverse, counts = np.unique(
        keys, axis=0, return_index=True, return_inverse=True, return_counts=True
    )
    inverse = inverse.reshape(-1)
    total = np.bincount(inverse, weights=signs, minlength=len(uniq))

    def face_tuple(row):
        s, i = origin[row]
        return tuple(int(v) for v in np.delete(T.simplices[s], i))

    messages = []
    interior_bad = np.nonzero((counts >= 2) & ((counts > 2) | (total != 0)))[0]
    interior_violations = [face_tuple(first[u]) for u in interior_bad]
    if len(interior_violations):
        messages.append(f"{len(interior_violations)} interior face(s) do not cancel")
    boundary = [face_tuple(first[u]) for u in np.nonzero(counts == 1)[0]]

    diam = T.diameters()
    if T.dim == T.ambient_dim:
        vols = T.signed_volumes()
        bad = np.nonzero(vols <= tol * diam ** n)[0]
    else:
        vols = T.unsigned_volumes()
        bad = np.nonzero(vols <= tol * diam ** n)[0]
    bad_simplices = [int(b) for b in bad]
    if bad_simplices:
        messages.append(f"{len(bad_simplices)} simplex(es) degenerate or negatively oriented")
    passed = not interior_violations and not bad_simplices
    return AuditReport(passed, interior_violations, boundary, bad_simplices, messages)


class SubdivisionScheme(str, Enum):
    BARYCENTRIC = "barycentric"
    EDGEWISE = "edgewise"


def _barycentric_template(n: int) -> list[list[tuple[int, ...]]]:
    children = []
    for perm in itertools.permutations(range(n + 1)):
        child = [tuple(sorted(perm[: k + 1])) for k in range(n + 1)]
        if permutation_parity(perm) < 0:
            child[-1], child[-2] = child[-2], child[-1]
        children.append(child)
    return children


def _edgewise_template(n: int) -> list[list[tuple[int, ...]]]:
    # Kuhn simplices of the doubled ordered simplex 2 >= x1 >= ... >= xn >= 0.
    children = []
    for corner in itertools.product((0, 1), repeat=n):
        for perm in itertools.permutations(range(n)):
            path = [np.array(corner)]
            for axis in perm:
                step = path[-1].copy()
                step[axis] += 1
                path.append(step)
            if not all(
                np.all(x <= 2) and np.all(x >= 0) and np.all(np.diff(x) <= 0) for x in path
            ):
                continue
            child = []
            for x in path:
                a = int(np.sum(x == 2))
                b = int(np.sum(x >= 1))
                child.append(tuple(sorted({a, b})))
            if permutation_parity(perm) < 0:
                child[-1], child[-2] = child[-2], child[-1]
            children.append(child)
    return children


def subdivide(T: Triangulation, scheme=SubdivisionScheme.BARYCENTRIC, check: bool = True) -> Triangulation:
    """Linear subdivision of every simplex, preserving orientation.

    Barycentric subdivision produces ``(n+1)!`` children per simplex, edgewise
    (midpoint) subdivision ``2**n``.  Shared faces are refined identically, so
    the output is again a consistently oriented triangulation.
    """
    scheme = SubdivisionScheme(scheme)
    if check:
        report = orientation_audit(T)
        if not report.passed:
            raise MeshError("cannot subdivide a mesh that fails the orientation audit: "
                            + "; ".join(report.messages))
    n, m, S = T.dim, T.ambient_dim, T.n_simplices
    template = _barycentric_template(n) if scheme is SubdivisionScheme.BARYCENTRIC else _edgewise_template(n)
    subsets = sorted({s for child in template for s in child}, key=lambda s: (len(s), s))
    subset_pos = {s: i for i, s in enumerate(subsets)}

    pts = T.simplex_coords()
    width = 1 + (n + 1) * (1 + (m if T.offsets is not None else 0))
    all_keys = np.full((len(subsets), S, width), -1, dtype=np.int64)
    all_pos = np.empty((len(subsets), S, m))
    for si, sub in enumerate(subsets):
        k, _ = _face_keys(T, list(sub))
        all_keys[si, :, 0] = len(sub)
        all_keys[si, :, 1:1 + k.shape[1]] = k
        all_pos[si] = pts[:, list(sub), :].mean(axis=1)
    flat_keys = all_keys.reshape(-1, width)
    uniq, first, inverse = np.unique(flat_keys, axis=0, return_index=True, return_inverse=True)
    inverse = inverse.reshape(len(subsets), S)
    flat_pos = all_pos.reshape(-1, m)
    new_vertices = flat_pos[first].copy()
    if T.periods is not None:
        per = T._period_vector()
        mask = per > 0
        new_vertices[:, mask] -= per[mask] * np.floor(new_vertices[:, mask] / per[mask])

    child_cols = np.array([[subset_pos[s] for s in child] for child in template])
    simplices = inverse[child_cols]                      # (C, n+1, S)
    simplices = np.transpose(simplices, (2, 0, 1)).reshape(-1, n + 1)
    offsets = None
    if T.periods is not None:
        unwrapped = np.transpose(all_pos[child_cols], (2, 0, 1, 3)).reshape(-1, n + 1, m)
        per = T._period_vector()
        safe = np.where(per > 0, per, 1.0)
        offsets = np.where(per > 0, np.rint((unwrapped - new_vertices[simplices]) / safe), 0).astype(np.int64)
    return Triangulation(new_vertices, simplices, T.periods, offsets, T.name)


def interval_partition(a: float, b: float, breakpoints=()) -> Triangulation:
    """Partition ``a = x_0 < ... < x_k = b`` of an interval."""
    a, b = float(a), float(b)
    if not a < b:
        raise MeshError(f"need a < b, got [{a}, {b}]")
    inner = np.sort(np.asarray(list(breakpoints), dtype=float))
    if inner.size and (inner[0] <= a or inner[-1] >= b or np.any(np.diff(inner) <= 0)):
        raise MeshError("breakpoints must be distinct and strictly inside (a, b)")
    xs = np.concatenate([[a], inner, [b]])
    simp = np.stack([np.arange(xs.size - 1), np.arange(1, xs.size)], axis=1)
    return Triangulation(xs.reshape(-1, 1), simp, name=f"interval[{a:g},{b:g}]")


def _kuhn_cells(n: int):
    cells = []
    for perm in itertools.permutations(range(n)):
        path = [np.zeros(n, dtype=np.int64)]
        for axis in perm:
            nxt = path[-1].copy()
            nxt[axis] = 1
            path.append(nxt)
        if permutation_parity(perm) < 0:
            path[-1], path[-2] = path[-2], path[-1]
        cells.append(np.stack(path))
    return np.stack(cells)                               # (n!, n+1, n)


def _cube_grid(n: int, k: int, wrap: bool):
    k = int(k)
    if k < 1:
        raise MeshError(f"grid resolution must be >= 1, got {k}")
    side = k if wrap else k + 1
    corners = np.stack(np.meshgrid(*[np.arange(k)] * n, indexing="ij"), axis=-1).reshape(-1, n)
    cells = _kuhn_cells(n)
    lattice = corners[:, None, None, :] + cells[None]    # (k^n, n!, n+1, n)
    lattice = lattice.reshape(-1, n + 1, n)
    wrapped = lattice % side if wrap else lattice
    strides = side ** np.arange(n - 1, -1, -1)
    simplices = wrapped @ strides
    grid = np.stack(np.meshgrid(*[np.arange(side)] * n, indexing="ij"), axis=-1).reshape(-1, n)
    return grid, simplices, lattice // side if wrap else None


def unit_square_grid(k: int) -> Triangulation:
    """``2 k**2`` positively oriented triangles on ``[0, 1]**2``."""
    grid, simp, _ = _cube_grid(2, k, wrap=False)
    return Triangulation(grid / k, simp, name=f"unit_square_grid({k})")


def unit_cube_grid(k: int) -> Triangulation:
    """``6 k**3`` positively oriented tetrahedra on ``[0, 1]**3``."""
    grid, simp, _ = _cube_grid(3, k, wrap=False)
    return Triangulation(grid / k, simp, name=f"unit_cube_grid({k})")


def flat_torus_grid(k: int, periods=(1.0, 1.0)) -> Triangulation:
    """``2 k**2`` triangles on the flat torus ``R**2 / (P1 Z x P2 Z)``, ``k >= 2``."""
    if int(k) < 2:
        raise MeshError("flat_torus_grid needs k >= 2 (k = 1 repeats a vertex in every triangle)")
    per = np.asarray(periods, dtype=float)
    if per.shape != (2,) or np.any(per <= 0):
        raise MeshError("flat torus periods must be two positive numbers")
    grid, simp, offsets = _cube_grid(2, k, wrap=True)
    return Triangulation(grid * per / k, simp, tuple(per), offsets,
                         name=f"flat_torus_grid({k}, {tuple(per.tolist())})")


def icosphere(level: int) -> Triangulation:
    """Geodesic icosphere with ``20 * 4**level`` outward (counterclockwise) triangles."""
    level = int(level)
    if level < 0:
        raise MeshError("icosphere level must be >= 0")
    t = (1.0 + math.sqrt(5.0)) / 2.0
    verts = np.array([
        [-1, t, 0], [1, t, 0], [-1, -t, 0], [1, -t, 0],
        [0, -1, t], [0, 1, t], [0, -1, -t], [0, 1, -t],
        [t, 0, -1], [t, 0, 1], [-t, 0, -1], [-t, 0, 1],
    ], dtype=float)
    verts /= np.linalg.norm(verts, axis=1, keepdims=True)
    faces = np.array([
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ], dtype=np.int64)
    a, b, c = verts[faces[:, 0]], verts[faces[:, 1]], verts[faces[:, 2]]
    outward = np.einsum("ij,ij->i", np.cross(b - a, c - a), a + b + c) > 0
    faces[~outward] = faces[~outward][:, [0, 2, 1]]
    for _ in range(level):
        edges = np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]])
        edges = np.sort(edges, axis=1)
        uniq, inverse = np.unique(edges, axis=0, return_inverse=True)
        inverse = inverse.reshape(3, -1)
        mids = verts[uniq[:, 0]] + verts[uniq[:, 1]]
        mids /= np.linalg.norm(mids, axis=1, keepdims=True)
        base = verts.shape[0]
        verts = np.concatenate([verts, mids])
        ab, bc, ca = inverse[0] + base, inverse[1] + base, inverse[2] + base
        a, b, c = faces[:, 0], faces[:, 1], faces[:, 2]
        faces = np.concatenate([
            np.stack([a, ab, ca], axis=1),
            np.stack([ab, b, bc], axis=1),
            np.stack([ca, bc, c], axis=1),
            np.stack([ab, bc, ca], axis=1),
        ])
    return Triangulation(verts, faces, name=f"icosphere({level})")


def save_mesh(T: Triangulation, path) -> None:
    """Write the JSON mesh interchange file."""
    doc = {
        "dim": T.dim,
        "ambient_dim": T.ambient_dim,
        "name": T.name,
        "vertices": T.vertices.tolist(),
        "simplices": T.simplices.tolist(),
    }
    if T.periods is not None:
        doc["periods"] = list(T.periods)
        doc["offsets"] = T.offsets.tolist()
    Path(path).write_text(json.dumps(doc, indent=1) + "\n")


def load_mesh(path) -> Triangulation:
    """Read a mesh interchange file written by :func:`save_mesh` (or by hand)."""
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise MeshError(f"{path}: not valid JSON ({exc})") from None
    known = {"dim", "ambient_dim", "name", "vertices", "simplices", "periods", "offsets"}
    unknown = set(doc) - known
    if unknown:
        raise MeshError(f"{path}: unknown mesh keys {sorted(unknown)}")
    for key in ("dim", "ambient_dim", "vertices", "simplices"):
        if key not in doc:
            raise MeshError(f"{path}: missing key {key!r}")
    T = Triangulation(doc["vertices"], doc["simplices"], doc.get("periods"),
                      doc.get("offsets"), doc.get("name", Path(path).stem))
    if T.dim != doc["dim"] or T.ambient_dim != doc["ambient_dim"]:
        raise MeshError(f"{path}: declared dim/ambient_dim do not match the arrays")
    return T
