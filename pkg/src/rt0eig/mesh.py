"""Structured triangular meshes of axis-aligned rectangles.

The mesh generator produces an n-by-n grid of squares, each split along the
lower-left to upper-right diagonal, with globally oriented edges.  Edge
degrees of freedom (one per edge) and triangle degrees of freedom (one per
triangle) are the carriers of the lowest-order mixed discretization, so the
mesh records, for every triangle, which global edge each local edge maps to
and whether the triangle's outward normal agrees with the global edge normal.
"""

from dataclasses import dataclass, field

import numpy as np


class MeshError(Exception):
    """Invalid mesh geometry or construction parameters."""


@dataclass(frozen=True)
class Rectangle:
    """Axis-aligned rectangle [x0, x1] x [y0, y1] with positive extent."""

    x0: float
    y0: float
    x1: float
    y1: float

    def __post_init__(self):
        if not (self.x1 > self.x0 and self.y1 > self.y0):
            raise MeshError(
                "rectangle must have positive extent, got "
                f"[{self.x0}, {self.x1}] x [{self.y0}, {self.y1}]"
            )

    @property
    def width(self) -> float:
        return self.x1 - self.x0

    @property
    def height(self) -> float:
        return self.y1 - self.y0


UNIT_SQUARE = Rectangle(0.0, 0.0, 1.0, 1.0)


@dataclass(frozen=True)
class Mesh:
    """Triangulation of a rectangle with oriented edges.

    Attributes
    ----------
    rect : Rectangle
        The meshed domain.
    n : int
        Subdivision count per axis.
    vertices : (num_vertices, 2) float array
        Vertex coordinates, row-major over the grid.
    triangles : (num_triangles, 3) int array
        Vertex indices per triangle, counterclockwise.
    edges : (num_edges, 2) int array
        Vertex index pairs, oriented from lower to higher index.
    triangle_edges : (num_triangles, 3) int array
        Global edge index of the local edge opposite each vertex.
    triangle_edge_signs : (num_triangles, 3) int array
        +1 where the triangle's outward normal on that edge equals the
        global edge normal (90-degree counterclockwise rotation of the
        oriented edge direction), -1 otherwise.
    boundary_edge_flags : (num_edges,) bool array
        True for edges referenced by exactly one triangle.
    h : float
        Mesh size, the maximum edge length.

    Derived arrays `areas` and `edge_lengths` are precomputed.  All arrays
    are read-only; a Mesh is safe to share across threads.
    """

    rect: Rectangle
    n: int
    vertices: np.ndarray
    triangles: np.ndarray
    edges: np.ndarray
    triangle_edges: np.ndarray
    triangle_edge_signs: np.ndarray
    boundary_edge_flags: np.ndarray
    h: float
    areas: np.ndarray = field(repr=False, default=None)
    edge_lengths: np.ndarray = field(repr=False, default=None)

    @property
    def num_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def num_triangles(self) -> int:
        return self.triangles.shape[0]

    @property
    def num_edges(self) -> int:
        return self.edges.shape[0]

    def triangle_coords(self, t: int) -> np.ndarray:
        """Vertex coordinates of triangle t as a (3, 2) array."""
        return self.vertices[self.triangles[t]]

    def __str__(self):
        return (
            f"Mesh(n={self.n}, {self.num_vertices} vertices, "
            f"{self.num_triangles} triangles, {self.num_edges} edges)"
        )


def _signed_areas(vertices, triangles):
    u = vertices[triangles[:, 1]] - vertices[triangles[:, 0]]
    v = vertices[triangles[:, 2]] - vertices[triangles[:, 0]]
    return 0.5 * (u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0])


def build_structured_mesh(rect: Rectangle, n: int) -> Mesh:
    """Triangulate `rect` with an n-by-n grid of diagonally split squares.

    Every square is split along its lower-left to upper-right diagonal into
    two counterclockwise triangles.  Vertex, triangle and edge orderings are
    deterministic: vertices row-major over the grid, triangles row-major
    with the lower triangle first, edges in first-seen order while walking
    the triangles.

    Parameters
    ----------
    rect : Rectangle
    n : int
        Subdivisions per axis, at least 1.

    Returns
    -------
    Mesh
    """
    if not isinstance(rect, Rectangle):
        raise MeshError("rect must be a Rectangle")
    if n < 1:
        raise MeshError(f"subdivision count must be >= 1, got {n}")

    xs = np.linspace(rect.x0, rect.x1, n + 1)
    ys = np.linspace(rect.y0, rect.y1, n + 1)
    xx, yy = np.meshgrid(xs, ys)  # row-major: index iy*(n+1)+ix
    vertices = np.column_stack([xx.ravel(), yy.ravel()])

    triangles = np.empty((2 * n * n, 3), dtype=np.int64)
    t = 0
    for iy in range(n):
        for ix in range(n):
            v00 = iy * (n + 1) + ix
            v10 = v00 + 1
            v01 = v00 + (n + 1)
            v11 = v01 + 1
            triangles[t] = (v00, v10, v11)      # lower triangle
            triangles[t + 1] = (v00, v11, v01)  # upper triangle
            t += 2

    edge_index: dict[tuple[int, int], int] = {}
    edge_list: list[tuple[int, int]] = []
    triangle_edges = np.empty((2 * n * n, 3), dtype=np.int64)
    triangle_edge_signs = np.empty((2 * n * n, 3), dtype=np.int64)
    edge_tris: list[int] = []

    for t in range(triangles.shape[0]):
        tri = triangles[t]
        for i in range(3):
            # local edge opposite vertex i, walked counterclockwise
            a = int(tri[(i + 1) % 3])
            b = int(tri[(i + 2) % 3])
            key = (a, b) if a < b else (b, a)
            e = edge_index.get(key)
            if e is None:
                e = len(edge_list)
                edge_index[key] = e
                edge_list.append(key)
                edge_tris.append(0)
            edge_tris[e] += 1
            triangle_edges[t, i] = e
            # Counterclockwise walk a->b has the outward normal clockwise of
            # the walk direction; the global normal is counterclockwise of
            # the low->high direction, so the two agree exactly when the
            # walk descends the vertex indices.
            triangle_edge_signs[t, i] = 1 if a > b else -1

    edges = np.asarray(edge_list, dtype=np.int64)
    boundary_edge_flags = np.asarray(edge_tris, dtype=np.int64) == 1

    areas = _signed_areas(vertices, triangles)
    if np.any(areas <= 0):
        raise MeshError("triangulation produced non-positive triangle areas")
    vec = vertices[edges[:, 1]] - vertices[edges[:, 0]]
    edge_lengths = np.hypot(vec[:, 0], vec[:, 1])
    h = float(edge_lengths.max())

    for arr in (vertices, triangles, edges, triangle_edges,
                triangle_edge_signs, boundary_edge_flags, areas, edge_lengths):
        arr.setflags(write=False)

    return Mesh(
        rect=rect,
        n=n,
        vertices=vertices,
        triangles=triangles,
        edges=edges,
        triangle_edges=triangle_edges,
        triangle_edge_signs=triangle_edge_signs,
        boundary_edge_flags=boundary_edge_flags,
        h=h,
        areas=areas,
        edge_lengths=edge_lengths,
    )


def refine(mesh: Mesh) -> Mesh:
    """Uniformly refine by doubling the subdivision count.

    The result equals build_structured_mesh(mesh.rect, 2 * mesh.n); the
    coarse vertex set is contained in the fine one (nested meshes).
    """
    return build_structured_mesh(mesh.rect, 2 * mesh.n)


def edge_normals(mesh: Mesh) -> np.ndarray:
    """Unit global normals per edge, the oriented direction rotated 90
    degrees counterclockwise."""
    vec = mesh.vertices[mesh.edges[:, 1]] - mesh.vertices[mesh.edges[:, 0]]
    tangent = vec / mesh.edge_lengths[:, None]
    return np.column_stack([-tangent[:, 1], tangent[:, 0]])


def dump_mesh(mesh: Mesh) -> str:
    """Plain-text mesh dump with VERTICES, TRIANGLES and EDGES sections.

    One record per line: vertex index with coordinates, triangle index with
    its three vertices, edge index with its two vertices and a 0/1 boundary
    flag.  Coordinates use 17 significant digits.
    """
    lines = ["VERTICES"]
    for i, (x, y) in enumerate(mesh.vertices):
        lines.append(f"{i} {x:.17g} {y:.17g}")
    lines.append("TRIANGLES")
    for t, (a, b, c) in enumerate(mesh.triangles):
        lines.append(f"{t} {a} {b} {c}")
    lines.append("EDGES")
    for e, (a, b) in enumerate(mesh.edges):
        flag = 1 if mesh.boundary_edge_flags[e] else 0
        lines.append(f"{e} {a} {b} {flag}")
    return "\n".join(lines) + "\n"
