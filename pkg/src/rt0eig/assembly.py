"""Assembly of the lowest-order Raviart-Thomas / piecewise-constant system.

Local basis on a triangle with vertices p0, p1, p2 and area |T|:

    phi_i(x) = s_i * |e_i| / (2 |T|) * (x - p_i),

where e_i is the edge opposite vertex p_i and s_i the +-1 sign recorded by
the mesh (global edge orientation).  Then div phi_i = s_i |e_i| / |T| and
the constant normal flux of phi_i across e_i, measured against the global
edge normal, is exactly 1.  The scalar space has the indicator of each
triangle as its basis.

Global blocks:

    M[i, j] = integral of (A^-1 phi_j) . phi_i   (flux mass, E x E, SPD)
    B[t, j] = integral over triangle t of div phi_j   (T x E, 3 nnz per row)
    C[t]    = integral over triangle t of c   (diagonal of reaction mass)
    D[t]    = integral over triangle t of b   (diagonal of weight mass)

The homogeneous Dirichlet condition on u is natural in this mixed form, so
no edge degrees of freedom are eliminated.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .coefficients import (COEFF_EPS, ProblemSpec, QuadratureRule,
                           integrate_triangle, quad_points, triangle_rule)
from .mesh import Mesh

DEGENERATE_AREA = 1e-14


class AssemblyError(Exception):
    """Invalid element geometry or coefficient data during assembly."""


@dataclass
class AssembledSystem:
    """Sparse blocks of the discrete mixed eigenvalue problem.

    C and D hold the diagonals of the (diagonal) reaction and weight mass
    matrices as 1-D arrays of length num_triangles.
    """

    M: sp.csr_matrix
    B: sp.csr_matrix
    C: np.ndarray
    D: np.ndarray
    num_edges: int
    num_triangles: int

    def __post_init__(self):
        self._m_solve = None

    def solve_flux_mass(self, rhs: np.ndarray) -> np.ndarray:
        """Solve M x = rhs, factorizing M once and reusing the factor."""
        if self._m_solve is None:
            from . import eigensolver
            self._m_solve = eigensolver.flux_mass_solver(self.M)
        return self._m_solve(rhs)


def _local_geometry(tri):
    tri = np.asarray(tri, dtype=float)
    if tri.shape != (3, 2):
        raise AssemblyError(f"triangle must be a 3x2 array, got {tri.shape}")
    u, v = tri[1] - tri[0], tri[2] - tri[0]
    area = 0.5 * abs(float(u[0] * v[1] - u[1] * v[0]))
    if area < DEGENERATE_AREA:
        raise AssemblyError(f"degenerate triangle with area {area:g}")
    # edge opposite vertex i connects the other two vertices
    lengths = np.array([
        np.linalg.norm(tri[2] - tri[1]),
        np.linalg.norm(tri[0] - tri[2]),
        np.linalg.norm(tri[1] - tri[0]),
    ])
    return tri, area, lengths


def element_flux_mass(tri, signs, Ainv, rule: QuadratureRule) -> np.ndarray:
    """3x3 flux mass block: entries integral of (A^-1 phi_j) . phi_i.

    Parameters
    ----------
    tri : (3, 2) array
        Triangle vertices.
    signs : length-3 sequence of +-1
        Global orientation signs of the edges opposite each vertex.
    Ainv : callable (x, y) -> (2, 2) array
        Pointwise inverse of the diffusion tensor.
    rule : QuadratureRule
    """
    tri, area, lengths = _local_geometry(tri)
    signs = np.asarray(signs, dtype=float)
    coeff = signs * lengths / (2.0 * area)
    pts = quad_points(tri, rule)
    m = np.zeros((3, 3))
    for (x, y), w in zip(pts, rule.weights):
        phi = coeff[:, None] * (np.array([x, y])[None, :] - tri)  # (3, 2)
        m += w * (phi @ np.asarray(Ainv(x, y), dtype=float) @ phi.T)
    m *= area
    return 0.5 * (m + m.T)


def element_div(tri, signs) -> np.ndarray:
    """Row of B for one triangle: entry i is signs[i] * |e_i|."""
    _, _, lengths = _local_geometry(tri)
    return np.asarray(signs, dtype=float) * lengths


def element_scalar_mass(tri, coeff, rule: QuadratureRule) -> float:
    """Integral of a scalar coefficient over the triangle."""
    return integrate_triangle(coeff, tri, rule)


def _inverted_tensor_field(prob: ProblemSpec, t: int):
    """Closed-form pointwise 2x2 inverse of A with SPD validation."""

    def ainv(x, y):
        a = np.asarray(prob.A(x, y), dtype=float)
        if a.shape != (2, 2):
            raise AssemblyError(
                f"A must return a 2x2 matrix, got shape {a.shape} "
                f"at ({x:g}, {y:g}) in triangle {t}")
        scale = max(1.0, float(np.abs(a).max()))
        if abs(a[0, 1] - a[1, 0]) > 1e-10 * scale:
            raise AssemblyError(
                f"A is not symmetric at ({x:g}, {y:g}) in triangle {t}")
        tr = a[0, 0] + a[1, 1]
        det = a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]
        lam_min = 0.5 * (tr - np.sqrt(max((a[0, 0] - a[1, 1]) ** 2
                                          + 4.0 * a[0, 1] ** 2, 0.0)))
        if lam_min < COEFF_EPS or det < COEFF_EPS:
            raise AssemblyError(
                f"A is not positive definite at ({x:g}, {y:g}) "
                f"in triangle {t}: min eigenvalue {lam_min:g}")
        return np.array([[a[1, 1], -a[0, 1]], [-a[1, 0], a[0, 0]]]) / det

    return ainv


def _checked_scalar(f, name, lower, t):
    def g(x, y):
        v = float(f(x, y))
        if v < lower:
            raise AssemblyError(
                f"coefficient {name} = {v:g} below {lower:g} "
                f"at ({x:g}, {y:g}) in triangle {t}")
        return v

    return g


def assemble(mesh: Mesh, prob: ProblemSpec,
             rule: QuadratureRule | None = None) -> AssembledSystem:
    """Assemble the global mixed system by element scatter-add.

    Coefficient invariants (A SPD, c >= 0, b > 0) are checked at every
    quadrature point; a violation raises AssemblyError naming the triangle
    and point.  Duplicate scatter entries are summed.
    """
    if rule is None:
        rule = triangle_rule(2)
    if (mesh.rect.x0, mesh.rect.y0, mesh.rect.x1, mesh.rect.y1) != (
            prob.domain.x0, prob.domain.y0, prob.domain.x1, prob.domain.y1):
        raise AssemblyError(
            f"mesh domain {mesh.rect} differs from problem domain {prob.domain}")

    nt, ne = mesh.num_triangles, mesh.num_edges
    m_rows = np.empty((nt, 3, 3), dtype=np.int64)
    m_cols = np.empty((nt, 3, 3), dtype=np.int64)
    m_vals = np.empty((nt, 3, 3))
    b_vals = np.empty((nt, 3))
    c_diag = np.empty(nt)
    d_diag = np.empty(nt)

    for t in range(nt):
        tri = mesh.triangle_coords(t)
        edges = mesh.triangle_edges[t]
        signs = mesh.triangle_edge_signs[t]
        ainv = _inverted_tensor_field(prob, t)
        m_vals[t] = element_flux_mass(tri, signs, ainv, rule)
        m_rows[t] = edges[:, None]
        m_cols[t] = edges[None, :]
        b_vals[t] = element_div(tri, signs)
        c_diag[t] = element_scalar_mass(
            tri, _checked_scalar(prob.c, "c", 0.0, t), rule)
        d_diag[t] = element_scalar_mass(
            tri, _checked_scalar(prob.b, "b", COEFF_EPS, t), rule)

    M = sp.coo_matrix(
        (m_vals.ravel(), (m_rows.ravel(), m_cols.ravel())),
        shape=(ne, ne)).tocsr()
    b_rows = np.repeat(np.arange(nt), 3)
    B = sp.coo_matrix(
        (b_vals.ravel(), (b_rows, mesh.triangle_edges.ravel())),
        shape=(nt, ne)).tocsr()

    return AssembledSystem(M=M, B=B, C=c_diag, D=d_diag,
                           num_edges=ne, num_triangles=nt)


def dump_matrix(mat) -> str:
    """Coordinate text dump, one `row col value` line per stored entry,
    17 significant digits, sorted by (row, col).

    Accepts a scipy sparse matrix or a 1-D array standing for a diagonal.
    """
    arr = np.asarray(mat) if not sp.issparse(mat) else None
    if arr is not None and arr.ndim == 1:
        triples = [(i, i, v) for i, v in enumerate(arr)]
    else:
        coo = sp.coo_matrix(mat)
        order = np.lexsort((coo.col, coo.row))
        triples = [(int(coo.row[k]), int(coo.col[k]), float(coo.data[k]))
                   for k in order]
    return "".join(f"{r} {c} {v:.17g}\n" for r, c, v in triples)
