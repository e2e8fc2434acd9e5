"""Mixed projections of analytic eigenfunctions and distances to the
discrete ones.

The projection pair is the canonical one for the lowest-order mixed space:
the elementwise mean onto piecewise constants and the edge-normal-flux
interpolant onto the Raviart-Thomas space.  With the element basis used by
the assembly module (whose basis function on edge e has unit constant
normal flux across e), the interpolant's coefficient on an edge is the MEAN
normal flux of the field across that edge; this is exactly the scaling
under which the discrete divergence of the interpolant reproduces the
elementwise mean of the continuous divergence.
"""

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .coefficients import QuadratureRule, edge_rule, quad_points, triangle_rule
from .mesh import Mesh, Rectangle, edge_normals


@dataclass(frozen=True)
class AnalyticEigenpair:
    """Closed-form eigenpair of the Dirichlet Laplacian on a rectangle.

    For mode (m, n) on [x0,x1] x [y0,y1] with side lengths Lx, Ly:

        lam = pi^2 (m^2 / Lx^2 + n^2 / Ly^2)
        u   = 2 / sqrt(Lx Ly) * sin(m pi (x-x0)/Lx) * sin(n pi (y-y0)/Ly)

    normalized so the integral of u^2 over the rectangle is 1.  On the unit
    square this reduces to lam = (m^2 + n^2) pi^2, u = 2 sin(m pi x)
    sin(n pi y).
    """

    lam: float
    u: Callable[[float, float], float]
    grad_u: Callable[[float, float], np.ndarray]
    mode: tuple[int, int]


def laplace_eigenpair(m: int, n: int, rect: Rectangle,
                      shift: float = 0.0) -> AnalyticEigenpair:
    """Analytic eigenpair of -Laplace u + shift*u = lam u, u = 0 on the
    rectangle boundary."""
    if m < 1 or n < 1:
        raise ValueError(f"mode numbers must be positive, got ({m}, {n})")
    lx, ly = rect.width, rect.height
    lam = math.pi**2 * (m**2 / lx**2 + n**2 / ly**2) + shift
    amp = 2.0 / math.sqrt(lx * ly)
    km = m * math.pi / lx
    kn = n * math.pi / ly
    x0, y0 = rect.x0, rect.y0

    def u(x, y):
        return amp * math.sin(km * (x - x0)) * math.sin(kn * (y - y0))

    def grad_u(x, y):
        return amp * np.array([
            km * math.cos(km * (x - x0)) * math.sin(kn * (y - y0)),
            kn * math.sin(km * (x - x0)) * math.cos(kn * (y - y0)),
        ])

    return AnalyticEigenpair(lam=lam, u=u, grad_u=grad_u, mode=(m, n))


def laplace_eigenvalues(count: int, rect: Rectangle,
                        shift: float = 0.0) -> np.ndarray:
    """The `count` smallest analytic eigenvalues, ascending."""
    grid = max(2, int(math.isqrt(4 * count)) + 2)
    lx, ly = rect.width, rect.height
    vals = sorted(
        math.pi**2 * (m**2 / lx**2 + n**2 / ly**2) + shift
        for m in range(1, grid + 1) for n in range(1, grid + 1)
    )
    return np.array(vals[:count])


def p0_project(u_exact: Callable[[float, float], float], mesh: Mesh,
               rule: QuadratureRule | None = None) -> np.ndarray:
    """Elementwise mean of u_exact: entry t is the average over triangle t."""
    if rule is None:
        rule = triangle_rule(2)
    out = np.empty(mesh.num_triangles)
    for t in range(mesh.num_triangles):
        pts = quad_points(mesh.triangle_coords(t), rule)
        out[t] = sum(w * u_exact(x, y)
                     for (x, y), w in zip(pts, rule.weights))
    return out


def fortin_interpolate(sigma_exact: Callable[[float, float], np.ndarray],
                       mesh: Mesh, npts: int = 3) -> np.ndarray:
    """Edge-flux interpolant coefficients of a smooth vector field.

    Entry e is the mean normal flux (1/|e|) * integral over e of
    sigma_exact . n_e, with n_e the global unit edge normal, evaluated with
    an npts-point Gauss rule along the edge.  These are the coefficients of
    the interpolant in the assembly basis, so B applied to the result
    reproduces the elementwise integral of div(sigma_exact) up to
    quadrature error.
    """
    nodes, weights = edge_rule(npts)
    normals = edge_normals(mesh)
    p0 = mesh.vertices[mesh.edges[:, 0]]
    vec = mesh.vertices[mesh.edges[:, 1]] - p0
    out = np.empty(mesh.num_edges)
    for e in range(mesh.num_edges):
        acc = 0.0
        for s, w in zip(nodes, weights):
            x, y = p0[e] + s * vec[e]
            acc += w * float(np.dot(sigma_exact(x, y), normals[e]))
        out[e] = acc
    return out


def superclose_distance(u_h: np.ndarray, pu: np.ndarray, D: np.ndarray,
                        weighted: bool = True) -> float:
    """D-weighted distance between the discrete eigenfunction and the
    projection of the exact one.

    Both vectors are normalized to unit D-norm and the sign of u_h is
    aligned to the projection before measuring.  With `weighted` False the
    difference of the normalized vectors is measured in the Euclidean norm
    instead.
    """
    d = np.asarray(D, dtype=float)
    pu_norm = math.sqrt(float(pu @ (d * pu)))
    if pu_norm <= 0.0:
        raise ValueError("projection vector has zero weighted norm")
    pu = pu / pu_norm
    u = u_h / math.sqrt(float(u_h @ (d * u_h)))
    if float(u @ (d * pu)) < 0:
        u = -u
    diff = u - pu
    if weighted:
        return math.sqrt(float(diff @ (d * diff)))
    return float(np.linalg.norm(diff))


def _flux_at(mesh, t, sigma_coeff, x, y):
    """Value of the discrete flux field inside triangle t at (x, y)."""
    tri = mesh.triangle_coords(t)
    area = mesh.areas[t]
    val = np.zeros(2)
    for i in range(3):
        e = mesh.triangle_edges[t, i]
        s = mesh.triangle_edge_signs[t, i]
        val += (sigma_coeff[e] * s * mesh.edge_lengths[e] / (2.0 * area)
                * (np.array([x, y]) - tri[i]))
    return val


def l2_errors(pair, exact: AnalyticEigenpair, mesh: Mesh,
              rule: QuadratureRule | None = None,
              A: Callable[[float, float], np.ndarray] | None = None
              ) -> tuple[float, float]:
    """L2 errors of the discrete eigenfunction and its flux.

    err_u integrates (u_exact - u_h)^2 over each triangle with u_h constant
    there; err_sigma does the same against the exact flux A grad(u_exact)
    with the discrete flux evaluated pointwise from its basis expansion.
    The sign of the discrete pair is aligned to the exact eigenfunction
    first.  Defaults: degree-3 quadrature, A = identity.
    """
    if rule is None:
        rule = triangle_rule(3)
    weights = rule.weights
    # sign alignment: compare elementwise means against the exact function
    overlap = 0.0
    for t in range(mesh.num_triangles):
        pts = quad_points(mesh.triangle_coords(t), rule)
        mean = sum(w * exact.u(x, y) for (x, y), w in zip(pts, weights))
        overlap += mesh.areas[t] * pair.u[t] * mean
    sign = 1.0 if overlap >= 0 else -1.0

    err_u_sq = 0.0
    err_sigma_sq = 0.0
    for t in range(mesh.num_triangles):
        pts = quad_points(mesh.triangle_coords(t), rule)
        u_t = sign * pair.u[t]
        acc_u = 0.0
        acc_s = 0.0
        for (x, y), w in zip(pts, weights):
            acc_u += w * (exact.u(x, y) - u_t) ** 2
            g = exact.grad_u(x, y)
            flux = g if A is None else np.asarray(A(x, y)) @ g
            dsig = flux - sign * _flux_at(mesh, t, pair.sigma, x, y)
            acc_s += w * float(dsig @ dsig)
        err_u_sq += mesh.areas[t] * acc_u
        err_sigma_sq += mesh.areas[t] * acc_s
    return math.sqrt(err_u_sq), math.sqrt(err_sigma_sq)
