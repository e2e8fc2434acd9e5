"""Coefficient fields of the elliptic operator and quadrature rules.

The continuous problem is

    -div(A grad u) + c u = lambda b u   in the rectangle,
    u = 0                               on the boundary,

with A(x) a symmetric positive definite 2x2 tensor, c(x) >= 0 and b(x) > 0.
Coefficients are plain callables of a point (x, y); evaluation must be
reentrant.  Quadrature rules are immutable value objects.
"""

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .mesh import Rectangle, UNIT_SQUARE

# Eigenvalue floor for A and positivity floor for b.
COEFF_EPS = 1e-12


@dataclass(frozen=True)
class QuadratureRule:
    """Triangle quadrature in barycentric coordinates.

    Weights are normalized to sum to 1 and are scaled by the triangle area
    at evaluation time, so a rule integrates f = 1 to the triangle area.
    """

    points: np.ndarray   # (Q, 3) barycentric coordinates
    weights: np.ndarray  # (Q,)
    degree: int

    def __post_init__(self):
        self.points.setflags(write=False)
        self.weights.setflags(write=False)


def triangle_rule(degree: int) -> QuadratureRule:
    """Quadrature rule exact for polynomials up to `degree` on a triangle.

    degree 1: centroid rule; degree 2: three edge midpoints; degree 3:
    four points (centroid with weight -27/48, three points at barycentric
    (3/5, 1/5, 1/5) with weight 25/48 each).
    """
    if degree == 1:
        pts = np.array([[1.0, 1.0, 1.0]]) / 3.0
        wts = np.array([1.0])
    elif degree == 2:
        pts = np.array([
            [0.5, 0.5, 0.0],
            [0.5, 0.0, 0.5],
            [0.0, 0.5, 0.5],
        ])
        wts = np.array([1.0, 1.0, 1.0]) / 3.0
    elif degree == 3:
        pts = np.array([
            [1 / 3, 1 / 3, 1 / 3],
            [3 / 5, 1 / 5, 1 / 5],
            [1 / 5, 3 / 5, 1 / 5],
            [1 / 5, 1 / 5, 3 / 5],
        ])
        wts = np.array([-27.0, 25.0, 25.0, 25.0]) / 48.0
    else:
        raise ValueError(f"unsupported triangle quadrature degree {degree}, "
                         "supported degrees are 1, 2, 3")
    return QuadratureRule(points=pts, weights=wts, degree=degree)


def edge_rule(npts: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on [0, 1].

    The 2-point rule is exact for cubics, the 3-point rule for quintics.
    """
    if npts == 2:
        r = 1.0 / np.sqrt(3.0)
        nodes = np.array([(1 - r) / 2, (1 + r) / 2])
        weights = np.array([0.5, 0.5])
    elif npts == 3:
        r = np.sqrt(3.0 / 5.0)
        nodes = np.array([(1 - r) / 2, 0.5, (1 + r) / 2])
        weights = np.array([5.0, 8.0, 5.0]) / 18.0
    else:
        raise ValueError(f"unsupported edge rule size {npts}, "
                         "supported sizes are 2, 3")
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def quad_points(tri: np.ndarray, rule: QuadratureRule) -> np.ndarray:
    """Physical quadrature points of `rule` on the triangle `tri` (3x2)."""
    return rule.points @ np.asarray(tri, dtype=float)


def triangle_area(tri: np.ndarray) -> float:
    tri = np.asarray(tri, dtype=float)
    u, v = tri[1] - tri[0], tri[2] - tri[0]
    return 0.5 * abs(float(u[0] * v[1] - u[1] * v[0]))


def integrate_triangle(f: Callable[[float, float], float],
                       tri: np.ndarray,
                       rule: QuadratureRule) -> float:
    """Area-weighted quadrature of f over the triangle with vertices `tri`."""
    area = triangle_area(tri)
    pts = quad_points(tri, rule)
    acc = 0.0
    for (x, y), w in zip(pts, rule.weights):
        acc += w * f(x, y)
    return area * acc


ScalarField = Callable[[float, float], float]
TensorField = Callable[[float, float], np.ndarray]


@dataclass(frozen=True)
class ProblemSpec:
    """Coefficients of one eigenvalue problem on a rectangle.

    `analytic_shift` is None when no closed-form spectrum is known;
    otherwise the spectrum is the Dirichlet Laplace spectrum of the
    rectangle shifted by that constant (the eigenfunctions are the Laplace
    ones).
    """

    name: str
    domain: Rectangle
    A: TensorField
    c: ScalarField
    b: ScalarField
    analytic_shift: float | None = None

    @property
    def has_analytic_spectrum(self) -> bool:
        return self.analytic_shift is not None


def _identity_tensor(x, y):
    return np.eye(2)


def _make_laplace(name="laplace", shift=0.0):
    c_val = float(shift)
    return ProblemSpec(
        name=name,
        domain=UNIT_SQUARE,
        A=_identity_tensor,
        c=lambda x, y: c_val,
        b=lambda x, y: 1.0,
        analytic_shift=c_val,
    )


def _make_variable():
    return ProblemSpec(
        name="variable",
        domain=UNIT_SQUARE,
        A=lambda x, y: np.array([[1.0 + x, 0.0], [0.0, 1.0 + y]]),
        c=lambda x, y: x * y,
        b=lambda x, y: 1.0 + (x + y) / 4.0,
        analytic_shift=None,
    )


_PRESETS: dict[str, Callable[[], ProblemSpec]] = {
    "laplace": lambda: _make_laplace("laplace", 0.0),
    "shifted": lambda: _make_laplace("shifted", 5.0),
    "variable": _make_variable,
}


def preset_names() -> list[str]:
    return sorted(_PRESETS)


def get_preset(name: str) -> ProblemSpec:
    """Look up a built-in problem by name."""
    try:
        factory = _PRESETS[name]
    except KeyError:
        raise KeyError(
            f"unknown preset {name!r}, available: {', '.join(preset_names())}"
        ) from None
    return factory()
