"""Eigenvalue solver for the discrete mixed problem.

The saddle-point system

    M sigma + B^T u = 0
    B sigma - C u   = -lambda D u

is reduced by eliminating the flux: S = B M^-1 B^T + C is symmetric positive
definite and S u = lambda D u has exactly the finite eigenvalues of the full
block pencil.  The dense path forms S explicitly and diagonalizes the
similarity transform D^-1/2 S D^-1/2; the iterative path applies S as an
operator and runs shift-invert ARPACK around zero.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla

# Residual and orthonormality contracts.
RESIDUAL_RTOL = 1e-10
FLUX_RTOL = 1e-11
SCHUR_SYM_RTOL = 1e-11

# Above this edge count M is factorized sparsely instead of densely.
DENSE_FACTOR_LIMIT = 4096

ITER_BUDGET_PER_EIGENVALUE = 500


class NumericalError(Exception):
    """Factorization failure, non-convergence, or violated residual bound."""


@dataclass
class EigenPair:
    """One discrete eigentriple.

    `u` is normalized to u^T D u = 1 with its largest-magnitude entry
    positive; `sigma` solves M sigma = -B^T u; `residual` is the 2-norm of
    S u - lambda D u.
    """

    lambda_h: float
    u: np.ndarray
    sigma: np.ndarray
    residual: float


@dataclass
class EigenResult:
    """Eigenpairs of one mesh level, ascending by eigenvalue."""

    n: int
    h: float
    num_edges: int
    num_triangles: int
    pairs: list[EigenPair] = field(default_factory=list)

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.array([p.lambda_h for p in self.pairs])


def flux_mass_solver(M: sp.csr_matrix):
    """Factorize the SPD flux mass matrix once; return a dense solve.

    Small systems use a dense Cholesky factorization (which also certifies
    positive definiteness); larger ones a sparse LU.
    """
    ne = M.shape[0]
    if ne <= DENSE_FACTOR_LIMIT:
        try:
            factor = la.cho_factor(M.toarray())
        except la.LinAlgError as exc:
            raise NumericalError(
                f"flux mass matrix is not positive definite: {exc}") from exc
        return lambda rhs: la.cho_solve(factor, rhs)
    try:
        lu = spla.splu(M.tocsc())
    except RuntimeError as exc:
        raise NumericalError(
            f"flux mass factorization failed: {exc}") from exc
    return lambda rhs: lu.solve(np.asarray(rhs))


def schur_complement(sys) -> np.ndarray:
    """Dense Schur complement S = B M^-1 B^T + C of the mixed system.

    Uses one factorization of M and one triangular solve per triangle
    column of B^T.  Raises NumericalError if M is not positive definite or
    the result is not symmetric to within tolerance.
    """
    solve = sys.solve_flux_mass
    bt = sys.B.T.toarray()
    s = np.empty((sys.num_triangles, sys.num_triangles))
    # chunk the multi-RHS solve to bound peak memory on fine meshes
    chunk = max(1, min(sys.num_triangles, (1 << 22) // max(sys.num_edges, 1)))
    for lo in range(0, sys.num_triangles, chunk):
        hi = min(lo + chunk, sys.num_triangles)
        s[:, lo:hi] = sys.B @ solve(bt[:, lo:hi])
    s[np.diag_indices_from(s)] += sys.C
    scale = float(np.abs(s).max())
    asym = float(np.abs(s - s.T).max())
    if asym > SCHUR_SYM_RTOL * scale:
        raise NumericalError(
            f"Schur complement asymmetry {asym:g} exceeds "
            f"{SCHUR_SYM_RTOL:g} * {scale:g}")
    return 0.5 * (s + s.T)


def _fix_signs(vecs: np.ndarray) -> np.ndarray:
    """Make the largest-magnitude entry of each column positive.

    Ties in magnitude resolve to the lowest index (argmax takes the first).
    """
    idx = np.argmax(np.abs(vecs), axis=0)
    flip = vecs[idx, np.arange(vecs.shape[1])] < 0
    vecs = vecs.copy()
    vecs[:, flip] *= -1.0
    return vecs


def solve_gevp(S: np.ndarray, D: np.ndarray, k: int):
    """k smallest eigenpairs of S u = lambda D u, D diagonal positive.

    Returns (values, vectors, residuals) with values ascending, vectors
    D-orthonormal columns with the sign convention applied, and residuals
    the 2-norms of S u - lambda D u.  The residual bound is checked against
    RESIDUAL_RTOL times the Frobenius norm of S.
    """
    t = S.shape[0]
    if not (1 <= k <= t):
        raise NumericalError(f"requested {k} eigenvalues from a {t}-dim space")
    d = np.asarray(D, dtype=float)
    if np.any(d <= 0):
        raise NumericalError("weight mass diagonal must be positive")
    rsq = 1.0 / np.sqrt(d)
    w = rsq[:, None] * S * rsq[None, :]
    w = 0.5 * (w + w.T)
    vals, y = la.eigh(w, subset_by_index=(0, k - 1))
    vecs = _fix_signs(rsq[:, None] * y)
    residuals = _residuals(S @ vecs, d[:, None] * vecs, vals)
    _check_residuals(residuals, np.linalg.norm(S))
    return vals, vecs, residuals


def _residuals(sv, dv, vals):
    return np.linalg.norm(sv - dv * vals[None, :], axis=0)


def _check_residuals(residuals, s_norm):
    bound = RESIDUAL_RTOL * s_norm
    worst = float(residuals.max())
    if worst > bound:
        bad = int(np.argmax(residuals))
        raise NumericalError(
            f"eigenpair {bad} residual {worst:g} exceeds bound {bound:g}")


def solve_gevp_iterative(sys, k: int, seed: int = 0):
    """Shift-invert ARPACK variant of solve_gevp acting on the assembled
    system without forming S densely.

    The inverse apply routes through one sparse LU of the full saddle-point
    block matrix.  The iteration budget is 500 per requested eigenvalue;
    exhausting it is an error, never a silent partial result.
    """
    t = sys.num_triangles
    if not (1 <= k <= t - 1):
        raise NumericalError(
            f"iterative path needs 1 <= k <= {t - 1}, got {k}")
    d = sys.D
    msolve = sys.solve_flux_mass

    def s_matvec(x):
        return sys.B @ msolve(sys.B.T @ x) + sys.C * x

    s_op = spla.LinearOperator((t, t), matvec=s_matvec, dtype=float)
    k_block = sp.bmat(
        [[sys.M, sys.B.T], [sys.B, -sp.diags(sys.C)]], format="csc")
    try:
        k_lu = spla.splu(k_block)
    except RuntimeError as exc:
        raise NumericalError(
            f"saddle-point factorization failed: {exc}") from exc

    ne = sys.num_edges

    def s_inv(v):
        rhs = np.concatenate([np.zeros(ne), -np.asarray(v)])
        return k_lu.solve(rhs)[ne:]

    opinv = spla.LinearOperator((t, t), matvec=s_inv, dtype=float)
    rng = np.random.default_rng(seed)
    v0 = rng.standard_normal(t)
    try:
        vals, y = spla.eigsh(
            s_op, k=k, M=sp.diags(d).tocsc(), sigma=0.0, OPinv=opinv,
            which="LM", v0=v0, maxiter=ITER_BUDGET_PER_EIGENVALUE * k)
    except spla.ArpackNoConvergence as exc:
        raise NumericalError(
            f"iterative eigensolver did not converge for k={k}: {exc}"
        ) from exc
    order = np.argsort(vals)
    vals = vals[order]
    vecs = y[:, order]
    # eigsh returns D-orthonormal vectors; renormalize against roundoff
    vecs = vecs / np.sqrt(np.sum(d[:, None] * vecs**2, axis=0))[None, :]
    vecs = _fix_signs(vecs)
    sv = np.column_stack([s_matvec(vecs[:, j]) for j in range(k)])
    residuals = _residuals(sv, d[:, None] * vecs, vals)
    # cheap lower bound on ||S||_F keeps the residual check conservative
    s_norm = max(float(vals[j] / (vecs[:, j] @ vecs[:, j]))
                 for j in range(k))
    _check_residuals(residuals, s_norm)
    return vals, vecs, residuals


def recover_flux(u: np.ndarray, sys) -> np.ndarray:
    """Back-substitute sigma = -M^-1 B^T u, reusing the mass factorization.

    The defining residual ||M sigma + B^T u|| must stay below FLUX_RTOL
    times ||B^T u||.
    """
    rhs = sys.B.T @ u
    sigma = -sys.solve_flux_mass(rhs)
    rhs_norm = float(np.linalg.norm(rhs))
    if rhs_norm > 0:
        res = float(np.linalg.norm(sys.M @ sigma + rhs))
        if res > FLUX_RTOL * rhs_norm:
            raise NumericalError(
                f"flux recovery residual {res:g} exceeds "
                f"{FLUX_RTOL:g} * {rhs_norm:g}")
    return sigma


def solve_mixed_eigenproblem(mesh, sys, k: int, method: str = "dense",
                             seed: int = 0) -> EigenResult:
    """Solve for the k smallest eigenpairs and recover fluxes.

    `method` is "dense" (Schur complement plus a dense symmetric solver) or
    "iterative" (shift-invert ARPACK).
    """
    if method == "dense":
        s = schur_complement(sys)
        vals, vecs, residuals = solve_gevp(s, sys.D, k)
    elif method == "iterative":
        vals, vecs, residuals = solve_gevp_iterative(sys, k, seed=seed)
    else:
        raise NumericalError(f"unknown solver method {method!r}")
    pairs = [
        EigenPair(lambda_h=float(vals[j]), u=vecs[:, j],
                  sigma=recover_flux(vecs[:, j], sys),
                  residual=float(residuals[j]))
        for j in range(k)
    ]
    return EigenResult(n=mesh.n, h=mesh.h, num_edges=sys.num_edges,
                       num_triangles=sys.num_triangles, pairs=pairs)
