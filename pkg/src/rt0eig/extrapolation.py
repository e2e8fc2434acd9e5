"""Richardson extrapolation and convergence-order estimation.

Eigenvalue sequences computed on meshes with n doubling between levels are
matched by ascending index, grouped into clusters when the gap on the
finest level is negligible (a multiple eigenvalue split by discretization),
extrapolated pairwise, and turned into observed-order tables.
"""

import math
from dataclasses import dataclass, field

import numpy as np

# Relative gap between per-index extrapolated limits below which adjacent
# eigenvalues are treated as one multiple eigenvalue.  Raw finest-level
# values are useless for this: a multiple eigenvalue splits at O(h^2), the
# same magnitude as the discretization error itself, while the extrapolated
# limits of its members agree to the (much smaller) extrapolation error.
CLUSTER_RTOL = 1e-6

# Errors at or below this magnitude are saturated: no order is reported.
SATURATION = 1e-13


def richardson(coarse: float, fine: float, p: float = 2.0) -> float:
    """Cancel the leading h^p error term from values at h and h/2.

    Returns (2^p * fine - coarse) / (2^p - 1); exact whenever the inputs
    follow value + C h^p.
    """
    if p <= 0:
        raise ValueError(f"expansion order must be positive, got {p}")
    f = 2.0 ** p
    return (f * fine - coarse) / (f - 1.0)


def observed_order(errors) -> np.ndarray:
    """Orders log2(e_i / e_{i+1}) for errors on meshes with h halving.

    Nonpositive or saturated entries yield NaN for the ratios they touch
    rather than raising.
    """
    e = np.asarray(errors, dtype=float)
    if e.size < 2:
        raise ValueError("need at least two error values")
    orders = np.full(e.size - 1, np.nan)
    for i in range(e.size - 1):
        if e[i] > SATURATION and e[i + 1] > SATURATION:
            orders[i] = math.log2(e[i] / e[i + 1])
    return orders


@dataclass(frozen=True)
class LevelSequence:
    """Eigenvalues matched across a doubling family of meshes.

    levels holds (n, h, eigenvalues) per mesh; matched is a (k, L) array
    with one row per eigenvalue index; clusters lists groups of adjacent
    indices treated as one multiple eigenvalue.
    """

    levels: list[tuple[int, float, np.ndarray]]
    matched: np.ndarray
    clusters: list[list[int]]

    def cluster_means(self) -> np.ndarray:
        """(num_clusters, L) representative value per cluster and level."""
        return np.vstack([self.matched[c].mean(axis=0) for c in self.clusters])


def match_and_cluster(levels, p: float = 2.0) -> LevelSequence:
    """Match eigenvalues across levels by ascending index and cluster them.

    `levels` is a sequence of (n, h, eigenvalues) with n strictly doubling
    and eigenvalues ascending within each level.  Adjacent indices i, i+1
    are clustered when their order-p extrapolated limits, taken from the
    two finest levels, agree to within CLUSTER_RTOL * max(1, |limit_i|);
    clustering is transitive so a triple eigenvalue forms one group.
    """
    levels = [(int(n), float(h), np.asarray(vals, dtype=float))
              for n, h, vals in levels]
    if len(levels) < 2:
        raise ValueError("need at least two levels")
    k = levels[0][2].size
    for n, _, vals in levels:
        if vals.size != k:
            raise ValueError(
                f"inconsistent eigenvalue count: level n={n} has "
                f"{vals.size}, expected {k}")
        if np.any(np.diff(vals) < 0):
            raise ValueError(f"eigenvalues not ascending on level n={n}")
    for (n0, _, _), (n1, _, _) in zip(levels, levels[1:]):
        if n1 != 2 * n0:
            raise ValueError(
                f"levels must double: {n0} followed by {n1}")

    matched = np.vstack([vals for _, _, vals in levels]).T  # (k, L)
    limits = np.array([richardson(matched[i, -2], matched[i, -1], p)
                       for i in range(k)])
    clusters: list[list[int]] = [[0]]
    for i in range(1, k):
        gap = abs(limits[i] - limits[i - 1])
        if gap <= CLUSTER_RTOL * max(1.0, abs(limits[i - 1])):
            clusters[-1].append(i)
        else:
            clusters.append([i])
    return LevelSequence(levels=levels, matched=matched, clusters=clusters)


@dataclass
class ClusterRow:
    """Convergence data of one eigenvalue (or multiple-eigenvalue cluster)."""

    indices: list[int]          # 0-based member indices
    label: str                  # 1-based, e.g. "1" or "2-3"
    raw: np.ndarray             # (L,) cluster-mean value per level
    extrapolated: np.ndarray    # (L-1,) value per level pair
    reference: float | None = None
    err_raw: np.ndarray | None = None      # (L,)
    err_extrap: np.ndarray | None = None   # (L-1,)
    order_raw: np.ndarray | None = None    # (L-1,), NaN where saturated
    order_extrap: np.ndarray | None = None  # (L-2,), NaN where saturated


@dataclass
class SupercloseBlock:
    """Per-level eigenfunction error norms for one simple mode."""

    mode: tuple[int, int]
    distance: np.ndarray        # D-weighted projection-to-discrete distance
    distance_plain: np.ndarray  # same difference in the Euclidean norm
    err_u: np.ndarray
    err_sigma: np.ndarray
    order_distance: np.ndarray = None
    order_err_u: np.ndarray = None
    order_err_sigma: np.ndarray = None

    def __post_init__(self):
        self.order_distance = observed_order(self.distance)
        self.order_err_u = observed_order(self.err_u)
        self.order_err_sigma = observed_order(self.err_sigma)


@dataclass
class ConvergenceTable:
    """Raw, extrapolated and superclose columns of one study."""

    level_ns: list[int]
    level_hs: list[float]
    expansion_order: float
    reference_kind: str  # "analytic" or "self"
    rows: list[ClusterRow] = field(default_factory=list)
    superclose: SupercloseBlock | None = None


def _cluster_label(indices) -> str:
    lo, hi = indices[0] + 1, indices[-1] + 1
    return str(lo) if lo == hi else f"{lo}-{hi}"


def build_table(seq: LevelSequence, p: float = 2.0,
                reference: np.ndarray | None = None) -> ConvergenceTable:
    """Extrapolate each cluster and attach errors and observed orders.

    `reference` gives one analytic eigenvalue per matched index; when it is
    None the table is self-referenced: each cluster's reference is the
    Richardson extrapolation of its two finest raw values.
    """
    table = ConvergenceTable(
        level_ns=[n for n, _, _ in seq.levels],
        level_hs=[h for _, h, _ in seq.levels],
        expansion_order=p,
        reference_kind="analytic" if reference is not None else "self",
    )
    nlev = len(seq.levels)
    for indices, raw in zip(seq.clusters, seq.cluster_means()):
        extrap = np.array([richardson(raw[i], raw[i + 1], p)
                           for i in range(nlev - 1)])
        if reference is not None:
            ref = float(np.mean([reference[i] for i in indices]))
        else:
            ref = richardson(raw[-2], raw[-1], p)
        err_raw = np.abs(raw - ref)
        err_extrap = np.abs(extrap - ref)
        row = ClusterRow(
            indices=list(indices),
            label=_cluster_label(indices),
            raw=raw,
            extrapolated=extrap,
            reference=ref,
            err_raw=err_raw,
            err_extrap=err_extrap,
            order_raw=observed_order(err_raw),
            order_extrap=(observed_order(err_extrap)
                          if nlev >= 3 else np.empty(0)),
        )
        table.rows.append(row)
    return table
