"""Structural pre-flight checks for observer existence.

An observer with bounded set-valued estimates can exist only if every
vertex quadruple (A_i, G, C, H) is strongly detectable. The working test
decomposes this into (a) rank(C2 G2) = p - p_H and (b) detectability of
the pair (Abar_i, C2), where

    Abar_i = (I - G2 M2 C2) (A_i - G1 M1 C1).

Pair detectability is decided by the PBH rank test at the eigenvalues on
or outside the unit circle. As an independent cross-check, the Rosenbrock
pencil [zI - A, -G; C, H] is evaluated at each unstable candidate zero;
a disagreement between the two routes is flagged inconclusive rather than
silently passed.

The corresponding time-varying stability property of the scheduled pair
is NOT certified here: the per-vertex check is a heuristic diagnostic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .decouple import DecoupledModel
from .linalg import svd_rank
from .model import LpvModel

STABILITY_TOL = 1e-9
RANK_TOL = 1e-10


def abar_vertices(dm: DecoupledModel) -> list:
    """Error-transition matrices Abar_i = Phi (A_i - G1 M1 C1), one per vertex.

    Computed once here and reused by synthesis; the transform products are
    never recomputed elsewhere.
    """
    GM = dm.G1 @ dm.M1 @ dm.C1
    return [dm.Phi @ (Ai - GM) for Ai in dm.model.A]


def ahat_vertices(dm: DecoupledModel) -> list:
    """Pre-projection transition matrices Ahat_i = A_i - G1 M1 C1."""
    GM = dm.G1 @ dm.M1 @ dm.C1
    return [Ai - GM for Ai in dm.model.A]


def pair_detectability(A: np.ndarray, C: np.ndarray, tol: float = STABILITY_TOL) -> bool:
    """PBH test: every eigenvalue of A with |mu| >= 1 - tol must satisfy
    rank [mu I - A; C] = n."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    C = np.asarray(C, dtype=float).reshape(-1, A.shape[0])
    n = A.shape[0]
    if n == 0:
        return True
    for mu in np.linalg.eigvals(A):
        if abs(mu) >= 1.0 - tol:
            M = np.vstack([mu * np.eye(n) - A, C])
            if _complex_rank(M) < n:
                return False
    return True


def _complex_rank(M: np.ndarray, rank_tol: float = RANK_TOL) -> int:
    if min(M.shape) == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    if s[0] == 0.0:
        return 0
    return int(np.sum(s > rank_tol * s[0]))


def _rosenbrock_rank(A, G, C, H, z) -> int:
    n, p = A.shape[0], G.shape[1]
    top = np.hstack([z * np.eye(n) - A, -G])
    bot = np.hstack([C.astype(complex), H.astype(complex)])
    return _complex_rank(np.vstack([top, bot]))


@dataclass(frozen=True)
class VertexCheck:
    strongly_detectable: bool
    pair_detectable: bool
    invariant_zeros: tuple      # PBH-failing eigenvalues of Abar_i (complex)
    boundary_eigenvalues: tuple  # |mu| within STABILITY_TOL of 1: warn, never pass
    inconclusive: bool          # PBH and Rosenbrock disagreed at some candidate


def strong_detectability(
    vertex, dm: DecoupledModel, tol: float = STABILITY_TOL
) -> tuple:
    """Decide strong detectability of one vertex quadruple (A, G, C, H).

    Returns (bool, zeros) where zeros lists the candidate invariant zeros
    (eigenvalues of Abar at which the PBH rank drops). The boolean is the
    conjunction of the rank condition and pair detectability; if the
    Rosenbrock cross-check disagrees with PBH at any unstable candidate,
    the result is flagged inconclusive and reported as a failure.
    """
    check = _check_vertex(vertex, dm, tol)
    return check.strongly_detectable and not check.inconclusive, list(check.invariant_zeros)


def _check_vertex(vertex, dm: DecoupledModel, tol: float = STABILITY_TOL) -> VertexCheck:
    A, G, C, H = vertex
    A = np.atleast_2d(np.asarray(A, dtype=float))
    n = A.shape[0]
    GM = dm.G1 @ dm.M1 @ dm.C1
    Abar = dm.Phi @ (A - GM)
    C2 = dm.C2
    rank_ok = dm.rank_C2G2 == dm.model.p - dm.p_H
    zeros = []
    boundary = []
    pair_ok = True
    inconclusive = False
    eigs = np.linalg.eigvals(Abar) if n > 0 else np.array([])
    for mu in eigs:
        M = np.vstack([mu * np.eye(n) - Abar, C2.astype(complex)])
        pbh_drop = _complex_rank(M) < n
        if pbh_drop:
            zeros.append(complex(mu))
        if abs(abs(mu) - 1.0) <= tol:
            boundary.append(complex(mu))
        if abs(mu) >= 1.0 - tol:
            if pbh_drop:
                pair_ok = False
            # Independent route: the candidate must show up as a rank drop
            # of the full pencil exactly when PBH drops.
            rb_rank = _rosenbrock_rank(A, np.asarray(G, dtype=float).reshape(n, -1),
                                       np.asarray(C, dtype=float).reshape(-1, n),
                                       np.asarray(H, dtype=float).reshape(dm.model.l, -1),
                                       complex(mu))
            rb_drop = rb_rank < n + dm.model.p
            if rb_drop != pbh_drop:
                inconclusive = True
    strong = rank_ok and pair_ok
    return VertexCheck(
        strongly_detectable=strong,
        pair_detectable=pair_ok,
        invariant_zeros=tuple(zeros),
        boundary_eigenvalues=tuple(boundary),
        inconclusive=inconclusive,
    )


@dataclass(frozen=True)
class DetectabilityReport:
    """Aggregated structural diagnosis across all vertices."""

    per_vertex_strong_detectable: tuple
    per_vertex_pair_detectable: tuple
    invariant_zeros: tuple        # tuple of tuples, per vertex
    boundary_warnings: tuple      # per vertex, near-unit-circle eigenvalues
    inconclusive: tuple           # per vertex PBH/Rosenbrock disagreement
    rank_condition_ok: bool
    overall_necessary_ok: bool

    def render(self) -> str:
        lines = [f"rank condition rank(C2 G2) = p - p_H: {'ok' if self.rank_condition_ok else 'VIOLATED'}"]
        for i, strong in enumerate(self.per_vertex_strong_detectable):
            mark = "ok" if strong else "NOT strongly detectable"
            extra = ""
            if self.invariant_zeros[i]:
                zs = ", ".join(f"{z:.6g} (|z|={abs(z):.6g})" for z in self.invariant_zeros[i])
                extra += f"; candidate zeros: {zs}"
            if self.boundary_warnings[i]:
                extra += "; WARNING: eigenvalues near the unit circle"
            if self.inconclusive[i]:
                extra += "; INCONCLUSIVE: rank-test routes disagree"
            lines.append(f"vertex {i + 1}: {mark}{extra}")
        lines.append(f"observer existence necessary condition: {'satisfied' if self.overall_necessary_ok else 'FAILED'}")
        return "\n".join(lines)


def existence_report(model: LpvModel, dm: DecoupledModel, tol: float = STABILITY_TOL) -> DetectabilityReport:
    """Run all vertex checks and aggregate the existence verdict.

    overall_necessary_ok = rank condition AND every vertex strongly
    detectable (and no inconclusive vertex). A False verdict means no
    bounded observer of this family exists for the plant; synthesis should
    be refused unless explicitly overridden.
    """
    checks = [
        _check_vertex((Ai, model.G, model.C, model.H), dm, tol)
        for Ai in model.A
    ]
    rank_ok = dm.rank_C2G2 == model.p - dm.p_H
    strong = tuple(c.strongly_detectable and not c.inconclusive for c in checks)
    return DetectabilityReport(
        per_vertex_strong_detectable=strong,
        per_vertex_pair_detectable=tuple(c.pair_detectable for c in checks),
        invariant_zeros=tuple(c.invariant_zeros for c in checks),
        boundary_warnings=tuple(c.boundary_eigenvalues for c in checks),
        inconclusive=tuple(c.inconclusive for c in checks),
        rank_condition_ok=rank_ok,
        overall_necessary_ok=rank_ok and all(strong),
    )
