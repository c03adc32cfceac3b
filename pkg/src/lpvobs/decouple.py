"""SVD-based decoupling of the unknown-input feedthrough channel.

The feedthrough matrix H is factored as H = U1 Sigma V1^T with U = [U1 U2]
and V = [V1 V2] orthogonal. The unknown input splits into d1 = V1^T d
(visible in the output through Sigma) and d2 = V2^T d (feedthrough-free);
the output splits into z1 = U1^T y and z2 = U2^T y. The gain constants
M1 = Sigma^-1 and M2 = (C2 G2)^+ are the unique choices for which the
input/state estimation errors can stay bounded, which also requires
rank(C2 G2) = p - p_H.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BoundednessError
from .linalg import DEFAULT_RANK_TOL, pinv_tol, svd_rank
from .model import LpvModel


@dataclass(frozen=True)
class DecoupledModel:
    """All transform products derived from the SVD of H.

    Empty (0-sized) blocks are the degenerate cases: p_H = 0 means no
    feedthrough (Sigma, U1, V1, M1 empty, z2 = y); p_H = p means the whole
    unknown input feeds through (V2, G2, M2 empty). Products with empty
    matrices contribute zeros, so every downstream formula stays total.
    Immutable after construction.
    """

    model: LpvModel
    p_H: int
    Sigma: np.ndarray   # p_H x p_H, diagonal, positive, nonincreasing
    U1: np.ndarray      # l x p_H
    U2: np.ndarray      # l x (l - p_H)
    V1: np.ndarray      # p x p_H
    V2: np.ndarray      # p x (p - p_H)
    T1: np.ndarray      # = U1^T
    T2: np.ndarray      # = U2^T
    G1: np.ndarray      # = G V1
    G2: np.ndarray      # = G V2
    H1: np.ndarray      # = H V1 = U1 Sigma
    C1: np.ndarray      # = U1^T C
    C2: np.ndarray      # = U2^T C
    D1: tuple           # per vertex, U1^T D_i
    D2: tuple           # per vertex, U2^T D_i
    M1: np.ndarray      # = Sigma^-1
    M2: np.ndarray      # = (C2 G2)^+
    Phi: np.ndarray     # = I - G2 M2 C2
    rank_C2G2: int
    rank_margin: tuple  # (smallest kept sigma, largest dropped sigma) of H

    @property
    def n(self) -> int:
        return self.model.n

    @property
    def q(self) -> int:
        """Dimension of the feedthrough-free output channel z2."""
        return self.model.l - self.p_H


def _fix_signs(U1, V1, U2, V2):
    # Deterministic sign convention: first nonzero component of each left
    # singular vector positive, paired right vector flipped along with it;
    # null-space columns normalized independently the same way.
    def lead_sign(col):
        nz = np.nonzero(np.abs(col) > 0.0)[0]
        if nz.size == 0:
            return 1.0
        return 1.0 if col[nz[0]] > 0 else -1.0

    for j in range(U1.shape[1]):
        s = lead_sign(U1[:, j])
        U1[:, j] *= s
        V1[:, j] *= s
    for j in range(U2.shape[1]):
        U2[:, j] *= lead_sign(U2[:, j])
    for j in range(V2.shape[1]):
        V2[:, j] *= lead_sign(V2[:, j])
    return U1, V1, U2, V2


def decouple(
    model: LpvModel,
    rank_tol: float = DEFAULT_RANK_TOL,
    require_boundedness: bool = True,
) -> DecoupledModel:
    """Build all transform products for the given plant.

    Raises BoundednessError when rank(C2 G2) != p - p_H, since then no
    gain can keep the estimation errors bounded. Pass
    require_boundedness=False to obtain the products anyway for
    diagnostic reporting.
    """
    l, p, n = model.l, model.p, model.n
    H = model.H
    p_H = 0
    if p > 0 and np.any(H):
        U, s_all, Vt = np.linalg.svd(H, full_matrices=True)
        p_H = int(np.sum(s_all > rank_tol * s_all[0])) if s_all[0] > 0 else 0
    if p_H == 0:
        s = np.zeros(0)
        U1 = np.zeros((l, 0))
        V1 = np.zeros((p, 0))
        # The orthogonal complements are arbitrary here; identity keeps the
        # transform deterministic and makes z2 = y.
        U2 = np.eye(l)
        V2 = np.eye(p)
        kept = 0.0
        dropped = float(s_all[0]) if p > 0 and np.any(H) else 0.0
    else:
        U1, U2 = U[:, :p_H].copy(), U[:, p_H:].copy()
        V = Vt.T
        V1, V2 = V[:, :p_H].copy(), V[:, p_H:].copy()
        U1, V1, U2, V2 = _fix_signs(U1, V1, U2, V2)
        s = s_all[:p_H]
        kept = float(s[-1])
        dropped = float(s_all[p_H]) if p_H < s_all.size else 0.0
    Sigma = np.diag(s)
    T1, T2 = U1.T.copy(), U2.T.copy()
    G1, G2 = model.G @ V1, model.G @ V2
    H1 = H @ V1
    C1, C2 = T1 @ model.C, T2 @ model.C
    D1 = tuple(T1 @ Di for Di in model.D)
    D2 = tuple(T2 @ Di for Di in model.D)
    M1 = np.diag(1.0 / s) if p_H > 0 else np.zeros((0, 0))
    C2G2 = C2 @ G2
    rank_C2G2 = svd_rank(C2G2, rank_tol)
    if require_boundedness and rank_C2G2 != p - p_H:
        raise BoundednessError(
            f"boundedness precondition violated: rank(C2 G2) = {rank_C2G2}, "
            f"expected p - p_H = {p - p_H}; no gain can bound the estimation errors"
        )
    M2 = pinv_tol(C2G2, rank_tol)
    Phi = np.eye(n) - G2 @ M2 @ C2
    return DecoupledModel(
        model=model, p_H=p_H, Sigma=Sigma,
        U1=U1, U2=U2, V1=V1, V2=V2, T1=T1, T2=T2,
        G1=G1, G2=G2, H1=H1, C1=C1, C2=C2, D1=D1, D2=D2,
        M1=M1, M2=M2, Phi=Phi, rank_C2G2=rank_C2G2,
        rank_margin=(kept, dropped),
    )


def split_output(dm: DecoupledModel, y: np.ndarray):
    """Split a raw measurement into (z1, z2) = (T1 y, T2 y).

    The transform is orthogonal, so ||z1||^2 + ||z2||^2 = ||y||^2.
    """
    y = np.asarray(y, dtype=float).reshape(-1)
    if y.shape[0] != dm.model.l:
        raise ValueError(f"measurement: expected length {dm.model.l}, got {y.shape[0]}")
    return dm.T1 @ y, dm.T2 @ y


def split_unknown_input(dm: DecoupledModel, d: np.ndarray):
    """Split an unknown input into its orthogonal components (V1^T d, V2^T d)."""
    d = np.asarray(d, dtype=float).reshape(-1)
    if d.shape[0] != dm.model.p:
        raise ValueError(f"unknown input: expected length {dm.model.p}, got {d.shape[0]}")
    return dm.V1.T @ d, dm.V2.T @ d


def recombine_unknown_input(dm: DecoupledModel, d1: np.ndarray, d2: np.ndarray) -> np.ndarray:
    """Inverse of split_unknown_input: V1 d1 + V2 d2."""
    d1 = np.asarray(d1, dtype=float).reshape(-1)
    d2 = np.asarray(d2, dtype=float).reshape(-1)
    return dm.V1 @ d1 + dm.V2 @ d2
