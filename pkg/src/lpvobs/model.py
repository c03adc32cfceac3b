"""Polytopic LPV plant description, validation and vertex blending.

The plant is a discrete-time bounded-error system whose dynamics and output
matrices are a known convex combination of N fixed vertex ("constituent")
systems, driven by a known input u, an unknown input d with no model or
bound, and per-vertex norm-bounded noises:

    x[k+1] = sum_i lam[i,k] (A_i x[k] + B_i u[k] + w_i[k]) + G d[k]
    y[k]   = C x[k] + sum_i lam[i,k] (D_i u[k] + v_i[k]) + H d[k]

with ||w_i[k]|| <= eta_w, ||v_i[k]|| <= eta_v, and an initial estimate
x0_hat satisfying ||x0 - x0_hat|| <= delta0_x.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ModelStructureError, WeightError
from .linalg import DEFAULT_RANK_TOL, svd_rank

SIMPLEX_TOL = 1e-12


def _matrix(value, shape, name):
    M = np.array(value, dtype=float)
    if M.ndim == 1 and shape[1] == 1:
        M = M.reshape(-1, 1)
    if M.ndim != 2 or M.shape != shape:
        raise ModelStructureError(
            f"matrix {name}: expected shape {shape}, got {M.shape}"
        )
    M.flags.writeable = False
    return M


@dataclass(frozen=True)
class LpvModel:
    """Vertex matrices, attack channels, noise bounds and dimensions.

    A, B, D are per-vertex tuples of length N; C, G, H are shared. The
    unknown input enters the dynamics through G (n x p) and the output
    through H (l x p). Immutable after construction; safe to share.
    """

    A: tuple
    B: tuple
    C: np.ndarray
    D: tuple
    G: np.ndarray
    H: np.ndarray
    eta_w: float
    eta_v: float
    x0_hat: np.ndarray
    delta0_x: float

    def __post_init__(self):
        A = tuple(np.array(Ai, dtype=float) for Ai in self.A)
        if len(A) < 1:
            raise ModelStructureError("at least one vertex system is required")
        if A[0].ndim != 2 or A[0].shape[0] != A[0].shape[1]:
            raise ModelStructureError(f"matrix A[0] must be square, got {A[0].shape}")
        n = A[0].shape[0]
        C = np.array(self.C, dtype=float)
        if C.ndim != 2 or C.shape[1] != n:
            raise ModelStructureError(f"matrix C: expected (l, {n}), got {C.shape}")
        l = C.shape[0]
        G = np.array(self.G, dtype=float).reshape(n, -1)
        p = G.shape[1]
        N = len(A)
        if len(self.B) != N or len(self.D) != N:
            raise ModelStructureError(
                f"vertex count mismatch: len(A)={N}, len(B)={len(self.B)}, len(D)={len(self.D)}"
            )
        m = np.array(self.B[0], dtype=float).reshape(n, -1).shape[1]
        A = tuple(_matrix(Ai, (n, n), f"A[{i}]") for i, Ai in enumerate(A))
        B = tuple(_matrix(Bi, (n, m), f"B[{i}]") for i, Bi in enumerate(self.B))
        D = tuple(_matrix(Di, (l, m), f"D[{i}]") for i, Di in enumerate(self.D))
        C = _matrix(C, (l, n), "C")
        G = _matrix(G, (n, p), "G")
        H = _matrix(self.H, (l, p), "H")
        x0 = np.array(self.x0_hat, dtype=float).reshape(-1)
        if x0.shape != (n,):
            raise ModelStructureError(f"x0_hat: expected length {n}, got {x0.shape}")
        x0.flags.writeable = False
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "D", D)
        object.__setattr__(self, "G", G)
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "x0_hat", x0)
        object.__setattr__(self, "eta_w", float(self.eta_w))
        object.__setattr__(self, "eta_v", float(self.eta_v))
        object.__setattr__(self, "delta0_x", float(self.delta0_x))

    @property
    def N(self) -> int:
        return len(self.A)

    @property
    def n(self) -> int:
        return self.A[0].shape[0]

    @property
    def m(self) -> int:
        return self.B[0].shape[1]

    @property
    def p(self) -> int:
        return self.G.shape[1]

    @property
    def l(self) -> int:
        return self.C.shape[0]


@dataclass(frozen=True)
class ValidationReport:
    """Pass/fail record for each structural assumption."""

    checks: tuple  # of (name, passed, detail)

    @property
    def ok(self) -> bool:
        return all(passed for _, passed, _ in self.checks)

    def render(self) -> str:
        lines = []
        for name, passed, detail in self.checks:
            mark = "PASS" if passed else "FAIL"
            lines.append(f"[{mark}] {name}: {detail}")
        lines.append(f"model accepted: {self.ok}")
        return "\n".join(lines)


def validate_model(model: LpvModel, rank_tol: float = DEFAULT_RANK_TOL) -> ValidationReport:
    """Check the standing structural assumptions and report each one.

    The model is accepted iff every check passes. Deterministic and
    side-effect free.
    """
    checks = []
    n, l, p, m = model.n, model.l, model.p, model.m
    checks.append((
        "dimension ordering n >= l >= 1",
        n >= l >= 1,
        f"n={n}, l={l}",
    ))
    checks.append((
        "dimension ordering l >= p >= 0",
        l >= p >= 0,
        f"l={l}, p={p}",
    ))
    checks.append(("known-input dimension m >= 0", m >= 0, f"m={m}"))
    r = svd_rank(np.vstack([model.G, model.H]), rank_tol)
    checks.append((
        "rank [G; H] == p",
        r == p,
        f"rank={r}, p={p}",
    ))
    checks.append(("process-noise bound eta_w >= 0", model.eta_w >= 0.0, f"eta_w={model.eta_w}"))
    checks.append(("measurement-noise bound eta_v >= 0", model.eta_v >= 0.0, f"eta_v={model.eta_v}"))
    checks.append((
        "initial radius delta0_x >= 0",
        model.delta0_x >= 0.0,
        f"delta0_x={model.delta0_x}",
    ))
    return ValidationReport(checks=tuple(checks))


def validate_weights(lam: Sequence[float], N: int, tol: float = SIMPLEX_TOL) -> np.ndarray:
    """Validate a scheduling weight vector against the unit simplex.

    Entries must lie in [0, 1] and sum to 1, each within `tol`. Weights
    within tolerance are renormalized; anything worse is rejected rather
    than silently repaired.
    """
    lam = np.asarray(lam, dtype=float).reshape(-1)
    if lam.shape != (N,):
        raise WeightError(f"weight vector: expected length {N}, got {lam.shape[0]}")
    if not np.all(np.isfinite(lam)):
        raise WeightError("weight vector contains non-finite entries")
    if np.any(lam < -tol) or np.any(lam > 1.0 + tol):
        raise WeightError(f"weights outside [0, 1]: {lam}")
    s = float(lam.sum())
    if abs(s - 1.0) > tol:
        raise WeightError(f"weights sum to {s!r}, expected 1 within {tol}")
    lam = np.clip(lam, 0.0, 1.0)
    return lam / lam.sum()


def evaluate_at(model: LpvModel, lam: Sequence[float]):
    """Blend the vertex matrices at the given simplex weights.

    Returns (A_lam, B_lam, D_lam) = (sum_i lam_i A_i, sum_i lam_i B_i,
    sum_i lam_i D_i). Affine in lam.
    """
    w = validate_weights(lam, model.N)
    A = sum(wi * Ai for wi, Ai in zip(w, model.A))
    B = sum(wi * Bi for wi, Bi in zip(w, model.B))
    D = sum(wi * Di for wi, Di in zip(w, model.D))
    return A, B, D
