"""Observer gain synthesis by semidefinite programming.

The gain L_tilde (applied to the feedthrough-free output channel z2) is
found by minimizing the certified noise-to-error amplification eta subject
to one linear matrix inequality block per vertex, in the variables
(eta, S, Y) with S symmetric positive definite and L_tilde = S^-1 Y:

    [ S                  Abar_i^T (S - C2^T Y^T)   0                  I     ]
    [ (S - Y C2) Abar_i  S                         [S - Y C2, -Y]     0     ]
    [ 0                  [S - Y C2, -Y]^T          eta I              0     ]
    [ I                  0                         0                  eta I ]  >= margin I

Strict positivity is approximated by a margin proportional to tr(S)/n.
A feasibility variant with a line search on eta trades optimality for a
certified contraction factor max_i ||A_e,i|| < 1, which makes the error
radii converge to a steady state.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .decouple import DecoupledModel
from .detect import abar_vertices, ahat_vertices, existence_report
from .errors import ConvergenceError, InfeasibleError, StructuralError
from .linalg import cond_2, spectral_norm, sym_min_eig

SOLVER_ORDER = ("CLARABEL", "SCS", "CVXOPT")
ACCEPTED_STATUSES = ("optimal", "optimal_inaccurate")
INFEASIBLE_STATUSES = ("infeasible", "infeasible_inaccurate")


@dataclass
class SynthesisOptions:
    margin: float = 1e-8          # relative: block >= (margin * tr(S)/n) I
    solvers: tuple = SOLVER_ORDER
    check_existence: bool = True  # refuse when the necessary condition fails
    force: bool = False           # override a failing existence report
    cond_limit: float = 1e12      # reject certificates with cond(S) beyond this
    eta_lo: float = 1e-4          # line-search bracket for the convergent design
    eta_hi: float = 1e4
    eta_rtol: float = 1e-3
    max_bisect: int = 60


@dataclass(frozen=True)
class SynthesisCertificate:
    """An SDP certificate (eta, S, Y) together with the derived gain.

    margin is the verified lower bound on the smallest eigenvalue across
    all vertex blocks at (S, Y, eta); min_block_eig is the achieved value.
    """

    eta: float
    S: np.ndarray
    Y: np.ndarray
    L_tilde: np.ndarray
    margin: float
    min_block_eig: float
    solver_status: str
    solver_name: str
    cond_S: float
    warnings: tuple = ()


@dataclass(frozen=True)
class ErrorConstants:
    """Derived constants of the error dynamics for a fixed gain.

    theta bounds the error-transition norm: theta = max_i ||A_e,i|| with
    A_e,i = Psi Phi (A_i - G1 M1 C1). eta_bar bounds the per-step lumped
    noise amplification, so delta_x[k] = delta_x[k-1] * theta + eta_bar is
    a sound state-error radius recursion.

    Two input-error coefficients are kept: beta is the norm built on the
    post-update transitions A_e,i; beta_wc is built on the pre-update
    transitions Ahat_i = A_i - G1 M1 C1 and is the coefficient that
    actually bounds the input estimation error (the input estimate is
    formed from the predicted state, before the measurement update acts).
    Input radii use beta_wc; beta is kept for reporting.
    """

    Psi: np.ndarray
    Phi: np.ndarray
    A_e: tuple
    theta: float
    beta: float
    beta_wc: float
    Gamma: np.ndarray
    eta_bar: float
    R: np.ndarray
    d_noise_bound: float
    V1M1C1: np.ndarray
    V2M2C2: np.ndarray


def lmi_block(dm: DecoupledModel, i: int, S: np.ndarray, Y: np.ndarray, eta: float) -> np.ndarray:
    """Assemble the numeric vertex block at (S, Y, eta); exactly symmetric."""
    n, q = dm.n, dm.q
    Abar = abar_vertices(dm)[i]
    S = np.asarray(S, dtype=float)
    Y = np.asarray(Y, dtype=float).reshape(n, q)
    C2 = dm.C2
    dim = 4 * n + q
    M = np.zeros((dim, dim))
    r1 = slice(0, n)
    r2 = slice(n, 2 * n)
    r3 = slice(2 * n, 3 * n + q)
    r4 = slice(3 * n + q, dim)
    B12 = Abar.T @ (S - C2.T @ Y.T)
    B23 = np.hstack([S - Y @ C2, -Y])
    M[r1, r1] = S
    M[r1, r2] = B12
    M[r2, r1] = B12.T
    M[r1, r4] = np.eye(n)
    M[r4, r1] = np.eye(n)
    M[r2, r2] = S
    M[r2, r3] = B23
    M[r3, r2] = B23.T
    M[r3, r3] = eta * np.eye(n + q)
    M[r4, r4] = eta * np.eye(n)
    return M


def verify_lmi(dm: DecoupledModel, S, Y, eta: float, margin: float = 0.0):
    """Check a certificate by pure eigenvalue computation, independent of
    any solver. Returns (ok, min_block_eig): ok iff the smallest eigenvalue
    across every vertex block is >= margin."""
    mins = [
        sym_min_eig(lmi_block(dm, i, S, Y, eta))
        for i in range(dm.model.N)
    ]
    min_eig = float(min(mins))
    return min_eig >= margin, min_eig


def _cvxpy_blocks(dm: DecoupledModel, S, Y, eta):
    import cvxpy as cp

    n, q = dm.n, dm.q
    C2 = dm.C2
    blocks = []
    for Abar in abar_vertices(dm):
        if q > 0:
            B12 = Abar.T @ (S - C2.T @ Y.T)
            B23 = cp.hstack([S - Y @ C2, -Y])
        else:
            B12 = Abar.T @ S
            B23 = S
        M = cp.bmat([
            [S, B12, np.zeros((n, n + q)), np.eye(n)],
            [B12.T, S, B23, np.zeros((n, n))],
            [np.zeros((n + q, n)), B23.T, eta * np.eye(n + q), np.zeros((n + q, n))],
            [np.eye(n), np.zeros((n, n)), np.zeros((n, n + q)), eta * np.eye(n)],
        ])
        blocks.append(M)
    return blocks


def _solve(dm: DecoupledModel, opts: SynthesisOptions, eta_fixed=None):
    """Run the conic solve; minimize eta when eta_fixed is None, otherwise
    solve the feasibility problem at that eta. Returns a certificate."""
    import cvxpy as cp

    n, q = dm.n, dm.q
    S = cp.Variable((n, n), symmetric=True)
    Y = cp.Variable((n, q)) if q > 0 else np.zeros((n, 0))
    eta = cp.Variable(nonneg=True) if eta_fixed is None else float(eta_fixed)
    dim = 4 * n + q
    # Solve with 10x the requested margin so the returned point still
    # verifies at the reported margin despite solver tolerances.
    head = 10.0 * opts.margin / n
    # S >= I/eta is already implied by the [S, I; I, eta I] corner of each
    # block; the explicit floor just keeps the solver away from the boundary.
    cons = [S >> 1e-12 * np.eye(n)]
    for M in _cvxpy_blocks(dm, S, Y, eta):
        cons.append(M - (head * cp.trace(S)) * np.eye(dim) >> 0)
    objective = cp.Minimize(eta if eta_fixed is None else 0)
    prob = cp.Problem(objective, cons)

    last_exc = None
    for solver in opts.solvers:
        try:
            prob.solve(solver=solver)
        except Exception as exc:  # solver not installed / numerical failure
            last_exc = exc
            continue
        status = prob.status
        if status in INFEASIBLE_STATUSES:
            raise InfeasibleError(
                f"no eta-bounded observer found: solver {solver} reports {status}",
                solver_status=status, solver_name=solver,
            )
        if status not in ACCEPTED_STATUSES or S.value is None:
            last_exc = RuntimeError(f"{solver}: status {status}")
            continue
        S_val = np.asarray(S.value, dtype=float)
        S_val = 0.5 * (S_val + S_val.T)
        Y_val = np.asarray(Y.value, dtype=float).reshape(n, q) if q > 0 else np.zeros((n, 0))
        eta_val = float(eta.value) if eta_fixed is None else float(eta_fixed)
        margin_val = opts.margin * float(np.trace(S_val)) / n
        ok, min_eig = verify_lmi(dm, S_val, Y_val, eta_val, margin_val)
        if not ok:
            last_exc = RuntimeError(
                f"{solver}: solution failed the independent margin check "
                f"(min block eig {min_eig:.3e} < {margin_val:.3e})"
            )
            continue
        warnings = []
        if status == "optimal_inaccurate":
            warnings.append(f"{solver} returned status {status}")
        cS = cond_2(S_val)
        if cS > opts.cond_limit:
            if not opts.force:
                last_exc = RuntimeError(
                    f"{solver}: certificate ill-conditioned, cond(S) = {cS:.3e}"
                )
                continue
            warnings.append(f"cond(S) = {cS:.3e} exceeds {opts.cond_limit:.1e}")
        L = np.linalg.solve(S_val, Y_val) if q > 0 else np.zeros((n, 0))
        return SynthesisCertificate(
            eta=eta_val, S=S_val, Y=Y_val, L_tilde=L,
            margin=margin_val, min_block_eig=min_eig,
            solver_status=status, solver_name=solver,
            cond_S=cS, warnings=tuple(warnings),
        )
    raise InfeasibleError(
        f"no solver produced an acceptable certificate: {last_exc}",
        solver_status="unknown", solver_name=None,
    )


def _ensure_existence(dm: DecoupledModel, opts: SynthesisOptions):
    if opts.check_existence and not opts.force:
        report = existence_report(dm.model, dm)
        if not report.overall_necessary_ok:
            raise StructuralError(
                "existence pre-check failed: some vertex is not strongly "
                "detectable (use force to attempt synthesis anyway)\n"
                + report.render()
            )


def synthesize_hinf(dm: DecoupledModel, opts: SynthesisOptions | None = None) -> SynthesisCertificate:
    """Minimize the certified amplification eta over all admissible gains.

    Raises InfeasibleError (with solver status) when no gain admits a
    finite certificate, and StructuralError when the existence pre-check
    fails and force is not set.
    """
    opts = opts or SynthesisOptions()
    _ensure_existence(dm, opts)
    return _solve(dm, opts, eta_fixed=None)


def synthesize_convergent(dm: DecoupledModel, opts: SynthesisOptions | None = None) -> SynthesisCertificate:
    """Find the smallest eta whose feasibility solution also has a
    contracting error transition (max_i ||A_e,i|| < 1).

    Bisects eta on a log scale within [eta_lo, eta_hi] (expanding the top
    of the bracket when needed). Each trial solves one feasibility SDP,
    derives the gain and accepts iff every vertex transition norm is < 1.
    Raises ConvergenceError when no eta in range is both feasible and
    contracting; the eta-optimal design remains available separately.
    """
    opts = opts or SynthesisOptions()
    _ensure_existence(dm, opts)

    def trial(eta):
        try:
            cert = _solve(dm, opts, eta_fixed=eta)
        except InfeasibleError:
            return None
        consts = error_constants(dm, cert.L_tilde)
        if consts.theta < 1.0:
            return cert
        return None

    hi = opts.eta_hi
    lo = opts.eta_lo
    accepted = None
    for _ in range(8):
        accepted = trial(hi)
        if accepted is not None or hi >= 1e8:
            break
        hi *= 10.0
    if accepted is None:
        raise ConvergenceError(
            f"convergence not certifiable: no eta in [{opts.eta_lo:g}, {hi:g}] "
            "yields a feasible gain with contraction factor < 1 "
            "(the eta-optimal design is still available)"
        )
    if lo >= hi:
        return accepted
    best = accepted
    best_eta = hi
    for _ in range(opts.max_bisect):
        if best_eta / lo <= 1.0 + opts.eta_rtol:
            break
        mid = float(np.sqrt(lo * best_eta))
        cert = trial(mid)
        if cert is not None:
            best, best_eta = cert, mid
        else:
            lo = mid
    return best


def error_constants(dm: DecoupledModel, L_tilde: np.ndarray) -> ErrorConstants:
    """Derive every constant of the error dynamics for a fixed gain."""
    n = dm.n
    model = dm.model
    L = np.asarray(L_tilde, dtype=float).reshape(n, dm.q)
    Psi = np.eye(n) - L @ dm.C2
    Phi = dm.Phi
    Ae = tuple(Psi @ Ab for Ab in abar_vertices(dm))
    theta = max((spectral_norm(M) for M in Ae), default=0.0)
    V1M1C1 = dm.V1 @ dm.M1 @ dm.C1
    V2M2C2 = dm.V2 @ dm.M2 @ dm.C2
    beta = max((spectral_norm(V1M1C1 + V2M2C2 @ M) for M in Ae), default=0.0)
    beta_wc = max(
        (spectral_norm(V1M1C1 + V2M2C2 @ M) for M in ahat_vertices(dm)), default=0.0
    )
    Gamma = -(Psi @ Phi @ dm.G1 @ dm.M1 @ dm.T1 + Psi @ dm.G2 @ dm.M2 @ dm.T2 + L @ dm.T2)
    eta_bar = spectral_norm(Gamma) * model.eta_v + spectral_norm(Psi @ Phi) * model.eta_w
    R = V2M2C2 @ dm.G1 @ dm.M1 @ dm.T1 - dm.V1 @ dm.M1 @ dm.T1
    d_noise = (
        spectral_norm(V2M2C2) * model.eta_w
        + (spectral_norm(R) + spectral_norm(dm.V2 @ dm.M2 @ dm.T2)) * model.eta_v
    )
    return ErrorConstants(
        Psi=Psi, Phi=Phi, A_e=Ae, theta=float(theta), beta=float(beta),
        beta_wc=float(beta_wc), Gamma=Gamma, eta_bar=float(eta_bar), R=R,
        d_noise_bound=float(d_noise), V1M1C1=V1M1C1, V2M2C2=V2M2C2,
    )
