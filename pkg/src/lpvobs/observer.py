"""Three-step set-valued filter: input estimation, time update,
measurement update, with certified ball radii.

Each step k >= 1 consumes the raw measurement y[k], the known inputs
u[k-1], u[k] and the scheduling weights lam[k-1], lam[k] and produces

  - the updated state estimate x_hat[k|k] with radius delta_x[k], and
  - the one-step-delayed unknown-input estimate d_hat[k-1] with radius
    delta_d[k-1]

such that the true state and input lie inside the reported balls for every
admissible noise realization. The state radius follows the recursion
delta_x[k] = theta * delta_x[k-1] + eta_bar; the input radius is a
coefficient times delta_x[k-1] plus a noise floor.

Input-radius modes: "worst_case" uses the vertex maximum of the
coefficient (weights-independent, sound for every schedule);
"time_varying" evaluates the coefficient at the actual weights lam[k-1]
(tighter, schedule-dependent).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .decouple import DecoupledModel, split_output
from .errors import ConvergenceError
from .linalg import spectral_norm
from .model import validate_weights
from .synthesize import ErrorConstants

RADIUS_MODES = ("worst_case", "time_varying")
THETA_ONE_BAND = 1e-12


@dataclass(frozen=True)
class SetEstimate:
    """A 2-norm ball: center vector plus nonnegative radius."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        c = np.asarray(self.center, dtype=float).reshape(-1)
        object.__setattr__(self, "center", c)
        r = float(self.radius)
        if not np.isfinite(c).all():
            raise ValueError("set estimate center must be finite")
        if not (np.isfinite(r) and r >= 0.0):
            raise ValueError(f"set estimate radius must be finite and >= 0, got {r}")
        object.__setattr__(self, "radius", r)

    def contains(self, point: np.ndarray, slack: float = 0.0) -> bool:
        return float(np.linalg.norm(np.asarray(point, dtype=float).reshape(-1) - self.center)) <= self.radius + slack


@dataclass(frozen=True)
class ObserverState:
    """Filter state after the measurement update at time k."""

    k: int
    x_hat: np.ndarray      # x_hat[k|k]
    d1_hat: np.ndarray     # feedthrough input component estimate at time k
    delta_x: float
    dm: DecoupledModel
    L_tilde: np.ndarray
    constants: ErrorConstants
    radius_mode: str = "worst_case"


def initialize(
    dm: DecoupledModel,
    L_tilde: np.ndarray,
    constants: ErrorConstants,
    x0_hat: np.ndarray,
    delta0_x: float,
    y0: np.ndarray,
    u0: np.ndarray,
    lambda0,
    radius_mode: str = "worst_case",
) -> ObserverState:
    """Start the filter: x_hat[0|0] = x0_hat, delta_x[0] = delta0_x and the
    initial feedthrough-component estimate from the first measurement."""
    if radius_mode not in RADIUS_MODES:
        raise ValueError(f"radius_mode must be one of {RADIUS_MODES}, got {radius_mode!r}")
    model = dm.model
    x0 = np.asarray(x0_hat, dtype=float).reshape(model.n)
    u0 = np.asarray(u0, dtype=float).reshape(model.m)
    lam0 = validate_weights(lambda0, model.N)
    z1, _ = split_output(dm, y0)
    D1_lam = sum(w * Di for w, Di in zip(lam0, dm.D1))
    d1 = dm.M1 @ (z1 - dm.C1 @ x0 - D1_lam @ u0)
    if not float(delta0_x) >= 0.0:
        raise ValueError("delta0_x must be >= 0")
    return ObserverState(
        k=0, x_hat=x0, d1_hat=d1, delta_x=float(delta0_x),
        dm=dm, L_tilde=np.asarray(L_tilde, dtype=float).reshape(model.n, dm.q),
        constants=constants, radius_mode=radius_mode,
    )


def step(
    state: ObserverState,
    u_prev: np.ndarray,
    u_k: np.ndarray,
    y_k: np.ndarray,
    lambda_prev,
    lambda_k,
):
    """Advance the filter from time k-1 to k.

    Returns (state', x_set, d_set): the updated state, the ball estimate of
    x[k], and the ball estimate of the delayed unknown input d[k-1].
    """
    dm = state.dm
    model = dm.model
    consts = state.constants
    lam_prev = validate_weights(lambda_prev, model.N)
    lam_k = validate_weights(lambda_k, model.N)
    y_k = np.asarray(y_k, dtype=float).reshape(model.l)
    if not np.isfinite(y_k).all():
        raise ValueError("measurement contains non-finite entries")
    u_prev = np.asarray(u_prev, dtype=float).reshape(model.m)
    u_k = np.asarray(u_k, dtype=float).reshape(model.m)

    A_lam = sum(w * Ai for w, Ai in zip(lam_prev, model.A))
    B_lam = sum(w * Bi for w, Bi in zip(lam_prev, model.B))
    D1_lam = sum(w * Di for w, Di in zip(lam_k, dm.D1))
    D2_lam = sum(w * Di for w, Di in zip(lam_k, dm.D2))
    z1, z2 = split_output(dm, y_k)

    # time propagation with the previous feedthrough-component estimate
    x_pred = A_lam @ state.x_hat + B_lam @ u_prev + dm.G1 @ state.d1_hat
    # delayed estimate of the feedthrough-free input component
    d2_prev = dm.M2 @ (z2 - dm.C2 @ x_pred - D2_lam @ u_k)
    d_prev = dm.V1 @ state.d1_hat + dm.V2 @ d2_prev
    delta_d = input_radius(state.delta_x, consts, dm, state.radius_mode, lam_prev)
    # fold the reconstructed input back into the state, then correct with z2
    x_star = x_pred + dm.G2 @ d2_prev
    x_upd = x_star + state.L_tilde @ (z2 - dm.C2 @ x_star - D2_lam @ u_k)
    delta_x = consts.theta * state.delta_x + consts.eta_bar
    # current feedthrough input component from the fresh measurement
    d1_k = dm.M1 @ (z1 - dm.C1 @ x_upd - D1_lam @ u_k)

    new_state = replace(state, k=state.k + 1, x_hat=x_upd, d1_hat=d1_k, delta_x=delta_x)
    return new_state, SetEstimate(x_upd, delta_x), SetEstimate(d_prev, delta_d)


def state_radius(k: int, delta0: float, theta: float, eta_bar: float) -> float:
    """Closed form of the state radius recursion:
    delta0 * theta^k + eta_bar * sum_{i=1..k} theta^(i-1)."""
    if k < 0:
        raise ValueError("k must be >= 0")
    if theta < 0:
        raise ValueError("theta must be >= 0")
    if abs(1.0 - theta) < THETA_ONE_BAND:
        return float(delta0 + eta_bar * k)
    tk = theta ** k
    return float(delta0 * tk + eta_bar * (1.0 - tk) / (1.0 - theta))


def input_radius(
    delta_x_prev: float,
    constants: ErrorConstants,
    dm: DecoupledModel,
    mode: str = "worst_case",
    weights_prev=None,
) -> float:
    """Radius of the delayed input estimate given the previous state radius.

    worst_case uses the schedule-independent vertex maximum beta_wc;
    time_varying evaluates the coefficient at the supplied previous-step
    weights (tighter; coincides with worst_case for a single vertex).
    """
    if mode not in RADIUS_MODES:
        raise ValueError(f"mode must be one of {RADIUS_MODES}, got {mode!r}")
    if delta_x_prev < 0:
        raise ValueError("delta_x_prev must be >= 0")
    if mode == "worst_case":
        coef = constants.beta_wc
    else:
        if weights_prev is None:
            raise ValueError("time_varying mode needs the previous-step weights")
        lam = validate_weights(weights_prev, dm.model.N)
        GM = dm.G1 @ dm.M1 @ dm.C1
        A_hat = sum(w * Ai for w, Ai in zip(lam, dm.model.A)) - GM
        coef = spectral_norm(constants.V1M1C1 + constants.V2M2C2 @ A_hat)
    return float(coef * delta_x_prev + constants.d_noise_bound)


def steady_state_radii(constants: ErrorConstants, dm: DecoupledModel, mode: str = "worst_case"):
    """Limits of the radius recursions for a contracting design (theta < 1):

        delta_x_inf = eta_bar / (1 - theta)
        delta_d_inf = coef * delta_x_inf + noise floor

    with coef the worst-case input coefficient (also the limit bound for
    the time-varying mode). Raises ConvergenceError when theta >= 1.
    """
    if constants.theta >= 1.0:
        raise ConvergenceError(
            f"radii do not converge: contraction factor {constants.theta:.6g} >= 1"
        )
    dx_inf = constants.eta_bar / (1.0 - constants.theta)
    dd_inf = constants.beta_wc * dx_inf + constants.d_noise_bound
    return float(dx_inf), float(dd_inf)
