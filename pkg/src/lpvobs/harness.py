"""Plant simulation, Monte-Carlo containment campaigns and the closed-form
error oracle.

The oracle reproduces the filter's state and input errors directly from
the initial error and the noise realizations, without running the filter:
with E[k] the error transition into step k and t_bar[k-1] the lumped noise
term,

    x_tilde[k] = (E[k] ... E[1]) x_tilde[0]
                 + sum_{i=1..k} (E[k] ... E[k-i+2]) t_bar[k-i]

and the delayed input error is an affine function of x_tilde[k-1] and the
noises. Agreement between this closed form and the recursive filter is the
main correctness oracle for the whole pipeline.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .decouple import DecoupledModel
from .errors import ContainmentError
from .model import LpvModel, validate_weights
from .observer import initialize, step, steady_state_radii
from .synthesize import ErrorConstants

SIGNAL_KINDS = ("constant", "piecewise", "sinusoid", "samples")
WEIGHT_KINDS = ("random_simplex", "fixed_vertex", "explicit")
NOISE_KINDS = ("uniform_ball", "zero", "worst_case_vertex")


def eval_signal(sig: dict, k: int, K: int) -> float:
    """Evaluate one scalar channel of the signal grammar at step k."""
    kind = sig.get("kind")
    if kind == "constant":
        return float(sig["value"])
    if kind == "piecewise":
        value = 0.0
        for start, v in sig["segments"]:
            if k >= start:
                value = float(v)
        return value
    if kind == "sinusoid":
        phase = float(sig.get("phase", 0.0))
        return float(sig["amplitude"]) * np.sin(2.0 * np.pi * k / float(sig["period"]) + phase)
    if kind == "samples":
        values = sig["values"]
        if len(values) < K + 1:
            raise ValueError(f"samples signal needs >= {K + 1} values, got {len(values)}")
        return float(values[k])
    raise ValueError(f"unknown signal kind {kind!r}; expected one of {SIGNAL_KINDS}")


@dataclass(frozen=True)
class Scenario:
    """Everything needed to draw one reproducible ground-truth run."""

    K: int
    seed: int
    weight_mode: dict
    unknown_input: tuple   # p channel specs
    known_input: tuple     # m channel specs
    noise_mode: dict
    x0_true: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.K < 1:
            raise ValueError(f"horizon K must be >= 1, got {self.K}")
        if self.weight_mode.get("kind") not in WEIGHT_KINDS:
            raise ValueError(f"weight_mode kind must be one of {WEIGHT_KINDS}")
        if self.noise_mode.get("kind") not in NOISE_KINDS:
            raise ValueError(f"noise_mode kind must be one of {NOISE_KINDS}")
        object.__setattr__(self, "unknown_input", tuple(self.unknown_input))
        object.__setattr__(self, "known_input", tuple(self.known_input))
        if self.x0_true is not None:
            object.__setattr__(
                self, "x0_true", np.asarray(self.x0_true, dtype=float).reshape(-1)
            )


@dataclass(frozen=True)
class PlantTruth:
    """Ground-truth rollout: states, measurements and every noise draw."""

    x: np.ndarray    # (K+1, n)
    y: np.ndarray    # (K+1, l)
    u: np.ndarray    # (K+1, m)
    d: np.ndarray    # (K+1, p)
    lam: np.ndarray  # (K+1, N)
    w: np.ndarray    # (K+1, N, n) per-vertex process noise
    v: np.ndarray    # (K+1, N, l) per-vertex measurement noise

    @property
    def K(self) -> int:
        return self.x.shape[0] - 1


def _ball_batch(rng, count, dim, radius, on_sphere=False):
    """Uniform draws from the ball (or sphere) of the given radius."""
    if dim == 0 or radius == 0.0:
        return np.zeros((count, dim))
    z = rng.normal(size=(count, dim))
    norms = np.linalg.norm(z, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    dirs = z / norms
    if on_sphere:
        return radius * dirs
    r = radius * rng.uniform(size=(count, 1)) ** (1.0 / dim)
    return r * dirs


def _draw_weights(rng, mode: dict, K: int, N: int) -> np.ndarray:
    kind = mode["kind"]
    if kind == "random_simplex":
        return rng.dirichlet(np.ones(N), size=K + 1)
    if kind == "fixed_vertex":
        j = int(mode["j"])
        if not 0 <= j < N:
            raise ValueError(f"fixed_vertex index {j} out of range for N={N}")
        lam = np.zeros((K + 1, N))
        lam[:, j] = 1.0
        return lam
    seq = np.asarray(mode["sequence"], dtype=float)
    if seq.shape != (K + 1, N):
        raise ValueError(f"explicit weights: expected shape {(K + 1, N)}, got {seq.shape}")
    return np.vstack([validate_weights(row, N) for row in seq])


def simulate_plant(model: LpvModel, scenario: Scenario) -> PlantTruth:
    """Roll the plant forward under the scenario's inputs, weights and
    noise; every draw comes from the scenario seed (bit-identical replay)."""
    K = scenario.K
    n, m, p, l, N = model.n, model.m, model.p, model.l, model.N
    if len(scenario.unknown_input) != p:
        raise ValueError(f"unknown_input: expected {p} channel specs, got {len(scenario.unknown_input)}")
    if len(scenario.known_input) != m:
        raise ValueError(f"known_input: expected {m} channel specs, got {len(scenario.known_input)}")
    rng = np.random.default_rng(scenario.seed)
    # Draw order is fixed: weights, initial state, process noise, then
    # measurement noise; changing it would silently break replay.
    lam = _draw_weights(rng, scenario.weight_mode, K, N)
    if scenario.x0_true is None:
        x0 = model.x0_hat + _ball_batch(rng, 1, n, model.delta0_x)[0]
    else:
        x0 = scenario.x0_true
        if x0.shape != (n,):
            raise ValueError(f"x0_true: expected length {n}, got {x0.shape}")
        if np.linalg.norm(x0 - model.x0_hat) > model.delta0_x + 1e-12:
            raise ValueError(
                "x0_true violates the initial error bound "
                f"||x0 - x0_hat|| <= {model.delta0_x}"
            )
    kind = scenario.noise_mode["kind"]
    if kind == "zero":
        w = np.zeros((K + 1, N, n))
        v = np.zeros((K + 1, N, l))
    else:
        sphere = kind == "worst_case_vertex"
        w = _ball_batch(rng, (K + 1) * N, n, model.eta_w, sphere).reshape(K + 1, N, n)
        v = _ball_batch(rng, (K + 1) * N, l, model.eta_v, sphere).reshape(K + 1, N, l)
    u = np.array([
        [eval_signal(sig, k, K) for sig in scenario.known_input]
        for k in range(K + 1)
    ]).reshape(K + 1, m)
    d = np.array([
        [eval_signal(sig, k, K) for sig in scenario.unknown_input]
        for k in range(K + 1)
    ]).reshape(K + 1, p)
    x = np.zeros((K + 1, n))
    y = np.zeros((K + 1, l))
    x[0] = x0
    for k in range(K + 1):
        mix = sum(lam[k, i] * (model.D[i] @ u[k] + v[k, i]) for i in range(N))
        y[k] = model.C @ x[k] + mix + model.H @ d[k]
        if k < K:
            x[k + 1] = (
                sum(lam[k, i] * (model.A[i] @ x[k] + model.B[i] @ u[k] + w[k, i]) for i in range(N))
                + model.G @ d[k]
            )
    return PlantTruth(x=x, y=y, u=u, d=d, lam=lam, w=w, v=v)


@dataclass(frozen=True)
class SimulationTrace:
    """Time-indexed estimation results next to the ground truth.

    State entries are indexed k = 0..K. Input entries follow the one-step
    delay convention: index j holds the estimate of d[j] produced at filter
    step j+1, for j = 0..K-1.
    """

    x_true: np.ndarray   # (K+1, n)
    x_hat: np.ndarray    # (K+1, n)
    delta_x: np.ndarray  # (K+1,)
    err_x: np.ndarray    # (K+1,)
    d_true: np.ndarray   # (K, p)
    d_hat: np.ndarray    # (K, p)
    delta_d: np.ndarray  # (K,)
    err_d: np.ndarray    # (K,)
    lam: np.ndarray      # (K+1, N)

    @property
    def K(self) -> int:
        return self.x_true.shape[0] - 1

    def violations(self):
        """Steps where an error left its certified ball.

        The bound can be achieved exactly (e.g. scalar plants under
        norm-saturating noise), so ties within a relative machine-precision
        band are not violations; anything real exceeds by orders of
        magnitude.
        """
        guard = 1.0 + 1e-12
        out = []
        for k in range(self.K + 1):
            if self.err_x[k] > self.delta_x[k] * guard:
                out.append(("x", k, float(self.err_x[k]), float(self.delta_x[k])))
        for j in range(self.K):
            if self.err_d[j] > self.delta_d[j] * guard:
                out.append(("d", j, float(self.err_d[j]), float(self.delta_d[j])))
        return out

    def tightness(self):
        """Max ratio error/radius over the trace, per track."""
        def ratio(err, rad):
            worst = 0.0
            for e, r in zip(err, rad):
                if r > 0.0:
                    worst = max(worst, e / r)
                elif e > 0.0:
                    return np.inf
            return worst
        return ratio(self.err_x, self.delta_x), ratio(self.err_d, self.delta_d)


def run_observer(
    dm: DecoupledModel,
    L_tilde: np.ndarray,
    constants: ErrorConstants,
    truth: PlantTruth,
    radius_mode: str = "worst_case",
) -> SimulationTrace:
    """Run the filter over a ground-truth rollout; deterministic."""
    model = dm.model
    K = truth.K
    state = initialize(
        dm, L_tilde, constants, model.x0_hat, model.delta0_x,
        truth.y[0], truth.u[0], truth.lam[0], radius_mode,
    )
    x_hat = np.zeros((K + 1, model.n))
    delta_x = np.zeros(K + 1)
    d_hat = np.zeros((K, model.p))
    delta_d = np.zeros(K)
    x_hat[0] = state.x_hat
    delta_x[0] = state.delta_x
    for k in range(1, K + 1):
        state, x_set, d_set = step(
            state, truth.u[k - 1], truth.u[k], truth.y[k],
            truth.lam[k - 1], truth.lam[k],
        )
        x_hat[k] = x_set.center
        delta_x[k] = x_set.radius
        d_hat[k - 1] = d_set.center
        delta_d[k - 1] = d_set.radius
    err_x = np.linalg.norm(truth.x - x_hat, axis=1)
    err_d = np.linalg.norm(truth.d[:K] - d_hat, axis=1) if model.p else np.zeros(K)
    return SimulationTrace(
        x_true=truth.x, x_hat=x_hat, delta_x=delta_x, err_x=err_x,
        d_true=truth.d[:K].copy(), d_hat=d_hat, delta_d=delta_d, err_d=err_d,
        lam=truth.lam,
    )


@dataclass(frozen=True)
class OracleIntermediates:
    """Products and lumped noise terms of the closed-form error expansion."""

    B_e_norms: np.ndarray      # (K+1,), ||E[k] ... E[1]||, index 0 -> 1
    tail_norms: np.ndarray     # (K+1,), || sum_i C_e[i,k] t_bar[k-i] ||
    t_bar: np.ndarray          # (K, n)
    w_bar: np.ndarray          # (K, n)
    v_bar: np.ndarray          # (K, q)
    B_e: Optional[list] = None        # cumulative products, when collected
    C_e_norms: Optional[list] = None  # per k, array of ||C_e[i,k]||, i=1..k


@dataclass(frozen=True)
class OracleErrors:
    x_tilde: np.ndarray       # (K+1, n) closed-form state errors
    d_tilde: np.ndarray       # (K, p) closed-form delayed input errors
    intermediates: OracleIntermediates


def oracle_errors(
    dm: DecoupledModel,
    L_tilde: np.ndarray,
    constants: ErrorConstants,
    truth: PlantTruth,
    collect_products: bool = False,
) -> OracleErrors:
    """Closed-form state and input errors from the noise realizations only.

    Equivalent to the recursive filter errors in exact arithmetic; this
    never runs the filter equations. collect_products additionally stores
    the norms of every partial product (quadratic in the horizon, meant
    for short runs).
    """
    model = dm.model
    n, K, N = model.n, truth.K, model.N
    L = np.asarray(L_tilde, dtype=float).reshape(n, dm.q)
    Psi, Phi = constants.Psi, constants.Phi
    GM = dm.G1 @ dm.M1 @ dm.C1
    G1M1T1 = dm.G1 @ dm.M1 @ dm.T1
    G2M2T2 = dm.G2 @ dm.M2 @ dm.T2
    V2M2C2 = constants.V2M2C2
    V1M1C1 = constants.V1M1C1
    mixT1 = (V2M2C2 @ dm.G1 @ dm.M1 - dm.V1 @ dm.M1) @ dm.T1
    V2M2T2 = dm.V2 @ dm.M2 @ dm.T2

    # lumped (weight-combined) noises per step
    vt = np.einsum("ki,kil->kl", truth.lam, truth.v)
    wt = np.einsum("ki,kin->kn", truth.lam, truth.w)

    x_tilde = np.zeros((K + 1, n))
    d_tilde = np.zeros((K, model.p))
    x_tilde[0] = truth.x[0] - model.x0_hat
    B = np.eye(n)
    tail = np.zeros(n)
    B_norms = np.ones(K + 1)
    tail_norms = np.zeros(K + 1)
    t_bar = np.zeros((K, n))
    w_bar = np.zeros((K, n))
    v_bar = np.zeros((K, dm.q))
    E_seq = []
    B_seq = [np.eye(n)] if collect_products else None
    for k in range(1, K + 1):
        A_hat = sum(truth.lam[k - 1, i] * model.A[i] for i in range(N)) - GM
        E = Psi @ Phi @ A_hat
        wb = -Phi @ (G1M1T1 @ vt[k - 1] - wt[k - 1]) - G2M2T2 @ vt[k]
        vb = dm.T2 @ vt[k]
        tb = Psi @ wb - L @ vb
        w_bar[k - 1] = wb
        v_bar[k - 1] = vb
        t_bar[k - 1] = tb
        d_tilde[k - 1] = (
            -(V1M1C1 + V2M2C2 @ A_hat) @ x_tilde[k - 1]
            + mixT1 @ vt[k - 1] - V2M2C2 @ wt[k - 1] - V2M2T2 @ vt[k]
        )
        B = E @ B
        tail = E @ tail + tb
        x_tilde[k] = B @ x_tilde[0] + tail
        B_norms[k] = np.linalg.norm(B, 2)
        tail_norms[k] = np.linalg.norm(tail)
        if collect_products:
            E_seq.append(E)
            B_seq.append(B.copy())
    C_norms = None
    if collect_products:
        C_norms = []
        for k in range(1, K + 1):
            # suffix products E[k] ... E[k-i+2] for i = 1..k
            norms = np.zeros(k)
            P = np.eye(n)
            for i in range(1, k + 1):
                norms[i - 1] = np.linalg.norm(P, 2)
                P = P @ E_seq[k - i]
            C_norms.append(norms)
    return OracleErrors(
        x_tilde=x_tilde, d_tilde=d_tilde,
        intermediates=OracleIntermediates(
            B_e_norms=B_norms, tail_norms=tail_norms,
            t_bar=t_bar, w_bar=w_bar, v_bar=v_bar,
            B_e=B_seq, C_e_norms=C_norms,
        ),
    )


def _ratio_stats(values) -> dict:
    arr = np.asarray(values, dtype=float)
    return {
        "min": float(arr.min()),
        "mean": float(arr.mean()),
        "p50": float(np.percentile(arr, 50)),
        "p95": float(np.percentile(arr, 95)),
        "max": float(arr.max()),
    }


@dataclass(frozen=True)
class CampaignReport:
    trials: int
    horizon: int
    violations: tuple     # dicts: trial, seed, kind, step, err, bound
    max_tightness_x: float
    max_tightness_d: float
    tightness_x_stats: dict  # distribution of per-trial max ratios
    tightness_d_stats: dict
    steady_state_gap: Optional[float]
    trial_seeds: tuple

    @property
    def ok(self) -> bool:
        return len(self.violations) == 0

    def render(self) -> str:
        lines = [
            f"trials: {self.trials}, horizon: {self.horizon}",
            f"containment violations: {len(self.violations)}",
            f"max tightness ||x err|| / radius: {self.max_tightness_x:.6g}",
            f"max tightness ||d err|| / radius: {self.max_tightness_d:.6g}",
            "per-trial tightness x: " + ", ".join(
                f"{k}={v:.4g}" for k, v in self.tightness_x_stats.items()),
            "per-trial tightness d: " + ", ".join(
                f"{k}={v:.4g}" for k, v in self.tightness_d_stats.items()),
        ]
        if self.steady_state_gap is not None:
            lines.append(f"final state-radius gap to steady state: {self.steady_state_gap:.6g}")
        for viol in self.violations[:10]:
            lines.append(
                f"VIOLATION trial {viol['trial']} (seed {viol['seed']}) "
                f"{viol['kind']}[{viol['step']}]: err {viol['err']:.6g} > bound {viol['bound']:.6g}"
            )
        return "\n".join(lines)


def containment_campaign(
    dm: DecoupledModel,
    L_tilde: np.ndarray,
    constants: ErrorConstants,
    scenarios,
    trials: int,
    seed: int,
    radius_mode: str = "worst_case",
    raise_on_violation: bool = False,
) -> CampaignReport:
    """Monte-Carlo validation of the containment guarantee.

    Each trial re-draws the scenario under a child seed, simulates, runs
    the filter and records any step whose error exceeds its radius. The
    guarantee is deterministic, so the expected violation count is zero;
    any violation is an implementation or certificate bug.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    scenarios = list(scenarios)
    if not scenarios:
        raise ValueError("at least one scenario is required")
    master = np.random.default_rng(seed)
    trial_seeds = master.integers(0, 2**63 - 1, size=trials)
    violations = []
    ratios_x = []
    ratios_d = []
    gap = None
    for t in range(trials):
        proto = scenarios[t % len(scenarios)]
        scen = replace(proto, seed=int(trial_seeds[t]))
        truth = simulate_plant(dm.model, scen)
        trace = run_observer(dm, L_tilde, constants, truth, radius_mode)
        for kind, k, err, bound in trace.violations():
            violations.append({
                "trial": t, "seed": int(trial_seeds[t]), "kind": kind,
                "step": k, "err": err, "bound": bound,
            })
        tx, td = trace.tightness()
        ratios_x.append(tx)
        ratios_d.append(td)
        if gap is None and constants.theta < 1.0:
            dx_inf, _ = steady_state_radii(constants, dm, radius_mode)
            gap = abs(trace.delta_x[-1] - dx_inf)
    report = CampaignReport(
        trials=trials, horizon=scenarios[0].K, violations=tuple(violations),
        max_tightness_x=max(ratios_x), max_tightness_d=max(ratios_d),
        tightness_x_stats=_ratio_stats(ratios_x),
        tightness_d_stats=_ratio_stats(ratios_d),
        steady_state_gap=gap, trial_seeds=tuple(int(s) for s in trial_seeds),
    )
    if raise_on_violation and not report.ok:
        first = report.violations[0]
        raise ContainmentError(
            f"containment violated at trial {first['trial']} step {first['step']}",
            trial=first["trial"], step=first["step"], seed=first["seed"],
        )
    return report


def benchmark_model() -> LpvModel:
    """Two-vertex benchmark plant used across the test suite: rank-one
    output feedthrough, both vertices strongly detectable."""
    A1 = [[0.9, 0.5], [-0.3, 1.0]]
    A2 = [[0.85, 0.55], [-0.35, 1.0]]
    C = [[1.0, 0.2], [1.1, 1.9]]
    G = [[-0.02, 0.04], [0.01, -0.05]]
    H = [[1.1, 2.0], [2.2, 4.0]]
    eye = [[1.0, 0.0], [0.0, 1.0]]
    zero = [[0.0, 0.0], [0.0, 0.0]]
    return LpvModel(
        A=(A1, A2), B=(eye, eye), C=C, D=(zero, zero), G=G, H=H,
        eta_w=0.02, eta_v=1e-4,
        x0_hat=[0.0, 0.0], delta0_x=0.5,
    )


def benchmark_scenario(K: int = 200, seed: int = 42) -> Scenario:
    """Reference scenario for the benchmark plant: attack waveforms far
    above the noise floor (square wave on channel 1, ramp on channel 2),
    uniformly random simplex weights, uniform ball noise."""
    square = {
        "kind": "piecewise",
        "segments": [[start, 1.0 if (start // 10) % 2 == 0 else -1.0]
                     for start in range(0, K + 1, 10)],
    }
    ramp = {"kind": "samples", "values": [2.0 * k / K for k in range(K + 1)]}
    return Scenario(
        K=K, seed=seed,
        weight_mode={"kind": "random_simplex"},
        unknown_input=(square, ramp),
        known_input=({"kind": "constant", "value": 0.0},
                     {"kind": "constant", "value": 0.0}),
        noise_mode={"kind": "uniform_ball"},
    )
