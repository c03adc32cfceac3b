"""Shared fixtures: the benchmark plant, a convergent-design plant, and
synthesis results cached per session (each one costs an SDP solve)."""

import numpy as np
import pytest

import lpvobs as lo


@pytest.fixture(scope="session")
def bench_model():
    return lo.benchmark_model()


@pytest.fixture(scope="session")
def bench_dm(bench_model):
    return lo.decouple(bench_model)


@pytest.fixture(scope="session")
def bench_cert(bench_dm):
    return lo.synthesize_hinf(bench_dm)


@pytest.fixture(scope="session")
def bench_consts(bench_dm, bench_cert):
    return lo.error_constants(bench_dm, bench_cert.L_tilde)


def make_convergent_model():
    """Two-vertex plant with the unknown input entering the dynamics only
    (no feedthrough); admits gains with contraction factor well below 1."""
    return lo.LpvModel(
        A=([[0.5, 0.1], [-0.1, 0.6]], [[0.55, 0.05], [-0.05, 0.5]]),
        B=([[1.0], [0.5]], [[1.0], [0.5]]),
        C=[[1.0, 0.0], [0.0, 1.0]],
        D=([[0.0], [0.0]], [[0.0], [0.0]]),
        G=[[1.0], [0.5]],
        H=[[0.0], [0.0]],
        eta_w=0.01,
        eta_v=0.001,
        x0_hat=[0.0, 0.0],
        delta0_x=0.2,
    )


def make_undetectable_model():
    """Single-vertex plant with an unstable mode invisible to the output;
    no bounded observer can exist (p = 0, so strong detectability reduces
    to plain detectability of (A, C))."""
    return lo.LpvModel(
        A=([[2.0, 0.0], [0.0, 0.5]],),
        B=([[0.0], [1.0]],),
        C=[[0.0, 1.0]],
        D=([[0.0]],),
        G=np.zeros((2, 0)),
        H=np.zeros((1, 0)),
        eta_w=0.01,
        eta_v=0.001,
        x0_hat=[0.0, 0.0],
        delta0_x=0.1,
    )


def make_rank_deficient_model():
    """G chosen in the null space of C with H = 0, so rank(C2 G2) = 0 while
    p - p_H = 1: the boundedness precondition fails."""
    return lo.LpvModel(
        A=([[0.9, 0.1], [0.0, 0.8]],),
        B=([[1.0], [0.0]],),
        C=[[1.0, 0.0]],
        D=([[0.0]],),
        G=[[0.0], [1.0]],
        H=[[0.0]],
        eta_w=0.01,
        eta_v=0.001,
        x0_hat=[0.0, 0.0],
        delta0_x=0.1,
    )


@pytest.fixture(scope="session")
def conv_model():
    return make_convergent_model()


@pytest.fixture(scope="session")
def conv_dm(conv_model):
    return lo.decouple(conv_model)


@pytest.fixture(scope="session")
def conv_cert(conv_dm):
    return lo.synthesize_convergent(conv_dm)


@pytest.fixture(scope="session")
def conv_consts(conv_dm, conv_cert):
    return lo.error_constants(conv_dm, conv_cert.L_tilde)
