#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
テスト用の小規模インスタンス生成
"""

from typing import Optional, Tuple

import numpy as np

from src.config import ScenarioConfig
from src.model.asim import AsimState, SurfaceKind
from src.model.channel import ChannelSet, normalize_layer
from src.model.ratemodel import DecisionVars
from src.numerics.rng import SeededRng

TINY = dict(N=2, M=4, Q=2, L=2, I=1)


def tiny_scenario(**overrides) -> ScenarioConfig:
    """N=2, M=4, Q=2, L=2, I=1 の机上シナリオ"""
    values = dict(TINY, R_sum_th=0.0, R_SR_th=0.0)
    values.update(overrides)
    return ScenarioConfig(**values)


def random_channels(config: ScenarioConfig, seed: int, scale: float = 1.0) -> ChannelSet:
    """
    単純な i.i.d. 複素ガウスのチャネル（経路損失なし）

    scale はユーザー・SBD チャネルの振幅倍率。
    """
    rng = SeededRng(seed)
    M, N, L, I, Q = config.M, config.N, config.L, config.I, config.Q
    g = rng.complex_normal((L, M), variance=scale ** 2)
    return ChannelSet(
        F=rng.complex_normal((M, N)) / np.sqrt(M),
        H_layers=tuple(normalize_layer(rng.complex_normal((M, M))) for _ in range(Q)),
        g=g,
        g_hat=g + rng.complex_normal((L, M), variance=1e-3 * scale ** 2),
        h_sbd=rng.complex_normal((I, M), variance=scale ** 2),
        h_r=rng.complex_normal(I),
        d=rng.complex_normal(M, variance=scale ** 2),
        g_gain=np.full(L, scale ** 2),
        h_gain=np.full(I, scale ** 2),
        seed=seed,
    )


def random_vars(config: ScenarioConfig, seed: int, layers: Optional[int] = None) -> DecisionVars:
    """ボックス制約を満たすランダムな変数"""
    rng = SeededRng(seed)
    N, M, L, I = config.N, config.M, config.L, config.I
    layers = config.Q if layers is None else layers
    W = rng.complex_normal((N, L + 1))
    W = W * np.sqrt(0.5 * config.P_sat_max / np.sum(np.abs(W) ** 2))
    sigma = rng.uniform(0.1, 1.0, L + 1)
    tau_EH = rng.uniform(0.1, 0.9, I)
    kind = SurfaceKind.ASIM if layers > 1 else SurfaceKind.ACTIVE_RIS
    return DecisionVars(
        W=W,
        sigma=sigma / np.sum(sigma),
        surface=AsimState(
            rho=rng.uniform(0.2, 1.0, (layers, M)),
            theta=rng.uniform(0.0, 2.0 * np.pi, (layers, M)),
            kind=kind,
        ),
        C=rng.uniform(0.0, 0.1, L),
        tau_EH=tau_EH,
        tau_BD=1.0 - tau_EH,
        eta=rng.uniform(0.1, 1.0, I),
        alpha=config.alpha,
        beta=config.beta,
        theta_sat=config.theta_sat,
        theta_SIM=config.theta_SIM,
    )


def brute_transfer(rho: np.ndarray, theta: np.ndarray, H_layers: Tuple[np.ndarray, ...]) -> np.ndarray:
    """T = Φ^(Q) H^(Q) ··· Φ^(1) H^(1) を対角行列の積で直接計算する"""
    M = rho.shape[1]
    T = np.eye(M, dtype=complex)
    for q in range(rho.shape[0]):
        Phi = np.diag(rho[q] * np.exp(1j * theta[q]))
        T = Phi @ H_layers[q] @ T
    return T
