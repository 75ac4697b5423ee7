#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
SINR・達成レート計算モジュール

RSMA の共通・個別ストリーム、共通レート配分の可否、共生無線の SBD レート、
総和レート、および NOMA 比較方式を計算する。

すべてのストリームは同一の伝達行列 T を通過する。ユーザー k 側の
ASIM 雑音係数は最終層で ‖g_k^H Φ^(Q)‖² σ²_SIM とする。
ストリーム電力の基準値 P は 1 で、W が電力 [W] を担う。
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np

from src.config import ScenarioConfig
from src.model.asim import Surface, output_layer, surface_transfer
from src.model.channel import ChannelSet

# ロギングの設定
logger = logging.getLogger(__name__)

NOISE_MODEL = 'final_layer'


@dataclass(frozen=True)
class DecisionVars:
    """最適化変数一式"""

    # プリコーダ N×(L+1)、列は [w_c, w_1..w_L]
    W: np.ndarray
    # 電力分割係数 [σ_c, σ_1..σ_L]
    sigma: np.ndarray
    surface: Surface
    # 共通レート配分 C_l
    C: np.ndarray
    tau_EH: np.ndarray
    tau_BD: np.ndarray
    eta: np.ndarray
    alpha: float = 0.5
    beta: float = 0.5
    theta_sat: float = 1.0
    theta_SIM: float = 1.0

    @property
    def sigma_c(self) -> float:
        return float(self.sigma[0])

    @property
    def sigma_l(self) -> np.ndarray:
        return self.sigma[1:]

    @property
    def L(self) -> int:
        return self.W.shape[1] - 1

    @property
    def I(self) -> int:
        return self.tau_EH.shape[0]

    def effective_precoder(self) -> np.ndarray:
        """電力分割を織り込んだ実効プリコーダ v_j = √σ_j w_j"""
        return self.W * np.sqrt(np.clip(self.sigma, 0.0, None))[None, :]


@dataclass(frozen=True)
class RateReport:
    """SINR とレートの一覧（bps/Hz）"""

    gamma_c: np.ndarray
    gamma_p: np.ndarray
    gamma_s: np.ndarray
    R_c: np.ndarray
    R_p: np.ndarray
    R_SR: np.ndarray
    C: np.ndarray
    R_common_alloc: float
    R_sum: float
    noise_model: str = field(default=NOISE_MODEL)

    @property
    def R_SR_sum(self) -> float:
        return float(np.sum(self.R_SR))


def effective_channel(g_l: np.ndarray, T: np.ndarray, F: np.ndarray, w: np.ndarray) -> complex:
    """実効チャネル U = g^H T F w"""
    return complex(np.conj(np.ravel(g_l)) @ T @ F @ np.ravel(w))


def rate(gamma, B: float):
    """達成レート B log₂(1 + γ/B)"""
    return B * np.log2(1.0 + np.asarray(gamma, dtype=float) / B)


def rate_sr(gamma_s, tau_BD, B: float, K: int):
    """SBD の達成レート (Bτ/K) log₂(1 + Kγ/B)"""
    gamma_s = np.asarray(gamma_s, dtype=float)
    return (B * np.asarray(tau_BD, dtype=float) / K) * np.log2(1.0 + K * gamma_s / B)


def link_terms(vars: DecisionVars, channels: ChannelSet, config: ScenarioConfig, csi: str = 'estimated') -> Tuple[np.ndarray, np.ndarray]:
    """
    全ユーザー・全ストリームの実効チャネル電力と ASIM 雑音係数

    Returns:
        Tuple[np.ndarray, np.ndarray]: |U_{k,j}|²（L×(L+1)）と N_k（長さ L）
    """
    G = channels.users(csi)
    T = surface_transfer(vars.surface, channels.H_layers)
    U = np.conj(G) @ T @ channels.F @ vars.W
    final = output_layer(vars.surface)
    noise_coef = np.sum(np.abs(np.conj(G) @ final) ** 2, axis=1) * config.sigma2_SIM
    return np.abs(U) ** 2, noise_coef


def _common_sinrs(power: np.ndarray, noise_coef: np.ndarray, sigma: np.ndarray, config: ScenarioConfig, P: float) -> np.ndarray:
    private = sigma[1:][None, :] * P * (power[:, 1:] + noise_coef[:, None])
    denominator = np.sum(private, axis=1) + config.sigma2_Ul
    return sigma[0] * P * power[:, 0] / denominator


def _private_sinrs(power: np.ndarray, noise_coef: np.ndarray, sigma: np.ndarray, config: ScenarioConfig, P: float) -> np.ndarray:
    L = power.shape[0]
    terms = sigma[1:][None, :] * P * (power[:, 1:] + noise_coef[:, None])
    interference = np.sum(terms, axis=1) - terms[np.arange(L), np.arange(L)]
    desired = sigma[1:] * P * power[np.arange(L), 1 + np.arange(L)]
    return desired / (interference + config.sigma2_Ul)


def sinr_common(vars: DecisionVars, channels: ChannelSet, config: ScenarioConfig, l: int, P: float = 1.0, csi: str = 'estimated') -> float:
    """
    ユーザー l が共通ストリームを復号する際の SINR

    γ_{c,l} = σ_c P|U_c|² / (Σ_j σ_j P(|U_j|² + N_l) + σ²_U)
    """
    power, noise_coef = link_terms(vars, channels, config, csi)
    return float(_common_sinrs(power, noise_coef, vars.sigma, config, P)[l])


def sinr_private(vars: DecisionVars, channels: ChannelSet, config: ScenarioConfig, l: int, P: float = 1.0, csi: str = 'estimated') -> float:
    """SIC で共通ストリームを除去した後の個別ストリームの SINR"""
    power, noise_coef = link_terms(vars, channels, config, csi)
    return float(_private_sinrs(power, noise_coef, vars.sigma, config, P)[l])


def sbd_received_power(vars: DecisionVars, channels: ChannelSet) -> np.ndarray:
    """各 SBD に届く表面出力の期待電力 Σ_j σ_j |h_i^H T F w_j|²"""
    T = surface_transfer(vars.surface, channels.H_layers)
    amplitude = np.conj(channels.h_sbd) @ T @ channels.F @ vars.effective_precoder()
    return np.sum(np.abs(amplitude) ** 2, axis=1)


def sbd_sinrs(vars: DecisionVars, channels: ChannelSet, config: ScenarioConfig) -> np.ndarray:
    """全 SBD の SUE 側 SINR"""
    received = sbd_received_power(vars, channels)
    backscatter = vars.eta * np.abs(channels.h_r) ** 2 * received
    interference = np.sum(backscatter) - backscatter
    return backscatter / (interference + config.sigma2_SUE)


def sinr_sbd(vars: DecisionVars, channels: ChannelSet, config: ScenarioConfig, i: int) -> float:
    """
    SBD i の後方散乱信号に対する SUE の SINR

    衛星の直接成分は SIC で除去済みとする。
    """
    return float(sbd_sinrs(vars, channels, config)[i])


def common_cap_from_rates(R_c, C) -> Tuple[float, bool]:
    """min_l R_{c,l} と Σ C_l ≤ min_l R_{c,l} の判定"""
    cap = float(np.min(R_c))
    return cap, bool(float(np.sum(C)) <= cap)


def common_rate_cap(vars: DecisionVars, channels: ChannelSet, config: ScenarioConfig, csi: str = 'estimated') -> Tuple[float, bool]:
    """
    共通レートの上限と配分の可否

    Returns:
        Tuple[float, bool]: (上限 bps/Hz, 配分が上限以下かどうか)
    """
    power, noise_coef = link_terms(vars, channels, config, csi)
    R_c = rate(_common_sinrs(power, noise_coef, vars.sigma, config, 1.0), config.B)
    return common_cap_from_rates(R_c, vars.C)


def sum_rate(report: RateReport) -> float:
    """総和レート Σ_l (C_l + R_{p,l})"""
    return float(np.sum(report.C) + np.sum(report.R_p))


def rate_report(vars: DecisionVars, channels: ChannelSet, config: ScenarioConfig, csi: str = 'estimated') -> RateReport:
    """
    RSMA のレート一式を計算する

    Args:
        vars (DecisionVars): 最適化変数
        channels (ChannelSet): チャネル
        config (ScenarioConfig): シナリオ設定
        csi (str): 'estimated'（ĝ）または 'true'（g）

    Returns:
        RateReport: SINR とレート
    """
    power, noise_coef = link_terms(vars, channels, config, csi)
    gamma_c = _common_sinrs(power, noise_coef, vars.sigma, config, 1.0)
    gamma_p = _private_sinrs(power, noise_coef, vars.sigma, config, 1.0)
    gamma_s = sbd_sinrs(vars, channels, config)
    R_p = rate(gamma_p, config.B)
    C = np.asarray(vars.C, dtype=float)
    return RateReport(
        gamma_c=gamma_c,
        gamma_p=gamma_p,
        gamma_s=gamma_s,
        R_c=rate(gamma_c, config.B),
        R_p=R_p,
        R_SR=rate_sr(gamma_s, vars.tau_BD, config.B, config.K),
        C=C,
        R_common_alloc=float(np.sum(C)),
        R_sum=float(np.sum(C) + np.sum(R_p)),
    )


def noma_order(vars: DecisionVars, channels: ChannelSet, csi: str = 'estimated') -> np.ndarray:
    """
    NOMA の SIC 復号順（弱いユーザーから）

    実効チャネル利得 ‖g_l^H T F‖² の昇順。等しい場合はユーザー番号の昇順。
    """
    G = channels.users(csi)
    T = surface_transfer(vars.surface, channels.H_layers)
    gains = np.sum(np.abs(np.conj(G) @ T @ channels.F) ** 2, axis=1)
    return np.array(sorted(range(len(gains)), key=lambda l: (gains[l], l)))


def noma_rates(vars: DecisionVars, channels: ChannelSet, config: ScenarioConfig, csi: str = 'estimated') -> RateReport:
    """
    NOMA（共通ストリームなし）のレート

    ユーザーは自分より弱いユーザーの信号を SIC で除去し、
    強いユーザーの信号を干渉として扱う。
    """
    power, noise_coef = link_terms(vars, channels, config, csi)
    sigma = vars.sigma
    L = power.shape[0]
    order = noma_order(vars, channels, csi)
    rank = np.empty(L, dtype=int)
    rank[order] = np.arange(L)

    gamma_p = np.zeros(L)
    for k in range(L):
        stronger = [j for j in range(L) if rank[j] > rank[k]]
        interference = sum(sigma[1 + j] * (power[k, 1 + j] + noise_coef[k]) for j in stronger)
        gamma_p[k] = sigma[1 + k] * power[k, 1 + k] / (interference + config.sigma2_Ul)

    gamma_s = sbd_sinrs(vars, channels, config)
    R_p = rate(gamma_p, config.B)
    zeros = np.zeros(L)
    return RateReport(
        gamma_c=zeros,
        gamma_p=gamma_p,
        gamma_s=gamma_s,
        R_c=zeros.copy(),
        R_p=R_p,
        R_SR=rate_sr(gamma_s, vars.tau_BD, config.B, config.K),
        C=zeros.copy(),
        R_common_alloc=0.0,
        R_sum=float(np.sum(R_p)),
    )


def log2_slope(gamma_k: float, B: float) -> float:
    """rate(γ, B) の γ_k における傾き B/((B+γ_k) ln 2)"""
    return B / ((B + gamma_k) * math.log(2.0))
