#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
最適化問題の評価モジュール

目的関数 α P_total − β (R_sum + Σ R_SR)、13 個の制約残差、
評価指標をまとめて計算し、すべての最適化手法から利用する。
残差は「正のとき違反」で、閾値スケールで正規化する。
"""

import logging
import math
from collections import OrderedDict
from dataclasses import dataclass, replace
from typing import Dict, List, Tuple

import numpy as np

from src.config import ScenarioConfig
from src.model.asim import BdRisState, asim_power, layer_powers, project_surface, surface_transfer
from src.model.channel import ChannelSet
from src.model.energy import (
    PowerBreakdown,
    effective_eps_sbd,
    energy_efficiency,
    harvest_slack,
    total_power,
)
from src.model.ratemodel import (
    DecisionVars,
    RateReport,
    noma_rates,
    rate_report,
    sbd_received_power,
)

# ロギングの設定
logger = logging.getLogger(__name__)

# 制約名（評価順）
CONSTRAINT_NAMES = (
    'weights_sum',
    'harvest_budget',
    'power_split',
    'sat_power',
    'asim_power',
    'common_rate',
    'sum_rate_qos',
    'sr_rate_qos',
    'phase_range',
    'gain_range',
    'reflection_range',
    'sbd_energy',
    'time_split',
)

RATE_MODES = ('rsma', 'noma')

# 射影で「既に実行可能」とみなす相対許容誤差
_PROJECTION_SLACK = 1e-12


@dataclass(frozen=True)
class Objective:
    """目的関数値（value = p_term − r_term）"""

    value: float
    p_term: float
    r_term: float


@dataclass(frozen=True)
class ConstraintReport:
    """制約残差（正規化済み、正のとき違反）"""

    residuals: Dict[str, float]
    max_violation: float
    feasible: bool
    tolerance: float

    def vector(self) -> np.ndarray:
        return np.array([self.residuals[name] for name in CONSTRAINT_NAMES])


@dataclass(frozen=True)
class Metrics:
    """評価指標一式"""

    rates: RateReport
    realized: RateReport
    power: PowerBreakdown
    se: float
    se_estimated: float
    ee: float
    objective: Objective
    constraints: ConstraintReport
    layer_powers: List[float]
    sue_direct_power: float
    eps_sbd: float

    @property
    def r_sr_sum(self) -> float:
        return self.realized.R_SR_sum

    def to_record(self) -> Dict[str, float]:
        """CSV 出力用の 1 行"""
        record = OrderedDict()
        record['se_bpshz'] = self.se
        record['se_estimated_bpshz'] = self.se_estimated
        record['ee_mbps_per_joule'] = self.ee
        record['p_total_w'] = self.power.p_total
        record['p_sat_w'] = self.power.p_sat
        record['p_sim_w'] = self.power.p_sim
        record['r_sum'] = self.realized.R_sum
        record['r_sr_sum'] = self.r_sr_sum
        record['objective'] = self.objective.value
        record['max_violation'] = self.constraints.max_violation
        record['feasible'] = self.constraints.feasible
        for name in CONSTRAINT_NAMES:
            record[f'residual_{name}'] = self.constraints.residuals[name]
        return record


def compute_rates(vars: DecisionVars, channels: ChannelSet, config: ScenarioConfig, csi: str, rate_mode: str) -> RateReport:
    if rate_mode == 'noma':
        return noma_rates(vars, channels, config, csi)
    return rate_report(vars, channels, config, csi)


def realized_powers(vars: DecisionVars, channels: ChannelSet, config: ScenarioConfig) -> Tuple[float, float]:
    """衛星の実送信電力 Σ σ_j ‖w_j‖² と表面出力電力"""
    V = vars.effective_precoder()
    p_sat = float(np.sum(np.abs(V) ** 2))
    p_sim = asim_power(vars.surface, channels.F, V, config.sigma2_SIM, channels.H_layers)
    return p_sat, p_sim


def _gain_limit_violation(vars: DecisionVars, config: ScenarioConfig) -> float:
    limit = math.sqrt(config.P_SIM_max)
    gains = vars.surface.gains if isinstance(vars.surface, BdRisState) else vars.surface.rho
    return float(np.max(np.maximum(-gains, gains - limit))) / limit


def _phase_violation(vars: DecisionVars) -> float:
    if isinstance(vars.surface, BdRisState):
        seeds = vars.surface.seeds
        return float(np.max(np.abs(seeds - np.transpose(seeds, (0, 2, 1))), initial=0.0))
    theta = vars.surface.theta
    return float(np.max(np.maximum(-theta, theta - 2.0 * math.pi))) / (2.0 * math.pi)


def constraint_residuals(
    vars: DecisionVars,
    channels: ChannelSet,
    config: ScenarioConfig,
    report: RateReport,
    power: PowerBreakdown,
) -> Dict[str, float]:
    """
    13 個の制約の正規化残差

    Returns:
        Dict[str, float]: 制約名 → 残差（正のとき違反）
    """
    eps_sbd = effective_eps_sbd(config)
    received = sbd_received_power(vars, channels)
    slack = harvest_slack(config.Gamma, vars.tau_EH, received, eps_sbd)
    cap = float(np.min(report.R_c))
    sigma = np.asarray(vars.sigma, dtype=float)
    tau_sum = vars.tau_EH + vars.tau_BD

    residuals = OrderedDict()
    residuals['weights_sum'] = abs(vars.alpha + vars.beta - 1.0)
    residuals['harvest_budget'] = (power.p_total - power.p_harvest) / power.p_harvest
    residuals['power_split'] = max(abs(float(np.sum(sigma)) - 1.0), float(np.max(-sigma)))
    residuals['sat_power'] = (power.p_sat - config.P_sat_max) / config.P_sat_max
    residuals['asim_power'] = (power.p_sim - config.P_SIM_max) / config.P_SIM_max
    residuals['common_rate'] = (report.R_common_alloc - cap) / max(cap, 1.0)
    residuals['sum_rate_qos'] = (config.R_sum_th - report.R_sum) / max(config.R_sum_th, 1.0)
    residuals['sr_rate_qos'] = float(np.max(config.R_SR_th - report.R_SR)) / max(config.R_SR_th, 1.0)
    residuals['phase_range'] = _phase_violation(vars)
    residuals['gain_range'] = _gain_limit_violation(vars, config)
    residuals['reflection_range'] = float(np.max(np.maximum(-vars.eta, vars.eta - 1.0)))
    residuals['sbd_energy'] = float(np.max(-slack)) / max(eps_sbd, np.finfo(float).tiny)
    residuals['time_split'] = float(
        max(np.max(np.abs(tau_sum - 1.0)), np.max(-vars.tau_EH), np.max(-vars.tau_BD))
    )
    return residuals


def evaluate(
    vars: DecisionVars,
    channels: ChannelSet,
    config: ScenarioConfig,
    rate_mode: str = 'rsma',
) -> Tuple[Objective, ConstraintReport, Metrics]:
    """
    目的関数・制約・評価指標を計算する

    最適化側の量は推定 CSI（ĝ）、実現レートは真の g で評価する。
    実行不可能な点も評価し、レポートで違反を示す。

    Args:
        vars (DecisionVars): 最適化変数
        channels (ChannelSet): チャネル
        config (ScenarioConfig): シナリオ設定
        rate_mode (str): 'rsma' または 'noma'

    Returns:
        Tuple[Objective, ConstraintReport, Metrics]: 評価結果
    """
    estimated = compute_rates(vars, channels, config, 'estimated', rate_mode)
    realized = compute_rates(vars, channels, config, 'true', rate_mode)
    p_sat, p_sim = realized_powers(vars, channels, config)
    power = total_power(vars, config, p_sat, p_sim)

    p_term = vars.alpha * power.p_total
    r_term = vars.beta * (estimated.R_sum + estimated.R_SR_sum)
    objective = Objective(value=float(p_term - r_term), p_term=float(p_term), r_term=float(r_term))

    residuals = constraint_residuals(vars, channels, config, estimated, power)
    max_violation = float(max(residuals.values()))
    constraints = ConstraintReport(
        residuals=dict(residuals),
        max_violation=max_violation,
        feasible=bool(max_violation <= config.feasibility_tol),
        tolerance=config.feasibility_tol,
    )

    se = realized.R_sum + realized.R_SR_sum
    T = surface_transfer(vars.surface, channels.H_layers)
    V = vars.effective_precoder()
    sue_direct = float(np.sum(np.abs(np.conj(channels.d) @ T @ channels.F @ V) ** 2))
    metrics = Metrics(
        rates=estimated,
        realized=realized,
        power=power,
        se=float(se),
        se_estimated=float(estimated.R_sum + estimated.R_SR_sum),
        ee=energy_efficiency(se, power.p_total, config.bandwidth_hz),
        objective=objective,
        constraints=constraints,
        layer_powers=layer_powers(vars.surface, channels.F, V, config.sigma2_SIM, channels.H_layers),
        sue_direct_power=sue_direct,
        eps_sbd=effective_eps_sbd(config),
    )
    return objective, constraints, metrics


def project_simplex(values: np.ndarray) -> np.ndarray:
    """確率単体への射影（既に単体上なら変更しない）"""
    values = np.asarray(values, dtype=float)
    if np.all(values >= 0.0) and abs(float(np.sum(values)) - 1.0) <= _PROJECTION_SLACK:
        return values.copy()
    ordered = np.sort(values)[::-1]
    cumulative = np.cumsum(ordered) - 1.0
    index = np.arange(1, len(values) + 1)
    support = ordered - cumulative / index > 0
    k = index[support][-1]
    shift = cumulative[support][-1] / k
    return np.maximum(values - shift, 0.0)


def project_time_split(tau_EH: np.ndarray, tau_BD: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """τ_EH, τ_BD を非負にして和が 1 になるよう正規化する"""
    tau_EH = np.clip(np.asarray(tau_EH, dtype=float), 0.0, None)
    tau_BD = np.clip(np.asarray(tau_BD, dtype=float), 0.0, None)
    total = tau_EH + tau_BD
    needs = np.abs(total - 1.0) > _PROJECTION_SLACK
    safe_total = np.where(total > 0, total, 1.0)
    new_EH = np.where(needs, np.where(total > 0, tau_EH / safe_total, 0.5), tau_EH)
    new_EH = np.clip(new_EH, 0.0, 1.0)
    new_BD = np.where(needs, 1.0 - new_EH, tau_BD)
    return new_EH, new_BD


def project_box(vars: DecisionVars, config: ScenarioConfig) -> DecisionVars:
    """
    単純制約集合への射影

    σ は単体へ、W はフロベニウス球へ、θ は 2π 剰余、ρ は [0, √P_SIM_max]、
    η は [0,1]、(τ_EH, τ_BD) は和 1 に正規化する。冪等。

    Args:
        vars (DecisionVars): 射影前の変数
        config (ScenarioConfig): シナリオ設定

    Returns:
        DecisionVars: 射影後の変数
    """
    W = np.asarray(vars.W, dtype=np.complex128)
    norm2 = float(np.sum(np.abs(W) ** 2))
    if norm2 > config.P_sat_max * (1.0 + _PROJECTION_SLACK):
        W = W * math.sqrt(config.P_sat_max / norm2)
    tau_EH, tau_BD = project_time_split(vars.tau_EH, vars.tau_BD)
    return replace(
        vars,
        W=W,
        sigma=project_simplex(vars.sigma),
        surface=project_surface(vars.surface, config.P_SIM_max),
        C=np.clip(np.asarray(vars.C, dtype=float), 0.0, None),
        tau_EH=tau_EH,
        tau_BD=tau_BD,
        eta=np.clip(np.asarray(vars.eta, dtype=float), 0.0, 1.0),
    )


def with_equal_common_split(vars: DecisionVars, channels: ChannelSet, config: ScenarioConfig, rate_mode: str = 'rsma') -> DecisionVars:
    """共通レートを t = min_l R_{c,l} の等分に設定する（NOMA では 0）"""
    if rate_mode == 'noma':
        return replace(vars, C=np.zeros(vars.L))
    report = rate_report(vars, channels, config, 'estimated')
    t = float(np.min(report.R_c))
    return replace(vars, C=np.full(vars.L, t / vars.L))
