#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
電力消費・エネルギー収穫モジュール
"""

import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from src.config import ScenarioConfig, db_to_linear
from src.model.channel import ChannelSet, pathloss
from src.model.ratemodel import DecisionVars, sbd_received_power
from src.utils.error_utils import ZeroPowerError

# ロギングの設定
logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PowerBreakdown:
    """消費電力の内訳 [W]"""

    p_sat: float
    p_sim: float
    p_sat_amplified: float
    p_sim_amplified: float
    p_c_sat: float
    p_c_sim: float
    p_total: float
    p_harvest: float


def circuit_power_sat(config: ScenarioConfig) -> float:
    """衛星の回路電力 N P_D + P_C"""
    return config.N * config.P_D_sat + config.P_C_sat


def circuit_power_sim(config: ScenarioConfig) -> float:
    """表面の回路電力 M (P_phs + P_amp + P_DC + P_proc)"""
    return config.M * (config.P_phs + config.P_amp + config.P_DC_SIM + config.P_proc)


def harvest_power(config: ScenarioConfig) -> float:
    """太陽光発電電力 A·E·η·PR·f"""
    return config.A_solar * config.E_solar * config.eta_solar * config.PR * config.f_eclipse


def total_power(vars: DecisionVars, config: ScenarioConfig, realized_P_sat: float, realized_P_SIM: float) -> PowerBreakdown:
    """
    総消費電力を計算する

    P_total = ϑ_sat P_sat + ϑ_SIM P_SIM + P_c,sat + P_c,SIM

    Args:
        vars (DecisionVars): ϑ_sat, ϑ_SIM を含む最適化変数
        config (ScenarioConfig): シナリオ設定（回路電力はワット）
        realized_P_sat (float): 衛星の実送信電力
        realized_P_SIM (float): 表面の出力電力

    Returns:
        PowerBreakdown: 電力内訳
    """
    p_sat_amplified = vars.theta_sat * realized_P_sat
    p_sim_amplified = vars.theta_SIM * realized_P_SIM
    p_c_sat = circuit_power_sat(config)
    p_c_sim = circuit_power_sim(config)
    return PowerBreakdown(
        p_sat=float(realized_P_sat),
        p_sim=float(realized_P_SIM),
        p_sat_amplified=float(p_sat_amplified),
        p_sim_amplified=float(p_sim_amplified),
        p_c_sat=float(p_c_sat),
        p_c_sim=float(p_c_sim),
        p_total=float(p_sat_amplified + p_sim_amplified + p_c_sat + p_c_sim),
        p_harvest=float(harvest_power(config)),
    )


def effective_eps_sbd(config: ScenarioConfig) -> float:
    """
    SBD の必要収穫エネルギー ε_SBD

    設定値がない場合は、公称送信電力と平均チャネル利得で受信電力の
    eps_sbd_margin 倍のときに τ_EH = 0.5 でちょうど満たされる値とする。
    """
    if config.eps_SBD is not None:
        return float(config.eps_SBD)
    # 給電側・下り側のどちらで損失を扱っても SBD までの平均利得は同じ
    mean_gain = pathloss(config.carrier_freq, config.altitude, config.pathloss_exp)
    mean_gain *= db_to_linear(config.sat_antenna_gain_dBi)
    return float(config.Gamma * 0.5 * config.P_sat_max * mean_gain * config.eps_sbd_margin)


def harvest_slack(Gamma: float, tau_EH, received_power, eps_sbd: float):
    """収穫エネルギーの余裕 Γ τ_EH P_rx − ε_SBD"""
    return Gamma * np.asarray(tau_EH, dtype=float) * np.asarray(received_power, dtype=float) - eps_sbd


def sbd_harvest_ok(vars: DecisionVars, channels: ChannelSet, config: ScenarioConfig, i: int) -> Tuple[bool, float]:
    """
    SBD i のエネルギー収穫条件 ε_SBD ≤ Γ τ_EH |h_i^H R_out|²

    Returns:
        Tuple[bool, float]: (満たすかどうか, 余裕)
    """
    received = sbd_received_power(vars, channels)[i]
    slack = float(harvest_slack(config.Gamma, vars.tau_EH[i], received, effective_eps_sbd(config)))
    return slack >= 0.0, slack


def energy_efficiency(rate_bps_hz: float, p_total_w: float, bandwidth_hz: float) -> float:
    """
    エネルギー効率 [Mbps/J]

    Raises:
        ZeroPowerError: 消費電力が 0 以下の場合
    """
    if p_total_w <= 0:
        raise ZeroPowerError(f"消費電力が正ではありません: {p_total_w}")
    return float(rate_bps_hz) * bandwidth_hz / 1e6 / float(p_total_w)
