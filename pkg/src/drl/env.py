#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
制約付きマルコフ決定過程（CMDP）環境

行動（プリコーダ・電力分割・位相・利得・時間分割・反射係数）を
DecisionVars に復号し、problem.evaluate で報酬とコストを計算する。
チャネルはエピソードごとに再生成し、エピソード内では固定する。
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np

from src.config import ScenarioConfig
from src.model.asim import AsimState, SurfaceKind
from src.model.channel import ChannelSet, generate
from src.model.problem import CONSTRAINT_NAMES, evaluate, project_box, with_equal_common_split
from src.model.ratemodel import DecisionVars
from src.numerics.rng import SeededRng
from src.utils.error_utils import ConfigError, DimensionError

# ロギングの設定
logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ActionLayout:
    """行動ベクトルの区分（Gaussian / von Mises / Beta の各次元）"""

    gauss: int
    vm: int
    beta: int

    @property
    def dim(self) -> int:
        return self.gauss + self.vm + self.beta

    def split(self, action: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        action = np.asarray(action, dtype=float)
        if action.shape[-1] != self.dim:
            raise DimensionError(f"行動の次元 {action.shape[-1]} がレイアウト {self.dim} と一致しません")
        return (
            action[..., :self.gauss],
            action[..., self.gauss:self.gauss + self.vm],
            action[..., self.gauss + self.vm:],
        )


@dataclass
class CmdpStep:
    """1 ステップ分の遷移"""

    state: np.ndarray
    action: np.ndarray
    # ペナルティ込みの報酬
    reward: float
    costs: np.ndarray
    next_state: np.ndarray
    # ペナルティなしの報酬 β(R_sum + R_SR) − α P_total
    objective_reward: float = 0.0
    done: bool = False
    info: Dict[str, float] = field(default_factory=dict)


def layout_for(config: ScenarioConfig) -> ActionLayout:
    """
    シナリオに対応する行動レイアウト

    Gaussian: W の実部・虚部と σ のロジット、von Mises: 全層の位相、
    Beta: 全層の利得、τ_EH、η。

    Raises:
        ConfigError: BD-RIS が指定された場合
    """
    kind = SurfaceKind(config.surface)
    if kind == SurfaceKind.ACTIVE_BD_RIS:
        raise ConfigError("強化学習エージェントは BD-RIS に対応していません")
    layers = 1 if kind == SurfaceKind.ACTIVE_RIS else config.Q
    streams = config.L + 1
    return ActionLayout(
        gauss=2 * config.N * streams + streams,
        vm=layers * config.M,
        beta=layers * config.M + 2 * config.I,
    )


def penalty(lam: np.ndarray, costs: np.ndarray, thresholds: float = 0.0) -> float:
    """Σ_j λ_j max(0, c_j − c̄_j)"""
    return float(np.sum(np.asarray(lam) * np.maximum(0.0, np.asarray(costs) - thresholds)))


def decode_action(action: np.ndarray, layout: ActionLayout, channels: ChannelSet, config: ScenarioConfig, rate_mode: str = 'rsma') -> DecisionVars:
    """
    行動ベクトルを最適化変数に復号して project_box で射影する

    Gaussian 成分は [-1, 1] にスカッシュ済み、Beta 成分は [0, 1] を想定する。

    Args:
        action (np.ndarray): 行動ベクトル
        layout (ActionLayout): 区分
        channels (ChannelSet): チャネル
        config (ScenarioConfig): シナリオ設定
        rate_mode (str): 'rsma' または 'noma'

    Returns:
        DecisionVars: 射影済みの変数
    """
    gauss, phases, beta = layout.split(action)
    N, L, I = config.N, config.L, config.I
    streams = L + 1
    kind = SurfaceKind(config.surface)
    layers = 1 if kind == SurfaceKind.ACTIVE_RIS else config.Q

    size = N * streams
    scale = math.sqrt(config.P_sat_max / size)
    W = (gauss[:size] + 1j * gauss[size:2 * size]).reshape(N, streams) * scale
    logits = 3.0 * gauss[2 * size:]
    weights = np.exp(logits - np.max(logits))
    sigma = weights / np.sum(weights)

    gains = np.clip(beta[:layers * config.M], 0.0, 1.0).reshape(layers, config.M) * math.sqrt(config.P_SIM_max)
    tau_EH = np.clip(beta[layers * config.M:layers * config.M + I], 0.0, 1.0)
    eta = np.clip(beta[layers * config.M + I:], 0.0, 1.0)

    vars = DecisionVars(
        W=W,
        sigma=sigma,
        surface=AsimState(rho=gains, theta=np.asarray(phases, dtype=float).reshape(layers, config.M), kind=kind),
        C=np.zeros(L),
        tau_EH=tau_EH,
        tau_BD=1.0 - tau_EH,
        eta=eta,
        alpha=config.alpha,
        beta=config.beta,
        theta_sat=config.theta_sat,
        theta_SIM=config.theta_SIM,
    )
    vars = project_box(vars, config)
    return with_equal_common_split(vars, channels, config, rate_mode)


def state_features(channels: ChannelSet, tau_EH: np.ndarray, previous_action: np.ndarray) -> np.ndarray:
    """
    状態ベクトル

    推定チャネル ĝ（行ごとの RMS で正規化）と SBD チャネル h（大規模減衰で正規化）の
    実部・虚部、現在の τ_EH、直前の行動を連結する。
    """
    rms = np.sqrt(np.mean(np.abs(channels.g_hat) ** 2, axis=1))
    g = channels.g_hat / np.maximum(rms, np.finfo(float).tiny)[:, None]
    h = channels.h_sbd / np.sqrt(channels.h_gain)[:, None]
    return np.concatenate([
        g.real.ravel(), g.imag.ravel(),
        h.real.ravel(), h.imag.ravel(),
        np.asarray(tau_EH, dtype=float),
        np.asarray(previous_action, dtype=float),
    ]).astype(np.float32)


def env_step(
    state: np.ndarray,
    action: np.ndarray,
    channels: ChannelSet,
    config: ScenarioConfig,
    multipliers: np.ndarray,
    layout: Optional[ActionLayout] = None,
    rate_mode: str = 'rsma',
) -> CmdpStep:
    """
    1 ステップを評価する

    報酬 r = β(R_sum + R_SR) − α P_total − Σ_j λ_j max(0, c_j − c̄_j)、
    コストは 13 個の正規化制約残差（c̄_j = 0）。

    Args:
        state (np.ndarray): 現在の状態
        action (np.ndarray): 行動
        channels (ChannelSet): このエピソードのチャネル
        config (ScenarioConfig): シナリオ設定
        multipliers (np.ndarray): ラグランジュ乗数 λ
        layout (Optional[ActionLayout]): 行動レイアウト
        rate_mode (str): 'rsma' または 'noma'

    Returns:
        CmdpStep: 遷移
    """
    layout = layout or layout_for(config)
    vars = decode_action(action, layout, channels, config, rate_mode)
    objective, constraints, metrics = evaluate(vars, channels, config, rate_mode)
    costs = constraints.vector()
    base = -objective.value
    reward = base - penalty(multipliers, costs)
    return CmdpStep(
        state=np.asarray(state),
        action=np.asarray(action, dtype=float),
        reward=float(reward),
        costs=costs,
        next_state=state_features(channels, vars.tau_EH, action),
        objective_reward=float(base),
        info={'se': metrics.se, 'ee': metrics.ee, 'feasible': float(constraints.feasible)},
    )


class CmdpEnv:
    """衛星 ASIM シナリオの CMDP 環境"""

    cost_names = CONSTRAINT_NAMES

    def __init__(self, config: ScenarioConfig, seed: int, horizon: int = 32, rate_mode: str = 'rsma'):
        """
        初期化関数

        Args:
            config (ScenarioConfig): シナリオ設定
            seed (int): 乱数シード（エピソードごとのチャネルを派生させる）
            horizon (int): エピソード長 T
            rate_mode (str): 'rsma' または 'noma'
        """
        self.config = config
        self.layout = layout_for(config)
        self.horizon = int(horizon)
        self.rate_mode = rate_mode
        self._rng = SeededRng(seed)
        self._episode = 0
        self._t = 0
        self.channels: Optional[ChannelSet] = None
        self._state: Optional[np.ndarray] = None

    @property
    def state_dim(self) -> int:
        cfg = self.config
        return 2 * cfg.L * cfg.M + 2 * cfg.I * cfg.M + cfg.I + self.layout.dim

    @property
    def n_costs(self) -> int:
        return len(self.cost_names)

    def reset(self) -> np.ndarray:
        """新しいチャネルでエピソードを開始する"""
        seed = int(self._rng.child(self._episode).integers(0, 2 ** 62))
        self._episode += 1
        self._t = 0
        self.channels = generate(self.config, seed)
        self._state = state_features(self.channels, np.full(self.config.I, 0.5), np.zeros(self.layout.dim))
        return self._state

    def step(self, action: np.ndarray, multipliers: Optional[np.ndarray] = None) -> CmdpStep:
        if self.channels is None:
            raise RuntimeError("reset() を先に呼び出す必要があります")
        lam = np.zeros(self.n_costs) if multipliers is None else multipliers
        step = env_step(self._state, action, self.channels, self.config, lam, self.layout, self.rate_mode)
        self._t += 1
        step.done = self._t >= self.horizon
        self._state = step.next_state
        return step
