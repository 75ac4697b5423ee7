#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
設定管理モジュール

config.yml（scenario / solver / drl / sweep の 4 セクション）を読み込み、
各セクションを凍結データクラスに変換する。キー名はフィールド名と同一で、
末尾が _dBm のキーはワットに変換して対応するフィールドへ格納する。
"""

import logging
import math
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Any, Dict, Optional, Tuple

import yaml
from scipy.constants import speed_of_light

from src.utils.error_utils import ConfigError, safe_get

# ロギングの設定
logger = logging.getLogger(__name__)

SURFACE_KINDS = ('asim', 'active-ris', 'bd-ris')
SECTIONS = ('scenario', 'solver', 'drl', 'sweep')


def dbm_to_watt(value_dbm: float) -> float:
    """dBm をワットに変換する"""
    return 10.0 ** ((float(value_dbm) - 30.0) / 10.0)


def watt_to_dbm(value_w: float) -> float:
    """ワットを dBm に変換する"""
    return 10.0 * math.log10(float(value_w)) + 30.0


def db_to_linear(value_db: float) -> float:
    return 10.0 ** (float(value_db) / 10.0)


@dataclass(frozen=True)
class ScenarioConfig:
    """物理層シナリオとシステムパラメータ（電力はワット）"""

    # アンテナ・素子・層・ユーザー数
    N: int = 32
    M: int = 128
    Q: int = 4
    L: int = 3
    I: int = 3
    K: int = 100
    # レート式の帯域幅（1 のとき bps/Hz）と EE 換算用の帯域幅
    B: float = 1.0
    bandwidth_hz: float = 10e6
    # 伝搬
    carrier_freq: float = 20e9
    altitude: float = 500e3
    pathloss_exp: float = 2.2
    rician_K_dB: float = 10.0
    sat_antenna_gain_dBi: float = 43.0
    ue_antenna_gain_dBi: float = 32.0
    sbd_link_gain_dB: float = 0.0
    space_loss_link: str = 'downlink'
    h_mode: str = 'near_field'
    layer_spacing_wl: float = 5.0
    sbd_disc_radius: float = 1000.0
    sbd_range_min: float = 10.0
    sbd_range_max: float = 100.0
    # 雑音・推定誤差
    sigma2_SIM: float = field(default_factory=lambda: dbm_to_watt(-70.0))
    sigma2_Ul: float = field(default_factory=lambda: dbm_to_watt(-80.0))
    sigma2_SUE: float = field(default_factory=lambda: dbm_to_watt(-80.0))
    sigma2_e: float = 1e-3
    # 共生無線
    Gamma: float = 0.8
    eps_SBD: Optional[float] = None
    eps_sbd_margin: float = 0.1
    # 電力上限・QoS
    P_sat_max: float = field(default_factory=lambda: dbm_to_watt(30.0))
    P_SIM_max: float = field(default_factory=lambda: dbm_to_watt(30.0))
    R_sum_th: float = 5.0
    R_SR_th: float = 2.0
    # 太陽光発電
    A_solar: float = 0.5
    E_solar: float = 1360.0
    eta_solar: float = 0.32
    PR: float = 0.8
    f_eclipse: float = 0.7
    # 回路電力
    P_D_sat: float = field(default_factory=lambda: dbm_to_watt(18.75))
    P_C_sat: float = field(default_factory=lambda: dbm_to_watt(35.44))
    P_phs: float = field(default_factory=lambda: dbm_to_watt(7.0))
    P_amp: float = field(default_factory=lambda: dbm_to_watt(10.0))
    P_DC_SIM: float = field(default_factory=lambda: dbm_to_watt(8.45))
    P_proc: float = field(default_factory=lambda: dbm_to_watt(3.0))
    # 電力増幅器と目的関数の重み
    eta_PA_sat: float = 0.35
    eta_PA_SIM: float = 0.5
    pa_mode: str = 'fixed'
    alpha: float = 0.5
    beta: float = 0.5
    # 表面の種類
    surface: str = 'asim'
    bd_block: int = 2
    feasibility_tol: float = 1e-6

    @property
    def wavelength(self) -> float:
        return speed_of_light / self.carrier_freq

    def validate(self) -> None:
        """
        値の範囲を検証する

        Raises:
            ConfigError: 不正な値が含まれる場合
        """
        for name in ('N', 'M', 'Q', 'L', 'I', 'K'):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"scenario.{name} は 1 以上である必要があります: {getattr(self, name)}")
        for name in ('sigma2_SIM', 'sigma2_Ul', 'sigma2_SUE'):
            if getattr(self, name) <= 0:
                raise ConfigError(f"scenario.{name} は正である必要があります")
        if self.sigma2_e < 0:
            raise ConfigError("scenario.sigma2_e は 0 以上である必要があります")
        if not 0.0 <= self.Gamma <= 1.0:
            raise ConfigError(f"scenario.Gamma は [0,1] の範囲である必要があります: {self.Gamma}")
        if not 0.0 < self.f_eclipse <= 1.0:
            raise ConfigError(f"scenario.f_eclipse は (0,1] の範囲である必要があります: {self.f_eclipse}")
        if self.B <= 0 or self.bandwidth_hz <= 0 or self.carrier_freq <= 0 or self.altitude <= 0:
            raise ConfigError("帯域幅・搬送波周波数・高度は正である必要があります")
        if self.P_sat_max <= 0 or self.P_SIM_max <= 0:
            raise ConfigError("電力上限は正である必要があります")
        if not (0.0 < self.eta_PA_sat <= 1.0 and 0.0 < self.eta_PA_SIM <= 1.0):
            raise ConfigError("電力増幅器効率は (0,1] の範囲である必要があります")
        if self.alpha < 0 or self.beta < 0:
            raise ConfigError("目的関数の重みは 0 以上である必要があります")
        if self.pa_mode not in ('fixed', 'optimized'):
            raise ConfigError(f"未対応の pa_mode です: {self.pa_mode}")
        if self.space_loss_link not in ('downlink', 'feed'):
            raise ConfigError(f"未対応の space_loss_link です: {self.space_loss_link}")
        if self.h_mode not in ('near_field', 'random'):
            raise ConfigError(f"未対応の h_mode です: {self.h_mode}")
        if self.surface not in SURFACE_KINDS:
            raise ConfigError(f"未対応の surface です: {self.surface}")
        if self.surface == 'bd-ris' and self.M % self.bd_block != 0:
            raise ConfigError(f"BD-RIS のブロックサイズ {self.bd_block} が M={self.M} を割り切りません")
        if self.eps_SBD is not None and self.eps_SBD < 0:
            raise ConfigError("scenario.eps_SBD は 0 以上である必要があります")

    @property
    def theta_sat(self) -> float:
        """衛星側の逆電力増幅器効率 ϑ_sat"""
        return 1.0 if self.pa_mode == 'optimized' else 1.0 / self.eta_PA_sat

    @property
    def theta_SIM(self) -> float:
        """ASIM 側の逆電力増幅器効率 ϑ_SIM"""
        return 1.0 if self.pa_mode == 'optimized' else 1.0 / self.eta_PA_SIM


@dataclass(frozen=True)
class SolverConfig:
    """BCD-SCA ソルバーの設定"""

    eps: float = 1e-4
    delta: float = 1e-3
    max_outer: int = 100
    inner_max_steps: int = 500
    inner_tol: float = 1e-6
    descent_tol: float = 1e-6
    surrogate_mode: str = 'log'
    penalty_weight: float = 100.0
    al_growth: float = 4.0
    al_rho0: float = 1.0
    al_eps: float = 1e-6
    al_rho_cap: float = 1e8
    al_max_iter: int = 30
    record_wall_time: bool = False

    def validate(self) -> None:
        if self.surrogate_mode not in ('log', 'taylor'):
            raise ConfigError(f"未対応の surrogate_mode です: {self.surrogate_mode}")
        if self.al_growth <= 1.0:
            raise ConfigError("solver.al_growth は 1 より大きい必要があります")
        if self.max_outer < 1 or self.inner_max_steps < 1 or self.al_max_iter < 1:
            raise ConfigError("反復回数は 1 以上である必要があります")


@dataclass(frozen=True)
class DrlConfig:
    """MA-CSAC / MCPPO の学習設定"""

    episodes: int = 1000
    steps_per_episode: int = 32
    hidden: Tuple[int, ...] = (64, 64)
    eps_tol: float = 0.01
    init_lambda: float = 0.0
    eta_lambda: float = 5e-4
    divergence_limit: float = 1e6
    # MA-CSAC
    sac_gamma: float = 0.99
    sac_actor_lr: float = 3e-4
    sac_critic_lr: float = 1e-3
    sac_alpha_lr: float = 3e-4
    sac_init_entropy: float = 0.1
    buffer_size: int = 1000000
    sac_batch: int = 2048
    tau: float = 5e-3
    grad_steps: int = 64
    # MCPPO
    ppo_gamma: float = 0.995
    gae_lambda: float = 0.95
    ppo_actor_lr: float = 5e-4
    ppo_critic_lr: float = 7e-4
    ppo_batch: int = 4096
    ppo_minibatch: int = 256
    ppo_epochs: int = 10
    clip_eps: float = 0.2
    kl_stop: float = 0.05
    max_grad_norm: float = 0.5

    def validate(self) -> None:
        if self.episodes < 1 or self.steps_per_episode < 1:
            raise ConfigError("drl.episodes と drl.steps_per_episode は 1 以上である必要があります")
        if not 0.0 <= self.sac_gamma <= 1.0 or not 0.0 <= self.ppo_gamma <= 1.0:
            raise ConfigError("割引率は [0,1] の範囲である必要があります")
        if self.eta_lambda < 0 or self.eps_tol < 0:
            raise ConfigError("乗数学習率と許容誤差は 0 以上である必要があります")


@dataclass(frozen=True)
class SweepConfig:
    """スイープ・表面比較の設定"""

    seeds: int = 10
    axis: str = 'M'
    values: Tuple[str, ...] = ('8', '16', '32')
    compare_p_dbm: Tuple[float, ...] = (20.0, 30.0, 40.0)
    compare_q: int = 4
    workers: int = 4


@dataclass(frozen=True)
class ExperimentConfig:
    """設定ファイル全体"""

    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    drl: DrlConfig = field(default_factory=DrlConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)

    def validate(self) -> None:
        self.scenario.validate()
        self.solver.validate()
        self.drl.validate()

    def snapshot(self) -> Dict[str, Any]:
        """マニフェスト用の辞書表現"""
        return asdict(self)


_SECTION_TYPES = {
    'scenario': ScenarioConfig,
    'solver': SolverConfig,
    'drl': DrlConfig,
    'sweep': SweepConfig,
}


def _coerce(cls, name: str, value: Any) -> Any:
    """YAML の値をフィールドの既定値の型に合わせる"""
    sample = getattr(cls(), name)
    if isinstance(sample, bool):
        return bool(value)
    if isinstance(sample, int) and not isinstance(sample, bool):
        return int(value)
    if isinstance(sample, float):
        return float(value)
    if isinstance(sample, tuple):
        return tuple(value) if isinstance(value, (list, tuple)) else (value,)
    if name == 'eps_SBD' and value is not None:
        return float(value)
    return value


def section_from_dict(cls, section: str, raw: Optional[Dict[str, Any]]):
    """
    1 セクション分の辞書をデータクラスに変換する

    Args:
        cls: 対象データクラス
        section (str): セクション名（エラーメッセージ用）
        raw (Optional[Dict[str, Any]]): YAML から読んだ辞書

    Returns:
        変換後のデータクラスインスタンス

    Raises:
        ConfigError: 未知のキーや変換できない値がある場合
    """
    known = {f.name for f in fields(cls)}
    values: Dict[str, Any] = {}
    for key, value in (raw or {}).items():
        name = key
        if key.endswith('_dBm'):
            name = key[:-len('_dBm')]
            if name not in known:
                raise ConfigError(f"{section}.{key}: 対応するフィールド {name} が存在しません")
            try:
                value = dbm_to_watt(value)
            except (TypeError, ValueError) as e:
                raise ConfigError(f"{section}.{key}: dBm 値を変換できません: {str(e)}")
        elif key not in known:
            raise ConfigError(f"{section}.{key}: 未知の設定キーです")
        try:
            values[name] = _coerce(cls, name, value)
        except (TypeError, ValueError) as e:
            raise ConfigError(f"{section}.{key}: 値を変換できません: {str(e)}")
    return cls(**values)


def config_from_dict(raw: Dict[str, Any]) -> ExperimentConfig:
    """辞書から ExperimentConfig を構築して検証する"""
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError("設定ファイルの最上位はマッピングである必要があります")
    unknown = set(raw) - set(SECTIONS)
    if unknown:
        raise ConfigError(f"未知のセクションです: {sorted(unknown)}")

    config = ExperimentConfig(
        **{
            name: section_from_dict(cls, name, safe_get(raw, name, {}))
            for name, cls in _SECTION_TYPES.items()
        }
    )
    config.validate()
    return config


def load_config(path: str) -> ExperimentConfig:
    """
    YAML 設定ファイルを読み込む

    Args:
        path (str): 設定ファイルパス

    Returns:
        ExperimentConfig: 検証済みの設定

    Raises:
        ConfigError: ファイルが読めない、または内容が不正な場合
    """
    try:
        with open(path, 'r', encoding='utf-8') as f:
            raw = yaml.safe_load(f)
    except FileNotFoundError:
        raise ConfigError(f"設定ファイルが見つかりません: {path}")
    except OSError as e:
        raise ConfigError(f"設定ファイルを読み込めません: {path}: {str(e)}")
    except yaml.YAMLError as e:
        raise ConfigError(f"設定ファイルの YAML 構文が不正です: {path}: {str(e)}")

    config = config_from_dict(raw)
    logger.info(f"設定ファイル {path} を読み込みました")
    return config


def with_overrides(config: ExperimentConfig, section: str = 'scenario', **overrides) -> ExperimentConfig:
    """指定セクションの値を置き換えた新しい設定を返す"""
    updated = replace(getattr(config, section), **overrides)
    if hasattr(updated, 'validate'):
        updated.validate()
    return replace(config, **{section: updated})
