#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
チャネル生成モジュール

シナリオとシードから全リンクの 1 実現値を生成する。
衛星→ASIM 行列 F、層間行列 H^(q)、ASIM→ユーザーベクトル g_l とその推定値、
SBD の順方向・後方散乱チャネル、SUE の直接成分 d を含む。
"""

import logging
import math
from dataclasses import dataclass, replace
from typing import Optional, Tuple

import numpy as np
from scipy.constants import speed_of_light

from src.config import ScenarioConfig, db_to_linear
from src.numerics.rng import SeededRng
from src.utils.error_utils import DimensionError, RankDeficientError, with_retry

# ロギングの設定
logger = logging.getLogger(__name__)

# 層間行列のフルランク判定しきい値（最小特異値 / 最大特異値）
RANK_TOLERANCE = 1e-9
MAX_REGENERATION_ATTEMPTS = 10


@dataclass(frozen=True)
class ChannelSet:
    """1 回分のチャネル実現値（生成後は変更しない）"""

    # 衛星アンテナ → ASIM 入力（M×N）
    F: np.ndarray
    # 層間伝搬行列（Q 個の M×M）
    H_layers: Tuple[np.ndarray, ...]
    # ASIM 出力 → ユーザー（L×M、行が g_l）
    g: np.ndarray
    # 推定チャネル ĝ_l = g_l + e_l
    g_hat: np.ndarray
    # ASIM 出力 → SBD（I×M）
    h_sbd: np.ndarray
    # SBD → SUE の後方散乱係数（長さ I）
    h_r: np.ndarray
    # SUE での衛星直接成分（長さ M）
    d: np.ndarray
    # 大規模減衰（ユーザーごと、SBD ごと）
    g_gain: np.ndarray
    h_gain: np.ndarray
    seed: int = 0

    @property
    def M(self) -> int:
        return self.F.shape[0]

    @property
    def N(self) -> int:
        return self.F.shape[1]

    @property
    def Q(self) -> int:
        return len(self.H_layers)

    @property
    def L(self) -> int:
        return self.g.shape[0]

    @property
    def I(self) -> int:
        return self.h_sbd.shape[0]

    def users(self, csi: str = 'estimated') -> np.ndarray:
        """最適化側（estimated）または実測側（true）のユーザーチャネル"""
        return self.g_hat if csi == 'estimated' else self.g


def pathloss(freq_hz: float, distance_m: float, exponent: float) -> float:
    """
    自由空間型の経路損失（線形利得）

    Args:
        freq_hz (float): 搬送波周波数 [Hz]
        distance_m (float): 距離 [m]
        exponent (float): 経路損失指数

    Returns:
        float: (c/(4πf))² · d^(−exponent)
    """
    if freq_hz <= 0 or distance_m <= 0:
        raise ValueError("周波数と距離は正である必要があります")
    reference = speed_of_light / (4.0 * math.pi * freq_hz)
    return reference ** 2 * distance_m ** (-exponent)


def rician(rng: SeededRng, los: np.ndarray, k_factor: float, gain: float = 1.0) -> np.ndarray:
    """
    LoS 成分と散乱成分を K ファクターで合成したライス・フェージング

    Args:
        rng (SeededRng): 乱数生成器
        los (np.ndarray): 単位振幅の LoS 成分
        k_factor (float): 線形 K ファクター
        gain (float): 大規模減衰（平均電力）

    Returns:
        np.ndarray: los と同形状の複素配列
    """
    scatter = rng.complex_normal(los.shape)
    return math.sqrt(gain) * (
        math.sqrt(k_factor / (1.0 + k_factor)) * los
        + math.sqrt(1.0 / (1.0 + k_factor)) * scatter
    )


def grid_shape(M: int) -> Tuple[int, int]:
    """ほぼ正方形の平面格子（列数 ceil(√M)）"""
    cols = int(math.ceil(math.sqrt(M)))
    rows = int(math.ceil(M / cols))
    return rows, cols


def planar_steering(M: int, azimuth: float, elevation: float) -> np.ndarray:
    """半波長間隔の平面アレイのステアリングベクトル"""
    _, cols = grid_shape(M)
    index = np.arange(M)
    x = index % cols
    y = index // cols
    phase = math.pi * (
        x * math.sin(elevation) * math.cos(azimuth)
        + y * math.sin(elevation) * math.sin(azimuth)
    )
    return np.exp(1j * phase)


def linear_steering(N: int, angle: float) -> np.ndarray:
    """半波長間隔の線形アレイのステアリングベクトル"""
    return np.exp(1j * math.pi * np.arange(N) * math.sin(angle))


def element_positions(config: ScenarioConfig, rng: Optional[SeededRng] = None, jitter: float = 0.0) -> np.ndarray:
    """
    1 層分の素子座標（M×2、単位 m）

    素子ピッチは pitch² = λ·D / cols（D は層間隔）とし、層間の伝搬行列が
    良条件になるようにする。jitter > 0 の場合はピッチ比の乱数摂動を加える。
    """
    rows, cols = grid_shape(config.M)
    wavelength = config.wavelength
    spacing = config.layer_spacing_wl * wavelength
    pitch = math.sqrt(wavelength * spacing / cols)
    index = np.arange(config.M)
    positions = np.stack([(index % cols) * pitch, (index // cols) * pitch], axis=1)
    if jitter > 0 and rng is not None:
        positions = positions + rng.normal((config.M, 2), scale=jitter * pitch)
    return positions


def near_field_matrix(config: ScenarioConfig, positions_in: np.ndarray, positions_out: np.ndarray) -> np.ndarray:
    """
    近傍界回折モデルによる層間行列

    要素 (m, m') は振幅 ∝ 1/r、位相 −2πr/λ。‖H‖²_F = M に正規化する。
    """
    wavelength = config.wavelength
    spacing = config.layer_spacing_wl * wavelength
    delta = positions_out[:, None, :] - positions_in[None, :, :]
    r = np.sqrt(np.sum(delta ** 2, axis=2) + spacing ** 2)
    H = (wavelength / (4.0 * math.pi * r)) * np.exp(-2j * math.pi * r / wavelength)
    return normalize_layer(H)


def normalize_layer(H: np.ndarray) -> np.ndarray:
    M = H.shape[0]
    return H * math.sqrt(M) / np.linalg.norm(H, 'fro')


def check_full_rank(H: np.ndarray) -> float:
    """
    フルランク判定

    Returns:
        float: 最小特異値 / 最大特異値

    Raises:
        RankDeficientError: 比がしきい値以下の場合
    """
    singular = np.linalg.svd(H, compute_uv=False)
    ratio = float(singular[-1] / singular[0]) if singular[0] > 0 else 0.0
    if not ratio > RANK_TOLERANCE:
        raise RankDeficientError(f"層間行列がランク落ちしています: σ_min/σ_max={ratio:.3e}")
    return ratio


@with_retry(
    max_attempts=MAX_REGENERATION_ATTEMPTS,
    retry_exceptions=RankDeficientError,
    pass_attempt=True,
)
def inter_layer_matrices(config: ScenarioConfig, rng: SeededRng, attempt: int = 0) -> Tuple[np.ndarray, ...]:
    """
    Q 個の層間行列を生成してフルランクを確認する

    再試行のたびに素子位置へ摂動を加える（random モードでは新しい乱数行列を引く）。

    Args:
        config (ScenarioConfig): シナリオ設定
        rng (SeededRng): 乱数生成器
        attempt (int): 試行番号（with_retry が渡す）

    Returns:
        Tuple[np.ndarray, ...]: H^(1) .. H^(Q)
    """
    attempt_rng = rng.child(1000 + attempt)
    layers = []
    if config.h_mode == 'random':
        for _ in range(config.Q):
            layers.append(normalize_layer(attempt_rng.complex_normal((config.M, config.M))))
    else:
        jitter = 0.05 * attempt
        planes = [element_positions(config, attempt_rng, jitter) for _ in range(config.Q + 1)]
        for q in range(config.Q):
            layers.append(near_field_matrix(config, planes[q], planes[q + 1]))

    for q, H in enumerate(layers):
        ratio = check_full_rank(H)
        logger.debug(f"層間行列 H^({q + 1}) の条件比: {ratio:.3e}")
    if attempt > 0:
        logger.warning(f"層間行列を {attempt + 1} 回目の試行で再生成しました")
    return tuple(layers)


def _ground_positions(rng: SeededRng, count: int, radius: float) -> np.ndarray:
    """ビーム直下の円盤内に一様分布する地上位置"""
    r = radius * np.sqrt(rng.uniform(0.0, 1.0, count))
    phi = rng.uniform(0.0, 2.0 * math.pi, count)
    return np.stack([r * np.cos(phi), r * np.sin(phi)], axis=1)


def generate(config: ScenarioConfig, seed: int) -> ChannelSet:
    """
    シナリオとシードから全リンクのチャネルを生成する

    Args:
        config (ScenarioConfig): シナリオ設定
        seed (int): 乱数シード

    Returns:
        ChannelSet: チャネル実現値

    Raises:
        RankDeficientError: 10 回の再生成後もフルランクにならない場合
    """
    rng = SeededRng(seed)
    M, N, L, I = config.M, config.N, config.L, config.I
    k_sat = db_to_linear(config.rician_K_dB)
    link_gain = db_to_linear(config.sat_antenna_gain_dBi + config.ue_antenna_gain_dBi)
    sat_gain = db_to_linear(config.sat_antenna_gain_dBi)

    # 地上ユーザーと SBD の位置（傾斜距離）
    users = _ground_positions(rng, L, config.sbd_disc_radius)
    sbds = _ground_positions(rng, I, config.sbd_disc_radius)
    user_range = np.sqrt(config.altitude ** 2 + np.sum(users ** 2, axis=1))
    sbd_range = np.sqrt(config.altitude ** 2 + np.sum(sbds ** 2, axis=1))
    user_loss = np.array([pathloss(config.carrier_freq, r, config.pathloss_exp) for r in user_range])
    sbd_loss = np.array([pathloss(config.carrier_freq, r, config.pathloss_exp) for r in sbd_range])

    if config.space_loss_link == 'feed':
        feed_gain = float(np.mean(user_loss)) * link_gain
        g_gain = np.ones(L)
        h_gain = np.full(I, sat_gain / link_gain)
    else:
        feed_gain = 1.0
        g_gain = user_loss * link_gain
        h_gain = sbd_loss * sat_gain

    # 衛星 → ASIM（オンボード給電、E‖Fw‖² = ‖w‖² に正規化）
    feed_los = np.outer(
        planar_steering(M, rng.uniform(0.0, 2.0 * math.pi), rng.uniform(0.0, math.pi / 3)),
        np.conj(linear_steering(N, rng.uniform(-math.pi / 3, math.pi / 3))),
    )
    F = rician(rng, feed_los, k_sat, feed_gain / M)

    # ASIM → ユーザー
    g = np.empty((L, M), dtype=np.complex128)
    for l in range(L):
        los = planar_steering(M, rng.uniform(0.0, 2.0 * math.pi), rng.uniform(0.0, math.pi / 3))
        g[l] = rician(rng, los, k_sat, g_gain[l])

    # 不完全 CSI（要素ごとの誤差分散 σ²_e）
    if config.sigma2_e > 0:
        error = rng.complex_normal((L, M), variance=config.sigma2_e)
        g_hat = g + error
    else:
        g_hat = g.copy()

    # ASIM → SBD と SBD → SUE
    h_sbd = np.empty((I, M), dtype=np.complex128)
    for i in range(I):
        los = planar_steering(M, rng.uniform(0.0, 2.0 * math.pi), rng.uniform(0.0, math.pi / 3))
        h_sbd[i] = rician(rng, los, k_sat, h_gain[i])
    terrestrial = rng.uniform(config.sbd_range_min, config.sbd_range_max, I)
    # SBD → SUE は地上のレイリー・フェージング
    h_r = np.array([
        rng.complex_normal(1, variance=pathloss(config.carrier_freq, dist, config.pathloss_exp)
                           * db_to_linear(config.sbd_link_gain_dB))[0]
        for dist in terrestrial
    ])

    # SUE の直接成分（g_l と同じ統計）
    d_los = planar_steering(M, rng.uniform(0.0, 2.0 * math.pi), rng.uniform(0.0, math.pi / 3))
    d = rician(rng, d_los, k_sat, float(np.mean(g_gain)))

    H_layers = inter_layer_matrices(config, rng)

    channels = ChannelSet(
        F=F, H_layers=H_layers, g=g, g_hat=g_hat, h_sbd=h_sbd, h_r=h_r, d=d,
        g_gain=np.asarray(g_gain, dtype=float), h_gain=np.asarray(h_gain, dtype=float), seed=int(seed),
    )
    validate_channels(channels, config)
    logger.debug(f"シード {seed} のチャネルを生成しました (M={M}, N={N}, Q={config.Q})")
    return channels


def validate_channels(channels: ChannelSet, config: ScenarioConfig) -> None:
    """チャネルの次元が設定と一致するか確認する"""
    expected = {
        'F': (config.M, config.N),
        'g': (config.L, config.M),
        'g_hat': (config.L, config.M),
        'h_sbd': (config.I, config.M),
        'h_r': (config.I,),
        'd': (config.M,),
    }
    for name, shape in expected.items():
        actual = getattr(channels, name).shape
        if actual != shape:
            raise DimensionError(f"{name} の次元 {actual} が設定 {shape} と一致しません")
    if len(channels.H_layers) != config.Q:
        raise DimensionError(f"層間行列の数 {len(channels.H_layers)} が Q={config.Q} と一致しません")


def with_layers(channels: ChannelSet, H_layers: Tuple[np.ndarray, ...]) -> ChannelSet:
    """層間行列だけを置き換えたチャネルを返す"""
    return replace(channels, H_layers=tuple(H_layers))


def save_channels(path: str, channels: ChannelSet) -> None:
    """
    ChannelSet を .npz（IEEE-754 倍精度）に保存する

    配列名: F, H（Q×M×M）, g, g_hat, h_sbd, h_r, d, g_gain, h_gain, seed
    """
    np.savez(
        path,
        F=channels.F,
        H=np.stack(channels.H_layers) if channels.H_layers else np.zeros((0, channels.M, channels.M), complex),
        g=channels.g,
        g_hat=channels.g_hat,
        h_sbd=channels.h_sbd,
        h_r=channels.h_r,
        d=channels.d,
        g_gain=channels.g_gain,
        h_gain=channels.h_gain,
        seed=np.array(channels.seed, dtype=np.int64),
    )
    logger.info(f"チャネルを {path} に保存しました")


def load_channels(path: str) -> ChannelSet:
    """save_channels で保存した ChannelSet を読み込む"""
    with np.load(path) as data:
        return ChannelSet(
            F=data['F'],
            H_layers=tuple(data['H']),
            g=data['g'],
            g_hat=data['g_hat'],
            h_sbd=data['h_sbd'],
            h_r=data['h_r'],
            d=data['d'],
            g_gain=data['g_gain'],
            h_gain=data['h_gain'],
            seed=int(data['seed']),
        )
