#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
能動型積層メタサーフェス（ASIM）モジュール

層ごとの利得・位相による対角チューニング行列、多層の伝達行列、
ASIM 出力電力、および比較用の Active RIS / Active BD-RIS を扱う。
"""

import logging
import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import List, Optional, Sequence, Union

import numpy as np

from src.numerics.linalg import check_finite
from src.utils.error_utils import DimensionError

# ロギングの設定
logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi


class SurfaceKind(str, Enum):
    """表面アーキテクチャの種類"""

    ASIM = 'asim'
    ACTIVE_RIS = 'active-ris'
    ACTIVE_BD_RIS = 'bd-ris'


@dataclass(frozen=True)
class AsimState:
    """
    ASIM（または単層 Active RIS）の層ごとの利得と位相

    rho, theta はいずれも Q×M。ACTIVE_RIS は Q=1 で層間行列を通さない。
    """

    rho: np.ndarray
    theta: np.ndarray
    kind: SurfaceKind = SurfaceKind.ASIM

    @property
    def Q(self) -> int:
        return self.rho.shape[0]

    @property
    def M(self) -> int:
        return self.rho.shape[1]


@dataclass(frozen=True)
class BdRisState:
    """
    Active BD-RIS のブロック利得と Cayley 種行列

    gains は長さ M/b、seeds は (M/b)×b×b の実対称行列。
    """

    gains: np.ndarray
    seeds: np.ndarray
    kind: SurfaceKind = SurfaceKind.ACTIVE_BD_RIS

    @property
    def block(self) -> int:
        return self.seeds.shape[1]

    @property
    def M(self) -> int:
        return self.seeds.shape[0] * self.seeds.shape[1]


Surface = Union[AsimState, BdRisState]


def layer_matrix(rho_row: Sequence[float], theta_row: Sequence[float]) -> np.ndarray:
    """
    対角チューニング行列 diag(ρ_m e^{jθ_m})

    Args:
        rho_row (Sequence[float]): 利得（長さ M）
        theta_row (Sequence[float]): 位相 [rad]（長さ M）

    Returns:
        np.ndarray: M×M 対角行列

    Raises:
        DimensionError: 長さが一致しない場合
        ValueError: 負の利得を含む場合
    """
    rho = np.asarray(rho_row, dtype=float)
    theta = np.asarray(theta_row, dtype=float)
    if rho.shape != theta.shape or rho.ndim != 1:
        raise DimensionError(f"利得と位相の長さが一致しません: {rho.shape} / {theta.shape}")
    if np.any(rho < 0):
        raise ValueError("利得 ρ は 0 以上である必要があります")
    return np.diag(rho * np.exp(1j * theta))


def transfer_matrix(state: AsimState, H_layers: Optional[Sequence[np.ndarray]]) -> np.ndarray:
    """
    ASIM 全体の伝達行列 T = Φ^(Q) H^(Q) ··· Φ^(1) H^(1)

    Args:
        state (AsimState): 層ごとの利得・位相
        H_layers (Optional[Sequence[np.ndarray]]): 層間行列（None は単位行列扱い）

    Returns:
        np.ndarray: M×M 伝達行列

    Raises:
        DimensionError: 層数や次元が一致しない場合
    """
    if H_layers is not None and len(H_layers) != state.Q:
        raise DimensionError(f"層間行列の数 {len(H_layers)} が層数 {state.Q} と一致しません")

    T = np.eye(state.M, dtype=np.complex128)
    for q in range(state.Q):
        if H_layers is not None:
            H = np.asarray(H_layers[q])
            if H.shape != (state.M, state.M):
                raise DimensionError(f"H^({q + 1}) の次元 {H.shape} が M={state.M} と一致しません")
            T = H @ T
        T = (state.rho[q] * np.exp(1j * state.theta[q]))[:, None] * T
    return T


def cayley_unitary(seed: np.ndarray) -> np.ndarray:
    """
    実対称行列 X から対称ユニタリ行列 (I − jX)(I + jX)^{-1} を作る
    """
    X = 0.5 * (seed + seed.T)
    identity = np.eye(X.shape[0])
    return (identity - 1j * X) @ np.linalg.inv(identity + 1j * X)


def bd_matrix(state: BdRisState) -> np.ndarray:
    """ブロック対角行列 blockdiag(ρ_b U_b)"""
    b = state.block
    out = np.zeros((state.M, state.M), dtype=np.complex128)
    for k, (gain, seed) in enumerate(zip(state.gains, state.seeds)):
        out[k * b:(k + 1) * b, k * b:(k + 1) * b] = gain * cayley_unitary(seed)
    return out


def baseline_transfer(kind: SurfaceKind, params: Surface, H_layers: Optional[Sequence[np.ndarray]] = None) -> np.ndarray:
    """
    表面の種類に応じた伝達行列

    Active RIS は単層の対角行列、BD-RIS は単層のブロック対角行列で、
    いずれも層間行列を通さない。

    Args:
        kind (SurfaceKind): 表面の種類
        params (Surface): 表面パラメータ
        H_layers (Optional[Sequence[np.ndarray]]): ASIM 用の層間行列

    Returns:
        np.ndarray: 伝達行列
    """
    kind = SurfaceKind(kind)
    if kind == SurfaceKind.ACTIVE_BD_RIS:
        if not isinstance(params, BdRisState):
            raise DimensionError("BD-RIS には BdRisState が必要です")
        return bd_matrix(params)
    if kind == SurfaceKind.ACTIVE_RIS:
        return layer_matrix(params.rho[0], params.theta[0])
    return transfer_matrix(params, H_layers)


def surface_transfer(state: Surface, H_layers: Optional[Sequence[np.ndarray]]) -> np.ndarray:
    """状態の kind に従って伝達行列を返す"""
    return baseline_transfer(state.kind, state, H_layers)


def layer_matrices(state: Surface) -> List[np.ndarray]:
    """雑音電力の計算に使う各層の行列"""
    if isinstance(state, BdRisState):
        return [bd_matrix(state)]
    return [layer_matrix(state.rho[q], state.theta[q]) for q in range(state.Q)]


def output_layer(state: Surface) -> np.ndarray:
    """最終層（出力側）の行列。ユーザー側の ASIM 雑音係数に使う"""
    return layer_matrices(state)[-1]


def asim_power(
    state: Surface,
    F: np.ndarray,
    W: np.ndarray,
    sigma2_SIM: float,
    H_layers: Optional[Sequence[np.ndarray]] = None,
) -> float:
    """
    表面出力の信号電力と能動素子雑音の和

    信号は全層を通過した出力での電力 ‖T F W‖²_F、雑音は Σ_q ‖Φ^(q)‖²_F σ²_SIM。
    W には電力配分を織り込んだ実効プリコーダを渡す。

    Args:
        state (Surface): 表面の状態
        F (np.ndarray): 衛星→表面行列（M×N）
        W (np.ndarray): 実効プリコーダ（N×ストリーム数）
        sigma2_SIM (float): 能動素子の雑音分散
        H_layers (Optional[Sequence[np.ndarray]]): 層間行列

    Returns:
        float: 電力 [W]
    """
    T = surface_transfer(state, H_layers)
    signal = float(np.sum(np.abs(T @ F @ W) ** 2))
    noise = sum(float(np.sum(np.abs(P) ** 2)) for P in layer_matrices(state)) * sigma2_SIM
    return check_finite("ASIM 出力電力", np.array(signal + noise)).item()


def layer_powers(
    state: Surface,
    F: np.ndarray,
    W: np.ndarray,
    sigma2_SIM: float,
    H_layers: Optional[Sequence[np.ndarray]] = None,
) -> List[float]:
    """各層出力での信号電力 + その層の雑音電力（層ごとの参考値）"""
    if isinstance(state, BdRisState) or state.kind == SurfaceKind.ACTIVE_RIS:
        return [asim_power(state, F, W, sigma2_SIM, H_layers)]

    signal = F @ W
    powers = []
    for q in range(state.Q):
        if H_layers is not None:
            signal = H_layers[q] @ signal
        diag = state.rho[q] * np.exp(1j * state.theta[q])
        signal = diag[:, None] * signal
        noise = float(np.sum(state.rho[q] ** 2)) * sigma2_SIM
        powers.append(float(np.sum(np.abs(signal) ** 2)) + noise)
    return powers


def initial_surface(kind: SurfaceKind, M: int, Q: int, P_SIM_max: float, block: int = 2) -> Surface:
    """
    初期状態（ρ = min(1, √P_SIM_max)、θ = 0、BD-RIS は単位ブロック）

    Raises:
        DimensionError: BD-RIS のブロックサイズが M を割り切らない場合
    """
    kind = SurfaceKind(kind)
    gain = min(1.0, math.sqrt(P_SIM_max))
    if kind == SurfaceKind.ACTIVE_BD_RIS:
        if block < 1 or M % block != 0:
            raise DimensionError(f"ブロックサイズ {block} が M={M} を割り切りません")
        return BdRisState(
            gains=np.full(M // block, gain),
            seeds=np.zeros((M // block, block, block)),
        )
    layers = 1 if kind == SurfaceKind.ACTIVE_RIS else Q
    return AsimState(rho=np.full((layers, M), gain), theta=np.zeros((layers, M)), kind=kind)


def project_surface(state: Surface, P_SIM_max: float) -> Surface:
    """利得を [0, √P_SIM_max] に、位相を [0, 2π) に射影する"""
    limit = math.sqrt(P_SIM_max)
    if isinstance(state, BdRisState):
        seeds = 0.5 * (state.seeds + np.transpose(state.seeds, (0, 2, 1)))
        return replace(state, gains=np.clip(state.gains, 0.0, limit), seeds=seeds)
    theta = np.mod(state.theta, TWO_PI)
    theta = np.where(theta >= TWO_PI, 0.0, theta)
    return replace(state, rho=np.clip(state.rho, 0.0, limit), theta=theta)


def zero_gain(state: Surface) -> Surface:
    """全利得を 0 にした状態"""
    if isinstance(state, BdRisState):
        return replace(state, gains=np.zeros_like(state.gains))
    return replace(state, rho=np.zeros_like(state.rho))
