#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
逐次凸近似の代理関数と内部ソルバー

二次変換、レートの一次テイラー展開、|·|² の MM 線形化、
閉形式射影と Armijo バックトラッキング付き射影勾配法を提供する。
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, List, Sequence, Tuple

import numpy as np
import torch

from src.model.ratemodel import log2_slope, rate

# ロギングの設定
logger = logging.getLogger(__name__)


def quad_transform_update(A: float, Bden: float) -> float:
    """
    二次変換の補助変数 y = √A / Bden

    Raises:
        ValueError: Bden ≤ 0 または A < 0 の場合
    """
    if Bden <= 0:
        raise ValueError(f"二次変換の分母は正である必要があります: {Bden}")
    if A < 0:
        raise ValueError(f"二次変換の分子は 0 以上である必要があります: {A}")
    return math.sqrt(A) / Bden


def quad_transform_value(y: float, A: float, Bden: float) -> float:
    """二次変換の代理値 2y√A − y²Bden"""
    return 2.0 * y * math.sqrt(A) - y * y * Bden


def taylor_rate(gamma, gamma_k: float, B: float):
    """
    rate(γ, B) の γ_k における接線

    凹関数の接線なので rate を上から抑える。
    """
    return rate(gamma_k, B) + log2_slope(gamma_k, B) * (np.asarray(gamma, dtype=float) - gamma_k)


@dataclass(frozen=True)
class MmSurrogate:
    """
    |U|² の展開点における線形代理 value + grad_a·(a−a0) + grad_b·(b−b0)

    U = coef·(a + jb) + offset。|U|² は凸なので代理は下界になる。
    """

    value: np.ndarray
    grad_a: np.ndarray
    grad_b: np.ndarray
    point_a: np.ndarray
    point_b: np.ndarray

    def __call__(self, a, b) -> np.ndarray:
        da = np.asarray(a, dtype=float) - self.point_a
        db = np.asarray(b, dtype=float) - self.point_b
        return self.value + np.sum(self.grad_a * da, axis=-1) + np.sum(self.grad_b * db, axis=-1)


def mm_linearize(coef, a, b, offset=0.0) -> MmSurrogate:
    """
    |coef·(a+jb) + offset|² の展開点 (a, b) での接線代理

    Args:
        coef: 複素係数（末尾次元が変数次元）
        a: 実部の展開点
        b: 虚部の展開点
        offset: 定数項

    Returns:
        MmSurrogate: 値と一次係数
    """
    coef = np.asarray(coef, dtype=np.complex128)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    U = np.sum(coef * (a + 1j * b), axis=-1) + offset
    conj_u = np.conj(U)[..., None]
    return MmSurrogate(
        value=np.abs(U) ** 2,
        grad_a=2.0 * np.real(conj_u * coef),
        grad_b=-2.0 * np.imag(conj_u * coef),
        point_a=a,
        point_b=b,
    )


def project_simplex_l1(norms: np.ndarray, radius: float) -> np.ndarray:
    """非負ベクトルを ℓ1 球 Σ x ≤ radius へ射影する"""
    if float(np.sum(norms)) <= radius:
        return norms
    ordered = np.sort(norms)[::-1]
    cumulative = np.cumsum(ordered) - radius
    index = np.arange(1, len(norms) + 1)
    support = ordered - cumulative / index > 0
    k = index[support][-1]
    shift = cumulative[support][-1] / k
    return np.maximum(norms - shift, 0.0)


def project_l21_ball(Vr: torch.Tensor, Vi: torch.Tensor, radius: float) -> Tuple[torch.Tensor, torch.Tensor]:
    """列ノルムの和 Σ_j ‖v_j‖ ≤ radius への射影"""
    norms = torch.sqrt(torch.sum(Vr ** 2 + Vi ** 2, dim=0))
    target = torch.as_tensor(
        project_simplex_l1(norms.detach().numpy(), radius), dtype=Vr.dtype
    )
    scale = torch.where(norms > 0, target / torch.clamp(norms, min=1e-300), torch.zeros_like(norms))
    return Vr * scale, Vi * scale


def project_disc(a: torch.Tensor, b: torch.Tensor, radius: float) -> Tuple[torch.Tensor, torch.Tensor]:
    """各要素 (a, b) を半径 radius の円盤へ射影する"""
    modulus = torch.sqrt(a ** 2 + b ** 2)
    scale = torch.where(modulus > radius, radius / torch.clamp(modulus, min=1e-300), torch.ones_like(modulus))
    return a * scale, b * scale


@dataclass
class InnerResult:
    """内部ソルバーの結果"""

    params: List[torch.Tensor]
    value: float
    steps: int
    converged: bool


def _value_and_grad(fn: Callable, params: Sequence[torch.Tensor]) -> Tuple[float, List[torch.Tensor]]:
    leaves = [p.detach().clone().requires_grad_(True) for p in params]
    value = fn(leaves)
    grads = torch.autograd.grad(value, leaves, allow_unused=True)
    grads = [g if g is not None else torch.zeros_like(p) for g, p in zip(grads, leaves)]
    return float(value.detach()), [g.detach() for g in grads]


def projected_gradient(
    fn: Callable[[List[torch.Tensor]], torch.Tensor],
    params: Sequence[torch.Tensor],
    project: Callable[[List[torch.Tensor]], List[torch.Tensor]],
    max_steps: int = 500,
    tol: float = 1e-6,
    step0: float = 1.0,
) -> InnerResult:
    """
    Armijo バックトラッキング付き射影勾配法

    勾配写像のノルムが tol 未満、または max_steps 回で停止する。

    Args:
        fn (Callable): 変数リスト → スカラーテンソル
        params (Sequence[torch.Tensor]): 初期値
        project (Callable): 変数リストの射影
        max_steps (int): 最大反復回数
        tol (float): 勾配写像ノルムの停止しきい値
        step0 (float): 初期ステップ幅

    Returns:
        InnerResult: 最良反復と収束フラグ
    """
    x = [p.detach().clone() for p in project([p.detach().clone() for p in params])]
    value, grads = _value_and_grad(fn, x)
    if not math.isfinite(value):
        return InnerResult(params=x, value=value, steps=0, converged=False)
    step = step0

    for iteration in range(1, max_steps + 1):
        while True:
            candidate = [c.detach() for c in project([xi - step * gi for xi, gi in zip(x, grads)])]
            diff = [c - xi for c, xi in zip(candidate, x)]
            with torch.no_grad():
                cand_value = float(fn(candidate))
            linear = sum(float(torch.sum(g * d)) for g, d in zip(grads, diff))
            quadratic = sum(float(torch.sum(d ** 2)) for d in diff) / (2.0 * step)
            if math.isfinite(cand_value) and cand_value <= value + linear + quadratic + 1e-15 * abs(value):
                break
            step *= 0.5
            if step < 1e-30:
                return InnerResult(params=x, value=value, steps=iteration, converged=False)

        gradient_map = math.sqrt(sum(float(torch.sum(d ** 2)) for d in diff)) / step
        x = candidate
        value, grads = _value_and_grad(fn, x)
        if gradient_map < tol:
            return InnerResult(params=x, value=value, steps=iteration, converged=True)
        step *= 2.0

    return InnerResult(params=x, value=value, steps=max_steps, converged=False)
