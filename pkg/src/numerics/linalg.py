#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
複素密行列演算モジュール

行列は complex128 の 2 次元 numpy 配列（行優先）として扱う。
"""

import logging
from typing import Any

import numpy as np

from src.utils.error_utils import DimensionError, NonFiniteError

# ロギングの設定
logger = logging.getLogger(__name__)

# 複素行列の型エイリアス（complex128 の 2 次元配列）
CMatrix = np.ndarray


def as_cmatrix(values: Any) -> CMatrix:
    """
    入力を complex128 の 2 次元配列に変換する

    1 次元入力は列ベクトルとして扱う。

    Args:
        values (Any): 変換対象（リスト、スカラー、配列）

    Returns:
        CMatrix: 複素行列
    """
    array = np.asarray(values, dtype=np.complex128)
    if array.ndim == 0:
        array = array.reshape(1, 1)
    elif array.ndim == 1:
        array = array.reshape(-1, 1)
    elif array.ndim != 2:
        raise DimensionError(f"2 次元を超える配列は行列に変換できません: shape={array.shape}")
    return array


def check_finite(name: str, values: np.ndarray) -> np.ndarray:
    """NaN/Inf を含む場合に NonFiniteError を送出する"""
    if not np.all(np.isfinite(values)):
        raise NonFiniteError(f"{name} に非有限値が含まれています")
    return values


def matmul(a: Any, b: Any) -> CMatrix:
    """
    複素行列積を計算する

    Args:
        a (Any): 左オペランド（rows × k）
        b (Any): 右オペランド（k × cols）

    Returns:
        CMatrix: 積 a·b

    Raises:
        DimensionError: a の列数と b の行数が一致しない場合
    """
    left = as_cmatrix(a)
    right = as_cmatrix(b)
    if left.shape[1] != right.shape[0]:
        raise DimensionError(
            f"行列積の次元が一致しません: {left.shape} × {right.shape}"
        )
    check_finite("左オペランド", left)
    check_finite("右オペランド", right)
    return left @ right


def herm(a: Any) -> CMatrix:
    """共役転置"""
    return np.conj(as_cmatrix(a)).T
