#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
数値計算基盤パッケージ

複素行列演算、シード付き乱数生成、方策・価値関数近似用の MLP を提供する。
"""

from .linalg import CMatrix, as_cmatrix, check_finite, herm, matmul
from .mlp import Mlp, grad
from .rng import SeededRng

__all__ = [
    'CMatrix',
    'as_cmatrix',
    'check_finite',
    'herm',
    'matmul',
    'Mlp',
    'grad',
    'SeededRng',
]
