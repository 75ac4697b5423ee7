#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
シード付き乱数生成モジュール

numpy の PCG64 ビット生成器を固定で使用する。同じシードからは
プラットフォームに依らず同一の乱数列が得られる。並列実行では
child() で派生シードを持つ独立な生成器を作る。
"""

import logging
from typing import Optional, Tuple, Union

import numpy as np

# ロギングの設定
logger = logging.getLogger(__name__)

Shape = Union[int, Tuple[int, ...]]

_SEED_MASK = (1 << 64) - 1


class SeededRng:
    """PCG64 による単一所有の乱数生成器"""

    def __init__(self, seed: int):
        """
        初期化関数

        Args:
            seed (int): 64 ビット整数シード
        """
        self.seed = int(seed) & _SEED_MASK
        self._generator = np.random.Generator(np.random.PCG64(self.seed))

    @property
    def generator(self) -> np.random.Generator:
        return self._generator

    def child(self, key: int) -> "SeededRng":
        """
        シードとキーから派生した独立な生成器を返す

        Args:
            key (int): 派生キー（ストリーム番号など）

        Returns:
            SeededRng: 新しい生成器
        """
        sequence = np.random.SeedSequence([self.seed, int(key) & _SEED_MASK])
        derived = int(sequence.generate_state(1, dtype=np.uint64)[0])
        return SeededRng(derived)

    def uniform(self, low: float = 0.0, high: float = 1.0, size: Optional[Shape] = None):
        return self._generator.uniform(low, high, size)

    def normal(self, size: Optional[Shape] = None, scale: float = 1.0):
        return self._generator.normal(0.0, scale, size)

    def complex_normal(self, size: Shape, variance: float = 1.0) -> np.ndarray:
        """
        循環対称複素ガウス乱数 CN(0, variance) を生成する

        Args:
            size (Shape): 出力形状
            variance (float): 各要素の分散 E|x|²

        Returns:
            np.ndarray: complex128 配列
        """
        scale = np.sqrt(variance / 2.0)
        real = self._generator.normal(0.0, 1.0, size)
        imag = self._generator.normal(0.0, 1.0, size)
        return scale * (real + 1j * imag)

    def integers(self, low: int, high: int, size: Optional[Shape] = None):
        return self._generator.integers(low, high, size)

    def torch_seed(self) -> int:
        """torch.manual_seed に渡せる 63 ビットの派生シード"""
        return self.seed & ((1 << 63) - 1)
