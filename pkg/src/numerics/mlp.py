#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
多層パーセプトロンと逆伝播勾配モジュール

方策・価値関数の近似器として使う全結合ネットワーク。隠れ層は tanh、
出力層は identity / softplus / sigmoid から選択する。勾配は
torch.autograd による逆伝播で求める。
"""

import logging
from typing import Dict, Sequence

import torch
import torch.nn as nn
import torch.nn.functional as F

from src.utils.error_utils import DimensionError, NonFiniteError

# ロギングの設定
logger = logging.getLogger(__name__)

HEAD_ACTIVATIONS = ('identity', 'softplus', 'sigmoid')


class Mlp(nn.Module):
    """tanh 隠れ層を持つ全結合ネットワーク"""

    def __init__(
        self,
        in_width: int,
        out_width: int,
        hidden: Sequence[int] = (64, 64),
        head: str = 'identity',
        dtype: torch.dtype = torch.float32,
    ):
        """
        初期化関数

        Args:
            in_width (int): 入力次元
            out_width (int): 出力次元（ヘッド幅）
            hidden (Sequence[int]): 隠れ層の幅のリスト
            head (str): 出力活性化関数名
            dtype (torch.dtype): パラメータのデータ型
        """
        super().__init__()
        if head not in HEAD_ACTIVATIONS:
            raise ValueError(f"未対応の出力活性化関数です: {head}")
        self.widths = [int(in_width)] + [int(h) for h in hidden] + [int(out_width)]
        self.head = head
        self.layers = nn.ModuleList(
            nn.Linear(self.widths[i], self.widths[i + 1], dtype=dtype)
            for i in range(len(self.widths) - 1)
        )

    @property
    def in_width(self) -> int:
        return self.widths[0]

    @property
    def out_width(self) -> int:
        return self.widths[-1]

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        for layer in self.layers[:-1]:
            x = torch.tanh(layer(x))
        x = self.layers[-1](x)
        if self.head == 'softplus':
            return F.softplus(x)
        if self.head == 'sigmoid':
            return torch.sigmoid(x)
        return x


def grad(net: Mlp, inputs, upstream) -> Dict[str, torch.Tensor]:
    """
    スカラー損失 Σ upstream·net(inputs) の全パラメータに関する勾配を求める

    Args:
        net (Mlp): 対象ネットワーク
        inputs: 入力（幅 net.in_width、バッチ次元は任意）
        upstream: 出力に対する上流勾配（出力と同形状）

    Returns:
        Dict[str, torch.Tensor]: パラメータ名 → 勾配

    Raises:
        DimensionError: 入力幅が一致しない場合
        NonFiniteError: 活性値に非有限値が含まれる場合
    """
    dtype = next(net.parameters()).dtype
    x = torch.as_tensor(inputs, dtype=dtype)
    if x.shape[-1] != net.in_width:
        raise DimensionError(f"入力幅 {x.shape[-1]} がネットワーク入力幅 {net.in_width} と一致しません")

    output = net(x)
    if not torch.all(torch.isfinite(output)):
        raise NonFiniteError("MLP の活性値に非有限値が含まれています")

    up = torch.as_tensor(upstream, dtype=dtype).reshape(output.shape)
    names, params = zip(*net.named_parameters())
    grads = torch.autograd.grad(output, params, grad_outputs=up, allow_unused=True)
    return {
        name: (g if g is not None else torch.zeros_like(p))
        for name, p, g in zip(names, params, grads)
    }
