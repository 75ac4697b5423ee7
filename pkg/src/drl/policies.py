#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
方策ヘッドとツイン Q クリティック

送信ビームフォーミング・電力分割は tanh でスカッシュした Gaussian、
表面の位相は von Mises、利得・時間分割・反射係数は Beta で表す。
3 つのヘッドが 1 組の集中型ツインクリティックを共有する。
"""

import copy
import logging
import math
from typing import List, Optional, Sequence, Tuple

import torch
import torch.nn as nn
import torch.nn.functional as F
from torch.distributions import Beta, Normal, VonMises

from src.drl.env import ActionLayout
from src.numerics.mlp import Mlp

# ロギングの設定
logger = logging.getLogger(__name__)

LOG_STD_MIN = -20.0
LOG_STD_MAX = 2.0
BETA_EDGE = 1e-6
MAX_CONCENTRATION = 500.0
TWO_PI = 2.0 * math.pi


def wrap_phase(theta: torch.Tensor) -> torch.Tensor:
    """[0, 2π) への折り返し（丸めで 2π になった値は 0）"""
    wrapped = torch.remainder(theta, TWO_PI)
    return torch.where(wrapped >= TWO_PI, torch.zeros_like(wrapped), wrapped)


class GaussianHead(nn.Module):
    """tanh スカッシュ付き Gaussian 方策（値域 (-1, 1)）"""

    def __init__(self, state_dim: int, dim: int, hidden: Sequence[int]):
        super().__init__()
        self.dim = dim
        self.net = Mlp(state_dim, 2 * dim, hidden)

    def _normal(self, state: torch.Tensor) -> Normal:
        mu, log_std = self.net(state).chunk(2, dim=-1)
        log_std = torch.clamp(log_std, LOG_STD_MIN, LOG_STD_MAX)
        return Normal(mu, torch.exp(log_std))

    @staticmethod
    def _squash_correction(u: torch.Tensor) -> torch.Tensor:
        return torch.sum(2.0 * (math.log(2.0) - u - F.softplus(-2.0 * u)), dim=-1)

    def sample(self, state: torch.Tensor, deterministic: bool = False) -> Tuple[torch.Tensor, torch.Tensor]:
        dist = self._normal(state)
        u = dist.mean if deterministic else dist.rsample()
        log_prob = torch.sum(dist.log_prob(u), dim=-1) - self._squash_correction(u)
        return torch.tanh(u), log_prob

    def log_prob(self, state: torch.Tensor, action: torch.Tensor) -> torch.Tensor:
        u = torch.atanh(torch.clamp(action, -1.0 + BETA_EDGE, 1.0 - BETA_EDGE))
        return torch.sum(self._normal(state).log_prob(u), dim=-1) - self._squash_correction(u)


class VonMisesHead(nn.Module):
    """
    von Mises 方策（位相）

    サンプリングは再パラメータ化できないため、勾配はスコア関数で求める。
    """

    def __init__(self, state_dim: int, dim: int, hidden: Sequence[int]):
        super().__init__()
        self.dim = dim
        self.net = Mlp(state_dim, 3 * dim, hidden)

    def _dist(self, state: torch.Tensor) -> VonMises:
        x, y, raw = self.net(state).chunk(3, dim=-1)
        loc = torch.atan2(y, x)
        concentration = torch.clamp(F.softplus(raw) + 1e-3, max=MAX_CONCENTRATION)
        return VonMises(loc, concentration)

    def sample(self, state: torch.Tensor, deterministic: bool = False) -> Tuple[torch.Tensor, torch.Tensor]:
        dist = self._dist(state)
        theta = dist.loc.detach() if deterministic else dist.sample()
        theta = wrap_phase(theta)
        return theta, torch.sum(dist.log_prob(theta), dim=-1)

    def log_prob(self, state: torch.Tensor, action: torch.Tensor) -> torch.Tensor:
        return torch.sum(self._dist(state).log_prob(action), dim=-1)


class BetaHead(nn.Module):
    """Beta 方策（値域 [0, 1]）"""

    def __init__(self, state_dim: int, dim: int, hidden: Sequence[int]):
        super().__init__()
        self.dim = dim
        self.net = Mlp(state_dim, 2 * dim, hidden, head='softplus')

    def _dist(self, state: torch.Tensor) -> Beta:
        a, b = (self.net(state) + 1.0).chunk(2, dim=-1)
        return Beta(a, b)

    def sample(self, state: torch.Tensor, deterministic: bool = False) -> Tuple[torch.Tensor, torch.Tensor]:
        dist = self._dist(state)
        x = dist.mean if deterministic else dist.rsample()
        x = torch.clamp(x, BETA_EDGE, 1.0 - BETA_EDGE)
        return x, torch.sum(dist.log_prob(x), dim=-1)

    def log_prob(self, state: torch.Tensor, action: torch.Tensor) -> torch.Tensor:
        x = torch.clamp(action, BETA_EDGE, 1.0 - BETA_EDGE)
        return torch.sum(self._dist(state).log_prob(x), dim=-1)


class ActorHeads(nn.Module):
    """3 種類の方策ヘッド（次元 0 のヘッドは作らない）"""

    def __init__(self, state_dim: int, layout: ActionLayout, hidden: Sequence[int] = (64, 64)):
        super().__init__()
        self.layout = layout
        self.gauss = GaussianHead(state_dim, layout.gauss, hidden) if layout.gauss else None
        self.vm = VonMisesHead(state_dim, layout.vm, hidden) if layout.vm else None
        self.beta = BetaHead(state_dim, layout.beta, hidden) if layout.beta else None

    def _heads(self) -> List[Tuple[str, Optional[nn.Module], int]]:
        return [('gauss', self.gauss, self.layout.gauss), ('vm', self.vm, self.layout.vm), ('beta', self.beta, self.layout.beta)]

    def sample(self, state: torch.Tensor, deterministic: bool = False) -> Tuple[torch.Tensor, torch.Tensor, torch.Tensor, torch.Tensor]:
        """
        行動をサンプルする

        Returns:
            Tuple: (行動, 全体の対数尤度, 再パラメータ化可能な部分, von Mises 部分)
        """
        parts = []
        zero = torch.zeros(state.shape[:-1], dtype=state.dtype)
        log_rep, log_vm = zero, zero
        for name, head, _ in self._heads():
            if head is None:
                continue
            action, log_prob = head.sample(state, deterministic)
            parts.append(action)
            if name == 'vm':
                log_vm = log_vm + log_prob
            else:
                log_rep = log_rep + log_prob
        return torch.cat(parts, dim=-1), log_rep + log_vm, log_rep, log_vm

    def log_prob(self, state: torch.Tensor, action: torch.Tensor) -> torch.Tensor:
        total = torch.zeros(state.shape[:-1], dtype=state.dtype)
        offset = 0
        for _, head, dim in self._heads():
            if head is None:
                continue
            total = total + head.log_prob(state, action[..., offset:offset + dim])
            offset += dim
        return total


def soft_update(target: nn.Module, online: nn.Module, tau: float) -> None:
    """Polyak 平均 θ' ← (1 − τ) θ' + τ θ"""
    with torch.no_grad():
        for p_target, p in zip(target.parameters(), online.parameters()):
            p_target.mul_(1.0 - tau).add_(tau * p)


def critic_target(q1: torch.Tensor, q2: torch.Tensor) -> torch.Tensor:
    """ツインクリティックの要素ごとの最小値"""
    return torch.minimum(q1, q2)


class AgentSet(nn.Module):
    """方策ヘッド・ツイン Q・ターゲット・エントロピー温度"""

    def __init__(self, state_dim: int, layout: ActionLayout, hidden: Sequence[int] = (64, 64), init_entropy: float = 0.1):
        super().__init__()
        self.layout = layout
        self.actor = ActorHeads(state_dim, layout, hidden)
        self.q1 = Mlp(state_dim + layout.dim, 1, hidden)
        self.q2 = Mlp(state_dim + layout.dim, 1, hidden)
        self.q1_target = copy.deepcopy(self.q1)
        self.q2_target = copy.deepcopy(self.q2)
        for p in list(self.q1_target.parameters()) + list(self.q2_target.parameters()):
            p.requires_grad_(False)
        self.log_alpha = nn.Parameter(torch.tensor(math.log(init_entropy)))

    @property
    def alpha(self) -> torch.Tensor:
        return self.log_alpha.exp()

    def q_values(self, state: torch.Tensor, action: torch.Tensor, target: bool = False) -> Tuple[torch.Tensor, torch.Tensor]:
        x = torch.cat([state, action], dim=-1)
        if target:
            return self.q1_target(x).squeeze(-1), self.q2_target(x).squeeze(-1)
        return self.q1(x).squeeze(-1), self.q2(x).squeeze(-1)

    def act(self, state, deterministic: bool = False):
        """numpy 状態 → numpy 行動"""
        with torch.no_grad():
            action, _, _, _ = self.actor.sample(torch.as_tensor(state, dtype=torch.float32), deterministic)
        return action.numpy().astype(float)
