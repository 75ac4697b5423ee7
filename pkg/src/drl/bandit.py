#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
制約付き 2 状態バンディット

状態 s ∈ {0, 1} は毎ステップ一様に選ばれ、行動 a ∈ [0, 1] に対して
報酬 w_s a (2 − a)、コスト a − budget を返す。平均コスト ≤ 0 の下での
最適方策は a_s = 1 − λ/(2 w_s) で、λ は平均コストが 0 になる値。
学習アルゴリズムの収束と制約充足の確認に使う。
"""

import logging
from typing import Optional, Sequence, Tuple

import numpy as np

from src.drl.env import ActionLayout, CmdpStep, penalty
from src.numerics.rng import SeededRng

# ロギングの設定
logger = logging.getLogger(__name__)

WEIGHTS = (1.0, 0.8)
BUDGET = 0.6


def bandit_reward(weight: float, action: float) -> float:
    return float(weight * action * (2.0 - action))


def constrained_optimum(weights: Sequence[float] = WEIGHTS, budget: float = BUDGET) -> Tuple[float, np.ndarray, float]:
    """
    平均コスト制約付きの最適値

    Returns:
        Tuple[float, np.ndarray, float]: (平均報酬, 状態ごとの行動, 乗数 λ)
    """
    weights = np.asarray(weights, dtype=float)

    def actions(lam: float) -> np.ndarray:
        return np.clip(1.0 - lam / (2.0 * weights), 0.0, 1.0)

    if np.mean(actions(0.0)) <= budget:
        lam = 0.0
    else:
        low, high = 0.0, 2.0 * float(np.max(weights))
        for _ in range(200):
            mid = 0.5 * (low + high)
            if np.mean(actions(mid)) > budget:
                low = mid
            else:
                high = mid
        lam = high
    best = actions(lam)
    reward = float(np.mean([bandit_reward(w, a) for w, a in zip(weights, best)]))
    return reward, best, lam


class ConstrainedBanditEnv:
    """CmdpEnv と同じインターフェースのバンディット環境"""

    cost_names = ('budget',)
    layout = ActionLayout(gauss=0, vm=0, beta=1)
    state_dim = 2
    n_costs = 1

    def __init__(self, seed: int = 0, horizon: int = 8, weights: Sequence[float] = WEIGHTS, budget: float = BUDGET):
        self.horizon = int(horizon)
        self.weights = tuple(weights)
        self.budget = budget
        self._rng = SeededRng(seed)
        self._t = 0
        self._index = 0

    def _observe(self) -> np.ndarray:
        self._index = int(self._rng.integers(0, len(self.weights)))
        state = np.zeros(self.state_dim, dtype=np.float32)
        state[self._index] = 1.0
        return state

    def reset(self) -> np.ndarray:
        self._t = 0
        self._state = self._observe()
        return self._state

    def step(self, action, multipliers: Optional[np.ndarray] = None) -> CmdpStep:
        a = float(np.clip(np.ravel(action)[-1], 0.0, 1.0))
        base = bandit_reward(self.weights[self._index], a)
        costs = np.array([a - self.budget])
        lam = np.zeros(1) if multipliers is None else multipliers
        state = self._state
        self._t += 1
        self._state = self._observe()
        return CmdpStep(
            state=state,
            action=np.asarray(action, dtype=float),
            reward=base - penalty(lam, costs),
            costs=costs,
            next_state=self._state,
            objective_reward=base,
            done=self._t >= self.horizon,
            info={'action': a},
        )
