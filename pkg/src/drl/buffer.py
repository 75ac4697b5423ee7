#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
経験再生バッファ（FIFO）
"""

import logging
import threading
from typing import Dict

import numpy as np

from src.numerics.rng import SeededRng

# ロギングの設定
logger = logging.getLogger(__name__)


class ReplayBuffer:
    """
    固定容量のリングバッファ

    報酬はペナルティなしの値とコストを別々に保存し、学習時に
    その時点の乗数でペナルティを付け直す。追加とサンプリングは
    ロックで排他し、書きかけの記録は読まれない。
    """

    def __init__(self, state_dim: int, action_dim: int, cost_dim: int, capacity: int, seed: int = 0):
        self.states = np.zeros((capacity, state_dim), dtype=np.float32)
        self.next_states = np.zeros((capacity, state_dim), dtype=np.float32)
        self.actions = np.zeros((capacity, action_dim), dtype=np.float32)
        self.rewards = np.zeros(capacity, dtype=np.float64)
        self.costs = np.zeros((capacity, cost_dim), dtype=np.float64)
        self.dones = np.zeros(capacity, dtype=np.float32)
        self.ptr, self.size, self.capacity = 0, 0, int(capacity)
        self._rng = SeededRng(seed)
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return self.size

    def store(self, state, action, reward: float, costs, next_state, done: bool) -> None:
        with self._lock:
            self.states[self.ptr] = state
            self.next_states[self.ptr] = next_state
            self.actions[self.ptr] = action
            self.rewards[self.ptr] = reward
            self.costs[self.ptr] = costs
            self.dones[self.ptr] = float(done)
            self.ptr = (self.ptr + 1) % self.capacity
            self.size = min(self.size + 1, self.capacity)

    def sample(self, batch_size: int) -> Dict[str, np.ndarray]:
        """
        バッチ内では重複なしの一様サンプリング

        Args:
            batch_size (int): バッチサイズ（保存数を超える場合は保存数）

        Returns:
            Dict[str, np.ndarray]: states, actions, rewards, costs, next_states, dones
        """
        with self._lock:
            if self.size == 0:
                raise ValueError("バッファが空です")
            count = min(int(batch_size), self.size)
            index = self._rng.generator.choice(self.size, size=count, replace=False)
            return {
                'states': self.states[index].copy(),
                'actions': self.actions[index].copy(),
                'rewards': self.rewards[index].copy(),
                'costs': self.costs[index].copy(),
                'next_states': self.next_states[index].copy(),
                'dones': self.dones[index].copy(),
            }
