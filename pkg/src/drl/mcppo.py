#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
MCPPO（適応乗数付き制約 PPO）

オンポリシーでエピソードを集め、ペナルティ込み報酬の GAE と割引コスト
Ĉ を計算し、クリップ付き目的関数で K エポック更新する。乗数は
[λ + η(E[Ĉ] − c̄ − ε_tol)]₊ で更新する。
"""

import logging
from typing import Dict, List, Optional, Tuple

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from src.config import DrlConfig
from src.drl.lagrange import Multipliers, mcppo_multiplier_update
from src.drl.macsac import episode_record
from src.drl.policies import ActorHeads
from src.numerics.mlp import Mlp
from src.numerics.rng import SeededRng
from src.utils.error_utils import SolverDivergedError

# ロギングの設定
logger = logging.getLogger(__name__)


def gae(rewards, values, gamma: float, lam: float, last_value: float = 0.0) -> np.ndarray:
    """
    一般化アドバンテージ推定

    Â_t = Σ_k (γλ)^k δ_{t+k}、δ_t = r_t + γ V_{t+1} − V_t（V_T = last_value）

    Args:
        rewards: 報酬列（長さ T）
        values: 価値推定（長さ T）
        gamma (float): 割引率
        lam (float): GAE パラメータ
        last_value (float): 終端の価値

    Returns:
        np.ndarray: アドバンテージ
    """
    rewards = np.asarray(rewards, dtype=float)
    values = np.asarray(values, dtype=float)
    if rewards.shape != values.shape:
        raise ValueError(f"報酬と価値の長さが一致しません: {rewards.shape} / {values.shape}")
    advantages = np.zeros_like(rewards)
    running = 0.0
    next_value = last_value
    for t in reversed(range(len(rewards))):
        delta = rewards[t] + gamma * next_value - values[t]
        running = delta + gamma * lam * running
        advantages[t] = running
        next_value = values[t]
    return advantages


def discounted_costs(costs, gamma: float) -> np.ndarray:
    """
    割引コスト累積 Ĉ_t を割引重みの和で正規化した値

    Ĉ_t = Σ_k γ^k c_{t+k} / Σ_k γ^k。1 ステップあたりのしきい値 c̄ と比較できる。

    Args:
        costs: コスト列（T×J）
        gamma (float): 割引率

    Returns:
        np.ndarray: T×J
    """
    costs = np.asarray(costs, dtype=float)
    if costs.ndim == 1:
        costs = costs[:, None]
    totals = np.zeros_like(costs)
    mass = np.zeros(costs.shape[0])
    running = np.zeros(costs.shape[1])
    running_mass = 0.0
    for t in reversed(range(costs.shape[0])):
        running = costs[t] + gamma * running
        running_mass = 1.0 + gamma * running_mass
        totals[t] = running
        mass[t] = running_mass
    return totals / mass[:, None]


def mcppo_objective(ratio, advantage, eps_clip: float = 0.2, penalties=0.0) -> torch.Tensor:
    """
    クリップ付き目的関数 E[min(r Â, clip(r, 1−ε, 1+ε) Â)] − Σ λ max(0, Ĉ − c̄)

    Args:
        ratio: 確率比 r_t(θ)
        advantage: アドバンテージ Â_t
        eps_clip (float): クリップ幅 ε
        penalties: 制約ペナルティ（スカラーまたはサンプルごと）。θ に依存しないため値のみに効き、勾配は生じない

    Returns:
        torch.Tensor: 最大化する目的関数値
    """
    ratio = torch.as_tensor(ratio, dtype=torch.float64) if not torch.is_tensor(ratio) else ratio
    advantage = torch.as_tensor(advantage, dtype=ratio.dtype)
    unclipped = ratio * advantage
    clipped = torch.clamp(ratio, 1.0 - eps_clip, 1.0 + eps_clip) * advantage
    penalties = torch.as_tensor(penalties, dtype=ratio.dtype)
    return torch.mean(torch.minimum(unclipped, clipped)) - torch.mean(penalties)


class PpoAgent(nn.Module):
    """方策ヘッドと状態価値ネットワーク"""

    def __init__(self, state_dim: int, layout, hidden=(64, 64)):
        super().__init__()
        self.actor = ActorHeads(state_dim, layout, hidden)
        self.value = Mlp(state_dim, 1, hidden)

    def act(self, state) -> Tuple[np.ndarray, float, float]:
        with torch.no_grad():
            x = torch.as_tensor(state, dtype=torch.float32)
            action, log_prob, _, _ = self.actor.sample(x)
            value = self.value(x).squeeze(-1)
        return action.numpy().astype(float), float(log_prob), float(value)


class McppoTrainer:
    """MCPPO の学習器"""

    def __init__(self, env, config: DrlConfig, seed: int = 0):
        self.env = env
        self.config = config
        torch.manual_seed(SeededRng(seed).torch_seed())
        self.agent = PpoAgent(env.state_dim, env.layout, config.hidden)
        self.actor_optimizer = torch.optim.Adam(self.agent.actor.parameters(), lr=config.ppo_actor_lr)
        self.value_optimizer = torch.optim.Adam(self.agent.value.parameters(), lr=config.ppo_critic_lr)
        self.multipliers = Multipliers.zeros(env.n_costs, config.eta_lambda, config.eps_tol, config.init_lambda)
        self._reward_ema: Optional[float] = None
        self.kl_stops = 0

    def _collect_episode(self) -> Dict[str, object]:
        state = self.env.reset()
        record = {'states': [], 'actions': [], 'log_probs': [], 'values': [], 'rewards': [], 'costs': [], 'steps': []}
        for _ in range(self.env.horizon):
            action, log_prob, value = self.agent.act(state)
            step = self.env.step(action, self.multipliers.lam)
            record['states'].append(np.asarray(state, dtype=np.float32))
            record['actions'].append(action)
            record['log_probs'].append(log_prob)
            record['values'].append(value)
            record['rewards'].append(step.reward)
            record['costs'].append(step.costs)
            record['steps'].append(step)
            state = step.next_state
            if step.done:
                break
        return record

    def _update(self, episodes: List[Dict[str, object]]) -> None:
        cfg = self.config
        advantages, returns, cost_to_go = [], [], []
        for ep in episodes:
            adv = gae(ep['rewards'], ep['values'], cfg.ppo_gamma, cfg.gae_lambda)
            advantages.append(adv)
            returns.append(adv + np.asarray(ep['values']))
            cost_to_go.append(discounted_costs(ep['costs'], cfg.ppo_gamma))

        states = torch.as_tensor(np.concatenate([np.stack(ep['states']) for ep in episodes]))
        actions = torch.as_tensor(np.concatenate([np.stack(ep['actions']) for ep in episodes]), dtype=torch.float32)
        old_log_probs = torch.as_tensor(np.concatenate([ep['log_probs'] for ep in episodes]), dtype=torch.float32)
        adv = np.concatenate(advantages)
        adv = (adv - adv.mean()) / (adv.std() + 1e-8)
        adv_t = torch.as_tensor(adv, dtype=torch.float32)
        returns_t = torch.as_tensor(np.concatenate(returns), dtype=torch.float32)
        cost_to_go = np.concatenate(cost_to_go)

        count = states.shape[0]
        minibatch = max(1, min(cfg.ppo_minibatch, count))
        for epoch in range(cfg.ppo_epochs):
            order = torch.randperm(count)
            for start in range(0, count, minibatch):
                index = order[start:start + minibatch]
                new_log_probs = self.agent.actor.log_prob(states[index], actions[index])
                ratio = torch.exp(new_log_probs - old_log_probs[index])
                # 報酬 step.reward は λ のペナルティを含むため、制約はアドバンテージ経由で効く。
                # ペナルティ項は θ に依存しないので方策損失には加えない。
                actor_loss = -mcppo_objective(ratio, adv_t[index], cfg.clip_eps)
                self.actor_optimizer.zero_grad()
                actor_loss.backward()
                nn.utils.clip_grad_norm_(self.agent.actor.parameters(), max_norm=cfg.max_grad_norm)
                self.actor_optimizer.step()

                value_loss = F.mse_loss(self.agent.value(states[index]).squeeze(-1), returns_t[index])
                self.value_optimizer.zero_grad()
                value_loss.backward()
                nn.utils.clip_grad_norm_(self.agent.value.parameters(), max_norm=cfg.max_grad_norm)
                self.value_optimizer.step()

            with torch.no_grad():
                kl = float(torch.mean(old_log_probs - self.agent.actor.log_prob(states, actions)))
            if kl > cfg.kl_stop:
                self.kl_stops += 1
                logger.debug(f"MCPPO: 平均 KL {kl:.4f} がしきい値を超えたためエポック {epoch + 1} で停止しました")
                break

        self.multipliers = mcppo_multiplier_update(self.multipliers, np.mean(cost_to_go, axis=0))

    def train(self, episodes: Optional[int] = None) -> List[Dict[str, float]]:
        """
        学習を実行する

        1 回の更新に使うエピソード数は ppo_batch / T（最低 1）。

        Returns:
            List[Dict[str, float]]: エピソードごとの学習曲線

        Raises:
            SolverDivergedError: 報酬 EMA の絶対値が divergence_limit を超えた場合
        """
        cfg = self.config
        episodes = cfg.episodes if episodes is None else episodes
        per_update = max(1, cfg.ppo_batch // self.env.horizon)
        curves: List[Dict[str, float]] = []
        while len(curves) < episodes:
            batch = []
            for _ in range(min(per_update, episodes - len(curves))):
                ep = self._collect_episode()
                batch.append(ep)
                record = episode_record(len(curves) + 1, ep['steps'], self.multipliers.lam, self.env.cost_names)
                self._guard(record['reward_mean'])
                curves.append(record)
            self._update(batch)
            logger.debug(f"MCPPO: {len(curves)} エピソード完了、平均報酬 {curves[-1]['reward_mean']:.4g}")
        logger.info(f"MCPPO 学習完了: {episodes} エピソード（KL 早期停止 {self.kl_stops} 回）")
        return curves

    def _guard(self, reward_mean: float) -> None:
        self._reward_ema = reward_mean if self._reward_ema is None else 0.9 * self._reward_ema + 0.1 * reward_mean
        if not np.isfinite(self._reward_ema) or abs(self._reward_ema) > self.config.divergence_limit:
            raise SolverDivergedError(f"報酬の EMA が発散しました: {self._reward_ema}")


def mcppo_train(env, config: DrlConfig, seed: int = 0, episodes: Optional[int] = None) -> Tuple[PpoAgent, List[Dict[str, float]]]:
    """McppoTrainer の関数版"""
    trainer = McppoTrainer(env, config, seed)
    curves = trainer.train(episodes)
    return trainer.agent, curves
