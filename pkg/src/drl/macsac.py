#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
MA-CSAC（ラグランジュ制約付きマルチエージェント Soft Actor-Critic）

エピソードごとに環境を走らせてバッファへ保存し、G 回の勾配ステップで
ツインクリティック、3 ヘッドの方策、エントロピー温度、乗数を更新する。
"""

import logging
from typing import Dict, List, Optional, Tuple

import numpy as np
import torch
import torch.nn.functional as F

from src.config import DrlConfig
from src.drl.buffer import ReplayBuffer
from src.drl.lagrange import Multipliers, lagrange_update
from src.drl.policies import AgentSet, critic_target, soft_update
from src.numerics.rng import SeededRng
from src.utils.error_utils import SolverDivergedError

# ロギングの設定
logger = logging.getLogger(__name__)

# 報酬 EMA の平滑化係数
_EMA_WEIGHT = 0.1


def episode_record(episode: int, steps, lam: np.ndarray, cost_names) -> Dict[str, float]:
    """学習曲線の 1 行（エピソード平均）"""
    rewards = np.array([s.reward for s in steps])
    costs = np.array([s.costs for s in steps])
    record = {
        'episode': episode,
        'reward_mean': float(np.mean(rewards)),
        'reward_std': float(np.std(rewards)),
    }
    for j, name in enumerate(cost_names):
        record[f'cost_{name}'] = float(np.mean(costs[:, j]))
    for j, name in enumerate(cost_names):
        record[f'lambda_{name}'] = float(lam[j])
    record['se'] = float(np.mean([s.info.get('se', float('nan')) for s in steps]))
    record['ee'] = float(np.mean([s.info.get('ee', float('nan')) for s in steps]))
    return record


class MacsacTrainer:
    """MA-CSAC の学習器"""

    def __init__(self, env, config: DrlConfig, seed: int = 0):
        """
        初期化関数

        Args:
            env: reset() / step(action, multipliers) を持つ CMDP 環境
            config (DrlConfig): 学習設定
            seed (int): 乱数シード
        """
        self.env = env
        self.config = config
        rng = SeededRng(seed)
        torch.manual_seed(rng.torch_seed())
        self.agents = AgentSet(env.state_dim, env.layout, config.hidden, config.sac_init_entropy)
        self.actor_optimizer = torch.optim.Adam(self.agents.actor.parameters(), lr=config.sac_actor_lr)
        self.critic_optimizer = torch.optim.Adam(
            list(self.agents.q1.parameters()) + list(self.agents.q2.parameters()), lr=config.sac_critic_lr
        )
        self.alpha_optimizer = torch.optim.Adam([self.agents.log_alpha], lr=config.sac_alpha_lr)
        self.target_entropy = -float(env.layout.dim)
        # 学習全体で保存しうる件数を超える容量は確保しない
        capacity = min(int(config.buffer_size), config.episodes * env.horizon)
        self.buffer = ReplayBuffer(
            env.state_dim, env.layout.dim, env.n_costs, capacity, seed=int(rng.child(1).integers(0, 2 ** 62))
        )
        self.multipliers = Multipliers.zeros(env.n_costs, config.eta_lambda, config.eps_tol, config.init_lambda)
        self._reward_ema: Optional[float] = None

    def rollout(self) -> List:
        """1 エピソードを実行してバッファに保存する"""
        state = self.env.reset()
        steps = []
        for _ in range(self.env.horizon):
            action = self.agents.act(state)
            step = self.env.step(action, self.multipliers.lam)
            self.buffer.store(state, action, step.objective_reward, step.costs, step.next_state, step.done)
            steps.append(step)
            state = step.next_state
            if step.done:
                break
        return steps

    def update(self) -> Dict[str, float]:
        """1 回の勾配ステップ"""
        cfg = self.config
        agents = self.agents
        batch = self.buffer.sample(cfg.sac_batch)
        states = torch.as_tensor(batch['states'])
        actions = torch.as_tensor(batch['actions'])
        next_states = torch.as_tensor(batch['next_states'])
        dones = torch.as_tensor(batch['dones'])
        lam = self.multipliers.lam
        penalized = batch['rewards'] - np.sum(lam[None, :] * np.maximum(0.0, batch['costs']), axis=1)
        rewards = torch.as_tensor(penalized, dtype=torch.float32)

        alpha = agents.alpha.detach()
        with torch.no_grad():
            next_actions, next_log_prob, _, _ = agents.actor.sample(next_states)
            q1_t, q2_t = agents.q_values(next_states, next_actions, target=True)
            soft_value = critic_target(q1_t, q2_t) - alpha * next_log_prob
            target = rewards + cfg.sac_gamma * (1.0 - dones) * soft_value

        q1, q2 = agents.q_values(states, actions)
        critic_loss = F.mse_loss(q1, target) + F.mse_loss(q2, target)
        self.critic_optimizer.zero_grad()
        critic_loss.backward()
        self.critic_optimizer.step()

        new_actions, log_prob, log_rep, log_vm = agents.actor.sample(states)
        q_new = critic_target(*agents.q_values(states, new_actions))
        # von Mises 部分はスコア関数勾配（平均をベースラインに使う）
        signal = (alpha * log_prob - q_new).detach()
        actor_loss = torch.mean(alpha * log_rep - q_new) + torch.mean((signal - signal.mean()) * log_vm)
        self.actor_optimizer.zero_grad()
        actor_loss.backward()
        self.actor_optimizer.step()

        alpha_loss = -torch.mean(agents.log_alpha * (log_prob.detach() + self.target_entropy))
        self.alpha_optimizer.zero_grad()
        alpha_loss.backward()
        self.alpha_optimizer.step()

        soft_update(agents.q1_target, agents.q1, cfg.tau)
        soft_update(agents.q2_target, agents.q2, cfg.tau)

        self.multipliers = lagrange_update(self.multipliers, np.mean(batch['costs'], axis=0))
        return {
            'critic_loss': float(critic_loss.detach()),
            'actor_loss': float(actor_loss.detach()),
            'alpha': float(agents.alpha.detach()),
        }

    def _guard(self, reward_mean: float) -> None:
        self._reward_ema = reward_mean if self._reward_ema is None else (
            (1.0 - _EMA_WEIGHT) * self._reward_ema + _EMA_WEIGHT * reward_mean
        )
        if not np.isfinite(self._reward_ema) or abs(self._reward_ema) > self.config.divergence_limit:
            raise SolverDivergedError(f"報酬の EMA が発散しました: {self._reward_ema}")

    def train(self, episodes: Optional[int] = None) -> List[Dict[str, float]]:
        """
        学習を実行する

        Args:
            episodes (Optional[int]): エピソード数（省略時は設定値）

        Returns:
            List[Dict[str, float]]: エピソードごとの学習曲線

        Raises:
            SolverDivergedError: 報酬 EMA の絶対値が divergence_limit を超えた場合
        """
        episodes = self.config.episodes if episodes is None else episodes
        curves = []
        for episode in range(1, episodes + 1):
            steps = self.rollout()
            record = episode_record(episode, steps, self.multipliers.lam, self.env.cost_names)
            self._guard(record['reward_mean'])
            for _ in range(self.config.grad_steps):
                self.update()
            curves.append(record)
            if episode % 50 == 0:
                logger.debug(f"MA-CSAC エピソード {episode}: 平均報酬 {record['reward_mean']:.4g}")
        logger.info(f"MA-CSAC 学習完了: {episodes} エピソード")
        return curves


def macsac_train(env, config: DrlConfig, seed: int = 0, episodes: Optional[int] = None) -> Tuple[AgentSet, List[Dict[str, float]]]:
    """MacsacTrainer の関数版"""
    trainer = MacsacTrainer(env, config, seed)
    curves = trainer.train(episodes)
    return trainer.agents, curves
