#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
制約付き深層強化学習パッケージ

CMDP 環境、ラグランジュ乗数、MA-CSAC、MCPPO、検証用バンディットを提供する。
"""

from src.drl.bandit import ConstrainedBanditEnv, constrained_optimum
from src.drl.env import ActionLayout, CmdpEnv, CmdpStep, env_step
from src.drl.lagrange import Multipliers, lagrange_update, mcppo_multiplier_update
from src.drl.macsac import MacsacTrainer, macsac_train
from src.drl.mcppo import McppoTrainer, gae, mcppo_objective, mcppo_train

__all__ = [
    'ActionLayout',
    'CmdpEnv',
    'CmdpStep',
    'ConstrainedBanditEnv',
    'MacsacTrainer',
    'McppoTrainer',
    'Multipliers',
    'constrained_optimum',
    'env_step',
    'gae',
    'lagrange_update',
    'macsac_train',
    'mcppo_multiplier_update',
    'mcppo_objective',
    'mcppo_train',
]
