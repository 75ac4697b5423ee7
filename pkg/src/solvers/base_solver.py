#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
最適化ソルバーの基底クラス
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

from src.config import ExperimentConfig
from src.model.channel import ChannelSet
from src.model.problem import Metrics, evaluate
from src.model.ratemodel import DecisionVars

# ロギングの設定
logger = logging.getLogger(__name__)


@dataclass
class SolveResult:
    """ソルバーの実行結果"""

    vars: DecisionVars
    metrics: Metrics
    # 反復ごとの記録（CSV の 1 行ずつ）
    rows: List[Dict[str, Any]] = field(default_factory=list)
    flags: Dict[str, bool] = field(default_factory=dict)


class BaseSolver:
    """ソルバーの基底クラス"""

    name = 'base'

    def __init__(self, config: ExperimentConfig, rate_mode: str = 'rsma'):
        """
        初期化関数

        Args:
            config (ExperimentConfig): 実験設定
            rate_mode (str): 'rsma' または 'noma'
        """
        self.config = config
        self.scenario = config.scenario
        self.rate_mode = rate_mode

    def solve(self, channels: ChannelSet, vars0: Optional[DecisionVars] = None) -> SolveResult:
        """
        最適化を実行する（サブクラスで実装）

        Args:
            channels (ChannelSet): チャネル
            vars0 (Optional[DecisionVars]): 初期値

        Returns:
            SolveResult: 実行結果
        """
        raise NotImplementedError("サブクラスで実装する必要があります")

    def metrics(self, vars: DecisionVars, channels: ChannelSet) -> Metrics:
        return evaluate(vars, channels, self.scenario, self.rate_mode)[2]
