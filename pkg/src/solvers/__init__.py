#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
最適化ソルバーパッケージ

BCD-SCA 交互最適化と、その代理関数・内部ソルバーを提供する。
"""

from src.solvers.base_solver import BaseSolver, SolveResult
from src.solvers.bcd_sca import BcdScaSolver, SolveTrace, SurrogateState, initial_vars

__all__ = ['BaseSolver', 'SolveResult', 'BcdScaSolver', 'SolveTrace', 'SurrogateState', 'initial_vars']
