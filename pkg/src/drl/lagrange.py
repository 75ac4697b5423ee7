#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
ラグランジュ乗数の更新
"""

import logging
from dataclasses import dataclass, replace

import numpy as np

# ロギングの設定
logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Multipliers:
    """制約ごとの乗数 λ_j ≥ 0"""

    lam: np.ndarray
    eta_lambda: float = 5e-4
    eps_tol: float = 0.01

    @classmethod
    def zeros(cls, count: int, eta_lambda: float = 5e-4, eps_tol: float = 0.01, init: float = 0.0) -> "Multipliers":
        return cls(lam=np.full(count, max(init, 0.0)), eta_lambda=eta_lambda, eps_tol=eps_tol)


def lagrange_update(multipliers: Multipliers, violations) -> Multipliers:
    """
    λ_j ← max(0, λ_j + η_λ max(0, V_j − ε_tol))

    Args:
        multipliers (Multipliers): 現在の乗数
        violations: V_j = c_j − c̄_j

    Returns:
        Multipliers: 更新後の乗数
    """
    excess = np.maximum(0.0, np.asarray(violations, dtype=float) - multipliers.eps_tol)
    lam = np.maximum(0.0, multipliers.lam + multipliers.eta_lambda * excess)
    return replace(multipliers, lam=lam)


def mcppo_multiplier_update(multipliers: Multipliers, mean_costs, thresholds=0.0) -> Multipliers:
    """
    λ_j ← [λ_j + η_λ (E[Ĉ_j] − c̄_j − ε_tol)]₊

    制約が余裕をもって満たされていれば λ は 0 に向かって減少する。
    """
    step = np.asarray(mean_costs, dtype=float) - thresholds - multipliers.eps_tol
    lam = np.maximum(0.0, multipliers.lam + multipliers.eta_lambda * step)
    return replace(multipliers, lam=lam)
