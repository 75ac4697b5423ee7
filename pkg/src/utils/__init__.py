#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
エラーハンドリングユーティリティモジュールの初期化
"""

from .error_utils import (
    ConfigError,
    DimensionError,
    NonFiniteError,
    OrbitbeamError,
    RankDeficientError,
    SolverDivergedError,
    ZeroPowerError,
    safe_get,
    with_retry,
)

__all__ = [
    'with_retry',
    'safe_get',
    'OrbitbeamError',
    'ConfigError',
    'DimensionError',
    'NonFiniteError',
    'RankDeficientError',
    'ZeroPowerError',
    'SolverDivergedError',
]
