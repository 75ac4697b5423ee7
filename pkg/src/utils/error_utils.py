#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
エラーハンドリングユーティリティモジュール

シミュレーション全体で使用するドメイン例外、再試行デコレータ、
ネストされた設定辞書からの安全な値取得を提供する。
"""

import logging
from functools import wraps
from typing import Any, Callable, Dict, Optional, Tuple, Type, Union

# ロギングの設定
logger = logging.getLogger(__name__)


class OrbitbeamError(Exception):
    """ワークベンチ共通の基底例外"""


class ConfigError(OrbitbeamError):
    """設定ファイルまたは設定値が不正な場合の例外"""


class DimensionError(OrbitbeamError):
    """行列・ベクトルの次元が一致しない場合の例外"""


class NonFiniteError(OrbitbeamError):
    """NaN または無限大が検出された場合の例外"""


class RankDeficientError(OrbitbeamError):
    """層間チャネル行列がフルランクにならない場合の例外"""


class ZeroPowerError(OrbitbeamError):
    """消費電力がゼロ以下でエネルギー効率を計算できない場合の例外"""


class SolverDivergedError(OrbitbeamError):
    """学習や最適化が発散した場合の例外"""


def with_retry(
    max_attempts: int = 3,
    retry_exceptions: Optional[Union[Type[Exception], Tuple[Type[Exception], ...]]] = None,
    pass_attempt: bool = False,
) -> Callable:
    """
    指定した例外が発生した場合に関数を再実行するデコレータ

    乱数に依存する生成処理のやり直しに使用するため待機は行わない。
    pass_attempt が True の場合は試行番号（0 始まり）をキーワード引数
    attempt として関数に渡す。

    Args:
        max_attempts (int): 最大試行回数（デフォルト: 3）
        retry_exceptions (Optional[Union[Type[Exception], Tuple]]): 再試行対象の例外クラス
        pass_attempt (bool): 試行番号を attempt 引数として渡すかどうか

    Returns:
        Callable: デコレータ関数
    """
    if retry_exceptions is None:
        retry_exceptions = (OrbitbeamError,)
    elif isinstance(retry_exceptions, type):
        retry_exceptions = (retry_exceptions,)

    def decorator(func: Callable) -> Callable:
        @wraps(func)
        def wrapper(*args, **kwargs) -> Any:
            last_exception = None

            for attempt in range(max_attempts):
                try:
                    if pass_attempt:
                        return func(*args, attempt=attempt, **kwargs)
                    return func(*args, **kwargs)
                except retry_exceptions as e:
                    last_exception = e
                    if attempt + 1 < max_attempts:
                        logger.warning(
                            f"例外発生: {type(e).__name__}, {attempt + 1}回目の試行, 再試行します: {str(e)}"
                        )
                        continue

            logger.error(f"全ての再試行が失敗しました（{max_attempts}回）: {str(last_exception)}")
            raise last_exception

        return wrapper

    return decorator


def safe_get(
    dictionary: Dict,
    key_path: str,
    default: Any = None,
    separator: str = '.'
) -> Any:
    """
    ネストされた辞書から安全に値を取得する

    Args:
        dictionary (Dict): 対象の辞書
        key_path (str): キーパス（例: 'scenario.M'）
        default (Any): キーパスが見つからない場合のデフォルト値
        separator (str): キーパスの区切り文字（デフォルト: '.'）

    Returns:
        Any: 取得した値またはデフォルト値
    """
    keys = key_path.split(separator)
    result = dictionary

    for key in keys:
        try:
            if isinstance(result, dict):
                if key not in result:
                    return default
                result = result[key]
            elif isinstance(result, (list, tuple)) and key.isdigit():
                index = int(key)
                if 0 <= index < len(result):
                    result = result[index]
                else:
                    return default
            else:
                return default
        except (KeyError, IndexError, TypeError):
            return default

    return result
