#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
スイープ結果の集計モジュール

(値, シード) ごとのデータ行から値ごとの平均・標準偏差の集計行を作り、
SE の単調性、EE の収穫逓減、表面アーキテクチャの順位を検査する。
"""

import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence

import pandas as pd

# ロギングの設定
logger = logging.getLogger(__name__)

SWEEP_COLUMNS = (
    'row_type',
    'axis_value',
    'seed',
    'se_bpshz',
    'se_std',
    'ee_mbps_per_joule',
    'ee_std',
    'p_total_w',
    'p_total_std',
    'r_sr_sum',
    'r_sr_std',
    'feasible',
)

COMPARE_COLUMNS = ('p_max_dbm', 'surface', 'se_mean', 'se_std', 'feasible_fraction')

# 平均値の列と対応する標準偏差の列
_STD_COLUMNS = {
    'se_bpshz': 'se_std',
    'ee_mbps_per_joule': 'ee_std',
    'p_total_w': 'p_total_std',
    'r_sr_sum': 'r_sr_std',
}

# 表面の期待順位（SE の大きい順）
SURFACE_RANKING = ('asim', 'bd-ris', 'active-ris')


@dataclass(frozen=True)
class AuditResult:
    """傾向検査の結果"""

    name: str
    passed: bool
    detail: str


def axis_sort_key(value: Any) -> Any:
    """軸の値を数値として並べる（'2+2' のようなユーザー数は合計で並べる）"""
    text = str(value)
    if '+' in text:
        return sum(float(part) for part in text.split('+'))
    try:
        return float(text)
    except ValueError:
        return text


class SweepProcessor:
    """スイープ結果を集計するクラス"""

    def __init__(self, axis: str):
        """
        初期化関数

        Args:
            axis (str): スイープ軸名
        """
        self.axis = axis

    @staticmethod
    def data_row(axis_value: Any, seed: int, record: Dict[str, Any]) -> Dict[str, Any]:
        """評価指標 1 件をスイープのデータ行に変換する"""
        return {
            'row_type': 'data',
            'axis_value': str(axis_value),
            'seed': int(seed),
            'se_bpshz': float(record['se_bpshz']),
            'ee_mbps_per_joule': float(record['ee_mbps_per_joule']),
            'p_total_w': float(record['p_total_w']),
            'r_sr_sum': float(record['r_sr_sum']),
            'feasible': bool(record['feasible']),
        }

    def aggregate(self, data_rows: Sequence[Dict[str, Any]]) -> List[Dict[str, Any]]:
        """
        軸の値ごとに平均・標準偏差の集計行を作る

        標準偏差は母標準偏差（ddof=0）で、シード 1 個のときは 0 になる。
        feasible 列には実行可能だったシードの割合を入れる。

        Args:
            data_rows (Sequence[Dict[str, Any]]): データ行

        Returns:
            List[Dict[str, Any]]: 集計行（軸の値の出現順）
        """
        if not data_rows:
            return []
        df = pd.DataFrame(list(data_rows))
        grouped = df.groupby('axis_value', sort=False)
        means = grouped[list(_STD_COLUMNS)].mean()
        stds = grouped[list(_STD_COLUMNS)].std(ddof=0)
        feasible = grouped['feasible'].mean()

        rows = []
        for value in means.index:
            row: Dict[str, Any] = {'row_type': 'aggregate', 'axis_value': value, 'seed': None}
            for column, std_column in _STD_COLUMNS.items():
                row[column] = float(means.loc[value, column])
                row[std_column] = float(stds.loc[value, column])
            row['feasible'] = float(feasible.loc[value])
            rows.append(row)
        return rows

    def sweep_table(self, data_rows: Sequence[Dict[str, Any]]) -> List[Dict[str, Any]]:
        """データ行の後ろに集計行を並べたスイープ表"""
        ordered = sorted(data_rows, key=lambda r: (axis_sort_key(r['axis_value']), r['seed']))
        return list(ordered) + self.aggregate(ordered)

    @staticmethod
    def compare_table(records: Sequence[Dict[str, Any]]) -> List[Dict[str, Any]]:
        """
        表面比較の集計

        Args:
            records (Sequence[Dict[str, Any]]): p_max_dbm / surface / seed / se_bpshz / feasible を持つ行

        Returns:
            List[Dict[str, Any]]: p_max_dbm, surface ごとの平均・標準偏差
        """
        if not records:
            return []
        df = pd.DataFrame(list(records))
        grouped = df.groupby(['p_max_dbm', 'surface'], sort=False)
        se = grouped['se_bpshz'].agg(['mean', lambda s: s.std(ddof=0)])
        se.columns = ['se_mean', 'se_std']
        feasible = grouped['feasible'].mean()
        rows = []
        for (p_dbm, surface), values in se.iterrows():
            rows.append({
                'p_max_dbm': float(p_dbm),
                'surface': surface,
                'se_mean': float(values['se_mean']),
                'se_std': float(values['se_std']),
                'feasible_fraction': float(feasible.loc[(p_dbm, surface)]),
            })
        return rows


def _aggregate_series(aggregates: Sequence[Dict[str, Any]], column: str) -> List[tuple]:
    rows = [r for r in aggregates if r.get('row_type', 'aggregate') == 'aggregate']
    rows = sorted(rows, key=lambda r: axis_sort_key(r['axis_value']))
    return [(r['axis_value'], float(r[column])) for r in rows]


def audit_se_non_decreasing(aggregates: Sequence[Dict[str, Any]], tol: float = 1e-9) -> AuditResult:
    """平均 SE が軸の値に対して非減少かどうか"""
    series = _aggregate_series(aggregates, 'se_bpshz')
    drops = [
        f"{a}→{b}: {sa:.4g}→{sb:.4g}"
        for (a, sa), (b, sb) in zip(series, series[1:])
        if sb < sa - tol * max(1.0, abs(sa))
    ]
    return AuditResult(
        name='se_non_decreasing',
        passed=not drops,
        detail='単調非減少' if not drops else '減少箇所: ' + ', '.join(drops),
    )


def audit_ee_diminishing(aggregates: Sequence[Dict[str, Any]], tol: float = 1e-9) -> AuditResult:
    """EE の増分が軸の値とともに小さくなる（収穫逓減）かどうか"""
    series = _aggregate_series(aggregates, 'ee_mbps_per_joule')
    gains = [sb - sa for (_, sa), (_, sb) in zip(series, series[1:])]
    growing = [
        f"{g0:.4g}→{g1:.4g}" for g0, g1 in zip(gains, gains[1:]) if g1 > g0 + tol * max(1.0, abs(g0))
    ]
    return AuditResult(
        name='ee_diminishing_returns',
        passed=not growing,
        detail='増分は逓減' if not growing else '増分が拡大: ' + ', '.join(growing),
    )


def audit_surface_ordering(compare_rows: Sequence[Dict[str, Any]], tol: float = 1e-9) -> AuditResult:
    """各電力レベルで平均 SE が ASIM ≥ BD-RIS ≥ Active RIS の順かどうか（存在する表面のみ）"""
    levels: Dict[float, Dict[str, float]] = {}
    for row in compare_rows:
        levels.setdefault(float(row['p_max_dbm']), {})[row['surface']] = float(row['se_mean'])
    violations = []
    for p_dbm in sorted(levels):
        present = [s for s in SURFACE_RANKING if s in levels[p_dbm]]
        for upper, lower in zip(present, present[1:]):
            hi, lo = levels[p_dbm][upper], levels[p_dbm][lower]
            if hi < lo - tol * max(1.0, abs(lo)):
                violations.append(f"{p_dbm:g} dBm: {upper} {hi:.4g} < {lower} {lo:.4g}")
    return AuditResult(
        name='surface_ordering',
        passed=not violations,
        detail='順位どおり' if not violations else '; '.join(violations),
    )


def sweep_audits(axis: str, aggregates: Sequence[Dict[str, Any]]) -> List[AuditResult]:
    """軸に応じた傾向検査（M 軸のみ SE 単調性と EE 収穫逓減を検査する）"""
    if axis != 'M' or len(aggregates) < 2:
        return []
    results = [audit_se_non_decreasing(aggregates)]
    if len(aggregates) >= 3:
        results.append(audit_ee_diminishing(aggregates))
    for result in results:
        log = logger.info if result.passed else logger.warning
        log(f"傾向検査 {result.name}: {'合格' if result.passed else '不合格'} ({result.detail})")
    return results


def is_finite_row(row: Dict[str, Any], columns: Optional[Sequence[str]] = None) -> bool:
    """数値列がすべて有限かどうか"""
    columns = columns or list(_STD_COLUMNS)
    return all(row.get(c) is not None and math.isfinite(float(row[c])) for c in columns)
