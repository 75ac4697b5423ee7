#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
SweepProcessor と傾向検査のユニットテスト
"""

import math
import unittest

import sys
from pathlib import Path

# プロジェクトルートディレクトリをPythonパスに追加
project_root = Path(__file__).parent.parent.parent
sys.path.append(str(project_root))

from src.processor.sweep_processor import (
    SWEEP_COLUMNS,
    SweepProcessor,
    audit_ee_diminishing,
    audit_se_non_decreasing,
    audit_surface_ordering,
    axis_sort_key,
    is_finite_row,
    sweep_audits,
)


def _record(se, ee=1.0, p=2.0, r_sr=0.1, feasible=True):
    return {'se_bpshz': se, 'ee_mbps_per_joule': ee, 'p_total_w': p, 'r_sr_sum': r_sr, 'feasible': feasible}


def _aggregate(value, se, ee=1.0):
    return {'row_type': 'aggregate', 'axis_value': str(value), 'se_bpshz': se, 'ee_mbps_per_joule': ee}


class TestSweepProcessor(unittest.TestCase):
    """集計のテスト"""

    def setUp(self):
        """テスト前の準備"""
        self.processor = SweepProcessor('M')

    def test_aggregate(self):
        """平均・母標準偏差・実行可能率"""
        rows = [
            SweepProcessor.data_row(16, 0, _record(2.0, feasible=True)),
            SweepProcessor.data_row(16, 1, _record(4.0, feasible=False)),
            SweepProcessor.data_row(8, 0, _record(1.0)),
        ]
        aggregates = self.processor.aggregate(rows)
        self.assertEqual([a['axis_value'] for a in aggregates], ['16', '8'])
        first = aggregates[0]
        self.assertEqual(first['row_type'], 'aggregate')
        self.assertIsNone(first['seed'])
        self.assertAlmostEqual(first['se_bpshz'], 3.0)
        self.assertAlmostEqual(first['se_std'], 1.0)
        self.assertAlmostEqual(first['feasible'], 0.5)
        self.assertAlmostEqual(aggregates[1]['se_std'], 0.0)
        self.assertEqual(self.processor.aggregate([]), [])

    def test_sweep_table_order(self):
        """データ行を軸の値・シード順に並べ、その後に集計行"""
        rows = [
            SweepProcessor.data_row(32, 1, _record(3.0)),
            SweepProcessor.data_row(8, 1, _record(1.0)),
            SweepProcessor.data_row(8, 0, _record(1.5)),
        ]
        table = self.processor.sweep_table(rows)
        self.assertEqual([(r['row_type'], r['axis_value'], r['seed']) for r in table], [
            ('data', '8', 0), ('data', '8', 1), ('data', '32', 1),
            ('aggregate', '8', None), ('aggregate', '32', None),
        ])
        for row in table:
            self.assertTrue(set(row) <= set(SWEEP_COLUMNS))

    def test_single_seed(self):
        """シード 1 個ではデータ行 1 行と集計行 1 行"""
        table = self.processor.sweep_table([SweepProcessor.data_row(4, 0, _record(1.0))])
        self.assertEqual([r['row_type'] for r in table], ['data', 'aggregate'])
        self.assertEqual(table[1]['se_std'], 0.0)

    def test_axis_sort_key(self):
        """ユーザー数 'L+I' は合計で並べる"""
        self.assertEqual(sorted(['4+4', '2+2', '3+1'], key=axis_sort_key), ['2+2', '3+1', '4+4'])
        self.assertEqual(sorted(['16', '8', '128'], key=axis_sort_key), ['8', '16', '128'])

    def test_compare_table(self):
        """電力・表面ごとの平均"""
        records = [
            {'p_max_dbm': 30.0, 'surface': 'asim', 'seed': 0, 'se_bpshz': 2.0, 'feasible': True},
            {'p_max_dbm': 30.0, 'surface': 'asim', 'seed': 1, 'se_bpshz': 4.0, 'feasible': False},
            {'p_max_dbm': 30.0, 'surface': 'active-ris', 'seed': 0, 'se_bpshz': 1.0, 'feasible': True},
        ]
        table = SweepProcessor.compare_table(records)
        self.assertEqual(table[0], {
            'p_max_dbm': 30.0, 'surface': 'asim', 'se_mean': 3.0, 'se_std': 1.0, 'feasible_fraction': 0.5,
        })
        self.assertEqual(table[1]['surface'], 'active-ris')
        self.assertEqual(SweepProcessor.compare_table([]), [])

    def test_is_finite_row(self):
        """NaN を含む行は有限でない"""
        self.assertTrue(is_finite_row(_record(1.0)))
        self.assertFalse(is_finite_row(_record(math.nan)))


class TestAudits(unittest.TestCase):
    """傾向検査のテスト"""

    def test_se_non_decreasing(self):
        """SE の減少を検出すること"""
        self.assertTrue(audit_se_non_decreasing([_aggregate(8, 1.0), _aggregate(16, 1.0), _aggregate(32, 2.0)]).passed)
        result = audit_se_non_decreasing([_aggregate(32, 1.0), _aggregate(8, 2.0)])
        self.assertFalse(result.passed)
        self.assertIn('8→32', result.detail)

    def test_ee_diminishing(self):
        """EE の増分が拡大すると不合格"""
        good = [_aggregate(8, 1, 1.0), _aggregate(16, 1, 2.0), _aggregate(32, 1, 2.5)]
        bad = [_aggregate(8, 1, 1.0), _aggregate(16, 1, 1.2), _aggregate(32, 1, 3.0)]
        self.assertTrue(audit_ee_diminishing(good).passed)
        self.assertFalse(audit_ee_diminishing(bad).passed)

    def test_surface_ordering(self):
        """ASIM ≥ BD-RIS ≥ Active RIS の順位"""
        rows = [
            {'p_max_dbm': 20.0, 'surface': 'asim', 'se_mean': 3.0},
            {'p_max_dbm': 20.0, 'surface': 'bd-ris', 'se_mean': 2.0},
            {'p_max_dbm': 20.0, 'surface': 'active-ris', 'se_mean': 1.0},
            {'p_max_dbm': 30.0, 'surface': 'asim', 'se_mean': 1.0},
            {'p_max_dbm': 30.0, 'surface': 'active-ris', 'se_mean': 2.0},
        ]
        result = audit_surface_ordering(rows)
        self.assertFalse(result.passed)
        self.assertIn('30 dBm', result.detail)
        self.assertTrue(audit_surface_ordering(rows[:3]).passed)

    def test_equal_values_pass(self):
        """同じ値は順位違反にならない"""
        rows = [{'p_max_dbm': 30.0, 'surface': s, 'se_mean': 0.0} for s in ('asim', 'bd-ris', 'active-ris')]
        self.assertTrue(audit_surface_ordering(rows).passed)

    def test_sweep_audits_selection(self):
        """M 軸のみ検査し、EE は 3 点以上で検査する"""
        two = [_aggregate(8, 1.0), _aggregate(16, 2.0)]
        self.assertEqual([a.name for a in sweep_audits('M', two)], ['se_non_decreasing'])
        three = two + [_aggregate(32, 3.0)]
        self.assertEqual(
            [a.name for a in sweep_audits('M', three)], ['se_non_decreasing', 'ee_diminishing_returns']
        )
        self.assertEqual(sweep_audits('N', three), [])
        self.assertEqual(sweep_audits('M', two[:1]), [])


if __name__ == '__main__':
    unittest.main()
