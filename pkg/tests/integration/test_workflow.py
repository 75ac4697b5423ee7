#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
コマンドラインの統合テスト（最小構成の設定ファイルを使用）
"""

import csv
import json
import os
import shutil
import tempfile
import unittest

import sys
from pathlib import Path

# プロジェクトルートディレクトリをPythonパスに追加
project_root = Path(__file__).parent.parent.parent
sys.path.append(str(project_root))

from src.exporters import read_csv_comments
from src.main import main
from src.runner import EXIT_ERROR, EXIT_INFEASIBLE, EXIT_OK
from src.solvers.bcd_sca import TRACE_COLUMNS


def _rows(path):
    """コメント行を除いた CSV の行"""
    with open(path, 'r', encoding='utf-8') as f:
        return list(csv.DictReader(line for line in f if not line.startswith('#')))


class TestWorkflow(unittest.TestCase):
    """ワークベンチの統合テスト"""

    def setUp(self):
        """テスト前の準備"""
        self.test_dir = os.path.join(os.path.dirname(os.path.dirname(__file__)), 'test_data')
        self.config = os.path.join(self.test_dir, 'config', 'tiny.yml')
        self.base_dir = tempfile.mkdtemp()

    def tearDown(self):
        """テスト後のクリーンアップ"""
        shutil.rmtree(self.base_dir)

    def _main(self, *args, out='output'):
        command, rest = args[0], list(args[1:])
        return main([command, '--config', self.config, '--out', os.path.join(self.base_dir, out)] + rest)

    def test_validate_config(self):
        """設定ファイルの検証のみ"""
        self.assertEqual(self._main('validate-config'), EXIT_OK)

    def test_missing_config(self):
        """存在しない設定ファイルは終了コード 1"""
        code = main(['run', '--config', os.path.join(self.base_dir, 'nothing.yml'), '--out', self.base_dir])
        self.assertEqual(code, EXIT_ERROR)

    def test_unknown_algo(self):
        """未知のアルゴリズムは終了コード 1"""
        self.assertEqual(self._main('run', '--algo', 'dqn'), EXIT_ERROR)

    def test_bad_arguments(self):
        """引数エラーは実行不可能（2）と区別して 1"""
        self.assertEqual(main(['run', '--seed', 'x']), EXIT_ERROR)
        self.assertEqual(main([]), EXIT_ERROR)

    def test_run_is_reproducible(self):
        """同じ設定とシードの再実行で CSV がバイト単位で一致すること"""
        first = self._main('run', '--algo', 'bcd-sca', '--seed', '3', out='a')
        second = self._main('run', '--algo', 'bcd-sca', '--seed', '3', out='b')
        self.assertIn(first, (EXIT_OK, EXIT_INFEASIBLE))
        self.assertEqual(first, second)
        for name in ('bcd-sca_seed3_trace.csv', 'bcd-sca_seed3_metrics.csv'):
            with open(os.path.join(self.base_dir, 'a', name), 'rb') as f1, \
                    open(os.path.join(self.base_dir, 'b', name), 'rb') as f2:
                self.assertEqual(f1.read(), f2.read())

        out = os.path.join(self.base_dir, 'a')
        trace = _rows(os.path.join(out, 'bcd-sca_seed3_trace.csv'))
        self.assertTrue(1 <= len(trace) <= 5)
        self.assertEqual(list(trace[0]), list(TRACE_COLUMNS))
        metrics = _rows(os.path.join(out, 'bcd-sca_seed3_metrics.csv'))[0]
        self.assertEqual(metrics['feasible'] == 'true', first == EXIT_OK)
        self.assertIn('p_layer2_w', metrics)
        with open(os.path.join(out, 'bcd-sca_seed3_manifest.json'), encoding='utf-8') as f:
            manifest = json.load(f)
        self.assertEqual(manifest['metadata']['seeds'], [3])
        comments = read_csv_comments(os.path.join(out, 'bcd-sca_seed3_trace.csv'))
        self.assertEqual(comments['manifest_hash'], manifest['metadata']['manifest_hash'])

    def test_run_dump_channels(self):
        """--dump-channels でチャネルを保存すること"""
        code = self._main('run', '--algo', 'active-ris', '--dump-channels')
        self.assertIn(code, (EXIT_OK, EXIT_INFEASIBLE))
        self.assertTrue(os.path.exists(os.path.join(self.base_dir, 'output', 'active-ris_seed0_channels.npz')))

    def test_drl_curves(self):
        """MA-CSAC の学習曲線はエピソード数と同じ行数"""
        code = self._main('run', '--algo', 'ma-csac')
        self.assertIn(code, (EXIT_OK, EXIT_INFEASIBLE))
        curves = _rows(os.path.join(self.base_dir, 'output', 'ma-csac_seed0_curves.csv'))
        self.assertEqual(len(curves), 3)
        self.assertEqual([row['episode'] for row in curves], ['1', '2', '3'])

    def test_sweep_single_point(self):
        """値 1 個・シード 1 個のスイープはデータ行 1 行と集計行 1 行"""
        self.assertEqual(self._main('sweep', '--algo', 'bcd-sca', '--axis', 'M', '--values', '4', '--seeds', '1'), EXIT_OK)
        out = os.path.join(self.base_dir, 'output')
        rows = _rows(os.path.join(out, 'bcd-sca_sweep_M.csv'))
        self.assertEqual([row['row_type'] for row in rows], ['data', 'aggregate'])
        self.assertEqual(rows[1]['se_std'], '0.0')
        self.assertEqual(rows[0]['se_bpshz'], rows[1]['se_bpshz'])
        self.assertTrue(os.path.exists(os.path.join(out, 'bcd-sca_sweep_M_report.md')))

    def test_sweep_bad_axis(self):
        """未知のスイープ軸は終了コード 1"""
        self.assertEqual(self._main('sweep', '--axis', 'K', '--values', '1'), EXIT_ERROR)

    def test_compare_zero_gain(self):
        """全利得 0 の比較ではすべての表面の SE が等しいこと"""
        code = self._main('compare-surfaces', '--values', '30', '--seeds', '1', '--zero-gain')
        self.assertEqual(code, EXIT_OK)
        out = os.path.join(self.base_dir, 'output')
        rows = _rows(os.path.join(out, 'compare_surfaces.csv'))
        self.assertEqual({row['surface'] for row in rows}, {'asim', 'bd-ris', 'active-ris'})
        self.assertEqual({float(row['se_mean']) for row in rows}, {0.0})
        with open(os.path.join(out, 'compare_surfaces_report.md'), encoding='utf-8') as f:
            self.assertIn('合格', f.read())


if __name__ == '__main__':
    unittest.main()
