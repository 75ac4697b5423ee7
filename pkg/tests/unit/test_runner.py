#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
実験実行モジュールのユニットテスト
"""

import os
import unittest
from unittest.mock import patch

import sys
from pathlib import Path

# プロジェクトルートディレクトリをPythonパスに追加
project_root = Path(__file__).parent.parent.parent
sys.path.append(str(project_root))

from src.config import dbm_to_watt, load_config
from src.runner import (
    THREADS_ENV,
    algo_config,
    apply_axis,
    check_algo,
    surface_point,
    thread_cap,
)
from src.utils.error_utils import ConfigError

TINY_CONFIG = os.path.join(os.path.dirname(os.path.dirname(__file__)), 'test_data', 'config', 'tiny.yml')


class TestRunnerHelpers(unittest.TestCase):
    """設定の組み立てのテスト"""

    def setUp(self):
        """テスト前の準備"""
        self.config = load_config(TINY_CONFIG)

    def test_check_algo(self):
        """未知のアルゴリズムは ConfigError"""
        self.assertEqual(check_algo('mcppo'), 'mcppo')
        with self.assertRaises(ConfigError):
            check_algo('dqn')

    def test_algo_config(self):
        """比較方式は単層の表面を使う"""
        active = algo_config(self.config, 'active-ris')
        self.assertEqual((active.scenario.surface, active.scenario.Q), ('active-ris', 1))
        bd = algo_config(self.config, 'bd-ris')
        self.assertEqual((bd.scenario.surface, bd.scenario.Q), ('bd-ris', 1))
        self.assertIs(algo_config(self.config, 'bcd-sca'), self.config)

    def test_apply_axis(self):
        """各スイープ軸の値の反映"""
        self.assertEqual(apply_axis(self.config, 'M', '8').scenario.M, 8)
        self.assertEqual(apply_axis(self.config, 'N', 3).scenario.N, 3)
        self.assertAlmostEqual(apply_axis(self.config, 'P_sat_max', '40').scenario.P_sat_max, dbm_to_watt(40.0))
        users = apply_axis(self.config, 'users', '3+2').scenario
        self.assertEqual((users.L, users.I), (3, 2))
        weights = apply_axis(self.config, 'alpha', '0.25').scenario
        self.assertEqual((weights.alpha, weights.beta), (0.25, 0.75))

    def test_apply_axis_errors(self):
        """不正な軸・値は ConfigError"""
        for axis, value in (('K', '1'), ('M', 'abc'), ('users', '3'), ('alpha', '1.5'), ('M', '0')):
            with self.assertRaises(ConfigError):
                apply_axis(self.config, axis, value)

    def test_thread_cap(self):
        """環境変数でワーカー数の上限を付けること"""
        with patch.dict(os.environ, {THREADS_ENV: '2'}):
            self.assertEqual(thread_cap(8), 2)
        with patch.dict(os.environ, {THREADS_ENV: 'many'}):
            self.assertEqual(thread_cap(3), 3)
        with patch.dict(os.environ, {}, clear=True):
            self.assertEqual(thread_cap(0), 1)

    def test_zero_gain_surfaces_equal(self):
        """全利得 0 ではどの表面でも SE が 0 で等しいこと"""
        values = [surface_point(self.config, s, 30.0, 0, zero=True)['se_bpshz'] for s in ('asim', 'bd-ris', 'active-ris')]
        self.assertEqual(values, [0.0, 0.0, 0.0])


if __name__ == '__main__':
    unittest.main()
