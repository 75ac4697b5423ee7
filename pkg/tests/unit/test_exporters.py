#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
エクスポーターとマニフェストのユニットテスト
"""

import json
import os
import shutil
import tempfile
import unittest
from unittest.mock import patch

import sys
from pathlib import Path

import numpy as np

# プロジェクトルートディレクトリをPythonパスに追加
project_root = Path(__file__).parent.parent.parent
sys.path.append(str(project_root))

from src.config import ExperimentConfig
from src.exporters import BaseExporter, CSVExporter, JSONExporter, RunManifest, read_csv_comments


class TestRunManifest(unittest.TestCase):
    """RunManifest のテスト"""

    def _manifest(self, **kwargs):
        values = dict(config=ExperimentConfig().snapshot(), seeds=[0, 1], algo='bcd-sca')
        values.update(kwargs)
        return RunManifest(**values)

    def test_hash_ignores_time_and_paths(self):
        """時刻と出力パスはハッシュに影響しない"""
        a = self._manifest(timestamp='2026-01-01T00:00:00')
        b = self._manifest(timestamp='2027-01-01T00:00:00', output_paths=['x.csv'])
        self.assertEqual(a.hash, b.hash)
        self.assertEqual(len(a.hash), 64)

    def test_hash_depends_on_content(self):
        """シード・アルゴリズムが違えばハッシュも違う"""
        base = self._manifest()
        self.assertNotEqual(base.hash, self._manifest(seeds=[0]).hash)
        self.assertNotEqual(base.hash, self._manifest(algo='ma-csac').hash)

    @patch.dict(os.environ, {'SOURCE_DATE_EPOCH': '0'})
    def test_source_date_epoch(self):
        """SOURCE_DATE_EPOCH があればその時刻を使う"""
        self.assertTrue(self._manifest().timestamp.startswith('1970-01-01T00:00:00'))


class TestExporters(unittest.TestCase):
    """CSV / JSON エクスポーターのテスト"""

    def setUp(self):
        """テスト前の準備"""
        self.base_dir = tempfile.mkdtemp()
        self.manifest = RunManifest(config={'a': 1}, seeds=[3, 4], algo='mcppo')

    def tearDown(self):
        """テスト後のクリーンアップ"""
        shutil.rmtree(self.base_dir)

    def test_base_exporter(self):
        """基底クラスの export は未実装"""
        with self.assertRaises(NotImplementedError):
            BaseExporter(self.base_dir, self.manifest).export([], 'x')

    def test_csv_header_and_values(self):
        """コメント行・ヘッダー・値の書式"""
        rows = [
            {'iter': 1, 'objective': np.float64(0.1), 'feasible': True, 'wall_ms': None},
            {'iter': 2, 'objective': -2.5, 'feasible': np.bool_(False), 'wall_ms': '', 'extra': 9},
        ]
        path = CSVExporter(self.base_dir, self.manifest).export(rows, 'trace.csv', ['iter', 'objective', 'feasible', 'wall_ms'])
        with open(path, encoding='utf-8') as f:
            lines = f.read().splitlines()
        self.assertEqual(lines[0], f"# manifest_hash: {self.manifest.hash}")
        self.assertEqual(lines[1], "# algo: mcppo")
        self.assertEqual(lines[2], "# seeds: 3 4")
        self.assertEqual(lines[3], "iter,objective,feasible,wall_ms")
        self.assertEqual(lines[4], "1,0.1,true,")
        self.assertEqual(lines[5], "2,-2.5,false,")
        self.assertIn(path, self.manifest.output_paths)
        comments = read_csv_comments(path)
        self.assertEqual(comments['algo'], 'mcppo')
        self.assertEqual(comments['manifest_hash'], self.manifest.hash)

    def test_csv_columns_from_rows(self):
        """列を省略した場合は行のキーの出現順"""
        path = CSVExporter(self.base_dir, self.manifest).export([{'b': 1}, {'a': 2, 'b': 3}], 'rows.csv')
        with open(path, encoding='utf-8') as f:
            lines = f.read().splitlines()
        self.assertEqual(lines[3], "b,a")
        self.assertEqual(lines[4], "1,")

    def test_csv_is_byte_identical(self):
        """同じ入力からは同じバイト列"""
        rows = [{'x': 0.1 + 0.2, 'y': 3}]
        first = CSVExporter(self.base_dir, self.manifest).export(rows, 'a.csv')
        other = RunManifest(config={'a': 1}, seeds=[3, 4], algo='mcppo', timestamp='later')
        second = CSVExporter(self.base_dir, other).export(rows, 'b.csv')
        with open(first, 'rb') as f1, open(second, 'rb') as f2:
            self.assertEqual(f1.read(), f2.read())

    def test_json(self):
        """メタデータにマニフェストとハッシュを含めること"""
        path = JSONExporter(self.base_dir, self.manifest).export({'se': 1.5}, 'manifest.json')
        with open(path, encoding='utf-8') as f:
            data = json.load(f)
        self.assertEqual(data['results'], {'se': 1.5})
        self.assertEqual(data['metadata']['manifest_hash'], self.manifest.hash)
        self.assertEqual(data['metadata']['seeds'], [3, 4])
        self.assertIn(path, data['metadata']['output_paths'])


if __name__ == '__main__':
    unittest.main()
