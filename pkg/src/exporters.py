#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
実験結果エクスポートモジュール

実行マニフェスト（設定スナップショット・シード・アルゴリズム等）と、
その内容ハッシュをヘッダーに埋め込んだ CSV / JSON を出力する。
同じマニフェストからは同じバイト列の CSV が得られるよう、CSV には
時刻を書き込まない。
"""

import csv
import hashlib
import json
import logging
import os
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

# ロギングの設定
logger = logging.getLogger(__name__)

SOFTWARE_VERSION = '0.1.0'

# ハッシュ計算から除外するフィールド
_UNHASHED = ('timestamp', 'output_paths')


def _timestamp() -> str:
    """SOURCE_DATE_EPOCH が設定されていればその時刻を使う"""
    epoch = os.environ.get('SOURCE_DATE_EPOCH')
    if epoch:
        return datetime.fromtimestamp(int(epoch), tz=timezone.utc).isoformat()
    return datetime.now().isoformat()


@dataclass
class RunManifest:
    """1 回の CLI 実行の記録"""

    config: Dict[str, Any]
    seeds: List[int]
    algo: str
    axis: Optional[str] = None
    values: List[str] = field(default_factory=list)
    output_paths: List[str] = field(default_factory=list)
    version: str = SOFTWARE_VERSION
    timestamp: str = field(default_factory=_timestamp)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @property
    def hash(self) -> str:
        return manifest_hash(self)


def manifest_hash(manifest: RunManifest) -> str:
    """
    マニフェストの内容ハッシュ（SHA-256）

    時刻と出力パスは含めないため、同じ設定・シード・アルゴリズムの
    再実行では同じ値になる。

    Args:
        manifest (RunManifest): 実行マニフェスト

    Returns:
        str: 16 進表記のハッシュ
    """
    payload = {k: v for k, v in manifest.to_dict().items() if k not in _UNHASHED}
    text = json.dumps(payload, sort_keys=True, ensure_ascii=False, default=str)
    return hashlib.sha256(text.encode('utf-8')).hexdigest()


class BaseExporter:
    """エクスポーターの基底クラス"""

    def __init__(self, output_dir: str, manifest: RunManifest):
        """
        初期化関数

        Args:
            output_dir (str): 出力ディレクトリのパス
            manifest (RunManifest): 実行マニフェスト
        """
        self.output_dir = output_dir
        self.manifest = manifest
        os.makedirs(output_dir, exist_ok=True)

    def export(self, results: Any, filename: str) -> str:
        """
        結果をエクスポート

        Args:
            results: 出力するデータ
            filename (str): 出力ファイル名

        Returns:
            str: 出力したファイルのパス
        """
        raise NotImplementedError("サブクラスで実装する必要があります")

    def _register(self, path: str) -> str:
        if path not in self.manifest.output_paths:
            self.manifest.output_paths.append(path)
        return path


def _format_value(value: Any) -> Any:
    # 浮動小数点は repr で往復可能な最短表記にする
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, float):
        return repr(value)
    if value is None:
        return ''
    return value


class CSVExporter(BaseExporter):
    """CSV 形式でエクスポートするクラス"""

    def export(self, results: Sequence[Dict[str, Any]], filename: str, columns: Optional[Sequence[str]] = None) -> str:
        """
        行のリストを CSV に出力する

        先頭に '#' で始まるコメント行としてマニフェストハッシュ・
        アルゴリズム・シードを書き、続けてヘッダー行とデータ行を書く。

        Args:
            results (Sequence[Dict[str, Any]]): 出力する行
            filename (str): 出力ファイル名
            columns (Optional[Sequence[str]]): 列の順序（省略時は行のキーの出現順）

        Returns:
            str: 出力したファイルのパス
        """
        if columns is None:
            columns = []
            for row in results:
                for key in row:
                    if key not in columns:
                        columns.append(key)

        csv_file = os.path.join(self.output_dir, filename)
        with open(csv_file, 'w', newline='', encoding='utf-8') as f:
            f.write(f"# manifest_hash: {self.manifest.hash}\n")
            f.write(f"# algo: {self.manifest.algo}\n")
            f.write(f"# seeds: {' '.join(str(s) for s in self.manifest.seeds)}\n")
            writer = csv.DictWriter(f, fieldnames=list(columns), extrasaction='ignore', lineterminator='\n')
            writer.writeheader()
            for row in results:
                writer.writerow({k: _format_value(row.get(k)) for k in columns})

        logger.info(f"CSVファイル {csv_file} を作成しました ({len(results)} 行)")
        return self._register(csv_file)


class JSONExporter(BaseExporter):
    """JSON 形式でエクスポートするクラス"""

    def export(self, results: Any, filename: str) -> str:
        """
        マニフェストと結果を 1 つの JSON に出力する

        Args:
            results: 出力する結果（辞書またはリスト）
            filename (str): 出力ファイル名

        Returns:
            str: 出力したファイルのパス
        """
        json_file = os.path.join(self.output_dir, filename)
        self._register(json_file)
        metadata = self.manifest.to_dict()
        metadata['manifest_hash'] = self.manifest.hash
        output_data = {
            "metadata": metadata,
            "results": results,
        }
        with open(json_file, 'w', encoding='utf-8') as f:
            json.dump(output_data, f, indent=2, ensure_ascii=False, default=str)

        logger.info(f"JSONファイル {json_file} を作成しました")
        return json_file


def read_csv_comments(path: str) -> Dict[str, str]:
    """CSV 先頭の '# key: value' 行を辞書として読む"""
    comments: Dict[str, str] = {}
    with open(path, 'r', encoding='utf-8') as f:
        for line in f:
            if not line.startswith('#'):
                break
            key, _, value = line[1:].partition(':')
            comments[key.strip()] = value.strip()
    return comments
