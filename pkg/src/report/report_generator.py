#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
実験レポート生成モジュール

スイープ・表面比較の集計結果と傾向検査の判定を Markdown にまとめる。
図の描画は行わない（CSV が図の元データ）。
"""

import logging
import os
from typing import Any, Dict, List, Optional, Sequence

from src.exporters import RunManifest
from src.processor.sweep_processor import AuditResult

# ロギングの設定
logger = logging.getLogger(__name__)

# スイープ軸の表示名
AXIS_LABELS = {
    'M': 'ASIM 素子数 M',
    'N': '衛星アンテナ数 N',
    'P_sat_max': '衛星最大送信電力 [dBm]',
    'P_SIM_max': 'ASIM 最大電力 [dBm]',
    'users': 'ユーザー数 L+I',
    'alpha': '電力重み α',
}


def _fmt(value: Any) -> str:
    if value is None:
        return ''
    if isinstance(value, float):
        return f"{value:.4g}"
    return str(value)


def _table(header: Sequence[str], rows: Sequence[Sequence[Any]]) -> List[str]:
    lines = ["| " + " | ".join(header) + " |", "|" + "|".join(["------"] * len(header)) + "|"]
    for row in rows:
        lines.append("| " + " | ".join(_fmt(v) for v in row) + " |")
    return lines


def _audit_lines(audits: Sequence[AuditResult]) -> List[str]:
    if not audits:
        return ["傾向検査の対象はありません。"]
    return _table(
        ['検査', '判定', '詳細'],
        [[a.name, '合格' if a.passed else '不合格', a.detail] for a in audits],
    )


class ReportGenerator:
    """実験結果から Markdown レポートを生成するクラス"""

    def __init__(self, output_dir: str):
        """
        初期化関数

        Args:
            output_dir (str): レポートの出力ディレクトリ
        """
        self.output_dir = output_dir
        os.makedirs(output_dir, exist_ok=True)

    def _header(self, title: str, manifest: Optional[RunManifest]) -> List[str]:
        md_content = [f"# {title}", ""]
        if manifest is not None:
            md_content.append(f"- アルゴリズム: {manifest.algo}")
            md_content.append(f"- シード: {', '.join(str(s) for s in manifest.seeds)}")
            md_content.append(f"- マニフェストハッシュ: `{manifest.hash}`")
            md_content.append(f"- バージョン: {manifest.version}")
            md_content.append("")
        return md_content

    def _write(self, filename: str, md_content: List[str]) -> str:
        output_file = os.path.join(self.output_dir, filename)
        with open(output_file, 'w', encoding='utf-8') as f:
            f.write("\n".join(md_content) + "\n")
        logger.info(f"レポートを {output_file} に保存しました")
        return output_file

    def generate_sweep_report(
        self,
        axis: str,
        table: Sequence[Dict[str, Any]],
        audits: Sequence[AuditResult],
        manifest: Optional[RunManifest] = None,
        filename: Optional[str] = None,
    ) -> str:
        """
        スイープレポートを生成

        Args:
            axis (str): スイープ軸
            table (Sequence[Dict[str, Any]]): データ行と集計行
            audits (Sequence[AuditResult]): 傾向検査の結果
            manifest (Optional[RunManifest]): 実行マニフェスト
            filename (Optional[str]): 出力ファイル名

        Returns:
            str: 生成したレポートファイルのパス
        """
        md_content = self._header(f"スイープレポート（{AXIS_LABELS.get(axis, axis)}）", manifest)

        aggregates = [r for r in table if r.get('row_type') == 'aggregate']
        data_rows = [r for r in table if r.get('row_type') == 'data']
        md_content.append("## 平均値")
        md_content.append("")
        md_content.extend(_table(
            [axis, 'SE [bps/Hz]', 'SE 標準偏差', 'EE [Mbps/J]', 'EE 標準偏差', 'P_total [W]', 'ΣR_SR', '実行可能率'],
            [
                [r['axis_value'], r['se_bpshz'], r['se_std'], r['ee_mbps_per_joule'], r['ee_std'],
                 r['p_total_w'], r['r_sr_sum'], r['feasible']]
                for r in aggregates
            ],
        ))
        md_content.append("")
        md_content.append("## 傾向検査")
        md_content.append("")
        md_content.extend(_audit_lines(audits))
        md_content.append("")

        infeasible = [r for r in data_rows if not r['feasible']]
        if infeasible:
            md_content.append("## 実行不可能な点")
            md_content.append("")
            for r in infeasible:
                md_content.append(f"- {axis}={r['axis_value']}, シード {r['seed']}")
            md_content.append("")

        return self._write(filename or f"sweep_{axis}_report.md", md_content)

    def generate_compare_report(
        self,
        table: Sequence[Dict[str, Any]],
        audits: Sequence[AuditResult],
        manifest: Optional[RunManifest] = None,
        filename: str = 'compare_surfaces_report.md',
    ) -> str:
        """
        表面比較レポートを生成

        電力レベルを行、表面を列にした平均 SE の表と順位検査の結果を書く。
        """
        md_content = self._header("表面アーキテクチャ比較レポート", manifest)

        surfaces: List[str] = []
        levels: Dict[float, Dict[str, Dict[str, Any]]] = {}
        for row in table:
            if row['surface'] not in surfaces:
                surfaces.append(row['surface'])
            levels.setdefault(float(row['p_max_dbm']), {})[row['surface']] = row

        md_content.append("## 平均 SE [bps/Hz]（± 標準偏差）")
        md_content.append("")
        body = []
        for p_dbm in sorted(levels):
            line: List[Any] = [p_dbm]
            for surface in surfaces:
                row = levels[p_dbm].get(surface)
                line.append('' if row is None else f"{row['se_mean']:.4g} ± {row['se_std']:.2g}")
            body.append(line)
        md_content.extend(_table(['P_max [dBm]'] + surfaces, body))
        md_content.append("")
        md_content.append("## 傾向検査")
        md_content.append("")
        md_content.extend(_audit_lines(audits))
        md_content.append("")

        return self._write(filename, md_content)
