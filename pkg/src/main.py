#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
ASIM LEO 衛星ネットワーク実験ワークベンチのメインスクリプト

サブコマンド:
    run               1 アルゴリズム × 1 シードの実行
    sweep             スイープ軸の値 × シードの実行と集計
    compare-surfaces  表面アーキテクチャの SE 比較
    validate-config   設定ファイルの検証のみ

終了コード: 0 成功、2 最終点が実行不可能、1 エラー
"""

import argparse
import logging
import os
import sys
from pathlib import Path
from typing import List, Optional

# プロジェクトルートディレクトリをPythonパスに追加
project_root = Path(__file__).parent.parent
sys.path.append(str(project_root))

import torch

from src.config import load_config
from src.runner import (
    ALGORITHMS,
    EXIT_ERROR,
    EXIT_INFEASIBLE,
    EXIT_OK,
    SURFACES,
    SWEEP_AXES,
    ExperimentRunner,
)
from src.utils.error_utils import OrbitbeamError

# ロギングの設定
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)


def _split(text: Optional[str]) -> List[str]:
    if not text:
        return []
    return [part.strip() for part in text.split(',') if part.strip()]


def build_parser() -> argparse.ArgumentParser:
    """コマンドライン引数の定義"""
    base_dir = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', default=os.path.join(base_dir, 'config.yml'),
                        help='設定ファイルのパス (デフォルト: config.yml)')
    common.add_argument('--out', default=os.path.join(base_dir, 'output'),
                        help='出力ディレクトリ (デフォルト: output)')
    common.add_argument('--verbose', action='store_true', help='DEBUG レベルのログを出力する')

    parser = argparse.ArgumentParser(description='ASIM LEO 衛星 RSMA・共生後方散乱ワークベンチ')
    subparsers = parser.add_subparsers(dest='command', required=True)

    run = subparsers.add_parser('run', parents=[common], help='1 シードの実行')
    run.add_argument('--algo', default='bcd-sca', help=f"アルゴリズム ({', '.join(ALGORITHMS)}、デフォルト: bcd-sca)")
    run.add_argument('--seed', type=int, default=0, help='乱数シード (デフォルト: 0)')
    run.add_argument('--dump-channels', action='store_true', help='評価用チャネルを .npz で保存する')

    sweep = subparsers.add_parser('sweep', parents=[common], help='スイープの実行と集計')
    sweep.add_argument('--algo', default='bcd-sca', help=f"アルゴリズム ({', '.join(ALGORITHMS)}、デフォルト: bcd-sca)")
    sweep.add_argument('--axis', help=f"スイープ軸 ({', '.join(SWEEP_AXES)}、デフォルト: 設定ファイルの sweep.axis)")
    sweep.add_argument('--values', help='軸の値（カンマ区切り、例: 8,16,32 / 2+2,4+4）')
    sweep.add_argument('--seed', type=int, default=0, help='先頭のシード (デフォルト: 0)')
    sweep.add_argument('--seeds', type=int, help='シード数 (デフォルト: 設定ファイルの sweep.seeds)')

    compare = subparsers.add_parser('compare-surfaces', parents=[common], help='表面アーキテクチャの比較')
    compare.add_argument('--values', help='表面最大電力 [dBm]（カンマ区切り）')
    compare.add_argument('--surfaces', default=','.join(SURFACES), help='比較する表面（カンマ区切り）')
    compare.add_argument('--seed', type=int, default=0, help='先頭のシード (デフォルト: 0)')
    compare.add_argument('--seeds', type=int, help='シード数 (デフォルト: 設定ファイルの sweep.seeds)')
    compare.add_argument('--zero-gain', action='store_true', help='全利得を 0 にして評価する')

    subparsers.add_parser('validate-config', parents=[common], help='設定ファイルの検証')
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """
    メイン実行関数

    Args:
        argv (Optional[List[str]]): コマンドライン引数（省略時は sys.argv）

    Returns:
        int: 終了コード
    """
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        # argparse の使い方エラー（終了コード 2）は実行不可能と区別する
        return EXIT_OK if e.code == 0 else EXIT_ERROR
    if args.verbose:
        logging.getLogger().setLevel(logging.DEBUG)
    torch.set_num_threads(1)

    try:
        config = load_config(args.config)
        if args.command == 'validate-config':
            logger.info(f"設定ファイル {args.config} は有効です")
            return EXIT_OK

        runner = ExperimentRunner(config, args.out, dump_channels=getattr(args, 'dump_channels', False))

        if args.command == 'run':
            result, files = runner.run_single(args.algo, args.seed)
            logger.info(f"{len(files)} 個のファイルを出力しました")
            if not result.feasible:
                logger.warning(f"最終点が実行不可能です（最大違反 {result.record['max_violation']:.3g}）")
                return EXIT_INFEASIBLE
            return EXIT_OK

        count = args.seeds if args.seeds is not None else config.sweep.seeds
        seeds = [args.seed + k for k in range(count)]

        if args.command == 'sweep':
            axis = args.axis or config.sweep.axis
            values = _split(args.values) if args.values is not None else list(config.sweep.values)
            _, files = runner.run_sweep(args.algo, axis, values, seeds)
        else:
            p_values = [float(v) for v in _split(args.values)] if args.values is not None else None
            _, files = runner.compare_surfaces(p_values, seeds, _split(args.surfaces), zero=args.zero_gain)
        logger.info(f"{len(files)} 個のファイルを出力しました")
        return EXIT_OK

    except OrbitbeamError as e:
        logger.error(f"エラー発生: {str(e)}")
        return EXIT_ERROR
    except Exception as e:
        logger.error(f"予期しないエラー発生: {str(e)}")
        logger.debug("詳細", exc_info=True)
        return EXIT_ERROR
    finally:
        logger.info("処理が完了しました")


if __name__ == "__main__":
    sys.exit(main())
