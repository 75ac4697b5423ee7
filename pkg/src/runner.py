#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
実験実行モジュール

設定・アルゴリズム・シードから最適化または学習を実行し、反復トレース
（または学習曲線）、最終評価指標、マニフェストを出力する。スイープと
表面比較はワーカープールで並列に実行し、集計は単一スレッドで行う。
"""

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import torch

from src.config import ExperimentConfig, dbm_to_watt, with_overrides
from src.drl.env import CmdpEnv, decode_action, layout_for, state_features
from src.drl.macsac import MacsacTrainer
from src.drl.mcppo import McppoTrainer
from src.exporters import CSVExporter, JSONExporter, RunManifest
from src.model.asim import zero_gain
from src.model.channel import ChannelSet, generate, save_channels
from src.model.problem import evaluate, with_equal_common_split
from src.model.ratemodel import DecisionVars
from src.processor.sweep_processor import (
    COMPARE_COLUMNS,
    SWEEP_COLUMNS,
    SweepProcessor,
    audit_surface_ordering,
    is_finite_row,
    sweep_audits,
)
from src.report.report_generator import ReportGenerator
from src.solvers.bcd_sca import BcdScaSolver, TRACE_COLUMNS, initial_vars
from src.utils.error_utils import ConfigError

# ロギングの設定
logger = logging.getLogger(__name__)

ALGORITHMS = ('bcd-sca', 'ma-csac', 'mcppo', 'noma-macsac', 'active-ris', 'bd-ris')
DRL_ALGORITHMS = ('ma-csac', 'mcppo', 'noma-macsac')
SWEEP_AXES = ('M', 'N', 'P_sat_max', 'P_SIM_max', 'users', 'alpha')
SURFACES = ('asim', 'bd-ris', 'active-ris')

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INFEASIBLE = 2

THREADS_ENV = 'ORBITBEAM_THREADS'


@dataclass
class AlgoResult:
    """1 回の実行結果"""

    algo: str
    seed: int
    vars: DecisionVars
    record: Dict[str, Any]
    # 'trace'（BCD-SCA の反復）または 'curves'（学習曲線）
    row_kind: str
    rows: List[Dict[str, Any]] = field(default_factory=list)

    @property
    def feasible(self) -> bool:
        return bool(self.record['feasible'])


def check_algo(algo: str) -> str:
    if algo not in ALGORITHMS:
        raise ConfigError(f"未知のアルゴリズムです: {algo}（{', '.join(ALGORITHMS)} のいずれか）")
    return algo


def algo_config(config: ExperimentConfig, algo: str) -> ExperimentConfig:
    """
    アルゴリズムに合わせて表面の種類を設定する

    active-ris / bd-ris は単層の表面で、それ以外は設定どおりの ASIM を使う。

    Args:
        config (ExperimentConfig): 実験設定
        algo (str): アルゴリズム ID

    Returns:
        ExperimentConfig: 表面を置き換えた設定
    """
    check_algo(algo)
    if algo == 'active-ris':
        return with_overrides(config, 'scenario', surface='active-ris', Q=1)
    if algo == 'bd-ris':
        return with_overrides(config, 'scenario', surface='bd-ris', Q=1)
    if config.scenario.surface != 'asim':
        return with_overrides(config, 'scenario', surface='asim')
    return config


def apply_axis(config: ExperimentConfig, axis: str, value: Any) -> ExperimentConfig:
    """
    スイープ軸の値を設定に反映する

    電力軸の値は dBm、users は 'L+I'、alpha は β = 1 − α を同時に設定する。

    Raises:
        ConfigError: 軸名または値が不正な場合
    """
    text = str(value).strip()
    try:
        if axis in ('M', 'N'):
            overrides = {axis: int(text)}
        elif axis in ('P_sat_max', 'P_SIM_max'):
            overrides = {axis: dbm_to_watt(float(text))}
        elif axis == 'users':
            L, I = (int(part) for part in text.split('+'))
            overrides = {'L': L, 'I': I}
        elif axis == 'alpha':
            alpha = float(text)
            if not 0.0 <= alpha <= 1.0:
                raise ValueError(f"α は [0,1] の範囲である必要があります: {alpha}")
            overrides = {'alpha': alpha, 'beta': 1.0 - alpha}
        else:
            raise ConfigError(f"未知のスイープ軸です: {axis}（{', '.join(SWEEP_AXES)} のいずれか）")
    except ValueError as e:
        raise ConfigError(f"スイープ軸 {axis} の値 {text!r} を解釈できません: {str(e)}")
    return with_overrides(config, 'scenario', **overrides)


def thread_cap(requested: int) -> int:
    """ORBITBEAM_THREADS で上限を付けたワーカー数"""
    raw = os.environ.get(THREADS_ENV)
    if raw:
        try:
            requested = min(requested, int(raw))
        except ValueError:
            logger.warning(f"{THREADS_ENV}={raw!r} を整数として解釈できないため無視します")
    return max(1, requested)


def _greedy_action(actor, state: np.ndarray) -> np.ndarray:
    with torch.no_grad():
        action, _, _, _ = actor.sample(torch.as_tensor(state, dtype=torch.float32), deterministic=True)
    return action.numpy().astype(float)


def greedy_vars(actor, channels: ChannelSet, config: ExperimentConfig, rate_mode: str = 'rsma') -> DecisionVars:
    """
    学習済み方策を決定的に T ステップ実行し、最良の点を返す

    実行可能な点を優先し、その中で目的関数値が最小のものを選ぶ。

    Args:
        actor: sample(state, deterministic) を持つ方策
        channels (ChannelSet): 評価用チャネル
        config (ExperimentConfig): 実験設定
        rate_mode (str): 'rsma' または 'noma'

    Returns:
        DecisionVars: 選んだ変数
    """
    scenario = config.scenario
    layout = layout_for(scenario)
    state = state_features(channels, np.full(scenario.I, 0.5), np.zeros(layout.dim))
    best: Optional[Tuple[Tuple[bool, float], DecisionVars]] = None
    for _ in range(config.drl.steps_per_episode):
        action = _greedy_action(actor, state)
        vars = decode_action(action, layout, channels, scenario, rate_mode)
        objective, constraints, _ = evaluate(vars, channels, scenario, rate_mode)
        key = (not constraints.feasible, objective.value)
        if best is None or key < best[0]:
            best = (key, vars)
        state = state_features(channels, vars.tau_EH, action)
    return best[1]


def metrics_record(algo: str, seed: int, vars: DecisionVars, channels: ChannelSet, config: ExperimentConfig, rate_mode: str) -> Dict[str, Any]:
    """評価指標 CSV の 1 行（層ごとの電力を含む）"""
    _, _, metrics = evaluate(vars, channels, config.scenario, rate_mode)
    record: Dict[str, Any] = {'algo': algo, 'seed': int(seed)}
    record.update(metrics.to_record())
    for q, power in enumerate(metrics.layer_powers):
        record[f'p_layer{q + 1}_w'] = float(power)
    return record


def run_algorithm(config: ExperimentConfig, algo: str, seed: int, channels: Optional[ChannelSet] = None) -> AlgoResult:
    """
    1 つのアルゴリズムを 1 シードで実行する

    BCD-SCA 系は生成したチャネルで反復し、強化学習系はシードから派生した
    エピソードごとのチャネルで学習した後、同じ評価用チャネルで決定的方策を
    評価する。

    Args:
        config (ExperimentConfig): 実験設定
        algo (str): アルゴリズム ID
        seed (int): 乱数シード
        channels (Optional[ChannelSet]): 評価用チャネル（省略時は生成）

    Returns:
        AlgoResult: 実行結果
    """
    config = algo_config(config, algo)
    rate_mode = 'noma' if algo == 'noma-macsac' else 'rsma'
    if channels is None:
        channels = generate(config.scenario, seed)

    if algo in DRL_ALGORITHMS:
        env = CmdpEnv(config.scenario, seed, horizon=config.drl.steps_per_episode, rate_mode=rate_mode)
        if algo == 'mcppo':
            trainer = McppoTrainer(env, config.drl, seed)
            actor = trainer.agent.actor
        else:
            trainer = MacsacTrainer(env, config.drl, seed)
            actor = trainer.agents.actor
        curves = trainer.train()
        vars = greedy_vars(actor, channels, config, rate_mode)
        record = metrics_record(algo, seed, vars, channels, config, rate_mode)
        return AlgoResult(algo=algo, seed=seed, vars=vars, record=record, row_kind='curves', rows=curves)

    solver = BcdScaSolver(config)
    result = solver.solve(channels)
    if result.flags.get('max_iterations'):
        logger.warning(f"{algo} シード {seed}: 最大反復回数に達しました")
    record = metrics_record(algo, seed, result.vars, channels, config, rate_mode)
    return AlgoResult(algo=algo, seed=seed, vars=result.vars, record=record, row_kind='trace', rows=result.rows)


def surface_point(config: ExperimentConfig, surface: str, p_dbm: float, seed: int, zero: bool = False) -> Dict[str, Any]:
    """
    表面比較の 1 点（電力レベル・表面・シード）

    zero が True の場合は最適化せず、全利得 0 の初期点を評価する。
    """
    q = config.sweep.compare_q if surface == 'asim' else 1
    cfg = with_overrides(config, 'scenario', surface=surface, Q=q, P_SIM_max=dbm_to_watt(p_dbm))
    channels = generate(cfg.scenario, seed)
    if zero:
        vars = initial_vars(channels, cfg.scenario, surface)
        vars = with_equal_common_split(replace(vars, surface=zero_gain(vars.surface)), channels, cfg.scenario)
    else:
        vars = BcdScaSolver(cfg).solve(channels).vars
    _, constraints, metrics = evaluate(vars, channels, cfg.scenario)
    return {
        'p_max_dbm': float(p_dbm),
        'surface': surface,
        'seed': int(seed),
        'se_bpshz': float(metrics.se),
        'feasible': bool(constraints.feasible),
    }


class ExperimentRunner:
    """CLI の各サブコマンドを実行するクラス"""

    def __init__(self, config: ExperimentConfig, out_dir: str, dump_channels: bool = False):
        """
        初期化関数

        Args:
            config (ExperimentConfig): 実験設定
            out_dir (str): 出力ディレクトリ
            dump_channels (bool): 評価用チャネルを .npz で保存するかどうか
        """
        self.config = config
        self.out_dir = out_dir
        self.dump_channels = dump_channels
        os.makedirs(out_dir, exist_ok=True)

    def _manifest(self, algo: str, seeds: Sequence[int], axis: Optional[str] = None, values: Sequence[str] = ()) -> RunManifest:
        return RunManifest(
            config=self.config.snapshot(),
            seeds=[int(s) for s in seeds],
            algo=algo,
            axis=axis,
            values=[str(v) for v in values],
        )

    def _map(self, fn, jobs: Sequence[Tuple], workers: int) -> List[Any]:
        workers = thread_cap(min(workers, len(jobs)) if jobs else 1)
        if workers == 1:
            return [fn(*job) for job in jobs]
        logger.info(f"{len(jobs)} 件のジョブを {workers} ワーカーで実行します")
        with ThreadPoolExecutor(max_workers=workers) as executor:
            futures = [executor.submit(fn, *job) for job in jobs]
            results = []
            for job, future in zip(jobs, futures):
                try:
                    results.append(future.result())
                except Exception as e:
                    logger.error(f"ジョブ {job[1:]} の実行中にエラー発生: {str(e)}")
                    raise
            return results

    def run_single(self, algo: str, seed: int) -> Tuple[AlgoResult, List[str]]:
        """
        1 シードの実行結果を出力する

        出力: {algo}_seed{seed}_trace.csv（強化学習は _curves.csv）、
        _metrics.csv、_manifest.json

        Returns:
            Tuple[AlgoResult, List[str]]: 実行結果と出力ファイル
        """
        check_algo(algo)
        logger.info(f"{algo} をシード {seed} で実行します")
        config = algo_config(self.config, algo)
        channels = generate(config.scenario, seed)
        result = run_algorithm(self.config, algo, seed, channels)

        manifest = self._manifest(algo, [seed])
        csv_exporter = CSVExporter(self.out_dir, manifest)
        prefix = f"{algo}_seed{seed}"
        if result.row_kind == 'trace':
            csv_exporter.export(result.rows, f"{prefix}_trace.csv", columns=TRACE_COLUMNS)
        else:
            csv_exporter.export(result.rows, f"{prefix}_curves.csv")
        csv_exporter.export([result.record], f"{prefix}_metrics.csv")
        if self.dump_channels:
            path = os.path.join(self.out_dir, f"{prefix}_channels.npz")
            save_channels(path, channels)
            manifest.output_paths.append(path)
        JSONExporter(self.out_dir, manifest).export(result.record, f"{prefix}_manifest.json")

        state = '実行可能' if result.feasible else '実行不可能'
        logger.info(f"{algo} シード {seed}: SE {result.record['se_bpshz']:.4g} bps/Hz, EE {result.record['ee_mbps_per_joule']:.4g} Mbps/J（{state}）")
        return result, list(manifest.output_paths)

    def run_sweep(self, algo: str, axis: str, values: Sequence[str], seeds: Sequence[int]) -> Tuple[List[Dict[str, Any]], List[str]]:
        """
        軸の値とシードの全組み合わせを実行して集計する

        Returns:
            Tuple[List[Dict[str, Any]], List[str]]: データ行と集計行、出力ファイル

        Raises:
            ConfigError: 軸名が不正、または値・シードが空の場合
        """
        check_algo(algo)
        if axis not in SWEEP_AXES:
            raise ConfigError(f"未知のスイープ軸です: {axis}（{', '.join(SWEEP_AXES)} のいずれか）")
        if not values:
            raise ConfigError("スイープの値が空です")
        if not seeds:
            raise ConfigError("シードが空です")

        configs = {str(v): apply_axis(self.config, axis, v) for v in values}
        jobs = [(configs[str(v)], algo, int(seed)) for v in values for seed in seeds]
        workers = 1 if algo in DRL_ALGORITHMS else self.config.sweep.workers
        logger.info(f"{algo} の {axis} スイープを開始します（{len(values)} 値 × {len(seeds)} シード）")
        results = self._map(run_algorithm, jobs, workers)

        processor = SweepProcessor(axis)
        data_rows = []
        for (value, seed), result in zip([(str(v), s) for v in values for s in seeds], results):
            row = processor.data_row(value, seed, result.record)
            if not is_finite_row(row):
                logger.warning(f"{axis}={value} シード {seed} の結果に有限でない値が含まれます")
            data_rows.append(row)
        table = processor.sweep_table(data_rows)
        aggregates = [r for r in table if r['row_type'] == 'aggregate']
        audits = sweep_audits(axis, aggregates)

        manifest = self._manifest(algo, seeds, axis, values)
        name = f"{algo}_sweep_{axis}"
        CSVExporter(self.out_dir, manifest).export(table, f"{name}.csv", columns=SWEEP_COLUMNS)
        ReportGenerator(self.out_dir).generate_sweep_report(axis, table, audits, manifest, f"{name}_report.md")
        manifest.output_paths.append(os.path.join(self.out_dir, f"{name}_report.md"))
        JSONExporter(self.out_dir, manifest).export(
            {'aggregates': aggregates, 'audits': [a.__dict__ for a in audits]}, f"{name}_manifest.json"
        )
        return table, list(manifest.output_paths)

    def compare_surfaces(
        self,
        p_values: Optional[Sequence[float]] = None,
        seeds: Sequence[int] = (0,),
        surfaces: Sequence[str] = SURFACES,
        zero: bool = False,
    ) -> Tuple[List[Dict[str, Any]], List[str]]:
        """
        電力レベルごとに表面アーキテクチャの SE を比較する

        Args:
            p_values (Optional[Sequence[float]]): 表面最大電力 [dBm]（省略時は設定値）
            seeds (Sequence[int]): シード
            surfaces (Sequence[str]): 比較する表面
            zero (bool): 全利得 0 で評価するかどうか

        Returns:
            Tuple[List[Dict[str, Any]], List[str]]: 集計行と出力ファイル
        """
        p_values = list(self.config.sweep.compare_p_dbm if p_values is None else p_values)
        for surface in surfaces:
            if surface not in SURFACES:
                raise ConfigError(f"未知の表面です: {surface}（{', '.join(SURFACES)} のいずれか）")
        jobs = [(self.config, s, float(p), int(seed), zero) for p in p_values for s in surfaces for seed in seeds]
        logger.info(f"表面比較を開始します（{len(p_values)} 電力 × {len(surfaces)} 表面 × {len(seeds)} シード）")
        records = self._map(surface_point, jobs, self.config.sweep.workers)

        table = SweepProcessor.compare_table(records)
        audits = [audit_surface_ordering(table)]
        for audit in audits:
            log = logger.info if audit.passed else logger.warning
            log(f"傾向検査 {audit.name}: {'合格' if audit.passed else '不合格'} ({audit.detail})")

        manifest = self._manifest('compare-surfaces', seeds, 'P_SIM_max', [str(p) for p in p_values])
        CSVExporter(self.out_dir, manifest).export(table, 'compare_surfaces.csv', columns=COMPARE_COLUMNS)
        ReportGenerator(self.out_dir).generate_compare_report(table, audits, manifest)
        manifest.output_paths.append(os.path.join(self.out_dir, 'compare_surfaces_report.md'))
        JSONExporter(self.out_dir, manifest).export(
            {'records': records, 'audits': [a.__dict__ for a in audits]}, 'compare_surfaces_manifest.json'
        )
        return table, list(manifest.output_paths)
