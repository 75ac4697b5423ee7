#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
電力モデルと最適化問題の評価のユニットテスト
"""

import math
import unittest
from dataclasses import replace

import sys
from pathlib import Path

import numpy as np

# プロジェクトルートディレクトリをPythonパスに追加
project_root = Path(__file__).parent.parent.parent
sys.path.append(str(project_root))

from src.config import ScenarioConfig
from src.model.energy import (
    circuit_power_sat,
    circuit_power_sim,
    energy_efficiency,
    harvest_power,
    sbd_harvest_ok,
    total_power,
)
from src.model.problem import (
    CONSTRAINT_NAMES,
    evaluate,
    project_box,
    project_simplex,
    project_time_split,
    with_equal_common_split,
)
from src.utils.error_utils import ZeroPowerError
from tests.fixtures import random_channels, random_vars, tiny_scenario


class TestEnergy(unittest.TestCase):
    """電力・収穫モデルのテスト"""

    def test_harvest_power_default(self):
        """既定値の太陽光発電電力は 121.856 W"""
        self.assertAlmostEqual(harvest_power(ScenarioConfig()), 121.856, places=9)

    def test_total_power(self):
        """P_total = ϑ_sat P_sat + ϑ_SIM P_SIM + 回路電力"""
        config = tiny_scenario()
        vars = replace(random_vars(config, 0), theta_sat=2.0, theta_SIM=3.0)
        power = total_power(vars, config, 1.0, 2.0)
        expected = 2.0 + 6.0 + circuit_power_sat(config) + circuit_power_sim(config)
        self.assertAlmostEqual(power.p_total, expected)
        self.assertAlmostEqual(power.p_sat_amplified, 2.0)
        self.assertAlmostEqual(power.p_sim_amplified, 6.0)
        self.assertAlmostEqual(power.p_harvest, harvest_power(config))

    def test_circuit_power_scales(self):
        """回路電力はアンテナ数・素子数に比例して増える"""
        small, large = tiny_scenario(N=2, M=4), tiny_scenario(N=4, M=8)
        self.assertAlmostEqual(
            circuit_power_sat(large) - circuit_power_sat(small), 2 * small.P_D_sat
        )
        self.assertAlmostEqual(circuit_power_sim(large), 2 * circuit_power_sim(small))

    def test_energy_efficiency(self):
        """EE [Mbps/J] と 0 電力のエラー"""
        self.assertAlmostEqual(energy_efficiency(2.0, 4.0, 10e6), 5.0)
        with self.assertRaises(ZeroPowerError):
            energy_efficiency(1.0, 0.0, 10e6)
        with self.assertRaises(ZeroPowerError):
            energy_efficiency(1.0, -1.0, 10e6)

    def test_sbd_harvest(self):
        """必要エネルギー 0 なら常に満たし、過大なら満たさない"""
        channels = random_channels(tiny_scenario(), 1)
        vars = random_vars(tiny_scenario(), 2)
        ok, slack = sbd_harvest_ok(vars, channels, tiny_scenario(eps_SBD=0.0), 0)
        self.assertTrue(ok)
        self.assertGreaterEqual(slack, 0.0)
        ok, slack = sbd_harvest_ok(vars, channels, tiny_scenario(eps_SBD=1e9), 0)
        self.assertFalse(ok)
        self.assertLess(slack, 0.0)


class TestEvaluate(unittest.TestCase):
    """evaluate のテスト"""

    def setUp(self):
        """テスト前の準備"""
        self.config = tiny_scenario(sigma2_SIM=0.01, sigma2_Ul=0.01, sigma2_SUE=0.01)
        self.channels = random_channels(self.config, 5)
        self.vars = random_vars(self.config, 6)

    def test_objective_and_metrics(self):
        """目的関数 = αP_total − β(R_sum + ΣR_SR)、EE = SE·帯域/P_total"""
        objective, constraints, metrics = evaluate(self.vars, self.channels, self.config)
        expected_r = self.vars.beta * (metrics.rates.R_sum + metrics.rates.R_SR_sum)
        self.assertAlmostEqual(objective.p_term, self.vars.alpha * metrics.power.p_total)
        self.assertAlmostEqual(objective.r_term, expected_r)
        self.assertAlmostEqual(objective.value, objective.p_term - objective.r_term)
        self.assertAlmostEqual(
            metrics.ee, metrics.se * self.config.bandwidth_hz / 1e6 / metrics.power.p_total
        )
        self.assertEqual(len(metrics.layer_powers), self.config.Q)
        self.assertTrue(np.all(np.isfinite(constraints.vector())))

    def test_residuals(self):
        """13 個の残差がそろい、既知の値を持つこと"""
        _, constraints, metrics = evaluate(self.vars, self.channels, self.config)
        self.assertEqual(tuple(constraints.residuals), CONSTRAINT_NAMES)
        self.assertEqual(len(CONSTRAINT_NAMES), 13)
        self.assertAlmostEqual(constraints.residuals['weights_sum'], 0.0)
        self.assertAlmostEqual(constraints.residuals['time_split'], 0.0)
        self.assertLessEqual(constraints.residuals['reflection_range'], 0.0)
        self.assertLessEqual(constraints.residuals['gain_range'], 0.0)
        # ‖W‖² = P_sat_max/2 で σ は単体上なので実送信電力は上限の半分以下
        self.assertLess(constraints.residuals['sat_power'], 0.0)
        record = metrics.to_record()
        for name in CONSTRAINT_NAMES:
            self.assertIn(f'residual_{name}', record)
        self.assertEqual(record['max_violation'], constraints.max_violation)

    def test_violation_detected(self):
        """送信電力超過と重み和の崩れが違反として報告されること"""
        vars = replace(self.vars, W=self.vars.W * 10.0, alpha=0.7, beta=0.7)
        _, constraints, _ = evaluate(vars, self.channels, self.config)
        self.assertGreater(constraints.residuals['sat_power'], 0.0)
        self.assertAlmostEqual(constraints.residuals['weights_sum'], 0.4)
        self.assertFalse(constraints.feasible)
        self.assertGreaterEqual(constraints.max_violation, 0.4)

    def test_noma_mode(self):
        """NOMA では共通レートが 0"""
        _, _, metrics = evaluate(self.vars, self.channels, self.config, rate_mode='noma')
        self.assertEqual(metrics.rates.R_common_alloc, 0.0)
        np.testing.assert_array_equal(metrics.rates.C, 0.0)

    def test_equal_common_split(self):
        """C_l = min R_c / L で共通レート制約がちょうど満たされること"""
        vars = with_equal_common_split(self.vars, self.channels, self.config)
        _, constraints, metrics = evaluate(vars, self.channels, self.config)
        self.assertAlmostEqual(float(np.sum(vars.C)), float(np.min(metrics.rates.R_c)))
        self.assertLessEqual(constraints.residuals['common_rate'], 1e-12)
        self.assertAlmostEqual(vars.C[0], vars.C[1])
        noma = with_equal_common_split(self.vars, self.channels, self.config, 'noma')
        np.testing.assert_array_equal(noma.C, 0.0)


class TestProjections(unittest.TestCase):
    """射影のテスト"""

    def test_simplex(self):
        """単体への射影"""
        np.testing.assert_allclose(project_simplex([0.5, 0.5, 0.5]), [1 / 3] * 3)
        np.testing.assert_allclose(project_simplex([2.0, 0.0, 0.0]), [1.0, 0.0, 0.0])
        np.testing.assert_allclose(project_simplex([0.2, 0.3, 0.5]), [0.2, 0.3, 0.5])
        projected = project_simplex([-1.0, 0.4, 3.0])
        self.assertAlmostEqual(float(np.sum(projected)), 1.0)
        self.assertTrue(np.all(projected >= 0.0))

    def test_time_split(self):
        """和が 1 になるよう正規化し、両方 0 なら半分ずつ"""
        eh, bd = project_time_split(np.array([0.3, 0.0, 0.2]), np.array([0.3, 0.0, 0.8]))
        np.testing.assert_allclose(eh, [0.5, 0.5, 0.2])
        np.testing.assert_allclose(bd, [0.5, 0.5, 0.8])

    def test_project_box_idempotent(self):
        """射影は冪等で、射影後の単純制約は満たされること"""
        config = tiny_scenario()
        for seed in range(20):
            base = random_vars(config, seed)
            rng = np.random.default_rng(seed)
            broken = replace(
                base,
                W=base.W * 5.0,
                sigma=rng.normal(size=base.sigma.shape),
                C=rng.normal(size=base.C.shape),
                tau_EH=rng.uniform(-0.5, 1.5, base.I),
                tau_BD=rng.uniform(-0.5, 1.5, base.I),
                eta=rng.uniform(-0.5, 1.5, base.I),
                surface=replace(base.surface, theta=base.surface.theta + 7.0, rho=base.surface.rho * 3.0),
            )
            once = project_box(broken, config)
            twice = project_box(once, config)
            np.testing.assert_allclose(twice.W, once.W)
            np.testing.assert_allclose(twice.sigma, once.sigma)
            np.testing.assert_allclose(twice.tau_EH, once.tau_EH)
            np.testing.assert_allclose(twice.eta, once.eta)
            np.testing.assert_allclose(twice.surface.rho, once.surface.rho)
            np.testing.assert_allclose(twice.surface.theta, once.surface.theta)
            self.assertLessEqual(float(np.sum(np.abs(once.W) ** 2)), config.P_sat_max * (1 + 1e-9))
            self.assertAlmostEqual(float(np.sum(once.sigma)), 1.0)
            self.assertTrue(np.all(once.C >= 0.0))
            np.testing.assert_allclose(once.tau_EH + once.tau_BD, 1.0)
            self.assertTrue(np.all((once.eta >= 0.0) & (once.eta <= 1.0)))
            self.assertTrue(np.all(once.surface.rho <= math.sqrt(config.P_SIM_max) + 1e-12))
            self.assertTrue(np.all((once.surface.theta >= 0.0) & (once.surface.theta < 2 * math.pi)))


if __name__ == '__main__':
    unittest.main()
