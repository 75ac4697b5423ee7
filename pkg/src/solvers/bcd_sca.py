#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
BCD-SCA ソルバー

ブロック 1（プリコーダ・電力分割）、ブロック 2（表面の利得・位相）、
ブロック 3（時間分割・反射係数）を順に解く。ブロック 1/2 は二次変換と
MM 線形化による凹代理、ブロック 3 は拡張ラグランジュ法で、いずれも
内部では射影勾配法を使う。各ブロックの更新は真の目的関数で受理判定し、
悪化する更新は補間で縮めるか棄却する。

複素変数は実部・虚部を並べた実テンソルとして torch の自動微分で扱う。
"""

import logging
import math
import time
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import torch

from src.config import ExperimentConfig, ScenarioConfig, SolverConfig
from src.model.asim import (
    TWO_PI,
    AsimState,
    BdRisState,
    SurfaceKind,
    initial_surface,
    layer_matrices,
    output_layer,
    surface_transfer,
)
from src.model.channel import ChannelSet
from src.model.energy import circuit_power_sat, circuit_power_sim, effective_eps_sbd, harvest_power
from src.model.problem import evaluate, project_box, with_equal_common_split
from src.model.ratemodel import DecisionVars, log2_slope, rate, sbd_received_power
from src.solvers.base_solver import BaseSolver, SolveResult
from src.solvers.surrogates import (
    mm_linearize,
    project_disc,
    project_l21_ball,
    projected_gradient,
    quad_transform_update,
)

# ロギングの設定
logger = logging.getLogger(__name__)

_REAL = torch.float64
_COMPLEX = torch.complex128

# 受理判定で更新幅を半分にする最大回数
_ACCEPT_HALVINGS = 8

TRACE_COLUMNS = ('iter', 'objective', 'max_violation', 'block1_iters', 'block2_iters', 'block3_iters', 'wall_ms')


def _rt(values) -> torch.Tensor:
    return torch.as_tensor(np.asarray(values, dtype=float), dtype=_REAL)


def _ct(values) -> torch.Tensor:
    return torch.as_tensor(np.ascontiguousarray(values, dtype=np.complex128), dtype=_COMPLEX)


def cartesian_from_polar(rho: np.ndarray, theta: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """(ρ, θ) → (a, b) = (ρ cos θ, ρ sin θ)"""
    return rho * np.cos(theta), rho * np.sin(theta)


def polar_from_cartesian(a: np.ndarray, b: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """(a, b) → (ρ, θ)。θ は [0, 2π) に折り返す"""
    theta = np.mod(np.arctan2(b, a), TWO_PI)
    theta = np.where(theta >= TWO_PI, 0.0, theta)
    return np.hypot(a, b), theta


@dataclass
class SurrogateState:
    """逐次近似の補助変数と拡張ラグランジュ乗数"""

    y_c: np.ndarray
    y_p: np.ndarray
    t: float
    point: DecisionVars
    a: np.ndarray
    b: np.ndarray
    lambda_AL: np.ndarray
    rho_AL: float
    # 直前のブロック呼び出しの内部反復数
    inner_steps: int = 0
    al_history: List[float] = field(default_factory=list)
    flags: Dict[str, bool] = field(default_factory=dict)


@dataclass
class SolveTrace:
    """外側反復ごとの記録"""

    initial_objective: float
    rows: List[Dict[str, object]] = field(default_factory=list)
    converged: bool = False
    max_iterations_hit: bool = False

    @property
    def objectives(self) -> List[float]:
        return [float(row['objective']) for row in self.rows]

    def to_rows(self) -> List[Dict[str, object]]:
        return [dict(row) for row in self.rows]


@dataclass(frozen=True)
class _Expansion:
    """展開点でのリンク量（推定 CSI）"""

    users: np.ndarray
    T: np.ndarray
    amp: np.ndarray
    noise_coef: np.ndarray
    A_c: np.ndarray
    A_p: np.ndarray
    D_c: np.ndarray
    D_p: np.ndarray
    y_c: np.ndarray
    y_p: np.ndarray


def _expand(vars: DecisionVars, channels: ChannelSet, config: ScenarioConfig) -> _Expansion:
    G = channels.users('estimated')
    T = surface_transfer(vars.surface, channels.H_layers)
    amp = np.conj(G) @ T @ channels.F @ vars.effective_precoder()
    noise_coef = np.sum(np.abs(np.conj(G) @ output_layer(vars.surface)) ** 2, axis=1) * config.sigma2_SIM
    power = np.abs(amp) ** 2
    sigma_l = np.asarray(vars.sigma[1:], dtype=float)
    L = power.shape[0]
    private = power[:, 1:]
    diag = private[np.arange(L), np.arange(L)]
    D_c = np.sum(private, axis=1) + noise_coef * np.sum(sigma_l) + config.sigma2_Ul
    D_p = np.sum(private, axis=1) - diag + noise_coef * (np.sum(sigma_l) - sigma_l) + config.sigma2_Ul
    A_c = power[:, 0]
    y_c = np.array([quad_transform_update(A_c[k], D_c[k]) for k in range(L)])
    y_p = np.array([quad_transform_update(diag[k], D_p[k]) for k in range(L)])
    return _Expansion(
        users=G, T=T, amp=amp, noise_coef=noise_coef,
        A_c=A_c, A_p=diag, D_c=D_c, D_p=D_p, y_c=y_c, y_p=y_p,
    )


def surrogate_state(vars: DecisionVars, channels: ChannelSet, scenario: ScenarioConfig, solver: SolverConfig) -> SurrogateState:
    """展開点 vars での補助変数を初期化する"""
    expansion = _expand(vars, channels, scenario)
    if isinstance(vars.surface, AsimState):
        a, b = cartesian_from_polar(vars.surface.rho, vars.surface.theta)
    else:
        a, b = np.zeros((0, vars.surface.M)), np.zeros((0, vars.surface.M))
    gamma_c = expansion.A_c / expansion.D_c
    return SurrogateState(
        y_c=expansion.y_c,
        y_p=expansion.y_p,
        t=float(np.min(rate(gamma_c, scenario.B))),
        point=vars,
        a=a,
        b=b,
        lambda_AL=np.zeros(vars.I),
        rho_AL=solver.al_rho0,
    )


def initial_vars(channels: ChannelSet, config: ScenarioConfig, kind: Optional[str] = None) -> DecisionVars:
    """
    初期点を作る

    表面は ρ = min(1, √P_SIM_max)、θ = 0、W は T を通した ĝ への整合フィルタ、
    σ は均等、τ = 0.5/0.5、η = 0.5。表面出力電力が上限を超える場合は W を縮める。

    Args:
        channels (ChannelSet): チャネル
        config (ScenarioConfig): シナリオ設定
        kind (Optional[str]): 表面の種類（省略時は設定値）

    Returns:
        DecisionVars: 単純制約を満たす初期点
    """
    kind = SurfaceKind(kind or config.surface)
    surface = initial_surface(kind, channels.M, channels.Q, config.P_SIM_max, config.bd_block)
    T = surface_transfer(surface, channels.H_layers)
    A = np.conj(channels.users('estimated')) @ T @ channels.F
    L = channels.L

    def _unit(vector: np.ndarray) -> np.ndarray:
        norm = np.linalg.norm(vector)
        return vector / norm if norm > 0 else np.zeros_like(vector)

    private = [_unit(np.conj(A[l])) for l in range(L)]
    common = _unit(np.sum(np.array(private), axis=0))
    W = np.column_stack([common] + private) * math.sqrt(config.P_sat_max / (L + 1))

    vars = DecisionVars(
        W=W.astype(np.complex128),
        sigma=np.full(L + 1, 1.0 / (L + 1)),
        surface=surface,
        C=np.zeros(L),
        tau_EH=np.full(channels.I, 0.5),
        tau_BD=np.full(channels.I, 0.5),
        eta=np.full(channels.I, 0.5),
        alpha=config.alpha,
        beta=config.beta,
        theta_sat=config.theta_sat,
        theta_SIM=config.theta_SIM,
    )
    vars = project_box(vars, config)
    vars = _from_effective(vars, _retract(vars.effective_precoder(), vars, channels, config), vars.sigma)
    return with_equal_common_split(vars, channels, config)


def _surface_noise(surface, sigma2_SIM: float) -> float:
    return sum(float(np.sum(np.abs(P) ** 2)) for P in layer_matrices(surface)) * sigma2_SIM


def _retract(V: np.ndarray, vars: DecisionVars, channels: ChannelSet, config: ScenarioConfig) -> np.ndarray:
    """表面出力電力が P_SIM_max を超えないよう実効プリコーダを縮める"""
    T = surface_transfer(vars.surface, channels.H_layers)
    signal = float(np.sum(np.abs(T @ channels.F @ V) ** 2))
    noise = _surface_noise(vars.surface, config.sigma2_SIM)
    if signal <= 0 or signal + noise <= config.P_SIM_max:
        return V
    scale = math.sqrt(max(config.P_SIM_max - noise, 0.0) / signal) * (1.0 - 1e-12)
    return V * scale


def _from_effective(vars: DecisionVars, V: np.ndarray, fallback_sigma: np.ndarray) -> DecisionVars:
    """
    実効プリコーダ V から (W, σ) を復元する

    σ_j = ‖v_j‖ / Σ‖v‖、w_j = v_j / √σ_j。V = 0 のときは σ を保つ。
    """
    norms = np.linalg.norm(V, axis=0)
    total = float(np.sum(norms))
    if total <= 0:
        return replace(vars, W=np.zeros_like(V), sigma=np.asarray(fallback_sigma, dtype=float).copy())
    sigma = norms / total
    root = np.sqrt(sigma)
    W = np.where(root[None, :] > 0, V / np.where(root > 0, root, 1.0)[None, :], 0.0)
    return replace(vars, W=W.astype(np.complex128), sigma=sigma)


class BcdScaSolver(BaseSolver):
    """BCD-SCA による交互最適化"""

    name = 'bcd-sca'

    def __init__(self, config: ExperimentConfig, rate_mode: str = 'rsma'):
        super().__init__(config, rate_mode)
        if rate_mode != 'rsma':
            raise ValueError(f"BCD-SCA は RSMA のみ対応しています: {rate_mode}")
        self.solver_config = config.solver
        self.p_circuit = circuit_power_sat(self.scenario) + circuit_power_sim(self.scenario)
        self.p_harvest = harvest_power(self.scenario)
        self.eps_sbd = effective_eps_sbd(self.scenario)

    # ------------------------------------------------------------------
    # 共通の部品

    def _score(self, vars: DecisionVars, channels: ChannelSet) -> Tuple[float, float]:
        objective, constraints, _ = evaluate(vars, channels, self.scenario, self.rate_mode)
        return objective.value, constraints.max_violation

    def _accept(
        self,
        build: Callable[[List[np.ndarray]], DecisionVars],
        x_old: Sequence[np.ndarray],
        x_new: Sequence[np.ndarray],
        vars_old: DecisionVars,
        channels: ChannelSet,
    ) -> Tuple[DecisionVars, bool]:
        """
        真の目的関数で更新を受理判定する

        目的関数が悪化せず、最大違反が増えない点が見つかるまで更新幅を半分にする。
        """
        obj_old, viol_old = self._score(vars_old, channels)
        allowed = max(viol_old, self.scenario.feasibility_tol)
        step = 1.0
        for _ in range(_ACCEPT_HALVINGS + 1):
            x = [old + step * (new - old) for old, new in zip(x_old, x_new)]
            candidate = build(x)
            obj, viol = self._score(candidate, channels)
            if math.isfinite(obj) and obj <= obj_old + self.solver_config.descent_tol and viol <= allowed:
                return candidate, True
            step *= 0.5
        return vars_old, False

    def _rate_surrogate(self, s: torch.Tensor, gamma0: np.ndarray) -> torch.Tensor:
        B = self.scenario.B
        if self.solver_config.surrogate_mode == 'taylor':
            base = _rt(rate(gamma0, B))
            slope = _rt([log2_slope(float(g), B) for g in gamma0])
            return base + slope * (s - _rt(gamma0))
        return B * torch.log2(1.0 + torch.clamp(s, min=0.0) / B)

    def _sbd_rates(self, P_rx: torch.Tensor, eta: torch.Tensor, tau_BD: torch.Tensor, hr2: torch.Tensor) -> torch.Tensor:
        cfg = self.scenario
        backscatter = eta * hr2 * P_rx
        interference = torch.sum(backscatter) - backscatter
        gamma = backscatter / (interference + cfg.sigma2_SUE)
        return cfg.B * tau_BD / cfg.K * torch.log2(1.0 + cfg.K * gamma / cfg.B)

    def _penalized(
        self,
        vars: DecisionVars,
        R_c: torch.Tensor,
        R_p: torch.Tensor,
        t: torch.Tensor,
        p_sat: torch.Tensor,
        p_sim: torch.Tensor,
        P_rx: torch.Tensor,
        R_SR: torch.Tensor,
    ) -> torch.Tensor:
        """目的関数 + 二乗ペナルティ（ブロック 1/2 共通）"""
        cfg = self.scenario
        p_total = vars.theta_sat * p_sat + vars.theta_SIM * p_sim + self.p_circuit
        value = vars.alpha * p_total - vars.beta * (t + torch.sum(R_p) + torch.sum(R_SR))

        penalty = torch.sum(torch.relu(t - R_c) ** 2)
        penalty = penalty + (torch.relu(cfg.R_sum_th - t - torch.sum(R_p)) / max(cfg.R_sum_th, 1.0)) ** 2
        penalty = penalty + torch.relu(p_sim / cfg.P_SIM_max - 1.0) ** 2
        penalty = penalty + torch.relu(p_total / self.p_harvest - 1.0) ** 2
        penalty = penalty + torch.sum((torch.relu(cfg.R_SR_th - R_SR) / max(cfg.R_SR_th, 1.0)) ** 2)
        if self.eps_sbd > 0:
            harvested = cfg.Gamma * _rt(vars.tau_EH) * P_rx
            penalty = penalty + torch.sum(torch.relu(1.0 - harvested / self.eps_sbd) ** 2)
        return value + self.solver_config.penalty_weight * penalty

    @staticmethod
    def _rsma_denominators(
        amp: torch.Tensor, noise_coef: torch.Tensor, sigma_l: torch.Tensor, sigma2_U: float
    ) -> Tuple[torch.Tensor, torch.Tensor, torch.Tensor, torch.Tensor]:
        power = torch.abs(amp) ** 2
        private = power[:, 1:]
        L = private.shape[0]
        index = torch.arange(L)
        diag = private[index, index]
        total = torch.sum(private, dim=1)
        D_c = total + noise_coef * torch.sum(sigma_l) + sigma2_U
        D_p = total - diag + noise_coef * (torch.sum(sigma_l) - sigma_l) + sigma2_U
        return power[:, 0], diag, D_c, D_p

    def _surrogate_sinrs(self, lin_c, lin_p, D_c, D_p, expansion: _Expansion) -> Tuple[torch.Tensor, torch.Tensor]:
        """
        凹な SINR 代理 lin/D⁰ − y² D

        lin は |U|² の MM 接線の一次部分 2Re(U⁰* U)。展開点で真の SINR に一致し、
        それ以外では下界になる。
        """
        s_c = lin_c / _rt(expansion.D_c) - _rt(expansion.y_c ** 2) * D_c
        s_p = lin_p / _rt(expansion.D_p) - _rt(expansion.y_p ** 2) * D_p
        return s_c, s_p

    # ------------------------------------------------------------------
    # ブロック 1

    def solve_block1(self, vars: DecisionVars, channels: ChannelSet, surr: SurrogateState) -> DecisionVars:
        """
        プリコーダと電力分割の更新

        変数は実効プリコーダ v_j = √σ_j w_j と共通レートしきい値 t。
        実行可能集合 Σ‖v_j‖ ≤ √P_sat_max は閉形式で射影できる。

        Args:
            vars (DecisionVars): 現在の変数（ブロック 2, 3 は固定）
            channels (ChannelSet): チャネル
            surr (SurrogateState): 補助変数（展開点で更新される）

        Returns:
            DecisionVars: 更新後の変数
        """
        cfg = self.scenario
        expansion = _expand(vars, channels, cfg)
        surr.y_c, surr.y_p, surr.point = expansion.y_c, expansion.y_p, vars

        A = np.conj(expansion.users) @ expansion.T @ channels.F
        Hs = np.conj(channels.h_sbd) @ expansion.T @ channels.F
        TF = expansion.T @ channels.F
        V0 = vars.effective_precoder()
        common = mm_linearize(A, V0[:, 0].real, V0[:, 0].imag)
        private = mm_linearize(A, V0[:, 1:].T.real, V0[:, 1:].T.imag)

        A_t, Hs_t, TF_t = _ct(A), _ct(Hs), _ct(TF)
        ga_c, gb_c = _rt(common.grad_a), _rt(common.grad_b)
        ga_p, gb_p = _rt(private.grad_a), _rt(private.grad_b)
        noise_coef = _rt(expansion.noise_coef)
        sigma_l = _rt(vars.sigma[1:])
        hr2 = _rt(np.abs(channels.h_r) ** 2)
        eta, tau_BD = _rt(vars.eta), _rt(vars.tau_BD)
        p_sim_noise = _surface_noise(vars.surface, cfg.sigma2_SIM)
        gamma0_c = expansion.A_c / expansion.D_c
        gamma0_p = expansion.A_p / expansion.D_p

        def objective(params: List[torch.Tensor]) -> torch.Tensor:
            Vr, Vi, t = params
            V = torch.complex(Vr, Vi)
            _, _, D_c, D_p = self._rsma_denominators(A_t @ V, noise_coef, sigma_l, cfg.sigma2_Ul)
            lin_c = ga_c @ Vr[:, 0] + gb_c @ Vi[:, 0]
            lin_p = torch.sum(ga_p * Vr[:, 1:].T, dim=1) + torch.sum(gb_p * Vi[:, 1:].T, dim=1)
            s_c, s_p = self._surrogate_sinrs(lin_c, lin_p, D_c, D_p, expansion)
            P_rx = torch.sum(torch.abs(Hs_t @ V) ** 2, dim=1)
            p_sat = torch.sum(Vr ** 2 + Vi ** 2)
            p_sim = torch.sum(torch.abs(TF_t @ V) ** 2) + p_sim_noise
            return self._penalized(
                vars,
                self._rate_surrogate(s_c, gamma0_c),
                self._rate_surrogate(s_p, gamma0_p),
                t[0], p_sat, p_sim, P_rx,
                self._sbd_rates(P_rx, eta, tau_BD, hr2),
            )

        radius = math.sqrt(cfg.P_sat_max)

        def project(params: List[torch.Tensor]) -> List[torch.Tensor]:
            Vr, Vi = project_l21_ball(params[0], params[1], radius)
            return [Vr, Vi, torch.clamp(params[2], min=0.0)]

        result = projected_gradient(
            objective,
            [_rt(V0.real), _rt(V0.imag), _rt([surr.t])],
            project,
            max_steps=self.solver_config.inner_max_steps,
            tol=self.solver_config.inner_tol,
        )
        surr.inner_steps = result.steps
        self._note_inner(surr, 'block1', result.converged)
        surr.t = float(result.params[2][0])
        V_new = result.params[0].numpy() + 1j * result.params[1].numpy()

        def build(x: List[np.ndarray]) -> DecisionVars:
            V = _retract(x[0], vars, channels, cfg)
            candidate = _from_effective(vars, V, vars.sigma)
            return with_equal_common_split(candidate, channels, cfg)

        updated, accepted = self._accept(build, [V0], [V_new], vars, channels)
        logger.debug(f"ブロック 1: 内部反復 {result.steps} 回、受理={accepted}")
        return updated

    # ------------------------------------------------------------------
    # ブロック 2

    def solve_block2(self, vars: DecisionVars, channels: ChannelSet, surr: SurrogateState) -> DecisionVars:
        """
        表面パラメータの更新

        ASIM と Active RIS は層ごとに直交座標 (a, b) で解き、円盤
        a² + b² ≤ P_SIM_max へ射影する。BD-RIS はブロック利得と Cayley 種行列を
        真の目的関数の勾配で更新する。

        Returns:
            DecisionVars: 更新後の変数
        """
        if isinstance(vars.surface, BdRisState):
            return self._solve_bd_block(vars, channels, surr)

        total_steps = 0
        for q in range(vars.surface.Q):
            vars, steps = self._solve_layer(vars, channels, surr, q)
            total_steps += steps
        a, b = cartesian_from_polar(vars.surface.rho, vars.surface.theta)
        surr.a, surr.b = a, b
        surr.inner_steps = total_steps
        return vars

    @staticmethod
    def _layer_split(state: AsimState, H_layers: Sequence[np.ndarray], q: int) -> Tuple[np.ndarray, np.ndarray]:
        """T = after · diag(z_q) · before となる (after, before)"""
        identity = np.eye(state.M, dtype=np.complex128)
        if state.kind == SurfaceKind.ACTIVE_RIS:
            return identity, identity

        def diag(p: int) -> np.ndarray:
            return state.rho[p] * np.exp(1j * state.theta[p])

        before = identity
        for p in range(q):
            before = diag(p)[:, None] * (H_layers[p] @ before)
        before = H_layers[q] @ before
        after = identity
        for p in range(q + 1, state.Q):
            after = diag(p)[:, None] * (H_layers[p] @ after)
        return after, before

    def _solve_layer(self, vars: DecisionVars, channels: ChannelSet, surr: SurrogateState, q: int) -> Tuple[DecisionVars, int]:
        cfg = self.scenario
        state = vars.surface
        expansion = _expand(vars, channels, cfg)
        surr.y_c, surr.y_p, surr.point = expansion.y_c, expansion.y_p, vars

        after, before = self._layer_split(state, channels.H_layers, q)
        R = before @ channels.F @ vars.effective_precoder()
        Gp = np.conj(expansion.users) @ after
        Hp = np.conj(channels.h_sbd) @ after
        a0, b0 = cartesian_from_polar(state.rho[q], state.theta[q])

        # U_{k,j}(z) = Σ_m Gp[k,m] z_m R[m,j] の係数
        coef_c = Gp * R[:, 0][None, :]
        coef_p = Gp * R[:, 1:].T
        common = mm_linearize(coef_c, a0, b0)
        private = mm_linearize(coef_p, a0, b0)

        is_last = q == state.Q - 1
        other_noise = sum(
            float(np.sum(state.rho[p] ** 2)) for p in range(state.Q) if p != q
        ) * cfg.sigma2_SIM
        user_gain2 = _rt(np.abs(expansion.users) ** 2)

        Gp_t, Hp_t, R_t, after_t = _ct(Gp), _ct(Hp), _ct(R), _ct(after)
        ga_c, gb_c = _rt(common.grad_a), _rt(common.grad_b)
        ga_p, gb_p = _rt(private.grad_a), _rt(private.grad_b)
        fixed_noise = _rt(expansion.noise_coef)
        sigma_l = _rt(vars.sigma[1:])
        hr2 = _rt(np.abs(channels.h_r) ** 2)
        eta, tau_BD = _rt(vars.eta), _rt(vars.tau_BD)
        p_sat = torch.tensor(float(np.sum(np.abs(vars.effective_precoder()) ** 2)), dtype=_REAL)
        gamma0_c = expansion.A_c / expansion.D_c
        gamma0_p = expansion.A_p / expansion.D_p

        def objective(params: List[torch.Tensor]) -> torch.Tensor:
            a, b, t = params
            z = torch.complex(a, b)
            scaled = z[:, None] * R_t
            if is_last:
                noise_coef = cfg.sigma2_SIM * (user_gain2 @ (a ** 2 + b ** 2))
            else:
                noise_coef = fixed_noise
            _, _, D_c, D_p = self._rsma_denominators(Gp_t @ scaled, noise_coef, sigma_l, cfg.sigma2_Ul)
            lin_c = ga_c @ a + gb_c @ b
            lin_p = ga_p @ a + gb_p @ b
            s_c, s_p = self._surrogate_sinrs(lin_c, lin_p, D_c, D_p, expansion)
            P_rx = torch.sum(torch.abs(Hp_t @ scaled) ** 2, dim=1)
            p_sim = torch.sum(torch.abs(after_t @ scaled) ** 2) + other_noise
            p_sim = p_sim + cfg.sigma2_SIM * torch.sum(a ** 2 + b ** 2)
            return self._penalized(
                vars,
                self._rate_surrogate(s_c, gamma0_c),
                self._rate_surrogate(s_p, gamma0_p),
                t[0], p_sat, p_sim, P_rx,
                self._sbd_rates(P_rx, eta, tau_BD, hr2),
            )

        radius = math.sqrt(cfg.P_SIM_max)

        def project(params: List[torch.Tensor]) -> List[torch.Tensor]:
            a, b = project_disc(params[0], params[1], radius)
            return [a, b, torch.clamp(params[2], min=0.0)]

        result = projected_gradient(
            objective,
            [_rt(a0), _rt(b0), _rt([surr.t])],
            project,
            max_steps=self.solver_config.inner_max_steps,
            tol=self.solver_config.inner_tol,
        )
        self._note_inner(surr, 'block2', result.converged)
        surr.t = float(result.params[2][0])
        a_new, b_new = result.params[0].numpy(), result.params[1].numpy()

        def build(x: List[np.ndarray]) -> DecisionVars:
            rho_q, theta_q = polar_from_cartesian(x[0], x[1])
            rho = state.rho.copy()
            theta = state.theta.copy()
            rho[q] = np.minimum(rho_q, radius)
            theta[q] = theta_q
            candidate = replace(vars, surface=replace(state, rho=rho, theta=theta))
            return with_equal_common_split(candidate, channels, cfg)

        updated, accepted = self._accept(build, [a0, b0], [a_new, b_new], vars, channels)
        logger.debug(f"ブロック 2（層 {q + 1}）: 内部反復 {result.steps} 回、受理={accepted}")
        return updated, result.steps

    def _solve_bd_block(self, vars: DecisionVars, channels: ChannelSet, surr: SurrogateState) -> DecisionVars:
        cfg = self.scenario
        state = vars.surface
        G = channels.users('estimated')
        b = state.block
        V = vars.effective_precoder()
        FV_t = _ct(channels.F @ V)
        Gc_t = _ct(np.conj(G))
        Hc_t = _ct(np.conj(channels.h_sbd))
        sigma_l = _rt(vars.sigma[1:])
        hr2 = _rt(np.abs(channels.h_r) ** 2)
        eta, tau_BD = _rt(vars.eta), _rt(vars.tau_BD)
        p_sat = torch.tensor(float(np.sum(np.abs(V) ** 2)), dtype=_REAL)
        identity = torch.eye(b, dtype=_COMPLEX)

        def transfer(gains: torch.Tensor, seeds: torch.Tensor) -> torch.Tensor:
            X = 0.5 * (seeds + seeds.transpose(1, 2))
            Xc = torch.complex(X, torch.zeros_like(X))
            U = torch.linalg.solve(identity + 1j * Xc, identity - 1j * Xc)
            blocks = gains.to(_COMPLEX)[:, None, None] * U
            return torch.block_diag(*blocks)

        def objective(params: List[torch.Tensor]) -> torch.Tensor:
            gains, seeds, t = params
            T = transfer(gains, seeds)
            out = T @ FV_t
            noise_coef = cfg.sigma2_SIM * torch.sum(torch.abs(Gc_t @ T) ** 2, dim=1)
            A_c, A_p, D_c, D_p = self._rsma_denominators(Gc_t @ out, noise_coef, sigma_l, cfg.sigma2_Ul)
            R_c = cfg.B * torch.log2(1.0 + A_c / D_c / cfg.B)
            R_p = cfg.B * torch.log2(1.0 + A_p / D_p / cfg.B)
            P_rx = torch.sum(torch.abs(Hc_t @ out) ** 2, dim=1)
            p_sim = torch.sum(torch.abs(out) ** 2) + cfg.sigma2_SIM * torch.sum(torch.abs(T) ** 2)
            return self._penalized(vars, R_c, R_p, t[0], p_sat, p_sim, P_rx, self._sbd_rates(P_rx, eta, tau_BD, hr2))

        limit = math.sqrt(cfg.P_SIM_max)

        def project(params: List[torch.Tensor]) -> List[torch.Tensor]:
            seeds = 0.5 * (params[1] + params[1].transpose(1, 2))
            return [torch.clamp(params[0], 0.0, limit), seeds, torch.clamp(params[2], min=0.0)]

        result = projected_gradient(
            objective,
            [_rt(state.gains), _rt(state.seeds), _rt([surr.t])],
            project,
            max_steps=self.solver_config.inner_max_steps,
            tol=self.solver_config.inner_tol,
        )
        surr.inner_steps = result.steps
        self._note_inner(surr, 'block2', result.converged)
        surr.t = float(result.params[2][0])

        def build(x: List[np.ndarray]) -> DecisionVars:
            surface = replace(state, gains=np.clip(x[0], 0.0, limit), seeds=0.5 * (x[1] + np.transpose(x[1], (0, 2, 1))))
            return with_equal_common_split(replace(vars, surface=surface), channels, cfg)

        updated, accepted = self._accept(
            build,
            [state.gains, state.seeds],
            [result.params[0].numpy(), result.params[1].numpy()],
            vars,
            channels,
        )
        logger.debug(f"ブロック 2（BD-RIS）: 内部反復 {result.steps} 回、受理={accepted}")
        return updated

    # ------------------------------------------------------------------
    # ブロック 3

    def al_solve_block3(self, vars: DecisionVars, channels: ChannelSet, surr: SurrogateState) -> DecisionVars:
        """
        時間分割 (τ_EH, τ_BD) と反射係数 η の拡張ラグランジュ法

        等式 h_i = τ_EH,i + τ_BD,i − 1 = 0 を乗数 λ とペナルティ ρ で扱い、
        エネルギー収穫条件は τ_EH の下限として箱制約に含める。

        Returns:
            DecisionVars: 更新後の変数
        """
        cfg = self.scenario
        solver = self.solver_config
        P_rx_np = sbd_received_power(vars, channels)
        tau_min = np.where(
            P_rx_np > 0,
            self.eps_sbd / np.maximum(cfg.Gamma * P_rx_np, np.finfo(float).tiny),
            0.0 if self.eps_sbd <= 0 else 1.0,
        )
        tau_min = np.clip(tau_min, 0.0, 1.0)
        P_rx = _rt(P_rx_np)
        hr2 = _rt(np.abs(channels.h_r) ** 2)
        tau_min_t = _rt(tau_min)
        lam = np.asarray(surr.lambda_AL, dtype=float).copy()
        rho = solver.al_rho0
        surr.al_history = []

        def project(params: List[torch.Tensor]) -> List[torch.Tensor]:
            tau_EH = torch.maximum(torch.clamp(params[0], max=1.0), tau_min_t)
            return [tau_EH, torch.clamp(params[1], 0.0, 1.0), torch.clamp(params[2], 0.0, 1.0)]

        x = [_rt(vars.tau_EH), _rt(vars.tau_BD), _rt(vars.eta)]
        total_steps = 0
        for _ in range(solver.al_max_iter):
            lam_t, rho_now = _rt(lam), rho

            def lagrangian(params: List[torch.Tensor]) -> torch.Tensor:
                tau_EH, tau_BD, eta = params
                R_SR = self._sbd_rates(P_rx, eta, tau_BD, hr2)
                value = -vars.beta * torch.sum(R_SR)
                value = value + solver.penalty_weight * torch.sum(
                    (torch.relu(cfg.R_SR_th - R_SR) / max(cfg.R_SR_th, 1.0)) ** 2
                )
                h = tau_EH + tau_BD - 1.0
                return value + torch.sum(lam_t * h) + 0.5 * rho_now * torch.sum(h ** 2)

            result = projected_gradient(
                lagrangian, x, project,
                max_steps=solver.inner_max_steps, tol=solver.inner_tol,
            )
            total_steps += result.steps
            x = result.params
            h = (x[0] + x[1] - 1.0).numpy()
            residual = float(np.linalg.norm(h))
            surr.al_history.append(residual)
            if residual < solver.al_eps:
                break
            lam, rho = al_multiplier_update(lam, rho, h, solver.al_growth, solver.al_rho_cap)
            if rho >= solver.al_rho_cap and not surr.flags.get('penalty_cap'):
                surr.flags['penalty_cap'] = True
                logger.warning(f"拡張ラグランジュのペナルティが上限 {solver.al_rho_cap:g} に達しました")

        surr.lambda_AL, surr.rho_AL = lam, rho
        surr.inner_steps = total_steps

        tau_EH = np.clip(x[0].numpy(), tau_min, 1.0)
        target = [tau_EH, 1.0 - tau_EH, np.clip(x[2].numpy(), 0.0, 1.0)]

        def build(values: List[np.ndarray]) -> DecisionVars:
            tau = np.clip(values[0], 0.0, 1.0)
            return replace(vars, tau_EH=tau, tau_BD=1.0 - tau, eta=np.clip(values[2], 0.0, 1.0))

        updated, accepted = self._accept(
            build, [vars.tau_EH, vars.tau_BD, vars.eta], target, vars, channels
        )
        logger.debug(f"ブロック 3: AL 反復 {len(surr.al_history)} 回、受理={accepted}")
        return updated

    # ------------------------------------------------------------------

    def _note_inner(self, surr: SurrogateState, block: str, converged: bool) -> None:
        if not converged:
            surr.flags[f'{block}_inner_max_steps'] = True
            logger.debug(f"{block} の内部ソルバーが最大反復回数で停止しました")

    def run(self, vars0: DecisionVars, channels: ChannelSet, eps: Optional[float] = None, delta: Optional[float] = None) -> Tuple[DecisionVars, SolveTrace]:
        """
        ブロック 1〜3 を収束まで繰り返す

        停止条件は |Obj^(k) − Obj^(k−1)| < eps かつ ‖W^(k) − W^(k−1)‖_F < delta、
        または max_outer 回。

        Args:
            vars0 (DecisionVars): 初期値（project_box で単純制約に射影する）
            channels (ChannelSet): チャネル
            eps (Optional[float]): 目的関数変化のしきい値
            delta (Optional[float]): W 変化のしきい値

        Returns:
            Tuple[DecisionVars, SolveTrace]: 最終点と反復記録
        """
        solver = self.solver_config
        eps = solver.eps if eps is None else eps
        delta = solver.delta if delta is None else delta

        vars = with_equal_common_split(project_box(vars0, self.scenario), channels, self.scenario)
        previous, _ = self._score(vars, channels)
        trace = SolveTrace(initial_objective=previous)
        surr = surrogate_state(vars, channels, self.scenario, solver)

        for k in range(1, solver.max_outer + 1):
            started = time.perf_counter()
            W_prev = vars.W
            vars = self.solve_block1(vars, channels, surr)
            steps1 = surr.inner_steps
            vars = self.solve_block2(vars, channels, surr)
            steps2 = surr.inner_steps
            vars = self.al_solve_block3(vars, channels, surr)
            steps3 = surr.inner_steps

            objective, violation = self._score(vars, channels)
            elapsed = (time.perf_counter() - started) * 1000.0
            trace.rows.append({
                'iter': k,
                'objective': objective,
                'max_violation': violation,
                'block1_iters': steps1,
                'block2_iters': steps2,
                'block3_iters': steps3,
                'wall_ms': round(elapsed, 3) if solver.record_wall_time else '',
            })
            change = float(np.linalg.norm(vars.W - W_prev))
            logger.debug(f"外側反復 {k}: 目的関数 {objective:.6g}、最大違反 {violation:.3g}、ΔW {change:.3g}")
            if abs(objective - previous) < eps and change < delta:
                trace.converged = True
                break
            previous = objective
        else:
            trace.max_iterations_hit = True
            logger.warning(f"BCD-SCA が最大反復回数 {solver.max_outer} に達しました")

        trace_flags = {key: True for key in surr.flags}
        self.last_flags = dict(trace_flags, converged=trace.converged, max_iterations=trace.max_iterations_hit)
        logger.info(f"BCD-SCA 完了: {len(trace.rows)} 反復、目的関数 {trace.rows[-1]['objective']:.6g}")
        return vars, trace

    def solve(self, channels: ChannelSet, vars0: Optional[DecisionVars] = None) -> SolveResult:
        kind = self.scenario.surface
        vars0 = vars0 if vars0 is not None else initial_vars(channels, self.scenario, kind)
        vars, trace = self.run(vars0, channels)
        return SolveResult(vars=vars, metrics=self.metrics(vars, channels), rows=trace.to_rows(), flags=self.last_flags)


def al_multiplier_update(lam: np.ndarray, rho: float, h: np.ndarray, growth: float = 4.0, cap: float = 1e8) -> Tuple[np.ndarray, float]:
    """λ ← λ + ρ h、ρ ← min(α_AL ρ, cap)"""
    lam = np.asarray(lam, dtype=float) + rho * np.asarray(h, dtype=float)
    return lam, min(rho * growth, cap)
