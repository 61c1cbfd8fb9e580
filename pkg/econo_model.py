"""Relay deployment schedule, monthly cash flow and return on investment of a D2D neo-operator.

Months are numbered from 1, the first deployment month; CF(0) is zero.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from config import ECONOMICS_CONFIG, MONTHS_PER_YEAR, TUNING_TOLERANCE
from enums import AdoptionCurve, OpexStart, RemainderPolicy
from errors import ConfigError
from relay_planner import RelayPlan

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AdoptionParams:
    """User density curve lambda(t), zero until the commercial launch"""

    curve: AdoptionCurve = AdoptionCurve.LOGISTIC_SATURATING
    scale: float = ECONOMICS_CONFIG['adoption_scale']
    early_cap: float = ECONOMICS_CONFIG['adoption_early_cap']
    early_spread: float = ECONOMICS_CONFIG['adoption_early_spread']
    early_rate: float = ECONOMICS_CONFIG['adoption_early_rate']
    onset_lag: float = ECONOMICS_CONFIG['adoption_onset_lag']
    late_cap: float = ECONOMICS_CONFIG['adoption_late_cap']
    late_tau: float = ECONOMICS_CONFIG['adoption_late_tau']
    slope: float = ECONOMICS_CONFIG['adoption_slope']
    cap: float = ECONOMICS_CONFIG['adoption_cap']


@dataclass(frozen=True)
class CostScenario:
    c_capex: float = ECONOMICS_CONFIG['c_capex']
    eta: float = ECONOMICS_CONFIG['eta']
    g_revenue: float = ECONOMICS_CONFIG['g_revenue']
    t_dep: int = ECONOMICS_CONFIG['t_dep']
    t_launch: int = ECONOMICS_CONFIG['t_launch']
    t_critical: int = ECONOMICS_CONFIG['t_critical']
    p_min: float = ECONOMICS_CONFIG['p_min']
    p_max: float = ECONOMICS_CONFIG['p_max']
    gamma: float = ECONOMICS_CONFIG['gamma']
    area: float = ECONOMICS_CONFIG['area_km2']
    horizon: int = ECONOMICS_CONFIG['horizon']
    adoption: AdoptionParams = field(default_factory=AdoptionParams)
    remainder_policy: RemainderPolicy = RemainderPolicy.FINAL_MONTH
    opex_start: OpexStart = OpexStart.PURCHASE_MONTH

    def __post_init__(self) -> None:
        problems = self.problems()
        if problems:
            raise ConfigError("invalid cost scenario", problems=problems)

    def problems(self) -> list[str]:
        found = []
        if not 0 <= self.p_min <= self.p_max <= 1:
            found.append("p_min ≤ p_max (both in [0, 1])")
        if not 0 < self.t_launch < self.t_critical:
            found.append("0 < t_launch < t_critical")
        if not self.t_dep > self.t_critical:
            found.append("t_dep > t_critical")
        if not self.horizon >= self.t_dep:
            found.append("horizon ≥ t_dep")
        for name in ('c_capex', 'eta', 'g_revenue'):
            if getattr(self, name) < 0:
                found.append(f"{name} ≥ 0")
        if not (self.gamma > 0 and self.area > 0):
            found.append("gamma > 0 and area_km2 > 0")
        return found

    @property
    def monthly_opex_per_relay(self) -> float:
        return self.eta * self.c_capex / MONTHS_PER_YEAR


def user_density(t, scenario: CostScenario):
    """lambda(t) in users per km; nondecreasing, zero up to the commercial launch"""
    params = scenario.adoption
    t_arr = np.asarray(t, dtype=float)
    if params.curve is AdoptionCurve.LINEAR_RAMP:
        values = np.minimum(params.cap, params.slope * (t_arr - scenario.t_launch))
    else:
        since = t_arr - (scenario.t_launch + params.onset_lag)
        early = params.early_cap / (1.0 + params.early_spread * np.exp(-params.early_rate * since))
        late = params.late_cap * (1.0 - np.exp(-since / params.late_tau))
        values = params.scale * (early + late)
    values = np.where(t_arr <= scenario.t_launch, 0.0, values)
    return float(values) if np.ndim(values) == 0 else values


def asymptotic_user_density(scenario: CostScenario) -> float:
    params = scenario.adoption
    if params.curve is AdoptionCurve.LINEAR_RAMP:
        return params.cap
    return params.scale * (params.early_cap + params.late_cap)


def _fleet_target(proportion: float, scenario: CostScenario) -> int:
    """Mean relay count p gamma^2 A / 2, rounded to a whole relay"""
    exact = proportion * scenario.gamma ** 2 * scenario.area / 2.0
    rounded = int(round(exact))
    if abs(exact - rounded) > 1e-9:
        logger.warning("fleet target %.4f relays rounded to %d", exact, rounded)
    return rounded


def _spread(total: int, months: int, policy: RemainderPolicy) -> np.ndarray:
    """Equal monthly purchases; the remainder is bought in the last month or dropped"""
    base = total // months
    purchases = np.full(months, base, dtype=np.int64)
    if policy is RemainderPolicy.FINAL_MONTH:
        purchases[-1] += total - base * months
    return purchases


@dataclass(frozen=True, eq=False)
class DeploymentSchedule:
    """Per-month purchases N_B(t) and end-of-month stock N(t), index 0 is month 1"""

    purchases: np.ndarray
    stock: np.ndarray

    @property
    def months(self) -> np.ndarray:
        return np.arange(1, len(self.purchases) + 1)

    def purchased(self, t: int) -> int:
        return int(self.purchases[t - 1])

    def stock_at(self, t: int) -> int:
        return int(self.stock[t - 1]) if t >= 1 else 0


def deployment_schedule(scenario: CostScenario) -> DeploymentSchedule:
    """Two deployment phases, then whole-fleet replacement every depreciation period"""
    horizon = scenario.horizon
    policy = scenario.remainder_policy
    first_fleet = _fleet_target(scenario.p_min, scenario)
    full_fleet = _fleet_target(scenario.p_max, scenario)

    new_relays = np.zeros(horizon, dtype=np.int64)
    new_relays[:scenario.t_launch] = _spread(first_fleet, scenario.t_launch, policy)
    new_relays[scenario.t_launch:scenario.t_critical] = _spread(
        full_fleet - first_fleet, scenario.t_critical - scenario.t_launch, policy)
    stock = np.cumsum(new_relays)

    # Replacements are pure CAPEX: N_B grows, the stock does not
    purchases = new_relays.copy()
    deployed = int(stock[scenario.t_critical - 1])
    replacement = _spread(deployed, scenario.t_dep, policy)
    start = scenario.t_dep  # month t_dep + 1
    while start < horizon:
        block = replacement[:horizon - start]
        purchases[start:start + len(block)] += block
        start += scenario.t_dep
    return DeploymentSchedule(purchases=purchases, stock=stock)


def _opex_stock(t: int, schedule: DeploymentSchedule, scenario: CostScenario) -> int:
    if scenario.opex_start is OpexStart.NEXT_MONTH:
        return schedule.stock_at(t - 1)
    return schedule.stock_at(t)


def cash_flow(t: int, scenario: CostScenario, schedule: DeploymentSchedule) -> float:
    """CF(t) = G lambda(t) gamma A - N_B(t) c_CAPEX - N(t) eta c_CAPEX / 12"""
    if t == 0:
        return 0.0
    revenue = scenario.g_revenue * user_density(t, scenario) * scenario.gamma * scenario.area
    capex = schedule.purchased(t) * scenario.c_capex
    opex = _opex_stock(t, schedule, scenario) * scenario.monthly_opex_per_relay
    return revenue - capex - opex


@dataclass(frozen=True, eq=False)
class CashFlowSeries:
    months: np.ndarray
    purchases: np.ndarray
    stock: np.ndarray
    lam: np.ndarray
    users: np.ndarray
    revenue: np.ndarray
    capex: np.ndarray
    opex: np.ndarray
    cf: np.ndarray
    cr: np.ndarray
    roi_month: int | None

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            'month': self.months,
            'N_B': self.purchases,
            'N': self.stock,
            'lambda': self.lam,
            'users': self.users,
            'revenue': self.revenue,
            'capex': self.capex,
            'opex': self.opex,
            'cf': self.cf,
            'cr': self.cr,
        })

    def summary(self) -> str:
        return f"roi_month={self.roi_month if self.roi_month is not None else 'never'}"


def cumulated_revenue(scenario: CostScenario) -> CashFlowSeries:
    """Monthly series of CF and CR(t) = CR(t - 1) + CF(t), with the ROI month"""
    schedule = deployment_schedule(scenario)
    months = schedule.months
    lam = user_density(months, scenario)
    users = lam * scenario.gamma * scenario.area
    revenue = scenario.g_revenue * users
    capex = schedule.purchases * scenario.c_capex
    opex_stock = np.array([_opex_stock(int(t), schedule, scenario) for t in months])
    opex = opex_stock * scenario.monthly_opex_per_relay

    cf = np.array([cash_flow(int(t), scenario, schedule) for t in months])
    cr = np.empty_like(cf)
    running = 0.0
    roi_month = None
    for i, flow in enumerate(cf):
        running = running + flow
        cr[i] = running
        if roi_month is None and running > 0:
            roi_month = int(months[i])

    if roi_month is None:
        logger.info("no return on investment within %d months", scenario.horizon)
    return CashFlowSeries(months=months, purchases=schedule.purchases, stock=schedule.stock,
                          lam=lam, users=users, revenue=revenue, capex=capex, opex=opex,
                          cf=cf, cr=cr, roi_month=roi_month)


def cash_flow_regimes(series: CashFlowSeries, scenario: CostScenario) -> dict[str, float]:
    """Jumps of CF entering the month after launch, critical time and replacement start"""
    jumps = {}
    for name, month in (('launch', scenario.t_launch), ('critical', scenario.t_critical),
                        ('replacement', scenario.t_dep)):
        if month + 1 <= len(series.cf):
            jumps[name] = float(series.cf[month] - series.cf[month - 1])
    return jumps


@dataclass(frozen=True)
class TuningReport:
    lambda_critical: float
    p_max: float
    p_c: float
    gap: float
    flagged: bool

    def summary(self) -> str:
        status = "FLAGGED" if self.flagged else "ok"
        return (f"tuning {status}: p_max={self.p_max:.4g} p_c={self.p_c:.4g} "
                f"at lambda(T_CRITICAL)={self.lambda_critical:.4g} gap={self.gap:.4g}")


def tuning_check(scenario: CostScenario, relay_plan: RelayPlan,
                 tolerance: float = TUNING_TOLERANCE) -> TuningReport:
    """Compare p_max with the relay proportion needed once all relays are deployed"""
    lambda_critical = user_density(scenario.t_critical, scenario)
    if not math.isclose(relay_plan.lam, lambda_critical, rel_tol=1e-6, abs_tol=1e-6):
        logger.warning("relay plan at lambda=%.4g, expected lambda(T_CRITICAL)=%.4g",
                       relay_plan.lam, lambda_critical)
    gap = abs(scenario.p_max - relay_plan.p_c_hat)
    return TuningReport(lambda_critical=lambda_critical, p_max=scenario.p_max,
                        p_c=relay_plan.p_c_hat, gap=gap, flagged=gap > tolerance)
