//! Self-schedules, lost-opportunity-cost uplifts, and scenario settlement.
//!
//! A participant's LOC is the gap between the profit of its best
//! self-schedule at the published prices and the profit of the plan it was
//! actually dispatched to, both valued at its *bid-in* costs. Participant
//! surplus in the settlement record is valued at *true* costs. Keeping the
//! two cost bases apart is deliberate: uplifts are paid on bids, welfare is
//! measured on truth.

use crate::dispatch::RollingDispatch;
use crate::market::{BidParameter, EsrSpec, GeneratorSpec};
use crate::pricing::{PriceScheme, PriceSeries};
use crate::solver::{self, LpProblem, LpStatus};

/// Optimal response of one participant to a price series.
///
/// For storage, `p_dis`/`p_chg`/`soc` are the charge/discharge plan and its
/// SOC path, `psi` the SOC-dynamics duals, `omega_*` the SOC-bound duals.
/// For a generator, `p_dis` is the output plan and the storage-only fields
/// are empty.
#[derive(Debug, Clone)]
pub struct SelfSchedule {
    pub participant: String,
    pub p_dis: Vec<f64>,
    pub p_chg: Vec<f64>,
    pub soc: Vec<f64>,
    /// Maximum profit at the given prices and bid costs.
    pub profit: f64,
    pub psi: Vec<f64>,
    pub omega_lo: Vec<f64>,
    pub omega_hi: Vec<f64>,
    pub zeta_dis_lo: Vec<f64>,
    pub zeta_dis_hi: Vec<f64>,
    pub zeta_chg_lo: Vec<f64>,
    pub zeta_chg_hi: Vec<f64>,
    pub degenerate: bool,
}

/// Best self-schedule of a storage unit facing per-direction prices.
///
/// Maximizes discharge margin plus charge margin subject to SOC dynamics
/// anchored at the initial SOC, SOC bounds, and power caps. No ramp rows and
/// no terminal SOC requirement. Always feasible: the idle plan earns zero.
pub fn self_schedule_esr(
    prices_dis: &[f64],
    prices_chg: &[f64],
    esr: &EsrSpec,
    theta_dis: &[f64],
    theta_chg: &[f64],
) -> SelfSchedule {
    let t_max = prices_dis.len();
    assert_eq!(prices_chg.len(), t_max);
    // variables: p_dis[0..T], p_chg[0..T], e[0..T]
    let nv = 3 * t_max;
    let d = |t: usize| t;
    let c = |t: usize| t_max + t;
    let e = |t: usize| 2 * t_max + t;

    let mut objective = vec![0.0; nv];
    let mut lower = vec![0.0; nv];
    let mut upper = vec![solver::INF; nv];
    for t in 0..t_max {
        // minimize the negated profit
        objective[d(t)] = -(prices_dis[t] - theta_dis[t]);
        objective[c(t)] = -(theta_chg[t] - prices_chg[t]);
        upper[d(t)] = esr.discharge_cap;
        upper[c(t)] = esr.charge_cap;
        lower[e(t)] = esr.soc_min;
        upper[e(t)] = esr.soc_max;
    }
    let mut eq_rows = Vec::with_capacity(t_max);
    let mut eq_rhs = Vec::with_capacity(t_max);
    for t in 0..t_max {
        let mut row = vec![0.0; nv];
        row[c(t)] = esr.eff_charge;
        row[d(t)] = -1.0 / esr.eff_discharge;
        row[e(t)] = -1.0;
        let rhs = if t == 0 {
            -esr.soc_initial
        } else {
            row[e(t - 1)] = 1.0;
            0.0
        };
        eq_rows.push(row);
        eq_rhs.push(rhs);
    }
    let problem = LpProblem {
        num_vars: nv,
        objective,
        eq: solver::Constraints {
            rows: eq_rows,
            rhs: eq_rhs,
        },
        ub: solver::Constraints {
            rows: vec![],
            rhs: vec![],
        },
        lower,
        upper,
    };
    let sol = solver::solve_lp(&problem).expect("well-formed self-schedule LP");
    assert_eq!(sol.status, LpStatus::Optimal, "self-schedule LP is always feasible and bounded");
    SelfSchedule {
        participant: esr.name.clone(),
        p_dis: (0..t_max).map(|t| sol.x[d(t)]).collect(),
        p_chg: (0..t_max).map(|t| sol.x[c(t)]).collect(),
        soc: (0..t_max).map(|t| sol.x[e(t)]).collect(),
        profit: -sol.objective_value,
        psi: sol.y_eq.clone(),
        omega_lo: (0..t_max).map(|t| sol.z_lower[e(t)]).collect(),
        omega_hi: (0..t_max).map(|t| sol.z_upper[e(t)]).collect(),
        zeta_dis_lo: (0..t_max).map(|t| sol.z_lower[d(t)]).collect(),
        zeta_dis_hi: (0..t_max).map(|t| sol.z_upper[d(t)]).collect(),
        zeta_chg_lo: (0..t_max).map(|t| sol.z_lower[c(t)]).collect(),
        zeta_chg_hi: (0..t_max).map(|t| sol.z_upper[c(t)]).collect(),
        degenerate: sol.degenerate,
    }
}

/// Best self-schedule of a generator: capacity and ramp constraints anchored
/// at its initial output, mirroring the dispatch-side boundary rows.
pub fn self_schedule_generator(
    prices: &[f64],
    gen: &GeneratorSpec,
    theta: &[f64],
) -> SelfSchedule {
    let t_max = prices.len();
    let nv = t_max;
    let objective: Vec<f64> = (0..t_max).map(|t| -(prices[t] - theta[t])).collect();
    let lower = vec![gen.capacity_min; nv];
    let upper = vec![gen.capacity_max; nv];
    let mut ub_rows = Vec::new();
    let mut ub_rhs = Vec::new();
    let mut up = vec![0.0; nv];
    up[0] = 1.0;
    ub_rows.push(up);
    ub_rhs.push(gen.ramp_up + gen.initial_output);
    let mut dn = vec![0.0; nv];
    dn[0] = -1.0;
    ub_rows.push(dn);
    ub_rhs.push(gen.ramp_down - gen.initial_output);
    for t in 0..t_max.saturating_sub(1) {
        let mut up = vec![0.0; nv];
        up[t + 1] = 1.0;
        up[t] = -1.0;
        ub_rows.push(up);
        ub_rhs.push(gen.ramp_up);
        let mut dn = vec![0.0; nv];
        dn[t] = 1.0;
        dn[t + 1] = -1.0;
        ub_rows.push(dn);
        ub_rhs.push(gen.ramp_down);
    }
    let problem = LpProblem {
        num_vars: nv,
        objective,
        eq: solver::Constraints {
            rows: vec![],
            rhs: vec![],
        },
        ub: solver::Constraints {
            rows: ub_rows,
            rhs: ub_rhs,
        },
        lower,
        upper,
    };
    let sol = solver::solve_lp(&problem).expect("well-formed self-schedule LP");
    assert_eq!(sol.status, LpStatus::Optimal);
    SelfSchedule {
        participant: gen.name.clone(),
        p_dis: sol.x.clone(),
        p_chg: vec![],
        soc: vec![],
        profit: -sol.objective_value,
        psi: vec![],
        omega_lo: vec![],
        omega_hi: vec![],
        zeta_dis_lo: sol.z_lower.clone(),
        zeta_dis_hi: sol.z_upper.clone(),
        zeta_chg_lo: vec![],
        zeta_chg_hi: vec![],
        degenerate: sol.degenerate,
    }
}

/// A dispatched participant, by kind and index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParticipantRef {
    Generator(usize),
    Esr(usize),
}

/// Bid-cost profit of the dispatched plan for one participant.
fn dispatched_profit(
    prices: &PriceSeries,
    rolling: &RollingDispatch,
    who: ParticipantRef,
    bids: &BidParameter,
) -> f64 {
    match who {
        ParticipantRef::Generator(n) => (0..rolling.horizon())
            .map(|t| (prices.gen[n][t] - bids.gen[n][t]) * rolling.g_gen[n][t])
            .sum(),
        ParticipantRef::Esr(i) => (0..rolling.horizon())
            .map(|t| {
                (prices.esr_discharge[i][t] - bids.esr_discharge[i][t]) * rolling.g_dis[i][t]
                    + (bids.esr_charge[i][t] - prices.esr_charge[i][t]) * rolling.g_chg[i][t]
            })
            .sum(),
    }
}

/// Lost opportunity cost: best self-schedule profit minus dispatched-plan
/// profit, both at bid-in costs. Nonnegative up to solver tolerance, since
/// the dispatched plan is itself feasible for the self-schedule.
pub fn compute_loc(
    prices: &PriceSeries,
    rolling: &RollingDispatch,
    who: ParticipantRef,
    generators: &[GeneratorSpec],
    esrs: &[EsrSpec],
    bids: &BidParameter,
) -> f64 {
    let q = match who {
        ParticipantRef::Generator(n) => {
            self_schedule_generator(&prices.gen[n], &generators[n], &bids.gen[n]).profit
        }
        ParticipantRef::Esr(i) => self_schedule_esr(
            &prices.esr_discharge[i],
            &prices.esr_charge[i],
            &esrs[i],
            &bids.esr_discharge[i],
            &bids.esr_charge[i],
        )
        .profit,
    };
    q - dispatched_profit(prices, rolling, who, bids)
}

#[derive(Debug, Clone)]
pub struct ParticipantSettlement {
    pub name: String,
    /// Net energy revenue at settled prices (charging payments subtracted).
    pub revenue: f64,
    /// Net expenditure at true marginal costs.
    pub true_cost: f64,
    /// revenue - true_cost.
    pub surplus: f64,
    pub loc: f64,
}

/// Full settlement of one scenario under one price series.
#[derive(Debug, Clone)]
pub struct SettlementRecord {
    pub scheme: PriceScheme,
    pub participants: Vec<ParticipantSettlement>,
    /// Consumer energy payment before any rebate.
    pub consumer_energy_payment: f64,
    pub total_loc: f64,
    /// Operator position: consumer payment minus participant revenue minus
    /// uplifts.
    pub merchandising_surplus: f64,
    /// Consumer payment after the lump-sum rebate of the operator position.
    pub consumer_payment_rebated: f64,
}

/// Settle a scenario: participant surpluses at true costs, LOC uplifts at bid
/// costs, operator merchandising surplus, and the rebated consumer payment.
pub fn settle(
    prices: &PriceSeries,
    rolling: &RollingDispatch,
    generators: &[GeneratorSpec],
    esrs: &[EsrSpec],
    bids: &BidParameter,
) -> SettlementRecord {
    let t_max = rolling.horizon();
    let mut participants = Vec::with_capacity(generators.len() + esrs.len());
    for (n, gen) in generators.iter().enumerate() {
        let revenue: f64 = (0..t_max)
            .map(|t| prices.gen[n][t] * rolling.g_gen[n][t])
            .sum();
        let true_cost: f64 = (0..t_max)
            .map(|t| gen.true_cost * rolling.g_gen[n][t])
            .sum();
        let loc = compute_loc(
            prices,
            rolling,
            ParticipantRef::Generator(n),
            generators,
            esrs,
            bids,
        );
        participants.push(ParticipantSettlement {
            name: gen.name.clone(),
            revenue,
            true_cost,
            surplus: revenue - true_cost,
            loc,
        });
    }
    for (i, esr) in esrs.iter().enumerate() {
        let revenue: f64 = (0..t_max)
            .map(|t| {
                prices.esr_discharge[i][t] * rolling.g_dis[i][t]
                    - prices.esr_charge[i][t] * rolling.g_chg[i][t]
            })
            .sum();
        let true_cost: f64 = (0..t_max)
            .map(|t| {
                esr.true_discharge_cost * rolling.g_dis[i][t]
                    - esr.true_charge_cost * rolling.g_chg[i][t]
            })
            .sum();
        let loc = compute_loc(
            prices,
            rolling,
            ParticipantRef::Esr(i),
            generators,
            esrs,
            bids,
        );
        participants.push(ParticipantSettlement {
            name: esr.name.clone(),
            revenue,
            true_cost,
            surplus: revenue - true_cost,
            loc,
        });
    }
    let consumer_energy_payment: f64 = (0..t_max)
        .map(|t| prices.demand[t] * rolling.demand[t])
        .sum();
    let total_loc: f64 = participants.iter().map(|p| p.loc).sum();
    let paid_out: f64 = participants.iter().map(|p| p.revenue).sum();
    let merchandising_surplus = consumer_energy_payment - paid_out - total_loc;
    SettlementRecord {
        scheme: prices.scheme,
        participants,
        consumer_energy_payment,
        total_loc,
        merchandising_surplus,
        consumer_payment_rebated: consumer_energy_payment - merchandising_surplus,
    }
}
