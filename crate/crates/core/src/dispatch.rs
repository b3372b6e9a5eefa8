//! Rolling-window economic dispatch.
//!
//! Each interval `t` solves a look-ahead LP over `t .. t+W-1` (truncated at
//! the horizon end), binds only the first interval, and threads generator
//! output and storage state of charge into the next roll. Dual variables of
//! every window are retained: the binding-interval balance dual is the LMP,
//! and the SOC / ramping duals feed the discriminative TLMP components.

use crate::market::{BidParameter, EsrSpec, GeneratorSpec, MarketConfig};
use crate::solver::{self, LpProblem, LpStatus};
use thiserror::Error;

/// Tolerance for the charge/discharge complementarity check.
pub const COMPLEMENTARITY_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum DispatchError {
    #[error("window at interval {t} is infeasible: demand unservable under ramp/capacity limits")]
    InfeasibleWindow { t: usize },
    #[error("window at interval {t} is unbounded; check bid signs")]
    UnboundedWindow { t: usize },
    #[error("ESR {esr} charges and discharges simultaneously at interval {t} (product {value:.3e})")]
    ComplementarityViolated { esr: usize, t: usize, value: f64 },
    #[error(transparent)]
    Solver(#[from] solver::LpError),
}

/// Prior state threaded between rolls: binding generator output and realized
/// SOC from the previous interval.
#[derive(Debug, Clone)]
pub struct PriorState {
    pub gen_output: Vec<f64>,
    pub soc: Vec<f64>,
}

impl PriorState {
    pub fn initial(generators: &[GeneratorSpec], esrs: &[EsrSpec]) -> Self {
        PriorState {
            gen_output: generators.iter().map(|g| g.initial_output).collect(),
            soc: esrs.iter().map(|e| e.soc_initial).collect(),
        }
    }
}

/// Variable indexing for one window LP: all generator outputs, then ESR
/// discharge, ESR charge, then SOC levels, each participant-major.
#[derive(Debug, Clone, Copy)]
pub struct WindowLayout {
    pub n_gen: usize,
    pub n_esr: usize,
    pub len: usize,
}

impl WindowLayout {
    pub fn num_vars(&self) -> usize {
        (self.n_gen + 3 * self.n_esr) * self.len
    }
    pub fn g(&self, n: usize, tau: usize) -> usize {
        n * self.len + tau
    }
    pub fn d(&self, i: usize, tau: usize) -> usize {
        (self.n_gen + i) * self.len + tau
    }
    pub fn c(&self, i: usize, tau: usize) -> usize {
        (self.n_gen + self.n_esr + i) * self.len + tau
    }
    pub fn e(&self, i: usize, tau: usize) -> usize {
        (self.n_gen + 2 * self.n_esr + i) * self.len + tau
    }
}

/// A window LP bundled with the indexing needed to read its solution back.
#[derive(Debug, Clone)]
pub struct WindowLp {
    pub problem: LpProblem,
    pub layout: WindowLayout,
    pub start: usize,
}

/// Primal dispatch and dual variables of one solved window.
///
/// Matrices are participant-major over the window offsets `0..len`. Ramp
/// duals `mu_up`/`mu_dn` at offset `tau` belong to the constraint between
/// `tau` and `tau+1` (so they have `len-1` columns); `mu_up_prev`/`mu_dn_prev`
/// are the boundary rows against the previous binding output.
#[derive(Debug, Clone)]
pub struct WindowSolution {
    pub start: usize,
    pub len: usize,
    pub objective: f64,
    pub g_gen: Vec<Vec<f64>>,
    pub g_dis: Vec<Vec<f64>>,
    pub g_chg: Vec<Vec<f64>>,
    pub soc: Vec<Vec<f64>>,
    pub lambda: Vec<f64>,
    pub phi: Vec<Vec<f64>>,
    pub mu_up: Vec<Vec<f64>>,
    pub mu_dn: Vec<Vec<f64>>,
    pub mu_up_prev: Vec<f64>,
    pub mu_dn_prev: Vec<f64>,
    /// SOC bound duals (lower, upper).
    pub delta_lo: Vec<Vec<f64>>,
    pub delta_hi: Vec<Vec<f64>>,
    /// Power bound duals (lower, upper) for generators, discharge, charge.
    pub rho_gen_lo: Vec<Vec<f64>>,
    pub rho_gen_hi: Vec<Vec<f64>>,
    pub rho_dis_lo: Vec<Vec<f64>>,
    pub rho_dis_hi: Vec<Vec<f64>>,
    pub rho_chg_lo: Vec<Vec<f64>>,
    pub rho_chg_hi: Vec<Vec<f64>>,
    pub degenerate: bool,
    pub duals_nonunique: bool,
}

impl WindowSolution {
    /// Ramping dual difference Δμ at window offset `tau` for generator `n`;
    /// offsets at or past the last in-window ramp row contribute zero.
    pub fn delta_mu(&self, n: usize, tau: usize) -> f64 {
        if tau + 1 < self.len {
            self.mu_up[n][tau] - self.mu_dn[n][tau]
        } else {
            0.0
        }
    }
    /// Boundary Δμ for generator `n` (constraint against prior output).
    pub fn delta_mu_prev(&self, n: usize) -> f64 {
        self.mu_up_prev[n] - self.mu_dn_prev[n]
    }
}

/// Horizon-long binding dispatch plus every window solved along the way.
#[derive(Debug, Clone)]
pub struct RollingDispatch {
    pub g_gen: Vec<Vec<f64>>,
    pub g_dis: Vec<Vec<f64>>,
    pub g_chg: Vec<Vec<f64>>,
    pub soc: Vec<Vec<f64>>,
    pub demand: Vec<f64>,
    pub windows: Vec<WindowSolution>,
}

impl RollingDispatch {
    pub fn horizon(&self) -> usize {
        self.demand.len()
    }
    /// True if any window's LP basis was degenerate.
    pub fn any_degenerate(&self) -> bool {
        self.windows.iter().any(|w| w.degenerate)
    }
    /// True if any window's duals (hence prices) may not be unique.
    pub fn any_duals_nonunique(&self) -> bool {
        self.windows.iter().any(|w| w.duals_nonunique)
    }
}

/// Assemble the look-ahead LP for interval `start` given forecasts over the
/// (possibly truncated) window. The objective prices generation and discharge
/// at their bids and credits charging at its bid; the first-interval SOC and
/// ramp rows are anchored at the prior state.
pub fn build_window(
    config: &MarketConfig,
    generators: &[GeneratorSpec],
    esrs: &[EsrSpec],
    bids: &BidParameter,
    start: usize,
    prior: &PriorState,
    forecasts: &[f64],
) -> WindowLp {
    let len = forecasts.len();
    assert!(len >= 1 && start + len <= config.horizon);
    let layout = WindowLayout {
        n_gen: generators.len(),
        n_esr: esrs.len(),
        len,
    };
    let nv = layout.num_vars();

    let mut objective = vec![0.0; nv];
    let mut lower = vec![0.0; nv];
    let mut upper = vec![solver::INF; nv];
    for (n, gen) in generators.iter().enumerate() {
        for tau in 0..len {
            let j = layout.g(n, tau);
            objective[j] = bids.gen[n][start + tau];
            lower[j] = gen.capacity_min;
            upper[j] = gen.capacity_max;
        }
    }
    for (i, esr) in esrs.iter().enumerate() {
        for tau in 0..len {
            let jd = layout.d(i, tau);
            let jc = layout.c(i, tau);
            let je = layout.e(i, tau);
            objective[jd] = bids.esr_discharge[i][start + tau];
            objective[jc] = -bids.esr_charge[i][start + tau];
            upper[jd] = esr.discharge_cap;
            upper[jc] = esr.charge_cap;
            lower[je] = esr.soc_min;
            upper[je] = esr.soc_max;
        }
    }

    // Equality rows: balance per offset, then SOC recursion per ESR/offset.
    let mut eq_rows = Vec::with_capacity(len + layout.n_esr * len);
    let mut eq_rhs = Vec::with_capacity(eq_rows.capacity());
    for (tau, &d_hat) in forecasts.iter().enumerate() {
        let mut row = vec![0.0; nv];
        for n in 0..layout.n_gen {
            row[layout.g(n, tau)] = 1.0;
        }
        for i in 0..layout.n_esr {
            row[layout.d(i, tau)] = 1.0;
            row[layout.c(i, tau)] = -1.0;
        }
        eq_rows.push(row);
        eq_rhs.push(d_hat);
    }
    // Row form: E_{tau-1} + xi_c*g_c - g_d/xi_d - E_tau = 0 (prior SOC folded
    // into the rhs at tau = 0); the dual of this row is the SOC price.
    for (i, esr) in esrs.iter().enumerate() {
        for tau in 0..len {
            let mut row = vec![0.0; nv];
            row[layout.c(i, tau)] = esr.eff_charge;
            row[layout.d(i, tau)] = -1.0 / esr.eff_discharge;
            row[layout.e(i, tau)] = -1.0;
            let rhs = if tau == 0 {
                -prior.soc[i]
            } else {
                row[layout.e(i, tau - 1)] = 1.0;
                0.0
            };
            eq_rows.push(row);
            eq_rhs.push(rhs);
        }
    }

    // Inequality rows per generator: boundary ramp pair, then the in-window
    // pairs between consecutive offsets.
    let mut ub_rows = Vec::new();
    let mut ub_rhs = Vec::new();
    for (n, gen) in generators.iter().enumerate() {
        let mut up = vec![0.0; nv];
        up[layout.g(n, 0)] = 1.0;
        ub_rows.push(up);
        ub_rhs.push(gen.ramp_up + prior.gen_output[n]);
        let mut dn = vec![0.0; nv];
        dn[layout.g(n, 0)] = -1.0;
        ub_rows.push(dn);
        ub_rhs.push(gen.ramp_down - prior.gen_output[n]);
        for tau in 0..len.saturating_sub(1) {
            let mut up = vec![0.0; nv];
            up[layout.g(n, tau + 1)] = 1.0;
            up[layout.g(n, tau)] = -1.0;
            ub_rows.push(up);
            ub_rhs.push(gen.ramp_up);
            let mut dn = vec![0.0; nv];
            dn[layout.g(n, tau)] = 1.0;
            dn[layout.g(n, tau + 1)] = -1.0;
            ub_rows.push(dn);
            ub_rhs.push(gen.ramp_down);
        }
    }

    WindowLp {
        problem: LpProblem {
            num_vars: nv,
            objective,
            eq: solver::Constraints {
                rows: eq_rows,
                rhs: eq_rhs,
            },
            ub: solver::Constraints {
                rows: ub_rows,
                rhs: ub_rhs,
            },
            lower,
            upper,
        },
        layout,
        start,
    }
}

fn unpack_matrix(x: &[f64], len: usize, count: usize, idx: impl Fn(usize, usize) -> usize) -> Vec<Vec<f64>> {
    (0..count)
        .map(|k| (0..len).map(|tau| x[idx(k, tau)]).collect())
        .collect()
}

pub fn solve_window(window: &WindowLp) -> Result<WindowSolution, DispatchError> {
    let sol = solver::solve_lp(&window.problem)?;
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => return Err(DispatchError::InfeasibleWindow { t: window.start }),
        LpStatus::Unbounded => return Err(DispatchError::UnboundedWindow { t: window.start }),
    }
    let lay = window.layout;
    let len = lay.len;
    let g_gen = unpack_matrix(&sol.x, len, lay.n_gen, |n, tau| lay.g(n, tau));
    let g_dis = unpack_matrix(&sol.x, len, lay.n_esr, |i, tau| lay.d(i, tau));
    let g_chg = unpack_matrix(&sol.x, len, lay.n_esr, |i, tau| lay.c(i, tau));
    let soc = unpack_matrix(&sol.x, len, lay.n_esr, |i, tau| lay.e(i, tau));
    for i in 0..lay.n_esr {
        for tau in 0..len {
            let prod = g_dis[i][tau] * g_chg[i][tau];
            if prod > COMPLEMENTARITY_TOL {
                return Err(DispatchError::ComplementarityViolated {
                    esr: i,
                    t: window.start + tau,
                    value: prod,
                });
            }
        }
    }

    let lambda = sol.y_eq[..len].to_vec();
    let phi = (0..lay.n_esr)
        .map(|i| sol.y_eq[len + i * len..len + (i + 1) * len].to_vec())
        .collect();

    let mut mu_up = Vec::with_capacity(lay.n_gen);
    let mut mu_dn = Vec::with_capacity(lay.n_gen);
    let mut mu_up_prev = Vec::with_capacity(lay.n_gen);
    let mut mu_dn_prev = Vec::with_capacity(lay.n_gen);
    let rows_per_gen = 2 * len; // boundary pair + (len-1) interior pairs
    for n in 0..lay.n_gen {
        let base = n * rows_per_gen;
        mu_up_prev.push(sol.y_ub[base]);
        mu_dn_prev.push(sol.y_ub[base + 1]);
        let mut up = Vec::with_capacity(len.saturating_sub(1));
        let mut dn = Vec::with_capacity(len.saturating_sub(1));
        for tau in 0..len - 1 {
            up.push(sol.y_ub[base + 2 + 2 * tau]);
            dn.push(sol.y_ub[base + 2 + 2 * tau + 1]);
        }
        mu_up.push(up);
        mu_dn.push(dn);
    }

    let delta_lo = unpack_matrix(&sol.z_lower, len, lay.n_esr, |i, tau| lay.e(i, tau));
    let delta_hi = unpack_matrix(&sol.z_upper, len, lay.n_esr, |i, tau| lay.e(i, tau));
    let rho_gen_lo = unpack_matrix(&sol.z_lower, len, lay.n_gen, |n, tau| lay.g(n, tau));
    let rho_gen_hi = unpack_matrix(&sol.z_upper, len, lay.n_gen, |n, tau| lay.g(n, tau));
    let rho_dis_lo = unpack_matrix(&sol.z_lower, len, lay.n_esr, |i, tau| lay.d(i, tau));
    let rho_dis_hi = unpack_matrix(&sol.z_upper, len, lay.n_esr, |i, tau| lay.d(i, tau));
    let rho_chg_lo = unpack_matrix(&sol.z_lower, len, lay.n_esr, |i, tau| lay.c(i, tau));
    let rho_chg_hi = unpack_matrix(&sol.z_upper, len, lay.n_esr, |i, tau| lay.c(i, tau));

    Ok(WindowSolution {
        start: window.start,
        len,
        objective: sol.objective_value,
        g_gen,
        g_dis,
        g_chg,
        soc,
        lambda,
        phi,
        mu_up,
        mu_dn,
        mu_up_prev,
        mu_dn_prev,
        delta_lo,
        delta_hi,
        rho_gen_lo,
        rho_gen_hi,
        rho_dis_lo,
        rho_dis_hi,
        rho_chg_lo,
        rho_chg_hi,
        degenerate: sol.degenerate,
        duals_nonunique: sol.duals_nonunique,
    })
}

/// Demand forecasts for the window starting at `t`: first entry is the
/// realized demand, deeper entries carry accumulated forecast error.
pub trait Forecaster {
    fn window(&self, t: usize, len: usize) -> Vec<f64>;
}

impl Forecaster for crate::forecast::DemandScenario {
    fn window(&self, t: usize, len: usize) -> Vec<f64> {
        self.window_forecasts(t, len)
    }
}

/// Perfect-foresight wrapper around a fixed demand trace.
pub struct PerfectForecaster<'a>(pub &'a [f64]);

impl Forecaster for PerfectForecaster<'_> {
    fn window(&self, t: usize, len: usize) -> Vec<f64> {
        self.0[t..(t + len).min(self.0.len())].to_vec()
    }
}

/// Forecaster that replays a fixed list of per-window forecasts; entry `t`
/// starts with the realized demand at `t`.
pub struct PresetForecaster(pub Vec<Vec<f64>>);

impl Forecaster for PresetForecaster {
    fn window(&self, t: usize, len: usize) -> Vec<f64> {
        self.0[t][..len.min(self.0[t].len())].to_vec()
    }
}

/// Solve every window across the horizon, binding the first interval of each
/// and threading state forward.
pub fn roll_horizon(
    config: &MarketConfig,
    generators: &[GeneratorSpec],
    esrs: &[EsrSpec],
    bids: &BidParameter,
    forecaster: &dyn Forecaster,
) -> Result<RollingDispatch, DispatchError> {
    let t_max = config.horizon;
    let mut prior = PriorState::initial(generators, esrs);
    let mut out = RollingDispatch {
        g_gen: vec![Vec::with_capacity(t_max); generators.len()],
        g_dis: vec![Vec::with_capacity(t_max); esrs.len()],
        g_chg: vec![Vec::with_capacity(t_max); esrs.len()],
        soc: vec![Vec::with_capacity(t_max); esrs.len()],
        demand: Vec::with_capacity(t_max),
        windows: Vec::with_capacity(t_max),
    };
    for t in 0..t_max {
        let len = config.window.min(t_max - t);
        let forecasts = forecaster.window(t, len);
        let window = build_window(config, generators, esrs, bids, t, &prior, &forecasts);
        let sol = solve_window(&window)?;
        for n in 0..generators.len() {
            out.g_gen[n].push(sol.g_gen[n][0]);
            prior.gen_output[n] = sol.g_gen[n][0];
        }
        for i in 0..esrs.len() {
            out.g_dis[i].push(sol.g_dis[i][0]);
            out.g_chg[i].push(sol.g_chg[i][0]);
            out.soc[i].push(sol.soc[i][0]);
            prior.soc[i] = sol.soc[i][0];
        }
        out.demand.push(forecasts[0]);
        out.windows.push(sol);
    }
    Ok(out)
}
