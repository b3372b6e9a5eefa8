//! Price extraction from rolling-window duals.
//!
//! LMP publishes the binding-interval energy-balance dual as one uniform
//! price. TLMP starts from the same energy price and adds participant
//! specific components: the SOC price (scaled by charge/discharge
//! efficiency) for storage and the ramping price for generators. Only
//! binding-interval duals are published; advisory-interval duals stay in the
//! window solutions for diagnostics.

use crate::dispatch::RollingDispatch;
use crate::market::{EsrSpec, GeneratorSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PriceScheme {
    Lmp,
    Tlmp,
}

/// Per-interval prices for every market participant under one scheme.
///
/// `demand`, `gen[n]`, `esr_discharge[i]`, `esr_charge[i]` are the prices
/// actually settled; `lambda`, `phi[i]`, `ramp[n]` are the published
/// components (energy, SOC, ramping). Under LMP every participant price
/// equals `lambda` and the components beyond it are zero by construction.
#[derive(Debug, Clone)]
pub struct PriceSeries {
    pub scheme: PriceScheme,
    pub demand: Vec<f64>,
    pub gen: Vec<Vec<f64>>,
    pub esr_discharge: Vec<Vec<f64>>,
    pub esr_charge: Vec<Vec<f64>>,
    pub lambda: Vec<f64>,
    pub phi: Vec<Vec<f64>>,
    pub ramp: Vec<Vec<f64>>,
    /// Some window along the horizon had a degenerate optimal basis; dual
    /// values are then one deterministic choice among several.
    pub degenerate: bool,
}

/// Uniform price series: the binding-interval balance dual of every window.
pub fn extract_rlmp(rolling: &RollingDispatch) -> PriceSeries {
    let t_max = rolling.horizon();
    let lambda: Vec<f64> = rolling.windows.iter().map(|w| w.lambda[0]).collect();
    let n_gen = rolling.g_gen.len();
    let n_esr = rolling.g_dis.len();
    PriceSeries {
        scheme: PriceScheme::Lmp,
        demand: lambda.clone(),
        gen: vec![lambda.clone(); n_gen],
        esr_discharge: vec![lambda.clone(); n_esr],
        esr_charge: vec![lambda.clone(); n_esr],
        lambda: lambda.clone(),
        phi: vec![vec![0.0; t_max]; n_esr],
        ramp: vec![vec![0.0; t_max]; n_gen],
        degenerate: rolling.any_degenerate(),
    }
}

/// Discriminative price series built from binding-interval duals:
/// discharge is paid `lambda - phi/eff_d`, charge pays `lambda - eff_c*phi`,
/// generators are paid `lambda + ramping price`, demand pays `lambda`.
pub fn extract_rtlmp(
    rolling: &RollingDispatch,
    generators: &[GeneratorSpec],
    esrs: &[EsrSpec],
) -> PriceSeries {
    let lambda: Vec<f64> = rolling.windows.iter().map(|w| w.lambda[0]).collect();
    let phi: Vec<Vec<f64>> = (0..esrs.len())
        .map(|i| rolling.windows.iter().map(|w| w.phi[i][0]).collect())
        .collect();
    // Ramping price at t: in-window dual difference minus the boundary one.
    let ramp: Vec<Vec<f64>> = (0..generators.len())
        .map(|n| {
            rolling
                .windows
                .iter()
                .map(|w| w.delta_mu(n, 0) - w.delta_mu_prev(n))
                .collect()
        })
        .collect();
    let esr_discharge = esrs
        .iter()
        .enumerate()
        .map(|(i, e)| {
            lambda
                .iter()
                .zip(&phi[i])
                .map(|(&l, &p)| l - p / e.eff_discharge)
                .collect()
        })
        .collect();
    let esr_charge = esrs
        .iter()
        .enumerate()
        .map(|(i, e)| {
            lambda
                .iter()
                .zip(&phi[i])
                .map(|(&l, &p)| l - e.eff_charge * p)
                .collect()
        })
        .collect();
    let gen = (0..generators.len())
        .map(|n| lambda.iter().zip(&ramp[n]).map(|(&l, &d)| l + d).collect())
        .collect();
    PriceSeries {
        scheme: PriceScheme::Tlmp,
        demand: lambda.clone(),
        gen,
        esr_discharge,
        esr_charge,
        lambda,
        phi,
        ramp,
        degenerate: rolling.any_degenerate(),
    }
}

/// Extract the series for a scheme tag.
pub fn extract(
    scheme: PriceScheme,
    rolling: &RollingDispatch,
    generators: &[GeneratorSpec],
    esrs: &[EsrSpec],
) -> PriceSeries {
    match scheme {
        PriceScheme::Lmp => extract_rlmp(rolling),
        PriceScheme::Tlmp => extract_rtlmp(rolling, generators, esrs),
    }
}

/// One participant-interval where the dispatched quantity fails to maximize
/// single-interval profit at its published price.
#[derive(Debug, Clone)]
pub struct DecouplingViolation {
    pub participant: String,
    pub t: usize,
    pub dispatched: f64,
    pub best_response: f64,
}

fn best_response(margin: f64, lo: f64, hi: f64, dispatched: f64, tol: f64) -> Option<f64> {
    if margin > tol {
        (dispatched < hi - tol).then_some(hi)
    } else if margin < -tol {
        (dispatched > lo + tol).then_some(lo)
    } else {
        None
    }
}

/// Check that every binding dispatch quantity is a single-interval best
/// response to its price: positive margin forces the upper capacity, negative
/// margin the lower, and interior dispatch requires price equal to the bid
/// marginal cost within `tol`.
pub fn check_decoupling(
    prices: &PriceSeries,
    rolling: &RollingDispatch,
    generators: &[GeneratorSpec],
    esrs: &[EsrSpec],
    bids: &crate::market::BidParameter,
    tol: f64,
) -> Vec<DecouplingViolation> {
    let mut out = Vec::new();
    for t in 0..rolling.horizon() {
        for (n, g) in generators.iter().enumerate() {
            let margin = prices.gen[n][t] - bids.gen[n][t];
            if let Some(best) = best_response(
                margin,
                g.capacity_min,
                g.capacity_max,
                rolling.g_gen[n][t],
                tol,
            ) {
                out.push(DecouplingViolation {
                    participant: g.name.clone(),
                    t,
                    dispatched: rolling.g_gen[n][t],
                    best_response: best,
                });
            }
        }
        for (i, e) in esrs.iter().enumerate() {
            let margin_d = prices.esr_discharge[i][t] - bids.esr_discharge[i][t];
            if let Some(best) =
                best_response(margin_d, 0.0, e.discharge_cap, rolling.g_dis[i][t], tol)
            {
                out.push(DecouplingViolation {
                    participant: format!("{}/discharge", e.name),
                    t,
                    dispatched: rolling.g_dis[i][t],
                    best_response: best,
                });
            }
            // Charging profit margin is bid value minus price paid.
            let margin_c = bids.esr_charge[i][t] - prices.esr_charge[i][t];
            if let Some(best) = best_response(margin_c, 0.0, e.charge_cap, rolling.g_chg[i][t], tol)
            {
                out.push(DecouplingViolation {
                    participant: format!("{}/charge", e.name),
                    t,
                    dispatched: rolling.g_chg[i][t],
                    best_response: best,
                });
            }
        }
    }
    out
}
