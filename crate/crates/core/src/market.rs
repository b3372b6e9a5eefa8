//! Static market description: horizons, participants, cost curves, and the
//! standing assumptions they must satisfy.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Scheduling horizon and look-ahead window.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MarketConfig {
    /// Number of scheduling intervals T.
    pub horizon: usize,
    /// Look-ahead window length W, `1 <= W <= T`.
    pub window: usize,
    /// Hours per interval. Fixed at 1.0 so MW and MWh coincide numerically.
    #[serde(default = "default_interval_duration")]
    pub interval_duration: f64,
}

fn default_interval_duration() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct GeneratorSpec {
    pub name: String,
    /// Maximum output, MW.
    pub capacity_max: f64,
    /// Minimum output, MW.
    #[serde(default = "default_capacity_min")]
    pub capacity_min: f64,
    /// Upward ramp limit, MW per interval.
    pub ramp_up: f64,
    /// Downward ramp limit, MW per interval.
    pub ramp_down: f64,
    /// True marginal cost, $/MWh (linear curve).
    pub true_cost: f64,
    /// Output in the interval before the horizon starts, MW.
    pub initial_output: f64,
}

fn default_capacity_min() -> f64 {
    0.1
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct EsrSpec {
    pub name: String,
    /// Discharge power cap, MW.
    pub discharge_cap: f64,
    /// Charge power cap, MW.
    pub charge_cap: f64,
    /// SOC bounds, MWh.
    pub soc_min: f64,
    pub soc_max: f64,
    /// SOC entering interval 1, MWh.
    pub soc_initial: f64,
    /// Discharge / charge efficiencies, in (0, 1].
    #[serde(default = "default_eff")]
    pub eff_discharge: f64,
    #[serde(default = "default_eff")]
    pub eff_charge: f64,
    /// True marginal discharge cost, $/MWh.
    pub true_discharge_cost: f64,
    /// True marginal charge benefit, $/MWh.
    pub true_charge_cost: f64,
}

fn default_eff() -> f64 {
    1.0
}

impl EsrSpec {
    /// Round-trip efficiency.
    pub fn round_trip(&self) -> f64 {
        self.eff_discharge * self.eff_charge
    }
}

/// Per-interval linear bid curves for every participant: `f(g | theta) = theta * g`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct BidParameter {
    /// `[generator][t]`, $/MWh.
    pub gen: Vec<Vec<f64>>,
    /// `[esr][t]` discharge bids, $/MWh.
    pub esr_discharge: Vec<Vec<f64>>,
    /// `[esr][t]` charge bids, $/MWh.
    pub esr_charge: Vec<Vec<f64>>,
}

impl BidParameter {
    /// Uniform per-interval perturbation of one ESR's bids.
    pub fn with_esr_offset(&self, esr: usize, d_discharge: f64, d_charge: f64) -> BidParameter {
        let mut out = self.clone();
        for v in &mut out.esr_discharge[esr] {
            *v += d_discharge;
        }
        for v in &mut out.esr_charge[esr] {
            *v += d_charge;
        }
        out
    }
}

#[derive(Debug, Error)]
pub enum BidError {
    #[error("negative quantity {0}")]
    NegativeQuantity(f64),
}

/// Bid-in cost of quantity `g` at marginal price `theta`.
pub fn bid_cost(theta: f64, quantity: f64) -> Result<f64, BidError> {
    if quantity < 0.0 {
        return Err(BidError::NegativeQuantity(quantity));
    }
    Ok(theta * quantity)
}

/// Bids equal to each participant's true marginal cost at every interval.
pub fn truthful_bids(
    config: &MarketConfig,
    generators: &[GeneratorSpec],
    esrs: &[EsrSpec],
) -> BidParameter {
    let t = config.horizon;
    BidParameter {
        gen: generators.iter().map(|g| vec![g.true_cost; t]).collect(),
        esr_discharge: esrs
            .iter()
            .map(|e| vec![e.true_discharge_cost; t])
            .collect(),
        esr_charge: esrs.iter().map(|e| vec![e.true_charge_cost; t]).collect(),
    }
}

/// One violated standing assumption, as a human-readable field path + message.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

/// Validate the whole static description; empty iff all invariants hold.
pub fn validate(
    config: &MarketConfig,
    generators: &[GeneratorSpec],
    esrs: &[EsrSpec],
) -> Vec<Violation> {
    let mut v = Vec::new();
    let mut push = |field: &str, message: String| {
        v.push(Violation {
            field: field.to_string(),
            message,
        })
    };
    if config.horizon == 0 {
        push("config.horizon", "horizon must be at least 1".into());
    }
    if config.window == 0 || config.window > config.horizon.max(1) {
        push(
            "config.window",
            format!(
                "window must satisfy 1 <= W <= T, got W={} T={}",
                config.window, config.horizon
            ),
        );
    }
    if config.interval_duration <= 0.0 {
        push("config.interval_duration", "must be positive".into());
    }
    for (i, g) in generators.iter().enumerate() {
        let f = |s: &str| format!("generators[{i}].{s}");
        if !(0.0 <= g.capacity_min && g.capacity_min <= g.capacity_max) {
            push(
                &f("capacity_min"),
                format!(
                    "need 0 <= min <= max, got min={} max={}",
                    g.capacity_min, g.capacity_max
                ),
            );
        }
        if g.ramp_up <= 0.0 || g.ramp_down <= 0.0 {
            push(&f("ramp_up"), "ramp must be positive".into());
        }
        if g.true_cost < 0.0 {
            push(&f("true_cost"), "cost must be nonnegative".into());
        }
        if !g.initial_output.is_finite() {
            push(&f("initial_output"), "must be finite".into());
        }
    }
    for (i, e) in esrs.iter().enumerate() {
        let f = |s: &str| format!("esrs[{i}].{s}");
        if e.discharge_cap <= 0.0 || e.charge_cap <= 0.0 {
            push(&f("discharge_cap"), "power caps must be positive".into());
        }
        if !(e.soc_min <= e.soc_initial && e.soc_initial <= e.soc_max) {
            push(
                &f("soc_initial"),
                format!(
                    "need soc_min <= initial <= soc_max, got {} <= {} <= {}",
                    e.soc_min, e.soc_initial, e.soc_max
                ),
            );
        }
        if !(e.eff_discharge > 0.0 && e.eff_discharge <= 1.0) {
            push(&f("eff_discharge"), "must be in (0, 1]".into());
        }
        if !(e.eff_charge > 0.0 && e.eff_charge <= 1.0) {
            push(&f("eff_charge"), "must be in (0, 1]".into());
        }
        // Exact-relaxation assumption: discharging must be dearer than the
        // round-trip value of charging, else simultaneous charge/discharge
        // can pay off and the complementarity relaxation fails.
        if e.round_trip() > 0.0
            && e.true_discharge_cost <= e.true_charge_cost / e.round_trip()
        {
            push(
                &f("true_discharge_cost"),
                format!(
                    "relaxation assumption requires q_d > q_c / (eff_d * eff_c): {} <= {}",
                    e.true_discharge_cost,
                    e.true_charge_cost / e.round_trip()
                ),
            );
        }
    }
    v
}
