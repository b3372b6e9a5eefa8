//! The four subcommands: scenario batches in, CSV files out.

use std::path::Path;

use anyhow::{Context, Result};
use rayon::prelude::*;

use rmarket_core::dispatch::{roll_horizon, RollingDispatch};
use rmarket_core::forecast::{realize, DemandScenario};
use rmarket_core::incentives::{
    check_theorem1, perturbation_sweep, uniform_price_impossibility,
};
use rmarket_core::market::truthful_bids;
use rmarket_core::pricing::{extract_rlmp, extract_rtlmp, PriceScheme, PriceSeries};
use rmarket_core::settlement::settle;

use crate::config::RunConfig;
use crate::output::{fmt, write_manifest, CsvFile};

fn scheme_label(scheme: PriceScheme) -> &'static str {
    match scheme {
        PriceScheme::Lmp => "lmp",
        PriceScheme::Tlmp => "tlmp",
    }
}

fn scheme_flag(config: &RunConfig) -> &'static str {
    match config.experiment.scheme {
        crate::config::SchemeChoice::Lmp => "lmp",
        crate::config::SchemeChoice::Tlmp => "tlmp",
        crate::config::SchemeChoice::Both => "both",
    }
}

fn extract(scheme: PriceScheme, config: &RunConfig, rolling: &RollingDispatch) -> PriceSeries {
    match scheme {
        PriceScheme::Lmp => extract_rlmp(rolling),
        PriceScheme::Tlmp => extract_rtlmp(rolling, &config.generators, &config.esrs),
    }
}

struct ScenarioRun {
    seed: u64,
    scenario: DemandScenario,
    rolling: RollingDispatch,
}

/// Dispatch every scenario of the batch in parallel; results come back in
/// scenario order, so downstream files never depend on scheduling.
fn run_batch(config: &RunConfig) -> Result<Vec<ScenarioRun>> {
    let bids = truthful_bids(&config.market, &config.generators, &config.esrs);
    let mean = config.mean_profile().to_vec();
    (0..config.experiment.scenarios)
        .into_par_iter()
        .map(|s| {
            let seed = config.experiment.base_seed + s as u64;
            let scenario = realize(
                &mean,
                config.demand.sigma_load,
                config.demand.sigma_step,
                config.demand.sigma_mode,
                seed,
            );
            let rolling = roll_horizon(
                &config.market,
                &config.generators,
                &config.esrs,
                &bids,
                &scenario,
            )
            .with_context(|| format!("scenario {s} (seed {seed})"))?;
            Ok(ScenarioRun {
                seed,
                scenario,
                rolling,
            })
        })
        .collect()
}

fn write_dispatch(dir: &Path, config: &RunConfig, runs: &[ScenarioRun]) -> Result<()> {
    let mut f = CsvFile::create(dir, "dispatch.csv", "scenario,seed,t,participant,mw,soc")?;
    for (s, run) in runs.iter().enumerate() {
        let t_max = run.rolling.horizon();
        for t in 0..t_max {
            let mut row = |name: &str, mw: f64, soc: Option<f64>| {
                f.row(&[
                    s.to_string(),
                    run.seed.to_string(),
                    t.to_string(),
                    name.to_string(),
                    fmt(mw),
                    soc.map(fmt).unwrap_or_default(),
                ])
            };
            row("demand", run.scenario.realization[t], None)?;
            for (n, g) in config.generators.iter().enumerate() {
                row(&g.name, run.rolling.g_gen[n][t], None)?;
            }
            for (i, e) in config.esrs.iter().enumerate() {
                let net = run.rolling.g_dis[i][t] - run.rolling.g_chg[i][t];
                row(&e.name, net, Some(run.rolling.soc[i][t]))?;
            }
        }
    }
    f.finish()?;
    Ok(())
}

fn write_prices(
    dir: &Path,
    config: &RunConfig,
    runs: &[ScenarioRun],
    schemes: &[PriceScheme],
) -> Result<()> {
    let mut f = CsvFile::create(
        dir,
        "prices.csv",
        "scenario,seed,scheme,t,participant,price,lambda,phi,ramp_delta",
    )?;
    for (s, run) in runs.iter().enumerate() {
        for &scheme in schemes {
            let prices = extract(scheme, config, &run.rolling);
            let label = scheme_label(scheme);
            for t in 0..run.rolling.horizon() {
                let mut row = |name: &str, price: f64, phi: Option<f64>, delta: Option<f64>| {
                    f.row(&[
                        s.to_string(),
                        run.seed.to_string(),
                        label.to_string(),
                        t.to_string(),
                        name.to_string(),
                        fmt(price),
                        fmt(prices.lambda[t]),
                        phi.map(fmt).unwrap_or_default(),
                        delta.map(fmt).unwrap_or_default(),
                    ])
                };
                row("demand", prices.demand[t], None, None)?;
                for (n, g) in config.generators.iter().enumerate() {
                    row(&g.name, prices.gen[n][t], None, Some(prices.ramp[n][t]))?;
                }
                for (i, e) in config.esrs.iter().enumerate() {
                    let phi = prices.phi[i][t];
                    row(
                        &format!("{}:discharge", e.name),
                        prices.esr_discharge[i][t],
                        Some(phi),
                        None,
                    )?;
                    row(
                        &format!("{}:charge", e.name),
                        prices.esr_charge[i][t],
                        Some(phi),
                        None,
                    )?;
                }
            }
        }
    }
    f.finish()?;
    Ok(())
}

fn prepare(config: &RunConfig) -> Result<(Vec<ScenarioRun>, Vec<PriceScheme>)> {
    std::fs::create_dir_all(&config.experiment.out_dir)
        .with_context(|| format!("creating {}", config.experiment.out_dir.display()))?;
    let runs = run_batch(config)?;
    Ok((runs, config.experiment.scheme.schemes()))
}

/// Dispatch + prices for every scenario.
pub fn run_simulate(config: &RunConfig, config_sha256: &str) -> Result<()> {
    let (runs, schemes) = prepare(config)?;
    let dir = config.experiment.out_dir.clone();
    write_dispatch(&dir, config, &runs)?;
    write_prices(&dir, config, &runs, &schemes)?;
    write_manifest(
        &dir,
        config_sha256,
        "simulate",
        config.experiment.base_seed,
        runs.len(),
        scheme_flag(config),
    )?;
    Ok(())
}

/// Dispatch + prices + full settlement for every scenario.
pub fn run_settle(config: &RunConfig, config_sha256: &str) -> Result<()> {
    let (runs, schemes) = prepare(config)?;
    let dir = config.experiment.out_dir.clone();
    write_dispatch(&dir, config, &runs)?;
    write_prices(&dir, config, &runs, &schemes)?;
    let bids = truthful_bids(&config.market, &config.generators, &config.esrs);
    let mut f = CsvFile::create(
        &dir,
        "settlement.csv",
        "scenario,seed,scheme,participant,revenue,true_cost,surplus,loc",
    )?;
    for (s, run) in runs.iter().enumerate() {
        for &scheme in &schemes {
            let prices = extract(scheme, config, &run.rolling);
            let record = settle(
                &prices,
                &run.rolling,
                &config.generators,
                &config.esrs,
                &bids,
            );
            let label = scheme_label(scheme);
            for p in &record.participants {
                f.row(&[
                    s.to_string(),
                    run.seed.to_string(),
                    label.to_string(),
                    p.name.clone(),
                    fmt(p.revenue),
                    fmt(p.true_cost),
                    fmt(p.surplus),
                    fmt(p.loc),
                ])?;
            }
            let mut system = |name: &str, value: f64| {
                f.row(&[
                    s.to_string(),
                    run.seed.to_string(),
                    label.to_string(),
                    name.to_string(),
                    fmt(value),
                    String::new(),
                    String::new(),
                    String::new(),
                ])
            };
            system("system:consumer_energy_payment", record.consumer_energy_payment)?;
            system("system:total_loc", record.total_loc)?;
            system("system:merchandising_surplus", record.merchandising_surplus)?;
            system(
                "system:consumer_payment_rebated",
                record.consumer_payment_rebated,
            )?;
        }
    }
    f.finish()?;
    write_manifest(
        &dir,
        config_sha256,
        "settle",
        config.experiment.base_seed,
        runs.len(),
        scheme_flag(config),
    )?;
    Ok(())
}

/// Bid-perturbation sweep for one ESR across the scenario batch.
pub fn run_perturb(config: &RunConfig, config_sha256: &str) -> Result<()> {
    let dir = config.experiment.out_dir.clone();
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let mean = config.mean_profile().to_vec();
    let scenarios: Vec<DemandScenario> = (0..config.experiment.scenarios)
        .map(|s| {
            realize(
                &mean,
                config.demand.sigma_load,
                config.demand.sigma_step,
                config.demand.sigma_mode,
                config.experiment.base_seed + s as u64,
            )
        })
        .collect();
    let mut f = CsvFile::create(
        &dir,
        "perturb.csv",
        "scheme,direction,epsilon,mean_delta_profit,std_delta_profit,n,degenerate_excluded",
    )?;
    for scheme in config.experiment.scheme.schemes() {
        let results = perturbation_sweep(
            &config.market,
            &config.generators,
            &config.esrs,
            scheme,
            config.experiment.perturbed_esr,
            config.experiment.epsilon,
            &scenarios,
        )
        .context("perturbation sweep")?;
        for r in results {
            f.row(&[
                scheme_label(scheme).to_string(),
                r.direction.label.to_string(),
                fmt(r.epsilon),
                fmt(r.mean),
                fmt(r.std),
                r.delta_profit.len().to_string(),
                r.degenerate_count.to_string(),
            ])?;
        }
    }
    f.finish()?;
    write_manifest(
        &dir,
        config_sha256,
        "perturb",
        config.experiment.base_seed,
        config.experiment.scenarios,
        scheme_flag(config),
    )?;
    Ok(())
}

/// Theorem-condition audit: per scenario, did the two-ESR condition fire,
/// and does the uniform-price feasibility oracle agree.
pub fn run_audit(config: &RunConfig, config_sha256: &str) -> Result<()> {
    let (runs, _) = prepare(config)?;
    let dir = config.experiment.out_dir.clone();
    let bids = truthful_bids(&config.market, &config.generators, &config.esrs);
    let mut f = CsvFile::create(
        &dir,
        "audit.csv",
        "scenario,seed,fired,witness_count,witness_t,duals_nonunique,oracle",
    )?;
    let mut fired_total = 0usize;
    for (s, run) in runs.iter().enumerate() {
        let report = check_theorem1(&run.rolling, &config.esrs, &bids);
        let witness = report.witnesses.iter().find(|w| w.holds());
        let oracle = if report.fired {
            fired_total += 1;
            let check = uniform_price_impossibility(
                &run.rolling,
                &config.generators,
                &config.esrs,
                &bids,
            );
            if check.exists_zero_loc_price {
                "feasible"
            } else {
                "infeasible"
            }
        } else {
            ""
        };
        f.row(&[
            s.to_string(),
            run.seed.to_string(),
            report.fired.to_string(),
            report.witnesses.len().to_string(),
            witness.map(|w| w.t.to_string()).unwrap_or_default(),
            run.rolling.any_duals_nonunique().to_string(),
            oracle.to_string(),
        ])?;
    }
    f.finish()?;
    write_manifest(
        &dir,
        config_sha256,
        "audit",
        config.experiment.base_seed,
        runs.len(),
        scheme_flag(config),
    )?;
    eprintln!(
        "audit: condition fired in {fired_total}/{} scenarios",
        runs.len()
    );
    Ok(())
}
