//! Per-kind experiment bodies. Each returns its CSV/JSON files as bytes plus
//! the scalar results for `summary.json`; the runner handles the pool,
//! staging and timing.
//!
//! CSV headers:
//!
//! | file | header |
//! |---|---|
//! | `gainmap.csv` | `x,y,gain_db` |
//! | `snr_sweep.csv`, `sinr_sweep.csv` | `L,A_lambda,trials,mean_db,ci95_half_width_db,mean_linear,std_error_linear` |
//! | `pattern_*.csv` | `u,gain_linear,gain_db` |
//! | `spacing_*.csv` | `d_lambda,objective` |
//! | `capacity.csv` | `snr_db,L,seed,capacity_fpa,capacity_ma` |
//! | `estimation.csv` | `A_lambda,L,K,strategy,truth,noise_var,trials,mean_nmse,max_nmse,exact_fraction` |

use std::fmt::Write as _;

use ma_core::beam::{
    array_gain, beam_pattern, matched_weights, null_steer_weights, optimize_uniform_spacing,
    two_beam_weights_fpa, ArrayLayout, SpacingObjective,
};
use ma_core::estimation::{
    omp_estimate, plan_measurement_positions, reconstruct_and_score, sample_on_grid_channel,
    simulate_measurements, AngleDictionary, EstimationReport, MeasurementStrategy,
};
use ma_core::gain_map::evaluate_map;
use ma_core::mimo::{
    build_channel_matrix, capacity_identity_cov, fpa_placement, half_wavelength_ula,
    sequential_position_search, MimoChannelSpec, SequentialSearchConfig,
};
use ma_core::positioning::{run_trials, MonteCarloConfig, MonteCarloSummary, TrialOutcome};
use ma_core::{
    fixtures, sample_stochastic_channel, sample_stochastic_channel_with, trial_rng, ChannelSpec64,
    Region64, StochasticOptions,
};
use rand::RngCore;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{
    BeamParams, ChannelSource, EstimateParams, Experiment, GainMapParams, MimoParams, SweepParams,
    TruthModel,
};

/// Threshold below which an estimate counts as an exact recovery.
pub const EXACT_NMSE: f64 = 1e-10;

#[derive(Debug, Clone, Default)]
pub struct Artifacts {
    /// File name and contents, in write order.
    pub files: Vec<(String, Vec<u8>)>,
    pub results: Value,
}

impl Artifacts {
    fn push(&mut self, name: &str, bytes: Vec<u8>) {
        self.files.push((name.to_string(), bytes));
    }
}

pub fn execute(exp: &Experiment, seed: u64) -> ma_core::Result<Artifacts> {
    match exp {
        Experiment::GainMap(p) => gain_map(p),
        Experiment::Snr(p) => sweep(p, seed, false),
        Experiment::Sinr(p) => sweep(p, seed, true),
        Experiment::Beam(p) => beam(p),
        Experiment::Mimo(p) => mimo(p, seed),
        Experiment::Estimate(p) => estimate(p, seed),
    }
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Vec<u8> {
    let mut buf = Vec::new();
    f(&mut buf).expect("writing to memory cannot fail");
    buf
}

fn position_json(p: &ma_core::Position64) -> Value {
    json!([p.x(), p.y(), p.z()])
}

fn gain_map(p: &GainMapParams) -> ma_core::Result<Artifacts> {
    let spec: ChannelSpec64 = match &p.channel {
        ChannelSource::TwoPath => fixtures::two_path(),
        ChannelSource::FourPath => fixtures::four_path(),
        ChannelSource::Random { paths, seed } => {
            sample_stochastic_channel(*paths, *seed, &StochasticOptions::default())?
        }
        ChannelSource::Explicit(rec) => ChannelSpec64::from_record(rec)?,
    };
    let region = Region64::rectangle(p.width, p.height)?;
    let map = evaluate_map(&spec, &region, p.step)?;
    let e = map.extrema();
    let mut out = Artifacts::default();
    out.push("gainmap.csv", csv_bytes(|w| map.write_csv(w)));
    let record = serde_json::to_vec_pretty(&spec.to_record()).expect("record serialises");
    out.push("channel.json", record);
    out.results = json!({
        "paths": spec.len(),
        "cells": map.values_db().len(),
        "shape": map.shape(),
        "step": p.step,
        "max_db": e.max_db,
        "min_db": e.min_db,
        "range_db": e.max_db - e.min_db,
        "argmax": position_json(&e.argmax),
        "argmin": position_json(&e.argmin),
    });
    Ok(out)
}

const SWEEP_HEADER: &str = "L,A_lambda,trials,mean_db,ci95_half_width_db,mean_linear,std_error_linear";

fn sweep_row(csv: &mut String, l: usize, a: f64, s: &MonteCarloSummary<f64>) {
    writeln!(
        csv,
        "{l},{a},{},{},{},{},{}",
        s.trials, s.mean_db, s.ci95_half_width_db, s.mean_linear, s.std_error_linear
    )
    .unwrap();
}

fn summary_json(s: &MonteCarloSummary<f64>) -> Value {
    json!({
        "mean_db": s.mean_db,
        "ci95_half_width_db": s.ci95_half_width_db,
        "mean_linear": s.mean_linear,
        "std_error_linear": s.std_error_linear,
    })
}

fn sweep(p: &SweepParams, seed: u64, interference: bool) -> ma_core::Result<Artifacts> {
    let mc = MonteCarloConfig {
        search: p.search,
        sinr_search: p.sinr_search,
        snr_ref_db: p.snr_ref_db,
        inr_ref_db: p.inr_ref_db,
        interference_paths: p.interference_paths,
    };
    let mut snr_csv = format!("{SWEEP_HEADER}\n");
    let mut sinr_csv = format!("{SWEEP_HEADER}\n");
    let mut points = Vec::new();
    let mut all_bounded = true;
    let mut violations = 0usize;
    for &l in &p.path_counts {
        for &a in &p.region_sizes {
            // Every (L, A) point reuses the same seed, so the sweep compares
            // regions on common channel realisations.
            let outcomes: Vec<TrialOutcome<f64>> =
                run_trials(l, a, p.trials, seed, &mc, interference)?;
            let snr: Vec<f64> = outcomes.iter().map(|o| o.max_snr).collect();
            let snr_s = MonteCarloSummary::from_linear(&snr);
            sweep_row(&mut snr_csv, l, a, &snr_s);
            let mut point = json!({ "L": l, "A_lambda": a, "max_snr": summary_json(&snr_s) });
            if interference {
                let sinr: Vec<f64> = outcomes.iter().map(|o| o.max_sinr.unwrap_or(f64::NAN)).collect();
                let bad = snr.iter().zip(&sinr).filter(|(s, i)| !(*i <= *s)).count();
                violations += bad;
                all_bounded &= bad == 0;
                let sinr_s = MonteCarloSummary::from_linear(&sinr);
                sweep_row(&mut sinr_csv, l, a, &sinr_s);
                point["max_sinr"] = summary_json(&sinr_s);
                point["gap_db"] = json!(snr_s.mean_db - sinr_s.mean_db);
                point["sinr_le_snr_violations"] = json!(bad);
            }
            points.push(point);
        }
    }
    let mut out = Artifacts::default();
    out.push("snr_sweep.csv", snr_csv.into_bytes());
    let mut results = json!({
        "trials": p.trials,
        "snr_ref_db": p.snr_ref_db,
        "points": points,
    });
    if interference {
        out.push("sinr_sweep.csv", sinr_csv.into_bytes());
        results["inr_ref_db"] = json!(p.inr_ref_db);
        results["sinr_le_snr_every_trial"] = json!(all_bounded);
        results["sinr_le_snr_violations"] = json!(violations);
    }
    out.results = results;
    Ok(out)
}

fn beam(p: &BeamParams) -> ma_core::Result<Artifacts> {
    let n = p.elements;
    let fpa = ArrayLayout::half_wavelength(n)?;
    let [u1, u2] = p.two_beam;
    let [u_sig, u_int] = p.null_steer;
    let range = (p.spacing_min, p.spacing_max);
    let mut out = Artifacts::default();
    let pattern = |layout: &ArrayLayout<f64>, w| -> ma_core::Result<Vec<u8>> {
        let pat = beam_pattern(layout, w, p.pattern_points)?;
        Ok(csv_bytes(|buf| pat.write_csv(buf)))
    };

    let fpa_two = two_beam_weights_fpa(&fpa, u1, u2)?;
    let two_search = optimize_uniform_spacing(n, &SpacingObjective::TwoBeam { u1, u2 }, range, p.two_beam_step)?;
    let ma_two_layout = ArrayLayout::uniform(n, two_search.best_spacing)?;
    let ma_two_w = matched_weights(&ma_two_layout, u1)?;
    out.push("pattern_two_beam_fpa.csv", pattern(&fpa, &fpa_two.weights)?);
    out.push("pattern_two_beam_ma.csv", pattern(&ma_two_layout, &ma_two_w)?);
    out.push("spacing_two_beam.csv", csv_bytes(|w| two_search.write_csv(w)));

    let fpa_null = null_steer_weights(&fpa, u_sig, u_int)?;
    let null_search = optimize_uniform_spacing(
        n,
        &SpacingObjective::NullSteer { u_sig, u_int },
        range,
        p.null_step,
    )?;
    let ma_null_layout = ArrayLayout::uniform(n, null_search.best_spacing)?;
    let ma_null_w = matched_weights(&ma_null_layout, u_sig)?;
    out.push("pattern_null_fpa.csv", pattern(&fpa, &fpa_null.weights)?);
    out.push("pattern_null_ma.csv", pattern(&ma_null_layout, &ma_null_w)?);
    out.push("spacing_null.csv", csv_bytes(|w| null_search.write_csv(w)));

    out.results = json!({
        "elements": n,
        "two_beam": {
            "u": [u1, u2],
            "fpa_gain": [fpa_two.gain_u1, fpa_two.gain_u2],
            "ma_spacing": two_search.best_spacing,
            "ma_gain": [array_gain(&ma_two_layout, &ma_two_w, u1)?, array_gain(&ma_two_layout, &ma_two_w, u2)?],
        },
        "null_steer": {
            "u": [u_sig, u_int],
            "fpa_signal_gain": fpa_null.signal_gain,
            "fpa_interference_gain": fpa_null.interference_gain,
            "ma_spacing": null_search.best_spacing,
            "ma_signal_gain": array_gain(&ma_null_layout, &ma_null_w, u_sig)?,
            "ma_interference_gain": array_gain(&ma_null_layout, &ma_null_w, u_int)?,
        },
    });
    Ok(out)
}

struct MimoRow {
    fpa: Vec<f64>,
    ma: Vec<f64>,
}

fn mimo(p: &MimoParams, seed: u64) -> ma_core::Result<Artifacts> {
    let region = Region64::square(p.region_size)?;
    let tx = half_wavelength_ula::<f64>(p.tx_antennas);
    let fpa = fpa_placement(&region, p.rx_antennas)?;
    let search = SequentialSearchConfig {
        step: p.step,
        max_passes: p.max_passes,
        ..SequentialSearchConfig::default()
    };
    let rhos: Vec<f64> = p.snr_db.iter().map(|d| 10f64.powf(d / 10.0)).collect();
    let mut csv = String::from("snr_db,L,seed,capacity_fpa,capacity_ma\n");
    let mut per_l = Vec::new();
    let mut all_ge = true;
    let mut violations = 0usize;
    for &l in &p.path_counts {
        // Seed s of every path count draws from the same stream index.
        let rows: Vec<MimoRow> = (0..p.seeds)
            .into_par_iter()
            .map(|s| -> ma_core::Result<MimoRow> {
                let mut rng = trial_rng(seed, s as u64);
                let spec = MimoChannelSpec::<f64>::sample(l, &mut rng)?;
                let h_fpa = build_channel_matrix(&spec, &tx, &fpa)?;
                let mut row = MimoRow {
                    fpa: Vec::with_capacity(rhos.len()),
                    ma: Vec::with_capacity(rhos.len()),
                };
                for &rho in &rhos {
                    let c_fpa = capacity_identity_cov(&h_fpa, rho, tx.len())?;
                    let ma = sequential_position_search(&spec, &region, p.rx_antennas, &tx, rho, &search)?;
                    row.fpa.push(c_fpa);
                    row.ma.push(ma.capacity);
                }
                Ok(row)
            })
            .collect::<ma_core::Result<_>>()?;
        for (k, snr_db) in p.snr_db.iter().enumerate() {
            let fpa_c: Vec<f64> = rows.iter().map(|r| r.fpa[k]).collect();
            let ma_c: Vec<f64> = rows.iter().map(|r| r.ma[k]).collect();
            for (s, (f, m)) in fpa_c.iter().zip(&ma_c).enumerate() {
                writeln!(csv, "{snr_db},{l},{s},{f},{m}").unwrap();
            }
            let gains: Vec<f64> = ma_c.iter().zip(&fpa_c).map(|(m, f)| m - f).collect();
            let bad = gains.iter().filter(|g| !(**g >= 0.0)).count();
            violations += bad;
            all_ge &= bad == 0;
            let (gain_mean, gain_ci) = mean_ci(&gains);
            per_l.push(json!({
                "L": l,
                "snr_db": snr_db,
                "mean_capacity_fpa": mean_ci(&fpa_c).0,
                "mean_capacity_ma": mean_ci(&ma_c).0,
                "mean_gain": gain_mean,
                "gain_ci95_half_width": gain_ci,
                "ma_below_fpa": bad,
            }));
        }
    }
    let mut out = Artifacts::default();
    out.push("capacity.csv", csv.into_bytes());
    out.results = json!({
        "tx_antennas": p.tx_antennas,
        "rx_antennas": p.rx_antennas,
        "region_size": p.region_size,
        "seeds": p.seeds,
        "all_ma_ge_fpa": all_ge,
        "ma_below_fpa": violations,
        "points": per_l,
    });
    Ok(out)
}

/// Sample mean and 95% normal-approximation half-width, summed in order.
pub fn mean_ci(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    if x.len() < 2 {
        return (mean, 0.0);
    }
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, 1.96 * (var / n).sqrt())
}

struct EstimateTrial {
    nmse: f64,
    report: EstimationReport,
}

fn estimate(p: &EstimateParams, seed: u64) -> ma_core::Result<Artifacts> {
    let dict = AngleDictionary::<f64>::cosine_grid(p.dictionary_grid);
    let strategy_name = match p.strategy {
        MeasurementStrategy::UniformRandom => "uniform-random",
        MeasurementStrategy::Grid => "grid",
    };
    let truth_name = match p.truth {
        TruthModel::OnGrid => "on-grid",
        TruthModel::OffGrid => "off-grid",
    };
    let mut csv = String::from(
        "A_lambda,L,K,strategy,truth,noise_var,trials,mean_nmse,max_nmse,exact_fraction\n",
    );
    let mut cells = Vec::new();
    let mut reports = Vec::new();
    for &a in &p.region_sizes {
        let region = Region64::square(a)?;
        for &l in &p.path_counts {
            for rule in &p.measurements {
                let k = rule.resolve(l);
                let trials: Vec<EstimateTrial> = (0..p.trials)
                    .into_par_iter()
                    .map(|t| -> ma_core::Result<EstimateTrial> {
                        let mut rng = trial_rng(seed, t as u64);
                        let truth = match p.truth {
                            TruthModel::OnGrid => sample_on_grid_channel(&dict, l, &mut rng)?.1,
                            TruthModel::OffGrid => sample_stochastic_channel_with(
                                l,
                                &mut rng,
                                &StochasticOptions::default(),
                            )?,
                        };
                        let pos_seed = rng.next_u64();
                        let noise_seed = rng.next_u64();
                        let positions = plan_measurement_positions(&region, k, p.strategy, pos_seed)?;
                        let meas = simulate_measurements(&truth, &positions, p.noise_var, noise_seed)?;
                        let est = omp_estimate(&meas, &dict, l, p.eps_residual)?;
                        let nmse = reconstruct_and_score(&est, &truth, &region, p.score_step)?;
                        Ok(EstimateTrial {
                            nmse,
                            report: est.report(&meas, l, Some(nmse)),
                        })
                    })
                    .collect::<ma_core::Result<_>>()?;
                let nmse: Vec<f64> = trials.iter().map(|t| t.nmse).collect();
                let mean = nmse.iter().sum::<f64>() / nmse.len() as f64;
                let max = nmse.iter().copied().fold(0.0, f64::max);
                let exact = nmse.iter().filter(|v| **v < EXACT_NMSE).count() as f64 / nmse.len() as f64;
                writeln!(
                    csv,
                    "{a},{l},{k},{strategy_name},{truth_name},{},{},{mean},{max},{exact}",
                    p.noise_var, p.trials
                )
                .unwrap();
                cells.push(json!({
                    "A_lambda": a, "L": l, "K": k,
                    "mean_nmse": mean, "max_nmse": max, "exact_fraction": exact,
                }));
                let first = &trials[0].report;
                reports.push(json!({ "A_lambda": a, "L": l, "K": k, "trial": 0, "report": first }));
            }
        }
    }
    let mut out = Artifacts::default();
    out.push("estimation.csv", csv.into_bytes());
    out.push(
        "estimate_report.json",
        serde_json::to_vec_pretty(&reports).expect("reports serialise"),
    );
    out.results = json!({
        "dictionary_atoms": dict.len(),
        "strategy": strategy_name,
        "truth": truth_name,
        "noise_var": p.noise_var,
        "trials": p.trials,
        "cells": cells,
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{parse_raw, validate};

    fn run(text: &str) -> Artifacts {
        let cfg = validate(parse_raw(text).unwrap()).unwrap();
        execute(&cfg.experiment, cfg.seed).unwrap()
    }

    #[test]
    fn mean_ci_of_constant_samples() {
        assert_eq!(mean_ci(&[2.0, 2.0, 2.0]), (2.0, 0.0));
        assert_eq!(mean_ci(&[5.0]), (5.0, 0.0));
        let (m, h) = mean_ci(&[1.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((h - 1.96 * (2.0f64 / 2.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn sweep_rows_follow_config_order() {
        let a = run("seed = 2\n[experiment]\nkind = \"snr\"\npath_counts = [3, 1]\nregion_sizes = [1.0, 0.0]\ntrials = 4\n");
        let csv = String::from_utf8(a.files[0].1.clone()).unwrap();
        let keys: Vec<String> = csv.lines().skip(1).map(|l| l.split(',').take(2).collect::<Vec<_>>().join(",")).collect();
        assert_eq!(keys, ["3,1", "3,0", "1,1", "1,0"]);
    }

    #[test]
    fn sinr_run_reports_the_bound() {
        let a = run("seed = 2\n[experiment]\nkind = \"sinr\"\npath_counts = [4]\nregion_sizes = [2.0]\ntrials = 6\n");
        let names: Vec<&str> = a.files.iter().map(|f| f.0.as_str()).collect();
        assert_eq!(names, ["snr_sweep.csv", "sinr_sweep.csv"]);
        assert_eq!(a.results["sinr_le_snr_every_trial"], true);
        assert!(a.results["points"][0]["gap_db"].as_f64().unwrap() >= 0.0);
    }

    #[test]
    fn mimo_rows_cover_every_seed_and_snr() {
        let a = run("seed = 1\n[experiment]\nkind = \"mimo\"\ntx_antennas = 2\nrx_antennas = 2\nregion_size = 1.0\npath_counts = [3]\nsnr_db = [0.0, 10.0]\nseeds = 3\nstep = 0.25\n");
        let csv = String::from_utf8(a.files[0].1.clone()).unwrap();
        assert_eq!(csv.lines().count(), 1 + 2 * 3);
        assert_eq!(a.results["all_ma_ge_fpa"], true);
    }

    #[test]
    fn estimate_rule_scales_with_paths() {
        let a = run("seed = 1\n[experiment]\nkind = \"estimate\"\nregion_sizes = [2.0]\npath_counts = [1, 3]\nmeasurement_factors = [4]\ntrials = 2\n");
        let csv = String::from_utf8(a.files[0].1.clone()).unwrap();
        let ks: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').nth(2).unwrap()).collect();
        assert_eq!(ks, ["4", "12"]);
    }
}
