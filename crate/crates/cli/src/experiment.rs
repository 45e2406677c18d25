use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::ValueEnum;
use meanop::LossSpec64;
use meanop_experiments::datasets::{load_dataset, surrogate_datasets, Dataset};
use meanop_experiments::figure2::{d_noisy_over_phi, figure2_violations, nondecreasing, run_figure2, Figure2Config};
use meanop_experiments::figure3::{association_points, figure3_spearman, figure3_violations, run_figure3, Figure3Config};
use meanop_experiments::records::{emit, write_plot};
use meanop_experiments::table2::{run_table2, summarize_table2, Table2Config};
use meanop_experiments::{ExperimentRecord, Format};
use serde_json::{json, Value};

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Kind {
    Figure2,
    Figure3,
    Table2,
}

fn datasets(paths: &[PathBuf], seed: u64) -> Result<Vec<Dataset>> {
    if paths.is_empty() {
        return Ok(surrogate_datasets(seed)?);
    }
    paths.iter().map(|p| load_dataset(p).with_context(|| format!("loading {}", p.display()))).collect()
}

fn plot_name(prefix: &str, tag: &str) -> String {
    let clean: String = tag.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' }).collect();
    format!("plot_{prefix}_{clean}.csv")
}

/// Runs one experiment and writes its artifacts into `out`. Returns whether
/// every invariant check passed.
pub fn run(kind: Kind, out: &Path, seed: u64, data: &[PathBuf], loss: &LossSpec64, trials: Option<usize>) -> Result<bool> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let (records, violations, extra) = match kind {
        Kind::Figure2 => figure2(out)?,
        Kind::Figure3 => {
            let mut cfg = Figure3Config { seed, ..Default::default() };
            if let Some(t) = trials {
                cfg.trials = t;
            }
            figure3(out, &datasets(data, seed)?, loss, &cfg)?
        }
        Kind::Table2 => {
            let mut cfg = Table2Config { seed, ..Default::default() };
            if let Some(t) = trials {
                cfg.trials = t;
            }
            table2(out, &datasets(data, seed)?, loss, &cfg)?
        }
    };
    emit(&records, Format::Csv, &out.join("records.csv"))?;
    let ok = violations.is_empty();
    let summary = json!({
        "experiment": format!("{kind:?}").to_lowercase(),
        "seed": seed,
        "records": records.len(),
        "invariants_hold": ok,
        "violations": violations,
        "results": extra,
    });
    fs::write(out.join("summary.json"), serde_json::to_string_pretty(&summary)?)?;
    for v in &violations {
        eprintln!("invariant violated: {v}");
    }
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(ok)
}

type Outcome = (Vec<ExperimentRecord>, Vec<String>, Value);

fn figure2(out: &Path) -> Result<Outcome> {
    let cfg = Figure2Config::default();
    let records = run_figure2(&cfg)?;
    let violations = figure2_violations(&records, 1e-8);
    let mut curves = Vec::new();
    for &p in &cfg.p_grid {
        let pts = d_noisy_over_phi(&records, p);
        write_plot(&out.join(plot_name("d_noisy_vs_phi", &format!("p{p}"))), ["phi", "d_noisy"], &pts)?;
        curves.push(json!({ "p": p, "nondecreasing": nondecreasing(&pts, 1e-8), "points": pts.len() }));
    }
    Ok((records, violations, json!({ "lambda": cfg.lambda, "curves": curves })))
}

fn figure3(out: &Path, datasets: &[Dataset], loss: &LossSpec64, cfg: &Figure3Config) -> Result<Outcome> {
    let records = run_figure3(datasets, loss, cfg)?;
    let violations = figure3_violations(&records, 1e-6);
    write_plot(&out.join("plot_association.csv"), ["p_mu_norm", "d_clean"], &association_points(&records))?;
    let extra = json!({ "spearman": figure3_spearman(&records), "trials": cfg.trials });
    Ok((records, violations, extra))
}

fn table2(out: &Path, datasets: &[Dataset], loss: &LossSpec64, cfg: &Table2Config) -> Result<Outcome> {
    let records = run_table2(datasets, loss, cfg)?;
    let violations: Vec<String> = records.iter().filter_map(|r| r.validate().err().map(|e| e.to_string())).collect();
    let cells = summarize_table2(&records);
    for d in datasets {
        let pts: Vec<(f64, f64)> = cells.iter().filter(|c| c.dataset == d.name).map(|c| (c.p_plus, c.difference)).collect();
        write_plot(&out.join(plot_name("difference", &d.name)), ["p_plus", "mosgd_minus_sgd"], &pts)?;
    }
    Ok((records, violations, json!({ "cells": cells })))
}
