use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use relayopt::homotopy::HomotopyOptions;
use relayopt::oracle::{grid_search_all, GridSpec};
use relayopt::schemes::{solve_cf_best, solve_cutset, solve_df_ml, solve_df_sl, solve_hybrid, HybridOptions};
use relayopt::{Config, SchemeSolution};

use crate::config::{ExperimentConfig, SchemeName};
use crate::error::CliError;

pub const HEADER_COMMENT: &str = "# relayopt-csv v1";

/// Allowed shortfall of the hybrid solver below the grid oracle.
pub fn oracle_tolerance(relays: usize) -> f64 {
    if relays == 1 {
        0.01
    } else {
        0.02
    }
}

pub struct Settings {
    pub seed: u64,
    pub timing: bool,
}

fn homotopy_options(settings: &Settings) -> HomotopyOptions {
    HomotopyOptions {
        seed: settings.seed,
        ..HomotopyOptions::default()
    }
}

pub fn solve_scheme(cfg: &Config, scheme: SchemeName, settings: &Settings) -> Result<SchemeSolution, CliError> {
    let opts = homotopy_options(settings);
    let s = match scheme {
        SchemeName::Hybrid => solve_hybrid(
            cfg,
            &HybridOptions {
                homotopy: opts,
                ..HybridOptions::default()
            },
        )?,
        SchemeName::Cf => solve_cf_best(cfg)?,
        SchemeName::DfMl => solve_df_ml(cfg, &opts)?,
        SchemeName::DfSl => solve_df_sl(cfg)?,
        SchemeName::Cutset => solve_cutset(cfg)?,
    };
    Ok(s)
}

/// Shortest round-trip decimal form; negative zero prints as `0`.
fn num(x: f64) -> String {
    if x == 0.0 {
        "0".to_string()
    } else {
        format!("{x}")
    }
}

fn open_output(path: Option<&Path>) -> Result<csv::Writer<Box<dyn Write>>, CliError> {
    let mut out: Box<dyn Write> = match path {
        Some(p) => {
            Box::new(BufWriter::new(File::create(p).map_err(|e| {
                CliError::Config(format!("cannot create {}: {e}", p.display()))
            })?))
        }
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    writeln!(out, "{HEADER_COMMENT}")?;
    Ok(csv::Writer::from_writer(out))
}

fn solve_header(m: usize) -> Vec<String> {
    let mut h = vec!["scheme".to_string(), "sum_rate".to_string()];
    h.extend((1..=m + 1).map(|k| format!("R{k}")));
    h.extend((1..=m).map(|i| format!("beta{i}")));
    h.extend((1..=m).map(|i| format!("cdf{i}")));
    h.extend(["permutation", "iterations", "wall_time_s"].map(String::from));
    h
}

/// One solve row. Per-relay columns follow the input order of the relays,
/// and the permutation lists input relay numbers (from 1) in decompression
/// order.
fn solve_row(cfg: &Config, s: &SchemeSolution, seconds: Option<f64>) -> Vec<String> {
    let m = cfg.num_relays();
    let mut row = vec![s.scheme.name().to_string(), num(s.sum_rate)];
    let mut internal = vec![0; m];
    for (r, &i) in cfg.original_index().iter().enumerate() {
        internal[i] = r;
    }
    match &s.allocation {
        Some(a) => {
            row.extend(a.layer_rates.iter().map(|&x| num(x)));
            row.extend(internal.iter().map(|&r| num(a.beta[r])));
            row.extend(internal.iter().map(|&r| num(a.df_split[r])));
            let order: Vec<String> = s
                .permutation
                .order()
                .iter()
                .map(|&r| (cfg.original_index()[r] + 1).to_string())
                .collect();
            row.push(order.join("-"));
        }
        None => row.extend(std::iter::repeat_n(String::new(), 3 * m + 2)),
    }
    row.push(s.diagnostics.iterations().to_string());
    row.push(seconds.map(num).unwrap_or_default());
    row
}

pub fn cmd_solve(exp: &ExperimentConfig, out: Option<&Path>, settings: &Settings) -> Result<(), CliError> {
    let cfg = exp.network()?;
    let mut w = open_output(out)?;
    w.write_record(solve_header(cfg.num_relays()))?;
    for &scheme in &exp.schemes {
        let start = Instant::now();
        let s = match solve_scheme(&cfg, scheme, settings) {
            Ok(s) => s,
            Err(e) => {
                w.flush()?;
                return Err(e);
            }
        };
        let seconds = settings.timing.then(|| start.elapsed().as_secs_f64());
        w.write_record(solve_row(&cfg, &s, seconds))?;
    }
    w.flush()?;
    Ok(())
}

/// Sweep points are solved concurrently; rows come out in sweep order.
pub fn cmd_sweep(exp: &ExperimentConfig, out: Option<&Path>, settings: &Settings) -> Result<(), CliError> {
    let sweep = exp
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::Config("the sweep command needs a sweep block".into()))?;
    let values = sweep.values();
    let configs: Vec<Config> = values.iter().map(|&v| exp.at(v)).collect::<Result<_, _>>()?;
    let tasks: Vec<(usize, SchemeName)> = (0..values.len())
        .flat_map(|i| exp.schemes.iter().map(move |&s| (i, s)))
        .collect();
    let results: Vec<Result<f64, CliError>> = tasks
        .par_iter()
        .map(|&(i, scheme)| solve_scheme(&configs[i], scheme, settings).map(|s| s.sum_rate))
        .collect();
    let mut w = open_output(out)?;
    w.write_record(["sweep_value", "scheme", "sum_rate"])?;
    for (&(i, scheme), result) in tasks.iter().zip(results) {
        match result {
            Ok(rate) => w.write_record([num(values[i]), scheme_label(scheme).to_string(), num(rate)])?,
            Err(e) => {
                w.flush()?;
                return Err(e);
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn scheme_label(s: SchemeName) -> &'static str {
    match s {
        SchemeName::Hybrid => "hybrid",
        SchemeName::Cf => "cf",
        SchemeName::DfMl => "df-ml",
        SchemeName::DfSl => "df-sl",
        SchemeName::Cutset => "cutset",
    }
}

/// Returns whether the hybrid solver came within tolerance of the oracle.
pub fn cmd_oracle(
    exp: &ExperimentConfig,
    out: Option<&Path>,
    grid_points: usize,
    settings: &Settings,
) -> Result<bool, CliError> {
    let cfg = exp.network()?;
    let spec = GridSpec {
        points_per_dimension: grid_points,
        ..GridSpec::default()
    };
    let oracle = grid_search_all(&cfg, &spec)?.sum_rate;
    let hybrid = solve_scheme(&cfg, SchemeName::Hybrid, settings)?.sum_rate;
    let gap = hybrid - oracle;
    let mut w = open_output(out)?;
    w.write_record(["oracle_rate", "hybrid_rate", "gap"])?;
    w.write_record([num(oracle), num(hybrid), num(gap)])?;
    w.flush()?;
    Ok(gap >= -oracle_tolerance(cfg.num_relays()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_follow_the_input_order() {
        // Sorted internally as (0 dB, 10 dB); the input lists 10 dB first.
        let exp: ExperimentConfig =
            serde_json::from_str(r#"{"gains_db": [10, 0], "backhaul": [2, 0.5], "schemes": ["df-sl"]}"#).unwrap();
        let cfg = exp.network().unwrap();
        let settings = Settings { seed: 0, timing: false };
        let s = solve_scheme(&cfg, SchemeName::DfSl, &settings).unwrap();
        let row = solve_row(&cfg, &s, None);
        let header = solve_header(2);
        assert_eq!(row.len(), header.len());
        let col = |name: &str| &row[header.iter().position(|h| h == name).unwrap()];
        assert_eq!(col("cdf1"), &num(s.allocation.as_ref().unwrap().df_split[1]));
        assert_eq!(col("cdf2"), &num(s.allocation.as_ref().unwrap().df_split[0]));
        assert_eq!(col("wall_time_s"), "");
    }

    #[test]
    fn numbers_are_canonical() {
        assert_eq!(num(-0.0), "0");
        assert_eq!(num(2.0), "2");
        assert_eq!(num(0.1 + 0.2), "0.30000000000000004");
    }
}
