//! One function per experiment: run it, write its files under the output
//! directory, and return the statistics for `summary.json` together with a
//! one-line summary.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use bdlab::continuous::{sample_points, write_hk_csv, write_points_csv};
use bdlab::experiments::{
    bbd_experiment, convergence_experiment, derive_seed, heights_experiment, moment_check, phase_sweep,
    rd_limit_check, sample_h_k, BbdSweepConfig, ConvergenceConfig, HeightsConfig, MomentConfig, RdConfig, Sticking,
    SweepConfig, BBD_CSV_HEADER, HEIGHTS_CSV_HEADER, MOMENTS_CSV_HEADER,
};
use bdlab::forward;
use bdlab::output::fmt_f64;
use bdlab::stats::{Ecdf, Moments};
use bdlab::{FieldSeed, HeightDistribution};

use crate::config::{Experiment, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Model(#[from] bdlab::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

type Result<T> = std::result::Result<T, RunError>;

pub struct Report {
    pub results: Value,
    pub line: String,
}

/// Creates `dir/name`, hands a buffered writer to `body` and flushes.
pub fn write_file<F>(dir: &Path, name: &str, body: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<File>) -> io::Result<()>,
{
    let path = dir.join(name);
    let io_err = |source| RunError::Io {
        path: path.clone(),
        source,
    };
    let mut w = BufWriter::new(File::create(&path).map_err(io_err)?);
    body(&mut w).and_then(|()| w.flush()).map_err(io_err)
}

fn pareto(cfg: &RunConfig) -> Result<HeightDistribution> {
    Ok(HeightDistribution::pareto(cfg.alpha, 1.0)?)
}

fn first_p(cfg: &RunConfig) -> f64 {
    cfg.p.as_ref().map_or(1.0, |p| p[0])
}

pub fn run(cfg: &RunConfig) -> Result<Report> {
    match cfg.experiment {
        Experiment::Forward => run_forward(cfg),
        Experiment::Height => run_height(cfg),
        Experiment::Convergence => run_convergence(cfg),
        Experiment::PhaseSweep => run_phase_sweep(cfg),
        Experiment::Bbd => run_bbd(cfg),
        Experiment::Moments => run_moments(cfg),
        Experiment::ContinuousSample => run_continuous(cfg),
        Experiment::RdCheck => run_rd_check(cfg),
    }
}

fn run_forward(cfg: &RunConfig) -> Result<Report> {
    let dist = pareto(cfg)?;
    let p = first_p(cfg);
    let horizon = cfg.horizons[0];
    let (intf, log) = forward::run(FieldSeed(cfg.seed), cfg.geometry, horizon, p, &dist)?;
    write_file(&cfg.out, "blocklog.csv", |w| log.write_csv(w))?;
    let first = cfg.geometry.first_site();
    write_file(&cfg.out, "interface.csv", |w| {
        writeln!(w, "site,height")?;
        for (i, h) in intf.heights().iter().enumerate() {
            writeln!(w, "{},{}", first + i as i64, fmt_f64(*h))?;
        }
        Ok(())
    })?;
    let hs = intf.heights();
    let max = hs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean = hs.iter().sum::<f64>() / hs.len() as f64;
    Ok(Report {
        results: json!({ "blocks": log.records.len(), "mean_height": mean, "max_height": max }),
        line: format!("forward: {} blocks on {} sites, mean height {mean:.4}, max {max:.4}", log.records.len(), hs.len()),
    })
}

fn run_height(cfg: &RunConfig) -> Result<Report> {
    let sticking = match (&cfg.p, &cfg.zeta) {
        (_, Some(z)) => Sticking::Zeta(z[0]),
        (p, None) => Sticking::Fixed(p.as_ref().map_or(1.0, |p| p[0])),
    };
    let rows = heights_experiment(&HeightsConfig {
        alpha: cfg.alpha,
        x_min: 1.0,
        sticking,
        horizons: cfg.horizons.clone(),
        reps: cfg.reps,
        seed: cfg.seed,
    })?;
    write_file(&cfg.out, "heights.csv", |w| {
        writeln!(w, "{HEIGHTS_CSV_HEADER}")?;
        for r in &rows {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                r.rep,
                fmt_f64(r.horizon),
                fmt_f64(r.p),
                fmt_f64(r.alpha),
                fmt_f64(r.height),
                fmt_f64(r.normalized)
            )?;
        }
        Ok(())
    })?;
    let mut per_t = Vec::new();
    for &horizon in &cfg.horizons {
        let hs: Vec<f64> = rows.iter().filter(|r| r.horizon == horizon).map(|r| r.height).collect();
        let norm: Vec<f64> = rows.iter().filter(|r| r.horizon == horizon).map(|r| r.normalized).collect();
        let m: Moments = hs.iter().copied().collect();
        let median_normalized = if norm.iter().any(|v| v.is_nan()) {
            f64::NAN
        } else {
            Ecdf::new(norm)?.median()
        };
        per_t.push(json!({
            "T": horizon,
            "mean_height": m.mean(),
            "median_height": Ecdf::new(hs)?.median(),
            "median_normalized": median_normalized,
        }));
    }
    Ok(Report {
        line: format!("height: {} rows over T = {:?}", rows.len(), cfg.horizons),
        results: json!({ "rows": rows.len(), "per_T": per_t }),
    })
}

fn run_convergence(cfg: &RunConfig) -> Result<Report> {
    let p = first_p(cfg);
    let rep = convergence_experiment(&ConvergenceConfig {
        alpha: cfg.alpha,
        p,
        horizons: cfg.horizons.clone(),
        reps: cfg.reps,
        k: cfg.k,
        seed: cfg.seed,
        remainder_reps: cfg.reps.min(200),
    })?;
    write_file(&cfg.out, "convergence.csv", |w| {
        writeln!(w, "T,normalizer,ks,median_normalized,reps")?;
        for r in &rep.rows {
            writeln!(
                w,
                "{},{},{},{},{}",
                fmt_f64(r.horizon),
                fmt_f64(r.normalizer),
                fmt_f64(r.ks),
                fmt_f64(r.median_normalized),
                r.reps
            )?;
        }
        Ok(())
    })?;
    write_file(&cfg.out, "heights.csv", |w| {
        writeln!(w, "{HEIGHTS_CSV_HEADER}")?;
        for (row, values) in rep.rows.iter().zip(&rep.normalized) {
            for (i, v) in values.iter().enumerate() {
                writeln!(
                    w,
                    "{i},{},{},{},{},{}",
                    fmt_f64(row.horizon),
                    fmt_f64(p),
                    fmt_f64(cfg.alpha),
                    fmt_f64(v * row.normalizer),
                    fmt_f64(*v)
                )?;
            }
        }
        Ok(())
    })?;
    write_file(&cfg.out, "hk.csv", |w| write_hk_csv(w, cfg.k, &rep.reference))?;
    let ks: Vec<String> = rep.rows.iter().map(|r| format!("{:.4}", r.ks)).collect();
    Ok(Report {
        line: format!("convergence: KS to H_{} over T = {:?}: {}", cfg.k, cfg.horizons, ks.join(", ")),
        results: serde_json::to_value(&rep).expect("plain data"),
    })
}

fn run_phase_sweep(cfg: &RunConfig) -> Result<Report> {
    let rep = phase_sweep(&SweepConfig {
        alpha: cfg.alpha,
        zetas: cfg.zeta.clone().unwrap_or_default(),
        horizons: cfg.horizons.clone(),
        reps: cfg.reps,
        seed: cfg.seed,
        bootstrap: 1000,
    })?;
    write_file(&cfg.out, "phase_sweep.csv", |w| {
        writeln!(w, "zeta,T,p,median,q1,q3,reps")?;
        for c in &rep.cells {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                fmt_f64(c.zeta),
                fmt_f64(c.horizon),
                fmt_f64(c.p),
                fmt_f64(c.median),
                fmt_f64(c.q1),
                fmt_f64(c.q3),
                c.reps
            )?;
        }
        Ok(())
    })?;
    write_file(&cfg.out, "slopes.csv", |w| {
        writeln!(w, "zeta,slope,ci_lo,ci_hi,median_spread")?;
        for f in &rep.fits {
            writeln!(
                w,
                "{},{},{},{},{}",
                fmt_f64(f.zeta),
                fmt_f64(f.fit.slope),
                fmt_f64(f.fit.ci_lo),
                fmt_f64(f.fit.ci_hi),
                fmt_f64(f.median_spread)
            )?;
        }
        Ok(())
    })?;
    let slopes: Vec<String> = rep
        .fits
        .iter()
        .map(|f| format!("zeta={}: {:.3} [{:.3}, {:.3}]", f.zeta, f.fit.slope, f.fit.ci_lo, f.fit.ci_hi))
        .collect();
    Ok(Report {
        line: format!("phase-sweep (zeta_c = {}): {}", rep.zeta_critical, slopes.join("; ")),
        results: serde_json::to_value(&rep).expect("plain data"),
    })
}

fn run_bbd(cfg: &RunConfig) -> Result<Report> {
    let zeta = cfg.zeta.as_ref().map_or(0.0, |z| z[0]);
    let cells = cfg
        .sigma
        .iter()
        .flat_map(|&s| cfg.horizons.iter().map(move |&t| (s, t)))
        .collect();
    let rep = bbd_experiment(&BbdSweepConfig {
        cells,
        zeta,
        reps: cfg.reps,
        seed: cfg.seed,
    })?;
    write_file(&cfg.out, "bbd.csv", |w| {
        writeln!(w, "{BBD_CSV_HEADER}")?;
        for r in &rep.rows {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                fmt_f64(r.sigma),
                fmt_f64(r.p),
                fmt_f64(r.horizon),
                fmt_f64(r.zeta),
                r.rep,
                fmt_f64(r.height)
            )?;
        }
        Ok(())
    })?;
    let fmt_exp = |e: Option<f64>| e.map_or_else(|| "n/a".to_string(), |e| format!("{e:.3}"));
    let series: Vec<String> = rep
        .series_exponents
        .iter()
        .map(|&(s, e)| format!("sigma={s}: {}", fmt_exp(e)))
        .collect();
    Ok(Report {
        line: format!(
            "bbd: exponent {} pooled, {} (cap {:.4})",
            fmt_exp(rep.exponent),
            series.join(", "),
            rep.exponent_cap
        ),
        results: serde_json::to_value(&rep).expect("plain data"),
    })
}

fn run_moments(cfg: &RunConfig) -> Result<Report> {
    let rows = moment_check(&MomentConfig {
        ps: cfg.p.clone().unwrap_or_default(),
        horizons: cfg.horizons.clone(),
        reps: cfg.reps,
        seed: cfg.seed,
    })?;
    write_file(&cfg.out, "moments.csv", |w| {
        writeln!(w, "{MOMENTS_CSV_HEADER}")?;
        for r in &rows {
            let vals = [
                r.p,
                r.horizon,
                r.mean_interior,
                r.se_interior,
                r.target_interior,
                r.mean_boundary,
                r.se_boundary,
                r.target_boundary,
                r.mean_split,
                r.se_split,
                r.target_split,
            ];
            let mut fields: Vec<String> = vals.iter().map(|v| fmt_f64(*v)).collect();
            fields.insert(2, r.reps.to_string());
            writeln!(w, "{}", fields.join(","))?;
        }
        Ok(())
    })?;
    let line = rows
        .iter()
        .map(|r| {
            format!(
                "p={} T={}: N_int {:.4} (target {:.4}), N_bd {:.4} (target {:.4}), split {:.4} (target {:.4})",
                r.p, r.horizon, r.mean_interior, r.target_interior, r.mean_boundary, r.target_boundary, r.mean_split,
                r.target_split
            )
        })
        .collect::<Vec<_>>()
        .join("; ");
    Ok(Report {
        line: format!("moments: {line}"),
        results: json!({ "rows": rows }),
    })
}

fn run_continuous(cfg: &RunConfig) -> Result<Report> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, "continuous-sample", &[]));
    let points = sample_points(cfg.k, cfg.alpha, &mut rng)?;
    write_file(&cfg.out, "samples.csv", |w| write_points_csv(w, &points))?;
    let values = sample_h_k(cfg.alpha, cfg.k, cfg.reps, cfg.seed, "continuous-hk")?;
    write_file(&cfg.out, "hk.csv", |w| write_hk_csv(w, cfg.k, &values))?;
    let ecdf = Ecdf::new(values)?;
    Ok(Report {
        line: format!("continuous-sample: median H_{} = {:.4} over {} replicates", cfg.k, ecdf.median(), cfg.reps),
        results: json!({
            "median": ecdf.median(),
            "q1": ecdf.quantile(0.25),
            "q3": ecdf.quantile(0.75),
        }),
    })
}

fn run_rd_check(cfg: &RunConfig) -> Result<Report> {
    let rep = rd_limit_check(&RdConfig {
        alpha: cfg.alpha,
        horizons: cfg.horizons.clone(),
        reps: cfg.reps,
        seed: cfg.seed,
    })?;
    write_file(&cfg.out, "rd_check.csv", |w| {
        writeln!(w, "T_lo,T_hi,ks")?;
        for pair in &rep.pairs {
            writeln!(w, "{},{},{}", fmt_f64(pair.t_lo), fmt_f64(pair.t_hi), fmt_f64(pair.ks))?;
        }
        Ok(())
    })?;
    let ks: Vec<String> = rep
        .pairs
        .iter()
        .map(|p| format!("KS(T={} vs {}) = {:.4}", p.t_lo, p.t_hi, p.ks))
        .collect();
    Ok(Report {
        line: format!("rd-check: {}", if ks.is_empty() { "a single T, no pairs".into() } else { ks.join(", ") }),
        results: serde_json::to_value(&rep).expect("plain data"),
    })
}
