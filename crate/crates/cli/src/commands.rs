use std::env;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use steering_core::criteria::{self, critical_alpha, db_bound, MeasurementMode, SweepSpec};
use steering_core::entropy::{eur_bound_renyi2, eur_bound_tsallis};
use steering_core::expio::{
    self, evaluate_with_errors, load_counts, synthesize_counts, AnalysisOptions, ReportRecord,
    Synthesis,
};
use steering_core::montecarlo::{
    violation_histogram, violation_probability, violation_probability_factors, write_estimates_csv,
    write_histogram_csv, MCConfig, MCEstimate, SamplerScheme,
};
use steering_core::qcore::{mub_settings, nom_settings, Settings, WernerParam};
use steering_core::{Criterion, Order};

use crate::cli::*;
use crate::error::CliError;

pub const OUT_DIR_ENV: &str = "STEERING_OUT_DIR";

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn resolve(path: &Path) -> PathBuf {
    match env::var_os(OUT_DIR_ENV) {
        Some(dir) if path.is_relative() && !dir.is_empty() => Path::new(&dir).join(path),
        _ => path.to_path_buf(),
    }
}

fn create(path: &Path) -> Result<Box<dyn Write>, CliError> {
    let path = resolve(path);
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    Ok(Box::new(BufWriter::new(File::create(path)?)))
}

fn sink(out: &OutputArgs) -> Result<Box<dyn Write>, CliError> {
    match &out.output {
        Some(p) => create(p),
        None => Ok(Box::new(io::stdout().lock())),
    }
}

fn emit_json(out: &OutputArgs, value: &Value) -> Result<(), CliError> {
    let mut w = sink(out)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn parse_f64(text: &str, what: &str) -> Result<f64, CliError> {
    text.trim()
        .parse()
        .map_err(|_| usage(format!("{what}: '{text}' is not a number")))
}

/// `START:STOP:STEP` (inclusive), `a,b,c`, or a single value.
pub fn parse_grid(text: &str, what: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = text.split(':').collect();
    match parts.as_slice() {
        [start, stop, step] => {
            let (start, stop, step) = (
                parse_f64(start, what)?,
                parse_f64(stop, what)?,
                parse_f64(step, what)?,
            );
            if !(step > 0.0
                && stop >= start
                && step.is_finite()
                && start.is_finite()
                && stop.is_finite())
            {
                return Err(usage(format!(
                    "{what}: need STEP > 0 and STOP >= START in '{text}'"
                )));
            }
            let mut n = ((stop - start) / step).round() as usize;
            if start + n as f64 * step > stop + 1e-9 * step {
                n -= 1;
            }
            Ok((0..=n).map(|k| start + k as f64 * step).collect())
        }
        [_] => text.split(',').map(|t| parse_f64(t, what)).collect(),
        _ => Err(usage(format!(
            "{what}: expected START:STOP:STEP, a comma list or a value, got '{text}'"
        ))),
    }
}

fn parse_criteria(list: Option<&str>, m: usize) -> Result<Vec<Criterion>, CliError> {
    let criteria: Vec<Criterion> = match list {
        Some(text) => text
            .split(',')
            .map(|t| t.parse::<Criterion>())
            .collect::<Result<_, _>>()?,
        None if m == 2 => vec![
            Criterion::SHANNON,
            Criterion::TSALLIS2,
            Criterion::RENYI_HALF_INF,
            Criterion::DimensionBounded,
        ],
        None => vec![
            Criterion::SHANNON,
            Criterion::TSALLIS2,
            Criterion::DimensionBounded,
        ],
    };
    if criteria.is_empty() {
        return Err(usage("empty criteria list"));
    }
    if let Some(c) = criteria.iter().find(|c| !c.supports_settings(m)) {
        return Err(usage(format!("criterion {c} is not defined for m={m}")));
    }
    Ok(criteria)
}

fn measurement_mode(mode: Mode) -> MeasurementMode {
    match mode {
        Mode::Mub => MeasurementMode::Mub,
        Mode::Nom => MeasurementMode::Nom,
    }
}

fn settings_for(mode: Mode, m: usize, alpha: f64, phi: f64) -> Result<Settings, CliError> {
    Ok(match mode {
        Mode::Mub => mub_settings(m, alpha, phi)?,
        Mode::Nom => nom_settings(m)?,
    })
}

pub fn sweep(a: &SweepArgs) -> Result<(), CliError> {
    let m = a.m as usize;
    let spec = SweepSpec {
        mu: a.mu,
        phi_deg: a.phi,
        m,
        alphas_deg: parse_grid(&a.alpha_grid, "--alpha-grid")?,
        mode: measurement_mode(a.mode),
    };
    let criteria = parse_criteria(a.criteria.as_deref(), m)?;
    let rows = criteria::sweep(&spec, &criteria)?;
    match a.format {
        Format::Csv => {
            let mut w = sink(&a.out)?;
            criteria::write_sweep_csv(&rows, &mut w)?;
            w.flush()?;
            Ok(())
        }
        Format::Json => emit_json(&a.out, &serde_json::to_value(&rows)?),
    }
}

fn scheme_for(class: Class, scheme: Option<Scheme>) -> Result<SamplerScheme, CliError> {
    let resolved = match (class, scheme) {
        (Class::Rom, None) | (Class::Rom, Some(Scheme::Dihedral)) => SamplerScheme::UniformDihedral,
        (Class::Rom, Some(Scheme::Haar)) => SamplerScheme::Haar,
        (Class::Crm, None) | (Class::Crm, Some(Scheme::Isotropic)) => {
            SamplerScheme::IsotropicVectors
        }
        (class, Some(scheme)) => {
            return Err(usage(
                format!("scheme {scheme:?} is not a {class:?} sampler").to_lowercase(),
            ));
        }
    };
    Ok(resolved)
}

pub fn mc(a: &McArgs) -> Result<(), CliError> {
    let mu_grid = parse_grid(&a.mu_grid, "--mu-grid")?;
    let factors = parse_grid(&a.bound_factor, "--bound-factor")?;
    let cfg = MCConfig {
        m: a.m as usize,
        scheme: scheme_for(a.class, a.scheme)?,
        mu_grid: mu_grid.clone(),
        samples: a.samples,
        bound_factor: factors[0],
        seed: a.seed,
    };
    cfg.validate()?;

    let estimates: Vec<MCEstimate> = if factors.len() == 1 {
        violation_probability(&cfg)?
    } else {
        let mut all = Vec::new();
        for &mu in &mu_grid {
            all.extend(violation_probability_factors(&cfg, mu, &factors)?);
        }
        all
    };

    if let (Some(bins), Some(path)) = (a.hist, &a.hist_output) {
        if mu_grid.len() != 1 || factors.len() != 1 {
            return Err(usage("--hist needs a single mu and a single bound factor"));
        }
        let hist = violation_histogram(&cfg, mu_grid[0], bins)?;
        let mut w = create(path)?;
        write_histogram_csv(&hist, &mut w)?;
        w.flush()?;
    }

    match a.format {
        Format::Csv => {
            let mut w = sink(&a.out)?;
            write_estimates_csv(&estimates, &mut w)?;
            w.flush()?;
            Ok(())
        }
        Format::Json => emit_json(&a.out, &serde_json::to_value(&estimates)?),
    }
}

fn threshold_criterion(a: &ThresholdArgs) -> Result<Criterion, CliError> {
    let name = a.criterion.trim();
    let parsed = match (name, a.q, &a.rs) {
        ("tsallis", Some(q), None) => Criterion::Tsallis(Order::new(q)?),
        ("tsallis", None, _) => return Err(usage("criterion tsallis needs --q")),
        ("renyi", None, Some(rs)) => {
            let (r, s) = rs
                .split_once(',')
                .ok_or_else(|| usage(format!("--rs expects R,S, got '{rs}'")))?;
            format!("renyi{}:{}", r.trim(), s.trim()).parse()?
        }
        (_, Some(_), _) => return Err(usage(format!("--q does not apply to criterion '{name}'"))),
        (_, _, Some(_)) => return Err(usage(format!("--rs does not apply to criterion '{name}'"))),
        _ => name.parse()?,
    };
    parsed.validate()?;
    Ok(parsed)
}

pub fn threshold(a: &ThresholdArgs) -> Result<(), CliError> {
    let c = threshold_criterion(a)?;
    let m = a.m as usize;
    if !c.supports_settings(m) {
        return Err(usage(format!("criterion {c} is not defined for m={m}")));
    }
    WernerParam::new(a.mu)?;
    let alpha = critical_alpha(c, a.mu, a.phi, m)?;
    emit_json(
        &a.out,
        &json!({
            "criterion": c.name(),
            "order": c.order_label(),
            "mu": a.mu,
            "phi_deg": a.phi,
            "m": m,
            "critical_alpha_deg": alpha,
        }),
    )
}

pub fn analyze(a: &AnalyzeArgs) -> Result<(), CliError> {
    let records = load_counts(&a.input)?;
    let m = records.len();
    let criteria = parse_criteria(a.criteria.as_deref(), m)?;
    let settings = if (2..=3).contains(&m) {
        Some(settings_for(a.mode, m, a.alpha, a.phi)?)
    } else {
        None
    };
    let options = AnalysisOptions {
        bootstrap: a.bootstrap,
        jitter_deg: a.jitter,
        seed: a.seed,
        settings,
        tsallis_bound: None,
    };
    let reports = evaluate_with_errors(&records, &criteria, &options)?;
    let records: Vec<ReportRecord> = reports.iter().map(ReportRecord::from).collect();
    emit_json(&a.out, &serde_json::to_value(&records)?)
}

pub fn bound(a: &BoundArgs) -> Result<(), CliError> {
    let m = a.m as usize;
    let value = if a.renyi2 {
        if m != 2 {
            return Err(usage("--renyi2 is the two-setting bound; use --m 2"));
        }
        json!({ "bound": "renyi", "m": 2, "value": eur_bound_renyi2() })
    } else if let Some(q) = a.q {
        let order = Order::new(q)?;
        json!({ "bound": "tsallis", "m": m, "q": q, "value": eur_bound_tsallis(order, m, None)? })
    } else {
        json!({ "bound": "dimension-bounded", "m": m, "d_a": a.da, "value": db_bound(m, a.da)? })
    };
    emit_json(&a.out, &value)
}

pub fn synth(a: &SynthArgs) -> Result<(), CliError> {
    let m = a.m as usize;
    let settings = settings_for(a.mode, m, a.alpha, a.phi)?;
    let mode = match a.poisson_seed {
        Some(seed) => Synthesis::Poisson { seed },
        None => Synthesis::Expected,
    };
    let records = synthesize_counts(&settings, WernerParam::new(a.mu)?, a.counts, mode)?;
    let mut w = sink(&a.out)?;
    expio::write_counts_csv(&records, &mut w)?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        assert_eq!(parse_grid("0:90:10", "g").unwrap().len(), 10);
        assert_eq!(parse_grid("0:90:10", "g").unwrap()[9], 90.0);
        let g = parse_grid("0.5:1.0:0.02", "g").unwrap();
        assert_eq!(g.len(), 26);
        assert!((g[25] - 1.0).abs() < 1e-12);
        assert_eq!(parse_grid("0:1:0.3", "g").unwrap().len(), 4);
        assert_eq!(parse_grid("1.0", "g").unwrap(), vec![1.0]);
        assert_eq!(parse_grid("1.0,1.1,1.2", "g").unwrap(), vec![1.0, 1.1, 1.2]);
        assert!(parse_grid("1:0:1", "g").is_err());
        assert!(parse_grid("0:1:0", "g").is_err());
        assert!(parse_grid("a", "g").is_err());
        assert!(parse_grid("0:1", "g").is_err());
    }

    #[test]
    fn default_criteria_follow_m() {
        assert_eq!(parse_criteria(None, 2).unwrap().len(), 4);
        assert_eq!(parse_criteria(None, 3).unwrap().len(), 3);
        assert!(parse_criteria(Some("renyi"), 3).is_err());
        assert!(parse_criteria(Some("shannon,bogus"), 2).is_err());
    }

    #[test]
    fn schemes_must_match_class() {
        assert_eq!(
            scheme_for(Class::Rom, None).unwrap(),
            SamplerScheme::UniformDihedral
        );
        assert_eq!(
            scheme_for(Class::Crm, None).unwrap(),
            SamplerScheme::IsotropicVectors
        );
        assert_eq!(
            scheme_for(Class::Rom, Some(Scheme::Haar)).unwrap(),
            SamplerScheme::Haar
        );
        assert!(scheme_for(Class::Crm, Some(Scheme::Haar)).is_err());
        assert!(scheme_for(Class::Rom, Some(Scheme::Isotropic)).is_err());
    }
}
