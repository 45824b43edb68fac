//! Coincidence counts: ingestion, conversion to probability tables, and
//! criterion evaluation with statistical and systematic error bars.
//!
//! Counts files are CSV with header `setting,a,b,counts`, outcomes `+1`/`-1`
//! and settings numbered contiguously from 1.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution as _, Poisson, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::criteria::{
    csv_err, db_steering, renyi_steering, tsallis_steering, Criterion, SteeringResult,
};
use crate::entropy::eur_bound_tsallis;
use crate::error::{invalid, Result, SteeringError};
use crate::montecarlo::sample_rng;
use crate::qcore::{BlochVector, JointTable, Outcome, Settings, WernerParam};

const COUNTS_HEADER: [&str; 4] = ["setting", "a", "b", "counts"];
/// Stream offset separating systematic replicates from statistical ones.
const SYSTEMATIC_STREAM: u64 = 1 << 63;

/// Coincidence counts n(a, b) for one pair of settings.
#[derive(Debug, Clone, PartialEq)]
pub struct CountsRecord {
    /// 1-based setting index.
    pub setting: usize,
    /// Indexed by [Alice outcome][Bob outcome], each ordered (+1, −1).
    pub counts: [[u64; 2]; 2],
    pub alice: Option<BlochVector>,
    pub bob: Option<BlochVector>,
}

impl CountsRecord {
    pub fn new(setting: usize, counts: [[u64; 2]; 2]) -> Self {
        Self {
            setting,
            counts,
            alice: None,
            bob: None,
        }
    }

    pub fn with_vectors(mut self, alice: BlochVector, bob: BlochVector) -> Self {
        self.alice = Some(alice);
        self.bob = Some(bob);
        self
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }
}

/// Statistical and systematic uncertainty of one parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorBudget {
    pub stat: f64,
    pub sys: f64,
    pub total: f64,
}

impl ErrorBudget {
    pub fn new(stat: f64, sys: f64) -> Self {
        Self {
            stat,
            sys,
            total: (stat * stat + sys * sys).sqrt(),
        }
    }

    pub fn zero() -> Self {
        Self::new(0.0, 0.0)
    }
}

pub fn load_counts(path: impl AsRef<Path>) -> Result<Vec<CountsRecord>> {
    parse_counts(File::open(path)?)
}

fn parse_error(line: u64, message: impl Into<String>) -> SteeringError {
    SteeringError::Parse {
        line,
        message: message.into(),
    }
}

/// Parses and validates a counts CSV.
pub fn parse_counts<R: Read>(reader: R) -> Result<Vec<CountsRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .comment(Some(b'#'))
        .from_reader(reader);
    let mut rows = rdr.records();
    let header = match rows.next() {
        None => {
            return Err(SteeringError::EmptyInput(
                "counts file has no header".into(),
            ))
        }
        Some(h) => h.map_err(|e| parse_error(1, e.to_string()))?,
    };
    if header.iter().collect::<Vec<_>>() != COUNTS_HEADER {
        let line = header.position().map_or(1, |p| p.line());
        return Err(parse_error(
            line,
            format!("expected header '{}'", COUNTS_HEADER.join(",")),
        ));
    }

    let mut cells: BTreeMap<usize, [[Option<u64>; 2]; 2]> = BTreeMap::new();
    for row in rows {
        let row = row.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_error(line, e.to_string())
        })?;
        let line = row.position().map_or(0, |p| p.line());
        if row.len() != 4 {
            return Err(parse_error(
                line,
                format!("expected 4 fields, found {}", row.len()),
            ));
        }
        let setting: usize = row[0].parse().ok().filter(|&s| s >= 1).ok_or_else(|| {
            parse_error(
                line,
                format!("setting must be a positive integer, got '{}'", &row[0]),
            )
        })?;
        let outcome = |field: &str| {
            field
                .parse::<i64>()
                .ok()
                .and_then(Outcome::from_sign)
                .ok_or_else(|| {
                    parse_error(line, format!("outcome must be +1 or -1, got '{field}'"))
                })
        };
        let (a, b) = (outcome(&row[1])?, outcome(&row[2])?);
        let count: u64 = row[3].parse().map_err(|_| {
            parse_error(
                line,
                format!("count must be a non-negative integer, got '{}'", &row[3]),
            )
        })?;
        let slot = &mut cells.entry(setting).or_default()[a.index()][b.index()];
        if slot.is_some() {
            return Err(parse_error(
                line,
                format!(
                    "duplicate entry for setting {setting}, a={}, b={}",
                    a.sign(),
                    b.sign()
                ),
            ));
        }
        *slot = Some(count);
    }

    if cells.is_empty() {
        return Err(SteeringError::EmptyInput(
            "counts file has no data rows".into(),
        ));
    }
    let mut records = Vec::with_capacity(cells.len());
    for (k, (setting, table)) in cells.into_iter().enumerate() {
        if setting != k + 1 {
            return Err(SteeringError::InvalidData(format!(
                "settings must be numbered contiguously from 1; setting {} is missing",
                k + 1
            )));
        }
        let counts = table.map(|row| row.map(|c| c.unwrap_or(0)));
        let rec = CountsRecord::new(setting, counts);
        if rec.total() == 0 {
            return Err(SteeringError::InvalidData(format!(
                "setting {setting} has no counts"
            )));
        }
        records.push(rec);
    }
    Ok(records)
}

pub fn write_counts_csv<W: Write>(records: &[CountsRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(COUNTS_HEADER).map_err(csv_err)?;
    for r in records {
        for a in Outcome::ALL {
            for b in Outcome::ALL {
                w.write_record([
                    r.setting.to_string(),
                    format!("{:+}", a.sign() as i64),
                    format!("{:+}", b.sign() as i64),
                    r.counts[a.index()][b.index()].to_string(),
                ])
                .map_err(csv_err)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Maximum-likelihood table p = n/Σn.
pub fn counts_to_table(rec: &CountsRecord) -> Result<JointTable> {
    let total = rec.total();
    if total == 0 {
        return Err(SteeringError::InvalidTable(format!(
            "setting {} has no counts",
            rec.setting
        )));
    }
    let n = total as f64;
    JointTable::new(rec.setting, rec.counts.map(|row| row.map(|c| c as f64 / n)))
}

/// How counts are generated by [`synthesize_counts`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Synthesis {
    /// Expected counts rounded to the nearest integer.
    Expected,
    /// Poisson draws around the expected counts.
    Poisson { seed: u64 },
}

/// Counts for `per_setting` coincidences per setting pair of a Werner state.
pub fn synthesize_counts(
    settings: &Settings,
    mu: WernerParam,
    per_setting: u64,
    mode: Synthesis,
) -> Result<Vec<CountsRecord>> {
    let tables = settings.werner_tables(mu)?;
    tables
        .iter()
        .zip(settings.pairs())
        .enumerate()
        .map(|(k, (t, (u, v)))| {
            let mut rng = match mode {
                Synthesis::Poisson { seed } => Some(sample_rng(seed, k as u64)),
                Synthesis::Expected => None,
            };
            let counts = t.entries().map(|row| {
                row.map(|p| {
                    let mean = p * per_setting as f64;
                    match rng.as_mut() {
                        Some(rng) => poisson(rng, mean),
                        None => mean.round() as u64,
                    }
                })
            });
            Ok(CountsRecord::new(k + 1, counts).with_vectors(*u, *v))
        })
        .collect()
}

fn poisson<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).map_or(0, |d| d.sample(rng) as u64)
}

/// Error-analysis knobs.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisOptions {
    /// Poisson bootstrap replicates (0 disables the statistical error).
    pub bootstrap: usize,
    /// Width of the Gaussian angular jitter on Bob's directions, degrees
    /// (0 disables the systematic error).
    pub jitter_deg: f64,
    pub seed: u64,
    /// Measurement directions of the records, paired by setting.
    pub settings: Option<Settings>,
    /// Tsallis uncertainty bound for measurement sets without a built-in one.
    pub tsallis_bound: Option<f64>,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            bootstrap: 1000,
            jitter_deg: 0.1,
            seed: 0,
            settings: None,
            tsallis_bound: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionReport {
    pub result: SteeringResult,
    pub errors: ErrorBudget,
}

/// Flat JSON record of a [`CriterionReport`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRecord {
    pub criterion: &'static str,
    pub order: String,
    pub value: f64,
    pub stat_err: f64,
    pub sys_err: f64,
    pub total_err: f64,
    pub steerable: bool,
}

impl From<&CriterionReport> for ReportRecord {
    fn from(r: &CriterionReport) -> Self {
        Self {
            criterion: r.result.criterion.name(),
            order: r.result.order.clone(),
            value: r.result.value,
            stat_err: r.errors.stat,
            sys_err: r.errors.sys,
            total_err: r.errors.total,
            steerable: r.result.steerable,
        }
    }
}

/// Settings of the records: explicit option first, otherwise the vectors
/// carried by the records themselves.
fn resolve_settings(
    records: &[CountsRecord],
    explicit: Option<&Settings>,
) -> Result<Option<Settings>> {
    if let Some(s) = explicit {
        if s.len() != records.len() {
            return Err(SteeringError::SettingsMismatch(format!(
                "{} measurement pairs supplied for {} recorded settings",
                s.len(),
                records.len()
            )));
        }
        return Ok(Some(s.clone()));
    }
    let alice: Option<Vec<_>> = records.iter().map(|r| r.alice).collect();
    let bob: Option<Vec<_>> = records.iter().map(|r| r.bob).collect();
    match (alice, bob) {
        (Some(a), Some(b)) => Settings::new(a, b).map(Some),
        _ => Ok(None),
    }
}

/// Least-squares Werner visibility from paired correlations,
/// E_k ≈ −μ (u_k·v_k), clamped to [0, 1].
pub fn fit_werner_mu(tables: &[JointTable], settings: &Settings) -> Result<f64> {
    let (num, den) = tables
        .iter()
        .zip(settings.pairs())
        .fold((0.0, 0.0), |(n, d), (t, (u, v))| {
            let overlap = u.dot(v);
            (n - t.correlation() * overlap, d + overlap * overlap)
        });
    if den <= 0.0 {
        return Err(SteeringError::Unsupported(
            "visibility fit needs at least one non-orthogonal setting pair".into(),
        ));
    }
    Ok((num / den).clamp(0.0, 1.0))
}

struct Evaluator<'a> {
    criteria: &'a [Criterion],
    tsallis_bound: Option<f64>,
}

impl Evaluator<'_> {
    fn values(
        &self,
        tables: &[JointTable],
        settings: Option<&Settings>,
    ) -> Result<Vec<SteeringResult>> {
        let m = tables.len();
        self.criteria
            .iter()
            .map(|&c| match c {
                Criterion::Tsallis(q) => {
                    tsallis_steering(tables, q, eur_bound_tsallis(q, m, self.tsallis_bound)?)
                }
                Criterion::Renyi { r, s } => renyi_steering(tables, r, s),
                Criterion::DimensionBounded => {
                    let settings = settings.ok_or_else(|| {
                        SteeringError::SettingsMismatch(
                            "dimension-bounded criterion needs measurement directions".into(),
                        )
                    })?;
                    let mu = WernerParam::new(fit_werner_mu(tables, settings)?)?;
                    db_steering(settings, mu)
                }
            })
            .collect()
    }
}

/// Gaussian tangent-plane jitter of width `sigma_rad` applied to a unit vector.
pub fn jitter_direction<R: Rng + ?Sized>(
    rng: &mut R,
    v: &BlochVector,
    sigma_rad: f64,
) -> BlochVector {
    let helper = if v.x.abs() < 0.9 {
        BlochVector::X
    } else {
        BlochVector::Y
    };
    let e1 = (helper - *v * helper.dot(v))
        .normalized()
        .unwrap_or(BlochVector::Z);
    let e2 = v.cross(&e1);
    let g1: f64 = rng.sample(StandardNormal);
    let g2: f64 = rng.sample(StandardNormal);
    (*v + (e1 * g1 + e2 * g2) * sigma_rad)
        .normalized()
        .unwrap_or(*v)
}

/// Table seen if Bob had measured `v_new` instead of `v`, under the Werner
/// response E = −μ u·v with marginals held fixed.
fn shifted_table(
    t: &JointTable,
    mu: f64,
    u: &BlochVector,
    v: &BlochVector,
    v_new: &BlochVector,
) -> Result<JointTable> {
    let delta = -mu * u.dot(&(*v_new - *v));
    let mut p = *t.entries();
    for a in Outcome::ALL {
        for b in Outcome::ALL {
            let cell = &mut p[a.index()][b.index()];
            *cell = (*cell + a.sign() * b.sign() * delta / 4.0).clamp(0.0, 1.0);
        }
    }
    let total: f64 = p.iter().flatten().sum();
    JointTable::new(t.setting, p.map(|row| row.map(|x| x / total)))
}

fn std_dev(samples: &[f64]) -> f64 {
    if samples.len() < 2 {
        return 0.0;
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    (samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

fn column_std(replicates: &[Vec<f64>], k: usize) -> f64 {
    std_dev(&replicates.iter().map(|r| r[k]).collect::<Vec<_>>())
}

/// Point estimate and error budget for each criterion.
///
/// The statistical error is the standard deviation over `bootstrap` Poisson
/// resamplings of every count; the systematic error is the standard deviation
/// over `bootstrap` evaluations with Bob's directions jittered by
/// `jitter_deg`.
pub fn evaluate_with_errors(
    records: &[CountsRecord],
    criteria: &[Criterion],
    options: &AnalysisOptions,
) -> Result<Vec<CriterionReport>> {
    if records.is_empty() {
        return Err(SteeringError::EmptyInput("no counts records".into()));
    }
    if !(options.jitter_deg >= 0.0 && options.jitter_deg.is_finite()) {
        return Err(invalid(format!(
            "jitter must be non-negative, got {}",
            options.jitter_deg
        )));
    }
    let m = records.len();
    for c in criteria {
        c.validate()?;
        if !c.supports_settings(m) {
            return Err(SteeringError::SettingsMismatch(format!(
                "{c} cannot be evaluated from {m} settings"
            )));
        }
    }
    let settings = resolve_settings(records, options.settings.as_ref())?;
    let eval = Evaluator {
        criteria,
        tsallis_bound: options.tsallis_bound,
    };
    let tables: Vec<JointTable> = records.iter().map(counts_to_table).collect::<Result<_>>()?;
    let point = eval.values(&tables, settings.as_ref())?;

    let stat_reps: Vec<Vec<f64>> = (0..options.bootstrap as u64)
        .into_par_iter()
        .map(|b| {
            let mut rng = sample_rng(options.seed, b);
            let resampled: Vec<CountsRecord> = records
                .iter()
                .map(|r| CountsRecord {
                    counts: r.counts.map(|row| row.map(|n| poisson(&mut rng, n as f64))),
                    ..r.clone()
                })
                .collect();
            if resampled.iter().any(|r| r.total() == 0) {
                return Ok(None);
            }
            let t: Vec<JointTable> = resampled
                .iter()
                .map(counts_to_table)
                .collect::<Result<_>>()?;
            Ok(Some(
                eval.values(&t, settings.as_ref())?
                    .iter()
                    .map(|r| r.value)
                    .collect(),
            ))
        })
        .collect::<Result<Vec<Option<Vec<f64>>>>>()?
        .into_iter()
        .flatten()
        .collect();

    let sys_reps: Vec<Vec<f64>> = if options.jitter_deg > 0.0 && options.bootstrap > 0 {
        let settings = settings.as_ref().ok_or_else(|| {
            SteeringError::SettingsMismatch("systematic jitter needs measurement directions".into())
        })?;
        let mu = fit_werner_mu(&tables, settings)?;
        let sigma = options.jitter_deg.to_radians();
        (0..options.bootstrap as u64)
            .into_par_iter()
            .map(|b| {
                let mut rng = sample_rng(options.seed, SYSTEMATIC_STREAM + b);
                let bob: Vec<BlochVector> = settings
                    .bob
                    .iter()
                    .map(|v| jitter_direction(&mut rng, v, sigma))
                    .collect();
                let jittered = Settings::new(settings.alice.clone(), bob)?;
                let t: Vec<JointTable> = tables
                    .iter()
                    .zip(settings.pairs().zip(&jittered.bob))
                    .map(|(t, ((u, v), v_new))| shifted_table(t, mu, u, v, v_new))
                    .collect::<Result<_>>()?;
                Ok(eval
                    .values(&t, Some(&jittered))?
                    .iter()
                    .map(|r| r.value)
                    .collect())
            })
            .collect::<Result<_>>()?
    } else {
        Vec::new()
    };

    Ok(point
        .into_iter()
        .enumerate()
        .map(|(k, result)| CriterionReport {
            result,
            errors: ErrorBudget::new(column_std(&stat_reps, k), column_std(&sys_reps, k)),
        })
        .collect())
}
