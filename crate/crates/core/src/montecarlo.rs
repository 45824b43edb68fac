//! Probability that random measurements violate the dimension-bounded
//! criterion.
//!
//! Every sample draws from its own ChaCha8 stream selected by the sample
//! index, so the counts depend only on `(seed, samples)` and never on how
//! the work is split across threads.

use std::f64::consts::{FRAC_PI_2, TAU};
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::criteria::{csv_err, db_geometry, db_lhs_from_geometry, db_lhs_threshold};
use crate::error::{invalid, Result, SteeringError};
use crate::qcore::{BlochVector, Settings};

/// Measurement class of a sampler.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MeasurementClass {
    /// Random orthogonal measurements.
    Rom,
    /// Completely random measurements.
    Crm,
}

impl FromStr for MeasurementClass {
    type Err = SteeringError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rom" => Ok(MeasurementClass::Rom),
            "crm" => Ok(MeasurementClass::Crm),
            _ => Err(invalid(format!(
                "unknown measurement class '{s}' (rom|crm)"
            ))),
        }
    }
}

impl fmt::Display for MeasurementClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MeasurementClass::Rom => "ROM",
            MeasurementClass::Crm => "CRM",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplerScheme {
    /// Orthogonal pairs: Bob fixed on (z, x), Alice's plane normal at a
    /// dihedral angle γ ~ U[0°, 90°] from Bob's, uniform azimuth and
    /// in-plane orientation. Triads are Haar-random for m = 3.
    UniformDihedral,
    /// Orthogonal pairs and triads from Haar-random rotations for both
    /// parties.
    Haar,
    /// Independent isotropic unit vectors for every setting of both parties.
    IsotropicVectors,
}

impl SamplerScheme {
    pub fn class(self) -> MeasurementClass {
        match self {
            SamplerScheme::UniformDihedral | SamplerScheme::Haar => MeasurementClass::Rom,
            SamplerScheme::IsotropicVectors => MeasurementClass::Crm,
        }
    }

    pub fn default_for(class: MeasurementClass) -> Self {
        match class {
            MeasurementClass::Rom => SamplerScheme::UniformDihedral,
            MeasurementClass::Crm => SamplerScheme::IsotropicVectors,
        }
    }
}

impl FromStr for SamplerScheme {
    type Err = SteeringError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dihedral" | "uniform-dihedral" => Ok(SamplerScheme::UniformDihedral),
            "haar" => Ok(SamplerScheme::Haar),
            "isotropic" | "isotropic-vectors" => Ok(SamplerScheme::IsotropicVectors),
            _ => Err(invalid(format!(
                "unknown sampler scheme '{s}' (dihedral|haar|isotropic)"
            ))),
        }
    }
}

impl fmt::Display for SamplerScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SamplerScheme::UniformDihedral => "uniform-dihedral",
            SamplerScheme::Haar => "haar",
            SamplerScheme::IsotropicVectors => "isotropic-vectors",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MCConfig {
    pub m: usize,
    pub scheme: SamplerScheme,
    pub mu_grid: Vec<f64>,
    pub samples: u64,
    /// Multiplier on the classical threshold (1.0 = unmodified bound).
    pub bound_factor: f64,
    pub seed: u64,
}

impl MCConfig {
    pub fn validate(&self) -> Result<()> {
        db_lhs_threshold(self.m)?;
        if self.samples == 0 {
            return Err(invalid("need at least one sample"));
        }
        if !(self.bound_factor.is_finite() && self.bound_factor > 0.0) {
            return Err(invalid(format!(
                "bound factor must be positive, got {}",
                self.bound_factor
            )));
        }
        if self.mu_grid.is_empty() {
            return Err(invalid("empty mu grid"));
        }
        if let Some(mu) = self.mu_grid.iter().find(|mu| !(0.0..=1.0).contains(*mu)) {
            return Err(invalid(format!(
                "mixing probability must lie in [0, 1], got {mu}"
            )));
        }
        Ok(())
    }

    fn threshold(&self) -> f64 {
        // validated m
        self.bound_factor * db_lhs_threshold(self.m).unwrap_or(f64::NAN)
    }
}

/// Violation probability at one μ.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MCEstimate {
    pub m: usize,
    pub scheme: SamplerScheme,
    pub mu: f64,
    pub bound_factor: f64,
    pub n_samples: u64,
    pub p_violation: f64,
    pub stderr: f64,
}

impl MCEstimate {
    fn from_count(cfg: &MCConfig, mu: f64, bound_factor: f64, violations: u64) -> Self {
        let n = cfg.samples as f64;
        let p = violations as f64 / n;
        Self {
            m: cfg.m,
            scheme: cfg.scheme,
            mu,
            bound_factor,
            n_samples: cfg.samples,
            p_violation: p,
            stderr: (p * (1.0 - p) / n).sqrt(),
        }
    }
}

/// Independent stream for one sample.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Isotropic unit vector from a normalized standard-normal triple.
pub fn sample_unit_vector<R: Rng + ?Sized>(rng: &mut R) -> BlochVector {
    loop {
        let v = BlochVector::new(
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        );
        if v.norm() > 1e-8 {
            if let Some(u) = v.normalized() {
                return u;
            }
        }
    }
}

/// Haar-random rotation, returned as the images of (x, y, z).
pub fn sample_rotation<R: Rng + ?Sized>(rng: &mut R) -> [BlochVector; 3] {
    let (w, x, y, z) = loop {
        let q: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
        let n = q.iter().map(|c| c * c).sum::<f64>().sqrt();
        if n > 1e-8 {
            break (q[0] / n, q[1] / n, q[2] / n, q[3] / n);
        }
    };
    let ex = BlochVector::new(
        1.0 - 2.0 * (y * y + z * z),
        2.0 * (x * y + w * z),
        2.0 * (x * z - w * y),
    );
    let ey = BlochVector::new(
        2.0 * (x * y - w * z),
        1.0 - 2.0 * (x * x + z * z),
        2.0 * (y * z + w * x),
    );
    let ez = ex.cross(&ey);
    [ex, ey, ez]
}

/// Right-handed orthonormal triad from a Haar-random rotation.
pub fn sample_orthogonal_triad<R: Rng + ?Sized>(rng: &mut R) -> [BlochVector; 3] {
    sample_rotation(rng)
}

/// Orthonormal basis (e₁, e₂) of the plane perpendicular to unit `n`, with
/// e₁ × e₂ = n.
fn plane_basis(n: &BlochVector) -> (BlochVector, BlochVector) {
    let helper = if n.x.abs() < 0.9 {
        BlochVector::X
    } else {
        BlochVector::Y
    };
    let e1 = (helper - *n * helper.dot(n))
        .normalized()
        .expect("helper not parallel to n");
    (e1, n.cross(&e1))
}

/// Random orthogonal pairs for both parties (Alice's first).
pub fn sample_orthogonal_pair<R: Rng + ?Sized>(
    rng: &mut R,
    scheme: SamplerScheme,
) -> Result<Settings> {
    match scheme {
        SamplerScheme::UniformDihedral => {
            // Bob's plane is spanned by (z, x), normal z × x = y.
            let gamma = rng.random_range(0.0..=FRAC_PI_2);
            let beta = rng.random_range(0.0..TAU);
            let psi = rng.random_range(0.0..TAU);
            let (sg, cg) = gamma.sin_cos();
            let (sb, cb) = beta.sin_cos();
            let normal = BlochVector::Y * cg + (BlochVector::Z * cb + BlochVector::X * sb) * sg;
            let (e1, e2) = plane_basis(&normal);
            let (sp, cp) = psi.sin_cos();
            let a1 = e1 * cp + e2 * sp;
            let a2 = normal.cross(&a1);
            Ok(Settings {
                alice: vec![a1, a2],
                bob: vec![BlochVector::Z, BlochVector::X],
            })
        }
        SamplerScheme::Haar => {
            let [ax, _, az] = sample_rotation(rng);
            let [bx, _, bz] = sample_rotation(rng);
            Ok(Settings {
                alice: vec![az, ax],
                bob: vec![bz, bx],
            })
        }
        SamplerScheme::IsotropicVectors => Err(invalid(
            "isotropic vectors do not form orthogonal pairs; use a ROM scheme",
        )),
    }
}

/// One random measurement configuration for `m` settings per party.
pub fn sample_measurements<R: Rng + ?Sized>(
    rng: &mut R,
    m: usize,
    scheme: SamplerScheme,
) -> Result<Settings> {
    match (scheme, m) {
        (SamplerScheme::IsotropicVectors, _) => Ok(Settings {
            alice: (0..m).map(|_| sample_unit_vector(rng)).collect(),
            bob: (0..m).map(|_| sample_unit_vector(rng)).collect(),
        }),
        (_, 2) => sample_orthogonal_pair(rng, scheme),
        (_, 3) => Ok(Settings {
            alice: sample_orthogonal_triad(rng).to_vec(),
            bob: sample_orthogonal_triad(rng).to_vec(),
        }),
        _ => Err(invalid(format!(
            "number of settings must be 2 or 3, got {m}"
        ))),
    }
}

fn sample_geometry(seed: u64, index: u64, m: usize, scheme: SamplerScheme) -> f64 {
    let mut rng = sample_rng(seed, index);
    let s = sample_measurements(&mut rng, m, scheme).expect("validated configuration");
    db_geometry(&s.alice, &s.bob)
}

/// Violation counts for every `(μ, threshold)` pair over one shared set of
/// sampled configurations.
fn violation_counts(cfg: &MCConfig, cuts: &[(f64, f64)]) -> Vec<u64> {
    let (m, scheme, seed) = (cfg.m, cfg.scheme, cfg.seed);
    (0..cfg.samples)
        .into_par_iter()
        .fold(
            || vec![0u64; cuts.len()],
            |mut acc, i| {
                let g = sample_geometry(seed, i, m, scheme);
                for (count, &(mu, threshold)) in acc.iter_mut().zip(cuts) {
                    if db_lhs_from_geometry(m, g, mu) > threshold {
                        *count += 1;
                    }
                }
                acc
            },
        )
        .reduce(
            || vec![0u64; cuts.len()],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        )
}

/// Fraction of sampled configurations whose vector-form left-hand side
/// exceeds `bound_factor` × threshold, one estimate per μ in the grid.
pub fn violation_probability(cfg: &MCConfig) -> Result<Vec<MCEstimate>> {
    cfg.validate()?;
    let threshold = cfg.threshold();
    let cuts: Vec<(f64, f64)> = cfg.mu_grid.iter().map(|&mu| (mu, threshold)).collect();
    let counts = violation_counts(cfg, &cuts);
    Ok(cfg
        .mu_grid
        .iter()
        .zip(counts)
        .map(|(&mu, c)| MCEstimate::from_count(cfg, mu, cfg.bound_factor, c))
        .collect())
}

/// Violation probabilities at several bound factors, all from the same
/// sampled configurations.
pub fn violation_probability_factors(
    cfg: &MCConfig,
    mu: f64,
    factors: &[f64],
) -> Result<Vec<MCEstimate>> {
    cfg.validate()?;
    let base = db_lhs_threshold(cfg.m)?;
    for &f in factors {
        if !(f.is_finite() && f > 0.0) {
            return Err(invalid(format!("bound factor must be positive, got {f}")));
        }
    }
    let cuts: Vec<(f64, f64)> = factors.iter().map(|&f| (mu, f * base)).collect();
    let counts = violation_counts(cfg, &cuts);
    Ok(factors
        .iter()
        .zip(counts)
        .map(|(&f, c)| MCEstimate::from_count(cfg, mu, f, c))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistogramBin {
    pub bin_left: f64,
    pub bin_right: f64,
    pub density: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub bins: Vec<HistogramBin>,
    pub violations: u64,
    pub samples: u64,
}

impl Histogram {
    pub fn width(&self) -> f64 {
        self.bins.first().map_or(0.0, |b| b.bin_right - b.bin_left)
    }
}

/// Density of the violation amount (left-hand side minus raised threshold)
/// over violating samples, on uniform bins spanning
/// [0, μ^m − bound_factor·threshold].
pub fn violation_histogram(cfg: &MCConfig, mu: f64, bins: usize) -> Result<Histogram> {
    cfg.validate()?;
    if bins == 0 {
        return Err(invalid("need at least one bin"));
    }
    if !(0.0..=1.0).contains(&mu) {
        return Err(invalid(format!(
            "mixing probability must lie in [0, 1], got {mu}"
        )));
    }
    let threshold = cfg.threshold();
    let top = db_lhs_from_geometry(cfg.m, 1.0, mu) - threshold;
    if top.is_nan() || top <= 0.0 {
        return Err(invalid(format!(
            "no violation attainable at mu={mu} with bound factor {}",
            cfg.bound_factor
        )));
    }
    let (m, scheme, seed) = (cfg.m, cfg.scheme, cfg.seed);
    let amounts: Vec<f64> = (0..cfg.samples)
        .into_par_iter()
        .filter_map(|i| {
            let excess =
                db_lhs_from_geometry(m, sample_geometry(seed, i, m, scheme), mu) - threshold;
            (excess > 0.0).then_some(excess)
        })
        .collect();
    let width = top / bins as f64;
    let mut counts = vec![0u64; bins];
    for a in &amounts {
        let k = ((a / width) as usize).min(bins - 1);
        counts[k] += 1;
    }
    let total = amounts.len() as f64;
    let bins = counts
        .iter()
        .enumerate()
        .map(|(k, &c)| HistogramBin {
            bin_left: k as f64 * width,
            bin_right: (k + 1) as f64 * width,
            density: if total > 0.0 {
                c as f64 / (total * width)
            } else {
                0.0
            },
        })
        .collect();
    Ok(Histogram {
        bins,
        violations: amounts.len() as u64,
        samples: cfg.samples,
    })
}

/// One row of the raised-bound table.
#[derive(Debug, Clone, PartialEq)]
pub struct RaisedBoundRow {
    pub m: usize,
    pub scheme: SamplerScheme,
    pub estimates: Vec<MCEstimate>,
}

impl RaisedBoundRow {
    pub fn label(&self) -> String {
        format!("{} {}", self.m, self.scheme.class())
    }
}

/// The default rows: 2 ROM, 3 ROM, 2 CRM, 3 CRM.
pub fn default_table_rows(rom: SamplerScheme) -> Vec<(usize, SamplerScheme)> {
    vec![
        (2, rom),
        (3, rom),
        (2, SamplerScheme::IsotropicVectors),
        (3, SamplerScheme::IsotropicVectors),
    ]
}

/// Violation probability at μ for every row and bound factor.
pub fn raised_bound_table(
    rows: &[(usize, SamplerScheme)],
    factors: &[f64],
    mu: f64,
    samples: u64,
    seed: u64,
) -> Result<Vec<RaisedBoundRow>> {
    rows.iter()
        .map(|&(m, scheme)| {
            let cfg = MCConfig {
                m,
                scheme,
                mu_grid: vec![mu],
                samples,
                bound_factor: 1.0,
                seed,
            };
            Ok(RaisedBoundRow {
                m,
                scheme,
                estimates: violation_probability_factors(&cfg, mu, factors)?,
            })
        })
        .collect()
}

pub fn write_estimates_csv<W: Write>(estimates: &[MCEstimate], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if estimates.is_empty() {
        w.write_record([
            "m",
            "scheme",
            "mu",
            "bound_factor",
            "n_samples",
            "p_violation",
            "stderr",
        ])
        .map_err(csv_err)?;
    }
    for e in estimates {
        w.serialize(e).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_histogram_csv<W: Write>(hist: &Histogram, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for b in &hist.bins {
        w.serialize(b).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}
