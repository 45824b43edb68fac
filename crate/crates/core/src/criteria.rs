//! Steering parameters.
//!
//! Every parameter is normalized so that its classical bound is zero: a
//! positive value certifies steering. Each criterion is available both as a
//! table-based evaluation (from [`JointTable`]s or a correlation matrix) and,
//! for the mutually-unbiased and non-orthogonal scenarios, as a closed form
//! of (μ, α, Φ).

use std::f64::consts::{FRAC_1_SQRT_2, LN_2};
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::entropy::{
    arimoto_conditional_renyi, eur_bound_renyi2, eur_bound_tsallis, tsallis_directed_term, Order,
};
use crate::error::{invalid, Result, SteeringError};
use crate::qcore::{
    correlation_matrix_trace, mub_settings, nom_settings, werner_state, JointTable, Settings,
    WernerParam,
};

const RENYI_CONJUGATE_TOL: f64 = 1e-9;
const BISECTION_ITERATIONS: usize = 60;

/// A steering criterion together with its order parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Criterion {
    /// Tsallis entropic criterion; `Order::One` is the Shannon criterion.
    Tsallis(Order),
    /// Rényi entropic criterion for two settings, 1/r + 1/s = 2.
    Renyi {
        r: Order,
        s: Order,
    },
    DimensionBounded,
}

impl Criterion {
    pub const SHANNON: Criterion = Criterion::Tsallis(Order::One);
    pub const TSALLIS2: Criterion = Criterion::Tsallis(Order::Finite(2.0));
    pub const RENYI_HALF_INF: Criterion = Criterion::Renyi {
        r: Order::Finite(0.5),
        s: Order::Infinity,
    };

    pub fn name(&self) -> &'static str {
        match self {
            Criterion::Tsallis(Order::One) => "shannon",
            Criterion::Tsallis(_) => "tsallis",
            Criterion::Renyi { .. } => "renyi",
            Criterion::DimensionBounded => "dimension-bounded",
        }
    }

    /// Order parameters as printed in result files; empty for the
    /// dimension-bounded criterion.
    pub fn order_label(&self) -> String {
        match self {
            Criterion::Tsallis(q) => q.to_string(),
            Criterion::Renyi { r, s } => format!("{r}:{s}"),
            Criterion::DimensionBounded => String::new(),
        }
    }

    pub fn is_entropic(&self) -> bool {
        !matches!(self, Criterion::DimensionBounded)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Criterion::Tsallis(q) => q.ensure_tsallis(),
            Criterion::Renyi { r, s } => check_renyi_orders(*r, *s),
            Criterion::DimensionBounded => Ok(()),
        }
    }

    /// Settings counts the criterion supports.
    pub fn supports_settings(&self, m: usize) -> bool {
        match self {
            Criterion::Renyi { .. } => m == 2,
            _ => m == 2 || m == 3,
        }
    }
}

/// Flag grammar: `shannon`, `tsallis<q>`, `renyi` (orders ½ and ∞),
/// `renyi<r>:<s>`, `db`.
impl FromStr for Criterion {
    type Err = SteeringError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let parse_order = |t: &str| -> Result<Order> {
            let v = match t {
                "inf" | "infinity" => f64::INFINITY,
                _ => t
                    .parse::<f64>()
                    .map_err(|_| invalid(format!("bad order '{t}' in criterion '{s}'")))?,
            };
            Order::new(v)
        };
        let c = match s {
            "shannon" => Criterion::SHANNON,
            "renyi" => Criterion::RENYI_HALF_INF,
            "db" | "dimension-bounded" => Criterion::DimensionBounded,
            _ if s.starts_with("tsallis") => Criterion::Tsallis(parse_order(&s[7..])?),
            _ if s.starts_with("renyi") => {
                let (r, t) = s[5..]
                    .split_once(':')
                    .ok_or_else(|| invalid(format!("expected renyi<r>:<s>, got '{s}'")))?;
                Criterion::Renyi {
                    r: parse_order(r)?,
                    s: parse_order(t)?,
                }
            }
            _ => return Err(invalid(format!("unknown criterion '{s}'"))),
        };
        c.validate()?;
        Ok(c)
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Criterion::Tsallis(Order::One) => f.write_str("shannon"),
            Criterion::Tsallis(q) => write!(f, "tsallis{q}"),
            Criterion::Renyi { r, s } => write!(f, "renyi{r}:{s}"),
            Criterion::DimensionBounded => f.write_str("db"),
        }
    }
}

impl Serialize for Criterion {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(self.name())
    }
}

fn check_renyi_orders(r: Order, s: Order) -> Result<()> {
    r.ensure_renyi()?;
    s.ensure_renyi()?;
    let sum = r.reciprocal() + s.reciprocal();
    if (sum - 2.0).abs() > RENYI_CONJUGATE_TOL {
        return Err(invalid(format!(
            "Renyi orders need 1/r + 1/s = 2, got {sum}"
        )));
    }
    Ok(())
}

/// Outcome of evaluating one criterion.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SteeringResult {
    pub criterion: Criterion,
    pub order: String,
    pub value: f64,
    /// Classical bound of the normalized parameter (always 0).
    pub bound: f64,
    pub steerable: bool,
}

impl SteeringResult {
    pub fn new(criterion: Criterion, value: f64) -> Self {
        Self {
            criterion,
            order: criterion.order_label(),
            value,
            bound: 0.0,
            steerable: value > 0.0,
        }
    }
}

/// C_B − Σ_m (per-setting Tsallis conditional term).
pub fn tsallis_steering(tables: &[JointTable], q: Order, bound: f64) -> Result<SteeringResult> {
    q.ensure_tsallis()?;
    if tables.is_empty() {
        return Err(invalid("no tables"));
    }
    let conditional: f64 = tables
        .iter()
        .map(|t| tsallis_directed_term(t, q))
        .sum::<Result<f64>>()?;
    Ok(SteeringResult::new(
        Criterion::Tsallis(q),
        bound - conditional,
    ))
}

/// ln 2 − H_r(B|A)₁ − H_s(B|A)₂ with Arimoto conditional entropies.
pub fn renyi_steering(tables: &[JointTable], r: Order, s: Order) -> Result<SteeringResult> {
    check_renyi_orders(r, s)?;
    if tables.len() != 2 {
        return Err(SteeringError::Unsupported(format!(
            "the Renyi criterion takes exactly two settings, got {}",
            tables.len()
        )));
    }
    let value = eur_bound_renyi2()
        - arimoto_conditional_renyi(&tables[0], r)?
        - arimoto_conditional_renyi(&tables[1], s)?;
    Ok(SteeringResult::new(Criterion::Renyi { r, s }, value))
}

fn check_db_settings(m: usize) -> Result<()> {
    if m == 2 || m == 3 {
        Ok(())
    } else {
        Err(SteeringError::Unsupported(format!(
            "dimension-bounded criterion is implemented for 2 or 3 settings, got {m}"
        )))
    }
}

/// Vector-form left-hand side of the dimension-bounded inequality for the
/// Werner state:
///
/// * m = 2: μ²|(a₁×a₂)·(b₁×b₂)|, violated above ½
/// * m = 3: μ³|a₁·(a₂×a₃)||b₁·(b₂×b₃)|, violated above √3/9
///
/// Orthogonality is not required.
pub fn db_lhs(settings: &Settings, mu: WernerParam) -> Result<f64> {
    let (a, b) = (&settings.alice, &settings.bob);
    check_db_settings(a.len())?;
    Ok(db_lhs_from_geometry(a.len(), db_geometry(a, b), mu.value()))
}

/// The μ-independent factor of [`db_lhs`].
pub(crate) fn db_geometry(a: &[crate::qcore::BlochVector], b: &[crate::qcore::BlochVector]) -> f64 {
    if a.len() == 2 {
        a[0].cross(&a[1]).dot(&b[0].cross(&b[1])).abs()
    } else {
        a[0].triple(&a[1], &a[2]).abs() * b[0].triple(&b[1], &b[2]).abs()
    }
}

pub(crate) fn db_lhs_from_geometry(m: usize, geometry: f64, mu: f64) -> f64 {
    mu.powi(m as i32) * geometry
}

/// Violation threshold of [`db_lhs`]: ½ for two settings, √3/9 for three.
pub fn db_lhs_threshold(m: usize) -> Result<f64> {
    check_db_settings(m)?;
    Ok(if m == 2 { 0.5 } else { 3f64.sqrt() / 9.0 })
}

/// |det E| of the correlation matrix; equals [`db_lhs`] for Werner data by
/// the Cauchy–Binet formula.
pub fn db_lhs_from_correlations(e: &DMatrix<f64>) -> Result<f64> {
    if !e.is_square() {
        return Err(SteeringError::SettingsMismatch(
            "correlation matrix is not square".into(),
        ));
    }
    check_db_settings(e.nrows())?;
    Ok(e.determinant().abs())
}

/// Separable bound on |det D|: (1/√d_A)·((√(2d_A) − 1)/(m√d_A))^m.
pub fn db_bound(m: usize, d_a: usize) -> Result<f64> {
    if m < 2 || d_a < 2 {
        return Err(invalid(format!(
            "need m >= 2 and d_A >= 2, got m={m}, d_A={d_a}"
        )));
    }
    let d = d_a as f64;
    let base = ((2.0 * d).sqrt() - 1.0) / (m as f64 * d.sqrt());
    Ok(base.powi(m as i32) / d.sqrt())
}

/// Scale c_m mapping the vector-form left-hand side onto |det D|:
/// c₂ = 1/(4√2), c₃ = 1/(12√3). Fixed by c_m · threshold_m = db_bound(m, 2).
pub fn db_scale(m: usize) -> Result<f64> {
    check_db_settings(m)?;
    Ok(match m {
        2 => 1.0 / (4.0 * 2f64.sqrt()),
        _ => 1.0 / (12.0 * 3f64.sqrt()),
    })
}

fn db_result_from_lhs(m: usize, lhs: f64) -> Result<SteeringResult> {
    let value = db_scale(m)? * lhs - db_bound(m, 2)?;
    Ok(SteeringResult::new(Criterion::DimensionBounded, value))
}

/// c_m · db_lhs − db_bound(m, 2).
pub fn db_steering(settings: &Settings, mu: WernerParam) -> Result<SteeringResult> {
    let m = settings.len();
    db_result_from_lhs(m, db_lhs(settings, mu)?)
}

/// Dimension-bounded parameter from a measured m×m correlation matrix.
pub fn db_steering_from_correlations(e: &DMatrix<f64>) -> Result<SteeringResult> {
    db_result_from_lhs(e.nrows(), db_lhs_from_correlations(e)?)
}

/// Which measurements Alice and Bob use.
#[derive(Debug, Clone, PartialEq)]
pub enum MeasurementMode {
    /// Mutually unbiased settings misaligned by (α, Φ).
    Mub,
    /// Fixed non-orthogonal settings for Alice.
    Nom,
    Explicit(Settings),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub mu: WernerParam,
    pub alpha_deg: f64,
    pub phi_deg: f64,
    pub m: usize,
    pub mode: MeasurementMode,
}

impl Scenario {
    pub fn mub(mu: f64, alpha_deg: f64, phi_deg: f64, m: usize) -> Result<Self> {
        Self::new(mu, alpha_deg, phi_deg, m, MeasurementMode::Mub)
    }

    pub fn nom(mu: f64, m: usize) -> Result<Self> {
        Self::new(mu, 0.0, 0.0, m, MeasurementMode::Nom)
    }

    pub fn new(
        mu: f64,
        alpha_deg: f64,
        phi_deg: f64,
        m: usize,
        mode: MeasurementMode,
    ) -> Result<Self> {
        if m != 2 && m != 3 {
            return Err(invalid(format!(
                "number of settings must be 2 or 3, got {m}"
            )));
        }
        if let MeasurementMode::Explicit(s) = &mode {
            if s.len() != m {
                return Err(SteeringError::SettingsMismatch(format!(
                    "scenario has m={m} but {} explicit settings",
                    s.len()
                )));
            }
        }
        Ok(Self {
            mu: WernerParam::new(mu)?,
            alpha_deg,
            phi_deg,
            m,
            mode,
        })
    }

    pub fn with_alpha(&self, alpha_deg: f64) -> Self {
        Self {
            alpha_deg,
            ..self.clone()
        }
    }

    pub fn settings(&self) -> Result<Settings> {
        match &self.mode {
            MeasurementMode::Mub => mub_settings(self.m, self.alpha_deg, self.phi_deg),
            MeasurementMode::Nom => nom_settings(self.m),
            MeasurementMode::Explicit(s) => Ok(s.clone()),
        }
    }

    /// Paired Werner overlaps |μ u_k·v_k| of the closed forms.
    fn closed_overlaps(&self) -> Result<Vec<f64>> {
        let mu = self.mu.value();
        let ca = self.alpha_deg.to_radians().cos();
        let cp = self.phi_deg.to_radians().cos();
        let half_s3 = 3f64.sqrt() / 2.0;
        Ok(match (&self.mode, self.m) {
            (MeasurementMode::Mub, 2) => vec![mu * ca, mu * cp * ca],
            (MeasurementMode::Mub, _) => vec![mu * cp, mu * ca, mu * cp * ca],
            (MeasurementMode::Nom, 2) => vec![mu, half_s3 * mu],
            (MeasurementMode::Nom, _) => vec![mu, (2.0f64 / 3.0).sqrt() * mu, half_s3 * mu],
            (MeasurementMode::Explicit(_), _) => {
                return Err(SteeringError::Unsupported(
                    "closed forms exist only for the MUB and NOM scenarios".into(),
                ))
            }
        })
    }
}

/// f_y(x) = ((1 − x)/2)^y + ((1 + x)/2)^y.
pub fn f_y(y: f64, x: f64) -> f64 {
    ((1.0 - x) / 2.0).powf(y) + ((1.0 + x) / 2.0).powf(y)
}

/// Binary Shannon entropy of ((1 − x)/2, (1 + x)/2) in nats.
fn binary_entropy(x: f64) -> f64 {
    [(1.0 - x) / 2.0, (1.0 + x) / 2.0]
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|p| -p * p.ln())
        .sum()
}

/// Arimoto conditional entropy of a Werner table with overlap x.
fn werner_renyi_conditional(order: Order, x: f64) -> f64 {
    match order {
        Order::One => binary_entropy(x),
        Order::Infinity => LN_2 - (1.0 + x.abs()).ln(),
        Order::Finite(r) => r / (1.0 - r) * f_y(r, x).powf(1.0 / r).ln(),
    }
}

/// Closed-form value of `criterion` in `scenario`.
///
/// Tsallis: [1 + 2^{m−1−q} − Σ_k f_q(x_k)]/(1 − q), and its Shannon limit
/// (m − 1) ln 2 − Σ_k h(x_k). Rényi (two settings only):
/// ln 2 − (r/(1−r)) ln f_r(x₁)^{1/r} − (s/(1−s)) ln f_s(x₂)^{1/s}, with the
/// (½, ∞) pair evaluated as ln(1 + |x₂|) − ln(1 + √(1 − x₁²)).
/// Dimension-bounded: (2μ²|cosΦ| − 1)/(8√2) and (μ³/√3 − 1/9)/12 for MUBs,
/// (√3μ² − 1)/(8√2) and (μ³/√6 − 1/9)/12 for NOM.
pub fn closed_form(scenario: &Scenario, criterion: Criterion) -> Result<f64> {
    criterion.validate()?;
    let m = scenario.m;
    if !criterion.supports_settings(m) {
        return Err(SteeringError::Unsupported(format!(
            "{criterion} with {m} settings"
        )));
    }
    let xs = scenario.closed_overlaps()?;
    let mu = scenario.mu.value();
    let value = match criterion {
        Criterion::Tsallis(Order::One) => {
            (m as f64 - 1.0) * LN_2 - xs.iter().map(|&x| binary_entropy(x)).sum::<f64>()
        }
        Criterion::Tsallis(q) => {
            let q = q.value();
            let fsum: f64 = xs.iter().map(|&x| f_y(q, x)).sum();
            (1.0 + 2f64.powf(m as f64 - 1.0 - q) - fsum) / (1.0 - q)
        }
        Criterion::Renyi { r, s } if (r, s) == (Order::Finite(0.5), Order::Infinity) => {
            (1.0 + xs[1].abs()).ln() - (1.0 + (1.0 - xs[0] * xs[0]).max(0.0).sqrt()).ln()
        }
        Criterion::Renyi { r, s } => {
            LN_2 - werner_renyi_conditional(r, xs[0]) - werner_renyi_conditional(s, xs[1])
        }
        Criterion::DimensionBounded => {
            let s2 = 2f64.sqrt();
            let s3 = 3f64.sqrt();
            match (&scenario.mode, m) {
                (MeasurementMode::Mub, 2) => {
                    let cp = scenario.phi_deg.to_radians().cos().abs();
                    (2.0 * mu * mu * cp - 1.0) / (8.0 * s2)
                }
                (MeasurementMode::Mub, _) => (mu.powi(3) / s3 - 1.0 / 9.0) / 12.0,
                (_, 2) => (s3 * mu * mu - 1.0) / (8.0 * s2),
                _ => (mu.powi(3) / 6f64.sqrt() - 1.0 / 9.0) / 12.0,
            }
        }
    };
    Ok(value)
}

/// Evaluates `criterion` from Born-rule tables of the Werner state.
///
/// Entropic criteria use the paired tables; the dimension-bounded criterion
/// uses the full correlation matrix over all cross pairs.
pub fn evaluate(scenario: &Scenario, criterion: Criterion) -> Result<SteeringResult> {
    criterion.validate()?;
    let settings = scenario.settings()?;
    let m = settings.len();
    let rho = werner_state(scenario.mu);
    match criterion {
        Criterion::Tsallis(q) => {
            let tables = settings.trace_tables(&rho)?;
            tsallis_steering(&tables, q, eur_bound_tsallis(q, m, None)?)
        }
        Criterion::Renyi { r, s } => renyi_steering(&settings.trace_tables(&rho)?, r, s),
        Criterion::DimensionBounded => {
            db_steering_from_correlations(&correlation_matrix_trace(&rho, &settings)?)
        }
    }
}

/// μ above which the two-setting Tsallis q = 2 and Rényi (½, ∞) criteria
/// detect steering: 1/[cosα √(1 + cos²Φ)]. Values ≥ 1 mean no Werner state
/// with μ < 1 is detected.
pub fn critical_mu(alpha_deg: f64, phi_deg: f64) -> Result<f64> {
    let ca = alpha_deg.to_radians().cos();
    if ca.is_nan() || ca <= 0.0 {
        return Err(invalid(format!(
            "critical mu needs cos(alpha) > 0, alpha = {alpha_deg}"
        )));
    }
    let cp = phi_deg.to_radians().cos();
    Ok(1.0 / (ca * (1.0 + cp * cp).sqrt()))
}

/// Rotation angle α ∈ [0°, 90°] at which the closed-form parameter of a MUB
/// scenario changes sign, found by bisection. `None` when the parameter has
/// the same sign at both ends of the bracket.
pub fn critical_alpha(
    criterion: Criterion,
    mu: f64,
    phi_deg: f64,
    m: usize,
) -> Result<Option<f64>> {
    let base = Scenario::mub(mu, 0.0, phi_deg, m)?;
    let value_at = |alpha: f64| closed_form(&base.with_alpha(alpha), criterion);
    let (mut lo, mut hi) = (0.0, 90.0);
    let (f_lo, f_hi) = (value_at(lo)?, value_at(hi)?);
    if f_lo == 0.0 {
        return Ok(Some(lo));
    }
    if f_lo.signum() == f_hi.signum() {
        return Ok(None);
    }
    for _ in 0..BISECTION_ITERATIONS {
        let mid = 0.5 * (lo + hi);
        let f_mid = value_at(mid)?;
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(0.5 * (lo + hi)))
}

/// One α-sweep: fixed μ, Φ, m and measurement mode.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub mu: f64,
    pub phi_deg: f64,
    pub m: usize,
    pub alphas_deg: Vec<f64>,
    pub mode: MeasurementMode,
}

/// One sweep CSV row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub mu: f64,
    pub alpha_deg: f64,
    pub phi_deg: f64,
    pub m: usize,
    pub criterion: &'static str,
    pub order: String,
    pub value: f64,
    pub steerable: bool,
}

/// Evaluates every criterion at every α via the table pipeline. Rows come
/// out α-major in grid order, criteria in the order given.
pub fn sweep(spec: &SweepSpec, criteria: &[Criterion]) -> Result<Vec<SweepRow>> {
    for c in criteria {
        c.validate()?;
        if !c.supports_settings(spec.m) {
            return Err(SteeringError::Unsupported(format!(
                "{c} with {} settings",
                spec.m
            )));
        }
    }
    let rows: Vec<Vec<SweepRow>> = spec
        .alphas_deg
        .par_iter()
        .map(|&alpha| {
            let scenario = Scenario::new(spec.mu, alpha, spec.phi_deg, spec.m, spec.mode.clone())?;
            criteria
                .iter()
                .map(|&c| {
                    let r = evaluate(&scenario, c)?;
                    Ok(SweepRow {
                        mu: spec.mu,
                        alpha_deg: alpha,
                        phi_deg: spec.phi_deg,
                        m: spec.m,
                        criterion: c.name(),
                        order: r.order,
                        value: r.value,
                        steerable: r.steerable,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    Ok(rows.into_iter().flatten().collect())
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        w.write_record([
            "mu",
            "alpha_deg",
            "phi_deg",
            "m",
            "criterion",
            "order",
            "value",
            "steerable",
        ])
        .map_err(csv_err)?;
    }
    for row in rows {
        w.serialize(row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub(crate) fn csv_err(e: csv::Error) -> SteeringError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => SteeringError::Io(io),
        other => SteeringError::InvalidParameter(format!("csv: {other:?}")),
    }
}

/// 1/(8√2), the two-setting qubit dimension-bounded constant.
pub const DB2_BOUND: f64 = FRAC_1_SQRT_2 / 8.0;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropy::q_log;
    use crate::qcore::{mub_settings, BlochVector};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn mu(v: f64) -> WernerParam {
        WernerParam::new(v).unwrap()
    }

    fn q(v: f64) -> Order {
        Order::new(v).unwrap()
    }

    #[test]
    fn criterion_grammar() {
        assert_eq!("shannon".parse::<Criterion>().unwrap(), Criterion::SHANNON);
        assert_eq!(
            "tsallis2".parse::<Criterion>().unwrap(),
            Criterion::TSALLIS2
        );
        assert_eq!("tsallis1".parse::<Criterion>().unwrap(), Criterion::SHANNON);
        assert_eq!(
            "renyi".parse::<Criterion>().unwrap(),
            Criterion::RENYI_HALF_INF
        );
        assert_eq!(
            "renyi0.5:inf".parse::<Criterion>().unwrap(),
            Criterion::RENYI_HALF_INF
        );
        assert_eq!(
            "db".parse::<Criterion>().unwrap(),
            Criterion::DimensionBounded
        );
        assert_eq!(
            "renyi0.75:1.5".parse::<Criterion>().unwrap(),
            Criterion::Renyi {
                r: q(0.75),
                s: q(1.5)
            }
        );
        assert!("renyi0.5:2".parse::<Criterion>().is_err());
        assert!("tsallis0.5".parse::<Criterion>().is_err());
        assert!("tsallis".parse::<Criterion>().is_err());
        assert!("bell".parse::<Criterion>().is_err());
        for c in [
            Criterion::SHANNON,
            Criterion::TSALLIS2,
            Criterion::RENYI_HALF_INF,
            Criterion::DimensionBounded,
        ] {
            assert_eq!(c.to_string().parse::<Criterion>().unwrap(), c);
        }
    }

    #[test]
    fn tsallis_examples() {
        let s = mub_settings(2, 0.0, 0.0).unwrap();
        let tables = s.werner_tables(mu(1.0)).unwrap();
        let r = tsallis_steering(&tables, q(2.0), 0.5).unwrap();
        assert_abs_diff_eq!(r.value, 0.5, epsilon = 1e-12);
        assert!(r.steerable);
        assert_eq!(r.bound, 0.0);

        let tables = s.werner_tables(mu(0.0)).unwrap();
        for order in [1.0, 1.5, 2.0, 3.0] {
            let bound = eur_bound_tsallis(q(order), 2, None).unwrap();
            let r = tsallis_steering(&tables, q(order), bound).unwrap();
            assert_abs_diff_eq!(r.value, -q_log(2.0, q(order)).unwrap(), epsilon = 1e-12);
            assert!(!r.steerable);
        }
    }

    #[test]
    fn renyi_examples() {
        let s = mub_settings(2, 0.0, 0.0).unwrap();
        let tables = s.werner_tables(mu(1.0)).unwrap();
        let r = renyi_steering(&tables, q(0.5), Order::Infinity).unwrap();
        assert_abs_diff_eq!(r.value, LN_2, epsilon = 1e-12);

        let tables = mub_settings(2, 20.0, 10.0)
            .unwrap()
            .werner_tables(mu(0.8))
            .unwrap();
        let shannon_r = renyi_steering(&tables, Order::One, Order::One).unwrap();
        let shannon_t = tsallis_steering(&tables, Order::One, LN_2).unwrap();
        assert_abs_diff_eq!(shannon_r.value, shannon_t.value, epsilon = 1e-12);
    }

    #[test]
    fn renyi_rejections() {
        let tables = mub_settings(3, 0.0, 0.0)
            .unwrap()
            .werner_tables(mu(1.0))
            .unwrap();
        assert!(matches!(
            renyi_steering(&tables, q(0.5), Order::Infinity),
            Err(SteeringError::Unsupported(_))
        ));
        assert!(renyi_steering(&tables[..2], q(0.5), q(2.0)).is_err());
        assert!(renyi_steering(&tables[..2], q(0.4), q(2.0 / 3.0)).is_err());
    }

    #[test]
    fn db_lhs_examples() {
        let s = mub_settings(2, 0.0, 0.0).unwrap();
        assert_abs_diff_eq!(db_lhs(&s, mu(1.0)).unwrap(), 1.0, epsilon = 1e-15);
        let s = mub_settings(3, 17.0, 33.0).unwrap();
        assert_abs_diff_eq!(db_lhs(&s, mu(1.0)).unwrap(), 1.0, epsilon = 1e-12);

        let s = crate::qcore::nom_settings(2).unwrap();
        let want = 0.963f64.powi(2) * 3f64.sqrt() / 2.0;
        assert_abs_diff_eq!(db_lhs(&s, mu(0.963)).unwrap(), want, epsilon = 1e-12);
        assert_abs_diff_eq!(want, 0.8031, epsilon = 1e-4);

        let bad = Settings {
            alice: vec![BlochVector::Z; 4],
            bob: vec![BlochVector::Z; 4],
        };
        assert!(db_lhs(&bad, mu(1.0)).is_err());
    }

    #[test]
    fn db_bound_examples() {
        assert_abs_diff_eq!(db_bound(2, 2).unwrap(), 0.0883883, epsilon = 1e-7);
        assert_abs_diff_eq!(db_bound(3, 2).unwrap(), 0.0092593, epsilon = 1e-7);
        let scan: Vec<f64> = (2..=6).map(|m| db_bound(m, 2).unwrap()).collect();
        assert!(scan.windows(2).all(|w| w[1] < w[0]));
        assert!(db_bound(1, 2).is_err());
        assert!(db_bound(2, 1).is_err());
    }

    #[test]
    fn db_scale_matches_thresholds() {
        for m in [2, 3] {
            let lhs = db_scale(m).unwrap() * db_lhs_threshold(m).unwrap();
            assert_abs_diff_eq!(lhs, db_bound(m, 2).unwrap(), epsilon = 1e-16);
        }
    }

    #[test]
    fn db_steering_examples() {
        let s = mub_settings(2, 0.0, 0.0).unwrap();
        let r = db_steering(&s, mu(1.0)).unwrap();
        assert_abs_diff_eq!(r.value, 1.0 / (8.0 * 2f64.sqrt()), epsilon = 1e-12);

        let r = db_steering(&crate::qcore::nom_settings(2).unwrap(), mu(0.963)).unwrap();
        assert!((r.value - 0.053).abs() < 1e-3);
        let r = db_steering(&crate::qcore::nom_settings(3).unwrap(), mu(0.963)).unwrap();
        assert!((r.value - 0.021).abs() < 1e-3);
    }

    #[test]
    fn db_phi_ninety_is_total_loss() {
        for m_val in [0.3, 0.9, 1.0] {
            let v = closed_form(
                &Scenario::mub(m_val, 25.0, 90.0, 2).unwrap(),
                Criterion::DimensionBounded,
            )
            .unwrap();
            assert_abs_diff_eq!(v, -DB2_BOUND, epsilon = 1e-12);
        }
    }

    #[test]
    fn closed_form_examples() {
        let v = closed_form(
            &Scenario::mub(1.0, 0.0, 0.0, 2).unwrap(),
            Criterion::TSALLIS2,
        )
        .unwrap();
        assert_abs_diff_eq!(v, 0.5, epsilon = 1e-12);

        let v = closed_form(
            &Scenario::mub(1.0, 60.0, 0.0, 2).unwrap(),
            Criterion::RENYI_HALF_INF,
        )
        .unwrap();
        assert_abs_diff_eq!(
            v,
            1.5f64.ln() - (1.0 + 0.75f64.sqrt()).ln(),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(v, -0.2183, epsilon = 1e-4);

        let v = closed_form(&Scenario::nom(0.963, 3).unwrap(), Criterion::SHANNON).unwrap();
        assert!((v - 0.667).abs() < 2e-3);
    }

    #[test]
    fn closed_form_rejections() {
        let explicit = Scenario::new(
            0.9,
            0.0,
            0.0,
            2,
            MeasurementMode::Explicit(mub_settings(2, 0.0, 0.0).unwrap()),
        )
        .unwrap();
        assert!(closed_form(&explicit, Criterion::SHANNON).is_err());
        assert!(evaluate(&explicit, Criterion::SHANNON).is_ok());
        let three = Scenario::mub(0.9, 0.0, 0.0, 3).unwrap();
        assert!(closed_form(&three, Criterion::RENYI_HALF_INF).is_err());
        assert!(Scenario::mub(0.9, 0.0, 0.0, 4).is_err());
        assert!(Scenario::mub(1.2, 0.0, 0.0, 2).is_err());
    }

    #[test]
    fn general_renyi_closed_form_matches_pipeline() {
        let c = Criterion::Renyi {
            r: q(0.75),
            s: q(1.5),
        };
        let sc = Scenario::mub(0.9, 15.0, 20.0, 2).unwrap();
        let closed = closed_form(&sc, c).unwrap();
        let piped = evaluate(&sc, c).unwrap().value;
        assert_abs_diff_eq!(closed, piped, epsilon = 1e-12);
    }

    #[test]
    fn critical_mu_examples() {
        assert_abs_diff_eq!(
            critical_mu(0.0, 0.0).unwrap(),
            FRAC_1_SQRT_2,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(critical_mu(45.0, 0.0).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(critical_mu(0.0, 90.0).unwrap(), 1.0, epsilon = 1e-12);
        assert!(critical_mu(120.0, 0.0).is_err());
    }

    #[test]
    fn critical_mu_is_the_sign_change() {
        for (alpha, phi) in [(0.0, 0.0), (20.0, 30.0), (35.0, 10.0)] {
            let mc = critical_mu(alpha, phi).unwrap();
            for c in [Criterion::TSALLIS2, Criterion::RENYI_HALF_INF] {
                let below =
                    closed_form(&Scenario::mub(mc - 1e-6, alpha, phi, 2).unwrap(), c).unwrap();
                let above = closed_form(
                    &Scenario::mub((mc + 1e-6).min(1.0), alpha, phi, 2).unwrap(),
                    c,
                )
                .unwrap();
                assert!(below < 0.0 && above > 0.0, "{c} at alpha={alpha} phi={phi}");
            }
        }
    }

    #[test]
    fn critical_alpha_at_unit_mu() {
        let a = critical_alpha(Criterion::TSALLIS2, 1.0, 0.0, 2)
            .unwrap()
            .unwrap();
        assert_abs_diff_eq!(a, 45.0, epsilon = 1e-6);
        assert_eq!(
            critical_alpha(Criterion::TSALLIS2, 0.5, 0.0, 2).unwrap(),
            None
        );
        assert_eq!(
            critical_alpha(Criterion::DimensionBounded, 0.9, 0.0, 2).unwrap(),
            None
        );
    }

    #[test]
    fn sweep_shapes() {
        let spec = SweepSpec {
            mu: 0.9733,
            phi_deg: 90.0,
            m: 2,
            alphas_deg: (0..10).map(|k| 10.0 * k as f64).collect(),
            mode: MeasurementMode::Mub,
        };
        let criteria = [
            Criterion::SHANNON,
            Criterion::TSALLIS2,
            Criterion::RENYI_HALF_INF,
            Criterion::DimensionBounded,
        ];
        let rows = sweep(&spec, &criteria).unwrap();
        assert_eq!(rows.len(), 40);
        assert!(rows.iter().all(|r| r.value <= 1e-12));
        assert_eq!(rows[1].criterion, "tsallis");
        assert_eq!(rows[4].alpha_deg, 10.0);

        let spec = SweepSpec {
            m: 3,
            phi_deg: 30.0,
            ..spec
        };
        let rows = sweep(&spec, &[Criterion::DimensionBounded]).unwrap();
        let want = (0.9733f64.powi(3) / 3f64.sqrt() - 1.0 / 9.0) / 12.0;
        for r in rows {
            assert_abs_diff_eq!(r.value, want, epsilon = 1e-12);
        }
        assert!(sweep(&spec, &[Criterion::RENYI_HALF_INF]).is_err());
    }

    #[test]
    fn sweep_csv_layout() {
        let spec = SweepSpec {
            mu: 0.9,
            phi_deg: 0.0,
            m: 2,
            alphas_deg: vec![0.0],
            mode: MeasurementMode::Mub,
        };
        let rows = sweep(&spec, &[Criterion::TSALLIS2]).unwrap();
        let mut buf = Vec::new();
        write_sweep_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "mu,alpha_deg,phi_deg,m,criterion,order,value,steerable"
        );
        assert!(lines
            .next()
            .unwrap()
            .starts_with("0.9,0.0,0.0,2,tsallis,2,"));
    }

    proptest! {
        #[test]
        fn even_in_angles(m_val in 0.0f64..=1.0, alpha in 0.0f64..90.0, phi in 0.0f64..90.0, three in any::<bool>()) {
            let m = if three { 3 } else { 2 };
            let mut criteria = vec![Criterion::SHANNON, Criterion::TSALLIS2, Criterion::DimensionBounded];
            if m == 2 {
                criteria.push(Criterion::RENYI_HALF_INF);
            }
            for c in criteria {
                let base = evaluate(&Scenario::mub(m_val, alpha, phi, m).unwrap(), c).unwrap().value;
                for (a, p) in [(-alpha, phi), (alpha, -phi), (-alpha, -phi)] {
                    let v = evaluate(&Scenario::mub(m_val, a, p, m).unwrap(), c).unwrap().value;
                    prop_assert!((v - base).abs() < 1e-10);
                }
            }
        }

        #[test]
        fn db2_depends_only_on_plane_normals(t1 in 0.0f64..360.0, t2 in 0.0f64..360.0, m_val in 0.0f64..=1.0) {
            let s = mub_settings(2, 0.0, 25.0).unwrap();
            let rotate = |pair: &[BlochVector], t: f64| {
                let (st, ct) = t.to_radians().sin_cos();
                vec![pair[0] * ct + pair[1] * st, pair[1] * ct - pair[0] * st]
            };
            let rotated = Settings::new(rotate(&s.alice, t1), rotate(&s.bob, t2)).unwrap();
            let base = db_steering(&s, mu(m_val)).unwrap().value;
            prop_assert!((db_steering(&rotated, mu(m_val)).unwrap().value - base).abs() <= 1e-12);
        }
    }
}
