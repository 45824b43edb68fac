//! Two-qubit Werner states, qubit projective measurements and joint outcome
//! tables.
//!
//! Conventions: the computational basis is the σ_z eigenbasis with |0⟩ the
//! +1 eigenstate, and the singlet is (|01⟩ − |10⟩)/√2, so that
//! ⟨u·σ ⊗ v·σ⟩ = −u·v.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, Matrix2, Matrix4, Vector4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result, SteeringError};

/// Tolerance on |v| for a vector to count as a measurement direction.
pub const UNIT_TOL: f64 = 1e-12;
const HERMITIAN_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-12;
const PSD_TOL: f64 = 1e-10;
const TABLE_TOL: f64 = 1e-12;

/// Real 3-vector on or inside the Bloch sphere.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub const X: BlochVector = BlochVector::new(1.0, 0.0, 0.0);
    pub const Y: BlochVector = BlochVector::new(0.0, 1.0, 0.0);
    pub const Z: BlochVector = BlochVector::new(0.0, 0.0, 1.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    /// Builds a measurement direction, rejecting anything that is not unit
    /// norm to within [`UNIT_TOL`].
    pub fn unit(x: f64, y: f64, z: f64) -> Result<Self> {
        let v = Self::new(x, y, z);
        v.ensure_unit()?;
        Ok(v)
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn cross(&self, other: &Self) -> Self {
        Self::new(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )
    }

    /// Scalar triple product a · (b × c).
    pub fn triple(&self, b: &Self, c: &Self) -> f64 {
        self.dot(&b.cross(c))
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Returns `None` for the zero vector.
    pub fn normalized(&self) -> Option<Self> {
        let n = self.norm();
        (n > 0.0 && n.is_finite()).then(|| *self * (1.0 / n))
    }

    pub fn is_unit(&self) -> bool {
        (self.norm() - 1.0).abs() <= UNIT_TOL
    }

    pub fn ensure_unit(&self) -> Result<()> {
        if self.is_unit() {
            Ok(())
        } else {
            Err(SteeringError::NotUnitVector { norm: self.norm() })
        }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    /// u·σ as a 2×2 operator.
    pub fn pauli_operator(&self) -> Matrix2<Complex64> {
        let c = |re: f64, im: f64| Complex64::new(re, im);
        Matrix2::new(
            c(self.z, 0.0),
            c(self.x, -self.y),
            c(self.x, self.y),
            c(-self.z, 0.0),
        )
    }
}

impl From<[f64; 3]> for BlochVector {
    fn from(v: [f64; 3]) -> Self {
        Self::new(v[0], v[1], v[2])
    }
}

impl Add for BlochVector {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for BlochVector {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for BlochVector {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Neg for BlochVector {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y, -self.z)
    }
}

impl fmt::Display for BlochVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.x, self.y, self.z)
    }
}

/// Measurement outcome label ±1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Plus,
    Minus,
}

impl Outcome {
    pub const ALL: [Outcome; 2] = [Outcome::Plus, Outcome::Minus];

    pub fn sign(self) -> f64 {
        match self {
            Outcome::Plus => 1.0,
            Outcome::Minus => -1.0,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Outcome::Plus => 0,
            Outcome::Minus => 1,
        }
    }

    pub fn from_sign(s: i64) -> Option<Self> {
        match s {
            1 => Some(Outcome::Plus),
            -1 => Some(Outcome::Minus),
            _ => None,
        }
    }
}

/// Werner mixing probability μ ∈ [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct WernerParam(f64);

impl WernerParam {
    pub fn new(mu: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&mu) {
            Ok(Self(mu))
        } else {
            Err(invalid(format!(
                "mixing probability must lie in [0, 1], got {mu}"
            )))
        }
    }

    /// μ = (4F − 1)/3 for singlet fidelity F.
    pub fn from_fidelity(fidelity: f64) -> Result<Self> {
        Self::new(fidelity_to_mu(fidelity))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn fidelity(self) -> f64 {
        mu_to_fidelity(self.0)
    }
}

pub fn fidelity_to_mu(fidelity: f64) -> f64 {
    (4.0 * fidelity - 1.0) / 3.0
}

pub fn mu_to_fidelity(mu: f64) -> f64 {
    (1.0 + 3.0 * mu) / 4.0
}

/// Two-qubit density matrix (4×4, Hermitian, unit trace, PSD).
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(Matrix4<Complex64>);

impl DensityMatrix {
    pub fn new(m: Matrix4<Complex64>) -> Result<Self> {
        let rho = Self(m);
        rho.validate()?;
        Ok(rho)
    }

    pub fn matrix(&self) -> &Matrix4<Complex64> {
        &self.0
    }

    pub fn validate(&self) -> Result<()> {
        let m = &self.0;
        if m.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(SteeringError::InvalidState("non-finite entry".into()));
        }
        let herm_err = (m - m.adjoint())
            .iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max);
        if herm_err > HERMITIAN_TOL {
            return Err(SteeringError::InvalidState(format!(
                "not Hermitian (max deviation {herm_err:e})"
            )));
        }
        let tr = m.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(SteeringError::InvalidState(format!("trace {tr} != 1")));
        }
        let min_eig = self
            .eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        if min_eig < -PSD_TOL {
            return Err(SteeringError::InvalidState(format!(
                "negative eigenvalue {min_eig:e}"
            )));
        }
        Ok(())
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self.0.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn purity(&self) -> f64 {
        (self.0 * self.0).trace().re
    }

    /// ⟨ψ_s|ρ|ψ_s⟩.
    pub fn singlet_fidelity(&self) -> f64 {
        let psi = singlet();
        (psi.adjoint() * self.0 * psi)[(0, 0)].re
    }

    /// tr[(A ⊗ B) ρ].
    pub fn expectation(&self, a: &Matrix2<Complex64>, b: &Matrix2<Complex64>) -> Complex64 {
        (a.kronecker(b) * self.0).trace()
    }
}

fn singlet() -> Vector4<Complex64> {
    let s = Complex64::new(FRAC_1_SQRT_2, 0.0);
    let z = Complex64::new(0.0, 0.0);
    Vector4::new(z, s, -s, z)
}

/// μ|ψ_s⟩⟨ψ_s| + (1 − μ)/4 · I₄.
pub fn werner_state(mu: WernerParam) -> DensityMatrix {
    let mu = mu.value();
    let psi = singlet();
    let proj = psi * psi.adjoint();
    let noise = Matrix4::<Complex64>::identity() * Complex64::new((1.0 - mu) / 4.0, 0.0);
    DensityMatrix(proj * Complex64::new(mu, 0.0) + noise)
}

/// ½(I ± u·σ).
pub fn bloch_projector(u: &BlochVector, outcome: Outcome) -> Result<Matrix2<Complex64>> {
    u.ensure_unit()?;
    let half = Complex64::new(0.5, 0.0);
    let id = Matrix2::<Complex64>::identity();
    Ok((id + u.pauli_operator() * Complex64::new(outcome.sign(), 0.0)) * half)
}

/// Joint outcome probabilities p(a, b) for one pair of settings.
///
/// Rows are Alice's outcome, columns Bob's, both ordered (+1, −1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointTable {
    /// Setting index the table belongs to (1-based; 0 when unassigned).
    pub setting: usize,
    p: [[f64; 2]; 2],
}

impl JointTable {
    pub fn new(setting: usize, p: [[f64; 2]; 2]) -> Result<Self> {
        let t = Self { setting, p };
        t.validate()?;
        Ok(t)
    }

    pub fn uniform(setting: usize) -> Self {
        Self {
            setting,
            p: [[0.25; 2]; 2],
        }
    }

    fn validate(&self) -> Result<()> {
        let mut sum = 0.0;
        for &v in self.p.iter().flatten() {
            if !v.is_finite() || !(-TABLE_TOL..=1.0 + TABLE_TOL).contains(&v) {
                return Err(SteeringError::InvalidTable(format!(
                    "entry {v} outside [0, 1]"
                )));
            }
            sum += v;
        }
        if (sum - 1.0).abs() > TABLE_TOL {
            return Err(SteeringError::InvalidTable(format!("entries sum to {sum}")));
        }
        Ok(())
    }

    pub fn prob(&self, a: Outcome, b: Outcome) -> f64 {
        self.p[a.index()][b.index()]
    }

    pub fn entries(&self) -> &[[f64; 2]; 2] {
        &self.p
    }

    pub fn alice_marginal(&self, a: Outcome) -> f64 {
        let row = self.p[a.index()];
        row[0] + row[1]
    }

    pub fn bob_marginal(&self, b: Outcome) -> f64 {
        self.p[0][b.index()] + self.p[1][b.index()]
    }

    /// E = Σ_ab a·b·p(a, b).
    pub fn correlation(&self) -> f64 {
        self.p[0][0] + self.p[1][1] - self.p[0][1] - self.p[1][0]
    }
}

/// Born-rule table tr[(Π_a(u) ⊗ Π_b(v)) ρ].
pub fn joint_table_trace(
    rho: &DensityMatrix,
    u: &BlochVector,
    v: &BlochVector,
) -> Result<JointTable> {
    rho.validate()?;
    let mut p = [[0.0; 2]; 2];
    for a in Outcome::ALL {
        let pa = bloch_projector(u, a)?;
        for b in Outcome::ALL {
            let pb = bloch_projector(v, b)?;
            p[a.index()][b.index()] = rho.expectation(&pa, &pb).re;
        }
    }
    JointTable::new(0, p)
}

/// Werner closed form p(a, b) = (1 − a·b·μ·(u·v))/4.
pub fn joint_table_closed(mu: WernerParam, u: &BlochVector, v: &BlochVector) -> Result<JointTable> {
    u.ensure_unit()?;
    v.ensure_unit()?;
    let overlap = mu.value() * u.dot(v);
    let mut p = [[0.0; 2]; 2];
    for a in Outcome::ALL {
        for b in Outcome::ALL {
            p[a.index()][b.index()] = (1.0 - a.sign() * b.sign() * overlap) / 4.0;
        }
    }
    JointTable::new(0, p)
}

/// Paired measurement directions: Alice's k-th setting is measured together
/// with Bob's k-th setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Settings {
    pub alice: Vec<BlochVector>,
    pub bob: Vec<BlochVector>,
}

impl Settings {
    pub fn new(alice: Vec<BlochVector>, bob: Vec<BlochVector>) -> Result<Self> {
        if alice.len() != bob.len() {
            return Err(SteeringError::SettingsMismatch(format!(
                "Alice has {} settings, Bob has {}",
                alice.len(),
                bob.len()
            )));
        }
        if alice.is_empty() {
            return Err(SteeringError::SettingsMismatch("no settings".into()));
        }
        for v in alice.iter().chain(&bob) {
            v.ensure_unit()?;
        }
        Ok(Self { alice, bob })
    }

    pub fn len(&self) -> usize {
        self.alice.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alice.is_empty()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (&BlochVector, &BlochVector)> {
        self.alice.iter().zip(&self.bob)
    }

    /// Paired tables from the Werner closed form, numbered from 1.
    pub fn werner_tables(&self, mu: WernerParam) -> Result<Vec<JointTable>> {
        self.pairs()
            .enumerate()
            .map(|(k, (u, v))| {
                joint_table_closed(mu, u, v).map(|t| JointTable {
                    setting: k + 1,
                    ..t
                })
            })
            .collect()
    }

    /// Paired tables from the trace path, numbered from 1.
    pub fn trace_tables(&self, rho: &DensityMatrix) -> Result<Vec<JointTable>> {
        self.pairs()
            .enumerate()
            .map(|(k, (u, v))| {
                joint_table_trace(rho, u, v).map(|t| JointTable {
                    setting: k + 1,
                    ..t
                })
            })
            .collect()
    }
}

fn check_setting_count(m: usize) -> Result<()> {
    if m == 2 || m == 3 {
        Ok(())
    } else {
        Err(invalid(format!(
            "number of settings must be 2 or 3, got {m}"
        )))
    }
}

/// Mutually unbiased settings with Alice rotated by `alpha_deg` in her plane
/// and her plane tilted by `phi_deg`.
///
/// Bob measures (z, x) for m = 2 and (z, y, x) for m = 3. Alice's in-plane
/// axis x is tilted towards y, x' = cosΦ x + sinΦ y, and
///
/// * a₁ = cosα z + sinα x'
/// * a₂ = cosΦ y − sinΦ x (m = 3 only, paired with Bob's y)
/// * a₃ = −sinα z + cosα x' (paired with Bob's x)
///
/// giving diagonal overlaps cosα, cosΦ and cosΦ cosα.
pub fn mub_settings(m: usize, alpha_deg: f64, phi_deg: f64) -> Result<Settings> {
    check_setting_count(m)?;
    if !alpha_deg.is_finite() || !phi_deg.is_finite() {
        return Err(invalid("angles must be finite"));
    }
    let (sa, ca) = alpha_deg.to_radians().sin_cos();
    let (sp, cp) = phi_deg.to_radians().sin_cos();
    let x_tilt = BlochVector::X * cp + BlochVector::Y * sp;
    let a1 = BlochVector::Z * ca + x_tilt * sa;
    let a3 = BlochVector::Z * (-sa) + x_tilt * ca;
    let (alice, bob) = if m == 2 {
        (vec![a1, a3], vec![BlochVector::Z, BlochVector::X])
    } else {
        let a2 = BlochVector::Y * cp - BlochVector::X * sp;
        (
            vec![a1, a2, a3],
            vec![BlochVector::Z, BlochVector::Y, BlochVector::X],
        )
    };
    Settings::new(alice, bob)
}

/// Fixed non-orthogonal settings for Alice against orthogonal settings for
/// Bob.
///
/// Alice: u₁ = (0, 0, 1), u₂ = (√3/2, 0, ½), u₃ = (1/(2√3), √(2/3), ½).
/// Bob is paired as (z, x) for m = 2 and (z, x, y) for m = 3, so the paired
/// overlaps are 1, √3/2 and √(2/3).
pub fn nom_settings(m: usize) -> Result<Settings> {
    check_setting_count(m)?;
    let s3 = 3f64.sqrt();
    let u1 = BlochVector::Z;
    let u2 = BlochVector::new(s3 / 2.0, 0.0, 0.5);
    if m == 2 {
        return Settings::new(vec![u1, u2], vec![BlochVector::Z, BlochVector::X]);
    }
    let u3 = BlochVector::new(1.0 / (2.0 * s3), (2.0f64 / 3.0).sqrt(), 0.5);
    Settings::new(
        vec![u1, u2, u3],
        vec![BlochVector::Z, BlochVector::X, BlochVector::Y],
    )
}

/// E_xy = Σ_ab a·b·p(a, b | x, y) = −μ u_x·v_y for the Werner state, over
/// all cross pairs of settings.
pub fn correlation_matrix(mu: WernerParam, settings: &Settings) -> DMatrix<f64> {
    let m = settings.len();
    DMatrix::from_fn(m, m, |x, y| {
        -mu.value() * settings.alice[x].dot(&settings.bob[y])
    })
}

/// Correlation matrix assembled from Born-rule tables of every cross pair.
pub fn correlation_matrix_trace(rho: &DensityMatrix, settings: &Settings) -> Result<DMatrix<f64>> {
    let m = settings.len();
    let mut e = DMatrix::zeros(m, m);
    for x in 0..m {
        for y in 0..m {
            e[(x, y)] = joint_table_trace(rho, &settings.alice[x], &settings.bob[y])?.correlation();
        }
    }
    Ok(e)
}
