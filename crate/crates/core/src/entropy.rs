//! Generalized entropies (natural logarithms throughout) and the
//! uncertainty-relation bounds used as classical bounds by the steering
//! criteria.

use std::f64::consts::LN_2;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::qcore::{JointTable, Outcome};

const DISTRIBUTION_TOL: f64 = 1e-10;

/// Entropy order. Orders exactly 1 and ∞ are carried as dedicated limit
/// variants so every formula can take its analytic limit branch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Order {
    Finite(f64),
    One,
    Infinity,
}

impl Order {
    pub fn new(value: f64) -> Result<Self> {
        if value == 1.0 {
            Ok(Order::One)
        } else if value == f64::INFINITY {
            Ok(Order::Infinity)
        } else if value.is_finite() && value > 0.0 {
            Ok(Order::Finite(value))
        } else {
            Err(invalid(format!(
                "entropy order must be positive, got {value}"
            )))
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Order::Finite(v) => v,
            Order::One => 1.0,
            Order::Infinity => f64::INFINITY,
        }
    }

    /// 1/order, with 1/∞ = 0.
    pub fn reciprocal(self) -> f64 {
        match self {
            Order::Infinity => 0.0,
            o => 1.0 / o.value(),
        }
    }

    /// Orders admitted by the Tsallis criteria: q ≥ 1, finite.
    pub fn ensure_tsallis(self) -> Result<()> {
        match self {
            Order::One => Ok(()),
            Order::Finite(q) if q > 1.0 => Ok(()),
            o => Err(invalid(format!(
                "Tsallis order must be finite and >= 1, got {o}"
            ))),
        }
    }

    /// Orders admitted by the Rényi criteria: r ≥ ½.
    pub fn ensure_renyi(self) -> Result<()> {
        if self.value() >= 0.5 {
            Ok(())
        } else {
            Err(invalid(format!("Renyi order must be >= 1/2, got {self}")))
        }
    }
}

impl fmt::Display for Order {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Order::Finite(v) => write!(f, "{v}"),
            Order::One => f.write_str("1"),
            Order::Infinity => f.write_str("inf"),
        }
    }
}

/// Finite probability distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution(Vec<f64>);

impl Distribution {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.is_empty() {
            return Err(invalid("empty distribution"));
        }
        if p.iter().any(|&v| !v.is_finite() || v < 0.0) {
            return Err(invalid("probabilities must be finite and non-negative"));
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > DISTRIBUTION_TOL {
            return Err(invalid(format!("probabilities sum to {sum}")));
        }
        Ok(Self(p))
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    fn support(&self) -> impl Iterator<Item = f64> + '_ {
        self.0.iter().copied().filter(|&p| p > 0.0)
    }
}

/// ln_q(x) = (x^{1−q} − 1)/(1 − q); ln x at q = 1.
pub fn q_log(x: f64, q: Order) -> Result<f64> {
    if x.is_nan() || x <= 0.0 {
        return Err(invalid(format!("q-logarithm needs x > 0, got {x}")));
    }
    match q {
        Order::One => Ok(x.ln()),
        Order::Finite(q) => Ok(((1.0 - q) * x.ln()).exp_m1() / (1.0 - q)),
        Order::Infinity => Err(invalid("q-logarithm is undefined at q = inf")),
    }
}

/// S_q(P) = −Σ p_i^q ln_q(p_i), with 0·ln_q(0) = 0.
pub fn tsallis_entropy(p: &Distribution, q: Order) -> Result<f64> {
    let qv = match q {
        Order::One => return Ok(shannon_entropy(p)),
        Order::Infinity => return Err(invalid("Tsallis entropy needs a finite order")),
        Order::Finite(v) => v,
    };
    p.support()
        .map(|pi| q_log(pi, q).map(|l| -pi.powf(qv) * l))
        .sum()
}

pub fn shannon_entropy(p: &Distribution) -> f64 {
    -p.support().map(|pi| pi * pi.ln()).sum::<f64>()
}

/// H_r(P) = ln(Σ p_i^r)/(1 − r); Shannon at r = 1, −ln max p at r = ∞.
pub fn renyi_entropy(p: &Distribution, r: Order) -> f64 {
    match r {
        Order::One => shannon_entropy(p),
        Order::Infinity => -p.support().fold(0.0, f64::max).ln(),
        Order::Finite(r) => p.support().map(|pi| pi.powf(r)).sum::<f64>().ln() / (1.0 - r),
    }
}

fn plogp_sum(values: impl Iterator<Item = f64>) -> f64 {
    -values.filter(|&p| p > 0.0).map(|p| p * p.ln()).sum::<f64>()
}

/// H(A,B) − H(A) for a joint table.
pub fn shannon_conditional(t: &JointTable) -> f64 {
    let joint = plogp_sum(t.entries().iter().flatten().copied());
    let alice = plogp_sum(Outcome::ALL.iter().map(|&a| t.alice_marginal(a)));
    joint - alice
}

/// Per-setting conditional term of the Tsallis criterion,
/// (1/(q−1))·[1 − Σ_ab p_ab^q / p_a^{q−1}].
///
/// Rows with zero Alice marginal contribute nothing; at q = 1 this is the
/// Shannon conditional entropy H(B|A).
pub fn tsallis_directed_term(t: &JointTable, q: Order) -> Result<f64> {
    q.ensure_tsallis()?;
    let q = match q {
        Order::One => return Ok(shannon_conditional(t)),
        o => o.value(),
    };
    let mut acc = 0.0;
    for a in Outcome::ALL {
        let pa = t.alice_marginal(a);
        if pa <= 0.0 {
            continue;
        }
        for b in Outcome::ALL {
            let pab = t.prob(a, b);
            if pab > 0.0 {
                acc += pab.powf(q) / pa.powf(q - 1.0);
            }
        }
    }
    Ok((1.0 - acc) / (q - 1.0))
}

/// Arimoto conditional Rényi entropy
/// (r/(1−r))·ln Σ_a [Σ_b p(a,b)^r]^{1/r}.
///
/// r = ∞ gives −ln Σ_a max_b p(a,b), r = 1 the Shannon conditional entropy.
pub fn arimoto_conditional_renyi(t: &JointTable, r: Order) -> Result<f64> {
    r.ensure_renyi()?;
    let rows = t.entries();
    let value = match r {
        Order::One => shannon_conditional(t),
        Order::Infinity => -rows.iter().map(|row| row[0].max(row[1])).sum::<f64>().ln(),
        Order::Finite(r) => {
            let s: f64 = rows
                .iter()
                .map(|row| {
                    let inner: f64 = row.iter().filter(|&&p| p > 0.0).map(|p| p.powf(r)).sum();
                    inner.powf(1.0 / r)
                })
                .sum();
            r / (1.0 - r) * s.ln()
        }
    };
    Ok(value)
}

/// Tsallis uncertainty bound for Bob's mutually unbiased qubit settings:
/// ln_q 2 for two settings, 2·ln_q 2 for three.
///
/// `override_bound` supplies the bound for any other measurement set and
/// takes precedence.
pub fn eur_bound_tsallis(q: Order, m: usize, override_bound: Option<f64>) -> Result<f64> {
    q.ensure_tsallis()?;
    if let Some(b) = override_bound {
        return if b.is_finite() {
            Ok(b)
        } else {
            Err(invalid("override bound must be finite"))
        };
    }
    let ln_q2 = q_log(2.0, q)?;
    match m {
        2 => Ok(ln_q2),
        3 => Ok(2.0 * ln_q2),
        _ => Err(invalid(format!(
            "no built-in Tsallis bound for {m} settings; supply an override"
        ))),
    }
}

/// Rényi bound for two mutually unbiased qubit settings, independent of
/// the order pair.
pub fn eur_bound_renyi2() -> f64 {
    LN_2
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{joint_table_closed, BlochVector, WernerParam};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn dist(p: &[f64]) -> Distribution {
        Distribution::new(p.to_vec()).unwrap()
    }

    fn q(v: f64) -> Order {
        Order::new(v).unwrap()
    }

    fn table(p: [[f64; 2]; 2]) -> JointTable {
        JointTable::new(1, p).unwrap()
    }

    /// Werner table along directions with overlap x (μ = 1).
    fn werner_table(x: f64) -> JointTable {
        let v = BlochVector::new((1.0 - x * x).max(0.0).sqrt(), 0.0, x);
        joint_table_closed(WernerParam::new(1.0).unwrap(), &BlochVector::Z, &v).unwrap()
    }

    #[test]
    fn order_parsing() {
        assert_eq!(q(1.0), Order::One);
        assert_eq!(q(f64::INFINITY), Order::Infinity);
        assert!(Order::new(0.0).is_err());
        assert!(Order::new(f64::NAN).is_err());
        assert_eq!(Order::Infinity.reciprocal(), 0.0);
    }

    #[test]
    fn q_log_examples() {
        for order in [0.5, 1.0, 2.0, 3.7] {
            assert_abs_diff_eq!(q_log(1.0, q(order)).unwrap(), 0.0);
        }
        assert_abs_diff_eq!(q_log(2.0, q(2.0)).unwrap(), 0.5, epsilon = 1e-15);
        assert!((q_log(std::f64::consts::E, q(1.001)).unwrap() - 1.0).abs() < 2e-3);
        assert!(q_log(0.0, q(2.0)).is_err());
        assert!(q_log(-1.0, Order::One).is_err());
    }

    #[test]
    fn tsallis_examples() {
        assert_abs_diff_eq!(tsallis_entropy(&dist(&[1.0, 0.0]), q(2.0)).unwrap(), 0.0);
        assert_abs_diff_eq!(
            tsallis_entropy(&dist(&[0.5, 0.5]), q(2.0)).unwrap(),
            0.5,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            tsallis_entropy(&dist(&[0.5, 0.5]), Order::One).unwrap(),
            LN_2
        );
    }

    #[test]
    fn shannon_examples() {
        assert_abs_diff_eq!(shannon_entropy(&dist(&[1.0, 0.0])), 0.0);
        assert_abs_diff_eq!(shannon_entropy(&dist(&[0.5, 0.5])), LN_2, epsilon = 1e-15);
        assert_abs_diff_eq!(
            shannon_entropy(&dist(&[0.75, 0.25])),
            0.562335,
            epsilon = 1e-6
        );
    }

    #[test]
    fn renyi_examples() {
        for r in [0.5, 1.0, 2.0, f64::INFINITY] {
            assert_abs_diff_eq!(
                renyi_entropy(&dist(&[0.5, 0.5]), q(r)),
                LN_2,
                epsilon = 1e-15
            );
        }
        let p = dist(&[0.75, 0.25]);
        assert_abs_diff_eq!(renyi_entropy(&p, Order::Infinity), 0.287682, epsilon = 1e-6);
        assert_abs_diff_eq!(
            renyi_entropy(&p, q(0.5)),
            2.0 * (0.75f64.sqrt() + 0.5).ln(),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(renyi_entropy(&p, q(0.5)), 0.623811, epsilon = 1e-6);
    }

    #[test]
    fn distribution_validation() {
        assert!(Distribution::new(vec![]).is_err());
        assert!(Distribution::new(vec![0.5, 0.6]).is_err());
        assert!(Distribution::new(vec![1.5, -0.5]).is_err());
    }

    #[test]
    fn directed_term_examples() {
        let anti = table([[0.0, 0.5], [0.5, 0.0]]);
        for order in [1.0, 1.5, 2.0, 5.0] {
            assert_abs_diff_eq!(
                tsallis_directed_term(&anti, q(order)).unwrap(),
                0.0,
                epsilon = 1e-15
            );
        }
        let uniform = JointTable::uniform(1);
        assert_abs_diff_eq!(
            tsallis_directed_term(&uniform, Order::One).unwrap(),
            LN_2,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            tsallis_directed_term(&uniform, q(2.0)).unwrap(),
            0.5,
            epsilon = 1e-15
        );
        assert!(tsallis_directed_term(&uniform, q(0.5)).is_err());
    }

    #[test]
    fn directed_term_skips_empty_rows() {
        let t = table([[0.0, 0.0], [0.3, 0.7]]);
        let want = (1.0 - (0.3f64.powi(2) + 0.7f64.powi(2))) / 1.0;
        assert_abs_diff_eq!(
            tsallis_directed_term(&t, q(2.0)).unwrap(),
            want,
            epsilon = 1e-15
        );
    }

    #[test]
    fn arimoto_examples() {
        let anti = table([[0.0, 0.5], [0.5, 0.0]]);
        for r in [0.5, 1.0, 2.0, f64::INFINITY] {
            assert_abs_diff_eq!(
                arimoto_conditional_renyi(&anti, q(r)).unwrap(),
                0.0,
                epsilon = 1e-15
            );
        }
        for x in [-0.9, -0.3, 0.0, 0.4, 0.8, 1.0] {
            let t = werner_table(x);
            let half = arimoto_conditional_renyi(&t, q(0.5)).unwrap();
            assert_abs_diff_eq!(
                half,
                (1.0 + (1.0 - x * x).max(0.0).sqrt()).ln(),
                epsilon = 1e-12
            );
            let inf = arimoto_conditional_renyi(&t, Order::Infinity).unwrap();
            assert_abs_diff_eq!(inf, LN_2 - (1.0 + x.abs()).ln(), epsilon = 1e-12);
        }
        assert!(arimoto_conditional_renyi(&anti, q(0.4)).is_err());
    }

    #[test]
    fn bounds() {
        assert_abs_diff_eq!(eur_bound_tsallis(Order::One, 2, None).unwrap(), LN_2);
        assert_abs_diff_eq!(eur_bound_tsallis(q(2.0), 2, None).unwrap(), 0.5);
        assert_abs_diff_eq!(eur_bound_tsallis(q(2.0), 3, None).unwrap(), 1.0);
        assert!(eur_bound_tsallis(q(2.0), 4, None).is_err());
        assert_abs_diff_eq!(eur_bound_tsallis(q(2.0), 4, Some(1.25)).unwrap(), 1.25);

        assert_abs_diff_eq!(eur_bound_renyi2(), 2.0 * 2f64.sqrt().ln(), epsilon = 1e-15);
        assert_eq!(
            eur_bound_renyi2(),
            eur_bound_tsallis(Order::One, 2, None).unwrap()
        );
    }

    fn distribution(max_len: usize) -> impl Strategy<Value = Distribution> {
        prop::collection::vec(0.0f64..1.0, 2..max_len).prop_filter_map("zero mass", |w| {
            let total: f64 = w.iter().sum();
            (total > 1e-6)
                .then(|| Distribution::new(w.iter().map(|x| x / total).collect()).unwrap())
        })
    }

    fn any_table() -> impl Strategy<Value = JointTable> {
        prop::collection::vec(0.0f64..1.0, 4).prop_filter_map("zero mass", |w| {
            let total: f64 = w.iter().sum();
            (total > 1e-6).then(|| {
                let p: Vec<f64> = w.iter().map(|x| x / total).collect();
                JointTable::new(1, [[p[0], p[1]], [p[2], p[3]]]).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn tsallis_tends_to_shannon(p in distribution(8)) {
            let h = shannon_entropy(&p);
            for order in [1.0 - 1e-4, 1.0 + 1e-4] {
                prop_assert!((tsallis_entropy(&p, q(order)).unwrap() - h).abs() < 1e-3);
            }
        }

        #[test]
        fn renyi_tends_to_shannon(p in distribution(8)) {
            let h = shannon_entropy(&p);
            for order in [1.0 - 1e-4, 1.0 + 1e-4] {
                prop_assert!((renyi_entropy(&p, q(order)) - h).abs() < 1e-3);
            }
        }

        #[test]
        fn renyi_non_increasing(p in distribution(8)) {
            let orders = [0.5, 0.8, 1.0, 1.5, 2.0, 4.0, 10.0, f64::INFINITY];
            let values: Vec<f64> = orders.iter().map(|&r| renyi_entropy(&p, q(r))).collect();
            for w in values.windows(2) {
                prop_assert!(w[1] <= w[0] + 1e-12);
            }
        }

        #[test]
        fn arimoto_range(t in any_table(), r in prop::sample::select(vec![0.5, 0.7, 1.0, 2.0, 3.0, f64::INFINITY])) {
            let h = arimoto_conditional_renyi(&t, q(r)).unwrap();
            prop_assert!((-1e-12..=LN_2 + 1e-12).contains(&h));
        }

        #[test]
        fn directed_term_limit(t in any_table()) {
            let joint = Distribution::new(t.entries().iter().flatten().copied().collect()).unwrap();
            let alice = Distribution::new(Outcome::ALL.iter().map(|&a| t.alice_marginal(a)).collect()).unwrap();
            let want = shannon_entropy(&joint) - shannon_entropy(&alice);
            prop_assert!((tsallis_directed_term(&t, Order::One).unwrap() - want).abs() < 1e-9);
        }
    }
}
