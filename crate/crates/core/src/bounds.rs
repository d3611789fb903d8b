//! Frobenius versus Kullback-Leibler: balancedness, the kappa constants, the
//! bound `||P~ - Lambda~||_F^2 <= kappa^{-1} sum_j p_j KL(P_j || Lambda_j)`,
//! the coherence lower bound it implies, and the l2 Pinsker-type inequalities
//! behind it.
//!
//! All arithmetic is on extended reals: an infinite KL divergence gives a
//! vacuous `+inf` bound, never an error.

use serde::{Deserialize, Serialize};

use crate::dbmr::{DbmrProblem, ReducedModel};
use crate::model::{check_probability, kl_unchecked};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BalancednessKind {
    Plain,
    Weighted,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BalancednessValue {
    pub value: f64,
    pub kind: BalancednessKind,
}

fn l1(x: &[f64]) -> f64 {
    x.iter().map(|v| v.abs()).sum()
}

/// `||x||_1 / (m ||x||_inf)`, 1 for the zero vector.
pub fn balancedness(x: &[f64]) -> BalancednessValue {
    let max = x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let value = if max == 0.0 { 1.0 } else { l1(x) / (x.len() as f64 * max) };
    BalancednessValue {
        value,
        kind: BalancednessKind::Plain,
    }
}

/// `||x||_1 / max_i |x_i| / q_i`, 1 for the zero vector.
pub fn q_balancedness(x: &[f64], q: &[f64]) -> Result<BalancednessValue> {
    if x.len() != q.len() {
        return Err(Error::shape(format!("x of length {}, q of length {}", x.len(), q.len())));
    }
    if q.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::InvalidProbability("q must be strictly positive".into()));
    }
    Ok(q_balancedness_unchecked(x, q))
}

fn q_balancedness_unchecked(x: &[f64], q: &[f64]) -> BalancednessValue {
    let max = x.iter().zip(q).fold(0.0f64, |a, (v, w)| a.max(v.abs() / w));
    let value = if max == 0.0 { 1.0 } else { l1(x) / max };
    BalancednessValue {
        value,
        kind: BalancednessKind::Weighted,
    }
}

/// `(2/3) max_i |u_i - v_i| / u_i` with `0/0 = 0`; `+inf` if `u_i = 0 != v_i`.
pub fn alpha(u: &[f64], v: &[f64]) -> f64 {
    let worst = u.iter().zip(v).fold(0.0f64, |acc, (&a, &b)| {
        let d = (a - b).abs();
        let ratio = if d == 0.0 {
            0.0
        } else if a == 0.0 {
            f64::INFINITY
        } else {
            d / a
        };
        acc.max(ratio)
    });
    2.0 / 3.0 * worst
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KappaTag {
    Q1,
    Q2,
    Pr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KappaChoice {
    Q1,
    Q2,
    Pr,
    Post,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Kappas {
    /// `1/2 min_j B_q(P_j - Lambda_j)`
    #[serde(with = "crate::io::ext_real")]
    pub q1: f64,
    /// `1/2 min_j B_q(P_j) (1 - alpha_j)`; may be negative or `-inf`.
    #[serde(with = "crate::io::ext_real")]
    pub q2: f64,
    /// `min_i q_i / 2`
    pub pr: f64,
    /// `max(q1, q2)` over the usable ones.
    pub post: f64,
    pub post_tag: KappaTag,
    /// `q2` is a valid constant only when every `alpha_j < 1`.
    pub q2_usable: bool,
    #[serde(with = "crate::io::ext_real_vec")]
    pub alpha: Vec<f64>,
}

impl Kappas {
    pub fn select(&self, choice: KappaChoice) -> (f64, KappaTag, bool) {
        match choice {
            KappaChoice::Q1 => (self.q1, KappaTag::Q1, true),
            KappaChoice::Q2 => (self.q2, KappaTag::Q2, self.q2_usable),
            KappaChoice::Pr => (self.pr, KappaTag::Pr, true),
            KappaChoice::Post => (self.post, self.post_tag, true),
        }
    }
}

pub fn kappas(problem: &DbmrProblem, reduced: &ReducedModel) -> Result<Kappas> {
    let model = &problem.model;
    let (m, n) = (model.outputs(), model.inputs());
    if reduced.lambda.nrows() != m || reduced.affiliation.len() != n {
        return Err(Error::shape("reduced model does not match the counts"));
    }
    let q = model.output.as_slice();
    let labels = reduced.affiliation.labels();
    let mut q1 = f64::INFINITY;
    let mut q2 = f64::INFINITY;
    let mut alphas = Vec::with_capacity(n);
    for j in 0..n {
        let p_col: Vec<f64> = model.transition.column(j).iter().copied().collect();
        let l_col: Vec<f64> = reduced.lambda.column(labels[j]).iter().copied().collect();
        let diff: Vec<f64> = p_col.iter().zip(&l_col).map(|(a, b)| a - b).collect();
        q1 = q1.min(q_balancedness_unchecked(&diff, q).value);
        let a = alpha(&p_col, &l_col);
        q2 = q2.min(q_balancedness_unchecked(&p_col, q).value * (1.0 - a));
        alphas.push(a);
    }
    q1 *= 0.5;
    q2 *= 0.5;
    let q2_usable = alphas.iter().all(|&a| a < 1.0);
    let pr = q.iter().copied().fold(f64::INFINITY, f64::min) / 2.0;
    let (post, post_tag) = if q2_usable && q2 > q1 {
        (q2, KappaTag::Q2)
    } else {
        (q1, KappaTag::Q1)
    };
    debug_assert!(post >= pr * (1.0 - 1e-12));
    Ok(Kappas {
        q1,
        q2,
        pr,
        post,
        post_tag,
        q2_usable,
        alpha: alphas,
    })
}

/// `sum_j p_j KL(P_j || Lambda_j)`.
pub fn weighted_kl_sum(problem: &DbmrProblem, reduced: &ReducedModel) -> f64 {
    let model = &problem.model;
    let labels = reduced.affiliation.labels();
    (0..model.inputs())
        .map(|j| {
            let kl = kl_unchecked(
                model.transition.column(j).iter().copied(),
                reduced.lambda.column(labels[j]).iter().copied(),
            );
            if kl == 0.0 {
                0.0
            } else {
                model.input[j] * kl
            }
        })
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub kappas: Kappas,
    #[serde(with = "crate::io::ext_real")]
    pub kappa_used: f64,
    pub kappa_tag: KappaTag,
    /// False when the chosen constant is not admissible (unusable `q2`).
    pub kappa_valid: bool,
    /// `||P~ - Lambda~||_F^2`
    pub lhs: f64,
    /// `kappa^{-1} sum_j p_j KL(P_j || Lambda_j)`
    #[serde(with = "crate::io::ext_real")]
    pub mid: f64,
    /// `(l(P, Id) - l(lambda, Gamma)) / (kappa S)`
    #[serde(with = "crate::io::ext_real")]
    pub rhs_likelihood_form: f64,
    /// `||P~||_F^2 - rhs_likelihood_form`
    #[serde(with = "crate::io::ext_real")]
    pub coherence_lower_bound: f64,
    #[serde(with = "crate::io::ext_real")]
    pub relaxed_likelihood: f64,
    pub reference_likelihood: f64,
}

impl BoundReport {
    /// `lhs <= mid` and agreement of the two right-hand forms, within the
    /// given tolerances. Vacuous (`+inf`) bounds hold trivially.
    pub fn chain_holds(&self, abs_tol: f64, rel_tol: f64) -> bool {
        if !self.kappa_valid {
            return false;
        }
        let inequality = self.lhs <= self.mid + abs_tol;
        let forms = if self.mid.is_finite() && self.rhs_likelihood_form.is_finite() {
            (self.mid - self.rhs_likelihood_form).abs() <= rel_tol * (1.0 + self.mid.abs())
        } else {
            self.mid == self.rhs_likelihood_form
        };
        inequality && forms
    }
}

pub fn frobenius_kl_bound(
    problem: &DbmrProblem,
    reduced: &ReducedModel,
    choice: KappaChoice,
) -> Result<BoundReport> {
    let kappas = kappas(problem, reduced)?;
    let (kappa, tag, valid) = kappas.select(choice);
    let s = problem.total() as f64;
    let kl_sum = weighted_kl_sum(problem, reduced);
    let relaxed = problem.relaxed_likelihood(&reduced.lambda, &reduced.affiliation)?;
    let gap = problem.reference_likelihood - relaxed;
    let mid = scaled(kl_sum, kappa);
    let rhs = scaled(gap, kappa * s);
    Ok(BoundReport {
        lhs: problem.frobenius_gap(reduced),
        mid,
        rhs_likelihood_form: rhs,
        coherence_lower_bound: problem.rescaled_norm_sq - rhs,
        kappa_used: kappa,
        kappa_tag: tag,
        kappa_valid: valid,
        kappas,
        relaxed_likelihood: relaxed,
        reference_likelihood: problem.reference_likelihood,
    })
}

/// Lower bound on `||Lambda~||_F^2`: `(l(lambda, Gamma) - l(P, Id)) / (kappa S) + ||P~||_F^2`.
pub fn coherence_lower_bound(problem: &DbmrProblem, reduced: &ReducedModel, kappa: f64) -> Result<f64> {
    let relaxed = problem.relaxed_likelihood(&reduced.lambda, &reduced.affiliation)?;
    if relaxed == f64::NEG_INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    let s = problem.total() as f64;
    Ok((relaxed - problem.reference_likelihood) / (kappa * s) + problem.rescaled_norm_sq)
}

/// `x / k` with `0 / k = 0` even for degenerate `k`.
fn scaled(x: f64, k: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x / k
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PinskerBound {
    #[serde(with = "crate::io::ext_real")]
    pub bound: f64,
    pub applicable: bool,
}

/// Right-hand sides of the four l2 Pinsker-type inequalities and the
/// distances they bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PinskerBounds {
    #[serde(with = "crate::io::ext_real")]
    pub kl: f64,
    #[serde(with = "crate::io::ext_real")]
    pub alpha: f64,
    /// `||u - v||_2^2`, bounded by (a) and (c).
    pub l2_sq: f64,
    /// `sum_i (u_i - v_i)^2 / q_i`, bounded by (b) and (d).
    pub weighted_l2_sq: f64,
    /// `2 KL / (m B(u - v))`
    pub a: PinskerBound,
    /// `2 KL / B_q(u - v)`
    pub b: PinskerBound,
    /// `2 KL / (m B(u) (1 - alpha))`, if `alpha < 1`
    pub c: PinskerBound,
    /// `2 KL / (B_q(u) (1 - alpha))`, if `alpha < 1`
    pub d: PinskerBound,
}

pub fn pinsker_l2(u: &[f64], v: &[f64], q: &[f64]) -> Result<PinskerBounds> {
    let m = u.len();
    if v.len() != m || q.len() != m {
        return Err(Error::shape(format!("lengths {}, {}, {}", m, v.len(), q.len())));
    }
    check_probability(u)?;
    check_probability(v)?;
    check_probability(q)?;
    if q.iter().any(|&x| x <= 0.0) {
        return Err(Error::InvalidProbability("q must be strictly positive".into()));
    }
    let kl = kl_unchecked(u.iter().copied(), v.iter().copied());
    let a_ = alpha(u, v);
    let diff: Vec<f64> = u.iter().zip(v).map(|(a, b)| a - b).collect();
    let mf = m as f64;
    let ok = a_ < 1.0;
    let taylor = |den: f64| PinskerBound {
        bound: if ok { scaled(2.0 * kl, den * (1.0 - a_)) } else { f64::INFINITY },
        applicable: ok,
    };
    Ok(PinskerBounds {
        kl,
        alpha: a_,
        l2_sq: diff.iter().map(|d| d * d).sum(),
        weighted_l2_sq: diff.iter().zip(q).map(|(d, w)| d * d / w).sum(),
        a: PinskerBound {
            bound: scaled(2.0 * kl, mf * balancedness(&diff).value),
            applicable: true,
        },
        b: PinskerBound {
            bound: scaled(2.0 * kl, q_balancedness_unchecked(&diff, q).value),
            applicable: true,
        },
        c: taylor(mf * balancedness(u).value),
        d: taylor(q_balancedness_unchecked(u, q).value),
    })
}
