//! Baseline forward bounds for sign walks and the exponent bookkeeping used
//! when a bound on `rho_S` is converted back into a bound on `rho`.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::dist::{walk_law, SetPredicate};
use crate::engine::{certified_bound_b, CertifiedBound};
use crate::error::{Error, Result};
use crate::group::{z, Element, GroupSpec};
use crate::scalar::{int, pow, ratio, sqrt_up, Rational};
use crate::selfdim::{verify_certificate, Certificate};
use crate::ExactDist;

/// Minimal torsion order among the steps.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum TorsionOrder {
    Finite(u64),
    Infinite,
}

impl TorsionOrder {
    /// `1/s`, with `1/infinity = 0`.
    pub fn reciprocal(&self) -> Rational {
        match self {
            TorsionOrder::Finite(s) => Rational::new(BigInt::one(), BigInt::from(*s)),
            TorsionOrder::Infinite => Rational::zero(),
        }
    }
}

impl fmt::Display for TorsionOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TorsionOrder::Finite(s) => write!(f, "{s}"),
            TorsionOrder::Infinite => write!(f, "inf"),
        }
    }
}

/// One scenario of the sign-walk model `X = prod g_i^{+-1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioReport {
    pub n: usize,
    pub s: TorsionOrder,
    pub p0: Rational,
    pub rho: Rational,
    pub rho_s: Option<Rational>,
    /// Upward-rounded `3 max(1/s, n^{-1/2})`.
    pub baseline_bound: Rational,
    pub certified_bound: Option<CertifiedBound>,
    /// Per-block concentration bounds fed into the certified bound.
    pub block_bounds: Vec<Rational>,
}

impl ScenarioReport {
    /// `rho <= 3 max(1/s, n^{-1/2})`, decided exactly as
    /// `rho^2 <= 9 max(1/s^2, 1/n)`.
    pub fn baseline_holds(&self) -> bool {
        js_holds(&self.rho, self.n, self.s)
    }

    /// `rho_S <= certified bound`, when both are present.
    pub fn certified_holds(&self) -> Option<bool> {
        match (&self.rho_s, &self.certified_bound) {
            (Some(r), Some(b)) => Some(*r <= b.value),
            _ => None,
        }
    }
}

fn js_holds(rho: &Rational, n: usize, s: TorsionOrder) -> bool {
    let inv_s = s.reciprocal();
    let inv_n = Rational::new(BigInt::one(), BigInt::from(n));
    let m = std::cmp::max(&inv_s * &inv_s, inv_n);
    rho * rho <= int(9) * m
}

/// Upward-rounded `3 max(1/s, m^{-1/2})`.
fn js_baseline(m: usize, s: TorsionOrder) -> Rational {
    let root = sqrt_up(&Rational::new(BigInt::one(), BigInt::from(m)));
    int(3) * std::cmp::max(s.reciprocal(), root)
}

/// `uniform{g, g^-1}` for every step.
pub fn sign_steps(gs: &[Element], group: &GroupSpec) -> Result<Vec<ExactDist>> {
    if gs.is_empty() {
        return Err(Error::EmptySteps);
    }
    gs.iter()
        .map(|g| {
            if group.is_identity(g) {
                return Err(Error::Precondition(format!("step {g:?} is the identity")));
            }
            ExactDist::uniform(group.clone(), [g.clone(), group.inv(g)?])
        })
        .collect()
}

pub fn min_torsion(gs: &[Element], group: &GroupSpec) -> Result<TorsionOrder> {
    let mut best = TorsionOrder::Infinite;
    for g in gs {
        if let Some(o) = group.element_order(g)? {
            best = best.min(TorsionOrder::Finite(o));
        }
    }
    Ok(best)
}

/// Exact check of `rho <= 3 max(1/s, n^{-1/2})` for a sign walk.
pub fn js_bound_check(gs: &[Element], group: &GroupSpec) -> Result<ScenarioReport> {
    let mus = sign_steps(gs, group)?;
    let law = walk_law(&mus)?;
    let s = min_torsion(gs, group)?;
    Ok(ScenarioReport {
        n: gs.len(),
        s,
        p0: crate::p0_of(&mus)?,
        rho: law.rho(),
        rho_s: None,
        baseline_bound: js_baseline(gs.len(), s),
        certified_bound: None,
        block_bounds: Vec::new(),
    })
}

/// Sizes of `k + 1` consecutive blocks, larger blocks first.
pub fn equipartition(n: usize, parts: usize) -> Vec<usize> {
    let (q, r) = (n / parts, n % parts);
    (0..parts).map(|i| if i < r { q + 1 } else { q }).collect()
}

/// Certified bound on `rho_S` for a sign walk, using the baseline on each
/// block of an equipartition instead of the exact block concentrations.
pub fn forward1_check(
    gs: &[Element],
    set: &SetPredicate,
    cert: &Certificate,
    group: &GroupSpec,
) -> Result<ScenarioReport> {
    let verification = verify_certificate(&set.to_finite(), cert, group)?;
    if let Some(f) = verification.failure {
        return Err(Error::CertificateRejected(f.reason));
    }
    let mut report = js_bound_check(gs, group)?;
    let k = cert.dimension() as usize;
    let block_bounds: Vec<Rational> = equipartition(gs.len(), k + 1)
        .into_iter()
        .map(|m| {
            if m == 0 {
                Rational::one()
            } else {
                js_baseline(m, report.s).min(Rational::one())
            }
        })
        .collect();
    let mus = sign_steps(gs, group)?;
    report.rho_s = Some(walk_law(&mus)?.rho_s(set)?);
    report.certified_bound = Some(certified_bound_b(cert.complexity(), &block_bounds));
    report.block_bounds = block_bounds;
    Ok(report)
}

/// Shape of the Nguyen-type forward bound per block,
/// `max(s^{-1/2}, m^{-1/2 + 2^k delta})`, with the unknown constant set to 1.
/// Descriptive only: there is no explicit constant to check it against.
pub fn forward2_profile(n: usize, s: TorsionOrder, k: u32, delta: f64) -> Vec<f64> {
    let inv_sqrt_s = match s {
        TorsionOrder::Finite(s) => (s as f64).powf(-0.5),
        TorsionOrder::Infinite => 0.0,
    };
    let exponent = -0.5 + f64::from(1u32 << k) * delta;
    equipartition(n, k as usize + 1)
        .into_iter()
        .map(|m| inv_sqrt_s.max((m.max(1) as f64).powf(exponent)))
        .collect()
}

/// `(2^(k+1) - 1)(A + 1) + 1`: the exponent with which an inverse theorem for
/// `rho` must be invoked to cover `rho_S >= n^{-A}`.
pub fn inverse_exponent(k: u32, a: &Rational) -> Rational {
    let factor = int((1i64 << (k + 1)) - 1);
    factor * (a + Rational::one()) + Rational::one()
}

/// Upward-rounded `K_{C,k}` with `rho_S <= K_{C,k} p0^{-1} rho^{1/(2^(k+1)-1)}`.
///
/// `K_{C,0} = C` and `K_{C,j} = C (sqrt(K_{C,j-1}) + 2)`. The sequence increases
/// to `((C + sqrt(C^2 + 8C)) / 2)^2`, which bounds it for every `k`.
pub fn inverse_constant(complexity: u32, k: u32) -> Rational {
    let c = int(complexity as i64);
    let mut kc = c.clone();
    for _ in 0..k {
        kc = &c * (sqrt_up(&kc) + int(2));
    }
    kc
}

/// Lower bound `rho >= (rho_S p0 / K_{C,k})^(2^(k+1)-1)` implied by the
/// certified bound.
pub fn rho_from_rho_s(rho_s: &Rational, p0: &Rational, k: u32, complexity: u32) -> Rational {
    if rho_s.is_zero() {
        return Rational::zero();
    }
    let kc = inverse_constant(complexity, k);
    pow(&(rho_s * p0 / kc), (1u32 << (k + 1)) - 1)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ErdosRow {
    pub n: usize,
    pub rho: Rational,
    /// `rho * sqrt(n)`, for display.
    pub scaled: f64,
    /// `1/2 <= rho sqrt(n) <= 1`, decided exactly as `1/4 <= rho^2 n <= 1`.
    pub within: bool,
}

/// Central mass of `n` fair `+-1` steps on `Z` for each even `n`.
pub fn erdos_scaling_sweep(ns: &[usize]) -> Result<Vec<ErdosRow>> {
    if let Some(n) = ns.iter().find(|n| **n % 2 == 1 || **n == 0) {
        return Err(Error::Precondition(format!("n = {n} must be even and positive")));
    }
    let max = ns.iter().copied().max().unwrap_or(0);
    let group = GroupSpec::FreeAbelian(1);
    let step = ExactDist::uniform(group, [z(-1), z(1)])?;
    let mut law = step.clone();
    let mut rows = Vec::with_capacity(ns.len());
    let mut rhos = vec![Rational::zero(); max + 1];
    for (n, slot) in rhos.iter_mut().enumerate().skip(1) {
        if n > 1 {
            law = law.convolve(&step)?;
        }
        *slot = law.rho();
    }
    for &n in ns {
        let rho = rhos[n].clone();
        let sq_n = &rho * &rho * int(n as i64);
        rows.push(ErdosRow {
            n,
            scaled: crate::Probability::to_f64(&rho) * (n as f64).sqrt(),
            within: sq_n >= ratio(1, 4) && sq_n <= Rational::one(),
            rho,
        });
    }
    Ok(rows)
}
