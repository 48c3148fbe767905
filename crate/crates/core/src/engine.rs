//! Decoupling, contiguous partitioning of walks, and certified upper bounds
//! on `P(X in S)` for sets with a self-translate dimension certificate.
//!
//! The constants are explicit. For complexity `C` and block concentrations
//! `rho_0, ..., rho_k` the bound is
//!
//! ```text
//! B_0(C; rho_0)             = C * rho_0
//! B_k(C; rho_0, ..., rho_k) = C * (sqrt(B_{k-1}(C; rho_1, ..., rho_k)) + 2 * rho_0)
//! ```
//!
//! obtained by a union bound over the `C` parts followed by decoupling the
//! first block from the rest. Square roots are rounded up, so a
//! [`CertifiedBound`] always dominates the real-valued `B_k`.

use std::ops::Range;

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::dist::{prefix_laws, p0_of, walk_law, Distribution, SetPredicate};
use crate::error::{Error, Result};
use crate::group::Element;
use crate::scalar::{
    format_rational, int, nth_root_up_with, pow, relative_denominator, sqrt_up, Probability,
    Rational,
};
use crate::selfdim::{verify_certificate, Certificate};
use crate::ExactDist;

#[derive(Clone, Debug, PartialEq)]
pub struct DecouplingReport<P> {
    /// `P(E(Y, Z))`.
    pub p_e: P,
    /// `sup_y P(Y = y)`.
    pub mu: P,
    /// `sup_{y != y'} P(E(y, Z) and E(y', Z))`, zero when `Y` is deterministic.
    pub lambda: P,
    /// `p_e <= sqrt(lambda) + 2 mu`, decided exactly.
    pub holds: bool,
}

/// Evaluates both sides of the decoupling inequality
/// `P(E(Y,Z)) <= sqrt(lambda) + 2 mu` for independent `Y`, `Z`.
pub fn decoupling_check<P: Probability>(
    law_y: &Distribution<P>,
    law_z: &Distribution<P>,
    event: impl Fn(&Element, &Element) -> bool,
) -> DecouplingReport<P> {
    let zs: Vec<(&Element, &P)> = law_z.iter().collect();
    let ys: Vec<(&Element, &P)> = law_y.iter().collect();
    let hits: Vec<Vec<bool>> = ys
        .iter()
        .map(|(y, _)| zs.iter().map(|(z, _)| event(y, z)).collect())
        .collect();

    let mut p_e = P::zero();
    for ((_, py), row) in ys.iter().zip(&hits) {
        let f = zs
            .iter()
            .zip(row)
            .filter(|(_, hit)| **hit)
            .fold(P::zero(), |acc, ((_, pz), _)| acc + (*pz).clone());
        p_e = p_e + (*py).clone() * f;
    }

    let mut lambda = P::zero();
    for i in 0..ys.len() {
        for j in i + 1..ys.len() {
            let both = zs
                .iter()
                .enumerate()
                .filter(|(t, _)| hits[i][*t] && hits[j][*t])
                .fold(P::zero(), |acc, (_, (_, pz))| acc + (*pz).clone());
            if both > lambda {
                lambda = both;
            }
        }
    }

    let mu = law_y.rho();
    let two_mu = mu.clone() + mu.clone();
    let holds = if p_e <= two_mu {
        true
    } else {
        let d = p_e.clone() - two_mu;
        d.clone() * d <= lambda
    };
    DecouplingReport {
        p_e,
        mu,
        lambda,
        holds,
    }
}

/// Split of the step indices into consecutive blocks.
#[derive(Clone, Debug, PartialEq)]
pub struct PartitionResult<P> {
    /// 0-based half-open ranges into the step list, in order.
    pub intervals: Vec<Range<usize>>,
    pub block_laws: Vec<Distribution<P>>,
    pub block_rhos: Vec<P>,
}

impl<P> PartitionResult<P> {
    /// 1-based rendering such as `{1..1};{2..10}`.
    pub fn intervals_label(&self) -> String {
        self.intervals
            .iter()
            .map(|r| format!("{{{}..{}}}", r.start + 1, r.end))
            .collect::<Vec<_>>()
            .join(";")
    }
}

/// Splits the walk into `k + 1` contiguous blocks with block concentration
/// `rho_i <= lambda_i / p0`.
///
/// Requires `0 < lambda_i <= p0`, `rho <= prod lambda_i` and at least `k + 1`
/// steps. At each stage the first block is the shortest prefix `1..=l` with
/// `rho(prefix l) >= lambda_0 >= rho(prefix l + 1)`.
pub fn contiguous_partition<P: Probability>(
    mus: &[Distribution<P>],
    lambdas: &[P],
) -> Result<PartitionResult<P>> {
    if mus.is_empty() {
        return Err(Error::EmptySteps);
    }
    if lambdas.is_empty() {
        return Err(Error::Precondition("need at least one lambda".into()));
    }
    let p0 = p0_of(mus)?;
    for (i, l) in lambdas.iter().enumerate() {
        if !(*l > P::zero()) {
            return Err(Error::Precondition(format!("lambda_{i} = {} must be > 0", l.render())));
        }
        if *l > p0 {
            return Err(Error::Precondition(format!(
                "lambda_{i} = {} <= p0 = {} fails",
                l.render(),
                p0.render()
            )));
        }
    }
    let k = lambdas.len() - 1;
    if mus.len() < k + 1 {
        return Err(Error::Precondition(format!(
            "n = {} steps cannot be split into k + 1 = {} nonempty blocks",
            mus.len(),
            k + 1
        )));
    }
    let rho = walk_law(mus)?.rho();
    let product = lambdas.iter().fold(P::one(), |acc, l| acc * l.clone());
    if rho > product {
        return Err(Error::Precondition(format!(
            "rho = {} <= prod lambda_i = {} fails",
            rho.render(),
            product.render()
        )));
    }

    let mut intervals = Vec::with_capacity(k + 1);
    let mut block_laws = Vec::with_capacity(k + 1);
    let mut start = 0;
    for (i, lambda) in lambdas.iter().enumerate() {
        let remaining = k - i;
        if remaining == 0 {
            intervals.push(start..mus.len());
            block_laws.push(walk_law(&mus[start..])?);
            break;
        }
        // the last `remaining` steps are reserved for the later blocks
        let limit = mus.len() - remaining;
        let mut law = mus[start].clone();
        let mut end = start + 1;
        loop {
            let next = law.convolve(&mus[end])?;
            if next.rho() <= *lambda {
                break;
            }
            law = next;
            end += 1;
            if end > limit {
                return Err(Error::Precondition(format!(
                    "no split index for lambda_{i} = {} within steps {}..={}",
                    lambda.render(),
                    start + 1,
                    mus.len()
                )));
            }
        }
        intervals.push(start..end);
        block_laws.push(law);
        start = end;
    }

    let block_rhos: Vec<P> = block_laws.iter().map(Distribution::rho).collect();
    for (i, (r, l)) in block_rhos.iter().zip(lambdas).enumerate() {
        if r.clone() * p0.clone() > *l {
            return Err(Error::Precondition(format!(
                "block {i}: rho_i = {} <= lambda_i / p0 fails",
                r.render()
            )));
        }
    }
    Ok(PartitionResult {
        intervals,
        block_laws,
        block_rhos,
    })
}

/// `lambda_i ~ rho^(2^i / (2^(k+1) - 1))`, rounded up and capped at `p0`, or
/// `None` when `rho > p0^(2^(k+1) - 1)`.
pub fn default_lambdas(rho: &Rational, p0: &Rational, k: u32) -> Option<Vec<Rational>> {
    assert!(*rho > Rational::zero() && *rho <= Rational::one(), "rho must lie in (0, 1]");
    assert!(*p0 > Rational::zero() && *p0 <= Rational::one(), "p0 must lie in (0, 1]");
    let exponent = (1u32 << (k + 1)) - 1;
    if *rho > pow(p0, exponent) {
        return None;
    }
    let mut extra_digits = 0u32;
    loop {
        let lambdas: Vec<Rational> = (0..=k)
            .map(|i| {
                let x = pow(rho, 1 << i);
                let den = relative_denominator(&x, exponent)
                    * BigUint::from(10u32).pow(extra_digits);
                let up = nth_root_up_with(&x, exponent, &den);
                up.min(p0.clone())
            })
            .collect();
        let product = lambdas.iter().fold(Rational::one(), |acc, l| acc * l);
        let valid = product >= *rho
            && lambdas
                .iter()
                .all(|l| *l > Rational::zero() && l <= p0);
        if valid {
            return Some(lambdas);
        }
        extra_digits += 6;
        assert!(extra_digits <= 60, "directed rounding failed to converge");
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoundLevel {
    /// Index `i` of the block whose `rho_i` enters at this level.
    pub level: usize,
    pub rho: Rational,
    /// Bound carried in from the deeper levels (absent at the innermost one).
    pub inner: Option<Rational>,
    /// Upward-rounded square root of `inner`.
    pub sqrt_inner: Option<Rational>,
    pub value: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoundTrace {
    pub k: usize,
    pub complexity: u32,
    /// From the innermost level (`i = k`) out to `i = 0`.
    pub levels: Vec<BoundLevel>,
}

/// An upward-rounded rational upper bound together with how it was computed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CertifiedBound {
    pub value: Rational,
    pub trace: BoundTrace,
}

/// Evaluates `B_k(C; rho_0, ..., rho_k)` with square roots rounded up to a
/// denominator of at most `10^12`.
pub fn certified_bound_b(complexity: u32, rhos: &[Rational]) -> CertifiedBound {
    assert!(!rhos.is_empty(), "need at least one block");
    let c = int(complexity as i64);
    let k = rhos.len() - 1;
    let mut levels = Vec::with_capacity(rhos.len());
    let innermost = &c * &rhos[k];
    levels.push(BoundLevel {
        level: k,
        rho: rhos[k].clone(),
        inner: None,
        sqrt_inner: None,
        value: innermost.clone(),
    });
    let mut b = innermost;
    for i in (0..k).rev() {
        let root = sqrt_up(&b);
        let value = &c * (&root + int(2) * &rhos[i]);
        levels.push(BoundLevel {
            level: i,
            rho: rhos[i].clone(),
            inner: Some(b),
            sqrt_inner: Some(root),
            value: value.clone(),
        });
        b = value;
    }
    CertifiedBound {
        value: b,
        trace: BoundTrace {
            k,
            complexity,
            levels,
        },
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CertifiedRhoS {
    pub bound: CertifiedBound,
    pub exact: Rational,
    pub sound: bool,
    pub p0: Rational,
    pub rho: Rational,
    pub lambdas: Vec<Rational>,
    pub partition: PartitionResult<Rational>,
}

/// Certified upper bound on `P(g_1 ... g_n in S)`.
///
/// Pipeline: verify the certificate, choose default lambdas, partition the
/// walk, then evaluate `B_k` on the exact block concentrations.
pub fn certified_rho_s(
    mus: &[ExactDist],
    cert: &Certificate,
    set: &SetPredicate,
) -> Result<CertifiedRhoS> {
    certified_rho_s_with(mus, cert, set, None)
}

/// As [`certified_rho_s`], optionally with caller-supplied lambdas.
pub fn certified_rho_s_with(
    mus: &[ExactDist],
    cert: &Certificate,
    set: &SetPredicate,
    lambdas: Option<&[Rational]>,
) -> Result<CertifiedRhoS> {
    let law = walk_law(mus)?;
    let finite = set.to_finite();
    let verification = verify_certificate(&finite, cert, law.group())?;
    if let Some(f) = verification.failure {
        return Err(Error::CertificateRejected(f.reason));
    }
    let k = cert.dimension();
    let p0 = p0_of(mus)?;
    let rho = law.rho();
    let lambdas = match lambdas {
        Some(ls) => {
            if ls.len() != k as usize + 1 {
                return Err(Error::Precondition(format!(
                    "certificate has dimension {k}, so exactly {} lambdas are needed",
                    k + 1
                )));
            }
            ls.to_vec()
        }
        None => default_lambdas(&rho, &p0, k).ok_or_else(|| Error::Unpartitionable {
            detail: format!(
                "rho = {}, p0 = {}, k = {k}: rho > p0^{}",
                format_rational(&rho),
                format_rational(&p0),
                (1u32 << (k + 1)) - 1
            ),
        })?,
    };
    let partition = contiguous_partition(mus, &lambdas)?;
    let bound = certified_bound_b(cert.complexity(), &partition.block_rhos);
    let exact = law.rho_s(set)?;
    let sound = exact <= bound.value;
    Ok(CertifiedRhoS {
        bound,
        exact,
        sound,
        p0,
        rho,
        lambdas,
        partition,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProductBound {
    pub exact: Rational,
    pub block_rhos: Vec<Rational>,
    pub bound: CertifiedBound,
    pub sound: bool,
}

/// `P(X_0 ... X_k in S) <= B_k(C; rho(X_0), ..., rho(X_k))` for independent
/// `X_i` given directly by their laws.
pub fn certified_product_bound(
    laws: &[ExactDist],
    cert: &Certificate,
    set: &SetPredicate,
) -> Result<ProductBound> {
    let law = walk_law(laws)?;
    let k = cert.dimension() as usize;
    if laws.len() != k + 1 {
        return Err(Error::Precondition(format!(
            "certificate has dimension {k}, so exactly {} factors are needed, got {}",
            k + 1,
            laws.len()
        )));
    }
    let verification = verify_certificate(&set.to_finite(), cert, law.group())?;
    if let Some(f) = verification.failure {
        return Err(Error::CertificateRejected(f.reason));
    }
    let block_rhos: Vec<Rational> = laws.iter().map(Distribution::rho).collect();
    let bound = certified_bound_b(cert.complexity(), &block_rhos);
    let exact = law.rho_s(set)?;
    let sound = exact <= bound.value;
    Ok(ProductBound {
        exact,
        block_rhos,
        bound,
        sound,
    })
}

/// Steps `I_i` of a partition as slices, for re-deriving block laws.
pub fn block_steps<'a, P>(mus: &'a [Distribution<P>], part: &PartitionResult<P>) -> Vec<&'a [Distribution<P>]> {
    part.intervals.iter().map(|r| &mus[r.clone()]).collect()
}

/// Concentration of every prefix walk.
pub fn prefix_rhos<P: Probability>(mus: &[Distribution<P>]) -> Result<Vec<P>> {
    Ok(prefix_laws(mus)?.iter().map(Distribution::rho).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{z, z2, GroupSpec};
    use crate::scalar::{ratio, sqrt_down};
    use crate::ElementSet;

    fn coins(n: usize) -> Vec<ExactDist> {
        vec![ExactDist::uniform(GroupSpec::FreeAbelian(1), [z(0), z(1)]).unwrap(); n]
    }

    #[test]
    fn decoupling_cyclic_two() {
        let g = GroupSpec::Cyclic(2);
        let u = ExactDist::uniform(g.clone(), [Element::Cyclic(0), Element::Cyclic(1)]).unwrap();
        let r = decoupling_check(&u, &u, |y, z| g.mul(y, z).unwrap() == g.identity());
        assert_eq!(r.p_e, ratio(1, 2));
        assert_eq!(r.mu, ratio(1, 2));
        assert_eq!(r.lambda, ratio(0, 1));
        assert!(r.holds);
    }

    #[test]
    fn decoupling_trivial_event_and_point_mass() {
        let g = GroupSpec::FreeAbelian(1);
        let y = ExactDist::uniform(g.clone(), [z(0), z(1), z(2)]).unwrap();
        let zl = ExactDist::uniform(g.clone(), [z(0), z(5)]).unwrap();
        let r = decoupling_check(&y, &zl, |_, _| true);
        assert_eq!(r.p_e, int(1));
        assert_eq!(r.lambda, int(1));
        assert!(r.holds);
        let d = ExactDist::point_mass(g, z(3)).unwrap();
        let r = decoupling_check(&d, &zl, |_, _| true);
        assert_eq!(r.lambda, int(0));
        assert_eq!(r.mu, int(1));
        assert!(r.holds);
    }

    #[test]
    fn partition_ten_coins() {
        let mus = coins(10);
        let lambdas = [ratio(1, 2), ratio(1, 2)];
        // oracle: every prefix law by direct enumeration of bit vectors
        let binom_max = |n: u32| {
            let best = (0..=n)
                .map(|j| (0u32..1 << n).filter(|m| m.count_ones() == j).count())
                .max()
                .unwrap();
            ratio(best as i64, 1 << n)
        };
        assert_eq!(binom_max(10), ratio(252, 1024));
        let part = contiguous_partition(&mus, &lambdas).unwrap();
        assert_eq!(part.intervals, vec![0..1, 1..10]);
        assert_eq!(part.intervals_label(), "{1..1};{2..10}");
        assert_eq!(part.block_rhos[0], ratio(1, 2));
        assert_eq!(part.block_rhos[1], ratio(126, 512));
        assert_eq!(part.block_rhos[1], binom_max(9));
        assert!(part.block_rhos[1] <= int(2) * ratio(252, 1024) / ratio(1, 2));
    }

    #[test]
    fn partition_single_block_and_point_masses() {
        let mus = coins(4);
        let part = contiguous_partition(&mus, &[ratio(1, 2)]).unwrap();
        assert_eq!(part.intervals, vec![0..4]);
        let g = GroupSpec::FreeAbelian(1);
        let pm = vec![
            ExactDist::point_mass(g.clone(), z(1)).unwrap(),
            ExactDist::point_mass(g, z(4)).unwrap(),
        ];
        let part = contiguous_partition(&pm, &[int(1), int(1)]).unwrap();
        assert_eq!(part.intervals, vec![0..1, 1..2]);
        assert!(part.block_rhos.iter().all(|r| *r == int(1)));
    }

    #[test]
    fn partition_preconditions_are_named() {
        let mus = coins(4);
        let err = contiguous_partition(&mus, &[ratio(3, 4)]).unwrap_err();
        assert!(err.to_string().contains("<= p0"), "{err}");
        let err = contiguous_partition(&mus, &[ratio(1, 10)]).unwrap_err();
        assert!(err.to_string().contains("prod lambda"), "{err}");
        let err = contiguous_partition(&mus, &[int(0)]).unwrap_err();
        assert!(err.to_string().contains("> 0"), "{err}");
    }

    #[test]
    fn default_lambda_examples() {
        let ls = default_lambdas(&ratio(1, 256), &ratio(1, 2), 1).unwrap();
        assert_eq!(ls.len(), 2);
        assert!(&ls[0] * &ls[1] >= ratio(1, 256));
        assert!(ls.iter().all(|l| *l <= ratio(1, 2)));
        assert!(pow(&ls[0], 3) >= ratio(1, 256));
        assert!(pow(&ls[1], 3) >= ratio(1, 65536));
        assert!((ls[0].to_f64() - 1.0 / 6.349_604_207_872_798).abs() < 1e-9);
        assert!((ls[1].to_f64() - 1.0 / 40.317_473_596_635_94).abs() < 1e-9);

        assert_eq!(default_lambdas(&ratio(1, 4), &ratio(1, 2), 1), None);

        let boundary = default_lambdas(&ratio(1, 8), &ratio(1, 2), 1).unwrap();
        assert_eq!(boundary[0], ratio(1, 2));
        assert_eq!(boundary[1], ratio(1, 4));
    }

    #[test]
    fn bound_examples() {
        assert_eq!(certified_bound_b(3, &[ratio(1, 10)]).value, ratio(3, 10));
        assert_eq!(certified_bound_b(1, &[int(0), ratio(1, 4)]).value, ratio(1, 2));
        let b = certified_bound_b(2, &[int(0), ratio(1, 16)]);
        // oracle: sqrt(2)/2 from a downward-rounded root
        let lower = sqrt_down(&ratio(2, 16)) * int(2);
        assert!(b.value >= lower);
        assert!((b.value.to_f64() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-11);
        assert_eq!(b.trace.levels.len(), 2);
        assert_eq!(b.trace.levels[1].inner, Some(ratio(1, 8)));
        assert!(b.value.denom() <= &num_bigint::BigInt::from(1_000_000_000_000u64));
    }

    #[test]
    fn certified_empty_set_and_union_bound() {
        let mus = coins(6);
        let cert = Certificate::leaf(1);
        let r = certified_rho_s(&mus, &cert, &SetPredicate::empty()).unwrap();
        assert_eq!(r.exact, int(0));
        assert!(r.sound);

        let s = SetPredicate::explicit([z(3), z(1)]);
        let r = certified_rho_s(&mus, &Certificate::leaf(2), &s).unwrap();
        assert_eq!(r.bound.value, int(2) * &r.rho);
        assert!(r.sound);
    }

    #[test]
    fn certified_triangle_lazy_walk() {
        let g = GroupSpec::FreeAbelian(2);
        let step = ExactDist::uniform(
            g.clone(),
            [z2(0, 0), z2(1, 0), z2(-1, 0), z2(0, 1), z2(0, -1)],
        )
        .unwrap();
        let mus = vec![step; 64];
        let tri: ElementSet = [z2(0, 0), z2(1, 0), z2(0, 1)].into_iter().collect();
        let cert = Certificate::node(1, vec![tri.clone()], Certificate::leaf(1));
        let r = certified_rho_s(&mus, &cert, &SetPredicate::Explicit(tri)).unwrap();
        assert!(r.sound);
        assert_eq!(r.partition.intervals.len(), 2);
        // independent route: the exact law computed directly
        let law = walk_law(&mus).unwrap();
        let direct = law.mass(&z2(0, 0)) + law.mass(&z2(1, 0)) + law.mass(&z2(0, 1));
        assert_eq!(direct, r.exact);
    }

    #[test]
    fn unpartitionable_is_reported() {
        let mus = coins(3);
        let s: ElementSet = [z(0), z(1)].into_iter().collect();
        let cert = Certificate::node(1, vec![s.clone()], Certificate::leaf(1));
        let err = certified_rho_s(&mus, &cert, &SetPredicate::Explicit(s)).unwrap_err();
        assert!(err.to_string().contains("rho^{1/(2^{k+1}-1)} > p0"), "{err}");
    }

    #[test]
    fn product_form() {
        let g = GroupSpec::FreeAbelian(1);
        let x0 = ExactDist::uniform(g.clone(), [z(0), z(10), z(20)]).unwrap();
        let x1 = ExactDist::uniform(g.clone(), [z(0), z(1)]).unwrap();
        let s: ElementSet = [z(0), z(11), z(20)].into_iter().collect();
        let cert = Certificate::node(1, vec![s.clone()], Certificate::leaf(1));
        let r = certified_product_bound(&[x0, x1], &cert, &SetPredicate::Explicit(s)).unwrap();
        assert_eq!(r.exact, ratio(1, 2));
        assert!(r.sound);
    }
}
