//! Probability scalars and directed rounding of irrational quantities.
//!
//! Distributions are generic over [`Probability`]. The exact instantiation
//! uses [`Rational`] (arbitrary precision); `f64` is available for quick
//! approximate sweeps but never enters a certified path.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt::Debug;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Num, One, Pow, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;

/// Scalar type used for probability masses.
pub trait Probability: Clone + PartialOrd + Num + Debug + Send + Sync + 'static {
    /// Whether arithmetic on this type is exact.
    const EXACT: bool;

    fn from_ratio(num: u64, den: u64) -> Self;

    fn to_f64(&self) -> f64;

    /// Human-readable value for messages.
    fn render(&self) -> String;

    /// Total mass check: exact equality for exact types, a small absolute
    /// tolerance for floats.
    fn is_unit_total(&self) -> bool;

    /// Convolution of two mass maps under `mul`.
    fn convolve_masses<K: Ord>(
        a: &BTreeMap<K, Self>,
        b: &BTreeMap<K, Self>,
        mut mul: impl FnMut(&K, &K) -> Result<K>,
    ) -> Result<BTreeMap<K, Self>> {
        let mut out: BTreeMap<K, Self> = BTreeMap::new();
        for (x, px) in a {
            for (y, py) in b {
                let w = px.clone() * py.clone();
                let slot = out.entry(mul(x, y)?).or_insert_with(Self::zero);
                *slot = slot.clone() + w;
            }
        }
        Ok(out)
    }
}

impl Probability for Rational {
    const EXACT: bool = true;

    fn from_ratio(num: u64, den: u64) -> Self {
        Rational::new(BigInt::from(num), BigInt::from(den))
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn render(&self) -> String {
        self.to_string()
    }

    fn is_unit_total(&self) -> bool {
        self.is_one()
    }

    // Accumulates integer numerators over a common denominator and reduces
    // once per atom at the end.
    fn convolve_masses<K: Ord>(
        a: &BTreeMap<K, Self>,
        b: &BTreeMap<K, Self>,
        mut mul: impl FnMut(&K, &K) -> Result<K>,
    ) -> Result<BTreeMap<K, Self>> {
        let scaled = |m: &BTreeMap<K, Self>| {
            let den = m.values().fold(BigInt::one(), |d, p| d.lcm(p.denom()));
            let nums: Vec<BigInt> = m.values().map(|p| p.numer() * (&den / p.denom())).collect();
            (den, nums)
        };
        let (da, na) = scaled(a);
        let (db, nb) = scaled(b);
        let mut acc: BTreeMap<K, BigInt> = BTreeMap::new();
        for (x, nx) in a.keys().zip(&na) {
            for (y, ny) in b.keys().zip(&nb) {
                let w = nx * ny;
                match acc.entry(mul(x, y)?) {
                    Entry::Occupied(mut e) => *e.get_mut() += w,
                    Entry::Vacant(e) => {
                        e.insert(w);
                    }
                }
            }
        }
        let den = da * db;
        Ok(acc
            .into_iter()
            .map(|(k, n)| (k, Rational::new(n, den.clone())))
            .collect())
    }
}

impl Probability for f64 {
    const EXACT: bool = false;

    fn from_ratio(num: u64, den: u64) -> Self {
        num as f64 / den as f64
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn render(&self) -> String {
        self.to_string()
    }

    fn is_unit_total(&self) -> bool {
        (self - 1.0).abs() <= 1e-9
    }
}

impl Probability for f32 {
    const EXACT: bool = false;

    fn from_ratio(num: u64, den: u64) -> Self {
        (num as f64 / den as f64) as f32
    }

    fn to_f64(&self) -> f64 {
        *self as f64
    }

    fn render(&self) -> String {
        self.to_string()
    }

    fn is_unit_total(&self) -> bool {
        (self - 1.0).abs() <= 1e-5
    }
}

/// Denominator used for rounded square roots in certified bounds.
pub const SQRT_DENOMINATOR: u64 = 1_000_000_000_000;

pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn pow(x: &Rational, e: u32) -> Rational {
    Pow::pow(x, e)
}

fn to_biguint(x: &BigInt) -> BigUint {
    x.to_biguint().expect("non-negative integer")
}

/// Exact `n`-th root of a non-negative rational, if it is rational.
pub fn exact_nth_root(x: &Rational, n: u32) -> Option<Rational> {
    assert!(n >= 1);
    if x.is_negative() {
        return None;
    }
    let num = to_biguint(x.numer());
    let den = to_biguint(x.denom());
    let rn = num.nth_root(n);
    let rd = den.nth_root(n);
    if Pow::pow(&rn, n) == num && Pow::pow(&rd, n) == den {
        Some(Rational::new(
            BigInt::from_biguint(Sign::Plus, rn),
            BigInt::from_biguint(Sign::Plus, rd),
        ))
    } else {
        None
    }
}

/// Smallest `m / den` with `(m / den)^n >= x`.
pub fn nth_root_up_with(x: &Rational, n: u32, den: &BigUint) -> Rational {
    assert!(!x.is_negative(), "root of a negative number");
    if let Some(r) = exact_nth_root(x, n) {
        return r;
    }
    let p = to_biguint(x.numer());
    let q = to_biguint(x.denom());
    let scaled = &p * den.pow(n);
    let (t, rem) = scaled.div_rem(&q);
    let t = if rem.is_zero() { t } else { t + 1u32 };
    let mut m = t.nth_root(n);
    if Pow::pow(&m, n) < t {
        m += 1u32;
    }
    Rational::new(
        BigInt::from_biguint(Sign::Plus, m),
        BigInt::from_biguint(Sign::Plus, den.clone()),
    )
}

/// Largest `m / den` with `(m / den)^n <= x`.
pub fn nth_root_down_with(x: &Rational, n: u32, den: &BigUint) -> Rational {
    assert!(!x.is_negative(), "root of a negative number");
    if let Some(r) = exact_nth_root(x, n) {
        return r;
    }
    let p = to_biguint(x.numer());
    let q = to_biguint(x.denom());
    let t = (&p * den.pow(n)) / &q;
    Rational::new(
        BigInt::from_biguint(Sign::Plus, t.nth_root(n)),
        BigInt::from_biguint(Sign::Plus, den.clone()),
    )
}

/// Denominator giving roughly twelve significant digits for an `n`-th root
/// of a number with denominator `q`.
pub fn relative_denominator(x: &Rational, n: u32) -> BigUint {
    let digits = x.denom().to_string().len() as u32;
    BigUint::from(10u32).pow(12 + digits.div_ceil(n))
}

pub fn sqrt_up(x: &Rational) -> Rational {
    nth_root_up_with(x, 2, &BigUint::from(SQRT_DENOMINATOR))
}

pub fn sqrt_down(x: &Rational) -> Rational {
    nth_root_down_with(x, 2, &BigUint::from(SQRT_DENOMINATOR))
}

/// Exact test of `a <= sqrt(b) + c` for non-negative `b`.
pub fn le_sqrt_plus(a: &Rational, b: &Rational, c: &Rational) -> bool {
    if a <= c {
        return true;
    }
    let d = a - c;
    &d * &d <= *b
}

/// Parses `"p/q"`, `"p"` or a plain decimal like `"0.25"`.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::Json(format!("`{s}` is not a rational number"));
    if let Some((p, q)) = s.split_once('/') {
        let p = BigInt::from_str_radix(p.trim(), 10).map_err(|_| bad())?;
        let q = BigInt::from_str_radix(q.trim(), 10).map_err(|_| bad())?;
        if q.is_zero() {
            return Err(bad());
        }
        return Ok(Rational::new(p, q));
    }
    if let Some((whole, frac)) = s.split_once('.') {
        let neg = whole.starts_with('-');
        let digits = format!("{}{}", whole.trim_start_matches('-'), frac);
        let num = BigInt::from_str_radix(&digits, 10).map_err(|_| bad())?;
        let den = BigInt::from(10u32).pow(frac.len() as u32);
        let r = Rational::new(num, den);
        return Ok(if neg { -r } else { r });
    }
    BigInt::from_str_radix(s, 10)
        .map(Rational::from_integer)
        .map_err(|_| bad())
}

/// `"p/q"` rendering (integers render without a denominator).
pub fn format_rational(x: &Rational) -> String {
    x.to_string()
}

pub fn format_decimal(x: &Rational) -> String {
    format!("{:.12}", Probability::to_f64(x))
}

pub fn max_of<'a>(xs: impl IntoIterator<Item = &'a Rational>) -> Option<Rational> {
    xs.into_iter().max().cloned()
}

pub fn one() -> Rational {
    Rational::one()
}

pub fn zero() -> Rational {
    Rational::zero()
}
