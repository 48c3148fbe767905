//! Finitely supported distributions on a group, their convolution, and the
//! concentration functionals `p0`, `rho` and `rho_S`.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::group::{Element, ElementSet, GroupSpec};
use crate::scalar::{format_rational, parse_rational, Probability, Rational};

/// A probability distribution with finite support and strictly positive atoms.
#[derive(Clone, Debug, PartialEq)]
pub struct Distribution<P> {
    group: GroupSpec,
    mass: BTreeMap<Element, P>,
}

impl<P: Probability> Distribution<P> {
    /// Builds a distribution; repeated elements have their masses added.
    pub fn new(group: GroupSpec, entries: impl IntoIterator<Item = (Element, P)>) -> Result<Self> {
        let mut mass: BTreeMap<Element, P> = BTreeMap::new();
        for (g, p) in entries {
            group.check(&g)?;
            if !(p > P::zero()) {
                return Err(Error::InvalidDistribution(format!(
                    "mass {} at {g:?} is not strictly positive",
                    p.render()
                )));
            }
            let slot = mass.entry(g).or_insert_with(P::zero);
            *slot = slot.clone() + p;
        }
        if mass.is_empty() {
            return Err(Error::InvalidDistribution("empty support".into()));
        }
        let total = mass.values().fold(P::zero(), |acc, p| acc + p.clone());
        if !total.is_unit_total() {
            return Err(Error::InvalidDistribution(format!(
                "masses sum to {}, not 1",
                total.render()
            )));
        }
        Ok(Distribution { group, mass })
    }

    pub fn point_mass(group: GroupSpec, g: Element) -> Result<Self> {
        Self::new(group, [(g, P::one())])
    }

    /// Uniform distribution on the distinct elements of `support`.
    pub fn uniform(group: GroupSpec, support: impl IntoIterator<Item = Element>) -> Result<Self> {
        let support: ElementSet = support.into_iter().collect();
        let n = support.len() as u64;
        if n == 0 {
            return Err(Error::InvalidDistribution("empty support".into()));
        }
        Self::new(group, support.into_iter().map(|g| (g, P::from_ratio(1, n))))
    }

    pub fn group(&self) -> &GroupSpec {
        &self.group
    }

    pub fn mass(&self, g: &Element) -> P {
        self.mass.get(g).cloned().unwrap_or_else(P::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Element, &P)> {
        self.mass.iter()
    }

    pub fn support(&self) -> impl Iterator<Item = &Element> {
        self.mass.keys()
    }

    pub fn support_set(&self) -> ElementSet {
        self.mass.keys().cloned().collect()
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    pub fn total(&self) -> P {
        self.mass.values().fold(P::zero(), |acc, p| acc + p.clone())
    }

    fn same_group(&self, other: &Self) -> Result<()> {
        if self.group != other.group {
            return Err(Error::GroupMismatch {
                left: self.group.to_string(),
                right: other.group.to_string(),
            });
        }
        Ok(())
    }

    /// Law of `X * Y` for independent `X ~ self`, `Y ~ other`.
    pub fn convolve(&self, other: &Self) -> Result<Self> {
        self.same_group(other)?;
        let out = P::convolve_masses(&self.mass, &other.mass, |x, y| self.group.mul(x, y))?;
        Ok(Distribution {
            group: self.group.clone(),
            mass: out,
        })
    }

    /// Largest atom.
    pub fn rho(&self) -> P {
        self.mass
            .values()
            .fold(P::zero(), |m, p| if *p > m { p.clone() } else { m })
    }

    /// Smallest atom.
    pub fn min_atom(&self) -> P {
        let mut it = self.mass.values();
        let first = it.next().cloned().expect("non-empty support");
        it.fold(first, |m, p| if *p < m { p.clone() } else { m })
    }

    /// `P(X in S)`.
    pub fn rho_s(&self, set: &SetPredicate) -> Result<P> {
        let mut acc = P::zero();
        for (g, p) in &self.mass {
            if set.contains(g)? {
                acc = acc + p.clone();
            }
        }
        Ok(acc)
    }

    /// Probability of an arbitrary event on the outcome.
    pub fn probability(&self, event: impl Fn(&Element) -> bool) -> P {
        self.mass
            .iter()
            .filter(|(g, _)| event(g))
            .fold(P::zero(), |acc, (_, p)| acc + p.clone())
    }

    /// Law of `h * X` (left) or `X * h` (right) style pushforward.
    pub fn map(&self, f: impl Fn(&Element) -> Result<Element>) -> Result<Self> {
        let mut out: BTreeMap<Element, P> = BTreeMap::new();
        for (g, p) in &self.mass {
            let h = f(g)?;
            self.group.check(&h)?;
            let slot = out.entry(h).or_insert_with(P::zero);
            *slot = slot.clone() + p.clone();
        }
        Ok(Distribution {
            group: self.group.clone(),
            mass: out,
        })
    }
}

/// Law of `g_1 * ... * g_n`, multiplied left to right.
pub fn walk_law<P: Probability>(mus: &[Distribution<P>]) -> Result<Distribution<P>> {
    let (first, rest) = mus.split_first().ok_or(Error::EmptySteps)?;
    rest.iter().try_fold(first.clone(), |acc, mu| acc.convolve(mu))
}

/// Laws of every prefix product `g_1 * ... * g_l`, `l = 1..=n`.
pub fn prefix_laws<P: Probability>(mus: &[Distribution<P>]) -> Result<Vec<Distribution<P>>> {
    let (first, rest) = mus.split_first().ok_or(Error::EmptySteps)?;
    let mut out = Vec::with_capacity(mus.len());
    out.push(first.clone());
    for mu in rest {
        let next = out.last().expect("non-empty").convolve(mu)?;
        out.push(next);
    }
    Ok(out)
}

/// Smallest atom over all step distributions.
pub fn p0_of<P: Probability>(mus: &[Distribution<P>]) -> Result<P> {
    let (first, rest) = mus.split_first().ok_or(Error::EmptySteps)?;
    Ok(rest.iter().fold(first.min_atom(), |m, mu| {
        let a = mu.min_atom();
        if a < m {
            a
        } else {
            m
        }
    }))
}

pub type Membership = Arc<dyn Fn(&Element) -> bool + Send + Sync>;

/// A target set: either explicit, or a pure membership test that may only be
/// evaluated on a declared finite window.
#[derive(Clone)]
pub enum SetPredicate {
    Explicit(ElementSet),
    Callable { test: Membership, window: ElementSet },
}

impl fmt::Debug for SetPredicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SetPredicate::Explicit(s) => f.debug_tuple("Explicit").field(s).finish(),
            SetPredicate::Callable { window, .. } => f
                .debug_struct("Callable")
                .field("window_size", &window.len())
                .finish(),
        }
    }
}

impl SetPredicate {
    pub fn empty() -> Self {
        SetPredicate::Explicit(ElementSet::new())
    }

    pub fn explicit(elements: impl IntoIterator<Item = Element>) -> Self {
        SetPredicate::Explicit(elements.into_iter().collect())
    }

    pub fn callable(
        test: impl Fn(&Element) -> bool + Send + Sync + 'static,
        window: impl IntoIterator<Item = Element>,
    ) -> Self {
        SetPredicate::Callable {
            test: Arc::new(test),
            window: window.into_iter().collect(),
        }
    }

    pub fn contains(&self, g: &Element) -> Result<bool> {
        match self {
            SetPredicate::Explicit(s) => Ok(s.contains(g)),
            SetPredicate::Callable { test, window } => {
                if window.contains(g) {
                    Ok(test(g))
                } else {
                    Err(Error::WindowEscape(g.clone()))
                }
            }
        }
    }

    /// The finite set of members (for callables: the members of the window).
    pub fn to_finite(&self) -> ElementSet {
        match self {
            SetPredicate::Explicit(s) => s.clone(),
            SetPredicate::Callable { test, window } => {
                window.iter().filter(|g| test(g)).cloned().collect()
            }
        }
    }
}

impl From<ElementSet> for SetPredicate {
    fn from(s: ElementSet) -> Self {
        SetPredicate::Explicit(s)
    }
}

impl Distribution<Rational> {
    /// `{"group": "...", "entries": [[element, "p/q"], ...]}`
    pub fn to_json(&self) -> Value {
        json!({
            "group": self.group.to_string(),
            "entries": self
                .mass
                .iter()
                .map(|(g, p)| json!([self.group.element_to_json(g), format_rational(p)]))
                .collect::<Vec<_>>(),
        })
    }

    /// Reads the JSON form. The `group` field is parsed unless `group` is supplied.
    pub fn from_json(v: &Value, group: Option<&GroupSpec>) -> Result<Self> {
        let group = match group {
            Some(g) => g.clone(),
            None => GroupSpec::parse(
                v.get("group")
                    .and_then(Value::as_str)
                    .ok_or_else(|| Error::Json("distribution needs a `group` string".into()))?,
            )?,
        };
        let entries = v
            .get("entries")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::Json("distribution needs an `entries` array".into()))?;
        let parsed = entries
            .iter()
            .map(|e| {
                let pair = e
                    .as_array()
                    .filter(|a| a.len() == 2)
                    .ok_or_else(|| Error::Json(format!("entry {e} is not [element, mass]")))?;
                let g = group.element_from_json(&pair[0])?;
                let p = match &pair[1] {
                    Value::String(s) => parse_rational(s)?,
                    Value::Number(n) => parse_rational(&n.to_string())?,
                    other => return Err(Error::Json(format!("bad mass {other}"))),
                };
                Ok((g, p))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(group, parsed)
    }
}
