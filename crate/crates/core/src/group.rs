//! Concrete groups with canonical element representations.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::error::{Error, Result};

/// Canonical group element. Equality is equality of canonical forms.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Element {
    /// Residue in `0..m`.
    Cyclic(u64),
    /// Integer vector in `Z^d`.
    Lattice(Vec<i64>),
    /// `rot^r * flip^f`, with `flip * rot = rot^-1 * flip`.
    Dihedral { rot: u64, flip: bool },
    /// Upper unitriangular matrix `[[1, a, c], [0, 1, b], [0, 0, 1]]` stored as `[a, b, c]`.
    Heisenberg([i64; 3]),
    /// Row index into a Cayley table.
    Table(u32),
    Product(Vec<Element>),
}

pub type ElementSet = BTreeSet<Element>;

/// Multiplication table of a finite group, validated on construction.
#[derive(Debug, PartialEq, Eq)]
pub struct CayleyTable {
    order: usize,
    table: Vec<u32>,
    identity: u32,
    inverses: Vec<u32>,
    label: String,
}

/// Tables above this order only get a sampled associativity check.
pub const FULL_ASSOCIATIVITY_LIMIT: usize = 64;
const SAMPLED_TRIPLES: usize = 200_000;

impl CayleyTable {
    pub fn new(order: usize, rows: Vec<Vec<u32>>, label: impl Into<String>) -> Result<Self> {
        let err = |m: String| Error::CayleyTable(m);
        if order == 0 {
            return Err(err("order must be positive".into()));
        }
        if rows.len() != order || rows.iter().any(|r| r.len() != order) {
            return Err(err(format!("expected a {order}x{order} index matrix")));
        }
        let table: Vec<u32> = rows.into_iter().flatten().collect();
        let at = |i: usize, j: usize| table[i * order + j] as usize;

        for i in 0..order {
            let mut row = vec![false; order];
            let mut col = vec![false; order];
            for j in 0..order {
                let (r, c) = (at(i, j), at(j, i));
                if r >= order || c >= order {
                    return Err(err(format!("entry out of range in row/column {i}")));
                }
                row[r] = true;
                col[c] = true;
            }
            if row.contains(&false) {
                return Err(err(format!("row {i} is not a permutation")));
            }
            if col.contains(&false) {
                return Err(err(format!("column {i} is not a permutation")));
            }
        }

        let identity = (0..order)
            .find(|&e| (0..order).all(|j| at(e, j) == j && at(j, e) == j))
            .ok_or_else(|| err("no identity element".into()))?;

        let assoc = |a: usize, b: usize, c: usize| at(at(a, b), c) == at(a, at(b, c));
        if order <= FULL_ASSOCIATIVITY_LIMIT {
            for a in 0..order {
                for b in 0..order {
                    for c in 0..order {
                        if !assoc(a, b, c) {
                            return Err(err(format!("not associative at ({a}, {b}, {c})")));
                        }
                    }
                }
            }
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(order as u64);
            for _ in 0..SAMPLED_TRIPLES {
                let (a, b, c) = (
                    rng.gen_range(0..order),
                    rng.gen_range(0..order),
                    rng.gen_range(0..order),
                );
                if !assoc(a, b, c) {
                    return Err(err(format!("not associative at ({a}, {b}, {c})")));
                }
            }
        }

        let inverses = (0..order)
            .map(|i| {
                (0..order)
                    .find(|&j| at(i, j) == identity)
                    .map(|j| j as u32)
                    .expect("latin square rows hit the identity")
            })
            .collect();

        Ok(CayleyTable {
            order,
            table,
            identity: identity as u32,
            inverses,
            label: label.into(),
        })
    }

    /// Parses whitespace-separated text: the order, then `order * order` indices.
    pub fn parse(text: &str, label: impl Into<String>) -> Result<Self> {
        let mut tokens = text.split_whitespace().map(|t| {
            t.parse::<u32>()
                .map_err(|_| Error::CayleyTable(format!("`{t}` is not an index")))
        });
        let order = tokens
            .next()
            .ok_or_else(|| Error::CayleyTable("empty table file".into()))?? as usize;
        let entries: Vec<u32> = tokens.collect::<Result<_>>()?;
        if entries.len() != order * order {
            return Err(Error::CayleyTable(format!(
                "expected {} entries, found {}",
                order * order,
                entries.len()
            )));
        }
        let rows = entries.chunks(order).map(<[u32]>::to_vec).collect();
        Self::new(order, rows, label)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, path.display().to_string())
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    fn mul(&self, a: u32, b: u32) -> u32 {
        self.table[a as usize * self.order + b as usize]
    }
}

/// A concrete group from the supported menu.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GroupSpec {
    Cyclic(u64),
    FreeAbelian(usize),
    Dihedral(u64),
    Heisenberg,
    Cayley(Arc<CayleyTable>),
    Product(Vec<GroupSpec>),
}

impl fmt::Display for GroupSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupSpec::Cyclic(m) => write!(f, "cyclic:{m}"),
            GroupSpec::FreeAbelian(d) => write!(f, "Z^{d}"),
            GroupSpec::Dihedral(m) => write!(f, "dihedral:{m}"),
            GroupSpec::Heisenberg => write!(f, "heisenberg"),
            GroupSpec::Cayley(t) => write!(f, "cayley:{}", t.label),
            GroupSpec::Product(parts) => {
                write!(f, "prod(")?;
                for (i, p) in parts.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{p}")?;
                }
                write!(f, ")")
            }
        }
    }
}

impl GroupSpec {
    pub fn cyclic(m: u64) -> Result<Self> {
        if m == 0 {
            return Err(spec_err(&format!("cyclic:{m}"), "order must be positive"));
        }
        Ok(GroupSpec::Cyclic(m))
    }

    pub fn free_abelian(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(spec_err("Z^0", "rank must be positive"));
        }
        Ok(GroupSpec::FreeAbelian(d))
    }

    pub fn dihedral(m: u64) -> Result<Self> {
        if m < 3 {
            return Err(spec_err(&format!("dihedral:{m}"), "need m >= 3"));
        }
        Ok(GroupSpec::Dihedral(m))
    }

    pub fn cayley(table: CayleyTable) -> Self {
        GroupSpec::Cayley(Arc::new(table))
    }

    /// Parses the group mini-language: `cyclic:6`, `Z^2`, `dihedral:5`,
    /// `heisenberg`, `cayley:<path>`, `prod(cyclic:2,Z^1)`.
    pub fn parse(spec: &str) -> Result<Self> {
        let s = spec.trim();
        if let Some(rest) = s.strip_prefix("prod(") {
            let inner = rest
                .strip_suffix(')')
                .ok_or_else(|| spec_err(s, "unbalanced parentheses"))?;
            let parts = split_top_level(inner).map_err(|r| spec_err(s, r))?;
            if parts.is_empty() {
                return Err(spec_err(s, "empty product"));
            }
            return Ok(GroupSpec::Product(
                parts.iter().map(|p| Self::parse(p)).collect::<Result<_>>()?,
            ));
        }
        if let Some(m) = s.strip_prefix("cyclic:") {
            return Self::cyclic(m.trim().parse().map_err(|_| spec_err(s, "bad order"))?);
        }
        if let Some(m) = s.strip_prefix("dihedral:") {
            return Self::dihedral(m.trim().parse().map_err(|_| spec_err(s, "bad order"))?);
        }
        if let Some(d) = s.strip_prefix("Z^") {
            return Self::free_abelian(d.trim().parse().map_err(|_| spec_err(s, "bad rank"))?);
        }
        if s == "Z" {
            return Ok(GroupSpec::FreeAbelian(1));
        }
        if s == "heisenberg" {
            return Ok(GroupSpec::Heisenberg);
        }
        if let Some(path) = s.strip_prefix("cayley:") {
            return Ok(Self::cayley(CayleyTable::load(Path::new(path.trim()))?));
        }
        Err(spec_err(s, "unknown group kind"))
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            GroupSpec::Cyclic(_) => "cyclic",
            GroupSpec::FreeAbelian(_) => "free-abelian",
            GroupSpec::Dihedral(_) => "dihedral",
            GroupSpec::Heisenberg => "heisenberg",
            GroupSpec::Cayley(_) => "cayley-table",
            GroupSpec::Product(_) => "product",
        }
    }

    pub fn identity(&self) -> Element {
        match self {
            GroupSpec::Cyclic(_) => Element::Cyclic(0),
            GroupSpec::FreeAbelian(d) => Element::Lattice(vec![0; *d]),
            GroupSpec::Dihedral(_) => Element::Dihedral { rot: 0, flip: false },
            GroupSpec::Heisenberg => Element::Heisenberg([0; 3]),
            GroupSpec::Cayley(t) => Element::Table(t.identity),
            GroupSpec::Product(parts) => {
                Element::Product(parts.iter().map(GroupSpec::identity).collect())
            }
        }
    }

    pub fn is_identity(&self, g: &Element) -> bool {
        *g == self.identity()
    }

    /// Whether `g` is a canonical element of this group.
    pub fn contains(&self, g: &Element) -> bool {
        match (self, g) {
            (GroupSpec::Cyclic(m), Element::Cyclic(r)) => r < m,
            (GroupSpec::FreeAbelian(d), Element::Lattice(v)) => v.len() == *d,
            (GroupSpec::Dihedral(m), Element::Dihedral { rot, .. }) => rot < m,
            (GroupSpec::Heisenberg, Element::Heisenberg(_)) => true,
            (GroupSpec::Cayley(t), Element::Table(i)) => (*i as usize) < t.order,
            (GroupSpec::Product(parts), Element::Product(xs)) => {
                parts.len() == xs.len() && parts.iter().zip(xs).all(|(p, x)| p.contains(x))
            }
            _ => false,
        }
    }

    pub fn check(&self, g: &Element) -> Result<()> {
        if self.contains(g) {
            Ok(())
        } else {
            Err(self.mismatch(g))
        }
    }

    fn mismatch(&self, g: &Element) -> Error {
        Error::KindMismatch {
            element: g.clone(),
            group: self.to_string(),
        }
    }

    fn overflow(&self) -> Error {
        Error::Overflow(self.to_string())
    }

    pub fn mul(&self, g: &Element, h: &Element) -> Result<Element> {
        self.check(g)?;
        self.check(h)?;
        self.mul_unchecked(g, h)
    }

    fn mul_unchecked(&self, g: &Element, h: &Element) -> Result<Element> {
        Ok(match (self, g, h) {
            (GroupSpec::Cyclic(m), Element::Cyclic(a), Element::Cyclic(b)) => {
                Element::Cyclic(((*a as u128 + *b as u128) % *m as u128) as u64)
            }
            (GroupSpec::FreeAbelian(_), Element::Lattice(a), Element::Lattice(b)) => {
                Element::Lattice(
                    a.iter()
                        .zip(b)
                        .map(|(x, y)| x.checked_add(*y).ok_or_else(|| self.overflow()))
                        .collect::<Result<_>>()?,
                )
            }
            (
                GroupSpec::Dihedral(m),
                Element::Dihedral { rot: r1, flip: f1 },
                Element::Dihedral { rot: r2, flip: f2 },
            ) => {
                // rot^r1 flip^f1 rot^r2 = rot^(r1 -+ r2) flip^f1
                let r2 = if *f1 { (m - r2) % m } else { *r2 };
                Element::Dihedral {
                    rot: (r1 + r2) % m,
                    flip: f1 ^ f2,
                }
            }
            (GroupSpec::Heisenberg, Element::Heisenberg(x), Element::Heisenberg(y)) => {
                let add = |p: i64, q: i64| p.checked_add(q).ok_or_else(|| self.overflow());
                let cross = x[0].checked_mul(y[1]).ok_or_else(|| self.overflow())?;
                Element::Heisenberg([
                    add(x[0], y[0])?,
                    add(x[1], y[1])?,
                    add(add(x[2], y[2])?, cross)?,
                ])
            }
            (GroupSpec::Cayley(t), Element::Table(a), Element::Table(b)) => {
                Element::Table(t.mul(*a, *b))
            }
            (GroupSpec::Product(parts), Element::Product(xs), Element::Product(ys)) => {
                Element::Product(
                    parts
                        .iter()
                        .zip(xs.iter().zip(ys))
                        .map(|(p, (x, y))| p.mul_unchecked(x, y))
                        .collect::<Result<_>>()?,
                )
            }
            _ => return Err(self.mismatch(g)),
        })
    }

    pub fn inv(&self, g: &Element) -> Result<Element> {
        self.check(g)?;
        Ok(match (self, g) {
            (GroupSpec::Cyclic(m), Element::Cyclic(a)) => Element::Cyclic((m - a) % m),
            (GroupSpec::FreeAbelian(_), Element::Lattice(v)) => Element::Lattice(
                v.iter()
                    .map(|x| x.checked_neg().ok_or_else(|| self.overflow()))
                    .collect::<Result<_>>()?,
            ),
            (GroupSpec::Dihedral(m), Element::Dihedral { rot, flip }) => {
                if *flip {
                    g.clone()
                } else {
                    Element::Dihedral {
                        rot: (m - rot) % m,
                        flip: false,
                    }
                }
            }
            (GroupSpec::Heisenberg, Element::Heisenberg([a, b, c])) => {
                // (a,b,c)^-1 = (-a, -b, ab - c)
                let ab = a.checked_mul(*b).ok_or_else(|| self.overflow())?;
                Element::Heisenberg([
                    a.checked_neg().ok_or_else(|| self.overflow())?,
                    b.checked_neg().ok_or_else(|| self.overflow())?,
                    ab.checked_sub(*c).ok_or_else(|| self.overflow())?,
                ])
            }
            (GroupSpec::Cayley(t), Element::Table(i)) => Element::Table(t.inverses[*i as usize]),
            (GroupSpec::Product(parts), Element::Product(xs)) => Element::Product(
                parts
                    .iter()
                    .zip(xs)
                    .map(|(p, x)| p.inv(x))
                    .collect::<Result<_>>()?,
            ),
            _ => return Err(self.mismatch(g)),
        })
    }

    /// `g^e` by repeated squaring.
    pub fn pow(&self, g: &Element, mut e: u64) -> Result<Element> {
        self.check(g)?;
        let mut base = g.clone();
        let mut acc = self.identity();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul_unchecked(&acc, &base)?;
            }
            e >>= 1;
            if e > 0 {
                base = self.mul_unchecked(&base, &base)?;
            }
        }
        Ok(acc)
    }

    /// Ordered product `g_1 * ... * g_n`; identity for an empty slice.
    pub fn product<'a>(&self, gs: impl IntoIterator<Item = &'a Element>) -> Result<Element> {
        gs.into_iter()
            .try_fold(self.identity(), |acc, g| self.mul(&acc, g))
    }

    /// Smallest `1 <= t <= m` with `g^t = id`.
    pub fn order_up_to(&self, g: &Element, m: u64) -> Result<Option<u64>> {
        self.check(g)?;
        let id = self.identity();
        let mut x = g.clone();
        for t in 1..=m {
            if x == id {
                return Ok(Some(t));
            }
            if t < m {
                x = self.mul_unchecked(&x, g)?;
            }
        }
        Ok(None)
    }

    /// Exact order of `g`; `None` means infinite order.
    pub fn element_order(&self, g: &Element) -> Result<Option<u64>> {
        self.check(g)?;
        match (self, g) {
            (GroupSpec::FreeAbelian(_), _) | (GroupSpec::Heisenberg, _) => {
                Ok(if self.is_identity(g) { Some(1) } else { None })
            }
            (GroupSpec::Product(parts), Element::Product(xs)) => {
                let mut acc = 1u64;
                for (p, x) in parts.iter().zip(xs) {
                    match p.element_order(x)? {
                        Some(o) => acc = num_integer::lcm(acc, o),
                        None => return Ok(None),
                    }
                }
                Ok(Some(acc))
            }
            _ => {
                let bound = self.order().expect("finite group");
                self.order_up_to(g, bound)
            }
        }
    }

    /// Cardinality, or `None` for infinite groups.
    pub fn order(&self) -> Option<u64> {
        match self {
            GroupSpec::Cyclic(m) => Some(*m),
            GroupSpec::Dihedral(m) => Some(2 * m),
            GroupSpec::Cayley(t) => Some(t.order as u64),
            GroupSpec::FreeAbelian(_) | GroupSpec::Heisenberg => None,
            GroupSpec::Product(parts) => parts
                .iter()
                .try_fold(1u64, |acc, p| p.order().and_then(|o| acc.checked_mul(o))),
        }
    }

    pub fn is_abelian(&self) -> bool {
        match self {
            GroupSpec::Cyclic(_) | GroupSpec::FreeAbelian(_) => true,
            GroupSpec::Dihedral(_) | GroupSpec::Heisenberg => false,
            GroupSpec::Cayley(t) => {
                (0..t.order as u32).all(|a| (0..t.order as u32).all(|b| t.mul(a, b) == t.mul(b, a)))
            }
            GroupSpec::Product(parts) => parts.iter().all(GroupSpec::is_abelian),
        }
    }

    /// All elements of a finite group, in canonical order.
    pub fn elements(&self) -> Option<Vec<Element>> {
        match self {
            GroupSpec::Cyclic(m) => Some((0..*m).map(Element::Cyclic).collect()),
            GroupSpec::Dihedral(m) => Some(
                [false, true]
                    .into_iter()
                    .flat_map(|flip| (0..*m).map(move |rot| Element::Dihedral { rot, flip }))
                    .collect(),
            ),
            GroupSpec::Cayley(t) => Some((0..t.order as u32).map(Element::Table).collect()),
            GroupSpec::FreeAbelian(_) | GroupSpec::Heisenberg => None,
            GroupSpec::Product(parts) => {
                let mut acc: Vec<Vec<Element>> = vec![vec![]];
                for p in parts {
                    let els = p.elements()?;
                    acc = acc
                        .into_iter()
                        .flat_map(|prefix| {
                            els.iter().map(move |e| {
                                let mut v = prefix.clone();
                                v.push(e.clone());
                                v
                            })
                        })
                        .collect();
                }
                Some(acc.into_iter().map(Element::Product).collect())
            }
        }
    }

    /// `{g * x : x in set}`.
    pub fn left_translate(&self, g: &Element, set: &ElementSet) -> Result<ElementSet> {
        set.iter().map(|x| self.mul(g, x)).collect()
    }

    /// `{g1 * x * g2 : x in set}`.
    pub fn two_sided_translate(
        &self,
        g1: &Element,
        set: &ElementSet,
        g2: &Element,
    ) -> Result<ElementSet> {
        set.iter()
            .map(|x| self.mul(&self.mul(g1, x)?, g2))
            .collect()
    }

    /// JSON encoding of an element: integers for residues, table indices and
    /// points of `Z`, arrays for other lattice vectors, `{r, flip}`, `{a, b, c}`, and
    /// nested arrays for products.
    pub fn element_to_json(&self, g: &Element) -> Value {
        match g {
            Element::Cyclic(r) => json!(r),
            Element::Lattice(v) if v.len() == 1 => json!(v[0]),
            Element::Lattice(v) => json!(v),
            Element::Dihedral { rot, flip } => json!({"r": rot, "flip": u8::from(*flip)}),
            Element::Heisenberg([a, b, c]) => json!({"a": a, "b": b, "c": c}),
            Element::Table(i) => json!(i),
            Element::Product(xs) => match self {
                GroupSpec::Product(parts) => Value::Array(
                    parts
                        .iter()
                        .zip(xs)
                        .map(|(p, x)| p.element_to_json(x))
                        .collect(),
                ),
                _ => Value::Null,
            },
        }
    }

    pub fn element_from_json(&self, v: &Value) -> Result<Element> {
        let bad = || Error::Json(format!("cannot read {v} as an element of {self}"));
        let g = match self {
            GroupSpec::Cyclic(m) => {
                // negative integers are reduced mod m
                let x = v.as_i64().ok_or_else(bad)?;
                Element::Cyclic(x.rem_euclid(*m as i64) as u64)
            }
            GroupSpec::FreeAbelian(d) => match v {
                Value::Array(xs) => Element::Lattice(
                    xs.iter()
                        .map(|x| x.as_i64().ok_or_else(bad))
                        .collect::<Result<_>>()?,
                ),
                Value::Number(_) if *d == 1 => Element::Lattice(vec![v.as_i64().ok_or_else(bad)?]),
                _ => return Err(bad()),
            },
            GroupSpec::Dihedral(m) => {
                let (r, flip) = match v {
                    Value::Object(o) => (
                        o.get("r").and_then(Value::as_i64).ok_or_else(bad)?,
                        match o.get("flip") {
                            Some(Value::Bool(b)) => *b,
                            Some(f) => f.as_u64().ok_or_else(bad)? != 0,
                            None => false,
                        },
                    ),
                    Value::Array(xs) if xs.len() == 2 => (
                        xs[0].as_i64().ok_or_else(bad)?,
                        xs[1].as_u64().ok_or_else(bad)? != 0,
                    ),
                    _ => return Err(bad()),
                };
                Element::Dihedral {
                    rot: r.rem_euclid(*m as i64) as u64,
                    flip,
                }
            }
            GroupSpec::Heisenberg => match v {
                Value::Object(o) => {
                    let get = |k: &str| o.get(k).and_then(Value::as_i64).ok_or_else(bad);
                    Element::Heisenberg([get("a")?, get("b")?, get("c")?])
                }
                Value::Array(xs) if xs.len() == 3 => {
                    let get = |i: usize| xs[i].as_i64().ok_or_else(bad);
                    Element::Heisenberg([get(0)?, get(1)?, get(2)?])
                }
                _ => return Err(bad()),
            },
            GroupSpec::Cayley(_) => {
                Element::Table(u32::try_from(v.as_u64().ok_or_else(bad)?).map_err(|_| bad())?)
            }
            GroupSpec::Product(parts) => match v {
                Value::Array(xs) if xs.len() == parts.len() => Element::Product(
                    parts
                        .iter()
                        .zip(xs)
                        .map(|(p, x)| p.element_from_json(x))
                        .collect::<Result<_>>()?,
                ),
                _ => return Err(bad()),
            },
        };
        self.check(&g)?;
        Ok(g)
    }

    pub fn set_to_json(&self, set: &ElementSet) -> Value {
        Value::Array(set.iter().map(|g| self.element_to_json(g)).collect())
    }

    pub fn set_from_json(&self, v: &Value) -> Result<ElementSet> {
        v.as_array()
            .ok_or_else(|| Error::Json(format!("expected an element list, found {v}")))?
            .iter()
            .map(|x| self.element_from_json(x))
            .collect()
    }
}

fn spec_err(spec: &str, reason: &str) -> Error {
    Error::GroupSpec {
        spec: spec.to_string(),
        reason: reason.to_string(),
    }
}

fn split_top_level(s: &str) -> std::result::Result<Vec<&str>, &'static str> {
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in s.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => {
                depth -= 1;
                if depth < 0 {
                    return Err("unbalanced parentheses");
                }
            }
            ',' if depth == 0 => {
                parts.push(s[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
    }
    if depth != 0 {
        return Err("unbalanced parentheses");
    }
    let last = s[start..].trim();
    if !last.is_empty() {
        parts.push(last);
    }
    Ok(parts)
}

/// Convenience constructors used throughout tests and generators.
pub fn z(x: i64) -> Element {
    Element::Lattice(vec![x])
}

pub fn z2(x: i64, y: i64) -> Element {
    Element::Lattice(vec![x, y])
}

pub fn rot(r: u64) -> Element {
    Element::Dihedral { rot: r, flip: false }
}

pub fn refl(r: u64) -> Element {
    Element::Dihedral { rot: r, flip: true }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn heis(a: i64, b: i64, c: i64) -> Element {
        Element::Heisenberg([a, b, c])
    }

    /// 3x3 integer matrix product, used as an independent oracle.
    fn mat(g: &Element) -> [[i64; 3]; 3] {
        match g {
            Element::Heisenberg([a, b, c]) => [[1, *a, *c], [0, 1, *b], [0, 0, 1]],
            _ => unreachable!(),
        }
    }

    fn matmul(x: [[i64; 3]; 3], y: [[i64; 3]; 3]) -> [[i64; 3]; 3] {
        let mut out = [[0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                out[i][j] = (0..3).map(|k| x[i][k] * y[k][j]).sum();
            }
        }
        out
    }

    #[test]
    fn cyclic_examples() {
        let g = GroupSpec::cyclic(6).unwrap();
        assert_eq!(g.mul(&Element::Cyclic(4), &Element::Cyclic(5)).unwrap(), Element::Cyclic(3));
        assert_eq!(g.inv(&Element::Cyclic(2)).unwrap(), Element::Cyclic(4));
        assert_eq!(g.order_up_to(&Element::Cyclic(2), 10).unwrap(), Some(3));
        assert_eq!(g.order_up_to(&g.identity(), 1).unwrap(), Some(1));
    }

    #[test]
    fn heisenberg_matches_matrix_product() {
        let g = GroupSpec::Heisenberg;
        let p = g.mul(&heis(1, 0, 0), &heis(0, 1, 0)).unwrap();
        assert_eq!(p, heis(1, 1, 1));
        assert_eq!(mat(&p), matmul(mat(&heis(1, 0, 0)), mat(&heis(0, 1, 0))));
        let (x, y) = (heis(2, -3, 5), heis(-1, 4, 7));
        assert_eq!(mat(&g.mul(&x, &y).unwrap()), matmul(mat(&x), mat(&y)));
        assert_eq!(g.order_up_to(&heis(1, 0, 0), 100).unwrap(), None);
        assert_eq!(g.element_order(&heis(1, 0, 0)).unwrap(), None);
    }

    #[test]
    fn free_abelian_inverse() {
        let g = GroupSpec::free_abelian(2).unwrap();
        assert_eq!(g.inv(&z2(3, -1)).unwrap(), z2(-3, 1));
    }

    #[test]
    fn dihedral_inverse_by_search() {
        let g = GroupSpec::dihedral(5).unwrap();
        let x = refl(2);
        let oracle: Vec<_> = g
            .elements()
            .unwrap()
            .into_iter()
            .filter(|y| g.mul(&x, y).unwrap() == g.identity())
            .collect();
        assert_eq!(oracle, vec![refl(2)]);
        assert_eq!(g.inv(&x).unwrap(), refl(2));
        // flip * rot = rot^-1 * flip
        assert_eq!(
            g.mul(&refl(0), &rot(1)).unwrap(),
            g.mul(&rot(4), &refl(0)).unwrap()
        );
    }

    #[test]
    fn kind_mismatch_is_an_error() {
        let g = GroupSpec::cyclic(6).unwrap();
        assert!(matches!(
            g.mul(&Element::Cyclic(1), &z(1)),
            Err(Error::KindMismatch { .. })
        ));
        assert!(g.inv(&Element::Cyclic(6)).is_err());
        let h = GroupSpec::free_abelian(2).unwrap();
        assert!(h.mul(&z(1), &z(2)).is_err());
    }

    #[test]
    fn finite_groups_satisfy_axioms_exhaustively() {
        let groups = [
            GroupSpec::cyclic(6).unwrap(),
            GroupSpec::dihedral(4).unwrap(),
            GroupSpec::parse("prod(cyclic:2,dihedral:3)").unwrap(),
        ];
        for g in &groups {
            let els = g.elements().unwrap();
            assert_eq!(els.len() as u64, g.order().unwrap());
            for a in &els {
                assert_eq!(g.mul(a, &g.identity()).unwrap(), *a);
                assert_eq!(g.mul(a, &g.inv(a).unwrap()).unwrap(), g.identity());
                assert_eq!(g.inv(&g.inv(a).unwrap()).unwrap(), *a);
                for b in &els {
                    for c in &els {
                        let l = g.mul(&g.mul(a, b).unwrap(), c).unwrap();
                        let r = g.mul(a, &g.mul(b, c).unwrap()).unwrap();
                        assert_eq!(l, r);
                    }
                }
            }
        }
    }

    #[test]
    fn order_is_minimal() {
        let g = GroupSpec::dihedral(6).unwrap();
        for x in g.elements().unwrap() {
            let t = g.order_up_to(&x, 100).unwrap().unwrap();
            assert_eq!(g.pow(&x, t).unwrap(), g.identity());
            for s in 1..t {
                assert_ne!(g.pow(&x, s).unwrap(), g.identity());
            }
            assert_eq!(g.element_order(&x).unwrap(), Some(t));
        }
    }

    #[test]
    fn parse_mini_language() {
        assert_eq!(GroupSpec::parse("cyclic:6").unwrap(), GroupSpec::Cyclic(6));
        assert_eq!(GroupSpec::parse("Z^2").unwrap(), GroupSpec::FreeAbelian(2));
        assert_eq!(GroupSpec::parse("dihedral:5").unwrap(), GroupSpec::Dihedral(5));
        assert_eq!(GroupSpec::parse("heisenberg").unwrap(), GroupSpec::Heisenberg);
        let p = GroupSpec::parse("prod(cyclic:2,Z^1)").unwrap();
        assert_eq!(
            p,
            GroupSpec::Product(vec![GroupSpec::Cyclic(2), GroupSpec::FreeAbelian(1)])
        );
        assert_eq!(p.to_string(), "prod(cyclic:2,Z^1)");
        let nested = GroupSpec::parse("prod(prod(cyclic:2,cyclic:3),heisenberg)").unwrap();
        assert_eq!(nested.to_string(), "prod(prod(cyclic:2,cyclic:3),heisenberg)");
        assert!(GroupSpec::parse("dihedral:2").is_err());
        assert!(GroupSpec::parse("prod(cyclic:2").is_err());
        assert!(GroupSpec::parse("torus").is_err());
    }

    #[test]
    fn cayley_table_from_text() {
        // cyclic group of order 3
        let t = CayleyTable::parse("3\n0 1 2\n1 2 0\n2 0 1\n", "c3").unwrap();
        let g = GroupSpec::cayley(t);
        assert_eq!(g.identity(), Element::Table(0));
        assert_eq!(g.inv(&Element::Table(1)).unwrap(), Element::Table(2));
        assert_eq!(g.element_order(&Element::Table(1)).unwrap(), Some(3));
    }

    #[test]
    fn cayley_table_rejections() {
        assert!(CayleyTable::parse("2\n0 1\n0 1\n", "x").is_err());
        assert!(CayleyTable::parse("2\n0 1\n1\n", "x").is_err());
        // latin square without associativity: order-5 loop that is not a group
        let loop5 = "5\n0 1 2 3 4\n1 0 3 4 2\n2 4 0 1 3\n3 2 4 0 1\n4 3 1 2 0\n";
        let err = CayleyTable::parse(loop5, "loop").unwrap_err();
        assert!(err.to_string().contains("associative"), "{err}");
    }

    #[test]
    fn element_json_roundtrip() {
        let g = GroupSpec::parse("prod(dihedral:5,heisenberg,Z^2,cyclic:4)").unwrap();
        let x = Element::Product(vec![refl(3), heis(1, -2, 3), z2(4, 5), Element::Cyclic(3)]);
        let v = g.element_to_json(&x);
        assert_eq!(g.element_from_json(&v).unwrap(), x);
        assert_eq!(
            GroupSpec::FreeAbelian(1).element_from_json(&json!(7)).unwrap(),
            z(7)
        );
        assert!(GroupSpec::Cyclic(3).element_from_json(&json!("x")).is_err());
    }
}
