//! Certificates of bounded self-translate dimension for finite sets.
//!
//! A set has dimension `<= 0` with complexity `C` when it has at most `C`
//! elements. It has dimension `<= k` when it is covered by at most `C` parts
//! `S_i` such that every nontrivial self-intersection `S_i ∩ g S_i` has
//! dimension `<= k - 1`, always with the same `C`.
//!
//! For finite parts only translates `g = b a^-1` with `a != b` in `S_i` give
//! a nonempty intersection, so the quantifier over all `g != id` reduces to
//! the finite [`translate_family`].

use std::collections::{BTreeMap, HashMap};

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::group::{Element, ElementSet, GroupSpec};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Certificate {
    /// Claims `|S| <= complexity`.
    Leaf { complexity: u32 },
    Node(Box<NodeCertificate>),
}

/// One recursive level: a cover of the set and certificates for the
/// self-intersections of every part.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NodeCertificate {
    pub complexity: u32,
    pub parts: Vec<ElementSet>,
    /// Applied to every `S_i ∩ g S_i` without an explicit branch.
    pub child: Certificate,
    /// Per `(part index, translate)` overrides of `child`.
    pub branches: BTreeMap<(usize, Element), Certificate>,
}

/// Position of a failure inside a certificate tree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PathStep {
    pub part: usize,
    pub translate: Element,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Failure {
    pub path: Vec<PathStep>,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verification {
    pub ok: bool,
    pub failure: Option<Failure>,
}

impl Certificate {
    pub fn leaf(complexity: u32) -> Self {
        Certificate::Leaf { complexity }
    }

    /// Node whose parts all use the same child certificate.
    pub fn node(complexity: u32, parts: Vec<ElementSet>, child: Certificate) -> Self {
        Certificate::Node(Box::new(NodeCertificate {
            complexity,
            parts,
            child,
            branches: BTreeMap::new(),
        }))
    }

    /// Claimed dimension: the depth of the tree.
    pub fn dimension(&self) -> u32 {
        match self {
            Certificate::Leaf { .. } => 0,
            Certificate::Node(n) => {
                1 + n
                    .branches
                    .values()
                    .map(Certificate::dimension)
                    .fold(n.child.dimension(), u32::max)
            }
        }
    }

    pub fn complexity(&self) -> u32 {
        match self {
            Certificate::Leaf { complexity } => *complexity,
            Certificate::Node(n) => n.complexity,
        }
    }

    /// `{"leaf": C}` or `{"node": {"C": C, "parts": [...], "child": ..., "branches": [...]}}`.
    pub fn to_json(&self, group: &GroupSpec) -> Value {
        match self {
            Certificate::Leaf { complexity } => json!({ "leaf": complexity }),
            Certificate::Node(n) => {
                let mut node = json!({
                    "C": n.complexity,
                    "parts": n.parts.iter().map(|p| group.set_to_json(p)).collect::<Vec<_>>(),
                    "child": n.child.to_json(group),
                });
                if !n.branches.is_empty() {
                    node["branches"] = Value::Array(
                        n.branches
                            .iter()
                            .map(|((i, g), c)| {
                                json!({
                                    "part": i,
                                    "g": group.element_to_json(g),
                                    "cert": c.to_json(group),
                                })
                            })
                            .collect(),
                    );
                }
                json!({ "node": node })
            }
        }
    }

    pub fn from_json(v: &Value, group: &GroupSpec) -> Result<Self> {
        let bad = |m: &str| Error::Json(format!("certificate: {m} in {v}"));
        if let Some(c) = v.get("leaf") {
            let c = c.as_u64().ok_or_else(|| bad("leaf complexity must be an integer"))?;
            return Ok(Certificate::leaf(c as u32));
        }
        let node = v.get("node").ok_or_else(|| bad("expected `leaf` or `node`"))?;
        let complexity = node
            .get("C")
            .and_then(Value::as_u64)
            .ok_or_else(|| bad("node needs integer `C`"))? as u32;
        let parts = node
            .get("parts")
            .and_then(Value::as_array)
            .ok_or_else(|| bad("node needs `parts`"))?
            .iter()
            .map(|p| group.set_from_json(p))
            .collect::<Result<Vec<_>>>()?;
        let child = match node.get("child") {
            Some(c) => Certificate::from_json(c, group)?,
            None => Certificate::leaf(complexity),
        };
        let mut branches = BTreeMap::new();
        if let Some(bs) = node.get("branches") {
            for b in bs.as_array().ok_or_else(|| bad("`branches` must be a list"))? {
                let part = b
                    .get("part")
                    .and_then(Value::as_u64)
                    .ok_or_else(|| bad("branch needs `part`"))? as usize;
                let g = group.element_from_json(b.get("g").ok_or_else(|| bad("branch needs `g`"))?)?;
                let cert =
                    Certificate::from_json(b.get("cert").ok_or_else(|| bad("branch needs `cert`"))?, group)?;
                branches.insert((part, g), cert);
            }
        }
        Ok(Certificate::Node(Box::new(NodeCertificate {
            complexity,
            parts,
            child,
            branches,
        })))
    }
}

/// `{b * a^-1 : a != b in part}`: the translates `g != id` for which
/// `part ∩ g part` can be nonempty.
pub fn translate_family(part: &ElementSet, group: &GroupSpec) -> Result<ElementSet> {
    let inverses: Vec<Element> = part.iter().map(|a| group.inv(a)).collect::<Result<_>>()?;
    let mut family = ElementSet::new();
    for (a, a_inv) in part.iter().zip(&inverses) {
        for b in part {
            if a != b {
                family.insert(group.mul(b, a_inv)?);
            }
        }
    }
    Ok(family)
}

/// `part ∩ g part`.
pub fn self_intersection(part: &ElementSet, g: &Element, group: &GroupSpec) -> Result<ElementSet> {
    let shifted = group.left_translate(g, part)?;
    Ok(part.intersection(&shifted).cloned().collect())
}

/// Checks a certificate against an explicit finite set.
pub fn verify_certificate(
    set: &ElementSet,
    cert: &Certificate,
    group: &GroupSpec,
) -> Result<Verification> {
    for g in set {
        group.check(g)?;
    }
    let c = cert.complexity();
    let mut path = Vec::new();
    let failure = if c == 0 {
        Some(Failure {
            path: Vec::new(),
            reason: "complexity must be positive".into(),
        })
    } else {
        check(set, cert, c, true, group, &mut path)?
    };
    Ok(Verification {
        ok: failure.is_none(),
        failure,
    })
}

fn check(
    set: &ElementSet,
    cert: &Certificate,
    c: u32,
    root: bool,
    group: &GroupSpec,
    path: &mut Vec<PathStep>,
) -> Result<Option<Failure>> {
    let fail = |path: &Vec<PathStep>, reason: String| {
        Ok(Some(Failure {
            path: path.clone(),
            reason,
        }))
    };
    if cert.complexity() != c {
        return fail(
            path,
            format!("complexity {} differs from the root complexity {c}", cert.complexity()),
        );
    }
    let node = match cert {
        Certificate::Leaf { .. } => {
            if set.len() as u64 > c as u64 {
                return fail(path, format!("|S| = {} exceeds C = {c}", set.len()));
            }
            return Ok(None);
        }
        Certificate::Node(node) => node,
    };
    if node.parts.len() as u64 > c as u64 {
        return fail(path, format!("{} parts exceed C = {c}", node.parts.len()));
    }
    for part in &node.parts {
        for g in part {
            group.check(g)?;
        }
    }
    if root {
        let union: ElementSet = node.parts.iter().flatten().cloned().collect();
        if union != *set {
            return fail(path, "parts do not cover the set exactly".into());
        }
    }
    let restricted: Vec<ElementSet> = node
        .parts
        .iter()
        .map(|p| p.intersection(set).cloned().collect())
        .collect();
    let covered: ElementSet = restricted.iter().flatten().cloned().collect();
    if covered != *set {
        return fail(path, "restricted parts do not cover the set".into());
    }
    for (i, part) in restricted.iter().enumerate() {
        for g in translate_family(part, group)? {
            let inter = self_intersection(part, &g, group)?;
            let sub = node.branches.get(&(i, g.clone())).unwrap_or(&node.child);
            path.push(PathStep {
                part: i,
                translate: g,
            });
            if let Some(f) = check(&inter, sub, c, false, group, path)? {
                return Ok(Some(f));
            }
            path.pop();
        }
    }
    Ok(None)
}

/// Transports a certificate for `S` to one for `g1 * S * g2`.
///
/// Parts map by `x -> g1 x g2` and branch translates by conjugation
/// `g -> g1 g g1^-1`, since `g1 (P ∩ gP) g2 = P' ∩ (g1 g g1^-1) P'`.
pub fn translate_certificate(
    cert: &Certificate,
    g1: &Element,
    g2: &Element,
    group: &GroupSpec,
) -> Result<Certificate> {
    let g1_inv = group.inv(g1)?;
    group.check(g2)?;
    transport(cert, g1, &g1_inv, g2, group)
}

fn transport(
    cert: &Certificate,
    g1: &Element,
    g1_inv: &Element,
    g2: &Element,
    group: &GroupSpec,
) -> Result<Certificate> {
    Ok(match cert {
        Certificate::Leaf { .. } => cert.clone(),
        Certificate::Node(n) => {
            let parts = n
                .parts
                .iter()
                .map(|p| group.two_sided_translate(g1, p, g2))
                .collect::<Result<_>>()?;
            let mut branches = BTreeMap::new();
            for ((i, g), c) in &n.branches {
                let conj = group.mul(&group.mul(g1, g)?, g1_inv)?;
                branches.insert((*i, conj), transport(c, g1, g1_inv, g2, group)?);
            }
            Certificate::Node(Box::new(NodeCertificate {
                complexity: n.complexity,
                parts,
                child: transport(&n.child, g1, g1_inv, g2, group)?,
                branches,
            }))
        }
    })
}

pub const MAX_SEARCH_SET: usize = 12;
pub const MAX_SEARCH_COMPLEXITY: u32 = 3;
pub const MAX_SEARCH_DIMENSION: u32 = 3;

/// Least `k <= k_max` with a complexity-`C` certificate for `set`.
pub fn selfdim_search(
    set: &ElementSet,
    complexity: u32,
    k_max: u32,
    group: &GroupSpec,
) -> Result<Option<(u32, Certificate)>> {
    if set.len() > MAX_SEARCH_SET {
        return Err(Error::CapExceeded(format!(
            "|S| = {} > {MAX_SEARCH_SET}",
            set.len()
        )));
    }
    if complexity == 0 || complexity > MAX_SEARCH_COMPLEXITY {
        return Err(Error::CapExceeded(format!(
            "C = {complexity} outside 1..={MAX_SEARCH_COMPLEXITY}"
        )));
    }
    if k_max > MAX_SEARCH_DIMENSION {
        return Err(Error::CapExceeded(format!("k_max = {k_max} > {MAX_SEARCH_DIMENSION}")));
    }
    for g in set {
        group.check(g)?;
    }
    let mut searcher = Searcher {
        group,
        c: complexity,
        memo: HashMap::new(),
    };
    for k in 0..=k_max {
        if let Some(cert) = searcher.certify(set, k)? {
            return Ok(Some((k, cert)));
        }
    }
    Ok(None)
}

struct Searcher<'a> {
    group: &'a GroupSpec,
    c: u32,
    /// Keyed by the left-translation canonical form of the set.
    memo: HashMap<(Vec<Element>, u32), Option<Certificate>>,
}

impl Searcher<'_> {
    fn certify(&mut self, set: &ElementSet, k: u32) -> Result<Option<Certificate>> {
        if set.len() as u64 <= self.c as u64 {
            return Ok(Some(Certificate::leaf(self.c)));
        }
        if k == 0 {
            return Ok(None);
        }
        let (shift, canonical) = canonical_left_translate(set, self.group)?;
        let key = (canonical, k);
        let found = match self.memo.get(&key) {
            Some(hit) => hit.clone(),
            None => {
                let found = self.certify_canonical(&key.0, k)?;
                self.memo.insert(key, found.clone());
                found
            }
        };
        // canonical = shift * set, so set = shift^-1 * canonical
        match found {
            Some(cert) => {
                let back = self.group.inv(&shift)?;
                Ok(Some(translate_certificate(
                    &cert,
                    &back,
                    &self.group.identity(),
                    self.group,
                )?))
            }
            None => Ok(None),
        }
    }

    fn certify_canonical(&mut self, elements: &[Element], k: u32) -> Result<Option<Certificate>> {
        let n = elements.len();
        let full: u32 = (1u32 << n) - 1;
        let mut blocks: HashMap<u32, Option<BTreeMap<Element, Certificate>>> = HashMap::new();
        let mut cover_memo: HashMap<(u32, u32), Option<Vec<u32>>> = HashMap::new();
        let cover = self.cover(elements, full, self.c, k, &mut blocks, &mut cover_memo)?;
        let Some(masks) = cover else {
            return Ok(None);
        };
        let mut parts = Vec::new();
        let mut branches = BTreeMap::new();
        for (i, mask) in masks.iter().enumerate() {
            parts.push(mask_to_set(elements, *mask));
            let subs = blocks[mask].as_ref().expect("cover uses good blocks");
            for (g, c) in subs {
                branches.insert((i, g.clone()), c.clone());
            }
        }
        Ok(Some(Certificate::Node(Box::new(NodeCertificate {
            complexity: self.c,
            parts,
            child: Certificate::leaf(self.c),
            branches,
        }))))
    }

    /// Partition of `uncovered` into at most `parts_left` good blocks. Good
    /// blocks are closed under subsets, so partitions lose nothing over covers.
    fn cover(
        &mut self,
        elements: &[Element],
        uncovered: u32,
        parts_left: u32,
        k: u32,
        blocks: &mut HashMap<u32, Option<BTreeMap<Element, Certificate>>>,
        memo: &mut HashMap<(u32, u32), Option<Vec<u32>>>,
    ) -> Result<Option<Vec<u32>>> {
        if uncovered == 0 {
            return Ok(Some(Vec::new()));
        }
        if parts_left == 0 {
            return Ok(None);
        }
        if let Some(hit) = memo.get(&(uncovered, parts_left)) {
            return Ok(hit.clone());
        }
        let lowest = uncovered & uncovered.wrapping_neg();
        let rest = uncovered & !lowest;
        let mut result = None;
        if parts_left == 1 {
            if self.block_ok(elements, uncovered, k, blocks)? {
                result = Some(vec![uncovered]);
            }
        } else {
            // every block containing the lowest uncovered element, largest first
            let mut candidates = Vec::new();
            let mut sub = rest;
            loop {
                candidates.push(sub | lowest);
                if sub == 0 {
                    break;
                }
                sub = (sub - 1) & rest;
            }
            candidates.sort_by_key(|m| std::cmp::Reverse(m.count_ones()));
            for block in candidates {
                if !self.block_ok(elements, block, k, blocks)? {
                    continue;
                }
                if let Some(mut tail) =
                    self.cover(elements, uncovered & !block, parts_left - 1, k, blocks, memo)?
                {
                    tail.insert(0, block);
                    result = Some(tail);
                    break;
                }
            }
        }
        memo.insert((uncovered, parts_left), result.clone());
        Ok(result)
    }

    fn block_ok(
        &mut self,
        elements: &[Element],
        mask: u32,
        k: u32,
        blocks: &mut HashMap<u32, Option<BTreeMap<Element, Certificate>>>,
    ) -> Result<bool> {
        if let Some(hit) = blocks.get(&mask) {
            return Ok(hit.is_some());
        }
        let part = mask_to_set(elements, mask);
        let mut subs = BTreeMap::new();
        let mut ok = true;
        for g in translate_family(&part, self.group)? {
            let inter = self_intersection(&part, &g, self.group)?;
            match self.certify(&inter, k - 1)? {
                Some(cert) => {
                    if !matches!(cert, Certificate::Leaf { .. }) {
                        subs.insert(g, cert);
                    }
                }
                None => {
                    ok = false;
                    break;
                }
            }
        }
        blocks.insert(mask, ok.then_some(subs));
        Ok(ok)
    }
}

fn mask_to_set(elements: &[Element], mask: u32) -> ElementSet {
    elements
        .iter()
        .enumerate()
        .filter(|(i, _)| mask >> i & 1 == 1)
        .map(|(_, g)| g.clone())
        .collect()
}

/// Representative of `{h * set}` over left translates `h`: the smallest sorted
/// `t^-1 * set` over `t` in `set`. Returns `(h, h * set)`.
pub fn canonical_left_translate(
    set: &ElementSet,
    group: &GroupSpec,
) -> Result<(Element, Vec<Element>)> {
    let mut best: Option<(Element, Vec<Element>)> = None;
    for t in set {
        let h = group.inv(t)?;
        let shifted: Vec<Element> = group.left_translate(&h, set)?.into_iter().collect();
        if best.as_ref().is_none_or(|(_, b)| shifted < *b) {
            best = Some((h, shifted));
        }
    }
    Ok(best.unwrap_or_else(|| (group.identity(), Vec::new())))
}
