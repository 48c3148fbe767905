//! Finite witnesses of structure inside a set: progressions, grids in the
//! multiplication hypergraph, grid edge counts and large self-translates.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::group::{Element, ElementSet, GroupSpec};
use crate::selfdim::{self_intersection, translate_family};

/// `{h, g h, ..., g^(m-1) h}`, all distinct and inside the set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ApWitness {
    pub g: Element,
    pub h: Element,
    pub m: usize,
}

impl ApWitness {
    pub fn points(&self, group: &GroupSpec) -> Result<Vec<Element>> {
        let mut out = Vec::with_capacity(self.m);
        let mut x = self.h.clone();
        for i in 0..self.m {
            if i > 0 {
                x = group.mul(&self.g, &x)?;
            }
            out.push(x.clone());
        }
        Ok(out)
    }

    pub fn verify(&self, set: &ElementSet, group: &GroupSpec) -> Result<bool> {
        let pts = self.points(group)?;
        let distinct: ElementSet = pts.iter().cloned().collect();
        Ok(distinct.len() == self.m && pts.iter().all(|p| set.contains(p)))
    }
}

/// Longest run `h, g h, g^2 h, ...` of distinct points in `set`, capped at `cap`.
fn run_length(
    set: &ElementSet,
    g: &Element,
    h: &Element,
    cap: usize,
    group: &GroupSpec,
) -> Result<usize> {
    let mut seen = ElementSet::new();
    let mut x = h.clone();
    while seen.len() < cap && set.contains(&x) && seen.insert(x.clone()) {
        x = group.mul(g, &x)?;
    }
    Ok(seen.len())
}

fn ap_candidates(set: &ElementSet, group: &GroupSpec) -> Result<Vec<(Element, Element)>> {
    let mut out = Vec::new();
    for h in set {
        let h_inv = group.inv(h)?;
        for s in set {
            if s != h {
                out.push((group.mul(s, &h_inv)?, h.clone()));
            }
        }
    }
    Ok(out)
}

/// An `m`-term progression in `set`. Candidates are `h` in the set and `g`
/// sending `h` back into the set, tried in element order.
pub fn find_ap(set: &ElementSet, m: usize, group: &GroupSpec) -> Result<Option<ApWitness>> {
    if m < 2 {
        return Err(Error::Precondition(format!("progression length {m} < 2")));
    }
    for (g, h) in ap_candidates(set, group)? {
        if run_length(set, &g, &h, m, group)? >= m {
            return Ok(Some(ApWitness { g, h, m }));
        }
    }
    Ok(None)
}

/// Largest `m <= cap` for which the set holds an `m`-term progression of
/// distinct points (`1` for a nonempty set without any pair, `0` when empty).
pub fn max_ap_length(set: &ElementSet, cap: usize, group: &GroupSpec) -> Result<usize> {
    let mut best = set.len().min(1).min(cap);
    for (g, h) in ap_candidates(set, group)? {
        best = best.max(run_length(set, &g, &h, cap, group)?);
        if best == cap {
            break;
        }
    }
    Ok(best)
}

/// Factor sets `A_1, ..., A_r` with every ordered product `a_1 ... a_r` in the set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridWitness {
    pub factors: Vec<ElementSet>,
}

impl GridWitness {
    pub fn verify(&self, set: &ElementSet, side: usize, group: &GroupSpec) -> Result<bool> {
        if self.factors.iter().any(|a| a.len() != side) {
            return Ok(false);
        }
        let mut products: ElementSet = [group.identity()].into_iter().collect();
        for a in &self.factors {
            let mut next = ElementSet::new();
            for p in &products {
                for x in a {
                    next.insert(group.mul(p, x)?);
                }
            }
            products = next;
        }
        Ok(products.iter().all(|p| set.contains(p)))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridSearch {
    pub witness: Option<GridWitness>,
    /// Number of search nodes visited; with no witness this is the size of
    /// the exhausted (normalized) search space.
    pub explored: u64,
}

pub const GRID_GUARD: u64 = 1_000_000;

/// Searches for an `r`-fold grid with sides of size `c` inside the set.
///
/// Any grid can be rebalanced as `A_1 x_1, x_1^-1 A_2 x_2, ..., x_{r-1}^-1 A_r`
/// without changing its products, so it suffices to search grids where
/// `A_2, ..., A_r` contain the identity. Then every partial product lies in
/// the set, and each new factor is drawn from `∩_p p^-1 S` over the current
/// partial products `p`.
pub fn find_grid(set: &ElementSet, r: usize, c: usize, group: &GroupSpec) -> Result<GridSearch> {
    if r == 0 || c < 2 {
        return Err(Error::Precondition(format!("need r >= 1 and C >= 2, got r = {r}, C = {c}")));
    }
    let work = (c as u64).checked_pow(r as u32).unwrap_or(u64::MAX);
    if work > GRID_GUARD {
        return Err(Error::CapExceeded(format!("C^r = {c}^{r} > {GRID_GUARD}")));
    }
    for g in set {
        group.check(g)?;
    }
    let mut search = GridSearcher {
        set,
        group,
        r,
        c,
        explored: 0,
        factors: Vec::with_capacity(r),
    };
    let id = group.identity();
    let products: ElementSet = [id].into_iter().collect();
    let found = search.extend(&products)?;
    Ok(GridSearch {
        witness: found.then(|| GridWitness {
            factors: search.factors.clone(),
        }),
        explored: search.explored,
    })
}

struct GridSearcher<'a> {
    set: &'a ElementSet,
    group: &'a GroupSpec,
    r: usize,
    c: usize,
    explored: u64,
    factors: Vec<ElementSet>,
}

impl GridSearcher<'_> {
    fn extend(&mut self, products: &ElementSet) -> Result<bool> {
        if self.factors.len() == self.r {
            return Ok(true);
        }
        let first = self.factors.is_empty();
        let id = self.group.identity();
        // feasible next factors: x with p x in S for every partial product p
        let mut candidates: Option<ElementSet> = None;
        for p in products {
            let p_inv = self.group.inv(p)?;
            let shifted = self.group.left_translate(&p_inv, self.set)?;
            candidates = Some(match candidates {
                None => shifted,
                Some(c) => c.intersection(&shifted).cloned().collect(),
            });
        }
        let mut candidates: Vec<Element> = candidates.unwrap_or_default().into_iter().collect();
        let forced: Vec<Element> = if first {
            Vec::new()
        } else {
            if !candidates.contains(&id) {
                return Ok(false);
            }
            candidates.retain(|x| *x != id);
            vec![id]
        };
        let need = self.c - forced.len();
        if candidates.len() < need {
            return Ok(false);
        }
        let mut chosen = Vec::with_capacity(need);
        self.choose(&candidates, 0, need, &forced, products, &mut chosen)
    }

    fn choose(
        &mut self,
        candidates: &[Element],
        from: usize,
        need: usize,
        forced: &[Element],
        products: &ElementSet,
        chosen: &mut Vec<Element>,
    ) -> Result<bool> {
        if chosen.len() == need {
            self.explored += 1;
            let factor: ElementSet = forced.iter().chain(chosen.iter()).cloned().collect();
            let mut next = ElementSet::new();
            for p in products {
                for x in &factor {
                    next.insert(self.group.mul(p, x)?);
                }
            }
            self.factors.push(factor);
            if self.extend(&next)? {
                return Ok(true);
            }
            self.factors.pop();
            return Ok(false);
        }
        let remaining = need - chosen.len();
        for i in from..candidates.len() {
            if candidates.len() - i < remaining {
                break;
            }
            chosen.push(candidates[i].clone());
            if self.choose(candidates, i + 1, need, forced, products, chosen)? {
                return Ok(true);
            }
            chosen.pop();
        }
        Ok(false)
    }
}

pub const GRID_COUNT_GUARD: u64 = 10_000_000;

/// Number of tuples `(a_1, ..., a_{r+1})` in `A_1 x ... x A_{r+1}` whose
/// ordered product lies in the set.
pub fn count_grid_edges(set: &ElementSet, factors: &[ElementSet], group: &GroupSpec) -> Result<u64> {
    let size = factors
        .iter()
        .try_fold(1u64, |acc, a| acc.checked_mul(a.len() as u64))
        .unwrap_or(u64::MAX);
    if size > GRID_COUNT_GUARD {
        return Err(Error::CapExceeded(format!(
            "grid has {size} tuples > {GRID_COUNT_GUARD}"
        )));
    }
    // multiplicities of partial products
    let mut counts: HashMap<Element, u64> = HashMap::from([(group.identity(), 1)]);
    for a in factors {
        let mut next: HashMap<Element, u64> = HashMap::new();
        for (p, n) in &counts {
            for x in a {
                *next.entry(group.mul(p, x)?).or_default() += n;
            }
        }
        counts = next;
    }
    Ok(counts
        .iter()
        .filter(|(p, _)| set.contains(p))
        .map(|(_, n)| n)
        .sum())
}

/// `{g != id : |S ∩ g S| >= t}`, a cardinality stand-in for translates that
/// keep a large part of the set.
pub fn bad_set_finite(set: &ElementSet, t: usize, group: &GroupSpec) -> Result<ElementSet> {
    if t == 0 {
        return Err(Error::Precondition("threshold t must be positive".into()));
    }
    let mut out = ElementSet::new();
    for g in translate_family(set, group)? {
        if self_intersection(set, &g, group)?.len() >= t {
            out.insert(g);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{refl, rot, z, z2};

    fn zset(xs: &[i64]) -> ElementSet {
        xs.iter().map(|&x| z(x)).collect()
    }

    fn line() -> GroupSpec {
        GroupSpec::FreeAbelian(1)
    }

    #[test]
    fn ap_examples() {
        let g = line();
        let w = find_ap(&zset(&[1, 2, 3, 5]), 3, &g).unwrap().unwrap();
        assert_eq!((w.g.clone(), w.h.clone()), (z(1), z(1)));
        assert!(w.verify(&zset(&[1, 2, 3, 5]), &g).unwrap());
        let w = find_ap(&zset(&[0, 2, 4, 6]), 4, &g).unwrap().unwrap();
        assert_eq!((w.g, w.h), (z(2), z(0)));
        assert_eq!(find_ap(&zset(&[0, 1, 3, 7]), 3, &g).unwrap(), None);
    }

    #[test]
    fn sidon_set_has_no_three_term_progression_by_exhaustion() {
        let s = [0i64, 1, 3, 7];
        for &a in &s {
            for &b in &s {
                let d = b - a;
                if d != 0 {
                    assert!(!s.contains(&(b + d)));
                }
            }
        }
    }

    #[test]
    fn max_ap_examples() {
        let g = line();
        assert_eq!(max_ap_length(&zset(&(0..10).collect::<Vec<_>>()), 20, &g).unwrap(), 10);
        assert_eq!(max_ap_length(&zset(&[0, 1, 3, 7]), 10, &g).unwrap(), 2);
        let c5 = GroupSpec::Cyclic(5);
        let all: ElementSet = c5.elements().unwrap().into_iter().collect();
        assert_eq!(max_ap_length(&all, 10, &c5).unwrap(), 5);
        assert_eq!(max_ap_length(&ElementSet::new(), 10, &g).unwrap(), 0);
        assert_eq!(max_ap_length(&zset(&[4]), 10, &g).unwrap(), 1);
    }

    #[test]
    fn grid_examples() {
        let g = line();
        let s = zset(&(0..9).collect::<Vec<_>>());
        let found = find_grid(&s, 2, 2, &g).unwrap();
        let w = found.witness.unwrap();
        assert!(w.verify(&s, 2, &g).unwrap());
        let listed = GridWitness {
            factors: vec![zset(&[0, 1]), zset(&[0, 2])],
        };
        assert!(listed.verify(&s, 2, &g).unwrap());

        let sidon = zset(&[0, 1, 3, 7]);
        let none = find_grid(&sidon, 2, 2, &g).unwrap();
        assert_eq!(none.witness, None);
        assert!(none.explored > 0);
    }

    #[test]
    fn dihedral_product_set_is_refound() {
        let g = GroupSpec::dihedral(7).unwrap();
        let (a, x, y) = (rot(2), refl(3), rot(5));
        let mut s = ElementSet::new();
        for u in [g.identity(), x.clone()] {
            for v in [g.identity(), y.clone()] {
                s.insert(g.mul(&g.mul(&a, &u).unwrap(), &v).unwrap());
            }
        }
        assert_eq!(s.len(), 4);
        let w = find_grid(&s, 2, 2, &g).unwrap().witness.unwrap();
        assert!(w.verify(&s, 2, &g).unwrap());
    }

    #[test]
    fn grid_guard() {
        let g = line();
        assert!(matches!(find_grid(&zset(&[0]), 20, 2, &g), Err(Error::CapExceeded(_))));
        assert!(find_grid(&zset(&[0]), 2, 1, &g).is_err());
    }

    #[test]
    fn grid_edge_counts() {
        let g = line();
        assert_eq!(count_grid_edges(&zset(&[0]), &[zset(&[0, 1]), zset(&[0, 1])], &g).unwrap(), 1);
        let s = zset(&(0..9).collect::<Vec<_>>());
        assert_eq!(count_grid_edges(&s, &[zset(&[0, 1]), zset(&[0, 2])], &g).unwrap(), 4);
        let big: Vec<ElementSet> = (0..4).map(|_| zset(&(0..100).collect::<Vec<_>>())).collect();
        assert!(count_grid_edges(&s, &big, &g).is_err());
    }

    #[test]
    fn bad_set_examples() {
        let g = line();
        assert_eq!(bad_set_finite(&zset(&[0, 1, 2]), 2, &g).unwrap(), zset(&[-1, 1]));
        assert!(bad_set_finite(&zset(&[0, 1, 2]), 3, &g).unwrap().is_empty());
        let g2 = GroupSpec::FreeAbelian(2);
        let convex: ElementSet = [z2(0, 0), z2(2, 0), z2(3, 1), z2(3, 3), z2(1, 3), z2(0, 2)]
            .into_iter()
            .collect();
        assert!(bad_set_finite(&convex, 3, &g2).unwrap().is_empty());
    }
}
