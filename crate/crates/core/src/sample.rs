//! Seeded random instances: elements, distributions, sets and strictly convex
//! lattice polygons.

use num_integer::Integer;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::group::{z2, Element, ElementSet, GroupSpec};
use crate::scalar::ratio;
use crate::ExactDist;

/// Uniform element; lattice and Heisenberg coordinates lie in `-radius..=radius`.
pub fn random_element<R: Rng + ?Sized>(group: &GroupSpec, radius: i64, rng: &mut R) -> Element {
    match group {
        GroupSpec::Cyclic(m) => Element::Cyclic(rng.gen_range(0..*m)),
        GroupSpec::FreeAbelian(d) => {
            Element::Lattice((0..*d).map(|_| rng.gen_range(-radius..=radius)).collect())
        }
        GroupSpec::Dihedral(m) => Element::Dihedral {
            rot: rng.gen_range(0..*m),
            flip: rng.gen(),
        },
        GroupSpec::Heisenberg => {
            Element::Heisenberg([0; 3].map(|_: i64| rng.gen_range(-radius..=radius)))
        }
        GroupSpec::Cayley(t) => Element::Table(rng.gen_range(0..t.order() as u32)),
        GroupSpec::Product(parts) => {
            Element::Product(parts.iter().map(|p| random_element(p, radius, rng)).collect())
        }
    }
}

/// Up to `size` distinct random elements (fewer only if the draws keep colliding).
pub fn random_set<R: Rng + ?Sized>(
    group: &GroupSpec,
    size: usize,
    radius: i64,
    rng: &mut R,
) -> ElementSet {
    let mut out = ElementSet::new();
    let mut attempts = 0;
    while out.len() < size && attempts < 50 * (size + 1) {
        out.insert(random_element(group, radius, rng));
        attempts += 1;
    }
    out
}

/// Distribution on up to `support` random atoms with integer weights in `1..=4`.
pub fn random_distribution<R: Rng + ?Sized>(
    group: &GroupSpec,
    support: usize,
    radius: i64,
    rng: &mut R,
) -> Result<ExactDist> {
    let atoms = random_set(group, support.max(1), radius, rng);
    let weights: Vec<i64> = atoms.iter().map(|_| rng.gen_range(1..=4)).collect();
    let total: i64 = weights.iter().sum();
    ExactDist::new(
        group.clone(),
        atoms.into_iter().zip(weights).map(|(g, w)| (g, ratio(w, total))),
    )
}

/// Centrally symmetric, strictly convex lattice polygon with `vertices` corners.
///
/// Edges are `vertices / 2` distinct primitive directions in the upper half
/// plane followed by their negatives, sorted by angle; the vertices are the
/// partial sums, so consecutive edge directions turn strictly.
pub fn strictly_convex_polygon<R: Rng + ?Sized>(vertices: usize, rng: &mut R) -> Result<ElementSet> {
    if vertices < 4 || vertices % 2 == 1 {
        return Err(Error::Precondition(format!(
            "polygon needs an even number of vertices >= 4, got {vertices}"
        )));
    }
    let half = vertices / 2;
    let radius = (half as i64).max(2);
    let mut pool: Vec<(i64, i64)> = Vec::new();
    for a in -radius..=radius {
        for b in 0..=radius {
            if (b > 0 || a > 0) && a.gcd(&b) == 1 {
                pool.push((a, b));
            }
        }
    }
    pool.shuffle(rng);
    let mut dirs: Vec<(i64, i64)> = pool.into_iter().take(half).collect();
    dirs.sort_by(|u, v| {
        let cross = u.0 * v.1 - u.1 * v.0;
        0.cmp(&cross)
    });
    let edges = dirs.iter().copied().chain(dirs.iter().map(|(a, b)| (-a, -b)));
    let (mut x, mut y) = (0, 0);
    let mut out = ElementSet::new();
    for (a, b) in edges {
        out.insert(z2(x, y));
        x += a;
        y += b;
    }
    Ok(out)
}
