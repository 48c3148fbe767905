use anticoncentration::dist::prefix_laws;
use anticoncentration::engine::{
    certified_bound_b, certified_product_bound, certified_rho_s, contiguous_partition,
    decoupling_check, default_lambdas,
};
use anticoncentration::lab::{inverse_exponent, rho_from_rho_s};
use anticoncentration::miner::{count_grid_edges, find_ap, find_grid, GridWitness};
use anticoncentration::sample::{random_distribution, random_element, random_set};
use anticoncentration::scalar::{int, ratio};
use anticoncentration::selfdim::{selfdim_search, translate_certificate, verify_certificate};
use anticoncentration::{
    p0_of, walk_law, CayleyTable, Certificate, ElementSet, Error, ExactDist, GroupSpec, Rational,
    SetPredicate,
};
use num_traits::{One, Zero};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn s3_table() -> GroupSpec {
    let d3 = GroupSpec::Dihedral(3);
    let els = d3.elements().unwrap();
    let idx = |g| els.iter().position(|x| *x == g).unwrap() as u32;
    let rows = els
        .iter()
        .map(|a| els.iter().map(|b| idx(d3.mul(a, b).unwrap())).collect())
        .collect();
    GroupSpec::cayley(CayleyTable::new(6, rows, "s3").unwrap())
}

fn groups() -> Vec<GroupSpec> {
    let mut out: Vec<GroupSpec> = [
        "cyclic:7",
        "cyclic:12",
        "Z",
        "Z^2",
        "dihedral:4",
        "dihedral:5",
        "heisenberg",
        "prod(cyclic:2,dihedral:3)",
    ]
    .iter()
    .map(|s| GroupSpec::parse(s).unwrap())
    .collect();
    out.push(s3_table());
    out
}

fn pick_group(rng: &mut ChaCha8Rng) -> GroupSpec {
    let gs = groups();
    gs[rng.gen_range(0..gs.len())].clone()
}

fn walk(group: &GroupSpec, n: usize, supp: usize, rng: &mut ChaCha8Rng) -> Vec<ExactDist> {
    (0..n)
        .map(|_| random_distribution(group, rng.gen_range(1..=supp), 2, rng).unwrap())
        .collect()
}

fn restrict_root(cert: &Certificate, target: &ElementSet) -> Certificate {
    match cert {
        Certificate::Leaf { .. } => cert.clone(),
        Certificate::Node(n) => {
            let mut n = n.as_ref().clone();
            n.parts = n.parts.iter().map(|p| p.intersection(target).cloned().collect()).collect();
            Certificate::Node(Box::new(n))
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn group_axioms(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for g in groups() {
            let a = random_element(&g, 5, &mut rng);
            let b = random_element(&g, 5, &mut rng);
            let c = random_element(&g, 5, &mut rng);
            let ab_c = g.mul(&g.mul(&a, &b).unwrap(), &c).unwrap();
            let a_bc = g.mul(&a, &g.mul(&b, &c).unwrap()).unwrap();
            prop_assert_eq!(ab_c, a_bc);
            prop_assert!(g.is_identity(&g.mul(&a, &g.inv(&a).unwrap()).unwrap()));
            prop_assert_eq!(g.inv(&g.inv(&a).unwrap()).unwrap(), a.clone());
            if let Some(t) = g.order_up_to(&a, 64).unwrap() {
                let mut x = a.clone();
                for s in 1..t {
                    prop_assert!(!g.is_identity(&x), "a^{} = id before order {}", s, t);
                    x = g.mul(&x, &a).unwrap();
                }
                prop_assert!(g.is_identity(&x));
            }
        }
    }

    #[test]
    fn product_groups_act_componentwise(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let parts = vec![GroupSpec::Dihedral(5), GroupSpec::Heisenberg, GroupSpec::Cyclic(4)];
        let g = GroupSpec::Product(parts.clone());
        let a = random_element(&g, 4, &mut rng);
        let b = random_element(&g, 4, &mut rng);
        let (anticoncentration::Element::Product(xa), anticoncentration::Element::Product(xb)) =
            (&a, &b) else { unreachable!() };
        let anticoncentration::Element::Product(ab) = g.mul(&a, &b).unwrap() else { unreachable!() };
        for (i, p) in parts.iter().enumerate() {
            prop_assert_eq!(&ab[i], &p.mul(&xa[i], &xb[i]).unwrap());
        }
    }

    #[test]
    fn convolution_invariants(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = pick_group(&mut rng);
        let d: Vec<ExactDist> = walk(&g, 3, 4, &mut rng);
        let d12 = d[0].convolve(&d[1]).unwrap();
        prop_assert!(d12.total().is_one());
        let left = d12.convolve(&d[2]).unwrap();
        let right = d[0].convolve(&d[1].convolve(&d[2]).unwrap()).unwrap();
        prop_assert_eq!(&left, &right);
        prop_assert!(left.total().is_one());

        let r = d12.rho();
        prop_assert!(r <= d[0].rho() && r <= d[1].rho());
        prop_assert!(r >= p0_of(&d[1..2]).unwrap() * d[0].rho());
        prop_assert!(r >= p0_of(&d[0..1]).unwrap() * d[1].rho());

        let set = random_set(&g, 3, 2, &mut rng);
        let rs = left.rho_s(&SetPredicate::Explicit(set.clone())).unwrap();
        prop_assert!(rs >= Rational::zero() && rs <= Rational::one());
        for x in set {
            let single = SetPredicate::explicit([x]);
            prop_assert!(left.rho_s(&single).unwrap() <= left.rho());
        }
    }

    #[test]
    fn decoupling_holds(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = pick_group(&mut rng);
        let y = random_distribution(&g, rng.gen_range(1..=6), 2, &mut rng).unwrap();
        let z = random_distribution(&g, rng.gen_range(1..=6), 2, &mut rng).unwrap();
        let target = random_set(&g, rng.gen_range(1..=8), 3, &mut rng);
        let report = decoupling_check(&y, &z, |a, b| target.contains(&g.mul(a, b).unwrap()));
        prop_assert!(report.holds, "{:?}", report);
    }

    #[test]
    fn partition_postcondition(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = pick_group(&mut rng);
        let n = rng.gen_range(2..=14);
        let mus = walk(&g, n, 3, &mut rng);
        let p0 = p0_of(&mus).unwrap();
        let rho = walk_law(&mus).unwrap().rho();
        let k = rng.gen_range(0..=2u32).min(n as u32 - 1);
        if let Some(lambdas) = default_lambdas(&rho, &p0, k) {
            match contiguous_partition(&mus, &lambdas) {
                Ok(part) => {
                    prop_assert_eq!(part.intervals.len(), k as usize + 1);
                    prop_assert_eq!(part.intervals[0].start, 0);
                    prop_assert_eq!(part.intervals.last().unwrap().end, n);
                    for (i, w) in part.intervals.windows(2).enumerate() {
                        prop_assert_eq!(w[0].end, w[1].start, "gap after block {}", i);
                    }
                    for (i, iv) in part.intervals.iter().enumerate() {
                        prop_assert!(!iv.is_empty());
                        let direct = walk_law(&mus[iv.clone()]).unwrap().rho();
                        prop_assert_eq!(&direct, &part.block_rhos[i]);
                        prop_assert!(&direct * &p0 <= lambdas[i]);
                    }
                }
                Err(e) => prop_assert!(false, "{}", e),
            }
        }
    }

    #[test]
    fn bound_is_monotone(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = rng.gen_range(0..=3usize);
        let c = rng.gen_range(1..=4u32);
        let rhos: Vec<Rational> =
            (0..=k).map(|_| ratio(rng.gen_range(1..=50), rng.gen_range(50..=200))).collect();
        let base = certified_bound_b(c, &rhos).value;
        prop_assert!(certified_bound_b(c + 1, &rhos).value >= base);
        for i in 0..=k {
            let mut up = rhos.clone();
            up[i] += ratio(1, rng.gen_range(100..=1000));
            prop_assert!(certified_bound_b(c, &up).value >= base);
        }
    }

    #[test]
    fn translate_invariance(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = pick_group(&mut rng);
        let set = random_set(&g, rng.gen_range(1..=6), 2, &mut rng);
        let c = rng.gen_range(1..=3);
        if let Some((_, cert)) = selfdim_search(&set, c, 2, &g).unwrap() {
            let g1 = random_element(&g, 3, &mut rng);
            let g2 = random_element(&g, 3, &mut rng);
            let moved = g.two_sided_translate(&g1, &set, &g2).unwrap();
            let moved_cert = translate_certificate(&cert, &g1, &g2, &g).unwrap();
            let v = verify_certificate(&moved, &moved_cert, &g).unwrap();
            prop_assert!(v.ok, "{:?}", v.failure);
        }
    }

    #[test]
    fn certificates_restrict_to_subsets(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = pick_group(&mut rng);
        let set = random_set(&g, rng.gen_range(2..=7), 2, &mut rng);
        if let Some((_, cert)) = selfdim_search(&set, 2, 2, &g).unwrap() {
            let sub: ElementSet = set.iter().filter(|_| rng.gen_bool(0.6)).cloned().collect();
            let v = verify_certificate(&sub, &restrict_root(&cert, &sub), &g).unwrap();
            prop_assert!(v.ok, "{:?}", v.failure);
        }
    }

    #[test]
    fn certified_bound_is_sound(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = pick_group(&mut rng);
        let set = random_set(&g, rng.gen_range(1..=6), 2, &mut rng);
        let c = rng.gen_range(1..=3);
        let Some((k, cert)) = selfdim_search(&set, c, 2, &g).unwrap() else { return Ok(()) };
        let mus = walk(&g, rng.gen_range(k as usize + 1..=10), 3, &mut rng);
        match certified_rho_s(&mus, &cert, &SetPredicate::Explicit(set.clone())) {
            Ok(r) => {
                prop_assert!(r.sound, "{} > {}", r.exact, r.bound.value);
                let lower = rho_from_rho_s(&r.exact, &r.p0, k, c);
                prop_assert!(lower <= r.rho, "{} > rho = {}", lower, r.rho);
                let lower = rho_from_rho_s(&r.bound.value, &r.p0, k, c);
                prop_assert!(lower <= r.rho, "{} > rho = {}", lower, r.rho);
            }
            Err(Error::Unpartitionable { .. }) => {}
            Err(e) => prop_assert!(false, "{}", e),
        }
        let laws = walk(&g, k as usize + 1, 4, &mut rng);
        let p = certified_product_bound(&laws, &cert, &SetPredicate::Explicit(set)).unwrap();
        prop_assert!(p.sound, "{} > {}", p.exact, p.bound.value);
    }

    #[test]
    fn prefix_laws_match_walks(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = pick_group(&mut rng);
        let mus = walk(&g, 5, 3, &mut rng);
        let prefixes = prefix_laws(&mus).unwrap();
        for (i, p) in prefixes.iter().enumerate() {
            prop_assert_eq!(p, &walk_law(&mus[..=i]).unwrap());
        }
    }

    #[test]
    fn grid_edges_obey_the_certified_bound(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = pick_group(&mut rng);
        let set = random_set(&g, rng.gen_range(1..=7), 2, &mut rng);
        let c = rng.gen_range(1..=3);
        let Some((k, _)) = selfdim_search(&set, c, 2, &g).unwrap() else { return Ok(()) };
        let n = rng.gen_range(2..=5);
        let mut factors: Vec<ElementSet> = Vec::new();
        for _ in 0..=k {
            // bias factors towards the set so that edges actually occur
            let mut a = ElementSet::new();
            while a.len() < n {
                let x = if rng.gen_bool(0.5) {
                    set.iter().nth(rng.gen_range(0..set.len())).unwrap().clone()
                } else {
                    random_element(&g, 2, &mut rng)
                };
                a.insert(x);
            }
            factors.push(a);
        }
        let edges = count_grid_edges(&set, &factors, &g).unwrap();
        let rhos = vec![ratio(1, n as i64); k as usize + 1];
        let bound = int((n as i64).pow(k + 1)) * certified_bound_b(c, &rhos).value;
        prop_assert!(int(edges as i64) <= bound, "{} > {}", edges, bound);
    }

    #[test]
    fn witnesses_reverify(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = pick_group(&mut rng);
        let set = random_set(&g, rng.gen_range(2..=10), 2, &mut rng);
        if let Some(ap) = find_ap(&set, 3, &g).unwrap() {
            prop_assert!(ap.verify(&set, &g).unwrap());
        }
        let grid = find_grid(&set, 2, 3, &g).unwrap();
        if let Some(w) = grid.witness {
            prop_assert!(w.verify(&set, 3, &g).unwrap());
            // (r, C - 1): drop one element from every factor
            let smaller = GridWitness {
                factors: w.factors.iter().map(|a| a.iter().skip(1).cloned().collect()).collect(),
            };
            prop_assert!(smaller.verify(&set, 2, &g).unwrap());
            // (r - 1, C): the last factor holds the identity, so dropping it keeps products in S
            prop_assert!(w.factors[1].contains(&g.identity()));
            let shorter = GridWitness { factors: vec![w.factors[0].clone()] };
            prop_assert!(shorter.verify(&set, 3, &g).unwrap());
        }
    }

    #[test]
    fn inverse_exponent_is_increasing(k in 0u32..6, a in 1i64..20, b in 1i64..20) {
        let x = ratio(a, b);
        let y = &x + ratio(1, 7);
        prop_assert!(inverse_exponent(k, &x) < inverse_exponent(k, &y));
        prop_assert!(inverse_exponent(k, &x) < inverse_exponent(k + 1, &x));
    }
}
