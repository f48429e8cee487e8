use std::collections::BTreeSet;
use std::sync::Arc;

use k3n_lattice::lattice::{classify_binary_form, discriminant_group, LatticeSpec};
use k3n_lattice::mbm::{enumerate_walls, mbm_table, same_chamber};
use k3n_lattice::orbit::{compact_vector, orbit_representative_in, same_orbit_monodromy};
use k3n_lattice::verify::{analyze_boundary, shift_e_coefficient};
use k3n_lattice::{
    disc_image, divisibility, is_primitive, make_lambda_n, make_reduced_lambda_n, orbit_invariant,
    orbit_representative, pairing, reflect, square, Definiteness, DiscImage, LatVec, OrbitInvariant,
};
use num_integer::Integer;
use proptest::prelude::*;

fn lattice(n: i64) -> Arc<LatticeSpec> {
    make_lambda_n(n).unwrap()
}

fn coords() -> impl Strategy<Value = Vec<i64>> {
    prop::collection::vec(-6i64..=6, 23)
}

/// Sparse small tails keep generator words inside `i64`.
fn sparse_coords() -> impl Strategy<Value = Vec<i64>> {
    prop::collection::vec(prop_oneof![4 => Just(0i64), 1 => -1i64..=1], 23)
}

fn nonzero_coords() -> impl Strategy<Value = Vec<i64>> {
    coords().prop_filter("nonzero", |c| c.iter().any(|&x| x != 0))
}

fn vec_in(n: i64, c: Vec<i64>) -> LatVec {
    LatVec::new(&lattice(n), c).unwrap()
}

/// Class of square `target`: `(1, k)` in the first U plus the given tail.
fn class_of_square(n: i64, mut c: Vec<i64>, target: i128) -> LatVec {
    c[0] = 1;
    c[1] = 0;
    let tail = square(&vec_in(n, c.clone())).unwrap();
    c[1] = i64::try_from((target - tail) / 2).unwrap();
    vec_in(n, c)
}

/// Oracle for a symmetric 2x2 form by rational diagonalization.
fn diagonal_oracle(a: i128, b: i128, c: i128) -> Definiteness {
    let diag: Vec<(i128, i128)> = if a != 0 {
        // entries a and (ac - b^2) / a; signs only
        vec![(a, 1), (a * c - b * b, a)]
    } else if b != 0 {
        return Definiteness::IndefiniteOrOther;
    } else {
        vec![(0, 1), (c, 1)]
    };
    let signs: Vec<i128> = diag.iter().map(|&(p, q)| (p * q).signum()).collect();
    if signs.iter().all(|&s| s < 0) {
        Definiteness::NegDefinite
    } else if signs.iter().all(|&s| s <= 0) {
        Definiteness::NegSemidefinite
    } else {
        Definiteness::IndefiniteOrOther
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn pairing_is_bilinear(n in 2i64..=8, x in coords(), y in coords(), w in coords(), a in -20i64..=20, b in -20i64..=20) {
        let (x, y, w) = (vec_in(n, x), vec_in(n, y), vec_in(n, w));
        let lhs = pairing(&x.combine(a, &y, b).unwrap(), &w).unwrap();
        let rhs = a as i128 * pairing(&x, &w).unwrap() + b as i128 * pairing(&y, &w).unwrap();
        prop_assert_eq!(lhs, rhs);
        prop_assert_eq!(pairing(&x, &w).unwrap(), pairing(&w, &x).unwrap());
    }

    #[test]
    fn squares_are_even(n in 2i64..=12, x in coords()) {
        prop_assert_eq!(square(&vec_in(n, x)).unwrap() % 2, 0);
    }

    #[test]
    fn divisibility_divides_pairings(n in 2i64..=8, x in nonzero_coords(), y in coords()) {
        let (x, y) = (vec_in(n, x), vec_in(n, y));
        let d = divisibility(&x).unwrap();
        prop_assert_eq!(square(&x).unwrap() % d, 0);
        prop_assert_eq!(pairing(&x, &y).unwrap() % d, 0);
        prop_assert_eq!(pairing(&x, &LatVec::basis(x.lattice(), 0)).unwrap() % d, 0);
    }

    #[test]
    fn divisibility_and_residue_closed_form(
        n in 2i64..=8,
        tail in prop::collection::vec(-5i64..=5, 22),
        a in -40i64..=40,
        b in -40i64..=40,
    ) {
        let g = tail.iter().fold(0i64, |g, &x| g.gcd(&x));
        prop_assume!(g != 0 && a.gcd(&b) == 1);
        let mut c: Vec<i64> = tail.iter().map(|&x| x / g * a).collect();
        c.push(b);
        let z = vec_in(n, c);
        let t = 2 * (n as i128 - 1);
        let d = (a as i128).gcd(&(t * b as i128));
        prop_assert_eq!(divisibility(&z).unwrap(), d);
        prop_assert_eq!(disc_image(&z).unwrap(), DiscImage { residues: vec![(t * b as i128 / d).rem_euclid(t)] });
    }

    #[test]
    fn binary_forms_match_diagonalization(a in -30i128..=30, b in -30i128..=30, c in -30i128..=30) {
        prop_assert_eq!(classify_binary_form(a, b, c).unwrap(), diagonal_oracle(a, b, c));
    }

    #[test]
    fn reflections_are_isometric_involutions(
        n in 2i64..=6,
        tail in coords(),
        plus in any::<bool>(),
        x in coords(),
        y in coords(),
    ) {
        let u = class_of_square(n, tail, if plus { 2 } else { -2 });
        let (x, y) = (vec_in(n, x), vec_in(n, y));
        let (rx, ry) = (reflect(&u, &x).unwrap(), reflect(&u, &y).unwrap());
        prop_assert_eq!(pairing(&rx, &ry).unwrap(), pairing(&x, &y).unwrap());
        prop_assert_eq!(reflect(&u, &rx).unwrap(), x);
    }

    #[test]
    fn generator_words_keep_invariants(
        n in 2i64..=6,
        z in nonzero_coords(),
        word in prop::collection::vec((sparse_coords(), any::<bool>()), 1..=8),
    ) {
        let z = vec_in(n, z);
        prop_assume!(is_primitive(&z).unwrap());
        let group = discriminant_group(z.lattice()).unwrap();
        let start = orbit_invariant(&z).unwrap();
        let mut w = z.clone();
        let mut flips = 0;
        for (tail, anti) in word {
            w = reflect(&class_of_square(n, tail, if anti { 2 } else { -2 }), &w).unwrap();
            flips += usize::from(anti);
        }
        let end = orbit_invariant(&w).unwrap();
        prop_assert_eq!(end.square, start.square);
        prop_assert_eq!(end.divisibility, start.divisibility);
        let expected = if flips % 2 == 0 { start.disc_image.clone() } else { start.disc_image.negated(group) };
        prop_assert_eq!(&end.disc_image, &expected);
        prop_assert!(same_orbit_monodromy(&z, &w).unwrap());
    }

    #[test]
    fn representatives_are_sound(n in 2i64..=8, c in prop::collection::vec(-6i64..=6, 5)) {
        let lat = make_reduced_lambda_n(n).unwrap();
        let z = LatVec::new(&lat, c).unwrap();
        prop_assume!(!z.is_zero() && is_primitive(&z).unwrap());
        let inv = orbit_invariant(&z).unwrap();
        let rep = orbit_representative_in(&inv, &lat).unwrap();
        prop_assert_eq!(orbit_invariant(&rep.vector).unwrap(), inv.clone());
        prop_assert!(rep.b.abs() < n);

        let full = orbit_representative(&inv, n).unwrap();
        prop_assert_eq!(orbit_invariant(&full.vector).unwrap(), inv);
    }

    #[test]
    fn shifting_b_keeps_the_invariant(n in 2i64..=8, c in prop::collection::vec(-6i64..=6, 5), plus in any::<bool>()) {
        let lat = make_reduced_lambda_n(n).unwrap();
        let z = LatVec::new(&lat, c).unwrap();
        prop_assume!(!z.is_zero() && is_primitive(&z).unwrap());
        let inv = orbit_invariant(&z).unwrap();
        let rep = orbit_representative_in(&inv, &lat).unwrap();
        let shifted = shift_e_coefficient(&rep, if plus { 1 } else { -1 }).unwrap();
        prop_assert_eq!(shifted.b - rep.b, if plus { 2 * (n - 1) } else { -2 * (n - 1) });
        prop_assert_eq!(orbit_invariant(&shifted.vector).unwrap(), inv);
    }
}

#[test]
fn discriminant_group_orders() {
    for n in 2..=10 {
        let lat = lattice(n);
        assert_eq!(discriminant_group(&lat).unwrap().order, 2 * (n as i128 - 1));
    }
}

fn coefficient_box(r: usize, bound: i64) -> Vec<Vec<i64>> {
    let mut all = vec![vec![]];
    for _ in 0..r {
        all = all
            .into_iter()
            .flat_map(|c: Vec<i64>| {
                (-bound..=bound).map(move |x| {
                    let mut c = c.clone();
                    c.push(x);
                    c
                })
            })
            .collect();
    }
    all
}

fn combine(basis: &[LatVec], c: &[i64]) -> LatVec {
    basis.iter().zip(c).fold(LatVec::zero(basis[0].lattice()), |w, (b, &ci)| w.combine(1, b, ci).unwrap())
}

fn picard_bases() -> Vec<(i64, Vec<LatVec>)> {
    let mut out = Vec::new();
    for n in [2, 3] {
        let lat = lattice(n);
        let h = compact_vector(&lat, 1, 1, 0).unwrap();
        let e = LatVec::last_basis(&lat);
        let u = vec![LatVec::basis(&lat, 0), LatVec::basis(&lat, 1), e.clone()];
        let f = LatVec::basis(&lat, 2).combine(1, &LatVec::basis(&lat, 3), -1).unwrap();
        out.push((n, vec![h.clone(), e]));
        out.push((n, u));
        out.push((n, vec![h, f]));
    }
    out
}

#[test]
fn walls_come_in_sign_pairs() {
    for (n, basis) in picard_bases() {
        let bound = 4;
        let pairs: BTreeSet<(i128, i128)> =
            mbm_table(n).unwrap().iter().map(|t| (t.primitive_square, t.primitive_div)).collect();
        let qualifies = |c: &[i64]| {
            let w = combine(&basis, c);
            !w.is_zero()
                && is_primitive(&w).unwrap()
                && pairs.contains(&(square(&w).unwrap(), divisibility(&w).unwrap()))
        };
        let mut expected = Vec::new();
        for c in coefficient_box(basis.len(), bound) {
            let neg: Vec<i64> = c.iter().map(|x| -x).collect();
            assert_eq!(qualifies(&c), qualifies(&neg), "{c:?}");
            if qualifies(&c) && c.iter().find(|&&x| x != 0).is_some_and(|&x| x > 0) {
                expected.push(c);
            }
        }
        let walls = enumerate_walls(n, &basis, bound).unwrap();
        let got: Vec<Vec<i64>> = walls.walls.iter().map(|w| w.coefficients.clone()).collect();
        assert_eq!(got, expected);
    }
}

#[test]
fn chambers_form_an_equivalence() {
    let mut sampled = 0;
    for (n, basis) in picard_bases() {
        let walls = enumerate_walls(n, &basis, 3).unwrap();
        let positive: Vec<LatVec> = coefficient_box(basis.len(), 3)
            .into_iter()
            .map(|c| combine(&basis, &c))
            .filter(|h| square(h).unwrap() > 0 && walls.vectors().all(|w| pairing(h, w).unwrap() != 0))
            .collect();
        // one positive cone component
        let anchor = positive.iter().find(|h| pairing(h, &basis[0]).unwrap() > 0).cloned();
        let Some(anchor) = anchor else { continue };
        let cone: Vec<&LatVec> =
            positive.iter().filter(|h| pairing(h, &anchor).unwrap() > 0).take(40).collect();
        sampled += cone.len();
        for a in &cone {
            assert!(same_chamber(a, a, &walls).unwrap());
            for b in &cone {
                let ab = same_chamber(a, b, &walls).unwrap();
                assert_eq!(ab, same_chamber(b, a, &walls).unwrap());
                for c in &cone {
                    if pairing(a, c).unwrap() > 0 && ab && same_chamber(b, c, &walls).unwrap() {
                        assert!(same_chamber(a, c, &walls).unwrap());
                    }
                }
            }
        }
    }
    assert!(sampled > 0);
}

#[test]
fn walls_commute_with_reflection_in_e() {
    for (n, basis) in picard_bases() {
        let e = LatVec::last_basis(basis[0].lattice());
        // x - 2 q(x,e)/q(e) e is integral since q(e) divides 2 div(e)
        let qe = i64::try_from(square(&e).unwrap()).unwrap();
        let rho = |x: &LatVec| {
            let k = i64::try_from(pairing(x, &e).unwrap()).unwrap();
            assert_eq!(2 * k % qe, 0);
            x.combine(1, &e, -2 * k / qe).unwrap()
        };
        let reflected: Vec<LatVec> = basis.iter().map(rho).collect();
        let direct: BTreeSet<Vec<i64>> = enumerate_walls(n, &basis, 4)
            .unwrap()
            .walls
            .iter()
            .map(|w| rho(&w.vector).coords().to_vec())
            .collect();
        let after: BTreeSet<Vec<i64>> = enumerate_walls(n, &reflected, 4)
            .unwrap()
            .walls
            .iter()
            .map(|w| w.vector.coords().to_vec())
            .collect();
        assert_eq!(direct, after);
    }
}

#[test]
fn failing_invariants_only_grow_with_bound() {
    let mut previous: Vec<OrbitInvariant> = Vec::new();
    for bound in [4, 5, 6] {
        let failing = analyze_boundary(6, bound, 4).unwrap().failing;
        assert!(previous.iter().all(|p| failing.contains(p)), "bound {bound}");
        previous = failing;
    }
    for k in [2, 5] {
        assert!(analyze_boundary(k, 4, 4).unwrap().failing.is_empty());
    }
}
