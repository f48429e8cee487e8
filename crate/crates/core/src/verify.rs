//! Bounded verification that every primitive negative class has a
//! monodromy conjugate spanning a negative (semi)definite lattice with `e`.
//!
//! Enumeration runs over the box `|c_i| <= bound` in `U + U + <e>`, which
//! carries every orbit invariant of the full lattice with small square. Each
//! vector is decided twice: by the constructive orbit representative, and by
//! a brute-force search of the box and its square fibres for a vector with
//! equal invariants. The two verdicts are compared and any disagreement is
//! reported.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{LatticeError, Result};
use crate::lattice::{
    make_reduced_lambda_n, pairing, rank2_definiteness, square, Definiteness, LatVec, LatVecJson,
    LatticeSpec,
};
use crate::orbit::{
    compact_vector, orbit_invariant, orbit_representative_in, same_orbit_stable, OrbitInvariant,
    OrbitRep,
};

pub const SUBLATTICE_LABEL: &str = "U+U+<e>";
pub const DEFAULT_BOUND: i64 = 6;
const RANK: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Failure {
    pub vector: LatVec,
    pub invariant: OrbitInvariant,
    pub reason: String,
}

/// A vector on which the constructive and brute-force verdicts differ.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Disagreement {
    pub vector: LatVec,
    pub invariant: OrbitInvariant,
    pub constructive: bool,
    pub brute_force: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CongruenceViolation {
    pub coords: Vec<i64>,
    pub square: i128,
    pub rule: &'static str,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerifyReport {
    pub k: i64,
    pub bound: i64,
    pub sublattice: String,
    pub checked: u64,
    pub passed: u64,
    pub failures: Vec<Failure>,
    pub runtime_ms: u64,
    /// Vectors whose constructive conjugate is negative definite.
    pub definite: u64,
    /// Vectors in the orbit of `e`.
    pub e_orbit: u64,
    pub oracle_disagreements: Vec<Disagreement>,
    pub congruence_violations: Vec<CongruenceViolation>,
    /// Vectors on which the congruence rules were evaluated.
    pub congruence_checked: u64,
}

impl VerifyReport {
    /// Distinct failing invariants, sorted.
    pub fn failing_invariants(&self) -> Vec<OrbitInvariant> {
        self.failures
            .iter()
            .map(|f| f.invariant.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }
}

#[derive(Serialize)]
struct FailureJson<'a> {
    vector: LatVecJson,
    invariant: &'a OrbitInvariant,
    reason: &'a str,
}

#[derive(Serialize)]
struct DisagreementJson<'a> {
    vector: LatVecJson,
    invariant: &'a OrbitInvariant,
    constructive: bool,
    brute_force: bool,
}

#[derive(Serialize)]
struct VerifyReportJson<'a> {
    k: i64,
    bound: i64,
    sublattice: &'a str,
    checked: u64,
    passed: u64,
    failures: Vec<FailureJson<'a>>,
    runtime_ms: u64,
    definite: u64,
    e_orbit: u64,
    oracle_disagreements: Vec<DisagreementJson<'a>>,
    congruence_checked: u64,
    congruence_violations: &'a [CongruenceViolation],
}

impl Serialize for VerifyReport {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        VerifyReportJson {
            k: self.k,
            bound: self.bound,
            sublattice: &self.sublattice,
            checked: self.checked,
            passed: self.passed,
            failures: self
                .failures
                .iter()
                .map(|f| FailureJson {
                    vector: f.vector.to_json(),
                    invariant: &f.invariant,
                    reason: &f.reason,
                })
                .collect(),
            runtime_ms: self.runtime_ms,
            definite: self.definite,
            e_orbit: self.e_orbit,
            oracle_disagreements: self
                .oracle_disagreements
                .iter()
                .map(|d| DisagreementJson {
                    vector: d.vector.to_json(),
                    invariant: &d.invariant,
                    constructive: d.constructive,
                    brute_force: d.brute_force,
                })
                .collect(),
            congruence_checked: self.congruence_checked,
            congruence_violations: &self.congruence_violations,
        }
        .serialize(s)
    }
}

/// Whether a conjugate of the given type satisfies the statement for `k`.
fn accepts(k: i64, class: Definiteness, in_e_orbit: bool) -> bool {
    if k == 2 {
        in_e_orbit || class == Definiteness::NegDefinite
    } else {
        class.is_nonpositive()
    }
}

fn gcd(a: i64, b: i64) -> i64 {
    num_integer::Integer::gcd(&a, &b)
}

/// Calls `f` on every primitive vector of negative square whose first
/// coordinate is `head`, in lexicographic order.
fn for_each_in_slice<F>(lattice: &Arc<LatticeSpec>, bound: i64, head: i64, mut f: F) -> Result<()>
where
    F: FnMut(LatVec) -> Result<()>,
{
    let mut c = [head, -bound, -bound, -bound, -bound];
    loop {
        let g = c[1..].iter().fold(c[0], |g, &x| gcd(g, x));
        if g == 1 {
            let z = LatVec::new(lattice, c.to_vec())?;
            if square(&z)? < 0 {
                f(z)?;
            }
        }
        let mut i = RANK - 1;
        loop {
            if c[i] < bound {
                c[i] += 1;
                break;
            }
            c[i] = -bound;
            i -= 1;
            if i == 0 {
                return Ok(());
            }
        }
    }
}

fn run_slices<T, F>(pool: &rayon::ThreadPool, bound: i64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(i64) -> Result<T> + Sync,
{
    pool.install(|| (-bound..=bound).into_par_iter().map(&f).collect())
}

type OracleIndex = HashMap<OrbitInvariant, Definiteness>;

fn raise(index: &mut OracleIndex, inv: OrbitInvariant, class: Definiteness) {
    let slot = index.entry(inv).or_insert(class);
    *slot = (*slot).max(class);
}

/// Best span type with `e` over a search region, for every invariant met in
/// the box.
///
/// The region is the box together with its square fibres: vectors
/// `(x1, x2, x3, x4, b)` with `|x3|, |x4|, |b| <= bound`, `0 < |x1| <= max(bound, t)`
/// and `x2` solved so that the square is one already seen in the box. A box
/// alone misses conjugates with a long first hyperbolic component.
fn brute_force_index(
    pool: &rayon::ThreadPool,
    lattice: &Arc<LatticeSpec>,
    e: &LatVec,
    bound: i64,
) -> Result<OracleIndex> {
    let parts = run_slices(pool, bound, |head| {
        let mut best = OracleIndex::new();
        for_each_in_slice(lattice, bound, head, |z| {
            raise(&mut best, orbit_invariant(&z)?, rank2_definiteness(&z, e)?);
            Ok(())
        })?;
        Ok(best)
    })?;
    let mut merged = OracleIndex::new();
    for part in parts {
        for (inv, class) in part {
            raise(&mut merged, inv, class);
        }
    }

    let t = -lattice.entry(RANK - 1, RANK - 1);
    let squares: BTreeSet<i128> = merged.keys().map(|inv| inv.square).collect();
    let reach = bound.max(t);
    let heads: Vec<i64> = (-reach..=reach).filter(|&x| x != 0).collect();
    let fibres: Vec<OracleIndex> = pool.install(|| {
        heads
            .par_iter()
            .map(|&x1| -> Result<OracleIndex> {
                let mut best = OracleIndex::new();
                for x3 in -bound..=bound {
                    for x4 in -bound..=bound {
                        for b in -bound..=bound {
                            let rest = 2 * x3 as i128 * x4 as i128 - t as i128 * (b as i128).pow(2);
                            for &q in &squares {
                                let num = q - rest;
                                if num % (2 * x1 as i128) != 0 {
                                    continue;
                                }
                                let x2 = i64::try_from(num / (2 * x1 as i128))
                                    .map_err(|_| LatticeError::Overflow)?;
                                if [x2, x3, x4, b].iter().fold(x1, |g, &x| gcd(g, x)) != 1 {
                                    continue;
                                }
                                let z = LatVec::new(lattice, vec![x1, x2, x3, x4, b])?;
                                let inv = orbit_invariant(&z)?;
                                if merged.contains_key(&inv) {
                                    raise(&mut best, inv, rank2_definiteness(&z, e)?);
                                }
                            }
                        }
                    }
                }
                Ok(best)
            })
            .collect::<Result<Vec<_>>>()
    })?;
    for part in fibres {
        for (inv, class) in part {
            raise(&mut merged, inv, class);
        }
    }
    Ok(merged)
}

#[derive(Clone)]
struct Constructive {
    class: std::result::Result<Definiteness, String>,
}

/// `conjugate_of_e` is membership in the monodromy orbit of `e`.
fn congruence_rule(k: i64, inv: &OrbitInvariant, conjugate_of_e: bool) -> Option<(bool, &'static str)> {
    let q = inv.square;
    let r = inv.disc_image.residues.first().copied().unwrap_or(0);
    match k {
        2 if inv.divisibility == 2 && r != 0 => {
            Some(((q + 2).rem_euclid(8) == 0, "k=2, div 2, delta != 0: square = -2 mod 8"))
        }
        3 if r == 1 || r == 3 => {
            let ok = (q + 4).rem_euclid(16) == 0 && (conjugate_of_e || q <= -20);
            Some((ok, "k=3, delta = +-1/4: square = -4 mod 16, and <= -20 off the orbit of e"))
        }
        _ => None,
    }
}

#[derive(Default)]
struct Partial {
    checked: u64,
    passed: u64,
    definite: u64,
    e_orbit: u64,
    failures: Vec<Failure>,
    disagreements: Vec<Disagreement>,
    congruence_checked: u64,
    congruence_violations: Vec<CongruenceViolation>,
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| LatticeError::InvalidArgument(e.to_string()))
}

pub fn verify_main_theorem(k: i64, bound: i64) -> Result<VerifyReport> {
    verify_main_theorem_with(k, bound, 1)
}

/// As [`verify_main_theorem`], sharding the box over `workers` threads. The
/// report does not depend on `workers` except for `runtime_ms`.
pub fn verify_main_theorem_with(k: i64, bound: i64, workers: usize) -> Result<VerifyReport> {
    if k < 2 {
        return Err(LatticeError::InvalidN(k));
    }
    if bound < 3 {
        return Err(LatticeError::InvalidArgument(format!("bound must be at least 3, got {bound}")));
    }
    let start = Instant::now();
    let pool = pool(workers)?;
    let lattice = make_reduced_lambda_n(k)?;
    let e = LatVec::last_basis(&lattice);

    let oracle = brute_force_index(&pool, &lattice, &e, bound)?;

    // the constructive verdict depends only on the invariant
    let mut constructive: BTreeMap<&OrbitInvariant, Constructive> = BTreeMap::new();
    for inv in oracle.keys() {
        let class = match orbit_representative_in(inv, &lattice) {
            Ok(rep) => Ok(rank2_definiteness(&rep.vector, &e)?),
            Err(err @ LatticeError::NotRealizable(_)) => Err(err.to_string()),
            Err(err) => return Err(err),
        };
        constructive.insert(inv, Constructive { class });
    }

    let parts = run_slices(&pool, bound, |head| {
        let mut p = Partial::default();
        for_each_in_slice(&lattice, bound, head, |z| {
            let inv = orbit_invariant(&z)?;
            let in_e_orbit = same_orbit_stable(&z, &e)?;
            p.checked += 1;
            p.e_orbit += u64::from(in_e_orbit);

            let conjugate_of_e = in_e_orbit || same_orbit_stable(&-&z, &e)?;
            if let Some((ok, rule)) = congruence_rule(k, &inv, conjugate_of_e) {
                p.congruence_checked += 1;
                if !ok {
                    p.congruence_violations.push(CongruenceViolation {
                        coords: z.coords().to_vec(),
                        square: inv.square,
                        rule,
                    });
                }
            }

            let cons = &constructive[&inv];
            let brute_pass = accepts(k, oracle[&inv], in_e_orbit);
            let (cons_pass, reason) = match &cons.class {
                Ok(class) => {
                    p.definite += u64::from(*class == Definiteness::NegDefinite);
                    let reason = if k == 2 {
                        "no conjugate spans a negative definite lattice with e"
                    } else {
                        "no conjugate spans a negative semidefinite lattice with e"
                    };
                    (accepts(k, *class, in_e_orbit), reason.to_owned())
                }
                Err(msg) => (false, msg.clone()),
            };
            if cons_pass != brute_pass {
                p.disagreements.push(Disagreement {
                    vector: z.clone(),
                    invariant: inv.clone(),
                    constructive: cons_pass,
                    brute_force: brute_pass,
                });
            }
            if cons_pass {
                p.passed += 1;
            } else {
                p.failures.push(Failure { vector: z, invariant: inv, reason });
            }
            Ok(())
        })?;
        Ok(p)
    })?;

    let mut report = VerifyReport {
        k,
        bound,
        sublattice: SUBLATTICE_LABEL.to_owned(),
        checked: 0,
        passed: 0,
        failures: Vec::new(),
        runtime_ms: 0,
        definite: 0,
        e_orbit: 0,
        oracle_disagreements: Vec::new(),
        congruence_violations: Vec::new(),
        congruence_checked: 0,
    };
    for p in parts {
        report.checked += p.checked;
        report.passed += p.passed;
        report.definite += p.definite;
        report.e_orbit += p.e_orbit;
        report.failures.extend(p.failures);
        report.oracle_disagreements.extend(p.disagreements);
        report.congruence_checked += p.congruence_checked;
        report.congruence_violations.extend(p.congruence_violations);
    }
    report.runtime_ms = start.elapsed().as_millis() as u64;
    Ok(report)
}

/// Failing orbits found by the verifier and a check of each witness.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BoundaryReport {
    pub k: i64,
    pub bound: i64,
    pub failing: Vec<OrbitInvariant>,
    /// Box vectors lying in a failing orbit.
    pub witnesses: u64,
    /// Largest `det <z', e>` over the witnesses.
    pub max_witness_det: Option<i128>,
    /// Witnesses with `q(z', e)` zero or not a multiple of `2(k-1)`, or with
    /// nonnegative determinant.
    pub witness_violations: Vec<Vec<i64>>,
}

pub fn analyze_boundary(k: i64, bound: i64, workers: usize) -> Result<BoundaryReport> {
    if bound < 4 {
        return Err(LatticeError::InvalidArgument(format!("bound must be at least 4, got {bound}")));
    }
    let report = verify_main_theorem_with(k, bound, workers)?;
    let t = 2 * (k as i128 - 1);
    let mut max_det: Option<i128> = None;
    let mut violations = Vec::new();
    for f in &report.failures {
        let e = LatVec::last_basis(f.vector.lattice());
        let qe = pairing(&f.vector, &e)?;
        let det = square(&f.vector)? * square(&e)? - qe * qe;
        max_det = Some(max_det.map_or(det, |m| m.max(det)));
        if qe == 0 || qe % t != 0 || det >= 0 {
            violations.push(f.vector.coords().to_vec());
        }
    }
    Ok(BoundaryReport {
        k,
        bound,
        failing: report.failing_invariants(),
        witnesses: report.failures.len() as u64,
        max_witness_det: max_det,
        witness_violations: violations,
    })
}

/// Failing orbit invariants for `k = 6`.
pub fn analyze_k6_boundary(bound: i64) -> Result<BoundaryReport> {
    analyze_boundary(6, bound, 1)
}

/// Moves `a (1, m) + b e` to `a (1, m') + (b + sign * t) e` with the same
/// square, where `t = 2(n - 1)`. Needs `2 a^2 | t^2 (t + 2 sign b)`, which
/// holds whenever `a` divides `t`.
pub fn shift_e_coefficient(rep: &OrbitRep, sign: i64) -> Result<OrbitRep> {
    let lattice = rep.vector.lattice();
    let n = lattice
        .bbf_n()
        .ok_or_else(|| LatticeError::NotBbfLayout(lattice.name().to_owned()))?;
    let t = 2 * (n as i128 - 1);
    let (a, b, m) = (rep.a as i128, rep.b as i128, rep.m as i128);
    let num = t * t * (t + 2 * sign.signum() as i128 * b);
    let den = 2 * a * a;
    if a == 0 || num % den != 0 {
        return Err(LatticeError::InvalidArgument(format!(
            "cannot shift b for a = {a}, b = {b}, t = {t}"
        )));
    }
    let m2 = i64::try_from(m + num / den).map_err(|_| LatticeError::Overflow)?;
    let b2 = i64::try_from(b + sign.signum() as i128 * t).map_err(|_| LatticeError::Overflow)?;
    Ok(OrbitRep { vector: compact_vector(lattice, rep.a, m2, b2)?, a: rep.a, b: b2, m: m2 })
}
