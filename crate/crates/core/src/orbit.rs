//! Monodromy generators and orbit invariants.
//!
//! Orbits of primitive vectors under the stable orthogonal group are decided
//! by the triple (square, divisibility, discriminant image); the monodromy
//! group agrees with the stable group up to `-1`. Reflection words are only
//! used as a consistency check.

use std::sync::Arc;

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::error::{LatticeError, Result};
use crate::lattice::{
    disc_image, discriminant_group, divisibility, is_primitive, make_lambda_n, pairing, square,
    DiscImage, LatVec, LatVecJson, LatticeSpec,
};

/// Classifying data of a stable-orthogonal-group orbit.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct OrbitInvariant {
    pub square: i128,
    #[serde(rename = "div")]
    pub divisibility: i128,
    #[serde(rename = "delta")]
    pub disc_image: DiscImage,
}

pub fn orbit_invariant(z: &LatVec) -> Result<OrbitInvariant> {
    if !is_primitive(z)? {
        return Err(LatticeError::NotPrimitive(z.content()));
    }
    Ok(OrbitInvariant {
        square: square(z)?,
        divisibility: divisibility(z)?,
        disc_image: disc_image(z)?,
    })
}

fn require_eligible(lat: &LatticeSpec) -> Result<()> {
    if lat.eichler_eligible() {
        Ok(())
    } else {
        Err(LatticeError::NotEligible(lat.name().to_owned()))
    }
}

/// Same orbit under the stable orthogonal group.
pub fn same_orbit_stable(z1: &LatVec, z2: &LatVec) -> Result<bool> {
    // rejects mismatched lattices before comparing invariants
    pairing(z1, z2)?;
    require_eligible(z1.lattice())?;
    Ok(orbit_invariant(z1)? == orbit_invariant(z2)?)
}

/// Same orbit under the monodromy group, i.e. the stable group up to sign.
pub fn same_orbit_monodromy(z1: &LatVec, z2: &LatVec) -> Result<bool> {
    Ok(same_orbit_stable(z1, z2)? || same_orbit_stable(z1, &-z2)?)
}

/// `x -> -2x/q(u) + q(x,u) u` for `q(u) = -2` (reflection) or `q(u) = 2`
/// (antireflection).
pub fn reflect(u: &LatVec, x: &LatVec) -> Result<LatVec> {
    let qu = square(u)?;
    let sign = match qu {
        -2 => 1,
        2 => -1,
        other => return Err(LatticeError::InvalidRoot(other)),
    };
    let k = i64::try_from(pairing(x, u)?).map_err(|_| LatticeError::Overflow)?;
    x.combine(sign, u, k)
}

/// A vector `a (1, m) + b e` with `(1, m)` in the first hyperbolic plane.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrbitRep {
    pub vector: LatVec,
    pub a: i64,
    pub b: i64,
    pub m: i64,
}

#[derive(Serialize, Deserialize)]
pub struct OrbitRepJson {
    pub vector: LatVecJson,
    pub a: i64,
    pub b: i64,
    pub m: i64,
}

impl OrbitRep {
    pub fn to_json(&self) -> OrbitRepJson {
        OrbitRepJson { vector: self.vector.to_json(), a: self.a, b: self.b, m: self.m }
    }
}

/// Builds `a (1, m) + b e` in a lattice with the K3^[n] layout.
pub fn compact_vector(lattice: &Arc<LatticeSpec>, a: i64, m: i64, b: i64) -> Result<LatVec> {
    if lattice.bbf_n().is_none() {
        return Err(LatticeError::NotBbfLayout(lattice.name().to_owned()));
    }
    let mut coords = vec![0i64; lattice.rank()];
    coords[0] = a;
    coords[1] = a.checked_mul(m).ok_or(LatticeError::Overflow)?;
    coords[lattice.rank() - 1] = b;
    LatVec::new(lattice, coords)
}

/// Canonical representative of an orbit in the full rank 23 lattice.
pub fn orbit_representative(inv: &OrbitInvariant, n: i64) -> Result<OrbitRep> {
    orbit_representative_in(inv, &make_lambda_n(n)?)
}

/// Canonical representative `d (1, m) + b e` with `|b| <= n - 1`, trying `b`
/// in the order `0, -1, 1, -2, 2, ...`.
///
/// Taking `a = d` is enough: any realization `a' x + b' e` has
/// `d | a'` and `2 d^2 | q + t b'^2`, and shifting `b'` by `t` keeps both.
/// The first hit has the smallest `|b|`, hence the most negative `m`.
pub fn orbit_representative_in(inv: &OrbitInvariant, lattice: &Arc<LatticeSpec>) -> Result<OrbitRep> {
    let n = lattice
        .bbf_n()
        .ok_or_else(|| LatticeError::NotBbfLayout(lattice.name().to_owned()))?;
    let not_realizable = |why: &str| {
        LatticeError::NotRealizable(format!(
            "(square {}, div {}, delta {:?}) in n={n}: {why}",
            inv.square, inv.divisibility, inv.disc_image.residues
        ))
    };
    let t = 2 * (n as i128 - 1);
    let d = inv.divisibility;
    let q = inv.square;
    let factors = &discriminant_group(lattice)?.cyclic_factors;
    if inv.disc_image.residues.len() != factors.len() {
        return Err(not_realizable("wrong number of residues"));
    }
    let r = inv.disc_image.residues[0];
    if q % 2 != 0 {
        return Err(not_realizable("odd square"));
    }
    if d < 1 || t % d != 0 {
        return Err(not_realizable("divisibility must divide 2(n-1)"));
    }
    if !(0..t).contains(&r) {
        return Err(not_realizable("residue out of range"));
    }
    let two_d2 = 2 * d * d;
    let window = std::iter::once(0).chain((1..n).flat_map(|k| [-k, k]));
    for b in window {
        let b128 = b as i128;
        if d.gcd(&b128) != 1 || (t * b128 / d).rem_euclid(t) != r {
            continue;
        }
        let num = q + t * b128 * b128;
        if num % two_d2 != 0 {
            continue;
        }
        let m = i64::try_from(num / two_d2).map_err(|_| LatticeError::Overflow)?;
        let a = i64::try_from(d).map_err(|_| LatticeError::Overflow)?;
        let vector = compact_vector(lattice, a, m, b)?;
        if orbit_invariant(&vector)? == *inv {
            return Ok(OrbitRep { vector, a, b, m });
        }
    }
    Err(not_realizable("no representative with |b| <= n-1"))
}
