//! Numerical MBM class types for K3^[2] and K3^[3], curve classes coming
//! from pencils on curves, and bounded wall enumeration in small Picard
//! lattices.

use std::sync::Arc;

use num_rational::Ratio;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{LatticeError, Result};
use crate::lattice::{
    divisibility, is_primitive, pairing, signature, square, LatVec, LatVecJson, LatticeSpec,
};

pub type Rational = Ratio<i128>;

fn serialize_rational<S: Serializer>(r: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&r.to_string())
}

/// One row of an MBM type table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MbmType {
    #[serde(skip)]
    pub n: i64,
    pub tag: char,
    #[serde(serialize_with = "serialize_rational")]
    pub curve_square: Rational,
    /// Smallest `D` with `D * alpha` integral.
    pub denominator: i128,
    /// Square of `D * alpha`.
    pub primitive_square: i128,
    pub primitive_div: i128,
    #[serde(rename = "locus")]
    pub locus_label: &'static str,
}

/// (tag, curve square numerator, denominator of the square, D, locus)
type RawRow = (char, i128, i128, i128, &'static str);

const K3_2_ROWS: [RawRow; 3] = [
    ('a', -5, 2, 2, "Z ≅ P²"),
    ('b', -2, 1, 1, "Z is a P¹-bundle over a K3 surface"),
    ('c', -1, 2, 2, "Z is a P¹-bundle over a K3 surface"),
];

const K3_3_ROWS: [RawRow; 5] = [
    ('a', -3, 1, 2, "Z ≅ P³"),
    ('b', -9, 4, 4, "Z is birationally a P²-bundle over a K3 surface"),
    ('c', -2, 1, 1, "Z is birationally a P¹-bundle over the Hilbert square of a K3 surface"),
    ('d', -1, 4, 4, "Z is birationally a P¹-bundle over a product of two K3 surfaces"),
    ('e', -1, 1, 2, "Z is birationally a P¹-bundle over a product of two K3 surfaces"),
];

fn build_row(n: i64, &(tag, num, den, denominator, locus): &RawRow) -> MbmType {
    let curve_square = Ratio::new(num, den);
    // alpha = z / d(z) with z primitive, so q(z) = q(alpha) d^2 must be even
    let scaled = curve_square * Ratio::from_integer(denominator * denominator);
    assert!(scaled.is_integer(), "row {n}{tag}: D^2 q(alpha) is not integral");
    let primitive_square = scaled.to_integer();
    assert!(primitive_square % 2 == 0, "row {n}{tag}: odd primitive square");
    assert!((2 * (n as i128 - 1)) % denominator == 0, "row {n}{tag}: D does not divide 2(n-1)");
    MbmType {
        n,
        tag,
        curve_square,
        denominator,
        primitive_square,
        primitive_div: denominator,
        locus_label: locus,
    }
}

/// The MBM type table for `n = 2` (three types) or `n = 3` (five types).
pub fn mbm_table(n: i64) -> Result<Vec<MbmType>> {
    let rows: &[RawRow] = match n {
        2 => &K3_2_ROWS,
        3 => &K3_3_ROWS,
        _ => return Err(LatticeError::UnsupportedN(n)),
    };
    Ok(rows.iter().map(|r| build_row(n, r)).collect())
}

/// A rational class `primitive_part / denominator`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CurveClass {
    pub primitive_part: LatVec,
    pub denominator: i128,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CurveClassJson {
    pub primitive_part: LatVecJson,
    pub denominator: i128,
}

impl CurveClass {
    pub fn new(primitive_part: LatVec, denominator: i128) -> Result<Self> {
        if denominator < 1 {
            return Err(LatticeError::InvalidArgument(format!("denominator {denominator}")));
        }
        Ok(CurveClass { primitive_part, denominator })
    }

    pub fn square(&self) -> Result<Rational> {
        Ok(Ratio::new(square(&self.primitive_part)?, self.denominator * self.denominator))
    }

    pub fn to_json(&self) -> CurveClassJson {
        CurveClassJson { primitive_part: self.primitive_part.to_json(), denominator: self.denominator }
    }

    pub fn from_json(json: &CurveClassJson, lattice: &Arc<LatticeSpec>) -> Result<Self> {
        CurveClass::new(LatVec::from_json(&json.primitive_part, lattice)?, json.denominator)
    }
}

fn require_n(lattice: &LatticeSpec, n: i64) -> Result<()> {
    match lattice.bbf_n() {
        Some(m) if m == n => Ok(()),
        _ => Err(LatticeError::NotBbfLayout(lattice.name().to_owned())),
    }
}

/// Matches a negative class against the numerical table for `n`. Only the
/// numerical type is decided, not extremality in a given complex structure.
pub fn classify_curve_class(n: i64, alpha: &CurveClass) -> Result<Option<MbmType>> {
    let table = mbm_table(n)?;
    let z = &alpha.primitive_part;
    require_n(z.lattice(), n)?;
    if !is_primitive(z)? {
        return Err(LatticeError::NotPrimitive(z.content()));
    }
    let q = alpha.square()?;
    if q >= Ratio::from_integer(0) {
        return Err(LatticeError::NonNegativeClass(q.to_string()));
    }
    let primitive_square = square(z)?;
    let div = divisibility(z)?;
    Ok(table.into_iter().find(|row| {
        row.curve_square == q
            && row.denominator == alpha.denominator
            && row.primitive_square == primitive_square
            && row.primitive_div == div
    }))
}

/// The class `C - (g + k - 1) / (2(n - 1)) e` of a rational curve swept by a
/// `g^1_k` on a curve of genus `g` with class `C`.
pub fn curve_from_linear_system(n: i64, g: u32, k: u32, fiber_class: &LatVec) -> Result<CurveClass> {
    let lattice = fiber_class.lattice();
    require_n(lattice, n)?;
    if k == 0 {
        return Err(LatticeError::InvalidArgument("k must be positive".into()));
    }
    let e_index = lattice.rank() - 1;
    if fiber_class.coords()[e_index] != 0 {
        return Err(LatticeError::NotInUnimodularPart);
    }
    let coefficient = Ratio::new(g as i128 + k as i128 - 1, 2 * (n as i128 - 1));
    let den = i64::try_from(*coefficient.denom()).map_err(|_| LatticeError::Overflow)?;
    let num = i64::try_from(*coefficient.numer()).map_err(|_| LatticeError::Overflow)?;
    let part = fiber_class.combine(den, &LatVec::last_basis(lattice), -num)?;
    CurveClass::new(part, den as i128)
}

/// A wall class found by [`enumerate_walls`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Wall {
    pub vector: LatVec,
    /// Coefficients with respect to the Picard basis; first nonzero is positive.
    pub coefficients: Vec<i64>,
    pub tag: char,
}

/// Walls of MBM numerical type among bounded combinations of a basis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WallSet {
    pub n: i64,
    pub picard_basis: Vec<LatVec>,
    pub bound: i64,
    pub walls: Vec<Wall>,
}

#[derive(Serialize)]
struct WallJson {
    vector: LatVecJson,
    coefficients: Vec<i64>,
    tag: char,
}

#[derive(Serialize)]
struct WallSetJson {
    n: i64,
    bound: i64,
    basis: Vec<LatVecJson>,
    walls: Vec<WallJson>,
}

impl Serialize for WallSet {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        WallSetJson {
            n: self.n,
            bound: self.bound,
            basis: self.picard_basis.iter().map(LatVec::to_json).collect(),
            walls: self
                .walls
                .iter()
                .map(|w| WallJson {
                    vector: w.vector.to_json(),
                    coefficients: w.coefficients.clone(),
                    tag: w.tag,
                })
                .collect(),
        }
        .serialize(s)
    }
}

impl WallSet {
    pub fn vectors(&self) -> impl Iterator<Item = &LatVec> {
        self.walls.iter().map(|w| &w.vector)
    }
}

fn next_tuple(c: &mut [i64], bound: i64) -> bool {
    for v in c.iter_mut().rev() {
        if *v < bound {
            *v += 1;
            return true;
        }
        *v = -bound;
    }
    false
}

/// Enumerates primitive `w = sum c_i b_i` with `|c_i| <= bound` whose
/// `(square, divisibility)` matches a table row for `n`, one per sign, in
/// lexicographic order of coefficients.
///
/// The span of `picard_basis` must be hyperbolic of rank at most 3.
pub fn enumerate_walls(n: i64, picard_basis: &[LatVec], bound: i64) -> Result<WallSet> {
    let table = mbm_table(n)?;
    let Some(first) = picard_basis.first() else {
        return Err(LatticeError::InvalidArgument("empty Picard basis".into()));
    };
    let r = picard_basis.len();
    if r > 3 {
        return Err(LatticeError::InvalidArgument(format!("Picard rank {r} > 3")));
    }
    if bound < 1 {
        return Err(LatticeError::InvalidArgument(format!("bound {bound}")));
    }
    let lattice = first.lattice();
    require_n(lattice, n)?;
    let mut gram = vec![vec![0i128; r]; r];
    for i in 0..r {
        for j in 0..r {
            gram[i][j] = pairing(&picard_basis[i], &picard_basis[j])?;
        }
    }
    let (pos, neg, zero) = signature(&gram)?;
    if pos != 1 || zero != 0 {
        return Err(LatticeError::NotHyperbolic { pos, neg, zero });
    }

    let mut walls = Vec::new();
    let mut c = vec![-bound; r];
    loop {
        if c.iter().find(|&&v| v != 0).is_some_and(|&v| v > 0) {
            let mut w = LatVec::zero(lattice);
            for (b, &ci) in picard_basis.iter().zip(&c) {
                w = w.combine(1, b, ci)?;
            }
            if w.content() == 1 {
                let q = square(&w)?;
                let d = divisibility(&w)?;
                if let Some(row) =
                    table.iter().find(|row| row.primitive_square == q && row.primitive_div == d)
                {
                    walls.push(Wall { vector: w, coefficients: c.clone(), tag: row.tag });
                }
            }
        }
        if !next_tuple(&mut c, bound) {
            break;
        }
    }
    Ok(WallSet { n, picard_basis: picard_basis.to_vec(), bound, walls })
}

/// Whether `h1` and `h2` lie on the same side of every wall in `walls`.
/// Only meaningful relative to the supplied finite wall set.
pub fn same_chamber(h1: &LatVec, h2: &LatVec, walls: &WallSet) -> Result<bool> {
    if square(h1)? <= 0 || square(h2)? <= 0 || pairing(h1, h2)? <= 0 {
        return Err(LatticeError::NotPositive);
    }
    let mut same = true;
    for w in walls.vectors() {
        let p1 = pairing(h1, w)?;
        let p2 = pairing(h2, w)?;
        if p1 == 0 || p2 == 0 {
            return Err(LatticeError::OnWall(format!("{:?}", w.coords())));
        }
        same &= p1.signum() == p2.signum();
    }
    Ok(same)
}
