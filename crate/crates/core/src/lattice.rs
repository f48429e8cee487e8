//! Exact arithmetic in even integral lattices.
//!
//! A [`LatticeSpec`] is a symmetric even Gram matrix together with a label;
//! a [`LatVec`] is an integer coordinate vector in its basis. The BBF lattice
//! of a K3^[n]-type manifold is built by [`make_lambda_n`] in the basis order
//! `U, U, U, E8(-1), E8(-1), e`, so `e` is always the last coordinate.

use std::fmt;
use std::sync::{Arc, OnceLock};

use num_integer::Integer;
use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{LatticeError, Result};
use crate::snf::smith_normal_form;

/// Edges of the E8 Dynkin diagram (Bourbaki numbering, zero based).
const E8_EDGES: [(usize, usize); 7] = [(0, 2), (2, 3), (3, 4), (4, 5), (5, 6), (6, 7), (1, 3)];

pub(crate) fn checked_add(a: i128, b: i128) -> Result<i128> {
    a.checked_add(b).ok_or(LatticeError::Overflow)
}

pub(crate) fn checked_mul(a: i128, b: i128) -> Result<i128> {
    a.checked_mul(b).ok_or(LatticeError::Overflow)
}

/// A finitely generated even integral lattice given by its Gram matrix.
#[derive(Clone, Serialize, Deserialize)]
#[serde(try_from = "LatticeSpecJson", into = "LatticeSpecJson")]
pub struct LatticeSpec {
    name: String,
    rank: usize,
    gram: Vec<i64>,
    eichler_eligible: bool,
    disc: OnceLock<std::result::Result<DiscGroup, LatticeError>>,
}

#[derive(Serialize, Deserialize)]
struct LatticeSpecJson {
    name: String,
    gram: Vec<Vec<i64>>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    eichler_eligible: bool,
}

impl TryFrom<LatticeSpecJson> for LatticeSpec {
    type Error = LatticeError;

    fn try_from(value: LatticeSpecJson) -> Result<Self> {
        Ok(LatticeSpec::new(value.name, value.gram)?.with_eichler_eligible(value.eichler_eligible))
    }
}

impl From<LatticeSpec> for LatticeSpecJson {
    fn from(value: LatticeSpec) -> Self {
        LatticeSpecJson {
            gram: value.gram_matrix(),
            name: value.name,
            eichler_eligible: value.eichler_eligible,
        }
    }
}

impl PartialEq for LatticeSpec {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.gram == other.gram
    }
}

impl Eq for LatticeSpec {}

impl fmt::Debug for LatticeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LatticeSpec")
            .field("name", &self.name)
            .field("rank", &self.rank)
            .finish_non_exhaustive()
    }
}

impl LatticeSpec {
    /// Validates that `gram` is square, symmetric, and has even diagonal.
    pub fn new(name: impl Into<String>, gram: Vec<Vec<i64>>) -> Result<Self> {
        let rank = gram.len();
        if rank == 0 || gram.iter().any(|row| row.len() != rank) {
            return Err(LatticeError::NotSquare);
        }
        for i in 0..rank {
            if gram[i][i] % 2 != 0 {
                return Err(LatticeError::OddDiagonal { index: i, value: gram[i][i] });
            }
            for j in 0..i {
                if gram[i][j] != gram[j][i] {
                    return Err(LatticeError::NotSymmetric(i, j));
                }
            }
        }
        Ok(LatticeSpec {
            name: name.into(),
            rank,
            gram: gram.into_iter().flatten().collect(),
            eichler_eligible: false,
            disc: OnceLock::new(),
        })
    }

    /// Marks the lattice as containing two orthogonal hyperbolic planes, which
    /// is the hypothesis under which orbits are classified by invariants.
    pub fn with_eichler_eligible(mut self, eligible: bool) -> Self {
        self.eichler_eligible = eligible;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn eichler_eligible(&self) -> bool {
        self.eichler_eligible
    }

    pub fn entry(&self, i: usize, j: usize) -> i64 {
        self.gram[i * self.rank + j]
    }

    pub fn gram_matrix(&self) -> Vec<Vec<i64>> {
        self.gram.chunks(self.rank).map(<[i64]>::to_vec).collect()
    }

    fn row(&self, i: usize) -> &[i64] {
        &self.gram[i * self.rank..(i + 1) * self.rank]
    }

    pub(crate) fn pairing_coords(&self, x: &[i64], y: &[i64]) -> Result<i128> {
        let mut acc: i128 = 0;
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0 {
                continue;
            }
            let mut s: i128 = 0;
            for (&g, &yj) in self.row(i).iter().zip(y) {
                if g != 0 && yj != 0 {
                    s = checked_add(s, checked_mul(g as i128, yj as i128)?)?;
                }
            }
            acc = checked_add(acc, checked_mul(xi as i128, s)?)?;
        }
        Ok(acc)
    }

    /// `G x`, i.e. the pairings of `x` with every basis vector.
    pub(crate) fn gram_times(&self, x: &[i64]) -> Result<Vec<i128>> {
        (0..self.rank)
            .map(|i| {
                self.row(i).iter().zip(x).try_fold(0i128, |s, (&g, &xj)| {
                    if g == 0 || xj == 0 {
                        Ok(s)
                    } else {
                        checked_add(s, checked_mul(g as i128, xj as i128)?)
                    }
                })
            })
            .collect()
    }

    /// Exact signature `(positive, negative, zero)` of the Gram matrix.
    pub fn signature(&self) -> Result<(usize, usize, usize)> {
        let g: Vec<Vec<i128>> = self
            .gram_matrix()
            .into_iter()
            .map(|r| r.into_iter().map(i128::from).collect())
            .collect();
        signature(&g)
    }

    /// For a lattice laid out as `U + ... + <-2(n-1)>` with `U` first and `e`
    /// last (both orthogonal summands), returns `n`.
    pub fn bbf_n(&self) -> Option<i64> {
        let r = self.rank;
        if r < 3 {
            return None;
        }
        let u_ok = self.entry(0, 0) == 0
            && self.entry(1, 1) == 0
            && self.entry(0, 1) == 1
            && (2..r).all(|j| self.entry(0, j) == 0 && self.entry(1, j) == 0);
        let t = -self.entry(r - 1, r - 1);
        let e_ok = t >= 2 && (0..r - 1).all(|j| self.entry(r - 1, j) == 0);
        (u_ok && e_ok).then_some(t / 2 + 1)
    }

    pub(crate) fn check_vec(&self, coords: &[i64]) -> Result<()> {
        if coords.len() != self.rank {
            return Err(LatticeError::RankMismatch { got: coords.len(), rank: self.rank });
        }
        Ok(())
    }
}

/// The hyperbolic plane `U` with Gram `[[0,1],[1,0]]`.
pub fn hyperbolic_plane() -> LatticeSpec {
    LatticeSpec::new("U", vec![vec![0, 1], vec![1, 0]]).expect("valid gram")
}

/// The negated E8 Cartan matrix.
pub fn e8_negative() -> LatticeSpec {
    let mut g = vec![vec![0i64; 8]; 8];
    for (i, row) in g.iter_mut().enumerate() {
        row[i] = -2;
    }
    for &(a, b) in &E8_EDGES {
        g[a][b] = 1;
        g[b][a] = 1;
    }
    LatticeSpec::new("E8(-1)", g).expect("valid gram")
}

/// Rank one lattice `<value>`.
pub fn rank_one(value: i64) -> Result<LatticeSpec> {
    LatticeSpec::new(format!("<{value}>"), vec![vec![value]])
}

/// Orthogonal direct sum of `parts` in the given order.
pub fn direct_sum(name: impl Into<String>, parts: &[LatticeSpec]) -> Result<LatticeSpec> {
    let rank: usize = parts.iter().map(|p| p.rank).sum();
    let mut g = vec![vec![0i64; rank]; rank];
    let mut off = 0;
    for p in parts {
        for i in 0..p.rank {
            for j in 0..p.rank {
                g[off + i][off + j] = p.entry(i, j);
            }
        }
        off += p.rank;
    }
    LatticeSpec::new(name, g)
}

fn check_n(n: i64) -> Result<i64> {
    if n < 2 {
        return Err(LatticeError::InvalidN(n));
    }
    checked_mul(2, (n - 1) as i128)
        .ok()
        .and_then(|t| i64::try_from(t).ok())
        .ok_or(LatticeError::Overflow)
}

/// `H^2` of a K3^[n]-type manifold: `U^3 + E8(-1)^2 + <-2(n-1)>`, rank 23.
pub fn make_lambda_n(n: i64) -> Result<Arc<LatticeSpec>> {
    let t = check_n(n)?;
    let u = hyperbolic_plane();
    let e8 = e8_negative();
    let lat = direct_sum(
        format!("lambda_{n}"),
        &[u.clone(), u.clone(), u, e8.clone(), e8, rank_one(-t)?],
    )?;
    Ok(Arc::new(lat.with_eichler_eligible(true)))
}

/// The rank 5 piece `U + U + <-2(n-1)>` of [`make_lambda_n`], with the same
/// discriminant group and the same coordinates for the first `U` and `e`.
pub fn make_reduced_lambda_n(n: i64) -> Result<Arc<LatticeSpec>> {
    let t = check_n(n)?;
    let u = hyperbolic_plane();
    let lat = direct_sum(format!("lambda_{n}_rank5"), &[u.clone(), u, rank_one(-t)?])?;
    Ok(Arc::new(lat.with_eichler_eligible(true)))
}

/// Integer coordinate vector in the basis of a [`LatticeSpec`].
#[derive(Clone)]
pub struct LatVec {
    lattice: Arc<LatticeSpec>,
    coords: Vec<i64>,
}

impl PartialEq for LatVec {
    fn eq(&self, other: &Self) -> bool {
        same_lattice(&self.lattice, &other.lattice) && self.coords == other.coords
    }
}

impl Eq for LatVec {}

impl fmt::Debug for LatVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{:?}", self.lattice.name, self.coords)
    }
}

fn same_lattice(a: &Arc<LatticeSpec>, b: &Arc<LatticeSpec>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

/// JSON form `{"lattice": name, "coords": [...]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatVecJson {
    pub lattice: String,
    pub coords: Vec<i64>,
}

impl LatVec {
    pub fn new(lattice: &Arc<LatticeSpec>, coords: Vec<i64>) -> Result<Self> {
        lattice.check_vec(&coords)?;
        Ok(LatVec { lattice: Arc::clone(lattice), coords })
    }

    pub fn zero(lattice: &Arc<LatticeSpec>) -> Self {
        LatVec { lattice: Arc::clone(lattice), coords: vec![0; lattice.rank] }
    }

    /// The `i`-th basis vector.
    pub fn basis(lattice: &Arc<LatticeSpec>, i: usize) -> Self {
        let mut v = Self::zero(lattice);
        v.coords[i] = 1;
        v
    }

    /// The last basis vector, `e` for the K3^[n] lattices.
    pub fn last_basis(lattice: &Arc<LatticeSpec>) -> Self {
        Self::basis(lattice, lattice.rank - 1)
    }

    pub fn lattice(&self) -> &Arc<LatticeSpec> {
        &self.lattice
    }

    pub fn coords(&self) -> &[i64] {
        &self.coords
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|&c| c == 0)
    }

    /// gcd of the coordinates (0 for the zero vector).
    pub fn content(&self) -> i128 {
        self.coords.iter().fold(0i128, |g, &c| g.gcd(&(c as i128)))
    }

    /// `a * self + b * other`.
    pub fn combine(&self, a: i64, other: &LatVec, b: i64) -> Result<LatVec> {
        ensure_same(self, other)?;
        let coords = self
            .coords
            .iter()
            .zip(&other.coords)
            .map(|(&x, &y)| {
                a.checked_mul(x)
                    .zip(b.checked_mul(y))
                    .and_then(|(p, q)| p.checked_add(q))
                    .ok_or(LatticeError::Overflow)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(LatVec { lattice: Arc::clone(&self.lattice), coords })
    }

    pub fn scale(&self, k: i64) -> Result<LatVec> {
        let coords = self
            .coords
            .iter()
            .map(|&x| x.checked_mul(k).ok_or(LatticeError::Overflow))
            .collect::<Result<Vec<_>>>()?;
        Ok(LatVec { lattice: Arc::clone(&self.lattice), coords })
    }

    pub fn to_json(&self) -> LatVecJson {
        LatVecJson { lattice: self.lattice.name.clone(), coords: self.coords.clone() }
    }

    /// Parses the JSON form against a known lattice, checking the name.
    pub fn from_json(json: &LatVecJson, lattice: &Arc<LatticeSpec>) -> Result<Self> {
        if json.lattice != lattice.name {
            return Err(LatticeError::LatticeMismatch(json.lattice.clone(), lattice.name.clone()));
        }
        LatVec::new(lattice, json.coords.clone())
    }
}

impl std::ops::Neg for &LatVec {
    type Output = LatVec;

    fn neg(self) -> LatVec {
        LatVec {
            lattice: Arc::clone(&self.lattice),
            coords: self.coords.iter().map(|&c| -c).collect(),
        }
    }
}

fn ensure_same(x: &LatVec, y: &LatVec) -> Result<()> {
    if same_lattice(&x.lattice, &y.lattice) {
        Ok(())
    } else {
        Err(LatticeError::LatticeMismatch(x.lattice.name.clone(), y.lattice.name.clone()))
    }
}

/// The bilinear form `x^T G y`.
pub fn pairing(x: &LatVec, y: &LatVec) -> Result<i128> {
    ensure_same(x, y)?;
    x.lattice.pairing_coords(&x.coords, &y.coords)
}

pub fn square(x: &LatVec) -> Result<i128> {
    x.lattice.pairing_coords(&x.coords, &x.coords)
}

pub fn is_primitive(x: &LatVec) -> Result<bool> {
    match x.content() {
        0 => Err(LatticeError::ZeroVector),
        c => Ok(c == 1),
    }
}

/// Positive generator of the ideal `{ (x, y) : y in L }`.
pub fn divisibility(x: &LatVec) -> Result<i128> {
    if x.is_zero() {
        return Err(LatticeError::ZeroVector);
    }
    let g = x.lattice.gram_times(&x.coords)?.iter().fold(0i128, |g, v| g.gcd(v));
    if g == 0 {
        return Err(LatticeError::DegenerateLattice);
    }
    Ok(g)
}

/// The discriminant group `L*/L` as a product of cyclic groups.
///
/// `generator_images[i]` is a representative in `L*` (rational coordinates,
/// reduced into `[0, 1)`) of the generator of the `i`-th cyclic factor. Each
/// generator is normalized so that its first coordinate with full
/// denominator equals `1 / factor`; for the K3^[n] lattices this makes the
/// generator `e / (2n - 2)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DiscGroup {
    pub order: i128,
    pub cyclic_factors: Vec<i128>,
    #[serde(serialize_with = "serialize_ratio_rows")]
    pub generator_images: Vec<Vec<Ratio<i128>>>,
    /// Row `i` maps `G x / d(x)` to the residue for factor `i`.
    #[serde(skip)]
    projection: Vec<Vec<i128>>,
}

fn serialize_ratio_rows<S: serde::Serializer>(
    rows: &[Vec<Ratio<i128>>],
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    let strings: Vec<Vec<String>> =
        rows.iter().map(|r| r.iter().map(ToString::to_string).collect()).collect();
    strings.serialize(s)
}

/// Class of `x / d(x)` in the discriminant group, one residue per factor.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DiscImage {
    pub residues: Vec<i128>,
}

impl DiscImage {
    pub fn is_zero(&self) -> bool {
        self.residues.iter().all(|&r| r == 0)
    }

    /// The image of `-x`, residue by residue.
    pub fn negated(&self, group: &DiscGroup) -> DiscImage {
        DiscImage {
            residues: self
                .residues
                .iter()
                .zip(&group.cyclic_factors)
                .map(|(&r, &f)| (f - r) % f)
                .collect(),
        }
    }
}

fn mod_inverse(a: i128, m: i128) -> Option<i128> {
    let e = a.rem_euclid(m).extended_gcd(&m);
    (e.gcd == 1).then(|| e.x.rem_euclid(m))
}

fn compute_disc_group(lat: &LatticeSpec) -> Result<DiscGroup> {
    let g: Vec<Vec<i128>> = lat
        .gram_matrix()
        .into_iter()
        .map(|r| r.into_iter().map(i128::from).collect())
        .collect();
    let smith = smith_normal_form(&g)?;
    if smith.diag.contains(&0) {
        return Err(LatticeError::DegenerateLattice);
    }
    let r = lat.rank;
    let mut factors = Vec::new();
    let mut gens = Vec::new();
    let mut projection = Vec::new();
    for (i, &d) in smith.diag.iter().enumerate() {
        if d == 1 {
            continue;
        }
        let col: Vec<i128> = (0..r).map(|j| smith.right[j][i].rem_euclid(d)).collect();
        // rescale by a unit so the first full-denominator coordinate is 1/d
        let (scale, inv_scale) = col
            .iter()
            .find_map(|&c| mod_inverse(c, d).map(|inv| (inv, c)))
            .unwrap_or((1, 1));
        gens.push(
            col.iter()
                .map(|&c| Ratio::new((c * scale).rem_euclid(d), d))
                .collect(),
        );
        projection.push(
            smith.left[i]
                .iter()
                .map(|&u| checked_mul(u.rem_euclid(d), inv_scale).map(|v| v.rem_euclid(d)))
                .collect::<Result<Vec<_>>>()?,
        );
        factors.push(d);
    }
    let order = factors.iter().try_fold(1i128, |acc, &f| checked_mul(acc, f))?;
    Ok(DiscGroup { order, cyclic_factors: factors, generator_images: gens, projection })
}

/// Discriminant group via the Smith normal form of the Gram matrix. Cached
/// on the lattice after the first call.
pub fn discriminant_group(lat: &LatticeSpec) -> Result<&DiscGroup> {
    lat.disc
        .get_or_init(|| compute_disc_group(lat))
        .as_ref()
        .map_err(Clone::clone)
}

/// Class of `x / d(x)` in `L*/L`, for primitive `x`.
pub fn disc_image(x: &LatVec) -> Result<DiscImage> {
    if !is_primitive(x)? {
        return Err(LatticeError::NotPrimitive(x.content()));
    }
    let d = divisibility(x)?;
    let group = discriminant_group(&x.lattice)?;
    let v: Vec<i128> = x.lattice.gram_times(&x.coords)?.into_iter().map(|p| p / d).collect();
    let residues = group
        .projection
        .iter()
        .zip(&group.cyclic_factors)
        .map(|(row, &f)| {
            row.iter()
                .zip(&v)
                .try_fold(0i128, |acc, (&w, &vj)| {
                    checked_add(acc, checked_mul(w, vj.rem_euclid(f))?).map(|s| s % f)
                })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DiscImage { residues })
}

/// Sign type of the rank 2 span of two vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Definiteness {
    /// The two vectors are proportional over the rationals.
    Degenerate,
    IndefiniteOrOther,
    NegSemidefinite,
    NegDefinite,
}

impl Definiteness {
    /// Definite or semidefinite.
    pub fn is_nonpositive(self) -> bool {
        matches!(self, Definiteness::NegDefinite | Definiteness::NegSemidefinite)
    }
}

/// Classifies the Gram matrix `[[a, b], [b, c]]` of a non-proportional pair.
pub fn classify_binary_form(a: i128, b: i128, c: i128) -> Result<Definiteness> {
    let det = checked_add(checked_mul(a, c)?, -checked_mul(b, b)?)?;
    Ok(if a < 0 && det > 0 {
        Definiteness::NegDefinite
    } else if a <= 0 && c <= 0 && det >= 0 {
        Definiteness::NegSemidefinite
    } else {
        Definiteness::IndefiniteOrOther
    })
}

fn proportional(x: &[i64], y: &[i64]) -> bool {
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            if x[i] as i128 * y[j] as i128 != x[j] as i128 * y[i] as i128 {
                return false;
            }
        }
    }
    true
}

/// Definiteness of the lattice spanned by `z` and `w`.
pub fn rank2_definiteness(z: &LatVec, w: &LatVec) -> Result<Definiteness> {
    ensure_same(z, w)?;
    if z.is_zero() || w.is_zero() {
        return Err(LatticeError::ZeroVector);
    }
    if proportional(&z.coords, &w.coords) {
        return Ok(Definiteness::Degenerate);
    }
    classify_binary_form(square(z)?, pairing(z, w)?, square(w)?)
}

/// Exact signature `(positive, negative, zero)` of a symmetric matrix by
/// symmetric Gaussian elimination over the rationals.
pub fn signature(gram: &[Vec<i128>]) -> Result<(usize, usize, usize)> {
    let n = gram.len();
    let mut a: Vec<Vec<Ratio<i128>>> =
        gram.iter().map(|r| r.iter().map(|&v| Ratio::from_integer(v)).collect()).collect();
    let zero = Ratio::from_integer(0);
    let (mut pos, mut neg) = (0, 0);
    let mut active: Vec<usize> = (0..n).collect();
    while !active.is_empty() {
        let pivot = match active.iter().copied().find(|&i| a[i][i] != zero) {
            Some(p) => p,
            None => {
                // all diagonal entries vanish; fold an off-diagonal entry in
                let Some((i, j)) = active
                    .iter()
                    .flat_map(|&i| active.iter().map(move |&j| (i, j)))
                    .find(|&(i, j)| i != j && a[i][j] != zero)
                else {
                    break;
                };
                // row/col i += row/col j
                for k in 0..n {
                    let v = a[j][k];
                    a[i][k] += v;
                }
                for k in 0..n {
                    let v = a[k][j];
                    a[k][i] += v;
                }
                i
            }
        };
        let p = a[pivot][pivot];
        if p > zero {
            pos += 1;
        } else {
            neg += 1;
        }
        active.retain(|&i| i != pivot);
        for &i in &active {
            let f = a[i][pivot] / p;
            if f == zero {
                continue;
            }
            for &j in &active {
                let v = a[pivot][j];
                a[i][j] -= f * v;
            }
            a[i][pivot] = zero;
            a[pivot][i] = zero;
        }
    }
    Ok((pos, neg, n - pos - neg))
}
