//! Matrices of the Galois action on Tate classes: Frobenius blocks from p-adic Γ values,
//! complex conjugation and complex-route Frobenius blocks from recognized Γ̂ values.

use std::collections::{BTreeSet, HashMap};
use std::sync::{Mutex, OnceLock};

use rug::{Integer, Rational};
use serde::{Deserialize, Serialize};

use crate::arith::{gcd, inv_mod, rep0, units};
use crate::cyclo::{recognition_ladder, CycloNumber, RecognitionResult, DEFAULT_HEIGHT, DEFAULT_LADDER_PHI};
use crate::error::{Error, Result};
use crate::lattice::{compute_lattice, tate_class_basis};
use crate::numerics::{gamma_hat, mu};
use crate::padic::{
    gamma_hat_p, place_unit, recognize_padic_escalating, FrobeniusPlace, Orientation,
    UnramifiedElement,
};

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct RecognitionParams {
    pub height: u64,
    pub max_phi: u32,
    pub k: u32,
    pub k_max: u32,
}

impl Default for RecognitionParams {
    fn default() -> Self {
        Self { height: DEFAULT_HEIGHT, max_phi: DEFAULT_LADDER_PHI, k: 20, k_max: 200 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GaloisHandle {
    Frobenius { place: FrobeniusPlace },
    ComplexConjugation,
    Word { factors: Vec<GaloisHandle> },
    Identity,
}

impl GaloisHandle {
    pub fn frobenius(p: u64, m: u32) -> Result<Self> {
        Ok(Self::Frobenius { place: FrobeniusPlace::new(p, m)? })
    }

    /// `u(τ)`: `p^{-1}` for geometric Frobenius, `-1` for conjugation, products for words.
    pub fn unit(&self, m: u32) -> u32 {
        match self {
            Self::Frobenius { place } => place_unit(place) % m,
            Self::ComplexConjugation => m - 1,
            Self::Identity => 1 % m,
            Self::Word { factors } => {
                factors.iter().fold(1u64, |acc, h| acc * h.unit(m) as u64 % m as u64) as u32
            }
        }
    }
}

/// Orbit of an ordered index tuple under `β ↦ uβ`, members sorted.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Orbit {
    pub m: u32,
    pub members: Vec<Vec<u32>>,
}

pub fn scale_tuple(m: u32, beta: &[u32], u: i64) -> Vec<u32> {
    beta.iter().map(|&i| rep0(u * i as i64, m)).collect()
}

fn multiset(beta: &[u32]) -> Vec<u32> {
    let mut v = beta.to_vec();
    v.sort_unstable();
    v
}

impl Orbit {
    pub fn of(m: u32, beta: &[u32]) -> Self {
        let set: BTreeSet<Vec<u32>> = units(m).into_iter().map(|u| scale_tuple(m, beta, u as i64)).collect();
        Self { m, members: set.into_iter().collect() }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Orbit identity up to reordering inside tuples.
    pub fn canonical(&self) -> Vec<u32> {
        self.members.iter().map(|b| multiset(b)).min().unwrap_or_default()
    }

    pub fn index_of(&self, beta: &[u32]) -> Option<usize> {
        self.members.binary_search_by(|b| b.as_slice().cmp(beta)).ok()
    }

    pub fn q(&self) -> usize {
        self.members.first().map_or(0, |b| b.len())
    }
}

/// Tate orbits of degree `≤ n`: lattice classes plus the pairs `(i, m-i)`.
pub fn working_orbits(m: u32, n: usize) -> Vec<Orbit> {
    let l = compute_lattice(m);
    let mut seen: BTreeSet<Vec<u32>> = BTreeSet::new();
    let mut out = Vec::new();
    let mut push = |beta: Vec<u32>| {
        let o = Orbit::of(m, &beta);
        if seen.insert(o.canonical()) {
            out.push(o);
        }
    };
    for i in 1..m {
        push(vec![i, m - i]);
    }
    for e in tate_class_basis(&l, n) {
        push(e.gamma_indices().expect("nonzero class"));
    }
    out
}

/// `E_β = ∏_{i_r > m/2} μ_{i_r}`, the factor with `ν_β = E_β ω_β`.
pub fn basis_scale(m: u32, beta: &[u32]) -> Rational {
    beta.iter().filter(|&&i| 2 * i > m).fold(Rational::from(1), |acc, &i| acc * mu(m, i))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Normalization {
    #[serde(rename = "omega")]
    Omega,
    #[serde(rename = "Phat")]
    PHat,
}

/// Generalized permutation block: column `j` goes to row `rows[j]` with `coeffs[j]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActionBlock {
    pub orbit: Orbit,
    pub u: u32,
    pub norm: Normalization,
    pub rows: Vec<usize>,
    pub coeffs: Vec<CycloNumber>,
}

impl ActionBlock {
    pub fn identity(orbit: &Orbit, norm: Normalization) -> Self {
        let n = orbit.len();
        Self {
            orbit: orbit.clone(),
            u: 1,
            norm,
            rows: (0..n).collect(),
            coeffs: vec![CycloNumber::one(orbit.m); n],
        }
    }

    fn from_fn<F>(orbit: &Orbit, u: u32, norm: Normalization, mut coeff: F) -> Result<Self>
    where
        F: FnMut(&[u32], &[u32]) -> Result<CycloNumber>,
    {
        let m = orbit.m;
        let uinv = inv_mod(u as i64, m as u64).ok_or(Error::NotAUnit(u as i64, m as u64))? as i64;
        let mut rows = Vec::with_capacity(orbit.len());
        let mut coeffs = Vec::with_capacity(orbit.len());
        for beta in &orbit.members {
            let target = scale_tuple(m, beta, uinv);
            rows.push(orbit.index_of(&target).expect("orbit closed under units"));
            coeffs.push(coeff(beta, &target)?);
        }
        Ok(Self { orbit: orbit.clone(), u, norm, rows, coeffs })
    }

    /// Rescales between the ω basis and `ν_β = E_β ω_β`.
    pub fn renormalize(&self, norm: Normalization) -> Self {
        if norm == self.norm {
            return self.clone();
        }
        let m = self.orbit.m;
        let mut out = self.clone();
        out.norm = norm;
        for (j, c) in out.coeffs.iter_mut().enumerate() {
            let src = &self.orbit.members[j];
            let dst = &self.orbit.members[self.rows[j]];
            let r = basis_scale(m, dst) / basis_scale(m, src);
            // c_ω = c_ν · E_dst / E_src
            *c = match norm {
                Normalization::Omega => c.scale(&r),
                Normalization::PHat => c.scale(&(Rational::from(1) / r)),
            };
        }
        out
    }

    /// `self ∘ other` (apply `other` first).
    pub fn compose(&self, other: &Self) -> Result<Self> {
        if self.orbit != other.orbit {
            return Err(Error::Inconsistent("blocks on different orbits".into()));
        }
        let other = other.renormalize(self.norm);
        let m = self.orbit.m;
        let mut rows = Vec::with_capacity(self.rows.len());
        let mut coeffs = Vec::with_capacity(self.rows.len());
        for j in 0..self.rows.len() {
            let mid = other.rows[j];
            rows.push(self.rows[mid]);
            coeffs.push(self.coeffs[mid].mul(&other.coeffs[j])?);
        }
        let u = (self.u as u64 * other.u as u64 % m as u64) as u32;
        Ok(Self { orbit: self.orbit.clone(), u, norm: self.norm, rows, coeffs })
    }

    pub fn is_identity(&self) -> bool {
        self.rows.iter().enumerate().all(|(j, &r)| r == j) && self.coeffs.iter().all(|c| c.is_rational() && c.coeffs[0] == 1)
    }

    /// Exactly one nonzero entry per row and column.
    pub fn is_generalized_permutation(&self) -> bool {
        let mut seen = vec![false; self.rows.len()];
        for &r in &self.rows {
            if seen[r] {
                return false;
            }
            seen[r] = true;
        }
        self.coeffs.iter().all(|c| !c.is_zero())
    }

    /// Smallest `n ≤ bound` with `self^n = 1`.
    pub fn order(&self, bound: u32) -> Option<u32> {
        let mut acc = self.clone();
        for n in 1..=bound {
            if acc.is_identity() {
                return Some(n);
            }
            acc = self.compose(&acc).ok()?;
        }
        None
    }

    pub fn matrix(&self) -> Vec<Vec<Option<CycloNumber>>> {
        let n = self.rows.len();
        let mut a = vec![vec![None; n]; n];
        for (j, (&r, c)) in self.rows.iter().zip(&self.coeffs).enumerate() {
            a[r][j] = Some(c.clone());
        }
        a
    }

    pub fn normalized_coeffs(&self) -> Self {
        let mut out = self.clone();
        for c in out.coeffs.iter_mut() {
            *c = c.normalized().lift(self.orbit.m).unwrap_or_else(|_| c.clone());
        }
        out
    }
}

#[derive(Serialize)]
struct BlockJson<'a> {
    orbit: &'a [Vec<u32>],
    norm: Normalization,
    entries: Vec<Vec<Option<CycloNumber>>>,
}

impl Serialize for ActionBlock {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        BlockJson { orbit: &self.orbit.members, norm: self.norm, entries: self.matrix() }.serialize(s)
    }
}

/// `j ↦ u^{-1} j` on `1..m-1`; entry `j-1` is the image of `j`.
pub fn shape_of(u: u32, m: u32) -> Result<Vec<u32>> {
    if gcd(u as u64, m as u64) != 1 {
        return Err(Error::NotAUnit(u as i64, m as u64));
    }
    let uinv = inv_mod(u as i64, m as u64).unwrap() as i64;
    Ok((1..m).map(|j| rep0(uinv * j as i64, m)).collect())
}

#[derive(Clone, Debug, Serialize)]
pub struct RhoMatrix {
    pub m: u32,
    pub handle: GaloisHandle,
    pub u: u32,
    pub shape: Vec<u32>,
    pub blocks: Vec<ActionBlock>,
}

impl PartialEq for RhoMatrix {
    fn eq(&self, o: &Self) -> bool {
        self.m == o.m && self.u == o.u && self.blocks == o.blocks
    }
}

impl RhoMatrix {
    pub fn identity(m: u32, orbits: &[Orbit]) -> Self {
        Self {
            m,
            handle: GaloisHandle::Identity,
            u: 1,
            shape: (1..m).collect(),
            blocks: orbits.iter().map(|o| ActionBlock::identity(o, Normalization::Omega)).collect(),
        }
    }

    /// `a ∘ b`.
    pub fn compose(&self, b: &Self) -> Result<Self> {
        if self.m != b.m || self.blocks.len() != b.blocks.len() {
            return Err(Error::Inconsistent("incompatible ρ matrices".into()));
        }
        let blocks = self.blocks.iter().zip(&b.blocks).map(|(x, y)| x.compose(y)).collect::<Result<Vec<_>>>()?;
        let u = (self.u as u64 * b.u as u64 % self.m as u64) as u32;
        let handle = GaloisHandle::Word { factors: vec![self.handle.clone(), b.handle.clone()] };
        Ok(Self { m: self.m, handle, u, shape: shape_of(u, self.m)?, blocks })
    }

    pub fn renormalize(&self, norm: Normalization) -> Self {
        let mut out = self.clone();
        out.blocks = self.blocks.iter().map(|b| b.renormalize(norm)).collect();
        out
    }

    pub fn is_identity(&self) -> bool {
        self.blocks.iter().all(|b| b.is_identity())
    }

    /// Same ρ-image (ignores the handle).
    pub fn same_image(&self, o: &Self) -> bool {
        self.u == o.u
            && self.blocks.iter().zip(&o.blocks).all(|(a, b)| {
                let b = b.renormalize(a.norm);
                a.rows == b.rows && a.coeffs.iter().zip(&b.coeffs).all(|(x, y)| x.sub(y).map(|d| d.is_zero()).unwrap_or(false))
            })
    }
}

/// `(-1)^{q/2} / Γ̂_p(pβ)` in the unramified ring of the place.
fn frobenius_unit_value(m: u32, beta: &[u32], ring: &std::sync::Arc<crate::padic::UnramifiedRing>) -> Result<UnramifiedElement> {
    let p = ring.p();
    let g = gamma_hat_p(m, p as i64, beta, p, ring.k)?;
    let mut v = g.inv()?;
    if (beta.len() / 2) % 2 == 1 {
        v = v.neg();
    }
    Ok(ring.from_padic(&v))
}

/// Geometric Frobenius block in the `ν` (P̂-normalized) basis: `[ν_β] ↦ c [ν_{pβ}]` with
/// `c = ι_𝒫^{-1}((-1)^{q/2} Γ̂_p(pβ)^{-1})`.
pub fn rho_frobenius_block(place: &FrobeniusPlace, orbit: &Orbit, params: &RecognitionParams) -> Result<ActionBlock> {
    let m = orbit.m;
    if place.conductor != m {
        return Err(Error::ModulusMismatch(place.conductor, m));
    }
    let geo = place.clone().with_orientation(Orientation::Geometric);
    let u = place_unit(&geo);
    let block = ActionBlock::from_fn(orbit, u, Normalization::PHat, |beta, _| {
        let key = (&geo, beta, params.height, params.k, params.k_max);
        let (c, _): (CycloNumber, u32) = crate::cache::cached("frobenius_coefficient", &key, || {
            recognize_padic_escalating(|ring| frobenius_unit_value(m, beta, ring), &geo, params.height, params.k, params.k_max)
        })?;
        Ok(c)
    })?;
    match place.orientation {
        Orientation::Geometric => Ok(block),
        Orientation::Arithmetic => invert_block(&block),
    }
}

pub fn invert_block(b: &ActionBlock) -> Result<ActionBlock> {
    let n = b.rows.len();
    let m = b.orbit.m;
    let mut rows = vec![0; n];
    let mut coeffs = vec![CycloNumber::one(m); n];
    for j in 0..n {
        rows[b.rows[j]] = j;
        coeffs[b.rows[j]] = b.coeffs[j].inverse()?;
    }
    let u = inv_mod(b.u as i64, m as u64).unwrap() as u32;
    Ok(ActionBlock { orbit: b.orbit.clone(), u, norm: b.norm, rows, coeffs })
}

fn gamma_hat_memo() -> &'static Mutex<HashMap<(u32, Vec<u32>, u64, u32), RecognitionResult>> {
    static C: OnceLock<Mutex<HashMap<(u32, Vec<u32>, u64, u32), RecognitionResult>>> = OnceLock::new();
    C.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Ladder recognition of `Γ̂(uβ)`, memoized on the multiset `uβ`.
pub fn recognized_gamma_hat(m: u32, u: i64, beta: &[u32], params: &RecognitionParams) -> Result<RecognitionResult> {
    let key = (m, multiset(&scale_tuple(m, beta, u)), params.height, params.max_phi);
    if let Some(r) = gamma_hat_memo().lock().unwrap().get(&key) {
        return Ok(r.clone());
    }
    let target = key.1.clone();
    let r = crate::cache::cached("gamma_hat", &key, || {
        recognition_ladder(|prec| Ok(gamma_hat(m, 1, &target, prec)?.value), m, params.height, params.max_phi)
    })?;
    gamma_hat_memo().lock().unwrap().insert(key, r.clone());
    Ok(r)
}

fn ratio_memo() -> &'static Mutex<HashMap<(u32, Vec<u32>, u64, u32), RecognitionResult>> {
    static C: OnceLock<Mutex<HashMap<(u32, Vec<u32>, u64, u32), RecognitionResult>>> = OnceLock::new();
    C.get_or_init(|| Mutex::new(HashMap::new()))
}

/// `(-1)^{q/2} Γ̂(β) / Γ̂(-β)`, recognized on the ladder.
pub fn conjugation_coefficient(m: u32, beta: &[u32], params: &RecognitionParams) -> Result<RecognitionResult> {
    let key = (m, multiset(beta), params.height, params.max_phi);
    if let Some(r) = ratio_memo().lock().unwrap().get(&key) {
        return Ok(r.clone());
    }
    let sign = if (beta.len() / 2) % 2 == 1 { -1 } else { 1 };
    let r = crate::cache::cached("conjugation_ratio", &(&key, beta), || {
        recognition_ladder(
            |prec| {
                let a = gamma_hat(m, 1, beta, prec + 32)?.value;
                let b = gamma_hat(m, -1, beta, prec + 32)?.value;
                let s = rug::Float::with_val(prec + 32, sign);
                Ok(a.div(&b)?.scale(&s).set_prec(prec))
            },
            m,
            params.height,
            params.max_phi,
        )
    })?;
    ratio_memo().lock().unwrap().insert(key, r.clone());
    Ok(r)
}

fn into_field(c: CycloNumber, m: u32) -> CycloNumber {
    let n = c.normalized();
    if m % n.conductor == 0 {
        n.lift(m).expect("divides")
    } else {
        n
    }
}

/// Complex conjugation block in the ν basis: `[ν_β] ↦ (-1)^{q/2} Γ̂(β)/Γ̂(-β) [ν_{-β}]`.
pub fn rho_conjugation_block(orbit: &Orbit, params: &RecognitionParams) -> Result<ActionBlock> {
    let m = orbit.m;
    ActionBlock::from_fn(orbit, m - 1, Normalization::PHat, |beta, _| {
        let r = conjugation_coefficient(m, beta, params)?;
        match r.value {
            Some(v) if r.verified => Ok(into_field(v, m)),
            _ => Err(Error::Recognition(format!("conjugation coefficient for {beta:?} unresolved: {}", r.diagnostics))),
        }
    })
}

/// Applies `Frob_p = σ_{p^{-1}}` to a value recognized over its own conductor.
pub fn frobenius_on_abelian(x: &CycloNumber, p: u64) -> Result<CycloNumber> {
    let x = x.normalized();
    let n = x.conductor;
    if n == 1 {
        return Ok(x);
    }
    let pinv = inv_mod(p as i64, n as u64).ok_or(Error::BadReduction(p))?;
    x.galois_sigma(pinv as i64)
}

/// Geometric Frobenius block from complex values: `c = Frob_p(Γ̂(-pβ)) / Γ̂(-β)`.
pub fn rho_frobenius_block_complex(p: u64, orbit: &Orbit, params: &RecognitionParams) -> Result<ActionBlock> {
    let m = orbit.m;
    let u = inv_mod(p as i64, m as u64).ok_or(Error::BadReduction(p))? as u32;
    ActionBlock::from_fn(orbit, u, Normalization::PHat, |beta, _| {
        let a = recognized_gamma_hat(m, -1, beta, params)?;
        let b = recognized_gamma_hat(m, -(p as i64), beta, params)?;
        match (a.value, b.value) {
            (Some(x), Some(y)) if a.verified && b.verified => Ok(into_field(frobenius_on_abelian(&y, p)?.div(&x)?, m)),
            _ => Err(Error::Recognition(format!("Γ̂ for {beta:?} unresolved"))),
        }
    })
}

/// ρ on a working set of orbits; `None` entries in `failures` record unresolved blocks.
pub fn rho_matrix(handle: &GaloisHandle, m: u32, orbits: &[Orbit], params: &RecognitionParams) -> Result<RhoMatrix> {
    let u = handle.unit(m);
    let blocks = match handle {
        GaloisHandle::Identity => return Ok(RhoMatrix::identity(m, orbits)),
        GaloisHandle::Frobenius { place } => {
            orbits.iter().map(|o| rho_frobenius_block(place, o, params)).collect::<Result<Vec<_>>>()?
        }
        GaloisHandle::ComplexConjugation => {
            orbits.iter().map(|o| rho_conjugation_block(o, params)).collect::<Result<Vec<_>>>()?
        }
        GaloisHandle::Word { factors } => {
            let mut acc = RhoMatrix::identity(m, orbits);
            for f in factors {
                acc = acc.compose(&rho_matrix(f, m, orbits, params)?)?;
            }
            return Ok(RhoMatrix { handle: handle.clone(), ..acc });
        }
    };
    let blocks = blocks.into_iter().map(|b| b.renormalize(Normalization::Omega)).collect();
    Ok(RhoMatrix { m, handle: handle.clone(), u, shape: shape_of(u, m)?, blocks })
}

/// `(-1)^{q/2}` as an integer.
pub fn half_sign(q: usize) -> i64 {
    if (q / 2) % 2 == 1 {
        -1
    } else {
        1
    }
}

pub fn integer(x: i64) -> Integer {
    Integer::from(x)
}
