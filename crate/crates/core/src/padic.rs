//! `ℤ/p^k` and unramified extensions `ℤ_q = ℤ_p[x]/(g)`, Morita's `Γ_p`, and the
//! p-adic embedding and recognition of cyclotomic numbers.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rug::ops::Pow;
use rug::{Integer, Rational};
use serde::{Deserialize, Serialize};

use crate::arith::{gcd, inv_mod, mult_order, rep1};
use crate::cyclo::{cyclotomic_poly, CycloNumber};
use crate::error::{Error, Result};
use crate::lll::lll_reduce;

pub const GUARD_DIGITS: u32 = 2;

fn ipow(p: u64, k: u32) -> Integer {
    Integer::from(p).pow(k)
}

/// Residue class mod `p^k`, stored in `[0, p^k)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PadicInt {
    pub p: u64,
    pub k: u32,
    pub residue: Integer,
}

#[derive(Serialize, Deserialize)]
struct PadicJson {
    p: u64,
    k: u32,
    residue: String,
}

impl Serialize for PadicInt {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PadicJson { p: self.p, k: self.k, residue: self.residue.to_string() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for PadicInt {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let j = PadicJson::deserialize(d)?;
        let r: Integer = j.residue.parse().map_err(D::Error::custom)?;
        Ok(PadicInt::new(j.p, j.k, r))
    }
}

impl PadicInt {
    pub fn new(p: u64, k: u32, v: Integer) -> Self {
        let m = ipow(p, k);
        Self { p, k, residue: v.div_rem_euc(m).1 }
    }

    pub fn from_i64(p: u64, k: u32, v: i64) -> Self {
        Self::new(p, k, Integer::from(v))
    }

    pub fn from_rational(p: u64, k: u32, q: &Rational) -> Result<Self> {
        let m = ipow(p, k);
        let den = Integer::from(q.denom() % p);
        if den == 0 {
            return Err(Error::NotIntegral(q.to_string(), p));
        }
        let inv = q.denom().clone().invert(&m).map_err(|_| Error::NotIntegral(q.to_string(), p))?;
        Ok(Self::new(p, k, inv * q.numer()))
    }

    pub fn modulus(&self) -> Integer {
        ipow(self.p, self.k)
    }

    fn check(&self, o: &Self) {
        assert_eq!((self.p, self.k), (o.p, o.k), "p-adic precision mismatch");
    }

    pub fn add(&self, o: &Self) -> Self {
        self.check(o);
        Self::new(self.p, self.k, Integer::from(&self.residue + &o.residue))
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.check(o);
        Self::new(self.p, self.k, Integer::from(&self.residue - &o.residue))
    }

    pub fn neg(&self) -> Self {
        Self::new(self.p, self.k, Integer::from(-&self.residue))
    }

    pub fn mul(&self, o: &Self) -> Self {
        self.check(o);
        Self::new(self.p, self.k, Integer::from(&self.residue * &o.residue))
    }

    pub fn is_unit(&self) -> bool {
        Integer::from(&self.residue % self.p) != 0
    }

    pub fn inv(&self) -> Result<Self> {
        self.residue
            .clone()
            .invert(&self.modulus())
            .map(|r| Self::new(self.p, self.k, r))
            .map_err(|_| Error::DivisionByZero)
    }

    pub fn reduce_to(&self, k: u32) -> Self {
        assert!(k <= self.k);
        Self::new(self.p, k, self.residue.clone())
    }

    /// Symmetric representative in `(-p^k/2, p^k/2]`.
    pub fn signed(&self) -> Integer {
        let m = self.modulus();
        let half = Integer::from(&m >> 1);
        if self.residue > half {
            Integer::from(&self.residue - &m)
        } else {
            self.residue.clone()
        }
    }
}

/// Integer in `[1, p^k]` congruent to `x`.
fn integer_representative(p: u64, x: &Rational, k: u32) -> Result<Integer> {
    let r = PadicInt::from_rational(p, k, x)?;
    Ok(if r.residue == 0 { r.modulus() } else { r.residue })
}

/// `Γ_p(x)` by the defining product, `O(p^{k+δ})`.
pub fn morita_gamma_naive(p: u64, x: &Rational, k: u32) -> Result<PadicInt> {
    let kk = k + GUARD_DIGITS;
    let n = integer_representative(p, x, kk)?;
    let n = n.to_u64().ok_or_else(|| Error::Precondition("naive Γ_p needs p^(k+2) < 2^64".into()))?;
    let m = ipow(p, kk);
    let mut prod = Integer::from(1);
    for i in 1..n {
        if i % p != 0 {
            prod *= i;
            prod %= &m;
        }
    }
    if n % 2 == 1 {
        prod = -prod;
    }
    Ok(PadicInt::new(p, k, prod))
}

fn gamma_levels_cache() -> &'static Mutex<HashMap<(u64, u32), Arc<Vec<Vec<Integer>>>>> {
    static C: OnceLock<Mutex<HashMap<(u64, u32), Arc<Vec<Vec<Integer>>>>>> = OnceLock::new();
    C.get_or_init(|| Mutex::new(HashMap::new()))
}

fn poly_mul_trunc(a: &[Integer], b: &[Integer], deg: usize, m: &Integer) -> Vec<Integer> {
    let n = deg.min(a.len() + b.len() - 1);
    let mut r = vec![Integer::new(); n];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            if i + j >= n {
                break;
            }
            r[i + j] += Integer::from(x * y);
        }
    }
    for c in r.iter_mut() {
        *c %= m;
    }
    r
}

/// Coefficients of `c(Z + j)`.
fn taylor_shift(c: &[Integer], j: u64, m: &Integer) -> Vec<Integer> {
    let mut c = c.to_vec();
    let n = c.len();
    for i in 0..n {
        for t in (i..n.saturating_sub(1)).rev() {
            let add = Integer::from(&c[t + 1] * j);
            c[t] += add;
            c[t] %= m;
        }
    }
    c
}

/// `Q_L(Y) = ∏_{0<i<p^L, p∤i} (p^L Y + i)` truncated mod `p^K`, for `L = 1..=K`.
fn gamma_levels(p: u64, kk: u32) -> Arc<Vec<Vec<Integer>>> {
    if let Some(v) = gamma_levels_cache().lock().unwrap().get(&(p, kk)) {
        return v.clone();
    }
    let m = ipow(p, kk);
    let mut levels: Vec<Vec<Integer>> = vec![Vec::new()];
    let mut q = vec![Integer::from(1)];
    for i in 1..p {
        q = poly_mul_trunc(&q, &[Integer::from(i), Integer::from(p)], kk as usize, &m);
    }
    levels.push(q);
    for l in 1..kk {
        let d = kk.div_ceil(l + 1) as usize;
        let mut prod = vec![Integer::from(1)];
        for j in 0..p {
            let s = taylor_shift(&levels[l as usize], j, &m);
            let s: Vec<Integer> = s
                .into_iter()
                .take(d)
                .enumerate()
                .map(|(r, c)| c * ipow(p, r as u32) % &m)
                .collect();
            prod = poly_mul_trunc(&prod, &s, d, &m);
        }
        levels.push(prod);
    }
    let v = Arc::new(levels);
    gamma_levels_cache().lock().unwrap().insert((p, kk), v.clone());
    v
}

/// `∏_{0<i<n, p∤i} i mod p^K` by blocks of size `p^L`.
fn prod_unit_below(n: &Integer, p: u64, kk: u32) -> Integer {
    let m = ipow(p, kk);
    let levels = gamma_levels(p, kk);
    let mut digits = Vec::new();
    let mut t = n.clone();
    while t != 0 {
        let (q, r) = t.div_rem(Integer::from(p));
        digits.push(r.to_u64().unwrap());
        t = q;
    }
    let mut base = Integer::new();
    let mut res = Integer::from(1);
    for l in (1..digits.len()).rev() {
        let pl = ipow(p, l as u32);
        let q = &levels[l];
        for j in 0..digits[l] {
            let start = Integer::from(&base + Integer::from(&pl * j));
            let y = Integer::from(&start / &pl);
            let mut v = Integer::new();
            for c in q.iter().rev() {
                v = (v * &y + c) % &m;
            }
            res = res * v % &m;
        }
        base += Integer::from(&pl * digits[l]);
    }
    for j in 1..digits.first().copied().unwrap_or(0) {
        res = res * Integer::from(&base + j) % &m;
    }
    res
}

/// Morita's `Γ_p(x)` mod `p^k` for `x ∈ ℚ ∩ ℤ_p`.
pub fn morita_gamma(p: u64, x: &Rational, k: u32) -> Result<PadicInt> {
    let kk = k + GUARD_DIGITS;
    let n = integer_representative(p, x, kk)?;
    let mut v = prod_unit_below(&n, p, kk);
    if n.is_odd() {
        v = -v;
    }
    Ok(PadicInt::new(p, k, v))
}

/// `Γ̂_p(uα) = ∏ Γ_p([u i_j]/m)² / Γ_p([2u i_j]/m)` with `[a] ∈ [1, m]`.
pub fn gamma_hat_p(m: u32, u: i64, idx: &[u32], p: u64, k: u32) -> Result<PadicInt> {
    if m as u64 % p == 0 {
        return Err(Error::BadReduction(p));
    }
    let mut num = PadicInt::from_i64(p, k, 1);
    let mut den = PadicInt::from_i64(p, k, 1);
    for &i in idx {
        let a = rep1(u * i as i64, m) as i64;
        let b = rep1(2 * u * i as i64, m) as i64;
        let g = morita_gamma(p, &Rational::from((a, m as i64)), k)?;
        num = num.mul(&g).mul(&g);
        den = den.mul(&morita_gamma(p, &Rational::from((b, m as i64)), k)?);
    }
    Ok(num.mul(&den.inv().expect("Γ_p values are units")))
}

// ---- polynomials over F_p (low degree first, trimmed) ----

type Fp = Vec<u64>;

fn fp_trim(mut a: Fp) -> Fp {
    while a.last() == Some(&0) {
        a.pop();
    }
    a
}

fn fp_mulmod(a: u64, b: u64, p: u64) -> u64 {
    (a as u128 * b as u128 % p as u128) as u64
}

fn fp_mul(a: &[u64], b: &[u64], p: u64) -> Fp {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut r = vec![0u64; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            r[i + j] = (r[i + j] + fp_mulmod(x, y, p)) % p;
        }
    }
    fp_trim(r)
}

fn fp_divrem(a: &[u64], b: &[u64], p: u64) -> (Fp, Fp) {
    let mut r = fp_trim(a.to_vec());
    let db = b.len() - 1;
    let li = inv_mod(b[db] as i64, p).expect("nonzero leading coefficient");
    if r.len() < b.len() {
        return (Vec::new(), r);
    }
    let mut q = vec![0u64; r.len() - db];
    while r.len() >= b.len() {
        let s = r.len() - b.len();
        let c = fp_mulmod(*r.last().unwrap(), li, p);
        for (j, &bj) in b.iter().enumerate() {
            r[s + j] = (r[s + j] + p - fp_mulmod(c, bj, p)) % p;
        }
        q[s] = c;
        r = fp_trim(r);
    }
    (q, r)
}

fn fp_rem(a: &[u64], b: &[u64], p: u64) -> Fp {
    fp_divrem(a, b, p).1
}

fn fp_monic(a: Fp, p: u64) -> Fp {
    let li = inv_mod(*a.last().unwrap() as i64, p).unwrap();
    a.into_iter().map(|c| fp_mulmod(c, li, p)).collect()
}

fn fp_gcd(a: &[u64], b: &[u64], p: u64) -> Fp {
    let (mut x, mut y) = (fp_trim(a.to_vec()), fp_trim(b.to_vec()));
    while !y.is_empty() {
        let r = fp_rem(&x, &y, p);
        x = y;
        y = r;
    }
    fp_monic(x, p)
}

fn fp_powmod(a: &[u64], mut e: u128, h: &[u64], p: u64) -> Fp {
    let mut base = fp_rem(a, h, p);
    let mut acc = vec![1u64];
    while e > 0 {
        if e & 1 == 1 {
            acc = fp_rem(&fp_mul(&acc, &base, p), h, p);
        }
        base = fp_rem(&fp_mul(&base, &base, p), h, p);
        e >>= 1;
    }
    acc
}

fn fp_sub(a: &[u64], b: &[u64], p: u64) -> Fp {
    let n = a.len().max(b.len());
    fp_trim((0..n).map(|i| (a.get(i).unwrap_or(&0) + p - b.get(i).unwrap_or(&0)) % p).collect())
}

fn fp_add(a: &[u64], b: &[u64], p: u64) -> Fp {
    let n = a.len().max(b.len());
    fp_trim((0..n).map(|i| (a.get(i).unwrap_or(&0) + b.get(i).unwrap_or(&0)) % p).collect())
}

/// Enumerates nonconstant polynomials `x, x+1, …, x^2, …` by base-`p` digits.
fn splitting_candidate(n: u64, p: u64) -> Fp {
    let mut d = Vec::new();
    let mut t = n;
    while t > 0 {
        d.push(t % p);
        t /= p;
    }
    d
}

/// Splits a squarefree product of degree-`f` irreducibles into its factors.
fn equal_degree_factor(h: Fp, f: u32, p: u64) -> Vec<Fp> {
    if h.len() - 1 == f as usize {
        return vec![h];
    }
    let q = (p as u128).pow(f);
    let mut n = p;
    loop {
        let a = splitting_candidate(n, p);
        n += 1;
        if a.len() >= h.len() {
            continue;
        }
        let b = if p == 2 {
            let mut t = fp_rem(&a, &h, p);
            let mut acc = t.clone();
            for _ in 1..f {
                t = fp_rem(&fp_mul(&t, &t, p), &h, p);
                acc = fp_add(&acc, &t, p);
            }
            acc
        } else {
            fp_sub(&fp_powmod(&a, (q - 1) / 2, &h, p), &[1], p)
        };
        let d = fp_gcd(&h, &b, p);
        if d.len() > 1 && d.len() < h.len() {
            let (e, _) = fp_divrem(&h, &d, p);
            let mut out = equal_degree_factor(d, f, p);
            out.extend(equal_degree_factor(fp_monic(e, p), f, p));
            return out;
        }
    }
}

fn cyclotomic_mod(n: u32, p: u64) -> Fp {
    fp_trim(cyclotomic_poly(n).iter().map(|&c| c.rem_euclid(p as i64) as u64).collect())
}

/// Monic irreducible factors of `Φ_n mod p`, sorted by the place-selection key.
pub fn cyclotomic_factors(n: u32, p: u64) -> Vec<Vec<u64>> {
    let f = mult_order(p, n as u64);
    let mut fs = equal_degree_factor(cyclotomic_mod(n, p), f, p);
    fs.sort_by_key(|g| factor_key(g, p));
    fs
}

/// Coefficients high to low, each negated mod `p`; for `x - r` this is `(p-1, r)`.
fn factor_key(g: &[u64], p: u64) -> Vec<u64> {
    g.iter().rev().map(|&c| (p - c) % p).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    Geometric,
    Arithmetic,
}

/// A prime of `ℚ(ζ_N)` over `p`, given by an irreducible factor of `Φ_N mod p`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FrobeniusPlace {
    pub p: u64,
    pub conductor: u32,
    pub factor: Vec<u64>,
    pub orientation: Orientation,
}

impl FrobeniusPlace {
    /// The default place: smallest factor under the selection key.
    pub fn new(p: u64, m: u32) -> Result<Self> {
        if gcd(p, m as u64) != 1 {
            return Err(Error::BadReduction(p));
        }
        let factor = cyclotomic_factors(m, p).into_iter().next().expect("Φ_m has a factor");
        Ok(Self { p, conductor: m, factor, orientation: Orientation::Geometric })
    }

    /// Every place above `p`, in selection order.
    pub fn all(p: u64, m: u32) -> Result<Vec<Self>> {
        if gcd(p, m as u64) != 1 {
            return Err(Error::BadReduction(p));
        }
        Ok(cyclotomic_factors(m, p)
            .into_iter()
            .map(|factor| Self { p, conductor: m, factor, orientation: Orientation::Geometric })
            .collect())
    }

    pub fn with_orientation(mut self, o: Orientation) -> Self {
        self.orientation = o;
        self
    }

    pub fn inertia_degree(&self) -> u32 {
        (self.factor.len() - 1) as u32
    }

    /// The place of `ℚ(ζ_N)` above this one, for a multiple `N` of the conductor.
    pub fn extend(&self, n: u32) -> Result<Self> {
        if n % self.conductor != 0 || gcd(self.p, n as u64) != 1 {
            return Err(Error::ModulusMismatch(self.conductor, n));
        }
        if n == self.conductor {
            return Ok(self.clone());
        }
        let p = self.p;
        let step = (n / self.conductor) as usize;
        let mut y = vec![0u64; step + 1];
        y[step] = 1;
        for g in cyclotomic_factors(n, p) {
            let ym = fp_rem(&y, &g, p);
            let mut v: Fp = Vec::new();
            for &c in self.factor.iter().rev() {
                v = fp_add(&fp_rem(&fp_mul(&v, &ym, p), &g, p), &[c], p);
            }
            if v.is_empty() {
                return Ok(Self { p, conductor: n, factor: g, orientation: self.orientation });
            }
        }
        Err(Error::Inconsistent("no compatible factor".into()))
    }
}

/// `u(Frob_p)`: `p^{-1} mod m` (geometric) or `p mod m` (arithmetic).
pub fn frobenius_unit(p: u64, m: u32, o: Orientation) -> Result<u32> {
    if gcd(p, m as u64) != 1 {
        return Err(Error::BadReduction(p));
    }
    Ok(match o {
        Orientation::Geometric => inv_mod(p as i64, m as u64).unwrap() as u32,
        Orientation::Arithmetic => (p % m as u64) as u32,
    })
}

pub fn place_unit(place: &FrobeniusPlace) -> u32 {
    frobenius_unit(place.p, place.conductor, place.orientation).expect("place has p ∤ N")
}

/// `ℤ_p[x]/(g) mod p^k` with the Hensel-lifted root of `Φ_N` congruent to `x`.
#[derive(Debug)]
pub struct UnramifiedRing {
    pub place: FrobeniusPlace,
    pub k: u32,
    pub modulus: Integer,
    g: Vec<Integer>,
    root: Vec<Integer>,
}

#[derive(Clone, Debug)]
pub struct UnramifiedElement {
    pub ring: Arc<UnramifiedRing>,
    pub coeffs: Vec<Integer>,
}

impl PartialEq for UnramifiedElement {
    fn eq(&self, o: &Self) -> bool {
        self.ring.place == o.ring.place && self.ring.k == o.ring.k && self.coeffs == o.coeffs
    }
}

fn ring_cache() -> &'static Mutex<HashMap<(FrobeniusPlace, u32), Arc<UnramifiedRing>>> {
    static C: OnceLock<Mutex<HashMap<(FrobeniusPlace, u32), Arc<UnramifiedRing>>>> = OnceLock::new();
    C.get_or_init(|| Mutex::new(HashMap::new()))
}

impl UnramifiedRing {
    pub fn new(place: &FrobeniusPlace, k: u32) -> Arc<Self> {
        let key = (place.clone(), k);
        if let Some(r) = ring_cache().lock().unwrap().get(&key) {
            return r.clone();
        }
        let f = place.inertia_degree() as usize;
        let mut ring = UnramifiedRing {
            place: place.clone(),
            k,
            modulus: ipow(place.p, k),
            g: place.factor.iter().map(|&c| Integer::from(c)).collect(),
            root: Vec::new(),
        };
        let mut x = vec![Integer::new(); f];
        if f == 1 {
            x[0] = (ring.modulus.clone() - &ring.g[0]) % &ring.modulus;
        } else {
            x[1] = Integer::from(1);
        }
        ring.root = x;
        let arc = Arc::new(ring);
        let phi = cyclotomic_poly(place.conductor);
        let dphi: Vec<i64> = phi.iter().enumerate().skip(1).map(|(i, &c)| c * i as i64).collect();
        let mut r = UnramifiedElement { ring: arc.clone(), coeffs: arc.root.clone() };
        for _ in 0..=(32 - k.leading_zeros()) {
            let num = r.eval_int_poly(&phi);
            let den = r.eval_int_poly(&dphi);
            r = r.sub(&num.mul(&den.inv().expect("Φ' is a unit since p ∤ N")));
        }
        debug_assert!(r.eval_int_poly(&phi).is_zero());
        let mut ring = Arc::try_unwrap(arc).unwrap_or_else(|a| UnramifiedRing {
            place: a.place.clone(),
            k: a.k,
            modulus: a.modulus.clone(),
            g: a.g.clone(),
            root: a.root.clone(),
        });
        ring.root = r.coeffs;
        let arc = Arc::new(ring);
        ring_cache().lock().unwrap().insert(key, arc.clone());
        arc
    }

    pub fn degree(&self) -> usize {
        self.g.len() - 1
    }

    pub fn p(&self) -> u64 {
        self.place.p
    }

    pub fn constant(self: &Arc<Self>, c: Integer) -> UnramifiedElement {
        let mut v = vec![Integer::new(); self.degree()];
        v[0] = c;
        UnramifiedElement::new(self, v)
    }

    pub fn from_padic(self: &Arc<Self>, x: &PadicInt) -> UnramifiedElement {
        assert!(x.p == self.p() && x.k >= self.k);
        self.constant(x.residue.clone())
    }

    /// Hensel-lifted root of `Φ_N`.
    pub fn root(self: &Arc<Self>) -> UnramifiedElement {
        UnramifiedElement { ring: self.clone(), coeffs: self.root.clone() }
    }
}

impl UnramifiedElement {
    pub fn new(ring: &Arc<UnramifiedRing>, mut coeffs: Vec<Integer>) -> Self {
        for c in coeffs.iter_mut() {
            let (_, r) = <(Integer, Integer)>::from(c.div_rem_euc_ref(&ring.modulus));
            *c = r;
        }
        Self { ring: ring.clone(), coeffs }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == 0)
    }

    pub fn add(&self, o: &Self) -> Self {
        let c = self.coeffs.iter().zip(&o.coeffs).map(|(a, b)| Integer::from(a + b)).collect();
        Self::new(&self.ring, c)
    }

    pub fn sub(&self, o: &Self) -> Self {
        let c = self.coeffs.iter().zip(&o.coeffs).map(|(a, b)| Integer::from(a - b)).collect();
        Self::new(&self.ring, c)
    }

    pub fn neg(&self) -> Self {
        Self::new(&self.ring, self.coeffs.iter().map(|a| Integer::from(-a)).collect())
    }

    pub fn mul(&self, o: &Self) -> Self {
        let f = self.ring.degree();
        let mut prod = vec![Integer::new(); 2 * f - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if *a == 0 {
                continue;
            }
            for (j, b) in o.coeffs.iter().enumerate() {
                prod[i + j] += Integer::from(a * b);
            }
        }
        let g = &self.ring.g;
        for i in (f..prod.len()).rev() {
            let c = std::mem::take(&mut prod[i]);
            if c == 0 {
                continue;
            }
            for j in 0..f {
                prod[i - f + j] -= Integer::from(&c * &g[j]);
            }
        }
        prod.truncate(f);
        Self::new(&self.ring, prod)
    }

    pub fn scale_int(&self, c: &Integer) -> Self {
        Self::new(&self.ring, self.coeffs.iter().map(|a| Integer::from(a * c)).collect())
    }

    pub fn pow(&self, e: &Integer) -> Self {
        let mut acc = self.ring.constant(Integer::from(1));
        let bits = e.significant_bits();
        for i in (0..bits).rev() {
            acc = acc.mul(&acc);
            if e.get_bit(i) {
                acc = acc.mul(self);
            }
        }
        acc
    }

    /// Reduction mod `p` is nonzero.
    pub fn is_unit(&self) -> bool {
        let p = self.ring.p();
        self.coeffs.iter().any(|c| Integer::from(c % p) != 0)
    }

    pub fn inv(&self) -> Result<Self> {
        if !self.is_unit() {
            return Err(Error::DivisionByZero);
        }
        let p = self.ring.p();
        let f = self.ring.degree() as u32;
        let q = ipow(p, f);
        let mut x = self.pow(&(q - 2u32));
        let two = self.ring.constant(Integer::from(2));
        for _ in 0..=(32 - self.ring.k.leading_zeros()) {
            x = x.mul(&two.sub(&self.mul(&x)));
        }
        Ok(x)
    }

    fn eval_int_poly(&self, c: &[i64]) -> Self {
        let mut acc = self.ring.constant(Integer::new());
        for &a in c.iter().rev() {
            acc = acc.mul(self).add(&self.ring.constant(Integer::from(a)));
        }
        acc
    }

    /// The coefficient in `ℤ/p^k` when the element lies in `ℤ_p`.
    pub fn as_padic(&self) -> Option<PadicInt> {
        self.coeffs[1..]
            .iter()
            .all(|c| *c == 0)
            .then(|| PadicInt::new(self.ring.p(), self.ring.k, self.coeffs[0].clone()))
    }

    /// Residue-field image, for Frobenius checks.
    pub fn residue(&self) -> Vec<u64> {
        let p = self.ring.p();
        self.coeffs.iter().map(|c| Integer::from(c % p).to_u64().unwrap()).collect()
    }
}

/// `ι_𝒫(x)`: evaluates the power-basis expression at the place's root of unity.
pub fn embed_cyclotomic_padic(x: &CycloNumber, ring: &Arc<UnramifiedRing>) -> Result<UnramifiedElement> {
    let n = ring.place.conductor;
    if gcd(ring.p(), x.conductor as u64) != 1 {
        return Err(Error::BadReduction(ring.p()));
    }
    let x = x.lift(n)?;
    let root = ring.root();
    let mut acc = ring.constant(Integer::new());
    let mut pw = ring.constant(Integer::from(1));
    for c in &x.coeffs {
        if *c != 0 {
            let v = PadicInt::from_rational(ring.p(), ring.k, c)?;
            acc = acc.add(&pw.scale_int(&v.residue));
        }
        pw = pw.mul(&root);
    }
    Ok(acc)
}

/// Recognition precondition: `p^k > 2·H²·φ(N)²`.
pub fn padic_precision_ok(p: u64, k: u32, n: u32, height: u64) -> bool {
    let phi = crate::arith::euler_phi(n) as u64;
    let bound = Integer::from(height).pow(2) * 2u32 * Integer::from(phi).pow(2);
    ipow(p, k) > bound
}

/// Smallest `k` meeting the recognition precondition.
pub fn padic_min_precision(p: u64, n: u32, height: u64) -> u32 {
    (1..).find(|&k| padic_precision_ok(p, k, n, height)).unwrap()
}

/// Finds `c` with `Σ c_i ζ^i ≡ y mod p^k`, bounded height, over the place's conductor.
pub fn recognize_padic(y: &UnramifiedElement, height: u64) -> Result<Option<CycloNumber>> {
    let ring = &y.ring;
    let n = ring.place.conductor;
    let (p, k) = (ring.p(), ring.k);
    if !padic_precision_ok(p, k, n, height) {
        return Err(Error::InsufficientPrecision(format!("p^k = {p}^{k} too small for height {height}")));
    }
    let phi = crate::arith::euler_phi(n) as usize;
    let f = ring.degree();
    let dim = phi + 1 + f;
    let w = Integer::from(height) * 1024u32 * (phi as u32 + 1);
    let root = ring.root();
    let mut rows: Vec<Vec<Integer>> = Vec::with_capacity(dim);
    let mut push = |k: usize, v: &UnramifiedElement, sign: i32| {
        let mut r = vec![Integer::new(); dim];
        r[k] = Integer::from(1);
        for (t, c) in v.coeffs.iter().enumerate() {
            r[phi + 1 + t] = Integer::from(&w * c) * sign;
        }
        rows.push(r);
    };
    push(0, y, 1);
    let mut pw = ring.constant(Integer::from(1));
    for j in 0..phi {
        push(j + 1, &pw, -1);
        pw = pw.mul(&root);
    }
    for t in 0..f {
        let mut r = vec![Integer::new(); dim];
        r[phi + 1 + t] = Integer::from(&w * &ring.modulus);
        rows.push(r);
    }
    if !lll_reduce(&mut rows) {
        return Err(Error::Recognition("degenerate p-adic lattice".into()));
    }
    for r in &rows {
        if r[0] == 0 || r[phi + 1..].iter().any(|c| *c != 0) {
            continue;
        }
        let d = r[0].clone();
        if Integer::from(&d % p) == 0 {
            continue;
        }
        let coeffs: Vec<Rational> = r[1..=phi].iter().map(|c| Rational::from((c.clone(), d.clone()))).collect();
        let cand = CycloNumber { conductor: n, coeffs };
        if cand.height() > height {
            continue;
        }
        if embed_cyclotomic_padic(&cand, ring)? == *y {
            return Ok(Some(cand));
        }
    }
    Ok(None)
}

/// Recognition with precision escalation: the candidate found at `k` must reproduce the
/// value at `k + 10`. Returns the value and the precision that verified it.
pub fn recognize_padic_escalating<F>(eval: F, place: &FrobeniusPlace, height: u64, k_start: u32, k_max: u32) -> Result<(CycloNumber, u32)>
where
    F: Fn(&Arc<UnramifiedRing>) -> Result<UnramifiedElement>,
{
    let mut k = k_start.max(padic_min_precision(place.p, place.conductor, height));
    while k <= k_max {
        let ring = UnramifiedRing::new(place, k);
        if let Some(c) = recognize_padic(&eval(&ring)?, height)? {
            let hi = UnramifiedRing::new(place, k + 10);
            if embed_cyclotomic_padic(&c, &hi)? == eval(&hi)? {
                return Ok((c, k));
            }
        }
        k += 10;
    }
    Err(Error::Recognition(format!("no p-adic preimage of height <= {height} up to k = {k_max} at p = {}", place.p)))
}

/// Signed residue of `x mod p` as a small integer (for tests and reports).
pub fn small(x: &PadicInt) -> Option<i64> {
    x.signed().to_i64()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(a: i64, b: i64) -> Rational {
        Rational::from((a, b))
    }

    #[test]
    fn morita_examples() {
        assert_eq!(small(&morita_gamma(5, &q(3, 1), 6).unwrap()), Some(-2));
        for p in [2u64, 3, 5, 7, 11, 13] {
            assert_eq!(small(&morita_gamma(p, &q(1, 1), 5).unwrap()), Some(-1));
        }
        assert_eq!(morita_gamma(7, &q(1, 3), 1).unwrap().residue, 4);
        assert!(morita_gamma(3, &q(1, 3), 4).is_err());
    }

    #[test]
    fn fast_matches_naive() {
        for p in [2u64, 3, 5, 7, 11] {
            for k in 1..=4u32 {
                for (a, b) in [(1, 3), (2, 3), (-7, 9), (13, 15), (4, 7), (50, 13), (0, 1), (-1, 1)] {
                    let x = q(a, b);
                    let Ok(n) = morita_gamma_naive(p, &x, k) else { continue };
                    assert_eq!(morita_gamma(p, &x, k).unwrap(), n, "p={p} k={k} x={x}");
                }
            }
        }
    }

    #[test]
    fn gamma_hat_examples() {
        assert_eq!(small(&gamma_hat_p(3, 2, &[1, 2], 5, 20).unwrap()), Some(1));
        assert_eq!(small(&gamma_hat_p(3, 1, &[1, 2], 7, 20).unwrap()), Some(-1));
        for p in [31u64, 61] {
            assert_eq!(small(&gamma_hat_p(15, p as i64, &[9, 12, 7, 2], p, 12).unwrap()), Some(1));
        }
        assert!(gamma_hat_p(15, 1, &[9, 12, 7, 2], 5, 5).is_err());
    }

    #[test]
    fn factors_and_places() {
        assert_eq!(cyclotomic_factors(3, 7), vec![vec![5, 1], vec![3, 1]]);
        let pl = FrobeniusPlace::new(7, 3).unwrap();
        let ring = UnramifiedRing::new(&pl, 10);
        let z = embed_cyclotomic_padic(&CycloNumber::zeta_pow(3, 1), &ring).unwrap();
        assert_eq!(Integer::from(&z.coeffs[0] % 7), 2);
        assert!(z.eval_int_poly(&[1, 1, 1]).is_zero());
        for (p, m) in [(2u64, 15u32), (7, 15), (11, 15), (13, 15), (3, 5), (5, 9)] {
            let fs = cyclotomic_factors(m, p);
            let f = mult_order(p, m as u64) as usize;
            assert_eq!(fs.len() * f, crate::arith::euler_phi(m) as usize);
            let mut prod = vec![1u64];
            for g in &fs {
                assert_eq!(g.len() - 1, f);
                prod = fp_mul(&prod, g, p);
            }
            assert_eq!(prod, cyclotomic_mod(m, p));
        }
        assert!(FrobeniusPlace::new(5, 15).is_err());
    }

    #[test]
    fn frobenius_units() {
        assert_eq!(frobenius_unit(2, 15, Orientation::Geometric).unwrap(), 8);
        assert_eq!(frobenius_unit(7, 3, Orientation::Geometric).unwrap(), 1);
        assert_eq!(frobenius_unit(5, 3, Orientation::Geometric).unwrap(), 2);
        assert_eq!(frobenius_unit(7, 15, Orientation::Arithmetic).unwrap(), 7);
    }

    #[test]
    fn place_extension_is_compatible() {
        let pl = FrobeniusPlace::new(7, 15).unwrap();
        let big = pl.extend(60).unwrap();
        let r15 = UnramifiedRing::new(&pl, 8);
        let r60 = UnramifiedRing::new(&big, 8);
        let x = CycloNumber::from_ints(15, &[1, 0, 2, 0, 0, -3]);
        let a = embed_cyclotomic_padic(&x, &r15).unwrap();
        let b = embed_cyclotomic_padic(&x, &r60).unwrap();
        // both rings contain the same ζ_15 mod p: compare via a polynomial identity
        let g15: Vec<i64> = pl.factor.iter().map(|&c| c as i64).collect();
        let z = r60.root().pow(&Integer::from(4));
        let g_at = z.eval_int_poly(&g15);
        assert_eq!(Integer::from(&g_at.coeffs[0] % 7), 0);
        assert!(g_at.residue().iter().all(|&c| c == 0));
        assert!(a.is_unit() && b.is_unit());
    }

    #[test]
    fn embedding_is_homomorphism() {
        let pl = FrobeniusPlace::new(7, 15).unwrap();
        let ring = UnramifiedRing::new(&pl, 12);
        let x = CycloNumber::from_ints(15, &[1, 2, 0, -1, 0, 3]);
        let y = CycloNumber::from_poly(15, vec![q(1, 2), q(0, 1), q(-5, 3)]);
        let ex = embed_cyclotomic_padic(&x, &ring).unwrap();
        let ey = embed_cyclotomic_padic(&y, &ring).unwrap();
        assert_eq!(embed_cyclotomic_padic(&x.mul(&y).unwrap(), &ring).unwrap(), ex.mul(&ey));
        assert_eq!(embed_cyclotomic_padic(&x.add(&y).unwrap(), &ring).unwrap(), ex.add(&ey));
        assert_eq!(ex.mul(&ex.inv().unwrap()), ring.constant(Integer::from(1)));
        let r = CycloNumber::from_rational(15, q(3, 4));
        assert_eq!(embed_cyclotomic_padic(&r, &ring).unwrap().as_padic().unwrap(), PadicInt::from_rational(7, 12, &q(3, 4)).unwrap());
    }

    #[test]
    fn frobenius_compatibility() {
        for (p, m) in [(7u64, 15u32), (2, 15), (11, 15), (3, 5)] {
            let pl = FrobeniusPlace::new(p, m).unwrap();
            let ring = UnramifiedRing::new(&pl, 3);
            let x = CycloNumber::from_ints(m, &[2, -1, 0, 1]);
            let lhs = embed_cyclotomic_padic(&x.galois_sigma(p as i64).unwrap(), &ring).unwrap();
            let rhs = embed_cyclotomic_padic(&x, &ring).unwrap().pow(&Integer::from(p));
            assert_eq!(lhs.residue(), rhs.residue());
        }
    }

    #[test]
    fn recognize_examples() {
        let pl = FrobeniusPlace::new(7, 3).unwrap();
        let h = 1000;
        let k = padic_min_precision(7, 3, h);
        let ring = UnramifiedRing::new(&pl, k + 5);
        let x = CycloNumber::zeta_pow(3, 1).add(&CycloNumber::from_rational(3, q(1, 2))).unwrap();
        let y = embed_cyclotomic_padic(&x, &ring).unwrap();
        assert_eq!(recognize_padic(&y, h).unwrap(), Some(x));
        let pl5 = FrobeniusPlace::new(5, 3).unwrap();
        let r5 = UnramifiedRing::new(&pl5, 20);
        assert_eq!(recognize_padic(&r5.constant(Integer::from(-1)), h).unwrap(), Some(CycloNumber::from_int(3, -1)));
        let junk = r5.constant(Integer::from(123456789123456789u64));
        assert_eq!(recognize_padic(&junk, 10).unwrap(), None);
        assert!(recognize_padic(&UnramifiedRing::new(&pl5, 2).constant(Integer::from(1)), h).is_err());
    }

    #[test]
    fn escalating_recognition() {
        let pl = FrobeniusPlace::new(7, 15).unwrap();
        let x = CycloNumber::from_ints(15, &[1, 0, 0, 0, 0, 2]);
        let (c, _) = recognize_padic_escalating(|r| embed_cyclotomic_padic(&x, r), &pl, 1_000_000, 20, 80).unwrap();
        assert_eq!(c, x);
    }

    #[test]
    fn padic_json() {
        let x = PadicInt::from_i64(5, 3, -1);
        let s = serde_json::to_string(&x).unwrap();
        assert_eq!(s, r#"{"p":5,"k":3,"residue":"124"}"#);
        assert_eq!(serde_json::from_str::<PadicInt>(&s).unwrap(), x);
    }

    proptest! {
        #![proptest_config(crate::testutil::pt(64))]
        #[test]
        fn continuity(p in proptest::sample::select(vec![3u64, 5, 7, 11]), a in -500i64..500, b in 1i64..40, j in 1u32..4) {
            prop_assume!(b % p as i64 != 0);
            let x = q(a, b);
            let xp = x.clone() + Rational::from(ipow(p, j)) * 3u32;
            let g1 = morita_gamma(p, &x, 6).unwrap().reduce_to(j);
            let g2 = morita_gamma(p, &xp, 6).unwrap().reduce_to(j);
            prop_assert_eq!(g1, g2);
        }

        #[test]
        fn reflection(p in proptest::sample::select(vec![3u64, 5, 7, 11, 13]), a in -300i64..300, b in 1i64..30) {
            prop_assume!(b % p as i64 != 0);
            let x = q(a, b);
            let k = 6;
            let g = morita_gamma(p, &x, k).unwrap();
            let h = morita_gamma(p, &(Rational::from(1) - x.clone()), k).unwrap();
            prop_assert!(g.is_unit());
            let r0 = PadicInt::from_rational(p, 1, &x).unwrap().residue.to_u64().unwrap();
            let r = if r0 == 0 { p } else { r0 };
            let sign = if r % 2 == 0 { 1 } else { -1 };
            prop_assert_eq!(g.mul(&h), PadicInt::from_i64(p, k, sign));
        }
    }
}
