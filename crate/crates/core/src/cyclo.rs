//! Exact arithmetic in `ℚ(ζ_M)` over the power basis, and recognition of complex
//! approximations as elements of cyclotomic fields.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use rug::{Float, Integer, Rational};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::arith::{divisors, euler_phi, gcd, inv_mod, lcm, rep0};
use crate::error::{Error, Result};
use crate::numerics::{two_pow, Cx};

fn cyclotomic_cache() -> &'static Mutex<HashMap<u32, Arc<Vec<i64>>>> {
    static C: OnceLock<Mutex<HashMap<u32, Arc<Vec<i64>>>>> = OnceLock::new();
    C.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Coefficients (low degree first) of the `n`-th cyclotomic polynomial.
pub fn cyclotomic_poly(n: u32) -> Arc<Vec<i64>> {
    if let Some(p) = cyclotomic_cache().lock().unwrap().get(&n) {
        return p.clone();
    }
    let mut num = vec![0i64; n as usize + 1];
    num[0] = -1;
    num[n as usize] = 1;
    for d in divisors(n) {
        if d == n {
            continue;
        }
        let den = cyclotomic_poly(d);
        num = exact_div(&num, &den);
    }
    let p = Arc::new(num);
    cyclotomic_cache().lock().unwrap().insert(n, p.clone());
    p
}

fn exact_div(num: &[i64], den: &[i64]) -> Vec<i64> {
    let mut r = num.to_vec();
    let dn = den.len() - 1;
    let mut q = vec![0i64; num.len() - dn];
    for i in (0..q.len()).rev() {
        let c = r[i + dn];
        q[i] = c;
        for (j, &dj) in den.iter().enumerate() {
            r[i + j] -= c * dj;
        }
    }
    debug_assert!(r.iter().all(|&x| x == 0));
    q
}

/// Element of `ℚ(ζ_M)` as a rational vector of length `φ(M)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CycloNumber {
    pub conductor: u32,
    pub coeffs: Vec<Rational>,
}

/// Reduces a polynomial in `ζ_M` modulo `Φ_M`.
fn reduce(m: u32, mut p: Vec<Rational>) -> Vec<Rational> {
    let phi = cyclotomic_poly(m);
    let deg = phi.len() - 1;
    if p.len() > deg {
        for i in (deg..p.len()).rev() {
            if p[i] == 0 {
                continue;
            }
            let c = std::mem::take(&mut p[i]);
            for (j, &pj) in phi.iter().enumerate().take(deg) {
                if pj != 0 {
                    let t = Rational::from(&c * pj);
                    p[i - deg + j] -= t;
                }
            }
        }
    }
    p.resize(deg, Rational::new());
    p
}

fn poly_trim(p: &mut Vec<Rational>) {
    while p.last().is_some_and(|x| *x == 0) {
        p.pop();
    }
}

fn poly_mul(a: &[Rational], b: &[Rational]) -> Vec<Rational> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut r = vec![Rational::new(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if *x == 0 {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            if *y != 0 {
                r[i + j] += Rational::from(x * y);
            }
        }
    }
    r
}

fn poly_sub(a: &[Rational], b: &[Rational]) -> Vec<Rational> {
    let n = a.len().max(b.len());
    let mut r: Vec<Rational> = (0..n)
        .map(|i| {
            let x = a.get(i).cloned().unwrap_or_default();
            let y = b.get(i).cloned().unwrap_or_default();
            x - y
        })
        .collect();
    poly_trim(&mut r);
    r
}

fn poly_divrem(a: &[Rational], b: &[Rational]) -> (Vec<Rational>, Vec<Rational>) {
    let mut r = a.to_vec();
    poly_trim(&mut r);
    let db = b.len() - 1;
    let lead = b[db].clone();
    if r.len() < b.len() {
        return (Vec::new(), r);
    }
    let mut q = vec![Rational::new(); r.len() - db];
    while r.len() >= b.len() {
        let shift = r.len() - b.len();
        let c = Rational::from(r.last().unwrap() / &lead);
        for (j, bj) in b.iter().enumerate() {
            r[shift + j] -= Rational::from(&c * bj);
        }
        q[shift] = c;
        r.pop();
        poly_trim(&mut r);
    }
    (q, r)
}

impl CycloNumber {
    pub fn zero(m: u32) -> Self {
        Self { conductor: m, coeffs: vec![Rational::new(); euler_phi(m) as usize] }
    }

    pub fn from_rational(m: u32, q: Rational) -> Self {
        let mut z = Self::zero(m);
        z.coeffs[0] = q;
        z
    }

    pub fn one(m: u32) -> Self {
        Self::from_rational(m, Rational::from(1))
    }

    pub fn from_int(m: u32, n: i64) -> Self {
        Self::from_rational(m, Rational::from(n))
    }

    /// `ζ_M^k`.
    pub fn zeta_pow(m: u32, k: i64) -> Self {
        let k = rep0(k, m) as usize;
        let mut p = vec![Rational::new(); k + 1];
        p[k] = Rational::from(1);
        Self { conductor: m, coeffs: reduce(m, p) }
    }

    /// Builds from an arbitrary polynomial in `ζ_M` (low degree first).
    pub fn from_poly(m: u32, p: Vec<Rational>) -> Self {
        let mut full = vec![Rational::new(); p.len().max(1)];
        for (i, c) in p.into_iter().enumerate() {
            full[i % m as usize] += c;
        }
        Self { conductor: m, coeffs: reduce(m, full) }
    }

    pub fn from_ints(m: u32, c: &[i64]) -> Self {
        Self::from_poly(m, c.iter().map(|&x| Rational::from(x)).collect())
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == 0)
    }

    pub fn is_rational(&self) -> bool {
        self.coeffs.iter().skip(1).all(|c| *c == 0)
    }

    pub fn as_rational(&self) -> Option<Rational> {
        self.is_rational().then(|| self.coeffs[0].clone())
    }

    /// Re-expresses in `ℚ(ζ_N)` for a multiple `N` of the conductor.
    pub fn lift(&self, n: u32) -> Result<Self> {
        if n % self.conductor != 0 {
            return Err(Error::ModulusMismatch(self.conductor, n));
        }
        if n == self.conductor {
            return Ok(self.clone());
        }
        let step = (n / self.conductor) as usize;
        let mut p = vec![Rational::new(); step * self.coeffs.len().max(1)];
        for (i, c) in self.coeffs.iter().enumerate() {
            p[i * step] = c.clone();
        }
        Ok(Self { conductor: n, coeffs: reduce(n, p) })
    }

    fn common(&self, o: &Self) -> Result<(Self, Self)> {
        if self.conductor == o.conductor {
            return Ok((self.clone(), o.clone()));
        }
        let n = lcm(self.conductor as u64, o.conductor as u64) as u32;
        Ok((self.lift(n)?, o.lift(n)?))
    }

    pub fn add(&self, o: &Self) -> Result<Self> {
        let (a, b) = self.common(o)?;
        let coeffs = a.coeffs.into_iter().zip(b.coeffs).map(|(x, y)| x + y).collect();
        Ok(Self { conductor: a.conductor, coeffs })
    }

    pub fn sub(&self, o: &Self) -> Result<Self> {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> Self {
        Self { conductor: self.conductor, coeffs: self.coeffs.iter().map(|c| Rational::from(-c)).collect() }
    }

    pub fn scale(&self, q: &Rational) -> Self {
        Self { conductor: self.conductor, coeffs: self.coeffs.iter().map(|c| Rational::from(c * q)).collect() }
    }

    pub fn mul(&self, o: &Self) -> Result<Self> {
        let (a, b) = self.common(o)?;
        let p = poly_mul(&a.coeffs, &b.coeffs);
        Ok(Self { conductor: a.conductor, coeffs: reduce(a.conductor, p) })
    }

    pub fn inverse(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let m = self.conductor;
        let phi: Vec<Rational> = cyclotomic_poly(m).iter().map(|&c| Rational::from(c)).collect();
        let mut a = self.coeffs.clone();
        poly_trim(&mut a);
        // Extended Euclid: track s with s·self ≡ r (mod Φ).
        let (mut r0, mut r1) = (phi, a);
        let (mut s0, mut s1): (Vec<Rational>, Vec<Rational>) = (Vec::new(), vec![Rational::from(1)]);
        while r1.len() > 1 {
            let (q, r) = poly_divrem(&r0, &r1);
            let s = poly_sub(&s0, &poly_mul(&q, &s1));
            r0 = std::mem::replace(&mut r1, r);
            s0 = std::mem::replace(&mut s1, s);
        }
        if r1.is_empty() {
            return Err(Error::DivisionByZero);
        }
        let c = r1[0].clone();
        let inv: Vec<Rational> = s1.into_iter().map(|x| x / &c).collect();
        Ok(Self { conductor: m, coeffs: reduce(m, inv) })
    }

    pub fn div(&self, o: &Self) -> Result<Self> {
        self.mul(&o.inverse()?)
    }

    pub fn pow(&self, e: i64) -> Result<Self> {
        let mut base = if e < 0 { self.inverse()? } else { self.clone() };
        let mut e = e.unsigned_abs();
        let mut acc = Self::one(self.conductor);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base)?;
            }
            base = base.mul(&base)?;
            e >>= 1;
        }
        Ok(acc)
    }

    /// `ζ_M ↦ ζ_M^u`.
    pub fn galois_sigma(&self, u: i64) -> Result<Self> {
        let m = self.conductor;
        let ur = rep0(u, m);
        if gcd(ur as u64, m as u64) != 1 && m > 1 {
            return Err(Error::NotAUnit(u, m as u64));
        }
        let mut p = vec![Rational::new(); m as usize];
        for (k, c) in self.coeffs.iter().enumerate() {
            if *c != 0 {
                let idx = (k as u64 * ur as u64 % m as u64) as usize;
                p[idx] += c;
            }
        }
        Ok(Self { conductor: m, coeffs: reduce(m, p) })
    }

    pub fn conj(&self) -> Self {
        self.galois_sigma(-1).expect("-1 is a unit")
    }

    /// Evaluation at `ζ_M = exp(2πi k / M)`.
    pub fn embed_at(&self, k: i64, prec: u32) -> Cx {
        let w = prec + 32;
        let mut acc = Cx::real(Float::new(w));
        for (j, c) in self.coeffs.iter().enumerate() {
            if *c == 0 {
                continue;
            }
            let z = Cx::root_of_unity(k * j as i64, self.conductor, w);
            acc = acc.add(&z.scale(&Float::with_val(w, c)));
        }
        acc.set_prec(prec)
    }

    /// Evaluation at `ζ_M = exp(2πi / M)`.
    pub fn embed_complex(&self, prec: u32) -> Cx {
        self.embed_at(1, prec)
    }

    /// Whether this is a root of unity (its order then divides `lcm(2, M)`).
    pub fn is_root_of_unity(&self) -> bool {
        let l = lcm(2, self.conductor as u64) as i64;
        self.pow(l).map(|x| x == Self::one(self.conductor)).unwrap_or(false)
    }

    /// Smallest `d | M` with the value in `ℚ(ζ_d)`.
    pub fn minimal_conductor(&self) -> u32 {
        let m = self.conductor;
        for d in divisors(m) {
                let fixed = (1..m as u64)
                .filter(|&u| gcd(u, m as u64) == 1 && u % d as u64 == 1 % d as u64)
                .all(|u| self.galois_sigma(u as i64).map(|y| y == *self).unwrap_or(false));
            if fixed {
                return d;
            }
        }
        m
    }

    /// Rewrites over `ℚ(ζ_d)` for `d | M`, if the value lies there.
    pub fn descend(&self, d: u32) -> Option<Self> {
        if self.conductor % d != 0 {
            return None;
        }
        if d == self.conductor {
            return Some(self.clone());
        }
        let n = euler_phi(d) as usize;
        let cols: Vec<Vec<Rational>> = (0..n).map(|j| Self::zeta_pow(d, j as i64).lift(self.conductor).unwrap().coeffs).collect();
        let sol = solve_rational(&cols, &self.coeffs)?;
        Some(Self { conductor: d, coeffs: sol })
    }

    /// The same value over its minimal conductor (odd `M` and `2M` identified).
    pub fn normalized(&self) -> Self {
        let d = self.minimal_conductor();
        self.descend(d).expect("fixed field descent")
    }

    /// Largest denominator/numerator size among coefficients.
    pub fn height(&self) -> Integer {
        self.coeffs
            .iter()
            .flat_map(|c| [Integer::from(c.numer().abs_ref()), c.denom().clone()])
            .max()
            .unwrap_or_default()
    }
}

/// Solves `Σ x_j cols[j] = b` over ℚ; `None` if inconsistent.
fn solve_rational(cols: &[Vec<Rational>], b: &[Rational]) -> Option<Vec<Rational>> {
    let n = cols.len();
    let rows = b.len();
    let mut a: Vec<Vec<Rational>> = (0..rows)
        .map(|i| cols.iter().map(|c| c[i].clone()).chain([b[i].clone()]).collect())
        .collect();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..n {
        let Some(p) = (r..rows).find(|&i| a[i][c] != 0) else { continue };
        a.swap(r, p);
        let inv = Rational::from(1) / a[r][c].clone();
        for x in a[r].iter_mut() {
            *x *= &inv;
        }
        for i in 0..rows {
            if i != r && a[i][c] != 0 {
                let f = a[i][c].clone();
                for j in 0..=n {
                    let t = Rational::from(&f * &a[r][j]);
                    a[i][j] -= t;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    if a[r..].iter().any(|row| row[n] != 0) {
        return None;
    }
    let mut x = vec![Rational::new(); n];
    for (i, &c) in pivots.iter().enumerate() {
        x[c] = a[i][n].clone();
    }
    Some(x)
}

impl fmt::Display for CycloNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut terms = Vec::new();
        for (k, c) in self.coeffs.iter().enumerate() {
            if *c == 0 {
                continue;
            }
            terms.push(match k {
                0 => format!("{c}"),
                1 => format!("({c})*z{}", self.conductor),
                _ => format!("({c})*z{}^{k}", self.conductor),
            });
        }
        if terms.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", terms.join(" + "))
        }
    }
}

#[derive(Serialize, Deserialize)]
struct CycloJson {
    #[serde(rename = "M")]
    m: u32,
    coeffs: Vec<[String; 2]>,
}

impl Serialize for CycloNumber {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        CycloJson {
            m: self.conductor,
            coeffs: self.coeffs.iter().map(|c| [c.numer().to_string(), c.denom().to_string()]).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for CycloNumber {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let j = CycloJson::deserialize(d)?;
        if j.m == 0 || j.coeffs.len() != euler_phi(j.m) as usize {
            return Err(D::Error::custom("coefficient count must equal φ(M)"));
        }
        let coeffs = j
            .coeffs
            .iter()
            .map(|[n, d]| {
                let n: Integer = n.parse().map_err(D::Error::custom)?;
                let d: Integer = d.parse().map_err(D::Error::custom)?;
                if d == 0 {
                    return Err(D::Error::custom("zero denominator"));
                }
                Ok(Rational::from((n, d)))
            })
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Ok(CycloNumber { conductor: j.m, coeffs })
    }
}

pub const DEFAULT_HEIGHT: u64 = 1_000_000;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RecognitionResult {
    pub value: Option<CycloNumber>,
    pub conductor: u32,
    /// `log2 |embed(value) − z|` relative to `max(1, |z|)`; `None` without a candidate.
    pub residual_log2: Option<f64>,
    pub verified: bool,
    pub prec: u32,
    pub diagnostics: String,
}

/// Bits demanded by the recognition precondition.
pub fn required_precision(m: u32, height: u64) -> u32 {
    let phi = euler_phi(m) as f64;
    let lh = (height.max(2) as f64).log2();
    (2.0 * (phi + 1.0) * lh).ceil() as u32 + 64
}

fn log2_of(x: &Float) -> f64 {
    if x.is_zero() {
        f64::NEG_INFINITY
    } else {
        let (m, e) = x.to_f64_exp();
        m.abs().log2() + e as f64
    }
}

fn scaled_round(x: &Float, shift: i32) -> Integer {
    let y = Float::with_val(x.prec() + 64, x * two_pow(shift, x.prec() + 64));
    y.round().to_integer().unwrap_or_default()
}

/// Relative distance `|embed(c) − z| / max(1, |z|)` as `log2`.
fn residual(c: &CycloNumber, z: &Cx, prec: u32) -> f64 {
    let e = c.embed_complex(2 * prec);
    let d = e.dist(&z.set_prec(2 * prec));
    let scale = z.abs();
    let rel = if scale > 1 { d / scale } else { d };
    log2_of(&rel)
}

/// Integer-relation search for `d·z = Σ c_k ζ_M^k`.
pub fn recognize(z: &Cx, m: u32, height: u64, prec: u32) -> Result<RecognitionResult> {
    let need = required_precision(m, height);
    if prec < need {
        return Err(Error::InsufficientPrecision(format!("recognition at M={m} needs {need} bits, got {prec}")));
    }
    let z = z.set_prec(prec);
    let phi = euler_phi(m) as usize;
    let mag = log2_of(&z.abs()).max(0.0).ceil() as i32;
    let shift = prec as i32 - 16 - mag;
    let w = prec + 16;
    let tiny = |x: &Float| log2_of(x) < -(prec as f64) / 2.0 + mag as f64;
    // Real values live in the real subfield, purely imaginary ones in its (ζ - ζ^{-1})
    // multiple; both halve the lattice dimension.
    let half = phi / 2;
    let (vals, elems): (Vec<Vec<Integer>>, Vec<CycloNumber>) = if phi >= 2 && tiny(&z.im) {
        let mut v = vec![vec![scaled_round(&z.re, shift)]];
        let mut e = Vec::new();
        for k in 0..half {
            let c = if k == 0 { CycloNumber::one(m) } else { CycloNumber::zeta_pow(m, k as i64).add(&CycloNumber::zeta_pow(m, -(k as i64)))? };
            v.push(vec![-scaled_round(&c.embed_complex(w).re, shift)]);
            e.push(c);
        }
        (v, e)
    } else if phi >= 2 && tiny(&z.re) {
        let mut v = vec![vec![scaled_round(&z.im, shift)]];
        let mut e = Vec::new();
        for k in 1..=half {
            let c = CycloNumber::zeta_pow(m, k as i64).sub(&CycloNumber::zeta_pow(m, -(k as i64)))?;
            v.push(vec![-scaled_round(&c.embed_complex(w).im, shift)]);
            e.push(c);
        }
        (v, e)
    } else {
        let mut v = vec![vec![scaled_round(&z.re, shift), scaled_round(&z.im, shift)]];
        let mut e = Vec::new();
        for k in 0..phi {
            let c = Cx::root_of_unity(k as i64, m, w);
            v.push(vec![-scaled_round(&c.re, shift), -scaled_round(&c.im, shift)]);
            e.push(CycloNumber::zeta_pow(m, k as i64));
        }
        (v, e)
    };
    let rows = crate::lll::integer_relation_basis(&vals, shift.max(1) as u32, 64)
        .ok_or_else(|| Error::Recognition("degenerate recognition lattice".into()))?;
    let threshold = -(prec as f64) / 2.0;
    let mut best: Option<(CycloNumber, f64)> = None;
    for r in &rows {
        if r[0] == 0 {
            continue;
        }
        let d = r[0].clone();
        let mut cand = CycloNumber::zero(m);
        for (c, e) in r[1..=elems.len()].iter().zip(&elems) {
            if *c != 0 {
                cand = cand.add(&e.scale(&Rational::from((c.clone(), d.clone()))))?;
            }
        }
        if cand.height() > height {
            continue;
        }
        let res = residual(&cand, &z, prec);
        if best.as_ref().map_or(true, |(_, b)| res < *b) {
            best = Some((cand, res));
        }
        if res <= threshold {
            break;
        }
    }
    Ok(match best {
        Some((c, res)) => {
            let verified = res <= threshold;
            let diagnostics =
                if verified { String::new() } else { format!("best residual 2^{res:.1} above 2^{threshold:.1}") };
            RecognitionResult { value: Some(c), conductor: m, residual_log2: Some(res), verified, prec, diagnostics }
        }
        None => RecognitionResult {
            value: None,
            conductor: m,
            residual_log2: None,
            verified: false,
            prec,
            diagnostics: format!("no relation with height <= {height}"),
        },
    })
}

/// Conductors tried by the ladder for base `m`, stopping once `φ(M)` exceeds `max_phi`.
pub fn ladder_conductors(m: u32, max_phi: u32) -> Vec<u32> {
    let canon = |n: u32| if n % 4 == 2 { n / 2 } else { n };
    let mut out: Vec<u32> = Vec::new();
    let push = |n: u32, out: &mut Vec<u32>| {
        let n = canon(n);
        if euler_phi(n) <= max_phi && !out.contains(&n) {
            out.push(n);
        }
    };
    let base = [m, lcm(m as u64, 4) as u32, lcm(m as u64, 8) as u32, lcm(m as u64, 24) as u32];
    for n in base {
        push(n, &mut out);
    }
    let mut prev = base[3];
    while euler_phi(2 * prev) <= max_phi {
        prev *= 2;
        push(prev, &mut out);
    }
    out
}

pub const DEFAULT_LADDER_PHI: u32 = 64;

/// Tries each ladder conductor, evaluating `z` at the precision it requires; a verified
/// candidate must also match a fresh evaluation at doubled precision.
pub fn recognition_ladder<F>(eval: F, m: u32, height: u64, max_phi: u32) -> Result<RecognitionResult>
where
    F: Fn(u32) -> Result<Cx>,
{
    let mut last = None;
    for n in ladder_conductors(m, max_phi) {
        let prec = required_precision(n, height) + 32;
        let z = eval(prec)?;
        let mut r = recognize(&z, n, height, prec)?;
        if r.verified {
            let c = r.value.clone().expect("verified has value");
            let z2 = eval(2 * prec)?;
            let res2 = residual(&c, &z2, 2 * prec);
            if res2 <= -(prec as f64) {
                r.value = Some(c.normalized());
                return Ok(r);
            }
            r.verified = false;
            r.diagnostics = format!("unstable under precision doubling (2^{res2:.1})");
        }
        last = Some(r);
    }
    let mut r = last.unwrap_or(RecognitionResult {
        value: None,
        conductor: m,
        residual_log2: None,
        verified: false,
        prec: 0,
        diagnostics: String::new(),
    });
    r.value = None;
    r.diagnostics = format!("ladder exhausted (max φ = {max_phi}); {}", r.diagnostics);
    Ok(r)
}

/// `u^{-1} mod M` as a signed exponent.
pub fn unit_inverse(u: i64, m: u32) -> Result<i64> {
    inv_mod(u, m as u64).map(|x| x as i64).ok_or(Error::NotAUnit(u, m as u64))
}
