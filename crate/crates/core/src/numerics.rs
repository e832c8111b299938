//! Arbitrary-precision Γ values, period quantities and cup products.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use rug::float::Constant;
use rug::ops::Pow;
use rug::{Float, Integer, Rational};
use serde::{Deserialize, Serialize};

use crate::arith::{rep0, rep1};
use crate::error::{Error, Result};
use crate::lattice::ExponentVector;

/// Complex number with MPFR components.
#[derive(Clone, Debug, PartialEq)]
pub struct Cx {
    pub re: Float,
    pub im: Float,
}

impl Cx {
    pub fn new(re: Float, im: Float) -> Self {
        Self { re, im }
    }

    pub fn real(re: Float) -> Self {
        let im = Float::new(re.prec());
        Self { re, im }
    }

    pub fn from_rational(q: &Rational, prec: u32) -> Self {
        Self::real(Float::with_val(prec, q))
    }

    pub fn prec(&self) -> u32 {
        self.re.prec()
    }

    /// `exp(2πi k / n)`.
    pub fn root_of_unity(k: i64, n: u32, prec: u32) -> Self {
        let k = rep0(k, n);
        let w = prec + 16;
        let theta = Float::with_val(w, Constant::Pi) * 2u32 * k / n;
        let (s, c) = theta.sin_cos(Float::new(w));
        Self::new(Float::with_val(prec, c), Float::with_val(prec, s))
    }

    /// `i^k`.
    pub fn i_pow(k: i64, prec: u32) -> Self {
        let (re, im) = match k.rem_euclid(4) {
            0 => (1, 0),
            1 => (0, 1),
            2 => (-1, 0),
            _ => (0, -1),
        };
        Self::new(Float::with_val(prec, re), Float::with_val(prec, im))
    }

    pub fn add(&self, o: &Cx) -> Cx {
        Cx::new(Float::with_val(self.prec(), &self.re + &o.re), Float::with_val(self.prec(), &self.im + &o.im))
    }

    pub fn sub(&self, o: &Cx) -> Cx {
        Cx::new(Float::with_val(self.prec(), &self.re - &o.re), Float::with_val(self.prec(), &self.im - &o.im))
    }

    pub fn mul(&self, o: &Cx) -> Cx {
        let p = self.prec();
        let re = Float::with_val(p, &self.re * &o.re) - Float::with_val(p, &self.im * &o.im);
        let im = Float::with_val(p, &self.re * &o.im) + Float::with_val(p, &self.im * &o.re);
        Cx::new(re, im)
    }

    pub fn scale(&self, s: &Float) -> Cx {
        Cx::new(Float::with_val(self.prec(), &self.re * s), Float::with_val(self.prec(), &self.im * s))
    }

    pub fn norm_sqr(&self) -> Float {
        let p = self.prec();
        Float::with_val(p, self.re.clone().square()) + Float::with_val(p, self.im.clone().square())
    }

    pub fn abs(&self) -> Float {
        self.norm_sqr().sqrt()
    }

    pub fn conj(&self) -> Cx {
        Cx::new(self.re.clone(), Float::with_val(self.prec(), -&self.im))
    }

    pub fn inv(&self) -> Result<Cx> {
        let n = self.norm_sqr();
        if n.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let c = self.conj();
        Ok(Cx::new(Float::with_val(self.prec(), &c.re / &n), Float::with_val(self.prec(), &c.im / &n)))
    }

    pub fn div(&self, o: &Cx) -> Result<Cx> {
        Ok(self.mul(&o.inv()?))
    }

    pub fn set_prec(&self, prec: u32) -> Cx {
        Cx::new(Float::with_val(prec, &self.re), Float::with_val(prec, &self.im))
    }

    /// `|self - o|`.
    pub fn dist(&self, o: &Cx) -> Float {
        self.sub(o).abs()
    }

    /// Decimal strings with `digits` significant digits.
    pub fn to_decimal(&self, digits: usize) -> (String, String) {
        (self.re.to_string_radix(10, Some(digits)), self.im.to_string_radix(10, Some(digits)))
    }
}

/// Extra working bits for `count` multiplicative factors.
pub fn guard_bits(count: usize) -> u32 {
    64 + (usize::BITS - count.leading_zeros())
}

fn gamma_cache() -> &'static Mutex<HashMap<(u64, u64, u32), Float>> {
    static CACHE: OnceLock<Mutex<HashMap<(u64, u64, u32), Float>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// `Γ(x)` for rational `x > 0`.
pub fn gamma_rational(x: &Rational, prec: u32) -> Result<Float> {
    if *x <= 0 {
        return Err(Error::NonPositive);
    }
    let key = x.numer().to_u64().zip(x.denom().to_u64()).map(|(n, d)| (n, d, prec));
    if let Some(k) = key {
        if let Some(v) = gamma_cache().lock().unwrap().get(&k) {
            return Ok(v.clone());
        }
    }
    let w = prec + 32;
    let v = Float::with_val(prec, Float::with_val(w, x).gamma());
    if let Some(k) = key {
        gamma_cache().lock().unwrap().insert(k, v.clone());
    }
    Ok(v)
}

fn gamma_frac(a: i64, m: u32, prec: u32) -> Float {
    gamma_rational(&Rational::from((a, m as i64)), prec).expect("positive argument")
}

/// Relative error of `Γ(x)Γ(1-x) sin(πx) / π = 1` for `0 < x < 1`.
pub fn reflection_defect(x: &Rational, prec: u32) -> Result<Float> {
    let w = prec + 32;
    let one_minus = Rational::from(1) - x.clone();
    let g = Float::with_val(w, gamma_rational(x, w)? * gamma_rational(&one_minus, w)?);
    let pi = Float::with_val(w, Constant::Pi);
    let s = Float::with_val(w, &pi * Float::with_val(w, x)).sin();
    let lhs = Float::with_val(w, g * s) / &pi;
    Ok(Float::with_val(prec, lhs - 1u32).abs())
}

/// Relative error of Legendre duplication `Γ(x)Γ(x+1/2) = 2^{1-2x} √π Γ(2x)`.
pub fn duplication_defect(x: &Rational, prec: u32) -> Result<Float> {
    let w = prec + 32;
    let half = Rational::from((1, 2));
    let lhs = Float::with_val(w, gamma_rational(x, w)? * gamma_rational(&(x.clone() + half), w)?);
    let two_x = Rational::from(x * 2u32);
    let e = Float::with_val(w, 1 - Float::with_val(w, &two_x));
    let rhs = Float::with_val(w, Float::with_val(w, 2u32).pow(e) * Float::with_val(w, Constant::Pi).sqrt());
    let rhs = rhs * gamma_rational(&two_x, w)?;
    Ok(Float::with_val(prec, lhs / rhs - 1u32).abs())
}

/// `μ_i = (m - 2i) / m`.
pub fn mu(m: u32, i: u32) -> Rational {
    Rational::from((m as i64 - 2 * i as i64, m as i64))
}

/// `μ_β = ∏ μ_{i_r}`.
pub fn mu_char(m: u32, idx: &[u32]) -> Rational {
    idx.iter().fold(Rational::from(1), |acc, &i| acc * mu(m, i))
}

/// `r_β = ∏_{i_r > m/2} (-μ_{i_r})^{-1}`, so that `P(β) = r_β Γ̂(β)`.
pub fn r_factor(m: u32, idx: &[u32]) -> Rational {
    idx.iter()
        .filter(|&&i| 2 * i > m)
        .fold(Rational::from(1), |acc, &i| acc / (-mu(m, i)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Normalization {
    #[serde(rename = "P")]
    P,
    #[serde(rename = "Phat")]
    PHat,
}

#[derive(Clone, Debug)]
pub struct PeriodValue {
    pub m: u32,
    pub beta: Vec<u32>,
    pub norm: Normalization,
    pub value: Cx,
    pub prec: u32,
}

#[derive(Serialize, Deserialize)]
pub struct PeriodValueJson {
    pub beta: Vec<u32>,
    pub norm: Normalization,
    pub re: String,
    pub im: String,
    pub prec: u32,
}

impl PeriodValue {
    pub fn to_json(&self) -> PeriodValueJson {
        let digits = (self.prec as f64 * std::f64::consts::LOG10_2) as usize;
        let (re, im) = self.value.to_decimal(digits.max(1));
        PeriodValueJson { beta: self.beta.clone(), norm: self.norm, re, im, prec: self.prec }
    }
}

/// `(2πi)^{-q/2} · real`.
fn attach_two_pi_i(real: Float, q: usize, prec: u32) -> Cx {
    let w = real.prec();
    let two_pi = Float::with_val(w, Constant::Pi) * 2u32;
    let scale = two_pi.pow(-(q as i32 / 2));
    let r = Float::with_val(prec, real * scale);
    let ip = Cx::i_pow(-(q as i64 / 2), prec);
    ip.scale(&r)
}

fn check_indices(m: u32, idx: &[u32]) -> Result<()> {
    if idx.len() % 2 == 1 {
        return Err(Error::OddLength(idx.len()));
    }
    if let Some(&i) = idx.iter().find(|&&i| i == 0 || i >= m) {
        return Err(Error::InvalidIndex(i as i64, m));
    }
    Ok(())
}

/// `P(β) = (2πi)^{-q/2} ∏ Γ(i_r/m)^2 / Γ(2 i_r / m)`, second argument unreduced.
pub fn period_p(m: u32, idx: &[u32], prec: u32) -> Result<PeriodValue> {
    check_indices(m, idx)?;
    let w = prec + guard_bits(3 * idx.len());
    let mut v = Float::with_val(w, 1);
    for &i in idx {
        let g = gamma_frac(i as i64, m, w);
        v *= Float::with_val(w, &g * &g);
        v /= gamma_frac(2 * i as i64, m, w);
    }
    Ok(PeriodValue { m, beta: idx.to_vec(), norm: Normalization::P, value: attach_two_pi_i(v, idx.len(), prec), prec })
}

/// `Γ̂(uα) = (2πi)^{-q/2} ∏ Γ([u i_j]/m)^2 / Γ([2u i_j]/m)`, `[a]` in `[1, m]`.
pub fn gamma_hat(m: u32, u: i64, idx: &[u32], prec: u32) -> Result<PeriodValue> {
    check_indices(m, idx)?;
    let w = prec + guard_bits(3 * idx.len());
    let mut v = Float::with_val(w, 1);
    for &i in idx {
        let a = rep1(u * i as i64, m) as i64;
        let b = rep1(2 * u * i as i64, m) as i64;
        let g = gamma_frac(a, m, w);
        v *= Float::with_val(w, &g * &g);
        v /= gamma_frac(b, m, w);
    }
    let beta: Vec<u32> = idx.iter().map(|&i| rep0(u * i as i64, m)).collect();
    Ok(PeriodValue { m, beta, norm: Normalization::PHat, value: attach_two_pi_i(v, idx.len(), prec), prec })
}

/// `Γ(f) = ∏_j [Γ(j/m)^2 Γ([-2j]/m)]^{e_j}`.
pub fn gamma_of_equation(f: &ExponentVector, prec: u32) -> Result<Float> {
    let m = f.m;
    let w = prec + guard_bits(3 * f.e.iter().map(|x| x.unsigned_abs() as usize).sum::<usize>());
    let mut v = Float::with_val(w, 1);
    for j in 1..m {
        let e = f.get(j);
        if e == 0 {
            continue;
        }
        let g = gamma_frac(j as i64, m, w);
        let t = Float::with_val(w, &g * &g) * gamma_frac(rep0(-2 * j as i64, m) as i64, m, w);
        v *= t.pow(e as i32);
    }
    Ok(Float::with_val(prec, v))
}

/// `ω_i ∪ ω_j`: `m/(m - 2i)` when `j = m - i`, else 0.
pub fn cup_product(m: u32, i: u32, j: u32) -> Rational {
    if i + j == m {
        Rational::from((m as i64, m as i64 - 2 * i as i64))
    } else {
        Rational::new()
    }
}

/// Matrix of the canonical polarization in the basis `ω_1..ω_{m-1}`.
pub fn polarization_matrix(m: u32) -> Vec<Vec<Rational>> {
    let quarter = Rational::from((-1, 4));
    (1..m)
        .map(|i| (1..m).map(|j| Rational::from(&quarter * &cup_product(m, i, j))).collect())
        .collect()
}

/// The closed form `-(1/4)·m/(m - 2i)` at `(i, m - i)`.
pub fn polarization_closed_form(m: u32) -> Vec<Vec<Rational>> {
    (1..m)
        .map(|i| {
            (1..m)
                .map(|j| {
                    if i + j == m {
                        Rational::from((-(m as i64), 4 * (m as i64 - 2 * i as i64)))
                    } else {
                        Rational::new()
                    }
                })
                .collect()
        })
        .collect()
}

pub fn float_from_rational(q: &Rational, prec: u32) -> Float {
    Float::with_val(prec, q)
}

pub fn two_pow(e: i32, prec: u32) -> Float {
    Float::with_val(prec, Float::with_val(prec, 2u32).pow(e))
}

pub fn integer_to_float(z: &Integer, prec: u32) -> Float {
    Float::with_val(prec, z)
}
