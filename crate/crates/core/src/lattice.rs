//! Monomial equations of the Mumford-Tate group of `J_m`.
//!
//! An exponent vector `e` (indexed by `j = 1..m-1`) stands for the Laurent monomial
//! `∏ x_j^{e_j}` in the eigenbasis coordinates.

use std::collections::{BTreeSet, HashMap};

use rug::Integer;
use serde::{Deserialize, Serialize};

use crate::arith::{rep0, units};
use crate::character::{concat, gamma_char, is_tate_character, Character};
use crate::error::{Error, Result};
use crate::intmat::{self, IMat};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ExponentVector {
    pub m: u32,
    /// `e[j - 1]` is the exponent of `x_j`.
    pub e: Vec<i64>,
}

impl ExponentVector {
    pub fn zero(m: u32) -> Self {
        Self { m, e: vec![0; m as usize - 1] }
    }

    pub fn from_vec(m: u32, e: Vec<i64>) -> Self {
        assert_eq!(e.len(), m as usize - 1);
        Self { m, e }
    }

    /// `Σ_k c_k δ_{j_k}` from `(j, c)` pairs.
    pub fn from_terms(m: u32, terms: &[(u32, i64)]) -> Self {
        let mut v = Self::zero(m);
        for &(j, c) in terms {
            v.e[j as usize - 1] += c;
        }
        v
    }

    pub fn get(&self, j: u32) -> i64 {
        self.e[j as usize - 1]
    }

    pub fn is_zero(&self) -> bool {
        self.e.iter().all(|&x| x == 0)
    }

    pub fn sum(&self) -> i64 {
        self.e.iter().sum()
    }

    /// `Σ_{e_j > 0} e_j`.
    pub fn degree(&self) -> i64 {
        self.e.iter().filter(|&&x| x > 0).sum()
    }

    pub fn neg(&self) -> Self {
        Self { m: self.m, e: self.e.iter().map(|x| -x).collect() }
    }

    /// The unit action `(u·e)_{uj} = e_j`.
    pub fn scale(&self, u: u32) -> Self {
        let mut out = Self::zero(self.m);
        for j in 1..self.m {
            let k = rep0(j as i64 * u as i64, self.m);
            out.e[k as usize - 1] += self.get(j);
        }
        out
    }

    /// `x^{e+} = x^{e-}` written out, e.g. `x_1·x_14 = 1`.
    pub fn equation(&self) -> String {
        let side = |sign: i64| {
            let terms: Vec<String> = (1..self.m)
                .filter_map(|j| {
                    let c = self.get(j) * sign;
                    match c {
                        c if c <= 0 => None,
                        1 => Some(format!("x_{j}")),
                        c => Some(format!("x_{j}^{c}")),
                    }
                })
                .collect();
            if terms.is_empty() { "1".to_string() } else { terms.join("·") }
        };
        format!("{} = {}", side(1), side(-1))
    }

    pub fn to_integers(&self) -> Vec<Integer> {
        self.e.iter().map(|&x| Integer::from(x)).collect()
    }

    /// Indices `i_1..i_q` of the γ-factors: positive exponents ascending, then
    /// `m - j` for negative exponents ascending.
    pub fn gamma_indices(&self) -> Result<Vec<u32>> {
        if self.is_zero() {
            return Err(Error::ZeroVector);
        }
        let mut idx = Vec::new();
        for j in 1..self.m {
            for _ in 0..self.get(j).max(0) {
                idx.push(j);
            }
        }
        for j in 1..self.m {
            for _ in 0..(-self.get(j)).max(0) {
                idx.push(self.m - j);
            }
        }
        Ok(idx)
    }
}

/// The character `γ_{i_1} * ... * γ_{i_q}` attached to `e`.
pub fn char_of_exponent(e: &ExponentVector) -> Result<Character> {
    let idx = e.gamma_indices()?;
    let mut it = idx.into_iter().map(|i| gamma_char(e.m, i as i64));
    let mut acc = it.next().expect("nonzero vector")?;
    for g in it {
        acc = concat(&acc, &g?)?;
    }
    Ok(acc)
}

pub fn is_mt_equation(e: &ExponentVector) -> bool {
    if e.sum() != 0 {
        return false;
    }
    match char_of_exponent(e) {
        Ok(c) => is_tate_character(&c),
        Err(_) => false,
    }
}

/// `W_u[j] = [uj] + [uj] + [-2uj]`, the numerator of the weight of `uγ_j`.
fn weight_row(m: u32, u: u32) -> Vec<i64> {
    (1..m)
        .map(|j| {
            let a = rep0(j as i64 * u as i64, m) as i64;
            2 * a + rep0(-2 * j as i64 * u as i64, m) as i64
        })
        .collect()
}

/// Rows whose common kernel (together with balance) is the equation lattice.
fn constraint_rows(m: u32) -> Vec<Vec<i64>> {
    let w1 = weight_row(m, 1);
    let mut rows: Vec<Vec<i64>> = units(m)
        .into_iter()
        .filter(|&u| u != 1)
        .map(|u| weight_row(m, u).iter().zip(&w1).map(|(a, b)| a - b).collect())
        .collect();
    rows.push(vec![1; m as usize - 1]);
    rows
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EquationLattice {
    pub m: u32,
    /// Hermite basis rows.
    pub basis: Vec<Vec<i64>>,
    pub rank: usize,
}

impl EquationLattice {
    pub fn from_rows(m: u32, rows: &[Vec<i64>]) -> Self {
        let basis = intmat::to_i64(&intmat::hnf(&intmat::from_i64(rows), m as usize - 1));
        let rank = basis.len();
        Self { m, basis, rank }
    }

    pub fn dim(&self) -> usize {
        self.m as usize - 1
    }

    pub fn imat(&self) -> IMat {
        intmat::from_i64(&self.basis)
    }

    pub fn contains(&self, e: &ExponentVector) -> bool {
        intmat::contains(&self.imat(), &e.to_integers())
    }

    pub fn basis_vectors(&self) -> Vec<ExponentVector> {
        self.basis.iter().map(|r| ExponentVector::from_vec(self.m, r.clone())).collect()
    }

    pub fn is_saturated(&self) -> bool {
        intmat::is_saturated(&self.imat(), self.dim())
    }

    pub fn same_as(&self, other: &EquationLattice) -> bool {
        self.m == other.m && self.basis == other.basis
    }
}

pub fn compute_lattice(m: u32) -> EquationLattice {
    let rows = constraint_rows(m);
    let ker = intmat::kernel(&intmat::from_i64(&rows), m as usize - 1);
    let lat = EquationLattice::from_rows(m, &intmat::to_i64(&ker));
    debug_assert!(lat.basis_vectors().iter().all(is_mt_equation));
    lat
}

/// Multisets of size `s` drawn from `1..m-1`, as count vectors.
fn multisets(m: u32, s: usize) -> Vec<Vec<i64>> {
    fn rec(n: usize, start: usize, left: usize, cur: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
        if left == 0 {
            out.push(cur.clone());
            return;
        }
        for j in start..n {
            cur[j] += 1;
            rec(n, j, left - 1, cur, out);
            cur[j] -= 1;
        }
    }
    let n = m as usize - 1;
    let mut out = Vec::new();
    rec(n, 0, s, &mut vec![0; n], &mut out);
    out
}

/// All balanced lattice vectors whose positive part has size exactly `s`.
fn lattice_vectors_of_degree(m: u32, s: usize) -> Vec<ExponentVector> {
    let rows = constraint_rows(m);
    let rows = &rows[..rows.len() - 1];
    let image = |v: &[i64]| -> Vec<i64> {
        rows.iter().map(|r| r.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
    };
    let ms = multisets(m, s);
    let mut by_image: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
    for (k, v) in ms.iter().enumerate() {
        by_image.entry(image(v)).or_default().push(k);
    }
    let mut out = Vec::new();
    for group in by_image.values() {
        for &a in group {
            for &b in group {
                let (pa, nb) = (&ms[a], &ms[b]);
                if pa.iter().zip(nb).any(|(x, y)| *x > 0 && *y > 0) {
                    continue;
                }
                let e: Vec<i64> = pa.iter().zip(nb).map(|(x, y)| x - y).collect();
                out.push(ExponentVector::from_vec(m, e));
            }
        }
    }
    out.sort();
    out
}

/// A generating set of `L` minimizing the largest degree; returns it with that degree `q >= 2`.
pub fn minimal_degree_generators(l: &EquationLattice) -> (Vec<ExponentVector>, u32) {
    if l.rank == 0 {
        return (Vec::new(), 2);
    }
    let n = l.dim();
    let target = l.imat();
    let mut gens: Vec<ExponentVector> = Vec::new();
    let mut current: IMat = Vec::new();
    for s in 1.. {
        for v in lattice_vectors_of_degree(l.m, s) {
            if !current.is_empty() && intmat::contains(&current, &v.to_integers()) {
                continue;
            }
            gens.push(v);
            current = intmat::hnf(&gens.iter().map(|g| g.to_integers()).collect(), n);
        }
        if current == target {
            return (gens, (s as u32).max(2));
        }
    }
    unreachable!()
}

/// All nonzero `e ∈ L` of degree at most `n`, sorted.
pub fn tate_class_basis(l: &EquationLattice, n: usize) -> Vec<ExponentVector> {
    let mut out = BTreeSet::new();
    for s in 1..=n {
        for v in lattice_vectors_of_degree(l.m, s) {
            debug_assert!(l.contains(&v));
            out.insert(v);
        }
    }
    out.into_iter().collect()
}

/// Degree-one classes are the `m - 1` diagonal endomorphism lines, one per index.
pub fn degree_one_classes(m: u32) -> Vec<u32> {
    (1..m).collect()
}

/// `δ_i + δ_{m-i} - δ_j - δ_{m-j}`.
pub fn antidiagonal_difference(m: u32, i: u32, j: u32) -> ExponentVector {
    ExponentVector::from_terms(m, &[(i, 1), (m - i, 1), (j, -1), (m - j, -1)])
}

#[derive(Serialize)]
pub struct LatticeReport {
    pub m: u32,
    pub rank: usize,
    pub basis: Vec<Vec<i64>>,
    pub q: u32,
}

pub fn lattice_report(m: u32) -> LatticeReport {
    let l = compute_lattice(m);
    let (_, q) = minimal_degree_generators(&l);
    LatticeReport { m, rank: l.rank, basis: l.basis, q }
}
