//! Sato–Tate group: identity-component torus, component representatives solved from the
//! Galois action on Tate classes, and the component multiplication table.

use rug::{Float, Integer};
use serde::Serialize;

use crate::arith::{gcd, inv_mod, primes_below, rep0, units};
use crate::cyclo::CycloNumber;
use crate::error::{Error, Result};
use crate::galois::{
    rho_matrix, working_orbits, GaloisHandle, Normalization, Orbit, RecognitionParams, RhoMatrix,
};
use crate::intmat::{self, IMat};
use crate::lattice::{compute_lattice, minimal_degree_generators, EquationLattice};
use crate::numerics::Cx;

#[derive(Clone, Debug, Serialize)]
pub struct IdentityComponent {
    pub m: u32,
    pub lattice: EquationLattice,
    pub dimension: usize,
}

impl IdentityComponent {
    /// `x^e = 1` for every basis equation `e`.
    pub fn contains_diagonal(&self, x: &[CycloNumber]) -> Result<bool> {
        for e in &self.lattice.basis {
            if !is_one(&monomial(self.m, x, e)?) {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// `L_ST`: saturation of `L_MT + ⟨δ_1 + δ_{m-1}⟩`.
pub fn identity_component(m: u32) -> Result<IdentityComponent> {
    if m < 3 || m % 2 == 0 {
        return Err(Error::Precondition(format!("m = {m} must be odd and at least 3")));
    }
    let mt = compute_lattice(m);
    let n = m as usize - 1;
    let mut rows = mt.imat();
    let mut mult = vec![Integer::new(); n];
    mult[0] = Integer::from(1);
    mult[n - 1] = Integer::from(1);
    rows.push(mult);
    let sat = intmat::saturate(&intmat::hnf(&rows, n), n);
    let lattice = EquationLattice::from_rows(m, &intmat::to_i64(&sat));
    let dimension = n - lattice.rank;
    Ok(IdentityComponent { m, lattice, dimension })
}

fn is_one(x: &CycloNumber) -> bool {
    x.is_rational() && x.coeffs[0] == 1
}

/// `∏_j x_j^{e_j}`.
fn monomial(m: u32, x: &[CycloNumber], e: &[i64]) -> Result<CycloNumber> {
    let mut acc = CycloNumber::one(m);
    for (xj, &ej) in x.iter().zip(e) {
        if ej != 0 {
            acc = acc.mul(&xj.pow(ej)?)?;
        }
    }
    Ok(acc)
}

/// `h: ω_j ↦ t_j ω_{u^{-1} j}`; `t[j-1]` belongs to `ω_j`.
#[derive(Clone, Debug, PartialEq)]
pub struct Representative {
    pub m: u32,
    pub u: u32,
    pub t: Vec<CycloNumber>,
}

impl Representative {
    pub fn identity(m: u32) -> Self {
        Self { m, u: 1, t: vec![CycloNumber::one(m); m as usize - 1] }
    }

    pub fn image(&self, j: u32) -> u32 {
        let uinv = inv_mod(self.u as i64, self.m as u64).expect("unit") as i64;
        rep0(uinv * j as i64, self.m)
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        let mut t = Vec::with_capacity(self.t.len());
        for j in 1..self.m {
            let mid = other.image(j);
            t.push(other.t[j as usize - 1].mul(&self.t[mid as usize - 1])?);
        }
        Ok(Self { m: self.m, u: (self.u as u64 * other.u as u64 % self.m as u64) as u32, t })
    }

    /// Coefficient of the induced action on `ω_β`.
    pub fn class_coefficient(&self, beta: &[u32]) -> Result<CycloNumber> {
        let mut acc = CycloNumber::one(self.m);
        for &i in beta {
            acc = acc.mul(&self.t[i as usize - 1])?;
        }
        Ok(acc)
    }

    pub fn matrix(&self) -> Vec<Vec<Option<CycloNumber>>> {
        let n = self.t.len();
        let mut a = vec![vec![None; n]; n];
        for j in 1..self.m {
            a[self.image(j) as usize - 1][j as usize - 1] = Some(self.t[j as usize - 1].clone());
        }
        a
    }

    /// Same `u` and the entrywise ratio lies in the identity torus.
    pub fn same_component(&self, other: &Self, id: &IdentityComponent) -> Result<bool> {
        if self.u != other.u {
            return Ok(false);
        }
        let ratio = self.t.iter().zip(&other.t).map(|(a, b)| a.div(b)).collect::<Result<Vec<_>>>()?;
        id.contains_diagonal(&ratio)
    }

    /// Agreement of the induced action with `ρ` on every block.
    pub fn matches(&self, rho: &RhoMatrix) -> Result<bool> {
        if self.u != rho.u {
            return Ok(false);
        }
        for b in &rho.blocks {
            let b = b.renormalize(Normalization::Omega);
            for (j, beta) in b.orbit.members.iter().enumerate() {
                if !self.class_coefficient(beta)?.sub(&b.coeffs[j])?.is_zero() {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }
}

impl Serialize for Representative {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct R {
            u: u32,
            entries: Vec<Vec<Option<CycloNumber>>>,
        }
        R { u: self.u, entries: self.matrix() }.serialize(s)
    }
}

fn counts(m: u32, beta: &[u32]) -> Vec<Integer> {
    let mut a = vec![Integer::new(); m as usize - 1];
    for &i in beta {
        a[i as usize - 1] += 1;
    }
    a
}

fn small(x: &Integer) -> Result<i64> {
    x.to_i64().ok_or_else(|| Error::Inconsistent("exponent overflow".into()))
}

/// A generalized permutation matrix inducing `ρ` on every Tate class of the working set.
pub fn solve_component(rho: &RhoMatrix) -> Result<Representative> {
    let m = rho.m;
    let n = m as usize - 1;
    let mut all: Vec<(Vec<Integer>, CycloNumber)> = Vec::new();
    for b in &rho.blocks {
        let b = b.renormalize(Normalization::Omega);
        for (j, beta) in b.orbit.members.iter().enumerate() {
            all.push((counts(m, beta), b.coeffs[j].clone()));
        }
    }
    // a generating subset keeps the transform exponents small
    let mut kept: Vec<usize> = Vec::new();
    let mut span: IMat = Vec::new();
    for (k, (a, _)) in all.iter().enumerate() {
        if span.is_empty() || !intmat::contains(&span, a) {
            kept.push(k);
            span = intmat::hnf(&kept.iter().map(|&i| all[i].0.clone()).collect(), n);
        }
    }
    let a: IMat = kept.iter().map(|&i| all[i].0.clone()).collect();
    let (h, u) = intmat::hnf_with_transform(&a, n);
    let mut combined = Vec::with_capacity(h.len());
    for urow in &u {
        let mut acc = CycloNumber::one(m);
        for (c, &k) in urow.iter().zip(&kept) {
            if *c != 0 {
                acc = acc.mul(&all[k].1.pow(small(c)?)?)?;
            }
        }
        combined.push(acc);
    }
    let nonzero: Vec<usize> = (0..h.len()).filter(|&i| h[i].iter().any(|x| *x != 0)).collect();
    for i in 0..h.len() {
        if !nonzero.contains(&i) && !is_one(&combined[i]) {
            return Err(Error::Inconsistent(format!("relation among constraints evaluates to {}", combined[i])));
        }
    }
    let hn: IMat = nonzero.iter().map(|&i| h[i].clone()).collect();
    let y = intmat::right_inverse(&hn, n).ok_or_else(|| Error::Inconsistent("constraint lattice is not saturated".into()))?;
    let mut t = Vec::with_capacity(n);
    for yrow in &y {
        let mut acc = CycloNumber::one(m);
        for (c, &i) in yrow.iter().zip(&nonzero) {
            if *c != 0 {
                acc = acc.mul(&combined[i].pow(small(c)?)?)?;
            }
        }
        t.push(acc.normalized().lift(m).unwrap_or(acc));
    }
    let rep = Representative { m, u: rho.u, t };
    for (a, c) in &all {
        let e: Vec<i64> = a.iter().map(|x| x.to_i64().unwrap()).collect();
        if !monomial(m, &rep.t, &e)?.sub(c)?.is_zero() {
            return Err(Error::Inconsistent(format!("constraint {e:?} = {c} violated")));
        }
    }
    Ok(rep)
}

#[derive(Clone, Debug, Serialize)]
pub struct Component {
    pub label: String,
    pub u: u32,
    pub order: u32,
    pub realized_by: Vec<String>,
    pub representative: Representative,
    #[serde(skip)]
    pub rho: RhoMatrix,
}

#[derive(Clone, Debug, Serialize)]
pub struct STDescription {
    pub m: u32,
    pub n: usize,
    pub identity: IdentityComponent,
    pub orbits: Vec<Vec<Vec<u32>>>,
    pub components: Vec<Component>,
    /// `table[a][b]` is the label index of `a ∘ b`.
    pub table: Vec<Vec<usize>>,
    pub primes_used: Vec<u64>,
    pub complete: bool,
    pub conjugation_resolved: bool,
    pub stopping_rule: &'static str,
}

#[derive(Clone, Copy, Debug)]
pub struct SaturationParams {
    pub prime_bound: u64,
    pub stability: usize,
    pub recognition: RecognitionParams,
}

impl Default for SaturationParams {
    fn default() -> Self {
        Self { prime_bound: 1000, stability: 10, recognition: RecognitionParams::default() }
    }
}

fn handle_label(h: &GaloisHandle) -> String {
    match h {
        GaloisHandle::Frobenius { place } => format!("Frob_{}", place.p),
        GaloisHandle::ComplexConjugation => "conj".into(),
        GaloisHandle::Identity => "1".into(),
        GaloisHandle::Word { factors } => factors.iter().map(handle_label).collect::<Vec<_>>().join("*"),
    }
}

struct Closure {
    elems: Vec<RhoMatrix>,
    realized: Vec<Vec<String>>,
}

impl Closure {
    fn find(&self, g: &RhoMatrix) -> Option<usize> {
        self.elems.iter().position(|x| x.same_image(g))
    }

    /// Inserts `g` and closes under composition; returns whether anything was new.
    fn add(&mut self, g: RhoMatrix) -> Result<bool> {
        let label = handle_label(&g.handle);
        if let Some(i) = self.find(&g) {
            self.realized[i].push(label);
            return Ok(false);
        }
        self.elems.push(g);
        self.realized.push(vec![label]);
        let mut i = 0;
        while i < self.elems.len() {
            let mut j = 0;
            while j < self.elems.len() {
                let prod = self.elems[i].compose(&self.elems[j])?;
                if self.find(&prod).is_none() {
                    self.elems.push(prod);
                    self.realized.push(Vec::new());
                }
                j += 1;
            }
            i += 1;
        }
        Ok(true)
    }
}

/// Component group from Frobenius elements at good primes plus complex conjugation.
pub fn saturate(m: u32, params: &SaturationParams) -> Result<STDescription> {
    let identity = identity_component(m)?;
    let (_, n) = minimal_degree_generators(&compute_lattice(m));
    let n = n as usize;
    let orbits: Vec<Orbit> = working_orbits(m, n);
    let rp = &params.recognition;
    let mut cl = Closure { elems: vec![RhoMatrix::identity(m, &orbits)], realized: vec![vec!["1".into()]] };
    let conjugation_resolved = match rho_matrix(&GaloisHandle::ComplexConjugation, m, &orbits, rp) {
        Ok(c) => {
            cl.add(c)?;
            true
        }
        Err(Error::Recognition(_)) => false,
        Err(e) => return Err(e),
    };
    let all_units = units(m);
    let mut since_new = 0usize;
    let mut primes_used = Vec::new();
    let mut complete = false;
    for p in primes_below(params.prime_bound) {
        if p == 2 || gcd(p, m as u64) != 1 {
            continue;
        }
        primes_used.push(p);
        let rho = rho_matrix(&GaloisHandle::frobenius(p, m)?, m, &orbits, rp)?;
        if cl.add(rho)? {
            since_new = 0;
        } else {
            since_new += 1;
        }
        let surjective = all_units.iter().all(|&u| cl.elems.iter().any(|g| g.u == u));
        if surjective && since_new >= params.stability {
            complete = true;
            break;
        }
    }
    // identity first, then by u and discovery order
    let mut idx: Vec<usize> = (0..cl.elems.len()).collect();
    idx.sort_by_key(|&i| (!cl.elems[i].is_identity(), cl.elems[i].u, i));
    let elems: Vec<RhoMatrix> = idx.iter().map(|&i| cl.elems[i].clone()).collect();
    let realized: Vec<Vec<String>> = idx.iter().map(|&i| cl.realized[i].clone()).collect();
    let find = |g: &RhoMatrix| elems.iter().position(|x| x.same_image(g)).expect("closed");
    let mut table = vec![vec![0; elems.len()]; elems.len()];
    for a in 0..elems.len() {
        for b in 0..elems.len() {
            table[a][b] = find(&elems[a].compose(&elems[b])?);
        }
    }
    let mut components = Vec::with_capacity(elems.len());
    for (i, rho) in elems.iter().enumerate() {
        let mut order = 1;
        let mut acc = i;
        while acc != 0 {
            acc = table[i][acc];
            order += 1;
        }
        components.push(Component {
            label: format!("c{i}"),
            u: rho.u,
            order,
            realized_by: realized[i].clone(),
            representative: solve_component(rho)?,
            rho: rho.clone(),
        });
    }
    Ok(STDescription {
        m,
        n,
        identity,
        orbits: orbits.iter().map(|o| o.members.clone()).collect(),
        components,
        table,
        primes_used,
        complete,
        conjugation_resolved,
        stopping_rule: "closed, surjective onto units mod m, stable over the last primes (heuristic)",
    })
}

impl STDescription {
    pub fn order(&self) -> usize {
        self.components.len()
    }

    pub fn inverse(&self, a: usize) -> usize {
        (0..self.order()).find(|&b| self.table[a][b] == 0).expect("group")
    }

    /// Evaluates a word `[(generator, exponent)]` in the component group.
    pub fn eval_word(&self, gens: &[usize], word: &[(usize, i32)]) -> usize {
        let mut acc = 0;
        for &(g, e) in word {
            let x = if e < 0 { self.inverse(gens[g]) } else { gens[g] };
            for _ in 0..e.unsigned_abs() {
                acc = self.table[acc][x];
            }
        }
        acc
    }

    /// Subgroup generated by `gens`, as a sorted index list.
    pub fn generated(&self, gens: &[usize]) -> Vec<usize> {
        let mut seen = vec![false; self.order()];
        seen[0] = true;
        let mut stack = vec![0];
        while let Some(a) = stack.pop() {
            for &g in gens {
                let b = self.table[a][g];
                if !seen[b] {
                    seen[b] = true;
                    stack.push(b);
                }
            }
        }
        (0..self.order()).filter(|&i| seen[i]).collect()
    }

    /// Generators satisfying every relator and generating the whole group.
    pub fn find_generators(&self, ngens: usize, relators: &[Vec<(usize, i32)>]) -> Option<Vec<usize>> {
        let n = self.order();
        let mut gens = vec![0; ngens];
        loop {
            if relators.iter().all(|w| self.eval_word(&gens, w) == 0) && self.generated(&gens).len() == n {
                return Some(gens);
            }
            let mut i = 0;
            while i < ngens {
                gens[i] += 1;
                if gens[i] < n {
                    break;
                }
                gens[i] = 0;
                i += 1;
            }
            if i == ngens {
                return None;
            }
        }
    }

    /// Component containing `h`, by comparing induced actions with each component's `ρ`.
    pub fn membership(&self, h: &Representative) -> Result<Option<usize>> {
        for (i, c) in self.components.iter().enumerate() {
            if h.matches(&c.rho)? {
                return Ok(Some(i));
            }
        }
        Ok(None)
    }

    /// Numeric variant: entries `t[j-1]` of `ω_j ↦ t_j ω_{u^{-1}j}`, tolerance `2^{-prec/2}`.
    pub fn membership_numeric(&self, u: u32, t: &[Cx], prec: u32) -> Result<Option<usize>> {
        if t.len() != self.m as usize - 1 || gcd(u as u64, self.m as u64) != 1 {
            return Ok(None);
        }
        let tol = crate::numerics::two_pow(-(prec as i32) / 2, prec);
        'comp: for (i, c) in self.components.iter().enumerate() {
            if c.u != u {
                continue;
            }
            for b in &c.rho.blocks {
                let b = b.renormalize(Normalization::Omega);
                for (j, beta) in b.orbit.members.iter().enumerate() {
                    let mut z = Cx::real(Float::with_val(prec, 1));
                    for &k in beta {
                        z = z.mul(&t[k as usize - 1]);
                    }
                    let want = b.coeffs[j].embed_complex(prec);
                    let scale = Float::with_val(prec, 1).max(&want.abs());
                    if z.dist(&want) > Float::with_val(prec, &tol * &scale) {
                        continue 'comp;
                    }
                }
            }
            return Ok(Some(i));
        }
        Ok(None)
    }
}
