//! Numerical check of the generalized Gross–Koblitz formula
//! `Γ̂(−α) / Frob_p(Γ̂(−pα)) = ι_𝒫^{-1}(Γ̂_p(pα) / (−1)^{⟨α⟩})`.

use rayon::prelude::*;
use serde::Serialize;

use crate::arith::{gcd, lcm, primes_below};
use crate::character::{concat, gamma_char, is_tate_character};
use crate::cyclo::CycloNumber;
use crate::error::{Error, Result};
use crate::galois::{frobenius_on_abelian, half_sign, recognized_gamma_hat, RecognitionParams};
use crate::lattice::{antidiagonal_difference, compute_lattice, minimal_degree_generators};
use crate::padic::{embed_cyclotomic_padic, gamma_hat_p, FrobeniusPlace, PadicInt, UnramifiedRing};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Verified,
    Failed,
    Unresolved,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GKReport {
    pub m: u32,
    pub alpha: Vec<u32>,
    pub p: u64,
    pub k: u32,
    pub prec: u32,
    pub lhs: Option<CycloNumber>,
    pub lhs_embedded: Option<PadicInt>,
    pub rhs: PadicInt,
    pub verdict: Verdict,
    pub diagnostics: String,
}

/// Index tuple of constant weight (a Tate character once the γ's are concatenated).
pub fn check_tate(m: u32, alpha: &[u32]) -> Result<()> {
    if alpha.is_empty() || alpha.len() % 2 != 0 {
        return Err(Error::OddLength(alpha.len()));
    }
    let mut ch = gamma_char(m, alpha[0] as i64)?;
    for &i in &alpha[1..] {
        ch = concat(&ch, &gamma_char(m, i as i64)?)?;
    }
    if !is_tate_character(&ch) {
        return Err(Error::Precondition(format!("{alpha:?} does not have constant weight")));
    }
    Ok(())
}

/// `Γ̂_p(pα) · (−1)^{⟨α⟩} mod p^k`; `⟨α⟩ = 3q/2` has the parity of `q/2`.
pub fn gk_rhs(m: u32, alpha: &[u32], p: u64, k: u32) -> Result<PadicInt> {
    let g = gamma_hat_p(m, p as i64, alpha, p, k)?;
    Ok(if half_sign(alpha.len()) < 0 { g.neg() } else { g })
}

fn recognized(m: u32, u: i64, alpha: &[u32], params: &RecognitionParams) -> Result<(Option<CycloNumber>, u32, String)> {
    let r = recognized_gamma_hat(m, u, alpha, params)?;
    let v = if r.verified { r.value } else { None };
    Ok((v, r.prec, r.diagnostics))
}

/// Embeds `x` at the place above `p` extended to a multiple of its conductor.
fn embed_at(x: &CycloNumber, place: &FrobeniusPlace, k: u32) -> Result<PadicInt> {
    let x = x.normalized();
    let n = lcm(x.conductor as u64, place.conductor as u64) as u32;
    let ring = UnramifiedRing::new(&place.extend(n)?, k);
    let e = embed_cyclotomic_padic(&x, &ring)?;
    e.as_padic().ok_or_else(|| Error::Inconsistent(format!("{x} does not embed into Q_{}", place.p)))
}

pub fn verify(m: u32, alpha: &[u32], p: u64, k: u32, params: &RecognitionParams) -> Result<GKReport> {
    if m % 2 == 0 {
        return Err(Error::Precondition("m must be odd".into()));
    }
    check_tate(m, alpha)?;
    if gcd(p, m as u64) != 1 {
        return Err(Error::BadReduction(p));
    }
    let place = FrobeniusPlace::new(p, m)?;
    let rhs = gk_rhs(m, alpha, p, k)?;
    let mut report = GKReport {
        m,
        alpha: alpha.to_vec(),
        p,
        k,
        prec: 0,
        lhs: None,
        lhs_embedded: None,
        rhs: rhs.clone(),
        verdict: Verdict::Unresolved,
        diagnostics: String::new(),
    };
    let (a, pa, da) = recognized(m, -1, alpha, params)?;
    let (b, pb, db) = recognized(m, -(p as i64), alpha, params)?;
    report.prec = pa.max(pb);
    let (x, y) = match (a, b) {
        (Some(x), Some(y)) => (x, y),
        (x, _) => {
            report.diagnostics = if x.is_none() { da } else { db };
            return Ok(report);
        }
    };
    if gcd(p, y.normalized().conductor as u64) != 1 {
        report.diagnostics = format!("Γ̂(−pα) recognized in a field ramified at {p}");
        return Ok(report);
    }
    let lhs = x.div(&frobenius_on_abelian(&y, p)?)?.normalized();
    report.lhs = Some(lhs.clone());
    if gcd(p, lhs.conductor as u64) != 1 {
        report.diagnostics = format!("lhs has conductor {} divisible by {p}", lhs.conductor);
        return Ok(report);
    }
    match embed_at(&lhs, &place, k) {
        Ok(e) => {
            report.verdict = if e == rhs { Verdict::Verified } else { Verdict::Failed };
            report.lhs_embedded = Some(e);
        }
        Err(err) => {
            report.verdict = Verdict::Failed;
            report.diagnostics = err.to_string();
        }
    }
    Ok(report)
}

/// Split form for `p ≡ 1 mod m`: `Frob_p(Γ̂(−α)) / Γ̂(−α) = ι_𝒫^{-1}((−1)^{⟨α⟩} / Γ̂_p(α))`.
pub fn verify_split(m: u32, alpha: &[u32], p: u64, k: u32, params: &RecognitionParams) -> Result<Option<bool>> {
    if p % m as u64 != 1 {
        return Err(Error::Precondition(format!("{p} is not 1 mod {m}")));
    }
    check_tate(m, alpha)?;
    let (x, _, _) = recognized(m, -1, alpha, params)?;
    let Some(x) = x else { return Ok(None) };
    if gcd(p, x.normalized().conductor as u64) != 1 {
        return Ok(None);
    }
    let lhs = frobenius_on_abelian(&x, p)?.div(&x)?;
    let g = gamma_hat_p(m, 1, alpha, p, k)?.inv()?;
    let rhs = if half_sign(alpha.len()) < 0 { g.neg() } else { g };
    Ok(Some(embed_at(&lhs, &FrobeniusPlace::new(p, m)?, k)? == rhs))
}

/// Characters for the sweep: lattice generators, antidiagonal differences and the pairs `(i, m−i)`.
pub fn sweep_characters(m: u32) -> Vec<Vec<u32>> {
    let mut out: Vec<Vec<u32>> = Vec::new();
    let l = compute_lattice(m);
    if l.rank > 0 {
        for e in minimal_degree_generators(&l).0 {
            out.push(e.gamma_indices().expect("nonzero generator"));
        }
    }
    for i in 1..=m / 2 {
        for j in i + 1..=m / 2 {
            out.push(antidiagonal_difference(m, i, j).gamma_indices().expect("nonzero"));
        }
    }
    for i in 1..=m / 2 {
        out.push(vec![i, m - i]);
    }
    out.sort();
    out.dedup();
    out
}

/// Runs `verify` over `characters × {odd primes p < bound, p ∤ m}`; sorted by `(α, p)`.
pub fn sweep(m: u32, characters: &[Vec<u32>], bound: u64, k: u32, params: &RecognitionParams) -> Result<Vec<GKReport>> {
    let primes: Vec<u64> = primes_below(bound).into_iter().filter(|&p| p != 2 && gcd(p, m as u64) == 1).collect();
    let jobs: Vec<(&Vec<u32>, u64)> = characters.iter().flat_map(|a| primes.iter().map(move |&p| (a, p))).collect();
    let mut out = jobs.into_par_iter().map(|(a, p)| verify(m, a, p, k, params)).collect::<Result<Vec<_>>>()?;
    out.sort_by(|a, b| (&a.alpha, a.p).cmp(&(&b.alpha, b.p)));
    Ok(out)
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SweepSummary {
    pub verified: usize,
    pub failed: usize,
    pub unresolved: usize,
}

pub fn summarize(reports: &[GKReport]) -> SweepSummary {
    let mut s = SweepSummary::default();
    for r in reports {
        match r.verdict {
            Verdict::Verified => s.verified += 1,
            Verdict::Failed => s.failed += 1,
            Verdict::Unresolved => s.unresolved += 1,
        }
    }
    s
}
