//! Acceptance suite: one line per criterion. Runs as a plain binary so the lines always print.

use std::time::{Duration, Instant};

use proptest::prelude::*;
use proptest::test_runner::{Config, RngSeed, TestRunner};
use rug::Rational;

use fermat_st::arith::{euler_phi, gcd, primes_below, units};
use fermat_st::cache::Cache;
use fermat_st::character::{concat, gamma_char, is_tate_character, weight};
use fermat_st::cyclo::{recognize, required_precision, CycloNumber, DEFAULT_HEIGHT};
use fermat_st::empirics::{frobenius_eigenvalues, good_primes, tate_check_with, twist_invariance};
use fermat_st::error::Error;
use fermat_st::galois::{rho_frobenius_block, rho_frobenius_block_complex, working_orbits, RecognitionParams};
use fermat_st::gross_koblitz::{summarize, sweep, sweep_characters, verify, Verdict};
use fermat_st::lattice::{antidiagonal_difference, compute_lattice, minimal_degree_generators, EquationLattice, ExponentVector};
use fermat_st::numerics::{duplication_defect, polarization_closed_form, polarization_matrix, reflection_defect, two_pow};
use fermat_st::padic::{morita_gamma, small, FrobeniusPlace, PadicInt};
use fermat_st::sato_tate::{identity_component, saturate, SaturationParams};

type Check = std::result::Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> std::result::Result<(), String> {
    if ok { Ok(()) } else { Err(msg.into()) }
}

fn within(t: Instant, limit: Duration, what: &str) -> std::result::Result<(), String> {
    let e = t.elapsed();
    ensure(e <= limit, format!("{what} took {e:.1?}, limit {limit:?}"))
}

fn ev(terms: &[(u32, i64)]) -> ExponentVector {
    ExponentVector::from_terms(15, terms)
}

fn params() -> RecognitionParams {
    RecognitionParams::default()
}

/// Classes checked against the étale side: MT lattice basis plus the identity-component basis.
fn lattice_classes(m: u32) -> Vec<ExponentVector> {
    let mut v = compute_lattice(m).basis_vectors();
    v.extend(identity_component(m).unwrap().lattice.basis_vectors());
    v.sort();
    v.dedup();
    v
}

fn c1_identity_component() -> Check {
    let t = Instant::now();
    let reference = vec![
        ev(&[(1, 1), (14, 1)]),
        ev(&[(2, 1), (13, 1)]),
        ev(&[(3, 1), (12, 1)]),
        ev(&[(4, 1), (11, 1)]),
        ev(&[(5, 1), (10, 1)]),
        ev(&[(6, 1), (9, 1)]),
        ev(&[(7, 1), (8, 1)]),
        ev(&[(5, 1), (3, -1), (4, -1), (13, -1)]),
        ev(&[(6, 1), (3, -1), (4, -1), (14, -1)]),
        ev(&[(7, 1), (3, -2), (4, -1), (13, -1), (14, -1)]),
    ];
    let rows: Vec<Vec<i64>> = reference.iter().map(|e| e.e.clone()).collect();
    let expected = EquationLattice::from_rows(15, &rows);
    let id = identity_component(15).map_err(|e| e.to_string())?;
    ensure(id.lattice.same_as(&expected), format!("lattice mismatch: {:?} vs {:?}", id.lattice.basis, expected.basis))?;
    ensure(id.lattice.rank == 10 && id.dimension == 4, "rank or dimension")?;
    within(t, Duration::from_secs(10), "identity component")?;
    Ok(format!("L_ST rank {} equals the ten reference equations, torus dimension {}", id.lattice.rank, id.dimension))
}

fn c2_mumford_tate() -> Check {
    let t = Instant::now();
    let l = compute_lattice(15);
    let eqs = [
        ev(&[(9, 1), (12, 1), (8, -1), (13, -1)]),
        ev(&[(11, 1), (12, 1), (9, -1), (14, -1)]),
        ev(&[(10, 1), (12, 1), (8, -1), (14, -1)]),
    ];
    for e in &eqs {
        ensure(l.contains(e), format!("{} not in L_MT", e.equation()))?;
    }
    let (gens, q) = minimal_degree_generators(&l);
    ensure(q == 2, format!("q = {q}"))?;
    within(t, Duration::from_secs(10), "MT lattice")?;
    Ok(format!("rank {}, {} generators of degree <= {q}, the three degree-2 equations lie in L_MT", l.rank, gens.len()))
}

/// Coset enumeration (HLT with coincidences) over the trivial subgroup.
struct CosetTable {
    table: Vec<[Option<usize>; 4]>,
    parent: Vec<usize>,
}

const MAX_COSETS: usize = 200_000;

fn inv_gen(x: usize) -> usize {
    x ^ 1
}

impl CosetTable {
    fn rep(&mut self, mut c: usize) -> usize {
        let mut r = c;
        while self.parent[r] != r {
            r = self.parent[r];
        }
        while self.parent[c] != r {
            let n = self.parent[c];
            self.parent[c] = r;
            c = n;
        }
        r
    }

    fn define(&mut self, c: usize, x: usize) -> Option<()> {
        if self.table.len() >= MAX_COSETS {
            return None;
        }
        let d = self.table.len();
        self.table.push([None; 4]);
        self.parent.push(d);
        self.table[c][x] = Some(d);
        self.table[d][inv_gen(x)] = Some(c);
        Some(())
    }

    fn merge(&mut self, k: usize, l: usize, queue: &mut Vec<usize>) {
        let (k, l) = (self.rep(k), self.rep(l));
        if k != l {
            let (lo, hi) = (k.min(l), k.max(l));
            self.parent[hi] = lo;
            queue.push(hi);
        }
    }

    fn coincidence(&mut self, a: usize, b: usize) {
        let mut queue = Vec::new();
        self.merge(a, b, &mut queue);
        let mut i = 0;
        while i < queue.len() {
            let e = queue[i];
            i += 1;
            for x in 0..4 {
                if let Some(f) = self.table[e][x] {
                    self.table[f][inv_gen(x)] = None;
                    let (e1, f1) = (self.rep(e), self.rep(f));
                    if let Some(t) = self.table[e1][x] {
                        self.merge(f1, t, &mut queue);
                    } else if let Some(t) = self.table[f1][inv_gen(x)] {
                        self.merge(e1, t, &mut queue);
                    } else {
                        self.table[e1][x] = Some(f1);
                        self.table[f1][inv_gen(x)] = Some(e1);
                    }
                }
            }
        }
    }

    fn scan_and_fill(&mut self, c: usize, w: &[usize]) -> Option<()> {
        let (mut f, mut b) = (c, c);
        let mut i = 0usize;
        let mut j = w.len() as isize - 1;
        loop {
            while (i as isize) <= j {
                match self.table[f][w[i]] {
                    Some(n) => {
                        f = n;
                        i += 1;
                    }
                    None => break,
                }
            }
            if (i as isize) > j {
                if f != b {
                    self.coincidence(f, b);
                }
                return Some(());
            }
            while j >= i as isize {
                match self.table[b][inv_gen(w[j as usize])] {
                    Some(n) => {
                        b = n;
                        j -= 1;
                    }
                    None => break,
                }
            }
            if j < i as isize {
                self.coincidence(f, b);
                return Some(());
            } else if j == i as isize {
                self.table[f][w[i]] = Some(b);
                self.table[b][inv_gen(w[i])] = Some(f);
                return Some(());
            } else {
                self.define(f, w[i])?;
            }
        }
    }
}

/// Order of `⟨a, b | relators⟩`; letters are 0 = a, 1 = a⁻¹, 2 = b, 3 = b⁻¹.
fn todd_coxeter(relators: &[Vec<usize>]) -> Option<usize> {
    let mut ct = CosetTable { table: vec![[None; 4]], parent: vec![0] };
    let mut c = 0;
    while c < ct.table.len() {
        if ct.parent[c] == c {
            for r in relators {
                if ct.parent[c] != c {
                    break;
                }
                ct.scan_and_fill(c, r)?;
            }
            if ct.parent[c] == c {
                for x in 0..4 {
                    if ct.table[c][x].is_none() {
                        ct.define(c, x)?;
                    }
                }
            }
        }
        c += 1;
    }
    Some((0..ct.parent.len()).filter(|&i| ct.parent[i] == i).count())
}

fn word(parts: &[(usize, i32)]) -> Vec<usize> {
    let mut w = Vec::new();
    for &(g, e) in parts {
        let letter = 2 * g + usize::from(e < 0);
        w.extend(std::iter::repeat(letter).take(e.unsigned_abs() as usize));
    }
    w
}

fn c3_component_group() -> Check {
    // oracle self-checks on groups of known order
    let d8 = todd_coxeter(&[word(&[(0, 4)]), word(&[(1, 2)]), word(&[(0, 1), (1, 1), (0, 1), (1, 1)])]);
    let m16 = todd_coxeter(&[word(&[(0, 8)]), word(&[(1, 2)]), word(&[(1, 1), (0, 1), (1, 1), (0, -5)])]);
    ensure(d8 == Some(8) && m16 == Some(16), format!("coset enumeration self-check: D8 {d8:?}, M16 {m16:?}"))?;
    let relators: Vec<Vec<(usize, i32)>> = vec![
        vec![(0, 8)],
        vec![(1, 4)],
        vec![(1, 1), (0, 2), (1, 1)],
        vec![(0, 1), (1, -1), (0, 1), (1, -1)],
    ];
    let presented = todd_coxeter(&relators.iter().map(|r| word(r)).collect::<Vec<_>>()).ok_or("coset enumeration overflow")?;
    let t = Instant::now();
    let st = saturate(15, &SaturationParams::default()).map_err(|e| e.to_string())?;
    within(t, Duration::from_secs(30 * 60), "saturation")?;
    let surjective = units(15).iter().all(|&u| st.components.iter().any(|c| c.u == u));
    let gens = st.find_generators(2, &relators);
    let detail = format!(
        "computed {} components (complete: {}, surjective onto units: {}), presented group has order {}, generators satisfying all four relations: {}",
        st.order(),
        st.complete,
        surjective,
        presented,
        gens.as_ref().map(|g| format!("{g:?}")).unwrap_or_else(|| "none".into())
    );
    if st.order() == presented && gens.is_some() && surjective {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn c4_gk_desk() -> Check {
    let mut out = Vec::new();
    for (p, expected) in [(5u64, -1i64), (7, 1)] {
        let t = Instant::now();
        let r = verify(3, &[1, 2], p, 20, &params()).map_err(|e| e.to_string())?;
        within(t, Duration::from_secs(1), &format!("p = {p}"))?;
        ensure(r.verdict == Verdict::Verified, format!("p = {p}: {:?} {}", r.verdict, r.diagnostics))?;
        ensure(r.lhs == Some(CycloNumber::from_int(1, expected)), format!("p = {p}: lhs {:?}", r.lhs))?;
        ensure(small(&r.rhs) == Some(expected) && r.rhs.k == 20 && r.rhs.p == p, format!("p = {p}: rhs {:?}", r.rhs))?;
        ensure(r.lhs_embedded.as_ref() == Some(&r.rhs), "embedded lhs differs")?;
        out.push(format!("p={p}: {expected:+}"));
    }
    Ok(format!("both sides agree mod p^20 ({})", out.join(", ")))
}

fn c5_gk_sweep() -> Check {
    let t = Instant::now();
    let mut parts = Vec::new();
    let mut failed = Vec::new();
    for m in [3u32, 5, 7, 9, 15] {
        let reports = sweep(m, &sweep_characters(m), 50, 20, &params()).map_err(|e| e.to_string())?;
        let s = summarize(&reports);
        failed.extend(reports.iter().filter(|r| r.verdict == Verdict::Failed).map(|r| format!("m={m} {:?} p={}", r.alpha, r.p)));
        parts.push(format!("m={m}: {}/{}/{}", s.verified, s.failed, s.unresolved));
    }
    within(t, Duration::from_secs(3600), "sweep")?;
    ensure(failed.is_empty(), format!("failed: {}", failed.join("; ")))?;
    Ok(format!("verified/failed/unresolved {}", parts.join(", ")))
}

fn c6_split_primes() -> Check {
    let (mut agreed, mut skipped) = (0, 0);
    for m in [3u32, 5, 7, 9, 15] {
        let (_, q) = minimal_degree_generators(&compute_lattice(m));
        let orbits = working_orbits(m, q as usize);
        for p in primes_below(200).into_iter().filter(|p| p % m as u64 == 1) {
            let place = FrobeniusPlace::new(p, m).map_err(|e| e.to_string())?;
            for o in &orbits {
                let complex = match rho_frobenius_block_complex(p, o, &params()) {
                    Ok(b) => b,
                    Err(Error::Recognition(_)) => {
                        skipped += 1;
                        continue;
                    }
                    Err(e) => return Err(e.to_string()),
                };
                let padic = rho_frobenius_block(&place, o, &params()).map_err(|e| e.to_string())?;
                ensure(padic == complex, format!("m={m} p={p} orbit {:?}", o.members[0]))?;
                agreed += 1;
            }
        }
    }
    ensure(agreed > 0, "nothing compared")?;
    Ok(format!("{agreed} (orbit, prime) blocks agree exactly; {skipped} without an algebraic complex-route value"))
}

fn c7_etale() -> Check {
    let one = Rational::from(1);
    let mut parts = Vec::new();
    for m in [3u32, 5, 15] {
        let classes = lattice_classes(m);
        let primes = good_primes(m, &one, 200);
        let mut n = 0;
        for &p in &primes {
            let f = fermat_st::arith::mult_order(p, m as u64);
            let data = frobenius_eigenvalues(m, &one, p, f).map_err(|e| e.to_string())?;
            for e in &classes {
                let c = tate_check_with(&data, e, &params()).map_err(|err| format!("m={m} p={p} {:?}: {err}", e.e))?;
                ensure(c.agree, format!("m={m} p={p} {}: étale {} vs {}", e.equation(), c.etale, c.galois))?;
                n += 1;
            }
        }
        parts.push(format!("m={m}: {n} checks over {} primes", primes.len()));
    }
    Ok(format!("100% agreement ({})", parts.join(", ")))
}

fn c8_polarization() -> Check {
    let mut n = 0;
    for m in (3u32..=21).step_by(2) {
        ensure(polarization_matrix(m) == polarization_closed_form(m), format!("m={m}: cup-product matrix differs"))?;
        let l = compute_lattice(m);
        for i in 1..=m / 2 {
            for j in i + 1..=m / 2 {
                ensure(l.contains(&antidiagonal_difference(m, i, j)), format!("m={m}: δ{i}+δ{}−δ{j}−δ{} not in L_MT", m - i, m - j))?;
                n += 1;
            }
        }
    }
    Ok(format!("matrices match for odd m in 3..21; {n} antidiagonal classes in L_MT"))
}

fn c9_twist() -> Check {
    let mut n = 0;
    for m in [3u32, 5, 15] {
        let classes = lattice_classes(m);
        for a in [2i64, -1, 7] {
            let r = twist_invariance(m, &Rational::from(a), 100, &classes, &params()).map_err(|e| e.to_string())?;
            ensure(r.all_agree, format!("m={m} a={a}"))?;
            ensure(r.records.iter().all(|x| x.twisted && x.untwisted), format!("m={m} a={a}: a check failed"))?;
            n += r.records.len();
        }
    }
    Ok(format!("{n} (a, p, class) records agree with a = 1"))
}

fn runner(cases: u32) -> TestRunner {
    TestRunner::new(Config { cases, rng_seed: RngSeed::Fixed(0x5eed_f00d), failure_persistence: None, ..Config::default() })
}

fn small_cyclo(m: u32) -> impl Strategy<Value = CycloNumber> {
    proptest::collection::vec((-20i64..20, 1i64..6), euler_phi(m) as usize)
        .prop_map(move |v| CycloNumber::from_poly(m, v.into_iter().map(|(a, b)| Rational::from((a, b))).collect()))
}

fn run<T: std::fmt::Debug>(name: &str, r: std::result::Result<(), proptest::test_runner::TestError<T>>) -> Check {
    r.map(|_| name.to_string()).map_err(|e| format!("{name}: {e}"))
}

fn c10_properties() -> Check {
    let mut done = Vec::new();
    let odd_m = proptest::sample::select(vec![3u32, 5, 7, 9, 11, 13, 15, 17, 19, 21]);

    done.push(run(
        "weight sums",
        runner(64).run(&(odd_m.clone(), proptest::collection::vec(1u32..100, 1..6), 1u32..100), |(m, idx, t)| {
            let mut ch = gamma_char(m, (idx[0] % (m - 1) + 1) as i64).unwrap();
            for &i in &idx[1..] {
                ch = concat(&ch, &gamma_char(m, (i % (m - 1) + 1) as i64).unwrap()).unwrap();
            }
            if gcd(t as u64, m as u64) != 1 {
                return Ok(());
            }
            let s = weight(&ch, t).unwrap() + weight(&ch, m - t % m).unwrap();
            prop_assert_eq!(s, Rational::from(ch.len() as i64));
            Ok(())
        }),
    )?);

    done.push(run(
        "lattice saturation",
        runner(10).run(&(odd_m.clone(), proptest::collection::vec(-3i64..4, 16)), |(m, coeffs)| {
            let l = compute_lattice(m);
            prop_assert!(l.is_saturated());
            prop_assert!(identity_component(m).unwrap().lattice.is_saturated());
            let mut e = ExponentVector::zero(m);
            for (row, c) in l.basis_vectors().iter().zip(&coeffs) {
                for j in 0..e.e.len() {
                    e.e[j] += c * row.e[j];
                }
            }
            if !e.is_zero() {
                let idx = e.gamma_indices().unwrap();
                let mut ch = gamma_char(m, idx[0] as i64).unwrap();
                for &i in &idx[1..] {
                    ch = concat(&ch, &gamma_char(m, i as i64).unwrap()).unwrap();
                }
                prop_assert!(is_tate_character(&ch));
            }
            Ok(())
        }),
    )?);

    done.push(run(
        "Γ reflection and duplication",
        runner(24).run(&(1i64..200, 2i64..200, proptest::sample::select(vec![128u32, 256, 512])), |(a, b, prec)| {
            if a >= b {
                return Ok(());
            }
            let x = Rational::from((a, b));
            let tol = two_pow(-(prec as i32) + 8, prec);
            prop_assert!(reflection_defect(&x, prec).unwrap() <= tol);
            prop_assert!(duplication_defect(&x, prec).unwrap() <= tol);
            Ok(())
        }),
    )?);

    done.push(run(
        "Γ_p continuity and reflection",
        runner(48).run(
            &(proptest::sample::select(vec![3u64, 5, 7, 11, 13]), -300i64..300, 1i64..30, 1u32..4),
            |(p, a, b, j)| {
                if b % p as i64 == 0 {
                    return Ok(());
                }
                let x = Rational::from((a, b));
                let shifted = x.clone() + Rational::from(p.pow(j)) * 5u32;
                let g = morita_gamma(p, &x, 6).unwrap();
                prop_assert_eq!(g.reduce_to(j), morita_gamma(p, &shifted, 6).unwrap().reduce_to(j));
                let h = morita_gamma(p, &(Rational::from(1) - x.clone()), 6).unwrap();
                let r0 = PadicInt::from_rational(p, 1, &x).unwrap().residue.to_u64().unwrap();
                let r = if r0 == 0 { p } else { r0 };
                prop_assert_eq!(g.mul(&h), PadicInt::from_i64(p, 6, if r % 2 == 0 { 1 } else { -1 }));
                Ok(())
            },
        ),
    )?);

    done.push(run(
        "block shape and finite order",
        runner(16).run(&(proptest::sample::select(vec![3u32, 5, 7, 9, 15]), 0usize..40, 0usize..64), |(m, pi, oi)| {
            let primes: Vec<u64> = primes_below(100).into_iter().filter(|&p| p != 2 && gcd(p, m as u64) == 1).collect();
            let p = primes[pi % primes.len()];
            let (_, q) = minimal_degree_generators(&compute_lattice(m));
            let orbits = working_orbits(m, q as usize);
            let o = &orbits[oi % orbits.len()];
            let b = rho_frobenius_block(&FrobeniusPlace::new(p, m).unwrap(), o, &params()).unwrap();
            prop_assert!(b.is_generalized_permutation());
            prop_assert!(b.order(1000).is_some());
            Ok(())
        }),
    )?);

    done.push(run(
        "recognition round trip",
        runner(16).run(&(proptest::sample::select(vec![3u32, 5, 15]).prop_flat_map(small_cyclo)), |a| {
            let m = a.conductor;
            let prec = required_precision(m, DEFAULT_HEIGHT);
            let r = recognize(&a.embed_complex(prec), m, DEFAULT_HEIGHT, prec).unwrap();
            prop_assert!(r.verified);
            prop_assert!(r.value.unwrap().sub(&a).unwrap().is_zero());
            Ok(())
        }),
    )?);

    done.push(run(
        "cache determinism",
        runner(16).run(&proptest::collection::vec(-1000i64..1000, 0..12), |xs| {
            let d = tempfile::tempdir().unwrap();
            let c = Cache::open(d.path()).unwrap();
            let k = Cache::key("prop", &xs);
            prop_assert_eq!(&k, &Cache::key("prop", &xs.clone()));
            let v: Vec<i64> = c.get_or_compute("prop", &xs, || Ok(xs.iter().map(|x| x * 3).collect())).unwrap();
            let w: Vec<i64> = c.get_or_compute("prop", &xs, || Ok(vec![0])).unwrap();
            prop_assert_eq!(v, w);
            Ok(())
        }),
    )?);

    Ok(done.join(", "))
}

/// Criteria that fail by analysis rather than by defect, with the reason.
const EXPECTED_FAILURES: &[(usize, &str)] = &[(
    3,
    "the presentation forces τ1^4 = 1 and collapses to order 8, while the Galois images form a group of order 16",
)];

fn main() {
    let criteria: Vec<(&str, fn() -> Check)> = vec![
        ("identity component of m=15", c1_identity_component),
        ("Mumford-Tate data of m=15", c2_mumford_tate),
        ("component group of m=15", c3_component_group),
        ("Gross-Koblitz desk cases", c4_gk_desk),
        ("Gross-Koblitz sweep", c5_gk_sweep),
        ("split-prime cross route", c6_split_primes),
        ("étale Tate-class check", c7_etale),
        ("polarization", c8_polarization),
        ("twist invariance", c9_twist),
        ("property suites", c10_properties),
    ];
    let mut unexpected = Vec::new();
    for (i, (name, f)) in criteria.iter().enumerate() {
        let n = i + 1;
        let t = Instant::now();
        let result = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let secs = t.elapsed().as_secs_f64();
        let expected = EXPECTED_FAILURES.iter().find(|(k, _)| *k == n);
        match (&result, expected) {
            (Ok(d), None) => println!("criterion {n:>2} PASS  {name}: {d} [{secs:.1}s]"),
            (Err(d), Some((_, why))) => println!("criterion {n:>2} FAIL  {name}: {d} [{secs:.1}s] (known: {why})"),
            (Err(d), None) => {
                println!("criterion {n:>2} FAIL  {name}: {d} [{secs:.1}s]");
                unexpected.push(n);
            }
            (Ok(d), Some(_)) => {
                println!("criterion {n:>2} PASS  {name}: {d} [{secs:.1}s] (listed as a known failure)");
                unexpected.push(n);
            }
        }
    }
    if !unexpected.is_empty() {
        eprintln!("unexpected outcomes for criteria {unexpected:?}");
        std::process::exit(1);
    }
}
