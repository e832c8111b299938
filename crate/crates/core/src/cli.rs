//! Command-line front end. Every subcommand prints one JSON document.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand};
use rayon::prelude::*;
use rug::Rational;
use serde::Serialize;
use serde_json::{json, Value};

use crate::arith::mult_order;
use crate::cache::{self, Cache};
use crate::cyclo::CycloNumber;
use crate::empirics::{frobenius_eigenvalues, good_primes, point_count, tate_check_with};
use crate::error::{Error, Result};
use crate::galois::{rho_matrix, working_orbits, GaloisHandle, RecognitionParams};
use crate::gross_koblitz::{self, summarize, Verdict};
use crate::lattice::{compute_lattice, minimal_degree_generators, tate_class_basis, ExponentVector};
use crate::sato_tate::{identity_component, saturate, SaturationParams};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_VERIFY: i32 = 2;

fn parse_m(s: &str) -> std::result::Result<u32, String> {
    let m: u32 = s.parse().map_err(|e| format!("{e}"))?;
    if m < 3 || m % 2 == 0 {
        return Err(format!("m must be odd and at least 3, got {m}"));
    }
    Ok(m)
}

fn parse_rational(s: &str) -> std::result::Result<Rational, String> {
    s.parse::<Rational>().map_err(|e| format!("{e}"))
}

#[derive(Parser, Debug)]
#[command(name = "fermat-st", version, about = "Sato-Tate groups of y^2 = x^m + 1 and Gross-Koblitz checks")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct GlobalOpts {
    /// Write JSON here instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Cache directory; overrides FERMAT_ST_CACHE.
    #[arg(long, global = true)]
    pub cache: Option<PathBuf>,
    /// Height bound for algebraic recognition.
    #[arg(long, global = true, default_value_t = crate::cyclo::DEFAULT_HEIGHT)]
    pub height: u64,
    /// Largest φ(M) on the recognition ladder.
    #[arg(long, global = true, default_value_t = 64)]
    pub max_phi: u32,
    /// Starting p-adic precision (digits).
    #[arg(long, global = true, default_value_t = 20)]
    pub k: u32,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Mumford-Tate equation lattice.
    Mt {
        #[arg(long, value_parser = parse_m)]
        m: u32,
    },
    /// Tate classes of degree at most n.
    TateClasses {
        #[arg(long, value_parser = parse_m)]
        m: u32,
        #[arg(long)]
        n: Option<usize>,
    },
    /// Action of one Galois element on the Tate classes.
    #[command(group(ArgGroup::new("element").required(true).args(["p", "conjugation"])))]
    Galois {
        #[arg(long, value_parser = parse_m)]
        m: u32,
        #[arg(long)]
        p: Option<u64>,
        #[arg(long)]
        conjugation: bool,
    },
    /// Identity component and component group.
    SatoTate {
        #[arg(long, value_parser = parse_m)]
        m: u32,
        #[arg(long, default_value_t = 1000)]
        prime_bound: u64,
        #[arg(long, default_value_t = 10)]
        stability: usize,
    },
    /// Gross-Koblitz check at one prime or every prime below a bound.
    #[command(group(ArgGroup::new("primes").required(true).args(["p", "p_max"])))]
    GkVerify {
        #[arg(long, value_parser = parse_m)]
        m: u32,
        #[arg(long, value_delimiter = ',', required = true)]
        alpha: Vec<u32>,
        #[arg(long)]
        p: Option<u64>,
        #[arg(long)]
        p_max: Option<u64>,
    },
    /// Point counts and Frobenius checks on the Tate classes of y^2 = x^m + a.
    Empirics {
        #[arg(long, value_parser = parse_m)]
        m: u32,
        #[arg(long, value_parser = parse_rational, allow_hyphen_values = true, default_value = "1")]
        a: Rational,
        #[arg(long, default_value_t = 100)]
        p_max: u64,
    },
}

/// Settings shared by every subcommand.
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub m: u32,
    pub k: u32,
    pub height: u64,
    pub max_phi: u32,
    pub prime_budget: Option<u64>,
    pub output: Option<PathBuf>,
    pub cache: Option<PathBuf>,
}

impl RunConfig {
    pub fn recognition(&self) -> RecognitionParams {
        RecognitionParams { height: self.height, max_phi: self.max_phi, k: self.k, ..RecognitionParams::default() }
    }
}

impl Cli {
    pub fn config(&self) -> RunConfig {
        let (m, prime_budget) = match &self.command {
            Command::Mt { m } | Command::TateClasses { m, .. } | Command::Galois { m, .. } => (*m, None),
            Command::SatoTate { m, prime_bound, .. } => (*m, Some(*prime_bound)),
            Command::GkVerify { m, p_max, .. } => (*m, *p_max),
            Command::Empirics { m, p_max, .. } => (*m, Some(*p_max)),
        };
        let g = &self.global;
        RunConfig { m, k: g.k, height: g.height, max_phi: g.max_phi, prime_budget, output: g.output.clone(), cache: g.cache.clone() }
    }
}

/// A JSON document and whether every check it reports succeeded.
pub struct Outcome {
    pub json: Value,
    pub ok: bool,
}

fn to_value<T: Serialize>(x: &T) -> Result<Value> {
    Ok(serde_json::to_value(x)?)
}

fn preview(x: &CycloNumber) -> String {
    let (re, im) = x.embed_complex(96).to_decimal(15);
    format!("{re} + {im}i")
}

fn vectors(vs: &[ExponentVector]) -> Value {
    Value::Array(vs.iter().map(|e| json!({ "e": e.e, "equation": e.equation(), "degree": e.degree() })).collect())
}

fn mt(m: u32) -> Result<Outcome> {
    let l = compute_lattice(m);
    let (gens, q) = minimal_degree_generators(&l);
    Ok(Outcome {
        json: json!({ "m": m, "rank": l.rank, "basis": l.basis, "q": q, "generators": vectors(&gens) }),
        ok: true,
    })
}

fn tate_classes(m: u32, n: Option<usize>) -> Result<Outcome> {
    let l = compute_lattice(m);
    let n = n.unwrap_or_else(|| minimal_degree_generators(&l).1 as usize);
    let classes = tate_class_basis(&l, n);
    let rows: Vec<Value> = classes
        .iter()
        .map(|e| json!({ "e": e.e, "equation": e.equation(), "degree": e.degree(), "gamma_indices": e.gamma_indices().ok() }))
        .collect();
    Ok(Outcome { json: json!({ "m": m, "n": n, "count": rows.len(), "classes": rows }), ok: true })
}

fn galois(cfg: &RunConfig, p: Option<u64>, conjugation: bool) -> Result<Outcome> {
    let m = cfg.m;
    let handle = match p {
        Some(p) if !conjugation => GaloisHandle::frobenius(p, m)?,
        _ => GaloisHandle::ComplexConjugation,
    };
    let (_, n) = minimal_degree_generators(&compute_lattice(m));
    let orbits = working_orbits(m, n as usize);
    let rho = rho_matrix(&handle, m, &orbits, &cfg.recognition())?;
    Ok(Outcome { json: to_value(&rho)?, ok: true })
}

fn sato_tate(cfg: &RunConfig, prime_bound: u64, stability: usize) -> Result<Outcome> {
    let m = cfg.m;
    let params = SaturationParams { prime_bound, stability, recognition: cfg.recognition() };
    let st = saturate(m, &params)?;
    let id = identity_component(m)?;
    let equations: Vec<String> = id.lattice.basis_vectors().iter().map(|e| e.equation()).collect();
    let json = json!({
        "m": m,
        "identity": {
            "dimension": id.dimension,
            "rank": id.lattice.rank,
            "basis": id.lattice.basis,
            "equations": equations,
        },
        "component_count": st.order(),
        "description": to_value(&st)?,
    });
    Ok(Outcome { json, ok: st.complete })
}

fn gk_verify(cfg: &RunConfig, alpha: &[u32], p: Option<u64>, p_max: Option<u64>) -> Result<Outcome> {
    let m = cfg.m;
    let params = cfg.recognition();
    gross_koblitz::check_tate(m, alpha)?;
    let reports = match (p, p_max) {
        (Some(p), _) => vec![gross_koblitz::verify(m, alpha, p, cfg.k, &params)?],
        (None, Some(b)) => gross_koblitz::sweep(m, &[alpha.to_vec()], b, cfg.k, &params)?,
        (None, None) => return Err(Error::Precondition("give --p or --p-max".into())),
    };
    let summary = summarize(&reports);
    let rows: Vec<Value> = reports
        .iter()
        .map(|r| {
            let mut v = to_value(r)?;
            v["lhs_preview"] = json!(r.lhs.as_ref().map(preview));
            Ok(v)
        })
        .collect::<Result<_>>()?;
    let ok = reports.iter().all(|r| r.verdict != Verdict::Failed);
    let json = if p.is_some() {
        rows.into_iter().next().expect("one report")
    } else {
        json!({ "m": m, "alpha": alpha, "summary": to_value(&summary)?, "reports": rows })
    };
    Ok(Outcome { json, ok })
}

fn empirics(cfg: &RunConfig, a: &Rational, p_max: u64) -> Result<Outcome> {
    let m = cfg.m;
    let params = cfg.recognition();
    let classes = identity_component(m)?.lattice.basis_vectors();
    let records = good_primes(m, a, p_max)
        .into_par_iter()
        .map(|p| {
            let f = mult_order(p, m as u64);
            let count = point_count(m, a, p, f)?;
            let eig = frobenius_eigenvalues(m, a, p, f)?;
            let sum = eig.eigenvalues.iter().try_fold(CycloNumber::zero(m), |acc, x| acc.add(x))?;
            let count_matches = sum == CycloNumber::from_int(m, count.trace());
            let checks = classes
                .iter()
                .map(|e| tate_check_with(&eig, e, &params))
                .collect::<Result<Vec<_>>>()?;
            let ok = count_matches && count.within_weil_bound() && checks.iter().all(|c| c.agree);
            let json = json!({
                "p": p,
                "f": f,
                "count": count.count,
                "trace": count.trace(),
                "weil_bound": count.within_weil_bound(),
                "eigenvalues_match_count": count_matches,
                "tate_checks": to_value(&checks)?,
            });
            Ok((json, ok))
        })
        .collect::<Result<Vec<_>>>()?;
    let ok = records.iter().all(|r| r.1);
    let json = json!({
        "m": m,
        "a": a.to_string(),
        "p_max": p_max,
        "classes": vectors(&classes),
        "all_agree": ok,
        "records": records.into_iter().map(|r| r.0).collect::<Vec<_>>(),
    });
    Ok(Outcome { json, ok })
}

/// Runs a parsed command line.
pub fn execute(cli: &Cli) -> Result<Outcome> {
    let cfg = cli.config();
    match &cli.command {
        Command::Mt { m } => mt(*m),
        Command::TateClasses { m, n } => tate_classes(*m, *n),
        Command::Galois { p, conjugation, .. } => galois(&cfg, *p, *conjugation),
        Command::SatoTate { prime_bound, stability, .. } => sato_tate(&cfg, *prime_bound, *stability),
        Command::GkVerify { alpha, p, p_max, .. } => gk_verify(&cfg, alpha, *p, *p_max),
        Command::Empirics { a, p_max, .. } => empirics(&cfg, a, *p_max),
    }
}

fn emit(cfg: &RunConfig, json: &Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(json)?;
    text.push('\n');
    match &cfg.output {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

/// Parses, runs and prints; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let cfg = cli.config();
    match Cache::resolve(cfg.cache.as_deref()) {
        Ok(Some(c)) => {
            cache::install(c);
        }
        Ok(None) => {}
        Err(e) => {
            eprintln!("error: cache: {e}");
            return EXIT_USAGE;
        }
    }
    let outcome = match execute(&cli) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    if let Err(e) = emit(&cfg, &outcome.json) {
        eprintln!("error: {e}");
        return EXIT_USAGE;
    }
    if outcome.ok { EXIT_OK } else { EXIT_VERIFY }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> std::result::Result<Cli, clap::Error> {
        Cli::try_parse_from(std::iter::once("fermat-st").chain(args.iter().copied()))
    }

    #[test]
    fn rejects_even_m_and_bad_lists() {
        assert!(parse(&["mt", "--m", "4"]).is_err());
        assert!(parse(&["mt", "--m", "1"]).is_err());
        assert!(parse(&["gk-verify", "--m", "3", "--alpha", "1,x", "--p", "5"]).is_err());
        assert!(parse(&["gk-verify", "--m", "3", "--alpha", "1,2"]).is_err());
        assert!(parse(&["galois", "--m", "3"]).is_err());
        assert!(parse(&["mt", "--m", "5", "--bogus"]).is_err());
        assert_eq!(run(["fermat-st", "mt", "--m", "6"]), EXIT_USAGE);
        assert_eq!(run(["fermat-st", "gk-verify", "--m", "3", "--alpha", "1,1", "--p", "5"]), EXIT_USAGE);
    }

    #[test]
    fn mt_m5() {
        let o = execute(&parse(&["mt", "--m", "5"]).unwrap()).unwrap();
        assert_eq!(o.json["rank"], 1);
        assert_eq!(o.json["q"], 2);
    }

    #[test]
    fn gk_m3() {
        let cli = parse(&["gk-verify", "--m", "3", "--alpha", "1,2", "--p", "5", "--k", "20"]).unwrap();
        let o = execute(&cli).unwrap();
        assert!(o.ok);
        assert_eq!(o.json["verdict"], "verified");
        assert_eq!(o.json["lhs"], to_value(&CycloNumber::from_int(1, -1)).unwrap());
    }

    #[test]
    fn negative_a_parses() {
        let cli = parse(&["empirics", "--m", "3", "--a", "-1", "--p-max", "20"]).unwrap();
        assert_eq!(cli.config().prime_budget, Some(20));
        let o = execute(&cli).unwrap();
        assert!(o.ok, "{}", o.json);
        assert_eq!(o.json["a"], "-1");
    }
}
