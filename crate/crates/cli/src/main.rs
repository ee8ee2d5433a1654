use clap::{Args, Parser, Subcommand, ValueEnum};
use k3bm::brauergroup::{classify, generator_descriptors, AlgebraicPart};
use k3bm::census::{self, Depth, Mode};
use k3bm::cohomology::{self, WeightedShape};
use k3bm::obstruction::{decide_obstruction, lemma_oracle_suite, Options, Verdict};
use k3bm::surface::{algebra_by_name, catalog_algebras, AlgebraKind, Surface};
use serde_json::{json, Value};
use std::io::Write;
use std::process::ExitCode;

const SCHEMA_VERSION: &str = "1";

#[derive(Parser)]
#[command(name = "k3bm", version, about = "Brauer-Manin obstructions on w^2 = A1 x^6 + A2 y^6 + A3 z^6")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    global: Global,
}

#[derive(Args, Clone)]
struct Global {
    /// worker threads
    #[arg(long, global = true, env = "K3BM_JOBS")]
    jobs: Option<usize>,
    /// precision cap for the local oracle
    #[arg(long, global = true, default_value_t = 40)]
    precision_cap: u32,
    /// confirm every fast-path answer with the brute-force oracle
    #[arg(long, global = true)]
    verify_fastpaths: bool,
    /// exit 2 when any verdict is Unknown
    #[arg(long, global = true)]
    strict: bool,
}

#[derive(Subcommand)]
enum Command {
    /// classify Br and decide the obstruction for one surface
    Analyze {
        #[arg(allow_hyphen_values = true)]
        a1: i128,
        #[arg(allow_hyphen_values = true)]
        a2: i128,
        #[arg(allow_hyphen_values = true)]
        a3: i128,
        /// comma-separated algebra names, e.g. A1,B2
        #[arg(long, value_delimiter = ',')]
        algebras: Option<Vec<String>>,
    },
    /// counts over the box |Ai| <= T
    Census {
        t: i128,
        #[arg(long, conflicts_with = "sample")]
        exhaustive: bool,
        /// sample size
        #[arg(long)]
        sample: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = DepthArg::Obstruction)]
        depth: DepthArg,
        /// write CSV here
        #[arg(long)]
        csv: Option<std::path::PathBuf>,
        /// one CSV row per triple instead of aggregated rows
        #[arg(long, requires = "csv")]
        audit: bool,
    },
    /// brute-force point counts against the Jacobi-sum formula
    CohomologyVerify {
        /// degrees d0,d1,...,dn
        #[arg(long, value_delimiter = ',', default_value = "2,6,6,6")]
        shape: Vec<u32>,
        /// coefficients of x1..xn
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "1,1,1")]
        coeffs: Vec<i128>,
        /// explicit field sizes; default all admissible q up to --q-bound
        #[arg(long, value_delimiter = ',')]
        q: Option<Vec<u64>>,
        #[arg(long, default_value_t = 100)]
        q_bound: u64,
    },
    /// density of primes p <= bound with r a cube in Q_p
    Density {
        #[arg(allow_hyphen_values = true)]
        r: i128,
        #[arg(long, default_value_t = 100_000)]
        bound: u64,
    },
    /// oracle-vs-lemma and identity checks
    Selftest {
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum DepthArg {
    Brauer,
    Obstruction,
}

enum Failure {
    Usage(String),
    Check,
    Unknown,
}

struct Outcome {
    result: Value,
    summary: String,
    failure: Option<Failure>,
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn surface(a1: i128, a2: i128, a3: i128) -> Result<Surface, Failure> {
    Surface::new(a1, a2, a3).map_err(|e| usage(e.to_string()))
}

fn analyze(g: &Global, a: [i128; 3], names: &Option<Vec<String>>) -> Result<Outcome, Failure> {
    let x = surface(a[0], a[1], a[2])?;
    let c = classify(&x);
    let (algs, source) = match names {
        Some(ns) => {
            let mut v = vec![];
            for n in ns {
                v.push(algebra_by_name(&x, n).ok_or_else(|| usage(format!("{n} is not defined over Q for {x}")))?);
            }
            (v, "user")
        }
        None => match &c.algebraic {
            AlgebraicPart::Generators(_) => (generator_descriptors(&x, &c.algebraic), "classification"),
            _ => (catalog_algebras(&x), "catalog"),
        },
    };
    let opts = Options { precision_cap: g.precision_cap, verify_fastpaths: g.verify_fastpaths };
    let rep = decide_obstruction(&x, &algs, &opts);
    let summary = format!("{x}: {} ({})", rep.verdict.label(), c.row);
    let failure = (g.strict && rep.verdict.is_unknown()).then_some(Failure::Unknown);
    Ok(Outcome {
        result: json!({
            "coefficients": a.map(|v| v.to_string()),
            "generator_source": source,
            "classification": c,
            "status": rep.verdict.label(),
            "verdict": rep.verdict,
            "algebras": rep.algebras,
            "places": rep.places,
            "transcendental_trivial": c.transcendental.values().all(|e| e.is_trivial()),
        }),
        summary,
        failure,
    })
}

#[allow(clippy::too_many_arguments)]
fn run_census(
    g: &Global,
    t: i128,
    exhaustive: bool,
    sample: Option<usize>,
    seed: u64,
    depth: DepthArg,
    csv: &Option<std::path::PathBuf>,
    audit: bool,
) -> Result<Outcome, Failure> {
    if t < 1 {
        return Err(usage("T must be at least 1"));
    }
    let mode = match (exhaustive, sample) {
        (_, Some(size)) if size > 0 => Mode::Sampled { size, seed },
        (_, Some(_)) => return Err(usage("sample size must be positive")),
        _ => Mode::Exhaustive,
    };
    let depth = match depth {
        DepthArg::Brauer => Depth::Brauer,
        DepthArg::Obstruction => Depth::Obstruction,
    };
    let opts = Options { precision_cap: g.precision_cap, verify_fastpaths: g.verify_fastpaths };
    let rec = census::census(t, mode, depth, &opts);
    if let Some(path) = csv {
        let mut out = String::new();
        if audit {
            out.push_str(census::AUDIT_HEADER);
            out.push('\n');
            for o in census::audit_rows(t, depth, &opts) {
                out.push_str(&census::audit_csv_row(&o));
                out.push('\n');
            }
        } else {
            out.push_str("T,field,count\n");
            let v = serde_json::to_value(rec.counts).unwrap();
            for (k, n) in v.as_object().unwrap() {
                out.push_str(&format!("{t},{k},{n}\n"));
            }
        }
        std::fs::write(path, out).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    }
    let c = rec.counts;
    let summary = format!(
        "T={t}: total {} nonconstant {} (ratio {:.4}) obstructed {} [N1 {} N2 {} N3 {}] unknown {}",
        c.total, c.nonconstant_br, rec.nonconstant_ratio, c.obstructed_total, c.n1, c.n2, c.n3, c.unknown
    );
    let failure = (g.strict && c.unknown > 0).then_some(Failure::Unknown);
    Ok(Outcome { result: serde_json::to_value(&rec).unwrap(), summary, failure })
}

fn cohomology_verify(shape: &[u32], coeffs: &[i128], qs: &Option<Vec<u64>>, q_bound: u64) -> Result<Outcome, Failure> {
    let sh = WeightedShape::new(shape.to_vec()).map_err(|e| usage(e.to_string()))?;
    if coeffs.len() != shape.len() - 1 || coeffs.contains(&0) {
        return Err(usage(format!("need {} nonzero coefficients", shape.len() - 1)));
    }
    let qs = qs.clone().unwrap_or_else(|| cohomology::admissible_q(sh.d(), q_bound));
    let mut rows = vec![];
    for &q in &qs {
        let r = cohomology::point_count_check(&sh, coeffs, q).map_err(|e| usage(e.to_string()))?;
        rows.push(r);
    }
    let ok = rows.iter().all(|r| r.agrees());
    let lat = cohomology::build_primitive_lattice(&sh);
    let det = cohomology::determinant(&lat.gram).abs();
    let mut result = json!({
        "shape": shape,
        "coefficients": coeffs.iter().map(|v| v.to_string()).collect::<Vec<_>>(),
        "counts": rows,
        "all_agree": ok,
        "primitive_rank": lat.rank,
        "primitive_discriminant_order": det.to_string(),
        "d_q": sh.d_q(),
    });
    if sh.degrees == WeightedShape::sextic().degrees {
        result["transcendental"] = serde_json::to_value(cohomology::transcendental_lattice(&lat)).unwrap();
    }
    let summary = format!("{} field sizes, formula {}", qs.len(), if ok { "agrees" } else { "DISAGREES" });
    Ok(Outcome { result, summary, failure: (!ok).then_some(Failure::Check) })
}

fn density(r: i128, bound: u64) -> Result<Outcome, Failure> {
    let d = census::frobenian_density(r, bound).map_err(|e| usage(e.to_string()))?;
    let summary = format!("r={r}: {}/{} = {:.4} (expected {:.4})", d.hits, d.primes, d.density, d.expected);
    Ok(Outcome { result: serde_json::to_value(d).unwrap(), summary, failure: None })
}

fn check(name: &str, passed: bool, detail: Value) -> Value {
    json!({"name": name, "passed": passed, "detail": detail})
}

fn selftest(seed: u64) -> Result<Outcome, Failure> {
    let mut checks = vec![];
    let lem = lemma_oracle_suite(seed, 10);
    checks.push(check("lemma_oracle", lem.passed(), serde_json::to_value(&lem).unwrap()));

    let opts = Options::default();
    for (a, kind) in [([-3, 97, 21728], AlgebraKind::A), ([28, 2, 686], AlgebraKind::B)] {
        let x = Surface::new(a[0], a[1], a[2]).unwrap();
        let d = k3bm::surface::descriptor(&x, kind, 1).unwrap();
        let v = decide_obstruction(&x, &[d], &opts).verdict;
        checks.push(check(&format!("obstruction {x}"), v.is_obstructed(), json!(v.label())));
    }
    let v = decide_obstruction(&Surface::new(1, 1, 1).unwrap(), &[], &opts).verdict;
    checks.push(check("rational point (1, 1, 1)", matches!(v, Verdict::NotObstructed { .. }), json!(v.label())));

    for sh in [WeightedShape::sextic(), WeightedShape::fermat_quartic()] {
        let coeffs = vec![1i128; sh.degrees.len() - 1];
        let qs = cohomology::admissible_q(sh.d(), 50);
        let bad: Vec<u64> = qs.iter().copied().filter(|&q| !cohomology::point_count_check(&sh, &coeffs, q).unwrap().agrees()).collect();
        checks.push(check(&format!("point counts {:?}", sh.degrees), bad.is_empty(), json!({"q": qs, "failures": bad})));
    }
    let rows: Vec<_> = cohomology::split_e_primary(200).iter().take(6).map(cohomology::jacobi_table_check).collect();
    checks.push(check("jacobi table", rows.iter().all(|r| r.mismatches.is_empty()), json!(rows.len())));
    let (pairs, fails) = cohomology::sextic_reciprocity_check(150);
    checks.push(check("sextic reciprocity", fails == 0 && pairs > 0, json!({"pairs": pairs, "failures": fails})));

    let t = cohomology::transcendental_lattice_sextic();
    checks.push(check(
        "transcendental lattice",
        t.gram == vec![vec![24, 12], vec![12, 24]] && t.discriminant == vec![12, 36],
        serde_json::to_value(&t).unwrap(),
    ));
    let dom = (census::dominant_count_direct(6), census::dominant_count_classified(6));
    checks.push(check("dominant count", dom.0 == dom.1, json!([dom.0, dom.1])));

    let failed: Vec<String> = checks.iter().filter(|c| c["passed"] == false).map(|c| c["name"].as_str().unwrap().to_string()).collect();
    let summary = if failed.is_empty() { format!("{} checks passed", checks.len()) } else { format!("failed: {}", failed.join(", ")) };
    let failure = (!failed.is_empty()).then_some(Failure::Check);
    Ok(Outcome { result: json!({"checks": checks, "passed": failed.is_empty()}), summary, failure })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let g = cli.global.clone();
    let jobs = g.jobs.unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)).max(1);
    let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();

    let (name, outcome) = match &cli.command {
        Command::Analyze { a1, a2, a3, algebras } => ("analyze", analyze(&g, [*a1, *a2, *a3], algebras)),
        Command::Census { t, exhaustive, sample, seed, depth, csv, audit } => {
            ("census", run_census(&g, *t, *exhaustive, *sample, *seed, *depth, csv, *audit))
        }
        Command::CohomologyVerify { shape, coeffs, q, q_bound } => ("cohomology-verify", cohomology_verify(shape, coeffs, q, *q_bound)),
        Command::Density { r, bound } => ("density", density(*r, *bound)),
        Command::Selftest { seed } => ("selftest", selftest(*seed)),
    };
    let seed = match &cli.command {
        Command::Census { seed, .. } | Command::Selftest { seed } => Some(*seed),
        _ => None,
    };
    let algebras = match &cli.command {
        Command::Analyze { algebras, .. } => algebras.clone(),
        _ => None,
    };
    let out = match outcome {
        Ok(o) => o,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            return ExitCode::from(1);
        }
        Err(_) => unreachable!(),
    };
    let doc = json!({
        "schema_version": SCHEMA_VERSION,
        "command": name,
        "metadata": {
            "version": env!("CARGO_PKG_VERSION"),
            "jobs": jobs,
            "precision_cap": g.precision_cap,
            "verify_fastpaths": g.verify_fastpaths,
            "strict": g.strict,
            "seed": seed,
            "algebras": algebras,
        },
        "result": out.result,
    });
    let mut stdout = std::io::stdout().lock();
    let _ = writeln!(stdout, "{}", serde_json::to_string_pretty(&doc).unwrap());
    eprintln!("{}", out.summary);
    match out.failure {
        None => ExitCode::SUCCESS,
        Some(Failure::Unknown) => ExitCode::from(2),
        Some(_) => ExitCode::from(1),
    }
}
