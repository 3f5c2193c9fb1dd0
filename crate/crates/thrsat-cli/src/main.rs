//! Command-line front end for the threshold deciders.
//!
//! Exit codes: 0 = YES, 1 = NO, 2 = a resource budget was exceeded (and no
//! fallback was requested), 64 = the input or a threshold failed to parse,
//! anything else >2 = other error. Subcommands that do not decide anything
//! (analyze, reduce, gen) exit 0 on success; fuzz exits nonzero when any
//! instance disagrees with the oracle.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fs;
use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;

use thrsat::combinatorics::{maximal_disjoint_set, DisjointSet, DEFAULT_LEAF_CAP};
use thrsat::formula::{compare_count_to_threshold, parse_dimacs, VarRole};
use thrsat::oracle::{brute_count, random_kcnf, GeneratorConfig, BRUTE_COUNT_MAX_VARS};
use thrsat::solvers::{
    decide_gt_thr3sat_with_cap, decide_gt_thrksat_with_cap, decide_maj3sat_with_cap,
    decide_thr2sat_with_cap, decide_thr3sat_with_cap, decide_thrksat_with_cap, msb_count_with_cap,
};
use thrsat::{
    Answer, Budget, Certificate, CnfFormula, ReductionKind, ReductionRecord, SolverError,
    Threshold, Verdict,
};

const EXIT_NO: u8 = 1;
const EXIT_BUDGET: u8 = 2;
const EXIT_ERROR: u8 = 3;
const EXIT_PARSE: u8 = 64;

#[derive(Parser)]
#[command(
    name = "thrsat",
    version,
    about = "Decide whether a k-CNF has at least rho * 2^n satisfying assignments",
    long_about = "Threshold model counting for k-CNF formulas. Formulas are read as DIMACS \
                  CNF (from FILE or stdin); thresholds are exact rationals written p/q. \
                  Role directives `c role e <vars> 0` / `c role p <vars> 0` tag variables \
                  for the two-level subcommands. Exit codes: 0 YES, 1 NO, 2 budget \
                  exceeded, 64 parse error, 3 other errors."
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Decide #SAT(F) >= rho * 2^n, or strictly > with --gt
    Decide {
        /// DIMACS CNF file; stdin when omitted
        file: Option<PathBuf>,
        /// Threshold as an exact rational p/q in (0,1)
        #[arg(long)]
        rho: String,
        /// Decide the strict inequality #SAT(F) > rho * 2^n instead
        #[arg(long)]
        gt: bool,
        /// On budget exhaustion, fall back to brute-force counting (n <= 26)
        #[arg(long)]
        fallback_oracle: bool,
        /// Decomposition-tree leaf budget (overrides THRSAT_BUDGET_LEAVES)
        #[arg(long)]
        budget_leaves: Option<u64>,
        /// Route to the decider for this clause width instead of the measured one
        #[arg(long)]
        k: Option<usize>,
        /// Emit the verdict as JSON
        #[arg(long)]
        json: bool,
    },
    /// Compute the top bits of the satisfying-assignment count
    Msb {
        file: Option<PathBuf>,
        /// Number of refinement rounds; prints bits b_0..b_t of sum b_j 2^(n-j)
        #[arg(long)]
        bits: u32,
        #[arg(long)]
        budget_leaves: Option<u64>,
        #[arg(long)]
        json: bool,
    },
    /// Decide E-MAJ-2SAT on a role-tagged 2-CNF: is there an assignment of the
    /// existential block under which at least rho of the probabilistic block satisfies F?
    Emaj {
        file: Option<PathBuf>,
        #[arg(long)]
        rho: String,
        #[arg(long)]
        budget_leaves: Option<u64>,
        #[arg(long)]
        json: bool,
    },
    /// Decide MAJ-MAJ-2SAT on a role-tagged 2-CNF: do at least rho of the outer
    /// assignments have at least sigma of the inner block satisfying F?
    Majmaj {
        file: Option<PathBuf>,
        #[arg(long)]
        rho: String,
        /// Inner threshold; defaults to rho
        #[arg(long)]
        sigma: Option<String>,
        #[arg(long)]
        budget_leaves: Option<u64>,
        #[arg(long)]
        json: bool,
    },
    /// Report formula structure: widths, degenerate clauses, disjoint set, roles
    Analyze {
        file: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Apply a count-preserving transformer and emit the result as DIMACS
    Reduce {
        file: Option<PathBuf>,
        #[arg(long, value_enum)]
        kind: ReduceKind,
        /// Fresh-variable count for add-one-long-clause (1 <= t <= n)
        #[arg(long)]
        t: Option<u32>,
        /// Emit a JSON record with both formulas instead of bare DIMACS
        #[arg(long)]
        json: bool,
    },
    /// Generate a seeded random k-CNF and print it as DIMACS
    Gen {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Tag variables 1..=OUTER existential and the rest probabilistic
        #[arg(long)]
        outer: Option<u32>,
    },
    /// Run seeded random instances through a decider and the brute-force
    /// oracle; print one line per instance and exit nonzero on any mismatch
    Fuzz {
        #[arg(long)]
        count: u64,
        #[arg(long)]
        n: u32,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        rho: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Fuzz the strict deciders instead
        #[arg(long)]
        gt: bool,
        #[arg(long)]
        budget_leaves: Option<u64>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ReduceKind {
    GtToMaj,
    MajToGt,
    AddOneLongClause,
    GtHardnessGadget,
    Square,
}

/// A failure routed to a specific exit code; the message goes to stderr.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn parse(message: impl Into<String>) -> Self {
        Failure { code: EXIT_PARSE, message: message.into() }
    }

    fn budget(message: impl Into<String>) -> Self {
        Failure { code: EXIT_BUDGET, message: message.into() }
    }

    fn error(message: impl Into<String>) -> Self {
        Failure { code: EXIT_ERROR, message: message.into() }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("thrsat: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.cmd {
        Cmd::Decide { file, rho, gt, fallback_oracle, budget_leaves, k, json } => {
            cmd_decide(file, &rho, gt, fallback_oracle, budget_leaves, k, json)
        }
        Cmd::Msb { file, bits, budget_leaves, json } => cmd_msb(file, bits, budget_leaves, json),
        Cmd::Emaj { file, rho, budget_leaves, json } => {
            cmd_two_level(file, &rho, None, budget_leaves, json, false)
        }
        Cmd::Majmaj { file, rho, sigma, budget_leaves, json } => {
            cmd_two_level(file, &rho, sigma.as_deref(), budget_leaves, json, true)
        }
        Cmd::Analyze { file, json } => cmd_analyze(file, json),
        Cmd::Reduce { file, kind, t, json } => cmd_reduce(file, kind, t, json),
        Cmd::Gen { n, m, k, seed, outer } => cmd_gen(n, m, k, seed, outer),
        Cmd::Fuzz { count, n, m, k, rho, seed, gt, budget_leaves } => {
            cmd_fuzz(count, n, m, k, &rho, seed, gt, budget_leaves)
        }
    }
}

// ---------------------------------------------------------------------------
// shared plumbing
// ---------------------------------------------------------------------------

fn read_formula(file: Option<&PathBuf>) -> Result<CnfFormula, Failure> {
    let (bytes, source) = match file {
        Some(path) => (
            fs::read(path).map_err(|e| Failure::error(format!("{}: {e}", path.display())))?,
            path.display().to_string(),
        ),
        None => {
            let mut buf = Vec::new();
            std::io::stdin()
                .read_to_end(&mut buf)
                .map_err(|e| Failure::error(format!("stdin: {e}")))?;
            (buf, "<stdin>".to_string())
        }
    };
    parse_dimacs(&bytes).map_err(|e| Failure::parse(format!("{source}: {e}")))
}

fn parse_threshold(name: &str, text: &str) -> Result<Threshold, Failure> {
    Threshold::parse(text).map_err(|e| Failure::parse(format!("{name} `{text}`: {e}")))
}

/// Budget precedence: flag, then THRSAT_BUDGET_LEAVES, then the default.
fn leaf_budget(flag: Option<u64>) -> Result<u64, Failure> {
    if let Some(v) = flag {
        return Ok(v);
    }
    match std::env::var("THRSAT_BUDGET_LEAVES") {
        Ok(text) => text
            .trim()
            .parse()
            .map_err(|_| Failure::error(format!("THRSAT_BUDGET_LEAVES `{text}` is not a u64"))),
        Err(_) => Ok(DEFAULT_LEAF_CAP),
    }
}

fn solver_failure(e: SolverError) -> Failure {
    match e {
        SolverError::BudgetExceeded { .. } => Failure::budget(e.to_string()),
        _ => Failure::error(e.to_string()),
    }
}

fn print_verdict(v: &Verdict, json: bool) {
    if json {
        println!("{}", serde_json::to_string_pretty(v).expect("verdicts serialize"));
        return;
    }
    println!("answer: {}", if v.is_yes() { "YES" } else { "NO" });
    println!("branch: {}", v.branch_tag);
    match &v.certificate {
        Certificate::ExactCount { count, conditioned_on, tree } => {
            let mut line = format!("certificate: exact count {}", count.value());
            if !conditioned_on.is_empty() {
                let lits: Vec<String> =
                    conditioned_on.iter().map(|l| l.dimacs().to_string()).collect();
                line.push_str(&format!(" conditioned on [{}]", lits.join(", ")));
            }
            if let Some(tree) = tree {
                line.push_str(&format!(" ({} tree leaves)", tree.num_leaves()));
            }
            println!("{line}");
        }
        Certificate::NoWitness(w) => {
            let idx: Vec<String> = w.clause_indices.iter().map(usize::to_string).collect();
            println!(
                "certificate: {} witness, clauses [{}], satisfying fraction <= {}",
                v.certificate.kind_name(),
                idx.join(", "),
                w.bound
            );
        }
        Certificate::HittingSet { literals } => {
            let lits: Vec<String> = literals.iter().map(|l| l.dimacs().to_string()).collect();
            println!("certificate: hitting set [{}]", lits.join(", "));
        }
    }
    for (key, value) in &v.params_used {
        println!("param: {key} = {value}");
    }
    println!("leaves expanded: {}", v.budget.leaves_expanded);
}

fn verdict_exit(v: &Verdict) -> u8 {
    if v.is_yes() {
        0
    } else {
        EXIT_NO
    }
}

// ---------------------------------------------------------------------------
// decide
// ---------------------------------------------------------------------------

fn route_decide(
    f: &CnfFormula,
    rho: &Threshold,
    gt: bool,
    k: usize,
    cap: u64,
) -> Result<Verdict, SolverError> {
    let half = Threshold::from_u64(1, 2).expect("1/2 is a threshold");
    if gt {
        if k <= 3 {
            decide_gt_thr3sat_with_cap(f, rho, cap)
        } else {
            decide_gt_thrksat_with_cap(f, rho, cap)
        }
    } else if k <= 2 {
        decide_thr2sat_with_cap(f, rho, cap)
    } else if k == 3 && *rho == half {
        decide_maj3sat_with_cap(f, cap)
    } else if k == 3 {
        decide_thr3sat_with_cap(f, rho, cap)
    } else {
        decide_thrksat_with_cap(f, rho, cap)
    }
}

/// Brute-force verdict used when a budget trips and --fallback-oracle is set.
fn oracle_verdict(f: &CnfFormula, rho: &Threshold, gt: bool) -> Result<Verdict, Failure> {
    let count = brute_count(f).map_err(|e| Failure::error(e.to_string()))?;
    let ord = compare_count_to_threshold(&count, rho, f.num_vars());
    let yes = if gt { ord == Ordering::Greater } else { ord != Ordering::Less };
    let mut params = BTreeMap::new();
    params.insert("mode".to_string(), "oracle-fallback".to_string());
    params.insert("rho".to_string(), rho.to_string());
    Ok(Verdict {
        answer: if yes { Answer::Yes } else { Answer::No },
        branch_tag: "oracle-fallback".to_string(),
        certificate: Certificate::ExactCount { count, conditioned_on: Vec::new(), tree: None },
        params_used: params,
        budget: Budget { leaves_expanded: 1u64 << f.num_vars(), exceeded: false },
    })
}

fn cmd_decide(
    file: Option<PathBuf>,
    rho_text: &str,
    gt: bool,
    fallback_oracle: bool,
    budget_leaves: Option<u64>,
    k_override: Option<usize>,
    json: bool,
) -> Result<u8, Failure> {
    let f = read_formula(file.as_ref())?;
    let rho = parse_threshold("rho", rho_text)?;
    let cap = leaf_budget(budget_leaves)?;
    let k = k_override.unwrap_or_else(|| f.max_width().max(2));
    match route_decide(&f, &rho, gt, k, cap) {
        Ok(v) => {
            print_verdict(&v, json);
            Ok(verdict_exit(&v))
        }
        Err(SolverError::BudgetExceeded { what, spent, cap }) if fallback_oracle => {
            eprintln!("thrsat: {what} exceeded the budget ({spent} against cap {cap}); falling back to the oracle");
            let v = oracle_verdict(&f, &rho, gt)?;
            print_verdict(&v, json);
            Ok(verdict_exit(&v))
        }
        Err(e) => Err(solver_failure(e)),
    }
}

// ---------------------------------------------------------------------------
// msb
// ---------------------------------------------------------------------------

fn cmd_msb(
    file: Option<PathBuf>,
    bits: u32,
    budget_leaves: Option<u64>,
    json: bool,
) -> Result<u8, Failure> {
    let f = read_formula(file.as_ref())?;
    let cap = leaf_budget(budget_leaves)?;
    let bitvec = msb_count_with_cap(&f, bits, cap).map_err(solver_failure)?;
    let text: String = bitvec.iter().map(|b| char::from(b'0' + b)).collect();
    if json {
        let out = serde_json::json!({
            "bits": text,
            "rounds": bits,
            "num_vars": f.num_vars(),
        });
        println!("{}", serde_json::to_string_pretty(&out).expect("json"));
    } else {
        println!("{text}");
    }
    Ok(0)
}

// ---------------------------------------------------------------------------
// emaj / majmaj
// ---------------------------------------------------------------------------

fn cmd_two_level(
    file: Option<PathBuf>,
    rho_text: &str,
    sigma_text: Option<&str>,
    budget_leaves: Option<u64>,
    json: bool,
    majmaj: bool,
) -> Result<u8, Failure> {
    let f = read_formula(file.as_ref())?;
    let rho = parse_threshold("rho", rho_text)?;
    let cap = leaf_budget(budget_leaves)?;
    let v = if majmaj {
        let sigma = match sigma_text {
            Some(text) => parse_threshold("sigma", text)?,
            None => rho.clone(),
        };
        thrsat::inference::decide_majmaj2sat_with_cap(&f, &rho, &sigma, cap)
            .map_err(solver_failure)?
    } else {
        thrsat::inference::decide_emaj2sat_with_cap(&f, &rho, cap).map_err(solver_failure)?
    };
    print_verdict(&v, json);
    Ok(verdict_exit(&v))
}

// ---------------------------------------------------------------------------
// analyze
// ---------------------------------------------------------------------------

/// Product of `1 - 2^-w` over the member clauses: an upper bound on the
/// satisfying fraction of the host formula.
fn disjoint_fraction_bound(f: &CnfFormula, s: &DisjointSet) -> BigRational {
    s.clause_indices()
        .iter()
        .map(|&i| {
            let denom = BigInt::one() << f.clause(i).width();
            BigRational::new(&denom - BigInt::one(), denom)
        })
        .product()
}

fn cmd_analyze(file: Option<PathBuf>, json: bool) -> Result<u8, Failure> {
    let f = read_formula(file.as_ref())?;
    let normalized = f.normalize();
    let tautologies = f.clauses().iter().filter(|c| c.is_tautology()).count();
    let dropped_duplicates = f.num_clauses() - tautologies - normalized.num_clauses();
    let mut width_histogram: BTreeMap<usize, usize> = BTreeMap::new();
    for c in normalized.clauses() {
        *width_histogram.entry(c.width()).or_insert(0) += 1;
    }
    let disjoint = maximal_disjoint_set(&normalized, None);
    let fraction_bound = disjoint_fraction_bound(&normalized, &disjoint);
    let existential = f.vars_with_role(VarRole::Existential).len();
    let probabilistic = f.vars_with_role(VarRole::Probabilistic).len();
    if json {
        let histogram: BTreeMap<String, usize> =
            width_histogram.iter().map(|(w, c)| (w.to_string(), *c)).collect();
        let out = serde_json::json!({
            "num_vars": f.num_vars(),
            "num_clauses": f.num_clauses(),
            "max_width": normalized.max_width(),
            "tautologies": tautologies,
            "duplicate_clauses": dropped_duplicates,
            "normalized_clauses": normalized.num_clauses(),
            "has_empty_clause": normalized.has_empty_clause(),
            "width_histogram": histogram,
            "disjoint_set_size": disjoint.len(),
            "disjoint_fraction_bound": fraction_bound.to_string(),
            "roles": {
                "existential": existential,
                "probabilistic": probabilistic,
                "plain": f.num_vars() as usize - existential - probabilistic,
            },
        });
        println!("{}", serde_json::to_string_pretty(&out).expect("json"));
        return Ok(0);
    }
    println!("variables: {}", f.num_vars());
    println!(
        "clauses: {} ({} after dropping {} tautologies and {} duplicates)",
        f.num_clauses(),
        normalized.num_clauses(),
        tautologies,
        dropped_duplicates
    );
    println!("max width: {}", normalized.max_width());
    if normalized.has_empty_clause() {
        println!("contains an empty clause: unsatisfiable");
    }
    let histogram: Vec<String> =
        width_histogram.iter().map(|(w, c)| format!("{w}: {c}")).collect();
    println!("width histogram: {{{}}}", histogram.join(", "));
    println!(
        "maximal variable-disjoint set: {} clauses, satisfying fraction <= {}",
        disjoint.len(),
        fraction_bound
    );
    if existential + probabilistic > 0 {
        println!(
            "roles: {existential} existential, {probabilistic} probabilistic, {} plain",
            f.num_vars() as usize - existential - probabilistic
        );
    }
    Ok(0)
}

// ---------------------------------------------------------------------------
// reduce
// ---------------------------------------------------------------------------

fn cmd_reduce(
    file: Option<PathBuf>,
    kind: ReduceKind,
    t: Option<u32>,
    json: bool,
) -> Result<u8, Failure> {
    let f = read_formula(file.as_ref())?;
    let n = f.num_vars();
    let kind = match kind {
        ReduceKind::GtToMaj => {
            if n == 0 {
                return Err(Failure::error("gt-to-maj needs at least one variable"));
            }
            ReductionKind::GtToMaj
        }
        ReduceKind::MajToGt => {
            if n == 0 || n > 62 {
                return Err(Failure::error("maj-to-gt supports 1..=62 variables"));
            }
            ReductionKind::MajToGt
        }
        ReduceKind::AddOneLongClause => {
            let t = t.ok_or_else(|| Failure::error("add-one-long-clause requires --t"))?;
            if t == 0 || t > n {
                return Err(Failure::error(format!(
                    "--t must lie in 1..={n} for this formula, got {t}"
                )));
            }
            ReductionKind::AddOneLongClause { t }
        }
        ReduceKind::GtHardnessGadget => ReductionKind::GtHardnessGadget,
        ReduceKind::Square => ReductionKind::Square,
    };
    let record = ReductionRecord::new(kind, f);
    if json {
        let out = serde_json::json!({
            "name": record.kind.name(),
            "input": {
                "num_vars": record.input.num_vars(),
                "num_clauses": record.input.num_clauses(),
                "dimacs": record.input.to_dimacs(),
            },
            "output": {
                "num_vars": record.output.num_vars(),
                "num_clauses": record.output.num_clauses(),
                "dimacs": record.output.to_dimacs(),
            },
        });
        println!("{}", serde_json::to_string_pretty(&out).expect("json"));
    } else {
        print!("{}", record.output.to_dimacs());
    }
    Ok(0)
}

// ---------------------------------------------------------------------------
// gen
// ---------------------------------------------------------------------------

fn cmd_gen(n: u32, m: usize, k: usize, seed: u64, outer: Option<u32>) -> Result<u8, Failure> {
    let mut f = random_kcnf(&GeneratorConfig::new(n, m, k, seed))
        .map_err(|e| Failure::error(e.to_string()))?;
    if let Some(outer) = outer {
        if outer > n {
            return Err(Failure::error(format!("--outer {outer} exceeds --n {n}")));
        }
        for v in 1..=n {
            let role =
                if v <= outer { VarRole::Existential } else { VarRole::Probabilistic };
            f.set_role(v, role);
        }
    }
    print!("{}", f.to_dimacs());
    Ok(0)
}

// ---------------------------------------------------------------------------
// fuzz
// ---------------------------------------------------------------------------

fn cmd_fuzz(
    count: u64,
    n: u32,
    m: usize,
    k: usize,
    rho_text: &str,
    seed: u64,
    gt: bool,
    budget_leaves: Option<u64>,
) -> Result<u8, Failure> {
    let rho = parse_threshold("rho", rho_text)?;
    let cap = leaf_budget(budget_leaves)?;
    if n > BRUTE_COUNT_MAX_VARS {
        return Err(Failure::error(format!(
            "fuzzing needs the oracle: n must be <= {BRUTE_COUNT_MAX_VARS}"
        )));
    }
    let mut mismatches = 0u64;
    let mut budget_exceeded = 0u64;
    let mut yes = 0u64;
    for i in 0..count {
        let instance_seed = seed.wrapping_add(i);
        let f = random_kcnf(&GeneratorConfig::new(n, m, k, instance_seed))
            .map_err(|e| Failure::error(e.to_string()))?;
        let count = brute_count(&f).map_err(|e| Failure::error(e.to_string()))?;
        let ord = compare_count_to_threshold(&count, &rho, n);
        let expected = if gt { ord == Ordering::Greater } else { ord != Ordering::Less };
        match route_decide(&f, &rho, gt, k, cap) {
            Ok(v) => {
                if v.is_yes() == expected {
                    if v.is_yes() {
                        yes += 1;
                    }
                    println!(
                        "instance {i} seed {instance_seed}: {} ({}) ok",
                        if v.is_yes() { "YES" } else { "NO" },
                        v.branch_tag
                    );
                } else {
                    mismatches += 1;
                    println!(
                        "instance {i} seed {instance_seed}: MISMATCH decider={} oracle={} (count {})",
                        if v.is_yes() { "YES" } else { "NO" },
                        if expected { "YES" } else { "NO" },
                        count.value()
                    );
                    print!("{}", f.to_dimacs());
                }
            }
            Err(SolverError::BudgetExceeded { what, spent, cap }) => {
                budget_exceeded += 1;
                println!(
                    "instance {i} seed {instance_seed}: budget exceeded ({what}: {spent} against {cap})"
                );
            }
            Err(e) => return Err(Failure::error(format!("instance {i}: {e}"))),
        }
    }
    println!(
        "{count} instances: {yes} YES, {} NO, {budget_exceeded} budget-exceeded, {mismatches} mismatches",
        count - yes - budget_exceeded - mismatches
    );
    Ok(if mismatches > 0 { EXIT_NO } else { 0 })
}

