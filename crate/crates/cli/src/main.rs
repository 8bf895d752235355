//! `adelion`: generate wavelet bases, audit Gram matrices, apply Fourier
//! multipliers and check eigenrelations, decompositions and the Lizorkin
//! property from the command line.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use adelion::adelic::{adelic_gram, mra_basis, tensor_basis};
use adelion::padic::enumerate_shifts;
use adelion::wavelet::{
    haar2_wavelet, haar_wavelet, kozyrev_basis, modified_basis, normalized_copy,
    random_haar2_phases, HaarFamilyParams,
};
use adelion::{
    apply_symbol_sum, certify, decompose, eigen_check, gram_matrix, identity_deviation,
    lizorkin_check, verify_eigenrelation, AdelicFunction, AdelicIndex, AdelicSum, LocalFunction,
    Prime, Symbol, DEFAULT_TOL,
};
use anyhow::{anyhow, Context};
use clap::{error::ErrorKind, Args, CommandFactory, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

#[derive(Parser)]
#[command(
    name = "adelion",
    version,
    about = "Exact p-adic and adelic wavelet analysis"
)]
struct Cli {
    /// Seed for every randomized construction.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Tolerance; defaults to $ADELION_TOL, then 1e-12.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Include wall-clock time in the report.
    #[arg(long, global = true)]
    timing: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a basis as JSON.
    Basis(BasisArgs),
    /// Gram matrix of a basis file; exit 1 unless it is the identity.
    Gram {
        #[arg(long = "in")]
        input: PathBuf,
        /// CSV output (row,col,re,im).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Apply a Fourier multiplier to a function.
    Apply {
        #[arg(long)]
        symbol: PathBuf,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Eigenfunction criterion and eigenvalue for a wavelet index.
    Eigencheck {
        #[arg(long)]
        symbol: PathBuf,
        #[arg(long)]
        index: PathBuf,
    },
    /// Expand a Lizorkin function in the Kozyrev wavelet family.
    Decompose {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Check vanishing integrals and real-place moments.
    Lizorkin {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = 0)]
        moments: u32,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Kozyrev,
    Haar,
    Haar2,
    Modified,
    Adelic,
    Mra,
}

#[derive(Args)]
struct BasisArgs {
    #[arg(long, value_enum)]
    family: Family,
    /// Prime for the one-place families.
    #[arg(long)]
    p: Option<u64>,
    /// Haar family parameter file (JSON); random from --seed when absent.
    #[arg(long)]
    params: Option<PathBuf>,
    /// Haar support parameter s.
    #[arg(long, default_value_t = 0)]
    s: u32,
    /// Dilation range lo:hi.
    #[arg(long, value_parser = parse_range, allow_hyphen_values = true)]
    jbox: Option<(i64, i64)>,
    /// Largest dilation for the modified, adelic and MRA families.
    #[arg(long)]
    jmax: Option<u32>,
    /// Shifts a in I_p with denominator dividing p^depth.
    #[arg(long)]
    depth: Option<u32>,
    /// Places of an adelic family; every prime up to the largest is used.
    #[arg(long, value_delimiter = ',')]
    places: Vec<u64>,
    /// Real-place dilations of the tensor basis.
    #[arg(long, value_parser = parse_range, allow_hyphen_values = true)]
    real_j: Option<(i64, i64)>,
    /// Real-place shifts (tensor and MRA families).
    #[arg(long, value_parser = parse_range, allow_hyphen_values = true)]
    real_n: Option<(i64, i64)>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_range(s: &str) -> Result<(i64, i64), String> {
    let (a, b) = s.split_once(':').ok_or("expected lo:hi")?;
    let lo: i64 = a.trim().parse().map_err(|e| format!("{e}"))?;
    let hi: i64 = b.trim().parse().map_err(|e| format!("{e}"))?;
    if lo > hi {
        return Err(format!("empty range {lo}:{hi}"));
    }
    Ok((lo, hi))
}

/// A list of functions with their indices.
#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum BasisDoc {
    Local {
        p: Prime,
        functions: Vec<Entry<LocalFunction>>,
    },
    Adelic {
        functions: Vec<Entry<AdelicFunction>>,
    },
}

#[derive(Serialize, Deserialize)]
struct Entry<F> {
    index: Value,
    function: F,
}

/// A single elementary function or a finite combination.
#[derive(Deserialize)]
#[serde(untagged)]
enum FunctionDoc {
    Sum(AdelicSum),
    Single(AdelicFunction),
}

impl From<FunctionDoc> for AdelicSum {
    fn from(d: FunctionDoc) -> AdelicSum {
        match d {
            FunctionDoc::Sum(s) => s,
            FunctionDoc::Single(f) => f.into(),
        }
    }
}

#[derive(Serialize)]
struct Report {
    command: String,
    arguments: Vec<String>,
    input_digest: Option<String>,
    tolerance: f64,
    result: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    elapsed_seconds: Option<f64>,
}

enum Failure {
    Usage(ErrorKind, String),
    Error(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Error(e)
    }
}

impl From<adelion::Error> for Failure {
    fn from(e: adelion::Error) -> Self {
        Failure::Error(e.into())
    }
}

/// Inputs read so far, hashed in order.
#[derive(Default)]
struct Inputs {
    hasher: Option<Sha256>,
}

impl Inputs {
    fn read(&mut self, path: &Path) -> anyhow::Result<Vec<u8>> {
        let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        self.hasher.get_or_insert_with(Sha256::new).update(&bytes);
        Ok(bytes)
    }

    fn json<T: for<'de> Deserialize<'de>>(&mut self, path: &Path) -> anyhow::Result<T> {
        let bytes = self.read(path)?;
        serde_json::from_slice(&bytes).with_context(|| format!("parsing {}", path.display()))
    }

    fn digest(self) -> Option<String> {
        self.hasher.map(|h| format!("{:x}", h.finalize()))
    }
}

struct Outcome {
    result: Value,
    passed: bool,
    /// Printed instead of the report (basis without --out).
    raw: Option<String>,
}

fn outcome(result: Value, passed: bool) -> Outcome {
    Outcome {
        result,
        passed,
        raw: None,
    }
}

fn tolerance(cli: Option<f64>) -> anyhow::Result<f64> {
    if let Some(t) = cli {
        return Ok(t);
    }
    match std::env::var("ADELION_TOL") {
        Ok(s) => s
            .trim()
            .parse()
            .with_context(|| format!("ADELION_TOL={s:?}")),
        Err(_) => Ok(DEFAULT_TOL),
    }
}

fn prime(p: u64) -> Result<Prime, Failure> {
    Prime::new(p).map_err(|e| Failure::Usage(ErrorKind::InvalidValue, e.to_string()))
}

fn need<T>(v: Option<T>, flag: &str, family: &str) -> Result<T, Failure> {
    v.ok_or_else(|| {
        Failure::Usage(
            ErrorKind::MissingRequiredArgument,
            format!("--{flag} is required for --family {family}"),
        )
    })
}

fn write_json(path: &Path, v: &impl Serialize) -> anyhow::Result<()> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    fs::write(path, s).with_context(|| format!("writing {}", path.display()))
}

fn local_entries(
    list: Vec<(impl Serialize, LocalFunction)>,
) -> anyhow::Result<Vec<Entry<LocalFunction>>> {
    list.into_iter()
        .map(|(i, f)| {
            Ok(Entry {
                index: serde_json::to_value(i)?,
                function: f,
            })
        })
        .collect()
}

fn haar_family(
    p: Prime,
    wavelets: Vec<(Value, LocalFunction)>,
    jbox: (i64, i64),
    depth: u32,
) -> Vec<(Value, LocalFunction)> {
    let mut out = Vec::new();
    for (label, psi) in &wavelets {
        for j in jbox.0..=jbox.1 {
            for a in enumerate_shifts(p, depth) {
                let index = json!({ "generator": label, "j": j, "a": a.value() });
                out.push((index, normalized_copy(psi, j, a.value())));
            }
        }
    }
    out
}

fn cmd_basis(a: &BasisArgs, seed: u64, inputs: &mut Inputs) -> Result<Outcome, Failure> {
    let name = a.family.to_possible_value().unwrap().get_name().to_string();
    let doc = match a.family {
        Family::Kozyrev => {
            let p = prime(need(a.p, "p", &name)?)?;
            let (lo, hi) = need(a.jbox, "jbox", &name)?;
            let depth = need(a.depth, "depth", &name)?;
            BasisDoc::Local {
                p,
                functions: local_entries(kozyrev_basis(p, lo, hi, depth))?,
            }
        }
        Family::Modified => {
            let p = prime(need(a.p, "p", &name)?)?;
            let jmax = need(a.jmax, "jmax", &name)?;
            let depth = need(a.depth, "depth", &name)?;
            BasisDoc::Local {
                p,
                functions: local_entries(modified_basis(p, jmax, depth))?,
            }
        }
        Family::Haar => {
            let params = match &a.params {
                Some(path) => {
                    let params: HaarFamilyParams = inputs.json(path)?;
                    params.validate()?;
                    params
                }
                None => HaarFamilyParams::random(prime(need(a.p, "p", &name)?)?, a.s, seed),
            };
            let p = params.p;
            let mut gens = Vec::new();
            for mu in 1..p.get() {
                gens.push((json!({ "mu": mu }), haar_wavelet(&params, mu)?));
            }
            let jbox = need(a.jbox, "jbox", &name)?;
            let depth = a.depth.unwrap_or(params.s + 1);
            BasisDoc::Local {
                p,
                functions: local_entries(haar_family(p, gens, jbox, depth))?,
            }
        }
        Family::Haar2 => {
            let phases = random_haar2_phases(a.s, seed);
            let gens = vec![(json!({ "s": a.s }), haar2_wavelet(a.s, &phases)?)];
            let jbox = need(a.jbox, "jbox", &name)?;
            let depth = a.depth.unwrap_or(a.s + 1);
            BasisDoc::Local {
                p: Prime::TWO,
                functions: local_entries(haar_family(Prime::TWO, gens, jbox, depth))?,
            }
        }
        Family::Adelic | Family::Mra => {
            let m = prime(*need(a.places.iter().max(), "places", &name)?)?;
            for &q in &a.places {
                prime(q)?;
            }
            let jmax = need(a.jmax, "jmax", &name)?;
            let depth = need(a.depth, "depth", &name)?;
            let real_n = a.real_n.map(|(lo, hi)| lo..=hi);
            let functions = if let Family::Adelic = a.family {
                let real = match (a.real_j, real_n) {
                    (Some((lo, hi)), Some(n)) => Some((lo..=hi, n)),
                    (None, None) => None,
                    _ => {
                        return Err(Failure::Usage(
                            ErrorKind::MissingRequiredArgument,
                            "--real-j and --real-n go together".into(),
                        ))
                    }
                };
                tensor_basis(m, real, jmax, depth)
                    .into_iter()
                    .map(|(i, f)| {
                        Ok(Entry {
                            index: serde_json::to_value(i)?,
                            function: f,
                        })
                    })
                    .collect::<anyhow::Result<Vec<_>>>()?
            } else {
                mra_basis(m, real_n, jmax, depth)
                    .into_iter()
                    .map(|(i, f)| {
                        Ok(Entry {
                            index: serde_json::to_value(i)?,
                            function: f,
                        })
                    })
                    .collect::<anyhow::Result<Vec<_>>>()?
            };
            BasisDoc::Adelic { functions }
        }
    };
    let count = match &doc {
        BasisDoc::Local { functions, .. } => functions.len(),
        BasisDoc::Adelic { functions } => functions.len(),
    };
    match &a.out {
        Some(path) => {
            write_json(path, &doc)?;
            Ok(outcome(
                json!({ "family": name, "count": count, "out": path }),
                true,
            ))
        }
        None => {
            let mut s = serde_json::to_string_pretty(&doc).map_err(anyhow::Error::from)?;
            s.push('\n');
            Ok(Outcome {
                result: Value::Null,
                passed: true,
                raw: Some(s),
            })
        }
    }
}

fn cmd_gram(
    input: &Path,
    out: Option<&Path>,
    tol: f64,
    inputs: &mut Inputs,
) -> Result<Outcome, Failure> {
    let doc: BasisDoc = inputs.json(input)?;
    let g = match &doc {
        BasisDoc::Local { p, functions } => {
            if let Some(e) = functions.iter().find(|e| e.function.p() != *p) {
                return Err(anyhow!(
                    "mixed places: function at p={} in a p={} basis",
                    e.function.p(),
                    p
                )
                .into());
            }
            let fns: Vec<LocalFunction> = functions.iter().map(|e| e.function.clone()).collect();
            gram_matrix(&fns)
        }
        BasisDoc::Adelic { functions } => {
            let fns: Vec<AdelicFunction> = functions.iter().map(|e| e.function.clone()).collect();
            if fns.iter().any(|f| f.has_real()) && fns.iter().any(|f| !f.has_real()) {
                return Err(
                    anyhow!("mixed places: real factor present on some functions only").into(),
                );
            }
            adelic_gram(&fns)?
        }
    };
    if let Some(path) = out {
        let mut w =
            csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
        w.write_record(["row", "col", "re", "im"])
            .map_err(anyhow::Error::from)?;
        for (i, row) in g.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                // + 0.0 turns -0 into 0
                w.write_record([
                    i.to_string(),
                    j.to_string(),
                    (v.re + 0.0).to_string(),
                    (v.im + 0.0).to_string(),
                ])
                .map_err(anyhow::Error::from)?;
            }
        }
        w.flush().map_err(anyhow::Error::from)?;
    }
    let (dev, at) = identity_deviation(&g);
    let passed = dev <= tol;
    let worst = at.map(|(i, j)| json!({ "row": i, "col": j, "value": g[i][j] }));
    Ok(outcome(
        json!({ "size": g.len(), "max_deviation": dev, "worst_pair": worst, "identity": passed }),
        passed,
    ))
}

fn cmd_apply(
    symbol: &Path,
    input: &Path,
    out: Option<&Path>,
    inputs: &mut Inputs,
) -> Result<Outcome, Failure> {
    let sym: Symbol = inputs.json(symbol)?;
    let f: AdelicSum = inputs.json::<FunctionDoc>(input)?.into();
    let g = apply_symbol_sum(&f, &sym)?;
    let norm_in = f.norm()?;
    let norm_out = g.norm()?;
    let result = match out {
        Some(path) => {
            write_json(path, &g)?;
            json!({ "pieces": g.len(), "norm_in": norm_in, "norm_out": norm_out, "out": path })
        }
        None => {
            json!({ "pieces": g.len(), "norm_in": norm_in, "norm_out": norm_out, "function": g })
        }
    };
    Ok(outcome(result, true))
}

fn cmd_eigencheck(
    symbol: &Path,
    index: &Path,
    tol: f64,
    inputs: &mut Inputs,
) -> Result<Outcome, Failure> {
    let sym: Symbol = inputs.json(symbol)?;
    let alpha: AdelicIndex = inputs.json(index)?;
    let e = eigen_check(&sym, &alpha)?;
    let residual = verify_eigenrelation(&sym, &alpha)?;
    let consistent = e.is_eigen == (residual <= tol.max(1e-10));
    Ok(outcome(
        json!({ "is_eigen": e.is_eigen, "lambda": e.lambda, "residual": residual, "consistent": consistent }),
        e.is_eigen && consistent,
    ))
}

fn cmd_decompose(input: &Path, tol: f64, inputs: &mut Inputs) -> Result<Outcome, Failure> {
    let f: AdelicSum = inputs.json::<FunctionDoc>(input)?.into();
    let d = decompose(&f)?;
    let cert = certify(&f, &d)?;
    let scale = f.norm()?.max(1.0);
    let passed = d.residual <= tol.max(1e-10) * scale && cert.certified();
    let coefficients: Vec<Value> = d
        .coefficients
        .iter()
        .map(|(alpha, c)| json!({ "index": alpha, "coefficient": c }))
        .collect();
    Ok(outcome(
        json!({
            "coefficients": coefficients,
            "residual": d.residual,
            "boxes": d.boxes,
            "certification": cert,
        }),
        passed,
    ))
}

fn cmd_lizorkin(
    input: &Path,
    moments: u32,
    tol: f64,
    inputs: &mut Inputs,
) -> Result<Outcome, Failure> {
    let f: AdelicSum = inputs.json::<FunctionDoc>(input)?.into();
    let rep = lizorkin_check(&f, moments, tol)?;
    let failure = rep.first_failure().cloned();
    let passed = rep.passes;
    Ok(outcome(
        json!({ "report": rep, "first_failure": failure }),
        passed,
    ))
}

fn run(cli: &Cli, tol: f64, inputs: &mut Inputs) -> Result<Outcome, Failure> {
    match &cli.command {
        Command::Basis(a) => cmd_basis(a, cli.seed, inputs),
        Command::Gram { input, out } => cmd_gram(input, out.as_deref(), tol, inputs),
        Command::Apply { symbol, input, out } => cmd_apply(symbol, input, out.as_deref(), inputs),
        Command::Eigencheck { symbol, index } => cmd_eigencheck(symbol, index, tol, inputs),
        Command::Decompose { input } => cmd_decompose(input, tol, inputs),
        Command::Lizorkin { input, moments } => cmd_lizorkin(input, *moments, tol, inputs),
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Basis(_) => "basis",
        Command::Gram { .. } => "gram",
        Command::Apply { .. } => "apply",
        Command::Eigencheck { .. } => "eigencheck",
        Command::Decompose { .. } => "decompose",
        Command::Lizorkin { .. } => "lizorkin",
    }
}

/// Writes to stdout; a closed pipe is not an error worth reporting.
fn emit(text: &str) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(text.as_bytes()).and_then(|_| out.flush());
}

fn print_report(report: &Report) {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    emit(&s);
}

fn usage_error(c: &Command, kind: ErrorKind, msg: String) -> ! {
    let mut cmd = Cli::command();
    let name = command_name(c);
    let sub = cmd.find_subcommand_mut(name).expect("subcommand exists");
    let mut sub = sub.clone().bin_name(format!("adelion {name}"));
    sub.error(kind, msg).exit()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    let arguments: Vec<String> = std::env::args().skip(1).collect();
    let tol = match tolerance(cli.tol) {
        Ok(t) if t >= 0.0 && t.is_finite() => t,
        Ok(t) => Cli::command()
            .error(
                ErrorKind::InvalidValue,
                format!("tolerance {t} must be finite and >= 0"),
            )
            .exit(),
        Err(e) => Cli::command()
            .error(ErrorKind::InvalidValue, format!("{e:#}"))
            .exit(),
    };
    let mut inputs = Inputs::default();
    let res = run(&cli, tol, &mut inputs);
    let elapsed = cli.timing.then(|| start.elapsed().as_secs_f64());
    let mut report = Report {
        command: command_name(&cli.command).into(),
        arguments,
        input_digest: None,
        tolerance: tol,
        result: Value::Null,
        elapsed_seconds: elapsed,
    };
    match res {
        Ok(o) => {
            report.input_digest = inputs.digest();
            if let Some(raw) = o.raw {
                emit(&raw);
                return ExitCode::SUCCESS;
            }
            let passed = o.passed;
            report.result = o.result;
            print_report(&report);
            if passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(Failure::Usage(kind, msg)) => usage_error(&cli.command, kind, msg),
        Err(Failure::Error(e)) => {
            report.input_digest = inputs.digest();
            report.result = json!({ "error": format!("{e:#}") });
            print_report(&report);
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
