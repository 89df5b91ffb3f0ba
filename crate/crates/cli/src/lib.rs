//! The `kinematica` command: `classify`, `decompose`, `generate`, `verify`.
//!
//! All input and output is JSON. Exit codes are [`EXIT_OK`] on success,
//! [`EXIT_USAGE`] for usage, I/O and schema errors, and [`EXIT_NEGATIVE`] when
//! the command ran but the answer is negative (a rejected generator set, a
//! matrix outside the normalizer, a failing property).

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use kinematica::affine::{random_affine_elements, AffineElement};
use kinematica::classify::{case_label, classify_algebra, Diagnostics, Outcome};
use kinematica::groups::{cartan_decompose, random_elements, random_generators};
use kinematica::verify::{run_suite, SuiteConfig, DEFAULT_SIGMAS, DEFAULT_TRIALS};
use kinematica::{CaseLabel, Error, Group, Mutation, Sigma, SquareMatrix, DEFAULT_TOL};

/// Environment variable that replaces the default tolerance.
pub const TOL_ENV: &str = "KINEMATICA_TOL";

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NEGATIVE: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "kinematica", version, about = "Classify and sample kinematical groups")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Classify the Lie algebra spanned by the matrices of a file.
    Classify {
        input: PathBuf,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Factor each matrix of a file as sqrt(lambda) k exp(Z); needs sigma > 0.
    Decompose {
        input: PathBuf,
        #[arg(long, allow_hyphen_values = true, value_parser = parse_sigma)]
        sigma: Sigma,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Print random group elements or Lie algebra generators as a matrix file.
    Generate(GenerateArgs),
    /// Run the property suite and print its report.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Kind {
    /// Members of the group.
    Elements,
    /// Rotation basis plus `count` random boost generators.
    Generators,
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[arg(long, value_parser = parse_case)]
    case: CaseLabel,
    /// Required for Lorentz (> 0) and Orthogonal (< 0).
    #[arg(long, allow_hyphen_values = true, value_parser = parse_sigma)]
    sigma: Option<Sigma>,
    #[arg(long, default_value_t = 2)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1.0)]
    boost_bound: f64,
    #[arg(long, value_enum, default_value_t = Kind::Elements)]
    kind: Kind,
    /// Pair each element with a random translation in an `affine` list.
    #[arg(long)]
    affine: bool,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [2usize, 3])]
    n: Vec<usize>,
    /// Comma-separated; `inf` for the Carroll case.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, value_parser = parse_sigma)]
    sigma_list: Vec<Sigma>,
    #[arg(long, default_value_t = DEFAULT_TRIALS)]
    trials: usize,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Switch on a deliberate defect.
    #[arg(long, value_parser = parse_mutation)]
    mutation: Option<Mutation>,
}

fn parse_sigma(s: &str) -> Result<Sigma, String> {
    Sigma::from_str(s).map_err(|e| e.to_string())
}

fn parse_case(s: &str) -> Result<CaseLabel, String> {
    CaseLabel::from_str(s).map_err(|e| e.to_string())
}

fn parse_mutation(s: &str) -> Result<Mutation, String> {
    Mutation::from_str(s).map_err(|e| e.to_string())
}

/// Input and output matrix document. Matrices are row-major with `(n+1)^2`
/// entries, space coordinates first and time last.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixFile {
    pub n: usize,
    pub matrices: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub affine: Option<Vec<AffineEntry>>,
}

/// An element of `G ⋉ R^{n+1}` acting by `x -> linear x + translation`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AffineEntry {
    pub linear: Vec<f64>,
    pub translation: Vec<f64>,
}

impl MatrixFile {
    pub fn from_matrices(n: usize, matrices: &[SquareMatrix]) -> Self {
        Self {
            n,
            matrices: matrices.iter().map(SquareMatrix::to_row_major).collect(),
            affine: None,
        }
    }

    /// Parses and validates.
    pub fn from_json(text: &str) -> anyhow::Result<Self> {
        let file: Self = serde_json::from_str(text).context("malformed matrix file")?;
        file.validate()?;
        Ok(file)
    }

    pub fn read(path: &Path) -> anyhow::Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        Self::from_json(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.n < 2 {
            bail!("n must be at least 2, got {}", self.n);
        }
        let len = (self.n + 1) * (self.n + 1);
        let check = |what: String, v: &[f64], expected: usize| -> anyhow::Result<()> {
            if v.len() != expected {
                bail!("{what} has {} entries, expected {expected}", v.len());
            }
            if v.iter().any(|x| !x.is_finite()) {
                bail!("{what} has a non-finite entry");
            }
            Ok(())
        };
        for (i, m) in self.matrices.iter().enumerate() {
            check(format!("matrix {i}"), m, len)?;
        }
        for (i, a) in self.affine.iter().flatten().enumerate() {
            check(format!("affine {i} linear part"), &a.linear, len)?;
            check(format!("affine {i} translation"), &a.translation, self.n + 1)?;
        }
        Ok(())
    }

    pub fn square_matrices(&self) -> anyhow::Result<Vec<SquareMatrix>> {
        self.matrices
            .iter()
            .enumerate()
            .map(|(i, m)| SquareMatrix::from_row_major(self.n + 1, m).with_context(|| format!("matrix {i}")))
            .collect()
    }

    pub fn affine_elements(&self) -> anyhow::Result<Vec<AffineElement>> {
        self.affine
            .iter()
            .flatten()
            .enumerate()
            .map(|(i, a)| {
                let linear = SquareMatrix::from_row_major(self.n + 1, &a.linear)?;
                AffineElement::new(linear, a.translation.clone().into())
                    .with_context(|| format!("affine {i}"))
            })
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("finite numbers serialize")
    }
}

/// Output of `classify`.
#[derive(Clone, Debug, Serialize)]
pub struct ClassifyReport {
    /// `Kinematical`, `AristotleOnly` or `NotKinematical`.
    pub outcome: &'static str,
    /// A number, `"inf"`, or null when there is no boost part.
    pub sigma: Option<Sigma>,
    /// Null for a rejected set.
    pub case: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    pub diagnostics: Diagnostics,
}

/// One entry of `decompose` output.
#[derive(Clone, Debug, Serialize)]
#[serde(untagged)]
pub enum DecomposeEntry {
    Factors {
        lambda: f64,
        k: Vec<f64>,
        #[serde(rename = "Z")]
        z: Vec<f64>,
    },
    Failure {
        error: &'static str,
        detail: String,
    },
}

/// Parses `args` (program name first) and runs the command, writing JSON to
/// `out` and diagnostics to `err`. `env_tol` is the value of [`TOL_ENV`].
pub fn run<I, T>(args: I, env_tol: Option<&str>, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            let _ = write!(err, "{e}");
            return EXIT_USAGE;
        }
        Err(e) => {
            let _ = write!(out, "{e}");
            return EXIT_OK;
        }
    };
    match dispatch(cli.command, env_tol, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            EXIT_USAGE
        }
    }
}

fn dispatch(command: Command, env_tol: Option<&str>, out: &mut dyn Write) -> anyhow::Result<i32> {
    match command {
        Command::Classify { input, tol } => {
            let tol = resolve_tol(tol, env_tol)?;
            cmd_classify(&MatrixFile::read(&input)?, tol, out)
        }
        Command::Decompose { input, sigma, tol } => {
            let tol = resolve_tol(tol, env_tol)?;
            cmd_decompose(&MatrixFile::read(&input)?, sigma, tol, out)
        }
        Command::Generate(args) => cmd_generate(&args, out),
        Command::Verify(args) => {
            let tol = resolve_tol(args.tol, env_tol)?;
            cmd_verify(&args, tol, out)
        }
    }
}

/// The flag wins over the environment, which wins over [`DEFAULT_TOL`].
pub fn resolve_tol(flag: Option<f64>, env: Option<&str>) -> anyhow::Result<f64> {
    let tol = match (flag, env) {
        (Some(t), _) => t,
        (None, Some(text)) => text
            .trim()
            .parse()
            .map_err(|_| anyhow!("{TOL_ENV}={text:?} is not a number"))?,
        (None, None) => DEFAULT_TOL,
    };
    if !(tol.is_finite() && tol > 0.0) {
        bail!("tolerance must be positive, got {tol}");
    }
    Ok(tol)
}

fn emit<T: Serialize>(out: &mut dyn Write, value: &T) -> anyhow::Result<()> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    writeln!(out)?;
    Ok(())
}

fn cmd_classify(file: &MatrixFile, tol: f64, out: &mut dyn Write) -> anyhow::Result<i32> {
    let matrices = file.square_matrices()?;
    let result = classify_algebra(&matrices, tol)?;
    let case = case_label(&result).ok().map(|c| c.name());
    let (outcome, sigma, reason) = match &result.outcome {
        Outcome::Kinematical(s) => ("Kinematical", Some(*s), None),
        Outcome::AristotleOnly => ("AristotleOnly", None, None),
        Outcome::NotKinematical(why) => ("NotKinematical", None, Some(why.to_string())),
    };
    let negative = reason.is_some();
    emit(
        out,
        &ClassifyReport {
            outcome,
            sigma,
            case,
            reason,
            diagnostics: result.diagnostics,
        },
    )?;
    Ok(if negative { EXIT_NEGATIVE } else { EXIT_OK })
}

fn cmd_decompose(file: &MatrixFile, sigma: Sigma, tol: f64, out: &mut dyn Write) -> anyhow::Result<i32> {
    let s = match sigma {
        Sigma::Finite(s) if s > 0.0 => s,
        _ => bail!("decompose needs sigma > 0, got {sigma}"),
    };
    let entries: Vec<DecomposeEntry> = file
        .square_matrices()?
        .iter()
        .map(|a| match cartan_decompose(a, s, tol) {
            Ok(f) => DecomposeEntry::Factors {
                lambda: f.lambda,
                k: f.k.to_row_major(),
                z: f.z.to_row_major(),
            },
            Err(e) => DecomposeEntry::Failure {
                error: match e {
                    Error::NotInNormalizer(_) | Error::Singular | Error::NonPositiveLambda(_) => "NotInNormalizer",
                    _ => "DecompositionFailed",
                },
                detail: e.to_string(),
            },
        })
        .collect();
    let failed = entries.iter().any(|e| matches!(e, DecomposeEntry::Failure { .. }));
    emit(out, &entries)?;
    Ok(if failed { EXIT_NEGATIVE } else { EXIT_OK })
}

fn cmd_generate(args: &GenerateArgs, out: &mut dyn Write) -> anyhow::Result<i32> {
    let group = Group::new(args.case, args.sigma)?;
    let file = match (args.kind, args.affine) {
        (Kind::Generators, true) => bail!("--affine applies to group elements only"),
        (Kind::Generators, false) => {
            let gens = random_generators(&group, args.n, args.count, args.boost_bound, args.seed)?;
            MatrixFile::from_matrices(args.n, &gens)
        }
        (Kind::Elements, false) => {
            let xs = random_elements(&group, args.n, args.count, args.boost_bound, args.seed)?;
            MatrixFile::from_matrices(args.n, &xs)
        }
        (Kind::Elements, true) => {
            let xs = random_affine_elements(&group, args.n, args.count, args.boost_bound, args.seed)?;
            let linear: Vec<SquareMatrix> = xs.iter().map(|x| x.linear().clone()).collect();
            let mut file = MatrixFile::from_matrices(args.n, &linear);
            file.affine = Some(
                xs.iter()
                    .map(|x| AffineEntry {
                        linear: x.linear().to_row_major(),
                        translation: x.translation().iter().copied().collect(),
                    })
                    .collect(),
            );
            file
        }
    };
    writeln!(out, "{}", file.to_json())?;
    Ok(EXIT_OK)
}

fn cmd_verify(args: &VerifyArgs, tol: f64, out: &mut dyn Write) -> anyhow::Result<i32> {
    let cfg = SuiteConfig {
        n_values: args.n.clone(),
        sigma_values: if args.sigma_list.is_empty() {
            DEFAULT_SIGMAS.to_vec()
        } else {
            args.sigma_list.clone()
        },
        trials: args.trials,
        tol,
        seed: args.seed,
        mutation: args.mutation,
    };
    let report = run_suite(&cfg)?;
    emit(out, &report)?;
    Ok(if report.all_pass() { EXIT_OK } else { EXIT_NEGATIVE })
}
