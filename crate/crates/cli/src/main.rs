//! `cantor-rep`: build representations from model files, encode and decode
//! points, and run the finite-depth verification suite.
//!
//! Exit codes: 0 success/PASS, 1 usage or input error, 2 verification FAIL.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use cantor_rep::{
    build_polycrystal, quotient_complex, verify_suite, AddressSpec, BitString, GeometricModel,
    Representation, VerifyOptions, DEFAULT_MAX_ENUM_DEPTH,
};
use clap::{Parser, Subcommand, ValueEnum};

const MAX_DEPTH_ENV: &str = "CANTOR_REP_MAX_DEPTH";

#[derive(Parser)]
#[command(
    name = "cantor-rep",
    version,
    about = "Exact cube representations of geometric patterns",
    long_about = None
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Dot,
}

#[derive(Subcommand)]
enum Command {
    /// Build a representation from a model file and emit its manifest.
    Build {
        /// Model JSON file.
        #[arg(short, long)]
        model: PathBuf,
        /// Output file; stdout when omitted.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Print the fiber of a model point.
    Encode {
        #[command(flatten)]
        source: Source,
        /// Point path: C<k>, C<k>/node:<id>, or C<k>/<arc>@<p/q>.
        #[arg(long)]
        point: String,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Map an address (or truncated bit string) back to the model.
    Decode {
        #[command(flatten)]
        source: Source,
        /// Address in text form, e.g. "mu1@C1=0 | 01 : 1*".
        #[arg(long, conflicts_with = "string")]
        address: Option<String>,
        /// Truncated bit string over the canonical coordinate order.
        #[arg(long)]
        string: Option<String>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Run the verification suite; exits 2 if any check fails.
    Verify {
        #[command(flatten)]
        source: Source,
        /// Truncation depth for the quotient checks.
        #[arg(long)]
        depth: usize,
        /// Raise the brute-force enumeration bound for this run.
        #[arg(long)]
        max_depth: Option<usize>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Emit the depth-k quotient complex.
    Quotient {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        depth: usize,
        #[arg(long)]
        max_depth: Option<usize>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Build n disjoint copies of a one-cluster graph template.
    Polycrystal {
        /// Number of crystals.
        #[arg(short, long)]
        n: usize,
        /// Model JSON file with exactly one graph cluster.
        #[arg(long)]
        template: PathBuf,
        /// Require the template to be a dendrite (connected, acyclic).
        #[arg(long)]
        dendrite: bool,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
}

/// Where the representation comes from: a manifest or a model to build.
#[derive(clap::Args)]
#[group(required = true, multiple = false)]
struct Source {
    /// Representation manifest produced by `build`.
    #[arg(short, long)]
    rep: Option<PathBuf>,
    /// Model JSON; the representation is built on the fly.
    #[arg(short, long)]
    model: Option<PathBuf>,
}

enum Outcome {
    Success,
    VerificationFailed,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(Outcome::Success) => ExitCode::SUCCESS,
        Ok(Outcome::VerificationFailed) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<Outcome> {
    match cli.command {
        Command::Build { model, out } => {
            let rep = build_from_model(&model)?;
            emit(out.as_deref(), &rep.to_manifest_json())?;
            Ok(Outcome::Success)
        }
        Command::Encode {
            source,
            point,
            format,
        } => {
            let rep = source.load()?;
            let parsed = rep.model().parse_point(&point)?;
            let fiber = rep.represent_point(&parsed)?;
            let pieces: Vec<String> = fiber.pieces().iter().map(|p| p.to_string()).collect();
            match format {
                Format::Text => {
                    for piece in &pieces {
                        println!("{piece}");
                    }
                }
                Format::Json => print_json(&serde_json::json!({
                    "point": parsed.to_string(),
                    "pieces": pieces,
                }))?,
                Format::Dot => bail!("dot output only applies to the quotient subcommand"),
            }
            Ok(Outcome::Success)
        }
        Command::Decode {
            source,
            address,
            string,
            format,
        } => {
            let rep = source.load()?;
            let (input, located) = match (address, string) {
                (Some(text), None) => {
                    let spec = AddressSpec::parse(&text)?;
                    (text, rep.locate(&spec)?)
                }
                (None, Some(text)) => {
                    let s = BitString::parse(&text)?;
                    (text, rep.locate_string(s)?)
                }
                _ => bail!("pass exactly one of --address or --string"),
            };
            match format {
                Format::Text => println!("{located}"),
                Format::Json => print_json(&serde_json::json!({
                    "input": input,
                    "kind": match located {
                        cantor_rep::Located::Point(_) => "point",
                        cantor_rep::Located::Segment { .. } => "segment",
                    },
                    "result": located.to_string(),
                }))?,
                Format::Dot => bail!("dot output only applies to the quotient subcommand"),
            }
            Ok(Outcome::Success)
        }
        Command::Verify {
            source,
            depth,
            max_depth,
            format,
        } => {
            let rep = source.load()?;
            let opts = verify_options(max_depth)?;
            let report = verify_suite(&rep, depth, &opts)?;
            match format {
                Format::Text => println!("{report}"),
                Format::Json => {
                    print_json(&serde_json::to_value(&report).context("serializing report")?)?
                }
                Format::Dot => bail!("dot output only applies to the quotient subcommand"),
            }
            if report.passed() {
                Ok(Outcome::Success)
            } else {
                Ok(Outcome::VerificationFailed)
            }
        }
        Command::Quotient {
            source,
            depth,
            max_depth,
            format,
        } => {
            let rep = source.load()?;
            let opts = verify_options(max_depth)?;
            let qc = quotient_complex(&rep, depth, &opts)?;
            match format {
                Format::Text => {
                    print!("{}", qc.cell_table());
                    println!(
                        "depth {} ({} position digits): {} cells, {} edges, invariants {}",
                        qc.depth,
                        qc.lambda_depth,
                        qc.cell_count(),
                        qc.edge_count(),
                        qc.invariants()
                    );
                }
                Format::Json => print!("{}", qc.to_json()),
                Format::Dot => print!("{}", qc.to_dot()),
            }
            Ok(Outcome::Success)
        }
        Command::Polycrystal {
            n,
            template,
            dendrite,
            out,
        } => {
            let model = read_model(&template)?;
            let cluster = match model.clusters.as_slice() {
                [c] if c.is_graph() => c,
                _ => bail!(
                    "template {} must contain exactly one graph cluster",
                    template.display()
                ),
            };
            let poly = build_polycrystal(n, cluster, dendrite)?;
            emit(out.as_deref(), &poly.rep.to_manifest_json())?;
            Ok(Outcome::Success)
        }
    }
}

impl Source {
    fn load(&self) -> Result<Representation> {
        match (&self.rep, &self.model) {
            (Some(path), None) => {
                let text = fs::read_to_string(path)
                    .with_context(|| format!("reading {}", path.display()))?;
                Ok(Representation::from_manifest_json(&text)?)
            }
            (None, Some(path)) => build_from_model(path),
            _ => bail!("pass exactly one of --rep or --model"),
        }
    }
}

fn read_model(path: &Path) -> Result<GeometricModel> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(GeometricModel::from_json(&text)?)
}

fn build_from_model(path: &Path) -> Result<Representation> {
    Ok(Representation::build(&read_model(path)?)?)
}

fn verify_options(flag: Option<usize>) -> Result<VerifyOptions> {
    let max_enum_depth = match flag {
        Some(d) => d,
        None => match std::env::var(MAX_DEPTH_ENV) {
            Ok(v) => v
                .trim()
                .parse()
                .with_context(|| format!("{MAX_DEPTH_ENV} must be a non-negative integer"))?,
            Err(_) => DEFAULT_MAX_ENUM_DEPTH,
        },
    };
    Ok(VerifyOptions { max_enum_depth })
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => {
            fs::write(path, text).with_context(|| format!("writing {}", path.display()))?
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn print_json(value: &serde_json::Value) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}
