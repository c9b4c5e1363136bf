use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use tbprim::cipher::parse_hex_u128;
use tbprim::field::AES_MODULUS;
use tbprim_cli::commands::{self, InvolutionSource, SboxOptions, Summary};
use tbprim_cli::fixtures::{self, TOY_TRAPDOOR_SEED};
use tbprim_cli::report::AnalysisReport;

/// Primitivity analysis for translation-based block ciphers.
#[derive(Parser)]
#[command(name = "tbprim", version)]
struct Cli {
    /// Write the JSON report to this path (atomically) and print a summary
    /// instead of the full report.
    #[arg(long, global = true, value_name = "PATH")]
    json: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// S-box analysis.
    Sbox {
        #[command(subcommand)]
        command: SboxCommand,
    },
    /// Linear layer analysis.
    Layer {
        #[command(subcommand)]
        command: LayerCommand,
    },
    /// Whole-cipher certification.
    Cipher {
        #[command(subcommand)]
        command: CipherCommand,
    },
    /// Brute-force block systems of a round group.
    Group {
        #[command(subcommand)]
        command: GroupCommand,
    },
    /// Exhaustive checks of the underlying algebra.
    Verify {
        #[command(subcommand)]
        command: VerifyCommand,
    },
    /// Regenerate the fixture files.
    Fixtures {
        #[command(subcommand)]
        command: FixturesCommand,
    },
}

#[derive(Subcommand)]
enum SboxCommand {
    /// Differential table, weak uniformity and anti-invariance degrees.
    Analyze {
        path: PathBuf,
        /// Translate the output so that F(0) = 0 before the subspace scans.
        #[arg(long)]
        normalize: bool,
        /// Largest codimension scanned for anti-invariance.
        #[arg(long, value_name = "N")]
        strong_max_codim: Option<usize>,
    },
}

#[derive(Subcommand)]
enum LayerCommand {
    /// Properness with respect to a brick structure.
    Check {
        path: PathBuf,
        /// Brick structure as `s×m` or `sxm`, e.g. 16x8.
        #[arg(long)]
        bricks: String,
    },
}

#[derive(Subcommand)]
enum CipherCommand {
    /// Try to certify primitivity of the round groups.
    Certify { spec: PathBuf },
}

#[derive(Subcommand)]
enum GroupCommand {
    /// Scan every seed for a nontrivial block system.
    Oracle {
        spec: PathBuf,
        #[arg(long, default_value_t = 0)]
        round: usize,
        #[arg(long, default_value_t = 16)]
        max_n: usize,
    },
}

#[derive(Subcommand)]
enum VerifyCommand {
    /// Inverse-closed additive subgroups of GF(2^m) are its subfields.
    SubfieldTheorem {
        #[arg(long, default_value_t = 8)]
        m: usize,
        /// Defining polynomial in hexadecimal; defaults to 0x11b at m = 8.
        #[arg(long)]
        modulus: Option<String>,
    },
    /// Anti-invariant involutions are strongly anti-invariant.
    InvolutionLemma(InvolutionArgs),
}

#[derive(Args)]
struct InvolutionArgs {
    /// Check a single S-box file instead of random samples.
    path: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    count: usize,
    #[arg(long, default_value_t = 6)]
    m: usize,
    /// Probability that a random pair of points is left fixed.
    #[arg(long, default_value_t = 0.0)]
    fixed_ratio: f64,
}

#[derive(Subcommand)]
enum FixturesCommand {
    /// Write the generated fixtures into a directory.
    Write {
        dir: PathBuf,
        #[arg(long, default_value_t = TOY_TRAPDOOR_SEED)]
        seed: u64,
        /// Also write the SERPENT tables.
        #[arg(long)]
        serpent: bool,
    },
}

/// Default irreducible polynomials per field degree.
fn default_modulus(m: usize) -> Option<u32> {
    match m {
        2 => Some(0b111),
        3 => Some(0b1011),
        4 => Some(0b10011),
        5 => Some(0b100101),
        6 => Some(0b1000011),
        7 => Some(0b10000011),
        8 => Some(AES_MODULUS),
        _ => None,
    }
}

fn emit<P: Serialize + Summary>(report: &AnalysisReport<P>, json: Option<&Path>) -> Result<()> {
    match json {
        Some(path) => {
            report.write_atomic(path)?;
            println!("{}: {}", report.command, report.payload.summary());
        }
        None => print!("{}", report.to_json()?),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let json = cli.json.as_deref();
    match cli.command {
        Command::Sbox {
            command:
                SboxCommand::Analyze {
                    path,
                    normalize,
                    strong_max_codim,
                },
        } => emit(
            &commands::sbox_analyze(
                &path,
                SboxOptions {
                    normalize,
                    strong_max_codim,
                },
            )?,
            json,
        ),
        Command::Layer {
            command: LayerCommand::Check { path, bricks },
        } => emit(&commands::layer_check(&path, &bricks)?, json),
        Command::Cipher {
            command: CipherCommand::Certify { spec },
        } => emit(&commands::cipher_certify(&spec)?, json),
        Command::Group {
            command: GroupCommand::Oracle { spec, round, max_n },
        } => emit(&commands::group_oracle(&spec, round, max_n)?, json),
        Command::Verify {
            command: VerifyCommand::SubfieldTheorem { m, modulus },
        } => {
            let modulus = match modulus {
                Some(text) => u32::try_from(parse_hex_u128(&text)?)
                    .map_err(|_| anyhow::anyhow!("input error: modulus {text} is too wide"))?,
                None => default_modulus(m)
                    .ok_or_else(|| anyhow::anyhow!("input error: pass --modulus for m = {m}"))?,
            };
            emit(&commands::verify_subfield(m, modulus)?, json)
        }
        Command::Verify {
            command: VerifyCommand::InvolutionLemma(args),
        } => {
            let source = match &args.path {
                Some(p) => InvolutionSource::File(p),
                None => InvolutionSource::Random {
                    m: args.m,
                    count: args.count,
                    seed: args.seed,
                    fixed_ratio: args.fixed_ratio,
                },
            };
            emit(&commands::verify_involution_lemma(source)?, json)
        }
        Command::Fixtures {
            command: FixturesCommand::Write { dir, seed, serpent },
        } => {
            for path in fixtures::write_fixtures(&dir, seed, serpent)? {
                println!("{}", path.display());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
