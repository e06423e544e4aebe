//! Command-line front end: factorization, certificate verification,
//! self-test corpus runs, and statistics export.
//!
//! Exit codes: 0 success, 1 verification failure, 2 search exhausted,
//! 3 invalid input.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use sl2cert::families::{matrix_from_json, verify_certificate, Certificate, VerifyOutcome};
use sl2cert::reduce::{factorize_matrix, PipelineConfig, ReduceError};
use sl2cert::ring::RingDesc;
use sl2cert::sl2::Matrix2;
use sl2cert::wordgen::{generate_matrix, WordGenConfig};

const EXIT_OK: u8 = 0;
const EXIT_VERIFY: u8 = 1;
const EXIT_SEARCH: u8 = 2;
const EXIT_INPUT: u8 = 3;

#[derive(Parser)]
#[command(
    name = "sl2cert",
    about = "Factor SL2 matrices over imaginary quadratic integer rings into verified certificates"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Factor one matrix and write its certificate as JSON.
    Factor(FactorArgs),
    /// Verify a certificate file.
    Verify {
        /// Path to the certificate JSON.
        certificate: PathBuf,
    },
    /// Generate seeded matrices, factor and verify them, and export a CSV
    /// report.
    SelftestStats(SelftestArgs),
}

#[derive(Args)]
struct FactorArgs {
    /// Squarefree negative d selecting the ring.
    #[arg(long, allow_negative_numbers = true)]
    d: i64,
    /// Target matrix: inline JSON, a path to a JSON file, or "identity".
    /// The format is [[[x,y],[x,y]],[[x,y],[x,y]]] with decimal strings.
    #[arg(long)]
    matrix: String,
    /// Output path for the certificate JSON.
    #[arg(long)]
    out: PathBuf,
    /// Seed recorded into the pipeline configuration.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Trial budget for each prime search.
    #[arg(long)]
    budget: Option<u64>,
}

#[derive(Args)]
struct SelftestArgs {
    /// Comma-separated list of fields d.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_values_t = vec![-1i64, -2, -3, -7, -11, -19, -43, -67, -163])]
    fields: Vec<i64>,
    /// Matrices per field.
    #[arg(long, default_value_t = 25)]
    count: u64,
    /// Generator seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of elementary factors per generated matrix.
    #[arg(long, default_value_t = 8)]
    gen_word_len: u32,
    /// Norm bound for generated factor parameters.
    #[arg(long, default_value_t = 20)]
    param_max_norm: u64,
    /// CSV output path (stdout when omitted).
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Write 0 in the millis column so reruns are byte-identical.
    #[arg(long, default_value_t = false)]
    no_timing: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Factor(args) => cmd_factor(args),
        Command::Verify { certificate } => cmd_verify(&certificate),
        Command::SelftestStats(args) => cmd_selftest_stats(args),
    };
    ExitCode::from(code)
}

fn input_err(msg: impl std::fmt::Display) -> u8 {
    eprintln!("error: {msg}");
    EXIT_INPUT
}

fn reduce_error_code(e: &ReduceError) -> u8 {
    match e {
        ReduceError::NotUnimodular | ReduceError::NotPrimitive => EXIT_INPUT,
        ReduceError::VerificationFailed(_) => EXIT_VERIFY,
        _ => EXIT_SEARCH,
    }
}

fn parse_matrix(ring: &RingDesc, spec: &str) -> Result<Matrix2, String> {
    if spec == "identity" {
        return Ok(Matrix2::identity(ring));
    }
    let raw = if spec.trim_start().starts_with('[') {
        spec.to_string()
    } else {
        std::fs::read_to_string(spec).map_err(|e| format!("cannot read {spec}: {e}"))?
    };
    let value: serde_json::Value =
        serde_json::from_str(&raw).map_err(|e| format!("malformed matrix JSON: {e}"))?;
    matrix_from_json(&value)
}

fn cmd_factor(args: FactorArgs) -> u8 {
    let ring = match RingDesc::new(args.d) {
        Ok(r) => r,
        Err(e) => return input_err(e),
    };
    let matrix = match parse_matrix(&ring, &args.matrix) {
        Ok(m) => m,
        Err(e) => return input_err(e),
    };
    let mut cfg = PipelineConfig {
        seed: args.seed,
        ..Default::default()
    };
    if let Some(b) = args.budget {
        cfg.search_budget = b;
    }
    match factorize_matrix(ring, &matrix, cfg) {
        Ok((cert, stats)) => {
            let json = serde_json::to_string(&cert).expect("certificate serialization");
            if let Err(e) = std::fs::write(&args.out, json) {
                return input_err(format!("cannot write {}: {e}", args.out.display()));
            }
            eprintln!(
                "ok: {} factors, {} search trials, max exponent {}",
                cert.factors.len(),
                stats.trials,
                stats.max_exponent
            );
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            reduce_error_code(&e)
        }
    }
}

fn cmd_verify(path: &PathBuf) -> u8 {
    let raw = match std::fs::read_to_string(path) {
        Ok(r) => r,
        Err(e) => return input_err(format!("cannot read {}: {e}", path.display())),
    };
    let cert: Certificate = match serde_json::from_str(&raw) {
        Ok(c) => c,
        Err(e) => return input_err(format!("malformed certificate: {e}")),
    };
    match verify_certificate(&cert) {
        VerifyOutcome::Ok => {
            eprintln!("ok: {} factors multiply to the target", cert.factors.len());
            EXIT_OK
        }
        VerifyOutcome::Mismatch(report) => {
            eprintln!("verification failed: {report}");
            EXIT_VERIFY
        }
    }
}

struct Row {
    d: i64,
    index: u64,
    cert_len: usize,
    trials: u64,
    max_t: u64,
    millis: u128,
    ok: bool,
}

fn cmd_selftest_stats(args: SelftestArgs) -> u8 {
    let mut rows: Vec<Row> = Vec::new();
    let mut search_exhausted = false;
    for &d in &args.fields {
        let ring = match RingDesc::new(d) {
            Ok(r) => r,
            Err(e) => return input_err(e),
        };
        let wg = WordGenConfig {
            word_len: args.gen_word_len,
            param_max_norm: args.param_max_norm,
            seed: args.seed,
        };
        for index in 0..args.count {
            let matrix = generate_matrix(&ring, &wg, index);
            let cfg = PipelineConfig {
                seed: args.seed,
                ..Default::default()
            };
            let t0 = Instant::now();
            let row = match factorize_matrix(ring, &matrix, cfg) {
                Ok((cert, stats)) => {
                    let ok = matches!(verify_certificate(&cert), VerifyOutcome::Ok);
                    Row {
                        d,
                        index,
                        cert_len: cert.factors.len(),
                        trials: stats.trials,
                        max_t: stats.max_exponent,
                        millis: t0.elapsed().as_millis(),
                        ok,
                    }
                }
                Err(e) => {
                    eprintln!("d={d} index={index}: {e}");
                    search_exhausted = true;
                    Row {
                        d,
                        index,
                        cert_len: 0,
                        trials: 0,
                        max_t: 0,
                        millis: t0.elapsed().as_millis(),
                        ok: false,
                    }
                }
            };
            rows.push(row);
        }
    }

    let mut csv = String::from("d,index,cert_len,trials,max_t,millis\n");
    for r in &rows {
        let millis = if args.no_timing { 0 } else { r.millis };
        writeln!(
            csv,
            "{},{},{},{},{},{}",
            r.d, r.index, r.cert_len, r.trials, r.max_t, millis
        )
        .expect("csv write");
    }
    match &args.csv {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &csv) {
                return input_err(format!("cannot write {}: {e}", path.display()));
            }
        }
        None => print!("{csv}"),
    }

    // Aggregate summary per field.
    for &d in &args.fields {
        let of_field: Vec<&Row> = rows.iter().filter(|r| r.d == d).collect();
        if of_field.is_empty() {
            continue;
        }
        let lens: Vec<usize> = of_field.iter().map(|r| r.cert_len).collect();
        let min = lens.iter().min().unwrap();
        let max = lens.iter().max().unwrap();
        let mean = lens.iter().sum::<usize>() as f64 / lens.len() as f64;
        let verified = of_field.iter().filter(|r| r.ok).count();
        eprintln!(
            "d={d}: {verified}/{} verified, cert_len min/mean/max = {min}/{mean:.1}/{max}",
            of_field.len()
        );
    }

    let all_ok = rows.iter().all(|r| r.ok);
    if search_exhausted {
        EXIT_SEARCH
    } else if all_ok {
        EXIT_OK
    } else {
        EXIT_VERIFY
    }
}
