use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bnzip::bayesnet::{BayesNetStructure, StructureSearchConfig};
use bnzip::storage::{compress, ingest_csv, write_csv, Archive, CompressOptions, IngestionConfig, ToleranceSpec};
use bnzip::Error;
use clap::{Parser, Subcommand};

/// Compresses CSV tables with a learned Bayesian network and arithmetic coding.
#[derive(Debug, Parser)]
#[command(name = "bnzip", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compress a CSV file into an archive.
    Compress {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Sidecar config with delimiter, header, quote and column declarations.
        #[arg(long)]
        config: Option<PathBuf>,
        /// `0.5` (absolute), `1%` (of each column's range) or `NAME=VALUE`; repeatable.
        #[arg(long, value_name = "TOL")]
        tolerance: Vec<String>,
        #[arg(long, default_value_t = 2000)]
        sample_rows: usize,
        #[arg(long, default_value_t = 4)]
        max_parents: usize,
        /// Delta-code sorted tuple codes (row order is not kept).
        #[arg(long, conflicts_with = "index")]
        delta: bool,
        /// Store bit offsets for random access with `get`.
        #[arg(long)]
        index: bool,
        /// Network file (`child: parent, parent` per line) instead of learning one.
        #[arg(long)]
        structure: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Sample structure-learning rows uniformly at random (seeded) instead of taking the first ones.
        #[arg(long)]
        random_sample: bool,
    },
    /// Decompress an archive to CSV.
    Decompress {
        archive: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Config whose delimiter, quote and header settings shape the output.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Describe an archive: schema, structure and bit accounting.
    Inspect {
        archive: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Print one row of an indexed archive.
    Get { archive: PathBuf, row: usize },
}

const EXIT_USAGE: u8 = 2;
const EXIT_PARSE: u8 = 3;
const EXIT_CONFIG: u8 = 4;
const EXIT_IO: u8 = 5;
const EXIT_CORRUPT: u8 = 6;

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Parse { .. } | Error::Validation { .. } | Error::Arity { .. } => EXIT_PARSE,
        Error::Config(_) | Error::Schema(_) | Error::Structure(_) | Error::EmptyData => EXIT_CONFIG,
        Error::Io(_) => EXIT_IO,
        Error::NoIndex(_) | Error::RowOutOfRange { .. } => EXIT_USAGE,
        _ => EXIT_CORRUPT,
    }
}

fn read_text(path: &Path) -> Result<String, Error> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn load_config(path: Option<&Path>) -> Result<IngestionConfig, Error> {
    match path {
        Some(p) => IngestionConfig::parse(&read_text(p)?),
        None => Ok(IngestionConfig::default()),
    }
}

fn apply_tolerances(cfg: &mut IngestionConfig, args: &[String]) -> Result<(), Error> {
    for a in args {
        match a.split_once('=') {
            Some((name, v)) => cfg.tolerance_overrides.push((name.trim().to_string(), ToleranceSpec::parse(v)?)),
            None => cfg.default_tolerance = ToleranceSpec::parse(a)?,
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Compress {
            input,
            output,
            config,
            tolerance,
            sample_rows,
            max_parents,
            delta,
            index,
            structure,
            seed,
            random_sample,
        } => {
            let mut cfg = load_config(config.as_deref())?;
            apply_tolerances(&mut cfg, &tolerance)?;
            if sample_rows == 0 {
                return Err(Error::Config("--sample-rows must be at least 1".into()));
            }
            let original = std::fs::metadata(&input)?.len();
            let dataset = ingest_csv(BufReader::new(File::open(&input)?), &cfg)?;
            let structure = match structure {
                Some(p) => Some(BayesNetStructure::parse(&read_text(&p)?, &dataset.schema)?),
                None => None,
            };
            let opts = CompressOptions {
                search: StructureSearchConfig { sample_rows, max_parents, seed, random_sample, ..Default::default() },
                delta,
                index,
                structure,
            };
            let archive = compress(&dataset, &opts)?;
            let bytes = archive.to_bytes();
            std::fs::write(&output, &bytes)?;
            if archive.clamped() > 0 {
                eprintln!("warning: {} numeric values were clamped into their declared range", archive.clamped());
            }
            let r = archive.inspect();
            let ratio = if original == 0 { 0.0 } else { bytes.len() as f64 / original as f64 };
            println!(
                "ratio={ratio:.6} model_bits={} data_bits={} framing_bits={}",
                r.model_bits, r.data_bits, r.framing_bits
            );
            Ok(())
        }
        Command::Decompress { archive, output, config } => {
            let cfg = load_config(config.as_deref())?;
            let a = Archive::read_from(&archive)?;
            let (rows, err) = a.decode_lenient();
            let mut out = BufWriter::new(File::create(&output)?);
            write_csv(&mut out, &a.schema, &rows, &cfg)?;
            out.flush()?;
            match err {
                Some(e) => {
                    eprintln!("wrote {} of {} rows", rows.len(), a.len());
                    Err(e)
                }
                None => Ok(()),
            }
        }
        Command::Inspect { archive, json } => {
            let r = Archive::read_from(&archive)?.inspect();
            if json {
                let text = serde_json::to_string_pretty(&r).map_err(|e| Error::Io(io::Error::other(e)))?;
                println!("{text}");
            } else {
                print!("{}", r.to_text());
            }
            Ok(())
        }
        Command::Get { archive, row } => {
            let a = Archive::read_from(&archive)?;
            let t = a.read_tuple_at(row)?;
            let cfg = IngestionConfig { header: false, ..Default::default() };
            write_csv(io::stdout().lock(), &a.schema, &[t], &cfg)?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
