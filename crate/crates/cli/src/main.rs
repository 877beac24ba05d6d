use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use nfforge_cli::{parse_system, run, write_sidecars, Command, RunOptions, EXIT_PARSE};

#[derive(Parser)]
#[command(name = "nfforge", version, about = "Geometric normal forms of integrable vector fields")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Numeric {
    /// Comma-separated radii for the conjugacy residual scan.
    #[arg(long, value_delimiter = ',')]
    radii: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Normalization order (defaults to the file's order).
    #[arg(long)]
    order: Option<u32>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Spectrum class and nondegeneracy report.
    Classify { file: PathBuf },
    /// Hilbert basis and real invariant generators.
    Invariants { file: PathBuf },
    /// Normal form through order N, checked exactly.
    Normalize {
        #[arg(long)]
        order: Option<u32>,
        file: PathBuf,
    },
    /// Normal form plus the numeric scans.
    Verify {
        #[command(flatten)]
        numeric: Numeric,
        file: PathBuf,
    },
    /// Everything; CSV scan data goes to --out.
    Report {
        file: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        numeric: Numeric,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cmd, file, opts, out) = match cli.cmd {
        Cmd::Classify { file } => (Command::Classify, file, RunOptions::default(), None),
        Cmd::Invariants { file } => (Command::Invariants, file, RunOptions::default(), None),
        Cmd::Normalize { order, file } => (Command::Normalize, file, RunOptions { order, ..Default::default() }, None),
        Cmd::Verify { numeric, file } => {
            (Command::Verify, file, RunOptions { order: numeric.order, radii: numeric.radii, seed: numeric.seed }, None)
        }
        Cmd::Report { file, out, numeric } => {
            (Command::Report, file, RunOptions { order: numeric.order, radii: numeric.radii, seed: numeric.seed }, Some(out))
        }
    };
    let loaded = match parse_system(&file) {
        Ok(l) => l,
        Err(e) => {
            eprintln!("nfforge: {e}");
            return ExitCode::from(EXIT_PARSE as u8);
        }
    };
    for w in &loaded.warnings {
        eprintln!("nfforge: warning: {w}");
    }
    let outcome = run(cmd, &loaded, &opts);
    print!("{}", outcome.to_json());
    if let Some(dir) = out {
        if let Err(e) = write_sidecars(&dir, &outcome.sidecars) {
            eprintln!("nfforge: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    }
    ExitCode::from(outcome.exit_code() as u8)
}
