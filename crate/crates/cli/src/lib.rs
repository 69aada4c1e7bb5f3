//! Command-line front end for `ftsynth`.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::warn;

use ftsynth::bench::{
    format_float, phase_curve, scaling_experiment, verify_fixture, write_csv, write_mean_rows,
    Fixture, ScalingConfig,
};
use ftsynth::canondb::{build_canon_db_with_budget, DEFAULT_ENTRY_BUDGET, DEFAULT_LPRIME};
use ftsynth::search::{search_optimal_with, SearchOptions};
use ftsynth::{load_db, parse_target, save_db, CanonDb, Error};

pub const EXIT_USAGE: u8 = 2;
pub const EXIT_DATA: u8 = 3;
pub const EXIT_BUDGET: u8 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "ftsynth",
    version,
    about = "Optimal Clifford+T approximations of single-qubit gates"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the canonical sequence database and write it to a file.
    BuildDb {
        #[arg(long, default_value_t = DEFAULT_LPRIME)]
        lprime: usize,
        #[arg(long)]
        out: PathBuf,
        /// Abort once the database would hold more entries than this.
        #[arg(long, default_value_t = DEFAULT_ENTRY_BUDGET)]
        budget: usize,
    },
    /// Find the optimal sequence of at most --lmax gates for one target.
    Approx {
        /// R:d=<int>, R:phi=<float>, euler:<a>,<b>,<t> or mat:<8 floats>.
        #[arg(long)]
        target: String,
        #[arg(long, default_value_t = 21)]
        lmax: usize,
        #[command(flatten)]
        db: DbArgs,
    },
    /// Check the published 31- and 46-gate R_128 approximations.
    VerifyFixtures,
    /// Convergence curves of the phase rotations R_{2^d}.
    BenchPhase {
        /// Comma-separated list of d values.
        #[arg(long, value_delimiter = ',', default_values_t = vec![1u32, 2, 3, 4, 5, 6, 7])]
        d: Vec<u32>,
        #[arg(long, default_value_t = 21)]
        lmax: usize,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        db: DbArgs,
    },
    /// Average convergence over random targets and the scaling fit.
    BenchRandom {
        #[arg(long = "n", default_value_t = 50)]
        n_targets: usize,
        #[arg(long, default_value_t = 15)]
        lmax: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// First l of the fit range.
        #[arg(long, default_value_t = 4)]
        fit_from: usize,
        /// Last l of the fit range (defaults to --lmax).
        #[arg(long)]
        fit_to: Option<usize>,
        #[arg(long)]
        out: PathBuf,
        /// Print the fit as a trailing JSON object.
        #[arg(long)]
        fit_json: bool,
        #[command(flatten)]
        db: DbArgs,
    },
}

#[derive(Debug, Args)]
pub struct DbArgs {
    /// Database file. Built (and saved here) when missing.
    #[arg(long)]
    pub db: Option<PathBuf>,
    /// l' used when the database has to be built.
    #[arg(long, default_value_t = DEFAULT_LPRIME)]
    pub lprime: usize,
    /// Worker threads; 0 = all cores, 1 = serial.
    #[arg(long, default_value_t = 0)]
    pub shards: usize,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Budget(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) => EXIT_DATA,
            CliError::Budget(_) => EXIT_BUDGET,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Data(m) => write!(f, "data error: {m}"),
            CliError::Budget(m) => write!(f, "budget exceeded: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::BudgetExceeded { .. } => CliError::Budget(e.to_string()),
            Error::InvalidParameter(_) | Error::ExhaustiveCap { .. } => {
                CliError::Usage(e.to_string())
            }
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

fn options(db: &DbArgs) -> SearchOptions {
    SearchOptions { shards: db.shards }
}

fn obtain_db(args: &DbArgs) -> Result<CanonDb, CliError> {
    if args.lprime == 0 {
        return Err(CliError::Usage(
            "--lprime must be at least 1 for search commands".into(),
        ));
    }
    match &args.db {
        Some(path) if path.exists() => {
            let db = load_db(path)?;
            if db.lprime() == 0 {
                return Err(CliError::Data(format!("{} has l'=0", path.display())));
            }
            Ok(db)
        }
        Some(path) => {
            warn!(
                "{} not found; building l'={} and saving it",
                path.display(),
                args.lprime
            );
            let db = build_canon_db_with_budget(args.lprime, DEFAULT_ENTRY_BUDGET)?;
            save_db(&db, path)?;
            Ok(db)
        }
        None => Ok(build_canon_db_with_budget(
            args.lprime,
            DEFAULT_ENTRY_BUDGET,
        )?),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

/// Runs one command, writing its summary to `out`.
pub fn run(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::BuildDb {
            lprime,
            out: path,
            budget,
        } => {
            let db = build_canon_db_with_budget(lprime, budget)?;
            save_db(&db, &path)?;
            let counts: Vec<String> = db
                .counts_per_length()
                .iter()
                .map(|c| c.to_string())
                .collect();
            writeln!(out, "# ftsynth build-db lprime={lprime} budget={budget}")?;
            writeln!(
                out,
                "entries={} per_length={} out={}",
                db.len(),
                counts.join(","),
                path.display()
            )?;
        }
        Command::Approx { target, lmax, db } => {
            let u = parse_target(&target)?;
            let canon = obtain_db(&db)?;
            let r = search_optimal_with(&u, lmax, &canon, options(&db))?;
            writeln!(
                out,
                "# ftsynth approx target={target} lmax={lmax} lprime={} shards={}",
                canon.lprime(),
                db.shards
            )?;
            writeln!(
                out,
                "dist={} len={} t_count={} optima={} visited={} skipped={:.6e} time_s={:.3} seq=\"{}\"",
                format_float(r.best_dist.value()),
                r.best_seq.len(),
                r.t_count,
                r.optima_count,
                r.sequences_visited,
                r.sequences_skipped,
                r.wall_time.as_secs_f64(),
                r.best_seq
            )?;
        }
        Command::VerifyFixtures => {
            writeln!(out, "# ftsynth verify-fixtures target=R:d=7")?;
            writeln!(
                out,
                "{:<5} {:>6} {:>7} {:>24} {:>10} {:>24} {:>6}",
                "name", "length", "t_count", "dist", "published", "identity_dist", "pass"
            )?;
            let mut failed = Vec::new();
            for f in Fixture::ALL {
                let rep = verify_fixture(f)?;
                writeln!(
                    out,
                    "{:<5} {:>6} {:>7} {:>24} {:>10.1e} {:>24} {:>6}",
                    rep.name,
                    rep.length,
                    rep.t_count,
                    format_float(rep.dist),
                    rep.reference_dist,
                    format_float(rep.identity_dist),
                    rep.passed()
                )?;
                if !rep.passed() {
                    failed.push(rep.name);
                }
            }
            if !failed.is_empty() {
                return Err(CliError::Data(format!(
                    "fixtures failed: {}",
                    failed.join(", ")
                )));
            }
        }
        Command::BenchPhase {
            d,
            lmax,
            out: path,
            db,
        } => {
            let canon = obtain_db(&db)?;
            let mut records = Vec::new();
            for &d in &d {
                if d == 0 {
                    return Err(CliError::Usage("d must be at least 1".into()));
                }
                records.extend(phase_curve(d, lmax, &canon, options(&db))?);
            }
            write_csv(create(&path)?, &records).map_err(CliError::from)?;
            let ds: Vec<String> = d.iter().map(|x| x.to_string()).collect();
            writeln!(
                out,
                "# ftsynth bench-phase d={} lmax={lmax} lprime={} shards={}",
                ds.join(","),
                canon.lprime(),
                db.shards
            )?;
            for chunk in records.chunks(lmax + 1) {
                let last = chunk.last().expect("lmax + 1 rows per target");
                writeln!(
                    out,
                    "{} l={} dist={} t_count={} seq=\"{}\"",
                    last.target,
                    last.l,
                    format_float(last.dist.value()),
                    last.t_count,
                    last.seq.as_ref().map(|s| s.to_string()).unwrap_or_default()
                )?;
            }
            writeln!(out, "rows={} out={}", records.len(), path.display())?;
        }
        Command::BenchRandom {
            n_targets,
            lmax,
            seed,
            fit_from,
            fit_to,
            out: path,
            fit_json,
            db,
        } => {
            let canon = obtain_db(&db)?;
            let mut config = ScalingConfig::new(n_targets, lmax, seed);
            config.fit_range = (fit_from, fit_to.unwrap_or(lmax));
            config.options = options(&db);
            let outcome = scaling_experiment(&config, &canon)?;
            let mut w = create(&path)?;
            write_csv(&mut w, &outcome.records)?;
            write_mean_rows(&mut w, &outcome.means)?;
            w.flush()?;
            let fit = &outcome.fit;
            writeln!(
                out,
                "# ftsynth bench-random n={n_targets} lmax={lmax} seed={seed} fit={}..={} lprime={} shards={}",
                config.fit_range.0,
                config.fit_range.1,
                canon.lprime(),
                db.shards
            )?;
            writeln!(
                out,
                "fit a={} b={} residual={} samples={} l_range={}..={} out={}",
                format_float(fit.a),
                format_float(fit.b),
                format_float(fit.residual),
                fit.sample_count,
                fit.l_range.0,
                fit.l_range.1,
                path.display()
            )?;
            if fit_json {
                let json = serde_json::to_string(fit).map_err(|e| CliError::Data(e.to_string()))?;
                writeln!(out, "{json}")?;
            }
        }
    }
    Ok(())
}

/// Parses `args`, runs, and maps the outcome to a process exit code.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let stdout = io::stdout();
    let mut lock = stdout.lock();
    match run(cli, &mut lock) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ftsynth: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
