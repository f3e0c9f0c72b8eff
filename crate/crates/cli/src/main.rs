use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fracdiff_cli::profile::{boundary_profile, log_distances, loglog_slope, write_profile};
use fracdiff_cli::study::solve_level_full;
use fracdiff_cli::{run_study, write_csv, CliError, Method, StudySpec};

#[derive(Parser)]
#[command(name = "fracdiff", version, about = "Convergence studies for spectral fractional diffusion")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a convergence study and write the CSV table.
    Study {
        spec: PathBuf,
        #[arg(long)]
        method: Option<Method>,
        /// Inclusive level range `a..b`.
        #[arg(long)]
        levels: Option<String>,
        /// Fractional order, replacing the one in the problem.
        #[arg(long)]
        s: Option<f64>,
        /// Worker threads for the decoupled solves.
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write 0 in the wall_ms column.
        #[arg(long)]
        no_timing: bool,
        /// Write the finest spatial mesh (triangulations only) in OFF format.
        #[arg(long)]
        mesh_out: Option<PathBuf>,
    },
    /// Sample the discrete solution near the left endpoint of an interval.
    Profile {
        spec: PathBuf,
        /// Level of the study method to solve at.
        #[arg(long)]
        level: usize,
        #[arg(long, default_value_t = 1e-4)]
        from: f64,
        #[arg(long, default_value_t = 1e-3)]
        to: f64,
        #[arg(long, default_value_t = 11)]
        points: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_levels(s: &str) -> Result<[usize; 2], CliError> {
    let bad = || CliError::Spec(format!("levels must look like `a..b`, got `{s}`"));
    let (a, b) = s.split_once("..").ok_or_else(bad)?;
    Ok([a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?])
}

fn output(path: Option<&PathBuf>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Study { spec, method, levels, s, jobs, out, no_timing, mesh_out } => {
            let mut spec = StudySpec::from_file(&spec)?;
            if let Some(m) = method {
                spec.method = m;
            }
            if let Some(l) = levels {
                spec.levels = parse_levels(&l)?;
            }
            if let Some(s) = s {
                let mut p = spec.load_problem()?;
                p = p.with_order(s).map_err(|e| CliError::Spec(e.to_string()))?;
                let doc = fracdiff_core::problem::ProblemDoc::from_problem(&p)?;
                spec.problem = fracdiff_cli::spec::ProblemSource::Inline(doc);
            }
            if let Some(j) = jobs {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(j.max(1))
                    .build_global()
                    .map_err(|e| CliError::Spec(e.to_string()))?;
            }
            let report = run_study(&spec, !no_timing)?;
            let out = out.or(spec.output.clone());
            write_csv(&report.rows, output(out.as_ref())?)?;
            if let Some(path) = mesh_out {
                let problem = spec.load_problem()?;
                if spec.method != Method::Sparse && spec.method != Method::HpFull1d {
                    let (space, ..) = fracdiff_cli::study::level_discretization(
                        &problem,
                        spec.method,
                        spec.levels[1],
                        &spec.overrides,
                    )?;
                    if let fracdiff_core::fem_omega::OmegaSpace::P1(p1) = space {
                        p1.mesh.write_off(BufWriter::new(File::create(path)?))?;
                    }
                }
            }
            Ok(())
        }
        Command::Profile { spec, level, from, to, points, out } => {
            let spec = StudySpec::from_file(&spec)?;
            let problem = spec.load_problem()?;
            spec.validate(&problem)?;
            if spec.method == Method::Sparse {
                return Err(CliError::Spec("profiles need a single-tensor method".into()));
            }
            let (_, sol, space) = solve_level_full(&problem, spec.method, level, &spec.overrides)?;
            let table = boundary_profile(&space, &sol, &log_distances(from, to, points));
            let mut w = output(out.as_ref())?;
            write_profile(&table, &mut w)?;
            if let Some(slope) = loglog_slope(&table) {
                eprintln!("log-log slope {slope:.4}");
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fracdiff: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
