//! `mapclt`: enumeration, pattern equations and limit-law checks for rooted
//! planar maps.
//!
//! Exit codes: 0 ok, 1 usage, 2 resource limit, 3 internal error.

mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{CltArgs, Env};
use mapclt::enumerate::Limits;
use mapclt::{Error, MapClass};

pub const CACHE_ENV: &str = "MAPCLT_CACHE_DIR";

#[derive(Parser)]
#[command(name = "mapclt", version, about = "Pattern counts in rooted planar maps")]
struct Cli {
    /// Worker threads (0: one per core).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Cache directory for enumeration results; overrides $MAPCLT_CACHE_DIR.
    #[arg(long, global = true)]
    cache: Option<PathBuf>,
    /// Largest edge count to enumerate, for every class.
    #[arg(long, global = true)]
    enum_limit: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Count maps of a class with n edges.
    Enumerate {
        #[arg(long)]
        n: usize,
        #[arg(long, value_parser = parse_class)]
        class: MapClass,
        /// Also write every map in text format.
        #[arg(long)]
        maps: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the occurrences of a pattern in each host map of a file.
    Occurrences {
        #[arg(long)]
        pattern: PathBuf,
        #[arg(long)]
        host: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Intersection types of two occurrences of a pattern.
    Itypes {
        #[arg(long)]
        pattern: PathBuf,
        #[arg(long, value_parser = parse_class, default_value = "all")]
        class: MapClass,
        /// Defaults to twice the pattern size.
        #[arg(long)]
        max_edges: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve the plain or pattern-marked equation to order z^Nz, x^Nx.
    Solve {
        #[arg(long, value_parser = parse_class)]
        class: MapClass,
        #[arg(long)]
        pattern: Option<PathBuf>,
        #[arg(long = "Nz")]
        nz: usize,
        #[arg(long = "Nx", default_value_t = 0)]
        nx: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Moments and growth constants from a solved series.
    Moments {
        #[arg(long)]
        series: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact distributions, normality and factorial-moment checks.
    Clt {
        #[arg(long)]
        pattern: PathBuf,
        #[arg(long, value_parser = parse_class)]
        class: MapClass,
        #[arg(long)]
        nmax: usize,
        /// Truncation of the series used for growth constants.
        #[arg(long = "Nz", default_value_t = 150)]
        nz: usize,
        #[arg(long, default_value_t = 3)]
        kmax: usize,
        /// Largest n for the labeled-configuration table.
        #[arg(long, default_value_t = 7)]
        sandwich_nmax: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        /// CSV with columns n, mean, variance, ks.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Compare the saddle-point factorial-moment formula with a contour integral.
    SaddleCheck {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        k: u64,
        /// Taylor coefficients of log rho, comma-separated.
        #[arg(long, allow_hyphen_values = true)]
        f: String,
        /// Taylor coefficients of log c, comma-separated.
        #[arg(long, allow_hyphen_values = true)]
        g: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_class(s: &str) -> Result<MapClass, String> {
    MapClass::parse(s).map_err(|e| e.to_string())
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<Error>() {
        Some(Error::ResourceLimit(_)) => 2,
        Some(Error::Internal(_) | Error::Numeric(_)) => 3,
        Some(_) => 1,
        None if e.downcast_ref::<std::io::Error>().is_some() => 1,
        None if e.downcast_ref::<serde_json::Error>().is_some() => 1,
        None => 3,
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global()?;
    }
    let mut limits = Limits::default();
    if let Some(l) = cli.enum_limit {
        limits = Limits { all: l, bipartite: l, two_connected: l };
    }
    let cache = cli.cache.or_else(|| std::env::var_os(CACHE_ENV).map(PathBuf::from));
    let env = Env { limits, cache };
    match cli.cmd {
        Cmd::Enumerate { n, class, maps, out } => commands::enumerate(&env, n, class, maps.as_deref(), out.as_deref()),
        Cmd::Occurrences { pattern, host, out } => commands::occurrences(&pattern, &host, out.as_deref()),
        Cmd::Itypes { pattern, class, max_edges, out } => {
            commands::itypes(&env, &pattern, class, max_edges, out.as_deref())
        }
        Cmd::Solve { class, pattern, nz, nx, out } => {
            commands::solve(&env, class, pattern.as_deref(), nz, nx, out.as_deref())
        }
        Cmd::Moments { series, out } => commands::moments(&series, out.as_deref()),
        Cmd::Clt { pattern, class, nmax, nz, kmax, sandwich_nmax, out, csv } => commands::clt(
            &env,
            &CltArgs {
                pattern: &pattern,
                cls: class,
                nmax,
                nz,
                kmax,
                sandwich_nmax,
                out: out.as_deref(),
                csv: csv.as_deref(),
            },
        ),
        Cmd::SaddleCheck { n, k, f, g, out } => commands::saddle_check(n, k, &f, &g, out.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
