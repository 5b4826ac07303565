//! Command-line front end: named scenarios, config files, trajectory and
//! residual reports, CSV and SVG export.
//!
//! Exit codes: 0 on success, 1 when a computation fails (a pole, an
//! exhausted step budget, a failed check), 2 when the configuration is
//! rejected before any computation starts.

mod commands;
mod config;
mod output;
mod scenarios;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::RunConfig;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Computation(String),
}

#[derive(Parser)]
#[command(
    name = "triflow",
    version,
    about = "Explicit dynamical systems on hyperbolic and glued 3-manifolds"
)]
struct Cli {
    /// Seed for randomized sampling
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Run configuration file
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Named scenario preset
    #[arg(long, global = true, value_name = "NAME")]
    scenario: Option<String>,
    /// Write the merged effective configuration, then run
    #[arg(long, global = true, value_name = "PATH")]
    dump_config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the configured domain's side pairing on sampled face points
    Validate {
        /// Face samples per side
        #[arg(long, default_value_t = 64)]
        samples: usize,
    },
    /// Evaluate the automorphic field at chosen points
    FieldEval {
        /// Evaluation point; repeatable
        #[arg(long = "point", value_name = "X,Y,R")]
        points: Vec<String>,
    },
    /// Covariance residuals over increasing word-ball radii
    Covariance {
        /// Comma-separated ball radii
        #[arg(long, value_delimiter = ',', value_name = "R1,R2,..")]
        radii: Option<Vec<usize>>,
        /// Number of sampled interior points
        #[arg(long)]
        points: Option<usize>,
        /// Generator label the residual is tested against
        #[arg(long)]
        generator: Option<String>,
    },
    /// Integrate the field through the fundamental domain with continuation
    Integrate(IntegrateArgs),
    /// Worked demonstration runs
    #[command(subcommand)]
    Demo(DemoCmd),
    /// Two-tetrahedron gluing diagnostics
    #[command(subcommand)]
    Ball(BallCmd),
    /// Reeb-system diagnostics
    #[command(subcommand)]
    Reeb(ReebCmd),
}

#[derive(Args)]
struct IntegrateArgs {
    /// Integration horizon
    #[arg(long)]
    t_end: Option<f64>,
    /// Start point
    #[arg(long, value_name = "X,Y,R")]
    start: Option<String>,
    /// CSV trajectory table
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// SVG phase portrait
    #[arg(long, value_name = "PATH")]
    svg: Option<PathBuf>,
    /// Portrait plane, axis names concatenated (xy, xr, yr)
    #[arg(long)]
    projection: Option<String>,
}

#[derive(Subcommand)]
enum DemoCmd {
    /// Spherical pendulum inside the solid Klein bottle
    Pendulum {
        /// Precession rate fed to the third coordinate
        #[arg(long)]
        k: Option<f64>,
        /// Integration horizon
        #[arg(long)]
        t: Option<f64>,
        /// CSV trajectory table
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
        /// SVG phase portrait
        #[arg(long, value_name = "PATH")]
        svg: Option<PathBuf>,
    },
    /// The worked scaling-lattice run
    Example3 {
        /// Integration horizon
        #[arg(long)]
        t: Option<f64>,
        /// CSV trajectory table
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
        /// SVG phase portrait
        #[arg(long, value_name = "PATH")]
        svg: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum BallCmd {
    /// Edge cycles, dihedral angle sums, and pairing isometries
    Check,
}

#[derive(Subcommand)]
enum ReebCmd {
    /// Equilibria of the leaf system and their Poincare indices
    Indices {
        /// "torus" or "genus2"
        #[arg(long)]
        system: Option<String>,
        /// Winding probe circle radius
        #[arg(long)]
        radius: Option<f64>,
        /// Removed-disk radius of the plumbing
        #[arg(long)]
        rho: Option<f64>,
    },
    /// Heegaard collar interpolation report
    Glue {
        /// Gluing matrix, row-major
        #[arg(long, value_delimiter = ',', value_name = "A,B,C,D")]
        psi: Option<Vec<i64>>,
        /// Splitting genus
        #[arg(long)]
        genus: Option<u8>,
        /// Comma-separated collar depths in [0, 1]
        #[arg(long, value_delimiter = ',', value_name = "T1,T2,..")]
        t: Option<Vec<f64>>,
        /// Field table resolution
        #[arg(long)]
        grid: Option<usize>,
    },
}

fn parse_floats(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|e| CliError::Config(format!("bad number {t:?}: {e}")))
        })
        .collect()
}

fn parse_triple(s: &str) -> Result<[f64; 3], CliError> {
    let v = parse_floats(s)?;
    if v.len() != 3 {
        return Err(CliError::Config(format!("expected x,y,r, got {s:?}")));
    }
    Ok([v[0], v[1], v[2]])
}

fn parse_state(s: &str) -> Result<[f64; 4], CliError> {
    let v = parse_floats(s)?;
    match v.len() {
        3 => Ok([v[0], v[1], v[2], 0.0]),
        4 => Ok([v[0], v[1], v[2], v[3]]),
        _ => Err(CliError::Config(format!("expected x,y,r or four coordinates, got {s:?}"))),
    }
}

fn path_str(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}

fn effective_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match (&cli.config, &cli.scenario) {
        (Some(path), _) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("reading {}: {e}", path.display())))?;
            let file: RunConfig = toml::from_str(&text)
                .map_err(|e| CliError::Config(format!("parsing {}: {e}", path.display())))?;
            let base = match cli.scenario.as_ref().or(file.scenario.as_ref()) {
                Some(name) => scenarios::preset(name)?,
                None => RunConfig::default(),
            };
            RunConfig::overlaid(base, file)
        }
        (None, Some(name)) => scenarios::preset(name)?,
        (None, None) => RunConfig::default(),
    };
    if cli.seed.is_some() {
        cfg.seed = cli.seed;
    }
    Ok(cfg)
}

fn apply_flags(cfg: &mut RunConfig, cmd: &Command) -> Result<(), CliError> {
    match cmd {
        Command::Validate { .. } => {}
        Command::FieldEval { points } => {
            if !points.is_empty() {
                let parsed =
                    points.iter().map(|s| parse_triple(s)).collect::<Result<Vec<_>, _>>()?;
                cfg.field.get_or_insert_with(Default::default).points = Some(parsed);
            }
        }
        Command::Covariance { radii, points, generator } => {
            let c = cfg.covariance.get_or_insert_with(Default::default);
            if let Some(r) = radii {
                c.radii = r.clone();
            }
            if let Some(p) = points {
                c.points = *p;
            }
            if let Some(g) = generator {
                c.generator = g.clone();
            }
        }
        Command::Integrate(a) => {
            apply_integrate_flags(cfg, a.t_end, &a.start, &a.out, &a.svg, &a.projection)?;
        }
        Command::Demo(DemoCmd::Example3 { t, out, svg }) => {
            if cfg.group.is_none() {
                let base = scenarios::preset("example3")?;
                *cfg = RunConfig::overlaid(base, std::mem::take(cfg));
            }
            apply_integrate_flags(cfg, *t, &None, out, svg, &None)?;
        }
        Command::Demo(DemoCmd::Pendulum { k, t, out, svg }) => {
            let pc = cfg.pendulum.get_or_insert_with(Default::default);
            if let Some(k) = k {
                pc.k = *k;
            }
            if let Some(t) = t {
                pc.t_end = *t;
            }
            if let Some(p) = out {
                pc.out = Some(path_str(p));
            }
            if let Some(p) = svg {
                pc.svg = Some(path_str(p));
            }
        }
        Command::Ball(BallCmd::Check) => {
            cfg.ball.get_or_insert_with(Default::default);
        }
        Command::Reeb(ReebCmd::Indices { system, radius, rho }) => {
            let rc = cfg.reeb.get_or_insert_with(Default::default);
            if let Some(s) = system {
                rc.system = s.clone();
            }
            if let Some(r) = radius {
                rc.probe_radius = *r;
            }
            if let Some(r) = rho {
                rc.rho = *r;
            }
        }
        Command::Reeb(ReebCmd::Glue { psi, genus, t, grid }) => {
            let rc = cfg.reeb.get_or_insert_with(Default::default);
            if let Some(v) = psi {
                if v.len() != 4 {
                    return Err(CliError::Config(
                        "--psi needs four integers a,b,c,d".to_string(),
                    ));
                }
                rc.psi = [[v[0], v[1]], [v[2], v[3]]];
            }
            if let Some(g) = genus {
                rc.genus = *g;
            }
            if let Some(ts) = t {
                rc.collar_times = ts.clone();
            }
            if let Some(g) = grid {
                rc.grid = *g;
            }
        }
    }
    Ok(())
}

fn apply_integrate_flags(
    cfg: &mut RunConfig,
    t_end: Option<f64>,
    start: &Option<String>,
    out: &Option<PathBuf>,
    svg: &Option<PathBuf>,
    projection: &Option<String>,
) -> Result<(), CliError> {
    let ic = cfg.integrate.get_or_insert_with(Default::default);
    if let Some(t) = t_end {
        ic.t_end = t;
    }
    if let Some(s) = start {
        ic.start = parse_state(s)?;
    }
    if let Some(p) = out {
        ic.out = Some(path_str(p));
    }
    if let Some(p) = svg {
        ic.svg = Some(path_str(p));
    }
    if let Some(pr) = projection {
        ic.projection = pr.clone();
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let mut cfg = effective_config(cli)?;
    apply_flags(&mut cfg, &cli.command)?;
    if let Some(path) = &cli.dump_config {
        let text = toml::to_string(&cfg)
            .map_err(|e| CliError::Config(format!("serializing config: {e}")))?;
        fs::write(path, text)
            .map_err(|e| CliError::Config(format!("writing {}: {e}", path.display())))?;
        eprintln!("dumped configuration to {}", path.display());
    }
    match &cli.command {
        Command::Validate { samples } => commands::validate(&cfg, *samples),
        Command::FieldEval { .. } => commands::field_eval(&cfg),
        Command::Covariance { .. } => commands::covariance(&cfg),
        Command::Integrate(_) | Command::Demo(DemoCmd::Example3 { .. }) => {
            commands::integrate(&cfg)
        }
        Command::Demo(DemoCmd::Pendulum { .. }) => commands::demo_pendulum(&cfg),
        Command::Ball(BallCmd::Check) => commands::ball_check(&cfg),
        Command::Reeb(ReebCmd::Indices { .. }) => commands::reeb_indices(&cfg),
        Command::Reeb(ReebCmd::Glue { .. }) => commands::reeb_glue(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Computation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
    }
}
