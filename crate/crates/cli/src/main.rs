//! `lambda1`: moving-plane quantities, direction scans, jump reports and the
//! p-Laplacian monotonicity check from the command line.
//!
//! Exit codes: 0 success, 1 the jump report fell short of `L/2 − ε_jump`,
//! 2 bad input or domain, 3 numeric failure.

mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use lambda1_core::{ShapeSpec, SweepSettings};

use config::{Command, Outcome, RunConfig};

#[derive(Parser, Debug)]
#[command(
    name = "lambda1",
    version,
    about = "Moving-plane a(nu) and lambda1(nu) for implicit 2D domains"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,

    #[command(flatten)]
    global: GlobalArgs,
}

#[derive(Args, Debug)]
struct GlobalArgs {
    /// Built-in shape: disk, ellipse, superellipse, stadium, rounded_polygon, rounded_half_disk.
    #[arg(long, global = true)]
    shape: Option<String>,
    /// JSON shape spec, e.g. {"shape":"ellipse","a":2,"b":1}.
    #[arg(long, global = true, conflicts_with = "shape")]
    shape_file: Option<PathBuf>,
    /// Disk radius.
    #[arg(long = "R", global = true)]
    radius: Option<f64>,
    #[arg(long, global = true)]
    a: Option<f64>,
    #[arg(long, global = true)]
    b: Option<f64>,
    /// Superellipse exponent (even, at least 2).
    #[arg(long = "m", id = "exponent", global = true)]
    m: Option<u32>,
    /// Flat length of a stadium or rounded half-disk.
    #[arg(long = "L", global = true)]
    length: Option<f64>,
    /// Rounding radius of a stadium or rounded half-disk.
    #[arg(long, global = true)]
    r: Option<f64>,
    /// Polygon vertices as "x,y;x,y;...".
    #[arg(long, global = true, allow_hyphen_values = true)]
    vertices: Option<String>,
    /// Polygon rounding radius.
    #[arg(long, global = true)]
    rho: Option<f64>,

    /// Output file (stdout when absent).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Final bracket width of the lambda bisection.
    #[arg(long, global = true)]
    tol_lambda: Option<f64>,
    /// Boundary sampling resolution.
    #[arg(long, global = true)]
    resolution: Option<f64>,
    /// Worker threads for direction scans.
    #[arg(long, global = true, env = "LAMBDA1_THREADS")]
    threads: Option<usize>,
    /// Print the resolved run configuration as JSON instead of running.
    #[arg(long, global = true)]
    emit_config: bool,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Print the support value a(nu) = min x.nu over the boundary.
    Support {
        #[arg(long, allow_hyphen_values = true)]
        nu: String,
    },
    /// Compute lambda1(nu) and print the result as JSON.
    Lambda1 {
        #[arg(long, allow_hyphen_values = true)]
        nu: String,
    },
    /// Scan a and lambda1 over M directions; CSV rows theta,a,lambda1,event_kind.
    Scan {
        #[arg(long = "M", id = "directions", default_value_t = 360)]
        m: usize,
        /// Also write a polar SVG plot of lambda1 to this file.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Classify jumps of lambda1 over refined direction grids.
    Classify {
        #[arg(long = "M0", id = "coarse_directions", default_value_t = 90)]
        m0: usize,
        #[arg(long, default_value_t = 3)]
        levels: usize,
    },
    /// Measure the jump of lambda1 at nu = (1,0) for a shape with a flat side.
    Counterexample {
        #[arg(long, default_value_t = 1e-2)]
        theta_window: f64,
    },
    /// Solve -Delta_p u = 1 on a grid and print a summary.
    Solve {
        #[command(flatten)]
        pde: PdeArgs,
        /// Write the solution grid as CSV.
        #[arg(long)]
        grid_csv: Option<PathBuf>,
    },
    /// Solve, then check u(x) <= u(x_lambda) for lambda up to lambda1(nu).
    Verify {
        #[command(flatten)]
        pde: PdeArgs,
        #[arg(long, allow_hyphen_values = true)]
        nu: String,
        #[arg(long, default_value_t = 10)]
        n_lambda: usize,
    },
    /// Execute a configuration written by --emit-config.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Args, Debug)]
struct PdeArgs {
    #[arg(long, default_value_t = 1.0 / 64.0)]
    h: f64,
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    /// Gradient regularization (default scales with the domain and p).
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long, default_value_t = 200)]
    max_iters: usize,
    #[arg(long, default_value_t = 1e-12)]
    tol_res: f64,
}

fn parse_vec2(s: &str) -> Result<[f64; 2]> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 2 {
        bail!(lambda1_core::Error::InvalidParameter(format!(
            "expected two comma-separated numbers, got {s:?}"
        )));
    }
    let num = |t: &str| {
        t.parse::<f64>().map_err(|_| {
            anyhow!(lambda1_core::Error::InvalidParameter(format!(
                "not a number: {t:?}"
            )))
        })
    };
    Ok([num(parts[0])?, num(parts[1])?])
}

fn need(v: Option<f64>, flag: &str, shape: &str) -> Result<f64> {
    v.ok_or_else(|| {
        anyhow!(lambda1_core::Error::InvalidShape(format!(
            "{shape} needs --{flag}"
        )))
    })
}

impl GlobalArgs {
    fn shape_spec(&self, default: Option<&str>) -> Result<ShapeSpec> {
        if let Some(path) = &self.shape_file {
            let text = std::fs::read_to_string(path)
                .map_err(lambda1_core::Error::from)
                .with_context(|| format!("reading {}", path.display()))?;
            return Ok(serde_json::from_str(&text).map_err(lambda1_core::Error::from)?);
        }
        let name = self.shape.as_deref().or(default).ok_or_else(|| {
            anyhow!(lambda1_core::Error::InvalidShape(
                "a shape is required (--shape or --shape-file)".into()
            ))
        })?;
        Ok(match name {
            "disk" => ShapeSpec::Disk {
                radius: need(self.radius, "R", name)?,
            },
            "ellipse" => ShapeSpec::Ellipse {
                a: need(self.a, "a", name)?,
                b: need(self.b, "b", name)?,
            },
            "superellipse" => ShapeSpec::Superellipse {
                a: need(self.a, "a", name)?,
                b: need(self.b, "b", name)?,
                m: self.m.ok_or_else(|| {
                    anyhow!(lambda1_core::Error::InvalidShape(
                        "superellipse needs --m".into()
                    ))
                })?,
            },
            "stadium" => ShapeSpec::Stadium {
                length: need(self.length, "L", name)?,
                r: need(self.r, "r", name)?,
            },
            "rounded_half_disk" => ShapeSpec::RoundedHalfDisk {
                length: need(self.length, "L", name)?,
                r: need(self.r, "r", name)?,
            },
            "rounded_polygon" => {
                let text = self.vertices.as_deref().ok_or_else(|| {
                    anyhow!(lambda1_core::Error::InvalidShape(
                        "rounded_polygon needs --vertices".into()
                    ))
                })?;
                let vertices = text
                    .split(';')
                    .filter(|s| !s.trim().is_empty())
                    .map(parse_vec2)
                    .collect::<Result<Vec<_>>>()?;
                ShapeSpec::RoundedPolygon {
                    vertices,
                    rho: need(self.rho, "rho", name)?,
                }
            }
            other => bail!(lambda1_core::Error::InvalidShape(format!(
                "unknown shape {other:?}"
            ))),
        })
    }

    fn sweep(&self) -> SweepSettings {
        SweepSettings {
            tol_lambda: self.tol_lambda,
            resolution: self.resolution,
            ..Default::default()
        }
    }
}

fn build_config(cli: &Cli) -> Result<RunConfig> {
    let g = &cli.global;
    let default_shape = matches!(cli.command, Cmd::Counterexample { .. }).then_some("stadium");
    let command = match &cli.command {
        Cmd::Support { nu } => Command::Support {
            nu: parse_vec2(nu)?,
        },
        Cmd::Lambda1 { nu } => Command::Lambda1 {
            nu: parse_vec2(nu)?,
        },
        Cmd::Scan { m, svg } => Command::Scan {
            m: *m,
            svg: svg.clone(),
        },
        Cmd::Classify { m0, levels } => Command::Classify {
            m0: *m0,
            levels: *levels,
        },
        Cmd::Counterexample { theta_window } => Command::Counterexample {
            theta_window: *theta_window,
        },
        Cmd::Solve { pde, grid_csv } => Command::Solve {
            h: pde.h,
            p: pde.p,
            epsilon: pde.epsilon,
            max_iters: pde.max_iters,
            tol_res: pde.tol_res,
            grid_csv: grid_csv.clone(),
        },
        Cmd::Verify { pde, nu, n_lambda } => Command::Verify {
            h: pde.h,
            p: pde.p,
            epsilon: pde.epsilon,
            max_iters: pde.max_iters,
            tol_res: pde.tol_res,
            nu: parse_vec2(nu)?,
            n_lambda: *n_lambda,
        },
        Cmd::Run { .. } => unreachable!("run loads its configuration from a file"),
    };
    Ok(RunConfig {
        shape: g.shape_spec(default_shape)?,
        sweep: g.sweep(),
        out: g.out.clone(),
        command,
    })
}

fn run(cli: &Cli) -> Result<Outcome> {
    if let Some(n) = cli.global.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let mut cfg = match &cli.command {
        Cmd::Run { config } => RunConfig::load(config)?,
        _ => build_config(cli)?,
    };
    if matches!(cli.command, Cmd::Run { .. }) && cli.global.out.is_some() {
        cfg.out = cli.global.out.clone();
    }
    if cli.global.emit_config {
        print!("{}", cfg.to_json()?);
        return Ok(Outcome::Ok);
    }
    cfg.execute()
}

fn exit_code(err: &anyhow::Error) -> u8 {
    let numeric = err
        .chain()
        .find_map(|e| e.downcast_ref::<lambda1_core::Error>())
        .is_some_and(|e| e.is_numeric());
    if numeric {
        3
    } else {
        2
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::ClaimFailed) => ExitCode::from(1),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
