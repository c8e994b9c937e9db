//! Resolved run configuration and its execution.
//!
//! Every subcommand is first turned into a [`RunConfig`]; `--emit-config`
//! prints that value and `run --config` executes a saved one, so the two
//! paths produce identical artifacts.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use lambda1_core::continuity::{
    classify_discontinuities, flat_side_report, lipschitz_check_a, scan_with,
};
use lambda1_core::plap::{default_epsilon, solve_torsion, verify_monotonicity};
use lambda1_core::{Direction, PlaneSweep, ShapeSpec, SweepSettings};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub shape: ShapeSpec,
    #[serde(default)]
    pub sweep: SweepSettings,
    /// Output file; stdout when absent.
    #[serde(default)]
    pub out: Option<PathBuf>,
    pub command: Command,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum Command {
    Support {
        nu: [f64; 2],
    },
    Lambda1 {
        nu: [f64; 2],
    },
    Scan {
        m: usize,
        #[serde(default)]
        svg: Option<PathBuf>,
    },
    Classify {
        m0: usize,
        levels: usize,
    },
    Counterexample {
        theta_window: f64,
    },
    Solve {
        h: f64,
        p: f64,
        #[serde(default)]
        epsilon: Option<f64>,
        max_iters: usize,
        tol_res: f64,
        #[serde(default)]
        grid_csv: Option<PathBuf>,
    },
    Verify {
        h: f64,
        p: f64,
        #[serde(default)]
        epsilon: Option<f64>,
        max_iters: usize,
        tol_res: f64,
        nu: [f64; 2],
        n_lambda: usize,
    },
}

/// What the process should do after a successful run.
#[derive(Debug, PartialEq, Eq)]
pub enum Outcome {
    Ok,
    /// The jump report ran but the jump is below the required size.
    ClaimFailed,
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => write_file(path, text.as_bytes()),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes)
        .map_err(lambda1_core::Error::from)
        .with_context(|| format!("writing {}", path.display()))
}

fn json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(lambda1_core::Error::from)?;
    s.push('\n');
    Ok(s)
}

/// Prints a value rounded to nine decimals in its shortest form, so `-1.0`
/// rather than `-0.9999999999`.
pub fn format_scalar(v: f64) -> String {
    let r = (v * 1e9).round() / 1e9 + 0.0;
    format!("{r:?}")
}

#[derive(Serialize)]
struct ScanSummary<'a> {
    shape: &'a ShapeSpec,
    m: usize,
    directions: usize,
    max_adjacent_gap: f64,
    lipschitz_a: lambda1_core::continuity::LipschitzCheck,
}

#[derive(Serialize)]
struct ClassifyOutput<'a> {
    shape: &'a ShapeSpec,
    report: lambda1_core::continuity::DiscontinuityReport,
}

impl RunConfig {
    pub fn execute(&self) -> Result<Outcome> {
        let domain = self.shape.build()?;
        match &self.command {
            Command::Support { nu } => {
                let nu = Direction::new(*nu)?;
                let a = domain.support_min(&nu)?;
                emit(&self.out, &format!("{}\n", format_scalar(a)))?;
            }
            Command::Lambda1 { nu } => {
                let nu = Direction::new(*nu)?;
                let r = PlaneSweep::new(&domain, &self.sweep)?.compute_lambda1(&nu)?;
                emit(&self.out, &json(&r)?)?;
            }
            Command::Scan { m, svg } => {
                let sweep = PlaneSweep::new(&domain, &self.sweep)?;
                let profile = scan_with(&sweep, *m)?;
                let mut csv = Vec::new();
                profile.write_csv(&mut csv)?;
                emit(&self.out, std::str::from_utf8(&csv)?)?;
                if let Some(path) = svg {
                    write_file(path, profile.to_svg().as_bytes())?;
                }
                let summary = ScanSummary {
                    shape: &self.shape,
                    m: *m,
                    directions: profile.len(),
                    max_adjacent_gap: profile.max_adjacent_gap(),
                    lipschitz_a: lipschitz_check_a(&profile, domain.r_max()),
                };
                eprint!("{}", json(&summary)?);
            }
            Command::Classify { m0, levels } => {
                let sweep = PlaneSweep::new(&domain, &self.sweep)?;
                let (report, _) = classify_discontinuities(&sweep, *m0, *levels)?;
                let out = ClassifyOutput {
                    shape: &self.shape,
                    report,
                };
                emit(&self.out, &json(&out)?)?;
            }
            Command::Counterexample { theta_window } => {
                let report = flat_side_report(&self.shape, *theta_window, &self.sweep)?;
                emit(&self.out, &json(&report)?)?;
                if !report.pass {
                    eprintln!(
                        "jump {:.6} is below the required {:.6} (L/2 - eps_jump)",
                        report.jump, report.required_jump
                    );
                    return Ok(Outcome::ClaimFailed);
                }
            }
            Command::Solve {
                h,
                p,
                epsilon,
                max_iters,
                tol_res,
                grid_csv,
            } => {
                let eps = epsilon.unwrap_or_else(|| default_epsilon(&domain, *p));
                let sol = solve_torsion(&domain, *h, *p, eps, *max_iters, *tol_res)?;
                if let Some(path) = grid_csv {
                    let mut buf = Vec::new();
                    sol.write_csv(&mut buf)?;
                    write_file(path, &buf)?;
                }
                emit(&self.out, &json(&sol.summary())?)?;
                sol.require_converged()?;
            }
            Command::Verify {
                h,
                p,
                epsilon,
                max_iters,
                tol_res,
                nu,
                n_lambda,
            } => {
                let nu = Direction::new(*nu)?;
                let eps = epsilon.unwrap_or_else(|| default_epsilon(&domain, *p));
                let lambda1 = PlaneSweep::new(&domain, &self.sweep)?
                    .compute_lambda1(&nu)?
                    .lambda1;
                let sol = solve_torsion(&domain, *h, *p, eps, *max_iters, *tol_res)?;
                let report = verify_monotonicity(&sol, &domain, &nu, lambda1, *n_lambda)?;
                emit(&self.out, &json(&report)?)?;
            }
        }
        Ok(Outcome::Ok)
    }

    pub fn to_json(&self) -> Result<String> {
        json(self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(lambda1_core::Error::from)
            .with_context(|| format!("reading {}", path.display()))?;
        let cfg: RunConfig = serde_json::from_str(&text).map_err(lambda1_core::Error::from)?;
        Ok(cfg)
    }
}
