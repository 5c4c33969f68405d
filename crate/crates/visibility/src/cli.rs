//! Command-line front end: argument parsing, worker-pool setup, and the
//! emitters tying the pipeline together.

use crate::billiard::{estimate_f1, estimate_visibility};
use crate::bounds::{
    lambda_sweep, legendre_transform, theorem_bounds, theorem_constants, x_grid, BoundCurve,
    BoundSource, MdSource,
};
use crate::dim::DimensionContext;
use crate::error::{Error, Result};
use crate::kernel::{eta_of_theta, kappa_dtheta_extended, kappa_of_theta};
use crate::marginal::cell_midpoint;
use crate::output::{csv, svg_overlay, write_file};
use crate::scene::Scene2D;
use crate::transport::{check_c_monotonicity, solve_transport, TransportInstance};
use clap::{Parser, Subcommand};
use std::f64::consts::PI;
use std::path::PathBuf;

/// Environment variable overriding the default worker count.
pub const WORKERS_ENV: &str = "VISIBILITY_WORKERS";

#[derive(Parser, Debug)]
#[command(
    name = "visibility",
    version,
    about = "Lower bounds for the visibility index of volume-constrained bodies in the unit ball"
)]
pub struct Cli {
    /// Worker threads for lambda sweeps and Monte-Carlo sampling
    /// (default: $VISIBILITY_WORKERS, then available parallelism).
    #[arg(long, global = true)]
    pub workers: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Tabulate the kernel: CSV rows (theta, eta, kappa, dkappa).
    Kappa {
        #[arg(long, default_value_t = 2)]
        dim: usize,
        /// Normalized multiplier Lambda.
        #[arg(long = "Lambda")]
        big_lambda: f64,
        /// Number of grid intervals on [0, pi].
        #[arg(long, default_value_t = 200)]
        theta_grid: usize,
        /// Output CSV path (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve one discretized transportation program and report the optimum.
    OtSolve {
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        n: usize,
        /// Write the optimal plan as CSV (i, j, phi_mid, psi_mid, mass).
        #[arg(long)]
        emit_plan: Option<PathBuf>,
    },
    /// Sweep lambda, apply the Legendre transform, and emit the bound curve.
    BoundCurve {
        #[arg(long)]
        dim: usize,
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 1000)]
        lambda_samples: usize,
        #[arg(long, default_value_t = 101)]
        x_samples: usize,
        #[arg(long, default_value = "curve.csv")]
        out: PathBuf,
        /// Also draw the overlay figure.
        #[arg(long)]
        svg: Option<PathBuf>,
        /// Use the published m_d in the linear bound instead of the
        /// self-computed program value.
        #[arg(long)]
        literature_m: bool,
    },
    /// Emit the closed-form theorem bound curves.
    TheoremBounds {
        #[arg(long)]
        dim: usize,
        #[arg(long, default_value_t = 101)]
        x_samples: usize,
        #[arg(long, default_value = "thm.csv")]
        out: PathBuf,
        /// m_d for the linear bound (default: published value for d = 2, 3).
        #[arg(long)]
        m: Option<f64>,
    },
    /// Trace a scene and report visibility and volume-surrogate estimates.
    Simulate {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long, default_value_t = 1_000_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run the property suite; exits nonzero on any failure.
    Verify {
        /// Smaller grids and sample counts (a few seconds).
        #[arg(long)]
        quick: bool,
    },
}

fn emit(path: Option<&PathBuf>, contents: &str) -> Result<()> {
    match path {
        Some(p) => write_file(p, contents),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

fn curve_rows(curves: &[BoundCurve]) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for curve in curves {
        for (&x, &y) in curve.xs.iter().zip(&curve.ys) {
            rows.push(vec![x.to_string(), y.to_string(), curve.source.to_string()]);
        }
    }
    rows
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Kappa {
            dim,
            big_lambda,
            theta_grid,
            out,
        } => {
            DimensionContext::new(*dim)?;
            if *theta_grid == 0 {
                return Err(Error::InvalidInput("theta grid must be >= 1".into()));
            }
            let config = format!(
                "cmd=kappa dim={dim} Lambda={big_lambda} theta-grid={theta_grid}"
            );
            let rows = (0..=*theta_grid)
                .map(|k| {
                    let theta = PI * k as f64 / *theta_grid as f64;
                    let eta = eta_of_theta(*big_lambda, theta)?;
                    let kappa = kappa_of_theta(*big_lambda, theta)?;
                    let dkappa = kappa_dtheta_extended(*big_lambda, theta)?;
                    Ok(vec![
                        theta.to_string(),
                        eta.to_string(),
                        kappa.to_string(),
                        dkappa.to_string(),
                    ])
                })
                .collect::<Result<Vec<_>>>()?;
            emit(
                out.as_ref(),
                &csv(&config, &["theta", "eta", "kappa", "dkappa"], &rows),
            )
        }
        Command::OtSolve {
            dim,
            lambda,
            n,
            emit_plan,
        } => {
            let ctx = DimensionContext::new(*dim)?;
            let instance = TransportInstance::kernel(&ctx, *lambda, *n)?;
            let plan = solve_transport(&instance)?;
            let value = (ctx.d as f64 + 1.0) / 4.0 * plan.objective;
            let report = check_c_monotonicity(&plan, &ctx, *lambda, *n)?;
            println!("objective          {}", plan.objective);
            println!("scaled (d+1)/4     {value}");
            println!("I(lambda)          {}", value - lambda);
            println!("pivots             {}", plan.iterations);
            println!("support size       {}", plan.support.len());
            println!(
                "support structure  separator theta={:.6}, concave {} pts / {} violations, convex {} pts / {} violations, band {}",
                report.separator_theta,
                report.concave_points,
                report.concave_violations,
                report.convex_points,
                report.convex_violations,
                report.band_points
            );
            if let Some(path) = emit_plan {
                let config = format!("cmd=ot-solve dim={dim} lambda={lambda} n={n}");
                let rows: Vec<Vec<String>> = plan
                    .support
                    .iter()
                    .map(|&(i, j, mass)| {
                        vec![
                            (i + 1).to_string(),
                            (j + 1).to_string(),
                            cell_midpoint(*n, i).to_string(),
                            cell_midpoint(*n, j).to_string(),
                            mass.to_string(),
                        ]
                    })
                    .collect();
                write_file(
                    path,
                    &csv(&config, &["i", "j", "phi_mid", "psi_mid", "mass"], &rows),
                )?;
            }
            Ok(())
        }
        Command::BoundCurve {
            dim,
            n,
            lambda_samples,
            x_samples,
            out,
            svg,
            literature_m,
        } => {
            let ctx = DimensionContext::new(*dim)?;
            let sweep = lambda_sweep(&ctx, *n, *lambda_samples)?;
            let xs = x_grid(*x_samples);
            let lp_curve = legendre_transform(&sweep, &xs)?;
            // I*(1) is the lambda-hat program value scaled by (d+1)/4.
            let md_computed = sweep.lambdas.last().copied().unwrap()
                + sweep.i_values.last().copied().unwrap();
            let m_source = if *literature_m {
                MdSource::Literature
            } else {
                MdSource::Computed(md_computed)
            };
            let mut curves = vec![lp_curve];
            curves.extend(theorem_bounds(&ctx, &xs, m_source)?);
            let config = format!(
                "cmd=bound-curve dim={dim} n={n} lambda-samples={lambda_samples} x-samples={x_samples} m-source={}",
                m_source.label()
            );
            write_file(out, &csv(&config, &["x", "bound", "source"], &curve_rows(&curves)))?;
            println!(
                "I*(1) = {} (m_d source: {})",
                curves[0].ys.last().unwrap(),
                m_source.label()
            );
            println!("wrote {}", out.display());
            if let Some(svg_path) = svg {
                write_file(svg_path, &svg_overlay(&config, &curves))?;
                println!("wrote {}", svg_path.display());
            }
            Ok(())
        }
        Command::TheoremBounds {
            dim,
            x_samples,
            out,
            m,
        } => {
            let ctx = DimensionContext::new(*dim)?;
            let consts = theorem_constants(&ctx);
            let m_source = match m {
                Some(value) => MdSource::Computed(*value),
                None => MdSource::Literature,
            };
            let xs = x_grid(*x_samples);
            let curves = theorem_bounds(&ctx, &xs, m_source)?;
            if consts.prior_coefficient.is_none() {
                println!("note: no prior cubic bound for d={dim}; curve omitted");
            }
            println!("lambda_hat           {}", consts.lambda_hat);
            println!("quadratic 1/(2c)     {}", consts.inv_2c);
            println!("asymptotic coeff     {}", consts.tt2b_coefficient);
            if let Some(p) = consts.prior_coefficient {
                println!("prior cubic coeff    {p}");
            }
            println!("m_d ({})    {}", m_source.label(), m_source.value(ctx.d)?);
            let config = format!(
                "cmd=theorem-bounds dim={dim} x-samples={x_samples} m-source={}",
                m_source.label()
            );
            write_file(out, &csv(&config, &["x", "bound", "source"], &curve_rows(&curves)))?;
            println!("wrote {}", out.display());
            Ok(())
        }
        Command::Simulate {
            scene,
            samples,
            seed,
        } => {
            let scene_data = Scene2D::load(scene)?;
            let x = scene_data.normalized_volume();
            let vis = estimate_visibility(&scene_data, *samples, *seed)?;
            let f1 = estimate_f1(&scene_data, *samples, *seed)?;
            let ctx = DimensionContext::new(2)?;
            let xs = x_grid(201);
            let curves = theorem_bounds(&ctx, &xs, MdSource::Literature)?;
            let bound = curves
                .iter()
                .find(|c| c.source == BoundSource::Combined)
                .expect("combined curve present")
                .eval(x);
            println!("area               {}", scene_data.area());
            println!("normalized volume  {x}");
            println!("visibility mean    {}", vis.mean);
            println!("visibility se      {}", vis.std_error);
            println!("F1 mean            {}", f1.mean);
            println!("F1 se              {}", f1.std_error);
            println!("samples            {} (discarded {})", vis.samples, vis.discarded);
            println!("seed               {}", vis.seed);
            println!("combined bound     {bound}");
            let vis_ok = vis.mean >= bound - 3.0 * vis.std_error;
            let f1_ok = x <= f1.mean + 3.0 * f1.std_error;
            println!(
                "verdict            visibility {} bound (3-sigma), volume {} F1 (3-sigma)",
                if vis_ok { "respects" } else { "VIOLATES" },
                if f1_ok { "respects" } else { "VIOLATES" },
            );
            if vis_ok && f1_ok {
                Ok(())
            } else {
                Err(Error::Verification(
                    "simulated scene violates a bound beyond 3 sigma".into(),
                ))
            }
        }
        Command::Verify { quick } => {
            let results = crate::verify::run_suite(*quick)?;
            let mut failures = 0;
            for r in &results {
                println!(
                    "[{}] {:28} {}",
                    if r.passed { "pass" } else { "FAIL" },
                    r.name,
                    r.detail
                );
                if !r.passed {
                    failures += 1;
                }
            }
            if failures == 0 {
                println!("all {} checks passed", results.len());
                Ok(())
            } else {
                Err(Error::Verification(format!(
                    "{failures} of {} checks failed",
                    results.len()
                )))
            }
        }
    }
}

/// Resolve the worker count: flag, then environment, then all cores.
pub fn worker_count(cli: &Cli) -> usize {
    cli.workers
        .or_else(|| {
            std::env::var(WORKERS_ENV)
                .ok()
                .and_then(|s| s.parse::<usize>().ok())
                .filter(|&w| w > 0)
        })
        .unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|p| p.get())
                .unwrap_or(1)
        })
}
