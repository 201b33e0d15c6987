use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fracisaacs::regularity::lipschitz_certificate;
use fracisaacs::GridFunction;
use fracisaacs_cli::artifacts::{read_solution, OutputDir};
use fracisaacs_cli::{
    run_stage, run_suite, CliError, CliResult, ExperimentSuite, SpecContext, Stage, StageParams,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

#[derive(Parser, Debug)]
#[command(
    name = "fracisaacs",
    version,
    about = "Nonlocal Isaacs solver and regularity lab"
)]
struct Cli {
    /// Problem file, or suite file for `suite`.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output root.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; defaults to all cores.
    #[arg(long, global = true, env = "FRACISAACS_THREADS")]
    threads: Option<usize>,
    /// Stop a suite at the first failing stage.
    #[arg(long, global = true)]
    fail_fast: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check the structural assumptions and report the comparison bracket.
    Validate,
    /// Solve with the monotone scheme.
    Solve {
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        max_iters: Option<usize>,
        #[arg(long)]
        cfl: Option<f64>,
        /// Per-point pseudo-time steps instead of one global step.
        #[arg(long)]
        local_steps: bool,
    },
    /// Compare the discrete half-Laplacian against a closed form on this grid.
    FraclapCheck {
        /// Mode number of the periodic test function.
        #[arg(long = "k")]
        mode: Option<u32>,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Sup- and inf-convolutions of a solution (or of f without one).
    Convolve {
        #[arg(long, value_delimiter = ',')]
        eps: Option<Vec<f64>>,
        #[arg(long)]
        solution: Option<PathBuf>,
    },
    /// Difference-quotient residuals and a Hölder fit.
    Regularity {
        #[arg(long)]
        solution: Option<PathBuf>,
        /// Steps as multiples of the grid spacing.
        #[arg(long, value_delimiter = ',')]
        h_list: Option<Vec<usize>>,
        /// Directions such as `1,0;0,1`.
        #[arg(long)]
        directions: Option<String>,
    },
    /// Oscillation-decay cascade of the first difference quotient.
    Oscillation {
        #[arg(long)]
        solution: Option<PathBuf>,
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long)]
        k_max: Option<usize>,
        /// Rerun at the largest passing exponent.
        #[arg(long)]
        sigma_bisect: Option<bool>,
        #[arg(long)]
        slack: Option<f64>,
    },
    /// Closed-form Lipschitz certificate, from explicit constants or from a solved problem.
    Certify {
        #[arg(long = "K", requires_all = ["k1", "c", "lambda"])]
        k: Option<f64>,
        #[arg(long = "K1")]
        k1: Option<f64>,
        #[arg(long = "C")]
        c: Option<f64>,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        solution: Option<PathBuf>,
        #[arg(long)]
        draws: Option<usize>,
    },
    /// Run an experiment suite.
    Suite,
}

fn parse_directions(text: &str) -> CliResult<Vec<Vec<f64>>> {
    text.split(';')
        .map(|d| {
            d.split(',')
                .map(|v| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|e| CliError::Validation(format!("direction `{d}`: {e}")))
                })
                .collect()
        })
        .collect()
}

fn require_config(cli: &Cli) -> CliResult<&Path> {
    cli.config
        .as_deref()
        .ok_or_else(|| CliError::Validation("--config is required".into()))
}

fn load_solution(
    ctx: &mut SpecContext,
    path: Option<&Path>,
    params: &StageParams,
) -> CliResult<()> {
    match path {
        Some(p) => {
            let template = GridFunction::constant(&ctx.spec.geometry, 0.0);
            ctx.solution = Some(read_solution(p, &template)?);
            Ok(())
        }
        None => ctx.ensure_solution(params),
    }
}

fn run(cli: Cli) -> CliResult<i32> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Validation(format!("--threads: {e}")))?;
    }
    let out_root = cli.out.clone().unwrap_or_else(|| PathBuf::from("out"));

    if let Command::Suite = cli.command {
        let path = require_config(&cli)?;
        let suite = ExperimentSuite::from_file(path)?;
        let out = cli
            .out
            .clone()
            .or_else(|| suite.default_output())
            .unwrap_or(out_root);
        let manifest = run_suite(&suite, cli.seed.unwrap_or(suite.seed), &out, cli.fail_fast)?;
        for rec in &manifest.stages {
            let status = if rec.pass { "PASS" } else { "FAIL" };
            match &rec.error {
                Some(e) => println!("{status} {}/{}: {e}", rec.spec, rec.stage),
                None => println!("{status} {}/{}", rec.spec, rec.stage),
            }
        }
        println!("manifest: {}", out.join("manifest.json").display());
        return Ok(manifest.exit_code());
    }

    let mut params = StageParams::default();
    let stage = match &cli.command {
        Command::Validate => Stage::Validate,
        Command::Solve {
            tol,
            max_iters,
            cfl,
            local_steps,
        } => {
            params.tolerance = tol.unwrap_or(params.tolerance);
            params.max_iters = max_iters.unwrap_or(params.max_iters);
            params.cfl_safety = cfl.unwrap_or(params.cfl_safety);
            params.local_steps = *local_steps;
            Stage::Solve
        }
        Command::FraclapCheck { mode, tol } => {
            params.fraclap_mode = mode.unwrap_or(params.fraclap_mode);
            params.fraclap_tol = tol.unwrap_or(params.fraclap_tol);
            Stage::FraclapCheck
        }
        Command::Convolve { eps, .. } => {
            if let Some(e) = eps {
                params.epsilons = e.clone();
            }
            Stage::Convolve
        }
        Command::Regularity {
            h_list, directions, ..
        } => {
            if let Some(h) = h_list {
                params.h_multiples = h.clone();
            }
            if let Some(d) = directions {
                params.directions = Some(parse_directions(d)?);
            }
            Stage::Regularity
        }
        Command::Oscillation {
            sigma,
            k_max,
            sigma_bisect,
            slack,
            ..
        } => {
            params.sigma = sigma.unwrap_or(params.sigma);
            params.k_max = k_max.unwrap_or(params.k_max);
            params.sigma_bisect = sigma_bisect.unwrap_or(params.sigma_bisect);
            params.slack = slack.unwrap_or(params.slack);
            Stage::Oscillation
        }
        Command::Certify {
            k: Some(k),
            k1: Some(k1),
            c: Some(c),
            lambda: Some(lambda),
            ..
        } => {
            let cert = lipschitz_certificate(*k, *k1, *c, *lambda)?;
            let mut dir = OutputDir::create(&out_root, Path::new("certify"))?;
            dir.write_json("certificate.json", &cert)?;
            println!(
                "{}",
                json!({ "k_tilde": cert.k_tilde, "gamma_star": cert.gamma_star })
            );
            return Ok(0);
        }
        Command::Certify { draws, .. } => {
            params.oracle_draws = draws.unwrap_or(params.oracle_draws);
            Stage::Certify
        }
        Command::Suite => unreachable!("handled above"),
    };

    let mut ctx = SpecContext::load(require_config(&cli)?)?;
    match &cli.command {
        Command::Convolve {
            solution: Some(p), ..
        } => load_solution(&mut ctx, Some(p), &params)?,
        Command::Regularity { solution, .. }
        | Command::Oscillation { solution, .. }
        | Command::Certify { solution, .. } => {
            load_solution(&mut ctx, solution.as_deref(), &params)?
        }
        _ => {}
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cli.seed.unwrap_or(0));
    let dir = OutputDir::create(&out_root, &Path::new(&ctx.name).join(stage.as_str()))?;
    let outcome = run_stage(stage, &mut ctx, &params, &mut rng, dir)?;
    let text = serde_json::to_string_pretty(&json!({
        "stage": stage,
        "pass": outcome.pass,
        "summary": outcome.summary,
        "artifacts": outcome.artifacts,
    }))
    .map_err(|e| CliError::Io(e.to_string()))?;
    println!("{text}");
    Ok(match (outcome.pass, stage) {
        (true, _) => 0,
        (false, Stage::Validate) => 1,
        (false, _) => 2,
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
