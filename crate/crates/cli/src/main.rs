use std::fs;
use std::io::{self, Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use transit_core::analysis::{
    certify_bounds, lpf_lower_bound_instance, ratio_report, tight_profit_instance,
    tight_welfare_instance,
};
use transit_core::sample::{sample_instances, AdvantageMode, SamplerOptions};
use transit_core::scenario::{
    format_number, grid, parse_instance, serialize_instance, sweep_alpha, sweep_drivers,
    ScenarioError,
};
use transit_core::stackelberg::Algorithm;
use transit_core::subsidy::{transfers_for_target, verify_scheme};
use transit_core::{optimize_allocation, Instance, Objective};

#[derive(Parser)]
#[command(name = "transit", version, about = "Informal-transit market model: equilibria, optima, subsidies and Stackelberg routing")]
struct Cli {
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Input {
    /// Instance file; stdin when absent or `-`.
    instance: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Goal {
    Profit,
    Welfare,
}

impl From<Goal> for Objective {
    fn from(g: Goal) -> Self {
        match g {
            Goal::Profit => Objective::Profit,
            Goal::Welfare => Objective::Welfare,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum TightKind {
    Profit,
    Welfare,
    Lpf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Mixed,
    Positive,
    Zero,
}

#[derive(Subcommand)]
enum Command {
    /// Canonical driver equilibrium.
    Equilibrium(Input),
    /// Profit- or welfare-optimal allocation of all drivers.
    Optimize {
        #[command(flatten)]
        input: Input,
        #[arg(long, value_enum)]
        objective: Goal,
    },
    /// Optimum-to-equilibrium ratios and their bounds.
    Ratio(Input),
    /// Ratio report over a grid of driver masses.
    SweepDrivers {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        from: f64,
        #[arg(long)]
        to: f64,
        #[arg(long)]
        step: f64,
    },
    /// Budget-balanced transfers that make the optimum an equilibrium.
    CrossSubsidy {
        #[command(flatten)]
        input: Input,
        #[arg(long, value_enum)]
        objective: Goal,
        /// Reservation wage to check participation against.
        #[arg(long)]
        wage: Option<f64>,
        #[arg(long, default_value_t = 1e-7)]
        tol: f64,
    },
    /// Leader strategies over a grid of controlled shares.
    Stackelberg {
        #[command(flatten)]
        input: Input,
        /// Comma-separated subset of lpf, lncf, greedy, brute.
        #[arg(long, default_value = "lpf,lncf,greedy")]
        algos: String,
        /// `from:to:step` or a comma-separated list.
        #[arg(long, default_value = "0:1:0.1")]
        alpha_grid: String,
        #[arg(long, value_enum)]
        objective: Goal,
        /// Brute-force grid step in drivers; `alpha·D/200` by default.
        #[arg(long)]
        brute_step: Option<f64>,
    },
    /// Emit a worst-case instance.
    GenTight {
        #[arg(long, value_enum)]
        kind: TightKind,
        #[arg(long)]
        eps: f64,
        /// Controlled share, for `--kind lpf`.
        #[arg(long)]
        alpha: Option<f64>,
        /// Per-rider profit spread `p_max/p_min`, for `--kind welfare`.
        #[arg(long, default_value_t = 1.0)]
        ratio: f64,
    },
    /// Check the ratio bounds on seeded random instances.
    Certify {
        #[arg(long, default_value_t = 1000)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 6)]
        max_routes: usize,
        #[arg(long, value_enum, default_value_t = Mode::Mixed)]
        mode: Mode,
        /// Write each offending instance into this directory.
        #[arg(long)]
        dump: Option<PathBuf>,
    },
}

fn read_instance(input: &Input) -> Result<Instance> {
    let text = match input.instance.as_deref() {
        Some(p) if p.as_os_str() != "-" => {
            fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?
        }
        _ => {
            let mut s = String::new();
            io::stdin().read_to_string(&mut s).context("reading stdin")?;
            s
        }
    };
    Ok(parse_instance(&text)?)
}

fn alpha_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() == 3 {
        let v: Vec<f64> = parts
            .iter()
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .with_context(|| format!("bad alpha grid `{spec}`"))?;
        return Ok(grid(v[0], v[1], v[2])?);
    }
    spec.split(',')
        .map(|p| p.trim().parse::<f64>().with_context(|| format!("bad alpha `{p}`")))
        .collect()
}

fn route_table(inst: &Instance, x: &[f64]) -> String {
    let mut out = String::from("id,drivers,profit_per_driver,riders\n");
    for ((r, d), xi) in inst.routes.iter().zip(inst.derived()).zip(x) {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.id,
            format_number(*xi),
            format_number(d.per_driver_profit(*xi)),
            format_number(d.minibus_demand(*xi))
        ));
    }
    out
}

/// Output text and whether the run found a violated check.
fn execute(command: Command) -> Result<(String, bool)> {
    Ok(match command {
        Command::Equilibrium(input) => {
            let inst = read_instance(&input)?;
            let eq = inst.equilibrium()?;
            (route_table(&inst, &eq.allocation.x), false)
        }
        Command::Optimize { input, objective } => {
            let inst = read_instance(&input)?;
            let x = optimize_allocation(&inst, objective.into(), inst.total_drivers(), None, None)?;
            (route_table(&inst, &x.x), false)
        }
        Command::Ratio(input) => {
            let r = ratio_report(&read_instance(&input)?)?;
            let rows = [
                ("profit_ratio", r.profit_ratio),
                ("welfare_ratio", r.welfare_ratio),
                ("p_max_over_p_min", r.p_max_over_p_min),
                ("bound_profit", r.bound_profit),
                ("bound_welfare", r.bound_welfare),
                ("eq_profit_per_driver", r.eq_per_driver_profit),
                ("opt_profit", r.opt_profit),
                ("opt_welfare", r.opt_welfare),
                ("eq_profit", r.eq_profit),
                ("eq_welfare", r.eq_welfare),
            ];
            let mut out = String::from("metric,value\n");
            for (k, v) in rows {
                out.push_str(&format!("{k},{}\n", format_number(v)));
            }
            (out, false)
        }
        Command::SweepDrivers { input, from, to, step } => {
            let inst = read_instance(&input)?;
            (sweep_drivers(&inst, from, to, step)?.to_csv(), false)
        }
        Command::CrossSubsidy { input, objective, wage, tol } => {
            let inst = read_instance(&input)?;
            let target = optimize_allocation(&inst, objective.into(), inst.total_drivers(), None, None)?;
            let tv = transfers_for_target(&inst, &target)?;
            let report = verify_scheme(&inst, &tv, tol, wage)?;
            let mut out = String::from("id,drivers,transfer,adjusted_profit\n");
            for ((r, x), t) in inst.routes.iter().zip(&target.x).zip(&tv.tau) {
                out.push_str(&format!(
                    "{},{},{},{}\n",
                    r.id,
                    format_number(*x),
                    format_number(*t),
                    format_number(tv.pi_tilde_eq)
                ));
            }
            eprintln!(
                "budget_residual={} equilibrium_ok={} canonical_deviation={} canonical_matches={}{}",
                format_number(report.budget_residual),
                report.equilibrium_ok,
                format_number(report.canonical_deviation),
                report.canonical_matches,
                report.ir_wage_ok.map_or(String::new(), |ok| format!(" wage_ok={ok}")),
            );
            (out, !report.equilibrium_ok)
        }
        Command::Stackelberg { input, algos, alpha_grid: spec, objective, brute_step } => {
            let inst = read_instance(&input)?;
            let algos: Vec<Algorithm> = algos
                .split(',')
                .map(|a| Algorithm::from_str(a.trim()))
                .collect::<std::result::Result<_, _>>()
                .map_err(anyhow::Error::msg)?;
            let alphas = alpha_grid(&spec)?;
            (sweep_alpha(&inst, &algos, &alphas, objective.into(), brute_step)?.to_csv(), false)
        }
        Command::GenTight { kind, eps, alpha, ratio } => {
            let inst = match kind {
                TightKind::Profit => tight_profit_instance(eps)?,
                TightKind::Welfare => tight_welfare_instance(eps, ratio)?,
                TightKind::Lpf => {
                    let Some(a) = alpha else { bail!("--kind lpf needs --alpha") };
                    lpf_lower_bound_instance(a, eps)?
                }
            };
            (serialize_instance(&inst), false)
        }
        Command::Certify { count, seed, max_routes, mode, dump } => {
            let opts = SamplerOptions {
                max_routes,
                min_routes: SamplerOptions::default().min_routes.min(max_routes),
                advantage: match mode {
                    Mode::Mixed => AdvantageMode::Mixed,
                    Mode::Positive => AdvantageMode::Positive,
                    Mode::Zero => AdvantageMode::Zero,
                },
                ..SamplerOptions::default()
            };
            let insts = sample_instances(seed, count, &opts)?;
            let violations = certify_bounds(&insts);
            if let Some(dir) = &dump {
                fs::create_dir_all(dir)?;
                for v in &violations {
                    fs::write(dir.join(format!("violation_{}.inst", v.index)), &v.instance)?;
                }
            }
            let mut out = String::from("index,reason\n");
            for v in &violations {
                out.push_str(&format!("{},\"{}\"\n", v.index, v.reason.replace('"', "'")));
            }
            eprintln!("{} instances, {} violations", insts.len(), violations.len());
            (out, !violations.is_empty())
        }
    })
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<ScenarioError>() {
        Some(e) => e.exit_code() as u8,
        None => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = execute(cli.command).and_then(|(text, failed)| {
        match &cli.out {
            Some(p) => fs::write(p, &text).with_context(|| format!("writing {}", p.display()))?,
            None => io::stdout().lock().write_all(text.as_bytes())?,
        }
        Ok(failed)
    });
    match result {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
