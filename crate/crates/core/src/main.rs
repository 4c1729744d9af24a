use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use convex_transport::driver::{
    io::save_triple, make_scenario, run_iterations, schedule_for, sweep, Diagnostics, RunConfig,
};
use convex_transport::scheme::{perturb_step, StepStatus};
use convex_transport::verify::{lemma_battery, mikado_contract, BatteryOptions};
use convex_transport::{Error, Result};

#[derive(Parser)]
#[command(name = "convex-transport", version, about = "Convex-integration step for the continuity equation on T^d")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Outer iteration over the configured schedule.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// A single perturbation step with the `step` block of the config.
    Step {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Parameter sweep with the `sweep` block of the config.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Mikado moment, divergence and scaling contract.
    Mikado {
        #[arg(long, default_value_t = 3)]
        d: usize,
        #[arg(long, default_value_t = 128)]
        n: usize,
        #[arg(long = "mu", required = true)]
        mus: Vec<f64>,
        #[arg(long)]
        report: PathBuf,
    },
    /// Product, antidivergence and flow lemma battery.
    Lemmas {
        #[arg(long)]
        report: PathBuf,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

/// 0 = all checks pass, 2 = PARTIAL, 1 = error or failed check.
enum Verdict {
    Pass,
    Partial,
    Fail,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, serde_json::to_string_pretty(value)?)?;
    Ok(())
}

fn status(s: StepStatus) -> Verdict {
    match s {
        StepStatus::Complete => Verdict::Pass,
        StepStatus::Partial => Verdict::Partial,
    }
}

fn execute(cmd: Command) -> Result<Verdict> {
    match cmd {
        Command::Run { config, out } => {
            let cfg = RunConfig::load(&config)?;
            let sc = make_scenario(&cfg.scenario, cfg.times()?, cfg.grid()?)?;
            let schedule = schedule_for(&sc.triple, &cfg.schedule, &cfg.tolerances, cfg.epsilon, cfg.mode)?;
            fs::create_dir_all(&out)?;
            let outcome = run_iterations(&sc.triple, &schedule, &cfg.tolerances, Some(&out))?;
            write_json(&out.join("report.json"), &outcome.report)?;
            fs::write(out.join("diagnostics.csv"), outcome.diagnostics.to_csv())?;
            eprintln!(
                "{:?}: {} steps, rho distance {:.3e} (budget {:.3e})",
                outcome.report.status,
                outcome.report.rows.len(),
                outcome.report.rho_distance,
                outcome.report.rho_budget
            );
            Ok(status(outcome.report.status))
        }
        Command::Step { config, out } => {
            let cfg = RunConfig::load(&config)?;
            let step = cfg.step.clone().ok_or_else(|| Error::Config("missing `step` block".into()))?;
            let sc = make_scenario(&cfg.scenario, cfg.times()?, cfg.grid()?)?;
            let outcome = perturb_step(&sc.triple, &cfg.tolerances.params(step.p, step.eta, step.delta))?;
            fs::create_dir_all(&out)?;
            save_triple(&out.join("q0"), &sc.triple)?;
            save_triple(&out.join("q1"), &outcome.output)?;
            let mut diagnostics = Diagnostics::default();
            for s in &outcome.report.snapshots {
                diagnostics.push_snapshot(0, s);
            }
            fs::write(out.join("diagnostics.csv"), diagnostics.to_csv())?;
            write_json(&out.join("report.json"), &outcome.report)?;
            for b in &outcome.report.binding {
                eprintln!("binding: {b}");
            }
            Ok(status(outcome.report.status))
        }
        Command::Sweep { config, out } => {
            let cfg = RunConfig::load(&config)?;
            let sw = cfg.sweep.clone().ok_or_else(|| Error::Config("missing `sweep` block".into()))?;
            let sc = make_scenario(&cfg.scenario, cfg.times()?, cfg.grid()?)?;
            let report = sweep(&sc.triple, &sw)?;
            write_json(&out.join("report.json"), &report)?;
            for f in &report.fits {
                eprintln!("{:<20} slope {:?}", f.term, f.slope);
            }
            Ok(Verdict::Pass)
        }
        Command::Mikado { d, n, mus, report } => {
            let r = mikado_contract(d, n, &mus)?;
            write_json(&report, &r)?;
            Ok(checks_verdict(r.checks.iter().map(|c| (c.name.as_str(), c.passed))))
        }
        Command::Lemmas { report, seed } => {
            let r = lemma_battery(&BatteryOptions { seed, ..BatteryOptions::default() })?;
            write_json(&report, &r)?;
            Ok(checks_verdict(r.checks.iter().map(|c| (c.name.as_str(), c.passed))))
        }
    }
}

fn checks_verdict<'a>(checks: impl Iterator<Item = (&'a str, bool)>) -> Verdict {
    let mut ok = true;
    for (name, passed) in checks {
        if !passed {
            eprintln!("FAIL {name}");
            ok = false;
        }
    }
    if ok {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(Verdict::Pass) => ExitCode::SUCCESS,
        Ok(Verdict::Partial) => ExitCode::from(2),
        Ok(Verdict::Fail) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
