use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use eqrf::accept::{run_suite, Suite};
use eqrf::specialfun::phi_frac_report;
use eqrf::study::{evaluate, parse_studies, run_study, write_outputs};
use eqrf::PhiOrder;
use num_complex::Complex64;

#[derive(Parser)]
#[command(
    name = "eqrf",
    version,
    about = "Exponential quadrature rules for fractional sources"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate φ_λ(z) and report the branch used and its error estimate.
    Phi {
        #[arg(long, allow_hyphen_values = true)]
        lambda: f64,
        #[arg(long, allow_hyphen_values = true)]
        re: f64,
        #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
        im: f64,
        /// Print a JSON object instead of `key value` lines.
        #[arg(long)]
        json: bool,
    },
    /// Run every study in a JSON config and write `<name>.csv` and `<name>.json`.
    Study {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run acceptance suites; exits nonzero if any criterion fails.
    Accept {
        /// One of fig1, fig3, fig4, fig5, fig6, perbc, props or all.
        #[arg(long, default_value = "all")]
        suite: Vec<String>,
        /// Also write each study's CSV and JSON summary here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Phi {
            lambda,
            re,
            im,
            json,
        } => phi(lambda, Complex64::new(re, im), json),
        Command::Study { config, out } => study(&config, &out),
        Command::Accept { suite, out } => accept(&suite, out.as_deref()),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

type CmdResult = Result<ExitCode, Box<dyn std::error::Error>>;

fn phi(lambda: f64, z: Complex64, json: bool) -> CmdResult {
    let report = phi_frac_report(PhiOrder::new(lambda)?, z)?;
    if json {
        let obj = serde_json::json!({
            "lambda": lambda,
            "z": [z.re, z.im],
            "re": report.value.re,
            "im": report.value.im,
            "method": report.method.to_string(),
            "est_rel_error": report.est_rel_error,
        });
        println!("{obj}");
    } else {
        println!("re {}", report.value.re);
        println!("im {}", report.value.im);
        println!("method {}", report.method);
        println!("est_rel_error {:e}", report.est_rel_error);
    }
    Ok(ExitCode::SUCCESS)
}

fn study(config: &Path, out: &Path) -> CmdResult {
    let text = std::fs::read_to_string(config)
        .map_err(|e| format!("cannot read {}: {e}", config.display()))?;
    let specs = parse_studies(&text)?;
    for spec in &specs {
        let report = run_study(spec)?;
        let checks = evaluate(spec, &report);
        for fit in &report.fits {
            match (fit.order, fit.residual) {
                (Some(p), Some(res)) => {
                    println!(
                        "{} {}: order {p:.3} (residual {res:.3})",
                        spec.name, fit.method
                    )
                }
                _ => println!("{} {}: no order (fewer than 3 N)", spec.name, fit.method),
            }
        }
        for c in &checks {
            println!(
                "{} {}: {}",
                if c.pass { "PASS" } else { "FAIL" },
                c.name,
                c.detail
            );
        }
        let (csv, json) = write_outputs(out, spec, &report, &checks)?;
        println!("wrote {} and {}", csv.display(), json.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn parse_suites(names: &[String]) -> Result<Vec<Suite>, String> {
    let mut suites = Vec::new();
    for name in names {
        if name == "all" {
            suites.extend(Suite::ALL);
        } else {
            suites.push(name.parse::<Suite>().map_err(|e| e.to_string())?);
        }
    }
    Ok(suites)
}

fn accept(names: &[String], out: Option<&Path>) -> CmdResult {
    let mut all_passed = true;
    for suite in parse_suites(names)? {
        let outcome = run_suite(suite)?;
        for line in outcome.lines() {
            println!("{line}");
        }
        all_passed &= outcome.passed();
        if let Some(dir) = out {
            for (spec, report) in &outcome.reports {
                write_outputs(dir, spec, report, &evaluate(spec, report))?;
            }
        }
        println!(
            "suite {suite}: {} in {:.1} s",
            if outcome.passed() { "passed" } else { "failed" },
            outcome.seconds
        );
    }
    Ok(if all_passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}
