//! `reso`: run, sweep, tune and analyze ADRC scenarios from the command line.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use reso_core::config::{apply_overrides, parse_override, parse_scenario};
use reso_core::flatness;
use reso_core::metrics::{summary_table, MetricsReport};
use reso_core::plant::build_state_space;
use reso_core::presets::{self, NOMINAL_OMEGA_C, NOMINAL_OMEGA_O};
use reso_core::simulator::Scenario;
use reso_core::stability::decompose;
use reso_core::sweep::{run_many, sweep_scenarios};
use reso_core::trace::Trace;
use reso_core::tuning::{verify_poles, GainSet, TableForm};
use reso_core::Error;

#[derive(Parser, Debug)]
#[command(
    name = "reso",
    version,
    about = "ADRC with a resonant extended state observer for a buck-converter-fed DC motor"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate a scenario, write its trace and print the metric summary.
    Run(RunArgs),
    /// Run one scenario per value of a parameter.
    Sweep(SweepArgs),
    /// Print controller and observer gains and check the pole placement.
    Tune(TuneArgs),
    /// Print the singular-perturbation decomposition of the observer error matrix.
    Analyze(TuneArgs),
}

#[derive(Args, Debug, Clone)]
struct Source {
    /// Built-in experiment: e1, e2a, e2b or e3.
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    /// Scenario TOML file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dotted override applied after loading, e.g. `controller.omega_o=8000`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    source: Source,
    /// Controller(s) to use in place of the scenario's own. Repeatable.
    #[arg(long, value_enum)]
    controller: Vec<Label>,
    /// Directory for the trace CSVs and summary.csv.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    csv: CsvArgs,
}

#[derive(Args, Debug, Clone, Copy)]
struct CsvArgs {
    /// Significant digits in trace files; 17 makes the round trip exact.
    #[arg(long, default_value_t = 9, value_parser = clap::value_parser!(u8).range(1..=17))]
    digits: u8,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    source: Source,
    /// Controller to use in place of the scenario's own.
    #[arg(long, value_enum)]
    controller: Option<Label>,
    /// Swept key; defaults to the scenario's `sweep.key`.
    #[arg(long)]
    key: Option<String>,
    /// Comma-separated values; default to the scenario's `sweep.values`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    values: Option<Vec<f64>>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    csv: CsvArgs,
}

#[derive(Args, Debug)]
struct TuneArgs {
    /// Take the bandwidths from an ADRC scenario instead of the flags below.
    #[command(flatten)]
    source: Source,
    /// Controller label used with --preset.
    #[arg(long, value_enum)]
    controller: Option<Label>,
    #[arg(long, default_value_t = NOMINAL_OMEGA_C)]
    omega_c: f64,
    #[arg(long, default_value_t = NOMINAL_OMEGA_O)]
    omega_o: f64,
    /// Internal-model frequency [rad/s]; 0 gives the GPIO.
    #[arg(long, default_value_t = presets::HARMONIC)]
    omega_r_hat: f64,
    /// Observer-gain recursion to evaluate.
    #[arg(long, value_enum, default_value_t = Form::Corrected)]
    form: Form,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Label {
    Pi,
    AdrcGpio,
    AdrcReso,
    AdrcOracle,
}

impl Label {
    fn as_str(self) -> &'static str {
        match self {
            Label::Pi => "pi",
            Label::AdrcGpio => "adrc-gpio",
            Label::AdrcReso => "adrc-reso",
            Label::AdrcOracle => "adrc-oracle",
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Form {
    Corrected,
    WithoutK0,
}

/// Distinguishes failures of the simulated system from usage errors.
#[derive(Debug)]
struct Failed(String);

impl std::fmt::Display for Failed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Failed {}

fn load(src: &Source, label: Option<Label>) -> Result<Scenario> {
    let base = match (&src.preset, &src.config) {
        (Some(name), None) => match label {
            Some(l) => presets::preset_with(name, l.as_str())?,
            None => presets::preset(name)?,
        },
        (None, Some(path)) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let mut sc = parse_scenario(&text).with_context(|| format!("parsing {}", path.display()))?;
            if let Some(l) = label {
                sc.controller = presets::controller(l.as_str())?;
            }
            sc
        }
        _ => bail!("give exactly one of --preset or --config"),
    };
    let overrides = src.overrides.iter().map(|s| parse_override(s)).collect::<Result<Vec<_>, _>>()?;
    let sc = apply_overrides(&base, &overrides)?;
    sc.validate()?;
    Ok(sc)
}

fn prepare_out(out: &Option<PathBuf>) -> Result<()> {
    if let Some(dir) = out {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(())
}

fn write_trace(dir: &Path, stem: &str, tr: &Trace, digits: u8) -> Result<()> {
    let path = dir.join(format!("{stem}.csv"));
    let file = fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    tr.write_csv(std::io::BufWriter::new(file), digits as usize)?;
    Ok(())
}

/// Run every scenario, write traces, print the summary. Fails if any run failed.
fn execute(scenarios: &[Scenario], labels: &[String], out: &Option<PathBuf>, csv: CsvArgs) -> Result<()> {
    prepare_out(out)?;
    let results = run_many(scenarios, |_, r| r);
    let mut rows: Vec<(String, std::result::Result<MetricsReport, String>)> = Vec::new();
    let mut failures = Vec::new();
    for (label, r) in labels.iter().zip(results) {
        match r {
            Ok((tr, m)) => {
                if let Some(dir) = out {
                    write_trace(dir, label, &tr, csv.digits)?;
                }
                rows.push((label.clone(), Ok(m)));
            }
            Err(e) => {
                failures.push(format!("{label}: {e}"));
                rows.push((label.clone(), Err(e.to_string())));
            }
        }
    }
    let table = summary_table(&rows);
    print!("{table}");
    if let Some(dir) = out {
        fs::write(dir.join("summary.csv"), &table)?;
    }
    if failures.is_empty() {
        Ok(())
    } else {
        Err(Failed(failures.join("\n")).into())
    }
}

fn run_cmd(a: &RunArgs) -> Result<()> {
    let labels: Vec<Option<Label>> =
        if a.controller.is_empty() { vec![None] } else { a.controller.iter().copied().map(Some).collect() };
    let mut scenarios = Vec::new();
    for l in &labels {
        scenarios.push(load(&a.source, *l)?);
    }
    let names: Vec<String> = scenarios.iter().map(|s| s.name.clone()).collect();
    let mut seen = std::collections::HashSet::new();
    if names.iter().any(|n| !seen.insert(n)) {
        bail!("scenario names collide: {}", names.join(", "));
    }
    execute(&scenarios, &names, &a.out, a.csv)
}

fn sweep_cmd(a: &SweepArgs) -> Result<()> {
    let base = load(&a.source, a.controller)?;
    let spec = base.sweep.clone();
    let key = match (&a.key, &spec) {
        (Some(k), _) => k.clone(),
        (None, Some(s)) => s.key.clone(),
        (None, None) => bail!("no sweep key: pass --key or use a scenario with a [sweep] section"),
    };
    let values = match (&a.values, &spec) {
        (Some(v), _) => v.clone(),
        (None, Some(s)) if s.key == key => s.values.clone(),
        _ => bail!("no sweep values for `{key}`: pass --values"),
    };
    let scenarios = sweep_scenarios(&base, &key, &values)?;
    let labels: Vec<String> =
        values.iter().enumerate().map(|(i, v)| format!("{}-{i:02}-{key}={v}", base.name)).collect();
    execute(&scenarios, &labels, &a.out, a.csv)
}

fn gains_for(a: &TuneArgs) -> Result<GainSet> {
    let form = match a.form {
        Form::Corrected => TableForm::Corrected,
        Form::WithoutK0 => TableForm::WithoutK0,
    };
    if a.source.preset.is_some() || a.source.config.is_some() {
        let sc = load(&a.source, a.controller)?;
        let g = sc
            .controller
            .gains()?
            .ok_or_else(|| anyhow::anyhow!("controller `{}` has no observer", sc.controller.label()))?;
        return Ok(GainSet::from_bandwidths_unchecked(g.omega_c, g.omega_o, g.omega_r_hat, form));
    }
    for (name, v) in [("omega-c", a.omega_c), ("omega-o", a.omega_o), ("omega-r-hat", a.omega_r_hat)] {
        if !v.is_finite() || v < 0.0 {
            bail!("--{name} must be finite and non-negative, got {v}");
        }
    }
    Ok(GainSet::from_bandwidths_unchecked(a.omega_c, a.omega_o, a.omega_r_hat, form))
}

fn tune_cmd(a: &TuneArgs) -> Result<()> {
    let g = gains_for(a)?;
    println!("omega_c = {:.6e}, omega_o = {:.6e}, omega_r_hat = {:.6e}", g.omega_c, g.omega_o, g.omega_r_hat);
    println!("gain,value");
    for (i, k) in g.k.iter().enumerate() {
        println!("k{i},{k:.9e}");
    }
    for (i, l) in g.l.iter().enumerate() {
        println!("l{},{l:.9e}", i + 1);
    }
    let r = verify_poles(&g)?;
    println!("power,coefficient,expected");
    for i in 0..8 {
        println!("{},{:.9e},{:.9e}", 7 - i, r.coefficients[i], r.expected[i]);
    }
    println!("max coefficient deviation: {:.3e}", r.max_coefficient_deviation);
    println!("stored-gain coefficient deviation: {:.3e}", r.stored_coefficient_deviation);
    println!("max |lambda(H_q) + 1|: {:.3e}", r.max_eigenvalue_deviation);
    println!("hurwitz: {}", r.hurwitz);
    if let Some(i) = g.l.iter().position(|&v| v <= 0.0) {
        println!("warning: l{} = {:.3e} is not positive", i + 1, g.l[i]);
    }
    if r.passed() {
        println!("pole placement: ok");
        Ok(())
    } else {
        Err(Failed("pole placement: failed".into()).into())
    }
}

fn analyze_cmd(a: &TuneArgs) -> Result<()> {
    if a.source.preset.is_some() || a.source.config.is_some() {
        let sc = load(&a.source, a.controller)?;
        let fa = flatness::analyze(&build_state_space(&sc.plant)?, &sc.plant)?;
        println!("flatness: rank(Q_C) = {}, b0 = {:.9e}, closed form {:.9e}", fa.rank, fa.b0, fa.b0_closed_form);
    }
    let g = gains_for(a)?;
    let d = match decompose(&g) {
        Ok(d) => d,
        Err(e @ Error::IdentityViolation { .. }) => return Err(Failed(e.to_string()).into()),
        Err(e) => return Err(e.into()),
    };
    println!("omega_o = {:.6e}, eps = {:.6e}", g.omega_o, d.eps);
    let show = |name: &str, m: &reso_core::observer::Matrix7| {
        println!("{name}:");
        for row in m.row_iter() {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:>13.5e}")).collect();
            println!("  {}", cells.join(" "));
        }
    };
    show("H_q", &d.h_q);
    show("A_q", &d.a_q);
    show("H_eps", &d.h_eps);
    let r: Vec<String> = d.r.iter().map(|v| format!("{v:.6e}")).collect();
    println!("r = [{}]", r.join(", "));
    println!("similarity deviation: {:.3e}", d.similarity_deviation);
    println!("decomposition deviation: {:.3e}", d.decomposition_deviation);
    println!("max eigenvalue deviation: {:.3e}", d.max_eigen_deviation);
    println!("hurwitz H_q: {}, A_q: {}", d.hurwitz_h_q, d.hurwitz_a_q);
    for note in &d.notes {
        println!("note: {note}");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(a) => run_cmd(a),
        Command::Sweep(a) => sweep_cmd(a),
        Command::Tune(a) => tune_cmd(a),
        Command::Analyze(a) => analyze_cmd(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<Failed>() => {
            eprintln!("{e}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
