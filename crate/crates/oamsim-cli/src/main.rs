//! Command-line frontend: simulate setups, verify cycles, search for new
//! setups, sweep imperfection parameters, render modes, list cycle
//! families.
//!
//! Exit codes: 0 success (and verified / found), 1 verification failure or
//! nothing found, 2 usage or parse errors.

use clap::{Parser, Subcommand};
use oamsim::elements::{Circuit, ElementKind};
use oamsim::imperfect::{
    crosstalk_matrix, efficiency_report, imperfect_circuit, reference_efficiencies,
    successor_mapping, ImperfectionParams,
};
use oamsim::render::render_mode;
use oamsim::search::{run_search, CycleTarget, SearchConfig};
use oamsim::setup::parse_setup;
use oamsim::space::{basis_state, ModeLabel};
use oamsim::verify::{check_cycle_with, cycle_labels, enumerate_cycles, CycleOptions};
use serde_json::json;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const SCHEMA_VERSION: u32 = 1;

#[derive(Parser)]
#[command(name = "oamsim", version, about = "Discrete-mode linear-optics simulator and cyclic-transformation search")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Propagate one input mode through a setup and print the output mode
    /// probabilities
    Simulate {
        /// Setup file
        setup: PathBuf,
        /// Input mode as path:ell or path:ell:H|V
        #[arg(long)]
        input: String,
        #[arg(long)]
        json: bool,
    },
    /// Check that a setup performs a lossless cycle on the designated modes
    VerifyCycle {
        setup: PathBuf,
        /// Designated ℓ values, comma separated
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        ells: Vec<i32>,
        #[arg(long = "in-path", default_value = "a")]
        in_path: String,
        #[arg(long = "out-path", default_value = "a")]
        out_path: String,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        /// Additionally require unit phases
        #[arg(long)]
        strict_phase: bool,
        #[arg(long)]
        json: bool,
    },
    /// Randomly assemble toolbox circuits until one realizes the target
    /// cycle, then simplify and report it
    Search {
        /// Target, e.g. cycle4 or cycle8
        #[arg(long)]
        target: String,
        /// Designated ℓ values; omit to accept any reachable four-fold
        /// family
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        ells: Option<Vec<i32>>,
        /// Allowed elements, e.g. spp,oambs,mirror,bs,dove
        #[arg(long, value_delimiter = ',', required = true)]
        toolbox: Vec<String>,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Enable the polarization degree of freedom
        #[arg(long)]
        pol: bool,
        #[arg(long, default_value_t = -8, allow_hyphen_values = true)]
        lmin: i32,
        #[arg(long, default_value_t = 8, allow_hyphen_values = true)]
        lmax: i32,
        #[arg(long, default_value_t = 12)]
        max_elements: usize,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long = "in-path", default_value = "a")]
        in_path: String,
        #[arg(long = "out-path", default_value = "a")]
        out_path: String,
        /// Where to write the discovered setup
        #[arg(long, default_value = "discovered.setup")]
        out: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Sweep one imperfection parameter and print per-input efficiencies
    /// as CSV
    Sweep {
        setup: PathBuf,
        /// One of aperture_radius, bs_ratio_error, phase_error,
        /// coupling_decay
        #[arg(long)]
        param: String,
        #[arg(long, allow_hyphen_values = true)]
        from: f64,
        #[arg(long, allow_hyphen_values = true)]
        to: f64,
        #[arg(long)]
        steps: usize,
        /// Designated cycle ℓ values
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "-2,-1,0,1")]
        ells: Vec<i32>,
        #[arg(long = "in-path", default_value = "a")]
        in_path: String,
        #[arg(long = "out-path", default_value = "a")]
        out_path: String,
        /// Append the shipped experimental reference data as comment rows
        #[arg(long)]
        reference: bool,
    },
    /// Render a mode's intensity and phase as 16-bit PGM images
    Render {
        #[arg(long, allow_hyphen_values = true)]
        ell: i32,
        /// Image size in pixels
        #[arg(long, default_value_t = 128)]
        size: usize,
        /// Beam waist (same units as extent)
        #[arg(long, default_value_t = 1.0)]
        waist: f64,
        /// Half-width of the rendered region
        #[arg(long, default_value_t = 2.5)]
        extent: f64,
        /// Output file prefix
        #[arg(long)]
        out: PathBuf,
        /// Also dump raw values as CSV
        #[arg(long)]
        csv: bool,
    },
    /// List the four-fold cycle families reachable by the built-in setup
    Cycles {
        #[arg(long)]
        limit: i32,
        #[arg(long)]
        json: bool,
    },
}

/// Failure carrying the process exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure { code: 2, message: message.into() }
    }
}

impl From<oamsim::Error> for Failure {
    fn from(e: oamsim::Error) -> Self {
        Failure::usage(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::usage(e.to_string())
    }
}

fn load_setup(path: &PathBuf) -> Result<Circuit, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    parse_setup(&text).map_err(|errors| {
        let mut message = format!("{} parse error(s) in {}:", errors.len(), path.display());
        for e in errors {
            message.push_str(&format!("\n  {e}"));
        }
        Failure::usage(message)
    })
}

fn complex_str(z: oamsim::Complex64) -> String {
    format!("{:+.6}{:+.6}i", z.re, z.im)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}

fn run(command: Command) -> Result<u8, Failure> {
    match command {
        Command::Simulate { setup, input, json } => simulate(&setup, &input, json),
        Command::VerifyCycle { setup, ells, in_path, out_path, tol, strict_phase, json } => {
            verify_cycle(&setup, &ells, &in_path, &out_path, tol, strict_phase, json)
        }
        Command::Search {
            target,
            ells,
            toolbox,
            trials,
            seed,
            pol,
            lmin,
            lmax,
            max_elements,
            tol,
            in_path,
            out_path,
            out,
            json,
        } => search(
            &target, ells, &toolbox, trials, seed, pol, lmin, lmax, max_elements, tol, &in_path,
            &out_path, &out, json,
        ),
        Command::Sweep { setup, param, from, to, steps, ells, in_path, out_path, reference } => {
            sweep(&setup, &param, from, to, steps, &ells, &in_path, &out_path, reference)
        }
        Command::Render { ell, size, waist, extent, out, csv } => {
            render(ell, size, waist, extent, &out, csv)
        }
        Command::Cycles { limit, json } => cycles(limit, json),
    }
}

fn simulate(setup: &PathBuf, input: &str, json: bool) -> Result<u8, Failure> {
    let circuit = load_setup(setup)?;
    let label: ModeLabel = input
        .parse()
        .map_err(|e: oamsim::Error| Failure::usage(e.to_string()))?;
    let state = basis_state(circuit.space(), &label)?;
    let op = circuit.build()?;
    let probabilities = op.apply(&state)?.mode_probabilities();
    let nonzero = probabilities.nonzero(1e-12);
    if json {
        let entries: Vec<_> = nonzero
            .iter()
            .map(|(mode, p)| json!({ "mode": mode.to_string(), "probability": p }))
            .collect();
        let doc = json!({
            "schema_version": SCHEMA_VERSION,
            "kind": "mode_probabilities",
            "input": label.to_string(),
            "probabilities": entries,
            "sink": probabilities.sink,
        });
        println!("{}", serde_json::to_string_pretty(&doc).expect("json"));
    } else {
        println!("input {label}");
        for (mode, p) in &nonzero {
            println!("{mode}  {p:.12}");
        }
        if probabilities.sink > 1e-12 {
            println!("sink  {:.12}", probabilities.sink);
        }
    }
    Ok(0)
}

fn verify_cycle(
    setup: &PathBuf,
    ells: &[i32],
    in_path: &str,
    out_path: &str,
    tol: f64,
    strict_phase: bool,
    json: bool,
) -> Result<u8, Failure> {
    let circuit = load_setup(setup)?;
    let op = circuit.build()?;
    let report =
        check_cycle_with(&op, in_path, ells, out_path, tol, CycleOptions { strict_phase })?;
    if json {
        let doc = json!({
            "schema_version": SCHEMA_VERSION,
            "kind": "cycle_report",
            "report": report,
        });
        println!("{}", serde_json::to_string_pretty(&doc).expect("json"));
    } else {
        println!("is_cycle: {}", report.is_cycle);
        println!("order: {}", report.order);
        for ((input, output), phase) in report.mapping.iter().zip(&report.phases) {
            match output {
                Some(output) => println!("{input} -> {output}  phase {}", complex_str(*phase)),
                None => println!("{input} -> (no output-path amplitude)"),
            }
        }
        println!("worst_leak: {:.3e}", report.worst_leak);
        println!("nth_power_deviation: {:.3e}", report.nth_power_deviation);
    }
    Ok(if report.is_cycle { 0 } else { 1 })
}

#[allow(clippy::too_many_arguments)]
fn search(
    target: &str,
    ells: Option<Vec<i32>>,
    toolbox_words: &[String],
    trials: u64,
    seed: u64,
    pol: bool,
    lmin: i32,
    lmax: i32,
    max_elements: usize,
    tol: f64,
    in_path: &str,
    out_path: &str,
    out: &PathBuf,
    json: bool,
) -> Result<u8, Failure> {
    let order: usize = target
        .strip_prefix("cycle")
        .and_then(|n| n.parse().ok())
        .ok_or_else(|| Failure::usage(format!("bad target `{target}`, expected cycle<n>")))?;
    let toolbox: Vec<ElementKind> = toolbox_words
        .iter()
        .map(|w| {
            ElementKind::from_keyword(w)
                .ok_or_else(|| Failure::usage(format!("unknown toolbox element `{w}`")))
        })
        .collect::<Result<_, _>>()?;
    let config = SearchConfig {
        l_min: lmin,
        l_max: lmax,
        paths: vec!["a".into(), "b".into()],
        pol_enabled: pol,
        toolbox,
        max_elements,
        trials,
        seed,
        target: CycleTarget {
            order,
            input_path: in_path.to_string(),
            output_path: out_path.to_string(),
            ells,
        },
        tolerance: tol,
    };
    let report = run_search(&config)?;
    if let Some(setup_text) = &report.setup {
        std::fs::write(out, setup_text)?;
    }
    if json {
        let doc = json!({
            "schema_version": SCHEMA_VERSION,
            "kind": "search_report",
            "report": report,
            "setup_file": report.setup.as_ref().map(|_| out.display().to_string()),
        });
        println!("{}", serde_json::to_string_pretty(&doc).expect("json"));
    } else {
        println!("found: {}", report.found);
        println!("trials_used: {}", report.trials_used);
        println!("seed: {}", report.seed);
        if let Some(setup_text) = &report.setup {
            println!("setup written to {}", out.display());
            print!("{setup_text}");
        }
    }
    Ok(if report.found { 0 } else { 1 })
}

#[allow(clippy::too_many_arguments)]
fn sweep(
    setup: &PathBuf,
    param: &str,
    from: f64,
    to: f64,
    steps: usize,
    ells: &[i32],
    in_path: &str,
    out_path: &str,
    reference: bool,
) -> Result<u8, Failure> {
    if steps < 2 {
        return Err(Failure::usage("steps must be at least 2"));
    }
    let circuit = load_setup(setup)?;
    let space = circuit.space();
    let inputs = cycle_labels(space, in_path, ells)?;
    let outputs = cycle_labels(space, out_path, ells)?;
    let ell_of = |labels: &[ModeLabel]| labels.iter().map(|l| l.ell).collect::<Vec<_>>();
    let mapping = successor_mapping(&ell_of(&inputs), &ell_of(&outputs))?;

    let mut header = String::from("aperture_radius,bs_ratio_error,phase_error,coupling_decay");
    for label in &inputs {
        header.push_str(&format!(",E_in_{label}"));
    }
    println!("{header}");
    for step in 0..steps {
        let value = from + (to - from) * step as f64 / (steps - 1) as f64;
        let mut params = ImperfectionParams::ideal();
        match param {
            "aperture_radius" => params.aperture_radius = value,
            "bs_ratio_error" => params.bs_ratio_error = value,
            "phase_error" => params.phase_error = value,
            "coupling_decay" => params.coupling_decay = value,
            other => return Err(Failure::usage(format!("unknown parameter `{other}`"))),
        }
        let op = imperfect_circuit(&circuit, &params)?;
        let ct = crosstalk_matrix(&op, &inputs, &outputs, params.coupling_decay)?;
        let report = efficiency_report(ct, &mapping)?;
        let mut row = format!(
            "{},{},{},{}",
            params.aperture_radius, params.bs_ratio_error, params.phase_error, params.coupling_decay
        );
        for e in &report.efficiencies {
            row.push_str(&format!(",{e:.9}"));
        }
        println!("{row}");
    }
    if reference {
        println!("# experimental reference (measured, percent, one-sigma):");
        for r in reference_efficiencies() {
            println!(
                "# input_ell={} E={}% +-{}%",
                r.input_ell, r.efficiency_percent, r.uncertainty_percent
            );
        }
    }
    Ok(0)
}

fn render(ell: i32, size: usize, waist: f64, extent: f64, out: &Path, csv: bool) -> Result<u8, Failure> {
    let image = render_mode(ell, size, waist, extent)?;
    let (intensity, phase) = image.write_pgm_pair(out)?;
    println!("{}", intensity.display());
    println!("{}", phase.display());
    if csv {
        let csv_path = {
            let mut name = out.as_os_str().to_os_string();
            name.push(".csv");
            PathBuf::from(name)
        };
        image.write_csv(&csv_path)?;
        println!("{}", csv_path.display());
    }
    Ok(0)
}

fn cycles(limit: i32, json: bool) -> Result<u8, Failure> {
    let families = enumerate_cycles(limit);
    if json {
        let doc = json!({
            "schema_version": SCHEMA_VERSION,
            "kind": "cycle_families",
            "limit": limit,
            "cycles": families,
        });
        println!("{}", serde_json::to_string_pretty(&doc).expect("json"));
    } else {
        for f in &families {
            println!("({}, {}, {}, {})", f[0], f[1], f[2], f[3]);
        }
    }
    Ok(0)
}
