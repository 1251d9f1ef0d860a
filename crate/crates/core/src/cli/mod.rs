//! The `oeq` command line: `verify`, `extract`, `roundtrip` and `gen`.
//!
//! Exit codes: 0 pass, 1 residual check failed, 2 input error (unreadable
//! file, invalid flags), 3 pipeline error (extraction or generation stopped).
//! Reports go to standard output, diagnostics to standard error.

pub mod files;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use crate::decomposition::{
    extract_with_diagnostics, synthesize, verify_decomposition, Decomposition, ExtractError,
    Extraction, VerificationReport,
};
use crate::equation::{residual, Instance};
use crate::generators::{generate, GenConfig, GenError, PairingMode, SectionMode};

pub const EXIT_PASS: u8 = 0;
pub const EXIT_RESIDUAL: u8 = 1;
pub const EXIT_INPUT: u8 = 2;
pub const EXIT_PIPELINE: u8 = 3;

/// Default residual tolerance for every command.
pub const DEFAULT_TOL: f64 = 1e-8;

#[derive(Debug, Parser)]
#[command(name = "oeq", version, about = "Solution pairs of <f(x), g(a)> = <x, a>")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check an instance file against the equation.
    Verify {
        path: PathBuf,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
    },
    /// Recover a decomposition certificate from an instance file.
    Extract {
        path: PathBuf,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        /// Where to write the decomposition file.
        #[arg(short = 'o', long = "output")]
        output: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Generate, synthesize, extract, verify and re-synthesize.
    Roundtrip {
        #[command(flatten)]
        gen: GenArgs,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[arg(long)]
        json: bool,
    },
    /// Write a generated instance file.
    Gen {
        #[command(flatten)]
        gen: GenArgs,
        #[arg(short = 'o', long = "output")]
        output: PathBuf,
    },
}

#[derive(Debug, Args)]
struct GenArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// dim E and dim F.
    #[arg(long, num_args = 2, value_names = ["N", "M"], required = true)]
    dims: Vec<usize>,
    /// Defaults to M, or rank-m + N when only --rank-m is given.
    #[arg(long)]
    rank_l: Option<usize>,
    /// Defaults to rank-l - N.
    #[arg(long)]
    rank_m: Option<usize>,
    #[arg(long, default_value = "polynomial")]
    sections: SectionMode,
    #[arg(long, default_value = "standard")]
    pairing: PairingMode,
    /// Samples per map; defaults to N + 4.
    #[arg(long)]
    grid: Option<usize>,
}

impl GenArgs {
    fn config(&self) -> GenConfig {
        let (n, m) = (self.dims[0], self.dims[1]);
        let (rank_l, rank_m) = match (self.rank_l, self.rank_m) {
            (Some(l), Some(k)) => (l, k),
            (Some(l), None) => (l, l.saturating_sub(n)),
            (None, Some(k)) => (k + n, k),
            (None, None) => (m, m.saturating_sub(n)),
        };
        GenConfig {
            n,
            m,
            rank_l,
            rank_m,
            pairing_mode: self.pairing,
            section_mode: self.sections,
            seed: self.seed,
            grid_size: self.grid.unwrap_or(n + 4),
        }
    }
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return if err.use_stderr() { EXIT_INPUT } else { EXIT_PASS };
        }
    };
    match cli.command {
        Command::Verify { path, tol } => cmd_verify(&path, tol),
        Command::Extract { path, tol, output, json } => cmd_extract(&path, tol, output.as_deref(), json),
        Command::Roundtrip { gen, tol, json } => cmd_roundtrip(&gen.config(), tol, json),
        Command::Gen { gen, output } => cmd_gen(&gen.config(), &output),
    }
}

fn load(path: &std::path::Path) -> Result<Instance, u8> {
    files::load_instance(path).map_err(|err| {
        eprintln!("oeq: {}: {err}", path.display());
        EXIT_INPUT
    })
}

fn print_json(value: &Value) {
    println!("{}", serde_json::to_string_pretty(value).expect("report serializes"));
}

fn cmd_verify(path: &std::path::Path, tol: f64) -> u8 {
    let inst = match load(path) {
        Ok(inst) => inst,
        Err(code) => return code,
    };
    let report = match residual(&inst) {
        Ok(r) => r,
        Err(err) => {
            eprintln!("oeq: {}: {err}", path.display());
            return EXIT_INPUT;
        }
    };
    let pass = report.max_abs_residual <= tol;
    print_json(&json!({
        "max_abs_residual": report.max_abs_residual,
        "argmax_pair": [report.argmax_pair.0, report.argmax_pair.1],
        "pair_count": report.pair_count,
        "tolerance": tol,
        "pass": pass,
    }));
    if pass {
        EXIT_PASS
    } else {
        EXIT_RESIDUAL
    }
}

fn clauses_json(report: &VerificationReport) -> Value {
    Value::Array(
        report
            .clauses
            .iter()
            .map(|c| {
                json!({
                    "name": c.name,
                    "value": c.value,
                    "threshold": c.threshold,
                    "pass": c.passed,
                })
            })
            .collect(),
    )
}

fn extraction_error(err: &ExtractError, json: bool) -> u8 {
    eprintln!("oeq: extraction failed at stage {}: {err}", err.stage());
    if json {
        print_json(&json!({
            "error": { "stage": err.stage().as_str(), "message": err.to_string() }
        }));
    }
    EXIT_PIPELINE
}

fn summary_json(extraction: &Extraction, report: &VerificationReport) -> Value {
    let dec = &extraction.decomposition;
    let a: Vec<Vec<f64>> = dec
        .core()
        .matrix()
        .row_iter()
        .map(|r| r.iter().copied().collect())
        .collect();
    json!({
        "rank_L": dec.image_span().rank(),
        "rank_M": dec.collapsed().rank(),
        "A": a,
        "condition_A": dec.core().condition_number(),
        "identity_defect": extraction.diagnostics.identity_defect,
        "norm_bound_slack": extraction.diagnostics.norm_bound_slack,
        "clauses": clauses_json(report),
        "pass": report.passed(),
    })
}

fn print_summary_text(extraction: &Extraction, report: &VerificationReport) {
    let dec = &extraction.decomposition;
    println!("rank L = {}, rank M = {}", dec.image_span().rank(), dec.collapsed().rank());
    println!("A =");
    for row in dec.core().matrix().row_iter() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:>12.6}")).collect();
        println!("  [{}]", cells.join(" "));
    }
    println!("cond(A) = {:.6e}", dec.core().condition_number());
    println!("|A* Q0^ - I| = {:.3e}", extraction.diagnostics.identity_defect);
    print_clauses(report);
}

fn print_clauses(report: &VerificationReport) {
    for c in &report.clauses {
        println!(
            "{} {:<20} {:.3e} (threshold {:.3e})",
            if c.passed { "pass" } else { "FAIL" },
            c.name,
            c.value,
            c.threshold
        );
    }
}

fn cmd_extract(path: &std::path::Path, tol: f64, output: Option<&std::path::Path>, json: bool) -> u8 {
    let inst = match load(path) {
        Ok(inst) => inst,
        Err(code) => return code,
    };
    let extraction = match extract_with_diagnostics(&inst, tol) {
        Ok(e) => e,
        Err(err) => return extraction_error(&err, json),
    };
    let report = verify_decomposition(&extraction.decomposition, &inst);
    if let Some(out) = output {
        if let Err(err) = files::save_decomposition(out, &extraction.decomposition) {
            eprintln!("oeq: {err}");
            return EXIT_INPUT;
        }
    }
    if json {
        print_json(&summary_json(&extraction, &report));
    } else {
        print_summary_text(&extraction, &report);
    }
    if report.passed() {
        EXIT_PASS
    } else {
        EXIT_RESIDUAL
    }
}

fn generation_error(err: GenError) -> u8 {
    eprintln!("oeq: {err}");
    match err {
        GenError::RankEquation { .. } | GenError::Invalid(_) => EXIT_INPUT,
        _ => EXIT_PIPELINE,
    }
}

struct Check {
    value: f64,
    threshold: f64,
}

impl Check {
    fn passed(&self) -> bool {
        self.value <= self.threshold
    }
}

fn max_sample_gap(a: &Instance, b: &Instance) -> f64 {
    let f = a.f().samples().iter().zip(b.f().samples());
    let g = a.g().samples().iter().zip(b.g().samples());
    f.chain(g)
        .map(|((x1, y1), (x2, y2))| (x1 - x2).norm().max((y1 - y2).norm()))
        .fold(0.0, f64::max)
}

fn resynthesize(dec: &Decomposition, inst: &Instance) -> Option<f64> {
    synthesize(dec, &inst.f().inputs(), &inst.g().inputs())
        .ok()
        .map(|again| max_sample_gap(&again, inst))
}

fn cmd_roundtrip(cfg: &GenConfig, tol: f64, json: bool) -> u8 {
    let generated = match generate(cfg) {
        Ok(g) => g,
        Err(err) => return generation_error(err),
    };
    let inst = match generated.instance() {
        Ok(inst) => inst,
        Err(err) => return generation_error(err),
    };
    let scale = inst.scale();
    let synth_residual = residual(&inst).map_or(f64::INFINITY, |r| r.max_abs_residual);
    let extraction = match extract_with_diagnostics(&inst, tol) {
        Ok(e) => e,
        Err(err) => return extraction_error(&err, json),
    };
    let report = verify_decomposition(&extraction.decomposition, &inst);
    let resynth = resynthesize(&extraction.decomposition, &inst).unwrap_or(f64::INFINITY);

    let checks = [
        Check { value: synth_residual, threshold: tol * scale },
        Check { value: extraction.diagnostics.identity_defect, threshold: tol },
        // |x| <= |Q0^| |A x| + tol
        Check { value: -extraction.diagnostics.norm_bound_slack, threshold: tol },
        Check { value: resynth, threshold: tol * scale },
    ];
    let pass = checks.iter().all(Check::passed) && report.passed();

    if json {
        print_json(&json!({
            "config": {
                "seed": cfg.seed,
                "n": cfg.n,
                "m": cfg.m,
                "rank_L": cfg.rank_l,
                "rank_M": cfg.rank_m,
                "sections": cfg.section_mode.as_str(),
                "pairing": cfg.pairing_mode.as_str(),
                "grid": cfg.grid_size,
            },
            "extracted": {
                "rank_L": extraction.decomposition.image_span().rank(),
                "rank_M": extraction.decomposition.collapsed().rank(),
            },
            "synthesize_residual": synth_residual,
            "identity_defect": extraction.diagnostics.identity_defect,
            "norm_bound_slack": extraction.diagnostics.norm_bound_slack,
            "clauses": clauses_json(&report),
            "resynthesis_gap": resynth,
            "pass": pass,
        }));
    } else {
        println!(
            "seed {} dims {} {} rank L {} rank M {} sections {} pairing {}",
            cfg.seed, cfg.n, cfg.m, cfg.rank_l, cfg.rank_m, cfg.section_mode, cfg.pairing_mode
        );
        println!(
            "extracted rank L {} rank M {}",
            extraction.decomposition.image_span().rank(),
            extraction.decomposition.collapsed().rank()
        );
        println!("synthesize residual   {:.3e}", synth_residual);
        println!("identity defect       {:.3e}", extraction.diagnostics.identity_defect);
        println!("norm bound slack      {:.3e}", extraction.diagnostics.norm_bound_slack);
        print_clauses(&report);
        println!("re-synthesis gap      {:.3e}", resynth);
        println!("{}", if pass { "PASS" } else { "FAIL" });
    }
    if pass {
        EXIT_PASS
    } else {
        EXIT_RESIDUAL
    }
}

fn cmd_gen(cfg: &GenConfig, output: &std::path::Path) -> u8 {
    let inst = match generate(cfg).and_then(|g| g.instance()) {
        Ok(inst) => inst,
        Err(err) => return generation_error(err),
    };
    if let Err(err) = files::save_instance(output, &inst) {
        eprintln!("oeq: {err}");
        return EXIT_INPUT;
    }
    println!(
        "wrote {} (n = {}, m = {}, {} f samples, {} g samples)",
        output.display(),
        inst.n(),
        inst.m(),
        inst.f().len(),
        inst.g().len()
    );
    EXIT_PASS
}
