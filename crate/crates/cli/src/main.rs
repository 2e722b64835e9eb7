use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use extparabola::activeset::{
    active_set_run, pullback_objective, pullback_with_c, RuleSpec, Termination, DEFAULT_CSV_PRECISION,
};
use extparabola::exactla::rat;
use extparabola::extension::{
    build, verify_levels, verify_vertices, ConstructionParams, ConstructionReport, ExtendedParabola, LevelReport,
};
use extparabola::lowerbound::{chord_scan, iteration_experiment, monotone_path_check, ExperimentTable, DEFAULT_SCAN_CAP};
use extparabola::polytope::vertices_to_cdd;
use extparabola::Error;

#[derive(Parser)]
#[command(name = "extparabola", version, about = "Extended formulations of a parabola and active-set lower bounds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Copy)]
struct Instance {
    /// Dimension of the extended formulation (even).
    #[arg(long)]
    d: u64,
    /// Twice the facet count; defaults to 4d.
    #[arg(long)]
    n: Option<u64>,
}

impl Instance {
    fn params(&self) -> Result<ConstructionParams, Error> {
        ConstructionParams::new(self.n.unwrap_or(4 * self.d), self.d)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Ine,
    Ext,
    Json,
    All,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Fault {
    ObjectiveC,
    PhiPrime,
    Vertex,
}

#[derive(Subcommand)]
enum Command {
    /// Write the H-representation, the vertices and the JSON sidecar.
    Build {
        #[command(flatten)]
        instance: Instance,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::All)]
        format: Format,
    },
    /// Run every construction check; exit 1 on any failure.
    Verify {
        #[command(flatten)]
        instance: Instance,
        /// Write the JSON report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, hide = true)]
        inject_fault: Option<Fault>,
    },
    /// Run the active-set method from t = 0.
    Run {
        #[command(flatten)]
        instance: Instance,
        #[arg(long, default_value = "first")]
        rule: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        max_iter: Option<usize>,
        /// Directory for trace.json and trace.csv.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Significant digits in the CSV.
        #[arg(long, default_value_t = DEFAULT_CSV_PRECISION)]
        precision: usize,
    },
    /// Check every chord of the projected path.
    Scan {
        #[arg(long = "M")]
        m: u64,
        /// Lift the default cap on M.
        #[arg(long)]
        cap_override: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Iteration counts across dimensions, rules and seeds.
    Report {
        #[arg(long, value_delimiter = ',', required = true)]
        d: Vec<u64>,
        #[arg(long, value_delimiter = ',', default_value = "first,last,random")]
        rules: Vec<String>,
        /// `a..b` (inclusive) or a comma list.
        #[arg(long, default_value = "1..5")]
        seeds: String,
        /// Directory for experiment_d<d>.csv and experiment.json.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum Failure {
    Usage(String),
    Check(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::BadParameters(_) | Error::UnknownRule(_) | Error::Parse(_) | Error::OutOfRange(_) => {
                Failure::Usage(e.to_string())
            }
            Error::CapExceeded { .. } => Failure::Usage(format!("{e}; pass --cap-override to raise it")),
            other => Failure::Check(other.to_string()),
        }
    }
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> Failure + '_ {
    move |e| Failure::Check(format!("{}: {e}", path.display()))
}

fn write(path: &Path, contents: &str) -> Result<(), Failure> {
    if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io(dir))?;
    }
    fs::write(path, contents).map_err(io(path))
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("report serializes") + "\n"
}

fn cmd_build(instance: Instance, out: &Path, format: Format) -> Result<(), Failure> {
    let params = instance.params()?;
    let ext = build(params)?;
    let stem = format!("q_n{}_d{}", params.n, params.d);
    let wants = |f: Format| format == f || format == Format::All;
    if wants(Format::Ine) {
        let path = out.join(format!("{stem}.ine"));
        write(&path, &ext.q().to_cdd())?;
        println!("wrote {}", path.display());
    }
    if wants(Format::Ext) {
        let path = out.join(format!("{stem}.ext"));
        write(&path, &vertices_to_cdd(&ext.vertices()?))?;
        println!("wrote {}", path.display());
    }
    if wants(Format::Json) {
        let path = out.join(format!("{stem}.json"));
        write(&path, &to_json(&ext.to_json()))?;
        println!("wrote {}", path.display());
    }
    println!("Q_{}: {} facets, {} vertices", params.d, ext.q().num_facets(), ext.m());
    Ok(())
}

#[derive(Serialize)]
struct PathSummary {
    passed: bool,
    detail: String,
}

#[derive(Serialize)]
struct VerifyReport {
    n: u64,
    d: u64,
    #[serde(rename = "M")]
    m: u64,
    passed: bool,
    construction: ConstructionReport,
    levels: Vec<LevelReport>,
    monotone_path: PathSummary,
}

fn verify_report(ext: &mut ExtendedParabola, fault: Option<Fault>) -> Result<VerifyReport, Failure> {
    if fault == Some(Fault::PhiPrime) {
        let last = ext.phi_prime.coeffs.len() - 1;
        ext.phi_prime.coeffs[last] += rat(1, 1000);
    }
    let mut vertices = ext.vertices()?;
    if fault == Some(Fault::Vertex) {
        vertices[1][0] += rat(1, 1000);
    }
    let construction = verify_vertices(ext, &vertices);
    let levels = verify_levels(ext)?;
    let objective = match fault {
        Some(Fault::ObjectiveC) => pullback_with_c(ext, rat(1, 1)).objective,
        _ => pullback_objective(ext).objective,
    };
    let monotone_path = match monotone_path_check(ext, &objective) {
        Ok(cert) => PathSummary {
            passed: true,
            detail: format!("unique improving edge t -> t+1 at all {} vertices", cert.m),
        },
        Err(e @ Error::CertificateFailure { .. }) => PathSummary {
            passed: false,
            detail: e.to_string(),
        },
        Err(e) => return Err(e.into()),
    };
    let passed = construction.passed() && levels.iter().all(LevelReport::passed) && monotone_path.passed;
    Ok(VerifyReport {
        n: ext.params.n,
        d: ext.params.d,
        m: ext.m(),
        passed,
        construction,
        levels,
        monotone_path,
    })
}

fn cmd_verify(instance: Instance, out: Option<&Path>, fault: Option<Fault>) -> Result<(), Failure> {
    let mut ext = build(instance.params()?)?;
    let report = verify_report(&mut ext, fault)?;
    let json = to_json(&report);
    match out {
        Some(path) => {
            write(path, &json)?;
            println!("wrote {}", path.display());
        }
        None => print!("{json}"),
    }
    if report.passed {
        eprintln!("verify: all checks passed");
        Ok(())
    } else {
        let mut failed: Vec<String> = report.construction.failed_checks().iter().map(|s| s.to_string()).collect();
        failed.extend(report.levels.iter().filter(|l| !l.passed()).map(|l| format!("level Q{}", l.stage)));
        if !report.monotone_path.passed {
            failed.push(format!("monotone_path ({})", report.monotone_path.detail));
        }
        Err(Failure::Check(format!("verify failed: {}", failed.join(", "))))
    }
}

fn cmd_run(
    instance: Instance,
    rule: &str,
    seed: u64,
    max_iter: Option<usize>,
    out: Option<&Path>,
    precision: usize,
) -> Result<(), Failure> {
    let spec = RuleSpec::parse(rule)?;
    let ext = build(instance.params()?)?;
    let pb = pullback_objective(&ext);
    let x0 = ext.vertex_for_t(0)?;
    let mut pivot = spec.instantiate(seed);
    let max_iter = max_iter.unwrap_or(4 * ext.m() as usize);
    let trace = active_set_run(ext.q(), &pb.objective, &x0, pivot.as_mut(), max_iter)?;
    if let Some(dir) = out {
        let json = dir.join("trace.json");
        write(&json, &to_json(&trace.to_json(&ext, &pb.c)))?;
        write(&dir.join("trace.csv"), &trace.to_csv(&ext, precision))?;
        println!("wrote {} and trace.csv", json.display());
    }
    println!("visited {} vertices in {} moves", trace.vertices_visited, trace.edge_moves);
    if trace.terminated == Termination::MaxIterations {
        return Err(Failure::Check(format!("stopped after {max_iter} iterations")));
    }
    Ok(())
}

fn cmd_scan(m: u64, cap_override: bool, out: Option<&Path>) -> Result<(), Failure> {
    let cap = if cap_override { u64::MAX } else { DEFAULT_SCAN_CAP };
    let report = chord_scan(m, cap)?;
    if let Some(path) = out {
        write(path, &to_json(&report))?;
    }
    println!("{} violations / {} pairs", report.violations.len(), report.pairs_checked);
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::Check(format!(
            "{} violations, {} closed-form mismatches",
            report.violations.len(),
            report.mismatches.len()
        )))
    }
}

fn parse_seeds(text: &str) -> Result<Vec<u64>, Failure> {
    let bad = || Failure::Usage(format!("cannot read seeds `{text}`"));
    if let Some((a, b)) = text.split_once("..") {
        let (a, b): (u64, u64) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
        if a > b {
            return Err(bad());
        }
        return Ok((a..=b).collect());
    }
    text.split(',').map(|s| s.trim().parse().map_err(|_| bad())).collect()
}

fn cmd_report(ds: &[u64], rules: &[String], seeds: &str, out: Option<&Path>) -> Result<(), Failure> {
    let rules = rules.iter().map(|r| RuleSpec::parse(r)).collect::<Result<Vec<_>, _>>()?;
    let seeds = parse_seeds(seeds)?;
    let mut tables: Vec<ExperimentTable> = Vec::new();
    println!("n,d,{}", ExperimentTable::csv_header());
    for &d in ds {
        let table = iteration_experiment(4 * d, d, &rules, &seeds)?;
        for line in table.csv_rows() {
            println!("{},{d},{line}", 4 * d);
        }
        if let Some(dir) = out {
            write(&dir.join(format!("experiment_d{d}.csv")), &table.to_csv())?;
        }
        tables.push(table);
    }
    if let Some(dir) = out {
        write(&dir.join("experiment.json"), &to_json(&tables))?;
    }
    let failed: Vec<String> = tables.iter().filter(|t| !t.passed()).map(|t| format!("d = {}", t.d)).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Check(format!("unexpected iteration counts for {}", failed.join(", "))))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Build { instance, out, format } => cmd_build(*instance, out, *format),
        Command::Verify {
            instance,
            out,
            inject_fault,
        } => cmd_verify(*instance, out.as_deref(), *inject_fault),
        Command::Run {
            instance,
            rule,
            seed,
            max_iter,
            out,
            precision,
        } => cmd_run(*instance, rule, *seed, *max_iter, out.as_deref(), *precision),
        Command::Scan { m, cap_override, out } => cmd_scan(*m, *cap_override, out.as_deref()),
        Command::Report { d, rules, seeds, out } => cmd_report(d, rules, seeds, out.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
