//! One line per acceptance criterion; exits nonzero if any fails.

use std::collections::HashSet;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use extparabola::activeset::{active_set_run, pullback_objective, pullback_with_c, FirstIndex, RuleSpec};
use extparabola::exactla::{rat, Rational};
use extparabola::extension::{build, verify_construction, verify_levels, ConstructionParams};
use extparabola::lowerbound::{
    chord_inner_product, chord_scan, iteration_experiment, monotone_path_check, projected_vertex, ExperimentTable,
    DEFAULT_SCAN_CAP,
};
use extparabola::polytope::{vertices_from_cdd, HPolytope};
use serde_json::Value;

type Outcome = Result<(), String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Outcome {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn cli(args: &[&str]) -> (i32, String, Duration) {
    let start = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_extparabola"))
        .args(args)
        .output()
        .expect("cli runs");
    let elapsed = start.elapsed();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        elapsed,
    )
}

fn criterion_1(dir: &Path) -> Outcome {
    let out = dir.to_str().unwrap();
    let (code, _, build_time) = cli(&["build", "--d", "4", "--out", out]);
    ensure(code == 0, || format!("build exited {code}"))?;
    let ine = std::fs::read_to_string(dir.join("q_n16_d4.ine")).map_err(|e| e.to_string())?;
    let q = HPolytope::from_cdd(&ine).map_err(|e| e.to_string())?;
    ensure(q.num_facets() == 8, || format!("{} facets", q.num_facets()))?;
    let ext = std::fs::read_to_string(dir.join("q_n16_d4.ext")).map_err(|e| e.to_string())?;
    let vertices = vertices_from_cdd(&ext).map_err(|e| e.to_string())?;
    let distinct: HashSet<_> = vertices.iter().collect();
    ensure(distinct.len() == 16, || format!("{} vertices", distinct.len()))?;

    let (code, stdout, run_time) = cli(&["run", "--d", "4", "--rule", "first", "--out", out]);
    ensure(code == 0, || format!("run exited {code}"))?;
    ensure(stdout.contains("visited 16 vertices in 15 moves"), || stdout.clone())?;
    let trace: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("trace.json")).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
    ensure(trace["edge_moves"] == 15, || "edge_moves".into())?;
    let steps = trace["steps"].as_array().ok_or("no steps")?;
    ensure(steps.len() == 16, || format!("{} steps", steps.len()))?;
    let ext = build(ConstructionParams::new(16, 4).unwrap()).unwrap();
    let mut seen = HashSet::new();
    for (t, step) in steps.iter().enumerate() {
        let vertex: Vec<Rational> = step["vertex"]
            .as_array()
            .unwrap()
            .iter()
            .map(|s| s.as_str().unwrap().parse().unwrap())
            .collect();
        ensure(seen.insert(vertex.clone()), || format!("vertex {t} repeats"))?;
        let projected = ext.project(&vertex).unwrap();
        ensure(projected == projected_vertex(16, t as u64).unwrap(), || format!("projection at {t}"))?;
        let f: Rational = step["f"].as_str().unwrap().parse().unwrap();
        ensure(f == rat(t as i64, 150), || format!("f = {f} at t = {t}"))?;
    }
    ensure(run_time < Duration::from_secs(1) && build_time < Duration::from_secs(1), || {
        format!("build {build_time:?}, run {run_time:?}")
    })
}

fn experiments() -> Result<Vec<ExperimentTable>, String> {
    let rules = [RuleSpec::First, RuleSpec::Last, RuleSpec::Random];
    let seeds: Vec<u64> = (0..10).collect();
    [4, 6, 8, 10, 12]
        .into_iter()
        .map(|d| iteration_experiment(4 * d, d, &rules, &seeds).map_err(|e| e.to_string()))
        .collect()
}

fn criterion_2(tables: &[ExperimentTable]) -> Outcome {
    for table in tables {
        for row in &table.rows {
            ensure(row.vertices_visited as u64 == 1 << table.d, || {
                format!("d = {}: {} visited by {}", table.d, row.vertices_visited, row.rule)
            })?;
            ensure(row.edge_moves as u64 == (1 << table.d) - 1, || format!("d = {}: moves", table.d))?;
        }
    }
    let d12 = tables.iter().find(|t| t.d == 12).ok_or("d = 12 missing")?;
    let slowest = d12.rows.iter().map(|r| r.wall_time_ms).fold(0.0, f64::max);
    ensure(slowest < 60_000.0, || format!("d = 12 took {slowest} ms"))
}

fn criterion_3(tables: &[ExperimentTable]) -> Outcome {
    for table in tables {
        let random = table.rows.iter().filter(|r| r.rule == "random").count();
        let rules: HashSet<&str> = table.rows.iter().map(|r| r.rule.as_str()).collect();
        ensure(random >= 10 && rules.contains("first") && rules.contains("last"), || {
            format!("d = {}: missing runs", table.d)
        })?;
        ensure(table.identical_sequences, || format!("d = {}: sequences differ", table.d))?;
    }
    Ok(())
}

fn criterion_4() -> Outcome {
    for m in [4u64, 16, 256, 4096] {
        let report = chord_scan(m, DEFAULT_SCAN_CAP).map_err(|e| e.to_string())?;
        ensure(report.pairs_checked == m * (m - 1), || format!("M = {m}: {} pairs", report.pairs_checked))?;
        ensure(report.violations.is_empty(), || format!("M = {m}: {:?}", report.violations.first()))?;
        ensure(report.mismatches.is_empty(), || format!("M = {m}: closed form mismatch"))?;
    }
    for m in [4u64, 16, 256] {
        for t in 0..m {
            for end in 0..m {
                if end != t {
                    chord_inner_product(m, t, end as i64 - t as i64).map_err(|e| e.to_string())?;
                }
            }
        }
    }
    Ok(())
}

const BUILDS: [(u64, u64); 5] = [(16, 4), (32, 4), (24, 6), (8, 2), (32, 8)];

fn criterion_5() -> Outcome {
    let names = ["facet_count", "vertex_count", "parabola_identity", "orthogonality", "phi_range", "bijection"];
    for (n, d) in BUILDS {
        let ext = build(ConstructionParams::new(n, d).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        let report = verify_construction(&ext).map_err(|e| e.to_string())?;
        let checked: Vec<&str> = report.checks.iter().map(|c| c.name).collect();
        ensure(checked == names, || format!("checks {checked:?}"))?;
        ensure(report.passed(), || format!("(n, d) = ({n}, {d}): {:?}", report.failed_checks()))?;
        ensure(report.facets as u64 == n / 2, || format!("({n}, {d}): facets"))?;
        ensure(report.vertices as u64 == (n / d).pow(d as u32 / 2), || format!("({n}, {d}): vertices"))?;
    }
    Ok(())
}

fn criterion_6() -> Outcome {
    for (n, d) in BUILDS {
        let ext = build(ConstructionParams::new(n, d).unwrap()).unwrap();
        let mut base_count = ext.base.len();
        for level in verify_levels(&ext).map_err(|e| e.to_string())? {
            let p = &level.product;
            ensure(p.failures.is_empty(), || format!("({n}, {d}) Q{}: {:?}", level.stage, p.failures.first()))?;
            let expected = base_count * (n / d) as usize;
            ensure(p.generated == expected && p.expected_vertices == expected, || {
                format!("({n}, {d}) Q{}: {} points", level.stage, p.generated)
            })?;
            ensure(level.matches_t_map, || format!("({n}, {d}) Q{}: t-map", level.stage))?;
            base_count = expected;
        }
    }
    Ok(())
}

fn criterion_7() -> Outcome {
    for (n, d) in BUILDS {
        let ext = build(ConstructionParams::new(n, d).unwrap()).unwrap();
        for level in verify_levels(&ext).map_err(|e| e.to_string())? {
            ensure(level.normally_equivalent, || format!("({n}, {d}) Q{}", level.stage))?;
        }
    }
    Ok(())
}

fn criterion_8() -> Outcome {
    for d in [4u64, 6, 8] {
        let ext = build(ConstructionParams::new(4 * d, d).unwrap()).unwrap();
        let cert = monotone_path_check(&ext, &pullback_objective(&ext).objective).map_err(|e| e.to_string())?;
        let m = ext.m();
        ensure(cert.records.len() as u64 == m, || format!("d = {d}: records"))?;
        for r in &cert.records {
            let expected = if r.t + 1 < m { (1, Some(r.t + 1)) } else { (0, None) };
            ensure((r.improving_edge_count, r.successor_t) == expected, || format!("d = {d}: t = {}", r.t))?;
        }
        ensure(cert.monotone_path_length() == m - 1, || format!("d = {d}: length"))?;
    }
    Ok(())
}

fn criterion_9() -> Outcome {
    for fault in ["objective-c", "phi-prime", "vertex"] {
        let (code, _, _) = cli(&["verify", "--d", "4", "--inject-fault", fault]);
        ensure(code == 1, || format!("{fault}: exit {code}"))?;
    }
    let (code, _, _) = cli(&["verify", "--d", "4"]);
    ensure(code == 0, || format!("clean verify exited {code}"))?;
    let ext = build(ConstructionParams::new(16, 4).unwrap()).unwrap();
    let flat = pullback_with_c(&ext, rat(1, 1)).objective;
    let x0 = ext.vertex_for_t(0).unwrap();
    let trace = active_set_run(ext.q(), &flat, &x0, &mut FirstIndex, 100).map_err(|e| e.to_string())?;
    ensure(trace.vertices_visited != 16, || "corrupted objective still walks the path".into())
}

fn main() {
    let dir = tempfile::tempdir().expect("temp dir");
    let tables = experiments();
    let with_tables = |check: fn(&[ExperimentTable]) -> Outcome| match &tables {
        Ok(t) => check(t),
        Err(e) => Err(e.clone()),
    };
    let results: Vec<(u32, &str, Outcome)> = vec![
        (1, "d = 4 build and run", criterion_1(dir.path())),
        (2, "2^d vertices for d = 4..12", with_tables(criterion_2)),
        (3, "pivot-rule independence", with_tables(criterion_3)),
        (4, "chord scan", criterion_4()),
        (5, "construction checks", criterion_5()),
        (6, "deformed-product duality", criterion_6()),
        (7, "normal equivalence", criterion_7()),
        (8, "monotone-path certificate", criterion_8()),
        (9, "negative controls", criterion_9()),
    ];
    let mut failed = 0;
    for (n, name, outcome) in &results {
        match outcome {
            Ok(()) => println!("criterion {n}: PASS ({name})"),
            Err(why) => {
                failed += 1;
                println!("criterion {n}: FAIL ({name}): {why}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
