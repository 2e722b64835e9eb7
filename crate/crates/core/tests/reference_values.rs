//! Reference values for small instances.

use extparabola::activeset::{active_set_run, pullback_objective, FirstIndex, RuleSpec, SeededRandom};
use extparabola::exactla::{int, parse_rational, rat, Rational};
use extparabola::extension::{build, verify_construction, ConstructionParams};
use extparabola::lowerbound::{chord_scan, iteration_experiment, DEFAULT_SCAN_CAP};
use extparabola::polygons::{build_family, check_normally_equivalent, h, Family};

fn over_79(ks: &[i64]) -> Vec<Rational> {
    ks.iter().map(|&k| rat(k, 79)).collect()
}

fn decimal(text: &str) -> Rational {
    let (whole, frac) = text.split_once('.').unwrap();
    let digits = parse_rational(&format!("{whole}{frac}")).unwrap();
    digits / Rational::from_integer(10u64.pow(frac.len() as u32).into())
}

#[test]
fn polygon_pair_for_n8_m10() {
    let v = build_family(10, 8, Family::V).unwrap();
    let w = build_family(10, 8, Family::W).unwrap();
    assert_eq!(v.params, over_79(&[0, 19, 20, 39, 40, 59, 60, 79]));
    assert_eq!(w.params, over_79(&[9, 10, 29, 30, 49, 50, 69, 70]));
    assert_eq!(h(&rat(19, 79)), [rat(19, 79), rat(-1140, 6241)]);
    assert!(check_normally_equivalent(&v, &w).unwrap());
}

#[test]
fn objective_levels_for_n16_d4() {
    let ext = build(ConstructionParams::new(16, 4).unwrap()).unwrap();
    assert_eq!(ext.m(), 16);
    let f = pullback_objective(&ext);
    // level lines printed to four significant digits, truncated
    let printed = ["-0.06222", "-0.1155", "-0.16", "-0.1955", "-0.2222", "-0.24"];
    for (t, text) in (1..).zip(printed) {
        let [_, phi_prime] = ext.project(&ext.vertex_for_t(t).unwrap()).unwrap();
        let shown = decimal(text);
        let gap = &phi_prime - &shown;
        assert!(gap <= int(0) && gap > rat(-1, 10_000), "t = {t}: {phi_prime} vs {text}");
    }
    let top = ext.vertex_for_t(15).unwrap();
    assert_eq!(ext.project(&top).unwrap(), [int(1), int(0)]);
    assert_eq!(f.objective.eval(&top).unwrap(), rat(1, 10));
}

#[test]
fn two_d_facets_and_two_to_the_d_iterations() {
    let ext = build(ConstructionParams::new(16, 4).unwrap()).unwrap();
    let report = verify_construction(&ext).unwrap();
    assert!(report.passed());
    assert_eq!((report.facets, report.vertices), (8, 16));
    let f = pullback_objective(&ext).objective;
    let x0 = ext.vertex_for_t(0).unwrap();
    let first = active_set_run(ext.q(), &f, &x0, &mut FirstIndex, 100).unwrap();
    assert_eq!(first.vertices_visited, 16);
    for seed in 0..10 {
        let trace = active_set_run(ext.q(), &f, &x0, &mut SeededRandom::new(seed), 100).unwrap();
        assert_eq!(trace.steps, first.steps);
    }
    let table = iteration_experiment(16, 4, &[RuleSpec::First], &[]).unwrap();
    assert_eq!(table.rows[0].vertices_visited, 16);
}

#[test]
fn no_improving_chords_for_m16() {
    let report = chord_scan(16, DEFAULT_SCAN_CAP).unwrap();
    assert!(report.passed());
    assert_eq!(report.pairs_checked, 240);
}
