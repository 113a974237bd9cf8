//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

mod common;

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use common::ast_gen::{fuzz_input, tree};
use common::*;
use hazlab::clock::FixedClock;
use hazlab::generate::{
    collapse_by_behavior, compare_strategies, distinct_deviation_labels, generate_deviation_route,
    generate_malfunction_route, run_generation, Strategy,
};
use hazlab::hazlang::{parse, parse_bytes, parse_str, print, SourceFile};
use hazlab::model::{validate_project, Origin, Project, Severity, TargetKind};
use hazlab::review::{
    import_decisions, DecisionCommand, NewHazard, ProjectStore, ReviewError, StoreError, Verdict,
    WorksheetFormat,
};
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;
type Criterion = (&'static str, Option<Duration>, fn() -> Check);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if $cond {
        } else {
            return Err(format!($($msg)+));
        }
    };
}

fn clock() -> FixedClock {
    FixedClock::parse("2024-05-01T10:00:00Z").unwrap()
}

fn generated(name: &str) -> Project {
    let mut p = fixture_project(name);
    run_generation(&mut p, Strategy::Deviation, None).unwrap();
    p
}

fn occluded_pedestrian_replay() -> Check {
    let p = fixture_project("occluded_pedestrian.hzl");
    let segs: Vec<_> = p.scenarios[0]
        .segments
        .iter()
        .map(|s| s.id.as_str())
        .collect();
    ensure!(segs == ["approach", "pass"], "segments {segs:?}");
    let rows = generate_deviation_route(&p).map_err(|e| e.to_string())?;
    let mut p = p;
    run_generation(&mut p, Strategy::Deviation, None).map_err(|e| e.to_string())?;
    let labels: BTreeSet<String> = distinct_deviation_labels(&p)
        .into_values()
        .flatten()
        .collect();
    let expected: BTreeSet<String> = [
        "Absence of required speed adjustment",
        "Absence of required lateral position adjustment",
        "Improper acceleration",
        "Improper deceleration",
        "Improper course angle changes",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    ensure!(labels == expected, "labels {labels:?}");
    Ok(format!(
        "{} PHS, {} distinct deviations",
        rows.len(),
        labels.len()
    ))
}

fn hazard_replay() -> Check {
    let mut p = generated("occluded_pedestrian.hzl");
    let doc = fixture_text("occluded_pedestrian.decisions.json");
    let out = import_decisions(&mut p, &doc, WorksheetFormat::Json, "acceptance", &clock())
        .map_err(|e| e.to_string())?;
    ensure!(out.warnings.is_empty(), "warnings {:?}", out.warnings);
    ensure!(p.hazards.len() == 5, "{} hazards", p.hazards.len());
    let kind = |k: TargetKind| p.hazards.iter().filter(|h| h.target_kind == k).count();
    let (others, passengers) = (
        kind(TargetKind::OtherTrafficParticipant),
        kind(TargetKind::Passengers),
    );
    ensure!(
        (others, passengers) == (3, 2),
        "split {others}/{passengers}"
    );
    let course_kinds: std::collections::HashSet<TargetKind> = p
        .hazards
        .iter()
        .filter(|h| {
            p.phs(h.phs.as_str())
                .is_some_and(|r| r.deviation == "improper_course_change")
        })
        .map(|h| h.target_kind)
        .collect();
    ensure!(
        course_kinds.len() == 2,
        "improper course change hazards only in {course_kinds:?}"
    );
    Ok(format!(
        "{} hazards, {others} other_traffic_participant / {passengers} passengers",
        p.hazards.len()
    ))
}

fn oncoming_collapse() -> Check {
    let p = fixture_project("oncoming_traffic.hzl");
    let c = &p.catalogs[0];
    ensure!(c.len() == 9, "{} malfunctions", c.len());
    let groups =
        collapse_by_behavior(&generate_malfunction_route(&p, c).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
    let r = compare_strategies(&p, c).map_err(|e| e.to_string())?;
    ensure!(r.count_pm == 9, "count_PM {}", r.count_pm);
    ensure!(
        r.distinct_behaviors_pm == 1 && groups.len() == 1,
        "distinct_behaviors_PM {}",
        r.distinct_behaviors_pm
    );
    ensure!(r.count_pd == 3, "count_PD {}", r.count_pd);
    ensure!(
        (r.reduction_ratio - 3.0).abs() < 1e-12,
        "reduction_ratio {}",
        r.reduction_ratio
    );
    ensure!(
        r.coverage_gaps.is_empty(),
        "coverage_gaps {:?}",
        r.coverage_gaps
    );
    Ok(format!(
        "count_PM {}, distinct_behaviors_PM {}, count_PD {}, reduction_ratio {:.1}, coverage_gaps []",
        r.count_pm, r.distinct_behaviors_pm, r.count_pd, r.reduction_ratio
    ))
}

fn scale_formula() -> Check {
    let p = project_from(&[("scale.hzl", &scale_model(37, 108))]);
    ensure!(p.segment_count() == 108, "segments {}", p.segment_count());
    let r = compare_strategies(&p, &p.catalogs[0]).map_err(|e| e.to_string())?;
    ensure!(
        r.unmapped_malfunctions.is_empty(),
        "unmapped {:?}",
        r.unmapped_malfunctions
    );
    ensure!(r.count_pm == 3996, "count_PM {}", r.count_pm);
    ensure!(r.count_pd <= 648, "count_PD {}", r.count_pd);
    ensure!(
        r.count_pd == 648,
        "count_PD {} with all requirements present",
        r.count_pd
    );
    ensure!(
        r.reduction_ratio >= 6.0,
        "reduction_ratio {}",
        r.reduction_ratio
    );
    Ok(format!(
        "count_PM {}, count_PD {}, reduction_ratio {:.2}",
        r.count_pm, r.count_pd, r.reduction_ratio
    ))
}

fn oracle_equivalence() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for case in 0..500 {
        let m = RandomModel::generate_bounded(&mut rng, 10, 10, false);
        let p = project_from(&[("random.hzl", &m.to_hzl())]);
        ensure!(
            p.taxonomy.classes.len() == 6,
            "case {case}: |D| = {}",
            p.taxonomy.classes.len()
        );
        let p_d = generate_deviation_route(&p).map_err(|e| format!("case {case}: {e}"))?;
        let pd_keys: BTreeSet<_> = p_d
            .iter()
            .map(|r| {
                (
                    r.scenario.to_string(),
                    r.segment.to_string(),
                    r.deviation.to_string(),
                )
            })
            .collect();
        let oracle_pd: BTreeSet<_> = m
            .oracle_deviation_route()
            .into_iter()
            .map(|(a, b, c, _)| (a, b, c))
            .collect();
        ensure!(
            pd_keys == oracle_pd,
            "case {case}: P_D differs from brute force"
        );
        let Some(catalog) = p.catalogs.first() else {
            continue;
        };
        let r = compare_strategies(&p, catalog).map_err(|e| format!("case {case}: {e}"))?;
        let behaviors = m.oracle_behaviors();
        ensure!(
            r.distinct_behaviors_pm == behaviors.len(),
            "case {case}: {} groups, brute force {}",
            r.distinct_behaviors_pm,
            behaviors.len()
        );
        for key in &behaviors {
            let applicable =
                oracle_pd.contains(key) || m.classes.iter().any(|c| c.id == key.2 && !c.absence);
            let gap = r.coverage_gaps.iter().any(|g| {
                (
                    g.scenario.as_str(),
                    g.segment.as_str(),
                    g.deviation.as_str(),
                ) == (key.0.as_str(), key.1.as_str(), key.2.as_str())
            });
            ensure!(
                !applicable || pd_keys.contains(key),
                "case {case}: {key:?} applicable but missing from P_D"
            );
            ensure!(applicable != gap, "case {case}: {key:?} gap flag wrong");
        }
    }
    Ok("500 models, all groups match brute force".into())
}

fn parser_properties() -> Check {
    let rng = || TestRng::deterministic_rng(RngAlgorithm::ChaCha);
    let mut runner = TestRunner::new_with_rng(
        Config {
            cases: 500,
            failure_persistence: None,
            ..Config::default()
        },
        rng(),
    );
    runner
        .run(&tree(), |t| {
            let text = print(&t);
            let (parsed, diags) = parse_str(&text);
            let parsed = parsed.ok_or_else(|| TestCaseError::fail(format!("{text}\n{diags:?}")))?;
            if parsed.without_spans() != t.without_spans() || print(&parsed) != text {
                return Err(TestCaseError::fail(format!("round trip changed:\n{text}")));
            }
            Ok(())
        })
        .map_err(|e| format!("round trip: {e}"))?;
    let mut runner = TestRunner::new_with_rng(
        Config {
            cases: 10_000,
            failure_persistence: None,
            ..Config::default()
        },
        rng(),
    );
    runner
        .run(&fuzz_input(), |bytes| {
            let (tree, diags) = parse_bytes(&bytes);
            if tree.is_none() && !diags.iter().any(|d| d.is_error()) {
                return Err(TestCaseError::fail("no tree and no error"));
            }
            if diags
                .iter()
                .any(|d| d.span.offset + d.span.len > bytes.len())
            {
                return Err(TestCaseError::fail("span past end of input"));
            }
            if let Ok(text) = std::str::from_utf8(&bytes) {
                let file = SourceFile::new("fuzz", text);
                if let Some(d) = parse(&file).1.into_iter().find(|d| !file.contains(&d.span)) {
                    return Err(TestCaseError::fail(format!("span out of range: {d:?}")));
                }
            }
            Ok(())
        })
        .map_err(|e| format!("fuzz: {e}"))?;
    Ok("500 round trips, 10000 fuzz inputs".into())
}

const EXTRA_CATALOG: &str = r#"
catalog "Vehicle Motion" {
  function "longitudinal control" {
    malfunction "Brake request lost" maps_to absent_deceleration;
    malfunction "Spurious drive torque" maps_to improper_acceleration;
    malfunction "Excessive brake pressure" maps_to improper_deceleration;
  }
  function "lateral control" {
    malfunction "Steering request lost" maps_to absent_course_change;
    malfunction "Steering angle offset" maps_to improper_course_change;
    malfunction "Wheel angle sensor drift" maps_to improper_course_change;
  }
}
"#;

fn persisted_invariants(p: &Project) -> Result<(), String> {
    for h in &p.hazards {
        h.check_triple()
            .map_err(|e| format!("hazard {}: {e}", h.id))?;
    }
    for t in &p.traces {
        let h = p
            .hazard(t.hazard.as_str())
            .ok_or("trace to missing hazard")?;
        let phs = p.phs(h.phs.as_str()).ok_or("hazard on missing PHS")?;
        let m = p
            .malfunction(t.malfunction.as_str())
            .ok_or("trace to missing malfunction")?;
        if m.maps_to.as_ref() != Some(&phs.deviation) {
            return Err(format!(
                "trace {} -> {} violates g",
                t.hazard, t.malfunction
            ));
        }
    }
    match validate_project(p)
        .into_iter()
        .find(|d| d.severity == Severity::Error)
    {
        Some(d) => Err(format!("{}: {}", d.code, d.message)),
        None => Ok(()),
    }
}

fn store_safety() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("safety.hazproj.json");
    let model = project_from(&[
        (
            "occluded_pedestrian.hzl",
            &fixture_text("occluded_pedestrian.hzl"),
        ),
        ("catalog.hzl", EXTRA_CATALOG),
    ]);
    let store = ProjectStore::create(&path, model)
        .map_err(|e| e.to_string())?
        .with_clock(Arc::new(clock()));
    store
        .generate(Strategy::Deviation, None)
        .map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let legs = ["", "  ", "kinetic energy", "pedestrian", "collision"];
    let mut rejected = 0;
    for op in 0..1000 {
        let snap = store.snapshot();
        let row = &snap.phs_set[rng.gen_range(0..snap.phs_set.len())];
        let result = match rng.gen_range(0..10) {
            0..=4 => store
                .record_decision(&DecisionCommand {
                    phs: row.id.clone(),
                    new_status: if rng.gen_bool(0.6) {
                        Verdict::Hazardous
                    } else {
                        Verdict::NotHazardous
                    },
                    rationale: if rng.gen_bool(0.8) {
                        format!("op {op}")
                    } else {
                        String::new()
                    },
                    reviewer: "a".into(),
                    expected_version: row
                        .review
                        .version
                        .saturating_sub(u64::from(rng.gen_bool(0.1))),
                })
                .map(|_| ()),
            5..=7 => store
                .create_hazard(&NewHazard {
                    id: None,
                    phs: row.id.to_string(),
                    source: legs[rng.gen_range(0..legs.len())].into(),
                    target: legs[rng.gen_range(0..legs.len())].into(),
                    initiating_mechanism: legs[rng.gen_range(0..legs.len())].into(),
                    description: String::new(),
                    target_kind: TargetKind::ALL[rng.gen_range(0..4)],
                })
                .map(|_| ()),
            _ => match snap
                .hazards
                .get(rng.gen_range(0..snap.hazards.len().max(1)))
            {
                Some(h) => store.trace(h.id.as_str(), None).map(|_| ()),
                None => Ok(()),
            },
        };
        match result {
            Ok(()) => {}
            Err(StoreError::Review(_)) => rejected += 1,
            Err(e) => return Err(format!("op {op}: {e}")),
        }
        if op % 50 == 49 {
            let on_disk = ProjectStore::open(&path).map_err(|e| format!("op {op}: reload: {e}"))?;
            ensure!(
                *on_disk.snapshot() == *store.snapshot(),
                "op {op}: file differs from committed state"
            );
            persisted_invariants(&on_disk.snapshot()).map_err(|e| format!("op {op}: {e}"))?;
        }
    }
    let snap = store.snapshot();
    ensure!(
        !snap.hazards.is_empty() && !snap.traces.is_empty(),
        "ops never produced hazards and traces"
    );

    let stress = Arc::new(ProjectStore::in_memory(generated(
        "occluded_pedestrian.hzl",
    )));
    let base = stress.version();
    let workers: Vec<_> = (0..8u64)
        .map(|w| {
            let store = stress.clone();
            thread::spawn(move || {
                let mut rng = ChaCha8Rng::seed_from_u64(w);
                let mut wins = [0u64; 8];
                for _ in 0..200 {
                    let i = rng.gen_range(0..8);
                    loop {
                        let snap = store.snapshot();
                        let cmd = DecisionCommand {
                            phs: snap.phs_set[i].id.clone(),
                            new_status: Verdict::NotHazardous,
                            rationale: format!("writer {w}"),
                            reviewer: format!("w{w}"),
                            expected_version: snap.phs_set[i].review.version,
                        };
                        match store.record_decision(&cmd) {
                            Ok(_) => {
                                wins[i] += 1;
                                break;
                            }
                            Err(StoreError::Review(ReviewError::VersionConflict { .. })) => {
                                continue
                            }
                            Err(e) => panic!("{e}"),
                        }
                    }
                }
                wins
            })
        })
        .collect();
    let mut wins = [0u64; 8];
    for w in workers {
        for (a, b) in wins
            .iter_mut()
            .zip(w.join().map_err(|_| "writer panicked")?)
        {
            *a += b;
        }
    }
    let snap = stress.snapshot();
    ensure!(
        snap.store_version - base == 1600,
        "store_version advanced by {}",
        snap.store_version - base
    );
    for (row, n) in snap.phs_set.iter().zip(wins) {
        ensure!(
            row.review.version == n,
            "PHS {} version {} after {n} commits",
            row.id,
            row.review.version
        );
    }
    ensure!(
        snap.phs_set
            .iter()
            .all(|r| r.origin == Origin::DeviationRoute),
        "unexpected rows"
    );
    Ok(format!(
        "1000 ops ({rejected} rejected), {} hazards, {} trace links persisted; 8x200 writes, no lost update",
        store.snapshot().hazards.len(),
        store.snapshot().traces.len()
    ))
}

fn main() {
    let criteria: [Criterion; 7] = [
        (
            "occluded pedestrian replay",
            Some(Duration::from_secs(1)),
            occluded_pedestrian_replay,
        ),
        ("hazard replay", Some(Duration::from_secs(1)), hazard_replay),
        (
            "oncoming traffic collapse",
            Some(Duration::from_secs(1)),
            oncoming_collapse,
        ),
        ("scale formula", Some(Duration::from_secs(1)), scale_formula),
        (
            "oracle equivalence",
            Some(Duration::from_secs(10)),
            oracle_equivalence,
        ),
        (
            "parser properties",
            Some(Duration::from_secs(30)),
            parser_properties,
        ),
        ("store safety", None, store_safety),
    ];
    let mut failed = 0;
    for (name, limit, check) in criteria {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            Err(e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let elapsed = start.elapsed();
        let budget = match limit {
            Some(l) => format!("{:.3} s, limit {} s", elapsed.as_secs_f64(), l.as_secs()),
            None => format!("{:.3} s", elapsed.as_secs_f64()),
        };
        match result {
            Ok(detail) if limit.is_none_or(|l| elapsed < l) => {
                println!("PASS {name}: {detail} ({budget})")
            }
            Ok(detail) => {
                failed += 1;
                println!("FAIL {name}: too slow: {detail} ({budget})");
            }
            Err(why) => {
                failed += 1;
                println!("FAIL {name}: {why} ({budget})");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
