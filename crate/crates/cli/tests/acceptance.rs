//! One PASS/FAIL line per acceptance criterion. Exits nonzero if any fails.

use std::collections::BTreeSet;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use clockcut::attack::{run_attack, AttackConfig, Outcome, StateOutcome};
use clockcut::corebits::{Bits, FeedbackPolynomial, LfsrState};
use clockcut::editmatrix::EditMatrix;
use clockcut::generators::{alternate_bits, AsgInstance};
use clockcut::harness::{parse_grid, plant_sg, plot_data, run_bench, BenchConfig, ReportFile};
use clockcut::oracle::{brute_force_distance, min_distance};
use clockcut::searchgraph::InducedGraph;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Wall-clock bound for the two worked examples.
const FAST: Duration = Duration::from_secs(1);
/// Oracle sweep bound on `N`.
const SWEEP_N: usize = 8;
/// Random SG instances for pruning soundness and completeness.
const SG_INSTANCES: usize = 200;
/// `(L_S, L_A)` pairs with coprime periods, cycled over the instances.
const SG_SHAPES: [(usize, usize); 5] = [(3, 7), (3, 8), (3, 10), (4, 7), (4, 9)];
/// Scaling bench: selector degree, trials per point, seed.
const BENCH_LS: usize = 4;
const BENCH_TRIALS: usize = 100;
const BENCH_SEED: u64 = 1;
/// Planted ASG instances and keystream length.
const ASG_INSTANCES: usize = 40;
const ASG_LEN: usize = 40;

struct Line {
    id: String,
    ok: bool,
    detail: String,
}

fn line(id: &str, ok: bool, detail: impl Into<String>) -> Line {
    Line {
        id: id.to_string(),
        ok,
        detail: detail.into(),
    }
}

fn poly(s: &str) -> FeedbackPolynomial {
    s.parse().unwrap()
}

fn b(s: &str) -> Bits {
    s.parse().unwrap()
}

fn grid(rows: &[&str]) -> String {
    rows.iter().map(|r| format!("{r}\n")).collect()
}

const SMALL_MASKS: [&str; 18] = [
    "0111011011", "0111011101", "0111011110", "0111101011", "0111101101", "0111101110",
    "1011011011", "1011011101", "1011011110", "1011101011", "1011101101", "1011101110",
    "1101011011", "1101011101", "1101011110", "1101101011", "1101101101", "1101101110",
];

fn small_example() -> Vec<Line> {
    let start = Instant::now();
    let (x, y) = (b("1110110111"), b("1101011"));
    let m = EditMatrix::compute(&x, &y, 1, None).unwrap();
    let printed = grid(&["0 0 1 2 3 - -", "1 1 1 1 2 3 -", "- 3 3 2 2 2 2", "- - 5 5 4 3 3"]);
    let g = InducedGraph::build(&x, &y, 1).unwrap();
    let masks: BTreeSet<String> = g.enumerate_shortest_paths().iter().map(|a| a.keep_mask.to_string()).collect();
    let listed: BTreeSet<String> = SMALL_MASKS.iter().map(|s| s.to_string()).collect();
    let d = m.edit_distance().unwrap();
    let elapsed = start.elapsed();
    let ok = m.dump() == printed
        && g.vertices().len() == 24
        && g.edges().len() == 38
        && masks == listed
        && d == 3
        && elapsed < FAST;
    vec![line(
        "1",
        ok,
        format!(
            "matrix {}, V={} E={}, {} masks (listed set {}), distance {d}, {elapsed:?}",
            if m.dump() == printed { "matches" } else { "differs" },
            g.vertices().len(),
            g.edges().len(),
            masks.len(),
            if masks == listed { "equal" } else { "differs" },
        ),
    )]
}

const WORKED: [&str; 15] = [
    "attack", "--model", "sg", "--keystream", "1011110", "--ps", "1+x+x^3", "--pa", "1+x+x^7", "--H", "3", "--N",
    "10", "--out", "",
];

fn cmd_attack(extra: &[&str]) -> (Option<i32>, ReportFile, Duration) {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let mut args: Vec<&str> = WORKED.to_vec();
    let p = path.to_str().unwrap().to_string();
    *args.last_mut().unwrap() = &p;
    args.extend_from_slice(extra);
    let start = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_clockcut")).args(&args).output().unwrap();
    let elapsed = start.elapsed();
    let report = ReportFile::from_json(&std::fs::read_to_string(&path).unwrap()).unwrap();
    (out.status.code(), report, elapsed)
}

fn worked_example() -> Vec<Line> {
    let (code, file, elapsed) = cmd_attack(&[]);
    let r = &file.report;
    let pa = poly("1+x+x^7");
    let mut out = Vec::new();

    out.push(line(
        "2a",
        r.trimmed.to_string() == "11110" && r.discarded.to_string() == "10" && r.hypothesis_counts == [0, 2, 3],
        format!("trimmed {} discarded {} counts {:?}", r.trimmed, r.discarded, r.hypothesis_counts),
    ));
    out.push(line("2b", r.is_pattern.to_string() == "111111x", format!("IS-pattern {}", r.is_pattern)));

    let first = &r.generations[0];
    let evaluated: Vec<String> = first.examined.iter().map(|e| e.state.to_string()).collect();
    let printed = [
        ("1111110", grid(&["0 0 0 - -", "1 1 1 1 -", "2 2 2 2 -", "- 3 3 4 4", "- 4 5 4 4", "- - 5 6 6"])),
        ("1111111", grid(&["0 0 0 - -", "1 1 1 1 -", "2 2 2 2 -", "- 3 3 3 3", "- 4 4 5 5", "- - 6 5 5"])),
    ];
    let matrices_ok = printed.iter().all(|(state, want)| {
        let x = pa.sequence_from_u64(b(state).to_u64(), r.n);
        EditMatrix::compute(&x, &r.trimmed, r.kmax, None).unwrap().dump() == *want
    });
    out.push(line(
        "2c",
        matrices_ok && evaluated == ["1111110", "1111111"],
        format!("states evaluated {evaluated:?}, printed matrices {}", if matrices_ok { "match" } else { "differ" }),
    ));
    out.push(line(
        "2d",
        r.first_generation_threshold == 5,
        format!("first-generation threshold {}", r.first_generation_threshold),
    ));

    let all_ones = first.examined.iter().find(|e| e.state.to_string() == "1111111");
    let paths = all_ones.map_or(0, |e| e.shortest_paths);
    out.push(line("2e", paths == 54, format!("shortest paths for 1111111: {paths} (expected 54)")));
    let sels: Vec<(String, bool)> = all_ones
        .map(|e| e.candidates.iter().map(|c| (c.selector.to_string(), c.confirmed_by_discarded)).collect())
        .unwrap_or_default();
    out.push(line(
        "2f",
        sels.len() == 2 && sels.iter().all(|(_, confirmed)| !confirmed),
        format!("consistent selectors of 1111111 (selector, confirmed): {sels:?}"),
    ));
    let relaxed = r.generations.get(1).map(|g| g.pattern.to_string()).unwrap_or_default();
    out.push(line("2g", relaxed == "111110x", format!("first relaxation {relaxed}")));

    let accepted: Vec<(String, String)> =
        r.accepted.iter().map(|c| (c.initial_state.to_string(), c.selector.to_string())).collect();
    let want = ("1111101".to_string(), "0011101001".to_string());
    out.push(line(
        "2h",
        accepted.contains(&want) && code == Some(0),
        format!("accepted {accepted:?}, outcome {:?}, exit {code:?}", r.outcome),
    ));
    out.push(line(
        "2i",
        r.counters.matrices_computed == 4,
        format!("matrices computed {} (expected 4)", r.counters.matrices_computed),
    ));

    let (alt_code, alt, _) = cmd_attack(&["--relax-from", "first"]);
    let alt_pattern = alt.report.generations.get(1).map(|g| g.pattern.to_string()).unwrap_or_default();
    let alt_accepted: Vec<(String, String)> =
        alt.report.accepted.iter().map(|c| (c.initial_state.to_string(), c.selector.to_string())).collect();
    out.push(line(
        "2j",
        alt_pattern == "011111x" && alt_accepted.contains(&("0111111".into(), "0100111010".into())),
        format!("first-bit relaxation {alt_pattern}, accepted {alt_accepted:?}, exit {alt_code:?}"),
    ));
    out.push(line("2k", elapsed < FAST, format!("end-to-end {elapsed:?}")));
    out
}

fn oracle_sweep() -> Vec<Line> {
    let start = Instant::now();
    let (mut pairs, mut bad) = (0usize, Vec::new());
    for n in 1..=SWEEP_N {
        for m in 1..=n {
            for kmax in 1..=3 {
                for xv in 0u64..1 << n {
                    let x = Bits::from_u64(xv, n);
                    for yv in 0u64..1 << m {
                        let y = Bits::from_u64(yv, m);
                        let Ok(oracle) = brute_force_distance(&x, &y, kmax) else {
                            if EditMatrix::compute(&x, &y, kmax, None).is_ok() {
                                bad.push(format!("{x}/{y}/{kmax} feasible only in DP"));
                            }
                            continue;
                        };
                        pairs += 1;
                        let d = EditMatrix::compute(&x, &y, kmax, None).and_then(|m| m.edit_distance());
                        let set: BTreeSet<_> =
                            InducedGraph::build(&x, &y, kmax).unwrap().enumerate_shortest_paths().into_iter().collect();
                        if d != Ok(oracle.distance) || set != oracle.optimal_alignments {
                            bad.push(format!("{x}/{y}/{kmax}"));
                        }
                    }
                }
            }
        }
    }
    vec![line(
        "3",
        bad.is_empty(),
        format!("{pairs} feasible pairs, {} mismatches {:?}, {:?}", bad.len(), &bad[..bad.len().min(3)], start.elapsed()),
    )]
}

fn sg_config(p: &clockcut::harness::PlantedSg, h: usize) -> AttackConfig {
    AttackConfig {
        h,
        candidate_len: Some(p.n),
        exhaustive_fallback: true,
        trace: true,
        ..AttackConfig::shrinking(p.selector_poly.clone(), p.target_poly.clone())
    }
}

fn pruning_and_completeness() -> Vec<Line> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut pruned, mut violations, mut solved, mut misaligned) = (0usize, 0usize, 0usize, 0usize);
    for k in 0..SG_INSTANCES {
        let (ls, la) = SG_SHAPES[k % SG_SHAPES.len()];
        let h = rng.gen_range(1..=3);
        let p = plant_sg(&mut rng, ls, la, 4 * la, None, h).unwrap();
        misaligned += !p.aligned as usize;
        let report = run_attack(&sg_config(&p, h), &p.intercepted).unwrap();
        for g in &report.generations {
            for t in &g.trace {
                let threshold = match t.outcome {
                    StateOutcome::StopColumn { threshold, .. } | StateOutcome::AntiPattern { threshold } => threshold,
                    StateOutcome::Distance(_) => continue,
                };
                pruned += 1;
                let x = p.target_poly.sequence_from_u64(t.state.to_u64(), report.n);
                if min_distance(&x, &report.trimmed, report.kmax).unwrap().is_some_and(|d| d <= threshold) {
                    violations += 1;
                }
            }
        }
        if report.outcome == Outcome::Solved && report.accepted.iter().any(|a| p.is_equivalent(&a.initial_state)) {
            solved += 1;
        }
    }
    vec![
        line(
            "4",
            violations == 0 && pruned > 0,
            format!("{SG_INSTANCES} instances, {pruned} pruned or excluded states, {violations} violations"),
        ),
        line(
            "5",
            solved == SG_INSTANCES,
            format!("{solved}/{SG_INSTANCES} planted states recovered with fallback ({misaligned} misaligned plants)"),
        ),
    ]
}

fn scaling() -> Vec<Line> {
    let start = Instant::now();
    let mut rows = Vec::new();
    for la in [7usize, 9, 11] {
        let cfg = BenchConfig {
            grid: parse_grid(&format!("(*,{},{la})", 4 * la)).unwrap(),
            trials: BENCH_TRIALS,
            seed: BENCH_SEED,
            ls: BENCH_LS,
            h: la.div_ceil(2),
            fallback: false,
            workers: 4,
        };
        rows.extend(run_bench(&cfg).unwrap());
    }
    let points = plot_data(&rows);
    let ratio: Vec<f64> =
        points.iter().map(|p| p.mean_matrices_computed / 2f64.powf(p.la as f64 / 2.0 + 1.0)).collect();
    let c = ratio[0];
    let ok = ratio.iter().all(|&r| r <= c);
    let detail: Vec<String> = points
        .iter()
        .zip(&ratio)
        .map(|(p, r)| {
            format!(
                "LA={} matrices {:.1} ratio {:.3} reduction {:.3} solved {:.2}",
                p.la, p.mean_matrices_computed, r, p.reduction, p.solved_fraction
            )
        })
        .collect();
    vec![line("6", ok, format!("c={c:.3}; {}; {:?}", detail.join("; "), start.elapsed()))]
}

fn asg() -> Vec<Line> {
    let (pc, pa, pb) = (poly("1+x+x^3"), poly("1+x+x^7"), poly("1+x^3+x^7"));
    let a = pa.sequence_from_u64(0b1011001, 20);
    let bb = pb.sequence_from_u64(0b0110111, 20);
    let ones = alternate_bits(&Bits::ones(20), &a, &bb) == a;
    let zeros = alternate_bits(&Bits::zeros(20), &a, &bb) == bb;

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut solved, mut accepted, mut bad) = (0usize, 0usize, 0usize);
    for _ in 0..ASG_INSTANCES {
        let mut st = |p: &FeedbackPolynomial| {
            let l = p.degree();
            LfsrState::new(p.clone(), Bits::from_u64(rng.gen_range(1..1u64 << l), l)).unwrap()
        };
        let inst = AsgInstance::new(st(&pc), st(&pa), st(&pb)).unwrap();
        let (ks, control) = inst.alternate(ASG_LEN);
        let cfg = AttackConfig {
            candidate_len: Some(control.weight()),
            exhaustive_fallback: true,
            ..AttackConfig::alternating_step(pc.clone(), pa.clone(), pb.clone())
        };
        let report = run_attack(&cfg, &ks).unwrap();
        solved += (report.outcome == Outcome::Solved) as usize;
        for c in &report.accepted {
            accepted += 1;
            let deleted: Bits = ks.iter().zip(c.selector.iter()).filter(|(_, k)| *k == 0).map(|(v, _)| v).collect();
            let regen = match (&c.recovered_selector_state, &c.recovered_branch_state) {
                (Some(s), Some(other)) => AsgInstance::new(
                    LfsrState::new(pc.clone(), s.clone()).unwrap(),
                    LfsrState::new(pa.clone(), c.initial_state.clone()).unwrap(),
                    LfsrState::new(pb.clone(), other.clone()).unwrap(),
                )
                .map(|i| i.alternate(ASG_LEN).0)
                .ok(),
                _ => None,
            };
            if !pb.is_consistent(&deleted) || regen.as_ref() != Some(&ks) {
                bad += 1;
            }
        }
    }
    vec![line(
        "7",
        ones && zeros && solved == ASG_INSTANCES && bad == 0,
        format!(
            "control 1 gives A: {ones}, control 0 gives B: {zeros}; {solved}/{ASG_INSTANCES} solved, {accepted} accepted, {bad} failing checks"
        ),
    )]
}

fn determinism() -> Vec<Line> {
    let dir = tempfile::tempdir().unwrap();
    let run = |args: &[&str], name: &str| {
        let path = dir.path().join(name);
        let mut a = args.to_vec();
        let p = path.to_str().unwrap().to_string();
        a.extend(["--out", &p]);
        Command::new(env!("CARGO_BIN_EXE_clockcut")).args(&a).output().unwrap();
        std::fs::read(&path).unwrap_or_default()
    };
    let mut same = Vec::new();
    for workers in ["1", "4"] {
        let attack = [
            "attack", "--model", "sg", "--keystream", "1011110", "--ps", "1+x+x^3", "--pa", "1+x+x^7", "--H", "3",
            "--N", "10", "--fallback", "--trace", "--seed", "3", "--workers", workers,
        ];
        let bench = ["bench", "--grid", "(*,28,7);(20,15,7)", "--trials", "4", "--seed", "3", "--workers", workers];
        for (tag, args) in [("attack", &attack[..]), ("bench", &bench[..])] {
            let one = run(args, &format!("{tag}{workers}a"));
            let two = run(args, &format!("{tag}{workers}b"));
            same.push((format!("{tag}/w{workers}"), !one.is_empty() && one == two));
        }
    }
    let graph = ["graph", "--x", "1110110111", "--y", "1101011", "--kmax", "1"];
    let (g1, g2) = (run(&graph, "g1"), run(&graph, "g2"));
    same.push(("graph".into(), !g1.is_empty() && g1 == g2));
    vec![line("8", same.iter().all(|(_, ok)| *ok), format!("{same:?}"))]
}

fn main() -> ExitCode {
    let sections: [fn() -> Vec<Line>; 7] =
        [small_example, worked_example, oracle_sweep, pruning_and_completeness, scaling, asg, determinism];
    let mut failed = 0;
    for section in sections {
        for l in section() {
            failed += !l.ok as usize;
            println!("{} {}: {}", if l.ok { "PASS" } else { "FAIL" }, l.id, l.detail);
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
