//! Benchmark planting and persistence shared by the CLI and the tests:
//! primitive polynomials, bench grids and rows, report files, DOT export.

use std::fmt::Write as _;
use std::io;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::attack::{run_attack, AttackConfig, AttackReport};
use crate::corebits::{Bits, FeedbackPolynomial, LfsrState};
use crate::error::{Error, Result};
use crate::generators::SgInstance;
use crate::patterns::{trim_for_h, GeneratorKind, HypothesisParams, ModelKind};
use crate::searchgraph::{InducedGraph, Vertex};

pub const SCHEMA_VERSION: u32 = 1;

/// Exponents of one primitive trinomial or pentanomial per degree 2..=16.
const PRIMITIVE: [&[usize]; 15] = [
    &[0, 1, 2],
    &[0, 1, 3],
    &[0, 1, 4],
    &[0, 2, 5],
    &[0, 1, 6],
    &[0, 1, 7],
    &[0, 2, 3, 4, 8],
    &[0, 4, 9],
    &[0, 3, 10],
    &[0, 2, 11],
    &[0, 1, 4, 6, 12],
    &[0, 1, 3, 4, 13],
    &[0, 1, 6, 10, 14],
    &[0, 1, 15],
    &[0, 1, 3, 12, 16],
];

pub fn primitive_polynomial(degree: usize) -> Result<FeedbackPolynomial> {
    match degree {
        2..=16 => FeedbackPolynomial::from_exponents(PRIMITIVE[degree - 2]),
        _ => Err(Error::Config(format!("no tabulated primitive polynomial of degree {degree}"))),
    }
}

/// Serialized attack: config echo plus report.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportFile {
    pub schema_version: u32,
    pub config: AttackConfig,
    pub report: AttackReport,
}

impl ReportFile {
    pub fn new(config: AttackConfig, report: AttackReport) -> Self {
        ReportFile {
            schema_version: SCHEMA_VERSION,
            config,
            report,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self)
            .map(|s| s + "\n")
            .map_err(|e| Error::Serde(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Serde(e.to_string()))
    }
}

/// Human-readable summary of a report.
pub fn summary(report: &AttackReport) -> String {
    let mut s = String::new();
    let c = &report.counters;
    let _ = writeln!(s, "outcome: {:?}", report.outcome);
    let _ = writeln!(
        s,
        "trimmed: {} (discarded {:?}), N={} M={} kmax={}",
        report.trimmed,
        report.discarded.to_string(),
        report.n,
        report.m,
        report.kmax
    );
    let _ = writeln!(s, "IS-pattern: {}", report.is_pattern);
    for g in &report.generations {
        let _ = writeln!(
            s,
            "generation {:?} {}: {} matching, min distance {:?}",
            g.kind, g.pattern, g.states_matching, g.min_distance
        );
    }
    for a in &report.accepted {
        let _ = writeln!(
            s,
            "accepted state {} distance {} selector {}",
            a.initial_state, a.distance, a.selector
        );
    }
    let _ = writeln!(
        s,
        "states enumerated {}, matrices computed {}, stopped early {}, excluded by anti-pattern {}, threshold {}",
        c.states_enumerated, c.matrices_computed, c.stopped_early, c.states_excluded_by_anti_pattern, report.threshold
    );
    s
}

/// DOT digraph of an induced graph; shortest-path edges are grey.
pub fn graph_to_dot(graph: &InducedGraph) -> String {
    let mut s = String::from("digraph induced {\n  rankdir=LR;\n");
    for (v, vertex) in graph.vertices().iter().enumerate() {
        let shape = match vertex {
            Vertex::Cell { .. } => "circle",
            _ => "box",
        };
        let _ = writeln!(s, "  v{v} [label=\"{}\", shape={shape}];", graph.label(v));
    }
    for (id, e) in graph.edges().iter().enumerate() {
        let grey = if graph.is_tight(id) { ", color=grey" } else { "" };
        let _ = writeln!(s, "  v{} -> v{} [label=\"{}\"{grey}];", e.from, e.to, e.cost);
    }
    s.push_str("}\n");
    s
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GridPoint {
    /// `None` means the exact span of the planted window.
    pub n: Option<usize>,
    pub m: usize,
    pub la: usize,
}

/// Parses `"(N,M,LA);(N,M,LA)"`; `N` may be `*`.
pub fn parse_grid(text: &str) -> Result<Vec<GridPoint>> {
    let bad = |why: &str| Error::Grid(format!("{why} in {text:?}"));
    text.split(';')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| {
            let inner = p
                .strip_prefix('(')
                .and_then(|p| p.strip_suffix(')'))
                .ok_or_else(|| bad("expected (N,M,LA)"))?;
            let parts: Vec<&str> = inner.split(',').map(str::trim).collect();
            if parts.len() != 3 {
                return Err(bad("expected three fields"));
            }
            let num = |s: &str| s.parse::<usize>().map_err(|_| bad("bad number"));
            let n = if parts[0] == "*" { None } else { Some(num(parts[0])?) };
            let (m, la) = (num(parts[1])?, num(parts[2])?);
            if m == 0 || n.is_some_and(|n| n < m) || !(2..=16).contains(&la) {
                return Err(bad("out-of-range field"));
            }
            Ok(GridPoint { n, m, la })
        })
        .collect()
}

/// A planted shrinking generator instance.
#[derive(Clone, Debug)]
pub struct PlantedSg {
    pub selector_poly: FeedbackPolynomial,
    pub target_poly: FeedbackPolynomial,
    pub intercepted: Bits,
    pub n: usize,
    /// Target register at the start of the trimmed window.
    pub target_state: Bits,
    /// Selector from the start of the trimmed window, `n` bits.
    pub selector: Bits,
    /// Whether the window of `n` selector bits holds exactly the trimmed
    /// keystream; otherwise the attack cannot succeed.
    pub aligned: bool,
}

impl PlantedSg {
    /// Target states producing the same trimmed keystream with a suffix of
    /// the true selector window: the true one, and one more per leading zero.
    pub fn equivalent_states(&self) -> Vec<Bits> {
        let lead = self.selector.iter().take_while(|&b| b == 0).count();
        let st = LfsrState::new(self.target_poly.clone(), self.target_state.clone()).expect("valid planted state");
        (0..=lead).map(|k| st.step(k).register().clone()).collect()
    }

    /// Whether `state` generates the same first `n` bits as an equivalent
    /// state.
    pub fn is_equivalent(&self, state: &Bits) -> bool {
        let x = self.target_poly.sequence_from_u64(state.to_u64(), self.n);
        self.equivalent_states()
            .iter()
            .any(|e| self.target_poly.sequence_from_u64(e.to_u64(), self.n) == x)
    }
}

/// Clock offsets tried while looking for a window that fits `n`.
pub const PLANT_OFFSETS: usize = 4096;

/// Plants a random SG instance with an `m`-bit intercepted keystream,
/// trimmed with `h`. With `n` unset the candidate length is the exact span
/// of the trimmed window; otherwise offsets are searched for a window whose
/// first `n` selector bits hold exactly the trimmed keystream.
pub fn plant_sg(rng: &mut ChaCha8Rng, ls: usize, la: usize, m: usize, n: Option<usize>, h: usize) -> Result<PlantedSg> {
    let ps = primitive_polynomial(ls)?;
    let pa = primitive_polynomial(la)?;
    let sel0 = LfsrState::new(ps.clone(), Bits::from_u64(rng.gen_range(1..1u64 << ls), ls))?;
    let src0 = LfsrState::new(pa.clone(), Bits::from_u64(rng.gen_range(1..1u64 << la), la))?;
    let params = HypothesisParams::new(ModelKind::Decimation, GeneratorKind::Sg, ls);

    let mut first = None;
    for offset in 0..PLANT_OFFSETS {
        let (sel, src) = (sel0.step(offset), src0.step(offset));
        let (ks, mask) = SgInstance::new(sel.clone(), src.clone())?.shrink(m)?;
        let Ok(trim) = trim_for_h(&ks, h, la, &params) else {
            continue;
        };
        let d = trim.discarded.len();
        // clock index right after the d-th emitted bit
        let start = if d == 0 {
            0
        } else {
            mask.iter().enumerate().filter(|(_, b)| *b == 1).nth(d - 1).map(|(i, _)| i + 1).unwrap_or(0)
        };
        let span = mask.len() - start;
        let len = n.unwrap_or(span);
        let window = sel.generate(start + len).slice(start, start + len);
        let aligned = len >= span && window.weight() == trim.trimmed.len();
        let planted = PlantedSg {
            selector_poly: ps.clone(),
            target_poly: pa.clone(),
            intercepted: ks,
            n: len,
            target_state: src.step(start).register().clone(),
            selector: window,
            aligned,
        };
        if aligned {
            return Ok(planted);
        }
        first.get_or_insert(planted);
    }
    first.ok_or_else(|| Error::Config(format!("no offset trims to H={h}")))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchRow {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "LA")]
    pub la: usize,
    #[serde(rename = "statesTotal")]
    pub states_total: u64,
    #[serde(rename = "seqPat")]
    pub seq_pat: u64,
    pub thres: u32,
    pub dist: u32,
    #[serde(rename = "matricesComputed")]
    pub matrices_computed: u64,
    pub solved: bool,
    pub seed: u64,
}

pub const CSV_HEADER: &str = "N,M,LA,statesTotal,seqPat,thres,dist,matricesComputed,solved,seed";

#[derive(Clone, Debug)]
pub struct BenchConfig {
    pub grid: Vec<GridPoint>,
    pub trials: usize,
    pub seed: u64,
    pub ls: usize,
    pub h: usize,
    pub fallback: bool,
    pub workers: usize,
}

/// One row per grid point and trial, all drawn from one seeded stream.
pub fn run_bench(cfg: &BenchConfig) -> Result<Vec<BenchRow>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut rows = Vec::new();
    for point in &cfg.grid {
        for _ in 0..cfg.trials {
            let planted = plant_sg(&mut rng, cfg.ls, point.la, point.m, point.n, cfg.h)?;
            let config = AttackConfig {
                h: cfg.h,
                candidate_len: Some(planted.n),
                exhaustive_fallback: cfg.fallback,
                workers: cfg.workers,
                seed: cfg.seed,
                ..AttackConfig::shrinking(planted.selector_poly.clone(), planted.target_poly.clone())
            };
            let report = run_attack(&config, &planted.intercepted)?;
            rows.push(BenchRow {
                n: planted.n,
                m: point.m,
                la: point.la,
                states_total: 1 << point.la,
                seq_pat: report.generations[0].states_matching,
                thres: report.first_generation_threshold,
                dist: report.min_distance().unwrap_or(report.threshold),
                matrices_computed: report.counters.matrices_computed,
                solved: report.accepted.iter().any(|a| planted.is_equivalent(&a.initial_state)),
                seed: cfg.seed,
            });
        }
    }
    Ok(rows)
}

/// Writes the header and rows.
pub fn write_csv<W: io::Write>(rows: &[BenchRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CSV_HEADER.split(',')).map_err(|e| Error::Serde(e.to_string()))?;
    for r in rows {
        w.serialize(r).map_err(|e| Error::Serde(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::Serde(e.to_string()))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PlotPoint {
    pub la: usize,
    pub mean_seq_pat: f64,
    pub mean_matrices_computed: f64,
    /// `1 - mean(matricesComputed) / statesTotal`.
    pub reduction: f64,
    pub solved_fraction: f64,
}

/// Per-`L_A` means, in ascending `L_A`.
pub fn plot_data(rows: &[BenchRow]) -> Vec<PlotPoint> {
    let mut las: Vec<usize> = rows.iter().map(|r| r.la).collect();
    las.sort_unstable();
    las.dedup();
    las.into_iter()
        .map(|la| {
            let sel: Vec<&BenchRow> = rows.iter().filter(|r| r.la == la).collect();
            let k = sel.len() as f64;
            let mean = |f: &dyn Fn(&BenchRow) -> f64| sel.iter().map(|r| f(r)).sum::<f64>() / k;
            let mean_matrices = mean(&|r| r.matrices_computed as f64);
            PlotPoint {
                la,
                mean_seq_pat: mean(&|r| r.seq_pat as f64),
                mean_matrices_computed: mean_matrices,
                reduction: 1.0 - mean_matrices / (1u64 << la) as f64,
                solved_fraction: mean(&|r| r.solved as u8 as f64),
            }
        })
        .collect()
}

/// Plot data as text: one `LA,meanSeqPat,meanMatricesComputed,reduction,solved`
/// line per `L_A` after a header.
pub fn plot_text(points: &[PlotPoint]) -> String {
    let mut s = String::from("LA,meanSeqPat,meanMatricesComputed,reduction,solved\n");
    for p in points {
        let _ = writeln!(
            s,
            "{},{:.3},{:.3},{:.4},{:.3}",
            p.la, p.mean_seq_pat, p.mean_matrices_computed, p.reduction, p.solved_fraction
        );
    }
    s
}
