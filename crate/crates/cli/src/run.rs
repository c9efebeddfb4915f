//! Grid expansion and execution: one CSV per experiment kind plus a
//! manifest.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use gossip_dp::adversary::default_silence_window;
use gossip_dp::bounds::{
    mean_fixed_point, optimal_c, optimal_delta, p0_F, param_c, param_delta_exact, tradeoff_table,
    MeanDynamics, Regime, TradeoffRow,
};
use gossip_dp::estimators::{
    estimate_attack_precision, estimate_dp_gap, estimate_events, estimate_source_prefix_disclosure,
    estimate_spreading, AttackSpec, EventSpec, SpreadingOptions,
};
use gossip_dp::protocols::{run_sync, run_variant_into};
use gossip_dp::{GossipConfig, NodeId, StreamFamily};
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::format::sig10;
use crate::spec::{curious_count, AttackKind, Engine, ExperimentSpec, Kind, Quantity, Size};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const FROZEN_SPEC_FILE: &str = "spec.txt";

/// Relative tolerance of the median message count against `n ln n`.
pub const COUPON_TOLERANCE: f64 = 0.15;
/// Relative tolerance of the late-round plateau against the fixed point.
pub const PLATEAU_TOLERANCE: f64 = 0.2;
/// Half-widths allowed between an estimate and its closed form.
pub const CI_MULTIPLE: f64 = 3.0;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
}

/// What a run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub files: Vec<PathBuf>,
    /// One line per grid point that errored or failed its check.
    pub failures: Vec<String>,
}

impl RunReport {
    pub fn success(&self) -> bool {
        self.failures.is_empty()
    }
}

/// A point of the `n x s x curious_fraction` grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub n: usize,
    pub s: f64,
    pub f: usize,
}

impl GridPoint {
    pub fn config(&self) -> GossipConfig {
        GossipConfig::new(self.n, self.f, self.s).expect("grid validated at parse time")
    }

    fn label(&self) -> String {
        format!("n={} s={} f={}", self.n, self.s, self.f)
    }
}

/// Lexicographic expansion over `n`, then `s`, then `curious_fraction`.
pub fn grid(spec: &ExperimentSpec) -> Vec<GridPoint> {
    let mut out = Vec::new();
    for &n in &spec.n {
        for &s in &spec.s {
            for &frac in &spec.curious_fraction {
                out.push(GridPoint {
                    n,
                    s,
                    f: curious_count(n, frac),
                });
            }
        }
    }
    out
}

struct CsvOut {
    path: PathBuf,
    writer: csv::Writer<BufWriter<File>>,
}

impl CsvOut {
    fn create(dir: &Path, name: &str, header: &[&str]) -> Result<Self, RunError> {
        let path = dir.join(name);
        let file = File::create(&path).map_err(|source| RunError::Io {
            path: path.clone(),
            source,
        })?;
        let mut out = CsvOut {
            writer: csv::Writer::from_writer(BufWriter::new(file)),
            path,
        };
        out.row(header.iter().map(|h| h.to_string()))?;
        Ok(out)
    }

    fn row<I: IntoIterator<Item = String>>(&mut self, fields: I) -> Result<(), RunError> {
        self.writer
            .write_record(fields)
            .map_err(|source| RunError::Csv {
                path: self.path.clone(),
                source,
            })
    }

    fn finish(mut self) -> Result<PathBuf, RunError> {
        self.writer.flush().map_err(|source| RunError::Io {
            path: self.path.clone(),
            source,
        })?;
        Ok(self.path)
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    name: &'a str,
    kind: &'a str,
    master_seed: u64,
    version: &'a str,
    spec: &'a str,
    started_unix_seconds: u64,
    wall_clock_seconds: f64,
    notes: Vec<&'a str>,
    failures: &'a [String],
    points: Vec<Value>,
}

/// Runs every grid point of `spec`, writing into `spec.output`.
///
/// Points that error are recorded and skipped; the rest still run.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<RunReport, RunError> {
    let started = Instant::now();
    let started_unix = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let dir = &spec.output;
    fs::create_dir_all(dir).map_err(|source| RunError::Io {
        path: dir.clone(),
        source,
    })?;
    let frozen = spec.frozen();
    let spec_path = dir.join(FROZEN_SPEC_FILE);
    fs::write(&spec_path, &frozen).map_err(|source| RunError::Io {
        path: spec_path.clone(),
        source,
    })?;

    let mut ctx = Context {
        spec,
        dir,
        failures: Vec::new(),
        points: Vec::new(),
        notes: Vec::new(),
    };
    let mut files = match spec.kind {
        Kind::Trace => ctx.trace()?,
        Kind::Spread => ctx.spread()?,
        Kind::Attack => ctx.attack()?,
        Kind::Validate => ctx.validate()?,
        Kind::Bounds => ctx.bounds()?,
    };
    files.insert(0, spec_path);

    let manifest_path = dir.join(MANIFEST_FILE);
    let manifest = Manifest {
        name: &spec.name,
        kind: spec.kind.as_str(),
        master_seed: spec.seed,
        version: env!("CARGO_PKG_VERSION"),
        spec: &frozen,
        started_unix_seconds: started_unix,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
        notes: ctx.notes,
        failures: &ctx.failures,
        points: ctx.points,
    };
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&manifest_path, text + "\n").map_err(|source| RunError::Io {
        path: manifest_path.clone(),
        source,
    })?;
    files.push(manifest_path);
    Ok(RunReport {
        files,
        failures: ctx.failures,
    })
}

struct Context<'a> {
    spec: &'a ExperimentSpec,
    dir: &'a Path,
    failures: Vec<String>,
    points: Vec<Value>,
    notes: Vec<&'static str>,
}

impl Context<'_> {
    fn streams(&self, grid_point: usize) -> StreamFamily {
        StreamFamily::for_grid_point(self.spec.seed, grid_point as u64)
    }

    fn trace(&mut self) -> Result<Vec<PathBuf>, RunError> {
        let spec = self.spec;
        let point = grid(spec)[0];
        let config = point
            .config()
            .with_source(NodeId(spec.source))
            .expect("source validated at parse time")
            .with_variant(spec.variant);
        let mut rng = self.streams(0).stream(0);
        let path = self.dir.join("trace.csv");
        let mut files = Vec::new();
        let result = match spec.engine {
            Engine::Async => {
                let mut events = Vec::new();
                run_variant_into(&config, &mut rng, &mut events)
                    .map(|status| {
                        gossip_dp::ExecutionTrace::new(config.clone(), events, status.completion)
                    })
                    .map(|t| (t, None))
            }
            Engine::Sync => run_sync(&config, &mut rng).map(|(t, r)| (t, Some(r))),
        };
        match result {
            Ok((trace, rounds)) => {
                let file = File::create(&path).map_err(|source| RunError::Io {
                    path: path.clone(),
                    source,
                })?;
                let mut out = BufWriter::new(file);
                trace
                    .write_csv(&mut out)
                    .and_then(|_| out.flush())
                    .map_err(|source| RunError::Io {
                        path: path.clone(),
                        source,
                    })?;
                files.push(path);
                if let Some(rounds) = rounds {
                    let mut csv = CsvOut::create(
                        self.dir,
                        "rounds.csv",
                        &[
                            "round",
                            "informed",
                            "active",
                            "messages_sent",
                            "cumulative_messages",
                            "retained",
                        ],
                    )?;
                    for r in rounds.records() {
                        csv.row(
                            [
                                r.round,
                                r.informed,
                                r.active,
                                r.messages_sent,
                                r.cumulative_messages,
                                r.retained,
                            ]
                            .map(|v| v.to_string()),
                        )?;
                    }
                    files.push(csv.finish()?);
                }
                self.points.push(json!({
                    "point": point.label(),
                    "events": trace.len(),
                    "completion": trace.completion().as_str(),
                }));
            }
            Err(e) => self.failures.push(format!("{}: {e}", point.label())),
        }
        Ok(files)
    }

    fn spread(&mut self) -> Result<Vec<PathBuf>, RunError> {
        let spec = self.spec;
        self.notes
            .push("rounds are synchronous-engine rounds for every s");
        let mut csv = CsvOut::create(
            self.dir,
            "spread.csv",
            &[
                "n",
                "s",
                "f",
                "round",
                "informed_med",
                "informed_p10",
                "informed_p90",
                "active_med",
                "active_p10",
                "active_p90",
            ],
        )?;
        let options = SpreadingOptions {
            max_trajectory_rounds: spec.max_rounds,
        };
        for (g, point) in grid(spec).into_iter().enumerate() {
            let summary =
                match estimate_spreading(&point.config(), spec.trials, &self.streams(g), options) {
                    Ok(summary) => summary,
                    Err(e) => {
                        self.failures.push(format!("{}: {e}", point.label()));
                        continue;
                    }
                };
            for band in &summary.trajectory {
                csv.row([
                    point.n.to_string(),
                    sig10(point.s),
                    point.f.to_string(),
                    band.round.to_string(),
                    sig10(band.informed.median),
                    sig10(band.informed.p10),
                    sig10(band.informed.p90),
                    sig10(band.active.median),
                    sig10(band.active.p10),
                    sig10(band.active.p90),
                ])?;
            }
            if summary.capped > 0 {
                self.failures.push(format!(
                    "{}: {} of {} runs hit the step cap",
                    point.label(),
                    summary.capped,
                    spec.trials
                ));
            }
            self.points.push(json!({
                "point": point.label(),
                "completed_runs": summary.completion_rounds.len(),
                "capped_runs": summary.capped,
                "median_completion_round": summary.median_completion_round(),
                "median_total_messages": summary.median_total_messages(),
                "median_late_active_fraction": summary.median_plateau(),
            }));
        }
        Ok(vec![csv.finish()?])
    }

    fn attack_specs(&self, point: &GridPoint) -> Vec<AttackSpec> {
        let spec = self.spec;
        match spec.attack.expect("attack validated at parse time") {
            AttackKind::Map => spec
                .prior_size
                .iter()
                .map(|size| AttackSpec::Map {
                    prior_size: match *size {
                        Size::Derived => point.n - point.f,
                        Size::Fixed(p) => p,
                    },
                })
                .collect(),
            AttackKind::MultiRumor => spec
                .rumors
                .iter()
                .map(|&rumors| AttackSpec::MultiRumor { rumors, k: spec.k })
                .collect(),
            AttackKind::Silence => spec
                .window
                .iter()
                .map(|size| AttackSpec::Silence {
                    window: match *size {
                        Size::Derived => default_silence_window(point.n),
                        Size::Fixed(w) => w,
                    },
                })
                .collect(),
        }
    }

    fn attack(&mut self) -> Result<Vec<PathBuf>, RunError> {
        let spec = self.spec;
        let mut csv = CsvOut::create(
            self.dir,
            "attack.csv",
            &[
                "n",
                "s",
                "f",
                "attack",
                "param",
                "trials",
                "precision",
                "ci",
                "abstain_rate",
            ],
        )?;
        let mut g = 0;
        for point in grid(spec) {
            let config = point.config().with_variant(spec.variant);
            for attack in self.attack_specs(&point) {
                let streams = self.streams(g);
                g += 1;
                match estimate_attack_precision(&config, attack, spec.trials, &streams) {
                    Ok(est) => {
                        csv.row([
                            point.n.to_string(),
                            sig10(point.s),
                            point.f.to_string(),
                            attack.name().to_string(),
                            attack.param().to_string(),
                            spec.trials.to_string(),
                            sig10(est.precision.estimate),
                            sig10(est.precision.ci_half_width),
                            sig10(est.abstain_rate),
                        ])?;
                        self.points.push(json!({
                            "point": point.label(),
                            "attack": attack.to_string(),
                            "precision_when_predicting": est.precision_when_predicting.map(|p| p.estimate),
                            "incomplete_runs": est.precision.incomplete,
                            "low_count": est.precision.low_count(),
                        }));
                    }
                    Err(e) => self
                        .failures
                        .push(format!("{} {attack}: {e}", point.label())),
                }
            }
        }
        Ok(vec![csv.finish()?])
    }

    fn validate(&mut self) -> Result<Vec<PathBuf>, RunError> {
        let spec = self.spec;
        self.notes.push(
            "for coupon_messages and plateau the ci column holds the allowed band (relative tolerance times closed form)",
        );
        let mut csv = CsvOut::create(
            self.dir,
            "validate.csv",
            &[
                "quantity",
                "s",
                "f",
                "n",
                "closed_form",
                "estimate",
                "ci",
                "trials",
                "pass",
            ],
        )?;
        let mut g = 0;
        for point in grid(spec) {
            for &quantity in &spec.quantities {
                let streams = self.streams(g);
                g += 1;
                match check(quantity, &point, spec.trials, &streams) {
                    Ok(None) => {}
                    Ok(Some(c)) => {
                        csv.row([
                            quantity.as_str().to_string(),
                            sig10(point.s),
                            point.f.to_string(),
                            point.n.to_string(),
                            sig10(c.closed_form),
                            sig10(c.estimate),
                            sig10(c.ci),
                            spec.trials.to_string(),
                            c.pass.to_string(),
                        ])?;
                        if !c.pass {
                            self.failures.push(format!(
                                "{} {}: estimate {} vs closed form {}",
                                point.label(),
                                quantity.as_str(),
                                sig10(c.estimate),
                                sig10(c.closed_form)
                            ));
                        }
                    }
                    Err(e) => {
                        self.failures
                            .push(format!("{} {}: {e}", point.label(), quantity.as_str()))
                    }
                }
            }
        }
        Ok(vec![csv.finish()?])
    }

    fn bounds(&mut self) -> Result<Vec<PathBuf>, RunError> {
        let spec = self.spec;
        let mut csv = CsvOut::create(self.dir, "bounds.csv", &BOUNDS_HEADER)?;
        for &n in &spec.n {
            for &frac in &spec.curious_fraction {
                let f = curious_count(n, frac);
                for &epsilon in &spec.epsilon {
                    for row in bounds_rows(n, f, &spec.s, epsilon) {
                        csv.row(bounds_record(&row, n, f))?;
                    }
                }
            }
        }
        Ok(vec![csv.finish()?])
    }
}

pub const BOUNDS_HEADER: [&str; 8] = [
    "regime",
    "s",
    "f",
    "n",
    "epsilon",
    "delta",
    "c",
    "spreading_bound",
];

/// Summary-table rows at `epsilon`: only the `s = 0` row depends on it.
pub fn bounds_rows(n: usize, f: usize, generic_s: &[f64], epsilon: f64) -> Vec<TradeoffRow> {
    tradeoff_table(n, f, generic_s)
        .into_iter()
        .map(|mut row| {
            row.epsilon = epsilon;
            if row.regime == Regime::MuteAfterSend {
                row.delta = optimal_delta(epsilon, f, n);
                row.c = optimal_c(f, n);
            }
            row
        })
        .collect()
}

/// CSV fields of one row, floats at 10 significant digits.
pub fn bounds_record(row: &TradeoffRow, n: usize, f: usize) -> Vec<String> {
    bounds_cells(row, n, f, sig10)
}

fn bounds_cells(row: &TradeoffRow, n: usize, f: usize, float: fn(f64) -> String) -> Vec<String> {
    vec![
        row.regime.as_str().to_string(),
        float(row.s),
        f.to_string(),
        n.to_string(),
        float(row.epsilon),
        float(row.delta),
        float(row.c),
        float(row.spreading_bound),
    ]
}

/// The rows as an aligned text table. Floats are printed in full (shortest
/// text that parses back to the same value), unlike the CSV.
pub fn bounds_table(rows: &[TradeoffRow], n: usize, f: usize) -> String {
    let mut lines: Vec<Vec<String>> = vec![BOUNDS_HEADER.iter().map(|h| h.to_string()).collect()];
    lines.extend(
        rows.iter()
            .map(|r| bounds_cells(r, n, f, |x| x.to_string())),
    );
    let widths: Vec<usize> = (0..BOUNDS_HEADER.len())
        .map(|c| lines.iter().map(|l| l[c].len()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for line in lines {
        let cells: Vec<String> = line
            .iter()
            .zip(&widths)
            .map(|(cell, w)| format!("{cell:<w$}"))
            .collect();
        out.push_str(cells.join("  ").trim_end());
        out.push('\n');
    }
    out
}

/// One closed form against its Monte Carlo estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Check {
    pub closed_form: f64,
    pub estimate: f64,
    pub ci: f64,
    pub pass: bool,
}

fn two_sided(closed_form: f64, estimate: f64, ci: f64) -> Check {
    Check {
        closed_form,
        estimate,
        ci,
        pass: (estimate - closed_form).abs() <= CI_MULTIPLE * ci,
    }
}

fn upper(closed_form: f64, estimate: f64, ci: f64) -> Check {
    Check {
        closed_form,
        estimate,
        ci,
        pass: estimate <= closed_form + CI_MULTIPLE * ci,
    }
}

fn relative(closed_form: f64, estimate: f64, tolerance: f64) -> Check {
    Check {
        closed_form,
        estimate,
        ci: tolerance * closed_form,
        pass: (estimate - closed_form).abs() <= tolerance * closed_form,
    }
}

/// Runs one validation; `None` when the quantity has no closed form at
/// this grid point (e.g. first-sender probabilities away from `s = 0`).
pub fn check(
    quantity: Quantity,
    point: &GridPoint,
    trials: u64,
    streams: &StreamFamily,
) -> Result<Option<Check>, gossip_dp::estimators::EstimateError> {
    let GridPoint { n, s, f } = *point;
    let config = point.config();
    let nf = n as f64;
    Ok(Some(match quantity {
        Quantity::FirstSenderSource | Quantity::FirstSenderOther => {
            if s != 0.0 {
                return Ok(None);
            }
            let (node, closed) = if quantity == Quantity::FirstSenderSource {
                (config.source(), (f + 1) as f64 / nf)
            } else {
                (NodeId(1), 1.0 / nf)
            };
            let r =
                estimate_events(&config, &[EventSpec::FirstSenderIs(node)], trials, streams)?[0];
            two_sided(closed, r.estimate, r.ci_half_width)
        }
        Quantity::PrefixDisclosure => {
            let r = estimate_source_prefix_disclosure(n, f, s, trials, streams)?;
            two_sided(p0_F(s, f, n), r.estimate, r.ci_half_width)
        }
        Quantity::GapBound => {
            let source = config.source();
            let mut family: Vec<EventSpec> = (1..=10)
                .map(|r| EventSpec::SenderRankLe { node: source, r })
                .collect();
            family.push(EventSpec::FirstSenderIs(source));
            family.push(EventSpec::TimedFirstDisclosure(source));
            let other = config
                .clone()
                .with_source(NodeId(1))
                .expect("node 1 is honest");
            let gap = estimate_dp_gap(&config, &other, &family, trials, streams)?;
            upper(param_delta_exact(s, f, n), gap.gap, gap.ci_half_width)
        }
        Quantity::MapBound => {
            let est = estimate_attack_precision(
                &config,
                AttackSpec::Map { prior_size: n - f },
                trials,
                streams,
            )?;
            upper(
                1.0 / (1.0 + param_c(s, f, n)),
                est.precision.estimate,
                est.precision.ci_half_width,
            )
        }
        Quantity::CouponMessages => {
            if s != 0.0 {
                return Ok(None);
            }
            let summary = estimate_spreading(
                &config,
                trials,
                streams,
                SpreadingOptions {
                    max_trajectory_rounds: 1,
                },
            )?;
            let Some(median) = summary.median_total_messages() else {
                return Ok(Some(relative(nf * nf.ln(), f64::NAN, COUPON_TOLERANCE)));
            };
            relative(nf * nf.ln(), median, COUPON_TOLERANCE)
        }
        Quantity::Plateau => {
            let Ok(fixed) = mean_fixed_point(&MeanDynamics::new(s, n)) else {
                return Ok(None);
            };
            let summary = estimate_spreading(
                &config,
                trials,
                streams,
                SpreadingOptions {
                    max_trajectory_rounds: 1,
                },
            )?;
            let Some(plateau) = summary.median_plateau() else {
                return Ok(Some(relative(fixed, f64::NAN, PLATEAU_TOLERANCE)));
            };
            relative(fixed, plateau, PLATEAU_TOLERANCE)
        }
    }))
}
