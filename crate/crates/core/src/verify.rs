//! The verification driver: samples points of a pair's domain, runs the
//! selected checks and collects a [`VerificationReport`].

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::geometry::{check_nondegenerate, GeometryError};
use crate::operators::{
    bracket_at, commutator_at, decompose_at, function_jet, symbol_drift, test_function_suite,
    FamilyFrame, OperatorError, PhaseSpacePoint, QuantizedOperator, COMMUTATOR_ORDER,
    DECOMPOSITION_ORDER,
};
use crate::projective::{check_killing, PairFrame, ProjectivePair, DEFAULT_T_GRID};

pub const SCHEMA_VERSION: u32 = 1;

/// Resampling cap for points where a metric is degenerate or a component
/// cannot be evaluated.
pub const MAX_RESAMPLES: usize = 100;

/// Geodesic drift settings used by the driver.
pub const DRIFT_HORIZON: f64 = 1.0;
pub const DRIFT_STEP: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Check {
    Basic,
    Connection,
    Killing,
    RicciComm,
    Carter,
    Poisson,
    Commutator,
    Decompose,
    Drift,
}

impl Check {
    pub const ALL: [Check; 9] = [
        Check::Basic,
        Check::Connection,
        Check::Killing,
        Check::RicciComm,
        Check::Carter,
        Check::Poisson,
        Check::Commutator,
        Check::Decompose,
        Check::Drift,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Check::Basic => "basic",
            Check::Connection => "connection",
            Check::Killing => "killing",
            Check::RicciComm => "ricci-comm",
            Check::Carter => "carter",
            Check::Poisson => "poisson",
            Check::Commutator => "commutator",
            Check::Decompose => "decompose",
            Check::Drift => "drift",
        }
    }

    /// How the residual of this check is normalised.
    pub fn normalization(self) -> &'static str {
        match self {
            Check::Basic => "max|∇_k L_ij − λ_i g_jk − λ_j g_ik| / max(1, max|∇L|)",
            Check::Connection => "max|Γ̄ − Γ − δφ − δφ| / max(1, max|Γ̄ − Γ|)",
            Check::Killing => "max|∇_(i K_jk)| / (1 + max|∇K|)",
            Check::RicciComm => "max|[Ric, L]| / max(1, max|Ric| max|L|)",
            Check::Carter => "max_j |∇_i B^i_j| / max(1, max|∇B|)",
            Check::Poisson => "|{I_t, I_s}| / max(1, Σ_i |∂_p I_t ∂_x I_s| + |∂_x I_t ∂_p I_s|)",
            Check::Commutator => {
                "max over test functions of |[K̂_t, K̂_s] f| / max(1, |K̂_t K̂_s f|, |K̂_s K̂_t f|)"
            }
            Check::Decompose => "max(max|Q|, max|V|, |C(1)|, max|C(u_i u_j u_k)| / scale)",
            Check::Drift => "max_τ |I_t(τ) − I_t(0)| / max(1, |I_t(0)|)",
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Check {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Check::ALL
            .iter()
            .copied()
            .find(|c| c.id() == s)
            .ok_or_else(|| {
                let ids: Vec<&str> = Check::ALL.iter().map(|c| c.id()).collect();
                format!("unknown check `{s}` (expected one of {})", ids.join(", "))
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyConfig {
    pub points: usize,
    pub order: usize,
    pub tolerance: f64,
    pub t_grid: Vec<f64>,
    pub seed: u64,
    pub checks: Vec<Check>,
    /// Worker threads; `None` uses the global pool.
    pub jobs: Option<usize>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            points: 20,
            order: 4,
            tolerance: 1e-7,
            t_grid: DEFAULT_T_GRID.to_vec(),
            seed: 42,
            checks: Check::ALL.to_vec(),
            jobs: None,
        }
    }
}

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("no usable point found after {0} attempts")]
    Sampling(usize),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("thread pool: {0}")]
    Pool(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    fn of(pass: bool) -> Self {
        if pass {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}

/// One residual at one point and parameter choice.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRecord {
    pub check: &'static str,
    pub point: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub covector: Option<Vec<f64>>,
    /// Worst test function for commutator records.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub function: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
    pub threshold: f64,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigEcho {
    pub points: usize,
    pub order: usize,
    pub tolerance: f64,
    pub t_grid: Vec<f64>,
    pub seed: u64,
    pub checks: Vec<&'static str>,
    pub drift_horizon: f64,
    pub drift_step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckSummary {
    pub check: &'static str,
    pub records: usize,
    pub failed: usize,
    /// Largest finite residual; absent when every record errored.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_residual: Option<f64>,
    pub verdict: Verdict,
    pub normalization: &'static str,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub records: usize,
    pub passed: usize,
    pub failed: usize,
    pub verdict: Verdict,
    pub checks: Vec<CheckSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Timing {
    pub elapsed_seconds: f64,
}

/// Everything `verify` reports. Serialises to TOML; all sections except
/// `timing` are deterministic for a fixed seed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub schema_version: u32,
    pub pair: String,
    pub config: ConfigEcho,
    pub summary: Summary,
    pub records: Vec<CheckRecord>,
    pub timing: Timing,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.summary.verdict == Verdict::Pass
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("report is serialisable")
    }

    /// The report without the timing section.
    pub fn to_toml_without_timing(&self) -> String {
        let mut copy = self.clone();
        copy.timing.elapsed_seconds = 0.0;
        toml::to_string(&copy).expect("report is serialisable")
    }

    pub fn summary_of(&self, check: Check) -> Option<&CheckSummary> {
        self.summary.checks.iter().find(|c| c.check == check.id())
    }

    pub fn records_of(&self, check: Check) -> impl Iterator<Item = &CheckRecord> {
        self.records.iter().filter(move |r| r.check == check.id())
    }
}

/// A sampled point together with a random covector.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub point: Vec<f64>,
    pub covector: Vec<f64>,
}

fn usable(pair: &ProjectivePair, point: &[f64]) -> bool {
    let n = pair.dim();
    [pair.g(), pair.gbar()].iter().all(|m| {
        m.values_at(point)
            .and_then(|v| {
                if v.iter().all(|x| x.is_finite()) {
                    check_nondegenerate(&v, n)
                } else {
                    Err(GeometryError::Shape("non-finite component".into()))
                }
            })
            .is_ok()
    })
}

/// Uniform points of the domain box, deterministic in `seed`; points where a
/// metric is degenerate or undefined are redrawn.
pub fn sample_points(
    pair: &ProjectivePair,
    count: usize,
    seed: u64,
) -> Result<Vec<Sample>, VerifyError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = pair.dim();
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let mut attempts = 0;
        let point = loop {
            attempts += 1;
            if attempts > MAX_RESAMPLES {
                return Err(VerifyError::Sampling(MAX_RESAMPLES));
            }
            let unit: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
            let point = pair.point_from_unit(&unit);
            if usable(pair, &point) {
                break point;
            }
        };
        let covector = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        out.push(Sample { point, covector });
    }
    Ok(out)
}

/// Unordered pairs `t < s` of a grid.
pub fn grid_pairs(grid: &[f64]) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for (i, &t) in grid.iter().enumerate() {
        for &s in &grid[i + 1..] {
            out.push((t, s));
        }
    }
    out
}

struct Recorder<'a> {
    point: &'a [f64],
    tolerance: f64,
    out: Vec<CheckRecord>,
}

impl Recorder<'_> {
    fn push<E: fmt::Display>(
        &mut self,
        check: Check,
        params: (Option<f64>, Option<f64>),
        result: Result<f64, E>,
    ) -> Option<&mut CheckRecord> {
        let (residual, error) = match result {
            Ok(r) => (Some(r), None),
            Err(e) => (None, Some(e.to_string())),
        };
        let pass = residual.is_some_and(|r| r <= self.tolerance);
        self.out.push(CheckRecord {
            check: check.id(),
            point: self.point.to_vec(),
            t: params.0,
            s: params.1,
            covector: None,
            function: None,
            residual,
            threshold: self.tolerance,
            verdict: Verdict::of(pass),
            error,
        });
        self.out.last_mut()
    }
}

fn checks_at_point(
    pair: &ProjectivePair,
    sample: &Sample,
    index: usize,
    config: &VerifyConfig,
) -> Vec<CheckRecord> {
    let enabled = |c: Check| config.checks.contains(&c);
    let mut rec = Recorder {
        point: &sample.point,
        tolerance: config.tolerance,
        out: Vec::new(),
    };
    let grid = &config.t_grid;
    let pairs = grid_pairs(grid);

    let structural = [
        Check::Basic,
        Check::Connection,
        Check::Killing,
        Check::RicciComm,
        Check::Carter,
    ];
    if structural.iter().any(|c| enabled(*c)) {
        match PairFrame::new(pair, &sample.point, config.order) {
            Ok(frame) => {
                if enabled(Check::Basic) {
                    rec.push(Check::Basic, (None, None), frame.projective_residual());
                }
                if enabled(Check::Connection) {
                    rec.push(Check::Connection, (None, None), frame.connection_residual());
                }
                if enabled(Check::Killing) {
                    for &t in grid {
                        let k = frame.benenti.killing_at(t);
                        rec.push(
                            Check::Killing,
                            (Some(t), None),
                            check_killing(&k, &frame.metric.gamma),
                        );
                    }
                }
                if enabled(Check::RicciComm) {
                    rec.push(Check::RicciComm, (None, None), frame.ricci_commutation_residual());
                }
                if enabled(Check::Carter) {
                    for &t in grid {
                        rec.push(Check::Carter, (Some(t), None), frame.carter_residual(t));
                    }
                }
            }
            Err(e) => {
                for c in structural.iter().filter(|c| enabled(**c)) {
                    rec.push(*c, (None, None), Err::<f64, _>(&e));
                }
            }
        }
    }

    let dynamic = [Check::Poisson, Check::Commutator, Check::Decompose];
    if dynamic.iter().any(|c| enabled(*c)) {
        match FamilyFrame::new(pair, &sample.point, config.order) {
            Ok(family) => {
                let ops: Vec<_> = grid.iter().map(|&t| family.operator(t)).collect();
                let index_of = |t: f64| grid.iter().position(|&g| g == t).expect("grid value");
                if enabled(Check::Poisson) {
                    for &(t, s) in &pairs {
                        let r = bracket_at(&ops[index_of(t)], &ops[index_of(s)], &sample.covector)
                            .map(|b| b.relative());
                        if let Some(record) = rec.push(Check::Poisson, (Some(t), Some(s)), r) {
                            record.covector = Some(sample.covector.clone());
                        }
                    }
                }
                if enabled(Check::Commutator) {
                    let suite = test_function_suite(pair.coordinates());
                    let jets: Result<Vec<_>, OperatorError> = suite
                        .iter()
                        .map(|f| function_jet(f, &sample.point, COMMUTATOR_ORDER))
                        .collect();
                    for &(t, s) in &pairs {
                        let (a, b) = (&ops[index_of(t)], &ops[index_of(s)]);
                        let worst = jets.as_ref().map_err(Clone::clone).and_then(|jets| {
                            let mut worst = (0.0f64, 0usize);
                            for (k, f) in jets.iter().enumerate() {
                                let r = commutator_at(a, b, f)?.relative();
                                if r > worst.0 || r.is_nan() {
                                    worst = (r, k);
                                }
                            }
                            Ok(worst)
                        });
                        let function = worst.as_ref().ok().map(|w| suite[w.1].to_string());
                        if let Some(record) =
                            rec.push(Check::Commutator, (Some(t), Some(s)), worst.map(|w| w.0))
                        {
                            record.function = function;
                        }
                    }
                }
                if enabled(Check::Decompose) {
                    for &(t, s) in &pairs {
                        let r = decompose_at(&ops[index_of(t)], &ops[index_of(s)]).map(|d| {
                            d.q_norm()
                                .max(d.v_norm())
                                .max(d.zeroth.abs())
                                .max(d.cubic_norm() / d.scale)
                        });
                        rec.push(Check::Decompose, (Some(t), Some(s)), r);
                    }
                }
            }
            Err(e) => {
                for c in dynamic.iter().filter(|c| enabled(**c)) {
                    rec.push(*c, (None, None), Err::<f64, _>(&e));
                }
            }
        }
    }

    if enabled(Check::Drift) && !grid.is_empty() {
        let t = grid[index % grid.len()];
        let r = drift_at(pair, t, sample);
        if let Some(record) = rec.push(Check::Drift, (Some(t), None), r) {
            record.covector = Some(sample.covector.clone());
        }
    }
    rec.out
}

/// Follows the geodesic through the sample with the sample covector scaled
/// so that the trajectory stays inside the domain, halving the speed on exit.
pub fn drift_at(pair: &ProjectivePair, t: f64, sample: &Sample) -> Result<f64, OperatorError> {
    let op = QuantizedOperator::killing(pair, t);
    let room = sample
        .point
        .iter()
        .zip(pair.domain())
        .map(|(x, (lo, hi))| (x - lo).min(hi - x))
        .fold(f64::INFINITY, f64::min);
    let norm = sample.covector.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
    let mut speed = 0.5 * room / norm;
    let mut last = None;
    for _ in 0..8 {
        let p = sample.covector.iter().map(|v| v * speed).collect();
        let phi = PhaseSpacePoint::new(sample.point.clone(), p)?;
        match symbol_drift(&op, pair.domain(), &phi, DRIFT_HORIZON, DRIFT_STEP) {
            Ok(d) => return Ok(d.max_drift),
            Err(e @ OperatorError::DomainExit { .. }) => {
                last = Some(e);
                speed *= 0.5;
            }
            Err(e) => return Err(e),
        }
    }
    Err(last.expect("loop ran"))
}

/// Runs the configured checks on a pair.
pub fn verify_pair(
    name: &str,
    pair: &ProjectivePair,
    config: &VerifyConfig,
) -> Result<VerificationReport, VerifyError> {
    let started = Instant::now();
    if config.points == 0 {
        return Err(VerifyError::Config("--points must be positive".into()));
    }
    if config.t_grid.iter().any(|t| !t.is_finite()) {
        return Err(VerifyError::Config("t-grid values must be finite".into()));
    }
    if !(config.tolerance > 0.0) {
        return Err(VerifyError::Config("tolerance must be positive".into()));
    }
    let mut grid = config.t_grid.clone();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let mut checks = config.checks.clone();
    checks.sort();
    checks.dedup();
    let config = VerifyConfig {
        t_grid: grid,
        checks,
        ..config.clone()
    };

    let samples = sample_points(pair, config.points, config.seed)?;
    let run = || -> Vec<CheckRecord> {
        samples
            .par_iter()
            .enumerate()
            .map(|(k, s)| checks_at_point(pair, s, k, &config))
            .collect::<Vec<_>>()
            .into_iter()
            .flatten()
            .collect()
    };
    let mut records = match config.jobs {
        Some(jobs) => rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build()
            .map_err(|e| VerifyError::Pool(e.to_string()))?
            .install(run),
        None => run(),
    };
    // group by check, keeping point order within each check
    records.sort_by_key(|r| {
        Check::ALL
            .iter()
            .position(|c| c.id() == r.check)
            .expect("known check")
    });

    let summary = summarize(&config.checks, &records);
    Ok(VerificationReport {
        schema_version: SCHEMA_VERSION,
        pair: name.to_string(),
        config: ConfigEcho {
            points: config.points,
            order: config.order,
            tolerance: config.tolerance,
            t_grid: config.t_grid.clone(),
            seed: config.seed,
            checks: config.checks.iter().map(|c| c.id()).collect(),
            drift_horizon: DRIFT_HORIZON,
            drift_step: DRIFT_STEP,
        },
        summary,
        records,
        timing: Timing {
            elapsed_seconds: started.elapsed().as_secs_f64(),
        },
    })
}

fn summarize(checks: &[Check], records: &[CheckRecord]) -> Summary {
    let per_check: Vec<CheckSummary> = checks
        .iter()
        .map(|&c| {
            let mine: Vec<&CheckRecord> = records.iter().filter(|r| r.check == c.id()).collect();
            let failed = mine.iter().filter(|r| r.verdict == Verdict::Fail).count();
            let max_residual = mine
                .iter()
                .filter_map(|r| r.residual)
                .filter(|r| !r.is_nan())
                .reduce(f64::max);
            CheckSummary {
                check: c.id(),
                records: mine.len(),
                failed,
                max_residual,
                verdict: Verdict::of(failed == 0),
                normalization: c.normalization(),
            }
        })
        .collect();
    let failed = records.iter().filter(|r| r.verdict == Verdict::Fail).count();
    Summary {
        records: records.len(),
        passed: records.len() - failed,
        failed,
        verdict: Verdict::of(failed == 0),
        checks: per_check,
    }
}

/// Decomposition needs one more function order than the commutator.
const _: () = assert!(DECOMPOSITION_ORDER == COMMUTATOR_ORDER + 1);
