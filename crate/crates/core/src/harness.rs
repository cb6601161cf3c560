//! Experiment runner: simulate from a known source, fit a model, and score
//! it by the total variation distance between the source's and the model's
//! distributions over words of a fixed length.
//!
//! Every trial's data depends only on `(seed, N, trial)`, so the same data
//! is shared by all methods and `L_max` values of a cell and adding trials
//! never changes earlier rows.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::baselines::{cross_validate, hmm_word_distribution, vlmm_learn, EmConfig};
use crate::cssr::{run_cssr_on_tree, CssrConfig};
use crate::error::{CssrError, Result};
use crate::machine::{CausalStateMachine, WordDistribution};
use crate::parse_tree::ParseTree;
use crate::seed::derive_seed;
use crate::sources::{even_process, ProcessSpec, SEVEN_STATE_SPEC};
use crate::stats::TestKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    #[serde(alias = "CSSR")]
    Cssr,
    #[serde(alias = "CV-EM", alias = "em")]
    CvEm,
    #[serde(alias = "VLMM")]
    Vlmm,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Cssr => "cssr",
            Method::CvEm => "cv-em",
            Method::Vlmm => "vlmm",
        })
    }
}

/// EM baseline settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmSettings {
    /// State counts 1..=m_max are tried.
    pub m_max: usize,
    pub restarts: usize,
    pub max_iters: usize,
    pub tol: f64,
    /// Cells with larger N are skipped for this method.
    pub max_n: usize,
}

impl Default for EmSettings {
    fn default() -> Self {
        EmSettings { m_max: 10, restarts: 5, max_iters: 500, tol: 1e-6, max_n: 10_000 }
    }
}

/// One experiment, usually read from a TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_name")]
    pub name: String,
    /// `even`, `seven-state`, or a path to a process spec file.
    pub source: String,
    pub methods: Vec<Method>,
    pub n_values: Vec<usize>,
    #[serde(default = "default_l_max")]
    pub l_max_values: Vec<usize>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub test: TestKind,
    #[serde(default = "default_min_count")]
    pub min_count: u64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_l_eval")]
    pub l_eval: usize,
    #[serde(default)]
    pub em: EmSettings,
}

fn default_name() -> String {
    "experiment".into()
}
fn default_l_max() -> Vec<usize> {
    vec![5]
}
fn default_alpha() -> f64 {
    1e-3
}
fn default_min_count() -> u64 {
    1
}
fn default_trials() -> usize {
    30
}
fn default_l_eval() -> usize {
    10
}

impl ExperimentConfig {
    /// A config with defaults for everything but the source, methods and
    /// sample sizes.
    pub fn new(source: &str, methods: Vec<Method>, n_values: Vec<usize>) -> Self {
        ExperimentConfig {
            name: default_name(),
            source: source.into(),
            methods,
            n_values,
            l_max_values: default_l_max(),
            alpha: default_alpha(),
            test: TestKind::default(),
            min_count: default_min_count(),
            trials: default_trials(),
            seed: 0,
            l_eval: default_l_eval(),
            em: EmSettings::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CssrError::InvalidConfig(e.to_string()))
    }

    /// Reads a config file; a relative spec path is taken relative to the
    /// file's directory.
    pub fn from_file(path: &Path) -> Result<Self> {
        let mut cfg = Self::from_toml(&std::fs::read_to_string(path)?)?;
        if !is_builtin(&cfg.source) {
            let p = Path::new(&cfg.source);
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    cfg.source = dir.join(p).to_string_lossy().into_owned();
                }
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(CssrError::InvalidConfig(m.into()));
        if self.trials == 0 {
            return bad("trials must be at least 1");
        }
        if self.n_values.is_empty() || self.n_values.contains(&0) {
            return bad("n_values must be nonempty and every N at least 1");
        }
        if self.methods.is_empty() {
            return bad("no methods given");
        }
        if self.l_max_values.is_empty() {
            return bad("l_max_values must be nonempty");
        }
        if self.em.m_max == 0 || self.em.restarts == 0 {
            return bad("em.m_max and em.restarts must be at least 1");
        }
        CssrConfig { l_max: 0, alpha: self.alpha, test: self.test, min_count: self.min_count }.validate()
    }
}

fn is_builtin(source: &str) -> bool {
    matches!(source, "even" | "seven-state" | "seven_state")
}

/// Resolves a source name or spec path to a machine.
pub fn load_source(source: &str) -> Result<CausalStateMachine> {
    match source {
        "even" => Ok(even_process()),
        "seven-state" | "seven_state" => ProcessSpec::parse(SEVEN_STATE_SPEC)?.build(),
        path => ProcessSpec::parse(&std::fs::read_to_string(path)?)?.build(),
    }
}

/// Seconds spent in each stage of a CSSR run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseTimes {
    pub parse_tree: f64,
    pub phase2: f64,
    pub phase3: f64,
}

/// Outcome of one method on one data set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub method: Method,
    pub source: String,
    pub n: usize,
    /// Zero for methods that take no history length.
    pub l_max: usize,
    pub alpha: f64,
    pub trial: usize,
    /// States (CSSR, EM) or contexts (VLMM); `None` when the trial failed.
    pub states: Option<usize>,
    pub tv_dist: Option<f64>,
    pub seconds: f64,
    /// Seed of the training data.
    pub seed: u64,
    /// Observed transitions that had no successor state and were dropped.
    pub sync_failures: u64,
    pub phases: PhaseTimes,
    /// Unifilar and strongly connected; always true for EM rows.
    pub valid_machine: bool,
    pub error: Option<String>,
}

/// Mean and spread of one (method, N, L_max) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub method: Method,
    pub source: String,
    pub n: usize,
    pub l_max: usize,
    pub alpha: f64,
    pub trials: usize,
    pub failures: usize,
    pub states_mean: f64,
    pub states_std: f64,
    /// Most common state count; smallest on ties.
    pub states_mode: Option<usize>,
    pub tv_mean: f64,
    pub tv_std: f64,
    pub seconds_mean: f64,
    /// More than a tenth of the trials failed.
    pub flagged: bool,
}

/// All rows of an experiment plus per-cell summaries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResults {
    pub name: String,
    pub source: String,
    pub true_states: usize,
    pub rows: Vec<TrialResult>,
    pub cells: Vec<CellSummary>,
    pub warnings: Vec<String>,
}

/// Mean and sample standard deviation (zero for a single value).
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Seed of the training data for `(n, trial)`.
pub fn data_seed(master: u64, n: usize, trial: usize) -> u64 {
    derive_seed(master, &[n as u64, trial as u64, 0])
}

fn test_seed(master: u64, n: usize, trial: usize) -> u64 {
    derive_seed(master, &[n as u64, trial as u64, 1])
}

fn em_seed(master: u64, n: usize, trial: usize) -> u64 {
    derive_seed(master, &[n as u64, trial as u64, 2])
}

struct Fitted {
    states: usize,
    dist: WordDistribution,
    sync_failures: u64,
    phases: PhaseTimes,
    valid: bool,
}

/// Runs every (method, N, L_max, trial) combination. Individual trial
/// failures are recorded in their rows.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResults> {
    config.validate()?;
    let source = load_source(&config.source)?;
    let truth = source.word_distribution(config.l_eval)?;
    let alphabet = source.alphabet().clone();
    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    let mut methods = config.methods.clone();
    methods.sort();
    methods.dedup();

    for &n in &config.n_values {
        for trial in 0..config.trials {
            let seed = data_seed(config.seed, n, trial);
            let data = source.simulate(n, seed);
            for &method in &methods {
                let l_values: Vec<usize> = if method == Method::CvEm { vec![0] } else { config.l_max_values.clone() };
                if method == Method::CvEm && n > config.em.max_n {
                    if trial == 0 {
                        warnings.push(format!("cv-em skipped at N = {n} (cap {})", config.em.max_n));
                    }
                    continue;
                }
                for l_max in l_values {
                    let start = Instant::now();
                    let fitted: Result<Fitted> = match method {
                        Method::Cssr => {
                            let cfg = CssrConfig { l_max, alpha: config.alpha, test: config.test, min_count: config.min_count };
                            let t = Instant::now();
                            ParseTree::build(&data, alphabet.len(), l_max).and_then(|tree| {
                                let parse = t.elapsed().as_secs_f64();
                                let out = run_cssr_on_tree(&tree, &alphabet, &cfg)?;
                                let m = out.machine;
                                Ok(Fitted {
                                    states: m.num_states(),
                                    dist: m.word_distribution(config.l_eval)?,
                                    sync_failures: out.diagnostics.dropped_transitions,
                                    phases: PhaseTimes {
                                        parse_tree: parse,
                                        phase2: out.diagnostics.phase2_time.as_secs_f64(),
                                        phase3: out.diagnostics.phase3_time.as_secs_f64(),
                                    },
                                    valid: m.is_unifilar() && m.is_strongly_connected(),
                                })
                            })
                        }
                        Method::Vlmm => {
                            let cfg = CssrConfig { l_max, alpha: config.alpha, test: config.test, min_count: config.min_count };
                            ParseTree::build(&data, alphabet.len(), l_max).and_then(|tree| {
                                let ctx = vlmm_learn(&tree, &cfg)?;
                                let (m, dropped) = ctx.to_machine(&alphabet)?;
                                Ok(Fitted {
                                    states: ctx.num_contexts(),
                                    dist: m.word_distribution(config.l_eval)?,
                                    sync_failures: dropped as u64,
                                    phases: PhaseTimes::default(),
                                    valid: m.is_unifilar() && m.is_strongly_connected(),
                                })
                            })
                        }
                        Method::CvEm => {
                            let test = source.simulate(n, test_seed(config.seed, n, trial));
                            let em = EmConfig { max_iters: config.em.max_iters, tol: config.em.tol, restarts: config.em.restarts };
                            let ms: Vec<usize> = (1..=config.em.m_max).collect();
                            cross_validate(&data, &test, alphabet.len(), &ms, &em, em_seed(config.seed, n, trial)).and_then(
                                |cv| {
                                    Ok(Fitted {
                                        states: cv.selected_states(),
                                        dist: hmm_word_distribution(&cv.selected, config.l_eval)?,
                                        sync_failures: 0,
                                        phases: PhaseTimes::default(),
                                        valid: true,
                                    })
                                },
                            )
                        }
                    };
                    let seconds = start.elapsed().as_secs_f64();
                    let mut row = TrialResult {
                        method,
                        source: config.source.clone(),
                        n,
                        l_max,
                        alpha: config.alpha,
                        trial,
                        states: None,
                        tv_dist: None,
                        seconds,
                        seed,
                        sync_failures: 0,
                        phases: PhaseTimes::default(),
                        valid_machine: false,
                        error: None,
                    };
                    match fitted.and_then(|f| Ok((f.dist.tv_distance(&truth)?, f))) {
                        Ok((tv, f)) => {
                            row.states = Some(f.states);
                            row.tv_dist = Some(tv);
                            row.sync_failures = f.sync_failures;
                            row.phases = f.phases;
                            row.valid_machine = f.valid;
                        }
                        Err(e) => {
                            log::warn!("{method} N={n} L_max={l_max} trial {trial} failed: {e}");
                            row.error = Some(e.to_string());
                        }
                    }
                    rows.push(row);
                }
            }
        }
    }
    rows.sort_by(|a, b| {
        (a.method, a.n, a.l_max, a.trial).cmp(&(b.method, b.n, b.l_max, b.trial))
    });
    let cells = summarize(&rows);
    Ok(ExperimentResults {
        name: config.name.clone(),
        source: config.source.clone(),
        true_states: source.num_states(),
        rows,
        cells,
        warnings,
    })
}

/// Groups rows by (method, N, L_max).
pub fn summarize(rows: &[TrialResult]) -> Vec<CellSummary> {
    let mut groups: BTreeMap<(Method, usize, usize), Vec<&TrialResult>> = BTreeMap::new();
    for r in rows {
        groups.entry((r.method, r.n, r.l_max)).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((method, n, l_max), rs)| {
            let ok: Vec<&&TrialResult> = rs.iter().filter(|r| r.error.is_none()).collect();
            let states: Vec<f64> = ok.iter().filter_map(|r| r.states).map(|s| s as f64).collect();
            let tvs: Vec<f64> = ok.iter().filter_map(|r| r.tv_dist).collect();
            let secs: Vec<f64> = rs.iter().map(|r| r.seconds).collect();
            let (states_mean, states_std) = mean_std(&states);
            let (tv_mean, tv_std) = mean_std(&tvs);
            let mut freq: BTreeMap<usize, usize> = BTreeMap::new();
            for r in &ok {
                if let Some(s) = r.states {
                    *freq.entry(s).or_default() += 1;
                }
            }
            let states_mode = freq.iter().max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0))).map(|(s, _)| *s);
            let failures = rs.len() - ok.len();
            CellSummary {
                method,
                source: rs[0].source.clone(),
                n,
                l_max,
                alpha: rs[0].alpha,
                trials: rs.len(),
                failures,
                states_mean,
                states_std,
                states_mode,
                tv_mean,
                tv_std,
                seconds_mean: mean_std(&secs).0,
                flagged: failures * 10 > rs.len(),
            }
        })
        .collect()
}

/// Column order of [`ExperimentResults::to_csv`].
pub const CSV_HEADER: &str = "method,source,N,L_max,alpha,trial,states,tv_dist,seconds,seed";

impl ExperimentResults {
    /// One line per trial; failed trials leave `states` and `tv_dist` empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let source = if r.source.contains([',', '"']) { format!("\"{}\"", r.source.replace('"', "\"\"")) } else { r.source.clone() };
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{:.6},{}",
                r.method,
                source,
                r.n,
                r.l_max,
                r.alpha,
                r.trial,
                r.states.map(|s| s.to_string()).unwrap_or_default(),
                r.tv_dist.map(|d| format!("{d:.17e}")).unwrap_or_default(),
                r.seconds,
                r.seed
            );
        }
        out
    }

    /// Per-cell means and standard deviations plus warnings.
    pub fn summary_json(&self) -> String {
        #[derive(Serialize)]
        struct Summary<'a> {
            name: &'a str,
            source: &'a str,
            true_states: usize,
            cells: &'a [CellSummary],
            warnings: &'a [String],
        }
        serde_json::to_string_pretty(&Summary {
            name: &self.name,
            source: &self.source,
            true_states: self.true_states,
            cells: &self.cells,
            warnings: &self.warnings,
        })
        .expect("summary serializes")
    }

    pub fn cell(&self, method: Method, n: usize, l_max: usize) -> Option<&CellSummary> {
        self.cells.iter().find(|c| c.method == method && c.n == n && c.l_max == l_max)
    }

    /// Writes `results.csv` and `summary.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("results.csv"), self.to_csv())?;
        std::fs::write(dir.join("summary.json"), self.summary_json())?;
        Ok(())
    }
}

/// One cell of the error-scaling table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub n: usize,
    pub l_max: usize,
    pub tv_mean: f64,
    pub scaled: f64,
    pub included: bool,
    pub reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub rows: Vec<ScalingRow>,
    /// Max over min of `tv_mean * sqrt(N)` among included cells.
    pub spread: Option<f64>,
}

/// `tv_mean * sqrt(N)` per cell of `method`. Cells where most trials failed
/// or missed `true_states` are excluded, since their error does not shrink
/// with N.
pub fn scaling_report(results: &ExperimentResults, method: Method, true_states: Option<usize>) -> ScalingReport {
    let mut rows = Vec::new();
    for c in results.cells.iter().filter(|c| c.method == method) {
        let correct = results
            .rows
            .iter()
            .filter(|r| r.method == method && r.n == c.n && r.l_max == c.l_max)
            .filter(|r| r.error.is_none() && true_states.map_or(true, |t| r.states == Some(t)))
            .count();
        let reason = if c.failures == c.trials {
            Some("all trials failed".to_string())
        } else if correct * 2 < c.trials {
            Some(format!("only {correct} of {} trials found the right states", c.trials))
        } else {
            None
        };
        rows.push(ScalingRow {
            n: c.n,
            l_max: c.l_max,
            tv_mean: c.tv_mean,
            scaled: c.tv_mean * (c.n as f64).sqrt(),
            included: reason.is_none(),
            reason,
        });
    }
    let included: Vec<f64> = rows.iter().filter(|r| r.included).map(|r| r.scaled).collect();
    let spread = (included.len() >= 2).then(|| {
        let max = included.iter().cloned().fold(f64::MIN, f64::max);
        let min = included.iter().cloned().fold(f64::MAX, f64::min);
        max / min
    });
    ScalingReport { rows, spread }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuntimeRow {
    pub n: usize,
    pub l_max: usize,
    pub seconds_mean: f64,
    pub per_symbol: f64,
    pub phases: PhaseTimes,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuntimeReport {
    pub rows: Vec<RuntimeRow>,
    /// Max over min per-symbol cost at each L_max, worst case.
    pub per_symbol_spread: f64,
    /// Least-squares slope of log(seconds) against log(N); 1 is linear.
    pub log_log_slope: Option<f64>,
}

/// Per-symbol cost of `method` across N.
pub fn runtime_report(results: &ExperimentResults, method: Method) -> RuntimeReport {
    let mut rows = Vec::new();
    for c in results.cells.iter().filter(|c| c.method == method) {
        let rs: Vec<&TrialResult> =
            results.rows.iter().filter(|r| r.method == method && r.n == c.n && r.l_max == c.l_max).collect();
        let k = rs.len() as f64;
        let phases = PhaseTimes {
            parse_tree: rs.iter().map(|r| r.phases.parse_tree).sum::<f64>() / k,
            phase2: rs.iter().map(|r| r.phases.phase2).sum::<f64>() / k,
            phase3: rs.iter().map(|r| r.phases.phase3).sum::<f64>() / k,
        };
        rows.push(RuntimeRow {
            n: c.n,
            l_max: c.l_max,
            seconds_mean: c.seconds_mean,
            per_symbol: c.seconds_mean / c.n as f64,
            phases,
        });
    }
    let mut spread: f64 = 1.0;
    let mut by_l: BTreeMap<usize, Vec<&RuntimeRow>> = BTreeMap::new();
    for r in &rows {
        by_l.entry(r.l_max).or_default().push(r);
    }
    for rs in by_l.values() {
        let max = rs.iter().map(|r| r.per_symbol).fold(f64::MIN, f64::max);
        let min = rs.iter().map(|r| r.per_symbol).fold(f64::MAX, f64::min);
        spread = spread.max(max / min);
    }
    let pts: Vec<(f64, f64)> =
        rows.iter().filter(|r| r.seconds_mean > 0.0).map(|r| ((r.n as f64).ln(), r.seconds_mean.ln())).collect();
    let log_log_slope = (pts.len() >= 2).then(|| {
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        sxy / sxx
    });
    RuntimeReport { rows, per_symbol_spread: spread, log_log_slope }
}
