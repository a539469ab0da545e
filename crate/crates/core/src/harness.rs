//! Multi-start benchmark: one shared DR prefix per seed, branched into every
//! algorithm, with Table-style aggregate statistics.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::DEFAULT_COLINEAR_TOL;
use crate::constraints::{ProblemSpec, WaveletSets};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::solvers::{
    run_stage1, run_stage2, Algorithm, RunRecord, SolveConfig, DEFAULT_MAX_ITERS, DEFAULT_STAGE1_THRESHOLD,
    DEFAULT_TOL,
};

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "WAVEFEAS_THREADS";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct BenchConfig<T: Real> {
    pub spec: ProblemSpec<T>,
    pub n_starts: usize,
    pub base_seed: u64,
    pub tol: T,
    pub stage1_threshold: T,
    /// Applies to stage-1 plus stage-2 iterations.
    pub max_iters: usize,
    pub colinear_tol: T,
    #[serde(skip)]
    pub threads: Option<usize>,
}

impl<T: Real> BenchConfig<T> {
    pub fn new(spec: ProblemSpec<T>, n_starts: usize, base_seed: u64) -> Self {
        Self {
            spec,
            n_starts,
            base_seed,
            tol: T::lit(DEFAULT_TOL),
            stage1_threshold: T::lit(DEFAULT_STAGE1_THRESHOLD),
            max_iters: DEFAULT_MAX_ITERS,
            colinear_tol: T::lit(DEFAULT_COLINEAR_TOL),
            threads: None,
        }
    }

    fn solve_config(&self, algorithm: Algorithm, seed: u64) -> SolveConfig<T> {
        SolveConfig {
            tol: self.tol,
            stage1_threshold: self.stage1_threshold,
            max_iters: self.max_iters,
            colinear_tol: self.colinear_tol,
            ..SolveConfig::new(self.spec.clone(), algorithm, seed)
        }
    }
}

/// One seed: the shared stage-1 prefix and one run per algorithm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct Instance<T: Real> {
    pub seed: u64,
    pub stage1_iters: usize,
    pub stage1_reached: bool,
    pub runs: Vec<RunRecord<T>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmStats {
    pub algorithm: Algorithm,
    pub cases_solved: usize,
    pub solved_by_all: usize,
    pub wins: usize,
    #[serde(rename = "Q1", skip_serializing_if = "Option::is_none", default)]
    pub q1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub mean: Option<f64>,
    #[serde(rename = "Q3", skip_serializing_if = "Option::is_none", default)]
    pub q3: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub median: Option<f64>,
    /// Mean stage-2 projector evaluations over the solved-by-all subset.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub projection_evals_mean: Option<f64>,
}

/// Stage-2 iteration statistics. Quartiles, mean and median are taken over the
/// instances solved by every algorithm and are absent when there are none.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchStats {
    pub instances: usize,
    pub solved_by_all: usize,
    /// Solved-by-all instances where the fewest iterations were shared.
    pub ties: usize,
    pub algorithms: Vec<AlgorithmStats>,
}

impl BenchStats {
    pub fn get(&self, algorithm: Algorithm) -> Option<&AlgorithmStats> {
        self.algorithms.iter().find(|a| a.algorithm == algorithm)
    }

    /// `Err(EmptySolvedByAll)` when no instance was solved by every algorithm.
    pub fn require_solved_by_all(&self) -> Result<()> {
        if self.solved_by_all == 0 {
            Err(Error::EmptySolvedByAll)
        } else {
            Ok(())
        }
    }

    pub fn to_table(&self) -> String {
        let fmt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.1}"));
        let mut s = String::new();
        let _ = writeln!(s, "{:<6}{:>8}{:>8}{:>6}{:>9}{:>9}{:>9}{:>9}", "alg", "solved", "by_all", "wins", "Q1", "mean", "Q3", "median");
        for a in &self.algorithms {
            let _ = writeln!(
                s,
                "{:<6}{:>8}{:>8}{:>6}{:>9}{:>9}{:>9}{:>9}",
                a.algorithm.to_string(),
                a.cases_solved,
                a.solved_by_all,
                a.wins,
                fmt(a.q1),
                fmt(a.mean),
                fmt(a.q3),
                fmt(a.median)
            );
        }
        let _ = writeln!(s, "instances {}, ties {}", self.instances, self.ties);
        s
    }
}

/// Inclusive linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], p: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let pos = p.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    Some(sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64))
}

/// Statistics from per-algorithm record lists indexed by instance.
pub fn summarize<T: Real>(records: &[Vec<RunRecord<T>>]) -> Result<BenchStats> {
    let n = records.first().map_or(0, Vec::len);
    if let Some(bad) = records.iter().find(|r| r.len() != n) {
        return Err(Error::SizeMismatch { expected: n, found: bad.len() });
    }
    let all: Vec<usize> = (0..n).filter(|&i| records.iter().all(|r| r[i].solved)).collect();
    let mut wins = vec![0; records.len()];
    let mut ties = 0;
    for &i in &all {
        let best = records.iter().map(|r| r[i].stage2_iters).min().unwrap_or(0);
        let winners: Vec<usize> = (0..records.len()).filter(|&a| records[a][i].stage2_iters == best).collect();
        match winners.as_slice() {
            [w] => wins[*w] += 1,
            _ => ties += 1,
        }
    }
    let algorithms = records
        .iter()
        .zip(wins)
        .map(|(r, wins)| {
            let mut iters: Vec<f64> = all.iter().map(|&i| r[i].stage2_iters as f64).collect();
            iters.sort_by(f64::total_cmp);
            let mean = |v: &[f64]| (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64);
            let evals: Vec<f64> = all.iter().map(|&i| r[i].projection_evals as f64).collect();
            AlgorithmStats {
                algorithm: r.first().map_or(Algorithm::Dr, |x| x.algorithm),
                cases_solved: r.iter().filter(|x| x.solved).count(),
                solved_by_all: all.len(),
                wins,
                q1: quantile(&iters, 0.25),
                mean: mean(&iters),
                q3: quantile(&iters, 0.75),
                median: quantile(&iters, 0.5),
                projection_evals_mean: mean(&evals),
            }
        })
        .collect();
    Ok(BenchStats { instances: n, solved_by_all: all.len(), ties, algorithms })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct BenchReport<T: Real> {
    pub config: BenchConfig<T>,
    pub stats: BenchStats,
    pub instances: Vec<Instance<T>>,
}

impl<T: Real> BenchReport<T> {
    /// Records of one algorithm in seed order.
    pub fn records(&self, algorithm: Algorithm) -> Vec<&RunRecord<T>> {
        self.instances.iter().filter_map(|i| i.runs.iter().find(|r| r.algorithm == algorithm)).collect()
    }

    /// Copy with the solved ensembles dropped, for compact output.
    pub fn without_solutions(&self) -> Self {
        let mut out = self.clone();
        for r in out.instances.iter_mut().flat_map(|i| i.runs.iter_mut()) {
            r.solution = None;
        }
        out
    }
}

fn thread_count(requested: Option<usize>) -> Result<Option<usize>> {
    if let Some(n) = requested {
        return Ok(Some(n));
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse::<usize>()
            .map(|n| (n > 0).then_some(n))
            .map_err(|_| Error::InvalidConfig(format!("{THREADS_ENV} must be a positive integer, got {v:?}"))),
        _ => Ok(None),
    }
}

pub fn run_instance<T: Real>(sets: &WaveletSets<T>, cfg: &BenchConfig<T>, seed: u64) -> Result<Instance<T>> {
    let s1 = run_stage1(sets, &cfg.solve_config(Algorithm::Dr, seed))?;
    let runs = Algorithm::ALL.iter().map(|&alg| run_stage2(sets, &s1, &cfg.solve_config(alg, seed))).collect();
    Ok(Instance {
        seed,
        stage1_iters: s1.stage.iters,
        stage1_reached: s1.stage.reached(cfg.stage1_threshold),
        runs,
    })
}

/// Runs `n_starts` seeds `base_seed, base_seed + 1, …` in parallel and
/// merges them in seed order.
pub fn run_bench<T: Real>(cfg: &BenchConfig<T>) -> Result<BenchReport<T>> {
    if cfg.n_starts < 1 {
        return Err(Error::InvalidConfig("n_starts must be at least 1".into()));
    }
    cfg.solve_config(Algorithm::Dr, cfg.base_seed).validate()?;
    let sets = WaveletSets::new(cfg.spec.clone())?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_count(cfg.threads)? {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let instances: Vec<Instance<T>> = pool.install(|| {
        (0..cfg.n_starts as u64)
            .into_par_iter()
            .map(|i| run_instance(&sets, cfg, cfg.base_seed.wrapping_add(i)))
            .collect::<Result<_>>()
    })?;
    let per_alg: Vec<Vec<RunRecord<T>>> = (0..Algorithm::ALL.len())
        .map(|a| instances.iter().map(|inst| inst.runs[a].clone()).collect())
        .collect();
    let stats = summarize(&per_alg)?;
    Ok(BenchReport { config: cfg.clone(), stats, instances })
}
