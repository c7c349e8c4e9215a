//! Success probabilities of verifier-guided best-of-N versus majority
//! voting when each of `K` steps is independently right with probability
//! `q`: the closed form for the former, Monte-Carlo for the latter, and a
//! bridge that measures both through the real scaling harness.

use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;
use crate::scaling::{majority, score_candidates, select, AggregationRule, Problem, Ranking, ScalingError, ScriptedGenerator};
use crate::verifier::{mix64, Verifier};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("parameter out of domain: {0}")]
    DomainError(String),
    #[error("majority beats verifier-guided selection at q={q} K={k} N={n} L={l}: {maj} > {pbm} + 3 se")]
    DominanceViolation {
        q: f64,
        k: usize,
        n: usize,
        l: usize,
        pbm: f64,
        maj: f64,
    },
    #[error(transparent)]
    Scaling(#[from] ScalingError),
}

fn domain(msg: String) -> AnalysisError {
    AnalysisError::DomainError(msg)
}

/// One point of the (q, K, N, L) regime grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeParams {
    /// Per-step correctness probability.
    pub q: f64,
    /// Steps per trajectory.
    pub k: usize,
    /// Trajectories sampled.
    pub n: usize,
    /// Answer candidates.
    pub l: usize,
    pub trials: u64,
    pub seed: u64,
}

impl RegimeParams {
    pub fn validate(&self) -> Result<(), AnalysisError> {
        if !(0.0..=1.0).contains(&self.q) {
            return Err(domain(format!("q = {} outside [0, 1]", self.q)));
        }
        if self.k == 0 || self.n == 0 || self.trials == 0 {
            return Err(domain(format!(
                "K, N and trials must be positive (K={}, N={}, trials={})",
                self.k, self.n, self.trials
            )));
        }
        if self.l < 2 {
            return Err(domain(format!("L must be at least 2, got {}", self.l)));
        }
        if self.k > i32::MAX as usize {
            return Err(domain(format!("K = {} too large", self.k)));
        }
        Ok(())
    }

    /// Probability that a single trajectory is entirely correct.
    pub fn good_prob(&self) -> f64 {
        self.q.powi(self.k as i32)
    }
}

/// A Monte-Carlo proportion with its standard error `sqrt(p(1-p)/trials)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate<T> {
    pub p: T,
    pub stderr: T,
    pub successes: u64,
    pub trials: u64,
}

impl<T: Scalar> Estimate<T> {
    pub fn from_counts(successes: u64, trials: u64) -> Self {
        let p = successes as f64 / trials as f64;
        Estimate {
            p: T::of(p),
            stderr: T::of((p * (1.0 - p) / trials as f64).sqrt()),
            successes,
            trials,
        }
    }

    /// Whether `expected` lies within `z` standard errors of the estimate,
    /// with the standard error taken under `expected` itself.
    pub fn agrees_with(&self, expected: f64, z: f64) -> bool {
        let se = (expected * (1.0 - expected) / self.trials as f64).sqrt();
        (self.p.to_f64_lossy() - expected).abs() <= z * se
    }
}

/// `1 - (1 - q^K)^N`, evaluated as `-expm1(N * ln1p(-q^K))` so that tiny
/// and near-one values keep their precision.
pub fn pbm_success<T: Scalar>(q: T, k: usize, n: usize) -> Result<T, AnalysisError> {
    if q.is_nan() || q < T::zero() || q > T::one() {
        return Err(domain(format!("q = {q} outside [0, 1]")));
    }
    if k == 0 || n == 0 || k > i32::MAX as usize {
        return Err(domain(format!("K and N must be positive (K={k}, N={n})")));
    }
    let good = q.powi(k as i32);
    let log_all_bad = T::of(n as f64) * (-good).ln_1p();
    Ok(-log_all_bad.exp_m1())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeResult<T> {
    pub params: RegimeParams,
    pub a_pbm_closed: T,
    /// Fraction of trials with at least one fully correct trajectory.
    pub a_pbm_mc: Estimate<T>,
    /// Fraction of trials where the correct answer strictly out-votes every
    /// wrong answer.
    pub a_maj_mc: Estimate<T>,
}

fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix64(mix64(seed) ^ trial))
}

/// One simulated trial: `G ~ Binomial(N, q^K)` good trajectories, the other
/// `R = N - G` scattered uniformly over `L - 1` wrong answers (drawn as a
/// multinomial through successive conditional binomials). Returns
/// (verifier success, majority success).
fn simulate_trial(params: &RegimeParams, good: &Binomial, trial: u64) -> (bool, bool) {
    let mut rng = trial_rng(params.seed, trial);
    let g = good.sample(&mut rng);
    let pbm = g >= 1;
    let mut rest = params.n as u64 - g;
    let mut max_bad = 0;
    for j in 0..params.l - 1 {
        let bins_left = (params.l - 1 - j) as f64;
        let b = if bins_left <= 1.0 || rest == 0 {
            rest
        } else {
            Binomial::new(rest, 1.0 / bins_left)
                .expect("valid binomial")
                .sample(&mut rng)
        };
        rest -= b;
        max_bad = max_bad.max(b);
        if max_bad >= g {
            break;
        }
    }
    (pbm, pbm && g > max_bad)
}

/// Monte-Carlo success rates of both selectors under the scattering model,
/// plus the closed form. Trials draw from independent per-trial streams, so
/// the result does not depend on thread count.
pub fn majority_success<T: Scalar>(params: &RegimeParams) -> Result<RegimeResult<T>, AnalysisError> {
    params.validate()?;
    let good = Binomial::new(params.n as u64, params.good_prob()).map_err(|e| domain(e.to_string()))?;
    let (pbm, maj) = (0..params.trials)
        .into_par_iter()
        .map(|t| {
            let (p, m) = simulate_trial(params, &good, t);
            (u64::from(p), u64::from(m))
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    Ok(RegimeResult {
        params: *params,
        a_pbm_closed: pbm_success(T::of(params.q), params.k, params.n)?,
        a_pbm_mc: Estimate::from_counts(pbm, params.trials),
        a_maj_mc: Estimate::from_counts(maj, params.trials),
    })
}

/// Success rates measured through the scaling harness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarnessResult<T> {
    pub params: RegimeParams,
    /// Vanilla best-of-N with min aggregation and the exact verifier.
    pub bon_min: Estimate<T>,
    /// Majority vote over the same sampled traces.
    pub majority: Estimate<T>,
}

/// Runs the scripted generator, exact verifier and best-of-N (min rule)
/// on a fresh `K`-step synthetic problem per trial, counting how often the
/// selected answer is the gold one; majority voting is scored on the same
/// candidates.
pub fn harness_success<T: Scalar>(params: &RegimeParams) -> Result<HarnessResult<T>, AnalysisError> {
    params.validate()?;
    let generator = ScriptedGenerator::new(params.q, params.seed)?;
    let verifier = Verifier::exact();
    let (bon, maj) = (0..params.trials)
        .into_par_iter()
        .map(|t| -> Result<(u64, u64), ScalingError> {
            let problem = Problem::synthetic(t, params.k, params.l);
            let gold = problem.gold_answer();
            let cands = score_candidates::<T, _>(&problem, &generator, &verifier, params.n)?;
            let bon = select(&cands, AggregationRule::Min, Ranking::Vanilla).answer == gold;
            let maj = majority::<T>(cands.iter().map(|c| &c.answer)).answer == gold;
            Ok((u64::from(bon), u64::from(maj)))
        })
        .try_reduce(|| (0, 0), |a, b| Ok((a.0 + b.0, a.1 + b.1)))?;
    Ok(HarnessResult {
        params: *params,
        bon_min: Estimate::from_counts(bon, params.trials),
        majority: Estimate::from_counts(maj, params.trials),
    })
}

/// Axis values for a regime sweep. Parses `q=0.5,0.7;K=1,4;N=64;L=5`; axes
/// left out keep their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub q: Vec<f64>,
    pub k: Vec<usize>,
    pub n: Vec<usize>,
    pub l: Vec<usize>,
}

impl Default for Grid {
    fn default() -> Self {
        Grid {
            q: vec![0.5, 0.7, 0.9],
            k: vec![1, 4, 16],
            n: vec![4, 64, 1024],
            l: vec![5],
        }
    }
}

impl Grid {
    pub fn points(&self, trials: u64, seed: u64) -> Vec<RegimeParams> {
        let mut out = Vec::new();
        for &q in &self.q {
            for &k in &self.k {
                for &n in &self.n {
                    for &l in &self.l {
                        out.push(RegimeParams {
                            q,
                            k,
                            n,
                            l,
                            trials,
                            seed,
                        });
                    }
                }
            }
        }
        out
    }
}

fn parse_list<V: FromStr>(axis: &str, values: &str) -> Result<Vec<V>, AnalysisError> {
    let out: Vec<V> = values
        .split(',')
        .map(|v| v.trim().parse().map_err(|_| domain(format!("bad value `{v}` for {axis}"))))
        .collect::<Result<_, _>>()?;
    if out.is_empty() {
        return Err(domain(format!("axis {axis} is empty")));
    }
    Ok(out)
}

impl FromStr for Grid {
    type Err = AnalysisError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut grid = Grid::default();
        for part in s.split(';').map(str::trim).filter(|p| !p.is_empty()) {
            let (axis, values) = part
                .split_once('=')
                .ok_or_else(|| domain(format!("expected axis=values, got `{part}`")))?;
            match axis.trim() {
                "q" => grid.q = parse_list(axis, values)?,
                "K" | "k" => grid.k = parse_list(axis, values)?,
                "N" | "n" => grid.n = parse_list(axis, values)?,
                "L" | "l" => grid.l = parse_list(axis, values)?,
                other => return Err(domain(format!("unknown axis `{other}`"))),
            }
        }
        Ok(grid)
    }
}

/// One line of the sweep table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub q: f64,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "L")]
    pub l: usize,
    pub trials: u64,
    pub a_pbm_closed: f64,
    pub a_pbm_mc: f64,
    pub a_pbm_se: f64,
    pub a_maj_mc: f64,
    pub a_maj_se: f64,
}

impl<T: Scalar> From<&RegimeResult<T>> for SweepRow {
    fn from(r: &RegimeResult<T>) -> Self {
        SweepRow {
            q: r.params.q,
            k: r.params.k,
            n: r.params.n,
            l: r.params.l,
            trials: r.params.trials,
            a_pbm_closed: r.a_pbm_closed.to_f64_lossy(),
            a_pbm_mc: r.a_pbm_mc.p.to_f64_lossy(),
            a_pbm_se: r.a_pbm_mc.stderr.to_f64_lossy(),
            a_maj_mc: r.a_maj_mc.p.to_f64_lossy(),
            a_maj_se: r.a_maj_mc.stderr.to_f64_lossy(),
        }
    }
}

/// Whether majority stays within three combined standard errors of the
/// verifier-guided rate.
pub fn dominance_holds<T: Scalar>(pbm: &Estimate<T>, maj: &Estimate<T>) -> bool {
    let (p, m) = (pbm.p.to_f64_lossy(), maj.p.to_f64_lossy());
    let se = (pbm.stderr.to_f64_lossy().powi(2) + maj.stderr.to_f64_lossy().powi(2)).sqrt();
    m <= p + 3.0 * se
}

/// Runs every grid point and checks that majority never beats verifier
/// guided selection beyond noise.
pub fn sweep(grid: &[RegimeParams]) -> Result<Vec<SweepRow>, AnalysisError> {
    if grid.is_empty() {
        return Err(domain("empty grid".into()));
    }
    let mut rows = Vec::with_capacity(grid.len());
    for params in grid {
        let r = majority_success::<f64>(params)?;
        if !dominance_holds(&r.a_pbm_mc, &r.a_maj_mc) {
            return Err(AnalysisError::DominanceViolation {
                q: params.q,
                k: params.k,
                n: params.n,
                l: params.l,
                pbm: r.a_pbm_mc.p,
                maj: r.a_maj_mc.p,
            });
        }
        rows.push(SweepRow::from(&r));
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(q: f64, k: usize, n: usize, l: usize, trials: u64) -> RegimeParams {
        RegimeParams {
            q,
            k,
            n,
            l,
            trials,
            seed: 1,
        }
    }

    #[test]
    fn closed_form_spot_values() {
        assert_eq!(pbm_success(0.5f64, 2, 2).unwrap(), 0.4375);
        let v = pbm_success(0.9f64, 4, 4).unwrap();
        assert_eq!(format!("{v:.5}"), "0.98601");
        assert_eq!(pbm_success(1.0f64, 7, 3).unwrap(), 1.0);
        assert_eq!(pbm_success(0.0f32, 7, 3).unwrap(), 0.0);
        assert!((pbm_success(0.5f32, 2, 2).unwrap() - 0.4375).abs() < 1e-6);
    }

    #[test]
    fn closed_form_domain() {
        assert!(pbm_success(1.2f64, 1, 1).is_err());
        assert!(pbm_success(f64::NAN, 1, 1).is_err());
        assert!(pbm_success(0.5f64, 0, 1).is_err());
        assert!(pbm_success(0.5f64, 1, 0).is_err());
    }

    #[test]
    fn certain_steps_always_win() {
        let r = majority_success::<f64>(&params(1.0, 3, 9, 5, 500)).unwrap();
        assert_eq!(r.a_maj_mc.p, 1.0);
        assert_eq!(r.a_pbm_mc.p, 1.0);
    }

    #[test]
    fn single_trajectory_is_q_to_the_k() {
        let p = params(0.8, 3, 1, 4, 20_000);
        let r = majority_success::<f64>(&p).unwrap();
        assert!(r.a_maj_mc.agrees_with(p.good_prob(), 3.0));
        assert_eq!(r.a_maj_mc, r.a_pbm_mc);
    }

    #[test]
    fn grid_parsing() {
        let g: Grid = "q=1".parse().unwrap();
        assert_eq!(g.q, [1.0]);
        assert_eq!(g.k, Grid::default().k);
        assert_eq!(Grid::default().points(10, 0).len(), 27);
        let g: Grid = "q=0.6; K=4; N=1024; L=5".parse().unwrap();
        assert_eq!(g.points(1, 0).len(), 1);
        assert!("z=3".parse::<Grid>().is_err());
        assert!("q=abc".parse::<Grid>().is_err());
    }

    #[test]
    fn domain_errors() {
        assert!(majority_success::<f64>(&params(0.5, 1, 1, 1, 10)).is_err());
        assert!(majority_success::<f64>(&params(0.5, 1, 1, 2, 0)).is_err());
        assert!(sweep(&[]).is_err());
    }
}
