//! Exact inference on the two-state coding chain with per-minute transitions.
//!
//! State 0 is coding, state 1 is not coding. The transition into minute `t`
//! uses `start[t]` and `end[t]`; the values at `t = 0` only define the initial
//! distribution, the stationary law `S / (S + E)` of that first matrix.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CODING: usize = 0;
pub const NOT_CODING: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum State {
    Coding,
    NotCoding,
}

/// Probability of the observation in one minute given the hidden state.
pub fn emission_prob(state: State, observed_commit: bool, commit_prob: f64) -> f64 {
    match (state, observed_commit) {
        (State::Coding, true) => commit_prob,
        (State::Coding, false) => 1.0 - commit_prob,
        (State::NotCoding, true) => 0.0,
        (State::NotCoding, false) => 1.0,
    }
}

fn emissions(observed: bool, c: f64) -> [f64; 2] {
    [
        emission_prob(State::Coding, observed, c),
        emission_prob(State::NotCoding, observed, c),
    ]
}

/// Per-minute transition probabilities and the commit probability.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainSchedule {
    pub start: Vec<f64>,
    pub end: Vec<f64>,
    pub commit: f64,
}

impl ChainSchedule {
    pub fn constant(len: usize, start: f64, end: f64, commit: f64) -> Self {
        ChainSchedule {
            start: vec![start; len],
            end: vec![end; len],
            commit,
        }
    }

    pub fn len(&self) -> usize {
        self.start.len()
    }

    pub fn is_empty(&self) -> bool {
        self.start.is_empty()
    }

    pub fn initial(&self) -> [f64; 2] {
        let (s, e) = (self.start[0], self.end[0]);
        let p = s / (s + e);
        [p, 1.0 - p]
    }

    /// Row-stochastic matrix for the transition into minute `t`.
    pub fn matrix(&self, t: usize) -> [[f64; 2]; 2] {
        let (s, e) = (self.start[t], self.end[t]);
        [[1.0 - e, e], [s, 1.0 - s]]
    }

    /// Predicted state distribution at `t` from the filtered one at `t − 1`.
    fn predict(&self, prev: &[f64; 2], t: usize) -> [f64; 2] {
        let a = self.matrix(t);
        [
            prev[0] * a[0][0] + prev[1] * a[1][0],
            prev[0] * a[0][1] + prev[1] * a[1][1],
        ]
    }
}

/// Per-minute coding probabilities in hindsight (smoothed) and live (filtered) mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodingPosterior {
    pub smoothed: Vec<f64>,
    pub filtered: Vec<f64>,
    pub log_likelihood: f64,
}

/// Scaled forward pass plus smoothed marginals, kept for sampling.
#[derive(Debug, Clone)]
pub struct Inference {
    schedule: ChainSchedule,
    alpha: Vec<[f64; 2]>,
    smoothed: Vec<f64>,
    log_likelihood: f64,
}

struct Forward {
    alpha: Vec<[f64; 2]>,
    norm: Vec<f64>,
    log_likelihood: f64,
}

fn forward(schedule: &ChainSchedule, obs: &[bool]) -> Result<Forward> {
    let n = obs.len();
    assert_eq!(schedule.len(), n, "schedule and observations differ in length");
    if n == 0 {
        return Err(Error::InvalidInput("empty observation sequence".into()));
    }
    let mut alpha = Vec::with_capacity(n);
    let mut norm = Vec::with_capacity(n);
    let mut ll = 0.0;
    let mut pred = schedule.initial();
    for t in 0..n {
        if t > 0 {
            pred = schedule.predict(&alpha[t - 1], t);
        }
        let e = emissions(obs[t], schedule.commit);
        let a = [pred[0] * e[0], pred[1] * e[1]];
        let c = a[0] + a[1];
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::ZeroLikelihood(t));
        }
        alpha.push([a[0] / c, a[1] / c]);
        norm.push(c);
        ll += c.ln();
    }
    Ok(Forward {
        alpha,
        norm,
        log_likelihood: ll,
    })
}

/// Log-likelihood from the forward pass alone.
pub fn log_likelihood(schedule: &ChainSchedule, obs: &[bool]) -> Result<f64> {
    forward(schedule, obs).map(|f| f.log_likelihood)
}

/// Gradient of the log-likelihood with respect to every schedule entry.
#[derive(Debug, Clone)]
pub struct ChainGradient {
    pub log_likelihood: f64,
    pub d_start: Vec<f64>,
    pub d_end: Vec<f64>,
    pub d_commit: f64,
}

/// Log-likelihood and its exact gradient via one forward and one backward sweep.
///
/// For the transition into `t`, `∂ log L / ∂E_t` is
/// `α_{t−1}(coding) · (e_t(nc) β_t(nc) − e_t(c) β_t(c)) / c_t`, and symmetrically
/// for `S_t`; the initial entries enter through the stationary start law.
pub fn gradient(schedule: &ChainSchedule, obs: &[bool]) -> Result<ChainGradient> {
    let fwd = forward(schedule, obs)?;
    let n = obs.len();
    let c = schedule.commit;
    let mut d_start = vec![0.0; n];
    let mut d_end = vec![0.0; n];
    let mut d_commit = 0.0;
    let mut beta = [1.0, 1.0];
    for t in (0..n).rev() {
        let e = emissions(obs[t], c);
        let de_coding = if obs[t] { 1.0 } else { -1.0 };
        let eb = [e[0] * beta[0], e[1] * beta[1]];
        if t > 0 {
            let prev = &fwd.alpha[t - 1];
            d_end[t] = prev[CODING] * (eb[NOT_CODING] - eb[CODING]) / fwd.norm[t];
            d_start[t] = prev[NOT_CODING] * (eb[CODING] - eb[NOT_CODING]) / fwd.norm[t];
            let pred = schedule.predict(prev, t);
            d_commit += pred[CODING] * beta[CODING] * de_coding / fwd.norm[t];
            let a = schedule.matrix(t);
            beta = [
                (a[0][0] * eb[0] + a[0][1] * eb[1]) / fwd.norm[t],
                (a[1][0] * eb[0] + a[1][1] * eb[1]) / fwd.norm[t],
            ];
        } else {
            let pi = schedule.initial();
            d_commit += pi[CODING] * beta[CODING] * de_coding / fwd.norm[0];
            let g = (eb[CODING] - eb[NOT_CODING]) / fwd.norm[0];
            let (s, e0) = (schedule.start[0], schedule.end[0]);
            let z = (s + e0) * (s + e0);
            d_start[0] = g * e0 / z;
            d_end[0] = -g * s / z;
        }
    }
    Ok(ChainGradient {
        log_likelihood: fwd.log_likelihood,
        d_start,
        d_end,
        d_commit,
    })
}

impl Inference {
    pub fn run(schedule: ChainSchedule, obs: &[bool]) -> Result<Self> {
        let fwd = forward(&schedule, obs)?;
        let n = obs.len();
        let mut smoothed = vec![0.0; n];
        let mut beta = [1.0, 1.0];
        for t in (0..n).rev() {
            let a = &fwd.alpha[t];
            let g = a[CODING] * beta[CODING];
            let total = g + a[NOT_CODING] * beta[NOT_CODING];
            smoothed[t] = (g / total).clamp(0.0, 1.0);
            if t > 0 {
                let e = emissions(obs[t], schedule.commit);
                let m = schedule.matrix(t);
                let eb = [e[0] * beta[0], e[1] * beta[1]];
                beta = [
                    (m[0][0] * eb[0] + m[0][1] * eb[1]) / fwd.norm[t],
                    (m[1][0] * eb[0] + m[1][1] * eb[1]) / fwd.norm[t],
                ];
            }
        }
        Ok(Inference {
            schedule,
            alpha: fwd.alpha,
            smoothed,
            log_likelihood: fwd.log_likelihood,
        })
    }

    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }

    pub fn log_likelihood(&self) -> f64 {
        self.log_likelihood
    }

    pub fn smoothed(&self) -> &[f64] {
        &self.smoothed
    }

    pub fn filtered(&self) -> Vec<f64> {
        self.alpha.iter().map(|a| a[CODING]).collect()
    }

    pub fn posterior(&self) -> CodingPosterior {
        CodingPosterior {
            smoothed: self.smoothed.clone(),
            filtered: self.filtered(),
            log_likelihood: self.log_likelihood,
        }
    }

    /// Draw the hidden states on minutes `lo..=hi` from the joint posterior and
    /// count the coding minutes. Backward sampling from the smoothed law at `hi`.
    pub fn sample_coding_minutes<R: Rng>(&self, lo: usize, hi: usize, rng: &mut R) -> usize {
        assert!(lo <= hi && hi < self.len(), "segment {lo}..={hi} out of range");
        let mut state = if rng.random::<f64>() < self.smoothed[hi] {
            CODING
        } else {
            NOT_CODING
        };
        let mut coding = usize::from(state == CODING);
        for t in (lo..hi).rev() {
            let m = self.schedule.matrix(t + 1);
            let a = &self.alpha[t];
            let w_c = a[CODING] * m[CODING][state];
            let w_n = a[NOT_CODING] * m[NOT_CODING][state];
            state = if rng.random::<f64>() * (w_c + w_n) < w_c {
                CODING
            } else {
                NOT_CODING
            };
            coding += usize::from(state == CODING);
        }
        coding
    }

    /// One full hidden path drawn from the posterior (true = coding).
    pub fn sample_path<R: Rng>(&self, rng: &mut R) -> Vec<bool> {
        let n = self.len();
        let mut path = vec![false; n];
        let mut state = if rng.random::<f64>() < self.smoothed[n - 1] {
            CODING
        } else {
            NOT_CODING
        };
        path[n - 1] = state == CODING;
        for t in (0..n - 1).rev() {
            let m = self.schedule.matrix(t + 1);
            let a = &self.alpha[t];
            let w_c = a[CODING] * m[CODING][state];
            let w_n = a[NOT_CODING] * m[NOT_CODING][state];
            state = if rng.random::<f64>() * (w_c + w_n) < w_c {
                CODING
            } else {
                NOT_CODING
            };
            path[t] = state == CODING;
        }
        path
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    /// Joint probability of every state path, summed by brute force.
    fn brute_force(s: &ChainSchedule, obs: &[bool]) -> (Vec<f64>, f64) {
        let n = obs.len();
        let mut marg = vec![0.0; n];
        let mut total = 0.0;
        for mask in 0u32..(1 << n) {
            let coding = |t: usize| mask & (1 << t) != 0;
            let st = |t: usize| if coding(t) { CODING } else { NOT_CODING };
            let mut p = s.initial()[st(0)];
            for t in 0..n {
                if t > 0 {
                    p *= s.matrix(t)[st(t - 1)][st(t)];
                }
                let state = if coding(t) { State::Coding } else { State::NotCoding };
                p *= emission_prob(state, obs[t], s.commit);
            }
            total += p;
            for (t, m) in marg.iter_mut().enumerate() {
                if coding(t) {
                    *m += p;
                }
            }
        }
        (marg.into_iter().map(|m| m / total).collect(), total.ln())
    }

    fn random_problem(rng: &mut ChaCha8Rng, n: usize) -> (ChainSchedule, Vec<bool>) {
        let sched = ChainSchedule {
            start: (0..n).map(|_| rng.random_range(0.01..0.99)).collect(),
            end: (0..n).map(|_| rng.random_range(0.01..0.99)).collect(),
            commit: rng.random_range(0.01..0.99),
        };
        let obs = (0..n).map(|_| rng.random_bool(0.3)).collect();
        (sched, obs)
    }

    #[test]
    fn emission_table() {
        assert_eq!(emission_prob(State::NotCoding, true, 0.3), 0.0);
        assert_eq!(emission_prob(State::Coding, true, 0.04), 0.04);
        assert_eq!(emission_prob(State::NotCoding, false, 0.3), 1.0);
        assert_eq!(emission_prob(State::Coding, false, 0.04), 0.96);
    }

    #[test]
    fn single_minute_commit_is_coding() {
        let inf = Inference::run(ChainSchedule::constant(1, 0.3, 0.3, 0.04), &[true]).unwrap();
        assert_eq!(inf.smoothed()[0], 1.0);
        assert_eq!(inf.filtered()[0], 1.0);
    }

    #[test]
    fn constant_chain_matches_enumeration() {
        let obs = [false, true, false, false, true, true, false, false, false, true];
        let sched = ChainSchedule::constant(10, 0.3, 0.3, 0.04);
        let (marg, ll) = brute_force(&sched, &obs);
        let inf = Inference::run(sched, &obs).unwrap();
        for (a, b) in inf.smoothed().iter().zip(&marg) {
            assert!((a - b).abs() < 1e-10);
        }
        assert!((inf.log_likelihood() - ll).abs() < 1e-10);
    }

    #[test]
    fn vanishing_commit_prob_recovers_prior_marginals() {
        // Prior marginals by repeated matrix products from the initial law.
        let n = 40;
        let mut sched = ChainSchedule::constant(n, 0.05, 0.2, 1e-12);
        for t in 0..n {
            sched.start[t] = 0.05 + 0.01 * (t % 7) as f64;
        }
        let mut prior = vec![sched.initial()];
        for t in 1..n {
            let p = prior[t - 1];
            let m = sched.matrix(t);
            prior.push([p[0] * m[0][0] + p[1] * m[1][0], p[0] * m[0][1] + p[1] * m[1][1]]);
        }
        let inf = Inference::run(sched, &vec![false; n]).unwrap();
        for t in 0..n {
            assert!((inf.smoothed()[t] - prior[t][0]).abs() < 1e-9);
        }
    }

    #[test]
    fn impossible_sequence_is_an_error() {
        let sched = ChainSchedule::constant(3, 0.3, 0.3, 0.0);
        assert!(matches!(
            Inference::run(sched, &[false, true, false]),
            Err(Error::ZeroLikelihood(1))
        ));
    }

    #[test]
    fn filtered_converges_to_stationary_ratio() {
        let (s, e) = (0.02, 0.08);
        let mut obs = vec![false; 3000];
        obs[0] = true;
        let inf = Inference::run(ChainSchedule::constant(obs.len(), s, e, 1e-4), &obs).unwrap();
        let f = inf.filtered();
        // Fixed point of f' = ((1−E) f + S (1 − f))(1 − C) / norm, C → 0.
        let fixed = s / (s + e);
        assert!((f[2999] - fixed).abs() < 1e-3, "{} vs {fixed}", f[2999]);
        assert_eq!(f[0], 1.0);
        assert_eq!(f[2999], inf.smoothed()[2999]);
    }

    #[test]
    fn sample_with_all_commits_is_forced() {
        let obs = vec![true; 30];
        let inf = Inference::run(ChainSchedule::constant(30, 0.1, 0.1, 0.5), &obs).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            assert_eq!(inf.sample_coding_minutes(0, 29, &mut rng), 30);
        }
    }

    /// Central finite differences of the log-likelihood in the schedule entries.
    fn fd_check(sched: &ChainSchedule, obs: &[bool]) {
        let g = gradient(sched, obs).unwrap();
        let h = 1e-6;
        let rel = |a: f64, b: f64| (a - b).abs() / (a.abs().max(b.abs()).max(1e-6));
        for t in 0..sched.len() {
            for which in 0..2 {
                let mut plus = sched.clone();
                let mut minus = sched.clone();
                let (p, m) = if which == 0 {
                    (&mut plus.start[t], &mut minus.start[t])
                } else {
                    (&mut plus.end[t], &mut minus.end[t])
                };
                *p += h;
                *m -= h;
                let fd = (log_likelihood(&plus, obs).unwrap() - log_likelihood(&minus, obs).unwrap()) / (2.0 * h);
                let an = if which == 0 { g.d_start[t] } else { g.d_end[t] };
                assert!(rel(an, fd) < 1e-5, "t={t} which={which}: {an} vs {fd}");
            }
        }
        let mut plus = sched.clone();
        let mut minus = sched.clone();
        plus.commit += h;
        minus.commit -= h;
        let fd = (log_likelihood(&plus, obs).unwrap() - log_likelihood(&minus, obs).unwrap()) / (2.0 * h);
        assert!(rel(g.d_commit, fd) < 1e-5, "commit: {} vs {fd}", g.d_commit);
    }

    #[test]
    fn schedule_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [1, 2, 5, 30] {
            let (sched, obs) = random_problem(&mut rng, n);
            fd_check(&sched, &obs);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn matches_brute_force(seed in any::<u64>(), n in 1usize..=12) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (sched, obs) = random_problem(&mut rng, n);
            let (marg, ll) = brute_force(&sched, &obs);
            let inf = Inference::run(sched.clone(), &obs).unwrap();
            for (a, b) in inf.smoothed().iter().zip(&marg) {
                prop_assert!((a - b).abs() < 1e-10);
            }
            prop_assert!((inf.log_likelihood() - ll).abs() < 1e-10);
            // Forward-only likelihood agrees with the full pass.
            prop_assert_eq!(log_likelihood(&sched, &obs).unwrap(), inf.log_likelihood());
            let f = inf.filtered();
            for t in 0..n {
                if obs[t] {
                    prop_assert_eq!(inf.smoothed()[t], 1.0);
                    prop_assert_eq!(f[t], 1.0);
                }
            }
        }
    }
}
