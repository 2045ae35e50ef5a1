//! Synthetic developers with known coding ground truth.
//!
//! Inside scheduled hours a developer alternates coding and non-coding blocks
//! with geometric (discretized exponential) lengths; outside the schedule they
//! never code. Every coding minute emits a commit with a fixed probability.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::hmm::{schedule, DeveloperTimeline, HmmParams, CODING, MINUTES_PER_DAY, MINUTES_PER_WEEK};

/// 2024-01-01 00:00 UTC, a Monday. Simulated windows start here.
pub const SIM_EPOCH_MINUTE: i64 = 19723 * MINUTES_PER_DAY;

/// Working hours on a set of weekdays (0 = Monday).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleBlock {
    pub weekdays: Vec<u8>,
    pub start_hour: f64,
    pub end_hour: f64,
}

/// Block-length means for one day segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentParams {
    pub coding_mean: f64,
    pub non_coding_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimScenario {
    pub schedule: Vec<ScheduleBlock>,
    /// Segment boundary hour: before it is morning, from it on is afternoon.
    pub afternoon_from_hour: f64,
    pub morning: SegmentParams,
    pub afternoon: SegmentParams,
    pub commit_prob: f64,
    pub weeks: usize,
    /// Swap morning and afternoon parameters from the middle week on.
    pub regime_change: bool,
}

impl Default for SimScenario {
    /// 9–5 on weekdays; coding blocks average 50 min in the morning and 20 min in
    /// the afternoon, breaks 30 min; 4% commit chance per coding minute.
    fn default() -> Self {
        SimScenario {
            schedule: vec![ScheduleBlock {
                weekdays: vec![0, 1, 2, 3, 4],
                start_hour: 9.0,
                end_hour: 17.0,
            }],
            afternoon_from_hour: 13.0,
            morning: SegmentParams {
                coding_mean: 50.0,
                non_coding_mean: 30.0,
            },
            afternoon: SegmentParams {
                coding_mean: 20.0,
                non_coding_mean: 30.0,
            },
            commit_prob: 0.04,
            weeks: 4,
            regime_change: false,
        }
    }
}

impl SimScenario {
    pub fn validate(&self) -> crate::Result<()> {
        let bad = |m: &str| Err(crate::Error::InvalidInput(format!("scenario: {m}")));
        for s in [self.morning, self.afternoon] {
            if !(s.coding_mean >= 1.0 && s.non_coding_mean >= 1.0) {
                return bad("block means must be at least one minute");
            }
        }
        if !(self.commit_prob > 0.0 && self.commit_prob < 1.0) {
            return bad("commit probability must lie in (0, 1)");
        }
        for b in &self.schedule {
            let hours = 0.0..24.0;
            if !hours.contains(&b.start_hour) || !(b.end_hour > b.start_hour && b.end_hour <= 24.0) {
                return bad("schedule hours must lie within [0, 24)");
            }
            if b.weekdays.iter().any(|&d| d > 6) {
                return bad("weekday index above 6");
            }
        }
        if self.weeks == 0 {
            return bad("at least one week");
        }
        Ok(())
    }

    pub fn total_minutes(&self) -> usize {
        self.weeks * MINUTES_PER_WEEK as usize
    }

    /// First week index of the second regime, if any.
    pub fn change_week(&self) -> Option<usize> {
        self.regime_change.then_some(self.weeks / 2)
    }

    fn scheduled(&self, minute_of_week: i64) -> bool {
        let day = (minute_of_week / MINUTES_PER_DAY) as u8;
        let hour = (minute_of_week % MINUTES_PER_DAY) as f64 / 60.0;
        self.schedule
            .iter()
            .any(|b| b.weekdays.contains(&day) && hour >= b.start_hour && hour < b.end_hour)
    }

    /// Segment parameters in force at a minute of the window.
    pub fn segment_at(&self, minute: usize) -> SegmentParams {
        let hour = (minute as i64 % MINUTES_PER_DAY) as f64 / 60.0;
        let swapped = self
            .change_week()
            .is_some_and(|w| minute >= w * MINUTES_PER_WEEK as usize);
        let morning = hour < self.afternoon_from_hour;
        match (morning, swapped) {
            (true, false) | (false, true) => self.morning,
            _ => self.afternoon,
        }
    }

    /// Whether the developer is on schedule at a minute of the window.
    pub fn on_schedule(&self, minute: usize) -> bool {
        self.scheduled(minute as i64 % MINUTES_PER_WEEK)
    }
}

/// Schedule with the morning and afternoon segments swapped after `n_weeks` weeks.
pub fn regime_change_scenario(n_weeks: usize) -> SimScenario {
    SimScenario {
        weeks: 2 * n_weeks.max(1),
        regime_change: true,
        ..SimScenario::default()
    }
}

/// The second-regime scenario as a stand-alone schedule.
pub fn mirrored(scenario: &SimScenario) -> SimScenario {
    SimScenario {
        morning: scenario.afternoon,
        afternoon: scenario.morning,
        regime_change: false,
        ..scenario.clone()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulatedDeveloper {
    pub timeline: DeveloperTimeline,
    /// True where the developer was coding.
    pub coding: Vec<bool>,
}

impl SimulatedDeveloper {
    /// Ground-truth coding minutes over `(a, b]`.
    pub fn coding_minutes(&self, a: usize, b: usize) -> usize {
        self.coding[a + 1..=b].iter().filter(|&&c| c).count()
    }
}

/// Simulate one developer; the window starts on a Monday at 00:00 UTC.
pub fn simulate_developer<R: Rng>(scenario: &SimScenario, author: &str, rng: &mut R) -> SimulatedDeveloper {
    let n = scenario.total_minutes();
    let mut coding = vec![false; n];
    let mut commits = Vec::new();
    let mut state: Option<bool> = None;
    for (t, slot) in coding.iter_mut().enumerate() {
        if !scenario.on_schedule(t) {
            state = None;
            continue;
        }
        let seg = scenario.segment_at(t);
        let now = match state {
            // Fresh block at the start of scheduled hours: draw from the segment's stationary mix.
            None => rng.random::<f64>() < seg.coding_mean / (seg.coding_mean + seg.non_coding_mean),
            Some(prev) => {
                let leave = if prev {
                    1.0 / seg.coding_mean
                } else {
                    1.0 / seg.non_coding_mean
                };
                if rng.random::<f64>() < leave {
                    !prev
                } else {
                    prev
                }
            }
        };
        state = Some(now);
        *slot = now;
        if now && rng.random::<f64>() < scenario.commit_prob {
            commits.push(t);
        }
    }
    let timeline = DeveloperTimeline::new(author, SIM_EPOCH_MINUTE, n, commits).expect("commits inside window");
    SimulatedDeveloper { timeline, coding }
}

/// Draw a developer from a neural HMM itself: a state path from the chain's
/// prior and a commit with probability C at every coding minute.
pub fn simulate_from_model<R: Rng>(
    params: &HmmParams,
    author: &str,
    window_start: i64,
    len: usize,
    rng: &mut R,
) -> SimulatedDeveloper {
    let empty = DeveloperTimeline::new(author, window_start, len, Vec::new()).expect("empty timeline");
    let sched = schedule(params, &empty);
    let mut coding = vec![false; len];
    let mut commits = Vec::new();
    let mut now = rng.random::<f64>() < sched.initial()[CODING];
    for (t, slot) in coding.iter_mut().enumerate() {
        if t > 0 {
            let a = sched.matrix(t);
            let row = if now { a[0] } else { a[1] };
            now = rng.random::<f64>() < row[CODING];
        }
        *slot = now;
        if now && rng.random::<f64>() < sched.commit {
            commits.push(t);
        }
    }
    let timeline = DeveloperTimeline::new(author, window_start, len, commits).expect("commits inside window");
    SimulatedDeveloper { timeline, coding }
}
