use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MINUTES_PER_DAY: i64 = 1440;
pub const MINUTES_PER_WEEK: i64 = 7 * MINUTES_PER_DAY;

/// About two years of minutes; older history is dropped from a window.
pub const MAX_WINDOW_MINUTES: usize = 2 * 365 * MINUTES_PER_DAY as usize;

/// Minute of the week, Monday 00:00 UTC = 0, for an absolute epoch minute.
pub fn minute_of_week(epoch_minute: i64) -> i64 {
    // 1970-01-01 was a Thursday, three days after a Monday.
    (epoch_minute + 3 * MINUTES_PER_DAY).rem_euclid(MINUTES_PER_WEEK)
}

/// One developer's commit indicator on a one-minute grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeveloperTimeline {
    pub author_id: String,
    /// Epoch minute (UTC) of grid index 0.
    pub window_start: i64,
    pub len: usize,
    pub commit_minutes: Vec<usize>,
    #[serde(skip)]
    commit_at: Vec<bool>,
}

impl DeveloperTimeline {
    /// Grid from commit minutes relative to `window_start`. Duplicates collapse.
    pub fn new(author_id: &str, window_start: i64, len: usize, mut commit_minutes: Vec<usize>) -> Result<Self> {
        if len == 0 {
            return Err(Error::InvalidInput("timeline must span at least one minute".into()));
        }
        commit_minutes.sort_unstable();
        commit_minutes.dedup();
        if let Some(&last) = commit_minutes.last() {
            if last >= len {
                return Err(Error::OutOfRange { index: last, len });
            }
        }
        let mut commit_at = vec![false; len];
        for &m in &commit_minutes {
            commit_at[m] = true;
        }
        Ok(DeveloperTimeline {
            author_id: author_id.to_string(),
            window_start,
            len,
            commit_minutes,
            commit_at,
        })
    }

    /// Window from UTC midnight of the first kept commit day through the last commit.
    ///
    /// At most [`MAX_WINDOW_MINUTES`] of the most recent history are kept.
    pub fn from_commit_times(author_id: &str, epoch_minutes: &[i64]) -> Result<Self> {
        let last = *epoch_minutes
            .iter()
            .max()
            .ok_or_else(|| Error::InvalidInput(format!("author {author_id} has no commits")))?;
        let first = *epoch_minutes.iter().min().expect("nonempty");
        let earliest = last - MAX_WINDOW_MINUTES as i64 + 1;
        let mut start = first.div_euclid(MINUTES_PER_DAY) * MINUTES_PER_DAY;
        if start < earliest {
            start = earliest;
        }
        let len = (last - start + 1) as usize;
        let minutes = epoch_minutes
            .iter()
            .filter(|&&m| m >= start)
            .map(|&m| (m - start) as usize)
            .collect();
        Self::new(author_id, start, len, minutes)
    }

    pub fn commit_at(&self, minute: usize) -> bool {
        self.commit_at[minute]
    }

    pub fn observations(&self) -> &[bool] {
        &self.commit_at
    }

    /// Rebuild the dense indicator after deserialization.
    pub fn restore(mut self) -> Self {
        let mut commit_at = vec![false; self.len];
        for &m in &self.commit_minutes {
            commit_at[m] = true;
        }
        self.commit_at = commit_at;
        self
    }

    pub fn epoch_minute(&self, minute: usize) -> i64 {
        self.window_start + minute as i64
    }

    pub fn index_of_epoch_minute(&self, epoch_minute: i64) -> Option<usize> {
        let i = epoch_minute - self.window_start;
        (i >= 0 && (i as usize) < self.len).then_some(i as usize)
    }
}

/// Clock inputs of the transition network for one minute.
///
/// Day-dial sine and cosine, week-dial sine and cosine, and normed time `t / T`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeFeatures(pub [f64; 5]);

impl TimeFeatures {
    pub fn at(window_start: i64, minute: usize, len: usize) -> Self {
        let abs = window_start + minute as i64;
        let day = TAU * abs.rem_euclid(MINUTES_PER_DAY) as f64 / MINUTES_PER_DAY as f64;
        let week = TAU * minute_of_week(abs) as f64 / MINUTES_PER_WEEK as f64;
        TimeFeatures([day.sin(), day.cos(), week.sin(), week.cos(), minute as f64 / len as f64])
    }
}

pub fn time_features(minute_index: usize, timeline: &DeveloperTimeline) -> Result<TimeFeatures> {
    if minute_index >= timeline.len {
        return Err(Error::OutOfRange {
            index: minute_index,
            len: timeline.len,
        });
    }
    Ok(TimeFeatures::at(timeline.window_start, minute_index, timeline.len))
}
