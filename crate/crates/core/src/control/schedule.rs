//! Exploration timetables.
//!
//! Each schedule is a warm-up episode starting at `t = 1`, whose end is only
//! known online, followed by a fixed list of later episodes. Later episodes
//! that start inside the warm-up are dropped when it closes.

use serde::{Deserialize, Serialize};

/// One exploration episode covering `start..start + len`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Episode {
    pub start: usize,
    pub len: usize,
}

impl Episode {
    pub fn end(&self) -> usize {
        self.start + self.len - 1
    }

    pub fn contains(&self, t: usize) -> bool {
        t >= self.start && t <= self.end()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScheduleKind {
    /// Starts at `ceil(exp(i^2))`, or `ceil(exp(i))` for unbounded noise.
    Piece { h: usize, unbounded: bool },
    /// Starts at `ceil(exp(i^(1 + delta)))`, lengths `ceil(log(i)^4)`.
    LaiWei { delta: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExplorationSchedule {
    kind: ScheduleKind,
    horizon: usize,
    planned: Vec<Episode>,
    warmup_end: Option<usize>,
}

/// Exponent slack of the Lai-Wei timetable.
pub const LAI_WEI_DELTA: f64 = 0.001;

fn ceil_exp(x: f64) -> Option<usize> {
    let v = x.exp().ceil();
    (v.is_finite() && v < usize::MAX as f64).then_some(v as usize)
}

/// Merges overlapping or adjacent episodes so the list stays disjoint.
fn merge(mut episodes: Vec<Episode>) -> Vec<Episode> {
    episodes.sort_by_key(|e| e.start);
    let mut out: Vec<Episode> = Vec::with_capacity(episodes.len());
    for e in episodes {
        match out.last_mut() {
            Some(last) if e.start <= last.end() + 1 => {
                let end = last.end().max(e.end());
                last.len = end - last.start + 1;
            }
            _ => out.push(e),
        }
    }
    out
}

impl ExplorationSchedule {
    pub fn piece(h: usize, unbounded: bool, horizon: usize) -> Self {
        let h = h.max(1);
        let mut planned = Vec::new();
        for i in 2usize.. {
            let x = if unbounded { i as f64 } else { (i * i) as f64 };
            match ceil_exp(x) {
                Some(n) if n <= horizon => planned.push(Episode { start: n, len: h }),
                _ => break,
            }
        }
        Self { kind: ScheduleKind::Piece { h, unbounded }, horizon, planned, warmup_end: None }
    }

    pub fn lai_wei(delta: f64, horizon: usize) -> Self {
        let mut planned = Vec::new();
        for i in 2usize.. {
            let Some(n) = ceil_exp((i as f64).powf(1.0 + delta)) else { break };
            if n + 1 > horizon {
                break;
            }
            let len = ((i as f64).ln().powi(4).ceil() as usize).max(1);
            planned.push(Episode { start: n + 1, len });
        }
        Self { kind: ScheduleKind::LaiWei { delta }, horizon, planned, warmup_end: None }
    }

    pub fn kind(&self) -> ScheduleKind {
        self.kind
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn warmup_end(&self) -> Option<usize> {
        self.warmup_end
    }

    pub fn warmup_open(&self) -> bool {
        self.warmup_end.is_none()
    }

    /// Ends the warm-up at `t` and drops later episodes starting at or before it.
    pub fn close_warmup(&mut self, t: usize) {
        if self.warmup_end.is_some() {
            return;
        }
        self.warmup_end = Some(t);
        self.planned.retain(|e| e.start > t);
    }

    /// Later episodes with overlaps merged; before the warm-up closes this
    /// is the full plan.
    pub fn episodes(&self) -> Vec<Episode> {
        merge(self.planned.clone())
    }

    /// Warm-up followed by the surviving later episodes, clipped to the horizon.
    pub fn realized(&self) -> Vec<Episode> {
        let mut out = Vec::new();
        if let Some(end) = self.warmup_end {
            out.push(Episode { start: 1, len: end });
        }
        for e in self.episodes() {
            if e.start <= self.horizon {
                out.push(Episode { start: e.start, len: e.len.min(self.horizon - e.start + 1) });
            }
        }
        out
    }

    pub fn is_exploration(&self, t: usize) -> bool {
        match self.warmup_end {
            None => true,
            Some(end) => t <= end || self.planned.iter().any(|e| e.contains(t)),
        }
    }
}
