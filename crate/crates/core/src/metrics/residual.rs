/// Cumulative metrics after `n_seeds` decoded seeds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Checkpoint {
    pub n_seeds: u64,
    pub ji: f64,
    pub rmse_lateral: f64,
    pub rmse_3d: f64,
}

impl Checkpoint {
    fn values(&self) -> [f64; 3] {
        [self.ji, self.rmse_lateral, self.rmse_3d]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualConfig {
    pub rel_tolerance: f64,
    pub patience: usize,
    /// Seeds between checkpoints.
    pub checkpoint_seeds: u64,
}

impl Default for ResidualConfig {
    fn default() -> Self {
        Self {
            rel_tolerance: 0.01,
            patience: 5,
            checkpoint_seeds: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Convergence {
    Converged {
        seeds_needed: u64,
        checkpoints: usize,
    },
    NotConverged {
        checkpoints: usize,
        /// Relative residuals of (ji, rmse_lateral, rmse_3d) at the last checkpoint.
        last_residuals: [f64; 3],
    },
}

impl Convergence {
    pub fn seeds_needed(&self) -> Option<u64> {
        match self {
            Convergence::Converged { seeds_needed, .. } => Some(*seeds_needed),
            Convergence::NotConverged { .. } => None,
        }
    }
}

fn relative_residual(now: f64, before: f64) -> f64 {
    if now == before {
        return 0.0;
    }
    let r = (now - before).abs() / now.abs();
    if r.is_nan() {
        f64::INFINITY
    } else {
        r
    }
}

/// Incremental stopping rule: stop once every metric's relative change has
/// stayed below the tolerance for `patience` consecutive checkpoints.
#[derive(Debug, Clone)]
pub struct ResidualTracker {
    rel_tolerance: f64,
    patience: usize,
    previous: Option<Checkpoint>,
    streak: usize,
    checkpoints: usize,
    last_residuals: [f64; 3],
    converged_at: Option<u64>,
}

impl ResidualTracker {
    pub fn new(rel_tolerance: f64, patience: usize) -> Self {
        Self {
            rel_tolerance,
            patience,
            previous: None,
            streak: 0,
            checkpoints: 0,
            last_residuals: [f64::INFINITY; 3],
            converged_at: None,
        }
    }

    /// Feeds one checkpoint; returns the seed count once converged.
    pub fn push(&mut self, cp: Checkpoint) -> Option<u64> {
        if self.converged_at.is_some() {
            return self.converged_at;
        }
        self.checkpoints += 1;
        if let Some(prev) = self.previous {
            let now = cp.values();
            let before = prev.values();
            self.last_residuals = [0, 1, 2].map(|k| relative_residual(now[k], before[k]));
            if self.last_residuals.iter().all(|&r| r < self.rel_tolerance) {
                self.streak += 1;
            } else {
                self.streak = 0;
            }
        }
        self.previous = Some(cp);
        if self.streak >= self.patience {
            self.converged_at = Some(cp.n_seeds);
        }
        self.converged_at
    }

    pub fn finish(&self) -> Convergence {
        match self.converged_at {
            Some(seeds_needed) => Convergence::Converged {
                seeds_needed,
                checkpoints: self.checkpoints,
            },
            None => Convergence::NotConverged {
                checkpoints: self.checkpoints,
                last_residuals: self.last_residuals,
            },
        }
    }
}

pub fn residual_convergence(
    stream: impl IntoIterator<Item = Checkpoint>,
    rel_tolerance: f64,
    patience: usize,
) -> Convergence {
    let mut tracker = ResidualTracker::new(rel_tolerance, patience);
    for cp in stream {
        if tracker.push(cp).is_some() {
            break;
        }
    }
    tracker.finish()
}
