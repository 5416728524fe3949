/// One regret sample. For per-step records `episode` is the number of
/// episodes completed before the step; for per-episode records it is the
/// 1-based index of the episode that just ended.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegretRecord {
    pub step: u64,
    pub episode: u64,
    pub regret: f64,
    pub cum_regret: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RegretTrace {
    pub algorithm: String,
    pub seed: u64,
    pub steps: Vec<RegretRecord>,
    pub episodes: Vec<RegretRecord>,
    /// The run hit the step cap before finishing its episode budget.
    pub truncated: bool,
}

impl RegretTrace {
    pub fn new(algorithm: impl Into<String>, seed: u64) -> Self {
        Self {
            algorithm: algorithm.into(),
            seed,
            steps: Vec::new(),
            episodes: Vec::new(),
            truncated: false,
        }
    }

    pub(crate) fn push_step(&mut self, regret: f64) {
        let cum_regret = self.total_regret() + regret;
        self.steps.push(RegretRecord {
            step: self.steps.len() as u64 + 1,
            episode: self.episodes.len() as u64,
            regret,
            cum_regret,
        });
    }

    pub(crate) fn push_episode(&mut self, regret: f64) {
        self.episodes.push(RegretRecord {
            step: self.steps.len() as u64,
            episode: self.episodes.len() as u64 + 1,
            regret,
            cum_regret: self.total_regret(),
        });
    }

    /// Sum of per-step regret over the whole run.
    pub fn total_regret(&self) -> f64 {
        self.steps.last().map_or(0.0, |r| r.cum_regret)
    }

    /// Regret at the last completed episode (or the last step when no
    /// episode completed).
    pub fn final_regret(&self) -> f64 {
        self.episodes
            .last()
            .or(self.steps.last())
            .map_or(f64::NAN, |r| r.regret)
    }

    /// Regret recorded when episode `k` (1-based) ended.
    pub fn regret_at_episode(&self, k: usize) -> Option<f64> {
        self.episodes.get(k.checked_sub(1)?).map(|r| r.regret)
    }
}
