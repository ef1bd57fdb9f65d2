use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AbortReason {
    /// At least `θn` vertices are unsafe.
    UnsafeCount,
    /// Some colour has at least `θ^4 n` vertices ever full or sparse in it.
    BadColour,
    /// No colour is available for a standard step or a cleaning.
    NoEligibleColour,
    /// The event `E_v` failed on every resample.
    CleanRetryExhausted,
    /// The auxiliary graph `B_v` had no perfect matching.
    NoPerfectMatching,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "index")]
pub enum Witness {
    Vertex(usize),
    Colour(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AbortReport {
    pub reason: AbortReason,
    /// Number of completed steps when the abort fired.
    pub step: u64,
    pub round: usize,
    pub witness: Witness,
}

impl std::fmt::Display for AbortReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:?} at step {} (round {}), witness {:?}", self.reason, self.step, self.round, self.witness)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepKind {
    Standard,
    Exceptional,
    Cleaning,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepTrace {
    pub kind: StepKind,
    pub round: usize,
    /// `(edge id, colour)` for every edge coloured in the step.
    pub edges: Vec<(u32, u32)>,
    /// The batch appended to the cleaning queue after this step, in queue order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub batch: Option<Vec<u32>>,
}

/// A runtime property that is counted rather than asserted.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Monitor {
    pub checked: u64,
    pub violated: u64,
}

impl Monitor {
    pub fn record(&mut self, ok: bool) {
        self.checked += 1;
        if !ok {
            self.violated += 1;
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Monitors {
    /// `col_c(v) <= (1+2δ)d` after every colouring.
    pub class_degree: Monitor,
    /// `|C_v| >= (1-3θ)m` at every cleaning.
    pub cleaning_colours: Monitor,
    /// `|col(v) - 2i| <= η^.9 dm` for the safe active vertex in early rounds.
    pub safe_typical: Monitor,
    /// Initial batch size `<= dm`.
    pub batch_initial: Monitor,
    /// Closed batch size `<= 2dm`.
    pub batch_closed: Monitor,
    /// At most `d^.2` earlier `H_B`-neighbours in queue order.
    pub batch_degeneracy: Monitor,
    /// The host passed both sparsity events that the batch bounds rely on.
    /// Batch monitors are recorded regardless but only count when armed.
    pub batch_armed: bool,
}

impl Monitors {
    /// Violations of properties that are claimed for this host.
    pub fn total_violations(&self) -> u64 {
        let always = self.class_degree.violated + self.cleaning_colours.violated + self.safe_typical.violated;
        if self.batch_armed {
            always + self.batch_initial.violated + self.batch_closed.violated + self.batch_degeneracy.violated
        } else {
            always
        }
    }

    pub fn merge(&mut self, other: &Monitors) {
        for (a, b) in [
            (&mut self.class_degree, other.class_degree),
            (&mut self.cleaning_colours, other.cleaning_colours),
            (&mut self.safe_typical, other.safe_typical),
            (&mut self.batch_initial, other.batch_initial),
            (&mut self.batch_closed, other.batch_closed),
            (&mut self.batch_degeneracy, other.batch_degeneracy),
        ] {
            a.checked += b.checked;
            a.violated += b.violated;
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleaningStats {
    pub cleanings: u64,
    /// Cleanings with `|X_v| < |C_v|`, where `Y_v` is drawn at random.
    pub random_cleanings: u64,
    /// Draws of `Y_v` in random cleanings.
    pub attempts: u64,
    /// Draws for which `E_v` held.
    pub successes: u64,
    /// Cleanings with a fixed round-robin `Y_v`, and how many of those met the
    /// minimum-degree bound of `E_v` anyway.
    pub fixed_cleanings: u64,
    pub fixed_ev_held: u64,
    pub max_cleaned_neighbours: u32,
}

impl CleaningStats {
    pub fn merge(&mut self, o: &CleaningStats) {
        self.cleanings += o.cleanings;
        self.random_cleanings += o.random_cleanings;
        self.attempts += o.attempts;
        self.successes += o.successes;
        self.fixed_cleanings += o.fixed_cleanings;
        self.fixed_ev_held += o.fixed_ev_held;
        self.max_cleaned_neighbours = self.max_cleaned_neighbours.max(o.max_cleaned_neighbours);
    }
}

/// Vertex status counts at the start of a round.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundStats {
    pub round: usize,
    pub coloured: usize,
    pub unsafe_: usize,
    pub atypical: usize,
    pub exceptional: usize,
    pub blocking: usize,
    pub attacking: usize,
    pub blocked: usize,
    pub attacked: usize,
    pub full_pairs: usize,
    pub sparse_pairs: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub seed: u64,
    pub stream: u64,
    pub n: usize,
    pub m: usize,
    pub d: f64,
    pub edges: usize,
    pub rounds: usize,
    pub steps: u64,
    pub standard_steps: u64,
    pub exceptional_steps: u64,
    pub cleaning_steps: u64,
    pub skipped_standard: u64,
    pub skipped_exceptional: u64,
    pub abort: Option<AbortReport>,
    pub monitors: Monitors,
    pub cleaning: CleaningStats,
    pub per_round: Vec<RoundStats>,
    /// Smallest and largest class degree over all (vertex, colour) at the end.
    pub class_degree_range: Option<(u32, u32)>,
}
