//! Closed-form quantities behind the survival and extinction arguments, and
//! the space-time path machinery (paths, overlap windows, double interactions).

mod bounds;
mod paths;

pub use bounds::{
    drift_coefficient, invade_success_bound, invade_time, lambda_plus, lemma1_lower_bound,
    min_interactions, mu_threshold, pair_recursion, poisson_tail_bound, replay_knowledge,
    replay_path_knowledge, PathReplay, TailSide,
};
pub use paths::{
    double_interactions, extract_paths, overlap_windows, write_path_csv, DoubleInteraction, Overlap,
    Path, PathIndex, PathSet, DEFAULT_PATH_CAP,
};
