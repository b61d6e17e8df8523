//! Fixtures shared by the benchmarks.

use tom2_core::session::greedy_placement;
use tom2_core::{InteractiveBelief, LearnerSettings, ModelGrid, Rule};

/// A default-grid learner after `steps` greedy placements for `rule`.
pub fn taught_belief(rule: Rule, steps: usize) -> InteractiveBelief {
    let settings = LearnerSettings::default();
    let mut ib = InteractiveBelief::new(ModelGrid::default());
    for _ in 0..steps {
        let p = greedy_placement(ib.tom0(), rule);
        ib = ib.update_on_placement_or_recover(p, true, &settings).belief;
    }
    ib
}
