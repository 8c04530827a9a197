//! Observation rules: what the player sees after playing an action.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::prior::LossMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeedbackKind {
    Full,
    /// Losses of the active coordinates; with `m = 1` this is bandit feedback.
    SemiBandit,
    Graph,
    Contextual,
}

impl FeedbackKind {
    pub fn name(self) -> &'static str {
        match self {
            FeedbackKind::Full => "full",
            FeedbackKind::SemiBandit => "semi-bandit",
            FeedbackKind::Graph => "graph",
            FeedbackKind::Contextual => "contextual",
        }
    }
}

/// Feedback values observed after one round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    /// `(coordinate, round, value)`, sorted by coordinate.
    pub entries: Vec<(usize, usize, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeedbackModel {
    kind: FeedbackKind,
    /// Empty for full and semi-bandit feedback. A single graph applies to
    /// every round; otherwise one graph per round.
    graphs: Vec<Graph>,
}

impl FeedbackModel {
    pub fn full() -> Self {
        FeedbackModel { kind: FeedbackKind::Full, graphs: Vec::new() }
    }

    pub fn semi_bandit() -> Self {
        FeedbackModel { kind: FeedbackKind::SemiBandit, graphs: Vec::new() }
    }

    /// Graph feedback with one graph per round, or a single static graph.
    pub fn graph(graphs: Vec<Graph>) -> Result<Self> {
        if graphs.is_empty() {
            return Err(Error::config("graph feedback needs at least one graph"));
        }
        let n = graphs[0].len();
        if graphs.iter().any(|g| g.len() != n) {
            return Err(Error::config("all feedback graphs must have the same vertex count"));
        }
        Ok(FeedbackModel { kind: FeedbackKind::Graph, graphs })
    }

    /// Contextual feedback: each round's graph is a disjoint union of
    /// cliques covering every arm.
    pub fn contextual(graphs: Vec<Graph>) -> Result<Self> {
        let mut model = Self::graph(graphs)?;
        if let Some(t) = model.graphs.iter().position(|g| !g.is_clique_partition()) {
            return Err(Error::config(format!("contextual graph for round {t} is not a union of cliques")));
        }
        model.kind = FeedbackKind::Contextual;
        Ok(model)
    }

    pub fn kind(&self) -> FeedbackKind {
        self.kind
    }

    /// Graph in force at round `t`, if this is a graph model.
    pub fn graph_at(&self, t: usize) -> Option<&Graph> {
        match self.graphs.len() {
            0 => None,
            1 => Some(&self.graphs[0]),
            _ => self.graphs.get(t),
        }
    }

    pub fn graphs(&self) -> &[Graph] {
        &self.graphs
    }

    /// Check the model fits a game with `d` arms and horizon `horizon`.
    pub fn validate(&self, d: usize, horizon: usize) -> Result<()> {
        if let Some(g) = self.graphs.first() {
            if g.len() != d {
                return Err(Error::config(format!("feedback graph has {} vertices but d = {d}", g.len())));
            }
            if self.graphs.len() > 1 && self.graphs.len() != horizon {
                return Err(Error::config(format!(
                    "{} feedback graphs supplied for horizon {horizon}",
                    self.graphs.len()
                )));
            }
        }
        Ok(())
    }

    /// Coordinates revealed at round `t` when the active set is `support`.
    pub fn observed_coords(&self, t: usize, support: &[usize], d: usize) -> Result<Vec<usize>> {
        match self.kind {
            FeedbackKind::Full => Ok((0..d).collect()),
            FeedbackKind::SemiBandit => Ok(support.to_vec()),
            FeedbackKind::Graph | FeedbackKind::Contextual => {
                let g = self
                    .graph_at(t)
                    .ok_or_else(|| Error::config(format!("no feedback graph for round {t}")))?;
                let mut seen = vec![false; g.len()];
                for &i in support {
                    for &j in g.out_neighbors(i) {
                        seen[j] = true;
                    }
                }
                Ok(seen.iter().enumerate().filter(|(_, &s)| s).map(|(j, _)| j).collect())
            }
        }
    }

    /// Observation at round `t` after playing `support` against `losses`.
    pub fn observe(&self, t: usize, support: &[usize], losses: &LossMatrix) -> Result<Observation> {
        if t >= losses.horizon() {
            return Err(Error::config(format!("round {t} out of range (horizon {})", losses.horizon())));
        }
        let coords = self.observed_coords(t, support, losses.d())?;
        Ok(Observation { entries: coords.into_iter().map(|i| (i, t, losses.get(i, t))).collect() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn matrix(rows: &[&[f64]]) -> LossMatrix {
        let d = rows.len();
        let horizon = rows[0].len();
        LossMatrix::from_rows(d, horizon, rows.iter().flat_map(|r| r.iter().copied()).collect()).unwrap()
    }

    #[test]
    fn full_and_semi_bandit() {
        let l = matrix(&[&[0.2], &[0.8], &[0.1], &[0.9]]);
        let full = FeedbackModel::full().observe(0, &[0, 1], &l).unwrap();
        assert_eq!(full.entries.len(), 4);
        let semi = FeedbackModel::semi_bandit().observe(0, &[0, 1], &l).unwrap();
        assert_eq!(semi.entries, vec![(0, 0, 0.2), (1, 0, 0.8)]);
        assert!(FeedbackModel::full().observe(1, &[0], &l).is_err());
    }

    #[test]
    fn complete_graph_reveals_everything() {
        let l = matrix(&[&[0.2], &[0.8], &[0.1]]);
        let model = FeedbackModel::graph(vec![Graph::complete(3)]).unwrap();
        for v in 0..3 {
            assert_eq!(model.observe(0, &[v], &l).unwrap().entries.len(), 3);
        }
    }

    #[test]
    fn directed_graph_uses_out_neighbours() {
        let l = matrix(&[&[0.2], &[0.8], &[0.1]]);
        let g = Graph::with_self_loops(3, &[(0, 2)], true).unwrap();
        let model = FeedbackModel::graph(vec![g]).unwrap();
        let coords: Vec<_> = model.observe(0, &[0], &l).unwrap().entries.iter().map(|e| e.0).collect();
        assert_eq!(coords, vec![0, 2]);
        let coords: Vec<_> = model.observe(0, &[2], &l).unwrap().entries.iter().map(|e| e.0).collect();
        assert_eq!(coords, vec![2]);
    }

    #[test]
    fn semi_bandit_with_one_arm_matches_self_loop_graph() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let d = rng.gen_range(1..6);
            let horizon = rng.gen_range(1..5);
            let data = (0..d * horizon).map(|_| rng.gen_range(0..=10) as f64 / 10.0).collect();
            let l = LossMatrix::from_rows(d, horizon, data).unwrap();
            let t = rng.gen_range(0..horizon);
            let arm = rng.gen_range(0..d);
            let semi = FeedbackModel::semi_bandit().observe(t, &[arm], &l).unwrap();
            let bandit = FeedbackModel::graph(vec![Graph::empty(d)]).unwrap().observe(t, &[arm], &l).unwrap();
            assert_eq!(semi, bandit);
        }
    }

    #[test]
    fn contextual_requires_clique_partitions() {
        assert!(FeedbackModel::contextual(vec![Graph::path(3)]).is_err());
        let g = Graph::cliques(4, &[vec![0, 1], vec![2, 3]]).unwrap();
        let model = FeedbackModel::contextual(vec![g]).unwrap();
        let l = matrix(&[&[0.5], &[0.5], &[0.0], &[0.0]]);
        let obs = model.observe(0, &[1], &l).unwrap();
        assert_eq!(obs.entries, vec![(0, 0, 0.5), (1, 0, 0.5)]);
    }
}
