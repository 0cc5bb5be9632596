use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::population::{disability_setting, PartnerPopulation};
use crate::algos::evaluate_team;
use crate::envs::{DisabilityProfile, EnvSpec};
use crate::neural::Policy;
use crate::rng::derive_seed;
use crate::{Error, Result};

/// Returns of every robot (row) paired with every human (column).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossplayMatrix {
    pub labels: Vec<String>,
    pub matrix: Vec<Vec<f64>>,
    /// Cluster leaf order of the teams.
    pub permutation: Vec<usize>,
    pub episodes_per_cell: usize,
}

impl CrossplayMatrix {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn diagonal_mean(&self) -> f64 {
        let n = self.len();
        (0..n).map(|i| self.matrix[i][i]).sum::<f64>() / n as f64
    }

    /// Mean of the cells with `group[i] != group[j]`.
    pub fn between_mean(&self, group: &[usize]) -> f64 {
        let mut acc = 0.0;
        let mut count = 0.0;
        for (i, row) in self.matrix.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                if group[i] != group[j] {
                    acc += v;
                    count += 1.0;
                }
            }
        }
        acc / count
    }

    /// The matrix with rows and columns in cluster order.
    pub fn permuted(&self) -> Vec<Vec<f64>> {
        self.permutation
            .iter()
            .map(|&i| {
                self.permutation
                    .iter()
                    .map(|&j| self.matrix[i][j])
                    .collect()
            })
            .collect()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension("json.tmp");
        std::fs::write(&tmp, serde_json::to_vec_pretty(self)?)?;
        std::fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let m: Self = serde_json::from_slice(&std::fs::read(path)?)?;
        let n = m.labels.len();
        if m.matrix.len() != n
            || m.matrix.iter().any(|r| r.len() != n)
            || !is_permutation(&m.permutation, n)
        {
            return Err(Error::contract(
                "cross-play file is not a square matrix with a permutation",
            ));
        }
        Ok(m)
    }
}

fn is_permutation(p: &[usize], n: usize) -> bool {
    let mut seen = vec![false; n];
    p.len() == n
        && p.iter()
            .all(|&i| i < n && !std::mem::replace(&mut seen[i], true))
}

/// Cross-play from an episode oracle `episode(robot, human, episode_index)`;
/// each cell is the plain mean of its episodes.
pub fn crossplay_with<F>(
    labels: Vec<String>,
    episodes_per_cell: usize,
    episode: F,
) -> Result<CrossplayMatrix>
where
    F: Fn(usize, usize, usize) -> Result<f64> + Sync,
{
    let n = labels.len();
    if n == 0 || episodes_per_cell == 0 {
        return Err(Error::contract(
            "cross-play needs at least one team and one episode",
        ));
    }
    let cells = (0..n * n)
        .into_par_iter()
        .map(|c| {
            let (i, j) = (c / n, c % n);
            let total = (0..episodes_per_cell)
                .map(|e| episode(i, j, e))
                .sum::<Result<f64>>()?;
            Ok(total / episodes_per_cell as f64)
        })
        .collect::<Result<Vec<f64>>>()?;
    let matrix: Vec<Vec<f64>> = cells.chunks(n).map(<[f64]>::to_vec).collect();
    let permutation = cluster_order(&matrix)?;
    Ok(CrossplayMatrix {
        labels,
        matrix,
        permutation,
        episodes_per_cell,
    })
}

/// A co-trained team: its robot, its human and the human's disability.
pub struct Team<'a> {
    pub label: String,
    pub robot: &'a Policy,
    pub human: &'a Policy,
    pub disability: DisabilityProfile,
}

/// Cross-play of real teams; the cell `(i, j)` uses human `j`'s disability.
pub fn crossplay(
    env: &EnvSpec,
    teams: &[Team<'_>],
    episodes_per_cell: usize,
    seed: u64,
) -> Result<CrossplayMatrix> {
    let n = teams.len();
    let labels = teams.iter().map(|t| t.label.clone()).collect();
    crossplay_with(labels, episodes_per_cell, |i, j, e| {
        let pair = [(teams[i].robot, teams[j].human, teams[j].disability)];
        let cell_seed = derive_seed(seed, (i * n + j) as u64);
        Ok(evaluate_team(env, &pair, derive_seed(cell_seed, e as u64))?[0])
    })
}

/// Cross-play of every team in a population manifest.
pub fn crossplay_population(
    pop: &PartnerPopulation,
    base: &Path,
    env: Option<EnvSpec>,
    episodes_per_cell: usize,
    seed: u64,
) -> Result<CrossplayMatrix> {
    let task = pop.task()?;
    let env = env.unwrap_or_else(|| EnvSpec::new(task));
    if env.task != task {
        return Err(Error::config(
            "task",
            "environment and population tasks differ",
        ));
    }
    let humans = pop.load_partners(base)?;
    let robots = (0..pop.len())
        .map(|i| pop.load_robot(base, i).map(|c| c.policy))
        .collect::<Result<Vec<_>>>()?;
    let teams: Vec<Team<'_>> = pop
        .entries
        .iter()
        .zip(robots.iter().zip(&humans))
        .map(|(e, (r, h))| {
            Ok(Team {
                label: e.id.clone(),
                robot: r,
                human: &h.policy,
                disability: disability_setting(e.setting)?,
            })
        })
        .collect::<Result<_>>()?;
    crossplay(&env, &teams, episodes_per_cell, seed)
}

/// Leaf order of an average-linkage hierarchical clustering of the teams.
///
/// Returns are min-max normalized, symmetrized as `(M + Mᵀ)/2` and turned
/// into distances `1 - m`. Ties merge the pair with the lowest cluster
/// indices first; a merged cluster lists its lower-indexed side first.
pub fn cluster_order(matrix: &[Vec<f64>]) -> Result<Vec<usize>> {
    let n = matrix.len();
    if n == 0 || matrix.iter().any(|r| r.len() != n) {
        return Err(Error::contract(
            "cluster_order needs a non-empty square matrix",
        ));
    }
    if matrix.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::contract("cluster_order needs finite returns"));
    }
    let (lo, hi) = matrix
        .iter()
        .flatten()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
            (a.min(v), b.max(v))
        });
    let span = if hi > lo { hi - lo } else { 1.0 };
    let dist = |i: usize, j: usize| 1.0 - 0.5 * ((matrix[i][j] - lo) + (matrix[j][i] - lo)) / span;

    // clusters: (leaves in order, smallest leaf)
    let mut clusters: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    while clusters.len() > 1 {
        let mut best = (f64::INFINITY, 0, 0);
        for a in 0..clusters.len() {
            for b in a + 1..clusters.len() {
                let mut d = 0.0;
                for &i in &clusters[a] {
                    for &j in &clusters[b] {
                        d += dist(i, j);
                    }
                }
                d /= (clusters[a].len() * clusters[b].len()) as f64;
                if d < best.0 - 1e-12 {
                    best = (d, a, b);
                }
            }
        }
        let (_, a, b) = best;
        let right = clusters.remove(b);
        clusters[a].extend(right);
    }
    Ok(clusters.pop().expect("one cluster remains"))
}
