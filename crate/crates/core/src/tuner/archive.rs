use serde::{Deserialize, Serialize};

use crate::space::Configuration;

/// Three minimized objectives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveVector {
    pub size_mb: f64,
    pub gflops: f64,
    /// Negated effectiveness, in `[-1, 0]`.
    pub neg_effectiveness: f64,
}

impl ObjectiveVector {
    pub fn new(size_mb: f64, gflops: f64, effectiveness: f64) -> Self {
        Self {
            size_mb,
            gflops,
            neg_effectiveness: -effectiveness,
        }
    }

    pub fn effectiveness(&self) -> f64 {
        -self.neg_effectiveness
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.size_mb, self.gflops, self.neg_effectiveness]
    }

    /// No worse anywhere and strictly better somewhere.
    pub fn dominates(&self, other: &ObjectiveVector) -> bool {
        dominates(&self.as_array(), &other.as_array())
    }
}

pub fn dominates(u: &[f64; 3], v: &[f64; 3]) -> bool {
    let mut strict = false;
    for k in 0..3 {
        if u[k] > v[k] {
            return false;
        }
        if u[k] < v[k] {
            strict = true;
        }
    }
    strict
}

#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    pub config: Configuration,
    pub objectives: ObjectiveVector,
}

/// Mutually non-dominated individuals seen so far.
///
/// A candidate whose objectives equal a member's is dropped, so the member
/// inserted first keeps its configuration.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParetoArchive {
    members: Vec<Individual>,
}

impl ParetoArchive {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn members(&self) -> &[Individual] {
        &self.members
    }

    pub fn into_members(self) -> Vec<Individual> {
        self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Returns whether the candidate entered.
    pub fn insert(&mut self, candidate: Individual) -> bool {
        let c = candidate.objectives.as_array();
        if self.members.iter().any(|m| {
            let m = m.objectives.as_array();
            m == c || dominates(&m, &c)
        }) {
            return false;
        }
        self.members
            .retain(|m| !dominates(&c, &m.objectives.as_array()));
        self.members.push(candidate);
        true
    }

    pub fn update<I: IntoIterator<Item = Individual>>(&mut self, candidates: I) {
        for c in candidates {
            self.insert(c);
        }
        debug_assert!(self.is_mutually_non_dominated());
    }

    pub fn is_mutually_non_dominated(&self) -> bool {
        self.members.iter().all(|a| {
            self.members
                .iter()
                .all(|b| !a.objectives.dominates(&b.objectives))
        })
    }

    pub fn objective_points(&self) -> Vec<[f64; 3]> {
        self.members.iter().map(|m| m.objectives.as_array()).collect()
    }
}

/// Volume dominated by `points` inside the box bounded by `reference`.
/// Points not strictly better than the reference in every objective add
/// nothing. Exact, by sweeping slabs along the third objective.
pub fn hypervolume(points: &[[f64; 3]], reference: [f64; 3]) -> f64 {
    let mut pts: Vec<[f64; 3]> = points
        .iter()
        .copied()
        .filter(|p| (0..3).all(|k| p[k] < reference[k]))
        .collect();
    if pts.is_empty() {
        return 0.0;
    }
    pts.sort_by(|a, b| a[2].total_cmp(&b[2]));
    let mut volume = 0.0;
    let mut active: Vec<[f64; 2]> = Vec::with_capacity(pts.len());
    for (i, p) in pts.iter().enumerate() {
        active.push([p[0], p[1]]);
        let top = pts.get(i + 1).map_or(reference[2], |q| q[2]);
        let depth = top - p[2];
        if depth > 0.0 {
            volume += area(&mut active, [reference[0], reference[1]]) * depth;
        }
    }
    volume
}

fn area(points: &mut [[f64; 2]], reference: [f64; 2]) -> f64 {
    points.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    let mut total = 0.0;
    let mut ceiling = reference[1];
    for p in points.iter() {
        if p[1] < ceiling {
            total += (reference[0] - p[0]) * (ceiling - p[1]);
            ceiling = p[1];
        }
    }
    total
}

/// Crowding distance of each point within the set. Extremes get infinity.
pub fn crowding_distances(points: &[[f64; 3]]) -> Vec<f64> {
    let n = points.len();
    let mut dist = vec![0.0; n];
    if n <= 2 {
        return vec![f64::INFINITY; n];
    }
    let mut order: Vec<usize> = (0..n).collect();
    for k in 0..3 {
        order.sort_by(|&a, &b| points[a][k].total_cmp(&points[b][k]));
        let lo = points[order[0]][k];
        let hi = points[order[n - 1]][k];
        dist[order[0]] = f64::INFINITY;
        dist[order[n - 1]] = f64::INFINITY;
        if hi > lo {
            for w in 1..n - 1 {
                let gap = points[order[w + 1]][k] - points[order[w - 1]][k];
                dist[order[w]] += gap / (hi - lo);
            }
        }
    }
    dist
}

/// The member whose size is closest to `target_mb`. Ties go to higher
/// effectiveness, then fewer GFLOPs.
pub fn select_deployment_config(members: &[Individual], target_mb: f64) -> Option<&Individual> {
    let objectives: Vec<ObjectiveVector> = members.iter().map(|m| m.objectives).collect();
    deployment_index(&objectives, target_mb).map(|i| &members[i])
}

/// Index form of [`select_deployment_config`]; the first of exact ties wins.
pub fn deployment_index(objectives: &[ObjectiveVector], target_mb: f64) -> Option<usize> {
    (0..objectives.len()).min_by(|&i, &j| {
        let (a, b) = (&objectives[i], &objectives[j]);
        let da = (a.size_mb - target_mb).abs();
        let db = (b.size_mb - target_mb).abs();
        da.total_cmp(&db)
            .then(b.effectiveness().total_cmp(&a.effectiveness()))
            .then(a.gflops.total_cmp(&b.gflops))
    })
}
