//! O(n^3) Hungarian algorithm with a deterministic lexicographic tie-break.
//!
//! The rectangular `M x K` problem is padded to `K x K` with zero-weight dummy
//! agents. After the dual potentials are optimal, every optimal assignment
//! lives on the "tight" edges (zero reduced cost), so the lexicographically
//! smallest optimum is found by greedily moving each agent, in order, to the
//! smallest tight arm that still admits a perfect tight matching. Candidates
//! are compared structurally rather than by perturbing weights.

use crate::error::{invalid, Result};
use crate::instance::{Matching, RewardMatrix};

/// Finite `M x K` edge weights with `M <= K`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl WeightMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let m = rows.len();
        let k = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != k) {
            return Err(invalid("weight rows have unequal lengths"));
        }
        Self::from_fn(m, k, |i, j| rows[i][j])
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        if rows == 0 || rows > cols {
            return Err(invalid(format!("need 1 <= M <= K, got M={rows}, K={cols}")));
        }
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                let v = f(i, j);
                if !v.is_finite() {
                    return Err(invalid(format!("non-finite weight at ({}, {})", i + 1, j + 1)));
                }
                data.push(v);
            }
        }
        Ok(Self { rows, cols, data })
    }

    pub fn num_agents(&self) -> usize {
        self.rows
    }

    pub fn num_arms(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, agent: usize, arm: usize) -> f64 {
        self.data[agent * self.cols + arm]
    }

    fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |a, v| a.max(v.abs()))
    }
}

impl From<&RewardMatrix> for WeightMatrix {
    fn from(means: &RewardMatrix) -> Self {
        Self::from_fn(means.num_agents(), means.num_arms(), |m, k| means.mean(m, k))
            .expect("reward matrices are finite with M <= K")
    }
}

/// Sum of weights along a matching.
pub fn matching_value(weights: &WeightMatrix, matching: &Matching) -> f64 {
    matching.edges().map(|(m, k)| weights.get(m, k)).sum()
}

/// Maximum-weight matching; ties go to the lexicographically smallest arm vector.
pub fn hungarian(weights: &WeightMatrix) -> Matching {
    let arms = solve(weights, None).expect("unconstrained problem is always feasible");
    Matching::from_vec_unchecked(arms)
}

/// Solves the problem with `drop_agent` and `drop_arm` removed and returns
/// the remaining `(agent, arm)` pairs in original indices, in agent order.
pub fn hungarian_excluding(
    weights: &WeightMatrix,
    drop_agent: usize,
    drop_arm: usize,
) -> Result<Vec<(usize, usize)>> {
    if drop_agent >= weights.rows || drop_arm >= weights.cols {
        return Err(invalid(format!(
            "edge ({}, {}) outside a {}x{} problem",
            drop_agent + 1,
            drop_arm + 1,
            weights.rows,
            weights.cols
        )));
    }
    if weights.rows == 1 {
        return Ok(Vec::new());
    }
    let agents: Vec<usize> = (0..weights.rows).filter(|&m| m != drop_agent).collect();
    let arms: Vec<usize> = (0..weights.cols).filter(|&k| k != drop_arm).collect();
    let reduced = WeightMatrix::from_fn(agents.len(), arms.len(), |i, j| {
        weights.get(agents[i], arms[j])
    })?;
    let sub = hungarian(&reduced);
    Ok(sub.edges().map(|(i, j)| (agents[i], arms[j])).collect())
}

/// Best matching that contains edge `(agent, arm)`.
pub fn hungarian_with_edge(weights: &WeightMatrix, agent: usize, arm: usize) -> Result<Matching> {
    let rest = hungarian_excluding(weights, agent, arm)?;
    let mut arm_of = vec![0; weights.rows];
    arm_of[agent] = arm;
    for (m, k) in rest {
        arm_of[m] = k;
    }
    Ok(Matching::from_vec_unchecked(arm_of))
}

/// Best matching different from `current`, ties to the lexicographically
/// smallest. `None` only when `current` is the sole matching (`M = K = 1`).
///
/// Any other matching misses at least one edge of `current`, so it suffices to
/// solve once per edge with that edge forbidden.
pub fn best_other_matching(weights: &WeightMatrix, current: &Matching) -> Option<Matching> {
    let tol = tie_tolerance(weights);
    let mut forbidden = vec![false; weights.rows * weights.cols];
    let mut best: Option<(f64, Vec<usize>)> = None;
    for (m, k) in current.edges() {
        let cell = m * weights.cols + k;
        forbidden[cell] = true;
        if let Some(arms) = solve(weights, Some(&forbidden)) {
            let value: f64 = arms.iter().enumerate().map(|(i, &j)| weights.get(i, j)).sum();
            let better = match &best {
                None => true,
                Some((bv, barms)) => value > bv + tol || (value >= bv - tol && arms < *barms),
            };
            if better {
                best = Some((value, arms));
            }
        }
        forbidden[cell] = false;
    }
    best.map(|(_, arms)| Matching::from_vec_unchecked(arms))
}

fn tie_tolerance(weights: &WeightMatrix) -> f64 {
    1e-9 * (1.0 + weights.max_abs())
}

/// Core solver. `forbidden` marks real-agent cells that may not be used.
fn solve(weights: &WeightMatrix, forbidden: Option<&[bool]>) -> Option<Vec<usize>> {
    let (rows, n) = (weights.rows, weights.cols);
    let max_abs = weights.max_abs();
    let big = 4.0 * (n as f64 + 1.0) * (max_abs + 1.0);
    let is_forbidden = |i: usize, j: usize| i < rows && forbidden.is_some_and(|f| f[i * n + j]);
    let cost = |i: usize, j: usize| {
        if i >= rows {
            0.0
        } else if is_forbidden(i, j) {
            big
        } else {
            -weights.get(i, j)
        }
    };

    // Shortest augmenting paths with potentials; index 0 is a sentinel.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    let mut minv = vec![0.0; n + 1];
    let mut used = vec![false; n + 1];
    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0;
        minv.fill(f64::INFINITY);
        used.fill(false);
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut row_of_col: Vec<usize> = (1..=n).map(|j| owner[j] - 1).collect();
    let mut col_of_row = vec![0usize; n];
    for (j, &i) in row_of_col.iter().enumerate() {
        col_of_row[i] = j;
    }
    if (0..rows).any(|i| is_forbidden(i, col_of_row[i])) {
        return None;
    }

    let tol = tie_tolerance(weights);
    let tight = |i: usize, j: usize| !is_forbidden(i, j) && cost(i, j) - u[i + 1] - v[j + 1] <= tol;
    let mut locked = vec![false; n];
    let mut visited = vec![false; n];
    let mut path = Vec::with_capacity(n);
    for m in 0..rows {
        let current = col_of_row[m];
        for k in 0..current {
            let r = row_of_col[k];
            if !tight(m, k) || locked[r] {
                continue;
            }
            visited.fill(false);
            path.clear();
            let mut search = PathSearch {
                n,
                start: m,
                target: current,
                banned: k,
                tight: &tight,
                locked: &locked,
                row_of_col: &row_of_col,
                col_of_row: &col_of_row,
                visited: &mut visited,
                path: &mut path,
            };
            if search.run(r) {
                for &(x, c) in path.iter() {
                    col_of_row[x] = c;
                    row_of_col[c] = x;
                }
                col_of_row[m] = k;
                row_of_col[k] = m;
                break;
            }
        }
        locked[m] = true;
    }
    col_of_row.truncate(rows);
    Some(col_of_row)
}

/// Alternating-path search that re-homes the displaced row onto the column
/// the moving agent is about to vacate.
struct PathSearch<'a, F: Fn(usize, usize) -> bool> {
    n: usize,
    start: usize,
    target: usize,
    banned: usize,
    tight: &'a F,
    locked: &'a [bool],
    row_of_col: &'a [usize],
    col_of_row: &'a [usize],
    visited: &'a mut [bool],
    path: &'a mut Vec<(usize, usize)>,
}

impl<F: Fn(usize, usize) -> bool> PathSearch<'_, F> {
    fn run(&mut self, row: usize) -> bool {
        self.visited[row] = true;
        for c in 0..self.n {
            if c == self.banned || c == self.col_of_row[row] || !(self.tight)(row, c) {
                continue;
            }
            if c == self.target {
                self.path.push((row, c));
                return true;
            }
            let next = self.row_of_col[c];
            if next == self.start || self.locked[next] || self.visited[next] {
                continue;
            }
            self.path.push((row, c));
            if self.run(next) {
                return true;
            }
            self.path.pop();
        }
        false
    }
}
