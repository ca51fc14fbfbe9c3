use crate::instance::{Matching, RewardMatrix};

/// 1-based rank of `arm` in `agent`'s preference list: one plus the number of
/// arms with a strictly larger mean.
pub fn preference_rank(means: &RewardMatrix, agent: usize, arm: usize) -> usize {
    let target = means.mean(agent, arm);
    1 + means.row(agent).iter().filter(|&&v| v > target).count()
}

/// Whether some ordering of the agents gives the `j`-th agent a match within
/// its top `j` arms.
///
/// The eligible sets `{m : p_m <= j}` are nested in `j`, so picking any
/// eligible agent never blocks a later level. Sorting the ranks and checking
/// `p_(j) <= j` is that greedy in closed form.
pub fn mlas_check(matching: &Matching, means: &RewardMatrix) -> bool {
    let mut ranks: Vec<usize> = matching
        .edges()
        .map(|(m, k)| preference_rank(means, m, k))
        .collect();
    ranks.sort_unstable();
    ranks.iter().enumerate().all(|(j, &p)| p <= j + 1)
}

/// Reference check that tries every agent ordering. Only sensible for small `M`.
pub fn mlas_check_exhaustive(matching: &Matching, means: &RewardMatrix) -> bool {
    let ranks: Vec<usize> = matching
        .edges()
        .map(|(m, k)| preference_rank(means, m, k))
        .collect();
    let mut order: Vec<usize> = (0..ranks.len()).collect();
    permutations_any(&mut order, 0, &|ord| {
        ord.iter().enumerate().all(|(j, &m)| ranks[m] <= j + 1)
    })
}

fn permutations_any(items: &mut [usize], from: usize, pred: &dyn Fn(&[usize]) -> bool) -> bool {
    if from == items.len() {
        return pred(items);
    }
    for i in from..items.len() {
        items.swap(from, i);
        let hit = permutations_any(items, from + 1, pred);
        items.swap(from, i);
        if hit {
            return true;
        }
    }
    false
}
