//! Permutation-minimized misclassification rates.
//!
//! Both metrics minimize over relabelings with an exact linear assignment
//! (Hungarian algorithm on integer costs), so they are exact at any number of
//! groups.

use crate::error::{Error, Result};
use crate::types::{ClusteringAssignment, GroundTruthModel};

/// Minimum-cost perfect matching on a square integer cost matrix.
///
/// Returns `assign` with row `i` matched to column `assign[i]`, and the
/// total cost.
pub fn hungarian(cost: &[Vec<i64>]) -> (Vec<usize>, i64) {
    let n = cost.len();
    if n == 0 {
        return (Vec::new(), 0);
    }
    assert!(
        cost.iter().all(|r| r.len() == n),
        "cost matrix must be square"
    );
    // potentials u (rows) and v (columns); index 0 is a sentinel column
    let inf = i64::MAX / 4;
    let mut u = vec![0i64; n + 1];
    let mut v = vec![0i64; n + 1];
    let mut row_of = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        row_of[0] = i;
        let mut j0 = 0;
        let mut min_v = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < min_v[j] {
                    min_v[j] = cur;
                    way[j] = j0;
                }
                if min_v[j] < delta {
                    delta = min_v[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_v[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assign = vec![0; n];
    for j in 1..=n {
        assign[row_of[j] - 1] = j - 1;
    }
    let total = (0..n).map(|i| cost[i][assign[i]]).sum();
    (assign, total)
}

/// Best matching of labels between two assignments of the same items.
#[derive(Clone, Debug, PartialEq)]
pub struct LabelMatch {
    /// Items whose labels disagree under the best relabeling.
    pub mismatches: usize,
    /// `permutation[g]` is the estimated label matched to true label `g`
    /// (both 0-based). Its length is the larger of the two label counts.
    pub permutation: Vec<usize>,
}

/// Match the labels of `estimate` to those of `truth`, maximizing agreement.
pub fn match_labels(
    truth: &ClusteringAssignment,
    estimate: &ClusteringAssignment,
) -> Result<LabelMatch> {
    if truth.len() != estimate.len() {
        return Err(Error::Dimension(format!(
            "assignments cover {} and {} items",
            truth.len(),
            estimate.len()
        )));
    }
    let g = truth.num_groups().max(estimate.num_groups());
    let mut confusion = vec![vec![0i64; g]; g];
    for (&a, &b) in truth.as_zero_based().iter().zip(estimate.as_zero_based()) {
        confusion[a][b] += 1;
    }
    let cost: Vec<Vec<i64>> = confusion
        .iter()
        .map(|row| row.iter().map(|&c| -c).collect())
        .collect();
    let (permutation, total) = hungarian(&cost);
    Ok(LabelMatch {
        mismatches: truth.len() - (-total) as usize,
        permutation,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct BetweenError {
    /// Fraction of misclassified layers, in `[0, 1]`.
    pub err: f64,
    pub mismatches: usize,
    /// True group to estimated group, 0-based.
    pub permutation: Vec<usize>,
}

/// Proportion of misclassified layers under the best relabeling of groups.
pub fn between_error(
    c_true: &ClusteringAssignment,
    c_hat: &ClusteringAssignment,
) -> Result<BetweenError> {
    let m = match_labels(c_true, c_hat)?;
    let l = c_true.len();
    Ok(BetweenError {
        err: if l == 0 {
            0.0
        } else {
            m.mismatches as f64 / l as f64
        },
        mismatches: m.mismatches,
        permutation: m.permutation,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct WithinError {
    /// Mean over groups of the fraction of misclassified nodes.
    pub r_wl: f64,
    /// True group to estimated group, 0-based.
    pub group_permutation: Vec<usize>,
    /// For each true group, its community permutation against the matched
    /// estimated group.
    pub community_permutations: Vec<Vec<usize>>,
    /// Per true group, the fraction of misclassified nodes.
    pub per_group: Vec<f64>,
}

/// Average within-group node misclassification, minimized jointly over the
/// pairing of true and estimated groups and the community labels inside
/// every pair.
pub fn within_error(
    z_true: &[ClusteringAssignment],
    z_hat: &[ClusteringAssignment],
) -> Result<WithinError> {
    let m = z_true.len();
    if m == 0 || z_hat.len() != m {
        return Err(Error::Dimension(format!(
            "{} true and {} estimated groups",
            m,
            z_hat.len()
        )));
    }
    let n = z_true[0].len();
    if z_true.iter().chain(z_hat).any(|z| z.len() != n) {
        return Err(Error::Dimension("node assignments differ in length".into()));
    }
    // inner minima are independent across pairs, so nesting is exact
    let mut inner = vec![vec![None; m]; m];
    let mut cost = vec![vec![0i64; m]; m];
    for a in 0..m {
        for b in 0..m {
            let lm = match_labels(&z_true[a], &z_hat[b])?;
            cost[a][b] = lm.mismatches as i64;
            inner[a][b] = Some(lm);
        }
    }
    let (group_permutation, total) = hungarian(&cost);
    let mut community_permutations = Vec::with_capacity(m);
    let mut per_group = Vec::with_capacity(m);
    for (a, &b) in group_permutation.iter().enumerate() {
        let lm = inner[a][b].take().expect("each pair matched once");
        per_group.push(if n == 0 {
            0.0
        } else {
            lm.mismatches as f64 / n as f64
        });
        community_permutations.push(lm.permutation);
    }
    let denom = (m * n) as f64;
    Ok(WithinError {
        r_wl: if n == 0 { 0.0 } else { total as f64 / denom },
        group_permutation,
        community_permutations,
        per_group,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ErrorReport {
    pub err_between: f64,
    pub r_wl: f64,
    pub group_permutation: Vec<usize>,
    pub community_permutations: Vec<Vec<usize>>,
}

/// Both metrics of an estimate against the generating model.
pub fn error_report(
    model: &GroundTruthModel,
    c_hat: &ClusteringAssignment,
    z_hat: &[ClusteringAssignment],
) -> Result<ErrorReport> {
    let between = between_error(model.layer_labels(), c_hat)?;
    let within = within_error(model.node_labels(), z_hat)?;
    Ok(ErrorReport {
        err_between: between.err,
        r_wl: within.r_wl,
        group_permutation: within.group_permutation,
        community_permutations: within.community_permutations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn assignment(labels: &[usize], g: usize) -> ClusteringAssignment {
        ClusteringAssignment::from_zero_based(labels.to_vec(), g).unwrap()
    }

    fn permutations(k: usize) -> Vec<Vec<usize>> {
        if k == 0 {
            return vec![Vec::new()];
        }
        let mut out = Vec::new();
        for p in permutations(k - 1) {
            for pos in 0..k {
                let mut q = p.clone();
                q.insert(pos, k - 1);
                out.push(q);
            }
        }
        out
    }

    #[test]
    fn hungarian_small_cases() {
        assert_eq!(hungarian(&[]), (vec![], 0));
        let (a, c) = hungarian(&[vec![4, 1, 3], vec![2, 0, 5], vec![3, 2, 2]]);
        assert_eq!(c, 5);
        assert_eq!(a, vec![1, 0, 2]);
    }

    #[test]
    fn between_examples() {
        let c = assignment(&[0, 0, 1, 1, 2, 2, 0, 1, 2, 0], 3);
        assert_eq!(between_error(&c, &c).unwrap().err, 0.0);
        let mut moved = c.as_zero_based().to_vec();
        moved[3] = 2;
        let e = between_error(&c, &assignment(&moved, 3)).unwrap();
        assert!((e.err - 0.1).abs() < 1e-15);
        assert_eq!(e.mismatches, 1);
    }

    #[test]
    fn within_examples() {
        let z = vec![assignment(&[0, 0, 1, 1], 2), assignment(&[0, 1, 0, 1], 2)];
        assert_eq!(within_error(&z, &z).unwrap().r_wl, 0.0);
        let swapped = vec![z[1].clone(), z[0].clone()];
        let e = within_error(&z, &swapped).unwrap();
        assert_eq!(e.r_wl, 0.0);
        assert_eq!(e.group_permutation, vec![1, 0]);
    }

    #[test]
    fn dimension_mismatch() {
        assert!(between_error(&assignment(&[0, 1], 2), &assignment(&[0], 1)).is_err());
        let z = vec![assignment(&[0, 1], 2)];
        assert!(within_error(&z, &[]).is_err());
    }

    proptest! {
        #[test]
        fn hungarian_matches_enumeration(
            k in 1usize..6,
            entries in proptest::collection::vec(-20i64..20, 36),
        ) {
            let cost: Vec<Vec<i64>> = (0..k).map(|i| entries[i * 6..i * 6 + k].to_vec()).collect();
            let best = permutations(k)
                .iter()
                .map(|p| (0..k).map(|i| cost[i][p[i]]).sum::<i64>())
                .min()
                .unwrap();
            let (assign, total) = hungarian(&cost);
            prop_assert_eq!(total, best);
            let mut seen = assign.clone();
            seen.sort();
            prop_assert_eq!(seen, (0..k).collect::<Vec<_>>());
        }

        #[test]
        fn between_invariant_to_relabeling(
            labels in proptest::collection::vec((0usize..4, 0usize..4), 1..30),
            perm_idx in 0usize..24,
        ) {
            let truth = assignment(&labels.iter().map(|p| p.0).collect::<Vec<_>>(), 4);
            let est: Vec<usize> = labels.iter().map(|p| p.1).collect();
            let perm = &permutations(4)[perm_idx];
            let relabeled: Vec<usize> = est.iter().map(|&g| perm[g]).collect();
            let e1 = between_error(&truth, &assignment(&est, 4)).unwrap();
            let e2 = between_error(&truth, &assignment(&relabeled, 4)).unwrap();
            prop_assert_eq!(e1.mismatches, e2.mismatches);
            prop_assert!((0.0..=1.0).contains(&e1.err));
            // swapping roles gives the same minimum
            let e3 = between_error(&assignment(&est, 4), &truth).unwrap();
            prop_assert_eq!(e1.mismatches, e3.mismatches);
        }

        #[test]
        fn within_invariant_to_relabeling(
            labels in proptest::collection::vec((0usize..3, 0usize..3, 0usize..3, 0usize..3), 1..12),
            p1 in 0usize..6,
            p2 in 0usize..6,
        ) {
            let z = vec![
                assignment(&labels.iter().map(|t| t.0).collect::<Vec<_>>(), 3),
                assignment(&labels.iter().map(|t| t.1).collect::<Vec<_>>(), 3),
            ];
            let h: Vec<Vec<usize>> = vec![
                labels.iter().map(|t| t.2).collect(),
                labels.iter().map(|t| t.3).collect(),
            ];
            let perms = permutations(3);
            let e1 = within_error(&z, &[assignment(&h[0], 3), assignment(&h[1], 3)]).unwrap();
            let relabeled = [
                assignment(&h[1].iter().map(|&g| perms[p2][g]).collect::<Vec<_>>(), 3),
                assignment(&h[0].iter().map(|&g| perms[p1][g]).collect::<Vec<_>>(), 3),
            ];
            let e2 = within_error(&z, &relabeled).unwrap();
            prop_assert!((e1.r_wl - e2.r_wl).abs() < 1e-15);
            prop_assert!(e1.per_group.iter().all(|r| (0.0..=1.0).contains(r)));
        }
    }
}
