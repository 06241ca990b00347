use super::{FactorError, Result};
use crate::numeric::stats::pearson;
use crate::numeric::Matrix;

const EXHAUSTIVE_MAX: usize = 8;

/// Column matching of one factor matrix onto a reference.
#[derive(Debug, Clone, PartialEq)]
pub struct Alignment {
    /// `permutation[j]` is the candidate column matched to reference column `j`.
    pub permutation: Vec<usize>,
    /// Sign that makes each matched pair positively correlated.
    pub signs: Vec<f64>,
    /// `|corr|` of each matched pair.
    pub abs_correlations: Vec<f64>,
}

impl Alignment {
    pub fn apply(&self, candidate: &Matrix) -> Matrix {
        Matrix::from_fn(candidate.nrows(), self.permutation.len(), |r, j| {
            self.signs[j] * candidate[(r, self.permutation[j])]
        })
    }

    pub fn score(&self) -> f64 {
        self.abs_correlations.iter().sum()
    }
}

fn corr_matrix(candidate: &Matrix, reference: &Matrix) -> Vec<Vec<f64>> {
    let k = reference.ncols();
    let cols = |m: &Matrix, j: usize| m.column(j).iter().copied().collect::<Vec<f64>>();
    let cand: Vec<Vec<f64>> = (0..k).map(|j| cols(candidate, j)).collect();
    let refs: Vec<Vec<f64>> = (0..k).map(|j| cols(reference, j)).collect();
    refs.iter().map(|r| cand.iter().map(|c| pearson(c, r)).collect()).collect()
}

fn best_permutation(abs: &[Vec<f64>]) -> Vec<usize> {
    let k = abs.len();
    let mut best = (f64::NEG_INFINITY, Vec::new());
    let mut current = Vec::with_capacity(k);
    let mut used = vec![false; k];
    fn walk(abs: &[Vec<f64>], current: &mut Vec<usize>, used: &mut [bool], acc: f64, best: &mut (f64, Vec<usize>)) {
        let j = current.len();
        if j == abs.len() {
            if acc > best.0 {
                *best = (acc, current.clone());
            }
            return;
        }
        for c in 0..abs.len() {
            if !used[c] {
                used[c] = true;
                current.push(c);
                walk(abs, current, used, acc + abs[j][c], best);
                current.pop();
                used[c] = false;
            }
        }
    }
    walk(abs, &mut current, &mut used, 0.0, &mut best);
    best.1
}

fn greedy_permutation(abs: &[Vec<f64>]) -> Vec<usize> {
    let k = abs.len();
    let mut perm = vec![usize::MAX; k];
    let mut used = vec![false; k];
    for _ in 0..k {
        let mut pick = (f64::NEG_INFINITY, 0, 0);
        for (j, row) in abs.iter().enumerate().filter(|(j, _)| perm[*j] == usize::MAX) {
            for (c, v) in row.iter().enumerate().filter(|(c, _)| !used[*c]) {
                if *v > pick.0 {
                    pick = (*v, j, c);
                }
            }
        }
        perm[pick.1] = pick.2;
        used[pick.2] = true;
    }
    perm
}

/// Permutes and sign-flips the columns of `candidate` to maximize the summed
/// absolute correlation with `reference`. Exhaustive for up to eight columns,
/// greedy beyond.
pub fn align_factors(candidate: &Matrix, reference: &Matrix) -> Result<Alignment> {
    if candidate.shape() != reference.shape() {
        return Err(FactorError::ShapeMismatch(format!(
            "candidate is {:?} but reference is {:?}",
            candidate.shape(),
            reference.shape()
        )));
    }
    let corr = corr_matrix(candidate, reference);
    let abs: Vec<Vec<f64>> = corr.iter().map(|r| r.iter().map(|v| v.abs()).collect()).collect();
    let permutation = if abs.len() <= EXHAUSTIVE_MAX { best_permutation(&abs) } else { greedy_permutation(&abs) };
    let signs = permutation.iter().enumerate().map(|(j, &c)| if corr[j][c] < 0.0 { -1.0 } else { 1.0 }).collect();
    let abs_correlations = permutation.iter().enumerate().map(|(j, &c)| abs[j][c]).collect();
    Ok(Alignment { permutation, signs, abs_correlations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::RngStream;

    #[test]
    fn recovers_planted_permutation() {
        let mut rng = RngStream::new(3, 0);
        let reference = Matrix::from_fn(100, 4, |_, _| rng.standard_normal());
        let perm = [2, 0, 3, 1];
        let signs = [1.0, -1.0, -1.0, 1.0];
        // candidate column perm[j] = signs[j] * reference column j + noise
        let mut cand = Matrix::zeros(100, 4);
        for j in 0..4 {
            for r in 0..100 {
                cand[(r, perm[j])] = signs[j] * reference[(r, j)] + 0.1 * rng.standard_normal();
            }
        }
        let a = align_factors(&cand, &reference).unwrap();
        assert_eq!(a.permutation, perm.to_vec());
        assert_eq!(a.signs, signs.to_vec());
        let aligned = a.apply(&cand);
        for j in 0..4 {
            let x: Vec<f64> = aligned.column(j).iter().copied().collect();
            let y: Vec<f64> = reference.column(j).iter().copied().collect();
            assert!(pearson(&x, &y) > 0.9);
        }
    }

    #[test]
    fn greedy_is_a_permutation() {
        let mut rng = RngStream::new(4, 0);
        let abs: Vec<Vec<f64>> = (0..10).map(|_| (0..10).map(|_| rng.uniform()).collect()).collect();
        let mut p = greedy_permutation(&abs);
        p.sort_unstable();
        assert_eq!(p, (0..10).collect::<Vec<_>>());
    }
}
