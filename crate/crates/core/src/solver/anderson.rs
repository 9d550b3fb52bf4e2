//! Type-II Anderson mixing over the combined local/global fixed-point map.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};

use super::SolverError;

/// Extrapolates from residual and map-value differences:
/// `x = g - dG * gamma` with `gamma = argmin |f - dF * gamma|`.
pub fn anderson_extrapolate(g: &DVector<f64>, f: &DVector<f64>, df: &[DVector<f64>], dg: &[DVector<f64>]) -> Result<DVector<f64>, SolverError> {
    if df.is_empty() || df.len() != dg.len() {
        return Err(SolverError::RankDeficientHistory);
    }
    let m = df.len();
    let a = DMatrix::from_columns(df);
    // Normal equations on an m x m system; m is small.
    let ata = a.transpose() * &a;
    let atf = a.transpose() * f;
    let scale = ata.diagonal().amax();
    if !(scale > 0.0) {
        return Err(SolverError::RankDeficientHistory);
    }
    let svd = ata.svd(true, true);
    let smin = svd.singular_values.min();
    if smin <= 1e-12 * scale {
        return Err(SolverError::RankDeficientHistory);
    }
    let gamma = svd.solve(&atf, 0.0).map_err(|_| SolverError::RankDeficientHistory)?;
    let mut x = g.clone();
    for j in 0..m {
        x.axpy(-gamma[j], &dg[j], 1.0);
    }
    if x.iter().all(|v| v.is_finite()) {
        Ok(x)
    } else {
        Err(SolverError::RankDeficientHistory)
    }
}

/// Sliding history of the last `depth` differences.
#[derive(Debug, Clone)]
pub struct Anderson {
    depth: usize,
    prev: Option<(DVector<f64>, DVector<f64>)>,
    df: VecDeque<DVector<f64>>,
    dg: VecDeque<DVector<f64>>,
}

impl Anderson {
    pub fn new(depth: usize) -> Self {
        Anderson { depth, prev: None, df: VecDeque::new(), dg: VecDeque::new() }
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn reset(&mut self) {
        self.prev = None;
        self.df.clear();
        self.dg.clear();
    }

    pub fn history_len(&self) -> usize {
        self.df.len()
    }

    /// Records the pair `(x, g = G(x))` and returns an extrapolated point,
    /// or `None` when disabled, when the history is too short or when it is
    /// rank deficient (the history is then restarted from this pair).
    pub fn step(&mut self, x: &DVector<f64>, g: &DVector<f64>) -> Option<DVector<f64>> {
        if self.depth == 0 {
            return None;
        }
        let f = g - x;
        if let Some((pf, pg)) = self.prev.take() {
            self.df.push_back(&f - pf);
            self.dg.push_back(g - pg);
            while self.df.len() > self.depth {
                self.df.pop_front();
                self.dg.pop_front();
            }
        }
        self.prev = Some((f.clone(), g.clone()));
        if self.df.is_empty() {
            return None;
        }
        let df: Vec<DVector<f64>> = self.df.iter().cloned().collect();
        let dg: Vec<DVector<f64>> = self.dg.iter().cloned().collect();
        match anderson_extrapolate(g, &f, &df, &dg) {
            Ok(x) => Some(x),
            Err(_) => {
                self.df.clear();
                self.dg.clear();
                None
            }
        }
    }

    /// Keeps only the latest pair, discarding older differences.
    pub fn restart_from(&mut self, x: &DVector<f64>, g: &DVector<f64>) {
        self.reset();
        self.prev = Some((g - x, g.clone()));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Linear contraction `G(x) = A x + b` with a slow mode.
    fn map(x: &DVector<f64>) -> DVector<f64> {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![0.99, 0.5, 0.9, 0.2]));
        let b = DVector::from_vec(vec![1.0, -2.0, 0.5, 3.0]);
        a * x + b
    }

    fn iterations(depth: usize) -> usize {
        let mut acc = Anderson::new(depth);
        let mut x = DVector::zeros(4);
        for k in 1..5000 {
            let g = map(&x);
            if (&g - &x).amax() < 1e-10 {
                return k;
            }
            x = acc.step(&x, &g).unwrap_or(g);
        }
        usize::MAX
    }

    #[test]
    fn disabled_is_plain_iteration() {
        let mut acc = Anderson::new(0);
        let x = DVector::zeros(4);
        assert!(acc.step(&x, &map(&x)).is_none());
    }

    #[test]
    fn fixed_point_is_kept() {
        let mut acc = Anderson::new(3);
        let x = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        assert!(acc.step(&x, &x).is_none());
        // Zero residual differences are rank deficient: plain update, which is x.
        assert!(acc.step(&x, &x).is_none());
    }

    #[test]
    fn accelerates_a_linear_contraction() {
        let plain = iterations(0);
        let fast = iterations(5);
        assert!(fast < plain, "anderson {fast} vs plain {plain}");
        assert!(fast < 50);
    }

    #[test]
    fn empty_history_is_rank_deficient() {
        let g = DVector::zeros(2);
        assert_eq!(anderson_extrapolate(&g, &g, &[], &[]), Err(SolverError::RankDeficientHistory));
    }
}
