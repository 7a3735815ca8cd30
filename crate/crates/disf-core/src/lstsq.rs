//! Small damped least-squares solves.
//!
//! Every solver stage reduces to `min_x ‖A x − b‖²` with at most six
//! unknowns. These are solved through the damped normal equations
//! `(AᵀA + λI) x = Aᵀ b`; the damping keeps directions the data does not
//! constrain pinned at zero instead of exploding. A Cholesky factorization
//! provides the solution and a pivot-ratio condition estimate, and solves
//! whose condition exceeds [`CONDITION_LIMIT`] (or that are not positive
//! definite at all) are rejected with the stage name so callers can report
//! *where* the geometry degenerated.
//!
//! Two front ends share one solve core: [`LeastSquaresSystem`] materializes
//! the stacked rows (handy for oracles and diagnostics), while
//! [`NormalAccumulator`] folds rows straight into the fixed-size normal
//! equations without touching the heap — the form the planner hot paths use.

use nalgebra::allocator::Allocator;
use nalgebra::{
    Const, DMatrix, DVector, DefaultAllocator, Dim, OMatrix, OVector, SMatrix, SVector,
};

use crate::error::{Error, Result};

/// Condition-number ceiling beyond which a solve is reported as rank-deficient.
pub const CONDITION_LIMIT: f64 = 1e12;

/// A stacked linear least-squares system `A x ≈ b`.
#[derive(Clone, Debug)]
pub struct LeastSquaresSystem {
    a: DMatrix<f64>,
    b: DVector<f64>,
}

impl LeastSquaresSystem {
    /// Creates an empty system with `unknowns` columns.
    pub fn new(unknowns: usize) -> Self {
        Self {
            a: DMatrix::zeros(0, unknowns),
            b: DVector::zeros(0),
        }
    }

    /// Appends one residual row. Panics if `row.len()` differs from the
    /// declared number of unknowns — rows are always built from fixed-size
    /// stage code, so a mismatch is a programming error.
    pub fn push_row(&mut self, row: &[f64], rhs: f64) {
        assert_eq!(row.len(), self.a.ncols(), "row width mismatch");
        let m = self.a.nrows();
        self.a = self.a.clone().insert_row(m, 0.0);
        for (j, value) in row.iter().enumerate() {
            self.a[(m, j)] = *value;
        }
        self.b = self.b.clone().insert_row(m, rhs);
    }

    /// Builds a system directly from rows; at least one row is required.
    pub fn from_rows(unknowns: usize, rows: &[(&[f64], f64)]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidConfig(
                "least-squares system needs at least one row".to_string(),
            ));
        }
        let mut a = DMatrix::zeros(rows.len(), unknowns);
        let mut b = DVector::zeros(rows.len());
        for (i, (row, rhs)) in rows.iter().enumerate() {
            assert_eq!(row.len(), unknowns, "row width mismatch");
            for (j, value) in row.iter().enumerate() {
                a[(i, j)] = *value;
            }
            b[i] = *rhs;
        }
        Ok(Self { a, b })
    }

    pub fn rows(&self) -> usize {
        self.a.nrows()
    }

    pub fn unknowns(&self) -> usize {
        self.a.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn rhs(&self) -> &DVector<f64> {
        &self.b
    }

    /// Residual norm `‖A x − b‖` of a candidate solution.
    pub fn residual_norm(&self, x: &DVector<f64>) -> f64 {
        (&self.a * x - &self.b).norm()
    }
}

/// Solves `(AᵀA + λI) x = Aᵀ b` for the already-formed normal equations.
///
/// Generic over the dimension so the dynamically-sized stacked front end and
/// the statically-sized accumulator front end run the exact same arithmetic;
/// with a `Const` dimension the whole solve stays on the stack.
fn solve_damped_core<D>(
    mut normal: OMatrix<f64, D, D>,
    atb: OVector<f64, D>,
    lambda: f64,
    stage: &'static str,
) -> Result<OVector<f64, D>>
where
    D: Dim,
    DefaultAllocator: Allocator<D, D> + Allocator<D>,
{
    for i in 0..normal.nrows() {
        normal[(i, i)] += lambda;
    }
    let Some(factor) = normal.cholesky() else {
        // Not positive definite even after damping: flatly singular.
        return Err(Error::RankDeficient {
            stage,
            condition: f64::INFINITY,
        });
    };
    let mut d_min = f64::INFINITY;
    let mut d_max = 0.0f64;
    let lower = factor.l_dirty();
    for i in 0..lower.nrows() {
        let d = lower[(i, i)];
        d_min = d_min.min(d);
        d_max = d_max.max(d);
    }
    // Pivot-ratio condition estimate: the squared extreme diagonal entries of
    // the Cholesky factor bracket the spectrum tightly enough to flag the
    // near-singular geometry this guard exists for.
    let condition = if d_min > 0.0 {
        (d_max / d_min).powi(2)
    } else {
        f64::INFINITY
    };
    if !(condition < CONDITION_LIMIT) {
        return Err(Error::RankDeficient { stage, condition });
    }
    Ok(factor.solve(&atb))
}

/// Solves `(AᵀA + λI) x = Aᵀ b`.
///
/// Errors with [`Error::RankDeficient`] naming `stage` when the damped normal
/// matrix is not positive definite or its condition estimate lands above
/// [`CONDITION_LIMIT`].
pub fn solve_normal_equations(
    system: &LeastSquaresSystem,
    lambda: f64,
    stage: &'static str,
) -> Result<DVector<f64>> {
    if system.rows() == 0 {
        return Err(Error::InvalidConfig(
            "least-squares system needs at least one row".to_string(),
        ));
    }
    if system.a.iter().any(|v| !v.is_finite()) || system.b.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidConfig(
            "non-finite entries in least-squares system".to_string(),
        ));
    }
    let ata = system.a.transpose() * &system.a;
    let atb = system.a.transpose() * &system.b;
    solve_damped_core(ata, atb, lambda, stage)
}

/// Row-by-row accumulator for the normal equations of a fixed-width system.
///
/// Feeding the same rows here and into a [`LeastSquaresSystem`] yields the
/// same solution through the same conditioning checks; the accumulator just
/// never materializes the stacked matrix, so adding a row is a rank-one
/// update on a stack-allocated `N×N` matrix.
#[derive(Clone, Debug)]
pub struct NormalAccumulator<const N: usize> {
    ata: SMatrix<f64, N, N>,
    atb: SVector<f64, N>,
    rows: usize,
}

impl<const N: usize> NormalAccumulator<N> {
    pub fn new() -> Self {
        Self {
            ata: SMatrix::zeros(),
            atb: SVector::zeros(),
            rows: 0,
        }
    }

    /// Folds one residual row `row · x ≈ rhs` into the normal equations.
    pub fn add_row(&mut self, row: SVector<f64, N>, rhs: f64) {
        self.ata += row * row.transpose();
        self.atb += row * rhs;
        self.rows += 1;
    }

    /// Folds a row whose components beyond the first `M` are all zero.
    ///
    /// Equivalent to [`Self::add_row`] with the row zero-padded to width `N`,
    /// but touches only the leading `M×M` block of the normal matrix — the
    /// trailing zeros contribute nothing anywhere else.
    pub fn add_leading_row<const M: usize>(&mut self, leading: SVector<f64, M>, rhs: f64) {
        const { assert!(M <= N, "leading block wider than the system") };
        let mut block = self.ata.fixed_view_mut::<M, M>(0, 0);
        block += leading * leading.transpose();
        let mut head = self.atb.fixed_rows_mut::<M>(0);
        head += leading * rhs;
        self.rows += 1;
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Solves the accumulated system; see [`solve_normal_equations`] for the
    /// error contract.
    pub fn solve(&self, lambda: f64, stage: &'static str) -> Result<SVector<f64, N>> {
        if self.rows == 0 {
            return Err(Error::InvalidConfig(
                "least-squares system needs at least one row".to_string(),
            ));
        }
        if self.ata.iter().any(|v| !v.is_finite()) || self.atb.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig(
                "non-finite entries in least-squares system".to_string(),
            ));
        }
        solve_damped_core::<Const<N>>(self.ata, self.atb, lambda, stage)
    }
}

impl<const N: usize> Default for NormalAccumulator<N> {
    fn default() -> Self {
        Self::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent oracle: thin-QR least squares.
    fn qr_solve(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
        let qr = a.clone().qr();
        let qtb = qr.q().transpose() * b;
        qr.r()
            .solve_upper_triangular(&qtb)
            .expect("oracle system should be full rank")
    }

    fn pseudo_random_system(rows: usize, cols: usize, seed: u64) -> LeastSquaresSystem {
        let mut state = seed;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
        };
        let mut sys = LeastSquaresSystem::new(cols);
        for _ in 0..rows {
            let row: Vec<f64> = (0..cols).map(|_| next()).collect();
            sys.push_row(&row, next());
        }
        sys
    }

    #[test]
    fn undamped_solution_matches_qr_oracle() {
        for seed in [1u64, 2, 3, 4, 5] {
            let sys = pseudo_random_system(12, 3, seed);
            let x = solve_normal_equations(&sys, 0.0, "test").unwrap();
            let oracle = qr_solve(sys.matrix(), sys.rhs());
            let rel = (&x - &oracle).norm() / oracle.norm().max(1.0);
            assert!(rel < 1e-9, "seed {seed}: relative deviation {rel:e}");
        }
    }

    #[test]
    fn damping_below_eigenvalues_barely_perturbs_the_solution() {
        let sys = pseudo_random_system(20, 6, 77);
        let exact = solve_normal_equations(&sys, 0.0, "test").unwrap();
        let damped = solve_normal_equations(&sys, 1e-9, "test").unwrap();
        assert!((exact - damped).norm() < 1e-6);
    }

    #[test]
    fn scalar_system_reduces_to_dot_product_ratio() {
        let rows: Vec<(&[f64], f64)> = vec![
            (&[2.0][..], 4.0),
            (&[1.0][..], 1.5),
            (&[-3.0][..], -6.5),
        ];
        let sys = LeastSquaresSystem::from_rows(1, &rows).unwrap();
        let x = solve_normal_equations(&sys, 0.0, "test").unwrap();
        // Σab / Σa² = (8 + 1.5 + 19.5) / (4 + 1 + 9)
        assert!((x[0] - 29.0 / 14.0).abs() < 1e-12);
    }

    #[test]
    fn rank_one_system_with_damping_returns_finite_minimum_norm_answer() {
        // Rows all proportional to (1, 2): undamped this is singular, but the
        // damping pins the unconstrained direction at zero.
        let rows: Vec<(&[f64], f64)> = vec![
            (&[1.0, 2.0][..], 1.0),
            (&[2.0, 4.0][..], 2.0),
        ];
        let sys = LeastSquaresSystem::from_rows(2, &rows).unwrap();
        let x = solve_normal_equations(&sys, 1e-9, "test").unwrap();
        assert!(x.iter().all(|v| v.is_finite()));
        // The minimum-norm least-squares solution is (1/5, 2/5).
        assert!((x[0] - 0.2).abs() < 1e-6 && (x[1] - 0.4).abs() < 1e-6);
    }

    #[test]
    fn undamped_singular_system_reports_the_stage() {
        let rows: Vec<(&[f64], f64)> = vec![(&[1.0, 2.0][..], 1.0)];
        let sys = LeastSquaresSystem::from_rows(2, &rows).unwrap();
        let err = solve_normal_equations(&sys, 0.0, "rotation stage").unwrap_err();
        match err {
            Error::RankDeficient { stage, condition } => {
                assert_eq!(stage, "rotation stage");
                assert!(!condition.is_finite() || condition > CONDITION_LIMIT);
            }
            other => panic!("expected rank-deficiency error, got {other}"),
        }
    }

    #[test]
    fn wildly_scaled_directions_trip_the_condition_limit() {
        let rows: Vec<(&[f64], f64)> = vec![
            (&[1.0, 0.0][..], 1.0),
            (&[0.0, 1e-13][..], 1.0),
        ];
        let sys = LeastSquaresSystem::from_rows(2, &rows).unwrap();
        assert!(matches!(
            solve_normal_equations(&sys, 0.0, "test"),
            Err(Error::RankDeficient { .. })
        ));
    }

    #[test]
    fn non_finite_rows_are_rejected() {
        let rows: Vec<(&[f64], f64)> = vec![(&[f64::NAN, 1.0][..], 0.0)];
        let sys = LeastSquaresSystem::from_rows(2, &rows).unwrap();
        assert!(matches!(
            solve_normal_equations(&sys, 1e-9, "test"),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn empty_system_is_rejected() {
        let sys = LeastSquaresSystem::new(3);
        assert!(solve_normal_equations(&sys, 1e-9, "test").is_err());
        assert!(LeastSquaresSystem::from_rows(3, &[]).is_err());
        assert!(NormalAccumulator::<3>::new().solve(1e-9, "test").is_err());
    }

    /// Feeds every row of a stacked system into an accumulator.
    fn accumulate<const N: usize>(sys: &LeastSquaresSystem) -> NormalAccumulator<N> {
        assert_eq!(sys.unknowns(), N);
        let mut acc = NormalAccumulator::<N>::new();
        for r in 0..sys.rows() {
            let row = SVector::<f64, N>::from_fn(|i, _| sys.matrix()[(r, i)]);
            acc.add_row(row, sys.rhs()[r]);
        }
        acc
    }

    #[test]
    fn accumulator_matches_the_stacked_solver() {
        for seed in [21u64, 22, 23] {
            let sys = pseudo_random_system(40, 6, seed);
            let stacked = solve_normal_equations(&sys, 1e-9, "test").unwrap();
            let folded = accumulate::<6>(&sys).solve(1e-9, "test").unwrap();
            for i in 0..6 {
                assert!(
                    (stacked[i] - folded[i]).abs() < 1e-12,
                    "seed {seed} component {i}: {} vs {}",
                    stacked[i],
                    folded[i]
                );
            }
        }
        let sys = pseudo_random_system(15, 3, 31);
        let stacked = solve_normal_equations(&sys, 0.0, "test").unwrap();
        let folded = accumulate::<3>(&sys).solve(0.0, "test").unwrap();
        assert!((0..3).all(|i| (stacked[i] - folded[i]).abs() < 1e-12));
    }

    #[test]
    fn leading_row_fold_matches_zero_padded_full_rows() {
        let mut rng_state = 99u64;
        let mut next = move || {
            rng_state = rng_state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (rng_state >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
        };
        let mut padded = NormalAccumulator::<6>::new();
        let mut sparse = NormalAccumulator::<6>::new();
        for _ in 0..30 {
            // A dense row and a row that is zero past component three, fed
            // through both folds.
            let dense = SVector::<f64, 6>::from_fn(|_, _| next());
            let rhs = next();
            padded.add_row(dense, rhs);
            sparse.add_row(dense, rhs);
            let lead = SVector::<f64, 3>::from_fn(|_, _| next());
            let rhs = next();
            let mut zero_padded = SVector::<f64, 6>::zeros();
            zero_padded.fixed_rows_mut::<3>(0).copy_from(&lead);
            padded.add_row(zero_padded, rhs);
            sparse.add_leading_row::<3>(lead, rhs);
        }
        assert_eq!(padded.rows(), sparse.rows());
        let a = padded.solve(1e-9, "test").unwrap();
        let b = sparse.solve(1e-9, "test").unwrap();
        assert!((a - b).norm() < 1e-14, "folds disagree: {a:?} vs {b:?}");
    }

    #[test]
    fn accumulator_reports_rank_deficiency_like_the_stacked_solver() {
        let rows: Vec<(&[f64], f64)> = vec![(&[1.0, 2.0][..], 1.0), (&[2.0, 4.0][..], 2.0)];
        let sys = LeastSquaresSystem::from_rows(2, &rows).unwrap();
        let stacked = solve_normal_equations(&sys, 0.0, "deficient");
        let folded = accumulate::<2>(&sys).solve(0.0, "deficient");
        for result in [stacked.map(|_| ()), folded.map(|_| ())] {
            match result {
                Err(Error::RankDeficient { stage, .. }) => assert_eq!(stage, "deficient"),
                other => panic!("expected rank-deficiency, got {other:?}"),
            }
        }
    }

    #[test]
    fn accumulator_rejects_non_finite_rows() {
        let mut acc = NormalAccumulator::<2>::new();
        acc.add_row(SVector::<f64, 2>::new(f64::NAN, 1.0), 0.0);
        assert!(matches!(
            acc.solve(1e-9, "test"),
            Err(Error::InvalidConfig(_))
        ));
    }
}
