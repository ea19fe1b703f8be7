//! Dense least squares for stacked linear constraint systems.

use nalgebra::{DMatrix, DVector};

/// Singular values below this, relative to the largest, are treated as zero.
const RANK_EPS: f64 = 1e-10;
const SVD_EPS: f64 = 1e-15;
const PRIOR_EPS: f64 = 1e-12;
const SVD_MAX_ITER: usize = 100_000;

#[derive(Debug, Clone)]
pub struct LeastSquares {
    /// One row per unknown, one column per value component.
    pub solution: DMatrix<f64>,
    /// Largest absolute entry of `A x - b`.
    pub max_residual: f64,
}

struct Factors {
    u: DMatrix<f64>,
    s: DVector<f64>,
    v_t: DMatrix<f64>,
}

impl Factors {
    fn reconstruction_error(&self, a: &DMatrix<f64>) -> f64 {
        (&self.u * DMatrix::from_diagonal(&self.s) * &self.v_t - a).amax()
    }
}

fn try_factor(a: &DMatrix<f64>) -> Option<Factors> {
    let svd = a.clone().try_svd(true, true, SVD_EPS, SVD_MAX_ITER)?;
    Some(Factors {
        u: svd.u?,
        s: svd.singular_values,
        v_t: svd.v_t?,
    })
}

// The default-tolerance SVD occasionally stops early on matrices with
// clustered singular values, so every factorization is checked and the
// transposed problem is the fallback.
fn factor(a: &DMatrix<f64>) -> Factors {
    let tol = 1e-9 * a.amax().max(1.0);
    let direct = try_factor(a);
    if let Some(f) = &direct {
        if f.reconstruction_error(a) <= tol {
            return direct.unwrap();
        }
    }
    let transposed = try_factor(&a.transpose()).map(|f| Factors {
        u: f.v_t.transpose(),
        s: f.s,
        v_t: f.u.transpose(),
    });
    match (direct, transposed) {
        (Some(d), Some(t)) => {
            if t.reconstruction_error(a) < d.reconstruction_error(a) {
                t
            } else {
                d
            }
        }
        (Some(f), None) | (None, Some(f)) => f,
        (None, None) => panic!("singular value decomposition did not converge"),
    }
}

/// Minimum-norm least-squares solution of `A X = B`.
///
/// With a `prior`, returns the solution closest to it instead: the prior
/// plus the minimum-norm correction.
pub fn solve(a: &DMatrix<f64>, b: &DMatrix<f64>, prior: Option<&DMatrix<f64>>) -> LeastSquares {
    assert_eq!(a.nrows(), b.nrows(), "row count mismatch");
    let n = a.ncols();
    if n == 0 || a.nrows() == 0 {
        let solution = prior.cloned().unwrap_or_else(|| DMatrix::zeros(n, b.ncols()));
        let max_residual = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        return LeastSquares { solution, max_residual };
    }
    let rhs = match prior {
        Some(x0) => b - a * x0,
        None => b.clone(),
    };
    if let Some(x0) = prior {
        // A prior that already satisfies the system is its own nearest solution.
        if rhs.amax() <= PRIOR_EPS * b.amax().max(1.0) {
            return LeastSquares {
                solution: x0.clone(),
                max_residual: rhs.amax(),
            };
        }
    }
    let f = factor(a);
    let cutoff = RANK_EPS * f.s.max();
    let mut projected = f.u.transpose() * &rhs;
    for (i, mut row) in projected.row_iter_mut().enumerate() {
        let s = f.s[i];
        if s > cutoff {
            row /= s;
        } else {
            row.fill(0.0);
        }
    }
    let mut solution = f.v_t.transpose() * projected;
    if let Some(x0) = prior {
        solution += x0;
    }
    let residual = a * &solution - b;
    let max_residual = residual.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    LeastSquares { solution, max_residual }
}
