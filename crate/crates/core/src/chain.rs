//! Dense finite Markov chain helpers: stochasticity checks, recurrent class
//! detection and the stationary solve.
//!
//! Matrices are row-major `n x n` slices, `p[i * n + j] = Pr(i -> j)`.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Largest absolute deviation of a row sum from one.
pub fn max_row_defect<T: Real>(n: usize, p: &[T]) -> T {
    p.chunks(n)
        .map(|row| (row.iter().copied().sum::<T>() - T::one()).abs())
        .fold(T::zero(), T::max)
}

/// Closed communicating classes (the recurrent classes) of the chain,
/// each sorted ascending, ordered by their smallest state.
pub fn recurrent_classes<T: Real>(n: usize, p: &[T]) -> Vec<Vec<usize>> {
    // reach[i][j]: j reachable from i in >= 0 steps
    let mut reach = vec![vec![false; n]; n];
    for (i, row) in reach.iter_mut().enumerate() {
        let mut stack = vec![i];
        row[i] = true;
        while let Some(u) = stack.pop() {
            for v in 0..n {
                if p[u * n + v] > T::zero() && !row[v] {
                    row[v] = true;
                    stack.push(v);
                }
            }
        }
    }
    let mut assigned = vec![false; n];
    let mut classes = Vec::new();
    for i in 0..n {
        if assigned[i] {
            continue;
        }
        // closed iff everything reachable from i can reach i back
        let closed = (0..n).all(|j| !reach[i][j] || reach[j][i]);
        if closed {
            let class: Vec<usize> = (0..n).filter(|&j| reach[i][j]).collect();
            for &j in &class {
                assigned[j] = true;
            }
            classes.push(class);
        }
    }
    classes
}

/// Stationary distribution `pi` with `pi P = pi`, `sum(pi) = 1`.
///
/// Solves the balance equations by Gaussian elimination with partial
/// pivoting, one redundant equation replaced by the normalization row.
/// Fails when the stationary vector is not unique.
pub fn stationary<T: Real>(n: usize, p: &[T]) -> Result<Vec<T>> {
    assert_eq!(p.len(), n * n, "matrix must be n x n");
    if n == 0 {
        return Err(Error::Config("empty chain".into()));
    }
    let classes = recurrent_classes(n, p);
    if classes.len() != 1 {
        return Err(Error::DegenerateChain { classes });
    }

    // a = P^T - I with the last row replaced by ones; b = e_n
    let mut a = vec![T::zero(); n * n];
    for i in 0..n {
        for j in 0..n {
            a[i * n + j] = p[j * n + i];
        }
        a[i * n + i] = a[i * n + i] - T::one();
    }
    for j in 0..n {
        a[(n - 1) * n + j] = T::one();
    }
    let mut b = vec![T::zero(); n];
    b[n - 1] = T::one();

    let mut x = solve_dense(n, a, b)?;

    let tiny = T::lit(1e-13);
    for v in x.iter_mut() {
        if *v < T::zero() {
            if *v < -tiny {
                return Err(Error::Numeric(format!("stationary solve produced negative mass {v}")));
            }
            *v = T::zero();
        }
    }
    let total: T = x.iter().copied().sum();
    for v in x.iter_mut() {
        *v = *v / total;
    }
    Ok(x)
}

/// `max_j |(pi P)_j - pi_j|`.
pub fn stationary_residual<T: Real>(n: usize, p: &[T], pi: &[T]) -> T {
    (0..n)
        .map(|j| {
            let flow: T = (0..n).map(|i| pi[i] * p[i * n + j]).sum();
            (flow - pi[j]).abs()
        })
        .fold(T::zero(), T::max)
}

fn solve_dense<T: Real>(n: usize, mut a: Vec<T>, mut b: Vec<T>) -> Result<Vec<T>> {
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&r1, &r2| {
                a[r1 * n + col]
                    .abs()
                    .partial_cmp(&a[r2 * n + col].abs())
                    .unwrap_or(core::cmp::Ordering::Equal)
            })
            .expect("non-empty pivot range");
        if a[pivot * n + col].abs() <= T::epsilon() * T::lit(1e-3) {
            return Err(Error::Numeric(format!("singular balance system at column {col}")));
        }
        if pivot != col {
            for j in 0..n {
                a.swap(pivot * n + j, col * n + j);
            }
            b.swap(pivot, col);
        }
        let diag = a[col * n + col];
        for r in col + 1..n {
            let factor = a[r * n + col] / diag;
            if factor == T::zero() {
                continue;
            }
            for j in col..n {
                a[r * n + j] = a[r * n + j] - factor * a[col * n + j];
            }
            b[r] = b[r] - factor * b[col];
        }
    }
    let mut x = vec![T::zero(); n];
    for r in (0..n).rev() {
        let mut acc = b[r];
        for j in r + 1..n {
            acc = acc - a[r * n + j] * x[j];
        }
        x[r] = acc / a[r * n + r];
    }
    Ok(x)
}
