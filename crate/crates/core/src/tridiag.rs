//! Thomas algorithm for tridiagonal systems.

/// Tridiagonal matrix stored by bands. `lower[0]` and `upper[n-1]` are unused.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Tridiagonal {
    pub fn zeros(n: usize) -> Self {
        Self {
            lower: vec![0.0; n],
            diag: vec![0.0; n],
            upper: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// `out = A x`
    pub fn mul_vec(&self, x: &[f64], out: &mut [f64]) {
        let n = self.len();
        assert_eq!(x.len(), n);
        assert_eq!(out.len(), n);
        for i in 0..n {
            let mut acc = self.diag[i] * x[i];
            if i > 0 {
                acc += self.lower[i] * x[i - 1];
            }
            if i + 1 < n {
                acc += self.upper[i] * x[i + 1];
            }
            out[i] = acc;
        }
    }

    /// Solves `A x = rhs` in place, overwriting `rhs` with `x`.
    ///
    /// Returns `false` if a pivot vanished or the result is not finite. No
    /// pivoting is done, so the matrix should be diagonally dominant or SPD.
    pub fn solve_in_place(&self, rhs: &mut [f64], scratch: &mut Vec<f64>) -> bool {
        let n = self.len();
        assert_eq!(rhs.len(), n);
        if n == 0 {
            return true;
        }
        scratch.clear();
        scratch.resize(n, 0.0);

        // Forward sweep
        let mut pivot = self.diag[0];
        if pivot == 0.0 {
            return false;
        }
        scratch[0] = self.upper[0] / pivot;
        rhs[0] /= pivot;
        for i in 1..n {
            pivot = self.diag[i] - self.lower[i] * scratch[i - 1];
            if pivot == 0.0 {
                return false;
            }
            scratch[i] = if i + 1 < n {
                self.upper[i] / pivot
            } else {
                0.0
            };
            rhs[i] = (rhs[i] - self.lower[i] * rhs[i - 1]) / pivot;
        }

        // Back substitution
        for i in (0..n - 1).rev() {
            rhs[i] -= scratch[i] * rhs[i + 1];
        }
        rhs.iter().all(|v| v.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_laplacian_system() {
        let n = 7;
        let mut a = Tridiagonal::zeros(n);
        for i in 0..n {
            a.lower[i] = -1.0;
            a.diag[i] = 2.0;
            a.upper[i] = -1.0;
        }
        let x: Vec<f64> = (0..n).map(|i| (i as f64).sin() + 0.5).collect();
        let mut rhs = vec![0.0; n];
        a.mul_vec(&x, &mut rhs);
        let mut scratch = Vec::new();
        assert!(a.solve_in_place(&mut rhs, &mut scratch));
        for (got, want) in rhs.iter().zip(&x) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_pivot_is_reported() {
        let a = Tridiagonal::zeros(3);
        let mut rhs = vec![1.0; 3];
        assert!(!a.solve_in_place(&mut rhs, &mut Vec::new()));
    }

    #[test]
    fn single_unknown() {
        let a = Tridiagonal {
            lower: vec![0.0],
            diag: vec![4.0],
            upper: vec![0.0],
        };
        let mut rhs = vec![2.0];
        assert!(a.solve_in_place(&mut rhs, &mut Vec::new()));
        assert_eq!(rhs, vec![0.5]);
    }
}
