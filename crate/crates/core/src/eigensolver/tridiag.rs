//! Symmetric tridiagonal kernels: inertia counts and LDLᵀ solves.

/// Count of generalized eigenvalues of `(K, M)` strictly below `sigma`.
pub fn sturm_count(kd: &[f64], ko: &[f64], md: &[f64], mo: &[f64], sigma: f64) -> usize {
    let n = kd.len();
    let mut count = 0;
    let mut d = 0.0;
    for i in 0..n {
        let a = kd[i] - sigma * md[i];
        d = if i == 0 {
            a
        } else {
            let b = ko[i - 1] - sigma * mo[i - 1];
            a - b * b / d
        };
        if d == 0.0 {
            d = f64::EPSILON * (kd[i].abs() + sigma.abs() * md[i].abs()).max(f64::MIN_POSITIVE);
        }
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

/// Factorization `A = L D Lᵀ` with unit lower bidiagonal `L`.
#[derive(Debug, Clone)]
pub struct Ldl {
    pub d: Vec<f64>,
    pub l: Vec<f64>,
}

impl Ldl {
    pub fn new(diag: &[f64], off: &[f64]) -> Self {
        let n = diag.len();
        let mut d = vec![0.0; n];
        let mut l = vec![0.0; n.saturating_sub(1)];
        d[0] = diag[0];
        for i in 1..n {
            l[i - 1] = off[i - 1] / d[i - 1];
            d[i] = diag[i] - l[i - 1] * off[i - 1];
        }
        Self { d, l }
    }

    /// Index of the first non-positive pivot, if any.
    pub fn first_nonpositive(&self) -> Option<usize> {
        self.d.iter().position(|&x| !(x > 0.0))
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        let n = x.len();
        for i in 1..n {
            x[i] -= self.l[i - 1] * x[i - 1];
        }
        for i in 0..n {
            x[i] /= self.d[i];
        }
        for i in (0..n.saturating_sub(1)).rev() {
            x[i] -= self.l[i] * x[i + 1];
        }
    }
}

/// `y = A x` for a symmetric tridiagonal `A`.
pub fn matvec(diag: &[f64], off: &[f64], x: &[f64], y: &mut [f64]) {
    let n = x.len();
    for i in 0..n {
        let mut v = diag[i] * x[i];
        if i > 0 {
            v += off[i - 1] * x[i - 1];
        }
        if i + 1 < n {
            v += off[i] * x[i + 1];
        }
        y[i] = v;
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inertia_of_second_difference() {
        // eigenvalues of tridiag(-1, 2, -1) of size n are 2 - 2cos(k pi/(n+1))
        let n = 20;
        let diag = vec![2.0; n];
        let off = vec![-1.0; n - 1];
        let ones = vec![1.0; n];
        let zeros = vec![0.0; n - 1];
        for k in 1..=n {
            let ev = 2.0 - 2.0 * (k as f64 * std::f64::consts::PI / (n as f64 + 1.0)).cos();
            assert_eq!(sturm_count(&diag, &off, &ones, &zeros, ev + 1e-9), k);
            assert_eq!(sturm_count(&diag, &off, &ones, &zeros, ev - 1e-9), k - 1);
        }
    }

    #[test]
    fn ldl_solve_roundtrip() {
        let diag = vec![4.0, 5.0, 6.0, 7.0];
        let off = vec![1.0, -2.0, 0.5];
        let x = vec![1.0, -1.0, 2.0, 0.25];
        let mut y = vec![0.0; 4];
        matvec(&diag, &off, &x, &mut y);
        let f = Ldl::new(&diag, &off);
        f.solve_in_place(&mut y);
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).abs() < 1e-14);
        }
    }
}
