//! Shifted Legendre polynomials on [0, 1] and Gauss–Legendre quadrature.

/// `L_k(ξ)` by the three-term recurrence in `x = 2ξ - 1`.
pub fn legendre_shifted(k: usize, xi: f64) -> f64 {
    value_and_derivative(k, xi).0
}

/// `L_k'(ξ)`.
pub fn legendre_shifted_deriv(k: usize, xi: f64) -> f64 {
    value_and_derivative(k, xi).1
}

/// `(L_k(ξ), L_k'(ξ))`.
pub fn value_and_derivative(k: usize, xi: f64) -> (f64, f64) {
    let x = 2.0 * xi - 1.0;
    let (mut p0, mut p1) = (1.0, x);
    let (mut d0, mut d1) = (0.0, 1.0);
    if k == 0 {
        return (1.0, 0.0);
    }
    for n in 1..k {
        let nf = n as f64;
        let p2 = ((2.0 * nf + 1.0) * x * p1 - nf * p0) / (nf + 1.0);
        let d2 = d0 + (2.0 * nf + 1.0) * p1;
        p0 = p1;
        p1 = p2;
        d0 = d1;
        d1 = d2;
    }
    (p1, 2.0 * d1)
}

/// Explicit coefficient sum `Σ_m (-1)^{k+m} C(k,m) C(k+m,m) ξ^m`; loses digits to cancellation as k grows.
pub fn legendre_shifted_sum(k: usize, xi: f64) -> f64 {
    (0..=k)
        .map(|m| {
            let sign = if (k + m) % 2 == 0 { 1.0 } else { -1.0 };
            sign * binomial(k, m) * binomial(k + m, m) * xi.powi(m as i32)
        })
        .sum()
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Gauss–Legendre nodes and weights on [0, 1]; exact for degree `2n - 1`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        // Chebyshev-like initial guess on [-1, 1], refined by Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = value_and_derivative(n, 0.5 * (x + 1.0));
            dp = d / 2.0;
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = value_and_derivative(n, 0.5 * (x + 1.0));
        dp = if d != 0.0 { d / 2.0 } else { dp };
        nodes[n - 1 - i] = 0.5 * (x + 1.0);
        weights[n - 1 - i] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// `∫₀¹ f` by `n`-point Gauss–Legendre.
pub fn integrate<F: Fn(f64) -> f64>(f: F, n: usize) -> f64 {
    let (x, w) = gauss_legendre(n);
    x.iter().zip(&w).map(|(xi, wi)| wi * f(*xi)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn low_degrees() {
        assert_eq!(legendre_shifted(0, 0.3), 1.0);
        assert!(legendre_shifted(1, 0.5).abs() < 1e-15);
        assert!(legendre_shifted_sum(1, 0.5).abs() < 1e-15);
        assert!((legendre_shifted(2, 0.25) - (6.0 * 0.0625 - 6.0 * 0.25 + 1.0)).abs() < 1e-15);
    }

    #[test]
    fn recurrence_matches_sum() {
        for k in 0..=13 {
            for i in 0..=20 {
                let xi = i as f64 / 20.0;
                let a = legendre_shifted(k, xi);
                let b = legendre_shifted_sum(k, xi);
                // at -ξ every term of the sum has the same sign, which bounds the cancellation
                let scale = legendre_shifted_sum(k, -xi).abs();
                assert!((a - b).abs() < 1e-14 * (1.0 + scale), "k={k} xi={xi}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn derivative_by_differences() {
        let h = 1e-6;
        for k in 0..=10 {
            let xi = 0.37;
            let fd = (legendre_shifted(k, xi + h) - legendre_shifted(k, xi - h)) / (2.0 * h);
            assert!((legendre_shifted_deriv(k, xi) - fd).abs() < 1e-5 * (1.0 + fd.abs()));
        }
    }

    #[test]
    fn endpoint_values() {
        for k in 0..12 {
            assert!((legendre_shifted(k, 1.0) - 1.0).abs() < 1e-13);
            let s = if k % 2 == 0 { 1.0 } else { -1.0 };
            assert!((legendre_shifted(k, 0.0) - s).abs() < 1e-13);
        }
    }

    #[test]
    fn orthogonal_not_orthonormal() {
        let l2 = integrate(|x| legendre_shifted(2, x).powi(2), 13);
        assert!((l2 - 0.2).abs() < 1e-14);
        let cross = integrate(|x| legendre_shifted(3, x) * legendre_shifted(5, x), 13);
        assert!(cross.abs() < 1e-14);
    }

    #[test]
    fn quadrature_exactness() {
        let (x, w) = gauss_legendre(13);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        assert!(x.windows(2).all(|p| p[0] < p[1]));
        for m in 0..=25 {
            let q: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(m)).sum();
            assert!((q - 1.0 / (m as f64 + 1.0)).abs() < 1e-14, "degree {m}");
        }
    }
}
