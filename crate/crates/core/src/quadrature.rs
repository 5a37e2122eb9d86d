//! Quadrature rules shared by the boundary integral code.

use std::f64::consts::PI;

/// Weights of the periodic product rule for a logarithmic kernel.
///
/// For `n = 2p` equispaced nodes `t_j = 2πj/n`,
/// `∫₀^{2π} ln(4 sin²((t_i − s)/2)) g(s) ds ≈ Σ_j w[(i − j) mod n] g(t_j)`,
/// exact for trigonometric polynomials of degree below `p`.
pub fn log_weights(n: usize) -> Vec<f64> {
    assert!(n.is_multiple_of(2) && n >= 4, "log quadrature needs an even node count");
    let p = n / 2;
    let pf = p as f64;
    (0..n)
        .map(|d| {
            let tau = 2.0 * PI * d as f64 / n as f64;
            let mut acc = 0.0;
            for m in 1..p {
                acc += (m as f64 * tau).cos() / m as f64;
            }
            -2.0 * PI / pf * acc - PI / (pf * pf) * (pf * tau).cos()
        })
        .collect()
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(order >= 1);
    let mut nodes = vec![0.0; order];
    let mut weights = vec![0.0; order];
    let nf = order as f64;
    for i in 0..order.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre(order, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(order, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[order - 1 - i] = x;
        weights[i] = w;
        weights[order - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Real Fourier coefficients of equispaced samples.
///
/// Returns `(a, b)` with `a[0]` the mean and
/// `v(t) = a₀ + Σ_{m≥1} (a_m cos mt + b_m sin mt)`; the Nyquist term is halved.
pub fn fourier_coefficients(values: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = values.len();
    let half = n / 2;
    let mut a = vec![0.0; half + 1];
    let mut b = vec![0.0; half + 1];
    for m in 0..=half {
        let mut ca = 0.0;
        let mut cb = 0.0;
        for (j, v) in values.iter().enumerate() {
            let (s, c) = (2.0 * PI * (m * j % n) as f64 / n as f64).sin_cos();
            ca += v * c;
            cb += v * s;
        }
        let scale = if m == 0 || (n.is_multiple_of(2) && m == half) { 1.0 } else { 2.0 };
        a[m] = scale * ca / n as f64;
        b[m] = scale * cb / n as f64;
    }
    if n.is_multiple_of(2) {
        b[half] = 0.0;
    }
    (a, b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_rule_on_cosines() {
        // ∫ ln(4 sin²((t−s)/2)) cos(ms) ds = −(2π/m) cos(mt)
        let n = 64;
        let w = log_weights(n);
        for m in 1..20 {
            let t0 = 2.0 * PI * 5.0 / n as f64;
            let approx: f64 = (0..n)
                .map(|j| w[(5 + n - j) % n] * (m as f64 * 2.0 * PI * j as f64 / n as f64).cos())
                .sum();
            let exact = -2.0 * PI / m as f64 * (m as f64 * t0).cos();
            assert!((approx - exact).abs() < 1e-12, "m={m}: {approx} vs {exact}");
        }
        assert!(w.iter().sum::<f64>().abs() < 1e-12);
    }

    #[test]
    fn gauss_legendre_polynomials() {
        let (x, w) = gauss_legendre(8);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        let i14: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(14)).sum();
        assert!((i14 - 2.0 / 15.0).abs() < 1e-14);
        let (x, w) = gauss_legendre(1);
        assert_eq!((x[0], w[0]), (0.0, 2.0));
    }

    #[test]
    fn fourier_roundtrip() {
        let n = 32;
        let v: Vec<f64> = (0..n)
            .map(|j| {
                let t = 2.0 * PI * j as f64 / n as f64;
                0.3 + (2.0 * t).cos() - 0.5 * (5.0 * t).sin()
            })
            .collect();
        let (a, b) = fourier_coefficients(&v);
        assert!((a[0] - 0.3).abs() < 1e-14);
        assert!((a[2] - 1.0).abs() < 1e-14);
        assert!((b[5] + 0.5).abs() < 1e-14);
        assert!(a[3].abs() < 1e-14);
    }
}
