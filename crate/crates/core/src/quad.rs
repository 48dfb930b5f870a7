//! Quadrature rules shared by the continuum checks.

use std::f64::consts::PI;

/// Gauss–Legendre nodes and weights on `[−1, 1]` (Newton on `P_q`).
pub fn gauss_legendre(q: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; q];
    let mut weights = vec![0.0; q];
    for i in 0..q.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (q as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=q {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if q == 0 { 1.0 } else if q == 1 { x } else { p1 };
            let pm1 = if q == 1 { 1.0 } else { p0 };
            dp = q as f64 * (x * p - pm1) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[q - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[q - 1 - i] = w;
    }
    (nodes, weights)
}

/// Composite Gauss–Legendre rule over consecutive panels `[edges[k], edges[k+1]]`.
pub fn composite_gauss(edges: &[f64], q: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(q);
    let mut nodes = Vec::with_capacity(q * edges.len());
    let mut weights = Vec::with_capacity(q * edges.len());
    for e in edges.windows(2) {
        let (mid, half) = (0.5 * (e[0] + e[1]), 0.5 * (e[1] - e[0]));
        for (xi, wi) in x.iter().zip(&w) {
            nodes.push(mid + half * xi);
            weights.push(half * wi);
        }
    }
    (nodes, weights)
}

/// Panel edges `0, 1, 2, 4, …, R` (geometric beyond 1), each split into `2^level` pieces.
pub fn graded_edges(r_max: f64, level: u32) -> Vec<f64> {
    let mut coarse = vec![0.0];
    let mut x = 1.0f64.min(r_max);
    coarse.push(x);
    while x < r_max {
        x = (2.0 * x).min(r_max);
        coarse.push(x);
    }
    refine_edges(&coarse, level)
}

/// Splits every panel into `2^level` equal pieces.
pub fn refine_edges(coarse: &[f64], level: u32) -> Vec<f64> {
    let split = 1usize << level;
    let mut edges = vec![coarse[0]];
    for e in coarse.windows(2) {
        for k in 1..=split {
            edges.push(e[0] + (e[1] - e[0]) * k as f64 / split as f64);
        }
    }
    edges
}

/// `∫_a^b f` by composite Gauss–Legendre with `panels` equal panels of order `q`.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize, q: usize) -> f64 {
    let edges: Vec<f64> = (0..=panels).map(|k| a + (b - a) * k as f64 / panels as f64).collect();
    let (x, w) = composite_gauss(&edges, q);
    x.iter().zip(&w).map(|(xi, wi)| wi * f(*xi)).sum()
}

/// Composite Simpson rule on samples at uniform spacing `h` (odd sample count).
pub fn simpson(samples: &[f64], h: f64) -> f64 {
    let n = samples.len();
    assert!(n >= 3 && n % 2 == 1, "Simpson needs an odd number (>= 3) of samples");
    let mut acc = samples[0] + samples[n - 1];
    for (i, v) in samples.iter().enumerate().take(n - 1).skip(1) {
        acc += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    acc * h / 3.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_exact_on_polynomials() {
        for q in 1..12 {
            let (x, w) = gauss_legendre(q);
            for deg in 0..(2 * q) {
                let approx: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((approx - exact).abs() < 1e-13, "q={q} deg={deg}");
            }
        }
    }

    #[test]
    fn composite_rule_on_exponential() {
        let v = integrate(f64::exp, 0.0, 2.0, 4, 8);
        assert!((v - (2f64.exp() - 1.0)).abs() < 1e-13);
    }

    #[test]
    fn graded_edges_cover_interval() {
        let e = graded_edges(10.0, 1);
        assert_eq!(e.first(), Some(&0.0));
        assert_eq!(e.last(), Some(&10.0));
        assert!(e.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn simpson_exact_on_cubics() {
        let xs: Vec<f64> = (0..=10).map(|i| i as f64 * 0.1).map(|x| x * x * x).collect();
        assert!((simpson(&xs, 0.1) - 0.25).abs() < 1e-15);
    }
}
