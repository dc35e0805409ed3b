//! One-dimensional quadrature helpers.
//!
//! Gauss-Legendre nodes are generated by Newton iteration on the Legendre
//! recurrence; panels are mapped affinely. The transforms integrated here
//! are piecewise analytic with kinks only at known abscissae, so panel
//! splitting at the kinks restores spectral accuracy.

/// Gauss-Legendre rule on [-1, 1]: ascending nodes and matching weights.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi-style initial guess, then Newton on P_n(x) = 0.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let mut p0 = 1.0;
                let mut p1 = x;
                for k in 2..=n {
                    let kf = k as f64;
                    let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-15 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            weights[i] = w;
            nodes[n - 1 - i] = x;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        GaussLegendre { nodes, weights }
    }

    /// Integrate `f` over [a, b] with this rule on a single panel.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = 0.0;
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(half * x + mid);
        }
        half * acc
    }

    /// Integrate over consecutive panels given by sorted breakpoints.
    pub fn integrate_panels<F: FnMut(f64) -> f64>(&self, breaks: &[f64], mut f: F) -> f64 {
        breaks
            .windows(2)
            .map(|w| self.integrate(w[0], w[1], &mut f))
            .sum()
    }
}

/// Trapezoid rule on an arbitrary (sorted) abscissa vector.
pub fn trapezoid(xs: &[f64], ys: &[f64]) -> f64 {
    debug_assert_eq!(xs.len(), ys.len());
    let mut acc = 0.0;
    for i in 1..xs.len() {
        acc += 0.5 * (xs[i] - xs[i - 1]) * (ys[i] + ys[i - 1]);
    }
    acc
}

/// Second-order finite-difference gradient on a uniform grid
/// (centered interior, one-sided second-order ends).
pub fn gradient_uniform(ys: &[f64], h: f64) -> Vec<f64> {
    let n = ys.len();
    assert!(n >= 3, "gradient needs at least 3 nodes");
    let mut g = vec![0.0; n];
    g[0] = (-3.0 * ys[0] + 4.0 * ys[1] - ys[2]) / (2.0 * h);
    for i in 1..n - 1 {
        g[i] = (ys[i + 1] - ys[i - 1]) / (2.0 * h);
    }
    g[n - 1] = (3.0 * ys[n - 1] - 4.0 * ys[n - 2] + ys[n - 3]) / (2.0 * h);
    g
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gl_nodes_basic() {
        for n in [1, 2, 3, 5, 8, 32, 96, 256] {
            let gl = GaussLegendre::new(n);
            let wsum: f64 = gl.weights.iter().sum();
            assert!(
                (wsum - 2.0).abs() < 1e-13,
                "n={n}: weight sum {wsum} != 2"
            );
            for i in 0..n {
                assert!(
                    (gl.nodes[i] + gl.nodes[n - 1 - i]).abs() < 1e-14,
                    "n={n}: nodes not symmetric"
                );
                if i > 0 {
                    assert!(gl.nodes[i] > gl.nodes[i - 1]);
                }
            }
        }
    }

    #[test]
    fn gl_exactness_on_polynomials() {
        // an n-point rule is exact through degree 2n-1
        let gl = GaussLegendre::new(4);
        let exact = 2.0 / 8.0 + 2.0 / 6.0; // int_{-1}^{1} x^7 dx = 0; use x^6+x^5-like mix
        let got = gl.integrate(-1.0, 1.0, |x| x.powi(7) + 0.5 * x.powi(6) + x.powi(5));
        println!("degree-7 mix: got {got}, exact {}", 0.5 * 2.0 / 7.0);
        assert!((got - 0.5 * 2.0 / 7.0).abs() < 1e-14);
        let got2 = gl.integrate(0.0, 1.0, |x| x * x * x);
        assert!((got2 - 0.25).abs() < 1e-14);
        let _ = exact;
    }

    #[test]
    fn gl_panels_against_closed_form() {
        let gl = GaussLegendre::new(32);
        let got = gl.integrate_panels(&[0.0, 0.7, 1.3, 2.0], |x| (2.0 * x).exp());
        let exact = ((2.0f64 * 2.0).exp() - 1.0) / 2.0;
        assert!(
            ((got - exact) / exact).abs() < 1e-14,
            "panel exp integral: {got} vs {exact}"
        );
    }

    #[test]
    fn trapezoid_linear_exact() {
        let xs = [0.0, 0.25, 0.6, 1.0];
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x - 1.0).collect();
        assert!((trapezoid(&xs, &ys) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn gradient_quadratic_exact() {
        // second-order differences reproduce gradients of quadratics exactly
        let h = 0.1;
        let ys: Vec<f64> = (0..7).map(|i| {
            let x = i as f64 * h;
            2.0 * x * x - x + 0.5
        }).collect();
        let g = gradient_uniform(&ys, h);
        for (i, gi) in g.iter().enumerate() {
            let x = i as f64 * h;
            assert!(
                (gi - (4.0 * x - 1.0)).abs() < 1e-12,
                "node {i}: {gi} vs {}",
                4.0 * x - 1.0
            );
        }
    }
}
