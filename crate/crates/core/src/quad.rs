//! Gauss-Legendre quadrature: fixed rules and a composite rule with node
//! doubling for integrals that must hit a requested tolerance.

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`,
/// computed by Newton iteration on the Legendre polynomial.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Chebyshev-like initial guess.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
        let (_, d) = legendre_with_derivative(n, 0.0);
        weights[n / 2] = 2.0 / (d * d);
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Nodes and weights mapped to `[a, b]`.
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let (x, w) = gauss_legendre(n);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    x.iter()
        .zip(w.iter())
        .map(|(&xi, &wi)| (mid + half * xi, half * wi))
        .collect()
}

/// Composite Gauss-Legendre with interval doubling: the panel count doubles
/// until two successive values differ by less than `tol` (in the norm the
/// caller folds into `combine`). Generic over vector-valued integrands via
/// `zero`/`axpy`/`distance`.
pub struct Doubling {
    pub base_nodes: usize,
    pub tol: f64,
    pub max_doublings: usize,
}

impl Default for Doubling {
    fn default() -> Self {
        Self { base_nodes: 16, tol: 1e-9, max_doublings: 6 }
    }
}

impl Doubling {
    /// Integrate `f` over `[a, b]` to the configured tolerance.
    pub fn integrate<T>(
        &self,
        a: f64,
        b: f64,
        mut f: impl FnMut(f64) -> T,
        zero: impl Fn() -> T,
        axpy: impl Fn(&mut T, f64, &T),
        distance: impl Fn(&T, &T) -> f64,
    ) -> T {
        let mut panels = 1usize;
        let mut prev: Option<T> = None;
        for _ in 0..=self.max_doublings {
            let mut acc = zero();
            for p in 0..panels {
                let lo = a + (b - a) * p as f64 / panels as f64;
                let hi = a + (b - a) * (p + 1) as f64 / panels as f64;
                for (x, w) in gauss_legendre_on(self.base_nodes, lo, hi) {
                    let v = f(x);
                    axpy(&mut acc, w, &v);
                }
            }
            if let Some(p) = &prev {
                if distance(p, &acc) < self.tol {
                    return acc;
                }
            }
            prev = Some(acc);
            panels *= 2;
        }
        prev.expect("at least one doubling pass ran")
    }
}
