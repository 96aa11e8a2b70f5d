//! Gauss-Legendre quadrature on `[0, 1]`.

/// Nodes and weights of the `n`-point Gauss-Legendre rule mapped to
/// `[0, 1]`; exact for polynomials up to degree `2n - 1`. Nodes are found by
/// Newton iteration on the Legendre polynomial from the Chebyshev initial
/// guess.
pub fn gauss_legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "at least one node required");
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_with_derivative(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes.push(0.5 * (x + 1.0));
        weights.push(0.5 * w);
    }
    nodes.reverse();
    weights.reverse();
    (nodes, weights)
}

/// `P_n(x)` and `P_n'(x)` via the three-term recurrence.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p_prev = 1.0;
    let mut p = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p_next = ((2.0 * kf - 1.0) * x * p - (kf - 1.0) * p_prev) / kf;
        p_prev = p;
        p = p_next;
    }
    let dp = n as f64 * (x * p - p_prev) / (x * x - 1.0);
    (p, dp)
}
