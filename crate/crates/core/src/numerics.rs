//! Numeric utilities shared across the diagnostic modules.
//!
//! Everything here is deterministic and allocation-light: logistic/logit
//! transforms, a stable log-sum-exp reduction, Gauss-Legendre quadrature
//! rules (computed once by Newton iteration on the Legendre recurrence and
//! cached), the trigamma function (recurrence plus asymptotic series, which
//! `statrs` does not export), and small dense solves for 3x3 Newton systems.

use std::sync::OnceLock;

/// Logistic function `1 / (1 + exp(-x))`, numerically stable on both tails.
#[must_use]
pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Log-odds `ln(p / (1 - p))`. Finite only for `p` strictly inside (0, 1).
#[must_use]
pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Stable `ln(sum(exp(x_i)))`. Returns negative infinity for an empty slice
/// or when every term is negative infinity.
#[must_use]
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    let s: f64 = xs.iter().map(|&x| (x - m).exp()).sum();
    m + s.ln()
}

// ---------------------------------------------------------------------------
// Gauss-Legendre quadrature
// ---------------------------------------------------------------------------

/// Node count used by the change-point integrals. One fixed rule keeps the
/// sampler and the exact enumerator on identical quadrature error.
pub const GL_NODES: usize = 96;

/// Evaluates the Legendre polynomial `P_n` and its derivative at `x` via the
/// three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    // P'_n(x) = n (x P_n - P_{n-1}) / (x^2 - 1)
    let d = (n as f64) * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

fn gl_rule(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for k in 0..n {
        // Tricomi-style initial guess, then Newton. Converges in < 10 steps.
        let mut x = (std::f64::consts::PI * (k as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        nodes[n - 1 - k] = x;
        weights[n - 1 - k] = 2.0 / ((1.0 - x * x) * d * d);
    }
    (nodes, weights)
}

/// Nodes and weights of the `GL_NODES`-point rule on [-1, 1].
pub fn gl_reference() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gl_rule(GL_NODES))
}

/// The reference rule mapped onto [0, upper]; `upper` must be positive.
#[must_use]
pub fn gl_on_interval(upper: f64) -> (Vec<f64>, Vec<f64>) {
    let (xs, ws) = gl_reference();
    let half = upper / 2.0;
    let nodes = xs.iter().map(|&x| half * (x + 1.0)).collect();
    let weights = ws.iter().map(|&w| half * w).collect();
    (nodes, weights)
}

// ---------------------------------------------------------------------------
// Trigamma
// ---------------------------------------------------------------------------

/// Trigamma function, the second derivative of `ln Gamma`.
///
/// Shifts the argument above 10 with `psi_1(x) = psi_1(x + 1) + 1/x^2`, then
/// applies the asymptotic series. Absolute error is below 1e-12 for x > 0.
#[must_use]
pub fn trigamma(x: f64) -> f64 {
    if x <= 0.0 {
        return f64::NAN;
    }
    let mut z = x;
    let mut acc = 0.0;
    while z < 10.0 {
        acc += 1.0 / (z * z);
        z += 1.0;
    }
    let inv = 1.0 / z;
    let inv2 = inv * inv;
    // 1/z + 1/(2z^2) + sum of Bernoulli terms B_{2k} / z^{2k+1}.
    let series = inv
        + 0.5 * inv2
        + inv
            * inv2
            * (1.0 / 6.0
                - inv2
                    * (1.0 / 30.0 - inv2 * (1.0 / 42.0 - inv2 * (1.0 / 30.0 - inv2 * 5.0 / 66.0))));
    acc + series
}

// ---------------------------------------------------------------------------
// Small dense linear algebra
// ---------------------------------------------------------------------------

/// Solves the 3x3 system `a * x = b` by Gaussian elimination with partial
/// pivoting. Returns `None` when the matrix is numerically singular.
pub fn solve3(a: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let mut m = [[0.0f64; 4]; 3];
    for i in 0..3 {
        m[i][..3].copy_from_slice(&a[i]);
        m[i][3] = b[i];
    }
    for col in 0..3 {
        let piv = (col..3).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[piv][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, piv);
        for row in col + 1..3 {
            let f = m[row][col] / m[col][col];
            for k in col..4 {
                m[row][k] -= f * m[col][k];
            }
        }
    }
    let mut x = [0.0f64; 3];
    for i in (0..3).rev() {
        let mut s = m[i][3];
        for k in i + 1..3 {
            s -= m[i][k] * x[k];
        }
        x[i] = s / m[i][i];
    }
    if x.iter().all(|v| v.is_finite()) {
        Some(x)
    } else {
        None
    }
}

/// Inverse of a symmetric 3x3 matrix via the adjugate. `None` when singular.
pub fn invert3(a: [[f64; 3]; 3]) -> Option<[[f64; 3]; 3]> {
    let c00 = a[1][1] * a[2][2] - a[1][2] * a[2][1];
    let c01 = a[1][2] * a[2][0] - a[1][0] * a[2][2];
    let c02 = a[1][0] * a[2][1] - a[1][1] * a[2][0];
    let det = a[0][0] * c00 + a[0][1] * c01 + a[0][2] * c02;
    if det.abs() < 1e-300 || !det.is_finite() {
        return None;
    }
    let c10 = a[0][2] * a[2][1] - a[0][1] * a[2][2];
    let c11 = a[0][0] * a[2][2] - a[0][2] * a[2][0];
    let c12 = a[0][1] * a[2][0] - a[0][0] * a[2][1];
    let c20 = a[0][1] * a[1][2] - a[0][2] * a[1][1];
    let c21 = a[0][2] * a[1][0] - a[0][0] * a[1][2];
    let c22 = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    let inv = [
        [c00 / det, c10 / det, c20 / det],
        [c01 / det, c11 / det, c21 / det],
        [c02 / det, c12 / det, c22 / det],
    ];
    Some(inv)
}
