//! Small numerical kernels shared across modules.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::grid::C64;

/// `(e^{z} − 1)`, accurate for small `|z|`.
pub fn expm1_c(z: C64) -> C64 {
    if z.norm() < 1e-5 {
        z * (1.0 + z * (0.5 + z / 6.0))
    } else {
        z.exp() - 1.0
    }
}

/// `∫_a^b e^{z x} dx` in closed form.
pub fn exp_integral(z: C64, a: f64, b: f64) -> C64 {
    let w = z * (b - a);
    if w.norm() < 1e-5 {
        (z * a).exp() * (b - a) * (1.0 + w * (0.5 + w / 6.0))
    } else {
        (z * a).exp() * expm1_c(w) / z
    }
}

/// `∫_a^∞ e^{z x} dx` for `Re z < 0`.
pub fn exp_integral_tail(z: C64, a: f64) -> C64 {
    -(z * a).exp() / z
}

/// Composite Simpson rule on `[a, b]` with `panels` (even) subintervals.
pub fn simpson<F: Fn(f64) -> C64>(f: F, a: f64, b: f64, panels: usize) -> C64 {
    let n = panels + panels % 2;
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += f(a + i as f64 * h) * w;
    }
    acc * (h / 3.0)
}

/// Least-squares slope of `y` against `x`.
pub fn fit_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: DMatrix<C64>) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Squared Frobenius norm.
pub fn frobenius_sq(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|v| v.norm_sqr()).sum()
}
