//! Finite Blaschke products on the right half-plane and the inner multiplier
//! they induce on `L²(ℝ₊)`.
//!
//! `Θ(λ) = ∏_k (λ + conj λ_k)/(λ − λ_k)` with every `Re λ_k < 0`. The
//! multiplier is realised on the half-grid in two independent ways:
//!
//! - [`Backend::CausalConvolution`]: the partial-fraction form
//!   `Θ(λ) = 1 + Σ_j c_j/(λ − λ_j)` gives `f + Σ_j c_j ∫₀^x e^{λ_j(x−y)} f(y) dy`.
//!   Each convolution state obeys `u' = λ_j u + c_j f` and is advanced with
//!   the trapezoidal rule between cell midpoints. The resulting discrete
//!   operator is multiplication by `Θ(λ(z))` with `λ(z) = (2/h)(1 − z)/(1 + z)`,
//!   an inner function of the disc, so it is an exact isometry of `ℓ²(ℕ)`.
//! - [`Backend::BoundaryFft`]: zero-padded DFT, pointwise multiplication by
//!   `Θ(iω)`, inverse DFT.

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{GridFunction, C64};
use crate::numerics::simpson;

const POLE_TOL: f64 = 1e-12;
const DISTINCT_TOL: f64 = 1e-9;
/// Mass tolerated on `x < 0` for inputs to half-line operators.
pub const SUPPORT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlaschkeProduct {
    zeros: Vec<C64>,
}

impl BlaschkeProduct {
    pub fn new(zeros: Vec<C64>) -> Result<Self> {
        for z in &zeros {
            if !(z.re.is_finite() && z.im.is_finite()) {
                return Err(Error::Precondition(format!("zero {z} is not finite")));
            }
            if z.re >= 0.0 {
                return Err(Error::Precondition(format!(
                    "zero {z} must have negative real part"
                )));
            }
        }
        Ok(Self { zeros })
    }

    pub fn from_pairs(pairs: &[[f64; 2]]) -> Result<Self> {
        Self::new(pairs.iter().map(|p| C64::new(p[0], p[1])).collect())
    }

    pub fn identity() -> Self {
        Self { zeros: Vec::new() }
    }

    /// `λ_k` as given. The poles of `Θ` sit at these points, its zeros at
    /// their reflections `−conj λ_k`.
    pub fn zeros(&self) -> &[C64] {
        &self.zeros
    }

    pub fn len(&self) -> usize {
        self.zeros.len()
    }

    pub fn is_empty(&self) -> bool {
        self.zeros.is_empty()
    }

    pub fn sum_re(&self) -> f64 {
        self.zeros.iter().map(|z| z.re).sum()
    }

    pub fn sum_abs_re(&self) -> f64 {
        self.zeros.iter().map(|z| z.re.abs()).sum()
    }

    /// Product of two Blaschke products: zero lists concatenate.
    pub fn product(&self, other: &Self) -> Self {
        let mut zeros = self.zeros.clone();
        zeros.extend_from_slice(&other.zeros);
        Self { zeros }
    }

    pub fn eval(&self, lambda: C64) -> Result<C64> {
        let mut acc = C64::new(1.0, 0.0);
        for z in &self.zeros {
            let d = lambda - z;
            if d.norm() < POLE_TOL {
                return Err(Error::PoleProximity {
                    lambda: lambda.to_string(),
                    distance: d.norm(),
                });
            }
            acc *= (lambda + z.conj()) / d;
        }
        Ok(acc)
    }

    /// `Θ(iω)`; never near a pole since every pole has `Re < 0`.
    pub fn eval_boundary(&self, omega: f64) -> C64 {
        let l = C64::new(0.0, omega);
        self.zeros
            .iter()
            .fold(C64::new(1.0, 0.0), |acc, z| acc * (l + z.conj()) / (l - z))
    }

    pub fn boundary_profile(&self, frequencies: &[f64]) -> Result<BoundaryProfile> {
        let values = frequencies.iter().map(|&w| self.eval_boundary(w)).collect();
        BoundaryProfile::new(frequencies.to_vec(), values)
    }

    /// Partial-fraction residues `c_j` with `Θ(λ) = 1 + Σ_j c_j/(λ − λ_j)`.
    pub fn residues(&self) -> Result<Vec<C64>> {
        self.check_distinct()?;
        Ok(self
            .zeros
            .iter()
            .enumerate()
            .map(|(j, lj)| {
                let mut c = lj + lj.conj();
                for (i, li) in self.zeros.iter().enumerate() {
                    if i != j {
                        c *= (lj + li.conj()) / (lj - li);
                    }
                }
                c
            })
            .collect())
    }

    pub fn check_distinct(&self) -> Result<()> {
        for (i, a) in self.zeros.iter().enumerate() {
            for b in &self.zeros[i + 1..] {
                if (a - b).norm() <= DISTINCT_TOL * a.norm().max(1.0) {
                    return Err(Error::Unsupported(format!("repeated zero {a}")));
                }
            }
        }
        Ok(())
    }
}

/// Boundary values `Θ(iω_j)`; unimodular by construction.
#[derive(Debug, Clone, Serialize)]
pub struct BoundaryProfile {
    frequencies: Vec<f64>,
    values: Vec<C64>,
}

impl BoundaryProfile {
    pub fn new(frequencies: Vec<f64>, values: Vec<C64>) -> Result<Self> {
        if frequencies.len() != values.len() {
            return Err(Error::InvariantViolation("profile length mismatch".into()));
        }
        if let Some(v) = values.iter().find(|v| (v.norm() - 1.0).abs() > 1e-10) {
            return Err(Error::InvariantViolation(format!(
                "boundary value {v} is not unimodular"
            )));
        }
        Ok(Self {
            frequencies,
            values,
        })
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    #[default]
    CausalConvolution,
    BoundaryFft,
}

/// Trapezoidal realisation of the inner multiplier at step `h`.
///
/// `u_{j,n} = ρ_j u_{j,n−1} + β_j (f_n + f_{n−1})`, `y_n = f_n + Σ_j u_{j,n}`
/// with `ρ_j = (1 + λ_j h/2)/(1 − λ_j h/2)` and `β_j = c_j (h/2)/(1 − λ_j h/2)`.
#[derive(Debug, Clone)]
pub struct DiscreteMultiplier {
    h: f64,
    rho: Vec<C64>,
    beta: Vec<C64>,
}

impl DiscreteMultiplier {
    pub fn new(b: &BlaschkeProduct, h: f64) -> Result<Self> {
        let c = b.residues()?;
        let half = h / 2.0;
        let rho = b
            .zeros()
            .iter()
            .map(|l| (1.0 + l * half) / (1.0 - l * half))
            .collect();
        let beta = b
            .zeros()
            .iter()
            .zip(&c)
            .map(|(l, cj)| cj * half / (1.0 - l * half))
            .collect();
        Ok(Self { h, rho, beta })
    }

    pub fn step(&self) -> f64 {
        self.h
    }

    /// Discrete poles `ρ_j`, one per zero; `|ρ_j| < 1`.
    pub fn rho(&self) -> &[C64] {
        &self.rho
    }

    pub fn apply(&self, f: &[C64]) -> Vec<C64> {
        let zero = C64::new(0.0, 0.0);
        let mut state = vec![zero; self.rho.len()];
        let mut prev = zero;
        let mut out = Vec::with_capacity(f.len());
        for &x in f {
            let mut y = x;
            for ((u, r), b) in state.iter_mut().zip(&self.rho).zip(&self.beta) {
                *u = *r * *u + *b * (x + prev);
                y += *u;
            }
            out.push(y);
            prev = x;
        }
        out
    }

    /// Exact conjugate transpose of [`DiscreteMultiplier::apply`] on a
    /// length-`n` window: `w_n = y_n + conj ρ · w_{n+1}`,
    /// `v_n = y_n + Σ_j conj β_j (w_{j,n} + w_{j,n+1})`.
    pub fn apply_adjoint(&self, y: &[C64]) -> Vec<C64> {
        let zero = C64::new(0.0, 0.0);
        let n = y.len();
        let mut out = y.to_vec();
        for (r, b) in self.rho.iter().zip(&self.beta) {
            let (rc, bc) = (r.conj(), b.conj());
            let mut w_next = zero;
            for i in (0..n).rev() {
                let w = y[i] + rc * w_next;
                out[i] += bc * (w + w_next);
                w_next = w;
            }
        }
        out
    }

    /// Impulse response: `h_0 = 1 + Σ β_j`, `h_n = Σ β_j (ρ_j^n + ρ_j^{n−1})`.
    pub fn impulse_response(&self, len: usize) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); len];
        if len == 0 {
            return out;
        }
        out[0] = C64::new(1.0, 0.0);
        for (r, b) in self.rho.iter().zip(&self.beta) {
            out[0] += b;
            let mut p = C64::new(1.0, 0.0);
            for v in out.iter_mut().skip(1) {
                let next = p * r;
                *v += b * (next + p);
                p = next;
            }
        }
        out
    }
}

/// FFT backend on half-line samples: pad to at least `4·len`, multiply by
/// `Θ(iω)`, invert, keep the first `len` samples.
pub fn boundary_fft_half(b: &BlaschkeProduct, f: &[C64], h: f64) -> Vec<C64> {
    let m = f.len();
    if b.is_empty() || m == 0 {
        return f.to_vec();
    }
    let p = (4 * m).next_power_of_two();
    let mut buf = vec![Complex64::new(0.0, 0.0); p];
    buf[..m].copy_from_slice(f);
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(p).process(&mut buf);
    let dw = 2.0 * std::f64::consts::PI / (p as f64 * h);
    for (j, v) in buf.iter_mut().enumerate() {
        let js = if j <= p / 2 {
            j as f64
        } else {
            j as f64 - p as f64
        };
        *v *= b.eval_boundary(js * dw);
    }
    planner.plan_fft_inverse(p).process(&mut buf);
    let scale = 1.0 / p as f64;
    buf[..m].iter().map(|v| v * scale).collect()
}

fn check_past_support(f: &GridFunction) -> Result<()> {
    let mass = f.mass_on_negative_axis();
    if mass > SUPPORT_TOL {
        return Err(Error::Precondition(format!(
            "input carries mass {mass:.3e} on x < 0"
        )));
    }
    Ok(())
}

/// `M_Θ f` for `f` supported on `[0, ∞)`.
pub fn apply_inner_multiplier(
    b: &BlaschkeProduct,
    f: &GridFunction,
    backend: Backend,
) -> Result<GridFunction> {
    check_past_support(f)?;
    b.check_distinct()?;
    let grid = *f.grid();
    let out = match backend {
        Backend::CausalConvolution => DiscreteMultiplier::new(b, grid.dx())?.apply(f.past()),
        Backend::BoundaryFft => boundary_fft_half(b, f.past(), grid.dx()),
    };
    Ok(GridFunction::from_half_line(grid, &out))
}

/// Discrete boundary transform of a half-line function.
///
/// `f̃_j = h Σ_n f_n e^{−iω_j x_n}` at `ω_j = j·Δω`, `Δω = 2π/(P h)`, with
/// `P ≥ 2·len` the padded length, so `h Σ|f_n|² = (Δω/2π) Σ|f̃_j|²` exactly.
#[derive(Debug, Clone, Serialize)]
pub struct Spectrum {
    pub frequencies: Vec<f64>,
    pub values: Vec<C64>,
    pub d_omega: f64,
}

impl Spectrum {
    /// `(Δω/2π) Σ|f̃_j|²`.
    pub fn energy(&self) -> f64 {
        self.d_omega / (2.0 * std::f64::consts::PI)
            * self.values.iter().map(|v| v.norm_sqr()).sum::<f64>()
    }
}

pub fn boundary_transform(f: &GridFunction) -> Result<Spectrum> {
    check_past_support(f)?;
    let grid = f.grid();
    let h = grid.dx();
    let half = f.past();
    let p = (2 * half.len()).next_power_of_two();
    let mut buf = vec![Complex64::new(0.0, 0.0); p];
    buf[..half.len()].copy_from_slice(half);
    FftPlanner::new().plan_fft_forward(p).process(&mut buf);
    let dw = 2.0 * std::f64::consts::PI / (p as f64 * h);
    let mut frequencies = Vec::with_capacity(p);
    let mut values = Vec::with_capacity(p);
    for (j, v) in buf.into_iter().enumerate() {
        let js = if j <= p / 2 {
            j as f64
        } else {
            j as f64 - p as f64
        };
        let w = js * dw;
        // sample n sits at x_n = (n + 1/2) h
        values.push(v * h * C64::new(0.0, -0.5 * w * h).exp());
        frequencies.push(w);
    }
    Ok(Spectrum {
        frequencies,
        values,
        d_omega: dw,
    })
}

/// `∫₀^∞ f(x) e^{−λx} dx` for the piecewise-constant function with the
/// stored cell values; exact for node-aligned indicators.
pub fn laplace_at(f: &GridFunction, lambda: C64) -> Result<C64> {
    check_past_support(f)?;
    let h = f.grid().dx();
    let cell = if (lambda * h).norm() < 1e-8 {
        C64::new(h, 0.0) * (1.0 - lambda * h / 2.0)
    } else {
        (1.0 - (-lambda * h).exp()) / lambda
    };
    let step = (-lambda * h).exp();
    let mut phase = C64::new(1.0, 0.0);
    let mut acc = C64::new(0.0, 0.0);
    for v in f.past() {
        acc += v * phase;
        phase *= step;
    }
    Ok(acc * cell)
}

/// First-order behaviour of `Θ` at large real argument.
#[derive(Debug, Clone, Serialize)]
pub struct B3Report {
    pub probe: f64,
    /// `λ(Θ(λ) − 1)` at the probe.
    pub slope_estimate: C64,
    /// First-order coefficient `2 Σ Re λ_k`.
    pub predicted: f64,
    /// `Σ Re λ_k`, the coefficient without the factor 2.
    pub sum_re: f64,
    pub relative_deviation: f64,
    pub tolerance: f64,
    pub pass: bool,
}

pub fn asymptotic_check_b3(b: &BlaschkeProduct, probe: f64) -> Result<B3Report> {
    let max_abs = b.zeros().iter().map(|z| z.norm()).fold(0.0, f64::max);
    if !(probe >= 100.0 * max_abs) || probe <= 0.0 {
        return Err(Error::Precondition(format!(
            "probe {probe} must be at least 100·max|λ_k| = {}",
            100.0 * max_abs
        )));
    }
    let lambda = C64::new(probe, 0.0);
    let slope = lambda * (b.eval(lambda)? - 1.0);
    let predicted = 2.0 * b.sum_re();
    let relative_deviation = if predicted == 0.0 {
        slope.norm()
    } else {
        (slope - predicted).norm() / predicted.abs()
    };
    let tolerance = 10.0 / probe;
    Ok(B3Report {
        probe,
        slope_estimate: slope,
        predicted,
        sum_re: b.sum_re(),
        relative_deviation,
        tolerance,
        pass: relative_deviation <= tolerance,
    })
}

/// Reproducing-kernel identity on the imaginary axis.
#[derive(Debug, Clone, Serialize)]
pub struct B2Report {
    pub mu: C64,
    pub lhs: C64,
    pub rhs: C64,
    pub residual: f64,
    /// Change between the final quadrature and one at half resolution.
    pub quadrature_error: f64,
    pub tolerance: f64,
    pub pass: bool,
}

const B2_PANELS: usize = 4096;
const B2_QUADRATURE_TOL: f64 = 1e-8;

/// `(Θ f̃, f̃)/‖f̃‖²` for `f̃(λ) = 1/(λ − μ)` against `Θ(−conj μ)`.
///
/// With `ω = Im μ + |Re μ| tan θ` the weight `|iω − μ|^{−2} dω` becomes
/// `dθ/|Re μ|` on `(−π/2, π/2)` and the integrand tends to 1 at both ends,
/// so composite Simpson converges rapidly.
pub fn b2_identity_check(b: &BlaschkeProduct, mu: C64) -> Result<B2Report> {
    if !(mu.re < 0.0) {
        return Err(Error::Precondition(format!(
            "Re μ must be negative, got {mu}"
        )));
    }
    let rhs = b.eval(-mu.conj())?;
    let (a, c) = (-mu.re, mu.im);
    let integrand = |theta: f64| {
        if theta.abs() >= std::f64::consts::FRAC_PI_2 {
            C64::new(1.0, 0.0)
        } else {
            b.eval_boundary(c + a * theta.tan())
        }
    };
    let half_pi = std::f64::consts::FRAC_PI_2;
    let pi = std::f64::consts::PI;
    let coarse = simpson(integrand, -half_pi, half_pi, B2_PANELS / 2) / pi;
    let lhs = simpson(integrand, -half_pi, half_pi, B2_PANELS) / pi;
    let quadrature_error = (lhs - coarse).norm();
    if quadrature_error > B2_QUADRATURE_TOL {
        return Err(Error::NumericalFailure(format!(
            "quadrature did not settle: successive estimates differ by {quadrature_error:.3e}"
        )));
    }
    let residual = (lhs - rhs).norm();
    let tolerance = 1e-6;
    Ok(B2Report {
        mu,
        lhs,
        rhs,
        residual,
        quadrature_error,
        tolerance,
        pass: residual <= tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn grid() -> GridSpec {
        crate::default_grid()
    }

    #[test]
    fn eval_examples() {
        let b = BlaschkeProduct::from_pairs(&[[-1.0, 0.0]]).unwrap();
        assert!((b.eval(c(0.5, 0.0)).unwrap() - c(-1.0 / 3.0, 0.0)).norm() < 1e-15);
        for w in [0.0, 1.0, 10.0] {
            assert!((b.eval(c(0.0, w)).unwrap().norm() - 1.0).abs() < 1e-15);
        }
        let e = BlaschkeProduct::identity();
        assert_eq!(e.eval(c(3.0, -2.0)).unwrap(), c(1.0, 0.0));
        assert!(matches!(
            b.eval(c(-1.0, 1e-13)),
            Err(Error::PoleProximity { .. })
        ));
        assert!(BlaschkeProduct::from_pairs(&[[0.0, 1.0]]).is_err());
    }

    #[test]
    fn residues_reproduce_theta() {
        let b = BlaschkeProduct::from_pairs(&[[-1.0, 0.0], [-2.0, 1.0], [-0.5, -3.0]]).unwrap();
        let cs = b.residues().unwrap();
        for l in [c(0.3, 0.7), c(2.0, -5.0), c(0.0, 1.0)] {
            let pf = cs
                .iter()
                .zip(b.zeros())
                .fold(c(1.0, 0.0), |acc, (cj, lj)| acc + cj / (l - lj));
            assert!((pf - b.eval(l).unwrap()).norm() < 1e-13);
        }
        let rep = BlaschkeProduct::from_pairs(&[[-1.0, 0.0], [-1.0, 0.0]]).unwrap();
        assert!(matches!(rep.residues(), Err(Error::Unsupported(_))));
    }

    /// `χ_{[0,1]} − 2e^{−x}∫₀^{min(x,1)} e^y dy`.
    fn exact_image_chi01(x: f64) -> f64 {
        if x < 0.0 {
            0.0
        } else if x < 1.0 {
            1.0 - 2.0 * (1.0 - (-x).exp())
        } else {
            -2.0 * (-x).exp() * (1f64.exp() - 1.0)
        }
    }

    #[test]
    fn both_backends_match_time_domain_image() {
        let g = grid();
        let b = BlaschkeProduct::from_pairs(&[[-1.0, 0.0]]).unwrap();
        let f = GridFunction::indicator(g, 0.0, 1.0).unwrap();
        let exact = GridFunction::from_real_fn(g, exact_image_chi01);
        let h2 = g.dx() * g.dx();
        for backend in [Backend::CausalConvolution, Backend::BoundaryFft] {
            let img = apply_inner_multiplier(&b, &f, backend).unwrap();
            let err = img.distance(&exact).unwrap();
            assert!(err < 5.0 * h2, "{backend:?}: {err}");
        }
    }

    #[test]
    fn empty_product_is_identity() {
        let g = grid();
        let f =
            GridFunction::from_real_fn(g, |x| if x >= 0.0 { (-x).exp() * x.cos() } else { 0.0 });
        let b = BlaschkeProduct::identity();
        for backend in [Backend::CausalConvolution, Backend::BoundaryFft] {
            assert_eq!(apply_inner_multiplier(&b, &f, backend).unwrap(), f);
        }
    }

    #[test]
    fn multiplier_is_isometric_and_causal() {
        let g = grid();
        let f = GridFunction::from_real_fn(g, |x| if x >= 0.0 { (-x).exp() } else { 0.0 });
        for zs in [
            vec![[-1.0, 0.0]],
            vec![[-1.0, 0.0], [-2.0, 0.0]],
            vec![[-1.0, 1.0], [-1.0, -1.0]],
        ] {
            let b = BlaschkeProduct::from_pairs(&zs).unwrap();
            let img = apply_inner_multiplier(&b, &f, Backend::CausalConvolution).unwrap();
            assert!((img.norm() - f.norm()).abs() < 1e-8);
            assert_eq!(img.mass_on_negative_axis(), 0.0);
        }
        let bad = GridFunction::indicator(g, -1.0, 1.0).unwrap();
        let b = BlaschkeProduct::from_pairs(&[[-1.0, 0.0]]).unwrap();
        assert!(matches!(
            apply_inner_multiplier(&b, &bad, Backend::CausalConvolution),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn adjoint_and_impulse_response_agree_with_dense_form() {
        let b = BlaschkeProduct::from_pairs(&[[-1.0, 0.5], [-3.0, 0.0]]).unwrap();
        let dm = DiscreteMultiplier::new(&b, 0.05).unwrap();
        let n = 40;
        let imp = dm.impulse_response(n);
        let x: Vec<C64> = (0..n)
            .map(|i| c((i as f64).sin(), (0.3 * i as f64).cos()))
            .collect();
        let y: Vec<C64> = (0..n)
            .map(|i| c((1.7 * i as f64).cos(), 0.1 * i as f64))
            .collect();
        let mx = dm.apply(&x);
        for i in 0..n {
            let dense: C64 = (0..=i).map(|j| imp[i - j] * x[j]).sum();
            assert!((dense - mx[i]).norm() < 1e-12);
        }
        let lhs: C64 = mx.iter().zip(&y).map(|(a, b)| a * b.conj()).sum();
        let my = dm.apply_adjoint(&y);
        let rhs: C64 = x.iter().zip(&my).map(|(a, b)| a * b.conj()).sum();
        assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn parseval_and_laplace_values() {
        let g = grid();
        let pi = std::f64::consts::PI;
        let t = 1.0;
        let f = GridFunction::indicator(g, 0.0, t).unwrap();
        let s = boundary_transform(&f).unwrap();
        assert!((s.energy() - f.norm_sq()).abs() <= 1e-8 * f.norm_sq());
        for w in [1.0, 2.0, 4.0] {
            let l = c(0.0, w);
            let exact = (1.0 - (-l * t).exp()) / l;
            let got = laplace_at(&f, l).unwrap();
            assert!((got - exact).norm() <= 1e-6 * exact.norm());
        }
        // DFT bins at multiples of Δω reproduce the transform of the step function
        let j = 4;
        let l = c(0.0, s.frequencies[j]);
        let exact = (1.0 - (-l * t).exp()) / l;
        let sinc = (0.5 * s.frequencies[j] * g.dx()).sin() / (0.5 * s.frequencies[j] * g.dx());
        assert!((s.values[j] * sinc - exact).norm() < 1e-12);

        let zero = GridFunction::zeros(g);
        let s0 = boundary_transform(&zero).unwrap();
        assert!(s0.values.iter().all(|v| v.norm() == 0.0));

        let fine = GridSpec::new(0.0, 32.0, 32 * 1024).unwrap();
        let e = GridFunction::from_real_fn(fine, |x| (-x).exp());
        for w in [0.0, 1.0, 2.0 * pi] {
            let got = laplace_at(&e, c(0.0, w)).unwrap();
            let exact = 1.0 / c(1.0, w);
            assert!((got - exact).norm() < 1e-6, "{w}: {got} vs {exact}");
        }
    }

    #[test]
    fn b3_examples() {
        let zs: Vec<C64> = (1..=20).map(|k| c(-(0.5f64).powi(k), 0.0)).collect();
        let b = BlaschkeProduct::new(zs).unwrap();
        let r = asymptotic_check_b3(&b, 1e4).unwrap();
        let sum = -(1.0 - (0.5f64).powi(20));
        assert!((r.sum_re - sum).abs() < 1e-15);
        assert!((r.slope_estimate.re - 2.0 * sum).abs() < 1e-3 * 2.0);
        assert!(r.pass);

        let r = asymptotic_check_b3(&BlaschkeProduct::identity(), 10.0).unwrap();
        assert_eq!(r.slope_estimate, c(0.0, 0.0));

        let b = BlaschkeProduct::from_pairs(&[[-1.0, 0.0]]).unwrap();
        let r = asymptotic_check_b3(&b, 1e3).unwrap();
        assert!((r.slope_estimate.re + 2000.0 / 1001.0).abs() < 1e-12);
        assert!(r.relative_deviation <= 2e-3);
        assert!(matches!(
            asymptotic_check_b3(&b, 50.0),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn b2_examples() {
        let b = BlaschkeProduct::from_pairs(&[[-1.0, 0.0]]).unwrap();
        let r = b2_identity_check(&b, c(-0.5, 0.0)).unwrap();
        assert!((r.rhs - c(-1.0 / 3.0, 0.0)).norm() < 1e-15);
        assert!(r.pass, "{r:?}");

        let r = b2_identity_check(&BlaschkeProduct::identity(), c(-0.7, 2.0)).unwrap();
        assert!((r.lhs - 1.0).norm() < 1e-12 && r.rhs == c(1.0, 0.0));

        let b = BlaschkeProduct::from_pairs(&[[-1.0, -1.0]]).unwrap();
        let r = b2_identity_check(&b, c(-1.0, 0.0)).unwrap();
        let direct = c(0.0, 1.0) / c(2.0, 1.0);
        assert!((r.rhs - direct).norm() < 1e-15);
        assert!(r.pass, "{r:?}");
    }
}
