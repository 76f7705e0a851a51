//! Orthocomplement of the inner multiplier's range in `L²(ℝ₊)` and the
//! rotation group acting on it.
//!
//! On the grid the complement of the range of the trapezoidal multiplier is
//! spanned exactly by the discrete exponentials `n ↦ ρ_k^n`, the sampled
//! counterparts of `e^{λ_k x}`. The basis `g_k` is their Gram–Schmidt
//! orthonormalisation in the order the zeros were given.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::blaschke::{BlaschkeProduct, DiscreteMultiplier, SUPPORT_TOL};
use crate::error::{Error, Result};
use crate::grid::{inner_slices, GridFunction, GridSpec, Subspace, C64};
use crate::numerics::hermitian_eigenvalues;

/// Largest accepted condition number of the exponential Gram matrix.
pub const GRAM_CONDITION_LIMIT: f64 = 1e12;
/// Largest accepted squared norm of a normalised exponential beyond the grid.
pub const TAIL_MASS_LIMIT: f64 = 1e-10;
const MEMBERSHIP_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Projection {
    OntoVperp,
    OntoV,
}

#[derive(Debug, Clone)]
pub struct ModelSpace {
    blaschke: BlaschkeProduct,
    grid: GridSpec,
    multiplier: DiscreteMultiplier,
    basis: Vec<Vec<C64>>,
    frequencies: Vec<f64>,
}

/// Orthonormalised discrete exponentials `ρ_k^n`, `n < len`.
///
/// Modified Gram–Schmidt with one reorthogonalisation pass. The Gram matrix
/// `h (1 − (ρ_k conj ρ_l)^len)/(1 − ρ_k conj ρ_l)` is checked in closed form
/// first.
pub fn orthonormal_exponentials(rho: &[C64], len: usize, h: f64) -> Result<Vec<Vec<C64>>> {
    let n = rho.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let gram = DMatrix::from_fn(n, n, |k, l| {
        let q = rho[k] * rho[l].conj();
        if (1.0 - q).norm() < 1e-14 {
            C64::new(h * len as f64, 0.0)
        } else {
            (1.0 - q.powu(len as u32)) / (1.0 - q) * h
        }
    });
    let ev = hermitian_eigenvalues(gram);
    let condition = if ev[0] > 0.0 {
        ev[n - 1] / ev[0]
    } else {
        f64::INFINITY
    };
    if condition > GRAM_CONDITION_LIMIT {
        return Err(Error::IllConditioned {
            condition,
            limit: GRAM_CONDITION_LIMIT,
        });
    }
    let mut basis: Vec<Vec<C64>> = Vec::with_capacity(n);
    for r in rho {
        let mut v = Vec::with_capacity(len);
        let mut p = C64::new(1.0, 0.0);
        for _ in 0..len {
            v.push(p);
            p *= r;
        }
        for _pass in 0..2 {
            for q in &basis {
                let c = inner_slices(&v, q, h);
                for (a, b) in v.iter_mut().zip(q) {
                    *a -= c * b;
                }
            }
        }
        let norm = inner_slices(&v, &v, h).re.sqrt();
        for a in &mut v {
            *a /= norm;
        }
        basis.push(v);
    }
    Ok(basis)
}

impl ModelSpace {
    /// Rotation frequencies default to `Im λ_k`.
    pub fn new(blaschke: BlaschkeProduct, grid: GridSpec) -> Result<Self> {
        let freqs = blaschke.zeros().iter().map(|z| z.im).collect();
        Self::with_frequencies(blaschke, grid, freqs)
    }

    pub fn with_frequencies(
        blaschke: BlaschkeProduct,
        grid: GridSpec,
        frequencies: Vec<f64>,
    ) -> Result<Self> {
        if frequencies.len() != blaschke.len() {
            return Err(Error::Precondition(format!(
                "{} frequencies for {} zeros",
                frequencies.len(),
                blaschke.len()
            )));
        }
        let length = grid.x_max();
        for z in blaschke.zeros() {
            let tail = (2.0 * z.re * length).exp();
            if tail > TAIL_MASS_LIMIT {
                return Err(Error::Precondition(format!(
                    "exponential for zero {z} keeps mass {tail:.3e} beyond x = {length}"
                )));
            }
        }
        let multiplier = DiscreteMultiplier::new(&blaschke, grid.dx())?;
        let basis = orthonormal_exponentials(multiplier.rho(), grid.half_len(), grid.dx())?;
        Ok(Self {
            blaschke,
            grid,
            multiplier,
            basis,
            frequencies,
        })
    }

    pub fn blaschke(&self) -> &BlaschkeProduct {
        &self.blaschke
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn multiplier(&self) -> &DiscreteMultiplier {
        &self.multiplier
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Half-line samples of `g_k`.
    pub fn basis_half(&self) -> &[Vec<C64>] {
        &self.basis
    }

    pub fn basis(&self) -> Vec<GridFunction> {
        self.basis
            .iter()
            .map(|g| GridFunction::from_half_line(self.grid, g))
            .collect()
    }

    pub fn subspace(&self) -> Result<Subspace> {
        Subspace::with_tolerance(self.basis(), "V-perp", 1e-8)
    }

    /// Orthonormal exponentials on `[0, L − s)` translated right by `s`,
    /// given as half-line samples with `k` leading zeros.
    pub fn translated_basis(&self, k: usize) -> Result<Vec<Vec<C64>>> {
        let m = self.grid.half_len();
        if k == 0 {
            return Ok(self.basis.clone());
        }
        if k >= m {
            return Ok(vec![vec![C64::new(0.0, 0.0); m]; self.dim()]);
        }
        let short = orthonormal_exponentials(self.multiplier.rho(), m - k, self.grid.dx())?;
        Ok(short
            .into_iter()
            .map(|g| {
                let mut v = vec![C64::new(0.0, 0.0); k];
                v.extend(g);
                v
            })
            .collect())
    }

    pub fn coefficients_half(&self, v: &[C64]) -> Vec<C64> {
        self.basis
            .iter()
            .map(|g| inner_slices(v, g, self.grid.dx()))
            .collect()
    }

    /// `Σ_k c_k g_k` on the half-line.
    pub fn synthesize_half(&self, coeffs: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.grid.half_len()];
        for (c, g) in coeffs.iter().zip(&self.basis) {
            for (o, x) in out.iter_mut().zip(g) {
                *o += c * x;
            }
        }
        out
    }

    pub fn project_perp_half(&self, v: &[C64]) -> Vec<C64> {
        self.synthesize_half(&self.coefficients_half(v))
    }

    fn check_support(&self, f: &GridFunction) -> Result<()> {
        if f.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        let mass = f.mass_on_negative_axis();
        if mass > SUPPORT_TOL {
            return Err(Error::Precondition(format!(
                "input carries mass {mass:.3e} on x < 0"
            )));
        }
        Ok(())
    }

    pub fn model_projection(&self, f: &GridFunction, which: Projection) -> Result<GridFunction> {
        self.check_support(f)?;
        let perp = self.project_perp_half(f.past());
        let half = match which {
            Projection::OntoVperp => perp,
            Projection::OntoV => f.past().iter().zip(&perp).map(|(a, b)| a - b).collect(),
        };
        Ok(GridFunction::from_half_line(self.grid, &half))
    }

    /// Multiplies the `k`-th coefficient by `e^{i ω_k t}`.
    pub fn rotate_coefficients(&self, coeffs: &[C64], t: f64) -> Vec<C64> {
        coeffs
            .iter()
            .zip(&self.frequencies)
            .map(|(c, w)| c * C64::from_polar(1.0, w * t))
            .collect()
    }

    pub fn rotation_apply(&self, f: &GridFunction, t: f64) -> Result<GridFunction> {
        self.check_support(f)?;
        let coeffs = self.coefficients_half(f.past());
        let recon = self.synthesize_half(&coeffs);
        let residual = f
            .past()
            .iter()
            .zip(&recon)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
            * self.grid.dx().sqrt();
        if residual > MEMBERSHIP_TOL * f.norm().max(1.0) {
            return Err(Error::NotInSubspace { residual });
        }
        let rotated = self.synthesize_half(&self.rotate_coefficients(&coeffs, t));
        Ok(GridFunction::from_half_line(self.grid, &rotated))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blaschke::{apply_inner_multiplier, Backend};
    use crate::grid::gram_deviation;

    fn model(zs: &[[f64; 2]]) -> ModelSpace {
        ModelSpace::new(
            BlaschkeProduct::from_pairs(zs).unwrap(),
            crate::default_grid(),
        )
        .unwrap()
    }

    fn on_half_line(x: f64, v: f64) -> f64 {
        if x >= 0.0 {
            v
        } else {
            0.0
        }
    }

    #[test]
    fn single_zero_gives_normalised_exponential() {
        let m = model(&[[-1.0, 0.0]]);
        let g = &m.basis()[0];
        let grid = *g.grid();
        let exact = GridFunction::from_real_fn(grid, |x| on_half_line(x, 2f64.sqrt() * (-x).exp()));
        assert!(g.distance(&exact).unwrap() < grid.dx() * grid.dx());
    }

    #[test]
    fn two_zeros_match_hand_gram_schmidt() {
        let m = model(&[[-1.0, 0.0], [-2.0, 0.0]]);
        let b = m.basis();
        let grid = *b[0].grid();
        let g2 = GridFunction::from_real_fn(grid, |x| {
            on_half_line(x, 6.0 * (-2.0 * x).exp() - 4.0 * (-x).exp())
        });
        assert!(b[1].distance(&g2).unwrap() < 4.0 * grid.dx() * grid.dx());
        assert!(gram_deviation(&b) < 1e-12);
        assert_eq!(model(&[]).dim(), 0);
    }

    #[test]
    fn clustered_zeros_are_rejected() {
        let b = BlaschkeProduct::from_pairs(&[[-1.0, 0.0], [-1.0 - 1e-7, 0.0]]).unwrap();
        let r = ModelSpace::new(b, crate::default_grid());
        assert!(matches!(r, Err(Error::IllConditioned { .. })));
        let b = BlaschkeProduct::from_pairs(&[[-0.1, 0.0]]).unwrap();
        assert!(matches!(
            ModelSpace::new(b, crate::default_grid()),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn projection_examples() {
        let m = model(&[[-1.0, 0.0]]);
        let grid = *m.grid();
        let e = GridFunction::from_real_fn(grid, |x| on_half_line(x, (-x).exp()));
        let perp = m.model_projection(&e, Projection::OntoVperp).unwrap();
        let v = m.model_projection(&e, Projection::OntoV).unwrap();
        assert!(perp.distance(&e).unwrap() < 1e-4);
        assert!(v.norm() < 1e-4);
        assert!(perp.add(&v).unwrap().distance(&e).unwrap() < 1e-15);

        let empty = model(&[]);
        assert_eq!(empty.model_projection(&e, Projection::OntoV).unwrap(), e);

        let chi = GridFunction::indicator(grid, 0.0, 1.0).unwrap();
        let img = apply_inner_multiplier(m.blaschke(), &chi, Backend::CausalConvolution).unwrap();
        let p = m.model_projection(&img, Projection::OntoVperp).unwrap();
        assert!(p.norm() < 1e-6, "{}", p.norm());
    }

    #[test]
    fn range_orthogonal_to_exponentials_after_right_shift() {
        let m = model(&[[-1.0, 1.0], [-1.0, -1.0]]);
        let grid = *m.grid();
        let f = GridFunction::from_real_fn(grid, |x| on_half_line(x, (x * 3.0).sin() * (-x).exp()));
        let img = apply_inner_multiplier(m.blaschke(), &f, Backend::CausalConvolution).unwrap();
        for t in [0.0, 0.5, 1.0, 2.0] {
            let shifted = img.shift(-t).unwrap().function;
            let p = m.model_projection(&shifted, Projection::OntoVperp).unwrap();
            assert!(p.norm() < 1e-6 * f.norm(), "t = {t}: {}", p.norm());
        }
    }

    #[test]
    fn rotation_examples() {
        let m = model(&[[-1.0, 0.0]]);
        let g = m.basis()[0].clone();
        assert!(m.rotation_apply(&g, 3.7).unwrap().distance(&g).unwrap() < 1e-14);

        let b = BlaschkeProduct::from_pairs(&[[-1.0, 0.0]]).unwrap();
        let m1 = ModelSpace::with_frequencies(b, crate::default_grid(), vec![1.0]).unwrap();
        let r = m1.rotation_apply(&g, std::f64::consts::PI).unwrap();
        assert!(r.add(&g).unwrap().norm() < 1e-10);

        let chi = GridFunction::indicator(*g.grid(), 0.0, 1.0).unwrap();
        assert!(matches!(
            m.rotation_apply(&chi, 1.0),
            Err(Error::NotInSubspace { .. })
        ));
    }
}
