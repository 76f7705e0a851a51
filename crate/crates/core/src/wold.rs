//! Isometry semigroups on the half-line: index, Wold split and the spectrum
//! of the unitary part.
//!
//! The perturbed semigroup is `V_t = W_{−t} T_t` with `T_t = S_{−t}` the
//! right shift. Its wandering space at step `t` is `W_{−t} L²[0, t)`, and the
//! unitary part is the orthocomplement of the closed span of the wandering
//! orbit `{V_{jt} W_{−t} e_i}`.
//!
//! Dense linear algebra works in Euclidean coordinates: a half-line vector
//! `v` with `L²` norm `‖v‖` is represented by `√h · v`.

use nalgebra::{DMatrix, Schur, SVD};
use serde::Serialize;

use crate::cocycle::{perturbed_spiral, MarkovianCocycle, PastBlock, ResidualReport};
use crate::corpus::standard_corpus;
use crate::error::{Error, Result};
use crate::grid::{inner_slices, GridFunction, GridSpec, Subspace, C64};
use crate::model_space::ModelSpace;
use crate::numerics::hermitian_eigenvalues;
use crate::parallel::map_indexed;

/// Singular values below this belong to the orthocomplement.
pub const RANK_THRESHOLD: f64 = 1e-6;
/// Defect eigenvalues inside this band make the rank ambiguous.
const AMBIGUOUS_BAND: (f64, f64) = (1e-8, 1e-4);
const REDUCTION_TOL: f64 = 1e-6;
/// Preferred base time for the generator route at non-aligned times.
const GENERATOR_BASE: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    PureShift,
    Perturbed,
}

/// `t ↦ V_t` on half-line samples.
#[derive(Clone, Copy)]
pub struct IsometrySemigroup<'a> {
    grid: GridSpec,
    cocycle: Option<&'a MarkovianCocycle>,
}

/// `V_t` for one fixed step count.
pub struct Step<'a> {
    k: usize,
    block: Option<PastBlock<'a>>,
}

impl Step<'_> {
    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); v.len()];
        if self.k < v.len() {
            out[self.k..].copy_from_slice(&v[..v.len() - self.k]);
        }
        match &self.block {
            Some(b) => b.apply(&out),
            None => out,
        }
    }
}

impl<'a> IsometrySemigroup<'a> {
    pub fn pure_shift(grid: GridSpec) -> Self {
        Self {
            grid,
            cocycle: None,
        }
    }

    pub fn perturbed(w: &'a MarkovianCocycle) -> Self {
        Self {
            grid: *w.grid(),
            cocycle: Some(w),
        }
    }

    pub fn provenance(&self) -> Provenance {
        if self.cocycle.is_some() {
            Provenance::Perturbed
        } else {
            Provenance::PureShift
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    fn execution(&self) -> crate::Execution {
        self.cocycle.map(|w| w.execution()).unwrap_or_default()
    }

    pub fn step(&self, t: f64) -> Result<Step<'a>> {
        let k = self.grid.steps(t)?;
        if k < 0 {
            return Err(Error::Precondition(format!(
                "semigroup time must be ≥ 0, got {t}"
            )));
        }
        let k = k as usize;
        let block = match self.cocycle {
            Some(w) => Some(w.past_block(k)?),
            None => None,
        };
        Ok(Step { k, block })
    }

    /// Dense matrix of `V_t` in Euclidean half-line coordinates.
    pub fn matrix(&self, t: f64) -> Result<DMatrix<C64>> {
        let step = self.step(t)?;
        let m = self.grid.half_len();
        let cols = map_indexed(self.execution(), m, |j| {
            let mut e = vec![C64::new(0.0, 0.0); m];
            e[j] = C64::new(1.0, 0.0);
            step.apply(&e)
        });
        Ok(DMatrix::from_fn(m, m, |i, j| cols[j][i]))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct IndexReport {
    pub t_step: f64,
    pub defect_rank: usize,
    pub slots: usize,
    pub index: usize,
    /// Largest defect eigenvalue counted as zero.
    pub largest_null: f64,
    /// Smallest defect eigenvalue counted in the rank.
    pub smallest_kept: f64,
}

/// Rank of `I − V V*` divided by the number of cells in `[0, t_step)`.
pub fn index_estimate(v: &IsometrySemigroup, t_step: f64) -> Result<IndexReport> {
    let k = v.grid.steps(t_step)?;
    if k <= 0 {
        return Err(Error::Precondition(format!(
            "t_step must be positive, got {t_step}"
        )));
    }
    let slots = k as usize;
    let a = v.matrix(t_step)?;
    let m = a.nrows();
    let defect = DMatrix::<C64>::identity(m, m) - &a * a.adjoint();
    let ev = hermitian_eigenvalues(defect);
    if let Some(e) = ev
        .iter()
        .find(|e| e.abs() >= AMBIGUOUS_BAND.0 && e.abs() <= AMBIGUOUS_BAND.1)
    {
        return Err(Error::IndeterminateIndex(format!(
            "defect eigenvalue {e:.3e} lies near the rank threshold"
        )));
    }
    let kept: Vec<f64> = ev
        .iter()
        .copied()
        .filter(|e| e.abs() > RANK_THRESHOLD)
        .collect();
    let defect_rank = kept.len();
    if !defect_rank.is_multiple_of(slots) {
        return Err(Error::IndeterminateIndex(format!(
            "defect rank {defect_rank} is not a multiple of {slots} slots"
        )));
    }
    let largest_null = ev
        .iter()
        .map(|e| e.abs())
        .filter(|e| *e <= RANK_THRESHOLD)
        .fold(0.0, f64::max);
    let smallest_kept = kept.iter().map(|e| e.abs()).fold(f64::INFINITY, f64::min);
    Ok(IndexReport {
        t_step,
        defect_rank,
        slots,
        index: defect_rank / slots,
        largest_null,
        smallest_kept,
    })
}

#[derive(Debug, Clone)]
pub struct WoldSplit {
    grid: GridSpec,
    /// Orthonormal half-line basis of the unitary part.
    unitary_part: Vec<Vec<C64>>,
    /// Principal angles (radians) between the unitary part and `span{g_k}`.
    pub angles: Vec<f64>,
    /// Largest singular value of the orbit matrix assigned to the complement.
    pub largest_null_sigma: f64,
    /// Smallest singular value kept in the orbit span.
    pub smallest_orbit_sigma: f64,
    pub converged: bool,
    pub t_probe: f64,
    /// Multiplier images of past-supported corpus entries; these lie in the
    /// shift part.
    shift_part_witness: Vec<Vec<C64>>,
}

impl WoldSplit {
    pub fn dim(&self) -> usize {
        self.unitary_part.len()
    }

    pub fn unitary_part(&self) -> &[Vec<C64>] {
        &self.unitary_part
    }

    pub fn max_angle(&self) -> f64 {
        self.angles.iter().copied().fold(0.0, f64::max)
    }

    pub fn shift_part_witness(&self) -> &[Vec<C64>] {
        &self.shift_part_witness
    }

    pub fn subspace(&self) -> Result<Subspace> {
        let basis = self
            .unitary_part
            .iter()
            .map(|q| GridFunction::from_half_line(self.grid, q))
            .collect();
        Subspace::new(basis, "unitary part")
    }

    /// `max |⟨q, w⟩| / ‖w‖` over the unitary basis and the witness set.
    pub fn orthogonality_defect(&self) -> f64 {
        let h = self.grid.dx();
        let mut worst = 0.0f64;
        for w in &self.shift_part_witness {
            let norm = inner_slices(w, w, h).re.sqrt();
            if norm == 0.0 {
                continue;
            }
            for q in &self.unitary_part {
                worst = worst.max(inner_slices(q, w, h).norm() / norm);
            }
        }
        worst
    }

    /// `max ‖P V_t f − V_t P f‖ / ‖f‖` over half-line samples `probes`.
    pub fn reduction_defect(
        &self,
        v: &IsometrySemigroup,
        t: f64,
        probes: &[Vec<C64>],
    ) -> Result<f64> {
        let step = v.step(t)?;
        let h = self.grid.dx();
        let mut worst = 0.0f64;
        for f in probes {
            let norm = inner_slices(f, f, h).re.sqrt();
            if norm == 0.0 {
                continue;
            }
            let a = self.project(&step.apply(f));
            let b = step.apply(&self.project(f));
            let diff: Vec<C64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
            worst = worst.max(inner_slices(&diff, &diff, h).re.sqrt() / norm);
        }
        Ok(worst)
    }

    /// Orthogonal projection onto the unitary part.
    pub fn project(&self, v: &[C64]) -> Vec<C64> {
        let h = self.grid.dx();
        let mut out = vec![C64::new(0.0, 0.0); v.len()];
        for q in &self.unitary_part {
            let c = inner_slices(v, q, h);
            for (o, x) in out.iter_mut().zip(q) {
                *o += c * x;
            }
        }
        out
    }
}

fn to_euclid(v: &[C64], h: f64) -> Vec<C64> {
    let s = h.sqrt();
    v.iter().map(|x| x * s).collect()
}

/// Principal angles between two orthonormal column sets.
fn principal_angles(a: &DMatrix<C64>, b: &DMatrix<C64>) -> Vec<f64> {
    if a.ncols() == 0 || b.ncols() == 0 {
        return Vec::new();
    }
    // sines from the part of `a` outside span(b): stable for small angles
    let resid = a - b * (b.adjoint() * a);
    let sv = SVD::new(resid, false, false).singular_values;
    let mut angles: Vec<f64> = sv.iter().map(|s| s.min(1.0).asin()).collect();
    angles.sort_by(f64::total_cmp);
    angles
}

/// Orthocomplement of the wandering orbit of `V_{t_probe}` over `depth` steps.
pub fn wold_split(
    v: &IsometrySemigroup,
    model: &ModelSpace,
    t_probe: f64,
    depth: usize,
) -> Result<WoldSplit> {
    let w = v.cocycle.ok_or_else(|| {
        Error::Precondition("the Wold split needs the perturbed semigroup".into())
    })?;
    let grid = v.grid;
    let h = grid.dx();
    let m = grid.half_len();
    let k = grid.steps(t_probe)?;
    if k <= 0 {
        return Err(Error::Precondition(format!(
            "t_probe must be positive, got {t_probe}"
        )));
    }
    let k = k as usize;
    let wandering = w.past_block(k)?;
    let step = v.step(t_probe)?;
    let seeds = map_indexed(w.execution(), k, |i| {
        let mut e = vec![C64::new(0.0, 0.0); m];
        e[i] = C64::new(1.0, 0.0);
        wandering.apply(&e)
    });
    let orbits = map_indexed(w.execution(), k, |i| {
        let mut col = seeds[i].clone();
        let mut out = Vec::with_capacity(depth);
        for _ in 0..depth {
            let next = step.apply(&col);
            out.push(std::mem::replace(&mut col, next));
        }
        out
    });
    let cols: Vec<&Vec<C64>> = (0..depth)
        .flat_map(|j| orbits.iter().map(move |o| &o[j]))
        .collect();
    let a = DMatrix::from_fn(m, cols.len(), |i, j| cols[j][i]);
    // pad to square so the left singular basis is complete
    let a = if a.ncols() < m {
        a.resize_horizontally(m, C64::new(0.0, 0.0))
    } else {
        a
    };
    let svd = SVD::new(a, true, false);
    let u = svd
        .u
        .ok_or_else(|| Error::NumericalFailure("SVD did not return left vectors".into()))?;
    let sv = &svd.singular_values;
    let null: Vec<usize> = (0..sv.len()).filter(|&i| sv[i] < RANK_THRESHOLD).collect();
    let largest_null_sigma = null.iter().map(|&i| sv[i]).fold(0.0, f64::max);
    let smallest_orbit_sigma = (0..sv.len())
        .filter(|&i| sv[i] >= RANK_THRESHOLD)
        .map(|i| sv[i])
        .fold(f64::INFINITY, f64::min);
    let q1 = DMatrix::from_fn(m, null.len(), |i, j| u[(i, null[j])]);
    let s = 1.0 / h.sqrt();
    let unitary_part: Vec<Vec<C64>> = (0..q1.ncols())
        .map(|j| q1.column(j).iter().map(|x| x * s).collect())
        .collect();
    let g: Vec<Vec<C64>> = model.basis_half().iter().map(|g| to_euclid(g, h)).collect();
    let gm = DMatrix::from_fn(m, g.len(), |i, j| g[j][i]);
    let angles = if q1.ncols() == gm.ncols() {
        principal_angles(&q1, &gm)
    } else {
        vec![std::f64::consts::FRAC_PI_2; q1.ncols().max(gm.ncols())]
    };
    let converged = largest_null_sigma * 100.0 < smallest_orbit_sigma;
    let multiplier = model.multiplier();
    let shift_part_witness = standard_corpus(grid)
        .into_iter()
        .map(|e| e.function)
        .filter(|f| f.mass_on_negative_axis() == 0.0 && f.norm() > 0.0)
        .map(|f| multiplier.apply(f.past()))
        .collect();
    Ok(WoldSplit {
        grid,
        unitary_part,
        angles,
        largest_null_sigma,
        smallest_orbit_sigma,
        converged,
        t_probe,
        shift_part_witness,
    })
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumMethod {
    /// Eigenvalues of the compression at the requested time.
    Compression,
    /// Principal logarithms at an aligned base time, exponentiated.
    Generator { base: f64 },
}

#[derive(Debug, Clone, Serialize)]
pub struct UnitarySpectrum {
    pub t: f64,
    pub eigenvalues: Vec<C64>,
    pub method: SpectrumMethod,
    /// `‖C*C − I‖_max` of the compression used.
    pub unitarity_defect: f64,
}

fn compression(split: &WoldSplit, v: &IsometrySemigroup, t: f64) -> Result<(DMatrix<C64>, f64)> {
    let step = v.step(t)?;
    let h = split.grid.dx();
    let q = split.unitary_part();
    let images: Vec<Vec<C64>> = q.iter().map(|x| step.apply(x)).collect();
    let d = q.len();
    let c = DMatrix::from_fn(d, d, |i, j| inner_slices(&images[j], &q[i], h));
    let defect = (c.adjoint() * &c - DMatrix::identity(d, d))
        .iter()
        .map(|x| x.norm())
        .fold(0.0, f64::max);
    if defect > REDUCTION_TOL {
        return Err(Error::FailedReduction { defect });
    }
    Ok((c, defect))
}

fn eigenvalues(c: DMatrix<C64>) -> Result<Vec<C64>> {
    if c.nrows() == 0 {
        return Ok(Vec::new());
    }
    let ev = Schur::new(c)
        .eigenvalues()
        .ok_or_else(|| Error::NumericalFailure("Schur form did not converge".into()))?;
    let mut ev: Vec<C64> = ev.iter().copied().collect();
    ev.sort_by(|a, b| a.arg().total_cmp(&b.arg()));
    Ok(ev)
}

/// Eigenvalues of `V_t` compressed to the unitary part.
pub fn unitary_part_spectrum(
    split: &WoldSplit,
    v: &IsometrySemigroup,
    t: f64,
) -> Result<UnitarySpectrum> {
    if !split.converged {
        return Err(Error::Precondition("Wold split did not converge".into()));
    }
    if v.grid.is_aligned(t) {
        let (c, defect) = compression(split, v, t)?;
        return Ok(UnitarySpectrum {
            t,
            eigenvalues: eigenvalues(c)?,
            method: SpectrumMethod::Compression,
            unitarity_defect: defect,
        });
    }
    let base = if v.grid.is_aligned(GENERATOR_BASE) {
        GENERATOR_BASE
    } else {
        split.t_probe
    };
    let (c, defect) = compression(split, v, base)?;
    let ratio = t / base;
    let mut ev: Vec<C64> = eigenvalues(c)?
        .into_iter()
        .map(|z| C64::from_polar(z.norm().powf(ratio), z.arg() * ratio))
        .collect();
    ev.sort_by(|a, b| a.arg().total_cmp(&b.arg()));
    Ok(UnitarySpectrum {
        t,
        eigenvalues: ev,
        method: SpectrumMethod::Generator { base },
        unitarity_defect: defect,
    })
}

/// Greedy nearest pairing of `a` with distinct elements of `b`.
pub fn match_targets(a: &[C64], b: &[C64]) -> Vec<(C64, C64)> {
    let mut used = vec![false; b.len()];
    a.iter()
        .filter_map(|x| {
            let j = (0..b.len())
                .filter(|j| !used[*j])
                .min_by(|i, j| (x - b[*i]).norm().total_cmp(&(x - b[*j]).norm()))?;
            used[j] = true;
            Some((*x, b[j]))
        })
        .collect()
}

/// Greedy multiset distance between two equal-size point sets.
pub fn multiset_distance(a: &[C64], b: &[C64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    match_targets(a, b)
        .iter()
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// `max |⟨ξ'_b − ξ'_a, ξ'_d − ξ'_c⟩|` over disjoint interval pairs `[a, b]`,
/// `[c, d]` with endpoints from `times`.
pub fn noncorrelated_increments_check(
    w: &MarkovianCocycle,
    times: &[f64],
) -> Result<ResidualReport> {
    let mut ts = times.to_vec();
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    let xi: Vec<_> = ts
        .iter()
        .map(|&t| perturbed_spiral(w, t))
        .collect::<Result<_>>()?;
    let mut worst = (0.0f64, String::new());
    for a in 0..ts.len() {
        for b in a + 1..ts.len() {
            let inc1 = xi[b].sub(&xi[a])?;
            for c in b..ts.len() {
                for d in c + 1..ts.len() {
                    let inc2 = xi[d].sub(&xi[c])?;
                    let v = inc1.inner(&inc2)?.norm();
                    if v > worst.0 {
                        worst = (
                            v,
                            format!("[{}, {}] vs [{}, {}]", ts[a], ts[b], ts[c], ts[d]),
                        );
                    }
                }
            }
        }
    }
    let tolerance = 1e-6;
    Ok(ResidualReport {
        max_residual: worst.0,
        worst_case: worst.1,
        tolerance,
        pass: worst.0 <= tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blaschke::BlaschkeProduct;
    use crate::cocycle::Variant;

    fn small_grid() -> GridSpec {
        GridSpec::new(-4.0, 12.0, 512).unwrap()
    }

    fn cocycle(zs: &[[f64; 2]], freqs: Option<Vec<f64>>) -> MarkovianCocycle {
        let b = BlaschkeProduct::from_pairs(zs).unwrap();
        let model = match freqs {
            Some(f) => ModelSpace::with_frequencies(b, small_grid(), f).unwrap(),
            None => ModelSpace::new(b, small_grid()).unwrap(),
        };
        MarkovianCocycle::new(model, Variant::ShiftConjugated).unwrap()
    }

    #[test]
    fn pure_shift_index_is_one() {
        let g = small_grid();
        let v = IsometrySemigroup::pure_shift(g);
        let r = index_estimate(&v, g.dx()).unwrap();
        assert_eq!((r.defect_rank, r.index), (1, 1));
        let r = index_estimate(&v, 16.0 * g.dx()).unwrap();
        assert_eq!((r.defect_rank, r.index), (16, 1));
    }

    #[test]
    fn perturbed_index_is_one() {
        let w = cocycle(&[[-1.5, 0.0]], None);
        let v = IsometrySemigroup::perturbed(&w);
        let r = index_estimate(&v, 0.25).unwrap();
        assert_eq!(r.index, 1, "{r:?}");
    }

    #[test]
    fn split_recovers_model_space() {
        let w = cocycle(&[[-1.5, 0.0], [-2.5, 0.0]], Some(vec![0.0, 1.0]));
        let v = IsometrySemigroup::perturbed(&w);
        let split = wold_split(&v, w.model(), 1.0, 12).unwrap();
        assert_eq!(split.dim(), 2);
        assert!(split.converged);
        assert!(split.max_angle() <= 1e-4, "{:?}", split.angles);
        assert!(!split.shift_part_witness().is_empty());
        assert!(split.orthogonality_defect() <= 1e-6);
        let probes: Vec<Vec<C64>> = standard_corpus(small_grid())
            .iter()
            .map(|e| e.function.past().to_vec())
            .collect();
        assert!(split.reduction_defect(&v, 1.0, &probes).unwrap() <= 1e-6);
        let spec = unitary_part_spectrum(&split, &v, std::f64::consts::PI).unwrap();
        let target = [C64::new(-1.0, 0.0), C64::new(1.0, 0.0)];
        assert!(
            multiset_distance(&spec.eigenvalues, &target) <= 1e-4,
            "{spec:?}"
        );
        let spec = unitary_part_spectrum(&split, &v, 1.0).unwrap();
        let target = [C64::new(1.0, 0.0), C64::from_polar(1.0, 1.0)];
        assert!(multiset_distance(&spec.eigenvalues, &target) <= 1e-6);
        for z in &spec.eigenvalues {
            assert!((z.norm() - 1.0).abs() <= 1e-6);
        }
    }

    #[test]
    fn pure_shift_has_no_unitary_part() {
        let w = cocycle(&[], None);
        let v = IsometrySemigroup::perturbed(&w);
        let split = wold_split(&v, w.model(), 1.0, 12).unwrap();
        assert_eq!(split.dim(), 0);
        let spec = unitary_part_spectrum(&split, &v, 1.0).unwrap();
        assert!(spec.eigenvalues.is_empty());
    }

    #[test]
    fn increments_stay_uncorrelated() {
        let w = cocycle(&[[-1.0, 0.0]], None);
        let r = noncorrelated_increments_check(&w, &[-2.0, -1.0, 0.0, 1.0]).unwrap();
        assert!(r.pass, "{r:?}");
        let e = cocycle(&[], None);
        let r = noncorrelated_increments_check(&e, &[-2.0, -1.0, 0.0, 1.0]).unwrap();
        assert_eq!(r.max_residual, 0.0);
    }
}
