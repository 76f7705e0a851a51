//! Hilbert–Schmidt diagnostics for `W_{−t} − I` on the half-line.
//!
//! `W_{−t} − I` vanishes on future-supported functions, so its HS norm is
//! the sum over an orthonormal basis of `L²[0, ∞)`. Splitting at `t` gives a
//! head part `(M_Θ − I) P_{[0,t)}` and a finite-rank tail part; the head
//! part is also probed through a Riesz basis of exponentials on `[0, t]`.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::blaschke::BlaschkeProduct;
use crate::cocycle::{MarkovianCocycle, Variant};
use crate::error::{Error, Result};
use crate::grid::{inner_slices, GridSpec, C64};
use crate::numerics::{exp_integral, exp_integral_tail, fit_slope, hermitian_eigenvalues, simpson};
use crate::parallel::{compensated_sum, map_indexed};

/// Lower bound on the Riesz basis frame health.
pub const FRAME_LIMIT: f64 = 0.1;
/// Range of `|k|` used for the tail slope fit.
pub const SLOPE_RANGE: (usize, usize) = (8, 32);
const TRANSFORM_HALF_WIDTH: f64 = 1000.0;
const TRANSFORM_STEP: f64 = 2e-3;

/// Window length of the default block basis.
pub const DEFAULT_WINDOW: f64 = 8.0;

/// Orthonormal basis used to truncate the HS sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum HsBasis {
    /// Normalized indicators of the first `basis_dim` cells, i.e. the
    /// restriction to `[0, basis_dim·dx)`.
    Cells,
    /// Normalized indicators of `basis_dim` near-equal blocks tiling
    /// `[0, window)`.
    Blocks { window: f64 },
}

impl Default for HsBasis {
    fn default() -> Self {
        HsBasis::Blocks {
            window: DEFAULT_WINDOW,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct HsReport {
    pub t: f64,
    pub basis_dim: usize,
    pub partial_sums_r1: Vec<f64>,
    pub partial_sums_r2: Vec<f64>,
    pub tail_slope: Option<f64>,
    pub total: f64,
    pub sum_abs_re: f64,
    /// Largest relative gap between closed-form and transform-side second-series terms.
    pub r2_cross_check: Option<f64>,
    /// Smallest singular value of the normalized Riesz synthesis.
    pub frame_sigma_min: Option<f64>,
}

impl HsReport {
    pub fn r1(&self) -> f64 {
        self.partial_sums_r1.last().copied().unwrap_or(0.0)
    }

    pub fn r2(&self) -> f64 {
        self.partial_sums_r2.last().copied().unwrap_or(0.0)
    }
}

fn partial_sums(terms: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    let mut comp = 0.0;
    terms
        .iter()
        .map(|&x| {
            // Neumaier step, kept inline to emit every prefix
            let s = acc + x;
            if acc.abs() >= x.abs() {
                comp += (acc - s) + x;
            } else {
                comp += (x - s) + acc;
            }
            acc = s;
            acc + comp
        })
        .collect()
}

fn check_time(w: &MarkovianCocycle, t: f64) -> Result<usize> {
    let k = w.grid().steps(t)?;
    if k <= 0 {
        return Err(Error::Precondition(format!("t must be positive, got {t}")));
    }
    Ok(k as usize)
}

/// Cell ranges `[start, end)` of the truncation basis.
fn basis_ranges(grid: &GridSpec, basis_dim: usize, basis: HsBasis) -> Result<Vec<(usize, usize)>> {
    let m = grid.half_len();
    let cells = match basis {
        HsBasis::Cells => basis_dim,
        HsBasis::Blocks { window } => {
            if !(window > 0.0) {
                return Err(Error::Precondition(format!(
                    "window must be positive, got {window}"
                )));
            }
            (grid.steps(window)?.max(0) as usize).min(m)
        }
    };
    if basis_dim == 0 || basis_dim > cells || cells > m {
        return Err(Error::Precondition(format!(
            "basis_dim {basis_dim} needs 1..={} cells on a half-line of {m}",
            cells.min(m)
        )));
    }
    Ok((0..basis_dim)
        .map(|i| (i * cells / basis_dim, (i + 1) * cells / basis_dim))
        .collect())
}

/// `Σ_i ‖(W_{−t} − I) η_i‖²` over the first `basis_dim` elements of `basis`.
///
/// The two partial sums split each basis vector at `t`; for the cell
/// basis the split is exact and `total = r1 + r2`.
pub fn hs_defect_norm(
    w: &MarkovianCocycle,
    t: f64,
    basis_dim: usize,
    basis: HsBasis,
) -> Result<HsReport> {
    let k = check_time(w, t)?;
    let grid = *w.grid();
    let m = grid.half_len();
    let ranges = basis_ranges(&grid, basis_dim, basis)?;
    let h = grid.dx();
    let block = w.past_block(k)?;
    let defect = |v: &[C64]| -> f64 {
        if v.iter().all(|x| x.norm_sqr() == 0.0) {
            return 0.0;
        }
        let img = block.apply(v);
        let d: Vec<C64> = img.iter().zip(v).map(|(a, b)| a - b).collect();
        inner_slices(&d, &d, h).re
    };
    let terms = map_indexed(w.execution(), ranges.len(), |i| {
        let (a, b) = ranges[i];
        let amp = C64::new(1.0 / ((b - a) as f64 * h).sqrt(), 0.0);
        let mut eta = vec![C64::new(0.0, 0.0); m];
        eta[a..b].fill(amp);
        let mut tail = eta.clone();
        tail[..k.min(m)].fill(C64::new(0.0, 0.0));
        let mut head = eta.clone();
        head[k.min(m)..].fill(C64::new(0.0, 0.0));
        (defect(&eta), defect(&tail), defect(&head))
    });
    let total = compensated_sum(terms.iter().map(|t| t.0));
    let r1: Vec<f64> = terms.iter().map(|t| t.1).collect();
    let r2: Vec<f64> = terms.iter().map(|t| t.2).collect();
    Ok(HsReport {
        t,
        basis_dim,
        partial_sums_r1: partial_sums(&r1),
        partial_sums_r2: partial_sums(&r2),
        tail_slope: None,
        total,
        sum_abs_re: w.model().blaschke().sum_abs_re(),
        r2_cross_check: None,
        frame_sigma_min: None,
    })
}

/// Orthonormal columns spanning `{ρ_j^{n − offset}}` on `offset ≤ n < m`,
/// with the phase fixed by a positive diagonal of the triangular factor.
fn exponential_frame(rho: &[C64], m: usize, offset: usize) -> DMatrix<C64> {
    let e = DMatrix::from_fn(m, rho.len(), |n, j| {
        if n < offset {
            C64::new(0.0, 0.0)
        } else {
            rho[j].powi((n - offset) as i32)
        }
    });
    let qr = e.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..rho.len() {
        let d = r[(j, j)];
        if d.norm() > 0.0 {
            let phase = d / d.norm();
            for x in q.column_mut(j).iter_mut() {
                *x *= phase;
            }
        }
    }
    q
}

/// `‖(W_{−t} − I) B‖_F²` with `W_{−t}` assembled densely from the
/// multiplier's impulse response and QR-orthonormalized exponentials, and
/// `B` the truncation basis in Euclidean coordinates.
///
/// Shares no code path with [`hs_defect_norm`] beyond the multiplier
/// coefficients and the basis layout.
pub fn dense_defect_oracle(
    w: &MarkovianCocycle,
    t: f64,
    basis_dim: usize,
    basis: HsBasis,
) -> Result<f64> {
    if w.variant() != Variant::ShiftConjugated {
        return Err(Error::Unsupported(format!(
            "dense oracle covers the shift_conjugated form, not {}",
            w.variant()
        )));
    }
    let k = check_time(w, t)?;
    let grid = *w.grid();
    let m = grid.half_len();
    let ranges = basis_ranges(&grid, basis_dim, basis)?;
    let span = ranges.last().map_or(0, |r| r.1);
    let model = w.model();
    let rho = model.multiplier().rho();
    let imp = model.multiplier().impulse_response(m);
    // W_{−t} − I on the first `span` columns
    let mut wm = DMatrix::<C64>::zeros(m, span);
    for j in 0..span.min(k) {
        for i in j..m {
            wm[(i, j)] = imp[i - j];
        }
    }
    if span > k && k < m {
        let q = exponential_frame(rho, m, 0);
        let qt = exponential_frame(rho, m, k);
        let rot = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            rho.len(),
            model
                .frequencies()
                .iter()
                .map(|f| C64::from_polar(1.0, f * t)),
        ));
        let cols = span - k;
        let qt_rows = qt.rows(k, cols).adjoint();
        let corr = (&q * rot - &qt) * qt_rows;
        for c in 0..cols {
            let j = k + c;
            for i in 0..m {
                wm[(i, j)] = corr[(i, c)];
            }
            wm[(j, j)] += C64::new(1.0, 0.0);
        }
    }
    for j in 0..span {
        wm[(j, j)] -= C64::new(1.0, 0.0);
    }
    let b = DMatrix::from_fn(span, ranges.len(), |i, j| {
        let (a, e) = ranges[j];
        if (a..e).contains(&i) {
            C64::new(1.0 / ((e - a) as f64).sqrt(), 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    Ok(crate::numerics::frobenius_sq(&(wm * b)))
}

/// Exponentials `e^{μ_k x}` on `[0, t]` with `μ_k = −1/(2|k|) + 2πik/t`.
#[derive(Debug, Clone)]
pub struct RieszExponentialBasis {
    pub t: f64,
    pub k_range: usize,
    /// Index `k` paired with `μ_k`, ordered `0, 1, −1, 2, −2, …`.
    pub mu: Vec<(i64, C64)>,
}

impl RieszExponentialBasis {
    /// `include_zero = false` drops `k = 0`, where the family's real part is
    /// undefined; otherwise `μ_0 = −1/2`.
    pub fn new(t: f64, k_range: usize, include_zero: bool) -> Result<Self> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::Precondition(format!(
                "interval length must be positive, got {t}"
            )));
        }
        let mut mu = Vec::with_capacity(2 * k_range + 1);
        if include_zero {
            mu.push((0, C64::new(-0.5, 0.0)));
        }
        for k in 1..=k_range as i64 {
            for s in [k, -k] {
                let im = 2.0 * std::f64::consts::PI * s as f64 / t;
                mu.push((s, C64::new(-1.0 / (2.0 * k as f64), im)));
            }
        }
        Ok(Self { t, k_range, mu })
    }

    pub fn gram(&self) -> DMatrix<C64> {
        let n = self.mu.len();
        DMatrix::from_fn(n, n, |i, j| {
            exp_integral(self.mu[j].1 + self.mu[i].1.conj(), 0.0, self.t)
        })
    }

    /// `√λ_min` of the Gram matrix with unit diagonal.
    pub fn frame_sigma_min(&self) -> f64 {
        let g = self.gram();
        let d: Vec<f64> = (0..g.nrows()).map(|i| g[(i, i)].re.sqrt()).collect();
        let normalized = DMatrix::from_fn(g.nrows(), g.ncols(), |i, j| g[(i, j)] / (d[i] * d[j]));
        hermitian_eigenvalues(normalized)
            .first()
            .map(|e| e.max(0.0).sqrt())
            .unwrap_or(1.0)
    }
}

/// `‖(M_Θ − I) e^{μx} χ_{[0,t]}‖²` in closed form from the kernel
/// `Σ_j c_j e^{λ_j x}`.
pub fn r2_term_closed_form(b: &BlaschkeProduct, mu: C64, t: f64) -> Result<f64> {
    if b.is_empty() {
        return Ok(0.0);
    }
    let c = b.residues()?;
    let lam = b.zeros();
    // on [0, t]: a·e^{μx} + Σ_j b_j e^{λ_j x}
    let mut head: Vec<(C64, C64)> = Vec::with_capacity(lam.len() + 1);
    let mut a = C64::new(0.0, 0.0);
    for (cj, lj) in c.iter().zip(lam) {
        let d = mu - lj;
        if d.norm() < 1e-12 {
            return Err(Error::PoleProximity {
                lambda: format!("{mu}"),
                distance: d.norm(),
            });
        }
        a += cj / d;
        head.push((-cj / d, *lj));
    }
    head.push((a, mu));
    // beyond t: Σ_j A_j e^{λ_j x}
    let tail: Vec<(C64, C64)> = c
        .iter()
        .zip(lam)
        .map(|(cj, lj)| {
            let d = mu - lj;
            (cj * crate::numerics::expm1_c(d * t) / d, *lj)
        })
        .collect();
    let mut s = 0.0;
    for (cp, kp) in &head {
        for (cq, kq) in &head {
            s += (cp * cq.conj() * exp_integral(kp + kq.conj(), 0.0, t)).re;
        }
    }
    for (cp, kp) in &tail {
        for (cq, kq) in &tail {
            s += (cp * cq.conj() * exp_integral_tail(kp + kq.conj(), t)).re;
        }
    }
    Ok(s.max(0.0))
}

/// The same term by Parseval: `(1/2π) ∫ |Θ(iω) − 1|² |f̂(iω)|² dω`.
///
/// Simpson on `|ω| ≤ A`; beyond `A` the oscillating part of `|f̂|²` is
/// dropped (it is `O(A^{−4})`) and the rest is integrated after `ω = A/u`.
pub fn r2_term_transform(b: &BlaschkeProduct, mu: C64, t: f64) -> f64 {
    if b.is_empty() {
        return 0.0;
    }
    let a = TRANSFORM_HALF_WIDTH + mu.im.abs();
    let panels = (2.0 * a / TRANSFORM_STEP).round() as usize;
    let integrand = |w: f64| {
        let s = C64::new(0.0, w);
        let d = mu - s;
        let fhat = if d.norm() < 1e-8 {
            C64::new(t, 0.0) * (1.0 + d * t / 2.0)
        } else {
            crate::numerics::expm1_c(d * t) / d
        };
        C64::new((b.eval_boundary(w) - 1.0).norm_sqr() * fhat.norm_sqr(), 0.0)
    };
    let body = simpson(integrand, -a, a, panels).re;
    let mean = 1.0 + (2.0 * mu.re * t).exp();
    let tail_at = |sign: f64| {
        move |u: f64| {
            if u == 0.0 {
                return C64::new(0.0, 0.0);
            }
            let w = sign * a / u;
            let denom = (w - mu.im).powi(2) + mu.re * mu.re;
            let g = (b.eval_boundary(w) - 1.0).norm_sqr() * mean / denom;
            C64::new(g * a / (u * u), 0.0)
        }
    };
    let tail = simpson(tail_at(1.0), 0.0, 1.0, 4096).re + simpson(tail_at(-1.0), 0.0, 1.0, 4096).re;
    (body + tail) / (2.0 * std::f64::consts::PI)
}

/// The two series: the first over the model basis, the second over the Riesz
/// exponentials with `|k| ≤ k_range`, plus the log-log slope of the second
/// terms (paired `±k`) for `|k|` in [`SLOPE_RANGE`].
pub fn series_r1_r2(
    w: &MarkovianCocycle,
    t: f64,
    k_range: usize,
    include_zero: bool,
) -> Result<HsReport> {
    let k = check_time(w, t)?;
    let model = w.model();
    let m = w.grid().half_len();
    let h = w.grid().dx();
    let riesz = RieszExponentialBasis::new(t, k_range, include_zero)?;
    let sigma_min = riesz.frame_sigma_min();
    if sigma_min < FRAME_LIMIT {
        return Err(Error::IllConditionedBasis { sigma_min });
    }
    // first series: the tail part is Σ_k (e^{iω_k t} g_k − T_t g'_k) ⟨·, T_t g'_k⟩
    let translated = model.translated_basis(k.min(m))?;
    let r1_terms: Vec<f64> = model
        .basis_half()
        .iter()
        .zip(&translated)
        .zip(model.frequencies())
        .map(|((g, gt), f)| {
            let phase = C64::from_polar(1.0, f * t);
            let d: Vec<C64> = g.iter().zip(gt).map(|(a, b)| phase * a - b).collect();
            inner_slices(&d, &d, h).re
        })
        .collect();
    let b = model.blaschke();
    let r2_pairs = map_indexed(w.execution(), riesz.mu.len(), |i| {
        let mu = riesz.mu[i].1;
        let closed = r2_term_closed_form(b, mu, t)?;
        let transform = r2_term_transform(b, mu, t);
        Ok((closed, transform))
    });
    let r2_pairs: Vec<(f64, f64)> = r2_pairs.into_iter().collect::<Result<_>>()?;
    let r2_terms: Vec<f64> = r2_pairs.iter().map(|p| p.0).collect();
    let cross = r2_pairs
        .iter()
        .map(|(c, f)| {
            if *c == 0.0 {
                f.abs()
            } else {
                (c - f).abs() / c
            }
        })
        .fold(0.0, f64::max);
    let tail_slope = slope_over_range(&riesz, &r2_terms);
    let partial_sums_r1 = partial_sums(&r1_terms);
    let partial_sums_r2 = partial_sums(&r2_terms);
    let total = partial_sums_r1.last().copied().unwrap_or(0.0)
        + partial_sums_r2.last().copied().unwrap_or(0.0);
    Ok(HsReport {
        t,
        basis_dim: riesz.mu.len(),
        partial_sums_r1,
        partial_sums_r2,
        tail_slope,
        total,
        sum_abs_re: b.sum_abs_re(),
        r2_cross_check: Some(cross),
        frame_sigma_min: Some(sigma_min),
    })
}

fn slope_over_range(riesz: &RieszExponentialBasis, terms: &[f64]) -> Option<f64> {
    let (lo, hi) = SLOPE_RANGE;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for a in lo..=hi.min(riesz.k_range) {
        let v: f64 = riesz
            .mu
            .iter()
            .zip(terms)
            .filter(|((k, _), _)| k.unsigned_abs() as usize == a)
            .map(|(_, x)| x)
            .sum();
        if v > 0.0 {
            xs.push((a as f64).ln());
            ys.push(v.ln());
        }
    }
    (xs.len() >= 2).then(|| fit_slope(&xs, &ys))
}

#[derive(Debug, Clone, Serialize)]
pub struct FeldmanLevel {
    pub dim: usize,
    /// `‖R − W* R W‖_HS` on the leading `dim × dim` block.
    pub hs_norm_delta: f64,
    /// `‖W R − R W‖_HS` on the leading `dim × dim` block.
    pub commutator_hs: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FeldmanReport {
    pub t: f64,
    pub levels: Vec<FeldmanLevel>,
    /// `|1 − a_{i+1}/a_i|` per successive pair, the larger over both norms.
    pub ratio_drifts: Vec<f64>,
    /// Drift of the finest pair; saturation is judged on it.
    pub final_drift: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Leading blocks of `R − W*RW` and `WR − RW` for the cell-basis matrix of
/// `W_{−t}` and a diagonal covariance `R` over all half-line cells.
pub fn feldman_check(
    w: &MarkovianCocycle,
    t: f64,
    dims: &[usize],
    r_diag: &[f64],
) -> Result<FeldmanReport> {
    let k = check_time(w, t)?;
    let m = w.grid().half_len();
    if r_diag.len() != m {
        return Err(Error::Precondition(format!(
            "covariance diagonal has {} entries, the half-line has {m} cells",
            r_diag.len()
        )));
    }
    if let Some(r) = r_diag.iter().find(|r| !(**r > 0.0 && r.is_finite())) {
        return Err(Error::Precondition(format!(
            "covariance entry {r} is not positive"
        )));
    }
    let dmax = dims.iter().copied().max().unwrap_or(0);
    if dmax > m {
        return Err(Error::Precondition(format!("dimension {dmax} exceeds {m}")));
    }
    let block = w.past_block(k)?;
    let cols = map_indexed(w.execution(), dmax, |j| {
        let mut e = vec![C64::new(0.0, 0.0); m];
        e[j] = C64::new(1.0, 0.0);
        block.apply(&e)
    });
    let levels = dims
        .iter()
        .map(|&d| {
            let mut delta = 0.0;
            let mut comm = 0.0;
            for i in 0..d {
                for j in 0..d {
                    let wrw: C64 = (0..m)
                        .map(|l| cols[i][l].conj() * r_diag[l] * cols[j][l])
                        .sum();
                    let rij = if i == j { r_diag[i] } else { 0.0 };
                    delta += (C64::new(rij, 0.0) - wrw).norm_sqr();
                    comm += (cols[j][i] * (r_diag[j] - r_diag[i])).norm_sqr();
                }
            }
            FeldmanLevel {
                dim: d,
                hs_norm_delta: delta.sqrt(),
                commutator_hs: comm.sqrt(),
            }
        })
        .collect::<Vec<_>>();
    let drift = |a: f64, b: f64| {
        if a == 0.0 && b == 0.0 {
            0.0
        } else if a == 0.0 {
            f64::INFINITY
        } else {
            (1.0 - b / a).abs()
        }
    };
    let ratio_drifts: Vec<f64> = levels
        .windows(2)
        .map(|p| {
            drift(p[0].hs_norm_delta, p[1].hs_norm_delta)
                .max(drift(p[0].commutator_hs, p[1].commutator_hs))
        })
        .collect();
    let final_drift = ratio_drifts.last().copied().unwrap_or(0.0);
    let tolerance = 0.1;
    Ok(FeldmanReport {
        t,
        levels,
        ratio_drifts,
        final_drift,
        tolerance,
        pass: final_drift <= tolerance,
    })
}

/// `R_j = 1/(1 + j)` over `len` cells.
pub fn harmonic_covariance(len: usize) -> Vec<f64> {
    (0..len).map(|j| 1.0 / (1.0 + j as f64)).collect()
}
