//! Model Markovian cocycle `W_t` for the shift group on `L²(ℝ)`.
//!
//! For `s ≥ 0`, `W_{−s}` is the identity on functions supported in `x < 0`
//! and acts on the half-line as
//!
//! ```text
//! A_s P_{[s,∞)} + M_Θ P_{[0,s)}
//! ```
//!
//! where the tail operator `A_s` depends on the formula [`Variant`]. For
//! `t > 0`, `W_t = S_t W_{−t}* S_{−t}` with the adjoint assembled from the
//! adjoints of the individual factors.
//!
//! Shift convention: `S_t f(x) = f(x + t)`, so `S_{−t}` moves mass right.
//! The future-fixing condition reads `W_t f = f` for `f` supported in
//! `(−∞, −t]` when `t > 0`, and `W_{−t} f = f` for `f` supported in `x < 0`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::blaschke::{apply_inner_multiplier, Backend};
use crate::corpus::{clear_of_edges, EDGE_MASS_TOL};
use crate::error::{Error, Result};
use crate::grid::{inner_slices, GridFunction, GridSpec, C64};
use crate::model_space::ModelSpace;
use crate::parallel::{map_slice, Execution};

/// Largest tolerated mismatch in `⟨A x, y⟩ = ⟨x, A* y⟩` on the self-check probe.
pub const ADJOINT_TOL: f64 = 1e-8;

#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// `(R_s P⊥ S_s − P_V) P_{[s,∞)} + M_Θ P_{[0,s)}`.
    LiteralMinus,
    /// `(R_s P⊥ S_s + P_V) P_{[s,∞)} + M_Θ P_{[0,s)}`.
    PlusCorrected,
    /// `(R_s P⊥ + P_V) S_s P_{[s,∞)} + M_Θ P_{[0,s)}`.
    ShiftFirst,
    /// `(R_s P⊥ S_s + S_{−s} P_V S_s) P_{[s,∞)} + M_Θ P_{[0,s)}`.
    #[default]
    ShiftConjugated,
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Variant::LiteralMinus,
        Variant::PlusCorrected,
        Variant::ShiftFirst,
        Variant::ShiftConjugated,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::LiteralMinus => "literal_minus",
            Variant::PlusCorrected => "plus_corrected",
            Variant::ShiftFirst => "shift_first",
            Variant::ShiftConjugated => "shift_conjugated",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown variant {s:?}")))
    }
}

#[derive(Debug, Clone)]
pub struct MarkovianCocycle {
    model: ModelSpace,
    variant: Variant,
    execution: Execution,
}

/// `W_{−s}` restricted to the half-line for a fixed step count `k = s/dx`.
pub struct PastBlock<'a> {
    w: &'a MarkovianCocycle,
    k: usize,
    s: f64,
    /// `T_s g'_k`: exponentials orthonormalised on `[0, L − s)`, moved right by `s`.
    translated: Vec<Vec<C64>>,
}

fn left_shift(v: &[C64], k: usize) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); v.len()];
    if k < v.len() {
        out[..v.len() - k].copy_from_slice(&v[k..]);
    }
    out
}

fn right_shift(v: &[C64], k: usize) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); v.len()];
    if k < v.len() {
        out[k..].copy_from_slice(&v[..v.len() - k]);
    }
    out
}

fn add_into(acc: &mut [C64], v: &[C64], c: C64) {
    for (a, b) in acc.iter_mut().zip(v) {
        *a += c * b;
    }
}

impl PastBlock<'_> {
    pub fn steps(&self) -> usize {
        self.k
    }

    fn m(&self) -> usize {
        self.w.model.grid().half_len()
    }

    fn h(&self) -> f64 {
        self.w.model.grid().dx()
    }

    /// `M_Θ P_{[0,s)} v`.
    fn head_image(&self, v: &[C64]) -> Vec<C64> {
        let k = self.k.min(v.len());
        let mut head = vec![C64::new(0.0, 0.0); v.len()];
        head[..k].copy_from_slice(&v[..k]);
        if k == 0 {
            return head;
        }
        self.w.model.multiplier().apply(&head)
    }

    /// `R_s P⊥ u`.
    fn rotate_perp(&self, u: &[C64], sign: f64) -> Vec<C64> {
        let m = &self.w.model;
        m.synthesize_half(&m.rotate_coefficients(&m.coefficients_half(u), sign * self.s))
    }

    fn project_v(&self, u: &[C64]) -> Vec<C64> {
        let perp = self.w.model.project_perp_half(u);
        u.iter().zip(&perp).map(|(a, b)| a - b).collect()
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        let k = self.k.min(self.m());
        let mut tail = v.to_vec();
        tail[..k].fill(C64::new(0.0, 0.0));
        let mut out = self.head_image(v);
        match self.w.variant {
            Variant::LiteralMinus | Variant::PlusCorrected => {
                let a = self.rotate_perp(&left_shift(&tail, k), 1.0);
                let b = self.project_v(&tail);
                let sign = if self.w.variant == Variant::LiteralMinus {
                    -1.0
                } else {
                    1.0
                };
                add_into(&mut out, &a, C64::new(1.0, 0.0));
                add_into(&mut out, &b, C64::new(sign, 0.0));
            }
            Variant::ShiftFirst => {
                let u = left_shift(&tail, k);
                add_into(&mut out, &self.rotate_perp(&u, 1.0), C64::new(1.0, 0.0));
                add_into(&mut out, &self.project_v(&u), C64::new(1.0, 0.0));
            }
            Variant::ShiftConjugated => {
                let h = self.h();
                let d: Vec<C64> = self
                    .translated
                    .iter()
                    .map(|g| inner_slices(&tail, g, h))
                    .collect();
                let m = &self.w.model;
                let rotated = m.synthesize_half(&m.rotate_coefficients(&d, self.s));
                add_into(&mut out, &rotated, C64::new(1.0, 0.0));
                add_into(&mut out, &tail, C64::new(1.0, 0.0));
                for (c, g) in d.iter().zip(&self.translated) {
                    add_into(&mut out, g, -c);
                }
            }
        }
        out
    }

    /// Conjugate transpose of [`PastBlock::apply`] on the half-grid.
    pub fn apply_adjoint(&self, y: &[C64]) -> Vec<C64> {
        let k = self.k.min(self.m());
        let mut out = if k == 0 {
            vec![C64::new(0.0, 0.0); y.len()]
        } else {
            let mut mt = self.w.model.multiplier().apply_adjoint(y);
            mt[k..].fill(C64::new(0.0, 0.0));
            mt
        };
        let mut tail_part = match self.w.variant {
            Variant::LiteralMinus | Variant::PlusCorrected => {
                let mut a = right_shift(&self.rotate_perp(y, -1.0), k);
                let b = self.project_v(y);
                let sign = if self.w.variant == Variant::LiteralMinus {
                    -1.0
                } else {
                    1.0
                };
                add_into(&mut a, &b, C64::new(sign, 0.0));
                a
            }
            Variant::ShiftFirst => {
                let mut z = self.rotate_perp(y, -1.0);
                add_into(&mut z, &self.project_v(y), C64::new(1.0, 0.0));
                right_shift(&z, k)
            }
            Variant::ShiftConjugated => {
                let m = &self.w.model;
                let h = self.h();
                let coeffs = m.rotate_coefficients(&m.coefficients_half(y), -self.s);
                let mut z = y.to_vec();
                for (c, g) in coeffs.iter().zip(&self.translated) {
                    let d = inner_slices(y, g, h);
                    add_into(&mut z, g, c - d);
                }
                z
            }
        };
        tail_part[..k].fill(C64::new(0.0, 0.0));
        add_into(&mut out, &tail_part, C64::new(1.0, 0.0));
        out
    }
}

impl MarkovianCocycle {
    pub fn new(model: ModelSpace, variant: Variant) -> Result<Self> {
        let w = Self {
            model,
            variant,
            execution: Execution::default(),
        };
        w.check_adjoint()?;
        Ok(w)
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }

    pub fn execution(&self) -> Execution {
        self.execution
    }

    pub fn model(&self) -> &ModelSpace {
        &self.model
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn grid(&self) -> &GridSpec {
        self.model.grid()
    }

    /// `W_{−s}` on the half-line for `s = k·dx`.
    pub fn past_block(&self, k: usize) -> Result<PastBlock<'_>> {
        let translated = if self.variant == Variant::ShiftConjugated {
            self.model.translated_basis(k)?
        } else {
            Vec::new()
        };
        Ok(PastBlock {
            w: self,
            k,
            s: k as f64 * self.grid().dx(),
            translated,
        })
    }

    fn check_adjoint(&self) -> Result<()> {
        let m = self.grid().half_len();
        let k = (m / 16).max(1);
        let block = self.past_block(k)?;
        let x: Vec<C64> = (0..m)
            .map(|i| C64::new((0.37 * i as f64).sin(), (0.11 * i as f64).cos()))
            .collect();
        let y: Vec<C64> = (0..m)
            .map(|i| C64::new((0.23 * i as f64).cos(), (0.53 * i as f64).sin()))
            .collect();
        let h = self.grid().dx();
        let lhs = inner_slices(&block.apply(&x), &y, h);
        let rhs = inner_slices(&x, &block.apply_adjoint(&y), h);
        let scale = inner_slices(&x, &x, h).re.sqrt() * inner_slices(&y, &y, h).re.sqrt();
        let err = (lhs - rhs).norm() / scale;
        if err > ADJOINT_TOL {
            return Err(Error::NumericalFailure(format!(
                "adjoint pairing mismatch {err:.3e} on the self-check probe"
            )));
        }
        Ok(())
    }

    fn check_grid(&self, f: &GridFunction) -> Result<()> {
        if f.grid() != self.grid() {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    fn with_past(&self, f: &GridFunction, op: impl FnOnce(&[C64]) -> Vec<C64>) -> GridFunction {
        let grid = *self.grid();
        let mut values = f.values().to_vec();
        let out = op(f.past());
        values[grid.origin()..].copy_from_slice(&out);
        GridFunction::from_vec_unchecked(grid, values)
    }

    /// `W_t f` for node-aligned `t`.
    pub fn apply(&self, f: &GridFunction, t: f64) -> Result<GridFunction> {
        self.check_grid(f)?;
        let k = self.grid().steps(t)?;
        if k <= 0 {
            let block = self.past_block((-k) as usize)?;
            Ok(self.with_past(f, |v| block.apply(v)))
        } else {
            let block = self.past_block(k as usize)?;
            let moved = f.shift(-t)?.function;
            let mapped = self.with_past(&moved, |v| block.apply_adjoint(v));
            Ok(mapped.shift(t)?.function)
        }
    }

    /// `W_t* f`.
    pub fn apply_adjoint(&self, f: &GridFunction, t: f64) -> Result<GridFunction> {
        self.check_grid(f)?;
        let k = self.grid().steps(t)?;
        if k <= 0 {
            let block = self.past_block((-k) as usize)?;
            Ok(self.with_past(f, |v| block.apply_adjoint(v)))
        } else {
            let block = self.past_block(k as usize)?;
            let moved = f.shift(-t)?.function;
            let mapped = self.with_past(&moved, |v| block.apply(v));
            Ok(mapped.shift(t)?.function)
        }
    }

    /// `W_{−∞} f = W_{−T} f` with `T` the right end of the past support of `f`.
    pub fn limit_apply(&self, f: &GridFunction) -> Result<GridFunction> {
        self.check_grid(f)?;
        let k = f
            .past()
            .iter()
            .rposition(|v| v.norm() > 0.0)
            .map_or(0, |i| i + 1);
        let block = self.past_block(k)?;
        Ok(self.with_past(f, |v| block.apply(v)))
    }
}

/// Maximum of a residual over a sweep, judged against a tolerance.
#[derive(Debug, Clone, Serialize)]
pub struct ResidualReport {
    pub max_residual: f64,
    pub worst_case: String,
    pub tolerance: f64,
    pub pass: bool,
}

impl ResidualReport {
    /// Same residual judged against a different tolerance.
    pub fn judged(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self.pass = self.max_residual <= tolerance;
        self
    }

    fn from_cases(cases: Vec<(String, f64)>, tolerance: f64) -> Self {
        let (worst_case, max_residual) = cases.into_iter().fold(
            (String::new(), 0.0f64),
            |acc, c| if c.1 > acc.1 { c } else { acc },
        );
        Self {
            max_residual,
            worst_case,
            tolerance,
            pass: max_residual <= tolerance,
        }
    }
}

pub const COCYCLE_TOL: f64 = 1e-6;
pub const MARKOV_TOL: f64 = 1e-12;
pub const UNITARITY_TOL: f64 = 1e-6;

fn relative(diff: &GridFunction, f: &GridFunction) -> f64 {
    diff.norm() / f.norm()
}

/// `max ‖W_{t+s} f − W_t S_t W_s S_{−t} f‖ / ‖f‖` over the corpus entries
/// with no mass within `|s| + |t|` of a grid end.
pub fn verify_cocycle_identity(
    w: &MarkovianCocycle,
    s: f64,
    t: f64,
    corpus: &[GridFunction],
) -> Result<ResidualReport> {
    let margin = s.abs() + t.abs();
    let usable: Vec<&GridFunction> = corpus
        .iter()
        .filter(|f| clear_of_edges(f, margin, EDGE_MASS_TOL))
        .collect();
    let cases = map_slice(w.execution, &usable, |f| -> Result<f64> {
        let lhs = w.apply(f, t + s)?;
        let inner = w.apply(&f.shift(-t)?.function, s)?;
        let rhs = w.apply(&inner.shift(t)?.function, t)?;
        Ok(relative(&lhs.sub(&rhs)?, f))
    });
    let cases = cases
        .into_iter()
        .enumerate()
        .map(|(i, r)| r.map(|v| (format!("s={s}, t={t}, corpus[{i}]"), v)))
        .collect::<Result<Vec<_>>>()?;
    Ok(ResidualReport::from_cases(cases, COCYCLE_TOL))
}

/// Future-fixing residuals at a node-aligned `t > 0`.
#[derive(Debug, Clone, Serialize)]
pub struct MarkovReport {
    /// `W_t f = f` for `f` supported in `(−∞, −t]`.
    pub forward: ResidualReport,
    /// `W_{−t} f = f` for `f` supported in `x < 0`.
    pub backward: ResidualReport,
}

impl MarkovReport {
    pub fn pass(&self) -> bool {
        self.forward.pass && self.backward.pass
    }
}

pub fn verify_markov(
    w: &MarkovianCocycle,
    t: f64,
    corpus: &[GridFunction],
) -> Result<MarkovReport> {
    if !(t > 0.0) {
        return Err(Error::Precondition(format!("t must be positive, got {t}")));
    }
    let mut fwd = Vec::new();
    let mut bwd = Vec::new();
    for (i, f) in corpus.iter().enumerate() {
        let early = f.project_interval(f64::NEG_INFINITY, -t)?;
        if early.norm() > 0.0 {
            fwd.push((
                format!("corpus[{i}]"),
                relative(&w.apply(&early, t)?.sub(&early)?, &early),
            ));
        }
        let future = f.project_interval(f64::NEG_INFINITY, 0.0)?;
        if future.norm() > 0.0 {
            bwd.push((
                format!("corpus[{i}]"),
                relative(&w.apply(&future, -t)?.sub(&future)?, &future),
            ));
        }
    }
    Ok(MarkovReport {
        forward: ResidualReport::from_cases(fwd, MARKOV_TOL),
        backward: ResidualReport::from_cases(bwd, MARKOV_TOL),
    })
}

/// `max |‖W_t f‖/‖f‖ − 1|` over the corpus.
pub fn verify_unitarity(
    w: &MarkovianCocycle,
    t: f64,
    corpus: &[GridFunction],
) -> Result<ResidualReport> {
    let cases = corpus
        .iter()
        .enumerate()
        .map(|(i, f)| {
            Ok((
                format!("t={t}, corpus[{i}]"),
                (w.apply(f, t)?.norm() / f.norm() - 1.0).abs(),
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ResidualReport::from_cases(cases, UNITARITY_TOL))
}

#[derive(Debug, Clone, Serialize)]
pub struct LimitReport {
    pub times: Vec<f64>,
    /// `‖W_{−t} f − M_Θ f‖` per scheduled `t`.
    pub distances: Vec<f64>,
}

pub fn cocycle_limit(
    w: &MarkovianCocycle,
    f: &GridFunction,
    schedule: &[f64],
) -> Result<LimitReport> {
    let image = apply_inner_multiplier(w.model().blaschke(), f, Backend::CausalConvolution)?;
    let distances = schedule
        .iter()
        .map(|&t| w.apply(f, -t)?.distance(&image))
        .collect::<Result<Vec<_>>>()?;
    Ok(LimitReport {
        times: schedule.to_vec(),
        distances,
    })
}

/// `ξ_t = χ_{[−t,0]}` for `t ≥ 0` and `−χ_{[0,|t|]}` for `t < 0`.
pub fn spiral(grid: GridSpec, t: f64) -> Result<GridFunction> {
    if t == 0.0 {
        return Ok(GridFunction::zeros(grid));
    }
    if t > 0.0 {
        GridFunction::indicator(grid, -t, 0.0)
    } else {
        Ok(GridFunction::indicator(grid, 0.0, -t)?.scale(C64::new(-1.0, 0.0)))
    }
}

/// `W_t ξ_t` for `t ≤ 0`, `ξ_t` for `t > 0`.
pub fn perturbed_spiral(w: &MarkovianCocycle, t: f64) -> Result<GridFunction> {
    let xi = spiral(*w.grid(), t)?;
    if t <= 0.0 {
        w.apply(&xi, t)
    } else {
        Ok(xi)
    }
}

/// `max ‖ξ'_{t+s} − ξ'_t − W_t S_t ξ'_s‖` over all pairs from `times`.
pub fn perturb_curve(w: &MarkovianCocycle, times: &[f64]) -> Result<ResidualReport> {
    let mut cases = Vec::new();
    for &t in times {
        for &s in times {
            let lhs = perturbed_spiral(w, t + s)?;
            let moved = perturbed_spiral(w, s)?.shift(t)?.function;
            let rhs = perturbed_spiral(w, t)?.add(&w.apply(&moved, t)?)?;
            cases.push((format!("t={t}, s={s}"), lhs.distance(&rhs)?));
        }
    }
    Ok(ResidualReport::from_cases(cases, COCYCLE_TOL))
}

#[derive(Debug, Clone, Serialize)]
pub struct IsometryEquivalenceReport {
    /// `max ‖ξ'_t − W_{−∞} ξ_t‖`.
    pub spiral: ResidualReport,
    /// `max ‖W_{−∞} f − f‖/‖f‖` over future-supported corpus parts.
    pub future: ResidualReport,
    pub fixes_future: bool,
}

pub fn markov_isometry_check(
    w: &MarkovianCocycle,
    times: &[f64],
    corpus: &[GridFunction],
) -> Result<IsometryEquivalenceReport> {
    let spiral_cases = times
        .iter()
        .map(|&t| {
            let lhs = perturbed_spiral(w, t)?;
            let rhs = w.limit_apply(&spiral(*w.grid(), t)?)?;
            Ok((format!("t={t}"), lhs.distance(&rhs)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut future_cases = Vec::new();
    for (i, f) in corpus.iter().enumerate() {
        let fut = f.project_interval(f64::NEG_INFINITY, 0.0)?;
        if fut.norm() > 0.0 {
            future_cases.push((
                format!("corpus[{i}]"),
                relative(&w.limit_apply(&fut)?.sub(&fut)?, &fut),
            ));
        }
    }
    let future = ResidualReport::from_cases(future_cases, MARKOV_TOL);
    Ok(IsometryEquivalenceReport {
        spiral: ResidualReport::from_cases(spiral_cases, COCYCLE_TOL),
        fixes_future: future.pass,
        future,
    })
}

/// Outcome of running every variant through the same battery.
#[derive(Debug, Clone, Serialize)]
pub struct VariantScore {
    pub variant: Variant,
    pub cocycle: f64,
    pub unitarity: f64,
    pub markov: f64,
    pub limit: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Adjudication {
    pub scores: Vec<VariantScore>,
    /// The unique passing variant, if exactly one passes.
    pub selected: Option<Variant>,
}

/// Runs each variant over the zero sets and the `(s, t)` grid and keeps the
/// variants that satisfy the cocycle law, unitarity, future fixing and the
/// limit `W_{−∞} = M_Θ` on `χ_{[0,1]}`.
pub fn adjudicate(
    grid: GridSpec,
    zero_sets: &[Vec<[f64; 2]>],
    times: &[f64],
    exec: Execution,
) -> Result<Adjudication> {
    let corpus: Vec<GridFunction> = crate::corpus::standard_corpus(grid)
        .into_iter()
        .map(|e| e.function)
        .collect();
    let chi = GridFunction::indicator(grid, 0.0, 1.0)?;
    let mut scores = Vec::new();
    for variant in Variant::ALL {
        let (mut cocycle, mut unitarity, mut markov, mut limit) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
        for zs in zero_sets {
            let model = ModelSpace::new(crate::blaschke::BlaschkeProduct::from_pairs(zs)?, grid)?;
            let w = MarkovianCocycle::new(model, variant)?.with_execution(exec);
            for &s in times {
                for &t in times {
                    cocycle = cocycle.max(verify_cocycle_identity(&w, s, t, &corpus)?.max_residual);
                }
                unitarity = unitarity.max(verify_unitarity(&w, s, &corpus)?.max_residual);
                if s > 0.0 {
                    let r = verify_markov(&w, s, &corpus)?;
                    markov = markov
                        .max(r.forward.max_residual)
                        .max(r.backward.max_residual);
                }
            }
            let lim = cocycle_limit(&w, &chi, &[1.0, 2.0])?;
            limit = lim.distances.iter().fold(limit, |a, &b| a.max(b));
        }
        let pass = cocycle <= COCYCLE_TOL
            && unitarity <= UNITARITY_TOL
            && markov <= MARKOV_TOL
            && limit <= 1e-8;
        scores.push(VariantScore {
            variant,
            cocycle,
            unitarity,
            markov,
            limit,
            pass,
        });
    }
    let passing: Vec<Variant> = scores
        .iter()
        .filter(|s| s.pass)
        .map(|s| s.variant)
        .collect();
    let selected = (passing.len() == 1).then(|| passing[0]);
    Ok(Adjudication { scores, selected })
}
