//! Monte Carlo for the Girsanov-type cocycle on Wiener space.
//!
//! Paths live on `[−T, T]` with step `dt` and `B(0) = 0`. Path `i` is drawn
//! from ChaCha8 seeded with `seed` on stream `i`: first the `N = T/dt`
//! increments on `[0, T]` left to right, then the `N` increments on
//! `[−T, 0]` right to left, each standard normal scaled by `√dt`. Results
//! are therefore independent of how paths are spread over workers.
//!
//! Stochastic integrals are left-point (Itô) sums over the same step.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::parallel::{compensated_sum, map_indexed, Execution};

/// Largest batch [`BrownianBatch::materialize`] will hold, in bytes.
pub const MEMORY_BUDGET: usize = 512 << 20;
/// Below this `Z_t` is treated as 0; avoids `0·∞` in far tails.
const DENSITY_FLOOR: f64 = 1e-300;
/// Path-wise gaps below this (relative) count as exact agreement.
const EXACT_TOL: f64 = 1e-12;
pub const Z_LIMIT: f64 = 3.0;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct BatchConfig {
    pub dt: f64,
    pub horizon: f64,
    pub n_paths: usize,
    pub seed: u64,
}

impl Default for BatchConfig {
    fn default() -> Self {
        Self {
            dt: 1.0 / 1024.0,
            horizon: 2.0,
            n_paths: 100_000,
            seed: 0x5EED,
        }
    }
}

/// Lazily generated batch; paths are regenerated on demand.
#[derive(Debug, Clone)]
pub struct BrownianBatch {
    cfg: BatchConfig,
    steps: usize,
    execution: Execution,
}

/// One sampled path, with the window of indices still in range after shifts.
#[derive(Debug, Clone)]
pub struct Path {
    dt: f64,
    /// Index of `x = 0`.
    origin: usize,
    values: Vec<f64>,
    valid: (usize, usize),
}

impl Path {
    pub fn dt(&self) -> f64 {
        self.dt
    }

    fn index(&self, x: f64) -> Result<usize> {
        let k = (x / self.dt).round();
        if (k * self.dt - x).abs() > 1e-9 * self.dt.max(x.abs()) {
            return Err(Error::Alignment { t: x, dx: self.dt });
        }
        let i = self.origin as f64 + k;
        if i < self.valid.0 as f64 || i > self.valid.1 as f64 {
            return Err(Error::Horizon(format!(
                "time {x} is outside the simulated window"
            )));
        }
        Ok(i as usize)
    }

    /// `B(x)`.
    pub fn at(&self, x: f64) -> Result<f64> {
        Ok(self.values[self.index(x)?])
    }

    /// `(S_c B)(x) = B(x + c) − B(c)`.
    pub fn shifted(&self, c: f64) -> Result<Path> {
        let k = (c / self.dt).round() as isize;
        let base = self.at(c)?;
        let n = self.values.len() as isize;
        let mut values = vec![f64::NAN; self.values.len()];
        for (j, v) in values.iter_mut().enumerate() {
            let src = j as isize + k;
            if src >= self.valid.0 as isize && src <= self.valid.1 as isize && src < n {
                *v = self.values[src as usize] - base;
            }
        }
        let lo = (self.valid.0 as isize - k).clamp(0, n - 1) as usize;
        let hi = (self.valid.1 as isize - k).clamp(0, n - 1) as usize;
        Ok(Path {
            dt: self.dt,
            origin: self.origin,
            values,
            valid: (lo, hi),
        })
    }
}

impl BrownianBatch {
    pub fn new(cfg: BatchConfig) -> Result<Self> {
        if !(cfg.dt > 0.0 && cfg.dt.is_finite()) {
            return Err(Error::Precondition(format!(
                "dt must be positive, got {}",
                cfg.dt
            )));
        }
        if cfg.n_paths == 0 {
            return Err(Error::Precondition("n_paths must be at least 1".into()));
        }
        let steps = (cfg.horizon / cfg.dt).round();
        if !(steps >= 1.0) || (steps * cfg.dt - cfg.horizon).abs() > 1e-9 * cfg.horizon {
            return Err(Error::Alignment {
                t: cfg.horizon,
                dx: cfg.dt,
            });
        }
        Ok(Self {
            cfg,
            steps: steps as usize,
            execution: Execution::default(),
        })
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }

    pub fn config(&self) -> &BatchConfig {
        &self.cfg
    }

    pub fn n_paths(&self) -> usize {
        self.cfg.n_paths
    }

    /// Samples per path, `2N + 1`.
    pub fn path_len(&self) -> usize {
        2 * self.steps + 1
    }

    pub fn path(&self, i: usize) -> Path {
        let n = self.steps;
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed);
        rng.set_stream(i as u64);
        let sd = self.cfg.dt.sqrt();
        let mut values = vec![0.0; 2 * n + 1];
        for j in n + 1..=2 * n {
            let z: f64 = StandardNormal.sample(&mut rng);
            values[j] = values[j - 1] + sd * z;
        }
        for j in (0..n).rev() {
            let z: f64 = StandardNormal.sample(&mut rng);
            values[j] = values[j + 1] - sd * z;
        }
        Path {
            dt: self.cfg.dt,
            origin: n,
            values,
            valid: (0, 2 * n),
        }
    }

    /// All paths in memory, subject to [`MEMORY_BUDGET`].
    pub fn materialize(&self) -> Result<Vec<Vec<f64>>> {
        let bytes = self
            .cfg
            .n_paths
            .saturating_mul(self.path_len())
            .saturating_mul(std::mem::size_of::<f64>());
        if bytes > MEMORY_BUDGET {
            return Err(Error::Size(format!(
                "{} paths of {} samples need {bytes} bytes, budget {MEMORY_BUDGET}",
                self.cfg.n_paths,
                self.path_len()
            )));
        }
        Ok(map_indexed(self.execution, self.cfg.n_paths, |i| {
            self.path(i).values
        }))
    }

    /// `f` on every path, in path order.
    pub fn per_path<T, F>(&self, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(&Path) -> Result<T> + Sync + Send,
    {
        map_indexed(self.execution, self.cfg.n_paths, |i| f(&self.path(i)))
            .into_iter()
            .collect()
    }
}

/// Convenience wrapper matching the batch constructor.
pub fn sample_paths(cfg: BatchConfig) -> Result<BrownianBatch> {
    BrownianBatch::new(cfg)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WienerVariant {
    /// The formula as printed: exponent over `[0, s]`, stochastic shift over `[0, t]`.
    #[serde(rename = "literal_W")]
    LiteralW,
    /// `√Z_t · F(B + ∫₀^· a dx)` with `Z_t = exp{−∫₀^t a dB − ½∫₀^t a² dx}`.
    GirsanovUnitary,
}

#[derive(Debug, Clone)]
pub struct WienerCocycleConfig {
    /// `a` at left points `k·dt`, `k ≥ 0`; zero beyond the samples and on `x < 0`.
    pub a: Vec<f64>,
    pub variant: WienerVariant,
    pub t: f64,
}

impl WienerCocycleConfig {
    pub fn new(a: Vec<f64>, variant: WienerVariant, t: f64) -> Result<Self> {
        if let Some(v) = a.iter().find(|v| !v.is_finite()) {
            return Err(Error::Precondition(format!(
                "a has a non-finite sample {v}"
            )));
        }
        Ok(Self { a, variant, t })
    }

    /// `a ≡ c` on `[0, horizon]`.
    pub fn constant(c: f64, batch: &BrownianBatch, variant: WienerVariant, t: f64) -> Result<Self> {
        Self::new(vec![c; batch.steps], variant, t)
    }

    fn a_at(&self, k: usize) -> f64 {
        self.a.get(k).copied().unwrap_or(0.0)
    }
}

fn steps_to(path: &Path, x: f64) -> Result<usize> {
    if x < 0.0 {
        return Err(Error::Precondition(format!(
            "integral endpoint must be ≥ 0, got {x}"
        )));
    }
    let i = path.index(x)?;
    Ok(i - path.origin)
}

/// `∫₀^x a dB` as a left-point sum.
fn ito(path: &Path, a: &WienerCocycleConfig, x: f64) -> Result<f64> {
    let k = steps_to(path, x)?;
    let o = path.origin;
    Ok(compensated_sum((0..k).map(|j| {
        a.a_at(j) * (path.values[o + j + 1] - path.values[o + j])
    })))
}

/// `∫₀^{x} a² dx`, left-point.
fn energy(a: &WienerCocycleConfig, k: usize, dt: f64) -> f64 {
    compensated_sum((0..k).map(|j| a.a_at(j).powi(2))) * dt
}

/// `Z_t = exp{−∫₀^t a dB − ½∫₀^t a² dx}`, floored to 0.
pub fn girsanov_density(path: &Path, a: &WienerCocycleConfig, t: f64) -> Result<f64> {
    let k = steps_to(path, t)?;
    let z = (-ito(path, a, t)? - 0.5 * energy(a, k, path.dt)).exp();
    Ok(if z < DENSITY_FLOOR { 0.0 } else { z })
}

/// `τ_t B = B + ∫₀^{· ∧ t} a dx` on the path's window.
fn drifted(path: &Path, a: &WienerCocycleConfig, t: f64) -> Result<Path> {
    let k = steps_to(path, t)?;
    let mut out = path.clone();
    let mut acc = 0.0;
    let o = path.origin;
    for j in o + 1..out.values.len() {
        let step = j - o;
        if step <= k {
            acc += a.a_at(step - 1) * path.dt;
        }
        out.values[j] += acc;
    }
    Ok(out)
}

/// Probes: polynomials of degree ≤ 2 in path values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Probe {
    /// `B(r)`.
    Value(f64),
    /// `B(r₁)·B(r₂)`.
    Product(f64, f64),
    /// `B(v) − B(u)`.
    Increment(f64, f64),
}

impl Probe {
    pub fn eval(&self, path: &Path) -> Result<f64> {
        match *self {
            Probe::Value(r) => path.at(r),
            Probe::Product(r, q) => Ok(path.at(r)? * path.at(q)?),
            Probe::Increment(u, v) => Ok(path.at(v)? - path.at(u)?),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Probe::Value(r) => format!("B({r})"),
            Probe::Product(r, q) => format!("B({r})B({q})"),
            Probe::Increment(u, v) => format!("B({v})-B({u})"),
        }
    }

    fn latest(&self) -> f64 {
        match *self {
            Probe::Value(r) => r,
            Probe::Product(r, q) => r.max(q),
            Probe::Increment(u, v) => u.max(v),
        }
    }
}

/// `w_t F` on one path.
///
/// Increments after `t` pass through unchanged for both variants. Other
/// probes must only involve times `≤ t`. The printed variant is linear in
/// `B(s)` and has no product rule, so it accepts degree-one probes only.
pub fn apply_to_path(path: &Path, cfg: &WienerCocycleConfig, probe: Probe) -> Result<f64> {
    let t = cfg.t;
    if let Probe::Increment(u, v) = probe {
        if u.min(v) >= t {
            return probe.eval(path);
        }
    }
    if probe.latest() > t {
        return Err(Error::Precondition(format!(
            "{} reaches past t = {t}; only the s ≤ t branch applies",
            probe.label()
        )));
    }
    match cfg.variant {
        WienerVariant::GirsanovUnitary => {
            let z = girsanov_density(path, cfg, t)?;
            if z == 0.0 {
                return Ok(0.0);
            }
            let shifted = drifted(path, cfg, t)?;
            Ok(z.sqrt() * probe.eval(&shifted)?)
        }
        WienerVariant::LiteralW => {
            let literal = |s: f64| -> Result<f64> {
                let k = steps_to(path, t)?;
                let lower = if s > 0.0 { ito(path, cfg, s)? } else { 0.0 };
                let factor = (-0.5 * lower - 0.25 * energy(cfg, k, path.dt)).exp();
                Ok(factor * (path.at(s)? + ito(path, cfg, t)?))
            };
            match probe {
                Probe::Value(s) => literal(s),
                Probe::Increment(u, v) => Ok(literal(v)? - literal(u)?),
                Probe::Product(..) => Err(Error::Unsupported(
                    "the printed formula is given on B(s) only; products are undefined".into(),
                )),
            }
        }
    }
}

/// Per-path values of `w_t(B(s))`, `s ≤ t`.
pub fn apply_wiener_cocycle(
    b: &BrownianBatch,
    cfg: &WienerCocycleConfig,
    s: f64,
) -> Result<Vec<f64>> {
    if s > cfg.t {
        return Err(Error::Precondition(format!(
            "s = {s} exceeds t = {}",
            cfg.t
        )));
    }
    b.per_path(|p| apply_to_path(p, cfg, Probe::Value(s)))
}

#[derive(Debug, Clone, Serialize)]
pub struct SampleStats {
    pub mean: f64,
    pub std_err: f64,
    pub z: f64,
}

/// `z` of `mean(d) − target`; exact zeros give `z = 0`.
fn z_score(d: &[f64], target: f64) -> Result<SampleStats> {
    let n = d.len() as f64;
    let mean = compensated_sum(d.iter().copied()) / n;
    if d.iter().all(|v| *v == target) {
        return Ok(SampleStats {
            mean,
            std_err: 0.0,
            z: 0.0,
        });
    }
    if d.len() < 2 {
        return Err(Error::Statistics("need at least two paths".into()));
    }
    let var = compensated_sum(d.iter().map(|v| (v - mean).powi(2))) / (n - 1.0);
    let std_err = (var / n).sqrt();
    if !(std_err > 0.0 && std_err.is_finite()) {
        return Err(Error::Statistics(format!(
            "degenerate standard error {std_err}"
        )));
    }
    Ok(SampleStats {
        mean,
        std_err,
        z: (mean - target) / std_err,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbeOutcome {
    pub probe: String,
    /// Per-path `|w_t F|² − |F|²`.
    pub defect: SampleStats,
}

#[derive(Debug, Clone, Serialize)]
pub struct IsometryReport {
    pub variant: WienerVariant,
    pub n_paths: usize,
    pub probes: Vec<ProbeOutcome>,
    pub max_abs_z: f64,
    pub z_limit: f64,
    /// Judged for the unitary form only; the printed form is recorded.
    pub pass: Option<bool>,
}

/// Paired z-scores of `E|w_t F|² − E|F|²`.
pub fn mc_isometry_test(
    b: &BrownianBatch,
    cfg: &WienerCocycleConfig,
    probes: &[Probe],
) -> Result<IsometryReport> {
    let rows = b.per_path(|p| {
        probes
            .iter()
            .map(|&f| Ok(apply_to_path(p, cfg, f)?.powi(2) - f.eval(p)?.powi(2)))
            .collect::<Result<Vec<f64>>>()
    })?;
    let mut outcomes = Vec::with_capacity(probes.len());
    for (j, f) in probes.iter().enumerate() {
        let d: Vec<f64> = rows.iter().map(|r| r[j]).collect();
        outcomes.push(ProbeOutcome {
            probe: f.label(),
            defect: z_score(&d, 0.0)?,
        });
    }
    let max_abs_z = outcomes
        .iter()
        .map(|o| o.defect.z.abs())
        .fold(0.0, f64::max);
    let pass = (cfg.variant == WienerVariant::GirsanovUnitary).then_some(max_abs_z <= Z_LIMIT);
    Ok(IsometryReport {
        variant: cfg.variant,
        n_paths: b.n_paths(),
        probes: outcomes,
        max_abs_z,
        z_limit: Z_LIMIT,
        pass,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct MartingaleReport {
    pub t: f64,
    pub density: SampleStats,
    pub z_limit: f64,
    pub pass: bool,
}

/// Sample mean of `Z_t` against 1.
pub fn martingale_check(b: &BrownianBatch, cfg: &WienerCocycleConfig) -> Result<MartingaleReport> {
    let z = b.per_path(|p| girsanov_density(p, cfg, cfg.t))?;
    let density = z_score(&z, 1.0)?;
    let pass = density.z.abs() <= Z_LIMIT;
    Ok(MartingaleReport {
        t: cfg.t,
        density,
        z_limit: Z_LIMIT,
        pass,
    })
}

type Functional<'a> = Box<dyn Fn(&Path) -> Result<f64> + Send + Sync + 'a>;

fn alpha<'a>(c: f64, f: Functional<'a>) -> Functional<'a> {
    Box::new(move |p: &Path| f(&p.shifted(c)?))
}

fn unitary_w<'a>(cfg: &'a WienerCocycleConfig, t: f64, f: Functional<'a>) -> Functional<'a> {
    Box::new(move |p: &Path| {
        let z = girsanov_density(p, cfg, t)?;
        if z == 0.0 {
            return Ok(0.0);
        }
        Ok(z.sqrt() * f(&drifted(p, cfg, t)?)?)
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CocycleMcReport {
    pub s: f64,
    pub t: f64,
    pub probes: Vec<ProbeOutcome>,
    pub max_abs_z: f64,
    /// Largest per-path `|w_{t+s}F − w_t α_t w_s α_{−t} F|`.
    pub max_abs_diff: f64,
    pub exact: bool,
    pub pass: bool,
}

/// Path-wise comparison of `w_{t+s} F` with `w_t α_t w_s α_{−t} F`, where
/// `α_c F(B) = F(B(· + c) − B(c))`.
pub fn mc_cocycle_test(
    b: &BrownianBatch,
    cfg: &WienerCocycleConfig,
    s: f64,
    t: f64,
    probes: &[Probe],
) -> Result<CocycleMcReport> {
    if cfg.variant == WienerVariant::LiteralW {
        return Err(Error::Unsupported(
            "the printed formula acts on B(s) only and cannot be composed with the shift".into(),
        ));
    }
    let rows = b.per_path(|p| {
        probes
            .iter()
            .map(|&f| {
                let probe: Functional = Box::new(move |q: &Path| f.eval(q));
                let lhs = unitary_w(cfg, t + s, Box::new(move |q: &Path| f.eval(q)))(p)?;
                let rhs = unitary_w(cfg, t, alpha(t, unitary_w(cfg, s, alpha(-t, probe))))(p)?;
                Ok((lhs - rhs, lhs.abs().max(rhs.abs())))
            })
            .collect::<Result<Vec<(f64, f64)>>>()
    })?;
    let mut outcomes = Vec::with_capacity(probes.len());
    let mut max_abs_diff = 0.0f64;
    let mut exact = true;
    for (j, f) in probes.iter().enumerate() {
        let d: Vec<f64> = rows.iter().map(|r| r[j].0).collect();
        let tol = EXACT_TOL * rows.iter().map(|r| r[j].1).fold(1.0, f64::max);
        let worst = d.iter().map(|v| v.abs()).fold(0.0, f64::max);
        max_abs_diff = max_abs_diff.max(worst);
        let stats = if worst <= tol {
            SampleStats {
                mean: compensated_sum(d.iter().copied()) / d.len() as f64,
                std_err: 0.0,
                z: 0.0,
            }
        } else {
            exact = false;
            z_score(&d, 0.0)?
        };
        outcomes.push(ProbeOutcome {
            probe: f.label(),
            defect: stats,
        });
    }
    let max_abs_z = outcomes
        .iter()
        .map(|o| o.defect.z.abs())
        .fold(0.0, f64::max);
    Ok(CocycleMcReport {
        s,
        t,
        probes: outcomes,
        max_abs_z,
        max_abs_diff,
        exact,
        pass: max_abs_z <= Z_LIMIT,
    })
}

/// Sample mean and variance of `B(s)` over the batch.
pub fn moments_at(b: &BrownianBatch, s: f64) -> Result<(f64, f64)> {
    let v = b.per_path(|p| p.at(s))?;
    let n = v.len() as f64;
    let mean = compensated_sum(v.iter().copied()) / n;
    let var = compensated_sum(v.iter().map(|x| (x - mean).powi(2))) / (n - 1.0).max(1.0);
    Ok((mean, var))
}
