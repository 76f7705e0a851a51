//! Fixed test corpus for operator identities: indicators, one-sided
//! exponentials and seeded random band-limited wave packets.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::grid::{GridFunction, GridSpec, C64};

pub const CORPUS_SEED: u64 = 0xC0C1C1E;
const EXP_CUTOFF: f64 = 10.0;
/// Relative squared mass allowed within the edge margin of a sweep.
pub const EDGE_MASS_TOL: f64 = 1e-16;

#[derive(Debug, Clone)]
pub struct CorpusEntry {
    pub label: String,
    pub function: GridFunction,
}

fn entry(label: &str, function: GridFunction) -> CorpusEntry {
    CorpusEntry {
        label: label.to_string(),
        function,
    }
}

/// `f` on `[0, 10)` (past) or `(−10, 0)` (future), zero elsewhere.
fn one_sided(grid: GridSpec, past: bool, f: impl Fn(f64) -> C64) -> GridFunction {
    GridFunction::from_fn(grid, |x| {
        if (x >= 0.0) == past && x.abs() < EXP_CUTOFF {
            f(x)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// Standard corpus on `grid`; every entry is negligible outside `[−10, 10)`.
pub fn standard_corpus(grid: GridSpec) -> Vec<CorpusEntry> {
    let ind =
        |a: f64, b: f64| GridFunction::indicator(grid, a, b).expect("corpus interval inside grid");
    let mut out = vec![
        entry("chi[0,1]", ind(0.0, 1.0)),
        entry("chi[0.5,3]", ind(0.5, 3.0)),
        entry("chi[2,3]", ind(2.0, 3.0)),
        entry("chi[-1,0]", ind(-1.0, 0.0)),
        entry("chi[-2,-1]", ind(-2.0, -1.0)),
        entry("chi[-1,2]", ind(-1.0, 2.0)),
        entry(
            "exp(-x)",
            one_sided(grid, true, |x| C64::new((-x).exp(), 0.0)),
        ),
        entry(
            "exp(-2x)cos(3x)",
            one_sided(grid, true, |x| {
                C64::new((-2.0 * x).exp() * (3.0 * x).cos(), 0.0)
            }),
        ),
        entry(
            "x exp((-1+2i)x)",
            one_sided(grid, true, |x| C64::new(-x, 2.0 * x).exp() * x),
        ),
        entry(
            "exp(x) on x<0",
            one_sided(grid, false, |x| C64::new(x.exp(), 0.0)),
        ),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(CORPUS_SEED);
    for j in 0..4 {
        let center: f64 = rng.random_range(-2.0..2.0);
        let width: f64 = rng.random_range(0.5..1.0);
        let modes: Vec<(f64, C64)> = (1..=4)
            .map(|q| {
                let amp = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                (1.5 * q as f64, amp)
            })
            .collect();
        let f = GridFunction::from_fn(grid, |x| {
            let env = (-(x - center).powi(2) / (2.0 * width * width)).exp();
            let wave: C64 = modes
                .iter()
                .map(|(w, a)| a * C64::from_polar(1.0, w * x))
                .sum();
            wave * env
        });
        out.push(entry(&format!("packet{j}"), f));
    }
    out
}

/// Whether at most `rel_tol·‖f‖²` of `f` lies within `margin` of either
/// grid end.
pub fn clear_of_edges(f: &GridFunction, margin: f64, rel_tol: f64) -> bool {
    let g = f.grid();
    let k = (margin / g.dx()).ceil() as usize;
    let v = f.values();
    let k = k.min(v.len());
    let edge: f64 = v[..k]
        .iter()
        .chain(&v[v.len() - k..])
        .map(|x| x.norm_sqr())
        .sum::<f64>()
        * g.dx();
    edge <= rel_tol * f.norm_sq()
}
