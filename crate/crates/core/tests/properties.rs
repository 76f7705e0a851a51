//! Structural invariants as properties over random zeros, times and inputs.

use cocycle_core::blaschke::{apply_inner_multiplier, Backend, BlaschkeProduct};
use cocycle_core::cocycle::{verify_cocycle_identity, verify_unitarity, MarkovianCocycle, Variant};
use cocycle_core::config::ExperimentConfig;
use cocycle_core::model_space::{ModelSpace, Projection};
use cocycle_core::wiener::{
    girsanov_density, BatchConfig, BrownianBatch, WienerCocycleConfig, WienerVariant,
};
use cocycle_core::wold::multiset_distance;
use cocycle_core::{default_grid, GridFunction, GridSpec, C64};
use proptest::prelude::*;

fn small_grid() -> GridSpec {
    GridSpec::new(-4.0, 12.0, 512).unwrap()
}

/// Sum of Gaussian packets cut to `[lo, hi)`.
fn packets(grid: GridSpec, lo: f64, hi: f64, ps: &[(f64, f64, f64, f64)]) -> GridFunction {
    GridFunction::from_fn(grid, |x| {
        if x < lo || x >= hi {
            return C64::new(0.0, 0.0);
        }
        ps.iter()
            .map(|&(c, w, re, im)| C64::new(re, im) * (-(x - c).powi(2) / (2.0 * w * w)).exp())
            .sum()
    })
}

fn packet_params() -> impl Strategy<Value = Vec<(f64, f64, f64, f64)>> {
    prop::collection::vec((0.5..3.0f64, 0.2..0.6f64, -1.0..1.0f64, -1.0..1.0f64), 1..4)
}

/// Zeros with well-separated, strictly negative real parts.
fn zeros() -> impl Strategy<Value = Vec<[f64; 2]>> {
    prop::collection::vec((-2.5..-0.8f64, -2.0..2.0f64), 0..3)
        .prop_filter("zeros must be separated", |zs| {
            zs.iter().enumerate().all(|(i, a)| {
                zs[..i]
                    .iter()
                    .all(|b| ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt() > 0.3)
            })
        })
        .prop_map(|zs| zs.into_iter().map(|(re, im)| [re, im]).collect())
}

fn quarter_time() -> impl Strategy<Value = f64> {
    (-4i32..=4)
        .prop_filter("nonzero", |k| *k != 0)
        .prop_map(|k| k as f64 / 4.0)
}

fn inner(f: &GridFunction, g: &GridFunction) -> C64 {
    f.inner(g).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn shifts_form_a_group(a in -64i32..64, b in -64i32..64, ps in packet_params()) {
        let grid = small_grid();
        let f = packets(grid, -2.0, 4.0, &ps);
        let (s, t) = (a as f64 * grid.dx(), b as f64 * grid.dx());
        let two = f.shift(s).unwrap().function.shift(t).unwrap().function;
        let one = f.shift(s + t).unwrap().function;
        prop_assert_eq!(two.values(), one.values());
        let back = f.shift(s).unwrap().function.shift(-s).unwrap().function;
        prop_assert_eq!(back.values(), f.values());
    }

    #[test]
    fn interval_projection_is_orthogonal(lo in -64i32..192, len in 0i32..192, ps in packet_params(), qs in packet_params()) {
        let grid = small_grid();
        let f = packets(grid, -4.0, 12.0, &ps);
        let g = packets(grid, -4.0, 12.0, &qs);
        let (a, b) = (lo as f64 * grid.dx(), (lo + len) as f64 * grid.dx());
        let pf = f.project_interval(a, b).unwrap();
        let rest = f.sub(&pf).unwrap();
        prop_assert!((pf.norm_sq() + rest.norm_sq() - f.norm_sq()).abs() <= 1e-12 * (1.0 + f.norm_sq()));
        let ppf = pf.project_interval(a, b).unwrap();
        prop_assert_eq!(ppf.values(), pf.values());
        let pg = g.project_interval(a, b).unwrap();
        prop_assert!((inner(&pf, &g) - inner(&f, &pg)).norm() <= 1e-12);
    }

    #[test]
    fn blaschke_is_inner_and_multiplicative(za in zeros(), zb in zeros(), w in -50.0..50.0f64, re in 0.0..3.0f64, im in -3.0..3.0f64) {
        let (a, b) = (BlaschkeProduct::from_pairs(&za).unwrap(), BlaschkeProduct::from_pairs(&zb).unwrap());
        prop_assert!((a.eval_boundary(w).norm() - 1.0).abs() <= 1e-12);
        let lam = C64::new(re, im);
        let lhs = a.product(&b).eval(lam).unwrap();
        let rhs = a.eval(lam).unwrap() * b.eval(lam).unwrap();
        prop_assert!((lhs - rhs).norm() <= 1e-12);
        prop_assert!(a.eval(lam).unwrap().norm() <= 1.0 + 1e-12);
    }

    #[test]
    fn multiplier_range_is_orthogonal_to_model_space(zs in zeros(), ps in packet_params()) {
        let grid = default_grid();
        let b = BlaschkeProduct::from_pairs(&zs).unwrap();
        let model = ModelSpace::new(b.clone(), grid).unwrap();
        let f = packets(grid, 0.0, 4.0, &ps);
        let mf = apply_inner_multiplier(&b, &f, Backend::CausalConvolution).unwrap();
        prop_assert!((mf.norm() - f.norm()).abs() <= 1e-9 * f.norm());
        for c in model.coefficients_half(mf.past()) {
            prop_assert!(c.norm() <= 1e-9 * f.norm());
        }
    }

    #[test]
    fn model_projection_is_an_orthogonal_projection(zs in zeros(), ps in packet_params(), qs in packet_params()) {
        let grid = default_grid();
        let model = ModelSpace::new(BlaschkeProduct::from_pairs(&zs).unwrap(), grid).unwrap();
        let f = packets(grid, 0.0, 20.0, &ps);
        let g = packets(grid, 0.0, 20.0, &qs);
        let pf = model.model_projection(&f, Projection::OntoVperp).unwrap();
        let ppf = model.model_projection(&pf, Projection::OntoVperp).unwrap();
        prop_assert!(ppf.distance(&pf).unwrap() <= 1e-12 * (1.0 + f.norm()));
        let pg = model.model_projection(&g, Projection::OntoVperp).unwrap();
        prop_assert!((inner(&pf, &g) - inner(&f, &pg)).norm() <= 1e-12 * (1.0 + f.norm() * g.norm()));
        let qf = model.model_projection(&f, Projection::OntoV).unwrap();
        prop_assert!(inner(&qf, &pf).norm() <= 1e-12 * (1.0 + f.norm_sq()));
    }

    #[test]
    fn rotations_compose(zs in zeros(), s in -5.0..5.0f64, t in -5.0..5.0f64, cs in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 3)) {
        let model = ModelSpace::new(BlaschkeProduct::from_pairs(&zs).unwrap(), default_grid()).unwrap();
        let c: Vec<C64> = cs.iter().take(model.dim()).map(|&(a, b)| C64::new(a, b)).collect();
        let two = model.rotate_coefficients(&model.rotate_coefficients(&c, s), t);
        let one = model.rotate_coefficients(&c, s + t);
        for (x, y) in two.iter().zip(&one) {
            prop_assert!((x - y).norm() <= 1e-13);
        }
    }

    #[test]
    fn multiset_distance_ignores_order(pts in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 1..6), rot in 0usize..6) {
        let a: Vec<C64> = pts.iter().map(|&(x, y)| C64::new(x, y)).collect();
        let mut b = a.clone();
        let k = rot % b.len();
        b.rotate_left(k);
        prop_assert_eq!(multiset_distance(&a, &b), 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn cocycle_law_and_unitarity_hold(zs in zeros(), s in quarter_time(), t in quarter_time(), ps in packet_params()) {
        let model = ModelSpace::new(BlaschkeProduct::from_pairs(&zs).unwrap(), default_grid()).unwrap();
        let w = MarkovianCocycle::new(model, Variant::ShiftConjugated).unwrap();
        let f = vec![packets(default_grid(), -3.0, 6.0, &ps)];
        prop_assert!(verify_cocycle_identity(&w, s, t, &f).unwrap().max_residual <= 1e-6);
        prop_assert!(verify_unitarity(&w, t, &f).unwrap().max_residual <= 1e-6);
    }

    #[test]
    fn future_side_is_fixed_exactly(zs in zeros(), k in 1usize..8, ps in packet_params()) {
        let grid = default_grid();
        let model = ModelSpace::new(BlaschkeProduct::from_pairs(&zs).unwrap(), grid).unwrap();
        let w = MarkovianCocycle::new(model, Variant::ShiftConjugated).unwrap();
        let t = k as f64 * 0.25;
        // mirror the packets onto x < 0
        let mirrored: Vec<_> = ps.iter().map(|&(c, wd, re, im)| (-c, wd, re, im)).collect();
        let f = packets(grid, -8.0, 0.0, &mirrored);
        let back = w.apply(&f, -t).unwrap();
        prop_assert_eq!(back.values(), f.values());
        let g = f.shift(t).unwrap().function;
        let fwd = w.apply(&g, t).unwrap();
        prop_assert_eq!(fwd.values(), g.values());
    }

    #[test]
    fn path_shifts_compose_and_density_is_positive(seed in any::<u64>(), i in 0usize..8, c in 0i32..64, d in 0i32..64) {
        let batch = BrownianBatch::new(BatchConfig { dt: 1.0 / 64.0, horizon: 2.0, n_paths: 8, seed }).unwrap();
        let p = batch.path(i);
        let (c, d) = (c as f64 / 64.0, d as f64 / 64.0);
        let two = p.shifted(c).unwrap().shifted(d).unwrap();
        let one = p.shifted(c + d).unwrap();
        // stay inside the window the two shifts leave valid
        for x in (0..=16).map(|k| k as f64 / 64.0).filter(|x| x + c + d <= 2.0) {
            prop_assert!((two.at(x).unwrap() - one.at(x).unwrap()).abs() <= 1e-12);
        }
        let cfg = WienerCocycleConfig::constant(0.7, &batch, WienerVariant::GirsanovUnitary, 1.0).unwrap();
        prop_assert!(girsanov_density(&p, &cfg, 1.0).unwrap() > 0.0);
    }

    #[test]
    fn config_survives_a_round_trip(n_paths in 1usize..100_000, seed in any::<u64>(), t in 0.1..4.0f64) {
        let text = format!(r#"{{"mc": {{"n_paths": {n_paths}, "seed": {seed}, "t": {t}}}, "commands": ["wiener-mc"]}}"#);
        let cfg = ExperimentConfig::from_json(&text).unwrap();
        let canonical = serde_json::to_string(&cfg).unwrap();
        let again = ExperimentConfig::from_json(&canonical).unwrap();
        prop_assert_eq!(serde_json::to_string(&again).unwrap(), canonical);
    }
}
