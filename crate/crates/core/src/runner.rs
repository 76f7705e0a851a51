//! Runs the commands of an [`ExperimentConfig`] and assembles reports.
//!
//! A command that errors yields a failing report carrying the error text,
//! so one bad stage does not hide the others.

use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};

use crate::blaschke::{asymptotic_check_b3, b2_identity_check, BlaschkeProduct};
use crate::cocycle::{
    adjudicate, cocycle_limit, verify_cocycle_identity, verify_markov, verify_unitarity,
    Adjudication, MarkovianCocycle, ResidualReport,
};
use crate::config::{ASpec, Command, ExperimentConfig};
use crate::corpus::standard_corpus;
use crate::error::{Error, Result};
use crate::grid::{GridFunction, GridSpec, C64};
use crate::hs::{
    dense_defect_oracle, feldman_check, harmonic_covariance, hs_defect_norm, series_r1_r2, HsBasis,
};
use crate::model_space::ModelSpace;
use crate::parallel::Execution;
use crate::report::{digest, Provenance, Report, RunOutput, SeriesRow, SpectrumRow, Tables};
use crate::wiener::{
    martingale_check, mc_cocycle_test, mc_isometry_test, BrownianBatch, Probe, WienerCocycleConfig,
};
use crate::wold::{
    index_estimate, match_targets, multiset_distance, noncorrelated_increments_check,
    unitary_part_spectrum, wold_split, IsometrySemigroup, WoldSplit,
};

/// Zero sets used by the variant adjudication, besides any configured one.
pub fn adjudication_zero_sets() -> Vec<Vec<[f64; 2]>> {
    vec![
        vec![],
        vec![[-1.0, 0.0]],
        vec![[-1.0, 0.0], [-2.0, 0.0]],
        vec![[-1.0, 1.0], [-1.0, -1.0]],
    ]
}

struct Outcome {
    results: Value,
    pass: bool,
    tables: Tables,
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}

pub struct Runner {
    cfg: ExperimentConfig,
    grid: GridSpec,
    exec: Execution,
    digest: String,
    cocycle: Option<MarkovianCocycle>,
    split: Option<WoldSplit>,
}

impl Runner {
    pub fn new(cfg: ExperimentConfig, exec: Execution) -> Result<Self> {
        let grid = cfg.grid.build()?;
        let canonical = serde_json::to_string(&cfg)
            .map_err(|e| Error::Config(format!("cannot serialize config: {e}")))?;
        Ok(Self {
            digest: digest(canonical.as_bytes()),
            cfg,
            grid,
            exec,
            cocycle: None,
            split: None,
        })
    }

    fn cocycle(&mut self) -> Result<&MarkovianCocycle> {
        if self.cocycle.is_none() {
            let b = BlaschkeProduct::from_pairs(&self.cfg.zeros)?;
            let model = match &self.cfg.frequencies {
                Some(f) => ModelSpace::with_frequencies(b, self.grid, f.clone())?,
                None => ModelSpace::new(b, self.grid)?,
            };
            let w = MarkovianCocycle::new(model, self.cfg.variant)?.with_execution(self.exec);
            self.cocycle = Some(w);
        }
        Ok(self.cocycle.as_ref().expect("cocycle was just built"))
    }

    fn corpus(&self) -> Vec<GridFunction> {
        standard_corpus(self.grid)
            .into_iter()
            .map(|e| e.function)
            .collect()
    }

    pub fn run(mut self) -> RunOutput {
        let reports = self
            .cfg
            .ordered_commands()
            .into_iter()
            .map(|c| self.run_command(c))
            .collect();
        RunOutput::new(reports)
    }

    pub fn run_command(&mut self, command: Command) -> Report {
        let outcome = match command {
            Command::VerifyCocycle => self.verify_cocycle(),
            Command::VerifyMarkov => self.verify_markov(),
            Command::Wold => self.wold(),
            Command::Spectrum => self.spectrum(),
            Command::HsSeries => self.hs_series(),
            Command::B2b3 => self.b2b3(),
            Command::Feldman => self.feldman(),
            Command::WienerMc => self.wiener_mc(),
        };
        let outcome = outcome.unwrap_or_else(|e| Outcome {
            results: json!({ "error": e.to_string() }),
            pass: false,
            tables: Tables::default(),
        });
        Report {
            command: command.name().to_string(),
            inputs_digest: self.digest.clone(),
            results: outcome.results,
            pass: outcome.pass,
            provenance: Provenance {
                version: env!("CARGO_PKG_VERSION").to_string(),
                seed: self.cfg.mc.seed,
            },
            tables: outcome.tables,
        }
    }

    fn verify_cocycle(&mut self) -> Result<Outcome> {
        let corpus = self.corpus();
        let grid = self.grid;
        let times = self.cfg.times.clone();
        let (tc, tu, tl) = (
            self.cfg.tolerance("cocycle"),
            self.cfg.tolerance("unitarity"),
            self.cfg.tolerance("limit"),
        );
        let w = self.cocycle()?;
        let mut worst: Option<ResidualReport> = None;
        for &s in &times {
            for &t in &times {
                let r = verify_cocycle_identity(w, s, t, &corpus)?;
                if worst
                    .as_ref()
                    .is_none_or(|b| r.max_residual > b.max_residual)
                {
                    worst = Some(r);
                }
            }
        }
        let cocycle = worst
            .ok_or_else(|| Error::Config("verify-cocycle needs at least one time".into()))?
            .judged(tc);
        let mut unit: Option<ResidualReport> = None;
        for &t in &times {
            let r = verify_unitarity(w, t, &corpus)?;
            if unit
                .as_ref()
                .is_none_or(|b| r.max_residual > b.max_residual)
            {
                unit = Some(r);
            }
        }
        let unitarity = unit.expect("times is non-empty").judged(tu);
        let chi = GridFunction::indicator(grid, 0.0, 1.0)?;
        let schedule: Vec<f64> = [1.0, 2.0, 4.0]
            .into_iter()
            .filter(|t| *t < grid.x_max())
            .collect();
        let limit = cocycle_limit(w, &chi, &schedule)?;
        let limit_max = limit.distances.iter().copied().fold(0.0, f64::max);
        let limit_pass = limit_max <= tl;
        Ok(Outcome {
            pass: cocycle.pass && unitarity.pass && limit_pass,
            results: json!({
                "variant": w.variant(),
                "cocycle": cocycle,
                "unitarity": unitarity,
                "limit": {
                    "times": limit.times,
                    "distances": limit.distances,
                    "max": limit_max,
                    "tolerance": tl,
                    "pass": limit_pass,
                },
            }),
            tables: Tables::default(),
        })
    }

    fn verify_markov(&mut self) -> Result<Outcome> {
        let corpus = self.corpus();
        let times = self.cfg.times.clone();
        let (tm, ti) = (
            self.cfg.tolerance("markov"),
            self.cfg.tolerance("increments"),
        );
        let w = self.cocycle()?;
        let mut per_time = Vec::new();
        let mut pass = true;
        for &t in times.iter().filter(|t| **t > 0.0) {
            let r = verify_markov(w, t, &corpus)?;
            let forward = r.forward.judged(tm);
            let backward = r.backward.judged(tm);
            pass &= forward.pass && backward.pass;
            per_time.push(json!({ "t": t, "forward": forward, "backward": backward }));
        }
        let spiral_times: Vec<f64> = times
            .iter()
            .map(|t| t.abs())
            .chain(times.iter().map(|t| -t.abs()))
            .chain([0.0])
            .collect();
        let inc = noncorrelated_increments_check(w, &spiral_times)?.judged(ti);
        pass &= inc.pass;
        Ok(Outcome {
            pass,
            results: json!({ "markov": per_time, "increments": inc }),
            tables: Tables::default(),
        })
    }

    fn split(&mut self) -> Result<&WoldSplit> {
        if self.split.is_none() {
            let wc = self.cfg.wold.clone();
            let w = self.cocycle()?;
            let depth = wc
                .depth
                .unwrap_or_else(|| (w.grid().x_max() / wc.t_probe).ceil() as usize);
            let v = IsometrySemigroup::perturbed(w);
            let split = wold_split(&v, w.model(), wc.t_probe, depth)?;
            self.split = Some(split);
        }
        Ok(self.split.as_ref().expect("split was just built"))
    }

    fn wold(&mut self) -> Result<Outcome> {
        let (ta, tr) = (
            self.cfg.tolerance("wold_angle"),
            self.cfg.tolerance("reduction"),
        );
        let t_step = self.cfg.wold.t_step;
        let t_probe = self.cfg.wold.t_probe;
        let expected_dim = self.cfg.zeros.len();
        let pure = index_estimate(&IsometrySemigroup::pure_shift(self.grid), t_step)?;
        let perturbed = {
            let w = self.cocycle()?;
            index_estimate(&IsometrySemigroup::perturbed(w), t_step)?
        };
        let probes: Vec<Vec<C64>> = self.corpus().iter().map(|f| f.past().to_vec()).collect();
        self.split()?;
        let w = self.cocycle.as_ref().expect("cocycle is cached");
        let split = self.split.as_ref().expect("split is cached");
        let v = IsometrySemigroup::perturbed(w);
        let reduction = split.reduction_defect(&v, t_probe, &probes)?;
        let orthogonality = split.orthogonality_defect();
        let max_angle = split.max_angle();
        let pass = pure.index == 1
            && perturbed.index == 1
            && split.dim() == expected_dim
            && split.converged
            && max_angle <= ta
            && reduction <= tr
            && orthogonality <= tr;
        Ok(Outcome {
            pass,
            results: json!({
                "index": { "pure_shift": pure, "perturbed": perturbed, "expected": 1 },
                "split": {
                    "dim": split.dim(),
                    "expected_dim": expected_dim,
                    "converged": split.converged,
                    "largest_null_sigma": split.largest_null_sigma,
                    "smallest_orbit_sigma": split.smallest_orbit_sigma,
                    "angles": split.angles,
                    "max_angle": max_angle,
                    "angle_tolerance": ta,
                    "reduction_defect": reduction,
                    "orthogonality_defect": orthogonality,
                    "reduction_tolerance": tr,
                },
            }),
            tables: Tables::default(),
        })
    }

    fn spectrum(&mut self) -> Result<Outcome> {
        let (ts, tu) = (
            self.cfg.tolerance("spectrum"),
            self.cfg.tolerance("unimodular"),
        );
        let times = self.cfg.wold.spectrum_times.clone();
        self.split()?;
        let w = self.cocycle.as_ref().expect("cocycle is cached");
        let split = self.split.as_ref().expect("split is cached");
        let v = IsometrySemigroup::perturbed(w);
        let mut pass = true;
        let mut per_time = Vec::new();
        let mut tables = Tables::default();
        for t in times {
            let spec = unitary_part_spectrum(split, &v, t)?;
            let targets: Vec<C64> = w
                .model()
                .frequencies()
                .iter()
                .map(|f| C64::from_polar(1.0, f * t))
                .collect();
            let distance = multiset_distance(&spec.eigenvalues, &targets);
            let unimodular = spec
                .eigenvalues
                .iter()
                .map(|z| (z.norm() - 1.0).abs())
                .fold(0.0, f64::max);
            let ok = distance <= ts && unimodular <= tu;
            pass &= ok;
            tables.spectra.push((
                format!("t={t:.6}"),
                match_targets(&spec.eigenvalues, &targets)
                    .into_iter()
                    .map(|(z, y)| SpectrumRow {
                        re: z.re,
                        im: z.im,
                        target_re: y.re,
                        target_im: y.im,
                    })
                    .collect(),
            ));
            per_time.push(json!({
                "t": t,
                "spectrum": spec,
                "targets": targets,
                "distance": distance,
                "tolerance": ts,
                "unimodular_defect": unimodular,
                "unimodular_tolerance": tu,
                "pass": ok,
            }));
        }
        Ok(Outcome {
            pass,
            results: json!({ "times": per_time }),
            tables,
        })
    }

    fn hs_series(&mut self) -> Result<Outcome> {
        let hc = self.cfg.hs.clone();
        let k_range = self.cfg.riesz_k;
        let (t_sat, t_or, t_slope, t_cross) = (
            self.cfg.tolerance("hs_saturation"),
            self.cfg.tolerance("hs_oracle"),
            self.cfg.tolerance("r2_slope"),
            self.cfg.tolerance("r2_cross_check"),
        );
        let w = self.cocycle()?;
        let basis = HsBasis::Blocks { window: hc.window };
        let reports = hc
            .basis_dims
            .iter()
            .map(|&d| hs_defect_norm(w, hc.t, d, basis))
            .collect::<Result<Vec<_>>>()?;
        let totals: Vec<f64> = reports.iter().map(|r| r.total).collect();
        let monotone = totals.windows(2).all(|p| p[1] >= p[0] - 1e-12);
        let saturation = match totals.as_slice() {
            [.., a, b] if *a > 0.0 => (b - a).abs() / a,
            [.., a, b] if a == b => 0.0,
            [.., _, _] => f64::INFINITY,
            _ => 0.0,
        };
        let triangle = reports
            .iter()
            .all(|r| r.total <= 2.0 * (r.r1() + r.r2()) + 1e-12);
        let finest = *hc.basis_dims.iter().max().unwrap_or(&0);
        let oracle = dense_defect_oracle(w, hc.t, finest, basis)?;
        let oracle_gap = (oracle - totals.last().copied().unwrap_or(0.0)).abs();
        let series = series_r1_r2(w, hc.t, k_range, hc.include_zero_mode)?;
        let slope_ok = series.tail_slope.is_none_or(|s| (s + 3.0).abs() <= t_slope);
        let cross = series.r2_cross_check.unwrap_or(0.0);
        let pass = monotone
            && triangle
            && saturation <= t_sat
            && oracle_gap <= t_or
            && slope_ok
            && cross <= t_cross;
        let riesz_ks: Vec<i64> =
            crate::hs::RieszExponentialBasis::new(hc.t, k_range, hc.include_zero_mode)?
                .mu
                .iter()
                .map(|(k, _)| *k)
                .collect();
        let rows = |ks: &[i64], sums: &[f64]| -> Vec<SeriesRow> {
            let mut prev = 0.0;
            ks.iter()
                .zip(sums)
                .map(|(&k, &s)| {
                    let row = SeriesRow {
                        k,
                        term: s - prev,
                        partial_sum: s,
                    };
                    prev = s;
                    row
                })
                .collect()
        };
        let r1_ks: Vec<i64> = (1..=series.partial_sums_r1.len() as i64).collect();
        let tables = Tables {
            series: vec![
                ("r1".into(), rows(&r1_ks, &series.partial_sums_r1)),
                ("r2".into(), rows(&riesz_ks, &series.partial_sums_r2)),
            ],
            spectra: vec![],
        };
        Ok(Outcome {
            pass,
            results: json!({
                "basis": basis,
                "defect": {
                    "basis_dims": hc.basis_dims,
                    "totals": totals,
                    "r1": reports.iter().map(|r| r.r1()).collect::<Vec<_>>(),
                    "r2": reports.iter().map(|r| r.r2()).collect::<Vec<_>>(),
                    "monotone": monotone,
                    "triangle_bound": triangle,
                    "saturation": saturation,
                    "saturation_tolerance": t_sat,
                    "oracle": oracle,
                    "oracle_gap": oracle_gap,
                    "oracle_tolerance": t_or,
                },
                "series": {
                    "r1": series.r1(),
                    "r2": series.r2(),
                    "tail_slope": series.tail_slope,
                    "slope_target": -3.0,
                    "slope_tolerance": t_slope,
                    "slope_pass": slope_ok,
                    "r2_cross_check": cross,
                    "cross_check_tolerance": t_cross,
                    "frame_sigma_min": series.frame_sigma_min,
                    "sum_abs_re": series.sum_abs_re,
                },
            }),
            tables,
        })
    }

    fn b2b3(&mut self) -> Result<Outcome> {
        let (t2, t3) = (self.cfg.tolerance("b2"), self.cfg.tolerance("b3"));
        let c = self.cfg.b2b3.clone();
        let w = self.cocycle()?;
        let b = w.model().blaschke();
        let mut b2 = b2_identity_check(b, C64::new(c.mu[0], c.mu[1]))?;
        b2.tolerance = t2;
        b2.pass = b2.residual <= t2;
        let mut b3 = asymptotic_check_b3(b, c.probe)?;
        b3.tolerance = t3;
        b3.pass = b3.relative_deviation <= t3;
        Ok(Outcome {
            pass: b2.pass && b3.pass,
            results: json!({ "b2": b2, "b3": b3 }),
            tables: Tables::default(),
        })
    }

    fn feldman(&mut self) -> Result<Outcome> {
        let tf = self.cfg.tolerance("feldman");
        let fc = self.cfg.feldman.clone();
        let m = self.grid.half_len();
        let w = self.cocycle()?;
        let mut r = feldman_check(w, fc.t, &fc.dims, &harmonic_covariance(m))?;
        r.tolerance = tf;
        r.pass = r.final_drift <= tf;
        Ok(Outcome {
            pass: r.pass,
            results: to_value(&r),
            tables: Tables::default(),
        })
    }

    fn wiener_mc(&mut self) -> Result<Outcome> {
        let mc = self.cfg.mc.clone();
        let tz = self.cfg.tolerance("mc_z");
        let batch = BrownianBatch::new(mc.batch())?.with_execution(self.exec);
        let a = match &mc.a_spec {
            ASpec::Constant(c) => WienerCocycleConfig::constant(*c, &batch, mc.variant, mc.t)?,
            ASpec::Samples(s) => WienerCocycleConfig::new(s.clone(), mc.variant, mc.t)?,
        };
        let probes: Vec<Probe> = mc.probe_times.iter().map(|&r| Probe::Value(r)).collect();
        let mut iso = mc_isometry_test(&batch, &a, &probes)?;
        iso.z_limit = tz;
        iso.pass = iso.pass.map(|_| iso.max_abs_z <= tz);
        let mut mart = martingale_check(&batch, &a)?;
        mart.z_limit = tz;
        mart.pass = mart.density.z.abs() <= tz;
        let [cs, ct] = mc.cocycle_pair;
        let cocycle = match mc_cocycle_test(&batch, &a, cs, ct, &probes) {
            Ok(mut r) => {
                r.pass = r.max_abs_z <= tz;
                Some(r)
            }
            Err(Error::Unsupported(_)) => None,
            Err(e) => return Err(e),
        };
        // a ≡ 0 must give back the untouched probes on every path
        let zero = WienerCocycleConfig::new(vec![0.0; a.a.len()], mc.variant, mc.t)?;
        let collapse = batch
            .per_path(|p| {
                probes.iter().try_fold(true, |ok, f| {
                    Ok(ok && crate::wiener::apply_to_path(p, &zero, *f)? == f.eval(p)?)
                })
            })?
            .into_iter()
            .all(|ok| ok);
        let pass = iso.pass.unwrap_or(true)
            && mart.pass
            && cocycle.as_ref().is_none_or(|c| c.pass)
            && collapse;
        Ok(Outcome {
            pass,
            results: json!({
                "isometry": iso,
                "martingale": mart,
                "cocycle": cocycle,
                "zero_drift_collapse": collapse,
            }),
            tables: Tables::default(),
        })
    }
}

pub fn run_config_with(cfg: ExperimentConfig, exec: Execution) -> Result<RunOutput> {
    Ok(Runner::new(cfg, exec)?.run())
}

pub fn run_config(path: &Path, exec: Execution) -> Result<RunOutput> {
    run_config_with(ExperimentConfig::load(path)?, exec)
}

/// Variant adjudication over the standard zero sets plus the configured one.
pub fn run_adjudication(cfg: &ExperimentConfig, exec: Execution) -> Result<Adjudication> {
    let grid = cfg.grid.build()?;
    let mut sets = adjudication_zero_sets();
    if !sets.contains(&cfg.zeros) {
        sets.push(cfg.zeros.clone());
    }
    adjudicate(grid, &sets, &cfg.times, exec)
}
