//! Experiment runners. Every random draw comes from a [`Stream`] keyed by the
//! master seed, a purpose tag and the replicate index, so reports do not
//! depend on the worker count.

use super::config::*;
use super::fit::{fit_trace, TraceFit};
use super::report::{ExperimentReport, Row};
use crate::bounds::{bound_measured, BoundResult, DecaySpec, TraceTail};
use crate::concentration::{binomial_halfwidth, chisq_tail_bound, exceeds, sample_zs, WeightSeq};
use crate::conditioning::GreedyRun;
use crate::error::{Error, Result};
use crate::kernels::{KernelSpec, PointSet};
use crate::linalg::fit_line;
use crate::real::{Mp, Precision, Real};
use crate::rng::{replicate, Stream};
use crate::sampling::{build_spectral_model, build_spectral_model_low_rank, NewtonErrors, SpectralModel};
use crate::spheres::{build_field, grid_operator_gap, sphere_bound, sphere_bound_via_blocks, ProductSphereSpec, SphereGrid};
use rand::Rng;
use statrs::distribution::{Binomial, ChiSquared, ContinuousCDF, DiscreteCDF};

const PATHS: u64 = 1;
const CHI2_DRAWS: u64 = 2;
const FIELDS: u64 = 3;
const RANDOM_WEIGHTS: u64 = 4;

/// Largest omitted Karhunen–Loève variance relative to the posterior variance `c_n` at the largest `n`.
const KL_RESOLUTION: f64 = 1e-2;
/// Relative agreement required of the two sphere-bound routes and of the operator-norm identity.
const SPHERE_REDUCTION_RTOL: f64 = 1e-12;
const OPERATOR_RTOL: f64 = 1e-8;

pub fn run(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    match cfg.experiment {
        ExperimentKind::Greedy | ExperimentKind::GpConcentration => {
            let gp = cfg.gp.as_ref().unwrap();
            match gp.precision {
                Precision::Double => run_gp::<f64>(cfg, gp, |k, g, b| build_spectral_model(k, g, b)),
                Precision::Extended => run_gp::<Mp>(cfg, gp, build_spectral_model_low_rank::<Mp>),
            }
        }
        ExperimentKind::Chi2 => run_chi2(cfg, cfg.chi2.as_ref().unwrap()),
        ExperimentKind::Spheres => run_spheres(cfg, cfg.spheres.as_ref().unwrap()),
        ExperimentKind::BoundTable => run_bound_table(cfg, &cfg.bound_table.as_ref().unwrap().decay),
    }
}

/// [`run`] on a dedicated pool of `workers` threads (all cores when `None`).
pub fn run_with_workers(cfg: &ExperimentConfig, workers: Option<usize>) -> Result<ExperimentReport> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.unwrap_or(0))
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    pool.install(|| run(cfg))
}

/// Weights of a chi-square family; `index` keys the random family's stream.
pub(crate) fn weights(f: &WeightFamily, seed: u64, index: usize) -> Result<WeightSeq> {
    match f {
        WeightFamily::Geometric { scale, ratio } => WeightSeq::geometric(*scale, *ratio),
        WeightFamily::Power { coef, exponent } => WeightSeq::power(*coef, *exponent),
        WeightFamily::Finite { values } => WeightSeq::finite(values.clone()),
        WeightFamily::RandomFinite { len } => {
            let mut rng = Stream::new(Stream::derive(seed, RANDOM_WEIGHTS), index as u64).rng();
            WeightSeq::finite((0..*len).map(|_| rng.random::<f64>()).collect())
        }
    }
}

/// Empirical quantile at level `q` with a 95% distribution-free interval
/// between order statistics from the Binomial(m, q) quantiles.
pub fn quantile_with_interval(sorted: &[f64], q: f64) -> (f64, f64, f64) {
    let m = sorted.len();
    let k = ((q * m as f64).ceil() as usize).clamp(1, m);
    let b = Binomial::new(q, m as u64).expect("q in (0,1)");
    let lo = (b.inverse_cdf(0.025) as usize).clamp(1, m);
    let hi = (b.inverse_cdf(0.975) as usize + 1).clamp(1, m);
    (sorted[k - 1], sorted[lo - 1], sorted[hi - 1])
}

/// `e^{−τ} + 3σ` at `p = e^{−τ}`.
pub fn rate_limit(tau: f64, m: usize) -> f64 {
    let p = (-tau).exp();
    p + binomial_halfwidth(p, m)
}

/// Fills the Monte-Carlo columns of `row` from one error sample against `radius`.
fn fill_mc(row: &mut Row, errors: &[f64], radius: f64, tau: f64) {
    let m = errors.len();
    if m == 0 {
        return;
    }
    let mut sorted = errors.to_vec();
    sorted.sort_by(f64::total_cmp);
    let (q, lo, hi) = quantile_with_interval(&sorted, -(-tau).exp_m1());
    let violations = errors.iter().filter(|&&e| e > radius).count();
    let rate = violations as f64 / m as f64;
    let limit = rate_limit(tau, m);
    row.quantile = Some(q);
    row.quantile_lo = Some(lo);
    row.quantile_hi = Some(hi);
    row.samples = m;
    row.violations = Some(violations);
    row.rate = Some(rate);
    row.rate_limit = Some(limit);
    row.pass = Some(rate <= limit);
}

fn with_bound(mut row: Row, b: &BoundResult) -> Row {
    row.bound = Some(b.radius);
    row.source = Some(b.source.id().into());
    row.valid = Some(b.valid);
    row
}

fn with_secondary(mut row: Row, b: &BoundResult) -> Row {
    row.secondary_bound = Some(b.radius);
    row.secondary_source = Some(b.source.id().into());
    row.secondary_valid = Some(b.valid);
    row
}

fn violation_check(report: &mut ExperimentReport, what: &str, row: &Row) {
    if let (Some(rate), Some(limit)) = (row.rate, row.rate_limit) {
        let name = match row.n {
            Some(n) => format!("{what} {} n={n} tau={}", row.series, row.tau.unwrap_or(f64::NAN)),
            None => format!("{what} {} tau={}", row.series, row.tau.unwrap_or(f64::NAN)),
        };
        report.check(
            name,
            rate <= limit,
            format!("rate {rate:.5} vs limit {limit:.5} ({} samples)", row.samples),
        );
    }
}

/// Transposes per-replicate results into per-schedule columns.
fn columns(per_replicate: &[Vec<f64>], k: usize) -> Vec<Vec<f64>> {
    (0..k).map(|i| per_replicate.iter().map(|r| r[i]).collect()).collect()
}

fn run_gp<R: Real>(
    cfg: &ExperimentConfig,
    gp: &GpConfig,
    build: impl Fn(&KernelSpec, &PointSet, f64) -> Result<SpectralModel<R>>,
) -> Result<ExperimentReport> {
    let mut report = ExperimentReport::default();
    let spec = gp.kernel.spec()?;
    let grid = PointSet::uniform_grid(gp.resolution, gp.kernel.dim())?;
    let nmax = *cfg.schedule.last().unwrap();
    let mut run = GreedyRun::<R>::new(spec.clone(), grid.clone())?;
    run.run_to(nmax)?;
    let trace = run.trace();
    let c = &trace.values;
    let label = spec.label();

    let fit = fit_trace(c, &gp.fit);
    if let Ok(f) = &fit {
        report.summary.insert("fit_slope".into(), f.slope);
        report.summary.insert("fit_r_squared".into(), f.r_squared);
        match f.envelope {
            super::fit::Envelope::Polynomial { c, alpha } => {
                report.summary.insert("fit_c".into(), c);
                report.summary.insert("fit_alpha".into(), alpha);
            }
            super::fit::Envelope::Exponential { c1, c2, alpha } => {
                report.summary.insert("fit_c1".into(), c1);
                report.summary.insert("fit_c2".into(), c2);
                report.summary.insert("fit_alpha".into(), alpha);
            }
        }
    }
    gp_expectations(&mut report, gp, &fit);
    let accepted: Option<TraceFit> = match fit.and_then(|f| f.accepted(gp.fit.min_r2)) {
        Ok(f) => Some(f),
        Err(Error::FitFailure(msg)) => {
            report.notes.push(format!("fit failure, model-free bound only: {msg}"));
            None
        }
        Err(e) => return Err(e),
    };
    let decay: Option<DecaySpec> = match accepted.map(|f| f.envelope.decay()) {
        Some(Ok(d)) => Some(d),
        Some(Err(e)) => {
            report.notes.push(format!("fitted envelope outside the closed form's domain: {e}"));
            None
        }
        None => None,
    };
    let tail = match &accepted {
        Some(f) => TraceTail::Model(f.envelope.sequence()),
        None => TraceTail::Exhaustion { grid_size: trace.grid_size },
    };
    report.summary.insert("grid_size".into(), trace.grid_size as f64);

    if cfg.experiment == ExperimentKind::Greedy {
        for n in 0..=nmax {
            report.rows.push(Row {
                series: label.clone(),
                n: Some(n),
                value: Some(c[n]),
                reference: accepted.map(|f| f.envelope.value(n)),
                ..Row::default()
            });
        }
        return Ok(report);
    }

    let mut errors: Option<Vec<Vec<f64>>> = None;
    if cfg.replicates > 0 {
        let model = build(&spec, &grid, gp.tail_budget)?;
        report.summary.insert("kl_rank".into(), model.rank() as f64);
        report.summary.insert("kl_discarded_relative".into(), model.discarded_mass() / model.trace());
        report.summary.insert("kl_max_tail_variance".into(), model.max_tail_variance());
        report.notes.push(format!(
            "paths omit Karhunen–Loève modes beyond rank {}; pointwise omitted variance is at most {:e}",
            model.rank(),
            model.max_tail_variance()
        ));
        let last = cfg.schedule.iter().copied().max().unwrap_or(0);
        report.check(
            "omitted path variance resolves the largest design",
            model.max_tail_variance() <= KL_RESOLUTION * c[last],
            format!(
                "omitted variance {:e} vs {KL_RESOLUTION} c_{last} = {:e}",
                model.max_tail_variance(),
                KL_RESOLUTION * c[last]
            ),
        );
        let newton = NewtonErrors::new(&run);
        let seed = Stream::derive(cfg.seed, PATHS);
        let per = replicate(cfg.replicates, |i| {
            let path = model.sample_path(Stream::new(seed, i));
            newton
                .errors(&path.values, &cfg.schedule)
                .map(|v| v.iter().map(R::to_f64).collect::<Vec<f64>>())
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        errors = Some(columns(&per, cfg.schedule.len()));
    }

    let mut above = 0;
    for (k, &n) in cfg.schedule.iter().enumerate() {
        for &tau in &cfg.taus {
            let primary = bound_measured(c, &tail, n, tau)?;
            let mut row = with_bound(
                Row {
                    series: label.clone(),
                    n: Some(n),
                    tau: Some(tau),
                    value: Some(c[n]),
                    reference: accepted.map(|f| f.envelope.value(n)),
                    ..Row::default()
                },
                &primary,
            );
            if let Some(d) = &decay {
                let b = d.bound(n, tau)?;
                if primary.radius > b.radius {
                    above += 1;
                }
                row = with_secondary(row, &b);
            }
            if let Some(e) = &errors {
                fill_mc(&mut row, &e[k], primary.radius, tau);
                violation_check(&mut report, "violation rate", &row);
                if let Some(sec) = row.secondary_bound {
                    let v = e[k].iter().filter(|&&x| x > sec).count() as f64 / e[k].len() as f64;
                    let limit = rate_limit(tau, e[k].len());
                    report.check(
                        format!("secondary violation rate {label} n={n} tau={tau}"),
                        v <= limit,
                        format!("rate {v:.5} vs limit {limit:.5}"),
                    );
                }
            }
            report.rows.push(row);
        }
    }
    if decay.is_some() {
        report.summary.insert("model_free_above_closed_form".into(), above as f64);
        if above > 0 {
            report.notes.push(format!(
                "model-free bound exceeds the fitted closed-form bound in {above} cells"
            ));
        }
    }
    if gp.expect.concave_log_bound {
        let tau = cfg.taus[0];
        let pts: Vec<(f64, f64)> = report
            .rows
            .iter()
            .filter(|r| r.tau == Some(tau))
            .map(|r| (r.n.unwrap() as f64, r.bound.unwrap().ln()))
            .collect();
        let slopes: Vec<f64> = pts.windows(2).map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0)).collect();
        let concave = slopes.windows(2).all(|s| s[1] <= s[0]);
        report.check(
            "log model-free bound concave in n",
            concave,
            format!("successive slopes {slopes:?}"),
        );
    }
    Ok(report)
}

fn gp_expectations(report: &mut ExperimentReport, gp: &GpConfig, fit: &Result<TraceFit>) {
    let (slope, r2) = match fit {
        Ok(f) => (f.slope, f.r_squared),
        Err(_) => (f64::NAN, f64::NAN),
    };
    if let Some(max) = gp.expect.max_slope {
        report.check(
            "trace slope",
            slope <= max,
            format!("slope {slope:.4} over n in [{}, {:?}] vs at most {max}", gp.fit.from, gp.fit.to),
        );
    }
    if let Some(min) = gp.expect.min_r2 {
        report.check("trace fit R²", r2 >= min, format!("R² {r2:.5} vs at least {min}"));
    }
}

fn run_chi2(cfg: &ExperimentConfig, c: &Chi2Config) -> Result<ExperimentReport> {
    let mut report = ExperimentReport::default();
    let m = cfg.replicates;
    for (i, fam) in c.families.iter().enumerate() {
        let b = weights(fam, cfg.seed, i)?;
        let label = fam.label();
        let z = if m > 0 {
            Some(sample_zs(&b, m, Stream::derive(cfg.seed, CHI2_DRAWS + ((i as u64) << 8)))?)
        } else {
            None
        };
        // exact law for one weight: b(r² − 1) ≥ t iff r² ≥ 1 + t/b
        let single = match fam {
            WeightFamily::Finite { values } if values.len() == 1 && values[0] > 0.0 => Some(values[0]),
            _ => None,
        };
        for &tau in &cfg.taus {
            let radius = chisq_tail_bound(&b, tau)?;
            let mut row = Row {
                series: label.clone(),
                tau: Some(tau),
                bound: Some(radius),
                source: Some("chi-square-tail".into()),
                valid: Some(true),
                ..Row::default()
            };
            if let Some(w) = single {
                row.reference = Some(ChiSquared::new(1.0).unwrap().sf(1.0 + radius / w));
            }
            if let Some(z) = &z {
                let mut sorted = z.clone();
                sorted.sort_by(f64::total_cmp);
                let (q, lo, hi) = quantile_with_interval(&sorted, -(-tau).exp_m1());
                let violations = z.iter().filter(|&&x| exceeds(x, radius)).count();
                let rate = violations as f64 / m as f64;
                let limit = rate_limit(tau, m);
                row.quantile = Some(q);
                row.quantile_lo = Some(lo);
                row.quantile_hi = Some(hi);
                row.samples = m;
                row.violations = Some(violations);
                row.rate = Some(rate);
                row.rate_limit = Some(limit);
                row.pass = Some(rate <= limit);
                violation_check(&mut report, "violation rate", &row);
                if let Some(p) = row.reference {
                    let tol = binomial_halfwidth(p, m);
                    report.check(
                        format!("exact tail {label} tau={tau}"),
                        (rate - p).abs() <= tol,
                        format!("rate {rate:.5} vs exact {p:.5} ± {tol:.5}"),
                    );
                }
            }
            report.rows.push(row);
        }
    }
    Ok(report)
}

fn sphere_grid(d: usize, degree: usize) -> SphereGrid {
    match d {
        1 => SphereGrid::circle(2 * degree + 2),
        _ => SphereGrid::sphere(degree),
    }
}

fn run_spheres(cfg: &ExperimentConfig, s: &SpheresConfig) -> Result<ExperimentReport> {
    let mut report = ExperimentReport::default();
    let spec = ProductSphereSpec::new(s.d1, s.d2, s.c, s.alpha, s.jmax, s.explicit_degree)?;
    let label = format!("S{}xS{}(alpha={},C={})", s.d1, s.d2, s.alpha, s.c);
    report.summary.insert("jmax".into(), spec.jmax as f64);
    report.summary.insert("coefficients".into(), spec.coefficient_count() as f64);
    if let Some(&n) = cfg.schedule.iter().find(|&&n| n > spec.jmax) {
        return Err(Error::InvalidParameter(format!(
            "schedule reaches n = {n} beyond J_max = {}",
            spec.jmax
        )));
    }

    let errors = if cfg.replicates > 0 {
        let seed = Stream::derive(cfg.seed, FIELDS);
        let per = replicate(cfg.replicates, |i| {
            let f = build_field(&spec, Stream::new(seed, i));
            cfg.schedule
                .iter()
                .map(|&n| f.l2_truncation_error(Some(n)))
                .collect::<Result<Vec<f64>>>()
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        Some(columns(&per, cfg.schedule.len()))
    } else {
        None
    };

    let mut worst_reduction: f64 = 0.0;
    let mut medians = Vec::new();
    for (k, &n) in cfg.schedule.iter().enumerate() {
        let median = errors.as_ref().map(|e| {
            let mut v = e[k].clone();
            v.sort_by(f64::total_cmp);
            quantile_with_interval(&v, 0.5).0
        });
        if let Some(m) = median {
            medians.push((n as f64, m));
        }
        for &tau in &cfg.taus {
            let a = sphere_bound(&spec, n, tau)?;
            let b = sphere_bound_via_blocks(&spec, n, tau)?;
            worst_reduction = worst_reduction.max(((a.radius - b.radius) / b.radius).abs());
            let mut row = with_secondary(
                with_bound(
                    Row {
                        series: label.clone(),
                        n: Some(n),
                        tau: Some(tau),
                        value: median,
                        ..Row::default()
                    },
                    &a,
                ),
                &b,
            );
            if let Some(e) = &errors {
                fill_mc(&mut row, &e[k], a.radius, tau);
                violation_check(&mut report, "violation rate", &row);
            }
            report.rows.push(row);
        }
    }
    report.summary.insert("bound_reduction_max_rel_diff".into(), worst_reduction);
    report.check(
        "sphere bound equals blocked polynomial reduction",
        worst_reduction <= SPHERE_REDUCTION_RTOL,
        format!("max relative difference {worst_reduction:e}"),
    );
    if medians.len() >= 2 {
        let x: Vec<f64> = medians.iter().map(|p| p.0.ln()).collect();
        let y: Vec<f64> = medians.iter().map(|p| p.1.ln()).collect();
        let line = fit_line(&x, &y)?;
        report.summary.insert("median_error_slope".into(), line.slope);
        let model_y: Vec<f64> = medians
            .iter()
            .map(|p| 0.5 * spec.expected_sq_error(p.0 as usize).ln())
            .collect();
        let model = fit_line(&x, &model_y)?;
        report.summary.insert("rms_error_slope_model".into(), model.slope);
        report.notes.push(format!(
            "slope of the exact root-mean-square truncation error over the same degrees: {:.4}",
            model.slope
        ));
        let max = -s.alpha + s.slope_slack;
        report.check(
            "median truncation error slope",
            line.slope <= max,
            format!("slope {:.4} vs at most {max}", line.slope),
        );
    }

    if let Some(jc) = s.operator_degree {
        let (g1, g2) = (sphere_grid(s.d1, jc), sphere_grid(s.d2, jc));
        let mut worst: f64 = 0.0;
        for n in 0..jc {
            let gap = grid_operator_gap(&spec, &g1, &g2, jc, n)?;
            let want = spec.coefficient_variance(n + 1);
            let rel = ((gap - want) / want).abs();
            worst = worst.max(rel);
            report.rows.push(Row {
                series: "operator-gap".into(),
                n: Some(n),
                value: Some(gap),
                reference: Some(want),
                pass: Some(rel <= OPERATOR_RTOL),
                ..Row::default()
            });
        }
        report.summary.insert("operator_gap_max_rel_err".into(), worst);
        report.check(
            "operator-norm gap equals next coefficient variance",
            worst <= OPERATOR_RTOL,
            format!("max relative error {worst:e} over n < {jc}"),
        );
    }
    Ok(report)
}

fn run_bound_table(cfg: &ExperimentConfig, decay: &DecaySpec) -> Result<ExperimentReport> {
    let mut report = ExperimentReport::default();
    let label = match decay {
        DecaySpec::Polynomial { c, alpha } => format!("polynomial(C={c},alpha={alpha})"),
        DecaySpec::PolynomialMulti { c, alpha, c_d, beta } => {
            format!("polynomial-blocks(C={c},alpha={alpha},Cd={c_d},beta={beta})")
        }
        DecaySpec::Exponential { c1, c2, alpha } => format!("exponential(C1={c1},C2={c2},alpha={alpha})"),
    };
    let mut worst = f64::INFINITY;
    for &n in &cfg.schedule {
        for &tau in &cfg.taus {
            let closed = decay.bound(n, tau)?;
            let mut row = with_bound(
                Row {
                    series: label.clone(),
                    n: Some(n),
                    tau: Some(tau),
                    ..Row::default()
                },
                &closed,
            );
            match decay.numeric_bound(n, tau) {
                Ok(numeric) => {
                    if closed.valid {
                        worst = worst.min(closed.radius / numeric.radius);
                    }
                    row = with_secondary(row, &numeric);
                }
                Err(e) => report.notes.push(format!("numeric bound at n={n}, tau={tau}: {e}")),
            }
            report.rows.push(row);
        }
    }
    if worst.is_finite() {
        report.summary.insert("min_closed_over_numeric".into(), worst);
        report.check(
            "closed form dominates numeric tail sums",
            worst >= 1.0 - 1e-12,
            format!("smallest ratio {worst:.6}"),
        );
    }
    Ok(report)
}
