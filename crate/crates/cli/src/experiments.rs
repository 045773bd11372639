//! One runner per experiment kind. Each sweep point is an independent task
//! executed on the current rayon pool; records come back in canonical order.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::time::Instant;

use rayon::prelude::*;

use qst_core::{
    adiabatic_time_scale, adiabatic_triple, adiabaticity, bound_state, build_total_hamiltonian,
    diagonalize_medium, effective_hamiltonian, energy_gap, evolve_effective, evolve_master,
    evolve_schrodinger, max_adiabaticity, minimal_transfer_time, operator_fidelity,
    sample_disorder, solve_wavevectors, BoundState, ChainSpec, DensityMatrix, Error, Parity,
    ProtocolSpec, SearchBounds, StateVector, StepControl, Trajectory,
};

use crate::config::{
    ExperimentConfig, ExperimentKind, DEFAULT_DISTANCE, DEFAULT_J0, DEFAULT_MU0, DEFAULT_T_MAX,
};
use crate::record::{sort_records, ParamValue, SweepRecord};
use crate::CliError;

type Params = BTreeMap<String, ParamValue>;
type Records = Result<Vec<SweepRecord>, CliError>;

/// Runs the configured experiment on a pool of `config.jobs` threads.
pub fn run(config: &ExperimentConfig) -> Records {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = config.jobs {
        builder = builder.num_threads(j);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Config(format!("cannot build thread pool: {e}")))?;
    pool.install(|| match config.experiment {
        ExperimentKind::Spectrum => run_spectrum(config),
        ExperimentKind::EigenFlow => run_eigen_flow(config),
        ExperimentKind::OperatorFidelity => run_operator_fidelity(config),
        ExperimentKind::Adiabaticity => run_adiabaticity(config),
        ExperimentKind::Evolve => run_evolve(config),
        ExperimentKind::FidelitySweep => run_fidelity_sweep(config),
        ExperimentKind::MinTimeVsDistance => run_min_time_vs_distance(config),
        ExperimentKind::Robustness => run_robustness(config),
    })
}

/// One `(μ₀, J₀, d)` combination.
#[derive(Debug, Clone, Copy)]
struct Setup {
    mu0: f64,
    j0: f64,
    distance: usize,
}

impl Setup {
    fn chain(&self, cfg: &ExperimentConfig) -> Result<ChainSpec, CliError> {
        let chain = ChainSpec::new(cfg.n_sites, self.mu0)?;
        bound_state(&chain)?;
        Ok(chain)
    }

    /// `t_max` is in units of `π/J₀`.
    fn spec(&self, cfg: &ExperimentConfig, t_max: f64) -> Result<ProtocolSpec, CliError> {
        if !(self.j0 > 0.0) {
            return Err(CliError::Config(format!(
                "j0 must be positive, got {}",
                self.j0
            )));
        }
        Ok(ProtocolSpec::from_distance(
            self.chain(cfg)?,
            self.distance,
            self.j0,
            t_max * PI / self.j0,
        )?)
    }

    fn params(&self, cfg: &ExperimentConfig) -> Params {
        let mut p = Params::new();
        p.insert("n_sites".into(), cfg.n_sites.into());
        p.insert("mu0".into(), self.mu0.into());
        p.insert("j0".into(), self.j0.into());
        p.insert("distance".into(), self.distance.into());
        p
    }
}

fn mu0_list(cfg: &ExperimentConfig) -> Vec<f64> {
    cfg.mu0.clone().unwrap_or_else(|| match cfg.experiment {
        ExperimentKind::MinTimeVsDistance | ExperimentKind::OperatorFidelity => vec![0.5, 1.0],
        _ => vec![DEFAULT_MU0],
    })
}

fn j0_list(cfg: &ExperimentConfig, mu0: f64) -> Vec<f64> {
    if let Some(j0) = cfg.j0 {
        return vec![j0];
    }
    let ratios = cfg.j0_over_mu0.clone().or_else(|| match cfg.experiment {
        ExperimentKind::MinTimeVsDistance => Some(vec![0.1]),
        ExperimentKind::OperatorFidelity => Some(vec![0.02, 0.05, 0.1, 0.2, 0.4]),
        _ => None,
    });
    match ratios {
        Some(r) => r.into_iter().map(|x| x * mu0).collect(),
        None => vec![DEFAULT_J0],
    }
}

fn distance_list(cfg: &ExperimentConfig) -> Vec<usize> {
    cfg.distance
        .clone()
        .unwrap_or_else(|| match cfg.experiment {
            ExperimentKind::MinTimeVsDistance | ExperimentKind::Adiabaticity => {
                vec![5, 7, 9, 11, 13]
            }
            ExperimentKind::OperatorFidelity => vec![5, 13, 21],
            _ => vec![DEFAULT_DISTANCE],
        })
}

fn setups(cfg: &ExperimentConfig) -> Vec<Setup> {
    let mut out = Vec::new();
    for mu0 in mu0_list(cfg) {
        for j0 in j0_list(cfg, mu0) {
            for distance in distance_list(cfg) {
                out.push(Setup { mu0, j0, distance });
            }
        }
    }
    out
}

fn t_max_single(cfg: &ExperimentConfig) -> f64 {
    cfg.t_max.unwrap_or(DEFAULT_T_MAX)
}

fn t_max_grid(cfg: &ExperimentConfig) -> Vec<f64> {
    if let Some(g) = &cfg.t_max_grid {
        return g.clone();
    }
    if let Some(t) = cfg.t_max {
        return vec![t];
    }
    (2..=50).map(f64::from).collect()
}

fn with_time(mut p: Params, key: &str, t: f64, j0: f64) -> Params {
    p.insert(key.to_string(), t.into());
    p.insert(format!("{key}_pi_over_j0"), (t * j0 / PI).into());
    p
}

/// Runs `tasks` in parallel and merges the results in canonical order.
fn par_collect<T, F>(tasks: Vec<T>, f: F) -> Records
where
    T: Send + Sync,
    F: Fn(&T) -> Records + Send + Sync,
{
    let chunks: Vec<Records> = tasks
        .par_iter()
        .map(|task| {
            let start = Instant::now();
            let mut recs = f(task)?;
            let wall = start.elapsed().as_secs_f64();
            for r in &mut recs {
                r.wall_time = Some(wall);
            }
            Ok(recs)
        })
        .collect();
    let mut all = Vec::new();
    for c in chunks {
        all.extend(c?);
    }
    sort_records(&mut all);
    Ok(all)
}

fn sorted_eigenvalues(spec: &ProtocolSpec, t: f64) -> Result<Vec<f64>, CliError> {
    let h = build_total_hamiltonian(spec, t, None)?.to_dense();
    let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

fn sample_times(spec: &ProtocolSpec, samples: usize) -> Vec<f64> {
    (0..samples)
        .map(|i| spec.t_max * i as f64 / (samples - 1) as f64)
        .collect()
}

/// Lowest four total-Hamiltonian eigenvalues across the protocol.
fn flow_records(cfg: &ExperimentConfig, setup: &Setup, spec: &ProtocolSpec) -> Records {
    let base = with_time(setup.params(cfg), "t_max", spec.t_max, setup.j0);
    let mut recs = Vec::new();
    for t in sample_times(spec, cfg.samples) {
        let ev = sorted_eigenvalues(spec, t)?;
        let mut p = base.clone();
        p.insert("t".into(), t.into());
        p.insert("t_over_t_max".into(), (t / spec.t_max).into());
        for (level, e) in ev.iter().take(4).enumerate() {
            let mut q = p.clone();
            q.insert("level".into(), level.into());
            recs.push(SweepRecord::new(&q, "total_eigenvalue", *e));
        }
    }
    Ok(recs)
}

/// Analytic versus numeric medium spectrum, wavevector roots, and the
/// instantaneous eigenvalue flow.
pub fn run_spectrum(cfg: &ExperimentConfig) -> Records {
    let t_max = t_max_single(cfg);
    par_collect(setups(cfg), |s| {
        let chain = s.chain(cfg)?;
        let bound = bound_state(&chain)?;
        let numeric = diagonalize_medium(&chain);
        let roots = solve_wavevectors(&chain)?;
        let mut chain_params = Params::new();
        chain_params.insert("n_sites".into(), cfg.n_sites.into());
        chain_params.insert("mu0".into(), s.mu0.into());
        let mut recs = vec![
            SweepRecord::new(&chain_params, "bound_energy_analytic", bound.energy),
            SweepRecord::new(
                &chain_params,
                "bound_energy_numeric",
                numeric.eigenvalues[0],
            ),
            SweepRecord::new(&chain_params, "gap_analytic", energy_gap(&chain)),
            SweepRecord::new(&chain_params, "gap_numeric", numeric.gap()),
            SweepRecord::new(&chain_params, "bound_q", bound.q),
            SweepRecord::new(&chain_params, "bound_norm_lambda", bound.norm_lambda),
            SweepRecord::new(&chain_params, "root_count", roots.roots.len() as f64),
        ];
        for (i, root) in roots.roots.iter().enumerate() {
            let mut p = chain_params.clone();
            p.insert("root_index".into(), i.into());
            let parity = match root.parity {
                Parity::Odd => "odd",
                Parity::Even => "even",
            };
            p.insert("parity".into(), parity.into());
            recs.push(SweepRecord::new(&p, "root_k", root.k));
            recs.push(SweepRecord::new(&p, "root_energy", root.energy));
        }
        for (i, e) in numeric.eigenvalues.iter().enumerate() {
            let mut p = chain_params.clone();
            p.insert("level".into(), i.into());
            recs.push(SweepRecord::new(&p, "medium_eigenvalue", *e));
        }
        recs.extend(flow_records(cfg, s, &s.spec(cfg, t_max)?)?);
        Ok(recs)
    })
    .map(dedup)
}

/// Setups that differ only in `j0`/`distance` repeat the chain records.
fn dedup(mut recs: Vec<SweepRecord>) -> Vec<SweepRecord> {
    recs.dedup_by(|a, b| a.params == b.params && a.metric == b.metric && a.value == b.value);
    recs
}

/// Eigenvalue flow together with the three-level energies and the
/// ground-manifold splitting.
pub fn run_eigen_flow(cfg: &ExperimentConfig) -> Records {
    let t_max = t_max_single(cfg);
    par_collect(setups(cfg), |s| {
        let spec = s.spec(cfg, t_max)?;
        let bound = bound_state(&spec.chain)?;
        let mut recs = flow_records(cfg, s, &spec)?;
        let base = with_time(s.params(cfg), "t_max", spec.t_max, s.j0);
        for t in sample_times(&spec, cfg.samples) {
            let ev = sorted_eigenvalues(&spec, t)?;
            let h = effective_hamiltonian(&spec, &bound, t)?;
            let mut p = base.clone();
            p.insert("t".into(), t.into());
            p.insert("t_over_t_max".into(), (t / spec.t_max).into());
            recs.push(SweepRecord::new(&p, "splitting_numeric", ev[2] - ev[0]));
            recs.push(SweepRecord::new(
                &p,
                "splitting_effective",
                2.0 * h.omega_a.hypot(h.omega_b),
            ));
            if let Ok(tr) = adiabatic_triple(&h) {
                recs.push(SweepRecord::new(&p, "effective_energy_minus", tr.e_minus));
                recs.push(SweepRecord::new(&p, "effective_energy_zero", tr.e_zero));
                recs.push(SweepRecord::new(&p, "effective_energy_plus", tr.e_plus));
            }
        }
        Ok(recs)
    })
}

/// Dark-state operator fidelity at the protocol midpoint.
pub fn run_operator_fidelity(cfg: &ExperimentConfig) -> Records {
    let t_max = t_max_single(cfg);
    par_collect(setups(cfg), |s| {
        let spec = s.spec(cfg, t_max)?;
        let mut p = s.params(cfg);
        p.insert("j0_over_mu0".into(), (s.j0 / s.mu0).into());
        Ok(vec![SweepRecord::new(
            &p,
            "operator_fidelity",
            operator_fidelity(&spec)?,
        )])
    })
}

/// Adiabaticity scalars per `t_max`, plus the time profile when a single
/// duration is requested.
pub fn run_adiabaticity(cfg: &ExperimentConfig) -> Records {
    let grid = cfg
        .t_max_grid
        .clone()
        .unwrap_or_else(|| vec![t_max_single(cfg)]);
    let profile = cfg.t_max_grid.is_none();
    let tasks: Vec<(Setup, f64)> = setups(cfg)
        .into_iter()
        .flat_map(|s| grid.iter().map(move |&t| (s, t)))
        .collect();
    par_collect(tasks, |(s, t_max)| {
        let spec = s.spec(cfg, *t_max)?;
        let bound = bound_state(&spec.chain)?;
        let p = with_time(s.params(cfg), "t_max", spec.t_max, s.j0);
        let a_max = max_adiabaticity(&spec, &bound)?;
        let times = sample_times(&spec, cfg.samples);
        let mut profile_values = Vec::with_capacity(times.len());
        for &t in &times {
            profile_values.push(adiabaticity(&spec, &bound, t)?);
        }
        let grid_max = profile_values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        let mut recs = vec![
            SweepRecord::new(&p, "a_max", a_max),
            SweepRecord::new(&p, "a_max_times_t_max", a_max * spec.t_max),
            SweepRecord::new(&p, "a_max_grid", grid_max),
            SweepRecord::new(
                &p,
                "adiabatic_time_scale",
                adiabatic_time_scale(&spec, &bound)?,
            ),
            SweepRecord::new(
                &p,
                "endpoint_overlap",
                bound.amplitude(spec.attachment_sites().0),
            ),
        ];
        if profile {
            for (&t, &a) in times.iter().zip(&profile_values) {
                let mut q = p.clone();
                q.insert("t".into(), t.into());
                q.insert("t_over_t_max".into(), (t / spec.t_max).into());
                recs.push(SweepRecord::new(&q, "adiabaticity", a));
            }
        }
        Ok(recs)
    })
}

fn first<T: Copy>(v: &Option<Vec<T>>, default: T) -> T {
    v.as_ref()
        .and_then(|v| v.first().copied())
        .unwrap_or(default)
}

fn trajectory_summary(p: &Params, traj: &Trajectory) -> Vec<SweepRecord> {
    let seed = traj.seed;
    let mut recs = vec![
        SweepRecord::new(p, "fidelity", qst_core::metrics::transfer_fidelity(traj)),
        SweepRecord::new(p, "norm_drift", traj.max_norm_drift),
    ];
    if let Some(m) = traj.min_eigenvalue {
        recs.push(SweepRecord::new(p, "min_eigenvalue", m));
    }
    if let Some(h) = traj.max_hermiticity_error {
        recs.push(SweepRecord::new(p, "hermiticity_error", h));
    }
    if let Some(c) = traj.halving_change {
        recs.push(SweepRecord::new(p, "halving_change", c));
    }
    recs.into_iter()
        .map(|r| r.with_seed(seed).with_step(traj.step))
        .collect()
}

struct Run {
    method: &'static str,
    traj: Trajectory,
}

/// Full-space run honouring disorder and dephasing, or the clean
/// three-level model.
fn simulate(
    spec: &ProtocolSpec,
    bound: &BoundState,
    effective: bool,
    delta: f64,
    gamma: f64,
    seed: u64,
    samples: usize,
) -> Result<Run, CliError> {
    if effective {
        let traj = evolve_effective(spec, bound, &StateVector::basis(3, 0), samples)?;
        return Ok(Run {
            method: "effective",
            traj,
        });
    }
    let disorder = if delta > 0.0 {
        Some(sample_disorder(delta, &spec.chain, seed)?)
    } else {
        None
    };
    let traj = if gamma > 0.0 {
        let rho = DensityMatrix::pure(&StateVector::at_a(spec));
        evolve_master(spec, disorder.as_ref(), gamma, &rho, samples)?
    } else {
        evolve_schrodinger(spec, disorder.as_ref(), &StateVector::at_a(spec), samples)?
    };
    Ok(Run {
        method: "full",
        traj,
    })
}

fn noise_params(mut p: Params, delta: f64, gamma_over_j0: f64, j0: f64) -> Params {
    p.insert("delta".into(), delta.into());
    p.insert("gamma_over_j0".into(), gamma_over_j0.into());
    p.insert("gamma".into(), (gamma_over_j0 * j0).into());
    p
}

/// Population time series of a single protocol run.
pub fn run_evolve(cfg: &ExperimentConfig) -> Records {
    let t_max = t_max_single(cfg);
    let delta = first(&cfg.delta, 0.0);
    let gamma_over_j0 = first(&cfg.gamma, 0.0);
    let mut tasks = Vec::new();
    for s in setups(cfg) {
        if cfg.method.includes_full() {
            tasks.push((s, false));
        }
        if cfg.method.includes_effective() {
            tasks.push((s, true));
        }
    }
    par_collect(tasks, |(s, effective)| {
        let spec = s.spec(cfg, t_max)?;
        let bound = bound_state(&spec.chain)?;
        let run = simulate(
            &spec,
            &bound,
            *effective,
            delta,
            gamma_over_j0 * s.j0,
            cfg.seed,
            cfg.samples,
        )?;
        let mut p = with_time(s.params(cfg), "t_max", spec.t_max, s.j0);
        p.insert("method".into(), run.method.into());
        if !effective {
            p = noise_params(p, delta, gamma_over_j0, s.j0);
        }
        let traj = &run.traj;
        let mut recs = trajectory_summary(&p, traj);
        for i in 0..traj.len() {
            let q = with_time(p.clone(), "t", traj.times[i], s.j0);
            for (metric, v) in [
                ("pop_a", traj.pop_a[i]),
                ("pop_b", traj.pop_b[i]),
                ("pop_defect", traj.pop_defect[i]),
                ("pop_medium", traj.pop_medium[i]),
            ] {
                recs.push(
                    SweepRecord::new(&q, metric, v)
                        .with_seed(traj.seed)
                        .with_step(traj.step),
                );
            }
        }
        Ok(recs)
    })
}

/// Final transfer fidelity across a grid of durations.
pub fn run_fidelity_sweep(cfg: &ExperimentConfig) -> Records {
    let grid = t_max_grid(cfg);
    let mut tasks = Vec::new();
    for s in setups(cfg) {
        for &t in &grid {
            if cfg.method.includes_full() {
                tasks.push((s, t, false));
            }
            if cfg.method.includes_effective() {
                tasks.push((s, t, true));
            }
        }
    }
    par_collect(tasks, |(s, t_max, effective)| {
        let spec = s.spec(cfg, *t_max)?;
        let bound = bound_state(&spec.chain)?;
        let run = simulate(&spec, &bound, *effective, 0.0, 0.0, cfg.seed, 2)?;
        let mut p = with_time(s.params(cfg), "t_max", spec.t_max, s.j0);
        p.insert("method".into(), run.method.into());
        Ok(trajectory_summary(&p, &run.traj))
    })
}

/// Ensemble statistics of the transfer fidelity under coupling disorder and
/// dephasing. Realization `i` uses seed `seed + i`; without disorder every
/// realization coincides and a single run is made.
pub fn run_robustness(cfg: &ExperimentConfig) -> Records {
    let grid = t_max_grid(cfg);
    let deltas = cfg.delta.clone().unwrap_or_else(|| vec![0.0]);
    let gammas = cfg.gamma.clone().unwrap_or_else(|| vec![0.0]);
    let mut tasks = Vec::new();
    for s in setups(cfg) {
        for &delta in &deltas {
            for &g in &gammas {
                for &t in &grid {
                    let n = if delta > 0.0 { cfg.realizations } else { 1 };
                    for i in 0..n {
                        tasks.push((s, delta, g, t, cfg.seed.wrapping_add(i as u64)));
                    }
                }
            }
        }
    }
    let singles = par_collect(tasks, |(s, delta, g, t_max, seed)| {
        let spec = s.spec(cfg, *t_max)?;
        let bound = bound_state(&spec.chain)?;
        let run = simulate(&spec, &bound, false, *delta, g * s.j0, *seed, 2)?;
        let p = noise_params(
            with_time(s.params(cfg), "t_max", spec.t_max, s.j0),
            *delta,
            *g,
            s.j0,
        );
        Ok(trajectory_summary(&p, &run.traj))
    })?;

    let fidelities: Vec<&SweepRecord> = singles.iter().filter(|r| r.metric == "fidelity").collect();
    let mut out = singles.clone();
    for members in fidelities.chunk_by(|a, b| a.params == b.params) {
        let params = &members[0].params;
        let f: Vec<f64> = members.iter().map(|r| r.value).collect();
        let n = f.len() as f64;
        let mean = f.iter().sum::<f64>() / n;
        let var = if f.len() > 1 {
            f.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        let step = members[0].step;
        for (metric, v) in [
            ("fidelity_mean", mean),
            ("fidelity_std", var.sqrt()),
            (
                "fidelity_min",
                f.iter().copied().fold(f64::INFINITY, f64::min),
            ),
            (
                "fidelity_max",
                f.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            ),
            ("ensemble_size", n),
        ] {
            let mut r = SweepRecord::new(params, metric, v);
            r.step = step;
            out.push(r);
        }
    }
    sort_records(&mut out);
    Ok(out)
}

/// Least-squares line `y = slope·x + intercept` and its coefficient of
/// determination.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - slope * x - intercept).powi(2))
        .sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let r2 = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else {
        1.0
    };
    (slope, intercept, r2)
}

/// Minimal transfer time per distance, with a log-linear fit per `(μ₀, J₀)`.
///
/// `log_t_min` is the natural log of the time in units of `π/J`. A point
/// whose search window never reaches the target yields a
/// `min_time_not_found` record carrying the best fidelity seen.
pub fn run_min_time_vs_distance(cfg: &ExperimentConfig) -> Records {
    let points = par_collect(setups(cfg), |s| {
        let template = s.spec(cfg, cfg.search_lower)?;
        let bounds = SearchBounds::in_pi_over_j0(s.j0, cfg.search_lower, cfg.search_upper);
        let p = s.params(cfg);
        match minimal_transfer_time(&template, cfg.target_error, bounds, &StepControl::default()) {
            Ok(t) => Ok(vec![
                SweepRecord::new(&p, "t_min", t),
                SweepRecord::new(&p, "t_min_pi_over_j0", t * s.j0 / PI),
                SweepRecord::new(&p, "t_min_pi_over_j", t / PI),
                SweepRecord::new(&p, "log_t_min", (t / PI).ln()),
            ]),
            Err(Error::NotFound { best_fidelity }) => Ok(vec![SweepRecord::new(
                &p,
                "min_time_not_found",
                best_fidelity,
            )]),
            Err(e) => Err(e.into()),
        }
    })?;

    let mut series: BTreeMap<(u64, u64), Vec<(f64, f64)>> = BTreeMap::new();
    for r in points.iter().filter(|r| r.metric == "log_t_min") {
        let mu0 = r.param_f64("mu0").unwrap_or(f64::NAN);
        let j0 = r.param_f64("j0").unwrap_or(f64::NAN);
        let d = r.param_f64("distance").unwrap_or(f64::NAN);
        series
            .entry((mu0.to_bits(), j0.to_bits()))
            .or_default()
            .push((d, r.value));
    }
    let mut out = points.clone();
    for ((mu0, j0), pts) in series {
        if pts.len() < 2 {
            continue;
        }
        let (xs, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
        let (slope, intercept, r2) = linear_fit(&xs, &ys);
        let mut p = Params::new();
        p.insert("n_sites".into(), cfg.n_sites.into());
        p.insert("mu0".into(), f64::from_bits(mu0).into());
        p.insert("j0".into(), f64::from_bits(j0).into());
        p.insert("fit_points".into(), xs.len().into());
        out.push(SweepRecord::new(&p, "log_fit_slope", slope));
        out.push(SweepRecord::new(&p, "log_fit_intercept", intercept));
        out.push(SweepRecord::new(&p, "log_fit_r_squared", r2));
    }
    sort_records(&mut out);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_recovers_line() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x| 0.5 * x - 1.0).collect();
        let (s, i, r2) = linear_fit(&xs, &ys);
        assert!((s - 0.5).abs() < 1e-12 && (i + 1.0).abs() < 1e-12 && (r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn per_experiment_defaults() {
        let cfg = ExperimentConfig::new(ExperimentKind::MinTimeVsDistance);
        let s = setups(&cfg);
        assert_eq!(s.len(), 10);
        assert!(s.iter().all(|s| (s.j0 / s.mu0 - 0.1).abs() < 1e-12));
        let cfg = ExperimentConfig::new(ExperimentKind::Evolve);
        let s = setups(&cfg);
        assert_eq!(s.len(), 1);
        assert_eq!((s[0].mu0, s[0].j0, s[0].distance), (1.0, 0.1, 5));
    }

    #[test]
    fn explicit_j0_overrides_ratio() {
        let mut cfg = ExperimentConfig::new(ExperimentKind::OperatorFidelity);
        cfg.j0 = Some(0.07);
        assert!(setups(&cfg).iter().all(|s| s.j0 == 0.07));
    }

    #[test]
    fn zero_defect_is_config_error() {
        let mut cfg = ExperimentConfig::new(ExperimentKind::Spectrum);
        cfg.mu0 = Some(vec![0.0]);
        let err = run_spectrum(&cfg).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }
}
