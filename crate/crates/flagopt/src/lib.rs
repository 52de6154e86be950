//! Benchmark harness behind the `flagopt` binary: seeded experiment
//! drivers for convergence trajectories and accuracy/timing sweeps, plus a
//! randomized property suite over every geometric invariant of the
//! library.
//!
//! Experiments are reproducible: a master seed derives one child seed per
//! trial through a fixed mixing function, each trial draws its own
//! symmetric Gaussian matrix and starting flag, and aggregation is a
//! deterministic reduction in trial order. Timing fields are the only
//! nondeterministic outputs.

pub mod output;
pub mod properties;

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use flag_manifold::calculus::ObjectiveFunction;
use flag_manifold::objectives::{
    eigenflag_objective, gaussian_symmetric, principal_flag_objective, true_principal_flag,
};
use flag_manifold::solver::{
    conjugate_gradient, newton_solve, steepest_descent, SolveResult, SolverConfig, Termination,
};
use flag_manifold::{FlagSignature, StiefelPoint};

pub use properties::{run_property_suite, PropertyCheck, PropertyReport};

/// Benchmark problems.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Problem {
    /// Maximize `tr(Y^T M Y)`; the optimum is the sum of the top `n_d`
    /// eigenvalues of `M`, attained on flags whose largest subspace is the
    /// top eigenspace.
    Principal,
    /// Maximize `sum_i tr(Y_i^T M Y_i)^2`; no closed-form optimum.
    Eigenflag,
}

impl Problem {
    pub fn objective(
        self,
        m: flag_manifold::nalgebra::DMatrix<f64>,
        sig: &FlagSignature,
    ) -> ObjectiveFunction {
        match self {
            Problem::Principal => principal_flag_objective(m, sig.clone()),
            Problem::Eigenflag => eigenflag_objective(m, sig.clone()),
        }
        .expect("gaussian_symmetric output is square and symmetric")
    }
}

/// Which iteration drives the benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    Sd,
    Cg,
    Newton,
}

impl SolverKind {
    pub fn run(
        self,
        f: &ObjectiveFunction,
        p0: &StiefelPoint,
        cfg: &SolverConfig,
    ) -> flag_manifold::Result<SolveResult> {
        match self {
            SolverKind::Sd => steepest_descent(f, p0, cfg),
            SolverKind::Cg => conjugate_gradient(f, p0, cfg),
            SolverKind::Newton => newton_solve(f, p0, cfg),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    pub fn extension(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

/// Everything one trajectory or sweep run needs.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub problem: Problem,
    pub sig: FlagSignature,
    pub seed: u64,
    pub trials: usize,
    pub solver: SolverKind,
    pub solver_config: SolverConfig,
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            bail!("trials must be at least 1");
        }
        Ok(())
    }
}

/// SplitMix64 finalizer: the fixed mixing function behind all seed
/// derivation.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Child seed for trial `index` under `master`:
/// `splitmix64(master + (index + 1) * golden_gamma)`.
pub fn child_seed(master: u64, index: u64) -> u64 {
    splitmix64(master.wrapping_add((index.wrapping_add(1)).wrapping_mul(0x9e3779b97f4a7c15)))
}

/// The per-trial random inputs: the symmetric matrix and the start flag.
pub fn trial_inputs(
    sig: &FlagSignature,
    master: u64,
    trial: u64,
) -> (flag_manifold::nalgebra::DMatrix<f64>, StiefelPoint) {
    let m_seed = child_seed(master, 2 * trial);
    let p_seed = child_seed(master, 2 * trial + 1);
    (
        gaussian_symmetric(sig.ambient(), m_seed),
        StiefelPoint::random(sig, p_seed),
    )
}

/// One solved trial of a trajectory run.
#[derive(Debug)]
pub struct TrialOutcome {
    pub trial: usize,
    pub result: SolveResult,
    /// Optimal value for principal problems (none for eigenflag).
    pub f_star: Option<f64>,
    /// Representative-free distance between the final point's largest
    /// subspace and the eigenvector flag's (principal problems only).
    pub distance_to_truth: Option<f64>,
}

impl TrialOutcome {
    /// Final value of the benchmark (maximization) objective.
    pub fn final_value(&self) -> f64 {
        -self.result.final_f()
    }

    pub fn relative_gap(&self) -> Option<f64> {
        self.f_star
            .map(|fs| (self.final_value() - fs).abs() / fs.abs().max(f64::MIN_POSITIVE))
    }
}

/// Runs `trials` seeded instances of the configured problem and writes one
/// trajectory file per trial (rows `iter,f,grad_norm,step,elapsed_ms`, plus
/// `f_star,gap` columns for principal problems). The recorded `f` is the
/// benchmark's maximization value.
pub fn run_trajectory(cfg: &ExperimentConfig) -> Result<Vec<TrialOutcome>> {
    cfg.validate()?;
    let mut outcomes = Vec::with_capacity(cfg.trials);
    for trial in 0..cfg.trials {
        let (m, p0) = trial_inputs(&cfg.sig, cfg.seed, trial as u64);
        let truth = match cfg.problem {
            Problem::Principal => Some(true_principal_flag(&m, &cfg.sig)?),
            Problem::Eigenflag => None,
        };
        let objective = cfg.problem.objective(m, &cfg.sig).negated();
        let result = cfg
            .solver
            .run(&objective, &p0, &cfg.solver_config)
            .with_context(|| format!("trial {trial} failed"))?;
        let distance_to_truth = truth
            .as_ref()
            .map(|t| {
                result
                    .point
                    .projector_distance_at(&t.point, cfg.sig.depth())
            })
            .transpose()?;
        let outcome = TrialOutcome {
            trial,
            result,
            f_star: truth.as_ref().map(|t| t.value),
            distance_to_truth,
        };
        if let Some(base) = &cfg.out {
            let path = trial_path(base, trial, cfg.trials, cfg.format);
            output::write_trajectory(&path, &outcome, cfg.format)
                .with_context(|| format!("writing {}", path.display()))?;
        }
        outcomes.push(outcome);
    }
    Ok(outcomes)
}

fn trial_path(base: &Path, trial: usize, trials: usize, format: OutputFormat) -> PathBuf {
    if trials == 1 {
        return base.to_path_buf();
    }
    let stem = base
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "trajectory".into());
    let ext = base
        .extension()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| format.extension().into());
    base.with_file_name(format!("{stem}_trial{trial}.{ext}"))
}

/// What varies across a sweep.
#[derive(Debug, Clone)]
pub enum SweepAxis {
    /// Fixed subspace dimensions, swept ambient dimension `k`.
    Ambient {
        dims: Vec<usize>,
        values: Vec<usize>,
    },
    /// Swept depth `d` with dims `(2, 4, ..., 2d)` and fixed ambient `n`.
    Depth { ambient: usize, values: Vec<usize> },
}

impl SweepAxis {
    pub fn signatures(&self) -> Result<Vec<FlagSignature>> {
        match self {
            SweepAxis::Ambient { dims, values } => values
                .iter()
                .map(|&k| FlagSignature::new(dims.clone(), k).map_err(Into::into))
                .collect(),
            SweepAxis::Depth { ambient, values } => values
                .iter()
                .map(|&d| {
                    let dims: Vec<usize> = (1..=d).map(|i| 2 * i).collect();
                    FlagSignature::new(dims, *ambient).map_err(Into::into)
                })
                .collect(),
        }
    }
}

/// Aggregates of one swept configuration.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub sig: FlagSignature,
    /// Per-trial distances to the eigenvector flag's largest subspace
    /// (empty for eigenflag, which has no closed-form truth).
    pub distances: Vec<f64>,
    pub elapsed_ms: Vec<f64>,
    pub iterations: Vec<usize>,
    /// Counts of [grad_tol, step_tol, max_iters] terminations.
    pub termination_histogram: [usize; 3],
}

impl SweepRow {
    pub fn mean_distance(&self) -> Option<f64> {
        (!self.distances.is_empty())
            .then(|| self.distances.iter().sum::<f64>() / self.distances.len() as f64)
    }

    pub fn mean_elapsed_ms(&self) -> f64 {
        self.elapsed_ms.iter().sum::<f64>() / self.elapsed_ms.len() as f64
    }

    pub fn median_elapsed_ms(&self) -> f64 {
        let mut v = self.elapsed_ms.clone();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v[v.len() / 2]
    }

    pub fn mean_iterations(&self) -> f64 {
        self.iterations.iter().sum::<usize>() as f64 / self.iterations.len() as f64
    }
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
}

/// Runs `trials` instances per swept configuration and aggregates
/// distance-to-truth and timing. Per-configuration trial seeds derive from
/// the master seed and the configuration index, so a rerun with the same
/// master seed reproduces every matrix and start point.
pub fn run_sweep(
    problem: Problem,
    axis: &SweepAxis,
    trials: usize,
    seed: u64,
    solver: SolverKind,
    solver_config: &SolverConfig,
) -> Result<SweepReport> {
    if trials == 0 {
        bail!("trials must be at least 1");
    }
    let mut rows = Vec::new();
    for (config_idx, sig) in axis.signatures()?.into_iter().enumerate() {
        let config_seed = child_seed(seed, config_idx as u64);
        let mut row = SweepRow {
            sig: sig.clone(),
            distances: Vec::new(),
            elapsed_ms: Vec::new(),
            iterations: Vec::new(),
            termination_histogram: [0, 0, 0],
        };
        for trial in 0..trials {
            let (m, p0) = trial_inputs(&sig, config_seed, trial as u64);
            let truth = match problem {
                Problem::Principal => Some(true_principal_flag(&m, &sig)?),
                Problem::Eigenflag => None,
            };
            let objective = problem.objective(m, &sig).negated();
            let started = std::time::Instant::now();
            let result = solver
                .run(&objective, &p0, solver_config)
                .with_context(|| format!("{sig} trial {trial} failed"))?;
            row.elapsed_ms.push(started.elapsed().as_secs_f64() * 1e3);
            row.iterations.push(result.iterations());
            row.termination_histogram[match result.termination {
                Termination::GradTol => 0,
                Termination::StepTol => 1,
                Termination::MaxIters => 2,
            }] += 1;
            if let Some(t) = &truth {
                row.distances
                    .push(result.point.projector_distance_at(&t.point, sig.depth())?);
            }
        }
        rows.push(row);
    }
    Ok(SweepReport { rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn child_seeds_differ_and_reproduce() {
        let a = child_seed(42, 0);
        let b = child_seed(42, 1);
        let c = child_seed(43, 0);
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_eq!(a, child_seed(42, 0));
    }

    #[test]
    fn trial_inputs_are_reproducible() {
        let sig = FlagSignature::new(vec![1, 2], 6).unwrap();
        let (m1, p1) = trial_inputs(&sig, 7, 3);
        let (m2, p2) = trial_inputs(&sig, 7, 3);
        assert_eq!(m1, m2);
        assert_eq!(p1.matrix(), p2.matrix());
        let (m3, p3) = trial_inputs(&sig, 7, 4);
        assert_ne!(m1, m3);
        assert_ne!(p1.matrix(), p3.matrix());
    }

    #[test]
    fn trajectory_outcomes_track_the_truth() {
        let cfg = ExperimentConfig {
            problem: Problem::Principal,
            sig: FlagSignature::new(vec![1, 2], 8).unwrap(),
            seed: 11,
            trials: 2,
            solver: SolverKind::Sd,
            solver_config: SolverConfig::default(),
            out: None,
            format: OutputFormat::Csv,
        };
        let outcomes = run_trajectory(&cfg).unwrap();
        assert_eq!(outcomes.len(), 2);
        for o in &outcomes {
            assert!(o.relative_gap().unwrap() < 1e-6);
            assert!(o.distance_to_truth.unwrap() < 1e-3);
            // Maximization values increase along the trajectory.
            let fs: Vec<f64> = o.result.trajectory.iter().map(|r| -r.f).collect();
            for w in fs.windows(2) {
                assert!(w[1] >= w[0]);
            }
        }
    }

    #[test]
    fn sweep_axes_produce_the_documented_signatures() {
        let ambient = SweepAxis::Ambient {
            dims: vec![3, 9, 21],
            values: vec![30, 60],
        };
        let sigs = ambient.signatures().unwrap();
        assert_eq!(sigs[0].to_string(), "Flag(3,9,21;30)");
        assert_eq!(sigs[1].to_string(), "Flag(3,9,21;60)");

        let depth = SweepAxis::Depth {
            ambient: 60,
            values: vec![1, 3],
        };
        let sigs = depth.signatures().unwrap();
        assert_eq!(sigs[0].to_string(), "Flag(2;60)");
        assert_eq!(sigs[1].to_string(), "Flag(2,4,6;60)");
    }

    #[test]
    fn sweep_aggregation_is_reproducible() {
        let axis = SweepAxis::Depth {
            ambient: 10,
            values: vec![1, 2],
        };
        let cfg = SolverConfig {
            max_iters: 200,
            ..SolverConfig::default()
        };
        let a = run_sweep(Problem::Principal, &axis, 3, 5, SolverKind::Sd, &cfg).unwrap();
        let b = run_sweep(Problem::Principal, &axis, 3, 5, SolverKind::Sd, &cfg).unwrap();
        assert_eq!(a.rows.len(), 2);
        for (x, y) in a.rows.iter().zip(&b.rows) {
            assert_eq!(x.distances, y.distances);
            assert_eq!(x.iterations, y.iterations);
            assert_eq!(x.termination_histogram, y.termination_histogram);
        }
    }
}
