//! Derivative-free baseline planner: covariance matrix adaptation evolution
//! strategy (CMA-ES) over a 7-dimensional pose delta.
//!
//! The search variable `x = (ω, t, dd)` encodes an axis-angle rotation and a
//! translation applied on top of the initial pose, plus an aperture change
//! relative to the initial opening. Fitness is the same geometric error the
//! iterative planners monitor, with correspondences rebuilt at every
//! candidate pose; candidates that cannot be matched score infinitely bad
//! rather than aborting the run.
//!
//! The optimizer is the standard (μ/μ_w, λ) strategy with rank-1 and rank-μ
//! covariance updates and cumulative step-size adaptation. It is implemented
//! here rather than pulled in as a dependency so runs are reproducible
//! bit-for-bit from the seed alone: sampling uses a counter-based stream
//! cipher RNG, candidates are evaluated in a fixed order, and ranking ties
//! break by candidate index.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand_chacha::ChaCha8Rng;
use rand_core::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{rodrigues, Rotation, UnitVec3, Vec3};
use crate::gripper::GripperModel;
use crate::kdtree::SpatialIndex;
use crate::quality::geometric_error;
use crate::solver::{
    build_pairs, evaluate_pose, GraspPlan, InitialPose, Matching, PlannerConfig, PlannerKind,
};
use crate::surface::OrientedSurface;

/// Settings for the evolutionary baseline.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CmaEsConfig {
    /// Candidates per generation (λ).
    pub population: usize,
    /// Number of generations to run.
    pub generations: usize,
    /// Initial sampling spread.
    pub sigma0: f64,
    /// RNG seed; two runs with equal seeds produce identical plans.
    pub seed: u64,
    /// Per-component bound on the axis-angle delta (rad).
    pub omega_bound: f64,
    /// Per-component bound on the translation delta (m).
    pub translation_bound: f64,
}

impl Default for CmaEsConfig {
    fn default() -> Self {
        Self {
            population: 16,
            generations: 200,
            sigma0: 0.05,
            seed: 0,
            omega_bound: std::f64::consts::PI,
            translation_bound: 0.2,
        }
    }
}

impl CmaEsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population < 4 {
            return Err(Error::InvalidConfig(format!(
                "population {} is too small; need at least 4",
                self.population
            )));
        }
        if self.generations == 0 {
            return Err(Error::InvalidConfig("generations must be at least 1".into()));
        }
        for (name, value) in [
            ("sigma0", self.sigma0),
            ("omega_bound", self.omega_bound),
            ("translation_bound", self.translation_bound),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidConfig(format!("{name} = {value} is invalid")));
            }
        }
        Ok(())
    }
}

/// Deterministic standard-normal stream: ChaCha8 64-bit output mapped to the
/// open unit interval, then Box–Muller.
struct GaussianSource {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl GaussianSource {
    fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            spare: None,
        }
    }

    /// Uniform in (0, 1), never exactly 0 or 1.
    fn uniform_open(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) as f64 + 0.5) / 9007199254740992.0
    }

    fn sample(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = self.uniform_open();
        let u2 = self.uniform_open();
        let radius = (-2.0 * u1.ln()).sqrt();
        let angle = std::f64::consts::TAU * u2;
        self.spare = Some(radius * angle.sin());
        radius * angle.cos()
    }
}

/// The (μ/μ_w, λ) optimizer core, independent of the grasp problem.
struct CmaEs {
    dim: usize,
    lambda: usize,
    weights: DVector<f64>,
    mu_eff: f64,
    c_sigma: f64,
    d_sigma: f64,
    c_c: f64,
    c_1: f64,
    c_mu: f64,
    chi_n: f64,
    mean: DVector<f64>,
    sigma: f64,
    cov: DMatrix<f64>,
    p_sigma: DVector<f64>,
    p_c: DVector<f64>,
    inv_sqrt: DMatrix<f64>,
    generation: usize,
    gaussian: GaussianSource,
}

impl CmaEs {
    fn new(dim: usize, lambda: usize, sigma0: f64, seed: u64) -> Self {
        let mu = lambda / 2;
        let raw: Vec<f64> = (1..=mu)
            .map(|i| (mu as f64 + 0.5).ln() - (i as f64).ln())
            .collect();
        let total: f64 = raw.iter().sum();
        let weights = DVector::from_iterator(mu, raw.iter().map(|w| w / total));
        let mu_eff = 1.0 / weights.iter().map(|w| w * w).sum::<f64>();
        let n = dim as f64;
        let c_sigma = (mu_eff + 2.0) / (n + mu_eff + 5.0);
        let d_sigma = 1.0 + 2.0 * (((mu_eff - 1.0) / (n + 1.0)).sqrt() - 1.0).max(0.0) + c_sigma;
        let c_c = (4.0 + mu_eff / n) / (n + 4.0 + 2.0 * mu_eff / n);
        let c_1 = 2.0 / ((n + 1.3).powi(2) + mu_eff);
        let c_mu = (1.0 - c_1)
            .min(2.0 * (mu_eff - 2.0 + 1.0 / mu_eff) / ((n + 2.0).powi(2) + mu_eff));
        let chi_n = n.sqrt() * (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n * n));
        Self {
            dim,
            lambda,
            weights,
            mu_eff,
            c_sigma,
            d_sigma,
            c_c,
            c_1,
            c_mu,
            chi_n,
            mean: DVector::zeros(dim),
            sigma: sigma0,
            cov: DMatrix::identity(dim, dim),
            p_sigma: DVector::zeros(dim),
            p_c: DVector::zeros(dim),
            inv_sqrt: DMatrix::identity(dim, dim),
            generation: 0,
            gaussian: GaussianSource::new(seed),
        }
    }

    /// Samples the next generation of candidates.
    fn ask(&mut self) -> Vec<DVector<f64>> {
        let eigen = self.cov.clone().symmetric_eigen();
        let scales: Vec<f64> = eigen
            .eigenvalues
            .iter()
            .map(|&ev| ev.max(1e-20).sqrt())
            .collect();
        let basis = &eigen.eigenvectors;
        // C^{-1/2} = B · diag(1/scale) · Bᵀ, reused in the step-size path.
        let mut inv = DMatrix::zeros(self.dim, self.dim);
        for (j, scale) in scales.iter().enumerate() {
            let col = basis.column(j) / *scale;
            inv += &col * basis.column(j).transpose();
        }
        self.inv_sqrt = inv;

        (0..self.lambda)
            .map(|_| {
                let z = DVector::from_iterator(
                    self.dim,
                    (0..self.dim).map(|_| self.gaussian.sample()),
                );
                let mut y = DVector::zeros(self.dim);
                for (j, scale) in scales.iter().enumerate() {
                    y += basis.column(j) * (scale * z[j]);
                }
                &self.mean + y * self.sigma
            })
            .collect()
    }

    /// Folds ranked candidates into mean, paths, covariance, and step size.
    fn tell(&mut self, candidates: &[DVector<f64>], fitness: &[f64]) {
        let mut order: Vec<usize> = (0..self.lambda).collect();
        order.sort_by(|&i, &j| {
            fitness[i]
                .partial_cmp(&fitness[j])
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(i.cmp(&j))
        });
        let mu = self.weights.len();
        let mean_old = self.mean.clone();
        let mut mean_new = DVector::zeros(self.dim);
        for (rank, &idx) in order[..mu].iter().enumerate() {
            mean_new += &candidates[idx] * self.weights[rank];
        }
        let y_w = (&mean_new - &mean_old) / self.sigma;

        self.generation += 1;
        let c_s = self.c_sigma;
        self.p_sigma = &self.p_sigma * (1.0 - c_s)
            + &self.inv_sqrt * &y_w * (c_s * (2.0 - c_s) * self.mu_eff).sqrt();
        let expected = self.chi_n;
        let normalizer = (1.0 - (1.0 - c_s).powi(2 * self.generation as i32)).sqrt();
        let h_sigma = if self.p_sigma.norm() / normalizer
            < (1.4 + 2.0 / (self.dim as f64 + 1.0)) * expected
        {
            1.0
        } else {
            0.0
        };
        let c_c = self.c_c;
        self.p_c =
            &self.p_c * (1.0 - c_c) + &y_w * (h_sigma * (c_c * (2.0 - c_c) * self.mu_eff).sqrt());

        let mut rank_mu = DMatrix::zeros(self.dim, self.dim);
        for (rank, &idx) in order[..mu].iter().enumerate() {
            let y = (&candidates[idx] - &mean_old) / self.sigma;
            rank_mu += &y * y.transpose() * self.weights[rank];
        }
        let stall = (1.0 - h_sigma) * c_c * (2.0 - c_c);
        self.cov = &self.cov * (1.0 - self.c_1 - self.c_mu + self.c_1 * stall)
            + (&self.p_c * self.p_c.transpose()) * self.c_1
            + rank_mu * self.c_mu;
        // Symmetrize to keep the eigendecomposition well behaved.
        self.cov = (&self.cov + self.cov.transpose()) * 0.5;

        self.sigma *= ((c_s / self.d_sigma) * (self.p_sigma.norm() / expected - 1.0)).exp();
        self.sigma = self.sigma.clamp(1e-12, 1e6);
        self.mean = mean_new;
    }
}

/// Plans a grasp by evolutionary search around the initial pose.
///
/// The returned plan's pose is the best candidate ever evaluated; its trace
/// holds the initial-pose quality followed by the best-ever quality after
/// each generation, so the error trajectory is non-increasing by
/// construction.
#[allow(clippy::too_many_arguments)]
pub fn cmaes_plan(
    object: &OrientedSurface,
    gripper: &GripperModel,
    n_app: &UnitVec3,
    initial: &InitialPose,
    matching: Matching<'_>,
    config: &PlannerConfig,
    cma: &CmaEsConfig,
) -> Result<GraspPlan> {
    let started = Instant::now();
    config.validate()?;
    cma.validate()?;
    if !(gripper.d_min()..=gripper.d_max()).contains(&config.d0) {
        return Err(Error::InvalidConfig(format!(
            "initial aperture {} outside [{}, {}]",
            config.d0,
            gripper.d_min(),
            gripper.d_max()
        )));
    }
    let index = match matching {
        Matching::Nearest => Some(SpatialIndex::build(object.points())),
        Matching::Fixed(_) => None,
    };

    let dd_lo = gripper.d_min() - config.d0;
    let dd_hi = gripper.d_max() - config.d0;
    let decode = |x: &DVector<f64>| -> (Rotation, Vec3, f64) {
        let wb = cma.omega_bound;
        let tb = cma.translation_bound;
        let omega = Vec3::new(
            x[0].clamp(-wb, wb),
            x[1].clamp(-wb, wb),
            x[2].clamp(-wb, wb),
        );
        let t = Vec3::new(
            x[3].clamp(-tb, tb),
            x[4].clamp(-tb, tb),
            x[5].clamp(-tb, tb),
        );
        let rotation = rodrigues(&omega) * initial.rotation;
        let translation = initial.translation + t;
        let aperture = config.d0 + x[6].clamp(dd_lo, dd_hi);
        (rotation, translation, aperture)
    };
    let fitness = |x: &DVector<f64>| -> f64 {
        let (rotation, translation, aperture) = decode(x);
        let fingers = gripper.posed_fingers(&rotation, &translation, aperture);
        let v = gripper.v0().rotated(&rotation);
        match build_pairs(
            &fingers,
            object,
            index.as_ref(),
            matching,
            config.max_normal_angle(),
        ) {
            Ok(corr) => {
                let zero = Vec3::zeros();
                geometric_error(&corr, &zero, &zero, 0.0, &v, config.alpha)
            }
            Err(_) => f64::INFINITY,
        }
    };

    let (initial_report, _) = evaluate_pose(
        object,
        gripper,
        n_app,
        matching,
        config,
        index.as_ref(),
        &initial.rotation,
        &initial.translation,
        config.d0,
        0,
    )?;
    let mut trace = vec![initial_report];
    let mut best_x = DVector::zeros(7);
    let mut best_f = trace[0].e_geom;

    let mut es = CmaEs::new(7, cma.population, cma.sigma0, cma.seed);
    for generation in 1..=cma.generations {
        let candidates = es.ask();
        let scores: Vec<f64> = candidates.iter().map(&fitness).collect();
        for (candidate, &score) in candidates.iter().zip(&scores) {
            if score < best_f {
                best_f = score;
                best_x = candidate.clone();
            }
        }
        es.tell(&candidates, &scores);

        let (rotation, translation, aperture) = decode(&best_x);
        let (report, _) = evaluate_pose(
            object,
            gripper,
            n_app,
            matching,
            config,
            index.as_ref(),
            &rotation,
            &translation,
            aperture,
            generation,
        )?;
        trace.push(report);
    }

    let (rotation, translation, final_aperture) = decode(&best_x);
    let (_, final_corr) = evaluate_pose(
        object,
        gripper,
        n_app,
        matching,
        config,
        index.as_ref(),
        &rotation,
        &translation,
        final_aperture,
        cma.generations,
    )?;

    Ok(GraspPlan {
        planner: PlannerKind::CmaEs,
        rotation,
        translation,
        aperture_delta: final_aperture - config.d0,
        final_aperture,
        iterations: cma.generations,
        pairs_per_finger: final_corr.per_finger_counts(),
        pairs_total: final_corr.len(),
        trace,
        planning_time_ms: started.elapsed().as_secs_f64() * 1e3,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::disf_plan;
    use crate::surface::PointNormal;

    fn unit(x: f64, y: f64, z: f64) -> UnitVec3 {
        UnitVec3::from_components(x, y, z).unwrap()
    }

    fn slab(width: f64, per_side: usize) -> OrientedSurface {
        let mut points = Vec::new();
        let half = 0.02;
        for face in [-1.0f64, 1.0] {
            for ix in 0..per_side {
                for iz in 0..per_side {
                    let frac = |i: usize| {
                        -half + 2.0 * half * i as f64 / (per_side - 1).max(1) as f64
                    };
                    points.push(PointNormal::new(
                        Vec3::new(frac(ix), face * width / 2.0, frac(iz)),
                        unit(0.0, face, 0.0),
                    ));
                }
            }
        }
        OrientedSurface::new(points)
    }

    #[test]
    fn optimizer_core_solves_a_shifted_sphere_function() {
        let target = DVector::from_column_slice(&[0.3, -0.2, 0.1, 0.05, -0.15, 0.2, -0.1]);
        let mut es = CmaEs::new(7, 16, 0.05, 99);
        let mut best = f64::INFINITY;
        let mut best_x = DVector::zeros(7);
        for _ in 0..200 {
            let xs = es.ask();
            let fs: Vec<f64> = xs.iter().map(|x| (x - &target).norm_squared()).collect();
            for (x, &f) in xs.iter().zip(&fs) {
                if f < best {
                    best = f;
                    best_x = x.clone();
                }
            }
            es.tell(&xs, &fs);
        }
        let distance = (&best_x - &target).norm();
        assert!(distance < 1e-3, "best-ever {distance:e} from the optimum");
    }

    #[test]
    fn gaussian_source_is_deterministic_and_roughly_standard_normal() {
        let mut a = GaussianSource::new(5);
        let mut b = GaussianSource::new(5);
        let sample_a: Vec<f64> = (0..1000).map(|_| a.sample()).collect();
        let sample_b: Vec<f64> = (0..1000).map(|_| b.sample()).collect();
        assert_eq!(sample_a, sample_b, "same seed must give the same stream");
        let mean = sample_a.iter().sum::<f64>() / 1000.0;
        let var = sample_a.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / 999.0;
        assert!(mean.abs() < 0.15, "mean {mean}");
        assert!((var - 1.0).abs() < 0.2, "variance {var}");
        assert!(sample_a.iter().all(|x| x.is_finite()));
    }

    #[test]
    fn same_seed_reproduces_the_plan_bit_for_bit() {
        let object = slab(0.03, 4);
        let model = GripperModel::default_parallel();
        let config = PlannerConfig::default();
        let cma = CmaEsConfig {
            population: 8,
            generations: 40,
            seed: 1234,
            ..CmaEsConfig::default()
        };
        let n_app = unit(0.0, 0.0, 1.0);
        let initial = InitialPose::default_for(&object, &n_app, 0.0).unwrap();
        let run = || {
            cmaes_plan(
                &object,
                &model,
                &n_app,
                &initial,
                Matching::Nearest,
                &config,
                &cma,
            )
            .unwrap()
        };
        let first = run();
        let second = run();
        assert_eq!(first.rotation.matrix(), second.rotation.matrix());
        assert_eq!(first.translation, second.translation);
        assert_eq!(first.final_aperture, second.final_aperture);
        let firsts: Vec<f64> = first.trace.iter().map(|r| r.e_geom).collect();
        let seconds: Vec<f64> = second.trace.iter().map(|r| r.e_geom).collect();
        assert_eq!(firsts, seconds, "trace must match bit for bit");
        // Best-ever tracking makes the trajectory non-increasing.
        for window in firsts[1..].windows(2) {
            assert!(window[1] <= window[0], "best-ever rose: {window:?}");
        }
        assert_eq!(first.trace.len(), cma.generations + 1);
    }

    #[test]
    fn search_respects_pose_and_aperture_bounds() {
        let object = slab(0.03, 4);
        let model = GripperModel::default_parallel();
        let config = PlannerConfig::default();
        let cma = CmaEsConfig {
            population: 8,
            generations: 30,
            seed: 7,
            ..CmaEsConfig::default()
        };
        let n_app = unit(0.0, 0.0, 1.0);
        let initial = InitialPose::default_for(&object, &n_app, 0.0).unwrap();
        let plan = cmaes_plan(
            &object,
            &model,
            &n_app,
            &initial,
            Matching::Nearest,
            &config,
            &cma,
        )
        .unwrap();
        let delta = plan.translation - initial.translation;
        for i in 0..3 {
            assert!(delta[i].abs() <= cma.translation_bound + 1e-12);
        }
        assert!(plan.final_aperture >= model.d_min() - 1e-12);
        assert!(plan.final_aperture <= model.d_max() + 1e-12);
    }

    #[test]
    fn evolutionary_search_fits_the_slab_but_pays_in_time() {
        let object = slab(0.03, 5);
        let model = GripperModel::default_parallel();
        let config = PlannerConfig::default();
        let n_app = unit(0.0, 0.0, 1.0);
        let initial = InitialPose::default_for(&object, &n_app, 0.0).unwrap();
        let cma = CmaEsConfig {
            seed: 3,
            ..CmaEsConfig::default()
        };
        let evolved = cmaes_plan(
            &object,
            &model,
            &n_app,
            &initial,
            Matching::Nearest,
            &config,
            &cma,
        )
        .unwrap();
        let staged = disf_plan(
            &object,
            &model,
            &n_app,
            &initial,
            Matching::Nearest,
            &config,
        )
        .unwrap();
        let evolved_e = evolved.final_quality().e_geom;
        let staged_e = staged.final_quality().e_geom;
        assert!(
            evolved_e <= 2.0 * staged_e + 1e-6,
            "evolved e_geom {evolved_e:e} vs staged {staged_e:e}"
        );
        assert!(
            evolved.planning_time_ms >= 10.0 * staged.planning_time_ms,
            "expected the search to be at least 10x slower: {:.3} ms vs {:.3} ms",
            evolved.planning_time_ms,
            staged.planning_time_ms
        );
    }
}
