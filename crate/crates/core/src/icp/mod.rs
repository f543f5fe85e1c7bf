//! Point-to-point Iterative Closest Point registration.

mod fit;
mod kdtree;

pub use fit::{fit_rigid_svd, rmse, DEGENERACY_RATIO};
pub use kdtree::{KdTree3, LEAF_SIZE};

use crate::geometry::{PointCloud, RigidTransform};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum IcpError {
    #[error("cannot build a tree over an empty point set")]
    EmptyPointSet,

    #[error("{0} points exceed the tree's index range")]
    TooManyPoints(usize),

    #[error("{sources} source points paired with {targets} target points")]
    LengthMismatch { sources: usize, targets: usize },

    #[error("degenerate configuration: {0}")]
    DegenerateConfiguration(String),

    #[error("error metric over an empty set")]
    EmptySet,

    #[error("invalid ICP configuration: {0}")]
    InvalidConfig(String),
}

/// Residual minimized at each iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IcpMetric {
    #[default]
    PointToPoint,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ICPConfig {
    pub max_iterations: usize,
    /// Converged once the RMSE changes by less than this between iterations.
    pub convergence_tolerance: f64,
    /// Pairs farther apart than this are dropped.
    pub max_correspondence_distance: f64,
    pub metric: IcpMetric,
}

impl Default for ICPConfig {
    fn default() -> Self {
        Self {
            max_iterations: 50,
            convergence_tolerance: 1e-6,
            max_correspondence_distance: f64::INFINITY,
            metric: IcpMetric::PointToPoint,
        }
    }
}

impl ICPConfig {
    pub fn validate(&self) -> Result<(), IcpError> {
        if self.max_iterations == 0 {
            return Err(IcpError::InvalidConfig("max_iterations must be at least 1".into()));
        }
        if self.convergence_tolerance.is_nan() || self.convergence_tolerance <= 0.0 {
            return Err(IcpError::InvalidConfig("convergence_tolerance must be positive".into()));
        }
        if self.max_correspondence_distance.is_nan() || self.max_correspondence_distance <= 0.0 {
            return Err(IcpError::InvalidConfig(
                "max_correspondence_distance must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ICPResult {
    /// Maps the source frame into the target frame.
    pub transform: RigidTransform,
    pub iterations: usize,
    /// RMSE over the surviving pairs after each iteration's fit.
    pub rmse_trace: Vec<f64>,
    pub converged: bool,
}

impl ICPResult {
    pub fn final_rmse(&self) -> f64 {
        self.rmse_trace.last().copied().unwrap_or(f64::NAN)
    }
}

/// Aligns `source` to `target` starting from `initial`.
///
/// Each iteration moves the source by the current estimate, pairs every moved
/// point with its nearest target, drops pairs beyond
/// `max_correspondence_distance`, fits the increment with [`fit_rigid_svd`]
/// and records the RMSE of the surviving pairs after the increment. The first
/// iteration compares against the RMSE before its fit, so an exact initial
/// alignment converges in one iteration. All buffers are sized before the
/// loop; iterations allocate nothing.
pub fn icp_point_to_point(
    source: &PointCloud,
    target: &PointCloud,
    config: &ICPConfig,
    initial: &RigidTransform,
) -> Result<ICPResult, IcpError> {
    config.validate()?;
    if source.len() < 3 || target.len() < 3 {
        return Err(IcpError::DegenerateConfiguration(format!(
            "{} source and {} target points, need at least 3 each",
            source.len(),
            target.len()
        )));
    }
    let tree = KdTree3::build(target.points())?;
    let max_d2 = config.max_correspondence_distance * config.max_correspondence_distance;
    let n = source.len();
    let mut pair_src: Vec<[f64; 3]> = Vec::with_capacity(n);
    let mut pair_tgt: Vec<[f64; 3]> = Vec::with_capacity(n);
    let mut rmse_trace = Vec::with_capacity(config.max_iterations);
    let mut current = *initial;
    let mut converged = false;

    for iteration in 0..config.max_iterations {
        pair_src.clear();
        pair_tgt.clear();
        let mut before = 0.0;
        for p in source.points() {
            let moved = current.apply(p);
            let (j, d2) = tree.nearest(&moved);
            if d2 <= max_d2 {
                pair_src.push(moved);
                pair_tgt.push(target.points()[j]);
                before += d2;
            }
        }
        if pair_src.len() < 3 {
            return Err(IcpError::DegenerateConfiguration(format!(
                "{} correspondences within {} at iteration {}",
                pair_src.len(),
                config.max_correspondence_distance,
                iteration + 1
            )));
        }
        let delta = fit_rigid_svd(&pair_src, &pair_tgt)?;
        current = delta.compose(&current);

        let mut after = 0.0;
        for (s, t) in pair_src.iter().zip(&pair_tgt) {
            let m = delta.apply(s);
            after += (0..3).map(|k| (m[k] - t[k]) * (m[k] - t[k])).sum::<f64>();
        }
        let count = pair_src.len() as f64;
        let error = (after / count).sqrt();
        let previous = rmse_trace.last().copied().unwrap_or((before / count).sqrt());
        rmse_trace.push(error);
        if (error - previous).abs() < config.convergence_tolerance {
            converged = true;
            break;
        }
    }

    Ok(ICPResult {
        transform: current,
        iterations: rmse_trace.len(),
        rmse_trace,
        converged,
    })
}
