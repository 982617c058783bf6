//! Dimensions of secant varieties by Terracini's Lemma, with an independent
//! addition-map Jacobian oracle.
//!
//! A trial stacks the tangent frames at `h` random points and records the
//! rank. Ranks can only drop at special points, so the maximum over trials
//! is a lower bound on the generic value; reaching the expected dimension is
//! therefore an exact certificate of non-defectivity.

mod fd;

use num_bigint::BigUint;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::bound::FailureBound;
use crate::exactla::{intersection_dim, rank, Field, LinalgError, Matrix, RowSpace};
use crate::geometry::{sample_point, tangent_frame, GeometryError, ParamPoint, VarietyModel};

pub use fd::{addition_map_jacobian, partial_derivative};
#[cfg(test)]
pub(crate) use fd::derivative_weights;

/// Default limit on `h * (n + 1) * (N + 1)` matrix entries.
pub const DEFAULT_CAP: u64 = 1 << 26;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProbeError {
    #[error("capacity exceeded: {needed} matrix entries requested, cap is {cap}")]
    Capacity { needed: u128, cap: u64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("probe inapplicable: {0}")]
    Inapplicable(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ProbeConfig {
    pub trials: usize,
    /// Trial `t` samples its configuration from `seed + t`.
    pub seed: u64,
    pub cap: u64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            trials: 3,
            seed: 0,
            cap: DEFAULT_CAP,
        }
    }
}

impl ProbeConfig {
    pub fn trial_seed(&self, t: usize) -> u64 {
        self.seed.wrapping_add(t as u64)
    }

    fn validate(&self) -> Result<(), ProbeError> {
        if self.trials == 0 {
            return Err(ProbeError::InvalidArgument("trials must be >= 1".into()));
        }
        if self.cap == 0 {
            return Err(ProbeError::InvalidArgument("cap must be positive".into()));
        }
        Ok(())
    }
}

pub(crate) fn check_capacity(model: &VarietyModel, h: u64, cap: u64) -> Result<(), ProbeError> {
    let needed = h as u128 * model.param_arity as u128 * model.coords() as u128;
    if needed > cap as u128 {
        return Err(ProbeError::Capacity { needed, cap });
    }
    Ok(())
}

/// `h` points drawn in sequence from one seeded stream, so the first `k`
/// points of a configuration do not depend on `h`.
pub fn sample_configuration<F: Field>(
    model: &VarietyModel,
    field: &F,
    h: u64,
    seed: u64,
) -> Vec<ParamPoint<F::Elem>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..h).map(|_| sample_point(model, field, &mut rng)).collect()
}

/// Schwartz–Zippel bound for a rank-`r` minor of a frame stack: its entries
/// have degree below `degree_bound`, and scales are drawn from the nonzero
/// part of the sample space.
pub(crate) fn minor_bound<F: Field>(field: &F, model: &VarietyModel, r: u64) -> FailureBound {
    let space = field.sample_space();
    let den = if space > BigUint::from(1u32) {
        space - 1u32
    } else {
        BigUint::from(0u32)
    };
    FailureBound::ratio(&(BigUint::from(r) * BigUint::from(model.degree_bound)), &den)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SecantStatus {
    /// Some trial reached the expected dimension.
    NonDefectiveCertified,
    /// Every trial stayed below the expected dimension.
    DefectObserved,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SecantReport {
    pub h: u64,
    pub dim_abstract: u64,
    pub dim_expected: u64,
    pub dim_computed: u64,
    pub defect: u64,
    pub fills_ambient: bool,
    pub generically_finite: bool,
    pub trials: usize,
    pub seed: u64,
    /// Projective dimension reached by each trial.
    pub trial_dims: Vec<u64>,
    pub status: SecantStatus,
    /// Probability that `dim_computed` is below the generic dimension.
    pub failure_bound: FailureBound,
}

fn build_report<F: Field>(
    model: &VarietyModel,
    field: &F,
    h: u64,
    cfg: &ProbeConfig,
    trial_dims: Vec<u64>,
) -> SecantReport {
    let dim_abstract = model.abstract_secant_dim(h);
    let dim_expected = dim_abstract.min(model.ambient);
    let dim_computed = *trial_dims.iter().max().expect("at least one trial");
    debug_assert!(dim_computed <= dim_expected);
    let status = if dim_computed == dim_expected {
        SecantStatus::NonDefectiveCertified
    } else {
        SecantStatus::DefectObserved
    };
    let failure_bound = match status {
        SecantStatus::NonDefectiveCertified => FailureBound::zero(),
        SecantStatus::DefectObserved => minor_bound(field, model, dim_expected + 1).pow(cfg.trials),
    };
    SecantReport {
        h,
        dim_abstract,
        dim_expected,
        dim_computed,
        defect: dim_expected - dim_computed,
        fills_ambient: dim_computed == model.ambient,
        generically_finite: dim_computed == dim_abstract,
        trials: cfg.trials,
        seed: cfg.seed,
        trial_dims,
        status,
        failure_bound,
    }
}

/// Projective dimension spanned by the tangent frames at `points`.
pub fn terracini_sample<F: Field>(
    model: &VarietyModel,
    field: &F,
    points: &[ParamPoint<F::Elem>],
) -> Result<u64, ProbeError> {
    let mut rs = RowSpace::new(field.clone(), model.coords());
    for p in points {
        if rs.dim() == model.coords() {
            break;
        }
        rs.insert_all(&tangent_frame(model, field, p)?.matrix)?;
    }
    Ok(rs.dim() as u64 - 1)
}

pub fn terracini_dimension<F: Field>(
    model: &VarietyModel,
    field: &F,
    h: u64,
    cfg: &ProbeConfig,
) -> Result<SecantReport, ProbeError> {
    cfg.validate()?;
    if h == 0 {
        return Err(ProbeError::InvalidArgument("h must be >= 1".into()));
    }
    check_capacity(model, h, cfg.cap)?;
    let mut dims = Vec::with_capacity(cfg.trials);
    for t in 0..cfg.trials {
        let pts = sample_configuration(model, field, h, cfg.trial_seed(t));
        dims.push(terracini_sample(model, field, &pts)?);
    }
    Ok(build_report(model, field, h, cfg, dims))
}

/// Rank minus one of the Jacobian of `(p_1..p_h) -> sum embed(p_i)`,
/// computed from values of `embed` only, on the configuration that
/// `terracini_dimension` uses for trial 0 with the same seed.
pub fn addition_map_dimension<F: Field>(
    model: &VarietyModel,
    field: &F,
    h: u64,
    seed: u64,
    cap: u64,
) -> Result<u64, ProbeError> {
    if h == 0 {
        return Err(ProbeError::InvalidArgument("h must be >= 1".into()));
    }
    check_capacity(model, h, cap)?;
    let pts = sample_configuration(model, field, h, seed);
    let jac = addition_map_jacobian(model, field, &pts)?;
    Ok(rank(field, &jac) as u64 - 1)
}

/// Whether `tau_h` (projection from the span of `h` tangent spaces) is of
/// fiber type: in every trial, the tangent space at a further point meets
/// that span more than dimension counting forces, so the joint span falls
/// short of `(h + 1)(n + 1)`. Same configurations as
/// `terracini_dimension(h + 1)`.
pub fn fiber_type_tau<F: Field>(
    model: &VarietyModel,
    field: &F,
    h: u64,
    cfg: &ProbeConfig,
) -> Result<bool, ProbeError> {
    cfg.validate()?;
    if h == 0 {
        return Err(ProbeError::InvalidArgument("h must be >= 1".into()));
    }
    check_capacity(model, h + 1, cfg.cap)?;
    let full = (h + 1) * model.param_arity as u64;
    for t in 0..cfg.trials {
        let pts = sample_configuration(model, field, h + 1, cfg.trial_seed(t));
        let frames: Vec<Matrix<F::Elem>> = pts
            .iter()
            .map(|p| tangent_frame(model, field, p).map(|f| f.matrix))
            .collect::<Result<_, _>>()?;
        let (last, first) = frames.split_last().expect("h + 1 >= 2 frames");
        let a = Matrix::stack_all(model.coords(), first.iter())?;
        let ra = rank(field, &a) as u64;
        let rb = rank(field, last) as u64;
        let meet = intersection_dim(field, &a, last)? as u64;
        if ra + rb - meet == full {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Reports for `h = 1..=h_max`. Each trial samples `h_max` points once and
/// reads the rank after every prefix, so the report at `h` equals
/// `terracini_dimension(h)` with the same configuration.
pub fn secant_profile<F: Field>(
    model: &VarietyModel,
    field: &F,
    h_max: u64,
    cfg: &ProbeConfig,
) -> Result<Vec<SecantReport>, ProbeError> {
    cfg.validate()?;
    if h_max == 0 {
        return Err(ProbeError::InvalidArgument("h_max must be >= 1".into()));
    }
    check_capacity(model, h_max, cfg.cap)?;
    let mut per_h: Vec<Vec<u64>> = vec![Vec::with_capacity(cfg.trials); h_max as usize];
    for t in 0..cfg.trials {
        let pts = sample_configuration(model, field, h_max, cfg.trial_seed(t));
        let mut rs = RowSpace::new(field.clone(), model.coords());
        for (i, p) in pts.iter().enumerate() {
            if rs.dim() < model.coords() {
                rs.insert_all(&tangent_frame(model, field, p)?.matrix)?;
            }
            per_h[i].push(rs.dim() as u64 - 1);
        }
    }
    Ok(per_h
        .into_iter()
        .enumerate()
        .map(|(i, dims)| build_report(model, field, i as u64 + 1, cfg, dims))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactla::{PrimeField, Rationals, Ring};

    fn model(s: &str) -> VarietyModel {
        VarietyModel::new(s.parse().unwrap()).unwrap()
    }

    fn cfg() -> ProbeConfig {
        ProbeConfig::default()
    }

    #[test]
    fn quadric_veronese_is_two_defective() {
        let m = model("veronese:d=2,n=2");
        let r = terracini_dimension(&m, &PrimeField::default(), 2, &cfg()).unwrap();
        assert_eq!((r.dim_computed, r.dim_expected, r.defect), (4, 5, 1));
        assert_eq!(r.status, SecantStatus::DefectObserved);
        assert!(!r.failure_bound.is_zero());
        let q = terracini_dimension(&m, &Rationals::default(), 2, &cfg()).unwrap();
        assert_eq!(q.dim_computed, 4);
    }

    #[test]
    fn hand_monomial_span_for_quadric_veronese() {
        // coordinates z^2, xz, yz, x^2, xy, y^2; tangent spans at the points
        // x^2 and y^2 are {x^2, xy, xz} and {y^2, xy, yz}
        let q = Rationals::default();
        let unit = |i: usize| {
            let mut v = vec![q.zero(); 6];
            v[i] = q.one();
            v
        };
        let rows = [3, 4, 1, 5, 4, 2].iter().map(|&i| unit(i)).collect();
        let m = Matrix::from_rows(6, rows).unwrap();
        assert_eq!(rank(&q, &m) - 1, 4);
    }

    #[test]
    fn segre_222_fills_at_two() {
        let m = model("segre:1,1,1");
        let r = secant_profile(&m, &PrimeField::default(), 2, &cfg()).unwrap();
        assert_eq!(r.iter().map(|x| x.dim_computed).collect::<Vec<_>>(), vec![3, 7]);
        assert!(r[1].fills_ambient && r[1].generically_finite);
        assert_eq!(addition_map_dimension(&m, &PrimeField::default(), 2, 0, DEFAULT_CAP).unwrap(), 7);
    }

    #[test]
    fn five_binary_factors() {
        let m = model("segre:1,1,1,1,1");
        let r = terracini_dimension(&m, &PrimeField::default(), 5, &cfg()).unwrap();
        assert_eq!(r.dim_computed, 29);
        assert!(r.generically_finite);
        assert!(r.failure_bound.is_zero());
    }

    #[test]
    fn addition_map_matches_terracini() {
        let f = PrimeField::default();
        for (s, h, want) in [("veronese:d=2,n=2", 2, 4), ("segre:1,1", 2, 3), ("grass:k=2,n=6", 3, 33)] {
            let m = model(s);
            let am = addition_map_dimension(&m, &f, h, 5, DEFAULT_CAP).unwrap();
            let pts = sample_configuration(&m, &f, h, 5);
            assert_eq!(am, terracini_sample(&m, &f, &pts).unwrap(), "{s}");
            assert_eq!(am, want, "{s}");
        }
    }

    #[test]
    fn veronese_profile() {
        let m = model("veronese:d=2,n=2");
        let r = secant_profile(&m, &PrimeField::default(), 3, &cfg()).unwrap();
        assert_eq!(r.iter().map(|x| x.dim_computed).collect::<Vec<_>>(), vec![2, 4, 5]);
    }

    #[test]
    fn gaussian_moments_never_defective() {
        let m = model("gm:d=14");
        let r = secant_profile(&m, &PrimeField::default(), 5, &cfg()).unwrap();
        assert!(r.iter().all(|x| x.defect == 0));
    }

    #[test]
    fn tau_fiber_type_examples() {
        let f = PrimeField::default();
        assert!(fiber_type_tau(&model("segre:1,1"), &f, 1, &cfg()).unwrap());
        assert!(fiber_type_tau(&model("veronese:d=2,n=2"), &f, 1, &cfg()).unwrap());
        assert!(!fiber_type_tau(&model("segre:1,1,1,1,1"), &f, 4, &cfg()).unwrap());
    }

    #[test]
    fn capacity_is_enforced() {
        let m = model("segre:1,1,1,1,1");
        let c = ProbeConfig {
            cap: 100,
            ..cfg()
        };
        assert!(matches!(
            terracini_dimension(&m, &PrimeField::default(), 2, &c),
            Err(ProbeError::Capacity { .. })
        ));
    }

    #[test]
    fn profile_matches_single_runs() {
        let f = PrimeField::default();
        let m = model("segre:1,1,2");
        let c = ProbeConfig { seed: 17, ..cfg() };
        let prof = secant_profile(&m, &f, 4, &c).unwrap();
        for r in &prof {
            assert_eq!(*r, terracini_dimension(&m, &f, r.h, &c).unwrap());
        }
    }
}
