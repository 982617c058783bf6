//! One-sided certification that a variety is not `h`-tangentially weakly
//! defective.
//!
//! For a configuration `A` of `h` points, every hyperplane containing `M_A`
//! (the span of the tangent spaces) is tangent at each point of `A`. A
//! direction stays tangent to second order for all of them exactly when it
//! lies in the common kernel of their contracted Hessians. An empty common
//! kernel (after removing the cone-scale direction) forces the contact locus
//! to be zero-dimensional at that point; a nonempty one proves nothing.

use num_bigint::BigUint;
use serde::Serialize;

use crate::bound::FailureBound;
use crate::exactla::{kernel_basis, Field, Matrix, RowSpace};
use crate::geometry::{ParamPoint, PointJets, VarietyModel};
use crate::secantprobe::{check_capacity, sample_configuration, ProbeConfig, ProbeError};

/// Basis of the hyperplanes containing `M_A`, one functional per row.
pub fn normal_functionals<F: Field>(
    model: &VarietyModel,
    field: &F,
    points: &[ParamPoint<F::Elem>],
) -> Result<Matrix<F::Elem>, ProbeError> {
    let jets: Vec<PointJets<'_, F>> = points
        .iter()
        .map(|p| PointJets::new(model, field, p))
        .collect::<Result<_, _>>()?;
    Ok(normals_of(model, field, &jets)?.0)
}

/// Normal functionals and `rank M_A`.
fn normals_of<F: Field>(
    model: &VarietyModel,
    field: &F,
    jets: &[PointJets<'_, F>],
) -> Result<(Matrix<F::Elem>, usize), ProbeError> {
    let stack = Matrix::stack_all(model.coords(), jets.iter().map(|j| &j.frame().matrix))?;
    let normals = kernel_basis(field, &stack);
    let rank = model.coords() - normals.rows();
    Ok((normals, rank))
}

/// Dimension of the joint kernel of `ell . d^2 embed` over all rows `ell` of
/// `normals`, restricted to the chart directions.
fn joint_kernel<F: Field>(
    model: &VarietyModel,
    field: &F,
    jets: &PointJets<'_, F>,
    normals: &Matrix<F::Elem>,
) -> Result<usize, ProbeError> {
    let n = model.n;
    let chart: Vec<usize> = (0..n).collect();
    let mut rs = RowSpace::new(field.clone(), n);
    for ell in normals.row_iter() {
        if rs.dim() == n {
            break;
        }
        // the scale row and column vanish, so the chart block carries everything
        let h = jets.contract(field, ell)?.select(&chart, &chart);
        rs.insert_all(&h)?;
    }
    Ok(n - rs.dim())
}

pub fn contact_kernel_dim<F: Field>(
    model: &VarietyModel,
    field: &F,
    points: &[ParamPoint<F::Elem>],
    at_index: usize,
) -> Result<usize, ProbeError> {
    if at_index >= points.len() {
        return Err(ProbeError::InvalidArgument(format!(
            "point index {at_index} out of range for {} points",
            points.len()
        )));
    }
    let jets: Vec<PointJets<'_, F>> = points
        .iter()
        .map(|p| PointJets::new(model, field, p))
        .collect::<Result<_, _>>()?;
    let (normals, _) = normals_of(model, field, &jets)?;
    if normals.rows() == 0 {
        return Err(ProbeError::Inapplicable("tangent spaces span the ambient space".into()));
    }
    joint_kernel(model, field, &jets[at_index], &normals)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TwdStatus {
    CertifiedNotTwd,
    /// Some direction survives at some point in every eligible trial;
    /// possibly twd, nothing is claimed.
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwdReport {
    pub h: u64,
    /// `kernel_dims[t][i]`: joint kernel at point `i` of trial `t`.
    pub kernel_dims: Vec<Vec<usize>>,
    /// `rank M_A` per trial.
    pub ma_ranks: Vec<usize>,
    /// Trials whose `M_A` reached the largest rank seen; only these count.
    pub eligible: Vec<bool>,
    /// Minimum over eligible trials of the maximum over base points.
    pub min_kernel: usize,
    pub certified_not_twd: bool,
    pub status: TwdStatus,
    pub trials: usize,
    pub seed: u64,
    #[serde(rename = "codim_MA")]
    pub codim_ma: usize,
    /// Probability that a certificate rests on a non-generic `M_A`.
    pub failure_bound: FailureBound,
}

pub fn certify_not_twd<F: Field>(
    model: &VarietyModel,
    field: &F,
    h: u64,
    cfg: &ProbeConfig,
) -> Result<TwdReport, ProbeError> {
    if cfg.trials == 0 || h == 0 {
        return Err(ProbeError::InvalidArgument("h and trials must be >= 1".into()));
    }
    check_capacity(model, h, cfg.cap)?;
    let mut kernel_dims = Vec::with_capacity(cfg.trials);
    let mut ma_ranks = Vec::with_capacity(cfg.trials);
    for t in 0..cfg.trials {
        let pts = sample_configuration(model, field, h, cfg.trial_seed(t));
        let jets: Vec<PointJets<'_, F>> = pts
            .iter()
            .map(|p| PointJets::new(model, field, p))
            .collect::<Result<_, _>>()?;
        let (normals, rank) = normals_of(model, field, &jets)?;
        if normals.rows() == 0 {
            return Err(ProbeError::Inapplicable(format!(
                "tangent spaces at {h} points span the ambient space (trial {t})"
            )));
        }
        let dims = jets
            .iter()
            .map(|j| joint_kernel(model, field, j, &normals))
            .collect::<Result<Vec<_>, _>>()?;
        kernel_dims.push(dims);
        ma_ranks.push(rank);
    }
    let max_rank = *ma_ranks.iter().max().expect("trials >= 1");
    let eligible: Vec<bool> = ma_ranks.iter().map(|&r| r == max_rank).collect();
    let min_kernel = kernel_dims
        .iter()
        .zip(&eligible)
        .filter(|(_, &e)| e)
        .map(|(d, _)| *d.iter().max().expect("h >= 1"))
        .min()
        .expect("some trial is eligible");
    let certified = min_kernel == 0;
    let full = h as usize * model.param_arity;
    let failure_bound = if !certified || max_rank == full {
        FailureBound::zero()
    } else {
        let r = full.min(model.coords()) as u64;
        let space = field.sample_space();
        let den = if space > BigUint::from(1u32) { space - 1u32 } else { space };
        FailureBound::ratio(&(BigUint::from(r) * BigUint::from(model.degree_bound)), &den).pow(cfg.trials)
    };
    Ok(TwdReport {
        h,
        kernel_dims,
        ma_ranks,
        eligible,
        min_kernel,
        certified_not_twd: certified,
        status: if certified {
            TwdStatus::CertifiedNotTwd
        } else {
            TwdStatus::Inconclusive
        },
        trials: cfg.trials,
        seed: cfg.seed,
        codim_ma: model.coords() - max_rank,
        failure_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactla::{PrimeField, Ring};
    use crate::geometry::contracted_hessian;
    use crate::secantprobe::{derivative_weights, partial_derivative};

    fn model(s: &str) -> VarietyModel {
        VarietyModel::new(s.parse().unwrap()).unwrap()
    }

    fn cfg() -> ProbeConfig {
        ProbeConfig::default()
    }

    fn config(m: &VarietyModel, h: u64) -> Vec<ParamPoint<u64>> {
        sample_configuration(m, &PrimeField::default(), h, 11)
    }

    #[test]
    fn normal_functional_counts() {
        let f = PrimeField::default();
        let m = model("segre:1,1");
        assert_eq!(normal_functionals(&m, &f, &config(&m, 1)).unwrap().rows(), 1);
        let m = model("segre:1,1,1,1,1");
        assert_eq!(normal_functionals(&m, &f, &config(&m, 5)).unwrap().rows(), 2);
        let m = model("segre:1,1,1");
        assert_eq!(normal_functionals(&m, &f, &config(&m, 2)).unwrap().rows(), 0);
        assert!(matches!(
            contact_kernel_dim(&m, &f, &config(&m, 2), 0),
            Err(ProbeError::Inapplicable(_))
        ));
        assert!(matches!(
            contact_kernel_dim(&m, &f, &config(&m, 1), 1),
            Err(ProbeError::InvalidArgument(_))
        ));
    }

    #[test]
    fn contact_kernels() {
        let f = PrimeField::default();
        let m = model("veronese:d=2,n=2");
        let pts = config(&m, 2);
        for i in 0..2 {
            assert!(contact_kernel_dim(&m, &f, &pts, i).unwrap() >= 1);
        }
        let m = model("segre:1,1,1");
        assert_eq!(contact_kernel_dim(&m, &f, &config(&m, 1), 0).unwrap(), 0);
        let m = model("segre:1,1,1,1,1");
        let pts = config(&m, 4);
        for i in 0..4 {
            assert_eq!(contact_kernel_dim(&m, &f, &pts, i).unwrap(), 0);
        }
    }

    #[test]
    fn certification_examples() {
        let f = PrimeField::default();
        let r = certify_not_twd(&model("segre:1,1,1,1,1"), &f, 4, &cfg()).unwrap();
        assert!(r.certified_not_twd);
        assert!(r.failure_bound.is_zero());
        let r = certify_not_twd(&model("veronese:d=2,n=2"), &f, 2, &cfg()).unwrap();
        assert!(!r.certified_not_twd);
        assert!(r.min_kernel >= 1);
        assert_eq!(r.status, TwdStatus::Inconclusive);
        let r = certify_not_twd(&model("segre:1,1,1,1,1,1"), &f, 9, &cfg()).unwrap();
        assert!(r.certified_not_twd);
        assert!(matches!(
            certify_not_twd(&model("segre:1,1,1"), &f, 2, &cfg()),
            Err(ProbeError::Inapplicable(_))
        ));
    }

    #[test]
    fn report_is_reproducible() {
        let f = PrimeField::default();
        let m = model("grass:k=1,n=5");
        let a = certify_not_twd(&m, &f, 2, &cfg()).unwrap();
        let b = certify_not_twd(&m, &f, 2, &cfg()).unwrap();
        assert_eq!(a, b);
        assert!(a.min_kernel <= m.n);
    }

    #[test]
    fn certification_is_monotone_in_h() {
        let f = PrimeField::default();
        for s in ["segre:1,1,1,1", "segre:1,1,2", "veronese:d=3,n=2", "sv:d=1,2;n=1,2", "grass:k=1,n=5", "gm:d=9"] {
            let m = model(s);
            for h in 1..6u64 {
                let Ok(up) = certify_not_twd(&m, &f, h + 1, &cfg()) else {
                    continue;
                };
                if up.certified_not_twd {
                    let down = certify_not_twd(&m, &f, h, &cfg()).unwrap();
                    assert!(down.certified_not_twd, "{s} h={h}");
                }
            }
        }
    }

    #[test]
    fn hessian_matches_nested_finite_differences() {
        let f = PrimeField::default();
        for s in ["segre:1,2", "veronese:d=3,n=2", "grass:k=1,n=4", "gm:d=6", "sv:d=2,1;n=1,1"] {
            let m = model(s);
            let pts = config(&m, 1);
            let p = &pts[0];
            let normals = normal_functionals(&m, &f, &pts).unwrap();
            let ell = normals.row(0).to_vec();
            let h = contracted_hessian(&m, &f, p, &ell).unwrap();
            for i in 0..m.param_arity {
                let w = derivative_weights(&f, m.param_degree(i));
                for j in 0..m.param_arity {
                    let mut acc = 0u64;
                    for (k, c) in w.iter().enumerate() {
                        let mut x = p.coordinates().to_vec();
                        x[i] = f.add(&x[i], &f.from_i64(k as i64));
                        let d = partial_derivative(&m, &f, &x, j).unwrap();
                        let dot = d.iter().zip(&ell).fold(0, |a, (u, v)| f.add(&a, &f.mul(u, v)));
                        acc = f.add(&acc, &f.mul(c, &dot));
                    }
                    assert_eq!(*h.get(i, j), acc, "{s} ({i},{j})");
                }
            }
        }
    }
}
