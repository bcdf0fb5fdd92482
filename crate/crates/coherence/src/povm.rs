//! Coherence measures with respect to a POVM.
//!
//! A POVM instance is scored by embedding the state into the extended space
//! of its canonical unitary extension and applying the block measures with
//! respect to the register blocks. The l1, Tsallis, and relative-entropy
//! measures collapse to closed forms in the Kraus operators, so those three
//! also have a direct route; the spectral identities behind the collapse
//! make the two routes agree to rounding.

use crate::block::{
    c_l1_block, c_rel_block, c_trace_block, c_tsallis_block, c_weight_block, Certificate,
    Diagnostics, Measure, MeasureResult,
};
use crate::error::{CoherenceError, Result};
use crate::linalg::{entropy_term, psd_power, trace_norm, trace_re, CMatrix};
use crate::optim::{renyi_maximize, SolverConfig};
use crate::quantum::{DensityMatrix, Povm, ProjectiveMeasurement};

/// Which evaluation path to take for a POVM measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Route {
    /// Closed form in the Kraus operators; only the l1, Tsallis, and
    /// relative-entropy measures have one.
    Direct,
    /// Through the extended space and the register blocks.
    #[default]
    Embedded,
}

/// The register measurement of the extended space: one block per outcome.
pub fn register_blocks(e: &Povm) -> Result<ProjectiveMeasurement> {
    ProjectiveMeasurement::standard_blocks(&vec![e.dim(); e.outcomes()])
}

/// Embeds a system operator into the extended space: the block matrix with
/// (i, j) entry A_i x A_j^dag.
pub fn embed_operator(x: &CMatrix, e: &Povm) -> Result<CMatrix> {
    let d = e.dim();
    let n = e.outcomes();
    if x.nrows() != d || x.ncols() != d {
        return Err(CoherenceError::DimMismatch {
            expected: d,
            found: x.nrows(),
        });
    }
    let lifted: Vec<CMatrix> = e.kraus_ops().iter().map(|a| a * x).collect();
    let mut out = CMatrix::zeros(n * d, n * d);
    for i in 0..n {
        for j in 0..n {
            let blk = &lifted[i] * e.kraus_ops()[j].adjoint();
            out.view_mut((i * d, j * d), (d, d)).copy_from(&blk);
        }
    }
    Ok(out)
}

/// Embeds a state; the result is a state of the extended space.
pub fn embed_state(rho: &DensityMatrix, e: &Povm) -> Result<DensityMatrix> {
    check_dims(rho, e)?;
    DensityMatrix::new(embed_operator(rho.matrix(), e)?)
}

impl Measure {
    pub fn eval_povm(
        &self,
        rho: &DensityMatrix,
        e: &Povm,
        route: Route,
        cfg: &SolverConfig,
    ) -> Result<MeasureResult> {
        match (route, *self) {
            (Route::Direct, Measure::L1) => c_l1_povm(rho, e),
            (Route::Direct, Measure::Tsallis { alpha }) => c_tsallis_povm(rho, e, alpha),
            (Route::Direct, Measure::Rel) => c_rel_povm(rho, e),
            (Route::Direct, m) => Err(CoherenceError::invalid(format!(
                "{m} has no direct route for a POVM; use the embedded route"
            ))),
            (Route::Embedded, m) => {
                let pbar = register_blocks(e)?;
                match m {
                    Measure::Renyi { alpha } => c_renyi_povm(rho, e, &pbar, alpha, cfg),
                    Measure::L1 => c_l1_block(&embed_state(rho, e)?, &pbar),
                    Measure::Tsallis { alpha } => {
                        c_tsallis_block(&embed_state(rho, e)?, &pbar, alpha)
                    }
                    Measure::Rel => c_rel_block(&embed_state(rho, e)?, &pbar),
                    Measure::Trace => c_trace_block(&embed_state(rho, e)?, &pbar, cfg),
                    Measure::Weight => c_weight_block(&embed_state(rho, e)?, &pbar, cfg),
                }
            }
        }
    }
}

/// Sum over i != j of trace norms of A_i rho A_j^dag.
pub fn c_l1_povm(rho: &DensityMatrix, e: &Povm) -> Result<MeasureResult> {
    check_dims(rho, e)?;
    let ops = e.kraus_ops();
    let mut total = 0.0;
    for i in 0..ops.len() {
        let left = &ops[i] * rho.matrix();
        for j in 0..ops.len() {
            if i != j {
                total += trace_norm(&(&left * ops[j].adjoint()))?;
            }
        }
    }
    Ok(MeasureResult {
        value: clamp(total)?,
        certificate: None,
        diagnostics: Diagnostics {
            iterations: 0,
            converged: true,
            residuals: None,
        },
    })
}

/// Tsallis measure in the Kraus operators, alpha in (0,1) or (1,2].
pub fn c_tsallis_povm(rho: &DensityMatrix, e: &Povm, alpha: f64) -> Result<MeasureResult> {
    check_dims(rho, e)?;
    if !((alpha > 0.0 && alpha < 1.0) || (alpha > 1.0 && alpha <= 2.0)) {
        return Err(CoherenceError::BadAlpha {
            alpha,
            legal: "(0,1) or (1,2]",
        });
    }
    let rho_a = psd_power(rho.matrix(), alpha)?;
    let mut total = 0.0;
    for a in e.kraus_ops() {
        total += trace_re(&psd_power(&(a * &rho_a * a.adjoint()), 1.0 / alpha)?);
    }
    Ok(MeasureResult {
        value: clamp((total - 1.0) / (alpha - 1.0))?,
        certificate: None,
        diagnostics: Diagnostics {
            iterations: 0,
            converged: true,
            residuals: None,
        },
    })
}

/// Relative-entropy measure in the Kraus operators, in bits.
pub fn c_rel_povm(rho: &DensityMatrix, e: &Povm) -> Result<MeasureResult> {
    check_dims(rho, e)?;
    let mut branch_terms = 0.0;
    for a in e.kraus_ops() {
        branch_terms += entropy_term(&(a * rho.matrix() * a.adjoint()))?;
    }
    Ok(MeasureResult {
        value: clamp(entropy_term(rho.matrix())? - branch_terms)?,
        certificate: None,
        diagnostics: Diagnostics {
            iterations: 0,
            converged: true,
            residuals: None,
        },
    })
}

/// Sandwiched Renyi measure: the kernel is the embedding of rho to the
/// power (1 - alpha) / (2 alpha), not a power of the embedded state.
fn c_renyi_povm(
    rho: &DensityMatrix,
    e: &Povm,
    pbar: &ProjectiveMeasurement,
    alpha: f64,
    cfg: &SolverConfig,
) -> Result<MeasureResult> {
    check_dims(rho, e)?;
    if !(0.5..1.0).contains(&alpha) {
        return Err(CoherenceError::BadAlpha {
            alpha,
            legal: "[1/2, 1)",
        });
    }
    let k = embed_operator(&psd_power(rho.matrix(), (1.0 - alpha) / (2.0 * alpha))?, e)?;
    let out = renyi_maximize(&k, pbar, alpha, cfg)?;
    let g = out.objective.clamp(0.0, 1.0);
    Ok(MeasureResult {
        value: clamp(1.0 - g.powf(1.0 / (1.0 - alpha)))?,
        certificate: Some(Certificate::Sigma {
            sigma: out.optimizer,
        }),
        diagnostics: Diagnostics {
            iterations: out.iterations,
            converged: out.converged,
            residuals: Some(out.residuals),
        },
    })
}

fn clamp(v: f64) -> Result<f64> {
    if v < -crate::block::VALUE_CLAMP {
        Err(CoherenceError::NegativeValue { value: v })
    } else {
        Ok(v.max(0.0))
    }
}

fn check_dims(rho: &DensityMatrix, e: &Povm) -> Result<()> {
    if rho.dim() != e.dim() {
        return Err(CoherenceError::DimMismatch {
            expected: e.dim(),
            found: rho.dim(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Complex64;
    use crate::quantum::{random_density, random_povm};

    pub(crate) fn trine_povm() -> Povm {
        let effects: Vec<CMatrix> = (0..3)
            .map(|k| {
                let th = k as f64 * std::f64::consts::PI / 3.0;
                let v = CMatrix::from_row_slice(
                    2,
                    1,
                    &[
                        Complex64::new(th.cos(), 0.0),
                        Complex64::new(th.sin(), 0.0),
                    ],
                );
                (&v * v.adjoint()).scale(2.0 / 3.0)
            })
            .collect();
        Povm::new(effects, None).unwrap()
    }

    #[test]
    fn trine_l1_of_maximally_mixed_is_one() {
        let e = trine_povm();
        let rho = DensityMatrix::maximally_mixed(2);
        let out = c_l1_povm(&rho, &e).unwrap();
        assert!((out.value - 1.0).abs() < 1e-12, "value {}", out.value);
    }

    #[test]
    fn direct_and_embedded_routes_agree_on_closed_forms() {
        for seed in 0..5u64 {
            let e = random_povm(3, 3, seed).unwrap();
            let rho = random_density(3, 3, seed ^ 0x11).unwrap();
            let cfg = SolverConfig::default();
            for m in [
                Measure::L1,
                Measure::Tsallis { alpha: 1.7 },
                Measure::Tsallis { alpha: 0.4 },
                Measure::Rel,
            ] {
                let direct = m.eval_povm(&rho, &e, Route::Direct, &cfg).unwrap().value;
                let embedded = m.eval_povm(&rho, &e, Route::Embedded, &cfg).unwrap().value;
                assert!(
                    (direct - embedded).abs() < 1e-8,
                    "{m} seed {seed}: direct {direct} embedded {embedded}"
                );
            }
        }
    }

    #[test]
    fn solver_measures_reject_the_direct_route() {
        let e = trine_povm();
        let rho = DensityMatrix::maximally_mixed(2);
        let cfg = SolverConfig::default();
        for m in [
            Measure::Trace,
            Measure::Weight,
            Measure::Renyi { alpha: 0.5 },
        ] {
            assert!(matches!(
                m.eval_povm(&rho, &e, Route::Direct, &cfg),
                Err(CoherenceError::InvalidInput { .. })
            ));
        }
    }

    #[test]
    fn single_outcome_povm_scores_zero_everywhere() {
        let e = Povm::new(vec![crate::linalg::identity(3)], None).unwrap();
        let rho = random_density(3, 3, 2).unwrap();
        let cfg = SolverConfig::default();
        for m in [
            Measure::L1,
            Measure::Tsallis { alpha: 2.0 },
            Measure::Rel,
            Measure::Trace,
            Measure::Weight,
            Measure::Renyi { alpha: 0.5 },
        ] {
            let out = m.eval_povm(&rho, &e, Route::Embedded, &cfg).unwrap();
            assert!(out.value.abs() < 1e-6, "{m}: {}", out.value);
        }
    }

    #[test]
    fn projective_povm_reproduces_the_block_values() {
        let p = ProjectiveMeasurement::computational(3).unwrap();
        let e = Povm::from_projective(&p);
        let rho = random_density(3, 3, 8).unwrap();
        let cfg = SolverConfig::default();
        for m in [Measure::L1, Measure::Tsallis { alpha: 1.5 }, Measure::Rel] {
            let block = m.eval_block(&rho, &p, &cfg).unwrap().value;
            let povm = m.eval_povm(&rho, &e, Route::Direct, &cfg).unwrap().value;
            assert!(
                (block - povm).abs() < 1e-10,
                "{m}: block {block} povm {povm}"
            );
        }
    }

    #[test]
    fn embedded_state_is_valid_and_blockwise_consistent() {
        let e = random_povm(2, 4, 3).unwrap();
        let rho = random_density(2, 2, 4).unwrap();
        let emb = embed_state(&rho, &e).unwrap();
        assert_eq!(emb.dim(), 8);
        let pbar = register_blocks(&e).unwrap();
        for i in 0..4 {
            let blk = pbar.compress(emb.matrix(), i, i);
            let a = &e.kraus_ops()[i];
            let expect = a * rho.matrix() * a.adjoint();
            assert!(crate::linalg::frobenius(&(blk - expect)) < 1e-12);
        }
    }
}
