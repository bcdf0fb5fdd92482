//! The six coherence measures with respect to a projective measurement.
//!
//! Three have spectral closed forms (off-block trace norms, the Tsallis
//! family, relative entropy of the dephased state) and three call the
//! certified solvers (trace distance, weight, sandwiched Renyi family).
//! Every evaluation returns the value together with the certificate behind
//! it, so callers can audit rather than trust.

use std::fmt;
use std::str::FromStr;

use crate::error::{CoherenceError, Result};
use crate::linalg::{entropy_term, psd_power, trace_norm, trace_re, CMatrix};
use crate::optim::{renyi_maximize, trace_norm_min, weight_sdp, Residuals, SolverConfig};
use crate::quantum::{DensityMatrix, ProjectiveMeasurement};

/// Values this close below zero are rounding noise and clamp to zero;
/// anything further below is a hard error.
pub const VALUE_CLAMP: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Measure {
    /// Sum of trace norms of the off-diagonal blocks.
    L1,
    /// Tsallis relative-entropy measure, alpha in (0,1) or (1,2].
    Tsallis { alpha: f64 },
    /// Relative entropy of coherence: S(dephased) - S(rho), in bits.
    Rel,
    /// Minimal trace-norm distance to the cone of block-diagonal states.
    Trace,
    /// One minus the largest block-diagonal weight fitting under rho.
    Weight,
    /// Sandwiched Renyi measure, alpha in [1/2, 1).
    Renyi { alpha: f64 },
}

impl Measure {
    pub fn eval_block(
        &self,
        rho: &DensityMatrix,
        p: &ProjectiveMeasurement,
        cfg: &SolverConfig,
    ) -> Result<MeasureResult> {
        match *self {
            Measure::L1 => c_l1_block(rho, p),
            Measure::Tsallis { alpha } => c_tsallis_block(rho, p, alpha),
            Measure::Rel => c_rel_block(rho, p),
            Measure::Trace => c_trace_block(rho, p, cfg),
            Measure::Weight => c_weight_block(rho, p, cfg),
            Measure::Renyi { alpha } => c_renyi_block(rho, p, alpha, cfg),
        }
    }

    /// True when the evaluation goes through an iterative solver.
    pub fn is_solver_based(&self) -> bool {
        matches!(
            self,
            Measure::Trace | Measure::Weight | Measure::Renyi { .. }
        )
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Measure::L1 => write!(f, "l1"),
            Measure::Tsallis { alpha } => write!(f, "tsallis:{alpha}"),
            Measure::Rel => write!(f, "rel"),
            Measure::Trace => write!(f, "trace"),
            Measure::Weight => write!(f, "weight"),
            Measure::Renyi { alpha } => write!(f, "renyi:{alpha}"),
        }
    }
}

impl FromStr for Measure {
    type Err = CoherenceError;

    fn from_str(s: &str) -> Result<Self> {
        let parse_alpha = |spec: &str, name: &str| -> Result<f64> {
            spec.parse::<f64>().map_err(|_| {
                CoherenceError::invalid(format!("{name} needs a numeric parameter, got {spec:?}"))
            })
        };
        match s.split_once(':') {
            None => match s {
                "l1" => Ok(Measure::L1),
                "rel" => Ok(Measure::Rel),
                "trace" => Ok(Measure::Trace),
                "weight" => Ok(Measure::Weight),
                "tsallis" | "renyi" => Err(CoherenceError::invalid(format!(
                    "{s} needs a parameter, e.g. {s}:0.5"
                ))),
                other => Err(CoherenceError::invalid(format!("unknown measure {other:?}"))),
            },
            Some(("tsallis", a)) => Ok(Measure::Tsallis {
                alpha: parse_alpha(a, "tsallis")?,
            }),
            Some(("renyi", a)) => Ok(Measure::Renyi {
                alpha: parse_alpha(a, "renyi")?,
            }),
            Some((other, _)) => Err(CoherenceError::invalid(format!(
                "unknown measure {other:?}"
            ))),
        }
    }
}

/// What the returned value is certified by.
#[derive(Debug, Clone)]
pub enum Certificate {
    /// The closest or optimal block-diagonal state.
    Sigma { sigma: CMatrix },
    /// Nearest point lambda * sigma of the block-diagonal cone.
    Scaled { lambda: f64, sigma: CMatrix },
    /// Decomposition rho = s * sigma + (1 - s) * remainder.
    Weight { s: f64, sigma: CMatrix },
    /// The optimum sits on a boundary where no state-valued certificate
    /// exists (zero weight, zero distance scale).
    Boundary,
}

#[derive(Debug, Clone, Default)]
pub struct Diagnostics {
    pub iterations: usize,
    pub converged: bool,
    pub residuals: Option<Residuals>,
}

impl Diagnostics {
    fn closed_form() -> Self {
        Diagnostics {
            iterations: 0,
            converged: true,
            residuals: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MeasureResult {
    pub value: f64,
    pub certificate: Option<Certificate>,
    pub diagnostics: Diagnostics,
}

fn clamp_value(v: f64) -> Result<f64> {
    if v < -VALUE_CLAMP {
        Err(CoherenceError::NegativeValue { value: v })
    } else {
        Ok(v.max(0.0))
    }
}

/// Sum over i != j of the trace norms of the off-diagonal blocks.
pub fn c_l1_block(rho: &DensityMatrix, p: &ProjectiveMeasurement) -> Result<MeasureResult> {
    check_dims(rho, p)?;
    let mut total = 0.0;
    for i in 0..p.outcomes() {
        for j in (i + 1)..p.outcomes() {
            total += 2.0 * trace_norm(&p.compress(rho.matrix(), i, j))?;
        }
    }
    Ok(MeasureResult {
        value: clamp_value(total)?,
        certificate: None,
        diagnostics: Diagnostics::closed_form(),
    })
}

/// Tsallis measure for alpha in (0,1) or (1,2], with the minimizing
/// block-diagonal state as certificate.
pub fn c_tsallis_block(
    rho: &DensityMatrix,
    p: &ProjectiveMeasurement,
    alpha: f64,
) -> Result<MeasureResult> {
    check_dims(rho, p)?;
    check_tsallis_alpha(alpha)?;
    let rho_a = psd_power(rho.matrix(), alpha)?;
    let mut roots = Vec::with_capacity(p.outcomes());
    let mut total = 0.0;
    for i in 0..p.outcomes() {
        let root = psd_power(&p.compress(&rho_a, i, i), 1.0 / alpha)?;
        total += trace_re(&root);
        roots.push(root);
    }
    let value = (total - 1.0) / (alpha - 1.0);
    let sigma = if total > 0.0 {
        let blocks: Vec<CMatrix> = roots.iter().map(|r| r.scale(1.0 / total)).collect();
        Some(Certificate::Sigma {
            sigma: p.assemble(&blocks),
        })
    } else {
        None
    };
    Ok(MeasureResult {
        value: clamp_value(value)?,
        certificate: sigma,
        diagnostics: Diagnostics::closed_form(),
    })
}

/// Relative entropy of coherence in bits: entropy gained by dephasing.
pub fn c_rel_block(rho: &DensityMatrix, p: &ProjectiveMeasurement) -> Result<MeasureResult> {
    check_dims(rho, p)?;
    let mut dephased_term = 0.0;
    for i in 0..p.outcomes() {
        dephased_term += entropy_term(&p.compress(rho.matrix(), i, i))?;
    }
    let value = entropy_term(rho.matrix())? - dephased_term;
    Ok(MeasureResult {
        value: clamp_value(value)?,
        certificate: None,
        diagnostics: Diagnostics::closed_form(),
    })
}

/// Minimal trace-norm distance from rho to the cone of nonnegative
/// multiples of block-diagonal states.
pub fn c_trace_block(
    rho: &DensityMatrix,
    p: &ProjectiveMeasurement,
    cfg: &SolverConfig,
) -> Result<MeasureResult> {
    check_dims(rho, p)?;
    let out = trace_norm_min(rho, p, cfg)?;
    let lambda = trace_re(&out.optimizer);
    let certificate = if lambda > 1e-10 {
        Certificate::Scaled {
            lambda,
            sigma: out.optimizer.scale(1.0 / lambda),
        }
    } else {
        Certificate::Boundary
    };
    Ok(MeasureResult {
        value: clamp_value(out.objective)?,
        certificate: Some(certificate),
        diagnostics: Diagnostics {
            iterations: out.iterations,
            converged: out.converged,
            residuals: Some(out.residuals),
        },
    })
}

/// One minus the largest weight of a block-diagonal state dominated by rho.
pub fn c_weight_block(
    rho: &DensityMatrix,
    p: &ProjectiveMeasurement,
    cfg: &SolverConfig,
) -> Result<MeasureResult> {
    check_dims(rho, p)?;
    let out = weight_sdp(rho, p, cfg)?;
    let s = out.objective.min(1.0);
    let certificate = if s > 1e-10 {
        Certificate::Weight {
            s,
            sigma: out.optimizer.scale(1.0 / s),
        }
    } else {
        Certificate::Boundary
    };
    Ok(MeasureResult {
        value: clamp_value(1.0 - s)?,
        certificate: Some(certificate),
        diagnostics: Diagnostics {
            iterations: out.iterations,
            converged: out.converged,
            residuals: Some(out.residuals),
        },
    })
}

/// Sandwiched Renyi measure for alpha in [1/2, 1).
pub fn c_renyi_block(
    rho: &DensityMatrix,
    p: &ProjectiveMeasurement,
    alpha: f64,
    cfg: &SolverConfig,
) -> Result<MeasureResult> {
    check_dims(rho, p)?;
    if !(0.5..1.0).contains(&alpha) {
        return Err(CoherenceError::BadAlpha {
            alpha,
            legal: "[1/2, 1)",
        });
    }
    let k = psd_power(rho.matrix(), (1.0 - alpha) / (2.0 * alpha))?;
    let out = renyi_maximize(&k, p, alpha, cfg)?;
    let g = out.objective.clamp(0.0, 1.0);
    let value = 1.0 - g.powf(1.0 / (1.0 - alpha));
    Ok(MeasureResult {
        value: clamp_value(value)?,
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

/// Minimum Tsallis divergence from rho to the block-diagonal states, in
/// closed form. The same data as the Tsallis measure, but on the divergence
/// scale: ({sum_i tr[(P_i rho^a P_i)^(1/a)]}^a - 1) / (a - 1).
pub fn tsallis_closest_divergence(
    rho: &DensityMatrix,
    p: &ProjectiveMeasurement,
    alpha: f64,
) -> Result<f64> {
    check_dims(rho, p)?;
    check_tsallis_alpha(alpha)?;
    let rho_a = psd_power(rho.matrix(), alpha)?;
    let mut total = 0.0;
    for i in 0..p.outcomes() {
        total += trace_re(&psd_power(&p.compress(&rho_a, i, i), 1.0 / alpha)?);
    }
    Ok((total.powf(alpha) - 1.0) / (alpha - 1.0))
}

/// Tsallis relative divergence between a state and a reference PSD state,
/// alpha in (0,1) or (1,2]. Infinite for alpha > 1 when rho leaks out of
/// the support of sigma.
pub fn tsallis_divergence(rho: &DensityMatrix, sigma: &CMatrix, alpha: f64) -> Result<f64> {
    check_tsallis_alpha(alpha)?;
    if sigma.nrows() != rho.dim() || sigma.ncols() != rho.dim() {
        return Err(CoherenceError::DimMismatch {
            expected: rho.dim(),
            found: sigma.nrows(),
        });
    }
    if alpha > 1.0 {
        // rho mass outside supp(sigma) makes the divergence infinite.
        let eig = crate::linalg::eigh(sigma)?;
        let top = eig.values.first().copied().unwrap_or(0.0).max(0.0);
        let null_mass: f64 = (0..eig.values.len())
            .filter(|&j| eig.values[j] <= 1e-12 * top)
            .map(|j| {
                let v = eig.vectors.column(j);
                (v.adjoint() * rho.matrix() * v)[(0, 0)].re
            })
            .sum();
        if null_mass > 1e-9 {
            return Ok(f64::INFINITY);
        }
    }
    let rho_a = psd_power(rho.matrix(), alpha)?;
    let sigma_b = psd_power(sigma, 1.0 - alpha)?;
    Ok((trace_re(&(&rho_a * &sigma_b)) - 1.0) / (alpha - 1.0))
}

fn check_dims(rho: &DensityMatrix, p: &ProjectiveMeasurement) -> Result<()> {
    if rho.dim() != p.dim() {
        return Err(CoherenceError::DimMismatch {
            expected: p.dim(),
            found: rho.dim(),
        });
    }
    Ok(())
}

fn check_tsallis_alpha(alpha: f64) -> Result<()> {
    if (alpha > 0.0 && alpha < 1.0) || (alpha > 1.0 && alpha <= 2.0) {
        Ok(())
    } else {
        Err(CoherenceError::BadAlpha {
            alpha,
            legal: "(0,1) or (1,2]",
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Complex64;
    use crate::quantum::{block_dephase, random_density, random_projective};

    fn plus_state() -> DensityMatrix {
        let mut v = CMatrix::zeros(2, 1);
        v[(0, 0)] = Complex64::new(1.0, 0.0);
        v[(1, 0)] = Complex64::new(1.0, 0.0);
        DensityMatrix::pure(&v).unwrap()
    }

    fn eval(m: Measure, rho: &DensityMatrix, p: &ProjectiveMeasurement) -> MeasureResult {
        m.eval_block(rho, p, &SolverConfig::default()).unwrap()
    }

    #[test]
    fn golden_values_on_plus_state() {
        let p = ProjectiveMeasurement::computational(2).unwrap();
        let rho = plus_state();
        assert!((eval(Measure::L1, &rho, &p).value - 1.0).abs() < 1e-10);
        assert!((eval(Measure::Rel, &rho, &p).value - 1.0).abs() < 1e-10);
        let t2 = eval(Measure::Tsallis { alpha: 2.0 }, &rho, &p).value;
        assert!((t2 - (2f64.sqrt() - 1.0)).abs() < 1e-10, "t2 {t2}");
        assert!((eval(Measure::Trace, &rho, &p).value - 1.0).abs() < 1e-6);
        assert!((eval(Measure::Weight, &rho, &p).value - 1.0).abs() < 1e-6);
        let r = eval(Measure::Renyi { alpha: 0.5 }, &rho, &p).value;
        assert!((r - 0.5).abs() < 1e-6, "renyi {r}");
    }

    #[test]
    fn all_measures_vanish_on_maximally_mixed() {
        let p = ProjectiveMeasurement::computational(3).unwrap();
        let rho = DensityMatrix::maximally_mixed(3);
        for m in [
            Measure::L1,
            Measure::Tsallis { alpha: 0.7 },
            Measure::Tsallis { alpha: 2.0 },
            Measure::Rel,
            Measure::Trace,
            Measure::Weight,
            Measure::Renyi { alpha: 0.5 },
        ] {
            let out = eval(m, &rho, &p);
            assert!(out.value.abs() < 1e-6, "{m}: {}", out.value);
        }
    }

    #[test]
    fn measures_vanish_on_block_diagonal_states() {
        let p = random_projective(4, &[2, 2], 3).unwrap();
        let rho = block_dephase(&random_density(4, 4, 7).unwrap(), &p).unwrap();
        for m in [
            Measure::L1,
            Measure::Tsallis { alpha: 1.5 },
            Measure::Rel,
            Measure::Trace,
            Measure::Weight,
            Measure::Renyi { alpha: 0.75 },
        ] {
            let out = eval(m, &rho, &p);
            let tol = if m.is_solver_based() { 1e-6 } else { 1e-10 };
            assert!(out.value.abs() < tol, "{m}: {}", out.value);
        }
    }

    #[test]
    fn tsallis_certificate_achieves_the_closed_form_divergence() {
        for (alpha, seed) in [(1.5, 13u64), (0.6, 14), (2.0, 15)] {
            let p = random_projective(4, &[1, 3], seed).unwrap();
            let rho = random_density(4, 4, seed ^ 0x77).unwrap();
            let out = c_tsallis_block(&rho, &p, alpha).unwrap();
            let Certificate::Sigma { sigma } = out.certificate.unwrap() else {
                panic!("expected a state certificate")
            };
            let d = tsallis_divergence(&rho, &sigma, alpha).unwrap();
            let closed = tsallis_closest_divergence(&rho, &p, alpha).unwrap();
            assert!((d - closed).abs() < 1e-10, "divergence {d} closed {closed}");
            assert!((trace_re(&sigma) - 1.0).abs() < 1e-10);
            // same data on two scales: sum = 1 exactly when both vanish
            let sum = out.value * (alpha - 1.0) + 1.0;
            assert!((closed - (sum.powf(alpha) - 1.0) / (alpha - 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn tsallis_alpha_near_one_approaches_scaled_relative_entropy() {
        let p = random_projective(3, &[1, 2], 2).unwrap();
        let rho = random_density(3, 3, 4).unwrap();
        let rel = c_rel_block(&rho, &p).unwrap().value;
        for alpha in [1.0 - 1e-4, 1.0 + 1e-4] {
            let t = c_tsallis_block(&rho, &p, alpha).unwrap().value;
            assert!(
                (t / std::f64::consts::LN_2 - rel).abs() < 1e-3,
                "alpha {alpha}: tsallis {t} rel {rel}"
            );
        }
    }

    #[test]
    fn alpha_domains_are_enforced() {
        let p = ProjectiveMeasurement::computational(2).unwrap();
        let rho = plus_state();
        for bad in [0.0, 1.0, 2.5, -0.3] {
            assert!(matches!(
                c_tsallis_block(&rho, &p, bad),
                Err(CoherenceError::BadAlpha { .. })
            ));
        }
        for bad in [0.3, 1.0, 1.2] {
            assert!(matches!(
                c_renyi_block(&rho, &p, bad, &SolverConfig::default()),
                Err(CoherenceError::BadAlpha { .. })
            ));
        }
    }

    #[test]
    fn divergence_is_infinite_off_support_for_large_alpha() {
        let rho = plus_state();
        let mut sigma = CMatrix::zeros(2, 2);
        sigma[(0, 0)] = Complex64::new(1.0, 0.0);
        assert!(tsallis_divergence(&rho, &sigma, 1.5).unwrap().is_infinite());
        assert!(tsallis_divergence(&rho, &sigma, 0.5).unwrap().is_finite());
    }

    #[test]
    fn weight_certificate_reconstructs_the_decomposition() {
        let p = ProjectiveMeasurement::standard_blocks(&[1, 1]).unwrap();
        let mut m = CMatrix::zeros(2, 2);
        m[(0, 0)] = Complex64::new(0.75, 0.0);
        m[(1, 1)] = Complex64::new(0.25, 0.0);
        m[(0, 1)] = Complex64::new(0.2, 0.0);
        m[(1, 0)] = Complex64::new(0.2, 0.0);
        let rho = DensityMatrix::new(m).unwrap();
        let out = c_weight_block(&rho, &p, &SolverConfig::default()).unwrap();
        let Certificate::Weight { s, sigma } = out.certificate.unwrap() else {
            panic!("expected a weight certificate")
        };
        assert!((out.value - (1.0 - s)).abs() < 1e-12);
        assert!((trace_re(&sigma) - 1.0).abs() < 1e-8);
        // rho - s * sigma must stay PSD
        let rem = rho.matrix() - sigma.scale(s);
        let min = crate::linalg::eigh(&rem).unwrap().values.last().copied().unwrap();
        assert!(min > -1e-7, "remainder eigenvalue {min}");
    }

    #[test]
    fn measure_names_round_trip() {
        for m in [
            Measure::L1,
            Measure::Tsallis { alpha: 1.5 },
            Measure::Rel,
            Measure::Trace,
            Measure::Weight,
            Measure::Renyi { alpha: 0.5 },
        ] {
            let s = m.to_string();
            assert_eq!(s.parse::<Measure>().unwrap(), m, "{s}");
        }
        assert!("tsallis".parse::<Measure>().is_err());
        assert!("bogus".parse::<Measure>().is_err());
        assert!("renyi:x".parse::<Measure>().is_err());
    }
}
