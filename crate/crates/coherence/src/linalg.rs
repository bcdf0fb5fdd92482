//! Dense complex linear algebra: Hermitian eigendecomposition, trace norm,
//! and spectral matrix functions on positive semidefinite operators.
//!
//! Everything here works on `CMatrix` (dynamically sized, column-major
//! `nalgebra` storage of `Complex<f64>`). Dimensions stay small (tens), so
//! dense decompositions are the right tool throughout.

use nalgebra::DMatrix;
pub use num_complex::Complex64;

use crate::error::{CoherenceError, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Hermiticity residuals up to this relative size are accepted verbatim.
pub const HERMITIAN_EXACT_TOL: f64 = 1e-12;
/// Residuals between `HERMITIAN_EXACT_TOL` and this bound are symmetrized
/// away; anything larger is rejected.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Eigenvalues below this fraction of the largest one are treated as zero
/// when applying spectral functions.
pub const EIG_FLOOR_REL: f64 = 1e-12;
/// Most negative eigenvalue tolerated before an operator stops counting as
/// positive semidefinite.
pub const PSD_TOL: f64 = 1e-8;

/// Eigendecomposition of a Hermitian matrix. `values` are real and sorted in
/// descending order; column `j` of `vectors` is the eigenvector for
/// `values[j]`.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl EigenSystem {
    /// Rebuilds `U diag(f(values)) U^dagger`.
    pub fn assemble(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let n = self.vectors.nrows();
        let mut out = CMatrix::zeros(n, n);
        for (j, &v) in self.values.iter().enumerate() {
            let fv = f(v);
            if fv == 0.0 {
                continue;
            }
            let col = self.vectors.column(j);
            for r in 0..n {
                for c in 0..n {
                    out[(r, c)] += col[r] * col[c].conj() * fv;
                }
            }
        }
        hermitize(&out)
    }
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn dagger(m: &CMatrix) -> CMatrix {
    m.adjoint()
}

/// (m + m^dagger) / 2
pub fn hermitize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

pub fn frobenius(m: &CMatrix) -> f64 {
    m.norm()
}

pub fn trace(m: &CMatrix) -> Complex64 {
    m.diagonal().sum()
}

pub fn trace_re(m: &CMatrix) -> f64 {
    trace(m).re
}

/// Kronecker product, row factor varying slowest.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Frobenius distance from Hermiticity, relative to max(1, ||m||_F).
pub fn hermiticity_residual(m: &CMatrix) -> f64 {
    (m - m.adjoint()).norm() / 1f64.max(m.norm())
}

/// Hermitian eigendecomposition with descending eigenvalues.
///
/// Inputs with relative Hermiticity residual in
/// (`HERMITIAN_EXACT_TOL`, `HERMITIAN_TOL`] are symmetrized first; larger
/// residuals are an error.
pub fn eigh(h: &CMatrix) -> Result<EigenSystem> {
    if h.nrows() != h.ncols() {
        return Err(CoherenceError::DimMismatch {
            expected: h.nrows(),
            found: h.ncols(),
        });
    }
    let residual = hermiticity_residual(h);
    if residual > HERMITIAN_TOL {
        return Err(CoherenceError::NotHermitian { residual });
    }
    let work = if residual > HERMITIAN_EXACT_TOL {
        hermitize(h)
    } else {
        h.clone()
    };
    let se = work
        .try_symmetric_eigen(f64::EPSILON, 100_000)
        .ok_or(CoherenceError::NoConvergence {
            what: "Hermitian eigendecomposition",
        })?;
    let n = h.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| se.eigenvalues[b].partial_cmp(&se.eigenvalues[a]).unwrap());
    let values: Vec<f64> = order.iter().map(|&j| se.eigenvalues[j]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &se.eigenvectors.column(src));
    }
    Ok(EigenSystem { values, vectors })
}

/// Sum of singular values.
pub fn trace_norm(m: &CMatrix) -> Result<f64> {
    let svd = m
        .clone()
        .try_svd(false, false, f64::EPSILON, 100_000)
        .ok_or(CoherenceError::NoConvergence {
            what: "singular value decomposition",
        })?;
    Ok(svd.singular_values.iter().sum())
}

fn psd_values(h: &CMatrix, context: &'static str) -> Result<EigenSystem> {
    let eig = eigh(h)?;
    let top = eig.values.first().copied().unwrap_or(0.0);
    let min = eig.values.last().copied().unwrap_or(0.0);
    if min < -PSD_TOL * 1f64.max(top) {
        let _ = context;
        return Err(CoherenceError::NotPsd {
            min_eigenvalue: min,
        });
    }
    Ok(eig)
}

/// h^t for positive semidefinite h, with 0^t = 0 on the kernel for every t
/// (negative powers act on the support only).
pub fn psd_power(h: &CMatrix, t: f64) -> Result<CMatrix> {
    if !t.is_finite() {
        return Err(CoherenceError::invalid("matrix power exponent must be finite"));
    }
    let eig = psd_values(h, "psd_power")?;
    let top = eig.values.first().copied().unwrap_or(0.0);
    let floor = EIG_FLOOR_REL * top.max(0.0);
    Ok(eig.assemble(|v| if v > floor { v.powf(t) } else { 0.0 }))
}

/// log2(h) on the support of h; the kernel maps to zero, so
/// tr(h . psd_log2(h)) realizes the 0 log 0 = 0 convention.
pub fn psd_log2(h: &CMatrix) -> Result<CMatrix> {
    let eig = psd_values(h, "psd_log2")?;
    let top = eig.values.first().copied().unwrap_or(0.0);
    let floor = EIG_FLOOR_REL * top.max(0.0);
    Ok(eig.assemble(|v| if v > floor { v.log2() } else { 0.0 }))
}

/// Nearest positive semidefinite matrix in Frobenius norm (negative
/// eigenvalues clipped to zero). Input is symmetrized unconditionally; this
/// is a solver workhorse, not a validator.
pub fn psd_project(h: &CMatrix) -> Result<CMatrix> {
    let work = hermitize(h);
    let n = work.nrows();
    let se = work
        .try_symmetric_eigen(f64::EPSILON, 100_000)
        .ok_or(CoherenceError::NoConvergence {
            what: "Hermitian eigendecomposition",
        })?;
    let mut out = CMatrix::zeros(n, n);
    for j in 0..n {
        let v = se.eigenvalues[j];
        if v <= 0.0 {
            continue;
        }
        let col = se.eigenvectors.column(j);
        for r in 0..n {
            for c in 0..n {
                out[(r, c)] += col[r] * col[c].conj() * v;
            }
        }
    }
    Ok(hermitize(&out))
}

/// tr(h log2 h) with 0 log 0 = 0; h must be PSD.
pub fn entropy_term(h: &CMatrix) -> Result<f64> {
    let eig = psd_values(h, "entropy")?;
    let top = eig.values.first().copied().unwrap_or(0.0);
    let floor = EIG_FLOOR_REL * top.max(0.0);
    Ok(eig
        .values
        .iter()
        .map(|&v| if v > floor { v * v.log2() } else { 0.0 })
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    pub fn randn_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> CMatrix {
        CMatrix::from_fn(rows, cols, |_, _| {
            Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
        })
    }

    fn random_hermitian(n: usize, rng: &mut ChaCha8Rng) -> CMatrix {
        let g = randn_matrix(n, n, rng);
        hermitize(&g)
    }

    fn random_psd(n: usize, rng: &mut ChaCha8Rng) -> CMatrix {
        let g = randn_matrix(n, n, rng);
        &g * g.adjoint()
    }

    fn diag(entries: &[f64]) -> CMatrix {
        let n = entries.len();
        CMatrix::from_fn(n, n, |r, c| {
            if r == c {
                Complex64::new(entries[r], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    #[test]
    fn eigh_identity() {
        let eig = eigh(&identity(3)).unwrap();
        for v in eig.values {
            assert!((v - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn eigh_indefinite_diagonal() {
        let eig = eigh(&diag(&[2.0, -1.0])).unwrap();
        assert!((eig.values[0] - 2.0).abs() < 1e-14);
        assert!((eig.values[1] + 1.0).abs() < 1e-14);
    }

    #[test]
    fn eigh_rejects_non_hermitian() {
        let mut m = CMatrix::zeros(2, 2);
        m[(0, 1)] = Complex64::new(1.0, 0.0);
        assert!(matches!(
            eigh(&m),
            Err(CoherenceError::NotHermitian { .. })
        ));
    }

    #[test]
    fn eigh_reconstructs_random_hermitian() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let h = random_hermitian(6, &mut rng);
            let eig = eigh(&h).unwrap();
            let rec = eig.assemble(|v| v);
            assert!((&rec - &h).norm() / h.norm() < 1e-10);
            let gram = eig.vectors.adjoint() * &eig.vectors - identity(6);
            assert!(gram.norm() < 1e-10);
            for w in eig.values.windows(2) {
                assert!(w[0] >= w[1]);
            }
        }
    }

    #[test]
    fn trace_norm_of_rank_one_outer_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let a = randn_matrix(5, 1, &mut rng);
            let b = randn_matrix(5, 1, &mut rng);
            let a = a.scale(1.0 / a.norm());
            let b = b.scale(1.0 / b.norm());
            let outer = &a * b.adjoint();
            assert!((trace_norm(&outer).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn trace_norm_is_unitarily_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let m = randn_matrix(6, 6, &mut rng);
            let u = randn_matrix(6, 6, &mut rng).qr().q();
            let w = randn_matrix(6, 6, &mut rng).qr().q();
            let t0 = trace_norm(&m).unwrap();
            let t1 = trace_norm(&(&u * &m * &w)).unwrap();
            assert!((t0 - t1).abs() < 1e-10 * t0.max(1.0));
        }
    }

    #[test]
    fn psd_power_square_root_of_diagonal() {
        let r = psd_power(&diag(&[4.0, 1.0]), 0.5).unwrap();
        assert!((&r - diag(&[2.0, 1.0])).norm() < 1e-12);
    }

    #[test]
    fn psd_power_zero_matrix_negative_exponent() {
        let z = CMatrix::zeros(2, 2);
        let r = psd_power(&z, -0.5).unwrap();
        assert!(r.norm() == 0.0);
    }

    #[test]
    fn psd_power_rejects_indefinite() {
        assert!(matches!(
            psd_power(&diag(&[1.0, -1.0]), 0.5),
            Err(CoherenceError::NotPsd { .. })
        ));
    }

    #[test]
    fn psd_power_is_additive_in_the_exponent() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..10 {
            let h = random_psd(5, &mut rng);
            let a = psd_power(&h, 0.7).unwrap();
            let b = psd_power(&h, 0.3).unwrap();
            let whole = psd_power(&h, 1.0).unwrap();
            assert!((&a * &b - whole).norm() < 1e-9 * h.norm().max(1.0));
        }
    }

    #[test]
    fn psd_log2_matches_scalar_log_on_diagonal() {
        let l = psd_log2(&diag(&[8.0, 1.0, 0.0])).unwrap();
        assert!((l[(0, 0)].re - 3.0).abs() < 1e-12);
        assert!(l[(1, 1)].norm() < 1e-12);
        assert!(l[(2, 2)].norm() < 1e-12);
    }

    #[test]
    fn entropy_term_matches_eigenvalue_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let h = random_psd(4, &mut rng);
        let h = h.scale(1.0 / trace_re(&h));
        let direct = entropy_term(&h).unwrap();
        let via_log: f64 = trace_re(&(&h * psd_log2(&h).unwrap()));
        assert!((direct - via_log).abs() < 1e-10);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn prop_eigh_roundtrip(seed in any::<u64>(), n in 1usize..7) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let h = random_hermitian(n, &mut rng);
            let eig = eigh(&h).unwrap();
            let rec = eig.assemble(|v| v);
            prop_assert!((&rec - &h).norm() <= 1e-10 * h.norm().max(1.0));
        }

        #[test]
        fn prop_trace_norm_triangle(seed in any::<u64>(), n in 1usize..6) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = randn_matrix(n, n, &mut rng);
            let b = randn_matrix(n, n, &mut rng);
            let lhs = trace_norm(&(&a + &b)).unwrap();
            let rhs = trace_norm(&a).unwrap() + trace_norm(&b).unwrap();
            prop_assert!(lhs <= rhs + 1e-9 * rhs.max(1.0));
        }
    }
}
