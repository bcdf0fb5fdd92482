//! Canonical unitary extension of a POVM.
//!
//! The Kraus operators stack into an isometry W from the system space into
//! n copies of it; completing W's columns to a unitary V yields the d x d
//! grid A_ij of blocks whose first column reproduces the Kraus operators.
//! The extended space is ordered register-major (register index times d
//! plus system index), so the register projectors are literal block
//! projectors and the embedding of a system operator is the block matrix
//! with (i, j) entry A_i x A_j^dag.

use crate::error::{CoherenceError, Result};
use crate::linalg::{frobenius, identity, CMatrix, Complex64};
use crate::quantum::{gaussian_matrix, seeded_rng, DensityMatrix, Povm, ProjectiveMeasurement};

/// How the non-isometry columns of the unitary are chosen. The choice is a
/// gauge: all completions give the same embedding and statistics.
#[derive(Debug, Clone, Copy, Default)]
pub enum Completion {
    /// Orthogonalize standard basis vectors against the isometry.
    #[default]
    StandardBasis,
    /// Orthogonalize seeded Gaussian vectors instead.
    Seeded(u64),
}

#[derive(Debug, Clone)]
pub struct NaimarkExtension {
    system_dim: usize,
    outcomes: usize,
    v: CMatrix,
    pbar: ProjectiveMeasurement,
}

impl NaimarkExtension {
    pub fn system_dim(&self) -> usize {
        self.system_dim
    }

    pub fn outcomes(&self) -> usize {
        self.outcomes
    }

    /// The completed unitary on the extended space.
    pub fn unitary(&self) -> &CMatrix {
        &self.v
    }

    /// The isometry: first `system_dim` columns of the unitary.
    pub fn isometry(&self) -> CMatrix {
        self.v
            .view((0, 0), (self.system_dim * self.outcomes, self.system_dim))
            .into_owned()
    }

    /// Block (i, j) of the unitary; block column 0 holds the Kraus
    /// operators.
    pub fn block(&self, i: usize, j: usize) -> CMatrix {
        let d = self.system_dim;
        self.v.view((i * d, j * d), (d, d)).into_owned()
    }

    /// Register measurement on the extended space.
    pub fn register_measurement(&self) -> &ProjectiveMeasurement {
        &self.pbar
    }

    /// Embeds a system operator: the block matrix with (i, j) entry
    /// A_i x A_j^dag. For a state this equals conjugating x tensor a fixed
    /// register state by the unitary.
    pub fn embed(&self, x: &CMatrix) -> Result<CMatrix> {
        let d = self.system_dim;
        let n = self.outcomes;
        if x.nrows() != d || x.ncols() != d {
            return Err(CoherenceError::DimMismatch {
                expected: d,
                found: x.nrows(),
            });
        }
        let lifted: Vec<CMatrix> = (0..n).map(|i| self.block(i, 0) * x).collect();
        let mut out = CMatrix::zeros(n * d, n * d);
        for i in 0..n {
            for j in 0..n {
                let blk = &lifted[i] * self.block(j, 0).adjoint();
                out.view_mut((i * d, j * d), (d, d)).copy_from(&blk);
            }
        }
        Ok(out)
    }
}

/// Residuals of the structural identities, each the worst Frobenius
/// deviation of its family.
#[derive(Debug, Clone, Copy)]
pub struct ExtensionReport {
    /// || V^dag V - I ||
    pub unitarity: f64,
    /// max_i || block(i, 0) - kraus_i ||
    pub kraus_column: f64,
    /// max_jk || sum_i block(i,j)^dag block(i,k) - delta_jk I ||
    pub block_orthogonality: f64,
    /// || embed(rho) - V (rho in corner) V^dag ||
    pub embed_identity: f64,
    /// max_i | tr(E_i rho) - tr(Pbar_i embed(rho)) |
    pub statistics: f64,
}

impl ExtensionReport {
    pub fn worst(&self) -> f64 {
        self.unitarity
            .max(self.kraus_column)
            .max(self.block_orthogonality)
            .max(self.embed_identity)
            .max(self.statistics)
    }
}

pub fn build_extension(povm: &Povm) -> Result<NaimarkExtension> {
    build_extension_with(povm, Completion::StandardBasis)
}

pub fn build_extension_with(povm: &Povm, completion: Completion) -> Result<NaimarkExtension> {
    let d = povm.dim();
    let n = povm.outcomes();
    let full = d * n;

    // Kept columns: the isometry stacking the Kraus operators.
    let mut cols: Vec<nalgebra::DVector<Complex64>> = Vec::with_capacity(full);
    for c in 0..d {
        let mut col = nalgebra::DVector::<Complex64>::zeros(full);
        for (i, kraus) in povm.kraus_ops().iter().enumerate() {
            col.rows_mut(i * d, d).copy_from(&kraus.column(c));
        }
        cols.push(col);
    }

    let mut candidates: Vec<nalgebra::DVector<Complex64>> = match completion {
        Completion::StandardBasis => (0..full)
            .map(|k| {
                let mut e = nalgebra::DVector::<Complex64>::zeros(full);
                e[k] = Complex64::new(1.0, 0.0);
                e
            })
            .collect(),
        Completion::Seeded(seed) => {
            let mut rng = seeded_rng(seed);
            (0..2 * full)
                .map(|_| {
                    let m = gaussian_matrix(full, 1, &mut rng);
                    nalgebra::DVector::from_column_slice(m.as_slice())
                })
                .collect()
        }
    };

    for candidate in candidates.drain(..) {
        if cols.len() == full {
            break;
        }
        let mut v = candidate;
        // Two orthogonalization passes keep the loss of orthogonality at
        // rounding level.
        for _ in 0..2 {
            for c in &cols {
                let overlap = c.dotc(&v);
                v -= c * overlap;
            }
        }
        let norm = v.norm();
        if norm > 1e-6 {
            cols.push(v.unscale(norm));
        }
    }
    if cols.len() != full {
        return Err(CoherenceError::CompletionFailure);
    }

    let v = CMatrix::from_columns(&cols);
    let unitarity = frobenius(&(v.adjoint() * &v - identity(full)));
    if unitarity > 1e-10 {
        return Err(CoherenceError::CompletionFailure);
    }

    let pbar = ProjectiveMeasurement::standard_blocks(&vec![d; n])?;
    Ok(NaimarkExtension {
        system_dim: d,
        outcomes: n,
        v,
        pbar,
    })
}

/// Checks every structural identity of the extension against the POVM on a
/// given state.
pub fn verify_extension(
    povm: &Povm,
    ext: &NaimarkExtension,
    rho: &DensityMatrix,
) -> Result<ExtensionReport> {
    let d = ext.system_dim;
    let n = ext.outcomes;
    let full = d * n;
    if povm.dim() != d || povm.outcomes() != n || rho.dim() != d {
        return Err(CoherenceError::DimMismatch {
            expected: d,
            found: rho.dim(),
        });
    }

    let unitarity = frobenius(&(ext.v.adjoint() * &ext.v - identity(full)))
        .max(frobenius(&(&ext.v * ext.v.adjoint() - identity(full))));

    let kraus_column = povm
        .kraus_ops()
        .iter()
        .enumerate()
        .map(|(i, k)| frobenius(&(ext.block(i, 0) - k)))
        .fold(0.0f64, f64::max);

    let mut block_orthogonality = 0.0f64;
    for j in 0..n {
        for k in 0..n {
            let mut sum = CMatrix::zeros(d, d);
            for i in 0..n {
                sum += ext.block(i, j).adjoint() * ext.block(i, k);
            }
            if j == k {
                sum -= identity(d);
            }
            block_orthogonality = block_orthogonality.max(frobenius(&sum));
        }
    }

    let embedded = ext.embed(rho.matrix())?;
    let mut corner = CMatrix::zeros(full, full);
    corner.view_mut((0, 0), (d, d)).copy_from(rho.matrix());
    let embed_identity = frobenius(&(&embedded - &ext.v * corner * ext.v.adjoint()));

    let mut statistics = 0.0f64;
    for i in 0..n {
        let direct = crate::linalg::trace_re(&(&povm.effects()[i] * rho.matrix()));
        let reg = ext.pbar.compress(&embedded, i, i);
        statistics = statistics.max((direct - crate::linalg::trace_re(&reg)).abs());
    }

    Ok(ExtensionReport {
        unitarity,
        kraus_column,
        block_orthogonality,
        embed_identity,
        statistics,
    })
}
