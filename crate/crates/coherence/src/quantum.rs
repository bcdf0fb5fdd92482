//! States, measurements, and channels.
//!
//! Validated wrapper types (`DensityMatrix`, `ProjectiveMeasurement`, `Povm`,
//! `KrausChannel`) plus the seeded random generators used by the property
//! suites. Construction is where invariants get checked; once a value exists
//! it can be trusted downstream.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{CoherenceError, Result};
use crate::linalg::{
    self, dagger, eigh, frobenius, hermiticity_residual, hermitize, identity, psd_power, trace,
    trace_re, CMatrix, Complex64,
};

pub const DENSITY_HERMITIAN_TOL: f64 = 1e-10;
pub const DENSITY_EIG_TOL: f64 = 1e-9;
pub const DENSITY_TRACE_TOL: f64 = 1e-10;
pub const PROJECTOR_TOL: f64 = 1e-10;
pub const POVM_SUM_TOL: f64 = 1e-10;
pub const POVM_PSD_TOL: f64 = 1e-9;
pub const POVM_KRAUS_TOL: f64 = 1e-9;
pub const CHANNEL_TOL: f64 = 1e-9;
pub const SUPPORT_TOL: f64 = 1e-9;
/// Default tolerance for the incoherence predicates.
pub const DEFAULT_INCOHERENCE_TOL: f64 = 1e-9;
/// Branches with probability below this are dropped.
pub const BRANCH_PROB_FLOOR: f64 = 1e-12;
/// Random samples whose normalizer is worse conditioned than this are
/// rejected and redrawn.
pub const CONDITION_LIMIT: f64 = 1e12;
const RESAMPLE_LIMIT: usize = 10;

pub(crate) fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub(crate) fn gaussian_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
    })
}

/// Unit-trace positive semidefinite operator.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    mat: CMatrix,
}

impl DensityMatrix {
    pub fn new(mat: CMatrix) -> Result<Self> {
        if mat.nrows() != mat.ncols() || mat.nrows() == 0 {
            return Err(CoherenceError::invalid("state must be square and nonempty"));
        }
        let residual = hermiticity_residual(&mat);
        if residual > DENSITY_HERMITIAN_TOL {
            return Err(CoherenceError::NotHermitian { residual });
        }
        let mat = if residual > linalg::HERMITIAN_EXACT_TOL {
            hermitize(&mat)
        } else {
            mat
        };
        let tr = trace(&mat);
        if (tr.re - 1.0).abs() > DENSITY_TRACE_TOL || tr.im.abs() > DENSITY_TRACE_TOL {
            return Err(CoherenceError::invalid(format!(
                "state trace {:.12} is not 1",
                tr.re
            )));
        }
        let eig = eigh(&mat)?;
        let min = eig.values.last().copied().unwrap_or(0.0);
        if min < -DENSITY_EIG_TOL {
            return Err(CoherenceError::NotPsd {
                min_eigenvalue: min,
            });
        }
        Ok(DensityMatrix { mat })
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }

    /// |k><k| in the computational basis.
    pub fn basis_state(dim: usize, k: usize) -> Result<Self> {
        if k >= dim {
            return Err(CoherenceError::invalid("basis index out of range"));
        }
        let mut mat = CMatrix::zeros(dim, dim);
        mat[(k, k)] = Complex64::new(1.0, 0.0);
        Ok(DensityMatrix { mat })
    }

    /// Projector onto a (normalized) state vector.
    pub fn pure(vector: &CMatrix) -> Result<Self> {
        if vector.ncols() != 1 || vector.nrows() == 0 {
            return Err(CoherenceError::invalid("pure state wants a column vector"));
        }
        let norm = vector.norm();
        if norm < 1e-12 {
            return Err(CoherenceError::invalid("zero vector"));
        }
        let v = vector.scale(1.0 / norm);
        Ok(DensityMatrix { mat: &v * v.adjoint() })
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        DensityMatrix {
            mat: identity(dim).scale(1.0 / dim as f64),
        }
    }
}

/// Convex combination of states. Weights must be nonnegative and sum to one.
pub fn mixture(parts: &[(f64, &DensityMatrix)]) -> Result<DensityMatrix> {
    if parts.is_empty() {
        return Err(CoherenceError::invalid("empty mixture"));
    }
    let dim = parts[0].1.dim();
    let total: f64 = parts.iter().map(|(w, _)| *w).sum();
    if (total - 1.0).abs() > 1e-12 || parts.iter().any(|(w, _)| *w < 0.0) {
        return Err(CoherenceError::invalid("mixture weights must be a distribution"));
    }
    let mut acc = CMatrix::zeros(dim, dim);
    for (w, rho) in parts {
        if rho.dim() != dim {
            return Err(CoherenceError::DimMismatch {
                expected: dim,
                found: rho.dim(),
            });
        }
        acc += rho.matrix().scale(*w);
    }
    DensityMatrix::new(acc)
}

/// Complete family of mutually orthogonal Hermitian projectors.
///
/// Each outcome also carries an orthonormal basis of its range; the solvers
/// parameterize block-diagonal operators in those coordinates.
#[derive(Debug, Clone)]
pub struct ProjectiveMeasurement {
    projectors: Vec<CMatrix>,
    block_dims: Vec<usize>,
    bases: Vec<CMatrix>,
}

impl ProjectiveMeasurement {
    pub fn new(projectors: Vec<CMatrix>) -> Result<Self> {
        if projectors.is_empty() {
            return Err(CoherenceError::invalid("measurement needs at least one outcome"));
        }
        let dim = projectors[0].nrows();
        let mut sum = CMatrix::zeros(dim, dim);
        for p in &projectors {
            if p.nrows() != dim || p.ncols() != dim {
                return Err(CoherenceError::DimMismatch {
                    expected: dim,
                    found: p.nrows().max(p.ncols()),
                });
            }
            let residual = hermiticity_residual(p);
            if residual > PROJECTOR_TOL {
                return Err(CoherenceError::NotHermitian { residual });
            }
            if frobenius(&(p * p - p)) > PROJECTOR_TOL {
                return Err(CoherenceError::invalid("projector is not idempotent"));
            }
            sum += p;
        }
        if frobenius(&(&sum - identity(dim))) > PROJECTOR_TOL {
            return Err(CoherenceError::invalid("projectors do not sum to the identity"));
        }
        for i in 0..projectors.len() {
            for j in (i + 1)..projectors.len() {
                if frobenius(&(&projectors[i] * &projectors[j])) > PROJECTOR_TOL {
                    return Err(CoherenceError::invalid("projectors are not mutually orthogonal"));
                }
            }
        }
        let mut block_dims = Vec::with_capacity(projectors.len());
        let mut bases = Vec::with_capacity(projectors.len());
        for p in &projectors {
            let rank = trace_re(p).round() as usize;
            if rank == 0 {
                return Err(CoherenceError::invalid("zero-rank projector"));
            }
            let eig = eigh(p)?;
            let mut basis = CMatrix::zeros(dim, rank);
            for k in 0..rank {
                basis.set_column(k, &eig.vectors.column(k));
            }
            block_dims.push(rank);
            bases.push(basis);
        }
        if block_dims.iter().sum::<usize>() != dim {
            return Err(CoherenceError::invalid("projector ranks do not fill the space"));
        }
        Ok(ProjectiveMeasurement {
            projectors,
            block_dims,
            bases,
        })
    }

    /// Builds the measurement from explicit orthonormal range bases.
    pub(crate) fn from_bases(bases: Vec<CMatrix>) -> Self {
        let projectors: Vec<CMatrix> = bases.iter().map(|b| b * b.adjoint()).collect();
        let block_dims: Vec<usize> = bases.iter().map(|b| b.ncols()).collect();
        ProjectiveMeasurement {
            projectors,
            block_dims,
            bases,
        }
    }

    /// Coordinate-aligned blocks of the given sizes.
    pub fn standard_blocks(dims: &[usize]) -> Result<Self> {
        if dims.is_empty() || dims.iter().any(|&d| d == 0) {
            return Err(CoherenceError::invalid("block sizes must be positive"));
        }
        let total: usize = dims.iter().sum();
        let eye = identity(total);
        let mut bases = Vec::with_capacity(dims.len());
        let mut offset = 0;
        for &d in dims {
            bases.push(eye.columns(offset, d).into_owned());
            offset += d;
        }
        Ok(ProjectiveMeasurement::from_bases(bases))
    }

    /// The computational basis as rank-1 outcomes.
    pub fn computational(dim: usize) -> Result<Self> {
        ProjectiveMeasurement::standard_blocks(&vec![1; dim])
    }

    pub fn dim(&self) -> usize {
        self.projectors[0].nrows()
    }

    pub fn outcomes(&self) -> usize {
        self.projectors.len()
    }

    pub fn projectors(&self) -> &[CMatrix] {
        &self.projectors
    }

    pub fn block_dims(&self) -> &[usize] {
        &self.block_dims
    }

    pub fn basis(&self, i: usize) -> &CMatrix {
        &self.bases[i]
    }

    /// B_i^dagger x B_j, the (i, j) block of x in range coordinates.
    pub fn compress(&self, x: &CMatrix, i: usize, j: usize) -> CMatrix {
        self.bases[i].adjoint() * x * &self.bases[j]
    }

    /// Sum of P_i x P_i.
    pub fn pinch(&self, x: &CMatrix) -> CMatrix {
        let dim = self.dim();
        let mut out = CMatrix::zeros(dim, dim);
        for i in 0..self.outcomes() {
            let block = self.compress(x, i, i);
            out += &self.bases[i] * block * self.bases[i].adjoint();
        }
        out
    }

    /// Rebuilds a block-diagonal operator from per-outcome blocks.
    pub fn assemble(&self, blocks: &[CMatrix]) -> CMatrix {
        let dim = self.dim();
        let mut out = CMatrix::zeros(dim, dim);
        for (i, block) in blocks.iter().enumerate() {
            out += &self.bases[i] * block * self.bases[i].adjoint();
        }
        out
    }
}

/// General measurement: effects E_i plus measurement operators A_i with
/// A_i^dagger A_i = E_i. When no operators are supplied the canonical choice
/// A_i = sqrt(E_i) is taken.
#[derive(Debug, Clone)]
pub struct Povm {
    effects: Vec<CMatrix>,
    kraus: Vec<CMatrix>,
}

impl Povm {
    pub fn new(effects: Vec<CMatrix>, kraus: Option<Vec<CMatrix>>) -> Result<Self> {
        if effects.is_empty() {
            return Err(CoherenceError::invalid("POVM needs at least one effect"));
        }
        let dim = effects[0].nrows();
        let mut sum = CMatrix::zeros(dim, dim);
        for e in &effects {
            if e.nrows() != dim || e.ncols() != dim {
                return Err(CoherenceError::DimMismatch {
                    expected: dim,
                    found: e.nrows().max(e.ncols()),
                });
            }
            let residual = hermiticity_residual(e);
            if residual > DENSITY_HERMITIAN_TOL {
                return Err(CoherenceError::NotHermitian { residual });
            }
            let eig = eigh(e)?;
            let min = eig.values.last().copied().unwrap_or(0.0);
            if min < -POVM_PSD_TOL {
                return Err(CoherenceError::NotPsd {
                    min_eigenvalue: min,
                });
            }
            sum += e;
        }
        if frobenius(&(&sum - identity(dim))) > POVM_SUM_TOL {
            return Err(CoherenceError::invalid("effects do not sum to the identity"));
        }
        let kraus = match kraus {
            Some(ops) => {
                if ops.len() != effects.len() {
                    return Err(CoherenceError::invalid(
                        "measurement operator count differs from effect count",
                    ));
                }
                for (a, e) in ops.iter().zip(&effects) {
                    if a.nrows() != dim || a.ncols() != dim {
                        return Err(CoherenceError::DimMismatch {
                            expected: dim,
                            found: a.nrows().max(a.ncols()),
                        });
                    }
                    if frobenius(&(a.adjoint() * a - e)) > POVM_KRAUS_TOL {
                        return Err(CoherenceError::invalid(
                            "measurement operator does not factor its effect",
                        ));
                    }
                }
                ops
            }
            None => effects
                .iter()
                .map(|e| psd_power(e, 0.5))
                .collect::<Result<Vec<_>>>()?,
        };
        Ok(Povm { effects, kraus })
    }

    /// Treats a projective measurement as a POVM (A_i = P_i).
    pub fn from_projective(p: &ProjectiveMeasurement) -> Self {
        Povm {
            effects: p.projectors().to_vec(),
            kraus: p.projectors().to_vec(),
        }
    }

    pub fn dim(&self) -> usize {
        self.effects[0].nrows()
    }

    pub fn outcomes(&self) -> usize {
        self.effects.len()
    }

    pub fn effects(&self) -> &[CMatrix] {
        &self.effects
    }

    pub fn kraus_ops(&self) -> &[CMatrix] {
        &self.kraus
    }
}

/// Block structure certificate for a channel: branch l acts as
/// K_l = sum_i P_{f_l(i)} M_l P_i for the stored measurement.
#[derive(Debug, Clone)]
pub struct BiStructure {
    pub measurement: ProjectiveMeasurement,
    /// One (index map, seed operator) pair per Kraus operator.
    pub branches: Vec<(Vec<usize>, CMatrix)>,
}

/// Completely positive trace-preserving map in Kraus form.
#[derive(Debug, Clone)]
pub struct KrausChannel {
    ops: Vec<CMatrix>,
    bi: Option<BiStructure>,
}

impl KrausChannel {
    pub fn new(ops: Vec<CMatrix>, bi: Option<BiStructure>) -> Result<Self> {
        if ops.is_empty() {
            return Err(CoherenceError::invalid("channel needs at least one Kraus operator"));
        }
        let dim = ops[0].nrows();
        let mut sum = CMatrix::zeros(dim, dim);
        for k in &ops {
            if k.nrows() != dim || k.ncols() != dim {
                return Err(CoherenceError::DimMismatch {
                    expected: dim,
                    found: k.nrows().max(k.ncols()),
                });
            }
            sum += k.adjoint() * k;
        }
        if frobenius(&(&sum - identity(dim))) > CHANNEL_TOL {
            return Err(CoherenceError::invalid("Kraus operators are not trace preserving"));
        }
        if let Some(structure) = &bi {
            if structure.measurement.dim() != dim {
                return Err(CoherenceError::DimMismatch {
                    expected: dim,
                    found: structure.measurement.dim(),
                });
            }
            if structure.branches.len() != ops.len() {
                return Err(CoherenceError::invalid(
                    "structure certificate length differs from Kraus count",
                ));
            }
            let n = structure.measurement.outcomes();
            for (k, (map, seed)) in ops.iter().zip(&structure.branches) {
                if map.len() != n || map.iter().any(|&t| t >= n) {
                    return Err(CoherenceError::invalid("index map out of range"));
                }
                let mut rebuilt = CMatrix::zeros(dim, dim);
                for (i, &target) in map.iter().enumerate() {
                    rebuilt += structure.measurement.projectors()[target].clone()
                        * seed
                        * &structure.measurement.projectors()[i];
                }
                if frobenius(&(k - rebuilt)) > CHANNEL_TOL {
                    return Err(CoherenceError::invalid(
                        "Kraus operator does not match its structure certificate",
                    ));
                }
            }
        }
        Ok(KrausChannel { ops, bi })
    }

    pub fn dim(&self) -> usize {
        self.ops[0].nrows()
    }

    pub fn ops(&self) -> &[CMatrix] {
        &self.ops
    }

    pub fn bi_structure(&self) -> Option<&BiStructure> {
        self.bi.as_ref()
    }
}

/// One selective outcome of a channel.
#[derive(Debug, Clone)]
pub struct BranchOutcome {
    pub probability: f64,
    pub state: DensityMatrix,
}

/// sum_l K_l rho K_l^dagger as a state.
pub fn apply_channel(rho: &DensityMatrix, channel: &KrausChannel) -> Result<DensityMatrix> {
    if channel.dim() != rho.dim() {
        return Err(CoherenceError::DimMismatch {
            expected: rho.dim(),
            found: channel.dim(),
        });
    }
    let mut out = CMatrix::zeros(rho.dim(), rho.dim());
    for k in channel.ops() {
        out += k * rho.matrix() * k.adjoint();
    }
    let tr = trace_re(&out);
    if (tr - 1.0).abs() > CHANNEL_TOL {
        return Err(CoherenceError::invalid(format!(
            "channel output trace {tr:.12} is not 1"
        )));
    }
    DensityMatrix::new(out.scale(1.0 / tr))
}

/// Selective application: (p_l, K_l rho K_l^dagger / p_l) for every branch
/// with p_l above `BRANCH_PROB_FLOOR`.
pub fn branches(rho: &DensityMatrix, channel: &KrausChannel) -> Result<Vec<BranchOutcome>> {
    if channel.dim() != rho.dim() {
        return Err(CoherenceError::DimMismatch {
            expected: rho.dim(),
            found: channel.dim(),
        });
    }
    let mut out = Vec::new();
    for k in channel.ops() {
        let raw = k * rho.matrix() * k.adjoint();
        let p = trace_re(&raw);
        if p < BRANCH_PROB_FLOOR {
            continue;
        }
        out.push(BranchOutcome {
            probability: p,
            state: DensityMatrix::new(raw.scale(1.0 / p))?,
        });
    }
    Ok(out)
}

/// Pinches the state to its block-diagonal part.
pub fn block_dephase(rho: &DensityMatrix, p: &ProjectiveMeasurement) -> Result<DensityMatrix> {
    if p.dim() != rho.dim() {
        return Err(CoherenceError::DimMismatch {
            expected: rho.dim(),
            found: p.dim(),
        });
    }
    let pinched = p.pinch(rho.matrix());
    let tr = trace_re(&pinched);
    DensityMatrix::new(pinched.scale(1.0 / tr))
}

/// Largest off-block Frobenius norm max_{i != j} ||P_i rho P_j||_F.
pub fn offblock_norm(rho: &DensityMatrix, p: &ProjectiveMeasurement) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..p.outcomes() {
        for j in 0..p.outcomes() {
            if i == j {
                continue;
            }
            worst = worst.max(frobenius(&p.compress(rho.matrix(), i, j)));
        }
    }
    worst
}

pub fn is_block_incoherent(rho: &DensityMatrix, p: &ProjectiveMeasurement, tol: f64) -> bool {
    offblock_norm(rho, p) <= tol
}

/// Off-diagonal interference residuals of a state under a POVM, in effect
/// form and in measurement-operator form:
/// (max ||E_i rho E_j||_F, max ||A_i rho A_j^dagger||_F) over i != j.
pub fn povm_offblock_norms(rho: &DensityMatrix, e: &Povm) -> (f64, f64) {
    let mut effect_form: f64 = 0.0;
    let mut kraus_form: f64 = 0.0;
    for i in 0..e.outcomes() {
        for j in 0..e.outcomes() {
            if i == j {
                continue;
            }
            effect_form =
                effect_form.max(frobenius(&(&e.effects()[i] * rho.matrix() * &e.effects()[j])));
            kraus_form = kraus_form.max(frobenius(
                &(&e.kraus_ops()[i] * rho.matrix() * dagger(&e.kraus_ops()[j])),
            ));
        }
    }
    (effect_form, kraus_form)
}

pub fn is_povm_incoherent(rho: &DensityMatrix, e: &Povm, tol: f64) -> bool {
    povm_offblock_norms(rho, e).0 <= tol
}

/// p1 rho1 + p2 rho2 where rho1 lives on the blocks flagged in `group_one`
/// and rho2 on the rest. Support is verified at `SUPPORT_TOL`.
pub fn direct_sum_state(
    p1: f64,
    rho1: &DensityMatrix,
    p2: f64,
    rho2: &DensityMatrix,
    p: &ProjectiveMeasurement,
    group_one: &[bool],
) -> Result<DensityMatrix> {
    if group_one.len() != p.outcomes() {
        return Err(CoherenceError::invalid("partition length differs from outcome count"));
    }
    if !group_one.iter().any(|&g| g) || group_one.iter().all(|&g| g) {
        return Err(CoherenceError::invalid("partition must split the blocks in two"));
    }
    if p1 <= 0.0 || p2 <= 0.0 || (p1 + p2 - 1.0).abs() > 1e-12 {
        return Err(CoherenceError::invalid("weights must be positive and sum to 1"));
    }
    if rho1.dim() != p.dim() || rho2.dim() != p.dim() {
        return Err(CoherenceError::DimMismatch {
            expected: p.dim(),
            found: rho1.dim().max(rho2.dim()),
        });
    }
    let dim = p.dim();
    let mut q1 = CMatrix::zeros(dim, dim);
    for (i, proj) in p.projectors().iter().enumerate() {
        if group_one[i] {
            q1 += proj;
        }
    }
    let q2 = identity(dim) - &q1;
    let leak1 = frobenius(&(rho1.matrix() - &q1 * rho1.matrix() * &q1));
    if leak1 > SUPPORT_TOL {
        return Err(CoherenceError::SupportViolation {
            detail: format!("first state leaks {leak1:.3e} outside its block group"),
        });
    }
    let leak2 = frobenius(&(rho2.matrix() - &q2 * rho2.matrix() * &q2));
    if leak2 > SUPPORT_TOL {
        return Err(CoherenceError::SupportViolation {
            detail: format!("second state leaks {leak2:.3e} outside its block group"),
        });
    }
    DensityMatrix::new(rho1.matrix().scale(p1) + rho2.matrix().scale(p2))
}

/// Haar-distributed unitary: Gaussian matrix, QR, R-diagonal phases fixed.
pub fn random_unitary(dim: usize, seed: u64) -> Result<CMatrix> {
    if dim == 0 {
        return Err(CoherenceError::invalid("dimension must be positive"));
    }
    let mut rng = seeded_rng(seed);
    for _ in 0..RESAMPLE_LIMIT {
        let g = gaussian_matrix(dim, dim, &mut rng);
        let qr = g.qr();
        let r = qr.r();
        if (0..dim).any(|j| r[(j, j)].norm() < 1e-12) {
            continue;
        }
        let mut u = qr.q();
        for j in 0..dim {
            let phase = r[(j, j)] / r[(j, j)].norm();
            for i in 0..dim {
                u[(i, j)] *= phase;
            }
        }
        return Ok(u);
    }
    Err(CoherenceError::DegenerateSample {
        what: "unitary draw kept hitting a singular QR".into(),
    })
}

/// G G^dagger / tr for a dim x rank Gaussian G, redrawn while the nonzero
/// spectrum is worse conditioned than `CONDITION_LIMIT`.
pub fn random_density(dim: usize, rank: usize, seed: u64) -> Result<DensityMatrix> {
    if rank == 0 || rank > dim {
        return Err(CoherenceError::invalid("rank must lie in 1..=dim"));
    }
    let mut rng = seeded_rng(seed);
    for _ in 0..RESAMPLE_LIMIT {
        let g = gaussian_matrix(dim, rank, &mut rng);
        let w = &g * g.adjoint();
        let eig = eigh(&w)?;
        let top = eig.values[0];
        let smallest = eig.values[rank - 1];
        if smallest <= 0.0 || top / smallest > CONDITION_LIMIT {
            continue;
        }
        return DensityMatrix::new(w.scale(1.0 / trace_re(&w)));
    }
    Err(CoherenceError::DegenerateSample {
        what: "density draw kept producing an ill-conditioned spectrum".into(),
    })
}

/// Random measurement with the given block sizes: columns of one Haar
/// unitary, grouped.
pub fn random_projective(
    dim: usize,
    block_dims: &[usize],
    seed: u64,
) -> Result<ProjectiveMeasurement> {
    if block_dims.iter().sum::<usize>() != dim || block_dims.iter().any(|&d| d == 0) {
        return Err(CoherenceError::invalid("block sizes must be positive and fill the space"));
    }
    let u = random_unitary(dim, seed)?;
    let mut bases = Vec::with_capacity(block_dims.len());
    let mut offset = 0;
    for &d in block_dims {
        bases.push(u.columns(offset, d).into_owned());
        offset += d;
    }
    Ok(ProjectiveMeasurement::from_bases(bases))
}

/// Random POVM: Gaussian B_i whitened by S^{-1/2}, S = sum B_i^dagger B_i.
pub fn random_povm(dim: usize, outcomes: usize, seed: u64) -> Result<Povm> {
    if outcomes == 0 || dim == 0 {
        return Err(CoherenceError::invalid("need positive dimension and outcome count"));
    }
    let mut rng = seeded_rng(seed);
    for _ in 0..RESAMPLE_LIMIT {
        let draws: Vec<CMatrix> = (0..outcomes)
            .map(|_| gaussian_matrix(dim, dim, &mut rng))
            .collect();
        let mut s = CMatrix::zeros(dim, dim);
        for b in &draws {
            s += b.adjoint() * b;
        }
        let eig = eigh(&hermitize(&s))?;
        let top = eig.values[0];
        let bottom = eig.values[dim - 1];
        if bottom <= 0.0 || top / bottom > CONDITION_LIMIT {
            continue;
        }
        let whiten = psd_power(&s, -0.5)?;
        let kraus: Vec<CMatrix> = draws.iter().map(|b| b * &whiten).collect();
        let effects: Vec<CMatrix> = kraus.iter().map(|a| hermitize(&(a.adjoint() * a))).collect();
        return Povm::new(effects, Some(kraus));
    }
    Err(CoherenceError::DegenerateSample {
        what: "POVM draw kept producing an ill-conditioned normalizer".into(),
    })
}

/// Random channel that is incoherence-preserving for `p`: every Kraus
/// operator routes each block into a single target block.
///
/// Index maps are drawn uniformly over all n^n functions. When the sampled
/// family normalizes cleanly (sum of K^dagger K block diagonal, which holds
/// whenever the maps are injective) it is whitened in place; otherwise the
/// family is scaled down and completed with pinching branches P_i D^{1/2},
/// which share the same structure with constant index maps.
pub fn random_bi_channel(
    p: &ProjectiveMeasurement,
    branch_count: usize,
    seed: u64,
) -> Result<KrausChannel> {
    if branch_count == 0 {
        return Err(CoherenceError::invalid("need at least one branch"));
    }
    let mut rng = seeded_rng(seed);
    let dim = p.dim();
    let n = p.outcomes();
    for _ in 0..RESAMPLE_LIMIT {
        let mut maps = Vec::with_capacity(branch_count);
        let mut seeds = Vec::with_capacity(branch_count);
        let mut raw = Vec::with_capacity(branch_count);
        for _ in 0..branch_count {
            let map: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            let m = gaussian_matrix(dim, dim, &mut rng);
            let mut k = CMatrix::zeros(dim, dim);
            for (i, &target) in map.iter().enumerate() {
                k += &p.projectors()[target] * &m * &p.projectors()[i];
            }
            maps.push(map);
            seeds.push(m);
            raw.push(k);
        }
        let mut s = CMatrix::zeros(dim, dim);
        for k in &raw {
            s += k.adjoint() * k;
        }
        let s = hermitize(&s);
        let offblock = frobenius(&(&s - p.pinch(&s)));
        let eig = eigh(&s)?;
        let top = eig.values[0];
        if top <= 0.0 {
            continue;
        }
        let (ops, branches) = if offblock <= 1e-12 * top.max(1.0) {
            // Whitening by a block-diagonal S^{-1/2} keeps the structure.
            if eig.values[dim - 1] <= 0.0 || top / eig.values[dim - 1] > CONDITION_LIMIT {
                continue;
            }
            let whiten = psd_power(&s, -0.5)?;
            let ops: Vec<CMatrix> = raw.iter().map(|k| k * &whiten).collect();
            let branches: Vec<(Vec<usize>, CMatrix)> = maps
                .iter()
                .cloned()
                .zip(seeds.iter().map(|m| m * &whiten))
                .collect();
            (ops, branches)
        } else {
            let c = 1.0 / top.sqrt();
            let deficit = identity(dim) - s.scale(c * c);
            let root = psd_power(&deficit, 0.5)?;
            let mut ops: Vec<CMatrix> = raw.iter().map(|k| k.scale(c)).collect();
            let mut branches: Vec<(Vec<usize>, CMatrix)> = maps
                .iter()
                .cloned()
                .zip(seeds.iter().map(|m| m.scale(c)))
                .collect();
            for i in 0..n {
                let comp = &p.projectors()[i] * &root;
                if frobenius(&comp) <= 1e-7 {
                    continue;
                }
                ops.push(comp);
                branches.push((vec![i; n], root.clone()));
            }
            (ops, branches)
        };
        let mut check = CMatrix::zeros(dim, dim);
        for k in &ops {
            check += k.adjoint() * k;
        }
        if frobenius(&(&check - identity(dim))) > CHANNEL_TOL {
            continue;
        }
        return KrausChannel::new(
            ops,
            Some(BiStructure {
                measurement: p.clone(),
                branches,
            }),
        );
    }
    Err(CoherenceError::DegenerateSample {
        what: "channel draw kept failing to normalize".into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn plus_state() -> DensityMatrix {
        let mut v = CMatrix::zeros(2, 1);
        v[(0, 0)] = Complex64::new(1.0, 0.0);
        v[(1, 0)] = Complex64::new(1.0, 0.0);
        DensityMatrix::pure(&v).unwrap()
    }

    pub fn trine_povm() -> Povm {
        let effects: Vec<CMatrix> = (0..3)
            .map(|k| {
                let theta = 2.0 * std::f64::consts::PI * k as f64 / 3.0;
                let mut v = CMatrix::zeros(2, 1);
                v[(0, 0)] = Complex64::new(theta.cos(), 0.0);
                v[(1, 0)] = Complex64::new(theta.sin(), 0.0);
                (&v * v.adjoint()).scale(2.0 / 3.0)
            })
            .collect();
        Povm::new(effects, None).unwrap()
    }

    #[test]
    fn density_validates_trace_and_psd() {
        let bad_trace = identity(2);
        assert!(DensityMatrix::new(bad_trace).is_err());
        let mut indefinite = CMatrix::zeros(2, 2);
        indefinite[(0, 0)] = Complex64::new(1.5, 0.0);
        indefinite[(1, 1)] = Complex64::new(-0.5, 0.0);
        assert!(matches!(
            DensityMatrix::new(indefinite),
            Err(CoherenceError::NotPsd { .. })
        ));
    }

    #[test]
    fn standard_blocks_partition_the_space() {
        let p = ProjectiveMeasurement::standard_blocks(&[2, 3]).unwrap();
        assert_eq!(p.block_dims(), &[2, 3]);
        let sum: CMatrix = p.projectors().iter().sum();
        assert!(frobenius(&(sum - identity(5))) < 1e-14);
    }

    #[test]
    fn projective_constructor_rejects_overlapping_projectors() {
        let p0 = identity(2);
        let p1 = identity(2);
        assert!(ProjectiveMeasurement::new(vec![p0, p1]).is_err());
    }

    #[test]
    fn dephasing_kills_off_diagonals() {
        let p = ProjectiveMeasurement::computational(2).unwrap();
        let rho = plus_state();
        let dephased = block_dephase(&rho, &p).unwrap();
        assert!(dephased.matrix()[(0, 1)].norm() < 1e-14);
        assert!((dephased.matrix()[(0, 0)].re - 0.5).abs() < 1e-14);
        assert!(!is_block_incoherent(&rho, &p, DEFAULT_INCOHERENCE_TOL));
        assert!(is_block_incoherent(&dephased, &p, DEFAULT_INCOHERENCE_TOL));
    }

    #[test]
    fn random_density_respects_rank() {
        let rho = random_density(4, 2, 7).unwrap();
        let eig = eigh(rho.matrix()).unwrap();
        assert!(eig.values[1] > 1e-6);
        assert!(eig.values[2].abs() < 1e-12);
        assert!((trace_re(rho.matrix()) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn random_unitary_is_unitary_and_deterministic() {
        let u1 = random_unitary(5, 99).unwrap();
        let u2 = random_unitary(5, 99).unwrap();
        assert_eq!(u1, u2);
        assert!(frobenius(&(u1.adjoint() * &u1 - identity(5))) < 1e-12);
    }

    #[test]
    fn random_povm_sums_to_identity() {
        let e = random_povm(3, 4, 21).unwrap();
        let sum: CMatrix = e.effects().iter().sum();
        assert!(frobenius(&(sum - identity(3))) < 1e-12);
        for (a, eff) in e.kraus_ops().iter().zip(e.effects()) {
            assert!(frobenius(&(a.adjoint() * a - eff)) < 1e-12);
        }
    }

    #[test]
    fn trine_is_a_povm_and_sees_the_mixed_state_as_coherent() {
        let e = trine_povm();
        let rho = DensityMatrix::maximally_mixed(2);
        assert!(!is_povm_incoherent(&rho, &e, DEFAULT_INCOHERENCE_TOL));
        let (effect_form, kraus_form) = povm_offblock_norms(&rho, &e);
        assert!(effect_form > 0.1 && kraus_form > 0.1);
    }

    #[test]
    fn single_outcome_povm_sees_every_state_as_incoherent() {
        let e = Povm::new(vec![identity(3)], None).unwrap();
        let rho = random_density(3, 3, 5).unwrap();
        assert!(is_povm_incoherent(&rho, &e, DEFAULT_INCOHERENCE_TOL));
    }

    #[test]
    fn bi_channel_preserves_block_incoherence_branchwise() {
        for seed in 0..8u64 {
            let p = random_projective(5, &[2, 2, 1], seed).unwrap();
            let ch = random_bi_channel(&p, 3, seed ^ 0xabcd).unwrap();
            let sigma = block_dephase(&random_density(5, 5, seed ^ 0x77).unwrap(), &p).unwrap();
            for branch in branches(&sigma, &ch).unwrap() {
                assert!(
                    offblock_norm(&branch.state, &p) < 1e-9,
                    "branch broke block incoherence (seed {seed})"
                );
            }
        }
    }

    #[test]
    fn bi_channel_identity_example() {
        // A single branch with the identity map and M = I whitens to the
        // identity channel.
        let p = ProjectiveMeasurement::standard_blocks(&[1, 2]).unwrap();
        let k = identity(3);
        let bi = BiStructure {
            measurement: p.clone(),
            branches: vec![(vec![0, 1], identity(3))],
        };
        let ch = KrausChannel::new(vec![k], Some(bi)).unwrap();
        let rho = random_density(3, 3, 3).unwrap();
        let out = apply_channel(&rho, &ch).unwrap();
        assert!(frobenius(&(out.matrix() - rho.matrix())) < 1e-12);
    }

    #[test]
    fn channel_rejects_wrong_structure_certificate() {
        let p = ProjectiveMeasurement::computational(2).unwrap();
        // Hadamard-like unitary is trace preserving but not block structured.
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut h = CMatrix::zeros(2, 2);
        h[(0, 0)] = Complex64::new(s, 0.0);
        h[(0, 1)] = Complex64::new(s, 0.0);
        h[(1, 0)] = Complex64::new(s, 0.0);
        h[(1, 1)] = Complex64::new(-s, 0.0);
        let bi = BiStructure {
            measurement: p,
            branches: vec![(vec![0, 1], h.clone())],
        };
        assert!(KrausChannel::new(vec![h], Some(bi)).is_err());
    }

    #[test]
    fn branch_probabilities_sum_to_one() {
        let p = random_projective(4, &[2, 2], 11).unwrap();
        let ch = random_bi_channel(&p, 2, 12).unwrap();
        let rho = random_density(4, 4, 13).unwrap();
        let total: f64 = branches(&rho, &ch)
            .unwrap()
            .iter()
            .map(|b| b.probability)
            .sum();
        assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn direct_sum_checks_support_and_weights() {
        let p = ProjectiveMeasurement::standard_blocks(&[1, 1, 2]).unwrap();
        let rho1 = DensityMatrix::basis_state(4, 0).unwrap();
        let rho2 = DensityMatrix::basis_state(4, 3).unwrap();
        let ok = direct_sum_state(0.25, &rho1, 0.75, &rho2, &p, &[true, false, false]).unwrap();
        assert!((ok.matrix()[(0, 0)].re - 0.25).abs() < 1e-14);
        assert!(direct_sum_state(1.0, &rho1, 0.0, &rho2, &p, &[true, false, false]).is_err());
        // rho2 overlaps group one here
        assert!(matches!(
            direct_sum_state(0.5, &rho1, 0.5, &rho1, &p, &[true, false, false]),
            Err(CoherenceError::SupportViolation { .. })
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn prop_random_density_is_valid(seed in any::<u64>(), dim in 1usize..7) {
            let rho = random_density(dim, dim, seed).unwrap();
            prop_assert!((trace_re(rho.matrix()) - 1.0).abs() < 1e-10);
        }

        #[test]
        fn prop_channel_outputs_are_states(seed in any::<u64>()) {
            let p = random_projective(4, &[2, 2], seed).unwrap();
            let ch = random_bi_channel(&p, 2, seed.wrapping_add(1)).unwrap();
            let rho = random_density(4, 4, seed.wrapping_add(2)).unwrap();
            let out = apply_channel(&rho, &ch).unwrap();
            prop_assert!((trace_re(out.matrix()) - 1.0).abs() < 1e-10);
        }
    }
}
