//! File formats for states, measurements, and extension exports.
//!
//! Everything is JSON. A complex scalar is a two-element `[re, im]` array,
//! a matrix is a row-major nested array of those. The types here are plain
//! serde mirrors; `build`/`into_*` runs the library constructors, so a file
//! that parses but encodes an invalid object (wrong trace, not positive,
//! effects not summing to the identity) fails with the constructor's error
//! rather than a parse error.

use serde::{Deserialize, Serialize};

use crate::error::{CoherenceError, Result};
use crate::linalg::{CMatrix, Complex64};
use crate::naimark::NaimarkExtension;
use crate::quantum::{DensityMatrix, Povm, ProjectiveMeasurement};

/// One complex scalar as `[re, im]`.
pub type ComplexEntry = [f64; 2];

/// Row-major matrix of complex entries.
pub type MatrixEntries = Vec<Vec<ComplexEntry>>;

pub fn matrix_to_entries(m: &CMatrix) -> MatrixEntries {
    (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|c| [m[(r, c)].re, m[(r, c)].im]).collect())
        .collect()
}

pub fn matrix_from_entries(rows: &MatrixEntries) -> Result<CMatrix> {
    if rows.is_empty() || rows[0].is_empty() {
        return Err(CoherenceError::invalid("empty matrix"));
    }
    let ncols = rows[0].len();
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(CoherenceError::invalid("ragged matrix rows"));
    }
    Ok(CMatrix::from_fn(rows.len(), ncols, |r, c| {
        Complex64::new(rows[r][c][0], rows[r][c][1])
    }))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StateFile {
    pub dim: usize,
    pub rho: MatrixEntries,
}

impl StateFile {
    pub fn from_state(rho: &DensityMatrix) -> Self {
        StateFile {
            dim: rho.dim(),
            rho: matrix_to_entries(rho.matrix()),
        }
    }

    pub fn into_state(&self) -> Result<DensityMatrix> {
        let mat = matrix_from_entries(&self.rho)?;
        if mat.nrows() != self.dim {
            return Err(CoherenceError::invalid(format!(
                "declared dim {} does not match a {}x{} matrix",
                self.dim,
                mat.nrows(),
                mat.ncols()
            )));
        }
        DensityMatrix::new(mat)
    }
}

/// A measurement file names one of the two measurement families; which one
/// decides the evaluation pipeline downstream.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum MeasurementFile {
    Projective {
        projectors: Vec<MatrixEntries>,
    },
    Povm {
        effects: Vec<MatrixEntries>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        kraus: Option<Vec<MatrixEntries>>,
    },
}

#[derive(Debug, Clone)]
pub enum ParsedMeasurement {
    Projective(ProjectiveMeasurement),
    Povm(Povm),
}

impl MeasurementFile {
    pub fn from_projective(p: &ProjectiveMeasurement) -> Self {
        MeasurementFile::Projective {
            projectors: p.projectors().iter().map(matrix_to_entries).collect(),
        }
    }

    /// Records the measurement operators only when they differ from the
    /// canonical square roots, which an absent field already implies.
    pub fn from_povm(e: &Povm, with_kraus: bool) -> Self {
        MeasurementFile::Povm {
            effects: e.effects().iter().map(matrix_to_entries).collect(),
            kraus: with_kraus.then(|| e.kraus_ops().iter().map(matrix_to_entries).collect()),
        }
    }

    pub fn build(&self) -> Result<ParsedMeasurement> {
        match self {
            MeasurementFile::Projective { projectors } => {
                let mats = projectors
                    .iter()
                    .map(matrix_from_entries)
                    .collect::<Result<Vec<_>>>()?;
                Ok(ParsedMeasurement::Projective(ProjectiveMeasurement::new(
                    mats,
                )?))
            }
            MeasurementFile::Povm { effects, kraus } => {
                let eff = effects
                    .iter()
                    .map(matrix_from_entries)
                    .collect::<Result<Vec<_>>>()?;
                let ops = kraus
                    .as_ref()
                    .map(|list| list.iter().map(matrix_from_entries).collect::<Result<Vec<_>>>())
                    .transpose()?;
                Ok(ParsedMeasurement::Povm(Povm::new(eff, ops)?))
            }
        }
    }
}

/// Export of a built extension: the unitary, its outcome-indexed blocks
/// A_ij, and the dilated projectors of the register measurement.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExtensionFile {
    pub system_dim: usize,
    pub outcomes: usize,
    pub unitary: MatrixEntries,
    pub blocks: Vec<Vec<MatrixEntries>>,
    pub dilated_projectors: Vec<MatrixEntries>,
}

impl ExtensionFile {
    pub fn from_extension(ext: &NaimarkExtension) -> Self {
        let n = ext.outcomes();
        ExtensionFile {
            system_dim: ext.system_dim(),
            outcomes: n,
            unitary: matrix_to_entries(ext.unitary()),
            blocks: (0..n)
                .map(|i| (0..n).map(|j| matrix_to_entries(&ext.block(i, j))).collect())
                .collect(),
            dilated_projectors: ext
                .register_measurement()
                .projectors()
                .iter()
                .map(matrix_to_entries)
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::naimark::build_extension;
    use crate::quantum::{random_density, random_povm, random_projective};

    fn exactly_equal(a: &CMatrix, b: &CMatrix) -> bool {
        a.nrows() == b.nrows()
            && a.ncols() == b.ncols()
            && a.iter().zip(b.iter()).all(|(x, y)| {
                x.re.to_bits() == y.re.to_bits() && x.im.to_bits() == y.im.to_bits()
            })
    }

    #[test]
    fn state_round_trip_is_bit_exact() {
        let rho = random_density(3, 2, 11).unwrap();
        let json = serde_json::to_string(&StateFile::from_state(&rho)).unwrap();
        let back: StateFile = serde_json::from_str(&json).unwrap();
        let rho2 = back.into_state().unwrap();
        assert!(exactly_equal(rho.matrix(), rho2.matrix()));
    }

    #[test]
    fn projective_round_trip_is_bit_exact() {
        let p = random_projective(4, &[2, 1, 1], 5).unwrap();
        let json = serde_json::to_string(&MeasurementFile::from_projective(&p)).unwrap();
        let back: MeasurementFile = serde_json::from_str(&json).unwrap();
        match back.build().unwrap() {
            ParsedMeasurement::Projective(q) => {
                for (a, b) in p.projectors().iter().zip(q.projectors()) {
                    assert!(exactly_equal(a, b));
                }
            }
            ParsedMeasurement::Povm(_) => panic!("family flipped in transit"),
        }
    }

    #[test]
    fn povm_round_trip_keeps_supplied_kraus() {
        let e = random_povm(2, 3, 9).unwrap();
        let json = serde_json::to_string(&MeasurementFile::from_povm(&e, true)).unwrap();
        let back: MeasurementFile = serde_json::from_str(&json).unwrap();
        match back.build().unwrap() {
            ParsedMeasurement::Povm(f) => {
                for (a, b) in e.kraus_ops().iter().zip(f.kraus_ops()) {
                    assert!(exactly_equal(a, b));
                }
            }
            ParsedMeasurement::Projective(_) => panic!("family flipped in transit"),
        }
    }

    #[test]
    fn absent_kraus_field_stays_absent() {
        let e = random_povm(2, 3, 9).unwrap();
        let json = serde_json::to_string(&MeasurementFile::from_povm(&e, false)).unwrap();
        assert!(!json.contains("kraus"));
        let back: MeasurementFile = serde_json::from_str(&json).unwrap();
        // Rebuilding falls back to the square-root convention.
        match back.build().unwrap() {
            ParsedMeasurement::Povm(f) => assert_eq!(f.outcomes(), 3),
            ParsedMeasurement::Projective(_) => panic!("family flipped in transit"),
        }
    }

    #[test]
    fn declared_dim_must_match() {
        let rho = random_density(3, 3, 1).unwrap();
        let mut file = StateFile::from_state(&rho);
        file.dim = 4;
        assert!(file.into_state().is_err());
    }

    #[test]
    fn ragged_rows_are_rejected() {
        let rows = vec![vec![[1.0, 0.0], [0.0, 0.0]], vec![[0.0, 0.0]]];
        assert!(matrix_from_entries(&rows).is_err());
    }

    #[test]
    fn parse_and_invariant_failures_stay_distinct() {
        // Parses as JSON but the matrix has trace 2.
        let json = r#"{"dim": 2, "rho": [[[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [1.0, 0.0]]]}"#;
        let file: StateFile = serde_json::from_str(json).unwrap();
        assert!(file.into_state().is_err());
        // Does not parse at all.
        assert!(serde_json::from_str::<StateFile>("{\"dim\": 2").is_err());
    }

    #[test]
    fn extension_export_has_block_grid_shape() {
        let e = random_povm(2, 3, 4).unwrap();
        let ext = build_extension(&e).unwrap();
        let file = ExtensionFile::from_extension(&ext);
        assert_eq!(file.system_dim, 2);
        assert_eq!(file.outcomes, 3);
        assert_eq!(file.unitary.len(), 6);
        assert_eq!(file.blocks.len(), 3);
        assert!(file.blocks.iter().all(|row| row.len() == 3));
        assert!(file
            .blocks
            .iter()
            .flatten()
            .all(|b| b.len() == 2 && b[0].len() == 2));
        assert_eq!(file.dilated_projectors.len(), 3);
        assert!(file.dilated_projectors.iter().all(|p| p.len() == 6));
        let json = serde_json::to_string(&file).unwrap();
        let back: ExtensionFile = serde_json::from_str(&json).unwrap();
        assert!(exactly_equal(
            &matrix_from_entries(&back.unitary).unwrap(),
            ext.unitary()
        ));
    }
}
