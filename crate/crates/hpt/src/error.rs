use thiserror::Error;

use crate::ring::Ring;

/// The seven defining relations of a strong deformation retraction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SdrRelation {
    /// D f = 0 (the projection is a chain map).
    FChainMap,
    /// D g = 0 (the inclusion is a chain map).
    GChainMap,
    /// D h = 1 - g f (the homotopy contracts the complement of the image).
    Homotopy,
    /// f g = 1 (retraction onto the target).
    Retraction,
    /// f h = 0.
    AnnihilatesFh,
    /// h g = 0.
    AnnihilatesHg,
    /// h h = 0.
    AnnihilatesHh,
}

impl std::fmt::Display for SdrRelation {
    fn fmt(&self, w: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            SdrRelation::FChainMap => "Df = 0",
            SdrRelation::GChainMap => "Dg = 0",
            SdrRelation::Homotopy => "Dh = 1 - gf",
            SdrRelation::Retraction => "fg = 1",
            SdrRelation::AnnihilatesFh => "fh = 0",
            SdrRelation::AnnihilatesHg => "hg = 0",
            SdrRelation::AnnihilatesHh => "hh = 0",
        };
        write!(w, "{s}")
    }
}

/// A single violated SDR relation, with the first degree where the defect is nonzero.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SdrViolation {
    pub relation: SdrRelation,
    pub degree: i64,
}

/// The three generating maps of a deformation-retraction diagram, used to name
/// which naturality or commutator condition failed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SdrGenerator {
    F,
    G,
    H,
}

impl std::fmt::Display for SdrGenerator {
    fn fmt(&self, w: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SdrGenerator::F => write!(w, "f"),
            SdrGenerator::G => write!(w, "g"),
            SdrGenerator::H => write!(w, "h"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("ring mismatch: {0} vs {1}")]
    RingMismatch(Ring, Ring),

    #[error("module mismatch in {context}")]
    ModuleMismatch { context: &'static str },

    #[error("complex mismatch in {context}")]
    ComplexMismatch { context: &'static str },

    #[error("degree mismatch in {context}: expected {expected}, got {got}")]
    DegreeMismatch {
        context: &'static str,
        expected: i64,
        got: i64,
    },

    #[error(
        "block shape mismatch at source degree {degree}: expected {expected_rows}x{expected_cols}, got {rows}x{cols}"
    )]
    BlockShape {
        degree: i64,
        expected_rows: usize,
        expected_cols: usize,
        rows: usize,
        cols: usize,
    },

    #[error("d^2 != 0 first fails at source degree {degree}")]
    DifferentialSquare { degree: i64 },

    #[error("Maurer-Cartan equation D(delta) + delta^2 = 0 fails at degree {degree}")]
    MaurerCartan { degree: i64 },

    #[error("requested hom window does not cover the nonzero degrees [{lo}, {hi}]")]
    WindowTooSmall { lo: i64, hi: i64 },

    #[error("map is not a chain map in {context}")]
    NotChainMap { context: &'static str },

    #[error("SDR relations violated: {}", format_sdr_violations(.0))]
    Sdr(Vec<SdrViolation>),

    #[error("square naturality fails for generator {generator} at degree {degree}")]
    Naturality { generator: SdrGenerator, degree: i64 },

    #[error("commutator obstruction for generator {index} at degree {degree}")]
    CommutatorObstruction { index: usize, degree: i64 },

    #[error("NotNilpotent: operator block in degree {degree} is not nilpotent")]
    NotNilpotent { degree: i64 },

    #[error("perturbed hom differential disagrees with perturbed complex at degree {degree}")]
    UniversalProperty { degree: i64 },

    #[error("push-along compatibility fails: {condition}")]
    Compatibility { condition: &'static str },

    #[error("homology equivalence violated: {0}")]
    Equivalence(String),

    #[error("functoriality violated: {0}")]
    Functoriality(String),

    #[error("resample cap exceeded while searching for an admissible perturbation")]
    ResampleCap,

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

fn format_sdr_violations(v: &[SdrViolation]) -> String {
    v.iter()
        .map(|x| format!("{} (degree {})", x.relation, x.degree))
        .collect::<Vec<_>>()
        .join(", ")
}

impl Error {
    /// True for errors that indicate malformed or incompatible input rather
    /// than a violated mathematical law.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::RingMismatch(..)
                | Error::ModuleMismatch { .. }
                | Error::ComplexMismatch { .. }
                | Error::DegreeMismatch { .. }
                | Error::BlockShape { .. }
                | Error::WindowTooSmall { .. }
                | Error::Parse(..)
                | Error::Io(..)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
