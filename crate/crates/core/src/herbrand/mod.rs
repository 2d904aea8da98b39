//! Herbrand witness extraction: exact covers on finite structures, sampled
//! ε-covers on Hilbert balls, α-envelopes, and ε-nets for compact operators.

mod alpha;
mod certificate;
mod cover;
mod net;

use std::collections::BTreeMap;

pub use alpha::{fit_alpha, AlphaEnvelope, AlphaRecord};
pub use certificate::{
    parse_var, var_text, witness_record, HerbrandCertificate, ProblemRecord, VerifyReport,
    WitnessRecord,
};
pub use cover::{
    affine_candidates, classical_candidates, cover_definable_function, disk_grid, draw_samples,
    gate_all, greedy_cover, normalize_candidate, offset_net, point_record, search_classical,
    search_continuous, Candidate, Cover, CoverBudget, CoverProblem, FormulaProblem,
    FunctionProblem, ResidualStats, Sampling, Target,
};
pub use net::{compact_epsilon_net, tail_pieces, Piece, TailPieces};

use crate::logic::parse::ParseError;
use crate::logic::structure::EvalError;
use crate::models::ModelError;
use crate::normalizer::{EnumerateError, NormalizeError};

#[derive(Debug, thiserror::Error)]
pub enum HerbrandError {
    #[error("empty candidate family")]
    EmptyCandidates,
    #[error("epsilon must be positive")]
    NonPositiveEpsilon,
    #[error("`{0}` ranges over an infinite sort")]
    NotFinite(String),
    #[error("more than {0} candidates")]
    TooManyCandidates(usize),
    #[error("{} admitted samples left uncovered", .0.uncovered.len())]
    Uncovered(Box<Cover>),
    #[error("target leaves the unit ball (norm {norm}) at {witness:?}")]
    LeavesBall {
        witness: BTreeMap<String, Vec<String>>,
        norm: String,
    },
    #[error("no pairs to fit")]
    NoPairs,
    #[error("pair coordinate {0} outside [0, 1]")]
    PairOutOfRange(f64),
    #[error("exact cover falsified: a point with infimum 0 has residual {residual} above epsilon")]
    Contradiction { residual: String },
    #[error("no coordinate subspace of dimension at most {max_m} leaves a scalar tail")]
    NoTail { max_m: usize },
    #[error("certificate: {0}")]
    Certificate(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Enumerate(#[from] EnumerateError),
    #[error(transparent)]
    Normalize(#[from] NormalizeError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Parse(#[from] ParseError),
}
