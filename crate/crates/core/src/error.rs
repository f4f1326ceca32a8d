//! Crate-wide error type and its mapping to process exit codes.

use thiserror::Error;

use crate::affine::AffineError;
use crate::circulation::CirculationError;
use crate::game::GameError;
use crate::greedy::SolveError;
use crate::network::NetworkError;
use crate::oracle::OracleError;
use crate::poset::PosetError;
use crate::problem::ProblemError;

/// Broad failure class, shared by the CLI exit status and the C status codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    MalformedInput,
    ConditionsViolated,
    ResourceLimit,
    Internal,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::MalformedInput => 1,
            ErrorKind::ConditionsViolated => 2,
            ErrorKind::ResourceLimit => 3,
            ErrorKind::Internal => 4,
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Poset(#[from] PosetError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Affine(#[from] AffineError),
    #[error(transparent)]
    Circulation(#[from] CirculationError),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

fn poset_kind(e: &PosetError) -> ErrorKind {
    match e {
        PosetError::ChainLimitExceeded { .. } => ErrorKind::ResourceLimit,
        _ => ErrorKind::MalformedInput,
    }
}

fn problem_kind(e: &ProblemError) -> ErrorKind {
    match e {
        ProblemError::Poset(p) => poset_kind(p),
        ProblemError::MissingRecombination(_) => ErrorKind::Internal,
        _ => ErrorKind::MalformedInput,
    }
}

fn network_kind(e: &NetworkError) -> ErrorKind {
    match e {
        NetworkError::PathLimitExceeded { .. } => ErrorKind::ResourceLimit,
        _ => ErrorKind::MalformedInput,
    }
}

fn solve_kind(e: &SolveError) -> ErrorKind {
    match e {
        SolveError::Problem(p) => problem_kind(p),
        SolveError::ConditionsViolated(_) | SolveError::TotalExceedsOne(_) => ErrorKind::ConditionsViolated,
        SolveError::InvariantBroken(_) => ErrorKind::Internal,
    }
}

fn affine_kind(e: &AffineError) -> ErrorKind {
    match e {
        AffineError::Problem(p) => problem_kind(p),
        AffineError::NecessaryConditionViolated { .. } | AffineError::PiAboveOne { .. } => {
            ErrorKind::ConditionsViolated
        }
    }
}

fn circulation_kind(e: &CirculationError) -> ErrorKind {
    match e {
        CirculationError::Network(n) => network_kind(n),
        CirculationError::NonConserving(_) | CirculationError::NegativeFlow(_) => ErrorKind::MalformedInput,
        CirculationError::Lp(_) => ErrorKind::Internal,
    }
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Poset(e) => poset_kind(e),
            Error::Problem(e) => problem_kind(e),
            Error::Network(e) => network_kind(e),
            Error::Solve(e) => solve_kind(e),
            Error::Affine(e) => affine_kind(e),
            Error::Circulation(e) => circulation_kind(e),
            Error::Game(e) => match e {
                GameError::Circulation(c) => circulation_kind(c),
                GameError::Affine(a) => affine_kind(a),
                GameError::Solve(s) => solve_kind(s),
                GameError::Network(n) => network_kind(n),
                GameError::Oracle(o) => oracle_kind(o),
                GameError::UnknownEdge(_) | GameError::InvalidProfile(_) => ErrorKind::MalformedInput,
            },
            Error::Oracle(e) => oracle_kind(e),
            Error::Input(_) | Error::Io(_) => ErrorKind::MalformedInput,
        }
    }

    pub fn exit_code(&self) -> i32 {
        self.kind().exit_code()
    }
}

fn oracle_kind(e: &OracleError) -> ErrorKind {
    match e {
        OracleError::TooLarge { .. } | OracleError::EnumerationLimitExceeded { .. } => ErrorKind::ResourceLimit,
        OracleError::Problem(p) => problem_kind(p),
        OracleError::Network(n) => network_kind(n),
        OracleError::Infeasible | OracleError::Unbounded | OracleError::WitnessRejected(_) => ErrorKind::Internal,
    }
}
