//! 3SAT-based hardness constructions as executable generators and checkers:
//! the piecewise linear test (PLT), the network test (NNT) and the
//! abs-normal form test (ANFT).
//!
//! All decision procedures here enumerate exponentially many signs,
//! selections or signatures and are guarded accordingly.

pub mod anf;
pub mod cnf;
pub mod nnt;
pub mod plt;

pub use anf::{anft_check, anft_witness, plt_to_abs_normal, AbsNormalForm, MAX_ANFT_SWITCHES};
pub use cnf::{brute_sat, parse_dimacs, random_cnf3, satisfying_assignment, Cnf3, MAX_BRUTE_VARS};
pub use nnt::{eval_nnt, nnt_directional_check, nnt_directional_derivative, NntReport};
pub use plt::{
    assignment_direction, certificate, eval_plt, frechet_distance, plt_stationary, sat_to_plt, sign_witness,
    PltInstance, PltMode, MAX_CERTIFICATE_CLAUSES, MAX_EXHAUSTIVE_VARS, MAX_ORTHANT_VARS,
};
