//! Threshold model counting for k-CNF formulas.
//!
//! Given a CNF formula `F` over `n` variables with clause width at most `k`
//! and an exact rational threshold `rho` in (0,1), the deciders in this crate
//! determine whether `#SAT(F) >= rho * 2^n` (or strictly `>` for the GT
//! variants) in time polynomial in the formula size for fixed `k` and `rho`.
//! Every verdict carries a certificate: an exact count with the decision tree
//! that produced it, a small witness subformula whose satisfying fraction is
//! already below the threshold, or a hitting set of literals.
//!
//! The machinery underneath is combinatorial rather than search-based:
//! maximal variable-disjoint clause sets, sunflower extraction (clause
//! families sharing a consistent literal core with disjoint petals), decision
//! trees whose leaves are 1-CNFs, and an arithmetic gap argument showing that
//! a sum of few powers of two strictly below `rho * 2^n` must fall short by a
//! computable margin `eta`.
//!
//! All arithmetic on decision paths is exact (big integers and rationals);
//! the parameter schedules the algorithms run on can be astronomically large,
//! so resource budgets are first-class: see [`solvers::Budget`] and the
//! `BudgetExceeded` errors.
//!
//! A brute-force [`oracle`] module provides ground truth for desk-scale
//! verification and powers the test suite.

pub mod arithmetic;
pub mod combinatorics;
pub mod decomposition;
pub mod formula;
pub mod inference;
pub mod oracle;
pub mod reductions;
pub mod solvers;

pub use formula::{Clause, CnfFormula, ExactCount, Literal, Threshold, VarRole};
pub use inference::{
    decide_emaj2sat, decide_maj2sat_long_clauses, decide_majmaj2sat, partition_clauses,
    ClausePartition, ImpliedLiteralSet,
};
pub use reductions::{
    add_one_long_clause, exact_count_formula, gt_hardness_gadget, gt_to_maj, maj_to_gt, square,
    ReductionKind, ReductionRecord,
};
pub use solvers::{
    build_schedule, decide_gt_thr3sat, decide_gt_thrksat, decide_maj3sat, decide_thr2sat,
    decide_thr3sat, decide_thr3sat_above_half, decide_thrksat, msb_count, Answer, Budget,
    Certificate, NoWitness, NoWitnessKind, ParameterSchedule, ScheduleValue, SolverError, Verdict,
};

