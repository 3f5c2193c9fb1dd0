//! Decision trees over partial assignments whose leaves are 1-CNFs.
//!
//! An internal node branches on a disjoint set of clauses: one child per
//! assignment of the set's variables that satisfies every clause in the
//! set. Because the sets on a root-to-leaf path touch pairwise-distinct
//! variables, the leaf counts partition the satisfying assignments of the
//! source formula, so summing them counts exactly. Each leaf remembers how
//! many variables its path has fixed; counting a leaf is then just
//! `2^{free - units}` over its residual free variables.
//!
//! The number of leaves doubles as the crucial structural bound: the total
//! is a sum of at most `num_leaves` powers of two, which is what the gap
//! machinery in [`crate::arithmetic`] consumes.

use serde::{Deserialize, Serialize};

use crate::formula::{literals_consistent, Clause, ExactCount, Literal};
use num_bigint::BigUint;
use num_traits::{One, Zero};
use std::collections::BTreeSet;

/// One branch of an internal node: the partial assignment taken and the
/// subtree it leads to.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BranchArm {
    pub assignment: Vec<Literal>,
    pub subtree: DecompositionTree,
}

/// A decision tree whose internal nodes branch over the satisfying partial
/// assignments of a disjoint clause set and whose leaves are 1-CNFs.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DecompositionTree {
    Leaf {
        /// Residual formula, every clause of width <= 1.
        clauses: Vec<Clause>,
        /// Variables fixed by the assignments on the path to this leaf.
        fixed_vars: u32,
    },
    Branch {
        /// The disjoint clause set this node branches on.
        disjoint_set: Vec<Clause>,
        /// One arm per satisfying assignment of the set's variables.
        children: Vec<BranchArm>,
    },
}

impl DecompositionTree {
    pub fn leaf(clauses: Vec<Clause>, fixed_vars: u32) -> Self {
        DecompositionTree::Leaf { clauses, fixed_vars }
    }

    pub fn branch(disjoint_set: Vec<Clause>, children: Vec<BranchArm>) -> Self {
        DecompositionTree::Branch { disjoint_set, children }
    }

    pub fn num_leaves(&self) -> u64 {
        match self {
            DecompositionTree::Leaf { .. } => 1,
            DecompositionTree::Branch { children, .. } => {
                children.iter().map(|arm| arm.subtree.num_leaves()).sum()
            }
        }
    }

    /// Calls `visit` on every leaf with the accumulated path assignment,
    /// the leaf clauses, and the leaf's fixed-variable count.
    pub fn visit_leaves<F: FnMut(&[Literal], &[Clause], u32)>(&self, visit: &mut F) {
        let mut path = Vec::new();
        self.visit_rec(&mut path, visit);
    }

    fn visit_rec<F: FnMut(&[Literal], &[Clause], u32)>(
        &self,
        path: &mut Vec<Literal>,
        visit: &mut F,
    ) {
        match self {
            DecompositionTree::Leaf { clauses, fixed_vars } => visit(path, clauses, *fixed_vars),
            DecompositionTree::Branch { children, .. } => {
                for arm in children {
                    let mark = path.len();
                    path.extend_from_slice(&arm.assignment);
                    arm.subtree.visit_rec(path, visit);
                    path.truncate(mark);
                }
            }
        }
    }

    /// Structural well-formedness over `n` variables: path assignments
    /// touch pairwise-distinct variables and match their node's disjoint
    /// set, arms satisfy every clause of their set, leaves have width <= 1,
    /// and each leaf's `fixed_vars` equals its path length.
    pub fn validate(&self, n: u32) -> Result<(), String> {
        let mut seen = BTreeSet::new();
        self.validate_rec(n, &mut seen, 0)
    }

    fn validate_rec(&self, n: u32, path_vars: &mut BTreeSet<u32>, depth: u32) -> Result<(), String> {
        match self {
            DecompositionTree::Leaf { clauses, fixed_vars } => {
                if *fixed_vars != depth {
                    return Err(format!("leaf records {fixed_vars} fixed vars, path fixed {depth}"));
                }
                if *fixed_vars > n {
                    return Err(format!("leaf fixes {fixed_vars} of {n} variables"));
                }
                for c in clauses {
                    if c.width() > 1 {
                        return Err(format!("leaf clause {c:?} has width {}", c.width()));
                    }
                    for lit in c.literals() {
                        if lit.var() > n {
                            return Err(format!("leaf mentions variable {} > {n}", lit.var()));
                        }
                    }
                }
                Ok(())
            }
            DecompositionTree::Branch { disjoint_set, children } => {
                let mut set_vars = BTreeSet::new();
                for c in disjoint_set {
                    for v in c.vars() {
                        if v > n {
                            return Err(format!("disjoint set mentions variable {v} > {n}"));
                        }
                        if !set_vars.insert(v) {
                            return Err(format!("disjoint set repeats variable {v}"));
                        }
                        if path_vars.contains(&v) {
                            return Err(format!("variable {v} already fixed on the path"));
                        }
                    }
                }
                for arm in children {
                    let arm_vars: BTreeSet<u32> = arm.assignment.iter().map(|l| l.var()).collect();
                    if arm_vars != set_vars {
                        return Err("arm assignment does not cover the disjoint set".into());
                    }
                    if arm_vars.len() != arm.assignment.len() {
                        return Err("arm assignment repeats a variable".into());
                    }
                    for c in disjoint_set {
                        if !arm.assignment.iter().any(|l| c.literals().contains(l)) {
                            return Err(format!("arm assignment falsifies {c:?}"));
                        }
                    }
                    for &v in &arm_vars {
                        path_vars.insert(v);
                    }
                    arm.subtree.validate_rec(n, path_vars, depth + arm.assignment.len() as u32)?;
                    for &v in &arm_vars {
                        path_vars.remove(&v);
                    }
                }
                Ok(())
            }
        }
    }
}

/// Counts the satisfying assignments of a 1-CNF over `free_vars` free
/// variables: 0 if the units are inconsistent or an empty clause is
/// present, else `2^{free_vars - k}` for `k` distinct asserted literals.
pub fn count_1cnf(clauses: &[Clause], free_vars: u32) -> ExactCount {
    debug_assert!(clauses.iter().all(|c| c.width() <= 1), "leaf must be a 1-CNF");
    let mut units = Vec::new();
    for c in clauses {
        match c.literals() {
            [] => return ExactCount::with_term_bound(BigUint::zero(), 1),
            [lit] => units.push(*lit),
            _ => unreachable!("width checked above"),
        }
    }
    if !literals_consistent(&units) {
        return ExactCount::with_term_bound(BigUint::zero(), 1);
    }
    let distinct: BTreeSet<Literal> = units.into_iter().collect();
    let k = distinct.len() as u32;
    debug_assert!(k <= free_vars, "1-CNF mentions more variables than are free");
    ExactCount::with_term_bound(BigUint::one() << (free_vars - k), 1)
}

/// Counts the assignments (over a universe of `universe` variables) that
/// satisfy both the tree's source formula and every literal in `units`.
///
/// Branch arms that contradict a unit contribute nothing; arms that fix a
/// unit's variable consume it. Units surviving to a leaf join the leaf's
/// own unit clauses, so an inconsistent combination counts zero. `units`
/// may repeat or even contradict itself; contradictions simply yield zero.
///
/// The caller must pick `universe` so that every variable the tree or the
/// units mention is one of the `universe` counted variables; the two-level
/// deciders count inner and outer blocks of a larger formula this way.
pub fn count_with_units(tree: &DecompositionTree, universe: u32, units: &[Literal]) -> BigUint {
    match tree {
        DecompositionTree::Leaf { clauses, fixed_vars } => {
            let mut lits: Vec<Literal> = units.to_vec();
            for c in clauses {
                match c.literals() {
                    [] => return BigUint::zero(),
                    [l] => lits.push(*l),
                    _ => unreachable!("leaves are 1-CNFs"),
                }
            }
            if !literals_consistent(&lits) {
                return BigUint::zero();
            }
            let distinct: BTreeSet<Literal> = lits.into_iter().collect();
            let free = (universe - fixed_vars) as usize;
            debug_assert!(distinct.len() <= free, "units must lie inside the free universe");
            BigUint::one() << (free - distinct.len())
        }
        DecompositionTree::Branch { children, .. } => {
            let mut total = BigUint::zero();
            'arms: for arm in children {
                let mut rest = Vec::with_capacity(units.len());
                for &u in units {
                    match arm.assignment.iter().find(|a| a.var() == u.var()) {
                        Some(&a) if a != u => continue 'arms,
                        Some(_) => {}
                        None => rest.push(u),
                    }
                }
                total += count_with_units(&arm.subtree, universe, &rest);
            }
            total
        }
    }
}

/// Sums [`count_1cnf`] over all leaves of `tree`, each leaf evaluated over
/// its residual free variables out of `n`. The result's term bound is the
/// number of leaves: the count is a sum of that many powers of two.
pub fn count_tree(tree: &DecompositionTree, n: u32) -> ExactCount {
    let mut total = BigUint::zero();
    let mut leaves = 0u64;
    tree.visit_leaves(&mut |_path, clauses, fixed| {
        debug_assert!(fixed <= n);
        total += count_1cnf(clauses, n - fixed).value();
        leaves += 1;
    });
    ExactCount::with_term_bound(total, leaves)
}
