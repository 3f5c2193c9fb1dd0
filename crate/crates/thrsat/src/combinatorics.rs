//! Disjoint-set and sunflower machinery: greedy maximal disjoint sets,
//! the width-3 and width-k extraction procedures that either surface a
//! large sunflower or decompose the formula into a decision tree of
//! 1-CNFs, and an exact search for sunflowers with a prescribed core.
//!
//! Extraction is the engine behind every decider here: a large sunflower
//! certifies that many clause constraints act near-independently (driving
//! NO answers or core conditioning), while a small one lets us afford
//! brute enumeration over the few disjoint clauses that remain.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decomposition::{BranchArm, DecompositionTree};
use crate::formula::{literals_consistent, Clause, CnfFormula, Literal};

/// Default ceiling on decomposition-tree leaves. The worst-case bounds are
/// towers of constants; desk-scale work needs a guard, and callers can
/// lower it through their budgets.
pub const DEFAULT_LEAF_CAP: u64 = 10_000_000;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ExtractError {
    #[error("clause {index} has width {width}, exceeding the width-{max} bound")]
    WidthViolation { index: usize, width: u32, max: u32 },
    #[error("decomposition needs more than {cap} leaves")]
    BudgetExceeded { cap: u64 },
}

/// A variable-disjoint set of clauses, stored as indices into its host
/// formula. `width_filter` records the exact clause width the members were
/// drawn from; `maximal` asserts that every other eligible clause of the
/// host shares a variable with some member.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DisjointSet {
    clause_indices: Vec<usize>,
    width_filter: Option<usize>,
    maximal: bool,
}

impl DisjointSet {
    pub fn clause_indices(&self) -> &[usize] {
        &self.clause_indices
    }

    pub fn width_filter(&self) -> Option<usize> {
        self.width_filter
    }

    pub fn is_maximal(&self) -> bool {
        self.maximal
    }

    pub fn len(&self) -> usize {
        self.clause_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clause_indices.is_empty()
    }

    pub fn clauses<'a>(&self, f: &'a CnfFormula) -> Vec<&'a Clause> {
        self.clause_indices.iter().map(|&i| f.clause(i)).collect()
    }

    /// Total number of variables covered by the member clauses. Distinct
    /// by disjointness, so this is just the width sum.
    pub fn num_vars(&self, f: &CnfFormula) -> u32 {
        self.clause_indices.iter().map(|&i| f.clause(i).width() as u32).sum()
    }

    /// Checks pairwise variable-disjointness, the width filter, and (when
    /// flagged) maximality against the host formula.
    pub fn validate(&self, f: &CnfFormula) -> Result<(), String> {
        let mut used: BTreeSet<u32> = BTreeSet::new();
        for &i in &self.clause_indices {
            let c = f.clause(i);
            if let Some(w) = self.width_filter {
                if c.width() != w {
                    return Err(format!("member {i} has width {}, filter wants {w}", c.width()));
                }
            }
            for v in c.vars() {
                if !used.insert(v) {
                    return Err(format!("variable {v} appears in two members"));
                }
            }
        }
        if self.maximal {
            let members: BTreeSet<usize> = self.clause_indices.iter().copied().collect();
            for (i, c) in f.clauses().iter().enumerate() {
                if members.contains(&i) {
                    continue;
                }
                if self.width_filter.is_some_and(|w| c.width() != w) {
                    continue;
                }
                if c.vars().all(|v| !used.contains(&v)) {
                    return Err(format!("clause {i} could extend the set"));
                }
            }
        }
        Ok(())
    }
}

/// A sunflower: every petal clause contains all core literals, and the
/// petals with the core removed are pairwise variable-disjoint. A
/// 0-sunflower (empty core) is exactly a disjoint set.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sunflower {
    core: Vec<Literal>,
    petal_indices: Vec<usize>,
}

impl Sunflower {
    pub fn new(mut core: Vec<Literal>, petal_indices: Vec<usize>) -> Self {
        core.sort();
        core.dedup();
        Sunflower { core, petal_indices }
    }

    pub fn core(&self) -> &[Literal] {
        &self.core
    }

    pub fn petal_indices(&self) -> &[usize] {
        &self.petal_indices
    }

    /// Core size.
    pub fn weight(&self) -> usize {
        self.core.len()
    }

    /// Petal count.
    pub fn size(&self) -> usize {
        self.petal_indices.len()
    }

    /// Structural check against the host formula: consistent core, core
    /// containment in every petal, and pairwise variable-disjoint
    /// residuals that avoid the core variables.
    pub fn validate(&self, f: &CnfFormula) -> Result<(), String> {
        if !literals_consistent(&self.core) {
            return Err("core is inconsistent".into());
        }
        let core_vars: BTreeSet<u32> = self.core.iter().map(|l| l.var()).collect();
        let mut used: BTreeSet<u32> = BTreeSet::new();
        let mut seen = BTreeSet::new();
        for &i in &self.petal_indices {
            if !seen.insert(i) {
                return Err(format!("petal index {i} repeated"));
            }
            let c = f.clause(i);
            if !c.contains_all(&self.core) {
                return Err(format!("petal {i} misses a core literal"));
            }
            let residual = c.without_literals(&self.core);
            for v in residual.vars() {
                if core_vars.contains(&v) {
                    return Err(format!("residual of petal {i} touches core variable {v}"));
                }
                if !used.insert(v) {
                    return Err(format!("residuals share variable {v}"));
                }
            }
        }
        Ok(())
    }
}

/// Result of an extraction run: a sunflower big enough for the stage that
/// triggered it, or a full decomposition of the formula into 1-CNF leaves.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum ExtractionOutcome {
    Sunflower {
        sunflower: Sunflower,
        /// The stage whose size threshold the sunflower met. Its weight is
        /// at most this stage index.
        stage: u32,
    },
    Tree(DecompositionTree),
}

/// Greedily builds a maximal variable-disjoint set, scanning clauses in
/// formula order. With `width_filter`, only clauses of exactly that width
/// are eligible (members and blockers alike).
pub fn maximal_disjoint_set(f: &CnfFormula, width_filter: Option<usize>) -> DisjointSet {
    let mut used: BTreeSet<u32> = BTreeSet::new();
    let mut indices = Vec::new();
    for (i, c) in f.clauses().iter().enumerate() {
        if width_filter.is_some_and(|w| c.width() != w) {
            continue;
        }
        if c.vars().all(|v| !used.contains(&v)) {
            used.extend(c.vars());
            indices.push(i);
        }
    }
    DisjointSet { clause_indices: indices, width_filter, maximal: true }
}

/// Number of assignments to the variables of `s` that satisfy every
/// member clause: the product of `2^w - 1` over member widths.
pub fn satisfying_assignment_count(f: &CnfFormula, s: &DisjointSet) -> BigUint {
    let mut n = BigUint::one();
    for &i in &s.clause_indices {
        n *= (BigUint::one() << f.clause(i).width()) - BigUint::one();
    }
    n
}

/// Iterator over all assignments to the variables of a disjoint set that
/// satisfy every member clause, as literal vectors. Per clause, the
/// `2^w - 1` local assignments run in ascending-mask order (bit `j` set
/// means the j-th literal in canonical order is made true, and the
/// all-false mask is skipped); the cartesian product varies the last
/// clause fastest.
pub struct SatAssignments {
    options: Vec<Vec<Vec<Literal>>>,
    odometer: Vec<usize>,
    done: bool,
}

impl Iterator for SatAssignments {
    type Item = Vec<Literal>;

    fn next(&mut self) -> Option<Vec<Literal>> {
        if self.done {
            return None;
        }
        let current: Vec<Literal> = self
            .options
            .iter()
            .zip(&self.odometer)
            .flat_map(|(opts, &i)| opts[i].iter().copied())
            .collect();
        // advance, last clause fastest
        let mut pos = self.options.len();
        loop {
            if pos == 0 {
                self.done = true;
                break;
            }
            pos -= 1;
            self.odometer[pos] += 1;
            if self.odometer[pos] < self.options[pos].len() {
                break;
            }
            self.odometer[pos] = 0;
        }
        Some(current)
    }
}

pub fn enumerate_satisfying_assignments(f: &CnfFormula, s: &DisjointSet) -> SatAssignments {
    let mut options = Vec::with_capacity(s.len());
    let mut empty = false;
    for &i in &s.clause_indices {
        let lits = f.clause(i).literals();
        let w = lits.len();
        let mut clause_opts = Vec::with_capacity((1usize << w) - 1);
        for mask in 1u32..(1 << w) {
            let assignment: Vec<Literal> = lits
                .iter()
                .enumerate()
                .map(|(j, &l)| if mask & (1 << j) != 0 { l } else { l.negated() })
                .collect();
            clause_opts.push(assignment);
        }
        empty |= clause_opts.is_empty(); // a bottom clause admits nothing
        options.push(clause_opts);
    }
    let odometer = vec![0; options.len()];
    SatAssignments { options, odometer, done: empty }
}

fn check_width(f: &CnfFormula, max: u32) -> Result<(), ExtractError> {
    for (index, c) in f.clauses().iter().enumerate() {
        if c.width() as u32 > max {
            return Err(ExtractError::WidthViolation { index, width: c.width() as u32, max });
        }
    }
    Ok(())
}

/// The literals a partial assignment makes false: the negations of the
/// assigned literals.
fn falsified_by(assignment: &[Literal]) -> BTreeSet<Literal> {
    assignment.iter().map(|l| l.negated()).collect()
}

/// Extraction for width-3 formulas. Returns a 0-sunflower of size >= `z`,
/// else a 1-sunflower of size >= `q`, else a decomposition tree whose
/// 1-CNF leaf counts sum to the satisfying-assignment count of `f`.
pub fn extract_3cnf(f: &CnfFormula, z: u64, q: u64) -> Result<ExtractionOutcome, ExtractError> {
    extract_3cnf_with_cap(f, z, q, DEFAULT_LEAF_CAP)
}

pub fn extract_3cnf_with_cap(
    f: &CnfFormula,
    z: u64,
    q: u64,
    leaf_cap: u64,
) -> Result<ExtractionOutcome, ExtractError> {
    assert!(z >= 1 && q >= 1);
    check_width(f, 3)?;
    let s = maximal_disjoint_set(f, None);
    if s.len() as u64 >= z {
        return Ok(ExtractionOutcome::Sunflower {
            sunflower: Sunflower::new(vec![], s.clause_indices.clone()),
            stage: 0,
        });
    }
    if s.is_empty() {
        // no clauses at all
        return Ok(ExtractionOutcome::Tree(DecompositionTree::leaf(vec![], 0)));
    }
    let s_vars = s.num_vars(f);
    let mut leaves = 0u64;
    let mut arms = Vec::new();
    for alpha in enumerate_satisfying_assignments(f, &s) {
        let f_alpha = f.assign_all(&alpha);
        let s_alpha = maximal_disjoint_set(&f_alpha, Some(2));
        // u128: callers may pass saturated q values as "never fire" sentinels.
        if s_alpha.len() as u128 >= 3u128 * q as u128 * s.len() as u128 {
            // Every width-2 clause here lost exactly one literal from a
            // width-3 parent, and that literal is falsified by alpha. At
            // most 3|S| literals were falsified, so some literal is the
            // lost one for at least |S_alpha| / (3|S|) >= q members.
            let sunflower = pigeonhole_1sunflower(f, &f_alpha, &s_alpha, &falsified_by(&alpha));
            debug_assert!(sunflower.size() as u64 >= q);
            return Ok(ExtractionOutcome::Sunflower { sunflower, stage: 1 });
        }
        let subtree = if s_alpha.is_empty() {
            leaves += 1;
            DecompositionTree::leaf(f_alpha.clauses().to_vec(), s_vars)
        } else {
            let mut inner_arms = Vec::new();
            let inner_count = satisfying_assignment_count(&f_alpha, &s_alpha);
            leaves = leaves.saturating_add(inner_count.to_u64().unwrap_or(u64::MAX));
            if leaves > leaf_cap {
                return Err(ExtractError::BudgetExceeded { cap: leaf_cap });
            }
            let fixed = s_vars + s_alpha.num_vars(&f_alpha);
            for beta in enumerate_satisfying_assignments(&f_alpha, &s_alpha) {
                let f_ab = f_alpha.assign_all(&beta);
                inner_arms.push(BranchArm {
                    assignment: beta,
                    subtree: DecompositionTree::leaf(f_ab.clauses().to_vec(), fixed),
                });
            }
            DecompositionTree::branch(
                s_alpha.clauses(&f_alpha).into_iter().cloned().collect(),
                inner_arms,
            )
        };
        if leaves > leaf_cap {
            return Err(ExtractError::BudgetExceeded { cap: leaf_cap });
        }
        arms.push(BranchArm { assignment: alpha, subtree });
    }
    let root = DecompositionTree::branch(s.clauses(f).into_iter().cloned().collect(), arms);
    Ok(ExtractionOutcome::Tree(root))
}

/// The averaging step shared by the width-3 extraction: group the members
/// of `s_alpha` by the literal their parent clause lost, and return the
/// largest group as a 1-sunflower of parent clauses.
fn pigeonhole_1sunflower(
    f: &CnfFormula,
    f_alpha: &CnfFormula,
    s_alpha: &DisjointSet,
    falsified: &BTreeSet<Literal>,
) -> Sunflower {
    let mut groups: BTreeMap<Literal, Vec<usize>> = BTreeMap::new();
    for &i in &s_alpha.clause_indices {
        let child = f_alpha.clause(i);
        // lexicographically first parent: clauses are canonical, so scan
        // in clause order and keep the smallest by content
        let mut best: Option<(&Clause, usize, Literal)> = None;
        for (pi, parent) in f.clauses().iter().enumerate() {
            if parent.width() != child.width() + 1 || !subsumes(parent, child) {
                continue;
            }
            let extra: Vec<Literal> = parent
                .literals()
                .iter()
                .copied()
                .filter(|l| !child.literals().contains(l))
                .collect();
            if let [lost] = extra[..] {
                if falsified.contains(&lost)
                    && best.is_none_or(|(b, _, _)| parent.literals() < b.literals())
                {
                    best = Some((parent, pi, lost));
                }
            }
        }
        let (_, pi, lost) = best.expect("width-2 member must have a width-3 parent");
        groups.entry(lost).or_default().push(pi);
    }
    let (&core, petals) = groups
        .iter()
        .max_by_key(|(lit, petals)| (petals.len(), std::cmp::Reverse(**lit)))
        .expect("nonempty disjoint set");
    Sunflower::new(vec![core], petals.clone())
}

fn subsumes(parent: &Clause, child: &Clause) -> bool {
    child.literals().iter().all(|l| parent.literals().contains(l))
}

/// Extraction for width-k formulas, `k = qs.len() + 1`. Stage `a` branches
/// every current leaf over a maximal disjoint set of its exact
/// width-(k-a) clauses; if a stage set outgrows its threshold, the members
/// are pulled back through the branching history and grouped by the
/// literal set they lost, yielding a sunflower of size >= `qs[a]` and
/// weight <= a.
pub fn extract_kcnf(f: &CnfFormula, qs: &[u64]) -> Result<ExtractionOutcome, ExtractError> {
    extract_kcnf_with_cap(f, qs, DEFAULT_LEAF_CAP)
}

/// One level of branching history: the formula at that level, the size of
/// its stage disjoint set, and the literals falsified by the arm currently
/// being explored below it.
struct HistoryLevel {
    formula: CnfFormula,
    set_size: u64,
    falsified: BTreeSet<Literal>,
}

enum Stop {
    Found { sunflower: Sunflower, stage: u32 },
    Budget,
}

struct KcnfRun<'a> {
    f: &'a CnfFormula,
    k: u32,
    qs: &'a [u64],
    leaf_cap: u64,
    leaves: u64,
}

pub fn extract_kcnf_with_cap(
    f: &CnfFormula,
    qs: &[u64],
    leaf_cap: u64,
) -> Result<ExtractionOutcome, ExtractError> {
    assert!(!qs.is_empty() && qs.iter().all(|&q| q >= 1));
    let k = qs.len() as u32 + 1;
    check_width(f, k)?;
    let mut run = KcnfRun { f, k, qs, leaf_cap, leaves: 0 };
    let mut history: Vec<HistoryLevel> = Vec::new();
    match expand_stage(&mut run, f.clone(), 0, 0, &mut history) {
        Ok(tree) => Ok(ExtractionOutcome::Tree(tree)),
        Err(Stop::Found { sunflower, stage }) => {
            Ok(ExtractionOutcome::Sunflower { sunflower, stage })
        }
        Err(Stop::Budget) => Err(ExtractError::BudgetExceeded { cap: leaf_cap }),
    }
}

fn expand_stage(
    run: &mut KcnfRun,
    phi: CnfFormula,
    stage: u32,
    fixed: u32,
    history: &mut Vec<HistoryLevel>,
) -> Result<DecompositionTree, Stop> {
    if stage == run.k - 1 {
        debug_assert!(phi.max_width() <= 1);
        run.leaves += 1;
        if run.leaves > run.leaf_cap {
            return Err(Stop::Budget);
        }
        return Ok(DecompositionTree::leaf(phi.clauses().to_vec(), fixed));
    }
    let width = (run.k - stage) as usize;
    let s = maximal_disjoint_set(&phi, Some(width));
    // threshold = qs[stage] * prod over history levels j of ((k-j)|S_j|+1)
    let mut threshold = run.qs[stage as usize] as u128;
    for (j, level) in history.iter().enumerate() {
        threshold = threshold
            .saturating_mul((run.k as u128 - j as u128) * level.set_size as u128 + 1);
    }
    if (s.len() as u128) >= threshold {
        if stage == 0 {
            return Err(Stop::Found {
                sunflower: Sunflower::new(vec![], s.clause_indices().to_vec()),
                stage: 0,
            });
        }
        if let Some(sunflower) = pullback_sunflower(run, &phi, &s, history) {
            return Err(Stop::Found { sunflower, stage });
        }
        // The label count can come up short only when some member lost two
        // literals in a single stage (its parents were never stage
        // members). Expanding further keeps the count exact; the leaf cap
        // bounds the extra work.
    }
    let arm_count = satisfying_assignment_count(&phi, &s);
    if &BigUint::from(run.leaves) + &arm_count > BigUint::from(run.leaf_cap) {
        return Err(Stop::Budget);
    }
    if s.is_empty() {
        // nothing of this width: a single empty-assignment arm would be
        // noise, so descend directly
        return expand_stage(run, phi, stage + 1, fixed, history);
    }
    let set_clauses: Vec<Clause> = s.clauses(&phi).into_iter().cloned().collect();
    let set_vars = s.num_vars(&phi);
    let mut arms = Vec::new();
    history.push(HistoryLevel {
        formula: phi.clone(),
        set_size: s.len() as u64,
        falsified: BTreeSet::new(),
    });
    for gamma in enumerate_satisfying_assignments(&phi, &s) {
        let child = phi.assign_all(&gamma);
        history.last_mut().expect("just pushed").falsified = falsified_by(&gamma);
        let subtree = match expand_stage(run, child, stage + 1, fixed + set_vars, history) {
            Ok(t) => t,
            Err(stop) => {
                history.pop();
                return Err(stop);
            }
        };
        arms.push(BranchArm { assignment: gamma, subtree });
    }
    history.pop();
    Ok(DecompositionTree::branch(set_clauses, arms))
}

/// Pulls each member of `s` back through the branching history to a clause
/// of the original formula, labeling it with the set of literals lost on
/// the way, then returns the largest label group as a sunflower if it
/// meets the stage threshold.
fn pullback_sunflower(
    run: &KcnfRun,
    phi: &CnfFormula,
    s: &DisjointSet,
    history: &[HistoryLevel],
) -> Option<Sunflower> {
    let mut groups: BTreeMap<Vec<Literal>, Vec<usize>> = BTreeMap::new();
    for &i in s.clause_indices() {
        let mut current = phi.clause(i).clone();
        let mut lost: Vec<Literal> = Vec::new();
        let mut root_index = usize::MAX;
        for (j, level) in history.iter().enumerate().rev() {
            let mut best: Option<(&Clause, usize, Vec<Literal>)> = None;
            for (pi, parent) in level.formula.clauses().iter().enumerate() {
                if !subsumes(parent, &current) {
                    continue;
                }
                let extra: Vec<Literal> = parent
                    .literals()
                    .iter()
                    .copied()
                    .filter(|l| !current.literals().contains(l))
                    .collect();
                if extra.iter().all(|l| level.falsified.contains(l))
                    && best.as_ref().is_none_or(|(b, _, _)| parent.literals() < b.literals())
                {
                    best = Some((parent, pi, extra));
                }
            }
            let (parent, pi, extra) =
                best.expect("every clause descends from one in the previous level");
            lost.extend(extra);
            current = parent.clone();
            if j == 0 {
                root_index = pi;
            }
        }
        debug_assert!(run.f.clause(root_index) == &current);
        lost.sort();
        groups.entry(lost).or_default().push(root_index);
    }
    let stage = history.len();
    let (core, petals) = groups
        .into_iter()
        .max_by_key(|(core, petals)| (petals.len(), std::cmp::Reverse(core.clone())))?;
    if petals.len() as u64 >= run.qs[stage] {
        Some(Sunflower::new(core, petals))
    } else {
        None
    }
}

/// Exact search for a sunflower with the given core and at least `q`
/// petals: restrict to clauses containing the whole core, strip it, and
/// solve the petal set-packing question. A greedy maximal packing `M`
/// answers YES when `|M| >= q` and NO when even `sum of widths(M) < q`
/// blocked petals cannot reach `q`; in between, exhaustive branch and
/// bound settles it.
pub fn find_sunflower_with_core(f: &CnfFormula, core: &[Literal], q: u64) -> Option<Sunflower> {
    assert!(literals_consistent(core), "sunflower cores must be consistent");
    assert!(q >= 1);
    let core_sorted: Vec<Literal> = {
        let mut c = core.to_vec();
        c.sort();
        c.dedup();
        c
    };
    struct Candidate {
        index: usize,
        petal_vars: Vec<u32>,
    }
    let mut candidates: Vec<Candidate> = Vec::new();
    for (i, c) in f.clauses().iter().enumerate() {
        if c.contains_all(&core_sorted) {
            let petal_vars = c.without_literals(&core_sorted).vars().collect();
            candidates.push(Candidate { index: i, petal_vars });
        }
    }
    // greedy maximal packing in index order
    let mut used: BTreeSet<u32> = BTreeSet::new();
    let mut greedy: Vec<usize> = Vec::new(); // positions into candidates
    for (pos, cand) in candidates.iter().enumerate() {
        if cand.petal_vars.iter().all(|v| !used.contains(v)) {
            used.extend(cand.petal_vars.iter().copied());
            greedy.push(pos);
        }
    }
    if greedy.len() as u64 >= q {
        let petals = greedy.iter().map(|&p| candidates[p].index).collect();
        return Some(Sunflower::new(core_sorted, petals));
    }
    // any packing member shares a variable with the greedy set, and a
    // member with w variables blocks at most w of them
    let blocked_bound: u64 = greedy.iter().map(|&p| candidates[p].petal_vars.len() as u64).sum();
    let empty_petals = candidates.iter().filter(|c| c.petal_vars.is_empty()).count() as u64;
    if blocked_bound + empty_petals < q {
        return None;
    }
    // exhaustive branch and bound for a packing of size q
    fn search(
        candidates: &[Candidate],
        pos: usize,
        used: &mut BTreeSet<u32>,
        chosen: &mut Vec<usize>,
        q: usize,
    ) -> bool {
        if chosen.len() == q {
            return true;
        }
        if pos == candidates.len() || chosen.len() + (candidates.len() - pos) < q {
            return false;
        }
        let cand = &candidates[pos];
        if cand.petal_vars.iter().all(|v| !used.contains(v)) {
            used.extend(cand.petal_vars.iter().copied());
            chosen.push(cand.index);
            if search(candidates, pos + 1, used, chosen, q) {
                return true;
            }
            chosen.pop();
            for v in &cand.petal_vars {
                used.remove(v);
            }
        }
        search(candidates, pos + 1, used, chosen, q)
    }
    let q_usize = usize::try_from(q).expect("desk-scale q");
    let mut chosen = Vec::new();
    let mut used = BTreeSet::new();
    if search(&candidates, 0, &mut used, &mut chosen, q_usize) {
        #[cfg(debug_assertions)]
        {
            let k = f.max_width() as u64;
            debug_assert!(q <= k * greedy.len() as u64 + 1);
        }
        Some(Sunflower::new(core_sorted, chosen))
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomposition::count_tree;
    use crate::oracle::{brute_count, brute_max_sunflower, random_kcnf, GeneratorConfig};
    use num_traits::Zero;

    fn lit(x: i32) -> Literal {
        Literal::from_dimacs(x)
    }

    fn formula(n: u32, clauses: &[&[i32]]) -> CnfFormula {
        CnfFormula::from_dimacs_clauses(n, clauses)
    }

    #[test]
    fn maximal_disjoint_set_examples() {
        let f = formula(4, &[&[1, 2], &[3, 4], &[1, 3]]);
        let s = maximal_disjoint_set(&f, None);
        assert_eq!(s.clause_indices(), &[0, 1]);
        assert!(s.is_maximal());
        s.validate(&f).unwrap();

        let empty = CnfFormula::verum(3);
        assert!(maximal_disjoint_set(&empty, None).is_empty());

        let mixed = formula(5, &[&[1], &[2, 3], &[4, 5], &[2, 4]]);
        let s2 = maximal_disjoint_set(&mixed, Some(2));
        assert_eq!(s2.clause_indices(), &[1, 2]);
        s2.validate(&mixed).unwrap();
    }

    #[test]
    fn enumerate_counts_and_order() {
        let f = formula(2, &[&[1, 2]]);
        let s = maximal_disjoint_set(&f, None);
        let all: Vec<_> = enumerate_satisfying_assignments(&f, &s).collect();
        assert_eq!(
            all,
            vec![
                vec![lit(1), lit(-2)],
                vec![lit(-1), lit(2)],
                vec![lit(1), lit(2)],
            ]
        );
        assert_eq!(satisfying_assignment_count(&f, &s), BigUint::from(3u8));

        let f3 = formula(3, &[&[1, 2, 3]]);
        let s3 = maximal_disjoint_set(&f3, None);
        assert_eq!(enumerate_satisfying_assignments(&f3, &s3).count(), 7);

        let f33 = formula(6, &[&[1, 2, 3], &[4, 5, 6]]);
        let s33 = maximal_disjoint_set(&f33, None);
        let all: Vec<_> = enumerate_satisfying_assignments(&f33, &s33).collect();
        assert_eq!(all.len(), 49);
        let distinct: BTreeSet<_> = all.iter().cloned().collect();
        assert_eq!(distinct.len(), 49);
        for a in &all {
            for c in f33.clauses() {
                assert!(c.literals().iter().any(|l| a.contains(l)));
            }
        }
    }

    #[test]
    fn enumerate_with_bottom_clause_is_empty() {
        let mut f = CnfFormula::verum(2);
        f.push_clause(Clause::bottom()).unwrap();
        f.push_clause(Clause::new(vec![lit(1), lit(2)])).unwrap();
        let s = maximal_disjoint_set(&f, None);
        assert_eq!(s.len(), 2);
        assert_eq!(enumerate_satisfying_assignments(&f, &s).count(), 0);
        assert!(satisfying_assignment_count(&f, &s).is_zero());
    }

    #[test]
    fn extract_3cnf_disjoint_formula_is_own_sunflower() {
        let f = formula(9, &[&[1, 2, 3], &[4, 5, 6], &[7, 8, 9]]);
        match extract_3cnf(&f, 3, 5).unwrap() {
            ExtractionOutcome::Sunflower { sunflower, stage } => {
                assert_eq!(stage, 0);
                assert_eq!(sunflower.weight(), 0);
                assert_eq!(sunflower.size(), 3);
                sunflower.validate(&f).unwrap();
            }
            other => panic!("expected sunflower, got {other:?}"),
        }
    }

    #[test]
    fn extract_3cnf_finds_common_literal_sunflower() {
        // (l v a_i v b_i) for i = 1..7 with l = x1; under any assignment
        // falsifying x1 the residuals are six disjoint 2-clauses
        let f = formula(
            15,
            &[
                &[1, 2, 3],
                &[1, 4, 5],
                &[1, 6, 7],
                &[1, 8, 9],
                &[1, 10, 11],
                &[1, 12, 13],
                &[1, 14, 15],
            ],
        );
        match extract_3cnf(&f, 2, 2).unwrap() {
            ExtractionOutcome::Sunflower { sunflower, stage } => {
                assert_eq!(stage, 1);
                assert_eq!(sunflower.core(), &[lit(1)]);
                assert_eq!(sunflower.size(), 6);
                sunflower.validate(&f).unwrap();
            }
            other => panic!("expected 1-sunflower, got {other:?}"),
        }
    }

    #[test]
    fn extract_3cnf_single_clause_tree() {
        let f = formula(3, &[&[1, 2, 3]]);
        match extract_3cnf(&f, 2, 2).unwrap() {
            ExtractionOutcome::Tree(tree) => {
                tree.validate(3).unwrap();
                assert_eq!(tree.num_leaves(), 7);
                let c = count_tree(&tree, 3);
                assert_eq!(c.value(), brute_count(&f).unwrap().value());
                assert_eq!(c.term_bound(), Some(7));
            }
            other => panic!("expected tree, got {other:?}"),
        }
    }

    #[test]
    fn extract_3cnf_trees_match_oracle_on_random_formulas() {
        for seed in 0..200u64 {
            let cfg = GeneratorConfig::new(9, 3 + (seed % 18) as usize, 3, seed);
            let f = random_kcnf(&cfg).unwrap().normalize();
            match extract_3cnf(&f, 50, 50).unwrap() {
                ExtractionOutcome::Tree(tree) => {
                    tree.validate(9).unwrap();
                    assert_eq!(
                        count_tree(&tree, 9).value(),
                        brute_count(&f).unwrap().value(),
                        "seed {seed}"
                    );
                }
                ExtractionOutcome::Sunflower { .. } => {
                    panic!("thresholds unreachable at n=9")
                }
            }
        }
    }

    #[test]
    fn extract_3cnf_rejects_wide_clauses() {
        let f = formula(4, &[&[1, 2, 3, 4]]);
        assert_eq!(
            extract_3cnf(&f, 2, 2),
            Err(ExtractError::WidthViolation { index: 0, width: 4, max: 3 })
        );
    }

    #[test]
    fn extract_kcnf_stage2_sunflower() {
        // (a v b v c_i v d_i): with Q_0, Q_1 out of reach, stage 2 pulls
        // the width-2 residuals back to a 2-sunflower with core {a, b}
        let mut clauses: Vec<Vec<i32>> = Vec::new();
        for i in 0..12 {
            clauses.push(vec![1, 2, 3 + 2 * i, 4 + 2 * i]);
        }
        let refs: Vec<&[i32]> = clauses.iter().map(|c| c.as_slice()).collect();
        let f = formula(26, &refs);
        match extract_kcnf(&f, &[10, 10, 2]).unwrap() {
            ExtractionOutcome::Sunflower { sunflower, stage } => {
                assert_eq!(stage, 2);
                assert_eq!(sunflower.core(), &[lit(1), lit(2)]);
                assert!(sunflower.size() >= 2);
                sunflower.validate(&f).unwrap();
            }
            other => panic!("expected 2-sunflower, got {other:?}"),
        }
    }

    #[test]
    fn extract_kcnf_k2_degenerates_to_disjoint_sets() {
        let f = formula(6, &[&[1, 2], &[3, 4], &[5, 6]]);
        match extract_kcnf(&f, &[2]).unwrap() {
            ExtractionOutcome::Sunflower { sunflower, stage } => {
                assert_eq!(stage, 0);
                assert_eq!(sunflower.size(), 3);
            }
            other => panic!("expected 0-sunflower, got {other:?}"),
        }
        match extract_kcnf(&f, &[5]).unwrap() {
            ExtractionOutcome::Tree(tree) => {
                tree.validate(6).unwrap();
                assert_eq!(tree.num_leaves(), 27);
                assert_eq!(count_tree(&tree, 6).value(), brute_count(&f).unwrap().value());
            }
            other => panic!("expected tree, got {other:?}"),
        }
    }

    #[test]
    fn extract_kcnf_verum_single_leaf() {
        let f = CnfFormula::verum(4);
        match extract_kcnf(&f, &[3, 3, 3]).unwrap() {
            ExtractionOutcome::Tree(tree) => {
                assert_eq!(tree.num_leaves(), 1);
                assert_eq!(count_tree(&tree, 4).value(), &BigUint::from(16u8));
            }
            other => panic!("expected tree, got {other:?}"),
        }
    }

    #[test]
    fn extract_kcnf_trees_match_oracle_on_random_4cnfs() {
        for seed in 0..150u64 {
            let cfg = GeneratorConfig::new(10, 3 + (seed % 22) as usize, 4, 1000 + seed);
            let f = random_kcnf(&cfg).unwrap().normalize();
            match extract_kcnf(&f, &[50, 50, 50]).unwrap() {
                ExtractionOutcome::Tree(tree) => {
                    tree.validate(10).unwrap();
                    assert_eq!(
                        count_tree(&tree, 10).value(),
                        brute_count(&f).unwrap().value(),
                        "seed {seed}"
                    );
                }
                ExtractionOutcome::Sunflower { .. } => panic!("thresholds unreachable at n=10"),
            }
        }
    }

    #[test]
    fn extract_kcnf_budget_guard() {
        let f = formula(12, &[&[1, 2], &[3, 4], &[5, 6], &[7, 8], &[9, 10], &[11, 12]]);
        // 3^6 = 729 leaves needed
        assert_eq!(
            extract_kcnf_with_cap(&f, &[100], 100),
            Err(ExtractError::BudgetExceeded { cap: 100 })
        );
        assert!(extract_kcnf_with_cap(&f, &[100], 729).is_ok());
    }

    #[test]
    fn find_sunflower_examples() {
        let f = formula(5, &[&[1, 2, 3], &[1, 2, 4], &[1, 2, 5]]);
        let s = find_sunflower_with_core(&f, &[lit(1), lit(2)], 3).unwrap();
        assert_eq!(s.size(), 3);
        s.validate(&f).unwrap();

        // with core {x1} alone the petals all share variable 2
        assert!(find_sunflower_with_core(&f, &[lit(1)], 3).is_none());
        assert!(find_sunflower_with_core(&f, &[lit(1)], 1).is_some());

        // empty core asks for a plain disjoint set
        let g = formula(4, &[&[1, 2], &[3, 4], &[1, 3]]);
        let d = find_sunflower_with_core(&g, &[], 2).unwrap();
        assert_eq!(d.weight(), 0);
        assert_eq!(d.size(), 2);
    }

    #[test]
    fn find_sunflower_needs_branch_and_bound() {
        // greedy takes clause 0 and blocks the other three, which are
        // pairwise disjoint; only the exact search finds them
        let f = formula(9, &[&[1, 2, 3], &[1, 4, 5], &[2, 6, 7], &[3, 8, 9]]);
        let found = find_sunflower_with_core(&f, &[], 3).unwrap();
        assert_eq!(found.size(), 3);
        found.validate(&f).unwrap();
        assert_eq!(found.petal_indices(), &[1, 2, 3]);
    }

    #[test]
    fn find_sunflower_agrees_with_brute_oracle() {
        let mut checked = 0u64;
        for seed in 0..60u64 {
            let cfg = GeneratorConfig::new(10, 25, 3, 5000 + seed);
            let f = random_kcnf(&cfg).unwrap().normalize();
            let mut cores: Vec<Vec<Literal>> = Vec::new();
            for v in 1..=10i32 {
                for s in [v, -v] {
                    cores.push(vec![lit(s)]);
                }
            }
            for v in 1..=9i32 {
                cores.push(vec![lit(v), lit(v + 1)]);
                cores.push(vec![lit(v), lit(-(v + 1))]);
            }
            for core in cores {
                // the reference oracle refuses overlong candidate lists
                let Ok(best) = brute_max_sunflower(&f, &core) else { continue };
                checked += 1;
                for q in 1..=4u64 {
                    let got = find_sunflower_with_core(&f, &core, q);
                    assert_eq!(
                        got.is_some(),
                        best as u64 >= q,
                        "seed {seed} core {core:?} q {q} best {best}"
                    );
                    if let Some(s) = got {
                        assert!(s.size() as u64 >= q);
                        s.validate(&f).unwrap();
                    }
                }
            }
        }
        assert!(checked > 1000);

        // small instances let the oracle handle the empty core too
        for seed in 0..40u64 {
            let cfg = GeneratorConfig::new(10, 12, 3, 7000 + seed);
            let f = random_kcnf(&cfg).unwrap().normalize();
            let best = brute_max_sunflower(&f, &[]).unwrap();
            for q in 1..=4u64 {
                let got = find_sunflower_with_core(&f, &[], q);
                assert_eq!(got.is_some(), best as u64 >= q, "seed {seed} q {q}");
            }
        }
    }

    #[test]
    fn sunflower_monotone_under_clause_addition() {
        let mut f = formula(6, &[&[1, 2, 3], &[1, 4, 5]]);
        let core = vec![lit(1)];
        let before = brute_max_sunflower(&f, &core).unwrap();
        assert_eq!(before, 2);
        assert!(find_sunflower_with_core(&f, &core, 2).is_some());
        f.push_clause(Clause::new(vec![lit(1), lit(6)])).unwrap();
        let after = brute_max_sunflower(&f, &core).unwrap();
        assert_eq!(after, 3);
        assert!(after >= before);
        assert!(find_sunflower_with_core(&f, &core, 3).is_some());
    }

    #[test]
    fn extraction_sunflowers_validate_on_random_formulas() {
        let mut sunflowers = 0;
        for seed in 0..300u64 {
            let cfg = GeneratorConfig::new(12, 10 + (seed % 31) as usize, 3, 9000 + seed);
            let f = random_kcnf(&cfg).unwrap().normalize();
            if let ExtractionOutcome::Sunflower { sunflower, .. } =
                extract_3cnf(&f, 2, 1).unwrap()
            {
                sunflower.validate(&f).unwrap();
                sunflowers += 1;
            }
        }
        assert!(sunflowers > 100, "thresholds this low should fire constantly");
    }
}
