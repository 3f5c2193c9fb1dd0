//! Deciders for formulas that mix counting with inference: 2-CNFs whose
//! variables are split into an outer (existential) block and an inner
//! (probabilistic) block, where the question quantifies over the outer
//! block and counts over the inner one, plus a majority decider for 2-CNFs
//! carrying a logarithmic number of wide clauses.
//!
//! The common machinery: partition the clauses by which blocks they touch,
//! observe that an outer assignment interacts with the inner block only
//! through the set of inner literals it forces via the mixed clauses, and
//! enumerate those forced sets. A forced set of size `s` caps the inner
//! fraction at `2^-s`, so only sets within a dyadic budget can matter.
//! Counting conditioned on a forced set walks a decision tree once per
//! unit combination ([`crate::decomposition::count_with_units`]); the
//! wide-clause decider replaces forced sets with inclusion-exclusion over
//! the negated wide clauses.
//!
//! The satisfiability workhorse is [`two_sat_assignment`], an
//! implication-graph solver shared with the strict-threshold deciders.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::combinatorics::{
    enumerate_satisfying_assignments, maximal_disjoint_set, satisfying_assignment_count,
    DEFAULT_LEAF_CAP,
};
use crate::decomposition::{count_with_units, BranchArm, DecompositionTree};
use crate::formula::{
    compare_count_to_threshold, literals_consistent, Clause, CnfFormula, ExactCount, Literal,
    Threshold, VarRole,
};
use crate::solvers::{
    budget_err, decide_thr2sat_with_cap, ensure_width_mapped, largest_dyadic_at_most_inv,
    normalize_with_origin, product_factor, Answer, Certificate, NoWitness, NoWitnessKind,
    SolverError, Verdict,
};
use num_rational::BigRational;
use std::cmp::Ordering;

/// Index of a literal in the implication graph: variable `v` (1-based)
/// maps its positive literal to `2(v-1)` and its negative to `2(v-1)+1`.
fn node(lit: Literal) -> usize {
    let v = (lit.var() - 1) as usize;
    2 * v + usize::from(!lit.is_positive())
}

fn node_literal(idx: usize) -> Literal {
    Literal::new((idx / 2) as u32 + 1, idx % 2 == 0)
}

/// Satisfiability of a CNF with every clause of width <= 2, via strongly
/// connected components of the implication graph. Returns a satisfying
/// assignment (one literal per variable, including variables the formula
/// never mentions) or `None` when unsatisfiable.
///
/// Panics if a clause has width > 2; callers narrow first.
pub fn two_sat_assignment(f: &CnfFormula) -> Option<Vec<Literal>> {
    let n = f.num_vars() as usize;
    let mut edges: Vec<Vec<usize>> = vec![Vec::new(); 2 * n];
    for (i, c) in f.clauses().iter().enumerate() {
        match c.literals() {
            [] => return None,
            [a] => edges[node(a.negated())].push(node(*a)),
            [a, b] => {
                edges[node(a.negated())].push(node(*b));
                edges[node(b.negated())].push(node(*a));
            }
            _ => panic!("two_sat_assignment: clause {i} has width {}", c.width()),
        }
    }

    let comp = tarjan_components(&edges);
    let mut assignment = Vec::with_capacity(n);
    for v in 0..n {
        let (pos, neg) = (comp[2 * v], comp[2 * v + 1]);
        if pos == neg {
            return None;
        }
        // Tarjan numbers components in reverse topological order, so the
        // smaller id lies closer to the sinks and is safe to set true.
        assignment.push(node_literal(2 * v + usize::from(pos > neg)));
    }
    Some(assignment)
}

/// Convenience wrapper over [`two_sat_assignment`] when only the answer
/// matters.
pub fn two_sat_satisfiable(f: &CnfFormula) -> bool {
    two_sat_assignment(f).is_some()
}

/// Iterative Tarjan SCC; returns the component id of each node, ids
/// assigned in reverse topological order of the condensation.
fn tarjan_components(edges: &[Vec<usize>]) -> Vec<usize> {
    const UNSET: usize = usize::MAX;
    let n = edges.len();
    let mut index = vec![UNSET; n];
    let mut low = vec![0usize; n];
    let mut comp = vec![UNSET; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<usize> = Vec::new();
    let mut next_index = 0usize;
    let mut next_comp = 0usize;
    // Explicit DFS frames: (node, next child offset).
    let mut frames: Vec<(usize, usize)> = Vec::new();

    for start in 0..n {
        if index[start] != UNSET {
            continue;
        }
        frames.push((start, 0));
        index[start] = next_index;
        low[start] = next_index;
        next_index += 1;
        stack.push(start);
        on_stack[start] = true;

        while let Some(&mut (v, ref mut child)) = frames.last_mut() {
            if *child < edges[v].len() {
                let w = edges[v][*child];
                *child += 1;
                if index[w] == UNSET {
                    index[w] = next_index;
                    low[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    frames.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                frames.pop();
                if let Some(&mut (parent, _)) = frames.last_mut() {
                    low[parent] = low[parent].min(low[v]);
                }
                if low[v] == index[v] {
                    loop {
                        let w = stack.pop().expect("root still on stack");
                        on_stack[w] = false;
                        comp[w] = next_comp;
                        if w == v {
                            break;
                        }
                    }
                    next_comp += 1;
                }
            }
        }
    }
    comp
}

// ---------------------------------------------------------------------------
// clause partitioning
// ---------------------------------------------------------------------------

/// Clause indices of a role-tagged formula split by the variable blocks
/// the clauses touch. Every index lands in exactly one bucket.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ClausePartition {
    /// Clauses on existential (outer) variables only. Clauses with no
    /// literals also land here, where they poison outer satisfiability.
    pub existential: Vec<usize>,
    /// Clauses on probabilistic (inner) variables only.
    pub probabilistic: Vec<usize>,
    /// Clauses with at least one literal from each block; in a 2-CNF,
    /// exactly one outer and one inner literal.
    pub mixed: Vec<usize>,
}

/// Splits the clauses of a role-tagged formula by block, erroring on the
/// first clause variable that carries no role.
pub fn partition_clauses(f: &CnfFormula) -> Result<ClausePartition, SolverError> {
    let mut part = ClausePartition::default();
    for (i, c) in f.clauses().iter().enumerate() {
        let mut outer = false;
        let mut inner = false;
        for l in c.literals() {
            match f.role(l.var()) {
                VarRole::Existential => outer = true,
                VarRole::Probabilistic => inner = true,
                VarRole::Plain => return Err(SolverError::RoleMissing { var: l.var() }),
            }
        }
        match (outer, inner) {
            (_, false) => part.existential.push(i),
            (false, true) => part.probabilistic.push(i),
            (true, true) => part.mixed.push(i),
        }
    }
    Ok(part)
}

/// A consistent, duplicate-free set of inner literals: the candidate
/// forced sets the two-level deciders enumerate. An outer assignment `A`
/// forces inner literal `m` when some mixed clause pairs `m` with an outer
/// literal `A` falsifies; `s` forced literals cap the inner fraction at
/// `2^-s`, so only sets within the dyadic budget `floor(log2(1/threshold))`
/// are ever worth examining.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ImpliedLiteralSet {
    literals: Vec<Literal>,
}

impl ImpliedLiteralSet {
    /// Builds the set if no variable occurs in both signs; duplicates
    /// collapse and the literals are kept sorted.
    pub fn new(mut literals: Vec<Literal>) -> Option<Self> {
        if !literals_consistent(&literals) {
            return None;
        }
        literals.sort();
        literals.dedup();
        Some(ImpliedLiteralSet { literals })
    }

    pub fn literals(&self) -> &[Literal] {
        &self.literals
    }

    pub fn len(&self) -> usize {
        self.literals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.literals.is_empty()
    }
}

// ---------------------------------------------------------------------------
// shared context for the two-level deciders
// ---------------------------------------------------------------------------

/// Normalized formula, block sizes, partition, and the mixed-clause
/// pairing maps the two-level deciders work from.
struct TwoLevel {
    nf: CnfFormula,
    /// Input clause index behind each normalized clause.
    origin: Vec<usize>,
    n_outer: u32,
    n_inner: u32,
    part: ClausePartition,
    /// Inner literal -> sorted, deduplicated outer partners across the
    /// mixed clauses.
    partners: BTreeMap<Literal, Vec<Literal>>,
    /// The partner map's keys: every inner literal a mixed clause mentions.
    pool: Vec<Literal>,
}

fn two_level_context(f: &CnfFormula) -> Result<TwoLevel, SolverError> {
    // Unused variables need roles too: they decide which universe the
    // counts range over.
    for v in 1..=f.num_vars() {
        if f.role(v) == VarRole::Plain {
            return Err(SolverError::RoleMissing { var: v });
        }
    }
    let (mut nf, origin) = normalize_with_origin(f);
    for v in 1..=f.num_vars() {
        nf.set_role(v, f.role(v));
    }
    ensure_width_mapped(&nf, &origin, 2)?;
    let part = partition_clauses(&nf)?;
    let n_outer = nf.vars_with_role(VarRole::Existential).len() as u32;
    let n_inner = nf.vars_with_role(VarRole::Probabilistic).len() as u32;
    let mut partners: BTreeMap<Literal, Vec<Literal>> = BTreeMap::new();
    for &i in &part.mixed {
        let lits = nf.clause(i).literals();
        debug_assert_eq!(lits.len(), 2, "a mixed clause pairs one literal from each block");
        let (outer, inner) = if nf.role(lits[0].var()) == VarRole::Existential {
            (lits[0], lits[1])
        } else {
            (lits[1], lits[0])
        };
        partners.entry(inner).or_default().push(outer);
    }
    for v in partners.values_mut() {
        v.sort();
        v.dedup();
    }
    let pool: Vec<Literal> = partners.keys().copied().collect();
    Ok(TwoLevel { nf, origin, n_outer, n_inner, part, partners, pool })
}

/// Single-level decomposition tree for a width <= 2 formula: branch on a
/// maximal disjoint clause set, leaving 1-CNF residuals at every arm.
fn one_level_tree(f: &CnfFormula, cap: u64, what: &str) -> Result<DecompositionTree, SolverError> {
    let s = maximal_disjoint_set(f, None);
    let arms = satisfying_assignment_count(f, &s);
    if arms > BigUint::from(cap) {
        return Err(budget_err(what, arms.to_u64().unwrap_or(u64::MAX), cap));
    }
    if s.is_empty() {
        return Ok(DecompositionTree::leaf(f.clauses().to_vec(), 0));
    }
    let set_clauses: Vec<Clause> = s.clauses(f).into_iter().cloned().collect();
    let mut children = Vec::new();
    for a in enumerate_satisfying_assignments(f, &s) {
        let residual = f.assign_all(&a);
        debug_assert!(residual.max_width() <= 1, "maximal set leaves a 1-CNF");
        let fixed = a.len() as u32;
        children.push(BranchArm {
            assignment: a,
            subtree: DecompositionTree::leaf(residual.clauses().to_vec(), fixed),
        });
    }
    Ok(DecompositionTree::branch(set_clauses, children))
}

/// Advances `idx` to the next size-`idx.len()` combination of `0..n` in
/// lexicographic order; false once exhausted.
fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let k = idx.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if idx[i] != i + n - k {
            idx[i] += 1;
            for j in i + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

fn outer_satisfiable(nf: &CnfFormula, px: &[Clause], units: &[Literal]) -> bool {
    let mut clauses = px.to_vec();
    clauses.extend(units.iter().map(|&l| Clause::new(vec![l])));
    let g = CnfFormula::new(nf.num_vars(), clauses).expect("clauses already validated");
    two_sat_satisfiable(&g)
}

/// The outer units every candidate set shares: for each mixed clause whose
/// inner literal lies outside the set, the outer partner must hold, or the
/// assignment would force that extra inner literal.
fn blocking_units(ctx: &TwoLevel, lstar: &[Literal]) -> Vec<Literal> {
    let chosen: BTreeSet<Literal> = lstar.iter().copied().collect();
    let mut units: Vec<Literal> = ctx
        .partners
        .iter()
        .filter(|(inner, _)| !chosen.contains(inner))
        .flat_map(|(_, outers)| outers.iter().copied())
        .collect();
    units.sort();
    units.dedup();
    units
}

/// Whether some outer assignment satisfies the outer clauses and forces
/// exactly the candidate set: the blocking units hold, and for each forced
/// literal one mixed partner is falsified. The partner choices multiply
/// out; the product is enumerated under `cap`.
fn forced_exactly(
    ctx: &TwoLevel,
    px: &[Clause],
    lstar: &[Literal],
    cap: u64,
) -> Result<bool, SolverError> {
    let base = blocking_units(ctx, lstar);
    // The blocking units are shared by every partner choice; prune once.
    if !outer_satisfiable(&ctx.nf, px, &base) {
        return Ok(false);
    }
    if lstar.is_empty() {
        return Ok(true);
    }
    let options: Vec<&Vec<Literal>> = lstar.iter().map(|l| &ctx.partners[l]).collect();
    let mut product: u128 = 1;
    for o in &options {
        product = product.saturating_mul(o.len() as u128);
    }
    if product > cap as u128 {
        return Err(budget_err(
            "outer forcing choices",
            u64::try_from(product).unwrap_or(u64::MAX),
            cap,
        ));
    }
    let mut choice = vec![0usize; options.len()];
    loop {
        let mut units = base.clone();
        for (j, &oi) in choice.iter().enumerate() {
            units.push(options[j][oi].negated());
        }
        if outer_satisfiable(&ctx.nf, px, &units) {
            return Ok(true);
        }
        let mut j = 0;
        loop {
            if j == choice.len() {
                return Ok(false);
            }
            choice[j] += 1;
            if choice[j] < options[j].len() {
                break;
            }
            choice[j] = 0;
            j += 1;
        }
    }
}

// ---------------------------------------------------------------------------
// E-MAJ-2SAT
// ---------------------------------------------------------------------------

pub fn decide_emaj2sat(f: &CnfFormula, rho: &Threshold) -> Result<Verdict, SolverError> {
    decide_emaj2sat_with_cap(f, rho, DEFAULT_LEAF_CAP)
}

/// Does some assignment of the existential variables leave at least
/// `rho * 2^{n_inner}` satisfying assignments of the probabilistic ones?
///
/// Enumerates candidate forced sets within the dyadic budget; a candidate
/// wins if the inner count conditioned on it clears the threshold and some
/// outer assignment forces exactly it. A YES carries the inner count, the
/// forced set (as `conditioned_on`), and the inner decomposition tree, so
/// the count can be replayed. A NO carries the exact number of witnessing
/// outer assignments: zero.
pub fn decide_emaj2sat_with_cap(
    f: &CnfFormula,
    rho: &Threshold,
    cap: u64,
) -> Result<Verdict, SolverError> {
    let ctx = two_level_context(f)?;
    let budget = largest_dyadic_at_most_inv(rho) as usize;
    let mut params = BTreeMap::new();
    params.insert("rho".into(), rho.to_string_fraction());
    params.insert("outer_vars".into(), ctx.n_outer.to_string());
    params.insert("inner_vars".into(), ctx.n_inner.to_string());
    params.insert("forced_set_budget".into(), budget.to_string());

    let px: Vec<Clause> =
        ctx.part.existential.iter().map(|&i| ctx.nf.clause(i).clone()).collect();
    let py = ctx.nf.subformula(&ctx.part.probabilistic);
    let t_y = one_level_tree(&py, cap, "inner decomposition arms")?;
    let leaves = t_y.num_leaves();

    let mut candidates = 0u64;
    for size in 0..=budget.min(ctx.pool.len()) {
        let mut idx: Vec<usize> = (0..size).collect();
        loop {
            candidates += 1;
            if candidates > cap {
                return Err(budget_err("forced-set candidates", candidates, cap));
            }
            let lits: Vec<Literal> = idx.iter().map(|&i| ctx.pool[i]).collect();
            if let Some(set) = ImpliedLiteralSet::new(lits) {
                // The inner count conditioned on the forced set must clear
                // the bar before the outer side is worth checking.
                let ny = count_with_units(&t_y, ctx.n_inner, set.literals());
                let cleared = compare_count_to_threshold(
                    &ExactCount::new(ny.clone()),
                    rho,
                    ctx.n_inner,
                ) != Ordering::Less;
                if cleared && forced_exactly(&ctx, &px, set.literals(), cap)? {
                    params.insert("candidates_checked".into(), candidates.to_string());
                    let certificate = Certificate::ExactCount {
                        count: ExactCount::new(ny),
                        conditioned_on: set.literals().to_vec(),
                        tree: Some(Box::new(t_y)),
                    };
                    return Ok(Verdict::new(
                        Answer::Yes,
                        "emaj-forced-set",
                        certificate,
                        params,
                        leaves,
                    ));
                }
            }
            if !next_combination(&mut idx, ctx.pool.len()) {
                break;
            }
        }
    }
    // Every candidate within the budget failed, and a witnessing outer
    // assignment would have put its own forced set among them: there are
    // exactly zero witnesses.
    params.insert("candidates_checked".into(), candidates.to_string());
    params.insert("good_assignment_count".into(), "0".into());
    let certificate = Certificate::ExactCount {
        count: ExactCount::new(BigUint::zero()),
        conditioned_on: Vec::new(),
        tree: None,
    };
    Ok(Verdict::new(Answer::No, "emaj-exhausted", certificate, params, leaves))
}

// ---------------------------------------------------------------------------
// MAJ-MAJ-2SAT
// ---------------------------------------------------------------------------

pub fn decide_majmaj2sat(
    f: &CnfFormula,
    rho: &Threshold,
    sigma: &Threshold,
) -> Result<Verdict, SolverError> {
    decide_majmaj2sat_with_cap(f, rho, sigma, DEFAULT_LEAF_CAP)
}

/// Do at least `rho * 2^{n_outer}` outer assignments each leave at least
/// `sigma * 2^{n_inner}` satisfying inner assignments?
///
/// An oversized disjoint set on either pure side answers NO outright; the
/// emitted witness bound is the product of that set's clause factors (for
/// the inner side it certifies every outer assignment's inner fraction
/// below `sigma`, which forces the good count to zero). Otherwise the good
/// outer assignments are counted exactly: they partition by the set of
/// inner literals they force, each bucket within the dyadic budget is
/// counted by inclusion-exclusion over partner choices on the outer tree,
/// and buckets beyond the budget cannot clear `sigma`. Both answers carry
/// the exact good count.
pub fn decide_majmaj2sat_with_cap(
    f: &CnfFormula,
    rho: &Threshold,
    sigma: &Threshold,
    cap: u64,
) -> Result<Verdict, SolverError> {
    let ctx = two_level_context(f)?;
    let rho_rat = rho.as_rational();
    let sigma_rat = sigma.as_rational();
    let mut params = BTreeMap::new();
    params.insert("rho".into(), rho.to_string_fraction());
    params.insert("sigma".into(), sigma.to_string_fraction());
    params.insert("outer_vars".into(), ctx.n_outer.to_string());
    params.insert("inner_vars".into(), ctx.n_inner.to_string());

    let px = ctx.nf.subformula(&ctx.part.existential);
    let py = ctx.nf.subformula(&ctx.part.probabilistic);

    // Early exits: enough disjoint clauses on one pure side bound the good
    // fraction below its threshold before anything is counted.
    let s_x = maximal_disjoint_set(&px, None);
    params.insert("outer_disjoint_set".into(), s_x.len().to_string());
    if s_x.len() >= 1 && three_quarters_pow(s_x.len() - 1) < rho_rat {
        let bound = product_factor(&px, s_x.clause_indices());
        assert!(bound < rho_rat, "the full product tightens the trigger");
        let indices = map_sub_indices(&ctx, &ctx.part.existential, s_x.clause_indices());
        let witness = NoWitness { kind: NoWitnessKind::DisjointSet, clause_indices: indices, bound };
        return Ok(Verdict::new(
            Answer::No,
            "majmaj-outer-disjoint-set",
            Certificate::NoWitness(witness),
            params,
            0,
        ));
    }
    let s_y = maximal_disjoint_set(&py, None);
    params.insert("inner_disjoint_set".into(), s_y.len().to_string());
    if s_y.len() >= 1 && three_quarters_pow(s_y.len() - 1) < sigma_rat {
        let bound = product_factor(&py, s_y.clause_indices());
        assert!(bound < sigma_rat, "the full product tightens the trigger");
        let indices = map_sub_indices(&ctx, &ctx.part.probabilistic, s_y.clause_indices());
        let witness = NoWitness { kind: NoWitnessKind::DisjointSet, clause_indices: indices, bound };
        return Ok(Verdict::new(
            Answer::No,
            "majmaj-inner-disjoint-set",
            Certificate::NoWitness(witness),
            params,
            0,
        ));
    }

    let t_x = one_level_tree(&px, cap, "outer decomposition arms")?;
    let t_y = one_level_tree(&py, cap, "inner decomposition arms")?;
    let leaves = t_x.num_leaves().saturating_add(t_y.num_leaves());
    let budget = largest_dyadic_at_most_inv(sigma) as usize;
    params.insert("forced_set_budget".into(), budget.to_string());

    let mut good = BigUint::zero();
    let mut candidates = 0u64;
    for size in 0..=budget.min(ctx.pool.len()) {
        let mut idx: Vec<usize> = (0..size).collect();
        loop {
            candidates += 1;
            if candidates > cap {
                return Err(budget_err("forced-set candidates", candidates, cap));
            }
            let lits: Vec<Literal> = idx.iter().map(|&i| ctx.pool[i]).collect();
            if let Some(set) = ImpliedLiteralSet::new(lits) {
                let ny = count_with_units(&t_y, ctx.n_inner, set.literals());
                let cleared = compare_count_to_threshold(
                    &ExactCount::new(ny),
                    sigma,
                    ctx.n_inner,
                ) != Ordering::Less;
                if cleared {
                    good += outer_bucket_count(&ctx, &t_x, set.literals());
                }
            }
            if !next_combination(&mut idx, ctx.pool.len()) {
                break;
            }
        }
    }
    debug_assert!(
        good <= BigUint::one() << ctx.n_outer as usize,
        "bucket counts stay within the outer universe"
    );
    params.insert("candidates_checked".into(), candidates.to_string());
    params.insert("good_assignment_count".into(), good.to_string());
    let answer = if compare_count_to_threshold(&ExactCount::new(good.clone()), rho, ctx.n_outer)
        == Ordering::Less
    {
        Answer::No
    } else {
        Answer::Yes
    };
    let certificate = Certificate::ExactCount {
        count: ExactCount::new(good),
        conditioned_on: Vec::new(),
        tree: None,
    };
    Ok(Verdict::new(answer, "majmaj-exact-count", certificate, params, leaves))
}

fn three_quarters_pow(e: usize) -> BigRational {
    let tq = BigRational::new(BigInt::from(3), BigInt::from(4));
    let mut acc = BigRational::one();
    for _ in 0..e {
        acc *= &tq;
    }
    acc
}

/// Maps disjoint-set positions inside a partition bucket back to input
/// clause indices: bucket positions index the subformula, bucket entries
/// index the normalized formula, and `origin` lifts those to the input.
fn map_sub_indices(ctx: &TwoLevel, bucket: &[usize], positions: &[usize]) -> Vec<usize> {
    let mut out: Vec<usize> = positions.iter().map(|&p| ctx.origin[bucket[p]]).collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// Exact size of one bucket: the outer assignments satisfying the outer
/// clauses whose forced set is exactly the candidate. The blocking units
/// pin every other mixed clause's outer side; the per-literal requirement
/// "some partner falsified" expands by inclusion-exclusion into unit-only
/// counts on the outer tree.
fn outer_bucket_count(ctx: &TwoLevel, t_x: &DecompositionTree, lstar: &[Literal]) -> BigUint {
    let base = blocking_units(ctx, lstar);
    let k = lstar.len();
    debug_assert!(k < 64, "dyadic budgets keep candidate sets tiny");
    let mut acc = BigInt::zero();
    for mask in 0u64..(1u64 << k) {
        let mut units = base.clone();
        for (j, l) in lstar.iter().enumerate() {
            if mask & (1 << j) != 0 {
                units.extend(ctx.partners[l].iter().copied());
            }
        }
        let term = BigInt::from(count_with_units(t_x, ctx.n_outer, &units));
        if mask.count_ones() % 2 == 0 {
            acc += term;
        } else {
            acc -= term;
        }
    }
    debug_assert!(!acc.is_negative(), "inclusion-exclusion counts a set");
    acc.to_biguint().expect("nonnegative by construction")
}

// ---------------------------------------------------------------------------
// MAJ-2SAT with a few wide clauses
// ---------------------------------------------------------------------------

pub fn decide_maj2sat_long_clauses(
    f2: &CnfFormula,
    longs: &[Clause],
    rho: &Threshold,
) -> Result<Verdict, SolverError> {
    decide_maj2sat_long_clauses_with_cap(f2, longs, rho, DEFAULT_LEAF_CAP)
}

/// Does `f2` conjoined with the wide clauses have at least `rho * 2^n`
/// satisfying assignments? `f2` must be a 2-CNF; the wide clauses may have
/// any width but their number is capped at `log2(n + 2)`, since the count
/// expands by inclusion-exclusion over all subsets of them:
/// `#SAT(F & C) = #SAT(F) - #SAT(F & !C)` applied per clause, where each
/// `!C_i` is a set of units the decomposition tree absorbs at its leaves.
pub fn decide_maj2sat_long_clauses_with_cap(
    f2: &CnfFormula,
    longs: &[Clause],
    rho: &Threshold,
    cap: u64,
) -> Result<Verdict, SolverError> {
    let n = f2.num_vars();
    let limit = (u64::from(n) + 2).ilog2() as usize;
    if longs.len() > limit {
        return Err(SolverError::TooManyLongClauses(longs.len(), limit, n));
    }
    for c in longs {
        for l in c.literals() {
            assert!(l.var() <= n, "wide clause mentions variable {} beyond {n}", l.var());
        }
    }
    if longs.is_empty() {
        return decide_thr2sat_with_cap(f2, rho, cap);
    }

    let (nf2, origin) = normalize_with_origin(f2);
    ensure_width_mapped(&nf2, &origin, 2)?;
    let rho_rat = rho.as_rational();
    let mut params = BTreeMap::new();
    params.insert("rho".into(), rho.to_string_fraction());
    params.insert("long_clauses".into(), longs.len().to_string());

    // The oversized-disjoint-set exit carries over from the plain decider:
    // extra clauses only lower the count.
    let tq = three_quarters_pow(1);
    let mut pow = BigRational::one();
    let mut j = 0u64;
    while pow > rho_rat {
        pow *= &tq;
        j += 1;
        if j > 1_000_000 {
            return Err(budget_err("disjoint-set budget for this threshold", j, 1_000_000));
        }
    }
    let c = j + 1;
    let s = maximal_disjoint_set(&nf2, None);
    params.insert("c".into(), c.to_string());
    params.insert("disjoint_set".into(), s.len().to_string());
    if s.len() as u64 > c {
        let bound = product_factor(&nf2, s.clause_indices());
        assert!(bound < rho_rat, "an oversized disjoint set always certifies NO");
        let mut indices: Vec<usize> = s.clause_indices().iter().map(|&i| origin[i]).collect();
        indices.sort_unstable();
        indices.dedup();
        let witness = NoWitness { kind: NoWitnessKind::DisjointSet, clause_indices: indices, bound };
        return Ok(Verdict::new(
            Answer::No,
            "long-clauses-disjoint-set",
            Certificate::NoWitness(witness),
            params,
            0,
        ));
    }

    let tree = one_level_tree(&nf2, cap, "decomposition tree leaves")?;
    let leaves = tree.num_leaves();
    let mut acc = BigInt::zero();
    for mask in 0u64..(1u64 << longs.len()) {
        let mut units = Vec::new();
        for (i, clause) in longs.iter().enumerate() {
            if mask & (1 << i) != 0 {
                units.extend(clause.literals().iter().map(|l| l.negated()));
            }
        }
        let term = BigInt::from(count_with_units(&tree, n, &units));
        if mask.count_ones() % 2 == 0 {
            acc += term;
        } else {
            acc -= term;
        }
    }
    debug_assert!(!acc.is_negative(), "inclusion-exclusion counts a set");
    let count = acc.to_biguint().expect("nonnegative by construction");
    let answer = if compare_count_to_threshold(&ExactCount::new(count.clone()), rho, n)
        == Ordering::Less
    {
        Answer::No
    } else {
        Answer::Yes
    };
    let certificate = Certificate::ExactCount {
        count: ExactCount::new(count),
        conditioned_on: Vec::new(),
        tree: None,
    };
    Ok(Verdict::new(answer, "long-clauses-exact-count", certificate, params, leaves))
}
