//! Formula transformers with known exact effects on model counts, used as
//! semantics-preserving instance generators for cross-validating the
//! deciders: each transformer promises an arithmetic identity between the
//! input and output counts (and the threshold equivalence that identity
//! buys), and every promise is checkable by the brute-force oracle at desk
//! scale via [`ReductionRecord::verify_by_oracle`].

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::formula::{Clause, CnfFormula, Literal};
use crate::oracle::{brute_count, OracleError};

/// Conjoins a fresh-variable disjunction: `F' = (y_1 v ... v y_n) ^ F`
/// over `2n` variables, the `y` block sitting above the original one.
///
/// Exactly `#F * (2^n - 1)` assignments satisfy `F'`, so `F` exceeds half
/// strictly iff `F'` reaches half: `#F > 2^{n-1}  <=>  #F' >= 2^{2n-1}`.
/// The strict threshold question reduces to the non-strict one.
pub fn gt_to_maj(f: &CnfFormula) -> CnfFormula {
    let n = f.num_vars();
    assert!(n >= 1, "the fresh disjunction needs at least one variable");
    let mut clauses = vec![Clause::new((1..=n).map(|v| Literal::new(n + v, true)).collect())];
    clauses.extend(f.clauses().iter().cloned());
    CnfFormula::new(2 * n, clauses).expect("shifted variables stay in range")
}

/// Builds a CNF over `n` variables with exactly `t` satisfying
/// assignments: the assignments whose bit string, read with variable 1 as
/// the most significant bit, encodes a number below `t`.
///
/// For each zero bit of `t - 1` there is one clause forbidding the
/// assignment from exceeding it while matching all higher one bits, so the
/// width is unbounded (up to the number of one bits plus one). `t = 0`
/// yields the empty clause, `t = 2^n` the empty formula.
pub fn exact_count_formula(n: u32, t: u64) -> CnfFormula {
    assert!(n >= 1 && n <= 63, "counts are built with 64-bit arithmetic");
    assert!(t <= 1u64 << n, "a formula on {n} variables has at most 2^{n} models");
    if t == 0 {
        return CnfFormula::new(n, vec![Clause::bottom()]).expect("within range");
    }
    let u = t - 1;
    let mut clauses = Vec::new();
    for i in 0..n {
        // variable i+1 carries bit n-1-i of the encoded number
        let bit = n - 1 - i;
        if u & (1 << bit) != 0 {
            continue;
        }
        let mut lits = Vec::new();
        for j in 0..i {
            let high_bit = n - 1 - j;
            if u & (1 << high_bit) != 0 {
                lits.push(Literal::new(j + 1, false));
            }
        }
        lits.push(Literal::new(i + 1, false));
        clauses.push(Clause::new(lits));
    }
    CnfFormula::new(n, clauses).expect("within range")
}

/// Splits on a fresh selector: `F' = (!s v F) ^ (s v G)` over `n + 1`
/// variables with `s = x_{n+1}`, where `G` has exactly `2^{n-1} + 1`
/// models by construction.
///
/// `#F' = #F + 2^{n-1} + 1`, so `F` reaching half becomes `F'` strictly
/// exceeding it: `#F >= 2^{n-1}  <=>  #F' > 2^n`. The non-strict question
/// reduces to the strict one.
pub fn maj_to_gt(f: &CnfFormula) -> CnfFormula {
    let n = f.num_vars();
    assert!(n >= 1 && n <= 62, "counts are built with 64-bit arithmetic");
    let s = Literal::new(n + 1, true);
    let mut clauses = Vec::new();
    for c in f.clauses() {
        let mut lits = vec![s.negated()];
        lits.extend(c.literals().iter().copied());
        clauses.push(Clause::new(lits));
    }
    for c in exact_count_formula(n, (1u64 << (n - 1)) + 1).clauses() {
        let mut lits = vec![s];
        lits.extend(c.literals().iter().copied());
        clauses.push(Clause::new(lits));
    }
    CnfFormula::new(n + 1, clauses).expect("within range")
}

/// Widens every clause by a fresh selector and adds one wide clause over
/// `t` fresh variables: `F' = (s v C_1) ^ ... ^ (s v C_m) ^ (!s v y_1 v
/// ... v y_t)` over `n + 1 + t` variables with `s = x_{n+1}`.
///
/// `#F' = 2^t * #F + 2^{n+t} - 2^n`, so `F'` reaching half is `#F >=
/// 2^{n-t}`: one wide clause shifts the threshold by `t` dyadic steps.
pub fn add_one_long_clause(f: &CnfFormula, t: u32) -> CnfFormula {
    let n = f.num_vars();
    assert!(t >= 1 && t <= n, "the wide clause spans 1..=n fresh variables, got {t}");
    let s = Literal::new(n + 1, true);
    let mut clauses = Vec::new();
    for c in f.clauses() {
        let mut lits = vec![s];
        lits.extend(c.literals().iter().copied());
        clauses.push(Clause::new(lits));
    }
    let mut wide = vec![s.negated()];
    wide.extend((1..=t).map(|j| Literal::new(n + 1 + j, true)));
    clauses.push(Clause::new(wide));
    CnfFormula::new(n + 1 + t, clauses).expect("within range")
}

/// Widens every clause by one fresh variable: `F' = (C_1 v s) ^ ... ^
/// (C_m v s)` over `n + 1` variables with `s = x_{n+1}`.
///
/// `#F' = 2^n + #F`, so `F'` strictly exceeds half exactly when `F` is
/// satisfiable: the strict threshold question swallows satisfiability.
pub fn gt_hardness_gadget(f: &CnfFormula) -> CnfFormula {
    let n = f.num_vars();
    let s = Literal::new(n + 1, true);
    let clauses = f
        .clauses()
        .iter()
        .map(|c| {
            let mut lits = c.literals().to_vec();
            lits.push(s);
            Clause::new(lits)
        })
        .collect();
    CnfFormula::new(n + 1, clauses).expect("within range")
}

/// Conjoins a variable-disjoint copy: `F' = F(x_1..x_n) ^ F(x_{n+1}..
/// x_{2n})` over `2n` variables, squaring the count: `#F' = #F^2`.
pub fn square(f: &CnfFormula) -> CnfFormula {
    let n = f.num_vars();
    let mut clauses = f.clauses().to_vec();
    for c in f.clauses() {
        let lits = c
            .literals()
            .iter()
            .map(|l| Literal::new(l.var() + n, l.is_positive()))
            .collect();
        clauses.push(Clause::new(lits));
    }
    CnfFormula::new(2 * n, clauses).expect("shifted variables stay in range")
}

/// Which transformer produced a record, with its parameter if any.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReductionKind {
    GtToMaj,
    MajToGt,
    AddOneLongClause { t: u32 },
    GtHardnessGadget,
    Square,
}

impl ReductionKind {
    pub fn name(self) -> &'static str {
        match self {
            ReductionKind::GtToMaj => "gt-to-maj",
            ReductionKind::MajToGt => "maj-to-gt",
            ReductionKind::AddOneLongClause { .. } => "add-one-long-clause",
            ReductionKind::GtHardnessGadget => "gt-hardness-gadget",
            ReductionKind::Square => "square",
        }
    }
}

/// A transformer application bundled with the count identity it claims,
/// so the claim can be replayed against the oracle.
#[derive(Clone, Debug)]
pub struct ReductionRecord {
    pub kind: ReductionKind,
    pub input: CnfFormula,
    pub output: CnfFormula,
}

impl ReductionRecord {
    pub fn new(kind: ReductionKind, input: CnfFormula) -> Self {
        let output = match kind {
            ReductionKind::GtToMaj => gt_to_maj(&input),
            ReductionKind::MajToGt => maj_to_gt(&input),
            ReductionKind::AddOneLongClause { t } => add_one_long_clause(&input, t),
            ReductionKind::GtHardnessGadget => gt_hardness_gadget(&input),
            ReductionKind::Square => square(&input),
        };
        ReductionRecord { kind, input, output }
    }

    /// The exact count identity this reduction promises. The threshold
    /// equivalences the deciders care about all follow from it.
    pub fn claimed_relation(&self, in_count: &BigUint, out_count: &BigUint) -> bool {
        let n = self.input.num_vars() as usize;
        let pow = |e: usize| BigUint::one() << e;
        match self.kind {
            ReductionKind::GtToMaj => *out_count == in_count * (pow(n) - BigUint::one()),
            ReductionKind::MajToGt => {
                *out_count == in_count + pow(n - 1) + BigUint::one()
            }
            ReductionKind::AddOneLongClause { t } => {
                let t = t as usize;
                *out_count == (in_count << t) + pow(n + t) - pow(n)
            }
            ReductionKind::GtHardnessGadget => *out_count == in_count + pow(n),
            ReductionKind::Square => *out_count == in_count * in_count,
        }
    }

    /// Whether the threshold question the reduction targets agrees across
    /// the pair: strict majority of the input for the `gt` family,
    /// satisfiability for the hardness gadget.
    pub fn threshold_relation(&self, in_count: &BigUint, out_count: &BigUint) -> bool {
        let n = self.input.num_vars() as usize;
        let n_out = self.output.num_vars() as usize;
        let pow = |e: usize| BigUint::one() << e;
        match self.kind {
            ReductionKind::GtToMaj => {
                (*in_count > pow(n - 1)) == (*out_count >= pow(n_out - 1))
            }
            ReductionKind::MajToGt => {
                (*in_count >= pow(n - 1)) == (*out_count > pow(n_out - 1))
            }
            ReductionKind::AddOneLongClause { t } => {
                (*in_count >= pow(n - t as usize)) == (*out_count >= pow(n_out - 1))
            }
            ReductionKind::GtHardnessGadget => {
                (!in_count.is_zero()) == (*out_count > pow(n_out - 1))
            }
            ReductionKind::Square => true,
        }
    }

    /// Replays both counts through the brute-force oracle and checks the
    /// claimed identity and the threshold equivalence.
    pub fn verify_by_oracle(&self) -> Result<(), OracleError> {
        let in_count = brute_count(&self.input)?;
        let out_count = brute_count(&self.output)?;
        assert!(
            self.claimed_relation(in_count.value(), out_count.value()),
            "{}: count identity failed ({} -> {})",
            self.kind.name(),
            in_count.value(),
            out_count.value(),
        );
        assert!(
            self.threshold_relation(in_count.value(), out_count.value()),
            "{}: threshold equivalence failed ({} -> {})",
            self.kind.name(),
            in_count.value(),
            out_count.value(),
        );
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{random_kcnf, GeneratorConfig};

    fn formula(n: u32, clauses: &[&[i32]]) -> CnfFormula {
        CnfFormula::from_dimacs_clauses(n, clauses)
    }

    #[test]
    fn exact_count_formula_hits_every_target() {
        for n in 1..=6u32 {
            for t in 0..=(1u64 << n) {
                let f = exact_count_formula(n, t);
                let c = brute_count(&f).unwrap();
                assert_eq!(c.value(), &BigUint::from(t), "n {n} t {t}");
            }
        }
    }

    #[test]
    fn exact_count_formula_edges() {
        let bottom = exact_count_formula(3, 0);
        assert!(bottom.has_empty_clause());
        let top = exact_count_formula(3, 8);
        assert_eq!(top.num_clauses(), 0);
        // the documented example: five models on three variables
        let five = exact_count_formula(3, 5);
        assert_eq!(brute_count(&five).unwrap().value(), &BigUint::from(5u8));
    }

    #[test]
    fn spec_counts_on_tiny_formulas() {
        // one-variable tautology through the strict-to-nonstrict map:
        // the boundary case where both sides sit exactly on their bar
        let top1 = formula(1, &[]);
        let r = ReductionRecord::new(ReductionKind::GtToMaj, top1);
        r.verify_by_oracle().unwrap();
        let out = brute_count(&r.output).unwrap();
        assert_eq!(out.value(), &BigUint::from(2u8));

        // two-variable tautology through the nonstrict-to-strict map
        let top2 = formula(2, &[]);
        let r = ReductionRecord::new(ReductionKind::MajToGt, top2);
        r.verify_by_oracle().unwrap();
        assert_eq!(brute_count(&r.output).unwrap().value(), &BigUint::from(7u8));

        // contradiction: only the counting branch survives
        let bot2 = formula(2, &[&[]]);
        let r = ReductionRecord::new(ReductionKind::MajToGt, bot2);
        r.verify_by_oracle().unwrap();
        assert_eq!(brute_count(&r.output).unwrap().value(), &BigUint::from(3u8));

        // unsatisfiable input through the gt-to-maj map stays unsatisfiable
        let r = ReductionRecord::new(ReductionKind::GtToMaj, formula(2, &[&[]]));
        r.verify_by_oracle().unwrap();
        assert!(brute_count(&r.output).unwrap().value().is_zero());
    }

    #[test]
    fn long_clause_parameter_is_validated() {
        let f = formula(3, &[&[1, 2, 3]]);
        let out = add_one_long_clause(&f, 2);
        assert_eq!(out.num_vars(), 6);
        assert_eq!(out.max_width(), 4);
        let wide = out.clauses().last().unwrap();
        assert_eq!(wide.width(), 3);
        let result = std::panic::catch_unwind(|| add_one_long_clause(&f, 4));
        assert!(result.is_err(), "t beyond n must be rejected");
        let result = std::panic::catch_unwind(|| add_one_long_clause(&f, 0));
        assert!(result.is_err(), "t = 0 must be rejected");
    }

    #[test]
    fn reductions_hold_on_random_formulas() {
        for seed in 0..120u64 {
            let n = 3 + (seed % 5) as u32;
            let m = 3 + (seed % 9) as usize;
            let width = 2 + (seed % 2) as usize;
            let f = random_kcnf(&GeneratorConfig::new(n, m, width, 20_000 + seed)).unwrap();
            let t = 1 + (seed % n as u64) as u32;
            let kinds = [
                ReductionKind::GtToMaj,
                ReductionKind::MajToGt,
                ReductionKind::AddOneLongClause { t },
                ReductionKind::GtHardnessGadget,
                ReductionKind::Square,
            ];
            for kind in kinds {
                ReductionRecord::new(kind, f.clone())
                    .verify_by_oracle()
                    .unwrap_or_else(|e| panic!("{} seed {seed}: {e}", kind.name()));
            }
        }
    }

    #[test]
    fn square_multiplies_counts() {
        let f = formula(3, &[&[1, 2], &[-1, 3]]);
        let c = brute_count(&f).unwrap();
        let sq = square(&f);
        assert_eq!(sq.num_vars(), 6);
        let c2 = brute_count(&sq).unwrap();
        assert_eq!(c2.value(), &(c.value() * c.value()));
    }
}
