//! CNF data model, normalization, DIMACS I/O, and the exact count/threshold
//! arithmetic shared by every other module.
//!
//! Conventions used throughout the crate:
//! * variables are 1-based integer indices, `1..=num_vars`;
//! * clause order is canonical: the order clauses appear in the input drives
//!   every greedy tie-break downstream, so normalization preserves first
//!   occurrences and never reorders;
//! * all threshold comparisons are exact integer comparisons, floats never
//!   appear on a decision path.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigUint;
use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Exact rational arithmetic used off the hot paths (bounds, eta values).
pub type BigRational = Ratio<num_bigint::BigInt>;

/// A Boolean variable or its negation, stored as a DIMACS-style signed code.
///
/// The code is never zero; `3` is the positive literal of variable 3 and `-3`
/// its negation. Ordering is by variable index first, positive before
/// negative, which is the lexicographic literal order used for tie-breaking.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Literal(i32);

impl Literal {
    /// Builds a literal from a 1-based variable index and a polarity.
    pub fn new(var: u32, positive: bool) -> Self {
        assert!(var >= 1 && var <= i32::MAX as u32, "variable index {var} out of range");
        Literal(if positive { var as i32 } else { -(var as i32) })
    }

    /// Builds a literal from a nonzero DIMACS code.
    pub fn from_dimacs(code: i32) -> Self {
        assert!(code != 0, "literal code must be nonzero");
        Literal(code)
    }

    /// The 1-based variable index.
    pub fn var(self) -> u32 {
        self.0.unsigned_abs()
    }

    pub fn is_positive(self) -> bool {
        self.0 > 0
    }

    /// Negation; an involution.
    #[must_use]
    pub fn negated(self) -> Self {
        Literal(-self.0)
    }

    /// The DIMACS code.
    pub fn dimacs(self) -> i32 {
        self.0
    }

    /// True if the literal is satisfied when its variable is set to `value`.
    pub fn satisfied_by(self, value: bool) -> bool {
        self.is_positive() == value
    }
}

impl PartialOrd for Literal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Literal {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.var(), !self.is_positive()).cmp(&(other.var(), !other.is_positive()))
    }
}

impl fmt::Debug for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Checks that no literal in the slice occurs together with its negation.
pub fn literals_consistent(lits: &[Literal]) -> bool {
    let set: BTreeSet<Literal> = lits.iter().copied().collect();
    set.iter().all(|l| !set.contains(&l.negated()))
}

/// A disjunction of literals. The empty clause is falsum.
///
/// A raw clause (straight from the parser) may contain duplicate literals or
/// a complementary pair; [`CnfFormula::normalize`] cleans both up and sorts
/// the literals into canonical order.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Clause {
    literals: Vec<Literal>,
}

impl Clause {
    pub fn new(literals: Vec<Literal>) -> Self {
        Clause { literals }
    }

    /// Convenience constructor from DIMACS codes.
    pub fn from_dimacs(codes: &[i32]) -> Self {
        Clause { literals: codes.iter().map(|&c| Literal::from_dimacs(c)).collect() }
    }

    /// The empty clause.
    pub fn bottom() -> Self {
        Clause { literals: Vec::new() }
    }

    pub fn literals(&self) -> &[Literal] {
        &self.literals
    }

    /// Number of literals.
    pub fn width(&self) -> usize {
        self.literals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.literals.is_empty()
    }

    pub fn contains(&self, lit: Literal) -> bool {
        self.literals.contains(&lit)
    }

    pub fn mentions_var(&self, var: u32) -> bool {
        self.literals.iter().any(|l| l.var() == var)
    }

    /// Iterator over the distinct variables of the clause.
    pub fn vars(&self) -> impl Iterator<Item = u32> + '_ {
        self.literals.iter().map(|l| l.var())
    }

    /// True if the clause contains a complementary literal pair.
    pub fn is_tautology(&self) -> bool {
        self.literals.iter().any(|&l| self.literals.contains(&l.negated()))
    }

    /// True if the two clauses share at least one variable.
    pub fn shares_var_with(&self, other: &Clause) -> bool {
        self.literals.iter().any(|l| other.mentions_var(l.var()))
    }

    /// Sorted, deduplicated copy; the canonical form.
    #[must_use]
    pub fn canonical(&self) -> Clause {
        let mut lits = self.literals.clone();
        lits.sort();
        lits.dedup();
        Clause { literals: lits }
    }

    /// Clause with all literals over `core` removed (exact literal matches).
    #[must_use]
    pub fn without_literals(&self, core: &[Literal]) -> Clause {
        Clause {
            literals: self.literals.iter().copied().filter(|l| !core.contains(l)).collect(),
        }
    }

    /// True if every literal of `core` occurs in this clause.
    pub fn contains_all(&self, core: &[Literal]) -> bool {
        core.iter().all(|&l| self.contains(l))
    }
}

impl fmt::Debug for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, l) in self.literals.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{l}")?;
        }
        write!(f, ")")
    }
}

/// Role of a variable in the two-level problems. Plain formulas leave every
/// variable at the default.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum VarRole {
    Plain,
    Existential,
    Probabilistic,
}

/// A CNF formula: clauses over variables `1..=num_vars` with per-variable
/// roles. The empty formula is verum with `#SAT = 2^num_vars`.
///
/// Roles are stored sparsely (plain is the default and is never stored), so
/// a formula is small even when its declared variable range is enormous;
/// parsing a hostile header cannot allocate per-variable state.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct CnfFormula {
    num_vars: u32,
    clauses: Vec<Clause>,
    roles: BTreeMap<u32, VarRole>,
}

/// Errors from formula construction and DIMACS parsing.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum FormulaError {
    #[error("line {line}: {kind}")]
    Parse { line: usize, kind: ParseErrorKind },
    #[error("literal over variable {var} exceeds declared variable count {num_vars}")]
    VarOutOfRange { var: u32, num_vars: u32 },
    #[error("clause width {width} exceeds the allowed width {max}")]
    WidthViolation { width: usize, max: usize },
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseErrorKind {
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("clause data before the `p cnf` header")]
    ClauseBeforeHeader,
    #[error("duplicate `p cnf` header")]
    DuplicateHeader,
    #[error("unreadable literal token `{0}`")]
    BadToken(String),
    #[error("literal over variable {var} exceeds declared variable count {num_vars}")]
    VarOutOfRange { var: u32, num_vars: u32 },
    #[error("clause line is missing its 0 terminator")]
    MissingTerminator,
    #[error("malformed role directive: {0}")]
    BadRoleDirective(String),
}

impl CnfFormula {
    /// The empty formula (verum) on `num_vars` variables.
    pub fn verum(num_vars: u32) -> Self {
        CnfFormula { num_vars, clauses: Vec::new(), roles: BTreeMap::new() }
    }

    /// Builds a formula, checking that every literal stays in range.
    pub fn new(num_vars: u32, clauses: Vec<Clause>) -> Result<Self, FormulaError> {
        let mut f = CnfFormula::verum(num_vars);
        for c in clauses {
            f.push_clause(c)?;
        }
        Ok(f)
    }

    /// Test/construction convenience: clauses given as DIMACS code slices.
    pub fn from_dimacs_clauses(num_vars: u32, clauses: &[&[i32]]) -> Self {
        CnfFormula::new(num_vars, clauses.iter().map(|c| Clause::from_dimacs(c)).collect())
            .expect("literal out of range")
    }

    pub fn push_clause(&mut self, clause: Clause) -> Result<(), FormulaError> {
        for l in clause.literals() {
            if l.var() > self.num_vars {
                return Err(FormulaError::VarOutOfRange { var: l.var(), num_vars: self.num_vars });
            }
        }
        self.clauses.push(clause);
        Ok(())
    }

    pub fn num_vars(&self) -> u32 {
        self.num_vars
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn clause(&self, idx: usize) -> &Clause {
        &self.clauses[idx]
    }

    pub fn num_clauses(&self) -> usize {
        self.clauses.len()
    }

    /// True if the formula has no clauses at all (verum).
    pub fn is_verum(&self) -> bool {
        self.clauses.is_empty()
    }

    /// True if some clause is empty, forcing `#SAT = 0`.
    pub fn has_empty_clause(&self) -> bool {
        self.clauses.iter().any(Clause::is_empty)
    }

    /// Maximum clause width present; 0 for the empty formula.
    pub fn max_width(&self) -> usize {
        self.clauses.iter().map(Clause::width).max().unwrap_or(0)
    }

    /// Formula size: the sum of clause widths.
    pub fn size(&self) -> usize {
        self.clauses.iter().map(Clause::width).sum()
    }

    pub fn role(&self, var: u32) -> VarRole {
        assert!(var >= 1 && var <= self.num_vars, "variable {var} out of range");
        self.roles.get(&var).copied().unwrap_or(VarRole::Plain)
    }

    pub fn set_role(&mut self, var: u32, role: VarRole) {
        assert!(var >= 1 && var <= self.num_vars, "variable {var} out of range");
        if role == VarRole::Plain {
            self.roles.remove(&var);
        } else {
            self.roles.insert(var, role);
        }
    }

    /// Variables carrying the given role, ascending.
    pub fn vars_with_role(&self, role: VarRole) -> Vec<u32> {
        if role == VarRole::Plain {
            (1..=self.num_vars).filter(|v| !self.roles.contains_key(v)).collect()
        } else {
            self.roles.iter().filter(|(_, r)| **r == role).map(|(v, _)| *v).collect()
        }
    }

    /// Removes duplicate literals inside clauses (sorting each clause into
    /// canonical literal order), drops tautological clauses, and drops
    /// duplicate clauses keeping first occurrences. `#SAT` is unchanged and
    /// the surviving clause order still reflects the input order.
    #[must_use]
    pub fn normalize(&self) -> CnfFormula {
        let mut seen: BTreeSet<Vec<Literal>> = BTreeSet::new();
        let mut clauses = Vec::with_capacity(self.clauses.len());
        for clause in &self.clauses {
            if clause.is_tautology() {
                continue;
            }
            let canon = clause.canonical();
            if seen.insert(canon.literals().to_vec()) {
                clauses.push(canon);
            }
        }
        CnfFormula { num_vars: self.num_vars, clauses, roles: self.roles.clone() }
    }

    /// The formula conditioned on `lit` being true: clauses containing `lit`
    /// are dropped, occurrences of its negation are removed. The variable
    /// count is unchanged; callers account for fixed variables themselves.
    #[must_use]
    pub fn assign(&self, lit: Literal) -> CnfFormula {
        self.assign_all(&[lit])
    }

    /// Conditions on every literal of a consistent partial assignment.
    #[must_use]
    pub fn assign_all(&self, lits: &[Literal]) -> CnfFormula {
        debug_assert!(literals_consistent(lits));
        let mut clauses = Vec::with_capacity(self.clauses.len());
        'clauses: for clause in &self.clauses {
            let mut kept = Vec::with_capacity(clause.width());
            for &l in clause.literals() {
                if lits.contains(&l) {
                    continue 'clauses;
                }
                if !lits.contains(&l.negated()) {
                    kept.push(l);
                }
            }
            clauses.push(Clause::new(kept));
        }
        CnfFormula { num_vars: self.num_vars, clauses, roles: self.roles.clone() }
    }

    /// The subformula made of the given clause indices, same variable set.
    #[must_use]
    pub fn subformula(&self, clause_indices: &[usize]) -> CnfFormula {
        CnfFormula {
            num_vars: self.num_vars,
            clauses: clause_indices.iter().map(|&i| self.clauses[i].clone()).collect(),
            roles: self.roles.clone(),
        }
    }

    /// Serializes to DIMACS, including role directives for non-plain roles.
    pub fn to_dimacs(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("p cnf {} {}\n", self.num_vars, self.clauses.len()));
        for (role, tag) in
            [(VarRole::Existential, 'e'), (VarRole::Probabilistic, 'p')]
        {
            let vars = self.vars_with_role(role);
            if !vars.is_empty() {
                out.push_str(&format!(
                    "c role {} {} 0\n",
                    tag,
                    vars.iter().map(u32::to_string).collect::<Vec<_>>().join(" ")
                ));
            }
        }
        for clause in &self.clauses {
            for l in clause.literals() {
                out.push_str(&format!("{} ", l.dimacs()));
            }
            out.push_str("0\n");
        }
        out
    }
}

/// Parses DIMACS CNF text. Clause lines are zero-terminated; several clauses
/// may share a line. Comment directives `c role e v.. 0` and `c role p v.. 0`
/// assign existential/probabilistic roles so that plain solvers can still
/// read the file. Errors carry 1-based line numbers.
pub fn parse_dimacs(text: &[u8]) -> Result<CnfFormula, FormulaError> {
    let text = String::from_utf8_lossy(text);
    let mut formula: Option<CnfFormula> = None;
    for (lineno, raw_line) in text.lines().enumerate() {
        let line = lineno + 1;
        let err = |kind| FormulaError::Parse { line, kind };
        let trimmed = raw_line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix('c') {
            if !rest.is_empty() && !rest.starts_with(char::is_whitespace) {
                continue; // not a word boundary: an ordinary comment like "cXYZ"
            }
            let tokens: Vec<&str> = rest.split_whitespace().collect();
            if tokens.first() == Some(&"role") {
                let f = formula
                    .as_mut()
                    .ok_or_else(|| err(ParseErrorKind::ClauseBeforeHeader))?;
                let role = match tokens.get(1) {
                    Some(&"e") => VarRole::Existential,
                    Some(&"p") => VarRole::Probabilistic,
                    other => {
                        return Err(err(ParseErrorKind::BadRoleDirective(format!(
                            "expected `e` or `p`, got {:?}",
                            other.copied().unwrap_or("")
                        ))))
                    }
                };
                if tokens.last() != Some(&"0") {
                    return Err(err(ParseErrorKind::BadRoleDirective(
                        "missing 0 terminator".into(),
                    )));
                }
                for tok in &tokens[2..tokens.len() - 1] {
                    let var: u32 = tok.parse().map_err(|_| {
                        err(ParseErrorKind::BadRoleDirective(format!("bad variable `{tok}`")))
                    })?;
                    if var == 0 || var > f.num_vars() {
                        return Err(err(ParseErrorKind::VarOutOfRange {
                            var,
                            num_vars: f.num_vars(),
                        }));
                    }
                    f.set_role(var, role);
                }
            }
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix('p') {
            if formula.is_some() {
                return Err(err(ParseErrorKind::DuplicateHeader));
            }
            let tokens: Vec<&str> = rest.split_whitespace().collect();
            if tokens.len() != 3 || tokens[0] != "cnf" {
                return Err(err(ParseErrorKind::MalformedHeader(format!(
                    "expected `p cnf <vars> <clauses>`, got `{trimmed}`"
                ))));
            }
            let num_vars: u32 = tokens[1].parse().map_err(|_| {
                err(ParseErrorKind::MalformedHeader(format!("bad variable count `{}`", tokens[1])))
            })?;
            let _num_clauses: u64 = tokens[2].parse().map_err(|_| {
                err(ParseErrorKind::MalformedHeader(format!("bad clause count `{}`", tokens[2])))
            })?;
            formula = Some(CnfFormula::verum(num_vars));
            continue;
        }
        // Clause line.
        let f = formula.as_mut().ok_or_else(|| err(ParseErrorKind::ClauseBeforeHeader))?;
        let mut current: Vec<Literal> = Vec::new();
        let mut terminated = false;
        for tok in trimmed.split_whitespace() {
            let code: i32 = tok
                .parse()
                .map_err(|_| err(ParseErrorKind::BadToken(tok.to_string())))?;
            if code == 0 {
                f.push_clause(Clause::new(std::mem::take(&mut current))).map_err(|e| match e {
                    FormulaError::VarOutOfRange { var, num_vars } => {
                        err(ParseErrorKind::VarOutOfRange { var, num_vars })
                    }
                    other => other,
                })?;
                terminated = true;
            } else {
                let var = code.unsigned_abs();
                if var > f.num_vars() {
                    return Err(err(ParseErrorKind::VarOutOfRange {
                        var,
                        num_vars: f.num_vars(),
                    }));
                }
                current.push(Literal::from_dimacs(code));
                terminated = false;
            }
        }
        if !terminated {
            return Err(err(ParseErrorKind::MissingTerminator));
        }
    }
    formula.ok_or(FormulaError::Parse {
        line: text.lines().count() + 1,
        kind: ParseErrorKind::MalformedHeader("no `p cnf` header found".into()),
    })
}

/// An exact rational threshold in (0,1), kept in the canonical form
/// `a / (2^v * b)` with `b` odd and `gcd(a, 2^v * b) = 1`.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct Threshold {
    numer: BigUint,
    denom_pow2: u32,
    denom_odd: BigUint,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ThresholdError {
    #[error("threshold must lie strictly between 0 and 1, got {0}")]
    OutOfRange(String),
    #[error("cannot parse `{0}` as an exact p/q rational")]
    Unparseable(String),
}

impl Threshold {
    /// Canonicalizes `p/q` into `a/(2^v*b)`. Errors unless `0 < p/q < 1`.
    pub fn new(p: BigUint, q: BigUint) -> Result<Self, ThresholdError> {
        if p.is_zero() || q.is_zero() || p >= q {
            return Err(ThresholdError::OutOfRange(format!("{p}/{q}")));
        }
        let g = p.gcd(&q);
        let a = &p / &g;
        let q = &q / &g;
        let v = q.trailing_zeros().unwrap_or(0) as u32;
        let b = &q >> v;
        Ok(Threshold { numer: a, denom_pow2: v, denom_odd: b })
    }

    pub fn from_u64(p: u64, q: u64) -> Result<Self, ThresholdError> {
        Threshold::new(BigUint::from(p), BigUint::from(q))
    }

    /// Parses an exact `"p/q"` string. Decimal notation is rejected so
    /// nothing gets silently rounded.
    pub fn parse(s: &str) -> Result<Self, ThresholdError> {
        let (p, q) = s
            .split_once('/')
            .ok_or_else(|| ThresholdError::Unparseable(s.to_string()))?;
        let parse = |t: &str| -> Result<BigUint, ThresholdError> {
            let t = t.trim();
            if t.is_empty() || !t.bytes().all(|b| b.is_ascii_digit()) {
                return Err(ThresholdError::Unparseable(s.to_string()));
            }
            t.parse().map_err(|_| ThresholdError::Unparseable(s.to_string()))
        };
        Threshold::new(parse(p)?, parse(q)?)
    }

    /// Numerator `a`.
    pub fn numer(&self) -> &BigUint {
        &self.numer
    }

    /// The power of two `v` in the denominator.
    pub fn denom_pow2(&self) -> u32 {
        self.denom_pow2
    }

    /// The odd denominator part `b`.
    pub fn denom_odd(&self) -> &BigUint {
        &self.denom_odd
    }

    /// The full denominator `2^v * b`.
    pub fn denom(&self) -> BigUint {
        &self.denom_odd << self.denom_pow2
    }

    /// True if the denominator is a power of two.
    pub fn is_dyadic(&self) -> bool {
        self.denom_odd.is_one()
    }

    pub fn as_rational(&self) -> BigRational {
        BigRational::new(self.numer.clone().into(), self.denom().into())
    }

    /// `rho * 2^n` as an exact rational.
    pub fn scaled(&self, n: u32) -> BigRational {
        ratio_shl(self.as_rational(), n)
    }

    /// Compares `count` against `rho * 2^n` exactly.
    pub fn compare_scaled(&self, count: &BigUint, n: u32) -> Ordering {
        let lhs = count * self.denom();
        let rhs = self.numer.clone() << n;
        lhs.cmp(&rhs)
    }

    pub fn to_string_fraction(&self) -> String {
        format!("{}/{}", self.numer, self.denom())
    }
}

impl fmt::Display for Threshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_string_fraction())
    }
}

/// Multiplies a rational by `2^n`.
pub fn ratio_shl(r: BigRational, n: u32) -> BigRational {
    r * BigRational::from_integer(num_bigint::BigInt::from(1u8) << n)
}

/// An arbitrary-precision nonnegative count, optionally tagged with `m`, the
/// number of power-of-two summands known to suffice to express it.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct ExactCount {
    value: BigUint,
    term_bound: Option<u64>,
}

impl ExactCount {
    pub fn new(value: BigUint) -> Self {
        ExactCount { value, term_bound: None }
    }

    pub fn with_term_bound(value: BigUint, m: u64) -> Self {
        let c = ExactCount { value, term_bound: Some(m) };
        debug_assert!(c.term_bound_consistent());
        c
    }

    pub fn zero() -> Self {
        ExactCount::new(BigUint::zero())
    }

    pub fn value(&self) -> &BigUint {
        &self.value
    }

    pub fn term_bound(&self) -> Option<u64> {
        self.term_bound
    }

    pub fn is_zero(&self) -> bool {
        self.value.is_zero()
    }

    /// Validates the term bound: after carry normalization (which the binary
    /// representation is), the popcount must not exceed `m`.
    pub fn term_bound_consistent(&self) -> bool {
        match self.term_bound {
            None => true,
            Some(m) => self.value.count_ones() <= m,
        }
    }
}

impl From<u64> for ExactCount {
    fn from(v: u64) -> Self {
        ExactCount::new(BigUint::from(v))
    }
}

/// Exact comparison of `N` against `rho * 2^n`: compares `N * 2^v * b` with
/// `a * 2^n` in integers. No floating point anywhere.
pub fn compare_count_to_threshold(n_count: &ExactCount, rho: &Threshold, n: u32) -> Ordering {
    rho.compare_scaled(n_count.value(), n)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lit(code: i32) -> Literal {
        Literal::from_dimacs(code)
    }

    #[test]
    fn literal_basics() {
        let l = lit(-7);
        assert_eq!(l.var(), 7);
        assert!(!l.is_positive());
        assert_eq!(l.negated(), lit(7));
        assert_eq!(l.negated().negated(), l);
        // positive sorts before negative, variables ascending
        let mut v = vec![lit(-1), lit(2), lit(1), lit(-2)];
        v.sort();
        assert_eq!(v, vec![lit(1), lit(-1), lit(2), lit(-2)]);
    }

    #[test]
    fn parse_simple() {
        let f = parse_dimacs(b"p cnf 2 1\n1 2 0\n").unwrap();
        assert_eq!(f.num_vars(), 2);
        assert_eq!(f.num_clauses(), 1);
        assert_eq!(f.clause(0).literals(), &[lit(1), lit(2)]);
    }

    #[test]
    fn parse_empty_formula() {
        let f = parse_dimacs(b"p cnf 3 0\n").unwrap();
        assert!(f.is_verum());
        assert_eq!(f.num_vars(), 3);
    }

    #[test]
    fn parse_keeps_raw_tautology() {
        let f = parse_dimacs(b"p cnf 2 1\n1 -1 0\n").unwrap();
        assert_eq!(f.num_clauses(), 1);
        assert!(f.clause(0).is_tautology());
        assert_eq!(f.normalize().num_clauses(), 0);
    }

    #[test]
    fn parse_roles() {
        let f = parse_dimacs(b"p cnf 4 1\nc role e 1 2 0\nc role p 3 4 0\n1 3 0\n").unwrap();
        assert_eq!(f.role(1), VarRole::Existential);
        assert_eq!(f.role(2), VarRole::Existential);
        assert_eq!(f.role(3), VarRole::Probabilistic);
        assert_eq!(f.role(4), VarRole::Probabilistic);
    }

    #[test]
    fn huge_declared_ranges_stay_cheap() {
        // Roles are sparse: a header declaring billions of variables must
        // not allocate per-variable state.
        let f = parse_dimacs(b"p cnf 4000000000 1\nc role e 3999999999 0\n1 -2 0\n").unwrap();
        assert_eq!(f.num_vars(), 4_000_000_000);
        assert_eq!(f.role(3_999_999_999), VarRole::Existential);
        assert_eq!(f.role(2_000_000_000), VarRole::Plain);
        assert_eq!(f.vars_with_role(VarRole::Existential), vec![3_999_999_999]);
        let g = parse_dimacs(f.to_dimacs().as_bytes()).unwrap();
        assert_eq!(f, g);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let e = parse_dimacs(b"p cnf 1 1\n1 2 0\n").unwrap_err();
        assert_eq!(
            e,
            FormulaError::Parse {
                line: 2,
                kind: ParseErrorKind::VarOutOfRange { var: 2, num_vars: 1 }
            }
        );
        let e = parse_dimacs(b"p cnf 1 1\n1\n").unwrap_err();
        assert_eq!(e, FormulaError::Parse { line: 2, kind: ParseErrorKind::MissingTerminator });
        let e = parse_dimacs(b"p dnf 1 1\n").unwrap_err();
        assert!(matches!(
            e,
            FormulaError::Parse { line: 1, kind: ParseErrorKind::MalformedHeader(_) }
        ));
        let e = parse_dimacs(b"1 0\n").unwrap_err();
        assert_eq!(e, FormulaError::Parse { line: 1, kind: ParseErrorKind::ClauseBeforeHeader });
    }

    #[test]
    fn normalize_dedupes_and_drops() {
        let f = CnfFormula::from_dimacs_clauses(
            3,
            &[&[1, 1, 2], &[1, -1, 2], &[2, 1], &[3]],
        );
        let n = f.normalize();
        assert_eq!(n.num_clauses(), 2);
        assert_eq!(n.clause(0).literals(), &[lit(1), lit(2)]);
        assert_eq!(n.clause(1).literals(), &[lit(3)]);
        // idempotent
        assert_eq!(n.normalize(), n);
    }

    #[test]
    fn roundtrip_normalized() {
        let f = CnfFormula::from_dimacs_clauses(4, &[&[1, -2], &[3, 4], &[-1, -3, 4]]).normalize();
        let text = f.to_dimacs();
        let g = parse_dimacs(text.as_bytes()).unwrap();
        assert_eq!(f, g);
    }

    #[test]
    fn roundtrip_roles() {
        let mut f = CnfFormula::from_dimacs_clauses(3, &[&[1, 2]]).normalize();
        f.set_role(1, VarRole::Existential);
        f.set_role(3, VarRole::Probabilistic);
        let g = parse_dimacs(f.to_dimacs().as_bytes()).unwrap();
        assert_eq!(f, g);
    }

    #[test]
    fn assign_conditions_clauses() {
        let f = CnfFormula::from_dimacs_clauses(3, &[&[1, 2], &[-1, 3], &[2, 3]]);
        let g = f.assign(lit(1));
        assert_eq!(g.num_clauses(), 2);
        assert_eq!(g.clause(0).literals(), &[lit(3)]);
        assert_eq!(g.clause(1).literals(), &[lit(2), lit(3)]);
        let h = f.assign(lit(-1));
        assert_eq!(h.clause(0).literals(), &[lit(2)]);
        assert_eq!(h.clause(1).literals(), &[lit(2), lit(3)]);
    }

    #[test]
    fn threshold_canonical_forms() {
        let t = Threshold::from_u64(1, 2).unwrap();
        assert_eq!(t.numer(), &BigUint::from(1u8));
        assert_eq!(t.denom_pow2(), 1);
        assert_eq!(t.denom_odd(), &BigUint::from(1u8));

        let t = Threshold::from_u64(3, 7).unwrap();
        assert_eq!((t.numer(), t.denom_pow2()), (&BigUint::from(3u8), 0));
        assert_eq!(t.denom_odd(), &BigUint::from(7u8));

        let t = Threshold::from_u64(6, 28).unwrap();
        assert_eq!((t.numer(), t.denom_pow2()), (&BigUint::from(3u8), 1));
        assert_eq!(t.denom_odd(), &BigUint::from(7u8));

        assert!(Threshold::from_u64(0, 5).is_err());
        assert!(Threshold::from_u64(5, 5).is_err());
        assert!(Threshold::from_u64(7, 5).is_err());
    }

    #[test]
    fn threshold_parsing() {
        assert_eq!(Threshold::parse("3/7").unwrap(), Threshold::from_u64(3, 7).unwrap());
        assert_eq!(Threshold::parse(" 1/2 ").unwrap(), Threshold::from_u64(1, 2).unwrap());
        assert!(Threshold::parse("0.5").is_err());
        assert!(Threshold::parse("1/0").is_err());
        assert!(Threshold::parse("-1/2").is_err());
        assert!(Threshold::parse("a/b").is_err());
    }

    #[test]
    fn compare_count_examples() {
        let cmp = |n: u64, p: u64, q: u64, vars: u32| {
            compare_count_to_threshold(
                &ExactCount::from(n),
                &Threshold::from_u64(p, q).unwrap(),
                vars,
            )
        };
        assert_eq!(cmp(3, 1, 2, 2), Ordering::Greater);
        assert_eq!(cmp(4, 1, 2, 3), Ordering::Equal);
        assert_eq!(cmp(6, 3, 7, 4), Ordering::Less); // 42 < 48
    }

    #[test]
    fn term_bound_popcount() {
        let c = ExactCount::with_term_bound(BigUint::from(12u8), 2);
        assert!(c.term_bound_consistent());
        let c = ExactCount { value: BigUint::from(7u8), term_bound: Some(2) };
        assert!(!c.term_bound_consistent());
    }
}
