//! Ground-truth brute-force evaluators and the seeded random instance
//! generator. Everything here is deliberately simple: full enumeration with
//! per-assignment early exit, guarded by hard size limits, so it can serve as
//! the reference the polynomial deciders are validated against.

use num_bigint::BigUint;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::formula::{Clause, CnfFormula, ExactCount, Literal, Threshold, VarRole};

/// Hard cap for [`brute_count`]: full enumeration over `2^n` assignments.
pub const BRUTE_COUNT_MAX_VARS: u32 = 26;
/// Hard cap for [`brute_two_level`]: `n + n'` at most this.
pub const BRUTE_TWO_LEVEL_MAX_VARS: u32 = 22;
/// Hard cap for [`brute_max_sunflower`]: candidate clause count.
pub const BRUTE_SUNFLOWER_MAX_CLAUSES: usize = 24;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("instance too large for brute force: {what} = {got}, limit {limit}")]
    TooLarge { what: &'static str, got: u64, limit: u64 },
    #[error("two-level evaluation requires every variable to be tagged existential or probabilistic")]
    RoleMissing,
    #[error("invalid generator config: {0}")]
    InvalidConfig(String),
}

/// Clause as a pair of masks for word-parallel evaluation.
#[derive(Clone, Copy)]
struct ClauseMasks {
    pos: u32,
    neg: u32,
}

fn clause_masks(f: &CnfFormula) -> Vec<ClauseMasks> {
    f.clauses()
        .iter()
        .map(|c| {
            let mut m = ClauseMasks { pos: 0, neg: 0 };
            for l in c.literals() {
                let bit = 1u32 << (l.var() - 1);
                if l.is_positive() {
                    m.pos |= bit;
                } else {
                    m.neg |= bit;
                }
            }
            m
        })
        .collect()
}

#[inline]
fn satisfies(masks: &[ClauseMasks], assignment: u32) -> bool {
    masks.iter().all(|m| (assignment & m.pos) | (!assignment & m.neg) != 0)
}

/// Exact `#SAT(F)` by full enumeration. Guarded to `n <= 26`.
pub fn brute_count(f: &CnfFormula) -> Result<ExactCount, OracleError> {
    let n = f.num_vars();
    if n > BRUTE_COUNT_MAX_VARS {
        return Err(OracleError::TooLarge {
            what: "num_vars",
            got: n as u64,
            limit: BRUTE_COUNT_MAX_VARS as u64,
        });
    }
    if f.has_empty_clause() {
        return Ok(ExactCount::zero());
    }
    let masks = clause_masks(f);
    let mut count = 0u64;
    for assignment in 0..(1u64 << n) {
        if satisfies(&masks, assignment as u32) {
            count += 1;
        }
    }
    Ok(ExactCount::new(BigUint::from(count)))
}

/// Ground truth for the two-level problems over a role-tagged formula.
///
/// With `x` the existential variables (`n` of them) and `y` the
/// probabilistic ones (`n'` of them), returns:
/// * `emaj`: whether some assignment `A` to `x` reaches an inner fraction
///   `#_y SAT(F|A) >= rho * 2^{n'}`,
/// * `majmaj`: whether the number of `A` with inner fraction `>= sigma *
///   2^{n'}` is at least `rho * 2^n`,
/// * `good_count`: that number of `A` (the majority-majority outer count).
pub fn brute_two_level(
    f: &CnfFormula,
    rho: &Threshold,
    sigma: &Threshold,
) -> Result<(bool, bool, BigUint), OracleError> {
    let total = f.num_vars();
    if total > BRUTE_TWO_LEVEL_MAX_VARS {
        return Err(OracleError::TooLarge {
            what: "num_vars",
            got: total as u64,
            limit: BRUTE_TWO_LEVEL_MAX_VARS as u64,
        });
    }
    let outer: Vec<u32> = f.vars_with_role(VarRole::Existential);
    let inner: Vec<u32> = f.vars_with_role(VarRole::Probabilistic);
    if outer.len() + inner.len() != total as usize {
        return Err(OracleError::RoleMissing);
    }
    let masks = clause_masks(f);
    let n = outer.len() as u32;
    let n_inner = inner.len() as u32;
    let mut emaj = false;
    let mut good = 0u64;
    for a in 0..(1u64 << n) {
        let mut base = 0u32;
        for (i, &v) in outer.iter().enumerate() {
            if a & (1 << i) != 0 {
                base |= 1 << (v - 1);
            }
        }
        let mut inner_count = 0u64;
        for b in 0..(1u64 << n_inner) {
            let mut word = base;
            for (i, &v) in inner.iter().enumerate() {
                if b & (1 << i) != 0 {
                    word |= 1 << (v - 1);
                }
            }
            if satisfies(&masks, word) {
                inner_count += 1;
            }
        }
        let inner_big = ExactCount::from(inner_count);
        if rho.compare_scaled(inner_big.value(), n_inner) != std::cmp::Ordering::Less {
            emaj = true;
        }
        if sigma.compare_scaled(inner_big.value(), n_inner) != std::cmp::Ordering::Less {
            good += 1;
        }
    }
    let good = BigUint::from(good);
    let majmaj = rho.compare_scaled(&good, n) != std::cmp::Ordering::Less;
    Ok((emaj, majmaj, good))
}

/// Exact maximum petal count over all clause subsets forming a sunflower
/// with the given consistent core: clauses must contain every core literal
/// and be pairwise variable-disjoint once the core literals are removed.
/// Exponential-time reference; guarded to 24 candidate clauses.
pub fn brute_max_sunflower(f: &CnfFormula, core: &[Literal]) -> Result<usize, OracleError> {
    let candidates: Vec<&Clause> =
        f.clauses().iter().filter(|c| c.contains_all(core)).collect();
    if candidates.len() > BRUTE_SUNFLOWER_MAX_CLAUSES {
        return Err(OracleError::TooLarge {
            what: "candidate clauses",
            got: candidates.len() as u64,
            limit: BRUTE_SUNFLOWER_MAX_CLAUSES as u64,
        });
    }
    let petals: Vec<Vec<u32>> = candidates
        .iter()
        .map(|c| c.without_literals(core).vars().collect::<Vec<u32>>())
        .collect();
    let mut best = 0usize;
    // Subset enumeration; petal variable sets must be pairwise disjoint.
    'subsets: for mask in 0u32..(1u32 << petals.len()) {
        let size = mask.count_ones() as usize;
        if size <= best {
            continue;
        }
        let mut used: Vec<u32> = Vec::new();
        for (i, petal) in petals.iter().enumerate() {
            if mask & (1 << i) != 0 {
                for &v in petal {
                    if used.contains(&v) {
                        continue 'subsets;
                    }
                }
                used.extend_from_slice(petal);
            }
        }
        best = size;
    }
    Ok(best)
}

/// Configuration for the seeded random k-CNF generator.
#[derive(Clone, Debug)]
pub struct GeneratorConfig {
    pub num_vars: u32,
    pub num_clauses: usize,
    pub width: usize,
    pub seed: u64,
    /// Optional `(outer, inner)` split: the first `outer` variables become
    /// existential, the remaining `inner` probabilistic. Must sum to
    /// `num_vars`.
    pub role_split: Option<(u32, u32)>,
    /// When set, clause widths are drawn uniformly from `1..=width` instead
    /// of being exactly `width`.
    pub width_mix: bool,
}

impl GeneratorConfig {
    pub fn new(num_vars: u32, num_clauses: usize, width: usize, seed: u64) -> Self {
        GeneratorConfig { num_vars, num_clauses, width, seed, role_split: None, width_mix: false }
    }
}

/// Deterministic random k-CNF: every clause has exactly `width` distinct
/// variables (or a uniform width in `1..=width` with `width_mix`), signs
/// uniform. Identical configs produce byte-identical formulas on every
/// platform.
pub fn random_kcnf(cfg: &GeneratorConfig) -> Result<CnfFormula, OracleError> {
    if cfg.width == 0 {
        return Err(OracleError::InvalidConfig("clause width must be at least 1".into()));
    }
    if (cfg.width as u64) > cfg.num_vars as u64 {
        return Err(OracleError::InvalidConfig(format!(
            "clause width {} exceeds variable count {}",
            cfg.width, cfg.num_vars
        )));
    }
    if let Some((outer, inner)) = cfg.role_split {
        if outer + inner != cfg.num_vars {
            return Err(OracleError::InvalidConfig(format!(
                "role split {outer}+{inner} does not equal num_vars {}",
                cfg.num_vars
            )));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut formula = CnfFormula::verum(cfg.num_vars);
    for _ in 0..cfg.num_clauses {
        let w = if cfg.width_mix { rng.gen_range(1..=cfg.width) } else { cfg.width };
        let mut vars: Vec<u32> = Vec::with_capacity(w);
        while vars.len() < w {
            let v = rng.gen_range(1..=cfg.num_vars);
            if !vars.contains(&v) {
                vars.push(v);
            }
        }
        let lits: Vec<Literal> =
            vars.into_iter().map(|v| Literal::new(v, rng.gen::<bool>())).collect();
        formula.push_clause(Clause::new(lits)).expect("generated literal out of range");
    }
    if let Some((outer, _inner)) = cfg.role_split {
        for v in 1..=cfg.num_vars {
            formula.set_role(
                v,
                if v <= outer { VarRole::Existential } else { VarRole::Probabilistic },
            );
        }
    }
    Ok(formula)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse_dimacs;

    #[test]
    fn count_basics() {
        let f = CnfFormula::verum(3);
        assert_eq!(brute_count(&f).unwrap(), ExactCount::from(8));
        let f = CnfFormula::from_dimacs_clauses(3, &[&[1, 2, 3]]);
        assert_eq!(brute_count(&f).unwrap(), ExactCount::from(7));
        let f = CnfFormula::from_dimacs_clauses(3, &[&[1, 2], &[-1, 3]]);
        assert_eq!(brute_count(&f).unwrap(), ExactCount::from(4));
        let f = CnfFormula::from_dimacs_clauses(2, &[&[]]);
        assert_eq!(brute_count(&f).unwrap(), ExactCount::zero());
    }

    #[test]
    fn count_guard() {
        let f = CnfFormula::verum(27);
        assert!(matches!(brute_count(&f), Err(OracleError::TooLarge { .. })));
    }

    #[test]
    fn count_invariant_under_normalize() {
        let f = CnfFormula::from_dimacs_clauses(4, &[&[1, 1, 2], &[2, 1], &[3, -3, 4], &[4]]);
        assert_eq!(brute_count(&f).unwrap(), brute_count(&f.normalize()).unwrap());
    }

    #[test]
    fn two_level_basics() {
        let rho = Threshold::from_u64(1, 2).unwrap();
        let sigma = Threshold::from_u64(1, 2).unwrap();

        let f = parse_dimacs(b"p cnf 2 0\nc role e 1 0\nc role p 2 0\n").unwrap();
        let (emaj, majmaj, good) = brute_two_level(&f, &rho, &sigma).unwrap();
        assert!(emaj && majmaj);
        assert_eq!(good, BigUint::from(2u8));

        // inner part bottom
        let f = parse_dimacs(b"p cnf 2 2\nc role e 1 0\nc role p 2 0\n2 0\n-2 0\n").unwrap();
        let (emaj, majmaj, good) = brute_two_level(&f, &rho, &sigma).unwrap();
        assert!(!emaj && !majmaj);
        assert_eq!(good, BigUint::from(0u8));

        // (x1 v y1): A = true gives inner fraction 1, A = false gives 1/2
        let f = parse_dimacs(b"p cnf 2 1\nc role e 1 0\nc role p 2 0\n1 2 0\n").unwrap();
        let (emaj, majmaj, good) = brute_two_level(&f, &rho, &sigma).unwrap();
        assert!(emaj && majmaj);
        assert_eq!(good, BigUint::from(2u8));
    }

    #[test]
    fn two_level_requires_roles() {
        let rho = Threshold::from_u64(1, 2).unwrap();
        let f = parse_dimacs(b"p cnf 2 1\n1 2 0\n").unwrap();
        assert_eq!(brute_two_level(&f, &rho, &rho), Err(OracleError::RoleMissing));
    }

    #[test]
    fn sunflower_oracle_basics() {
        let f = CnfFormula::from_dimacs_clauses(5, &[&[1, 2, 3], &[1, 2, 4]]);
        let core = [Literal::from_dimacs(1), Literal::from_dimacs(2)];
        assert_eq!(brute_max_sunflower(&f, &core).unwrap(), 2);
        let core = [Literal::from_dimacs(1), Literal::from_dimacs(3)];
        assert_eq!(brute_max_sunflower(&f, &core).unwrap(), 1);
        // petals {2,3} and {2,4} share variable 2
        let core = [Literal::from_dimacs(1)];
        assert_eq!(brute_max_sunflower(&f, &core).unwrap(), 1);
    }

    #[test]
    fn generator_is_deterministic() {
        let cfg = GeneratorConfig::new(10, 40, 3, 1);
        let a = random_kcnf(&cfg).unwrap();
        let b = random_kcnf(&cfg).unwrap();
        assert_eq!(a.to_dimacs(), b.to_dimacs());
        for clause in a.clauses() {
            assert_eq!(clause.width(), 3);
            let mut vars: Vec<u32> = clause.vars().collect();
            vars.dedup();
            assert_eq!(vars.len(), 3);
        }
    }

    #[test]
    fn generator_empty() {
        let cfg = GeneratorConfig::new(10, 0, 3, 7);
        assert!(random_kcnf(&cfg).unwrap().is_verum());
    }

    #[test]
    fn generator_rejects_bad_config() {
        assert!(random_kcnf(&GeneratorConfig::new(2, 1, 3, 0)).is_err());
        let mut cfg = GeneratorConfig::new(4, 1, 2, 0);
        cfg.role_split = Some((3, 2));
        assert!(random_kcnf(&cfg).is_err());
    }
}
