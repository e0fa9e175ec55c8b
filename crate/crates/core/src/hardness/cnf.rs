//! 3-CNF formulas: DIMACS input/output, random generation and brute-force
//! satisfiability.

use std::fmt::Write as _;

use rand::seq::index::sample;
use rand::Rng;

use crate::error::{Error, Result};

/// Largest variable count accepted by [`brute_sat`].
pub const MAX_BRUTE_VARS: usize = 20;

/// Conjunction of clauses with at most three literals each. Literals are
/// nonzero signed 1-based variable indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cnf3 {
    num_vars: usize,
    clauses: Vec<Vec<i32>>,
}

impl Cnf3 {
    pub fn new(num_vars: usize, clauses: Vec<Vec<i32>>) -> Result<Self> {
        for (c, clause) in clauses.iter().enumerate() {
            if clause.is_empty() || clause.len() > 3 {
                return Err(Error::invalid(format!(
                    "clause {c} has {} literals, expected 1 to 3",
                    clause.len()
                )));
            }
            for &lit in clause {
                if lit == 0 || lit.unsigned_abs() as usize > num_vars {
                    return Err(Error::invalid(format!(
                        "literal {lit} in clause {c} is outside 1..={num_vars}"
                    )));
                }
            }
        }
        Ok(Self { num_vars, clauses })
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn clauses(&self) -> &[Vec<i32>] {
        &self.clauses
    }

    pub fn num_clauses(&self) -> usize {
        self.clauses.len()
    }

    /// `assignment[k]` is the value of variable `k + 1`.
    pub fn satisfied_by(&self, assignment: &[bool]) -> bool {
        self.clauses.iter().all(|clause| {
            clause
                .iter()
                .any(|&lit| assignment[lit.unsigned_abs() as usize - 1] == (lit > 0))
        })
    }

    pub fn to_dimacs(&self) -> String {
        let mut out = format!("p cnf {} {}\n", self.num_vars, self.clauses.len());
        for clause in &self.clauses {
            for lit in clause {
                let _ = write!(out, "{lit} ");
            }
            out.push_str("0\n");
        }
        out
    }
}

/// Parses DIMACS CNF. Comment lines start with `c`; a `%` line ends the
/// input. Clauses longer than three literals are rejected.
pub fn parse_dimacs(text: &str) -> Result<Cnf3> {
    let mut header: Option<(usize, usize)> = None;
    let mut clauses = Vec::new();
    let mut current: Vec<i32> = Vec::new();
    let mut last_line = 0;
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        last_line = lineno;
        let line = line.trim();
        if line.is_empty() || line.starts_with('c') {
            continue;
        }
        if line.starts_with('%') {
            break;
        }
        if line.starts_with('p') {
            let parts: Vec<&str> = line.split_whitespace().collect();
            if header.is_some() {
                return Err(parse_err(lineno, "duplicate header"));
            }
            if parts.len() != 4 || parts[1] != "cnf" {
                return Err(parse_err(lineno, "expected 'p cnf <vars> <clauses>'"));
            }
            let m = parts[2].parse().map_err(|_| parse_err(lineno, "bad variable count"))?;
            let n = parts[3].parse().map_err(|_| parse_err(lineno, "bad clause count"))?;
            header = Some((m, n));
            continue;
        }
        let Some((m, _)) = header else {
            return Err(parse_err(lineno, "clause before header"));
        };
        for tok in line.split_whitespace() {
            let lit: i32 = tok
                .parse()
                .map_err(|_| parse_err(lineno, &format!("bad literal '{tok}'")))?;
            if lit == 0 {
                if current.is_empty() {
                    return Err(parse_err(lineno, "empty clause"));
                }
                clauses.push(std::mem::take(&mut current));
                continue;
            }
            if lit.unsigned_abs() as usize > m {
                return Err(parse_err(lineno, &format!("literal {lit} exceeds {m} variables")));
            }
            if current.len() == 3 {
                return Err(parse_err(lineno, "clause has more than 3 literals"));
            }
            current.push(lit);
        }
    }
    let Some((m, n)) = header else {
        return Err(parse_err(last_line, "missing 'p cnf' header"));
    };
    if !current.is_empty() {
        return Err(parse_err(last_line, "last clause is not terminated by 0"));
    }
    if clauses.len() != n {
        return Err(parse_err(
            last_line,
            &format!("header declares {n} clauses, found {}", clauses.len()),
        ));
    }
    Cnf3::new(m, clauses)
}

fn parse_err(line: usize, message: &str) -> Error {
    Error::Parse {
        line,
        message: message.to_string(),
    }
}

/// Random formula with `n` clauses over `m` variables. Clause lengths are
/// uniform in `1..=3` (capped by `m`), variables within a clause distinct.
pub fn random_cnf3<R: Rng>(rng: &mut R, m: usize, n: usize) -> Cnf3 {
    assert!(m >= 1, "need at least one variable");
    let clauses = (0..n)
        .map(|_| {
            let len = rng.random_range(1..=3usize.min(m));
            sample(rng, m, len)
                .into_iter()
                .map(|v| {
                    let lit = v as i32 + 1;
                    if rng.random_bool(0.5) {
                        lit
                    } else {
                        -lit
                    }
                })
                .collect()
        })
        .collect();
    Cnf3::new(m, clauses).expect("generated clauses are valid")
}

/// First satisfying assignment in truth-table order.
pub fn satisfying_assignment(cnf: &Cnf3) -> Result<Option<Vec<bool>>> {
    let m = cnf.num_vars();
    if m > MAX_BRUTE_VARS {
        return Err(Error::GuardExceeded {
            what: "variables for brute-force SAT",
            value: m as u128,
            limit: MAX_BRUTE_VARS as u128,
        });
    }
    let mut assignment = vec![false; m];
    for mask in 0u32..(1u32 << m) {
        for (k, a) in assignment.iter_mut().enumerate() {
            *a = mask >> k & 1 == 1;
        }
        if cnf.satisfied_by(&assignment) {
            return Ok(Some(assignment));
        }
    }
    Ok(None)
}

/// Exhaustive truth-table satisfiability.
pub fn brute_sat(cnf: &Cnf3) -> Result<bool> {
    Ok(satisfying_assignment(cnf)?.is_some())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Small DPLL with unit propagation, independent of the truth table.
    fn dpll(clauses: &[Vec<i32>], assigned: &mut Vec<i32>) -> bool {
        let value = |lit: i32, assigned: &Vec<i32>| {
            if assigned.contains(&lit) {
                Some(true)
            } else if assigned.contains(&-lit) {
                Some(false)
            } else {
                None
            }
        };
        loop {
            let mut unit = None;
            for clause in clauses {
                if clause.iter().any(|&l| value(l, assigned) == Some(true)) {
                    continue;
                }
                let open: Vec<i32> = clause
                    .iter()
                    .copied()
                    .filter(|&l| value(l, assigned).is_none())
                    .collect();
                match open.len() {
                    0 => return false,
                    1 => {
                        unit = Some(open[0]);
                        break;
                    }
                    _ => {}
                }
            }
            match unit {
                Some(l) => assigned.push(l),
                None => break,
            }
        }
        let branch = clauses
            .iter()
            .flatten()
            .copied()
            .find(|&l| value(l, assigned).is_none());
        let Some(lit) = branch else {
            return true;
        };
        for choice in [lit, -lit] {
            let mut next = assigned.clone();
            next.push(choice);
            if dpll(clauses, &mut next) {
                return true;
            }
        }
        false
    }

    #[test]
    fn parses_and_round_trips() {
        let text = "c example\np cnf 3 2\n1 -2 3 0\n-1\n 2 0\n";
        let cnf = parse_dimacs(text).unwrap();
        assert_eq!(cnf.clauses(), &[vec![1, -2, 3], vec![-1, 2]]);
        assert_eq!(parse_dimacs(&cnf.to_dimacs()).unwrap(), cnf);
    }

    #[test]
    fn rejects_long_clauses_and_bad_headers() {
        assert!(matches!(
            parse_dimacs("p cnf 4 1\n1 2 3 4 0\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(parse_dimacs("1 2 0\n").is_err());
        assert!(parse_dimacs("p cnf 2 2\n1 2 0\n").is_err());
        assert!(parse_dimacs("p cnf 2 1\n1 3 0\n").is_err());
        assert!(parse_dimacs("p cnf 2 1\n1 2\n").is_err());
    }

    #[test]
    fn percent_terminates_input() {
        let cnf = parse_dimacs("p cnf 2 1\n1 -2 0\n%\n0\n").unwrap();
        assert_eq!(cnf.num_clauses(), 1);
    }

    #[test]
    fn small_formulas() {
        let sat = Cnf3::new(3, vec![vec![1, -2, 3]]).unwrap();
        assert!(brute_sat(&sat).unwrap());
        let unsat = Cnf3::new(1, vec![vec![1], vec![-1]]).unwrap();
        assert!(!brute_sat(&unsat).unwrap());
        assert!(Cnf3::new(2, vec![vec![]]).is_err());
    }

    #[test]
    fn guard_on_variable_count() {
        let cnf = Cnf3::new(21, vec![vec![1]]).unwrap();
        assert!(matches!(brute_sat(&cnf), Err(Error::GuardExceeded { .. })));
    }

    #[test]
    fn truth_table_agrees_with_dpll() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut unsat = 0;
        for _ in 0..400 {
            let m = rng.random_range(1..=6);
            let n = rng.random_range(1..=10);
            let cnf = random_cnf3(&mut rng, m, n);
            let truth = brute_sat(&cnf).unwrap();
            assert_eq!(truth, dpll(cnf.clauses(), &mut Vec::new()), "{cnf:?}");
            if let Some(a) = satisfying_assignment(&cnf).unwrap() {
                assert!(cnf.satisfied_by(&a));
            }
            unsat += usize::from(!truth);
        }
        assert!(unsat > 20);
    }
}
