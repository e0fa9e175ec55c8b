//! Run configuration: tolerances, enumeration guards, seed and output
//! format. Defaults are overridden by the file named in `STATTEST_CONFIG`
//! (or `--config`), which is overridden by command-line flags.

use std::path::Path;

use serde::{Deserialize, Serialize};

use stattest_core::hardness::{
    MAX_ANFT_SWITCHES, MAX_BRUTE_VARS, MAX_CERTIFICATE_CLAUSES, MAX_EXHAUSTIVE_VARS, MAX_ORTHANT_VARS,
};
use stattest_core::numkit::Tolerances;
use stattest_core::oracle::MAX_ORACLE_TIES;

use crate::error::CliError;
use crate::formats::read_json;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToleranceConfig {
    /// Relative singular-value cutoff for rank decisions.
    pub rank_rel_tol: f64,
    pub qp_tol: f64,
    pub feas_tol: f64,
    pub margin_tol: f64,
    pub max_iter: usize,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        let t = Tolerances::default();
        Self {
            rank_rel_tol: t.rank_tol,
            qp_tol: t.qp_tol,
            feas_tol: t.feas_tol,
            margin_tol: t.margin_tol,
            max_iter: t.max_iter,
        }
    }
}

/// Caps on exponential enumerations. Each may be lowered below, but not
/// raised above, the library limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GuardConfig {
    pub oracle_ties: usize,
    pub sat_vars: usize,
    pub sign_vars: usize,
    pub orthant_vars: usize,
    pub certificate_clauses: usize,
    pub anft_switches: usize,
}

impl Default for GuardConfig {
    fn default() -> Self {
        Self {
            oracle_ties: MAX_ORACLE_TIES,
            sat_vars: MAX_BRUTE_VARS,
            sign_vars: MAX_EXHAUSTIVE_VARS,
            orthant_vars: MAX_ORTHANT_VARS,
            certificate_clauses: MAX_CERTIFICATE_CLAUSES,
            anft_switches: MAX_ANFT_SWITCHES,
        }
    }
}

impl GuardConfig {
    fn limits(&self) -> [(&'static str, usize, usize); 6] {
        [
            ("oracle_ties", self.oracle_ties, MAX_ORACLE_TIES),
            ("sat_vars", self.sat_vars, MAX_BRUTE_VARS),
            ("sign_vars", self.sign_vars, MAX_EXHAUSTIVE_VARS),
            ("orthant_vars", self.orthant_vars, MAX_ORTHANT_VARS),
            ("certificate_clauses", self.certificate_clauses, MAX_CERTIFICATE_CLAUSES),
            ("anft_switches", self.anft_switches, MAX_ANFT_SWITCHES),
        ]
    }

    /// `Err(Guard)` when `value` exceeds the named cap.
    pub fn check(what: &str, value: usize, cap: usize) -> Result<(), CliError> {
        if value > cap {
            Err(CliError::Guard(format!("{what} = {value} exceeds limit {cap}")))
        } else {
            Ok(())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub tolerances: ToleranceConfig,
    pub guards: GuardConfig,
    pub seed: u64,
    pub format: OutputFormat,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let cfg: RunConfig = read_json(path)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let t = &self.tolerances;
        for (name, v) in [
            ("rank_rel_tol", t.rank_rel_tol),
            ("qp_tol", t.qp_tol),
            ("feas_tol", t.feas_tol),
            ("margin_tol", t.margin_tol),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(CliError::input(format!(
                    "tolerance {name} must be positive and finite, got {v}"
                )));
            }
        }
        if t.max_iter == 0 {
            return Err(CliError::input("tolerance max_iter must be positive"));
        }
        for (name, v, limit) in self.guards.limits() {
            if v > limit {
                return Err(CliError::input(format!(
                    "guard {name} = {v} exceeds the library limit {limit}"
                )));
            }
        }
        Ok(())
    }

    pub fn tolerances(&self) -> Tolerances {
        let t = &self.tolerances;
        Tolerances {
            qp_tol: t.qp_tol,
            feas_tol: t.feas_tol,
            margin_tol: t.margin_tol,
            rank_tol: t.rank_rel_tol,
            max_iter: t.max_iter,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_file_keeps_defaults() {
        let cfg: RunConfig = serde_json::from_str(r#"{"seed": 7, "tolerances": {"qp_tol": 1e-6}}"#).unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.tolerances.qp_tol, 1e-6);
        assert_eq!(cfg.tolerances.feas_tol, Tolerances::default().feas_tol);
        assert_eq!(cfg.guards, GuardConfig::default());
        assert_eq!(cfg.format, OutputFormat::Text);
        cfg.validate().unwrap();
    }

    #[test]
    fn nonpositive_tolerances_and_raised_guards_are_rejected() {
        let mut cfg = RunConfig::default();
        cfg.tolerances.margin_tol = 0.0;
        assert!(cfg.validate().is_err());
        let mut cfg = RunConfig::default();
        cfg.guards.anft_switches = MAX_ANFT_SWITCHES + 1;
        assert!(cfg.validate().is_err());
        let mut cfg = RunConfig::default();
        cfg.guards.anft_switches = 4;
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"sed": 1}"#).is_err());
    }
}
