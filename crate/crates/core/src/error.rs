use std::fmt;

/// Errors produced by generators, reductions, algorithms and the harness.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("density `{name}` = {value} is outside {range}")]
    InvalidDensity {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("infeasible parameters: {0}")]
    Infeasible(String),

    #[error("degree constraint residual {residual:.3e} exceeds tolerance {tolerance:.3e}")]
    ConstraintViolation { residual: f64, tolerance: f64 },

    #[error("enumeration budget exceeded: {needed} candidates > {budget}")]
    BudgetExceeded { needed: f64, budget: f64 },

    #[error("design rejected after {attempts} attempts (last sigma estimate {last_sigma:.6})")]
    DesignExhausted { attempts: usize, last_sigma: f64 },

    #[error("whitening covariance not PSD: min eigenvalue {min_eigenvalue:.3e}")]
    NotPsd { min_eigenvalue: f64 },

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("config: {0}")]
    Config(String),

    #[error("oracle failure: {0}")]
    Oracle(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Pipeline stage tags used when propagating failures out of a reduction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Derive,
    Design,
    ToPartite,
    Rotation,
    Threshold,
    Densify,
    Permute,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Derive => "derive",
            Stage::Design => "design",
            Stage::ToPartite => "to-partite",
            Stage::Rotation => "rotation",
            Stage::Threshold => "threshold",
            Stage::Densify => "densify",
            Stage::Permute => "permute",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn at(self, stage: Stage) -> Self {
        match self {
            e @ Error::Stage { .. } => e,
            e => Error::Stage {
                stage,
                source: Box::new(e),
            },
        }
    }
}

pub(crate) fn check_density(name: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::InvalidDensity {
            name,
            value,
            range: "[0, 1]",
        })
    }
}

pub(crate) fn check_open_density(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidDensity {
            name,
            value,
            range: "(0, 1)",
        })
    }
}
