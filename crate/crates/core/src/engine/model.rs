use std::fmt::Write as _;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sense {
    Ge,
    Le,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub lower: f64,
    pub upper: f64,
    pub cost: f64,
    pub integer: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub coefs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Row {
    pub fn activity(&self, x: &[f64]) -> f64 {
        self.coefs.iter().map(|&(j, a)| a * x[j]).sum()
    }

    /// Amount by which `x` violates the row; nonpositive when satisfied.
    pub fn violation(&self, x: &[f64]) -> f64 {
        let lhs = self.activity(x);
        match self.sense {
            Sense::Ge => self.rhs - lhs,
            Sense::Le => lhs - self.rhs,
            Sense::Eq => (lhs - self.rhs).abs(),
        }
    }

    /// Bounds `[lo, hi]` on the row activity.
    pub fn range(&self) -> (f64, f64) {
        match self.sense {
            Sense::Ge => (self.rhs, f64::INFINITY),
            Sense::Le => (f64::NEG_INFINITY, self.rhs),
            Sense::Eq => (self.rhs, self.rhs),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("variable {0}: lower bound exceeds upper bound or is not a number")]
    Bounds(usize),
    #[error("variable {0}: objective coefficient is not finite")]
    Cost(usize),
    #[error("row {row}: references missing variable {var}")]
    MissingVariable { row: usize, var: usize },
    #[error("row {0}: coefficient or right-hand side is not finite")]
    RowData(usize),
}

/// Minimization model over bounded variables and sparse linear rows.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinearModel {
    pub vars: Vec<Variable>,
    pub rows: Vec<Row>,
}

impl LinearModel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(&mut self, lower: f64, upper: f64, cost: f64, integer: bool) -> usize {
        self.vars.push(Variable {
            lower,
            upper,
            cost,
            integer,
        });
        self.vars.len() - 1
    }

    pub fn add_row(&mut self, coefs: Vec<(usize, f64)>, sense: Sense, rhs: f64) -> usize {
        self.rows.push(Row { coefs, sense, rhs });
        self.rows.len() - 1
    }

    pub fn var_count(&self) -> usize {
        self.vars.len()
    }

    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        self.vars.iter().zip(x).map(|(v, x)| v.cost * x).sum()
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        for (j, v) in self.vars.iter().enumerate() {
            if v.lower.is_nan() || v.upper.is_nan() || v.lower > v.upper {
                return Err(ModelError::Bounds(j));
            }
            if !v.cost.is_finite() {
                return Err(ModelError::Cost(j));
            }
        }
        for (i, row) in self.rows.iter().enumerate() {
            if !row.rhs.is_finite() {
                return Err(ModelError::RowData(i));
            }
            for &(j, a) in &row.coefs {
                if j >= self.vars.len() {
                    return Err(ModelError::MissingVariable { row: i, var: j });
                }
                if !a.is_finite() {
                    return Err(ModelError::RowData(i));
                }
            }
        }
        Ok(())
    }

    /// Largest bound or row violation of `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let bounds = self
            .vars
            .iter()
            .zip(x)
            .map(|(v, &x)| (v.lower - x).max(x - v.upper))
            .fold(0.0, f64::max);
        self.rows
            .iter()
            .map(|r| r.violation(x))
            .fold(bounds, f64::max)
    }

    /// Human-readable listing, for debugging only.
    pub fn dump(&self) -> String {
        let mut out = String::from("minimize");
        for (j, v) in self.vars.iter().enumerate() {
            if v.cost != 0.0 {
                let _ = write!(out, " {:+} x{}", v.cost, j);
            }
        }
        out.push_str("\nsubject to\n");
        for (i, row) in self.rows.iter().enumerate() {
            let _ = write!(out, "  r{i}:");
            for &(j, a) in &row.coefs {
                let _ = write!(out, " {a:+} x{j}");
            }
            let op = match row.sense {
                Sense::Ge => ">=",
                Sense::Le => "<=",
                Sense::Eq => "=",
            };
            let _ = writeln!(out, " {op} {}", row.rhs);
        }
        out.push_str("bounds\n");
        for (j, v) in self.vars.iter().enumerate() {
            let kind = if v.integer { " integer" } else { "" };
            let _ = writeln!(out, "  {} <= x{j} <= {}{kind}", v.lower, v.upper);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validate_and_dump() {
        let mut m = LinearModel::new();
        let x = m.add_var(0.0, 1.0, -1.0, true);
        m.add_row(vec![(x, 1.0)], Sense::Le, 1.0);
        assert!(m.validate().is_ok());
        assert!(m.dump().contains("r0: +1 x0 <= 1"));
        m.add_row(vec![(3, 1.0)], Sense::Ge, 0.0);
        assert_eq!(
            m.validate(),
            Err(ModelError::MissingVariable { row: 1, var: 3 })
        );
        let mut bad = LinearModel::new();
        bad.add_var(2.0, 1.0, 0.0, false);
        assert_eq!(bad.validate(), Err(ModelError::Bounds(0)));
    }

    #[test]
    fn violations() {
        let row = Row {
            coefs: vec![(0, 1.0), (1, 2.0)],
            sense: Sense::Ge,
            rhs: 3.0,
        };
        assert_eq!(row.violation(&[1.0, 0.5]), 1.0);
        assert_eq!(row.violation(&[1.0, 1.0]), 0.0);
        assert_eq!(row.range(), (3.0, f64::INFINITY));
    }
}
