use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Row comparator.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cmp {
    Le,
    Eq,
    Ge,
}

impl Cmp {
    fn symbol(self) -> &'static str {
        match self {
            Cmp::Le => "<=",
            Cmp::Eq => "=",
            Cmp::Ge => ">=",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Variable {
    pub name: String,
    pub obj: f64,
    pub lower: f64,
    pub upper: f64,
    pub integer: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub name: String,
    /// Sparse `(variable index, coefficient)` pairs.
    pub coeffs: Vec<(usize, f64)>,
    pub cmp: Cmp,
    pub rhs: f64,
}

impl Constraint {
    pub fn activity(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(j, a)| a * x[j]).sum()
    }

    /// Amount by which `x` violates this row (0 when satisfied).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let lhs = self.activity(x);
        match self.cmp {
            Cmp::Le => (lhs - self.rhs).max(0.0),
            Cmp::Ge => (self.rhs - lhs).max(0.0),
            Cmp::Eq => (lhs - self.rhs).abs(),
        }
    }
}

/// A maximization LP/MIP in sparse row form.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LinearProgram {
    vars: Vec<Variable>,
    rows: Vec<Constraint>,
}

impl LinearProgram {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a continuous variable and returns its index.
    pub fn add_var(&mut self, name: impl Into<String>, obj: f64, lower: f64, upper: f64) -> usize {
        self.vars.push(Variable {
            name: name.into(),
            obj,
            lower,
            upper,
            integer: false,
        });
        self.vars.len() - 1
    }

    /// Adds an integer-flagged variable and returns its index.
    pub fn add_int_var(&mut self, name: impl Into<String>, obj: f64, lower: f64, upper: f64) -> usize {
        let j = self.add_var(name, obj, lower, upper);
        self.vars[j].integer = true;
        j
    }

    pub fn add_row(
        &mut self,
        name: impl Into<String>,
        coeffs: Vec<(usize, f64)>,
        cmp: Cmp,
        rhs: f64,
    ) -> usize {
        self.rows.push(Constraint {
            name: name.into(),
            coeffs,
            cmp,
            rhs,
        });
        self.rows.len() - 1
    }

    pub fn set_bounds(&mut self, var: usize, lower: f64, upper: f64) {
        self.vars[var].lower = lower;
        self.vars[var].upper = upper;
    }

    pub fn set_integer(&mut self, var: usize, integer: bool) {
        self.vars[var].integer = integer;
    }

    pub fn vars(&self) -> &[Variable] {
        &self.vars
    }

    pub fn rows(&self) -> &[Constraint] {
        &self.rows
    }

    pub(crate) fn rows_mut(&mut self) -> &mut [Constraint] {
        &mut self.rows
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v.name == name)
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.vars.iter().zip(x).map(|(v, xi)| v.obj * xi).sum()
    }

    /// Largest row or bound violation of `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let rows = self.rows.iter().map(|r| r.violation(x));
        let bounds = self
            .vars
            .iter()
            .zip(x)
            .map(|(v, &xi)| (v.lower - xi).max(xi - v.upper).max(0.0));
        rows.chain(bounds).fold(0.0, f64::max)
    }

    /// Checks that every row references declared variables, all numbers are
    /// finite where required and bounds are ordered.
    pub fn validate(&self) -> Result<()> {
        if self.vars.is_empty() {
            return Err(Error::InvalidInput("program has no variables".into()));
        }
        for v in &self.vars {
            if !v.obj.is_finite() {
                return Err(Error::InvalidInput(format!("objective of `{}` is not finite", v.name)));
            }
            if v.lower.is_nan() || v.upper.is_nan() || v.lower > v.upper || v.lower == f64::INFINITY || v.upper == f64::NEG_INFINITY {
                return Err(Error::InvalidInput(format!(
                    "bad bounds [{}, {}] on `{}`",
                    v.lower, v.upper, v.name
                )));
            }
        }
        for r in &self.rows {
            if !r.rhs.is_finite() {
                return Err(Error::InvalidInput(format!("rhs of `{}` is not finite", r.name)));
            }
            for &(j, a) in &r.coeffs {
                if j >= self.vars.len() {
                    return Err(Error::InvalidInput(format!(
                        "row `{}` references undeclared variable {j}",
                        r.name
                    )));
                }
                if !a.is_finite() {
                    return Err(Error::InvalidInput(format!("non-finite coefficient in `{}`", r.name)));
                }
            }
        }
        Ok(())
    }

    /// Plain-text dump in an LP-format-like layout. Ordering follows
    /// declaration order, so equal programs produce equal text.
    pub fn to_lp_text(&self) -> String {
        let mut out = String::from("Maximize\n obj:");
        let mut any = false;
        for v in self.vars.iter().filter(|v| v.obj != 0.0) {
            push_term(&mut out, v.obj, &v.name, !any);
            any = true;
        }
        if !any {
            out.push_str(" 0");
        }
        out.push_str("\nSubject To\n");
        for r in &self.rows {
            let _ = write!(out, " {}:", r.name);
            if r.coeffs.is_empty() {
                out.push_str(" 0");
            }
            for (k, &(j, a)) in r.coeffs.iter().enumerate() {
                push_term(&mut out, a, &self.vars[j].name, k == 0);
            }
            let _ = writeln!(out, " {} {}", r.cmp.symbol(), r.rhs);
        }
        out.push_str("Bounds\n");
        for v in &self.vars {
            match (v.lower.is_finite(), v.upper.is_finite()) {
                (true, true) if v.lower == v.upper => {
                    let _ = writeln!(out, " {} = {}", v.name, v.lower);
                }
                (true, true) => {
                    let _ = writeln!(out, " {} <= {} <= {}", v.lower, v.name, v.upper);
                }
                (true, false) => {
                    let _ = writeln!(out, " {} >= {}", v.name, v.lower);
                }
                (false, true) => {
                    let _ = writeln!(out, " -inf <= {} <= {}", v.name, v.upper);
                }
                (false, false) => {
                    let _ = writeln!(out, " {} free", v.name);
                }
            }
        }
        let ints: Vec<&str> = self
            .vars
            .iter()
            .filter(|v| v.integer)
            .map(|v| v.name.as_str())
            .collect();
        if !ints.is_empty() {
            out.push_str("General\n");
            for name in ints {
                let _ = writeln!(out, " {name}");
            }
        }
        out.push_str("End\n");
        out
    }
}

fn push_term(out: &mut String, coef: f64, name: &str, first: bool) {
    let sign = if coef < 0.0 { "-" } else if first { "" } else { "+" };
    let mag = coef.abs();
    if sign.is_empty() {
        out.push(' ');
    } else {
        let _ = write!(out, " {sign} ");
    }
    if mag == 1.0 {
        out.push_str(name);
    } else {
        let _ = write!(out, "{mag} {name}");
    }
}
