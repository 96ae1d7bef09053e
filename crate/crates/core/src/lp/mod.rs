//! Generic linear programming: problem construction, a bounded-variable
//! revised simplex solver, and primal/dual solution access.
//!
//! Duals follow one convention throughout the crate: the dual of a
//! constraint is the marginal change of the optimal objective per unit
//! increase of that constraint's right-hand side. For a minimization this
//! makes the dual of a binding `<=` row non-positive and the dual of a
//! binding `>=` row non-negative, and the dual of a nodal power-balance
//! equality is directly a locational marginal price in $/MWh.

mod simplex;

use std::fmt;
use std::io::{self, Write};

use thiserror::Error;

/// Absolute feasibility tolerance on constraint residuals, scaled by row norm.
pub const FEASIBILITY_TOL: f64 = 1e-7;
/// Optimality tolerance on reduced costs.
pub const OPTIMALITY_TOL: f64 = 1e-7;
/// Pivots smaller than this are treated as zero.
pub const ZERO_PIVOT_TOL: f64 = 1e-10;
/// Consecutive degenerate pivots before Bland's rule engages.
pub const BLAND_STALL_THRESHOLD: usize = 50;

/// Handle to a variable of one [`LpProblem`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(usize);

impl VarId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Handle to a constraint of one [`LpProblem`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ConstraintId(usize);

impl ConstraintId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Constraint sense.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

impl fmt::Display for Sense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sense::Le => write!(f, "<="),
            Sense::Eq => write!(f, "="),
            Sense::Ge => write!(f, ">="),
        }
    }
}

/// A linear expression `sum(coeff * var) + constant`.
///
/// Duplicate variable entries are merged on construction, so the term list
/// holds at most one entry per variable.
#[derive(Debug, Clone, Default)]
pub struct LinearExpr {
    terms: Vec<(VarId, f64)>, // sorted by VarId, unique
    constant: f64,
}

impl LinearExpr {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn term(var: VarId, coeff: f64) -> Self {
        let mut e = Self::new();
        e.add_term(var, coeff);
        e
    }

    /// Adds `coeff * var`, merging with an existing term for the same variable.
    pub fn add_term(&mut self, var: VarId, coeff: f64) -> &mut Self {
        match self.terms.binary_search_by_key(&var, |&(v, _)| v) {
            Ok(i) => self.terms[i].1 += coeff,
            Err(i) => self.terms.insert(i, (var, coeff)),
        }
        self
    }

    pub fn add_constant(&mut self, c: f64) -> &mut Self {
        self.constant += c;
        self
    }

    pub fn terms(&self) -> &[(VarId, f64)] {
        &self.terms
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }
}

/// Solver outcome classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

impl fmt::Display for LpStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LpStatus::Optimal => write!(f, "Optimal"),
            LpStatus::Infeasible => write!(f, "Infeasible"),
            LpStatus::Unbounded => write!(f, "Unbounded"),
        }
    }
}

#[derive(Debug, Error)]
pub enum LpError {
    #[error("variable bounds inverted: lb {lb} > ub {ub}")]
    BoundInversion { lb: f64, ub: f64 },
    #[error("non-finite value in {context}")]
    NonFinite { context: String },
    #[error("expression references variable #{index} not issued by this problem")]
    ForeignVariable { index: usize },
    #[error("problem has no variables")]
    EmptyProblem,
    #[error("iteration limit of {limit} pivots exceeded")]
    IterationLimit { limit: usize },
    #[error("numerical instability ({kind}): offending magnitude {magnitude:e}")]
    NumericalInstability { kind: &'static str, magnitude: f64 },
}

#[derive(Debug, Clone)]
pub(crate) struct Row {
    pub terms: Vec<(VarId, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// A linear program: bounded variables with objective coefficients, plus
/// general linear constraints. Minimization only.
#[derive(Debug, Clone, Default)]
pub struct LpProblem {
    pub(crate) lb: Vec<f64>,
    pub(crate) ub: Vec<f64>,
    pub(crate) obj: Vec<f64>,
    pub(crate) rows: Vec<Row>,
}

impl LpProblem {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_variables(&self) -> usize {
        self.obj.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.rows.len()
    }

    /// Adds a variable with bounds `[lb, ub]` (either may be infinite) and
    /// the given objective coefficient.
    pub fn add_variable(&mut self, lb: f64, ub: f64, obj_coeff: f64) -> Result<VarId, LpError> {
        if lb.is_nan() || ub.is_nan() {
            return Err(LpError::NonFinite {
                context: "variable bounds".into(),
            });
        }
        if !obj_coeff.is_finite() {
            return Err(LpError::NonFinite {
                context: "objective coefficient".into(),
            });
        }
        if lb > ub {
            return Err(LpError::BoundInversion { lb, ub });
        }
        let id = VarId(self.obj.len());
        self.lb.push(lb);
        self.ub.push(ub);
        self.obj.push(obj_coeff);
        Ok(id)
    }

    /// Adds the constraint `expr sense rhs`. Any constant in `expr` is folded
    /// into the right-hand side.
    pub fn add_constraint(
        &mut self,
        expr: LinearExpr,
        sense: Sense,
        rhs: f64,
    ) -> Result<ConstraintId, LpError> {
        if !rhs.is_finite() {
            return Err(LpError::NonFinite {
                context: "constraint rhs".into(),
            });
        }
        for &(v, c) in expr.terms() {
            if v.0 >= self.num_variables() {
                return Err(LpError::ForeignVariable { index: v.0 });
            }
            if !c.is_finite() {
                return Err(LpError::NonFinite {
                    context: format!("coefficient of variable #{}", v.0),
                });
            }
        }
        let id = ConstraintId(self.rows.len());
        self.rows.push(Row {
            rhs: rhs - expr.constant(),
            terms: expr.terms,
            sense,
        });
        Ok(id)
    }

    /// Solves the problem with the bounded-variable revised simplex method.
    pub fn solve(&self) -> Result<LpSolution, LpError> {
        if self.num_variables() == 0 {
            return Err(LpError::EmptyProblem);
        }
        simplex::solve(self)
    }

    /// Writes the problem in CPLEX LP interchange format, for cross-checking
    /// against external solvers.
    pub fn write_lp<W: Write>(&self, w: &mut W) -> io::Result<()> {
        fn fmt_coeff(first: bool, c: f64, name: String) -> String {
            let sign = if c < 0.0 {
                "- "
            } else if first {
                ""
            } else {
                "+ "
            };
            format!("{sign}{} {name}", c.abs())
        }

        writeln!(w, "Minimize")?;
        let mut line = String::from(" obj:");
        let mut first = true;
        for (j, &c) in self.obj.iter().enumerate() {
            if c != 0.0 {
                line.push(' ');
                line.push_str(&fmt_coeff(first, c, format!("x{j}")));
                first = false;
            }
        }
        if first {
            line.push_str(" 0 x0");
        }
        writeln!(w, "{line}")?;

        writeln!(w, "Subject To")?;
        for (i, row) in self.rows.iter().enumerate() {
            let mut line = format!(" c{i}:");
            let mut first = true;
            for &(v, c) in &row.terms {
                if c != 0.0 {
                    line.push(' ');
                    line.push_str(&fmt_coeff(first, c, format!("x{}", v.0)));
                    first = false;
                }
            }
            if first {
                line.push_str(" 0 x0");
            }
            writeln!(w, "{line} {} {}", row.sense, row.rhs)?;
        }

        writeln!(w, "Bounds")?;
        for j in 0..self.num_variables() {
            let (lb, ub) = (self.lb[j], self.ub[j]);
            match (lb.is_finite(), ub.is_finite()) {
                (true, true) => writeln!(w, " {lb} <= x{j} <= {ub}")?,
                (true, false) => writeln!(w, " x{j} >= {lb}")?,
                (false, true) => writeln!(w, " -inf <= x{j} <= {ub}")?,
                (false, false) => writeln!(w, " x{j} free")?,
            }
        }
        writeln!(w, "End")
    }
}

/// Primal/dual solution of an [`LpProblem`].
///
/// Primal values, duals, and reduced costs are only populated when
/// `status == Optimal`; the accessors panic otherwise.
#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    pub objective: f64,
    pub(crate) primal: Vec<f64>,
    pub(crate) dual: Vec<f64>,
    pub(crate) reduced_cost: Vec<f64>,
}

impl LpSolution {
    pub(crate) fn non_optimal(status: LpStatus) -> Self {
        Self {
            status,
            objective: f64::NAN,
            primal: Vec::new(),
            dual: Vec::new(),
            reduced_cost: Vec::new(),
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    pub fn value(&self, v: VarId) -> f64 {
        assert!(self.is_optimal(), "primal values require an Optimal solve");
        self.primal[v.0]
    }

    pub fn dual(&self, c: ConstraintId) -> f64 {
        assert!(self.is_optimal(), "dual values require an Optimal solve");
        self.dual[c.0]
    }

    pub fn reduced_cost(&self, v: VarId) -> f64 {
        assert!(self.is_optimal(), "reduced costs require an Optimal solve");
        self.reduced_cost[v.0]
    }

    /// Objective value of the dual solution: `y.b` plus the reduced-cost
    /// contribution of nonbasic variables at finite bounds. Equals the primal
    /// objective at an optimum (strong duality).
    pub fn dual_objective(&self, problem: &LpProblem) -> f64 {
        assert!(self.is_optimal());
        let mut obj: f64 = self
            .dual
            .iter()
            .zip(&problem.rows)
            .map(|(y, row)| y * row.rhs)
            .sum();
        for j in 0..problem.num_variables() {
            let d = self.reduced_cost[j];
            if d.abs() <= 1e-12 {
                continue;
            }
            // A nonzero reduced cost pins the variable to one of its bounds.
            let x = self.primal[j];
            let at_lb = (x - problem.lb[j]).abs() <= 1e-6 * (1.0 + x.abs());
            obj += d * if at_lb { problem.lb[j] } else { problem.ub[j] };
        }
        obj
    }
}
