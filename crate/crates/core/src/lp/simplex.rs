//! Dense two-phase primal simplex.
//!
//! The program is first rewritten in standard form (`max c'z, A z {<=,=,>=} b,
//! z >= 0, b >= 0`): finite lower bounds are shifted out, upper-bounded-only
//! variables are mirrored, free variables are split and finite upper bounds
//! become explicit rows. Every row then owns one unit column (its slack for
//! `<=` rows, an artificial otherwise) which forms the starting basis.
//!
//! Entering columns are priced by largest reduced cost. After a run of
//! degenerate pivots the method falls back to Bland's rule until the
//! objective moves again, so it terminates on degenerate problems; pure
//! Bland pricing is available through [`Pricing::Bland`]. The working
//! tableau is rebuilt from the original matrix every `refactor_every` pivots
//! and once more before a result is reported.

use log::{debug, trace};

use super::program::{Cmp, LinearProgram};
use super::Tolerances;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Unbounded,
    Infeasible,
}

#[derive(Clone, Debug)]
pub struct LpOutcome {
    pub status: LpStatus,
    /// Primal values. Optimal point when optimal, the last feasible vertex
    /// when unbounded, empty when infeasible.
    pub x: Vec<f64>,
    pub objective: f64,
    /// One multiplier per constraint row, `d objective / d rhs`. Nonnegative
    /// on `<=` rows, nonpositive on `>=` rows. Empty unless optimal.
    pub duals: Vec<f64>,
    /// Improving feasible direction. Empty unless unbounded.
    pub ray: Vec<f64>,
    pub pivots: usize,
}

/// Entering-column rule.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Pricing {
    /// Lowest-index improving column throughout.
    Bland,
    /// Largest reduced cost, switching to Bland's rule after
    /// `DEGENERATE_RUN` consecutive degenerate pivots.
    #[default]
    Largest,
}

/// Degenerate pivots tolerated before Bland's rule takes over.
const DEGENERATE_RUN: usize = 20;

#[derive(Clone, Debug)]
pub struct SimplexOptions {
    pub tol: Tolerances,
    pub pricing: Pricing,
    /// Rebuild the tableau from the original matrix after this many pivots.
    pub refactor_every: usize,
    /// Hard pivot cap; 0 picks `50 (m + n) + 1000`.
    pub max_pivots: usize,
    /// Log every pivot at debug level and the final basis at trace level.
    pub verbose: bool,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions {
            tol: Tolerances::default(),
            pricing: Pricing::default(),
            refactor_every: 50,
            max_pivots: 0,
            verbose: false,
        }
    }
}

pub fn solve_lp(program: &LinearProgram) -> Result<LpOutcome> {
    solve_lp_with(program, &SimplexOptions::default())
}

pub fn solve_lp_with(program: &LinearProgram, opts: &SimplexOptions) -> Result<LpOutcome> {
    program.validate()?;
    let lower: Vec<f64> = program.vars().iter().map(|v| v.lower).collect();
    let upper: Vec<f64> = program.vars().iter().map(|v| v.upper).collect();
    solve_bounded(program, &lower, &upper, opts)
}

/// Solves `program` with its variable bounds replaced by `lower`/`upper`.
/// The program itself is assumed validated.
pub(crate) fn solve_bounded(
    program: &LinearProgram,
    lower: &[f64],
    upper: &[f64],
    opts: &SimplexOptions,
) -> Result<LpOutcome> {
    if lower.iter().zip(upper).any(|(l, u)| l > u) {
        return Ok(infeasible(0));
    }
    let std = StandardForm::new(program, lower, upper);
    let mut tab = Tableau::new(&std, opts);

    if tab.has_artificials() {
        tab.set_phase_one();
        match tab.iterate()? {
            Step::Optimal => {}
            // phase one is bounded by construction
            Step::Unbounded(_) => {
                return Err(Error::Numeric("phase one reported unbounded".into()))
            }
        }
        let infeas = -tab.objective();
        if infeas > opts.tol.feasibility * tab.rhs_scale {
            debug!("phase one infeasibility {infeas:e}");
            return Ok(infeasible(tab.pivots));
        }
        tab.drive_out_artificials();
    }

    tab.set_phase_two(&std.cost);
    let step = tab.iterate()?;
    let z = tab.primal();
    let x = std.recover(&z);

    let violation = program.max_violation_with_bounds(&x, lower, upper);
    if violation > 1e-6 * tab.rhs_scale.max(1.0) {
        return Err(Error::Numeric(format!(
            "final point violates constraints by {violation:e}"
        )));
    }
    if opts.verbose {
        trace!("final basis {:?}", tab.basis);
    }

    let objective = program.objective_value(&x);
    Ok(match step {
        Step::Optimal => LpOutcome {
            status: LpStatus::Optimal,
            duals: tab.duals(std.user_rows),
            x,
            objective,
            ray: Vec::new(),
            pivots: tab.pivots,
        },
        Step::Unbounded(q) => {
            let dz = tab.ray_direction(q);
            LpOutcome {
                status: LpStatus::Unbounded,
                ray: std.recover_direction(&dz),
                x,
                objective,
                duals: Vec::new(),
                pivots: tab.pivots,
            }
        }
    })
}

fn infeasible(pivots: usize) -> LpOutcome {
    LpOutcome {
        status: LpStatus::Infeasible,
        x: Vec::new(),
        objective: f64::NAN,
        duals: Vec::new(),
        ray: Vec::new(),
        pivots,
    }
}

impl LinearProgram {
    fn max_violation_with_bounds(&self, x: &[f64], lower: &[f64], upper: &[f64]) -> f64 {
        let rows = self.rows().iter().map(|r| r.violation(x));
        let bounds = (0..x.len()).map(|j| (lower[j] - x[j]).max(x[j] - upper[j]).max(0.0));
        rows.chain(bounds).fold(0.0, f64::max)
    }
}

/// How an original variable maps onto standard-form columns.
#[derive(Clone, Copy, Debug)]
enum ColMap {
    /// `x = lo + z[col]`
    Shift { col: usize, lo: f64 },
    /// `x = hi - z[col]`
    Mirror { col: usize, hi: f64 },
    /// `x = z[pos] - z[neg]`
    Split { pos: usize, neg: usize },
}

struct StdRow {
    coeffs: Vec<(usize, f64)>,
    cmp: Cmp,
    rhs: f64,
}

struct StandardForm {
    map: Vec<ColMap>,
    cost: Vec<f64>,
    rows: Vec<StdRow>,
    user_rows: usize,
}

impl StandardForm {
    fn new(program: &LinearProgram, lower: &[f64], upper: &[f64]) -> Self {
        let mut map = Vec::with_capacity(program.num_vars());
        let mut cost = Vec::with_capacity(program.num_vars());
        let mut bound_rows = Vec::new();
        for (j, v) in program.vars().iter().enumerate() {
            let (lo, hi) = (lower[j], upper[j]);
            if lo.is_finite() {
                let col = cost.len();
                cost.push(v.obj);
                map.push(ColMap::Shift { col, lo });
                if hi.is_finite() {
                    bound_rows.push(StdRow {
                        coeffs: vec![(col, 1.0)],
                        cmp: Cmp::Le,
                        rhs: hi - lo,
                    });
                }
            } else if hi.is_finite() {
                let col = cost.len();
                cost.push(-v.obj);
                map.push(ColMap::Mirror { col, hi });
            } else {
                let pos = cost.len();
                cost.push(v.obj);
                cost.push(-v.obj);
                map.push(ColMap::Split { pos, neg: pos + 1 });
            }
        }

        let mut rows = Vec::with_capacity(program.num_rows() + bound_rows.len());
        for r in program.rows() {
            let mut coeffs = Vec::with_capacity(r.coeffs.len());
            let mut rhs = r.rhs;
            for &(j, a) in &r.coeffs {
                match map[j] {
                    ColMap::Shift { col, lo } => {
                        coeffs.push((col, a));
                        rhs -= a * lo;
                    }
                    ColMap::Mirror { col, hi } => {
                        coeffs.push((col, -a));
                        rhs -= a * hi;
                    }
                    ColMap::Split { pos, neg } => {
                        coeffs.push((pos, a));
                        coeffs.push((neg, -a));
                    }
                }
            }
            rows.push(StdRow {
                coeffs,
                cmp: r.cmp,
                rhs,
            });
        }
        let user_rows = rows.len();
        rows.extend(bound_rows);
        StandardForm {
            map,
            cost,
            rows,
            user_rows,
        }
    }

    fn recover(&self, z: &[f64]) -> Vec<f64> {
        self.map
            .iter()
            .map(|m| match *m {
                ColMap::Shift { col, lo } => lo + z[col],
                ColMap::Mirror { col, hi } => hi - z[col],
                ColMap::Split { pos, neg } => z[pos] - z[neg],
            })
            .collect()
    }

    fn recover_direction(&self, dz: &[f64]) -> Vec<f64> {
        self.map
            .iter()
            .map(|m| match *m {
                ColMap::Shift { col, .. } => dz[col],
                ColMap::Mirror { col, .. } => -dz[col],
                ColMap::Split { pos, neg } => dz[pos] - dz[neg],
            })
            .collect()
    }
}

enum Step {
    Optimal,
    Unbounded(usize),
}

struct Tableau<'o> {
    opts: &'o SimplexOptions,
    m: usize,
    /// Number of columns, excluding the rhs.
    n: usize,
    /// Normalized original `[A | b]`, sparse rows.
    a: Vec<Vec<(usize, f64)>>,
    /// Current `B^-1 [A | b]`.
    t: Vec<f64>,
    basis: Vec<usize>,
    in_basis: Vec<bool>,
    cost: Vec<f64>,
    /// Reduced costs `c_j - c_B B^-1 A_j`; positive means improving.
    rc: Vec<f64>,
    barred: Vec<bool>,
    artificial: Vec<bool>,
    /// Unit column owned by each row.
    unit: Vec<usize>,
    /// Row was multiplied by -1 to make its rhs nonnegative.
    flipped: Vec<bool>,
    rhs_scale: f64,
    pivots: usize,
    since_refactor: usize,
    max_pivots: usize,
    /// Consecutive pivots that left the objective unchanged.
    degenerate: usize,
}

impl<'o> Tableau<'o> {
    fn new(std: &StandardForm, opts: &'o SimplexOptions) -> Self {
        let m = std.rows.len();
        let ns = std.cost.len();
        let extra: usize = std
            .rows
            .iter()
            .map(|r| {
                let cmp = if r.rhs < 0.0 { flip(r.cmp) } else { r.cmp };
                if cmp == Cmp::Ge {
                    2
                } else {
                    1
                }
            })
            .sum();
        let n = ns + extra;
        let w = n + 1;
        let mut a = vec![0.0; m * w];
        let mut artificial = vec![false; n];
        let mut unit = Vec::with_capacity(m);
        let mut flipped = Vec::with_capacity(m);
        let mut next = ns;
        let mut rhs_scale = 1.0f64;
        for (i, r) in std.rows.iter().enumerate() {
            let neg = r.rhs < 0.0;
            let sign = if neg { -1.0 } else { 1.0 };
            let cmp = if neg { flip(r.cmp) } else { r.cmp };
            let row = &mut a[i * w..(i + 1) * w];
            for &(j, v) in &r.coeffs {
                row[j] += sign * v;
            }
            row[n] = sign * r.rhs;
            rhs_scale = rhs_scale.max(row[n]);
            match cmp {
                Cmp::Le => {
                    row[next] = 1.0;
                    unit.push(next);
                    next += 1;
                }
                Cmp::Ge => {
                    row[next] = -1.0;
                    row[next + 1] = 1.0;
                    artificial[next + 1] = true;
                    unit.push(next + 1);
                    next += 2;
                }
                Cmp::Eq => {
                    row[next] = 1.0;
                    artificial[next] = true;
                    unit.push(next);
                    next += 1;
                }
            }
            flipped.push(neg);
        }
        let mut in_basis = vec![false; n];
        for &u in &unit {
            in_basis[u] = true;
        }
        let max_pivots = if opts.max_pivots == 0 {
            50 * (m + n) + 1000
        } else {
            opts.max_pivots
        };
        let sparse = a
            .chunks(w)
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|(_, v)| **v != 0.0)
                    .map(|(j, &v)| (j, v))
                    .collect()
            })
            .collect();
        Tableau {
            opts,
            m,
            n,
            t: a,
            a: sparse,
            basis: unit.clone(),
            in_basis,
            cost: vec![0.0; n],
            rc: vec![0.0; n],
            barred: vec![false; n],
            artificial,
            unit,
            flipped,
            rhs_scale,
            pivots: 0,
            since_refactor: 0,
            max_pivots,
            degenerate: 0,
        }
    }

    fn w(&self) -> usize {
        self.n + 1
    }

    fn has_artificials(&self) -> bool {
        self.artificial.iter().any(|&a| a)
    }

    fn set_phase_one(&mut self) {
        for j in 0..self.n {
            self.cost[j] = if self.artificial[j] { -1.0 } else { 0.0 };
            self.barred[j] = false;
        }
        self.degenerate = 0;
        self.compute_rc();
    }

    fn set_phase_two(&mut self, structural: &[f64]) {
        self.cost.iter_mut().for_each(|c| *c = 0.0);
        self.cost[..structural.len()].copy_from_slice(structural);
        self.barred.copy_from_slice(&self.artificial);
        self.degenerate = 0;
        self.compute_rc();
    }

    fn objective(&self) -> f64 {
        let w = self.w();
        (0..self.m)
            .map(|i| self.cost[self.basis[i]] * self.t[i * w + self.n])
            .sum()
    }

    fn compute_rc(&mut self) {
        let w = self.w();
        self.rc.copy_from_slice(&self.cost);
        for i in 0..self.m {
            let cb = self.cost[self.basis[i]];
            if cb == 0.0 {
                continue;
            }
            let row = &self.t[i * w..i * w + self.n];
            for (r, &v) in self.rc.iter_mut().zip(row) {
                *r -= cb * v;
            }
        }
        for &b in &self.basis {
            self.rc[b] = 0.0;
        }
    }

    fn iterate(&mut self) -> Result<Step> {
        loop {
            if self.since_refactor >= self.opts.refactor_every {
                self.refactor()?;
            }
            let Some(q) = self.entering() else {
                if self.since_refactor > 0 {
                    self.refactor()?;
                    if self.entering().is_some() {
                        continue;
                    }
                }
                return Ok(Step::Optimal);
            };
            let Some(r) = self.leaving(q) else {
                if self.since_refactor > 0 {
                    self.refactor()?;
                    continue;
                }
                return Ok(Step::Unbounded(q));
            };
            if self.opts.verbose {
                debug!(
                    "pivot {}: enter {q} leave {} (row {r}), rc {:e}",
                    self.pivots, self.basis[r], self.rc[q]
                );
            }
            let w = self.w();
            if self.t[r * w + self.n] <= self.opts.tol.feasibility {
                self.degenerate += 1;
            } else {
                self.degenerate = 0;
            }
            self.pivot(r, q);
            if self.pivots > self.max_pivots {
                return Err(Error::Numeric(format!(
                    "pivot limit {} exceeded",
                    self.max_pivots
                )));
            }
        }
    }

    fn entering(&self) -> Option<usize> {
        let tol = self.opts.tol.optimality;
        let mut candidates =
            (0..self.n).filter(|&j| !self.in_basis[j] && !self.barred[j] && self.rc[j] > tol);
        if self.opts.pricing == Pricing::Bland || self.degenerate >= DEGENERATE_RUN {
            return candidates.next();
        }
        // largest reduced cost, lowest index on ties
        candidates.fold(None, |best: Option<usize>, j| match best {
            Some(b) if self.rc[b] >= self.rc[j] => Some(b),
            _ => Some(j),
        })
    }

    /// Minimum ratio; ties go to the lowest-index basic variable.
    fn leaving(&self, q: usize) -> Option<usize> {
        let w = self.w();
        let tol = self.opts.tol.pivot;
        let mut best: Option<(usize, f64)> = None;
        for i in 0..self.m {
            let piv = self.t[i * w + q];
            if piv <= tol {
                continue;
            }
            let ratio = self.t[i * w + self.n].max(0.0) / piv;
            best = match best {
                None => Some((i, ratio)),
                Some((bi, br)) => {
                    let slack = 1e-12 * br.abs().max(1.0);
                    if ratio < br - slack
                        || (ratio <= br + slack && self.basis[i] < self.basis[bi])
                    {
                        Some((i, ratio))
                    } else {
                        Some((bi, br))
                    }
                }
            };
        }
        best.map(|(i, _)| i)
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let w = self.w();
        let p = self.t[r * w + q];
        let mut prow: Vec<f64> = self.t[r * w..(r + 1) * w].to_vec();
        for v in prow.iter_mut() {
            *v /= p;
        }
        prow[q] = 1.0;
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.t[i * w + q];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.t[i * w..(i + 1) * w];
            for (v, &pv) in row.iter_mut().zip(&prow) {
                if pv != 0.0 {
                    *v -= f * pv;
                }
            }
            row[q] = 0.0;
        }
        let f = self.rc[q];
        if f != 0.0 {
            for (v, &pv) in self.rc.iter_mut().zip(&prow[..self.n]) {
                if pv != 0.0 {
                    *v -= f * pv;
                }
            }
        }
        self.rc[q] = 0.0;
        self.t[r * w..(r + 1) * w].copy_from_slice(&prow);

        self.in_basis[self.basis[r]] = false;
        self.in_basis[q] = true;
        self.basis[r] = q;
        self.pivots += 1;
        self.since_refactor += 1;
    }

    /// Rebuilds `t = B^-1 [A | b]` from the original matrix.
    fn refactor(&mut self) -> Result<()> {
        let (m, w) = (self.m, self.w());
        let mut b = vec![0.0; m * m];
        let mut position = vec![usize::MAX; w];
        for (k, &col) in self.basis.iter().enumerate() {
            position[col] = k;
        }
        for (i, row) in self.a.iter().enumerate() {
            for &(j, v) in row {
                if position[j] != usize::MAX {
                    b[i * m + position[j]] = v;
                }
            }
        }
        let inv = invert(&mut b, m).ok_or_else(|| {
            Error::Numeric("singular basis during refactorization".into())
        })?;
        for i in 0..m {
            let row = &mut self.t[i * w..(i + 1) * w];
            row.iter_mut().for_each(|v| *v = 0.0);
            for (l, arow) in self.a.iter().enumerate() {
                let f = inv[i * m + l];
                if f == 0.0 {
                    continue;
                }
                for &(j, av) in arow {
                    row[j] += f * av;
                }
            }
        }
        // snap basic columns to exact unit vectors
        for (k, &col) in self.basis.iter().enumerate() {
            for i in 0..m {
                self.t[i * w + col] = if i == k { 1.0 } else { 0.0 };
            }
        }
        self.compute_rc();
        self.since_refactor = 0;
        Ok(())
    }

    /// Pivots zero-level artificials out of the basis where a structural or
    /// slack column allows it. Rows that do not allow it are redundant.
    fn drive_out_artificials(&mut self) {
        let w = self.w();
        for r in 0..self.m {
            if !self.artificial[self.basis[r]] {
                continue;
            }
            let mut best: Option<(usize, f64)> = None;
            for j in 0..self.n {
                if self.artificial[j] || self.in_basis[j] {
                    continue;
                }
                let v = self.t[r * w + j].abs();
                if v > self.opts.tol.pivot && best.is_none_or(|(_, bv)| v > bv) {
                    best = Some((j, v));
                }
            }
            if let Some((q, _)) = best {
                self.pivot(r, q);
            }
        }
    }

    fn primal(&self) -> Vec<f64> {
        let w = self.w();
        let mut z = vec![0.0; self.n];
        for (i, &b) in self.basis.iter().enumerate() {
            z[b] = self.t[i * w + self.n].max(0.0);
        }
        z
    }

    fn duals(&self, user_rows: usize) -> Vec<f64> {
        (0..user_rows)
            .map(|i| {
                let y = -self.rc_raw(self.unit[i]);
                if self.flipped[i] {
                    -y
                } else {
                    y
                }
            })
            .collect()
    }

    /// Reduced cost including basic columns (which are zero by definition).
    fn rc_raw(&self, j: usize) -> f64 {
        if self.in_basis[j] {
            // c_j - c_B B^-1 A_j with A_j a basis column: zero
            0.0
        } else {
            self.rc[j]
        }
    }

    fn ray_direction(&self, q: usize) -> Vec<f64> {
        let w = self.w();
        let mut dz = vec![0.0; self.n];
        dz[q] = 1.0;
        for (i, &b) in self.basis.iter().enumerate() {
            dz[b] = -self.t[i * w + q];
        }
        dz
    }
}

fn flip(cmp: Cmp) -> Cmp {
    match cmp {
        Cmp::Le => Cmp::Ge,
        Cmp::Ge => Cmp::Le,
        Cmp::Eq => Cmp::Eq,
    }
}

/// Gauss-Jordan inverse with partial pivoting; `None` when singular.
fn invert(b: &mut [f64], m: usize) -> Option<Vec<f64>> {
    let mut inv = vec![0.0; m * m];
    for i in 0..m {
        inv[i * m + i] = 1.0;
    }
    let scale = b.iter().fold(0.0f64, |acc, v| acc.max(v.abs())).max(1.0);
    for col in 0..m {
        let piv_row = (col..m).max_by(|&x, &y| {
            b[x * m + col]
                .abs()
                .total_cmp(&b[y * m + col].abs())
                .then(y.cmp(&x))
        })?;
        let piv = b[piv_row * m + col];
        if piv.abs() < 1e-11 * scale {
            return None;
        }
        if piv_row != col {
            for k in 0..m {
                b.swap(piv_row * m + k, col * m + k);
                inv.swap(piv_row * m + k, col * m + k);
            }
        }
        for k in 0..m {
            b[col * m + k] /= piv;
            inv[col * m + k] /= piv;
        }
        for i in 0..m {
            if i == col {
                continue;
            }
            let f = b[i * m + col];
            if f == 0.0 {
                continue;
            }
            for k in 0..m {
                b[i * m + k] -= f * b[col * m + k];
                inv[i * m + k] -= f * inv[col * m + k];
            }
        }
    }
    Some(inv)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lp2() -> LinearProgram {
        // max x1 + 2 x2, x1 + x2 <= 4, x2 <= 3
        let mut lp = LinearProgram::new();
        let x1 = lp.add_var("x1", 1.0, 0.0, f64::INFINITY);
        let x2 = lp.add_var("x2", 2.0, 0.0, f64::INFINITY);
        lp.add_row("c1", vec![(x1, 1.0), (x2, 1.0)], Cmp::Le, 4.0);
        lp.add_row("c2", vec![(x2, 1.0)], Cmp::Le, 3.0);
        lp
    }

    #[test]
    fn small_optimum_and_duals() {
        let out = solve_lp(&lp2()).unwrap();
        assert_eq!(out.status, LpStatus::Optimal);
        assert!((out.objective - 7.0).abs() < 1e-9);
        assert!((out.x[0] - 1.0).abs() < 1e-9 && (out.x[1] - 3.0).abs() < 1e-9);
        assert!((out.duals[0] - 1.0).abs() < 1e-9);
        assert!((out.duals[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn unbounded_ray_along_axis() {
        let mut lp = LinearProgram::new();
        lp.add_var("x1", 1.0, 0.0, f64::INFINITY);
        let out = solve_lp(&lp).unwrap();
        assert_eq!(out.status, LpStatus::Unbounded);
        assert_eq!(out.ray, vec![1.0]);
    }

    #[test]
    fn contradictory_rows_are_infeasible() {
        let mut lp = LinearProgram::new();
        let x = lp.add_var("x1", 1.0, 0.0, f64::INFINITY);
        lp.add_row("neg", vec![(x, 1.0)], Cmp::Le, -1.0);
        assert_eq!(solve_lp(&lp).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn equality_and_ge_rows() {
        // max -x - y, x + y = 3, x - y >= 1, x,y >= 0  -> (3, 0)? obj -3 everywhere on the line
        // use min x (max -x) so the answer is unique: x = 2, y = 1
        let mut lp = LinearProgram::new();
        let x = lp.add_var("x", -1.0, 0.0, f64::INFINITY);
        let y = lp.add_var("y", 0.0, 0.0, f64::INFINITY);
        lp.add_row("sum", vec![(x, 1.0), (y, 1.0)], Cmp::Eq, 3.0);
        lp.add_row("gap", vec![(x, 1.0), (y, -1.0)], Cmp::Ge, 1.0);
        let out = solve_lp(&lp).unwrap();
        assert_eq!(out.status, LpStatus::Optimal);
        assert!((out.x[0] - 2.0).abs() < 1e-9);
        assert!((out.x[1] - 1.0).abs() < 1e-9);
        // ge row binds with nonpositive multiplier
        assert!(out.duals[1] <= 1e-12);
        let dual_obj = 3.0 * out.duals[0] + out.duals[1];
        assert!((dual_obj - out.objective).abs() < 1e-9);
    }

    #[test]
    fn free_and_mirrored_variables() {
        // max -|x - 2| style: max t, t <= x - 2, t <= 2 - x, x free, t <= 5 (mirrored)
        let mut lp = LinearProgram::new();
        let x = lp.add_var("x", 0.0, f64::NEG_INFINITY, f64::INFINITY);
        let t = lp.add_var("t", 1.0, f64::NEG_INFINITY, 5.0);
        lp.add_row("a", vec![(t, 1.0), (x, -1.0)], Cmp::Le, -2.0);
        lp.add_row("b", vec![(t, 1.0), (x, 1.0)], Cmp::Le, 2.0);
        let out = solve_lp(&lp).unwrap();
        assert_eq!(out.status, LpStatus::Optimal);
        assert!(out.objective.abs() < 1e-9);
        assert!((out.x[0] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn degenerate_problem_terminates() {
        // classic Beale cycling example (max form)
        let mut lp = LinearProgram::new();
        let x4 = lp.add_var("x4", 0.75, 0.0, f64::INFINITY);
        let x5 = lp.add_var("x5", -150.0, 0.0, f64::INFINITY);
        let x6 = lp.add_var("x6", 0.02, 0.0, f64::INFINITY);
        let x7 = lp.add_var("x7", -6.0, 0.0, f64::INFINITY);
        lp.add_row("r1", vec![(x4, 0.25), (x5, -60.0), (x6, -0.04), (x7, 9.0)], Cmp::Le, 0.0);
        lp.add_row("r2", vec![(x4, 0.5), (x5, -90.0), (x6, -0.02), (x7, 3.0)], Cmp::Le, 0.0);
        lp.add_row("r3", vec![(x6, 1.0)], Cmp::Le, 1.0);
        let out = solve_lp(&lp).unwrap();
        assert_eq!(out.status, LpStatus::Optimal);
        assert!((out.objective - 0.05).abs() < 1e-9);
    }

    #[test]
    fn redundant_equalities() {
        let mut lp = LinearProgram::new();
        let x = lp.add_var("x", 1.0, 0.0, 10.0);
        let y = lp.add_var("y", 1.0, 0.0, 10.0);
        lp.add_row("e1", vec![(x, 1.0), (y, 1.0)], Cmp::Eq, 4.0);
        lp.add_row("e2", vec![(x, 2.0), (y, 2.0)], Cmp::Eq, 8.0);
        let out = solve_lp(&lp).unwrap();
        assert_eq!(out.status, LpStatus::Optimal);
        assert!((out.objective - 4.0).abs() < 1e-9);
    }

    #[test]
    fn frequent_refactorization_gives_same_answer() {
        let opts = SimplexOptions {
            refactor_every: 1,
            ..Default::default()
        };
        let out = solve_lp_with(&lp2(), &opts).unwrap();
        assert!((out.objective - 7.0).abs() < 1e-9);
    }
}
