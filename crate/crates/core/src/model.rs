//! Problem instances and the LP/MIP formulations built from them.
//!
//! The objective `min(x_i + sum_j y_ij, d_i) * r_i` is linearized with a
//! served-demand variable `f_i` bounded by both the availability term and
//! the demand. Two availability readings are supported, see [`Variant`].
//! Self-loops `y_ii` never get a variable.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::density::ScenarioSet;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::rng::rng_from_seed;
use crate::lp::{
    solve_lp_with, solve_mip_with, Cmp, LinearProgram, LpStatus, MipOptions, MipStatus,
    SimplexOptions,
};
use crate::ZoneId;

#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    pub locations: Vec<ZoneId>,
    /// Revenue per served car.
    pub revenue: Vec<f64>,
    /// Holding cost per allocated car.
    pub holding: Vec<f64>,
    /// Transfer cost per moved car, `transfer[i][j]`, zero diagonal.
    pub transfer: Vec<Vec<f64>>,
    /// Fleet size.
    pub capacity: u64,
}

impl Instance {
    pub fn new(
        locations: Vec<ZoneId>,
        revenue: Vec<f64>,
        holding: Vec<f64>,
        transfer: Vec<Vec<f64>>,
        capacity: u64,
    ) -> Result<Self> {
        let inst = Instance {
            locations,
            revenue,
            holding,
            transfer,
            capacity,
        };
        inst.validate()?;
        Ok(inst)
    }

    /// Same revenue everywhere, one transfer cost for every ordered pair.
    pub fn uniform(
        locations: Vec<ZoneId>,
        revenue: f64,
        holding: Vec<f64>,
        transfer: f64,
        capacity: u64,
    ) -> Result<Self> {
        let n = locations.len();
        let t = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 0.0 } else { transfer }).collect())
            .collect();
        Self::new(locations, vec![revenue; n], holding, t, capacity)
    }

    pub fn len(&self) -> usize {
        self.locations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.locations.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.locations.len();
        if n == 0 {
            return Err(Error::InvalidInput("instance has no locations".into()));
        }
        if self.revenue.len() != n || self.holding.len() != n || self.transfer.len() != n {
            return Err(Error::Dimension(format!(
                "{n} locations but {} revenues, {} holding costs, {} transfer rows",
                self.revenue.len(),
                self.holding.len(),
                self.transfer.len()
            )));
        }
        if let Some(row) = self.transfer.iter().find(|r| r.len() != n) {
            return Err(Error::Dimension(format!(
                "transfer row of width {} for {n} locations",
                row.len()
            )));
        }
        let nonneg = |v: &f64| v.is_finite() && *v >= 0.0;
        if !self.revenue.iter().all(nonneg)
            || !self.holding.iter().all(nonneg)
            || !self.transfer.iter().flatten().all(nonneg)
        {
            return Err(Error::InvalidInput(
                "costs and revenues must be finite and nonnegative".into(),
            ));
        }
        if (0..n).any(|i| self.transfer[i][i] != 0.0) {
            return Err(Error::InvalidInput("transfer diagonal must be zero".into()));
        }
        Ok(())
    }

    fn check_width(&self, width: usize, what: &str) -> Result<()> {
        if width != self.len() {
            return Err(Error::Dimension(format!(
                "{what} has {width} locations, instance has {}",
                self.len()
            )));
        }
        Ok(())
    }

    /// Holding cost of an allocation.
    pub fn holding_cost(&self, x: &[u64]) -> f64 {
        self.holding.iter().zip(x).map(|(h, &xi)| h * xi as f64).sum()
    }

    /// Writes the long-form `field,from,to,value` table.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["field", "from", "to", "value"])?;
        w.write_record(["capacity", "", "", &self.capacity.to_string()])?;
        for (i, id) in self.locations.iter().enumerate() {
            w.write_record(["revenue", &id.to_string(), "", &self.revenue[i].to_string()])?;
            w.write_record(["holding", &id.to_string(), "", &self.holding[i].to_string()])?;
        }
        for (i, from) in self.locations.iter().enumerate() {
            for (j, to) in self.locations.iter().enumerate() {
                if i != j {
                    w.write_record([
                        "transfer",
                        &from.to_string(),
                        &to.to_string(),
                        &self.transfer[i][j].to_string(),
                    ])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let mut capacity = None;
        let mut locations: Vec<ZoneId> = Vec::new();
        let mut revenue: Vec<Option<f64>> = Vec::new();
        let mut holding: Vec<Option<f64>> = Vec::new();
        let mut transfers: Vec<(ZoneId, ZoneId, f64)> = Vec::new();
        let index_of = |locations: &mut Vec<ZoneId>,
                        revenue: &mut Vec<Option<f64>>,
                        holding: &mut Vec<Option<f64>>,
                        id: ZoneId| {
            match locations.iter().position(|&l| l == id) {
                Some(k) => k,
                None => {
                    locations.push(id);
                    revenue.push(None);
                    holding.push(None);
                    locations.len() - 1
                }
            }
        };
        for rec in r.records() {
            let rec = rec?;
            let field = rec.get(0).unwrap_or("").trim();
            let zone = |k: usize| -> Result<ZoneId> {
                rec.get(k)
                    .and_then(|v| v.trim().parse().ok())
                    .ok_or_else(|| Error::Format(format!("bad location in {:?}", rec.as_slice())))
            };
            let value: f64 = rec
                .get(3)
                .and_then(|v| v.trim().parse().ok())
                .ok_or_else(|| Error::Format(format!("bad value in {:?}", rec.as_slice())))?;
            match field {
                "capacity" => {
                    if value < 0.0 || value.fract() != 0.0 {
                        return Err(Error::Format(format!("capacity {value} is not a count")));
                    }
                    capacity = Some(value as u64);
                }
                "revenue" => {
                    let k = index_of(&mut locations, &mut revenue, &mut holding, zone(1)?);
                    revenue[k] = Some(value);
                }
                "holding" => {
                    let k = index_of(&mut locations, &mut revenue, &mut holding, zone(1)?);
                    holding[k] = Some(value);
                }
                "transfer" => transfers.push((zone(1)?, zone(2)?, value)),
                other => return Err(Error::Format(format!("unknown instance field `{other}`"))),
            }
        }
        let capacity = capacity.ok_or_else(|| Error::Format("missing capacity".into()))?;
        let n = locations.len();
        let mut transfer = vec![vec![f64::NAN; n]; n];
        for (i, row) in transfer.iter_mut().enumerate() {
            row[i] = 0.0;
        }
        for (from, to, v) in transfers {
            let (Some(i), Some(j)) = (
                locations.iter().position(|&l| l == from),
                locations.iter().position(|&l| l == to),
            ) else {
                return Err(Error::Format(format!("transfer {from}->{to} names an unknown location")));
            };
            transfer[i][j] = v;
        }
        if transfer.iter().flatten().any(|v| v.is_nan()) {
            return Err(Error::Format("transfer matrix is incomplete".into()));
        }
        let unwrap_all = |v: Vec<Option<f64>>, what: &str| {
            v.into_iter()
                .collect::<Option<Vec<f64>>>()
                .ok_or_else(|| Error::Format(format!("missing {what} for some location")))
        };
        Instance::new(
            locations,
            unwrap_all(revenue, "revenue")?,
            unwrap_all(holding, "holding")?,
            transfer,
            capacity,
        )
    }
}

/// How relocations feed availability in the served-demand bound.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// `f_i <= x_i + sum_j y_ij`: outflow counts toward the origin.
    #[default]
    AsWritten,
    /// `f_i <= x_i + sum_j y_ji - sum_j y_ij`: cars are conserved.
    FlowCorrected,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::AsWritten => "as_written",
            Variant::FlowCorrected => "flow_corrected",
        })
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "as_written" => Ok(Variant::AsWritten),
            "flow_corrected" => Ok(Variant::FlowCorrected),
            other => Err(Error::InvalidInput(format!("unknown variant `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ModelOptions {
    pub variant: Variant,
    /// Serve every unit of demand (`f = d`) instead of capping at it.
    pub require_full_service: bool,
}

impl From<Variant> for ModelOptions {
    fn from(variant: Variant) -> Self {
        ModelOptions {
            variant,
            require_full_service: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Solution {
    pub x: Vec<u64>,
    /// `y[s][i][j]`, zero on the diagonal.
    pub y: Vec<Vec<Vec<f64>>>,
    /// `f[s][i]`.
    pub f: Vec<Vec<f64>>,
    pub objective: f64,
}

impl Solution {
    pub fn write_x_csv<W: Write>(&self, locations: &[ZoneId], writer: W) -> Result<()> {
        write_allocation(locations, &self.x, writer)
    }
}

/// Writes a `location,x` table.
pub fn write_allocation<W: Write>(locations: &[ZoneId], x: &[u64], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["location", "x"])?;
    for (id, xi) in locations.iter().zip(x) {
        w.write_record([id.to_string(), xi.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a `location,x` table, reordered to match `locations`.
pub fn read_allocation<R: Read>(locations: &[ZoneId], reader: R) -> Result<Vec<u64>> {
    let mut r = csv::Reader::from_reader(reader);
    let mut x = vec![None; locations.len()];
    for rec in r.records() {
        let rec = rec?;
        let id: ZoneId = rec
            .get(0)
            .and_then(|v| v.trim().parse().ok())
            .ok_or_else(|| Error::Format(format!("bad location in {:?}", rec.as_slice())))?;
        let v: u64 = rec
            .get(1)
            .and_then(|v| v.trim().parse().ok())
            .ok_or_else(|| Error::Format(format!("bad allocation in {:?}", rec.as_slice())))?;
        let k = locations
            .iter()
            .position(|&l| l == id)
            .ok_or_else(|| Error::Format(format!("allocation for unknown location {id}")))?;
        x[k] = Some(v);
    }
    x.into_iter()
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| Error::Format("allocation is missing some locations".into()))
}

/// Variable indices of a built model.
#[derive(Clone, Debug)]
pub struct Layout {
    pub x: Vec<usize>,
    /// `y[s][i][j]`, `None` on the diagonal.
    pub y: Vec<Vec<Vec<Option<usize>>>>,
    pub f: Vec<Vec<usize>>,
}

#[derive(Clone, Debug)]
pub struct BuiltModel {
    pub program: LinearProgram,
    pub layout: Layout,
}

impl BuiltModel {
    /// Solves with branch-and-bound and maps the incumbent back.
    pub fn solve(&self, opts: &MipOptions) -> Result<Solution> {
        let out = solve_mip_with(&self.program, opts)?;
        match out.status {
            MipStatus::Optimal => Ok(self.extract(&out.x, out.objective)),
            MipStatus::Infeasible => Err(Error::Infeasible("model has no feasible allocation".into())),
            MipStatus::Unbounded => Err(Error::Numeric("model relaxation is unbounded".into())),
            MipStatus::Cutoff => Err(Error::Infeasible("no allocation beats the cutoff".into())),
        }
    }

    pub fn extract(&self, values: &[f64], objective: f64) -> Solution {
        let x = self
            .layout
            .x
            .iter()
            .map(|&j| values[j].round().max(0.0) as u64)
            .collect();
        let y = self
            .layout
            .y
            .iter()
            .map(|ys| {
                ys.iter()
                    .map(|row| row.iter().map(|v| v.map_or(0.0, |j| values[j])).collect())
                    .collect()
            })
            .collect();
        let f = self
            .layout
            .f
            .iter()
            .map(|fs| fs.iter().map(|&j| values[j]).collect())
            .collect();
        Solution { x, y, f, objective }
    }
}

/// Mean-demand model with integer relocations.
pub fn build_deterministic(
    instance: &Instance,
    d_avg: &[u64],
    options: ModelOptions,
) -> Result<BuiltModel> {
    instance.validate()?;
    instance.check_width(d_avg.len(), "average demand")?;
    Ok(build(instance, &[d_avg], &[1.0], options, true))
}

/// Extensive form over all scenarios with continuous recourse.
pub fn build_extensive(
    instance: &Instance,
    scenarios: &ScenarioSet,
    options: ModelOptions,
) -> Result<BuiltModel> {
    instance.validate()?;
    instance.check_width(scenarios.width(), "scenario set")?;
    let rows: Vec<&[u64]> = scenarios.demands().iter().map(|r| r.as_slice()).collect();
    Ok(build(instance, &rows, scenarios.probabilities(), options, false))
}

fn build(
    instance: &Instance,
    demands: &[&[u64]],
    probabilities: &[f64],
    options: ModelOptions,
    integer_flows: bool,
) -> BuiltModel {
    let n = instance.len();
    let mut lp = LinearProgram::new();
    let x: Vec<usize> = (0..n)
        .map(|i| {
            lp.add_int_var(
                format!("x_{}", instance.locations[i]),
                -instance.holding[i],
                0.0,
                f64::INFINITY,
            )
        })
        .collect();

    let mut ys = Vec::with_capacity(demands.len());
    let mut fs = Vec::with_capacity(demands.len());
    for (s, &p) in probabilities.iter().enumerate() {
        let y: Vec<Vec<Option<usize>>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        (i != j).then(|| {
                            let name = format!(
                                "y_{}_{}_s{s}",
                                instance.locations[i], instance.locations[j]
                            );
                            let obj = -p * instance.transfer[i][j];
                            if integer_flows {
                                lp.add_int_var(name, obj, 0.0, f64::INFINITY)
                            } else {
                                lp.add_var(name, obj, 0.0, f64::INFINITY)
                            }
                        })
                    })
                    .collect()
            })
            .collect();
        let f: Vec<usize> = (0..n)
            .map(|i| {
                lp.add_var(
                    format!("f_{}_s{s}", instance.locations[i]),
                    p * instance.revenue[i],
                    0.0,
                    f64::INFINITY,
                )
            })
            .collect();
        ys.push(y);
        fs.push(f);
    }

    lp.add_row(
        "capacity",
        x.iter().map(|&j| (j, 1.0)).collect(),
        Cmp::Le,
        instance.capacity as f64,
    );
    for (s, d) in demands.iter().enumerate() {
        let (y, f) = (&ys[s], &fs[s]);
        for i in 0..n {
            let id = instance.locations[i];
            let mut avail = vec![(f[i], 1.0), (x[i], -1.0)];
            avail.extend(availability_terms(y, i, options.variant));
            lp.add_row(format!("avail_{id}_s{s}"), avail, Cmp::Le, 0.0);
            let demand_cmp = if options.require_full_service {
                Cmp::Eq
            } else {
                Cmp::Le
            };
            lp.add_row(format!("demand_{id}_s{s}"), vec![(f[i], 1.0)], demand_cmp, d[i] as f64);
            let mut out: Vec<(usize, f64)> = y[i].iter().flatten().map(|&j| (j, 1.0)).collect();
            out.push((x[i], -1.0));
            lp.add_row(format!("outflow_{id}_s{s}"), out, Cmp::Le, 0.0);
        }
    }
    BuiltModel {
        program: lp,
        layout: Layout { x, y: ys, f: fs },
    }
}

/// Flow terms moved to the left of `f_i - x_i - ... <= 0`.
fn availability_terms(y: &[Vec<Option<usize>>], i: usize, variant: Variant) -> Vec<(usize, f64)> {
    let n = y.len();
    let mut terms = Vec::new();
    match variant {
        Variant::AsWritten => {
            terms.extend(y[i].iter().flatten().map(|&j| (j, -1.0)));
        }
        Variant::FlowCorrected => {
            terms.extend((0..n).filter_map(|k| y[k][i]).map(|j| (j, -1.0)));
            terms.extend(y[i].iter().flatten().map(|&j| (j, 1.0)));
        }
    }
    terms
}

/// Where a recourse row's right-hand side comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RhsSource {
    /// `x_i`
    Allocation(usize),
    /// `d_i`
    Demand(usize),
    /// `-d_i`
    NegDemand(usize),
}

impl RhsSource {
    pub fn location(&self) -> usize {
        match *self {
            RhsSource::Allocation(i) | RhsSource::Demand(i) | RhsSource::NegDemand(i) => i,
        }
    }
}

/// Second-stage LP of one scenario for a fixed allocation: variables
/// `(y, f)`, all rows `<=`, right-hand sides affine in `(x, d)`.
#[derive(Clone, Debug)]
pub struct Recourse {
    program: LinearProgram,
    sources: Vec<RhsSource>,
    n: usize,
    y: Vec<Vec<Option<usize>>>,
    f: Vec<usize>,
}

/// Solved recourse problem.
#[derive(Clone, Debug)]
pub enum RecourseOutcome {
    Optimal {
        value: f64,
        /// Row multipliers, aligned with [`Recourse::sources`].
        duals: Vec<f64>,
        y: Vec<Vec<f64>>,
        f: Vec<f64>,
    },
    /// No `(y, f)` satisfies the rows; carries an extreme ray of the dual
    /// (`A' r >= 0`, `r >= 0`, `r' b < 0`).
    Infeasible { ray: Vec<f64> },
}

impl Recourse {
    pub fn new(instance: &Instance, options: ModelOptions) -> Result<Self> {
        instance.validate()?;
        let n = instance.len();
        let mut lp = LinearProgram::new();
        let y: Vec<Vec<Option<usize>>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        (i != j).then(|| {
                            lp.add_var(
                                format!("y_{}_{}", instance.locations[i], instance.locations[j]),
                                -instance.transfer[i][j],
                                0.0,
                                f64::INFINITY,
                            )
                        })
                    })
                    .collect()
            })
            .collect();
        let f: Vec<usize> = (0..n)
            .map(|i| {
                lp.add_var(
                    format!("f_{}", instance.locations[i]),
                    instance.revenue[i],
                    0.0,
                    f64::INFINITY,
                )
            })
            .collect();
        let mut sources = Vec::new();
        for i in 0..n {
            let id = instance.locations[i];
            let mut avail = vec![(f[i], 1.0)];
            avail.extend(availability_terms(&y, i, options.variant));
            lp.add_row(format!("avail_{id}"), avail, Cmp::Le, 0.0);
            sources.push(RhsSource::Allocation(i));

            lp.add_row(format!("demand_{id}"), vec![(f[i], 1.0)], Cmp::Le, 0.0);
            sources.push(RhsSource::Demand(i));

            let out: Vec<(usize, f64)> = y[i].iter().flatten().map(|&j| (j, 1.0)).collect();
            lp.add_row(format!("outflow_{id}"), out, Cmp::Le, 0.0);
            sources.push(RhsSource::Allocation(i));

            if options.require_full_service {
                lp.add_row(format!("serve_{id}"), vec![(f[i], -1.0)], Cmp::Le, 0.0);
                sources.push(RhsSource::NegDemand(i));
            }
        }
        Ok(Recourse {
            program: lp,
            sources,
            n,
            y,
            f,
        })
    }

    pub fn sources(&self) -> &[RhsSource] {
        &self.sources
    }

    pub fn rhs(&self, x: &[f64], demand: &[u64]) -> Vec<f64> {
        self.sources
            .iter()
            .map(|s| match *s {
                RhsSource::Allocation(i) => x[i],
                RhsSource::Demand(i) => demand[i] as f64,
                RhsSource::NegDemand(i) => -(demand[i] as f64),
            })
            .collect()
    }

    /// The recourse LP with its right-hand side filled in.
    pub fn program(&self, x: &[f64], demand: &[u64]) -> LinearProgram {
        let mut lp = self.program.clone();
        let rhs = self.rhs(x, demand);
        lp.set_rhs(&rhs);
        lp
    }

    /// `(constant, coefficients)` such that `multipliers . rhs(x, d)`
    /// equals `constant + coefficients . x`.
    pub fn affine_in_x(&self, multipliers: &[f64], demand: &[u64]) -> (f64, Vec<f64>) {
        let mut constant = 0.0;
        let mut coeffs = vec![0.0; self.n];
        for (m, s) in multipliers.iter().zip(&self.sources) {
            match *s {
                RhsSource::Allocation(i) => coeffs[i] += m,
                RhsSource::Demand(i) => constant += m * demand[i] as f64,
                RhsSource::NegDemand(i) => constant -= m * demand[i] as f64,
            }
        }
        (constant, coeffs)
    }

    /// `true` when no variable links rows of different locations, so that
    /// the recourse value is a sum of per-location terms.
    pub fn is_location_separable(&self) -> bool {
        let mut owner: Vec<Option<usize>> = vec![None; self.program.num_vars()];
        for (row, source) in self.program.rows().iter().zip(&self.sources) {
            let loc = source.location();
            for &(j, _) in &row.coeffs {
                match owner[j] {
                    Some(l) if l != loc => return false,
                    _ => owner[j] = Some(loc),
                }
            }
        }
        true
    }

    /// [`Recourse::affine_in_x`] split by the location of each row:
    /// `(constant_i, coefficient of x_i)`.
    pub fn affine_by_location(&self, multipliers: &[f64], demand: &[u64]) -> Vec<(f64, f64)> {
        let mut parts = vec![(0.0, 0.0); self.n];
        for (m, s) in multipliers.iter().zip(&self.sources) {
            match *s {
                RhsSource::Allocation(i) => parts[i].1 += m,
                RhsSource::Demand(i) => parts[i].0 += m * demand[i] as f64,
                RhsSource::NegDemand(i) => parts[i].0 -= m * demand[i] as f64,
            }
        }
        parts
    }

    pub fn solve(&self, x: &[f64], demand: &[u64], opts: &SimplexOptions) -> Result<RecourseOutcome> {
        let lp = self.program(x, demand);
        let out = solve_lp_with(&lp, opts)?;
        match out.status {
            LpStatus::Optimal => {
                let y = self
                    .y
                    .iter()
                    .map(|row| row.iter().map(|v| v.map_or(0.0, |j| out.x[j])).collect())
                    .collect();
                let f = self.f.iter().map(|&j| out.x[j]).collect();
                Ok(RecourseOutcome::Optimal {
                    value: out.objective,
                    duals: out.duals,
                    y,
                    f,
                })
            }
            LpStatus::Infeasible => Ok(RecourseOutcome::Infeasible {
                ray: self.dual_ray(&lp, opts)?,
            }),
            LpStatus::Unbounded => Err(Error::Numeric("recourse problem reported unbounded".into())),
        }
    }

    /// Solves `min b'r  s.t. A'r >= c, r >= 0` and returns its unbounded ray.
    fn dual_ray(&self, primal: &LinearProgram, opts: &SimplexOptions) -> Result<Vec<f64>> {
        let mut dual = LinearProgram::new();
        let r: Vec<usize> = primal
            .rows()
            .iter()
            .map(|row| dual.add_var(format!("r_{}", row.name), -row.rhs, 0.0, f64::INFINITY))
            .collect();
        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); primal.num_vars()];
        for (k, row) in primal.rows().iter().enumerate() {
            for &(j, a) in &row.coeffs {
                cols[j].push((r[k], a));
            }
        }
        for (j, col) in cols.into_iter().enumerate() {
            let v = &primal.vars()[j];
            dual.add_row(format!("col_{}", v.name), col, Cmp::Ge, v.obj);
        }
        let out = solve_lp_with(&dual, opts)?;
        match out.status {
            LpStatus::Unbounded => Ok(out.ray),
            _ => Err(Error::Numeric(
                "infeasible recourse without an unbounded dual".into(),
            )),
        }
    }
}

impl LinearProgram {
    pub(crate) fn set_rhs(&mut self, rhs: &[f64]) {
        for (row, &b) in self.rows_mut().iter_mut().zip(rhs) {
            row.rhs = b;
        }
    }
}

/// `n` holding costs drawn from `N(mean, variance)` and floored at 0.01.
pub fn sample_holding_costs(n: usize, mean: f64, variance: f64, seed: u64) -> Result<Vec<f64>> {
    let normal = Normal::new(mean, variance.sqrt())
        .map_err(|e| Error::InvalidInput(format!("holding-cost law N({mean}, {variance}): {e}")))?;
    let mut rng = rng_from_seed(seed);
    Ok((0..n).map(|_| normal.sample(&mut rng).max(0.01)).collect())
}

/// Value of a fixed allocation across a scenario set.
#[derive(Clone, Debug, PartialEq)]
pub struct FirstStageValue {
    /// `sum_s p_s Q_s(x) - h . x`
    pub expected: f64,
    /// Recourse value `Q_s(x)` per scenario, holding cost excluded.
    pub per_scenario: Vec<f64>,
}

pub fn check_allocation(instance: &Instance, x: &[u64]) -> Result<()> {
    instance.check_width(x.len(), "allocation")?;
    let total: u64 = x.iter().sum();
    if total > instance.capacity {
        return Err(Error::Infeasible(format!(
            "allocation uses {total} cars, capacity is {}",
            instance.capacity
        )));
    }
    Ok(())
}

/// Fixes `x` and solves every scenario's recourse problem.
pub fn evaluate_first_stage(
    instance: &Instance,
    x: &[u64],
    scenarios: &ScenarioSet,
    options: ModelOptions,
    exec: Execution,
) -> Result<FirstStageValue> {
    check_allocation(instance, x)?;
    instance.check_width(scenarios.width(), "scenario set")?;
    let recourse = Recourse::new(instance, options)?;
    let xf: Vec<f64> = x.iter().map(|&v| v as f64).collect();
    let opts = SimplexOptions::default();
    let values = exec.map(scenarios.demands(), |s, d| {
        match recourse.solve(&xf, d, &opts)? {
            RecourseOutcome::Optimal { value, .. } => Ok(value),
            RecourseOutcome::Infeasible { .. } => Err(Error::Infeasible(format!(
                "allocation cannot serve scenario {s} in full"
            ))),
        }
    });
    let per_scenario = values.into_iter().collect::<Result<Vec<f64>>>()?;
    let recourse_mean: f64 = per_scenario
        .iter()
        .zip(scenarios.probabilities())
        .map(|(v, p)| p * v)
        .sum();
    Ok(FirstStageValue {
        expected: recourse_mean - instance.holding_cost(x),
        per_scenario,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::MipOptions;

    fn two_locations(capacity: u64) -> Instance {
        Instance::uniform(vec![1, 2], 100.0, vec![20.0, 20.0], 5.0, capacity).unwrap()
    }

    fn solve(m: &BuiltModel) -> Solution {
        m.solve(&MipOptions::default()).unwrap()
    }

    #[test]
    fn deterministic_flow_corrected() {
        let m = build_deterministic(&two_locations(10), &[6, 4], Variant::FlowCorrected.into()).unwrap();
        let sol = solve(&m);
        assert!((sol.objective - 800.0).abs() < 1e-6);
        assert_eq!(sol.x, vec![6, 4]);
        let m = build_deterministic(&two_locations(8), &[6, 4], Variant::FlowCorrected.into()).unwrap();
        assert!((solve(&m).objective - 640.0).abs() < 1e-6);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        assert!(build_deterministic(&two_locations(8), &[1], ModelOptions::default()).is_err());
    }

    #[test]
    fn single_location_two_scenarios() {
        let inst = Instance::uniform(vec![9], 100.0, vec![20.0], 5.0, 3).unwrap();
        let sc = ScenarioSet::uniform(vec![9], vec![vec![1], vec![3]]).unwrap();
        let sol = solve(&build_extensive(&inst, &sc, ModelOptions::default()).unwrap());
        assert!((sol.objective - 140.0).abs() < 1e-6);
        assert_eq!(sol.x, vec![3]);
        let v = evaluate_first_stage(&inst, &[3], &sc, ModelOptions::default(), Execution::Sequential).unwrap();
        assert!((v.expected - 140.0).abs() < 1e-9);
        assert_eq!(v.per_scenario.len(), 2);
    }

    #[test]
    fn zero_revenue_gives_zero() {
        let inst = Instance::uniform(vec![1, 2], 0.0, vec![1.0, 1.0], 1.0, 10).unwrap();
        let sc = ScenarioSet::uniform(vec![1, 2], vec![vec![3, 4]]).unwrap();
        let sol = solve(&build_extensive(&inst, &sc, ModelOptions::default()).unwrap());
        assert_eq!(sol.objective, 0.0);
        assert_eq!(sol.x, vec![0, 0]);
    }

    #[test]
    fn over_capacity_allocation_is_rejected() {
        let sc = ScenarioSet::uniform(vec![1, 2], vec![vec![3, 4]]).unwrap();
        let res = evaluate_first_stage(&two_locations(5), &[3, 3], &sc, ModelOptions::default(), Execution::Sequential);
        assert!(matches!(res, Err(Error::Infeasible(_))));
    }

    #[test]
    fn zero_allocation_earns_nothing() {
        let sc = ScenarioSet::uniform(vec![1, 2], vec![vec![3, 4], vec![0, 9]]).unwrap();
        for variant in [Variant::AsWritten, Variant::FlowCorrected] {
            let v = evaluate_first_stage(&two_locations(5), &[0, 0], &sc, variant.into(), Execution::Sequential).unwrap();
            assert_eq!(v.expected, 0.0);
        }
    }

    #[test]
    fn instance_csv_round_trip() {
        let mut inst = two_locations(15);
        inst.holding = vec![19.25, 21.0];
        inst.transfer[1][0] = 7.5;
        let mut buf = Vec::new();
        inst.write_csv(&mut buf).unwrap();
        assert_eq!(Instance::read_csv(buf.as_slice()).unwrap(), inst);
    }

    #[test]
    fn incomplete_instance_is_rejected() {
        let text = "field,from,to,value\ncapacity,,,3\nrevenue,1,,100\nholding,1,,2\nrevenue,2,,100\nholding,2,,2\ntransfer,1,2,5\n";
        assert!(Instance::read_csv(text.as_bytes()).is_err());
    }

    #[test]
    fn variant_parses() {
        assert_eq!("flow_corrected".parse::<Variant>().unwrap(), Variant::FlowCorrected);
        assert_eq!(Variant::AsWritten.to_string(), "as_written");
        assert!("sideways".parse::<Variant>().is_err());
    }

    #[test]
    fn full_service_recourse_gives_dual_ray() {
        let inst = Instance::uniform(vec![1], 100.0, vec![1.0], 5.0, 4).unwrap();
        let opts = ModelOptions {
            variant: Variant::AsWritten,
            require_full_service: true,
        };
        let rec = Recourse::new(&inst, opts).unwrap();
        // one location, no flows: f <= x, f <= d, f >= d; x = 2 < d = 5
        match rec.solve(&[2.0], &[5], &SimplexOptions::default()).unwrap() {
            RecourseOutcome::Infeasible { ray } => {
                let b = rec.rhs(&[2.0], &[5]);
                let rb: f64 = ray.iter().zip(&b).map(|(r, b)| r * b).sum();
                assert!(rb < 0.0);
                assert!(ray.iter().all(|&r| r >= -1e-12));
            }
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn separability_follows_the_variant() {
        let inst = Instance::uniform(vec![1, 2, 3], 100.0, vec![1.0; 3], 5.0, 9).unwrap();
        let sep = |variant: Variant| Recourse::new(&inst, variant.into()).unwrap().is_location_separable();
        assert!(sep(Variant::AsWritten));
        assert!(!sep(Variant::FlowCorrected));
    }

    #[test]
    fn location_pieces_sum_to_the_cut() {
        let inst = Instance::uniform(vec![1, 2], 100.0, vec![1.0, 2.0], 5.0, 9).unwrap();
        let rec = Recourse::new(&inst, ModelOptions::default()).unwrap();
        let d = [4, 1];
        let RecourseOutcome::Optimal { duals, .. } = rec.solve(&[1.0, 3.0], &d, &SimplexOptions::default()).unwrap() else {
            panic!()
        };
        let (c, g) = rec.affine_in_x(&duals, &d);
        let parts = rec.affine_by_location(&duals, &d);
        assert!((parts.iter().map(|p| p.0).sum::<f64>() - c).abs() < 1e-12);
        assert_eq!(parts.iter().map(|p| p.1).collect::<Vec<_>>(), g);
    }

    #[test]
    fn holding_costs_are_seeded_and_floored() {
        let a = sample_holding_costs(50, 20.0, 9.0, 7).unwrap();
        assert_eq!(a, sample_holding_costs(50, 20.0, 9.0, 7).unwrap());
        assert!(a.iter().all(|&h| h >= 0.01));
        assert!(sample_holding_costs(20, -5.0, 1.0, 1).unwrap().iter().all(|&h| h == 0.01));
        assert!(sample_holding_costs(3, 20.0, -1.0, 1).is_err());
    }
}
