//! L-shaped decomposition of the two-stage model.
//!
//! The master holds the integer allocation `x` and recourse estimates `θ`
//! (one aggregate, or one per scenario with [`BendersOptions::multi_cut`]).
//! Served demand and flows live only in the per-scenario subproblems, whose
//! LP duals give optimality cuts `θ <= π . b(x, d)` and whose dual rays give
//! feasibility cuts `0 <= r . b(x, d)`. Everything is in maximization form,
//! so the master value is an upper bound and evaluated allocations give
//! lower bounds.

use std::io::Write;
use std::time::Instant;

use log::{debug, info};

use crate::density::ScenarioSet;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::lp::{
    solve_lp_with, solve_mip_with, Cmp, LinearProgram, LpStatus, MipOptions, MipStatus,
    SimplexOptions,
};
use crate::model::{
    check_allocation, Instance, ModelOptions, Recourse, RecourseOutcome, Solution, Variant,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CutKind {
    Optimality,
    Feasibility,
}

/// `θ <= constant + coeffs . x` (optimality) or `0 <= constant + coeffs . x`
/// (feasibility).
#[derive(Clone, Debug, PartialEq)]
pub struct Cut {
    pub kind: CutKind,
    pub coeffs: Vec<f64>,
    pub constant: f64,
    /// Generating scenario; `None` for an aggregated optimality cut.
    pub scenario: Option<usize>,
    /// Location whose share of the recourse value the cut bounds; `None`
    /// when it bounds the whole value.
    pub location: Option<usize>,
}

impl Cut {
    pub fn value_at(&self, x: &[f64]) -> f64 {
        self.constant + self.coeffs.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
    }
}

/// Solved subproblem of one scenario.
#[derive(Clone, Debug)]
pub enum SubproblemResult {
    /// `pieces` splits the cut by location, see
    /// [`Recourse::affine_by_location`].
    Optimal {
        value: f64,
        cut: Cut,
        pieces: Vec<(f64, f64)>,
    },
    Infeasible { cut: Cut },
}

/// Solves the recourse LP of scenario `scenario` at `x` and derives its cut.
pub fn solve_subproblem(
    recourse: &Recourse,
    scenario: usize,
    demand: &[u64],
    x: &[f64],
    opts: &SimplexOptions,
) -> Result<SubproblemResult> {
    match recourse.solve(x, demand, opts)? {
        RecourseOutcome::Optimal { value, duals, .. } => {
            let (constant, coeffs) = recourse.affine_in_x(&duals, demand);
            Ok(SubproblemResult::Optimal {
                value,
                cut: Cut {
                    kind: CutKind::Optimality,
                    coeffs,
                    constant,
                    scenario: Some(scenario),
                    location: None,
                },
                pieces: recourse.affine_by_location(&duals, demand),
            })
        }
        RecourseOutcome::Infeasible { ray } => {
            let (constant, coeffs) = recourse.affine_in_x(&ray, demand);
            Ok(SubproblemResult::Infeasible {
                cut: Cut {
                    kind: CutKind::Feasibility,
                    coeffs,
                    constant,
                    scenario: Some(scenario),
                    location: None,
                },
            })
        }
    }
}

#[derive(Clone, Debug)]
pub struct BendersOptions {
    pub model: ModelOptions,
    /// Stop once `UB - LB` drops below this; `None` picks
    /// `1e-6 * (1 + |first UB|)`.
    pub tolerance: Option<f64>,
    pub max_iter: usize,
    /// One `θ_s` per scenario instead of a single aggregate.
    pub multi_cut: bool,
    /// Without `multi_cut`, keep one `θ_i` per location when the recourse
    /// problem separates by location. Each aggregated cut is then added as
    /// its per-location pieces, which together imply it.
    pub split_locations: bool,
    /// Solve the master as an LP until its cuts stop improving it (or half of
    /// `max_iter` is used), then switch to the integer master. Only integer
    /// iterations can terminate the run or raise `LB`.
    pub lp_warmup: bool,
    pub exec: Execution,
    pub mip: MipOptions,
}

impl Default for BendersOptions {
    fn default() -> Self {
        BendersOptions {
            model: ModelOptions::default(),
            tolerance: None,
            max_iter: 500,
            multi_cut: false,
            split_locations: true,
            lp_warmup: true,
            exec: Execution::default(),
            mip: MipOptions::default(),
        }
    }
}

/// One row of the convergence log.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationLog {
    pub iter: usize,
    pub lower: f64,
    pub upper: f64,
    pub cuts_added: usize,
    pub master_time_s: f64,
    pub sub_time_s: f64,
}

#[derive(Clone, Debug)]
pub struct BendersState {
    pub iterations: usize,
    /// Best evaluated objective so far (running max).
    pub lower: f64,
    /// Best master bound so far (running min).
    pub upper: f64,
    pub tolerance: f64,
    pub cuts: Vec<Cut>,
    /// Allocation achieving `lower`.
    pub incumbent: Option<Vec<u64>>,
    pub log: Vec<IterationLog>,
}

#[derive(Clone, Debug)]
pub struct BendersResult {
    /// Incumbent allocation with its recourse flows; `objective` is the
    /// lower bound.
    pub solution: Solution,
    pub state: BendersState,
    /// `false` when `max_iter` ran out first.
    pub converged: bool,
}

/// What the master's recourse estimates are indexed by.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum ThetaLayout {
    Single,
    PerScenario,
    PerLocation,
}

impl ThetaLayout {
    fn slot(self, cut: &Cut) -> usize {
        match self {
            ThetaLayout::Single => 0,
            ThetaLayout::PerScenario => cut.scenario.expect("per-scenario cut"),
            ThetaLayout::PerLocation => cut.location.expect("per-location cut"),
        }
    }
}

struct Master {
    program: LinearProgram,
    layout: ThetaLayout,
    x: Vec<usize>,
    theta: Vec<usize>,
}

impl Master {
    fn new(instance: &Instance, scenarios: &ScenarioSet, caps: &[u64], layout: ThetaLayout) -> Master {
        let mut program = LinearProgram::new();
        let x: Vec<usize> = (0..instance.len())
            .map(|i| {
                program.add_int_var(
                    format!("x_{}", instance.locations[i]),
                    -instance.holding[i],
                    0.0,
                    caps[i] as f64,
                )
            })
            .collect();
        program.add_row(
            "capacity",
            x.iter().map(|&j| (j, 1.0)).collect(),
            Cmp::Le,
            instance.capacity as f64,
        );
        // the revenue of serving every demand bounds each recourse value
        let full_revenue: Vec<f64> = scenarios
            .demands()
            .iter()
            .map(|d| d.iter().zip(&instance.revenue).map(|(&d, r)| d as f64 * r).sum())
            .collect();
        let probs = scenarios.probabilities();
        let theta = match layout {
            ThetaLayout::PerScenario => full_revenue
                .iter()
                .zip(probs)
                .enumerate()
                .map(|(s, (&ub, &p))| program.add_var(format!("theta_{s}"), p, f64::NEG_INFINITY, ub))
                .collect(),
            ThetaLayout::Single => {
                let ub = full_revenue.iter().zip(probs).map(|(v, p)| v * p).sum();
                vec![program.add_var("theta", 1.0, f64::NEG_INFINITY, ub)]
            }
            ThetaLayout::PerLocation => (0..instance.len())
                .map(|i| {
                    let ub: f64 = scenarios
                        .demands()
                        .iter()
                        .zip(probs)
                        .map(|(d, p)| p * d[i] as f64 * instance.revenue[i])
                        .sum();
                    program.add_var(format!("theta_{}", instance.locations[i]), 1.0, f64::NEG_INFINITY, ub)
                })
                .collect(),
        };
        Master {
            program,
            layout,
            x,
            theta,
        }
    }

    fn add_cut(&mut self, cut: &Cut, name: String) {
        let mut row: Vec<(usize, f64)> = self
            .x
            .iter()
            .zip(&cut.coeffs)
            .filter(|(_, &a)| a != 0.0)
            .map(|(&j, &a)| (j, -a))
            .collect();
        if cut.kind == CutKind::Optimality {
            row.push((self.theta[self.layout.slot(cut)], 1.0));
        }
        self.program.add_row(name, row, Cmp::Le, cut.constant);
    }

    /// `((x, θ), proven bound on the master optimum)`; no point when
    /// nothing beats `mip.cutoff`.
    #[allow(clippy::type_complexity)]
    fn solve(&self, relaxed: bool, mip: &MipOptions) -> Result<(Option<(Vec<f64>, Vec<f64>)>, f64)> {
        let (status, values, bound) = if relaxed {
            let out = solve_lp_with(&self.program, &mip.lp)?;
            let status = match out.status {
                LpStatus::Optimal => MipStatus::Optimal,
                LpStatus::Infeasible => MipStatus::Infeasible,
                LpStatus::Unbounded => MipStatus::Unbounded,
            };
            (status, out.x, out.objective)
        } else {
            let out = solve_mip_with(&self.program, mip)?;
            (out.status, out.x, out.best_bound)
        };
        match status {
            MipStatus::Optimal => Ok((
                Some((
                    self.x.iter().map(|&j| values[j]).collect(),
                    self.theta.iter().map(|&j| values[j]).collect(),
                )),
                bound,
            )),
            MipStatus::Cutoff => Ok((None, bound)),
            MipStatus::Infeasible => Err(Error::Infeasible(
                "no allocation has feasible recourse in every scenario".into(),
            )),
            MipStatus::Unbounded => Err(Error::Numeric("master problem is unbounded".into())),
        }
    }
}

/// Largest useful allocation per location. Some optimal allocation stays
/// within these bounds: under [`Variant::AsWritten`] cars beyond the largest
/// local demand can neither serve nor move usefully, and under
/// [`Variant::FlowCorrected`] no location can dispatch more cars than the
/// largest total demand.
pub fn allocation_caps(instance: &Instance, scenarios: &ScenarioSet, variant: Variant) -> Vec<u64> {
    let peak: Vec<u64> = (0..scenarios.width())
        .map(|i| scenarios.demands().iter().map(|d| d[i]).max().unwrap_or(0))
        .collect();
    match variant {
        Variant::AsWritten => peak.iter().map(|&m| m.min(instance.capacity)).collect(),
        Variant::FlowCorrected => {
            let total = peak.iter().sum::<u64>().min(instance.capacity);
            vec![total; peak.len()]
        }
    }
}

/// Mean demand clipped to the caps and scaled down to fit the capacity.
fn starting_point(instance: &Instance, scenarios: &ScenarioSet, caps: &[u64]) -> Vec<u64> {
    let mean: Vec<u64> = scenarios.mean_demand().iter().zip(caps).map(|(&m, &c)| m.min(c)).collect();
    let total: u64 = mean.iter().sum();
    if total <= instance.capacity {
        return mean;
    }
    let scale = instance.capacity as f64 / total as f64;
    mean.iter().map(|&m| (m as f64 * scale).floor() as u64).collect()
}

/// Integer allocation near a fractional one, within caps and capacity.
fn round_allocation(x: &[f64], caps: &[u64], capacity: u64) -> Vec<u64> {
    let mut xu: Vec<u64> = x
        .iter()
        .zip(caps)
        .map(|(v, &c)| (v.round().max(0.0) as u64).min(c))
        .collect();
    // drop the rounded-up units, largest fractional parts last
    let mut order: Vec<usize> = (0..x.len()).filter(|&i| xu[i] as f64 > x[i]).collect();
    order.sort_by(|&a, &b| (x[a] - x[a].floor()).total_cmp(&(x[b] - x[b].floor())));
    let mut excess = xu.iter().sum::<u64>().saturating_sub(capacity);
    for i in order {
        if excess == 0 {
            break;
        }
        xu[i] -= 1;
        excess -= 1;
    }
    xu
}

/// Cuts generated at one point: feasibility cuts if any scenario is
/// infeasible, otherwise one aggregate or one per scenario, along with the
/// expected recourse value.
struct Separation {
    cuts: Vec<Cut>,
    expected: Option<f64>,
}

fn separate(
    recourse: &Recourse,
    scenarios: &ScenarioSet,
    x: &[f64],
    layout: ThetaLayout,
    opts: &BendersOptions,
) -> Result<Separation> {
    let results = opts
        .exec
        .map(scenarios.demands(), |s, d| solve_subproblem(recourse, s, d, x, &opts.mip.lp));
    let results = results.into_iter().collect::<Result<Vec<_>>>()?;
    // cuts go in scenario order whatever order the subproblems ran in
    let feasibility: Vec<Cut> = results
        .iter()
        .filter_map(|r| match r {
            SubproblemResult::Infeasible { cut } => Some(cut.clone()),
            SubproblemResult::Optimal { .. } => None,
        })
        .collect();
    if !feasibility.is_empty() {
        return Ok(Separation {
            cuts: feasibility,
            expected: None,
        });
    }
    let probs = scenarios.probabilities();
    let n = x.len();
    let mut expected = 0.0;
    let mut cuts = Vec::with_capacity(results.len());
    let mut agg = Cut {
        kind: CutKind::Optimality,
        coeffs: vec![0.0; n],
        constant: 0.0,
        scenario: None,
        location: None,
    };
    let mut agg_pieces = vec![(0.0, 0.0); n];
    for (r, p) in results.into_iter().zip(probs) {
        if let SubproblemResult::Optimal { value, cut, pieces } = r {
            expected += p * value;
            agg.constant += p * cut.constant;
            for (a, c) in agg.coeffs.iter_mut().zip(&cut.coeffs) {
                *a += p * c;
            }
            for (a, c) in agg_pieces.iter_mut().zip(&pieces) {
                a.0 += p * c.0;
                a.1 += p * c.1;
            }
            cuts.push(cut);
        }
    }
    let cuts = match layout {
        ThetaLayout::PerScenario => cuts,
        ThetaLayout::Single => vec![agg],
        ThetaLayout::PerLocation => agg_pieces
            .into_iter()
            .enumerate()
            .map(|(i, (constant, slope))| {
                let mut coeffs = vec![0.0; n];
                coeffs[i] = slope;
                Cut {
                    kind: CutKind::Optimality,
                    coeffs,
                    constant,
                    scenario: None,
                    location: Some(i),
                }
            })
            .collect(),
    };
    Ok(Separation {
        cuts,
        expected: Some(expected),
    })
}

/// Rounds of secant cuts tried before each integer master.
const SECANT_ROUNDS: usize = 10;

struct Secants {
    cuts: Vec<Cut>,
    /// `floor(x)` with its expected recourse value, when every scenario is
    /// feasible there.
    floor: Option<(Vec<u64>, f64)>,
}

/// For a separable recourse, the expected recourse of location `i` is
/// concave in `x_i`, so over integer `x_i` it lies below the chord through
/// `floor(x_i)` and `floor(x_i) + 1`. Returns those chords for the locations
/// in `fractional`, together with the ordinary cuts at both end points.
fn integer_secants(
    recourse: &Recourse,
    scenarios: &ScenarioSet,
    x: &[f64],
    fractional: &[usize],
    opts: &BendersOptions,
) -> Result<Secants> {
    let lo: Vec<f64> = x.iter().map(|v| v.floor().max(0.0)).collect();
    let hi: Vec<f64> = lo.iter().map(|v| v + 1.0).collect();
    let at_lo = separate(recourse, scenarios, &lo, ThetaLayout::PerLocation, opts)?;
    let at_hi = separate(recourse, scenarios, &hi, ThetaLayout::PerLocation, opts)?;
    let floor = at_lo
        .expected
        .map(|e| (lo.iter().map(|&v| v as u64).collect(), e));
    let mut cuts = Vec::new();
    if at_lo.expected.is_some() && at_hi.expected.is_some() {
        for &i in fractional {
            // per-location cuts are tight where they were generated
            let v_lo = at_lo.cuts[i].value_at(&lo);
            let v_hi = at_hi.cuts[i].value_at(&hi);
            let slope = v_hi - v_lo;
            let mut coeffs = vec![0.0; x.len()];
            coeffs[i] = slope;
            cuts.push(Cut {
                kind: CutKind::Optimality,
                coeffs,
                constant: v_lo - slope * lo[i],
                scenario: None,
                location: Some(i),
            });
        }
    }
    cuts.extend(at_lo.cuts);
    cuts.extend(at_hi.cuts);
    Ok(Secants { cuts, floor })
}

/// How far `(x, θ)` violates `cut`; positive means cut off.
fn violation(cut: &Cut, layout: ThetaLayout, x: &[f64], theta: &[f64]) -> f64 {
    let lhs = match cut.kind {
        CutKind::Feasibility => 0.0,
        CutKind::Optimality => theta[layout.slot(cut)],
    };
    lhs - cut.value_at(x)
}

/// Runs the decomposition until `UB - LB < ξ` or `max_iter` masters have
/// been solved.
///
/// The master starts from cuts taken at the capacity-scaled mean demand. While
/// it is solved as an LP, cuts are separated at the midpoint between the
/// master optimum and a stability center and only fall back to the optimum
/// itself when the midpoint cut does not cut it off.
pub fn run(instance: &Instance, scenarios: &ScenarioSet, opts: &BendersOptions) -> Result<BendersResult> {
    instance.validate()?;
    if scenarios.width() != instance.len() {
        return Err(Error::Dimension(format!(
            "scenario set has {} locations, instance has {}",
            scenarios.width(),
            instance.len()
        )));
    }
    if let Some(xi) = opts.tolerance {
        if !(xi > 0.0 && xi.is_finite()) {
            return Err(Error::InvalidInput(format!("tolerance must be positive, got {xi}")));
        }
    }
    if opts.max_iter == 0 {
        return Err(Error::InvalidInput("max_iter must be at least 1".into()));
    }

    let recourse = Recourse::new(instance, opts.model)?;
    let feas_tol = opts.mip.lp.tol.feasibility;
    let caps = allocation_caps(instance, scenarios, opts.model.variant);
    let layout = if opts.multi_cut {
        ThetaLayout::PerScenario
    } else if opts.split_locations && recourse.is_location_separable() {
        ThetaLayout::PerLocation
    } else {
        ThetaLayout::Single
    };
    let mut master = Master::new(instance, scenarios, &caps, layout);
    let mut state = BendersState {
        iterations: 0,
        lower: f64::NEG_INFINITY,
        upper: f64::INFINITY,
        tolerance: opts.tolerance.unwrap_or(f64::NAN),
        cuts: Vec::new(),
        incumbent: None,
        log: Vec::new(),
    };
    let add_cuts = |master: &mut Master, state: &mut BendersState, cuts: Vec<Cut>| {
        for cut in cuts {
            master.add_cut(&cut, format!("cut_{}", state.cuts.len()));
            state.cuts.push(cut);
        }
    };

    let x0 = starting_point(instance, scenarios, &caps);
    let x0f: Vec<f64> = x0.iter().map(|&v| v as f64).collect();
    let start = separate(&recourse, scenarios, &x0f, layout, opts)?;
    if let Some(expected) = start.expected {
        state.lower = expected - instance.holding_cost(&x0);
        state.incumbent = Some(x0);
    }
    add_cuts(&mut master, &mut state, start.cuts);

    let mut mip = opts.mip.clone();
    let mut center = x0f;
    let mut converged = false;
    let mut relaxed = opts.lp_warmup;
    let update_lower = |state: &mut BendersState, xu: Vec<u64>, expected: f64| {
        let objective = expected - instance.holding_cost(&xu);
        if objective > state.lower {
            state.lower = objective;
            state.incumbent = Some(xu);
        }
    };

    while state.iterations < opts.max_iter {
        state.iterations += 1;
        let iter = state.iterations;

        let mut round_master_s = 0.0;
        let mut round_sub_s = 0.0;
        if !relaxed && layout == ThetaLayout::PerLocation {
            let int_tol = opts.mip.lp.tol.integrality;
            for _ in 0..SECANT_ROUNDS {
                let t = Instant::now();
                let (point, _) = master.solve(true, &mip)?;
                round_master_s += t.elapsed().as_secs_f64();
                let Some((xl, _)) = point else { break };
                let fractional: Vec<usize> = (0..xl.len())
                    .filter(|&i| (xl[i] - xl[i].round()).abs() > int_tol)
                    .collect();
                if fractional.is_empty() {
                    break;
                }
                let t = Instant::now();
                let found = integer_secants(&recourse, scenarios, &xl, &fractional, opts)?;
                round_sub_s += t.elapsed().as_secs_f64();
                if let Some((xu, expected)) = found.floor {
                    update_lower(&mut state, xu, expected);
                }
                add_cuts(&mut master, &mut state, found.cuts);
            }
        }
        if !relaxed && state.lower.is_finite() {
            mip.cutoff = Some(state.lower);
        }
        let t0 = Instant::now();
        let (point, bound) = master.solve(relaxed, &mip)?;
        let master_time_s = t0.elapsed().as_secs_f64() + round_master_s;
        state.upper = state.upper.min(bound);
        if state.tolerance.is_nan() {
            state.tolerance = 1e-6 * (1.0 + state.upper.abs());
        }
        // a master solved to a tenth of ξ keeps UB within reach of LB
        mip.absolute_gap = opts.mip.absolute_gap.max(0.1 * state.tolerance);
        let Some((x, theta)) = point else {
            // nothing beats the incumbent: UB is now within the gap of LB
            debug!("benders iter {iter}: master cut off at LB {}", state.lower);
            state.log.push(IterationLog {
                iter,
                lower: state.lower,
                upper: state.upper,
                cuts_added: 0,
                master_time_s,
                sub_time_s: round_sub_s,
            });
            converged = true;
            break;
        };
        let cut_tol = feas_tol * (1.0 + theta.iter().map(|t| t.abs()).fold(0.0, f64::max));

        let t1 = Instant::now();
        let mut new_cuts: Vec<Cut> = Vec::new();
        if relaxed {
            let mid: Vec<f64> = x.iter().zip(&center).map(|(a, b)| 0.5 * (a + b)).collect();
            let sep = separate(&recourse, scenarios, &mid, layout, opts)?;
            new_cuts = sep
                .cuts
                .into_iter()
                .filter(|c| violation(c, layout, &x, &theta) > cut_tol)
                .collect();
            if !new_cuts.is_empty() {
                center = mid;
            }
        }
        if new_cuts.is_empty() {
            let sep = separate(&recourse, scenarios, &x, layout, opts)?;
            if let (Some(expected), false) = (sep.expected, relaxed) {
                update_lower(&mut state, x.iter().map(|v| v.round().max(0.0) as u64).collect(), expected);
            }
            new_cuts = sep
                .cuts
                .into_iter()
                .filter(|c| violation(c, layout, &x, &theta) > cut_tol)
                .collect();
        }
        let sub_time_s = t1.elapsed().as_secs_f64() + round_sub_s;

        let gap = state.upper - state.lower;
        debug!(
            "benders iter {iter}: LB {} UB {} gap {gap:.3e} cuts {}",
            state.lower,
            state.upper,
            new_cuts.len()
        );
        state.log.push(IterationLog {
            iter,
            lower: state.lower,
            upper: state.upper,
            cuts_added: new_cuts.len(),
            master_time_s,
            sub_time_s,
        });
        // no violated cut means the master already prices x exactly, so the
        // remaining gap is within the master's own tolerance
        let settled = new_cuts.is_empty();
        if !relaxed && (gap < state.tolerance || settled) {
            converged = true;
            break;
        }
        add_cuts(&mut master, &mut state, new_cuts);
        if relaxed && (settled || iter >= opts.max_iter / 2) {
            debug!("benders iter {iter}: switching to the integer master");
            relaxed = false;
            // cuts slack at the last LP optimum only slow down branch-and-bound
            master = Master::new(instance, scenarios, &caps, layout);
            let tol = feas_tol * (1.0 + state.upper.abs());
            for (k, cut) in state.cuts.iter().enumerate() {
                if cut.kind == CutKind::Feasibility || violation(cut, layout, &x, &theta) >= -tol {
                    master.add_cut(cut, format!("cut_{k}"));
                }
            }
            // a rounded LP optimum is usually a strong first incumbent
            let xr = round_allocation(&x, &caps, instance.capacity);
            let xrf: Vec<f64> = xr.iter().map(|&v| v as f64).collect();
            let sep = separate(&recourse, scenarios, &xrf, layout, opts)?;
            if let Some(expected) = sep.expected {
                update_lower(&mut state, xr, expected);
            }
            add_cuts(&mut master, &mut state, sep.cuts);
        }
    }

    let incumbent = state.incumbent.clone().ok_or_else(|| {
        Error::Infeasible(format!(
            "no allocation with feasible recourse found in {} iterations",
            state.iterations
        ))
    })?;
    info!(
        "benders finished after {} iterations: LB {} UB {} ({})",
        state.iterations,
        state.lower,
        state.upper,
        if converged { "converged" } else { "iteration limit" }
    );
    let solution = recover_solution(instance, scenarios, &recourse, &incumbent, state.lower, &opts.mip.lp)?;
    Ok(BendersResult {
        solution,
        state,
        converged,
    })
}

/// Re-solves the recourse problems at `x` to report flows.
fn recover_solution(
    instance: &Instance,
    scenarios: &ScenarioSet,
    recourse: &Recourse,
    x: &[u64],
    objective: f64,
    opts: &SimplexOptions,
) -> Result<Solution> {
    check_allocation(instance, x)?;
    let xf: Vec<f64> = x.iter().map(|&v| v as f64).collect();
    let mut y = Vec::with_capacity(scenarios.len());
    let mut f = Vec::with_capacity(scenarios.len());
    for d in scenarios.demands() {
        match recourse.solve(&xf, d, opts)? {
            RecourseOutcome::Optimal { y: ys, f: fs, .. } => {
                y.push(ys);
                f.push(fs);
            }
            RecourseOutcome::Infeasible { .. } => {
                return Err(Error::Numeric("incumbent lost recourse feasibility".into()))
            }
        }
    }
    Ok(Solution {
        x: x.to_vec(),
        y,
        f,
        objective,
    })
}

/// Writes `iter,LB,UB,cuts_added,master_time_s,sub_time_s`.
pub fn write_convergence_csv<W: Write>(log: &[IterationLog], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["iter", "LB", "UB", "cuts_added", "master_time_s", "sub_time_s"])?;
    for row in log {
        w.write_record([
            row.iter.to_string(),
            row.lower.to_string(),
            row.upper.to_string(),
            row.cuts_added.to_string(),
            row.master_time_s.to_string(),
            row.sub_time_s.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
