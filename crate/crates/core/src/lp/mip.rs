use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::program::LinearProgram;
use super::simplex::{solve_bounded, LpStatus, SimplexOptions};
use crate::error::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MipStatus {
    Optimal,
    Infeasible,
    /// The root relaxation is unbounded.
    Unbounded,
    /// No solution beats [`MipOptions::cutoff`] by more than the gap.
    Cutoff,
}

#[derive(Clone, Debug)]
pub struct MipOutcome {
    pub status: MipStatus,
    /// Incumbent, with integer-flagged entries snapped to exact integers.
    pub x: Vec<f64>,
    pub objective: f64,
    /// LP relaxations solved.
    pub nodes: usize,
    /// Objective of the root relaxation.
    pub root_bound: f64,
    /// Proven upper bound on the optimum; exceeds `objective` by at most
    /// the pruning gap.
    pub best_bound: f64,
}

#[derive(Clone, Debug)]
pub struct MipOptions {
    pub lp: SimplexOptions,
    /// Nodes whose bound does not beat the incumbent by more than
    /// `max(absolute_gap, relative_gap * |incumbent|)` are pruned.
    pub absolute_gap: f64,
    pub relative_gap: f64,
    /// Objective value known to be attainable; only better solutions are
    /// searched for.
    pub cutoff: Option<f64>,
}

impl Default for MipOptions {
    fn default() -> Self {
        MipOptions {
            lp: SimplexOptions::default(),
            absolute_gap: 1e-6,
            relative_gap: 1e-9,
            cutoff: None,
        }
    }
}

pub fn solve_mip(program: &LinearProgram) -> Result<MipOutcome> {
    solve_mip_with(program, &MipOptions::default())
}

struct Node {
    bound: f64,
    id: usize,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // max-heap: best bound first, newest node first on ties so that plateaus
    // of equal bounds are searched depth-first
    fn cmp(&self, other: &Self) -> Ordering {
        self.bound
            .total_cmp(&other.bound)
            .then_with(|| self.id.cmp(&other.id))
    }
}

/// Best-first branch-and-bound over the integer-flagged variables. Branches
/// on the most fractional variable, lowest index on ties.
pub fn solve_mip_with(program: &LinearProgram, opts: &MipOptions) -> Result<MipOutcome> {
    program.validate()?;
    let int_tol = opts.lp.tol.integrality;
    let lower: Vec<f64> = program
        .vars()
        .iter()
        .map(|v| if v.integer { v.lower.ceil() } else { v.lower })
        .collect();
    let upper: Vec<f64> = program
        .vars()
        .iter()
        .map(|v| if v.integer { v.upper.floor() } else { v.upper })
        .collect();

    let mut heap = BinaryHeap::new();
    heap.push(Node {
        bound: f64::INFINITY,
        id: 0,
        lower,
        upper,
    });
    let mut next_id = 1;
    let mut nodes = 0;
    let mut root_bound = f64::NAN;
    let mut incumbent: Option<(Vec<f64>, f64)> = None;
    // largest bound of any pruned subtree
    let mut pruned = f64::NEG_INFINITY;

    let beats = |bound: f64, incumbent: &Option<(Vec<f64>, f64)>| {
        let best = match incumbent {
            Some((_, best)) => opts.cutoff.map_or(*best, |c| c.max(*best)),
            None => match opts.cutoff {
                Some(c) => c,
                None => return true,
            },
        };
        bound > best + opts.absolute_gap.max(opts.relative_gap * best.abs())
    };

    while let Some(node) = heap.pop() {
        if !beats(node.bound, &incumbent) {
            // every open node is bounded by this one
            pruned = pruned.max(node.bound);
            break;
        }
        let lp = solve_bounded(program, &node.lower, &node.upper, &opts.lp)?;
        nodes += 1;
        match lp.status {
            LpStatus::Infeasible => continue,
            LpStatus::Unbounded => {
                if node.id == 0 {
                    return Ok(MipOutcome {
                        status: MipStatus::Unbounded,
                        x: lp.x,
                        objective: f64::INFINITY,
                        nodes,
                        root_bound: f64::INFINITY,
                        best_bound: f64::INFINITY,
                    });
                }
                // a bounded root cannot have unbounded children
                continue;
            }
            LpStatus::Optimal => {}
        }
        if node.id == 0 {
            root_bound = lp.objective;
        }
        if !beats(lp.objective, &incumbent) {
            pruned = pruned.max(lp.objective);
            continue;
        }

        let branch = program
            .vars()
            .iter()
            .enumerate()
            .filter(|(_, v)| v.integer)
            .filter_map(|(j, _)| {
                let v = lp.x[j];
                let dist = (v - v.round()).abs();
                (dist > int_tol).then_some((j, dist))
            })
            // most fractional; `max_by` keeps the last maximum, so compare
            // indices in reverse to prefer the lowest one
            .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)));

        match branch {
            None => {
                let x = snap(program, lp.x);
                let obj = program.objective_value(&x);
                incumbent = Some((x, obj));
            }
            Some((j, _)) => {
                if node.id == 0 {
                    for candidate in rounding_heuristic(program, &node.lower, &node.upper, &lp.x, opts)? {
                        if beats(candidate.1, &incumbent) {
                            incumbent = Some(candidate);
                        }
                    }
                }
                let v = lp.x[j];
                let mut down_upper = node.upper.clone();
                down_upper[j] = v.floor();
                let mut up_lower = node.lower.clone();
                up_lower[j] = v.ceil();
                heap.push(Node {
                    bound: lp.objective,
                    id: next_id,
                    lower: node.lower.clone(),
                    upper: down_upper,
                });
                heap.push(Node {
                    bound: lp.objective,
                    id: next_id + 1,
                    lower: up_lower,
                    upper: node.upper,
                });
                next_id += 2;
            }
        }
    }

    Ok(match incumbent {
        Some((x, objective)) => MipOutcome {
            status: MipStatus::Optimal,
            x,
            objective,
            nodes,
            root_bound,
            best_bound: objective.max(pruned),
        },
        None if pruned > f64::NEG_INFINITY => MipOutcome {
            status: MipStatus::Cutoff,
            x: Vec::new(),
            objective: f64::NAN,
            nodes,
            root_bound,
            best_bound: pruned,
        },
        None => MipOutcome {
            status: MipStatus::Infeasible,
            x: Vec::new(),
            objective: f64::NAN,
            nodes,
            root_bound,
            best_bound: f64::NAN,
        },
    })
}

/// Rounds integer-flagged entries to exact integers.
fn snap(program: &LinearProgram, mut x: Vec<f64>) -> Vec<f64> {
    for (j, v) in program.vars().iter().enumerate() {
        if v.integer {
            x[j] = x[j].round();
        }
    }
    x
}

/// Fixes the integer variables at the floor and at the nearest integer of
/// the relaxation and re-solves for the continuous ones. Returns the
/// feasible results.
fn rounding_heuristic(
    program: &LinearProgram,
    lower: &[f64],
    upper: &[f64],
    relaxed: &[f64],
    opts: &MipOptions,
) -> Result<Vec<(Vec<f64>, f64)>> {
    let mut found = Vec::new();
    for round in [f64::floor, f64::round] {
        let mut lo = lower.to_vec();
        let mut hi = upper.to_vec();
        for (j, v) in program.vars().iter().enumerate() {
            if v.integer {
                let r = round(relaxed[j]).clamp(lower[j], upper[j]);
                lo[j] = r;
                hi[j] = r;
            }
        }
        let lp = solve_bounded(program, &lo, &hi, &opts.lp)?;
        if lp.status == LpStatus::Optimal {
            let x = snap(program, lp.x);
            let obj = program.objective_value(&x);
            found.push((x, obj));
        }
    }
    Ok(found)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::Cmp;

    #[test]
    fn floor_of_relaxation() {
        let mut lp = LinearProgram::new();
        let x = lp.add_int_var("x", 1.0, 0.0, f64::INFINITY);
        lp.add_row("cap", vec![(x, 1.0)], Cmp::Le, 2.5);
        let out = solve_mip(&lp).unwrap();
        assert_eq!(out.status, MipStatus::Optimal);
        assert_eq!(out.x[0], 2.0);
        assert_eq!(out.objective, 2.0);
    }

    #[test]
    fn binary_knapsack() {
        // max 5a + 4b, 3a + 2b <= 4, a,b in {0,1}
        let mut lp = LinearProgram::new();
        let a = lp.add_int_var("a", 5.0, 0.0, 1.0);
        let b = lp.add_int_var("b", 4.0, 0.0, 1.0);
        lp.add_row("w", vec![(a, 3.0), (b, 2.0)], Cmp::Le, 4.0);
        let out = solve_mip(&lp).unwrap();
        // enumeration: (0,0)=0, (0,1)=4, (1,0)=5, (1,1) infeasible
        assert_eq!(out.objective, 5.0);
        assert_eq!(out.x, vec![1.0, 0.0]);
    }

    #[test]
    fn integral_relaxation_needs_one_node() {
        let mut lp = LinearProgram::new();
        let x = lp.add_int_var("x", 1.0, 0.0, f64::INFINITY);
        let y = lp.add_int_var("y", 1.0, 0.0, f64::INFINITY);
        lp.add_row("c", vec![(x, 1.0), (y, 1.0)], Cmp::Le, 3.0);
        let out = solve_mip(&lp).unwrap();
        assert_eq!(out.nodes, 1);
        assert_eq!(out.objective, out.root_bound);
    }

    #[test]
    fn cutoff_above_optimum() {
        let mut lp = LinearProgram::new();
        let x = lp.add_int_var("x", 1.0, 0.0, f64::INFINITY);
        lp.add_row("cap", vec![(x, 1.0)], Cmp::Le, 2.5);
        let opts = MipOptions {
            cutoff: Some(2.0),
            ..Default::default()
        };
        let out = solve_mip_with(&lp, &opts).unwrap();
        assert_eq!(out.status, MipStatus::Cutoff);
        // the pruned bound is a relaxation value, so at least the optimum
        assert!(out.best_bound >= 2.0 && out.best_bound <= 2.5 + 1e-9);

        let opts = MipOptions {
            cutoff: Some(1.0),
            ..Default::default()
        };
        assert_eq!(solve_mip_with(&lp, &opts).unwrap().objective, 2.0);
    }

    #[test]
    fn integer_infeasible() {
        let mut lp = LinearProgram::new();
        let x = lp.add_int_var("x", 1.0, 0.0, f64::INFINITY);
        lp.add_row("lo", vec![(x, 1.0)], Cmp::Ge, 0.2);
        lp.add_row("hi", vec![(x, 1.0)], Cmp::Le, 0.8);
        assert_eq!(solve_mip(&lp).unwrap().status, MipStatus::Infeasible);
    }
}
