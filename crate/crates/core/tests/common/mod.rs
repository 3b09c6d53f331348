//! Independent oracles shared by the integration tests. None of them call
//! into the solver under test.

#![allow(dead_code)]

use fleet_sp::model::{Instance, Variant};
use rand::Rng;

/// Best integer `(x, y)` of the single-scenario model by brute force, with
/// served demand `f_i = min(d_i, availability_i)`. Returns the profit and
/// the allocation. Exponential; meant for two or three locations.
pub fn enumerate_deterministic(instance: &Instance, demand: &[u64], variant: Variant) -> (f64, Vec<u64>) {
    let n = instance.len();
    let cap = instance.capacity;
    let mut best = (f64::NEG_INFINITY, Vec::new());
    let mut x = vec![0u64; n];
    loop {
        if x.iter().sum::<u64>() <= cap {
            let value = best_flows(instance, demand, variant, &x);
            if value > best.0 {
                best = (value, x.clone());
            }
        }
        // odometer over 0..=cap per location
        let mut k = 0;
        while k < n && x[k] == cap {
            x[k] = 0;
            k += 1;
        }
        if k == n {
            break;
        }
        x[k] += 1;
    }
    best
}

/// Best recourse profit minus holding cost for a fixed integer `x`,
/// enumerating every integer flow pattern with `sum_j y_ij <= x_i`.
fn best_flows(instance: &Instance, demand: &[u64], variant: Variant, x: &[u64]) -> f64 {
    let n = instance.len();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
        .collect();
    let mut y = vec![0u64; pairs.len()];
    let mut best = f64::NEG_INFINITY;
    loop {
        let mut out = vec![0u64; n];
        let mut inflow = vec![0u64; n];
        for (&(i, j), &v) in pairs.iter().zip(&y) {
            out[i] += v;
            inflow[j] += v;
        }
        if (0..n).all(|i| out[i] <= x[i]) {
            let mut profit = 0.0;
            let mut ok = true;
            for i in 0..n {
                let avail = match variant {
                    Variant::AsWritten => (x[i] + out[i]) as i64,
                    Variant::FlowCorrected => x[i] as i64 + inflow[i] as i64 - out[i] as i64,
                };
                if avail < 0 {
                    ok = false;
                    break;
                }
                let served = (demand[i] as i64).min(avail) as f64;
                profit += instance.revenue[i] * served - instance.holding[i] * x[i] as f64;
            }
            for (&(i, j), &v) in pairs.iter().zip(&y) {
                profit -= instance.transfer[i][j] * v as f64;
            }
            if ok && profit > best {
                best = profit;
            }
        }
        let mut k = 0;
        while k < y.len() && y[k] == x[pairs[k].0] {
            y[k] = 0;
            k += 1;
        }
        if k == y.len() {
            break;
        }
        y[k] += 1;
    }
    best
}

/// `max c.x` over `rows` and `x >= 0` by enumerating every vertex.
/// Returns `None` when no vertex is feasible.
pub fn vertex_enumeration(c: &[f64], rows: &[OracleRow]) -> Option<f64> {
    let n = c.len();
    // each candidate tight set picks n constraints among rows and x_j = 0
    let mut planes: Vec<(Vec<f64>, f64)> = rows.iter().map(|r| (r.a.clone(), r.b)).collect();
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        planes.push((e, 0.0));
    }
    let mut best: Option<f64> = None;
    for subset in combinations(planes.len(), n) {
        let a: Vec<Vec<f64>> = subset.iter().map(|&k| planes[k].0.clone()).collect();
        let b: Vec<f64> = subset.iter().map(|&k| planes[k].1).collect();
        let Some(x) = solve_square(a, b) else { continue };
        let feasible = x.iter().all(|&v| v >= -1e-9) && rows.iter().all(|r| r.satisfied(&x, 1e-9));
        if feasible {
            let v: f64 = c.iter().zip(&x).map(|(a, b)| a * b).sum();
            best = Some(best.map_or(v, |b: f64| b.max(v)));
        }
    }
    best
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug)]
pub struct OracleRow {
    pub a: Vec<f64>,
    pub sense: Sense,
    pub b: f64,
}

impl OracleRow {
    pub fn activity(&self, x: &[f64]) -> f64 {
        self.a.iter().zip(x).map(|(a, b)| a * b).sum()
    }

    pub fn satisfied(&self, x: &[f64], tol: f64) -> bool {
        let v = self.activity(x);
        match self.sense {
            Sense::Le => v <= self.b + tol,
            Sense::Ge => v >= self.b - tol,
            Sense::Eq => (v - self.b).abs() <= tol,
        }
    }
}

/// Random feasible, bounded LP over `n` nonnegative variables: rows are
/// built around a random point so it satisfies all of them, and a final
/// `sum x <= cap` row bounds the region.
pub fn random_lp<R: Rng>(rng: &mut R, n: usize, m: usize) -> (Vec<f64>, Vec<OracleRow>) {
    let c: Vec<f64> = (0..n).map(|_| rng.random_range(-5..=9) as f64).collect();
    let x0: Vec<f64> = (0..n).map(|_| rng.random_range(0..=4) as f64).collect();
    let mut rows = Vec::with_capacity(m + 1);
    for _ in 0..m {
        let a: Vec<f64> = (0..n).map(|_| rng.random_range(-4..=6) as f64).collect();
        let v: f64 = a.iter().zip(&x0).map(|(a, b)| a * b).sum();
        let slack = rng.random_range(0..=5) as f64;
        let (sense, b) = match rng.random_range(0..6) {
            0 => (Sense::Eq, v),
            1 | 2 => (Sense::Ge, v - slack),
            _ => (Sense::Le, v + slack),
        };
        rows.push(OracleRow { a, sense, b });
    }
    let total: f64 = x0.iter().sum();
    rows.push(OracleRow {
        a: vec![1.0; n],
        sense: Sense::Le,
        b: total + rng.random_range(0..=6) as f64,
    });
    (c, rows)
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

/// Gaussian elimination with partial pivoting; `None` when singular.
fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        let (pivot_row, pivot_b) = (a[col].clone(), b[col]);
        for (r, (row, br)) in a.iter_mut().zip(b.iter_mut()).enumerate() {
            if r != col {
                let f = row[col] / pivot_row[col];
                for (v, p) in row[col..].iter_mut().zip(&pivot_row[col..]) {
                    *v -= f * p;
                }
                *br -= f * pivot_b;
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance
/// `eps`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, eps: f64) -> f64 {
    fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
    }
    #[allow(clippy::too_many_arguments)]
    fn rec<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        m: f64,
        fm: f64,
        whole: f64,
        eps: f64,
        depth: u32,
    ) -> f64 {
        let (lm, flm, left) = simpson(f, a, fa, m, fm);
        let (rm, frm, right) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * eps {
            return left + right + delta / 15.0;
        }
        rec(f, a, fa, m, fm, lm, flm, left, eps / 2.0, depth - 1)
            + rec(f, m, fm, b, fb, rm, frm, right, eps / 2.0, depth - 1)
    }
    let (fa, fb) = (f(a), f(b));
    let (m, fm, whole) = simpson(f, a, fa, b, fb);
    rec(f, a, fa, b, fb, m, fm, whole, eps, 50)
}

/// Random instance: integer-valued costs so that optima are exact in
/// binary floating point.
pub fn random_instance<R: Rng>(rng: &mut R, n: usize, capacity: u64) -> Instance {
    let locations: Vec<u32> = (1..=n as u32).collect();
    let revenue = (0..n).map(|_| rng.random_range(40..=150) as f64).collect();
    let holding = (0..n).map(|_| rng.random_range(1..=40) as f64).collect();
    let transfer = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { 0.0 } else { rng.random_range(0..=20) as f64 })
                .collect()
        })
        .collect();
    Instance::new(locations, revenue, holding, transfer, capacity).expect("valid instance")
}
