use std::collections::VecDeque;

use super::measure::{r_k, AtomicYoungMeasure};
use crate::error::{arg, Error, Result};

/// Largest support the exact solver accepts on either side.
pub const MAX_KR_ATOMS: usize = 10_000;

const MASS_BITS: i32 = 40;

/// Weight `r` entering the ground metric.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum KrWeight {
    One,
    /// `r_k` with the given `k`.
    Rk(usize),
}

/// `min(‖p - q‖, 1) + |r_q - r_p|`.
pub fn ground_distance(p: &[f64], q: &[f64], rp: f64, rq: f64) -> f64 {
    let d = p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    d.min(1.0) + (rq - rp).abs()
}

/// A finitely supported measure given by points, masses and weights `r`.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedPoints {
    pub points: Vec<Vec<f64>>,
    pub masses: Vec<f64>,
    pub r: Vec<f64>,
}

impl WeightedPoints {
    pub fn from_measure(eta: &AtomicYoungMeasure, weight: KrWeight) -> Self {
        let atoms = eta.atoms();
        Self {
            points: atoms.iter().map(|a| a.flatten()).collect(),
            masses: atoms.iter().map(|a| a.weight).collect(),
            r: atoms
                .iter()
                .map(|a| match weight {
                    KrWeight::One => 1.0,
                    KrWeight::Rk(k) => r_k(&a.v, k),
                })
                .collect(),
        }
    }
}

/// Kantorovich–Rubinstein distance of two Young measures under the ground
/// metric on flattened `(t, x, v)`.
pub fn kr_distance(mu: &AtomicYoungMeasure, nu: &AtomicYoungMeasure, weight: KrWeight) -> Result<f64> {
    if mu.domain_dim() != nu.domain_dim() || mu.target_dim() != nu.target_dim() {
        return arg("measures live on different jet spaces");
    }
    kr_distance_points(&WeightedPoints::from_measure(mu, weight), &WeightedPoints::from_measure(nu, weight))
}

/// Exact optimal transport cost between two weighted point sets of equal
/// mass.
pub fn kr_distance_points(a: &WeightedPoints, b: &WeightedPoints) -> Result<f64> {
    for s in [a, b] {
        if s.points.len() != s.masses.len() || s.points.len() != s.r.len() {
            return arg("point, mass and weight arrays differ in length");
        }
        if s.points.len() > MAX_KR_ATOMS {
            return Err(Error::Resource(format!("{} atoms exceed the limit of {MAX_KR_ATOMS}", s.points.len())));
        }
        if s.masses.iter().any(|m| !(*m >= 0.0) || !m.is_finite()) {
            return arg("masses must be finite and non-negative");
        }
    }
    let dim = a.points.first().or(b.points.first()).map_or(0, |p| p.len());
    if a.points.iter().chain(&b.points).any(|p| p.len() != dim) {
        return arg("points have inconsistent dimensions");
    }
    let (ma, mb) = (a.masses.iter().sum::<f64>(), b.masses.iter().sum::<f64>());
    if (ma - mb).abs() > 1e-10 {
        return arg(format!("mass mismatch: {ma} vs {mb}"));
    }
    let ia: Vec<usize> = (0..a.points.len()).filter(|&i| a.masses[i] > 0.0).collect();
    let ib: Vec<usize> = (0..b.points.len()).filter(|&j| b.masses[j] > 0.0).collect();
    if ia.is_empty() || ib.is_empty() {
        return Ok(0.0);
    }
    let scale = 2f64.powi(MASS_BITS);
    let total = ((ma + mb) / 2.0 * scale).round() as i64;
    let sa = integer_masses(&ia.iter().map(|&i| a.masses[i]).collect::<Vec<_>>(), total);
    let sb = integer_masses(&ib.iter().map(|&j| b.masses[j]).collect::<Vec<_>>(), total);
    // Atoms lighter than the resolution drop out.
    let (ia, sa): (Vec<usize>, Vec<i64>) = ia.into_iter().zip(sa).filter(|p| p.1 > 0).unzip();
    let (ib, sb): (Vec<usize>, Vec<i64>) = ib.into_iter().zip(sb).filter(|p| p.1 > 0).unzip();
    let cost = |i: usize, j: usize| {
        let (p, q) = (ia[i], ib[j]);
        ground_distance(&a.points[p], &b.points[q], a.r[p], b.r[q])
    };
    let value = solve_transport(&sa, &sb, &cost)?;
    Ok(value / scale)
}

// Largest-remainder rounding of `w · total / Σw` to integers summing to
// `total`.
fn integer_masses(w: &[f64], total: i64) -> Vec<i64> {
    let s: f64 = w.iter().sum();
    let exact: Vec<f64> = w.iter().map(|x| x / s * total as f64).collect();
    let mut out: Vec<i64> = exact.iter().map(|x| x.floor() as i64).collect();
    let mut short = total - out.iter().sum::<i64>();
    let mut order: Vec<usize> = (0..w.len()).collect();
    order.sort_by(|&i, &j| {
        let (fi, fj) = (exact[i] - exact[i].floor(), exact[j] - exact[j].floor());
        fj.total_cmp(&fi).then(i.cmp(&j))
    });
    let mut k = 0;
    while short > 0 {
        out[order[k % order.len()]] += 1;
        short -= 1;
        k += 1;
    }
    while short < 0 {
        let i = order[order.len() - 1 - (k % order.len())];
        if out[i] > 0 {
            out[i] -= 1;
            short += 1;
        }
        k += 1;
    }
    out
}

struct Basis {
    // (source, sink, flow)
    cells: Vec<(usize, usize, i64)>,
    adj: Vec<Vec<usize>>,
    ns: usize,
}

impl Basis {
    fn node_of_sink(&self, j: usize) -> usize {
        self.ns + j
    }

    fn other(&self, e: usize, node: usize) -> usize {
        let (i, j, _) = self.cells[e];
        if node == i {
            self.ns + j
        } else {
            i
        }
    }

    fn remove(&mut self, e: usize) {
        let (i, j, _) = self.cells[e];
        let sink = self.node_of_sink(j);
        self.adj[i].retain(|&x| x != e);
        self.adj[sink].retain(|&x| x != e);
    }

    fn attach(&mut self, e: usize) {
        let (i, j, _) = self.cells[e];
        let sink = self.node_of_sink(j);
        self.adj[i].push(e);
        self.adj[sink].push(e);
    }
}

/// Transportation simplex on integer supplies and demands with equal totals.
///
/// Supplies are perturbed (`K·a_i + 1`, last demand `K·b + n_s`) so every
/// basis is non-degenerate; the optimal perturbed basis is then re-solved
/// with the original data, where it stays feasible and optimal.
pub(crate) fn solve_transport(supply: &[i64], demand: &[i64], cost: &dyn Fn(usize, usize) -> f64) -> Result<f64> {
    let (ns, nt) = (supply.len(), demand.len());
    let nodes = ns + nt;
    let dense = ns * nt <= 4_000_000;
    let table: Vec<f64> = if dense {
        (0..ns * nt).map(|k| cost(k / nt, k % nt)).collect()
    } else {
        Vec::new()
    };
    let c = |i: usize, j: usize| if dense { table[i * nt + j] } else { cost(i, j) };
    let cmax = if dense { table.iter().fold(0.0f64, |m, x| m.max(*x)) } else { 1.0 };
    let eps = 1e-11 * cmax.max(1.0);

    let k = (ns as u64 + 1).next_power_of_two() as i64;
    let pa: Vec<i64> = supply.iter().map(|s| s * k + 1).collect();
    let mut pb: Vec<i64> = demand.iter().map(|d| d * k).collect();
    pb[nt - 1] += ns as i64;

    // Northwest corner.
    let mut basis = Basis { cells: Vec::with_capacity(nodes), adj: vec![Vec::new(); nodes], ns };
    {
        let (mut i, mut j) = (0, 0);
        let (mut ra, mut rb) = (pa[0], pb[0]);
        loop {
            let f = ra.min(rb);
            basis.cells.push((i, j, f));
            let e = basis.cells.len() - 1;
            basis.attach(e);
            ra -= f;
            rb -= f;
            if i == ns - 1 && j == nt - 1 {
                break;
            }
            if ra == 0 && i < ns - 1 {
                i += 1;
                ra = pa[i];
            } else {
                j += 1;
                rb = pb[j];
            }
        }
    }
    if basis.cells.len() != nodes - 1 {
        return Err(Error::Invariant("initial basis is not a spanning tree".into()));
    }

    let mut pot = vec![0.0f64; nodes];
    let mut seen = vec![false; nodes];
    let mut parent = vec![usize::MAX; nodes];
    let mut queue = VecDeque::with_capacity(nodes);
    let mut row_ptr = 0usize;
    let block_rows = (ns / 8).max(1);
    let cap = 50 * nodes * nodes + 1000;
    let mut iterations = 0usize;
    loop {
        iterations += 1;
        if iterations > cap {
            return Err(Error::Resource("transportation simplex exceeded its pivot budget".into()));
        }
        // Potentials with u_0 = 0 and u_i + v_j = c_ij on the basis.
        seen.iter_mut().for_each(|s| *s = false);
        queue.clear();
        queue.push_back(0);
        seen[0] = true;
        pot[0] = 0.0;
        while let Some(node) = queue.pop_front() {
            for &e in &basis.adj[node] {
                let other = basis.other(e, node);
                if !seen[other] {
                    seen[other] = true;
                    let (i, j, _) = basis.cells[e];
                    pot[other] = c(i, j) - pot[node];
                    queue.push_back(other);
                }
            }
        }

        // Block pricing.
        let mut best: Option<(usize, usize, f64)> = None;
        for r in 0..ns {
            let i = (row_ptr + r) % ns;
            for j in 0..nt {
                let red = c(i, j) - pot[i] - pot[ns + j];
                if red < -eps && best.is_none_or(|b| red < b.2) {
                    best = Some((i, j, red));
                }
            }
            if best.is_some() && r + 1 >= block_rows {
                row_ptr = (i + 1) % ns;
                break;
            }
        }
        let Some((p, q, _)) = best else { break };

        // Path in the tree from source p to sink q.
        seen.iter_mut().for_each(|s| *s = false);
        queue.clear();
        queue.push_back(p);
        seen[p] = true;
        let target = ns + q;
        while let Some(node) = queue.pop_front() {
            if node == target {
                break;
            }
            for &e in &basis.adj[node] {
                let other = basis.other(e, node);
                if !seen[other] {
                    seen[other] = true;
                    parent[other] = e;
                    queue.push_back(other);
                }
            }
        }
        let mut path = Vec::new();
        let mut node = target;
        while node != p {
            let e = parent[node];
            path.push(e);
            node = basis.other(e, node);
        }
        // Edges at even positions from the sink end lose flow.
        let mut theta = i64::MAX;
        let mut leave = usize::MAX;
        for (pos, &e) in path.iter().enumerate() {
            if pos % 2 == 0 && basis.cells[e].2 < theta {
                theta = basis.cells[e].2;
                leave = e;
            }
        }
        for (pos, &e) in path.iter().enumerate() {
            if pos % 2 == 0 {
                basis.cells[e].2 -= theta;
            } else {
                basis.cells[e].2 += theta;
            }
        }
        basis.remove(leave);
        basis.cells[leave] = (p, q, theta);
        basis.attach(leave);
    }

    // Re-solve the optimal basis with the unperturbed data by peeling leaves.
    let mut rem: Vec<i64> = supply.iter().copied().chain(demand.iter().map(|d| -d)).collect();
    let mut degree: Vec<usize> = basis.adj.iter().map(|a| a.len()).collect();
    let mut alive = vec![true; basis.cells.len()];
    let mut flow = vec![0i64; basis.cells.len()];
    let mut leaves: Vec<usize> = (0..nodes).filter(|&v| degree[v] == 1).collect();
    while let Some(leaf) = leaves.pop() {
        if degree[leaf] != 1 {
            continue;
        }
        let Some(&e) = basis.adj[leaf].iter().find(|&&e| alive[e]) else { continue };
        let (i, j, _) = basis.cells[e];
        let other = basis.other(e, leaf);
        let x = if leaf == i { rem[i] } else { -rem[ns + j] };
        flow[e] = x;
        rem[i] -= x;
        rem[ns + j] += x;
        alive[e] = false;
        degree[leaf] -= 1;
        degree[other] -= 1;
        if degree[other] == 1 {
            leaves.push(other);
        }
    }
    if flow.iter().any(|&x| x < 0) || rem.iter().any(|&r| r != 0) {
        return Err(Error::Invariant("optimal basis is infeasible for the original masses".into()));
    }
    let mut total = 0.0;
    for (e, &(i, j, _)) in basis.cells.iter().enumerate() {
        if flow[e] > 0 {
            total += flow[e] as f64 * c(i, j);
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::component_rng;
    use rand::Rng;

    // Every permutation assignment, for uniform masses of equal count.
    fn brute_assignment(c: &[Vec<f64>]) -> f64 {
        fn rec(c: &[Vec<f64>], row: usize, used: &mut Vec<bool>, acc: f64, best: &mut f64) {
            if row == c.len() {
                *best = best.min(acc);
                return;
            }
            for j in 0..c.len() {
                if !used[j] {
                    used[j] = true;
                    rec(c, row + 1, used, acc + c[row][j], best);
                    used[j] = false;
                }
            }
        }
        let mut best = f64::INFINITY;
        rec(c, 0, &mut vec![false; c.len()], 0.0, &mut best);
        best
    }

    #[test]
    fn matches_brute_force_assignment() {
        let mut rng = component_rng(11, "kr-assignment");
        for n in 1..=6 {
            for _ in 0..20 {
                let c: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| rng.gen_range(0.0..1.0)).collect()).collect();
                let got = solve_transport(&vec![1; n], &vec![1; n], &|i, j| c[i][j]).unwrap();
                assert!((got - brute_assignment(&c)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn degenerate_problems_terminate() {
        // Zero costs on a grid and all-equal costs are maximally degenerate.
        let v = solve_transport(&[3, 3, 3, 3], &[2, 2, 2, 2, 2, 2], &|_, _| 1.0).unwrap();
        assert_eq!(v, 12.0);
        let v = solve_transport(&[5, 5], &[5, 5], &|i, j| if i == j { 0.0 } else { 1.0 }).unwrap();
        assert_eq!(v, 0.0);
        let v = solve_transport(&[4, 1], &[1, 4], &|i, j| (i as f64 - j as f64).abs()).unwrap();
        assert_eq!(v, 3.0);
    }

    #[test]
    fn integer_rounding_preserves_totals() {
        let w = [0.1, 0.2, 0.3, 0.4 + 1e-13];
        let t = 1i64 << 40;
        let m = integer_masses(&w, t);
        assert_eq!(m.iter().sum::<i64>(), t);
    }

    #[test]
    fn shape_and_mass_errors() {
        let a = WeightedPoints { points: vec![vec![0.0]], masses: vec![1.0], r: vec![1.0] };
        let b = WeightedPoints { points: vec![vec![0.0]], masses: vec![0.9], r: vec![1.0] };
        assert!(matches!(kr_distance_points(&a, &b), Err(Error::Argument(_))));
        let big = WeightedPoints {
            points: vec![vec![0.0]; MAX_KR_ATOMS + 1],
            masses: vec![1.0 / (MAX_KR_ATOMS + 1) as f64; MAX_KR_ATOMS + 1],
            r: vec![1.0; MAX_KR_ATOMS + 1],
        };
        assert!(matches!(kr_distance_points(&a, &big), Err(Error::Resource(_))));
    }
}
