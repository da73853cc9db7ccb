//! Analytic per-gate minimization and the sweep engine.
//!
//! A single-gate cost is the quadratic `q^T J q` on the unit 3-sphere, minimized
//! by the eigenvector of the least eigenvalue. A controlled-gate cost adds a
//! linear term, `q^T J q + 2 a^T q + b`; its constrained stationary points are
//! `q = sum_i c_i n_i` with `c_i = a.n_i / (Lambda - r_i)` at roots of the secular
//! function `f(Lambda) = sum_i (a.n_i / (Lambda - r_i))^2 - 1`. The solver locates
//! interval minima of `f` by ternary search, brackets and bisects its roots (at
//! most 8), handles the degenerate hard case, and returns the best candidate.

use std::cell::RefCell;

use thiserror::Error;

use crate::ansatz::{Circuit, UpdateUnit};
use crate::gates::Quaternion;
use crate::landscape::{
    estimate_controlled, estimate_pair, estimate_single, ControlledConfiguration, LandscapeError,
    Mat4, PairConfiguration, Vec4, EXACT_RESIDUAL_LIMIT,
};

#[derive(Debug, Error)]
pub enum OptimizeError {
    #[error(transparent)]
    Landscape(#[from] LandscapeError),
    #[error("tomography residual {residual:.3e} exceeds exact-mode limit {limit:.1e}")]
    ResidualTooLarge { residual: f64, limit: f64 },
    #[error("exact-mode cost increased by {increase:.3e} at sweep {sweep} unit {unit}")]
    MonotonicityViolated {
        increase: f64,
        sweep: usize,
        unit: usize,
    },
    #[error("update unit refers to gate {gate} of incompatible kind")]
    UnitMismatch { gate: usize },
    #[error(transparent)]
    Sim(#[from] crate::simulator::SimError),
}

/// One constrained stationary point selected as the optimum.
#[derive(Debug, Clone, Copy)]
pub struct SecularSolution {
    /// Lagrange multiplier of the winning candidate.
    pub lambda: f64,
    pub q_star: Quaternion,
    /// Model value at `q_star`.
    pub value: f64,
    /// Whether the winner came from the degenerate (hard-case) branch.
    pub hard_case: bool,
    /// `|f(lambda)|` for a secular root; zero for hard-case candidates.
    pub root_residual: f64,
}

const ROOT_TARGET: f64 = 1e-12;
const MAX_BISECT: usize = 200;

struct Pole {
    rho: f64,
    weight_sqr: f64,
}

fn secular(poles: &[Pole], lambda: f64) -> f64 {
    poles
        .iter()
        .map(|p| p.weight_sqr / ((lambda - p.rho) * (lambda - p.rho)))
        .sum::<f64>()
        - 1.0
}

fn secular_prime(poles: &[Pole], lambda: f64) -> f64 {
    poles
        .iter()
        .map(|p| -2.0 * p.weight_sqr / (lambda - p.rho).powi(3))
        .sum()
}

// Safeguarded Newton on a bracket where f changes sign: Newton proposals that
// leave the current bracket fall back to bisection. Returns the iterate with
// the smallest |f|.
fn refine_root(poles: &[Pole], mut lo: f64, mut hi: f64, f_lo: f64) -> (f64, f64) {
    let mut sign_lo = f_lo.is_sign_positive();
    let mut x = 0.5 * (lo + hi);
    let mut best = (x, f64::INFINITY);
    for _ in 0..MAX_BISECT {
        let fx = secular(poles, x);
        if fx.abs() < best.1 {
            best = (x, fx.abs());
        }
        if fx.abs() < ROOT_TARGET {
            break;
        }
        if fx.is_sign_positive() == sign_lo {
            lo = x;
            sign_lo = fx.is_sign_positive();
        } else {
            hi = x;
        }
        let dfx = secular_prime(poles, x);
        let newton = x - fx / dfx;
        x = if dfx != 0.0 && newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (hi - lo) < f64::EPSILON * (lo.abs() + hi.abs()) && x == 0.5 * (lo + hi) {
            break;
        }
    }
    best
}

/// Global minimizer of `q^T J q + 2 a^T q + b` over unit quaternions.
pub fn minimize_quadratic_sphere(j: &Mat4, a: &Vec4, b: f64) -> SecularSolution {
    let sym = (j + j.transpose()) * 0.5;
    let eig = nalgebra::SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..4).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[x].total_cmp(&eig.eigenvalues[y]));
    let r: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let n: Vec<Vec4> = order
        .iter()
        .map(|&i| eig.eigenvectors.column(i).into_owned())
        .collect();
    let d: Vec<f64> = n.iter().map(|v| a.dot(v)).collect();

    let model = |q: &Vec4| (q.transpose() * sym * q)[0] + 2.0 * a.dot(q) + b;

    let eps_deg = 1e-12 * (1.0 + a.norm());
    // Clusters with weights below this are additionally routed through the
    // hard-case branch: their secular root sits so close to the pole that f is
    // steepness-limited there, while the hard-case candidate is accurate to
    // O(weight^2) in value.
    let eps_near = 1e-6 * (1.0 + a.norm());
    let spectral_radius = r[0].abs().max(r[3].abs());
    let cluster_tol = 1e-10 * spectral_radius;

    // Cluster near-degenerate eigenvalues; each cluster is one pole with the
    // combined squared weight.
    let mut clusters: Vec<(f64, Vec<usize>)> = Vec::new();
    for i in 0..4 {
        match clusters.last_mut() {
            Some((rho, members)) if (r[i] - *rho).abs() <= cluster_tol => members.push(i),
            _ => clusters.push((r[i], vec![i])),
        }
    }
    let weights: Vec<f64> = clusters
        .iter()
        .map(|(_, members)| members.iter().map(|&i| d[i] * d[i]).sum())
        .collect();
    let active: Vec<bool> = weights.iter().map(|w| w.sqrt() > eps_deg).collect();
    let poles: Vec<Pole> = clusters
        .iter()
        .zip(&weights)
        .zip(&active)
        .filter(|(_, &act)| act)
        .map(|(((rho, _), &w), _)| Pole {
            rho: *rho,
            weight_sqr: w,
        })
        .collect();

    // Candidate stationary points as coefficient vectors in the eigenbasis.
    let mut candidates: Vec<(f64, Vec4, bool, f64)> = Vec::new();

    let coefficients = |lambda: f64| -> Vec4 {
        let mut c = Vec4::zeros();
        for i in 0..4 {
            let gap = lambda - r[i];
            c[i] = if d[i].abs() <= eps_deg && gap.abs() < 1e-300 {
                0.0
            } else {
                d[i] / gap
            };
        }
        c
    };

    if !poles.is_empty() {
        let total_w = poles.iter().map(|p| p.weight_sqr).sum::<f64>().sqrt();
        let rho_min = poles[0].rho;
        let rho_max = poles[poles.len() - 1].rho;

        // Outer roots: f is monotone on (-inf, rho_min) and (rho_max, +inf) with
        // f -> -1 at infinity and +inf at the pole.
        let far = total_w + 1.0;
        for left in [true, false] {
            let pole = if left { rho_min } else { rho_max };
            let outer = if left { pole - far } else { pole + far };
            // Walk toward the pole until f is positive (f at the far end is < 0).
            let mut near = outer;
            let mut delta = far;
            for _ in 0..300 {
                delta *= 0.5;
                let probe = if left { pole - delta } else { pole + delta };
                if secular(&poles, probe) > 0.0 {
                    near = probe;
                    break;
                }
            }
            let (lo, hi) = if left { (outer, near) } else { (near, outer) };
            if lo >= hi || secular(&poles, lo) * secular(&poles, hi) > 0.0 {
                continue;
            }
            let (root, residual) = refine_root(&poles, lo, hi, secular(&poles, lo));
            candidates.push((root, coefficients(root), residual > 1e-10, residual));
        }

        // Interior intervals between consecutive active poles: locate the unique
        // minimum by ternary search, then bisect a root on each side when the
        // minimum dips below zero.
        for w in poles.windows(2) {
            let (left_pole, right_pole) = (w[0].rho, w[1].rho);
            let width = right_pole - left_pole;
            if width <= 0.0 {
                continue;
            }
            let mut x1 = left_pole + 1e-11 * width;
            let mut x2 = right_pole - 1e-11 * width;
            // Shrinking by 1/3 per step reaches the 1e-13 width target in under
            // 80 iterations; the cap guards against sub-ulp pole gaps.
            for _ in 0..200 {
                if x2 - x1 <= 1e-13 * width {
                    break;
                }
                let m1 = x1 + (x2 - x1) / 3.0;
                let m2 = x2 - (x2 - x1) / 3.0;
                if m1 <= x1 || m2 >= x2 {
                    break;
                }
                if secular(&poles, m1) < secular(&poles, m2) {
                    x2 = m2;
                } else {
                    x1 = m1;
                }
            }
            let s = 0.5 * (x1 + x2);
            let fs = secular(&poles, s);
            if fs.abs() <= ROOT_TARGET {
                candidates.push((s, coefficients(s), fs.abs() > 1e-10, fs.abs()));
            } else if fs < 0.0 {
                // Left root: walk toward the pole until f > 0.
                let mut lo = s;
                let mut step = s - left_pole;
                for _ in 0..300 {
                    step *= 0.5;
                    let probe = left_pole + step;
                    if secular(&poles, probe) > 0.0 {
                        lo = probe;
                        break;
                    }
                }
                if secular(&poles, lo) > 0.0 {
                    let (root, residual) = refine_root(&poles, lo, s, secular(&poles, lo));
                    candidates.push((root, coefficients(root), residual > 1e-10, residual));
                }
                // Right root.
                let mut hi = s;
                let mut step = right_pole - s;
                for _ in 0..300 {
                    step *= 0.5;
                    let probe = right_pole - step;
                    if secular(&poles, probe) > 0.0 {
                        hi = probe;
                        break;
                    }
                }
                if secular(&poles, hi) > 0.0 {
                    let (root, residual) = refine_root(&poles, s, hi, fs);
                    candidates.push((root, coefficients(root), residual > 1e-10, residual));
                }
            }
        }
    }

    // Hard case: a cluster with (numerically) no linear component admits
    // Lambda = rho with a free coefficient along the cluster directions. Near-
    // degenerate clusters get the same candidates as a safeguard (see eps_near).
    for ((rho, members), weight) in clusters.iter().zip(&weights) {
        if weight.sqrt() > eps_near {
            continue;
        }
        let mut c = Vec4::zeros();
        let mut outside_norm_sqr = 0.0;
        let mut valid = true;
        for i in 0..4 {
            if members.contains(&i) {
                continue;
            }
            let gap = rho - r[i];
            if d[i].abs() <= eps_deg {
                c[i] = 0.0;
            } else if gap.abs() < 1e-300 {
                valid = false;
                break;
            } else {
                c[i] = d[i] / gap;
            }
            outside_norm_sqr += c[i] * c[i];
        }
        if !valid {
            continue;
        }
        let free_sqr = 1.0 - outside_norm_sqr;
        if free_sqr < -1e-12 {
            continue;
        }
        let free = free_sqr.max(0.0).sqrt();
        for sign in [1.0, -1.0] {
            let mut cand = c;
            cand[members[0]] = sign * free;
            candidates.push((*rho, cand, true, 0.0));
        }
    }

    // Evaluate all candidates with the model; lowest value wins, ties go to the
    // smallest multiplier.
    let mut best: Option<(f64, f64, Vec4, bool, f64)> = None;
    for (lambda, c, hard, residual) in candidates {
        let mut q = Vec4::zeros();
        for i in 0..4 {
            q += n[i] * c[i];
        }
        let norm = q.norm();
        if norm < 1e-8 {
            continue;
        }
        q /= norm;
        let value = model(&q);
        let key = (value, lambda);
        let better = match &best {
            None => true,
            Some((bv, bl, ..)) => key.0 < *bv || (key.0 == *bv && key.1 < *bl),
        };
        if better {
            best = Some((value, lambda, q, hard, residual));
        }
    }

    let (value, lambda, q, hard_case, root_residual) =
        best.expect("the constrained minimum always exists on the sphere");
    SecularSolution {
        lambda,
        q_star: Quaternion::new(q[0], q[1], q[2], q[3]),
        value,
        hard_case,
        root_residual,
    }
}

/// Global maximizer, via minimizing the negated model.
pub fn maximize_quadratic_sphere(j: &Mat4, a: &Vec4, b: f64) -> SecularSolution {
    let sol = minimize_quadratic_sphere(&(-j), &(-a), -b);
    SecularSolution {
        value: -sol.value,
        ..sol
    }
}

/// Stencil configurations used by the tomography calls of the sweep engine.
#[derive(Debug, Clone)]
pub struct TomographyConfigs {
    pub controlled: ControlledConfiguration,
    pub pair: PairConfiguration,
}

impl Default for TomographyConfigs {
    fn default() -> Self {
        TomographyConfigs {
            controlled: ControlledConfiguration::standard(),
            pair: PairConfiguration::standard(),
        }
    }
}

/// A black-box circuit cost. Implementations are exact unless stated otherwise.
pub trait CostFunction {
    fn cost(&self, circuit: &Circuit) -> f64;

    /// Called at the start of each 1-based sweep (and once before the initial
    /// cost record). Returns true when the cost functional changed at this
    /// boundary, as with a local-to-global compilation switch.
    fn begin_sweep(&mut self, _sweep: usize) -> bool {
        false
    }

    /// Whether `cost` returns noiseless values; enables runtime consistency checks.
    fn is_exact(&self) -> bool {
        true
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SweepOptions {
    pub sweeps: usize,
    /// Inner-iteration improvement threshold of the pair alternation.
    pub scf_threshold: f64,
    /// Solve each per-gate model for its maximum instead of its minimum.
    pub maximize: bool,
}

impl SweepOptions {
    pub fn new(sweeps: usize) -> Self {
        SweepOptions {
            sweeps,
            scf_threshold: 1e-10,
            maximize: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryRecord {
    pub sweep: usize,
    /// 1-based position in the schedule; 0 for the initial record.
    pub unit: usize,
    pub cost: f64,
    pub evaluations: u64,
}

/// Cost after every update unit, with cumulative evaluation counts.
#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub records: Vec<TrajectoryRecord>,
    /// First sweep evaluated with the post-switch cost functional, if any.
    pub switch_sweep: Option<usize>,
}

impl Trajectory {
    pub fn final_cost(&self) -> f64 {
        self.records.last().expect("trajectory never empty").cost
    }

    pub fn total_evaluations(&self) -> u64 {
        self.records.last().map_or(0, |r| r.evaluations)
    }

    /// Largest single-step cost increase, per cost-functional segment (steps
    /// across a switch boundary are not compared).
    pub fn max_step_increase(&self) -> f64 {
        let mut worst = f64::NEG_INFINITY;
        for w in self.records.windows(2) {
            if let Some(s) = self.switch_sweep {
                if w[1].sweep == s && w[1].unit == 1 {
                    continue;
                }
            }
            worst = worst.max(w[1].cost - w[0].cost);
        }
        worst
    }
}

fn solve(j: &Mat4, a: &Vec4, b: f64, maximize: bool) -> SecularSolution {
    if maximize {
        maximize_quadratic_sphere(j, a, b)
    } else {
        minimize_quadratic_sphere(j, a, b)
    }
}

fn check_residual(residual: f64, exact: bool) -> Result<(), OptimizeError> {
    if exact && residual > EXACT_RESIDUAL_LIMIT {
        return Err(OptimizeError::ResidualTooLarge {
            residual,
            limit: EXACT_RESIDUAL_LIMIT,
        });
    }
    Ok(())
}

fn improvement(old: f64, new: f64, maximize: bool) -> f64 {
    if maximize {
        new - old
    } else {
        old - new
    }
}

/// Updates one single or controlled/number-preserving gate analytically:
/// tomography (10 or 14 evaluations), eigen or secular solve, write-back.
/// Returns the model-predicted post-update cost.
pub fn update_single_gate(
    circuit: &mut Circuit,
    unit: UpdateUnit,
    cost: &dyn CostFunction,
    configs: &TomographyConfigs,
    maximize: bool,
) -> Result<f64, OptimizeError> {
    match unit {
        UpdateUnit::Single { gate } => {
            if !matches!(circuit.gate(gate).kind, crate::ansatz::GateKind::Single) {
                return Err(OptimizeError::UnitMismatch { gate });
            }
            let current = circuit.gate(gate).quaternion();
            let work = RefCell::new(circuit.clone());
            let model = estimate_single(|q: &Quaternion| {
                let mut w = work.borrow_mut();
                w.gate_mut(gate).params = Some(*q);
                cost.cost(&w)
            });
            check_residual(model.residual, cost.is_exact())?;
            let sol = solve(&model.j, &Vec4::zeros(), 0.0, maximize);
            let pre = model.predict(&current);
            if cost.is_exact() && improvement(pre, sol.value, maximize) < -1e-8 {
                return Err(OptimizeError::MonotonicityViolated {
                    increase: -improvement(pre, sol.value, maximize),
                    sweep: 0,
                    unit: gate,
                });
            }
            // The single-gate cost is sign-invariant; pick the canonical sign.
            circuit.gate_mut(gate).params = Some(sol.q_star.canonicalized());
            Ok(sol.value)
        }
        UpdateUnit::Controlled { gate } => {
            if !circuit.gate(gate).kind.is_parameterized()
                || matches!(circuit.gate(gate).kind, crate::ansatz::GateKind::Single)
            {
                return Err(OptimizeError::UnitMismatch { gate });
            }
            let current = circuit.gate(gate).quaternion();
            let work = RefCell::new(circuit.clone());
            let model = estimate_controlled(
                |q: &Quaternion| {
                    let mut w = work.borrow_mut();
                    w.gate_mut(gate).params = Some(*q);
                    cost.cost(&w)
                },
                &configs.controlled,
            )?;
            check_residual(model.residual, cost.is_exact())?;
            let sol = solve(&model.j, &model.a, model.b, maximize);
            let pre = model.predict(&current);
            if cost.is_exact() && improvement(pre, sol.value, maximize) < -1e-8 {
                return Err(OptimizeError::MonotonicityViolated {
                    increase: -improvement(pre, sol.value, maximize),
                    sweep: 0,
                    unit: gate,
                });
            }
            circuit.gate_mut(gate).params = Some(sol.q_star);
            Ok(sol.value)
        }
        UpdateUnit::Pair { .. } => scf_update_pair(circuit, unit, cost, configs, 1e-10, false),
    }
}

/// Jointly updates a controlled/negative-controlled pair sharing a control:
/// one 35-evaluation tomography, then alternating analytic solves on the fitted
/// bilinear model until the improvement drops below `threshold` (no further
/// measurements). Returns the model-predicted post-update cost.
pub fn scf_update_pair(
    circuit: &mut Circuit,
    unit: UpdateUnit,
    cost: &dyn CostFunction,
    configs: &TomographyConfigs,
    threshold: f64,
    maximize: bool,
) -> Result<f64, OptimizeError> {
    let UpdateUnit::Pair { pos_gate, neg_gate } = unit else {
        return Err(OptimizeError::UnitMismatch { gate: 0 });
    };
    if !matches!(
        circuit.gate(pos_gate).kind,
        crate::ansatz::GateKind::Controlled
    ) || !matches!(
        circuit.gate(neg_gate).kind,
        crate::ansatz::GateKind::NegControlled
    ) {
        return Err(OptimizeError::UnitMismatch { gate: pos_gate });
    }
    // p parameterizes the |0>-control branch (negative-controlled gate), q the
    // |1>-control branch.
    let mut p = circuit.gate(neg_gate).quaternion();
    let mut q = circuit.gate(pos_gate).quaternion();
    let work = RefCell::new(circuit.clone());
    let mut model = estimate_pair(
        |pv: &Quaternion, qv: &Quaternion| {
            let mut w = work.borrow_mut();
            w.gate_mut(neg_gate).params = Some(*pv);
            w.gate_mut(pos_gate).params = Some(*qv);
            cost.cost(&w)
        },
        &configs.pair,
    )?;
    check_residual(model.residual, cost.is_exact())?;
    if maximize {
        model.j = -model.j;
        model.k = -model.k;
        model.l = -model.l;
    }

    let pre = model.predict(&p, &q);
    let mut current = pre;
    let mut solves = 0usize;
    // Alternate p and q solves; stop once a solve past the first full pair
    // improves by less than the threshold. Hard cap of 1000 alternations.
    while solves < 1000 {
        let slice = if solves % 2 == 0 {
            model.p_slice(&q)
        } else {
            model.q_slice(&p)
        };
        let sol = minimize_quadratic_sphere(&slice.j, &slice.a, slice.b);
        if solves % 2 == 0 {
            p = sol.q_star;
        } else {
            q = sol.q_star;
        }
        let gained = current - sol.value;
        current = sol.value;
        solves += 1;
        if solves >= 2 && gained <= threshold {
            break;
        }
    }
    if cost.is_exact() && current > pre + 1e-8 {
        return Err(OptimizeError::MonotonicityViolated {
            increase: current - pre,
            sweep: 0,
            unit: pos_gate,
        });
    }
    circuit.gate_mut(neg_gate).params = Some(p);
    circuit.gate_mut(pos_gate).params = Some(q);
    Ok(if maximize { -current } else { current })
}

/// Runs `sweeps` passes over the circuit's schedule, dispatching each unit to
/// its analytic update (FQS for single gates, cFQS for controlled and
/// number-preserving gates, the SCF alternation for pairs). Records the cost and
/// cumulative evaluation count (10, 14 or 35 per update) after every unit.
pub fn run_sweeps(
    circuit: &mut Circuit,
    cost: &mut dyn CostFunction,
    configs: &TomographyConfigs,
    opts: &SweepOptions,
) -> Result<Trajectory, OptimizeError> {
    let mut trajectory = Trajectory::default();
    cost.begin_sweep(1);
    let initial = cost.cost(circuit);
    trajectory.records.push(TrajectoryRecord {
        sweep: 0,
        unit: 0,
        cost: initial,
        evaluations: 0,
    });
    let schedule: Vec<UpdateUnit> = circuit.schedule().to_vec();
    let mut evaluations = 0u64;
    let mut last = initial;
    let mut fresh_segment = false;
    for sweep in 1..=opts.sweeps {
        if cost.begin_sweep(sweep) && trajectory.switch_sweep.is_none() {
            trajectory.switch_sweep = Some(sweep);
            fresh_segment = true;
        }
        for (idx, &unit) in schedule.iter().enumerate() {
            let new_cost = match unit {
                UpdateUnit::Pair { .. } => scf_update_pair(
                    circuit,
                    unit,
                    cost,
                    configs,
                    opts.scf_threshold,
                    opts.maximize,
                ),
                _ => update_single_gate(circuit, unit, cost, configs, opts.maximize),
            }
            .map_err(|e| match e {
                OptimizeError::MonotonicityViolated { increase, .. } => {
                    OptimizeError::MonotonicityViolated {
                        increase,
                        sweep,
                        unit: idx + 1,
                    }
                }
                other => other,
            })?;
            evaluations += unit.evaluation_cost();
            if cost.is_exact() && !fresh_segment {
                let increase = if opts.maximize {
                    last - new_cost
                } else {
                    new_cost - last
                };
                if increase > 1e-8 {
                    return Err(OptimizeError::MonotonicityViolated {
                        increase,
                        sweep,
                        unit: idx + 1,
                    });
                }
            }
            fresh_segment = false;
            last = new_cost;
            trajectory.records.push(TrajectoryRecord {
                sweep,
                unit: idx + 1,
                cost: new_cost,
                evaluations,
            });
        }
    }
    Ok(trajectory)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_symmetric(rng: &mut ChaCha8Rng, scale: f64) -> Mat4 {
        let mut j = Mat4::zeros();
        for r in 0..4 {
            for c in r..4 {
                let v = (rng.random::<f64>() * 2.0 - 1.0) * scale;
                j[(r, c)] = v;
                j[(c, r)] = v;
            }
        }
        j
    }

    fn model_value(j: &Mat4, a: &Vec4, b: f64, q: &Quaternion) -> f64 {
        let v = Vec4::from_column_slice(&q.as_array());
        (v.transpose() * j * v)[0] + 2.0 * a.dot(&v) + b
    }

    #[test]
    fn pure_quadratic_returns_least_eigenvector() {
        let j = Mat4::from_diagonal(&Vec4::new(3.0, -1.0, 2.0, 5.0));
        let sol = minimize_quadratic_sphere(&j, &Vec4::zeros(), 0.0);
        assert!((sol.value + 1.0).abs() < 1e-12);
        assert!(sol.hard_case);
        assert!((sol.q_star.qx.abs() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn known_diagonal_case_beats_brute_force() {
        let j = Mat4::from_diagonal(&Vec4::new(1.0, 2.0, 3.0, 4.0));
        let a = Vec4::new(0.5, 0.5, 0.5, 0.5);
        let sol = minimize_quadratic_sphere(&j, &a, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let mut brute = f64::INFINITY;
        for _ in 0..1_000_000 {
            let q = Quaternion::random(&mut rng);
            brute = brute.min(model_value(&j, &a, 0.0, &q));
        }
        assert!(sol.value <= brute + 1e-6, "analytic {} brute {brute}", sol.value);
        assert!(sol.root_residual < 1e-10);
        assert!((model_value(&j, &a, 0.0, &sol.q_star) - sol.value).abs() < 1e-10);
    }

    #[test]
    fn degenerate_hard_case_beats_brute_force() {
        let j = Mat4::from_diagonal(&Vec4::new(0.0, 0.0, 0.0, 1.0));
        let a = Vec4::new(0.0, 0.0, 0.0, 0.5);
        let sol = minimize_quadratic_sphere(&j, &a, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut brute = f64::INFINITY;
        for _ in 0..200_000 {
            let q = Quaternion::random(&mut rng);
            brute = brute.min(model_value(&j, &a, 0.0, &q));
        }
        assert!(sol.value <= brute + 1e-6);
        // Optimum mixes the flat subspace with the z direction; the hard case
        // must have been considered.
        assert!((sol.q_star.qi.powi(2) + sol.q_star.qx.powi(2) + sol.q_star.qy.powi(2)) > 0.1);
    }

    #[test]
    fn random_instances_beat_brute_force_sampling() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let samples: Vec<Quaternion> = (0..30_000).map(|_| Quaternion::random(&mut rng)).collect();
        for trial in 0..300 {
            let j = random_symmetric(&mut rng, 2.0);
            let scale = match trial % 3 {
                0 => 1.0,
                1 => 1e-3,
                _ => 10.0,
            };
            let a = Vec4::new(
                rng.random::<f64>() - 0.5,
                rng.random::<f64>() - 0.5,
                rng.random::<f64>() - 0.5,
                rng.random::<f64>() - 0.5,
            ) * scale;
            let b = rng.random::<f64>() - 0.5;
            let sol = minimize_quadratic_sphere(&j, &a, b);
            let brute = samples
                .iter()
                .map(|q| model_value(&j, &a, b, q))
                .fold(f64::INFINITY, f64::min);
            assert!(
                sol.value <= brute + 1e-9,
                "trial {trial}: analytic {} vs brute {brute}",
                sol.value
            );
            if !sol.hard_case {
                assert!(sol.root_residual < 1e-10, "residual {}", sol.root_residual);
            }
            assert!((model_value(&j, &a, b, &sol.q_star) - sol.value).abs() < 1e-10);
            let norm: f64 = sol
                .q_star
                .as_array()
                .iter()
                .map(|v| v * v)
                .sum::<f64>()
                .sqrt();
            assert!((norm - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn forced_degenerate_spectra() {
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        let samples: Vec<Quaternion> = (0..30_000).map(|_| Quaternion::random(&mut rng)).collect();
        for _ in 0..100 {
            // Repeated eigenvalues with a random orthogonal basis.
            let m = random_symmetric(&mut rng, 1.0);
            let basis = nalgebra::SymmetricEigen::new(m).eigenvectors;
            let evals = Vec4::new(-1.0, -1.0, 0.5, 0.5);
            let j = basis * Mat4::from_diagonal(&evals) * basis.transpose();
            // Make a orthogonal to the first degenerate eigenvector now and then.
            let mut a = Vec4::new(
                rng.random::<f64>() - 0.5,
                rng.random::<f64>() - 0.5,
                rng.random::<f64>() - 0.5,
                rng.random::<f64>() - 0.5,
            );
            if rng.random::<bool>() {
                let n0 = basis.column(0).into_owned();
                a -= n0 * a.dot(&n0);
            }
            let sol = minimize_quadratic_sphere(&j, &a, 0.0);
            let brute = samples
                .iter()
                .map(|q| model_value(&j, &a, 0.0, q))
                .fold(f64::INFINITY, f64::min);
            assert!(sol.value <= brute + 1e-9);
        }
    }

    #[test]
    fn maximizer_mirrors_minimizer() {
        let mut rng = ChaCha8Rng::seed_from_u64(45);
        let j = random_symmetric(&mut rng, 1.0);
        let a = Vec4::new(0.3, -0.2, 0.1, 0.4);
        let b = 0.7;
        let max = maximize_quadratic_sphere(&j, &a, b);
        let min_neg = minimize_quadratic_sphere(&(-j), &(-a), -b);
        assert!((max.value + min_neg.value).abs() < 1e-12);
        assert!((model_value(&j, &a, b, &max.q_star) - max.value).abs() < 1e-10);
    }
}
