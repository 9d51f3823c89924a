//! Input-output production arithmetic for a single agent.
//!
//! An agent's technology matrix `A` relates gross production `X` to the
//! inputs it consumes, `S = A * X`. Serving a final/external demand `D`
//! on the set of resources the agent actually makes requires solving
//! `X = A X + D` restricted to that subset, which has a unique
//! non-negative solution exactly when the restricted matrix is productive
//! (spectral radius below one).

use crate::error::SimError;
use crate::model::TechnologyMatrix;

/// Margin below 1.0 required of the spectral radius before a matrix is
/// accepted as productive.
pub const PRODUCTIVITY_MARGIN: f64 = 1e-6;

const POWER_ITERATIONS: usize = 1000;
const POWER_TOLERANCE: f64 = 1e-10;
const NEUMANN_DIVERGENCE: f64 = 1e12;
const NEUMANN_TERM_TOLERANCE: f64 = 1e-12;
const NEUMANN_MAX_TERMS: usize = 200_000;

/// Gross production `x`, served demand `d`, and total input requirements
/// `s = A * x` for one agent. `x >= d` holds componentwise on the made
/// subset and `x` is zero elsewhere.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductionPlan {
    pub x: Vec<f64>,
    pub d: Vec<f64>,
    pub s: Vec<f64>,
}

impl ProductionPlan {
    pub fn zero(resources: usize) -> Self {
        ProductionPlan {
            x: vec![0.0; resources],
            d: vec![0.0; resources],
            s: vec![0.0; resources],
        }
    }

    pub fn add_assign(&mut self, other: &ProductionPlan) {
        for (a, b) in self.x.iter_mut().zip(&other.x) {
            *a += b;
        }
        for (a, b) in self.d.iter_mut().zip(&other.d) {
            *a += b;
        }
        for (a, b) in self.s.iter_mut().zip(&other.s) {
            *a += b;
        }
    }
}

/// Outcome of a productivity check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Productivity {
    pub productive: bool,
    /// Dominant-eigenvalue estimate for the restricted matrix; diagnostic
    /// only when the power iteration had to fall back to series summation.
    pub radius_estimate: f64,
}

fn restrict(tech: &TechnologyMatrix, subset: &[usize]) -> Vec<f64> {
    let m = subset.len();
    let mut out = vec![0.0; m * m];
    for (bi, &i) in subset.iter().enumerate() {
        for (bj, &j) in subset.iter().enumerate() {
            out[bi * m + bj] = tech.get(i, j);
        }
    }
    out
}

fn mat_vec(m: usize, a: &[f64], x: &[f64], y: &mut [f64]) {
    for i in 0..m {
        let row = &a[i * m..(i + 1) * m];
        let mut acc = 0.0;
        for (aij, xj) in row.iter().zip(x) {
            acc += aij * xj;
        }
        y[i] = acc;
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, &x| m.max(x.abs()))
}

/// Estimates the spectral radius of the technology matrix restricted to
/// `subset` and decides whether that restriction is productive. Power
/// iteration handles the common (primitive) case; matrices on which it
/// oscillates fall back to summing the series `sum_k A^k 1`, which
/// converges iff the radius is below one.
pub fn productivity_check(tech: &TechnologyMatrix, subset: &[usize]) -> Productivity {
    let m = subset.len();
    if m == 0 {
        return Productivity {
            productive: true,
            radius_estimate: 0.0,
        };
    }
    let a = restrict(tech, subset);

    let mut v = vec![1.0; m];
    let mut w = vec![0.0; m];
    let mut lambda_prev = f64::NAN;
    for _ in 0..POWER_ITERATIONS {
        mat_vec(m, &a, &v, &mut w);
        let norm = inf_norm(&w);
        if norm == 0.0 {
            // A annihilates a positive vector: for non-negative matrices
            // this pins the radius to the strictly lower-triangular part,
            // and iterating from ones reaches the nilpotent fixed point.
            return Productivity {
                productive: true,
                radius_estimate: 0.0,
            };
        }
        let lambda = norm;
        for x in w.iter_mut() {
            *x /= norm;
        }
        std::mem::swap(&mut v, &mut w);
        if (lambda - lambda_prev).abs() < POWER_TOLERANCE {
            return Productivity {
                productive: lambda < 1.0 - PRODUCTIVITY_MARGIN,
                radius_estimate: lambda,
            };
        }
        lambda_prev = lambda;
    }

    // Fallback: decide by series convergence; estimate the radius from the
    // geometric mean growth of the terms.
    let mut term = vec![1.0; m];
    let mut next = vec![0.0; m];
    let mut partial = 0.0;
    for k in 1..=NEUMANN_MAX_TERMS {
        mat_vec(m, &a, &term, &mut next);
        std::mem::swap(&mut term, &mut next);
        let norm = inf_norm(&term);
        partial += norm;
        if norm < NEUMANN_TERM_TOLERANCE {
            return Productivity {
                productive: true,
                radius_estimate: norm.powf(1.0 / k as f64),
            };
        }
        if partial > NEUMANN_DIVERGENCE {
            return Productivity {
                productive: false,
                radius_estimate: norm.powf(1.0 / k as f64).max(1.0),
            };
        }
    }
    // Neither converged nor diverged within budget: the radius hugs 1.0,
    // inside the safety margin.
    Productivity {
        productive: false,
        radius_estimate: 1.0,
    }
}

/// Solves `(I - A) x = d` restricted to `made` by Gaussian elimination
/// with partial pivoting. `d` and the solution are in restricted
/// coordinates.
fn solve_restricted(m: usize, a: &[f64], d: &[f64]) -> Option<Vec<f64>> {
    // Build I - A augmented with d.
    let mut lhs = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..m {
            lhs[i * m + j] = if i == j {
                1.0 - a[i * m + j]
            } else {
                -a[i * m + j]
            };
        }
    }
    let mut rhs = d.to_vec();
    for col in 0..m {
        let mut pivot = col;
        let mut best = lhs[col * m + col].abs();
        for row in col + 1..m {
            let cand = lhs[row * m + col].abs();
            if cand > best {
                best = cand;
                pivot = row;
            }
        }
        if best < 1e-12 {
            return None;
        }
        if pivot != col {
            for j in 0..m {
                lhs.swap(col * m + j, pivot * m + j);
            }
            rhs.swap(col, pivot);
        }
        let diag = lhs[col * m + col];
        for row in col + 1..m {
            let factor = lhs[row * m + col] / diag;
            if factor == 0.0 {
                continue;
            }
            for j in col..m {
                lhs[row * m + j] -= factor * lhs[col * m + j];
            }
            rhs[row] -= factor * rhs[col];
        }
    }
    let mut x = vec![0.0; m];
    for row in (0..m).rev() {
        let mut acc = rhs[row];
        for j in row + 1..m {
            acc -= lhs[row * m + j] * x[j];
        }
        x[row] = acc / lhs[row * m + row];
    }
    Some(x)
}

/// Computes the gross production needed to serve demand `d` when the agent
/// makes exactly the resources in `made`. Demand must be zero off `made`.
/// Requirements `s = A * x` cover all rows: entries on `made` are supplied
/// internally, entries off `made` must be imported.
pub fn leontief_solve(
    tech: &TechnologyMatrix,
    d: &[f64],
    made: &[usize],
) -> Result<ProductionPlan, SimError> {
    let n = tech.size();
    assert_eq!(d.len(), n, "demand vector length mismatch");
    debug_assert!(
        (0..n).all(|i| made.contains(&i) || d[i] == 0.0),
        "demand placed outside the made subset"
    );

    let check = productivity_check(tech, made);
    if !check.productive {
        return Err(SimError::NotProductive {
            radius_estimate: check.radius_estimate,
        });
    }

    let m = made.len();
    let a = restrict(tech, made);
    let d_restricted: Vec<f64> = made.iter().map(|&i| d[i]).collect();
    let x_restricted = solve_restricted(m, &a, &d_restricted).ok_or(SimError::NotProductive {
        radius_estimate: check.radius_estimate,
    })?;

    let mut x = vec![0.0; n];
    for (bi, &i) in made.iter().enumerate() {
        // Clamp the tiny negative dust elimination can leave on zero rows.
        x[i] = if x_restricted[bi] < 0.0 && x_restricted[bi] > -1e-12 {
            0.0
        } else {
            x_restricted[bi]
        };
    }
    let s = tech.mul_vec(&x);
    Ok(ProductionPlan {
        x,
        d: d.to_vec(),
        s,
    })
}

/// Splits total requirements into the internally supplied part (rows in
/// `made`) and the part that must be imported (rows off `made`). The two
/// vectors partition `plan.s` exactly.
pub fn split_requirements(plan: &ProductionPlan, made: &[usize]) -> (Vec<f64>, Vec<f64>) {
    let n = plan.s.len();
    let mut self_supply = vec![0.0; n];
    let mut imports = vec![0.0; n];
    for i in 0..n {
        if made.contains(&i) {
            self_supply[i] = plan.s[i];
        } else {
            imports[i] = plan.s[i];
        }
    }
    (self_supply, imports)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Six-resource reference matrix used across the test suite: rows and
    /// columns are (power, water, gas, petrol, capital, consumer goods);
    /// only power, water, and consumer goods are producible.
    pub fn reference_matrix() -> TechnologyMatrix {
        TechnologyMatrix::from_rows(&[
            vec![0.18, 0.90, 0.0, 0.0, 0.0, 0.20],
            vec![0.30, 0.10, 0.0, 0.0, 0.0, 0.30],
            vec![0.76, 0.10, 0.0, 0.0, 0.0, 0.40],
            vec![0.30, 0.08, 0.0, 0.0, 0.0, 0.30],
            vec![0.14, 0.05, 0.0, 0.0, 0.0, 0.20],
            vec![0.10, 0.05, 0.0, 0.0, 0.0, 0.0],
        ])
    }

    /// Independent oracle: truncated series sum_k A^k d on the restricted
    /// subsystem, truncating when a term's norm drops below 1e-12.
    fn neumann_solve(tech: &TechnologyMatrix, d: &[f64], made: &[usize]) -> Vec<f64> {
        let n = tech.size();
        let mut x = d.to_vec();
        let mut term = d.to_vec();
        for _ in 0..1_000_000 {
            let mut next = vec![0.0; n];
            for &i in made {
                let mut acc = 0.0;
                for &j in made {
                    acc += tech.get(i, j) * term[j];
                }
                next[i] = acc;
            }
            let norm: f64 = next.iter().fold(0.0, |m, &v| m.max(v.abs()));
            for i in 0..n {
                x[i] += next[i];
            }
            term = next;
            if norm < 1e-12 {
                break;
            }
        }
        x
    }

    fn max_rel_err(a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).abs() / (1.0 + x.abs().max(y.abs())))
            .fold(0.0, f64::max)
    }

    #[test]
    fn zero_matrix_has_radius_zero() {
        let tech = TechnologyMatrix::zero(3);
        let p = productivity_check(&tech, &[0, 1, 2]);
        assert!(p.productive);
        assert_eq!(p.radius_estimate, 0.0);
    }

    #[test]
    fn single_cell_above_one_is_not_productive() {
        let mut tech = TechnologyMatrix::zero(1);
        tech.set(0, 0, 1.2);
        let p = productivity_check(&tech, &[0]);
        assert!(!p.productive);
        assert!((p.radius_estimate - 1.2).abs() < 1e-8);
    }

    #[test]
    fn reference_matrix_radius_matches_expected_band() {
        let tech = reference_matrix();
        let p = productivity_check(&tech, &[0, 1, 5]);
        assert!(p.productive);
        assert!(
            p.radius_estimate > 0.70 && p.radius_estimate < 0.74,
            "radius {}",
            p.radius_estimate
        );
        // The full matrix only adds zero columns, so the radius is the same.
        let full = productivity_check(&tech, &[0, 1, 2, 3, 4, 5]);
        assert!((full.radius_estimate - p.radius_estimate).abs() < 1e-8);
    }

    #[test]
    fn oscillating_two_cycle_falls_back_to_series() {
        // Power iteration from ones oscillates on this cyclic matrix; the
        // true radius is sqrt(0.6) ~ 0.775.
        let mut tech = TechnologyMatrix::zero(2);
        tech.set(0, 1, 2.0);
        tech.set(1, 0, 0.3);
        let p = productivity_check(&tech, &[0, 1]);
        assert!(p.productive);
        // And the divergent counterpart.
        tech.set(1, 0, 0.6);
        let p = productivity_check(&tech, &[0, 1]);
        assert!(
            !p.productive,
            "radius sqrt(1.2) > 1, estimate {}",
            p.radius_estimate
        );
    }

    #[test]
    fn empty_subset_is_trivially_productive() {
        let tech = reference_matrix();
        assert!(productivity_check(&tech, &[]).productive);
    }

    #[test]
    fn identity_demand_with_zero_matrix() {
        let tech = TechnologyMatrix::zero(2);
        let plan = leontief_solve(&tech, &[3.0, 4.0], &[0, 1]).unwrap();
        assert_eq!(plan.x, vec![3.0, 4.0]);
        assert_eq!(plan.s, vec![0.0, 0.0]);
    }

    #[test]
    fn self_loop_half_doubles_gross_production() {
        let mut tech = TechnologyMatrix::zero(1);
        tech.set(0, 0, 0.5);
        let plan = leontief_solve(&tech, &[1.0], &[0]).unwrap();
        assert!((plan.x[0] - 2.0).abs() < 1e-12);
        assert!((plan.s[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn nonproductive_solve_errors() {
        let mut tech = TechnologyMatrix::zero(1);
        tech.set(0, 0, 1.0);
        let err = leontief_solve(&tech, &[1.0], &[0]).unwrap_err();
        assert!(matches!(err, SimError::NotProductive { .. }));
    }

    #[test]
    fn reference_matrix_solution_matches_series_oracle() {
        let tech = reference_matrix();
        let made = [0usize, 1, 5];
        let mut d = vec![0.0; 6];
        d[5] = 1.0;
        let plan = leontief_solve(&tech, &d, &made).unwrap();
        let oracle = neumann_solve(&tech, &d, &made);
        assert!(
            max_rel_err(&plan.x, &oracle) < 1e-9,
            "{:?} vs {:?}",
            plan.x,
            oracle
        );
        // Gross production covers demand.
        for &i in &made {
            assert!(plan.x[i] + 1e-12 >= d[i]);
        }
        // Residual of (I - A) x = d on the made subset.
        for &i in &made {
            let mut ax = 0.0;
            for &j in &made {
                ax += tech.get(i, j) * plan.x[j];
            }
            assert!((plan.x[i] - ax - d[i]).abs() <= 1e-9 * (1.0 + d.iter().sum::<f64>()));
        }
    }

    #[test]
    fn split_partitions_requirements() {
        let tech = reference_matrix();
        let made = [0usize, 1, 5];
        let mut d = vec![0.0; 6];
        d[5] = 2.0;
        d[0] = 1.0;
        let plan = leontief_solve(&tech, &d, &made).unwrap();
        let (self_supply, imports) = split_requirements(&plan, &made);
        for i in 0..6 {
            assert_eq!(self_supply[i] + imports[i], plan.s[i]);
            if made.contains(&i) {
                assert_eq!(imports[i], 0.0);
            } else {
                assert_eq!(self_supply[i], 0.0);
            }
        }
        // Gas, petrol, capital are all consumed by this production mix.
        assert!(imports[2] > 0.0 && imports[3] > 0.0 && imports[4] > 0.0);
    }

    #[test]
    fn split_with_all_made_has_no_imports() {
        let tech = reference_matrix();
        let plan = ProductionPlan {
            x: vec![1.0; 6],
            d: vec![0.0; 6],
            s: tech.mul_vec(&[1.0; 6]),
        };
        let all: Vec<usize> = (0..6).collect();
        let (self_supply, imports) = split_requirements(&plan, &all);
        assert_eq!(self_supply, plan.s);
        assert_eq!(imports, vec![0.0; 6]);
        let (s2, i2) = split_requirements(&plan, &[]);
        assert_eq!(i2, plan.s);
        assert_eq!(s2, vec![0.0; 6]);
    }

    mod properties {
        use super::*;
        use crate::rng::SimRng;

        fn random_productive(rng: &mut SimRng) -> (TechnologyMatrix, Vec<usize>) {
            let n = 1 + rng.below(8) as usize;
            let mut tech = TechnologyMatrix::zero(n);
            for i in 0..n {
                for j in 0..n {
                    tech.set(i, j, rng.uniform(0.0, 0.2));
                }
            }
            let made: Vec<usize> = (0..n).collect();
            (tech, made)
        }

        #[test]
        fn random_matrices_match_series_oracle() {
            let mut rng = SimRng::new(0x51F0);
            for _ in 0..200 {
                let (tech, made) = random_productive(&mut rng);
                let n = tech.size();
                let d: Vec<f64> = (0..n).map(|_| rng.uniform(0.0, 10.0)).collect();
                let plan = leontief_solve(&tech, &d, &made).unwrap();
                let oracle = neumann_solve(&tech, &d, &made);
                assert!(max_rel_err(&plan.x, &oracle) < 1e-9);
            }
        }

        #[test]
        fn monotone_in_demand() {
            let mut rng = SimRng::new(0xA11C);
            for _ in 0..100 {
                let (tech, made) = random_productive(&mut rng);
                let n = tech.size();
                let d1: Vec<f64> = (0..n).map(|_| rng.uniform(0.0, 5.0)).collect();
                let bump = rng.below(n as u64) as usize;
                let mut d2 = d1.clone();
                d2[bump] += rng.uniform(0.0, 3.0);
                let x1 = leontief_solve(&tech, &d1, &made).unwrap().x;
                let x2 = leontief_solve(&tech, &d2, &made).unwrap().x;
                for i in 0..n {
                    assert!(x2[i] >= x1[i] - 1e-9, "production shrank at {i}");
                }
            }
        }

        #[test]
        fn linear_in_demand() {
            let mut rng = SimRng::new(0x11EA);
            for _ in 0..100 {
                let (tech, made) = random_productive(&mut rng);
                let n = tech.size();
                let d1: Vec<f64> = (0..n).map(|_| rng.uniform(0.0, 5.0)).collect();
                let d2: Vec<f64> = (0..n).map(|_| rng.uniform(0.0, 5.0)).collect();
                let sum: Vec<f64> = d1.iter().zip(&d2).map(|(a, b)| a + b).collect();
                let x1 = leontief_solve(&tech, &d1, &made).unwrap().x;
                let x2 = leontief_solve(&tech, &d2, &made).unwrap().x;
                let xs = leontief_solve(&tech, &sum, &made).unwrap().x;
                for i in 0..n {
                    assert!((xs[i] - x1[i] - x2[i]).abs() < 1e-9);
                }
            }
        }
    }
}
