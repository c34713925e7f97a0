use itertools::Itertools;

use super::{dot, LinearProgram, LpSolution, Sense, FEASIBILITY_TOLERANCE, PIVOT_TOLERANCE};
use crate::error::{Error, Result};

/// Upper limit on the number of candidate bases the oracle will examine.
pub const MAX_BASES: u128 = 10_000_000;

/// Solves `lp` by enumerating every basic feasible solution.
///
/// Shares no solver code with the simplex. The equality-form system is
/// reduced to an independent set of `r` rows, every choice of `r` columns is
/// solved by Gaussian elimination, and nonnegative solutions that satisfy all
/// original rows are vertices. Unboundedness is detected by enumerating the
/// extreme rays `{A d = 0, 1·d = 1, d >= 0}` the same way.
pub fn vertex_oracle(lp: &LinearProgram, sense: Sense) -> Result<LpSolution> {
    let n = lp.num_vars();
    let (rows, rhs) = lp.standard_form();
    let width = n + lp.num_inequalities();
    let sign = match sense {
        Sense::Min => 1.0,
        Sense::Max => -1.0,
    };
    let cost: Vec<f64> = (0..width)
        .map(|j| sign * lp.objective().get(j).copied().unwrap_or(0.0))
        .collect();

    let Some((basis_rows, basis_rhs)) = independent_rows(&rows, &rhs) else {
        return Ok(LpSolution::Infeasible);
    };

    // Rays: append the normalization row to the homogeneous system. An
    // equality with strictly positive coefficients on every variable bounds
    // x, and with it every slack, so there are none to look for.
    let bounded = lp
        .equalities()
        .any(|(row, b)| b >= 0.0 && row.iter().all(|&a| a > 0.0));
    let mut ray_rows = rows.clone();
    ray_rows.push(vec![1.0; width]);
    let mut ray_rhs = vec![0.0; rows.len()];
    ray_rhs.push(1.0);

    let vertex_bases = binomial(width, basis_rows.len());
    let ray_system = if bounded {
        None
    } else {
        independent_rows(&ray_rows, &ray_rhs)
    };
    let ray_bases = ray_system
        .as_ref()
        .map_or(0, |(r, _)| binomial(width, r.len()));
    let bases = vertex_bases.saturating_add(ray_bases);
    if bases > MAX_BASES {
        return Err(Error::TooManyBases {
            bases,
            limit: MAX_BASES,
        });
    }

    let mut best: Option<(f64, Vec<f64>)> = None;
    for_each_basic_solution(&basis_rows, &basis_rhs, &rows, &rhs, width, |x| {
        let value = dot(&cost, &x);
        if best.as_ref().is_none_or(|(b, _)| value < *b) {
            best = Some((value, x));
        }
    });
    let Some((_, point)) = best else {
        return Ok(LpSolution::Infeasible);
    };

    if let Some((r_rows, r_rhs)) = ray_system {
        let mut improving = false;
        for_each_basic_solution(&r_rows, &r_rhs, &ray_rows, &ray_rhs, width, |d| {
            if dot(&cost, &d) < -FEASIBILITY_TOLERANCE {
                improving = true;
            }
        });
        if improving {
            return Ok(LpSolution::Unbounded);
        }
    }

    let witness = point[..n].to_vec();
    Ok(LpSolution::Optimal {
        value: lp.evaluate(&witness),
        witness,
    })
}

/// Calls `visit` with every nonnegative basic solution of `rows x = rhs`.
fn for_each_basic_solution<F: FnMut(Vec<f64>)>(
    basis_rows: &[Vec<f64>],
    basis_rhs: &[f64],
    rows: &[Vec<f64>],
    rhs: &[f64],
    width: usize,
    mut visit: F,
) {
    let r = basis_rows.len();
    let mut square = vec![0.0; r * r];
    let mut sol = vec![0.0; r];
    for cols in (0..width).combinations(r) {
        for (i, row) in basis_rows.iter().enumerate() {
            for (k, &j) in cols.iter().enumerate() {
                square[i * r + k] = row[j];
            }
        }
        sol.copy_from_slice(basis_rhs);
        if !solve_square(&mut square, &mut sol) {
            continue;
        }
        if sol.iter().any(|&v| v < -FEASIBILITY_TOLERANCE) {
            continue;
        }
        let mut x = vec![0.0; width];
        for (&j, &v) in cols.iter().zip(&sol) {
            x[j] = v.max(0.0);
        }
        let residual = rows
            .iter()
            .zip(rhs)
            .map(|(row, b)| (dot(row, &x) - b).abs())
            .fold(0.0, f64::max);
        if residual <= FEASIBILITY_TOLERANCE {
            visit(x);
        }
    }
}

/// Gauss-Jordan elimination with partial pivoting on `[rows | rhs]`.
///
/// Returns a maximal independent set of reduced rows, or `None` when the
/// system has no solution at all.
fn independent_rows(rows: &[Vec<f64>], rhs: &[f64]) -> Option<(Vec<Vec<f64>>, Vec<f64>)> {
    let width = rows.first().map_or(0, Vec::len);
    let mut aug: Vec<Vec<f64>> = rows
        .iter()
        .zip(rhs)
        .map(|(r, &b)| {
            let mut v = r.clone();
            v.push(b);
            v
        })
        .collect();
    let mut rank = 0;
    for col in 0..width {
        if rank == aug.len() {
            break;
        }
        let (p, mag) =
            (rank..aug.len())
                .map(|i| (i, aug[i][col].abs()))
                .fold(
                    (rank, -1.0),
                    |acc, cur| if cur.1 > acc.1 { cur } else { acc },
                );
        if mag <= PIVOT_TOLERANCE {
            continue;
        }
        aug.swap(rank, p);
        let piv = aug[rank][col];
        aug[rank].iter_mut().for_each(|v| *v /= piv);
        let pivot_row = aug[rank].clone();
        for (i, row) in aug.iter_mut().enumerate() {
            if i != rank && row[col] != 0.0 {
                let f = row[col];
                row.iter_mut()
                    .zip(&pivot_row)
                    .for_each(|(v, p)| *v -= f * p);
            }
        }
        rank += 1;
    }
    if aug[rank..]
        .iter()
        .any(|row| row[width].abs() > FEASIBILITY_TOLERANCE)
    {
        return None;
    }
    aug.truncate(rank);
    let b = aug.iter_mut().map(|row| row.pop().unwrap()).collect();
    Some((aug, b))
}

/// Solves the row-major `n × n` system `a x = b` in place, leaving `x` in
/// `b`. Returns `false` when `a` is numerically singular.
fn solve_square(a: &mut [f64], b: &mut [f64]) -> bool {
    let n = b.len();
    for col in 0..n {
        let mut p = col;
        for i in col + 1..n {
            if a[i * n + col].abs() > a[p * n + col].abs() {
                p = i;
            }
        }
        if a[p * n + col].abs() <= PIVOT_TOLERANCE {
            return false;
        }
        if p != col {
            for k in 0..n {
                a.swap(col * n + k, p * n + k);
            }
            b.swap(col, p);
        }
        let piv = a[col * n + col];
        for i in col + 1..n {
            let f = a[i * n + col] / piv;
            if f != 0.0 {
                for k in col..n {
                    a[i * n + k] -= f * a[col * n + k];
                }
                b[i] -= f * b[col];
            }
        }
    }
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| a[i * n + k] * b[k]).sum();
        b[i] = (b[i] - s) / a[i * n + i];
    }
    true
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn simplex_lp(objective: Vec<f64>) -> LinearProgram {
        let width = objective.len();
        let mut lp = LinearProgram::new(objective).unwrap();
        lp.add_equality(vec![1.0; width], 1.0).unwrap();
        lp
    }

    #[test]
    fn trivial_programs() {
        let lp = simplex_lp(vec![1.0, 0.0]);
        assert_eq!(vertex_oracle(&lp, Sense::Min).unwrap().value(), Some(0.0));
        assert_eq!(vertex_oracle(&lp, Sense::Max).unwrap().value(), Some(1.0));
        let lp = simplex_lp(vec![1.0, 1.0]);
        assert_eq!(vertex_oracle(&lp, Sense::Max).unwrap().value(), Some(1.0));
    }

    #[test]
    fn empty_feasible_set() {
        let mut lp = LinearProgram::new(vec![1.0]).unwrap();
        lp.add_equality(vec![1.0], 2.0).unwrap();
        lp.add_equality(vec![1.0], 3.0).unwrap();
        assert_eq!(
            vertex_oracle(&lp, Sense::Min).unwrap(),
            LpSolution::Infeasible
        );

        // Consistent equalities but no nonnegative solution.
        let mut lp = LinearProgram::new(vec![1.0, 1.0]).unwrap();
        lp.add_equality(vec![1.0, 1.0], -1.0).unwrap();
        assert_eq!(
            vertex_oracle(&lp, Sense::Max).unwrap(),
            LpSolution::Infeasible
        );
    }

    #[test]
    fn detects_rays() {
        let mut lp = LinearProgram::new(vec![-1.0, 0.0]).unwrap();
        lp.add_equality(vec![1.0, -1.0], 0.0).unwrap();
        assert_eq!(
            vertex_oracle(&lp, Sense::Min).unwrap(),
            LpSolution::Unbounded
        );
        assert_eq!(vertex_oracle(&lp, Sense::Max).unwrap().value(), Some(0.0));
    }

    #[test]
    fn guards_against_huge_enumerations() {
        let mut lp = LinearProgram::new(vec![1.0; 60]).unwrap();
        for k in 0..30 {
            let mut row = vec![0.0; 60];
            row[k] = 1.0;
            row[k + 30] = 1.0;
            lp.add_equality(row, 1.0).unwrap();
        }
        assert!(matches!(
            vertex_oracle(&lp, Sense::Min),
            Err(Error::TooManyBases { .. })
        ));
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(18, 13), 8568);
        assert_eq!(binomial(5, 0), 1);
        assert_eq!(binomial(3, 4), 0);
    }
}
