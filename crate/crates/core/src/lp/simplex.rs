use super::{dot, LinearProgram, LpSolution, FEASIBILITY_TOLERANCE, PIVOT_TOLERANCE};

/// Values this close to zero are snapped to zero after each pivot.
const ZERO_SNAP: f64 = 1e-13;

/// Dense simplex tableau. Row `i` holds `B⁻¹A` and `B⁻¹b` in its last
/// column; `cost` holds the reduced costs and minus the objective value.
struct Tableau {
    rows: Vec<Vec<f64>>,
    cost: Vec<f64>,
    basis: Vec<usize>,
    /// Columns at or beyond this index are artificial.
    artificial_start: usize,
}

impl Tableau {
    fn rhs_col(&self) -> usize {
        self.cost.len() - 1
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let piv = self.rows[row][col];
        self.rows[row].iter_mut().for_each(|v| *v /= piv);
        let pivot_row = self.rows[row].clone();
        let eliminate = |target: &mut Vec<f64>| {
            let factor = target[col];
            if factor != 0.0 {
                for (t, p) in target.iter_mut().zip(&pivot_row) {
                    *t -= factor * p;
                    if t.abs() < ZERO_SNAP {
                        *t = 0.0;
                    }
                }
            }
        };
        for (i, r) in self.rows.iter_mut().enumerate() {
            if i != row {
                eliminate(r);
            }
        }
        eliminate(&mut self.cost);
        self.basis[row] = col;
    }

    /// Recomputes reduced costs for objective `c` (zero beyond `c.len()`).
    fn price(&mut self, c: &[f64]) {
        let coeff = |j: usize| c.get(j).copied().unwrap_or(0.0);
        let width = self.cost.len();
        self.cost = (0..width)
            .map(|j| if j + 1 == width { 0.0 } else { coeff(j) })
            .collect();
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = coeff(b);
            if cb != 0.0 {
                for (t, r) in self.cost.iter_mut().zip(&self.rows[i]) {
                    *t -= cb * r;
                }
            }
        }
    }

    /// Runs Bland's rule until optimal. Returns `false` if unbounded.
    fn optimize(&mut self, allow_artificial: bool) -> bool {
        let rhs = self.rhs_col();
        let limit = if allow_artificial {
            rhs
        } else {
            self.artificial_start
        };
        loop {
            // Lowest-index improving column.
            let Some(enter) = (0..limit).find(|&j| self.cost[j] < -PIVOT_TOLERANCE) else {
                return true;
            };
            // Minimum ratio; ties go to the lowest-index basic variable.
            let mut leave: Option<(usize, f64)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                let a = row[enter];
                if a <= PIVOT_TOLERANCE {
                    continue;
                }
                let ratio = row[rhs].max(0.0) / a;
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((l, best)) => {
                        if ratio < best - 1e-12
                            || ((ratio - best).abs() <= 1e-12 && self.basis[i] < self.basis[l])
                        {
                            Some((i, ratio))
                        } else {
                            Some((l, best))
                        }
                    }
                };
            }
            match leave {
                Some((row, _)) => self.pivot(row, enter),
                None => return false,
            }
        }
    }
}

/// Minimizes the objective of `lp` with the two-phase simplex method.
///
/// Deterministic: entering and leaving variables are chosen by lowest index.
pub fn solve_min(lp: &LinearProgram) -> LpSolution {
    solve(lp, lp.objective())
}

/// Maximizes the objective of `lp`.
pub fn solve_max(lp: &LinearProgram) -> LpSolution {
    let negated: Vec<f64> = lp.objective().iter().map(|c| -c).collect();
    match solve(lp, &negated) {
        LpSolution::Optimal { witness, .. } => LpSolution::Optimal {
            value: lp.evaluate(&witness),
            witness,
        },
        other => other,
    }
}

fn solve(lp: &LinearProgram, objective: &[f64]) -> LpSolution {
    let n = lp.num_vars();
    let (mut a, mut b) = lp.standard_form();
    let m = a.len();
    let structural = n + lp.num_inequalities();

    if m == 0 {
        // Only x >= 0: the origin is optimal unless some cost is negative.
        if objective.iter().any(|&c| c < 0.0) {
            return LpSolution::Unbounded;
        }
        return LpSolution::Optimal {
            value: 0.0,
            witness: vec![0.0; n],
        };
    }

    for (row, rhs) in a.iter_mut().zip(b.iter_mut()) {
        if *rhs < 0.0 {
            row.iter_mut().for_each(|v| *v = -*v);
            *rhs = -*rhs;
        }
    }

    // Phase one: one artificial per row.
    let width = structural + m + 1;
    let rows: Vec<Vec<f64>> = a
        .iter()
        .zip(&b)
        .enumerate()
        .map(|(i, (row, &rhs))| {
            let mut r = row.clone();
            r.resize(width, 0.0);
            r[structural + i] = 1.0;
            r[width - 1] = rhs;
            r
        })
        .collect();
    let mut tab = Tableau {
        rows,
        cost: vec![0.0; width],
        basis: (structural..structural + m).collect(),
        artificial_start: structural,
    };
    let phase_one: Vec<f64> = (0..width - 1)
        .map(|j| if j >= structural { 1.0 } else { 0.0 })
        .collect();
    tab.price(&phase_one);
    tab.optimize(true);
    let infeasibility = -tab.cost[tab.rhs_col()];
    if infeasibility > FEASIBILITY_TOLERANCE {
        return LpSolution::Infeasible;
    }

    // Drive remaining artificials out of the basis; rows where that is
    // impossible are linearly dependent and get dropped.
    let mut i = 0;
    while i < tab.rows.len() {
        if tab.basis[i] >= structural {
            match (0..structural).find(|&j| tab.rows[i][j].abs() > PIVOT_TOLERANCE) {
                Some(j) => tab.pivot(i, j),
                None => {
                    tab.rows.remove(i);
                    tab.basis.remove(i);
                    continue;
                }
            }
        }
        i += 1;
    }

    tab.price(objective);
    if !tab.optimize(false) {
        return LpSolution::Unbounded;
    }

    let rhs = tab.rhs_col();
    let mut witness = vec![0.0; n];
    for (row, &var) in tab.rows.iter().zip(&tab.basis) {
        if var < n {
            witness[var] = row[rhs].max(0.0);
        }
    }
    LpSolution::Optimal {
        value: dot(objective, &witness),
        witness,
    }
}
