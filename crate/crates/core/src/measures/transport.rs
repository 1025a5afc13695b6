//! Small dense linear programs behind the metrics, solved with `minilp`.

use minilp::{ComparisonOp, OptimizationDirection, Problem};

use super::{dist, DiscreteMeasure};
use crate::error::{Error, Result};

fn lp_err(e: minilp::Error) -> Error {
    Error::LinearProgram(e.to_string())
}

/// `sup { sum_i f_i * diff_i : |f_i| <= 1/2, |f_i - f_j| <= |p_i - p_j| }`
/// over function values on distinct points `p_i` (row-major, `dim` wide).
pub(super) fn bounded_lipschitz_lp(dim: usize, coords: &[f64], diff: &[f64]) -> Result<f64> {
    let k = diff.len();
    if k <= 1 {
        return Ok(0.0);
    }
    let point = |i: usize| &coords[i * dim..(i + 1) * dim];
    let mut lp = Problem::new(OptimizationDirection::Maximize);
    let vars: Vec<_> = diff.iter().map(|&c| lp.add_var(c, (-0.5, 0.5))).collect();

    let add_pair = |lp: &mut Problem, i: usize, j: usize| {
        let d = dist(point(i), point(j));
        // |f_i - f_j| <= 1 already follows from the bounds.
        if d < 1.0 {
            lp.add_constraint([(vars[i], 1.0), (vars[j], -1.0)], ComparisonOp::Le, d);
            lp.add_constraint([(vars[j], 1.0), (vars[i], -1.0)], ComparisonOp::Le, d);
        }
    };

    if dim == 1 {
        // On the line the Lipschitz constraints between neighbours imply
        // all the others.
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| coords[a].total_cmp(&coords[b]));
        for w in order.windows(2) {
            add_pair(&mut lp, w[0], w[1]);
        }
    } else {
        for i in 0..k {
            for j in i + 1..k {
                add_pair(&mut lp, i, j);
            }
        }
    }
    let sol = lp.solve().map_err(lp_err)?;
    Ok(sol.objective().max(0.0))
}

/// Optimal transport cost `min_{pi in Pi(mu, nu)} sum pi_ij c(a_i, b_j)`.
pub(super) fn transport_lp(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    cost: impl Fn(&[f64], &[f64]) -> f64,
) -> Result<f64> {
    let (m, k) = (mu.len(), nu.len());
    if m == 1 || k == 1 {
        // The product coupling is the only coupling.
        let mut total = 0.0;
        for (a, wa) in mu.iter() {
            for (b, wb) in nu.iter() {
                total += wa * wb * cost(a, b);
            }
        }
        return Ok(total);
    }
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let mut vars = Vec::with_capacity(m * k);
    for a in mu.atoms() {
        for b in nu.atoms() {
            vars.push(lp.add_var(cost(a, b), (0.0, f64::INFINITY)));
        }
    }
    for i in 0..m {
        let row: Vec<_> = (0..k).map(|j| (vars[i * k + j], 1.0)).collect();
        lp.add_constraint(&row, ComparisonOp::Eq, mu.weight(i));
    }
    // The last column constraint is implied by the others.
    for j in 0..k - 1 {
        let col: Vec<_> = (0..m).map(|i| (vars[i * k + j], 1.0)).collect();
        lp.add_constraint(&col, ComparisonOp::Eq, nu.weight(j));
    }
    let sol = lp.solve().map_err(lp_err)?;
    Ok(sol.objective().max(0.0))
}
