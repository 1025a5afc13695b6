//! Bounded-Lipschitz, psi-weighted and Wasserstein distances between
//! discrete measures.
//!
//! `d_psi` uses `d_bl` in place of the Lévy–Prohorov metric for its weak
//! part. Both metrize the weak topology and `d_w <= 3 sqrt(d_bl)`, so the
//! topology induced by `d_psi` is unchanged.

use super::transport::{bounded_lipschitz_lp, transport_lp};
use super::{atom_key, dist, psi_integral, DiscreteMeasure, WeightFunction};
use crate::error::{Error, Result};

/// `d_bl(mu, nu) = sup { |int f dmu - int f dnu| : max(Lip(f), 2 sup|f|) <= 1 }`.
///
/// Solved exactly as a linear program over the values of `f` on the union
/// of the two supports.
pub fn d_bl(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<f64> {
    mu.same_dim(nu)?;
    if mu == nu {
        return Ok(0.0);
    }
    let dim = mu.dim();
    // Union support in lexicographic order so that the program does not
    // depend on argument order.
    let mut pts: Vec<(&[f64], f64)> = mu
        .iter()
        .chain(nu.iter().map(|(a, w)| (a, -w)))
        .collect();
    pts.sort_by(|a, b| {
        a.0.iter()
            .zip(b.0)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut coords = Vec::with_capacity(pts.len() * dim);
    let mut diff: Vec<f64> = Vec::with_capacity(pts.len());
    let mut last_key: Option<Vec<u64>> = None;
    for (a, w) in pts {
        let key = atom_key(a);
        if last_key.as_ref() == Some(&key) {
            *diff.last_mut().expect("non-empty") += w;
        } else {
            coords.extend_from_slice(a);
            diff.push(w);
            last_key = Some(key);
        }
    }
    if diff.iter().all(|d| d.abs() == 0.0) {
        return Ok(0.0);
    }
    bounded_lipschitz_lp(dim, &coords, &diff)
}

/// `d_psi(mu, nu) = d_bl(mu, nu) + |int psi dmu - int psi dnu|`.
pub fn d_psi(mu: &DiscreteMeasure, nu: &DiscreteMeasure, psi: &WeightFunction) -> Result<f64> {
    let weak = d_bl(mu, nu)?;
    let moment = (psi_integral(mu, psi) - psi_integral(nu, psi)).abs();
    Ok(weak + moment)
}

fn check_p(mu: &DiscreteMeasure, nu: &DiscreteMeasure, p: f64) -> Result<()> {
    mu.same_dim(nu)?;
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::param("p", format!("need 1 <= p < inf, got {p}")));
    }
    Ok(())
}

/// Optimal transport cost `inf_{pi} int |x - y|^p dpi` (no `p`-th root).
///
/// Uses the monotone (quantile) coupling in one dimension and the
/// transportation linear program otherwise.
pub fn wasserstein_p(mu: &DiscreteMeasure, nu: &DiscreteMeasure, p: f64) -> Result<f64> {
    check_p(mu, nu, p)?;
    if mu.dim() == 1 {
        wasserstein_p_quantile(mu, nu, p)
    } else {
        wasserstein_p_lp(mu, nu, p)
    }
}

/// Transportation-LP route for any dimension.
pub fn wasserstein_p_lp(mu: &DiscreteMeasure, nu: &DiscreteMeasure, p: f64) -> Result<f64> {
    check_p(mu, nu, p)?;
    if mu == nu {
        return Ok(0.0);
    }
    transport_lp(mu, nu, |a, b| dist(a, b).powf(p))
}

/// Quantile-coupling route, one dimension only.
pub fn wasserstein_p_quantile(mu: &DiscreteMeasure, nu: &DiscreteMeasure, p: f64) -> Result<f64> {
    check_p(mu, nu, p)?;
    if mu.dim() != 1 {
        return Err(Error::param("mu", "quantile coupling needs dimension 1"));
    }
    if mu == nu {
        return Ok(0.0);
    }
    let sorted = |m: &DiscreteMeasure| {
        let mut v: Vec<(f64, f64)> = m.iter().map(|(a, w)| (a[0], w)).collect();
        v.sort_by(|a, b| a.0.total_cmp(&b.0));
        v
    };
    let (xs, ys) = (sorted(mu), sorted(nu));
    let (mut i, mut j) = (0, 0);
    let (mut ra, mut rb) = (xs[0].1, ys[0].1);
    let mut cost = crate::ext::ExtSum::new();
    while i < xs.len() && j < ys.len() {
        let m = ra.min(rb);
        cost.add(m * (xs[i].0 - ys[j].0).abs().powf(p));
        ra -= m;
        rb -= m;
        // Advance whichever side is exhausted; on the last atom of a side
        // the residual is rounding noise.
        if ra <= rb {
            i += 1;
            if i < xs.len() {
                ra = xs[i].1;
            }
        } else {
            j += 1;
            if j < ys.len() {
                rb = ys[j].1;
            }
        }
    }
    Ok(cost.value().max(0.0))
}
