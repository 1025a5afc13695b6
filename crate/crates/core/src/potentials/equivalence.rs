//! The transform taking `(V1, V2, W~)` to an equivalent pair `(V, W)` with
//! `int e^{-V} dl = 1`:
//! `V = V2 + log Z2`, `W(x,y) = W~(x,y) + V1(x) + V1(y) - log Z2`, where
//! `Z2 = int e^{-V2} dl`.
//!
//! Differences of the rate functionals are unchanged by the transform. The
//! finite-`n` Hamiltonian is not: with index-based exclusion the `V1` part
//! enters with weight `(n-1)/n`, a relative change of order `1/n`.

use super::{Confinement, Interaction, PotentialPair};
use crate::error::{Error, Result};
use crate::reference::ReferenceMeasure;

#[derive(Debug, Clone)]
pub struct NormalizedPair {
    pub pair: PotentialPair,
    /// `log Z2`.
    pub log_normalizer: f64,
}

/// `quadrature_step` is required for a Lebesgue reference and ignored for
/// atoms.
pub fn normalize_pair(
    v1: &Confinement,
    v2: &Confinement,
    w_tilde: &Interaction,
    ell: &ReferenceMeasure,
    quadrature_step: Option<f64>,
) -> Result<NormalizedPair> {
    let log_z2 = ell.log_integral_exp_neg(|x| v2.eval(x), quadrature_step)?;
    if !log_z2.is_finite() {
        return Err(Error::param(
            "V2",
            format!("normalizer int e^(-V2) dl must be finite and positive, log = {log_z2}"),
        ));
    }
    let v = v2.shifted(log_z2);
    let w = w_tilde.with_sides(v1, -log_z2);
    Ok(NormalizedPair {
        pair: PotentialPair::new(ell.dim(), v, w)?,
        log_normalizer: log_z2,
    })
}
