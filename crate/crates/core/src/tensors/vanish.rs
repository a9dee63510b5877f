//! Search for a sign-changing contrast whose leading tensor vanishes.
//!
//! Along the family D(t) = D₊ − t·D₋ the diagonal tensor entry moves
//! continuously from the positive-contrast value to a negative one, so a
//! bracketed root exists whenever the endpoint entries change sign. The
//! root is located with an Illinois-damped secant iteration on the
//! symmetric-form entry, the same form the tensor constructors report.

use crate::error::{Error, Result};
use crate::lippmann::{BackgroundModel, CorrectorWorkspace, InclusionProfile, ModelMode};

use super::volume::tensor_m;

const BRACKET_FLOOR: f64 = 1e-10;
const ENTRY_MARGIN: f64 = 3e-7;
const MAX_STEPS: usize = 48;

/// Outcome of the root search, with the contrast found at the root.
#[derive(Clone, Debug)]
pub struct VanishingSearch {
    pub t_star: f64,
    /// Diagonal entry of the leading tensor at the root.
    pub tensor_entry: f64,
    /// Mean of the contrast, which stays away from zero at the root.
    pub d1_integral: f64,
    pub abs_integral: f64,
    pub iterations: usize,
    /// Largest off-diagonal first-order entry at the root.
    pub off_diagonal_max: f64,
    pub profile: InclusionProfile,
}

struct PathPoint {
    entry: f64,
    off_diagonal: f64,
    profile: InclusionProfile,
}

fn evaluate(
    positive: &InclusionProfile,
    negative: &InclusionProfile,
    model: &BackgroundModel,
    axis: usize,
    t: f64,
) -> Result<PathPoint> {
    let profile = InclusionProfile::linear_combination(positive, -t, negative)?;
    let ws = CorrectorWorkspace::new(profile.clone(), model.clone())?;
    let m = tensor_m(&ws, 1)?;
    let block = m
        .tensor()
        .first_order_block()
        .expect("first-order tensor has a unit block");
    let dim = block.nrows();
    let mut off = 0.0f64;
    for r in 0..dim {
        for c in 0..dim {
            if r != c {
                off = off.max(block[(r, c)].abs());
            }
        }
    }
    Ok(PathPoint {
        entry: block[(axis, axis)],
        off_diagonal: off,
        profile,
    })
}

/// Bisects D₊ − t·D₋ to a contrast with vanishing diagonal entry.
///
/// Both endpoint profiles must keep the total coefficient positive; the
/// pointwise coefficient is linear in t, so its minimum over the mesh is
/// concave in t and endpoint positivity covers the whole bracket.
pub fn find_vanishing_inclusion(
    positive: &InclusionProfile,
    negative: &InclusionProfile,
    model: &BackgroundModel,
    axis: usize,
    t_max: f64,
) -> Result<VanishingSearch> {
    if model.mode() != ModelMode::Diffusion || !model.is_constant() {
        return Err(Error::Config(
            "vanishing search runs over a constant diffusion background".into(),
        ));
    }
    if axis >= positive.mesh().dim() {
        return Err(Error::Dimension(axis));
    }
    if !(t_max > 0.0) {
        return Err(Error::Search(format!("empty search bracket, t_max = {t_max}")));
    }

    let start = evaluate(positive, negative, model, axis, 0.0)?;
    let end = evaluate(positive, negative, model, axis, t_max)?;
    if start.entry <= 0.0 || end.entry >= 0.0 {
        return Err(Error::Search(format!(
            "tensor entry keeps its sign on the bracket: {:.6e} at t = 0, {:.6e} at t = {t_max}",
            start.entry, end.entry
        )));
    }

    let mut lo = 0.0;
    let mut flo = start.entry;
    let mut hi = t_max;
    let mut fhi = end.entry;
    let mut side = 0i8;
    let mut best = start;
    let mut t_star = 0.0;
    let mut iterations = 0;

    for step in 0..MAX_STEPS {
        iterations = step + 1;
        let mut t = (lo * fhi - hi * flo) / (fhi - flo);
        let width = hi - lo;
        if !(t > lo + 0.01 * width && t < hi - 0.01 * width) {
            t = 0.5 * (lo + hi);
        }
        let point = evaluate(positive, negative, model, axis, t)?;
        let target = ENTRY_MARGIN * point.profile.abs_integral();
        let done = point.entry.abs() <= target;
        if point.entry > 0.0 {
            lo = t;
            flo = point.entry;
            if side == 1 {
                fhi *= 0.5;
            }
            side = 1;
        } else {
            hi = t;
            fhi = point.entry;
            if side == -1 {
                flo *= 0.5;
            }
            side = -1;
        }
        t_star = t;
        best = point;
        if done || hi - lo < BRACKET_FLOOR {
            break;
        }
    }

    let abs_integral = best.profile.abs_integral();
    if best.entry.abs() > 1e-6 * abs_integral {
        return Err(Error::Search(format!(
            "search stalled with entry {:.3e} against contrast mass {:.3e}",
            best.entry, abs_integral
        )));
    }
    Ok(VanishingSearch {
        t_star,
        tensor_entry: best.entry,
        d1_integral: best.profile.integral(),
        abs_integral,
        iterations,
        off_diagonal_max: best.off_diagonal,
        profile: best.profile,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lippmann::{ProfileFn, Regularity};
    use crate::meshgeom::unit_disk_mesh;
    use std::sync::Arc;

    #[test]
    fn constant_sign_family_reports_a_bracket_error() {
        let mesh = Arc::new(unit_disk_mesh(3).unwrap());
        let bump = InclusionProfile::analytic(
            Arc::clone(&mesh),
            ProfileFn::RadialBump {
                amplitude: 1.0,
                radius: 0.8,
            },
            Regularity::SmoothCompact,
        );
        let weak = bump.scaled(0.05);
        let model = BackgroundModel::constant_diffusion(2, 1.0).unwrap();
        let err = find_vanishing_inclusion(&bump, &weak, &model, 0, 1.0).unwrap_err();
        assert!(matches!(err, Error::Search(_)), "got {err:?}");
    }

    #[test]
    fn guards_on_model_axis_and_bracket() {
        let mesh = Arc::new(unit_disk_mesh(3).unwrap());
        let bump = InclusionProfile::analytic(
            Arc::clone(&mesh),
            ProfileFn::RadialBump {
                amplitude: 1.0,
                radius: 0.8,
            },
            Regularity::SmoothCompact,
        );
        let model = BackgroundModel::constant_diffusion(2, 1.0).unwrap();
        assert!(find_vanishing_inclusion(&bump, &bump, &model, 5, 1.0).is_err());
        assert!(find_vanishing_inclusion(&bump, &bump, &model, 0, 0.0).is_err());
        let helm = BackgroundModel::helmholtz(2, 0.0, 0.0).unwrap();
        assert!(find_vanishing_inclusion(&bump, &bump, &helm, 0, 1.0).is_err());
    }
}
