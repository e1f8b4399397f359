//! Named material configurations used by the experiments.

use crate::cloakmap::{truncated_cloak, CloakParams};
use crate::error::{Error, Result};
use crate::homog::{discretize_cloak, LayeredProfile};
use crate::radial::Interior;

/// Energy used throughout the reference experiments.
pub const DESIGN_ENERGY: f64 = 2.0;
/// Interior potential that is cloaked well at the design energy.
pub const CLOAKING_Q: f64 = 1.0;
/// Interior potential that produces an almost trapped state.
pub const TRAPPING_Q: f64 = -2.576;
/// Fine layers in `(R, 2)` of the reference cloak: 30 two-phase cells.
pub const DEFAULT_FINE_LAYERS: usize = 60;

/// A layered medium together with the region where the interior potential
/// and the `α` weighting act.
#[derive(Debug, Clone, PartialEq)]
pub struct Medium {
    pub profile: LayeredProfile,
    pub interior: Interior,
}

/// Laminated truncated cloak with `n_fine` layers in `(R, 2)` and the
/// interior potential on the plateau `B(R)`.
pub fn layered_cloak(params: &CloakParams, n_fine: usize, q_in: f64) -> Result<Medium> {
    if n_fine == 0 || !n_fine.is_multiple_of(2) {
        return Err(Error::Domain(format!(
            "fine layer count must be a positive even number, got {n_fine}"
        )));
    }
    let profile = discretize_cloak(&truncated_cloak(params)?, params, n_fine / 2)?;
    Ok(Medium {
        profile,
        interior: Interior::new(q_in, params.r_trunc),
    })
}

/// Reference cloak (`R = 1.005`, 60 fine layers) with interior potential `q_in`.
pub fn reference_cloak(q_in: f64) -> Medium {
    layered_cloak(&CloakParams::default(), DEFAULT_FINE_LAYERS, q_in).expect("valid preset")
}

/// The cloaked object alone: `σ = 2`, `g^{1/2} = 8` on `B(1)`, free outside.
pub fn uncloaked_ball(q_in: f64) -> Medium {
    Medium {
        profile: LayeredProfile::ball(1.0, 2.0, 8.0).expect("valid ball"),
        interior: Interior::new(q_in, 1.0),
    }
}

pub fn free_space() -> Medium {
    Medium {
        profile: LayeredProfile::free(),
        interior: Interior::none(),
    }
}
