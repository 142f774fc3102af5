//! Constant-flux-linkage bookkeeping across a sudden disturbance: the flux
//! linkage just before the event equals the transiently induced component
//! plus the component driven by the post-event currents.

/// Decomposition of one winding's flux linkage, pu.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxDecomposition {
    /// Flux linkage at 0⁻.
    pub psi_pre: f64,
    /// Component driven by the post-event currents at 0⁺.
    pub psi_post: f64,
    /// Transiently induced component that preserves the linkage.
    pub psi_forced: f64,
}

impl FluxDecomposition {
    pub fn reconstructed(&self) -> f64 {
        self.psi_forced + self.psi_post
    }
}

pub fn flux_decomposition(psi_pre: f64, psi_post: f64) -> FluxDecomposition {
    FluxDecomposition {
        psi_pre,
        psi_post,
        psi_forced: psi_pre - psi_post,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn simple_cases() {
        assert_eq!(flux_decomposition(0.9, 0.9).psi_forced, 0.0);
        let d = flux_decomposition(1.0, 0.8);
        assert!((d.psi_forced - 0.2).abs() < 1e-15);
        assert_eq!(d.reconstructed(), 1.0);
    }

    proptest! {
        // On a dyadic grid both the subtraction and the re-addition are exact.
        #[test]
        fn reconstruction_is_exact_on_dyadic_grid(a in -(1i64 << 24)..(1i64 << 24), b in -(1i64 << 24)..(1i64 << 24)) {
            let scale = (2.0f64).powi(-22);
            let (pre, post) = (a as f64 * scale, b as f64 * scale);
            let d = flux_decomposition(pre, post);
            prop_assert_eq!(d.reconstructed(), pre);
        }

        #[test]
        fn reconstruction_within_rounding(pre in -10.0f64..10.0, post in -10.0f64..10.0) {
            let d = flux_decomposition(pre, post);
            let ulp = f64::EPSILON * pre.abs().max(post.abs()).max(1.0);
            prop_assert!((d.reconstructed() - pre).abs() <= 2.0 * ulp);
        }
    }
}
