//! Named surface configurations used by the test suites and the CLI.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::holo::{CPoly, HoloCurve, C64, I};
use crate::isogen::{build_chain_surface, build_holomorphic_surface, ChainConfig, Surface};

/// `n = 4`: `N = 6`, seed `(1, i)`. Holomorphic by the `N = 6` rigidity.
pub fn n4_canonical() -> ChainConfig {
    let seed = HoloCurve::new(vec![CPoly::one(), CPoly::constant(I)]).expect("two components");
    ChainConfig::new(6, seed).with_isotropic_seed()
}

/// `n = 6`, non-holomorphic: `N = 8`, seed `(1 - z^2, i(1 + z^2), 2z, 0)`.
pub fn n6_canonical() -> ChainConfig {
    let seed = HoloCurve::new(vec![
        CPoly::from_real(&[1.0, 0.0, -1.0]),
        CPoly::new(vec![I, C64::new(0.0, 0.0), I]),
        CPoly::from_real(&[0.0, 2.0]),
        CPoly::zero(),
    ])
    .expect("four components");
    ChainConfig::new(8, seed).with_isotropic_seed()
}

/// The chain taken literally with a non-isotropic seed `(1, 0, 0, 0)`.
pub fn literal_recipe() -> ChainConfig {
    let seed = HoloCurve::new(vec![CPoly::one(), CPoly::zero(), CPoly::zero(), CPoly::zero()])
        .expect("four components");
    ChainConfig::new(8, seed)
}

/// Non-isotropic seed `(1, z, z^2, 3/10 + z^3)` with full-rank derivative data;
/// a substantial merely-1-isotropic control.
pub fn generic_recipe() -> ChainConfig {
    let seed = HoloCurve::new(vec![
        CPoly::one(),
        CPoly::from_real(&[0.0, 1.0]),
        CPoly::from_real(&[0.0, 0.0, 1.0]),
        CPoly::from_real(&[0.3, 0.0, 0.0, 1.0]),
    ])
    .expect("four components");
    ChainConfig::new(8, seed)
}

/// A single chain step from seed `(1, 0, 0, 0, 0, 0)`: the Enneper surface in
/// `R^3` sitting inside `R^8`. Its first ellipse is a segment.
pub fn enneper_embedded() -> ChainConfig {
    let mut comps = vec![CPoly::one()];
    comps.extend(std::iter::repeat_n(CPoly::zero(), 5));
    ChainConfig::new(8, HoloCurve::new(comps).expect("six components")).with_steps(1)
}

/// `eta(z) = (z, z^2, ..., z^m)`.
pub fn monomial_curve(m: usize) -> HoloCurve {
    HoloCurve::new(
        (1..=m)
            .map(|k| CPoly::monomial(C64::new(1.0, 0.0), k))
            .collect(),
    )
    .expect("m >= 1")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    N4Canonical,
    N6Canonical,
    LiteralRecipe,
    GenericRecipe,
    EnneperEmbedded,
    /// `(z, z^2)` in `C^2`
    HolomorphicN2,
    /// `(z, z^2, z^3)` in `C^3`
    HolomorphicN4,
    /// `(z, z^2, z^3, z^4)` in `C^4`
    HolomorphicN6,
}

impl Preset {
    pub const ALL: [Preset; 8] = [
        Preset::N4Canonical,
        Preset::N6Canonical,
        Preset::LiteralRecipe,
        Preset::GenericRecipe,
        Preset::EnneperEmbedded,
        Preset::HolomorphicN2,
        Preset::HolomorphicN4,
        Preset::HolomorphicN6,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::N4Canonical => "n4-canonical",
            Preset::N6Canonical => "n6-canonical",
            Preset::LiteralRecipe => "literal-recipe",
            Preset::GenericRecipe => "generic-recipe",
            Preset::EnneperEmbedded => "enneper-embedded",
            Preset::HolomorphicN2 => "holomorphic-n2",
            Preset::HolomorphicN4 => "holomorphic-n4",
            Preset::HolomorphicN6 => "holomorphic-n6",
        }
    }

    pub fn build(self) -> Result<Surface> {
        match self {
            Preset::N4Canonical => build_chain_surface(&n4_canonical()),
            Preset::N6Canonical => build_chain_surface(&n6_canonical()),
            Preset::LiteralRecipe => build_chain_surface(&literal_recipe()),
            Preset::GenericRecipe => build_chain_surface(&generic_recipe()),
            Preset::EnneperEmbedded => build_chain_surface(&enneper_embedded()),
            Preset::HolomorphicN2 => build_holomorphic_surface(&monomial_curve(2)),
            Preset::HolomorphicN4 => build_holomorphic_surface(&monomial_curve(3)),
            Preset::HolomorphicN6 => build_holomorphic_surface(&monomial_curve(4)),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown preset '{s}'")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_presets_build() {
        for p in Preset::ALL {
            let s = p.build().unwrap();
            assert_eq!(p.name().parse::<Preset>().unwrap(), p);
            assert!(s.alpha().bdot_residual(s.alpha()).unwrap() < 1e-12, "{p}");
        }
        assert!("nope".parse::<Preset>().is_err());
    }
}
