//! Self-contained surface files.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::holo::{complex_pair, HoloCurve, C64};
use crate::isogen::{Provenance, Surface};

pub const SURFACE_FORMAT: &str = "austere-surface/1";

/// On-disk form of a [`Surface`]. `alpha_at_base` is informational; loading
/// rebuilds everything from `alpha`, `phi` and `z0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceFile {
    pub format: String,
    pub ambient_dim: usize,
    #[serde(with = "complex_pair")]
    pub z0: C64,
    pub alpha_at_base: Vec<[f64; 2]>,
    pub alpha: HoloCurve,
    pub phi: HoloCurve,
    pub provenance: Provenance,
}

impl SurfaceFile {
    pub fn from_surface(s: &Surface) -> Self {
        Self {
            format: SURFACE_FORMAT.into(),
            ambient_dim: s.ambient_dim(),
            z0: s.z0(),
            alpha_at_base: s.alpha().eval(s.z0()).iter().map(|c| [c.re, c.im]).collect(),
            alpha: s.alpha().clone(),
            phi: s.phi().clone(),
            provenance: s.provenance().clone(),
        }
    }

    pub fn to_surface(&self) -> Result<Surface> {
        if self.format != SURFACE_FORMAT {
            return Err(Error::InvalidInput(format!(
                "unsupported surface format '{}', expected '{SURFACE_FORMAT}'",
                self.format
            )));
        }
        if self.alpha.dim() != self.ambient_dim {
            return Err(Error::DimensionMismatch {
                expected: self.ambient_dim,
                found: self.alpha.dim(),
            });
        }
        Surface::from_parts(self.alpha.clone(), self.phi.clone(), self.z0, self.provenance.clone())
    }

    /// Pretty JSON with a trailing newline; stable for a given surface.
    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("surface files always serialize");
        out.push('\n');
        out
    }

    /// Hex SHA-256 of [`SurfaceFile::to_json`].
    pub fn digest(&self) -> String {
        Sha256::digest(self.to_json().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::Preset;

    #[test]
    fn roundtrip_is_exact() {
        for p in Preset::ALL {
            let s = p.build().unwrap();
            let file = SurfaceFile::from_surface(&s);
            let json = file.to_json();
            let back: SurfaceFile = serde_json::from_str(&json).unwrap();
            assert_eq!(back, file);
            let s2 = back.to_surface().unwrap();
            assert_eq!(s2.phi(), s.phi());
            assert_eq!(SurfaceFile::from_surface(&s2).to_json(), json);
        }
    }

    #[test]
    fn canonical_alpha_at_base() {
        let f = SurfaceFile::from_surface(&Preset::N4Canonical.build().unwrap());
        assert_eq!(f.alpha_at_base, vec![[1.0, 0.0], [0.0, 1.0], [0.0, 0.0], [0.0, 0.0], [0.0, 0.0], [0.0, 0.0]]);
        assert_eq!(f.digest().len(), 64);
    }

    #[test]
    fn tampered_files_are_rejected() {
        let mut f = SurfaceFile::from_surface(&Preset::N4Canonical.build().unwrap());
        f.format = "other/2".into();
        assert!(f.to_surface().is_err());
        let mut g = SurfaceFile::from_surface(&Preset::N4Canonical.build().unwrap());
        g.phi = g.phi.scale(C64::new(2.0, 0.0));
        assert!(g.to_surface().is_err());
    }
}
