//! Seeded low-discrepancy sampling of the `(u, v, t, s)` box.
//!
//! Points are a Halton sequence with a random Cranley-Patterson shift drawn
//! from the seed, so runs are reproducible and free of grid artifacts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::framegeo::adapted_frame;
use crate::isogen::Surface;
use crate::ruled::MPoint;

const PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

fn default_count() -> usize {
    50
}

fn default_uv_box() -> [[f64; 2]; 2] {
    [[-0.8, 0.8], [-0.8, 0.8]]
}

fn default_t_max() -> f64 {
    2.0
}

fn default_s_max() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingSpec {
    pub seed: u64,
    #[serde(default = "default_count")]
    pub count: usize,
    /// `[[u_min, u_max], [v_min, v_max]]`
    #[serde(default = "default_uv_box")]
    pub uv_box: [[f64; 2]; 2],
    /// `|t_j| <= t_max`
    #[serde(default = "default_t_max")]
    pub t_max: f64,
    /// `|s_i| <= s_max`
    #[serde(default = "default_s_max")]
    pub s_max: f64,
}

impl SamplingSpec {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            count: default_count(),
            uv_box: default_uv_box(),
            t_max: default_t_max(),
            s_max: default_s_max(),
        }
    }

    pub fn with_count(mut self, count: usize) -> Self {
        self.count = count;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.count == 0 {
            return Err(Error::InvalidInput("sampling.count must be positive".into()));
        }
        for (name, [lo, hi]) in ["u", "v"].iter().zip(self.uv_box) {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidInput(format!("sampling.uv_box: empty {name} range")));
            }
        }
        if !(self.t_max.is_finite() && self.t_max >= 0.0 && self.s_max.is_finite() && self.s_max >= 0.0) {
            return Err(Error::InvalidInput("sampling.t_max and s_max must be finite and >= 0".into()));
        }
        Ok(())
    }
}

/// `k`-th element of the van der Corput sequence in base `b`.
pub fn radical_inverse(mut k: u64, b: u64) -> f64 {
    let inv = 1.0 / b as f64;
    let mut f = inv;
    let mut r = 0.0;
    while k > 0 {
        r += f * (k % b) as f64;
        k /= b;
        f *= inv;
    }
    r
}

/// Shifted Halton points in `[0, 1)^dim`.
#[derive(Clone, Debug)]
pub struct Halton {
    shift: Vec<f64>,
}

impl Halton {
    pub fn new(dim: usize, seed: u64) -> Self {
        assert!(dim <= PRIMES.len(), "at most {} dimensions", PRIMES.len());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self {
            shift: (0..dim).map(|_| rng.random::<f64>()).collect(),
        }
    }

    pub fn point(&self, index: u64) -> Vec<f64> {
        self.shift
            .iter()
            .zip(PRIMES)
            .map(|(s, b)| (radical_inverse(index + 1, b) + s).fract())
            .collect()
    }
}

fn lerp(x: f64, [lo, hi]: [f64; 2]) -> f64 {
    lo + (hi - lo) * x
}

/// Draws usable sample points for a surface, skipping candidates whose
/// derivative span falls below the surface's generic rank.
#[derive(Clone, Debug)]
pub struct Sampler<'a> {
    spec: SamplingSpec,
    surface: &'a Surface,
    generic_rank: usize,
}

/// At most this many candidates are tried per requested point.
const MAX_TRIES_PER_POINT: usize = 10;

impl<'a> Sampler<'a> {
    pub fn new(surface: &'a Surface, spec: SamplingSpec) -> Result<Self> {
        spec.validate()?;
        let dims = surface.ambient_dim();
        if dims > PRIMES.len() {
            return Err(Error::InvalidInput(format!(
                "sampling supports ambient dimension up to {}, got {dims}",
                PRIMES.len()
            )));
        }
        let h = Halton::new(2, spec.seed ^ 0x5eed);
        let generic_rank = (0..16)
            .map(|i| {
                let x = h.point(i);
                let f = adapted_frame(
                    surface,
                    lerp(x[0], spec.uv_box[0]),
                    lerp(x[1], spec.uv_box[1]),
                    surface.normal_depth(),
                );
                f.derived_count()
            })
            .max()
            .unwrap_or(0);
        Ok(Self {
            spec,
            surface,
            generic_rank,
        })
    }

    pub fn spec(&self) -> &SamplingSpec {
        &self.spec
    }

    fn usable(&self, u: f64, v: f64) -> bool {
        let f = adapted_frame(self.surface, u, v, self.surface.normal_depth());
        f.derived_count() == self.generic_rank && f.is_full_through(0)
    }

    /// `count` points of the full `(u, v, t, s)` box; fewer if too many
    /// candidates are degenerate.
    fn draw(&self, count: usize) -> Vec<Vec<f64>> {
        let k = self.surface.ambient_dim() - 4;
        let h = Halton::new(2 + k + 2, self.spec.seed);
        let mut out = Vec::with_capacity(count);
        let mut i = 0u64;
        while out.len() < count && (i as usize) < count * MAX_TRIES_PER_POINT {
            let x = h.point(i);
            i += 1;
            let u = lerp(x[0], self.spec.uv_box[0]);
            let v = lerp(x[1], self.spec.uv_box[1]);
            if !self.usable(u, v) {
                continue;
            }
            let mut p = vec![u, v];
            p.extend(x[2..2 + k].iter().map(|y| self.spec.t_max * (2.0 * y - 1.0)));
            p.extend(x[2 + k..].iter().map(|y| self.spec.s_max * (2.0 * y - 1.0)));
            out.push(p);
        }
        out
    }

    pub fn surface_points(&self, count: usize) -> Vec<(f64, f64)> {
        self.draw(count).into_iter().map(|p| (p[0], p[1])).collect()
    }

    pub fn m_points(&self, count: usize) -> Vec<MPoint> {
        let k = self.surface.ambient_dim() - 4;
        self.draw(count)
            .into_iter()
            .map(|p| MPoint::new(p[0], p[1], p[2..2 + k].to_vec()))
            .collect()
    }

    pub fn lift_points(&self, count: usize) -> Vec<(MPoint, [f64; 2])> {
        let k = self.surface.ambient_dim() - 4;
        self.draw(count)
            .into_iter()
            .map(|p| (MPoint::new(p[0], p[1], p[2..2 + k].to_vec()), [p[2 + k], p[3 + k]]))
            .collect()
    }
}
