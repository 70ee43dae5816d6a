//! Isotropic minimal surfaces `g = Re phi` built from polynomial holomorphic data.
//!
//! Two generators are provided: the iterated Weierstrass chain
//! `alpha_{k+1} = beta (1 - phi_k.phi_k, i (1 + phi_k.phi_k), 2 phi_k)`, and
//! the realification of a holomorphic curve `eta: U -> C^m`. The isotropy
//! order the chain actually achieves is measured by [`crate::framegeo`],
//! never assumed here.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::holo::{complex_pair, CPoly, HoloCurve, C64, I};

/// Relative coefficient tolerance for "bdot vanishes identically".
pub const ISOTROPY_COEFF_TOL: f64 = 1e-12;

fn default_steps() -> usize {
    2
}

/// Input of the Weierstrass chain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainConfig {
    /// Ambient real dimension `N = n + 2`.
    pub ambient_dim: usize,
    /// `alpha_0`, of complex dimension `N - 2 * steps`.
    pub seed: HoloCurve,
    #[serde(default)]
    pub seed_isotropic: bool,
    /// One multiplier per step; empty means all ones.
    #[serde(default)]
    pub betas: Vec<CPoly>,
    #[serde(default, with = "complex_pair")]
    pub z0: C64,
    #[serde(default = "default_steps")]
    pub steps: usize,
}

impl ChainConfig {
    pub fn new(ambient_dim: usize, seed: HoloCurve) -> Self {
        Self {
            ambient_dim,
            seed,
            seed_isotropic: false,
            betas: Vec::new(),
            z0: C64::new(0.0, 0.0),
            steps: 2,
        }
    }

    pub fn with_isotropic_seed(mut self) -> Self {
        self.seed_isotropic = true;
        self
    }

    pub fn with_betas(mut self, betas: Vec<CPoly>) -> Self {
        self.betas = betas;
        self
    }

    pub fn with_steps(mut self, steps: usize) -> Self {
        self.steps = steps;
        self
    }

    pub fn with_base_point(mut self, z0: C64) -> Self {
        self.z0 = z0;
        self
    }

    pub fn beta(&self, step: usize) -> CPoly {
        self.betas.get(step).cloned().unwrap_or_else(CPoly::one)
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::InvalidInput("steps must be at least 1".into()));
        }
        if self.ambient_dim < 6 {
            return Err(Error::InvalidInput(format!(
                "ambient dimension must be at least 6, got {}",
                self.ambient_dim
            )));
        }
        let expected = self.ambient_dim as i64 - 2 * self.steps as i64;
        if expected < 1 || self.seed.dim() as i64 != expected {
            return Err(Error::InvalidInput(format!(
                "seed has complex dimension {} but N - 2*steps = {}",
                self.seed.dim(),
                expected
            )));
        }
        if self.seed.is_zero() {
            return Err(Error::InvalidInput("seed must be a nonzero curve".into()));
        }
        if !self.betas.is_empty() && self.betas.len() != self.steps {
            return Err(Error::InvalidInput(format!(
                "expected {} betas (one per step), got {}",
                self.steps,
                self.betas.len()
            )));
        }
        if let Some(k) = self.betas.iter().position(CPoly::is_zero) {
            return Err(Error::InvalidInput(format!("beta_{} is the zero polynomial", k + 1)));
        }
        if self.seed_isotropic {
            let residual = self.seed.bdot_residual(&self.seed)?;
            if residual > ISOTROPY_COEFF_TOL {
                return Err(Error::NonIsotropicSeed { residual });
            }
        }
        Ok(())
    }
}

/// Where a surface came from; echoed into surface files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    Chain(ChainConfig),
    Holomorphic { eta: HoloCurve },
    /// Built directly from `(alpha, phi)`, e.g. loaded or rotated.
    Explicit,
}

/// `g = Re phi` with `phi' = alpha` and `bdot(alpha, alpha) = 0`.
#[derive(Clone, Debug)]
pub struct Surface {
    alpha: HoloCurve,
    phi: HoloCurve,
    z0: C64,
    provenance: Provenance,
    /// `derivs[k] = phi^(k)`
    derivs: Vec<HoloCurve>,
}

impl Surface {
    /// Assembles a surface from its holomorphic data, checking the invariants.
    pub fn from_parts(alpha: HoloCurve, phi: HoloCurve, z0: C64, provenance: Provenance) -> Result<Self> {
        if alpha.dim() != phi.dim() {
            return Err(Error::DimensionMismatch {
                expected: alpha.dim(),
                found: phi.dim(),
            });
        }
        let dphi = phi.derivative();
        for (p, a) in dphi.components().iter().zip(alpha.components()) {
            let diff = (p - a).max_abs_coeff();
            if diff > 1e-12 * (1.0 + a.max_abs_coeff()) {
                return Err(Error::InvalidInput("phi' does not match alpha".into()));
            }
        }
        // loaded files may carry rounding; anything larger is not conformal
        let residual = alpha.bdot_residual(&alpha)?;
        if residual > 1e-9 {
            return Err(Error::InvalidInput(format!(
                "alpha is not isotropic (relative bdot residual {residual:e})"
            )));
        }
        if alpha.is_zero() {
            return Err(Error::InvalidInput("alpha is the zero curve".into()));
        }
        let mut derivs = vec![phi.clone()];
        for _ in 0..(phi.dim() + 4) {
            let next = derivs.last().expect("nonempty").derivative();
            derivs.push(next);
        }
        Ok(Self {
            alpha,
            phi,
            z0,
            provenance,
            derivs,
        })
    }

    pub fn alpha(&self) -> &HoloCurve {
        &self.alpha
    }

    pub fn phi(&self) -> &HoloCurve {
        &self.phi
    }

    pub fn z0(&self) -> C64 {
        self.z0
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// Real ambient dimension `N`.
    pub fn ambient_dim(&self) -> usize {
        self.phi.dim()
    }

    /// Dimension `n = N - 2` of the associated ruled submanifold.
    pub fn submanifold_dim(&self) -> usize {
        self.ambient_dim() - 2
    }

    /// Number of higher normal bundles, `m = floor((n + 1) / 2)`.
    pub fn normal_depth(&self) -> usize {
        (self.submanifold_dim() + 1) / 2
    }

    /// `phi^(k)(z)`.
    pub fn complex_derivative(&self, k: usize, z: C64) -> Vec<C64> {
        match self.derivs.get(k) {
            Some(c) => c.eval(z),
            None => {
                let mut c = self.derivs.last().expect("nonempty").clone();
                for _ in self.derivs.len() - 1..k {
                    c = c.derivative();
                }
                c.eval(z)
            }
        }
    }

    pub fn position(&self, u: f64, v: f64) -> DVector<f64> {
        self.partial(0, 0, u, v)
    }

    /// `d_u^a d_v^b g = Re(i^b phi^(a+b))`.
    pub fn partial(&self, a: usize, b: usize, u: f64, v: f64) -> DVector<f64> {
        let w = self.complex_derivative(a + b, C64::new(u, v));
        let ib = i_pow(b);
        DVector::from_iterator(w.len(), w.iter().map(|x| (ib * x).re))
    }

    /// The associated-family member with data `e^{i theta} phi`.
    pub fn rotated(&self, theta: f64) -> Surface {
        Surface::from_parts(
            self.alpha.rotate(theta),
            self.phi.rotate(theta),
            self.z0,
            Provenance::Explicit,
        )
        .expect("rotation preserves the surface invariants")
    }
}

pub(crate) fn i_pow(b: usize) -> C64 {
    match b % 4 {
        0 => C64::new(1.0, 0.0),
        1 => I,
        2 => C64::new(-1.0, 0.0),
        _ => -I,
    }
}

/// One step of the chain: `beta (1 - s, i (1 + s), 2 phi_prev)` with
/// `s = bdot(phi_prev, phi_prev)`.
pub fn chain_step(phi_prev: &HoloCurve, beta: &CPoly) -> Result<HoloCurve> {
    if beta.is_zero() {
        return Err(Error::InvalidInput("beta must not be the zero polynomial".into()));
    }
    let s = phi_prev.bdot(phi_prev)?;
    let one = CPoly::one();
    let mut comps = Vec::with_capacity(phi_prev.dim() + 2);
    comps.push(beta * &(&one - &s));
    comps.push(&beta.scale(I) * &(&one + &s));
    comps.extend(
        phi_prev
            .components()
            .iter()
            .map(|p| &beta.scale(C64::new(2.0, 0.0)) * p),
    );
    HoloCurve::new(comps)
}

pub fn build_chain_surface(cfg: &ChainConfig) -> Result<Surface> {
    cfg.validate()?;
    let mut alpha = cfg.seed.clone();
    for step in 0..cfg.steps {
        let phi = alpha.antiderivative(cfg.z0);
        alpha = chain_step(&phi, &cfg.beta(step))?;
    }
    let phi = alpha.antiderivative(cfg.z0);
    Surface::from_parts(alpha, phi, cfg.z0, Provenance::Chain(cfg.clone()))
}

/// Realification of a holomorphic curve `eta` in `C^m = R^{2m}`:
/// `phi = (eta_1, -i eta_1, eta_2, -i eta_2, ...)`.
pub fn build_holomorphic_surface(eta: &HoloCurve) -> Result<Surface> {
    if eta.dim() < 2 {
        return Err(Error::InvalidInput(format!(
            "holomorphic curve needs at least 2 components, got {}",
            eta.dim()
        )));
    }
    if eta.derivative().is_zero() {
        return Err(Error::InvalidInput("holomorphic curve is constant".into()));
    }
    let comps = eta
        .components()
        .iter()
        .flat_map(|p| [p.clone(), p.scale(-I)])
        .collect();
    let phi = HoloCurve::new(comps)?;
    Surface::from_parts(
        phi.derivative(),
        phi,
        C64::new(0.0, 0.0),
        Provenance::Holomorphic { eta: eta.clone() },
    )
}

/// Exact partial derivatives of `g` at a point.
#[derive(Clone, Debug)]
pub struct SurfaceJet {
    pub u: f64,
    pub v: f64,
    pub order: usize,
    partials: Vec<DVector<f64>>,
    /// Conformal factor `<g_u, g_u>`.
    pub lambda2: f64,
}

impl SurfaceJet {
    fn index(a: usize, b: usize) -> usize {
        let k = a + b;
        k * (k + 1) / 2 + b
    }

    /// `d_u^a d_v^b g`; panics if `a + b` exceeds the jet order.
    pub fn partial(&self, a: usize, b: usize) -> &DVector<f64> {
        assert!(a + b <= self.order, "partial of order {} beyond jet order {}", a + b, self.order);
        &self.partials[Self::index(a, b)]
    }
}

pub fn surface_jet(s: &Surface, u: f64, v: f64, order: usize) -> SurfaceJet {
    let order = order.max(1);
    let mut partials = Vec::with_capacity((order + 1) * (order + 2) / 2);
    for k in 0..=order {
        let w = s.complex_derivative(k, C64::new(u, v));
        for b in 0..=k {
            let ib = i_pow(b);
            partials.push(DVector::from_iterator(w.len(), w.iter().map(|x| (ib * x).re)));
        }
    }
    let lambda2 = partials[SurfaceJet::index(1, 0)].norm_squared();
    SurfaceJet {
        u,
        v,
        order,
        partials,
        lambda2,
    }
}

/// Rank of the set of partial derivatives of `g` of order `1..=max_order` at a
/// point, with singular values below `1e-9` of the largest treated as zero.
/// A substantial surface reaches the ambient dimension for large enough order.
pub fn derivative_span_rank(s: &Surface, u: f64, v: f64, max_order: usize) -> usize {
    let jet = surface_jet(s, u, v, max_order);
    let cols: Vec<DVector<f64>> = (1..=max_order)
        .flat_map(|k| (0..=k).map(move |b| (k - b, b)))
        .map(|(a, b)| jet.partial(a, b).clone())
        .collect();
    let m = nalgebra::DMatrix::from_columns(&cols);
    let sv = m.singular_values();
    let top = sv.max();
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&x| x > 1e-9 * top).count()
}
