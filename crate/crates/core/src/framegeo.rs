//! Adapted frames `tangent + N_1 + N_2 + ...`, higher fundamental forms and
//! ellipse-of-curvature verdicts, all computed from exact jets of `g`.

use std::ops::Range;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fd;
use crate::holo::C64;
use crate::isogen::Surface;

/// Gram-Schmidt pivots below this fraction of the candidate's norm count as
/// linearly dependent.
pub const PIVOT_TOL: f64 = 1e-9;

/// Orthonormal ambient frame adapted to the higher normal splitting.
///
/// Block `r` occupies columns `2r..min(2r + 2, N)`: block 0 is the tangent
/// plane, block `r >= 1` is `N_r`. When the derivative data stops spanning
/// (non-substantial surfaces, or isolated degenerate points) the remaining
/// columns are completed by a deterministic orthonormal complement and
/// `first_deficient` records where that happened.
#[derive(Clone, Debug)]
pub struct AdaptedFrame {
    pub u: f64,
    pub v: f64,
    /// Columns `e_1, ..., e_N`.
    pub vectors: DMatrix<f64>,
    /// Number of columns obtained from derivatives, per block.
    pub block_ranks: Vec<usize>,
    /// First block whose derived rank is below its width, if any.
    pub first_deficient: Option<usize>,
    /// A block within the requested depth was deficient.
    pub degenerate: bool,
    pub depth: usize,
    pub lambda2: f64,
    derived: usize,
}

impl AdaptedFrame {
    pub fn dim(&self) -> usize {
        self.vectors.nrows()
    }

    /// `e_{i+1}` (zero-based column).
    pub fn e(&self, i: usize) -> DVector<f64> {
        self.vectors.column(i).into_owned()
    }

    pub fn block_count(&self) -> usize {
        self.dim().div_ceil(2)
    }

    pub fn block_range(&self, r: usize) -> Range<usize> {
        let n = self.dim();
        (2 * r).min(n)..(2 * r + 2).min(n)
    }

    /// Columns produced from derivatives; the rest is completion.
    pub fn derived_count(&self) -> usize {
        self.derived
    }

    /// Blocks `0..r` are all spanned by derivative data.
    pub fn is_full_through(&self, r: usize) -> bool {
        self.first_deficient.is_none_or(|d| d > r)
    }

    pub fn project_onto_block(&self, r: usize, x: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.dim());
        for i in self.block_range(r) {
            let e = self.vectors.column(i);
            out.axpy(e.dot(x), &e, 1.0);
        }
        out
    }

    pub fn orthonormality_residual(&self) -> f64 {
        let g = self.vectors.transpose() * &self.vectors;
        (g - DMatrix::identity(self.dim(), self.dim())).amax()
    }

    pub fn completion(&self) -> Vec<DVector<f64>> {
        (self.derived..self.dim()).map(|i| self.e(i)).collect()
    }
}

fn orthogonalize(basis: &[DVector<f64>], x: &DVector<f64>) -> DVector<f64> {
    let mut y = x.clone();
    // two passes keep the result orthogonal to working precision
    for _ in 0..2 {
        for e in basis {
            let c = e.dot(&y);
            y.axpy(-c, e, 1.0);
        }
    }
    y
}

fn complete(basis: &mut Vec<DVector<f64>>, dim: usize, hints: &[DVector<f64>]) {
    let candidates: Vec<DVector<f64>> = hints
        .iter()
        .cloned()
        .chain((0..dim).map(|i| DVector::from_fn(dim, |j, _| if i == j { 1.0 } else { 0.0 })))
        .collect();
    while basis.len() < dim {
        let residuals: Vec<DVector<f64>> = candidates.iter().map(|c| orthogonalize(basis, c)).collect();
        let pick = residuals
            .iter()
            .position(|r| r.norm() > 0.5)
            .unwrap_or_else(|| {
                residuals
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
                    .map(|(i, _)| i)
                    .expect("candidates nonempty")
            });
        let r = &residuals[pick];
        basis.push(r / r.norm());
    }
}

/// Gram-Schmidt over `g_u, g_v, g_uu, g_uv, g_uuu, g_uuv, ...` through block
/// `depth`, then orthonormal completion.
pub fn adapted_frame(s: &Surface, u: f64, v: f64, depth: usize) -> AdaptedFrame {
    adapted_frame_with_hints(s, u, v, depth, &[])
}

/// As [`adapted_frame`], preferring `hints` (in order) for the completion.
pub fn adapted_frame_with_hints(
    s: &Surface,
    u: f64,
    v: f64,
    depth: usize,
    hints: &[DVector<f64>],
) -> AdaptedFrame {
    let dim = s.ambient_dim();
    let blocks = dim.div_ceil(2);
    let depth = depth.min(blocks - 1);
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(dim);
    let mut block_ranks = vec![0; blocks];
    let mut first_deficient = None;
    let z = C64::new(u, v);
    'outer: for r in 0..=depth {
        let w = s.complex_derivative(r + 1, z);
        let cand = [
            DVector::from_iterator(dim, w.iter().map(|x| x.re)),
            DVector::from_iterator(dim, w.iter().map(|x| -x.im)),
        ];
        let width = (dim - 2 * r).min(2);
        for c in cand.iter().take(width) {
            let y = orthogonalize(&basis, c);
            let scale = c.norm();
            if scale == 0.0 || y.norm() < PIVOT_TOL * scale {
                first_deficient = Some(r);
                break 'outer;
            }
            basis.push(&y / y.norm());
            block_ranks[r] += 1;
        }
    }
    if first_deficient.is_none() && depth + 1 < blocks {
        // blocks past the requested depth are not derived
        first_deficient = Some(depth + 1);
    }
    let derived = basis.len();
    complete(&mut basis, dim, hints);
    let lambda2 = s.partial(1, 0, u, v).norm_squared();
    AdaptedFrame {
        u,
        v,
        vectors: DMatrix::from_columns(&basis),
        block_ranks,
        degenerate: first_deficient.is_some_and(|d| d <= depth),
        first_deficient,
        depth,
        lambda2,
        derived,
    }
}

/// Frames near a base point with the completion and signs pinned to the base
/// frame, so that finite differences see a smooth field.
#[derive(Clone, Debug)]
pub struct FrameField<'a> {
    surface: &'a Surface,
    depth: usize,
    base: AdaptedFrame,
    hints: Vec<DVector<f64>>,
}

impl<'a> FrameField<'a> {
    pub fn new(surface: &'a Surface, u: f64, v: f64, depth: usize) -> Self {
        Self::with_hints(surface, u, v, depth, &[])
    }

    /// Anchored at `(u, v)` with its completion seeded by `hints`.
    pub fn with_hints(surface: &'a Surface, u: f64, v: f64, depth: usize, hints: &[DVector<f64>]) -> Self {
        let base = adapted_frame_with_hints(surface, u, v, depth, hints);
        let hints = base.completion();
        Self {
            surface,
            depth,
            base,
            hints,
        }
    }

    pub fn base(&self) -> &AdaptedFrame {
        &self.base
    }

    pub fn surface(&self) -> &Surface {
        self.surface
    }

    pub fn at(&self, u: f64, v: f64) -> Result<AdaptedFrame> {
        let mut f = adapted_frame_with_hints(self.surface, u, v, self.depth, &self.hints);
        if f.block_ranks != self.base.block_ranks {
            return Err(Error::GaugeDiscontinuity { u, v });
        }
        for i in 0..f.dim() {
            let d = f.vectors.column(i).dot(&self.base.vectors.column(i));
            if d.abs() < 0.5 {
                return Err(Error::GaugeDiscontinuity { u, v });
            }
            if d < 0.0 {
                f.vectors.column_mut(i).neg_mut();
            }
        }
        Ok(f)
    }
}

/// `A = alpha^s(e_1, ..., e_1)`, `B = alpha^s(e_1, ..., e_1, e_2)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HigherFormData {
    pub order: usize,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    /// `|A|`, the curvature magnitude `kappa_{s-1}`.
    pub kappa: f64,
    /// `(|d_u^s g| + |d_u^{s-1} d_v g|) / lambda^s`, the size of the
    /// unprojected data; used for relative thresholds.
    pub scale: f64,
}

impl HigherFormData {
    pub fn a_vec(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.a)
    }

    pub fn b_vec(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.b)
    }
}

/// Forms of order `2..=max_order + 1` from projected jets.
pub fn higher_forms(s: &Surface, u: f64, v: f64, max_order: usize) -> Result<Vec<HigherFormData>> {
    higher_forms_rotated(s, u, v, max_order, 0.0)
}

/// As [`higher_forms`] with `e_1` replaced by `cos(theta) e_1 + sin(theta) e_2`
/// and `e_2` by its rotation.
pub fn higher_forms_rotated(
    s: &Surface,
    u: f64,
    v: f64,
    max_order: usize,
    theta: f64,
) -> Result<Vec<HigherFormData>> {
    let frame = adapted_frame(s, u, v, max_order);
    higher_forms_in(&frame, s, max_order, theta)
}

fn higher_forms_in(
    frame: &AdaptedFrame,
    s: &Surface,
    max_order: usize,
    theta: f64,
) -> Result<Vec<HigherFormData>> {
    let (u, v) = (frame.u, frame.v);
    if max_order == 0 || max_order >= frame.block_count() {
        return Err(Error::InvalidInput(format!(
            "max_order must be in 1..={}, got {max_order}",
            frame.block_count() - 1
        )));
    }
    if !frame.is_full_through(max_order - 1) {
        return Err(Error::degenerate(u, v, "adapted frame is deficient below the requested order"));
    }
    let lambda = frame.lambda2.sqrt();
    let z = C64::new(u, v);
    let dim = frame.dim();
    let mut out = Vec::with_capacity(max_order);
    for order in 2..=max_order + 1 {
        let w = s.complex_derivative(order, z);
        let rot = C64::from_polar(1.0, order as f64 * theta);
        let ra = DVector::from_iterator(dim, w.iter().map(|x| (rot * x).re));
        let rb = DVector::from_iterator(dim, w.iter().map(|x| (crate::holo::I * rot * x).re));
        let norm = lambda.powi(order as i32);
        let a = frame.project_onto_block(order - 1, &ra) / norm;
        let b = frame.project_onto_block(order - 1, &rb) / norm;
        out.push(HigherFormData {
            order,
            kappa: a.norm(),
            scale: (ra.norm() + rb.norm()) / norm,
            a: a.as_slice().to_vec(),
            b: b.as_slice().to_vec(),
        });
    }
    Ok(out)
}

/// Circle test for the ellipse `E_k`, generated by the order `k + 1` forms.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EllipseReport {
    pub order: usize,
    pub dot_resid: f64,
    pub norm_resid: f64,
    /// `sqrt((|A|^2 - |B|^2)^2 + 4 <A,B>^2) / (|A|^2 + |B|^2)`: zero exactly
    /// for circles and independent of the tangent gauge.
    pub defect: f64,
    /// Both generators are negligible against the unprojected data.
    pub vanishing: bool,
    pub is_circle: bool,
}

impl EllipseReport {
    pub fn from_form(order: usize, form: &HigherFormData, tol: f64) -> Self {
        let a = form.a_vec();
        let b = form.b_vec();
        let eps = 1e-14 * form.scale;
        let (na, nb) = (a.norm(), b.norm());
        let dot = a.dot(&b);
        let dot_resid = dot / (na * nb + eps);
        let norm_resid = (na - nb) / (na + nb + eps);
        let sq = na * na + nb * nb;
        let defect = if sq > 0.0 {
            ((na * na - nb * nb).powi(2) + 4.0 * dot * dot).sqrt() / sq
        } else {
            0.0
        };
        let vanishing = na + nb <= 1e-9 * form.scale;
        Self {
            order,
            dot_resid,
            norm_resid,
            defect,
            vanishing,
            is_circle: !vanishing && dot_resid.abs() < tol && norm_resid.abs() < tol,
        }
    }

    pub fn worst(&self) -> f64 {
        self.dot_resid.abs().max(self.norm_resid.abs())
    }
}

pub fn ellipse_report(s: &Surface, u: f64, v: f64, k: usize, tol: f64) -> Result<EllipseReport> {
    let forms = higher_forms(s, u, v, k)?;
    Ok(EllipseReport::from_form(k, forms.last().expect("k >= 1"), tol))
}

/// Components of the third fundamental form in the `(e_5, e_6)` frame:
/// `alpha^3_111 = kappa_1 (a1 e_5 + b1 e_6)`, `alpha^3_112 = kappa_1 (a2 e_5 + b2 e_6)`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ThirdFormComponents {
    pub a1: f64,
    pub a2: f64,
    pub b1: f64,
    pub b2: f64,
    pub kappa1: f64,
}

impl ThirdFormComponents {
    /// `max(|a1 a2 + b1 b2|, |a1^2 + b1^2 - a2^2 - b2^2|)`, normalized.
    pub fn circle_residual(&self) -> f64 {
        let n = (self.a1 * self.a1 + self.b1 * self.b1 + self.a2 * self.a2 + self.b2 * self.b2).max(f64::MIN_POSITIVE);
        let dot = self.a1 * self.a2 + self.b1 * self.b2;
        let diff = self.a1 * self.a1 + self.b1 * self.b1 - self.a2 * self.a2 - self.b2 * self.b2;
        (2.0 * dot.abs()).max(diff.abs()) / n
    }

    /// Residual of `a1 = b2, a2 = -b1` up to the reflection `e_6 -> -e_6`.
    pub fn rotation_residual(&self) -> f64 {
        let n = (self.a1.abs() + self.b1.abs() + self.a2.abs() + self.b2.abs()).max(f64::MIN_POSITIVE);
        let plus = (self.a1 - self.b2).abs().max((self.a2 + self.b1).abs());
        let minus = (self.a1 + self.b2).abs().max((self.a2 - self.b1).abs());
        plus.min(minus) / n
    }
}

pub fn third_form_components(s: &Surface, u: f64, v: f64) -> Result<ThirdFormComponents> {
    if s.ambient_dim() < 6 {
        return Err(Error::InvalidInput("third form needs N >= 6".into()));
    }
    let frame = adapted_frame(s, u, v, 2);
    let forms = higher_forms_in(&frame, s, 2, 0.0)?;
    let kappa1 = forms[0].kappa;
    if kappa1 < 1e-12 * forms[0].scale.max(1.0) {
        return Err(Error::degenerate(u, v, "flat point (kappa_1 vanishes)"));
    }
    let a3 = forms[1].a_vec() / kappa1;
    let b3 = forms[1].b_vec() / kappa1;
    let e5 = frame.e(4);
    let e6 = frame.e(5);
    Ok(ThirdFormComponents {
        a1: a3.dot(&e5),
        b1: a3.dot(&e6),
        a2: b3.dot(&e5),
        b2: b3.dot(&e6),
        kappa1,
    })
}

/// Ellipse reports of all available orders at one sample.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IsotropyRow {
    pub index: usize,
    pub u: f64,
    pub v: f64,
    pub ellipses: Vec<EllipseReport>,
    /// Number of leading circles.
    pub order: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IsotropyReport {
    /// Minimum over non-degenerate samples of the leading-circle count.
    pub order: usize,
    /// `m`, the number of ellipses a substantial surface has.
    pub max_order: usize,
    pub rows: Vec<IsotropyRow>,
    pub degenerate_count: usize,
}

fn isotropy_row(s: &Surface, index: usize, u: f64, v: f64, tol: f64) -> Option<(usize, IsotropyRow)> {
    let m = s.normal_depth();
    let frame = adapted_frame(s, u, v, m);
    if !frame.is_full_through(0) {
        return None;
    }
    // E_k needs blocks below k spanned; a deficient N_k already fails E_k
    let top = frame.first_deficient.map_or(m, |d| d.min(m));
    let forms = higher_forms_in(&frame, s, top, 0.0).ok()?;
    let ellipses: Vec<EllipseReport> = forms
        .iter()
        .enumerate()
        .map(|(i, f)| EllipseReport::from_form(i + 1, f, tol))
        .collect();
    let order = ellipses.iter().take_while(|e| e.is_circle).count();
    let row = IsotropyRow {
        index,
        u,
        v,
        ellipses,
        order,
    };
    Some((frame.derived_count(), row))
}

/// Largest `k` such that `E_1, ..., E_k` are circles at every usable sample.
pub fn isotropy_order(s: &Surface, samples: &[(f64, f64)], tol: f64) -> IsotropyReport {
    let rows: Vec<Option<(usize, IsotropyRow)>> = samples
        .par_iter()
        .enumerate()
        .map(|(i, &(u, v))| isotropy_row(s, i, u, v, tol))
        .collect();
    // samples whose derivative span drops below the generic rank sit on the
    // isolated degenerate set and are skipped
    let generic = rows.iter().flatten().map(|(d, _)| *d).max().unwrap_or(0);
    let rows: Vec<IsotropyRow> = rows
        .into_iter()
        .flatten()
        .filter(|(d, _)| *d == generic)
        .map(|(_, r)| r)
        .collect();
    let degenerate_count = samples.len() - rows.len();
    let order = rows.iter().map(|r| r.order).min().unwrap_or(0);
    IsotropyReport {
        order,
        max_order: s.normal_depth(),
        rows,
        degenerate_count,
    }
}

/// Residuals of the connection-form identities of a holomorphic curve at one
/// level `s`, each divided by `1 + tau_s`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConnectionRow {
    pub level: usize,
    pub tau: f64,
    /// `[w_{2s-1,2s+1} - tau w_1, w_{2s,2s+2} - tau w_1,
    ///   w_{2s-1,2s+2} - tau w_2, -w_{2s,2s+1} - tau w_2]`, evaluated on
    /// `e_1` (first four) and on `e_2` (last four).
    pub residuals: [f64; 8],
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConnectionReport {
    pub u: f64,
    pub v: f64,
    pub rows: Vec<ConnectionRow>,
    pub max_residual: f64,
}

/// Default step for differentiating frame fields.
pub const FRAME_FD_STEP: f64 = 1e-3;

/// `omega_ij(X) = <D_X e_i, e_j>` for `X = e_1, e_2`, by fourth-order central
/// differences of the sign-aligned frame field.
pub fn connection_forms(field: &FrameField<'_>, h: f64) -> Result<[DMatrix<f64>; 2]> {
    let b = field.base();
    let (u, v) = (b.u, b.v);
    let lambda = b.lambda2.sqrt();
    let du = fd::d1(|d| field.at(u + d, v).map(|f| f.vectors), h)?;
    let dv = fd::d1(|d| field.at(u, v + d).map(|f| f.vectors), h)?;
    // entry (i, j) = <d e_i, e_j>
    let w1 = du.transpose() * &b.vectors / lambda;
    let w2 = dv.transpose() * &b.vectors / lambda;
    Ok([w1, w2])
}

pub fn connection_form_residuals(s: &Surface, u: f64, v: f64) -> Result<ConnectionReport> {
    connection_form_residuals_with_step(s, u, v, FRAME_FD_STEP)
}

pub fn connection_form_residuals_with_step(s: &Surface, u: f64, v: f64, h: f64) -> Result<ConnectionReport> {
    let dim = s.ambient_dim();
    let top = (dim - 2) / 2;
    if top == 0 {
        return Err(Error::InvalidInput("connection forms need N >= 4".into()));
    }
    let field = FrameField::new(s, u, v, s.normal_depth());
    let forms = higher_forms_in(field.base(), s, top, 0.0)?;
    let [w1, w2] = connection_forms(&field, h)?;
    let mut kappa_prev = 1.0;
    let mut rows = Vec::with_capacity(top);
    for (idx, form) in forms.iter().enumerate() {
        let level = idx + 1;
        let tau = form.kappa / kappa_prev;
        kappa_prev = form.kappa;
        let (i1, i2, j1, j2) = (2 * level - 2, 2 * level - 1, 2 * level, 2 * level + 1);
        let norm = 1.0 + tau;
        let r = |w: &DMatrix<f64>, k: usize| -> [f64; 4] {
            let t1 = if k == 0 { tau } else { 0.0 };
            let t2 = if k == 1 { tau } else { 0.0 };
            [
                (w[(i1, j1)] - t1).abs() / norm,
                (w[(i2, j2)] - t1).abs() / norm,
                (w[(i1, j2)] - t2).abs() / norm,
                (-w[(i2, j1)] - t2).abs() / norm,
            ]
        };
        let (a, b) = (r(&w1, 0), r(&w2, 1));
        let mut residuals = [0.0; 8];
        residuals[..4].copy_from_slice(&a);
        residuals[4..].copy_from_slice(&b);
        rows.push(ConnectionRow { level, tau, residuals });
    }
    let max_residual = rows
        .iter()
        .flat_map(|r| r.residuals.iter().copied())
        .fold(0.0, f64::max);
    Ok(ConnectionReport {
        u,
        v,
        rows,
        max_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::isogen::build_holomorphic_surface;
    use crate::presets::{monomial_curve, Preset};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn pts() -> Vec<(f64, f64)> {
        vec![(0.1, -0.2), (0.35, 0.3), (-0.5, 0.15), (0.6, -0.55), (-0.25, -0.6)]
    }

    #[test]
    fn frame_of_parabola_curve_at_origin_is_standard() {
        let s = build_holomorphic_surface(&monomial_curve(2)).unwrap();
        let f = adapted_frame(&s, 0.0, 0.0, 1);
        assert!(!f.degenerate);
        assert!((f.vectors.clone() - DMatrix::identity(4, 4)).amax() < 1e-15);
        let forms = higher_forms(&s, 0.0, 0.0, 1).unwrap();
        assert_eq!(forms[0].a, vec![0.0, 0.0, 2.0, 0.0]);
        assert_eq!(forms[0].b, vec![0.0, 0.0, 0.0, 2.0]);
        assert_eq!(forms[0].kappa, 2.0);
    }

    #[test]
    fn frames_are_orthonormal_and_start_tangent() {
        for p in Preset::ALL {
            let s = p.build().unwrap();
            for (u, v) in pts() {
                let f = adapted_frame(&s, u, v, s.normal_depth());
                assert!(f.orthonormality_residual() < 1e-10, "{p}");
                let gu = s.partial(1, 0, u, v);
                let gv = s.partial(0, 1, u, v);
                let l = f.lambda2.sqrt();
                assert!((f.e(0) - &gu / l).amax() < 1e-12);
                assert!((f.e(1) - &gv / l).amax() < 1e-12);
            }
        }
    }

    #[test]
    fn swapping_pair_order_changes_only_signs_within_blocks() {
        // Gram-Schmidt on (mixed, pure) instead of (pure, mixed) spans the same
        // blocks; compare the block projectors
        let s = Preset::N6Canonical.build().unwrap();
        let (u, v) = (0.3, -0.2);
        let f = adapted_frame(&s, u, v, 3);
        let mut basis: Vec<DVector<f64>> = Vec::new();
        for r in 0..3 {
            let w = s.complex_derivative(r + 1, C64::new(u, v));
            let re = DVector::from_iterator(8, w.iter().map(|x| x.re));
            let mixed = DVector::from_iterator(8, w.iter().map(|x| -x.im));
            for c in [mixed, re] {
                let y = orthogonalize(&basis, &c);
                basis.push(&y / y.norm());
            }
        }
        for r in 0..3 {
            let p1 = f.vectors.columns(2 * r, 2) * f.vectors.columns(2 * r, 2).transpose();
            let q = DMatrix::from_columns(&basis[2 * r..2 * r + 2]);
            let p2 = &q * q.transpose();
            assert!((p1 - p2).amax() < 1e-10, "block {r}");
        }
    }

    #[test]
    fn minimality_of_second_form() {
        for p in Preset::ALL {
            let s = p.build().unwrap();
            for (u, v) in pts() {
                let f = adapted_frame(&s, u, v, 1);
                let l = f.lambda2.sqrt();
                let tr = (s.partial(2, 0, u, v) + s.partial(0, 2, u, v)) / f.lambda2;
                assert!(tr.norm() < 1e-10 * l.max(1.0), "{p}");
            }
        }
    }

    #[test]
    fn ellipse_verdicts_for_canonical_configs() {
        let n4 = Preset::N4Canonical.build().unwrap();
        let n6 = Preset::N6Canonical.build().unwrap();
        let lit = Preset::LiteralRecipe.build().unwrap();
        for (u, v) in pts() {
            for k in 1..=2 {
                assert!(ellipse_report(&n4, u, v, k, 1e-9).unwrap().is_circle);
                assert!(ellipse_report(&n6, u, v, k, 1e-9).unwrap().is_circle);
            }
            let e3 = ellipse_report(&n6, u, v, 3, 1e-9).unwrap();
            assert!(!e3.is_circle && e3.norm_resid.abs() > 0.1, "{e3:?}");
            assert!(ellipse_report(&lit, u, v, 1, 1e-9).unwrap().is_circle);
            assert!(!ellipse_report(&lit, u, v, 2, 1e-9).unwrap().is_circle);
        }
    }

    #[test]
    fn isotropy_orders() {
        let cases = [
            (Preset::N4Canonical, 2),
            (Preset::N6Canonical, 2),
            (Preset::LiteralRecipe, 1),
            (Preset::GenericRecipe, 1),
            (Preset::EnneperEmbedded, 0),
            (Preset::HolomorphicN2, 1),
            (Preset::HolomorphicN4, 2),
            (Preset::HolomorphicN6, 3),
        ];
        for (p, expected) in cases {
            let s = p.build().unwrap();
            let rep = isotropy_order(&s, &pts(), 1e-8);
            assert_eq!(rep.order, expected, "{p}");
            assert_eq!(rep.degenerate_count, 0, "{p}");
        }
    }

    #[test]
    fn circle_test_is_gauge_invariant() {
        let s = Preset::N6Canonical.build().unwrap();
        for (u, v) in pts() {
            let f0 = higher_forms(&s, u, v, 3).unwrap();
            let f1 = higher_forms_rotated(&s, u, v, 3, 0.7).unwrap();
            for (a, b) in f0.iter().zip(&f1) {
                let ea = EllipseReport::from_form(a.order - 1, a, 1e-8);
                let eb = EllipseReport::from_form(b.order - 1, b, 1e-8);
                assert!((ea.defect - eb.defect).abs() < 1e-12);
                assert_eq!(ea.is_circle, eb.is_circle);
            }
        }
    }

    #[test]
    fn third_form_identities() {
        let s = Preset::N4Canonical.build().unwrap();
        for (u, v) in pts() {
            let c = third_form_components(&s, u, v).unwrap();
            assert!(c.circle_residual() < 1e-8);
            assert!(c.rotation_residual() < 1e-8, "{c:?}");
            // with e_5 along alpha^3_111: (a1, b1) = (kappa, 0)
            assert!(c.b1.abs() < 1e-10 * c.a1.abs());
            let forms = higher_forms(&s, u, v, 2).unwrap();
            let (a3, b3) = (forms[1].a_vec(), forms[1].b_vec());
            let k2 = c.kappa1 * c.kappa1;
            assert!(close(a3.dot(&b3), k2 * (c.a1 * c.a2 + c.b1 * c.b2), 1e-10 * a3.norm_squared().max(1.0)));
            assert!(close(a3.norm_squared(), k2 * (c.a1 * c.a1 + c.b1 * c.b1), 1e-10 * a3.norm_squared().max(1.0)));
        }
        let lit = Preset::LiteralRecipe.build().unwrap();
        assert!(third_form_components(&lit, 0.3, 0.2).unwrap().circle_residual() > 1e-2);
    }

    /// Covariant-derivative oracle: `alpha^{s+1}_{1..1} = (D_{e_1} alpha^s_{1..1})_{N_s}`
    /// with the derivative taken by finite differences of the jet-based `A_s` field.
    #[test]
    fn jets_match_inductive_definition() {
        for p in [Preset::N4Canonical, Preset::N6Canonical, Preset::LiteralRecipe] {
            let s = p.build().unwrap();
            for (u, v) in pts() {
                for order in 3..=4 {
                    let lower = order - 1;
                    // order 4 needs N_3, which only the n6 frames derive
                    let frame = adapted_frame(&s, u, v, s.normal_depth());
                    if order - 1 >= frame.block_count() || !frame.is_full_through(order - 2) {
                        continue;
                    }
                    let a_field = |du: f64, dv: f64| -> Result<DMatrix<f64>> {
                        let f = higher_forms(&s, u + du, v + dv, lower - 1)?;
                        Ok(DMatrix::from_column_slice(s.ambient_dim(), 1, &f[lower - 2].a))
                    };
                    let h = 1e-3;
                    let l = frame.lambda2.sqrt();
                    let da = fd::d1(|d| a_field(d, 0.0), h).unwrap().column(0).into_owned() / l;
                    let db = fd::d1(|d| a_field(0.0, d), h).unwrap().column(0).into_owned() / l;
                    let ind_a = frame.project_onto_block(order - 1, &da);
                    let ind_b = frame.project_onto_block(order - 1, &db);
                    let jet = higher_forms(&s, u, v, order - 1).unwrap();
                    let last = jet.last().unwrap();
                    let scale = last.scale.max(1e-300);
                    assert!((ind_a - last.a_vec()).norm() < 1e-6 * scale, "{p} order {order}");
                    assert!((ind_b - last.b_vec()).norm() < 1e-6 * scale, "{p} order {order}");
                }
            }
        }
    }

    #[test]
    fn connection_identities_hold_on_holomorphic_curves() {
        let s = build_holomorphic_surface(&monomial_curve(4)).unwrap();
        for (u, v) in pts() {
            let rep = connection_form_residuals(&s, u, v).unwrap();
            assert_eq!(rep.rows.len(), 3);
            assert!(rep.max_residual < 1e-5, "{rep:?}");
            // kappa_0 = 1
            let f = higher_forms(&s, u, v, 1).unwrap();
            assert_eq!(rep.rows[0].tau, f[0].kappa);
        }
        let n6 = Preset::N6Canonical.build().unwrap();
        let rep = connection_form_residuals(&n6, 0.3, -0.2).unwrap();
        assert!(rep.max_residual > 1e-2);
    }

    #[test]
    fn degenerate_frames_are_flagged() {
        // z^3 curve realified: g_u vanishes at the origin
        let eta = crate::holo::HoloCurve::new(vec![
            crate::holo::CPoly::monomial(C64::new(1.0, 0.0), 3),
            crate::holo::CPoly::monomial(C64::new(1.0, 0.0), 4),
        ])
        .unwrap();
        let s = build_holomorphic_surface(&eta).unwrap();
        let f = adapted_frame(&s, 0.0, 0.0, 1);
        assert!(f.degenerate);
        assert_eq!(f.first_deficient, Some(0));
        assert!(f.orthonormality_residual() < 1e-12);
        assert!(matches!(higher_forms(&s, 0.0, 0.0, 1), Err(Error::Degenerate { .. })));
        let rep = isotropy_order(&s, &[(0.0, 0.0), (0.3, 0.1)], 1e-8);
        assert_eq!(rep.degenerate_count, 1);
    }
}
