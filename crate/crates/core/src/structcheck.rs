//! Almost complex structures on `M^n`, the commutation and parallelism tests
//! built on them, and the Lagrangian lift of the normal bundle into `C^N`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fd;
use crate::isogen::Surface;
use crate::ruled::{ImmersionJet, MPoint, RuledImmersion};

/// Sign choices `(epsilon, delta)` on `V^1` and on `V^0`.
pub const SIGN_CHOICES: [(f64, f64); 4] = [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)];

/// Matrix of `T` in the frame `(E_1, E_2 | E_3, E_4 | E_5, ..., E_n)`:
/// `[[0, 1], [-1, 0]]` on `H`, `epsilon [[0, -1], [1, 0]]` on `V^1`, identity
/// on `V^0`. Columns are images of basis vectors.
pub fn t_operator(n: usize, epsilon: f64) -> DMatrix<f64> {
    let mut t = j_operator(n.min(4), epsilon, 1.0).resize(n, n, 0.0);
    for i in 4..n {
        t[(i, i)] = 1.0;
    }
    t
}

/// Matrix of `J`: equal to `T` on `H + V^1`, and `J E_{2i+1} = delta E_{2i+2}`
/// on `V^0`. Needs `n` even.
pub fn j_operator(n: usize, epsilon: f64, delta: f64) -> DMatrix<f64> {
    assert!(n % 2 == 0, "J needs an even dimension, got {n}");
    let mut j = DMatrix::zeros(n, n);
    j[(1, 0)] = -1.0;
    j[(0, 1)] = 1.0;
    if n >= 4 {
        j[(3, 2)] = epsilon;
        j[(2, 3)] = -epsilon;
    }
    for i in (4..n).step_by(2) {
        j[(i + 1, i)] = delta;
        j[(i, i + 1)] = -delta;
    }
    j
}

/// Chart-coordinate components of a `G`-orthonormal tangent frame: `E_{j+2} =
/// d_{t_j}`, and `E_1, E_2` from Gram-Schmidt of `d_u, d_v` against the
/// rulings, optionally rotated in their plane by `theta`.
pub fn split_frame(metric: &DMatrix<f64>, theta: f64) -> DMatrix<f64> {
    let n = metric.nrows();
    let mut e = DMatrix::identity(n, n);
    let mut done: Vec<DVector<f64>> = (2..n).map(|j| e.column(j).into_owned()).collect();
    for c in 0..2 {
        let mut x = DVector::from_fn(n, |i, _| if i == c { 1.0 } else { 0.0 });
        for b in &done {
            let d = (b.transpose() * metric * &x)[0];
            x.axpy(-d, b, 1.0);
        }
        let norm = (x.transpose() * metric * &x)[0].sqrt();
        x /= norm;
        e.set_column(c, &x);
        done.push(x);
    }
    if theta != 0.0 {
        let (c, s) = (theta.cos(), theta.sin());
        let e1 = e.column(0) * c + e.column(1) * s;
        let e2 = e.column(1) * c - e.column(0) * s;
        e.set_column(0, &e1);
        e.set_column(1, &e2);
    }
    e
}

/// Shape operators `A_i = E^T B_i E` in the split frame.
pub fn split_shape_operators(jet: &ImmersionJet) -> Vec<DMatrix<f64>> {
    let e = split_frame(&jet.metric, 0.0);
    jet.second_forms.iter().map(|b| e.transpose() * b * &e).collect()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ResidualRow {
    pub index: usize,
    pub point: MPoint,
    pub residual: f64,
    /// Signs `(epsilon, delta)` attaining the residual.
    pub signs: (f64, f64),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ResidualReport {
    pub rows: Vec<ResidualRow>,
    pub degenerate_count: usize,
    pub worst: f64,
    pub best: f64,
    pub worst_index: usize,
}

impl ResidualReport {
    fn collect(results: Vec<Result<ResidualRow>>) -> Result<Self> {
        let mut rows = Vec::with_capacity(results.len());
        let mut degenerate_count = 0;
        for r in results {
            match r {
                Ok(row) => rows.push(row),
                Err(e) if e.is_degenerate_sample() => degenerate_count += 1,
                Err(e) => return Err(e),
            }
        }
        if rows.is_empty() {
            return Err(Error::AllDegenerate(degenerate_count));
        }
        let (worst_index, worst) = rows
            .iter()
            .map(|r| (r.index, r.residual))
            .fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
        let best = rows.iter().map(|r| r.residual).fold(f64::INFINITY, f64::min);
        Ok(Self {
            rows,
            degenerate_count,
            worst,
            best,
            worst_index,
        })
    }

    /// Fraction of rows with residual above `threshold`.
    pub fn fraction_above(&self, threshold: f64) -> f64 {
        self.rows.iter().filter(|r| r.residual > threshold).count() as f64 / self.rows.len() as f64
    }
}

fn sweep<F>(samples: &[MPoint], f: F) -> Result<ResidualReport>
where
    F: Fn(&MPoint) -> Result<(f64, (f64, f64))> + Sync,
{
    let rows = samples
        .par_iter()
        .enumerate()
        .map(|(index, p)| {
            f(p).map(|(residual, signs)| ResidualRow {
                index,
                point: p.clone(),
                residual,
                signs,
            })
        })
        .collect();
    ResidualReport::collect(rows)
}

/// `max_i |A_i T + T A_i| / |A_i|`, minimized over the `V^1` sign.
pub fn t_commutation_residual(jet: &ImmersionJet) -> (f64, (f64, f64)) {
    let ops = split_shape_operators(jet);
    let n = jet.dim();
    let mut best = (f64::INFINITY, (1.0, 1.0));
    for eps in [1.0, -1.0] {
        let t = t_operator(n, eps);
        let r = ops
            .iter()
            .take(2)
            .map(|a| (a * &t + &t * a).norm() / a.norm())
            .fold(0.0, f64::max);
        if r < best.0 {
            best = (r, (eps, 1.0));
        }
    }
    best
}

pub fn t_commutation_test(s: &Surface, samples: &[MPoint]) -> Result<ResidualReport> {
    sweep(samples, |p| {
        let jet = RuledImmersion::new(s, p.u, p.v)?.jet(p)?;
        Ok(t_commutation_residual(&jet))
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KaehlerOptions {
    /// Step of the outer difference along `u` and `v`.
    pub h: f64,
    /// Step of the ruling-frame differences inside each evaluation.
    pub inner_h: f64,
    /// Rotation applied to `(E_1, E_2)`.
    pub gauge_angle: f64,
}

impl Default for KaehlerOptions {
    fn default() -> Self {
        Self {
            h: 1e-4,
            inner_h: crate::framegeo::FRAME_FD_STEP,
            gauge_angle: 0.0,
        }
    }
}

/// `max_{k, i, j} |<d_k W_i, W_j> - <d_k (W J)_i, (W J)_j>|` with `W = F_* E`,
/// `k` over `u, v`, minimized over sign choices.
pub fn kaehler_residual(s: &Surface, p: &MPoint, opts: &KaehlerOptions) -> Result<(f64, (f64, f64))> {
    let n = s.submanifold_dim();
    if n % 2 != 0 {
        return Err(Error::InvalidInput(format!("Kaehler test needs even n, got {n}")));
    }
    let imm = RuledImmersion::new(s, p.u, p.v)?.with_step(opts.inner_h);
    let w = |du: f64, dv: f64| -> Result<DMatrix<f64>> {
        let q = MPoint::new(p.u + du, p.v + dv, p.t.clone());
        let df = imm.differential(&q)?;
        let e = split_frame(&(df.transpose() * &df), opts.gauge_angle);
        Ok(df * e)
    };
    let w0 = w(0.0, 0.0)?;
    let wu = fd::d1(|d| w(d, 0.0), opts.h)?;
    let wv = fd::d1(|d| w(0.0, d), opts.h)?;
    let mut best = (f64::INFINITY, (1.0, 1.0));
    for (eps, delta) in SIGN_CHOICES {
        let j = j_operator(n, eps, delta);
        let w0j = &w0 * &j;
        let mut r = 0.0f64;
        for d in [&wu, &wv] {
            let om = d.transpose() * &w0;
            let omj = (d * &j).transpose() * &w0j;
            r = r.max((om - omj).amax());
        }
        if r < best.0 {
            best = (r, (eps, delta));
        }
    }
    Ok(best)
}

pub fn kaehler_parallelism_test(s: &Surface, samples: &[MPoint], opts: &KaehlerOptions) -> Result<ResidualReport> {
    sweep(samples, |p| kaehler_residual(s, p, opts))
}

/// `min |A_2 -+ J A_1| / |A_1|` over signs; near zero iff `F` is holomorphic
/// with respect to `J`.
pub fn nonholomorphy_gap(jet: &ImmersionJet) -> (f64, (f64, f64)) {
    let ops = split_shape_operators(jet);
    let n = jet.dim();
    let (a1, a2) = (&ops[0], &ops[1]);
    let mut best = (f64::INFINITY, (1.0, 1.0));
    for (eps, delta) in SIGN_CHOICES {
        let j = j_operator(n, eps, delta);
        for sg in [1.0, -1.0] {
            let r = (a2 - &j * a1 * sg).norm() / a1.norm();
            if r < best.0 {
                best = (r, (eps, delta));
            }
        }
    }
    best
}

/// Per-sample gaps; the certificate holds when `best` exceeds the threshold.
pub fn nonholomorphy_certificate(s: &Surface, samples: &[MPoint]) -> Result<ResidualReport> {
    sweep(samples, |p| {
        let jet = RuledImmersion::new(s, p.u, p.v)?.jet(p)?;
        Ok(nonholomorphy_gap(&jet))
    })
}

/// `max_{a, b} |omega(X_a, X_b)| / (|X_a| |X_b|)` for tangents in `R^{2N}`
/// written as `(X_1, X_2)`, with `omega(X, Y) = <X_1, Y_2> - <X_2, Y_1>`.
pub fn symplectic_residual(tangents: &DMatrix<f64>) -> f64 {
    let half = tangents.nrows() / 2;
    let x1 = tangents.rows(0, half);
    let x2 = tangents.rows(half, half);
    let om = x1.transpose() * x2 - x2.transpose() * x1;
    let norms: Vec<f64> = tangents.column_iter().map(|c| c.norm()).collect();
    let mut r = 0.0f64;
    for a in 0..tangents.ncols() {
        for b in 0..tangents.ncols() {
            r = r.max(om[(a, b)].abs() / (norms[a] * norms[b]));
        }
    }
    r
}

/// `(|trace II|, |trace II| / |II|)` for an immersion with tangents `d` and
/// Hessians `hess(a, b)`.
pub fn mean_curvature(d: &DMatrix<f64>, hess: impl Fn(usize, usize) -> DVector<f64>) -> Result<(f64, f64)> {
    let k = d.ncols();
    let g = d.transpose() * d;
    let gi = g.clone().try_inverse().ok_or(Error::NotPositiveDefinite)?;
    let pn = DMatrix::identity(d.nrows(), d.nrows()) - d * &gi * d.transpose();
    let mut ii = vec![DVector::zeros(d.nrows()); k * k];
    for a in 0..k {
        for b in a..k {
            let x = &pn * hess(a, b);
            ii[a * k + b] = x.clone();
            ii[b * k + a] = x;
        }
    }
    let mut h = DVector::zeros(d.nrows());
    for a in 0..k {
        for b in 0..k {
            h.axpy(gi[(a, b)], &ii[a * k + b], 1.0);
        }
    }
    // |II|^2 = g^{ac} g^{bd} <II_ab, II_cd>
    let mut sq = 0.0;
    for a in 0..k {
        for b in 0..k {
            for c in 0..k {
                for e in 0..k {
                    sq += gi[(a, c)] * gi[(b, e)] * ii[a * k + b].dot(&ii[c * k + e]);
                }
            }
        }
    }
    if sq <= 0.0 {
        return Ok((h.norm(), 0.0));
    }
    Ok((h.norm(), h.norm() / sq.sqrt()))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LiftOptions {
    /// Step for first derivatives of the normal field.
    pub h1: f64,
    /// Step for second derivatives of the normal field.
    pub h2: f64,
    /// Allowed relative change of the first derivatives when `h1` is halved.
    pub richardson_tol: f64,
}

impl Default for LiftOptions {
    fn default() -> Self {
        Self {
            h1: 2e-3,
            h2: 1e-2,
            richardson_tol: 1e-6,
        }
    }
}

/// The lift `psi(x, s) = (F(x), s_1 nu_1(x) + s_2 nu_2(x))` at one point.
#[derive(Clone, Debug)]
pub struct LagrangianJet {
    pub point: MPoint,
    pub s: [f64; 2],
    pub position: Vec<f64>,
    /// `2N x N`, columns over `(u, v, t, s_1, s_2)`.
    pub tangents: DMatrix<f64>,
    pub symplectic_resid: f64,
    /// `|trace II|`.
    pub mean_curvature_resid: f64,
    /// `|trace II| / |II|`, the scale-free variant.
    pub mean_curvature_ratio: f64,
}

/// Smooth unit normal frame near a point: `(e_3, e_4)`-seeded normals at the
/// base, projected onto the normal space of `F` and orthonormalized.
struct NormalField<'a> {
    imm: RuledImmersion<'a>,
    refs: [DVector<f64>; 2],
}

impl NormalField<'_> {
    fn at(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let q = MPoint::new(x[0], x[1], x[2..].to_vec());
        let df = self.imm.differential(&q)?;
        let g = df.transpose() * &df;
        let proj = g.cholesky().ok_or(Error::NotPositiveDefinite)?.solve(&df.transpose());
        let pn = DMatrix::identity(df.nrows(), df.nrows()) - &df * proj;
        let n1 = &pn * &self.refs[0];
        let n1 = &n1 / n1.norm();
        let mut n2 = &pn * &self.refs[1];
        n2.axpy(-n1.dot(&n2), &n1, 1.0);
        let n2 = &n2 / n2.norm();
        Ok(DMatrix::from_columns(&[n1, n2]))
    }
}

pub fn lagrangian_lift(s: &Surface, p: &MPoint, sv: [f64; 2], opts: &LiftOptions) -> Result<LagrangianJet> {
    let imm = RuledImmersion::new(s, p.u, p.v)?;
    let base = imm.jet(p)?;
    let big_n = s.ambient_dim();
    let n = base.dim();
    let field = NormalField {
        imm: imm.clone(),
        refs: [base.normals.column(0).into_owned(), base.normals.column(1).into_owned()],
    };
    let x0: Vec<f64> = [p.u, p.v].iter().chain(&p.t).copied().collect();
    let shifted = |a: usize, c: f64| {
        let mut x = x0.clone();
        x[a] += c;
        x
    };
    let s_vec = DVector::from_column_slice(&sv);
    let nu0 = field.at(&x0)?;
    let mut dnu = Vec::with_capacity(n);
    for a in 0..n {
        let coarse = fd::d1(|c| field.at(&shifted(a, c)), opts.h1)?;
        let fine = fd::d1(|c| field.at(&shifted(a, c)), opts.h1 / 2.0)?;
        let mismatch = (&coarse - &fine).amax();
        let allowed = opts.richardson_tol * coarse.amax().max(1.0);
        if mismatch > allowed {
            return Err(Error::StepTooLarge {
                step: opts.h1,
                coarse: mismatch,
                fine: allowed,
            });
        }
        dnu.push(fine);
    }
    let mut d2nu = vec![DMatrix::zeros(big_n, 2); n * n];
    for a in 0..n {
        for b in a..n {
            let m = if a == b {
                fd::d2(|c| field.at(&shifted(a, c)), opts.h2)?
            } else {
                fd::d11(
                    |c, d| {
                        let mut x = shifted(a, c);
                        x[b] += d;
                        field.at(&x)
                    },
                    opts.h2,
                )?
            };
            d2nu[a * n + b] = m.clone();
            d2nu[b * n + a] = m;
        }
    }
    let dim = n + 2;
    let mut tangents = DMatrix::zeros(2 * big_n, dim);
    for a in 0..n {
        tangents.view_mut((0, a), (big_n, 1)).copy_from(&base.raw.df.column(a));
        tangents.view_mut((big_n, a), (big_n, 1)).copy_from(&(&dnu[a] * &s_vec));
    }
    for i in 0..2 {
        tangents.view_mut((big_n, n + i), (big_n, 1)).copy_from(&nu0.column(i));
    }
    let hess = |a: usize, b: usize| -> DVector<f64> {
        let (a, b) = (a.min(b), a.max(b));
        let mut out = DVector::zeros(2 * big_n);
        if b < n {
            out.rows_mut(0, big_n).copy_from(base.raw.hess(a, b));
            out.rows_mut(big_n, big_n).copy_from(&(&d2nu[a * n + b] * &s_vec));
        } else if a < n {
            out.rows_mut(big_n, big_n).copy_from(&dnu[a].column(b - n));
        }
        out
    };
    let (mean_curvature_resid, mean_curvature_ratio) = mean_curvature(&tangents, hess)?;
    let symplectic_resid = symplectic_residual(&tangents);
    let position = base
        .raw
        .position
        .iter()
        .copied()
        .chain((&nu0 * &s_vec).iter().copied())
        .collect();
    Ok(LagrangianJet {
        point: p.clone(),
        s: sv,
        position,
        tangents,
        symplectic_resid,
        mean_curvature_resid,
        mean_curvature_ratio,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LiftRow {
    pub index: usize,
    pub point: MPoint,
    pub s: [f64; 2],
    pub symplectic_resid: f64,
    pub mean_curvature_resid: f64,
    pub mean_curvature_ratio: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LiftReport {
    pub rows: Vec<LiftRow>,
    pub degenerate_count: usize,
    pub worst_symplectic: f64,
    pub worst_mean_curvature: f64,
    pub best_mean_curvature: f64,
}

impl LiftReport {
    pub fn fraction_mean_curvature_above(&self, threshold: f64) -> f64 {
        self.rows.iter().filter(|r| r.mean_curvature_resid > threshold).count() as f64 / self.rows.len() as f64
    }
}

pub fn lagrangian_report(s: &Surface, samples: &[(MPoint, [f64; 2])], opts: &LiftOptions) -> Result<LiftReport> {
    let results: Vec<Result<LiftRow>> = samples
        .par_iter()
        .enumerate()
        .map(|(index, (p, sv))| {
            lagrangian_lift(s, p, *sv, opts).map(|j| LiftRow {
                index,
                point: p.clone(),
                s: *sv,
                symplectic_resid: j.symplectic_resid,
                mean_curvature_resid: j.mean_curvature_resid,
                mean_curvature_ratio: j.mean_curvature_ratio,
            })
        })
        .collect();
    let mut rows = Vec::new();
    let mut degenerate_count = 0;
    for r in results {
        match r {
            Ok(row) => rows.push(row),
            Err(e) if e.is_degenerate_sample() => degenerate_count += 1,
            Err(e) => return Err(e),
        }
    }
    if rows.is_empty() {
        return Err(Error::AllDegenerate(degenerate_count));
    }
    let fold = |f: fn(&LiftRow) -> f64, init: f64, op: fn(f64, f64) -> f64| rows.iter().map(f).fold(init, op);
    Ok(LiftReport {
        worst_symplectic: fold(|r| r.symplectic_resid, 0.0, f64::max),
        worst_mean_curvature: fold(|r| r.mean_curvature_resid, 0.0, f64::max),
        best_mean_curvature: fold(|r| r.mean_curvature_resid, f64::INFINITY, f64::min),
        rows,
        degenerate_count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::Preset;

    fn pts(k: usize) -> Vec<MPoint> {
        let base = [(0.1, -0.2), (0.35, 0.3), (-0.5, 0.15), (0.6, -0.55)];
        base.iter()
            .enumerate()
            .map(|(i, &(u, v))| MPoint::new(u, v, (0..k).map(|j| 0.6 * ((2 * i + j) as f64).cos()).collect()))
            .collect()
    }

    #[test]
    fn operators_are_orthogonal_complex_structures() {
        for n in [2, 4, 6, 8] {
            for (e, d) in SIGN_CHOICES {
                let j = j_operator(n, e, d);
                let id = DMatrix::<f64>::identity(n, n);
                assert_eq!(&j * &j, -&id);
                assert_eq!(j.transpose() * &j, id);
            }
        }
        let t = t_operator(6, 1.0);
        assert_eq!(t.transpose() * &t, DMatrix::<f64>::identity(6, 6));
        let t2 = &t * &t;
        assert_eq!(t2.view((0, 0), (4, 4)), -DMatrix::<f64>::identity(4, 4));
        assert_eq!(t2.view((4, 4), (2, 2)), DMatrix::<f64>::identity(2, 2));
        // block entries as displayed
        assert_eq!((t[(0, 1)], t[(1, 0)], t[(2, 3)], t[(3, 2)]), (1.0, -1.0, -1.0, 1.0));
    }

    #[test]
    fn split_frame_is_metric_orthonormal() {
        let s = Preset::N6Canonical.build().unwrap();
        let p = &pts(4)[0];
        let jet = RuledImmersion::new(&s, p.u, p.v).unwrap().jet(p).unwrap();
        let e = split_frame(&jet.metric, 0.3);
        let g = e.transpose() * &jet.metric * &e;
        assert!((g - DMatrix::identity(6, 6)).amax() < 1e-12);
    }

    #[test]
    fn lemma_tracks_second_order_isotropy() {
        let good = Preset::N6Canonical.build().unwrap();
        assert!(t_commutation_test(&good, &pts(4)).unwrap().worst < 1e-5);
        let bad = Preset::LiteralRecipe.build().unwrap();
        assert!(t_commutation_test(&bad, &pts(4)).unwrap().best > 1e-2);
    }

    #[test]
    fn kaehler_verdicts() {
        let opts = KaehlerOptions::default();
        let n4 = Preset::N4Canonical.build().unwrap();
        let r = kaehler_parallelism_test(&n4, &pts(2), &opts).unwrap();
        assert!(r.worst < 1e-5, "{r:?}");
        let n6 = Preset::N6Canonical.build().unwrap();
        assert!(kaehler_parallelism_test(&n6, &pts(4), &opts).unwrap().best > 1e-2);
        // gauge rotation of (E_1, E_2)
        let rot = KaehlerOptions {
            gauge_angle: 0.6,
            ..opts
        };
        let r2 = kaehler_parallelism_test(&n4, &pts(2), &rot).unwrap();
        assert!((r2.worst - r.worst).abs() < 1e-8);
    }

    #[test]
    fn certificate_separates_holomorphic_immersions() {
        let n4 = Preset::N4Canonical.build().unwrap();
        assert!(nonholomorphy_certificate(&n4, &pts(2)).unwrap().best > 1e-2);
        let h2 = Preset::HolomorphicN2.build().unwrap();
        assert!(nonholomorphy_certificate(&h2, &pts(0)).unwrap().worst < 1e-8);
    }

    #[test]
    fn symplectic_form_on_known_planes() {
        // Lagrangian: R^2 inside C^2; symplectic: the complex line C x {0}
        let lag = DMatrix::from_column_slice(4, 2, &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        assert_eq!(symplectic_residual(&lag), 0.0);
        let cx = DMatrix::from_column_slice(4, 2, &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        assert_eq!(symplectic_residual(&cx), 1.0);
    }

    #[test]
    fn lift_is_lagrangian_and_minimal_over_austere_bases() {
        let opts = LiftOptions::default();
        let n4 = Preset::N4Canonical.build().unwrap();
        let j = lagrangian_lift(&n4, &pts(2)[1], [0.4, -0.3], &opts).unwrap();
        assert!(j.symplectic_resid < 1e-8, "{}", j.symplectic_resid);
        assert!(j.mean_curvature_resid < 1e-4, "{}", j.mean_curvature_resid);
        // column order does not matter
        let mut perm = j.tangents.clone();
        perm.swap_columns(2, 5);
        perm.swap_columns(0, 4);
        assert_eq!(symplectic_residual(&perm), j.symplectic_resid);
        let lit = Preset::LiteralRecipe.build().unwrap();
        let j = lagrangian_lift(&lit, &pts(4)[1], [0.4, -0.3], &opts).unwrap();
        assert!(j.symplectic_resid < 1e-8);
        assert!(j.mean_curvature_resid > 1e-2);
    }

    #[test]
    fn oversized_step_is_reported() {
        let n4 = Preset::N4Canonical.build().unwrap();
        let opts = LiftOptions {
            h1: 0.05,
            ..LiftOptions::default()
        };
        let r = lagrangian_lift(&n4, &pts(2)[1], [0.4, -0.3], &opts);
        assert!(matches!(r, Err(Error::StepTooLarge { .. })), "{r:?}");
    }
}
