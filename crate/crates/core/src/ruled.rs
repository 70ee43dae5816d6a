//! The ruled immersion `F(u, v, t) = g(u, v) + sum_j t_j E_j(u, v)` whose
//! rulings span `Lambda_g = (span{g_u, g_v, g_uu, g_uv})^perp`, its second
//! fundamental form, and the austerity, rank and nullity verdicts.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fd;
use crate::framegeo::{adapted_frame, FrameField, FRAME_FD_STEP};
use crate::isogen::Surface;

/// A point `(u, v, t)` of `M^n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MPoint {
    pub u: f64,
    pub v: f64,
    pub t: Vec<f64>,
}

impl MPoint {
    pub fn new(u: f64, v: f64, t: Vec<f64>) -> Self {
        Self { u, v, t }
    }

    pub fn on_section(u: f64, v: f64, fiber_dim: usize) -> Self {
        Self::new(u, v, vec![0.0; fiber_dim])
    }
}

/// Orthonormal basis of `Lambda_g` at a point, plus the `N_1` pair.
#[derive(Clone, Debug)]
pub struct RulingFrame {
    pub u: f64,
    pub v: f64,
    /// `N x (n - 2)`, columns `e_5, ..., e_{n+2}`.
    pub vectors: DMatrix<f64>,
    /// `N x 2`, columns `e_3, e_4`.
    pub first_normal: DMatrix<f64>,
    /// `|P_Lambda + P_S - I|_max` with `S = span{Re a, Im a, Re a', Im a'}`.
    pub projector_residual: f64,
}

/// Orthogonal projector onto the column span of `m`, rank decided by SVD.
pub fn span_projector(m: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("requested");
    let top = svd.singular_values.max();
    let mut p = DMatrix::zeros(m.nrows(), m.nrows());
    for (i, &sv) in svd.singular_values.iter().enumerate() {
        if sv > rel_tol * top {
            let c = u.column(i);
            p += &c * c.transpose();
        }
    }
    p
}

pub fn ruling_frame(s: &Surface, u: f64, v: f64) -> Result<RulingFrame> {
    let frame = adapted_frame(s, u, v, s.normal_depth());
    if !frame.is_full_through(1) {
        return Err(Error::degenerate(u, v, "tangent plane or first normal space is deficient"));
    }
    let dim = s.ambient_dim();
    let vectors = frame.vectors.columns(4, dim - 4).into_owned();
    let first_normal = frame.vectors.columns(2, 2).into_owned();
    let w1 = s.complex_derivative(1, crate::holo::C64::new(u, v));
    let w2 = s.complex_derivative(2, crate::holo::C64::new(u, v));
    let cols = [
        DVector::from_iterator(dim, w1.iter().map(|x| x.re)),
        DVector::from_iterator(dim, w1.iter().map(|x| x.im)),
        DVector::from_iterator(dim, w2.iter().map(|x| x.re)),
        DVector::from_iterator(dim, w2.iter().map(|x| x.im)),
    ];
    let ps = span_projector(&DMatrix::from_columns(&cols), 1e-9);
    let pl = &vectors * vectors.transpose();
    let projector_residual = (pl + ps - DMatrix::identity(dim, dim)).amax();
    Ok(RulingFrame {
        u,
        v,
        vectors,
        first_normal,
        projector_residual,
    })
}

/// First and second partials of an immersion in chart coordinates, before
/// any normal frame is chosen.
#[derive(Clone, Debug)]
pub struct RawJet {
    pub position: DVector<f64>,
    /// `N x n`
    pub df: DMatrix<f64>,
    /// Packed upper triangle: entry `(i, j)`, `i <= j`, at `j (j + 1) / 2 + i`.
    pub hessian: Vec<DVector<f64>>,
}

fn packed(i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    j * (j + 1) / 2 + i
}

impl RawJet {
    pub fn hess(&self, i: usize, j: usize) -> &DVector<f64> {
        &self.hessian[packed(i, j)]
    }

    /// `(a X, b Y)` in `R^{N_X + N_Y}`.
    pub fn stack(&self, a: f64, other: &RawJet, b: f64) -> RawJet {
        let cat = |x: &DVector<f64>, y: &DVector<f64>| {
            DVector::from_iterator(x.len() + y.len(), x.iter().map(|v| a * v).chain(y.iter().map(|v| b * v)))
        };
        let mut df = DMatrix::zeros(self.df.nrows() + other.df.nrows(), self.df.ncols());
        df.rows_mut(0, self.df.nrows()).copy_from(&(&self.df * a));
        df.rows_mut(self.df.nrows(), other.df.nrows()).copy_from(&(&other.df * b));
        RawJet {
            position: cat(&self.position, &other.position),
            df,
            hessian: self.hessian.iter().zip(&other.hessian).map(|(x, y)| cat(x, y)).collect(),
        }
    }
}

/// Derivative data of an immersion at a point with a chosen normal frame.
#[derive(Clone, Debug)]
pub struct ImmersionJet {
    pub point: MPoint,
    pub raw: RawJet,
    /// Induced metric `dF^T dF`.
    pub metric: DMatrix<f64>,
    /// `N x codim`, orthonormal.
    pub normals: DMatrix<f64>,
    /// `B_i[a][b] = <d_a d_b F, nu_i>`.
    pub second_forms: Vec<DMatrix<f64>>,
}

/// Largest admissible condition number of `dF`.
pub const MAX_CONDITION: f64 = 1e8;

impl ImmersionJet {
    /// Picks the normal frame by projecting `reference` vectors (then the
    /// standard basis) onto the normal space and orthonormalizing.
    pub fn from_raw(point: MPoint, raw: RawJet, reference: &[DVector<f64>]) -> Result<Self> {
        let dim = raw.df.nrows();
        let n = raw.df.ncols();
        let metric = raw.df.transpose() * &raw.df;
        let eig = SymmetricEigen::new(metric.clone());
        let (lo, hi) = eig
            .eigenvalues
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), &x| (lo.min(x), hi.max(x)));
        if lo <= 0.0 || (hi / lo).sqrt() > MAX_CONDITION {
            return Err(Error::degenerate(point.u, point.v, "immersion differential is near-singular"));
        }
        let ginv_dft = metric
            .clone()
            .cholesky()
            .ok_or(Error::NotPositiveDefinite)?
            .solve(&raw.df.transpose());
        let pn = DMatrix::identity(dim, dim) - &raw.df * ginv_dft;
        let codim = dim - n;
        let mut basis: Vec<DVector<f64>> = Vec::with_capacity(codim);
        let candidates = reference
            .iter()
            .cloned()
            .chain((0..dim).map(|i| DVector::from_fn(dim, |j, _| if i == j { 1.0 } else { 0.0 })));
        for c in candidates {
            if basis.len() == codim {
                break;
            }
            let mut y = &pn * c;
            for _ in 0..2 {
                for e in &basis {
                    let d = e.dot(&y);
                    y.axpy(-d, e, 1.0);
                }
            }
            if y.norm() > 0.1 {
                basis.push(&y / y.norm());
            }
        }
        if basis.len() < codim {
            return Err(Error::degenerate(point.u, point.v, "could not complete a normal frame"));
        }
        let normals = DMatrix::from_columns(&basis);
        let second_forms = basis
            .iter()
            .map(|nu| DMatrix::from_fn(n, n, |a, b| raw.hess(a, b).dot(nu)))
            .collect();
        Ok(Self {
            point,
            raw,
            metric,
            normals,
            second_forms,
        })
    }

    pub fn dim(&self) -> usize {
        self.raw.df.ncols()
    }

    pub fn codim(&self) -> usize {
        self.normals.ncols()
    }

    /// Same jet with `(nu_1, nu_2)` rotated by `theta`.
    pub fn rotate_normals(&self, theta: f64) -> ImmersionJet {
        let mut out = self.clone();
        let (c, s) = (theta.cos(), theta.sin());
        let n1 = self.normals.column(0) * c + self.normals.column(1) * s;
        let n2 = self.normals.column(1) * c - self.normals.column(0) * s;
        out.normals.set_column(0, &n1);
        out.normals.set_column(1, &n2);
        out.second_forms[0] = &self.second_forms[0] * c + &self.second_forms[1] * s;
        out.second_forms[1] = &self.second_forms[1] * c - &self.second_forms[0] * s;
        out
    }

    /// Second forms in a `G`-orthonormal tangent basis: `L^{-1} B_i L^{-T}`
    /// with `G = L L^T`. Their eigenvalues are the shape-operator spectra.
    pub fn reduced_forms(&self) -> Result<Vec<DMatrix<f64>>> {
        let chol = Cholesky::new(self.metric.clone()).ok_or(Error::NotPositiveDefinite)?;
        let l = chol.l();
        self.second_forms.iter().map(|b| reduce(&l, b)).collect()
    }

    /// Sorted eigenvalues of `A_nu` for `nu = sum_i c_i nu_i`.
    pub fn shape_spectrum_coeffs(&self, c: &[f64]) -> Result<Vec<f64>> {
        let reduced = self.reduced_forms()?;
        Ok(spectrum(&combine(&reduced, c)))
    }

    /// Sorted eigenvalues of `A_nu` for `nu = cos(phi) nu_1 + sin(phi) nu_2`.
    pub fn shape_spectrum(&self, phi: f64) -> Result<Vec<f64>> {
        self.shape_spectrum_coeffs(&[phi.cos(), phi.sin()])
    }
}

fn reduce(l: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let x = l.solve_lower_triangular(b).ok_or(Error::NotPositiveDefinite)?;
    let c = l
        .solve_lower_triangular(&x.transpose())
        .ok_or(Error::NotPositiveDefinite)?;
    Ok((&c + c.transpose()) * 0.5)
}

fn combine(forms: &[DMatrix<f64>], c: &[f64]) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(forms[0].nrows(), forms[0].ncols());
    for (f, &w) in forms.iter().zip(c) {
        out += f * w;
    }
    out
}

fn spectrum(m: &DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// `F` over a surface whose ruling frames come from `frames` and whose base
/// surface is `Re(e^{i phase} phi)`; the frame field is anchored at a point
/// so that its gauge is consistent across the finite-difference stencils.
#[derive(Clone, Debug)]
pub struct RuledImmersion<'a> {
    field: FrameField<'a>,
    base: Surface,
    phase: f64,
    h: f64,
}

impl<'a> RuledImmersion<'a> {
    pub fn new(s: &'a Surface, anchor_u: f64, anchor_v: f64) -> Result<Self> {
        Self::with_hints(s, anchor_u, anchor_v, &[])
    }

    /// As [`RuledImmersion::new`] with the frame completion seeded by `hints`.
    pub fn with_hints(s: &'a Surface, anchor_u: f64, anchor_v: f64, hints: &[DVector<f64>]) -> Result<Self> {
        let field = FrameField::with_hints(s, anchor_u, anchor_v, s.normal_depth(), hints);
        if !field.base().is_full_through(1) {
            return Err(Error::degenerate(anchor_u, anchor_v, "tangent plane or first normal space is deficient"));
        }
        Ok(Self {
            field,
            base: s.clone(),
            phase: 0.0,
            h: FRAME_FD_STEP,
        })
    }

    /// Rotates the base surface to `Re(e^{i phase} phi)` keeping the rulings.
    pub fn with_phase(mut self, phase: f64) -> Self {
        self.base = self.field.surface().rotated(phase);
        self.phase = phase;
        self
    }

    pub fn with_step(mut self, h: f64) -> Self {
        self.h = h;
        self
    }

    pub fn step(&self) -> f64 {
        self.h
    }

    pub fn phase(&self) -> f64 {
        self.phase
    }

    pub fn surface(&self) -> &Surface {
        &self.base
    }

    pub fn fiber_dim(&self) -> usize {
        self.base.ambient_dim() - 4
    }

    pub fn dim(&self) -> usize {
        self.base.ambient_dim() - 2
    }

    /// Ruling frame `N x (n - 2)` at `(u, v)`.
    pub fn rulings(&self, u: f64, v: f64) -> Result<DMatrix<f64>> {
        let f = self.field.at(u, v)?;
        Ok(f.vectors.columns(4, f.dim() - 4).into_owned())
    }

    /// `(e_3, e_4)` at `(u, v)`.
    pub fn first_normal(&self, u: f64, v: f64) -> Result<DMatrix<f64>> {
        Ok(self.field.at(u, v)?.vectors.columns(2, 2).into_owned())
    }

    fn check(&self, p: &MPoint) -> Result<()> {
        if p.t.len() != self.fiber_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.fiber_dim(),
                found: p.t.len(),
            });
        }
        Ok(())
    }

    pub fn position(&self, p: &MPoint) -> Result<DVector<f64>> {
        self.check(p)?;
        let e = self.rulings(p.u, p.v)?;
        Ok(self.base.position(p.u, p.v) + e * DVector::from_column_slice(&p.t))
    }

    /// `dF` alone: columns `F_u, F_v, F_{t_1}, ...`.
    pub fn differential(&self, p: &MPoint) -> Result<DMatrix<f64>> {
        self.check(p)?;
        let (u, v, h) = (p.u, p.v, self.h);
        let t = DVector::from_column_slice(&p.t);
        let e = self.rulings(u, v)?;
        let eu = fd::d1(|d| self.rulings(u + d, v), h)?;
        let ev = fd::d1(|d| self.rulings(u, v + d), h)?;
        let k = t.len();
        let mut df = DMatrix::zeros(self.base.ambient_dim(), k + 2);
        df.set_column(0, &(self.base.partial(1, 0, u, v) + &eu * &t));
        df.set_column(1, &(self.base.partial(0, 1, u, v) + &ev * &t));
        df.columns_mut(2, k).copy_from(&e);
        Ok(df)
    }

    /// Exact `g` jets plus finite differences of the ruling frame.
    pub fn raw_jet(&self, p: &MPoint) -> Result<RawJet> {
        self.check(p)?;
        let (u, v, h) = (p.u, p.v, self.h);
        let t = DVector::from_column_slice(&p.t);
        let k = t.len();
        let n = k + 2;
        let e = self.rulings(u, v)?;
        let eu = fd::d1(|d| self.rulings(u + d, v), h)?;
        let ev = fd::d1(|d| self.rulings(u, v + d), h)?;
        let euu = fd::d2(|d| self.rulings(u + d, v), h)?;
        let evv = fd::d2(|d| self.rulings(u, v + d), h)?;
        let euv = fd::d11(|a, b| self.rulings(u + a, v + b), h)?;
        let g = |a, b| self.base.partial(a, b, u, v);
        let mut df = DMatrix::zeros(self.base.ambient_dim(), n);
        df.set_column(0, &(g(1, 0) + &eu * &t));
        df.set_column(1, &(g(0, 1) + &ev * &t));
        df.columns_mut(2, k).copy_from(&e);
        let zero = DVector::zeros(self.base.ambient_dim());
        let mut hessian = vec![zero; n * (n + 1) / 2];
        hessian[packed(0, 0)] = g(2, 0) + &euu * &t;
        hessian[packed(0, 1)] = g(1, 1) + &euv * &t;
        hessian[packed(1, 1)] = g(0, 2) + &evv * &t;
        for j in 0..k {
            hessian[packed(0, j + 2)] = eu.column(j).into_owned();
            hessian[packed(1, j + 2)] = ev.column(j).into_owned();
        }
        Ok(RawJet {
            position: self.base.position(u, v) + &e * &t,
            df,
            hessian,
        })
    }

    /// Jet with the normal frame taken from `(e_3, e_4)` projected onto the
    /// normal space.
    pub fn jet(&self, p: &MPoint) -> Result<ImmersionJet> {
        let raw = self.raw_jet(p)?;
        let n1 = self.first_normal(p.u, p.v)?;
        let refs = [n1.column(0).into_owned(), n1.column(1).into_owned()];
        ImmersionJet::from_raw(p.clone(), raw, &refs)
    }
}

/// Jet of `F` with the frame field anchored at the point itself.
pub fn evaluate_immersion(s: &Surface, p: &MPoint, h: f64) -> Result<ImmersionJet> {
    RuledImmersion::new(s, p.u, p.v)?.with_step(h).jet(p)
}

/// Normal directions for the austerity sweep: angles `k pi / K` in
/// codimension 2, seeded random unit vectors otherwise.
pub fn normal_directions(codim: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    if codim == 2 {
        return (0..count)
            .map(|k| {
                let a = k as f64 * std::f64::consts::PI / count as f64;
                vec![a.cos(), a.sin()]
            })
            .collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let x: Vec<f64> = (0..codim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let n = x.iter().map(|a| a * a).sum::<f64>().sqrt();
            x.into_iter().map(|a| a / n).collect()
        })
        .collect()
}

/// Spectral measures at one point.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpectralRow {
    /// `max |p_1| / p_2^{1/2}, |p_3| / p_2^{3/2}` over directions.
    pub odd_resid: f64,
    /// `max |lambda_i + lambda_{n+1-i}| / max |lambda|` over directions.
    pub pair_resid: f64,
    pub rank: usize,
    pub nullity: usize,
    /// `max_i |tr A_i| / max |A_i|`.
    pub trace_resid: f64,
}

/// Odd power-sum and eigenvalue-pair residuals of one spectrum.
pub fn symmetry_residuals(ev: &[f64]) -> (f64, f64) {
    let p1: f64 = ev.iter().sum();
    let p2: f64 = ev.iter().map(|x| x * x).sum();
    let p3: f64 = ev.iter().map(|x| x * x * x).sum();
    let top = ev.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if p2 == 0.0 || top == 0.0 {
        return (0.0, 0.0);
    }
    let odd = (p1.abs() / p2.sqrt()).max(p3.abs() / p2.powf(1.5));
    let n = ev.len();
    let pair = (0..n).map(|i| (ev[i] + ev[n - 1 - i]).abs()).fold(0.0, f64::max) / top;
    (odd, pair)
}

/// Number of singular values of the stacked reduced forms below
/// `rel_tol * max`: the dimension of the relative nullity space.
pub fn joint_nullity(reduced: &[DMatrix<f64>], rel_tol: f64) -> usize {
    let n = reduced[0].ncols();
    let mut stacked = DMatrix::zeros(n * reduced.len(), n);
    for (i, c) in reduced.iter().enumerate() {
        stacked.rows_mut(i * n, n).copy_from(c);
    }
    let sv = stacked.singular_values();
    let top = sv.max();
    if top == 0.0 {
        return n;
    }
    sv.iter().filter(|&&x| x < rel_tol * top).count()
}

pub fn spectral_row(jet: &ImmersionJet, directions: &[Vec<f64>], eigen_zero: f64) -> Result<SpectralRow> {
    let reduced = jet.reduced_forms()?;
    let mut odd = 0.0f64;
    let mut pair = 0.0f64;
    for c in directions {
        let (o, p) = symmetry_residuals(&spectrum(&combine(&reduced, c)));
        odd = odd.max(o);
        pair = pair.max(p);
    }
    let nullity = joint_nullity(&reduced, eigen_zero);
    let top = reduced.iter().map(|c| c.amax()).fold(0.0, f64::max);
    let trace_resid = if top > 0.0 {
        reduced.iter().map(|c| c.trace().abs()).fold(0.0, f64::max) / top
    } else {
        0.0
    };
    Ok(SpectralRow {
        odd_resid: odd,
        pair_resid: pair,
        rank: jet.dim() - nullity,
        nullity,
        trace_resid,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AustereOptions {
    pub directions: usize,
    pub odd_tol: f64,
    pub eigen_zero: f64,
    pub expected_rank: usize,
    pub h: f64,
    /// Seed for random normal directions in codimension above 2.
    pub seed: u64,
}

impl Default for AustereOptions {
    fn default() -> Self {
        Self {
            directions: 16,
            odd_tol: 1e-5,
            eigen_zero: 1e-6,
            expected_rank: 4,
            h: FRAME_FD_STEP,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AustereRow {
    pub index: usize,
    pub point: MPoint,
    #[serde(flatten)]
    pub spectral: SpectralRow,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AustereReport {
    pub rows: Vec<AustereRow>,
    pub degenerate_count: usize,
    pub worst_odd: f64,
    pub worst_pair: f64,
    pub worst_trace: f64,
    /// Fraction of usable samples with the expected rank.
    pub rank_fraction: f64,
    pub pass: bool,
}

impl AustereReport {
    fn from_rows(rows: Vec<AustereRow>, degenerate_count: usize) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::AllDegenerate(degenerate_count));
        }
        let worst = |f: fn(&SpectralRow) -> f64| rows.iter().map(|r| f(&r.spectral)).fold(0.0, f64::max);
        let worst_odd = worst(|s| s.odd_resid);
        let worst_pair = worst(|s| s.pair_resid);
        let worst_trace = worst(|s| s.trace_resid);
        let pass = rows.iter().all(|r| r.pass);
        Ok(Self {
            rank_fraction: 0.0,
            worst_odd,
            worst_pair,
            worst_trace,
            pass,
            degenerate_count,
            rows,
        })
    }

    fn with_rank_fraction(mut self, expected: usize) -> Self {
        let good = self.rows.iter().filter(|r| r.spectral.rank == expected).count();
        self.rank_fraction = good as f64 / self.rows.len() as f64;
        self
    }

    /// Fraction of usable samples whose odd residual exceeds `threshold`.
    pub fn fraction_odd_above(&self, threshold: f64) -> f64 {
        let n = self.rows.iter().filter(|r| r.spectral.odd_resid > threshold).count();
        n as f64 / self.rows.len() as f64
    }
}

/// Austerity, rank and nullity of `F_g` over `samples`.
pub fn austere_report(s: &Surface, samples: &[MPoint], opts: &AustereOptions) -> Result<AustereReport> {
    let dirs = normal_directions(2, opts.directions, opts.seed);
    sweep(samples, opts, |p| {
        let jet = evaluate_immersion(s, p, opts.h)?;
        spectral_row(&jet, &dirs, opts.eigen_zero)
    })
}

/// Austerity of the associated pair `G = (cos(phi) F_0, sin(phi) F_{pi/2})`.
pub fn associated_pair_report(
    s: &Surface,
    samples: &[MPoint],
    phi: f64,
    opts: &AustereOptions,
) -> Result<AustereReport> {
    sweep(samples, opts, |p| {
        let jet = associated_pair(s, p, phi, opts.h)?;
        let dirs = normal_directions(jet.codim(), opts.directions, opts.seed);
        spectral_row(&jet, &dirs, opts.eigen_zero)
    })
}

fn sweep<F>(samples: &[MPoint], opts: &AustereOptions, f: F) -> Result<AustereReport>
where
    F: Fn(&MPoint) -> Result<SpectralRow> + Sync,
{
    let results: Vec<Result<AustereRow>> = samples
        .par_iter()
        .enumerate()
        .map(|(index, p)| {
            f(p).map(|spectral| AustereRow {
                index,
                point: p.clone(),
                pass: spectral.rank == opts.expected_rank && spectral.odd_resid < opts.odd_tol,
                spectral,
            })
        })
        .collect();
    let mut rows = Vec::with_capacity(samples.len());
    let mut degenerate = 0;
    for r in results {
        match r {
            Ok(row) => rows.push(row),
            Err(e) if e.is_degenerate_sample() => degenerate += 1,
            Err(e) => return Err(e),
        }
    }
    Ok(AustereReport::from_rows(rows, degenerate)?.with_rank_fraction(opts.expected_rank))
}

/// How strongly the second forms see the ruling directions.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NullityAlignment {
    /// `max_{i, j in V^0} |B_i d_{t_j}| / max_i |B_i|`; zero when `V^0` is trivial.
    pub v0: f64,
    /// Same quantity minimized over the two `V^1` directions.
    pub v1: f64,
    pub per_direction: Vec<f64>,
}

pub fn nullity_alignment(s: &Surface, p: &MPoint) -> Result<NullityAlignment> {
    let jet = evaluate_immersion(s, p, FRAME_FD_STEP)?;
    let reduced_scale = jet.second_forms.iter().map(|b| b.norm()).fold(0.0, f64::max);
    let k = jet.dim() - 2;
    let per_direction: Vec<f64> = (0..k)
        .map(|j| {
            jet.second_forms
                .iter()
                .map(|b| b.column(j + 2).norm())
                .fold(0.0, f64::max)
                / reduced_scale
        })
        .collect();
    let v1 = per_direction.iter().take(2).copied().fold(f64::INFINITY, f64::min);
    let v0 = per_direction.iter().skip(2).copied().fold(0.0, f64::max);
    Ok(NullityAlignment { v0, v1, per_direction })
}

/// Jet of `G = (cos(phi) F_0, sin(phi) F_{pi/2})` in `R^{2N}`, where
/// `F_{pi/2}` is ruled over `Re(i phi)` by the rulings of `F_0`.
pub fn associated_pair(s: &Surface, p: &MPoint, phi: f64, h: f64) -> Result<ImmersionJet> {
    let f0 = RuledImmersion::new(s, p.u, p.v)?.with_step(h);
    let f1 = f0.clone().with_phase(std::f64::consts::FRAC_PI_2);
    let raw = f0.raw_jet(p)?.stack(phi.cos(), &f1.raw_jet(p)?, phi.sin());
    ImmersionJet::from_raw(p.clone(), raw, &[])
}

/// `|P_{Lambda(g)} - P_{Lambda(Re(i phi))}|_max` at a point.
pub fn ruling_coincidence(s: &Surface, u: f64, v: f64) -> Result<f64> {
    let a = ruling_frame(s, u, v)?.vectors;
    let b = ruling_frame(&s.rotated(std::f64::consts::FRAC_PI_2), u, v)?.vectors;
    Ok((&a * a.transpose() - &b * b.transpose()).amax())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::Preset;

    fn pts(k: usize) -> Vec<MPoint> {
        let base = [(0.1, -0.2), (0.35, 0.3), (-0.5, 0.15), (0.6, -0.55), (-0.25, -0.6)];
        base.iter()
            .enumerate()
            .map(|(i, &(u, v))| MPoint::new(u, v, (0..k).map(|j| 0.7 * ((i + j) as f64).sin()).collect()))
            .collect()
    }

    #[test]
    fn ruling_frame_is_complement_of_osculating_plane() {
        for p in Preset::ALL {
            let s = p.build().unwrap();
            if s.ambient_dim() < 6 || p == Preset::EnneperEmbedded {
                continue;
            }
            for q in pts(0) {
                let r = ruling_frame(&s, q.u, q.v).unwrap();
                assert_eq!(r.vectors.ncols(), s.submanifold_dim() - 2);
                assert!(r.projector_residual < 1e-8, "{p}: {}", r.projector_residual);
                for (a, b) in [(1, 0), (0, 1), (2, 0), (1, 1)] {
                    let d = s.partial(a, b, q.u, q.v);
                    assert!((r.vectors.transpose() * &d).amax() < 1e-10 * d.norm().max(1.0));
                }
            }
        }
    }

    #[test]
    fn zero_section_and_flat_rulings() {
        let s = Preset::N6Canonical.build().unwrap();
        for q in pts(4) {
            let jet = evaluate_immersion(&s, &q, 1e-3).unwrap();
            let k = 4;
            let et = jet.raw.df.columns(2, k);
            assert!((et.transpose() * et - DMatrix::identity(k, k)).amax() < 1e-12);
            for i in 2..6 {
                for j in 2..6 {
                    assert_eq!(jet.raw.hess(i, j).amax(), 0.0);
                }
            }
            let p0 = MPoint::on_section(q.u, q.v, 4);
            let j0 = evaluate_immersion(&s, &p0, 1e-3).unwrap();
            assert_eq!(j0.raw.position, s.position(q.u, q.v));
            let cross = j0.raw.df.columns(0, 2).transpose() * j0.raw.df.columns(2, k);
            assert!(cross.amax() < 1e-10);
        }
    }

    #[test]
    fn spectrum_is_odd_in_the_normal() {
        let s = Preset::LiteralRecipe.build().unwrap();
        let jet = evaluate_immersion(&s, &pts(4)[1], 1e-3).unwrap();
        let a = jet.shape_spectrum(0.3).unwrap();
        let b = jet.shape_spectrum(0.3 + std::f64::consts::PI).unwrap();
        for (x, y) in a.iter().zip(b.iter().rev()) {
            assert!((x + y).abs() < 1e-9 * (1.0 + x.abs()));
        }
    }

    #[test]
    fn spectrum_matches_generalized_eigen_oracle() {
        // eigenvalues of G^{-1} B via a nonsymmetric solver
        let s = Preset::N6Canonical.build().unwrap();
        let jet = evaluate_immersion(&s, &pts(4)[2], 1e-3).unwrap();
        let b = &jet.second_forms[0] * 0.8 + &jet.second_forms[1] * 0.6;
        let a = jet.metric.clone().try_inverse().unwrap() * b;
        let mut ev: Vec<f64> = a.complex_eigenvalues().iter().map(|c| c.re).collect();
        ev.sort_by(f64::total_cmp);
        let phi = 0.6f64.atan2(0.8);
        let ours = jet.shape_spectrum(phi).unwrap();
        let top = ours.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        for (x, y) in ours.iter().zip(&ev) {
            assert!((x - y).abs() < 1e-8 * top, "{ours:?} vs {ev:?}");
        }
    }

    #[test]
    fn austerity_verdicts() {
        let opts = AustereOptions::default();
        let n4 = Preset::N4Canonical.build().unwrap();
        let rep = austere_report(&n4, &pts(2), &opts).unwrap();
        assert!(rep.pass, "{rep:?}");
        assert!(rep.rows.iter().all(|r| r.spectral.nullity == 0));
        let n6 = Preset::N6Canonical.build().unwrap();
        let rep = austere_report(&n6, &pts(4), &opts).unwrap();
        assert!(rep.pass);
        assert!(rep.rows.iter().all(|r| r.spectral.nullity == 2));
        assert!(rep.worst_trace < 1e-6);
        let lit = Preset::LiteralRecipe.build().unwrap();
        let rep = austere_report(&lit, &pts(4), &opts).unwrap();
        assert!(!rep.pass);
        assert!(rep.fraction_odd_above(1e-2) == 1.0);
    }

    #[test]
    fn austerity_is_normal_gauge_invariant() {
        let s = Preset::N6Canonical.build().unwrap();
        let dirs = normal_directions(2, 16, 0);
        for q in pts(4) {
            let jet = evaluate_immersion(&s, &q, 1e-3).unwrap();
            let a = spectral_row(&jet, &dirs, 1e-6).unwrap();
            // a multiple of pi/16 permutes the sampled directions up to sign
            let b = spectral_row(&jet.rotate_normals(3.0 * std::f64::consts::PI / 16.0), &dirs, 1e-6).unwrap();
            assert!((a.odd_resid - b.odd_resid).abs() < 1e-12);
            assert_eq!(a.rank, b.rank);
            let c = spectral_row(&jet.rotate_normals(0.4), &dirs, 1e-6).unwrap();
            assert_eq!(a.odd_resid < 1e-5, c.odd_resid < 1e-5);
        }
    }

    #[test]
    fn nullity_alignment_picks_out_deep_rulings() {
        let n6 = Preset::N6Canonical.build().unwrap();
        for q in pts(4) {
            let a = nullity_alignment(&n6, &q).unwrap();
            assert!(a.v0 < 1e-7, "{a:?}");
            assert!(a.v1 > 1e-3, "{a:?}");
        }
        let n4 = Preset::N4Canonical.build().unwrap();
        assert_eq!(nullity_alignment(&n4, &pts(2)[0]).unwrap().v0, 0.0);
    }

    #[test]
    fn associated_pair_reduces_and_stays_austere() {
        let n4 = Preset::N4Canonical.build().unwrap();
        let q = &pts(2)[3];
        let g0 = associated_pair(&n4, q, 0.0, 1e-3).unwrap();
        let f0 = evaluate_immersion(&n4, q, 1e-3).unwrap();
        assert!((g0.metric.clone() - &f0.metric).amax() < 1e-12);
        let rep = associated_pair_report(&n4, &pts(2), std::f64::consts::FRAC_PI_4, &AustereOptions::default()).unwrap();
        assert!(rep.pass && rep.worst_odd < 1e-5, "{rep:?}");
        assert!(ruling_coincidence(&n4, q.u, q.v).unwrap() < 1e-10);
    }
}
