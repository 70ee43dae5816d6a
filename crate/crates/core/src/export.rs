//! OBJ meshes of two-parameter slices, projected to three coordinates.
//!
//! The grid varies `(u, v)`; fiber coordinates `t` and lift coordinates `s`
//! are fixed by the slice. Frames are propagated from the center of the grid
//! outward so that the ruling gauge is continuous over the whole mesh.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::artifact::SurfaceFile;
use crate::error::{Error, Result};
use crate::framegeo::{adapted_frame, adapted_frame_with_hints, AdaptedFrame};
use crate::isogen::Surface;
use crate::ruled::{MPoint, RuledImmersion};

pub const OBJ_FORMAT: &str = "austere-obj/1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExportKind {
    /// `g(u, v)` in `R^N`.
    Surface,
    /// `F(u, v, t)` in `R^N`.
    Immersion,
    /// `psi(u, v, t, s)` in `R^{2N}`.
    Lagrangian,
}

impl fmt::Display for ExportKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExportKind::Surface => "surface",
            ExportKind::Immersion => "immersion",
            ExportKind::Lagrangian => "lagrangian",
        })
    }
}

impl FromStr for ExportKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "surface" => Ok(ExportKind::Surface),
            "immersion" => Ok(ExportKind::Immersion),
            "lagrangian" => Ok(ExportKind::Lagrangian),
            _ => Err(Error::InvalidInput(format!("unknown export kind '{s}'"))),
        }
    }
}

fn default_grid() -> [usize; 2] {
    [64, 64]
}

fn default_range() -> [f64; 2] {
    [-0.8, 0.8]
}

fn default_axes() -> [usize; 3] {
    [0, 1, 2]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SliceSpec {
    /// Vertices along `u` and `v`.
    #[serde(default = "default_grid")]
    pub grid: [usize; 2],
    #[serde(default = "default_range")]
    pub u: [f64; 2],
    #[serde(default = "default_range")]
    pub v: [f64; 2],
    /// Fixed fiber coordinates; zero when omitted. Not allowed for surfaces.
    #[serde(default)]
    pub t: Option<Vec<f64>>,
    /// Fixed lift coordinates; zero when omitted. Lagrangian slices only.
    #[serde(default)]
    pub s: Option<[f64; 2]>,
    /// Ambient coordinates kept by the projection.
    #[serde(default = "default_axes")]
    pub axes: [usize; 3],
}

impl Default for SliceSpec {
    fn default() -> Self {
        Self {
            grid: default_grid(),
            u: default_range(),
            v: default_range(),
            t: None,
            s: None,
            axes: default_axes(),
        }
    }
}

impl SliceSpec {
    pub fn validate(&self, what: ExportKind, ambient_dim: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidInput(format!("invalid slice: {msg}")));
        if self.grid.iter().any(|&g| g < 2) {
            return bad("grid needs at least 2 vertices per direction".into());
        }
        if self.grid[0].saturating_mul(self.grid[1]) > 1 << 22 {
            return bad("grid is too large".into());
        }
        for (name, [lo, hi]) in [("u", self.u), ("v", self.v)] {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return bad(format!("empty {name} range"));
            }
        }
        let fiber = ambient_dim - 4;
        match (what, &self.t) {
            (ExportKind::Surface, Some(_)) => return bad("t is fixed only for immersion and lagrangian slices".into()),
            (_, Some(t)) if t.len() != fiber => return bad(format!("t needs {fiber} entries, got {}", t.len())),
            (_, Some(t)) if t.iter().any(|x| !x.is_finite()) => return bad("t must be finite".into()),
            _ => {}
        }
        match (what, &self.s) {
            (ExportKind::Lagrangian, Some(s)) if s.iter().any(|x| !x.is_finite()) => return bad("s must be finite".into()),
            (ExportKind::Lagrangian, _) | (_, None) => {}
            (_, Some(_)) => return bad("s is fixed only for lagrangian slices".into()),
        }
        let target = if what == ExportKind::Lagrangian { 2 * ambient_dim } else { ambient_dim };
        if let Some(a) = self.axes.iter().find(|&&a| a >= target) {
            return bad(format!("axis {a} out of range for a {target}-dimensional image"));
        }
        let [a, b, c] = self.axes;
        if a == b || b == c || a == c {
            return bad("axes must be distinct".into());
        }
        Ok(())
    }

    fn coords(&self) -> (Vec<f64>, Vec<f64>) {
        let lin = |[lo, hi]: [f64; 2], n: usize| (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
        (lin(self.u, self.grid[0]), lin(self.v, self.grid[1]))
    }
}

/// Adapted frames on the grid, sign-aligned to the neighbor one step closer
/// to the center vertex.
fn propagated_frames(s: &Surface, us: &[f64], vs: &[f64]) -> Result<Vec<AdaptedFrame>> {
    let (nu, nv) = (us.len(), vs.len());
    let (ic, jc) = (nu / 2, nv / 2);
    let depth = s.normal_depth();
    let hints = adapted_frame(s, us[ic], vs[jc], depth).completion();
    let mut frames: Vec<Option<AdaptedFrame>> = vec![None; nu * nv];
    let align = |mut f: AdaptedFrame, reference: &AdaptedFrame| -> Result<AdaptedFrame> {
        let discontinuity = Error::GaugeDiscontinuity { u: f.u, v: f.v };
        if f.block_ranks != reference.block_ranks {
            return Err(discontinuity);
        }
        for i in 0..f.dim() {
            let d = f.vectors.column(i).dot(&reference.vectors.column(i));
            if d.abs() < 0.5 {
                return Err(discontinuity);
            }
            if d < 0.0 {
                f.vectors.column_mut(i).neg_mut();
            }
        }
        Ok(f)
    };
    let at = |i: usize, j: usize| adapted_frame_with_hints(s, us[i], vs[j], depth, &hints);
    frames[jc * nu + ic] = Some(at(ic, jc));
    let toward = |k: usize, c: usize| if k < c { k + 1 } else { k - 1 };
    let mut order: Vec<usize> = (0..nu).filter(|&i| i != ic).collect();
    order.sort_by_key(|&i| i.abs_diff(ic));
    for &i in &order {
        let r = frames[jc * nu + toward(i, ic)].clone().expect("filled closer to center");
        frames[jc * nu + i] = Some(align(at(i, jc), &r)?);
    }
    let mut rows: Vec<usize> = (0..nv).filter(|&j| j != jc).collect();
    rows.sort_by_key(|&j| j.abs_diff(jc));
    for &j in &rows {
        for i in 0..nu {
            let r = frames[toward(j, jc) * nu + i].clone().expect("filled closer to center");
            frames[j * nu + i] = Some(align(at(i, j), &r)?);
        }
    }
    Ok(frames.into_iter().map(|f| f.expect("every vertex visited")).collect())
}

/// Full-dimensional image of every grid vertex, row-major in `v`.
pub fn slice_points(s: &Surface, what: ExportKind, slice: &SliceSpec) -> Result<Vec<DVector<f64>>> {
    slice.validate(what, s.ambient_dim())?;
    let (us, vs) = slice.coords();
    let grid = || vs.iter().flat_map(|&v| us.iter().map(move |&u| (u, v)));
    if what == ExportKind::Surface {
        return Ok(grid().map(|(u, v)| s.position(u, v)).collect());
    }
    let k = s.ambient_dim() - 4;
    let t = DVector::from_column_slice(&slice.t.clone().unwrap_or_else(|| vec![0.0; k]));
    let frames = propagated_frames(s, &us, &vs)?;
    let mut out = Vec::with_capacity(frames.len());
    for ((u, v), f) in grid().zip(&frames) {
        let rulings = f.vectors.columns(4, k);
        let x = s.position(u, v) + rulings * &t;
        if what == ExportKind::Immersion {
            out.push(x);
            continue;
        }
        // the tangent space at x does not depend on the ruling gauge, so a
        // locally anchored immersion supplies dF at the same image point
        let imm = RuledImmersion::new(s, u, v)?;
        let local = imm.rulings(u, v)?;
        let t_local = local.transpose() * rulings * &t;
        let df = imm.differential(&MPoint::new(u, v, t_local.iter().copied().collect()))?;
        let nu = lift_normals(&df, &f.vectors.columns(2, 2).into_owned())?;
        let sv = slice.s.unwrap_or([0.0; 2]);
        let y = nu * DVector::from_column_slice(&sv);
        out.push(DVector::from_iterator(2 * x.len(), x.iter().chain(y.iter()).copied()));
    }
    Ok(out)
}

/// Orthonormal normals of `df` seeded by the columns of `refs`.
fn lift_normals(df: &DMatrix<f64>, refs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let g = df.transpose() * df;
    let solved = g.cholesky().ok_or(Error::NotPositiveDefinite)?.solve(&df.transpose());
    let pn = DMatrix::identity(df.nrows(), df.nrows()) - df * solved;
    let mut cols: Vec<DVector<f64>> = Vec::with_capacity(refs.ncols());
    for r in refs.column_iter() {
        let mut y = &pn * r;
        for c in &cols {
            y.axpy(-c.dot(&y), c, 1.0);
        }
        let n = y.norm();
        if n < 1e-9 {
            return Err(Error::InvalidInput("reference normal collapses onto the tangent space".into()));
        }
        cols.push(y / n);
    }
    Ok(DMatrix::from_columns(&cols))
}

/// Wavefront OBJ text of the projected slice with quad faces.
pub fn export_obj(s: &Surface, what: ExportKind, slice: &SliceSpec) -> Result<String> {
    let points = slice_points(s, what, slice)?;
    let [nu, nv] = slice.grid;
    let mut out = String::new();
    let slice_json = serde_json::to_string(slice).expect("slice specs always serialize");
    writeln!(out, "# {OBJ_FORMAT}").unwrap();
    writeln!(out, "# what: {what}").unwrap();
    writeln!(out, "# surface_sha256: {}", SurfaceFile::from_surface(s).digest()).unwrap();
    writeln!(out, "# slice: {slice_json}").unwrap();
    writeln!(out, "# vertices: {} (u fastest), faces: {}", nu * nv, (nu - 1) * (nv - 1)).unwrap();
    for p in &points {
        let [a, b, c] = slice.axes;
        writeln!(out, "v {} {} {}", p[a], p[b], p[c]).unwrap();
    }
    for j in 0..nv - 1 {
        for i in 0..nu - 1 {
            let k = j * nu + i + 1;
            writeln!(out, "f {} {} {} {}", k, k + 1, k + nu + 1, k + nu).unwrap();
        }
    }
    Ok(out)
}
