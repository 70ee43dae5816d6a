//! Fourth-order central finite-difference stencils over matrix-valued fields.
//!
//! The closures receive offsets from the base point, so callers decide which
//! coordinates move.

use nalgebra::DMatrix;

use crate::error::Result;

const D1: [(f64, f64); 4] = [(-2.0, 1.0), (-1.0, -8.0), (1.0, 8.0), (2.0, -1.0)];
const D2: [(f64, f64); 5] = [(-2.0, -1.0), (-1.0, 16.0), (0.0, -30.0), (1.0, 16.0), (2.0, -1.0)];

/// `f'(0)` with error `O(h^4)`.
pub fn d1<F>(f: F, h: f64) -> Result<DMatrix<f64>>
where
    F: Fn(f64) -> Result<DMatrix<f64>>,
{
    let mut acc: Option<DMatrix<f64>> = None;
    for (k, w) in D1 {
        let val = f(k * h)? * w;
        acc = Some(match acc {
            Some(a) => a + val,
            None => val,
        });
    }
    Ok(acc.expect("nonempty stencil") / (12.0 * h))
}

/// `f''(0)` with error `O(h^4)`.
pub fn d2<F>(f: F, h: f64) -> Result<DMatrix<f64>>
where
    F: Fn(f64) -> Result<DMatrix<f64>>,
{
    let mut acc: Option<DMatrix<f64>> = None;
    for (k, w) in D2 {
        let val = f(k * h)? * w;
        acc = Some(match acc {
            Some(a) => a + val,
            None => val,
        });
    }
    Ok(acc.expect("nonempty stencil") / (12.0 * h * h))
}

/// `d^2 f / dx dy (0, 0)` as the tensor product of two first-derivative
/// stencils; error `O(h^4)`.
pub fn d11<F>(f: F, h: f64) -> Result<DMatrix<f64>>
where
    F: Fn(f64, f64) -> Result<DMatrix<f64>>,
{
    d1(|dx| d1(|dy| f(dx, dy), h), h)
}
