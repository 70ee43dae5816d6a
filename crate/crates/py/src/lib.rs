//! Python bindings: `import austere`.

use austere_core::artifact::SurfaceFile;
use austere_core::export::{export_obj, ExportKind, SliceSpec};
use austere_core::isogen::Surface;
use austere_core::presets::Preset;
use austere_core::ruled::{evaluate_immersion, MPoint};
use austere_core::run::{run, Check, RunConfig};
use austere_core::sampling::SamplingSpec;
use austere_core::Error;
use nalgebra::DMatrix;
use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::InvalidInput(_) | Error::DimensionMismatch { .. } | Error::NonIsotropicSeed { .. } | Error::Json(_) => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

/// Serializes through JSON into plain Python dicts and lists.
fn to_python<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

/// An isotropic minimal surface `g = Re phi` with `phi' = alpha`.
#[pyclass(name = "Surface", module = "austere", frozen)]
struct PySurface {
    inner: Surface,
}

#[pymethods]
impl PySurface {
    /// Built-in surface by name, e.g. `"n4-canonical"`.
    #[staticmethod]
    fn preset(name: &str) -> PyResult<Self> {
        let p: Preset = name.parse().map_err(py_err)?;
        Ok(Self {
            inner: p.build().map_err(py_err)?,
        })
    }

    #[staticmethod]
    fn preset_names() -> Vec<&'static str> {
        Preset::ALL.iter().map(|p| p.name()).collect()
    }

    /// Surface from the JSON text of a surface file.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let file: SurfaceFile = serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(Self {
            inner: file.to_surface().map_err(py_err)?,
        })
    }

    fn to_json(&self) -> String {
        SurfaceFile::from_surface(&self.inner).to_json()
    }

    #[getter]
    fn ambient_dim(&self) -> usize {
        self.inner.ambient_dim()
    }

    #[getter]
    fn submanifold_dim(&self) -> usize {
        self.inner.submanifold_dim()
    }

    #[getter]
    fn normal_depth(&self) -> usize {
        self.inner.normal_depth()
    }

    /// `alpha(u + i v)`.
    fn alpha_at(&self, u: f64, v: f64) -> Vec<Complex64> {
        self.inner.alpha().eval(Complex64::new(u, v))
    }

    fn position(&self, u: f64, v: f64) -> Vec<f64> {
        self.inner.position(u, v).iter().copied().collect()
    }

    /// `d_u^a d_v^b g` at `(u, v)`.
    fn partial(&self, a: usize, b: usize, u: f64, v: f64) -> Vec<f64> {
        self.inner.partial(a, b, u, v).iter().copied().collect()
    }

    /// Jet of the ruled immersion at `(u, v, t)`: metric, second forms and
    /// the shape-operator eigenvalues in the normal direction at angle `phi`.
    #[pyo3(signature = (u, v, t, phi = 0.0))]
    fn jet<'py>(&self, py: Python<'py>, u: f64, v: f64, t: Vec<f64>, phi: f64) -> PyResult<Bound<'py, PyAny>> {
        let jet = evaluate_immersion(&self.inner, &MPoint::new(u, v, t), 1e-3).map_err(py_err)?;
        let matrix = |m: &DMatrix<f64>| -> Vec<Vec<f64>> {
            m.row_iter().map(|r| r.iter().copied().collect()).collect()
        };
        let out = serde_json::json!({
            "position": jet.raw.position.iter().copied().collect::<Vec<_>>(),
            "metric": matrix(&jet.metric),
            "second_forms": jet.second_forms.iter().map(matrix).collect::<Vec<_>>(),
            "shape_spectrum": jet.shape_spectrum(phi).map_err(py_err)?,
        });
        to_python(py, &out)
    }

    /// Runs checks and returns the report as a dict.
    #[pyo3(signature = (checks = None, seed = 0, count = 20))]
    fn verify<'py>(
        &self,
        py: Python<'py>,
        checks: Option<Vec<String>>,
        seed: u64,
        count: usize,
    ) -> PyResult<Bound<'py, PyAny>> {
        let mut cfg = RunConfig::new(SamplingSpec::new(seed).with_count(count));
        if let Some(names) = checks {
            cfg.checks = names
                .iter()
                .map(|n| n.parse::<Check>())
                .collect::<Result<_, _>>()
                .map_err(py_err)?;
        }
        let report = py.detach(|| run(&self.inner, &cfg)).map_err(py_err)?;
        to_python(py, &report)
    }

    /// Measured isotropy order over `count` samples.
    #[pyo3(signature = (seed = 0, count = 20))]
    fn isotropy_order(&self, py: Python<'_>, seed: u64, count: usize) -> PyResult<usize> {
        let cfg = RunConfig::new(SamplingSpec::new(seed).with_count(count)).with_checks(vec![Check::Isotropy]);
        let report = py.detach(|| run(&self.inner, &cfg)).map_err(py_err)?;
        report.checks[0]
            .rows
            .iter()
            .filter_map(|r| r.breakdown.get("order"))
            .map(|&o| o as usize)
            .min()
            .ok_or_else(|| PyRuntimeError::new_err("all samples were degenerate"))
    }

    /// OBJ text of a slice given as a dict-like JSON string.
    #[pyo3(signature = (what = "surface", slice = "{}"))]
    fn export_obj(&self, what: &str, slice: &str) -> PyResult<String> {
        let what: ExportKind = what.parse().map_err(py_err)?;
        let slice: SliceSpec = serde_json::from_str(slice).map_err(|e| PyValueError::new_err(e.to_string()))?;
        export_obj(&self.inner, what, &slice).map_err(py_err)
    }

    fn __repr__(&self) -> String {
        format!("Surface(ambient_dim={})", self.inner.ambient_dim())
    }
}

#[pymodule]
fn austere(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySurface>()?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
