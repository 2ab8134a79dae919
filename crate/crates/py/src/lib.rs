//! Python bindings. Tensors cross the boundary as nested lists of floats.

use std::path::PathBuf;

use fdon_core::analysis::{self, MetricTransform};
use fdon_core::geomdata::{
    self, LeblancSpec, NozzleParams, OperatorDataset, Primitive, RiemannState, SynthSpec,
};
use fdon_core::losses::{self, LossConfig, LossMode};
use fdon_core::netcore::LrSchedule;
use fdon_core::operators::{FusionConfig, OperatorModel, Variant};
use fdon_core::training::{self, Checkpoint, TrainConfig, Trainer};
use fdon_core::{DenseTensor, Error};
use pyo3::exceptions::{PyArithmeticError, PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn py_err(e: Error) -> PyErr {
    let msg = e.to_string();
    match e {
        Error::Dimension { .. } | Error::Contract(_) => PyValueError::new_err(msg),
        Error::NonFinite(_) => PyArithmeticError::new_err(msg),
        Error::Io { .. }
        | Error::BadMagic { .. }
        | Error::Version { .. }
        | Error::Truncated { .. }
        | Error::Csv(_) => PyIOError::new_err(msg),
        Error::Solver(_) => PyRuntimeError::new_err(msg),
    }
}

trait IntoPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for fdon_core::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(py_err)
    }
}

fn ragged() -> PyErr {
    PyValueError::new_err("ragged nested list")
}

fn tensor2(rows: Vec<Vec<f64>>) -> PyResult<DenseTensor> {
    let cols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != cols) {
        return Err(ragged());
    }
    let n = rows.len();
    DenseTensor::new(vec![n, cols], rows.concat()).py()
}

fn tensor3(blocks: Vec<Vec<Vec<f64>>>) -> PyResult<DenseTensor> {
    let rows = blocks.first().map_or(0, Vec::len);
    let cols = blocks.first().and_then(|b| b.first()).map_or(0, Vec::len);
    let n = blocks.len();
    let mut data = Vec::with_capacity(n * rows * cols);
    for b in blocks {
        if b.len() != rows || b.iter().any(|r| r.len() != cols) {
            return Err(ragged());
        }
        data.extend(b.into_iter().flatten());
    }
    DenseTensor::new(vec![n, rows, cols], data).py()
}

fn list2(t: &DenseTensor) -> Vec<Vec<f64>> {
    let cols = t.shape().last().copied().unwrap_or(1).max(1);
    t.data().chunks(cols).map(<[f64]>::to_vec).collect()
}

fn list3(t: &DenseTensor) -> Vec<Vec<Vec<f64>>> {
    let s = t.shape();
    let (rows, cols) = (s[s.len() - 2], s[s.len() - 1]);
    t.data()
        .chunks((rows * cols).max(1))
        .map(|b| b.chunks(cols.max(1)).map(<[f64]>::to_vec).collect())
        .collect()
}

fn parse_variant(s: &str) -> PyResult<Variant> {
    Variant::parse(s).ok_or_else(|| PyValueError::new_err(format!("unknown variant {s:?}")))
}

fn parse_loss(s: &str) -> PyResult<LossMode> {
    LossMode::parse(s).ok_or_else(|| PyValueError::new_err(format!("unknown loss mode {s:?}")))
}

/// Branch inputs `[N, N_p]`, point coordinates `[N, N_pts, N_c]`, targets
/// `[N, N_pts, n_v]` and an optional 0/1 mask `[N, N_pts]`.
#[pyclass(name = "Dataset", module = "fdon", skip_from_py_object)]
#[derive(Clone)]
struct PyDataset {
    inner: OperatorDataset,
}

#[pymethods]
impl PyDataset {
    #[new]
    #[pyo3(signature = (branch, coords, targets, mask=None))]
    fn new(
        branch: Vec<Vec<f64>>,
        coords: Vec<Vec<Vec<f64>>>,
        targets: Vec<Vec<Vec<f64>>>,
        mask: Option<Vec<Vec<f64>>>,
    ) -> PyResult<Self> {
        let mask = mask.map(tensor2).transpose()?;
        let inner =
            OperatorDataset::new(tensor2(branch)?, tensor3(coords)?, tensor3(targets)?, mask)
                .py()?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn read(path: PathBuf) -> PyResult<Self> {
        Ok(Self {
            inner: geomdata::read_dataset(&path).py()?,
        })
    }

    fn write(&self, path: PathBuf) -> PyResult<()> {
        geomdata::write_dataset(&self.inner, &path).py()
    }

    /// Train/test split of the LeBlanc shock-tube family.
    #[staticmethod]
    #[pyo3(signature = (points=256, seed=0))]
    fn leblanc(points: usize, seed: u64) -> PyResult<(Self, Self)> {
        let spec = LeblancSpec {
            points,
            ..LeblancSpec::default()
        };
        let (a, b) = geomdata::leblanc_dataset(&spec, seed).py()?;
        Ok((Self { inner: a }, Self { inner: b }))
    }

    /// Synthetic front fields on `n` Latin-hypercube parameter draws.
    #[staticmethod]
    #[pyo3(signature = (n=50, seed=0, nx=24, ny=24, jitter=0.0, steepness=12.0))]
    fn synth(
        n: usize,
        seed: u64,
        nx: usize,
        ny: usize,
        jitter: f64,
        steepness: f64,
    ) -> PyResult<Self> {
        let params = geomdata::lhs_sample(&geomdata::SYNTH_RANGES, n, seed).py()?;
        let spec = SynthSpec {
            steepness,
            nx,
            ny,
            jitter,
        };
        Ok(Self {
            inner: geomdata::synth_field_dataset(&params, &spec, seed).py()?,
        })
    }

    fn subset(&self, indices: Vec<usize>) -> PyResult<Self> {
        Ok(Self {
            inner: self.inner.subset(&indices).py()?,
        })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn points(&self) -> usize {
        self.inner.points()
    }

    #[getter]
    fn n_params(&self) -> usize {
        self.inner.n_params()
    }

    #[getter]
    fn coord_dim(&self) -> usize {
        self.inner.coord_dim()
    }

    #[getter]
    fn n_vars(&self) -> usize {
        self.inner.n_vars()
    }

    #[getter]
    fn branch(&self) -> Vec<Vec<f64>> {
        list2(&self.inner.branch)
    }

    #[getter]
    fn coords(&self) -> Vec<Vec<Vec<f64>>> {
        list3(&self.inner.coords)
    }

    #[getter]
    fn targets(&self) -> Vec<Vec<Vec<f64>>> {
        list3(&self.inner.targets)
    }

    #[getter]
    fn mask(&self) -> Option<Vec<Vec<f64>>> {
        self.inner.mask.as_ref().map(list2)
    }

    fn __repr__(&self) -> String {
        format!(
            "Dataset(n={}, points={}, n_params={}, coord_dim={}, n_vars={}, masked={})",
            self.inner.len(),
            self.inner.points(),
            self.inner.n_params(),
            self.inner.coord_dim(),
            self.inner.n_vars(),
            self.inner.mask.is_some()
        )
    }
}

/// A trained (or freshly initialised) operator network with its scalings.
#[pyclass(name = "Model", module = "fdon", skip_from_py_object)]
#[derive(Clone)]
struct PyModel {
    inner: OperatorModel,
    transform: MetricTransform,
}

fn report_dict<'py>(py: Python<'py>, r: &analysis::ErrorReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("aggregate", r.aggregate)?;
    d.set_item("per_var", r.per_var.clone())?;
    d.set_item("per_sample", r.per_sample.clone())?;
    Ok(d)
}

#[pymethods]
impl PyModel {
    /// Untrained model with scalings fitted on `train`.
    #[staticmethod]
    #[pyo3(signature = (train, variant="fusion", layers=4, width=64, latent=64, seed=0))]
    fn init(
        train: &PyDataset,
        variant: &str,
        layers: usize,
        width: usize,
        latent: usize,
        seed: u64,
    ) -> PyResult<Self> {
        let cfg = FusionConfig {
            layers,
            width,
            latent,
            seed,
            ..FusionConfig::default()
        };
        let inner = training::prepare_model(parse_variant(variant)?, cfg, &train.inner).py()?;
        Ok(Self {
            inner,
            transform: MetricTransform::default(),
        })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        let ck = training::load_checkpoint(&path).py()?;
        Ok(Self {
            inner: ck.model,
            transform: ck.transform,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        let ck = Checkpoint {
            model: self.inner.clone(),
            transform: self.transform.clone(),
            state: None,
        };
        training::save_checkpoint(&ck, &path).py()
    }

    #[getter]
    fn variant(&self) -> &'static str {
        self.inner.variant.name()
    }

    #[getter]
    fn num_params(&self) -> usize {
        self.inner.params.len()
    }

    /// Physical prediction `[N, N_pts, n_v]` for branch inputs `[N, N_p]`
    /// and coordinates `[N, N_pts, N_c]`.
    fn predict(
        &self,
        branch: Vec<Vec<f64>>,
        coords: Vec<Vec<Vec<f64>>>,
    ) -> PyResult<Vec<Vec<Vec<f64>>>> {
        let out = self
            .inner
            .predict(&tensor2(branch)?, &tensor3(coords)?)
            .py()?;
        Ok(list3(&out))
    }

    fn predict_dataset(&self, ds: &PyDataset) -> PyResult<Vec<Vec<Vec<f64>>>> {
        Ok(list3(
            &analysis::predict_dataset(&self.inner, &ds.inner, 16).py()?,
        ))
    }

    /// Exact spatial gradients `[Q, n_v, N_c]` at query points `[Q, N_c]`.
    fn grad_at_query(
        &self,
        branch: Vec<f64>,
        query: Vec<Vec<f64>>,
    ) -> PyResult<Vec<Vec<Vec<f64>>>> {
        let n = branch.len();
        let xb = DenseTensor::new(vec![1, n], branch).py()?;
        Ok(list3(
            &analysis::grad_at_query(&self.inner, &xb, &tensor2(query)?).py()?,
        ))
    }

    /// Relative L2 errors (in percent) on `ds`.
    fn evaluate<'py>(&self, py: Python<'py>, ds: &PyDataset) -> PyResult<Bound<'py, PyDict>> {
        let r = analysis::evaluate_model(&self.inner, &ds.inner, &self.transform).py()?;
        report_dict(py, &r)
    }

    fn __repr__(&self) -> String {
        let c = &self.inner.config;
        format!(
            "Model(variant={}, layers={}, width={}, latent={}, params={})",
            self.inner.variant.name(),
            c.layers,
            c.width,
            c.latent,
            self.inner.params.len()
        )
    }
}

/// Trains a model and returns the best one seen (by `eval`, or `train` when
/// absent) with a summary dict.
#[pyfunction]
#[pyo3(signature = (
    train, eval=None, variant="fusion", layers=4, width=64, latent=64, epochs=1000, batch_size=0,
    eval_every=1000, lr=1e-3, decay_steps=2000, decay_rate=0.91, loss="mse", lambda1=0.0,
    k_neighbors=6, exp_vars=Vec::new(), seed=0
))]
#[allow(clippy::too_many_arguments)]
fn train<'py>(
    py: Python<'py>,
    train: &PyDataset,
    eval: Option<&PyDataset>,
    variant: &str,
    layers: usize,
    width: usize,
    latent: usize,
    epochs: u64,
    batch_size: usize,
    eval_every: u64,
    lr: f64,
    decay_steps: u64,
    decay_rate: f64,
    loss: &str,
    lambda1: f64,
    k_neighbors: usize,
    exp_vars: Vec<usize>,
    seed: u64,
) -> PyResult<(PyModel, Bound<'py, PyDict>)> {
    let cfg = FusionConfig {
        layers,
        width,
        latent,
        seed,
        ..FusionConfig::default()
    };
    let variant = parse_variant(variant)?;
    let loss = LossConfig {
        mode: parse_loss(loss)?,
        lambda1,
        k_neighbors,
        ..LossConfig::default()
    };
    let tc = TrainConfig {
        epochs,
        batch_size,
        schedule: LrSchedule::new(lr, decay_steps, decay_rate).py()?,
        eval_every,
        seed,
    };
    let transform = MetricTransform { exp_vars };
    let (train, eval) = (train.inner.clone(), eval.map(|e| e.inner.clone()));
    let (model, summary) = py
        .detach(move || {
            let model = training::prepare_model(variant, cfg, &train)?;
            let mut t = Trainer::new(model, transform.clone(), &train, eval, loss, tc)?;
            let summary = t.run(&train, |_, _| Ok(()))?;
            Ok::<_, Error>((
                PyModel {
                    inner: t.best_model(),
                    transform,
                },
                summary,
            ))
        })
        .py()?;
    let d = PyDict::new(py);
    d.set_item("epochs", summary.epochs)?;
    d.set_item("last_loss", summary.last_loss)?;
    d.set_item("best_metric", summary.best_metric)?;
    d.set_item("best_epoch", summary.best_epoch)?;
    Ok((model, d))
}

/// Relative L2 error in percent.
#[pyfunction]
fn rel_l2(pred: Vec<f64>, truth: Vec<f64>) -> PyResult<f64> {
    analysis::rel_l2(&pred, &truth).py()
}

/// Indices of the `k` nearest neighbours of each point, self excluded.
#[pyfunction]
fn knn_indices(coords: Vec<Vec<f64>>, k: usize) -> PyResult<Vec<Vec<usize>>> {
    let flat = losses::knn_indices(&tensor2(coords)?, k).py()?;
    Ok(flat.chunks(k).map(<[usize]>::to_vec).collect())
}

/// Least-squares gradient estimate `[N_pts, N_c]` of a scalar field.
#[pyfunction]
#[pyo3(signature = (field, coords, k=6))]
fn lsd_gradient(field: Vec<f64>, coords: Vec<Vec<f64>>, k: usize) -> PyResult<Vec<Vec<f64>>> {
    let coords = tensor2(coords)?;
    let table = losses::knn_neighbors(&coords, k).py()?;
    Ok(list2(
        &losses::lsd_gradient(&field, &coords, &table).py()?.grads,
    ))
}

/// Pairwise directional differences of a scalar field, one per ordered pair.
#[pyfunction]
#[pyo3(signature = (field, coords, epsilon=losses::PAIR_EPSILON))]
fn dd_operator(field: Vec<f64>, coords: Vec<Vec<f64>>, epsilon: f64) -> PyResult<Vec<f64>> {
    losses::dd_operator(&field, &tensor2(coords)?, epsilon).py()
}

fn riemann_state(
    left: (f64, f64, f64),
    right: (f64, f64, f64),
    gamma: f64,
    x_d: f64,
) -> RiemannState {
    RiemannState {
        left: Primitive::new(left.0, left.1, left.2),
        right: Primitive::new(right.0, right.1, right.2),
        gamma,
        x_d,
        ..RiemannState::sod()
    }
}

/// Star-region solution for left/right states given as `(rho, u, p)`.
#[pyfunction]
#[pyo3(signature = (left, right, gamma=1.4))]
fn riemann_star<'py>(
    py: Python<'py>,
    left: (f64, f64, f64),
    right: (f64, f64, f64),
    gamma: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let s = geomdata::star_state(&riemann_state(left, right, gamma, 0.5)).py()?;
    let d = PyDict::new(py);
    d.set_item("p", s.p)?;
    d.set_item("u", s.u)?;
    d.set_item("rho_left", s.rho_left)?;
    d.set_item("rho_right", s.rho_right)?;
    Ok(d)
}

/// Exact solution sampled at `x` and time `t`, as `(rho, u, p)` lists.
#[pyfunction]
#[pyo3(signature = (left, right, x, t, gamma=1.4, x_d=0.5))]
fn riemann_exact(
    left: (f64, f64, f64),
    right: (f64, f64, f64),
    x: Vec<f64>,
    t: f64,
    gamma: f64,
    x_d: f64,
) -> PyResult<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let w = geomdata::riemann_exact(&riemann_state(left, right, gamma, x_d), &x, t).py()?;
    Ok((
        w.iter().map(|p| p.rho).collect(),
        w.iter().map(|p| p.u).collect(),
        w.iter().map(|p| p.p).collect(),
    ))
}

/// Coefficients `a_0..a_5` of the upper nozzle wall.
#[pyfunction]
fn nozzle_wall(h_i: f64, h_o: f64, x_t: f64) -> PyResult<Vec<f64>> {
    Ok(geomdata::nozzle_coeffs(&NozzleParams::new(h_i, h_o, x_t))
        .py()?
        .coeffs
        .to_vec())
}

/// Latin-hypercube sample `[n, len(ranges)]`.
#[pyfunction]
#[pyo3(signature = (ranges, n, seed=0))]
fn lhs_sample(ranges: Vec<(f64, f64)>, n: usize, seed: u64) -> PyResult<Vec<Vec<f64>>> {
    Ok(list2(&geomdata::lhs_sample(&ranges, n, seed).py()?))
}

#[pyfunction]
fn singular_values(m: Vec<Vec<f64>>) -> PyResult<Vec<f64>> {
    analysis::singular_values(&tensor2(m)?).py()
}

#[pymodule]
fn fdon(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDataset>()?;
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_function(wrap_pyfunction!(rel_l2, m)?)?;
    m.add_function(wrap_pyfunction!(knn_indices, m)?)?;
    m.add_function(wrap_pyfunction!(lsd_gradient, m)?)?;
    m.add_function(wrap_pyfunction!(dd_operator, m)?)?;
    m.add_function(wrap_pyfunction!(riemann_star, m)?)?;
    m.add_function(wrap_pyfunction!(riemann_exact, m)?)?;
    m.add_function(wrap_pyfunction!(nozzle_wall, m)?)?;
    m.add_function(wrap_pyfunction!(lhs_sample, m)?)?;
    m.add_function(wrap_pyfunction!(singular_values, m)?)?;
    Ok(())
}
