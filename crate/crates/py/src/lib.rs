//! Python bindings for the stroboscopic-map toolkit.

use ifstrobe::bifurcation::{self, BifPoint, RateMin, Side};
use ifstrobe::model::{self, validate_hypotheses};
use ifstrobe::sweep::{sweep_period, DoseMode, StaircaseSample, SweepOptions};
use ifstrobe::{AttractorOptions, Error, Ratio};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

fn to_py(e: Error) -> PyErr {
    let mut root = &e;
    while let Error::AtNode { source, .. } = root {
        root = source;
    }
    match root {
        Error::Domain(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn fraction<'py>(py: Python<'py>, r: Ratio<u64>) -> PyResult<Bound<'py, PyAny>> {
    py.import("fractions")?.getattr("Fraction")?.call1((*r.numer(), *r.denom()))
}

fn parse_side(side: &str) -> PyResult<Side> {
    match side {
        "R" => Ok(Side::R),
        "L" => Ok(Side::L),
        "zero" => Ok(Side::Zero),
        _ => Err(PyValueError::new_err(format!("side must be 'R', 'L' or 'zero', got {side:?}"))),
    }
}

/// Integrate-and-fire model with linear subthreshold field `a x + b`.
#[pyclass(frozen)]
struct Model {
    inner: ifstrobe::ModelSpec,
}

#[pymethods]
impl Model {
    /// With `numeric=True` the flow goes through the adaptive integrator
    /// instead of the closed form.
    #[new]
    #[pyo3(signature = (a = -0.5, b = 0.2, theta = 1.0, numeric = false))]
    fn new(a: f64, b: f64, theta: f64, numeric: bool) -> PyResult<Self> {
        let m = ifstrobe::ModelSpec::linear(a, b, theta).map_err(to_py)?;
        if let Some(msg) = validate_hypotheses(&m).failure() {
            return Err(PyValueError::new_err(msg));
        }
        Ok(Self {
            inner: if numeric { m.as_generic() } else { m },
        })
    }

    #[getter]
    fn theta(&self) -> f64 {
        self.inner.theta()
    }

    #[getter]
    fn critical_dose(&self) -> f64 {
        model::critical_dose(&self.inner)
    }

    fn flow(&self, drive: f64, t: f64, x0: f64) -> PyResult<f64> {
        model::flow(&self.inner, drive, t, x0).map_err(to_py)
    }

    fn time_to_threshold(&self, drive: f64, x0: f64) -> PyResult<Option<f64>> {
        model::time_to_threshold(&self.inner, drive, x0).map_err(to_py)
    }

    fn classify(&self, amplitude: f64, duty: f64) -> String {
        model::classify_region(&self.inner, amplitude, duty).region.to_string()
    }
}

/// Square-wave input of amplitude `A`, period `T` and duty cycle `d`.
#[pyclass(frozen)]
struct Forcing {
    inner: ifstrobe::Forcing,
}

#[pymethods]
impl Forcing {
    #[new]
    fn new(amplitude: f64, period: f64, duty: f64) -> PyResult<Self> {
        Ok(Self {
            inner: ifstrobe::Forcing::new(amplitude, period, duty).map_err(to_py)?,
        })
    }

    #[getter]
    fn amplitude(&self) -> f64 {
        self.inner.amplitude()
    }

    #[getter]
    fn period(&self) -> f64 {
        self.inner.period()
    }

    #[getter]
    fn duty(&self) -> f64 {
        self.inner.duty()
    }

    #[getter]
    fn dose(&self) -> f64 {
        self.inner.dose()
    }
}

#[pyfunction]
fn strobe<'py>(py: Python<'py>, model: &Model, forcing: &Forcing, x0: f64) -> PyResult<Bound<'py, PyDict>> {
    let r = ifstrobe::strobe(&model.inner, &forcing.inner, x0).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("image", r.image)?;
    d.set_item("spikes", r.spikes)?;
    d.set_item("spike_times", r.spike_times)?;
    Ok(d)
}

/// `(sigma, n)` for the boundary in `[0, θ)`, or `None`.
#[pyfunction]
fn boundary_sigma(model: &Model, forcing: &Forcing) -> PyResult<Option<(f64, usize)>> {
    let b = ifstrobe::boundary_sigma(&model.inner, &forcing.inner).map_err(to_py)?;
    Ok(b.map(|b| (b.sigma, b.n)))
}

#[pyfunction]
#[pyo3(signature = (model, forcing, transient = 10_000, max_period = 10_000, seed = 0.0))]
fn attractor<'py>(
    py: Python<'py>,
    model: &Model,
    forcing: &Forcing,
    transient: usize,
    max_period: usize,
    seed: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let opts = AttractorOptions {
        transient,
        max_period,
        seed,
    };
    let o = ifstrobe::attractor(&model.inner, &forcing.inner, &opts).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("period", o.period_p)?;
    d.set_item("spikes", o.spikes_n)?;
    d.set_item("word", o.word)?;
    d.set_item("single_branch", o.single_branch)?;
    d.set_item("eta", fraction(py, o.eta)?)?;
    d.set_item("rho", fraction(py, o.rho)?)?;
    d.set_item("rate", o.rate)?;
    d.set_item("points", o.points)?;
    d.set_item("spikes_per_step", o.spikes_per_step)?;
    d.set_item("converged", o.converged)?;
    d.set_item("residual", o.residual)?;
    d.set_item("contraction_margin", o.contraction_margin)?;
    Ok(d)
}

fn bif_dict<'py>(py: Python<'py>, p: BifPoint) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("n", p.n)?;
    d.set_item("side", p.side.to_string())?;
    d.set_item("duty", p.duty)?;
    d.set_item("period", p.period)?;
    d.set_item("amplitude", p.amplitude)?;
    d.set_item("residual", p.residual)?;
    Ok(d)
}

#[pyfunction]
fn bif_amplitude<'py>(
    py: Python<'py>,
    model: &Model,
    n: usize,
    side: &str,
    duty: f64,
    period: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let p = bifurcation::bif_amplitude(&model.inner, n, parse_side(side)?, duty, period).map_err(to_py)?;
    bif_dict(py, p)
}

#[pyfunction]
fn bif_period<'py>(
    py: Python<'py>,
    model: &Model,
    n: usize,
    side: &str,
    amplitude: f64,
    duty: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let p = bifurcation::bif_period(&model.inner, n, parse_side(side)?, amplitude, duty).map_err(to_py)?;
    bif_dict(py, p)
}

#[pyfunction]
fn rate_limits<'py>(py: Python<'py>, model: &Model, amplitude: f64, duty: f64) -> PyResult<Bound<'py, PyDict>> {
    let l = bifurcation::rate_limits(&model.inner, amplitude, duty).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("delta", l.delta)?;
    d.set_item("delta_hat", l.delta_hat)?;
    d.set_item("r_infinity", l.r_infinity)?;
    d.set_item("r_zero", l.r_zero)?;
    d.set_item("onset", l.onset)?;
    d.set_item("t1_r", l.t1_r)?;
    d.set_item("t1_l", l.t1_l)?;
    d.set_item("r_max", l.r_max)?;
    d.set_item("r_max_period", l.r_max_period)?;
    d.set_item("premise_verified", l.premise_verified)?;
    let kind = match l.r_min {
        RateMin::ZeroBelow { .. } => "zero_below",
        RateMin::InfimumAtZeroPeriod { .. } => "infimum_at_zero_period",
        RateMin::Near { .. } => "near",
    };
    d.set_item("r_min", l.r_min.value())?;
    d.set_item("r_min_kind", kind)?;
    Ok(d)
}

fn sample_dict<'py>(py: Python<'py>, s: StaircaseSample) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("period", s.period)?;
    d.set_item("amplitude", s.amplitude)?;
    d.set_item("duty", s.duty)?;
    d.set_item("eta", fraction(py, s.eta)?)?;
    d.set_item("rho", fraction(py, s.rho)?)?;
    d.set_item("rate", s.rate)?;
    d.set_item("word", s.word)?;
    d.set_item("orbit_period", s.period_p)?;
    d.set_item("converged", s.converged)?;
    d.set_item("contraction_ok", s.contraction_ok)?;
    Ok(d)
}

/// Attractor samples over `[t_min, t_max]`. Pass `amplitude` and `duty` for
/// fixed pulse width fraction, or `pulse` and `dose` for a fixed pulse
/// duration.
#[pyfunction]
#[pyo3(signature = (model, t_min, t_max, *, amplitude = None, duty = None, pulse = None, dose = None, points = 2000, refine = false, workers = 1))]
#[allow(clippy::too_many_arguments)]
fn sweep<'py>(
    py: Python<'py>,
    model: &Model,
    t_min: f64,
    t_max: f64,
    amplitude: Option<f64>,
    duty: Option<f64>,
    pulse: Option<f64>,
    dose: Option<f64>,
    points: usize,
    refine: bool,
    workers: usize,
) -> PyResult<Bound<'py, PyList>> {
    let mode = match (amplitude, duty, pulse, dose) {
        (Some(amplitude), Some(duty), None, None) => DoseMode::Width { amplitude, duty },
        (None, None, Some(pulse), Some(dose)) => DoseMode::Amplitude { pulse, dose },
        _ => {
            return Err(PyValueError::new_err(
                "give either amplitude and duty, or pulse and dose",
            ))
        }
    };
    let opts = SweepOptions {
        points,
        refine,
        workers,
        attractor: AttractorOptions::default(),
    };
    let samples = sweep_period(&model.inner, &mode, t_min, t_max, &opts).map_err(to_py)?;
    let out = PyList::empty(py);
    for s in samples {
        out.append(sample_dict(py, s)?)?;
    }
    Ok(out)
}

#[pymodule]
fn pyifstrobe(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Model>()?;
    m.add_class::<Forcing>()?;
    m.add_function(wrap_pyfunction!(strobe, m)?)?;
    m.add_function(wrap_pyfunction!(boundary_sigma, m)?)?;
    m.add_function(wrap_pyfunction!(attractor, m)?)?;
    m.add_function(wrap_pyfunction!(bif_amplitude, m)?)?;
    m.add_function(wrap_pyfunction!(bif_period, m)?)?;
    m.add_function(wrap_pyfunction!(rate_limits, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    Ok(())
}
