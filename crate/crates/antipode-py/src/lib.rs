//! Python bindings. Angles cross the boundary as `"num/den"` strings and
//! points as Python `complex`.

use num_complex::Complex64 as C64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use antipode::calculus;
use antipode::dynamics;
use antipode::rays;
use antipode::render::{self, ImageSpec, Palette};
use antipode::Angle;

fn angle(s: &str) -> PyResult<Angle> {
    s.parse().map_err(|e: antipode::Error| PyValueError::new_err(e.to_string()))
}

fn py_err(e: antipode::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// `(a, b, length)` of the critical gap of Θ.
#[pyfunction]
fn critical_gap(theta: &str) -> PyResult<(String, String, String)> {
    let g = calculus::critical_gap(&angle(theta)?);
    Ok((g.a.to_string(), g.b.to_string(), g.length.to_string()))
}

/// One-sided limits `(phi^-, phi^+)` of the landing map.
#[pyfunction]
fn phi_pm(theta_c: &str, theta: &str) -> PyResult<(String, String)> {
    let (m, p) = calculus::phi_pm(&angle(theta_c)?, &angle(theta)?).map_err(py_err)?;
    Ok((m.to_string(), p.to_string()))
}

#[pyfunction]
fn psi(theta_c: &str, x: &str) -> PyResult<String> {
    Ok(calculus::psi(&angle(theta_c)?, &angle(x)?).map_err(py_err)?.to_string())
}

#[pyfunction]
fn dynamic_rotation_number(theta: &str) -> PyResult<String> {
    Ok(calculus::dynamic_rotation_number(&angle(theta)?).map_err(py_err)?.to_string())
}

/// `(theta_minus, theta_plus)`, equal for odd denominators.
#[pyfunction]
fn rho_inverse(t: &str) -> PyResult<(String, String)> {
    let t = angle(t)?;
    let m = calculus::rho_inverse_minus(&t).map_err(py_err)?;
    let p = calculus::rho_inverse_plus(&t).map_err(py_err)?;
    Ok((m.to_string(), p.to_string()))
}

/// Orbits of the doubly visible set of Θ.
#[pyfunction]
fn doubly_visible_set(theta: &str) -> PyResult<Vec<Vec<String>>> {
    let set = calculus::doubly_visible_set(&angle(theta)?).map_err(py_err)?;
    Ok(set.orbits.iter().map(|o| o.iter().map(|x| x.to_string()).collect()).collect())
}

#[pyfunction]
fn f(q: C64, z: C64) -> C64 {
    dynamics::f(q, z)
}

#[pyfunction]
fn critical_points(q: C64) -> PyResult<(C64, C64)> {
    dynamics::critical_points(q).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (q, budget = 500, eps = 1e-3))]
fn classify_parameter(q: C64, budget: usize, eps: f64) -> PyResult<String> {
    Ok(dynamics::classify_parameter(q, budget, eps).map_err(py_err)?.0.label().to_string())
}

#[pyfunction]
fn boettcher(q: C64, z: C64) -> PyResult<C64> {
    rays::boettcher(q, z).map_err(py_err)
}

#[pyfunction]
fn param_map(q: C64) -> PyResult<C64> {
    rays::param_map(q).map_err(py_err)
}

/// Landing point of the internal ray θ, or `None` when it bifurcates.
#[pyfunction]
#[pyo3(signature = (q, theta, depth = 24))]
fn internal_ray_landing(q: C64, theta: &str, depth: usize) -> PyResult<Option<C64>> {
    Ok(rays::internal_ray(q, &angle(theta)?, depth).map_err(py_err)?.landing_point)
}

/// Measured coordinates and rotation number of the doubly visible set
/// at `Φ = r e^{2πiΘ}`.
#[pyfunction]
#[pyo3(signature = (theta, r = 0.5, max_period = 4))]
fn measure_doubly_visible(theta: &str, r: f64, max_period: usize) -> PyResult<(Vec<String>, Option<String>)> {
    let m = rays::measure_doubly_visible(&angle(theta)?, r, max_period, 24).map_err(py_err)?;
    Ok((m.coordinates.iter().map(|x| x.to_string()).collect(), m.rotation_number.map(|t| t.to_string())))
}

/// Renders the dynamical plane to a PPM file; returns pixel counts by class.
#[pyfunction]
#[pyo3(signature = (q, path, size = 256, extent = 3.0, budget = 500))]
fn render_julia_ppm(q: C64, path: &str, size: usize, extent: f64, budget: usize) -> PyResult<Vec<usize>> {
    let mut spec = ImageSpec::square(size, C64::new(0.0, 0.0), extent);
    spec.budget = budget;
    let img = render::render_julia(q, &spec).map_err(py_err)?;
    img.write_ppm(std::path::Path::new(path), &Palette::default()).map_err(py_err)?;
    Ok((0..4).map(|c| img.count(c)).collect())
}

#[pymodule]
fn antipode_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(critical_gap, m)?)?;
    m.add_function(wrap_pyfunction!(phi_pm, m)?)?;
    m.add_function(wrap_pyfunction!(psi, m)?)?;
    m.add_function(wrap_pyfunction!(dynamic_rotation_number, m)?)?;
    m.add_function(wrap_pyfunction!(rho_inverse, m)?)?;
    m.add_function(wrap_pyfunction!(doubly_visible_set, m)?)?;
    m.add_function(wrap_pyfunction!(f, m)?)?;
    m.add_function(wrap_pyfunction!(critical_points, m)?)?;
    m.add_function(wrap_pyfunction!(classify_parameter, m)?)?;
    m.add_function(wrap_pyfunction!(boettcher, m)?)?;
    m.add_function(wrap_pyfunction!(param_map, m)?)?;
    m.add_function(wrap_pyfunction!(internal_ray_landing, m)?)?;
    m.add_function(wrap_pyfunction!(measure_doubly_visible, m)?)?;
    m.add_function(wrap_pyfunction!(render_julia_ppm, m)?)?;
    Ok(())
}
