use pyo3::prelude::*;

#[pymodule]
fn imub_py(_m: &Bound<'_, PyModule>) -> PyResult<()> {
    Ok(())
}
