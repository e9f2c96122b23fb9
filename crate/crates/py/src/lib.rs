use pyo3::prelude::*;

#[pymodule]
fn netcpd_py(_m: &Bound<'_, PyModule>) -> PyResult<()> {
    Ok(())
}
