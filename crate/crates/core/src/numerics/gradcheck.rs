//! Central finite-difference gradient checking against the tape.

use super::tape::{Tape, Var};
use super::tensor::ParamStore;
use crate::error::Result;

/// Step used for central differences.
pub const FD_STEP: f64 = 1e-5;

/// Smallest denominator used when forming relative errors, so entries whose
/// true gradient is ~0 are compared on an absolute scale.
pub const REL_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub max_abs_error: f64,
    /// Parameter name and flat index of the worst entry.
    pub worst: (String, usize),
    pub entries_checked: usize,
}

/// Compares tape gradients of the scalar built by `loss` with central finite
/// differences over every parameter entry in `store`.
///
/// The relative error of one entry is `|analytic - numeric| / max(|analytic|,
/// |numeric|, REL_FLOOR)`.
pub fn check_gradients<F>(store: &mut ParamStore, mut loss: F) -> Result<GradCheckReport>
where
    F: FnMut(&ParamStore, &mut Tape) -> Result<Var>,
{
    store.zero_grad();
    let mut tape = Tape::new();
    let l = loss(store, &mut tape)?;
    tape.backward(l, store)?;
    let analytic: Vec<_> = store
        .ids()
        .map(|id| {
            store
                .get(id)
                .grad
                .as_ref()
                .map(|g| g.as_standard_layout().into_owned())
                .unwrap_or_else(|| ndarray::Array2::zeros(store.get(id).shape()))
        })
        .collect();
    store.zero_grad();

    let mut eval = |s: &ParamStore| -> Result<f64> {
        let mut t = Tape::new();
        let l = loss(s, &mut t)?;
        Ok(t.scalar(l))
    };

    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        max_abs_error: 0.0,
        worst: (String::new(), 0),
        entries_checked: 0,
    };
    let ids: Vec<_> = store.ids().collect();
    for (k, id) in ids.into_iter().enumerate() {
        let len = store.get(id).value.len();
        for flat in 0..len {
            let original = flat_get(store, id, flat);
            flat_set(store, id, flat, original + FD_STEP);
            let up = eval(store)?;
            flat_set(store, id, flat, original - FD_STEP);
            let down = eval(store)?;
            flat_set(store, id, flat, original);

            let numeric = (up - down) / (2.0 * FD_STEP);
            let exact = analytic[k].as_slice().expect("contiguous")[flat];
            let abs = (exact - numeric).abs();
            let rel = abs / exact.abs().max(numeric.abs()).max(REL_FLOOR);
            report.entries_checked += 1;
            report.max_abs_error = report.max_abs_error.max(abs);
            if rel > report.max_rel_error {
                report.max_rel_error = rel;
                report.worst = (store.name(id).to_string(), flat);
            }
        }
    }
    Ok(report)
}

fn flat_get(store: &ParamStore, id: super::ParamId, flat: usize) -> f64 {
    store.value(id).as_slice().expect("parameters are contiguous")[flat]
}

fn flat_set(store: &mut ParamStore, id: super::ParamId, flat: usize, v: f64) {
    store
        .get_mut(id)
        .value
        .as_slice_mut()
        .expect("parameters are contiguous")[flat] = v;
}
