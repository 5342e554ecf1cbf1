//! C interface to `tfavar`.
//!
//! Every function returns a [`TfavarStatus`]. On failure a description is
//! kept per thread and can be read with [`tfavar_last_error`]. Panels and
//! fits are opaque handles released with their `_free` functions. Matrices
//! cross the boundary as row-major `double` buffers whose length the caller
//! states explicitly.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ndarray::Array2;
use tfavar::factors::BaiNgCriterion;
use tfavar::panel::{load_csv, PanelSeries};
use tfavar::pipeline::{fit, FactorMode, FavarFit, FitOptions, LambdaMode, TauMode};
use tfavar::simulate::{simulate_panel, DgpSpec};
use tfavar::trunc::DEFAULT_GRID_SIZE;
use tfavar::varlasso::{LassoOptions, DEFAULT_MAX_ITER, DEFAULT_TOL};
use tfavar::Error;

/// Result codes. The nonzero values follow the error categories of the
/// library and match the exit codes of the command-line tool.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TfavarStatus {
    Ok = 0,
    Panic = 1,
    InvalidArgument = 2,
    Io = 3,
    Input = 4,
    Data = 5,
    Numerical = 6,
    NullPointer = 7,
}

/// Opaque panel handle.
pub struct TfavarPanel {
    inner: PanelSeries,
}

/// Opaque fit handle.
pub struct TfavarFit {
    inner: FavarFit,
}

/// Plain-data fit options. Start from [`tfavar_fit_options_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct TfavarFitOptions {
    /// Number of factors; ignored when `r_auto` is set.
    pub r: usize,
    /// Select r by a Bai–Ng criterion up to `r_max`.
    pub r_auto: bool,
    pub r_max: usize,
    /// 1, 2 or 3 for ICp1, ICp2, ICp3.
    pub criterion: u32,
    /// VAR order.
    pub d: usize,
    /// Choose τ by cross validation over `tau_grid_size` points.
    pub tau_cv: bool,
    /// Fixed τ when `tau_cv` is false; `INFINITY` disables truncation.
    pub tau: f64,
    pub tau_grid_size: usize,
    /// Choose λ by blocked cross validation.
    pub lambda_cv: bool,
    pub lambda: f64,
    pub n_lambda: usize,
    pub n_folds: usize,
    pub tol: f64,
    pub max_iter: usize,
}

impl TfavarFitOptions {
    fn to_options(self) -> Result<FitOptions, Error> {
        let factors = if self.r_auto {
            let criterion = match self.criterion {
                1 => BaiNgCriterion::Icp1,
                2 => BaiNgCriterion::Icp2,
                3 => BaiNgCriterion::Icp3,
                c => return Err(Error::InvalidArgument(format!("criterion must be 1, 2 or 3, got {c}"))),
            };
            FactorMode::Auto {
                r_max: self.r_max,
                criterion,
            }
        } else {
            FactorMode::Fixed(self.r)
        };
        let opts = FitOptions {
            factors,
            d: self.d,
            tau: if self.tau_cv {
                TauMode::Cv {
                    grid_size: self.tau_grid_size,
                    lags: None,
                }
            } else {
                TauMode::Fixed(self.tau)
            },
            lambda: if self.lambda_cv {
                LambdaMode::Cv {
                    n_lambda: self.n_lambda,
                    n_folds: self.n_folds,
                }
            } else {
                LambdaMode::Fixed(self.lambda)
            },
            lasso: LassoOptions {
                tol: self.tol,
                max_iter: self.max_iter,
                ..Default::default()
            },
        };
        opts.validate()?;
        Ok(opts)
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

enum Failure {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn status_of(e: &Error) -> TfavarStatus {
    match e.category() {
        "io" => TfavarStatus::Io,
        "input" => TfavarStatus::Input,
        "data" => TfavarStatus::Data,
        "numerical" => TfavarStatus::Numerical,
        _ => TfavarStatus::InvalidArgument,
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> TfavarStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            TfavarStatus::Ok
        }
        Ok(Err(Failure::Null(what))) => {
            set_last_error(format!("null pointer: {what}"));
            TfavarStatus::NullPointer
        }
        Ok(Err(Failure::Lib(e))) => {
            let stage = e.stage().map_or_else(|| "-".to_string(), |s| s.to_string());
            set_last_error(format!("category={} stage={stage} message={e}", e.category()));
            status_of(&e)
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {msg}"));
            TfavarStatus::Panic
        }
    }
}

unsafe fn cstr<'a>(p: *const c_char, what: &'static str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::Lib(Error::InvalidArgument(format!("{what} is not valid UTF-8"))))
}

unsafe fn out_slice<'a>(p: *mut f64, len: usize, needed: usize, what: &'static str) -> Result<&'a mut [f64], Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    if len != needed {
        return Err(Failure::Lib(Error::DimensionMismatch {
            expected: format!("{needed} values in {what}"),
            found: len.to_string(),
        }));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn tfavar_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or NULL. The pointer
/// stays valid until the next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn tfavar_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Options matching the command-line defaults: r = 0, d = 1, τ and λ by
/// cross validation.
#[no_mangle]
pub extern "C" fn tfavar_fit_options_default() -> TfavarFitOptions {
    TfavarFitOptions {
        r: 0,
        r_auto: false,
        r_max: 8,
        criterion: 2,
        d: 1,
        tau_cv: true,
        tau: f64::INFINITY,
        tau_grid_size: DEFAULT_GRID_SIZE,
        lambda_cv: true,
        lambda: 0.0,
        n_lambda: 50,
        n_folds: 5,
        tol: DEFAULT_TOL,
        max_iter: DEFAULT_MAX_ITER,
    }
}

/// Copies an `n × p` row-major buffer into a new panel.
///
/// # Safety
/// `data` must point to `n * p` readable doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tfavar_panel_new(data: *const f64, n: usize, p: usize, out: *mut *mut TfavarPanel) -> TfavarStatus {
    guard(|| {
        if data.is_null() {
            return Err(Failure::Null("data"));
        }
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let len = n.checked_mul(p).ok_or_else(|| Error::InvalidArgument("n * p overflows".into()))?;
        let values = std::slice::from_raw_parts(data, len).to_vec();
        let values = Array2::from_shape_vec((n, p), values).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: k / p.max(1) + 1,
                column: k % p.max(1) + 1,
                value: values.as_slice().unwrap()[k].to_string(),
            }
            .into());
        }
        let panel = PanelSeries::from_values(values)?;
        *out = Box::into_raw(Box::new(TfavarPanel { inner: panel }));
        Ok(())
    })
}

/// Reads a panel from a CSV file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tfavar_panel_load_csv(path: *const c_char, has_header: bool, out: *mut *mut TfavarPanel) -> TfavarStatus {
    guard(|| {
        let path = cstr(path, "path")?;
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let panel = load_csv(path, has_header)?;
        *out = Box::into_raw(Box::new(TfavarPanel { inner: panel }));
        Ok(())
    })
}

/// Simulates one panel from a TOML design specification with the given seed.
///
/// # Safety
/// `spec_toml` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tfavar_simulate(spec_toml: *const c_char, seed: u64, out: *mut *mut TfavarPanel) -> TfavarStatus {
    guard(|| {
        let text = cstr(spec_toml, "spec_toml")?;
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let spec = DgpSpec::from_toml(text)?.with_seed(seed);
        let sim = simulate_panel(&spec)?;
        *out = Box::into_raw(Box::new(TfavarPanel { inner: sim.x }));
        Ok(())
    })
}

/// # Safety
/// `panel` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn tfavar_panel_free(panel: *mut TfavarPanel) {
    if !panel.is_null() {
        drop(Box::from_raw(panel));
    }
}

/// # Safety
/// `panel` must be a live handle; `n` and `p` writable.
#[no_mangle]
pub unsafe extern "C" fn tfavar_panel_dims(panel: *const TfavarPanel, n: *mut usize, p: *mut usize) -> TfavarStatus {
    guard(|| {
        let panel = panel.as_ref().ok_or(Failure::Null("panel"))?;
        if n.is_null() || p.is_null() {
            return Err(Failure::Null("n/p"));
        }
        *n = panel.inner.n();
        *p = panel.inner.p();
        Ok(())
    })
}

/// Copies the panel values into an `n × p` row-major buffer.
///
/// # Safety
/// `panel` must be live and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn tfavar_panel_values(panel: *const TfavarPanel, out: *mut f64, len: usize) -> TfavarStatus {
    guard(|| {
        let panel = panel.as_ref().ok_or(Failure::Null("panel"))?;
        let dst = out_slice(out, len, panel.inner.n() * panel.inner.p(), "out")?;
        for (d, v) in dst.iter_mut().zip(panel.inner.values().iter()) {
            *d = *v;
        }
        Ok(())
    })
}

/// Fits the model. `options` may be NULL for the defaults.
///
/// # Safety
/// `panel` must be live, `options` NULL or valid, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tfavar_fit(
    panel: *const TfavarPanel,
    options: *const TfavarFitOptions,
    out: *mut *mut TfavarFit,
) -> TfavarStatus {
    guard(|| {
        let panel = panel.as_ref().ok_or(Failure::Null("panel"))?;
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let opts = options.as_ref().copied().unwrap_or_else(|| tfavar_fit_options_default()).to_options()?;
        let f = fit(&panel.inner, &opts)?;
        *out = Box::into_raw(Box::new(TfavarFit { inner: f }));
        Ok(())
    })
}

/// # Safety
/// `fit` must come from [`tfavar_fit`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn tfavar_fit_free(fit: *mut TfavarFit) {
    if !fit.is_null() {
        drop(Box::from_raw(fit));
    }
}

/// Chosen factor number, truncation level, penalty and nonzero count.
/// Any output pointer may be NULL.
///
/// # Safety
/// `fit` must be live; non-NULL outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn tfavar_fit_summary(
    fit: *const TfavarFit,
    r: *mut usize,
    tau: *mut f64,
    lambda: *mut f64,
    nonzeros: *mut usize,
) -> TfavarStatus {
    guard(|| {
        let f = &fit.as_ref().ok_or(Failure::Null("fit"))?.inner;
        if !r.is_null() {
            *r = f.r();
        }
        if !tau.is_null() {
            *tau = f.tau();
        }
        if !lambda.is_null() {
            *lambda = f.var.lambda();
        }
        if !nonzeros.is_null() {
            *nonzeros = f.var.nnz();
        }
        Ok(())
    })
}

/// Copies `[Â₁ … Â_d]` as a `p × pd` row-major matrix; `len` must be `p·p·d`.
///
/// # Safety
/// `fit` must be live and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn tfavar_fit_coef(fit: *const TfavarFit, out: *mut f64, len: usize) -> TfavarStatus {
    guard(|| {
        let f = &fit.as_ref().ok_or(Failure::Null("fit"))?.inner;
        let coef = f.var.coef();
        let dst = out_slice(out, len, coef.len(), "out")?;
        for (d, v) in dst.iter_mut().zip(coef.iter()) {
            *d = *v;
        }
        Ok(())
    })
}

/// `h`-step forecast from the end of the fitted sample; `len` must be `p`.
/// `common` and `idio` may be NULL.
///
/// # Safety
/// `fit` must be live and each non-NULL buffer must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn tfavar_fit_forecast(
    fit: *const TfavarFit,
    h: usize,
    combined: *mut f64,
    common: *mut f64,
    idio: *mut f64,
    len: usize,
) -> TfavarStatus {
    guard(|| {
        let f = &fit.as_ref().ok_or(Failure::Null("fit"))?.inner;
        let point = f.forecast(h)?;
        let p = point.combined.len();
        out_slice(combined, len, p, "combined")?.copy_from_slice(point.combined.as_slice().unwrap());
        for (buf, src, name) in [(common, &point.common, "common"), (idio, &point.idio, "idio")] {
            if !buf.is_null() {
                out_slice(buf, len, p, name)?.copy_from_slice(src.as_slice().unwrap());
            }
        }
        Ok(())
    })
}
