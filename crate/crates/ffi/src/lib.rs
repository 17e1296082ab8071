//! C ABI for `cartan3`.
//!
//! Every function returns a [`Cartan3Status`]. On failure a message is stored per thread and
//! can be read with [`cartan3_last_error_message`]. Matrices are passed as `n × n` row-major
//! arrays of interleaved `(re, im)` doubles. Handles are opaque and must be released with
//! the matching `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use cartan3::domains::{self, DomainPoint, DomainTag};
use cartan3::geometry::{self, Action, MomentValue};
use cartan3::linalg::{ComplexSymMatrix, C64};
use cartan3::montecarlo::{default_workers, McConfig};
use cartan3::spectral::{CoeffConfig, CoeffMethod, Signature, SpectralTable};
use cartan3::symbols::{self, SymbolSpec};
use cartan3::Error;
use nalgebra::DMatrix;

/// Result codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cartan3Status {
    Ok = 0,
    InvalidInput = 1,
    Domain = 2,
    Numerical = 3,
    Budget = 4,
    NonFinite = 5,
    Sampler = 6,
    NullPointer = 7,
    Panic = 8,
}

/// Which realization a matrix argument refers to.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cartan3Domain {
    Bounded = 0,
    Siegel = 1,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cartan3Action {
    Elliptic = 0,
    Hyperbolic = 1,
    Parabolic = 2,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cartan3Method {
    Auto = 0,
    Reduced = 1,
    Full = 2,
}

/// Sampling and quadrature settings; `workers = 0` picks the default.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct Cartan3RunOptions {
    pub mc_samples: u64,
    pub seed: u64,
    pub workers: u32,
    pub quad_order: u32,
}

/// A parsed symbol.
pub struct Cartan3Symbol(SymbolSpec);

/// A table of Toeplitz eigenvalues.
pub struct Cartan3Table(SpectralTable);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> Cartan3Status {
    match e {
        Error::InvalidInput(_) => Cartan3Status::InvalidInput,
        Error::Domain(_) => Cartan3Status::Domain,
        Error::Numerical(_) => Cartan3Status::Numerical,
        Error::Budget(_) => Cartan3Status::Budget,
        Error::NonFinite { .. } => Cartan3Status::NonFinite,
        Error::Sampler { .. } => Cartan3Status::Sampler,
    }
}

enum Failure {
    Core(Error),
    Null(&'static str),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

fn guard(body: impl FnOnce() -> Result<(), Failure>) -> Cartan3Status {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => Cartan3Status::Ok,
        Ok(Err(Failure::Core(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("null pointer passed for {what}"));
            Cartan3Status::NullPointer
        }
        Err(_) => {
            set_error("internal panic".into());
            Cartan3Status::Panic
        }
    }
}

fn non_null<T>(p: *const T, what: &'static str) -> Result<(), Failure> {
    if p.is_null() {
        Err(Failure::Null(what))
    } else {
        Ok(())
    }
}

fn tag_of(d: Cartan3Domain) -> DomainTag {
    match d {
        Cartan3Domain::Bounded => DomainTag::BoundedDIII,
        Cartan3Domain::Siegel => DomainTag::SiegelS,
    }
}

/// Reads an `n × n` interleaved complex matrix and checks symmetry.
///
/// # Safety
/// `data` must point to `2·n·n` doubles.
unsafe fn read_matrix(n: usize, data: *const f64) -> Result<ComplexSymMatrix, Failure> {
    non_null(data, "matrix")?;
    if n == 0 {
        return Err(Error::InvalidInput("matrix dimension must be positive".into()).into());
    }
    let raw = std::slice::from_raw_parts(data, 2 * n * n);
    let m = DMatrix::from_fn(n, n, |j, k| C64::new(raw[2 * (j * n + k)], raw[2 * (j * n + k) + 1]));
    Ok(ComplexSymMatrix::from_dense(&m)?)
}

unsafe fn read_point(domain: Cartan3Domain, n: usize, data: *const f64) -> Result<DomainPoint, Failure> {
    Ok(DomainPoint::new(tag_of(domain), read_matrix(n, data)?)?)
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cartan3_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the most recent failure on this thread, or null. The pointer stays valid
/// until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn cartan3_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// `Γ_Ω(λ)` for the cone of `n × n` positive matrices.
///
/// # Safety
/// `out` must be a valid pointer to a double.
#[no_mangle]
pub unsafe extern "C" fn cartan3_multigamma(n: usize, lambda: f64, out: *mut f64) -> Cartan3Status {
    guard(|| {
        non_null(out, "out")?;
        *out = domains::multigamma(n, lambda)?;
        Ok(())
    })
}

/// Density of the weighted probability measure at `z`.
///
/// # Safety
/// `z` must hold `2·n·n` doubles and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn cartan3_weight_density(
    domain: Cartan3Domain,
    n: usize,
    lambda: f64,
    z: *const f64,
    out: *mut f64,
) -> Cartan3Status {
    guard(|| {
        non_null(out, "out")?;
        let p = read_point(domain, n, z)?;
        *out = domains::weight_density(p.tag(), lambda, p.z())?;
        Ok(())
    })
}

/// Weighted Bergman kernel `K_λ(z, w)`.
///
/// # Safety
/// `z` and `w` must hold `2·n·n` doubles; `out_re`, `out_im` must be valid.
#[no_mangle]
pub unsafe extern "C" fn cartan3_bergman_kernel(
    domain: Cartan3Domain,
    n: usize,
    lambda: f64,
    z: *const f64,
    w: *const f64,
    out_re: *mut f64,
    out_im: *mut f64,
) -> Cartan3Status {
    guard(|| {
        non_null(out_re, "out_re")?;
        non_null(out_im, "out_im")?;
        let (zp, wp) = (read_point(domain, n, z)?, read_point(domain, n, w)?);
        let k = domains::bergman_kernel(zp.tag(), lambda, &zp, &wp)?;
        *out_re = k.re;
        *out_im = k.im;
        Ok(())
    })
}

/// Moment map of `action` at `z`. Writes 1 value for the elliptic and hyperbolic actions and
/// `n·n` row-major values for the parabolic one; `*written` receives the count. Fails with
/// `InvalidInput` if `capacity` is too small.
///
/// # Safety
/// `z` must hold `2·n·n` doubles, `out` must hold `capacity` doubles, `written` must be valid.
#[no_mangle]
pub unsafe extern "C" fn cartan3_moment(
    action: Cartan3Action,
    n: usize,
    z: *const f64,
    out: *mut f64,
    capacity: usize,
    written: *mut usize,
) -> Cartan3Status {
    guard(|| {
        non_null(out, "out")?;
        non_null(written, "written")?;
        let action = match action {
            Cartan3Action::Elliptic => Action::AbelianElliptic,
            Cartan3Action::Hyperbolic => Action::AbelianHyperbolic,
            Cartan3Action::Parabolic => Action::Parabolic,
        };
        let domain = match action.domain() {
            DomainTag::BoundedDIII => Cartan3Domain::Bounded,
            DomainTag::SiegelS => Cartan3Domain::Siegel,
        };
        let values = match geometry::moment(action, &read_point(domain, n, z)?)? {
            MomentValue::Scalar(s) => vec![s],
            MomentValue::Matrix(m) => m.to_dense().transpose().iter().copied().collect(),
        };
        *written = values.len();
        if capacity < values.len() {
            return Err(
                Error::InvalidInput(format!("output needs {} values, capacity is {capacity}", values.len())).into()
            );
        }
        std::slice::from_raw_parts_mut(out, values.len()).copy_from_slice(&values);
        Ok(())
    })
}

/// Parses a symbol from its JSON description.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cartan3_symbol_from_json(json: *const c_char, out: *mut *mut Cartan3Symbol) -> Cartan3Status {
    guard(|| {
        non_null(json, "json")?;
        non_null(out, "out")?;
        let text = CStr::from_ptr(json).to_str().map_err(|_| Error::InvalidInput("symbol JSON is not UTF-8".into()))?;
        let spec = symbols::symbol_from_json(text)?;
        *out = Box::into_raw(Box::new(Cartan3Symbol(spec)));
        Ok(())
    })
}

/// Evaluates a symbol at a point of its own domain.
///
/// # Safety
/// `symbol` must come from [`cartan3_symbol_from_json`]; `z` must hold `2·n·n` doubles.
#[no_mangle]
pub unsafe extern "C" fn cartan3_symbol_eval(
    symbol: *const Cartan3Symbol,
    n: usize,
    z: *const f64,
    out_re: *mut f64,
    out_im: *mut f64,
) -> Cartan3Status {
    guard(|| {
        non_null(symbol, "symbol")?;
        non_null(out_re, "out_re")?;
        non_null(out_im, "out_im")?;
        let spec = &(*symbol).0;
        let p = DomainPoint::new(spec.tag(), read_matrix(n, z)?)?;
        let v = symbols::eval_symbol(spec, &p)?;
        *out_re = v.re;
        *out_im = v.im;
        Ok(())
    })
}

/// Releases a symbol. Null is ignored.
///
/// # Safety
/// `symbol` must come from [`cartan3_symbol_from_json`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cartan3_symbol_free(symbol: *mut Cartan3Symbol) {
    if !symbol.is_null() {
        drop(Box::from_raw(symbol));
    }
}

/// Eigenvalues `c_α` for every signature of length `n` and degree `<= max_degree`.
///
/// # Safety
/// `symbol` must be a live handle; `options` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn cartan3_c_table(
    symbol: *const Cartan3Symbol,
    n: usize,
    lambda: f64,
    max_degree: u32,
    method: Cartan3Method,
    options: *const Cartan3RunOptions,
    out: *mut *mut Cartan3Table,
) -> Cartan3Status {
    guard(|| {
        non_null(symbol, "symbol")?;
        non_null(options, "options")?;
        non_null(out, "out")?;
        if n == 0 {
            return Err(Error::InvalidInput("n must be positive".into()).into());
        }
        let o = *options;
        let workers = if o.workers == 0 { default_workers() } else { o.workers as usize };
        let cfg = CoeffConfig::new(o.quad_order as usize, McConfig::new(o.mc_samples, o.seed).with_workers(workers));
        let method = match method {
            Cartan3Method::Auto => CoeffMethod::Auto,
            Cartan3Method::Reduced => CoeffMethod::Reduced,
            Cartan3Method::Full => CoeffMethod::Full,
        };
        let alphas = Signature::up_to_degree(n, max_degree);
        let table = SpectralTable::compute(&(*symbol).0, lambda, &alphas, method, &cfg)?;
        *out = Box::into_raw(Box::new(Cartan3Table(table)));
        Ok(())
    })
}

/// Number of rows of a table; 0 for null.
///
/// # Safety
/// `table` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cartan3_table_len(table: *const Cartan3Table) -> usize {
    if table.is_null() {
        0
    } else {
        (*table).0.len()
    }
}

/// Row `index`: the signature (`n` entries into `alpha`, which holds `alpha_capacity`), the
/// value and its standard error.
///
/// # Safety
/// `table` must be a live handle and all output pointers valid.
#[no_mangle]
pub unsafe extern "C" fn cartan3_table_entry(
    table: *const Cartan3Table,
    index: usize,
    alpha: *mut u32,
    alpha_capacity: usize,
    value_re: *mut f64,
    value_im: *mut f64,
    std_error: *mut f64,
) -> Cartan3Status {
    guard(|| {
        non_null(table, "table")?;
        non_null(alpha, "alpha")?;
        non_null(value_re, "value_re")?;
        non_null(value_im, "value_im")?;
        non_null(std_error, "std_error")?;
        let t = &(*table).0;
        let e = t
            .entries
            .get(index)
            .ok_or_else(|| Error::InvalidInput(format!("row {index} out of range (table has {})", t.len())))?;
        let sig = e.alpha.as_slice();
        if alpha_capacity < sig.len() {
            return Err(Error::InvalidInput(format!(
                "signature needs {} slots, capacity is {alpha_capacity}",
                sig.len()
            ))
            .into());
        }
        std::slice::from_raw_parts_mut(alpha, sig.len()).copy_from_slice(sig);
        *value_re = e.value_re;
        *value_im = e.value_im;
        *std_error = e.std_error;
        Ok(())
    })
}

/// The table as CSV text; release with [`cartan3_string_free`].
///
/// # Safety
/// `table` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn cartan3_table_csv(table: *const Cartan3Table, out: *mut *mut c_char) -> Cartan3Status {
    guard(|| {
        non_null(table, "table")?;
        non_null(out, "out")?;
        let csv = CString::new((*table).0.to_csv()).map_err(|_| Error::Numerical("CSV contains NUL".into()))?;
        *out = csv.into_raw();
        Ok(())
    })
}

/// Releases a table. Null is ignored.
///
/// # Safety
/// `table` must come from [`cartan3_c_table`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cartan3_table_free(table: *mut Cartan3Table) {
    if !table.is_null() {
        drop(Box::from_raw(table));
    }
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cartan3_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
