//! C interface to `beas` editing sessions.
//!
//! Sessions are opaque heap handles. Every fallible call returns a
//! [`BeasStatus`]; on failure [`beas_last_error_message`] describes the error
//! for the calling thread. Strings returned by the library must be released
//! with [`beas_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use beas::config::Config;
use beas::geometry::Image;
use beas::io::{mask_to_gray8, ContourDocument};
use beas::phantom::generate_phantom;
use beas::{interactive_step, open_session, BeasError, EnergyWeights, ProbabilityMap, RefineSession};

/// Status codes. Values are stable.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BeasStatus {
    Ok = 0,
    Config = 1,
    InputShape = 2,
    InputRange = 3,
    Initialization = 4,
    Divergence = 5,
    AnchorNotFound = 6,
    UnsupportedFormat = 7,
    Document = 8,
    Io = 9,
    NullPointer = 10,
    Panic = 11,
}

impl From<&BeasError> for BeasStatus {
    fn from(e: &BeasError) -> Self {
        match e {
            BeasError::Config(_) => BeasStatus::Config,
            BeasError::InputShape { .. } => BeasStatus::InputShape,
            BeasError::InputRange(_) => BeasStatus::InputRange,
            BeasError::Initialization(_) => BeasStatus::Initialization,
            BeasError::Divergence { .. } => BeasStatus::Divergence,
            BeasError::AnchorNotFound(_) => BeasStatus::AnchorNotFound,
            BeasError::UnsupportedFormat(_) => BeasStatus::UnsupportedFormat,
            BeasError::Document(_) => BeasStatus::Document,
            BeasError::Io { .. } => BeasStatus::Io,
        }
    }
}

/// Opaque editing session.
pub struct BeasSession {
    inner: RefineSession,
}

/// Result of one interactive step.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct BeasStepOutcome {
    pub displacement: f64,
    pub iterations: u32,
    pub converged: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: BeasStatus, msg: impl Into<String>) -> BeasStatus {
    set_error(msg.into());
    status
}

/// Runs `f`, converting errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), BeasStatus>) -> BeasStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => BeasStatus::Ok,
        Ok(Err(status)) => status,
        Err(_) => fail(BeasStatus::Panic, "internal panic"),
    }
}

fn check(r: beas::Result<()>) -> Result<(), BeasStatus> {
    r.map_err(|e| fail(BeasStatus::from(&e), format!("{} ({})", e, e.code())))
}

unsafe fn session_mut<'a>(s: *mut BeasSession) -> Result<&'a mut RefineSession, BeasStatus> {
    s.as_mut()
        .map(|s| &mut s.inner)
        .ok_or_else(|| fail(BeasStatus::NullPointer, "session is null"))
}

unsafe fn session_ref<'a>(s: *const BeasSession) -> Result<&'a RefineSession, BeasStatus> {
    s.as_ref()
        .map(|s| &s.inner)
        .ok_or_else(|| fail(BeasStatus::NullPointer, "session is null"))
}

fn non_null<T>(p: *const T, what: &str) -> Result<(), BeasStatus> {
    if p.is_null() {
        Err(fail(BeasStatus::NullPointer, format!("{what} is null")))
    } else {
        Ok(())
    }
}

unsafe fn load_config(json: *const c_char) -> Result<Config, BeasStatus> {
    if json.is_null() {
        return Ok(Config::default());
    }
    let text = CStr::from_ptr(json)
        .to_str()
        .map_err(|e| fail(BeasStatus::Config, format!("config is not UTF-8: {e}")))?;
    let mut out = Config::default();
    check(Config::from_json(text).map(|c| out = c))?;
    Ok(out)
}

unsafe fn finish_open(
    image: Image,
    prob: Image,
    config: &Config,
    out: *mut *mut BeasSession,
) -> Result<(), BeasStatus> {
    let mut session = None;
    check(
        ProbabilityMap::new(prob)
            .and_then(|p| open_session(image, p, config))
            .map(|s| session = Some(s)),
    )?;
    let handle = Box::new(BeasSession {
        inner: session.expect("set on success"),
    });
    *out = Box::into_raw(handle);
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn beas_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failed call on this thread, or NULL. Valid until
/// the next library call on the same thread.
#[no_mangle]
pub extern "C" fn beas_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Opens a session on row-major `height x width` arrays with values in
/// `[0, 1]`. `config_json` may be NULL for defaults. Runs stage-one
/// smoothing before returning.
///
/// # Safety
/// `image` and `prob_map` must point to `width * height` doubles; `out` must
/// be writable.
#[no_mangle]
pub unsafe extern "C" fn beas_session_open(
    image: *const f64,
    prob_map: *const f64,
    width: usize,
    height: usize,
    config_json: *const c_char,
    out: *mut *mut BeasSession,
) -> BeasStatus {
    guard(|| {
        non_null(image, "image")?;
        non_null(prob_map, "prob_map")?;
        non_null(out, "out")?;
        *out = ptr::null_mut();
        let n = width
            .checked_mul(height)
            .ok_or_else(|| fail(BeasStatus::InputShape, "image too large"))?;
        let to_image = |p: *const f64| {
            Image::from_shape_vec((height, width), std::slice::from_raw_parts(p, n).to_vec())
                .expect("length matches")
        };
        let config = load_config(config_json)?;
        finish_open(to_image(image), to_image(prob_map), &config, out)
    })
}

/// Opens a session on a synthetic phantom. `size` 0 uses the default.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn beas_session_open_phantom(
    seed: u64,
    corruption: u32,
    size: u32,
    out: *mut *mut BeasSession,
) -> BeasStatus {
    guard(|| {
        non_null(out, "out")?;
        *out = ptr::null_mut();
        let config = Config::default();
        let mut cfg = config.phantom.clone();
        if size > 0 {
            cfg.size = size as usize;
        }
        let mut phantom = None;
        check(generate_phantom(seed, corruption as usize, &cfg).map(|p| phantom = Some(p)))?;
        let p = phantom.expect("set on success");
        finish_open(p.image, p.prob_map.values().clone(), &config, out)
    })
}

/// Releases a session. NULL is ignored.
///
/// # Safety
/// `session` must come from an open call and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn beas_session_free(session: *mut BeasSession) {
    if !session.is_null() {
        drop(Box::from_raw(session));
    }
}

/// Adds an anchor at image coordinates and stores its id in `out_id`
/// (may be NULL). Does not step.
///
/// # Safety
/// `session` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn beas_session_add_anchor(
    session: *mut BeasSession,
    x: f64,
    y: f64,
    out_id: *mut u64,
) -> BeasStatus {
    guard(|| {
        let s = session_mut(session)?;
        let mut id = 0;
        check(s.add_anchor(x, y).map(|(i, _)| id = i))?;
        if !out_id.is_null() {
            *out_id = id;
        }
        Ok(())
    })
}

/// # Safety
/// `session` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn beas_session_move_anchor(
    session: *mut BeasSession,
    anchor_id: u64,
    x: f64,
    y: f64,
) -> BeasStatus {
    guard(|| check(session_mut(session)?.move_anchor(anchor_id, x, y)))
}

/// # Safety
/// `session` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn beas_session_remove_anchor(
    session: *mut BeasSession,
    anchor_id: u64,
) -> BeasStatus {
    guard(|| check(session_mut(session)?.remove_anchor(anchor_id)))
}

/// Runs one interactive step. `out` may be NULL.
///
/// # Safety
/// `session` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn beas_session_step(
    session: *mut BeasSession,
    out: *mut BeasStepOutcome,
) -> BeasStatus {
    guard(|| {
        let s = session_mut(session)?;
        let mut r = BeasStepOutcome::default();
        check(interactive_step(s).map(|o| {
            r = BeasStepOutcome {
                displacement: o.displacement,
                iterations: o.iterations as u32,
                converged: o.converged,
            }
        }))?;
        if !out.is_null() {
            *out = r;
        }
        Ok(())
    })
}

/// # Safety
/// `session` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn beas_session_set_weights(
    session: *mut BeasSession,
    alpha: f64,
    beta: f64,
    gamma: f64,
) -> BeasStatus {
    guard(|| check(session_mut(session)?.set_weights(EnergyWeights { alpha, beta, gamma })))
}

/// Drops all anchors and restores the stage-one contour.
///
/// # Safety
/// `session` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn beas_session_reset(session: *mut BeasSession) -> BeasStatus {
    guard(|| {
        session_mut(session)?.reset();
        Ok(())
    })
}

/// Number of contour coefficients, 0 for NULL.
///
/// # Safety
/// `session` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn beas_session_n_knots(session: *const BeasSession) -> usize {
    session.as_ref().map_or(0, |s| s.inner.contour().n_knots())
}

/// Copies the coefficients into `out`, which holds `len` doubles.
///
/// # Safety
/// `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn beas_session_coefficients(
    session: *const BeasSession,
    out: *mut f64,
    len: usize,
) -> BeasStatus {
    guard(|| {
        let s = session_ref(session)?;
        non_null(out, "out")?;
        let c = s.contour().coefficients();
        if len < c.len() {
            return Err(fail(
                BeasStatus::InputShape,
                format!("buffer holds {len}, need {}", c.len()),
            ));
        }
        ptr::copy_nonoverlapping(c.as_ptr(), out, c.len());
        Ok(())
    })
}

/// Writes the polar origin as `(x, y)` into `out[0..2]`.
///
/// # Safety
/// `out` must point to two writable doubles.
#[no_mangle]
pub unsafe extern "C" fn beas_session_origin(
    session: *const BeasSession,
    out: *mut f64,
) -> BeasStatus {
    guard(|| {
        let s = session_ref(session)?;
        non_null(out, "out")?;
        let [x, y] = s.frame().origin;
        *out = x;
        *out.add(1) = y;
        Ok(())
    })
}

/// Writes the rasterized contour as row-major bytes (0 or 255) into `out`,
/// which holds `len >= width * height` bytes.
///
/// # Safety
/// `out` must point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn beas_session_mask(
    session: *const BeasSession,
    out: *mut u8,
    len: usize,
) -> BeasStatus {
    guard(|| {
        let s = session_ref(session)?;
        non_null(out, "out")?;
        let pixels = mask_to_gray8(&s.mask());
        if len < pixels.len() {
            return Err(fail(
                BeasStatus::InputShape,
                format!("buffer holds {len}, need {}", pixels.len()),
            ));
        }
        for (i, v) in pixels.iter().enumerate() {
            *out.add(i) = *v;
        }
        Ok(())
    })
}

/// Contour document JSON, or NULL on error. Free with [`beas_string_free`].
///
/// # Safety
/// `session` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn beas_session_contour_json(session: *const BeasSession) -> *mut c_char {
    let mut out = ptr::null_mut();
    guard(|| {
        let s = session_ref(session)?;
        let json = ContourDocument::new(s.contour(), s.frame()).to_json();
        out = CString::new(json).expect("JSON has no NUL").into_raw();
        Ok(())
    });
    out
}

/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn beas_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
