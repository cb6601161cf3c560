//! C interface to the `cssr` library.
//!
//! Machines are opaque heap handles released with [`cssr_machine_free`].
//! Every fallible call returns a [`CssrStatus`]; on failure a description is
//! available from [`cssr_last_error_message`] on the same thread. Strings
//! returned through out-parameters are owned by the caller and must be
//! released with [`cssr_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use cssr::sequence::parse_input;
use cssr::{run_cssr, Alphabet, CausalStateMachine, CssrConfig, CssrError, SymbolMode, TestKind};

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CssrStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    DegenerateAlphabet = 3,
    /// Prediction from a history that maps to no state; the output holds the
    /// stationary symbol distribution instead.
    Unsynchronized = 4,
    BufferTooSmall = 5,
    Internal = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CssrTestKind {
    Ks = 0,
    ChiSquared = 1,
}

/// Inference parameters; fill with [`cssr_infer_config_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct CssrInferConfig {
    pub l_max: usize,
    pub alpha: f64,
    /// A [`CssrTestKind`] value.
    pub test: u32,
    pub min_count: u64,
}

/// Opaque machine handle.
pub struct CssrMachine {
    inner: CausalStateMachine,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(e: &CssrError) -> CssrStatus {
    match e {
        CssrError::DegenerateAlphabet(_) => CssrStatus::DegenerateAlphabet,
        CssrError::Unsynchronized { .. } => CssrStatus::Unsynchronized,
        CssrError::Numerical { .. } | CssrError::Io(_) => CssrStatus::Internal,
        _ => CssrStatus::InvalidInput,
    }
}

/// Runs `f`, converting errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), (CssrStatus, String)>) -> CssrStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CssrStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            CssrStatus::Internal
        }
    }
}

fn lib_err(e: CssrError) -> (CssrStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (CssrStatus, String) {
    (CssrStatus::NullPointer, format!("{what} is null"))
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, (CssrStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (CssrStatus::InvalidInput, format!("{what} is not valid UTF-8")))
}

unsafe fn handle<'a>(p: *const CssrMachine) -> Result<&'a CausalStateMachine, (CssrStatus, String)> {
    p.as_ref().map(|m| &m.inner).ok_or_else(|| null("machine"))
}

fn to_c_string(s: String) -> Result<*mut c_char, (CssrStatus, String)> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| (CssrStatus::Internal, "string contains a nul byte".into()))
}

/// Message for the last failed call on this thread, or null. Valid until
/// the next call into the library from this thread.
#[no_mangle]
pub extern "C" fn cssr_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Writes the default parameters (`l_max` 5, `alpha` 0.001, KS test,
/// `min_count` 1).
///
/// # Safety
/// `out` must be null or point to writable memory for one config.
#[no_mangle]
pub unsafe extern "C" fn cssr_infer_config_default(out: *mut CssrInferConfig) -> CssrStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let d = CssrConfig::default();
        *out = CssrInferConfig { l_max: d.l_max, alpha: d.alpha, test: CssrTestKind::Ks as u32, min_count: d.min_count };
        Ok(())
    })
}

/// Infers a machine from text data, one sequence per line, one character
/// per symbol. `alphabet` lists the symbols in order (e.g. `"AB"`) or is
/// null to infer them from the data.
///
/// # Safety
/// `data` and `alphabet` must be null or nul-terminated strings; `config`
/// must be null or point to a config; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn cssr_infer(
    data: *const c_char,
    alphabet: *const c_char,
    config: *const CssrInferConfig,
    out: *mut *mut CssrMachine,
) -> CssrStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = ptr::null_mut();
        let data = read_str(data, "data")?;
        let cfg = config.as_ref().ok_or_else(|| null("config"))?;
        let given = if alphabet.is_null() {
            None
        } else {
            Some(Alphabet::from_chars(read_str(alphabet, "alphabet")?).map_err(lib_err)?)
        };
        let (alphabet, seqs) = parse_input(data, SymbolMode::Chars, given.as_ref()).map_err(lib_err)?;
        let test = match cfg.test {
            0 => TestKind::Ks,
            1 => TestKind::ChiSquared,
            other => return Err((CssrStatus::InvalidInput, format!("unknown test kind {other}"))),
        };
        let config = CssrConfig { l_max: cfg.l_max, alpha: cfg.alpha, test, min_count: cfg.min_count };
        let result = run_cssr(&seqs, &alphabet, &config).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(CssrMachine { inner: result.machine }));
        Ok(())
    })
}

/// Parses a machine or process spec in the text format.
///
/// # Safety
/// `text` must be null or a nul-terminated string; `out` must be null or
/// writable.
#[no_mangle]
pub unsafe extern "C" fn cssr_machine_from_text(text: *const c_char, out: *mut *mut CssrMachine) -> CssrStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = ptr::null_mut();
        let m = CausalStateMachine::from_text(read_str(text, "text")?).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(CssrMachine { inner: m }));
        Ok(())
    })
}

/// Releases a machine; null is ignored.
///
/// # Safety
/// `machine` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cssr_machine_free(machine: *mut CssrMachine) {
    if !machine.is_null() {
        drop(Box::from_raw(machine));
    }
}

/// # Safety
/// `machine` must be null or a live handle; `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn cssr_machine_num_states(machine: *const CssrMachine, out: *mut usize) -> CssrStatus {
    guard(|| {
        let m = handle(machine)?;
        *out.as_mut().ok_or_else(|| null("out"))? = m.num_states();
        Ok(())
    })
}

/// Entropy rate in bits per symbol.
///
/// # Safety
/// `machine` must be null or a live handle; `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn cssr_machine_entropy_rate(machine: *const CssrMachine, out: *mut f64) -> CssrStatus {
    guard(|| {
        let m = handle(machine)?;
        *out.as_mut().ok_or_else(|| null("out"))? = m.entropy_rate();
        Ok(())
    })
}

/// Serializes the machine; release the string with [`cssr_string_free`].
///
/// # Safety
/// `machine` must be null or a live handle; `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn cssr_machine_to_text(machine: *const CssrMachine, out: *mut *mut c_char) -> CssrStatus {
    guard(|| {
        let m = handle(machine)?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = to_c_string(m.to_text())?;
        Ok(())
    })
}

/// Samples `n` symbols starting from the stationary distribution and
/// renders them as text.
///
/// # Safety
/// `machine` must be null or a live handle; `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn cssr_machine_simulate(
    machine: *const CssrMachine,
    n: usize,
    seed: u64,
    out: *mut *mut c_char,
) -> CssrStatus {
    guard(|| {
        let m = handle(machine)?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = to_c_string(m.simulate(n, seed).render(m.alphabet()))?;
        Ok(())
    })
}

/// Total variation distance between the two machines' distributions over
/// words of length `len`.
///
/// # Safety
/// `a` and `b` must be null or live handles; `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn cssr_machine_tv_distance(
    a: *const CssrMachine,
    b: *const CssrMachine,
    len: usize,
    out: *mut f64,
) -> CssrStatus {
    guard(|| {
        let (a, b) = (handle(a)?, handle(b)?);
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        if a.alphabet() != b.alphabet() {
            return Err((CssrStatus::InvalidInput, "machines use different alphabets".into()));
        }
        let da = a.word_distribution(len).map_err(lib_err)?;
        let db = b.word_distribution(len).map_err(lib_err)?;
        *out = da.tv_distance(&db).map_err(lib_err)?;
        Ok(())
    })
}

/// Next-symbol distribution after `history` (text, one character per
/// symbol), written to `probs[0..k]`. Returns `UNSYNCHRONIZED` with the
/// stationary marginal in `probs` when the history maps to no state.
///
/// # Safety
/// `machine` must be null or a live handle; `history` null or a
/// nul-terminated string; `probs` null or writable for `probs_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn cssr_machine_predict(
    machine: *const CssrMachine,
    history: *const c_char,
    probs: *mut f64,
    probs_len: usize,
) -> CssrStatus {
    guard(|| {
        let m = handle(machine)?;
        let history = read_str(history, "history")?;
        if probs.is_null() {
            return Err(null("probs"));
        }
        let k = m.alphabet().len();
        if probs_len < k {
            return Err((CssrStatus::BufferTooSmall, format!("need room for {k} probabilities")));
        }
        let out = std::slice::from_raw_parts_mut(probs, k);
        let word = m.alphabet().parse_word(history).map_err(lib_err)?;
        match m.predict_next(&word) {
            Ok(d) => {
                out.copy_from_slice(d.probs());
                Ok(())
            }
            Err(CssrError::Unsynchronized { fallback }) => {
                out.copy_from_slice(&fallback);
                Err((CssrStatus::Unsynchronized, "history does not synchronize to a state".into()))
            }
            Err(e) => Err(lib_err(e)),
        }
    })
}

/// Releases a string returned by this library; null is ignored.
///
/// # Safety
/// `s` must be null or a string from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cssr_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
