//! C interface to the loudcomp engine.
//!
//! Every object is an opaque handle created by a `*_new`, `*_build` or
//! `*_import` function and released with the matching `*_free`. Fallible
//! functions return an [`LcStatus`]; on failure a description is available
//! from [`lc_last_error`] on the same thread until the next failing call.
//! Output pointers are written only on success.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::slice;
use std::sync::Arc;

use loudcomp::spectrum::Window;
use loudcomp::stoi::stoi;
use loudcomp::{
    process_sliding, Audiogram, Direction, Error, GainTable, ProcessorConfig, StreamProcessor,
    TableSpec, Waveform,
};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Integrity = 4,
    SampleRateMismatch = 5,
    TooShort = 6,
    LengthMismatch = 7,
    NotBracketed = 8,
    /// The caller's buffer is too small; the required size was reported.
    BufferTooSmall = 9,
    /// The handle can no longer be used for this call.
    InvalidState = 10,
    Internal = 11,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LcWindow {
    Hann = 0,
    Rect = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LcProcessorConfig {
    /// Power of two, at least 4; must match the table.
    pub window_length: u32,
    pub window: LcWindow,
    /// dB SPL of a full-scale sine.
    pub full_scale_spl: f64,
    /// Samples between exact spectrum recomputations, at least 1.
    pub resync_interval: u32,
}

pub struct LcAudiogram(Audiogram);

pub struct LcGainTable(Arc<GainTable>);

pub struct LcProcessor {
    inner: Option<StreamProcessor<Arc<GainTable>>>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

struct Failure(LcStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Validation { .. } | Error::Parse(_) | Error::Empty => LcStatus::InvalidArgument,
            Error::Io { .. } | Error::Wav { .. } | Error::PartialCorpus { .. } => LcStatus::Io,
            Error::Integrity(_) => LcStatus::Integrity,
            Error::SampleRateMismatch { .. } => LcStatus::SampleRateMismatch,
            Error::TooShort { .. } => LcStatus::TooShort,
            Error::LengthMismatch(..) => LcStatus::LengthMismatch,
            Error::NotBracketed(_) => LcStatus::NotBracketed,
        };
        Failure(status, e.to_string())
    }
}

fn fail(status: LcStatus, msg: impl Into<String>) -> Failure {
    Failure(status, msg.into())
}

/// Run `f`, converting errors and panics into a status.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> LcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => LcStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            LcStatus::Internal
        }
    }
}

fn non_null<T>(p: *const T, name: &str) -> Result<(), Failure> {
    if p.is_null() {
        Err(fail(LcStatus::NullPointer, format!("{name} is null")))
    } else {
        Ok(())
    }
}

/// Slice from a pointer that may be null only when `len` is zero.
unsafe fn input<'a, T>(p: *const T, len: usize, name: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    non_null(p, name)?;
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn output<'a, T>(p: *mut T, len: usize, name: &str) -> Result<&'a mut [T], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    non_null(p, name)?;
    Ok(slice::from_raw_parts_mut(p, len))
}

fn config(c: &LcProcessorConfig) -> ProcessorConfig {
    ProcessorConfig {
        window_length: c.window_length as usize,
        window: match c.window {
            LcWindow::Hann => Window::Hann,
            LcWindow::Rect => Window::Rect,
        },
        full_scale_spl: c.full_scale_spl,
        resync_interval: c.resync_interval as usize,
    }
}

/// Message of the last failure on this thread; empty if none. Valid until
/// the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn lc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn lc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[no_mangle]
pub extern "C" fn lc_processor_config_default() -> LcProcessorConfig {
    let d = ProcessorConfig::default();
    LcProcessorConfig {
        window_length: d.window_length as u32,
        window: LcWindow::Hann,
        full_scale_spl: d.full_scale_spl,
        resync_interval: d.resync_interval as u32,
    }
}

/// Audiogram from `n` strictly increasing frequencies (Hz) and losses (dB HL).
///
/// # Safety
/// `freqs_hz` and `hl_db` must point to `n` readable doubles.
#[no_mangle]
pub unsafe extern "C" fn lc_audiogram_new(
    freqs_hz: *const f64,
    hl_db: *const f64,
    n: usize,
    ohc_fraction: f64,
    out: *mut *mut LcAudiogram,
) -> LcStatus {
    guard(|| {
        non_null(out, "out")?;
        let f = input(freqs_hz, n, "freqs_hz")?.to_vec();
        let h = input(hl_db, n, "hl_db")?.to_vec();
        let a = Audiogram::new(f, h, ohc_fraction)?;
        *out = Box::into_raw(Box::new(LcAudiogram(a)));
        Ok(())
    })
}

/// Audiogram from a JSON document with `frequencies_hz`, `hl_db` and
/// optional `ohc_fraction`.
///
/// # Safety
/// `json` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn lc_audiogram_from_json(
    json: *const c_char,
    out: *mut *mut LcAudiogram,
) -> LcStatus {
    guard(|| {
        non_null(json, "json")?;
        non_null(out, "out")?;
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|_| fail(LcStatus::InvalidArgument, "json is not UTF-8"))?;
        *out = Box::into_raw(Box::new(LcAudiogram(Audiogram::from_json(text)?)));
        Ok(())
    })
}

/// # Safety
/// `a` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn lc_audiogram_free(a: *mut LcAudiogram) {
    if !a.is_null() {
        drop(Box::from_raw(a));
    }
}

/// Build the compensation table, or the inverse one when `inverse` is
/// nonzero, with the default layout at `sample_rate`.
///
/// # Safety
/// `audiogram` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lc_table_build(
    audiogram: *const LcAudiogram,
    inverse: c_int,
    sample_rate: u32,
    out: *mut *mut LcGainTable,
) -> LcStatus {
    guard(|| {
        non_null(audiogram, "audiogram")?;
        non_null(out, "out")?;
        let dir = if inverse != 0 {
            Direction::Inverse
        } else {
            Direction::Compensate
        };
        let t = GainTable::for_audiogram(
            &(*audiogram).0,
            dir,
            TableSpec::with_sample_rate(sample_rate),
        )?;
        *out = Box::into_raw(Box::new(LcGainTable(Arc::new(t))));
        Ok(())
    })
}

/// Interpolated gain in dB at frequency `f_hz` and filter level `level_db`.
///
/// # Safety
/// `table` must be a live handle; `gain_db` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lc_table_lookup(
    table: *const LcGainTable,
    f_hz: f64,
    level_db: f64,
    gain_db: *mut f64,
) -> LcStatus {
    guard(|| {
        non_null(table, "table")?;
        non_null(gain_db, "gain_db")?;
        if !(f_hz.is_finite() && level_db.is_finite()) {
            return Err(fail(
                LcStatus::InvalidArgument,
                "frequency and level must be finite",
            ));
        }
        *gain_db = (*table).0.lookup_gain(f_hz, level_db);
        Ok(())
    })
}

/// Serialise a table. `*len` receives the encoded size; when `buf` is null
/// or `cap` is smaller, nothing is copied and `BufferTooSmall` is returned.
///
/// # Safety
/// `buf` must be null or point to `cap` writable bytes; `len` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn lc_table_export(
    table: *const LcGainTable,
    buf: *mut u8,
    cap: usize,
    len: *mut usize,
) -> LcStatus {
    guard(|| {
        non_null(table, "table")?;
        non_null(len, "len")?;
        let bytes = (*table).0.to_bytes();
        *len = bytes.len();
        if buf.is_null() || cap < bytes.len() {
            return Err(fail(
                LcStatus::BufferTooSmall,
                format!("need {} bytes, have {cap}", bytes.len()),
            ));
        }
        output(buf, bytes.len(), "buf")?.copy_from_slice(&bytes);
        Ok(())
    })
}

/// Decode a table produced by [`lc_table_export`].
///
/// # Safety
/// `bytes` must point to `len` readable bytes; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lc_table_import(
    bytes: *const u8,
    len: usize,
    out: *mut *mut LcGainTable,
) -> LcStatus {
    guard(|| {
        non_null(out, "out")?;
        let t = GainTable::from_bytes(input(bytes, len, "bytes")?)?;
        *out = Box::into_raw(Box::new(LcGainTable(Arc::new(t))));
        Ok(())
    })
}

/// # Safety
/// `table` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn lc_table_sample_rate(table: *const LcGainTable) -> u32 {
    if table.is_null() {
        return 0;
    }
    (*table).0.sample_rate()
}

/// # Safety
/// `t` must be null or a handle from this library, not yet freed. Processors
/// created from the table stay valid.
#[no_mangle]
pub unsafe extern "C" fn lc_table_free(t: *mut LcGainTable) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// Process a whole signal; `output` receives `n` samples.
///
/// # Safety
/// `input` and `output` must point to `n` doubles; `config` may be null for
/// defaults.
#[no_mangle]
pub unsafe extern "C" fn lc_process(
    table: *const LcGainTable,
    config: *const LcProcessorConfig,
    input_samples: *const f64,
    output_samples: *mut f64,
    n: usize,
    sample_rate: u32,
) -> LcStatus {
    guard(|| {
        non_null(table, "table")?;
        let cfg = if config.is_null() {
            ProcessorConfig::default()
        } else {
            self::config(&*config)
        };
        let x = Waveform::new(input(input_samples, n, "input")?.to_vec(), sample_rate);
        let y = process_sliding(&x, &(*table).0, &cfg)?;
        output(output_samples, n, "output")?.copy_from_slice(&y.samples);
        Ok(())
    })
}

/// Streaming processor holding its own reference to `table`.
///
/// # Safety
/// `table` must be a live handle; `config` may be null for defaults.
#[no_mangle]
pub unsafe extern "C" fn lc_processor_new(
    table: *const LcGainTable,
    config: *const LcProcessorConfig,
    out: *mut *mut LcProcessor,
) -> LcStatus {
    guard(|| {
        non_null(table, "table")?;
        non_null(out, "out")?;
        let cfg = if config.is_null() {
            ProcessorConfig::default()
        } else {
            self::config(&*config)
        };
        let p = StreamProcessor::new(Arc::clone(&(*table).0), &cfg)?;
        *out = Box::into_raw(Box::new(LcProcessor { inner: Some(p) }));
        Ok(())
    })
}

/// Samples consumed before the first output.
///
/// # Safety
/// `p` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn lc_processor_latency(p: *const LcProcessor) -> usize {
    match p.as_ref().and_then(|p| p.inner.as_ref()) {
        Some(s) => s.latency(),
        None => 0,
    }
}

/// Feed `n` samples. Up to `n` outputs are written to `out`, which must
/// hold `cap >= n` samples; `*written` receives the count.
///
/// # Safety
/// `input` must point to `n` doubles, `out` to `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn lc_processor_push(
    p: *mut LcProcessor,
    input_samples: *const f64,
    n: usize,
    out: *mut f64,
    cap: usize,
    written: *mut usize,
) -> LcStatus {
    guard(|| {
        non_null(p, "processor")?;
        non_null(written, "written")?;
        let proc = (*p)
            .inner
            .as_mut()
            .ok_or_else(|| fail(LcStatus::InvalidState, "processor already finished"))?;
        if cap < n {
            return Err(fail(LcStatus::BufferTooSmall, format!("cap {cap} < n {n}")));
        }
        let x = input(input_samples, n, "input")?;
        let y = output(out, cap, "out")?;
        let mut k = 0;
        for &v in x {
            if let Some(s) = proc.push(v) {
                y[k] = s;
                k += 1;
            }
        }
        *written = k;
        Ok(())
    })
}

/// Flush the remaining outputs (at most the latency) into `out`. The
/// processor cannot be pushed afterwards.
///
/// # Safety
/// `out` must point to `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn lc_processor_finish(
    p: *mut LcProcessor,
    out: *mut f64,
    cap: usize,
    written: *mut usize,
) -> LcStatus {
    guard(|| {
        non_null(p, "processor")?;
        non_null(written, "written")?;
        let latency = lc_processor_latency(p);
        if (*p).inner.is_none() {
            return Err(fail(LcStatus::InvalidState, "processor already finished"));
        }
        if cap < latency {
            return Err(fail(
                LcStatus::BufferTooSmall,
                format!("cap {cap} < latency {latency}"),
            ));
        }
        let tail = (*p).inner.take().map(|s| s.finish()).unwrap_or_default();
        output(out, tail.len(), "out")?.copy_from_slice(&tail);
        *written = tail.len();
        Ok(())
    })
}

/// # Safety
/// `p` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn lc_processor_free(p: *mut LcProcessor) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// STOI of `degraded` against `clean`, both `n` samples at `sample_rate`.
///
/// # Safety
/// Both arrays must hold `n` doubles; `score` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lc_stoi(
    clean: *const f64,
    degraded: *const f64,
    n: usize,
    sample_rate: u32,
    score: *mut f64,
) -> LcStatus {
    guard(|| {
        non_null(score, "score")?;
        let c = Waveform::new(input(clean, n, "clean")?.to_vec(), sample_rate);
        let d = Waveform::new(input(degraded, n, "degraded")?.to_vec(), sample_rate);
        *score = stoi(&c, &d)?.value;
        Ok(())
    })
}
