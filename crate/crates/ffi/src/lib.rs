//! C ABI over `hglearn`.
//!
//! Corpora and models are opaque heap handles released with their `_free`
//! function. Every fallible call returns an [`HglStatus`]; on failure the
//! message is available from [`hgl_last_error`] on the same thread until
//! the next failing call. Output pointers are written only on success.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use hglearn::corpus::{generate_corpus, read_sentences, resample, reference_counts, write_sentences, Corpus};
use hglearn::evaluation::accuracy;
use hglearn::grammar::{InputPattern, WordOrder, NUM_CONSTRAINTS};
use hglearn::inference::{predict, predict_distribution, Regime};
use hglearn::learners::{
    cd_train, gla_train, maxent_train, perceptron_train, GlaConfig, LearnedModel, MaxEntConfig, PerceptronConfig,
    TrainPrediction,
};
use hglearn::Error;

/// Number of constraints, the length of a weight array.
pub const HGL_NUM_CONSTRAINTS: usize = 12;
/// Number of word orders, the length of a distribution array.
pub const HGL_NUM_ORDERS: usize = 6;

const _: () = assert!(HGL_NUM_CONSTRAINTS == NUM_CONSTRAINTS && HGL_NUM_ORDERS == WordOrder::COUNT);

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HglStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    Io = 4,
    EmptyCorpus = 5,
    Config = 6,
    IncompatibleRegime = 7,
    /// The model carries strata, not weights.
    NoWeights = 8,
    Panic = 99,
}

/// A sequence of (pattern, order) sentences.
pub struct HglCorpus(Corpus);

/// A trained or loaded grammar.
pub struct HglModel(LearnedModel);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: &str) {
    let text = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = text);
}

fn status_of(e: &Error) -> HglStatus {
    match e {
        Error::Parse { .. } => HglStatus::Parse,
        Error::InvalidValue(_) | Error::BadFractions(..) => HglStatus::InvalidArgument,
        Error::EmptyCorpus => HglStatus::EmptyCorpus,
        Error::IncompatibleRegime { .. } => HglStatus::IncompatibleRegime,
        Error::Config(_) => HglStatus::Config,
        Error::Io(_) => HglStatus::Io,
    }
}

struct Failure(HglStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn fail(status: HglStatus, message: impl Into<String>) -> Failure {
    Failure(status, message.into())
}

fn guard(body: impl FnOnce() -> Result<(), Failure>) -> HglStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => HglStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_error(&message);
            status
        }
        Err(_) => {
            set_error("internal panic");
            HglStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(fail(HglStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| fail(HglStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| fail(HglStatus::NullPointer, format!("{what} is null")))
}

fn out_arg<T>(p: *mut T, what: &str) -> Result<*mut T, Failure> {
    if p.is_null() {
        Err(fail(HglStatus::NullPointer, format!("{what} is null")))
    } else {
        Ok(p)
    }
}

fn regime_arg(name: &str, spreading: f64, variance: f64) -> Result<Regime, Failure> {
    Ok(Regime::parse(name, spreading, variance)?)
}

/// Message of the last failure on this thread; empty if none. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn hgl_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Name of word order `index` (0 = SVO .. 5 = OSV), or null when out of
/// range. The string is static.
#[no_mangle]
pub extern "C" fn hgl_order_name(index: u8) -> *const c_char {
    const NAMES: [&CStr; 6] = [c"SVO", c"OVS", c"VSO", c"SOV", c"VOS", c"OSV"];
    NAMES.get(usize::from(index)).map_or(ptr::null(), |n| n.as_ptr())
}

/// Every tabulated sentence once, shuffled by `seed`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn hgl_corpus_reference(seed: u64, out: *mut *mut HglCorpus) -> HglStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = Box::into_raw(Box::new(HglCorpus(generate_corpus(&reference_counts(), seed))));
        Ok(())
    })
}

/// `n` sentences drawn from the tabulated distribution.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn hgl_corpus_resample(n: usize, seed: u64, out: *mut *mut HglCorpus) -> HglStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = Box::into_raw(Box::new(HglCorpus(resample(&reference_counts(), n, seed)?)));
        Ok(())
    })
}

/// Reads a sentence file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` as for [`hgl_corpus_reference`].
#[no_mangle]
pub unsafe extern "C" fn hgl_corpus_read(path: *const c_char, out: *mut *mut HglCorpus) -> HglStatus {
    guard(|| {
        let path = PathBuf::from(str_arg(path, "path")?);
        let out = out_arg(out, "out")?;
        let file = std::fs::File::open(&path).map_err(Error::from)?;
        *out = Box::into_raw(Box::new(HglCorpus(read_sentences(std::io::BufReader::new(file))?)));
        Ok(())
    })
}

/// Writes a sentence file.
///
/// # Safety
/// `corpus` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn hgl_corpus_write(corpus: *const HglCorpus, path: *const c_char) -> HglStatus {
    guard(|| {
        let corpus = ref_arg(corpus, "corpus")?;
        let path = PathBuf::from(str_arg(path, "path")?);
        let file = std::fs::File::create(&path).map_err(Error::from)?;
        let mut writer = std::io::BufWriter::new(file);
        write_sentences(&mut writer, &corpus.0)?;
        writer.flush().map_err(Error::from)?;
        Ok(())
    })
}

/// # Safety
/// `corpus` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hgl_corpus_len(corpus: *const HglCorpus, out: *mut usize) -> HglStatus {
    guard(|| {
        let corpus = ref_arg(corpus, "corpus")?;
        *out_arg(out, "out")? = corpus.0.len();
        Ok(())
    })
}

/// # Safety
/// `corpus` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hgl_corpus_free(corpus: *mut HglCorpus) {
    if !corpus.is_null() {
        drop(Box::from_raw(corpus));
    }
}

unsafe fn train_into(
    corpus: *const HglCorpus,
    out: *mut *mut HglModel,
    train: impl FnOnce(&Corpus) -> Result<LearnedModel, Failure>,
) -> HglStatus {
    guard(|| {
        let corpus = ref_arg(corpus, "corpus")?;
        let out = out_arg(out, "out")?;
        *out = Box::into_raw(Box::new(HglModel(train(&corpus.0)?)));
        Ok(())
    })
}

/// Perceptron with default settings apart from `epochs` and `seed`.
///
/// # Safety
/// `corpus` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hgl_train_perceptron(
    corpus: *const HglCorpus,
    epochs: usize,
    seed: u64,
    out: *mut *mut HglModel,
) -> HglStatus {
    train_into(corpus, out, |c| {
        Ok(perceptron_train(c, &PerceptronConfig { epochs, init_seed: seed, ..Default::default() })?)
    })
}

/// GLA with default plasticity and spreading. Nonzero `sot_training`
/// samples noisy rankings during training; zero uses the plain ranking.
///
/// # Safety
/// `corpus` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hgl_train_gla(
    corpus: *const HglCorpus,
    epochs: usize,
    seed: u64,
    sot_training: c_int,
    out: *mut *mut HglModel,
) -> HglStatus {
    let train_prediction = if sot_training != 0 { TrainPrediction::Sot } else { TrainPrediction::Ml };
    train_into(corpus, out, |c| {
        Ok(gla_train(c, &GlaConfig { epochs, init_seed: seed, train_prediction, ..Default::default() })?)
    })
}

/// Batch log-linear fit. `converged` (may be null) receives 1 or 0.
///
/// # Safety
/// `corpus` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hgl_train_maxent(
    corpus: *const HglCorpus,
    converged: *mut c_int,
    out: *mut *mut HglModel,
) -> HglStatus {
    train_into(corpus, out, |c| {
        let fit = maxent_train(c, &MaxEntConfig::default())?;
        if !converged.is_null() {
            *converged = c_int::from(fit.converged);
        }
        Ok(fit.model)
    })
}

/// Constraint Demotion. `converged` (may be null) receives 1 or 0; a
/// non-converging run still yields its last hierarchy.
///
/// # Safety
/// `corpus` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hgl_train_cd(
    corpus: *const HglCorpus,
    max_epochs: usize,
    converged: *mut c_int,
    out: *mut *mut HglModel,
) -> HglStatus {
    train_into(corpus, out, |c| {
        let fit = cd_train(c, max_epochs)?;
        if !converged.is_null() {
            *converged = c_int::from(fit.report.converged);
        }
        Ok(fit.model)
    })
}

/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hgl_model_load(path: *const c_char, out: *mut *mut HglModel) -> HglStatus {
    guard(|| {
        let path = PathBuf::from(str_arg(path, "path")?);
        let out = out_arg(out, "out")?;
        let file = std::fs::File::open(&path).map_err(Error::from)?;
        *out = Box::into_raw(Box::new(HglModel(LearnedModel::read_from(std::io::BufReader::new(file))?)));
        Ok(())
    })
}

/// # Safety
/// `model` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn hgl_model_save(model: *const HglModel, path: *const c_char) -> HglStatus {
    guard(|| {
        let model = ref_arg(model, "model")?;
        let path = PathBuf::from(str_arg(path, "path")?);
        std::fs::write(&path, model.0.to_text()).map_err(Error::from)?;
        Ok(())
    })
}

/// Copies the 12 weights, S-L .. F-R, into `out`.
///
/// # Safety
/// `model` must be a live handle; `out` must hold `HGL_NUM_CONSTRAINTS` doubles.
#[no_mangle]
pub unsafe extern "C" fn hgl_model_weights(model: *const HglModel, out: *mut f64) -> HglStatus {
    guard(|| {
        let model = ref_arg(model, "model")?;
        let out = out_arg(out, "out")?;
        let w = model.0.weights().ok_or_else(|| fail(HglStatus::NoWeights, "model has strata, not weights"))?;
        ptr::copy_nonoverlapping(w.0.as_ptr(), out, NUM_CONSTRAINTS);
        Ok(())
    })
}

/// # Safety
/// `model` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hgl_model_free(model: *mut HglModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Predicts one order for `pattern` (e.g. `"t f t"`) under the named
/// regime (`hg-ml`, `ot-ml`, `sot-sample`, `noisyhg-sample`,
/// `maxent-argmax`, `maxent-distribution`). `spreading` and `variance`
/// parameterise the noisy regimes. Writes the order index to `out`.
///
/// # Safety
/// `model` must be a live handle, the strings NUL-terminated, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hgl_predict(
    model: *const HglModel,
    pattern: *const c_char,
    regime: *const c_char,
    spreading: f64,
    variance: f64,
    seed: u64,
    out: *mut u8,
) -> HglStatus {
    guard(|| {
        let model = ref_arg(model, "model")?;
        let pattern: InputPattern = str_arg(pattern, "pattern")?.parse()?;
        let regime = regime_arg(str_arg(regime, "regime")?, spreading, variance)?;
        let out = out_arg(out, "out")?;
        *out = predict(&model.0, &pattern, &regime, seed)?.index() as u8;
        Ok(())
    })
}

/// Writes the predicted distribution over the six orders to `out`, exact
/// for `maxent-distribution` and from `samples` draws otherwise.
///
/// # Safety
/// As for [`hgl_predict`]; `out` must hold `HGL_NUM_ORDERS` doubles.
#[no_mangle]
pub unsafe extern "C" fn hgl_predict_distribution(
    model: *const HglModel,
    pattern: *const c_char,
    regime: *const c_char,
    spreading: f64,
    variance: f64,
    samples: usize,
    seed: u64,
    out: *mut f64,
) -> HglStatus {
    guard(|| {
        let model = ref_arg(model, "model")?;
        let pattern: InputPattern = str_arg(pattern, "pattern")?.parse()?;
        let regime = regime_arg(str_arg(regime, "regime")?, spreading, variance)?;
        let out = out_arg(out, "out")?;
        let d = predict_distribution(&model.0, &pattern, &regime, samples, seed)?;
        ptr::copy_nonoverlapping(d.probabilities.as_ptr(), out, WordOrder::COUNT);
        Ok(())
    })
}

/// Fraction of `corpus` predicted correctly.
///
/// # Safety
/// Handles must be live, `regime` NUL-terminated, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hgl_accuracy(
    model: *const HglModel,
    corpus: *const HglCorpus,
    regime: *const c_char,
    spreading: f64,
    variance: f64,
    seed: u64,
    out: *mut f64,
) -> HglStatus {
    guard(|| {
        let model = ref_arg(model, "model")?;
        let corpus = ref_arg(corpus, "corpus")?;
        let regime = regime_arg(str_arg(regime, "regime")?, spreading, variance)?;
        let out = out_arg(out, "out")?;
        *out = accuracy(&model.0, &corpus.0, &regime, seed)?.fraction();
        Ok(())
    })
}
