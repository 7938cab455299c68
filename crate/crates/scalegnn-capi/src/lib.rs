//! C ABI for the scalegnn library.
//!
//! Handles are opaque pointers owned by this library; every constructor
//! has a matching `_free`. Functions return [`SgStatus`]; on failure the
//! thread-local message from [`sg_last_error`] describes what happened.
//! No panic crosses the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use scalegnn::graph::{batch, generate, stats, GeneratorKind, Graph};
use scalegnn::oracles;
use scalegnn::tasks::{
    generate_dataset, read_dataset, write_dataset, DatasetSpec, TaskKind, TaskSample,
};
use scalegnn::train::{Checkpoint, Model};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SgStatus {
    SgOk = 0,
    SgErrInvalidArgument = 1,
    SgErrData = 2,
    SgErrCompute = 3,
    SgErrNullPointer = 4,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(message: impl Into<String>) {
    let text = CString::new(message.into().replace('\0', "?"))
        .unwrap_or_else(|_| CString::new("error").unwrap());
    LAST_ERROR.with(|slot| *slot.borrow_mut() = text);
}

fn guard<F>(f: F) -> SgStatus
where
    F: FnOnce() -> SgStatus,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic");
            SgStatus::SgErrCompute
        }
    }
}

/// Opaque attributed graph.
pub struct SgGraph {
    inner: Graph,
}

/// Opaque task dataset (uniform task kind).
pub struct SgDataset {
    samples: Vec<TaskSample>,
}

/// Opaque trained model (spec plus parameters).
pub struct SgModel {
    model: Model,
    params: scalegnn::nn::ParamSet,
}

/// Library version as a static C string.
#[no_mangle]
pub extern "C" fn sg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Message for the most recent failure on this thread. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn sg_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

unsafe fn parse_str<'a>(ptr: *const c_char, what: &str) -> Result<&'a str, SgStatus> {
    if ptr.is_null() {
        set_error(format!("{what} is null"));
        return Err(SgStatus::SgErrNullPointer);
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        set_error(format!("{what} is not valid utf-8"));
        SgStatus::SgErrInvalidArgument
    })
}

fn parse_generator(name: &str) -> Result<GeneratorKind, SgStatus> {
    match name {
        "er" => Ok(GeneratorKind::default_er()),
        "knn" => Ok(GeneratorKind::default_knn()),
        "planar" => Ok(GeneratorKind::default_planar()),
        "lobster" => Ok(GeneratorKind::default_lobster()),
        other => {
            set_error(format!("unknown generator `{other}`"));
            Err(SgStatus::SgErrInvalidArgument)
        }
    }
}

fn parse_task(name: &str) -> Result<TaskKind, SgStatus> {
    match name {
        "shortest-path" => Ok(TaskKind::ShortestPath),
        "component-counting" => Ok(TaskKind::ComponentCounting),
        "tsp" => Ok(TaskKind::Tsp),
        "physics" => Ok(TaskKind::Physics),
        "navigation" => Ok(TaskKind::Navigation),
        other => {
            set_error(format!("unknown task `{other}`"));
            Err(SgStatus::SgErrInvalidArgument)
        }
    }
}

macro_rules! read_handle {
    ($ptr:expr, $what:literal) => {
        match $ptr.as_ref() {
            Some(h) => h,
            None => {
                set_error(concat!($what, " is null"));
                return SgStatus::SgErrNullPointer;
            }
        }
    };
}

// ---- graphs ----------------------------------------------------------

/// Generate a random graph: kind is er | knn | planar | lobster with the
/// library's default parameters for that family.
///
/// # Safety
/// `kind` must be a valid C string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sg_graph_generate(
    kind: *const c_char,
    n: usize,
    seed: u64,
    out: *mut *mut SgGraph,
) -> SgStatus {
    guard(|| {
        if out.is_null() {
            set_error("out is null");
            return SgStatus::SgErrNullPointer;
        }
        let kind = match parse_str(kind, "kind") {
            Ok(k) => k,
            Err(s) => return s,
        };
        let generator = match parse_generator(kind) {
            Ok(g) => g,
            Err(s) => return s,
        };
        match generate(generator, n, seed) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(SgGraph { inner }));
                SgStatus::SgOk
            }
            Err(e) => {
                set_error(e.to_string());
                SgStatus::SgErrInvalidArgument
            }
        }
    })
}

/// # Safety
/// `graph` must come from this library and not be freed yet.
#[no_mangle]
pub unsafe extern "C" fn sg_graph_free(graph: *mut SgGraph) {
    if !graph.is_null() {
        drop(Box::from_raw(graph));
    }
}

/// # Safety
/// Valid `graph` and `out` pointers.
#[no_mangle]
pub unsafe extern "C" fn sg_graph_num_nodes(graph: *const SgGraph, out: *mut usize) -> SgStatus {
    guard(|| {
        let g = read_handle!(graph, "graph");
        if out.is_null() {
            set_error("out is null");
            return SgStatus::SgErrNullPointer;
        }
        *out = g.inner.num_nodes;
        SgStatus::SgOk
    })
}

/// # Safety
/// Valid `graph` and `out` pointers.
#[no_mangle]
pub unsafe extern "C" fn sg_graph_num_edges(graph: *const SgGraph, out: *mut usize) -> SgStatus {
    guard(|| {
        let g = read_handle!(graph, "graph");
        if out.is_null() {
            set_error("out is null");
            return SgStatus::SgErrNullPointer;
        }
        *out = g.inner.num_edges();
        SgStatus::SgOk
    })
}

/// Longest shortest-path hop count over reachable pairs.
///
/// # Safety
/// Valid `graph` and `out` pointers.
#[no_mangle]
pub unsafe extern "C" fn sg_graph_diameter(graph: *const SgGraph, out: *mut usize) -> SgStatus {
    guard(|| {
        let g = read_handle!(graph, "graph");
        if out.is_null() {
            set_error("out is null");
            return SgStatus::SgErrNullPointer;
        }
        *out = stats(&g.inner).diameter;
        SgStatus::SgOk
    })
}

// ---- oracles ---------------------------------------------------------

/// Exact shortest-path length over directed edges (weight 1 when the
/// graph is unweighted). Fails if the target is unreachable.
///
/// # Safety
/// Valid `graph` and `out` pointers.
#[no_mangle]
pub unsafe extern "C" fn sg_shortest_path_length(
    graph: *const SgGraph,
    source: usize,
    target: usize,
    out: *mut f64,
) -> SgStatus {
    guard(|| {
        let g = read_handle!(graph, "graph");
        if out.is_null() {
            set_error("out is null");
            return SgStatus::SgErrNullPointer;
        }
        if source >= g.inner.num_nodes || target >= g.inner.num_nodes {
            set_error("source or target out of range");
            return SgStatus::SgErrInvalidArgument;
        }
        match oracles::dijkstra(&g.inner, source) {
            Ok(d) if d.reachable[target] => {
                *out = d.dist[target];
                SgStatus::SgOk
            }
            Ok(_) => {
                set_error("target unreachable from source");
                SgStatus::SgErrCompute
            }
            Err(e) => {
                set_error(e.to_string());
                SgStatus::SgErrInvalidArgument
            }
        }
    })
}

/// # Safety
/// Valid `graph` and `out` pointers.
#[no_mangle]
pub unsafe extern "C" fn sg_component_count(graph: *const SgGraph, out: *mut usize) -> SgStatus {
    guard(|| {
        let g = read_handle!(graph, "graph");
        if out.is_null() {
            set_error("out is null");
            return SgStatus::SgErrNullPointer;
        }
        *out = oracles::count_components(&g.inner);
        SgStatus::SgOk
    })
}

/// Exact optimal closed-tour length for up to 16 points given as
/// interleaved x,y pairs.
///
/// # Safety
/// `xy` must point to `2*n` readable doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sg_tsp_exact(xy: *const f64, n: usize, out: *mut f64) -> SgStatus {
    guard(|| {
        if xy.is_null() || out.is_null() {
            set_error("xy or out is null");
            return SgStatus::SgErrNullPointer;
        }
        let flat = std::slice::from_raw_parts(xy, 2 * n);
        let pts: Vec<(f64, f64)> = flat.chunks_exact(2).map(|c| (c[0], c[1])).collect();
        match oracles::tsp_exact(&pts) {
            Ok(len) => {
                *out = len;
                SgStatus::SgOk
            }
            Err(e) => {
                set_error(e.to_string());
                SgStatus::SgErrInvalidArgument
            }
        }
    })
}

/// Nearest-neighbour plus 2-opt tour; `out_approximate` is set to 1 to
/// flag that the length is an upper bound.
///
/// # Safety
/// `xy` must point to `2*n` readable doubles; outputs must be valid.
#[no_mangle]
pub unsafe extern "C" fn sg_tsp_heuristic(
    xy: *const f64,
    n: usize,
    out_length: *mut f64,
    out_approximate: *mut c_int,
) -> SgStatus {
    guard(|| {
        if xy.is_null() || out_length.is_null() || out_approximate.is_null() {
            set_error("xy or outputs are null");
            return SgStatus::SgErrNullPointer;
        }
        let flat = std::slice::from_raw_parts(xy, 2 * n);
        let pts: Vec<(f64, f64)> = flat.chunks_exact(2).map(|c| (c[0], c[1])).collect();
        match oracles::tsp_heuristic(&pts) {
            Ok((len, approx)) => {
                *out_length = len;
                *out_approximate = approx as c_int;
                SgStatus::SgOk
            }
            Err(e) => {
                set_error(e.to_string());
                SgStatus::SgErrInvalidArgument
            }
        }
    })
}

// ---- datasets --------------------------------------------------------

/// Generate a dataset. Tasks: shortest-path | component-counting | tsp |
/// physics | navigation. Pass `weighted = 0` for unit edge weights.
///
/// # Safety
/// `task` and `generator` must be valid C strings; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sg_dataset_generate(
    task: *const c_char,
    generator: *const c_char,
    n_min: usize,
    n_max: usize,
    count: usize,
    seed: u64,
    weighted: c_int,
    weight_min: f64,
    weight_max: f64,
    out: *mut *mut SgDataset,
) -> SgStatus {
    guard(|| {
        if out.is_null() {
            set_error("out is null");
            return SgStatus::SgErrNullPointer;
        }
        let task = match parse_str(task, "task").and_then(|t| parse_task(t)) {
            Ok(t) => t,
            Err(s) => return s,
        };
        let generator = match parse_str(generator, "generator").and_then(parse_generator) {
            Ok(g) => g,
            Err(s) => return s,
        };
        let spec = DatasetSpec {
            task,
            generator,
            n_min,
            n_max,
            weighted: weighted != 0,
            weight_min,
            weight_max,
            count,
            master_seed: seed,
        };
        match generate_dataset(&spec) {
            Ok(samples) => {
                *out = Box::into_raw(Box::new(SgDataset { samples }));
                SgStatus::SgOk
            }
            Err(e) => {
                set_error(e.to_string());
                SgStatus::SgErrData
            }
        }
    })
}

/// # Safety
/// Valid `dataset` and `out` pointers.
#[no_mangle]
pub unsafe extern "C" fn sg_dataset_len(dataset: *const SgDataset, out: *mut usize) -> SgStatus {
    guard(|| {
        let d = read_handle!(dataset, "dataset");
        if out.is_null() {
            set_error("out is null");
            return SgStatus::SgErrNullPointer;
        }
        *out = d.samples.len();
        SgStatus::SgOk
    })
}

/// Scalar target of sample `index` (NaN for per-node targets).
///
/// # Safety
/// Valid `dataset` and `out` pointers.
#[no_mangle]
pub unsafe extern "C" fn sg_dataset_target(
    dataset: *const SgDataset,
    index: usize,
    out: *mut f64,
) -> SgStatus {
    guard(|| {
        let d = read_handle!(dataset, "dataset");
        if out.is_null() {
            set_error("out is null");
            return SgStatus::SgErrNullPointer;
        }
        match d.samples.get(index) {
            Some(s) => {
                *out = s.target.scalar().unwrap_or(f64::NAN);
                SgStatus::SgOk
            }
            None => {
                set_error(format!("index {index} out of range"));
                SgStatus::SgErrInvalidArgument
            }
        }
    })
}

/// Write newline-delimited JSON records.
///
/// # Safety
/// Valid `dataset` handle; `path` a valid C string.
#[no_mangle]
pub unsafe extern "C" fn sg_dataset_write(
    dataset: *const SgDataset,
    path: *const c_char,
) -> SgStatus {
    guard(|| {
        let d = read_handle!(dataset, "dataset");
        let path = match parse_str(path, "path") {
            Ok(p) => p,
            Err(s) => return s,
        };
        match write_dataset(&d.samples, std::path::Path::new(path)) {
            Ok(()) => SgStatus::SgOk,
            Err(e) => {
                set_error(e.to_string());
                SgStatus::SgErrData
            }
        }
    })
}

/// # Safety
/// `path` a valid C string; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sg_dataset_read(
    path: *const c_char,
    out: *mut *mut SgDataset,
) -> SgStatus {
    guard(|| {
        if out.is_null() {
            set_error("out is null");
            return SgStatus::SgErrNullPointer;
        }
        let path = match parse_str(path, "path") {
            Ok(p) => p,
            Err(s) => return s,
        };
        match read_dataset(std::path::Path::new(path)) {
            Ok(samples) => {
                *out = Box::into_raw(Box::new(SgDataset { samples }));
                SgStatus::SgOk
            }
            Err(e) => {
                set_error(e.to_string());
                SgStatus::SgErrData
            }
        }
    })
}

/// # Safety
/// `dataset` must come from this library and not be freed yet.
#[no_mangle]
pub unsafe extern "C" fn sg_dataset_free(dataset: *mut SgDataset) {
    if !dataset.is_null() {
        drop(Box::from_raw(dataset));
    }
}

// ---- models ----------------------------------------------------------

/// Load a checkpoint JSON written by training.
///
/// # Safety
/// `path` a valid C string; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sg_model_load(path: *const c_char, out: *mut *mut SgModel) -> SgStatus {
    guard(|| {
        if out.is_null() {
            set_error("out is null");
            return SgStatus::SgErrNullPointer;
        }
        let path = match parse_str(path, "path") {
            Ok(p) => p,
            Err(s) => return s,
        };
        let text = match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) => {
                set_error(format!("read {path}: {e}"));
                return SgStatus::SgErrData;
            }
        };
        match Checkpoint::from_json(&text) {
            Ok(ck) => {
                *out = Box::into_raw(Box::new(SgModel {
                    model: Model::new(ck.model),
                    params: ck.params,
                }));
                SgStatus::SgOk
            }
            Err(e) => {
                set_error(e.to_string());
                SgStatus::SgErrData
            }
        }
    })
}

/// Run streaming inference on a dataset sample and return the model's
/// scalar prediction.
///
/// # Safety
/// Valid handles and `out` pointer.
#[no_mangle]
pub unsafe extern "C" fn sg_model_predict_sample(
    model: *const SgModel,
    dataset: *const SgDataset,
    index: usize,
    out: *mut f64,
) -> SgStatus {
    guard(|| {
        let m = read_handle!(model, "model");
        let d = read_handle!(dataset, "dataset");
        if out.is_null() {
            set_error("out is null");
            return SgStatus::SgErrNullPointer;
        }
        let Some(sample) = d.samples.get(index) else {
            set_error(format!("index {index} out of range"));
            return SgStatus::SgErrInvalidArgument;
        };
        if sample.task != m.model.spec.task {
            set_error("sample task does not match the model");
            return SgStatus::SgErrInvalidArgument;
        }
        let b = match batch(std::slice::from_ref(&sample.graph)) {
            Ok(b) => b,
            Err(e) => {
                set_error(e.to_string());
                return SgStatus::SgErrData;
            }
        };
        match m.model.predict(&m.params, &b) {
            Ok((pred, _)) => {
                *out = pred.data()[0];
                SgStatus::SgOk
            }
            Err(e) => {
                set_error(e.to_string());
                SgStatus::SgErrCompute
            }
        }
    })
}

/// # Safety
/// `model` must come from this library and not be freed yet.
#[no_mangle]
pub unsafe extern "C" fn sg_model_free(model: *mut SgModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}
