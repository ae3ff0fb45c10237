//! C ABI over `beacon-core`.
//!
//! States and stores cross the boundary as opaque handles. Every call returns
//! a [`BeaconStatus`]; on failure a readable message is kept per thread and
//! can be fetched with [`beacon_last_error`]. Byte outputs come back as a
//! [`BeaconBuffer`] that the caller releases with [`beacon_buffer_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use beacon_core::committees::{check_committee_bounds, BoundsVerdict};
use beacon_core::fork_choice::Store;
use beacon_core::preset::Preset;
use beacon_core::ssz::SszType;
use beacon_core::transition::{genesis_with_validators, process_slots, state_transition};
use beacon_core::types::{BeaconBlock, BeaconState};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BeaconStatus {
    Ok = 0,
    /// A required pointer was null.
    NullArgument = 1,
    /// An argument was out of range, such as an empty genesis registry.
    InvalidArgument = 2,
    /// Input bytes are not a valid SSZ encoding of the expected type.
    MalformedEncoding = 3,
    /// The state transition rejected the block or slot advance.
    TransitionRejected = 4,
    /// The store refused the block.
    BlockRejected = 5,
    /// A bug inside the library; the message has details.
    Internal = 6,
}

/// Built-in parameter sets.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BeaconPresetKind {
    Mainnet = 0,
    Minimal = 1,
}

impl BeaconPresetKind {
    fn preset(self) -> Preset {
        match self {
            BeaconPresetKind::Mainnet => Preset::default(),
            BeaconPresetKind::Minimal => Preset::minimal(),
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BeaconBoundsKind {
    Safe = 0,
    ExistsViolation = 1,
    AllViolate = 2,
}

/// Committee-size verdict. The witness fields are zero when `kind` is SAFE.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BeaconBounds {
    pub kind: BeaconBoundsKind,
    pub slot: u64,
    pub index: u64,
    pub size: u64,
}

/// Rust-owned bytes. Release with `beacon_buffer_free`.
#[repr(C)]
#[derive(Debug)]
pub struct BeaconBuffer {
    pub data: *mut u8,
    pub len: usize,
}

impl Default for BeaconBuffer {
    fn default() -> Self {
        BeaconBuffer { data: ptr::null_mut(), len: 0 }
    }
}

impl BeaconBuffer {
    fn from_vec(bytes: Vec<u8>) -> BeaconBuffer {
        let boxed = bytes.into_boxed_slice();
        let len = boxed.len();
        BeaconBuffer { data: Box::into_raw(boxed) as *mut u8, len }
    }
}

/// A beacon state together with the preset it was built under.
pub struct BeaconStateHandle {
    state: BeaconState,
    preset: Preset,
}

/// A block tree rooted at a genesis state.
pub struct BeaconStoreHandle {
    store: Store,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(BeaconStatus, String);

type Outcome = Result<(), Failure>;

/// Runs `body`, turning errors and panics into a status plus message.
fn guard(body: impl FnOnce() -> Outcome) -> BeaconStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => BeaconStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(panic) => {
            let detail = panic
                .downcast_ref::<String>()
                .map(String::as_str)
                .or_else(|| panic.downcast_ref::<&str>().copied())
                .unwrap_or("unknown panic");
            set_error(format!("Internal: {detail}"));
            BeaconStatus::Internal
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(BeaconStatus::NullArgument, format!("NullArgument: {what} is null"))
}

unsafe fn input<'a>(data: *const u8, len: usize) -> Result<&'a [u8], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if data.is_null() {
        return Err(null("data"));
    }
    Ok(slice::from_raw_parts(data, len))
}

unsafe fn handle<'a, T>(h: *const T, what: &str) -> Result<&'a T, Failure> {
    h.as_ref().ok_or_else(|| null(what))
}

unsafe fn write<T>(out: *mut T, value: T) -> Outcome {
    if out.is_null() {
        return Err(null("out"));
    }
    out.write(value);
    Ok(())
}

fn decode_block(bytes: &[u8], preset: &Preset) -> Result<BeaconBlock, Failure> {
    BeaconBlock::from_ssz_bytes(bytes, preset)
        .map_err(|e| Failure(BeaconStatus::MalformedEncoding, format!("MalformedEncoding({}): {e}", e.code())))
}

fn new_state(state: BeaconState, preset: Preset) -> *mut BeaconStateHandle {
    Box::into_raw(Box::new(BeaconStateHandle { state, preset }))
}

/// Message for the most recent failure on this thread, or null if none.
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn beacon_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Releases a buffer returned by this library. Null buffers are ignored.
///
/// # Safety
/// `buffer` must come from this library and must not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn beacon_buffer_free(buffer: BeaconBuffer) {
    if !buffer.data.is_null() {
        drop(Box::from_raw(ptr::slice_from_raw_parts_mut(buffer.data, buffer.len)));
    }
}

/// Classifies committee sizes for `validators` active validators.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn beacon_committee_bounds(
    validators: u64,
    preset: BeaconPresetKind,
    out: *mut BeaconBounds,
) -> BeaconStatus {
    guard(|| {
        let verdict = check_committee_bounds(validators, &preset.preset());
        let (kind, w) = match verdict {
            BoundsVerdict::Safe => (BeaconBoundsKind::Safe, None),
            BoundsVerdict::ExistsViolation(w) => (BeaconBoundsKind::ExistsViolation, Some(w)),
            BoundsVerdict::AllViolate(w) => (BeaconBoundsKind::AllViolate, Some(w)),
        };
        let (slot, index, size) = w.map_or((0, 0, 0), |w| (w.slot, w.index, w.size));
        write(out, BeaconBounds { kind, slot, index, size })
    })
}

/// Builds a slot-0 state with `validators` equal-balance validators.
///
/// # Safety
/// `out` must be valid for writes. The handle is freed with `beacon_state_free`.
#[no_mangle]
pub unsafe extern "C" fn beacon_state_genesis(
    validators: u64,
    preset: BeaconPresetKind,
    out: *mut *mut BeaconStateHandle,
) -> BeaconStatus {
    guard(|| {
        let preset = preset.preset();
        let state = genesis_with_validators(validators, &preset)
            .map_err(|e| Failure(BeaconStatus::InvalidArgument, format!("GenesisError: {e}")))?;
        write(out, new_state(state, preset))
    })
}

/// Decodes an SSZ-encoded state.
///
/// # Safety
/// `data` must point to `len` readable bytes and `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn beacon_state_decode(
    data: *const u8,
    len: usize,
    preset: BeaconPresetKind,
    out: *mut *mut BeaconStateHandle,
) -> BeaconStatus {
    guard(|| {
        let preset = preset.preset();
        let state = BeaconState::from_ssz_bytes(input(data, len)?, &preset)
            .map_err(|e| Failure(BeaconStatus::MalformedEncoding, format!("MalformedEncoding({}): {e}", e.code())))?;
        write(out, new_state(state, preset))
    })
}

/// Serializes a state to SSZ.
///
/// # Safety
/// `state` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn beacon_state_encode(state: *const BeaconStateHandle, out: *mut BeaconBuffer) -> BeaconStatus {
    guard(|| {
        let h = handle(state, "state")?;
        write(out, BeaconBuffer::from_vec(h.state.to_ssz_bytes(&h.preset)))
    })
}

/// Writes the 32-byte hash tree root of a state into `out`.
///
/// # Safety
/// `state` must be a live handle and `out` must have room for 32 bytes.
#[no_mangle]
pub unsafe extern "C" fn beacon_state_root(state: *const BeaconStateHandle, out: *mut u8) -> BeaconStatus {
    guard(|| {
        let h = handle(state, "state")?;
        write(out as *mut [u8; 32], h.state.tree_root(&h.preset).0)
    })
}

/// Slot of a state, or `UINT64_MAX` for a null handle.
///
/// # Safety
/// `state` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn beacon_state_slot(state: *const BeaconStateHandle) -> u64 {
    state.as_ref().map_or(u64::MAX, |h| h.state.slot)
}

/// Applies an SSZ-encoded block to `state`, producing a new handle. The input
/// state is left untouched whatever the outcome.
///
/// # Safety
/// `state` must be a live handle, `block` must point to `len` readable bytes
/// and `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn beacon_state_transition(
    state: *const BeaconStateHandle,
    block: *const u8,
    len: usize,
    validate_root: bool,
    out: *mut *mut BeaconStateHandle,
) -> BeaconStatus {
    guard(|| {
        let h = handle(state, "state")?;
        let block = decode_block(input(block, len)?, &h.preset)?;
        let post = state_transition(&h.state, &block, validate_root, &h.preset)
            .map_err(|e| Failure(BeaconStatus::TransitionRejected, format!("{}: {e}", e.code())))?;
        write(out, new_state(post, h.preset))
    })
}

/// Advances through empty slots up to `slot`, producing a new handle.
///
/// # Safety
/// `state` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn beacon_process_slots(
    state: *const BeaconStateHandle,
    slot: u64,
    out: *mut *mut BeaconStateHandle,
) -> BeaconStatus {
    guard(|| {
        let h = handle(state, "state")?;
        let post = process_slots(&h.state, slot, &h.preset)
            .map_err(|e| Failure(BeaconStatus::TransitionRejected, format!("{}: {e}", e.code())))?;
        write(out, new_state(post, h.preset))
    })
}

/// Frees a state handle. Null is ignored.
///
/// # Safety
/// `state` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn beacon_state_free(state: *mut BeaconStateHandle) {
    if !state.is_null() {
        drop(Box::from_raw(state));
    }
}

/// Starts a block tree from a copy of a slot-0 state.
///
/// # Safety
/// `genesis` must be a live handle and `out` valid for writes. The store is
/// freed with `beacon_store_free`.
#[no_mangle]
pub unsafe extern "C" fn beacon_store_new(
    genesis: *const BeaconStateHandle,
    out: *mut *mut BeaconStoreHandle,
) -> BeaconStatus {
    guard(|| {
        let h = handle(genesis, "genesis")?;
        let store = Store::init(h.state.clone(), h.preset)
            .map_err(|e| Failure(BeaconStatus::InvalidArgument, format!("{}: {e}", e.code())))?;
        write(out, Box::into_raw(Box::new(BeaconStoreHandle { store })))
    })
}

/// Adds an SSZ-encoded block. On success its root is written to `root_out`
/// when that pointer is not null; on failure the store is unchanged.
///
/// # Safety
/// `store` must be a live handle, `block` must point to `len` readable bytes
/// and `root_out` must be null or have room for 32 bytes.
#[no_mangle]
pub unsafe extern "C" fn beacon_store_on_block(
    store: *mut BeaconStoreHandle,
    block: *const u8,
    len: usize,
    root_out: *mut u8,
) -> BeaconStatus {
    guard(|| {
        let h = store.as_mut().ok_or_else(|| null("store"))?;
        let block = decode_block(input(block, len)?, h.store.preset())?;
        let root = h
            .store
            .on_block(block)
            .map_err(|e| Failure(BeaconStatus::BlockRejected, format!("{}: {e}", e.code())))?;
        if !root_out.is_null() {
            write(root_out as *mut [u8; 32], root.0)?;
        }
        Ok(())
    })
}

/// Writes the fork-choice head root into `out`.
///
/// # Safety
/// `store` must be a live handle and `out` must have room for 32 bytes.
#[no_mangle]
pub unsafe extern "C" fn beacon_store_head(store: *const BeaconStoreHandle, out: *mut u8) -> BeaconStatus {
    guard(|| {
        let h = handle(store, "store")?;
        write(out as *mut [u8; 32], h.store.get_head().0)
    })
}

/// Number of blocks in the store, genesis included. Zero for a null handle.
///
/// # Safety
/// `store` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn beacon_store_len(store: *const BeaconStoreHandle) -> usize {
    store.as_ref().map_or(0, |h| h.store.len())
}

/// Copies the post-state of the block with root `root` into a new handle.
///
/// # Safety
/// `store` must be a live handle, `root` must point to 32 bytes and `out`
/// must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn beacon_store_state(
    store: *const BeaconStoreHandle,
    root: *const u8,
    out: *mut *mut BeaconStateHandle,
) -> BeaconStatus {
    guard(|| {
        let h = handle(store, "store")?;
        let key = beacon_core::types::Root(*handle(root as *const [u8; 32], "root")?);
        let state = h
            .store
            .post_states()
            .get(&key)
            .ok_or_else(|| Failure(BeaconStatus::InvalidArgument, format!("UnknownRoot: {key} is not in the store")))?;
        write(out, new_state(state.clone(), *h.store.preset()))
    })
}

/// Frees a store handle. Null is ignored.
///
/// # Safety
/// `store` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn beacon_store_free(store: *mut BeaconStoreHandle) {
    if !store.is_null() {
        drop(Box::from_raw(store));
    }
}
