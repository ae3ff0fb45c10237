#ifndef BEACON_FFI_H
#define BEACON_FFI_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum BeaconBoundsKind {
  BEACON_BOUNDS_KIND_SAFE = 0,
  BEACON_BOUNDS_KIND_EXISTS_VIOLATION = 1,
  BEACON_BOUNDS_KIND_ALL_VIOLATE = 2,
} BeaconBoundsKind;

/**
 * Built-in parameter sets.
 */
typedef enum BeaconPresetKind {
  BEACON_PRESET_KIND_MAINNET = 0,
  BEACON_PRESET_KIND_MINIMAL = 1,
} BeaconPresetKind;

/**
 * Result of every fallible call.
 */
typedef enum BeaconStatus {
  BEACON_STATUS_OK = 0,
  /**
   * A required pointer was null.
   */
  BEACON_STATUS_NULL_ARGUMENT = 1,
  /**
   * An argument was out of range, such as an empty genesis registry.
   */
  BEACON_STATUS_INVALID_ARGUMENT = 2,
  /**
   * Input bytes are not a valid SSZ encoding of the expected type.
   */
  BEACON_STATUS_MALFORMED_ENCODING = 3,
  /**
   * The state transition rejected the block or slot advance.
   */
  BEACON_STATUS_TRANSITION_REJECTED = 4,
  /**
   * The store refused the block.
   */
  BEACON_STATUS_BLOCK_REJECTED = 5,
  /**
   * A bug inside the library; the message has details.
   */
  BEACON_STATUS_INTERNAL = 6,
} BeaconStatus;

/**
 * A beacon state together with the preset it was built under.
 */
typedef struct BeaconStateHandle BeaconStateHandle;

/**
 * A block tree rooted at a genesis state.
 */
typedef struct BeaconStoreHandle BeaconStoreHandle;

/**
 * Rust-owned bytes. Release with `beacon_buffer_free`.
 */
typedef struct BeaconBuffer {
  uint8_t *data;
  size_t len;
} BeaconBuffer;

/**
 * Committee-size verdict. The witness fields are zero when `kind` is SAFE.
 */
typedef struct BeaconBounds {
  enum BeaconBoundsKind kind;
  uint64_t slot;
  uint64_t index;
  uint64_t size;
} BeaconBounds;

/**
 * Message for the most recent failure on this thread, or null if none.
 * The pointer stays valid until the next failing call on the same thread.
 */
const char *beacon_last_error(void);

/**
 * Releases a buffer returned by this library. Null buffers are ignored.
 *
 * # Safety
 * `buffer` must come from this library and must not be freed twice.
 */
void beacon_buffer_free(struct BeaconBuffer buffer);

/**
 * Classifies committee sizes for `validators` active validators.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum BeaconStatus beacon_committee_bounds(uint64_t validators,
                                          enum BeaconPresetKind preset,
                                          struct BeaconBounds *out);

/**
 * Builds a slot-0 state with `validators` equal-balance validators.
 *
 * # Safety
 * `out` must be valid for writes. The handle is freed with `beacon_state_free`.
 */
enum BeaconStatus beacon_state_genesis(uint64_t validators,
                                       enum BeaconPresetKind preset,
                                       struct BeaconStateHandle **out);

/**
 * Decodes an SSZ-encoded state.
 *
 * # Safety
 * `data` must point to `len` readable bytes and `out` must be valid for writes.
 */
enum BeaconStatus beacon_state_decode(const uint8_t *data,
                                      size_t len,
                                      enum BeaconPresetKind preset,
                                      struct BeaconStateHandle **out);

/**
 * Serializes a state to SSZ.
 *
 * # Safety
 * `state` must be a live handle and `out` valid for writes.
 */
enum BeaconStatus beacon_state_encode(const struct BeaconStateHandle *state,
                                      struct BeaconBuffer *out);

/**
 * Writes the 32-byte hash tree root of a state into `out`.
 *
 * # Safety
 * `state` must be a live handle and `out` must have room for 32 bytes.
 */
enum BeaconStatus beacon_state_root(const struct BeaconStateHandle *state, uint8_t *out);

/**
 * Slot of a state, or `UINT64_MAX` for a null handle.
 *
 * # Safety
 * `state` must be null or a live handle.
 */
uint64_t beacon_state_slot(const struct BeaconStateHandle *state);

/**
 * Applies an SSZ-encoded block to `state`, producing a new handle. The input
 * state is left untouched whatever the outcome.
 *
 * # Safety
 * `state` must be a live handle, `block` must point to `len` readable bytes
 * and `out` must be valid for writes.
 */
enum BeaconStatus beacon_state_transition(const struct BeaconStateHandle *state,
                                          const uint8_t *block,
                                          size_t len,
                                          bool validate_root,
                                          struct BeaconStateHandle **out);

/**
 * Advances through empty slots up to `slot`, producing a new handle.
 *
 * # Safety
 * `state` must be a live handle and `out` valid for writes.
 */
enum BeaconStatus beacon_process_slots(const struct BeaconStateHandle *state,
                                       uint64_t slot,
                                       struct BeaconStateHandle **out);

/**
 * Frees a state handle. Null is ignored.
 *
 * # Safety
 * `state` must be null or a handle from this library not yet freed.
 */
void beacon_state_free(struct BeaconStateHandle *state);

/**
 * Starts a block tree from a copy of a slot-0 state.
 *
 * # Safety
 * `genesis` must be a live handle and `out` valid for writes. The store is
 * freed with `beacon_store_free`.
 */
enum BeaconStatus beacon_store_new(const struct BeaconStateHandle *genesis,
                                   struct BeaconStoreHandle **out);

/**
 * Adds an SSZ-encoded block. On success its root is written to `root_out`
 * when that pointer is not null; on failure the store is unchanged.
 *
 * # Safety
 * `store` must be a live handle, `block` must point to `len` readable bytes
 * and `root_out` must be null or have room for 32 bytes.
 */
enum BeaconStatus beacon_store_on_block(struct BeaconStoreHandle *store,
                                        const uint8_t *block,
                                        size_t len,
                                        uint8_t *root_out);

/**
 * Writes the fork-choice head root into `out`.
 *
 * # Safety
 * `store` must be a live handle and `out` must have room for 32 bytes.
 */
enum BeaconStatus beacon_store_head(const struct BeaconStoreHandle *store, uint8_t *out);

/**
 * Number of blocks in the store, genesis included. Zero for a null handle.
 *
 * # Safety
 * `store` must be null or a live handle.
 */
size_t beacon_store_len(const struct BeaconStoreHandle *store);

/**
 * Copies the post-state of the block with root `root` into a new handle.
 *
 * # Safety
 * `store` must be a live handle, `root` must point to 32 bytes and `out`
 * must be valid for writes.
 */
enum BeaconStatus beacon_store_state(const struct BeaconStoreHandle *store,
                                     const uint8_t *root,
                                     struct BeaconStateHandle **out);

/**
 * Frees a store handle. Null is ignored.
 *
 * # Safety
 * `store` must be null or a handle from this library not yet freed.
 */
void beacon_store_free(struct BeaconStoreHandle *store);

#endif  /* BEACON_FFI_H */
