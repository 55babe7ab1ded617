#pragma once

#include <cstdint>

namespace unistore {

// Concepts, metas, individuals, rules and overrides share one id space.
// Ids are allocated monotonically and never reused, not even after rollback.
using ObjectId = std::int64_t;

// Global state counter: one increment per accepted event. State 0 is the
// empty store (only the built-in metadata concepts exist).
using StateIndex = std::int64_t;

namespace builtin {
inline constexpr ObjectId kConcept = 1;
inline constexpr ObjectId kMetaObject = 2;
inline constexpr ObjectId kRule = 3;
inline constexpr ObjectId kMandatoryOverride = 4;
inline constexpr ObjectId kAppraisalParams = 5;
inline constexpr ObjectId kPack = 6;
// The single AppraisalParams object.
inline constexpr ObjectId kParamsObject = 7;
inline constexpr ObjectId kFirstUserId = 100;

inline constexpr bool is_builtin_concept(ObjectId id) { return id >= kConcept && id <= kPack; }
}  // namespace builtin

}  // namespace unistore
