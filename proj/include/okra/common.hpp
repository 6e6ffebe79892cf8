#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace okra {

/// Base class for every error raised by the library. The concrete subclasses
/// carry the failure kind in their type so callers can catch selectively.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define OKRA_DECLARE_ERROR(Name) \
  class Name : public Error {    \
   public:                       \
    using Error::Error;          \
  }

OKRA_DECLARE_ERROR(UnknownEntityRef);
OKRA_DECLARE_ERROR(CycleBudgetExceeded);
OKRA_DECLARE_ERROR(MissingAnchor);
OKRA_DECLARE_ERROR(ExhaustedSpace);
OKRA_DECLARE_ERROR(ShapeMismatch);
OKRA_DECLARE_ERROR(EmptySegment);
OKRA_DECLARE_ERROR(NonScalarLoss);
OKRA_DECLARE_ERROR(MissingFeature);
OKRA_DECLARE_ERROR(NonFiniteGradient);
OKRA_DECLARE_ERROR(EmptyCorpus);
OKRA_DECLARE_ERROR(MissingGroup);
OKRA_DECLARE_ERROR(UnknownVacancy);
OKRA_DECLARE_ERROR(EmptyTestSet);
OKRA_DECLARE_ERROR(ConfigError);
OKRA_DECLARE_ERROR(MissingInput);
OKRA_DECLARE_ERROR(DigestMismatch);
OKRA_DECLARE_ERROR(FormatError);

#undef OKRA_DECLARE_ERROR

/// 64-bit FNV-1a. Used for token bucketing and for deriving per-item seeds;
/// stable across platforms, unlike std::hash.
std::uint64_t fnv1a(std::string_view text, std::uint64_t basis = 14695981039346656037ULL);

/// Derives an independent seed from a base seed and a list of string keys.
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::string_view> keys);

/// Lowercases and splits on non-alphanumeric characters.
std::vector<std::string> tokenize_alnum(std::string_view text);

/// Splits on ASCII whitespace, keeping at most `limit` tokens (0 = unlimited).
std::vector<std::string> tokenize_whitespace(std::string_view text, std::size_t limit = 0);

/// Hex-encoded SHA-256 of `data`.
std::string sha256_hex(std::string_view data);

/// Worker count from OKRA_THREADS, clamped to [1, hardware_concurrency].
std::size_t worker_threads();

/// Runs fn(i) for i in [0, n) over worker_threads() threads. Results must be
/// written to disjoint slots; the schedule never affects output.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

std::string join(const std::vector<std::string>& parts, std::string_view sep);
std::vector<std::string> split(std::string_view text, char sep);

}  // namespace okra
