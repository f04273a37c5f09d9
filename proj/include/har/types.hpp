#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace har {

inline constexpr std::string_view kVersion = "0.1.0";

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::MatrixXf;
using Eigen::VectorXd;
using Eigen::VectorXf;
using Eigen::VectorXi;

// ---------------------------------------------------------------------------
// Activity vocabulary. Class indices are fixed in this order; `transition`
// is a reserved label for inter-activity gaps and is never a class.
// ---------------------------------------------------------------------------

enum class Activity : int {
  talk = 0,
  read = 1,
  video = 2,
  walk = 3,
  type = 4,
  solve = 5,
  cycle = 6,
  transition = 7,
};

inline constexpr int kNumActivities = 7;

inline const std::vector<std::string>& activity_names() {
  static const std::vector<std::string> names = {
      "talk", "read", "video", "walk", "type", "solve", "cycle", "transition"};
  return names;
}

inline const std::string& to_string(Activity a) {
  return activity_names()[static_cast<size_t>(a)];
}

// ---------------------------------------------------------------------------
// Error taxonomy. Everything derives from har::Error so callers can catch
// broadly; the CLI maps specific types onto exit codes.
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidConfig : Error {
  using Error::Error;
};
struct NoPeak : Error {
  using Error::Error;
};
struct DegenerateGeometry : Error {
  using Error::Error;
};
struct RateMismatch : Error {
  using Error::Error;
};
struct ShapeMismatch : Error {
  using Error::Error;
};
struct EmptyClass : Error {
  using Error::Error;
};
struct MissingClassShots : Error {
  using Error::Error;
};
struct NonFiniteLoss : Error {
  using Error::Error;
};
struct IntegrityError : Error {
  using Error::Error;
};

Activity activity_from_name(const std::string& name);  // throws InvalidConfig

// ---------------------------------------------------------------------------
// Seeding. Every random draw in the artifact descends from one master seed
// through these helpers, so sub-tasks (folds, trees, epochs) are independent
// and reproducible regardless of execution order or --jobs.
// ---------------------------------------------------------------------------

inline constexpr std::uint64_t fnv1a64(std::string_view s,
                                       std::uint64_t h = 0xcbf29ce484222325ull) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

// splitmix64 finalizer: decorrelates structured inputs.
inline constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Derive an independent stream seed from a master seed, a purpose tag and an
// optional index (fold number, tree number, epoch, ...).
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view purpose,
                                 std::uint64_t index = 0) {
  return mix64(master ^ mix64(fnv1a64(purpose) + 0x9e3779b97f4a7c15ull * index));
}

}  // namespace har
