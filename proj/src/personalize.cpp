#include "har/personalize.hpp"

#include <random>
#include <string>
#include <unordered_set>

namespace har::personalize {

ShotSplit select_shots(const std::vector<data::LabeledWindow>& windows,
                       const std::vector<Index>& candidates, int shots_per_class, int n_classes,
                       std::uint64_t seed) {
  if (shots_per_class < 1) throw InvalidConfig("select_shots: shots_per_class must be >= 1");
  if (n_classes < 1) throw InvalidConfig("select_shots: n_classes must be >= 1");

  std::vector<std::vector<Index>> by_class(static_cast<size_t>(n_classes));
  for (Index idx : candidates) {
    const auto& w = windows.at(static_cast<size_t>(idx));
    const int c = static_cast<int>(w.label);
    if (c < 0 || c >= n_classes) {
      throw InvalidConfig("select_shots: window label " + std::to_string(c) +
                          " outside [0, " + std::to_string(n_classes) + ")");
    }
    by_class[static_cast<size_t>(c)].push_back(idx);
  }

  ShotSplit split;
  std::unordered_set<Index> taken;
  for (int c = 0; c < n_classes; ++c) {
    auto& pool = by_class[static_cast<size_t>(c)];
    if (static_cast<int>(pool.size()) < shots_per_class) {
      throw MissingClassShots("class " + to_string(static_cast<Activity>(c)) + " has " +
                              std::to_string(pool.size()) + " windows, need " +
                              std::to_string(shots_per_class) + " shots");
    }
    std::mt19937_64 rng(derive_seed(seed, "shots", static_cast<std::uint64_t>(c)));
    // Partial Fisher-Yates: the first shots_per_class slots become the draw.
    for (int k = 0; k < shots_per_class; ++k) {
      std::uniform_int_distribution<size_t> pick(static_cast<size_t>(k), pool.size() - 1);
      std::swap(pool[static_cast<size_t>(k)], pool[pick(rng)]);
      split.shots.push_back(pool[static_cast<size_t>(k)]);
      taken.insert(pool[static_cast<size_t>(k)]);
    }
  }
  for (Index idx : candidates) {
    if (!taken.count(idx)) split.heldout.push_back(idx);
  }
  return split;
}

}  // namespace har::personalize
