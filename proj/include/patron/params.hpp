#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace patron {

struct HyperParams {
  std::size_t k_support = 0;  // support-set size per class
  std::size_t knn_size = 50;  // neighbors used for uncertainty propagation
  std::size_t cknn_size = 10; // neighbors among selected samples during rewriting
  double rho = 0.0;           // RBF kernel width
  double beta = 0.0;          // distance-to-centroid weight
  double gamma = 0.0;         // margin penalty weight
  double margin = 0.5;        // squared-distance margin
  std::size_t iterations = 2; // rewrite rounds
  std::size_t budget = 0;     // number of clusters == number of selections
  std::uint64_t seed = 0;

  friend bool operator==(const HyperParams&, const HyperParams&) = default;
};

// Throws Error(InvalidArgument / InvalidBudget / BudgetExceedsPool) when a
// field violates its range. `pool_size` is the number of selectable samples.
void validate(const HyperParams& params, std::size_t pool_size);
void validate(const HyperParams& params);

// Per-dataset settings for rho/beta/gamma/k_support. Fields left empty are
// not overridden when the preset is applied.
struct Preset {
  std::string name;
  std::optional<std::size_t> k_support;
  std::optional<double> rho;
  std::optional<double> beta;
  std::optional<double> gamma;
  std::optional<double> margin;
};

// Built-in presets: imdb, yelp-full, agnews, yahoo, dbpedia, trec.
const std::vector<Preset>& builtin_presets();
std::optional<Preset> find_builtin_preset(std::string_view name);

// Loads a preset from a JSON object file ({"k_support":..,"rho":..,...}).
Preset load_preset_file(const std::string& path);

}  // namespace patron
