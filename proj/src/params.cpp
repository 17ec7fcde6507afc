#include "patron/params.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "patron/error.hpp"

namespace patron {

void validate(const HyperParams& p) {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::InvalidArgument, what); };
  if (p.budget < 1) throw Error(ErrorCode::InvalidBudget, "budget must be at least 1");
  if (p.k_support < 1) fail("k_support must be at least 1");
  if (p.knn_size < 1) fail("knn_size must be at least 1");
  if (p.cknn_size < 1) fail("cknn_size must be at least 1");
  if (!(p.rho > 0.0) || !std::isfinite(p.rho)) fail("rho must be a positive finite number");
  if (!(p.beta >= 0.0) || !std::isfinite(p.beta)) fail("beta must be a nonnegative finite number");
  if (!(p.gamma >= 0.0) || !std::isfinite(p.gamma)) fail("gamma must be a nonnegative finite number");
  if (!(p.margin >= 0.0) || !std::isfinite(p.margin)) fail("margin must be a nonnegative finite number");
}

void validate(const HyperParams& p, std::size_t pool_size) {
  validate(p);
  if (p.budget > pool_size) {
    throw Error(ErrorCode::BudgetExceedsPool, "budget " + std::to_string(p.budget) +
                                                  " exceeds pool size " + std::to_string(pool_size));
  }
}

const std::vector<Preset>& builtin_presets() {
  static const std::vector<Preset> presets = {
      {"imdb", 1000, 0.05, 0.5, 0.3, 0.5},
      {"yelp-full", 1000, 0.1, 5.0, 0.3, 0.5},
      {"agnews", 1000, 0.1, 0.5, 0.5, 0.5},
      {"yahoo", 1000, 0.1, 1.0, 0.3, 0.5},
      {"dbpedia", 1000, 0.1, 5.0, 0.1, 0.5},
      {"trec", 50, 0.1, 5.0, 0.3, 0.5},
  };
  return presets;
}

std::optional<Preset> find_builtin_preset(std::string_view name) {
  for (const auto& p : builtin_presets()) {
    if (p.name == name) return p;
  }
  return std::nullopt;
}

Preset load_preset_file(const std::string& path) {
  if (!std::filesystem::exists(path)) throw Error(ErrorCode::MissingFile, "preset file not found: " + path);
  std::ifstream in(path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, "preset file " + path + " is not valid JSON: " + e.what());
  }
  if (!doc.is_object()) throw Error(ErrorCode::InvalidArgument, "preset file must hold a JSON object");

  Preset preset;
  preset.name = doc.value("name", std::filesystem::path(path).stem().string());
  try {
    if (doc.contains("k_support")) preset.k_support = doc.at("k_support").get<std::size_t>();
    if (doc.contains("rho")) preset.rho = doc.at("rho").get<double>();
    if (doc.contains("beta")) preset.beta = doc.at("beta").get<double>();
    if (doc.contains("gamma")) preset.gamma = doc.at("gamma").get<double>();
    if (doc.contains("margin")) preset.margin = doc.at("margin").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, "preset file " + path + ": " + e.what());
  }
  return preset;
}

}  // namespace patron
