#include "patron/dataset_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <set>
#include <sstream>

#include "json.hpp"
#include "patron/error.hpp"

namespace patron {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kSelectionFormat = "patron-selection/1";

template <class T>
T byteswap_value(T value) {
  static_assert(sizeof(T) == 4);
  std::uint32_t bits;
  std::memcpy(&bits, &value, 4);
  bits = (bits >> 24) | ((bits >> 8) & 0xff00u) | ((bits << 8) & 0xff0000u) | (bits << 24);
  std::memcpy(&value, &bits, 4);
  return value;
}

template <class T>
std::vector<T> read_le32(const fs::path& path, std::size_t expected_count, const char* what) {
  if (!fs::exists(path)) throw Error(ErrorCode::MissingFile, std::string(what) + " file not found: " + path.string());
  const auto bytes = fs::file_size(path);
  const auto expected = expected_count * sizeof(T);
  if (bytes != expected) {
    throw Error(ErrorCode::SizeMismatch, std::string(what) + " file " + path.string() + " has " +
                                             std::to_string(bytes) + " bytes, expected " +
                                             std::to_string(expected));
  }
  std::vector<T> values(expected_count);
  std::ifstream in(path, std::ios::binary);
  if (!in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(expected))) {
    throw Error(ErrorCode::IoFailure, "failed to read " + path.string());
  }
  if constexpr (std::endian::native == std::endian::big) {
    for (auto& v : values) v = byteswap_value(v);
  }
  return values;
}

template <class T>
void write_le32(const fs::path& path, const std::vector<T>& values) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");
  if constexpr (std::endian::native == std::endian::big) {
    for (T v : values) {
      v = byteswap_value(v);
      out.write(reinterpret_cast<const char*>(&v), sizeof(T));
    }
  } else {
    out.write(reinterpret_cast<const char*>(values.data()),
              static_cast<std::streamsize>(values.size() * sizeof(T)));
  }
  if (!out) throw Error(ErrorCode::IoFailure, "failed to write " + path.string());
}

fs::path resolve(const fs::path& base_dir, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? path : base_dir / path;
}

json real_to_json(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  return v;
}

double real_from_json(const json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    throw Error(ErrorCode::InvalidArgument, "unexpected real value \"" + s + "\"");
  }
  return j.get<double>();
}

json report_to_json(const SelectionReport& r) {
  json j;
  j["imb"] = r.imb ? real_to_json(*r.imb) : json(nullptr);
  j["ldd"] = r.ldd ? real_to_json(*r.ldd) : json(nullptr);
  j["diversity"] = real_to_json(r.diversity);
  j["representativeness"] = r.representativeness;
  j["representativeness_mean"] = real_to_json(r.representativeness_mean);
  j["embedding"] = r.embedding;
  return j;
}

SelectionReport report_from_json(const json& j) {
  SelectionReport r;
  if (!j.at("imb").is_null()) r.imb = real_from_json(j.at("imb"));
  if (!j.at("ldd").is_null()) r.ldd = real_from_json(j.at("ldd"));
  r.diversity = real_from_json(j.at("diversity"));
  r.representativeness = j.at("representativeness").get<std::vector<double>>();
  r.representativeness_mean = real_from_json(j.at("representativeness_mean"));
  r.embedding = j.at("embedding").get<std::string>();
  return r;
}

json settings_to_json(const RunSettings& s) {
  const auto& p = s.params;
  json j;
  j["mode"] = s.mode;
  j["budget"] = p.budget;
  j["k_support"] = p.k_support;
  j["knn"] = p.knn_size;
  j["cknn"] = p.cknn_size;
  j["rho"] = p.rho;
  j["beta"] = p.beta;
  j["gamma"] = p.gamma;
  j["margin"] = p.margin;
  j["iterations"] = p.iterations;
  j["seed"] = p.seed;
  j["normalize"] = s.normalize;
  j["jacobi"] = s.jacobi;
  j["prior_source"] = s.prior_source;
  j["labeled_pool"] = s.labeled_pool;
  return j;
}

RunSettings settings_from_json(const json& j) {
  RunSettings s;
  auto& p = s.params;
  s.mode = j.at("mode").get<std::string>();
  p.budget = j.at("budget").get<std::size_t>();
  p.k_support = j.at("k_support").get<std::size_t>();
  p.knn_size = j.at("knn").get<std::size_t>();
  p.cknn_size = j.at("cknn").get<std::size_t>();
  p.rho = j.at("rho").get<double>();
  p.beta = j.at("beta").get<double>();
  p.gamma = j.at("gamma").get<double>();
  p.margin = j.at("margin").get<double>();
  p.iterations = j.at("iterations").get<std::size_t>();
  p.seed = j.at("seed").get<std::uint64_t>();
  s.normalize = j.at("normalize").get<bool>();
  s.jacobi = j.at("jacobi").get<bool>();
  s.prior_source = j.at("prior_source").get<std::string>();
  s.labeled_pool = j.at("labeled_pool").get<std::vector<std::size_t>>();
  return s;
}

}  // namespace

std::vector<float> read_f32le(const fs::path& path, std::size_t expected_count) {
  return read_le32<float>(path, expected_count, "f32");
}
void write_f32le(const fs::path& path, const std::vector<float>& values) { write_le32(path, values); }
std::vector<std::int32_t> read_i32le(const fs::path& path, std::size_t expected_count) {
  return read_le32<std::int32_t>(path, expected_count, "i32");
}
void write_i32le(const fs::path& path, const std::vector<std::int32_t>& values) { write_le32(path, values); }

void validate(const DatasetMatrices& data) {
  const std::size_t n = data.n(), c = data.c();
  if (n < 1 || data.d() < 1) throw Error(ErrorCode::SizeMismatch, "dataset needs n >= 1 and d >= 1");
  if (c < 2) throw Error(ErrorCode::SizeMismatch, "dataset needs at least 2 classes");
  if (data.class_probs.rows() != n) {
    throw Error(ErrorCode::SizeMismatch, "class_probs has " + std::to_string(data.class_probs.rows()) +
                                             " rows, embeddings have " + std::to_string(n));
  }
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (float p : data.class_probs.row(i)) {
      if (!(p >= 0.0f) || !std::isfinite(p)) {
        throw Error(ErrorCode::ProbRowInvalid, "row " + std::to_string(i) + " has a negative or non-finite entry");
      }
      sum += p;
    }
    if (std::abs(sum - 1.0) > kProbRowTolerance) {
      std::ostringstream msg;
      msg << "row " << i << " sums to " << sum;
      throw Error(ErrorCode::ProbRowInvalid, msg.str());
    }
  }
  if (data.raw_label_probs) {
    const auto& raw = *data.raw_label_probs;
    if (raw.rows() != n || raw.cols() != c) throw Error(ErrorCode::SizeMismatch, "raw_label_probs shape mismatch");
    for (std::size_t i = 0; i < n; ++i) {
      for (float p : raw.row(i)) {
        if (!(p >= 0.0f && p <= 1.0f)) {
          throw Error(ErrorCode::RawProbInvalid, "raw_label_probs row " + std::to_string(i) + " has an entry outside [0, 1]");
        }
      }
    }
  }
  if (data.gold_labels) {
    if (data.gold_labels->size() != n) throw Error(ErrorCode::SizeMismatch, "gold label count differs from n");
    for (std::size_t i = 0; i < n; ++i) {
      const auto y = (*data.gold_labels)[i];
      if (y < 0 || static_cast<std::size_t>(y) >= c) {
        throw Error(ErrorCode::LabelOutOfRange, "gold label of row " + std::to_string(i) + " is " + std::to_string(y));
      }
    }
  }
}

Manifest read_manifest(const fs::path& manifest_path) {
  if (!fs::exists(manifest_path)) throw Error(ErrorCode::MissingFile, "manifest not found: " + manifest_path.string());
  std::ifstream in(manifest_path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidManifest, manifest_path.string() + ": " + e.what());
  }
  Manifest m;
  try {
    m.n = j.at("n").get<std::size_t>();
    m.d = j.at("d").get<std::size_t>();
    m.c = j.at("c").get<std::size_t>();
    m.dtype = j.value("dtype", std::string("f32le"));
    m.layout = j.value("layout", std::string("row-major"));
    m.embedding_path = j.at("embedding_path").get<std::string>();
    m.prob_path = j.at("prob_path").get<std::string>();
    if (j.contains("raw_prob_path") && !j["raw_prob_path"].is_null()) m.raw_prob_path = j["raw_prob_path"].get<std::string>();
    if (j.contains("labels_path") && !j["labels_path"].is_null()) m.labels_path = j["labels_path"].get<std::string>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidManifest, manifest_path.string() + ": " + e.what());
  }
  if (m.dtype != "f32le") throw Error(ErrorCode::InvalidManifest, "unsupported dtype " + m.dtype);
  if (m.layout != "row-major") throw Error(ErrorCode::InvalidManifest, "unsupported layout " + m.layout);
  return m;
}

void write_manifest(const Manifest& m, const fs::path& manifest_path) {
  json j;
  j["n"] = m.n;
  j["d"] = m.d;
  j["c"] = m.c;
  j["dtype"] = m.dtype;
  j["layout"] = m.layout;
  j["embedding_path"] = m.embedding_path;
  j["prob_path"] = m.prob_path;
  if (m.raw_prob_path) j["raw_prob_path"] = *m.raw_prob_path;
  if (m.labels_path) j["labels_path"] = *m.labels_path;
  std::ofstream out(manifest_path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot open " + manifest_path.string() + " for writing");
  out << j.dump(2) << '\n';
  if (!out) throw Error(ErrorCode::IoFailure, "failed to write " + manifest_path.string());
}

DatasetMatrices load_dataset(const fs::path& manifest_path) {
  const Manifest m = read_manifest(manifest_path);
  const fs::path base = manifest_path.parent_path();

  DatasetMatrices data;
  data.embeddings = MatrixF(m.n, m.d, read_f32le(resolve(base, m.embedding_path), m.n * m.d));
  data.class_probs = MatrixF(m.n, m.c, read_f32le(resolve(base, m.prob_path), m.n * m.c));
  if (m.raw_prob_path) {
    data.raw_label_probs = MatrixF(m.n, m.c, read_f32le(resolve(base, *m.raw_prob_path), m.n * m.c));
  }
  if (m.labels_path) data.gold_labels = read_i32le(resolve(base, *m.labels_path), m.n);
  validate(data);
  return data;
}

Manifest save_dataset(const DatasetMatrices& data, const fs::path& manifest_path) {
  const fs::path dir = manifest_path.parent_path();
  if (!dir.empty()) fs::create_directories(dir);
  const std::string stem = manifest_path.stem().string();

  Manifest m;
  m.n = data.n();
  m.d = data.d();
  m.c = data.c();
  m.embedding_path = stem + ".emb.f32";
  m.prob_path = stem + ".probs.f32";
  write_f32le(dir / m.embedding_path, data.embeddings.values());
  write_f32le(dir / m.prob_path, data.class_probs.values());
  if (data.raw_label_probs) {
    m.raw_prob_path = stem + ".raw.f32";
    write_f32le(dir / *m.raw_prob_path, data.raw_label_probs->values());
  }
  if (data.gold_labels) {
    m.labels_path = stem + ".labels.i32";
    write_i32le(dir / *m.labels_path, *data.gold_labels);
  }
  write_manifest(m, manifest_path);
  return m;
}

void validate(const SelectionOutput& out) {
  if (out.selected.empty() || out.config.params.budget < 1) {
    throw Error(ErrorCode::InvalidBudget, "a selection needs budget >= 1");
  }
  if (out.selected.size() != out.config.params.budget) {
    throw Error(ErrorCode::InvalidArgument, "selected has " + std::to_string(out.selected.size()) +
                                                " entries but budget is " + std::to_string(out.config.params.budget));
  }
  std::set<std::size_t> seen;
  for (auto idx : out.selected) {
    if (idx >= out.pool_size) {
      throw Error(ErrorCode::IndexOutOfRange, "selected index " + std::to_string(idx) + " outside [0, " +
                                                  std::to_string(out.pool_size) + ")");
    }
    if (!seen.insert(idx).second) throw Error(ErrorCode::DuplicateIndex, "index " + std::to_string(idx) + " selected twice");
  }
  if (!out.per_cluster.empty()) {
    if (out.per_cluster.size() != out.selected.size()) {
      throw Error(ErrorCode::InvalidArgument, "per_cluster size differs from selected size");
    }
    for (const auto& choice : out.per_cluster) {
      if (choice.cluster >= out.selected.size() || out.selected[choice.cluster] != choice.sample) {
        throw Error(ErrorCode::InvalidArgument, "per_cluster entry for cluster " + std::to_string(choice.cluster) +
                                                    " disagrees with selected");
      }
    }
  }
}

std::string serialize_selection(const SelectionOutput& out) {
  validate(out);
  json j;
  j["format"] = kSelectionFormat;
  j["pool_size"] = out.pool_size;
  j["selected"] = out.selected;
  json clusters = json::array();
  for (const auto& c : out.per_cluster) clusters.push_back({{"cluster", c.cluster}, {"sample", c.sample}});
  j["per_cluster"] = std::move(clusters);
  j["iterations_run"] = out.iterations_run;
  j["converged"] = out.converged;
  json trace = json::array();
  for (double v : out.objective_trace) trace.push_back(real_to_json(v));
  j["objective_trace"] = std::move(trace);
  j["config"] = settings_to_json(out.config);
  j["metrics"] = out.metrics ? report_to_json(*out.metrics) : json(nullptr);
  return j.dump(2) + "\n";
}

SelectionOutput parse_selection(const std::string& text) {
  SelectionOutput out;
  try {
    const json j = json::parse(text);
    if (j.value("format", std::string()) != kSelectionFormat) {
      throw Error(ErrorCode::InvalidArgument, "not a selection document");
    }
    out.pool_size = j.at("pool_size").get<std::size_t>();
    out.selected = j.at("selected").get<std::vector<std::size_t>>();
    for (const auto& c : j.at("per_cluster")) {
      out.per_cluster.push_back({c.at("cluster").get<std::size_t>(), c.at("sample").get<std::size_t>()});
    }
    out.iterations_run = j.at("iterations_run").get<std::size_t>();
    out.converged = j.at("converged").get<bool>();
    for (const auto& v : j.at("objective_trace")) out.objective_trace.push_back(real_from_json(v));
    out.config = settings_from_json(j.at("config"));
    if (!j.at("metrics").is_null()) out.metrics = report_from_json(j.at("metrics"));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("malformed selection document: ") + e.what());
  }
  validate(out);
  return out;
}

std::string serialize_report(const SelectionReport& report) { return report_to_json(report).dump(2) + "\n"; }

SelectionReport parse_report(const std::string& text) {
  try {
    return report_from_json(json::parse(text));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("malformed report document: ") + e.what());
  }
}

void write_selection(const SelectionOutput& out, const fs::path& path) {
  const std::string text = serialize_selection(out);
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw Error(ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");
  file << text;
  if (!file) throw Error(ErrorCode::IoFailure, "failed to write " + path.string());
}

SelectionOutput read_selection(const fs::path& path) {
  if (!fs::exists(path)) throw Error(ErrorCode::MissingFile, "selection file not found: " + path.string());
  std::ifstream in(path, std::ios::binary);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_selection(text);
}

std::vector<std::size_t> read_index_list(const fs::path& path) {
  if (!fs::exists(path)) throw Error(ErrorCode::MissingFile, "index list not found: " + path.string());
  std::ifstream in(path);
  std::vector<std::size_t> values;
  std::string token;
  while (in >> token) {
    std::size_t pos = 0;
    long long v = 0;
    try {
      v = std::stoll(token, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != token.size() || v < 0) {
      throw Error(ErrorCode::LabeledPoolInvalid, "invalid index \"" + token + "\" in " + path.string());
    }
    values.push_back(static_cast<std::size_t>(v));
  }
  return values;
}

std::vector<double> read_real_list(const fs::path& path) {
  if (!fs::exists(path)) throw Error(ErrorCode::MissingFile, "file not found: " + path.string());
  std::ifstream in(path);
  std::vector<double> values;
  std::string token;
  while (in >> token) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
      v = std::stod(token, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != token.size()) throw Error(ErrorCode::InvalidArgument, "invalid number \"" + token + "\" in " + path.string());
    values.push_back(v);
  }
  return values;
}

}  // namespace patron
