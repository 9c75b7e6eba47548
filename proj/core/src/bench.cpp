#include "mpcc/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include "mpcc/detail/json.hpp"
#include "mpcc/errors.hpp"
#include "mpcc/rng.hpp"

namespace mpcc {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Preprocessing spec

PreprocessSpec PreprocessSpec::from_json_text(const std::string& text) {
  PreprocessSpec spec;
  const json j = json::parse(text);
  if (j.contains("categorical"))
    spec.categorical = j["categorical"].get<std::vector<std::string>>();
  if (j.contains("drop")) spec.drop = j["drop"].get<std::vector<std::string>>();
  if (j.contains("label_column"))
    spec.label_column = j["label_column"].get<std::string>();
  if (j.contains("standardize"))
    spec.standardize = j["standardize"].get<bool>();
  if (j.contains("delimiter"))
    spec.delimiter = j["delimiter"].get<std::string>().at(0);
  if (j.contains("label_map"))
    for (const auto& [key, value] : j["label_map"].items())
      spec.label_map[key] = value.get<int>();
  return spec;
}

PreprocessSpec PreprocessSpec::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open preprocessing spec: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return from_json_text(buf.str());
}

// ---------------------------------------------------------------------------
// Delimited-text loader

namespace {

std::vector<std::string> split_line(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, delim)) {
    // trim whitespace and surrounding quotes
    size_t a = field.find_first_not_of(" \t\r\"");
    size_t b = field.find_last_not_of(" \t\r\"");
    out.push_back(a == std::string::npos ? "" : field.substr(a, b - a + 1));
  }
  if (!line.empty() && line.back() == delim) out.push_back("");
  return out;
}

bool is_missing(const std::string& s) {
  return s.empty() || s == "?" || s == "NA" || s == "na" || s == "nan" ||
         s == "NaN";
}

}  // namespace

Dataset load_dataset(const std::string& path, const PreprocessSpec& spec) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open dataset file: " + path);

  std::string line;
  if (!std::getline(in, line))
    throw ParseError(path + ": empty file, header row required");
  const auto header = split_line(line, spec.delimiter);

  int label_col = -1;
  for (size_t c = 0; c < header.size(); ++c)
    if (header[c] == spec.label_column) label_col = static_cast<int>(c);
  if (label_col < 0) label_col = static_cast<int>(header.size()) - 1;

  std::set<std::string> categorical(spec.categorical.begin(),
                                    spec.categorical.end());
  std::set<std::string> dropped(spec.drop.begin(), spec.drop.end());
  for (const auto& name : spec.categorical)
    if (std::find(header.begin(), header.end(), name) == header.end())
      throw ParseError(path + ": unknown categorical column '" + name + "'");
  for (const auto& name : spec.drop)
    if (std::find(header.begin(), header.end(), name) == header.end())
      throw ParseError(path + ": unknown drop column '" + name + "'");

  struct Row {
    std::vector<std::string> fields;
    int line_no;
  };
  std::vector<Row> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto fields = split_line(line, spec.delimiter);
    if (fields.size() != header.size())
      throw ParseError(path + ":" + std::to_string(line_no) +
                       ": expected " + std::to_string(header.size()) +
                       " fields, got " + std::to_string(fields.size()));
    if (std::any_of(fields.begin(), fields.end(), is_missing)) continue;
    rows.push_back({std::move(fields), line_no});
  }

  // Map labels, dropping rows outside a declared label map.
  std::vector<size_t> kept;
  std::vector<double> labels;
  for (size_t r = 0; r < rows.size(); ++r) {
    const std::string& raw = rows[r].fields[static_cast<size_t>(label_col)];
    if (!spec.label_map.empty()) {
      const auto it = spec.label_map.find(raw);
      if (it == spec.label_map.end()) continue;
      if (it->second != 1 && it->second != -1)
        throw ParseError(path + ": label_map must map to +1/-1");
      kept.push_back(r);
      labels.push_back(it->second);
    } else {
      double value = 0.0;
      try {
        value = std::stod(raw);
      } catch (...) {
        throw ParseError(path + ":" + std::to_string(rows[r].line_no) +
                         ": non-numeric label '" + raw +
                         "' without a label_map");
      }
      if (value != 1.0 && value != -1.0)
        throw ParseError(path + ":" + std::to_string(rows[r].line_no) +
                         ": label must be +1 or -1, got '" + raw + "'");
      kept.push_back(r);
      labels.push_back(value);
    }
  }
  if (kept.empty()) throw ParseError(path + ": no usable rows after filters");

  // Column plan: continuous columns pass through, categorical expand to
  // sorted one-hot indicators.
  struct Expanded {
    int source;
    bool one_hot;
    std::string category;
  };
  std::vector<Expanded> plan;
  for (size_t c = 0; c < header.size(); ++c) {
    if (static_cast<int>(c) == label_col || dropped.count(header[c])) continue;
    if (categorical.count(header[c])) {
      std::set<std::string> values;
      for (size_t r : kept) values.insert(rows[r].fields[c]);
      for (const auto& v : values)
        plan.push_back({static_cast<int>(c), true, v});
    } else {
      plan.push_back({static_cast<int>(c), false, ""});
    }
  }

  Dataset data;
  data.name = std::filesystem::path(path).stem().string();
  data.X.resize(static_cast<Eigen::Index>(kept.size()),
                static_cast<Eigen::Index>(plan.size()));
  data.y.resize(static_cast<Eigen::Index>(kept.size()));
  for (size_t i = 0; i < kept.size(); ++i) {
    const Row& row = rows[kept[i]];
    data.y[static_cast<Eigen::Index>(i)] = labels[i];
    for (size_t c = 0; c < plan.size(); ++c) {
      const auto& col = plan[c];
      const std::string& raw = row.fields[static_cast<size_t>(col.source)];
      double value = 0.0;
      if (col.one_hot) {
        value = raw == col.category ? 1.0 : 0.0;
      } else {
        try {
          value = std::stod(raw);
        } catch (...) {
          throw ParseError(path + ":" + std::to_string(row.line_no) +
                           ": non-numeric value '" + raw + "' in column '" +
                           header[static_cast<size_t>(col.source)] + "'");
        }
      }
      data.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) =
          value;
    }
  }

  if (spec.standardize) {
    // One-hot indicators stay 0/1; only source-continuous columns scale.
    for (size_t c = 0; c < plan.size(); ++c) {
      if (plan[c].one_hot) continue;
      auto col = data.X.col(static_cast<Eigen::Index>(c));
      const double mean = col.mean();
      col.array() -= mean;
      const double sd = std::sqrt(col.squaredNorm() / data.n());
      if (sd > 0.0) col /= sd;
    }
    data.standardized = true;
  }
  return data;
}

void standardize(Dataset& data) {
  for (int c = 0; c < data.d(); ++c) {
    auto col = data.X.col(c);
    const double mean = col.mean();
    col.array() -= mean;
    const double sd = std::sqrt(col.squaredNorm() / data.n());
    if (sd > 0.0) col /= sd;
  }
  data.standardized = true;
}

// ---------------------------------------------------------------------------
// Synthetic generators

SyntheticKind parse_synthetic_kind(const std::string& name) {
  if (name == "circles") return SyntheticKind::Circles;
  if (name == "moons") return SyntheticKind::Moons;
  if (name == "xor") return SyntheticKind::Xor;
  if (name == "linear") return SyntheticKind::Linear;
  if (name == "swiss_roll") return SyntheticKind::SwissRoll;
  if (name == "hastie") return SyntheticKind::Hastie;
  throw ContractError("unsupported synthetic kind: " + name);
}

const char* to_string(SyntheticKind kind) {
  switch (kind) {
    case SyntheticKind::Circles: return "circles";
    case SyntheticKind::Moons: return "moons";
    case SyntheticKind::Xor: return "xor";
    case SyntheticKind::Linear: return "linear";
    case SyntheticKind::SwissRoll: return "swiss_roll";
    case SyntheticKind::Hastie: return "hastie";
  }
  return "?";
}

Dataset generate_synthetic(SyntheticKind kind, int n, int d, double noise,
                           std::uint64_t seed) {
  if (n < 4) throw ContractError("generate_synthetic: n must be >= 4");
  Rng rng(seed);
  Dataset data;
  data.name = to_string(kind);

  switch (kind) {
    case SyntheticKind::Circles: {
      if (d < 2) throw ContractError("circles: d must be >= 2");
      data.X.resize(n, d);
      data.y.resize(n);
      const int n_out = n / 2;
      for (int i = 0; i < n; ++i) {
        Vector dir(d);
        double norm = 0.0;
        do {
          for (int c = 0; c < d; ++c) dir[c] = rng.next_gaussian();
          norm = dir.norm();
        } while (norm == 0.0);
        dir /= norm;
        const bool outer = i < n_out;
        dir *= outer ? 1.0 : 0.5;
        for (int c = 0; c < d; ++c)
          data.X(i, c) = dir[c] + noise * rng.next_gaussian();
        data.y[i] = outer ? 1.0 : -1.0;
      }
      break;
    }
    case SyntheticKind::Moons: {
      if (d != 2) throw ContractError("moons: d must be 2");
      data.X.resize(n, 2);
      data.y.resize(n);
      const int n_out = n / 2;
      const int n_in = n - n_out;
      for (int i = 0; i < n_out; ++i) {
        const double t = M_PI * i / std::max(1, n_out - 1);
        data.X(i, 0) = std::cos(t) + noise * rng.next_gaussian();
        data.X(i, 1) = std::sin(t) + noise * rng.next_gaussian();
        data.y[i] = -1.0;
      }
      for (int i = 0; i < n_in; ++i) {
        const double t = M_PI * i / std::max(1, n_in - 1);
        data.X(n_out + i, 0) = 1.0 - std::cos(t) + noise * rng.next_gaussian();
        data.X(n_out + i, 1) =
            0.5 - std::sin(t) + noise * rng.next_gaussian();
        data.y[n_out + i] = 1.0;
      }
      break;
    }
    case SyntheticKind::Xor: {
      if (d != 2) throw ContractError("xor: d must be 2");
      data.X.resize(n, 2);
      data.y.resize(n);
      for (int i = 0; i < n; ++i) {
        const double a = rng.next_uniform(-1.0, 1.0);
        const double b = rng.next_uniform(-1.0, 1.0);
        data.y[i] = a * b > 0.0 ? 1.0 : -1.0;
        data.X(i, 0) = a + noise * rng.next_gaussian();
        data.X(i, 1) = b + noise * rng.next_gaussian();
      }
      break;
    }
    case SyntheticKind::Linear: {
      data.X.resize(n, d);
      data.y.resize(n);
      Vector w(d);
      for (int c = 0; c < d; ++c) w[c] = rng.next_gaussian();
      if (w.norm() == 0.0) w[0] = 1.0;
      for (int i = 0; i < n; ++i) {
        Vector x(d);
        for (int c = 0; c < d; ++c) x[c] = rng.next_double();
        const double side = w.dot(x - Vector::Constant(d, 0.5));
        data.y[i] = side >= 0.0 ? 1.0 : -1.0;
        for (int c = 0; c < d; ++c)
          data.X(i, c) = x[c] + noise * rng.next_gaussian();
      }
      break;
    }
    case SyntheticKind::SwissRoll: {
      if (d != 3) throw ContractError("swiss_roll: d must be 3");
      data.X.resize(n, 3);
      data.y.resize(n);
      std::vector<double> ts(static_cast<size_t>(n));
      for (int i = 0; i < n; ++i)
        ts[static_cast<size_t>(i)] = 1.5 * M_PI * (1.0 + 2.0 * rng.next_double());
      std::vector<double> sorted_ts = ts;
      std::nth_element(sorted_ts.begin(), sorted_ts.begin() + n / 2,
                       sorted_ts.end());
      const double median = sorted_ts[static_cast<size_t>(n) / 2];
      for (int i = 0; i < n; ++i) {
        const double t = ts[static_cast<size_t>(i)];
        data.X(i, 0) = t * std::cos(t) + noise * rng.next_gaussian();
        data.X(i, 1) = 21.0 * rng.next_double() + noise * rng.next_gaussian();
        data.X(i, 2) = t * std::sin(t) + noise * rng.next_gaussian();
        data.y[i] = t < median ? 1.0 : -1.0;
      }
      break;
    }
    case SyntheticKind::Hastie: {
      data.X.resize(n, d);
      data.y.resize(n);
      for (int i = 0; i < n; ++i) {
        double norm2 = 0.0;
        for (int c = 0; c < d; ++c) {
          const double v = rng.next_gaussian();
          data.X(i, c) = v;
          norm2 += v * v;
        }
        data.y[i] = norm2 > 9.34 ? 1.0 : -1.0;
      }
      break;
    }
  }
  return data;
}

void save_dataset(const Dataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write dataset file: " + path);
  for (int c = 0; c < data.d(); ++c) out << "f" << (c + 1) << ",";
  out << "label\n";
  out.precision(17);
  for (int i = 0; i < data.n(); ++i) {
    for (int c = 0; c < data.d(); ++c) out << data.X(i, c) << ",";
    out << static_cast<int>(data.y[i]) << "\n";
  }
}

// ---------------------------------------------------------------------------
// Records

std::string RunRecord::to_json() const {
  json j;
  j["dataset"] = dataset;
  j["method"] = method;
  j["seed"] = seed;
  j["C0"] = C0;
  j["gamma0"] = gamma0;
  j["C"] = C;
  j["gamma"] = gamma;
  j["objective"] = objective;
  j["validation_accuracy"] = validation_accuracy;
  j["test_accuracy"] = test_accuracy;
  j["wall_time"] = wall_time;
  j["status"] = status;
  j["final_param"] = final_param;
  j["mpcc_feasibility"] = mpcc_feasibility;
  j["iterations"] = iterations;
  return j.dump();
}

RunRecord RunRecord::from_json(const std::string& line) {
  const json j = json::parse(line);
  RunRecord r;
  r.dataset = j.at("dataset").get<std::string>();
  r.method = j.at("method").get<std::string>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.C0 = j.at("C0").get<double>();
  r.gamma0 = j.at("gamma0").get<double>();
  r.C = j.at("C").get<double>();
  r.gamma = j.at("gamma").get<double>();
  r.objective = j.at("objective").get<double>();
  r.validation_accuracy = j.at("validation_accuracy").get<double>();
  r.test_accuracy = j.at("test_accuracy").get<double>();
  r.wall_time = j.at("wall_time").get<double>();
  r.status = j.at("status").get<std::string>();
  r.final_param = j.at("final_param").get<double>();
  r.mpcc_feasibility = j.at("mpcc_feasibility").get<double>();
  r.iterations = j.at("iterations").get<int>();
  return r;
}

std::vector<RunRecord> read_records(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open records file: " + path);
  std::vector<RunRecord> records;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    records.push_back(RunRecord::from_json(line));
  }
  return records;
}

void write_records(const std::vector<RunRecord>& records,
                   const std::string& path) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw ParseError("cannot write records file: " + tmp);
    for (const auto& r : records) out << r.to_json() << "\n";
  }
  std::filesystem::rename(tmp, path);
}

// ---------------------------------------------------------------------------
// Performance profile

std::vector<ProfilePoint> performance_profile(
    const std::vector<RunRecord>& records,
    const std::map<std::string, double>& target_accuracy) {
  if (records.empty())
    throw ContractError("performance_profile: no records");
  // method -> dataset -> (times, hits)
  std::map<std::string, std::map<std::string, std::pair<std::vector<double>, int>>>
      by_method;
  for (const auto& r : records) {
    const auto it = target_accuracy.find(r.dataset);
    if (it == target_accuracy.end())
      throw ContractError("performance_profile: no target accuracy for '" +
                          r.dataset + "'");
    auto& cell = by_method[r.method][r.dataset];
    cell.first.push_back(r.wall_time);
    if (r.test_accuracy >= it->second) ++cell.second;
  }

  std::vector<ProfilePoint> points;
  for (const auto& [method, datasets] : by_method) {
    std::vector<double> adjusted;
    for (const auto& [dataset, cell] : datasets) {
      const auto& [times, hits] = cell;
      const double mean =
          std::accumulate(times.begin(), times.end(), 0.0) / times.size();
      const double p = static_cast<double>(hits) / times.size();
      adjusted.push_back(p > 0.0
                             ? mean / p
                             : std::numeric_limits<double>::infinity());
    }
    std::sort(adjusted.begin(), adjusted.end());
    const double total = static_cast<double>(adjusted.size());
    for (size_t i = 0; i < adjusted.size(); ++i) {
      if (!std::isfinite(adjusted[i])) break;  // sentinel tail drops out
      points.push_back({method, adjusted[i],
                        static_cast<double>(i + 1) / total});
    }
  }
  return points;
}

// ---------------------------------------------------------------------------
// Experiment orchestration

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
  const json j = json::parse(text);
  ExperimentConfig config;
  if (j.contains("out")) config.out = j["out"].get<std::string>();
  if (j.contains("methods"))
    config.methods = j["methods"].get<std::vector<std::string>>();
  if (j.contains("seeds"))
    config.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
  if (j.contains("folds")) config.tune.folds = j["folds"].get<int>();
  if (j.contains("test_fraction"))
    config.tune.test_fraction = j["test_fraction"].get<double>();
  if (j.contains("init"))
    config.tune.init = parse_init_strategy(j["init"].get<std::string>());
  if (j.contains("workers")) config.tune.workers = j["workers"].get<int>();
  if (j.contains("grid")) {
    const auto& g = j["grid"];
    if (g.contains("c_lo")) config.tune.grid.c_exp_lo = g["c_lo"].get<int>();
    if (g.contains("c_hi")) config.tune.grid.c_exp_hi = g["c_hi"].get<int>();
    if (g.contains("gamma_lo"))
      config.tune.grid.gamma_exp_lo = g["gamma_lo"].get<int>();
    if (g.contains("gamma_hi"))
      config.tune.grid.gamma_exp_hi = g["gamma_hi"].get<int>();
  }
  if (j.contains("dfo")) {
    const auto& d = j["dfo"];
    if (d.contains("random_evals"))
      config.dfo_random_evals = d["random_evals"].get<int>();
    if (d.contains("bayesian_evals"))
      config.dfo_bayesian_evals = d["bayesian_evals"].get<int>();
    if (d.contains("pattern_h0"))
      config.dfo_pattern_h0 = d["pattern_h0"].get<double>();
    if (d.contains("grid_exp_lo"))
      config.dfo_grid_exp_lo = d["grid_exp_lo"].get<int>();
    if (d.contains("grid_exp_hi"))
      config.dfo_grid_exp_hi = d["grid_exp_hi"].get<int>();
  }
  if (!j.contains("datasets") || j["datasets"].empty())
    throw ContractError("experiment config: datasets required");
  for (const auto& d : j["datasets"]) {
    DatasetConfig dc;
    if (d.contains("name")) dc.name = d["name"].get<std::string>();
    if (d.contains("synthetic"))
      dc.synthetic = d["synthetic"].get<std::string>();
    if (d.contains("n")) dc.n = d["n"].get<int>();
    if (d.contains("d")) dc.d = d["d"].get<int>();
    if (d.contains("noise")) dc.noise = d["noise"].get<double>();
    if (d.contains("seed")) dc.seed = d["seed"].get<std::uint64_t>();
    if (d.contains("standardize"))
      dc.standardize = d["standardize"].get<bool>();
    if (d.contains("path")) dc.path = d["path"].get<std::string>();
    if (d.contains("preprocess"))
      dc.preprocess = d["preprocess"].get<std::string>();
    if (dc.name.empty())
      dc.name = dc.synthetic.empty()
                    ? std::filesystem::path(dc.path).stem().string()
                    : dc.synthetic;
    config.datasets.push_back(dc);
  }
  return config;
}

ExperimentConfig ExperimentConfig::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open experiment config: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return from_json_text(buf.str());
}

Dataset dataset_from_config(const DatasetConfig& config) {
  Dataset data;
  if (!config.synthetic.empty()) {
    const SyntheticKind kind = parse_synthetic_kind(config.synthetic);
    int d = config.d;
    if (kind == SyntheticKind::Moons || kind == SyntheticKind::Xor) d = 2;
    if (kind == SyntheticKind::SwissRoll) d = 3;
    if (kind == SyntheticKind::Hastie && config.d == 2) d = 10;
    data = generate_synthetic(kind, config.n, d, config.noise, config.seed);
    if (config.standardize) standardize(data);
  } else {
    PreprocessSpec spec;
    if (!config.preprocess.empty())
      spec = PreprocessSpec::from_json_file(config.preprocess);
    spec.standardize = config.standardize;
    data = load_dataset(config.path, spec);
  }
  data.name = config.name;
  return data;
}

namespace {

bool is_dfo_method(const std::string& tag) {
  return tag == "grid" || tag == "random" || tag == "bayesian" ||
         tag == "pattern";
}

struct MethodSummary {
  std::vector<double> runtimes, objectives;
  std::vector<double> validation, test;
  long iterations = 0;
  int runs = 0;
};

std::string format_summary(
    const std::string& dataset,
    const std::map<std::string, MethodSummary>& methods) {
  std::ostringstream os;
  os << "== " << dataset << " ==\n";
  os << std::left;
  os.setf(std::ios::fixed);
  auto row = [&](const std::string& label, auto getter) {
    os << "  ";
    os.width(18);
    os << label;
    for (const auto& [name, m] : methods) {
      os << "  " << name << "=" << getter(m);
    }
    os << "\n";
  };
  os.precision(3);
  row("runtime q1/q2/q3", [](const MethodSummary& m) {
    const Quartiles q = quartiles(m.runtimes);
    std::ostringstream s;
    s.setf(std::ios::fixed);
    s.precision(3);
    s << q.q1 << "/" << q.q2 << "/" << q.q3 << "s";
    return s.str();
  });
  row("objective q1/q2/q3", [](const MethodSummary& m) {
    const Quartiles q = quartiles(m.objectives);
    std::ostringstream s;
    s.setf(std::ios::fixed);
    s.precision(3);
    s << q.q1 << "/" << q.q2 << "/" << q.q3;
    return s.str();
  });
  row("iterations", [](const MethodSummary& m) {
    std::ostringstream s;
    s << (m.runs > 0 ? m.iterations / m.runs : 0);
    return s.str();
  });
  row("validation acc.", [](const MethodSummary& m) {
    std::ostringstream s;
    s.setf(std::ios::fixed);
    s.precision(3);
    s << (m.validation.empty()
              ? 0.0
              : *std::max_element(m.validation.begin(), m.validation.end()));
    return s.str();
  });
  row("test acc.", [](const MethodSummary& m) {
    std::ostringstream s;
    s.setf(std::ios::fixed);
    s.precision(3);
    s << (m.test.empty() ? 0.0
                         : *std::max_element(m.test.begin(), m.test.end()));
    return s.str();
  });
  return os.str();
}

}  // namespace

ExperimentOutcome run_experiment(const ExperimentConfig& config) {
  if (config.methods.empty())
    throw ContractError("run_experiment: empty method list");
  ExperimentOutcome outcome;
  std::ostringstream summary;

  for (const auto& dc : config.datasets) {
    const Dataset data = dataset_from_config(dc);
    std::map<std::string, MethodSummary> summaries;

    for (const auto& method : config.methods) {
      auto& agg = summaries[method];
      for (std::uint64_t seed : config.seeds) {
        if (is_dfo_method(method)) {
          const FoldPlan folds = make_folds(data, config.tune.folds,
                                            config.tune.test_fraction, seed);
          BlackBoxObjective obj(folds);
          const DfoObjective fn = [&obj](double C, double gamma) {
            return obj(C, gamma);
          };
          const auto t0 = std::chrono::steady_clock::now();
          DfoResult res;
          int poll_rounds = 0;
          if (method == "grid") {
            res = grid_search(fn, default_dfo_grid(config.dfo_grid_exp_lo,
                                                    config.dfo_grid_exp_hi));
          } else if (method == "random") {
            res = random_search(fn, LogBounds{}, config.dfo_random_evals,
                                seed);
          } else if (method == "bayesian") {
            res = bayesian_search(fn, LogBounds{}, config.dfo_bayesian_evals,
                                  seed);
          } else {
            const PatternResult pr =
                pattern_search(fn, {1.0, 1.0}, config.dfo_pattern_h0);
            res = pr;
            poll_rounds = pr.poll_rounds;
          }
          const double elapsed =
              std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                            t0)
                  .count();

          RunRecord rec;
          rec.dataset = data.name;
          rec.method = method;
          rec.seed = seed;
          rec.C0 = rec.C = res.C;
          rec.gamma0 = rec.gamma = res.gamma;
          rec.objective = res.loss;
          rec.validation_accuracy = res.accuracy;
          rec.wall_time = elapsed;
          rec.status = "Converged";
          rec.iterations =
              method == "pattern" ? poll_rounds : res.evaluations;
          if (!folds.test.empty()) {
            const TrainedSvm fit =
                train_dual_svm(folds.modeled_set(), res.C, res.gamma, 1e-8);
            rec.test_accuracy = accuracy(fit.model, folds.test_set());
          }
          outcome.records.push_back(rec);
          agg.runtimes.push_back(rec.wall_time);
          agg.objectives.push_back(rec.objective);
          agg.validation.push_back(rec.validation_accuracy);
          agg.test.push_back(rec.test_accuracy);
          agg.iterations += rec.iterations;
          agg.runs += 1;
        } else {
          TuneParams params = config.tune;
          params.seed = seed;
          const TuneResult result =
              tune(data, parse_tune_method(method), params);
          for (const auto& run : result.runs) {
            RunRecord rec;
            rec.dataset = data.name;
            rec.method = method;
            rec.seed = seed;
            rec.C0 = run.C0;
            rec.gamma0 = run.gamma0;
            rec.C = run.C;
            rec.gamma = run.gamma;
            rec.objective = run.objective;
            rec.validation_accuracy = run.validation_accuracy;
            rec.test_accuracy = run.test_accuracy;
            rec.wall_time = run.wall_time;
            rec.status = run.error.empty() ? to_string(run.status) : "Error";
            rec.final_param = run.final_param;
            rec.mpcc_feasibility = run.mpcc_feasibility;
            rec.iterations = run.inner_iterations;
            outcome.records.push_back(rec);
            if (!run.error.empty()) {
              ++outcome.failures;
              continue;
            }
            agg.runtimes.push_back(run.wall_time);
            agg.objectives.push_back(run.objective);
            agg.validation.push_back(run.validation_accuracy);
            agg.test.push_back(run.test_accuracy);
            agg.iterations += run.inner_iterations;
            agg.runs += 1;
          }
        }
      }
    }
    summary << format_summary(data.name, summaries);
  }

  outcome.summary = summary.str();
  if (!config.out.empty()) {
    std::filesystem::create_directories(config.out);
    write_records(outcome.records,
                  (std::filesystem::path(config.out) / "records.jsonl")
                      .string());
    const std::string tmp =
        (std::filesystem::path(config.out) / "summary.txt.tmp").string();
    {
      std::ofstream out(tmp);
      out << outcome.summary;
    }
    std::filesystem::rename(
        tmp, (std::filesystem::path(config.out) / "summary.txt").string());
  }
  return outcome;
}

}  // namespace mpcc
