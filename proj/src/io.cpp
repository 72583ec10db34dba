#include "drsl/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#ifndef DRSL_VERSION
#define DRSL_VERSION "unknown"
#endif

namespace fs = std::filesystem;

namespace drsl {

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string::size_type start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

std::ifstream open_in(const fs::path& file) {
  std::ifstream in(file);
  require(static_cast<bool>(in), Errc::MissingFile, file.string());
  return in;
}

std::ofstream open_out(const fs::path& file) {
  std::ofstream out(file, std::ios::binary);
  require(static_cast<bool>(out), Errc::IoError, "cannot write " + file.string());
  return out;
}

double parse_double(const std::string& field, const fs::path& file, std::size_t line, std::size_t col) {
  double v = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(first, last, v);
  require(ec == std::errc() && ptr == last && !field.empty(), Errc::ParseError,
          file.filename().string() + " line " + std::to_string(line) + " column " + std::to_string(col) +
              ": '" + field + "' is not a number");
  return v;
}

fs::path bold_path(const fs::path& dir, const std::string& id) { return dir / ("sub-" + id + "_bold.tsv"); }
fs::path events_path(const fs::path& dir, const std::string& id) { return dir / ("sub-" + id + "_events.tsv"); }

std::string join(const std::vector<std::string>& items, char sep) {
  std::string s;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) s += sep;
    s += items[i];
  }
  return s;
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string library_version() { return DRSL_VERSION; }

Matrix read_matrix_tsv(const fs::path& file) {
  auto in = open_in(file);
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    const auto fields = split(line, '\t');
    if (rows.empty()) width = fields.size();
    require(fields.size() == width, Errc::ParseError,
            file.filename().string() + " line " + std::to_string(line_no) + ": expected " + std::to_string(width) +
                " columns, found " + std::to_string(fields.size()));
    std::vector<double> row;
    row.reserve(fields.size());
    for (std::size_t c = 0; c < fields.size(); ++c) row.push_back(parse_double(fields[c], file, line_no, c + 1));
    rows.push_back(std::move(row));
  }
  Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(width));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < width; ++c) m(static_cast<Index>(r), static_cast<Index>(c)) = rows[r][c];
  return m;
}

void write_matrix_tsv(const fs::path& file, const Matrix& m) {
  auto out = open_out(file);
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) {
      if (c) out << '\t';
      out << format_double(m(r, c));
    }
    out << '\n';
  }
  require(static_cast<bool>(out), Errc::IoError, "failed writing " + file.string());
}

EventTable read_events_tsv(const fs::path& file, double tr, Index n_scans) {
  auto in = open_in(file);
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), Errc::ParseError, file.filename().string() + ": empty file");
  require(strip_cr(line) == "onset\tduration\tcondition", Errc::ParseError,
          file.filename().string() + " line 1: expected header 'onset\\tduration\\tcondition'");
  EventTable table;
  table.tr = tr;
  table.n_scans = n_scans;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    const auto f = split(line, '\t');
    require(f.size() == 3, Errc::ParseError,
            file.filename().string() + " line " + std::to_string(line_no) + ": expected 3 columns");
    Event e{parse_double(f[0], file, line_no, 1), parse_double(f[1], file, line_no, 2), f[2]};
    require(e.onset >= 0.0 && std::isfinite(e.onset), Errc::ParseError,
            file.filename().string() + " line " + std::to_string(line_no) + ": negative onset");
    require(e.duration >= 0.0 && std::isfinite(e.duration), Errc::ParseError,
            file.filename().string() + " line " + std::to_string(line_no) + ": negative duration");
    require(!e.condition.empty(), Errc::ParseError,
            file.filename().string() + " line " + std::to_string(line_no) + ": empty condition");
    table.events.push_back(std::move(e));
  }
  return table;
}

void write_events_tsv(const fs::path& file, const EventTable& events) {
  auto out = open_out(file);
  out << "onset\tduration\tcondition\n";
  for (const auto& e : events.events)
    out << format_double(e.onset) << '\t' << format_double(e.duration) << '\t' << e.condition << '\n';
}

void write_dataset(const fs::path& dir, const std::vector<SubjectData>& subjects,
                   const std::vector<EventTable>& events) {
  require(!subjects.empty() && subjects.size() == events.size(), Errc::ShapeMismatch,
          "need one event table per subject");
  std::error_code ec;
  fs::create_directories(dir, ec);
  require(!ec, Errc::IoError, "cannot create " + dir.string());
  std::set<std::string> names;
  for (const auto& t : events)
    for (const auto& n : t.conditions()) names.insert(n);
  std::vector<std::string> ids;
  for (const auto& s : subjects) ids.push_back(s.subject_id);

  auto manifest = open_out(dir / "manifest.txt");
  manifest << "tr\t" << format_double(events.front().tr) << '\n'
           << "n_scans\t" << events.front().n_scans << '\n'
           << "n_voxels\t" << subjects.front().n_voxels() << '\n'
           << "conditions\t" << join({names.begin(), names.end()}, '\t') << '\n'
           << "subjects\t" << join(ids, '\t') << '\n';
  for (std::size_t s = 0; s < subjects.size(); ++s) {
    write_matrix_tsv(bold_path(dir, ids[s]), subjects[s].responses);
    write_events_tsv(events_path(dir, ids[s]), events[s]);
  }
}

Dataset read_dataset(const fs::path& dir) {
  auto in = open_in(dir / "manifest.txt");
  std::map<std::string, std::vector<std::string>> kv;
  std::string line;
  while (std::getline(in, line)) {
    line = strip_cr(line);
    if (line.empty() || line.front() == '#') continue;
    auto f = split(line, '\t');
    const std::string key = f.front();
    f.erase(f.begin());
    kv[key] = std::move(f);
  }
  for (const char* key : {"tr", "n_scans", "conditions", "subjects"})
    require(kv.count(key) && !kv[key].empty(), Errc::ManifestMismatch, std::string("manifest lacks '") + key + "'");

  Dataset ds;
  ds.tr = parse_double(kv["tr"].front(), dir / "manifest.txt", 0, 2);
  ds.n_scans = static_cast<Index>(parse_double(kv["n_scans"].front(), dir / "manifest.txt", 0, 2));
  ds.conditions = kv["conditions"];
  std::optional<Index> n_voxels;
  if (kv.count("n_voxels") && !kv["n_voxels"].empty())
    n_voxels = static_cast<Index>(parse_double(kv["n_voxels"].front(), dir / "manifest.txt", 0, 2));
  require(std::is_sorted(ds.conditions.begin(), ds.conditions.end()), Errc::ManifestMismatch,
          "manifest conditions must be sorted");
  const HrfKernel hrf = canonical_hrf(ds.tr);

  for (const auto& id : kv["subjects"]) {
    const fs::path bold = bold_path(dir, id);
    const fs::path ev = events_path(dir, id);
    require(fs::exists(bold), Errc::MissingFile, bold.string());
    require(fs::exists(ev), Errc::MissingFile, ev.string());
    SubjectData data{id, read_matrix_tsv(bold)};
    require(data.n_scans() == ds.n_scans, Errc::ManifestMismatch,
            bold.filename().string() + " has " + std::to_string(data.n_scans()) + " rows, manifest says " +
                std::to_string(ds.n_scans));
    if (n_voxels)
      require(data.n_voxels() == *n_voxels, Errc::ManifestMismatch,
              bold.filename().string() + " has " + std::to_string(data.n_voxels()) + " columns");
    EventTable table = read_events_tsv(ev, ds.tr, ds.n_scans);
    try {
      table.validate();
    } catch (const Error& e) {
      fail(Errc::ParseError, ev.filename().string() + ": " + e.what());
    }
    require(table.conditions() == ds.conditions, Errc::ManifestMismatch,
            ev.filename().string() + " conditions differ from the manifest");
    DesignMatrix design = build_design_matrix(table, hrf);
    ds.events.push_back(std::move(table));
    ds.subjects.push_back({std::move(data), std::move(design)});
  }
  return ds;
}

void write_results(const std::vector<RunResult>& results, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  require(!ec, Errc::IoError, "cannot create " + dir.string());
  const bool any_rho = std::any_of(results.begin(), results.end(), [](const auto& r) { return !r.rho.empty(); });
  const bool any_cv = std::any_of(results.begin(), results.end(), [](const auto& r) { return r.cv.has_value(); });
  const bool any_mse =
      std::any_of(results.begin(), results.end(), [](const auto& r) { return !r.mse_by_iters.empty(); });
  const bool any_time = std::any_of(results.begin(), results.end(), [](const auto& r) { return !r.runtime.empty(); });

  if (any_rho) {
    auto out = open_out(dir / "correlation.csv");
    out << "method,rho_max,rho_std_over_seeds\n";
    for (const auto& r : results) {
      if (r.rho.empty()) continue;
      double mean = 0.0;
      for (double v : r.rho) mean += v / static_cast<double>(r.rho.size());
      double ss = 0.0;
      for (double v : r.rho) ss += (v - mean) * (v - mean);
      const double sd = r.rho.size() > 1 ? std::sqrt(ss / static_cast<double>(r.rho.size() - 1)) : 0.0;
      out << r.method << ',' << format_double(mean) << ',' << format_double(sd) << '\n';
    }
  }
  if (any_cv) {
    auto out = open_out(dir / "accuracy.csv");
    out << "method,fold,accuracy\n";
    for (const auto& r : results) {
      if (!r.cv) continue;
      for (const auto& f : r.cv->folds) out << r.method << ',' << f.subject_id << ',' << format_double(f.accuracy) << '\n';
    }
  }
  if (any_mse) {
    auto out = open_out(dir / "mse.csv");
    out << "iterations,mse\n";
    for (const auto& r : results)
      for (const auto& [iters, mse] : r.mse_by_iters) out << iters << ',' << format_double(mse) << '\n';
  }
  if (any_time) {
    auto out = open_out(dir / "runtime.csv");
    out << "method,phase,ms\n";
    for (const auto& r : results)
      for (const auto& t : r.runtime) out << r.method << ',' << t.phase << ',' << format_double(t.ms) << '\n';
  }
}

nlohmann::json to_json(const FitConfig& c) {
  return {
      {"alpha", c.alpha},
      {"eta", c.eta},
      {"m1", c.m1},
      {"m2", c.m2},
      {"batch_size", c.batch_size},
      {"adam", {{"mu1", c.adam.mu1}, {"mu2", c.adam.mu2}, {"epsilon", c.adam.epsilon}}},
      {"units", c.units},
      {"activation", std::string(to_string(c.activation))},
      {"init", std::string(to_string(c.init))},
      {"regularization", c.regularization == Regularization::drsl ? "drsl" : "disabled"},
      {"adam_denominator", c.adam_denominator == AdamDenominator::plus_epsilon ? "plus_epsilon" : "minus_epsilon"},
      {"warm_start_theta", c.warm_start_theta},
      {"seed", c.seed},
  };
}

FitConfig fit_config_from_json(const nlohmann::json& j) {
  try {
    FitConfig c;
    c.alpha = j.value("alpha", c.alpha);
    c.eta = j.value("eta", c.eta);
    c.m1 = j.value("m1", c.m1);
    c.m2 = j.value("m2", c.m2);
    c.batch_size = j.value("batch_size", c.batch_size);
    if (j.contains("adam")) {
      c.adam.mu1 = j["adam"].value("mu1", c.adam.mu1);
      c.adam.mu2 = j["adam"].value("mu2", c.adam.mu2);
      c.adam.epsilon = j["adam"].value("epsilon", c.adam.epsilon);
    }
    c.units = j.value("units", c.units);
    c.activation = parse_activation(j.value("activation", std::string("sigmoid")));
    c.init = parse_init_scheme(j.value("init", std::string("scaled_normal")));
    c.regularization =
        j.value("regularization", std::string("drsl")) == "disabled" ? Regularization::disabled : Regularization::drsl;
    c.adam_denominator = j.value("adam_denominator", std::string("plus_epsilon")) == "minus_epsilon"
                             ? AdamDenominator::minus_epsilon
                             : AdamDenominator::plus_epsilon;
    c.warm_start_theta = j.value("warm_start_theta", false);
    c.seed = j.value("seed", std::uint64_t{0});
    return c;
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::BadConfig, e.what());
  }
}

namespace {

nlohmann::json matrix_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    std::vector<double> row(static_cast<std::size_t>(m.cols()));
    for (Index c = 0; c < m.cols(); ++c) row[static_cast<std::size_t>(c)] = m(r, c);
    rows.push_back(row);
  }
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", rows}};
}

Matrix matrix_from_json(const nlohmann::json& j) {
  Matrix m(j.at("rows").get<Index>(), j.at("cols").get<Index>());
  const auto& data = j.at("data");
  require(static_cast<Index>(data.size()) == m.rows(), Errc::ParseError, "matrix row count mismatch");
  for (Index r = 0; r < m.rows(); ++r) {
    const auto& row = data[static_cast<std::size_t>(r)];
    require(static_cast<Index>(row.size()) == m.cols(), Errc::ParseError, "matrix column count mismatch");
    for (Index c = 0; c < m.cols(); ++c) m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

}  // namespace

nlohmann::json to_json(const GroupFit& fit) {
  nlohmann::json subjects = nlohmann::json::array();
  for (const auto& s : fit.subjects) {
    nlohmann::json js{{"signatures", matrix_json(s.signatures.values)}, {"loss_history", s.loss_history}};
    if (s.params) {
      nlohmann::json layers = nlohmann::json::array();
      for (const auto& l : s.params->layers) {
        std::vector<double> bias(l.bias.data(), l.bias.data() + l.bias.size());
        layers.push_back({{"weight", matrix_json(l.weight)}, {"bias", bias}});
      }
      js["params"] = {{"layer_sizes", s.params->layer_sizes}, {"layers", layers}};
    }
    subjects.push_back(std::move(js));
  }
  return {{"conditions", fit.signatures.conditions},
          {"activation", std::string(to_string(fit.activation))},
          {"signatures", matrix_json(fit.signatures.values)},
          {"subjects", subjects}};
}

GroupFit group_fit_from_json(const nlohmann::json& j) {
  try {
    GroupFit fit;
    fit.signatures.conditions = j.at("conditions").get<std::vector<std::string>>();
    fit.signatures.values = matrix_from_json(j.at("signatures"));
    fit.activation = parse_activation(j.at("activation").get<std::string>());
    for (const auto& js : j.at("subjects")) {
      SubjectFit s;
      s.signatures = {matrix_from_json(js.at("signatures")), fit.signatures.conditions};
      s.loss_history = js.at("loss_history").get<std::vector<double>>();
      if (js.contains("params")) {
        NetworkParameters p;
        p.layer_sizes = js["params"].at("layer_sizes").get<std::vector<Index>>();
        for (const auto& jl : js["params"].at("layers")) {
          const auto bias = jl.at("bias").get<std::vector<double>>();
          p.layers.push_back({matrix_from_json(jl.at("weight")),
                              Eigen::Map<const Vector>(bias.data(), static_cast<Index>(bias.size()))});
        }
        s.params = std::move(p);
      }
      fit.subjects.push_back(std::move(s));
    }
    return fit;
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::ParseError, e.what());
  }
}

}  // namespace drsl
