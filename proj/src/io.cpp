#include "eqforge/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "eqforge/error.hpp"

namespace eqforge {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    cells.push_back(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  for (auto& c : cells) {
    const auto b = c.find_first_not_of(" \t");
    const auto e = c.find_last_not_of(" \t");
    c = b == std::string::npos ? std::string{} : c.substr(b, e - b + 1);
  }
  return cells;
}

bool parse_number(const std::string& cell, double& out) {
  if (cell.empty() || cell == "nan" || cell == "NaN" || cell == "NA") {
    out = kNaN;
    return true;
  }
  if (cell == "inf" || cell == "+inf") {
    out = std::numeric_limits<double>::infinity();
    return true;
  }
  if (cell == "-inf") {
    out = -std::numeric_limits<double>::infinity();
    return true;
  }
  const char* first = cell.data();
  if (*first == '+') ++first;
  const char* last = cell.data() + cell.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc{} && ptr == last;
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

void finish_write(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
}

double number_or_inf(const Json& j) {
  if (j.is_null()) return std::numeric_limits<double>::infinity();
  if (!j.is_number()) throw ConfigError("expected a number");
  return j.get<double>();
}

const Json& require(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw ConfigError(std::string("model JSON is missing '") + key + "'");
  return j.at(key);
}

}  // namespace

DataTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw IoError(path.string() + " is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  DataTable table;
  table.columns = split(line);
  for (std::size_t i = 0; i < table.columns.size(); ++i) {
    if (table.columns[i].empty()) throw IoError(path.string() + ": empty column name in header");
    for (std::size_t k = 0; k < i; ++k)
      if (table.columns[k] == table.columns[i])
        throw IoError(path.string() + ": duplicate column '" + table.columns[i] + "'");
  }
  const std::size_t width = table.columns.size();
  std::vector<double> data;
  std::size_t rows = 0;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != width)
      throw IoError(path.string() + ":" + std::to_string(line_no) + ": expected " + std::to_string(width) +
                    " fields, got " + std::to_string(cells.size()));
    for (std::size_t c = 0; c < width; ++c) {
      double v;
      if (!parse_number(cells[c], v))
        throw IoError(path.string() + ":" + std::to_string(line_no) + ": not a number in column '" +
                      table.columns[c] + "': '" + cells[c] + "'");
      data.push_back(v);
    }
    ++rows;
  }
  table.values.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(width));
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < width; ++c)
      table.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = data[r * width + c];
  return table;
}

void write_csv(const std::filesystem::path& path, const DataTable& table) {
  if (static_cast<std::size_t>(table.values.cols()) != table.columns.size())
    throw SizeError("table has " + std::to_string(table.columns.size()) + " names for " +
                    std::to_string(table.values.cols()) + " columns");
  auto out = open_out(path);
  for (std::size_t c = 0; c < table.columns.size(); ++c) out << (c ? "," : "") << table.columns[c];
  out << '\n';
  for (Eigen::Index r = 0; r < table.values.rows(); ++r) {
    for (Eigen::Index c = 0; c < table.values.cols(); ++c) out << (c ? "," : "") << format_number(table.values(r, c));
    out << '\n';
  }
  finish_write(out, path);
}

Json to_json(const DiscoveredEquation& eq) {
  Json vars = Json::array();
  for (const auto& v : eq.dictionary.variables) {
    if (!v.dimension && !v.constant) {
      vars.push_back(v.name);
      continue;
    }
    Json o{{"name", v.name}};
    if (v.dimension) o["dimension"] = format_dimension(*v.dimension);
    if (v.constant) o["constant"] = true;
    vars.push_back(o);
  }
  Json dict{{"variables", vars}, {"degree", eq.dictionary.degree}};
  if (eq.dictionary.target_dimension) dict["target_dimension"] = format_dimension(*eq.dictionary.target_dimension);
  if (!eq.dictionary.exclude_terms.empty()) dict["exclude_terms"] = eq.dictionary.exclude_terms;
  Json terms = Json::array();
  for (const auto& t : eq.terms) terms.push_back({{"label", t.term.label()}, {"mean", t.mean}, {"std", t.std}});
  auto finite_or_null = [](double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); };
  return Json{{"target", eq.target},
              {"dictionary", dict},
              {"terms", terms},
              {"criterion", finite_or_null(eq.criterion)},
              {"adjusted_criterion", finite_or_null(eq.adjusted_criterion)},
              {"subsample",
               {{"size", eq.subsample_size}, {"count", eq.n_subsamples}, {"winner_indices", eq.winner_indices}}},
              {"seed", eq.seed}};
}

DiscoveredEquation equation_from_json(const Json& j) {
  try {
    DiscoveredEquation eq;
    eq.target = require(j, "target").get<std::string>();
    const Json& dict = require(j, "dictionary");
    for (const auto& v : require(dict, "variables")) {
      VariableSpec spec;
      if (v.is_string()) {
        spec.name = v.get<std::string>();
      } else {
        spec.name = require(v, "name").get<std::string>();
        if (v.contains("dimension")) spec.dimension = parse_dimension(v.at("dimension").get<std::string>());
        spec.constant = v.value("constant", false);
      }
      eq.dictionary.variables.push_back(spec);
    }
    eq.dictionary.degree = require(dict, "degree").get<unsigned>();
    if (dict.contains("target_dimension") && !dict.at("target_dimension").is_null())
      eq.dictionary.target_dimension = parse_dimension(dict.at("target_dimension").get<std::string>());
    if (dict.contains("exclude_terms")) eq.dictionary.exclude_terms = dict.at("exclude_terms").get<std::vector<std::string>>();
    for (const auto& t : require(j, "terms")) {
      DiscoveredTerm term;
      term.term = parse_term(require(t, "label").get<std::string>(), eq.dictionary.variables);
      term.mean = require(t, "mean").get<double>();
      term.std = require(t, "std").get<double>();
      if (!std::isfinite(term.mean)) throw ConfigError("non-finite weight for " + term.term.label());
      eq.terms.push_back(term);
    }
    eq.criterion = number_or_inf(require(j, "criterion"));
    eq.adjusted_criterion = number_or_inf(require(j, "adjusted_criterion"));
    const Json& sub = require(j, "subsample");
    eq.subsample_size = require(sub, "size").get<std::size_t>();
    eq.n_subsamples = require(sub, "count").get<std::size_t>();
    eq.winner_indices = require(sub, "winner_indices").get<std::vector<std::size_t>>();
    eq.seed = require(j, "seed").get<std::uint64_t>();
    return eq;
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("malformed model JSON: ") + e.what());
  }
}

void write_json(const std::filesystem::path& path, const Json& json) {
  auto out = open_out(path);
  out << json.dump(2) << '\n';
  finish_write(out, path);
}

Json read_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

void write_model(const std::filesystem::path& path, const DiscoveredEquation& equation) {
  write_json(path, to_json(equation));
}

DiscoveredEquation read_model(const std::filesystem::path& path) { return equation_from_json(read_json(path)); }

Json to_json(const NoiseSpec& noise) {
  return Json{{"gaussian_sigma", noise.gaussian_sigma},
              {"outlier_fraction", noise.outlier_fraction},
              {"outlier_low", noise.outlier_low},
              {"outlier_high", noise.outlier_high},
              {"seed", noise.seed},
              {"stage", noise.stage == NoiseStage::kAfterDifferencing ? "after_differencing" : "before_differencing"}};
}

DataTable sweep_table(const std::vector<SweepCell>& cells) {
  DataTable t;
  t.columns = {"S", "L", "trials", "success_rate", "median_criterion", "median_adjusted_criterion", "mean_seconds"};
  t.values.resize(static_cast<Eigen::Index>(cells.size()), 7);
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto& c = cells[i];
    t.values.row(static_cast<Eigen::Index>(i)) << static_cast<double>(c.subsample_size),
        static_cast<double>(c.n_subsamples), static_cast<double>(c.trials), c.success_rate, c.median_criterion,
        c.median_adjusted_criterion, c.mean_seconds;
  }
  return t;
}

void write_prediction_csv(const std::filesystem::path& path, const PredictionReport& report) {
  auto out = open_out(path);
  out << "t,x,predicted,reference,squared_error\n";
  for (Eigen::Index i = 0; i < report.predicted.rows(); ++i)
    for (Eigen::Index j = 0; j < report.predicted.cols(); ++j) {
      const double p = report.predicted(i, j);
      const double r = report.reference(i, j);
      const double x = j < report.x.size() ? report.x[j] : static_cast<double>(j);
      out << format_number(report.times[i]) << ',' << format_number(x) << ',' << format_number(p) << ','
          << format_number(r) << ',' << format_number((p - r) * (p - r)) << '\n';
    }
  finish_write(out, path);
}

void write_prediction_csv(const std::filesystem::path& path, const PredictionReport& report,
                          const std::vector<std::string>& state_names) {
  if (static_cast<std::size_t>(report.predicted.cols()) != state_names.size())
    throw SizeError("one state name per predicted column is required");
  auto out = open_out(path);
  out << "t,state,predicted,reference,squared_error\n";
  for (Eigen::Index i = 0; i < report.predicted.rows(); ++i)
    for (Eigen::Index j = 0; j < report.predicted.cols(); ++j) {
      const double p = report.predicted(i, j);
      const double r = report.reference(i, j);
      out << format_number(report.times[i]) << ',' << state_names[static_cast<std::size_t>(j)] << ','
          << format_number(p) << ',' << format_number(r) << ',' << format_number((p - r) * (p - r)) << '\n';
    }
  finish_write(out, path);
}

}  // namespace eqforge
