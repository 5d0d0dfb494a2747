#include "eqforge/dictionary.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "eqforge/error.hpp"

namespace eqforge {

namespace {

struct UnitSymbol {
  std::string_view symbol;
  std::size_t slot;
};

constexpr std::array<UnitSymbol, 14> kUnitSymbols{{
    {"L", 0}, {"m", 0}, {"T", 1}, {"s", 1}, {"M", 2}, {"kg", 2}, {"I", 3},
    {"A", 3}, {"Theta", 4}, {"K", 4}, {"N", 5}, {"mol", 5}, {"J", 6}, {"cd", 6},
}};

constexpr std::array<std::string_view, kBaseDimensions> kCanonicalSymbols{"L", "T", "M", "I", "Theta", "N", "J"};

void check_unique_names(std::span<const VariableSpec> variables) {
  std::set<std::string_view> seen;
  for (const auto& v : variables) {
    if (v.name.empty()) throw ConfigError("variable name must not be empty");
    if (v.name.find_first_of(" ^") != std::string::npos)
      throw ConfigError("variable name '" + v.name + "' must not contain spaces or '^'");
    if (!seen.insert(v.name).second) throw ConfigError("duplicate variable name '" + v.name + "'");
  }
}

// Exponent vectors summing to `degree`, first variable's exponent descending.
void enumerate_degree(std::size_t n, unsigned degree, std::vector<unsigned>& current, std::size_t pos,
                      std::vector<std::vector<unsigned>>& out) {
  if (pos + 1 == n) {
    current[pos] = degree;
    out.push_back(current);
    return;
  }
  for (unsigned e = degree + 1; e-- > 0;) {
    current[pos] = e;
    enumerate_degree(n, degree - e, current, pos + 1, out);
  }
}

BasisTerm term_from_exponents(std::span<const VariableSpec> variables, const std::vector<unsigned>& exponents) {
  std::vector<BasisTerm::Factor> factors;
  for (std::size_t i = 0; i < variables.size(); ++i)
    if (exponents[i] > 0) factors.emplace_back(variables[i].name, exponents[i]);
  return BasisTerm(std::move(factors));
}

}  // namespace

Dimension parse_dimension(std::string_view text) {
  Dimension dim{};
  std::istringstream in{std::string(text)};
  std::string token;
  while (in >> token) {
    if (token == "1" || token == "-") continue;
    std::string symbol = token;
    int exponent = 1;
    if (auto caret = token.find('^'); caret != std::string::npos) {
      symbol = token.substr(0, caret);
      try {
        std::size_t used = 0;
        exponent = std::stoi(token.substr(caret + 1), &used);
        if (used != token.size() - caret - 1) throw std::invalid_argument(token);
      } catch (const std::exception&) {
        throw ConfigError("bad dimension exponent in '" + token + "'");
      }
    }
    auto it = std::find_if(kUnitSymbols.begin(), kUnitSymbols.end(),
                           [&](const UnitSymbol& u) { return u.symbol == symbol; });
    if (it == kUnitSymbols.end()) throw ConfigError("unknown dimension symbol '" + symbol + "'");
    dim[it->slot] += exponent;
  }
  return dim;
}

std::string format_dimension(const Dimension& dimension) {
  std::string out;
  for (std::size_t i = 0; i < kBaseDimensions; ++i) {
    if (dimension[i] == 0) continue;
    if (!out.empty()) out += ' ';
    out += kCanonicalSymbols[i];
    if (dimension[i] != 1) out += "^" + std::to_string(dimension[i]);
  }
  return out.empty() ? "1" : out;
}

BasisTerm::BasisTerm(std::vector<Factor> factors) : factors_(std::move(factors)) {
  std::erase_if(factors_, [](const Factor& f) { return f.second == 0; });
  if (factors_.empty()) {
    label_ = "1";
    return;
  }
  label_.clear();
  for (const auto& [name, exponent] : factors_) {
    if (!label_.empty()) label_ += ' ';
    label_ += name;
    if (exponent != 1) label_ += "^" + std::to_string(exponent);
  }
}

unsigned BasisTerm::degree() const {
  unsigned d = 0;
  for (const auto& f : factors_) d += f.second;
  return d;
}

unsigned BasisTerm::exponent_of(std::string_view name) const {
  for (const auto& [n, e] : factors_)
    if (n == name) return e;
  return 0;
}

double BasisTerm::evaluate(std::span<const VariableSpec> variables, std::span<const double> values) const {
  double result = 1.0;
  for (const auto& [name, exponent] : factors_) {
    auto it = std::find_if(variables.begin(), variables.end(), [&](const VariableSpec& v) { return v.name == name; });
    if (it == variables.end()) throw ConfigError("term '" + label_ + "' references unknown variable '" + name + "'");
    const double x = values[static_cast<std::size_t>(it - variables.begin())];
    double p = 1.0;
    for (unsigned k = 0; k < exponent; ++k) p *= x;
    result *= p;
  }
  return result;
}

BasisTerm parse_term(std::string_view label, std::span<const VariableSpec> variables) {
  std::vector<unsigned> exponents(variables.size(), 0);
  std::istringstream in{std::string(label)};
  std::string token;
  bool any = false;
  while (in >> token) {
    any = true;
    if (token == "1") continue;
    std::string name = token;
    unsigned exponent = 1;
    if (auto caret = token.find('^'); caret != std::string::npos) {
      name = token.substr(0, caret);
      try {
        exponent = static_cast<unsigned>(std::stoul(token.substr(caret + 1)));
      } catch (const std::exception&) {
        throw ConfigError("bad exponent in term '" + std::string(label) + "'");
      }
    }
    auto it = std::find_if(variables.begin(), variables.end(), [&](const VariableSpec& v) { return v.name == name; });
    if (it == variables.end())
      throw ConfigError("term '" + std::string(label) + "' references unknown variable '" + name + "'");
    exponents[static_cast<std::size_t>(it - variables.begin())] += exponent;
  }
  if (!any) throw ConfigError("empty term label");
  return term_from_exponents(variables, exponents);
}

Dictionary::Dictionary(std::vector<VariableSpec> variables, std::vector<BasisTerm> terms,
                       std::optional<Dimension> target_dimension)
    : variables_(std::move(variables)), terms_(std::move(terms)), target_dimension_(target_dimension) {
  check_unique_names(variables_);
  for (std::size_t i = 0; i < terms_.size(); ++i) {
    for (const auto& [name, exponent] : terms_[i].factors())
      if (!variable_index(name)) throw ConfigError("term '" + terms_[i].label() + "' uses undeclared variable");
    for (std::size_t j = 0; j < i; ++j)
      if (terms_[i] == terms_[j]) throw ConfigError("duplicate term '" + terms_[i].label() + "'");
    if (target_dimension_ && term_dimension(terms_[i]) != *target_dimension_)
      throw ConfigError("term '" + terms_[i].label() + "' does not match the target dimension");
  }
}

unsigned Dictionary::max_degree() const {
  unsigned d = 0;
  for (const auto& t : terms_) d = std::max(d, t.degree());
  return d;
}

std::vector<std::string> Dictionary::labels() const {
  std::vector<std::string> out;
  out.reserve(terms_.size());
  for (const auto& t : terms_) out.push_back(t.label());
  return out;
}

std::optional<std::size_t> Dictionary::index_of(std::string_view label) const {
  for (std::size_t i = 0; i < terms_.size(); ++i)
    if (terms_[i].label() == label) return i;
  return std::nullopt;
}

std::optional<std::size_t> Dictionary::variable_index(std::string_view name) const {
  for (std::size_t i = 0; i < variables_.size(); ++i)
    if (variables_[i].name == name) return i;
  return std::nullopt;
}

Dimension Dictionary::term_dimension(const BasisTerm& term) const {
  Dimension dim{};
  for (const auto& [name, exponent] : term.factors()) {
    const auto& var = variables_[*variable_index(name)];
    if (!var.dimension) continue;
    for (std::size_t k = 0; k < kBaseDimensions; ++k) dim[k] += static_cast<int>(exponent) * (*var.dimension)[k];
  }
  return dim;
}

Dictionary monomials_up_to_degree(std::vector<VariableSpec> variables, unsigned degree) {
  if (variables.empty()) throw ConfigError("dictionary needs at least one variable");
  check_unique_names(variables);
  std::vector<BasisTerm> terms;
  std::vector<unsigned> current(variables.size(), 0);
  for (unsigned d = 0; d <= degree; ++d) {
    std::vector<std::vector<unsigned>> exps;
    enumerate_degree(variables.size(), d, current, 0, exps);
    for (const auto& e : exps) terms.push_back(term_from_exponents(variables, e));
  }
  return Dictionary(std::move(variables), std::move(terms));
}

Dictionary dimensional_dictionary(std::vector<VariableSpec> variables, unsigned degree, const Dimension& target,
                                  const DimensionalOptions& options) {
  for (const auto& v : variables)
    if (!v.dimension) throw ConfigError("variable '" + v.name + "' has no dimension");
  Dictionary full = monomials_up_to_degree(variables, degree);
  std::vector<BasisTerm> kept;
  for (const auto& term : full.terms()) {
    if (full.term_dimension(term) != target) continue;
    const bool only_constants =
        !term.is_constant() && std::all_of(term.factors().begin(), term.factors().end(), [&](const auto& f) {
          return full.variables()[*full.variable_index(f.first)].constant;
        });
    if (only_constants) continue;
    if (std::find(options.exclude_terms.begin(), options.exclude_terms.end(), term.label()) !=
        options.exclude_terms.end())
      continue;
    kept.push_back(term);
  }
  return Dictionary(std::move(variables), std::move(kept), target);
}

Dictionary DictionarySpec::build() const {
  if (target_dimension) return dimensional_dictionary(variables, degree, *target_dimension, {exclude_terms});
  Dictionary full = monomials_up_to_degree(variables, degree);
  if (exclude_terms.empty()) return full;
  std::vector<BasisTerm> kept;
  for (const auto& term : full.terms())
    if (std::find(exclude_terms.begin(), exclude_terms.end(), term.label()) == exclude_terms.end())
      kept.push_back(term);
  return Dictionary(variables, std::move(kept));
}

DesignMatrix evaluate(const Dictionary& dictionary, const Eigen::MatrixXd& samples,
                      std::span<const std::string> column_names) {
  if (static_cast<std::size_t>(samples.cols()) != column_names.size())
    throw SizeError("sample matrix has " + std::to_string(samples.cols()) + " columns but " +
                    std::to_string(column_names.size()) + " names");
  const auto& vars = dictionary.variables();
  std::vector<Eigen::Index> source(vars.size());
  for (std::size_t v = 0; v < vars.size(); ++v) {
    auto it = std::find(column_names.begin(), column_names.end(), vars[v].name);
    if (it == column_names.end()) throw ConfigError("no sample column named '" + vars[v].name + "'");
    source[v] = static_cast<Eigen::Index>(it - column_names.begin());
  }
  Eigen::MatrixXd ordered(samples.rows(), static_cast<Eigen::Index>(vars.size()));
  for (std::size_t v = 0; v < vars.size(); ++v) ordered.col(static_cast<Eigen::Index>(v)) = samples.col(source[v]);
  return evaluate(dictionary, ordered);
}

DesignMatrix evaluate(const Dictionary& dictionary, const Eigen::MatrixXd& samples) {
  const auto& vars = dictionary.variables();
  if (static_cast<std::size_t>(samples.cols()) != vars.size())
    throw SizeError("sample matrix column count does not match the dictionary variables");
  DesignMatrix out;
  for (Eigen::Index i = 0; i < samples.rows(); ++i) {
    if (samples.row(i).allFinite())
      out.kept_rows.push_back(static_cast<std::size_t>(i));
    else
      out.rejected_rows.push_back(static_cast<std::size_t>(i));
  }
  const auto& terms = dictionary.terms();
  out.matrix.resize(static_cast<Eigen::Index>(out.kept_rows.size()), static_cast<Eigen::Index>(terms.size()));
  std::vector<double> row(vars.size());
  for (std::size_t r = 0; r < out.kept_rows.size(); ++r) {
    for (std::size_t v = 0; v < vars.size(); ++v)
      row[v] = samples(static_cast<Eigen::Index>(out.kept_rows[r]), static_cast<Eigen::Index>(v));
    for (std::size_t j = 0; j < terms.size(); ++j)
      out.matrix(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = terms[j].evaluate(vars, row);
  }
  return out;
}

}  // namespace eqforge
