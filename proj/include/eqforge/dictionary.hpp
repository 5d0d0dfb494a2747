#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace eqforge {

// Exponents over the SI base dimensions, in the order
// length, time, mass, current, temperature, amount, luminosity.
inline constexpr std::size_t kBaseDimensions = 7;
using Dimension = std::array<int, kBaseDimensions>;

/// Parses "L T^-1", "m s^-2" style strings. Symbols: L/m, T/s, M/kg, I/A,
/// Theta/K, N/mol, J/cd. "1" or "-" is dimensionless.
Dimension parse_dimension(std::string_view text);
std::string format_dimension(const Dimension& dimension);

struct VariableSpec {
  std::string name;
  std::optional<Dimension> dimension;
  // Physical constants (e.g. gravity). A monomial built only from constants
  // is an intercept in disguise and is dropped from dimensional dictionaries.
  bool constant = false;
};

/// A monomial over named variables. Factors are kept in the declaration
/// order of the owning dictionary with zero exponents omitted.
class BasisTerm {
 public:
  using Factor = std::pair<std::string, unsigned>;

  BasisTerm() = default;
  explicit BasisTerm(std::vector<Factor> factors);

  const std::vector<Factor>& factors() const { return factors_; }
  unsigned degree() const;
  bool is_constant() const { return factors_.empty(); }
  unsigned exponent_of(std::string_view name) const;

  /// Canonical display string: "1", "x", "x^2 y".
  const std::string& label() const { return label_; }

  /// Evaluates the monomial; `values` is aligned with `variables`.
  double evaluate(std::span<const VariableSpec> variables, std::span<const double> values) const;

  friend bool operator==(const BasisTerm& a, const BasisTerm& b) { return a.factors_ == b.factors_; }

 private:
  std::vector<Factor> factors_;
  std::string label_ = "1";
};

/// Parses a canonical label back into a term. Factor order follows the
/// declaration order of `variables`, so "y x" and "x y" parse identically.
BasisTerm parse_term(std::string_view label, std::span<const VariableSpec> variables);

class Dictionary {
 public:
  Dictionary() = default;
  Dictionary(std::vector<VariableSpec> variables, std::vector<BasisTerm> terms,
             std::optional<Dimension> target_dimension = std::nullopt);

  const std::vector<VariableSpec>& variables() const { return variables_; }
  const std::vector<BasisTerm>& terms() const { return terms_; }
  const std::optional<Dimension>& target_dimension() const { return target_dimension_; }
  std::size_t size() const { return terms_.size(); }
  bool empty() const { return terms_.empty(); }
  unsigned max_degree() const;

  std::vector<std::string> labels() const;
  std::optional<std::size_t> index_of(std::string_view label) const;
  std::optional<std::size_t> variable_index(std::string_view name) const;

  /// Sum of exponent-weighted variable dimensions. Undimensioned variables
  /// count as dimensionless.
  Dimension term_dimension(const BasisTerm& term) const;

 private:
  std::vector<VariableSpec> variables_;
  std::vector<BasisTerm> terms_;
  std::optional<Dimension> target_dimension_;
};

/// All monomials of total degree <= `degree`, graded then lexicographic in
/// declaration order ({x, y}, 2 -> 1, x, y, x^2, x y, y^2).
Dictionary monomials_up_to_degree(std::vector<VariableSpec> variables, unsigned degree);

struct DimensionalOptions {
  // Labels removed after filtering, typically the regression target itself.
  std::vector<std::string> exclude_terms;
};

/// Monomials up to `degree` whose aggregate dimension equals `target`. An
/// empty result is returned as an empty dictionary, not an error.
Dictionary dimensional_dictionary(std::vector<VariableSpec> variables, unsigned degree, const Dimension& target,
                                  const DimensionalOptions& options = {});

/// Everything needed to rebuild a dictionary: plain monomials when
/// `target_dimension` is empty, the dimensional filter otherwise.
struct DictionarySpec {
  std::vector<VariableSpec> variables;
  unsigned degree = 0;
  std::optional<Dimension> target_dimension;
  std::vector<std::string> exclude_terms;

  Dictionary build() const;
};

struct DesignMatrix {
  Eigen::MatrixXd matrix;                   // kept rows x terms
  std::vector<std::size_t> kept_rows;       // indices into the sample matrix
  std::vector<std::size_t> rejected_rows;   // rows with non-finite inputs
};

/// Evaluates every term at every sample. `column_names` names the columns of
/// `samples`; dictionary variables are looked up by name. Rows containing a
/// non-finite value in a used column are dropped and reported.
DesignMatrix evaluate(const Dictionary& dictionary, const Eigen::MatrixXd& samples,
                      std::span<const std::string> column_names);

/// Same, with the columns of `samples` already in variable order.
DesignMatrix evaluate(const Dictionary& dictionary, const Eigen::MatrixXd& samples);

}  // namespace eqforge
