#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cfaudit/scm.hpp"
#include "cfaudit/selection.hpp"

namespace cfaudit {

enum class PredictorKind { deterministic, stochastic };

// A predictor as a table over its input domains: one row per input
// assignment (mixed-radix, last input fastest), each row either a single
// output value or a probability vector over the outputs. Rows may be left
// undefined for contexts the generating model gives probability zero;
// evaluating an undefined row is an error.
class Predictor {
 public:
  static Predictor deterministic(std::vector<VariableSpec> inputs, std::string output_name,
                                 std::vector<std::string> output_domain, std::vector<int> values);
  // One probability vector per row; an empty vector marks the row undefined.
  static Predictor stochastic(std::vector<VariableSpec> inputs, std::string output_name,
                              std::vector<std::string> output_domain,
                              std::vector<std::vector<double>> rows);

  PredictorKind kind() const { return kind_; }
  const std::vector<VariableSpec>& inputs() const { return inputs_; }
  const std::string& output_name() const { return output_name_; }
  const std::vector<std::string>& output_domain() const { return output_domain_; }

  std::size_t row_count() const { return rows_; }
  std::size_t row_index(const Assignment& context) const;
  bool defined(const Assignment& context) const;
  bool row_defined(std::size_t row) const;

  // Distribution over the output domain; one-hot for deterministic rows.
  std::vector<double> distribution(const Assignment& context) const;
  // Deterministic predictors only.
  std::string value(const Assignment& context) const;

 private:
  Predictor() = default;

  PredictorKind kind_ = PredictorKind::deterministic;
  std::vector<VariableSpec> inputs_;
  std::string output_name_;
  std::vector<std::string> output_domain_;
  std::size_t rows_ = 0;
  std::vector<int> values_;                     // deterministic; -1 = undefined
  std::vector<std::vector<double>> dist_rows_;  // stochastic; empty = undefined
};

// Text exchange format, one row per line:
//   deterministic | stochastic
//   input <name> <value> <value> ...
//   output <name> <value> <value> ...
//   <input values...> <output value>            (deterministic)
//   <input values...> <p(first)> <p(second)>...  (stochastic)
// '#' starts a comment; omitted rows stay undefined.
Predictor parse_predictor(const std::string& text);
std::string serialize_predictor(const Predictor& p);

// Verdict of the counterfactual-invariance test: over every positive-
// probability context of (inputs, sensitive value) and every alternative
// sensitive value, the predictor's counterfactual output distributions must
// coincide within the tolerance.
struct FairnessVerdict {
  bool holds = false;
  double deviation = 0.0;
  Assignment worst_context;        // input and sensitive values of the worst context
  std::string worst_world;         // alternative sensitive value
  std::string worst_output;        // output value realizing the deviation
  std::size_t contexts_checked = 0;
  std::size_t contexts_skipped = 0;  // zero-probability contexts
};

FairnessVerdict check_counterfactual_fairness(const Scm& scm, const Predictor& pred,
                                              const std::string& sensitive, double tol);

enum class Loss { accuracy };

struct BuiltPredictor {
  Predictor predictor;
  double accuracy = 0.0;       // exact probability of predicting the target
  std::size_t classes = 0;     // counterfactually connected context classes
  bool degenerate = false;     // all positive contexts fell into one class
  std::string warning;
};

// Deterministic predictor over all observed variables that is exactly
// counterfactually invariant: contexts are grouped into classes closed under
// counterfactual transitions of the sensitive value, and each class predicts
// the value of `target` with the highest class-conditional probability
// (argmax ties broken by lowest domain index). Requires independent noise
// and an ancestrally closed sensitive root.
BuiltPredictor build_cf_fair_predictor(const Scm& scm, const std::string& sensitive,
                                       const std::string& target, Loss loss = Loss::accuracy);

struct ParityVerdict {
  bool holds = false;
  double gap = 0.0;
  std::string worst_output;
  std::string group_a;
  std::string group_b;
};

// Exact P(output = y | sensitive = a [, selected]) for every y and a;
// holds iff the largest pairwise gap stays below the tolerance.
ParityVerdict check_demographic_parity(const Scm& scm, const Predictor& pred,
                                       const std::string& sensitive,
                                       const std::optional<SelectionSpec>& selection, double tol);

// Stochastic predictor whose row at each full observed context equals the
// model's posterior over the world-`a` copy of `coordinate` given that
// context. Rows at zero-probability contexts are undefined.
Predictor posterior_draw_predictor(const Scm& true_scm, const std::string& sensitive,
                                   const std::string& a, const std::string& coordinate);

}  // namespace cfaudit
