#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "cfaudit/error.hpp"

namespace cfaudit {

// A named assignment of values to variables, keyed by variable name.
// Values are domain labels, not indices.
using Assignment = std::map<std::string, std::string>;

enum class VarKind { observed, noise };

struct VariableSpec {
  std::string name;
  std::vector<std::string> domain;  // value labels, order fixes the index
  VarKind kind = VarKind::observed;
};

// Exact probability table over a finite scope of discrete variables.
// Cells are stored flat in mixed-radix order: the last scope variable
// varies fastest. Probabilities are nonnegative; a full joint sums to 1.
class JointTable {
 public:
  JointTable(std::vector<VariableSpec> scope, std::vector<double> probabilities);

  const std::vector<VariableSpec>& scope() const { return scope_; }
  const std::vector<double>& probabilities() const { return probs_; }
  std::size_t cell_count() const { return probs_.size(); }
  double total_mass() const;

  bool has_variable(const std::string& name) const;
  int scope_index(const std::string& name) const;  // throws validation on miss

  // Probability of one fully specified cell.
  double probability(const Assignment& full) const;
  // Total mass of all cells matching a partial assignment.
  double mass(const Assignment& partial) const;
  // Mass of `event` within the sub-population matching `given`.
  // Throws zero_probability if the conditioning event has mass 0.
  double conditional_mass(const Assignment& event, const Assignment& given) const;

  JointTable marginal(const std::vector<std::string>& keep) const;
  // Scope shrinks to the non-evidence variables; probabilities renormalize.
  JointTable conditioned(const Assignment& evidence) const;

  // Decode a flat cell index into per-variable value indices.
  std::vector<int> decode(std::size_t flat) const;
  Assignment cell_assignment(std::size_t flat) const;

  // Largest absolute cell difference; scopes must match exactly.
  double max_cell_difference(const JointTable& other) const;

 private:
  std::vector<VariableSpec> scope_;
  std::vector<double> probs_;
  std::vector<std::size_t> strides_;
  std::unordered_map<std::string, int> index_;

  friend class Scm;
};

// Discrete structural causal model with exhaustive exact inference.
// Noise variables are parentless and carry probability distributions;
// every observed variable is a total deterministic function of its
// parents (observed and noise alike). All randomness enters via noise.
class Scm {
 public:
  static constexpr std::uint64_t kDefaultEnumerationCap = std::uint64_t{1} << 24;

  const std::vector<VariableSpec>& variables() const { return vars_; }
  const VariableSpec& variable(const std::string& name) const;
  bool has_variable(const std::string& name) const;
  std::vector<std::string> observed_names() const;
  std::vector<std::string> noise_names() const;
  const std::vector<std::string>& parent_names(const std::string& name) const;
  std::vector<std::string> child_names(const std::string& name) const;

  bool independent_noise() const { return independent_noise_; }
  // Independent models only: the distribution vector of one noise variable.
  const std::vector<double>& noise_distribution(const std::string& name) const;
  // Dependent models only: the joint table over all noise variables.
  JointTable noise_joint() const;

  std::uint64_t noise_assignment_count() const;
  std::uint64_t enumeration_cap() const { return cap_; }

  // Equation lookup for one observed variable under a full parent assignment.
  std::string equation_value(const std::string& name, const Assignment& parents) const;
  // Flat equation table of one observed variable: mixed-radix over its
  // parents in parent-list order, last parent fastest.
  const std::vector<int>& equation_table(const std::string& name) const;

 private:
  Scm() = default;

  std::vector<VariableSpec> vars_;
  std::unordered_map<std::string, int> index_;
  std::vector<std::vector<int>> parents_;        // per variable, indices into vars_
  std::vector<std::vector<std::string>> parent_names_;
  std::vector<std::vector<int>> tables_;         // observed: flat over parent domains
  std::vector<std::vector<double>> dists_;       // noise, independent case
  bool independent_noise_ = true;
  std::vector<double> joint_noise_;              // dependent case, over noise_order_
  std::vector<int> noise_order_;                 // noise variable indices, declaration order
  std::vector<int> topo_;                        // observed variable indices, dependency order
  std::uint64_t cap_ = kDefaultEnumerationCap;

  friend class ScmBuilder;
  friend class Propagator;
};

// Incremental construction with full validation at build().
class ScmBuilder {
 public:
  using EquationFn = std::function<int(std::span<const int>)>;

  ScmBuilder& add_noise(const std::string& name, std::vector<std::string> domain,
                        std::vector<double> distribution);
  // Noise variable whose distribution comes from a later joint_noise() call.
  ScmBuilder& add_noise_deferred(const std::string& name, std::vector<std::string> domain);
  ScmBuilder& add_observed(const std::string& name, std::vector<std::string> domain,
                           std::vector<std::string> parents, std::vector<int> table);
  // Equation given as a function of parent value indices; compiled to a table.
  ScmBuilder& add_observed_fn(const std::string& name, std::vector<std::string> domain,
                              std::vector<std::string> parents, const EquationFn& fn);
  // Joint distribution over all noise variables, declaration order,
  // last variable fastest. Marks the model as dependent-noise.
  ScmBuilder& joint_noise(std::vector<double> flat);

  Scm build(std::uint64_t enumeration_cap = Scm::kDefaultEnumerationCap) const;

 private:
  struct PendingVar {
    VariableSpec spec;
    std::vector<std::string> parents;
    std::vector<int> table;          // observed
    std::vector<double> dist;        // noise, empty if deferred
    bool deferred = false;
  };
  std::vector<PendingVar> pending_;
  std::optional<std::vector<double>> joint_;
};

// One counterfactual world: a label and the intervention defining it.
struct World {
  std::string label;
  Assignment do_values;
};

// Name of the world copy of `base` under `label`, e.g. X(1).
std::string world_copy_name(const std::string& base, const std::string& label);

// Exact joint over `scope` (any mix of observed and noise variables),
// obtained by exhaustive enumeration of noise assignments.
JointTable joint_distribution(const Scm& scm, const std::vector<std::string>& scope);

// Model after do(targets): each target becomes a parentless constant.
Scm intervene(const Scm& scm, const Assignment& do_values);

// Posterior over all noise variables given evidence.
// Throws zero_probability if the evidence is impossible.
JointTable abduct(const Scm& scm, const Assignment& evidence);

// P(targets under do(do_values) | evidence): abduction, action, prediction.
JointTable counterfactual_distribution(const Scm& scm, const Assignment& evidence,
                                       const Assignment& do_values,
                                       const std::vector<std::string>& targets);

// Shared-noise parallel-world model: factual variables plus, per world,
// a copy of every observed variable under that world's intervention.
Scm twin_network(const Scm& scm, const std::vector<World>& worlds);

enum class EdgeRole { direct, indirect };

// Distribution of the nested counterfactual in which `sensitive` takes
// `value_indirect` along its indirect-labeled outgoing edges and
// `value_direct` along its direct-labeled ones. `edge_roles` must label
// every child of `sensitive` exactly once.
JointTable path_specific_counterfactual(const Scm& scm, const std::string& sensitive,
                                        const std::string& value_indirect,
                                        const std::string& value_direct,
                                        const std::map<std::string, EdgeRole>& edge_roles,
                                        const std::string& target);

// Ancestral sampling over observed variables; deterministic in seed.
std::vector<Assignment> sample(const Scm& scm, std::size_t n, std::uint64_t seed);

}  // namespace cfaudit
