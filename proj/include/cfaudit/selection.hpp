#pragma once

#include <array>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "cfaudit/scm.hpp"

namespace cfaudit {

// Dataset-inclusion indicator living inside the host model: an observed,
// childless variable with domain {0,1}, value 1 meaning selected.
struct SelectionSpec {
  std::string variable;
};

// Validates the named variable against the selection invariants.
SelectionSpec make_selection(const Scm& scm, const std::string& variable);

// Exact joint over the factual observed variables together with one copy of
// every non-sensitive observed variable per sensitive value, produced from a
// shared-noise parallel-world network. The copy of X in the world where the
// sensitive attribute is forced to a is named world_copy_name(X, a).
//
// Construction invariants, checked when built: the factual marginal equals
// the host model's joint within 1e-12, and whenever the factual sensitive
// value is a, each world-a copy agrees with its factual variable exactly.
class PotentialOutcomeTable {
 public:
  const JointTable& joint() const { return joint_; }
  const std::string& sensitive() const { return sensitive_; }
  const std::vector<std::string>& sensitive_domain() const { return sensitive_domain_; }
  // Observed variables other than the sensitive attribute and the selection
  // indicator, in model order.
  const std::vector<std::string>& covariates() const { return covariates_; }
  const std::optional<std::string>& selection_variable() const { return selection_; }

 private:
  PotentialOutcomeTable(JointTable joint, std::string sensitive,
                        std::vector<std::string> sensitive_domain,
                        std::vector<std::string> covariates, std::optional<std::string> selection)
      : joint_(std::move(joint)),
        sensitive_(std::move(sensitive)),
        sensitive_domain_(std::move(sensitive_domain)),
        covariates_(std::move(covariates)),
        selection_(std::move(selection)) {}

  JointTable joint_;
  std::string sensitive_;
  std::vector<std::string> sensitive_domain_;
  std::vector<std::string> covariates_;
  std::optional<std::string> selection_;

  friend PotentialOutcomeTable potential_outcome_table(const Scm& scm, const std::string& sensitive,
                                                       const std::optional<SelectionSpec>& selection);
};

// Requires the sensitive attribute to be an ancestrally closed root:
// no observed parents, and its noise parents feed nothing else.
PotentialOutcomeTable potential_outcome_table(const Scm& scm, const std::string& sensitive,
                                              const std::optional<SelectionSpec>& selection);

// Result of one counterfactual-independence test. The deviation is the
// largest gap, over worlds a, covariate-copy cells x and pairs of factual
// sensitive values, between the two conditional probabilities of x.
struct IndependenceCheck {
  bool holds = false;
  double max_deviation = 0.0;
  std::string world;       // sensitive value defining the worst world
  Assignment worst_cell;   // covariate values of the worst cell, factual names
  std::string group_a;     // the two compared factual sensitive values
  std::string group_b;
};

// Counterfactual covariates independent of the realized attribute in the
// full population: for every a, the world-a covariate copies are independent
// of the factual sensitive value within tol.
IndependenceCheck check_ignorability(const PotentialOutcomeTable& pot, double tol);

// The same independence inside the selected subpopulation (conditioning on
// selection = 1). Requires a selection variable; throws zero_probability
// when some sensitive value is never selected.
IndependenceCheck check_ignorability_under_selection(const PotentialOutcomeTable& pot, double tol);

// Outcome of the search for an independent-noise, ancestrally closed model
// of the selected population. When the required independence holds, `model`
// carries the reconstruction: one noise variable distributed as the selected
// sensitive attribute, one tuple-valued noise variable distributed as the
// selected joint of all covariate copies, and covariate equations that read
// off the tuple component of the realized sensitive value.
struct ExistenceResult {
  bool exists = false;
  std::optional<Scm> model;
  IndependenceCheck check;  // the underlying independence test; the witness when none exists
  // Largest cell gaps between the reconstruction and the selected joint:
  // observational over (sensitive, covariates), counterfactual per world.
  double observational_mismatch = 0.0;
  double counterfactual_mismatch = 0.0;
};

ExistenceResult exists_independent_model(const PotentialOutcomeTable& pot, double tol);

struct ScaledSelectionFailure {
  Assignment covariates;  // the conditioning covariate cell x
  std::string a;          // conditioning sensitive value
  std::string aprime;     // compared world
  double lhs = 0.0;       // P(S(a)=1 | X=x, A=a)  / P(S=1 | A=a)
  double rhs = 0.0;       // P(S(a')=1 | X=x, A=a) / P(S=1 | A=a')
};

struct ScaledSelectionResult {
  bool holds = true;
  double max_deviation = 0.0;
  std::vector<ScaledSelectionFailure> failures;
};

// Tests, for every covariate cell with positive probability under each
// sensitive value and every ordered pair of sensitive values, equality of
// the selection probabilities scaled by the group selection rates.
// Equivalent to check_ignorability_under_selection on every model.
ScaledSelectionResult scaled_selection_check(const PotentialOutcomeTable& pot, double tol);

// p_a_sel * p_aprime / (p_aprime_sel * p_a); all arguments must lie in (0,1].
// Any witness selection probability strictly above this value rules out every
// independent-noise, ancestrally closed model of the selected population.
double corollary_bound(double p_a_sel, double p_aprime_sel, double p_a, double p_aprime);

// One covariate pattern with a known selection probability, e.g. derived
// from a deterministic inclusion rule.
struct WitnessRow {
  Assignment pattern;           // covariate column -> value
  std::string sensitive_value;  // the group the probability refers to
  double probability = 0.0;     // known P(selected | pattern, group)
  std::string origin;           // free-form provenance, echoed in reports
};

// One user assertion about why selection should preserve the counterfactual
// independence; recorded and echoed, never checked.
struct ConditionAssertion {
  bool asserted = false;
  std::string note;
};

struct AuditInput {
  std::string name;
  std::string sensitive;
  std::map<std::string, double> selected_freq;    // group -> P(group | selected)
  std::map<std::string, double> population_freq;  // group -> P(group)
  std::vector<WitnessRow> witnesses;
  // The three justification conditions, strongest first: no selection at
  // all; selection unrelated to covariates and sensitive attribute;
  // selection dependent on them but exactly balancing the scaled ratios.
  std::array<ConditionAssertion, 3> conditions;
};

// Descriptions of the three justification conditions, index-aligned with
// AuditInput::conditions.
const std::array<std::string, 3>& justification_condition_texts();

// Parses the audit-input JSON format:
//   { "name": ..., "sensitive": ...,
//     "selected_freq": {group: p, ...},
//     "population_freq": {group: p, ...},          optional, else use a preset
//     "witnesses": [{"pattern": {col: val}, "sensitive_value": g,
//                    "probability": p, "origin": text}, ...],
//     "conditions": [{"asserted": bool, "note": text} x3] }
AuditInput parse_audit_input(const std::string& text);

// Named population frequency table with previously reported bound values
// for the datasets conventionally audited against it.
struct PublishedFigure {
  std::string a;
  std::string aprime;
  double value = 0.0;
  std::string source;
};

struct PopulationPreset {
  std::string name;
  std::string provenance;
  std::map<std::string, double> population_freq;
  std::vector<PublishedFigure> published;
};

const std::vector<PopulationPreset>& population_presets();
const PopulationPreset* find_population_preset(const std::string& name);

// Fills input.population_freq from the preset. Errors if the input already
// carries population frequencies or the group labels disagree.
void apply_population_preset(AuditInput& input, const PopulationPreset& preset);

struct PairBound {
  std::string a;
  std::string aprime;
  double bound = 0.0;
};

enum class WitnessVerdict { violated, boundary, not_violated };

struct WitnessFinding {
  WitnessRow witness;
  std::string against;  // the paired group of the decisive bound
  double bound = 0.0;
  WitnessVerdict verdict = WitnessVerdict::not_violated;
};

struct AuditReport {
  std::string dataset;
  std::string sensitive;
  std::vector<PairBound> bounds;
  std::vector<WitnessFinding> findings;
  bool violation = false;
  std::string verdict;  // "no model in M_{S=1} fits" | "inconclusive"
  std::vector<std::string> conditions;  // rendered justification checklist
  std::vector<std::string> notes;
};

// Witness probabilities are compared strictly against the pairwise bounds;
// ties within tie_tol are reported as boundary, not violation.
inline constexpr double kAuditTieTolerance = 1e-9;

extern const char kVerdictNoModel[];       // "no model in M_{S=1} fits"
extern const char kVerdictInconclusive[];  // "inconclusive"

AuditReport audit_dataset(const AuditInput& input, const PopulationPreset* preset = nullptr,
                          double tie_tol = kAuditTieTolerance);

// Header row plus string cells; no quoting, comma-separated, UTF-8.
struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  std::size_t column_index(const std::string& name) const;
};

CsvTable parse_csv(const std::string& text);

// Evaluates a conjunction of comparisons ("hours>0 && income>=100") over the
// table and emits one probability-1 witness per distinct matching row,
// patterned on all non-sensitive columns. Comparisons are numeric when both
// sides parse as numbers; otherwise only = and != apply, comparing strings.
std::vector<WitnessRow> deterministic_rule_witness(const CsvTable& table, const std::string& rule,
                                                   const std::string& sensitive_column);

}  // namespace cfaudit
