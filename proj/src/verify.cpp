#include "cfaudit/verify.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "cfaudit/fairness.hpp"
#include "cfaudit/graph.hpp"

namespace cfaudit {

namespace {

constexpr double kMatchTol = 1e-12;
constexpr double kMinGroupSelection = 0.02;
constexpr std::size_t kMaxMessages = 5;

double unit_double(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::uint64_t trial_seed(std::uint64_t seed, std::size_t trial) {
  return seed + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(trial + 1);
}

}  // namespace

Scm xor_sel() {
  ScmBuilder b;
  b.add_noise("U_A", {"0", "1"}, {0.5, 0.5});
  b.add_noise("U_X", {"0", "1"}, {0.5, 0.5});
  b.add_observed("A", {"0", "1"}, {"U_A"}, {0, 1});
  b.add_observed("X", {"0", "1"}, {"A", "U_X"}, {0, 1, 1, 0});
  b.add_observed("S", {"0", "1"}, {"X"}, {0, 1});
  return b.build();
}

Scm or_sel() {
  ScmBuilder b;
  b.add_noise("U_A", {"0", "1"}, {0.5, 0.5});
  b.add_noise("U_X", {"0", "1"}, {0.5, 0.5});
  b.add_observed("A", {"0", "1"}, {"U_A"}, {0, 1});
  b.add_observed("X", {"0", "1"}, {"A", "U_X"}, {0, 1, 1, 1});
  b.add_observed("S", {"0", "1"}, {"X"}, {0, 1});
  return b.build();
}

Scm xor_sel_dependent() {
  ScmBuilder b;
  b.add_noise_deferred("U_A", {"0", "1"});
  b.add_noise_deferred("U_X", {"0", "1"});
  b.add_observed("A", {"0", "1"}, {"U_A"}, {0, 1});
  b.add_observed("X", {"0", "1"}, {"A", "U_X"}, {0, 1, 1, 0});
  b.add_observed("S", {"0", "1"}, {"X"}, {0, 1});
  b.joint_noise({0.25, 0.25, 0.05, 0.45});
  return b.build();
}

GeneratedModel random_model(std::uint64_t seed, std::size_t max_covariates, SelectionMode mode) {
  if (max_covariates < 1) throw validation_error("max_covariates must be at least 1");
  std::mt19937_64 rng(seed);
  while (true) {
    ScmBuilder b;
    double theta = 0.2 + 0.6 * unit_double(rng);
    b.add_noise("U_A", {"0", "1"}, {1.0 - theta, theta});
    b.add_observed("A", {"0", "1"}, {"U_A"}, {0, 1});

    std::size_t k = 1 + rng() % max_covariates;
    std::vector<std::string> covariates;
    for (std::size_t i = 1; i <= k; ++i) {
      std::string name = "X" + std::to_string(i);
      std::string noise = "U_" + name;
      double p = 0.1 + 0.8 * unit_double(rng);
      b.add_noise(noise, {"0", "1"}, {1.0 - p, p});
      std::vector<std::string> parents;
      if (unit_double(rng) < 0.7) parents.push_back("A");
      for (const auto& earlier : covariates) {
        if (unit_double(rng) < 0.4) parents.push_back(earlier);
      }
      parents.push_back(noise);
      std::vector<int> table(std::size_t{1} << parents.size());
      for (auto& cell : table) cell = static_cast<int>(rng() % 2);
      b.add_observed(name, {"0", "1"}, std::move(parents), std::move(table));
      covariates.push_back(name);
    }

    std::optional<SelectionSpec> selection;
    switch (mode) {
      case SelectionMode::none:
        break;
      case SelectionMode::always_selected:
        b.add_observed("S", {"0", "1"}, {}, {1});
        selection = SelectionSpec{"S"};
        break;
      case SelectionMode::coin: {
        double p = 0.2 + 0.6 * unit_double(rng);
        b.add_noise("U_S", {"0", "1"}, {1.0 - p, p});
        b.add_observed("S", {"0", "1"}, {"U_S"}, {0, 1});
        selection = SelectionSpec{"S"};
        break;
      }
      case SelectionMode::sensitive_only: {
        double p = 0.2 + 0.6 * unit_double(rng);
        b.add_noise("U_S", {"0", "1"}, {1.0 - p, p});
        std::vector<int> table(4);
        for (auto& cell : table) cell = static_cast<int>(rng() % 2);
        b.add_observed("S", {"0", "1"}, {"A", "U_S"}, std::move(table));
        selection = SelectionSpec{"S"};
        break;
      }
      case SelectionMode::covariate_dependent: {
        double p = 0.2 + 0.6 * unit_double(rng);
        b.add_noise("U_S", {"0", "1"}, {1.0 - p, p});
        std::vector<std::string> parents;
        if (unit_double(rng) < 0.6) parents.push_back("A");
        parents.push_back(covariates[rng() % covariates.size()]);
        parents.push_back("U_S");
        std::vector<int> table(std::size_t{1} << parents.size());
        for (auto& cell : table) cell = static_cast<int>(rng() % 2);
        b.add_observed("S", {"0", "1"}, std::move(parents), std::move(table));
        selection = SelectionSpec{"S"};
        break;
      }
    }

    Scm scm = b.build();
    if (selection) {
      JointTable as = joint_distribution(scm, {"A", "S"});
      bool ok = true;
      for (const auto& a : {std::string("0"), std::string("1")}) {
        if (as.mass({{"A", a}, {"S", "1"}}) < kMinGroupSelection) {
          ok = false;
          break;
        }
      }
      if (!ok) continue;
    }
    return GeneratedModel{std::move(scm), "A", std::move(selection)};
  }
}

namespace {

void record_failure(SuiteResult& result, const std::string& message) {
  result.failures++;
  if (result.messages.size() < kMaxMessages) result.messages.push_back(message);
}

// Worlds-by-groups independence deviation computed through abduction and
// intervention directly, bypassing the parallel-world table. Used as an
// independent oracle for the existence suite.
double oracle_selected_ignorability_deviation(const Scm& scm, const std::string& sensitive,
                                              const std::string& selection,
                                              const std::vector<std::string>& covariates) {
  const auto& dom = scm.variable(sensitive).domain;
  double worst = 0.0;
  for (const auto& a : dom) {
    std::vector<JointTable> by_group;
    for (const auto& alpha : dom) {
      by_group.push_back(counterfactual_distribution(
          scm, {{sensitive, alpha}, {selection, "1"}}, {{sensitive, a}}, covariates));
    }
    for (std::size_t i = 0; i < by_group.size(); ++i) {
      for (std::size_t j = i + 1; j < by_group.size(); ++j) {
        worst = std::max(worst, by_group[i].max_cell_difference(by_group[j]));
      }
    }
  }
  return worst;
}

// P(coordinate-copy(world) = v | A = alpha, S = 1) pairwise deviation for
// one world; equals the demographic-parity gap of the posterior-draw
// predictor for that world by the law of total expectation.
double coordinate_deviation(const PotentialOutcomeTable& pot, const std::string& world,
                            const std::string& coordinate) {
  const JointTable& joint = pot.joint();
  const auto& avals = pot.sensitive_domain();
  std::string copy = world_copy_name(coordinate, world);
  JointTable m = joint.marginal({pot.sensitive(), copy, *pot.selection_variable()});
  std::size_t ny = m.scope()[1].domain.size();
  const auto& sdom = m.scope()[2].domain;
  std::size_t ns = sdom.size();
  std::size_t sel_one =
      static_cast<std::size_t>(std::find(sdom.begin(), sdom.end(), "1") - sdom.begin());

  std::vector<std::vector<double>> cond(avals.size(), std::vector<double>(ny, 0.0));
  for (std::size_t a = 0; a < avals.size(); ++a) {
    double mass = 0.0;
    for (std::size_t y = 0; y < ny; ++y) {
      double p = m.probabilities()[(a * ny + y) * ns + sel_one];
      cond[a][y] = p;
      mass += p;
    }
    if (mass <= 0.0) {
      throw zero_probability_error("sensitive value '" + avals[a] + "' is never selected");
    }
    for (double& v : cond[a]) v /= mass;
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < avals.size(); ++i) {
    for (std::size_t j = i + 1; j < avals.size(); ++j) {
      for (std::size_t y = 0; y < ny; ++y) {
        worst = std::max(worst, std::abs(cond[i][y] - cond[j][y]));
      }
    }
  }
  return worst;
}

SelectionMode selection_mode_cycle(std::size_t trial) {
  static const SelectionMode cycle[] = {SelectionMode::coin, SelectionMode::covariate_dependent,
                                        SelectionMode::always_selected,
                                        SelectionMode::covariate_dependent,
                                        SelectionMode::sensitive_only};
  return cycle[trial % 5];
}

SuiteResult suite_prop1(std::size_t trials, std::uint64_t seed, double tol) {
  SuiteResult result{"prop1", trials, 0, false, {}};
  for (std::size_t t = 0; t < trials; ++t) {
    GeneratedModel m = random_model(trial_seed(seed, t), 3, selection_mode_cycle(t));
    PotentialOutcomeTable pot = potential_outcome_table(m.scm, m.sensitive, m.selection);
    IndependenceCheck ius = check_ignorability_under_selection(pot, tol);
    ExistenceResult ex = exists_independent_model(pot, tol);

    double oracle = oracle_selected_ignorability_deviation(m.scm, m.sensitive,
                                                           m.selection->variable, pot.covariates());
    if (std::abs(oracle - ius.max_deviation) > tol) {
      record_failure(result, "trial " + std::to_string(t) +
                                 ": table deviation disagrees with the abduction oracle");
      continue;
    }
    if (ex.exists != ius.holds) {
      record_failure(result, "trial " + std::to_string(t) +
                                 ": existence verdict disagrees with the independence check");
      continue;
    }
    if (ex.exists) {
      if (!ex.model->independent_noise()) {
        record_failure(result, "trial " + std::to_string(t) + ": reconstruction has joint noise");
      } else if (ex.observational_mismatch > kMatchTol) {
        record_failure(result, "trial " + std::to_string(t) + ": selected joint mismatch " +
                                   std::to_string(ex.observational_mismatch));
      } else if (ex.counterfactual_mismatch > kMatchTol) {
        record_failure(result, "trial " + std::to_string(t) + ": counterfactual cell mismatch " +
                                   std::to_string(ex.counterfactual_mismatch));
      }
    }
  }
  result.passed = result.failures == 0;
  return result;
}

SuiteResult suite_prop2(std::size_t trials, std::uint64_t seed, double tol) {
  SuiteResult result{"prop2", trials, 0, false, {}};
  for (std::size_t t = 0; t < trials; ++t) {
    GeneratedModel m = random_model(trial_seed(seed, t), 3, selection_mode_cycle(t));
    PotentialOutcomeTable pot = potential_outcome_table(m.scm, m.sensitive, m.selection);
    bool ius = check_ignorability_under_selection(pot, tol).holds;
    bool scaled = scaled_selection_check(pot, tol).holds;
    if (ius != scaled) {
      record_failure(result, "trial " + std::to_string(t) + ": scaled-selection check says " +
                                 (scaled ? "holds" : "fails") + " but the independence check says " +
                                 (ius ? "holds" : "fails"));
    }
  }
  result.passed = result.failures == 0;
  return result;
}

SuiteResult suite_prop4(std::size_t trials, std::uint64_t seed, double tol) {
  SuiteResult result{"prop4", trials, 0, false, {}};
  for (std::size_t t = 0; t < trials; ++t) {
    std::uint64_t ts = trial_seed(seed, t);
    bool selected_fit = t % 2 == 1;
    GeneratedModel m = random_model(
        ts, 3, selected_fit ? selection_mode_cycle(t) : SelectionMode::none);

    const Scm* model = &m.scm;
    std::optional<Scm> rebuilt;
    if (selected_fit) {
      PotentialOutcomeTable pot = potential_outcome_table(m.scm, m.sensitive, m.selection);
      ExistenceResult ex = exists_independent_model(pot, tol);
      if (!ex.exists) continue;  // no independent model fits the selected data
      rebuilt = std::move(ex.model);
      model = &*rebuilt;
    }

    std::vector<std::string> observed = model->observed_names();
    std::vector<std::string> targets;
    for (const auto& name : observed) {
      if (name != m.sensitive && name != "S") targets.push_back(name);
    }
    std::mt19937_64 rng(ts ^ 0x5bf03635ULL);
    const std::string& target = targets[rng() % targets.size()];

    BuiltPredictor built = build_cf_fair_predictor(*model, m.sensitive, target);
    FairnessVerdict fair = check_counterfactual_fairness(*model, built.predictor, m.sensitive,
                                                         tol);
    if (!fair.holds) {
      record_failure(result, "trial " + std::to_string(t) + ": built predictor is unfair, deviation " +
                                 std::to_string(fair.deviation));
      continue;
    }
    ParityVerdict parity =
        check_demographic_parity(*model, built.predictor, m.sensitive, std::nullopt, tol);
    if (!parity.holds) {
      record_failure(result, "trial " + std::to_string(t) + ": parity gap " +
                                 std::to_string(parity.gap) + " for a fair predictor");
    }
  }
  result.passed = result.failures == 0;
  return result;
}

SuiteResult suite_cor3(std::size_t trials, std::uint64_t seed, double tol) {
  SuiteResult result{"cor3", trials, 0, false, {}};

  {
    // Fixed demonstration of the one-directional nature: the xor model fails
    // the independence check while its exact-quantity audit stays inconclusive.
    Scm scm = xor_sel();
    PotentialOutcomeTable pot = potential_outcome_table(scm, "A", SelectionSpec{"S"});
    bool ius = check_ignorability_under_selection(pot, tol).holds;
    JointTable as = joint_distribution(scm, {"A", "S"});
    AuditInput input;
    input.name = "xor-fixture";
    input.sensitive = "A";
    double sel_total = as.mass({{"S", "1"}});
    for (const auto& a : {std::string("0"), std::string("1")}) {
      input.selected_freq[a] = as.mass({{"A", a}, {"S", "1"}}) / sel_total;
      input.population_freq[a] = as.mass({{"A", a}});
    }
    input.witnesses.push_back(WitnessRow{{{"X", "1"}}, "0", 1.0, "exact model quantity"});
    AuditReport report = audit_dataset(input);
    if (ius || report.violation) {
      record_failure(result, "xor fixture: expected a failing independence check with an "
                             "inconclusive audit");
    }
  }

  for (std::size_t t = 0; t < trials; ++t) {
    GeneratedModel m = random_model(trial_seed(seed, t), 3, selection_mode_cycle(t));
    PotentialOutcomeTable pot = potential_outcome_table(m.scm, m.sensitive, m.selection);
    const auto& covs = pot.covariates();

    std::vector<std::string> scope{m.sensitive};
    scope.insert(scope.end(), covs.begin(), covs.end());
    scope.push_back(m.selection->variable);
    JointTable joint = joint_distribution(m.scm, scope);

    AuditInput input;
    input.name = "generated";
    input.sensitive = m.sensitive;
    const auto& dom = m.scm.variable(m.sensitive).domain;
    double sel_total = joint.mass({{m.selection->variable, "1"}});
    for (const auto& a : dom) {
      input.selected_freq[a] = joint.mass({{m.sensitive, a}, {m.selection->variable, "1"}}) / sel_total;
      input.population_freq[a] = joint.mass({{m.sensitive, a}});
    }
    JointTable covariate_cells = joint.marginal(covs);
    for (std::size_t cell = 0; cell < covariate_cells.cell_count(); ++cell) {
      Assignment x = covariate_cells.cell_assignment(cell);
      for (const auto& a : dom) {
        Assignment given = x;
        given[m.sensitive] = a;
        if (joint.mass(given) <= 0.0) continue;
        Assignment event{{m.selection->variable, "1"}};
        input.witnesses.push_back(
            WitnessRow{x, a, joint.conditional_mass(event, given), "exact model quantity"});
      }
    }

    AuditReport report = audit_dataset(input);
    if (report.violation) {
      bool ius = check_ignorability_under_selection(pot, tol).holds;
      if (ius) {
        record_failure(result, "trial " + std::to_string(t) +
                                   ": audit violation on a model satisfying the independence");
      }
    }
  }
  result.passed = result.failures == 0;
  return result;
}

SuiteResult suite_cor5(std::size_t trials, std::uint64_t seed, double tol) {
  SuiteResult result{"cor5", trials, 0, false, {}};
  for (std::size_t t = 0; t < trials; ++t) {
    GeneratedModel m = random_model(trial_seed(seed, t), 3, selection_mode_cycle(t));
    PotentialOutcomeTable pot = potential_outcome_table(m.scm, m.sensitive, m.selection);
    const std::string coordinate = pot.covariates().front();
    for (const auto& a : pot.sensitive_domain()) {
      Predictor draw = posterior_draw_predictor(m.scm, m.sensitive, a, coordinate);
      ParityVerdict parity =
          check_demographic_parity(m.scm, draw, m.sensitive, m.selection, tol);
      double dev = coordinate_deviation(pot, a, coordinate);
      if (std::abs(parity.gap - dev) > tol) {
        record_failure(result, "trial " + std::to_string(t) + " world " + a +
                                   ": parity gap " + std::to_string(parity.gap) +
                                   " differs from the coordinate deviation " + std::to_string(dev));
        continue;
      }
      if (dev < tol && !parity.holds) {
        record_failure(result, "trial " + std::to_string(t) + " world " + a +
                                   ": parity fails although the coordinate is independent");
      } else if (dev > tol && parity.holds) {
        record_failure(result, "trial " + std::to_string(t) + " world " + a +
                                   ": parity holds although the coordinate is dependent");
      }
    }
  }
  result.passed = result.failures == 0;
  return result;
}

SuiteResult suite_markov(std::size_t trials, std::uint64_t seed, double tol) {
  SuiteResult result{"markov", trials, 0, false, {}};
  static const SelectionMode cycle[] = {SelectionMode::none, SelectionMode::coin,
                                        SelectionMode::covariate_dependent};
  for (std::size_t t = 0; t < trials; ++t) {
    SelectionMode mode = cycle[t % 3];
    GeneratedModel m = random_model(trial_seed(seed, t), mode == SelectionMode::none ? 4 : 3, mode);
    std::vector<std::string> observed = m.scm.observed_names();
    JointTable joint = joint_distribution(m.scm, observed);
    Dag graph = scm_graph(m.scm);

    bool failed = false;
    for (std::size_t i = 0; i < observed.size() && !failed; ++i) {
      for (std::size_t j = i + 1; j < observed.size() && !failed; ++j) {
        std::vector<std::string> rest;
        for (std::size_t k = 0; k < observed.size(); ++k) {
          if (k != i && k != j) rest.push_back(observed[k]);
        }
        for (std::size_t mask = 0; mask < (std::size_t{1} << rest.size()) && !failed; ++mask) {
          std::set<std::string> given;
          for (std::size_t k = 0; k < rest.size(); ++k) {
            if (mask & (std::size_t{1} << k)) given.insert(rest[k]);
          }
          if (!d_separated(graph, {observed[i]}, {observed[j]}, given)) continue;
          double dev = ci_deviation(joint, observed[i], observed[j], given);
          if (dev >= tol) {
            record_failure(result, "trial " + std::to_string(t) + ": d-separated pair (" +
                                       observed[i] + ", " + observed[j] +
                                       ") has dependence " + std::to_string(dev));
            failed = true;
          }
        }
      }
    }
  }
  result.passed = result.failures == 0;
  return result;
}

}  // namespace

const std::vector<std::string>& verify_suite_names() {
  static const std::vector<std::string> names = {"prop1", "prop2", "prop4",
                                                 "cor3",  "cor5",  "markov"};
  return names;
}

SuiteResult run_suite(const std::string& name, std::size_t trials, std::uint64_t seed,
                      double tol) {
  if (trials == 0) throw validation_error("trial count must be positive");
  if (name == "prop1") return suite_prop1(trials, seed, tol);
  if (name == "prop2") return suite_prop2(trials, seed, tol);
  if (name == "prop4") return suite_prop4(trials, seed, tol);
  if (name == "cor3") return suite_cor3(trials, seed, tol);
  if (name == "cor5") return suite_cor5(trials, seed, tol);
  if (name == "markov") return suite_markov(trials, seed, tol);
  std::string known;
  for (const auto& n : verify_suite_names()) known += (known.empty() ? "" : ", ") + n;
  throw validation_error("unknown suite '" + name + "'; expected one of: " + known);
}

std::vector<SuiteResult> run_suites(const std::vector<std::string>& names, std::size_t trials,
                                    std::uint64_t seed, double tol) {
  std::vector<SuiteResult> results;
  for (const auto& name : names) results.push_back(run_suite(name, trials, seed, tol));
  return results;
}

}  // namespace cfaudit
