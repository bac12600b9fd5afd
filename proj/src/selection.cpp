#include "cfaudit/selection.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <sstream>

#include <json.hpp>

namespace cfaudit {

using nlohmann::json;

namespace {

constexpr double kConstructionTol = 1e-12;

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

bool parse_number(const std::string& s, double& out) {
  if (s.empty()) return false;
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size();
}

void require_ancestrally_closed_root(const Scm& scm, const std::string& sensitive) {
  for (const auto& p : scm.parent_names(sensitive)) {
    const auto& pv = scm.variable(p);
    if (pv.kind == VarKind::observed) {
      throw validation_error("sensitive attribute '" + sensitive + "' has observed parent '" + p +
                             "': not an ancestrally closed root");
    }
    for (const auto& child : scm.child_names(p)) {
      if (child != sensitive) {
        throw validation_error("noise parent '" + p + "' of sensitive attribute '" + sensitive +
                               "' also feeds '" + child + "': latent confounding breaks ancestral closure");
      }
    }
  }
}

// Shared core of the two ignorability checks. When `selected` is set the
// comparison conditions on selection = 1 and a never-selected sensitive
// value is an error; otherwise zero-probability groups are skipped.
IndependenceCheck independence_check(const PotentialOutcomeTable& pot, bool selected, double tol) {
  if (!(tol > 0.0)) throw validation_error("tolerance must be positive");
  if (selected && !pot.selection_variable()) {
    throw validation_error("the parallel-world table was built without a selection variable");
  }
  const JointTable& joint = pot.joint();
  const auto& avals = pot.sensitive_domain();
  const auto& covs = pot.covariates();

  std::vector<std::vector<std::string>> cov_domains;
  for (const auto& c : covs) {
    cov_domains.push_back(joint.scope()[static_cast<std::size_t>(joint.scope_index(c))].domain);
  }

  IndependenceCheck out;
  for (const auto& world : avals) {
    std::vector<std::string> keep{pot.sensitive()};
    for (const auto& c : covs) keep.push_back(world_copy_name(c, world));
    if (selected) keep.push_back(*pot.selection_variable());
    JointTable m = joint.marginal(keep);

    std::size_t na = avals.size();
    std::size_t nx = 1;
    for (const auto& d : cov_domains) nx *= d.size();
    std::size_t ns = 1;
    std::size_t sel_one = 0;
    if (selected) {
      const auto& sdom = m.scope().back().domain;
      ns = sdom.size();
      sel_one = static_cast<std::size_t>(
          std::find(sdom.begin(), sdom.end(), "1") - sdom.begin());
    }

    const auto& probs = m.probabilities();
    std::vector<double> mass(na, 0.0);
    std::vector<std::vector<double>> px(na, std::vector<double>(nx, 0.0));
    for (std::size_t a = 0; a < na; ++a) {
      for (std::size_t x = 0; x < nx; ++x) {
        double w = 0.0;
        if (selected) {
          w = probs[(a * nx + x) * ns + sel_one];
        } else {
          for (std::size_t s = 0; s < ns; ++s) w += probs[(a * nx + x) * ns + s];
        }
        mass[a] += w;
        px[a][x] = w;
      }
      if (mass[a] > 0.0) {
        for (std::size_t x = 0; x < nx; ++x) px[a][x] /= mass[a];
      } else if (selected) {
        throw zero_probability_error("sensitive value '" + avals[a] + "' is never selected");
      }
    }

    for (std::size_t a1 = 0; a1 < na; ++a1) {
      if (mass[a1] <= 0.0) continue;
      for (std::size_t a2 = a1 + 1; a2 < na; ++a2) {
        if (mass[a2] <= 0.0) continue;
        for (std::size_t x = 0; x < nx; ++x) {
          double dev = std::abs(px[a1][x] - px[a2][x]);
          if (dev > out.max_deviation) {
            out.max_deviation = dev;
            out.world = world;
            out.group_a = avals[a1];
            out.group_b = avals[a2];
            out.worst_cell.clear();
            std::size_t rest = x;
            for (std::size_t i = covs.size(); i-- > 0;) {
              std::size_t sz = cov_domains[i].size();
              out.worst_cell[covs[i]] = cov_domains[i][rest % sz];
              rest /= sz;
            }
          }
        }
      }
    }
  }
  out.holds = out.max_deviation < tol;
  return out;
}

std::string fresh_name(std::string base, const std::vector<std::string>& taken) {
  while (std::find(taken.begin(), taken.end(), base) != taken.end()) base += "_";
  return base;
}

// Max gap, over worlds, groups and covariate-copy cells, between the
// reconstruction's counterfactual conditionals and the selected ones.
double counterfactual_mismatch(const PotentialOutcomeTable& rebuilt, const JointTable& selected,
                               const PotentialOutcomeTable& pot) {
  double worst = 0.0;
  const auto& avals = pot.sensitive_domain();
  for (const auto& world : avals) {
    std::vector<std::string> keep{pot.sensitive()};
    for (const auto& c : pot.covariates()) keep.push_back(world_copy_name(c, world));
    JointTable m1 = rebuilt.joint().marginal(keep);
    JointTable m2 = selected.marginal(keep);
    std::size_t na = avals.size();
    std::size_t nx = m1.cell_count() / na;
    for (std::size_t a = 0; a < na; ++a) {
      double g1 = 0.0, g2 = 0.0;
      for (std::size_t x = 0; x < nx; ++x) {
        g1 += m1.probabilities()[a * nx + x];
        g2 += m2.probabilities()[a * nx + x];
      }
      if (g1 <= 0.0 || g2 <= 0.0) continue;
      for (std::size_t x = 0; x < nx; ++x) {
        worst = std::max(worst, std::abs(m1.probabilities()[a * nx + x] / g1 -
                                         m2.probabilities()[a * nx + x] / g2));
      }
    }
  }
  return worst;
}

}  // namespace

SelectionSpec make_selection(const Scm& scm, const std::string& variable) {
  const auto& v = scm.variable(variable);
  if (v.kind != VarKind::observed) {
    throw validation_error("selection variable '" + variable + "' is not observed");
  }
  std::vector<std::string> dom = v.domain;
  std::sort(dom.begin(), dom.end());
  if (dom != std::vector<std::string>{"0", "1"}) {
    throw validation_error("selection variable '" + variable + "' must have domain {0,1}");
  }
  if (!scm.child_names(variable).empty()) {
    throw validation_error("selection variable '" + variable + "' must be childless");
  }
  return SelectionSpec{variable};
}

PotentialOutcomeTable potential_outcome_table(const Scm& scm, const std::string& sensitive,
                                              const std::optional<SelectionSpec>& selection) {
  const auto& sv = scm.variable(sensitive);
  if (sv.kind != VarKind::observed) {
    throw validation_error("sensitive attribute '" + sensitive + "' is not observed");
  }
  require_ancestrally_closed_root(scm, sensitive);
  if (selection) {
    make_selection(scm, selection->variable);
    if (selection->variable == sensitive) {
      throw validation_error("selection variable equals the sensitive attribute");
    }
  }

  std::vector<std::string> observed = scm.observed_names();
  std::vector<std::string> covariates;
  for (const auto& name : observed) {
    if (name == sensitive) continue;
    if (selection && name == selection->variable) continue;
    covariates.push_back(name);
  }

  std::vector<World> worlds;
  for (const auto& a : sv.domain) worlds.push_back(World{a, {{sensitive, a}}});
  Scm twin = twin_network(scm, worlds);

  std::vector<std::string> targets = observed;
  for (const auto& a : sv.domain) {
    for (const auto& name : observed) {
      if (name == sensitive) continue;
      targets.push_back(world_copy_name(name, a));
    }
  }
  JointTable joint = joint_distribution(twin, targets);

  JointTable factual = joint.marginal(observed);
  JointTable base = joint_distribution(scm, observed);
  if (factual.max_cell_difference(base) > kConstructionTol) {
    throw evaluation_error("parallel-world construction failed to preserve the factual joint");
  }
  int spos = joint.scope_index(sensitive);
  for (std::size_t flat = 0; flat < joint.cell_count(); ++flat) {
    if (joint.probabilities()[flat] == 0.0) continue;
    std::vector<int> dec = joint.decode(flat);
    const std::string& a = sv.domain[static_cast<std::size_t>(dec[static_cast<std::size_t>(spos)])];
    for (const auto& name : observed) {
      if (name == sensitive) continue;
      int fpos = joint.scope_index(name);
      int cpos = joint.scope_index(world_copy_name(name, a));
      if (dec[static_cast<std::size_t>(fpos)] != dec[static_cast<std::size_t>(cpos)]) {
        throw evaluation_error("parallel-world construction violated consistency for '" + name + "'");
      }
    }
  }

  std::optional<std::string> sel;
  if (selection) sel = selection->variable;
  return PotentialOutcomeTable(std::move(joint), sensitive, sv.domain, std::move(covariates),
                               std::move(sel));
}

IndependenceCheck check_ignorability(const PotentialOutcomeTable& pot, double tol) {
  return independence_check(pot, false, tol);
}

IndependenceCheck check_ignorability_under_selection(const PotentialOutcomeTable& pot, double tol) {
  return independence_check(pot, true, tol);
}

ExistenceResult exists_independent_model(const PotentialOutcomeTable& pot, double tol) {
  ExistenceResult out;
  out.check = check_ignorability_under_selection(pot, tol);
  if (!out.check.holds) return out;

  const JointTable& joint = pot.joint();
  const auto& sensitive = pot.sensitive();
  const auto& avals = pot.sensitive_domain();
  const auto& covs = pot.covariates();
  JointTable selected = joint.conditioned({{*pot.selection_variable(), "1"}});

  std::vector<std::string> taken{sensitive};
  taken.insert(taken.end(), covs.begin(), covs.end());
  std::string ua = fresh_name("U_" + sensitive, taken);
  std::string upot = fresh_name("U_pot", taken);

  std::vector<double> pa;
  for (const auto& a : avals) pa.push_back(selected.mass({{sensitive, a}}));

  ScmBuilder b;
  b.add_noise(ua, avals, pa);
  std::vector<int> identity;
  for (std::size_t i = 0; i < avals.size(); ++i) identity.push_back(static_cast<int>(i));
  b.add_observed(sensitive, avals, {ua}, identity);

  if (!covs.empty()) {
    std::vector<std::string> keep;
    for (const auto& a : avals) {
      for (const auto& c : covs) keep.push_back(world_copy_name(c, a));
    }
    JointTable tuple_table = selected.marginal(keep);
    std::size_t tuples = tuple_table.cell_count();

    std::vector<std::string> tuple_domain;
    for (std::size_t t = 0; t < tuples; ++t) {
      std::vector<int> dec = tuple_table.decode(t);
      std::string label;
      for (std::size_t w = 0; w < avals.size(); ++w) {
        if (w) label += "|";
        for (std::size_t i = 0; i < covs.size(); ++i) {
          if (i) label += ",";
          const auto& dom = tuple_table.scope()[w * covs.size() + i].domain;
          label += dom[static_cast<std::size_t>(dec[w * covs.size() + i])];
        }
      }
      tuple_domain.push_back(std::move(label));
    }
    b.add_noise(upot, tuple_domain, tuple_table.probabilities());

    for (std::size_t i = 0; i < covs.size(); ++i) {
      const auto& dom = joint.scope()[static_cast<std::size_t>(joint.scope_index(covs[i]))].domain;
      std::vector<int> table(avals.size() * tuples, 0);
      for (std::size_t w = 0; w < avals.size(); ++w) {
        for (std::size_t t = 0; t < tuples; ++t) {
          table[w * tuples + t] = tuple_table.decode(t)[w * covs.size() + i];
        }
      }
      b.add_observed(covs[i], dom, {sensitive, upot}, std::move(table));
    }
  }

  Scm rebuilt = b.build();

  std::vector<std::string> obs_scope{sensitive};
  obs_scope.insert(obs_scope.end(), covs.begin(), covs.end());
  JointTable j1 = joint_distribution(rebuilt, obs_scope);
  JointTable j2 = selected.marginal(obs_scope);
  double obs_gap = j1.max_cell_difference(j2);

  PotentialOutcomeTable rebuilt_pot = potential_outcome_table(rebuilt, sensitive, std::nullopt);
  out.exists = true;
  out.model = std::move(rebuilt);
  out.observational_mismatch = obs_gap;
  out.counterfactual_mismatch = counterfactual_mismatch(rebuilt_pot, selected, pot);
  return out;
}

ScaledSelectionResult scaled_selection_check(const PotentialOutcomeTable& pot, double tol) {
  if (!(tol > 0.0)) throw validation_error("tolerance must be positive");
  if (!pot.selection_variable()) {
    throw validation_error("the parallel-world table was built without a selection variable");
  }
  const JointTable& joint = pot.joint();
  const auto& sensitive = pot.sensitive();
  const auto& avals = pot.sensitive_domain();
  const auto& covs = pot.covariates();
  const auto& sel = *pot.selection_variable();

  std::vector<std::string> keep{sensitive};
  for (const auto& c : covs) keep.push_back(c);
  for (const auto& a : avals) keep.push_back(world_copy_name(sel, a));
  JointTable m = joint.marginal(keep);

  std::size_t na = avals.size();
  std::size_t nx = 1;
  std::vector<std::vector<std::string>> cov_domains;
  for (const auto& c : covs) {
    cov_domains.push_back(m.scope()[static_cast<std::size_t>(m.scope_index(c))].domain);
    nx *= cov_domains.back().size();
  }
  std::vector<std::size_t> sel_one;
  std::size_t scells = 1;
  for (std::size_t w = 0; w < na; ++w) {
    const auto& dom = m.scope()[1 + covs.size() + w].domain;
    sel_one.push_back(static_cast<std::size_t>(
        std::find(dom.begin(), dom.end(), "1") - dom.begin()));
    scells *= dom.size();
  }

  // p_ax[a][x], p_sel[a][x][w] = P(A=a, X=x, S(world w)=1), rate[a] = P(S(a)=1 | A=a).
  std::vector<std::vector<double>> p_ax(na, std::vector<double>(nx, 0.0));
  std::vector<std::vector<std::vector<double>>> p_sel(
      na, std::vector<std::vector<double>>(nx, std::vector<double>(na, 0.0)));
  const auto& probs = m.probabilities();
  for (std::size_t flat = 0; flat < probs.size(); ++flat) {
    double p = probs[flat];
    if (p == 0.0) continue;
    std::vector<int> dec = m.decode(flat);
    std::size_t a = static_cast<std::size_t>(dec[0]);
    std::size_t x = 0;
    for (std::size_t i = 0; i < covs.size(); ++i) {
      x = x * cov_domains[i].size() + static_cast<std::size_t>(dec[1 + i]);
    }
    p_ax[a][x] += p;
    for (std::size_t w = 0; w < na; ++w) {
      if (static_cast<std::size_t>(dec[1 + covs.size() + w]) == sel_one[w]) p_sel[a][x][w] += p;
    }
  }

  std::vector<double> rate(na, 0.0);
  for (std::size_t a = 0; a < na; ++a) {
    double group = 0.0, selected = 0.0;
    for (std::size_t x = 0; x < nx; ++x) {
      group += p_ax[a][x];
      selected += p_sel[a][x][a];
    }
    if (group <= 0.0 || selected <= 0.0) {
      throw zero_probability_error("sensitive value '" + avals[a] + "' is never selected");
    }
    rate[a] = selected / group;
  }

  ScaledSelectionResult out;
  constexpr std::size_t kMaxStoredFailures = 32;
  for (std::size_t a = 0; a < na; ++a) {
    for (std::size_t w = 0; w < na; ++w) {
      if (w == a) continue;
      for (std::size_t x = 0; x < nx; ++x) {
        if (p_ax[a][x] <= 0.0) continue;
        double lhs = p_sel[a][x][a] / p_ax[a][x] / rate[a];
        double rhs = p_sel[a][x][w] / p_ax[a][x] / rate[w];
        double dev = std::abs(lhs - rhs);
        out.max_deviation = std::max(out.max_deviation, dev);
        if (dev >= tol) {
          out.holds = false;
          if (out.failures.size() < kMaxStoredFailures) {
            ScaledSelectionFailure f;
            std::size_t rest = x;
            for (std::size_t i = covs.size(); i-- > 0;) {
              std::size_t sz = cov_domains[i].size();
              f.covariates[covs[i]] = cov_domains[i][rest % sz];
              rest /= sz;
            }
            f.a = avals[a];
            f.aprime = avals[w];
            f.lhs = lhs;
            f.rhs = rhs;
            out.failures.push_back(std::move(f));
          }
        }
      }
    }
  }
  return out;
}

double corollary_bound(double p_a_sel, double p_aprime_sel, double p_a, double p_aprime) {
  auto check = [](double v, const char* what) {
    if (!(v > 0.0) || v > 1.0) {
      throw validation_error(std::string(what) + " must lie in (0,1], got " + fmt(v));
    }
  };
  check(p_a_sel, "selected frequency of a");
  check(p_aprime_sel, "selected frequency of a'");
  check(p_a, "population frequency of a");
  check(p_aprime, "population frequency of a'");
  return p_a_sel * p_aprime / (p_aprime_sel * p_a);
}

const std::array<std::string, 3>& justification_condition_texts() {
  static const std::array<std::string, 3> texts = {
      "there is no selection from the general population (a census would satisfy this)",
      "selection exists but depends on neither the covariates nor the sensitive attribute "
      "(uniform random sampling)",
      "selection depends on the covariates or the sensitive attribute, yet exactly balances "
      "the scaled selection ratios"};
  return texts;
}

AuditInput parse_audit_input(const std::string& text) {
  json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded()) throw parse_error("malformed JSON in audit input");
  try {
    if (!doc.is_object()) throw parse_error("audit input must be a JSON object");
    AuditInput input;
    input.name = doc.value("name", std::string{});
    input.sensitive = doc.value("sensitive", std::string{});
    if (!doc.contains("selected_freq") || !doc["selected_freq"].is_object()) {
      throw parse_error("audit input requires a 'selected_freq' object");
    }
    for (const auto& [key, val] : doc["selected_freq"].items()) {
      input.selected_freq[key] = val.get<double>();
    }
    if (doc.contains("population_freq")) {
      for (const auto& [key, val] : doc["population_freq"].items()) {
        input.population_freq[key] = val.get<double>();
      }
    }
    if (doc.contains("witnesses")) {
      for (const auto& w : doc["witnesses"]) {
        WitnessRow row;
        if (w.contains("pattern")) {
          for (const auto& [key, val] : w["pattern"].items()) {
            row.pattern[key] = val.is_string() ? val.get<std::string>() : val.dump();
          }
        }
        row.sensitive_value = w.at("sensitive_value").get<std::string>();
        row.probability = w.at("probability").get<double>();
        row.origin = w.value("origin", std::string{});
        input.witnesses.push_back(std::move(row));
      }
    }
    if (doc.contains("conditions")) {
      const auto& arr = doc["conditions"];
      if (!arr.is_array() || arr.size() > 3) {
        throw parse_error("'conditions' must be an array of at most three entries");
      }
      for (std::size_t i = 0; i < arr.size(); ++i) {
        input.conditions[i].asserted = arr[i].value("asserted", false);
        input.conditions[i].note = arr[i].value("note", std::string{});
      }
    }
    return input;
  } catch (const json::exception& e) {
    throw parse_error(std::string("audit input: ") + e.what());
  }
}

const std::vector<PopulationPreset>& population_presets() {
  static const std::vector<PopulationPreset> presets = {
      {"us1994",
       "United States population by sex, 1994 (World Bank estimate): 50.9% female, 49.1% male",
       {{"Female", 0.509}, {"Male", 0.491}},
       {{"Female", "Male", 0.475, "previously reported bound for the Adult dataset (summary table)"},
        {"Female", "Male", 0.477, "previously reported bound for the Adult dataset (worked text)"}}},
      {"de1994",
       "Germany population by sex, 1994 (World Bank estimate): 51.6% female, 48.4% male",
       {{"Female", 0.516}, {"Male", 0.484}},
       {{"Female", "Male", 0.421,
         "previously reported bound for the German Credit dataset (summary table)"}}},
      {"us1998",
       "United States population by sex, 1998 (World Bank estimate): 49.7% female, 50.3% male",
       {{"Female", 0.497}, {"Male", 0.503}},
       {{"Female", "Male", 0.753,
         "previously reported bound for the Law School dataset (summary table)"}}},
  };
  return presets;
}

const PopulationPreset* find_population_preset(const std::string& name) {
  for (const auto& p : population_presets()) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

void apply_population_preset(AuditInput& input, const PopulationPreset& preset) {
  if (!input.population_freq.empty()) {
    throw validation_error("audit input already carries population frequencies; drop them or the preset");
  }
  for (const auto& [group, p] : input.selected_freq) {
    if (!preset.population_freq.count(group)) {
      throw validation_error("preset '" + preset.name + "' has no frequency for group '" + group + "'");
    }
    (void)p;
  }
  input.population_freq = preset.population_freq;
}

namespace {

void validate_audit_input(const AuditInput& input) {
  if (input.selected_freq.size() < 2) {
    throw validation_error("audit input needs at least two sensitive groups");
  }
  auto check_freqs = [](const std::map<std::string, double>& freqs, const char* what) {
    double total = 0.0;
    for (const auto& [group, p] : freqs) {
      if (p < 0.0 || p > 1.0) {
        throw validation_error(std::string(what) + " for group '" + group + "' outside [0,1]");
      }
      total += p;
    }
    if (std::abs(total - 1.0) > 1e-9) {
      throw validation_error(std::string(what) + " sums to " + fmt(total) + ", expected 1");
    }
  };
  check_freqs(input.selected_freq, "selected frequency");
  check_freqs(input.population_freq, "population frequency");
  if (input.selected_freq.size() != input.population_freq.size()) {
    throw validation_error("selected and population frequencies name different groups");
  }
  for (const auto& [group, p] : input.selected_freq) {
    (void)p;
    if (!input.population_freq.count(group)) {
      throw validation_error("group '" + group + "' missing from population frequencies");
    }
  }
  for (const auto& w : input.witnesses) {
    if (!input.selected_freq.count(w.sensitive_value)) {
      throw validation_error("witness names unknown group '" + w.sensitive_value + "'");
    }
    if (w.probability < 0.0 || w.probability > 1.0) {
      throw validation_error("witness probability outside [0,1]");
    }
  }
}

std::string witness_label(const WitnessRow& w) {
  std::string label = "group '" + w.sensitive_value + "'";
  if (!w.pattern.empty()) {
    label += " at ";
    bool first = true;
    for (const auto& [col, val] : w.pattern) {
      if (!first) label += ", ";
      first = false;
      label += col + "=" + val;
    }
  }
  if (!w.origin.empty()) label += " (" + w.origin + ")";
  return label;
}

}  // namespace

const char kVerdictNoModel[] = "no model in M_{S=1} fits";
const char kVerdictInconclusive[] = "inconclusive";

AuditReport audit_dataset(const AuditInput& input, const PopulationPreset* preset,
                          double tie_tol) {
  validate_audit_input(input);

  AuditReport report;
  report.dataset = input.name;
  report.sensitive = input.sensitive;

  for (const auto& [a, sel_a] : input.selected_freq) {
    for (const auto& [ap, sel_ap] : input.selected_freq) {
      if (a == ap) continue;
      double pop_a = input.population_freq.at(a);
      double pop_ap = input.population_freq.at(ap);
      if (sel_a <= 0.0 || sel_ap <= 0.0 || pop_a <= 0.0 || pop_ap <= 0.0) {
        report.notes.push_back("bound for (" + a + " vs " + ap +
                               ") is undefined: a frequency is zero");
        continue;
      }
      report.bounds.push_back(PairBound{a, ap, corollary_bound(sel_a, sel_ap, pop_a, pop_ap)});
    }
  }

  for (const auto& w : input.witnesses) {
    const PairBound* decisive = nullptr;
    const PairBound* tied = nullptr;
    const PairBound* smallest = nullptr;
    for (const auto& b : report.bounds) {
      if (b.a != w.sensitive_value) continue;
      if (!smallest || b.bound < smallest->bound) smallest = &b;
      if (w.probability > b.bound + tie_tol) {
        if (!decisive || b.bound < decisive->bound) decisive = &b;
      } else if (std::abs(w.probability - b.bound) <= tie_tol) {
        if (!tied || b.bound < tied->bound) tied = &b;
      }
    }
    if (!smallest) {
      report.notes.push_back("no usable bound for witness " + witness_label(w));
      continue;
    }
    WitnessFinding finding;
    finding.witness = w;
    if (decisive) {
      finding.verdict = WitnessVerdict::violated;
      finding.against = decisive->aprime;
      finding.bound = decisive->bound;
      report.violation = true;
    } else if (tied) {
      finding.verdict = WitnessVerdict::boundary;
      finding.against = tied->aprime;
      finding.bound = tied->bound;
      report.notes.push_back("witness " + witness_label(w) + " meets the bound " +
                             fmt(tied->bound) + " within " + fmt(tie_tol) +
                             ": boundary, inconclusive");
    } else {
      finding.verdict = WitnessVerdict::not_violated;
      finding.against = smallest->aprime;
      finding.bound = smallest->bound;
    }
    report.findings.push_back(std::move(finding));
  }

  report.verdict = report.violation ? kVerdictNoModel : kVerdictInconclusive;
  if (input.witnesses.empty()) {
    report.notes.push_back("no witnesses supplied; bounds reported without a verdict test");
  }
  if (!report.violation) {
    report.notes.push_back(
        "absence of a clear violation is not evidence that a fitting model exists; "
        "review the justification checklist");
  }

  const auto& texts = justification_condition_texts();
  for (std::size_t i = 0; i < texts.size(); ++i) {
    std::string line = input.conditions[i].asserted ? "[asserted] " : "[not asserted] ";
    line += texts[i];
    if (!input.conditions[i].note.empty()) line += " -- " + input.conditions[i].note;
    report.conditions.push_back(std::move(line));
  }

  if (preset) {
    report.notes.push_back("population frequencies: " + preset->provenance);
    for (const auto& fig : preset->published) {
      const PairBound* match = nullptr;
      for (const auto& b : report.bounds) {
        if (b.a == fig.a && b.aprime == fig.aprime) match = &b;
      }
      if (!match) continue;
      double diff = std::abs(match->bound - fig.value);
      if (diff > 0.001) {
        report.notes.push_back("computed bound " + fmt(match->bound) + " for (" + fig.a + " vs " +
                               fig.aprime + ") differs from the " + fig.source + " value " +
                               fmt(fig.value) + " by " + fmt(diff));
      } else {
        report.notes.push_back("computed bound " + fmt(match->bound) + " for (" + fig.a + " vs " +
                               fig.aprime + ") matches the " + fig.source + " value " +
                               fmt(fig.value) + " within 0.001");
      }
    }
  }
  return report;
}

std::size_t CsvTable::column_index(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == name) return i;
  }
  throw validation_error("unknown column '" + name + "'");
}

CsvTable parse_csv(const std::string& text) {
  CsvTable table;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    lineno++;
    if (trim(line).empty()) continue;
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') cells.push_back("");
    if (table.columns.empty()) {
      std::set<std::string> seen;
      for (const auto& c : cells) {
        if (c.empty()) throw parse_error("line 1: empty column name");
        if (!seen.insert(c).second) throw parse_error("line 1: duplicate column '" + c + "'");
      }
      table.columns = std::move(cells);
      continue;
    }
    if (cells.size() != table.columns.size()) {
      throw parse_error("line " + std::to_string(lineno) + ": expected " +
                        std::to_string(table.columns.size()) + " cells, got " +
                        std::to_string(cells.size()));
    }
    table.rows.push_back(std::move(cells));
  }
  if (table.columns.empty()) throw parse_error("CSV has no header row");
  return table;
}

namespace {

enum class CompareOp { ge, le, ne, eq, gt, lt };

struct RuleClause {
  std::string column;
  CompareOp op = CompareOp::eq;
  std::string literal;
  bool quoted = false;
};

std::vector<std::string> split_clauses(const std::string& rule) {
  std::vector<std::string> pieces;
  std::size_t start = 0;
  auto flush = [&](std::size_t end) {
    pieces.push_back(rule.substr(start, end - start));
  };
  for (std::size_t i = 0; i + 1 < rule.size(); ++i) {
    if (rule[i] == '&' && rule[i + 1] == '&') {
      flush(i);
      start = i + 2;
      i++;
    } else if (rule.compare(i, 5, " and ") == 0) {
      flush(i);
      start = i + 5;
      i += 4;
    }
  }
  flush(rule.size());
  return pieces;
}

RuleClause parse_clause(const std::string& text) {
  static const std::vector<std::pair<std::string, CompareOp>> ops = {
      {">=", CompareOp::ge}, {"<=", CompareOp::le}, {"!=", CompareOp::ne},
      {"==", CompareOp::eq}, {">", CompareOp::gt},  {"<", CompareOp::lt},
      {"=", CompareOp::eq}};
  for (std::size_t i = 0; i < text.size(); ++i) {
    for (const auto& [token, op] : ops) {
      if (text.compare(i, token.size(), token) != 0) continue;
      RuleClause clause;
      clause.column = trim(text.substr(0, i));
      clause.literal = trim(text.substr(i + token.size()));
      clause.op = op;
      if (clause.column.empty() || clause.literal.empty()) {
        throw parse_error("rule clause '" + trim(text) + "' is missing a side");
      }
      if (clause.literal.size() >= 2 &&
          ((clause.literal.front() == '\'' && clause.literal.back() == '\'') ||
           (clause.literal.front() == '"' && clause.literal.back() == '"'))) {
        clause.literal = clause.literal.substr(1, clause.literal.size() - 2);
        clause.quoted = true;
      }
      return clause;
    }
  }
  throw parse_error("rule clause '" + trim(text) + "' has no comparison operator");
}

bool clause_matches(const RuleClause& clause, const std::string& cell) {
  double lhs = 0.0, rhs = 0.0;
  if (!clause.quoted && parse_number(cell, lhs) && parse_number(clause.literal, rhs)) {
    switch (clause.op) {
      case CompareOp::ge: return lhs >= rhs;
      case CompareOp::le: return lhs <= rhs;
      case CompareOp::ne: return lhs != rhs;
      case CompareOp::eq: return lhs == rhs;
      case CompareOp::gt: return lhs > rhs;
      case CompareOp::lt: return lhs < rhs;
    }
  }
  switch (clause.op) {
    case CompareOp::eq: return cell == clause.literal;
    case CompareOp::ne: return cell != clause.literal;
    default:
      throw evaluation_error("ordered comparison on non-numeric value '" + cell + "' in column '" +
                             clause.column + "'");
  }
}

}  // namespace

std::vector<WitnessRow> deterministic_rule_witness(const CsvTable& table, const std::string& rule,
                                                   const std::string& sensitive_column) {
  std::size_t sensitive_idx = table.column_index(sensitive_column);
  std::vector<RuleClause> clauses;
  std::vector<std::size_t> clause_cols;
  for (const auto& piece : split_clauses(rule)) {
    if (trim(piece).empty()) throw parse_error("empty clause in rule");
    RuleClause clause = parse_clause(piece);
    clause_cols.push_back(table.column_index(clause.column));
    clauses.push_back(std::move(clause));
  }
  if (clauses.empty()) throw parse_error("rule has no clauses");

  std::vector<WitnessRow> out;
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& row : table.rows) {
    bool matches = true;
    for (std::size_t i = 0; i < clauses.size(); ++i) {
      if (!clause_matches(clauses[i], row[clause_cols[i]])) {
        matches = false;
        break;
      }
    }
    if (!matches) continue;
    WitnessRow w;
    for (std::size_t i = 0; i < table.columns.size(); ++i) {
      if (i == sensitive_idx) continue;
      w.pattern[table.columns[i]] = row[i];
    }
    w.sensitive_value = row[sensitive_idx];
    w.probability = 1.0;
    w.origin = "rule: " + rule;
    std::string key;
    for (const auto& [col, val] : w.pattern) key += col + "=" + val + ";";
    if (!seen.insert({key, w.sensitive_value}).second) continue;
    out.push_back(std::move(w));
  }
  return out;
}

}  // namespace cfaudit
