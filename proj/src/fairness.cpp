#include "cfaudit/fairness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>
#include <sstream>

namespace cfaudit {

namespace {

constexpr double kRowSumTol = 1e-12;

std::string render_context(const Assignment& context) {
  std::string out;
  for (const auto& [name, value] : context) {
    if (!out.empty()) out += ", ";
    out += name + "=" + value;
  }
  return out;
}

void validate_specs(const std::vector<VariableSpec>& inputs, const std::string& output_name,
                    const std::vector<std::string>& output_domain) {
  std::set<std::string> seen;
  for (const auto& v : inputs) {
    if (v.name.empty()) throw validation_error("predictor input with empty name");
    if (!seen.insert(v.name).second) throw validation_error("duplicate predictor input '" + v.name + "'");
    if (v.domain.empty()) throw validation_error("predictor input '" + v.name + "' has empty domain");
    std::set<std::string> vals(v.domain.begin(), v.domain.end());
    if (vals.size() != v.domain.size()) {
      throw validation_error("predictor input '" + v.name + "' has duplicate domain values");
    }
  }
  if (output_name.empty()) throw validation_error("predictor output with empty name");
  if (output_domain.empty()) throw validation_error("predictor output has empty domain");
  std::set<std::string> vals(output_domain.begin(), output_domain.end());
  if (vals.size() != output_domain.size()) {
    throw validation_error("predictor output has duplicate domain values");
  }
}

std::size_t row_total(const std::vector<VariableSpec>& inputs) {
  std::size_t total = 1;
  for (const auto& v : inputs) total *= v.domain.size();
  return total;
}

void require_inputs_match(const Scm& scm, const Predictor& pred) {
  for (const auto& v : pred.inputs()) {
    if (!scm.has_variable(v.name)) {
      throw validation_error("predictor input '" + v.name + "' is not a model variable");
    }
    const auto& mv = scm.variable(v.name);
    if (mv.kind != VarKind::observed) {
      throw validation_error("predictor input '" + v.name + "' is not observed");
    }
    if (mv.domain != v.domain) {
      throw validation_error("predictor input '" + v.name + "' domain differs from the model");
    }
  }
}

struct UnionFind {
  std::vector<std::size_t> parent;

  explicit UnionFind(std::size_t n) : parent(n) {
    std::iota(parent.begin(), parent.end(), std::size_t{0});
  }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  void unite(std::size_t x, std::size_t y) { parent[find(x)] = find(y); }
};

}  // namespace

Predictor Predictor::deterministic(std::vector<VariableSpec> inputs, std::string output_name,
                                   std::vector<std::string> output_domain,
                                   std::vector<int> values) {
  validate_specs(inputs, output_name, output_domain);
  std::size_t rows = row_total(inputs);
  if (values.size() != rows) {
    throw validation_error("predictor table has " + std::to_string(values.size()) +
                           " rows, expected " + std::to_string(rows));
  }
  for (int v : values) {
    if (v < -1 || v >= static_cast<int>(output_domain.size())) {
      throw validation_error("predictor output index out of range");
    }
  }
  Predictor p;
  p.kind_ = PredictorKind::deterministic;
  p.inputs_ = std::move(inputs);
  p.output_name_ = std::move(output_name);
  p.output_domain_ = std::move(output_domain);
  p.rows_ = rows;
  p.values_ = std::move(values);
  return p;
}

Predictor Predictor::stochastic(std::vector<VariableSpec> inputs, std::string output_name,
                                std::vector<std::string> output_domain,
                                std::vector<std::vector<double>> rows) {
  validate_specs(inputs, output_name, output_domain);
  std::size_t total = row_total(inputs);
  if (rows.size() != total) {
    throw validation_error("predictor table has " + std::to_string(rows.size()) +
                           " rows, expected " + std::to_string(total));
  }
  for (const auto& row : rows) {
    if (row.empty()) continue;
    if (row.size() != output_domain.size()) {
      throw validation_error("stochastic row length differs from the output domain");
    }
    double sum = 0.0;
    for (double p : row) {
      if (p < 0.0) throw validation_error("negative probability in stochastic row");
      sum += p;
    }
    if (std::abs(sum - 1.0) > kRowSumTol) {
      throw validation_error("stochastic row sums to " + std::to_string(sum) + ", expected 1");
    }
  }
  Predictor p;
  p.kind_ = PredictorKind::stochastic;
  p.inputs_ = std::move(inputs);
  p.output_name_ = std::move(output_name);
  p.output_domain_ = std::move(output_domain);
  p.rows_ = total;
  p.dist_rows_ = std::move(rows);
  return p;
}

std::size_t Predictor::row_index(const Assignment& context) const {
  std::size_t row = 0;
  for (const auto& v : inputs_) {
    auto it = context.find(v.name);
    if (it == context.end()) {
      throw validation_error("context is missing predictor input '" + v.name + "'");
    }
    auto pos = std::find(v.domain.begin(), v.domain.end(), it->second);
    if (pos == v.domain.end()) {
      throw validation_error("value '" + it->second + "' is outside the domain of input '" +
                             v.name + "'");
    }
    row = row * v.domain.size() + static_cast<std::size_t>(pos - v.domain.begin());
  }
  return row;
}

bool Predictor::row_defined(std::size_t row) const {
  if (row >= rows_) throw validation_error("predictor row out of range");
  return kind_ == PredictorKind::deterministic ? values_[row] >= 0 : !dist_rows_[row].empty();
}

bool Predictor::defined(const Assignment& context) const { return row_defined(row_index(context)); }

std::vector<double> Predictor::distribution(const Assignment& context) const {
  std::size_t row = row_index(context);
  if (!row_defined(row)) {
    throw evaluation_error("predictor is undefined at probability-zero context (" +
                           render_context(context) + ")");
  }
  if (kind_ == PredictorKind::deterministic) {
    std::vector<double> dist(output_domain_.size(), 0.0);
    dist[static_cast<std::size_t>(values_[row])] = 1.0;
    return dist;
  }
  return dist_rows_[row];
}

std::string Predictor::value(const Assignment& context) const {
  if (kind_ != PredictorKind::deterministic) {
    throw validation_error("value() requires a deterministic predictor");
  }
  std::size_t row = row_index(context);
  if (!row_defined(row)) {
    throw evaluation_error("predictor is undefined at probability-zero context (" +
                           render_context(context) + ")");
  }
  return output_domain_[static_cast<std::size_t>(values_[row])];
}

Predictor parse_predictor(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::optional<PredictorKind> kind;
  std::vector<VariableSpec> inputs;
  std::optional<std::string> output_name;
  std::vector<std::string> output_domain;
  std::vector<int> values;
  std::vector<std::vector<double>> dist_rows;
  std::vector<char> row_seen;
  bool rows_started = false;
  std::size_t lineno = 0;

  auto fail = [&](const std::string& msg) -> void {
    throw parse_error("line " + std::to_string(lineno) + ": " + msg);
  };

  while (std::getline(in, line)) {
    lineno++;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::vector<std::string> tokens;
    std::string tok;
    while (ls >> tok) tokens.push_back(tok);
    if (tokens.empty()) continue;

    if (!kind) {
      if (tokens.size() != 1 || (tokens[0] != "deterministic" && tokens[0] != "stochastic")) {
        fail("expected 'deterministic' or 'stochastic'");
      }
      kind = tokens[0] == "deterministic" ? PredictorKind::deterministic : PredictorKind::stochastic;
      continue;
    }
    if (tokens[0] == "input" || tokens[0] == "output") {
      if (rows_started) fail("declarations must precede rows");
      if (tokens.size() < 3) fail("expected a name and at least one domain value");
      if (tokens[0] == "input") {
        inputs.push_back(VariableSpec{tokens[1], {tokens.begin() + 2, tokens.end()}, VarKind::observed});
      } else {
        if (output_name) fail("duplicate output declaration");
        output_name = tokens[1];
        output_domain.assign(tokens.begin() + 2, tokens.end());
      }
      continue;
    }
    if (!output_name) fail("rows before the output declaration");
    if (!rows_started) {
      rows_started = true;
      std::size_t total = row_total(inputs);
      row_seen.assign(total, 0);
      if (*kind == PredictorKind::deterministic) {
        values.assign(total, -1);
      } else {
        dist_rows.assign(total, {});
      }
    }
    std::size_t want = inputs.size() +
                       (*kind == PredictorKind::deterministic ? 1 : output_domain.size());
    if (tokens.size() != want) {
      fail("expected " + std::to_string(want) + " tokens, got " + std::to_string(tokens.size()));
    }
    Assignment context;
    for (std::size_t i = 0; i < inputs.size(); ++i) context[inputs[i].name] = tokens[i];
    std::size_t row = 0;
    for (const auto& v : inputs) {
      auto pos = std::find(v.domain.begin(), v.domain.end(), context[v.name]);
      if (pos == v.domain.end()) {
        fail("value '" + context[v.name] + "' is outside the domain of input '" + v.name + "'");
      }
      row = row * v.domain.size() + static_cast<std::size_t>(pos - v.domain.begin());
    }
    if (row_seen[row]) fail("duplicate row");
    row_seen[row] = 1;
    if (*kind == PredictorKind::deterministic) {
      auto pos = std::find(output_domain.begin(), output_domain.end(), tokens[inputs.size()]);
      if (pos == output_domain.end()) {
        fail("value '" + tokens[inputs.size()] + "' is outside the output domain");
      }
      values[row] = static_cast<int>(pos - output_domain.begin());
    } else {
      std::vector<double> dist;
      for (std::size_t i = 0; i < output_domain.size(); ++i) {
        const std::string& t = tokens[inputs.size() + i];
        char* end = nullptr;
        double p = std::strtod(t.c_str(), &end);
        if (end != t.c_str() + t.size()) fail("bad probability '" + t + "'");
        dist.push_back(p);
      }
      dist_rows[row] = std::move(dist);
    }
  }
  if (!kind) throw parse_error("empty predictor text");
  if (!output_name) throw parse_error("predictor has no output declaration");
  if (!rows_started) {
    std::size_t total = row_total(inputs);
    if (*kind == PredictorKind::deterministic) {
      values.assign(total, -1);
    } else {
      dist_rows.assign(total, {});
    }
  }
  return *kind == PredictorKind::deterministic
             ? Predictor::deterministic(std::move(inputs), std::move(*output_name),
                                        std::move(output_domain), std::move(values))
             : Predictor::stochastic(std::move(inputs), std::move(*output_name),
                                     std::move(output_domain), std::move(dist_rows));
}

std::string serialize_predictor(const Predictor& p) {
  std::string out = p.kind() == PredictorKind::deterministic ? "deterministic\n" : "stochastic\n";
  for (const auto& v : p.inputs()) {
    out += "input " + v.name;
    for (const auto& d : v.domain) out += " " + d;
    out += "\n";
  }
  out += "output " + p.output_name();
  for (const auto& d : p.output_domain()) out += " " + d;
  out += "\n";
  for (std::size_t row = 0; row < p.row_count(); ++row) {
    if (!p.row_defined(row)) continue;
    Assignment context;
    std::size_t rest = row;
    std::string cells;
    for (std::size_t i = p.inputs().size(); i-- > 0;) {
      const auto& v = p.inputs()[i];
      std::size_t val = rest % v.domain.size();
      rest /= v.domain.size();
      context[v.name] = v.domain[val];
    }
    for (const auto& v : p.inputs()) cells += context[v.name] + " ";
    if (p.kind() == PredictorKind::deterministic) {
      cells += p.value(context);
    } else {
      const auto dist = p.distribution(context);
      char buf[64];
      for (std::size_t i = 0; i < dist.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g", dist[i]);
        cells += std::string(buf) + (i + 1 < dist.size() ? " " : "");
      }
    }
    out += cells + "\n";
  }
  return out;
}

FairnessVerdict check_counterfactual_fairness(const Scm& scm, const Predictor& pred,
                                              const std::string& sensitive, double tol) {
  if (!(tol > 0.0)) throw validation_error("tolerance must be positive");
  require_inputs_match(scm, pred);
  const auto& sv = scm.variable(sensitive);
  if (sv.kind != VarKind::observed) {
    throw validation_error("sensitive attribute '" + sensitive + "' is not observed");
  }

  std::vector<std::string> ctx_vars;
  for (const auto& v : pred.inputs()) ctx_vars.push_back(v.name);
  if (std::find(ctx_vars.begin(), ctx_vars.end(), sensitive) == ctx_vars.end()) {
    ctx_vars.push_back(sensitive);
  }
  JointTable joint = joint_distribution(scm, ctx_vars);

  std::vector<std::string> input_names;
  for (const auto& v : pred.inputs()) input_names.push_back(v.name);

  FairnessVerdict verdict;
  verdict.holds = true;
  for (std::size_t flat = 0; flat < joint.cell_count(); ++flat) {
    if (joint.probabilities()[flat] == 0.0) {
      verdict.contexts_skipped++;
      continue;
    }
    Assignment context = joint.cell_assignment(flat);
    verdict.contexts_checked++;
    const std::string& a = context.at(sensitive);
    std::vector<double> base = pred.distribution(context);
    if (input_names.empty()) continue;  // constant predictor: both sides equal by definition
    for (const auto& aprime : sv.domain) {
      if (aprime == a) continue;
      JointTable pushed = counterfactual_distribution(scm, context, {{sensitive, aprime}},
                                                      input_names);
      std::vector<double> cf(pred.output_domain().size(), 0.0);
      for (std::size_t cell = 0; cell < pushed.cell_count(); ++cell) {
        double p = pushed.probabilities()[cell];
        if (p == 0.0) continue;
        std::vector<double> dist = pred.distribution(pushed.cell_assignment(cell));
        for (std::size_t y = 0; y < cf.size(); ++y) cf[y] += p * dist[y];
      }
      for (std::size_t y = 0; y < cf.size(); ++y) {
        double dev = std::abs(base[y] - cf[y]);
        if (dev > verdict.deviation) {
          verdict.deviation = dev;
          verdict.worst_context = context;
          verdict.worst_world = aprime;
          verdict.worst_output = pred.output_domain()[y];
        }
      }
    }
  }
  verdict.holds = verdict.deviation < tol;
  return verdict;
}

BuiltPredictor build_cf_fair_predictor(const Scm& scm, const std::string& sensitive,
                                       const std::string& target, Loss loss) {
  if (loss != Loss::accuracy) throw validation_error("unsupported loss");
  if (!scm.independent_noise()) {
    throw validation_error("the fair-predictor construction requires independent noise");
  }
  const auto& tv = scm.variable(target);
  if (tv.kind != VarKind::observed) {
    throw validation_error("target '" + target + "' is not observed");
  }

  // The parallel-world table both validates ancestral closure and lists, per
  // positive context, every counterfactual context it can transition to.
  PotentialOutcomeTable pot = potential_outcome_table(scm, sensitive, std::nullopt);
  const JointTable& pj = pot.joint();
  const auto& avals = pot.sensitive_domain();

  std::vector<std::string> observed = scm.observed_names();
  std::vector<VariableSpec> input_specs;
  for (const auto& name : observed) input_specs.push_back(scm.variable(name));
  JointTable obs_joint = joint_distribution(scm, observed);

  std::size_t sens_idx = 0;
  std::vector<std::string> non_sensitive;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    if (observed[i] == sensitive) {
      sens_idx = i;
    } else {
      non_sensitive.push_back(observed[i]);
    }
  }

  std::vector<int> factual_pos;
  for (const auto& name : observed) factual_pos.push_back(pj.scope_index(name));
  std::vector<std::vector<int>> copy_pos(avals.size());
  for (std::size_t w = 0; w < avals.size(); ++w) {
    for (const auto& name : non_sensitive) {
      copy_pos[w].push_back(pj.scope_index(world_copy_name(name, avals[w])));
    }
  }

  std::vector<std::size_t> sizes;
  for (const auto& v : input_specs) sizes.push_back(v.domain.size());
  std::size_t total_rows = 1;
  for (std::size_t s : sizes) total_rows *= s;

  auto context_id = [&](const std::vector<int>& dec, std::size_t world,
                        bool factual) -> std::size_t {
    std::size_t id = 0;
    std::size_t ns = 0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
      std::size_t val;
      if (i == sens_idx) {
        val = factual ? static_cast<std::size_t>(dec[static_cast<std::size_t>(factual_pos[i])])
                      : world;
      } else {
        val = factual ? static_cast<std::size_t>(dec[static_cast<std::size_t>(factual_pos[i])])
                      : static_cast<std::size_t>(dec[static_cast<std::size_t>(copy_pos[world][ns])]);
        ns++;
      }
      id = id * sizes[i] + val;
    }
    return id;
  };

  UnionFind classes(total_rows);
  for (std::size_t flat = 0; flat < pj.cell_count(); ++flat) {
    if (pj.probabilities()[flat] == 0.0) continue;
    std::vector<int> dec = pj.decode(flat);
    std::size_t from = context_id(dec, 0, true);
    for (std::size_t w = 0; w < avals.size(); ++w) {
      classes.unite(from, context_id(dec, w, false));
    }
  }

  std::size_t target_idx =
      static_cast<std::size_t>(std::find(observed.begin(), observed.end(), target) -
                               observed.begin());
  std::size_t ny = tv.domain.size();

  std::map<std::size_t, std::vector<double>> class_mass;
  std::vector<double> population(ny, 0.0);
  for (std::size_t cid = 0; cid < total_rows; ++cid) {
    double p = obs_joint.probabilities()[cid];
    if (p == 0.0) continue;
    std::size_t y = static_cast<std::size_t>(obs_joint.decode(cid)[target_idx]);
    auto& mass = class_mass[classes.find(cid)];
    if (mass.empty()) mass.assign(ny, 0.0);
    mass[y] += p;
    population[y] += p;
  }

  auto argmax = [](const std::vector<double>& v) {
    return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
  };
  int fallback = argmax(population);

  std::map<std::size_t, int> class_value;
  for (const auto& [root, mass] : class_mass) class_value[root] = argmax(mass);

  std::vector<int> values(total_rows, fallback);
  double accuracy = 0.0;
  for (std::size_t cid = 0; cid < total_rows; ++cid) {
    double p = obs_joint.probabilities()[cid];
    if (p == 0.0) continue;
    int v = class_value.at(classes.find(cid));
    values[cid] = v;
    if (static_cast<std::size_t>(v) ==
        static_cast<std::size_t>(obs_joint.decode(cid)[target_idx])) {
      accuracy += p;
    }
  }

  BuiltPredictor out{Predictor::deterministic(std::move(input_specs), "predicted_" + target,
                                              tv.domain, std::move(values)),
                     accuracy, class_mass.size(), class_mass.size() <= 1, {}};
  if (out.degenerate) {
    out.warning =
        "all positive-probability contexts fall into one counterfactual class; "
        "the predictor is constant at the population argmax";
  }
  return out;
}

ParityVerdict check_demographic_parity(const Scm& scm, const Predictor& pred,
                                       const std::string& sensitive,
                                       const std::optional<SelectionSpec>& selection, double tol) {
  if (!(tol > 0.0)) throw validation_error("tolerance must be positive");
  require_inputs_match(scm, pred);
  const auto& sv = scm.variable(sensitive);
  if (sv.kind != VarKind::observed) {
    throw validation_error("sensitive attribute '" + sensitive + "' is not observed");
  }
  if (selection) make_selection(scm, selection->variable);

  std::vector<std::string> scope;
  for (const auto& v : pred.inputs()) scope.push_back(v.name);
  if (std::find(scope.begin(), scope.end(), sensitive) == scope.end()) scope.push_back(sensitive);
  if (selection && std::find(scope.begin(), scope.end(), selection->variable) == scope.end()) {
    scope.push_back(selection->variable);
  }
  JointTable joint = joint_distribution(scm, scope);

  std::size_t na = sv.domain.size();
  std::size_t ny = pred.output_domain().size();
  std::vector<std::vector<double>> out(na, std::vector<double>(ny, 0.0));
  std::vector<double> mass(na, 0.0);
  int spos = joint.scope_index(sensitive);
  int selpos = selection ? joint.scope_index(selection->variable) : -1;
  std::size_t sel_one = 0;
  if (selection) {
    const auto& dom = joint.scope()[static_cast<std::size_t>(selpos)].domain;
    sel_one =
        static_cast<std::size_t>(std::find(dom.begin(), dom.end(), "1") - dom.begin());
  }

  for (std::size_t flat = 0; flat < joint.cell_count(); ++flat) {
    double p = joint.probabilities()[flat];
    if (p == 0.0) continue;
    std::vector<int> dec = joint.decode(flat);
    if (selection && static_cast<std::size_t>(dec[static_cast<std::size_t>(selpos)]) != sel_one) {
      continue;
    }
    std::size_t a = static_cast<std::size_t>(dec[static_cast<std::size_t>(spos)]);
    mass[a] += p;
    std::vector<double> dist = pred.distribution(joint.cell_assignment(flat));
    for (std::size_t y = 0; y < ny; ++y) out[a][y] += p * dist[y];
  }
  for (std::size_t a = 0; a < na; ++a) {
    if (mass[a] <= 0.0) {
      throw zero_probability_error("sensitive value '" + sv.domain[a] + "' has probability zero" +
                                   (selection ? " among the selected" : ""));
    }
    for (double& v : out[a]) v /= mass[a];
  }

  ParityVerdict verdict;
  verdict.holds = true;
  for (std::size_t a1 = 0; a1 < na; ++a1) {
    for (std::size_t a2 = a1 + 1; a2 < na; ++a2) {
      for (std::size_t y = 0; y < ny; ++y) {
        double gap = std::abs(out[a1][y] - out[a2][y]);
        if (gap > verdict.gap) {
          verdict.gap = gap;
          verdict.worst_output = pred.output_domain()[y];
          verdict.group_a = sv.domain[a1];
          verdict.group_b = sv.domain[a2];
        }
      }
    }
  }
  verdict.holds = verdict.gap < tol;
  return verdict;
}

Predictor posterior_draw_predictor(const Scm& true_scm, const std::string& sensitive,
                                   const std::string& a, const std::string& coordinate) {
  const auto& sv = true_scm.variable(sensitive);
  if (std::find(sv.domain.begin(), sv.domain.end(), a) == sv.domain.end()) {
    throw validation_error("value '" + a + "' is outside the domain of '" + sensitive + "'");
  }
  const auto& cv = true_scm.variable(coordinate);
  if (cv.kind != VarKind::observed) {
    throw validation_error("coordinate '" + coordinate + "' is not observed");
  }
  if (coordinate == sensitive) {
    throw validation_error("coordinate must differ from the sensitive attribute");
  }

  PotentialOutcomeTable pot = potential_outcome_table(true_scm, sensitive, std::nullopt);
  const JointTable& pj = pot.joint();

  std::vector<std::string> observed = true_scm.observed_names();
  std::vector<VariableSpec> input_specs;
  std::vector<int> factual_pos;
  std::size_t total_rows = 1;
  for (const auto& name : observed) {
    input_specs.push_back(true_scm.variable(name));
    factual_pos.push_back(pj.scope_index(name));
    total_rows *= input_specs.back().domain.size();
  }
  int cpos = pj.scope_index(world_copy_name(coordinate, a));
  std::size_t ny = cv.domain.size();

  std::vector<std::vector<double>> num(total_rows, std::vector<double>(ny, 0.0));
  std::vector<double> den(total_rows, 0.0);
  for (std::size_t flat = 0; flat < pj.cell_count(); ++flat) {
    double p = pj.probabilities()[flat];
    if (p == 0.0) continue;
    std::vector<int> dec = pj.decode(flat);
    std::size_t cid = 0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
      cid = cid * input_specs[i].domain.size() +
            static_cast<std::size_t>(dec[static_cast<std::size_t>(factual_pos[i])]);
    }
    den[cid] += p;
    num[cid][static_cast<std::size_t>(dec[static_cast<std::size_t>(cpos)])] += p;
  }

  std::vector<std::vector<double>> rows(total_rows);
  for (std::size_t cid = 0; cid < total_rows; ++cid) {
    if (den[cid] <= 0.0) continue;
    rows[cid].resize(ny);
    for (std::size_t y = 0; y < ny; ++y) rows[cid][y] = num[cid][y] / den[cid];
  }
  return Predictor::stochastic(std::move(input_specs), world_copy_name(coordinate, a), cv.domain,
                               std::move(rows));
}

}  // namespace cfaudit
