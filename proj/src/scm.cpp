#include "cfaudit/scm.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>

namespace cfaudit {
namespace {

constexpr double kNormalizationTol = 1e-12;

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out += sep;
    out += parts[i];
  }
  return out;
}

// Strides for flat indexing; the last variable varies fastest.
std::vector<std::size_t> strides_for(const std::vector<std::size_t>& sizes) {
  std::vector<std::size_t> strides(sizes.size(), 1);
  for (std::size_t i = sizes.size(); i-- > 1;) {
    strides[i - 1] = strides[i] * sizes[i];
  }
  return strides;
}

std::size_t checked_product(const std::vector<std::size_t>& sizes, std::uint64_t cap,
                            const std::string& what) {
  std::size_t prod = 1;
  for (std::size_t s : sizes) {
    if (s == 0) throw validation_error(what + ": empty domain");
    if (prod > cap / s) {
      throw size_error(what + ": assignment count exceeds cap " + std::to_string(cap));
    }
    prod *= s;
  }
  return prod;
}

double unit_double(std::mt19937_64& eng) {
  return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

}  // namespace

// ---------------------------------------------------------------------------
// JointTable

JointTable::JointTable(std::vector<VariableSpec> scope, std::vector<double> probabilities)
    : scope_(std::move(scope)), probs_(std::move(probabilities)) {
  std::vector<std::size_t> sizes;
  sizes.reserve(scope_.size());
  for (const auto& v : scope_) {
    if (v.name.empty()) throw validation_error("table scope variable with empty name");
    if (v.domain.empty()) throw validation_error("table scope variable '" + v.name + "' has empty domain");
    if (index_.count(v.name)) throw validation_error("duplicate variable '" + v.name + "' in table scope");
    index_[v.name] = static_cast<int>(sizes.size());
    sizes.push_back(v.domain.size());
  }
  std::size_t expected = 1;
  for (std::size_t s : sizes) expected *= s;
  if (probs_.size() != expected) {
    throw validation_error("table has " + std::to_string(probs_.size()) + " cells, expected " +
                           std::to_string(expected));
  }
  double total = 0.0;
  for (double p : probs_) {
    if (p < 0.0 || !std::isfinite(p)) throw validation_error("table probability out of range");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw validation_error("table mass " + std::to_string(total) + " is not 1");
  }
  strides_ = strides_for(sizes);
}

double JointTable::total_mass() const {
  double t = 0.0;
  for (double p : probs_) t += p;
  return t;
}

bool JointTable::has_variable(const std::string& name) const { return index_.count(name) > 0; }

int JointTable::scope_index(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw validation_error("variable '" + name + "' not in table scope");
  return it->second;
}

namespace {

// Resolves an assignment to (scope position, value index) pairs.
std::vector<std::pair<int, int>> resolve(const std::vector<VariableSpec>& scope,
                                         const std::unordered_map<std::string, int>& index,
                                         const Assignment& a, bool require_known) {
  std::vector<std::pair<int, int>> out;
  out.reserve(a.size());
  for (const auto& [name, value] : a) {
    auto it = index.find(name);
    if (it == index.end()) {
      if (require_known) throw validation_error("variable '" + name + "' not in table scope");
      continue;
    }
    const auto& dom = scope[it->second].domain;
    auto vit = std::find(dom.begin(), dom.end(), value);
    if (vit == dom.end()) {
      throw validation_error("value '" + value + "' not in domain of '" + name + "'");
    }
    out.emplace_back(it->second, static_cast<int>(vit - dom.begin()));
  }
  return out;
}

}  // namespace

double JointTable::probability(const Assignment& full) const {
  auto fixed = resolve(scope_, index_, full, true);
  if (fixed.size() != scope_.size()) {
    throw validation_error("assignment does not cover the full table scope");
  }
  std::size_t flat = 0;
  for (const auto& [pos, val] : fixed) flat += strides_[pos] * static_cast<std::size_t>(val);
  return probs_[flat];
}

double JointTable::mass(const Assignment& partial) const {
  auto fixed = resolve(scope_, index_, partial, true);
  double total = 0.0;
  for (std::size_t flat = 0; flat < probs_.size(); ++flat) {
    if (probs_[flat] == 0.0) continue;
    bool match = true;
    for (const auto& [pos, val] : fixed) {
      if (static_cast<int>(flat / strides_[pos] % scope_[pos].domain.size()) != val) {
        match = false;
        break;
      }
    }
    if (match) total += probs_[flat];
  }
  return total;
}

double JointTable::conditional_mass(const Assignment& event, const Assignment& given) const {
  double denom = mass(given);
  if (denom <= 0.0) throw zero_probability_error("conditioning event has probability zero");
  Assignment combined = given;
  for (const auto& [name, value] : event) {
    auto it = combined.find(name);
    if (it != combined.end()) {
      if (it->second != value) return 0.0;
    } else {
      combined[name] = value;
    }
  }
  return mass(combined) / denom;
}

JointTable JointTable::marginal(const std::vector<std::string>& keep) const {
  std::vector<VariableSpec> out_scope;
  std::vector<int> positions;
  std::set<std::string> seen;
  for (const auto& name : keep) {
    if (!seen.insert(name).second) throw validation_error("duplicate variable '" + name + "' in marginal scope");
    int pos = scope_index(name);
    positions.push_back(pos);
    out_scope.push_back(scope_[pos]);
  }
  std::vector<std::size_t> out_sizes;
  for (const auto& v : out_scope) out_sizes.push_back(v.domain.size());
  auto out_strides = strides_for(out_sizes);
  std::size_t out_cells = 1;
  for (std::size_t s : out_sizes) out_cells *= s;
  std::vector<double> out_probs(out_cells, 0.0);
  for (std::size_t flat = 0; flat < probs_.size(); ++flat) {
    if (probs_[flat] == 0.0) continue;
    std::size_t out_flat = 0;
    for (std::size_t k = 0; k < positions.size(); ++k) {
      int pos = positions[k];
      std::size_t val = flat / strides_[pos] % scope_[pos].domain.size();
      out_flat += out_strides[k] * val;
    }
    out_probs[out_flat] += probs_[flat];
  }
  return JointTable(std::move(out_scope), std::move(out_probs));
}

JointTable JointTable::conditioned(const Assignment& evidence) const {
  auto fixed = resolve(scope_, index_, evidence, true);
  std::vector<char> is_fixed(scope_.size(), 0);
  std::vector<int> fixed_val(scope_.size(), -1);
  for (const auto& [pos, val] : fixed) {
    is_fixed[pos] = 1;
    fixed_val[pos] = val;
  }
  std::vector<VariableSpec> out_scope;
  std::vector<int> positions;
  for (std::size_t i = 0; i < scope_.size(); ++i) {
    if (!is_fixed[i]) {
      positions.push_back(static_cast<int>(i));
      out_scope.push_back(scope_[i]);
    }
  }
  std::vector<std::size_t> out_sizes;
  for (const auto& v : out_scope) out_sizes.push_back(v.domain.size());
  auto out_strides = strides_for(out_sizes);
  std::size_t out_cells = 1;
  for (std::size_t s : out_sizes) out_cells *= s;
  std::vector<double> out_probs(out_cells, 0.0);
  double total = 0.0;
  for (std::size_t flat = 0; flat < probs_.size(); ++flat) {
    if (probs_[flat] == 0.0) continue;
    bool match = true;
    for (const auto& [pos, val] : fixed) {
      if (static_cast<int>(flat / strides_[pos] % scope_[pos].domain.size()) != val) {
        match = false;
        break;
      }
    }
    if (!match) continue;
    std::size_t out_flat = 0;
    for (std::size_t k = 0; k < positions.size(); ++k) {
      int pos = positions[k];
      out_flat += out_strides[k] * (flat / strides_[pos] % scope_[pos].domain.size());
    }
    out_probs[out_flat] += probs_[flat];
    total += probs_[flat];
  }
  if (total <= 0.0) throw zero_probability_error("conditioning event has probability zero");
  for (double& p : out_probs) p /= total;
  return JointTable(std::move(out_scope), std::move(out_probs));
}

std::vector<int> JointTable::decode(std::size_t flat) const {
  std::vector<int> values(scope_.size());
  for (std::size_t i = 0; i < scope_.size(); ++i) {
    values[i] = static_cast<int>(flat / strides_[i] % scope_[i].domain.size());
  }
  return values;
}

Assignment JointTable::cell_assignment(std::size_t flat) const {
  Assignment a;
  auto values = decode(flat);
  for (std::size_t i = 0; i < scope_.size(); ++i) {
    a[scope_[i].name] = scope_[i].domain[values[i]];
  }
  return a;
}

double JointTable::max_cell_difference(const JointTable& other) const {
  if (scope_.size() != other.scope_.size() || probs_.size() != other.probs_.size()) {
    throw validation_error("table scopes differ");
  }
  for (std::size_t i = 0; i < scope_.size(); ++i) {
    if (scope_[i].name != other.scope_[i].name || scope_[i].domain != other.scope_[i].domain) {
      throw validation_error("table scopes differ");
    }
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < probs_.size(); ++i) {
    worst = std::max(worst, std::abs(probs_[i] - other.probs_[i]));
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Scm accessors

const VariableSpec& Scm::variable(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw validation_error("unknown variable '" + name + "'");
  return vars_[it->second];
}

bool Scm::has_variable(const std::string& name) const { return index_.count(name) > 0; }

std::vector<std::string> Scm::observed_names() const {
  std::vector<std::string> out;
  for (const auto& v : vars_) {
    if (v.kind == VarKind::observed) out.push_back(v.name);
  }
  return out;
}

std::vector<std::string> Scm::noise_names() const {
  std::vector<std::string> out;
  for (const auto& v : vars_) {
    if (v.kind == VarKind::noise) out.push_back(v.name);
  }
  return out;
}

const std::vector<std::string>& Scm::parent_names(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw validation_error("unknown variable '" + name + "'");
  return parent_names_[it->second];
}

std::vector<std::string> Scm::child_names(const std::string& name) const {
  if (!has_variable(name)) throw validation_error("unknown variable '" + name + "'");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < vars_.size(); ++i) {
    const auto& ps = parent_names_[i];
    if (std::find(ps.begin(), ps.end(), name) != ps.end()) out.push_back(vars_[i].name);
  }
  return out;
}

const std::vector<double>& Scm::noise_distribution(const std::string& name) const {
  const auto& v = variable(name);
  if (v.kind != VarKind::noise) throw validation_error("'" + name + "' is not a noise variable");
  if (!independent_noise_) throw validation_error("model has joint noise; no per-variable distribution");
  return dists_[index_.at(name)];
}

JointTable Scm::noise_joint() const {
  if (independent_noise_) throw validation_error("model has independent noise; no joint table");
  std::vector<VariableSpec> scope;
  for (int idx : noise_order_) scope.push_back(vars_[idx]);
  return JointTable(std::move(scope), joint_noise_);
}

std::uint64_t Scm::noise_assignment_count() const {
  std::uint64_t prod = 1;
  for (int idx : noise_order_) prod *= vars_[idx].domain.size();
  return prod;
}

const std::vector<int>& Scm::equation_table(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw validation_error("unknown variable '" + name + "'");
  if (vars_[it->second].kind != VarKind::observed) {
    throw validation_error("'" + name + "' has no equation");
  }
  return tables_[it->second];
}

std::string Scm::equation_value(const std::string& name, const Assignment& parents) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw validation_error("unknown variable '" + name + "'");
  int vi = it->second;
  if (vars_[vi].kind != VarKind::observed) throw validation_error("'" + name + "' has no equation");
  const auto& plist = parents_[vi];
  std::size_t flat = 0;
  std::size_t stride = 1;
  for (std::size_t k = plist.size(); k-- > 0;) {
    const auto& pv = vars_[plist[k]];
    auto ait = parents.find(pv.name);
    if (ait == parents.end()) throw validation_error("missing parent '" + pv.name + "' in assignment");
    auto dit = std::find(pv.domain.begin(), pv.domain.end(), ait->second);
    if (dit == pv.domain.end()) {
      throw validation_error("value '" + ait->second + "' not in domain of '" + pv.name + "'");
    }
    flat += stride * static_cast<std::size_t>(dit - pv.domain.begin());
    stride *= pv.domain.size();
  }
  return vars_[vi].domain[tables_[vi][flat]];
}

// ---------------------------------------------------------------------------
// ScmBuilder

ScmBuilder& ScmBuilder::add_noise(const std::string& name, std::vector<std::string> domain,
                                  std::vector<double> distribution) {
  PendingVar p;
  p.spec = VariableSpec{name, std::move(domain), VarKind::noise};
  p.dist = std::move(distribution);
  pending_.push_back(std::move(p));
  return *this;
}

ScmBuilder& ScmBuilder::add_noise_deferred(const std::string& name, std::vector<std::string> domain) {
  PendingVar p;
  p.spec = VariableSpec{name, std::move(domain), VarKind::noise};
  p.deferred = true;
  pending_.push_back(std::move(p));
  return *this;
}

ScmBuilder& ScmBuilder::add_observed(const std::string& name, std::vector<std::string> domain,
                                     std::vector<std::string> parents, std::vector<int> table) {
  PendingVar p;
  p.spec = VariableSpec{name, std::move(domain), VarKind::observed};
  p.parents = std::move(parents);
  p.table = std::move(table);
  pending_.push_back(std::move(p));
  return *this;
}

ScmBuilder& ScmBuilder::add_observed_fn(const std::string& name, std::vector<std::string> domain,
                                        std::vector<std::string> parents, const EquationFn& fn) {
  std::vector<std::size_t> sizes;
  for (const auto& pname : parents) {
    const PendingVar* found = nullptr;
    for (const auto& p : pending_) {
      if (p.spec.name == pname) {
        found = &p;
        break;
      }
    }
    if (!found) {
      throw validation_error("parent '" + pname + "' of '" + name + "' must be declared first");
    }
    sizes.push_back(found->spec.domain.size());
  }
  std::size_t rows = checked_product(sizes, Scm::kDefaultEnumerationCap, "equation for '" + name + "'");
  std::vector<int> table(rows);
  std::vector<int> values(sizes.size(), 0);
  for (std::size_t flat = 0; flat < rows; ++flat) {
    std::size_t rest = flat;
    for (std::size_t k = sizes.size(); k-- > 0;) {
      values[k] = static_cast<int>(rest % sizes[k]);
      rest /= sizes[k];
    }
    table[flat] = fn(values);
  }
  return add_observed(name, std::move(domain), std::move(parents), std::move(table));
}

ScmBuilder& ScmBuilder::joint_noise(std::vector<double> flat) {
  joint_ = std::move(flat);
  return *this;
}

Scm ScmBuilder::build(std::uint64_t enumeration_cap) const {
  Scm scm;
  scm.cap_ = enumeration_cap;
  scm.vars_.reserve(pending_.size());
  for (const auto& p : pending_) {
    if (p.spec.name.empty()) throw validation_error("variable with empty name");
    if (p.spec.domain.empty()) throw validation_error("variable '" + p.spec.name + "' has empty domain");
    std::set<std::string> labels;
    for (const auto& label : p.spec.domain) {
      if (label.empty()) throw validation_error("variable '" + p.spec.name + "' has an empty domain value");
      if (!labels.insert(label).second) {
        throw validation_error("variable '" + p.spec.name + "' repeats domain value '" + label + "'");
      }
    }
    if (scm.index_.count(p.spec.name)) throw validation_error("duplicate variable '" + p.spec.name + "'");
    scm.index_[p.spec.name] = static_cast<int>(scm.vars_.size());
    scm.vars_.push_back(p.spec);
  }

  std::size_t n = scm.vars_.size();
  scm.parents_.resize(n);
  scm.parent_names_.resize(n);
  scm.tables_.resize(n);
  scm.dists_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& p = pending_[i];
    std::set<std::string> seen;
    for (const auto& pname : p.parents) {
      auto it = scm.index_.find(pname);
      if (it == scm.index_.end()) {
        throw validation_error("unknown parent '" + pname + "' of '" + p.spec.name + "'");
      }
      if (pname == p.spec.name) throw validation_error("variable '" + pname + "' is its own parent");
      if (!seen.insert(pname).second) {
        throw validation_error("variable '" + p.spec.name + "' repeats parent '" + pname + "'");
      }
      scm.parents_[i].push_back(it->second);
    }
    scm.parent_names_[i] = p.parents;
  }

  // Dependency order over observed variables; names any cycle found.
  std::vector<int> indeg(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (scm.vars_[i].kind != VarKind::observed) continue;
    for (int pidx : scm.parents_[i]) {
      if (scm.vars_[pidx].kind == VarKind::observed) indeg[i]++;
    }
  }
  std::vector<int> queue;
  for (std::size_t i = 0; i < n; ++i) {
    if (scm.vars_[i].kind == VarKind::observed && indeg[i] == 0) queue.push_back(static_cast<int>(i));
  }
  std::vector<char> done(n, 0);
  for (std::size_t head = 0; head < queue.size(); ++head) {
    int vi = queue[head];
    scm.topo_.push_back(vi);
    done[vi] = 1;
    for (std::size_t j = 0; j < n; ++j) {
      if (scm.vars_[j].kind != VarKind::observed || done[j]) continue;
      for (int pidx : scm.parents_[j]) {
        if (pidx == vi) {
          if (--indeg[j] == 0) queue.push_back(static_cast<int>(j));
        }
      }
    }
  }
  std::size_t observed_count = 0;
  for (const auto& v : scm.vars_) {
    if (v.kind == VarKind::observed) observed_count++;
  }
  if (scm.topo_.size() != observed_count) {
    std::vector<std::string> cyclic;
    for (std::size_t i = 0; i < n; ++i) {
      if (scm.vars_[i].kind == VarKind::observed && !done[i]) cyclic.push_back(scm.vars_[i].name);
    }
    std::sort(cyclic.begin(), cyclic.end());
    throw validation_error("cycle among variables: " + join(cyclic, ", "));
  }

  for (std::size_t i = 0; i < n; ++i) {
    const auto& p = pending_[i];
    if (p.spec.kind == VarKind::noise) {
      if (!p.parents.empty()) {
        throw validation_error("noise variable '" + p.spec.name + "' must not have parents");
      }
      scm.noise_order_.push_back(static_cast<int>(i));
      continue;
    }
    std::vector<std::size_t> sizes;
    for (int pidx : scm.parents_[i]) sizes.push_back(scm.vars_[pidx].domain.size());
    std::size_t rows = checked_product(sizes, enumeration_cap, "equation for '" + p.spec.name + "'");
    if (p.table.size() != rows) {
      throw validation_error("equation for '" + p.spec.name + "' has " + std::to_string(p.table.size()) +
                             " rows, expected " + std::to_string(rows) + " (must be total)");
    }
    for (int v : p.table) {
      if (v < 0 || v >= static_cast<int>(p.spec.domain.size())) {
        throw validation_error("equation for '" + p.spec.name + "' maps to an out-of-domain value");
      }
    }
    scm.tables_[i] = p.table;
  }

  if (joint_) {
    scm.independent_noise_ = false;
    std::vector<std::size_t> sizes;
    for (int idx : scm.noise_order_) sizes.push_back(scm.vars_[idx].domain.size());
    std::size_t cells = checked_product(sizes, enumeration_cap, "joint noise");
    if (joint_->size() != cells) {
      throw validation_error("joint noise table has " + std::to_string(joint_->size()) +
                             " cells, expected " + std::to_string(cells));
    }
    double total = 0.0;
    for (double p : *joint_) {
      if (p < 0.0 || !std::isfinite(p)) throw validation_error("joint noise probability out of range");
      total += p;
    }
    if (std::abs(total - 1.0) > kNormalizationTol) {
      throw validation_error("joint noise table sums to " + std::to_string(total) + ", not 1");
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (scm.vars_[i].kind == VarKind::noise && !pending_[i].dist.empty()) {
        throw validation_error("noise variable '" + scm.vars_[i].name +
                               "' has both a distribution and joint noise");
      }
    }
    scm.joint_noise_ = *joint_;
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      const auto& p = pending_[i];
      if (p.spec.kind != VarKind::noise) continue;
      if (p.deferred) {
        throw validation_error("noise variable '" + p.spec.name +
                               "' has no distribution and no joint noise was given");
      }
      if (p.dist.size() != p.spec.domain.size()) {
        throw validation_error("distribution for '" + p.spec.name + "' has " +
                               std::to_string(p.dist.size()) + " entries, expected " +
                               std::to_string(p.spec.domain.size()));
      }
      double total = 0.0;
      for (double q : p.dist) {
        if (q < 0.0 || !std::isfinite(q)) {
          throw validation_error("distribution for '" + p.spec.name + "' has an out-of-range entry");
        }
        total += q;
      }
      if (std::abs(total - 1.0) > kNormalizationTol) {
        throw validation_error("distribution for '" + p.spec.name + "' sums to " +
                               std::to_string(total) + ", not 1");
      }
      scm.dists_[i] = p.dist;
    }
  }

  std::vector<std::size_t> noise_sizes;
  for (int idx : scm.noise_order_) noise_sizes.push_back(scm.vars_[idx].domain.size());
  checked_product(noise_sizes, enumeration_cap, "noise enumeration");
  return scm;
}

// ---------------------------------------------------------------------------
// Exhaustive enumeration engine

class Propagator {
 public:
  // Computes observed values in place; positions of noise variables must be set.
  static void propagate(const Scm& scm, std::vector<int>& values) {
    for (int vi : scm.topo_) {
      const auto& plist = scm.parents_[vi];
      std::size_t flat = 0;
      std::size_t stride = 1;
      for (std::size_t k = plist.size(); k-- > 0;) {
        flat += stride * static_cast<std::size_t>(values[plist[k]]);
        stride *= scm.vars_[plist[k]].domain.size();
      }
      values[vi] = scm.tables_[vi][flat];
    }
  }

  // Calls fn(values, probability) once per noise assignment with positive
  // probability, observed values already propagated.
  static void enumerate(const Scm& scm,
                        const std::function<void(const std::vector<int>&, double)>& fn) {
    std::vector<int> values(scm.vars_.size(), 0);
    const auto& order = scm.noise_order_;
    std::uint64_t count = scm.noise_assignment_count();
    for (std::uint64_t flat = 0; flat < count; ++flat) {
      std::uint64_t rest = flat;
      for (std::size_t k = order.size(); k-- > 0;) {
        int vi = order[k];
        values[vi] = static_cast<int>(rest % scm.vars_[vi].domain.size());
        rest /= scm.vars_[vi].domain.size();
      }
      double p;
      if (scm.independent_noise_) {
        p = 1.0;
        for (std::size_t k = 0; k < order.size(); ++k) {
          p *= scm.dists_[order[k]][static_cast<std::size_t>(values[order[k]])];
          if (p == 0.0) break;
        }
      } else {
        p = scm.joint_noise_[flat];
      }
      if (p == 0.0) continue;
      propagate(scm, values);
      fn(values, p);
    }
  }

  static int variable_index(const Scm& scm, const std::string& name) {
    auto it = scm.index_.find(name);
    if (it == scm.index_.end()) throw validation_error("unknown variable '" + name + "'");
    return it->second;
  }

  static const std::vector<int>& noise_order(const Scm& scm) { return scm.noise_order_; }
};

// ---------------------------------------------------------------------------
// Operations

std::string world_copy_name(const std::string& base, const std::string& label) {
  return base + "(" + label + ")";
}

JointTable joint_distribution(const Scm& scm, const std::vector<std::string>& scope) {
  std::vector<VariableSpec> out_scope;
  std::vector<int> positions;
  std::set<std::string> seen;
  std::vector<std::size_t> sizes;
  for (const auto& name : scope) {
    if (!seen.insert(name).second) throw validation_error("duplicate variable '" + name + "' in scope");
    int vi = Propagator::variable_index(scm, name);
    positions.push_back(vi);
    out_scope.push_back(scm.variables()[vi]);
    sizes.push_back(scm.variables()[vi].domain.size());
  }
  std::size_t cells = checked_product(sizes, scm.enumeration_cap(), "joint over requested scope");
  auto strides = strides_for(sizes);
  std::vector<double> probs(cells, 0.0);
  Propagator::enumerate(scm, [&](const std::vector<int>& values, double p) {
    std::size_t flat = 0;
    for (std::size_t k = 0; k < positions.size(); ++k) {
      flat += strides[k] * static_cast<std::size_t>(values[positions[k]]);
    }
    probs[flat] += p;
  });
  return JointTable(std::move(out_scope), std::move(probs));
}

namespace {

int domain_index(const VariableSpec& v, const std::string& value) {
  auto it = std::find(v.domain.begin(), v.domain.end(), value);
  if (it == v.domain.end()) {
    throw validation_error("value '" + value + "' not in domain of '" + v.name + "'");
  }
  return static_cast<int>(it - v.domain.begin());
}

// Rebuilds the model through the builder, with the equations of variables
// in `overrides` replaced by parentless constants. Shared by intervene
// and the twin constructions.
ScmBuilder builder_from(const Scm& scm, const Assignment& overrides) {
  ScmBuilder b;
  for (const auto& v : scm.variables()) {
    if (v.kind == VarKind::noise) {
      if (scm.independent_noise()) {
        b.add_noise(v.name, v.domain, scm.noise_distribution(v.name));
      } else {
        b.add_noise_deferred(v.name, v.domain);
      }
      continue;
    }
    auto it = overrides.find(v.name);
    if (it != overrides.end()) {
      b.add_observed(v.name, v.domain, {}, {domain_index(v, it->second)});
    } else {
      b.add_observed(v.name, v.domain, scm.parent_names(v.name), scm.equation_table(v.name));
    }
  }
  if (!scm.independent_noise()) b.joint_noise(scm.noise_joint().probabilities());
  return b;
}

}  // namespace

Scm intervene(const Scm& scm, const Assignment& do_values) {
  for (const auto& [name, value] : do_values) {
    const auto& v = scm.variable(name);
    if (v.kind != VarKind::observed) {
      throw validation_error("cannot intervene on noise variable '" + name + "'");
    }
    domain_index(v, value);
  }
  return builder_from(scm, do_values).build(scm.enumeration_cap());
}

JointTable abduct(const Scm& scm, const Assignment& evidence) {
  std::vector<std::pair<int, int>> fixed;
  for (const auto& [name, value] : evidence) {
    int vi = Propagator::variable_index(scm, name);
    fixed.emplace_back(vi, domain_index(scm.variables()[vi], value));
  }
  std::vector<VariableSpec> scope;
  std::vector<int> noise_positions = Propagator::noise_order(scm);
  for (int vi : noise_positions) scope.push_back(scm.variables()[vi]);
  std::vector<std::size_t> sizes;
  for (const auto& v : scope) sizes.push_back(v.domain.size());
  auto strides = strides_for(sizes);
  std::size_t cells = 1;
  for (std::size_t s : sizes) cells *= s;
  std::vector<double> probs(cells, 0.0);
  double total = 0.0;
  Propagator::enumerate(scm, [&](const std::vector<int>& values, double p) {
    for (const auto& [vi, val] : fixed) {
      if (values[vi] != val) return;
    }
    std::size_t flat = 0;
    for (std::size_t k = 0; k < noise_positions.size(); ++k) {
      flat += strides[k] * static_cast<std::size_t>(values[noise_positions[k]]);
    }
    probs[flat] += p;
    total += p;
  });
  if (total <= 0.0) throw zero_probability_error("evidence has probability zero");
  for (double& p : probs) p /= total;
  return JointTable(std::move(scope), std::move(probs));
}

JointTable counterfactual_distribution(const Scm& scm, const Assignment& evidence,
                                       const Assignment& do_values,
                                       const std::vector<std::string>& targets) {
  JointTable posterior = abduct(scm, evidence);
  Scm acted = intervene(scm, do_values);

  std::vector<VariableSpec> out_scope;
  std::vector<int> positions;
  std::set<std::string> seen;
  std::vector<std::size_t> sizes;
  for (const auto& name : targets) {
    if (!seen.insert(name).second) throw validation_error("duplicate target '" + name + "'");
    int vi = Propagator::variable_index(acted, name);
    positions.push_back(vi);
    out_scope.push_back(acted.variables()[vi]);
    sizes.push_back(acted.variables()[vi].domain.size());
  }
  std::size_t cells = checked_product(sizes, acted.enumeration_cap(), "counterfactual targets");
  auto strides = strides_for(sizes);
  std::vector<double> probs(cells, 0.0);

  const auto& order = Propagator::noise_order(acted);
  std::vector<int> values(acted.variables().size(), 0);
  const auto& post = posterior.probabilities();
  for (std::size_t flat = 0; flat < post.size(); ++flat) {
    if (post[flat] == 0.0) continue;
    auto nvals = posterior.decode(flat);
    for (std::size_t k = 0; k < order.size(); ++k) values[order[k]] = nvals[k];
    Propagator::propagate(acted, values);
    std::size_t out_flat = 0;
    for (std::size_t k = 0; k < positions.size(); ++k) {
      out_flat += strides[k] * static_cast<std::size_t>(values[positions[k]]);
    }
    probs[out_flat] += post[flat];
  }
  return JointTable(std::move(out_scope), std::move(probs));
}

Scm twin_network(const Scm& scm, const std::vector<World>& worlds) {
  std::set<std::string> labels;
  for (const auto& w : worlds) {
    if (w.label.empty()) throw validation_error("world with empty label");
    if (!labels.insert(w.label).second) throw validation_error("duplicate world label '" + w.label + "'");
    for (const auto& [name, value] : w.do_values) {
      const auto& v = scm.variable(name);
      if (v.kind != VarKind::observed) {
        throw validation_error("cannot intervene on noise variable '" + name + "'");
      }
      domain_index(v, value);
    }
  }
  for (const auto& w : worlds) {
    for (const auto& v : scm.variables()) {
      if (v.kind != VarKind::observed) continue;
      std::string cp = world_copy_name(v.name, w.label);
      if (scm.has_variable(cp)) {
        throw validation_error("world copy name '" + cp + "' collides with an existing variable");
      }
    }
  }

  ScmBuilder b = builder_from(scm, {});
  for (const auto& w : worlds) {
    for (const auto& v : scm.variables()) {
      if (v.kind != VarKind::observed) continue;
      std::string cp = world_copy_name(v.name, w.label);
      auto it = w.do_values.find(v.name);
      if (it != w.do_values.end()) {
        b.add_observed(cp, v.domain, {}, {domain_index(v, it->second)});
        continue;
      }
      std::vector<std::string> mapped;
      for (const auto& p : scm.parent_names(v.name)) {
        mapped.push_back(scm.variable(p).kind == VarKind::noise ? p : world_copy_name(p, w.label));
      }
      // The copy's parents carry the same domains in the same order, so the
      // equation table transfers verbatim.
      b.add_observed(cp, v.domain, std::move(mapped), scm.equation_table(v.name));
    }
  }
  return b.build(scm.enumeration_cap());
}

JointTable path_specific_counterfactual(const Scm& scm, const std::string& sensitive,
                                        const std::string& value_indirect,
                                        const std::string& value_direct,
                                        const std::map<std::string, EdgeRole>& edge_roles,
                                        const std::string& target) {
  const auto& sv = scm.variable(sensitive);
  if (sv.kind != VarKind::observed) throw validation_error("'" + sensitive + "' is not observed");
  for (const auto& p : scm.parent_names(sensitive)) {
    if (scm.variable(p).kind == VarKind::observed) {
      throw validation_error("'" + sensitive + "' has observed parent '" + p + "'; not a root");
    }
    if (scm.child_names(p).size() > 1) {
      throw validation_error("noise parent '" + p + "' of '" + sensitive +
                             "' feeds other variables; not ancestrally closed");
    }
  }
  domain_index(sv, value_indirect);
  domain_index(sv, value_direct);
  if (target == sensitive) throw validation_error("target equals the sensitive variable");
  if (scm.variable(target).kind != VarKind::observed) {
    throw validation_error("target '" + target + "' is not observed");
  }

  std::vector<std::string> children = scm.child_names(sensitive);
  std::set<std::string> child_set(children.begin(), children.end());
  for (const auto& [child, role] : edge_roles) {
    (void)role;
    if (!child_set.count(child)) {
      throw validation_error("no edge from '" + sensitive + "' to '" + child + "'");
    }
  }
  for (const auto& child : children) {
    if (!edge_roles.count(child)) {
      throw validation_error("edge from '" + sensitive + "' to '" + child + "' is unlabeled");
    }
  }

  const std::string label = "path";
  ScmBuilder b = builder_from(scm, {});
  for (const auto& v : scm.variables()) {
    if (v.kind != VarKind::observed || v.name == sensitive) continue;
    std::string cp = world_copy_name(v.name, label);
    if (scm.has_variable(cp)) {
      throw validation_error("copy name '" + cp + "' collides with an existing variable");
    }
    const auto& parents = scm.parent_names(v.name);
    const auto& table = scm.equation_table(v.name);
    std::vector<std::string> mapped;
    std::vector<std::size_t> sizes;
    int sensitive_pos = -1;
    for (std::size_t k = 0; k < parents.size(); ++k) {
      const auto& p = parents[k];
      sizes.push_back(scm.variable(p).domain.size());
      if (p == sensitive) {
        sensitive_pos = static_cast<int>(k);
        continue;
      }
      mapped.push_back(scm.variable(p).kind == VarKind::noise ? p : world_copy_name(p, label));
    }
    if (sensitive_pos < 0) {
      b.add_observed(cp, v.domain, std::move(mapped), table);
      continue;
    }
    // Partial-evaluate the table at the per-edge value of the sensitive parent.
    const std::string& baked =
        edge_roles.at(v.name) == EdgeRole::direct ? value_direct : value_indirect;
    int baked_idx = domain_index(sv, baked);
    auto old_strides = strides_for(sizes);
    std::vector<std::size_t> new_sizes;
    for (std::size_t k = 0; k < sizes.size(); ++k) {
      if (static_cast<int>(k) != sensitive_pos) new_sizes.push_back(sizes[k]);
    }
    std::size_t new_rows = 1;
    for (std::size_t s : new_sizes) new_rows *= s;
    std::vector<int> new_table(new_rows);
    for (std::size_t flat = 0; flat < new_rows; ++flat) {
      std::size_t rest = flat;
      std::size_t old_flat = old_strides[sensitive_pos] * static_cast<std::size_t>(baked_idx);
      // Decode in new-parent order (last fastest), re-encode into the old layout.
      for (std::size_t k = new_sizes.size(); k-- > 0;) {
        std::size_t val = rest % new_sizes[k];
        rest /= new_sizes[k];
        std::size_t old_pos = k >= static_cast<std::size_t>(sensitive_pos) ? k + 1 : k;
        old_flat += old_strides[old_pos] * val;
      }
      new_table[flat] = table[old_flat];
    }
    b.add_observed(cp, v.domain, std::move(mapped), std::move(new_table));
  }
  Scm nested = b.build(scm.enumeration_cap());
  JointTable dist = joint_distribution(nested, {world_copy_name(target, label)});
  std::vector<VariableSpec> scope = dist.scope();
  scope[0].name = target;
  return JointTable(std::move(scope), dist.probabilities());
}

std::vector<Assignment> sample(const Scm& scm, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 eng(seed);
  std::vector<Assignment> out;
  out.reserve(n);
  const auto& order = Propagator::noise_order(scm);
  const auto& vars = scm.variables();
  std::vector<int> values(vars.size(), 0);

  std::optional<JointTable> joint_table;
  if (!scm.independent_noise()) joint_table.emplace(scm.noise_joint());
  for (std::size_t i = 0; i < n; ++i) {
    if (scm.independent_noise()) {
      for (int vi : order) {
        const auto& dist = scm.noise_distribution(vars[vi].name);
        double u = unit_double(eng);
        double acc = 0.0;
        int chosen = static_cast<int>(dist.size()) - 1;
        for (std::size_t k = 0; k < dist.size(); ++k) {
          acc += dist[k];
          if (u < acc) {
            chosen = static_cast<int>(k);
            break;
          }
        }
        values[vi] = chosen;
      }
    } else {
      const auto& flat = joint_table->probabilities();
      double u = unit_double(eng);
      double acc = 0.0;
      std::size_t chosen = flat.size() - 1;
      for (std::size_t k = 0; k < flat.size(); ++k) {
        acc += flat[k];
        if (u < acc) {
          chosen = k;
          break;
        }
      }
      auto nvals = joint_table->decode(chosen);
      for (std::size_t k = 0; k < order.size(); ++k) values[order[k]] = nvals[k];
    }
    Propagator::propagate(scm, values);
    Assignment a;
    for (std::size_t k = 0; k < vars.size(); ++k) {
      if (vars[k].kind == VarKind::observed) a[vars[k].name] = vars[k].domain[values[k]];
    }
    out.push_back(std::move(a));
  }
  return out;
}

}  // namespace cfaudit
