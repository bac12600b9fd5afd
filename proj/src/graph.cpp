#include "cfaudit/graph.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "cfaudit/error.hpp"

namespace cfaudit {

namespace {

void require_nodes(const Dag& g, const std::set<std::string>& s, const std::string& what) {
  for (const auto& n : s) {
    if (!g.has_node(n)) throw validation_error(what + " names unknown node '" + n + "'");
  }
}

}  // namespace

Dag::Dag(std::vector<std::string> nodes, std::vector<std::pair<std::string, std::string>> edges)
    : nodes_(std::move(nodes)), edges_(std::move(edges)) {
  std::set<std::string> seen;
  for (const auto& n : nodes_) {
    if (n.empty()) throw validation_error("graph node with empty name");
    if (!seen.insert(n).second) throw validation_error("duplicate graph node '" + n + "'");
  }
  std::set<std::pair<std::string, std::string>> edge_seen;
  for (const auto& [from, to] : edges_) {
    if (!seen.count(from)) throw validation_error("edge from unknown node '" + from + "'");
    if (!seen.count(to)) throw validation_error("edge to unknown node '" + to + "'");
    if (from == to) throw validation_error("self-loop on node '" + from + "'");
    if (!edge_seen.insert({from, to}).second) {
      throw validation_error("duplicate edge " + from + " -> " + to);
    }
  }
  // Cycle check via repeated leaf removal.
  std::map<std::string, int> outdeg;
  for (const auto& n : nodes_) outdeg[n] = 0;
  for (const auto& [from, to] : edges_) outdeg[from]++;
  std::set<std::string> removed;
  bool progress = true;
  while (progress) {
    progress = false;
    for (const auto& n : nodes_) {
      if (removed.count(n) || outdeg[n] != 0) continue;
      removed.insert(n);
      progress = true;
      for (const auto& [from, to] : edges_) {
        if (to == n && !removed.count(from)) outdeg[from]--;
      }
    }
  }
  if (removed.size() != nodes_.size()) {
    std::vector<std::string> cyclic;
    for (const auto& n : nodes_) {
      if (!removed.count(n)) cyclic.push_back(n);
    }
    std::sort(cyclic.begin(), cyclic.end());
    std::string msg = "graph has a cycle among:";
    for (const auto& n : cyclic) msg += " " + n;
    throw validation_error(msg);
  }
}

bool Dag::has_node(const std::string& name) const {
  return std::find(nodes_.begin(), nodes_.end(), name) != nodes_.end();
}

bool Dag::has_edge(const std::string& from, const std::string& to) const {
  return std::find(edges_.begin(), edges_.end(), std::make_pair(from, to)) != edges_.end();
}

std::vector<std::string> Dag::parents(const std::string& node) const {
  if (!has_node(node)) throw validation_error("unknown node '" + node + "'");
  std::vector<std::string> out;
  for (const auto& [from, to] : edges_) {
    if (to == node) out.push_back(from);
  }
  return out;
}

std::vector<std::string> Dag::children(const std::string& node) const {
  if (!has_node(node)) throw validation_error("unknown node '" + node + "'");
  std::vector<std::string> out;
  for (const auto& [from, to] : edges_) {
    if (from == node) out.push_back(to);
  }
  return out;
}

std::set<std::string> Dag::ancestors(const std::set<std::string>& of) const {
  require_nodes(*this, of, "ancestor query");
  std::set<std::string> result;
  std::vector<std::string> frontier(of.begin(), of.end());
  while (!frontier.empty()) {
    std::string node = frontier.back();
    frontier.pop_back();
    for (const auto& p : parents(node)) {
      if (!of.count(p) && result.insert(p).second) frontier.push_back(p);
    }
  }
  return result;
}

Dag parse_edge_list(const std::string& text) {
  std::vector<std::pair<std::string, std::string>> edges;
  std::vector<std::string> nodes;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    lineno++;
    std::istringstream ls(line);
    std::string from, to, extra;
    if (!(ls >> from)) continue;
    if (from[0] == '#') continue;
    if (!(ls >> to)) throw parse_error("line " + std::to_string(lineno) + ": expected 'parent child'");
    if (ls >> extra) throw parse_error("line " + std::to_string(lineno) + ": too many tokens");
    for (const auto& n : {from, to}) {
      if (seen.insert(n).second) nodes.push_back(n);
    }
    edges.emplace_back(from, to);
  }
  return Dag(std::move(nodes), std::move(edges));
}

Dag scm_graph(const Scm& scm) {
  std::vector<std::string> nodes;
  std::vector<std::pair<std::string, std::string>> edges;
  for (const auto& v : scm.variables()) {
    nodes.push_back(v.name);
    for (const auto& p : scm.parent_names(v.name)) edges.emplace_back(p, v.name);
  }
  return Dag(std::move(nodes), std::move(edges));
}

bool d_separated(const Dag& g, const std::set<std::string>& a, const std::set<std::string>& b,
                 const std::set<std::string>& c) {
  require_nodes(g, a, "set a");
  require_nodes(g, b, "set b");
  require_nodes(g, c, "set c");
  for (const auto& n : a) {
    if (b.count(n)) throw validation_error("sets a and b overlap on '" + n + "'");
    if (c.count(n)) throw validation_error("sets a and c overlap on '" + n + "'");
  }
  for (const auto& n : b) {
    if (c.count(n)) throw validation_error("sets b and c overlap on '" + n + "'");
  }
  if (a.empty() || b.empty()) return true;

  // Restrict to ancestors of a, b, c; moralize; drop c; test connectivity.
  std::set<std::string> all;
  all.insert(a.begin(), a.end());
  all.insert(b.begin(), b.end());
  all.insert(c.begin(), c.end());
  std::set<std::string> keep = g.ancestors(all);
  keep.insert(all.begin(), all.end());

  std::map<std::string, std::set<std::string>> adj;
  for (const auto& n : keep) adj[n];
  for (const auto& [from, to] : g.edges()) {
    if (keep.count(from) && keep.count(to)) {
      adj[from].insert(to);
      adj[to].insert(from);
    }
  }
  for (const auto& n : keep) {
    auto ps = g.parents(n);
    for (std::size_t i = 0; i < ps.size(); ++i) {
      if (!keep.count(ps[i])) continue;
      for (std::size_t j = i + 1; j < ps.size(); ++j) {
        if (!keep.count(ps[j])) continue;
        adj[ps[i]].insert(ps[j]);
        adj[ps[j]].insert(ps[i]);
      }
    }
  }

  std::set<std::string> visited;
  std::vector<std::string> frontier;
  for (const auto& n : a) {
    if (!c.count(n)) {
      visited.insert(n);
      frontier.push_back(n);
    }
  }
  while (!frontier.empty()) {
    std::string node = frontier.back();
    frontier.pop_back();
    if (b.count(node)) return false;
    for (const auto& next : adj[node]) {
      if (c.count(next) || visited.count(next)) continue;
      visited.insert(next);
      frontier.push_back(next);
    }
  }
  return true;
}

bool ancestrally_closed(const Dag& g, const std::set<std::string>& sensitive,
                        const std::vector<std::pair<std::string, std::string>>& latent_confounders) {
  require_nodes(g, sensitive, "sensitive set");
  for (const auto& [x, y] : latent_confounders) {
    if (!g.has_node(x)) throw validation_error("latent confounder pair names unknown node '" + x + "'");
    if (!g.has_node(y)) throw validation_error("latent confounder pair names unknown node '" + y + "'");
  }
  for (const auto& n : sensitive) {
    for (const auto& p : g.parents(n)) {
      if (!sensitive.count(p)) return false;
    }
  }
  for (const auto& [x, y] : latent_confounders) {
    if (sensitive.count(x) || sensitive.count(y)) return false;
  }
  return true;
}

namespace {

struct TripleStats {
  double max_deviation = 0.0;
  // True when some positive conditioning cell leaves both sides non-constant.
  bool informative = false;
};

// Deviation of "left independent of right given `given`" in the table,
// plus the conditional-determinism flag used by faithfulness reporting.
TripleStats ci_stats(const JointTable& table, int left, int right, const std::vector<int>& given) {
  std::vector<std::string> scope_names;
  for (const auto& v : table.scope()) scope_names.push_back(v.name);

  std::vector<std::string> keep;
  for (int z : given) keep.push_back(scope_names[z]);
  keep.push_back(scope_names[left]);
  keep.push_back(scope_names[right]);
  JointTable m = table.marginal(keep);

  std::size_t nl = m.scope()[given.size()].domain.size();
  std::size_t nr = m.scope()[given.size() + 1].domain.size();
  std::size_t zcells = m.cell_count() / (nl * nr);

  TripleStats stats;
  const auto& probs = m.probabilities();
  for (std::size_t z = 0; z < zcells; ++z) {
    std::size_t base = z * nl * nr;
    double pz = 0.0;
    for (std::size_t k = 0; k < nl * nr; ++k) pz += probs[base + k];
    if (pz <= 0.0) continue;
    std::vector<double> pl(nl, 0.0), pr(nr, 0.0);
    for (std::size_t i = 0; i < nl; ++i) {
      for (std::size_t j = 0; j < nr; ++j) {
        double p = probs[base + i * nr + j] / pz;
        pl[i] += p;
        pr[j] += p;
      }
    }
    for (std::size_t i = 0; i < nl; ++i) {
      for (std::size_t j = 0; j < nr; ++j) {
        double dev = std::abs(probs[base + i * nr + j] / pz - pl[i] * pr[j]);
        stats.max_deviation = std::max(stats.max_deviation, dev);
      }
    }
    auto varies = [](const std::vector<double>& p) {
      int positive = 0;
      for (double q : p) {
        if (q > 0.0) positive++;
      }
      return positive >= 2;
    };
    if (varies(pl) && varies(pr)) stats.informative = true;
  }
  return stats;
}

template <typename Visit>
void for_each_triple(std::size_t n, const Visit& visit) {
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      std::vector<int> rest;
      for (std::size_t k = 0; k < n; ++k) {
        if (k != i && k != j) rest.push_back(static_cast<int>(k));
      }
      std::size_t subsets = std::size_t{1} << rest.size();
      for (std::size_t mask = 0; mask < subsets; ++mask) {
        std::vector<int> given;
        for (std::size_t k = 0; k < rest.size(); ++k) {
          if (mask & (std::size_t{1} << k)) given.push_back(rest[k]);
        }
        visit(static_cast<int>(i), static_cast<int>(j), given);
      }
    }
  }
}

}  // namespace

double ci_deviation(const JointTable& table, const std::string& left, const std::string& right,
                    const std::set<std::string>& given) {
  int li = table.scope_index(left);
  int ri = table.scope_index(right);
  std::vector<int> z;
  for (const auto& name : given) {
    if (name == left || name == right) {
      throw validation_error("conditioning set contains '" + name + "'");
    }
    z.push_back(table.scope_index(name));
  }
  return ci_stats(table, li, ri, z).max_deviation;
}

std::vector<CiStatement> enumerate_cis(const JointTable& table, double tol) {
  if (!(tol > 0.0)) throw validation_error("tolerance must be positive");
  std::vector<CiStatement> out;
  const auto& scope = table.scope();
  for_each_triple(scope.size(), [&](int i, int j, const std::vector<int>& given) {
    TripleStats stats = ci_stats(table, i, j, given);
    if (stats.max_deviation < tol) {
      CiStatement ci;
      ci.left = scope[i].name;
      ci.right = scope[j].name;
      for (int z : given) ci.given.insert(scope[z].name);
      ci.max_deviation = stats.max_deviation;
      out.push_back(std::move(ci));
    }
  });
  return out;
}

std::vector<CiStatement> faithfulness_report(const Scm& scm, double tol) {
  if (!(tol > 0.0)) throw validation_error("tolerance must be positive");
  if (!scm.independent_noise()) {
    throw validation_error("faithfulness report unavailable: joint noise breaks the graph's Markov property");
  }
  std::vector<std::string> observed = scm.observed_names();
  JointTable joint = joint_distribution(scm, observed);
  Dag g = scm_graph(scm);

  std::vector<CiStatement> out;
  const auto& scope = joint.scope();
  for_each_triple(scope.size(), [&](int i, int j, const std::vector<int>& given) {
    TripleStats stats = ci_stats(joint, i, j, given);
    if (stats.max_deviation >= tol || !stats.informative) return;
    std::set<std::string> z;
    for (int k : given) z.insert(scope[k].name);
    if (d_separated(g, {scope[i].name}, {scope[j].name}, z)) return;
    CiStatement ci;
    ci.left = scope[i].name;
    ci.right = scope[j].name;
    ci.given = std::move(z);
    ci.max_deviation = stats.max_deviation;
    out.push_back(std::move(ci));
  });
  return out;
}

}  // namespace cfaudit
