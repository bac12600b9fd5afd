#pragma once

#include <set>
#include <string>
#include <utility>
#include <vector>

#include "cfaudit/scm.hpp"

namespace cfaudit {

// Finite directed acyclic graph over named nodes.
class Dag {
 public:
  Dag(std::vector<std::string> nodes, std::vector<std::pair<std::string, std::string>> edges);

  const std::vector<std::string>& nodes() const { return nodes_; }
  const std::vector<std::pair<std::string, std::string>>& edges() const { return edges_; }
  bool has_node(const std::string& name) const;
  bool has_edge(const std::string& from, const std::string& to) const;
  std::vector<std::string> parents(const std::string& node) const;
  std::vector<std::string> children(const std::string& node) const;
  // Ancestors of the given set, not including the set itself.
  std::set<std::string> ancestors(const std::set<std::string>& of) const;

 private:
  std::vector<std::string> nodes_;
  std::vector<std::pair<std::string, std::string>> edges_;
};

// Edge-list text: one "parent child" pair per whitespace-separated line.
// Lines starting with '#' are comments. Nodes are taken from the edges.
Dag parse_edge_list(const std::string& text);

// The model's full graph: noise and observed variables, parent edges.
Dag scm_graph(const Scm& scm);

// Classic d-separation of set `a` from set `b` given set `c`,
// decided on the moralized ancestral subgraph.
bool d_separated(const Dag& g, const std::set<std::string>& a, const std::set<std::string>& b,
                 const std::set<std::string>& c);

// True when no node in `sensitive` has a parent outside `sensitive` and no
// declared latent confounder pair couples a sensitive node to any node.
bool ancestrally_closed(const Dag& g, const std::set<std::string>& sensitive,
                        const std::vector<std::pair<std::string, std::string>>& latent_confounders);

// One conditional-independence statement with its measured deviation,
// sup over cells of |P(x,y|z) - P(x|z)P(y|z)|.
struct CiStatement {
  std::string left;
  std::string right;
  std::set<std::string> given;
  double max_deviation = 0.0;
};

// Deviation of one conditional-independence statement in the table,
// sup over cells of |P(x,y|z) - P(x|z)P(y|z)|; zero-mass conditioning
// cells are skipped.
double ci_deviation(const JointTable& table, const std::string& left, const std::string& right,
                    const std::set<std::string>& given);

// Every pairwise conditional independence holding in the table within tol,
// over all conditioning subsets of the remaining scope. Cells whose
// conditioning event has probability zero are skipped.
std::vector<CiStatement> enumerate_cis(const JointTable& table, double tol);

// Independences among observed variables that hold in the exact joint but
// are not implied by d-separation in the model graph. Independences forced
// by conditional determinism (one side constant within every positive
// conditioning cell) are vacuous and omitted. Requires independent noise.
std::vector<CiStatement> faithfulness_report(const Scm& scm, double tol);

}  // namespace cfaudit
