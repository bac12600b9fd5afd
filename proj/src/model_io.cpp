#include "cfaudit/model_io.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

namespace cfaudit {

using nlohmann::json;

namespace {

json parse_json(const std::string& text) {
  json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded()) throw parse_error("malformed JSON in model text");
  return doc;
}

std::vector<std::string> string_array(const json& node, const std::string& what) {
  if (!node.is_array()) throw parse_error(what + " must be an array");
  std::vector<std::string> out;
  for (const auto& item : node) {
    if (!item.is_string()) throw parse_error(what + " must contain strings");
    out.push_back(item.get<std::string>());
  }
  return out;
}

Assignment assignment_from(const json& node, const std::string& what) {
  if (!node.is_object()) throw parse_error(what + " must be an object");
  Assignment a;
  for (auto it = node.begin(); it != node.end(); ++it) {
    if (!it.value().is_string()) throw parse_error(what + " values must be strings");
    a[it.key()] = it.value().get<std::string>();
  }
  return a;
}

// Flat index of `when` over the given parent domains; throws on unknown
// parents, missing parents, or out-of-domain values.
std::size_t row_index(const Assignment& when, const std::vector<std::string>& parents,
                      const std::vector<std::vector<std::string>>& domains,
                      const std::string& var) {
  if (when.size() != parents.size()) {
    throw parse_error("equation row for '" + var + "' must assign exactly its parents");
  }
  std::size_t flat = 0;
  std::size_t stride = 1;
  for (std::size_t k = parents.size(); k-- > 0;) {
    auto it = when.find(parents[k]);
    if (it == when.end()) {
      throw parse_error("equation row for '" + var + "' is missing parent '" + parents[k] + "'");
    }
    auto dit = std::find(domains[k].begin(), domains[k].end(), it->second);
    if (dit == domains[k].end()) {
      throw parse_error("equation row for '" + var + "' uses value '" + it->second +
                        "' outside the domain of '" + parents[k] + "'");
    }
    flat += stride * static_cast<std::size_t>(dit - domains[k].begin());
    stride *= domains[k].size();
  }
  return flat;
}

}  // namespace

namespace {

Scm parse_model_impl(const std::string& text, std::uint64_t enumeration_cap) {
  json doc = parse_json(text);
  if (!doc.is_object()) throw parse_error("model text must be a JSON object");
  if (!doc.contains("variables") || !doc["variables"].is_array()) {
    throw parse_error("model is missing a 'variables' array");
  }

  struct VarDecl {
    std::string name;
    std::vector<std::string> domain;
    VarKind kind;
  };
  std::vector<VarDecl> decls;
  std::map<std::string, std::size_t> decl_index;
  for (const auto& vnode : doc["variables"]) {
    if (!vnode.is_object() || !vnode.contains("name") || !vnode.contains("kind") ||
        !vnode.contains("domain")) {
      throw parse_error("each variable needs 'name', 'kind' and 'domain'");
    }
    VarDecl d;
    d.name = vnode["name"].get<std::string>();
    std::string kind = vnode["kind"].get<std::string>();
    if (kind == "noise") {
      d.kind = VarKind::noise;
    } else if (kind == "observed") {
      d.kind = VarKind::observed;
    } else {
      throw parse_error("variable '" + d.name + "' has unknown kind '" + kind + "'");
    }
    d.domain = string_array(vnode["domain"], "domain of '" + d.name + "'");
    if (decl_index.count(d.name)) throw parse_error("duplicate variable '" + d.name + "'");
    decl_index[d.name] = decls.size();
    decls.push_back(std::move(d));
  }

  std::map<std::string, std::vector<std::string>> parents;
  if (doc.contains("parents")) {
    if (!doc["parents"].is_object()) throw parse_error("'parents' must be an object");
    for (auto it = doc["parents"].begin(); it != doc["parents"].end(); ++it) {
      if (!decl_index.count(it.key())) {
        throw parse_error("'parents' names unknown variable '" + it.key() + "'");
      }
      parents[it.key()] = string_array(it.value(), "parents of '" + it.key() + "'");
    }
  }

  ScmBuilder b;
  const json& noise = doc.contains("noise") ? doc["noise"] : json::object();
  bool joint_noise = noise.is_object() && noise.contains("joint");

  for (const auto& d : decls) {
    if (d.kind == VarKind::noise) {
      if (joint_noise) {
        b.add_noise_deferred(d.name, d.domain);
      } else {
        if (!noise.contains(d.name)) {
          throw parse_error("noise variable '" + d.name + "' has no distribution");
        }
        const json& dist_node = noise[d.name];
        if (!dist_node.is_array()) {
          throw parse_error("distribution of '" + d.name + "' must be an array");
        }
        std::vector<double> dist;
        for (const auto& p : dist_node) {
          if (!p.is_number()) throw parse_error("distribution of '" + d.name + "' must be numeric");
          dist.push_back(p.get<double>());
        }
        b.add_noise(d.name, d.domain, std::move(dist));
      }
      continue;
    }

    std::vector<std::string> plist;
    if (auto it = parents.find(d.name); it != parents.end()) plist = it->second;
    std::vector<std::vector<std::string>> pdomains;
    for (const auto& pname : plist) {
      auto pit = decl_index.find(pname);
      if (pit == decl_index.end()) {
        throw parse_error("unknown parent '" + pname + "' of '" + d.name + "'");
      }
      pdomains.push_back(decls[pit->second].domain);
    }

    if (!doc.contains("equations") || !doc["equations"].is_object() ||
        !doc["equations"].contains(d.name)) {
      throw parse_error("observed variable '" + d.name + "' has no equation");
    }
    const json& rows = doc["equations"][d.name];
    if (!rows.is_array()) throw parse_error("equation of '" + d.name + "' must be an array of rows");
    std::size_t expected = 1;
    for (const auto& dom : pdomains) expected *= dom.size();
    std::vector<int> table(expected, -1);
    for (const auto& row : rows) {
      if (!row.is_object() || !row.contains("when") || !row.contains("value")) {
        throw parse_error("equation row for '" + d.name + "' needs 'when' and 'value'");
      }
      Assignment when = assignment_from(row["when"], "equation row for '" + d.name + "'");
      std::size_t flat = row_index(when, plist, pdomains, d.name);
      if (table[flat] != -1) {
        throw parse_error("equation for '" + d.name + "' repeats a parent assignment");
      }
      std::string value = row["value"].get<std::string>();
      auto vit = std::find(d.domain.begin(), d.domain.end(), value);
      if (vit == d.domain.end()) {
        throw parse_error("equation for '" + d.name + "' maps to out-of-domain value '" + value + "'");
      }
      table[flat] = static_cast<int>(vit - d.domain.begin());
    }
    for (int cell : table) {
      if (cell == -1) {
        throw parse_error("equation for '" + d.name + "' is not total: a parent assignment is missing");
      }
    }
    b.add_observed(d.name, d.domain, plist, std::move(table));
  }

  if (joint_noise) {
    const json& jn = noise["joint"];
    if (!jn.is_object() || !jn.contains("rows") || !jn["rows"].is_array()) {
      throw parse_error("'noise.joint' must contain a 'rows' array");
    }
    std::vector<std::string> noise_names;
    std::vector<std::vector<std::string>> noise_domains;
    for (const auto& d : decls) {
      if (d.kind == VarKind::noise) {
        noise_names.push_back(d.name);
        noise_domains.push_back(d.domain);
      }
    }
    std::size_t cells = 1;
    for (const auto& dom : noise_domains) cells *= dom.size();
    std::vector<double> flat(cells, -1.0);
    for (const auto& row : jn["rows"]) {
      if (!row.is_object() || !row.contains("when") || !row.contains("p")) {
        throw parse_error("joint noise row needs 'when' and 'p'");
      }
      Assignment when = assignment_from(row["when"], "joint noise row");
      std::size_t idx = row_index(when, noise_names, noise_domains, "joint noise");
      if (flat[idx] != -1.0) throw parse_error("joint noise repeats an assignment");
      if (!row["p"].is_number()) throw parse_error("joint noise 'p' must be numeric");
      flat[idx] = row["p"].get<double>();
    }
    for (double& p : flat) {
      if (p == -1.0) throw parse_error("joint noise is not total: an assignment is missing");
    }
    b.joint_noise(std::move(flat));
  }

  return b.build(enumeration_cap);
}

}  // namespace

Scm parse_model(const std::string& text, std::uint64_t enumeration_cap) {
  try {
    return parse_model_impl(text, enumeration_cap);
  } catch (const json::exception& e) {
    throw parse_error(std::string("model text: ") + e.what());
  }
}

Scm load_model_file(const std::filesystem::path& path, std::uint64_t enumeration_cap) {
  return parse_model(read_text_file(path), enumeration_cap);
}

std::string model_name(const std::string& text) {
  json doc = parse_json(text);
  if (doc.is_object() && doc.contains("name") && doc["name"].is_string()) {
    return doc["name"].get<std::string>();
  }
  return "";
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot read file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace cfaudit
