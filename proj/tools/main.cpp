#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cfaudit/error.hpp"
#include "cfaudit/graph.hpp"
#include "cfaudit/model_io.hpp"
#include "cfaudit/scm.hpp"
#include "cfaudit/selection.hpp"
#include "cfaudit/verify.hpp"

namespace {

using nlohmann::ordered_json;
using namespace cfaudit;

constexpr int kSchemaVersion = 1;

std::string format_real(double v) {
  std::ostringstream os;
  os << std::setprecision(12) << v;
  std::string s = os.str();
  if (s.find_first_of(".einEIN") == std::string::npos) s += ".0";
  return s;
}

std::string trimmed(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(text);
  while (std::getline(is, item, sep)) out.push_back(trimmed(item));
  if (!text.empty() && text.back() == sep) out.push_back("");
  return out;
}

Assignment parse_assignment_list(const std::string& text) {
  Assignment out;
  if (trimmed(text).empty()) return out;
  for (const auto& item : split_list(text, ',')) {
    std::size_t eq = item.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw validation_error("expected name=value, got '" + item + "'");
    }
    std::string name = trimmed(item.substr(0, eq));
    std::string value = trimmed(item.substr(eq + 1));
    if (!out.emplace(name, value).second) {
      throw validation_error("variable '" + name + "' assigned twice");
    }
  }
  return out;
}

std::string render_set(const std::set<std::string>& s) {
  std::string out = "{";
  for (const auto& v : s) out += (out.size() > 1 ? ", " : "") + v;
  return out + "}";
}

std::string render_pattern(const Assignment& a) {
  std::string out = "{";
  for (const auto& [k, v] : a) out += (out.size() > 1 ? ", " : "") + k + "=" + v;
  return out + "}";
}

struct LoadedModel {
  Scm scm;
  std::string name;
};

// A model argument is either a file path or the name of a built-in fixture.
LoadedModel load_model_arg(const std::string& arg) {
  namespace fs = std::filesystem;
  if (fs::exists(arg)) {
    std::string text = read_text_file(arg);
    Scm scm = parse_model(text);
    std::string name = model_name(text);
    if (name.empty()) name = fs::path(arg).stem().string();
    return {std::move(scm), std::move(name)};
  }
  if (arg == "xor_sel") return {xor_sel(), arg};
  if (arg == "or_sel") return {or_sel(), arg};
  if (arg == "xor_sel_dependent") return {xor_sel_dependent(), arg};
  throw io_error("no such model file or built-in model: '" + arg +
                 "' (built-ins: xor_sel, or_sel, xor_sel_dependent)");
}

void emit(bool structured, const ordered_json& json, const std::string& text) {
  if (structured) {
    std::cout << json.dump(2) << "\n";
  } else {
    std::cout << text;
  }
}

int cmd_validate(const std::string& model_arg, bool structured) {
  LoadedModel m = load_model_arg(model_arg);
  std::vector<std::string> observed = m.scm.observed_names();
  std::vector<std::string> noise = m.scm.noise_names();

  ordered_json json{{"schema_version", kSchemaVersion},
                    {"command", "validate"},
                    {"model", m.name},
                    {"valid", true},
                    {"observed", observed},
                    {"noise", noise},
                    {"independent_noise", m.scm.independent_noise()},
                    {"noise_assignments", m.scm.noise_assignment_count()}};

  std::ostringstream text;
  text << "model: " << m.name << "\n";
  text << "observed:";
  for (const auto& v : observed) text << " " << v;
  text << "\nnoise:";
  for (const auto& v : noise) text << " " << v;
  text << " (" << (m.scm.independent_noise() ? "independent" : "joint") << ")\n";
  text << "noise assignments: " << m.scm.noise_assignment_count() << "\n";
  text << "status: valid\n";

  emit(structured, json, text.str());
  return 0;
}

int cmd_query(const std::string& model_arg, const std::string& evidence_str,
              const std::string& do_str, const std::string& target_str, bool structured) {
  LoadedModel m = load_model_arg(model_arg);
  Assignment evidence = parse_assignment_list(evidence_str);
  Assignment do_values = parse_assignment_list(do_str);
  std::vector<std::string> targets = split_list(target_str, ',');
  if (targets.empty() || targets.front().empty()) {
    throw validation_error("--target needs at least one variable");
  }

  JointTable dist = counterfactual_distribution(m.scm, evidence, do_values, targets);

  std::string label;
  if (do_values.size() == 1) {
    label = do_values.begin()->second;
  } else {
    for (const auto& [k, v] : do_values) label += (label.empty() ? "" : ",") + k + "=" + v;
  }
  std::vector<std::string> shown;
  for (const auto& t : targets) shown.push_back(label.empty() ? t : world_copy_name(t, label));

  ordered_json cells = ordered_json::array();
  std::ostringstream text;
  for (std::size_t flat = 0; flat < dist.cell_count(); ++flat) {
    std::vector<int> idx = dist.decode(flat);
    ordered_json cell;
    std::string event;
    for (std::size_t k = 0; k < shown.size(); ++k) {
      const std::string& value = dist.scope()[k].domain[static_cast<std::size_t>(idx[k])];
      cell[shown[k]] = value;
      event += (event.empty() ? "" : ",") + shown[k] + "=" + value;
    }
    double p = dist.probabilities()[flat];
    cells.push_back(ordered_json{{"event", cell}, {"probability", p}});
    text << "P(" << event << ")=" << format_real(p) << "\n";
  }

  ordered_json json{{"schema_version", kSchemaVersion},
                    {"command", "query"},
                    {"model", m.name},
                    {"evidence", evidence},
                    {"do", do_values},
                    {"cells", cells}};
  emit(structured, json, text.str());
  return 0;
}

std::vector<std::set<std::string>> parse_sets(const std::string& text, std::size_t min_parts,
                                              std::size_t max_parts, const std::string& synopsis) {
  std::vector<std::string> parts = split_list(text, '|');
  if (parts.size() < min_parts || parts.size() > max_parts) {
    throw validation_error("--sets expects " + synopsis);
  }
  std::vector<std::set<std::string>> out;
  for (const auto& part : parts) {
    std::set<std::string> s;
    for (const auto& name : split_list(part, ',')) {
      if (!name.empty()) s.insert(name);
    }
    out.push_back(std::move(s));
  }
  return out;
}

int cmd_graph_dsep(const std::string& dag_path, const std::string& sets_str, bool structured) {
  Dag g = parse_edge_list(read_text_file(dag_path));
  auto sets = parse_sets(sets_str, 2, 3, "'A[,B...] | C[,D...] [| Z[,W...]]'");
  const auto& a = sets[0];
  const auto& b = sets[1];
  std::set<std::string> c = sets.size() == 3 ? sets[2] : std::set<std::string>{};
  if (a.empty() || b.empty()) {
    throw validation_error("d-separation needs non-empty sets on both sides");
  }
  bool separated = d_separated(g, a, b, c);

  ordered_json json{{"schema_version", kSchemaVersion}, {"command", "graph dsep"},
                    {"dag", dag_path},                  {"left", a},
                    {"right", b},                       {"given", c},
                    {"d_separated", separated}};
  std::ostringstream text;
  text << "dag: " << dag_path << "\n";
  text << "query: " << render_set(a) << " vs " << render_set(b) << " given " << render_set(c)
       << "\n";
  text << "d-separated: " << (separated ? "yes" : "no") << "\n";
  emit(structured, json, text.str());
  return separated ? 0 : 1;
}

int cmd_graph_closure(const std::string& dag_path, const std::string& sets_str, bool structured) {
  Dag g = parse_edge_list(read_text_file(dag_path));
  auto sets = parse_sets(sets_str, 1, 2, "'A[,B...] [| X~Y[,V~W...]]'");
  const auto& sensitive = sets[0];
  if (sensitive.empty()) throw validation_error("closure needs a non-empty sensitive set");
  std::vector<std::pair<std::string, std::string>> latents;
  std::vector<std::string> latent_labels;
  if (sets.size() == 2) {
    for (const auto& pair : sets[1]) {
      std::size_t tilde = pair.find('~');
      if (tilde == std::string::npos || tilde == 0 || tilde + 1 == pair.size()) {
        throw validation_error("latent confounder pairs are written X~Y, got '" + pair + "'");
      }
      latents.emplace_back(pair.substr(0, tilde), pair.substr(tilde + 1));
      latent_labels.push_back(pair);
    }
  }
  bool closed = ancestrally_closed(g, sensitive, latents);

  ordered_json json{{"schema_version", kSchemaVersion},
                    {"command", "graph closure"},
                    {"dag", dag_path},
                    {"sensitive", sensitive},
                    {"latent_confounders", latent_labels},
                    {"ancestrally_closed", closed}};
  std::ostringstream text;
  text << "dag: " << dag_path << "\n";
  text << "sensitive: " << render_set(sensitive) << "\n";
  text << "latent confounders: ";
  if (latent_labels.empty()) {
    text << "none\n";
  } else {
    for (std::size_t i = 0; i < latent_labels.size(); ++i) {
      text << (i ? ", " : "") << latent_labels[i];
    }
    text << "\n";
  }
  text << "ancestrally closed: " << (closed ? "yes" : "no") << "\n";
  emit(structured, json, text.str());
  return closed ? 0 : 1;
}

const char* verdict_name(WitnessVerdict v) {
  switch (v) {
    case WitnessVerdict::violated: return "violated";
    case WitnessVerdict::boundary: return "boundary";
    case WitnessVerdict::not_violated: return "not_violated";
  }
  return "not_violated";
}

int cmd_audit(const std::string& input_path, const std::string& preset_name, double tol,
              bool structured) {
  AuditInput input = parse_audit_input(read_text_file(input_path));
  const PopulationPreset* preset = nullptr;
  if (!preset_name.empty()) {
    preset = find_population_preset(preset_name);
    if (!preset) {
      std::string known;
      for (const auto& p : population_presets()) known += (known.empty() ? "" : ", ") + p.name;
      throw validation_error("unknown preset '" + preset_name + "'; known presets: " + known);
    }
    apply_population_preset(input, *preset);
  }
  AuditReport report = audit_dataset(input, preset, tol);

  ordered_json bounds = ordered_json::array();
  for (const auto& b : report.bounds) {
    bounds.push_back(ordered_json{{"group", b.a}, {"against", b.aprime}, {"bound", b.bound}});
  }
  ordered_json findings = ordered_json::array();
  for (const auto& f : report.findings) {
    findings.push_back(ordered_json{{"pattern", f.witness.pattern},
                                    {"sensitive_value", f.witness.sensitive_value},
                                    {"probability", f.witness.probability},
                                    {"origin", f.witness.origin},
                                    {"verdict", verdict_name(f.verdict)},
                                    {"against", f.against},
                                    {"bound", f.bound}});
  }
  ordered_json json{{"schema_version", kSchemaVersion},
                    {"command", "audit"},
                    {"dataset", report.dataset},
                    {"sensitive", report.sensitive},
                    {"bounds", bounds},
                    {"findings", findings},
                    {"violation", report.violation},
                    {"verdict", report.verdict},
                    {"conditions", report.conditions},
                    {"notes", report.notes}};

  std::ostringstream text;
  text << "dataset: " << report.dataset << "\n";
  text << "sensitive: " << report.sensitive << "\n";
  text << "bounds:\n";
  for (const auto& b : report.bounds) {
    text << "  P(selected | pattern, " << b.a << ") <= " << format_real(b.bound) << "  (vs "
         << b.aprime << ")\n";
  }
  if (!report.findings.empty()) text << "witnesses:\n";
  for (const auto& f : report.findings) {
    text << "  [" << verdict_name(f.verdict) << "] " << render_pattern(f.witness.pattern) << " "
         << report.sensitive << "=" << f.witness.sensitive_value
         << " p=" << format_real(f.witness.probability) << " vs bound " << format_real(f.bound)
         << " (against " << f.against << ")";
    if (!f.witness.origin.empty()) text << "  [" << f.witness.origin << "]";
    text << "\n";
  }
  text << "verdict: " << report.verdict << "\n";
  text << "justification checklist:\n";
  for (const auto& line : report.conditions) text << "  " << line << "\n";
  if (!report.notes.empty()) {
    text << "notes:\n";
    for (const auto& n : report.notes) text << "  " << n << "\n";
  }
  emit(structured, json, text.str());
  return report.violation ? 1 : 0;
}

int cmd_witness(const std::string& csv_path, const std::string& rule,
                const std::string& sensitive_column, bool structured) {
  CsvTable table = parse_csv(read_text_file(csv_path));
  std::vector<WitnessRow> rows = deterministic_rule_witness(table, rule, sensitive_column);

  ordered_json witnesses = ordered_json::array();
  for (const auto& w : rows) {
    witnesses.push_back(ordered_json{{"pattern", w.pattern},
                                     {"sensitive_value", w.sensitive_value},
                                     {"probability", w.probability},
                                     {"origin", w.origin}});
  }
  ordered_json json{{"schema_version", kSchemaVersion},
                    {"command", "witness"},
                    {"csv", csv_path},
                    {"rule", rule},
                    {"sensitive", sensitive_column},
                    {"witnesses", witnesses}};

  std::ostringstream text;
  text << "csv: " << csv_path << " (" << table.rows.size() << " rows)\n";
  text << "rule: " << rule << "\n";
  text << "sensitive column: " << sensitive_column << "\n";
  text << "witnesses: " << rows.size() << "\n";
  for (const auto& w : rows) {
    text << "  " << render_pattern(w.pattern) << " " << sensitive_column << "="
         << w.sensitive_value << " p=" << format_real(w.probability) << "\n";
  }
  if (rows.empty()) text << "  (no row matches the rule)\n";
  emit(structured, json, text.str());
  return 0;
}

int cmd_verify(const std::string& suite, std::size_t trials, std::uint64_t seed, double tol,
               bool structured) {
  std::vector<std::string> names =
      suite == "all" ? verify_suite_names() : std::vector<std::string>{suite};
  std::vector<SuiteResult> results = run_suites(names, trials, seed, tol);
  bool all_passed = true;

  ordered_json suites = ordered_json::array();
  std::ostringstream text;
  for (const auto& r : results) {
    all_passed = all_passed && r.passed;
    suites.push_back(ordered_json{{"name", r.name},
                                  {"trials", r.trials},
                                  {"failures", r.failures},
                                  {"passed", r.passed},
                                  {"messages", r.messages}});
    text << "suite " << r.name << ": " << r.trials << " trials, " << r.failures << " failures ["
         << (r.passed ? "PASS" : "FAIL") << "]\n";
    for (const auto& m : r.messages) text << "  " << m << "\n";
  }
  text << "overall: " << (all_passed ? "PASS" : "FAIL") << "\n";

  ordered_json json{{"schema_version", kSchemaVersion},
                    {"command", "verify"},
                    {"trials", trials},
                    {"seed", seed},
                    {"tol", tol},
                    {"suites", suites},
                    {"passed", all_passed}};
  emit(structured, json, text.str());
  return all_passed ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"discrete causal models: counterfactual queries, graph checks, selection audits"};
  app.require_subcommand(1);

  std::string format = "text";
  double tol = 1e-9;
  app.add_option("--format", format, "report format")
      ->check(CLI::IsMember({"text", "structured"}));
  app.add_option("--tol", tol, "tolerance for checks and audit tie decisions (default 1e-9)");

  auto* c_validate = app.add_subcommand("validate", "parse a model and report its shape");
  c_validate->fallthrough();
  std::string v_model;
  c_validate->add_option("model", v_model, "model file or built-in name")->required();

  auto* c_query = app.add_subcommand("query", "exact counterfactual or observational probability");
  c_query->fallthrough();
  std::string q_model, q_evidence, q_do, q_target;
  c_query->add_option("--model", q_model, "model file or built-in name")->required();
  c_query->add_option("--evidence", q_evidence, "observed values, e.g. A=0,X=1");
  c_query->add_option("--do", q_do, "interventions, e.g. A=1");
  c_query->add_option("--target", q_target, "comma-separated target variables")->required();

  auto* c_graph = app.add_subcommand("graph", "structural checks on an edge-list graph");
  c_graph->require_subcommand(1);
  c_graph->fallthrough();
  auto* c_dsep = c_graph->add_subcommand("dsep", "d-separation of two sets given a third");
  c_dsep->fallthrough();
  std::string d_dag, d_sets;
  c_dsep->add_option("--dag", d_dag, "edge-list file: one 'parent child' per line")->required();
  c_dsep->add_option("--sets", d_sets, "'A[,B...] | C[,D...] [| Z[,W...]]'")->required();
  auto* c_closure = c_graph->add_subcommand("closure", "ancestral closure of a sensitive set");
  c_closure->fallthrough();
  std::string cl_dag, cl_sets;
  c_closure->add_option("--dag", cl_dag, "edge-list file: one 'parent child' per line")->required();
  c_closure->add_option("--sets", cl_sets, "'A[,B...] [| X~Y[,V~W...]]'")->required();

  auto* c_audit = app.add_subcommand("audit", "bound-based audit of a selected dataset");
  c_audit->fallthrough();
  std::string a_input, a_preset;
  c_audit->add_option("--input", a_input, "audit input JSON file")->required();
  c_audit->add_option("--preset", a_preset, "population preset: us1994, de1994, us1998");

  auto* c_witness = app.add_subcommand("witness",
                                       "derive probability-1 witnesses from an inclusion rule");
  c_witness->fallthrough();
  std::string w_csv, w_rule, w_sensitive;
  c_witness->add_option("--csv", w_csv, "CSV file with a header row")->required();
  c_witness->add_option("--rule", w_rule, "conjunction, e.g. \"hours>0 && age>=17\"")->required();
  c_witness->add_option("--sensitive", w_sensitive, "sensitive column name")->required();

  auto* c_verify = app.add_subcommand("verify", "randomized self-checks of the library guarantees");
  c_verify->fallthrough();
  std::string s_suite;
  std::size_t s_trials = 200;
  std::uint64_t s_seed = 7;
  c_verify->add_option("--suite", s_suite, "prop1|prop2|prop4|cor3|cor5|markov|all")
      ->required()
      ->check(CLI::IsMember({"prop1", "prop2", "prop4", "cor3", "cor5", "markov", "all"}));
  c_verify->add_option("--trials", s_trials, "trials per suite (default 200)");
  c_verify->add_option("--seed", s_seed, "base seed (default 7)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    bool structured = format == "structured";
    if (*c_validate) return cmd_validate(v_model, structured);
    if (*c_query) return cmd_query(q_model, q_evidence, q_do, q_target, structured);
    if (*c_dsep) return cmd_graph_dsep(d_dag, d_sets, structured);
    if (*c_closure) return cmd_graph_closure(cl_dag, cl_sets, structured);
    if (*c_audit) return cmd_audit(a_input, a_preset, tol, structured);
    if (*c_witness) return cmd_witness(w_csv, w_rule, w_sensitive, structured);
    if (*c_verify) return cmd_verify(s_suite, s_trials, s_seed, tol, structured);
  } catch (const cfaudit::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
