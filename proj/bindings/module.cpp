#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

#include "cfaudit/error.hpp"
#include "cfaudit/fairness.hpp"
#include "cfaudit/graph.hpp"
#include "cfaudit/model_io.hpp"
#include "cfaudit/scm.hpp"
#include "cfaudit/selection.hpp"
#include "cfaudit/verify.hpp"

namespace py = pybind11;
using namespace cfaudit;
using nlohmann::ordered_json;

namespace {

// All report-producing functions hand JSON text to Python; the package
// wrapper turns it into dicts. Raw values (bools, floats, model handles)
// cross the boundary directly.

ordered_json cells_json(const JointTable& t) {
  ordered_json cells = ordered_json::array();
  for (std::size_t flat = 0; flat < t.cell_count(); ++flat) {
    ordered_json event;
    std::vector<int> idx = t.decode(flat);
    for (std::size_t k = 0; k < t.scope().size(); ++k) {
      event[t.scope()[k].name] = t.scope()[k].domain[static_cast<std::size_t>(idx[k])];
    }
    cells.push_back(ordered_json{{"event", event}, {"probability", t.probabilities()[flat]}});
  }
  return cells;
}

ordered_json independence_json(const IndependenceCheck& c) {
  return ordered_json{{"holds", c.holds},       {"max_deviation", c.max_deviation},
                      {"world", c.world},       {"worst_cell", c.worst_cell},
                      {"group_a", c.group_a},   {"group_b", c.group_b}};
}

std::optional<SelectionSpec> selection_of(const Scm& scm, const std::optional<std::string>& name) {
  if (!name) return std::nullopt;
  return make_selection(scm, *name);
}

std::string query_json(const Scm& scm, const Assignment& evidence, const Assignment& do_values,
                       const std::vector<std::string>& targets) {
  JointTable t = counterfactual_distribution(scm, evidence, do_values, targets);
  // Targets of an interventional query are reported under their world-copy
  // names, e.g. X(1) for X under do(A=1).
  std::string label;
  if (do_values.size() == 1) {
    label = do_values.begin()->second;
  } else {
    for (const auto& [k, v] : do_values) label += (label.empty() ? "" : ",") + k + "=" + v;
  }
  ordered_json cells = cells_json(t);
  if (!label.empty()) {
    for (auto& cell : cells) {
      ordered_json renamed;
      for (const auto& [name, value] : cell["event"].items()) {
        renamed[world_copy_name(name, label)] = value;
      }
      cell["event"] = std::move(renamed);
    }
  }
  return ordered_json{{"cells", cells}}.dump();
}

std::string joint_json(const Scm& scm, const std::vector<std::string>& names) {
  return ordered_json{{"cells", cells_json(joint_distribution(scm, names))}}.dump();
}

std::string ignorability_json(const Scm& scm, const std::string& sensitive,
                              const std::optional<std::string>& selection, double tol) {
  PotentialOutcomeTable pot = potential_outcome_table(scm, sensitive, selection_of(scm, selection));
  IndependenceCheck c =
      selection ? check_ignorability_under_selection(pot, tol) : check_ignorability(pot, tol);
  return independence_json(c).dump();
}

std::string existence_json(const Scm& scm, const std::string& sensitive,
                           const std::optional<std::string>& selection, double tol) {
  PotentialOutcomeTable pot = potential_outcome_table(scm, sensitive, selection_of(scm, selection));
  ExistenceResult r = exists_independent_model(pot, tol);
  return ordered_json{{"exists", r.exists},
                      {"check", independence_json(r.check)},
                      {"observational_mismatch", r.observational_mismatch},
                      {"counterfactual_mismatch", r.counterfactual_mismatch}}
      .dump();
}

std::string scaled_check_json(const Scm& scm, const std::string& sensitive,
                              const std::string& selection, double tol) {
  PotentialOutcomeTable pot = potential_outcome_table(scm, sensitive, selection_of(scm, selection));
  ScaledSelectionResult r = scaled_selection_check(pot, tol);
  ordered_json failures = ordered_json::array();
  for (const auto& f : r.failures) {
    failures.push_back(ordered_json{{"covariates", f.covariates},
                                    {"a", f.a},
                                    {"aprime", f.aprime},
                                    {"lhs", f.lhs},
                                    {"rhs", f.rhs}});
  }
  return ordered_json{
      {"holds", r.holds}, {"max_deviation", r.max_deviation}, {"failures", failures}}
      .dump();
}

const char* verdict_name(WitnessVerdict v) {
  switch (v) {
    case WitnessVerdict::violated: return "violated";
    case WitnessVerdict::boundary: return "boundary";
    case WitnessVerdict::not_violated: return "not_violated";
  }
  return "not_violated";
}

std::string audit_json(const std::string& input_text, const std::optional<std::string>& preset_name,
                       double tie_tol) {
  AuditInput input = parse_audit_input(input_text);
  const PopulationPreset* preset = nullptr;
  if (preset_name) {
    preset = find_population_preset(*preset_name);
    if (!preset) throw validation_error("unknown preset '" + *preset_name + "'");
    apply_population_preset(input, *preset);
  }
  AuditReport r = audit_dataset(input, preset, tie_tol);
  ordered_json bounds = ordered_json::array();
  for (const auto& b : r.bounds) {
    bounds.push_back(ordered_json{{"group", b.a}, {"against", b.aprime}, {"bound", b.bound}});
  }
  ordered_json findings = ordered_json::array();
  for (const auto& f : r.findings) {
    findings.push_back(ordered_json{{"pattern", f.witness.pattern},
                                    {"sensitive_value", f.witness.sensitive_value},
                                    {"probability", f.witness.probability},
                                    {"origin", f.witness.origin},
                                    {"verdict", verdict_name(f.verdict)},
                                    {"against", f.against},
                                    {"bound", f.bound}});
  }
  return ordered_json{{"dataset", r.dataset},     {"sensitive", r.sensitive},
                      {"bounds", bounds},         {"findings", findings},
                      {"violation", r.violation}, {"verdict", r.verdict},
                      {"conditions", r.conditions}, {"notes", r.notes}}
      .dump();
}

std::string witnesses_json(const std::string& csv_text, const std::string& rule,
                           const std::string& sensitive) {
  CsvTable table = parse_csv(csv_text);
  ordered_json rows = ordered_json::array();
  for (const auto& w : deterministic_rule_witness(table, rule, sensitive)) {
    rows.push_back(ordered_json{{"pattern", w.pattern},
                                {"sensitive_value", w.sensitive_value},
                                {"probability", w.probability},
                                {"origin", w.origin}});
  }
  return ordered_json{{"witnesses", rows}}.dump();
}

std::string fairness_json(const Scm& scm, const std::string& predictor_text,
                          const std::string& sensitive, double tol) {
  Predictor pred = parse_predictor(predictor_text);
  FairnessVerdict v = check_counterfactual_fairness(scm, pred, sensitive, tol);
  return ordered_json{{"holds", v.holds},
                      {"deviation", v.deviation},
                      {"worst_context", v.worst_context},
                      {"worst_world", v.worst_world},
                      {"worst_output", v.worst_output},
                      {"contexts_checked", v.contexts_checked},
                      {"contexts_skipped", v.contexts_skipped}}
      .dump();
}

std::string parity_json(const Scm& scm, const std::string& predictor_text,
                        const std::string& sensitive, const std::optional<std::string>& selection,
                        double tol) {
  Predictor pred = parse_predictor(predictor_text);
  ParityVerdict v =
      check_demographic_parity(scm, pred, sensitive, selection_of(scm, selection), tol);
  return ordered_json{{"holds", v.holds},
                      {"gap", v.gap},
                      {"worst_output", v.worst_output},
                      {"group_a", v.group_a},
                      {"group_b", v.group_b}}
      .dump();
}

std::string build_fair_json(const Scm& scm, const std::string& sensitive,
                            const std::string& target) {
  BuiltPredictor built = build_cf_fair_predictor(scm, sensitive, target);
  return ordered_json{{"predictor", serialize_predictor(built.predictor)},
                      {"accuracy", built.accuracy},
                      {"classes", built.classes},
                      {"degenerate", built.degenerate},
                      {"warning", built.warning}}
      .dump();
}

std::string suite_json(const std::string& name, std::size_t trials, std::uint64_t seed,
                       double tol) {
  SuiteResult r = run_suite(name, trials, seed, tol);
  return ordered_json{{"name", r.name},
                      {"trials", r.trials},
                      {"failures", r.failures},
                      {"passed", r.passed},
                      {"messages", r.messages}}
      .dump();
}

std::string faithfulness_json(const Scm& scm, double tol) {
  ordered_json rows = ordered_json::array();
  for (const auto& ci : faithfulness_report(scm, tol)) {
    rows.push_back(ordered_json{{"left", ci.left},
                                {"right", ci.right},
                                {"given", ci.given},
                                {"max_deviation", ci.max_deviation}});
  }
  return ordered_json{{"independencies", rows}}.dump();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "exact discrete causal models with selection-bias and fairness audits";

  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    }
  });

  py::class_<Scm>(m, "Model")
      .def_property_readonly("observed", &Scm::observed_names)
      .def_property_readonly("noise", &Scm::noise_names)
      .def_property_readonly("independent_noise", &Scm::independent_noise)
      .def("__repr__", [](const Scm& s) {
        return "<Model observed=" + std::to_string(s.observed_names().size()) +
               " noise=" + std::to_string(s.noise_names().size()) + ">";
      });

  m.def("load_model", [](const std::string& text) { return parse_model(text); },
        py::arg("text"));
  m.def("builtin_model", [](const std::string& name) {
    if (name == "xor_sel") return xor_sel();
    if (name == "or_sel") return or_sel();
    if (name == "xor_sel_dependent") return xor_sel_dependent();
    throw validation_error("unknown built-in model '" + name + "'");
  });

  m.def("query_json", &query_json, py::arg("model"), py::arg("evidence"), py::arg("do_values"),
        py::arg("targets"));
  m.def("joint_json", &joint_json, py::arg("model"), py::arg("names"));
  m.def("ignorability_json", &ignorability_json, py::arg("model"), py::arg("sensitive"),
        py::arg("selection"), py::arg("tol"));
  m.def("existence_json", &existence_json, py::arg("model"), py::arg("sensitive"),
        py::arg("selection"), py::arg("tol"));
  m.def("scaled_check_json", &scaled_check_json, py::arg("model"), py::arg("sensitive"),
        py::arg("selection"), py::arg("tol"));
  m.def("corollary_bound", &corollary_bound, py::arg("p_a_sel"), py::arg("p_aprime_sel"),
        py::arg("p_a"), py::arg("p_aprime"));
  m.def("audit_json", &audit_json, py::arg("input_text"), py::arg("preset"), py::arg("tie_tol"));
  m.def("witnesses_json", &witnesses_json, py::arg("csv_text"), py::arg("rule"),
        py::arg("sensitive"));
  m.def("fairness_json", &fairness_json, py::arg("model"), py::arg("predictor"),
        py::arg("sensitive"), py::arg("tol"));
  m.def("parity_json", &parity_json, py::arg("model"), py::arg("predictor"), py::arg("sensitive"),
        py::arg("selection"), py::arg("tol"));
  m.def("build_fair_json", &build_fair_json, py::arg("model"), py::arg("sensitive"),
        py::arg("target"));
  m.def("posterior_draw", [](const Scm& scm, const std::string& sensitive, const std::string& a,
                             const std::string& coordinate) {
    return serialize_predictor(posterior_draw_predictor(scm, sensitive, a, coordinate));
  });
  m.def("suite_json", &suite_json, py::arg("name"), py::arg("trials"), py::arg("seed"),
        py::arg("tol"));
  m.def("d_separated", [](const std::string& dag_text, const std::set<std::string>& a,
                          const std::set<std::string>& b, const std::set<std::string>& c) {
    return d_separated(parse_edge_list(dag_text), a, b, c);
  });
  m.def("faithfulness_json", &faithfulness_json, py::arg("model"), py::arg("tol"));
}
