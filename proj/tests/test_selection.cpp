#include <doctest.h>

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "cfaudit/model_io.hpp"
#include "cfaudit/selection.hpp"
#include "cfaudit/verify.hpp"

using namespace cfaudit;

namespace {

bool throws_kind(Error::Kind kind, const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind() == kind;
  }
  return false;
}

// xor_sel with the selection indicator forced to 1: everyone is selected.
Scm xor_always_selected() {
  ScmBuilder b;
  b.add_noise("U_A", {"0", "1"}, {0.5, 0.5});
  b.add_noise("U_X", {"0", "1"}, {0.5, 0.5});
  b.add_observed("A", {"0", "1"}, {"U_A"}, {0, 1});
  b.add_observed("X", {"0", "1"}, {"A", "U_X"}, {0, 1, 1, 0});
  b.add_observed("S", {"0", "1"}, {"X"}, {1, 1});
  return b.build();
}

bool note_containing(const std::vector<std::string>& notes, const std::string& needle) {
  for (const auto& n : notes) {
    if (n.find(needle) != std::string::npos) return true;
  }
  return false;
}

std::string fixture_text(const std::string& name) {
  return read_text_file(std::string(CFAUDIT_FIXTURE_DIR) + "/" + name);
}

}  // namespace

TEST_CASE("selection variable validation") {
  Scm scm = xor_sel();
  CHECK(make_selection(scm, "S").variable == "S");
  CHECK(throws_kind(Error::Kind::validation, [&] { make_selection(scm, "U_X"); }));
  CHECK(throws_kind(Error::Kind::validation, [&] { make_selection(scm, "X"); }));  // has children

  ScmBuilder b;
  b.add_noise("U", {"0", "1"}, {0.5, 0.5});
  b.add_observed("S", {"lo", "hi"}, {"U"}, {0, 1});
  Scm bad = b.build();
  CHECK(throws_kind(Error::Kind::validation, [&] { make_selection(bad, "S"); }));
}

TEST_CASE("potential outcome table construction") {
  Scm scm = xor_sel();
  PotentialOutcomeTable pot = potential_outcome_table(scm, "A", make_selection(scm, "S"));

  CHECK(pot.sensitive() == "A");
  CHECK(pot.covariates() == std::vector<std::string>{"X"});
  CHECK(pot.selection_variable().has_value());

  // The factual marginal reproduces the host joint.
  JointTable factual = pot.joint().marginal({"A", "X", "S"});
  JointTable host = joint_distribution(scm, {"A", "X", "S"});
  CHECK(factual.max_cell_difference(host) <= 1e-12);

  // Worked value: whoever has A=0, X=1 would definitely have X=0 under A=1.
  const std::string x1 = world_copy_name("X", "1");
  CHECK(pot.joint().conditional_mass({{x1, "0"}}, {{"A", "0"}, {"X", "1"}}) == doctest::Approx(1.0));

  // Consistency is exact: cells disagreeing with the realized world are 0.
  JointTable m = pot.joint().marginal({"A", "X", x1});
  for (std::size_t flat = 0; flat < m.cell_count(); ++flat) {
    Assignment cell = m.cell_assignment(flat);
    if (cell["A"] == "1" && cell["X"] != cell[x1]) CHECK(m.probabilities()[flat] == 0.0);
  }
}

TEST_CASE("potential outcome table rejects open sensitive roots") {
  // Observed parent of the sensitive attribute.
  {
    ScmBuilder b;
    b.add_noise("U_W", {"0", "1"}, {0.5, 0.5});
    b.add_noise("U_A", {"0", "1"}, {0.5, 0.5});
    b.add_observed("W", {"0", "1"}, {"U_W"}, {0, 1});
    b.add_observed("A", {"0", "1"}, {"W", "U_A"}, {0, 0, 0, 1});
    Scm scm = b.build();
    CHECK(throws_kind(Error::Kind::validation,
                      [&] { potential_outcome_table(scm, "A", std::nullopt); }));
  }
  // Shared noise between the sensitive attribute and a covariate.
  {
    ScmBuilder b;
    b.add_noise("U", {"0", "1"}, {0.5, 0.5});
    b.add_observed("A", {"0", "1"}, {"U"}, {0, 1});
    b.add_observed("X", {"0", "1"}, {"U"}, {1, 0});
    Scm scm = b.build();
    CHECK(throws_kind(Error::Kind::validation,
                      [&] { potential_outcome_table(scm, "A", std::nullopt); }));
  }
  // Selection coinciding with the sensitive attribute.
  {
    Scm scm = xor_sel();
    CHECK(throws_kind(Error::Kind::validation,
                      [&] { potential_outcome_table(scm, "S", make_selection(scm, "S")); }));
  }
}

TEST_CASE("ignorability with and without selection on xor_sel") {
  Scm scm = xor_sel();
  PotentialOutcomeTable pot = potential_outcome_table(scm, "A", make_selection(scm, "S"));

  IndependenceCheck plain = check_ignorability(pot, 1e-9);
  CHECK(plain.holds);
  CHECK(plain.max_deviation <= 1e-12);

  IndependenceCheck selected = check_ignorability_under_selection(pot, 1e-9);
  CHECK_FALSE(selected.holds);
  CHECK(selected.max_deviation == doctest::Approx(1.0));

  // Conditioning on selection requires a selection variable.
  PotentialOutcomeTable no_sel = potential_outcome_table(scm, "A", std::nullopt);
  CHECK(throws_kind(Error::Kind::validation,
                    [&] { check_ignorability_under_selection(no_sel, 1e-9); }));
}

TEST_CASE("dependent noise breaks plain ignorability by 0.4") {
  Scm scm = xor_sel_dependent();
  PotentialOutcomeTable pot = potential_outcome_table(scm, "A", std::nullopt);
  IndependenceCheck c = check_ignorability(pot, 1e-9);
  CHECK_FALSE(c.holds);
  CHECK(c.max_deviation == doctest::Approx(0.4));
}

TEST_CASE("never-selected group raises zero probability") {
  // Selection admits only A=1.
  ScmBuilder b;
  b.add_noise("U_A", {"0", "1"}, {0.5, 0.5});
  b.add_noise("U_X", {"0", "1"}, {0.5, 0.5});
  b.add_observed("A", {"0", "1"}, {"U_A"}, {0, 1});
  b.add_observed("X", {"0", "1"}, {"A", "U_X"}, {0, 1, 1, 0});
  b.add_observed("S", {"0", "1"}, {"A"}, {0, 1});
  Scm scm = b.build();
  PotentialOutcomeTable pot = potential_outcome_table(scm, "A", make_selection(scm, "S"));
  CHECK(throws_kind(Error::Kind::zero_probability,
                    [&] { check_ignorability_under_selection(pot, 1e-9); }));
}

TEST_CASE("independent model existence") {
  SUBCASE("xor_sel under its covariate-driven selection: none exists") {
    Scm scm = xor_sel();
    PotentialOutcomeTable pot = potential_outcome_table(scm, "A", make_selection(scm, "S"));
    ExistenceResult r = exists_independent_model(pot, 1e-9);
    CHECK_FALSE(r.exists);
    CHECK_FALSE(r.model.has_value());
    CHECK(r.check.max_deviation == doctest::Approx(1.0));
  }

  SUBCASE("with everyone selected, the reconstruction reproduces the joint") {
    Scm scm = xor_always_selected();
    PotentialOutcomeTable pot = potential_outcome_table(scm, "A", make_selection(scm, "S"));
    ExistenceResult r = exists_independent_model(pot, 1e-9);
    REQUIRE(r.exists);
    REQUIRE(r.model.has_value());
    CHECK(r.model->independent_noise());
    CHECK(r.observational_mismatch <= 1e-12);
    CHECK(r.counterfactual_mismatch <= 1e-12);

    // Cross-check the observational match directly.
    JointTable selected =
        joint_distribution(scm, {"A", "X", "S"}).conditioned({{"S", "1"}});
    std::vector<std::string> names;
    for (const auto& v : selected.scope()) names.push_back(v.name);
    JointTable rebuilt = joint_distribution(*r.model, names);
    CHECK(rebuilt.max_cell_difference(selected) <= 1e-12);
  }

  SUBCASE("selection by an independent coin also admits a model") {
    ScmBuilder b;
    b.add_noise("U_A", {"0", "1"}, {0.5, 0.5});
    b.add_noise("U_X", {"0", "1"}, {0.5, 0.5});
    b.add_noise("U_S", {"0", "1"}, {0.3, 0.7});
    b.add_observed("A", {"0", "1"}, {"U_A"}, {0, 1});
    b.add_observed("X", {"0", "1"}, {"A", "U_X"}, {0, 1, 1, 0});
    b.add_observed("S", {"0", "1"}, {"U_S"}, {0, 1});
    Scm scm = b.build();
    PotentialOutcomeTable pot = potential_outcome_table(scm, "A", make_selection(scm, "S"));
    ExistenceResult r = exists_independent_model(pot, 1e-9);
    CHECK(r.exists);
    CHECK(r.observational_mismatch <= 1e-12);
    CHECK(r.counterfactual_mismatch <= 1e-12);
  }
}

TEST_CASE("scaled selection ratios on xor_sel") {
  Scm scm = xor_sel();
  PotentialOutcomeTable pot = potential_outcome_table(scm, "A", make_selection(scm, "S"));
  ScaledSelectionResult r = scaled_selection_check(pot, 1e-9);
  CHECK_FALSE(r.holds);
  CHECK(r.max_deviation == doctest::Approx(2.0));

  bool found = false;
  for (const auto& f : r.failures) {
    if (f.a == "0" && f.aprime == "1" && f.covariates == Assignment{{"X", "1"}}) {
      CHECK(f.lhs == doctest::Approx(2.0));
      CHECK(f.rhs == doctest::Approx(0.0));
      found = true;
    }
  }
  CHECK(found);

  // Balanced selection passes.
  Scm always = xor_always_selected();
  PotentialOutcomeTable pot2 = potential_outcome_table(always, "A", make_selection(always, "S"));
  CHECK(scaled_selection_check(pot2, 1e-9).holds);
}

TEST_CASE("pairwise bound arithmetic") {
  CHECK(corollary_bound(0.33, 0.67, 0.509, 0.491) ==
        doctest::Approx(0.33 * 0.491 / (0.67 * 0.509)).epsilon(1e-12));
  CHECK(throws_kind(Error::Kind::validation, [] { corollary_bound(0.0, 0.5, 0.5, 0.5); }));
  CHECK(throws_kind(Error::Kind::validation, [] { corollary_bound(0.5, 1.2, 0.5, 0.5); }));
  CHECK(throws_kind(Error::Kind::validation, [] { corollary_bound(0.5, 0.5, -0.1, 0.5); }));
}

TEST_CASE("population presets reproduce the reference bounds") {
  const PopulationPreset* us94 = find_population_preset("us1994");
  const PopulationPreset* de94 = find_population_preset("de1994");
  const PopulationPreset* us98 = find_population_preset("us1998");
  REQUIRE(us94);
  REQUIRE(de94);
  REQUIRE(us98);
  CHECK(find_population_preset("nope") == nullptr);

  double adult = corollary_bound(0.33, 0.67, us94->population_freq.at("Female"),
                                 us94->population_freq.at("Male"));
  CHECK(std::abs(adult - 0.475) <= 0.001);

  double german = corollary_bound(0.31, 0.69, de94->population_freq.at("Female"),
                                  de94->population_freq.at("Male"));
  CHECK(std::abs(german - 0.421) <= 0.001);

  double law = corollary_bound(0.438, 0.562, us98->population_freq.at("Female"),
                               us98->population_freq.at("Male"));
  CHECK(std::abs(law - 0.789) <= 0.001);
}

TEST_CASE("audit input parsing and validation") {
  AuditInput input = parse_audit_input(fixture_text("adult_audit.json"));
  CHECK(input.name == "Adult");
  CHECK(input.sensitive == "sex");
  CHECK(input.selected_freq.at("Female") == doctest::Approx(0.33));
  REQUIRE(input.witnesses.size() == 1);
  CHECK(input.witnesses[0].probability == doctest::Approx(1.0));
  CHECK_FALSE(input.conditions[0].asserted);

  CHECK(throws_kind(Error::Kind::parse, [] { parse_audit_input("nope"); }));
  CHECK(throws_kind(Error::Kind::parse, [] { parse_audit_input(R"({"name": "x"})"); }));
  CHECK(throws_kind(Error::Kind::parse, [] {
    parse_audit_input(R"({"selected_freq": {"a": 0.5, "b": 0.5},
                          "conditions": [{}, {}, {}, {}]})");
  }));

  SUBCASE("frequencies must be coherent") {
    AuditInput bad = input;
    bad.selected_freq["Female"] = 0.5;  // now sums to 1.17
    const PopulationPreset* preset = find_population_preset("us1994");
    apply_population_preset(bad, *preset);
    CHECK(throws_kind(Error::Kind::validation, [&] { audit_dataset(bad, preset); }));
  }

  SUBCASE("witness groups must be known") {
    AuditInput bad = input;
    bad.witnesses[0].sensitive_value = "Other";
    const PopulationPreset* preset = find_population_preset("us1994");
    apply_population_preset(bad, *preset);
    CHECK(throws_kind(Error::Kind::validation, [&] { audit_dataset(bad, preset); }));
  }

  SUBCASE("presets cannot overwrite explicit frequencies") {
    AuditInput twice = input;
    const PopulationPreset* preset = find_population_preset("us1994");
    apply_population_preset(twice, *preset);
    CHECK(throws_kind(Error::Kind::validation,
                      [&] { apply_population_preset(twice, *preset); }));
  }

  SUBCASE("preset group labels must line up") {
    AuditInput other;
    other.name = "x";
    other.sensitive = "g";
    other.selected_freq = {{"P", 0.5}, {"Q", 0.5}};
    CHECK(throws_kind(Error::Kind::validation, [&] {
      apply_population_preset(other, *find_population_preset("us1994"));
    }));
  }
}

TEST_CASE("dataset audits") {
  SUBCASE("adult with the 1994 preset violates the bound") {
    AuditInput input = parse_audit_input(fixture_text("adult_audit.json"));
    const PopulationPreset* preset = find_population_preset("us1994");
    apply_population_preset(input, *preset);
    AuditReport report = audit_dataset(input, preset);

    CHECK(report.violation);
    CHECK(report.verdict == kVerdictNoModel);
    REQUIRE(report.findings.size() == 1);
    CHECK(report.findings[0].verdict == WitnessVerdict::violated);
    CHECK(report.findings[0].against == "Male");
    CHECK(std::abs(report.findings[0].bound - 0.475) <= 0.001);
    CHECK(note_containing(report.notes, "matches the previously reported bound for the Adult dataset (summary table)"));
    CHECK(note_containing(report.notes, "differs from the previously reported bound for the Adult dataset (worked text)"));
    CHECK(report.conditions.size() == 3);
  }

  SUBCASE("german credit with the 1994 preset stays inconclusive") {
    AuditInput input = parse_audit_input(fixture_text("german_audit.json"));
    const PopulationPreset* preset = find_population_preset("de1994");
    apply_population_preset(input, *preset);
    AuditReport report = audit_dataset(input, preset);
    CHECK_FALSE(report.violation);
    CHECK(report.verdict == kVerdictInconclusive);
    CHECK(note_containing(report.notes, "no witnesses supplied"));
    CHECK(note_containing(report.notes, "matches the previously reported bound for the German Credit dataset"));
  }

  SUBCASE("law school surfaces the reference-value discrepancy") {
    AuditInput input = parse_audit_input(fixture_text("law_school_audit.json"));
    const PopulationPreset* preset = find_population_preset("us1998");
    apply_population_preset(input, *preset);
    AuditReport report = audit_dataset(input, preset);
    CHECK_FALSE(report.violation);
    CHECK(note_containing(report.notes, "differs from the previously reported bound for the Law School dataset"));
    CHECK(note_containing(report.notes, "0.753"));
  }

  SUBCASE("a witness exactly on the bound reports boundary, not violation") {
    AuditInput input;
    input.name = "tie";
    input.sensitive = "g";
    input.selected_freq = {{"P", 0.5}, {"Q", 0.5}};
    input.population_freq = {{"P", 0.5}, {"Q", 0.5}};
    input.witnesses.push_back(WitnessRow{{{"x", "1"}}, "P", 1.0, "constructed"});
    AuditReport report = audit_dataset(input);
    CHECK_FALSE(report.violation);
    REQUIRE(report.findings.size() == 1);
    CHECK(report.findings[0].verdict == WitnessVerdict::boundary);
    CHECK(note_containing(report.notes, "boundary, inconclusive"));
  }

  SUBCASE("witnesses below the bound are reported as such") {
    AuditInput input;
    input.name = "ok";
    input.sensitive = "g";
    input.selected_freq = {{"P", 0.5}, {"Q", 0.5}};
    input.population_freq = {{"P", 0.5}, {"Q", 0.5}};
    input.witnesses.push_back(WitnessRow{{{"x", "1"}}, "P", 0.25, "constructed"});
    AuditReport report = audit_dataset(input);
    CHECK_FALSE(report.violation);
    REQUIRE(report.findings.size() == 1);
    CHECK(report.findings[0].verdict == WitnessVerdict::not_violated);
    CHECK(report.verdict == kVerdictInconclusive);
  }
}

TEST_CASE("csv parsing") {
  CsvTable t = parse_csv("a,b,c\n1,2,3\n4,5,\n");
  CHECK(t.columns == std::vector<std::string>{"a", "b", "c"});
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[1][2] == "");
  CHECK(t.column_index("b") == 1);
  CHECK(throws_kind(Error::Kind::validation, [&] { t.column_index("nope"); }));

  CHECK(throws_kind(Error::Kind::parse, [] { parse_csv("a,a\n1,2\n"); }));
  try {
    parse_csv("a,b\n1\n");
    CHECK(false);
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("deterministic rule witnesses") {
  CsvTable table = parse_csv(fixture_text("adult_sample.csv"));

  SUBCASE("census-style constraint matches everything with positive earnings") {
    auto rows = deterministic_rule_witness(table, "hours_per_week>0 && earnings>100", "sex");
    CHECK(rows.size() == 11);  // one sample row has earnings 90
    bool has_female = false;
    for (const auto& w : rows) {
      CHECK(w.probability == 1.0);
      CHECK(w.origin.find("rule") != std::string::npos);
      CHECK(w.pattern.count("sex") == 0);
      if (w.sensitive_value == "Female") has_female = true;
    }
    CHECK(has_female);
  }

  SUBCASE("string equality with quotes and a numeric clause") {
    auto rows = deterministic_rule_witness(
        table, "relationship == 'Husband' && hours_per_week>=40", "sex");
    CHECK(rows.size() == 3);
    for (const auto& w : rows) {
      CHECK(w.sensitive_value == "Male");
      CHECK(w.pattern.at("relationship") == "Husband");
    }
  }

  SUBCASE("'and' spelling and inequality") {
    auto rows = deterministic_rule_witness(table, "earnings>9000 and sex != 'Male'", "sex");
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].sensitive_value == "Female");
  }

  SUBCASE("relational comparison on text fails loudly") {
    CHECK(throws_kind(Error::Kind::evaluation,
                      [&] { deterministic_rule_witness(table, "workclass>3", "sex"); }));
  }

  SUBCASE("unknown columns are rejected") {
    CHECK(throws_kind(Error::Kind::validation,
                      [&] { deterministic_rule_witness(table, "nope>1", "sex"); }));
  }
}
