#include <doctest.h>

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "cfaudit/fairness.hpp"
#include "cfaudit/model_io.hpp"
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

std::string fixture_text(const std::string& name) {
  return read_text_file(std::string(CFAUDIT_FIXTURE_DIR) + "/" + name);
}

Predictor identity_on_x() {
  return Predictor::deterministic({{"X", {"0", "1"}, VarKind::observed}}, "Yhat", {"0", "1"},
                                  {0, 1});
}

}  // namespace

TEST_CASE("predictor tables") {
  Predictor p = identity_on_x();
  CHECK(p.kind() == PredictorKind::deterministic);
  CHECK(p.row_count() == 2);
  CHECK(p.value({{"X", "1"}}) == "1");
  CHECK(p.distribution({{"X", "0"}}) == std::vector<double>{1.0, 0.0});
  // Extra context variables are ignored; missing inputs are an error.
  CHECK(p.value({{"X", "1"}, {"A", "0"}}) == "1");
  CHECK(throws_kind(Error::Kind::validation, [&] { (void)p.value({{"A", "0"}}); }));
  CHECK(throws_kind(Error::Kind::validation, [&] { (void)p.value({{"X", "2"}}); }));

  SUBCASE("undefined rows evaluate to errors") {
    Predictor q = Predictor::deterministic({{"X", {"0", "1"}, VarKind::observed}}, "Yhat",
                                           {"0", "1"}, {0, -1});
    CHECK(q.defined({{"X", "0"}}));
    CHECK_FALSE(q.defined({{"X", "1"}}));
    CHECK(throws_kind(Error::Kind::evaluation, [&] { (void)q.value({{"X", "1"}}); }));
  }

  SUBCASE("stochastic rows must normalize") {
    CHECK(throws_kind(Error::Kind::validation, [] {
      Predictor::stochastic({{"X", {"0", "1"}, VarKind::observed}}, "Yhat", {"0", "1"},
                            {{0.5, 0.6}, {0.5, 0.5}});
    }));
    Predictor q = Predictor::stochastic({{"X", {"0", "1"}, VarKind::observed}}, "Yhat", {"0", "1"},
                                        {{0.25, 0.75}, {}});
    CHECK(q.distribution({{"X", "0"}})[1] == doctest::Approx(0.75));
    CHECK_FALSE(q.defined({{"X", "1"}}));
  }

  SUBCASE("table sizes are validated") {
    CHECK(throws_kind(Error::Kind::validation, [] {
      Predictor::deterministic({{"X", {"0", "1"}, VarKind::observed}}, "Yhat", {"0", "1"}, {0});
    }));
    CHECK(throws_kind(Error::Kind::validation, [] {
      Predictor::deterministic({{"X", {"0", "1"}, VarKind::observed}}, "Yhat", {"0", "1"}, {0, 2});
    }));
  }
}

TEST_CASE("predictor text format") {
  Predictor p = parse_predictor(fixture_text("identity_predictor.txt"));
  CHECK(p.kind() == PredictorKind::deterministic);
  CHECK(p.output_name() == "Yhat");
  CHECK(p.value({{"X", "0"}}) == "0");
  CHECK(p.value({{"X", "1"}}) == "1");

  SUBCASE("round trip") {
    Predictor q = parse_predictor(serialize_predictor(p));
    CHECK(q.value({{"X", "0"}}) == "0");
    CHECK(q.value({{"X", "1"}}) == "1");
  }

  SUBCASE("stochastic text and undefined rows") {
    Predictor q = parse_predictor(
        "stochastic\ninput X 0 1\noutput Y a b\n# only one row defined\n0 0.25 0.75\n");
    CHECK(q.kind() == PredictorKind::stochastic);
    CHECK(q.distribution({{"X", "0"}})[0] == doctest::Approx(0.25));
    CHECK_FALSE(q.defined({{"X", "1"}}));
    Predictor r = parse_predictor(serialize_predictor(q));
    CHECK_FALSE(r.defined({{"X", "1"}}));
  }

  SUBCASE("parse errors") {
    CHECK(throws_kind(Error::Kind::parse, [] { parse_predictor(""); }));
    CHECK(throws_kind(Error::Kind::parse, [] { parse_predictor("deterministic\ninput X 0 1\n"); }));
    CHECK(throws_kind(Error::Kind::parse, [] {
      parse_predictor("deterministic\ninput X 0 1\noutput Y 0 1\n0 0\n0 1\n");
    }));
    // Syntax problems are parse errors; a row that fails the table rules
    // (here: probabilities not summing to one) is a validation error.
    CHECK(throws_kind(Error::Kind::validation, [] {
      parse_predictor("stochastic\ninput X 0 1\noutput Y 0 1\n0 0.2 0.2\n");
    }));
  }
}

TEST_CASE("counterfactual fairness of table predictors") {
  Scm scm = xor_sel();

  SUBCASE("a constant predictor is fair") {
    Predictor constant = parse_predictor(fixture_text("constant_zero_predictor.txt"));
    FairnessVerdict v = check_counterfactual_fairness(scm, constant, "A", 1e-9);
    CHECK(v.holds);
    CHECK(v.deviation <= 1e-12);
  }

  SUBCASE("reading the flipped covariate is maximally unfair") {
    FairnessVerdict v = check_counterfactual_fairness(scm, identity_on_x(), "A", 1e-9);
    CHECK_FALSE(v.holds);
    CHECK(v.deviation == doctest::Approx(1.0));
    CHECK(v.contexts_checked > 0);
  }

  SUBCASE("the sensitive attribute must exist and differ from inputs") {
    CHECK(throws_kind(Error::Kind::validation,
                      [&] { check_counterfactual_fairness(scm, identity_on_x(), "nope", 1e-9); }));
  }
}

TEST_CASE("fair predictor construction on xor_sel") {
  Scm scm = xor_sel();
  BuiltPredictor built = build_cf_fair_predictor(scm, "A", "X");

  // Both counterfactual classes tie at 1/2, so ties resolve to "0".
  CHECK(built.classes == 2);
  CHECK_FALSE(built.degenerate);
  CHECK(built.accuracy == doctest::Approx(0.5));
  for (const auto& a : {"0", "1"}) {
    for (const auto& x : {"0", "1"}) {
      Assignment ctx{{"A", a}, {"X", x}, {"S", x}};
      CHECK(built.predictor.value(ctx) == "0");
    }
  }

  FairnessVerdict fair = check_counterfactual_fairness(scm, built.predictor, "A", 1e-9);
  CHECK(fair.holds);

  ParityVerdict parity = check_demographic_parity(scm, built.predictor, "A", std::nullopt, 1e-9);
  CHECK(parity.holds);
  CHECK(parity.gap <= 1e-12);
}

TEST_CASE("fair predictor collapses when counterfactual classes merge") {
  // In or_sel the context (A=1, X=1, S=1) is reachable from both noise
  // settings, which fuses all positive contexts into one class.
  Scm scm = or_sel();
  BuiltPredictor built = build_cf_fair_predictor(scm, "A", "X");
  CHECK(built.classes == 1);
  CHECK(built.degenerate);
  CHECK_FALSE(built.warning.empty());
  CHECK(built.accuracy == doctest::Approx(0.75));  // constant majority value "1"
  CHECK(built.predictor.value({{"A", "0"}, {"X", "0"}, {"S", "0"}}) == "1");

  FairnessVerdict fair = check_counterfactual_fairness(scm, built.predictor, "A", 1e-9);
  CHECK(fair.holds);
}

TEST_CASE("fair predictor construction rejects joint noise") {
  CHECK(throws_kind(Error::Kind::validation,
                    [] { build_cf_fair_predictor(xor_sel_dependent(), "A", "X"); }));
}

TEST_CASE("posterior draw predictor") {
  Scm scm = xor_sel();
  Predictor draw = posterior_draw_predictor(scm, "A", "1", "X");
  CHECK(draw.kind() == PredictorKind::stochastic);
  CHECK(draw.output_name() == world_copy_name("X", "1"));

  // Deterministic posterior: A=0, X=1 pins the noise, so X(1)=0 surely.
  std::vector<double> row = draw.distribution({{"A", "0"}, {"X", "1"}, {"S", "1"}});
  CHECK(row[0] == doctest::Approx(1.0));

  // Impossible contexts stay undefined.
  CHECK_FALSE(draw.defined({{"A", "0"}, {"X", "1"}, {"S", "0"}}));

  SUBCASE("fair against the true model, disparate among the selected") {
    FairnessVerdict fair = check_counterfactual_fairness(scm, draw, "A", 1e-9);
    CHECK(fair.holds);
    CHECK(fair.deviation <= 1e-9);

    ParityVerdict parity =
        check_demographic_parity(scm, draw, "A", SelectionSpec{"S"}, 1e-9);
    CHECK_FALSE(parity.holds);
    CHECK(parity.gap == doctest::Approx(1.0));

    // Without conditioning on selection there is no disparity at all.
    ParityVerdict full = check_demographic_parity(scm, draw, "A", std::nullopt, 1e-9);
    CHECK(full.holds);
  }

  SUBCASE("validation") {
    CHECK(throws_kind(Error::Kind::validation,
                      [&] { posterior_draw_predictor(scm, "A", "2", "X"); }));
    CHECK(throws_kind(Error::Kind::validation,
                      [&] { posterior_draw_predictor(scm, "A", "1", "A"); }));
    CHECK(throws_kind(Error::Kind::validation,
                      [&] { posterior_draw_predictor(scm, "A", "1", "U_X"); }));
  }
}

TEST_CASE("demographic parity diagnostics") {
  Scm scm = xor_sel();

  // The covariate-reading predictor is balanced in the full population.
  ParityVerdict full = check_demographic_parity(scm, identity_on_x(), "A", std::nullopt, 1e-9);
  CHECK(full.holds);

  // Among the selected it is vacuously balanced too: X=1 on both sides.
  ParityVerdict sel = check_demographic_parity(scm, identity_on_x(), "A", SelectionSpec{"S"}, 1e-9);
  CHECK(sel.holds);

  SUBCASE("empty groups are loud errors") {
    ScmBuilder b;
    b.add_noise("U_A", {"0", "1"}, {1.0, 0.0});
    b.add_noise("U_X", {"0", "1"}, {0.5, 0.5});
    b.add_observed("A", {"0", "1"}, {"U_A"}, {0, 1});
    b.add_observed("X", {"0", "1"}, {"A", "U_X"}, {0, 1, 1, 0});
    Scm degenerate = b.build();
    CHECK(throws_kind(Error::Kind::zero_probability, [&] {
      check_demographic_parity(degenerate, identity_on_x(), "A", std::nullopt, 1e-9);
    }));
  }
}

TEST_CASE("verification suites on small trial counts") {
  for (const auto& name : verify_suite_names()) {
    SuiteResult r = run_suite(name, 6, 2026);
    CHECK(r.name == name);
    CHECK(r.trials == 6);
    CHECK(r.passed);
    CHECK(r.failures == 0);
  }
  CHECK(throws_kind(Error::Kind::validation, [] { run_suite("nope", 3, 1); }));
  CHECK(throws_kind(Error::Kind::validation, [] { run_suite("prop1", 0, 1); }));

  SUBCASE("random models are deterministic in the seed") {
    GeneratedModel a = random_model(42, 3, SelectionMode::covariate_dependent);
    GeneratedModel b = random_model(42, 3, SelectionMode::covariate_dependent);
    JointTable ja = joint_distribution(a.scm, a.scm.observed_names());
    JointTable jb = joint_distribution(b.scm, b.scm.observed_names());
    CHECK(ja.max_cell_difference(jb) == 0.0);
  }
}
