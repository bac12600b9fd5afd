#include <doctest.h>

#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "cfaudit/model_io.hpp"
#include "cfaudit/scm.hpp"
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

}  // namespace

TEST_CASE("joint table basics") {
  JointTable t({{"A", {"0", "1"}, VarKind::observed}, {"B", {"0", "1"}, VarKind::observed}},
               {0.1, 0.2, 0.3, 0.4});
  CHECK(t.cell_count() == 4);
  CHECK(t.total_mass() == doctest::Approx(1.0));
  CHECK(t.probability({{"A", "1"}, {"B", "0"}}) == doctest::Approx(0.3));
  CHECK(t.mass({{"A", "0"}}) == doctest::Approx(0.3));
  CHECK(t.conditional_mass({{"B", "1"}}, {{"A", "0"}}) == doctest::Approx(0.2 / 0.3));

  SUBCASE("marginal keeps requested order") {
    JointTable m = t.marginal({"B", "A"});
    CHECK(m.scope()[0].name == "B");
    CHECK(m.scope()[1].name == "A");
    CHECK(m.probability({{"A", "0"}, {"B", "1"}}) == doctest::Approx(0.2));
  }

  SUBCASE("conditioning renormalizes and drops the evidence variable") {
    JointTable c = t.conditioned({{"A", "1"}});
    CHECK(c.scope().size() == 1);
    CHECK(c.probability({{"B", "0"}}) == doctest::Approx(0.3 / 0.7));
  }

  SUBCASE("validation") {
    CHECK(throws_kind(Error::Kind::validation, [] {
      JointTable({{"A", {"0", "1"}, VarKind::observed}}, {0.5, -0.5});
    }));
    CHECK(throws_kind(Error::Kind::validation, [] {
      JointTable({{"A", {"0", "1"}, VarKind::observed}}, {0.5, 0.5, 0.1});
    }));
  }
}

TEST_CASE("builder validation") {
  CHECK(throws_kind(Error::Kind::validation, [] {
    ScmBuilder b;
    b.add_noise("U", {"0", "1"}, {0.5, 0.5});
    b.add_noise("U", {"0", "1"}, {0.5, 0.5});
    b.build();
  }));
  CHECK(throws_kind(Error::Kind::validation, [] {
    ScmBuilder b;
    b.add_observed("X", {"0", "1"}, {"missing"}, {0, 1});
    b.build();
  }));
  CHECK(throws_kind(Error::Kind::validation, [] {
    ScmBuilder b;
    b.add_noise("U", {"0", "1"}, {0.5, 0.5});
    b.add_observed("X", {"0", "1"}, {"U"}, {0, 1, 1});
    b.build();
  }));
  CHECK(throws_kind(Error::Kind::validation, [] {
    ScmBuilder b;
    b.add_noise("U", {"0", "1"}, {0.5, 0.5});
    b.add_observed("X", {"0", "1"}, {"U"}, {0, 2});
    b.build();
  }));
  CHECK(throws_kind(Error::Kind::validation, [] {
    ScmBuilder b;
    b.add_noise("U", {"0", "1"}, {0.7, 0.7});
    b.add_observed("X", {"0", "1"}, {"U"}, {0, 1});
    b.build();
  }));
  // observed variables may not form a cycle
  CHECK(throws_kind(Error::Kind::validation, [] {
    ScmBuilder b;
    b.add_observed("X", {"0", "1"}, {"Y"}, {0, 1});
    b.add_observed("Y", {"0", "1"}, {"X"}, {0, 1});
    b.build();
  }));
  // enumeration cap limits the noise assignment count
  CHECK(throws_kind(Error::Kind::size, [] {
    ScmBuilder b;
    for (int i = 0; i < 8; ++i) {
      b.add_noise("U" + std::to_string(i), {"0", "1"}, {0.5, 0.5});
    }
    b.build(128);
  }));
}

TEST_CASE("xor_sel worked values") {
  Scm scm = xor_sel();

  JointTable j = joint_distribution(scm, {"A", "X", "S"});
  CHECK(j.probability({{"A", "0"}, {"X", "1"}, {"S", "1"}}) == doctest::Approx(0.25));
  CHECK(j.mass({{"S", "1"}}) == doctest::Approx(0.5));
  // A and X are marginally independent: X = A xor fair coin.
  CHECK(j.mass({{"A", "1"}, {"X", "1"}}) == doctest::Approx(0.25));

  SUBCASE("abduction pins the covariate noise") {
    JointTable post = abduct(scm, {{"A", "0"}, {"X", "1"}});
    CHECK(post.mass({{"U_X", "1"}}) == doctest::Approx(1.0));
    CHECK(post.mass({{"U_A", "0"}}) == doctest::Approx(1.0));
  }

  SUBCASE("counterfactual flips deterministically") {
    JointTable cf = counterfactual_distribution(scm, {{"A", "0"}, {"X", "1"}}, {{"A", "1"}}, {"X"});
    CHECK(cf.probability({{"X", "0"}}) == doctest::Approx(1.0));
  }

  SUBCASE("intervention breaks the noise link") {
    Scm acted = intervene(scm, {{"A", "1"}});
    JointTable jx = joint_distribution(acted, {"X"});
    CHECK(jx.probability({{"X", "1"}}) == doctest::Approx(0.5));
    CHECK(acted.parent_names("A").empty());
  }

  SUBCASE("impossible evidence") {
    Scm or_model = or_sel();
    CHECK(throws_kind(Error::Kind::zero_probability,
                      [&] { abduct(or_model, {{"A", "1"}, {"X", "0"}}); }));
  }
}

TEST_CASE("dependent noise") {
  Scm scm = xor_sel_dependent();
  CHECK_FALSE(scm.independent_noise());
  CHECK(scm.noise_assignment_count() == 4);

  JointTable noise = scm.noise_joint();
  CHECK(noise.conditional_mass({{"U_X", "1"}}, {{"U_A", "1"}}) == doctest::Approx(0.9));
  CHECK(noise.conditional_mass({{"U_X", "1"}}, {{"U_A", "0"}}) == doctest::Approx(0.5));

  // The dependence shows up observationally: P(X=1 | A=1) = P(U_X=0 | U_A=1).
  JointTable j = joint_distribution(scm, {"A", "X"});
  CHECK(j.conditional_mass({{"X", "1"}}, {{"A", "1"}}) == doctest::Approx(0.1));
}

TEST_CASE("twin network consistency on xor_sel") {
  Scm scm = xor_sel();
  Scm twin = twin_network(scm, {{"0", {{"A", "0"}}}, {"1", {{"A", "1"}}}});

  // Factual behavior is untouched.
  JointTable base = joint_distribution(scm, {"A", "X", "S"});
  JointTable twin_base = joint_distribution(twin, {"A", "X", "S"});
  CHECK(base.max_cell_difference(twin_base) == doctest::Approx(0.0));

  // When the factual attribute equals the world value, copies coincide.
  JointTable j = joint_distribution(twin, {"A", "X", world_copy_name("X", "1")});
  for (std::size_t flat = 0; flat < j.cell_count(); ++flat) {
    Assignment cell = j.cell_assignment(flat);
    if (cell["A"] == "1" && cell["X"] != cell[world_copy_name("X", "1")]) {
      CHECK(j.probabilities()[flat] == 0.0);
    }
  }

  // World label collisions are rejected.
  CHECK_THROWS_AS(twin_network(scm, {{"1", {{"A", "1"}}}, {"1", {{"A", "0"}}}}), Error);
}

TEST_CASE("path specific counterfactual routes values per edge") {
  // A feeds Y directly and through the mediator X; Y = A xor X.
  ScmBuilder b;
  b.add_noise("U_A", {"0", "1"}, {0.5, 0.5});
  b.add_observed("A", {"0", "1"}, {"U_A"}, {0, 1});
  b.add_observed("X", {"0", "1"}, {"A"}, {0, 1});
  b.add_observed("Y", {"0", "1"}, {"A", "X"}, {0, 1, 1, 0});
  Scm scm = b.build();

  JointTable r = path_specific_counterfactual(
      scm, "A", "1", "0", {{"X", EdgeRole::indirect}, {"Y", EdgeRole::direct}}, "Y");
  CHECK(r.probability({{"Y", "1"}}) == doctest::Approx(1.0));

  // Every child of the sensitive variable must be labeled.
  CHECK_THROWS_AS(
      path_specific_counterfactual(scm, "A", "1", "0", {{"X", EdgeRole::indirect}}, "Y"), Error);
}

TEST_CASE("sampling matches the exact joint and is seed-deterministic") {
  Scm scm = xor_sel();
  auto rows = sample(scm, 20000, 99);
  REQUIRE(rows.size() == 20000);

  std::map<std::string, double> freq;
  for (const auto& r : rows) freq[r.at("A") + r.at("X")] += 1.0 / 20000.0;
  CHECK(freq["01"] == doctest::Approx(0.25).epsilon(0.1));
  CHECK(freq["11"] == doctest::Approx(0.25).epsilon(0.1));

  auto again = sample(scm, 20000, 99);
  CHECK(rows == again);
  auto other = sample(scm, 20000, 100);
  CHECK(rows != other);
}

TEST_CASE("model file round trip") {
  const char* text = R"({
    "name": "tiny",
    "variables": [
      {"name": "U", "kind": "noise", "domain": ["0", "1"]},
      {"name": "X", "kind": "observed", "domain": ["0", "1"]}
    ],
    "parents": {"X": ["U"]},
    "equations": {"X": [
      {"when": {"U": "0"}, "value": "1"},
      {"when": {"U": "1"}, "value": "0"}
    ]},
    "noise": {"U": [0.25, 0.75]}
  })";
  CHECK(model_name(text) == "tiny");
  Scm scm = parse_model(text);
  JointTable j = joint_distribution(scm, {"X"});
  CHECK(j.probability({{"X", "1"}}) == doctest::Approx(0.25));

  CHECK(throws_kind(Error::Kind::parse, [] { parse_model("not json"); }));
  CHECK(throws_kind(Error::Kind::parse, [] { parse_model(R"({"variables": 3})"); }));
  // missing equation row
  CHECK(throws_kind(Error::Kind::parse, [] {
    parse_model(R"({
      "variables": [
        {"name": "U", "kind": "noise", "domain": ["0", "1"]},
        {"name": "X", "kind": "observed", "domain": ["0", "1"]}
      ],
      "parents": {"X": ["U"]},
      "equations": {"X": [{"when": {"U": "0"}, "value": "1"}]},
      "noise": {"U": [0.5, 0.5]}
    })");
  }));
}

TEST_CASE("fixture files match the built-in models") {
  Scm file_model = load_model_file(std::string(CFAUDIT_FIXTURE_DIR) + "/xor_sel.json");
  Scm builtin = xor_sel();
  JointTable a = joint_distribution(file_model, {"A", "X", "S"});
  JointTable b = joint_distribution(builtin, {"A", "X", "S"});
  CHECK(a.max_cell_difference(b) == doctest::Approx(0.0));

  Scm dep = load_model_file(std::string(CFAUDIT_FIXTURE_DIR) + "/xor_sel_dependent.json");
  CHECK_FALSE(dep.independent_noise());
  JointTable c = joint_distribution(dep, {"A", "X"});
  JointTable d = joint_distribution(xor_sel_dependent(), {"A", "X"});
  CHECK(c.max_cell_difference(d) == doctest::Approx(0.0));
}
