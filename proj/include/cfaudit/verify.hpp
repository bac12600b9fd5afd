#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cfaudit/scm.hpp"
#include "cfaudit/selection.hpp"

namespace cfaudit {

// Canonical two-noise fixtures used across tests and documentation.
// xor_sel: A = U_A, X = A xor U_X, S = X, with U_A, U_X ~ Bernoulli(1/2).
Scm xor_sel();
// or_sel: same shape with X = A or U_X.
Scm or_sel();
// xor_sel with a joint noise distribution making U_X lean towards 1 when
// U_A = 1: P(U_X=1 | U_A=1) = 0.9 while P(U_X=1 | U_A=0) = 0.5.
Scm xor_sel_dependent();

enum class SelectionMode { none, always_selected, coin, sensitive_only, covariate_dependent };

struct GeneratedModel {
  Scm scm;
  std::string sensitive;                  // "A", binary root with private noise
  std::optional<SelectionSpec> selection; // "S" unless mode is none
};

// Deterministic-in-seed random model: binary sensitive root, one to
// max_covariates binary covariates with private noise and randomized
// equations over earlier variables, and a selection variable shaped by the
// mode. Draws where some sensitive value is (nearly) never selected are
// rejected and redrawn.
GeneratedModel random_model(std::uint64_t seed, std::size_t max_covariates, SelectionMode mode);

struct SuiteResult {
  std::string name;
  std::size_t trials = 0;
  std::size_t failures = 0;
  bool passed = false;
  std::vector<std::string> messages;  // first few failure details
};

// Suite names: independent-model existence ("prop1"), scaled-selection
// agreement ("prop2"), parity of the constructed fair predictor ("prop4"),
// audit soundness ("cor3"), posterior-draw parity ("cor5"), and the Markov
// property of randomized models ("markov").
const std::vector<std::string>& verify_suite_names();

// tol is the acceptance tolerance of the per-trial checks; construction
// mismatches keep their own fixed 1e-12 bar.
SuiteResult run_suite(const std::string& name, std::size_t trials, std::uint64_t seed,
                      double tol = 1e-9);
std::vector<SuiteResult> run_suites(const std::vector<std::string>& names, std::size_t trials,
                                    std::uint64_t seed, double tol = 1e-9);

}  // namespace cfaudit
