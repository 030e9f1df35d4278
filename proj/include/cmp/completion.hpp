#pragma once

#include <string>
#include <vector>

#include "cmp/components.hpp"
#include "cmp/linalg.hpp"
#include "cmp/specgraph.hpp"

namespace cmp::completion {

/// Chordal PSD completion of an arrowhead component: the unspecified blocks
/// are filled with Y_ij = Z_i X^+ Z_j'. Valid because the arrowhead graph's
/// only separator is the shared group and PSD blocks force
/// range(Z_i') <= range(X). Requires every block [X Z_i'; Z_i Y_i] to be PSD
/// within 1e-8; violations name the offending block and its lambda_min.
linalg::SymMat psd_complete_arrowhead(const components::ConnectedComponents& cc);

/// Completion from coordinated factorizations: returns the Gram matrix of
/// the stacked factor (Xbar; Ybar_1; ...; Ybar_S). Orthant coordinates of the
/// factors are checked for nonnegativity (>= -1e-12).
linalg::SymMat cpp_complete_coordinated(const linalg::Matrix& xbar,
                                        const std::vector<linalg::Matrix>& ybars,
                                        const components::GroundCones& cones);

/// One scenario's factorization of [Y_i z_i; z_i' x0] in CPP(K_i x R+):
/// columns f_l with scalar parts f0_l.
struct CbcScenarioFactors {
    std::vector<linalg::Vec> f;  // each of length m
    linalg::Vec f0;              // same count
};

/// Inductive completion of the diagonal-cell component
/// [x0 z_i'; z_i Y_i], i=1..S, into CPP(R+ x K_1 x ... x K_S). x0 is
/// normalized to 1 before the construction and the scaling undone afterward;
/// x0 = 0 with a nonzero z_i is rejected. Output order is 1 + S*m with the
/// scalar coordinate first.
linalg::SymMat cbc_complete(double x0, const std::vector<CbcScenarioFactors>& factors,
                            const components::GroundCones& cones);

/// Zero fill of a component lying in a single DDC cell (one active scenario,
/// Y_s = y e_k e_k', Z_s = e_k z'). Throws when more than one scenario is
/// active.
linalg::SymMat ddc_complete(const components::ConnectedComponents& cc);

enum class VerifyMode { Psd, Dnn };

struct Violation {
    std::string what;
    int i = -1, j = -1;
    double amount = 0.0;
};

struct CompletionReport {
    std::vector<Violation> violations;
    double max_entry_mismatch = 0.0;
    double lambda_min = 0.0;
    double min_entry = 0.0;
    bool ok() const { return violations.empty(); }
};

/// Checks specified-entry agreement (1e-9 absolute), positive
/// semidefiniteness (lambda_min >= -1e-7 * lambda_max) and, in Dnn mode,
/// entrywise nonnegativity.
CompletionReport verify_completion(const specgraph::PartialMatrix& p,
                                   const linalg::SymMat& m, VerifyMode mode);

}  // namespace cmp::completion
