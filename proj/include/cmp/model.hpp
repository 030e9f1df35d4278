#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cmp/components.hpp"
#include "cmp/linalg.hpp"

namespace cmp::model {

using components::ConeKind;

enum class Family { F1, F2, F3 };

std::string family_name(Family f);
Family family_from_name(const std::string& s);

/// Objective data produced by the generation schemes.
struct ObjectiveData {
    int n1 = 0, n2 = 0, S = 0;
    int scheme = 0;
    uint64_t seed = 0;
    double eps = 0.0;
    linalg::SymMat A;
    linalg::Vec a;
    std::vector<linalg::Matrix> B;   // n1 x n2 per scenario
    std::vector<linalg::SymMat> C;   // order n2 per scenario
    std::vector<linalg::Vec> c;
    linalg::Vec p;
};

/// Scheme 1: n1 fixed points and n2 nominal points on the unit square; per
/// scenario the nominal points are resampled uniformly in the square of side
/// 2*eps around their nominal position. A, B_s, C_s hold plain Euclidean
/// distances; p_i = 1/S.
ObjectiveData gen_scheme1(int n1, int n2, int s, double eps, uint64_t seed);

/// Scheme 2: A ~ U[0,1], B_i ~ U[0,10], C_i ~ U[0,0.1]; A and C_i sampled on
/// the upper triangle and mirrored; p_i = 1/S.
ObjectiveData gen_scheme2(int n1, int n2, int s, uint64_t seed);

/// Linear descriptor of a lifted quadratic constraint: coefficients on
/// (x, X, y_i, Z_i, Y_i), structurally unable to touch cross-scenario blocks.
struct LiftedConstraint {
    std::string name;
    linalg::Vec coef_x;                          // n1, may be empty
    linalg::SymMat coef_X;                       // order n1, zero allowed
    std::vector<linalg::Vec> coef_y;             // S x n2, may be empty
    std::vector<linalg::Matrix> coef_Z;          // S of n2 x n1, may be empty
    std::vector<linalg::SymMat> coef_Y;          // S of order n2, may be empty
    double rhs = 0.0;
};

struct StructuredQCQP {
    Family family = Family::F1;
    int n1 = 0, n2 = 0, S = 0;
    linalg::SymMat A;
    linalg::Vec a;
    std::vector<linalg::Matrix> B;
    std::vector<linalg::SymMat> C;
    std::vector<linalg::Vec> c;
    linalg::Vec p;
    // First-moment data F_i x + G_i y_i = r_i (m_i rows per scenario).
    std::vector<linalg::Matrix> F;
    std::vector<linalg::Matrix> G;
    std::vector<linalg::Vec> r;
    ConeKind cone0 = ConeKind::Nonneg;
    std::vector<ConeKind> cones;
    std::vector<LiftedConstraint> lifted;
    /// Binarity lift diag(X) = x for F2, valid for binary x; default on.
    bool f2_diag_x = true;
    double objective_offset = 0.0;
    ObjectiveData source;  // kept for serialization

    std::string instance_type() const;
};

/// Builds the experiment families:
///   F1: x, y_i >= 0 with e'x + e'y_i = 1 per scenario.
///   F2 (requires n1 = S): x binary with e'x = S-1, sum_i |y_i|^2 = 1,
///       y_i x_i = 0; relaxation rows encoded as lifted constraints.
///   F3: x free, y_i >= 0, |x|^2 + sum_i |y_i|^2 = 1, objective constant +1.
StructuredQCQP build_family(Family family, const ObjectiveData& data);

struct CandidateSolution {
    linalg::Vec x;
    std::vector<linalg::Vec> y;
};

double eval_objective(const StructuredQCQP& inst, const CandidateSolution& cand);

struct ConstraintViolation {
    std::string name;
    double amount = 0.0;
};

struct FeasReport {
    std::vector<ConstraintViolation> violations;
    double max_violation = 0.0;
    bool ok() const { return violations.empty(); }
};

FeasReport check_feasible(const StructuredQCQP& inst, const CandidateSolution& cand,
                          double tol = 1e-8);

/// Projects a candidate onto the family's feasible set (heuristic repair of
/// relaxation output). Always returns a feasible point.
CandidateSolution repair(const StructuredQCQP& inst, const CandidateSolution& cand);

std::string save_instance_json(const StructuredQCQP& inst);
StructuredQCQP load_instance_json(const std::string& text);
void save_instance_file(const StructuredQCQP& inst, const std::string& path);
StructuredQCQP load_instance_file(const std::string& path);

/// Convenience: generate objective data by scheme id and build the family.
StructuredQCQP make_instance(Family family, int scheme, int n1, int n2, int s, double eps,
                             uint64_t seed);

}  // namespace cmp::model
