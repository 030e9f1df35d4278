#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "cmp/linalg.hpp"
#include "cmp/model.hpp"

namespace cmp::relax {

/// Cone of one variable block in a standard-form conic program. Psd blocks
/// are stored in svec coordinates (same sqrt(2) convention as SymMat); the
/// optional mask marks svec coordinates that are additionally constrained
/// entrywise nonnegative (DNN-style).
struct ConeTag {
    enum class Kind { Zero, Free, Nonneg, Psd };
    Kind kind = Kind::Free;
    int dim = 0;  // vector length; matrix order for Psd
    std::vector<uint8_t> nonneg_mask;  // svec layout, Psd only; empty = none
    bool exact = true;  // representation exactness from cone_represent

    int length() const {
        return kind == Kind::Psd ? linalg::SymMat::svec_len(dim) : dim;
    }
};

struct VarRange {
    int begin = 0;
    int size = 0;
};

using Row = std::vector<std::pair<int, double>>;

/// Standard-form conic program  min c'v + offset  s.t.  A v = b,  v in K.
struct ConicProgram {
    std::string kind;
    int num_vars = 0;
    linalg::Vec objective;
    double offset = 0.0;
    std::vector<Row> rows;
    linalg::Vec rhs;
    std::vector<ConeTag> cones;
    std::vector<int> cone_offsets;
    std::map<std::string, VarRange> metadata;

    bool outer_pipeline = false;   // value is a valid lower bound
    bool inner_pipeline = false;
    bool all_cells_exact = true;   // with inner_pipeline: valid upper bound

    bool valid_lower_bound() const { return outer_pipeline; }
    bool valid_upper_bound() const { return inner_pipeline && all_cells_exact; }

    int add_cone(ConeTag tag, const std::string& name = "");
    void add_row(Row row, double b);

    int psd_scalar_count() const;
    std::string describe() const;
    std::string dump_json() const;

private:
    std::vector<size_t> row_hashes_;
};

/// Tractable representation of CPP over a product of orthant/free
/// coordinates: PSD of the same order with a nonnegativity mask over pairs of
/// orthant coordinates (none needed when at most one coordinate is conic).
/// Exact whenever the orthant part has dimension <= 4, an outer
/// approximation otherwise. With use_mask = false the mask is dropped and
/// exactness additionally requires at most one orthant coordinate.
ConeTag cone_represent(const std::vector<bool>& orthant_coords, bool use_mask = true);

struct RelaxOptions {
    bool dnn = true;              // apply nonnegativity masks
    bool cps_fix_yz_zero = false; // hard-fix Y_i = Z_i = y_i = 0 in build_cps
    std::vector<std::pair<int, int>> ddc_cells;  // (k, s) subset; empty = all
};

/// Full Burer-style program: one matrix block of order 1 + n1 + S*n2.
ConicProgram build_full_burer(const model::StructuredQCQP& inst, const RelaxOptions& opts = {});

/// Sparse outer approximation: S blocks of order 1 + n1 + n2 sharing x, X.
ConicProgram build_cpi(const model::StructuredQCQP& inst, const RelaxOptions& opts = {});

/// Inner approximation splitting the shared block: W_i with sum W_i = X.
ConicProgram build_cps(const model::StructuredQCQP& inst, const RelaxOptions& opts = {});

/// Inner approximation with diagonal X, one component per first-stage
/// coordinate. Requires a homogeneous instance (no linear constraints or
/// linear objective terms): the border variables are dropped.
ConicProgram build_cbc(const model::StructuredQCQP& inst, const RelaxOptions& opts = {});

/// Inner approximation with diagonal Y cells, one block of order n1 + 2 per
/// (coordinate, scenario) cell.
ConicProgram build_ddc(const model::StructuredQCQP& inst, const RelaxOptions& opts = {});

enum class F2Variant { Cpi, Cps };

/// The F2 relaxation: cardinality/sphere/complementarity rows with blocks
/// over CPP(R+^{S+1} x R^{n2}); exact cells iff S+1 <= 4.
ConicProgram build_f2_cmp(const model::StructuredQCQP& inst, F2Variant variant,
                          const RelaxOptions& opts = {});

linalg::Vec extract_vec(const ConicProgram& p, const linalg::Vec& primal,
                        const std::string& name);
linalg::SymMat extract_sym(const ConicProgram& p, const linalg::Vec& primal,
                           const std::string& name, int order);
model::CandidateSolution extract_candidate(const ConicProgram& p, const linalg::Vec& primal,
                                           const model::StructuredQCQP& inst);

/// Rank-one lift of a candidate as a full primal assignment of the program.
/// For inner builders the candidate must carry the structure the cone can
/// express (single active scenario for cps, single active cell for ddc,
/// single-support x for cbc); throws otherwise.
linalg::Vec point_from_candidate(const ConicProgram& p, const model::StructuredQCQP& inst,
                                 const model::CandidateSolution& cand);

/// Max row violation |A v - b| of an assignment; for feasibility tests.
double max_row_violation(const ConicProgram& p, const linalg::Vec& v);

double objective_value(const ConicProgram& p, const linalg::Vec& v);

}  // namespace cmp::relax
