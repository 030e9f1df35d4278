#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cmp/model.hpp"
#include "cmp/relax.hpp"
#include "cmp/solver.hpp"

namespace cmp::bounds {

enum class LowerMethod { FullSdp, FullDnn, Cpi };
enum class InnerMethod { Ddc, Cps, Cbc };

std::string lower_method_name(LowerMethod m);
std::string inner_method_name(InnerMethod m);
LowerMethod lower_method_from_name(const std::string& s);

/// The family's natural inner approximation: DDC for F1, CPS for F2, CBC
/// for F3.
InnerMethod default_inner(model::Family f);

struct SolvedProgram {
    relax::ConicProgram program;
    solver::SolveResult result;
    double build_seconds = 0.0;
    double solve_seconds = 0.0;
};

SolvedProgram run_lower(const model::StructuredQCQP& inst, LowerMethod method,
                        const solver::SolveSettings& settings);
SolvedProgram run_inner(const model::StructuredQCQP& inst, InnerMethod method,
                        const solver::SolveSettings& settings,
                        const relax::RelaxOptions& opts = {});

struct UpperValue {
    double value = 0.0;
    model::CandidateSolution cand;
};

/// Reads (x, y_i) from the solved program's metadata, repairs to a feasible
/// point and evaluates. Throws when the program exposes no border (cbc).
UpperValue upper_bound(const model::StructuredQCQP& inst, const relax::ConicProgram& program,
                       const solver::SolveResult& result);

/// Exact global value of a tiny F1 instance by enumerating the active-set
/// patterns of the KKT system over the coupled simplices. Refuses instances
/// with n1 + S*n2 > 14.
double oracle_f1(const model::StructuredQCQP& inst);

/// Multistart projected gradient descent on the F1 polytope (exact
/// projection via nested bisection). Heuristic.
double oracle_f1_multistart(const model::StructuredQCQP& inst, int starts = 48,
                            uint64_t seed = 1);

/// Exact global value of an F2 instance: one sphere trust-region solve per
/// excluded group.
double oracle_f2(const model::StructuredQCQP& inst);

/// Multistart alternating minimization for F3 (x-step and mass-step exact,
/// y-step nonneg-projected). Heuristic upper bound, not certified.
double oracle_f3(const model::StructuredQCQP& inst, int restarts = 20, uint64_t seed = 1);

struct OracleValue {
    double value = 0.0;
    std::string kind;  // "exact-enumeration" | "exact-structure" | "heuristic-multistart"
};

OracleValue oracle(const model::StructuredQCQP& inst);

/// 100 * (upper - lower) / |lower|, falling back to the absolute difference
/// (denominator 1) when |lower| < 1e-6 so degenerate lower bounds do not
/// blow up the percentage.
double gap_percent(double upper, double lower);

constexpr double kSolvedGapPercent = 0.01;

struct MethodTiming {
    std::string method;
    double build_seconds = 0.0;
    double solve_seconds = 0.0;
    double total_seconds() const { return build_seconds + solve_seconds; }
};

struct InstanceReport {
    std::string instance_type;
    model::Family family = model::Family::F1;
    uint64_t seed = 0;
    std::map<std::string, double> lower;  // per lower method
    double lb_cpi = 0.0;
    std::optional<double> inner_value;
    std::string inner_method;
    std::optional<double> ub;
    std::optional<double> iub;
    std::optional<double> oracle_value;
    std::string oracle_kind;
    std::optional<double> gap_ub, gap_inner, gap_iub, gap_oracle;
    bool solved_ub = false, solved_iub = false;
    std::vector<MethodTiming> timings;
    std::vector<std::string> notes;
};

struct GapConfig {
    std::vector<LowerMethod> lowers{LowerMethod::Cpi};
    bool with_inner = true;
    bool with_oracle = true;
    solver::SolveSettings settings;
};

InstanceReport gap_report(const model::StructuredQCQP& inst, const GapConfig& config);

struct Aggregate {
    std::string instance_type;
    int count = 0;
    double mean_gap_ub = 0.0, mean_gap_inner = 0.0, mean_gap_iub = 0.0, mean_gap_oracle = 0.0;
    int solved_ub = 0, solved_iub = 0;
    double mean_build_seconds = 0.0, mean_solve_seconds = 0.0, mean_total_seconds = 0.0;
};

Aggregate aggregate_reports(const std::vector<InstanceReport>& rows);

struct BenchSpec {
    model::Family family = model::Family::F1;
    int scheme = 1;
    int n1 = 2, n2 = 5, S = 5;
    double eps = 0.1;
    std::vector<uint64_t> seeds;
};

struct BenchResult {
    std::vector<InstanceReport> rows;
    std::vector<Aggregate> aggregates;
};

BenchResult run_bench(const std::vector<BenchSpec>& specs, const GapConfig& config,
                      int workers);

std::string gaps_csv(const BenchResult& r);
std::string times_csv(const BenchResult& r);

}  // namespace cmp::bounds
