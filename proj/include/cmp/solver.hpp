#pragma once

#include "cmp/linalg.hpp"
#include "cmp/relax.hpp"

namespace cmp::solver {

struct SolveSettings {
    int max_iterations = 50000;
    double eps_primal = 1e-7;
    double eps_dual = 1e-7;
    double eps_gap = 1e-7;
    double over_relaxation = 1.6;  // in (1, 2)
    bool scaling = true;
    bool adaptive_rho = true;
    int check_interval = 25;
    int verbose = 0;
};

enum class SolveStatus { Optimal, MaxIterations, SuspectedInfeasible };

struct Residuals {
    double primal = 0.0;
    double dual = 0.0;
    double gap = 0.0;
};

struct SolveResult {
    SolveStatus status = SolveStatus::MaxIterations;
    linalg::Vec primal;       // cone-feasible iterate
    linalg::Vec dual;         // row multipliers of A v = b
    double objective = 0.0;   // c'primal + offset
    double dual_objective = 0.0;
    Residuals residuals;
    int iterations = 0;
};

/// Operator-splitting (ADMM) solve of min c'v s.t. Av = b, v in K. The
/// linear-system step factors a Schur complement once per penalty value; the
/// cone step clamps nonnegative blocks and eigenvalue-projects PSD blocks,
/// alternating with the mask clamp when a block carries a nonnegativity
/// mask (5 inner sweeps; the final residual check is on the true data).
/// Throws std::runtime_error on a non-finite iterate, naming the iteration.
SolveResult solve(const relax::ConicProgram& cp, const SolveSettings& settings = {});

/// Residuals of an arbitrary primal/dual pair against the program:
/// |Av-b|/(1+|b|), distance of c - A'nu to the dual cone, relative gap.
Residuals residuals(const relax::ConicProgram& cp, const linalg::Vec& primal,
                    const linalg::Vec& dual);

}  // namespace cmp::solver
