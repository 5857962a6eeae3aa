#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace bsmdp {

/// Raised when the simplex method cannot produce an optimal basis.
class LpError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// maximize c'x  subject to  A x = b,  x >= 0
struct LinearProgram {
    Eigen::MatrixXd A;
    Eigen::VectorXd b;
    Eigen::VectorXd c;
};

struct SimplexOptions {
    double pivot_tolerance = 1e-10;
    /// Phase-one objective above this value means the program is infeasible.
    double feasibility_tolerance = 1e-9;
    std::size_t max_iterations = 1'000'000;
};

struct SimplexResult {
    Eigen::VectorXd x;
    double objective = 0.0;
    std::vector<std::size_t> basis; ///< basic column per retained row
    std::vector<std::size_t> dropped_rows; ///< rows found linearly dependent
    std::size_t iterations = 0;
};

/// Two-phase primal simplex on a dense tableau. The entering column has the
/// largest reduced cost and ratio-test ties go to the largest pivot. A long
/// run of degenerate pivots switches to Bland's rule until the objective
/// moves again. The final basis is checked for optimality against the
/// original data. The final basic solution is recomputed from the
/// original data with an LU solve to remove accumulated pivoting error.
SimplexResult solve_simplex(const LinearProgram& lp, const SimplexOptions& options = {});

} // namespace bsmdp
