#pragma once

#include <functional>

#include <Eigen/Core>

#include "tenevo/param_jacobian.hpp"
#include "tenevo/pde_operators.hpp"
#include "tenevo/separable_field.hpp"
#include "tenevo/tnn.hpp"

namespace tenevo {

inline constexpr double kDefaultRcond = 1e-10;

struct SolveDiagnostics {
    int effective_rank{0};
    int truncated{0};
    double sigma_max{0.0};
    /// sigma_max / smallest kept singular value; 0 when nothing is kept.
    double condition{0.0};
};

/// Normal equations M gamma = b of the Galerkin projection over the masked
/// parameters, ordered as in flatten().
struct GramSystem {
    Eigen::MatrixXd M;
    Eigen::VectorXd b;
    SolveDiagnostics diagnostics;
};

/// M_ij = integral of (dT[u]/dw_i)(dT[u]/dw_j) where T is the tangent map
/// (identity unless given). Assembled from per-dimension overlaps; no
/// d-dimensional grid is ever formed.
Eigen::MatrixXd assemble_gram(const FactorTable& factors, const JacobianTable& jac, const Rules& rules,
                              const TangentMap& tangent);
Eigen::MatrixXd assemble_gram(const FactorTable& factors, const JacobianTable& jac, const Rules& rules);

/// b_i = integral of (dT[u]/dw_i) * field.
Eigen::VectorXd assemble_rhs(const FactorTable& factors, const JacobianTable& jac, const SeparableField& field,
                             const Rules& rules, const TangentMap& tangent);
Eigen::VectorXd assemble_rhs(const FactorTable& factors, const JacobianTable& jac, const SeparableField& field,
                             const Rules& rules);

struct LstsqResult {
    Eigen::VectorXd gamma;
    SolveDiagnostics diagnostics;
};

/// Minimum-norm least-squares solution of the positive semidefinite system
/// M gamma = b. Singular values below rcond * sigma_max are dropped. M is
/// first compressed by a pivoted Cholesky factorization that stops far below
/// the truncation level, then the factor is decomposed by SVD.
/// Throws NumericalFailure on non-finite input or output.
LstsqResult solve_lstsq(const Eigen::MatrixXd& M, const Eigen::VectorXd& b, double rcond);

/// J(gamma) = 1/2 |T'gamma - N|^2 expressed through the normal equations.
double galerkin_objective(const Eigen::MatrixXd& M, const Eigen::VectorXd& b, const Eigen::VectorXd& gamma,
                          double field_norm_sq);

/// Parameter velocity for the masked parameters plus solve diagnostics.
struct Velocity {
    Eigen::VectorXd gamma;
    SolveDiagnostics diagnostics;
    /// sqrt(2 J(gamma))
    double residual{0.0};
};

/// Right-hand side of the state equation in separable form.
using OperatorFn = std::function<SeparableField(const FactorTable&, double t)>;

Velocity galerkin_velocity(const TnnParams& params, const ParamMask& mask, const Rules& rules, int factor_order,
                           int jacobian_order, const TangentMap& tangent, const OperatorFn& op, double t,
                           double rcond);

/// One Galerkin evaluation d(theta_hat)/dt for a PDE problem.
Velocity gamma_rhs(const TnnParams& params, const ParamMask& mask, const PdeProblem& problem, const Rules& rules,
                   double t, double rcond = kDefaultRcond);

} // namespace tenevo
