#pragma once

#include <string>
#include <vector>

#include "tenevo/separable_field.hpp"
#include "tenevo/tnn.hpp"

namespace tenevo {

enum class ProblemKind { transport, heat, kdv, navier_stokes };
enum class Boundary { periodic, dirichlet };

std::string to_string(ProblemKind k);
ProblemKind problem_kind_from_string(const std::string& s);

/// One term c * d^{orders} of a separable linear differential map applied to
/// the network output. The Galerkin projection is posed on the image of this
/// map: the identity for most families, -Laplacian (vorticity) for
/// Navier-Stokes.
struct TangentTerm {
    double coeff{1.0};
    std::vector<int> orders;
};
using TangentMap = std::vector<TangentTerm>;

TangentMap identity_tangent(int dims);

/// du/dt = N(u) on a tensor-product domain.
///   transport:      N(u) = -c sum_i du/dx_i                     (periodic, [-1,1]^d)
///   heat:           N(u) = nu Laplacian u                       (Dirichlet, [-1,1]^d)
///   kdv:            N(u) = -c sum_i d^3u/dx_i^3 + f(x, t)       (periodic, [-1,1]^d)
///   navier_stokes:  streamfunction psi on [-pi,pi]^2, evolved through the
///                   vorticity w = -Laplacian psi:
///                   dw/dt = nu Laplacian w - (psi_y w_x - psi_x w_y)
struct PdeProblem {
    ProblemKind kind{ProblemKind::transport};
    int dims{2};
    double speed{1.0};
    double viscosity{1.0};
    double amplitude{1.0};
    std::vector<Interval> domain;
    Boundary boundary{Boundary::periodic};

    static PdeProblem transport(int dims, double speed = 1.0);
    static PdeProblem heat(int dims, double viscosity);
    static PdeProblem kdv(int dims, double speed);
    static PdeProblem navier_stokes(double viscosity = 1.0, double amplitude = 1.0);

    void validate() const;
    /// Highest factor x-derivative apply_operator reads.
    int operator_order() const;
    /// Highest x-order of the parameter Jacobian the tangent map needs.
    int jacobian_order() const;
    TangentMap tangent() const;
};

double default_heat_viscosity();
double default_kdv_speed();

/// N(u) in separable form at the factor table's nodes.
SeparableField apply_operator(const PdeProblem& problem, const FactorTable& factors, double t);

/// Closed-form solution at time t (streamfunction for Navier-Stokes). Time
/// dependence lives in the term coefficients.
SeparableField analytic_solution(const PdeProblem& problem, const Rules& rules, double t);

/// Manufactured source of the KdV-type family.
SeparableField source_field(const PdeProblem& problem, const Rules& rules, double t);

} // namespace tenevo
