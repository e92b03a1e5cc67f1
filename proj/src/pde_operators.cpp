#include "tenevo/pde_operators.hpp"

#include <cmath>
#include <numbers>

#include "tenevo/errors.hpp"

namespace tenevo {

namespace {

constexpr double pi = std::numbers::pi;

Eigen::VectorXd sample(const QuadratureRule1D& rule, double (*fn)(double), double freq, double shift = 0.0) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(rule.size()));
    for (std::size_t q = 0; q < rule.size(); ++q) {
        v[static_cast<Eigen::Index>(q)] = fn(freq * (rule.nodes[q] - shift));
    }
    return v;
}

double sin_fn(double x) { return std::sin(x); }
double cos_fn(double x) { return std::cos(x); }

SeparableField derivative_sum(const FactorTable& factors, int order, double coeff) {
    SeparableField out;
    std::vector<int> orders(static_cast<std::size_t>(factors.dims()), 0);
    for (int k = 0; k < factors.dims(); ++k) {
        orders[static_cast<std::size_t>(k)] = order;
        out += SeparableField::from_factors(factors, orders) * coeff;
        orders[static_cast<std::size_t>(k)] = 0;
    }
    return out;
}

SeparableField xy(const FactorTable& f, int mx, int my) {
    const int orders[2] = {mx, my};
    return SeparableField::from_factors(f, orders);
}

} // namespace

std::string to_string(ProblemKind k) {
    switch (k) {
    case ProblemKind::transport: return "transport";
    case ProblemKind::heat: return "heat";
    case ProblemKind::kdv: return "kdv";
    case ProblemKind::navier_stokes: return "navier_stokes";
    }
    return "transport";
}

ProblemKind problem_kind_from_string(const std::string& s) {
    if (s == "transport") return ProblemKind::transport;
    if (s == "heat") return ProblemKind::heat;
    if (s == "kdv") return ProblemKind::kdv;
    if (s == "navier_stokes") return ProblemKind::navier_stokes;
    throw InvalidArgument("unknown problem kind '" + s + "'");
}

double default_heat_viscosity() { return 1.0 / (pi * pi); }
double default_kdv_speed() { return 1.0 / (pi * pi * pi); }

TangentMap identity_tangent(int dims) { return {TangentTerm{1.0, std::vector<int>(static_cast<std::size_t>(dims), 0)}}; }

PdeProblem PdeProblem::transport(int dims, double speed) {
    PdeProblem p;
    p.kind = ProblemKind::transport;
    p.dims = dims;
    p.speed = speed;
    p.domain.assign(static_cast<std::size_t>(dims), Interval{-1.0, 1.0});
    p.boundary = Boundary::periodic;
    return p;
}

PdeProblem PdeProblem::heat(int dims, double viscosity) {
    PdeProblem p;
    p.kind = ProblemKind::heat;
    p.dims = dims;
    p.viscosity = viscosity;
    p.domain.assign(static_cast<std::size_t>(dims), Interval{-1.0, 1.0});
    p.boundary = Boundary::dirichlet;
    return p;
}

PdeProblem PdeProblem::kdv(int dims, double speed) {
    PdeProblem p;
    p.kind = ProblemKind::kdv;
    p.dims = dims;
    p.speed = speed;
    p.domain.assign(static_cast<std::size_t>(dims), Interval{-1.0, 1.0});
    p.boundary = Boundary::periodic;
    return p;
}

PdeProblem PdeProblem::navier_stokes(double viscosity, double amplitude) {
    PdeProblem p;
    p.kind = ProblemKind::navier_stokes;
    p.dims = 2;
    p.viscosity = viscosity;
    p.amplitude = amplitude;
    p.domain.assign(2, Interval{-pi, pi});
    p.boundary = Boundary::periodic;
    return p;
}

void PdeProblem::validate() const {
    if (dims < 1) throw InvalidArgument("problem: dims must be >= 1");
    if (domain.size() != static_cast<std::size_t>(dims)) {
        throw InvalidArgument("problem: domain needs one interval per dimension");
    }
    switch (kind) {
    case ProblemKind::transport:
    case ProblemKind::kdv:
        if (boundary != Boundary::periodic) throw InvalidArgument("problem: transport/kdv require periodic boundaries");
        break;
    case ProblemKind::heat:
        if (boundary != Boundary::dirichlet) throw InvalidArgument("problem: heat requires Dirichlet boundaries");
        break;
    case ProblemKind::navier_stokes:
        if (dims != 2) throw InvalidArgument("problem: navier_stokes is two-dimensional");
        if (boundary != Boundary::periodic) throw InvalidArgument("problem: navier_stokes requires periodic boundaries");
        break;
    }
}

int PdeProblem::operator_order() const {
    switch (kind) {
    case ProblemKind::transport: return 1;
    case ProblemKind::heat: return 2;
    case ProblemKind::kdv: return 3;
    case ProblemKind::navier_stokes: return 4;
    }
    return 1;
}

int PdeProblem::jacobian_order() const { return kind == ProblemKind::navier_stokes ? 2 : 0; }

TangentMap PdeProblem::tangent() const {
    if (kind != ProblemKind::navier_stokes) {
        return identity_tangent(dims);
    }
    return {TangentTerm{-1.0, {2, 0}}, TangentTerm{-1.0, {0, 2}}};
}

SeparableField apply_operator(const PdeProblem& problem, const FactorTable& factors, double t) {
    if (factors.dims() != problem.dims) {
        throw InvalidArgument("apply_operator: factor table dimension does not match the problem");
    }
    if (factors.max_order < problem.operator_order()) {
        throw InvalidArgument("apply_operator: " + to_string(problem.kind) + " needs factor derivatives of order " +
                              std::to_string(problem.operator_order()) + ", table has " +
                              std::to_string(factors.max_order));
    }
    switch (problem.kind) {
    case ProblemKind::transport:
        return derivative_sum(factors, 1, -problem.speed);
    case ProblemKind::heat:
        return derivative_sum(factors, 2, problem.viscosity);
    case ProblemKind::kdv:
        return derivative_sum(factors, 3, -problem.speed) + source_field(problem, factors.rules, t);
    case ProblemKind::navier_stokes: {
        const double nu = problem.viscosity;
        // nu Laplacian(w) with w = -(psi_xx + psi_yy)
        SeparableField out = xy(factors, 4, 0) * -nu;
        out += xy(factors, 2, 2) * (-2.0 * nu);
        out += xy(factors, 0, 4) * -nu;
        const SeparableField w_x = (xy(factors, 3, 0) + xy(factors, 1, 2)) * -1.0;
        const SeparableField w_y = (xy(factors, 2, 1) + xy(factors, 0, 3)) * -1.0;
        out += (xy(factors, 0, 1) * w_x) * -1.0;
        out += xy(factors, 1, 0) * w_y;
        return out;
    }
    }
    throw InvalidArgument("apply_operator: unknown problem");
}

SeparableField analytic_solution(const PdeProblem& problem, const Rules& rules, double t) {
    if (rules.size() != static_cast<std::size_t>(problem.dims)) {
        throw InvalidArgument("analytic_solution: one rule per dimension required");
    }
    std::vector<Eigen::VectorXd> v;
    switch (problem.kind) {
    case ProblemKind::transport:
        for (const auto& r : rules) v.push_back(sample(r, sin_fn, pi, problem.speed * t));
        return SeparableField::product(std::move(v));
    case ProblemKind::heat:
        for (const auto& r : rules) v.push_back(sample(r, sin_fn, pi));
        return SeparableField::product(std::move(v), std::exp(-problem.viscosity * problem.dims * pi * pi * t));
    case ProblemKind::kdv:
        for (const auto& r : rules) v.push_back(sample(r, sin_fn, pi));
        return SeparableField::product(std::move(v), std::exp(-t));
    case ProblemKind::navier_stokes:
        // u = psi_y = U0 cos x sin y e^{-2 nu t}, v = -psi_x = -U0 sin x cos y e^{-2 nu t}
        for (const auto& r : rules) v.push_back(sample(r, cos_fn, 1.0));
        return SeparableField::product(std::move(v), -problem.amplitude * std::exp(-2.0 * problem.viscosity * t));
    }
    throw InvalidArgument("analytic_solution: unknown problem");
}

SeparableField source_field(const PdeProblem& problem, const Rules& rules, double t) {
    if (problem.kind != ProblemKind::kdv) {
        throw InvalidArgument("source_field: only the kdv family carries a source term");
    }
    if (rules.size() != static_cast<std::size_t>(problem.dims)) {
        throw InvalidArgument("source_field: one rule per dimension required");
    }
    const double decay = std::exp(-t);
    std::vector<Eigen::VectorXd> sines;
    std::vector<Eigen::VectorXd> cosines;
    for (const auto& r : rules) {
        sines.push_back(sample(r, sin_fn, pi));
        cosines.push_back(sample(r, cos_fn, pi));
    }
    // f = u_t + c sum_i d^3u/dx_i^3 for u = prod sin(pi x_i) e^{-t}
    SeparableField f = SeparableField::product(sines, -decay);
    const double cross = -problem.speed * pi * pi * pi * decay;
    for (int i = 0; i < problem.dims; ++i) {
        auto v = sines;
        v[static_cast<std::size_t>(i)] = cosines[static_cast<std::size_t>(i)];
        f += SeparableField::product(std::move(v), cross);
    }
    return f;
}

} // namespace tenevo
