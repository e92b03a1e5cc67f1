#include "tenevo/init_fit.hpp"

#include <chrono>
#include <cmath>
#include <numbers>
#include <optional>
#include <random>

#include "subnet.hpp"
#include "tenevo/errors.hpp"
#include "tenevo/evolution.hpp"
#include "tenevo/parallel.hpp"

namespace tenevo {

namespace {

using Mat = Eigen::MatrixXd;
using Clock = std::chrono::steady_clock;

Eigen::Map<const Eigen::VectorXd> weights_of(const QuadratureRule1D& r) {
    return {r.weights.data(), static_cast<Eigen::Index>(r.size())};
}

double elapsed_ms(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

class Adam {
public:
    explicit Adam(std::size_t n) : m_(n, 0.0), v_(n, 0.0) {}

    void update(std::vector<double>& x, const std::vector<double>& g, double lr) {
        ++t_;
        const double c1 = 1.0 - std::pow(kBeta1, t_);
        const double c2 = 1.0 - std::pow(kBeta2, t_);
        for (std::size_t i = 0; i < x.size(); ++i) {
            m_[i] = kBeta1 * m_[i] + (1.0 - kBeta1) * g[i];
            v_[i] = kBeta2 * v_[i] + (1.0 - kBeta2) * g[i] * g[i];
            x[i] -= lr * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + kEps);
        }
    }

private:
    static constexpr double kBeta1 = 0.9;
    static constexpr double kBeta2 = 0.999;
    static constexpr double kEps = 1e-12;
    std::vector<double> m_;
    std::vector<double> v_;
    int t_{0};
};

constexpr int kMaxHalvings = 12;

double cosine_rate(const FitConfig& cfg, int it, int total) {
    const double frac = total > 1 ? static_cast<double>(it) / (total - 1) : 1.0;
    return cfg.final_learning_rate +
           0.5 * (cfg.learning_rate - cfg.final_learning_rate) * (1.0 + std::cos(std::numbers::pi * frac));
}

void check_target(const TnnParams& params, const SeparableField& u0, const Rules& rules) {
    if (u0.dims() != params.arch.dims || rules.size() != static_cast<std::size_t>(params.arch.dims)) {
        throw InvalidArgument("fit: target, rules and network disagree on dimension");
    }
    for (std::size_t i = 0; i < rules.size(); ++i) {
        if (static_cast<std::size_t>(u0.factors[i].rows()) != rules[i].size()) {
            throw InvalidArgument("fit: target not sampled on the given rules");
        }
    }
}

// Loss and gradient of sum_q w_q |U(q,:) - T(q,:)|^2 for one sub-network.
double subnet_fit_gradient(const TnnArchitecture& arch, const ParamLayout& layout, const double* theta,
                           const QuadratureRule1D& rule, int dim, const Mat& target, double* grad) {
    const auto tr = detail::forward(arch, layout, theta, rule.nodes, dim, 0);
    const Mat diff = detail::factors(tr)[0] - target;
    const auto w = weights_of(rule);
    const Mat seed = 2.0 * (w.asDiagonal() * diff);
    std::fill(grad, grad + layout.per_subnet(), 0.0);
    const auto adj = detail::backward(layout, theta, tr, detail::Jet{seed}, 0);
    detail::accumulate_gradient(layout, tr, adj, grad);
    return (w.asDiagonal() * diff.cwiseAbs2()).sum();
}

void fit_subnet(const TnnArchitecture& arch, const ParamLayout& layout, double* theta, const QuadratureRule1D& rule,
                int dim, const Mat& target, const FitConfig& cfg) {
    const std::size_t n = layout.per_subnet();
    std::vector<double> x(theta, theta + n);
    std::vector<double> best = x;
    std::vector<double> g(n);
    double best_loss = INFINITY;
    Adam opt(n);
    for (int it = 0; it < cfg.prefit_iterations; ++it) {
        const double loss = subnet_fit_gradient(arch, layout, x.data(), rule, dim, target, g.data());
        if (loss < best_loss) {
            best_loss = loss;
            best = x;
        }
        opt.update(x, g, cosine_rate(cfg, it, cfg.prefit_iterations));
    }
    std::copy(best.begin(), best.end(), theta);
}

// Rank-1 target c * prod_i v_i: give each sub-network the scaled profile s_j v_i
// with sum_j prod_i s_j = c.
void prefit(TnnParams& params, const SeparableField& u0, const Rules& rules, const FitConfig& cfg) {
    const auto& arch = params.arch;
    const ParamLayout layout(arch);
    const int d = arch.dims;
    const int p = arch.rank;
    const double c = u0.coeff[0];
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> u(0.5, 1.5);
    Eigen::VectorXd alpha(p);
    for (int j = 0; j < p; ++j) alpha[j] = u(rng);
    alpha /= alpha.sum();
    Eigen::VectorXd s(p);
    for (int j = 0; j < p; ++j) s[j] = std::pow(std::abs(c) * alpha[j], 1.0 / d);

    bool shared = true;
    for (int i = 1; i < d; ++i) {
        shared = shared && rules[i] == rules[0] && u0.factors[i] == u0.factors[0] &&
                 arch.domain[static_cast<std::size_t>(i)] == arch.domain[0];
    }
    const int fitted = shared ? 1 : d;
    parallel_for(static_cast<std::size_t>(fitted), [&](std::size_t i) {
        const Mat target = u0.factors[i].col(0) * s.transpose();
        fit_subnet(arch, layout, params.subnet(static_cast<int>(i)), rules[i], static_cast<int>(i), target, cfg);
    });
    if (shared) {
        for (int i = 1; i < d; ++i) {
            std::copy(params.subnet(0), params.subnet(0) + layout.per_subnet(), params.subnet(i));
        }
    }
    if (c < 0.0) {
        const auto& out = layout.layers().back();
        double* w = params.subnet(0) + out.weight_offset;
        for (std::size_t k = 0; k < static_cast<std::size_t>(out.rows) * out.cols; ++k) w[k] = -w[k];
    }
}

// Gauss-Newton steps on the squared loss: the normal equations are the
// Galerkin system with the identity tangent and the residual field u0 - u.
void polish(FitResult& res, const SeparableField& u0, const Rules& rules, const FitConfig& cfg,
            Clock::time_point start) {
    const auto& arch = res.params.arch;
    const int d = arch.dims;
    const OperatorFn residual = [&u0](const FactorTable& f, double) {
        return (u0 - SeparableField::from_factors(f)).merged();
    };
    std::optional<PartitionStrategy> block;
    if (cfg.polish_block > 0) {
        const ParamLayout layout(arch);
        block = PartitionStrategy{PartitionKind::random_per_step, 1.0,
                                  std::min<int>(cfg.polish_block, static_cast<int>(layout.per_subnet())), cfg.seed,
                                  false};
    }
    std::mt19937_64 rng(cfg.seed);
    double loss = res.loss * res.loss;
    int stalled = 0;
    for (int it = 0; it < cfg.polish_iterations && res.loss > cfg.target; ++it) {
        const ParamMask mask = block ? select_mask(*block, arch, rng) : ParamMask::full(arch);
        const auto v = galerkin_velocity(res.params, mask, rules, 0, 0, identity_tangent(d), residual, 0.0,
                                         cfg.polish_rcond);
        bool accepted = false;
        double scale = 1.0;
        for (int k = 0; k < kMaxHalvings && !accepted; ++k, scale *= 0.5) {
            const Eigen::VectorXd delta = scale * v.gamma;
            TnnParams trial = unflatten_add(res.params, mask,
                                            std::span<const double>(delta.data(), static_cast<std::size_t>(delta.size())));
            const double trial_loss = fit_loss(trial, u0, rules);
            if (std::isfinite(trial_loss) && trial_loss < loss) {
                res.params = std::move(trial);
                loss = trial_loss;
                accepted = true;
            }
        }
        res.loss = std::sqrt(loss);
        ++res.iterations;
        if (cfg.trace_every > 0) res.trace.push_back({res.iterations, res.loss, elapsed_ms(start)});
        stalled = accepted ? 0 : stalled + 1;
        // stop after one failed full step or 2d failed block steps
        if (stalled > (block ? 2 * d : 0)) break;
    }
    res.converged = res.loss <= cfg.target;
}

} // namespace

double l2_norm(const SeparableField& field, const Rules& rules) {
    return std::sqrt(std::max(0.0, inner(field, field, rules)));
}

double l2_norm(const TnnParams& params, const Rules& rules) {
    return l2_norm(SeparableField::from_factors(eval_factors(params, rules, 0)), rules);
}

L2Error l2_error(const SeparableField& approx, const SeparableField& reference, const Rules& rules) {
    L2Error e;
    e.absolute = l2_norm((approx - reference).merged(), rules);
    const double ref = l2_norm(reference, rules);
    if (ref > 0.0) e.relative = e.absolute / ref;
    return e;
}

L2Error l2_error(const TnnParams& params, const SeparableField& reference, const Rules& rules) {
    return l2_error(SeparableField::from_factors(eval_factors(params, rules, 0)), reference, rules);
}

void FitConfig::validate() const {
    if (max_iterations < 1) throw InvalidArgument("fit: max_iterations must be >= 1");
    if (!(target > 0.0)) throw InvalidArgument("fit: target must be positive");
    if (!(learning_rate > 0.0) || final_learning_rate < 0.0) {
        throw InvalidArgument("fit: learning rates must be positive");
    }
    if (prefit_iterations < 0 || trace_every < 0 || polish_iterations < 0 || polish_block < 0) {
        throw InvalidArgument("fit: negative iteration count");
    }
    if (!(polish_rcond > 0.0 && polish_rcond < 1.0)) throw InvalidArgument("fit: polish_rcond must lie in (0, 1)");
}

double fit_loss(const TnnParams& params, const SeparableField& u0, const Rules& rules) {
    check_target(params, u0, rules);
    const auto e = (SeparableField::from_factors(eval_factors(params, rules, 0)) - u0).merged();
    return std::max(0.0, inner(e, e, rules));
}

std::vector<double> fit_gradient(const TnnParams& params, const SeparableField& u0, const Rules& rules,
                                 double* loss) {
    check_target(params, u0, rules);
    const auto& arch = params.arch;
    const ParamLayout layout(arch);
    const int d = arch.dims;
    const int p = arch.rank;

    std::vector<detail::SubnetTrace> traces(static_cast<std::size_t>(d));
    std::vector<Mat> U(static_cast<std::size_t>(d));
    parallel_for(static_cast<std::size_t>(d), [&](std::size_t k) {
        traces[k] = detail::forward(arch, layout, params.subnet(static_cast<int>(k)), rules[k].nodes,
                                    static_cast<int>(k), 0);
        U[k] = detail::factors(traces[k])[0];
    });

    // error field e = u - u0 as [U_k | V_k] with coefficients [1, -c]
    SeparableField e;
    e.coeff.resize(p + u0.rank());
    e.coeff.head(p).setOnes();
    e.coeff.tail(u0.rank()) = -u0.coeff;
    for (int k = 0; k < d; ++k) {
        Mat f(U[k].rows(), p + u0.rank());
        f << U[k], u0.factors[k];
        e.factors.push_back(std::move(f));
    }
    if (loss) *loss = std::max(0.0, inner(e.merged(), e.merged(), rules));

    std::vector<Mat> B(static_cast<std::size_t>(d));
    for (int m = 0; m < d; ++m) B[m] = U[m].transpose() * weights_of(rules[m]).asDiagonal() * e.factors[m];
    // prefix/suffix products of the overlaps
    const auto r = e.rank();
    std::vector<Mat> before(static_cast<std::size_t>(d) + 1, Mat::Ones(p, r));
    std::vector<Mat> after(static_cast<std::size_t>(d) + 1, Mat::Ones(p, r));
    for (int m = 0; m < d; ++m) before[m + 1] = before[m].cwiseProduct(B[m]);
    for (int m = d; m-- > 0;) after[m] = after[m + 1].cwiseProduct(B[m]);

    std::vector<double> grad(layout.total(), 0.0);
    parallel_for(static_cast<std::size_t>(d), [&](std::size_t k) {
        Mat R = before[k].cwiseProduct(after[k + 1]);
        R.array().rowwise() *= e.coeff.transpose().array();
        const Mat H = 2.0 * (weights_of(rules[k]).asDiagonal() * e.factors[k] * R.transpose());
        const double* theta = params.subnet(static_cast<int>(k));
        const auto adj = detail::backward(layout, theta, traces[k], detail::Jet{H}, 0);
        detail::accumulate_gradient(layout, traces[k], adj, grad.data() + layout.subnet_offset(static_cast<int>(k)));
    });
    return grad;
}

FitResult fit_initial(const TnnParams& params, const SeparableField& u0, const Rules& rules, const FitConfig& cfg) {
    cfg.validate();
    check_target(params, u0, rules);
    const auto start = Clock::now();
    FitResult res;
    res.params = params;

    double loss = fit_loss(params, u0, rules);
    if (std::sqrt(loss) <= cfg.target) {
        res.loss = std::sqrt(loss);
        res.converged = true;
        res.trace.push_back({0, res.loss, elapsed_ms(start)});
        return res;
    }

    TnnParams work = params;
    if (cfg.prefit && u0.rank() == 1 && cfg.prefit_iterations > 0) {
        prefit(work, u0, rules, cfg);
    }

    Adam opt(work.theta.size());
    double best = INFINITY;
    for (int it = 0; it < cfg.max_iterations; ++it) {
        const auto g = fit_gradient(work, u0, rules, &loss);
        if (!std::isfinite(loss)) throw NumericalFailure("fit: non-finite loss at iteration " + std::to_string(it));
        const double err = std::sqrt(loss);
        if (err < best) {
            best = err;
            res.params = work;
        }
        res.iterations = it;
        if (cfg.trace_every > 0 && it % cfg.trace_every == 0) res.trace.push_back({it, best, elapsed_ms(start)});
        if (err <= cfg.target) {
            res.converged = true;
            break;
        }
        opt.update(work.theta, g, cosine_rate(cfg, it, cfg.max_iterations));
    }
    res.loss = best;
    if (!res.converged && cfg.polish_iterations > 0) polish(res, u0, rules, cfg, start);
    if (cfg.trace_every > 0) res.trace.push_back({res.iterations, res.loss, elapsed_ms(start)});
    return res;
}

} // namespace tenevo
