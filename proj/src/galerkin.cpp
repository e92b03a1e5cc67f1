#include "tenevo/galerkin.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <utility>

#include <Eigen/Cholesky>
#include <Eigen/QR>
#include <Eigen/SVD>

#include "tenevo/errors.hpp"

namespace tenevo {

namespace {

using Mat = Eigen::MatrixXd;

// Pivoted Cholesky stops once the largest remaining pivot falls below
// kPivotTolerance * rcond * max(diag M) / n.
constexpr double kPivotTolerance = 1e-3;

// Left-looking pivoted Cholesky of a positive semidefinite matrix, returning
// F (n x r) with M ~ F F^T. Cost grows as n r^2.
Mat pivoted_cholesky(const Mat& M, double tol) {
    const Eigen::Index n = M.rows();
    Eigen::VectorXd diag = M.diagonal();
    std::vector<bool> used(static_cast<std::size_t>(n), false);
    Mat F(n, std::min<Eigen::Index>(n, 64));
    Eigen::Index r = 0;
    while (r < n) {
        Eigen::Index piv = -1;
        double best = tol;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (!used[static_cast<std::size_t>(i)] && diag[i] > best) {
                best = diag[i];
                piv = i;
            }
        }
        if (piv < 0) break;
        if (r == F.cols()) F.conservativeResize(n, std::min<Eigen::Index>(n, 2 * F.cols()));
        Eigen::VectorXd col = M.col(piv);
        if (r > 0) col.noalias() -= F.leftCols(r) * F.row(piv).head(r).transpose();
        col /= std::sqrt(best);
        for (Eigen::Index i = 0; i < n; ++i) {
            if (used[static_cast<std::size_t>(i)]) col[i] = 0.0;
        }
        F.col(r) = col;
        diag -= col.cwiseAbs2();
        used[static_cast<std::size_t>(piv)] = true;
        ++r;
    }
    return F.leftCols(r);
}

Eigen::Map<const Eigen::VectorXd> weights_of(const QuadratureRule1D& r) {
    return {r.weights.data(), static_cast<Eigen::Index>(r.size())};
}

void check_inputs(const FactorTable& factors, const JacobianTable& jac, const Rules& rules,
                  const TangentMap& tangent) {
    if (factors.dims() != jac.dims() || rules.size() != static_cast<std::size_t>(factors.dims())) {
        throw InvalidArgument("galerkin assembly: factor table, Jacobian and rules disagree on dimension");
    }
    if (factors.rank() != jac.rank) {
        throw InvalidArgument("galerkin assembly: factor table and Jacobian disagree on rank");
    }
    for (int k = 0; k < factors.dims(); ++k) {
        const auto nq = static_cast<Eigen::Index>(rules[static_cast<std::size_t>(k)].size());
        if (factors.values[k][0].rows() != nq || jac.entries[k][0].cols() != nq * jac.rank) {
            throw InvalidArgument("galerkin assembly: tables not sampled on the given rules");
        }
    }
    for (const auto& term : tangent) {
        if (term.orders.size() != static_cast<std::size_t>(factors.dims())) {
            throw InvalidArgument("galerkin assembly: tangent term has wrong dimension");
        }
        for (int k = 0; k < factors.dims(); ++k) {
            const int m = term.orders[static_cast<std::size_t>(k)];
            if (m > factors.max_order || m > jac.max_order) {
                throw InvalidArgument("galerkin assembly: tables lack derivative order " + std::to_string(m));
            }
        }
    }
}

// Elementwise product of mats[m] over m not in {skip_a, skip_b}.
Mat product_except(const std::vector<Mat>& mats, int skip_a, int skip_b, Eigen::Index rows, Eigen::Index cols) {
    Mat out = Mat::Ones(rows, cols);
    for (int m = 0; m < static_cast<int>(mats.size()); ++m) {
        if (m == skip_a || m == skip_b) continue;
        out.array() *= mats[static_cast<std::size_t>(m)].array();
    }
    return out;
}

// Per-dimension overlap U_i^(a)^T W U_i^(b) with caching on the order pair.
class OverlapCache {
public:
    OverlapCache(const FactorTable& f, const Rules& r) : f_(f), r_(r) {}

    const Mat& get(int dim, int ma, int mb) {
        const auto key = std::make_tuple(dim, ma, mb);
        auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;
        const auto w = weights_of(r_[static_cast<std::size_t>(dim)]);
        Mat o = f_.values[dim][ma].transpose() * w.asDiagonal() * f_.values[dim][mb];
        return cache_.emplace(key, std::move(o)).first->second;
    }

private:
    const FactorTable& f_;
    const Rules& r_;
    std::map<std::tuple<int, int, int>, Mat> cache_;
};

} // namespace

Eigen::MatrixXd assemble_gram(const FactorTable& factors, const JacobianTable& jac, const Rules& rules,
                              const TangentMap& tangent) {
    check_inputs(factors, jac, rules, tangent);
    const int d = factors.dims();
    const int p = factors.rank();
    std::vector<Eigen::Index> offset(static_cast<std::size_t>(d) + 1, 0);
    for (int k = 0; k < d; ++k) offset[k + 1] = offset[k] + jac.rows(k);
    const Eigen::Index n = offset[d];

    Mat M = Mat::Zero(n, n);
    OverlapCache overlap(factors, rules);

    for (const auto& ta : tangent) {
        for (const auto& tb : tangent) {
            const double cc = ta.coeff * tb.coeff;
            std::vector<Mat> P(static_cast<std::size_t>(d));
            for (int m = 0; m < d; ++m) {
                P[m] = overlap.get(m, ta.orders[m], tb.orders[m]);
            }

            // F_k[:, a*p+b] = int dU_{k,a}^(alpha_k)/dw * U_{k,b}^(beta_k)
            // G_l[:, a*p+b] = int U_{l,a}^(alpha_l) * dU_{l,b}^(beta_l)/dw
            std::vector<Mat> F(static_cast<std::size_t>(d));
            std::vector<Mat> G(static_cast<std::size_t>(d));
            for (int k = 0; k < d; ++k) {
                const auto nk = jac.rows(k);
                if (nk == 0) continue;
                const auto nq = static_cast<Eigen::Index>(rules[k].size());
                const auto w = weights_of(rules[k]);
                const Mat& Ja = jac.at(k, ta.orders[k]);
                const Mat& Jb = jac.at(k, tb.orders[k]);
                const Mat WUb = w.asDiagonal() * factors.values[k][tb.orders[k]];
                const Mat WUa = w.asDiagonal() * factors.values[k][ta.orders[k]];
                F[k].resize(nk, p * p);
                G[k].resize(nk, p * p);
                for (int a = 0; a < p; ++a) {
                    F[k].middleCols(a * p, p).noalias() = Ja.middleCols(a * nq, nq) * WUb;
                }
                for (int b = 0; b < p; ++b) {
                    const Mat g = Jb.middleCols(b * nq, nq) * WUa;  // (nk x p) over a
                    for (int a = 0; a < p; ++a) G[k].col(a * p + b) = g.col(a);
                }

                // diagonal block: E[:, a*Q+q] = w_q sum_b P_ab Jb[:, b*Q+q]
                const Mat Pk = product_except(P, k, -1, p, p);
                Mat E = Mat::Zero(nk, p * nq);
                for (int a = 0; a < p; ++a) {
                    auto blk = E.middleCols(a * nq, nq);
                    for (int b = 0; b < p; ++b) {
                        if (Pk(a, b) != 0.0) blk.noalias() += Pk(a, b) * Jb.middleCols(b * nq, nq);
                    }
                    blk = blk * w.asDiagonal();
                }
                M.block(offset[k], offset[k], nk, nk).noalias() += cc * Ja * E.transpose();
            }

            for (int k = 0; k < d; ++k) {
                if (jac.rows(k) == 0) continue;
                for (int l = k + 1; l < d; ++l) {
                    if (jac.rows(l) == 0) continue;
                    const Mat Pkl = product_except(P, k, l, p, p);
                    Eigen::VectorXd scale(p * p);
                    for (int a = 0; a < p; ++a) {
                        for (int b = 0; b < p; ++b) scale[a * p + b] = cc * Pkl(a, b);
                    }
                    M.block(offset[k], offset[l], jac.rows(k), jac.rows(l)).noalias() +=
                        F[k] * scale.asDiagonal() * G[l].transpose();
                }
            }
        }
    }

    for (int k = 0; k < d; ++k) {
        auto blk = M.block(offset[k], offset[k], jac.rows(k), jac.rows(k));
        const Mat sym = 0.5 * (blk + blk.transpose());
        blk = sym;
        for (int l = k + 1; l < d; ++l) {
            M.block(offset[l], offset[k], jac.rows(l), jac.rows(k)) =
                M.block(offset[k], offset[l], jac.rows(k), jac.rows(l)).transpose();
        }
    }
    return M;
}

Eigen::MatrixXd assemble_gram(const FactorTable& factors, const JacobianTable& jac, const Rules& rules) {
    return assemble_gram(factors, jac, rules, identity_tangent(factors.dims()));
}

Eigen::VectorXd assemble_rhs(const FactorTable& factors, const JacobianTable& jac, const SeparableField& field,
                             const Rules& rules, const TangentMap& tangent) {
    check_inputs(factors, jac, rules, tangent);
    const int d = factors.dims();
    const int p = factors.rank();
    if (field.dims() != d) {
        throw InvalidArgument("assemble_rhs: field dimension does not match");
    }
    for (int k = 0; k < d; ++k) {
        if (static_cast<std::size_t>(field.factors[k].rows()) != rules[k].size()) {
            throw InvalidArgument("assemble_rhs: field not sampled on the given rules");
        }
    }
    std::vector<Eigen::Index> offset(static_cast<std::size_t>(d) + 1, 0);
    for (int k = 0; k < d; ++k) offset[k + 1] = offset[k] + jac.rows(k);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(offset[d]);
    const int r = field.rank();
    if (r == 0) return b;

    for (const auto& ta : tangent) {
        std::vector<Mat> B(static_cast<std::size_t>(d));
        for (int m = 0; m < d; ++m) {
            const auto w = weights_of(rules[m]);
            B[m] = factors.values[m][ta.orders[m]].transpose() * w.asDiagonal() * field.factors[m];
        }
        for (int k = 0; k < d; ++k) {
            if (jac.rows(k) == 0) continue;
            const auto nq = static_cast<Eigen::Index>(rules[k].size());
            Mat R = product_except(B, k, -1, p, r);
            R.array().rowwise() *= field.coeff.transpose().array();
            const auto w = weights_of(rules[k]);
            const Mat H = w.asDiagonal() * field.factors[k] * R.transpose();  // (Q x p)
            const Mat& J = jac.at(k, ta.orders[k]);
            auto seg = b.segment(offset[k], jac.rows(k));
            for (int a = 0; a < p; ++a) {
                seg.noalias() += ta.coeff * (J.middleCols(a * nq, nq) * H.col(a));
            }
        }
    }
    return b;
}

Eigen::VectorXd assemble_rhs(const FactorTable& factors, const JacobianTable& jac, const SeparableField& field,
                             const Rules& rules) {
    return assemble_rhs(factors, jac, field, rules, identity_tangent(factors.dims()));
}

LstsqResult solve_lstsq(const Eigen::MatrixXd& M, const Eigen::VectorXd& b, double rcond) {
    if (M.rows() != M.cols() || M.rows() != b.size()) {
        throw InvalidArgument("solve_lstsq: shape mismatch");
    }
    if (!(rcond > 0.0 && rcond < 1.0)) {
        throw InvalidArgument("solve_lstsq: rcond must lie in (0, 1)");
    }
    if (!M.allFinite() || !b.allFinite()) {
        throw NumericalFailure("solve_lstsq: non-finite entries in the normal equations");
    }
    const Eigen::Index n = M.rows();
    LstsqResult res;
    res.gamma = Eigen::VectorXd::Zero(n);
    if (n == 0) return res;
    const double max_diag = M.diagonal().maxCoeff();
    if (!(max_diag > 0.0)) {
        res.diagnostics.truncated = static_cast<int>(n);
        return res;
    }

    const Mat F = pivoted_cholesky(M, kPivotTolerance * rcond * max_diag / static_cast<double>(n));
    if (F.cols() == 0) {
        res.diagnostics.truncated = static_cast<int>(n);
        return res;
    }
    // F = Q R and R = W S V^T give M ~ (Q W) S^2 (Q W)^T.
    const Eigen::HouseholderQR<Mat> qr(F);
    const Eigen::Index rank = F.cols();
    const Mat R = qr.matrixQR().topRows(rank).triangularView<Eigen::Upper>();
    const Eigen::BDCSVD<Mat> svd(R, Eigen::ComputeFullU);
    const Mat Q = qr.householderQ() * Mat::Identity(n, rank);
    const Mat U = Q * svd.matrixU();
    const Eigen::VectorXd& s = svd.singularValues();
    const Eigen::VectorXd sigma = s.cwiseAbs2();
    const double sigma_max = sigma.maxCoeff();
    res.diagnostics.sigma_max = sigma_max;
    const double cutoff = rcond * sigma_max;
    Eigen::VectorXd coef = U.transpose() * b;
    double sigma_min_kept = sigma_max;
    int kept = 0;
    for (Eigen::Index i = 0; i < rank; ++i) {
        if (sigma[i] >= cutoff) {
            coef[i] /= sigma[i];
            sigma_min_kept = std::min(sigma_min_kept, sigma[i]);
            ++kept;
        } else {
            coef[i] = 0.0;
        }
    }
    res.gamma.noalias() = U * coef;
    if (!res.gamma.allFinite()) {
        throw NumericalFailure("solve_lstsq: non-finite solution");
    }
    res.diagnostics.effective_rank = kept;
    res.diagnostics.truncated = static_cast<int>(n) - kept;
    res.diagnostics.condition = kept > 0 ? sigma_max / sigma_min_kept : 0.0;
    return res;
}

double galerkin_objective(const Eigen::MatrixXd& M, const Eigen::VectorXd& b, const Eigen::VectorXd& gamma,
                          double field_norm_sq) {
    return 0.5 * (gamma.dot(M * gamma) - 2.0 * gamma.dot(b) + field_norm_sq);
}

Velocity galerkin_velocity(const TnnParams& params, const ParamMask& mask, const Rules& rules, int factor_order,
                           int jacobian_order, const TangentMap& tangent, const OperatorFn& op, double t,
                           double rcond) {
    const FactorTable factors = eval_factors(params, rules, factor_order);
    const JacobianTable jac = factor_param_jacobian(params, mask, rules, jacobian_order);
    const SeparableField field = op(factors, t);
    GramSystem sys;
    sys.M = assemble_gram(factors, jac, rules, tangent);
    sys.b = assemble_rhs(factors, jac, field, rules, tangent);
    auto solved = solve_lstsq(sys.M, sys.b, rcond);
    Velocity v;
    v.diagnostics = solved.diagnostics;
    const double j = galerkin_objective(sys.M, sys.b, solved.gamma, inner(field, field, rules));
    v.residual = std::sqrt(std::max(0.0, 2.0 * j));
    v.gamma = std::move(solved.gamma);
    return v;
}

Velocity gamma_rhs(const TnnParams& params, const ParamMask& mask, const PdeProblem& problem, const Rules& rules,
                   double t, double rcond) {
    const OperatorFn op = [&problem](const FactorTable& f, double time) { return apply_operator(problem, f, time); };
    return galerkin_velocity(params, mask, rules, problem.operator_order(), problem.jacobian_order(),
                             problem.tangent(), op, t, rcond);
}

} // namespace tenevo
