#include "subnet.hpp"

#include <algorithm>
#include <cmath>

#include "tenevo/errors.hpp"

namespace tenevo::detail {

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstWeights = Eigen::Map<const RowMajor>;
using ConstBias = Eigen::Map<const Eigen::VectorXd>;

Jet input_features(const TnnArchitecture& arch, std::span<const double> x, int order) {
    const auto n = static_cast<Eigen::Index>(x.size());
    const Eigen::Map<const Eigen::VectorXd> xv(x.data(), n);
    Jet z(order + 1);
    if (arch.input_map.kind == InputMapKind::periodic) {
        const double a = arch.input_map.a;
        const double b = arch.input_map.b;
        const Eigen::ArrayXd c = (b * xv.array()).cos();
        const Eigen::ArrayXd s = (b * xv.array()).sin();
        double scale = a;
        for (int m = 0; m <= order; ++m) {
            z[m].resize(n, 2);
            // d^m cos = cos, -sin, -cos, sin; d^m sin = sin, cos, -sin, -cos
            switch (m % 4) {
            case 0: z[m].col(0) = scale * c; z[m].col(1) = scale * s; break;
            case 1: z[m].col(0) = -scale * s; z[m].col(1) = scale * c; break;
            case 2: z[m].col(0) = -scale * c; z[m].col(1) = -scale * s; break;
            default: z[m].col(0) = scale * s; z[m].col(1) = -scale * c; break;
            }
            scale *= b;
        }
    } else {
        for (int m = 0; m <= order; ++m) {
            z[m] = Eigen::MatrixXd::Zero(n, 1);
        }
        z[0].col(0) = xv;
        if (order >= 1) {
            z[1].setOnes();
        }
    }
    return z;
}

std::vector<Eigen::ArrayXXd> activation_derivatives(Activation act, const Eigen::MatrixXd& a0, int upto) {
    std::vector<Eigen::ArrayXXd> f(upto + 1);
    if (act == Activation::tanh) {
        const Eigen::ArrayXXd t = a0.array().tanh();
        const Eigen::ArrayXXd s = 1.0 - t.square();
        f[0] = t;
        if (upto >= 1) f[1] = s;
        if (upto >= 2) f[2] = -2.0 * t * s;
        if (upto >= 3) f[3] = s * (6.0 * t.square() - 2.0);
        if (upto >= 4) f[4] = 8.0 * t * s * (2.0 - 3.0 * t.square());
    } else {
        const Eigen::ArrayXXd sn = a0.array().sin();
        const Eigen::ArrayXXd cs = a0.array().cos();
        const Eigen::ArrayXXd* cycle[4] = {&sn, &cs, &sn, &cs};
        const double sign[4] = {1.0, 1.0, -1.0, -1.0};
        for (int k = 0; k <= upto; ++k) {
            f[k] = sign[k % 4] * *cycle[k % 4];
        }
    }
    return f;
}

// Faa di Bruno for y = f(a) up to fourth order.
Jet compose(const std::vector<Eigen::ArrayXXd>& f, const Jet& a, int order) {
    Jet y(order + 1);
    y[0] = f[0].matrix();
    if (order >= 1) {
        const auto a1 = a[1].array();
        y[1] = (f[1] * a1).matrix();
        if (order >= 2) {
            const auto a2 = a[2].array();
            y[2] = (f[2] * a1.square() + f[1] * a2).matrix();
            if (order >= 3) {
                const auto a3 = a[3].array();
                y[3] = (f[3] * a1.cube() + 3.0 * f[2] * a1 * a2 + f[1] * a3).matrix();
                if (order >= 4) {
                    const auto a4 = a[4].array();
                    y[4] = (f[4] * a1.square().square() + 6.0 * f[3] * a1.square() * a2 +
                            f[2] * (3.0 * a2.square() + 4.0 * a1 * a3) + f[1] * a4)
                               .matrix();
                }
            }
        }
    }
    return y;
}

double binomial(int n, int k) {
    double r = 1.0;
    for (int i = 1; i <= k; ++i) {
        r = r * (n - k + i) / i;
    }
    return r;
}

struct Located {
    std::size_t layer;
    int row;
    int col;  // -1 for a bias entry
};

Located locate(const ParamLayout& layout, std::size_t local) {
    const auto& layers = layout.layers();
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const auto& s = layers[l];
        const std::size_t nw = static_cast<std::size_t>(s.rows) * s.cols;
        if (local >= s.weight_offset && local < s.weight_offset + nw) {
            const auto k = local - s.weight_offset;
            return {l, static_cast<int>(k / s.cols), static_cast<int>(k % s.cols)};
        }
        if (s.has_bias && local >= s.bias_offset && local < s.bias_offset + static_cast<std::size_t>(s.rows)) {
            return {l, static_cast<int>(local - s.bias_offset), -1};
        }
    }
    throw InvalidArgument("parameter index out of range");
}

} // namespace

SubnetTrace forward(const TnnArchitecture& arch, const ParamLayout& layout, const double* theta,
                    std::span<const double> x, int dim, int order, int reverse_order) {
    if (order < 0 || order > kMaxFactorOrder) {
        throw UnsupportedOrder("factor derivative order " + std::to_string(order) + " not supported (max " +
                               std::to_string(kMaxFactorOrder) + ")");
    }
    const int f_upto = std::min(kMaxFactorOrder, std::max(order, reverse_order + 1));
    const auto n = static_cast<Eigen::Index>(x.size());
    const auto& layers = layout.layers();
    const std::size_t hidden = layers.size() - 1;

    SubnetTrace tr;
    tr.order = order;
    tr.z.reserve(hidden + 1);
    tr.z.push_back(input_features(arch, x, order));
    for (std::size_t l = 0; l < hidden; ++l) {
        const auto& s = layers[l];
        const ConstWeights w(theta + s.weight_offset, s.rows, s.cols);
        const ConstBias b(theta + s.bias_offset, s.rows);
        Jet a(order + 1);
        for (int m = 0; m <= order; ++m) {
            a[m].noalias() = tr.z[l][m] * w.transpose();
        }
        a[0].rowwise() += b.transpose();
        tr.f.push_back(activation_derivatives(arch.activation, a[0], f_upto));
        tr.z.push_back(compose(tr.f.back(), a, order));
        tr.a.push_back(std::move(a));
    }
    const auto& out = layers.back();
    const ConstWeights w(theta + out.weight_offset, out.rows, out.cols);
    tr.net.resize(order + 1);
    for (int m = 0; m <= order; ++m) {
        tr.net[m].noalias() = tr.z[hidden][m] * w.transpose();
    }

    if (arch.input_map.kind == InputMapKind::dirichlet) {
        const Interval iv = arch.domain[static_cast<std::size_t>(dim)];
        const double inv = 4.0 / (iv.length() * iv.length());
        const Eigen::Map<const Eigen::VectorXd> xv(x.data(), n);
        tr.envelope.assign(order + 1, Eigen::VectorXd::Zero(n));
        tr.envelope[0] = inv * ((xv.array() - iv.lo) * (iv.hi - xv.array())).matrix();
        if (order >= 1) tr.envelope[1] = inv * ((iv.lo + iv.hi) - 2.0 * xv.array()).matrix();
        if (order >= 2) tr.envelope[2].setConstant(-2.0 * inv);
    }
    return tr;
}

Jet factors(const SubnetTrace& tr) {
    if (tr.envelope.empty()) {
        return tr.net;
    }
    Jet u(tr.order + 1);
    for (int m = 0; m <= tr.order; ++m) {
        u[m] = Eigen::MatrixXd::Zero(tr.net[0].rows(), tr.net[0].cols());
        for (int c = 0; c <= m; ++c) {
            const int k = m - c;
            if (k > 2) continue;
            u[m].array() += binomial(m, c) * (tr.net[c].array().colwise() * tr.envelope[k].array());
        }
    }
    return u;
}

SubnetAdjoint backward(const ParamLayout& layout, const double* theta, const SubnetTrace& tr,
                       const Jet& factor_bar, int order) {
    if (order < 0 || order > kMaxReverseOrder) {
        throw UnsupportedOrder("parameter derivatives of x-order " + std::to_string(order) +
                               " not supported (max " + std::to_string(kMaxReverseOrder) + ")");
    }
    if (order > tr.order || (!tr.f.empty() && static_cast<int>(tr.f[0].size()) < order + 2)) {
        throw InvalidArgument("forward trace too shallow for the requested reverse order");
    }
    const auto& layers = layout.layers();
    const std::size_t hidden = layers.size() - 1;

    SubnetAdjoint adj;
    adj.order = order;
    // Envelope: u^(m) = sum_c C(m,c) g^(m-c) net^(c)
    if (tr.envelope.empty()) {
        adj.net_bar.assign(factor_bar.begin(), factor_bar.begin() + order + 1);
    } else {
        adj.net_bar.resize(order + 1);
        for (int c = 0; c <= order; ++c) {
            adj.net_bar[c] = Eigen::MatrixXd::Zero(factor_bar[0].rows(), factor_bar[0].cols());
            for (int m = c; m <= order; ++m) {
                const int k = m - c;
                if (k > 2) continue;
                adj.net_bar[c].array() +=
                    binomial(m, c) * (factor_bar[m].array().colwise() * tr.envelope[k].array());
            }
        }
    }

    const auto& out = layers.back();
    const ConstWeights w_out(theta + out.weight_offset, out.rows, out.cols);
    Jet z_bar(order + 1);
    for (int c = 0; c <= order; ++c) {
        z_bar[c].noalias() = adj.net_bar[c] * w_out;
    }

    adj.a_bar.resize(hidden);
    for (std::size_t li = hidden; li-- > 0;) {
        const auto& f = tr.f[li];
        const Jet& a = tr.a[li];
        Jet ab(order + 1);
        ab[0] = (z_bar[0].array() * f[1]).matrix();
        if (order >= 1) {
            ab[0].array() += z_bar[1].array() * f[2] * a[1].array();
            ab[1] = (z_bar[1].array() * f[1]).matrix();
        }
        if (order >= 2) {
            const auto a1 = a[1].array();
            ab[0].array() += z_bar[2].array() * (f[3] * a1.square() + f[2] * a[2].array());
            ab[1].array() += 2.0 * z_bar[2].array() * f[2] * a1;
            ab[2] = (z_bar[2].array() * f[1]).matrix();
        }
        if (li > 0) {
            const auto& s = layers[li];
            const ConstWeights w(theta + s.weight_offset, s.rows, s.cols);
            for (int c = 0; c <= order; ++c) {
                z_bar[c].noalias() = ab[c] * w;
            }
        }
        adj.a_bar[li] = std::move(ab);
    }
    return adj;
}

void accumulate_gradient(const ParamLayout& layout, const SubnetTrace& tr, const SubnetAdjoint& adj,
                         double* grad) {
    using RowMajorMap = Eigen::Map<RowMajor>;
    const auto& layers = layout.layers();
    const std::size_t hidden = layers.size() - 1;
    for (std::size_t l = 0; l <= hidden; ++l) {
        const auto& s = layers[l];
        const Jet& bar = l < hidden ? adj.a_bar[l] : adj.net_bar;
        RowMajorMap gw(grad + s.weight_offset, s.rows, s.cols);
        for (int c = 0; c <= adj.order; ++c) {
            gw.noalias() += bar[c].transpose() * tr.z[l][c];
        }
        if (s.has_bias) {
            Eigen::Map<Eigen::VectorXd>(grad + s.bias_offset, s.rows) += bar[0].colwise().sum().transpose();
        }
    }
}

void per_node_gradient(const ParamLayout& layout, const SubnetTrace& tr, const SubnetAdjoint& adj,
                       std::span<const std::size_t> locals, Eigen::Ref<Eigen::MatrixXd> out) {
    const std::size_t hidden = layout.layers().size() - 1;
    for (std::size_t i = 0; i < locals.size(); ++i) {
        const Located loc = locate(layout, locals[i]);
        const Jet& bar = loc.layer < hidden ? adj.a_bar[loc.layer] : adj.net_bar;
        auto row = out.row(static_cast<Eigen::Index>(i));
        if (loc.col < 0) {
            row = bar[0].col(loc.row).transpose();
            continue;
        }
        row = (bar[0].col(loc.row).array() * tr.z[loc.layer][0].col(loc.col).array()).matrix().transpose();
        for (int c = 1; c <= adj.order; ++c) {
            row.array() += (bar[c].col(loc.row).array() * tr.z[loc.layer][c].col(loc.col).array()).transpose();
        }
    }
}

} // namespace tenevo::detail
