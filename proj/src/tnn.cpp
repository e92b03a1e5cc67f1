#include "tenevo/tnn.hpp"

#include <cmath>
#include <random>
#include <string>

#include "subnet.hpp"
#include "tenevo/errors.hpp"
#include "tenevo/parallel.hpp"

namespace tenevo {

std::string to_string(Activation a) { return a == Activation::tanh ? "tanh" : "sin"; }

std::string to_string(InputMapKind k) {
    switch (k) {
    case InputMapKind::identity: return "identity";
    case InputMapKind::periodic: return "periodic";
    case InputMapKind::dirichlet: return "dirichlet";
    }
    return "identity";
}

Activation activation_from_string(const std::string& s) {
    if (s == "tanh") return Activation::tanh;
    if (s == "sin") return Activation::sin;
    throw InvalidArgument("unknown activation '" + s + "'");
}

InputMapKind input_map_from_string(const std::string& s) {
    if (s == "identity") return InputMapKind::identity;
    if (s == "periodic") return InputMapKind::periodic;
    if (s == "dirichlet") return InputMapKind::dirichlet;
    throw InvalidArgument("unknown input map '" + s + "'");
}

void TnnArchitecture::validate() const {
    if (dims < 1) throw InvalidArgument("architecture: dims must be >= 1");
    if (rank < 1) throw InvalidArgument("architecture: rank must be >= 1");
    if (hidden.empty()) throw InvalidArgument("architecture: at least one hidden layer required");
    for (int w : hidden) {
        if (w < 1) throw InvalidArgument("architecture: layer widths must be >= 1");
    }
    if (domain.size() != static_cast<std::size_t>(dims)) {
        throw InvalidArgument("architecture: domain needs one interval per dimension");
    }
    for (const auto& iv : domain) {
        if (!(iv.lo < iv.hi)) throw InvalidArgument("architecture: domain interval requires lo < hi");
    }
    if (input_map.kind == InputMapKind::periodic && input_map.b == 0.0) {
        throw InvalidArgument("architecture: periodic embedding frequency must be nonzero");
    }
}

ParamLayout::ParamLayout(const TnnArchitecture& arch) : dims_(arch.dims) {
    std::size_t offset = 0;
    int in = arch.input_width();
    for (int w : arch.hidden) {
        LayerSlice s{w, in, offset, offset + static_cast<std::size_t>(w) * in, true};
        offset = s.bias_offset + static_cast<std::size_t>(w);
        layers_.push_back(s);
        in = w;
    }
    LayerSlice out{arch.rank, in, offset, 0, false};
    offset += static_cast<std::size_t>(arch.rank) * in;
    layers_.push_back(out);
    per_subnet_ = offset;
}

bool ParamLayout::is_first_layer(std::size_t local) const {
    const auto& s = layers_.front();
    if (layers_.size() == 1) {
        return local < static_cast<std::size_t>(s.rows) * s.cols;
    }
    return local < s.bias_offset + static_cast<std::size_t>(s.rows);
}

bool ParamLayout::is_bias(std::size_t local) const {
    for (const auto& s : layers_) {
        if (s.has_bias && local >= s.bias_offset && local < s.bias_offset + static_cast<std::size_t>(s.rows)) {
            return true;
        }
    }
    return false;
}

const double* TnnParams::subnet(int dim) const {
    return theta.data() + ParamLayout(arch).subnet_offset(dim);
}

double* TnnParams::subnet(int dim) { return theta.data() + ParamLayout(arch).subnet_offset(dim); }

std::size_t ParamMask::count() const {
    std::size_t n = 0;
    for (int c : counts_per_dim) n += static_cast<std::size_t>(c);
    return n;
}

std::size_t ParamMask::dim_offset(int k) const {
    std::size_t n = 0;
    for (int i = 0; i < k; ++i) n += static_cast<std::size_t>(counts_per_dim[static_cast<std::size_t>(i)]);
    return n;
}

ParamMask ParamMask::from_selection(const TnnArchitecture& arch, std::vector<std::uint8_t> selected) {
    const ParamLayout layout(arch);
    if (selected.size() != layout.total()) {
        throw InvalidArgument("mask length " + std::to_string(selected.size()) + " does not match parameter count " +
                              std::to_string(layout.total()));
    }
    ParamMask mask;
    mask.selected = std::move(selected);
    mask.counts_per_dim.assign(static_cast<std::size_t>(arch.dims), 0);
    mask.local.assign(static_cast<std::size_t>(arch.dims), {});
    for (int k = 0; k < arch.dims; ++k) {
        const std::size_t off = layout.subnet_offset(k);
        for (std::size_t i = 0; i < layout.per_subnet(); ++i) {
            if (mask.selected[off + i]) {
                mask.local[static_cast<std::size_t>(k)].push_back(i);
            }
        }
        mask.counts_per_dim[static_cast<std::size_t>(k)] =
            static_cast<int>(mask.local[static_cast<std::size_t>(k)].size());
    }
    if (mask.count() == 0) {
        throw InvalidArgument("mask selects no parameters");
    }
    return mask;
}

ParamMask ParamMask::full(const TnnArchitecture& arch) {
    return from_selection(arch, std::vector<std::uint8_t>(ParamLayout(arch).total(), 1));
}

TnnParams init_network(const TnnArchitecture& arch, std::uint64_t seed) {
    arch.validate();
    const ParamLayout layout(arch);
    TnnParams params{arch, std::vector<double>(layout.total(), 0.0)};
    std::mt19937_64 rng(seed);
    for (int k = 0; k < arch.dims; ++k) {
        double* base = params.theta.data() + layout.subnet_offset(k);
        for (const auto& s : layout.layers()) {
            const double bound = 1.0 / std::sqrt(static_cast<double>(s.cols));
            std::uniform_real_distribution<double> dist(-bound, bound);
            for (std::size_t i = 0; i < static_cast<std::size_t>(s.rows) * s.cols; ++i) {
                base[s.weight_offset + i] = dist(rng);
            }
            if (s.has_bias) {
                for (int i = 0; i < s.rows; ++i) {
                    base[s.bias_offset + static_cast<std::size_t>(i)] = dist(rng);
                }
            }
        }
    }
    return params;
}

double eval_point(const TnnParams& params, std::span<const double> x, bool* out_of_domain) {
    const auto& arch = params.arch;
    if (x.size() != static_cast<std::size_t>(arch.dims)) {
        throw InvalidArgument("eval_point: point has wrong dimension");
    }
    const ParamLayout layout(arch);
    bool outside = false;
    Eigen::VectorXd prod = Eigen::VectorXd::Ones(arch.rank);
    for (int k = 0; k < arch.dims; ++k) {
        const double xk = x[static_cast<std::size_t>(k)];
        const Interval iv = arch.domain[static_cast<std::size_t>(k)];
        outside = outside || xk < iv.lo || xk > iv.hi;
        const auto tr = detail::forward(arch, layout, params.theta.data() + layout.subnet_offset(k),
                                        std::span<const double>(&xk, 1), k, 0);
        prod.array() *= detail::factors(tr)[0].row(0).transpose().array();
    }
    if (out_of_domain) *out_of_domain = outside;
    return prod.sum();
}

std::vector<Eigen::MatrixXd> eval_subnet(const TnnParams& params, int dim, std::span<const double> x,
                                         int max_order) {
    const ParamLayout layout(params.arch);
    const auto tr = detail::forward(params.arch, layout, params.theta.data() + layout.subnet_offset(dim), x, dim,
                                    max_order);
    return detail::factors(tr);
}

FactorTable eval_factors(const TnnParams& params, const Rules& rules, int max_order) {
    if (max_order < 0 || max_order > kMaxFactorOrder) {
        throw UnsupportedOrder("eval_factors: order " + std::to_string(max_order) + " exceeds supported maximum " +
                               std::to_string(kMaxFactorOrder));
    }
    if (rules.size() != static_cast<std::size_t>(params.arch.dims)) {
        throw InvalidArgument("eval_factors: one rule per dimension required");
    }
    FactorTable table;
    table.max_order = max_order;
    table.rules = rules;
    table.values.resize(rules.size());
    parallel_for(rules.size(), [&](std::size_t k) {
        table.values[k] = eval_subnet(params, static_cast<int>(k), rules[k].nodes, max_order);
    });
    return table;
}

std::vector<double> flatten(const TnnParams& params, const ParamMask& mask) {
    if (mask.selected.size() != params.theta.size()) {
        throw InvalidArgument("flatten: mask does not match parameters");
    }
    std::vector<double> out;
    out.reserve(mask.count());
    for (std::size_t i = 0; i < params.theta.size(); ++i) {
        if (mask.selected[i]) out.push_back(params.theta[i]);
    }
    return out;
}

TnnParams unflatten_add(const TnnParams& params, const ParamMask& mask, std::span<const double> delta) {
    if (mask.selected.size() != params.theta.size()) {
        throw InvalidArgument("unflatten_add: mask does not match parameters");
    }
    if (delta.size() != mask.count()) {
        throw InvalidArgument("unflatten_add: delta has " + std::to_string(delta.size()) + " entries, mask selects " +
                              std::to_string(mask.count()));
    }
    TnnParams out = params;
    std::size_t j = 0;
    for (std::size_t i = 0; i < out.theta.size(); ++i) {
        if (mask.selected[i]) {
            const double v = delta[j++];
            if (v != 0.0) out.theta[i] += v;
        }
    }
    return out;
}

} // namespace tenevo
