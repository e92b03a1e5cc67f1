#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "tenevo/quadrature.hpp"

namespace tenevo {

enum class Activation { tanh, sin };

enum class InputMapKind {
    identity,
    /// x -> a [cos(b x), sin(b x)]
    periodic,
    /// identity input, output multiplied by the boundary cutoff
    /// g(x) = 4 (x - lo)(hi - x) / (hi - lo)^2, i.e. 1 - x^2 on [-1, 1].
    dirichlet,
};

struct InputMap {
    InputMapKind kind{InputMapKind::identity};
    double a{1.0};
    double b{1.0};

    bool operator==(const InputMap&) const = default;
};

std::string to_string(Activation a);
std::string to_string(InputMapKind k);
Activation activation_from_string(const std::string& s);
InputMapKind input_map_from_string(const std::string& s);

/// Shape of a rank-p tensor network: d identical sub-networks, each mapping
/// one coordinate to p factor values.
struct TnnArchitecture {
    int dims{1};
    int rank{1};
    std::vector<int> hidden;
    Activation activation{Activation::tanh};
    InputMap input_map;
    std::vector<Interval> domain;

    int input_width() const { return input_map.kind == InputMapKind::periodic ? 2 : 1; }
    void validate() const;

    bool operator==(const TnnArchitecture&) const = default;
};

/// Offsets of one layer inside a sub-network's parameter block. Weights are
/// row-major (rows = outputs) and the bias, when present, follows them.
struct LayerSlice {
    int rows{0};
    int cols{0};
    std::size_t weight_offset{0};
    std::size_t bias_offset{0};
    bool has_bias{true};
};

/// Flattening order: dimension-major, then layer, then row-major inside a
/// matrix, biases after their matrix. The final linear layer has no bias.
class ParamLayout {
public:
    static constexpr int kOrderVersion = 1;

    explicit ParamLayout(const TnnArchitecture& arch);

    int dims() const { return dims_; }
    std::size_t per_subnet() const { return per_subnet_; }
    std::size_t total() const { return per_subnet_ * static_cast<std::size_t>(dims_); }
    std::size_t subnet_offset(int dim) const { return per_subnet_ * static_cast<std::size_t>(dim); }
    const std::vector<LayerSlice>& layers() const { return layers_; }

    /// Local (within sub-network) index classification.
    bool is_first_layer(std::size_t local) const;
    bool is_bias(std::size_t local) const;

private:
    int dims_;
    std::size_t per_subnet_{0};
    std::vector<LayerSlice> layers_;
};

struct TnnParams {
    TnnArchitecture arch;
    std::vector<double> theta;

    const double* subnet(int dim) const;
    double* subnet(int dim);
    bool operator==(const TnnParams&) const = default;
};

/// Selection of time-dependent parameters. `local[k]` lists the selected
/// local indices of sub-network k in increasing order.
struct ParamMask {
    std::vector<std::uint8_t> selected;
    std::vector<int> counts_per_dim;
    std::vector<std::vector<std::size_t>> local;

    std::size_t count() const;
    /// Position of dimension k's first entry inside the flattened selection.
    std::size_t dim_offset(int k) const;
    bool operator==(const ParamMask& o) const { return selected == o.selected; }

    static ParamMask from_selection(const TnnArchitecture& arch, std::vector<std::uint8_t> selected);
    static ParamMask full(const TnnArchitecture& arch);
};

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for every weight and bias.
TnnParams init_network(const TnnArchitecture& arch, std::uint64_t seed);

/// Sum over ranks of the product of sub-network outputs at x.
double eval_point(const TnnParams& params, std::span<const double> x, bool* out_of_domain = nullptr);

/// Factor values and x-derivatives at quadrature nodes.
/// values[i][m] is a (nodes x rank) matrix holding d^m u_{i,j} / dx^m.
struct FactorTable {
    int max_order{0};
    Rules rules;
    std::vector<std::vector<Eigen::MatrixXd>> values;

    int dims() const { return static_cast<int>(values.size()); }
    int rank() const { return values.empty() ? 0 : static_cast<int>(values[0][0].cols()); }
    double at(int i, int j, int q, int m) const { return values[i][m](q, j); }
    const Eigen::MatrixXd& order(int i, int m) const { return values[i][m]; }
};

inline constexpr int kMaxFactorOrder = 4;

FactorTable eval_factors(const TnnParams& params, const Rules& rules, int max_order);

/// Factors of one sub-network at arbitrary points, returned as in FactorTable.
std::vector<Eigen::MatrixXd> eval_subnet(const TnnParams& params, int dim, std::span<const double> x,
                                         int max_order);

std::vector<double> flatten(const TnnParams& params, const ParamMask& mask);
TnnParams unflatten_add(const TnnParams& params, const ParamMask& mask, std::span<const double> delta);

} // namespace tenevo
