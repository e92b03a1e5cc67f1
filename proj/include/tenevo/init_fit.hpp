#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "tenevo/separable_field.hpp"
#include "tenevo/tnn.hpp"

namespace tenevo {

/// L2 norms over the tensor domain, evaluated through per-dimension overlaps.
double l2_norm(const SeparableField& field, const Rules& rules);
double l2_norm(const TnnParams& params, const Rules& rules);

struct L2Error {
    double absolute{0.0};
    /// absent when the reference has zero norm
    std::optional<double> relative;
};

L2Error l2_error(const SeparableField& approx, const SeparableField& reference, const Rules& rules);
L2Error l2_error(const TnnParams& params, const SeparableField& reference, const Rules& rules);

struct FitConfig {
    int max_iterations{3000};
    double learning_rate{3e-3};
    double final_learning_rate{1e-6};
    /// stop once the absolute L2 error drops to this value
    double target{1e-7};
    std::uint64_t seed{0};
    /// per-dimension 1D fit before the joint fit when the target is a single
    /// product of identical factors
    bool prefit{true};
    int prefit_iterations{2000};
    /// Gauss-Newton iterations after the Adam phase (0 disables)
    int polish_iterations{500};
    double polish_rcond{1e-12};
    /// parameters per sub-network updated by each Gauss-Newton step, drawn
    /// at random; 0 updates all of them
    int polish_block{0};
    /// record the loss every this many iterations (0 disables the trace)
    int trace_every{100};

    void validate() const;
};

struct FitTracePoint {
    int iteration{0};
    double loss{0.0};
    double wall_ms{0.0};
};

struct FitResult {
    TnnParams params;
    /// absolute L2 error of the returned parameters
    double loss{0.0};
    bool converged{false};
    int iterations{0};
    std::vector<FitTracePoint> trace;
};

/// Squared L2 distance between the network and u0.
double fit_loss(const TnnParams& params, const SeparableField& u0, const Rules& rules);
/// Gradient of fit_loss with respect to every parameter, in flattening order.
std::vector<double> fit_gradient(const TnnParams& params, const SeparableField& u0, const Rules& rules,
                                 double* loss = nullptr);

/// Adam with a cosine-decayed learning rate on the squared L2 loss over all
/// parameters, then Gauss-Newton steps with backtracking. Returns the best
/// parameters seen.
FitResult fit_initial(const TnnParams& params, const SeparableField& u0, const Rules& rules, const FitConfig& cfg);

} // namespace tenevo
