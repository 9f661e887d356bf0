#ifndef CNNBP_GRADCHECK_HPP
#define CNNBP_GRADCHECK_HPP

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "cnnbp/errors.hpp"
#include "cnnbp/network.hpp"

namespace cnn {

/// (f(x + h) - f(x - h)) / 2h. Throws DomainError if h <= 0 or either
/// evaluation is not finite.
template <typename F>
double central_diff(F&& f, double x, double h) {
    if (!(h > 0.0) || !std::isfinite(h)) {
        throw DomainError("central_diff needs a positive finite step");
    }
    const double up = f(x + h);
    const double down = f(x - h);
    if (!std::isfinite(up) || !std::isfinite(down)) {
        throw DomainError("central_diff: function is not finite around x = " + std::to_string(x));
    }
    return (up - down) / (2.0 * h);
}

/// |a - n| / max(|a|, |n|, 1e-8).
double relative_error(double analytic, double numeric) noexcept;

struct GroupReport {
    std::string name;
    std::size_t checked = 0;
    std::size_t excluded = 0;
    double max_rel_err = 0.0;
    double mean_rel_err = 0.0;
    double max_abs_err = 0.0;
    /// relative_error() over every checked entry, near-zero ones included.
    double max_floor_rel_err = 0.0;
    /// Parameters judged by the absolute rule because both gradients are tiny.
    std::size_t near_zero = 0;
    std::size_t argmax_index = 0; // within the group, of the worst relative error
    bool pass = true;
};

struct GradReport {
    double threshold = 0.0;
    std::vector<GroupReport> groups;

    bool pass() const noexcept;
    double max_rel_err() const noexcept;
    double max_floor_rel_err() const noexcept;
    std::size_t excluded() const noexcept;
    /// Group holding the overall worst relative error.
    const GroupReport& worst() const;
};

struct CheckOptions {
    double threshold = 1e-6;
    /// Step is h_rel * max(1, |theta|); must lie in (0, 1e-3]. The rounding
    /// error of the difference quotient is ~1e-15 / h absolute, which at
    /// h = 1e-6 is already 1e-6 relative on a gradient of 1e-3 magnitude;
    /// 1e-4 balances it against the O(h^2) truncation term.
    double h_rel = 1e-4;
    /// When |analytic| and |numeric| are both below near_zero_cutoff the
    /// relative metric is meaningless; such entries pass if the absolute
    /// error is at most near_zero_abs.
    double near_zero_cutoff = 1e-8;
    double near_zero_abs = 1e-9;
    /// Parameters within this distance (in parameter units) of a ReLU kink
    /// or a pooling tie are excluded from the comparison and counted. The
    /// distance to a kink is |z| / |dz/dtheta|, with the rate taken from the
    /// two perturbed states; a sign change or winner change between those
    /// states always excludes.
    double kink_margin = 1e-4;
    SeededFault fault = SeededFault::None;
};

/// Compares backward() against central differences of the per-sample
/// cross-entropy loss for every parameter. `net` is not modified.
GradReport check_network(const Network& net, const Tensor& image, const Tensor& label,
                         const CheckOptions& options = {});

/// Aligned, human-readable table.
std::string format_table(const GradReport& report);

/// Machine-readable rows: group,max_rel_err,mean_rel_err,n_excluded,pass
std::string format_rows(const GradReport& report);

} // namespace cnn

#endif // CNNBP_GRADCHECK_HPP
