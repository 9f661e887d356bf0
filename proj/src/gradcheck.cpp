#include "cnnbp/gradcheck.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>

#include "cnnbp/losses.hpp"

namespace cnn {

namespace {

constexpr double kRelativeFloor = 1e-8;

// Nonsmooth points of one forward pass: every ReLU input and every pooling
// window, in a fixed order.
struct KinkState {
    std::vector<double> relu_inputs;
    std::vector<double> pool_inputs; // window entries, window-major
    std::vector<std::size_t> winners;
    std::size_t window_size = 0;
};

bool is_relu(Activation a) { return a == Activation::ReLU || a == Activation::LeakyReLU; }

KinkState kink_state(const Network& net, const NetworkTrace& trace) {
    KinkState s;
    if (is_relu(Network::kConvActivation)) {
        const auto pre = trace.conv.preact.data();
        s.relu_inputs.assign(pre.begin(), pre.end());
    }
    for (std::size_t l = 0; l < net.dense().size(); ++l) {
        if (is_relu(net.dense()[l].activation)) {
            const auto pre = trace.dense[l].preact.data();
            s.relu_inputs.insert(s.relu_inputs.end(), pre.begin(), pre.end());
        }
    }

    const PoolTrace& pool = trace.pool;
    const std::size_t h2 = pool.output_shape[1];
    const std::size_t w2 = pool.output_shape[2];
    s.window_size = pool.window * pool.window;
    s.winners = pool.winners;
    s.pool_inputs.reserve(pool.winners.size() * s.window_size);
    for (std::size_t k = 0; k < pool.winners.size(); ++k) {
        const std::size_t c = k / (h2 * w2);
        const std::size_t i = (k / w2) % h2;
        const std::size_t j = k % w2;
        for (std::size_t a = 0; a < pool.window; ++a) {
            for (std::size_t b = 0; b < pool.window; ++b) {
                s.pool_inputs.push_back(
                    trace.conv_output.at(c, i * pool.stride + a, j * pool.stride + b));
            }
        }
    }
    return s;
}

double top_two_gap(const double* window, std::size_t n) {
    if (n < 2) {
        return std::numeric_limits<double>::infinity();
    }
    double first = -std::numeric_limits<double>::infinity();
    double second = first;
    for (std::size_t i = 0; i < n; ++i) {
        if (window[i] > first) {
            second = first;
            first = window[i];
        } else if (window[i] > second) {
            second = window[i];
        }
    }
    return first - second;
}

// True if the parameter lies within `margin` of a nonsmooth point, measured
// along the parameter: a unit whose input z moves at rate r = dz/dtheta is
// |z| / r away from its kink. Also true whenever the two perturbed states
// sit on different sides of a kink or pick different pool winners.
bool near_kink(const KinkState& base, const KinkState& up, const KinkState& down, double h,
               double margin) {
    for (std::size_t u = 0; u < base.relu_inputs.size(); ++u) {
        const double zp = up.relu_inputs[u];
        const double zm = down.relu_inputs[u];
        if (zp == zm) {
            continue;
        }
        const double rate = std::abs(zp - zm) / (2.0 * h);
        if ((zp >= 0.0) != (zm >= 0.0) || std::abs(base.relu_inputs[u]) < margin * rate) {
            return true;
        }
    }
    const std::size_t n = base.window_size;
    for (std::size_t k = 0; k < base.winners.size(); ++k) {
        const double* bw = base.pool_inputs.data() + k * n;
        const double* uw = up.pool_inputs.data() + k * n;
        const double* dw = down.pool_inputs.data() + k * n;
        if (std::equal(uw, uw + n, dw)) {
            continue;
        }
        if (up.winners[k] != down.winners[k]) {
            return true;
        }
        const double rate = std::abs(top_two_gap(uw, n) - top_two_gap(dw, n)) / (2.0 * h);
        if (top_two_gap(bw, n) < margin * rate) {
            return true;
        }
    }
    return false;
}

} // namespace

double relative_error(double analytic, double numeric) noexcept {
    const double denom = std::max({std::abs(analytic), std::abs(numeric), kRelativeFloor});
    return std::abs(analytic - numeric) / denom;
}

bool GradReport::pass() const noexcept {
    return std::all_of(groups.begin(), groups.end(), [](const GroupReport& g) { return g.pass; });
}

double GradReport::max_rel_err() const noexcept {
    double worst = 0.0;
    for (const GroupReport& g : groups) {
        worst = std::max(worst, g.max_rel_err);
    }
    return worst;
}

double GradReport::max_floor_rel_err() const noexcept {
    double worst = 0.0;
    for (const GroupReport& g : groups) {
        worst = std::max(worst, g.max_floor_rel_err);
    }
    return worst;
}

std::size_t GradReport::excluded() const noexcept {
    std::size_t n = 0;
    for (const GroupReport& g : groups) {
        n += g.excluded;
    }
    return n;
}

const GroupReport& GradReport::worst() const {
    if (groups.empty()) {
        throw DomainError("empty gradient report");
    }
    return *std::max_element(groups.begin(), groups.end(),
                             [](const GroupReport& a, const GroupReport& b) {
                                 return a.max_rel_err < b.max_rel_err;
                             });
}

GradReport check_network(const Network& net, const Tensor& image, const Tensor& label,
                         const CheckOptions& options) {
    if (!(options.h_rel > 0.0) || options.h_rel > 1e-3) {
        throw DomainError("h_rel must lie in (0, 1e-3]");
    }
    if (!(options.near_zero_cutoff >= 0.0) || !(options.near_zero_abs >= 0.0)) {
        throw DomainError("near-zero tolerances must be nonnegative");
    }
    if (!(options.threshold > 0.0)) {
        throw DomainError("gradient check threshold must be positive");
    }

    const ForwardResult base = forward(net, image);
    const double base_loss = loss(Loss::CrossEntropy, base.yhat, label);
    if (!std::isfinite(base_loss)) {
        throw DomainError("loss is not finite at the base point");
    }
    const GradientSet analytic = backward(net, base, label, options.fault);
    const KinkState base_kinks = kink_state(net, base.trace);

    Network work = net;
    auto params = work.parameters();
    const auto grads = analytic.groups();

    GradReport report;
    report.threshold = options.threshold;
    for (std::size_t g = 0; g < params.size(); ++g) {
        GroupReport group;
        group.name = params[g].name;
        double sum_rel = 0.0;
        std::size_t rel_checked = 0;

        for (std::size_t i = 0; i < params[g].values.size(); ++i) {
            double& theta = params[g].values[i];
            const double saved = theta;
            const double h = options.h_rel * std::max(1.0, std::abs(saved));

            KinkState up_kinks;
            KinkState down_kinks;
            const auto eval = [&](double value, KinkState& kinks) {
                theta = value;
                const ForwardResult fwd = forward(work, image);
                kinks = kink_state(work, fwd.trace);
                return loss(Loss::CrossEntropy, fwd.yhat, label);
            };
            const double up = eval(saved + h, up_kinks);
            const double down = eval(saved - h, down_kinks);
            theta = saved;

            if (!std::isfinite(up) || !std::isfinite(down)) {
                throw DomainError("loss is not finite while perturbing " + group.name);
            }
            if (near_kink(base_kinks, up_kinks, down_kinks, h, options.kink_margin)) {
                ++group.excluded;
                continue;
            }

            const double numeric = (up - down) / (2.0 * h);
            const double a = grads[g].values[i];
            const double abs_err = std::abs(a - numeric);
            ++group.checked;
            group.max_abs_err = std::max(group.max_abs_err, abs_err);
            group.max_floor_rel_err = std::max(group.max_floor_rel_err, relative_error(a, numeric));
            if (std::max(std::abs(a), std::abs(numeric)) < options.near_zero_cutoff) {
                ++group.near_zero;
                if (abs_err > options.near_zero_abs) {
                    group.pass = false;
                }
                continue;
            }
            const double rel = relative_error(a, numeric);
            ++rel_checked;
            sum_rel += rel;
            if (rel > group.max_rel_err) {
                group.max_rel_err = rel;
                group.argmax_index = i;
            }
        }
        group.mean_rel_err = rel_checked == 0 ? 0.0 : sum_rel / static_cast<double>(rel_checked);
        group.pass = group.pass && group.max_rel_err <= options.threshold;
        report.groups.push_back(std::move(group));
    }
    return report;
}

std::string format_table(const GradReport& report) {
    std::string out;
    char line[160];
    std::snprintf(line, sizeof line, "%-16s %8s %8s %9s %14s %14s %8s  %s\n", "group", "checked",
                  "excluded", "near_zero", "max_rel_err", "mean_rel_err", "argmax", "result");
    out += line;
    for (const GroupReport& g : report.groups) {
        std::snprintf(line, sizeof line, "%-16s %8zu %8zu %9zu %14.6e %14.6e %8zu  %s\n",
                      g.name.c_str(), g.checked, g.excluded, g.near_zero, g.max_rel_err, g.mean_rel_err, g.argmax_index,
                      g.pass ? "pass" : "FAIL");
        out += line;
    }
    std::snprintf(line, sizeof line, "threshold %.6e: %s\n", report.threshold,
                  report.pass() ? "pass" : "FAIL");
    out += line;
    return out;
}

std::string format_rows(const GradReport& report) {
    std::string out = "group,max_rel_err,mean_rel_err,n_excluded,pass\n";
    char line[160];
    for (const GroupReport& g : report.groups) {
        std::snprintf(line, sizeof line, "%s,%.6e,%.6e,%zu,%d\n", g.name.c_str(), g.max_rel_err,
                      g.mean_rel_err, g.excluded, g.pass ? 1 : 0);
        out += line;
    }
    return out;
}

} // namespace cnn
