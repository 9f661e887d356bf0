// Acceptance suite: one line per criterion, nonzero exit if any fails.
//
//   acceptance            run everything
//   acceptance 1 4 7      run a subset
//
// The MNIST run looks for the four standard IDX files in $CNNBP_MNIST_DIR,
// falling back to data/mnist in the source tree, and is skipped if they are
// missing.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "cli.hpp"
#include "cnnbp/dataio.hpp"
#include "cnnbp/errors.hpp"
#include "cnnbp/gradcheck.hpp"
#include "cnnbp/layers.hpp"
#include "cnnbp/losses.hpp"
#include "cnnbp/network.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace cnn;

namespace {

enum class Status { Pass, Fail, Skip };

struct Outcome {
    Status status = Status::Pass;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

// 8x8 grayscale, 2 kernels 3x3 stride 1 pad 0, pool 2/2, dense 18 -> 8 -> 2.
Architecture fixture_arch() {
    Architecture a;
    a.conv = {8, 8, 1, 3, 3, 2, 1, 0};
    a.pool = {2, 2};
    a.dense_widths = {8, 2};
    return a;
}

struct Sample {
    Tensor image;
    Tensor label;
};

Sample fixture_sample(std::uint64_t seed) {
    std::mt19937_64 gen(seed ^ 0x5eed);
    Tensor image = oracle::random_tensor(gen, {1, 8, 8}, 0.0, 1.0);
    return {std::move(image), one_hot(gen() % 2, 2)};
}

Outcome gradient_oracle() {
    double worst = 0.0, worst_floor = 0.0;
    std::size_t excluded = 0, near_zero = 0, checked = 0, failed = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Network net = init(fixture_arch(), seed);
        const Sample s = fixture_sample(seed);
        const GradReport r = check_network(net, s.image, s.label);
        worst = std::max(worst, r.max_rel_err());
        worst_floor = std::max(worst_floor, r.max_floor_rel_err());
        excluded += r.excluded();
        for (const GroupReport& g : r.groups) {
            checked += g.checked;
            near_zero += g.near_zero;
        }
        failed += r.pass() ? 0 : 1;
    }
    // The bound applies to every checked entry under the floored metric; the
    // checker's own near-zero rule is not relied on here.
    const bool ok = failed == 0 && worst_floor <= 1e-6;
    return {ok ? Status::Pass : Status::Fail,
            fmt("20 seeds, max_rel_err=%.3e over all checked entries (<= 1e-6; %.3e excluding "
                "the %zu near-zero), checked=%zu excluded=%zu failing_seeds=%zu",
                worst_floor, worst, near_zero, checked, excluded, failed)};
}

Outcome layer_oracles() {
    std::mt19937_64 gen(2024);
    std::size_t conv_mismatch = 0, pool_mismatch = 0;
    double rot_worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t c = 1 + gen() % 3, k = 1 + gen() % 3, kh = 1 + gen() % 4, kw = 1 + gen() % 4;
        const std::size_t pad = gen() % 3, stride = 1 + gen() % 2;
        std::size_t h = kh + 2 + gen() % 6, w = kw + 2 + gen() % 6;
        // Round the extents so the stride lands exactly on the padded edge.
        h += (h + 2 * pad - kh) % stride == 0 ? 0 : stride - (h + 2 * pad - kh) % stride;
        w += (w + 2 * pad - kw) % stride == 0 ? 0 : stride - (w + 2 * pad - kw) % stride;

        const ConvGeometry g{h, w, c, kh, kw, k, stride, pad};
        const Tensor image = oracle::random_tensor(gen, {c, h, w});
        const Tensor wts = oracle::random_tensor(gen, {k * c * kh * kw});
        const Tensor bias = oracle::random_tensor(gen, {k});
        const KernelBank bank(g, {wts.data().begin(), wts.data().end()},
                              {bias.data().begin(), bias.data().end()});
        const ConvForward got = conv_forward(image, bank, Activation::ReLU);
        const Tensor want = oracle::conv_preact(image, {wts.data().begin(), wts.data().end()},
                                                {bias.data().begin(), bias.data().end()}, kh, kw,
                                                stride, pad);
        if (!(got.trace.preact == want)) {
            ++conv_mismatch;
        }

        // Pool with ties: quantized values make equal maxima common.
        const std::size_t pk = 1 + gen() % 3, ps = 1 + gen() % 2;
        const std::size_t ph = pk + ps * (gen() % 4), pw = pk + ps * (gen() % 4);
        Tensor pin = oracle::random_tensor(gen, {c, ph, pw});
        for (std::size_t i = 0; i < pin.size(); ++i) {
            pin[i] = std::round(pin[i] * 3.0);
        }
        const PoolForward pooled = maxpool_forward(pin, {pk, ps});
        const oracle::PoolResult brute = oracle::maxpool(pin, pk, ps);
        if (!(pooled.output == brute.pooled) || pooled.trace.winners != brute.winners) {
            ++pool_mismatch;
        }

        // Kernel gradient, rot180 route vs cross-correlation route (stride 1).
        const ConvGeometry g1{h, w, c, kh, kw, k, 1, pad};
        const KernelBank bank1(g1, {wts.data().begin(), wts.data().end()},
                               {bias.data().begin(), bias.data().end()});
        const Dims3 od = conv_output_dims(g1);
        const Tensor grad = oracle::random_tensor(gen, {k, od.height, od.width});
        const ConvGradients direct = conv_backward(grad, image, bank1);
        const std::vector<double> rotated = conv_kernel_grad_rot180(grad, image, bank1);
        for (std::size_t i = 0; i < rotated.size(); ++i) {
            rot_worst = std::max(rot_worst, std::abs(rotated[i] - direct.weights[i]));
        }
    }
    const bool ok = conv_mismatch == 0 && pool_mismatch == 0 && rot_worst <= 1e-12;
    return {ok ? Status::Pass : Status::Fail,
            fmt("20 instances, conv mismatches=%zu, pool mismatches=%zu, rot180 max diff=%.3e "
                "(<= 1e-12)",
                conv_mismatch, pool_mismatch, rot_worst)};
}

Outcome dimension_formulas() {
    std::mt19937_64 gen(7);
    std::size_t valid = 0, invalid = 0, wrong = 0, accepted_invalid = 0, rejected_valid = 0;
    while (valid < 1000) {
        const std::size_t h = 1 + gen() % 40, w = 1 + gen() % 40;
        const std::size_t pad = gen() % 4, stride = 1 + gen() % 5;
        const std::size_t kh = 1 + gen() % (h + 2 * pad), kw = 1 + gen() % (w + 2 * pad);
        const std::size_t want_h = oracle::slide_count(h, kh, stride, pad);
        const std::size_t want_w = oracle::slide_count(w, kw, stride, pad);
        const ConvGeometry g{h, w, 1, kh, kw, 1, stride, pad};
        const bool should_accept = want_h != 0 && want_w != 0;
        try {
            const Dims3 d = conv_output_dims(g);
            if (!should_accept) {
                ++accepted_invalid;
                ++invalid;
                continue;
            }
            ++valid;
            if (d.height != want_h || d.width != want_w || d.depth != 1) {
                ++wrong;
            }
        } catch (const GeometryError&) {
            if (should_accept) {
                ++rejected_valid;
                ++valid;
            } else {
                ++invalid;
            }
        }

        // Same law for the pool, which has no padding.
        if (kh <= h && kh <= w) {
            const std::size_t ph = oracle::slide_count(h, kh, stride, 0);
            const std::size_t pw = oracle::slide_count(w, kh, stride, 0);
            try {
                const Dims3 pd = pool_output_dims(h, w, 3, {kh, stride});
                if (ph == 0 || pw == 0) {
                    ++accepted_invalid;
                } else if (pd.height != ph || pd.width != pw || pd.depth != 3) {
                    ++wrong;
                }
            } catch (const GeometryError&) {
                rejected_valid += ph != 0 && pw != 0;
            }
        }
    }
    const bool ok = wrong == 0 && accepted_invalid == 0 && rejected_valid == 0;
    return {ok ? Status::Pass : Status::Fail,
            fmt("%zu valid configurations, %zu wrong extents, %zu valid rejected; %zu invalid seen, "
                "%zu accepted",
                valid, wrong, rejected_valid, invalid, accepted_invalid)};
}

Architecture bars_arch() {
    Architecture a;
    a.conv = {8, 8, 1, 3, 3, 8, 1, 0};
    a.pool = {2, 2};
    a.dense_widths = {16, 2};
    return a;
}

Outcome bars_convergence() {
    const Dataset train_set = synth_bars(200, 8, 8, 42);
    const Dataset held_out = synth_bars(100, 8, 8, 43);
    const Network net = init(bars_arch(), 42);
    const double initial = evaluate(net, train_set).mean_loss;
    const TrainResult r = train(net, train_set, {0.05, 200, 200, 42});

    bool decreasing = r.history.front().mean_loss < initial;
    for (std::size_t e = 1; e < 10; ++e) {
        decreasing = decreasing && r.history[e].mean_loss < r.history[e - 1].mean_loss;
    }
    const Metrics held = evaluate(r.net, held_out);
    const bool ok = decreasing && held.accuracy >= 0.95;
    return {ok ? Status::Pass : Status::Fail,
            fmt("loss %.6f -> %.6f over epochs 1..10 (%s), final train loss=%.6f, held-out "
                "accuracy=%.3f (>= 0.95)",
                r.history.front().mean_loss, r.history[9].mean_loss,
                decreasing ? "strictly decreasing" : "NOT strictly decreasing",
                r.history.back().mean_loss, held.accuracy)};
}

fs::path mnist_dir() {
    if (const char* env = std::getenv("CNNBP_MNIST_DIR"); env != nullptr && *env != '\0') {
        return env;
    }
    return fs::path(CNNBP_SOURCE_DIR) / "data" / "mnist";
}

Outcome mnist_convergence() {
    const fs::path dir = mnist_dir();
    const char* names[] = {"train-images-idx3-ubyte", "train-labels-idx1-ubyte",
                           "t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"};
    for (const char* n : names) {
        if (!fs::exists(dir / n)) {
            return {Status::Skip, "IDX files not found in " + dir.string()};
        }
    }
    const Dataset train_set = load_idx_dataset(dir / names[0], dir / names[1], 10, 1000);
    const Dataset test_set = load_idx_dataset(dir / names[2], dir / names[3], 10, 200);

    Architecture a;
    a.conv = {28, 28, 1, 5, 5, 8, 1, 0};
    a.pool = {2, 2};
    a.dense_widths = {64, 10};
    const TrainResult r = train(init(a, 7), train_set, {0.1, 20, 1, 7});
    const Metrics m = evaluate(r.net, test_set);
    return {m.accuracy >= 0.85 ? Status::Pass : Status::Fail,
            fmt("%zu train / %zu test, 20 epochs, test loss=%.4f accuracy=%.3f (>= 0.85)",
                train_set.size(), test_set.size(), m.mean_loss, m.accuracy)};
}

Outcome loss_suite() {
    const Loss kinds[] = {Loss::MSE, Loss::MSLE, Loss::L2, Loss::L1, Loss::MAE, Loss::MAPE,
                          Loss::CrossEntropy};
    std::mt19937_64 gen(99);
    std::size_t negative = 0, nonzero_at_eq = 0, product_mismatch = 0, quotient_mismatch = 0;
    std::size_t mape_missed = 0;
    double ce_worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t t = 1 + gen() % 16;
        const double td = static_cast<double>(t);
        // Values valid for every loss: (0, 1) works for MSLE, MAPE and cross-entropy.
        const Tensor p = oracle::random_tensor(gen, {t}, 0.01, 0.99);
        const Tensor y = oracle::random_tensor(gen, {t}, 0.01, 0.99);
        Tensor bits = Tensor::make({t});
        for (std::size_t i = 0; i < t; ++i) {
            bits[i] = static_cast<double>(gen() % 2);
        }
        for (Loss kind : kinds) {
            const Tensor& target = kind == Loss::CrossEntropy ? bits : y;
            negative += loss(kind, p, target) < 0.0;
            // Cross-entropy keeps the clamp residue -log(1 - eps) per component.
            const double allowed =
                kind == Loss::CrossEntropy ? td * std::abs(std::log1p(-kProbabilityEpsilon)) : 0.0;
            nonzero_at_eq += loss(kind, target, target) > allowed;
        }

        const Tensor a = oracle::random_tensor(gen, {t}, -3.0, 3.0);
        const Tensor b = oracle::random_tensor(gen, {t}, -3.0, 3.0);
        const double l2 = loss(Loss::L2, a, b), mse = loss(Loss::MSE, a, b);
        const double l1 = loss(Loss::L1, a, b), mae = loss(Loss::MAE, a, b);
        product_mismatch += (l2 != td * mse) + (l1 != td * mae);
        quotient_mismatch += (mse != l2 / td) + (mae != l1 / td);

        Tensor zero_label = oracle::random_tensor(gen, {t}, 0.5, 2.0);
        zero_label[gen() % t] = 0.0;
        try {
            (void)loss(Loss::MAPE, p, zero_label);
            ++mape_missed;
        } catch (const DomainError&) {
        }

        const Tensor g = ce_grad(p, bits);
        for (std::size_t i = 0; i < t; ++i) {
            Tensor q = p;
            const double h = 1e-6;
            const double numeric = oracle::central(
                [&](double v) {
                    q[i] = v;
                    return loss(Loss::CrossEntropy, q, bits);
                },
                p[i], h);
            ce_worst = std::max(ce_worst, oracle::rel_err(g[i], numeric));
        }
    }
    const bool ok = negative == 0 && nonzero_at_eq == 0 && product_mismatch == 0 &&
                    mape_missed == 0 && ce_worst <= 1e-7;
    return {ok ? Status::Pass : Status::Fail,
            fmt("100 inputs x 7 losses: negative=%zu nonzero_at_equality=%zu; MAPE zero labels "
                "accepted=%zu; ce_grad max_rel_err=%.3e (<= 1e-7); L2 == t*MSE, L1 == t*MAE fail in "
                "%zu of 200 comparisons (MSE == L2/t, MAE == L1/t fail in %zu)",
                negative, nonzero_at_eq, mape_missed, ce_worst, product_mismatch,
                quotient_mismatch)};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome determinism() {
    const fs::path root = fs::temp_directory_path() / ("cnnbp_acceptance_" + std::to_string(::getpid()));
    fs::remove_all(root);
    std::vector<std::string> csvs, models;
    for (const char* run : {"a", "b"}) {
        const fs::path dir = root / run;
        fs::create_directories(dir);
        const fs::path cfg = dir / "bars.cfg";
        std::ofstream(cfg) << "conv.kernels = 8\nconv.size = 3\nconv.stride = 1\nconv.pad = 0\n"
                              "pool.window = 2\npool.stride = 2\ndense.widths = 16,2\n"
                              "train.alpha = 0.05\ntrain.epochs = 20\ntrain.batch_size = 16\n"
                              "train.seed = 42\ndata.source = bars:200,8,8\n"
                           << "out.model = " << (dir / "m.model").string() << "\n"
                           << "out.csv = " << (dir / "m.csv").string() << "\n";
        const std::string cfg_path = cfg.string();
        const char* argv[] = {"cnnbp", "train", cfg_path.c_str()};
        std::ostringstream out, err;
        if (cli::run(3, argv, out, err) != 0) {
            fs::remove_all(root);
            return {Status::Fail, "train run failed: " + err.str()};
        }
        csvs.push_back(slurp(dir / "m.csv"));
        models.push_back(slurp(dir / "m.model"));
    }

    const Dataset data = synth_bars(200, 8, 8, 42);
    const Network first = load_file(root / "a" / "m.model");
    const Metrics before = evaluate(first, data);
    save_file(first, root / "again.model");
    const Network second = load_file(root / "again.model");
    const Metrics after = evaluate(second, data);
    const bool resaved_identical = slurp(root / "again.model") == models[0];
    fs::remove_all(root);

    const bool ok = csvs[0] == csvs[1] && models[0] == models[1] && !csvs[0].empty() &&
                    first == second && resaved_identical && before == after;
    return {ok ? Status::Pass : Status::Fail,
            fmt("csv identical=%s (%zu bytes), model identical=%s (%zu bytes), reload "
                "loss=%.17g acc=%.17g %s",
                csvs[0] == csvs[1] ? "yes" : "no", csvs[0].size(),
                models[0] == models[1] ? "yes" : "no", models[0].size(), after.mean_loss,
                after.accuracy, before == after ? "bit-identical" : "DIFFERS")};
}

Outcome mutation_sensitivity() {
    const std::pair<SeededFault, const char*> faults[] = {
        {SeededFault::DropActivationDerivative, "dropped derivative"},
        {SeededFault::TransposedPropagation, "transposed propagation"},
        {SeededFault::UnroutedPool, "unrouted pool"},
    };
    std::string detail;
    bool ok = true;
    for (const auto& [fault, label] : faults) {
        std::size_t caught = 0;
        double weakest = std::numeric_limits<double>::infinity();
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            const Network net = init(fixture_arch(), seed);
            const Sample s = fixture_sample(seed);
            CheckOptions opt;
            opt.threshold = 1e-6;
            opt.fault = fault;
            const GradReport r = check_network(net, s.image, s.label, opt);
            caught += r.pass() ? 0 : 1;
            weakest = std::min(weakest, r.max_rel_err());
        }
        ok = ok && caught == 20;
        detail += fmt("%s caught %zu/20 (min max_rel_err %.2e); ", label, caught, weakest);
    }
    detail.resize(detail.size() - 2);
    return {ok ? Status::Pass : Status::Fail, detail};
}

struct Criterion {
    int id;
    const char* title;
    double budget_seconds; // 0: none
    std::function<Outcome()> run;
};

} // namespace

int main(int argc, char** argv) {
    const std::vector<Criterion> all = {
        {1, "whole-network gradient oracle", 30.0, gradient_oracle},
        {2, "layer-level oracles", 0.0, layer_oracles},
        {3, "dimension formulas", 0.0, dimension_formulas},
        {4, "convergence, synthetic bars", 60.0, bars_convergence},
        {5, "convergence, MNIST subset", 300.0, mnist_convergence},
        {6, "loss suite", 0.0, loss_suite},
        {7, "determinism and persistence", 0.0, determinism},
        {8, "mutation sensitivity", 0.0, mutation_sensitivity},
    };
    std::set<int> wanted;
    for (int i = 1; i < argc; ++i) {
        wanted.insert(std::atoi(argv[i]));
    }

    int failures = 0;
    for (const Criterion& c : all) {
        if (!wanted.empty() && wanted.count(c.id) == 0) {
            continue;
        }
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {Status::Fail, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (o.status != Status::Skip && c.budget_seconds > 0.0 && secs > c.budget_seconds) {
            o.status = Status::Fail;
            o.detail += fmt("; over the %.0f s budget", c.budget_seconds);
        }
        const char* tag = o.status == Status::Pass ? "PASS" : o.status == Status::Fail ? "FAIL" : "SKIP";
        std::printf("[%s] %d %s: %s (%.2f s)\n", tag, c.id, c.title, o.detail.c_str(), secs);
        std::fflush(stdout);
        failures += o.status == Status::Fail ? 1 : 0;
    }
    std::printf("%d criterion(s) failed\n", failures);
    return failures == 0 ? 0 : 1;
}
