#include "cli.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cnnbp/activations.hpp"
#include "cnnbp/dataio.hpp"
#include "cnnbp/gradcheck.hpp"
#include "cnnbp/network.hpp"
#include "config.hpp"

namespace cnn::cli {

namespace {

// Carries the exit status for a failure up to run().
class Failure : public std::runtime_error {
public:
    Failure(int code, const std::string& what) : std::runtime_error(what), code_(code) {}
    int code() const noexcept { return code_; }

private:
    int code_;
};

// Runs f, turning any library error into a Failure with the given status.
template <typename F>
auto stage(int code, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const Failure&) {
        throw;
    } catch (const std::exception& e) {
        throw Failure(code, e.what());
    }
}

std::string fixed6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

std::string extent_string(const Shape& s) {
    return std::to_string(s[s.size() - 2]) + "x" + std::to_string(s.back());
}

struct DataSource {
    enum class Kind { Idx, Bars } kind = Kind::Bars;
    std::string images;
    std::string labels;
    std::size_t n = 0;
    std::size_t h = 0;
    std::size_t w = 0;
    std::uint64_t seed = 0;
};

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto at = s.find(sep, start);
        out.push_back(s.substr(start, at - start));
        if (at == std::string::npos) {
            return out;
        }
        start = at + 1;
    }
}

std::size_t parse_count(const std::string& text) {
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) {
        throw ConfigError("config key 'data.source': '" + text + "' is not a count");
    }
    return v;
}

// `idx:<images>,<labels>` or `bars:<n>,<h>,<w>[,<seed>]`; bars default to
// train.seed when no seed is given.
DataSource data_source(const Config& cfg) {
    const std::string& spec = cfg.text("data.source");
    DataSource src;
    if (spec.rfind("idx:", 0) == 0) {
        const auto parts = split(spec.substr(4), ',');
        if (parts.size() != 2 || parts[0].empty() || parts[1].empty()) {
            throw ConfigError("config key 'data.source': expected idx:<images>,<labels>");
        }
        src.kind = DataSource::Kind::Idx;
        src.images = parts[0];
        src.labels = parts[1];
        return src;
    }
    if (spec.rfind("bars:", 0) == 0) {
        const auto parts = split(spec.substr(5), ',');
        if (parts.size() != 3 && parts.size() != 4) {
            throw ConfigError("config key 'data.source': expected bars:<n>,<h>,<w>[,<seed>]");
        }
        src.n = parse_count(parts[0]);
        src.h = parse_count(parts[1]);
        src.w = parse_count(parts[2]);
        if (parts.size() == 4) {
            src.seed = parse_count(parts[3]);
        } else if (cfg.has("train.seed")) {
            src.seed = cfg.u64("train.seed");
        }
        if (src.n == 0 || src.n % 2 != 0 || src.h < 4 || src.w < 4) {
            throw ConfigError("config key 'data.source': bars needs an even n > 0 and h, w >= 4");
        }
        return src;
    }
    throw ConfigError("config key 'data.source' must start with 'idx:' or 'bars:'");
}

Dataset load_data(const DataSource& src, std::size_t class_count) {
    if (src.kind == DataSource::Kind::Bars) {
        if (class_count != 2) {
            throw DomainError("bars data has 2 classes but the network has " +
                              std::to_string(class_count) + " outputs");
        }
        return synth_bars(src.n, src.h, src.w, src.seed);
    }
    Dataset data = load_idx_dataset(src.images, src.labels, class_count);
    if (data.empty()) {
        throw DomainError("IDX data set " + src.images + " holds no samples");
    }
    return data;
}

struct NetConfig {
    Architecture arch;
    std::uint64_t seed = 0;
};

// Reads the architecture keys; input extents are filled in from the data.
NetConfig net_config(const Config& cfg) {
    NetConfig nc;
    ConvGeometry& g = nc.arch.conv;
    g.in_c = 1;
    g.n_kernels = cfg.count("conv.kernels", 1);
    g.k_h = g.k_w = cfg.count("conv.size", 1);
    g.stride = cfg.count("conv.stride", 1);
    g.pad = cfg.count("conv.pad", 0);
    nc.arch.pool.window = cfg.count("pool.window", 1);
    nc.arch.pool.stride = cfg.count("pool.stride", 1);
    nc.arch.dense_widths = cfg.count_list("dense.widths", 1);
    nc.seed = cfg.u64("train.seed");
    return nc;
}

Network build(NetConfig nc, const Dataset& data) {
    const Shape& s = data.images.front().shape();
    nc.arch.conv.in_h = s[1];
    nc.arch.conv.in_w = s[2];
    return stage(kUsage, [&] { return init(nc.arch, nc.seed); });
}

void check_extents(const Network& net, const Dataset& data) {
    const Shape want = net.input_shape();
    const Shape got = data.images.front().shape();
    if (got != want) {
        throw Failure(kData, "data extent " + extent_string(got) +
                                 " does not match model input extent " + extent_string(want));
    }
}

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        f << text;
        f.close();
        if (!f) {
            std::error_code ignored;
            std::filesystem::remove(tmp, ignored);
            throw IoError("cannot write " + path.string());
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw IoError("cannot move file into place at " + path.string());
    }
}

int cmd_train(const std::string& config_path, std::ostream& out) {
    const auto [cfg, nc, tc, src, model_path, csv_path] = stage(kUsage, [&] {
        Config c = Config::load(config_path);
        NetConfig n = net_config(c);
        TrainConfig t;
        t.learning_rate = c.real("train.alpha");
        t.epochs = c.count("train.epochs", 1);
        t.batch_size = c.count("train.batch_size", 1);
        t.seed = n.seed;
        t.validate();
        DataSource s = data_source(c);
        std::string model = c.text("out.model");
        std::string csv = c.text("out.csv");
        return std::tuple{c, n, t, s, model, csv};
    });

    const Dataset data = stage(kData, [&] { return load_data(src, nc.arch.dense_widths.back()); });
    const Network net = build(nc, data);
    const TrainResult result = stage(kData, [&] { return train(net, data, tc); });

    std::string csv = "epoch,mean_loss,accuracy\n";
    for (const EpochStats& e : result.history) {
        const std::string row =
            std::to_string(e.epoch) + "," + fixed6(e.mean_loss) + "," + fixed6(e.accuracy);
        csv += row + "\n";
        out << "epoch " << e.epoch << " mean_loss=" << fixed6(e.mean_loss)
            << " accuracy=" << fixed6(e.accuracy) << "\n";
    }

    stage(kData, [&] {
        save_file(result.net, model_path);
        try {
            write_text_atomic(csv_path, csv);
        } catch (...) {
            std::error_code ignored;
            std::filesystem::remove(model_path, ignored);
            throw;
        }
        return 0;
    });
    out << "model written to " << model_path << "\n";
    return kOk;
}

int cmd_eval(const std::string& model_path, const std::string& config_path, std::ostream& out) {
    const DataSource src = stage(kUsage, [&] { return data_source(Config::load(config_path)); });
    const Network net = stage(kData, [&] { return load_file(model_path); });
    const Dataset data = stage(kData, [&] { return load_data(src, net.class_count()); });
    check_extents(net, data);
    const Metrics m = stage(kData, [&] { return evaluate(net, data); });
    out << "loss=" << fixed6(m.mean_loss) << " accuracy=" << fixed6(m.accuracy) << "\n";
    return kOk;
}

int cmd_gradcheck(const std::string& config_path, double threshold, std::ostream& out) {
    const auto [nc, src] = stage(kUsage, [&] {
        Config c = Config::load(config_path);
        if (!(threshold > 0.0)) {
            throw ConfigError("--threshold must be positive");
        }
        return std::pair{net_config(c), data_source(c)};
    });
    const Dataset data = stage(kData, [&] { return load_data(src, nc.arch.dense_widths.back()); });
    const Network net = build(nc, data);

    CheckOptions options;
    options.threshold = threshold;
    const GradReport report = stage(kData, [&] {
        return check_network(net, data.images.front(), data.labels.front(), options);
    });
    out << format_table(report);
    return report.pass() ? kOk : kCheckFail;
}

int cmd_predict(const std::string& model_path, const std::string& image_path, bool softmax,
                std::ostream& out) {
    const Network net = stage(kData, [&] { return load_file(model_path); });
    const Tensor image = stage(kData, [&] { return normalize(load_pgm(image_path)); });
    const Shape want = net.input_shape();
    if (image.shape() != want) {
        throw Failure(kData, "image " + image_path + " is " + extent_string(image.shape()) +
                                 " but the model expects " + extent_string(want));
    }
    Tensor yhat = forward(net, image).yhat;
    if (softmax) {
        yhat = apply(Activation::Softmax, yhat);
    }
    for (std::size_t i = 0; i < yhat.size(); ++i) {
        out << (i == 0 ? "" : " ") << fixed6(yhat[i]);
    }
    out << "\nclass=" << argmax(yhat) << "\n";
    return kOk;
}

} // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Train, evaluate and gradient-check a small convolutional network"};
    app.require_subcommand(1);

    std::string config;
    std::string model;
    std::string image;
    double threshold = 1e-6;
    bool softmax = false;

    CLI::App* train_cmd = app.add_subcommand("train", "train a network and write model + CSV");
    train_cmd->add_option("config", config, "config file")->required();

    CLI::App* eval_cmd = app.add_subcommand("eval", "print loss and accuracy of a model");
    eval_cmd->add_option("model", model, "model file")->required();
    eval_cmd->add_option("config", config, "config file (data.source)")->required();

    CLI::App* check_cmd = app.add_subcommand("gradcheck", "compare backprop to finite differences");
    check_cmd->add_option("config", config, "config file")->required();
    check_cmd->add_option("--threshold", threshold, "max relative error (default 1e-6)");

    CLI::App* predict_cmd = app.add_subcommand("predict", "classify one PGM image");
    predict_cmd->add_option("model", model, "model file")->required();
    predict_cmd->add_option("image", image, "binary PGM image")->required();
    predict_cmd->add_flag("--softmax", softmax, "softmax-normalize the outputs");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*train_cmd) {
            return cmd_train(config, out);
        }
        if (*eval_cmd) {
            return cmd_eval(model, config, out);
        }
        if (*check_cmd) {
            return cmd_gradcheck(config, threshold, out);
        }
        return cmd_predict(model, image, softmax, out);
    } catch (const Failure& f) {
        err << "error: " << f.what() << "\n";
        return f.code();
    }
}

} // namespace cnn::cli
