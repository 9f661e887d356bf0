#include "config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>

namespace cnn::cli {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) {
        return "";
    }
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
    T value{};
    const char* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (text.empty() || ec != std::errc{} || ptr != end) {
        throw ConfigError("config key '" + key + "': '" + text + "' is not a valid number");
    }
    return value;
}

} // namespace

const std::vector<std::string>& known_keys() {
    static const std::vector<std::string> keys{
        "conv.kernels", "conv.size",        "conv.stride", "conv.pad",
        "pool.window",  "pool.stride",      "dense.widths", "train.alpha",
        "train.epochs", "train.batch_size", "train.seed",  "data.source",
        "out.model",    "out.csv"};
    return keys;
}

Config Config::parse(std::istream& in) {
    Config cfg;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (const auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(number) + ": expected key=value");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const auto& keys = known_keys();
        if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
            throw ConfigError("config line " + std::to_string(number) + ": unknown key '" + key + "'");
        }
        if (!cfg.values_.emplace(key, value).second) {
            throw ConfigError("config line " + std::to_string(number) + ": key '" + key +
                              "' given twice");
        }
    }
    return cfg;
}

Config Config::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot read config file " + path.string());
    }
    return parse(in);
}

const std::string& Config::text(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) {
        throw ConfigError("config is missing required key '" + key + "'");
    }
    if (it->second.empty()) {
        throw ConfigError("config key '" + key + "' has an empty value");
    }
    return it->second;
}

std::size_t Config::count(const std::string& key, std::size_t min) const {
    const auto v = parse_number<std::size_t>(key, text(key));
    if (v < min) {
        throw ConfigError("config key '" + key + "' must be at least " + std::to_string(min));
    }
    return v;
}

std::uint64_t Config::u64(const std::string& key) const {
    return parse_number<std::uint64_t>(key, text(key));
}

double Config::real(const std::string& key) const {
    const auto v = parse_number<double>(key, text(key));
    if (!std::isfinite(v)) {
        throw ConfigError("config key '" + key + "' must be finite");
    }
    return v;
}

std::vector<std::size_t> Config::count_list(const std::string& key, std::size_t min) const {
    const std::string& all = text(key);
    std::vector<std::size_t> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = all.find(',', start);
        const std::string item = trim(all.substr(start, comma - start));
        const auto v = parse_number<std::size_t>(key, item);
        if (v < min) {
            throw ConfigError("config key '" + key + "' entries must be at least " +
                              std::to_string(min));
        }
        out.push_back(v);
        if (comma == std::string::npos) {
            break;
        }
        start = comma + 1;
    }
    return out;
}

} // namespace cnn::cli
