#ifndef CNNBP_TOOLS_CONFIG_HPP
#define CNNBP_TOOLS_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <string>
#include <vector>

#include "cnnbp/errors.hpp"

namespace cnn::cli {

class ConfigError : public Error {
public:
    using Error::Error;
};

/// Flat `key=value` lines; `#` starts a comment, blank lines are ignored.
/// Unknown or repeated keys are errors.
class Config {
public:
    static Config parse(std::istream& in);
    static Config load(const std::filesystem::path& path);

    bool has(const std::string& key) const { return values_.count(key) != 0; }
    const std::string& text(const std::string& key) const;
    std::size_t count(const std::string& key, std::size_t min = 0) const;
    std::uint64_t u64(const std::string& key) const;
    double real(const std::string& key) const;
    std::vector<std::size_t> count_list(const std::string& key, std::size_t min = 1) const;

private:
    std::map<std::string, std::string> values_;
};

/// Every key the config format accepts.
const std::vector<std::string>& known_keys();

} // namespace cnn::cli

#endif // CNNBP_TOOLS_CONFIG_HPP
