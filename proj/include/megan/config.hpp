// SPDX-License-Identifier: Apache-2.0
#ifndef MEGAN_CONFIG_HPP
#define MEGAN_CONFIG_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "megan/train.hpp"

namespace megan {

/// Typed dotted-key configuration with the precedence chain
/// defaults < file < explicit sets. Values are stored canonicalized, so a
/// resolved snapshot reloads to the identical state.
class Config {
public:
    Config();

    /// Validates the key and parses the value by its registered type;
    /// unknown keys or unparseable values raise ConfigError naming them.
    void set(const std::string& key, const std::string& value);

    /// Reads `key = value` lines; '#' starts a comment, blank lines are
    /// skipped. A missing file or a line without '=' raises ConfigError.
    void load_file(const std::string& path);

    /// Derives every seed stream from one master value.
    void set_master_seed(std::uint64_t seed);

    /// Canonical value string for a known key.
    const std::string& get(const std::string& key) const;

    std::uint64_t get_u64(const std::string& key) const;
    double get_f64(const std::string& key) const;
    bool get_bool(const std::string& key) const;

    /// Every key with its resolved value, in registry order.
    std::vector<std::pair<std::string, std::string>> entries() const;

    TrainConfig to_train_config() const;

    /// Output root from `out.dir`; empty when unset.
    std::string out_dir() const { return get("out.dir"); }

private:
    enum class Kind { U64, F64, Bool, DataKind, Str };
    struct Item {
        std::string key;
        Kind kind;
        std::string value;
    };
    const Item& find(const std::string& key) const;
    Item& find(const std::string& key);

    std::vector<Item> items_;
};

}  // namespace megan

#endif
