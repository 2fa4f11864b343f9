// SPDX-License-Identifier: Apache-2.0
#include "megan/config.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>

namespace megan {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
    std::uint64_t out = 0;
    const char* first = value.data();
    const char* last = first + value.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    if (ec != std::errc{} || ptr != last)
        throw ConfigError("config key '" + key + "' expects a nonnegative integer, got '" +
                          value + "'");
    return out;
}

double parse_f64(const std::string& key, const std::string& value) {
    if (value.empty())
        throw ConfigError("config key '" + key + "' expects a number, got ''");
    char* end = nullptr;
    const double out = std::strtod(value.c_str(), &end);
    if (end != value.c_str() + value.size() || !std::isfinite(out))
        throw ConfigError("config key '" + key + "' expects a finite number, got '" + value +
                          "'");
    return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true") return true;
    if (value == "false") return false;
    throw ConfigError("config key '" + key + "' expects true or false, got '" + value + "'");
}

}  // namespace

Config::Config() {
    const auto u64 = [this](const char* k, std::uint64_t v) {
        items_.push_back({k, Kind::U64, std::to_string(v)});
    };
    const auto f64 = [this](const char* k, double v) {
        items_.push_back({k, Kind::F64, format_double(v)});
    };
    u64("model.n_generators", 5);
    u64("model.d_z", 32);
    u64("model.k_hidden", 256);
    u64("model.m", 100);
    u64("model.trunk_width", 128);
    u64("model.d_hidden", 128);
    items_.push_back({"data.kind", Kind::DataKind, "ring"});
    u64("data.modes", 8);
    f64("data.radius", 2.0);
    f64("data.spacing", 2.0);
    f64("data.sigma", 0.05);
    u64("train.batch", 64);
    f64("train.lambda_lb", 100.0);
    f64("train.tau_initial", 0.5);
    f64("train.tau_rate", 0.001);
    f64("train.tau_floor", 0.01);
    f64("train.lr_disc", 2e-4);
    f64("train.lr_gen", 2e-4);
    f64("train.lr_gate", 1e-4);
    u64("train.max_iters", 15000);
    u64("train.log_every", 100);
    u64("train.ckpt_every", 5000);
    items_.push_back({"train.resample_per_phase", Kind::Bool, "false"});
    u64("eval.samples", 2000);
    u64("seed.data", 1);
    u64("seed.init", 2);
    u64("seed.gumbel", 3);
    u64("seed.eval", 4);
    items_.push_back({"out.dir", Kind::Str, ""});
}

const Config::Item& Config::find(const std::string& key) const {
    for (const Item& it : items_)
        if (it.key == key) return it;
    throw ConfigError("unknown config key '" + key + "'");
}

Config::Item& Config::find(const std::string& key) {
    for (Item& it : items_)
        if (it.key == key) return it;
    throw ConfigError("unknown config key '" + key + "'");
}

void Config::set(const std::string& key, const std::string& value) {
    Item& it = find(key);
    switch (it.kind) {
        case Kind::U64:
            it.value = std::to_string(parse_u64(key, value));
            break;
        case Kind::F64:
            it.value = format_double(parse_f64(key, value));
            break;
        case Kind::Bool:
            it.value = parse_bool(key, value) ? "true" : "false";
            break;
        case Kind::DataKind:
            if (value != "ring" && value != "grid")
                throw ConfigError("config key '" + key + "' expects ring or grid, got '" +
                                  value + "'");
            it.value = value;
            break;
        case Kind::Str:
            it.value = value;
            break;
    }
}

void Config::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string stripped = trim(line);
        if (stripped.empty()) continue;
        const std::size_t eq = stripped.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(lineno) +
                              ": expected 'key = value', got '" + stripped + "'");
        set(trim(stripped.substr(0, eq)), trim(stripped.substr(eq + 1)));
    }
}

void Config::set_master_seed(std::uint64_t seed) {
    const std::uint64_t a = splitmix64(seed);
    const std::uint64_t b = splitmix64(a);
    const std::uint64_t c = splitmix64(b);
    const std::uint64_t d = splitmix64(c);
    set("seed.data", std::to_string(a));
    set("seed.init", std::to_string(b));
    set("seed.gumbel", std::to_string(c));
    set("seed.eval", std::to_string(d));
}

const std::string& Config::get(const std::string& key) const { return find(key).value; }

std::uint64_t Config::get_u64(const std::string& key) const {
    return parse_u64(key, find(key).value);
}

double Config::get_f64(const std::string& key) const { return parse_f64(key, find(key).value); }

bool Config::get_bool(const std::string& key) const { return parse_bool(key, find(key).value); }

std::vector<std::pair<std::string, std::string>> Config::entries() const {
    std::vector<std::pair<std::string, std::string>> out;
    out.reserve(items_.size());
    for (const Item& it : items_) out.emplace_back(it.key, it.value);
    return out;
}

TrainConfig Config::to_train_config() const {
    TrainConfig tc;
    tc.model.n_generators = get_u64("model.n_generators");
    tc.model.d_z = get_u64("model.d_z");
    tc.model.k_hidden = get_u64("model.k_hidden");
    tc.model.m = get_u64("model.m");
    tc.model.trunk_width = get_u64("model.trunk_width");
    tc.model.d_hidden = get_u64("model.d_hidden");
    const bool ring = get("data.kind") == "ring";
    tc.data_kind = ring ? MixtureSpec::Kind::Ring : MixtureSpec::Kind::Grid;
    tc.data_modes = get_u64("data.modes");
    tc.data_scale = get_f64(ring ? "data.radius" : "data.spacing");
    tc.data_sigma = get_f64("data.sigma");
    tc.b = get_u64("train.batch");
    tc.lambda_lb = get_f64("train.lambda_lb");
    tc.tau.initial = get_f64("train.tau_initial");
    tc.tau.rate = get_f64("train.tau_rate");
    tc.tau.floor = get_f64("train.tau_floor");
    tc.lr_disc = get_f64("train.lr_disc");
    tc.lr_gen = get_f64("train.lr_gen");
    tc.lr_gate = get_f64("train.lr_gate");
    tc.max_iters = get_u64("train.max_iters");
    tc.log_every = get_u64("train.log_every");
    tc.ckpt_every = get_u64("train.ckpt_every");
    tc.resample_per_phase = get_bool("train.resample_per_phase");
    tc.eval_samples = get_u64("eval.samples");
    tc.seed_data = get_u64("seed.data");
    tc.seed_init = get_u64("seed.init");
    tc.seed_gumbel = get_u64("seed.gumbel");
    tc.seed_eval = get_u64("seed.eval");
    return tc;
}

}  // namespace megan
