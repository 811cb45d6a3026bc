#include "blowctl/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "blowctl/io.hpp"

namespace blowctl {

namespace {

struct KeyBinding {
    std::function<void(ExperimentConfig&, const std::string&)> set;
    std::function<std::string(const ExperimentConfig&)> get;
};

double to_double(const std::string& v, const std::string& key, int line_no) {
    try {
        std::size_t pos = 0;
        const double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("config line " + std::to_string(line_no) + ": key '" + key +
                          "' has a malformed number '" + v + "'");
    }
}

int to_int(const std::string& v, const std::string& key, int line_no) {
    try {
        std::size_t pos = 0;
        const int x = std::stoi(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("config line " + std::to_string(line_no) + ": key '" + key +
                          "' has a malformed integer '" + v + "'");
    }
}

std::string sizes_to_string(const std::vector<double>& sizes) {
    std::string out;
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        if (i) out += ',';
        out += fmt_double(sizes[i]);
    }
    return out;
}

const std::map<std::string, KeyBinding>& key_table() {
    static const std::map<std::string, KeyBinding> table = [] {
        std::map<std::string, KeyBinding> t;
        auto dbl = [&t](const std::string& key, double ExperimentConfig::* field) {
            t[key] = KeyBinding{
                [field, key](ExperimentConfig& c, const std::string& v) {
                    c.*field = to_double(v, key, 0);
                },
                [field](const ExperimentConfig& c) { return fmt_double(c.*field); }};
        };
        auto integer = [&t](const std::string& key, int ExperimentConfig::* field) {
            t[key] = KeyBinding{
                [field, key](ExperimentConfig& c, const std::string& v) {
                    c.*field = to_int(v, key, 0);
                },
                [field](const ExperimentConfig& c) { return std::to_string(c.*field); }};
        };
        dbl("domain_lo", &ExperimentConfig::domain_lo);
        dbl("domain_hi", &ExperimentConfig::domain_hi);
        dbl("omega_lo", &ExperimentConfig::omega_lo);
        dbl("omega_hi", &ExperimentConfig::omega_hi);
        dbl("a", &ExperimentConfig::a);
        integer("n", &ExperimentConfig::n);
        dbl("T", &ExperimentConfig::t_total);
        dbl("T1", &ExperimentConfig::t1);
        dbl("epsilon", &ExperimentConfig::epsilon);
        dbl("eps_hat", &ExperimentConfig::eps_hat);
        dbl("eps_hat1", &ExperimentConfig::eps_hat1);
        dbl("p", &ExperimentConfig::p);
        dbl("s0", &ExperimentConfig::s0);
        dbl("K0", &ExperimentConfig::k0);
        dbl("epsilon0", &ExperimentConfig::epsilon0);
        dbl("A", &ExperimentConfig::a_bound);
        dbl("mu", &ExperimentConfig::mu);
        dbl("eta0", &ExperimentConfig::eta0);
        integer("budget", &ExperimentConfig::budget);
        dbl("blowup_threshold", &ExperimentConfig::blowup_threshold);
        dbl("floor_eps", &ExperimentConfig::floor_eps);
        dbl("base_dt", &ExperimentConfig::base_dt);
        dbl("control_dt", &ExperimentConfig::control_dt);
        dbl("safety", &ExperimentConfig::safety);
        integer("n_knots", &ExperimentConfig::n_knots);
        dbl("reg_eps", &ExperimentConfig::reg_eps);
        integer("checkpoint_stride", &ExperimentConfig::checkpoint_stride);
        t["sizes"] = KeyBinding{
            [](ExperimentConfig& c, const std::string& v) { c.sizes = parse_sizes_list(v); },
            [](const ExperimentConfig& c) { return sizes_to_string(c.sizes); }};
        t["out_dir"] = KeyBinding{
            [](ExperimentConfig& c, const std::string& v) { c.out_dir = v; },
            [](const ExperimentConfig& c) { return c.out_dir; }};
        return t;
    }();
    return table;
}

}  // namespace

std::vector<double> parse_sizes_list(const std::string& csv) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) throw ConfigError("sizes: empty entry in '" + csv + "'");
        out.push_back(to_double(item, "sizes", 0));
        if (out.back() < 0.0) throw ConfigError("sizes: entries must be >= 0");
    }
    if (out.empty()) throw ConfigError("sizes: empty list");
    return out;
}

void ExperimentConfig::finalize() {
    if (!(p > 1.0)) throw ConfigError("config: need p > 1");
    if (!(s0 > 1.0)) throw ConfigError("config: need s0 > 1");
    if (t1 < 0.0) t1 = std::exp(-s0);
    // Late steering stop: small enough that the terminal steering residual
    // sits below the regular-region level eta0 when the blowup phase starts.
    if (eps_hat < 0.0) eps_hat = std::min(epsilon / 8.0, 2e-4);
    if (eps_hat1 < 0.0) eps_hat1 = t1 / 8.0;

    if (!(domain_lo < domain_hi)) throw ConfigError("config: need domain_lo < domain_hi");
    if (!(domain_lo < omega_lo && omega_lo < omega_hi && omega_hi < domain_hi)) {
        throw ConfigError("config: need domain_lo < omega_lo < omega_hi < domain_hi");
    }
    if (!(omega_lo < a && a < omega_hi)) throw ConfigError("config: need a inside omega");
    if (n < 3) throw ConfigError("config: need n >= 3");
    if (!(epsilon > 0.0)) throw ConfigError("config: need epsilon > 0");
    if (!(t1 > 0.0 && t1 < 0.5 * t_total)) {
        throw ConfigError("config: T1 = " + fmt_double(t1) +
                          " violates the constraint T1 in (0, T/2) with T = " +
                          fmt_double(t_total));
    }
    if (!(mu > 0.0 && mu < 1.0)) throw ConfigError("config: need mu in (0, 1)");
    if (!(eta0 > 0.0 && eta0 <= 1.0)) throw ConfigError("config: need eta0 in (0, 1]");
    if (!(k0 >= 1.0)) throw ConfigError("config: need K0 >= 1");
    if (!(epsilon0 > 0.0)) throw ConfigError("config: need epsilon0 > 0");
    if (!(a - 4.0 * epsilon0 > omega_lo && a + 4.0 * epsilon0 < omega_hi)) {
        throw ConfigError("config: (a - 4 eps0, a + 4 eps0) must lie inside omega");
    }
    if (!(k0 * std::sqrt(s0) < epsilon0 * std::exp(0.5 * s0))) {
        throw ConfigError("config: need K0 sqrt(s0) < eps0 e^{s0/2}");
    }
    if (!(a_bound > 0.0)) throw ConfigError("config: need A > 0");
    if (budget < 1) throw ConfigError("config: need budget >= 1");
    if (!(floor_eps > 0.0)) throw ConfigError("config: need floor_eps > 0");
    if (!(base_dt > 0.0 && control_dt > 0.0)) throw ConfigError("config: need positive steps");
    if (!(safety > 0.0 && safety <= 1.0)) throw ConfigError("config: need safety in (0, 1]");
    if (n_knots < 64) throw ConfigError("config: need n_knots >= 64");
    if (checkpoint_stride < 1) throw ConfigError("config: need checkpoint_stride >= 1");
    if (!(blowup_threshold > 1.0)) throw ConfigError("config: need blowup_threshold > 1");
    for (std::size_t i = 1; i < sizes.size(); ++i) {
        if (sizes[i] < sizes[i - 1]) throw ConfigError("config: sizes must be nondecreasing");
    }

    // Phase ordering of the three-phase plan.
    if (!(eps_hat > 0.0 && eps_hat1 > 0.0 && eps_hat1 < 0.25 * t1)) {
        throw ConfigError("config: need eps_hat > 0 and eps_hat1 in (0, T1/4)");
    }
    const double steering_end = t_total - t1 - eps_hat;
    if (!(steering_end > 0.0)) throw ConfigError("config: steering window is empty");
}

std::string ExperimentConfig::canonical_string() const {
    std::string out;
    for (const auto& [key, binding] : key_table()) {
        out += key;
        out += '=';
        out += binding.get(*this);
        out += '\n';
    }
    return out;
}

std::string ExperimentConfig::hash() const {
    const std::string s = canonical_string();
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

ExperimentConfig default_config() {
    ExperimentConfig cfg;
    cfg.finalize();
    return cfg;
}

ExperimentConfig parse_config_text(const std::string& text, const std::string& origin) {
    ExperimentConfig cfg;
    std::map<std::string, int> seen;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto hash_pos = line.find('#');
        if (hash_pos != std::string::npos) line.erase(hash_pos);
        // trim
        const auto b = line.find_first_not_of(" \t");
        if (b == std::string::npos) continue;
        const auto e = line.find_last_not_of(" \t");
        line = line.substr(b, e - b + 1);

        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(origin + " line " + std::to_string(line_no) +
                              ": expected key=value, got '" + line + "'");
        }
        std::string key = line.substr(0, eq);
        std::string value = line.substr(eq + 1);
        auto strip = [](std::string& s) {
            const auto b2 = s.find_first_not_of(" \t");
            if (b2 == std::string::npos) {
                s.clear();
                return;
            }
            const auto e2 = s.find_last_not_of(" \t");
            s = s.substr(b2, e2 - b2 + 1);
        };
        strip(key);
        strip(value);

        const auto it = key_table().find(key);
        if (it == key_table().end()) {
            throw ConfigError(origin + " line " + std::to_string(line_no) +
                              ": unknown key '" + key + "'");
        }
        if (auto [pos, inserted] = seen.emplace(key, line_no); !inserted) {
            throw ConfigError(origin + " line " + std::to_string(line_no) +
                              ": duplicate key '" + key + "' (first at line " +
                              std::to_string(pos->second) + ")");
        }
        try {
            it->second.set(cfg, value);
        } catch (const ConfigError& err) {
            throw ConfigError(origin + " line " + std::to_string(line_no) + ": " + err.what());
        }
    }
    cfg.finalize();
    return cfg;
}

ExperimentConfig parse_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str(), path.string());
}

}  // namespace blowctl
