#include "cstrack/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace cstrack {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return {};
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

class KeyValues {
  public:
    explicit KeyValues(const std::string& text) {
        std::istringstream in(text);
        std::string line, section;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            line = trim(line);
            if (line.empty() || line[0] == '#' || line[0] == ';') continue;
            if (line.front() == '[') {
                if (line.back() != ']')
                    throw ConfigError("config line " + std::to_string(lineno) +
                                      ": unterminated section header");
                section = trim(line.substr(1, line.size() - 2));
                continue;
            }
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw ConfigError("config line " + std::to_string(lineno) +
                                  ": expected key = value");
            const std::string key = section + "." + trim(line.substr(0, eq));
            values_[key] = trim(line.substr(eq + 1));
        }
    }

    std::optional<std::string> get(const std::string& key) const {
        const auto it = values_.find(key);
        if (it == values_.end()) return std::nullopt;
        used_.insert(key);
        return it->second;
    }

    std::string require(const std::string& key) const {
        auto v = get(key);
        if (!v) throw ConfigError("config: missing required key " + key);
        return *v;
    }

    double get_num(const std::string& key, double fallback) const {
        auto v = get(key);
        if (!v) return fallback;
        try {
            std::size_t used = 0;
            const double x = std::stod(*v, &used);
            if (used != v->size()) throw std::invalid_argument("");
            return x;
        } catch (const std::exception&) {
            throw ConfigError("config: key " + key + " is not a number: " + *v);
        }
    }

    double require_num(const std::string& key) const {
        require(key);
        return get_num(key, 0.0);
    }

    bool get_bool(const std::string& key, bool fallback) const {
        auto v = get(key);
        if (!v) return fallback;
        if (*v == "true" || *v == "1") return true;
        if (*v == "false" || *v == "0") return false;
        throw ConfigError("config: key " + key + " is not a boolean: " + *v);
    }

    void reject_unknown() const {
        for (const auto& [key, value] : values_)
            if (!used_.contains(key))
                throw ConfigError("config: unknown key " + key);
    }

  private:
    std::map<std::string, std::string> values_;
    mutable std::set<std::string> used_;
};

int exact_int(double v, const std::string& what) {
    const double r = std::round(v);
    if (std::abs(v - r) > 1e-9 || r < -2e9 || r > 2e9)
        throw ConfigError("config: " + what + " must be an integer");
    return static_cast<int>(r);
}

}  // namespace

int ExperimentConfig::steps() const {
    const double s = (t_f - t_i) / tau;
    const int n_steps = static_cast<int>(std::lround(s));
    if (n_steps < 1 || std::abs(s - n_steps) > 1e-9)
        throw ConfigError("config: (t_F - t_i) / tau must be a positive integer");
    return n_steps;
}

int ExperimentConfig::windows() const { return steps() - n + 1; }

void ExperimentConfig::validate() const {
    if (!(t_i < t_f)) throw ConfigError("config: t_i must be < t_F");
    if (tau <= 0.0) throw ConfigError("config: tau must be positive");
    if (N < 1) throw ConfigError("config: N must be >= 1");
    if (Q < 1) throw ConfigError("config: Q must be >= 1");
    if (n < 1) throw ConfigError("config: n must be >= 1");
    if (bins_x < 1 || bins_y < 1) throw ConfigError("config: bins must be >= 1");
    if (gamma < 0.0) throw ConfigError("config: gamma must be >= 0");
    const int s = steps();
    if (n > s) throw ConfigError("config: window length n exceeds t_F - t_i");
    if (h != 0.0) {
        if (h <= 0.0 || h > tau) throw ConfigError("config: h must satisfy 0 < h <= tau");
        const double ratio = tau / h;
        if (std::abs(ratio - std::lround(ratio)) > 1e-9 * ratio)
            throw ConfigError("config: tau/h must be an integer");
    }
    if (model == ModelKind::Gridded && grid_file.empty())
        throw ConfigError("config: gridded model requires model.grid_file");
    if (model != ModelKind::Gridded) {
        if (!(x_min < x_max) || !(y_min < y_max))
            throw ConfigError("config: domain bounds must be increasing");
        if (seed_lat_max)
            throw ConfigError("config: growing-domain seeding requires the gridded model");
    }
    if (out_dir.empty()) throw ConfigError("config: output.dir is required");
}

ExperimentConfig parse_config(const std::string& text) {
    const KeyValues kv(text);
    ExperimentConfig c;

    const std::string kind = kv.require("model.kind");
    if (kind == "periodic_dwp") {
        c.model = ModelKind::PeriodicDoubleWell;
    } else if (kind == "quasi_periodic_dwp") {
        c.model = ModelKind::QuasiPeriodicDoubleWell;
    } else if (kind == "gridded") {
        c.model = ModelKind::Gridded;
    } else {
        throw ConfigError("config: unknown model.kind " + kind);
    }
    c.gamma = kv.get_num("model.gamma", c.gamma);
    c.grid_file = kv.get("model.grid_file").value_or("");

    c.x_min = kv.get_num("domain.x_min", c.x_min);
    c.x_max = kv.get_num("domain.x_max", c.x_max);
    c.y_min = kv.get_num("domain.y_min", c.y_min);
    c.y_max = kv.get_num("domain.y_max", c.y_max);
    c.periodic_x = kv.get_bool("domain.periodic_x", c.periodic_x);
    c.periodic_y = kv.get_bool("domain.periodic_y", c.periodic_y);
    c.bins_x = exact_int(kv.get_num("domain.bins_x", c.bins_x), "domain.bins_x");
    c.bins_y = exact_int(kv.get_num("domain.bins_y", c.bins_y), "domain.bins_y");

    c.t_i = kv.require_num("run.t_i");
    c.t_f = kv.require_num("run.t_F");
    c.tau = kv.get_num("run.tau", c.tau);
    c.h = kv.get_num("run.h", c.h);
    c.n = exact_int(kv.require_num("run.n"), "run.n");
    c.N = exact_int(kv.get_num("run.N", c.N), "run.N");
    c.Q = exact_int(kv.get_num("run.Q", c.Q), "run.Q");
    c.seed = static_cast<std::uint64_t>(kv.get_num("run.seed", 0.0));
    const std::string scheme = kv.get("run.seed_scheme").value_or("lattice");
    if (scheme == "lattice") {
        c.seed_scheme = SeedScheme::Lattice;
    } else if (scheme == "rng") {
        c.seed_scheme = SeedScheme::Rng;
    } else {
        throw ConfigError("config: unknown run.seed_scheme " + scheme);
    }

    const std::string method = kv.get("tracking.method").value_or("values");
    if (method == "values") {
        c.method = TrackMethod::ByValues;
    } else if (method == "vectors") {
        c.method = TrackMethod::ByVectors;
    } else {
        throw ConfigError("config: unknown tracking.method " + method);
    }

    if (auto v = kv.get("seeding.lat_max")) c.seed_lat_max = kv.get_num("seeding.lat_max", 0.0);

    c.out_dir = kv.get("output.dir").value_or("");

    kv.reject_unknown();
    c.hash = fnv1a_hex(text);
    c.validate();
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (const unsigned char b : bytes) {
        hash ^= b;
        hash *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
    return buf;
}

}  // namespace cstrack
