#ifndef CSTRACK_CONFIG_HPP
#define CSTRACK_CONFIG_HPP

#include <cstdint>
#include <optional>
#include <string>

#include "cstrack/tracking.hpp"
#include "cstrack/ulam.hpp"

namespace cstrack {

enum class ModelKind { PeriodicDoubleWell, QuasiPeriodicDoubleWell, Gridded };

/// Experiment description parsed from a plain-text "key = value" config with
/// [section] headers. All invariants are validated before any command touches
/// the filesystem.
struct ExperimentConfig {
    ModelKind model = ModelKind::PeriodicDoubleWell;
    double gamma = 0.1;          // quasi-periodic forcing amplitude
    std::string grid_file;       // gridded model input

    // Analytic-model domain; the gridded model derives its domain from the data.
    double x_min = -3.14159265358979323846, x_max = 3.14159265358979323846;
    double y_min = -3.14159265358979323846, y_max = 3.14159265358979323846;
    bool periodic_x = false, periodic_y = false;

    int bins_x = 64, bins_y = 64;

    double t_i = 0.0, t_f = 0.0;
    double tau = 1.0;
    double h = 0.0;  // 0 = default tau/10
    int n = 1;       // window length in steps
    int N = 4;       // tracked singular values
    int Q = 100;     // test points per bin
    SeedScheme seed_scheme = SeedScheme::Lattice;
    std::uint64_t seed = 0;

    TrackMethod method = TrackMethod::ByValues;

    /// Growing-domain mode (gridded model): seed bins whose centre latitude is
    /// strictly below this threshold, and let the column set grow per window.
    std::optional<double> seed_lat_max;

    std::string out_dir;

    /// FNV-1a hash of the raw config text, stamped on every output file.
    std::string hash;

    int steps() const;    // matrices to build: (t_f - t_i) / tau
    int windows() const;  // steps() - n + 1

    void validate() const;
};

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

std::string fnv1a_hex(const std::string& bytes);

}  // namespace cstrack

#endif
