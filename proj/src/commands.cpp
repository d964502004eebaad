#include "cstrack/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <thread>

#include <CLI11.hpp>

#include "cstrack/diagnostics.hpp"
#include "cstrack/io.hpp"

namespace fs = std::filesystem;

namespace cstrack {

namespace {

std::string zero_pad(int value, int width) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%0*d", width, value);
    return buf;
}

std::string method_suffix(TrackMethod m) {
    return m == TrackMethod::ByValues ? "values" : "vectors";
}

int effective_threads(const CommandOptions& options) {
    if (options.threads > 0) return options.threads;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

/// Everything the pipeline needs that is derived from the config: the field,
/// the shared domain, the partition and the one-step flow spec.
struct Pipeline {
    std::unique_ptr<VectorField> field;
    Domain domain;
    BinPartition partition;
    FlowSpec flow;
    bool growing = false;
    std::vector<int> seed_bins;  // growing mode only
};

Pipeline make_pipeline(const ExperimentConfig& config) {
    Pipeline p;
    switch (config.model) {
        case ModelKind::PeriodicDoubleWell:
            p.field = std::make_unique<DoubleWellField>(Forcing::Periodic);
            p.domain = make_domain_2d(config.x_min, config.x_max, config.y_min,
                                      config.y_max, config.periodic_x, config.periodic_y);
            break;
        case ModelKind::QuasiPeriodicDoubleWell:
            p.field = std::make_unique<DoubleWellField>(Forcing::QuasiPeriodic, config.gamma);
            p.domain = make_domain_2d(config.x_min, config.x_max, config.y_min,
                                      config.y_max, config.periodic_x, config.periodic_y);
            break;
        case ModelKind::Gridded: {
            auto data = read_gridded_field(config.grid_file);
            auto field = std::make_unique<GriddedField>(std::move(data));
            if (config.t_i < field->time_min() || config.t_f > field->time_max())
                throw ConfigError("gridded model: [t_i, t_F] exceeds the data time range");
            p.domain = make_domain_2d(field->lon_origin(), field->lon_origin() + 360.0,
                                      field->lat_min(), field->lat_max(),
                                      /*x_periodic=*/true, /*y_periodic=*/false);
            p.field = std::move(field);
            break;
        }
    }
    p.partition = make_partition(p.domain, config.bins_x, config.bins_y);
    p.flow = make_flow_spec(*p.field, p.domain, config.tau, config.h);
    if (config.seed_lat_max) {
        p.growing = true;
        p.seed_bins = p.partition.bins_with_center_below(1, *config.seed_lat_max);
        if (p.seed_bins.empty())
            throw ConfigError("growing-domain seeding selects no bins");
    }
    return p;
}

UlamBuildOptions build_options(const ExperimentConfig& config, int threads) {
    UlamBuildOptions o;
    o.Q = config.Q;
    o.seeds = {config.seed_scheme, config.seed};
    o.threads = threads;
    return o;
}

/// Advisory lock: concurrent commands on one output directory are unsupported.
class DirectoryLock {
  public:
    explicit DirectoryLock(const std::string& dir) : path_(fs::path(dir) / ".cstrack.lock") {
        fs::create_directories(dir);
        std::error_code ec;
        if (fs::exists(path_, ec))
            throw ConfigError("output directory is locked (stale " + path_.string() + "?)");
        std::ofstream out(path_);
        if (!out) throw ConfigError("cannot create lock file " + path_.string());
        out << "locked\n";
    }
    ~DirectoryLock() {
        std::error_code ec;
        fs::remove(path_, ec);
    }
    DirectoryLock(const DirectoryLock&) = delete;
    DirectoryLock& operator=(const DirectoryLock&) = delete;

  private:
    fs::path path_;
};

std::vector<UlamMatrix> load_step_matrices(const ExperimentConfig& config) {
    std::vector<UlamMatrix> matrices;
    matrices.reserve(config.steps());
    for (int j = 0; j < config.steps(); ++j) {
        const std::string path = matrix_path(config, j);
        if (!fs::exists(path))
            throw MissingArtifactError("missing matrix file " + path + " (run build)");
        matrices.push_back(read_ulam_matrix(path));
    }
    return matrices;
}

std::vector<UlamMatrix> load_chain(const ExperimentConfig& config, int window) {
    std::vector<UlamMatrix> chain;
    chain.reserve(config.n);
    for (int j = 0; j < config.n; ++j) {
        const std::string path = chain_matrix_path(config, window, j);
        if (!fs::exists(path))
            throw MissingArtifactError("missing matrix file " + path + " (run build)");
        chain.push_back(read_ulam_matrix(path));
    }
    return chain;
}

std::vector<WindowSVD> load_svds(const ExperimentConfig& config) {
    std::vector<WindowSVD> svds;
    svds.reserve(config.windows());
    for (int k = 0; k < config.windows(); ++k) {
        const std::string path = svd_path(config, k);
        if (!fs::exists(path))
            throw MissingArtifactError("missing SVD file " + path + " (run svd)");
        WindowSVD svd = read_window_svd(path);
        svd.k = k;
        svds.push_back(std::move(svd));
    }
    return svds;
}

TrackedPaths load_paths(const ExperimentConfig& config, TrackMethod method) {
    const std::string path = paths_path(config, method);
    if (!fs::exists(path))
        throw MissingArtifactError("missing tracked-paths file " + path + " (run track)");
    return read_tracked_paths(path);
}

}  // namespace

std::string matrix_path(const ExperimentConfig& config, int step) {
    return (fs::path(config.out_dir) / ("P_" + zero_pad(step, 4) + ".ulam")).string();
}

std::string chain_matrix_path(const ExperimentConfig& config, int window, int step) {
    return (fs::path(config.out_dir) /
            ("W" + zero_pad(window, 4) + "_P" + zero_pad(step, 3) + ".ulam"))
        .string();
}

std::string svd_path(const ExperimentConfig& config, int window) {
    return (fs::path(config.out_dir) / ("svd_" + zero_pad(window, 4) + ".svd")).string();
}

std::string paths_path(const ExperimentConfig& config, TrackMethod method) {
    return (fs::path(config.out_dir) / ("paths_" + method_suffix(method) + ".csv")).string();
}

std::string equivariance_path(const ExperimentConfig& config, TrackMethod method) {
    return (fs::path(config.out_dir) / ("equivariance_" + method_suffix(method) + ".csv"))
        .string();
}

std::string frame_path(const ExperimentConfig& config, int window, int mode, int n_tilde,
                       const std::string& ext) {
    return (fs::path(config.out_dir) / ("frame_" + std::to_string(window) + "_" +
                                        std::to_string(mode) + "_" +
                                        std::to_string(n_tilde) + "." + ext))
        .string();
}

std::string coherence_path(const ExperimentConfig& config, int window, int mode) {
    return (fs::path(config.out_dir) /
            ("coherence_" + std::to_string(window) + "_" + std::to_string(mode) + ".csv"))
        .string();
}

void cmd_build(const ExperimentConfig& config, const CommandOptions& options) {
    const Pipeline p = make_pipeline(config);
    const DirectoryLock lock(config.out_dir);
    const UlamBuildOptions opts = build_options(config, effective_threads(options));

    if (!p.growing) {
        for (int j = 0; j < config.steps(); ++j) {
            const std::string path = matrix_path(config, j);
            if (!options.force && fs::exists(path)) continue;
            const UlamMatrix m = build_ulam(p.flow, p.partition, config.t_i + j * config.tau, opts);
            write_ulam_matrix(path, m, config.hash);
        }
        return;
    }

    for (int k = 0; k < config.windows(); ++k) {
        bool complete = true;
        for (int j = 0; j < config.n && complete; ++j)
            complete = fs::exists(chain_matrix_path(config, k, j));
        if (complete && !options.force) continue;
        const auto chain = build_window_chain(p.flow, p.partition,
                                              config.t_i + k * config.tau, config.n,
                                              p.seed_bins, opts);
        for (int j = 0; j < config.n; ++j)
            write_ulam_matrix(chain_matrix_path(config, k, j), chain[j], config.hash);
    }
}

void cmd_svd(const ExperimentConfig& config, const CommandOptions& options) {
    const bool growing = config.seed_lat_max.has_value();
    const DirectoryLock lock(config.out_dir);
    RollingOptions ropts;
    ropts.N = config.N;
    ropts.threads = effective_threads(options);

    std::vector<int> todo;
    for (int k = 0; k < config.windows(); ++k)
        if (options.force || !fs::exists(svd_path(config, k))) todo.push_back(k);
    if (todo.empty()) return;

    if (!growing) {
        const std::vector<UlamMatrix> matrices = load_step_matrices(config);
        if (static_cast<int>(todo.size()) == config.windows()) {
            // Full recompute: let the rolling driver fan windows out to threads.
            const std::vector<WindowSVD> all = rolling_windows(matrices, config.n, ropts);
            for (const WindowSVD& w : all)
                write_window_svd(svd_path(config, w.k), w, config.hash);
        } else {
            for (const int k : todo) {
                std::vector<WindowSVD> one = rolling_windows(
                    std::span<const UlamMatrix>(matrices.data() + k, config.n), config.n,
                    ropts);
                one[0].k = k;
                write_window_svd(svd_path(config, k), one[0], config.hash);
            }
        }
        return;
    }

    for (const int k : todo) {
        const std::vector<UlamMatrix> chain = load_chain(config, k);
        std::vector<std::vector<UlamMatrix>> chains;
        chains.push_back(chain);
        std::vector<WindowSVD> one =
            rolling_windows_chained(std::span<const std::vector<UlamMatrix>>(chains), ropts);
        one[0].k = k;
        write_window_svd(svd_path(config, k), one[0], config.hash);
    }
}

void cmd_track(const ExperimentConfig& config, const CommandOptions& options) {
    const TrackMethod method = options.method.value_or(config.method);
    const bool growing = config.seed_lat_max.has_value();
    if (growing && method == TrackMethod::ByVectors)
        throw ConfigError("tracking by vectors needs a shared bin set; "
                          "growing-domain runs track by values");

    const std::vector<WindowSVD> svds = load_svds(config);
    TrackedPaths paths;
    if (method == TrackMethod::ByValues) {
        paths = track_by_values(svds);
    } else {
        const std::vector<UlamMatrix> matrices = load_step_matrices(config);
        paths = track_by_vectors(svds, matrices);
    }
    const DirectoryLock lock(config.out_dir);
    write_tracked_paths(paths_path(config, method), paths, config.hash);
}

void cmd_equivariance(const ExperimentConfig& config, const CommandOptions& options) {
    const TrackMethod method = options.method.value_or(config.method);
    const std::vector<WindowSVD> svds = load_svds(config);
    const TrackedPaths paths = load_paths(config, method);
    const bool growing = config.seed_lat_max.has_value();

    EquivarianceSeries series;
    if (!growing) {
        series = equivariance_series(svds, paths, config.n);
    } else {
        // Compare on the intersection of the two windows' bin-id sets.
        series.method = paths.method;
        series.first_k = paths.first_k;
        series.n = config.n;
        series.sigma.resize(paths.modes());
        std::vector<std::vector<int>> head_bins(config.windows()), tail_bins(config.windows());
        for (int k = 0; k < config.windows(); ++k) {
            const UlamMatrix first = read_ulam_matrix(chain_matrix_path(config, k, 0));
            const UlamMatrix last = read_ulam_matrix(chain_matrix_path(config, k, config.n - 1));
            head_bins[k] = first.row_bins;
            tail_bins[k] = last.col_bins;
        }
        for (int j = 0; j < paths.modes(); ++j)
            for (int i = 0; i + config.n < static_cast<int>(svds.size()); ++i) {
                const int rank_here = paths.paths[j][i].rank;
                const int rank_next = paths.paths[j][i + config.n].rank;
                series.sigma[j].push_back(equivariance_mismatch(
                    svds[i].V.col(rank_here), tail_bins[i],
                    svds[i + config.n].U.col(rank_next), head_bins[i + config.n]));
            }
    }
    const DirectoryLock lock(config.out_dir);
    write_equivariance_series(equivariance_path(config, method), series, config.hash);
}

void cmd_animate(const ExperimentConfig& config, const CommandOptions& options) {
    if (!options.window || !options.mode)
        throw ConfigError("animate requires --window K and --mode J");
    const int k = *options.window;
    const int mode = *options.mode;
    if (k < 0 || k >= config.windows()) throw ConfigError("animate: window out of range");
    if (mode < 1 || mode > config.N) throw ConfigError("animate: mode out of range");

    const TrackMethod method = options.method.value_or(config.method);
    const bool growing = config.seed_lat_max.has_value();
    const Pipeline p = make_pipeline(config);

    const std::string spath = svd_path(config, k);
    if (!fs::exists(spath))
        throw MissingArtifactError("missing SVD file " + spath + " (run svd)");
    WindowSVD svd = read_window_svd(spath);
    svd.k = k;
    const TrackedPaths paths = load_paths(config, method);
    std::vector<UlamMatrix> matrices;
    if (growing) {
        matrices = load_chain(config, k);
        svd.k = 0;  // the chain is local to this window
    } else {
        matrices = load_step_matrices(config);
    }

    TrackedPaths local = paths;
    if (growing) {
        // Reduce the paths to this window's layer so the mode lookup matches
        // the local chain indexing.
        for (auto& path : local.paths)
            path = {path[k - paths.first_k]};
        local.first_k = 0;
    }

    const ModeFrames frames = animate_mode(
        svd, local, mode, std::span<const UlamMatrix>(matrices.data(), matrices.size()));

    const DirectoryLock lock(config.out_dir);
    for (int nt = 0; nt <= frames.n; ++nt) {
        const RasterFrame raster =
            render_frame(frames.frames[nt].v, p.partition, frames.frame_bins[nt],
                         frames.colour_limit);
        write_frame_csv(frame_path(config, k, mode, nt, "csv"), raster, config.hash);
        write_frame_pgm(frame_path(config, k, mode, nt, "pgm"), raster);
    }
}

void cmd_coherence_log(const ExperimentConfig& config, const CommandOptions& options) {
    if (!options.window || !options.mode)
        throw ConfigError("coherence-log requires --window K and --mode J");
    const int k = *options.window;
    const int mode = *options.mode;
    if (k < 0 || k >= config.windows()) throw ConfigError("coherence-log: window out of range");
    if (mode < 1 || mode > config.N) throw ConfigError("coherence-log: mode out of range");

    const TrackMethod method = options.method.value_or(config.method);
    const bool growing = config.seed_lat_max.has_value();

    const std::string spath = svd_path(config, k);
    if (!fs::exists(spath))
        throw MissingArtifactError("missing SVD file " + spath + " (run svd)");
    const WindowSVD svd = read_window_svd(spath);
    const TrackedPaths paths = load_paths(config, method);
    const PathPoint& pp = paths.paths.at(mode - 1).at(k - paths.first_k);

    std::vector<UlamMatrix> matrices;
    int base = k;
    if (growing) {
        matrices = load_chain(config, k);
        base = 0;
    } else {
        matrices = load_step_matrices(config);
    }

    const Eigen::VectorXd u = svd.U.col(pp.rank) * double(pp.sign);
    std::vector<double> rates;
    for (int nt = 1; nt <= config.n; ++nt)
        rates.push_back(coherence_log(
            u, std::span<const UlamMatrix>(matrices.data(), matrices.size()), base, nt));

    const DirectoryLock lock(config.out_dir);
    write_coherence_log(coherence_path(config, k, mode), mode, k, rates, config.hash);
}

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"Transfer-operator cocycles: rolling-window SVDs, mode tracking and "
                 "merge/split diagnostics"};
    app.require_subcommand(1);

    CommandOptions options;
    std::string method_flag;
    int window = -1, mode = -1;

    const auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", options.config_path, "experiment config file")
            ->required();
        cmd->add_flag("--force", options.force, "rebuild artifacts that already exist");
        cmd->add_option("--threads", options.threads, "worker threads (0 = auto)");
        return cmd;
    };
    const auto add_method = [&](CLI::App* cmd) {
        cmd->add_option("--method", method_flag, "tracking method: values|vectors")
            ->check(CLI::IsMember({"values", "vectors"}));
        return cmd;
    };

    CLI::App* build = add_common(app.add_subcommand("build", "build Ulam matrices"));
    CLI::App* svd = add_common(app.add_subcommand("svd", "rolling-window truncated SVDs"));
    CLI::App* track = add_method(add_common(
        app.add_subcommand("track", "pair modes across windows into paths")));
    CLI::App* equi = add_method(add_common(
        app.add_subcommand("equivariance", "equivariance mismatch of tracked modes")));
    CLI::App* animate = add_method(add_common(
        app.add_subcommand("animate", "evolved-mode frames for one window")));
    animate->add_option("--window", window, "window start index")->required();
    animate->add_option("--mode", mode, "tracked mode (1-based)")->required();
    CLI::App* cohere = add_method(add_common(
        app.add_subcommand("coherence-log", "coherence decay log for one window")));
    cohere->add_option("--window", window, "window start index")->required();
    cohere->add_option("--mode", mode, "tracked mode (1-based)")->required();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    if (!method_flag.empty())
        options.method = method_flag == "values" ? TrackMethod::ByValues
                                                 : TrackMethod::ByVectors;
    if (window >= 0) options.window = window;
    if (mode >= 0) options.mode = mode;

    try {
        const ExperimentConfig config = load_config(options.config_path);
        if (build->parsed()) cmd_build(config, options);
        if (svd->parsed()) cmd_svd(config, options);
        if (track->parsed()) cmd_track(config, options);
        if (equi->parsed()) cmd_equivariance(config, options);
        if (animate->parsed()) cmd_animate(config, options);
        if (cohere->parsed()) cmd_coherence_log(config, options);
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const MissingArtifactError& e) {
        std::cerr << "missing artifact: " << e.what() << "\n";
        return 3;
    } catch (const FormatError& e) {
        std::cerr << "artifact error: " << e.what() << "\n";
        return 3;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 4;
    }
}

}  // namespace cstrack
