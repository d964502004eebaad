#ifndef CSTRACK_COMMANDS_HPP
#define CSTRACK_COMMANDS_HPP

#include <optional>
#include <string>
#include <vector>

#include "cstrack/config.hpp"

namespace cstrack {

struct CommandOptions {
    std::string config_path;
    bool force = false;
    int threads = 0;  // 0 = hardware concurrency
    std::optional<TrackMethod> method;
    std::optional<int> window;
    std::optional<int> mode;
};

void cmd_build(const ExperimentConfig& config, const CommandOptions& options);
void cmd_svd(const ExperimentConfig& config, const CommandOptions& options);
void cmd_track(const ExperimentConfig& config, const CommandOptions& options);
void cmd_equivariance(const ExperimentConfig& config, const CommandOptions& options);
void cmd_animate(const ExperimentConfig& config, const CommandOptions& options);
void cmd_coherence_log(const ExperimentConfig& config, const CommandOptions& options);

/// Artifact paths inside the configured output directory.
std::string matrix_path(const ExperimentConfig& config, int step);
std::string chain_matrix_path(const ExperimentConfig& config, int window, int step);
std::string svd_path(const ExperimentConfig& config, int window);
std::string paths_path(const ExperimentConfig& config, TrackMethod method);
std::string equivariance_path(const ExperimentConfig& config, TrackMethod method);
std::string frame_path(const ExperimentConfig& config, int window, int mode, int n_tilde,
                       const std::string& ext);
std::string coherence_path(const ExperimentConfig& config, int window, int mode);

/// Full argv-style entry point: parses arguments, runs one subcommand, maps
/// errors to exit codes (0 ok, 2 config, 3 missing artifact, 4 numerical).
int run_cli(const std::vector<std::string>& args);

}  // namespace cstrack

#endif
