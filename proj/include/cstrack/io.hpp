#ifndef CSTRACK_IO_HPP
#define CSTRACK_IO_HPP

#include <string>

#include "cstrack/diagnostics.hpp"
#include "cstrack/fields.hpp"
#include "cstrack/tracking.hpp"

namespace cstrack {

/// Every writer prepends "# config <provenance>" when a provenance string is
/// given; readers skip leading # lines.

/// Ulam matrix file: header "ULAM m m' Q t tau", then one "row col weight"
/// triplet per line (0-based, rows sorted lexicographically, weights as exact
/// decimals k/Q with 12 significant digits). When the matrix carries
/// non-identity bin-id lists a companion "<path>.bins" file stores them.
void write_ulam_matrix(const std::string& path, const UlamMatrix& m,
                       const std::string& provenance = {});
UlamMatrix read_ulam_matrix(const std::string& path);

/// Window SVD file: header "SVD t0 n N m m'", then N lines "j s_j", then U as
/// N columns of m rows, then V as N columns of m' rows, 17 significant digits.
void write_window_svd(const std::string& path, const WindowSVD& svd,
                      const std::string& provenance = {});
WindowSVD read_window_svd(const std::string& path);

/// Tracked paths: CSV with columns method,mode,k,rank,value,sign
/// (mode and rank are 1-based).
void write_tracked_paths(const std::string& path, const TrackedPaths& paths,
                         const std::string& provenance = {});
TrackedPaths read_tracked_paths(const std::string& path);

/// Equivariance series: CSV with columns method,mode,k,sigma.
void write_equivariance_series(const std::string& path, const EquivarianceSeries& s,
                               const std::string& provenance = {});

/// Frame rasters: CSV grid (rows = y bins top-down, columns = x bins) and an
/// 8-bit greyscale PGM twin with symmetric colour limits.
void write_frame_csv(const std::string& path, const RasterFrame& frame,
                     const std::string& provenance = {});
RasterFrame read_frame_csv(const std::string& path);
void write_frame_pgm(const std::string& path, const RasterFrame& frame);

/// Coherence-decay log: CSV with columns mode,k,n_t,rate.
void write_coherence_log(const std::string& path, int mode, int k,
                         const std::vector<double>& rates,
                         const std::string& provenance = {});

/// Gridded field container: four text header lines
///   lon0 dlon nlon / lat0 dlat nlat / t0 dt nt / radius_m
/// followed by nt*nlat*nlon rows of "u v" (m/s) in row-major (t, lat, lon)
/// order. Readers reject shape mismatches.
void write_gridded_field(const std::string& path, const GriddedFieldData& data,
                         const std::string& provenance = {});
GriddedFieldData read_gridded_field(const std::string& path);

}  // namespace cstrack

#endif
