#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "blowctl/diagnostics.hpp"
#include "blowctl/grid.hpp"
#include "blowctl/initial_data.hpp"
#include "blowctl/pde_sim.hpp"

namespace blowctl {

/// Shortest round-trippable decimal form of a double ("%.17g").
std::string fmt_double(double v);

void write_text_file(const std::filesystem::path& path, const std::string& content);

/// Field as two columns x,y.
void write_field_csv(const std::filesystem::path& path, const Grid& grid,
                     std::span<const double> y);
std::vector<double> read_field_csv(const std::filesystem::path& path, const Grid& grid);

/// Trajectory checkpoints: header "t,<x_0>,...,<x_{n-1}>", one row per
/// checkpoint with the full field.
void write_trajectory_csv(const std::filesystem::path& path, const Grid& grid,
                          const std::vector<Checkpoint>& trajectory);
std::vector<Checkpoint> read_trajectory_csv(const std::filesystem::path& path, const Grid& grid);

void write_sup_series_csv(const std::filesystem::path& path,
                          const std::vector<SupSample>& series);
std::vector<SupSample> read_sup_series_csv(const std::filesystem::path& path);

void write_membership_csv(const std::filesystem::path& path,
                          const std::vector<MembershipRow>& rows);

void write_region_csv(const std::filesystem::path& path,
                      const std::vector<RegionCheckRow>& rows);

void write_profile_error_csv(const std::filesystem::path& path,
                             const std::vector<ProfileErrorSample>& samples);

}  // namespace blowctl
