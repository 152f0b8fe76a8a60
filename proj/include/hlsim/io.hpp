#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "hlsim/boundary_layer.hpp"
#include "hlsim/diagnostics.hpp"
#include "hlsim/profile_model.hpp"

namespace hlsim {

// Shortest form is not needed; 17 significant digits round-trip exactly.
std::string format_real(double x);

inline constexpr const char* kProfileCsvHeader =
    "t,A,B,dA,dB,regime,core_margin,ratio_margin,ineq1_margin,ineq2_margin";
inline constexpr const char* kBoundaryCsvHeader =
    "t,J,D,Q,H,E,max_omega,box_margin,jchain_margin,jchain_applicable";

struct ProfileAuditedSample {
  ProfileSample sample;
  Regime regime = Regime::InitialI;
  std::vector<AuditReport> audits;
};

void write_profile_csv(const std::filesystem::path& path, const std::vector<ProfileAuditedSample>& rows);
void write_audit_csv(const std::filesystem::path& path, const std::vector<ProfileAuditedSample>& rows);
void write_boundary_csv(const std::filesystem::path& path, const std::vector<RunSample>& samples);
void write_final_state_csv(const std::filesystem::path& path, const ParticleGrid& grid);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column_index(const std::string& name) const;
  std::vector<double> numeric(const std::string& name) const;
};

CsvTable read_csv(const std::filesystem::path& path);

// TimeSeries over the named numeric columns, keyed by column "t".
TimeSeries series_from_csv(const CsvTable& table, const std::vector<std::string>& fields);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace hlsim
