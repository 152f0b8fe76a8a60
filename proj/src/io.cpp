#include "hlsim/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace hlsim {

std::string format_real(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

double margin_of(const std::vector<AuditReport>& audits, const std::string& name) {
  for (const auto& a : audits) {
    if (a.check_name == name) return a.applicable ? a.margin : std::nan("");
  }
  return std::nan("");
}

}  // namespace

void write_profile_csv(const std::filesystem::path& path, const std::vector<ProfileAuditedSample>& rows) {
  auto out = open_out(path);
  out << kProfileCsvHeader << '\n';
  for (const auto& r : rows) {
    const auto& s = r.sample;
    out << format_real(s.state.t) << ',' << format_real(s.state.A) << ',' << format_real(s.state.B) << ','
        << format_real(s.dA) << ',' << format_real(s.dB) << ',' << to_string(r.regime) << ','
        << format_real(margin_of(r.audits, "core")) << ',' << format_real(margin_of(r.audits, "ratio")) << ','
        << format_real(margin_of(r.audits, "ineq_1")) << ',' << format_real(margin_of(r.audits, "ineq_2"))
        << '\n';
  }
}

void write_audit_csv(const std::filesystem::path& path, const std::vector<ProfileAuditedSample>& rows) {
  auto out = open_out(path);
  out << "t,check,margin,violated,applicable,exploratory\n";
  for (const auto& r : rows) {
    for (const auto& a : r.audits) {
      out << format_real(a.time) << ',' << a.check_name << ',' << format_real(a.margin) << ',' << int(a.violated)
          << ',' << int(a.applicable) << ',' << int(a.exploratory) << '\n';
    }
  }
}

void write_boundary_csv(const std::filesystem::path& path, const std::vector<RunSample>& samples) {
  auto out = open_out(path);
  out << kBoundaryCsvHeader << '\n';
  for (const auto& s : samples) {
    const auto& q = s.gq;
    out << format_real(q.t) << ',' << format_real(q.J) << ',' << format_real(q.D) << ',' << format_real(q.Q) << ','
        << format_real(q.H) << ',' << format_real(q.E) << ',' << format_real(s.max_omega) << ','
        << format_real(s.box.margin) << ',' << format_real(s.jchain.margin) << ',' << int(s.jchain.applicable)
        << '\n';
  }
}

void write_final_state_csv(const std::filesystem::path& path, const ParticleGrid& grid) {
  auto out = open_out(path);
  out << "x1,x2,U,omega\n";
  for (std::size_t k = 0; k < grid.size(); ++k) {
    out << format_real(grid.label_x1(k)) << ',' << format_real(grid.label_x2(k)) << ',' << format_real(grid.U[k])
        << ',' << format_real(grid.omega[k]) << '\n';
  }
}

std::size_t CsvTable::column_index(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw std::out_of_range("CSV has no column " + name);
}

std::vector<double> CsvTable::numeric(const std::string& name) const {
  const std::size_t c = column_index(name);
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(std::strtod(r.at(c).c_str(), nullptr));
  return out;
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty CSV " + path.string());
  t.header = split(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split(line);
    if (cells.size() != t.header.size()) throw std::runtime_error("ragged CSV row in " + path.string());
    t.rows.push_back(std::move(cells));
  }
  return t;
}

TimeSeries series_from_csv(const CsvTable& table, const std::vector<std::string>& fields) {
  TimeSeries s(fields);
  const auto t = table.numeric("t");
  std::vector<std::vector<double>> cols;
  for (const auto& f : fields) cols.push_back(table.numeric(f));
  std::vector<double> row(fields.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    for (std::size_t c = 0; c < fields.size(); ++c) row[c] = cols[c][i];
    s.append(t[i], row);
  }
  return s;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  auto out = open_out(path);
  out << text;
}

}  // namespace hlsim
