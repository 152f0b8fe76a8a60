#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "hlsim/cli.hpp"
#include "hlsim/diagnostics.hpp"
#include "hlsim/io.hpp"

using namespace hlsim;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

int cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  return run_cli(args, out, err);
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("hlsim_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

json load(const fs::path& p) {
  std::ifstream in(p);
  return json::parse(in);
}

}  // namespace

TEST_SUITE("io") {
  TEST_CASE("17 significant digits round-trip") {
    for (double x : {0.1, 1.0 / 3.0, 6.02214076e23, -2.5e-300, 4.9e-324}) {
      CHECK(std::strtod(format_real(x).c_str(), nullptr) == x);
    }
    CHECK(format_real(std::nan("")) == "nan");
  }
}

TEST_SUITE("cli") {
  TEST_CASE("argument and configuration errors exit with 2") {
    CHECK(cli({"model1", "run", "--K", "0", "--out", scratch("k0").string()}) == kExitConfig);
    CHECK(cli({"model2", "run", "--L", "5", "--delta", "0.3", "--out", scratch("l5").string()}) == kExitConfig);
    CHECK(cli({"model1", "run", "--bogus", "1"}) == kExitConfig);
    CHECK(cli({}) == kExitConfig);
    CHECK(cli({"--help"}) == kExitOk);
    const fs::path empty = scratch("empty");
    fs::create_directories(empty);
    CHECK(cli({"report", empty.string()}) == kExitConfig);
    CHECK(cli({"report", (empty / "missing").string()}) == kExitConfig);
  }

  TEST_CASE("model1 run writes consistent outputs") {
    const fs::path dir = scratch("m1");
    REQUIRE(cli({"model1", "run", "--K", "1.0", "--t-end", "1e4", "--tol", "1e-9", "--out", dir.string()}) == kExitOk);
    CHECK(fs::exists(dir / "timeseries.csv"));
    CHECK(fs::exists(dir / "audits.csv"));
    const json s = load(dir / "summary.json");
    CHECK(s["violations"] == 0);
    CHECK(s["regime_sequence_ok"] == true);
    CHECK(s["B_exponent"]["slope"].get<double>() == doctest::Approx(1.0).epsilon(0.05));
    CHECK(s["blowup_trend"].contains("none"));

    const CsvTable t = read_csv(dir / "timeseries.csv");
    std::string header;
    for (const auto& h : t.header) header += (header.empty() ? "" : ",") + h;
    CHECK(header == kProfileCsvHeader);

    // Summary values follow from the CSV alone.
    const TimeSeries series = series_from_csv(t, {"A", "B"});
    const auto fit = fit_power_law(series, "B", {s["B_exponent"]["t_lo"], s["B_exponent"]["t_hi"]});
    CHECK(std::abs(fit.slope - s["B_exponent"]["slope"].get<double>()) <= 1e-12);
    CHECK(std::abs(fit.r_squared - s["B_exponent"]["r_squared"].get<double>()) <= 1e-12);
    const auto tail = boundedness_window(series, 1.0, {s["tail"]["t_lo"], s["tail"]["t_hi"]});
    CHECK(std::abs(tail.sup - s["tail"]["sup"].get<double>()) <= 1e-12);
    CHECK(std::abs(tail.inf - s["tail"]["inf"].get<double>()) <= 1e-12);

    CHECK(cli({"report", dir.string()}) == kExitOk);
    CHECK(fs::file_size(dir / "B_loglog.svg") > 0);
    CHECK(slurp(dir / "B_loglog.svg").find("<svg") != std::string::npos);
  }

  TEST_CASE("config file supplies defaults and flags override it") {
    const fs::path dir = scratch("cfg");
    fs::create_directories(dir);
    {
      std::ofstream cfg(dir / "run.json");
      cfg << R"({"K": 1.3, "t_end": 50, "out": ")" << (dir / "from_file").string() << R"("})";
    }
    REQUIRE(cli({"model1", "run", "--config", (dir / "run.json").string(), "--t-end", "20"}) == kExitOk);
    const json s = load(dir / "from_file" / "summary.json");
    CHECK(s["K"].get<double>() == 1.3);
    CHECK(s["t_end"].get<double>() == 20.0);
    {
      std::ofstream cfg(dir / "bad.json");
      cfg << R"({"no_such_flag": 3})";
    }
    CHECK(cli({"model1", "run", "--config", (dir / "bad.json").string()}) == kExitConfig);
    CHECK(cli({"model1", "run", "--config", (dir / "absent.json").string()}) == kExitConfig);
  }

  TEST_CASE("model1 sweep") {
    const fs::path dir = scratch("sweep");
    REQUIRE(cli({"model1", "sweep", "--K", "1.0,1.3", "--t-end", "1e4", "--out", dir.string()}) == kExitOk);
    const json s = load(dir / "sweep_summary.json");
    CHECK(s["runs"].size() == 2);
    CHECK(s["exponents_follow_K"] == true);
    CHECK(cli({"report", dir.string()}) == kExitOk);
  }

  TEST_CASE("model2 run, report and thread-count determinism") {
    const fs::path a = scratch("m2a"), b = scratch("m2b");
    const std::vector<std::string> base{"model2", "run", "--nx", "32", "--ny", "32", "--stop-Q", "0.5", "--t-max", "1"};
    auto with = [&](const fs::path& out, const char* threads) {
      auto v = base;
      v.insert(v.end(), {"--out", out.string(), "--threads", threads});
      return v;
    };
    REQUIRE(cli(with(a, "1")) == kExitOk);
    REQUIRE(cli(with(b, "4")) == kExitOk);
    CHECK(slurp(a / "timeseries.csv") == slurp(b / "timeseries.csv"));
    const json s = load(a / "summary.json");
    CHECK(s["status"] == "blowup");
    CHECK(s["final"]["Q"].get<double>() >= 0.5);
    const CsvTable t = read_csv(a / "timeseries.csv");
    std::string header;
    for (const auto& h : t.header) header += (header.empty() ? "" : ",") + h;
    CHECK(header == kBoundaryCsvHeader);
    CHECK(t.numeric("Q").back() == s["final"]["Q"].get<double>());
    CHECK(cli({"report", a.string()}) == kExitOk);
    CHECK(fs::file_size(a / "invQ.svg") > 0);
  }

  TEST_CASE("model2 audit-strict") {
    CHECK(cli({"model2", "audit-strict", "--delta", "0.01", "--L", "50"}) == kExitViolation);
  }
}
