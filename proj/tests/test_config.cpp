#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "atomreg/atomreg.hpp"

using namespace atomreg;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::string error_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Config, ShippedDefaultsMatchBuiltIns) {
  const Config parsed = parse_config(slurp(ATOMREG_DEFAULTS_CFG));
  EXPECT_EQ(write_config(parsed), write_config(Config{}));
}

TEST(Config, WriteRoundTrips) {
  Config cfg;
  cfg.photon.threshold = 3;
  cfg.hiding.suppression_points = {{0.0, 1.0}, {0.4, 5.2}, {1.0, 20.0}};
  cfg.error_scaling.distances = {3, 7};
  cfg.search.placement = Placement::IndependentPerSite;
  const std::string text = write_config(cfg);
  EXPECT_EQ(write_config(parse_config(text)), text);
}

TEST(Config, UnknownKeyReportsLine) {
  std::string text = write_config(Config{});
  text = "[register]\nbogus = 1\n" + text;
  const std::string err = error_of(text);
  EXPECT_NE(err.find("line 2"), std::string::npos) << err;
  EXPECT_NE(err.find("bogus"), std::string::npos) << err;
}

TEST(Config, MissingKeyIsReported) {
  std::string text = write_config(Config{});
  const auto pos = text.find("tau_vacuum_ms");
  text.erase(pos, text.find('\n', pos) - pos + 1);
  const std::string err = error_of(text);
  EXPECT_NE(err.find("missing key [register] tau_vacuum_ms"), std::string::npos) << err;
}

TEST(Config, BadValueReportsLine) {
  const std::string good = write_config(Config{});
  std::string text = good;
  const auto pos = text.find("tau_depump_ms = ");
  text.replace(pos, text.find('\n', pos) - pos, "tau_depump_ms = fast");
  const int line = 1 + static_cast<int>(std::count(text.begin(), text.begin() + pos, '\n'));
  const std::string err = error_of(text);
  EXPECT_NE(err.find("line " + std::to_string(line)), std::string::npos) << err;
}

TEST(Config, DuplicateKeyRejected) {
  const std::string err = error_of("[register]\nspacing_um = 17\nspacing_um = 18\n");
  EXPECT_NE(err.find("duplicate"), std::string::npos) << err;
}

TEST(Config, ProbeWithoutTableRowRejected) {
  std::string text = write_config(Config{});
  const auto pos = text.find("detuning_pc_MHz = -5");
  text.replace(pos, std::string("detuning_pc_MHz = -5").size(), "detuning_pc_MHz = -7");
  EXPECT_NE(error_of(text).find("no measurement error table row"), std::string::npos);
}
