#include <cstdlib>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "ietagc/config.hpp"
#include "ietagc/errors.hpp"
#include "oracles.hpp"

using namespace ietagc;

namespace {

std::filesystem::path write_conf(const std::string& name,
                                 const std::string& body) {
  const auto dir = oracle::temp_dir("config_" + name);
  const auto path = dir / "test.conf";
  std::ofstream out(path);
  out << body;
  return path;
}

}  // namespace

TEST_CASE("config files parse keys, values, comments and blank lines") {
  const auto path = write_conf("parse",
                               "# experiment setup\n"
                               "\n"
                               "iet.k = 10\n"
                               "train.eta=0.001\n"
                               "  data.kind =  mixture  \n"
                               "audit.thresholds = 0.4, 0.5, 0.6\n"
                               "train.method = agc\n");
  const Config c = Config::from_file(path.string());
  CHECK(c.values().size() == 5);
  CHECK(c.get_int("iet.k", 0) == 10);
  CHECK(c.get_double("train.eta", 0.0) == 0.001);
  CHECK(c.get_string("data.kind", "") == "mixture");
  CHECK(c.get_string("train.method", "") == "agc");
  CHECK(c.get_double_list("audit.thresholds", {}) ==
        std::vector<double>{0.4, 0.5, 0.6});
  CHECK(c.has("iet.k"));
  CHECK_FALSE(c.has("iet.K"));  // keys are case-sensitive
}

TEST_CASE("config parse errors carry the file name and line number") {
  const auto bad = write_conf("badline", "iet.k = 4\nno equals sign here\n");
  try {
    Config::from_file(bad.string());
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find(":2") != std::string::npos);
    CHECK(msg.find("test.conf") != std::string::npos);
  }

  const auto empty_key = write_conf("emptykey", " = 7\n");
  CHECK_THROWS_AS(Config::from_file(empty_key.string()), ConfigError);
  CHECK_THROWS_AS(Config::from_file("/nonexistent/nowhere.conf"), IoError);
}

TEST_CASE("typed getters: defaults, conversions and error messages") {
  Config c;
  c.set("i", "42");
  c.set("neg", "-7");
  c.set("f", "2.5e-3");
  c.set("b1", "true");
  c.set("b2", "OFF");
  c.set("s", "hello");
  c.set("list", "1.5,2.5 , 3.5");
  c.set("junk", "12abc");

  CHECK(c.get_int("i", 0) == 42);
  CHECK(c.get_int("missing", 9) == 9);
  CHECK(c.get_int64("neg", 0) == -7);
  CHECK(c.get_uint64("i", 0) == 42);
  CHECK(c.get_double("f", 0.0) == 2.5e-3);
  CHECK(c.get_bool("b1", false));
  CHECK_FALSE(c.get_bool("b2", true));
  CHECK(c.get_bool("missing", true));
  CHECK(c.get_string("s", "") == "hello");
  CHECK(c.get_double_list("list", {}) == std::vector<double>{1.5, 2.5, 3.5});
  CHECK(c.get_double_list("missing", {7.0}) == std::vector<double>{7.0});

  CHECK_THROWS_AS(c.get_int("junk", 0), ConfigError);
  CHECK_THROWS_AS(c.get_int("f", 0), ConfigError);  // "2.5e-3" not an integer
  CHECK_THROWS_AS(c.get_uint64("neg", 0), ConfigError);
  CHECK_THROWS_AS(c.get_double("s", 0.0), ConfigError);
  CHECK_THROWS_AS(c.get_bool("s", false), ConfigError);
  CHECK_THROWS_AS(c.get_double_list("s", {}), ConfigError);
  c.set("gap", "1.0,,2.0");
  CHECK_THROWS_AS(c.get_double_list("gap", {}), ConfigError);

  // Bad-value errors name the key and the offending value.
  try {
    c.get_int("junk", 0);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("junk") != std::string::npos);
    CHECK(msg.find("12abc") != std::string::npos);
  }

  CHECK_THROWS_AS(c.set("", "x"), ConfigError);
}

TEST_CASE("env_name maps dots to double underscores and uppercases") {
  CHECK(Config::env_name("iet.k") == "IETAGC_IET__K");
  CHECK(Config::env_name("train.eta") == "IETAGC_TRAIN__ETA");
  CHECK(Config::env_name("seed") == "IETAGC_SEED");
  CHECK(Config::env_name("iet.k", "X_") == "X_IET__K");
}

TEST_CASE("merge_env picks up prefixed variables and overrides file values") {
  const auto path = write_conf("envmerge", "iet.k = 2\ntrain.eta = 0.5\n");
  REQUIRE(setenv("IETAGC_IET__K", "8", 1) == 0);
  REQUIRE(setenv("IETAGC_DATA__KIND", "patterns", 1) == 0);
  REQUIRE(setenv("NOT_OURS", "ignored", 1) == 0);

  Config c = Config::from_file(path.string());
  c.merge_env();
  CHECK(c.get_int("iet.k", 0) == 8);            // env wins over file
  CHECK(c.get_double("train.eta", 0.0) == 0.5);  // untouched
  CHECK(c.get_string("data.kind", "") == "patterns");
  CHECK_FALSE(c.has("not_ours"));

  unsetenv("IETAGC_IET__K");
  unsetenv("IETAGC_DATA__KIND");
  unsetenv("NOT_OURS");

  Config fresh;
  fresh.merge_env();
  CHECK_FALSE(fresh.has("iet.k"));
  CHECK_FALSE(fresh.has("data.kind"));
}

TEST_CASE("set() overrides merged values (flag precedence)") {
  const auto path = write_conf("precedence", "train.eta = 0.5\n");
  Config c = Config::from_file(path.string());
  c.set("train.eta", "0.25");
  CHECK(c.get_double("train.eta", 0.0) == 0.25);
}

TEST_CASE("check_known rejects unknown keys by name") {
  Config c;
  c.set("iet.k", "4");
  c.set("iet.kk", "4");  // typo
  try {
    c.check_known({"iet.k", "train.eta"});
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("iet.kk") != std::string::npos);
  }
  Config ok;
  ok.set("iet.k", "4");
  CHECK_NOTHROW(ok.check_known({"iet.k"}));
}

TEST_CASE("merge_file layers later files over earlier ones") {
  const auto base = write_conf("layer_base", "a = 1\nb = 2\n");
  const auto top = write_conf("layer_top", "b = 20\nc = 30\n");
  Config c = Config::from_file(base.string());
  c.merge_file(top.string());
  CHECK(c.get_int("a", 0) == 1);
  CHECK(c.get_int("b", 0) == 20);
  CHECK(c.get_int("c", 0) == 30);
}
