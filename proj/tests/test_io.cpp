#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <chrono>
#include <filesystem>

#include "mbde/booster.hpp"
#include "mbde/io.hpp"
#include "mbde/rng.hpp"
#include "mbde/targets.hpp"

using namespace mbde;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
    path = fs::temp_directory_path() / ("mbde_io_test_" + std::to_string(stamp));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

}  // namespace

TEST_CASE("double formatting round-trips") {
  RngStream rng(1);
  for (int i = 0; i < 1000; ++i) {
    const double v = (rng.uniform() - 0.5) * std::pow(10.0, 30.0 * (rng.uniform() - 0.5));
    CHECK(parse_double(format_double(v)) == v);
  }
  CHECK_THROWS_AS(parse_double("1,5"), std::invalid_argument);
  CHECK_THROWS_AS(parse_double("abc"), std::invalid_argument);
}

TEST_CASE("dataset CSV round trip") {
  TempDir tmp;
  SUBCASE("one dimension") {
    const auto d = sample_target(make_1d_mixture(), 500, 3);
    write_dataset_csv(d, tmp.path / "d1.csv");
    const auto back = read_dataset_csv(tmp.path / "d1.csv");
    REQUIRE(back.dim == 1);
    REQUIRE(back.size() == d.size());
    for (std::size_t i = 0; i < d.size(); ++i) CHECK(back.points[i][0] == d.points[i][0]);

    const std::string text = read_text(tmp.path / "d1.csv");
    CHECK(text.rfind("x0\n", 0) == 0);
  }

  SUBCASE("two dimensions") {
    const auto d = sample_target(make_ring(4, 1.0, 0.01), 300, 5);
    write_dataset_csv(d, tmp.path / "d2.csv");
    const auto back = read_dataset_csv(tmp.path / "d2.csv");
    REQUIRE(back.dim == 2);
    for (std::size_t i = 0; i < d.size(); ++i) {
      CHECK(back.points[i][0] == d.points[i][0]);
      CHECK(back.points[i][1] == d.points[i][1]);
    }
    CHECK(read_text(tmp.path / "d2.csv").rfind("x0,x1\n", 0) == 0);
  }

  SUBCASE("bad header is rejected") {
    write_text("a,b\n1,2\n", tmp.path / "bad.csv");
    CHECK_THROWS_AS(read_dataset_csv(tmp.path / "bad.csv"), std::runtime_error);
  }

  SUBCASE("ragged rows are rejected") {
    write_text("x0,x1\n1.0\n", tmp.path / "ragged.csv");
    CHECK_THROWS_AS(read_dataset_csv(tmp.path / "ragged.csv"), std::runtime_error);
  }
}

TEST_CASE("target JSON round trip") {
  const auto t = make_ring(8, 3.0, 0.0025);
  const auto back = target_from_json(to_json(t));
  REQUIRE(back.components.size() == t.components.size());
  for (std::size_t j = 0; j < t.components.size(); ++j) {
    CHECK(back.components[j].weight == t.components[j].weight);
    CHECK(back.components[j].mean == t.components[j].mean);
    CHECK(back.components[j].variance == t.components[j].variance);
  }
}

TEST_CASE("classifier JSON round trip is bitwise") {
  const auto c = init_classifier(2, 77);
  const auto back = classifier_from_json(to_json(c));
  CHECK(back.widths == c.widths);
  REQUIRE(back.params.size() == c.params.size());
  for (std::size_t k = 0; k < c.params.size(); ++k) CHECK(back.params[k] == c.params[k]);
  CHECK(back.c_star == c.c_star);
}

TEST_CASE("model JSON round trip preserves the density") {
  BoostConfig cfg;
  cfg.eps = 1.0;
  cfg.T = 2;
  cfg.n_train = 300;
  cfg.n_mc_phi = 5000;
  cfg.seed = 9;
  cfg.train.epochs = 40;
  cfg.mcmc.burn_in = 200;
  cfg.mcmc.thinning = 3;
  cfg.mcmc.n_chains = 2;
  const auto model = boost(make_1d_mixture(), cfg);

  const auto back = model_from_json(to_json(model));
  CHECK(back.eps() == model.eps());
  CHECK(back.rounds() == model.rounds());
  CHECK(back.phi_hat == model.phi_hat);
  RngStream rng(13);
  for (int i = 0; i < 50; ++i) {
    const Point x = {4.0 * rng.normal()};
    CHECK(std::abs(back.log_density(x) - model.log_density(x)) <= 1e-12);
  }

  // Serialization itself is deterministic.
  CHECK(to_json(model).dump() == to_json(model).dump());
}

TEST_CASE("ledger JSON round trip") {
  PrivacyLedger l{1e-4, 12345, 1e-4 * 12345.0};
  const auto back = ledger_from_json(to_json(l));
  CHECK(back.eps_per_sample == l.eps_per_sample);
  CHECK(back.released == l.released);
  CHECK(back.spent == l.spent);
}

TEST_CASE("wla report JSON round trip") {
  WlaReport w{0.8, 0.6, 0.55, Regime::high};
  const auto back = wla_from_json(to_json(w));
  CHECK(back.gamma_p == w.gamma_p);
  CHECK(back.gamma_q == w.gamma_q);
  CHECK(back.c_star == w.c_star);
  CHECK(back.regime == w.regime);
  CHECK_THROWS_AS(regime_from_name("bogus"), std::invalid_argument);
}
