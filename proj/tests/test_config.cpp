#include "abcnn/config.hpp"

#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

using namespace abcnn;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("defaults encode the reference experiment settings") {
  const auto cfg = config_from_overrides({"model = ising"});
  CHECK(cfg.ising_m == 10);
  CHECK(cfg.prior_rate == doctest::Approx(0.4406));
  CHECK(cfg.scaled_n_train() == 1000000);
  CHECK(cfg.scaled_n_val() == 100000);
  CHECK(cfg.scaled_n_test() == 100000);
  CHECK(cfg.nn_epochs == 200);
  CHECK(cfg.effective_abc_proposals() == 1000000);
  CHECK(cfg.effective_semiauto_basis() == "raw");
  CHECK(cfg.layer_sizes() == std::vector<Eigen::Index>{100, 100, 100, 100, 1});

  const auto ma2 = config_from_overrides({"model = ma2"});
  CHECK(ma2.ma2_p == 100);
  CHECK(ma2.effective_abc_proposals() == 100000);
  CHECK(ma2.effective_semiauto_basis() == "poly4");
  CHECK(ma2.layer_sizes() == std::vector<Eigen::Index>{100, 100, 100, 100, 2});
}

TEST_CASE("scale shrinks the dataset sizes") {
  const auto cfg = config_from_overrides({"model = ma2", "scale = 0.1"});
  CHECK(cfg.scaled_n_train() == 100000);
  CHECK(cfg.scaled_n_val() == 10000);
  CHECK(cfg.scaled_n_test() == 10000);
}

TEST_CASE("config file parsing with comments and overrides") {
  const std::string path = temp_path("abcnn_cfg.txt");
  {
    std::ofstream out(path, std::ios::trunc);
    out << "# experiment\n"
        << "model = ma2\n"
        << "nn.epochs = 50   # desk scale\n"
        << "data.n_train = 2000\n";
  }
  const auto cfg = load_config(path, {"nn.epochs = 25"});
  CHECK(cfg.model == "ma2");
  CHECK(cfg.nn_epochs == 25);  // override wins
  CHECK(cfg.n_train == 2000);
  std::remove(path.c_str());
}

TEST_CASE("usage errors carry the offending field") {
  CHECK_THROWS_WITH_AS(config_from_overrides({"model = ma2", "data.n_train = 0"}),
                       doctest::Contains("n_train"), usage_error);
  CHECK_THROWS_WITH_AS(config_from_overrides({"model = frog"}), doctest::Contains("model"),
                       usage_error);
  CHECK_THROWS_WITH_AS(config_from_overrides({"model = ma2", "nn.method = cnn"}),
                       doctest::Contains("nn.method"), usage_error);
  CHECK_THROWS_WITH_AS(config_from_overrides({"model = ma2", "bogus.key = 1"}),
                       doctest::Contains("unknown key"), usage_error);
  CHECK_THROWS_AS(config_from_overrides({}), usage_error);  // model is required
}

TEST_CASE("ffnn forces a single hidden layer") {
  const auto cfg = config_from_overrides({"model = ising", "nn.method = ffnn"});
  CHECK(cfg.layer_sizes() == std::vector<Eigen::Index>{100, 100, 1});
}

TEST_CASE("config hash is stable, order-insensitive and observation-independent") {
  const auto a = config_from_overrides({"model = ma2", "nn.epochs = 50", "seed = 9"});
  const auto b = config_from_overrides({"seed = 9", "nn.epochs = 50", "model = ma2"});
  CHECK(a.config_hash() == b.config_hash());
  CHECK(a.stamp() == b.stamp());

  const auto c = config_from_overrides(
      {"model = ma2", "nn.epochs = 50", "seed = 9", "obs.theta = 0.6,0.2", "obs.seed = 123"});
  CHECK(c.config_hash() == a.config_hash());  // replicates share the experiment hash

  const auto d = config_from_overrides({"model = ma2", "nn.epochs = 51", "seed = 9"});
  CHECK(d.config_hash() != a.config_hash());
}
