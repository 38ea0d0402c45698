#include <doctest.h>

#include <fstream>

#include "fixtures.hpp"
#include "shapemc/config.hpp"
#include "shapemc/error.hpp"

using namespace shapemc;

TEST_CASE("defaults") {
  const ResolvedConfig c;
  CHECK(c.run.chain.n_iters == 300);
  CHECK(c.run.chain.gamma == 5);
  CHECK(c.run.chain.reinit_period == 10);
  CHECK(c.run.chain.beta_shape == 1.0);
  CHECK(c.run.chain.chan_vese.epsilon == 1.5);
  CHECK(c.run.chain.target_mode == TargetMode::full);
  CHECK(c.run.chain.reverse_eval == ReverseEval::candidate);
  CHECK_FALSE(c.sigma.has_value());
  CHECK(c.baseline);
}

TEST_CASE("settings apply by key") {
  ResolvedConfig c;
  apply_settings(c, {{"iters", "50"},
                     {"gamma", "3"},
                     {"sigma", "12.5"},
                     {"beta-shape", "100"},
                     {"target", "shape-only"},
                     {"seed", "18446744073709551615"},
                     {"reverse-eval", "literal"},
                     {"local-priors", "true"},
                     {"patch-grid", "2x1"},
                     {"heaviside", "hard"},
                     {"occlude", "3,4,10,20"},
                     {"snr-db", "6"}});
  CHECK(c.run.chain.n_iters == 50);
  CHECK(c.run.chain.gamma == 3);
  CHECK(c.sigma == 12.5);
  CHECK(c.run.chain.beta_shape == 100.0);
  CHECK(c.run.chain.target_mode == TargetMode::shape_only);
  CHECK(c.run.chain.seed == 18446744073709551615ULL);
  CHECK(c.run.chain.reverse_eval == ReverseEval::literal_prev_curve);
  CHECK(c.run.chain.local_priors);
  CHECK(c.run.chain.patch_rows == 2);
  CHECK(c.run.chain.patch_cols == 1);
  CHECK(c.run.chain.chan_vese.heaviside == Heaviside::hard);
  CHECK(c.occlusion == PixelRect{4, 3, 20, 10});
  CHECK(c.snr_db == 6.0);
  apply_setting(c, "sigma", "auto");
  apply_setting(c, "snr-db", "none");
  CHECK_FALSE(c.sigma.has_value());
  CHECK_FALSE(c.snr_db.has_value());
}

TEST_CASE("bad settings name the key") {
  ResolvedConfig c;
  auto fails = [&](const std::string& k, const std::string& v) {
    try {
      apply_setting(c, k, v);
      FAIL("accepted " << k << "=" << v);
    } catch (const InvalidArgument& e) {
      CHECK(std::string(e.what()).find(k) != std::string::npos);
    }
  };
  fails("iters", "ten");
  fails("iters", "3.5");
  fails("alpha", "");
  fails("target", "posterior");
  fails("seed", "-1");
  fails("patch-grid", "2by2");
  fails("patch-grid", "0x2");
  fails("occlude", "1,2,3");
  fails("align-test", "maybe");
  fails("no-such-key", "1");
}

TEST_CASE("config text") {
  const auto s = parse_config_text("# run\niters = 20\n--gamma: 4   # trailing\n\n  seed=7\n");
  REQUIRE(s.size() == 3u);
  CHECK(s[0] == Setting{"iters", "20"});
  CHECK(s[1] == Setting{"gamma", "4"});
  CHECK(s[2] == Setting{"seed", "7"});
  CHECK_THROWS_AS(parse_config_text("iters 20\n"), FormatError);

  fixture::TempDir tmp("cfg");
  std::ofstream(tmp.path / "run.cfg") << "beta-shape = 2.5\n";
  CHECK(load_config_file(tmp.path / "run.cfg") == std::vector<Setting>{{"beta-shape", "2.5"}});
  CHECK_THROWS_AS(load_config_file(tmp.path / "none.cfg"), IoError);
}

TEST_CASE("json round trip is exact") {
  ResolvedConfig c;
  apply_settings(c, {{"alpha", "0.1"},
                     {"sigma", "3.3333333333333335"},
                     {"seed", "12345678901234567890"},
                     {"max-rotation", "0"},
                     {"estimate-scale", "false"},
                     {"occlude", "1,2,3,4"},
                     {"train-dir", "/data/train"}});
  const auto j = config_to_json(c);
  CHECK(j["seed"] == "12345678901234567890");
  CHECK(j["estimate-scale"] == false);
  const ResolvedConfig back = config_from_json(nlohmann::json::parse(j.dump()));
  CHECK(settings_of(back) == settings_of(c));
  CHECK(back.run.chain.alpha == 0.1);
  CHECK(back.sigma == 3.3333333333333335);
  CHECK(j.size() == setting_keys().size());
  // plain JSON numbers are accepted too
  CHECK(config_from_json(nlohmann::json{{"iters", 9}, {"alpha", 0.5}}).run.chain.n_iters == 9);
  CHECK_THROWS_AS(config_from_json(nlohmann::json::array()), FormatError);
}

TEST_CASE("helpers") {
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
  CHECK(format_occlusion(std::nullopt) == "none");
  CHECK(format_occlusion(parse_occlusion("5,6,7,8")) == "5,6,7,8");
  CHECK(parse_patch_grid("3x4") == std::pair{3, 4});
}
