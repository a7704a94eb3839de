#include <doctest.h>

#include "app.hpp"
#include "madopt/io.hpp"
#include "support.hpp"

#include <filesystem>

using namespace madopt;

TEST_CASE("artifact round trips are exact") {
  const auto& plant = testing::small_plant();
  const auto& models = *plant.ctx.models;

  SurrogateSet withref = models;
  for (auto* m : {&withref.power, &withref.te, &withref.thr}) m->scaler_ref = withref.scaler.id();
  const auto back = surrogates_from_json(Json::parse(to_json(withref).dump()));
  CHECK(back.scaler == models.scaler);
  CHECK(back.te.W1 == models.te.W1);
  CHECK(back.te.b2 == models.te.b2);
  CHECK(back.thr.input_names == models.thr.input_names);

  const auto e = ellipsoid_from_json(Json::parse(to_json(*plant.ctx.ellipsoid).dump()));
  const Vec x = Vec::Constant(9, 0.4);
  CHECK(e.distance(x) == plant.ctx.ellipsoid->distance(x));

  const auto c = conformal_from_json(Json::parse(to_json(plant.conformal[1]).dump()));
  CHECK(c.quantile == plant.conformal[1].quantile);
  CHECK(c.scores == plant.conformal[1].scores);

  SUBCASE("mismatched scaler reference is rejected") {
    Json j = to_json(withref);
    j["te"]["scaler_ref"] = "other";
    CHECK_THROWS_AS(surrogates_from_json(j), Error);
  }
  SUBCASE("inconsistent shapes are rejected") {
    Json j = to_json(models.power);
    j["b1"] = Json::array({1.0});
    CHECK_THROWS_AS(mlp_from_json(j), Error);
  }
}

TEST_CASE("run configuration") {
  const Json ok = {{"output_dir", "/tmp/x"},
                   {"seeds", {{"data", 1}, {"split", 2}, {"train", 3}, {"solver", 4}, {"mc", 5}, {"shap", 6}}},
                   {"extrapolation", {{"tau_schedule", {{"385", 0.4}, {"390", 0.45}, {"395", 0.6}}}}}};
  const auto cfg = app::parse_config(ok);
  CHECK(cfg.seeds.shap == 6);
  CHECK(cfg.extrapolation.tau_for(390.0) == 0.45);

  Json missing = ok;
  missing["seeds"].erase("mc");
  CHECK_THROWS_AS(app::parse_config(missing), Error);

  Json bad = ok;
  bad["optimize"] = {{"tau", -1.0}};
  CHECK_THROWS_AS(app::parse_config(bad), Error);

  bad = ok;
  bad["train"] = {{"max_epochs", "many"}};
  try {
    app::parse_config(bad);
    FAIL("expected a parse error");
  } catch (const Error& e) {
    CHECK(app::exit_code_for(e.code()) == 2);
  }
  CHECK(app::exit_code_for(ErrorCode::MissingArtifact) == 3);
  CHECK(app::exit_code_for(ErrorCode::Solver) == 4);
}

TEST_CASE("sha256 of a known string") {
  const auto path = (std::filesystem::temp_directory_path() / "madopt_sha.txt").string();
  write_text(path, "abc");
  CHECK(app::sha256_file(path) == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}
