#include <numbers>

#include "hyflow/eval.hpp"
#include "support.hpp"

using namespace hyflow;

namespace {

PhaseIndex one_phase_a() { return PhaseIndex({{0, PhaseSet::all()}, {1, PhaseSet::parse("a")}}); }

ComparisonConfig small_comparison(std::uint64_t seed) {
  ComparisonConfig cfg;
  cfg.scenario.seed = seed;
  cfg.scenario.n_train = 200;
  cfg.scenario.n_test = 50;
  return cfg;
}

}  // namespace

TEST_CASE("wrap angle") {
  CHECK(wrap_angle(0.0) == 0.0);
  CHECK(wrap_angle(3.1 - (-3.1)) == doctest::Approx(6.2 - 2.0 * std::numbers::pi).epsilon(1e-12));
  CHECK(std::abs(wrap_angle(6.2)) == doctest::Approx(0.0832).epsilon(1e-3));
  CHECK(wrap_angle(std::numbers::pi) == doctest::Approx(std::numbers::pi));
  CHECK(wrap_angle(-std::numbers::pi) == doctest::Approx(std::numbers::pi));
}

TEST_CASE("rmse by hand") {
  const PhaseIndex idx = one_phase_a();
  SUBCASE("identical") {
    const std::vector<CVec> v{CVec::Constant(1, Complex(0.9, 0.1))};
    const auto r = rmse_per_phase(v, v, idx);
    REQUIRE(r.size() == 1);
    CHECK(r[0].magnitude == 0.0);
    CHECK(r[0].angle == 0.0);
  }
  SUBCASE("two magnitude errors") {
    const std::vector<CVec> pred{CVec::Constant(1, Complex(1.3, 0.0)), CVec::Constant(1, Complex(1.4, 0.0))};
    const std::vector<CVec> truth{CVec::Constant(1, Complex(1.0, 0.0)), CVec::Constant(1, Complex(1.0, 0.0))};
    const auto r = rmse_per_phase(pred, truth, idx);
    CHECK(r[0].magnitude == doctest::Approx(0.35355339059327373).epsilon(1e-14));
    CHECK(r[0].angle == 0.0);
  }
  SUBCASE("angle wraps") {
    const std::vector<CVec> pred{CVec::Constant(1, std::polar(1.0, 3.1))};
    const std::vector<CVec> truth{CVec::Constant(1, std::polar(1.0, -3.1))};
    const auto r = rmse_per_phase(pred, truth, idx);
    CHECK(r[0].angle == doctest::Approx(2.0 * std::numbers::pi - 6.2).epsilon(1e-9));
    CHECK(r[0].angle < 0.09);
  }
  CHECK_THROWS_AS(rmse_per_phase({CVec::Zero(1)}, {}, idx), Error);
  CHECK_THROWS_AS(rmse_per_phase({CVec::Zero(2)}, {CVec::Zero(2)}, idx), Error);
}

TEST_CASE("rmse reports only present phases") {
  const Feeder f = load_feeder(support::fixture("b_lateral.json"));
  const CVec v = CVec::Ones(f.network.phase_count());
  const auto r = rmse_per_phase({v}, {v}, f.network.phase_index());
  REQUIRE(r.size() == 1);
  CHECK(r[0].phase == Phase::b);
}

TEST_CASE("method names") {
  for (EvalMethod m : all_eval_methods()) CHECK(eval_method_from_string(to_string(m)) == m);
  CHECK_THROWS_AS(eval_method_from_string("bfs"), Error);
}

TEST_CASE("taylor-only comparison trains nothing") {
  const Feeder f = load_feeder(support::fixture("four_bus.json"));
  ComparisonConfig cfg = small_comparison(1);
  cfg.methods = {EvalMethod::taylor};
  const EvalReport r = run_comparison(f, cfg);
  CHECK(r.models_trained == 0);
  REQUIRE(r.methods.size() == 1);
  CHECK(r.methods[0].method == "taylor");
  CHECK(r.methods[0].solved == 50);
  CHECK(r.methods[0].phases.size() == 3);
}

TEST_CASE("report round trip and table rendering") {
  const Feeder f = load_feeder(support::fixture("four_bus.json"));
  ComparisonConfig cfg = small_comparison(2);
  cfg.contaminate = true;
  const EvalReport r = run_comparison(f, cfg);
  CHECK(r.models_trained == 3);
  CHECK(r.methods.size() == all_eval_methods().size());
  for (const MethodReport& m : r.methods)
    for (const PhaseRmse& p : m.phases) {
      CHECK(p.magnitude >= 0.0);
      CHECK(p.angle >= 0.0);
    }
  const nlohmann::json doc = report_to_json(r);
  const EvalReport back = report_from_json(nlohmann::json::parse(doc.dump()));
  CHECK(back == r);
  CHECK(render_table(doc) == render_table(report_to_json(back)));
  CHECK(render_table(doc).find("hybrid-svr") != std::string::npos);
  CHECK(r.provenance.at("contaminated") == true);
  CHECK(r.provenance.at("train_bad") == 20);
  CHECK(r.find("taylor") != nullptr);
  CHECK(r.find("bfs") == nullptr);
  CHECK_THROWS_AS(report_from_json(nlohmann::json::parse(R"({"methods": []})")), Error);
}

TEST_CASE("stage failures are tagged") {
  const Feeder f = load_feeder(support::fixture("four_bus.json"));
  ComparisonConfig cfg = small_comparison(3);
  cfg.contaminate = true;
  cfg.scenario.n_bad_nodes = 9;
  try {
    run_comparison(f, cfg);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).rfind("contaminate: ", 0) == 0);
  }
  cfg.scenario.n_test = 0;
  try {
    run_comparison(f, cfg);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).rfind("generate: ", 0) == 0);
  }
}

TEST_CASE("evaluation rejects data from another network") {
  const Feeder f = load_feeder(support::fixture("four_bus.json"));
  const Feeder g = load_feeder(support::fixture("b_lateral.json"));
  ComparisonConfig cfg = small_comparison(4);
  const ScenarioSet data = generate_scenarios(f, cfg.scenario);
  CHECK_THROWS_AS(evaluate(g, data.train, data.test, cfg), Error);
}
