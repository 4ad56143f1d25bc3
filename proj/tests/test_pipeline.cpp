// End-to-end: generate, persist, reload, train, serialize the model, solve.
#include <filesystem>

#include "hyflow/eval.hpp"
#include "support.hpp"

using namespace hyflow;

TEST_CASE("file-based pipeline matches the in-memory one") {
  const Feeder f = load_feeder(support::fixture("ieee13_equivalent.json"));
  ScenarioConfig cfg;
  cfg.seed = 31;
  cfg.n_train = 300;
  cfg.n_test = 60;
  const ScenarioSet data = generate_scenarios(f, cfg);
  const Dataset train = inject_bad_data(data.train, f.network, cfg);

  const auto dir = std::filesystem::temp_directory_path() / "hyflow_pipeline_test";
  std::filesystem::create_directories(dir);
  write_dataset(dir / "train.jsonl", train);
  write_dataset(dir / "test.jsonl", data.test);
  const Dataset train_back = read_dataset(dir / "train.jsonl");
  const Dataset test_back = read_dataset(dir / "test.jsonl");
  std::filesystem::remove_all(dir);

  const ErrorModel model = train_svr(train.training_set(TargetKind::error));
  const ErrorModel reloaded =
      model_from_json(nlohmann::json::parse(model_to_json(train_svr(train_back.training_set(TargetKind::error))).dump()));
  CHECK(reloaded.weights == model.weights);
  CHECK(reloaded.offsets == model.offsets);

  const AdmittanceSystem sys = build_admittance(f.network);
  const RotationVector t = rotation_vector(f.network);
  for (std::size_t k = 0; k < test_back.samples.size(); k += 7) {
    const Sample& s = test_back.samples[k];
    const PFSolution a = hybrid_solve(sys, s.op, t, model);
    const PFSolution b = hybrid_solve(sys, s.op, t, reloaded);
    CHECK(a.v == b.v);
    CHECK((to_rect(a.v) - s.x).cwiseAbs().maxCoeff() < 1e-3);
  }

  ComparisonConfig cmp;
  cmp.scenario = cfg;
  const EvalReport from_files = evaluate(f, train_back, test_back, cmp);
  const EvalReport in_memory = evaluate(f, train, data.test, cmp);
  for (std::size_t k = 0; k < from_files.methods.size(); ++k)
    CHECK(from_files.methods[k].phases == in_memory.methods[k].phases);
}

TEST_CASE("contaminated training: svr-corrected beats lr-corrected") {
  const Feeder f = load_feeder(support::fixture("four_bus.json"));
  ComparisonConfig cfg;
  cfg.scenario.seed = 32;
  cfg.scenario.n_train = 600;
  cfg.scenario.n_test = 100;
  cfg.scenario.n_bad_nodes = 2;
  cfg.contaminate = true;
  cfg.methods = {EvalMethod::taylor, EvalMethod::lr_corrected, EvalMethod::hybrid_svr};
  const EvalReport r = run_comparison(f, cfg);
  CHECK(r.models_trained == 2);
  const MethodReport* lr = r.find("lr-corrected");
  const MethodReport* svr = r.find("hybrid-svr");
  const MethodReport* tay = r.find("taylor");
  REQUIRE(lr);
  REQUIRE(svr);
  REQUIRE(tay);
  for (std::size_t p = 0; p < svr->phases.size(); ++p) {
    CHECK(svr->phases[p].magnitude * 10.0 < lr->phases[p].magnitude);
    CHECK(lr->phases[p].magnitude > tay->phases[p].magnitude);
  }
}
