#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "dime/config.hpp"
#include "dime/experiment.hpp"
#include "dime/record.hpp"

namespace {

using nlohmann::json;

int fail_with(const std::string& message) {
  json err;
  err["error"] = message;
  std::cerr << err.dump() << std::endl;
  return 1;
}

void print_bundle_summary(const dime::ResultBundle& bundle) {
  std::cout << "config " << bundle.config_hash << "\n";
  if (bundle.ground_truth)
    std::cout << "ground truth log p(y) = " << *bundle.ground_truth << "\n";
  for (const auto& m : bundle.methods) {
    std::cout << m.method << ": " << m.point_estimate;
    if (m.per_trial_values && m.per_trial_values->size() > 1)
      std::cout << " +/- " << m.dispersion;
    if (!m.normalized) std::cout << " (unnormalized)";
    auto it = bundle.relative_errors.find(m.method);
    if (it != bundle.relative_errors.end())
      std::cout << "  rel.err " << 100.0 * it->second << "%";
    std::cout << "\n";
  }
  for (const auto& [label, what] : bundle.method_errors)
    std::cout << label << ": FAILED: " << what << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"model evidence estimation under diffusion-style mixture priors"};
  app.require_subcommand(1);

  std::string config_path, out_path, csv_path, refs_path, test_path, bundle_path, records_path;
  std::string replay_label = "dime";
  uint64_t seed_override = 0;
  bool seed_given = false;
  int replay_trial = 0, replay_path_idx = 0;

  auto* run = app.add_subcommand("run", "run an experiment config");
  run->add_option("config", config_path, "experiment config JSON")->required();
  run->add_option("--seed", seed_override, "override the master seed")
      ->each([&](const std::string&) { seed_given = true; });
  run->add_option("--out", out_path, "result bundle path (overrides config)");
  run->add_option("--csv", csv_path, "flat CSV path (overrides config)");
  run->add_option("--records", records_path, "dump path records of the first path method");

  auto* confusion = app.add_subcommand("confusion", "run a model-selection confusion matrix");
  confusion->add_option("config", config_path, "confusion config JSON")->required();
  confusion->add_option("--out", out_path, "result JSON path (overrides config)");

  auto* validate = app.add_subcommand("validate", "z-score a test evidence against references");
  validate->add_option("refs", refs_path, "JSON file with {\"values\": [...]}")->required();
  validate->add_option("test", test_path, "JSON file with {\"value\": x} or a bare number")
      ->required();

  auto* replay = app.add_subcommand("replay", "re-execute one sample path from derived seeds");
  replay->add_option("bundle", bundle_path, "result bundle JSON")->required();
  replay->add_option("--trial", replay_trial, "trial index")->required();
  replay->add_option("--path", replay_path_idx, "path index")->required();
  replay->add_option("--method", replay_label, "estimator label (default: dime)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      dime::ExperimentConfig cfg = dime::parse_experiment_config(dime::load_json_file(config_path));
      if (seed_given) cfg.master_seed = seed_override;
      if (!out_path.empty()) cfg.output_path = out_path;
      if (!csv_path.empty()) cfg.csv_path = csv_path;
      dime::ResultBundle bundle = dime::run_experiment(cfg);
      print_bundle_summary(bundle);
      if (!records_path.empty()) {
        // re-generate the first path method's records for offline inspection
        for (const auto& est : cfg.estimators) {
          if (est.method != "dime" && est.method != "dime_tilted") continue;
          std::vector<dime::SamplePathRecord> records;
          for (int p = 0; p < cfg.n_paths; ++p)
            records.push_back(dime::replay_path(cfg, est.label, 0, p));
          std::ofstream out(records_path);
          if (!out) throw std::runtime_error("cannot open " + records_path);
          dime::write_path_records(out, records);
          break;
        }
      }
      if (!bundle.method_errors.empty()) return fail_with("one or more estimators failed");
      return 0;
    }

    if (confusion->parsed()) {
      dime::ConfusionConfig cfg = dime::parse_confusion_config(dime::load_json_file(config_path));
      if (!out_path.empty()) cfg.output_path = out_path;
      dime::ConfusionResult result = dime::run_confusion_matrix(cfg);
      std::cout << "selection accuracy " << result.correct_selections << "/"
                << result.total_selections << "\n";
      for (int g = 0; g < result.n_priors; ++g)
        std::cout << "row " << g << " argmax " << result.row_argmax[static_cast<size_t>(g)] << "\n";
      if (!cfg.output_path.empty())
        dime::write_json_file(cfg.output_path, dime::confusion_to_json(result));
      if (!cfg.csv_path.empty()) dime::write_confusion_csv(cfg.csv_path, result);
      return 0;
    }

    if (validate->parsed()) {
      json refs = dime::load_json_file(refs_path);
      json test = dime::load_json_file(test_path);
      std::vector<double> values = refs.at("values").get<std::vector<double>>();
      double test_value = test.is_number() ? test.get<double>() : test.at("value").get<double>();
      dime::ValidationResult r = dime::validate_evidence(values, test_value);
      json out;
      out["z"] = r.z;
      out["p"] = r.p;
      out["reference_mean"] = r.reference_mean;
      out["reference_std"] = r.reference_std;
      std::cout << out.dump(2) << std::endl;
      return 0;
    }

    if (replay->parsed()) {
      json bundle = dime::load_json_file(bundle_path);
      dime::ExperimentConfig cfg = dime::parse_experiment_config(bundle.at("config"));
      dime::SamplePathRecord rec =
          dime::replay_path(cfg, replay_label, replay_trial, replay_path_idx);
      dime::write_path_records(std::cout, {rec});
      return 0;
    }
  } catch (const std::exception& e) {
    return fail_with(e.what());
  }
  return fail_with("no subcommand");
}
