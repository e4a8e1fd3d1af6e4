// ietagc — command-line driver for training, auditing, and analyzing
// denoising diffusion models with IET-AGC memorization mitigation.

#include <cstddef>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "ietagc/config.hpp"
#include "ietagc/errors.hpp"
#include "ietagc/experiment.hpp"

namespace {

// Precedence, lowest to highest: manifest, config file, environment
// (IETAGC_ prefix), command-line --key value overrides.
ietagc::Config build_config(const std::string& manifest,
                            const std::string& config_file,
                            const std::vector<std::string>& extras) {
  ietagc::Config c;
  if (!manifest.empty()) c = ietagc::config_from_manifest(manifest);
  if (!config_file.empty()) c.merge_file(config_file);
  c.merge_env();
  for (std::size_t i = 0; i < extras.size(); ++i) {
    std::string tok = extras[i];
    if (tok.size() < 3 || tok.rfind("--", 0) != 0)
      throw ietagc::ConfigError("unexpected argument '" + tok +
                                "' (config overrides look like --iet.k 4)");
    tok.erase(0, 2);
    const std::size_t eq = tok.find('=');
    if (eq != std::string::npos) {
      c.set(tok.substr(0, eq), tok.substr(eq + 1));
    } else {
      if (i + 1 >= extras.size())
        throw ietagc::ConfigError("flag '--" + tok + "' needs a value");
      c.set(tok, extras[++i]);
    }
  }
  return c;
}

ietagc::ExperimentSpec spec_from(const std::string& manifest,
                                 const std::string& config_file,
                                 const std::vector<std::string>& extras) {
  return ietagc::ExperimentSpec::from_config(
      build_config(manifest, config_file, extras));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "ietagc — desk-scale diffusion training with IET-AGC memorization "
      "mitigation, plus audit and analysis tooling"};
  app.require_subcommand(1);

  std::string config_file, manifest, checkpoint, data_path, label, run_dir,
      compare_out;
  std::string train_out = "run", audit_out = "audit", analyze_out,
      gen_out = "data";
  std::vector<std::string> reports;

  CLI::App* train = app.add_subcommand("train", "train a diffusion model");
  train->add_option("--config", config_file, "config file (key = value)");
  train->add_option("--from-manifest", manifest,
                    "rerun the experiment recorded in a manifest.json");
  train->add_option("--out", train_out, "output directory (default: run)");
  train->allow_extras();

  CLI::App* audit = app.add_subcommand(
      "audit", "generate samples from a checkpoint and score memorization");
  audit->add_option("--config", config_file, "config file (key = value)");
  audit->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  audit->add_option("--data", data_path, "training dataset file")->required();
  audit->add_option("--label", label, "label for this report in comparisons");
  audit->add_option("--out", audit_out, "output directory (default: audit)");
  audit->allow_extras();

  CLI::App* analyze = app.add_subcommand(
      "analyze", "per-sample skip/loss/structure analysis of a training run");
  analyze->add_option("--config", config_file, "config file (key = value)");
  analyze->add_option("--run", run_dir, "training run directory")->required();
  analyze->add_option("--out", analyze_out,
                      "output directory (defaults to the run directory)");
  analyze->allow_extras();

  CLI::App* compare =
      app.add_subcommand("compare", "tabulate audit reports side by side");
  compare->add_option("reports", reports, "report.json files (two or more)");
  compare->add_option("--out", compare_out, "write the table as CSV here");

  CLI::App* gen =
      app.add_subcommand("gen-data", "generate and save a synthetic dataset");
  gen->add_option("--config", config_file, "config file (key = value)");
  gen->add_option("--out", gen_out, "output directory (default: data)");
  gen->allow_extras();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? ietagc::kExitOk : ietagc::kExitParse;
  }

  try {
    if (train->parsed())
      return ietagc::cmd_train(spec_from(manifest, config_file,
                                         train->remaining()),
                               train_out);
    if (audit->parsed())
      return ietagc::cmd_audit(
          spec_from("", config_file, audit->remaining()), checkpoint,
          data_path, audit_out, label);
    if (analyze->parsed())
      return ietagc::cmd_analyze(
          spec_from("", config_file, analyze->remaining()), run_dir,
          analyze_out);
    if (compare->parsed()) return ietagc::cmd_compare(reports, compare_out);
    if (gen->parsed())
      return ietagc::cmd_gen_data(spec_from("", config_file, gen->remaining()),
                                  gen_out);
    std::cerr << "error: no command given\n";
    return ietagc::kExitParse;
  } catch (const ietagc::TrainingDivergedError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return ietagc::kExitDiverged;
  } catch (const ietagc::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return ietagc::kExitParse;
  } catch (const ietagc::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return ietagc::kExitParse;
  } catch (const ietagc::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return ietagc::kExitError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return ietagc::kExitError;
  }
}
