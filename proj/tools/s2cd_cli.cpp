// Front door for the S2CD lab: teacher/student training, evaluation,
// ablations and the tabular theorem sweep.
#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "s2cd/cli/commands.hpp"

namespace {

void add_common(CLI::App* cmd, s2cd::cli::Options& o, std::string& config, std::string& out) {
  cmd->add_option("--config", config, "JSON run configuration");
  cmd->add_option("--seed", o.seed, "seed (overrides the config's first seed)");
  cmd->add_option("--out", out, "output directory")->required();
}

}  // namespace

int main(int argc, char** argv) {
  using namespace s2cd::cli;
  CLI::App app{"S2CD teacher-student lane-change lab"};
  app.require_subcommand(1);
  Options o;
  std::string config, out, bundle, checkpoint;

  auto* teacher = app.add_subcommand("train-teacher", "train a teacher bundle in the simple world");
  add_common(teacher, o, config, out);

  auto* student = app.add_subcommand("train-student", "train an S2CD student (or the PPO baseline)");
  add_common(student, o, config, out);
  student->add_option("--bundle", bundle, "teacher bundle directory");
  student->add_flag("--baseline", o.baseline, "plain PPO without a teacher");
  student->add_option("--ablate", o.ablate, "comma list of no-dual-source,no-adaptive-clip,no-kl,no-decay");

  auto* evaluate = app.add_subcommand("evaluate", "greedy evaluation of a checkpoint");
  add_common(evaluate, o, config, out);
  evaluate->add_option("--checkpoint", checkpoint, "train-student output or teacher bundle")->required();

  auto* ablate = app.add_subcommand("ablate", "S2CD against its single-component ablations");
  add_common(ablate, o, config, out);
  ablate->add_option("--bundle", bundle, "teacher bundle directory")->required();
  ablate->add_option("--ablate", o.ablate, "restrict to these ablations");

  auto* theory = app.add_subcommand("theory", "tabular certification of the switching theorems");
  add_common(theory, o, config, out);

  CLI11_PARSE(app, argc, argv);
  if (!config.empty()) o.config = config;
  o.out = out;
  if (!bundle.empty()) o.bundle = bundle;
  if (!checkpoint.empty()) o.checkpoint = checkpoint;

  try {
    if (*teacher) return cmd_train_teacher(o, std::cerr);
    if (*student) return cmd_train_student(o, std::cerr);
    if (*evaluate) return cmd_evaluate(o, std::cerr);
    if (*ablate) return cmd_ablate(o, std::cerr);
    if (*theory) return cmd_theory(o, std::cerr);
  } catch (const s2cd::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const s2cd::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
