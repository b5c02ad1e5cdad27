#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ulv/errors.hpp"
#include "ulv/runner.hpp"
#include "ulv/version.hpp"

namespace {

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  size_t start = 0;
  for (;;) {
    size_t p = s.find(',', start);
    std::string item = s.substr(start, p == std::string::npos ? std::string::npos : p - start);
    if (!item.empty()) out.push_back(item);
    if (p == std::string::npos) break;
    start = p + 1;
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"snapshot-based verifier for graph unlearning"};
  app.set_version_flag("--version", std::string(ulv::kToolName) + " " + ulv::kToolVersion);
  app.require_subcommand(1);

  auto* verify = app.add_subcommand("verify", "run the verification grid and emit reports");
  std::string dataset, format = "edge-list", backbones = "gcn,gat",
              methods = "retrain,local-finetune,noop", seeds = "1001,1002,1003", out_dir;
  double forget_frac = 0.05;
  int k = 2;
  std::vector<std::string> method_args;
  bool allow_large = false;
  verify->add_option("--dataset", dataset, "dataset directory or sbm:<spec>")->required();
  verify->add_option("--format", format, "edge-list or planetoid-raw (ignored for sbm:)");
  verify->add_option("--backbone", backbones, "comma-separated: gcn,gat");
  verify->add_option("--method", methods, "comma-separated strategy names");
  verify->add_option("--seeds", seeds, "comma-separated seeds");
  verify->add_option("--forget-frac", forget_frac, "fraction of nodes to forget, in (0,1)");
  verify->add_option("--k", k, "proxy ego-network hop count");
  verify->add_option("--out", out_dir, "output directory for reports and artifacts")->required();
  verify->add_option("--method-arg", method_args, "strategy hyperparameter key=value (repeatable)");
  verify->add_flag("--allow-large", allow_large, "run graphs above the desk-scale node gate");

  CLI11_PARSE(app, argc, argv);

  ulv::ExperimentPlan plan;
  try {
    plan.dataset = ulv::DatasetSpec::parse(dataset, format);
    plan.backbones = split_commas(backbones);
    plan.methods = split_commas(methods);
    plan.seeds.clear();
    for (const std::string& s : split_commas(seeds)) {
      try {
        size_t used = 0;
        plan.seeds.push_back(std::stoull(s, &used));
        if (used != s.size()) throw std::invalid_argument(s);
      } catch (const std::exception&) {
        throw ulv::ArgumentError("seed '" + s + "' is not an integer");
      }
    }
    plan.forget_fraction = forget_frac;
    plan.k = k;
    plan.out_dir = out_dir;
    plan.method_args = ulv::StrategyArgs::parse(method_args);
    plan.allow_large = allow_large;
    plan.validate();
  } catch (const ulv::Error& e) {
    std::cerr << "invalid plan: " << e.what() << '\n';
    return 2;
  }

  try {
    ulv::VerificationReport report = ulv::run_plan(plan);
    size_t failed = 0;
    for (const auto& c : report.cells) failed += c.failed ? 1 : 0;
    std::cerr << report.cells.size() << " cells, " << failed << " failed; report in " << out_dir
              << '\n';
    return ulv::exit_status(report);
  } catch (const ulv::ArgumentError& e) {
    std::cerr << "invalid plan: " << e.what() << '\n';
    return 2;
  } catch (const ulv::Error& e) {
    std::cerr << "run failed: " << e.what() << '\n';
    return 1;
  }
}
