// Command-line front end; everything goes through the public C API.

#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "prco/prco.h"

namespace {

// Failures are reported as one machine-readable line on stderr.
int fail(const std::string& message) {
  std::string escaped;
  for (char c : message) {
    if (c == '"' || c == '\\') escaped += '\\';
    if (c == '\n') {
      escaped += "\\n";
      continue;
    }
    escaped += c;
  }
  std::fprintf(stderr, "{\"error\":\"%s\"}\n", escaped.c_str());
  return 1;
}

int check(prco_status status) {
  if (status == PRCO_OK) return 0;
  return fail(prco_last_error());
}

std::string default_out_dir() {
  const char* env = std::getenv("PRCO_OUT_DIR");
  return env && *env ? env : "out";
}

struct ConfigHandle {
  prco_config* cfg = nullptr;
  ~ConfigHandle() { prco_config_destroy(cfg); }
};

struct ParamsHandle {
  prco_params* params = nullptr;
  ~ParamsHandle() { prco_params_destroy(params); }
};

int load_config(ConfigHandle& handle, const std::string& config_path,
                const std::vector<std::string>& sets) {
  if (int rc = check(prco_config_create(&handle.cfg))) return rc;
  if (!config_path.empty())
    if (int rc = check(prco_config_load_file(handle.cfg, config_path.c_str()))) return rc;
  for (const std::string& assignment : sets)
    if (int rc = check(prco_config_set(handle.cfg, assignment.c_str()))) return rc;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PRCO dual-role RLVR training laboratory"};
  app.require_subcommand(1);

  std::string config_path, out_dir = default_out_dir(), resume, params_path, grid_path;
  std::vector<std::string> sets;
  bool svg = false;

  auto* train = app.add_subcommand("train", "run a training loop from a config file");
  train->add_option("--config", config_path, "key=value config file");
  train->add_option("--set", sets, "override, e.g. --set train.steps=50")->take_all();
  train->add_option("--out", out_dir, "output directory (default $PRCO_OUT_DIR or ./out)");
  train->add_option("--resume", resume, "checkpoint file to continue from");
  train->add_flag("--svg", svg, "emit reward/std curves as curves.svg");

  uint32_t eval_n = 500;
  uint64_t seed = 12345;
  auto* eval = app.add_subcommand("eval", "greedy accuracy of saved params on held-out instances");
  eval->add_option("--params", params_path, "params file")->required();
  eval->add_option("--n", eval_n, "number of held-out instances");
  eval->add_option("--seed", seed, "held-out instance seed");

  std::string k_list = "1,2,4,8,16,32";
  uint32_t passk_questions = 200, passk_samples = 32;
  double passk_temperature = 0.6, passk_top_p = 0.95;
  auto* passk = app.add_subcommand("passk", "sampled pass@k estimates for saved params");
  passk->add_option("--params", params_path, "params file")->required();
  passk->add_option("--k", k_list, "comma-separated k values");
  passk->add_option("--n", passk_samples, "samples per question");
  passk->add_option("--questions", passk_questions, "number of held-out questions");
  passk->add_option("--temperature", passk_temperature, "sampling temperature");
  passk->add_option("--top-p", passk_top_p, "nucleus truncation");
  passk->add_option("--seed", seed, "held-out instance seed");

  uint32_t diag_n = 500;
  auto* diagnose = app.add_subcommand("diagnose", "error-category table for saved params");
  diagnose->add_option("--params", params_path, "params file")->required();
  diagnose->add_option("--n", diag_n, "number of held-out instances");
  diagnose->add_option("--seed", seed, "held-out instance seed");

  auto* sweep = app.add_subcommand("sweep", "train over a grid of rollout group sizes");
  sweep->add_option("--grid", grid_path, "config file with a [sweep] section")->required();
  sweep->add_option("--set", sets, "override, e.g. --set sweep.steps=30")->take_all();
  sweep->add_option("--out", out_dir, "output directory (default $PRCO_OUT_DIR or ./out)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    std::string message = e.what();
    app.exit(e, std::cout, std::cerr);
    return fail(message.empty() ? "bad command line" : message);
  }

  if (train->parsed()) {
    ConfigHandle cfg;
    if (svg) sets.push_back("train.emit_svg=true");
    if (int rc = load_config(cfg, config_path, sets)) return rc;
    if (int rc = check(prco_train(cfg.cfg, out_dir.c_str(), resume.empty() ? nullptr : resume.c_str())))
      return rc;
    std::printf("training complete; artifacts in %s\n", out_dir.c_str());
    return 0;
  }

  if (eval->parsed()) {
    ParamsHandle params;
    if (int rc = check(prco_params_load(params_path.c_str(), &params.params))) return rc;
    double accuracy = 0.0;
    if (int rc = check(prco_eval_greedy(params.params, eval_n, seed, &accuracy))) return rc;
    std::printf("greedy_accuracy %.6f over %u instances (seed %llu)\n", accuracy, eval_n,
                static_cast<unsigned long long>(seed));
    return 0;
  }

  if (passk->parsed()) {
    ParamsHandle params;
    if (int rc = check(prco_params_load(params_path.c_str(), &params.params))) return rc;
    std::vector<uint32_t> ks;
    size_t pos = 0;
    while (pos < k_list.size()) {
      const size_t comma = k_list.find(',', pos);
      const std::string item = k_list.substr(pos, comma == std::string::npos ? comma : comma - pos);
      if (!item.empty()) ks.push_back(static_cast<uint32_t>(std::strtoul(item.c_str(), nullptr, 10)));
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    if (ks.empty()) return fail("passk: no k values given");
    std::vector<double> values(ks.size(), 0.0);
    if (int rc = check(prco_eval_pass_at_k(params.params, passk_questions, passk_samples,
                                           passk_temperature, passk_top_p, seed, ks.data(),
                                           ks.size(), values.data())))
      return rc;
    for (size_t i = 0; i < ks.size(); ++i) std::printf("pass@%u %.6f\n", ks[i], values[i]);
    return 0;
  }

  if (diagnose->parsed()) {
    ParamsHandle params;
    if (int rc = check(prco_params_load(params_path.c_str(), &params.params))) return rc;
    double rates[4] = {0, 0, 0, 0};
    if (int rc = check(prco_diagnose(params.params, diag_n, seed, rates))) return rc;
    std::printf("category    rate\n");
    std::printf("correct     %.6f\n", rates[0]);
    std::printf("perception  %.6f\n", rates[1]);
    std::printf("reasoning   %.6f\n", rates[2]);
    std::printf("other       %.6f\n", rates[3]);
    return 0;
  }

  if (sweep->parsed()) {
    ConfigHandle cfg;
    if (int rc = load_config(cfg, grid_path, sets)) return rc;
    if (int rc = check(prco_sweep(cfg.cfg, out_dir.c_str()))) return rc;
    std::printf("sweep complete; results in %s/sweep_results.csv\n", out_dir.c_str());
    return 0;
  }

  return fail("no subcommand handled");
}
