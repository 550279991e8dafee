#include "prco/prco.h"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "config.hpp"
#include "metrics.hpp"
#include "trainer.hpp"

namespace {

thread_local std::string g_last_error = "ok";

template <typename Fn>
prco_status guarded(Fn&& fn) {
  try {
    fn();
    return PRCO_OK;
  } catch (const prco::ConfigError& e) {
    g_last_error = e.what();
    return PRCO_ERR_CONFIG;
  } catch (const prco::InputError& e) {
    g_last_error = e.what();
    return PRCO_ERR_INPUT;
  } catch (const prco::NumericError& e) {
    g_last_error = e.what();
    return PRCO_ERR_NUMERIC;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return PRCO_ERR_INTERNAL;
  }
}

prco_status invalid_argument(const char* what) {
  g_last_error = what;
  return PRCO_ERR_INVALID_ARGUMENT;
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

}  // namespace

struct prco_config {
  prco::KeyValueConfig kv;
};

struct prco_params {
  prco::PolicyParams params;
};

extern "C" {

const char* prco_last_error(void) { return g_last_error.c_str(); }

prco_status prco_config_create(prco_config** out) {
  if (!out) return invalid_argument("prco_config_create: out is NULL");
  return guarded([&] { *out = new prco_config{}; });
}

prco_status prco_config_load_file(prco_config* cfg, const char* path) {
  if (!cfg || !path) return invalid_argument("prco_config_load_file: NULL argument");
  return guarded([&] { cfg->kv.merge(prco::KeyValueConfig::parse_file(path)); });
}

prco_status prco_config_set(prco_config* cfg, const char* assignment) {
  if (!cfg || !assignment) return invalid_argument("prco_config_set: NULL argument");
  return guarded([&] { cfg->kv.apply_override(assignment); });
}

prco_status prco_config_dump(const prco_config* cfg, char** out) {
  if (!cfg || !out) return invalid_argument("prco_config_dump: NULL argument");
  return guarded([&] {
    *out = copy_string(cfg->kv.dump());
    if (!*out) throw std::bad_alloc();
  });
}

void prco_config_destroy(prco_config* cfg) { delete cfg; }

prco_status prco_train(const prco_config* cfg, const char* out_dir,
                       const char* resume_checkpoint) {
  if (!cfg || !out_dir) return invalid_argument("prco_train: NULL argument");
  return guarded([&] {
    const prco::TrainConfig train_cfg = prco::train_config_from_kv(cfg->kv);
    prco::run_training(train_cfg, out_dir, resume_checkpoint ? resume_checkpoint : "");
  });
}

prco_status prco_params_load(const char* path, prco_params** out) {
  if (!path || !out) return invalid_argument("prco_params_load: NULL argument");
  return guarded([&] { *out = new prco_params{prco::load_params(path)}; });
}

prco_status prco_params_info(const prco_params* params, uint32_t* vocab_size,
                             uint32_t* feature_dim, uint64_t* version) {
  if (!params) return invalid_argument("prco_params_info: params is NULL");
  if (vocab_size) *vocab_size = static_cast<uint32_t>(params->params.vocab_size);
  if (feature_dim) *feature_dim = static_cast<uint32_t>(params->params.feature_dim);
  if (version) *version = params->params.version;
  return PRCO_OK;
}

void prco_params_destroy(prco_params* params) { delete params; }

prco_status prco_eval_greedy(const prco_params* params, uint32_t num_instances, uint64_t seed,
                             double* accuracy) {
  if (!params || !accuracy) return invalid_argument("prco_eval_greedy: NULL argument");
  if (num_instances == 0) return invalid_argument("prco_eval_greedy: num_instances must be > 0");
  return guarded([&] {
    const prco::Policy policy(params->params.env);
    const auto eval_set =
        prco::make_eval_set(params->params.env, seed, static_cast<int>(num_instances));
    *accuracy =
        prco::evaluate(policy, params->params, eval_set, prco::SampleLimits{}, prco::EvalOptions{})
            .accuracy;
  });
}

prco_status prco_eval_pass_at_k(const prco_params* params, uint32_t num_instances,
                                uint32_t samples_per_question, double temperature, double top_p,
                                uint64_t seed, const uint32_t* ks, size_t num_ks,
                                double* pass_at_k) {
  if (!params || !ks || !pass_at_k) return invalid_argument("prco_eval_pass_at_k: NULL argument");
  if (num_instances == 0 || samples_per_question == 0 || num_ks == 0)
    return invalid_argument("prco_eval_pass_at_k: counts must be > 0");
  return guarded([&] {
    const prco::Policy policy(params->params.env);
    const auto eval_set =
        prco::make_eval_set(params->params.env, seed, static_cast<int>(num_instances));
    prco::EvalOptions opts;
    opts.sampled = true;
    opts.samples_per_question = static_cast<int>(samples_per_question);
    opts.temperature = temperature;
    opts.top_p = top_p;
    opts.sample_seed = seed;
    const prco::EvalResult result =
        prco::evaluate(policy, params->params, eval_set, prco::SampleLimits{}, opts);
    for (size_t i = 0; i < num_ks; ++i)
      pass_at_k[i] = prco::pass_at_k(result.per_question, static_cast<int>(ks[i]));
  });
}

prco_status prco_pass_at_k(const uint32_t* n, const uint32_t* c, size_t num_questions, uint32_t k,
                           double* out) {
  if (!n || !c || !out) return invalid_argument("prco_pass_at_k: NULL argument");
  if (num_questions == 0) return invalid_argument("prco_pass_at_k: no questions");
  return guarded([&] {
    std::vector<std::pair<int, int>> counts;
    counts.reserve(num_questions);
    for (size_t i = 0; i < num_questions; ++i)
      counts.emplace_back(static_cast<int>(n[i]), static_cast<int>(c[i]));
    *out = prco::pass_at_k(counts, static_cast<int>(k));
  });
}

prco_status prco_diagnose(const prco_params* params, uint32_t num_instances, uint64_t seed,
                          double rates[4]) {
  if (!params || !rates) return invalid_argument("prco_diagnose: NULL argument");
  if (num_instances == 0) return invalid_argument("prco_diagnose: num_instances must be > 0");
  return guarded([&] {
    const prco::Policy policy(params->params.env);
    const auto eval_set =
        prco::make_eval_set(params->params.env, seed, static_cast<int>(num_instances));
    const prco::EvalResult result =
        prco::evaluate(policy, params->params, eval_set, prco::SampleLimits{}, prco::EvalOptions{});
    rates[0] = result.category_rates.at("correct");
    rates[1] = result.category_rates.at("perception");
    rates[2] = result.category_rates.at("reasoning");
    rates[3] = result.category_rates.at("other");
  });
}

prco_status prco_sweep(const prco_config* cfg, const char* out_dir) {
  if (!cfg || !out_dir) return invalid_argument("prco_sweep: NULL argument");
  return guarded([&] {
    const prco::TrainConfig base = prco::train_config_from_kv(cfg->kv);
    const int default_go[] = {2, 4, 8};
    const int default_gs[] = {4, 8, 12};
    std::vector<int> go_values = cfg->kv.get_int_list("sweep.group_observer_values", default_go);
    const std::vector<int> gs_values =
        cfg->kv.get_int_list("sweep.group_solver_values", default_gs);
    const int sweep_steps = cfg->kv.get_int("sweep.steps", base.steps);
    if (base.algorithm != prco::Algorithm::Prco) go_values = {base.group_observer};

    std::filesystem::create_directories(out_dir);
    std::ofstream csv(std::string(out_dir) + "/sweep_results.csv");
    if (!csv) throw prco::InputError(std::string("cannot write sweep results under ") + out_dir);
    csv << "algorithm,group_observer,group_solver,steps,step0_eval,final_eval\n";
    for (int go : go_values) {
      for (int gs : gs_values) {
        prco::TrainConfig cfg_run = base;
        cfg_run.group_observer = go;
        cfg_run.group_solver = gs;
        cfg_run.steps = sweep_steps;
        if (cfg_run.warmup_steps > cfg_run.steps) cfg_run.warmup_steps = cfg_run.steps;
        const prco::RunArtifacts artifacts = prco::run_training(cfg_run);
        char line[160];
        std::snprintf(line, sizeof line, "%s,%d,%d,%d,%.6f,%.6f\n",
                      prco::algorithm_name(cfg_run.algorithm), go, gs, sweep_steps,
                      artifacts.step0_eval, artifacts.final_eval);
        csv << line;
      }
    }
  });
}

prco_status prco_instance_json(const prco_config* cfg, uint64_t seed, char** out) {
  if (!cfg || !out) return invalid_argument("prco_instance_json: NULL argument");
  return guarded([&] {
    const prco::TrainConfig train_cfg = prco::train_config_from_kv(cfg->kv);
    const prco::Instance inst = prco::generate_instance(seed, train_cfg.env);
    *out = copy_string(prco::instance_to_json(inst));
    if (!*out) throw std::bad_alloc();
  });
}

void prco_string_free(char* s) { std::free(s); }

}  // extern "C"
