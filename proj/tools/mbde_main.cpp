#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "mbde/experiment.hpp"
#include "mbde/io.hpp"
#include "mbde/rng.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitBudget = 3;
constexpr int kExitCertificate = 4;

struct CommonOpts {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  bool paper_scale = false;
};

void add_common(CLI::App* cmd, CommonOpts* o, bool config_required) {
  auto* opt = cmd->add_option("--config", o->config_path, "experiment config file");
  if (config_required) opt->required();
  cmd->add_option("--seed", o->seed, "override the master seed");
  cmd->add_option("--out", o->out, "override the output directory");
  cmd->add_flag("--paper-scale", o->paper_scale,
                "full-size training (10000 samples, 750 epochs)");
}

mbde::ExperimentConfig resolve(const CommonOpts& o) {
  mbde::ExperimentConfig cfg;
  if (!o.config_path.empty()) cfg = mbde::load_config(o.config_path);
  if (o.seed) cfg.seed = *o.seed;
  if (o.out) cfg.out_dir = *o.out;
  if (o.paper_scale && !cfg.paper_scale) {
    cfg.paper_scale = true;
    mbde::apply_paper_scale(cfg);
  }
  return cfg;
}

fs::path ensure_out_dir(const mbde::ExperimentConfig& cfg) {
  fs::path dir(cfg.out_dir);
  fs::create_directories(dir);
  return dir;
}

int cmd_train(const CommonOpts& o) {
  const auto cfg = resolve(o);
  const auto art = mbde::run_train(cfg);
  const fs::path dir = ensure_out_dir(cfg);
  mbde::write_json(mbde::to_json(art.model), dir / "model.json");
  mbde::write_text(art.manifest, dir / "manifest.ini");
  mbde::write_text(art.wla_csv, dir / "wla_history.csv");
  std::cout << "wrote " << (dir / "model.json").string() << " (eps=" << art.model.eps()
            << ", T=" << art.model.rounds() << ")\n";
  return kExitOk;
}

int cmd_sample(const CommonOpts& o, const std::string& model_path, std::uint64_t k,
               std::optional<double> eps_total) {
  const auto cfg = resolve(o);
  const auto model = mbde::model_from_json(mbde::read_json(model_path));
  const fs::path dir = ensure_out_dir(cfg);

  mbde::PrivacyLedger ledger;
  ledger.eps_per_sample = model.eps();
  const fs::path ledger_path = dir / "ledger.json";
  if (fs::exists(ledger_path)) {
    ledger = mbde::ledger_from_json(mbde::read_json(ledger_path));
    if (ledger.eps_per_sample != model.eps())
      throw mbde::ConfigError("ledger eps_per_sample does not match the model");
  }

  if (eps_total) {
    const double required =
        model.eps() * static_cast<double>(ledger.released + k);
    if (required > *eps_total) {
      std::cerr << "budget refused: releasing " << k << " more samples needs eps_total >= "
                << mbde::format_double(required) << " (configured "
                << mbde::format_double(*eps_total) << ")\n";
      return kExitBudget;
    }
  }

  mbde::McmcConfig mc = cfg.mcmc;
  mc.seed = mbde::derive_seed(cfg.seed, 0x5A);
  const auto [samples, diag] = mbde::mh_sample(
      [&model](const mbde::Point& x) { return model.unnormalized_log_density(x); },
      model.dim(), k, mc, &ledger);
  mbde::write_dataset_csv(samples, dir / "samples.csv");
  mbde::write_json(mbde::to_json(ledger), ledger_path);
  std::cout << "wrote " << (dir / "samples.csv").string() << " (" << samples.size()
            << " samples, acceptance " << diag.acceptance_rate << ", spent "
            << mbde::format_double(ledger.spent) << ")\n";
  return kExitOk;
}

int cmd_eval(const CommonOpts& o, const std::string& model_path) {
  const auto cfg = resolve(o);
  const auto model = mbde::model_from_json(mbde::read_json(model_path));
  const auto art = mbde::run_eval(model, cfg);
  const fs::path dir = ensure_out_dir(cfg);
  mbde::write_json(art.metrics, dir / "metrics.json");
  mbde::write_text(art.metrics_csv, dir / "metrics.csv");
  mbde::write_text(art.grid_csv, dir / "density_grid.csv");
  std::cout << "nll=" << art.nll_value.value << " kl=" << art.kl_value.value
            << " coverage=" << art.coverage << "\n";
  return kExitOk;
}

int cmd_certify(const CommonOpts& o, const std::string& model_path, std::uint64_t n) {
  const auto cfg = resolve(o);
  const auto model = mbde::model_from_json(mbde::read_json(model_path));
  const auto eval = mbde::certificate_eval_points(model.dim(), n,
                                                  mbde::derive_seed(cfg.seed, 0xCE));
  const auto cert = mbde::privacy_certificate(model, eval);
  std::cout << (cert.pass ? "PASS" : "FAIL") << " max|<theta,c> - phi| = "
            << mbde::format_double(cert.max_abs) << " vs bound "
            << mbde::format_double(cert.bound) << " (eps/2 + 3*phi_stderr)\n";
  return cert.pass ? kExitOk : kExitCertificate;
}

int cmd_theory(const CommonOpts& o) {
  const auto cfg = resolve(o);
  const auto art = mbde::run_theory(cfg);
  const fs::path dir = ensure_out_dir(cfg);
  mbde::write_json(art.report, dir / "theory_report.json");
  int pass = 0, fail = 0;
  for (const auto& r : art.report) (r.at("pass").get<bool>() ? pass : fail)++;
  std::cout << "theory checks: " << pass << " pass, " << fail << " fail -> "
            << (dir / "theory_report.json").string() << "\n";
  return art.exact_ok ? kExitOk : kExitCertificate;
}

int cmd_experiment(const CommonOpts& o) {
  const auto cfg = resolve(o);
  const auto art = mbde::run_experiment(cfg);
  const fs::path dir = ensure_out_dir(cfg);
  mbde::write_text(art.runs_csv, dir / "runs.csv");
  mbde::write_text(art.sweep_csv, dir / "sweep.csv");
  std::cout << "wrote " << (dir / "sweep.csv").string() << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mbde: mollified boosted density estimation"};
  app.require_subcommand(1);

  CommonOpts train_o, sample_o, eval_o, certify_o, theory_o, exp_o;
  std::string model_path;
  std::uint64_t k = 0;
  std::optional<double> eps_total;
  std::uint64_t certify_n = 100000;

  auto* train = app.add_subcommand("train", "train a model from a config");
  add_common(train, &train_o, true);

  auto* sample = app.add_subcommand("sample", "draw MH samples from a model");
  add_common(sample, &sample_o, false);
  sample->add_option("--model", model_path, "model JSON path")->required();
  sample->add_option("--k", k, "number of samples to release")->required();
  sample->add_option("--eps-total", eps_total, "refuse when k * model eps would exceed this");

  auto* eval = app.add_subcommand("eval", "evaluate a model against its target");
  add_common(eval, &eval_o, true);
  eval->add_option("--model", model_path, "model JSON path")->required();

  auto* certify = app.add_subcommand("certify", "run the privacy certificate");
  add_common(certify, &certify_o, false);
  certify->add_option("--model", model_path, "model JSON path")->required();
  certify->add_option("--n", certify_n, "evaluation points");

  auto* theory = app.add_subcommand("theory", "run the theory check suite");
  add_common(theory, &theory_o, false);

  auto* experiment = app.add_subcommand("experiment", "run a full eps sweep");
  add_common(experiment, &exp_o, true);

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) return cmd_train(train_o);
    if (sample->parsed()) return cmd_sample(sample_o, model_path, k, eps_total);
    if (eval->parsed()) return cmd_eval(eval_o, model_path);
    if (certify->parsed()) return cmd_certify(certify_o, model_path, certify_n);
    if (theory->parsed()) return cmd_theory(theory_o);
    if (experiment->parsed()) return cmd_experiment(exp_o);
  } catch (const mbde::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const mbde::BudgetError& e) {
    std::cerr << "budget refused: " << e.what() << "\n";
    return kExitBudget;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitOk;
}
