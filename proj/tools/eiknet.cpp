// Command-line front end: fmm, train, eval, ablate, plan, dump-field.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "eiknet/checkpoint.hpp"
#include "eiknet/config_file.hpp"
#include "eiknet/env_io.hpp"
#include "eiknet/error.hpp"
#include "eiknet/eval.hpp"
#include "eiknet/field_io.hpp"
#include "eiknet/fmm.hpp"
#include "eiknet/planner.hpp"
#include "eiknet/trainer.hpp"

namespace fs = std::filesystem;
using namespace eiknet;

namespace {

struct Globals {
  std::uint64_t seed = 0;
  bool seed_set = false;
  fs::path out = "out";
  fs::path config;
};

struct EnvArgs {
  fs::path file;
  double resolution = 0.0;
  double d_min = 0.0, d_max = 0.0;

  void add(CLI::App* app, bool required = true) {
    auto* o = app->add_option("--env", file, "Environment file (.txt/.map/.pgm/.arm)");
    if (required) o->required();
    app->add_option("--resolution", resolution, "Grid spacing override");
    app->add_option("--d-min", d_min, "Speed threshold d_min override");
    app->add_option("--d-max", d_max, "Speed threshold d_max override");
  }
  Environment load() const {
    EnvOptions o;
    if (resolution > 0) o.resolution = resolution;
    if (d_min > 0) o.d_min = d_min;
    if (d_max > 0) o.d_max = d_max;
    return load_environment(file, o);
  }
};

Config parse_config(const std::string& text, int dof, const char* what) {
  const auto v = parse_doubles(text);
  if (static_cast<int>(v.size()) != dof)
    throw Error(std::string(what) + " needs " + std::to_string(dof) + " coordinates");
  return Eigen::Map<const Config>(v.data(), dof);
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_field(const fs::path& dir, const std::string& stem, const GridField& f, const std::string& prov) {
  fs::create_directories(dir);
  write_file_atomic(dir / (stem + ".csv"), field_to_csv(f, prov));
  const PgmExport pgm = field_to_pgm16(f);
  write_file_atomic(dir / (stem + ".pgm"), pgm.pgm);
  write_file_atomic(dir / (stem + ".meta"), "# " + prov + "\n" + pgm.sidecar);
}

TravelTimeModel load_model_for(const fs::path& ck_path, const Environment& env) {
  const Checkpoint ck = load_checkpoint(ck_path);
  if (ck.config.dof != env.dof()) throw Error("checkpoint dof does not match the environment");
  if (!ck.lower.isApprox(env.lower()) || !ck.upper.isApprox(env.upper()))
    throw Error("checkpoint domain does not match the environment");
  return ck.model();
}

/// Training config file with the environment path resolved relative to it.
struct TrainSetup {
  KeyValueFile kv;
  fs::path env_file;
  EnvOptions env_opts;
};

TrainSetup read_train_setup(const fs::path& config) {
  TrainSetup s;
  s.kv = KeyValueFile::load(config);
  s.env_file = s.kv.get("env");
  if (s.env_file.is_relative()) s.env_file = config.parent_path() / s.env_file;
  if (s.kv.has("env.resolution")) s.env_opts.resolution = s.kv.get_double("env.resolution");
  if (s.kv.has("env.d_min")) s.env_opts.d_min = s.kv.get_double("env.d_min");
  if (s.kv.has("env.d_max")) s.env_opts.d_max = s.kv.get_double("env.d_max");
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Neural travel-time fields: Fast Marching oracle, training and planning"};
  app.require_subcommand(1);
  // Global options may also follow the subcommand.
  app.fallthrough();
  Globals g;
  app.add_option_function<std::uint64_t>(
         "--seed", [&](std::uint64_t v) { g.seed = v; g.seed_set = true; }, "Random seed")
      ->configurable(false);
  app.add_option("--out", g.out, "Output directory");
  app.add_option("--config", g.config, "Key-value config file");

  // fmm
  auto* fmm = app.add_subcommand("fmm", "Fast Marching travel times from a source");
  EnvArgs fmm_env;
  fmm_env.add(fmm);
  std::string fmm_source;
  fmm->add_option("--source", fmm_source, "Source configuration, e.g. 0.1,0.1")->required();

  // train
  auto* train_cmd = app.add_subcommand("train", "Train a travel-time model (needs --config)");
  int train_epochs = -1;
  train_cmd->add_option("--epochs", train_epochs, "Override train.epochs");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "MAE against Fast Marching and planner metrics");
  EnvArgs eval_env;
  eval_env.add(eval_cmd);
  fs::path eval_ck;
  std::string eval_source;
  std::size_t eval_pairs = 100;
  std::vector<std::uint64_t> eval_seeds;
  eval_cmd->add_option("--checkpoint", eval_ck, "Checkpoint file")->required();
  eval_cmd->add_option("--source", eval_source, "Oracle source for MAE (grid environments)");
  eval_cmd->add_option("--pairs", eval_pairs, "Random query pairs per seed");
  eval_cmd->add_option("--seeds", eval_seeds, "Query seeds")->delimiter(',');

  // ablate
  auto* ablate_cmd = app.add_subcommand("ablate", "Loss and head ablation (needs --config)");
  std::vector<std::uint64_t> ablate_seeds{0, 1, 2};
  std::string ablate_source;
  int ablate_epochs = -1;
  ablate_cmd->add_option("--seeds", ablate_seeds, "Training seeds")->delimiter(',');
  ablate_cmd->add_option("--source", ablate_source, "Oracle source (default: env.source key)");
  ablate_cmd->add_option("--epochs", ablate_epochs, "Override train.epochs");

  // plan
  auto* plan_cmd = app.add_subcommand("plan", "Plan a path over a trained field");
  EnvArgs plan_env;
  plan_env.add(plan_cmd);
  fs::path plan_ck;
  std::string plan_start, plan_goal, plan_method = "mpc";
  bool plan_dump = false;
  plan_cmd->add_option("--checkpoint", plan_ck, "Checkpoint file")->required();
  plan_cmd->add_option("--start", plan_start, "Start configuration")->required();
  plan_cmd->add_option("--goal", plan_goal, "Goal configuration")->required();
  plan_cmd->add_option("--method", plan_method, "mpc or gradient")->check(CLI::IsMember({"mpc", "gradient"}));
  plan_cmd->add_flag("--dump-field", plan_dump, "Also write T(., goal) on the grid");

  // dump-field
  auto* dump_cmd = app.add_subcommand("dump-field", "Write T(., goal) on the lattice");
  EnvArgs dump_env;
  dump_env.add(dump_cmd);
  fs::path dump_ck;
  std::string dump_goal;
  dump_cmd->add_option("--checkpoint", dump_ck, "Checkpoint file")->required();
  dump_cmd->add_option("--goal", dump_goal, "Goal configuration")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*fmm) {
      const Environment env = fmm_env.load();
      if (!env.is_grid()) throw Error("fmm needs a grid environment");
      const Config src = parse_config(fmm_source, env.dof(), "--source");
      const FmmSolution sol = fmm_solve(env, src);
      const std::string prov = provenance(read_file(fmm_env.file) + "source=" + fmm_source, g.seed);
      write_field(g.out, "travel_time", sol.travel_time, prov);
      std::cout << "wrote " << (g.out / "travel_time.csv").string() << "\n";
      return 0;
    }

    if (*train_cmd || *ablate_cmd) {
      if (g.config.empty()) throw CLI::RequiredError("--config");
      const TrainSetup setup = read_train_setup(g.config);
      const Environment env = load_environment(setup.env_file, setup.env_opts);
      TrainConfig cfg = TrainConfig::from_keys(setup.kv, env.dof());
      if (g.seed_set) cfg.seed = cfg.model.seed = g.seed;
      const int epochs_override = *train_cmd ? train_epochs : ablate_epochs;
      if (epochs_override >= 0) cfg.epochs = epochs_override;

      if (*train_cmd) {
        TrainOutput out;
        out.dir = g.out;
        out.extra_hyper["env"] = fs::absolute(setup.env_file).string();
        if (setup.kv.has("env.source")) out.extra_hyper["env.source"] = setup.kv.get("env.source");
        out.on_epoch = [](const EpochReport& r) {
          std::printf("epoch %ld  L_E %.6g  L_TD %.6g  L_N %.6g  total %.6g  %.1fs\n", r.epoch,
                      r.loss.eikonal, r.loss.td, r.loss.normal, r.loss.total, r.wall_time);
          std::fflush(stdout);
        };
        const TrainResult res = train(env, cfg, out);
        if (res.abort_reason) {
          std::cerr << "training aborted: " << *res.abort_reason << "\n"
                    << "last good checkpoint: " << res.checkpoint.string() << "\n";
          return 2;
        }
        std::cout << "checkpoint: " << res.checkpoint.string() << "\n";
        return 0;
      }

      const std::string src_text = !ablate_source.empty() ? ablate_source : setup.kv.get("env.source");
      AblationOptions opts;
      opts.seeds = ablate_seeds;
      opts.source = parse_config(src_text, env.dof(), "source");
      opts.dir = g.out;
      opts.on_run = [](const AblationRun& r) {
        std::printf("%-10s seed %llu  mae %.4f  (init %.4f)  %.0fs  %s\n", r.variant.c_str(),
                    static_cast<unsigned long long>(r.seed), r.mae, r.initial_mae, r.train_seconds,
                    r.status.c_str());
        std::fflush(stdout);
      };
      const AblationTable table = ablation_suite(env, cfg, opts);
      std::string csv = "# " + provenance(setup.kv.canonical(), cfg.seed) + "\n";
      csv += "variant,median_mae,runs,failures,triangle_violations\n";
      for (const auto& r : table.rows)
        csv += r.variant + "," + num(r.median_mae) + "," + std::to_string(r.runs) + "," +
               std::to_string(r.failures) + "," +
               (r.triangle_violations ? std::to_string(*r.triangle_violations) : std::string("")) + "\n";
      csv += "\nvariant,seed,status,mae,initial_mae,train_seconds\n";
      for (const auto& r : table.runs)
        csv += r.variant + "," + std::to_string(r.seed) + "," + r.status + "," + num(r.mae) + "," +
               num(r.initial_mae) + "," + num(r.train_seconds) + "\n";
      write_file_atomic(g.out / "ablation.csv", csv);
      std::cout << csv;
      return 0;
    }

    if (*eval_cmd) {
      const Environment env = eval_env.load();
      const TravelTimeModel model = load_model_for(eval_ck, env);
      const ModelField field(model);
      BenchmarkSpec spec;
      spec.env_file = eval_env.file;
      spec.n_pairs = eval_pairs;
      if (!eval_seeds.empty()) spec.seeds = eval_seeds;
      else if (g.seed_set) spec.seeds = {g.seed};
      spec.out_dir = g.out;
      spec.validate();

      MetricsTable total;
      std::vector<PlanResult> mpc_all, grad_all;
      MpcConfig mpc = default_mpc_config(env, field, spec.seeds.front());
      for (std::uint64_t seed : spec.seeds) {
        mpc.seed = seed * 1000003ULL;
        const auto pairs = random_free_pairs(env, spec.n_pairs, seed);
        auto cmp = compare_planners(env, field, pairs, mpc);
        mpc_all.insert(mpc_all.end(), cmp.mpc.begin(), cmp.mpc.end());
        grad_all.insert(grad_all.end(), cmp.gradient.begin(), cmp.gradient.end());
      }
      total.rows.push_back(summarize("mpc", mpc_all, env, mpc.sub_step));
      total.rows.push_back(summarize("gradient", grad_all, env, mpc.sub_step));
      total.goal_tolerance = mpc.goal_tolerance;
      if (env.is_grid()) {
        const Checkpoint ck = load_checkpoint(eval_ck);
        std::string src = eval_source;
        if (src.empty() && ck.hyper.count("env.source")) src = ck.hyper.at("env.source");
        if (!src.empty()) total.mae = model_mae(model, env, fmm_solve(env, parse_config(src, env.dof(), "source")));
      }
      fs::create_directories(g.out);
      const std::string csv = metrics_csv(total, provenance(read_file(eval_ck), spec.seeds.front()));
      write_file_atomic(g.out / "metrics.csv", csv);
      std::cout << csv;
      return 0;
    }

    if (*plan_cmd) {
      const Environment env = plan_env.load();
      const TravelTimeModel model = load_model_for(plan_ck, env);
      const ModelField field(model);
      const Config qs = parse_config(plan_start, env.dof(), "--start");
      const Config qg = parse_config(plan_goal, env.dof(), "--goal");
      const MpcConfig mpc = default_mpc_config(env, field, g.seed);
      const PlanResult r = plan_method == "mpc" ? mpc_plan(qs, qg, field, env, mpc)
                                                : gradient_plan(qs, qg, field, env, gradient_config_from(mpc));
      fs::create_directories(g.out);
      write_file_atomic(g.out / "plan.json", plan_to_json(r));
      write_file_atomic(g.out / "waypoints.csv", waypoints_csv(r.waypoints));
      if (plan_dump) {
        if (!env.is_grid()) throw Error("--dump-field needs a grid environment");
        write_field(g.out, "field", travel_time_grid(field, env.grid().shape, qg),
                    provenance(read_file(plan_ck) + plan_goal, g.seed));
      }
      std::cout << plan_to_json(r);
      return 0;
    }

    if (*dump_cmd) {
      const Environment env = dump_env.load();
      if (!env.is_grid()) throw Error("dump-field needs a grid environment");
      const TravelTimeModel model = load_model_for(dump_ck, env);
      const Config qg = parse_config(dump_goal, env.dof(), "--goal");
      write_field(g.out, "field", travel_time_grid(ModelField(model), env.grid().shape, qg),
                  provenance(read_file(dump_ck) + dump_goal, g.seed));
      std::cout << "wrote " << (g.out / "field.csv").string() << "\n";
      return 0;
    }
  } catch (const CLI::Error& e) {
    std::cerr << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
