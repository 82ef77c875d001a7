#include "eiknet/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "eiknet/error.hpp"
#include "eiknet/field_io.hpp"
#include "eiknet/fmm.hpp"

namespace eiknet {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double median(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace

void TrainConfig::validate() const {
  model.validate();
  weights.validate();
  if (epochs < 0) throw Error("epochs must be non-negative");
  if (batch_size < 1 || steps_per_epoch < 1) throw Error("batch size and steps per epoch must be positive");
  if (checkpoint_every < 0) throw Error("checkpoint interval must be non-negative");
  if (!(adam.lr > 0.0)) throw Error("learning rate must be positive");
}

TrainConfig TrainConfig::from_keys(const KeyValueFile& kv, int dof) {
  TrainConfig c;
  c.model = ModelConfig::from_keys(kv, dof);
  const std::string preset = kv.get("loss.preset", "default");
  if (preset == "narrow") {
    c.weights = LossWeights::narrow_passage();
  } else if (preset != "default") {
    throw Error("unknown loss preset '" + preset + "'");
  }
  c.weights.lambda_e = kv.get_double("loss.lambda_e", c.weights.lambda_e);
  c.weights.lambda_td = kv.get_double("loss.lambda_td", c.weights.lambda_td);
  c.weights.lambda_n = kv.get_double("loss.lambda_n", c.weights.lambda_n);
  c.weights.lambda_c = kv.get_double("loss.lambda_c", c.weights.lambda_c);
  c.weights.dt = kv.get_double("loss.dt", c.weights.dt);
  c.adam.lr = kv.get_double("train.lr", c.adam.lr);
  c.epochs = static_cast<int>(kv.get_int("train.epochs", c.epochs));
  c.batch_size = static_cast<int>(kv.get_int("train.batch", c.batch_size));
  c.steps_per_epoch = static_cast<int>(kv.get_int("train.steps_per_epoch", c.steps_per_epoch));
  c.seed = static_cast<std::uint64_t>(kv.get_int("train.seed", 0));
  c.checkpoint_every = static_cast<int>(kv.get_int("train.checkpoint_every", c.checkpoint_every));
  c.model.seed = c.seed;
  c.validate();
  return c;
}

void TrainConfig::to_keys(KeyValueFile& kv) const {
  model.to_keys(kv);
  kv.set("loss.lambda_e", num(weights.lambda_e));
  kv.set("loss.lambda_td", num(weights.lambda_td));
  kv.set("loss.lambda_n", num(weights.lambda_n));
  kv.set("loss.lambda_c", num(weights.lambda_c));
  kv.set("loss.dt", num(weights.dt));
  kv.set("train.lr", num(adam.lr));
  kv.set("train.epochs", std::to_string(epochs));
  kv.set("train.batch", std::to_string(batch_size));
  kv.set("train.steps_per_epoch", std::to_string(steps_per_epoch));
  kv.set("train.seed", std::to_string(seed));
  kv.set("train.checkpoint_every", std::to_string(checkpoint_every));
}

std::string loss_csv_header() { return "epoch,L_E,L_TD,L_N,total,wall_time\n"; }

std::string loss_csv_row(const EpochReport& r) {
  return std::to_string(r.epoch) + "," + num(r.loss.eikonal) + "," + num(r.loss.td) + "," +
         num(r.loss.normal) + "," + num(r.loss.total) + "," + num(r.wall_time) + "\n";
}

std::uint64_t batch_seed(std::uint64_t seed, long epoch, int step) {
  // splitmix64 over the three inputs
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(seed) ^ static_cast<std::uint64_t>(epoch)) ^ static_cast<std::uint64_t>(step));
}

LossReport train_step(TravelTimeModel& model, ad::AdamState& state, const TrainBatch& batch,
                      const Environment& env, const TrainConfig& cfg) {
  ad::Tape tape(model.params());
  const Objective obj = record_objective(tape, model, batch, env, cfg.weights);
  tape.seal();
  const Eigen::VectorXd grad = tape.reverse_sweep(obj.loss);
  ad::adam_step(model.params(), grad, state, cfg.adam);
  return obj.report;
}

TrainResult train(const Environment& env, const TrainConfig& cfg_in, const TrainOutput& out) {
#if defined(__GLIBC__)
  // Step buffers are tens of MB and are reallocated every step; served by
  // fresh mmaps they page-fault on every touch.
  mallopt(M_MMAP_THRESHOLD, 32 << 20);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
#endif
  TrainConfig cfg = cfg_in;
  cfg.model.dof = env.dof();
  cfg.validate();
  TrainResult result{TravelTimeModel(cfg.model, env.lower(), env.upper()), {}, std::nullopt, {}};
  TravelTimeModel& model = result.model;
  ad::AdamState state(model.params().size());

  KeyValueFile hyper_kv;
  cfg.to_keys(hyper_kv);
  std::map<std::string, std::string> hyper;
  for (const auto& k : hyper_kv.keys()) hyper[k] = hyper_kv.get(k);
  for (const auto& [k, v] : out.extra_hyper) hyper[k] = v;

  std::ofstream csv;
  if (!out.dir.empty()) {
    std::filesystem::create_directories(out.dir);
    result.checkpoint = out.dir / "checkpoint.bin";
    csv.open(out.dir / "loss.csv", std::ios::trunc);
    if (!csv) throw Error("cannot write " + (out.dir / "loss.csv").string());
    csv << loss_csv_header() << std::flush;
  }
  auto save = [&](long epoch) {
    if (!out.dir.empty()) save_checkpoint(result.checkpoint, make_checkpoint(model, hyper, epoch));
  };

  const auto t0 = std::chrono::steady_clock::now();
  long done = 0;
  for (long epoch = 1; epoch <= cfg.epochs; ++epoch) {
    EpochReport rep;
    rep.epoch = epoch;
    try {
      for (int s = 0; s < cfg.steps_per_epoch; ++s) {
        const TrainBatch batch = sample_batch(env, cfg.batch_size, batch_seed(cfg.seed, epoch, s));
        const LossReport r = train_step(model, state, batch, env, cfg);
        rep.loss.eikonal += r.eikonal / cfg.steps_per_epoch;
        rep.loss.td += r.td / cfg.steps_per_epoch;
        rep.loss.normal += r.normal / cfg.steps_per_epoch;
        rep.loss.total += r.total / cfg.steps_per_epoch;
        rep.loss.normal_skipped += r.normal_skipped;
      }
    } catch (const Error& e) {
      // Steps throw before touching the parameters, so the model is the
      // last good state.
      result.abort_reason = e.what();
      save(done);
      return result;
    }
    done = epoch;
    rep.wall_time = seconds_since(t0);
    result.history.push_back(rep);
    if (csv.is_open()) csv << loss_csv_row(rep) << std::flush;
    if (out.on_epoch) out.on_epoch(rep);
    if (cfg.checkpoint_every > 0 && epoch % cfg.checkpoint_every == 0) save(epoch);
  }
  save(done);
  return result;
}

std::vector<AblationVariant> standard_ablation(const LossWeights& base) {
  std::vector<AblationVariant> v;
  v.push_back({"full", base, HeadKind::L1Linf});
  LossWeights w = base;
  w.lambda_e = 0.0;
  v.push_back({"-L_E", w, HeadKind::L1Linf});
  w = base;
  w.lambda_td = 0.0;
  v.push_back({"-L_TD", w, HeadKind::L1Linf});
  w = base;
  w.lambda_n = 0.0;
  v.push_back({"-L_N", w, HeadKind::L1Linf});
  w = base;
  w.lambda_c = 0.0;
  v.push_back({"-L_C", w, HeadKind::L1Linf});
  v.push_back({"factorized", base, HeadKind::Factorized});
  return v;
}

const AblationRow& AblationTable::row(const std::string& variant) const {
  for (const auto& r : rows)
    if (r.variant == variant) return r;
  throw Error("no ablation row '" + variant + "'");
}

double model_mae(const TravelTimeModel& model, const Environment& env, const FmmSolution& oracle) {
  const ModelField field(model);
  const GridField t = travel_time_grid(field, env.grid().shape, oracle.source);
  return mae_vs_oracle(t, oracle, free_mask(env.grid()));
}

AblationTable ablation_suite(const Environment& env, const TrainConfig& base, const AblationOptions& opts) {
  if (!env.is_grid()) throw Error("ablation needs a grid environment");
  if (opts.seeds.empty()) throw Error("ablation needs at least one seed");
  const FmmSolution oracle = fmm_solve(env, opts.source);
  const auto variants = opts.variants.empty() ? standard_ablation(base.weights) : opts.variants;
  std::vector<Config> free_points;
  if (opts.triangle_triples > 0) free_points = sample_free_configurations(env, 512, 0x7a11);

  AblationTable table;
  for (const auto& v : variants) {
    AblationRow row;
    row.variant = v.name;
    std::vector<double> maes;
    for (std::uint64_t seed : opts.seeds) {
      AblationRun run;
      run.variant = v.name;
      run.seed = seed;
      TrainConfig cfg = base;
      cfg.weights = v.weights;
      cfg.model.head = v.head;
      cfg.seed = seed;
      cfg.model.seed = seed;
      TrainOutput to;
      if (!opts.dir.empty()) to.dir = opts.dir / (v.name + "_seed" + std::to_string(seed));
      const auto t0 = std::chrono::steady_clock::now();
      try {
        {
          TrainConfig init = cfg;
          init.model.dof = env.dof();
          run.initial_mae = model_mae(TravelTimeModel(init.model, env.lower(), env.upper()), env, oracle);
        }
        TrainResult tr = train(env, cfg, to);
        run.train_seconds = seconds_since(t0);
        run.mae = model_mae(tr.model, env, oracle);
        if (v.head == HeadKind::Factorized && opts.triangle_triples > 0)
          run.triangle = check_triangle_inequality(ModelField(tr.model), free_points,
                                                   opts.triangle_triples, seed + 17, 1e-9);
        run.ok = !tr.abort_reason;
        run.status = tr.abort_reason.value_or("ok");
        if (run.ok) maes.push_back(run.mae);
        if (!opts.dir.empty()) {
          const GridField dump = travel_time_grid(ModelField(tr.model), env.grid().shape, oracle.source);
          write_file_atomic(to.dir / "field.csv", field_to_csv(dump));
        }
      } catch (const std::exception& e) {
        run.ok = false;
        run.status = e.what();
        run.train_seconds = seconds_since(t0);
      }
      if (!run.ok) ++row.failures;
      ++row.runs;
      if (run.triangle)
        row.triangle_violations = row.triangle_violations.value_or(0) + run.triangle->violations;
      if (opts.on_run) opts.on_run(run);
      table.runs.push_back(run);
    }
    row.median_mae = median(maes);
    table.rows.push_back(row);
  }
  return table;
}

}  // namespace eiknet
