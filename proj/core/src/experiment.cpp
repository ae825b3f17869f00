#include "dsn/experiment.hpp"

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "dsn/checkpoint.hpp"
#include "dsn/error.hpp"
#include "dsn/eval.hpp"
#include "dsn/gradcheck.hpp"
#include "dsn/io_util.hpp"
#include "dsn/prng.hpp"
#include "dsn/trainer.hpp"

namespace dsn {

namespace {

namespace fs = std::filesystem;

std::string checkpoint_path_of(const ExperimentConfig& cfg) {
  if (!cfg.checkpoint_path.empty()) return cfg.checkpoint_path;
  return cfg.out_dir + "/model.ckpt";
}

void ensure_out_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir + ": " + ec.message());
}

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void check_bundle_matches(const ModelBundle& bundle, const Dataset& ds) {
  auto mismatch = [](const char* what, int ckpt, int data) {
    throw ConfigError(std::string("checkpoint ") + what + " " +
                      std::to_string(ckpt) + " does not match dataset " + what +
                      " " + std::to_string(data));
  };
  if (bundle.obs.feature_dim() != ds.spec.feature_dim) {
    mismatch("feature_dim", bundle.obs.feature_dim(), ds.spec.feature_dim);
  }
  if (bundle.obs.clips_per_section() != ds.spec.clips_per_section) {
    mismatch("clips_per_section", bundle.obs.clips_per_section(),
             ds.spec.clips_per_section);
  }
  if (bundle.clf.num_classes() != ds.spec.num_classes) {
    mismatch("num_classes", bundle.clf.num_classes(), ds.spec.num_classes);
  }
}

std::vector<MetricsReport> run_reports(const ExperimentConfig& cfg,
                                       const Dataset& ds,
                                       const ModelBundle& bundle) {
  EvalOptions opts;
  opts.fuse_logits = cfg.fuse_logits;
  opts.oracle_fused = cfg.oracle_fused;
  const ClipClassifier* response =
      bundle.response ? &*bundle.response : nullptr;
  Prng base = Prng(cfg.seed).substream("eval");
  return sweep_M(ds.test, &bundle.obs, bundle.clf, response, cfg.m_test,
                 cfg.policies, opts, base);
}

std::string metrics_csv(const std::vector<MetricsReport>& rows,
                        std::uint64_t seed) {
  std::ostringstream out;
  out << "policy,M_test,N,top1,top5,map,cost_macs,clips_used,seed\n";
  for (const auto& r : rows) {
    out << r.policy << ',' << r.m_test << ',' << r.n << ','
        << format_double(r.top1) << ','
        << (r.top5_valid ? format_double(r.top5) : "na") << ','
        << (r.map_valid ? format_double(r.map) : "na") << ',' << r.cost_macs
        << ',' << r.clips_used << ',' << seed << '\n';
  }
  return out.str();
}

nlohmann::ordered_json metrics_json(const std::vector<MetricsReport>& rows,
                                    std::uint64_t seed) {
  nlohmann::ordered_json out;
  out["rows"] = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    nlohmann::ordered_json row;
    row["policy"] = r.policy;
    row["M_test"] = r.m_test;
    row["N"] = r.n;
    row["top1"] = r.top1;
    row["top5"] = r.top5_valid ? nlohmann::ordered_json(r.top5)
                               : nlohmann::ordered_json(nullptr);
    row["map"] = r.map_valid ? nlohmann::ordered_json(r.map)
                             : nlohmann::ordered_json(nullptr);
    row["cost_macs"] = r.cost_macs;
    row["clips_used"] = r.clips_used;
    row["seed"] = seed;
    out["rows"].push_back(std::move(row));
  }
  return out;
}

}  // namespace

int cmd_gen(const ExperimentConfig& cfg) {
  cfg.require_keys({"dataset_path"});
  Dataset ds = generate_dataset(cfg.data);
  std::string bytes = serialize_dataset(ds);
  fs::path parent = fs::path(cfg.dataset_path).parent_path();
  if (!parent.empty()) ensure_out_dir(parent.string());
  atomic_write_file(cfg.dataset_path, bytes);
  std::cout << "wrote " << cfg.dataset_path << ": " << ds.train.size()
            << " train + " << ds.test.size() << " test videos, hash "
            << hex64(fnv1a64(bytes)) << "\n";
  return kExitOk;
}

int cmd_train(const ExperimentConfig& cfg) {
  cfg.require_keys({"dataset_path", "out_dir"});
  Dataset ds = read_dataset(cfg.dataset_path);
  ensure_out_dir(cfg.out_dir);

  Prng root(cfg.seed);
  Prng obs_rng = root.substream("init/obs");
  Prng clf_rng = root.substream("init/clf");
  ObservationNet obs =
      ObservationNet::make(ds.spec.feature_dim, cfg.encoder_hidden,
                           cfg.embed_dim, ds.spec.clips_per_section, obs_rng);
  ClipClassifier clf = ClipClassifier::make(
      ds.spec.feature_dim, cfg.classifier_hidden, ds.spec.num_classes, clf_rng);

  auto pre_log = pretrain_classifier(ds, clf, cfg.train);
  if (!pre_log.empty()) {
    write_train_log_csv(cfg.out_dir + "/pretrain_log.csv", pre_log);
  }

  ClipClassifier response =
      train_max_response(ds, cfg.encoder_hidden, cfg.embed_dim, cfg.train);

  EpochCallback on_epoch = nullptr;
  if (cfg.checkpoint_every > 0) {
    int every = cfg.checkpoint_every;
    std::string dir = cfg.out_dir;
    const ClipClassifier* resp = &response;
    on_epoch = [every, dir, resp](const EpochStats& stats,
                                  const ObservationNet& o,
                                  const ClipClassifier& c) {
      if (stats.epoch % every != 0) return;
      ModelBundle snap{o, c, *resp};
      write_checkpoint(snap, dir + "/model_epoch_" +
                                 std::to_string(stats.epoch) + ".ckpt");
    };
  }

  auto log = train_dsn(ds, obs, clf, cfg.train, on_epoch);
  write_train_log_csv(cfg.out_dir + "/train_log.csv", log);

  ModelBundle bundle{std::move(obs), std::move(clf), std::move(response)};
  std::string ckpt = checkpoint_path_of(cfg);
  write_checkpoint(bundle, ckpt);

  std::cout << "trained " << cfg.train.epochs << " epochs ("
            << cfg.train.pretrain_epochs << " pretrain)";
  if (!log.empty()) {
    std::cout << ", final hit_rate " << format_double(log.back().hit_rate);
  }
  std::cout << ", checkpoint " << ckpt << "\n";
  return kExitOk;
}

int cmd_eval(const ExperimentConfig& cfg) {
  cfg.require_keys({"dataset_path", "out_dir"});
  Dataset ds = read_dataset(cfg.dataset_path);
  ModelBundle bundle = read_checkpoint(checkpoint_path_of(cfg));
  check_bundle_matches(bundle, ds);
  ensure_out_dir(cfg.out_dir);

  std::vector<MetricsReport> rows = run_reports(cfg, ds, bundle);
  atomic_write_file(cfg.out_dir + "/metrics.csv", metrics_csv(rows, cfg.seed));
  atomic_write_file(cfg.out_dir + "/summary.json",
                    metrics_json(rows, cfg.seed).dump(2) + "\n");
  dump_selections(ds.test, bundle.obs, cfg.out_dir + "/selections.csv");

  std::cout << "wrote " << cfg.out_dir << "/metrics.csv (" << rows.size()
            << " rows), summary.json, selections.csv\n";
  return kExitOk;
}

int cmd_sweep(const ExperimentConfig& cfg) {
  cfg.require_keys({"dataset_path", "out_dir"});
  Dataset ds = read_dataset(cfg.dataset_path);
  ModelBundle bundle = read_checkpoint(checkpoint_path_of(cfg));
  check_bundle_matches(bundle, ds);
  ensure_out_dir(cfg.out_dir);

  std::vector<MetricsReport> rows = run_reports(cfg, ds, bundle);
  atomic_write_file(cfg.out_dir + "/sweep.csv", metrics_csv(rows, cfg.seed));

  for (EvalPolicy policy : cfg.policies) {
    std::ostringstream dat;
    for (const auto& r : rows) {
      if (r.policy != policy_name(policy)) continue;
      dat << r.m_test << ' ' << format_double(r.top1) << '\n';
    }
    atomic_write_file(
        cfg.out_dir + "/sweep_" + std::string(policy_name(policy)) + ".dat",
        dat.str());
  }

  std::cout << "wrote " << cfg.out_dir << "/sweep.csv (" << rows.size()
            << " rows) and " << cfg.policies.size() << " .dat files\n";
  return kExitOk;
}

int cmd_gradcheck(std::uint64_t seed, bool corrupt) {
  std::vector<CheckResult> checks = run_gradient_checks(seed, 50, corrupt);
  std::vector<CheckResult> est = run_estimator_checks(seed);
  checks.insert(checks.end(), est.begin(), est.end());

  bool all_pass = true;
  std::printf("gradient and estimator checks (seed %llu)\n",
              static_cast<unsigned long long>(seed));
  for (const auto& c : checks) {
    std::printf("  %s %-32s value=%.3g tol=%.3g\n", c.pass ? "PASS" : "FAIL",
                c.name.c_str(), c.value, c.tolerance);
    all_pass = all_pass && c.pass;
  }
  return all_pass ? kExitOk : kExitCheckFailure;
}

int run_cli(int argc, const char* const* argv) {
  try {
    CLI::App app{"dsnlab: section-based clip selection on synthetic video"};
    app.require_subcommand(1);

    std::string config_path, checkpoint_path, out_dir;
    std::uint64_t seed = 0;
    int epochs = 0;
    bool fix_classifier = false;
    bool corrupt = false;

    struct SubOpts {
      CLI::App* sub = nullptr;
      CLI::Option* config = nullptr;
      CLI::Option* seed_opt = nullptr;
      CLI::Option* out = nullptr;
      CLI::Option* checkpoint = nullptr;
      CLI::Option* epochs_opt = nullptr;
      CLI::Option* fix = nullptr;
    };

    auto add_common = [&](CLI::App* sub, bool config_required) {
      SubOpts o;
      o.sub = sub;
      o.config = sub->add_option("--config", config_path, "experiment config file");
      if (config_required) o.config->required();
      o.seed_opt = sub->add_option("--seed", seed, "override the config seed");
      o.out = sub->add_option("--out", out_dir, "override out_dir");
      return o;
    };

    SubOpts gen = add_common(app.add_subcommand("gen", "generate a dataset"), true);
    SubOpts train = add_common(app.add_subcommand("train", "train the models"), true);
    train.epochs_opt = train.sub->add_option("--epochs", epochs, "override epochs");
    train.fix = train.sub->add_flag("--fix-classifier", fix_classifier,
                                    "freeze the classifier after pretraining");
    train.checkpoint = train.sub->add_option("--checkpoint", checkpoint_path,
                                             "checkpoint output path");
    SubOpts eval = add_common(app.add_subcommand("eval", "evaluate policies"), true);
    eval.checkpoint = eval.sub->add_option("--checkpoint", checkpoint_path,
                                           "checkpoint to evaluate");
    SubOpts sweep = add_common(
        app.add_subcommand("sweep", "evaluate across clip budgets"), true);
    sweep.checkpoint = sweep.sub->add_option("--checkpoint", checkpoint_path,
                                             "checkpoint to evaluate");
    SubOpts gradcheck = add_common(
        app.add_subcommand("gradcheck", "run gradient and estimator oracles"),
        false);
    gradcheck.sub->add_flag("--corrupt", corrupt,
                            "deliberately corrupt one gradient (negative control)");

    try {
      app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
      int code = app.exit(e);
      return code == 0 ? kExitOk : kExitConfigError;
    }

    auto finalize = [&](const SubOpts& o) {
      ExperimentConfig cfg = parse_config_file(config_path);
      if (o.seed_opt && o.seed_opt->count()) {
        cfg.seed = seed;
        cfg.data.seed = seed;
        cfg.train.seed = seed;
        cfg.present.insert("seed");
      }
      if (o.out && o.out->count()) {
        cfg.out_dir = out_dir;
        cfg.present.insert("out_dir");
      }
      if (o.checkpoint && o.checkpoint->count()) {
        cfg.checkpoint_path = checkpoint_path;
        cfg.present.insert("checkpoint_path");
      }
      if (o.epochs_opt && o.epochs_opt->count()) {
        if (epochs < 0) throw ConfigError("--epochs must be >= 0");
        cfg.train.epochs = epochs;
      }
      if (o.fix && o.fix->count()) cfg.train.fix_classifier = true;
      return cfg;
    };

    if (gen.sub->parsed()) return cmd_gen(finalize(gen));
    if (train.sub->parsed()) return cmd_train(finalize(train));
    if (eval.sub->parsed()) return cmd_eval(finalize(eval));
    if (sweep.sub->parsed()) return cmd_sweep(finalize(sweep));
    if (gradcheck.sub->parsed()) {
      std::uint64_t check_seed = kDefaultGradcheckSeed;
      if (gradcheck.config->count()) {
        check_seed = parse_config_file(config_path).seed;
      }
      if (gradcheck.seed_opt->count()) check_seed = seed;
      return cmd_gradcheck(check_seed, corrupt);
    }
    throw ConfigError("no command given");
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const FormatError& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return kExitIoError;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitIoError;
  } catch (const ContractViolation& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitCheckFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitCheckFailure;
  }
}

}  // namespace dsn
