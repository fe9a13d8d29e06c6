// termcast: corpus generation, imbalance-aware training, ensemble
// evaluation and Shapley-based explanation for program termination
// prediction on a mini imperative language.
//
// Commands: gen | train | eval | explain. Machine output is JSON on
// stdout; human logs go to stderr. Exit codes: 0 ok, 2 invalid flags or
// unreadable inputs, 3 generation failure, 4 training abort, 5 ensemble
// membership violation, 6 too many tokens for exact attribution.

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "manifest.hpp"
#include "termcast/attribution.hpp"
#include "termcast/corpus.hpp"
#include "termcast/digest.hpp"
#include "termcast/metrics.hpp"
#include "termcast/minilang.hpp"
#include "termcast/model.hpp"
#include "termcast/training.hpp"

using json = nlohmann::json;
using namespace termcast;

namespace {

bool g_quiet = false;

void log_line(const std::string& message) {
  if (!g_quiet) std::cerr << message << '\n';
}

// --config <file> provides defaults; command-line flags override. The file
// is read before CLI parsing so flag defaults can be seeded from it.
json prescan_config(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    std::string arg = argv[i];
    std::string path;
    if (arg == "--config" && i + 1 < argc) path = argv[i + 1];
    else if (arg.rfind("--config=", 0) == 0) path = arg.substr(9);
    if (path.empty()) continue;
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read config file: " + path);
    json cfg = json::parse(in, nullptr, true, true);
    if (!cfg.is_object()) throw IoError("config file must hold a JSON object: " + path);
    return cfg;
  }
  return json::object();
}

template <class T>
void cfg_default(const json& cfg, const char* key, T& var) {
  if (cfg.contains(key)) var = cfg.at(key).get<T>();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write file: " + path);
  out << text;
}

struct LoadedEnsemble {
  std::vector<model::Model> members;
  std::vector<std::string> checkpoint_paths;
};

LoadedEnsemble load_models(const std::string& spec_path, const std::string& checkpoint_path) {
  LoadedEnsemble loaded;
  if (!spec_path.empty()) {
    const auto spec = metrics::load_ensemble_spec(spec_path);
    metrics::validate(spec);
    for (const auto& member : spec.members) {
      loaded.members.push_back(model::load_checkpoint(member.checkpoint));
      loaded.checkpoint_paths.push_back(member.checkpoint);
    }
  } else {
    loaded.members.push_back(model::load_checkpoint(checkpoint_path));
    loaded.checkpoint_paths.push_back(checkpoint_path);
  }
  return loaded;
}

struct GenArgs {
  int size = 2000;
  double ratio = 0.02;
  long long budget = 10000;
  std::uint64_t seed = 0;
  std::string out;
  std::string manifest;
};

int run_gen(const GenArgs& args, cli::ManifestBuilder& manifest) {
  if (!(args.ratio > 0.0) || !(args.ratio < 0.5)) {
    std::cerr << "error: minority_ratio must be < 0.5 (and > 0), got " << args.ratio << '\n';
    return 2;
  }
  if (args.size < 10) {
    std::cerr << "error: size must be >= 10\n";
    return 2;
  }
  const json resolved{{"size", args.size},
                      {"ratio", args.ratio},
                      {"budget", args.budget},
                      {"seed", args.seed},
                      {"out", args.out}};
  manifest.set_config_digest(resolved.dump());
  manifest.add_seed("seed", args.seed);

  log_line("generating corpus: size=" + std::to_string(args.size) +
           " ratio=" + std::to_string(args.ratio) + " budget=" + std::to_string(args.budget));
  const auto corpus_data = corpus::build_corpus(args.size, args.ratio, args.budget, args.seed);
  corpus::save_jsonl(corpus_data, args.out);
  manifest.add_output(args.out);

  const std::string manifest_path =
      args.manifest.empty() ? args.out + ".manifest.json" : args.manifest;
  manifest.write(manifest_path);
  std::cout << json{{"out", args.out},
                    {"n0", corpus_data.n0},
                    {"n1", corpus_data.n1},
                    {"budget", corpus_data.budget},
                    {"manifest", manifest_path}}
                   .dump()
            << '\n';
  return 0;
}

struct TrainArgs {
  std::string corpus_path;
  std::string val_path;
  double val_fraction = 0.2;
  std::string loss = "ce";
  double beta = 0.999;
  double gamma = 2.0;
  double margin_c = 0.5;
  double scale_s = 10.0;
  bool cas = false;
  training::TrainConfig train;
  model::ModelConfig model_config;
  std::uint64_t seed = 0;
  std::string out_prefix;
  std::string manifest;
};

json train_report_document(const TrainArgs& args, const training::TrainReport& report,
                           bool aborted) {
  training::TrainConfig echoed = args.train;
  json doc{{"config", json::parse(training::train_config_to_json(echoed))},
           {"model_config",
            {{"d_model", args.model_config.d_model},
             {"n_heads", args.model_config.n_heads},
             {"n_layers", args.model_config.n_layers},
             {"d_ff", args.model_config.d_ff},
             {"max_len", args.model_config.max_len},
             {"vocab_size", args.model_config.vocab_size},
             {"seed", args.model_config.seed}}},
           {"report", json::parse(training::report_to_json(report))},
           {"aborted", aborted}};
  return doc;
}

int run_train(TrainArgs& args, cli::ManifestBuilder& manifest) {
  args.train.loss.kind = imbalance::loss_kind_from_name(args.loss);
  args.train.loss.beta = args.beta;
  args.train.loss.gamma = args.gamma;
  args.train.loss.margin_c = args.margin_c;
  args.train.loss.scale_s = args.scale_s;
  args.train.use_cas = args.cas;
  args.train.seed = args.seed;
  args.model_config.seed = args.seed;

  manifest.set_config_digest(training::train_config_to_json(args.train));
  manifest.add_seed("seed", args.seed);
  manifest.add_input(args.corpus_path);

  const auto full = corpus::load_jsonl(args.corpus_path);
  corpus::Corpus train_set, val_set;
  if (!args.val_path.empty()) {
    manifest.add_input(args.val_path);
    train_set = full;
    val_set = corpus::load_jsonl(args.val_path);
  } else {
    auto pair = corpus::split(full, 1.0 - args.val_fraction, args.seed);
    train_set = std::move(pair.train);
    val_set = std::move(pair.test);
  }
  log_line("training on " + std::to_string(train_set.items.size()) + " items (" +
           std::to_string(train_set.n1) + " non-terminating), validating on " +
           std::to_string(val_set.items.size()));

  const std::string checkpoint_path = args.out_prefix + ".best.json";
  const std::string report_path = args.out_prefix + ".report.json";
  const std::string manifest_path =
      args.manifest.empty() ? args.out_prefix + ".manifest.json" : args.manifest;

  try {
    auto [best, report] =
        training::train(model::init_model(args.model_config), train_set, val_set, args.train);
    model::save_checkpoint(best, checkpoint_path);
    write_file(report_path, train_report_document(args, report, false).dump(2) + "\n");
    manifest.add_output(checkpoint_path);
    manifest.add_output(report_path);
    manifest.write(manifest_path);
    std::cout << json{{"checkpoint", checkpoint_path},
                      {"report", report_path},
                      {"best_check", report.best_check},
                      {"checks", report.history.size()},
                      {"stopped_early", report.stopped_early},
                      {"manifest", manifest_path}}
                     .dump()
              << '\n';
    return 0;
  } catch (const training::NonFiniteLossError& e) {
    std::cerr << "error: " << e.what() << '\n';
    write_file(report_path, train_report_document(args, e.partial_report(), true).dump(2) + "\n");
    manifest.add_output(report_path);
    manifest.write(manifest_path);
    return 4;
  }
}

struct EvalArgs {
  std::string spec_path;
  std::string checkpoint_path;
  std::string corpus_path;
  double threshold = 0.5;
  std::string out;
  std::string manifest = "eval.manifest.json";
};

int run_eval(const EvalArgs& args, cli::ManifestBuilder& manifest) {
  manifest.set_config_digest(json{{"spec", args.spec_path},
                                  {"checkpoint", args.checkpoint_path},
                                  {"corpus", args.corpus_path},
                                  {"threshold", args.threshold}}
                                 .dump());
  if (!args.spec_path.empty()) manifest.add_input(args.spec_path);
  manifest.add_input(args.corpus_path);

  const auto loaded = load_models(args.spec_path, args.checkpoint_path);
  for (const auto& path : loaded.checkpoint_paths) manifest.add_input(path);
  const auto data = corpus::load_jsonl(args.corpus_path);
  const auto report = metrics::evaluate(loaded.members, data, args.threshold);
  const std::string doc = metrics::eval_report_to_json(report);
  std::cout << doc << '\n';
  if (!args.out.empty()) {
    write_file(args.out, doc + "\n");
    manifest.add_output(args.out);
  }
  manifest.write(args.manifest);
  return 0;
}

struct ExplainArgs {
  std::string spec_path;
  std::string checkpoint_path;
  std::string program_path;
  std::string method = "sampled";
  long long permutations = 200;
  std::uint64_t seed = 0;
  std::string out_dot = "attribution.dot";
  std::string out_json = "attribution.json";
  std::string manifest;
};

int run_explain(const ExplainArgs& args, cli::ManifestBuilder& manifest) {
  if (args.method != "exact" && args.method != "sampled") {
    std::cerr << "error: --method must be exact or sampled\n";
    return 2;
  }
  manifest.set_config_digest(json{{"method", args.method},
                                  {"permutations", args.permutations},
                                  {"seed", args.seed}}
                                 .dump());
  manifest.add_seed("seed", args.seed);
  manifest.add_input(args.program_path);
  if (!args.spec_path.empty()) manifest.add_input(args.spec_path);

  const std::string source = read_file(args.program_path);
  const auto ast = minilang::parse(source);
  const auto seq = model::tokenize(source);
  const auto loaded = load_models(args.spec_path, args.checkpoint_path);
  for (const auto& path : loaded.checkpoint_paths) manifest.add_input(path);

  log_line("explaining " + std::to_string(seq.ids.size()) + " tokens with " +
           std::to_string(loaded.members.size()) + " member(s), method=" + args.method);

  std::vector<attribution::NodeAttribution> per_member;
  std::vector<double> member_probs;
  double base_mean = 0.0, full_mean = 0.0;
  for (const auto& member : loaded.members) {
    const auto scorer = attribution::model_scorer(member);
    attribution::TokenAttribution tokens =
        args.method == "exact"
            ? attribution::shapley_exact(scorer, seq.ids, {})
            : attribution::shapley_sampled(scorer, seq.ids, {}, args.permutations, args.seed);
    member_probs.push_back(tokens.full_value);
    base_mean += tokens.base_value;
    full_mean += tokens.full_value;
    per_member.push_back(attribution::map_tokens_to_ast(tokens, seq.spans, ast));
  }
  base_mean /= static_cast<double>(loaded.members.size());
  full_mean /= static_cast<double>(loaded.members.size());

  const auto unified = attribution::aggregate_models(per_member);
  write_file(args.out_dot, attribution::export_dot(ast, unified.phi_node));
  write_file(args.out_json,
             attribution::export_json(ast, unified.phi_node, base_mean, full_mean) + "\n");
  manifest.add_output(args.out_dot);
  manifest.add_output(args.out_json);
  const std::string manifest_path =
      args.manifest.empty() ? args.out_json + ".manifest.json" : args.manifest;
  manifest.write(manifest_path);

  const double prob = metrics::soft_vote(member_probs);
  std::cout << json{{"prob_nonterm", prob},
                    {"verdict", prob >= 0.5 ? "non-terminating" : "terminating"},
                    {"threshold", 0.5},
                    {"method", args.method},
                    {"n_tokens", seq.ids.size()},
                    {"n_members", loaded.members.size()},
                    {"dot", args.out_dot},
                    {"json", args.out_json}}
                   .dump()
            << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"transformer termination prediction workbench"};
  app.require_subcommand(1);

  json cfg;
  try {
    cfg = prescan_config(argc, argv);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }

  std::string config_path;  // consumed by the prescan; declared for --help
  GenArgs gen_args;
  TrainArgs train_args;
  EvalArgs eval_args;
  ExplainArgs explain_args;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_flag("--quiet", g_quiet, "suppress progress logs on stderr");
    cmd->add_option("--config", config_path, "JSON file with flag defaults");
  };

  CLI::App* gen = app.add_subcommand("gen", "generate a labeled corpus (JSONL)");
  cfg_default(cfg, "size", gen_args.size);
  cfg_default(cfg, "ratio", gen_args.ratio);
  cfg_default(cfg, "budget", gen_args.budget);
  cfg_default(cfg, "seed", gen_args.seed);
  gen->add_option("--size", gen_args.size, "number of programs");
  gen->add_option("--ratio", gen_args.ratio, "minority (non-terminating) fraction");
  gen->add_option("--budget", gen_args.budget, "interpreter step budget for labeling");
  gen->add_option("--seed", gen_args.seed, "master seed");
  gen->add_option("--out", gen_args.out, "output corpus path")->required();
  gen->add_option("--manifest", gen_args.manifest, "manifest path override");
  add_common(gen);

  CLI::App* train = app.add_subcommand("train", "train one classifier");
  cfg_default(cfg, "lr", train_args.train.lr);
  cfg_default(cfg, "weight_decay", train_args.train.weight_decay);
  cfg_default(cfg, "batch_size", train_args.train.batch_size);
  cfg_default(cfg, "max_epochs", train_args.train.max_epochs);
  cfg_default(cfg, "patience", train_args.train.patience);
  cfg_default(cfg, "checks_per_epoch", train_args.train.checks_per_epoch);
  cfg_default(cfg, "min_minority", train_args.train.min_minority);
  cfg_default(cfg, "loss", train_args.loss);
  cfg_default(cfg, "beta", train_args.beta);
  cfg_default(cfg, "gamma", train_args.gamma);
  cfg_default(cfg, "margin_c", train_args.margin_c);
  cfg_default(cfg, "scale_s", train_args.scale_s);
  cfg_default(cfg, "use_cas", train_args.cas);
  cfg_default(cfg, "d_model", train_args.model_config.d_model);
  cfg_default(cfg, "n_heads", train_args.model_config.n_heads);
  cfg_default(cfg, "n_layers", train_args.model_config.n_layers);
  cfg_default(cfg, "d_ff", train_args.model_config.d_ff);
  cfg_default(cfg, "max_len", train_args.model_config.max_len);
  cfg_default(cfg, "seed", train_args.seed);
  cfg_default(cfg, "val_fraction", train_args.val_fraction);
  train->add_option("--corpus", train_args.corpus_path, "training corpus (JSONL)")->required();
  train->add_option("--val", train_args.val_path,
                    "validation corpus; when absent a stratified slice of --corpus is used");
  train->add_option("--val-fraction", train_args.val_fraction,
                    "validation fraction for the internal split");
  train->add_option("--loss", train_args.loss, "ce | bce_effnum | focal | ldam");
  train->add_option("--beta", train_args.beta, "effective-number beta");
  train->add_option("--gamma", train_args.gamma, "focal gamma");
  train->add_option("--margin-c", train_args.margin_c, "LDAM margin constant");
  train->add_option("--scale-s", train_args.scale_s, "LDAM logit scale");
  train->add_flag("--cas", train_args.cas, "class-aware sampling");
  train->add_option("--min-minority", train_args.train.min_minority,
                    "minority items guaranteed per batch");
  train->add_option("--lr", train_args.train.lr, "learning rate");
  train->add_option("--weight-decay", train_args.train.weight_decay, "AdamW weight decay");
  train->add_option("--batch-size", train_args.train.batch_size, "mini-batch size");
  train->add_option("--max-epochs", train_args.train.max_epochs, "epoch budget");
  train->add_option("--patience", train_args.train.patience,
                    "non-improving validation checks before stopping");
  train->add_option("--checks-per-epoch", train_args.train.checks_per_epoch,
                    "validation checks per epoch");
  train->add_option("--d-model", train_args.model_config.d_model, "model width");
  train->add_option("--n-heads", train_args.model_config.n_heads, "attention heads");
  train->add_option("--n-layers", train_args.model_config.n_layers, "encoder layers");
  train->add_option("--d-ff", train_args.model_config.d_ff, "feed-forward width");
  train->add_option("--max-len", train_args.model_config.max_len, "maximum sequence length");
  train->add_option("--seed", train_args.seed, "training and init seed");
  train->add_option("--out", train_args.out_prefix, "output prefix")->required();
  train->add_option("--manifest", train_args.manifest, "manifest path override");
  add_common(train);

  CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint or ensemble");
  eval->add_option("--spec", eval_args.spec_path, "ensemble spec (JSON)");
  eval->add_option("--checkpoint", eval_args.checkpoint_path, "single model checkpoint");
  eval->add_option("--corpus", eval_args.corpus_path, "evaluation corpus")->required();
  eval->add_option("--threshold", eval_args.threshold, "decision threshold");
  eval->add_option("--out", eval_args.out, "also write the report here");
  eval->add_option("--manifest", eval_args.manifest, "manifest path");
  add_common(eval);

  CLI::App* explain = app.add_subcommand("explain", "attribute a prediction onto the AST");
  cfg_default(cfg, "permutations", explain_args.permutations);
  explain->add_option("--spec", explain_args.spec_path, "ensemble spec (JSON)");
  explain->add_option("--checkpoint", explain_args.checkpoint_path, "single model checkpoint");
  explain->add_option("--program", explain_args.program_path, "program source file")->required();
  explain->add_option("--method", explain_args.method, "exact | sampled");
  explain->add_option("--permutations", explain_args.permutations,
                      "permutations for the sampled estimator");
  explain->add_option("--seed", explain_args.seed, "sampling seed");
  explain->add_option("--out-dot", explain_args.out_dot, "DOT output path");
  explain->add_option("--out-json", explain_args.out_json, "JSON output path");
  explain->add_option("--manifest", explain_args.manifest, "manifest path override");
  add_common(explain);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }

  for (CLI::App* cmd : {eval, explain}) {
    if (cmd->parsed()) {
      const bool has_spec = cmd == eval ? !eval_args.spec_path.empty()
                                        : !explain_args.spec_path.empty();
      const bool has_checkpoint = cmd == eval ? !eval_args.checkpoint_path.empty()
                                              : !explain_args.checkpoint_path.empty();
      if (has_spec == has_checkpoint) {
        std::cerr << "error: provide exactly one of --spec or --checkpoint\n";
        return 2;
      }
    }
  }

  cli::ManifestBuilder manifest(argc, argv);
  try {
    if (gen->parsed()) return run_gen(gen_args, manifest);
    if (train->parsed()) return run_train(train_args, manifest);
    if (eval->parsed()) return run_eval(eval_args, manifest);
    if (explain->parsed()) return run_explain(explain_args, manifest);
  } catch (const GenerationMismatchError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const EnsembleSpecError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 5;
  } catch (const TooManyTokensError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 6;
  } catch (const minilang::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
