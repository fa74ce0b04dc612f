#include "dualhead/cli.hpp"

#include "dualhead/checkpoint.hpp"
#include "dualhead/config.hpp"
#include "dualhead/csv.hpp"
#include "dualhead/error.hpp"
#include "dualhead/gradcheck_suite.hpp"
#include "dualhead/ops.hpp"
#include "dualhead/run_report.hpp"
#include "dualhead/trainer.hpp"
#include "dualhead/unicode.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>

namespace dualhead {

namespace {

struct RunSpec {
  std::string command;
  std::string task;
  std::string config_path;
  std::vector<std::string> overrides;
  std::map<std::string, std::string> flags;
  // tokenize / gradcheck extras
  std::string text;
  std::string corpus;
  std::string inject_fault;
};

RunConfig resolve_config(const RunSpec& spec) {
  RunConfig config;
  if (!spec.config_path.empty()) config.load_file(spec.config_path);
  for (const auto& [key, value] : spec.flags) config.set(key, value);
  for (const auto& item : spec.overrides) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + item + "'");
    config.set(item.substr(0, eq), item.substr(eq + 1));
  }
  return config;
}

Task required_task(const RunSpec& spec) {
  if (spec.task.empty()) throw ConfigError(spec.command + " requires --task A|B");
  return parse_task(spec.task);
}

const std::string& required_path(const RunConfig& config, const std::string& key) {
  const auto& value = config.get(key);
  if (value.empty()) throw ConfigError("missing required setting '" + key + "'");
  return value;
}

std::string format_double(double value) {
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%.17g", value);
  return buffer;
}

std::string label_or_index(const LabelVocab& vocab, int id) {
  return static_cast<std::size_t>(id) < vocab.size() ? vocab.label(id) : "class" + std::to_string(id);
}

struct LoadedRun {
  LoadedCheckpoint checkpoint;
  Vocab vocab;
};

LoadedRun load_run(const RunConfig& config, Task task) {
  LoadedRun run{load_checkpoint(config.path_or("checkpoint", "model.ckpt")),
                Vocab::load(config.path_or("vocab_path", "vocab.txt"))};
  if (run.checkpoint.model.task != task) {
    throw IntegrityError("checkpoint was trained for task " +
                         std::string(task_name(run.checkpoint.model.task)) + ", not task " +
                         std::string(task_name(task)));
  }
  if (vocab_hash(run.vocab.serialize()) != run.checkpoint.meta.vocab_hash) {
    throw IntegrityError("tokenizer vocabulary does not match the checkpoint");
  }
  return run;
}

int run_train(const RunSpec& spec, std::ostream& out) {
  const auto config = resolve_config(spec);
  const Task task = required_task(spec);
  const auto columns = config.columns(task);
  const auto train_config = config.train_config();
  const Dataset training = load_csv(required_path(config, "train_path"), task, columns);
  const Dataset validation = load_csv(required_path(config, "val_path"), task, columns, &training);

  std::vector<std::string> corpus;
  for (const auto& example : training.examples) corpus.push_back(example.text);
  const Vocab vocab = train_vocab(corpus, config.get_size("vocab_size"), config.get_size("min_freq"));

  const auto encoder_config = config.encoder_config(vocab.size());
  const auto classes = class_count(task);
  RngState init_rng(train_config.seed);
  DualHeadModel model = make_model(task, encoder_config,
                                   config.head_config(encoder_config.hidden, classes),
                                   config.head_config(encoder_config.hidden, classes), init_rng);

  std::filesystem::create_directories(config.get("out_dir"));
  const auto vocab_path = config.path_or("vocab_path", "vocab.txt");
  vocab.save(vocab_path);
  RunReportWriter report(config.path_or("report_path", "report.jsonl"));
  train(model, vocab, training, validation, train_config, [&](const EpochReport& epoch) {
    const auto line = to_json_line(epoch);
    out << line << '\n';
    out.flush();
    report.append(epoch);
  });

  CheckpointMeta meta;
  meta.labels_1 = training.labels_1;
  meta.labels_2 = training.labels_2;
  meta.vocab_hash = vocab_hash(vocab.serialize());
  meta.max_len = train_config.max_len;
  save_checkpoint(model, config.path_or("checkpoint", "model.ckpt"), meta);
  return kExitOk;
}

int run_eval(const RunSpec& spec, std::ostream& out) {
  const auto config = resolve_config(spec);
  const Task task = required_task(spec);
  const auto run = load_run(config, task);
  auto path = config.get("eval_path");
  if (path.empty()) path = required_path(config, "val_path");

  Dataset known;
  known.task = task;
  known.labels_1 = run.checkpoint.meta.labels_1;
  known.labels_2 = run.checkpoint.meta.labels_2;
  const Dataset data = load_csv(path, task, config.columns(task), &known);
  const auto metrics = evaluate(run.checkpoint.model, run.vocab, data, run.checkpoint.meta.max_len,
                                config.get_size("batch_size"));
  out << to_json_line(metrics) << '\n';
  return kExitOk;
}

int run_predict(const RunSpec& spec, std::ostream& out) {
  const auto config = resolve_config(spec);
  const Task task = required_task(spec);
  const auto run = load_run(config, task);
  const auto columns = config.columns(task);
  const auto examples = load_unlabeled_csv(required_path(config, "predict_path"), columns);

  std::vector<std::string> texts;
  for (const auto& example : examples) texts.push_back(example.text);
  const auto& model = run.checkpoint.model;
  const auto [probs_1, probs_2] = predict_probabilities(model, run.vocab, texts,
                                                        run.checkpoint.meta.max_len,
                                                        config.get_size("batch_size"));
  const auto& labels_1 = run.checkpoint.meta.labels_1;
  const auto& labels_2 = run.checkpoint.meta.labels_2;

  const auto output_path = config.path_or("predictions_path", "predictions.csv");
  if (const auto parent = std::filesystem::path(output_path).parent_path(); !parent.empty()) {
    std::filesystem::create_directories(parent);
  }
  std::ofstream file(output_path, std::ios::binary | std::ios::trunc);
  if (!file) throw DataError("cannot write predictions to " + output_path);
  std::vector<std::string> header{columns.id, columns.label_1, columns.label_2};
  for (Eigen::Index c = 0; c < probs_1.cols(); ++c) {
    header.push_back("p_" + columns.label_1 + "_" + label_or_index(labels_1, static_cast<int>(c)));
  }
  for (Eigen::Index c = 0; c < probs_2.cols(); ++c) {
    header.push_back("p_" + columns.label_2 + "_" + label_or_index(labels_2, static_cast<int>(c)));
  }
  write_csv_row(file, header);
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    Eigen::Index best_1 = 0;
    Eigen::Index best_2 = 0;
    probs_1.row(r).maxCoeff(&best_1);
    probs_2.row(r).maxCoeff(&best_2);
    std::vector<std::string> row{examples[i].id, label_or_index(labels_1, static_cast<int>(best_1)),
                                 label_or_index(labels_2, static_cast<int>(best_2))};
    for (Eigen::Index c = 0; c < probs_1.cols(); ++c) row.push_back(format_double(probs_1(r, c)));
    for (Eigen::Index c = 0; c < probs_2.cols(); ++c) row.push_back(format_double(probs_2(r, c)));
    write_csv_row(file, row);
  }
  out << "wrote " << examples.size() << " predictions to " << output_path << '\n';
  return kExitOk;
}

int run_gradcheck(const RunSpec& spec, std::ostream& out) {
  struct FaultGuard {
    ~FaultGuard() { fault::set_gelu_derivative_fault(false); }
  } guard;
  if (!spec.inject_fault.empty()) {
    if (spec.inject_fault != "gelu") throw ConfigError("unknown fault '" + spec.inject_fault + "'");
    fault::set_gelu_derivative_fault(true);
  }
  const auto result = run_gradient_suite();
  for (const auto& c : result.cases) {
    const auto& worst = c.report.worst();
    out << (c.report.passed ? "PASS " : "FAIL ") << c.name << " max_rel_err=" << format_double(c.report.max_rel_error)
        << " tol=" << format_double(c.report.tolerance);
    if (!c.report.passed) out << " worst=" << worst.name << '[' << worst.worst_index << ']';
    out << '\n';
  }
  out << (result.passed ? "gradient suite passed" : "gradient suite FAILED") << '\n';
  return result.passed ? kExitOk : kExitVerification;
}

int run_tokenize(const RunSpec& spec, std::ostream& out) {
  const auto config = resolve_config(spec);
  const auto vocab_path = config.path_or("vocab_path", "vocab.txt");
  if (!spec.corpus.empty()) {
    std::vector<std::string> lines;
    std::istringstream in(read_file(spec.corpus));
    for (std::string line; std::getline(in, line);) lines.push_back(line);
    const auto vocab = train_vocab(lines, config.get_size("vocab_size"), config.get_size("min_freq"));
    if (const auto parent = std::filesystem::path(vocab_path).parent_path(); !parent.empty()) {
      std::filesystem::create_directories(parent);
    }
    vocab.save(vocab_path);
    out << "trained vocabulary of " << vocab.size() << " tokens (" << vocab.merges().size()
        << " merges) -> " << vocab_path << '\n';
    return kExitOk;
  }
  if (spec.text.empty()) throw ConfigError("tokenize needs --text or --corpus");
  const auto vocab = Vocab::load(vocab_path);
  const auto ids = encode_example(vocab, spec.text, config.get_size("max_len"));
  nlohmann::ordered_json j;
  j["ids"] = ids;
  std::vector<std::string> tokens;
  for (int id : ids) tokens.push_back(vocab.token(id));
  j["tokens"] = tokens;
  j["decoded"] = decode(vocab, ids);
  out << j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace) << '\n';
  return kExitOk;
}

void add_run_options(CLI::App* command, RunSpec& spec, bool with_task) {
  if (with_task) command->add_option("--task", spec.task, "task profile: A (fake/hate) or B (target/severity)");
  command->add_option("--config", spec.config_path, "flat key = value config file");
  command->add_option("--set", spec.overrides, "override a config key (key=value), repeatable");
  for (const auto& key : config_keys()) {
    command->add_option_function<std::string>(
        "--" + key.name, [&spec, name = key.name](const std::string& value) { spec.flags[name] = value; },
        key.help);
  }
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Dual-head multi-task transformer classifier"};
  app.require_subcommand(1);
  RunSpec spec;

  auto* train_cmd = app.add_subcommand("train", "train a model and write checkpoint + epoch reports");
  add_run_options(train_cmd, spec, true);
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on labeled data");
  add_run_options(eval_cmd, spec, true);
  auto* predict_cmd = app.add_subcommand("predict", "write per-head predictions for unlabeled data");
  add_run_options(predict_cmd, spec, true);
  auto* gradcheck_cmd = app.add_subcommand("gradcheck", "run the finite-difference gradient suite");
  gradcheck_cmd->add_option("--inject-fault", spec.inject_fault, "test hook: corrupt a gradient rule (gelu)");
  auto* tokenize_cmd = app.add_subcommand("tokenize", "train a vocabulary or tokenize a text");
  add_run_options(tokenize_cmd, spec, false);
  tokenize_cmd->add_option("--text", spec.text, "text to encode with vocab_path");
  tokenize_cmd->add_option("--corpus", spec.corpus, "train vocab_path from this text file (one line per text)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }
  spec.command = app.get_subcommands().front()->get_name();

  try {
    if (spec.command == "train") return run_train(spec, out);
    if (spec.command == "eval") return run_eval(spec, out);
    if (spec.command == "predict") return run_predict(spec, out);
    if (spec.command == "gradcheck") return run_gradcheck(spec, out);
    return run_tokenize(spec, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
}

}  // namespace dualhead
