#include "gatenet/cli/commands.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

#include "gatenet/error.hpp"

namespace gatenet::cli {

namespace fs = std::filesystem;

namespace {

std::string fixed(double v, int digits = 10) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << content;
}

std::string join_row(const RawRow& row, char delimiter) {
  std::string out;
  for (std::size_t i = 0; i < row.columns.size(); ++i) {
    if (i) out += delimiter;
    out += row.columns[i];
  }
  return out;
}

FieldSchema schema_for_rows(const DataConfig& config, const std::vector<RawRow>& rows) {
  if (!config.schema.empty()) return FieldSchema::parse(config.schema);
  if (rows.empty()) throw DataError("cannot infer a schema from an empty data file");
  if (rows.front().columns.size() < 2) {
    throw DataError("data rows need a label column and at least one field");
  }
  return FieldSchema::categorical(rows.front().columns.size() - 1);
}

std::vector<RawRow> pick(const std::vector<RawRow>& rows, const std::vector<std::size_t>& idx) {
  std::vector<RawRow> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(rows[i]);
  return out;
}

std::string eval_row(const EvalResult& r) {
  return (r.auc ? fixed(*r.auc) : std::string("undefined")) + "," + fixed(r.logloss) + "," +
         std::to_string(r.n_pos) + "," + std::to_string(r.n_neg);
}

struct LoadedModel {
  Model model;
  FieldSchema schema;
  Vocabulary vocab;
};

LoadedModel load_for_inference(const EvalRequest& request) {
  const Checkpoint ckpt = load_checkpoint(request.checkpoint);
  const FieldSchema schema = FieldSchema::parse(ckpt.schema);
  const std::string vocab_path = request.vocab.empty()
                                     ? (fs::path(request.checkpoint).parent_path() / kVocabFile).string()
                                     : request.vocab;
  Vocabulary vocab = Vocabulary::load_file(vocab_path, schema);
  if (vocab.cardinalities() != ckpt.cardinalities) {
    throw DataError("vocabulary '" + vocab_path + "' does not match the checkpoint's field cardinalities");
  }
  return LoadedModel{restore_model(ckpt), schema, std::move(vocab)};
}

Dataset load_eval_rows(const EvalRequest& request, const FieldSchema& schema,
                       const Vocabulary& vocab) {
  const auto rows = read_delimited_file(request.data, request.delimiter);
  for (const auto& row : rows) {
    if (row.columns.size() != schema.size() + 1) {
      throw DataError("schema mismatch: line " + std::to_string(row.line) + " of '" + request.data +
                      "' has " + std::to_string(row.columns.size()) +
                      " columns, the checkpoint schema (" + schema.to_string() + ") needs " +
                      std::to_string(schema.size() + 1));
    }
  }
  return encode_rows(rows, schema, vocab);
}

}  // namespace

PreparedData prepare_data(const DataConfig& config) {
  PreparedData out;
  if (config.source == "planted") {
    PlantedData planted = synthesize_planted(config.planted_fields, config.planted_signal,
                                             config.planted_n, config.seed, config.planted);
    out.schema = planted.schema;
    out.vocab = identity_vocabulary(planted.cardinalities);
    auto [train, test] = split(planted.data, config.train_fraction, config.seed);
    out.train = std::move(train);
    out.test = std::move(test);
    for (std::size_t r = 0; r < out.test.size(); ++r) {
      RawRow row;
      row.line = r + 1;
      row.columns.push_back(std::to_string(out.test.label(r)));
      for (std::size_t f = 0; f < out.test.num_fields(); ++f) {
        const auto idx = out.test.indices(r)[f];
        row.columns.push_back(idx == 0 ? std::string() : out.vocab.token(f, idx));
      }
      out.test_rows.push_back(std::move(row));
    }
    return out;
  }

  if (config.train_path.empty()) throw ConfigError("data.train is required when data.source = file");
  const auto rows = read_delimited_file(config.train_path, config.delimiter);
  out.schema = schema_for_rows(config, rows);
  std::vector<RawRow> train_rows;
  if (config.test_path.empty()) {
    const auto [train_idx, test_idx] = split_indices(rows.size(), config.train_fraction, config.seed);
    train_rows = pick(rows, train_idx);
    out.test_rows = pick(rows, test_idx);
  } else {
    train_rows = rows;
    out.test_rows = read_delimited_file(config.test_path, config.delimiter);
  }
  out.vocab = build_vocab(train_rows, out.schema, config.min_count);
  out.train = encode_rows(train_rows, out.schema, out.vocab);
  out.test = encode_rows(out.test_rows, out.schema, out.vocab);
  return out;
}

TrainReport cmd_train(const RunConfig& config, const std::string& out_dir, std::ostream& log) {
  const fs::path dir(out_dir);
  fs::create_directories(dir);
  const PreparedData data = prepare_data(config.data);
  const auto cardinalities = data.vocab.cardinalities();
  log << "train: " << config.model.label() << " on " << data.train.size() << " instances, "
      << data.test.size() << " held out, " << data.schema.size() << " fields\n";

  const TrainResult result =
      train(config.model, cardinalities, data.train, data.test, config.train,
            [&](const EpochReport& e) {
              log << "epoch " << e.epoch << " train_loss=" << fixed(e.train_loss, 6)
                  << " test_auc=" << (e.test_auc ? fixed(*e.test_auc, 6) : "undefined")
                  << " test_logloss=" << fixed(e.test_logloss, 6) << " (" << fixed(e.seconds, 2)
                  << "s)\n";
            });

  std::ostringstream report;
  result.report.write_csv(report, config.report_wall_time);
  write_file(dir / kReportFile, report.str());
  std::ostringstream timing;
  timing << "epoch,seconds\n";
  for (const auto& e : result.report.epochs) timing << e.epoch << ',' << fixed(e.seconds, 3) << '\n';
  write_file(dir / kTimingFile, timing.str());

  data.vocab.save_file((dir / kVocabFile).string(), data.schema);
  save_checkpoint(result.model, result.adam, data.schema.to_string(),
                  (dir / kCheckpointFile).string());
  std::string test_text;
  for (const auto& row : data.test_rows) test_text += join_row(row, config.data.delimiter) + "\n";
  write_file(dir / kTestFile, test_text);
  write_file(dir / kConfigFile, config.to_text());
  return result.report;
}

EvalResult cmd_eval(const EvalRequest& request, std::ostream& out) {
  const LoadedModel loaded = load_for_inference(request);
  const Dataset data = load_eval_rows(request, loaded.schema, loaded.vocab);
  const EvalResult result = evaluate(loaded.model, data);
  const std::string text = std::string("auc,logloss,n_pos,n_neg\n") + eval_row(result) + "\n";
  out << text;
  if (!result.auc) out << "auc undefined: evaluation labels contain a single class\n";
  if (!request.out_dir.empty()) {
    fs::create_directories(request.out_dir);
    write_file(fs::path(request.out_dir) / kEvalFile, text);
  }
  return result;
}

std::vector<double> cmd_predict(const EvalRequest& request, std::ostream& out) {
  const LoadedModel loaded = load_for_inference(request);
  const auto rows = read_delimited_file(request.data, request.delimiter);
  // Prediction input may omit the label column.
  Dataset data(loaded.schema.size());
  for (const auto& row : rows) {
    std::vector<std::string_view> cells;
    if (row.columns.size() == loaded.schema.size() + 1) {
      for (std::size_t i = 1; i < row.columns.size(); ++i) cells.push_back(row.columns[i]);
    } else if (row.columns.size() == loaded.schema.size()) {
      for (const auto& c : row.columns) cells.push_back(c);
    } else {
      throw DataError("schema mismatch: line " + std::to_string(row.line) + " has " +
                      std::to_string(row.columns.size()) + " columns");
    }
    EncodedInstance inst;
    for (std::size_t f = 0; f < cells.size(); ++f) {
      inst.indices.push_back(loaded.vocab.lookup(f, field_token(cells[f], loaded.schema[f])));
    }
    data.push_back(inst);
  }
  const auto probs = data.empty() ? std::vector<double>{} : predict_all(loaded.model, data);
  std::string text = "probability\n";
  for (double p : probs) text += fixed(p, 10) + "\n";
  if (!request.out_dir.empty()) {
    fs::create_directories(request.out_dir);
    write_file(fs::path(request.out_dir) / kPredictFile, text);
  } else {
    out << text;
  }
  return probs;
}

std::vector<GateConfig> all_gate_modes() {
  std::vector<GateConfig> modes;
  for (auto sharing : {GateSharing::kFieldPrivate, GateSharing::kFieldShared}) {
    for (auto gran : {GateGranularity::kVectorWise, GateGranularity::kBitWise}) {
      GateConfig g;
      g.sharing = sharing;
      g.granularity = gran;
      modes.push_back(g);
    }
  }
  return modes;
}

std::vector<ModelSpec> default_gradcheck_specs() {
  std::vector<ModelSpec> specs;
  for (const auto& g : all_gate_modes()) {
    specs.push_back(gradcheck::tiny_spec(Family::kFM, g, std::nullopt));
  }
  for (const auto& g : all_gate_modes()) {
    specs.push_back(gradcheck::tiny_spec(Family::kDNN, g, std::nullopt));
  }
  specs.push_back(gradcheck::tiny_spec(Family::kDNN, std::nullopt, HiddenGateConfig{}));
  for (const auto& g : all_gate_modes()) {
    specs.push_back(gradcheck::tiny_spec(Family::kDeepFM, g, HiddenGateConfig{}));
  }
  return specs;
}

std::vector<GradcheckCase> cmd_gradcheck(const GradcheckRequest& request, std::ostream& out) {
  std::vector<GradcheckCase> cases;
  for (const auto& spec : request.specs) {
    gradcheck::TinySetup setup = gradcheck::tiny_setup(spec, request.seed);
    GradcheckCase c;
    c.label = spec.label();
    if (spec.embed_gate) {
      c.label += std::string(" [") + std::string(to_string(spec.embed_gate->sharing)) + "/" +
                 std::string(to_string(spec.embed_gate->granularity)) + "]";
    }
    c.report = gradcheck::check_model(setup.model, setup.batch, request.options);
    out << "== " << c.label << " (model seed " << setup.seed << ") "
        << (c.report.passed() ? "PASS" : "FAIL") << "\n"
        << c.report.table() << "\n";
    cases.push_back(std::move(c));
  }
  return cases;
}

std::string AblationTable::render() const {
  std::size_t label_width = 5;
  for (const auto& r : rows) label_width = std::max(label_width, r.size());
  std::size_t col_width = 8;
  for (const auto& c : columns) col_width = std::max(col_width, c.size());
  std::ostringstream out;
  out << title << "\n";
  char buf[128];
  std::snprintf(buf, sizeof buf, "%-*s", static_cast<int>(label_width), "Model");
  out << buf;
  for (const auto& c : columns) {
    std::snprintf(buf, sizeof buf, "  %*s", static_cast<int>(col_width), c.c_str());
    out << buf;
  }
  out << "\n";
  for (std::size_t r = 0; r < rows.size(); ++r) {
    std::snprintf(buf, sizeof buf, "%-*s", static_cast<int>(label_width), rows[r].c_str());
    out << buf;
    for (std::size_t c = 0; c < columns.size(); ++c) {
      std::snprintf(buf, sizeof buf, "  %*.4f", static_cast<int>(col_width), mean_auc[r][c]);
      out << buf;
    }
    out << "\n";
  }
  return out.str();
}

namespace {

struct Cell {
  std::string row;
  std::string column;
  ModelSpec spec;
};

std::string activation_title(ops::Activation a) {
  std::string s(ops::to_string(a));
  s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

std::vector<Cell> ablation_cells(const RunConfig& config, const std::string& axis,
                                 std::string& title) {
  const ModelSpec& base = config.model;
  auto family_spec = [&](Family f) {
    ModelSpec s = base;
    s.family = f;
    s.embed_gate.reset();
    s.hidden_gate.reset();
    return s;
  };
  auto with_egate = [&](ModelSpec s) {
    s.embed_gate = config.embed_gate;
    return s;
  };
  auto with_hgate = [&](ModelSpec s) {
    s.hidden_gate = config.hidden_gate;
    return s;
  };
  std::vector<Cell> cells;
  if (axis == "sharing" || axis == "granularity") {
    const bool sharing = axis == "sharing";
    title = sharing ? "Embedding gate parameter sharing: field private vs field sharing"
                    : "Embedding gate granularity: vector-wise vs bit-wise";
    for (Family f : config.ablate.families) {
      for (int variant = 0; variant < 2; ++variant) {
        ModelSpec s = with_egate(family_spec(f));
        if (sharing) {
          s.embed_gate->sharing = variant == 0 ? GateSharing::kFieldPrivate : GateSharing::kFieldShared;
        } else {
          s.embed_gate->sharing = GateSharing::kFieldPrivate;
          s.embed_gate->granularity =
              variant == 0 ? GateGranularity::kVectorWise : GateGranularity::kBitWise;
        }
        const std::string column = sharing ? (variant == 0 ? "Private" : "Share")
                                           : (variant == 0 ? "vec-wise" : "bit-wise");
        cells.push_back({family_spec(f).label(), column, s});
      }
    }
  } else if (axis == "gate_activation") {
    title = "Gate activation functions";
    const Family f = config.ablate.tuning_family;
    for (int which = 0; which < 2; ++which) {
      for (auto act : config.ablate.activations) {
        ModelSpec s = which == 0 ? with_egate(family_spec(f)) : with_hgate(family_spec(f));
        if (which == 0) {
          s.embed_gate->activation = act;
        } else {
          s.hidden_gate->activation = act;
        }
        cells.push_back({s.label(), activation_title(act), s});
      }
    }
  } else if (axis == "embedding_size") {
    title = "Embedding sizes";
    const Family f = config.ablate.tuning_family;
    for (int gated = 0; gated < 2; ++gated) {
      for (auto k : config.ablate.embedding_sizes) {
        ModelSpec s = gated ? with_egate(family_spec(f)) : family_spec(f);
        s.k = k;
        cells.push_back({s.label(), std::to_string(k), s});
      }
    }
  } else if (axis == "depth") {
    title = "Number of hidden layers";
    const Family f = config.ablate.tuning_family;
    const std::size_t width = base.hidden_widths.empty() ? 400 : base.hidden_widths.front();
    for (int gated = 0; gated < 2; ++gated) {
      for (auto depth : config.ablate.depths) {
        ModelSpec s = gated ? with_hgate(family_spec(f)) : family_spec(f);
        s.hidden_widths.assign(depth, width);
        cells.push_back({s.label(), std::to_string(depth), s});
      }
    }
  } else if (axis == "gate_combo") {
    title = "Gate combinations";
    for (Family f : config.ablate.combo_families) {
      const ModelSpec plain = family_spec(f);
      cells.push_back({plain.label(), "Base", plain});
      cells.push_back({plain.label(), "EGate", with_egate(plain)});
      cells.push_back({plain.label(), "HGate", with_hgate(plain)});
      cells.push_back({plain.label(), "Both", with_hgate(with_egate(plain))});
    }
  } else {
    throw ConfigError("unknown ablation axis '" + axis + "'");
  }
  return cells;
}

}  // namespace

std::vector<AblationTable> cmd_ablate(const RunConfig& config, const std::string& out_dir,
                                      std::ostream& log) {
  const PreparedData data = prepare_data(config.data);
  const auto cardinalities = data.vocab.cardinalities();
  std::vector<AblationTable> tables;
  std::ostringstream csv;
  csv << "axis,model,column,mean_auc,mean_logloss,seeds,seed_aucs\n";

  for (const auto& axis : config.ablate.axes) {
    AblationTable table;
    table.axis = axis;
    const auto cells = ablation_cells(config, axis, table.title);
    for (const auto& cell : cells) {
      if (std::find(table.rows.begin(), table.rows.end(), cell.row) == table.rows.end()) {
        table.rows.push_back(cell.row);
      }
      if (std::find(table.columns.begin(), table.columns.end(), cell.column) == table.columns.end()) {
        table.columns.push_back(cell.column);
      }
    }
    const auto nan = std::numeric_limits<double>::quiet_NaN();
    table.mean_auc.assign(table.rows.size(), std::vector<double>(table.columns.size(), nan));
    table.mean_logloss = table.mean_auc;
    table.seed_auc.assign(table.rows.size(), std::vector<std::vector<double>>(table.columns.size()));

    for (const auto& cell : cells) {
      const auto r = static_cast<std::size_t>(
          std::find(table.rows.begin(), table.rows.end(), cell.row) - table.rows.begin());
      const auto c = static_cast<std::size_t>(
          std::find(table.columns.begin(), table.columns.end(), cell.column) - table.columns.begin());
      double auc_sum = 0.0;
      double loss_sum = 0.0;
      for (auto seed : config.ablate.seeds) {
        TrainConfig tc = config.train;
        tc.seed = seed;
        const TrainResult result = train(cell.spec, cardinalities, data.train, data.test, tc);
        double auc = nan;
        double loss = nan;
        if (!result.report.epochs.empty()) {
          const auto& last = result.report.epochs.back();
          auc = last.test_auc.value_or(nan);
          loss = last.test_logloss;
        }
        table.seed_auc[r][c].push_back(auc);
        auc_sum += auc;
        loss_sum += loss;
      }
      const double n = static_cast<double>(config.ablate.seeds.size());
      table.mean_auc[r][c] = auc_sum / n;
      table.mean_logloss[r][c] = loss_sum / n;
      log << "ablate " << axis << ": " << cell.spec.label() << " [" << cell.column
          << "] mean_auc=" << fixed(table.mean_auc[r][c], 4) << "\n";

      std::string seeds_text;
      std::string aucs_text;
      for (std::size_t i = 0; i < config.ablate.seeds.size(); ++i) {
        if (i) {
          seeds_text += ';';
          aucs_text += ';';
        }
        seeds_text += std::to_string(config.ablate.seeds[i]);
        aucs_text += fixed(table.seed_auc[r][c][i], 6);
      }
      csv << axis << ',' << cell.row << ',' << cell.column << ',' << fixed(table.mean_auc[r][c], 6)
          << ',' << fixed(table.mean_logloss[r][c], 6) << ',' << seeds_text << ',' << aucs_text
          << '\n';
    }
    tables.push_back(std::move(table));
  }

  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    write_file(fs::path(out_dir) / kAblationCsv, csv.str());
    std::string text;
    for (const auto& t : tables) text += t.render() + "\n";
    write_file(fs::path(out_dir) / kAblationTable, text);
    write_file(fs::path(out_dir) / kConfigFile, config.to_text());
  }
  return tables;
}

namespace {

std::optional<GateConfig> parse_gate_mode(const std::string& mode) {
  if (mode == "none") return std::nullopt;
  const auto dash = mode.find('-');
  if (dash == std::string::npos) {
    throw ConfigError("gate mode must be none or <private|shared>-<vector|bit>, got '" + mode + "'");
  }
  GateConfig g;
  g.sharing = parse_sharing(mode.substr(0, dash));
  g.granularity = parse_granularity(mode.substr(dash + 1));
  return g;
}

struct CommonFlags {
  std::string config_path;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  std::vector<std::string> sets;

  RunConfig load() const {
    std::vector<std::pair<std::string, std::string>> overrides;
    for (const auto& s : sets) overrides.push_back(parse_assignment(s));
    if (seed) overrides.emplace_back("train.seed", std::to_string(*seed));
    return load_config(config_path, overrides);
  }
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "Run configuration file");
  cmd->add_option("--out", flags.out_dir, "Output directory")->capture_default_str();
  cmd->add_option("--seed", flags.seed, "Training seed (overrides train.seed)");
  cmd->add_option("--set", flags.sets, "Override a config key: section.key=value");
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return kExitConfig;
  if (dynamic_cast<const NumericError*>(&e)) return kExitNumeric;
  return kExitData;
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"GateNet CTR toolkit: gated FM / DNN / DeepFM training and ablations"};
  app.require_subcommand(1);

  CommonFlags train_flags;
  auto* train_cmd = app.add_subcommand("train", "Train a model and write report, vocabulary, checkpoint");
  add_common(train_cmd, train_flags);

  CommonFlags eval_flags;
  EvalRequest eval_req;
  std::string eval_delim = "tab";
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on a labelled data file");
  add_common(eval_cmd, eval_flags);
  eval_cmd->add_option("--checkpoint", eval_req.checkpoint, "Checkpoint file")->required();
  eval_cmd->add_option("--data", eval_req.data, "Delimited data file, label first")->required();
  eval_cmd->add_option("--vocab", eval_req.vocab, "Vocabulary file (default: beside checkpoint)");
  eval_cmd->add_option("--delimiter", eval_delim, "tab, comma or one character")->capture_default_str();

  CommonFlags predict_flags;
  EvalRequest predict_req;
  std::string predict_delim = "tab";
  auto* predict_cmd = app.add_subcommand("predict", "Write click probabilities for a data file");
  add_common(predict_cmd, predict_flags);
  predict_cmd->add_option("--checkpoint", predict_req.checkpoint, "Checkpoint file")->required();
  predict_cmd->add_option("--data", predict_req.data, "Delimited data file")->required();
  predict_cmd->add_option("--vocab", predict_req.vocab, "Vocabulary file (default: beside checkpoint)");
  predict_cmd->add_option("--delimiter", predict_delim, "tab, comma or one character")->capture_default_str();

  CommonFlags grad_flags;
  std::vector<std::string> grad_families;
  std::vector<std::string> grad_modes;
  std::string grad_hgate;
  std::string corrupt;
  double step = 1e-5;
  double tolerance = 1e-4;
  auto* grad_cmd = app.add_subcommand("gradcheck", "Compare analytic and finite-difference gradients");
  add_common(grad_cmd, grad_flags);
  grad_cmd->add_option("--family", grad_families, "fm, dnn, deepfm (repeatable)");
  grad_cmd->add_option("--egate", grad_modes,
                       "none or <private|shared>-<vector|bit> (repeatable; default: all four)");
  grad_cmd->footer("Without --family/--egate/--hgate the 13-case default suite runs.");
  grad_cmd->add_option("--hgate", grad_hgate, "on/off for deep families (default off when selecting)");
  grad_cmd->add_option("--corrupt", corrupt, "Test hook: corrupt this tensor's analytic gradient");
  grad_cmd->add_option("--step", step, "Finite-difference step")->capture_default_str();
  grad_cmd->add_option("--tol", tolerance, "Relative error tolerance")->capture_default_str();

  CommonFlags ablate_flags;
  std::vector<std::string> axes;
  auto* ablate_cmd = app.add_subcommand("ablate", "Train one model per grid cell and tabulate AUC");
  add_common(ablate_cmd, ablate_flags);
  ablate_cmd->add_option("--axis", axes, "Ablation axis (repeatable; overrides ablate.axes)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitConfig;
  }

  auto delimiter = [](const std::string& text) {
    return parse_config("", {{"data.delimiter", text}}).data.delimiter;
  };

  try {
    if (train_cmd->parsed()) {
      cmd_train(train_flags.load(), train_flags.out_dir, std::cerr);
    } else if (eval_cmd->parsed()) {
      eval_req.delimiter = delimiter(eval_delim);
      eval_req.out_dir = eval_flags.out_dir;
      cmd_eval(eval_req, std::cout);
    } else if (predict_cmd->parsed()) {
      predict_req.delimiter = delimiter(predict_delim);
      predict_req.out_dir = predict_flags.out_dir;
      cmd_predict(predict_req, std::cout);
    } else if (grad_cmd->parsed()) {
      GradcheckRequest req;
      req.seed = grad_flags.seed.value_or(1);
      req.options.step = step;
      req.options.tolerance = tolerance;
      req.options.corrupt_tensor = corrupt;
      if (!grad_families.empty() || !grad_modes.empty() || !grad_hgate.empty()) {
        std::vector<Family> families{Family::kFM, Family::kDNN, Family::kDeepFM};
        if (!grad_families.empty()) {
          families.clear();
          for (const auto& f : grad_families) families.push_back(parse_family(f));
        }
        std::vector<std::optional<GateConfig>> modes;
        if (grad_modes.empty()) {
          for (const auto& g : all_gate_modes()) modes.push_back(g);
        } else {
          for (const auto& m : grad_modes) modes.push_back(parse_gate_mode(m));
        }
        if (grad_hgate.empty()) grad_hgate = "off";
        if (grad_hgate != "on" && grad_hgate != "off") {
          throw ConfigError("--hgate must be on or off, got '" + grad_hgate + "'");
        }
        req.specs.clear();
        for (Family f : families) {
          for (const auto& m : modes) {
            std::optional<HiddenGateConfig> h;
            if (f != Family::kFM && grad_hgate == "on") h = HiddenGateConfig{};
            req.specs.push_back(gradcheck::tiny_spec(f, m, h));
          }
        }
      }
      const auto cases = cmd_gradcheck(req, std::cout);
      for (const auto& c : cases) {
        if (!c.report.passed()) {
          std::cerr << "gradcheck failed: " << c.label << "\n";
          return kExitNumeric;
        }
      }
    } else if (ablate_cmd->parsed()) {
      RunConfig config = ablate_flags.load();
      if (!axes.empty()) {
        std::string joined;
        for (const auto& a : axes) joined += (joined.empty() ? "" : ",") + a;
        config.apply({{"ablate.axes", joined}});
      }
      const auto tables = cmd_ablate(config, ablate_flags.out_dir, std::cerr);
      for (const auto& t : tables) std::cout << t.render() << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
  return kExitOk;
}

}  // namespace gatenet::cli
